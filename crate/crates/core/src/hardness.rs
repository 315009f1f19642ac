//! Satisfiability gadget: encodes an exactly-twice 3-CNF formula as an
//! assignment problem in which the manipulating agent reaches a target
//! expected utility by a prescribed (partial) report if and only if the
//! underlying truth assignment satisfies the formula.
//!
//! The encoding builds 18 structurally identical "parts". Each part contains
//! one marker agent (the manipulator itself for part 1, a dummy agent for the
//! others) plus two copy agents per literal, and one house per round/literal
//! pair plus a triplet of houses per clause. The parts share `n-1` slowdown
//! houses that keep the 18 marker agents synchronised between rounds. Part 1
//! additionally carries a prize house wanted by the manipulator; every other
//! part ends in its own consolation house instead.
//!
//! During simultaneous eating the manipulator walks through the rounds in
//! lockstep with the dummies, spending exactly 1/2 per round, and reaches the
//! prize at a fixed time. Copy agents of the literals the manipulator chose
//! (the literals made true) run 1/9 ahead by then; the rest arrive exactly on
//! time. A clause triplet therefore finishes early in proportion to how many
//! of its slots are falsified, and the first finished triplet ends the
//! manipulator's solo time on the prize. Satisfying assignments keep every
//! triplet slow and leave the manipulator at least 25/27 of the prize;
//! falsified clauses cap the share at 11/12, which the target utility turns
//! into a clean yes/no separation.
//!
//! House identifiers place part 1's clause houses and the prize at the very
//! end of the global order. Agents that finish their listed houses early then
//! chew through every other remaining house first, and a counting argument
//! over total eating speed shows they cannot reach the prize region before
//! the separation above is decided.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{
    eu_value, AgentId, AssignmentProblem, HouseId, UtilityFunction,
};
use crate::ps::{ps_with_report, ps_with_report_and_observer};
use crate::rational::{format_rational, int, rat, Rational};

/// Number of structurally identical parts (one distinguished, 17 mirrored).
pub const PARTS: usize = 18;

/// A literal: a variable index together with a polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Lit {
    pub var: usize,
    pub positive: bool,
}

impl Lit {
    /// The positive literal of `var`.
    pub fn pos(var: usize) -> Self {
        Lit { var, positive: true }
    }

    /// The negative literal of `var`.
    pub fn neg(var: usize) -> Self {
        Lit { var, positive: false }
    }

    /// The same variable with the opposite polarity.
    pub fn negated(self) -> Self {
        Lit { var: self.var, positive: !self.positive }
    }

    /// Dense index 0..2n: positive literals on even slots.
    pub fn index(self) -> usize {
        2 * self.var + usize::from(!self.positive)
    }

    /// Inverse of [`Lit::index`].
    pub fn from_index(i: usize) -> Self {
        Lit { var: i / 2, positive: i % 2 == 0 }
    }

    /// Whether the literal holds under the given assignment.
    pub fn holds(self, assignment: &[bool]) -> bool {
        assignment[self.var] == self.positive
    }
}

impl std::fmt::Display for Lit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.positive {
            write!(f, "x{}", self.var + 1)
        } else {
            write!(f, "nx{}", self.var + 1)
        }
    }
}

/// A 3-CNF clause.
pub type Clause = [Lit; 3];

/// A 3-CNF formula in which every variable occurs exactly twice positively
/// and exactly twice negatively. Such formulas have `4n/3` clauses, so the
/// variable count is always a multiple of three. Clauses may repeat a
/// variable; the encoding below stays sound either way.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreeSatFormula {
    n_vars: usize,
    clauses: Vec<Clause>,
}

impl ThreeSatFormula {
    /// Validates the exactly-twice occurrence pattern.
    pub fn new(n_vars: usize, clauses: Vec<Clause>) -> Result<Self> {
        if n_vars == 0 {
            return Err(Error::Input("formula needs at least one variable".into()));
        }
        let mut counts = vec![[0usize; 2]; n_vars];
        for clause in &clauses {
            for lit in clause {
                if lit.var >= n_vars {
                    return Err(Error::Input(format!(
                        "literal {lit} out of range for {n_vars} variables"
                    )));
                }
                counts[lit.var][usize::from(!lit.positive)] += 1;
            }
        }
        for (v, c) in counts.iter().enumerate() {
            if c != &[2, 2] {
                return Err(Error::Input(format!(
                    "variable x{} occurs {} times positively and {} negatively \
                     (need exactly 2 and 2)",
                    v + 1,
                    c[0],
                    c[1]
                )));
            }
        }
        Ok(Self { n_vars, clauses })
    }

    /// Number of variables.
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// The clauses, in input order.
    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Whether `assignment` (one bool per variable) satisfies every clause.
    pub fn satisfies(&self, assignment: &[bool]) -> bool {
        assert_eq!(assignment.len(), self.n_vars, "assignment length");
        self.clauses
            .iter()
            .all(|clause| clause.iter().any(|lit| lit.holds(assignment)))
    }

    /// First satisfying assignment in truth-table order (variable 0 toggling
    /// fastest), or `None`. Exponential sweep; guarded for small instances.
    pub fn satisfying_assignment(&self) -> Option<Vec<bool>> {
        assert!(self.n_vars <= 24, "truth-table sweep limited to 24 variables");
        (0u64..1 << self.n_vars)
            .map(|bits| {
                (0..self.n_vars).map(|v| bits >> v & 1 == 1).collect::<Vec<_>>()
            })
            .find(|a| self.satisfies(a))
    }

    /// Parses the conventional DIMACS CNF format: optional `c` comment lines,
    /// a `p cnf <vars> <clauses>` header, then whitespace-separated literals
    /// with `0` terminating each (three-literal) clause. A line consisting of
    /// `%` ends the input.
    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut literals: Vec<i64> = Vec::new();
        'lines: for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if line == "%" {
                break;
            }
            if let Some(rest) = line.strip_prefix('p') {
                let tokens: Vec<&str> = rest.split_whitespace().collect();
                if tokens.len() != 3 || tokens[0] != "cnf" {
                    return Err(Error::Parse(format!("bad header line {line:?}")));
                }
                let vars = tokens[1]
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad variable count: {e}")))?;
                let clauses = tokens[2]
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad clause count: {e}")))?;
                header = Some((vars, clauses));
                continue;
            }
            for token in line.split_whitespace() {
                if token == "%" {
                    break 'lines;
                }
                literals.push(
                    token
                        .parse()
                        .map_err(|e| Error::Parse(format!("bad literal {token:?}: {e}")))?,
                );
            }
        }
        let (n_vars, n_clauses) =
            header.ok_or_else(|| Error::Parse("missing `p cnf` header".into()))?;
        let mut clauses: Vec<Clause> = Vec::new();
        let mut current: Vec<Lit> = Vec::new();
        for v in literals {
            if v == 0 {
                let c: Clause = current
                    .as_slice()
                    .try_into()
                    .map_err(|_| {
                        Error::Parse(format!(
                            "clause {} has {} literals (need exactly 3)",
                            clauses.len() + 1,
                            current.len()
                        ))
                    })?;
                clauses.push(c);
                current.clear();
            } else {
                let var = v.unsigned_abs() as usize - 1;
                if var >= n_vars {
                    return Err(Error::Parse(format!(
                        "literal {v} out of range for {n_vars} variables"
                    )));
                }
                current.push(Lit { var, positive: v > 0 });
            }
        }
        if !current.is_empty() {
            return Err(Error::Parse("unterminated final clause".into()));
        }
        if clauses.len() != n_clauses {
            return Err(Error::Parse(format!(
                "header promised {n_clauses} clauses, found {}",
                clauses.len()
            )));
        }
        Self::new(n_vars, clauses)
    }

    /// Serializes to DIMACS CNF (inverse of [`ThreeSatFormula::parse_dimacs`]).
    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.n_vars, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause {
                let v = lit.var as i64 + 1;
                out.push_str(&format!("{} ", if lit.positive { v } else { -v }));
            }
            out.push_str("0\n");
        }
        out
    }

    /// Draws a uniformly random exactly-twice formula: the `4n` literal
    /// occurrences are shuffled and chopped into triples. Clauses may repeat
    /// or cancel variables; that is allowed by [`ThreeSatFormula::new`].
    pub fn random_exactly_twice<R: Rng + ?Sized>(n_vars: usize, rng: &mut R) -> Result<Self> {
        if n_vars == 0 || n_vars % 3 != 0 {
            return Err(Error::Input(format!(
                "variable count must be a positive multiple of 3 \
                 (got {n_vars}); otherwise 4n/3 clauses cannot be formed"
            )));
        }
        let mut slots: Vec<Lit> = (0..n_vars)
            .flat_map(|v| [Lit::pos(v), Lit::pos(v), Lit::neg(v), Lit::neg(v)])
            .collect();
        slots.shuffle(rng);
        let clauses = slots
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect();
        Self::new(n_vars, clauses)
    }
}

/// Tuning knobs for the encoding.
///
/// `alpha` controls the geometric gap between round-house utilities so that
/// no deviation from the prescribed schedule can pay for itself; `eps` is the
/// bonus on each negated round house that makes the prescribed expected
/// utility depend (slightly) on the chosen assignment. Any `eps < 1/(36n)`
/// keeps the assignment-dependent slack below the separation between the
/// satisfying and non-satisfying prize shares.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionParams {
    pub alpha: u64,
    pub eps: Rational,
}

impl ReductionParams {
    /// Defaults for a formula over `n_vars` variables: `alpha = 4` and the
    /// largest power of two strictly below both `1/36n` and `1/4^n`.
    pub fn defaults(n_vars: usize) -> Self {
        let bound = (36 * n_vars as u64).ilog2() + 1;
        let k = (2 * n_vars as u32).max(bound);
        ReductionParams {
            alpha: 4,
            eps: Rational::new(BigInt::one(), BigInt::one() << k),
        }
    }

    /// Utility assigned to every house outside the manipulator's head, small
    /// enough that all of them together cannot matter: `1/(alpha^2 h^2)`.
    pub fn negligible(&self, n_houses: usize) -> Rational {
        Rational::new(
            BigInt::one(),
            BigInt::from(self.alpha).pow(2) * BigInt::from(n_houses).pow(2),
        )
    }

    /// Tighter parameters for a retry: double `alpha`, halve `eps`.
    pub fn shrunk(&self) -> Self {
        ReductionParams {
            alpha: self.alpha * 2,
            eps: &self.eps / int(2),
        }
    }
}

/// Deterministic identifier scheme for the encoded problem.
///
/// House order: the `n-1` shared slowdown houses, part 1's round houses,
/// parts 2..18 (round houses then clause houses each), the 17 consolation
/// houses, then part 1's clause houses and finally the prize. Keeping part
/// 1's clause houses and the prize last means early finishers from other
/// parts must eat through everything else first (see the module notes).
///
/// Agent order: the manipulator, the 17 dummies, then per part two copy
/// agents per literal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionLayout {
    pub n_vars: usize,
    pub n_clauses: usize,
}

impl ReductionLayout {
    fn new(n_vars: usize, n_clauses: usize) -> Self {
        ReductionLayout { n_vars, n_clauses }
    }

    /// Round houses per part.
    fn round_block(&self) -> usize {
        2 * self.n_vars * self.n_vars
    }

    /// Houses per mirrored part (rounds plus clause triplets).
    fn part_block(&self) -> usize {
        self.round_block() + 3 * self.n_clauses
    }

    /// Total number of houses.
    pub fn n_houses(&self) -> usize {
        (self.n_vars - 1)
            + self.round_block()
            + (PARTS - 1) * self.part_block()
            + (PARTS - 1)
            + 3 * self.n_clauses
            + 1
    }

    /// Total number of agents.
    pub fn n_agents(&self) -> usize {
        PARTS + PARTS * 4 * self.n_vars
    }

    /// Slowdown house shared between rounds `r` and `r+1` (`r < n-1`).
    pub fn slowdown(&self, r: usize) -> HouseId {
        debug_assert!(r + 1 < self.n_vars);
        r
    }

    /// Round house of `lit` in round `r` of `part` (parts are 1-based).
    pub fn round_house(&self, part: usize, r: usize, lit: Lit) -> HouseId {
        debug_assert!((1..=PARTS).contains(&part) && r < self.n_vars);
        let within = r * 2 * self.n_vars + lit.index();
        if part == 1 {
            (self.n_vars - 1) + within
        } else {
            self.mirror_base(part) + within
        }
    }

    /// `j`-th house (0..3) of clause `c`'s triplet in `part`.
    pub fn clause_house(&self, part: usize, c: usize, j: usize) -> HouseId {
        debug_assert!((1..=PARTS).contains(&part) && c < self.n_clauses && j < 3);
        if part == 1 {
            self.consolation_base() + (PARTS - 1) + 3 * c + j
        } else {
            self.mirror_base(part) + self.round_block() + 3 * c + j
        }
    }

    /// Consolation house of `part` (2-based like the dummies).
    pub fn consolation(&self, part: usize) -> HouseId {
        debug_assert!((2..=PARTS).contains(&part));
        self.consolation_base() + (part - 2)
    }

    /// The prize house: always the last identifier.
    pub fn prize(&self) -> HouseId {
        self.n_houses() - 1
    }

    /// The manipulating agent.
    pub fn manipulator(&self) -> AgentId {
        0
    }

    /// Dummy marker agent of `part` (2..=18).
    pub fn dummy(&self, part: usize) -> AgentId {
        debug_assert!((2..=PARTS).contains(&part));
        part - 1
    }

    /// Copy `copy` (0 or 1) of `lit` in `part` (1..=18).
    pub fn literal_agent(&self, part: usize, lit: Lit, copy: usize) -> AgentId {
        debug_assert!((1..=PARTS).contains(&part) && copy < 2);
        PARTS + (part - 1) * 4 * self.n_vars + 2 * lit.index() + copy
    }

    fn mirror_base(&self, part: usize) -> usize {
        (self.n_vars - 1) + self.round_block() + (part - 2) * self.part_block()
    }

    fn consolation_base(&self) -> usize {
        (self.n_vars - 1) + self.round_block() + (PARTS - 1) * self.part_block()
    }
}

/// The encoded assignment problem together with everything needed to
/// interpret it: the manipulator's utilities, the target to reach, and the
/// identifier layout.
#[derive(Clone, Debug)]
pub struct ReductionInstance {
    pub problem: AssignmentProblem,
    pub utilities: UtilityFunction,
    pub formula: ThreeSatFormula,
    pub params: ReductionParams,
    pub layout: ReductionLayout,
    pub negligible: Rational,
    pub target: Rational,
}

/// Builds the assignment problem encoding `formula`.
///
/// The manipulator's utility places `(2*alpha)^{2(n-r)}` on round `r`'s pair
/// of literal houses in part 1 (1-based `r`; plus `eps` on the negated one),
/// `(2*alpha)^{2(n-r)-1}` on the slowdown house after round `r`, 1 on the
/// prize, and a negligible value everywhere else. The target is what the
/// prescribed schedule earns when the solo time on the prize is exactly
/// 25/27 and no `eps` bonus is collected: `sum_r 4/9 u(round r positive
/// house) + sum_r 1/18 u(slowdown r) + 25/27`.
pub fn reduce_3sat(
    formula: &ThreeSatFormula,
    params: &ReductionParams,
) -> Result<ReductionInstance> {
    if params.alpha == 0 {
        return Err(Error::Input("alpha must be positive".into()));
    }
    if params.eps <= Rational::zero() {
        return Err(Error::Input("eps must be positive".into()));
    }
    let n = formula.n_vars();
    let n_clauses = formula.clauses().len();
    let layout = ReductionLayout::new(n, n_clauses);
    let n_houses = layout.n_houses();
    let n_agents = layout.n_agents();

    // Which clause each literal copy serves: clause c's j-th slot is eaten by
    // the first unassigned copy of the negation of the slot's literal. The
    // exactly-twice pattern fills every copy exactly once.
    let mut clause_of = vec![[usize::MAX; 2]; 2 * n];
    for (c, clause) in formula.clauses().iter().enumerate() {
        for lit in clause {
            let g = lit.negated().index();
            let slot = clause_of[g]
                .iter()
                .position(|&x| x == usize::MAX)
                .expect("exactly-twice formula: two slots per literal copy pair");
            clause_of[g][slot] = c;
        }
    }

    let mut house_names = vec![String::new(); n_houses];
    for r in 0..n.saturating_sub(1) {
        house_names[layout.slowdown(r)] = format!("s{}", r + 1);
    }
    for part in 1..=PARTS {
        for r in 0..n {
            for l in 0..2 * n {
                let lit = Lit::from_index(l);
                house_names[layout.round_house(part, r, lit)] =
                    format!("p{part}.r{}.{lit}", r + 1);
            }
        }
        for c in 0..n_clauses {
            for j in 0..3 {
                house_names[layout.clause_house(part, c, j)] =
                    format!("p{part}.c{}.{}", c + 1, j + 1);
            }
        }
    }
    for part in 2..=PARTS {
        house_names[layout.consolation(part)] = format!("cp{part}");
    }
    house_names[layout.prize()] = "prize".into();

    let complete = |head: Vec<HouseId>| -> Vec<HouseId> {
        let mut in_head = vec![false; n_houses];
        for &h in &head {
            in_head[h] = true;
        }
        let mut list = head;
        list.extend((0..n_houses).filter(|&h| !in_head[h]));
        list
    };
    // Marker head for `part`: each round's positive then negative house, the
    // shared slowdown between rounds, then the part's final house.
    let marker_head = |part: usize, last: HouseId| -> Vec<HouseId> {
        let mut head = Vec::with_capacity(3 * n);
        for r in 0..n {
            head.push(layout.round_house(part, r, Lit::pos(r)));
            head.push(layout.round_house(part, r, Lit::neg(r)));
            if r + 1 < n {
                head.push(layout.slowdown(r));
            }
        }
        head.push(last);
        head
    };

    let mut agent_names = vec![String::new(); n_agents];
    let mut prefs = vec![Vec::new(); n_agents];
    agent_names[layout.manipulator()] = "m".into();
    prefs[layout.manipulator()] = complete(marker_head(1, layout.prize()));
    for part in 2..=PARTS {
        agent_names[layout.dummy(part)] = format!("d{part}");
        prefs[layout.dummy(part)] = complete(marker_head(part, layout.consolation(part)));
    }
    for part in 1..=PARTS {
        for l in 0..2 * n {
            let lit = Lit::from_index(l);
            for copy in 0..2 {
                let a = layout.literal_agent(part, lit, copy);
                agent_names[a] = format!("p{part}.{lit}.{}", copy + 1);
                let mut head: Vec<HouseId> =
                    (0..n).map(|r| layout.round_house(part, r, lit)).collect();
                let c = clause_of[l][copy];
                head.extend((0..3).map(|j| layout.clause_house(part, c, j)));
                head.push(if part == 1 {
                    layout.prize()
                } else {
                    layout.consolation(part)
                });
                prefs[a] = complete(head);
            }
        }
    }

    let two_alpha = int(2 * params.alpha as i64);
    let base = |r: usize| num_traits::pow(two_alpha.clone(), 2 * (n - 1 - r));
    let negligible = params.negligible(n_houses);
    let mut values = vec![negligible.clone(); n_houses];
    let mut target = rat(25, 27);
    for r in 0..n {
        let b = base(r);
        target += &b * rat(4, 9);
        values[layout.round_house(1, r, Lit::pos(r))] = b.clone();
        values[layout.round_house(1, r, Lit::neg(r))] = b + &params.eps;
        if r + 1 < n {
            let s = num_traits::pow(two_alpha.clone(), 2 * (n - 1 - r) - 1);
            target += &s * rat(1, 18);
            values[layout.slowdown(r)] = s;
        }
    }
    values[layout.prize()] = int(1);
    let utilities = UtilityFunction::complete(values);

    let problem = AssignmentProblem::new(agent_names, house_names, prefs)?;
    Ok(ReductionInstance {
        problem,
        utilities,
        formula: formula.clone(),
        params: params.clone(),
        layout,
        negligible,
        target,
    })
}

/// The report the manipulator plays for a given truth assignment: per round
/// the chosen variable's literal house first (positive iff the variable is
/// set), then the other one, then the slowdown house; finally the prize. The
/// list stops there — everything later would contribute nothing anyway.
pub fn prescribed_report(inst: &ReductionInstance, assignment: &[bool]) -> Vec<HouseId> {
    let layout = &inst.layout;
    let n = layout.n_vars;
    assert_eq!(assignment.len(), n, "assignment length");
    let mut report = Vec::with_capacity(3 * n);
    for (r, &value) in assignment.iter().enumerate() {
        let chosen = Lit { var: r, positive: value };
        report.push(layout.round_house(1, r, chosen));
        report.push(layout.round_house(1, r, chosen.negated()));
        if r + 1 < n {
            report.push(layout.slowdown(r));
        }
    }
    report.push(layout.prize());
    report
}

/// Outcome of playing the prescribed report for one truth assignment.
#[derive(Clone, Debug)]
pub struct EvaluatedAssignment {
    pub assignment: Vec<bool>,
    pub eu: Rational,
    pub prize_share: Rational,
    pub reaches: bool,
}

/// Runs the eating rule on the encoded problem with the prescribed report
/// and compares the manipulator's expected utility against the target.
pub fn evaluate_assignment(
    inst: &ReductionInstance,
    assignment: &[bool],
) -> Result<EvaluatedAssignment> {
    if assignment.len() != inst.layout.n_vars {
        return Err(Error::Input(format!(
            "assignment has {} values, formula has {} variables",
            assignment.len(),
            inst.layout.n_vars
        )));
    }
    let report = prescribed_report(inst, assignment);
    let (alloc, _) = ps_with_report(&inst.problem, &report)?;
    let row = alloc.row(inst.layout.manipulator());
    let eu = eu_value(row, &inst.utilities)?;
    let reaches = eu >= inst.target;
    Ok(EvaluatedAssignment {
        assignment: assignment.to_vec(),
        eu,
        prize_share: row[inst.layout.prize()].clone(),
        reaches,
    })
}

/// One row of a full verification sweep.
#[derive(Clone, Debug)]
pub struct AssignmentCheck {
    pub assignment: Vec<bool>,
    pub satisfies: bool,
    pub eu: Rational,
    pub reaches: bool,
}

/// Result of sweeping every assignment through [`evaluate_assignment`] and
/// comparing against plain truth-table evaluation.
#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub params: ReductionParams,
    pub retries: usize,
    pub satisfiable: bool,
    pub agree: bool,
    pub checks: Vec<AssignmentCheck>,
}

/// Checks the encoding end to end: for every truth assignment, the
/// prescribed report must reach the target exactly when the assignment
/// satisfies the formula. On disagreement the parameters are tightened
/// (`alpha` doubled, `eps` halved) and the sweep repeats, up to
/// `max_retries` times; the defaults are chosen so the first attempt
/// already agrees. `checks[k].assignment[v]` is bit `v` of `k`.
pub fn verify_reduction(
    formula: &ThreeSatFormula,
    params: &ReductionParams,
    max_retries: usize,
) -> Result<VerificationReport> {
    use rayon::prelude::*;

    let n = formula.n_vars();
    if n > 16 {
        return Err(Error::CapExceeded(format!(
            "verification sweeps 2^{n} assignments; refusing beyond 2^16"
        )));
    }
    let mut params = params.clone();
    let mut retries = 0;
    loop {
        let inst = reduce_3sat(formula, &params)?;
        let checks = (0u64..1 << n)
            .into_par_iter()
            .map(|bits| {
                let a: Vec<bool> = (0..n).map(|v| bits >> v & 1 == 1).collect();
                let satisfies = formula.satisfies(&a);
                let ev = evaluate_assignment(&inst, &a)?;
                Ok(AssignmentCheck {
                    assignment: a,
                    satisfies,
                    eu: ev.eu,
                    reaches: ev.reaches,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let agree = checks.iter().all(|c| c.satisfies == c.reaches);
        if agree || retries == max_retries {
            return Ok(VerificationReport {
                params,
                retries,
                satisfiable: checks.iter().any(|c| c.satisfies),
                agree,
                checks,
            });
        }
        retries += 1;
        params = params.shrunk();
    }
}

/// Observed schedule of one clause triplet in part 1.
#[derive(Clone, Debug)]
pub struct ClauseTiming {
    pub clause: usize,
    /// Copy agents that arrived 1/9 early (slots whose literal is false).
    pub advanced: usize,
    pub satisfied: bool,
    /// Time from the manipulator reaching the prize to the triplet's end.
    /// Naturally `1 - advanced/27`; triplets that outlive the prize may end
    /// earlier than that once the agents done elsewhere flood in.
    pub completion: Rational,
}

/// Fine-grained consistency check of a prescribed-play run: every round and
/// exhaustion time the schedule analysis predicts, compared against the
/// actual simulation. `mismatches` lists every discrepancy; an empty list
/// means the run followed the predicted schedule exactly.
#[derive(Clone, Debug)]
pub struct TimingAudit {
    pub assignment: Vec<bool>,
    /// Start of each round in the manipulator's walk: `r/2`.
    pub round_starts: Vec<Rational>,
    /// Manipulator's eating segments as (house, start, duration).
    pub segments: Vec<(HouseId, Rational, Rational)>,
    /// When the manipulator reaches the prize: `(n-1)/2 + 4/9`.
    pub prize_start: Rational,
    pub prize_share: Rational,
    /// Share needed to reach the target: `25/27` minus the `eps` bonuses
    /// collected in the rounds.
    pub required_share: Rational,
    /// Head start of the early copy agents entering the clause phase.
    pub lead: Rational,
    pub eu: Rational,
    pub reaches: bool,
    pub clause_timings: Vec<ClauseTiming>,
    /// Distinct nominal times-to-exhaustion the manipulator could observe
    /// when choosing a house (sampled at every decision point).
    pub decision_ttx: Vec<Rational>,
    pub mismatches: Vec<String>,
}

impl TimingAudit {
    /// True when the simulated run matches the predicted schedule.
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Runs the prescribed report under the eating rule and audits the timing
/// structure the encoding relies on.
pub fn timing_audit(inst: &ReductionInstance, assignment: &[bool]) -> Result<TimingAudit> {
    let layout = &inst.layout;
    let n = layout.n_vars;
    if assignment.len() != n {
        return Err(Error::Input(format!(
            "assignment has {} values, formula has {} variables",
            assignment.len(),
            n
        )));
    }
    let report = prescribed_report(inst, assignment);
    let m = inst.problem.m();
    let me = layout.manipulator();

    // Watch the manipulator: record when his target changes and, at each such
    // decision point, the nominal time-to-exhaustion of every live house as
    // if he joined its current eaters.
    let mut turns: Vec<(Option<HouseId>, Rational)> = Vec::new();
    let mut ttx: BTreeSet<Rational> = BTreeSet::new();
    let (alloc, trace) = ps_with_report_and_observer(&inst.problem, &report, |state| {
        let current = state.targets[me];
        if turns.last().map(|(h, _)| *h) == Some(current) {
            return;
        }
        turns.push((current, state.time.clone()));
        if current.is_none() {
            return;
        }
        let mut eaters = vec![0usize; m];
        for t in state.targets {
            if let Some(h) = *t {
                eaters[h] += 1;
            }
        }
        for (h, remaining) in state.remaining.iter().enumerate() {
            if remaining.is_zero() {
                continue;
            }
            let joined = eaters[h] + usize::from(current != Some(h));
            ttx.insert(remaining / int(joined as i64));
        }
    })?;

    let mut exhaust: Vec<Option<Rational>> = vec![None; m];
    for (t, houses) in &trace.events {
        for &h in houses {
            exhaust[h] = Some(t.clone());
        }
    }
    let when = |h: HouseId| -> Rational {
        exhaust[h].clone().unwrap_or_else(|| int(-1))
    };

    let mut mismatches = Vec::new();
    fn check(mismatches: &mut Vec<String>, what: String, got: &Rational, want: &Rational) {
        if got != want {
            mismatches.push(format!(
                "{what}: got {}, predicted {}",
                format_rational(got),
                format_rational(want)
            ));
        }
    }

    // The manipulator's segments: close each turn at the next turn's start,
    // the final one at the prize's exhaustion.
    let prize_share = alloc.row(me)[layout.prize()].clone();
    let prize_end = when(layout.prize());
    let mut segments: Vec<(HouseId, Rational, Rational)> = Vec::new();
    for (i, (target, start)) in turns.iter().enumerate() {
        if let Some(h) = target {
            let end = turns
                .get(i + 1)
                .map(|(_, t)| t.clone())
                .unwrap_or_else(|| prize_end.clone());
            segments.push((*h, start.clone(), end - start));
        }
    }
    if segments.len() != report.len()
        || segments.iter().map(|s| s.0).ne(report.iter().copied())
    {
        mismatches.push(format!(
            "manipulator ate houses {:?}, prescribed {report:?}",
            segments.iter().map(|s| s.0).collect::<Vec<_>>()
        ));
    }

    let t_prize = rat(9 * n as i64 - 1, 18);
    let mut round_starts = Vec::new();
    if segments.len() == report.len() {
        for r in 0..n {
            let (_, start, dur) = &segments[3 * r];
            round_starts.push(start.clone());
            check(&mut mismatches, format!("round {} start", r + 1), start, &rat(r as i64, 2));
            check(&mut mismatches, format!("round {} first house time", r + 1), dur, &rat(1, 3));
            check(
                &mut mismatches,
                format!("round {} second house time", r + 1),
                &segments[3 * r + 1].2,
                &rat(1, 9),
            );
            if r + 1 < n {
                check(
                    &mut mismatches,
                    format!("round {} slowdown time", r + 1),
                    &segments[3 * r + 2].2,
                    &rat(1, 18),
                );
            }
        }
        let (_, start, dur) = &segments[3 * n - 1];
        check(&mut mismatches, "prize arrival".into(), start, &t_prize);
        check(&mut mismatches, "prize share vs final segment".into(), dur, &prize_share);
    }
    if let Some(first) = &trace.start[layout.prize()] {
        check(&mut mismatches, "first bite of the prize".into(), first, &t_prize);
    } else {
        mismatches.push("prize was never eaten".into());
    }

    // Exhaustion matrix for part 1's round houses: a literal's pair of copy
    // agents runs 1/6 early after the manipulator eats their house first,
    // 1/18 early after he eats it second, so from its variable's round
    // onward the house empties at +1/3 (chosen) or +4/9 (other); houses of
    // later variables still empty at the round's end.
    for r in 0..n {
        let t_r = rat(r as i64, 2);
        for l in 0..2 * n {
            let lit = Lit::from_index(l);
            let offset = if lit.var > r {
                rat(1, 2)
            } else if lit.holds(assignment) {
                rat(1, 3)
            } else {
                rat(4, 9)
            };
            check(
                &mut mismatches,
                format!("round {} exhaustion of {lit}", r + 1),
                &when(layout.round_house(1, r, lit)),
                &(t_r.clone() + offset),
            );
        }
        if r + 1 < n {
            check(
                &mut mismatches,
                format!("slowdown {} exhaustion", r + 1),
                &when(layout.slowdown(r)),
                &(t_r + rat(1, 2)),
            );
        }
    }

    // Every true literal's copies enter the clause phase exactly 1/9 before
    // the manipulator reaches the prize; every false literal's exactly then.
    let lead = rat(1, 9);
    for l in 0..2 * n {
        let lit = Lit::from_index(l);
        let gap = &t_prize - when(layout.round_house(1, n - 1, lit));
        let want = if lit.holds(assignment) { lead.clone() } else { int(0) };
        check(&mut mismatches, format!("clause-phase lead of {lit}'s copies"), &gap, &want);
    }

    // Triplets that finish while the prize is still alive set the
    // manipulator's share, so their natural completion must hold exactly.
    // Triplets that outlive the prize only need to stay late: once every
    // house outside part 1's clause block is gone, the agents finished
    // elsewhere flood in and may truncate them, but total eating speed keeps
    // that flood past the prize's death.
    let prize_death = &prize_end - &t_prize;
    let mut clause_timings = Vec::new();
    for (c, clause) in inst.formula.clauses().iter().enumerate() {
        let advanced = clause.iter().filter(|l| !l.holds(assignment)).count();
        let completion = when(layout.clause_house(1, c, 2)) - &t_prize;
        let natural = int(1) - rat(advanced as i64, 27);
        if natural <= prize_death {
            check(
                &mut mismatches,
                format!("triplet {} completion", c + 1),
                &completion,
                &natural,
            );
        } else if completion < prize_death {
            mismatches.push(format!(
                "triplet {} completed at {} before the prize died at {}",
                c + 1,
                format_rational(&completion),
                format_rational(&prize_death)
            ));
        }
        clause_timings.push(ClauseTiming {
            clause: c,
            advanced,
            satisfied: clause.iter().any(|l| l.holds(assignment)),
            completion,
        });
    }

    // Expected-utility decomposition of the prescribed walk.
    let u = |h: HouseId| inst.utilities.get(h).expect("complete utilities").clone();
    let mut decomposed = prize_share.clone();
    let mut required = rat(25, 27);
    for (r, &value) in assignment.iter().enumerate() {
        decomposed += u(report[3 * r]) / int(3) + u(report[3 * r + 1]) / int(9);
        required -= &inst.params.eps / int(if value { 9 } else { 3 });
        if r + 1 < n {
            decomposed += u(layout.slowdown(r)) / int(18);
        }
    }
    let eu = eu_value(alloc.row(me), &inst.utilities)?;
    check(&mut mismatches, "expected utility decomposition".into(), &eu, &decomposed);
    let reaches = eu >= inst.target;
    if reaches != (prize_share >= required) {
        mismatches.push(format!(
            "target test disagrees with the share test: eu {} vs target {}, \
             share {} vs required {}",
            format_rational(&eu),
            format_rational(&inst.target),
            format_rational(&prize_share),
            format_rational(&required)
        ));
    }

    let decision_ttx: Vec<Rational> = ttx.into_iter().collect();
    if decision_ttx.len() > 16 {
        mismatches.push(format!(
            "{} distinct decision-point exhaustion times (expected at most 16)",
            decision_ttx.len()
        ));
    }

    Ok(TimingAudit {
        assignment: assignment.to_vec(),
        round_starts,
        segments,
        prize_start: t_prize,
        prize_share,
        required_share: required,
        lead,
        eu,
        reaches,
        clause_timings,
        decision_ttx,
        mismatches,
    })
}
