//! Core domain types: assignment problems, fractional assignments, utility
//! functions, and the three comparison relations between allocations
//! (stochastic dominance, downward-lexicographic, expected utility).

use crate::error::{Error, Result};
use crate::rational::Rational;
use num_traits::{One, Zero};

/// Dense 0-based agent index. Agent 0 plays the manipulator role wherever one
/// is meaningful; with default names it displays as `a1`.
pub type AgentId = usize;
/// Dense 0-based house index. With default names house `j` displays as
/// `h{j+1}`.
pub type HouseId = usize;

/// Builds the default display names `a1..an` or `h1..hm`.
fn default_names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|k| format!("{prefix}{k}")).collect()
}

/// An assignment problem: agents with strict preference lists over houses.
///
/// Lists of agents `1..n` must be complete (a permutation of all houses);
/// agent 0's list may be any duplicate-free sublist, including empty — an
/// agent whose list runs out simply stops eating.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentProblem {
    agent_names: Vec<String>,
    house_names: Vec<String>,
    prefs: Vec<Vec<HouseId>>,
}

impl AssignmentProblem {
    /// Validates and builds a problem from explicit names and index lists.
    pub fn new(
        agent_names: Vec<String>,
        house_names: Vec<String>,
        prefs: Vec<Vec<HouseId>>,
    ) -> Result<Self> {
        let n = agent_names.len();
        let m = house_names.len();
        if n == 0 {
            return Err(Error::Input("need at least one agent".into()));
        }
        if m == 0 {
            return Err(Error::Input("need at least one house".into()));
        }
        for names in [&agent_names, &house_names] {
            for (k, name) in names.iter().enumerate() {
                if name.is_empty() {
                    return Err(Error::Input("empty name".into()));
                }
                if names[..k].contains(name) {
                    return Err(Error::Input(format!("duplicate name {name:?}")));
                }
            }
        }
        if prefs.len() != n {
            return Err(Error::Input(format!(
                "expected {n} preference lists, got {}",
                prefs.len()
            )));
        }
        for (a, list) in prefs.iter().enumerate() {
            validate_list(list, m, &agent_names[a])?;
            if a > 0 && list.len() != m {
                return Err(Error::Input(format!(
                    "agent {} must rank all {m} houses (got {})",
                    agent_names[a],
                    list.len()
                )));
            }
        }
        Ok(Self {
            agent_names,
            house_names,
            prefs,
        })
    }

    /// Builds a problem over `m` houses with default names `a1..`, `h1..`.
    pub fn from_prefs(prefs: Vec<Vec<HouseId>>, m: usize) -> Result<Self> {
        Self::new(default_names("a", prefs.len()), default_names("h", m), prefs)
    }

    /// Number of agents.
    pub fn n(&self) -> usize {
        self.agent_names.len()
    }

    /// Number of houses.
    pub fn m(&self) -> usize {
        self.house_names.len()
    }

    /// Preference list of one agent.
    pub fn pref(&self, agent: AgentId) -> &[HouseId] {
        &self.prefs[agent]
    }

    /// All preference lists, indexed by agent.
    pub fn prefs(&self) -> &[Vec<HouseId>] {
        &self.prefs
    }

    pub fn agent_name(&self, agent: AgentId) -> &str {
        &self.agent_names[agent]
    }

    pub fn house_name(&self, house: HouseId) -> &str {
        &self.house_names[house]
    }

    pub fn agent_names(&self) -> &[String] {
        &self.agent_names
    }

    pub fn house_names(&self) -> &[String] {
        &self.house_names
    }

    pub fn agent_index(&self, name: &str) -> Option<AgentId> {
        self.agent_names.iter().position(|x| x == name)
    }

    pub fn house_index(&self, name: &str) -> Option<HouseId> {
        self.house_names.iter().position(|x| x == name)
    }

    /// Position of `house` in `agent`'s list, if listed.
    pub fn rank(&self, agent: AgentId, house: HouseId) -> Option<usize> {
        self.prefs[agent].iter().position(|&h| h == house)
    }

    /// Same problem with `agent`'s list replaced by `list`.
    ///
    /// Agent 0's replacement may be partial; other agents must stay complete.
    pub fn with_report(&self, agent: AgentId, list: Vec<HouseId>) -> Result<Self> {
        if agent >= self.n() {
            return Err(Error::Input(format!("no agent with index {agent}")));
        }
        let mut prefs = self.prefs.clone();
        prefs[agent] = list;
        Self::new(self.agent_names.clone(), self.house_names.clone(), prefs)
    }

    /// Same problem with agent `agent` swapped into position 0 (names follow),
    /// so manipulator-centric operations can target any agent.
    pub fn with_agent_first(&self, agent: AgentId) -> Result<Self> {
        if agent >= self.n() {
            return Err(Error::Input(format!("no agent with index {agent}")));
        }
        let mut out = self.clone();
        out.agent_names.swap(0, agent);
        out.prefs.swap(0, agent);
        Ok(out)
    }

    /// Restriction to a subset of houses, preserving each agent's relative
    /// order. Returns the sub-problem (houses renumbered `0..houses.len()` in
    /// the given order) together with the map from new to old house ids.
    pub fn restrict_to_houses(&self, houses: &[HouseId]) -> Result<(Self, Vec<HouseId>)> {
        validate_list(houses, self.m(), "house subset")?;
        let mut new_id = vec![None; self.m()];
        for (k, &h) in houses.iter().enumerate() {
            new_id[h] = Some(k);
        }
        let prefs = self
            .prefs
            .iter()
            .map(|list| list.iter().filter_map(|&h| new_id[h]).collect())
            .collect();
        let names = houses.iter().map(|&h| self.house_names[h].clone()).collect();
        let sub = Self::new(self.agent_names.clone(), names, prefs)?;
        Ok((sub, houses.to_vec()))
    }
}

/// Checks a house list for out-of-range or duplicate entries.
pub(crate) fn validate_list(list: &[HouseId], m: usize, who: &str) -> Result<()> {
    let mut seen = vec![false; m];
    for &h in list {
        if h >= m {
            return Err(Error::Input(format!("{who}: house index {h} out of range")));
        }
        if seen[h] {
            return Err(Error::Input(format!("{who}: duplicate house index {h}")));
        }
        seen[h] = true;
    }
    Ok(())
}

/// An n×m matrix of exact shares; row `i` is agent `i`'s allocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalAssignment {
    shares: Vec<Vec<Rational>>,
}

impl FractionalAssignment {
    /// Validates entries lie in `[0, 1]` and the matrix is rectangular.
    pub fn from_rows(shares: Vec<Vec<Rational>>) -> Result<Self> {
        let m = shares.first().map_or(0, Vec::len);
        for row in &shares {
            if row.len() != m {
                return Err(Error::Input("ragged assignment matrix".into()));
            }
            for x in row {
                if x < &Rational::zero() || x > &Rational::one() {
                    return Err(Error::Input(format!("share {x} outside [0, 1]")));
                }
            }
        }
        Ok(Self { shares })
    }

    pub fn n(&self) -> usize {
        self.shares.len()
    }

    pub fn m(&self) -> usize {
        self.shares.first().map_or(0, Vec::len)
    }

    pub fn row(&self, agent: AgentId) -> &[Rational] {
        &self.shares[agent]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.shares
    }

    pub fn get(&self, agent: AgentId, house: HouseId) -> &Rational {
        &self.shares[agent][house]
    }

    pub fn column_sum(&self, house: HouseId) -> Rational {
        self.shares.iter().map(|row| &row[house]).sum()
    }

    pub fn row_sum(&self, agent: AgentId) -> Rational {
        self.shares[agent].iter().sum()
    }
}

/// The manipulator's cardinal utilities, one optional value per house.
///
/// Consistency with a strict order (strictly decreasing utility along it) is
/// checked by [`UtilityFunction::is_consistent_with`], not enforced on
/// construction: near-ties are deliberately allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtilityFunction {
    values: Vec<Option<Rational>>,
}

impl UtilityFunction {
    pub fn new(values: Vec<Option<Rational>>) -> Self {
        Self { values }
    }

    /// Utility function defined on every house.
    pub fn complete(values: Vec<Rational>) -> Self {
        Self {
            values: values.into_iter().map(Some).collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, house: HouseId) -> Option<&Rational> {
        self.values.get(house).and_then(Option::as_ref)
    }

    pub fn values(&self) -> &[Option<Rational>] {
        &self.values
    }

    /// True if utilities strictly decrease along `pref` wherever both ends of
    /// a pair are defined.
    pub fn is_consistent_with(&self, pref: &[HouseId]) -> bool {
        let mut last: Option<&Rational> = None;
        for &h in pref {
            if let Some(u) = self.get(h) {
                if let Some(prev) = last {
                    if prev <= u {
                        return false;
                    }
                }
                last = Some(u);
            }
        }
        true
    }
}

/// Outcome of comparing two allocations. `Incomparable` can only arise from
/// the stochastic-dominance relation; the other two relations are total.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComparisonResult {
    FirstPreferred,
    SecondPreferred,
    Equal,
    Incomparable,
}

impl std::fmt::Display for ComparisonResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ComparisonResult::FirstPreferred => "first-preferred",
            ComparisonResult::SecondPreferred => "second-preferred",
            ComparisonResult::Equal => "equal",
            ComparisonResult::Incomparable => "incomparable",
        };
        f.write_str(s)
    }
}

/// Checks the two rows and the order cover the same house set.
fn check_rows(p_row: &[Rational], q_row: &[Rational], pref: &[HouseId]) -> Result<()> {
    if p_row.len() != q_row.len() || p_row.len() != pref.len() {
        return Err(Error::Input(format!(
            "mismatched house sets: rows of length {} and {}, order of length {}",
            p_row.len(),
            q_row.len(),
            pref.len()
        )));
    }
    validate_list(pref, pref.len(), "preference order")?;
    Ok(())
}

/// Stochastic-dominance comparison of two allocation rows under a complete
/// strict order: compares the running share totals over every prefix of
/// `pref` (the houses weakly preferred to each point).
pub fn sd_compare(
    p_row: &[Rational],
    q_row: &[Rational],
    pref: &[HouseId],
) -> Result<ComparisonResult> {
    check_rows(p_row, q_row, pref)?;
    let mut p_sum = Rational::zero();
    let mut q_sum = Rational::zero();
    let (mut p_ahead, mut q_ahead) = (false, false);
    for &h in pref {
        p_sum += &p_row[h];
        q_sum += &q_row[h];
        match p_sum.cmp(&q_sum) {
            std::cmp::Ordering::Greater => p_ahead = true,
            std::cmp::Ordering::Less => q_ahead = true,
            std::cmp::Ordering::Equal => {}
        }
    }
    Ok(match (p_ahead, q_ahead) {
        (false, false) => ComparisonResult::Equal,
        (true, false) => ComparisonResult::FirstPreferred,
        (false, true) => ComparisonResult::SecondPreferred,
        (true, true) => ComparisonResult::Incomparable,
    })
}

/// Downward-lexicographic comparison: decided by the most preferred house
/// where the rows differ. Total on rows over the same house set.
pub fn dl_compare(
    p_row: &[Rational],
    q_row: &[Rational],
    pref: &[HouseId],
) -> Result<ComparisonResult> {
    check_rows(p_row, q_row, pref)?;
    for &h in pref {
        match p_row[h].cmp(&q_row[h]) {
            std::cmp::Ordering::Greater => return Ok(ComparisonResult::FirstPreferred),
            std::cmp::Ordering::Less => return Ok(ComparisonResult::SecondPreferred),
            std::cmp::Ordering::Equal => {}
        }
    }
    Ok(ComparisonResult::Equal)
}

/// Expected utility of an allocation row: `Σ u(h)·row(h)`, exact.
pub fn eu_value(row: &[Rational], u: &UtilityFunction) -> Result<Rational> {
    if row.len() != u.m() {
        return Err(Error::Input(format!(
            "allocation covers {} houses but utilities cover {}",
            row.len(),
            u.m()
        )));
    }
    let mut total = Rational::zero();
    for (h, share) in row.iter().enumerate() {
        match u.get(h) {
            Some(value) => total += value * share,
            None => {
                return Err(Error::Input(format!(
                    "no utility defined for house index {h}"
                )))
            }
        }
    }
    Ok(total)
}
