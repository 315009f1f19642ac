//! Sequential allocation of indivisible objects, and its exact
//! correspondence with the eating rule for two agents.
//!
//! Splitting every house into two identical halves turns the two-agent
//! eating rule into a finite picking game: agents alternate turns, each
//! taking their most preferred half still available, and each agent's
//! fractional share of a house is exactly half the number of halves they
//! pick up. That correspondence reduces both best-response problems for two
//! agents — including maximising expected utility, which is NP-hard for
//! three or more agents — to reasoning about the picking game.

use crate::error::{Error, Result};
use crate::model::{AgentId, AssignmentProblem, FractionalAssignment, UtilityFunction};
use crate::ps::ps_with_report;
use crate::rational::rat;
use std::collections::BTreeSet;

/// Index of an object in a picking game.
pub type ObjectId = usize;

/// A picking game: agents take turns (in `policy` order) picking their most
/// preferred object that is still unowned. An agent whose list holds no
/// unowned object skips the turn.
#[derive(Debug, Clone)]
pub struct SAInstance {
    n_objects: usize,
    prefs: Vec<Vec<ObjectId>>,
    policy: Vec<AgentId>,
}

impl SAInstance {
    pub fn new(
        n_objects: usize,
        prefs: Vec<Vec<ObjectId>>,
        policy: Vec<AgentId>,
    ) -> Result<Self> {
        if prefs.is_empty() {
            return Err(Error::Input("a picking game needs at least one agent".into()));
        }
        for (a, list) in prefs.iter().enumerate() {
            let mut seen = vec![false; n_objects];
            for &o in list {
                if o >= n_objects {
                    return Err(Error::Input(format!(
                        "agent {a} lists object {o}, but there are only {n_objects} objects"
                    )));
                }
                if std::mem::replace(&mut seen[o], true) {
                    return Err(Error::Input(format!("agent {a} lists object {o} twice")));
                }
            }
        }
        if let Some(&a) = policy.iter().find(|&&a| a >= prefs.len()) {
            return Err(Error::Input(format!("policy names agent {a} which does not exist")));
        }
        Ok(Self {
            n_objects,
            prefs,
            policy,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.prefs.len()
    }

    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    pub fn pref(&self, agent: AgentId) -> &[ObjectId] {
        &self.prefs[agent]
    }

    pub fn policy(&self) -> &[AgentId] {
        &self.policy
    }

    /// Replaces one agent's preference list, revalidating it.
    pub fn with_pref(&self, agent: AgentId, list: Vec<ObjectId>) -> Result<Self> {
        let mut prefs = self.prefs.clone();
        prefs[agent] = list;
        Self::new(self.n_objects, prefs, self.policy.clone())
    }
}

/// The strictly alternating turn order 0, 1, ..., n-1, 0, 1, ... of the
/// given total length.
pub fn alternating_policy(n_agents: usize, len: usize) -> Vec<AgentId> {
    (0..len).map(|t| t % n_agents).collect()
}

/// One executed turn of a picking game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pick {
    /// Index of the turn in the policy (skipped turns keep their index).
    pub turn: usize,
    pub agent: AgentId,
    pub object: ObjectId,
}

/// Outcome of a picking game: who owns what, and the pick log.
#[derive(Debug, Clone)]
pub struct DiscreteAssignment {
    owner: Vec<Option<AgentId>>,
    picks: Vec<Pick>,
}

impl DiscreteAssignment {
    pub fn owner(&self, object: ObjectId) -> Option<AgentId> {
        self.owner[object]
    }

    pub fn owners(&self) -> &[Option<AgentId>] {
        &self.owner
    }

    pub fn owned_by(&self, agent: AgentId) -> Vec<ObjectId> {
        (0..self.owner.len())
            .filter(|&o| self.owner[o] == Some(agent))
            .collect()
    }

    pub fn picks(&self) -> &[Pick] {
        &self.picks
    }
}

/// Plays the picking game to the end and returns the outcome.
pub fn sequential_allocation(inst: &SAInstance) -> DiscreteAssignment {
    let mut owner: Vec<Option<AgentId>> = vec![None; inst.n_objects];
    let mut picks = Vec::new();
    for (turn, &agent) in inst.policy.iter().enumerate() {
        if let Some(&object) = inst.prefs[agent].iter().find(|&&o| owner[o].is_none()) {
            owner[object] = Some(agent);
            picks.push(Pick {
                turn,
                agent,
                object,
            });
        }
    }
    DiscreteAssignment { owner, picks }
}

/// The house/half-house correspondence: house `h` splits into objects `2h`
/// (first half) and `2h + 1` (second half).
#[derive(Debug, Clone, Copy)]
pub struct HalfHouseMap {
    n_houses: usize,
}

impl HalfHouseMap {
    pub fn new(n_houses: usize) -> Self {
        Self { n_houses }
    }

    pub fn n_houses(&self) -> usize {
        self.n_houses
    }

    pub fn n_objects(&self) -> usize {
        2 * self.n_houses
    }

    pub fn first_half(&self, house: usize) -> ObjectId {
        2 * house
    }

    pub fn second_half(&self, house: usize) -> ObjectId {
        2 * house + 1
    }

    pub fn halves(&self, house: usize) -> [ObjectId; 2] {
        [2 * house, 2 * house + 1]
    }

    pub fn house_of(&self, object: ObjectId) -> usize {
        object / 2
    }

    /// Converts an outcome of the halved picking game into fractional house
    /// shares: each owned half contributes one half of the house.
    pub fn shares(&self, outcome: &DiscreteAssignment, n_agents: usize) -> FractionalAssignment {
        let rows = (0..n_agents)
            .map(|a| {
                (0..self.n_houses)
                    .map(|h| {
                        let c = self
                            .halves(h)
                            .iter()
                            .filter(|&&o| outcome.owner(o) == Some(a))
                            .count();
                        rat(c as i64, 2)
                    })
                    .collect()
            })
            .collect();
        FractionalAssignment::from_rows(rows).expect("half counts are valid shares")
    }
}

/// Expands a strict house order into the strict half order that lists both
/// halves of each house consecutively.
fn halves_consecutive(map: &HalfHouseMap, houses: &[usize]) -> Vec<ObjectId> {
    houses.iter().flat_map(|&h| map.halves(h)).collect()
}

/// Builds the picking game equivalent to the two-agent eating rule: every
/// house split in halves, both agents ranking the halves of each house
/// consecutively in their house order, turns strictly alternating with the
/// first agent picking first. The fractional outcome of the eating rule
/// equals the half-count shares of this game.
pub fn half_house_reduction(
    problem: &AssignmentProblem,
) -> Result<(SAInstance, HalfHouseMap)> {
    if problem.n() != 2 {
        return Err(Error::Unsupported(
            "the half-house correspondence is specific to two agents".into(),
        ));
    }
    let m = problem.m();
    if problem.prefs().iter().any(|p| p.len() != m) {
        return Err(Error::Input(
            "the half-house correspondence needs complete preference lists".into(),
        ));
    }
    let map = HalfHouseMap::new(m);
    let prefs = problem
        .prefs()
        .iter()
        .map(|p| halves_consecutive(&map, p))
        .collect();
    let inst = SAInstance::new(map.n_objects(), prefs, alternating_policy(2, map.n_objects()))?;
    Ok((inst, map))
}

/// Result of the manipulator's best response in a two-agent picking game.
#[derive(Debug, Clone)]
pub struct PickingBestResponse {
    /// A strict preference report achieving the optimum.
    pub order: Vec<ObjectId>,
    /// The set of objects the manipulator ends up with.
    pub won: BTreeSet<ObjectId>,
    /// The full game played under `order`.
    pub outcome: DiscreteAssignment,
}

/// Best response of the first agent in a two-agent alternating picking game
/// when their true preference is a weak order (`classes`, best class first;
/// ties within a class broken by `tie_break`). The rival picks greedily by
/// the strict order `rival`.
///
/// The winnable set is grown greedily: walking the manipulator's tie-broken
/// order, each object is added to the target set if the grown set is still
/// securable — checked by simulating the game with the manipulator always
/// picking the unowned target the rival covets most. The greedy growth is
/// exchange-stable, so the final set maximises, class by class from the
/// best down, how many objects of the class the manipulator can take.
pub fn sa_best_response_2(
    n_objects: usize,
    classes: &[Vec<ObjectId>],
    rival: &[ObjectId],
    tie_break: &[ObjectId],
) -> Result<PickingBestResponse> {
    let flat: Vec<ObjectId> = classes.iter().flatten().copied().collect();
    let mut seen = vec![false; n_objects];
    for &o in &flat {
        if o >= n_objects || std::mem::replace(&mut seen[o], true) {
            return Err(Error::Input(
                "the manipulator's weak order must cover every object exactly once".into(),
            ));
        }
    }
    if flat.len() != n_objects {
        return Err(Error::Input(
            "the manipulator's weak order must cover every object exactly once".into(),
        ));
    }
    if rival.iter().any(|&o| o >= n_objects) || tie_break.iter().any(|&o| o >= n_objects) {
        return Err(Error::Input("rival and tie-break orders must list valid objects".into()));
    }

    // Rank objects: by the rival's list (unlisted objects last), and by the
    // tie-break order for linearising within classes.
    let rival_rank = rank_map(n_objects, rival);
    let tb_rank = rank_map(n_objects, tie_break);

    let mut sigma = Vec::with_capacity(n_objects);
    for class in classes {
        let mut c = class.clone();
        c.sort_by_key(|&o| tb_rank[o]);
        sigma.extend(c);
    }

    let mut targets: BTreeSet<ObjectId> = BTreeSet::new();
    for &o in &sigma {
        targets.insert(o);
        if simulate_targets(n_objects, &targets, rival, &rival_rank, &sigma).is_none() {
            targets.remove(&o);
        }
    }
    debug_assert_eq!(targets.len(), n_objects.div_ceil(2));

    let outcome = simulate_targets(n_objects, &targets, rival, &rival_rank, &sigma)
        .ok_or_else(|| Error::Internal("final target set must be securable".into()))?;
    let won: BTreeSet<ObjectId> = outcome.owned_by(0).into_iter().collect();
    debug_assert!(won.is_superset(&targets));

    // The report: picks in order, then never-picked objects, tie-broken.
    let mut order: Vec<ObjectId> = outcome
        .picks()
        .iter()
        .filter(|p| p.agent == 0)
        .map(|p| p.object)
        .collect();
    order.extend(sigma.iter().copied().filter(|o| !won.contains(o)));
    Ok(PickingBestResponse {
        order,
        won,
        outcome,
    })
}

fn rank_map(n_objects: usize, order: &[ObjectId]) -> Vec<usize> {
    let mut rank = vec![usize::MAX; n_objects];
    for (i, &o) in order.iter().enumerate() {
        rank[o] = i;
    }
    for (o, r) in rank.iter_mut().enumerate() {
        if *r == usize::MAX {
            *r = n_objects + o;
        }
    }
    rank
}

/// Plays the alternating game with the manipulator defending `targets`:
/// on each of their turns they take the unowned target the rival ranks
/// highest, and once every target is secured they fall back to their
/// tie-broken true order. Returns the outcome if the rival never captures a
/// target, or nothing if the set cannot be secured.
fn simulate_targets(
    n_objects: usize,
    targets: &BTreeSet<ObjectId>,
    rival: &[ObjectId],
    rival_rank: &[usize],
    sigma: &[ObjectId],
) -> Option<DiscreteAssignment> {
    let mut owner: Vec<Option<AgentId>> = vec![None; n_objects];
    let mut picks = Vec::new();
    let mut secured = 0usize;
    for turn in 0..n_objects {
        let agent = turn % 2;
        let object = if agent == 0 {
            if secured < targets.len() {
                let o = targets
                    .iter()
                    .copied()
                    .filter(|&o| owner[o].is_none())
                    .min_by_key(|&o| rival_rank[o])
                    .expect("unsecured targets remain unowned or were captured");
                secured += 1;
                o
            } else {
                match sigma.iter().copied().find(|&o| owner[o].is_none()) {
                    Some(o) => o,
                    None => continue,
                }
            }
        } else {
            match rival.iter().copied().find(|&o| owner[o].is_none()) {
                Some(o) => o,
                None => continue,
            }
        };
        if agent == 1 && targets.contains(&object) {
            return None;
        }
        owner[object] = Some(agent);
        picks.push(Pick {
            turn,
            agent,
            object,
        });
    }
    if secured < targets.len() {
        return None;
    }
    Some(DiscreteAssignment { owner, picks })
}

/// Exact best response of the first agent under expected utility, for two
/// agents. The utilities must cover every house and be consistent with the
/// agent's declared preference.
///
/// Works through the halved picking game: pairs of halves, ordered by
/// utility, form the manipulator's weak order there; the optimal winnable
/// half-set is computed by [`sa_best_response_2`]; and a strict house order
/// realising exactly those halves is recovered by listing the targeted
/// houses in the order their pairs are completed in the defending game.
/// Returns the house order to report and the eating-rule outcome under it.
pub fn eu_best_response_2(
    problem: &AssignmentProblem,
    u: &UtilityFunction,
) -> Result<(Vec<usize>, FractionalAssignment)> {
    if problem.n() != 2 {
        return Err(Error::Unsupported(
            "the expected-utility best response is implemented for two agents".into(),
        ));
    }
    let m = problem.m();
    if u.m() != m || (0..m).any(|h| u.get(h).is_none()) {
        return Err(Error::Input("a utility for every house is required".into()));
    }
    if !u.is_consistent_with(problem.pref(0)) {
        return Err(Error::Input(
            "utilities must strictly decrease along the declared preference".into(),
        ));
    }
    let (_, map) = half_house_reduction(problem)?;
    let classes: Vec<Vec<ObjectId>> = problem
        .pref(0)
        .iter()
        .map(|&h| map.halves(h).to_vec())
        .collect();
    let rival = halves_consecutive(&map, problem.pref(1));
    let br = sa_best_response_2(map.n_objects(), &classes, &rival, &rival)?;

    // Houses the manipulator gets any part of, ordered by the turn at which
    // their pair was fully picked up in the defending game; the rest follow
    // in true-preference order.
    let mut completion = vec![0usize; m];
    for p in br.outcome.picks() {
        let h = map.house_of(p.object);
        completion[h] = completion[h].max(p.turn);
    }
    let counts: Vec<usize> = (0..m)
        .map(|h| {
            map.halves(h)
                .iter()
                .filter(|o| br.won.contains(o))
                .count()
        })
        .collect();
    let mut order: Vec<usize> = (0..m).filter(|&h| counts[h] > 0).collect();
    order.sort_by_key(|&h| completion[h]);
    order.extend(problem.pref(0).iter().copied().filter(|&h| counts[h] == 0));

    // The order must reproduce the optimal half counts when played as a
    // strict halves-consecutive report; nudge misplaced houses until it
    // does.
    let mut tries = 0usize;
    loop {
        let achieved = play_house_order(&map, &order, &rival);
        match (0..m).find(|&h| achieved[h] != counts[h]) {
            None => break,
            Some(h) => {
                tries += 1;
                if tries > m * m {
                    return Err(Error::Internal(
                        "could not realise the optimal half counts as a house order".into(),
                    ));
                }
                let pos = order.iter().position(|&x| x == h).expect("house is listed");
                if achieved[h] < counts[h] {
                    if pos == 0 {
                        return Err(Error::Internal(
                            "a top-listed house still loses halves it should win".into(),
                        ));
                    }
                    order.swap(pos - 1, pos);
                } else {
                    if pos + 1 == m {
                        return Err(Error::Internal(
                            "a last-listed house still wins halves it should not".into(),
                        ));
                    }
                    order.swap(pos, pos + 1);
                }
            }
        }
    }

    let (assignment, _) = ps_with_report(problem, &order)?;
    debug_assert!((0..m).all(|h| *assignment.get(0, h) == rat(counts[h] as i64, 2)));
    Ok((order, assignment))
}

/// Plays the halved game under a strict house order for the manipulator and
/// returns how many halves of each house they win.
fn play_house_order(map: &HalfHouseMap, order: &[usize], rival: &[ObjectId]) -> Vec<usize> {
    let inst = SAInstance::new(
        map.n_objects(),
        vec![halves_consecutive(map, order), rival.to_vec()],
        alternating_policy(2, map.n_objects()),
    )
    .expect("expanded orders are valid");
    let outcome = sequential_allocation(&inst);
    (0..map.n_houses())
        .map(|h| {
            map.halves(h)
                .iter()
                .filter(|&&o| outcome.owner(o) == Some(0))
                .count()
        })
        .collect()
}
