//! Event-driven exact simulation of the simultaneous-eating rule.
//!
//! Every agent consumes probability mass of his most preferred not-yet-
//! exhausted listed house at unit speed. The simulation jumps between
//! exhaustion events (at most one per house), so all quantities stay exact
//! rationals. Agents whose listed houses are all gone stop eating, which is
//! what makes partial manipulator lists meaningful.

use crate::error::Result;
use crate::model::{AssignmentProblem, FractionalAssignment, HouseId};
use crate::rational::Rational;
use num_traits::Zero;

/// Full record of one eating run.
#[derive(Debug, Clone)]
pub struct EatingTrace {
    /// Eating start time per house; `None` when nobody ever ate the house.
    pub start: Vec<Option<Rational>>,
    /// Exhaustion events in time order. Houses finishing at the same instant
    /// form one batch, listed in increasing house id.
    pub events: Vec<(Rational, Vec<HouseId>)>,
    /// Total amount of each house eaten by each agent (n×m).
    pub consumption: Vec<Vec<Rational>>,
}

/// Snapshot handed to an observer at the start of every simulation interval,
/// after all agents have re-targeted.
pub struct EatingState<'a> {
    /// Current time.
    pub time: &'a Rational,
    /// Mass left of each house.
    pub remaining: &'a [Rational],
    /// House each agent is currently eating (`None` once his list is done).
    pub targets: &'a [Option<HouseId>],
}

impl EatingState<'_> {
    /// Number of agents currently eating `house`.
    pub fn eaters(&self, house: HouseId) -> usize {
        self.targets.iter().filter(|t| **t == Some(house)).count()
    }

    /// Time until `house` exhausts at current eating speeds, if anyone is
    /// eating it.
    pub fn time_to_exhaust(&self, house: HouseId) -> Option<Rational> {
        match self.eaters(house) {
            0 => None,
            k => Some(&self.remaining[house] / Rational::from_integer(k.into())),
        }
    }
}

/// Runs the eating rule and returns the assignment plus its trace.
pub fn ps(problem: &AssignmentProblem) -> Result<(FractionalAssignment, EatingTrace)> {
    simulate(problem, None, |_| {})
}

/// [`ps`] with a callback invoked at the start of every interval (including
/// time 0), after exhausted houses have been removed and agents re-targeted.
pub fn ps_with_observer(
    problem: &AssignmentProblem,
    observer: impl FnMut(&EatingState),
) -> Result<(FractionalAssignment, EatingTrace)> {
    simulate(problem, None, observer)
}

/// [`ps`] with agent 0's list replaced by `report` (itself possibly partial),
/// leaving every other agent unchanged. Avoids rebuilding the problem, which
/// matters to callers running many simulations per instance.
pub fn ps_with_report(
    problem: &AssignmentProblem,
    report: &[HouseId],
) -> Result<(FractionalAssignment, EatingTrace)> {
    crate::model::validate_list(report, problem.m(), "reported list")?;
    simulate(problem, Some(report), |_| {})
}

/// [`ps_with_report`] with an interval observer, for callers that need to
/// watch the simulation while agent 0 plays a substituted list.
pub fn ps_with_report_and_observer(
    problem: &AssignmentProblem,
    report: &[HouseId],
    observer: impl FnMut(&EatingState),
) -> Result<(FractionalAssignment, EatingTrace)> {
    crate::model::validate_list(report, problem.m(), "reported list")?;
    simulate(problem, Some(report), observer)
}

fn simulate(
    problem: &AssignmentProblem,
    report0: Option<&[HouseId]>,
    mut observer: impl FnMut(&EatingState),
) -> Result<(FractionalAssignment, EatingTrace)> {
    let n = problem.n();
    let m = problem.m();
    let one = Rational::from_integer(1.into());
    let lists: Vec<&[HouseId]> = (0..n)
        .map(|a| match (a, report0) {
            (0, Some(r)) => r,
            _ => problem.pref(a),
        })
        .collect();

    let mut remaining: Vec<Rational> = vec![one.clone(); m];
    let mut exhausted = vec![false; m];
    let mut cursor: Vec<usize> = vec![0; n];
    let mut targets: Vec<Option<HouseId>> = vec![None; n];
    let mut consumption = vec![vec![Rational::zero(); m]; n];
    let mut start: Vec<Option<Rational>> = vec![None; m];
    let mut events: Vec<(Rational, Vec<HouseId>)> = Vec::new();
    let mut time = Rational::zero();

    loop {
        // Re-target every agent to his first still-available listed house.
        let mut eaters = vec![0usize; m];
        for a in 0..n {
            let list = lists[a];
            while cursor[a] < list.len() && exhausted[list[cursor[a]]] {
                cursor[a] += 1;
            }
            targets[a] = list.get(cursor[a]).copied();
            if let Some(h) = targets[a] {
                eaters[h] += 1;
                if start[h].is_none() {
                    start[h] = Some(time.clone());
                }
            }
        }

        // Next exhaustion: the smallest remaining/eaters over active houses.
        let mut dt: Option<Rational> = None;
        for h in 0..m {
            if eaters[h] > 0 {
                let t = &remaining[h] / Rational::from_integer(eaters[h].into());
                if dt.as_ref().is_none_or(|best| t < *best) {
                    dt = Some(t);
                }
            }
        }
        let Some(dt) = dt else { break };

        observer(&EatingState {
            time: &time,
            remaining: &remaining,
            targets: &targets,
        });

        // Advance: each eater of h consumes dt of it.
        let mut batch = Vec::new();
        for h in 0..m {
            if eaters[h] > 0 {
                remaining[h] -= &dt * Rational::from_integer(eaters[h].into());
                if remaining[h].is_zero() {
                    exhausted[h] = true;
                    batch.push(h);
                }
            }
        }
        for a in 0..n {
            if let Some(h) = targets[a] {
                consumption[a][h] += &dt;
            }
        }
        time += dt;
        debug_assert!(!batch.is_empty(), "time advanced without an exhaustion");
        events.push((time.clone(), batch));
    }

    let assignment = FractionalAssignment::from_rows(consumption.clone())?;
    Ok((
        assignment,
        EatingTrace {
            start,
            events,
            consumption,
        },
    ))
}

/// Eating start time per house (`None` for houses nobody eats).
pub fn est(problem: &AssignmentProblem) -> Result<Vec<Option<Rational>>> {
    Ok(ps(problem)?.1.start)
}

/// Agent 0's allocation row when he reports `list` instead of his own
/// preference; all other agents are unchanged.
pub fn ps1(list: &[HouseId], problem: &AssignmentProblem) -> Result<Vec<Rational>> {
    let (assignment, _) = ps_with_report(problem, list)?;
    Ok(assignment.row(0).to_vec())
}

/// The worked three-agent example used across the test suite:
/// a1: h1,h2,h3; a2: h2,h1,h3; a3: h2,h3,h1.
#[cfg(test)]
pub(crate) fn three_agent_example() -> AssignmentProblem {
    AssignmentProblem::from_prefs(vec![vec![0, 1, 2], vec![1, 0, 2], vec![1, 2, 0]], 3).unwrap()
}
