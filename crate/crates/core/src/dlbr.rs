//! Downward-lexicographic best response for the manipulating agent.
//!
//! The response is built iteratively over the manipulator's true-preference
//! prefixes: after round `i` the kept list is the canonical ("stingy") best
//! response restricted to his `i` most preferred houses. Moving to round
//! `i+1` inserts the next house at the earliest position that leaves the
//! shares of all previously covered houses untouched, re-ordering the houses
//! behind the insertion point by how soon the rival agents threaten them.
//!
//! The result is simultaneously a best response under stochastic dominance:
//! no other report yields an allocation that dominates it.

use crate::error::{Error, Result};
use crate::model::{validate_list, AssignmentProblem, FractionalAssignment, HouseId};
use crate::ps::{ps_with_report, EatingTrace};
use crate::rational::{is_fractional, Rational};
use num_traits::{One, Zero};
use std::cmp::Ordering;

/// The kept list after one construction round, with its cached allocation.
#[derive(Debug, Clone)]
pub struct PartialResponse {
    /// Number of true-preference houses covered so far (the round index).
    pub round: usize,
    /// The canonical best-response list over those houses. May be shorter
    /// than `round`: houses the manipulator cannot get anything of are left
    /// out entirely.
    pub list: Vec<HouseId>,
    /// The manipulator's full allocation row when reporting `list`.
    pub row: Vec<Rational>,
}

/// Compares eating start times where an absent time means "never eaten",
/// which sorts after every finite time.
fn est_cmp(a: &Option<Rational>, b: &Option<Rational>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Greater,
        (Some(_), None) => Ordering::Less,
        (Some(x), Some(y)) => x.cmp(y),
    }
}

/// True when `a` starts no later than `b` (absent = never).
fn est_le(a: &Option<Rational>, b: &Option<Rational>) -> bool {
    est_cmp(a, b) != Ordering::Greater
}

fn run(problem: &AssignmentProblem, report: &[HouseId]) -> Result<(Vec<Rational>, EatingTrace)> {
    let (assignment, trace) = ps_with_report(problem, report)?;
    Ok((assignment.row(0).to_vec(), trace))
}

/// Rank of each house in the manipulator's true preference; unlisted houses
/// sort last, by id.
fn true_ranks(problem: &AssignmentProblem) -> Vec<usize> {
    let m = problem.m();
    let mut rank = vec![0usize; m];
    for (h, slot) in rank.iter_mut().enumerate() {
        *slot = problem.rank(0, h).unwrap_or(m + h);
    }
    rank
}

/// Orders `candidates` by how soon rivals start eating them when the
/// manipulator reports `prefix`: increasing eating start time, ties broken by
/// the manipulator's true preference.
pub fn stingy_order(
    problem: &AssignmentProblem,
    prefix: &[HouseId],
    candidates: &[HouseId],
) -> Result<Vec<HouseId>> {
    validate_list(prefix, problem.m(), "prefix")?;
    validate_list(candidates, problem.m(), "candidates")?;
    if candidates.iter().any(|h| prefix.contains(h)) {
        return Err(Error::Input("candidates must be disjoint from the prefix".into()));
    }
    let (_, trace) = run(problem, prefix)?;
    let rank = true_ranks(problem);
    let mut out = candidates.to_vec();
    out.sort_by(|&a, &b| {
        est_cmp(&trace.start[a], &trace.start[b]).then_with(|| rank[a].cmp(&rank[b]))
    });
    Ok(out)
}

/// Inserts `new_house` into `l_prev` at position `q` (1-based) and rebuilds
/// the suffix: position by position, the next house is whichever remaining
/// one the rivals threaten soonest under the list built so far. If the
/// completed list gives the manipulator nothing of `new_house`, the insertion
/// is abandoned and `l_prev` is returned unchanged.
///
/// Returns the list together with the manipulator's allocation row under it.
pub fn insert_candidate(
    problem: &AssignmentProblem,
    l_prev: &[HouseId],
    new_house: HouseId,
    q: usize,
) -> Result<(Vec<HouseId>, Vec<Rational>)> {
    validate_list(l_prev, problem.m(), "previous list")?;
    if new_house >= problem.m() || l_prev.contains(&new_house) {
        return Err(Error::Input("new house must be a fresh valid house".into()));
    }
    if q < 1 || q > l_prev.len() + 1 {
        return Err(Error::Input(format!(
            "insertion position {q} out of range 1..={}",
            l_prev.len() + 1
        )));
    }
    let (row_prev, _) = run(problem, l_prev)?;
    build_candidate(problem, l_prev, &row_prev, new_house, q, &true_ranks(problem))
        .map(|c| (c.list, c.row))
}

struct Candidate {
    list: Vec<HouseId>,
    row: Vec<Rational>,
}

/// Core of [`insert_candidate`]; takes the previous row as a cache so the
/// abandoned-insertion case costs nothing extra.
fn build_candidate(
    problem: &AssignmentProblem,
    l_prev: &[HouseId],
    row_prev: &[Rational],
    new_house: HouseId,
    q: usize,
    rank: &[usize],
) -> Result<Candidate> {
    let target_len = l_prev.len() + 1;
    let mut list: Vec<HouseId> = l_prev[..q - 1].to_vec();
    list.push(new_house);
    let row = loop {
        let (row, trace) = run(problem, &list)?;
        if list.len() == target_len {
            break row;
        }
        // Append the most threatened not-yet-placed house.
        let next = l_prev
            .iter()
            .copied()
            .filter(|h| !list.contains(h))
            .min_by(|&a, &b| {
                est_cmp(&trace.start[a], &trace.start[b]).then_with(|| rank[a].cmp(&rank[b]))
            })
            .expect("list shorter than target implies a leftover house");
        list.push(next);
    };
    if row[new_house].is_zero() {
        return Ok(Candidate {
            list: l_prev.to_vec(),
            row: row_prev.to_vec(),
        });
    }
    Ok(Candidate { list, row })
}

/// All intermediate kept lists of the round-by-round construction, one per
/// true-preference prefix. The last entry is the full best response.
pub fn stingy_rounds(problem: &AssignmentProblem) -> Result<Vec<PartialResponse>> {
    let m = problem.m();
    if problem.pref(0).len() != m {
        return Err(Error::Input(
            "the manipulator's true preference must rank every house".into(),
        ));
    }
    let tp = problem.pref(0).to_vec();
    let rank = true_ranks(problem);
    let one = Rational::one();

    // Round 1: listing the single top house always yields a positive share.
    let (row, _) = run(problem, &tp[..1])?;
    let mut cur = PartialResponse {
        round: 1,
        list: tp[..1].to_vec(),
        row,
    };
    let mut rounds = vec![cur.clone()];

    for i in 2..=m {
        let hi = tp[i - 1];
        // Insertion may not touch anything up to the last partially received
        // position p; scan positions p+1.. until the kept shares survive.
        let p = cur
            .list
            .iter()
            .rposition(|&h| is_fractional(&cur.row[h]))
            .map_or(0, |k| k + 1);
        let end = cur.list.len() + 1;
        let mut q = p + 1;
        // The candidate at q-1, kept only while it left prior shares intact.
        let mut prev: Option<Candidate> = None;
        cur = loop {
            if q > end {
                return Err(Error::Internal(format!(
                    "position scan overran round {i} (this is a bug)"
                )));
            }
            let cand = build_candidate(problem, &cur.list, &cur.row, hi, q, &rank)?;
            let intact = tp[..i - 1].iter().all(|&h| cand.row[h] == cur.row[h]);
            if !intact {
                prev = None;
                q += 1;
                continue;
            }
            let share = &cand.row[hi];
            if share < &one {
                // The new house can no longer be had in full at this or any
                // later position. A remembered full-share candidate beats
                // both a partial share and dropping the house entirely.
                break match prev {
                    Some(full) => to_response(i, full),
                    None if share.is_zero() => cur,
                    None => to_response(i, cand),
                };
            }
            // Full share: accept only if no house behind the insertion point
            // is threatened at least as soon as the new house itself.
            let (_, trace) = run(problem, &cand.list[..q - 1])?;
            let threatened = cand.list[q..]
                .iter()
                .any(|&h| est_le(&trace.start[h], &trace.start[hi]));
            if threatened {
                prev = Some(cand);
                q += 1;
            } else {
                break to_response(i, cand);
            }
        };
        cur.round = i;
        debug_assert!(kept_list_invariant(&cur));
        rounds.push(cur.clone());
    }
    Ok(rounds)
}

fn to_response(round: usize, c: Candidate) -> PartialResponse {
    PartialResponse {
        round,
        list: c.list,
        row: c.row,
    }
}

/// Invariant of every kept list: no zero-share houses, and everything after
/// the last partially received house is received in full.
fn kept_list_invariant(r: &PartialResponse) -> bool {
    let no_zero = r.list.iter().all(|&h| !r.row[h].is_zero());
    let after_last_partial_full = match r.list.iter().rposition(|&h| is_fractional(&r.row[h])) {
        None => true,
        Some(k) => r.list[k + 1..].iter().all(|&h| r.row[h].is_one()),
    };
    no_zero && after_last_partial_full
}

/// Computes the manipulator's best response under the downward-lexicographic
/// order: the unique canonical list whose allocation no other report beats.
/// Returns the list and the full assignment when he reports it.
pub fn dl_best_response(
    problem: &AssignmentProblem,
) -> Result<(Vec<HouseId>, FractionalAssignment)> {
    let best = stingy_rounds(problem)?.pop().expect("at least one round");
    let (assignment, _) = ps_with_report(problem, &best.list)?;
    Ok((best.list, assignment))
}

/// Best response under stochastic dominance: the same list as
/// [`dl_best_response`] (its allocation is dominated by no other report's).
pub fn sd_best_response(problem: &AssignmentProblem) -> Result<Vec<HouseId>> {
    Ok(dl_best_response(problem)?.0)
}
