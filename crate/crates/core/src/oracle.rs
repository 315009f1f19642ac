//! Exhaustive-search oracles: the ground truth the fast algorithms are
//! checked against.
//!
//! For small numbers of houses every report the first agent could make is
//! enumerated and evaluated under the eating rule. This is factorial work,
//! so it is guarded by a cap, but it makes no algorithmic assumptions
//! whatsoever — which is exactly what a reference answer should do.

use crate::error::{Error, Result};
use crate::model::{
    dl_compare, eu_value, sd_compare, AssignmentProblem, ComparisonResult, HouseId,
    UtilityFunction,
};
use crate::ps::{ps, ps_with_report};
use crate::rational::Rational;
use itertools::Itertools;
use std::collections::BTreeMap;
use std::fmt;

/// What "better" means when comparing two outcomes for the first agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// Maximise expected utility under a given utility function.
    Eu,
    /// Lexicographic comparison along the agent's preference order.
    Dl,
    /// Stochastic dominance: better share of every preference prefix.
    Sd,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Eu => "expected-utility",
            Criterion::Dl => "lexicographic",
            Criterion::Sd => "stochastic-dominance",
        })
    }
}

/// Guard rails for the factorial search.
#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Refuse problems with more houses than this unless forced.
    pub cap: usize,
    /// Run regardless of the cap.
    pub force: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            cap: 8,
            force: false,
        }
    }
}

/// Everything the exhaustive search learned about the first agent's options.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub criterion: Criterion,
    /// The allocation row of the truthful report.
    pub truthful_row: Vec<Rational>,
    /// Expected utility of the truthful row (expected-utility runs only).
    pub truthful_eu: Option<Rational>,
    /// The optimal expected utility (expected-utility runs only).
    pub best_eu: Option<Rational>,
    /// The optimal rows: exactly one for the lexicographic criterion, the
    /// distinct value-attaining rows for expected utility, and the full set
    /// of mutually undominated achievable rows for stochastic dominance.
    pub best_rows: Vec<Vec<Rational>>,
    /// Every complete report that attains one of `best_rows`, in
    /// lexicographic report order.
    pub optimal_reports: Vec<Vec<HouseId>>,
    /// Whether the truthful report is already optimal (for stochastic
    /// dominance: undominated).
    pub truthful_is_optimal: bool,
    /// When few enough houses allow it, reports that skip houses are swept
    /// too: `Some(true)` means none of them beats the complete-list optimum.
    pub partial_sweep: Option<bool>,
}

/// Enumerates the first agent's complete reports in lexicographic order,
/// handing each one's allocation row to the callback.
fn for_each_complete_report(
    problem: &AssignmentProblem,
    mut f: impl FnMut(&[HouseId], Vec<Rational>) -> Result<()>,
) -> Result<()> {
    let m = problem.m();
    let mut report: Vec<HouseId> = (0..m).collect();
    loop {
        let (assignment, _) = ps_with_report(problem, &report)?;
        f(&report, assignment.rows()[0].clone())?;
        if !next_permutation(&mut report) {
            return Ok(());
        }
    }
}

/// Advances `perm` to the lexicographically next permutation in place;
/// returns false (leaving it unchanged) when it is already the last one.
fn next_permutation(perm: &mut [usize]) -> bool {
    if perm.len() < 2 {
        return false;
    }
    let mut i = perm.len() - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = perm.len() - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// How many houses a partial-report sweep is still affordable for.
const PARTIAL_SWEEP_LIMIT: usize = 5;

/// Finds the first agent's best achievable outcome by trying every complete
/// report. With at most [`PARTIAL_SWEEP_LIMIT`] houses, reports that skip
/// houses are additionally checked to confirm they change nothing.
///
/// A utility function covering every house is required for (and only used
/// by) the expected-utility criterion.
pub fn brute_force_best_response(
    problem: &AssignmentProblem,
    criterion: Criterion,
    u: Option<&UtilityFunction>,
    opts: &OracleOptions,
) -> Result<OracleReport> {
    let m = problem.m();
    if m > opts.cap && !opts.force {
        return Err(Error::CapExceeded(format!(
            "{m} houses means {m}! reports to try (cap is {}); raise the cap or force the run",
            opts.cap
        )));
    }
    let u = match criterion {
        Criterion::Eu => {
            let u = u.ok_or_else(|| {
                Error::Input("the expected-utility criterion needs a utility function".into())
            })?;
            if u.m() != m || (0..m).any(|h| u.get(h).is_none()) {
                return Err(Error::Input("a utility for every house is required".into()));
            }
            Some(u)
        }
        _ => None,
    };
    let truthful_row = ps(problem)?.0.rows()[0].clone();
    let truthful_eu = u.map(|u| eu_value(&truthful_row, u)).transpose()?;

    let mut report = match criterion {
        Criterion::Eu => eu_search(problem, u.expect("checked above"))?,
        Criterion::Dl => dl_search(problem)?,
        Criterion::Sd => sd_search(problem)?,
    };
    report.truthful_row = truthful_row;
    report.truthful_eu = truthful_eu;
    report.truthful_is_optimal = match criterion {
        Criterion::Eu => report.best_eu == report.truthful_eu,
        Criterion::Dl => report.best_rows[0] == report.truthful_row,
        Criterion::Sd => report.best_rows.contains(&report.truthful_row),
    };
    if m <= PARTIAL_SWEEP_LIMIT {
        report.partial_sweep = Some(partial_sweep(problem, &report, u)?);
    }
    Ok(report)
}

fn empty_report(criterion: Criterion) -> OracleReport {
    OracleReport {
        criterion,
        truthful_row: Vec::new(),
        truthful_eu: None,
        best_eu: None,
        best_rows: Vec::new(),
        optimal_reports: Vec::new(),
        truthful_is_optimal: false,
        partial_sweep: None,
    }
}

fn eu_search(problem: &AssignmentProblem, u: &UtilityFunction) -> Result<OracleReport> {
    let mut best: Option<Rational> = None;
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    let mut reports: Vec<Vec<HouseId>> = Vec::new();
    for_each_complete_report(problem, |report, row| {
        let v = eu_value(&row, u)?;
        if best.as_ref().is_none_or(|b| v > *b) {
            best = Some(v);
            rows = vec![row];
            reports = vec![report.to_vec()];
        } else if best.as_ref() == Some(&v) {
            if !rows.contains(&row) {
                rows.push(row);
            }
            reports.push(report.to_vec());
        }
        Ok(())
    })?;
    Ok(OracleReport {
        best_eu: best,
        best_rows: rows,
        optimal_reports: reports,
        ..empty_report(Criterion::Eu)
    })
}

fn dl_search(problem: &AssignmentProblem) -> Result<OracleReport> {
    let pref = problem.pref(0);
    let mut best: Option<Vec<Rational>> = None;
    let mut reports: Vec<Vec<HouseId>> = Vec::new();
    for_each_complete_report(problem, |report, row| {
        match &best {
            None => {
                best = Some(row);
                reports = vec![report.to_vec()];
            }
            Some(b) => match dl_compare(&row, b, pref)? {
                ComparisonResult::FirstPreferred => {
                    best = Some(row);
                    reports = vec![report.to_vec()];
                }
                ComparisonResult::Equal => reports.push(report.to_vec()),
                _ => {}
            },
        }
        Ok(())
    })?;
    Ok(OracleReport {
        best_rows: vec![best.expect("at least one report exists")],
        optimal_reports: reports,
        ..empty_report(Criterion::Dl)
    })
}

fn sd_search(problem: &AssignmentProblem) -> Result<OracleReport> {
    let pref = problem.pref(0);
    // Distinct achievable rows, remembering discovery order and reports.
    let mut index: BTreeMap<Vec<Rational>, usize> = BTreeMap::new();
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    let mut reports_per_row: Vec<Vec<Vec<HouseId>>> = Vec::new();
    for_each_complete_report(problem, |report, row| {
        let k = *index.entry(row.clone()).or_insert_with(|| {
            rows.push(row);
            reports_per_row.push(Vec::new());
            rows.len() - 1
        });
        reports_per_row[k].push(report.to_vec());
        Ok(())
    })?;
    let dominated = |r: &[Rational]| -> Result<bool> {
        for other in &rows {
            if sd_compare(other, r, pref)? == ComparisonResult::FirstPreferred {
                return Ok(true);
            }
        }
        Ok(false)
    };
    let mut best_rows = Vec::new();
    let mut optimal_reports = Vec::new();
    for (k, row) in rows.iter().enumerate() {
        if !dominated(row)? {
            best_rows.push(row.clone());
            optimal_reports.extend(reports_per_row[k].iter().cloned());
        }
    }
    optimal_reports.sort();
    Ok(OracleReport {
        best_rows,
        optimal_reports,
        ..empty_report(Criterion::Sd)
    })
}

/// Checks that no report skipping houses beats the complete-list optimum.
fn partial_sweep(
    problem: &AssignmentProblem,
    report: &OracleReport,
    u: Option<&UtilityFunction>,
) -> Result<bool> {
    let m = problem.m();
    let pref = problem.pref(0);
    for k in 1..m {
        for partial in (0..m).permutations(k) {
            let (assignment, _) = ps_with_report(problem, &partial)?;
            let row = &assignment.rows()[0];
            let beats = match report.criterion {
                Criterion::Eu => {
                    let v = eu_value(row, u.expect("utility present for this criterion"))?;
                    Some(&v) > report.best_eu.as_ref()
                }
                Criterion::Dl => {
                    dl_compare(row, &report.best_rows[0], pref)?
                        == ComparisonResult::FirstPreferred
                }
                Criterion::Sd => {
                    let mut dominates = false;
                    for best in &report.best_rows {
                        if sd_compare(row, best, pref)? == ComparisonResult::FirstPreferred {
                            dominates = true;
                            break;
                        }
                    }
                    dominates
                }
            };
            if beats {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// For each agent in turn: could they obtain a better outcome (under the
/// criterion) by lying, with everyone else reporting truthfully? Answered
/// by exhaustive search, so the same cap applies.
///
/// For the expected-utility criterion, `positional` gives the utility of
/// every agent's first, second, ... choice — one shared scale, applied to
/// each agent's own ranking. It must strictly decrease.
pub fn is_manipulable(
    problem: &AssignmentProblem,
    criterion: Criterion,
    positional: Option<&[Rational]>,
    opts: &OracleOptions,
) -> Result<Vec<bool>> {
    let m = problem.m();
    if problem.prefs().iter().any(|p| p.len() != m) {
        return Err(Error::Unsupported(
            "manipulability of a profile is defined for complete preference lists".into(),
        ));
    }
    let positional = match criterion {
        Criterion::Eu => {
            let p = positional.ok_or_else(|| {
                Error::Input("the expected-utility criterion needs positional utilities".into())
            })?;
            if p.len() != m {
                return Err(Error::Input(format!(
                    "expected {m} positional utilities, got {}",
                    p.len()
                )));
            }
            if p.windows(2).any(|w| w[0] <= w[1]) {
                return Err(Error::Input("positional utilities must strictly decrease".into()));
            }
            Some(p)
        }
        _ => None,
    };
    let mut flags = Vec::with_capacity(problem.n());
    for agent in 0..problem.n() {
        let relabeled = problem.with_agent_first(agent)?;
        let u = positional.map(|p| {
            let mut values = vec![None; m];
            for (k, &h) in relabeled.pref(0).iter().enumerate() {
                values[h] = Some(p[k].clone());
            }
            UtilityFunction::new(values)
        });
        let report = brute_force_best_response(&relabeled, criterion, u.as_ref(), opts)?;
        flags.push(!report.truthful_is_optimal);
    }
    Ok(flags)
}
