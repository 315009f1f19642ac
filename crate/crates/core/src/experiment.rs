//! Seeded manipulability experiments.
//!
//! Draws uniform random strict preference profiles over a grid of problem
//! sizes and measures, per (n, m) cell, how often at least one agent can
//! gain by misreporting, plus what each profitable deviation does to
//! utilitarian welfare (the sum of all agents' expected utilities under
//! sampled utility functions consistent with their true rankings).
//!
//! Detection uses the constructive algorithms where they exist — the
//! lexicographic best response for any size, the two-agent expected-utility
//! best response — and falls back to the brute-force oracle for the
//! remaining combinations, skipping cells where that enumeration would be
//! infeasible.
//!
//! Everything is deterministic given the configured seed: each trial owns an
//! RNG derived from (seed, cell index, trial index), so parallel execution
//! and aggregation order cannot change any number in the report.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    dl_compare, eu_value, AssignmentProblem, ComparisonResult, FractionalAssignment,
    UtilityFunction,
};
use crate::oracle::{brute_force_best_response, Criterion, OracleOptions};
use crate::ps::{ps, ps_with_report};
use crate::rational::{int, rat, rational_serde, Rational};
use crate::seqalloc::eu_best_response_2;

/// Grid and sampling parameters for one experiment run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Agent counts to sweep.
    pub ns: Vec<usize>,
    /// House counts to sweep (cells are the cross product `ns x ms`).
    pub ms: Vec<usize>,
    /// Profiles drawn per cell.
    pub trials: usize,
    /// Root seed; fixing it fixes the entire report byte for byte.
    pub seed: u64,
    /// Which notion of "profitable deviation" to test.
    pub criterion: Criterion,
    /// Utility gaps between consecutively ranked houses are drawn uniformly
    /// from `1..=utility_gap`.
    #[serde(default = "default_utility_gap")]
    pub utility_gap: u64,
    /// Largest house count the brute-force fallback will enumerate (`m!`
    /// reports per agent); beyond it the cell is skipped with a notice.
    #[serde(default = "default_oracle_cap")]
    pub oracle_cap: usize,
}

fn default_utility_gap() -> u64 {
    9
}

fn default_oracle_cap() -> usize {
    6
}

/// Aggregated results for one (n, m) cell.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CellReport {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    /// Present when the cell was not run (infeasible detection), with the
    /// reason; all counts are then zero.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub skipped: Option<String>,
    /// Profiles on which at least one agent had a profitable deviation.
    pub manipulable_profiles: usize,
    /// Total (profile, agent) pairs with a profitable deviation.
    pub manipulable_agents: usize,
    /// Total (profile, agent) pairs examined.
    pub agent_checks: usize,
    /// Welfare movement across all profitable deviations, each applied
    /// unilaterally while everyone else stays truthful.
    pub welfare_increased: usize,
    pub welfare_decreased: usize,
    pub welfare_unchanged: usize,
    /// Exact sum of all welfare changes (manipulated minus truthful).
    #[serde(with = "rational_serde")]
    pub net_welfare_delta: Rational,
}

impl CellReport {
    /// Fraction of sampled profiles that were manipulable.
    pub fn manipulable_fraction(&self) -> Rational {
        if self.trials == 0 {
            Rational::default()
        } else {
            rat(self.manipulable_profiles as i64, self.trials as i64)
        }
    }
}

/// Full experiment output: the configuration plus one report per cell, in
/// `ns`-major order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub cells: Vec<CellReport>,
}

impl ExperimentReport {
    /// The manipulable fractions for a fixed agent count, ordered by house
    /// count — the trend the headline experiment tracks.
    pub fn fractions_for_n(&self, n: usize) -> Vec<(usize, Rational)> {
        self.cells
            .iter()
            .filter(|c| c.n == n && c.skipped.is_none())
            .map(|c| (c.m, c.manipulable_fraction()))
            .collect()
    }
}

/// Draws a profile of independent uniform strict rankings.
pub fn random_profile<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    rng: &mut R,
) -> Result<AssignmentProblem> {
    let prefs = (0..n)
        .map(|_| {
            let mut list: Vec<usize> = (0..m).collect();
            list.shuffle(rng);
            list
        })
        .collect();
    AssignmentProblem::from_prefs(prefs, m)
}

/// Samples strictly decreasing positive integer utilities along `pref`
/// (consecutive gaps uniform in `1..=gap`), returned indexed by house.
pub fn random_utilities<R: Rng + ?Sized>(
    pref: &[usize],
    m: usize,
    gap: u64,
    rng: &mut R,
) -> UtilityFunction {
    debug_assert_eq!(pref.len(), m, "utility sampling needs a complete ranking");
    let mut values = vec![int(0); m];
    let mut acc = 0i64;
    for &h in pref.iter().rev() {
        acc += rng.gen_range(1..=gap) as i64;
        values[h] = int(acc);
    }
    UtilityFunction::complete(values)
}

// One agent's profitable deviation: the resulting full outcome.
struct Deviation {
    outcome: FractionalAssignment,
}

// Per-trial tallies folded into a cell report.
struct TrialOutcome {
    manipulable_agents: usize,
    welfare_increased: usize,
    welfare_decreased: usize,
    welfare_unchanged: usize,
    net_welfare_delta: Rational,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn trial_seed(root: u64, cell: usize, trial: usize) -> u64 {
    splitmix64(root ^ splitmix64(((cell as u64) << 32) ^ trial as u64))
}

/// Finds a profitable deviation for agent 0 of `problem` (already relabeled
/// so the agent under test sits first), or `None` if truth is optimal.
fn find_deviation(
    problem: &AssignmentProblem,
    criterion: Criterion,
    u0: &UtilityFunction,
    truthful_row: &[Rational],
    oracle_cap: usize,
) -> Result<Option<Deviation>> {
    let opts = OracleOptions { cap: oracle_cap, ..OracleOptions::default() };
    match criterion {
        Criterion::Dl => {
            let (_, outcome) = crate::dlbr::dl_best_response(problem)?;
            let better = dl_compare(outcome.row(0), truthful_row, problem.pref(0))?
                == ComparisonResult::FirstPreferred;
            Ok(better.then_some(Deviation { outcome }))
        }
        Criterion::Eu if problem.n() == 2 => {
            let (_, outcome) = eu_best_response_2(problem, u0)?;
            let better =
                eu_value(outcome.row(0), u0)? > eu_value(truthful_row, u0)?;
            Ok(better.then_some(Deviation { outcome }))
        }
        Criterion::Eu => {
            let report =
                brute_force_best_response(problem, Criterion::Eu, Some(u0), &opts)?;
            if report.truthful_is_optimal {
                return Ok(None);
            }
            let (outcome, _) = ps_with_report(problem, &report.optimal_reports[0])?;
            Ok(Some(Deviation { outcome }))
        }
        Criterion::Sd => {
            let report =
                brute_force_best_response(problem, Criterion::Sd, None, &opts)?;
            if report.truthful_is_optimal {
                return Ok(None);
            }
            // Deviate to the first report whose outcome strictly dominates
            // the truthful row.
            let dominating = report
                .optimal_reports
                .iter()
                .find_map(|r| {
                    let (outcome, _) = ps_with_report(problem, r).ok()?;
                    let cmp =
                        crate::model::sd_compare(outcome.row(0), truthful_row, problem.pref(0))
                            .ok()?;
                    (cmp == ComparisonResult::FirstPreferred).then_some(outcome)
                })
                .ok_or_else(|| {
                    Error::Internal(
                        "truthful row reported dominated, but no maximal report dominates it"
                            .into(),
                    )
                })?;
            Ok(Some(Deviation { outcome: dominating }))
        }
    }
}

fn run_trial(
    n: usize,
    m: usize,
    criterion: Criterion,
    utility_gap: u64,
    oracle_cap: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TrialOutcome> {
    let problem = random_profile(n, m, rng)?;
    let utilities: Vec<UtilityFunction> = (0..n)
        .map(|a| random_utilities(problem.pref(a), m, utility_gap, rng))
        .collect();
    let (truthful, _) = ps(&problem)?;
    let truthful_welfare: Rational = (0..n)
        .map(|a| eu_value(truthful.row(a), &utilities[a]))
        .sum::<Result<Rational>>()?;

    let mut out = TrialOutcome {
        manipulable_agents: 0,
        welfare_increased: 0,
        welfare_decreased: 0,
        welfare_unchanged: 0,
        net_welfare_delta: Rational::default(),
    };
    for agent in 0..n {
        let relabeled = problem.with_agent_first(agent)?;
        // `with_agent_first` swaps agents 0 and `agent`; mirror the swap
        // when pairing outcome rows with utility functions.
        let u_of = |k: usize| -> &UtilityFunction {
            if k == 0 {
                &utilities[agent]
            } else if k == agent {
                &utilities[0]
            } else {
                &utilities[k]
            }
        };
        let deviation = find_deviation(
            &relabeled,
            criterion,
            u_of(0),
            truthful.row(agent),
            oracle_cap,
        )?;
        if let Some(deviation) = deviation {
            out.manipulable_agents += 1;
            let welfare: Rational = (0..n)
                .map(|k| eu_value(deviation.outcome.row(k), u_of(k)))
                .sum::<Result<Rational>>()?;
            let delta = welfare - &truthful_welfare;
            match delta.cmp(&Rational::default()) {
                std::cmp::Ordering::Greater => out.welfare_increased += 1,
                std::cmp::Ordering::Less => out.welfare_decreased += 1,
                std::cmp::Ordering::Equal => out.welfare_unchanged += 1,
            }
            out.net_welfare_delta += delta;
        }
    }
    Ok(out)
}

/// Whether a cell's detection method is feasible, or why not.
fn cell_notice(criterion: Criterion, n: usize, m: usize, oracle_cap: usize) -> Option<String> {
    let needs_oracle = match criterion {
        Criterion::Dl => false,
        Criterion::Eu => n > 2,
        Criterion::Sd => true,
    };
    (needs_oracle && m > oracle_cap).then(|| {
        format!(
            "{criterion} detection for this size enumerates {m}! reports per agent; \
             cap is {oracle_cap} houses"
        )
    })
}

/// Runs the full grid. Trials run in parallel; the report is identical for a
/// given configuration regardless of thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.trials == 0 {
        return Err(Error::Input("need at least one trial per cell".into()));
    }
    if config.utility_gap == 0 {
        return Err(Error::Input("utility gap bound must be positive".into()));
    }
    let mut cells = Vec::new();
    for (cell_index, (&n, &m)) in config
        .ns
        .iter()
        .flat_map(|n| config.ms.iter().map(move |m| (n, m)))
        .enumerate()
    {
        if let Some(notice) = cell_notice(config.criterion, n, m, config.oracle_cap) {
            cells.push(CellReport {
                n,
                m,
                trials: 0,
                skipped: Some(notice),
                manipulable_profiles: 0,
                manipulable_agents: 0,
                agent_checks: 0,
                welfare_increased: 0,
                welfare_decreased: 0,
                welfare_unchanged: 0,
                net_welfare_delta: Rational::default(),
            });
            continue;
        }
        let outcomes: Vec<TrialOutcome> = (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(trial_seed(config.seed, cell_index, trial));
                run_trial(n, m, config.criterion, config.utility_gap, config.oracle_cap, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut cell = CellReport {
            n,
            m,
            trials: config.trials,
            skipped: None,
            manipulable_profiles: 0,
            manipulable_agents: 0,
            agent_checks: config.trials * n,
            welfare_increased: 0,
            welfare_decreased: 0,
            welfare_unchanged: 0,
            net_welfare_delta: Rational::default(),
        };
        for o in outcomes {
            cell.manipulable_profiles += usize::from(o.manipulable_agents > 0);
            cell.manipulable_agents += o.manipulable_agents;
            cell.welfare_increased += o.welfare_increased;
            cell.welfare_decreased += o.welfare_decreased;
            cell.welfare_unchanged += o.welfare_unchanged;
            cell.net_welfare_delta += o.net_welfare_delta;
        }
        cells.push(cell);
    }
    Ok(ExperimentReport { config: config.clone(), cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn fixed_seeds_reproduce_profiles() {
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        let pa = random_profile(3, 5, &mut a).unwrap();
        let pb = random_profile(3, 5, &mut b).unwrap();
        assert_eq!(pa, pb);
        let single = random_profile(1, 4, &mut a).unwrap();
        assert_eq!(single.n(), 1);
    }

    #[test]
    fn profile_draws_are_close_to_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let draws = 6000;
        for _ in 0..draws {
            let p = random_profile(1, 3, &mut rng).unwrap();
            *counts.entry(p.pref(0).to_vec()).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        for (_, c) in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 1.0 / 6.0).abs() < 0.03, "frequency {freq}");
        }
    }

    #[test]
    fn sampled_utilities_respect_the_ranking() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pref = vec![2, 0, 1];
        let u = random_utilities(&pref, 3, 9, &mut rng);
        assert!(u.is_consistent_with(&pref));
        assert!(u.get(2).unwrap() > u.get(0).unwrap());
        assert!(u.get(0).unwrap() > u.get(1).unwrap());
        assert!(u.get(1).unwrap() > &int(0));
    }

    #[test]
    fn truthful_cells_report_zero() {
        // With m <= n every agent's lexicographic best response is truthful,
        // so no profile in the (3, 3) cell can be manipulable.
        let config = ExperimentConfig {
            ns: vec![3],
            ms: vec![3],
            trials: 40,
            seed: 9,
            criterion: Criterion::Dl,
            utility_gap: 9,
            oracle_cap: 6,
        };
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.cells.len(), 1);
        assert_eq!(report.cells[0].manipulable_profiles, 0);
        assert_eq!(report.cells[0].agent_checks, 120);
        assert_eq!(report.cells[0].net_welfare_delta, int(0));
    }

    #[test]
    fn reports_are_deterministic_and_serializable() {
        let config = ExperimentConfig {
            ns: vec![2],
            ms: vec![4],
            trials: 25,
            seed: 1234,
            criterion: Criterion::Eu,
            utility_gap: 9,
            oracle_cap: 6,
        };
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a.cells, b.cells);
        let json = serde_json::to_string(&a).unwrap();
        let back: ExperimentReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.cells, a.cells);
        // Some 2-agent, 4-house profiles are EU-manipulable.
        assert!(a.cells[0].manipulable_profiles > 0);
    }

    #[test]
    fn two_agent_detection_matches_the_oracle() {
        // The polynomial two-agent detector and the brute-force oracle must
        // flag exactly the same profiles.
        for seed in 0..30 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let problem = random_profile(2, 4, &mut rng).unwrap();
            let u0 = random_utilities(problem.pref(0), 4, 9, &mut rng);
            let (truthful, _) = ps(&problem).unwrap();
            let fast = find_deviation(&problem, Criterion::Eu, &u0, truthful.row(0), 6)
                .unwrap()
                .is_some();
            let oracle =
                brute_force_best_response(&problem, Criterion::Eu, Some(&u0), &OracleOptions::default())
                    .unwrap();
            assert_eq!(fast, !oracle.truthful_is_optimal, "seed {seed}");
        }
    }

    #[test]
    fn infeasible_cells_are_skipped_with_a_notice() {
        let config = ExperimentConfig {
            ns: vec![3],
            ms: vec![8],
            trials: 5,
            seed: 2,
            criterion: Criterion::Sd,
            utility_gap: 9,
            oracle_cap: 6,
        };
        let report = run_experiment(&config).unwrap();
        assert!(report.cells[0].skipped.as_deref().unwrap().contains("8!"));
        assert_eq!(report.cells[0].trials, 0);
        assert!(report.fractions_for_n(3).is_empty());
    }
}
