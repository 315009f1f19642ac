//! Randomized property checks of the library's structural invariants:
//! comparison-relation laws, feasibility and symmetry of the eating rule,
//! best-response construction invariants, the two-agent picking-game
//! correspondence, encoding well-formedness, and serialization round-trips.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use psmanip::dlbr::{dl_best_response, stingy_rounds};
use psmanip::experiment::{CellReport, ExperimentConfig, ExperimentReport};
use psmanip::hardness::{reduce_3sat, ReductionParams, ThreeSatFormula};
use psmanip::instance::InstanceFile;
use psmanip::model::{
    dl_compare, eu_value, sd_compare, AssignmentProblem, ComparisonResult, UtilityFunction,
};
use psmanip::oracle::{brute_force_best_response, Criterion, OracleOptions};
use psmanip::ps::{ps, ps_with_report};
use psmanip::rational::{int, is_fractional, rat, Rational};
use psmanip::seqalloc::{half_house_reduction, sa_best_response_2, sequential_allocation};

// -------------------------------------------------------------- strategies

/// A uniformly shuffled complete list over `m` houses.
fn shuffled(m: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..m).collect::<Vec<usize>>()).prop_shuffle()
}

/// A random problem with complete lists and `extra` spare reports for the
/// first agent.
fn problem_and_reports(
    ns: std::ops::RangeInclusive<usize>,
    ms: std::ops::RangeInclusive<usize>,
    extra: usize,
) -> impl Strategy<Value = (AssignmentProblem, Vec<Vec<usize>>)> {
    (ns, ms).prop_flat_map(move |(n, m)| {
        (
            proptest::collection::vec(shuffled(m), n),
            proptest::collection::vec(shuffled(m), extra),
        )
            .prop_map(move |(prefs, reports)| {
                (AssignmentProblem::from_prefs(prefs, m).unwrap(), reports)
            })
    })
}

fn problem(
    ns: std::ops::RangeInclusive<usize>,
    ms: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = AssignmentProblem> {
    problem_and_reports(ns, ms, 0).prop_map(|(p, _)| p)
}

/// Strictly decreasing positive utilities along `pref`, built from random
/// rank-to-rank gaps.
fn utilities_from_gaps(pref: &[usize], gaps: &[u64]) -> UtilityFunction {
    let mut values = vec![int(0); pref.len()];
    let mut acc = 0i64;
    for (&h, &g) in pref.iter().rev().zip(gaps.iter()) {
        acc += g as i64;
        values[h] = int(acc);
    }
    UtilityFunction::complete(values)
}

fn gaps(m: usize) -> impl Strategy<Value = Vec<u64>> {
    proptest::collection::vec(1..=9u64, m)
}

// ------------------------------------------------- comparison-relation laws

proptest! {
    /// Dominance implies both weaker relations: a dominating row is also
    /// lexicographically preferred and has at least the expected utility for
    /// every utility function consistent with the order.
    #[test]
    fn dominance_implies_lexicographic_and_utility(
        (problem, reports) in problem_and_reports(2..=4, 2..=6, 2),
        g in gaps(6),
    ) {
        let pref = problem.pref(0).to_vec();
        let u = utilities_from_gaps(&pref, &g[..problem.m()]);
        let p = ps_with_report(&problem, &reports[0]).unwrap().0.rows()[0].clone();
        let q = ps_with_report(&problem, &reports[1]).unwrap().0.rows()[0].clone();
        match sd_compare(&p, &q, &pref).unwrap() {
            ComparisonResult::FirstPreferred => {
                prop_assert_eq!(dl_compare(&p, &q, &pref).unwrap(), ComparisonResult::FirstPreferred);
                prop_assert!(eu_value(&p, &u).unwrap() >= eu_value(&q, &u).unwrap());
            }
            ComparisonResult::SecondPreferred => {
                prop_assert_eq!(dl_compare(&p, &q, &pref).unwrap(), ComparisonResult::SecondPreferred);
                prop_assert!(eu_value(&p, &u).unwrap() <= eu_value(&q, &u).unwrap());
            }
            ComparisonResult::Equal => {
                prop_assert_eq!(dl_compare(&p, &q, &pref).unwrap(), ComparisonResult::Equal);
                prop_assert_eq!(eu_value(&p, &u).unwrap(), eu_value(&q, &u).unwrap());
            }
            ComparisonResult::Incomparable => {}
        }
    }

    /// The lexicographic relation is a total order: never incomparable,
    /// equal only on identical rows, antisymmetric, and transitive.
    #[test]
    fn lexicographic_is_a_strict_total_order(
        (problem, reports) in problem_and_reports(2..=4, 2..=6, 3),
    ) {
        let pref = problem.pref(0).to_vec();
        let rows: Vec<Vec<Rational>> = reports
            .iter()
            .map(|r| ps_with_report(&problem, r).unwrap().0.rows()[0].clone())
            .collect();
        for p in &rows {
            for q in &rows {
                let forward = dl_compare(p, q, &pref).unwrap();
                let backward = dl_compare(q, p, &pref).unwrap();
                prop_assert_ne!(forward, ComparisonResult::Incomparable);
                match forward {
                    ComparisonResult::FirstPreferred => {
                        prop_assert_eq!(backward, ComparisonResult::SecondPreferred)
                    }
                    ComparisonResult::SecondPreferred => {
                        prop_assert_eq!(backward, ComparisonResult::FirstPreferred)
                    }
                    ComparisonResult::Equal => {
                        prop_assert_eq!(p.clone(), q.clone());
                    }
                    ComparisonResult::Incomparable => unreachable!(),
                }
            }
        }
        // Transitivity of "not worse".
        let not_worse = |a: &[Rational], b: &[Rational]| {
            dl_compare(a, b, &pref).unwrap() != ComparisonResult::SecondPreferred
        };
        for p in &rows {
            for q in &rows {
                for r in &rows {
                    if not_worse(p, q) && not_worse(q, r) {
                        prop_assert!(not_worse(p, r), "transitivity failed");
                    }
                }
            }
        }
    }

    /// All three comparisons look through the storage order of houses: any
    /// relabelling leaves the verdicts unchanged.
    #[test]
    fn comparisons_are_invariant_under_house_relabelling(
        (problem, reports) in problem_and_reports(2..=3, 2..=6, 2),
        g in gaps(6),
        sigma in shuffled(6),
    ) {
        let m = problem.m();
        let sigma = &sigma[..m];
        // `sigma` restricted to the first m entries is only a permutation of
        // 0..m when m == 6; remap by rank to get one for every m.
        let mut by_rank: Vec<usize> = (0..m).collect();
        by_rank.sort_by_key(|&i| sigma[i]);
        let mut perm = vec![0usize; m];
        for (rank, &i) in by_rank.iter().enumerate() {
            perm[i] = rank;
        }

        let pref = problem.pref(0).to_vec();
        let u = utilities_from_gaps(&pref, &g[..m]);
        let p = ps_with_report(&problem, &reports[0]).unwrap().0.rows()[0].clone();
        let q = ps_with_report(&problem, &reports[1]).unwrap().0.rows()[0].clone();

        let relabel_row = |row: &[Rational]| {
            let mut out = vec![int(0); m];
            for h in 0..m {
                out[perm[h]] = row[h].clone();
            }
            out
        };
        let pref2: Vec<usize> = pref.iter().map(|&h| perm[h]).collect();
        let p2 = relabel_row(&p);
        let q2 = relabel_row(&q);
        let mut u2 = vec![int(0); m];
        for h in 0..m {
            u2[perm[h]] = u.get(h).unwrap().clone();
        }
        let u2 = UtilityFunction::complete(u2);

        prop_assert_eq!(
            sd_compare(&p, &q, &pref).unwrap(),
            sd_compare(&p2, &q2, &pref2).unwrap()
        );
        prop_assert_eq!(
            dl_compare(&p, &q, &pref).unwrap(),
            dl_compare(&p2, &q2, &pref2).unwrap()
        );
        prop_assert_eq!(eu_value(&p, &u).unwrap(), eu_value(&p2, &u2).unwrap());
    }
}

// ------------------------------------------------------- eating-rule shape

proptest! {
    /// Complete-list runs are feasible and exactly timed: shares in [0,1],
    /// every row summing to m/n, every column to 1, at most m exhaustion
    /// events with the last at time m/n.
    #[test]
    fn eating_rule_is_feasible_and_exactly_timed(problem in problem(2..=4, 1..=7)) {
        let (alloc, trace) = ps(&problem).unwrap();
        let (n, m) = (problem.n(), problem.m());
        for a in 0..n {
            for h in 0..m {
                let s = alloc.get(a, h);
                prop_assert!(*s >= int(0) && *s <= int(1));
            }
            prop_assert_eq!(alloc.row_sum(a), rat(m as i64, n as i64));
        }
        for h in 0..m {
            prop_assert_eq!(alloc.column_sum(h), int(1));
        }
        prop_assert!(trace.events.len() <= m);
        let last = &trace.events.last().unwrap().0;
        prop_assert_eq!(last.clone(), rat(m as i64, n as i64));

        // Bit-identical reruns.
        let (again, _) = ps(&problem).unwrap();
        prop_assert_eq!(alloc.rows(), again.rows());
    }

    /// The rule is anonymous: permuting the agents permutes the rows.
    #[test]
    fn eating_rule_is_anonymous(
        problem in problem(2..=4, 1..=6),
        pi in shuffled(4),
    ) {
        let n = problem.n();
        let mut by_rank: Vec<usize> = (0..n).collect();
        by_rank.sort_by_key(|&i| pi[i]);
        let permuted_prefs: Vec<Vec<usize>> =
            by_rank.iter().map(|&i| problem.pref(i).to_vec()).collect();
        let permuted = AssignmentProblem::from_prefs(permuted_prefs, problem.m()).unwrap();
        let (original, _) = ps(&problem).unwrap();
        let (relabeled, _) = ps(&permuted).unwrap();
        for (slot, &agent) in by_rank.iter().enumerate() {
            prop_assert_eq!(relabeled.row(slot), original.row(agent));
        }
    }

    /// No agent prefers another agent's truthful share bundle to their own
    /// in the dominance sense.
    #[test]
    fn truthful_outcomes_are_envy_free(problem in problem(2..=4, 1..=7)) {
        let (alloc, _) = ps(&problem).unwrap();
        for i in 0..problem.n() {
            for j in 0..problem.n() {
                let verdict = sd_compare(alloc.row(i), alloc.row(j), problem.pref(i)).unwrap();
                prop_assert_ne!(verdict, ComparisonResult::SecondPreferred);
            }
        }
    }
}

// ------------------------------------------------ best-response invariants

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    /// Construction rounds keep canonical lists: every kept house gets a
    /// positive share, everything after the last partially held house is
    /// held fully, consecutive rounds agree up to that point, and houses
    /// already covered never change shares in later rounds.
    #[test]
    fn construction_rounds_are_canonical(problem in problem(2..=4, 2..=7)) {
        let rounds = stingy_rounds(&problem).unwrap();
        let last = rounds.last().unwrap();
        for r in &rounds {
            for &h in &r.list {
                prop_assert!(r.row[h] > int(0), "kept house {h} with zero share");
            }
            if let Some(k) = r.list.iter().rposition(|&h| is_fractional(&r.row[h])) {
                for &h in &r.list[k + 1..] {
                    prop_assert_eq!(&r.row[h], &int(1), "house {} after the last partial one not full", h);
                }
            }
            // Earlier-covered houses keep their shares in the final list.
            for &h in &problem.pref(0)[..r.round] {
                prop_assert_eq!(&last.row[h], &r.row[h], "house {} drifted after round {}", h, r.round);
            }
        }
        for w in rounds.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if let Some(k) = a.list.iter().rposition(|&h| is_fractional(&a.row[h])) {
                prop_assert!(b.list.len() > k);
                prop_assert_eq!(&a.list[..=k], &b.list[..=k]);
            }
        }
    }

    /// The best response never does worse than truth-telling.
    #[test]
    fn best_response_weakly_beats_truth(problem in problem(2..=4, 2..=7)) {
        let (_, alloc) = dl_best_response(&problem).unwrap();
        let (truthful, _) = ps(&problem).unwrap();
        let verdict = dl_compare(alloc.row(0), truthful.row(0), problem.pref(0)).unwrap();
        prop_assert_ne!(verdict, ComparisonResult::SecondPreferred);
    }
}

// -------------------------------------------- two-agent picking-game laws

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    /// Two-agent outcomes live on the half-integer grid and equal the
    /// half-house picking game exactly; both agents pick half the objects.
    #[test]
    fn two_agent_outcomes_match_the_picking_game(problem in problem(2..=2, 1..=7)) {
        let (alloc, _) = ps(&problem).unwrap();
        let half = rat(1, 2);
        for row in alloc.rows() {
            for s in row {
                prop_assert!(*s == int(0) || *s == half || *s == int(1));
            }
        }
        let (sa, map) = half_house_reduction(&problem).unwrap();
        let outcome = sequential_allocation(&sa);
        let shares = map.shares(&outcome, 2);
        prop_assert_eq!(alloc.rows(), shares.rows());
        let mine = outcome.picks().iter().filter(|p| p.agent == 0).count();
        prop_assert_eq!(mine, problem.m());
    }

    /// The picking-game best response is self-consistent: replaying the
    /// returned order wins exactly the promised object set.
    #[test]
    fn picking_best_response_is_achievable(problem in problem(2..=2, 1..=7)) {
        let (sa, map) = half_house_reduction(&problem).unwrap();
        let classes: Vec<Vec<usize>> = problem
            .pref(0)
            .iter()
            .map(|&h| map.halves(h).to_vec())
            .collect();
        let rival = sa.pref(1).to_vec();
        let br = sa_best_response_2(map.n_objects(), &classes, &rival, &rival).unwrap();
        let replay = sequential_allocation(&sa.with_pref(0, br.order.clone()).unwrap());
        let won: std::collections::BTreeSet<usize> = replay
            .owned_by(0)
            .into_iter()
            .collect();
        prop_assert_eq!(&won, &br.won);
        prop_assert_eq!(won.len(), map.n_objects() / 2);
    }
}

// -------------------------------------------------------- oracle behaviour

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    /// The exhaustive search is deterministic: identical instances give
    /// identical optima, report lists, and verdicts.
    #[test]
    fn exhaustive_search_is_deterministic(problem in problem(2..=3, 2..=4)) {
        let opts = OracleOptions { cap: 4, force: false };
        let a = brute_force_best_response(&problem, Criterion::Dl, None, &opts).unwrap();
        let b = brute_force_best_response(&problem, Criterion::Dl, None, &opts).unwrap();
        prop_assert_eq!(a.best_rows, b.best_rows);
        prop_assert_eq!(a.optimal_reports, b.optimal_reports);
        prop_assert_eq!(a.truthful_is_optimal, b.truthful_is_optimal);
    }
}

// ------------------------------------------------- encoding well-formedness

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    /// Random exactly-twice formulas encode into well-formed instances:
    /// construction succeeds (validating every list), every non-manipulator
    /// list is complete, and the negligible utilities sum to less than
    /// 1/alpha.
    #[test]
    fn encodings_are_well_formed(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let formula = ThreeSatFormula::random_exactly_twice(3, &mut rng).unwrap();
        let params = ReductionParams::defaults(3);
        let inst = reduce_3sat(&formula, &params).unwrap();
        let m = inst.problem.m();
        for a in 1..inst.problem.n() {
            prop_assert_eq!(inst.problem.pref(a).len(), m, "agent {} list incomplete", a);
        }
        let negligible_sum: Rational = (0..m)
            .filter_map(|h| inst.utilities.get(h))
            .filter(|v| **v == inst.negligible)
            .cloned()
            .sum();
        prop_assert!(negligible_sum < rat(1, params.alpha as i64));
    }
}

// ------------------------------------------------- serialization round-trips

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    /// Instance files survive a write/parse cycle byte-meaning-for-byte:
    /// names, lists, utilities, and target all come back equal.
    #[test]
    fn instance_files_round_trip(
        problem in problem(1..=4, 1..=6),
        g in gaps(6),
        with_utilities in any::<bool>(),
        target in proptest::option::of((1..1000i64, 1..1000i64)),
    ) {
        let u = with_utilities
            .then(|| utilities_from_gaps(problem.pref(0), &g[..problem.m()]));
        let t = target.map(|(p, q)| rat(p, q));
        let file = InstanceFile::from_problem(&problem, u.as_ref(), t.as_ref());
        let text = file.to_toml().unwrap();
        let (back, back_u, back_t) = InstanceFile::parse(&text).unwrap().to_problem().unwrap();
        prop_assert_eq!(problem.agent_names(), back.agent_names());
        prop_assert_eq!(problem.house_names(), back.house_names());
        prop_assert_eq!(problem.prefs(), back.prefs());
        prop_assert_eq!(u.map(|u| u.values().to_vec()), back_u.map(|u| u.values().to_vec()));
        prop_assert_eq!(t, back_t);
    }

    /// Experiment reports survive a JSON cycle with every count and every
    /// exact rational intact.
    #[test]
    fn experiment_reports_round_trip(
        trials in 1usize..1000,
        seed in any::<u64>(),
        counts in proptest::collection::vec((0usize..100, 0usize..100, 0usize..300), 1..6),
        delta in (-1000..1000i64, 1..1000i64),
    ) {
        let cells: Vec<CellReport> = counts
            .iter()
            .enumerate()
            .map(|(i, &(profiles, agents, checks))| CellReport {
                n: 2 + i,
                m: 3 + i,
                trials,
                skipped: (i % 3 == 2).then(|| "too many reports".to_string()),
                manipulable_profiles: profiles,
                manipulable_agents: agents,
                agent_checks: checks,
                welfare_increased: agents / 2,
                welfare_decreased: agents / 3,
                welfare_unchanged: agents - agents / 2 - agents / 3,
                net_welfare_delta: rat(delta.0, delta.1),
            })
            .collect();
        let report = ExperimentReport {
            config: ExperimentConfig {
                ns: vec![2, 3],
                ms: vec![3, 4, 5],
                trials,
                seed,
                criterion: Criterion::Dl,
                utility_gap: 9,
                oracle_cap: 6,
            },
            cells: cells.clone(),
        };
        let text = serde_json::to_string(&report).unwrap();
        let back: ExperimentReport = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(report.cells, back.cells);
        prop_assert_eq!(
            serde_json::to_value(&report.config).unwrap(),
            serde_json::to_value(&back.config).unwrap()
        );
    }
}
