//! Command-line front end for the exact assignment toolkit.
//!
//! Every number that leaves this binary is an exact rational printed as
//! `p/q` (or a bare integer); floating point appears only in the clearly
//! marked `approx` columns. Instances travel as TOML files (see the
//! `instance` module of the library for the format), CNF formulas in the
//! usual DIMACS text form, and `--format structured` switches any command
//! from human-readable tables to a single JSON document on stdout.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use psmanip::dlbr::dl_best_response;
use psmanip::experiment::{run_experiment, ExperimentConfig};
use psmanip::hardness::{reduce_3sat, verify_reduction, ReductionParams, ThreeSatFormula, PARTS};
use psmanip::instance::InstanceFile;
use psmanip::model::{eu_value, AssignmentProblem, UtilityFunction};
use psmanip::oracle::{brute_force_best_response, Criterion, OracleOptions};
use psmanip::ps::{est, ps};
use psmanip::rational::{approx, format_rational, parse_rational, Rational};
use psmanip::seqalloc::eu_best_response_2;

#[derive(Parser)]
#[command(
    name = "psmanip",
    version,
    about = "Exact simultaneous-eating assignment: the probabilistic serial rule, \
             best-response algorithms, brute-force verification, and a SAT gadget generator"
)]
struct Cli {
    /// Root seed for commands that draw random profiles.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output style: human-readable tables or one JSON document.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Worker threads for parallel commands (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

/// Mirror of the library's optimality criteria with stable CLI spellings.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CriterionArg {
    /// Expected utility (needs a `[utilities]` table).
    Eu,
    /// Downward-lexicographic comparison along the true preference.
    Dl,
    /// Stochastic dominance.
    Sd,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Criterion {
        match c {
            CriterionArg::Eu => Criterion::Eu,
            CriterionArg::Dl => Criterion::Dl,
            CriterionArg::Sd => Criterion::Sd,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the eating rule and print the exact allocation matrix.
    Ps {
        /// Instance file (TOML).
        instance: PathBuf,
        /// Also print the exhaustion events in time order.
        #[arg(long)]
        trace: bool,
    },

    /// Print each house's eating start time under the truthful profile.
    Est {
        /// Instance file (TOML).
        instance: PathBuf,
    },

    /// Compute an agent's lexicographic best response to the other reports.
    #[command(name = "dl-br")]
    DlBr {
        /// Instance file (TOML).
        instance: PathBuf,
        /// Manipulating agent, by name or 1-based position (default: first).
        #[arg(long)]
        agent: Option<String>,
        /// Confirm optimality against the brute-force search (m <= 6).
        #[arg(long)]
        verify: bool,
    },

    /// Two-agent expected-utility best response for the first agent.
    #[command(name = "eu-br-2")]
    EuBr2 {
        /// Instance file (TOML) with a `[utilities]` table covering every house.
        instance: PathBuf,
    },

    /// Try every report of the first agent and print the optimum found.
    Oracle {
        /// Instance file (TOML).
        instance: PathBuf,
        /// What counts as better.
        #[arg(long, value_enum)]
        criterion: CriterionArg,
        /// Refuse instances with more houses than this (m! reports each).
        #[arg(long, default_value_t = 8)]
        cap: usize,
        /// Run even past the cap.
        #[arg(long)]
        force: bool,
    },

    /// Encode an exactly-twice 3-CNF formula as an assignment problem.
    ///
    /// Writes an instance file whose first agent can reach the embedded
    /// utility target if and only if the formula is satisfiable, plus a JSON
    /// sidecar recording the encoding parameters.
    #[command(name = "reduce-3sat")]
    Reduce3Sat {
        /// Formula in DIMACS CNF form; every variable must appear exactly
        /// twice positively and twice negatively.
        cnf: PathBuf,
        /// Utility base (a power of two; default chosen from the formula size).
        #[arg(long)]
        alpha: Option<u64>,
        /// Tie-break bonus, as `p/q` (default chosen from the formula size).
        #[arg(long)]
        eps: Option<String>,
        /// Instance output path (default: `<cnf>.instance.toml`).
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Sidecar output path (default: `<cnf>.sidecar.json`).
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },

    /// Check an encoding end to end over every truth assignment.
    ///
    /// Sweeps all 2^n assignments, compares "the prescribed play reaches the
    /// target" against plain truth-table satisfaction, and exits non-zero if
    /// they ever disagree.
    #[command(name = "verify-reduction")]
    VerifyReduction {
        /// Formula in DIMACS CNF form (exactly-twice occurrence pattern).
        cnf: PathBuf,
        /// Utility base override.
        #[arg(long)]
        alpha: Option<u64>,
        /// Tie-break bonus override, as `p/q`.
        #[arg(long)]
        eps: Option<String>,
        /// How often to tighten the parameters and retry on disagreement.
        #[arg(long, default_value_t = 3)]
        max_retries: usize,
    },

    /// Estimate how often random profiles are manipulable.
    ///
    /// Draws uniform random strict profiles for every (n, m) cell, finds
    /// profitable deviations with the exact algorithms where they exist and
    /// the brute-force search otherwise, and tallies the welfare effect of
    /// each deviation. Deterministic for a fixed --seed, regardless of --jobs.
    Experiment {
        /// Agent counts to sweep.
        #[arg(long, value_delimiter = ',', default_values_t = [2, 3])]
        ns: Vec<usize>,
        /// House counts to sweep (cells are the cross product).
        #[arg(long, value_delimiter = ',', default_values_t = [3, 4, 5, 6])]
        ms: Vec<usize>,
        /// Profiles drawn per cell.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Which notion of profitable deviation to test.
        #[arg(long, value_enum, default_value_t = CriterionArg::Dl)]
        criterion: CriterionArg,
        /// Utility gaps between consecutive ranks are drawn from 1..=GAP.
        #[arg(long, default_value_t = 9)]
        utility_gap: u64,
        /// Skip cells that would need brute force beyond this many houses.
        #[arg(long, default_value_t = 6)]
        oracle_cap: usize,
        /// Where to write the machine-readable report.
        #[arg(long, default_value = "experiment-report.json")]
        out: PathBuf,
    },
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match &cli.command {
        Command::Ps { instance, trace } => cmd_ps(&cli, instance, *trace),
        Command::Est { instance } => cmd_est(&cli, instance),
        Command::DlBr {
            instance,
            agent,
            verify,
        } => cmd_dl_br(&cli, instance, agent.as_deref(), *verify),
        Command::EuBr2 { instance } => cmd_eu_br_2(&cli, instance),
        Command::Oracle {
            instance,
            criterion,
            cap,
            force,
        } => cmd_oracle(&cli, instance, *criterion, *cap, *force),
        Command::Reduce3Sat {
            cnf,
            alpha,
            eps,
            out,
            sidecar,
        } => cmd_reduce(&cli, cnf, *alpha, eps.as_deref(), out.clone(), sidecar.clone()),
        Command::VerifyReduction {
            cnf,
            alpha,
            eps,
            max_retries,
        } => cmd_verify(&cli, cnf, *alpha, eps.as_deref(), *max_retries),
        Command::Experiment {
            ns,
            ms,
            trials,
            criterion,
            utility_gap,
            oracle_cap,
            out,
        } => cmd_experiment(
            &cli,
            ns.clone(),
            ms.clone(),
            *trials,
            *criterion,
            *utility_gap,
            *oracle_cap,
            out,
        ),
    }
}

// ---------------------------------------------------------------- commands

fn cmd_ps(cli: &Cli, path: &Path, trace: bool) -> Result<()> {
    let (problem, _, _) = load_instance(path)?;
    let (alloc, run) = ps(&problem)?;
    match cli.format {
        Format::Structured => {
            let mut doc = json!({
                "agents": problem.agent_names(),
                "houses": problem.house_names(),
                "matrix": rows_json(alloc.rows()),
                "est": starts_json(&run.start),
            });
            if trace {
                doc["events"] = Value::Array(
                    run.events
                        .iter()
                        .map(|(t, hs)| {
                            json!({
                                "time": format_rational(t),
                                "houses": house_names(&problem, hs),
                            })
                        })
                        .collect(),
                );
            }
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Text => {
            print!("{}", matrix_table(&problem, alloc.rows()));
            println!();
            println!("eating start times:");
            print!("{}", starts_table(&problem, &run.start));
            if trace {
                println!();
                println!("events:");
                for (t, hs) in &run.events {
                    println!(
                        "  t={}  {}",
                        format_rational(t),
                        house_names(&problem, hs).join(" ")
                    );
                }
            }
        }
    }
    Ok(())
}

fn cmd_est(cli: &Cli, path: &Path) -> Result<()> {
    let (problem, _, _) = load_instance(path)?;
    let starts = est(&problem)?;
    match cli.format {
        Format::Structured => {
            let doc = json!({
                "houses": problem.house_names(),
                "est": starts_json(&starts),
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Text => print!("{}", starts_table(&problem, &starts)),
    }
    Ok(())
}

fn cmd_dl_br(cli: &Cli, path: &Path, agent: Option<&str>, verify: bool) -> Result<()> {
    let (original, _, _) = load_instance(path)?;
    let agent = resolve_agent(&original, agent)?;
    let problem = original.with_agent_first(agent)?;
    let (list, alloc) = dl_best_response(&problem)?;
    let truthful = ps(&problem)?.0;

    let verified = if verify {
        let opts = OracleOptions {
            cap: 6,
            force: false,
        };
        let report = brute_force_best_response(&problem, Criterion::Dl, None, &opts)?;
        Some(report.best_rows[0].as_slice() == alloc.row(0))
    } else {
        None
    };

    match cli.format {
        Format::Structured => {
            let doc = json!({
                "agent": original.agent_name(agent),
                "houses": problem.house_names(),
                "best_response": house_names(&problem, &list),
                "row": row_json(alloc.row(0)),
                "truthful_row": row_json(truthful.row(0)),
                "verified": verified,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Text => {
            println!("agent: {}", original.agent_name(agent));
            println!("best response: {}", house_names(&problem, &list).join(", "));
            println!();
            print!(
                "{}",
                rows_table(
                    &problem,
                    &["best response", "truthful"],
                    &[alloc.row(0), truthful.row(0)],
                )
            );
            if let Some(ok) = verified {
                println!();
                if ok {
                    println!(
                        "verified: brute force over all {}! complete reports found no better row",
                        problem.m()
                    );
                } else {
                    println!("verified: MISMATCH - the brute-force search found a better row");
                }
            }
        }
    }
    if verified == Some(false) {
        bail!("best response disagrees with the brute-force optimum");
    }
    Ok(())
}

fn cmd_eu_br_2(cli: &Cli, path: &Path) -> Result<()> {
    let (problem, utilities, _) = load_instance(path)?;
    let u = utilities.ok_or_else(|| {
        anyhow!("this command needs a [utilities] table in the instance file")
    })?;
    let (order, alloc) = eu_best_response_2(&problem, &u)?;
    let truthful = ps(&problem)?.0;
    let truthful_eu = eu_value(truthful.row(0), &u)?;
    let best_eu = eu_value(alloc.row(0), &u)?;

    match cli.format {
        Format::Structured => {
            let doc = json!({
                "agents": problem.agent_names(),
                "houses": problem.house_names(),
                "best_order": house_names(&problem, &order),
                "matrix": rows_json(alloc.rows()),
                "truthful_eu": format_rational(&truthful_eu),
                "best_eu": format_rational(&best_eu),
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Text => {
            println!("best order: {}", house_names(&problem, &order).join(", "));
            println!();
            print!("{}", matrix_table(&problem, alloc.rows()));
            println!();
            println!(
                "expected utility: {} truthful, {} under the best order",
                format_rational(&truthful_eu),
                format_rational(&best_eu)
            );
        }
    }
    Ok(())
}

fn cmd_oracle(
    cli: &Cli,
    path: &Path,
    criterion: CriterionArg,
    cap: usize,
    force: bool,
) -> Result<()> {
    let (problem, utilities, _) = load_instance(path)?;
    let criterion = Criterion::from(criterion);
    if criterion == Criterion::Eu && utilities.is_none() {
        bail!("the expected-utility criterion needs a [utilities] table in the instance file");
    }
    let opts = OracleOptions { cap, force };
    let report = brute_force_best_response(&problem, criterion, utilities.as_ref(), &opts)?;

    match cli.format {
        Format::Structured => {
            let doc = json!({
                "criterion": criterion,
                "houses": problem.house_names(),
                "truthful_row": row_json(&report.truthful_row),
                "truthful_eu": report.truthful_eu.as_ref().map(|r| format_rational(r)),
                "best_eu": report.best_eu.as_ref().map(|r| format_rational(r)),
                "best_rows": rows_json(&report.best_rows),
                "optimal_reports": report
                    .optimal_reports
                    .iter()
                    .map(|r| house_names(&problem, r))
                    .collect::<Vec<_>>(),
                "truthful_is_optimal": report.truthful_is_optimal,
                "partial_sweep": report.partial_sweep,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Text => {
            println!("criterion: {criterion}");
            println!(
                "swept: all {}! complete reports of the first agent",
                problem.m()
            );
            println!();
            let mut labels = vec!["truthful".to_string()];
            let mut rows: Vec<&[Rational]> = vec![&report.truthful_row];
            for (i, row) in report.best_rows.iter().enumerate() {
                labels.push(format!("best #{}", i + 1));
                rows.push(row);
            }
            let labels: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
            print!("{}", rows_table(&problem, &labels, &rows));
            println!();
            if let (Some(t), Some(b)) = (&report.truthful_eu, &report.best_eu) {
                println!(
                    "expected utility: {} truthful, {} optimal",
                    format_rational(t),
                    format_rational(b)
                );
            }
            println!(
                "truthful report optimal: {}",
                if report.truthful_is_optimal { "yes" } else { "no" }
            );
            let shown = report.optimal_reports.len().min(10);
            println!(
                "optimal reports ({} total{}):",
                report.optimal_reports.len(),
                if shown < report.optimal_reports.len() {
                    format!(", first {shown}")
                } else {
                    String::new()
                }
            );
            for r in &report.optimal_reports[..shown] {
                println!("  {}", house_names(&problem, r).join(", "));
            }
            match report.partial_sweep {
                Some(true) => println!("partial reports: swept, none beats the optimum"),
                Some(false) => println!("partial reports: swept, AND ONE BEATS THE OPTIMUM"),
                None => println!("partial reports: not swept (too many houses)"),
            }
        }
    }
    Ok(())
}

fn cmd_reduce(
    cli: &Cli,
    cnf: &Path,
    alpha: Option<u64>,
    eps: Option<&str>,
    out: Option<PathBuf>,
    sidecar: Option<PathBuf>,
) -> Result<()> {
    let formula = load_formula(cnf)?;
    let params = override_params(&formula, alpha, eps)?;
    let inst = reduce_3sat(&formula, &params)?;

    let out = out.unwrap_or_else(|| cnf.with_extension("instance.toml"));
    let sidecar = sidecar.unwrap_or_else(|| cnf.with_extension("sidecar.json"));

    let file = InstanceFile::from_problem(&inst.problem, Some(&inst.utilities), Some(&inst.target));
    let body = file.to_toml()?;
    let header = format!(
        "# generated: alpha={} eps={}\n",
        params.alpha,
        format_rational(&params.eps)
    );
    fs::write(&out, header + &body).with_context(|| format!("writing {}", out.display()))?;

    let summary = json!({
        "alpha": params.alpha,
        "eps": format_rational(&params.eps),
        "negligible": format_rational(&inst.negligible),
        "target": format_rational(&inst.target),
        "vars": inst.layout.n_vars,
        "clauses": inst.layout.n_clauses,
        "parts": PARTS,
        "agents": inst.layout.n_agents(),
        "houses": inst.layout.n_houses(),
        "manipulator": inst.problem.agent_name(inst.layout.manipulator()),
        "prize": inst.problem.house_name(inst.layout.prize()),
    });
    fs::write(
        &sidecar,
        serde_json::to_string_pretty(&summary)? + "\n",
    )
    .with_context(|| format!("writing {}", sidecar.display()))?;

    match cli.format {
        Format::Structured => {
            let doc = json!({
                "instance": out.display().to_string(),
                "sidecar": sidecar.display().to_string(),
                "summary": summary,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Text => {
            println!(
                "encoded {} variables, {} clauses into {} agents and {} houses",
                inst.layout.n_vars,
                inst.layout.n_clauses,
                inst.layout.n_agents(),
                inst.layout.n_houses()
            );
            println!(
                "alpha={} eps={} target={}",
                params.alpha,
                format_rational(&params.eps),
                format_rational(&inst.target)
            );
            println!("instance: {}", out.display());
            println!("sidecar:  {}", sidecar.display());
        }
    }
    Ok(())
}

fn cmd_verify(
    cli: &Cli,
    cnf: &Path,
    alpha: Option<u64>,
    eps: Option<&str>,
    max_retries: usize,
) -> Result<()> {
    let formula = load_formula(cnf)?;
    let params = override_params(&formula, alpha, eps)?;
    let report = verify_reduction(&formula, &params, max_retries)?;
    let n = formula.n_vars();

    match cli.format {
        Format::Structured => {
            let doc = json!({
                "vars": n,
                "clauses": formula.clauses().len(),
                "alpha": report.params.alpha,
                "eps": format_rational(&report.params.eps),
                "retries": report.retries,
                "satisfiable": report.satisfiable,
                "agree": report.agree,
                "checks": report
                    .checks
                    .iter()
                    .map(|c| {
                        json!({
                            "assignment": bits(&c.assignment),
                            "satisfies": c.satisfies,
                            "reaches": c.reaches,
                            "eu": format_rational(&c.eu),
                        })
                    })
                    .collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Text => {
            println!(
                "formula: {} variables, {} clauses",
                n,
                formula.clauses().len()
            );
            println!(
                "parameters: alpha={} eps={}{}",
                report.params.alpha,
                format_rational(&report.params.eps),
                if report.retries > 0 {
                    format!(" (tightened {} time(s) from the requested values)", report.retries)
                } else {
                    String::new()
                }
            );
            println!(
                "satisfiable by truth table: {}",
                if report.satisfiable { "yes" } else { "no" }
            );
            println!();
            let headers: Vec<String> = ["assignment", "satisfies", "reaches", "expected utility"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let rows: Vec<Vec<String>> = report
                .checks
                .iter()
                .map(|c| {
                    vec![
                        bits(&c.assignment),
                        yes_no(c.satisfies),
                        yes_no(c.reaches),
                        format_rational(&c.eu),
                    ]
                })
                .collect();
            print!("{}", columns(&headers, &rows));
            println!();
            if report.agree {
                println!("verdict: AGREE - the target is reachable iff the formula is satisfiable");
            } else {
                println!("verdict: DISAGREE - some assignment reaches the target but fails the formula, or vice versa");
            }
        }
    }
    if !report.agree {
        bail!("encoding and truth table disagree after {} retries", report.retries);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_experiment(
    cli: &Cli,
    ns: Vec<usize>,
    ms: Vec<usize>,
    trials: usize,
    criterion: CriterionArg,
    utility_gap: u64,
    oracle_cap: usize,
    out: &Path,
) -> Result<()> {
    let config = ExperimentConfig {
        ns,
        ms,
        trials,
        seed: cli.seed,
        criterion: Criterion::from(criterion),
        utility_gap,
        oracle_cap,
    };
    let report = run_experiment(&config)?;
    let serialized = serde_json::to_string_pretty(&report)?;
    fs::write(out, serialized.clone() + "\n")
        .with_context(|| format!("writing {}", out.display()))?;

    match cli.format {
        Format::Structured => println!("{serialized}"),
        Format::Text => {
            println!(
                "criterion: {}   trials per cell: {}   seed: {}",
                report.config.criterion, report.config.trials, report.config.seed
            );
            println!();
            let headers: Vec<String> = [
                "n", "m", "manipulable", "fraction", "approx", "agent pairs", "welfare +",
                "welfare -", "welfare =", "net delta",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            let rows: Vec<Vec<String>> = report
                .cells
                .iter()
                .filter(|c| c.skipped.is_none())
                .map(|c| {
                    let fraction = c.manipulable_fraction();
                    vec![
                        c.n.to_string(),
                        c.m.to_string(),
                        format!("{}/{}", c.manipulable_profiles, c.trials),
                        format_rational(&fraction),
                        format!("{:.3}", approx(&fraction)),
                        format!("{}/{}", c.manipulable_agents, c.agent_checks),
                        c.welfare_increased.to_string(),
                        c.welfare_decreased.to_string(),
                        c.welfare_unchanged.to_string(),
                        format_rational(&c.net_welfare_delta),
                    ]
                })
                .collect();
            print!("{}", columns(&headers, &rows));
            for cell in report.cells.iter().filter(|c| c.skipped.is_some()) {
                println!(
                    "skipped n={} m={}: {}",
                    cell.n,
                    cell.m,
                    cell.skipped.as_deref().unwrap_or("")
                );
            }
            println!();
            println!("report written to {}", out.display());
        }
    }
    Ok(())
}

// ----------------------------------------------------------------- helpers

/// Reads an instance file and interprets it against the library model.
fn load_instance(
    path: &Path,
) -> Result<(AssignmentProblem, Option<UtilityFunction>, Option<Rational>)> {
    let file =
        InstanceFile::load(path).with_context(|| format!("reading {}", path.display()))?;
    file.to_problem()
        .with_context(|| format!("interpreting {}", path.display()))
}

/// Reads a DIMACS CNF file into a validated exactly-twice formula.
fn load_formula(path: &Path) -> Result<ThreeSatFormula> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ThreeSatFormula::parse_dimacs(&text)
        .with_context(|| format!("interpreting {}", path.display()))
}

/// Starts from the size-derived defaults and applies explicit overrides.
fn override_params(
    formula: &ThreeSatFormula,
    alpha: Option<u64>,
    eps: Option<&str>,
) -> Result<ReductionParams> {
    let mut params = ReductionParams::defaults(formula.n_vars());
    if let Some(a) = alpha {
        params.alpha = a;
    }
    if let Some(e) = eps {
        params.eps = parse_rational(e).context("parsing --eps")?;
    }
    Ok(params)
}

/// Maps an `--agent` value (a name from the file, or a 1-based position)
/// to the internal agent index; the first agent when absent.
fn resolve_agent(problem: &AssignmentProblem, selector: Option<&str>) -> Result<usize> {
    let Some(selector) = selector else { return Ok(0) };
    if let Some(a) = problem.agent_index(selector) {
        return Ok(a);
    }
    if let Ok(k) = selector.parse::<usize>() {
        if (1..=problem.n()).contains(&k) {
            return Ok(k - 1);
        }
    }
    bail!("unknown agent {selector:?}: use a name from the instance file or a 1-based position");
}

fn house_names(problem: &AssignmentProblem, houses: &[usize]) -> Vec<String> {
    houses
        .iter()
        .map(|&h| problem.house_name(h).to_string())
        .collect()
}

fn yes_no(b: bool) -> String {
    (if b { "yes" } else { "no" }).to_string()
}

/// Truth assignment as a compact T/F string, first variable first.
fn bits(assignment: &[bool]) -> String {
    assignment.iter().map(|&b| if b { 'T' } else { 'F' }).collect()
}

fn row_json(row: &[Rational]) -> Value {
    Value::Array(
        row.iter()
            .map(|r| Value::String(format_rational(r)))
            .collect(),
    )
}

fn rows_json<R: AsRef<[Rational]>>(rows: &[R]) -> Value {
    Value::Array(rows.iter().map(|r| row_json(r.as_ref())).collect())
}

fn starts_json(starts: &[Option<Rational>]) -> Value {
    Value::Array(
        starts
            .iter()
            .map(|s| match s {
                Some(r) => Value::String(format_rational(r)),
                None => Value::Null,
            })
            .collect(),
    )
}

/// Renders aligned columns: first column left-aligned, the rest
/// right-aligned, two spaces between columns, one trailing newline per row.
fn columns(headers: &[String], rows: &[Vec<String>]) -> String {
    let width = |j: usize| {
        rows.iter()
            .map(|r| r[j].len())
            .chain([headers[j].len()])
            .max()
            .unwrap_or(0)
    };
    let widths: Vec<usize> = (0..headers.len()).map(width).collect();
    let mut text = String::new();
    let render = |text: &mut String, cells: &[String]| {
        for (j, cell) in cells.iter().enumerate() {
            if j > 0 {
                text.push_str("  ");
            }
            if j == 0 {
                text.push_str(&format!("{:<w$}", cell, w = widths[j]));
            } else {
                text.push_str(&format!("{:>w$}", cell, w = widths[j]));
            }
        }
        while text.ends_with(' ') {
            text.pop();
        }
        text.push('\n');
    };
    render(&mut text, headers);
    for row in rows {
        render(&mut text, row);
    }
    text
}

/// The full allocation matrix: one row per agent, one column per house.
fn matrix_table(problem: &AssignmentProblem, rows: &[Vec<Rational>]) -> String {
    let labels: Vec<&str> = (0..problem.n()).map(|a| problem.agent_name(a)).collect();
    let borrowed: Vec<&[Rational]> = rows.iter().map(|r| r.as_slice()).collect();
    rows_table(&problem.clone(), &labels, &borrowed)
}

/// A small table of labelled allocation rows over the problem's houses.
fn rows_table(problem: &AssignmentProblem, labels: &[&str], rows: &[&[Rational]]) -> String {
    let mut headers = vec![String::new()];
    headers.extend(problem.house_names().iter().cloned());
    let body: Vec<Vec<String>> = labels
        .iter()
        .zip(rows)
        .map(|(label, row)| {
            let mut cells = vec![label.to_string()];
            cells.extend(row.iter().map(format_rational));
            cells
        })
        .collect();
    columns(&headers, &body)
}

/// Eating start times, one line per house; `never` for untouched houses.
fn starts_table(problem: &AssignmentProblem, starts: &[Option<Rational>]) -> String {
    let headers = vec!["house".to_string(), "est".to_string()];
    let rows: Vec<Vec<String>> = starts
        .iter()
        .enumerate()
        .map(|(h, s)| {
            vec![
                problem.house_name(h).to_string(),
                s.as_ref().map(format_rational).unwrap_or_else(|| "never".into()),
            ]
        })
        .collect();
    columns(&headers, &rows)
}
