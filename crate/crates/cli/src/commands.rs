//! Subcommand implementations. Data files go to the declared paths; the
//! human-readable summary goes to the writer passed in (stdout in the
//! binary).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use pbk_core::asynchronous::run_asynchronous_with;
use pbk_core::montecarlo::day_indexed_schedule_warning;
use pbk_core::montecarlo::{estimate_certainty, ComparisonReport, EmpiricalMatrix, SimMode};
use pbk_core::protocol::{cheat_mass_warning, run_synchronous_with};
use pbk_core::{knowledge_matrix, CheatSchedule, ExtensionPolicy, Seed, SimulationTrace};
use serde::Serialize;
use thiserror::Error;

use crate::output::{json_document, matrix_csv, MatrixHeader};
use crate::scenario::{parse_scenario, Scenario, ScenarioError, ScenarioFile};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Core(#[from] pbk_core::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| CliError::Io {
            path: parent.to_owned(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

// Summary lines are best effort; a closed stdout must not fail the run.
macro_rules! say {
    ($w:expr, $($arg:tt)*) => {
        let _ = writeln!($w, $($arg)*);
    };
}

/// Scenario as echoed into data files: output locations are left out so
/// identical runs produce identical bytes wherever they are written.
fn config_echo(scenario: &Scenario) -> ScenarioFile {
    let mut file = scenario.to_file();
    file.output = None;
    file
}

fn mode_name(mode: &SimMode) -> &'static str {
    match mode {
        SimMode::Synchronous => "synchronous",
        SimMode::Asynchronous { .. } => "asynchronous",
    }
}

fn out_dir(flag: Option<PathBuf>, scenario: &Scenario) -> PathBuf {
    flag.or_else(|| scenario.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Parses an inline probability list such as `0,1,0` or `0.2,0.1:0.5`.
/// A colon-separated entry is a varying schedule that cycles.
pub fn parse_eps_list(list: &str) -> Result<Vec<CheatSchedule<f64>>, CliError> {
    list.split(',')
        .enumerate()
        .map(|(i, entry)| {
            let values = entry
                .split(':')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| {
                        CliError::Usage(format!("--eps entry {}: `{v}` is not a number", i + 1))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let schedule = if values.len() == 1 {
                CheatSchedule::constant_value(values[0])
            } else {
                CheatSchedule::varying_values(&values, ExtensionPolicy::Cycle)
            };
            schedule.map_err(|e| CliError::Usage(format!("--eps entry {}: {e}", i + 1)))
        })
        .collect()
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct AnalyticArgs {
    /// Scenario file supplying the processes and default step count.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Cheat probabilities, e.g. `0,1,0`; `0.1:0.5` is a cycling schedule.
    #[arg(long)]
    pub eps: Option<String>,
    /// Step count d (defaults to the scenario horizon).
    #[arg(long, short = 'd')]
    pub steps: Option<u64>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct AnalyticConfig<'a> {
    n: usize,
    d: u64,
    schedules: &'a [CheatSchedule<f64>],
}

#[derive(Serialize)]
struct AnalyticData {
    matrix: Vec<Vec<f64>>,
}

/// Writes the closed-form who-knows-whom matrix after `d` steps.
pub fn cmd_analytic(args: &AnalyticArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (schedules, default_steps, mode) = match (&args.scenario, &args.eps) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "give either --scenario or --eps, not both".into(),
            ))
        }
        (None, None) => return Err(CliError::Usage("analytic needs --scenario or --eps".into())),
        (Some(path), None) => {
            let s = parse_scenario(path)?;
            let mode = mode_name(&s.config.mode).to_owned();
            (s.config.schedules(), Some(s.config.horizon), mode)
        }
        (None, Some(list)) => (parse_eps_list(list)?, None, "analytic".to_owned()),
    };
    let d = args
        .steps
        .or(default_steps)
        .ok_or_else(|| CliError::Usage("--steps is required with --eps".into()))?;
    let matrix = knowledge_matrix(&schedules, d)?;
    let text = match args.format {
        Format::Csv => matrix_csv(
            &MatrixHeader {
                kind: "analytic",
                mode,
                n: matrix.n(),
                step: d,
                trials: None,
                seed: None,
            },
            matrix.rows(),
        ),
        Format::Json => json_document(
            "knowledge_matrix",
            &AnalyticConfig {
                n: matrix.n(),
                d,
                schedules: &schedules,
            },
            &AnalyticData {
                matrix: matrix.rows().map(<[f64]>::to_vec).collect(),
            },
        ),
    };
    match &args.out {
        Some(path) => write_file(path, &text),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Overrides `[output] dir` from the scenario.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub const TRACE_FILE: &str = "trace.json";

/// Runs one simulation (horizon = days in both modes) and writes the trace.
pub fn cmd_simulate(
    args: &SimulateArgs,
    stdout: &mut dyn Write,
) -> Result<SimulationTrace<f64>, CliError> {
    let mut scenario = parse_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.config.seed = Seed::new(seed);
    }
    let cfg = &scenario.config;
    let trace = match cfg.mode {
        SimMode::Synchronous => {
            run_synchronous_with(&cfg.profiles, cfg.horizon, cfg.seed, cfg.answer_mode)?
        }
        SimMode::Asynchronous { group } => {
            run_asynchronous_with(&cfg.profiles, group, cfg.horizon, cfg.seed, cfg.answer_mode)?
        }
    };
    let path = out_dir(args.out_dir.clone(), &scenario).join(TRACE_FILE);
    write_file(
        &path,
        &json_document("trace", &config_echo(&scenario), &trace),
    )?;

    for w in &trace.warnings {
        eprintln!("warning: {w}");
    }
    say!(
        stdout,
        "mode={} n={} days={} seed={}",
        mode_name(&cfg.mode),
        trace.n,
        trace.horizon,
        cfg.seed.value()
    );
    let per_step: Vec<String> = trace
        .steps
        .iter()
        .map(|s| match s.detection.detected() {
            Some(d) => d.len().to_string(),
            None => "-".to_owned(),
        })
        .collect();
    say!(stdout, "steps completed: {}", trace.steps.len());
    say!(
        stdout,
        "detections per step (- = no supermajority): {}",
        per_step.join(" ")
    );
    say!(stdout, "total detections: {}", trace.detections);
    say!(
        stdout,
        "no-supermajority steps: {}",
        trace.no_supermajority_steps
    );
    if let Some(b) = trace.max_backlog {
        say!(stdout, "max backlog: {b}");
    }
    let known = |b: &pbk_core::BeliefState| {
        b.known_cheaters()
            .iter()
            .map(|(id, step)| format!("{id}@{step}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    // Gossip keeps observers identical; print distinct belief sets only.
    if trace
        .final_beliefs
        .windows(2)
        .all(|w| w[0].known_cheaters() == w[1].known_cheaters())
    {
        say!(
            stdout,
            "final beliefs (all observers): {{{}}}",
            known(&trace.final_beliefs[0])
        );
    } else {
        for b in &trace.final_beliefs {
            say!(stdout, "final beliefs {}: {{{}}}", b.observer, known(b));
        }
    }
    say!(stdout, "trace written to {}", path.display());
    Ok(trace)
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Overrides `[output] dir` from the scenario.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the scenario trial count.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Overrides the scenario tolerance floor.
    #[arg(long)]
    pub floor: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EstimateOutcome {
    pub reports: Vec<ComparisonReport>,
    pub files: Vec<PathBuf>,
}

impl EstimateOutcome {
    /// True when every off-diagonal cell at every checkpoint passed.
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(ComparisonReport::passed)
    }
}

#[derive(Serialize)]
struct ReportData<'a> {
    all_pass: bool,
    no_supermajority_steps: u64,
    warnings: Vec<String>,
    reports: &'a [ComparisonReport],
}

#[derive(Serialize)]
struct MatricesData<'a> {
    matrices: &'a [EmpiricalMatrix],
}

pub const REPORT_FILE: &str = "report.json";

/// Monte Carlo estimate of the matrix at each checkpoint, compared with the
/// closed form.
pub fn cmd_estimate(
    args: &EstimateArgs,
    stdout: &mut dyn Write,
) -> Result<EstimateOutcome, CliError> {
    let mut scenario = parse_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.config.seed = Seed::new(seed);
    }
    if let Some(trials) = args.trials {
        scenario.config.trials = trials;
    }
    if let Some(floor) = args.floor {
        if !(floor >= 0.0 && floor.is_finite()) {
            return Err(CliError::Usage(
                "--floor must be a finite non-negative number".into(),
            ));
        }
        scenario.tolerance_floor = floor;
    }
    let cfg = &scenario.config;
    let estimate = estimate_certainty(cfg)?;
    let reports = estimate.compare(&cfg.schedules(), scenario.tolerance_floor)?;
    let warnings: Vec<String> = cheat_mass_warning(&cfg.profiles)
        .into_iter()
        .chain(day_indexed_schedule_warning(cfg))
        .collect();

    let dir = out_dir(args.out_dir.clone(), &scenario);
    let echo = config_echo(&scenario);
    let mut files = Vec::new();
    match args.format {
        Format::Csv => {
            for m in &estimate.matrices {
                let freqs: Vec<f64> = m
                    .rows()
                    .flatten()
                    .map(|&c| c as f64 / m.trials as f64)
                    .collect();
                let text = matrix_csv(
                    &MatrixHeader {
                        kind: "empirical",
                        mode: mode_name(&cfg.mode).to_owned(),
                        n: m.n,
                        step: m.step,
                        trials: Some(m.trials),
                        seed: Some(cfg.seed.value()),
                    },
                    freqs.chunks(m.n),
                );
                let path = dir.join(format!("empirical_d{}.csv", m.step));
                write_file(&path, &text)?;
                files.push(path);
            }
        }
        Format::Json => {
            let path = dir.join("empirical.json");
            write_file(
                &path,
                &json_document(
                    "empirical_matrices",
                    &echo,
                    &MatricesData {
                        matrices: &estimate.matrices,
                    },
                ),
            )?;
            files.push(path);
        }
    }
    let path = dir.join(REPORT_FILE);
    write_file(
        &path,
        &json_document(
            "comparison_report",
            &echo,
            &ReportData {
                all_pass: reports.iter().all(ComparisonReport::passed),
                no_supermajority_steps: estimate.no_supermajority_steps,
                warnings: warnings.clone(),
                reports: &reports,
            },
        ),
    )?;
    files.push(path);
    let outcome = EstimateOutcome { reports, files };

    for w in &warnings {
        eprintln!("warning: {w}");
    }
    say!(
        stdout,
        "mode={} n={} horizon={} trials={} seed={} floor={}",
        mode_name(&cfg.mode),
        cfg.n(),
        cfg.horizon,
        cfg.trials,
        cfg.seed.value(),
        scenario.tolerance_floor
    );
    for r in &outcome.reports {
        let off_cells = r.n * r.n - r.n;
        say!(
            stdout,
            "d={:<5} max_dev={:.6} fails={}/{} diagonal_fails={} {}",
            r.step,
            r.max_deviation,
            r.fail_count,
            off_cells,
            r.diagonal_fail_count,
            if r.passed() { "PASS" } else { "FAIL" }
        );
    }
    say!(
        stdout,
        "no-supermajority steps: {}",
        estimate.no_supermajority_steps
    );
    say!(
        stdout,
        "{}",
        if outcome.all_pass() {
            "all cells pass"
        } else {
            "comparison failed"
        }
    );
    Ok(outcome)
}
