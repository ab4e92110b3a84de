use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use byzgrad_core::{analyze, run, RoundTrace, TRACE_CSV_HEADER};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::scenario_file::{AdversarySpec, EstimateModeSpec, ScenarioFile, ScheduleSpec};
use crate::summary::{ok_fail, redundancy_label, RunSummary};
use crate::templates::{generate, GenParams};

/// Reads and parses a scenario, then applies the seed and stride overrides.
pub fn load(
    path: &Path,
    seed: Option<u64>,
    record_every: Option<usize>,
) -> Result<ScenarioFile, CliError> {
    let src = fs::read_to_string(path)
        .map_err(|e| CliError::config(None, format!("{}: {e}", path.display())))?;
    let mut file = ScenarioFile::parse(&src)?;
    if let Some(s) = seed {
        file.seed = s;
    }
    if record_every.is_some() {
        file.record_every = record_every;
    }
    file.check(None)?;
    Ok(file)
}

pub fn trace_csv(rows: &[RoundTrace]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(TRACE_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_row());
        out.push('\n');
    }
    out
}

fn write(path: PathBuf, contents: &str) -> Result<(), CliError> {
    fs::write(&path, contents).map_err(|e| CliError::io(path, e))
}

/// Runs one scenario and writes `scenario.toml`, `trace.csv` and
/// `summary.json` into `out_dir`.
pub fn run_file(file: &ScenarioFile, out_dir: &Path) -> Result<RunSummary, CliError> {
    let scenario = file.to_scenario()?;
    let result = run(&scenario)?;
    let summary = RunSummary::new(file.digest(), file.n, file.f, &result);
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    write(out_dir.join("scenario.toml"), &file.to_toml())?;
    write(out_dir.join("trace.csv"), &trace_csv(&result.trace))?;
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write(out_dir.join("summary.json"), &(json + "\n"))?;
    Ok(summary)
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the file seed.
    pub seed: Option<u64>,
    pub record_every: Option<usize>,
    /// `key=a..b` (inclusive) or `key=v1,v2,...`.
    pub sweep: Option<String>,
    /// Worker threads for sweeps; 0 picks the number of CPUs.
    pub jobs: usize,
}

pub enum RunOutcome {
    Single(RunSummary),
    Sweep(SweepIndex),
}

pub fn cmd_run(path: &Path, out_dir: &Path, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let base = load(path, opts.seed, opts.record_every)?;
    match &opts.sweep {
        None => run_file(&base, out_dir).map(RunOutcome::Single),
        Some(spec) => {
            let sweep = Sweep::parse(spec)?;
            run_sweep(&base, &sweep, out_dir, opts.jobs).map(RunOutcome::Sweep)
        }
    }
}

pub fn cmd_gen(template: &str, params: &GenParams) -> Result<String, CliError> {
    Ok(generate(template, params)?.to_toml())
}

/// Parses and analyzes a scenario without running it. Returns the report.
pub fn cmd_check(path: &Path, seed: Option<u64>) -> Result<String, CliError> {
    let file = load(path, seed, None)?;
    let scenario = file.to_scenario()?;
    let a = analyze(&scenario)?;
    let c = &a.constants;
    let mut out = String::new();
    let _ = writeln!(out, "digest = {}", file.digest());
    let _ = writeln!(out, "n = {}", file.n);
    let _ = writeln!(out, "f = {}", file.f);
    let _ = writeln!(out, "d = {}", file.d);
    let _ = writeln!(out, "mu = {}", c.mu);
    let _ = writeln!(out, "lambda = {}", c.lambda);
    let exact = if c.zeta_exact { "exact" } else { "upper bound" };
    let _ = writeln!(out, "zeta = {} ({exact})", c.zeta);
    let _ = writeln!(out, "alpha = {}", c.alpha);
    let _ = writeln!(out, "x_star = {:?}", a.x_star.coords());
    let _ = writeln!(out, "redundancy: {}", redundancy_label(&a));
    let mut reasons = Vec::new();
    if c.alpha <= 0.0 {
        reasons.push("alpha <= 0");
    }
    if a.redundancy != Some(true) {
        reasons.push("2f-redundancy not established");
    }
    if c.lambda <= 0.0 {
        reasons.push("lambda <= 0");
    }
    if !scenario.cube.contains(&a.x_star) {
        reasons.push("minimizer outside box");
    }
    let verdict = ok_fail(a.convergence_preconditions_hold());
    if reasons.is_empty() {
        let _ = writeln!(out, "convergence preconditions: {verdict}");
    } else {
        let _ = writeln!(out, "convergence preconditions: {verdict} ({})", reasons.join("; "));
    }
    for w in &a.warnings {
        let _ = writeln!(out, "warning [{}]: {w}", w.code());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepValue {
    Int(u64),
    Real(f64),
    Name(String),
}

impl SweepValue {
    fn label(&self) -> String {
        match self {
            SweepValue::Int(v) => v.to_string(),
            SweepValue::Real(v) => v.to_string(),
            SweepValue::Name(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<SweepValue>,
}

const INT_KEYS: [&str; 4] = ["f", "n", "seed", "horizon"];
const REAL_KEYS: [&str; 2] = ["eta0", "exponent"];
const ADVERSARIES: [&str; 5] = [
    "sign_flip",
    "norm_inflate",
    "coord_extreme",
    "random_in_box",
    "collude_target",
];

impl Sweep {
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let bad = |msg: String| CliError::config(None, format!("--sweep {spec:?}: {msg}"));
        let (key, vals) = spec
            .split_once('=')
            .ok_or_else(|| bad("expected key=values".into()))?;
        let key = key.trim();
        let vals = vals.trim();
        let values = if INT_KEYS.contains(&key) {
            let int = |s: &str| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| bad(format!("{s:?} is not a non-negative integer")))
            };
            if let Some((a, b)) = vals.split_once("..") {
                let (a, b) = (int(a)?, int(b)?);
                if a > b {
                    return Err(bad("empty range".into()));
                }
                (a..=b).map(SweepValue::Int).collect()
            } else {
                vals.split(',')
                    .map(|s| int(s).map(SweepValue::Int))
                    .collect::<Result<_, _>>()?
            }
        } else if REAL_KEYS.contains(&key) {
            vals.split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map(SweepValue::Real)
                        .map_err(|_| bad(format!("{s:?} is not a number")))
                })
                .collect::<Result<_, _>>()?
        } else if key == "adversary" {
            vals.split(',')
                .map(|s| {
                    let s = s.trim();
                    if ADVERSARIES.contains(&s) {
                        Ok(SweepValue::Name(s.to_string()))
                    } else {
                        Err(bad(format!(
                            "unknown adversary {s:?}; available: {}",
                            ADVERSARIES.join(", ")
                        )))
                    }
                })
                .collect::<Result<_, _>>()?
        } else {
            return Err(bad(format!(
                "unknown key {key:?}; sweepable keys: f, n, seed, horizon, eta0, exponent, adversary"
            )));
        };
        Ok(Sweep {
            key: key.to_string(),
            values,
        })
    }

    /// The scenario for one sweep point.
    pub fn apply(&self, base: &ScenarioFile, value: &SweepValue) -> Result<ScenarioFile, CliError> {
        let mut file = base.clone();
        let as_usize = |v: u64| {
            usize::try_from(v).map_err(|_| CliError::config(None, format!("{v} is too large")))
        };
        match (self.key.as_str(), value) {
            ("f", SweepValue::Int(v)) => {
                file.f = as_usize(*v)?;
                file.faulty_ids.truncate(file.f);
            }
            ("n", SweepValue::Int(v)) => file.n = as_usize(*v)?,
            ("seed", SweepValue::Int(v)) => file.seed = *v,
            ("horizon", SweepValue::Int(v)) => file.horizon = as_usize(*v)?,
            ("eta0", SweepValue::Real(v)) => match &mut file.schedule {
                ScheduleSpec::Harmonic { eta0 } | ScheduleSpec::Polynomial { eta0, .. } => {
                    *eta0 = *v
                }
            },
            ("exponent", SweepValue::Real(v)) => {
                let eta0 = match file.schedule {
                    ScheduleSpec::Harmonic { eta0 } | ScheduleSpec::Polynomial { eta0, .. } => eta0,
                };
                file.schedule = ScheduleSpec::Polynomial {
                    eta0,
                    exponent: *v,
                };
            }
            ("adversary", SweepValue::Name(name)) => {
                file.adversary = match name.as_str() {
                    "sign_flip" => AdversarySpec::SignFlip,
                    "norm_inflate" => AdversarySpec::NormInflate { scale: 10.0 },
                    "coord_extreme" => AdversarySpec::CoordExtreme,
                    "random_in_box" => AdversarySpec::RandomInBox,
                    _ => AdversarySpec::ColludeTarget {
                        target: vec![file.xi; file.d],
                        estimates: EstimateModeSpec::RandomInBox,
                    },
                }
            }
            _ => unreachable!("sweep values are typed by key at parse time"),
        }
        file.check(None)?;
        Ok(file)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub value: String,
    pub dir: String,
    pub summary: RunSummary,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Stats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Stats {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let count = values.clone().count().max(1) as f64;
        Stats {
            min: values.clone().fold(f64::INFINITY, f64::min),
            max: values.clone().fold(f64::NEG_INFINITY, f64::max),
            mean: values.sum::<f64>() / count,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepIndex {
    pub key: String,
    pub base_digest: String,
    pub points: Vec<SweepPoint>,
    pub converged: usize,
    pub final_max_dist: Stats,
    pub final_diameter_l2: Stats,
    pub final_v: Stats,
}

/// Runs every sweep point in its own subdirectory and writes `index.json`.
/// Points run in parallel on `jobs` threads.
pub fn run_sweep(
    base: &ScenarioFile,
    sweep: &Sweep,
    out_dir: &Path,
    jobs: usize,
) -> Result<SweepIndex, CliError> {
    let files = sweep
        .values
        .iter()
        .map(|v| Ok((v.label(), sweep.apply(base, v)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::config(None, format!("thread pool: {e}")))?;
    let results: Vec<Result<SweepPoint, CliError>> = pool.install(|| {
        files
            .par_iter()
            .map(|(label, file)| {
                let dir = format!("{}_{label}", sweep.key);
                let summary = run_file(file, &out_dir.join(&dir))?;
                Ok(SweepPoint {
                    value: label.clone(),
                    dir,
                    summary,
                })
            })
            .collect()
    });
    let points = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let index = SweepIndex {
        key: sweep.key.clone(),
        base_digest: base.digest(),
        converged: points.iter().filter(|p| p.summary.converged()).count(),
        final_max_dist: Stats::of(points.iter().map(|p| p.summary.final_max_dist)),
        final_diameter_l2: Stats::of(points.iter().map(|p| p.summary.final_diameter_l2)),
        final_v: Stats::of(points.iter().map(|p| p.summary.final_v)),
        points,
    };
    let json = serde_json::to_string_pretty(&index).expect("index serializes");
    write(out_dir.join("index.json"), &(json + "\n"))?;
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_specs_parse() {
        let s = Sweep::parse("f=0..3").unwrap();
        assert_eq!(s.values.len(), 4);
        assert_eq!(s.values[3], SweepValue::Int(3));
        let s = Sweep::parse("eta0=0.5, 1").unwrap();
        assert_eq!(s.values, vec![SweepValue::Real(0.5), SweepValue::Real(1.0)]);
        let s = Sweep::parse("adversary=sign_flip,coord_extreme").unwrap();
        assert_eq!(s.values.len(), 2);
        for bad in ["f", "f=3..1", "q=1", "adversary=nice", "n=-1", "eta0=x"] {
            assert!(Sweep::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn f_sweep_truncates_faulty_ids() {
        let base = generate("redundant_quadratic", &GenParams::default()).unwrap();
        let s = Sweep::parse("f=0..3").unwrap();
        let f0 = s.apply(&base, &s.values[0]).unwrap();
        assert!(f0.faulty_ids.is_empty());
        let f3 = s.apply(&base, &s.values[3]).unwrap();
        assert_eq!(f3.faulty_ids, vec![8, 9]);
        f3.to_scenario().unwrap();
    }

    #[test]
    fn csv_has_header_and_trailing_newline() {
        let csv = trace_csv(&[]);
        assert_eq!(csv, format!("{TRACE_CSV_HEADER}\n"));
    }
}
