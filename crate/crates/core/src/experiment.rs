//! Experiment driver: sweep configuration, the `(scheme, p, q)` sweep with
//! CSV/JSON output, generator design runs and MFR queries.
//!
//! Config files are flat `key = value` lines; `#` starts a comment and list
//! values are comma separated. `q` also accepts `logspace(lo, hi, n)`.

use std::fmt;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::convcode::{format_octal_taps, parse_octal_taps, ConvCode, DetectionMode, Termination};
use crate::designer::{measure_f, search_gnfv, DesignReport, ErasureModel, FTable, SearchBudget};
use crate::error::Error;
use crate::estimators::{
    estimate_joint_pmf, exact_enum_perr, full_mc_perr, paper_formula_perr, ErrEstimate,
    EstimatorKind, JointDecodePmf, PaperScheme,
};
use crate::nfv::{NfvScheme, SchemeSpec};
use crate::trials::with_workers;

/// CSV header; columns are never reordered.
pub const CSV_HEADER: &str = "scheme,p,q,estimator,trials,p_err,ci_halfwidth,detection_mode,seed";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

/// Convolutional code settings shared by the subcommands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeParams {
    pub taps: Vec<u32>,
    pub constraint_length: usize,
    pub k: usize,
    pub termination: Termination,
}

impl Default for CodeParams {
    fn default() -> Self {
        Self {
            taps: vec![0o171, 0o133],
            constraint_length: 7,
            k: 70,
            termination: Termination::Unterminated,
        }
    }
}

impl CodeParams {
    pub fn build(&self) -> crate::Result<ConvCode> {
        ConvCode::new(self.constraint_length, self.taps.clone(), self.k, self.termination)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    /// One JSON object per line.
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" | "jsonl" => Ok(Self::Json),
            other => Err(Error::Parse(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub code: CodeParams,
    pub schemes: Vec<SchemeSpec>,
    pub servers: usize,
    pub frames: usize,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    /// Detection used by full-pipeline rows; the decode pmf is always genie-labelled.
    pub detection: DetectionMode,
    pub estimators: Vec<EstimatorKind>,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub workers: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            code: CodeParams::default(),
            schemes: vec![SchemeSpec::Diversity, SchemeSpec::Coded],
            servers: 3,
            frames: 2,
            p: vec![0.05],
            q: logspace(1e-4, 1e-1, 10),
            trials: 100_000,
            seed: 1,
            detection: DetectionMode::Genie,
            estimators: vec![EstimatorKind::ExactEnum, EstimatorKind::PaperFormula],
            output: None,
            format: OutputFormat::Csv,
            workers: None,
        }
    }
}

/// Keys accepted in config files and as command-line overrides.
pub const CONFIG_KEYS: &[&str] = &[
    "taps",
    "constraint_length",
    "k",
    "termination",
    "schemes",
    "servers",
    "frames",
    "p",
    "q",
    "trials",
    "seed",
    "detection",
    "estimators",
    "output",
    "format",
    "workers",
];

/// `n` points spaced evenly in log scale from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
                .collect()
        }
    }
}

fn parse_list<T: FromStr>(value: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| format!("bad item {s:?}: {e}")))
        .collect()
}

fn parse_one<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| format!("bad value {:?}: {e}", value.trim()))
}

fn parse_probabilities(value: &str) -> Result<Vec<f64>, String> {
    let v = value.trim();
    if let Some(args) = v.strip_prefix("logspace(").and_then(|r| r.strip_suffix(')')) {
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        let [lo, hi, n] = parts.as_slice() else {
            return Err("logspace takes (lo, hi, n)".into());
        };
        let lo: f64 = parse_one(lo)?;
        let hi: f64 = parse_one(hi)?;
        let n: usize = parse_one(n)?;
        if lo <= 0.0 || hi <= 0.0 {
            return Err("logspace bounds must be positive".into());
        }
        return Ok(logspace(lo, hi, n));
    }
    parse_list(v)
}

impl SweepConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key.trim().replace('-', "_").as_str() {
            "taps" => self.code.taps = parse_octal_taps(value).map_err(|e| e.to_string())?,
            "constraint_length" => self.code.constraint_length = parse_one(value)?,
            "k" => self.code.k = parse_one(value)?,
            "termination" => self.code.termination = parse_one(value)?,
            "schemes" => {
                // matrix rows use '/', so ',' only separates schemes
                self.schemes = parse_list(value)?;
            }
            "servers" => self.servers = parse_one(value)?,
            "frames" => self.frames = parse_one(value)?,
            "p" => self.p = parse_probabilities(value)?,
            "q" => self.q = parse_probabilities(value)?,
            "trials" => self.trials = parse_one(value)?,
            "seed" => self.seed = parse_one(value)?,
            "detection" => self.detection = parse_one(value)?,
            "estimators" => self.estimators = parse_list(value)?,
            "output" => {
                let v = value.trim();
                self.output = (!v.is_empty() && v != "-").then(|| PathBuf::from(v));
            }
            "format" => self.format = parse_one(value)?,
            "workers" => self.workers = Some(parse_one(value)?),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Parses a config file on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        config.apply_text(text)?;
        Ok(config)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError {
                line: Some(i + 1),
                field: line.to_string(),
                message: "expected key = value".into(),
            })?;
            self.set(key, value).map_err(|message| ConfigError {
                line: Some(i + 1),
                field: key.trim().to_string(),
                message,
            })?;
        }
        Ok(())
    }

    /// Checks ranges and builds every scheme once.
    pub fn validate(&self) -> Result<(ConvCode, Vec<NfvScheme>), ConfigError> {
        let err = |field: &str, message: String| ConfigError {
            line: None,
            field: field.to_string(),
            message,
        };
        let code = self.code.build().map_err(|e| err("code", e.to_string()))?;
        for (name, list) in [("p", &self.p), ("q", &self.q)] {
            if list.is_empty() {
                return Err(err(name, "empty list".into()));
            }
            if let Some(v) = list.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(err(name, format!("{v} is not in [0, 1]")));
            }
        }
        if self.trials == 0 {
            return Err(err("trials", "must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(err("estimators", "empty list".into()));
        }
        if self.schemes.is_empty() {
            return Err(err("schemes", "empty list".into()));
        }
        if self.workers == Some(0) {
            return Err(err("workers", "must be at least 1".into()));
        }
        if self.detection == DetectionMode::Crc16 && self.code.k <= crate::convcode::CRC_BITS {
            return Err(err("detection", "crc16 needs k > 16".into()));
        }
        let schemes = self
            .schemes
            .iter()
            .map(|s| s.build(self.servers, self.frames))
            .collect::<crate::Result<Vec<_>>>()
            .map_err(|e| err("schemes", e.to_string()))?;
        Ok((code, schemes))
    }
}

/// One output row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub scheme: String,
    pub p: f64,
    pub q: f64,
    pub estimator: EstimatorKind,
    pub trials: u64,
    pub p_err: f64,
    pub ci_halfwidth: f64,
    pub detection_mode: String,
    pub seed: u64,
}

impl SweepRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:e},{:e},{},{}",
            self.scheme,
            self.p,
            self.q,
            self.estimator,
            self.trials,
            self.p_err,
            self.ci_halfwidth,
            self.detection_mode,
            self.seed
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepSummary {
    pub rows: usize,
    pub points: usize,
    /// Descriptions of points that could not be computed.
    pub failed: Vec<String>,
}

impl SweepSummary {
    pub fn complete(&self) -> bool {
        self.failed.is_empty()
    }
}

/// Default worker count: available hardware parallelism.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Runs the sweep and writes rows as they are produced. The decode pmf is
/// estimated once per `(scheme, p)` and reused for every `q`.
pub fn run_sweep<W: Write + Send>(config: &SweepConfig, out: &mut W) -> Result<SweepSummary, SweepError> {
    let (code, schemes) = config.validate()?;
    let workers = config.workers.unwrap_or_else(default_workers);
    with_workers(workers, || sweep_inner(config, &code, &schemes, out as &mut dyn Write))
}

fn sweep_inner(
    config: &SweepConfig,
    code: &ConvCode,
    schemes: &[NfvScheme],
    out: &mut dyn Write,
) -> Result<SweepSummary, SweepError> {
    let mut summary = SweepSummary::default();
    if config.format == OutputFormat::Csv {
        writeln!(out, "{CSV_HEADER}")?;
    }
    let needs_pmf = config
        .estimators
        .iter()
        .any(|e| matches!(e, EstimatorKind::ExactEnum | EstimatorKind::PaperFormula));
    for (spec, scheme) in config.schemes.iter().zip(schemes) {
        let label = spec.to_string();
        for &p in &config.p {
            let pmf: Option<JointDecodePmf> = if needs_pmf {
                Some(estimate_joint_pmf(code, scheme, p, config.trials, config.seed)?)
            } else {
                None
            };
            for &q in &config.q {
                for &estimator in &config.estimators {
                    summary.points += 1;
                    let detection = match estimator {
                        EstimatorKind::FullMc => config.detection,
                        _ => DetectionMode::Genie,
                    };
                    let result: crate::Result<ErrEstimate> = match estimator {
                        EstimatorKind::ExactEnum => {
                            exact_enum_perr(pmf.as_ref().expect("pmf computed"), q, scheme)
                        }
                        EstimatorKind::PaperFormula => match PaperScheme::classify(scheme) {
                            Some(kind) => {
                                paper_formula_perr(pmf.as_ref().expect("pmf computed"), q, kind)
                            }
                            None => Err(Error::InvalidArg(
                                "closed-form estimator only covers the 3-server, 2-frame diversity and coded layouts".into(),
                            )),
                        },
                        EstimatorKind::FullMc => full_mc_perr(
                            code,
                            scheme,
                            p,
                            q,
                            config.trials,
                            config.seed,
                            config.detection,
                        )
                        .map(|r| r.estimate),
                    };
                    match result {
                        Ok(est) => {
                            let row = SweepRow {
                                scheme: label.clone(),
                                p,
                                q,
                                estimator,
                                trials: est.trials,
                                p_err: est.p_err,
                                ci_halfwidth: est.ci_halfwidth,
                                detection_mode: detection.to_string(),
                                seed: config.seed,
                            };
                            match config.format {
                                OutputFormat::Csv => writeln!(out, "{}", row.to_csv())?,
                                OutputFormat::Json => writeln!(
                                    out,
                                    "{}",
                                    serde_json::to_string(&row).expect("row serializes")
                                )?,
                            }
                            summary.rows += 1;
                        }
                        Err(e) => summary
                            .failed
                            .push(format!("{label} p={p} q={q} {estimator}: {e}")),
                    }
                }
            }
        }
    }
    if !summary.complete() {
        match config.format {
            OutputFormat::Csv => writeln!(
                out,
                "# partial: {} of {} points failed",
                summary.failed.len(),
                summary.points
            )?,
            OutputFormat::Json => writeln!(
                out,
                "{}",
                serde_json::json!({"partial": true, "failed": summary.failed.len(), "points": summary.points})
            )?,
        }
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignParams {
    pub code: CodeParams,
    pub frames: usize,
    pub servers: usize,
    pub p: f64,
    pub q: f64,
    pub trials: u64,
    pub budget: usize,
    pub seed: u64,
    /// Skip measurement and use this table.
    pub f_table: Option<FTable>,
}

impl Default for DesignParams {
    fn default() -> Self {
        Self {
            code: CodeParams::default(),
            frames: 2,
            servers: 3,
            p: 0.05,
            q: 1e-2,
            trials: 20_000,
            budget: 100_000,
            seed: 1,
            f_table: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignOutcome {
    pub f_table: FTable,
    pub reports: Vec<DesignReport>,
}

impl DesignOutcome {
    /// Ranked reports as JSON lines.
    pub fn write_jsonl(&self, out: &mut dyn Write) -> io::Result<()> {
        for r in &self.reports {
            writeln!(out, "{}", r.to_json())?;
        }
        Ok(())
    }
}

/// Measures `f(d)` for `d ≤ K` (unless a table is supplied) and ranks
/// generator matrices by erasure failure probability.
pub fn run_design(params: &DesignParams) -> crate::Result<DesignOutcome> {
    if params.budget == 0 {
        return Err(Error::InvalidArg("budget must be positive".into()));
    }
    let f_table = match &params.f_table {
        Some(t) => t.clone(),
        None => {
            let code = params.code.build()?;
            measure_f(&code, params.p, params.frames.max(1), params.trials, params.seed)?
        }
    };
    let model = ErasureModel::new(params.q, f_table.clone())?;
    let reports = search_gnfv(
        params.frames,
        params.servers,
        &model,
        SearchBudget {
            max_candidates: params.budget,
            seed: params.seed,
        },
    )?;
    Ok(DesignOutcome { f_table, reports })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MfrReport {
    pub scheme: String,
    pub mfr: usize,
    /// 1-based server numbers whose joint removal prevents recovery.
    pub witness: Vec<usize>,
}

impl fmt::Display for MfrReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let witness: Vec<String> = self.witness.iter().map(ToString::to_string).collect();
        write!(f, "scheme {}\nmfr {}\nwitness {{{}}}", self.scheme, self.mfr, witness.join(","))
    }
}

pub fn run_mfr(spec: &SchemeSpec, servers: usize, frames: usize) -> crate::Result<MfrReport> {
    let scheme = spec.build(servers, frames)?;
    Ok(MfrReport {
        scheme: spec.to_string(),
        mfr: scheme.mfr(),
        witness: scheme.mfr_witness().into_iter().map(|j| j + 1).collect(),
    })
}

impl fmt::Display for CodeParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "taps={} constraint_length={} k={} termination={}",
            format_octal_taps(&self.taps),
            self.constraint_length,
            self.k,
            self.termination
        )
    }
}
