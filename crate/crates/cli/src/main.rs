//! `nfvsim`: error-probability sweeps, generator design and scheme queries.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use coded_nfv::convcode::{parse_octal_taps, LinearCode, Termination};
use coded_nfv::designer::FTable;
use coded_nfv::experiment::{run_design, run_mfr, run_sweep, CodeParams, DesignParams, SweepConfig};
use coded_nfv::gf2::BitVec;
use coded_nfv::nfv::SchemeSpec;
use coded_nfv::trials::with_workers;

/// Environment variable holding the default worker count.
const WORKERS_ENV: &str = "NFVSIM_WORKERS";

#[derive(Parser)]
#[command(name = "nfvsim", version, about = "Coded NFV uplink decoding simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate P_err over a (scheme, p, q) grid and write CSV or JSON lines.
    Sweep(SweepArgs),
    /// Measure f(d) and rank K x N generator matrices by erasure failure probability.
    Design(DesignArgs),
    /// Minimum failure removal of a scheme, with a witness set.
    Mfr(MfrArgs),
    /// Encode a bit string with the convolutional code.
    Encode(CodecArgs),
    /// Viterbi-decode a received bit string.
    Decode(CodecArgs),
}

#[derive(Args)]
struct CodeFlags {
    /// Generator taps in octal, comma separated.
    #[arg(long, value_name = "OCTAL,...")]
    taps: Option<String>,
    #[arg(long)]
    constraint_length: Option<usize>,
    /// Message bits per frame.
    #[arg(long)]
    k: Option<usize>,
    /// `unterminated` or `zero-tail`.
    #[arg(long)]
    termination: Option<String>,
}

impl CodeFlags {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if let Some(v) = &self.taps {
            out.push(("taps", v.clone()));
        }
        if let Some(v) = self.constraint_length {
            out.push(("constraint_length", v.to_string()));
        }
        if let Some(v) = self.k {
            out.push(("k", v.to_string()));
        }
        if let Some(v) = &self.termination {
            out.push(("termination", v.clone()));
        }
        out
    }

    fn params(&self, mut base: CodeParams) -> Result<CodeParams> {
        if let Some(t) = &self.taps {
            base.taps = parse_octal_taps(t)?;
        }
        if let Some(c) = self.constraint_length {
            base.constraint_length = c;
        }
        if let Some(k) = self.k {
            base.k = k;
        }
        if let Some(t) = &self.termination {
            base.termination = t.parse::<Termination>()?;
        }
        Ok(base)
    }
}

#[derive(Args)]
struct SweepArgs {
    /// Config file of `key = value` lines; flags override it.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[command(flatten)]
    code: CodeFlags,
    /// Schemes: diversity, coded, matrix:ROWS (rows separated by '/').
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    servers: Option<usize>,
    #[arg(long)]
    frames: Option<usize>,
    /// Channel crossover probabilities, comma separated or logspace(lo,hi,n).
    #[arg(long)]
    p: Option<String>,
    /// Server failure probabilities, comma separated or logspace(lo,hi,n).
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// `genie` or `crc16`; applies to fullmc rows.
    #[arg(long)]
    detection: Option<String>,
    /// Any of exact, paper, fullmc.
    #[arg(long)]
    estimators: Option<String>,
    /// Output file; stdout when absent or `-`.
    #[arg(long, short)]
    output: Option<String>,
    /// `csv` or `json`.
    #[arg(long)]
    format: Option<String>,
    /// Worker threads; defaults to $NFVSIM_WORKERS, then the CPU count.
    #[arg(long)]
    workers: Option<usize>,
    /// Extra `key=value` setting, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    code: CodeFlags,
    #[arg(long, default_value_t = 2)]
    frames: usize,
    #[arg(long, default_value_t = 3)]
    servers: usize,
    #[arg(long, default_value_t = 0.05)]
    p: f64,
    #[arg(long, default_value_t = 1e-2)]
    q: f64,
    /// Trials per column weight when measuring f(d).
    #[arg(long, default_value_t = 20_000)]
    trials: u64,
    /// Most candidate matrices to evaluate.
    #[arg(long, default_value_t = 100_000)]
    budget: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Use this `d,f` table instead of measuring.
    #[arg(long, value_name = "CSV")]
    f_table: Option<PathBuf>,
    /// Write the f table used to this file.
    #[arg(long, value_name = "CSV")]
    f_table_out: Option<PathBuf>,
    /// Report at most this many candidates.
    #[arg(long)]
    top: Option<usize>,
    /// JSON-lines output file; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct MfrArgs {
    /// diversity, coded, or matrix:ROWS.
    scheme: String,
    #[arg(long, default_value_t = 3)]
    servers: usize,
    #[arg(long, default_value_t = 2)]
    frames: usize,
}

#[derive(Args)]
struct CodecArgs {
    /// Bits as a 0/1 string.
    #[arg(long)]
    bits: String,
    #[command(flatten)]
    code: CodeFlags,
}

fn env_workers() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) if !v.trim().is_empty() => {
            let n: usize = v
                .trim()
                .parse()
                .with_context(|| format!("{WORKERS_ENV}={v:?} is not a worker count"))?;
            if n == 0 {
                bail!("{WORKERS_ENV} must be at least 1");
            }
            Ok(Some(n))
        }
        _ => Ok(None),
    }
}

fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write + Send>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let mut config = SweepConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        config
            .apply_text(&text)
            .with_context(|| format!("in {}", path.display()))?;
    }
    if config.workers.is_none() {
        config.workers = env_workers()?;
    }
    let mut overrides = args.code.overrides();
    let flags: [(&str, Option<String>); 12] = [
        ("schemes", args.schemes),
        ("servers", args.servers.map(|v| v.to_string())),
        ("frames", args.frames.map(|v| v.to_string())),
        ("p", args.p),
        ("q", args.q),
        ("trials", args.trials.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("detection", args.detection),
        ("estimators", args.estimators),
        ("output", args.output),
        ("format", args.format),
        ("workers", args.workers.map(|v| v.to_string())),
    ];
    overrides.extend(flags.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))));
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
        config.set(k, v).map_err(|e| anyhow::anyhow!("--set {k}: {e}"))?;
    }
    for (key, value) in overrides {
        config.set(key, &value).map_err(|e| anyhow::anyhow!("--{}: {e}", key.replace('_', "-")))?;
    }
    let mut out = open_output(config.output.as_ref())?;
    let summary = run_sweep(&config, &mut out)?;
    out.flush()?;
    if summary.complete() {
        return Ok(ExitCode::SUCCESS);
    }
    for f in &summary.failed {
        eprintln!("nfvsim: skipped {f}");
    }
    eprintln!(
        "nfvsim: partial sweep, {} of {} points failed",
        summary.failed.len(),
        summary.points
    );
    Ok(ExitCode::from(2))
}

fn design(args: DesignArgs) -> Result<ExitCode> {
    let f_table = match &args.f_table {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Some(FTable::from_csv(&text).with_context(|| format!("in {}", path.display()))?)
        }
        None => None,
    };
    let params = DesignParams {
        code: args.code.params(CodeParams::default())?,
        frames: args.frames,
        servers: args.servers,
        p: args.p,
        q: args.q,
        trials: args.trials,
        budget: args.budget,
        seed: args.seed,
        f_table,
    };
    let workers = match args.workers {
        Some(w) => w,
        None => env_workers()?.unwrap_or_else(coded_nfv::experiment::default_workers),
    };
    if workers == 0 {
        bail!("--workers must be at least 1");
    }
    let mut outcome = with_workers(workers, || run_design(&params))?;
    if let Some(top) = args.top {
        outcome.reports.truncate(top);
    }
    if let Some(path) = &args.f_table_out {
        std::fs::write(path, outcome.f_table.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    }
    let mut out = open_output(args.output.as_ref())?;
    outcome.write_jsonl(&mut out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn mfr(args: MfrArgs) -> Result<ExitCode> {
    let spec: SchemeSpec = args.scheme.parse()?;
    println!("{}", run_mfr(&spec, args.servers, args.frames)?);
    Ok(ExitCode::SUCCESS)
}

fn codec(args: CodecArgs, encode: bool) -> Result<ExitCode> {
    let code = args.code.params(CodeParams::default())?;
    let bits: BitVec = args.bits.trim().parse()?;
    // the message length follows the input unless --k is given
    let k = match (args.code.k, encode) {
        (Some(k), _) => k,
        (None, true) => bits.len(),
        (None, false) => {
            let tail = match code.termination {
                Termination::ZeroTail => code.constraint_length - 1,
                Termination::Unterminated => 0,
            };
            let outputs = code.taps.len();
            if !bits.len().is_multiple_of(outputs) || bits.len() / outputs <= tail {
                bail!("{} received bits do not fit a rate-1/{outputs} frame", bits.len());
            }
            bits.len() / outputs - tail
        }
    };
    let code = CodeParams { k, ..code }.build()?;
    let out = if encode { code.encode(&bits)? } else { code.decode(&bits)? };
    println!("{out}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Design(a) => design(a),
        Command::Mfr(a) => mfr(a),
        Command::Encode(a) => codec(a, true),
        Command::Decode(a) => codec(a, false),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("nfvsim: {e:#}");
            ExitCode::FAILURE
        }
    }
}
