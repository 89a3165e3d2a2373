//! `hidm`: build, inspect, run and sweep hierarchical distribution matchers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use hidm_core::config::{Structure, StructureConfig};
use hidm_core::sweeps::{
    default_inner_grid, ess_reference, search_lut_hidm, sweep_ccdm_2layer, sweep_ppm, write_csv,
    Ccdm2Params, CsvMeta, LutSearchParams, PpmSweepParams, SweepRecord,
};
use hidm_core::{verify_dm, Alphabet, BitWord, Rate, RateLossMode};

#[derive(Parser)]
#[command(name = "hidm", version, about = "Hierarchical distribution matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a structure and print its shape and metrics as JSON.
    Build(ConfigArgs),
    /// Print the metrics report of a structure as JSON.
    Info(ConfigArgs),
    /// Encode bit lines into amplitude lines.
    Encode(StreamArgs),
    /// Decode amplitude lines into bit lines.
    Decode(StreamArgs),
    /// Check the matcher contract and per-layer disjointness.
    Verify(VerifyArgs),
    /// Run a case-study sweep and write CSV.
    Sweep(Box<SweepArgs>),
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StreamArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sampled inputs when exhaustive checking is too large.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    /// Largest input space checked exhaustively.
    #[arg(long, default_value_t = 1 << 16)]
    exhaustive_limit: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Ccdm2,
    Ppm,
    Lutsearch,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Mb,
    Induced,
}

impl From<Mode> for RateLossMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Mb => RateLossMode::Mb,
            Mode::Induced => RateLossMode::Induced,
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    kind: SweepKind,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Target rate as NUM/DEN.
    #[arg(long)]
    target: Option<Rate>,
    /// Largest layer count.
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Mb)]
    mode: Mode,
    #[arg(long, default_value_t = 4)]
    alphabet_size: usize,
    /// First-layer block length.
    #[arg(long)]
    n1: Option<usize>,
    /// ccdm2: outer block length.
    #[arg(long)]
    n2: Option<usize>,
    /// ccdm2: number of inner matchers.
    #[arg(long)]
    num_inner: Option<usize>,
    /// ccdm2: comma-separated inner design rates (NUM/DEN).
    #[arg(long, value_delimiter = ',')]
    inner_grid: Option<Vec<Rate>>,
    /// ppm: smallest and largest first-layer input bits.
    #[arg(long)]
    k1_min: Option<usize>,
    #[arg(long)]
    k1_max: Option<usize>,
    /// ppm: comma-separated position counts (powers of two).
    #[arg(long, value_delimiter = ',')]
    positions: Option<Vec<usize>>,
    /// ppm: cap on the total block length.
    #[arg(long)]
    cap_ntot: Option<usize>,
    /// lutsearch: memory cap in bits.
    #[arg(long)]
    memory_cap: Option<u64>,
    /// lutsearch: comma-separated LUT counts below the top layer.
    #[arg(long, value_delimiter = ',')]
    num_dms_grid: Option<Vec<usize>>,
    /// lutsearch: comma-separated block-length scales.
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<u64>>,
    #[arg(long)]
    k_max: Option<usize>,
}

/// Failures reading or writing files; everything else is a validation error.
#[derive(Debug)]
struct IoFailure(std::io::Error);

impl std::fmt::Display for IoFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for IoFailure {}

fn io<T>(r: std::io::Result<T>, what: impl FnOnce() -> String) -> anyhow::Result<T> {
    r.map_err(IoFailure).with_context(what)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<IoFailure>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Build(a) => {
            let s = load(&a.config)?;
            let m = s.metrics()?;
            let value = json!({
                "type": s.as_dm().kind(),
                "total_bits": s.total_bits(),
                "total_len": s.total_len(),
                "rate": format!("{}/{}", s.rate().numer(), s.rate().denom()),
                "memory_bits": m.memory_bits.to_string(),
                "metrics": m.to_json(),
            });
            emit_json(a.out.as_deref(), &value)?;
        }
        Command::Info(a) => {
            let s = load(&a.config)?;
            emit_json(a.out.as_deref(), &s.metrics()?.to_json())?;
        }
        Command::Encode(a) => {
            let s = load(&a.config)?;
            stream(&a, |line| {
                let bits: BitWord = line.parse()?;
                let levels = s.encode_word(&bits)?;
                Ok(levels.iter().map(u32::to_string).collect::<Vec<_>>().join(" "))
            })?;
        }
        Command::Decode(a) => {
            let s = load(&a.config)?;
            stream(&a, |line| {
                let levels = line
                    .split_whitespace()
                    .map(|t| t.parse::<u32>().with_context(|| format!("bad amplitude {t:?}")))
                    .collect::<anyhow::Result<Vec<_>>>()?;
                Ok(s.decode_levels(&levels)?.to_string())
            })?;
        }
        Command::Verify(a) => {
            let s = load(&a.config)?;
            let report = verify_dm(s.as_dm(), a.exhaustive_limit, a.samples, a.seed);
            let disjoint = s.disjointness()?;
            let passed = report.passed() && disjoint.iter().all(|(_, d)| d.disjoint);
            let value = json!({
                "passed": passed,
                "contract": report,
                "disjointness": disjoint
                    .iter()
                    .map(|(layer, d)| json!({
                        "layer": layer,
                        "disjoint": d.disjoint,
                        "witness": d.witness,
                    }))
                    .collect::<Vec<_>>(),
            });
            emit_json(a.out.as_deref(), &value)?;
            if !passed {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Sweep(a) => sweep(&a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn load(path: &Path) -> anyhow::Result<Structure> {
    let config = io(StructureConfig::from_path(path), || {
        format!("cannot read {}", path.display())
    })?
    .with_context(|| format!("invalid config {}", path.display()))?;
    Ok(config.build()?)
}

fn emit_json(out: Option<&Path>, value: &serde_json::Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => io(std::fs::write(p, text), || format!("cannot write {}", p.display())),
        None => io(std::io::stdout().write_all(text.as_bytes()), || "stdout".into()),
    }
}

/// Maps each non-empty input line to one output line.
fn stream(a: &StreamArgs, mut f: impl FnMut(&str) -> anyhow::Result<String>) -> anyhow::Result<()> {
    let input = io(File::open(&a.input), || format!("cannot open {}", a.input.display()))?;
    let output = io(File::create(&a.out), || format!("cannot create {}", a.out.display()))?;
    let mut w = BufWriter::new(output);
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = io(line, || format!("cannot read {}", a.input.display()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let out = f(line).with_context(|| format!("line {}", i + 1))?;
        io(writeln!(w, "{out}"), || format!("cannot write {}", a.out.display()))?;
    }
    io(w.flush(), || format!("cannot write {}", a.out.display()))
}

fn sweep(a: &SweepArgs) -> anyhow::Result<()> {
    let alphabet = Alphabet::new(a.alphabet_size)?;
    let mode: RateLossMode = a.mode.into();
    let mut meta = CsvMeta::new(mode, a.seed);
    let records: Vec<SweepRecord> = match a.kind {
        SweepKind::Ccdm2 => {
            let mut p = Ccdm2Params::case_study();
            p.alphabet = alphabet;
            p.n1 = a.n1.unwrap_or(p.n1);
            p.n2 = a.n2.unwrap_or(p.n2);
            p.target_rate = a.target.unwrap_or(p.target_rate);
            p.num_inner = a.num_inner.unwrap_or(p.num_inner);
            p.inner_rate_grid = match &a.inner_grid {
                Some(g) => g.clone(),
                None => default_inner_grid(p.num_inner.saturating_sub(1)),
            };
            meta = meta
                .with("target", p.target_rate)
                .with("inner_grid", join(&p.inner_rate_grid));
            sweep_ccdm_2layer(&p)?
        }
        SweepKind::Ppm => {
            let mut p = PpmSweepParams::case_study();
            p.alphabet = alphabet;
            p.mode = mode;
            p.n1 = a.n1.unwrap_or(p.n1);
            p.l_max = a.layers.unwrap_or(p.l_max);
            let lo = a.k1_min.unwrap_or(p.k1_range[0]);
            let hi = a.k1_max.unwrap_or(*p.k1_range.last().unwrap_or(&lo));
            p.k1_range = (lo..=hi).collect();
            p.position_grid = a.positions.clone().unwrap_or(p.position_grid);
            p.cap_ntot = a.cap_ntot.unwrap_or(p.cap_ntot);
            meta = meta
                .with("positions", join(&p.position_grid))
                .with("cap_ntot", p.cap_ntot);
            sweep_ppm(&p)?
        }
        SweepKind::Lutsearch => {
            let target = a.target.unwrap_or(Rate::new(507, 320));
            let mut p = LutSearchParams::new(target, alphabet);
            p.mode = mode;
            p.layers = (1..=a.layers.unwrap_or(5)).collect();
            p.memory_cap = a.memory_cap.unwrap_or(p.memory_cap);
            p.num_dms_grid = a.num_dms_grid.clone().unwrap_or(p.num_dms_grid);
            p.scales = a.scales.clone().unwrap_or(p.scales);
            p.k_max = a.k_max.unwrap_or(p.k_max);
            if p.scales.contains(&0) {
                bail!("scales must be positive");
            }
            meta = meta
                .with("target", target)
                .with("memory_cap", p.memory_cap)
                .with("num_dms_grid", join(&p.num_dms_grid));
            let mut records = search_lut_hidm(&p)?.records();
            for &scale in &p.scales {
                records.push(ess_reference(target, &p.alphabet, scale)?);
            }
            records
        }
    };
    match &a.out {
        Some(path) => {
            let f = io(File::create(path), || format!("cannot create {}", path.display()))?;
            write_csv(BufWriter::new(f), &records, &meta)?;
        }
        None => write_csv(std::io::stdout().lock(), &records, &meta)?,
    }
    Ok(())
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}
