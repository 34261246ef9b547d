// SPDX-License-Identifier: Apache-2.0

//! Command-line front end: `prove`, `bench`, `gen`, `features` and `eval`.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cec_core::aiger::{parse_aiger, write_aag};
use cec_core::bdd::BddLimits;
use cec_core::bench::{BenchReport, BenchRow};
use cec_core::es::compile_program;
use cec_core::features::{extract_features, FEATURE_NAMES};
use cec_core::gen::{gen_multiplier, gen_multiplier_miter, mutate_gate, random_xag, MultArch};
use cec_core::miter::{build_miter, or_tree};
use cec_core::sched::{
    DispatchStats, EngineKind, Mode, Models, Scheduler, SchedulerConfig, TreeEnsemble,
};
use cec_core::sweep::{sweep, Obligation, ObligationSolver, SubMiter, SweepConfig};
use cec_core::xor_detect::detect_xors;
use cec_core::{Budget, CheckResult, Xag, XagBuilder};

pub const EXIT_EQ: i32 = 0;
pub const EXIT_NEQ: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

/// Upper bound on worker threads.
pub const MAX_THREADS: usize = 32;

#[derive(Parser, Debug)]
#[command(
    name = "cec",
    version,
    about = "Combinational equivalence checker for XOR-rich datapath circuits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Prove a miter (one file) or the equivalence of two circuits.
    Prove(ProveArgs),
    /// Run every AIGER miter in a directory and report PAR2.
    Bench(BenchArgs),
    /// Generate benchmark circuits.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Print the feature vector of each single-output file as CSV.
    Features {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Evaluate a miter on one input assignment (bit i drives PI i).
    Eval { file: PathBuf, bits: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Auto,
    Sat,
    Es,
    Bdd,
    PortfolioEven,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StatsFormat {
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct EngineOpts {
    /// Worker threads (default: available cores, at most 32).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = EngineArg::Auto)]
    pub engine: EngineArg,
    /// Pick SAT or ES per obligation from the XOR score alone.
    #[arg(long)]
    pub select_only: bool,
    /// Runtime model, `sat=FILE`, `bdd=FILE` or `FILE` (SAT); repeatable.
    #[arg(long = "model")]
    pub models: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Node limit of the BDD engine.
    #[arg(long)]
    pub bdd_max_nodes: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct ProveArgs {
    /// A miter, or two circuits with the same interface.
    #[arg(required = true, num_args = 1..=2)]
    pub files: Vec<PathBuf>,
    #[command(flatten)]
    pub engine: EngineOpts,
    /// Global timeout in seconds.
    #[arg(long, default_value_t = 3600.0)]
    pub timeout: f64,
    #[arg(long, value_enum)]
    pub stats: Option<StatsFormat>,
    /// Write every dispatched sub-miter as ASCII AIGER plus a manifest.
    #[arg(long)]
    pub dump_submiters: Option<PathBuf>,
    /// Append divide-and-conquer task transitions to this file.
    #[arg(long)]
    pub sat_log: Option<PathBuf>,
    /// Print the ES instruction stream of the miter to stderr.
    #[arg(long)]
    pub es_dump_program: bool,
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    pub dir: PathBuf,
    /// Per-instance cutoff in seconds.
    #[arg(long, default_value_t = 3600.0)]
    pub cutoff: f64,
    #[command(flatten)]
    pub engine: EngineOpts,
}

#[derive(Subcommand, Debug, Clone)]
pub enum GenCommand {
    /// Miter of two multipliers of the same width.
    Mult {
        width: usize,
        #[arg(default_value = "array")]
        arch_a: String,
        #[arg(default_value = "diagonal")]
        arch_b: String,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Random single-output graph.
    Random {
        #[arg(long)]
        pis: usize,
        #[arg(long)]
        gates: usize,
        #[arg(long, default_value_t = 0.3)]
        xor_ratio: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Array multiplier mitered against a diagonal one with gate `gate`
    /// switched between AND and XOR.
    Mutation {
        width: usize,
        #[arg(long)]
        gate: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
}

/// Parses and runs `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => EXIT_ERROR,
            };
        }
    };
    let r = match &cli.command {
        Command::Prove(a) => cmd_prove(a, out, err),
        Command::Bench(a) => cmd_bench(a, out, err),
        Command::Gen(g) => cmd_gen(g, out),
        Command::Features { files, seed } => cmd_features(files, *seed, out),
        Command::Eval { file, bits } => cmd_eval(file, bits, out),
    };
    match r {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

pub fn read_xag(path: &Path) -> Result<Xag> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let x = parse_aiger(&bytes).with_context(|| format!("parsing {}", path.display()))?;
    Ok(detect_xors(&x))
}

/// One file is a miter (outputs ORed); two files are mitered together.
pub fn load_miter(files: &[PathBuf]) -> Result<Xag> {
    match files {
        [one] => {
            let x = read_xag(one)?;
            if x.outputs().len() == 1 {
                return Ok(x);
            }
            let mut b = XagBuilder::new(x.num_pis());
            let map = b.import(&x);
            let outs: Vec<_> = x
                .outputs()
                .iter()
                .map(|o| map[o.node()].negate_if(o.is_negated()))
                .collect();
            let o = or_tree(&mut b, &outs);
            Ok(b.build(vec![o]))
        }
        [a, b] => Ok(build_miter(&read_xag(a)?, &read_xag(b)?)?),
        _ => bail!("expected one or two input files"),
    }
}

/// `--threads`, else `FASTLEC_THREADS`, else available cores; capped at 32.
pub fn resolve_threads(flag: Option<usize>, env: Option<&str>) -> Result<usize> {
    let n = match (flag, env) {
        (Some(n), _) => n,
        (None, Some(v)) => v
            .trim()
            .parse::<usize>()
            .with_context(|| format!("FASTLEC_THREADS={v} is not a thread count"))?,
        (None, None) => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
    };
    if n == 0 {
        bail!("thread count must be at least 1");
    }
    Ok(n.min(MAX_THREADS))
}

pub fn load_models(specs: &[String]) -> Result<Models> {
    let mut m = Models::default();
    for s in specs {
        let (engine, path) = match s.split_once('=') {
            Some((e, p)) => (e.parse::<EngineKind>().map_err(anyhow::Error::msg)?, p),
            None => (EngineKind::Sat, s.as_str()),
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading model {path}"))?;
        let model =
            TreeEnsemble::from_json(&text).with_context(|| format!("loading model {path}"))?;
        match engine {
            EngineKind::Sat => m.sat = Some(model),
            EngineKind::Bdd => m.bdd = Some(model),
            EngineKind::Es => bail!("ES uses the analytic model; no model file accepted"),
        }
    }
    Ok(m)
}

fn scheduler_config(o: &EngineOpts, cutoff: f64) -> Result<SchedulerConfig> {
    let env = std::env::var("FASTLEC_THREADS").ok();
    let threads = resolve_threads(o.threads, env.as_deref())?;
    let mode = if o.select_only {
        Mode::SelectOnly
    } else {
        match o.engine {
            EngineArg::Auto => Mode::Auto,
            EngineArg::Sat => Mode::Only(EngineKind::Sat),
            EngineArg::Es => Mode::Only(EngineKind::Es),
            EngineArg::Bdd => Mode::Only(EngineKind::Bdd),
            EngineArg::PortfolioEven => Mode::PortfolioEven,
        }
    };
    let mut cfg = SchedulerConfig {
        threads,
        mode,
        cutoff,
        models: load_models(&o.models)?,
        seed: o.seed,
        ..SchedulerConfig::default()
    };
    if let Some(n) = o.bdd_max_nodes {
        cfg.engines.bdd_limits = BddLimits {
            max_nodes: n,
            ..BddLimits::default()
        };
    }
    Ok(cfg)
}

/// Writes each sub-miter before handing it on.
struct Dumper<'a> {
    inner: &'a mut Scheduler,
    dir: PathBuf,
    manifest: File,
}

impl ObligationSolver for Dumper<'_> {
    fn check(&mut self, sm: &SubMiter, obligation: Obligation, budget: &Budget) -> CheckResult {
        let path = self.dir.join(format!("sm_{:06}.aag", sm.id));
        let ok = fs::write(&path, write_aag(&sm.circuit)).is_ok()
            && writeln!(
                self.manifest,
                "{},{},{},{}",
                sm.id,
                sm.origin.0,
                sm.origin.1,
                sm.circuit.num_pis()
            )
            .is_ok();
        if !ok {
            eprintln!("warning: could not dump sub-miter {}", sm.id);
        }
        self.inner.check(sm, obligation, budget)
    }
}

#[derive(Serialize, Debug)]
pub struct SweepSummary {
    pub rounds: usize,
    pub submiters: usize,
    pub pairs_proven: usize,
    pub pairs_refuted: usize,
    pub pairs_unknown: usize,
    pub structural_merges: usize,
    pub merges: usize,
}

#[derive(Serialize, Debug)]
pub struct RunStats {
    pub verdict: String,
    pub witness: Option<String>,
    pub wall_seconds: f64,
    pub threads: usize,
    pub mode: Mode,
    pub pis: usize,
    pub gates: usize,
    pub xors: usize,
    pub sweep: SweepSummary,
    pub engines: DispatchStats,
}

pub fn bits_string(w: &[bool]) -> String {
    w.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Outcome of one proof run.
pub struct ProveOutcome {
    pub result: CheckResult,
    pub stats: RunStats,
}

/// Sweeps `miter` under `cfg` within `timeout`.
pub fn prove_miter(
    miter: &Xag,
    cfg: SchedulerConfig,
    timeout: Duration,
    dump: Option<&Path>,
) -> Result<ProveOutcome> {
    let start = Instant::now();
    let threads = cfg.threads;
    let mode = cfg.mode;
    let seed = cfg.seed;
    let mut sched = Scheduler::new(cfg);
    let budget = Budget::with_timeout(timeout);
    let sweep_cfg = SweepConfig {
        seed,
        pair_timeout: SweepConfig::default().pair_timeout.min(timeout / 10),
        ..SweepConfig::default()
    };
    let outcome = match dump {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let mpath = dir.join("manifest.csv");
            let fresh = !mpath.exists();
            let mut manifest = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&mpath)
                .with_context(|| format!("opening {}", mpath.display()))?;
            if fresh {
                writeln!(manifest, "id,origin_a,origin_b,num_pis")?;
            }
            let mut d = Dumper {
                inner: &mut sched,
                dir: dir.to_path_buf(),
                manifest,
            };
            sweep(miter, &sweep_cfg, &mut d, &budget)
        }
        None => sweep(miter, &sweep_cfg, &mut sched, &budget),
    };
    let (verdict, witness) = match &outcome.result {
        CheckResult::Equivalent => ("EQ", None),
        CheckResult::Counterexample(w) => ("NEQ", Some(bits_string(w))),
        CheckResult::Unknown(_) => ("UNKNOWN", None),
    };
    let s = &outcome.stats;
    let stats = RunStats {
        verdict: verdict.to_string(),
        witness,
        wall_seconds: start.elapsed().as_secs_f64(),
        threads,
        mode,
        pis: miter.num_pis(),
        gates: miter.num_gates(),
        xors: miter.num_xors(),
        sweep: SweepSummary {
            rounds: s.rounds,
            submiters: s.submiters,
            pairs_proven: s.pairs_proven,
            pairs_refuted: s.pairs_refuted,
            pairs_unknown: s.pairs_unknown,
            structural_merges: s.structural_merges,
            merges: s.merges,
        },
        engines: sched.stats,
    };
    Ok(ProveOutcome {
        result: outcome.result,
        stats,
    })
}

fn timeout_of(seconds: f64) -> Result<Duration> {
    if !(seconds > 0.0) || !seconds.is_finite() {
        bail!("timeout must be a positive number of seconds");
    }
    Ok(Duration::from_secs_f64(seconds))
}

pub fn cmd_prove(a: &ProveArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let timeout = timeout_of(a.timeout)?;
    let miter = load_miter(&a.files)?;
    let mut cfg = scheduler_config(&a.engine, a.timeout)?;
    if let Some(p) = &a.sat_log {
        let f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(p)
            .with_context(|| format!("opening {}", p.display()))?;
        cfg.engines.sat_log = Some(Arc::new(Mutex::new(f)));
    }
    if a.es_dump_program {
        match compile_program(&miter) {
            Ok(p) => write!(err, "{}", p.dump())?,
            Err(e) => writeln!(err, "# no ES program: {e}")?,
        }
    }
    let r = prove_miter(&miter, cfg, timeout, a.dump_submiters.as_deref())?;
    let code = match &r.result {
        CheckResult::Equivalent => {
            writeln!(out, "EQ")?;
            EXIT_EQ
        }
        CheckResult::Counterexample(w) => {
            writeln!(out, "NEQ {}", bits_string(w))?;
            EXIT_NEQ
        }
        CheckResult::Unknown(_) => {
            writeln!(out, "UNKNOWN")?;
            EXIT_UNKNOWN
        }
    };
    if a.stats == Some(StatsFormat::Json) {
        writeln!(out, "{}", serde_json::to_string_pretty(&r.stats)?)?;
    }
    Ok(code)
}

fn aiger_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("aag" | "aig")))
        .collect();
    files.sort();
    Ok(files)
}

pub fn cmd_bench(a: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let cutoff = timeout_of(a.cutoff)?;
    let files = aiger_files(&a.dir)?;
    if files.is_empty() {
        bail!("no .aag or .aig files in {}", a.dir.display());
    }
    let cfg = scheduler_config(&a.engine, a.cutoff)?;
    let mut rows = Vec::new();
    for f in &files {
        let name = f
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let start = Instant::now();
        let verdict = match load_miter(std::slice::from_ref(f)) {
            Ok(m) => match prove_miter(&m, cfg.clone(), cutoff, None)?.result {
                CheckResult::Equivalent => "EQ",
                CheckResult::Counterexample(_) => "NEQ",
                CheckResult::Unknown(_) => "UNKNOWN",
            },
            Err(e) => {
                writeln!(err, "warning: {name}: {e:#}")?;
                "UNKNOWN"
            }
        };
        rows.push(BenchRow {
            name,
            verdict: verdict.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let report = BenchReport::new(rows, a.cutoff);
    let mut w = csv::Writer::from_writer(&mut *out);
    w.write_record(["name", "verdict", "seconds"])?;
    for r in &report.rows {
        w.write_record([
            r.name.as_str(),
            r.verdict.as_str(),
            &format!("{:.3}", r.seconds),
        ])?;
    }
    w.flush()?;
    drop(w);
    writeln!(
        err,
        "PAR2 {:.2} s, solved {}/{}",
        report.par2,
        report.solved,
        report.rows.len()
    )?;
    Ok(0)
}

pub fn cmd_gen(g: &GenCommand, out: &mut dyn Write) -> Result<i32> {
    let (x, path) = match g {
        GenCommand::Mult {
            width,
            arch_a,
            arch_b,
            out,
        } => {
            let a: MultArch = arch_a.parse().map_err(anyhow::Error::msg)?;
            let b: MultArch = arch_b.parse().map_err(anyhow::Error::msg)?;
            (gen_multiplier_miter(*width, a, b)?, out)
        }
        GenCommand::Random {
            pis,
            gates,
            xor_ratio,
            seed,
            out,
        } => {
            if *pis == 0 || !(0.0..=1.0).contains(xor_ratio) {
                bail!("need at least one PI and an XOR ratio in [0, 1]");
            }
            (random_xag(*pis, *gates, *xor_ratio, *seed), out)
        }
        GenCommand::Mutation { width, gate, out } => {
            let a = gen_multiplier(*width, MultArch::Array)?;
            let b = gen_multiplier(*width, MultArch::Diagonal)?;
            if *gate >= b.num_gates() {
                bail!(
                    "gate {gate} out of range (multiplier has {} gates)",
                    b.num_gates()
                );
            }
            (build_miter(&a, &mutate_gate(&b, *gate))?, out)
        }
    };
    fs::write(path, write_aag(&x)).with_context(|| format!("writing {}", path.display()))?;
    writeln!(
        out,
        "{}: {} PIs, {} gates",
        path.display(),
        x.num_pis(),
        x.num_gates()
    )?;
    Ok(0)
}

pub fn cmd_features(files: &[PathBuf], seed: u64, out: &mut dyn Write) -> Result<i32> {
    let mut w = csv::Writer::from_writer(&mut *out);
    let mut header = vec!["id"];
    header.extend(FEATURE_NAMES);
    w.write_record(&header)?;
    for f in files {
        let x = load_miter(std::slice::from_ref(f))?;
        let fv = extract_features(&x, seed);
        let id = f
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut row = vec![id];
        row.extend(fv.values().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(0)
}

pub fn cmd_eval(file: &Path, bits: &str, out: &mut dyn Write) -> Result<i32> {
    let x = load_miter(&[file.to_path_buf()])?;
    if bits.len() != x.num_pis() {
        bail!("expected {} bits, got {}", x.num_pis(), bits.len());
    }
    let inputs = bits
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(anyhow::anyhow!("bit string may only contain 0 and 1")),
        })
        .collect::<Result<Vec<bool>>>()?;
    writeln!(out, "{}", u8::from(x.eval_output(&inputs)))?;
    Ok(0)
}
