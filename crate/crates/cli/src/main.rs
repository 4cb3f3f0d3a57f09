use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use synergy_core::decomposition::{
    backbone_decomposition, full_decomposition_with, self_backbone, self_decomposition_with, DecompositionOptions,
};
use synergy_core::experiments::{parse_params, run_experiment, Experiment, Params};
use synergy_core::generators::{dirichlet_nsb, gate, gibbs, Gate, GibbsMode, GibbsSpec, PRNG_NAME};
use synergy_core::io::{read_distribution, write_backbone_csv, write_decomposition_csv, DistributionFile};
use synergy_core::lattice::DEFAULT_LATTICE_LIMIT;
use synergy_core::solver::{solve_synergy, verify_channel, FKind, SolverOptions};
use synergy_core::{Error, SourceSet, SystemDistribution};

/// Environment variable overriding the worker thread count.
const THREADS_ENV: &str = "SYNERGY_THREADS";

#[derive(Parser)]
#[command(name = "synergy", version, about = "Synergistic-disclosure decomposition of discrete systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute S^α(X → Y) for one source-set, printed with six decimals.
    Synergy(SynergyArgs),
    /// Decompose I(X;Y) over the full constraint lattice or the backbone chain.
    Decompose(DecomposeArgs),
    /// Decompose the self-disclosure of the sources (target replaced by X).
    Selfsyn(DecomposeArgs),
    /// Run a parameter sweep or seeded ensemble and write a CSV table.
    Sweep(SweepArgs),
    /// Write a reference or random distribution file.
    Gen(GenArgs),
}

#[derive(Args)]
struct SynergyArgs {
    /// Distribution file (JSON).
    #[arg(long)]
    dist: PathBuf,
    /// Source-set in lattice notation, e.g. `{1}{2}`, `{12}` or `{}`.
    #[arg(long, allow_hyphen_values = true)]
    alpha: String,
    /// Divergence objective: kl, tv, hellinger or chi-squared.
    #[arg(long, default_value = "kl")]
    objective: String,
    /// Write the optimal channel (weights, reverse and forward channel) as JSON.
    #[arg(long)]
    emit_channel: Option<PathBuf>,
    /// Write the linear program, vertex list and final tableau as JSON.
    #[arg(long)]
    dump_lp: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    dist: PathBuf,
    /// Use the chain of uniform levels instead of the full lattice.
    #[arg(long)]
    backbone: bool,
    /// Emit JSON instead of CSV.
    #[arg(long)]
    json: bool,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Largest number of sources for full-lattice mode (at most 6).
    #[arg(long, default_value_t = DEFAULT_LATTICE_LIMIT)]
    lattice_limit: usize,
}

#[derive(Args)]
struct SweepArgs {
    /// correlated-and, self-disclosure, ising-b1 or ising-backbone.
    ///
    /// correlated-and encodes bits as spins 2b-1, so r is the spin correlation <s1 s2>.
    #[arg(long)]
    experiment: String,
    /// Comma-separated key=value overrides (e.g. `n=4,k_max=4,replicates=25`).
    #[arg(long, default_value = "")]
    params: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output; metadata goes to `<out>.meta.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[group(id = "generator", required = true, multiple = false)]
struct GenSource {
    /// xor, and, copy, unq1, tbc or double-xor.
    #[arg(long, group = "generator")]
    gate: Option<String>,
    /// Gibbs spec `n=4,k=2,mode=up-to-k,beta=1,coupling_std=0.1,seed=7`.
    #[arg(long, group = "generator")]
    gibbs: Option<String>,
    /// Random NSB-Dirichlet system, `n=2,seed=7`.
    #[arg(long, group = "generator")]
    nsb: Option<String>,
    /// JSON job file: {"gate": "xor"}, {"gibbs": {...}} or {"nsb": {...}}.
    #[arg(long, group = "generator")]
    job: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    source: GenSource,
    /// Seed used when the generator string does not name one.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum Job {
    Gate(Gate),
    Gibbs(GibbsSpec),
    Nsb(NsbSpec),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct NsbSpec {
    n: usize,
    seed: Option<u64>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Input(_) | Error::Json(_) | Error::Csv(_) => 2,
        Error::Infeasible(_) => 3,
        Error::Capacity(_) => 4,
        Error::Internal(_) | Error::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(exit_code(&e));
    }
    let result = match cli.command {
        Command::Synergy(a) => cmd_synergy(a),
        Command::Decompose(a) => cmd_decompose(a, false),
        Command::Selfsyn(a) => cmd_decompose(a, true),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .map_err(|_| Error::Input(format!("{THREADS_ENV} must be a thread count, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Internal(e.to_string()))
}

/// Six-decimal value with negative zero printed as zero.
fn format_bits(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_owned()
    } else {
        s
    }
}

fn write_json(path: &Path, value: &Value) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_synergy(a: SynergyArgs) -> Result<(), Error> {
    let dist = read_distribution(&a.dist)?;
    let alpha = SourceSet::parse(&a.alpha, dist.n_sources())?;
    let objective: FKind = a.objective.parse()?;
    let sol = solve_synergy(
        &dist,
        &alpha,
        SolverOptions {
            objective,
            ..Default::default()
        },
    )?;
    if let Some(w) = &sol.degeneracy_warning {
        eprintln!("warning: {w}");
    }
    if let Some(path) = &a.emit_channel {
        let report = verify_channel(&sol.forward_channel, &dist, &alpha)?;
        let tuples: Vec<Vec<usize>> = sol.support.iter().map(|&x| dist.decode_source(x)).collect();
        let doc = json!({
            "alpha": alpha.to_string(),
            "objective": objective.name(),
            "value_bits": sol.value,
            "support": sol.support,
            "support_tuples": tuples,
            "weights": sol.output_weights(),
            "reverse_channel": sol.reverse_channel,
            "forward_channel": {
                "inputs": sol.forward_channel.input_support(),
                "columns": sol.forward_channel.columns(),
            },
            "max_leakage_bits": report.max_leakage,
            "verified": report.passed,
        });
        write_json(path, &doc)?;
    }
    if let Some(path) = &a.dump_lp {
        write_json(path, &serde_json::to_value(sol.lp_dump())?)?;
    }
    println!("{}", format_bits(sol.value));
    Ok(())
}

fn cmd_decompose(a: DecomposeArgs, self_mode: bool) -> Result<(), Error> {
    let dist = read_distribution(&a.dist)?;
    let mut out = output(a.out.as_deref())?;
    if a.backbone {
        let report = if self_mode {
            self_backbone(&dist)?
        } else {
            backbone_decomposition(&dist)?
        };
        if a.json {
            writeln!(out, "{}", serde_json::to_string_pretty(&report.to_json())?)?;
        } else {
            write_backbone_csv(&report, &mut out)?;
        }
    } else {
        let options = DecompositionOptions {
            lattice_limit: a.lattice_limit,
            ..Default::default()
        };
        let report = if self_mode {
            self_decomposition_with(&dist, options)?
        } else {
            full_decomposition_with(&dist, options)?
        };
        if a.json {
            writeln!(out, "{}", serde_json::to_string_pretty(&report.to_json())?)?;
        } else {
            write_decomposition_csv(&report, &mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<(), Error> {
    let experiment: Experiment = a.experiment.parse()?;
    let params = parse_params(&a.params)?;
    let (table, resolved) = run_experiment(experiment, params, a.seed)?;
    let mut w = BufWriter::new(File::create(&a.out)?);
    table.write_csv(&mut w)?;
    w.flush()?;
    let meta = json!({
        "experiment": experiment.name(),
        "params": resolved,
        "seed": a.seed,
        "prng": PRNG_NAME,
        "seed_split": "member i uses splitmix64(seed + (i + 1) * 0x9E3779B97F4A7C15)",
        "rows": table.rows.len(),
        "columns": table.columns,
    });
    write_json(&meta_path(&a.out), &meta)
}

fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn parse_gibbs(text: &str, default_seed: u64) -> Result<GibbsSpec, Error> {
    let mut p = Params::new(parse_params(text)?);
    let n = p.take("n", 4usize)?;
    let k = p.take("k", 1usize)?;
    let mode: GibbsMode = p.take("mode", GibbsMode::UpToK)?;
    let seed = p.take("seed", default_seed)?;
    let mut spec = GibbsSpec::new(n, k, mode, seed);
    spec.beta = p.take("beta", spec.beta)?;
    spec.coupling_std = p.take("coupling_std", spec.coupling_std)?;
    p.finish()?;
    Ok(spec)
}

fn parse_nsb(text: &str) -> Result<NsbSpec, Error> {
    let mut p = Params::new(parse_params(text)?);
    let n = p.take("n", 2usize)?;
    let seed = p.take_opt("seed")?;
    p.finish()?;
    Ok(NsbSpec { n, seed })
}

/// Builds a generator's distribution and its metadata block.
fn generate(job: Job, default_seed: u64) -> Result<(SystemDistribution, Value), Error> {
    Ok(match job {
        Job::Gate(g) => (
            gate(g),
            json!({ "generator": "gate", "params": { "gate": g.name() }, "seed": null, "prng": null }),
        ),
        Job::Gibbs(spec) => (
            gibbs(&spec)?,
            json!({ "generator": "gibbs", "params": spec, "seed": spec.seed, "prng": PRNG_NAME }),
        ),
        Job::Nsb(spec) => {
            let seed = spec.seed.unwrap_or(default_seed);
            (
                dirichlet_nsb(spec.n, seed)?,
                json!({ "generator": "nsb", "params": { "n": spec.n }, "seed": seed, "prng": PRNG_NAME }),
            )
        }
    })
}

fn cmd_gen(a: GenArgs) -> Result<(), Error> {
    let s = a.source;
    let job = if let Some(name) = s.gate {
        Job::Gate(name.parse()?)
    } else if let Some(text) = s.gibbs {
        Job::Gibbs(parse_gibbs(&text, a.seed)?)
    } else if let Some(text) = s.nsb {
        Job::Nsb(parse_nsb(&text)?)
    } else if let Some(path) = s.job {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Input(format!("malformed job file: {e}")))?
    } else {
        unreachable!("clap requires one generator")
    };
    let (dist, metadata) = generate(job, a.seed)?;
    DistributionFile::from_distribution(&dist)
        .with_metadata(metadata)
        .write(&a.out)
}
