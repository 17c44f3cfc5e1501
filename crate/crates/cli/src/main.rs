use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use turbo_fourier::boolfn::{energy_profile, fixtures, wht_forward, PseudoBooleanTable};
use turbo_fourier::codec::TurboEncoderParams;
use turbo_fourier::gl::{
    gamma_search, goldreich_levin, query_convergence_sweep, stable_run, sweep_to_csv, EmbeddedTable,
    GammaSearchConfig, GLConfig, ProcessEvaluator, QueryFunction,
};
use turbo_fourier::landscape::{
    bent_partner, bent_triple, default_grid, line_probe, random_parity_pair, PowerNormalization, ProbeConfig,
    ThetaTriple,
};
use turbo_fourier::metrics::{
    counterexample_sweep, exact_discrete_bce_ber, h2, tight_lower_channel, tight_upper_channel,
};
use turbo_fourier::train::{evaluate_trained, fc_evolution_export, train_encoder, Init, Optimizer, TrainConfig};

const BOUND_TOL: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(name = "tfw", version, about = "Fourier analysis and learned Turbo code experiments")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for output files and manifests.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Walsh-Hadamard spectrum of a table or named fixture.
    Fourier(FourierArgs),
    /// Goldreich-Levin search for heavy Fourier coefficients.
    Gl(GlArgs),
    /// Loss along the segment between two encoder spectra.
    Landscape(LandscapeArgs),
    /// Train a table encoder on the conditional entropy.
    TrainEncoder(TrainArgs),
    /// BER/BCE of a trained encoder with the turbo decoder.
    Eval(EvalArgs),
    /// Tightness of the two-sided BCE/BER bound.
    Bounds(BoundsArgs),
    /// The 4-symbol channel where BER and BCE minimizers differ.
    Counterexample,
}

#[derive(Args, Debug, Serialize)]
struct FourierArgs {
    /// Fixture name or path to a table JSON `{"arity": n, "values": [...]}`.
    input: String,
    /// Energy fraction for the energy CSV.
    #[arg(long, default_value_t = 0.95)]
    threshold: f64,
}

#[derive(Args, Debug, Serialize)]
struct GlArgs {
    /// Named fixture embedded in `--n` variables.
    #[arg(long, group = "source")]
    fixture: Option<String>,
    /// Table JSON embedded in `--n` variables.
    #[arg(long, group = "source")]
    table: Option<PathBuf>,
    /// External program answering one query per line on stdin/stdout.
    #[arg(long, group = "source")]
    process: Option<String>,
    /// Extra argument for `--process`; repeatable.
    #[arg(long = "process-arg", allow_hyphen_values = true)]
    process_args: Vec<String>,
    /// Number of variables.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Offset of the embedded table's first variable.
    #[arg(long, default_value_t = 0)]
    position: usize,
    #[arg(long, conflicts_with = "auto")]
    gamma: Option<f64>,
    /// Choose gamma by the stability search.
    #[arg(long)]
    auto: bool,
    #[arg(long, default_value_t = 800)]
    queries: usize,
    /// Repetitions; above 1 only an agreeing result is reported.
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Comma-separated query budgets for a convergence sweep.
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
enum PowerArg {
    Parseval,
    Exact,
}

#[derive(Args, Debug, Serialize)]
struct LandscapeArgs {
    /// Start triple: JSON path, `bent` or `bent-partner`. Defaults to a
    /// seeded random parity triple.
    #[arg(long)]
    theta_a: Option<String>,
    /// End triple, same forms as `--theta-a`.
    #[arg(long)]
    theta_b: Option<String>,
    /// Seed for the random parity pair used when a side is not given.
    #[arg(long, default_value_t = 0)]
    pair_seed: u64,
    #[arg(long, default_value_t = 21)]
    grid: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    snr: f64,
    #[arg(long, default_value_t = 10_000)]
    blocks: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = PowerArg::Exact)]
    power: PowerArg,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
enum InitArg {
    Normal,
    Parity,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[arg(long, default_value_t = 16)]
    k_enc: usize,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 500)]
    steps: usize,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    snr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = InitArg::Normal)]
    init: InitArg,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    optimizer: OptimizerArg,
    /// Trained parameters.
    #[arg(long, default_value = "params.json")]
    out: PathBuf,
    /// Per-step loss trace.
    #[arg(long, default_value = "trace.csv")]
    trace: PathBuf,
    /// Spectrum snapshots in long format.
    #[arg(long, default_value = "fc_evolution.csv")]
    fc_evolution: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct EvalArgs {
    /// Parameters written by `train-encoder`.
    #[arg(long)]
    params: PathBuf,
    #[arg(long, default_value_t = 100)]
    k: usize,
    /// Comma-separated SNR grid in dB.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2", allow_hyphen_values = true)]
    snr: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    blocks: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct BoundsArgs {
    /// Number of evenly spaced crossover values in [0, 0.5].
    #[arg(long, default_value_t = 50)]
    grid: usize,
}

/// Raised when a computed result fails its own check.
#[derive(Debug)]
struct VerificationFailure(String);

impl std::fmt::Display for VerificationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "verification failed: {}", self.0)
    }
}

impl std::error::Error for VerificationFailure {}

#[derive(Serialize)]
struct Manifest {
    command: String,
    /// Arguments after the program name; `tfw <args>` reruns the command.
    args: Vec<String>,
    flags: serde_json::Value,
    seed: Option<u64>,
    version: &'static str,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the files a command reads and writes, then records them in
/// `<out-dir>/<command>.manifest.json`.
struct Run {
    command: &'static str,
    out_dir: PathBuf,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl Run {
    fn new(command: &'static str, out_dir: &Path) -> Result<Self> {
        fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
        Ok(Self { command, out_dir: out_dir.to_path_buf(), inputs: BTreeMap::new(), outputs: BTreeMap::new() })
    }

    fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    fn write(&mut self, name: &Path, contents: &str) -> Result<()> {
        let path = self.out_dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.insert(path.display().to_string(), sha256_hex(contents.as_bytes()));
        Ok(())
    }

    fn finish(self, flags: impl Serialize, seed: Option<u64>) -> Result<()> {
        let manifest = Manifest {
            command: self.command.to_string(),
            args: std::env::args().skip(1).collect(),
            flags: serde_json::to_value(flags)?,
            seed,
            version: env!("CARGO_PKG_VERSION"),
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let path = self.out_dir.join(format!("{}.manifest.json", self.command));
        fs::write(&path, serde_json::to_string_pretty(&manifest)?)
            .with_context(|| format!("writing {}", path.display()))
    }
}

fn load_table(run: &mut Run, input: &str) -> Result<PseudoBooleanTable> {
    if let Some(t) = fixtures::by_name(input) {
        return Ok(t);
    }
    let path = Path::new(input);
    if !path.exists() {
        let names: Vec<_> = fixtures::all().into_keys().collect();
        bail!("{input:?} is neither a file nor a fixture ({})", names.join(", "));
    }
    let text = run.read(path)?;
    serde_json::from_str(&text).with_context(|| format!("parsing table {input}"))
}

fn cmd_fourier(args: &FourierArgs, out_dir: &Path) -> Result<()> {
    let mut run = Run::new("fourier", out_dir)?;
    let table = load_table(&mut run, &args.input)?;
    let spec = wht_forward(&table);
    run.write(Path::new("spectrum.json"), &serde_json::to_string_pretty(&spec)?)?;

    let profile = energy_profile(&spec, args.threshold)?;
    let total = spec.energy();
    let mut csv = String::from("rank,subset_mask,variables,coefficient,weight,cumulative_fraction\n");
    let mut acc = 0.0;
    for (rank, (mask, w)) in profile.iter().enumerate() {
        acc += w;
        let vars: Vec<String> = mask.vars().iter().map(|v| v.to_string()).collect();
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            rank + 1,
            mask.index(),
            vars.join(" "),
            spec.coeff(*mask),
            w,
            acc / total
        ));
    }
    run.write(Path::new("energy.csv"), &csv)?;
    println!("{} coefficients carry {:.1}% of the energy", profile.len(), 100.0 * args.threshold);
    for (mask, _) in &profile {
        println!("  {:?}: {:+.6}", mask.vars(), spec.coeff(*mask));
    }
    run.finish(args, None)
}

#[derive(Serialize)]
struct GlOutput {
    gamma: Option<f64>,
    result: Option<turbo_fourier::gl::GLResult>,
    /// Sets shifted back to the embedded table's own variables.
    local_sets: Option<Vec<Vec<usize>>>,
    evaluations: u64,
}

fn cmd_gl(args: &GlArgs, out_dir: &Path) -> Result<()> {
    let mut run = Run::new("gl", out_dir)?;
    let mut position = None;
    let f = if let Some(program) = &args.process {
        QueryFunction::new(ProcessEvaluator::spawn(args.n, program, &args.process_args)?)
    } else {
        let table = match (&args.fixture, &args.table) {
            (Some(name), None) => fixtures::by_name(name).ok_or_else(|| anyhow!("unknown fixture {name:?}"))?,
            (None, Some(path)) => load_table(&mut run, &path.display().to_string())?,
            _ => bail!("give one of --fixture, --table or --process"),
        };
        position = Some(args.position);
        QueryFunction::new(EmbeddedTable::new(table, args.n, args.position)?)
    };

    let (gamma, result) = if args.auto {
        let cfg = GammaSearchConfig {
            runs_per_gamma: args.runs.max(2),
            queries: args.queries,
            seed: args.seed,
            ..Default::default()
        };
        let (g, r) = gamma_search(&f, &cfg)?;
        (Some(g), Some(r))
    } else if let Some(g) = args.gamma {
        let r = if args.runs > 1 {
            stable_run(&f, g, args.runs, args.queries, args.seed)?
        } else {
            Some(goldreich_levin(&f, &GLConfig::new(g, args.queries, args.seed))?)
        };
        (Some(g), r)
    } else if args.sweep.is_empty() {
        bail!("give --gamma, --auto or --sweep");
    } else {
        (None, None)
    };

    if let Some(g) = gamma {
        if !args.sweep.is_empty() {
            let rows = query_convergence_sweep(&f, g, &args.sweep, args.runs.max(1), args.seed)?;
            run.write(Path::new("gl_sweep.csv"), &sweep_to_csv(&rows))?;
        }
    } else {
        bail!("--sweep needs --gamma");
    }

    let local_sets = match (&result, position) {
        (Some(r), Some(p)) => Some(
            r.masks().iter().map(|m| m.vars().iter().map(|v| v - p).collect()).collect(),
        ),
        _ => None,
    };
    match &result {
        Some(r) => {
            println!("gamma {}: {} set(s), {} samples", gamma.unwrap_or(f64::NAN), r.sets.len(), r.total_queries);
            for (m, w) in &r.sets {
                println!("  {:?}  weight {w:.4}", m.vars());
            }
        }
        None => println!("runs disagreed; no stable list"),
    }
    let out = GlOutput { gamma, result, local_sets, evaluations: f.evaluations() };
    run.write(Path::new("gl.json"), &serde_json::to_string_pretty(&out)?)?;
    run.finish(args, Some(args.seed))
}

fn load_theta(run: &mut Run, spec: Option<&str>, fallback: ThetaTriple) -> Result<ThetaTriple> {
    match spec {
        None => Ok(fallback),
        Some("bent") => Ok(bent_triple()),
        Some("bent-partner") => Ok(bent_partner()),
        Some(path) => {
            let text = run.read(Path::new(path))?;
            ThetaTriple::from_json(&text).with_context(|| format!("parsing triple {path}"))
        }
    }
}

fn cmd_landscape(args: &LandscapeArgs, out_dir: &Path) -> Result<()> {
    let mut run = Run::new("landscape", out_dir)?;
    let (pa, pb) = random_parity_pair(args.pair_seed);
    let a = load_theta(&mut run, args.theta_a.as_deref(), pa)?;
    let b = load_theta(&mut run, args.theta_b.as_deref(), pb)?;
    let cfg = ProbeConfig {
        k: args.k,
        snr_db: args.snr,
        blocks: args.blocks,
        seed: args.seed,
        power: match args.power {
            PowerArg::Parseval => PowerNormalization::Parseval,
            PowerArg::Exact => PowerNormalization::Exact,
        },
    };
    let r = line_probe(&a, &b, &default_grid(args.grid), &cfg)?;
    run.write(Path::new("landscape.csv"), &r.to_csv())?;
    run.write(Path::new("landscape.json"), &serde_json::to_string_pretty(&r)?)?;
    let last = r.lambdas.len() - 1;
    for i in 0..r.lambdas.len() {
        let z0 = if i == 0 { 0.0 } else { r.excess_z(i, false) };
        let z1 = if i == last { 0.0 } else { r.excess_z(i, true) };
        println!("λ {:.3}  loss {:.5} ± {:.5}  z vs ends {z0:+.2} / {z1:+.2}", r.lambdas[i], r.losses[i], r.std_errors[i]);
    }
    run.finish(args, Some(args.seed))
}

fn cmd_train(args: &TrainArgs, out_dir: &Path) -> Result<()> {
    let mut run = Run::new("train-encoder", out_dir)?;
    let cfg = TrainConfig {
        k_enc: args.k_enc,
        window: args.window,
        steps: args.steps,
        batch_size: args.batch,
        learning_rate: args.lr,
        snr_db: args.snr,
        seed: args.seed,
        init: match args.init {
            InitArg::Normal => Init::Normal,
            InitArg::Parity => Init::Parity,
        },
        optimizer: match args.optimizer {
            OptimizerArg::Sgd => Optimizer::Sgd,
            OptimizerArg::Adam => Optimizer::Adam,
        },
        ..Default::default()
    };
    let (params, trace) = train_encoder(&cfg)?;
    run.write(&args.out, &params.to_json())?;
    run.write(&args.trace, &trace.steps_to_csv())?;
    if trace.snapshots.len() >= 2 {
        run.write(&args.fc_evolution, &fc_evolution_export(&trace)?)?;
    }
    if let (Some(first), Some(last)) = (trace.steps.first(), trace.steps.last()) {
        println!("entropy {:.4} -> {:.4} over {} steps", first.entropy, last.entropy, trace.steps.len());
    }
    run.finish(args, Some(args.seed))?;
    if let Some(why) = trace.aborted {
        return Err(turbo_fourier::Error::Numerical(why).into());
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs, out_dir: &Path) -> Result<()> {
    let mut run = Run::new("eval", out_dir)?;
    let text = run.read(&args.params)?;
    let params: TurboEncoderParams =
        serde_json::from_str(&text).with_context(|| format!("parsing parameters {}", args.params.display()))?;
    let report = evaluate_trained(&params, args.k, &args.snr, args.blocks, args.seed)?;
    run.write(Path::new("eval.csv"), &report.to_csv())?;
    run.write(Path::new("eval.json"), &serde_json::to_string_pretty(&report)?)?;
    for r in &report.rows {
        println!("{:>5} dB  BER {:.6} ± {:.6}  uncoded {:.6}", r.snr_db, r.ber, r.ber_std_error, r.uncoded_ber);
    }
    run.finish(args, Some(args.seed))
}

fn cmd_bounds(args: &BoundsArgs, out_dir: &Path) -> Result<()> {
    if args.grid < 2 {
        bail!("--grid must be at least 2");
    }
    let mut run = Run::new("bounds", out_dir)?;
    let mut csv = String::from("t,upper_ber,upper_bce,h2_of_ber,lower_ber,lower_bce,twice_ber\n");
    let mut worst = 0.0f64;
    for i in 0..args.grid {
        let t = 0.5 * i as f64 / (args.grid - 1) as f64;
        let (f, ch) = tight_upper_channel(t)?;
        let (cu, bu) = exact_discrete_bce_ber(&f, &ch)?;
        let (f, ch) = tight_lower_channel(t)?;
        let (cl, bl) = exact_discrete_bce_ber(&f, &ch)?;
        worst = worst.max((cu - h2(bu)).abs()).max((cl - 2.0 * bl).abs());
        csv.push_str(&format!("{t},{bu},{cu},{},{bl},{cl},{}\n", h2(bu), 2.0 * bl));
    }
    run.write(Path::new("bounds.csv"), &csv)?;
    run.finish(args, None)?;
    println!("largest gap to the bound: {worst:.3e}");
    if worst > BOUND_TOL {
        return Err(VerificationFailure(format!("bound gap {worst:e} exceeds {BOUND_TOL:e}")).into());
    }
    Ok(())
}

fn cmd_counterexample(out_dir: &Path) -> Result<()> {
    let mut run = Run::new("counterexample", out_dir)?;
    let table = counterexample_sweep();
    run.write(Path::new("counterexample.csv"), &table.to_csv())?;
    run.finish(serde_json::json!({}), None)?;
    println!("{:<8} {:>8} {:>8}", "f", "BER", "BCE");
    for r in &table.rows {
        println!("{:<8} {:>8.5} {:>8.3}", format!("[{},{}]", r.f[0], r.f[1]), r.ber, r.bce);
    }
    println!("BER minimizers {:?}, BCE minimizers {:?}", table.ber_minimizers, table.bce_minimizers);
    if !table.minimizers_disjoint() {
        return Err(VerificationFailure("BER and BCE minimizers overlap".into()).into());
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use turbo_fourier::Error as E;
    if e.chain().any(|c| c.is::<VerificationFailure>()) {
        return 2;
    }
    match e.chain().find_map(|c| c.downcast_ref::<E>()) {
        Some(
            E::NonFinite(_)
            | E::Numerical(_)
            | E::DegenerateSpectrum
            | E::ZeroVariance
            | E::NoStableThreshold { .. },
        ) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let out = cli.out_dir.as_path();
    let result = match &cli.command {
        Command::Fourier(a) => cmd_fourier(a, out),
        Command::Gl(a) => cmd_gl(a, out),
        Command::Landscape(a) => cmd_landscape(a, out),
        Command::TrainEncoder(a) => cmd_train(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Bounds(a) => cmd_bounds(a, out),
        Command::Counterexample => cmd_counterexample(out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
