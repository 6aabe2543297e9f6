//! Subcommand dispatch behind the `hji` binary.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::analysis::{
    emit_report, error_report_nd, error_report_on_grid, lipschitz_selector_probe, simulate_paths, write_errors_csv, write_probes_csv,
    write_trajectories_csv, LearnedPolicy, ProbedControl,
};
use crate::config::RunConfig;
use crate::fdm::{fdm_solve_2d, read_grid_csv, reference_nd_isotropic, restrict_to_target, write_grid_binary, write_grid_csv, NdReference};
use crate::game::{DifferentialGame, PathPlanningParams, PathPlanningProblem, Problem, QuadraticSaddle};
use crate::net::{read_text, write_text, NetworkState};
use crate::pinn::{direct_pinn_train, run_policy_iteration_with, MinimaxConfig, SelectorMode};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "hji", version, about = "Policy-iteration PINN and finite-difference solvers for viscous HJI equations")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub deterministic: bool,
}

#[derive(Debug, Args, Default)]
pub struct ProblemArgs {
    /// `path_planning` or `pubsub`.
    #[arg(long)]
    pub problem: Option<String>,
    /// Pub-sub state dimension.
    #[arg(long)]
    pub dimension: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Epochs per policy evaluation.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Outer iterations.
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub n_collocation: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Use the numeric minimax selector instead of the closed form.
    #[arg(long)]
    pub numeric_selector: bool,
}

#[derive(Debug, Args, Default)]
pub struct FdmArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub n_x: Option<usize>,
    #[arg(long)]
    pub time_steps: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct CompareArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Reference grid CSV; overrides `[compare].reference`.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct RolloutArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Network file; overrides `[rollout].network`.
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// Roll out with `b = 0` instead of the adversarial disturbance.
    #[arg(long)]
    pub zero_disturbance: bool,
}

#[derive(Debug, Args, Default)]
pub struct ProbeArgs {
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a value network by physics-informed policy iteration.
    SolvePinnPi(TrainArgs),
    /// Train the direct baseline with the Hamiltonian in the loss.
    SolveDirect(TrainArgs),
    /// Finite-difference reference (pairwise for pub-sub with N > 2).
    SolveFdm(FdmArgs),
    /// Relative L2 errors of trained networks against a reference.
    Compare(CompareArgs),
    /// Euler–Maruyama rollouts under a learned feedback.
    Trajectories(RolloutArgs),
    /// Empirical Lipschitz constants of feedback selectors.
    ProbeTheory(ProbeArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SolvePinnPi(_) => "solve-pinn-pi",
            Command::SolveDirect(_) => "solve-direct",
            Command::SolveFdm(_) => "solve-fdm",
            Command::Compare(_) => "compare",
            Command::Trajectories(_) => "trajectories",
            Command::ProbeTheory(_) => "probe-theory",
        }
    }
}

/// Process exit codes by failure category.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const MISSING_INPUT: i32 = 3;
    pub const NUMERICAL: i32 = 4;
    pub const IO: i32 = 5;
    pub const UNSUPPORTED: i32 = 6;
    pub const INVALID_INPUT: i32 = 7;
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parse(_) => exit::CONFIG,
        Error::MissingInput(_) => exit::MISSING_INPUT,
        Error::NonFinite(_) | Error::Unstable { .. } | Error::DegenerateDiffusion(_) => exit::NUMERICAL,
        Error::Io(_) => exit::IO,
        Error::Unsupported(_) => exit::UNSUPPORTED,
        Error::Dimension { .. } | Error::Inadmissible(_) | Error::Empty(_) | Error::OutOfRange(_) => exit::INVALID_INPUT,
    }
}

fn set(doc: &mut toml::Table, path: &[&str], value: toml::Value) {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut t = doc;
    for p in parents {
        t = t
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .expect("config sections are tables");
    }
    t.insert(last.to_string(), value);
}

fn int(v: usize) -> toml::Value {
    toml::Value::Integer(v as i64)
}

fn apply_problem_flags(doc: &mut toml::Table, p: &ProblemArgs) -> Result<()> {
    if let Some(kind) = &p.problem {
        let current = doc.get("problem").and_then(|v| v.get("kind")).and_then(|v| v.as_str()).map(str::to_string);
        if current.as_deref() != Some(kind.as_str()) {
            doc.insert("problem".into(), toml::Value::Table(toml::Table::new()));
        }
        set(doc, &["problem", "kind"], toml::Value::String(kind.clone()));
    }
    if let Some(d) = p.dimension {
        let kind = doc.get("problem").and_then(|v| v.get("kind")).and_then(|v| v.as_str());
        if kind != Some("pubsub") {
            return Err(Error::Config("--dimension applies only to --problem pubsub".into()));
        }
        set(doc, &["problem", "dimension"], int(d));
    }
    Ok(())
}

/// Resolves the configuration: defaults, then the file, then flags.
pub fn parse_config(cli: &Cli) -> Result<RunConfig> {
    let mut doc: toml::Table = match &cli.global.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => Error::MissingInput(path.clone()),
                _ => Error::Io(e),
            })?;
            text.parse().map_err(|e: toml::de::Error| Error::Parse(e.message().to_string()))?
        }
        None => toml::Table::new(),
    };
    let g = &cli.global;
    if let Some(s) = g.seed {
        doc.insert("seed".into(), toml::Value::Integer(i64::try_from(s).map_err(|_| Error::Config("seed too large".into()))?));
    }
    if let Some(o) = &g.out {
        doc.insert("out".into(), toml::Value::String(o.to_string_lossy().into_owned()));
    }
    if let Some(w) = g.workers {
        doc.insert("workers".into(), int(w));
    }
    if g.deterministic {
        doc.insert("deterministic".into(), toml::Value::Boolean(true));
    }
    match &cli.command {
        Command::SolvePinnPi(a) | Command::SolveDirect(a) => {
            apply_problem_flags(&mut doc, &a.problem)?;
            for (key, v) in [("epochs", a.epochs), ("outer_iterations", a.iterations), ("n_collocation", a.n_collocation)] {
                if let Some(v) = v {
                    set(&mut doc, &["training", key], int(v));
                }
            }
            if let Some(t) = a.tol {
                set(&mut doc, &["training", "tol"], toml::Value::Float(t));
            }
            if a.numeric_selector {
                let sel = toml::Value::try_from(SelectorMode::Numeric(MinimaxConfig::default())).map_err(|e| Error::Config(e.to_string()))?;
                set(&mut doc, &["training", "selector"], sel);
            }
        }
        Command::SolveFdm(a) => {
            apply_problem_flags(&mut doc, &a.problem)?;
            if let Some(n) = a.n_x {
                set(&mut doc, &["fdm", "n_x"], int(n));
            }
            if let Some(n) = a.time_steps {
                set(&mut doc, &["fdm", "time_steps"], int(n));
            }
        }
        Command::Compare(a) => {
            apply_problem_flags(&mut doc, &a.problem)?;
            if let Some(r) = &a.reference {
                set(&mut doc, &["compare", "reference"], toml::Value::String(r.to_string_lossy().into_owned()));
            }
        }
        Command::Trajectories(a) => {
            apply_problem_flags(&mut doc, &a.problem)?;
            if let Some(n) = &a.network {
                set(&mut doc, &["rollout", "network"], toml::Value::String(n.to_string_lossy().into_owned()));
            }
            if a.zero_disturbance {
                set(&mut doc, &["rollout", "disturbance"], toml::Value::String("zero".into()));
            }
        }
        Command::ProbeTheory(a) => {
            if let Some(n) = a.samples {
                set(&mut doc, &["probe", "samples"], int(n));
            }
        }
    }
    let text = toml::to_string(&doc).map_err(|e| Error::Config(e.to_string()))?;
    let cfg = RunConfig::parse(&text)?;
    match &cli.command {
        Command::Compare(_) if cfg.compare.is_none() => Err(Error::Config("compare needs a [compare] section".into())),
        Command::Trajectories(_) if cfg.rollout.is_none() => Err(Error::Config("trajectories needs a [rollout] section".into())),
        _ => Ok(cfg),
    }
}

fn open_input(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingInput(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

fn load_network(path: &Path) -> Result<NetworkState> {
    read_text(open_input(path)?)
}

/// Output directory plus the artifacts written so far.
struct Outputs {
    dir: PathBuf,
    artifacts: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Outputs { dir: dir.to_path_buf(), artifacts: Vec::new() })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut w = BufWriter::new(File::create(&path)?);
        f(&mut w)?;
        w.flush()?;
        self.artifacts.push(path.clone());
        Ok(path)
    }
}

fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn write_manifest(out: &Outputs, command: &str, cfg: &RunConfig, seconds: f64) -> Result<()> {
    let mut m = toml::Table::new();
    m.insert("subcommand".into(), toml::Value::String(command.into()));
    m.insert("version".into(), toml::Value::String(env!("CARGO_PKG_VERSION").into()));
    m.insert("seed".into(), toml::Value::Integer(cfg.seed as i64));
    m.insert("deterministic".into(), toml::Value::Boolean(cfg.deterministic));
    let mut artifacts = toml::Table::new();
    for p in &out.artifacts {
        let rel = p.strip_prefix(&out.dir).unwrap_or(p).to_string_lossy().into_owned();
        artifacts.insert(rel, toml::Value::String(sha256_hex(p)?));
    }
    m.insert("artifacts".into(), toml::Value::Table(artifacts));
    let mut timings = toml::Table::new();
    timings.insert("total_seconds".into(), toml::Value::Float(seconds));
    m.insert("timings".into(), toml::Value::Table(timings));
    m.insert("config".into(), toml::Value::try_from(cfg).map_err(|e| Error::Config(e.to_string()))?);
    let text = toml::to_string(&m).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(out.dir.join("manifest.toml"), text)?;
    Ok(())
}

fn solve_pi(cfg: &RunConfig, problem: &Problem, out: &mut Outputs) -> Result<()> {
    let deterministic = cfg.deterministic;
    let mut saved: Vec<(String, String)> = Vec::new();
    let dir = out.dir.clone();
    let result = run_policy_iteration_with(problem, &cfg.training, |record, state| {
        let name = format!("checkpoints/iter_{:04}.txt", record.iteration);
        let path = dir.join(&name);
        std::fs::create_dir_all(path.parent().expect("checkpoint directory"))?;
        write_text(state, BufWriter::new(File::create(&path)?))?;
        let mut meta = format!(
            "iteration = {}\np_n = {:e}\np_n_stderr = {:e}\nsup_diff = {:e}\nfinal_loss = {:e}\nnetwork = \"iter_{:04}.txt\"\n",
            record.iteration,
            record.p_n,
            record.p_n_stderr,
            record.sup_diff,
            record.losses.last().copied().unwrap_or(f64::NAN),
            record.iteration
        );
        if !deterministic {
            meta.push_str(&format!("wall_time_s = {:e}\n", record.wall_time_s));
        }
        let meta_name = format!("checkpoints/iter_{:04}.toml", record.iteration);
        std::fs::write(dir.join(&meta_name), meta)?;
        saved.push((name, meta_name));
        Ok(Some(path))
    })?;
    for (a, b) in saved {
        out.artifacts.push(out.dir.join(a));
        out.artifacts.push(out.dir.join(b));
    }
    out.write("history.csv", |w| result.history.write_csv(w))?;
    out.write("network.txt", |w| write_text(&result.state, w))?;
    Ok(())
}

fn solve_direct(cfg: &RunConfig, problem: &Problem, out: &mut Outputs) -> Result<()> {
    let (state, losses) = direct_pinn_train(problem, &cfg.training)?;
    out.write("losses.csv", |w| {
        writeln!(w, "epoch,loss")?;
        for (e, l) in losses.iter().enumerate() {
            writeln!(w, "{e},{l:e}")?;
        }
        Ok(())
    })?;
    out.write("network.txt", |w| write_text(&state, w))?;
    Ok(())
}

fn solve_fdm(cfg: &RunConfig, problem: &Problem, out: &mut Outputs) -> Result<()> {
    match problem {
        Problem::PubSub(p) if p.n() > 2 => {
            let reference = reference_nd_isotropic(p, &cfg.fdm)?;
            for (i, g) in reference.pairs.iter().enumerate() {
                let (sub, _) = restrict_to_target(g, &cfg.fdm.target)?;
                out.write(&format!("pair_{:02}.csv", i + 1), |w| write_grid_csv(&sub, w))?;
            }
        }
        _ => {
            let grid = fdm_solve_2d(problem, &cfg.fdm)?;
            let (sub, snapped) = restrict_to_target(&grid, &cfg.fdm.target)?;
            if snapped {
                eprintln!("note: target bounds snapped to the nearest grid nodes");
            }
            out.write("grid.csv", |w| write_grid_csv(&sub, w))?;
            out.write("grid.bin", |w| write_grid_binary(&sub, w))?;
        }
    }
    Ok(())
}

fn compare(cfg: &RunConfig, problem: &Problem, out: &mut Outputs) -> Result<()> {
    let c = cfg.compare.as_ref().expect("checked in parse_config");
    let mut reports = Vec::new();
    let networks = c.networks.iter().map(|n| Ok((n, load_network(&n.path)?))).collect::<Result<Vec<_>>>()?;
    if !c.pair_references.is_empty() {
        let pairs = c.pair_references.iter().map(|p| read_grid_csv(open_input(p)?)).collect::<Result<Vec<_>>>()?;
        let nd = NdReference { pairs, time_interp: cfg.fdm.time_interp };
        for (n, state) in &networks {
            reports.push(error_report_nd(state, problem, n.representation, &nd, &c.times, c.eval_points, cfg.seed, &n.method)?);
        }
    } else {
        let path = c.reference.as_ref().ok_or_else(|| Error::Config("[compare] needs `reference` or `pair_references`".into()))?;
        let grid = read_grid_csv(open_input(path)?)?;
        for (n, state) in &networks {
            reports.push(error_report_on_grid(state, problem, n.representation, &grid, &c.times, &n.method)?);
        }
    }
    out.write("errors.csv", |w| write_errors_csv(&reports, w))?;
    let written = emit_report(&out.dir.join("report"), &reports, &[], &[])?;
    out.artifacts.extend(written);
    Ok(())
}

fn trajectories(cfg: &RunConfig, problem: &Problem, out: &mut Outputs) -> Result<()> {
    let r = cfg.rollout.as_ref().expect("checked in parse_config");
    let state = load_network(&r.network)?;
    let policy = LearnedPolicy { game: problem, state: &state, repr: r.representation, mode: cfg.training.selector, disturbance: r.disturbance };
    let starts: Vec<Vec<f64>> = r.starts.iter().flat_map(|s| std::iter::repeat_n(s.clone(), r.paths_per_start)).collect();
    let steps = (problem.horizon() / r.dt).round() as usize;
    let paths = simulate_paths(problem, &policy, &starts, r.dt, steps, cfg.seed)?;
    out.write("trajectories.csv", |w| write_trajectories_csv(&paths, w))?;
    Ok(())
}

fn probe_theory(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let pp = PathPlanningProblem::new(PathPlanningParams::default())?;
    let toy = QuadraticSaddle::new()?;
    let n = cfg.probe.samples;
    let probes = vec![
        lipschitz_selector_probe(&pp, &SelectorMode::ClosedForm, ProbedControl::Minimizer, cfg.probe.p_max, n, cfg.seed)?,
        lipschitz_selector_probe(&toy, &SelectorMode::Numeric(MinimaxConfig::default()), ProbedControl::Both, cfg.probe.p_max, n, cfg.seed)?,
    ];
    out.write("probes.csv", |w| write_probes_csv(&probes, w))?;
    Ok(())
}

/// Runs the selected subcommand and writes its manifest.
pub fn dispatch(cli: &Cli) -> Result<PathBuf> {
    let cfg = parse_config(cli)?;
    if let Some(w) = cfg.workers {
        // Fails only if the global pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    let start = Instant::now();
    let problem = cfg.problem.build()?;
    let mut out = Outputs::new(&cfg.out)?;
    match &cli.command {
        Command::SolvePinnPi(_) => solve_pi(&cfg, &problem, &mut out)?,
        Command::SolveDirect(_) => solve_direct(&cfg, &problem, &mut out)?,
        Command::SolveFdm(_) => solve_fdm(&cfg, &problem, &mut out)?,
        Command::Compare(_) => compare(&cfg, &problem, &mut out)?,
        Command::Trajectories(_) => trajectories(&cfg, &problem, &mut out)?,
        Command::ProbeTheory(_) => probe_theory(&cfg, &mut out)?,
    }
    write_manifest(&out, cli.command.name(), &cfg, start.elapsed().as_secs_f64())?;
    Ok(out.dir)
}

/// Entry point of the binary: parses arguments, dispatches, and maps errors
/// to exit codes.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::CONFIG } else { exit::OK };
        }
    };
    match dispatch(&cli) {
        Ok(dir) => {
            println!("{} finished; outputs in {}", cli.command.name(), dir.display());
            exit::OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
