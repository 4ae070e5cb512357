//! `sgls`: command-line front end for the stochastic Galerkin level-set solver.
//!
//! Failures print one `ERROR code=... message="..."` line per problem on
//! stderr and exit nonzero (2 configuration or usage, 3 numerical, 4 I/O).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sgls_core::basis::build_basis;
use sgls_core::io::{
    export_band, parse_config, read_snapshot, write_csv_slice, write_snapshot, ConfigErrors, FieldSnapshot, IoError,
    Manifest, RunConfig, RunMode,
};
use sgls_core::oracle::{ensemble, zero_crossing_cells, EnsembleMode};
use sgls_core::quantile::{CdfEvaluator, QuantileBand, Surrogate};
use sgls_core::solver::Solver;
use sgls_core::Error;

const CONFIG_COPY: &str = "config.cfg";

#[derive(Parser)]
#[command(name = "sgls", version, about = "Stochastic Galerkin solver for random level sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SurrogateArg {
    Pointwise,
    Galerkin,
}

#[derive(Subcommand)]
enum Command {
    /// Intrusive run; writes snapshots, a copy of the config and a manifest.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write CSV slices of 1D snapshots.
        #[arg(long)]
        csv: bool,
    },
    /// Monte Carlo or collocation reference run.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Monte Carlo sample count (overrides the config).
        #[arg(long, conflicts_with = "nodes")]
        samples: Option<usize>,
        #[arg(long, requires = "samples")]
        seed: Option<u64>,
        /// Collocation nodes per stochastic dimension (overrides the config).
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Quantile band of a snapshot.
    Band {
        #[arg(long)]
        snapshot: PathBuf,
        /// Defaults to the config copy next to the snapshot.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, value_enum)]
        surrogate: Option<SurrogateArg>,
        #[arg(long)]
        n_cdf: Option<usize>,
        /// Output file; defaults to `<snapshot>.band.txt`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// List every cell instead of only the in-band ones.
        #[arg(long)]
        all_cells: bool,
    },
    /// Positivity, hyperbolicity and velocity checks of the initial state.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Triple-product tensors of a basis.
    Basis {
        #[arg(long = "L", short = 'L')]
        dim: usize,
        #[arg(long = "K", short = 'K')]
        degree: usize,
        #[arg(long)]
        nodes: Option<usize>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(ConfigErrors),
    Io(IoError),
    Numeric(Error),
    Usage(String),
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Config(c) => Self::Config(c),
            e => Self::Io(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.into())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Numeric(e)
    }
}

fn error_code(e: &Error) -> &'static str {
    match e {
        Error::InvalidBasis(_) => "invalid_basis",
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::NonConvergence { .. } => "nonconvergence",
        Error::IndefiniteRoot { .. } => "indefinite_root",
        Error::NotSpd { .. } => "not_spd",
        Error::SingularVelocityOperator { .. } => "singular_velocity",
        Error::NonHyperbolic { .. } => "nonhyperbolic",
        Error::CflViolation { .. } => "cfl_violation",
        Error::DegenerateGradient { .. } => "degenerate_gradient",
        Error::InvalidArgument(_) => "invalid_argument",
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn error_line(code: &str, extra: &str, message: &str) -> String {
    format!("ERROR code={code}{extra} message={}", quote(message))
}

impl Failure {
    fn report(&self) -> ExitCode {
        match self {
            Self::Config(errors) => {
                for e in &errors.0 {
                    let mut extra = String::new();
                    if let Some(l) = e.line {
                        extra += &format!(" line={l}");
                    }
                    if let Some(s) = &e.section {
                        extra += &format!(" section={s}");
                    }
                    if let Some(k) = &e.key {
                        extra += &format!(" key={k}");
                    }
                    eprintln!("{}", error_line("config", &extra, &e.message));
                }
                ExitCode::from(2)
            }
            Self::Usage(m) => {
                eprintln!("{}", error_line("usage", "", m));
                ExitCode::from(2)
            }
            Self::Io(e) => {
                eprintln!("{}", error_line("io", "", &e.to_string()));
                ExitCode::from(4)
            }
            Self::Numeric(e) => {
                eprintln!("{}", numeric_line(e, &[]));
                ExitCode::from(3)
            }
        }
    }
}

fn numeric_line(e: &Error, cells: &[usize]) -> String {
    let cells = match e {
        Error::DegenerateGradient { cells } => cells.as_slice(),
        _ => cells,
    };
    let extra = if cells.is_empty() {
        String::new()
    } else {
        let list: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
        format!(" cells={}", list.join(","))
    };
    error_line(error_code(e), &extra, &e.to_string())
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path)?;
    parse_config(&text).map_err(Failure::Config)
}

fn snapshot_name(step: usize) -> String {
    format!("snap_{step:06}.bin")
}

fn solve(config: &Path, out: &Path, csv: bool) -> Result<ExitCode, Failure> {
    let cfg = load_config(config)?;
    let basis = cfg.build_basis()?;
    let grid = cfg.build_grid()?;
    let velocity = cfg.velocity_spec();
    let solver = Solver::new(&basis, &velocity, grid.clone())?;
    let mut state = solver.init_deterministic(&cfg.phi0, cfg.run.form, cfg.run.cfl)?;
    state.norm_floor = cfg.run.norm_floor;

    fs::create_dir_all(out)?;
    fs::write(out.join(CONFIG_COPY), cfg.to_text())?;
    let outcome = solver.run(&mut state, cfg.run.t_end, cfg.run.snapshot_every)?;
    let mut manifest = Manifest::new("solve", &cfg.hash(), &basis.fingerprint());
    manifest.threads = rayon::current_num_threads();
    manifest.outputs.push(CONFIG_COPY.into());
    for snap in &outcome.snapshots {
        let field = FieldSnapshot::new(
            snap.t,
            grid.nx,
            if grid.dims == 2 { grid.ny } else { 1 },
            basis.len(),
            1 + grid.dims,
            snapshot_payload(snap, grid.dims),
        )?;
        let name = snapshot_name(snap.step);
        write_snapshot(&out.join(&name), &field)?;
        manifest.outputs.push(name.clone());
        if csv && grid.dims == 1 {
            let csv_name = name.replace(".bin", ".csv");
            write_csv_slice(&out.join(&csv_name), &field, grid.origin[0], grid.dx, 0)?;
            manifest.outputs.push(csv_name);
        }
    }
    manifest.steps = state.step_count;
    manifest.t_final = state.t;
    let code = match &outcome.failure {
        None => ExitCode::SUCCESS,
        Some(f) => {
            let line = numeric_line(&f.error, &f.report.positivity_failures);
            eprintln!("{line} step={}", f.step);
            manifest.failure = Some(line);
            ExitCode::from(3)
        }
    };
    manifest.write(out)?;
    println!(
        "solve: {} steps to t = {} ({} snapshots) in {}",
        state.step_count,
        state.t,
        outcome.snapshots.len(),
        out.display()
    );
    Ok(code)
}

fn snapshot_payload(snap: &sgls_core::solver::Snapshot, dims: usize) -> Vec<f64> {
    let mut payload = Vec::new();
    for (phi, u) in snap.phi_field.iter().zip(&snap.u_field) {
        payload.extend_from_slice(phi.as_slice());
        for a in 0..dims {
            payload.extend_from_slice(u.component(a).as_slice());
        }
    }
    payload
}

fn oracle(
    config: &Path,
    out: &Path,
    samples: Option<usize>,
    seed: Option<u64>,
    nodes: Option<usize>,
) -> Result<ExitCode, Failure> {
    let cfg = load_config(config)?;
    let mode = match (samples, nodes, cfg.run.mode) {
        (Some(samples), _, RunMode::MonteCarlo { seed: s, .. }) => EnsembleMode::MonteCarlo {
            samples,
            seed: seed.unwrap_or(s),
        },
        (Some(samples), _, _) => EnsembleMode::MonteCarlo {
            samples,
            seed: seed.unwrap_or(0),
        },
        (None, Some(n), _) => EnsembleMode::Collocation { nodes_per_dim: n },
        (None, None, RunMode::MonteCarlo { samples, seed }) => EnsembleMode::MonteCarlo { samples, seed },
        (None, None, RunMode::Collocation { nodes }) => EnsembleMode::Collocation { nodes_per_dim: nodes },
        (None, None, RunMode::Intrusive) => {
            return Err(Failure::Usage(
                "run.mode is intrusive; set mode = mc or collocation, or pass --samples or --nodes".into(),
            ))
        }
    };
    let basis = cfg.build_basis()?;
    let grid = cfg.build_grid()?;
    let velocity = cfg.velocity_spec();
    let e = ensemble(&basis, &grid, &cfg.phi0, &velocity, cfg.run.t_end, cfg.run.cfl, mode)?;

    fs::create_dir_all(out)?;
    fs::write(out.join(CONFIG_COPY), cfg.to_text())?;
    let ny = if grid.dims == 2 { grid.ny } else { 1 };
    let mut payload = Vec::with_capacity(2 * grid.n_cells());
    for (m, v) in e.mean.iter().zip(&e.variance) {
        payload.push(*m);
        payload.push(*v);
    }
    // One "mode" per cell, two components: mean and variance.
    write_snapshot(&out.join("moments.bin"), &FieldSnapshot::new(e.t, grid.nx, ny, 1, 2, payload)?)?;

    let q = &cfg.quantile;
    let cdf = e.cdf_abs(q.epsilon);
    let band = QuantileBand {
        epsilon: q.epsilon,
        p: q.p,
        mask: cdf.iter().map(|&c| c >= q.p).collect(),
        cdf,
        t: e.t,
    };
    export_band(&out.join("band.txt"), &band, &grid, &cfg.hash(), false)?;

    let (union, intersection) = e.envelopes(&grid);
    let mut env = String::from("# zero level set envelopes over samples\n# columns: x y union intersection\n");
    for c in 0..grid.n_cells() {
        let p = grid.center(c);
        env += &format!("{:?} {:?} {} {}\n", p[0], p[1], u8::from(union[c]), u8::from(intersection[c]));
    }
    fs::write(out.join("envelopes.txt"), env)?;
    let mut mean_crossings = String::from("# columns: x y mean_phi_crossing\n");
    for (c, m) in zero_crossing_cells(&grid, &e.mean).iter().enumerate() {
        let p = grid.center(c);
        mean_crossings += &format!("{:?} {:?} {}\n", p[0], p[1], u8::from(*m));
    }
    fs::write(out.join("mean_level_set.txt"), mean_crossings)?;

    let mut manifest = Manifest::new("oracle", &cfg.hash(), &basis.fingerprint());
    manifest.threads = rayon::current_num_threads();
    manifest.seed = match mode {
        EnsembleMode::MonteCarlo { seed, .. } => Some(seed),
        EnsembleMode::Collocation { .. } => None,
    };
    manifest.t_final = e.t;
    manifest.outputs = ["config.cfg", "moments.bin", "band.txt", "envelopes.txt", "mean_level_set.txt"]
        .map(String::from)
        .to_vec();
    manifest.write(out)?;
    println!("oracle: {} samples to t = {} in {}", e.samples.len(), e.t, out.display());
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn band(
    snapshot: &Path,
    config: Option<PathBuf>,
    epsilon: Option<f64>,
    p: Option<f64>,
    surrogate: Option<SurrogateArg>,
    n_cdf: Option<usize>,
    out: Option<PathBuf>,
    all_cells: bool,
) -> Result<ExitCode, Failure> {
    let config = config.unwrap_or_else(|| snapshot.parent().unwrap_or(Path::new(".")).join(CONFIG_COPY));
    if !config.exists() {
        return Err(Failure::Usage(format!(
            "no config at {}; pass --config",
            config.display()
        )));
    }
    let cfg = load_config(&config)?;
    let snap = read_snapshot(snapshot)?;
    let basis = cfg.build_basis()?;
    let grid = cfg.build_grid()?;
    let ny = if grid.dims == 2 { grid.ny } else { 1 };
    if (snap.nx, snap.ny, snap.modes) != (grid.nx, ny, basis.len()) {
        return Err(Failure::Usage(format!(
            "snapshot layout {}x{} with {} modes does not match the config ({}x{}, {} modes)",
            snap.nx,
            snap.ny,
            snap.modes,
            grid.nx,
            ny,
            basis.len()
        )));
    }
    let q = &cfg.quantile;
    let surrogate = match surrogate {
        Some(SurrogateArg::Pointwise) => Surrogate::Pointwise,
        Some(SurrogateArg::Galerkin) => Surrogate::Galerkin,
        None => q.surrogate,
    };
    let evaluator = CdfEvaluator::new(&basis, surrogate, n_cdf.unwrap_or(q.n_cdf))?;
    let band = evaluator.perturbed_level_set(&snap.phi_field(), epsilon.unwrap_or(q.epsilon), p.unwrap_or(q.p), snap.t)?;
    let out = out.unwrap_or_else(|| snapshot.with_extension("band.txt"));
    export_band(&out, &band, &grid, &cfg.hash(), all_cells)?;
    println!("band: {} of {} cells in {}", band.count(), grid.n_cells(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn check(config: &Path) -> Result<ExitCode, Failure> {
    let cfg = load_config(config)?;
    let basis = cfg.build_basis()?;
    let grid = cfg.build_grid()?;
    let velocity = cfg.velocity_spec();
    let solver = Solver::new(&basis, &velocity, grid)?;
    let mut state = solver.init_deterministic(&cfg.phi0, cfg.run.form, cfg.run.cfl)?;
    state.norm_floor = cfg.run.norm_floor;
    let audit = solver.audit(&state);
    println!("positivity_failures = {}", audit.positivity_failures.len());
    println!("nonhyperbolic_cells = {}", audit.nonhyperbolic_cells.len());
    println!("singular_velocity_cells = {}", audit.singular_velocity_cells.len());
    if let Some(dt) = audit.dt_max {
        println!("dt_max = {dt:?}");
    }
    if audit.passed() {
        println!("check: ok");
        return Ok(ExitCode::SUCCESS);
    }
    let cells: Vec<usize> = audit
        .positivity_failures
        .iter()
        .chain(&audit.nonhyperbolic_cells)
        .chain(&audit.singular_velocity_cells)
        .copied()
        .collect();
    let e = audit
        .first_error
        .clone()
        .unwrap_or(Error::SingularVelocityOperator { min_abs_eigenvalue: 0.0 });
    eprintln!("{}", numeric_line(&e, &cells));
    Ok(ExitCode::from(3))
}

fn basis(dim: usize, degree: usize, nodes: Option<usize>, out: Option<PathBuf>) -> Result<ExitCode, Failure> {
    let nodes = nodes.unwrap_or_else(|| sgls_core::basis::default_nodes_per_dim(degree));
    let b = build_basis(dim, degree, nodes)?;
    match out {
        Some(path) => {
            let mut buf = Vec::new();
            b.dump_tensors(&mut buf)?;
            fs::write(path, buf)?;
        }
        None => b.dump_tensors(std::io::stdout().lock())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("SGLS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("SGLS_THREADS must be a positive integer, found '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match cli.command {
        Command::Solve { config, out, csv } => solve(&config, &out, csv),
        Command::Oracle {
            config,
            out,
            samples,
            seed,
            nodes,
        } => oracle(&config, &out, samples, seed, nodes),
        Command::Band {
            snapshot,
            config,
            epsilon,
            p,
            surrogate,
            n_cdf,
            out,
            all_cells,
        } => band(&snapshot, config, epsilon, p, surrogate, n_cdf, out, all_cells),
        Command::Check { config } => check(&config),
        Command::Basis {
            dim,
            degree,
            nodes,
            out,
        } => basis(dim, degree, nodes, out),
    });
    result.unwrap_or_else(|f| f.report())
}
