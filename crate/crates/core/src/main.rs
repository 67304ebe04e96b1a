use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use eigencrofton::averaging::THREADS_ENV;
use eigencrofton::config::{parse_region, ExperimentConfig, ExperimentKind, MeshConfig, MeshGenerator, Outcome};
use eigencrofton::models::{EigenspacePolicy, ModelKind};
use eigencrofton::suite::run_suite;
use eigencrofton::Error;

#[derive(Parser)]
#[command(name = "eigencrofton", version, about = "Average zero counts of Laplace eigenfunctions on model spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenbasis identity checks.
    Bases {
        #[command(subcommand)]
        action: BasesAction,
    },
    /// Pullback-metric diagnostics of the evaluation map.
    Embed {
        #[command(subcommand)]
        action: EmbedAction,
    },
    /// Monte Carlo averages over random subspaces.
    Average {
        #[command(subcommand)]
        kind: AverageKind,
    },
    /// Crofton averages on spherical meshes.
    Crofton {
        #[command(subcommand)]
        action: CroftonAction,
    },
    /// Suites of experiments with expected verdicts.
    Suite {
        #[command(subcommand)]
        action: SuiteAction,
    },
}

#[derive(Subcommand)]
enum BasesAction {
    Verify(BasisArgs),
}

#[derive(Subcommand)]
enum EmbedAction {
    Check(BasisArgs),
}

#[derive(Subcommand)]
enum AverageKind {
    Zeros(AverageArgs),
    Nodal(AverageArgs),
    Local(AverageArgs),
    Degenerate(AverageArgs),
}

#[derive(Subcommand)]
enum CroftonAction {
    Run(CroftonArgs),
    /// Writes one of the built-in test meshes.
    Mesh(MeshArgs),
}

#[derive(Subcommand)]
enum SuiteAction {
    Run {
        suite: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, env = THREADS_ENV)]
        threads: Option<usize>,
    },
}

#[derive(Args, Clone)]
struct BasisArgs {
    /// TOML config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long)]
    l: Option<usize>,
    /// Torus frequency `k1,k2`.
    #[arg(long, value_delimiter = ',')]
    frequency: Option<Vec<i64>>,
    /// Torus with periods (2π, 2π/a).
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    periods: Option<Vec<f64>>,
    /// Zero-based sub-basis indices, comma separated.
    #[arg(long, value_delimiter = ',')]
    indices: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// Treat the model as isotropy irreducible (or not).
    #[arg(long)]
    isotropy_irreducible: Option<bool>,
    /// JSON output file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct AverageArgs {
    #[command(flatten)]
    basis: BasisArgs,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = THREADS_ENV)]
    threads: Option<usize>,
    /// `whole`, `hemisphere`, `cap:ax,ay,az,radius` or `rect:x0,x1,y0,y1`.
    #[arg(long)]
    region: Option<String>,
    /// Codimension for nodal averages.
    #[arg(long)]
    k: Option<usize>,
    /// Cross-check torus trials with the reduction oracle.
    #[arg(long)]
    oracle: bool,
    /// Per-trial CSV output.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct CroftonArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = THREADS_ENV)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct MeshArgs {
    #[arg(long, value_enum)]
    kind: MeshKind,
    #[arg(long, default_value_t = 256)]
    segments: usize,
    /// Colatitude of the small circle.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_6)]
    alpha: f64,
    #[arg(long, default_value_t = 3.0)]
    turns: f64,
    #[arg(long, default_value_t = 4)]
    ambient: usize,
    #[arg(long, default_value_t = 3)]
    level: usize,
    /// Grid resolution of the torus image.
    #[arg(long, default_value_t = 96)]
    resolution: usize,
    /// Torus parameter a for the torus image (frequency 1,1).
    #[arg(long, default_value_t = 2.0)]
    a: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Circle,
    Sphere2,
    Torus,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    SingleOrbit,
    Merged,
    Strict,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeshKind {
    GreatCircle,
    SmallCircle,
    Spiral,
    EquatorialSphere,
    TorusImage,
}

fn base_config(path: &Option<PathBuf>) -> Result<ExperimentConfig, Error> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn pair<T: Copy>(name: &str, v: &[T]) -> Result<[T; 2], Error> {
    match v {
        [x, y] => Ok([*x, *y]),
        _ => Err(Error::Config(format!("--{name} takes exactly two comma-separated values"))),
    }
}

fn apply_basis(cfg: &mut ExperimentConfig, a: &BasisArgs) -> Result<(), Error> {
    if let Some(m) = a.model {
        cfg.model.kind = Some(match m {
            ModelArg::Circle => ModelKind::Circle,
            ModelArg::Sphere2 => ModelKind::Sphere2,
            ModelArg::Torus => ModelKind::FlatTorus2,
        });
    }
    if a.a.is_some() {
        cfg.model.a = a.a;
        cfg.model.periods = None;
    }
    if let Some(p) = &a.periods {
        cfg.model.periods = Some(pair("periods", p)?);
        cfg.model.a = None;
    }
    if a.isotropy_irreducible.is_some() {
        cfg.model.isotropy_irreducible = a.isotropy_irreducible;
    }
    if a.l.is_some() {
        cfg.basis.l = a.l;
    }
    if let Some(f) = &a.frequency {
        cfg.basis.frequency = Some(pair("frequency", f)?);
    }
    if a.indices.is_some() {
        cfg.basis.indices = a.indices.clone();
    }
    if let Some(p) = a.policy {
        cfg.basis.policy = Some(match p {
            PolicyArg::SingleOrbit => EigenspacePolicy::SingleOrbit,
            PolicyArg::Merged => EigenspacePolicy::Merged,
            PolicyArg::Strict => EigenspacePolicy::Strict,
        });
    }
    if a.out.is_some() {
        cfg.output.json = a.out.clone();
    }
    Ok(())
}

fn average_config(kind: ExperimentKind, a: &AverageArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = base_config(&a.basis.config)?;
    cfg.kind = kind;
    apply_basis(&mut cfg, &a.basis)?;
    if a.trials.is_some() {
        cfg.trials = a.trials;
    }
    if a.seed.is_some() {
        cfg.seed = a.seed;
    }
    if a.threads.is_some() {
        cfg.threads = a.threads;
    }
    if let Some(r) = &a.region {
        cfg.region = Some(parse_region(r)?);
    }
    if a.k.is_some() {
        cfg.k = a.k;
    }
    if a.oracle {
        cfg.oracle = true;
    }
    if a.csv.is_some() {
        cfg.output.csv = a.csv.clone();
    }
    Ok(cfg)
}

fn print_outcome(outcome: &Outcome) {
    match outcome {
        Outcome::Report(r) => print!("{}", r.text_table()),
        other => println!("{}", other.to_json()),
    }
}

/// Runs a config and reports; returns the process exit code.
fn execute(cfg: ExperimentConfig) -> Result<u8, Error> {
    let outcome = cfg.run()?;
    print_outcome(&outcome);
    cfg.write_outputs(&outcome)?;
    Ok(match &outcome {
        Outcome::Identities(r) if !r.passed() => {
            for f in &r.failures {
                eprintln!("identity check failed: {f}");
            }
            1
        }
        _ => 0,
    })
}

fn write_mesh(a: &MeshArgs) -> Result<u8, Error> {
    use eigencrofton::crofton::*;
    let mesh = match a.kind {
        MeshKind::GreatCircle => great_circle_mesh(a.segments)?,
        MeshKind::SmallCircle => small_circle_mesh(a.alpha, a.segments)?,
        MeshKind::Spiral => spiral_mesh(a.turns, a.segments)?,
        MeshKind::EquatorialSphere => equatorial_sphere_mesh(a.ambient, a.level)?,
        MeshKind::TorusImage => {
            let b = eigencrofton::models::torus_eigenbasis(
                [2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI / a.a],
                [1, 1],
                EigenspacePolicy::SingleOrbit,
            )?;
            embed_image_mesh(&b, a.resolution)?
        }
    };
    mesh.write(&a.out)?;
    println!(
        "wrote {} ({} vertices, {} cells, volume {:.9}, crofton value {:.9})",
        a.out.display(),
        mesh.vertices().len(),
        mesh.cells().len(),
        mesh.total_volume(),
        mesh.crofton_theory()
    );
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Bases { action: BasesAction::Verify(a) } => basis_command(ExperimentKind::Verify, &a),
        Command::Embed { action: EmbedAction::Check(a) } => basis_command(ExperimentKind::Embed, &a),
        Command::Average { kind } => {
            let cfg = match &kind {
                AverageKind::Zeros(a) => average_config(ExperimentKind::Zeros, a)?,
                AverageKind::Nodal(a) => average_config(ExperimentKind::Nodal, a)?,
                AverageKind::Local(a) => average_config(ExperimentKind::Local, a)?,
                AverageKind::Degenerate(a) => average_config(ExperimentKind::Degenerate, a)?,
            };
            execute(cfg)
        }
        Command::Crofton { action: CroftonAction::Run(a) } => {
            let mut cfg = base_config(&a.config)?;
            cfg.kind = ExperimentKind::Crofton;
            if let Some(m) = &a.mesh {
                cfg.mesh = Some(MeshConfig {
                    file: Some(m.clone()),
                    generator: None::<MeshGenerator>,
                });
            }
            if a.trials.is_some() {
                cfg.trials = a.trials;
            }
            if a.seed.is_some() {
                cfg.seed = a.seed;
            }
            if a.threads.is_some() {
                cfg.threads = a.threads;
            }
            if a.out.is_some() {
                cfg.output.json = a.out.clone();
            }
            if a.csv.is_some() {
                cfg.output.csv = a.csv.clone();
            }
            execute(cfg)
        }
        Command::Crofton { action: CroftonAction::Mesh(a) } => write_mesh(&a),
        Command::Suite { action: SuiteAction::Run { suite, seed, threads } } => {
            let summary = run_suite(&suite, seed, threads)?;
            print!("{}", summary.table());
            Ok(summary.exit_code() as u8)
        }
    }
}

fn basis_command(kind: ExperimentKind, a: &BasisArgs) -> Result<u8, Error> {
    let mut cfg = base_config(&a.config)?;
    cfg.kind = kind;
    apply_basis(&mut cfg, a)?;
    execute(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
