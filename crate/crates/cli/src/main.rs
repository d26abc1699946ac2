use clap::{Parser, Subcommand};
use pressure_transport_cli::config::RunConfig;
use pressure_transport_cli::runner::{self, RunContext, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Optimal transportation under a prescribed pressure field: actions,
/// Hopf-Lax solutions, reversible pairs, Kantorovich duality and flows.
#[derive(Parser)]
#[command(name = "ptrans", version, about)]
struct Cli {
    /// Run configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for artifacts
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker thread cap
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Override the config's rng seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Emit full field slices as CSV where applicable
    #[arg(long, global = true)]
    emit_slices: bool,

    /// Suppress progress output
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimise the action between two points
    Action,
    /// Propagate a Hopf-Lax forward or backward solution
    Hj {
        /// Override the configured direction (forward | backward)
        #[arg(long)]
        direction: Option<String>,
    },
    /// Build a reversible pair and its reversibility set
    Pair,
    /// Solve the Kantorovich problem over the configured measures
    Ot {
        /// Replace both marginals by k random uniform atoms
        #[arg(long)]
        random_atoms: Option<usize>,
    },
    /// Duality run: K, seeded Euler values and the gap
    Duality,
    /// Velocity extraction, Lipschitz extension and flow integration
    Flow {
        #[arg(long)]
        t1: Option<f64>,
        #[arg(long)]
        t2: Option<f64>,
        /// CSV of seed points (columns x_0..x_{n-1})
        #[arg(long)]
        seeds: Option<String>,
    },
    /// Orbit-measure norms, tubes and the regularised dual
    Norm {
        #[arg(long)]
        rayleigh_modes: Option<usize>,
        /// Tube width parameter α
        #[arg(long)]
        tube: Option<f64>,
        /// Regularisation strengths for Ψ_ε
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        psi_eps: Option<Vec<f64>>,
        #[arg(long)]
        omega: Option<f64>,
    },
    /// Run the acceptance battery
    Suite,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(threads) = cli.threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()
            .is_err()
        {
            eprintln!("warning: thread pool already initialised");
        }
    }

    let config_path = match &cli.config {
        Some(path) => path.clone(),
        None => {
            eprintln!("error: --config is required");
            return ExitCode::from(2);
        }
    };
    let (mut config, config_text) = match RunConfig::from_path(&config_path) {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    // per-subcommand flag overrides fold into the config before dispatch
    match &cli.command {
        Command::Hj { direction: Some(direction) } => match config.hj.as_mut() {
            Some(hj) => hj.direction = direction.clone(),
            None => {
                eprintln!("error: --direction needs an [hj] section");
                return ExitCode::from(2);
            }
        },
        Command::Ot { random_atoms: Some(k) } => {
            config.measures = Some(pressure_transport_cli::config::MeasuresConfig {
                mu0: pressure_transport_cli::config::MeasureSource::Random {
                    random_atoms: *k,
                    atom_seed: Some(config.seed),
                },
                mu1: pressure_transport_cli::config::MeasureSource::Random {
                    random_atoms: *k,
                    atom_seed: Some(config.seed + 1),
                },
            });
        }
        Command::Flow { t1, t2, seeds } => {
            let flow = config.flow.get_or_insert_with(Default::default);
            if t1.is_some() {
                flow.t1 = *t1;
            }
            if t2.is_some() {
                flow.t2 = *t2;
            }
            if seeds.is_some() {
                flow.seeds_csv = seeds.clone();
            }
        }
        Command::Norm { rayleigh_modes, tube, psi_eps, omega } => {
            if let Some(norm) = config.norm.as_mut() {
                if let Some(k) = rayleigh_modes {
                    norm.rayleigh_modes = *k;
                }
                if tube.is_some() {
                    norm.tube_alpha = *tube;
                }
                if let Some(eps) = psi_eps {
                    norm.psi_eps = eps.clone();
                }
                if let Some(w) = omega {
                    norm.omega = *w;
                }
            }
        }
        _ => {}
    }
    if let Err(e) = config.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let base_dir = config_path
        .parent()
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| PathBuf::from("."));
    // the artifact hash covers the config text plus every behavioural
    // override (not --out, which only relocates the tree)
    let overrides = match &cli.command {
        Command::Hj { direction } => format!("hj:{direction:?}"),
        Command::Ot { random_atoms } => format!("ot:{random_atoms:?}"),
        Command::Flow { t1, t2, seeds } => format!("flow:{t1:?},{t2:?},{seeds:?}"),
        Command::Norm { rayleigh_modes, tube, psi_eps, omega } => {
            format!("norm:{rayleigh_modes:?},{tube:?},{psi_eps:?},{omega:?}")
        }
        _ => String::new(),
    };
    let ctx = RunContext {
        config,
        config_text: format!(
            "{config_text}\nseed-override={:?}\noverrides={overrides}\nemit={}",
            cli.seed, cli.emit_slices
        ),
        base_dir,
        out_dir: cli.out.clone(),
        quiet: cli.quiet,
        emit_slices: cli.emit_slices,
    };

    let result = match cli.command {
        Command::Action => runner::run_action(&ctx),
        Command::Hj { .. } => runner::run_hj(&ctx),
        Command::Pair => runner::run_pair(&ctx),
        Command::Ot { .. } => runner::run_ot(&ctx),
        Command::Duality => runner::run_duality(&ctx),
        Command::Flow { .. } => runner::run_flow(&ctx),
        Command::Norm { .. } => runner::run_norm(&ctx),
        Command::Suite => runner::run_suite(&ctx),
    };

    match result {
        Ok(dir) => {
            if !cli.quiet {
                println!("artifacts: {}", dir.display());
            }
            ExitCode::SUCCESS
        }
        Err(RunError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(err @ RunError::Numerical { .. }) => {
            let serialized = serde_json::json!({ "error": err.to_string() });
            eprintln!("{serialized}");
            ExitCode::from(3)
        }
    }
}
