use std::path::Path;
use std::time::Instant;

use corrduel::similarity::{
    electrode_similarity, se_similarity, ElectrodeConfig, EmbeddedArmSet, FieldGrid,
};
use corrduel::simlab::{aggregate, export_results, run_experiment, ExperimentSpec};
use corrduel::SimilarityMatrix;
use corrduel_service::ServerConfig;

use crate::{CliError, ServeArgs, SimilaritySource, SimulateArgs};

fn read_spec(path: &Path) -> Result<ExperimentSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn resolve_spec(args: &SimulateArgs) -> Result<ExperimentSpec, CliError> {
    let mut spec = match &args.spec {
        Some(p) => read_spec(p)?,
        None => ExperimentSpec::default(),
    };
    if let Some(p) = &args.policies {
        spec.policies = p.clone();
    }
    if let Some(g) = args.grid {
        spec.grid = g;
    }
    if let Some(t) = args.horizon {
        spec.horizon = t;
    }
    if let Some(n) = args.trials {
        spec.trials = n;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(l) = args.lengthscale {
        spec.lengthscale = l;
    }
    if let Some(s) = args.sigma {
        spec.sigma = s;
    }
    if args.delta.is_some() {
        spec.delta = args.delta;
    }
    if let Some(a) = args.rucb_alpha {
        spec.rucb_alpha = a;
    }
    if args.fixed_landscape {
        spec.fixed_landscape = true;
    }
    spec.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(spec.resolved())
}

pub fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let spec = resolve_spec(&args)?;
    let echo = toml::to_string(&spec).map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("# resolved configuration");
    print!("{echo}");
    println!("out = {:?}", args.out.display().to_string());
    println!();

    let started = Instant::now();
    let traces = run_experiment(&spec).map_err(|e| CliError::Runtime(e.to_string()))?;
    let paths = export_results(&traces, &args.out).map_err(|e| CliError::Runtime(e.to_string()))?;
    let curves = aggregate(&traces).map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("final mean stepwise regret (t = {}):", spec.horizon);
    for c in &curves {
        let last = c.mean_stepwise.len().saturating_sub(1);
        println!(
            "  {:<14} {:.6}  (std {:.6}, cumulative {:.4})",
            c.policy.as_str(),
            c.mean_stepwise.get(last).copied().unwrap_or(0.0),
            c.std_stepwise.get(last).copied().unwrap_or(0.0),
            c.mean_cumulative.get(last).copied().unwrap_or(0.0),
        );
    }
    println!("wrote {} and {}", paths.csv.display(), paths.svg.display());
    eprintln!("{} trials in {:.2?}", spec.trials, started.elapsed());
    Ok(())
}

fn emit(matrix: &SimilarityMatrix, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => {
            matrix
                .write_file(p)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            eprintln!(
                "wrote {}x{} matrix to {}",
                matrix.dim(),
                matrix.dim(),
                p.display()
            );
        }
        None => print!("{}", matrix.to_text()),
    }
    Ok(())
}

pub fn similarity(source: SimilaritySource) -> Result<(), CliError> {
    match source {
        SimilaritySource::Grid {
            grid,
            lengthscale,
            out,
        } => {
            eprintln!("# grid = \"{grid}\", lengthscale = {lengthscale}");
            let arms = EmbeddedArmSet::grid(grid.nx, grid.ny, lengthscale)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let m = se_similarity(&arms).map_err(|e| CliError::Runtime(e.to_string()))?;
            emit(&m, out.as_deref())
        }
        SimilaritySource::Electrode { configs, out } => {
            let parsed = configs
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    s.parse::<ElectrodeConfig>()
                        .map_err(|e| CliError::Usage(format!("config {}: {e}", i + 1)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let grid = FieldGrid::default();
            eprintln!(
                "# {} configs, {} field points, softening = {}",
                parsed.len(),
                grid.points.len(),
                grid.softening
            );
            let m =
                electrode_similarity(&parsed, &grid).map_err(|e| CliError::Usage(e.to_string()))?;
            emit(&m, out.as_deref())
        }
    }
}

pub fn serve(args: ServeArgs) -> Result<(), CliError> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    println!("# resolved configuration");
    println!("listen = \"{}\"", args.listen);
    println!("data_dir = {:?}", args.data_dir.display().to_string());
    println!("seed = {}", args.seed);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
    runtime
        .block_on(corrduel_service::serve(ServerConfig {
            listen: args.listen,
            data_dir: args.data_dir,
            server_seed: args.seed,
        }))
        .map_err(|e| CliError::Runtime(e.to_string()))
}
