use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use edqd::config::parse_config;
use edqd::exec::Exec;
use edqd::experiment::run_batch;
use edqd::{analysis, fixtures, Error};

#[derive(Parser)]
#[command(
    name = "edqd",
    version,
    about = "Swarm quality-diversity simulator and experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of replicates for one variant.
    #[command(alias = "runBatch")]
    Run(RunArgs),
    /// Compute metrics and pairwise statistics over batch directories.
    Analyze {
        /// Batch directories written by `run`.
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long, default_value = "analysis")]
        out: PathBuf,
    },
    /// Check the bundled fixtures, or rewrite golden runs with --bless.
    #[command(alias = "verifyFixtures")]
    VerifyFixtures {
        #[arg(long, default_value = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures"))]
        dir: PathBuf,
        #[arg(long)]
        bless: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// R, M1, M2, M3 or medea-fps.
    #[arg(long)]
    variant: Option<String>,
    /// Flat `key = value` file; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    lifetime: Option<usize>,
    #[arg(long = "map-bins", alias = "mapBins")]
    map_bins: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for replicates (1 runs sequentially).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    dump_genomes: bool,
    #[arg(long)]
    trace: bool,
    /// Overwrite a non-empty output directory.
    #[arg(long)]
    force: bool,
    /// Extra `key=value` settings, same keys as the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn overrides(&self) -> Result<Vec<(String, String)>, Error> {
        let mut o = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                o.push((k.to_string(), v));
            }
        };
        push("variant", self.variant.clone());
        push("seed", self.seed.map(|v| v.to_string()));
        push("replicates", self.replicates.map(|v| v.to_string()));
        push("generations", self.generations.map(|v| v.to_string()));
        push("population", self.population.map(|v| v.to_string()));
        push("lifetime", self.lifetime.map(|v| v.to_string()));
        push("map-bins", self.map_bins.map(|v| v.to_string()));
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        push("workers", self.workers.map(|v| v.to_string()));
        push("dump-genomes", self.dump_genomes.then(|| "true".into()));
        push("trace", self.trace.then(|| "true".into()));
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config {
                key: kv.clone(),
                reason: "expected KEY=VALUE".into(),
            })?;
            o.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(o)
    }
}

fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::Config { .. } | Error::Parse { .. } | Error::OutputExists { .. } => {
            ExitCode::from(2)
        }
        _ => ExitCode::from(3),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => args
            .overrides()
            .and_then(|o| parse_config(&o, args.config.as_deref()))
            .and_then(|cfg| {
                let batch = run_batch(&cfg, args.force, Exec::from_workers(cfg.workers))?;
                println!(
                    "{} replicates written to {}",
                    batch.runs.len(),
                    batch.dir.display()
                );
                Ok(ExitCode::SUCCESS)
            }),
        Command::Analyze { dirs, out } => analysis::analyze(&dirs, &out).map(|report| {
            println!("{report}");
            ExitCode::SUCCESS
        }),
        Command::VerifyFixtures { dir, bless } => fixtures::run_all(&dir, bless).map(|outcomes| {
            let mut failed = 0;
            for o in &outcomes {
                println!("{o}");
                failed += usize::from(!o.passed());
            }
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                eprintln!("{failed} of {} fixtures failed", outcomes.len());
                ExitCode::from(1)
            }
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}
