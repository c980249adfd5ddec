use clap::Parser;
use tflab_cli::{Command, Overrides, RunConfig};

/// Convertible bond lattice lab: prices, Greeks, hedge stress, VaR and the
/// finite-difference comparison, written as plot-ready files.
#[derive(Parser, Debug)]
#[command(name = "tflab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
    /// Worker threads for parameter sweeps.
    #[arg(long, env = "TFLAB_THREADS")]
    threads: Option<usize>,
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let cfg = RunConfig::resolve(cli.command, &cli.overrides)?;
    let report = tflab_cli::run(&cfg)?;
    for (k, v) in &report.summary {
        println!("{k} = {}", v.render());
    }
    for path in report.write(&cfg.out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
