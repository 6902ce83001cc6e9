use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use magwave::fields::BUILTINS;
use magwave::harness::config::resolve_out_path;
use magwave::harness::{compare, convergence, run, RunConfig};
use magwave::Result;

#[derive(Parser)]
#[command(name = "magwave", version, about = "Gaussian wave packets in magnetic fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write its trajectory CSV.
    Run { config: PathBuf },
    /// Sweep step sizes against a fine reference run.
    Convergence {
        config: PathBuf,
        /// Strictly decreasing step sizes.
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        taus: Vec<f64>,
        /// The reference step is min(taus) / ref_factor.
        #[arg(long, default_value_t = 100.0)]
        ref_factor: f64,
        /// Defaults to `<output path stem>_convergence.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run two configurations on the same grid and join their invariants.
    Compare {
        config_a: PathBuf,
        config_b: PathBuf,
        /// Defaults to `<stem A>_vs_<stem B>.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the available field ids and their parameters.
    ListBuiltins,
}

fn sibling(path: &Path, name: String) -> PathBuf {
    path.with_file_name(name)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config } => {
            let cfg = RunConfig::load(&config)?;
            let out = cfg.resolved_out_path();
            let s = run(&cfg)?;
            println!("wrote {} ({} rows, {} steps)", out.display(), s.rows, s.steps);
            println!("max symplecticity residual  {:.3e}", s.max_sympl_residual);
            println!("max modified residual       {:.3e}", s.max_modified_residual);
            println!("max linear momentum drift   {:.3e}", s.max_linear_momentum_drift);
            println!("max angular momentum drift  {:.3e}", s.max_angular_momentum_drift);
            println!("final energy error          {:.3e}", s.final_energy_error());
        }
        Command::Convergence {
            config,
            taus,
            ref_factor,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            let table = convergence(&cfg, &taus, ref_factor)?;
            let out = resolve_out_path(
                &out.unwrap_or_else(|| sibling(&cfg.out_path, format!("{}_convergence.csv", stem(&cfg.out_path)))),
            );
            table.to_table().write(&out)?;
            println!("reference tau {:e}", table.reference_tau);
            println!("{:>12} {:>14} {:>14} {:>8} {:>8}", "tau", "energy err", "state err", "order", "order");
            for r in &table.rows {
                let fmt = |o: Option<f64>| o.map_or("-".to_string(), |v| format!("{v:.3}"));
                println!(
                    "{:>12.4e} {:>14.6e} {:>14.6e} {:>8} {:>8}",
                    r.tau,
                    r.energy_error,
                    r.state_error,
                    fmt(r.energy_order),
                    fmt(r.state_order)
                );
            }
            if let (Some(e), Some(s)) = (table.energy_slope(), table.state_slope()) {
                println!("fitted slopes: energy {e:.3}, state {s:.3}");
            }
            println!("wrote {}", out.display());
        }
        Command::Compare { config_a, config_b, out } => {
            let a = RunConfig::load(&config_a)?;
            let b = RunConfig::load(&config_b)?;
            let table = compare(&a, &b)?;
            let out = resolve_out_path(
                &out.unwrap_or_else(|| PathBuf::from(format!("{}_vs_{}.csv", stem(&config_a), stem(&config_b)))),
            );
            table.write(&out)?;
            println!("wrote {} ({} rows)", out.display(), table.rows.len());
        }
        Command::ListBuiltins => {
            for (id, params, desc) in BUILTINS {
                println!("{id:<16} params: {params}");
                println!("{:<16} {desc}", "");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
