use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use specshield::harness::{
    cmd_montecarlo, cmd_plot, cmd_run, cmd_synth, describe, load_experiment, Experiment, HarnessError,
};
use specshield::runtime::Mode;

#[derive(Parser)]
#[command(name = "specshield", version, about = "Specification-shielded policy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the formula policy and write qtable.bin.
    Synth(Common),
    /// Run one episode and write its record and SVG.
    Run(WithMode),
    /// Run n_runs episodes and write CSV and summary.
    Mc(WithMode),
    /// Re-render the SVG of a stored run.
    Plot(WithMode),
}

#[derive(Args)]
struct Common {
    /// Experiment JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Dotted-path override, e.g. `run.t_max=500`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed for synthesis and runs.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct WithMode {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "shielded")]
    mode: Mode,
}

fn load(c: &Common) -> Result<Experiment, HarnessError> {
    let mut overrides = c.overrides.clone();
    if let Some(seed) = c.seed {
        overrides.push(format!("run.seed={seed}"));
        overrides.push(format!("synthesis.seed={seed}"));
    }
    load_experiment(&c.config, &overrides)
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Synth(c) => {
            let exp = load(&c)?;
            let s = cmd_synth(&exp)?;
            println!(
                "gate: {} (attempts {}, episodes {}, rollout robustness {:.4}, states {})",
                s.gate, s.report.attempts, s.report.episodes, s.report.rollout_robustness, s.report.states
            );
            println!("wrote {}", exp.out_dir().join("qtable.bin").display());
        }
        Command::Run(m) => {
            let exp = load(&m.common)?;
            let r = cmd_run(&exp, m.mode)?;
            println!(
                "{}: steps {}, stl {}, main {}, projected {}, fallbacks {}, robustness {:.4}",
                m.mode,
                r.steps(),
                r.stl_satisfied,
                r.main_done,
                r.projected_steps,
                r.fallback_steps,
                r.final_robustness
            );
            println!("wrote {}", exp.out_dir().join(format!("run_{}.svg", m.mode)).display());
        }
        Command::Mc(m) => {
            let exp = load(&m.common)?;
            let stats = cmd_montecarlo(&exp, m.mode)?;
            println!("{}", describe(&stats, m.mode));
            let summary = exp.out_dir().join(format!("mc_{}_summary.json", m.mode));
            println!("wrote {}", summary.display());
            println!("wrote {}", exp.out_dir().join(format!("mc_{}.csv", m.mode)).display());
        }
        Command::Plot(m) => {
            let exp = load(&m.common)?;
            println!("wrote {}", cmd_plot(&exp, m.mode)?.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
