use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fedcs_core::config::ExperimentConfig;
use fedcs_core::metrics::format_toa;
use fedcs_core::runner::{run_to_dir, RunOptions, SweepSummary};

/// Simulate client selection for federated learning in a wireless cell.
#[derive(Debug, Parser)]
#[command(name = "fedcs", version, arg_required_else_help = true)]
struct Cli {
    /// Print the default configuration as JSON and exit.
    #[arg(long)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a configuration file.
    Validate { config: PathBuf },
    /// Run every configured experiment and write records, curves and a summary.
    Run {
        config: PathBuf,
        /// Run only this seed instead of the configured list.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write into an existing output directory.
        #[arg(long)]
        force: bool,
        /// Worker threads; defaults to the number of CPUs.
        #[arg(long)]
        parallelism: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_defaults {
        // A closed pipe (e.g. `| head`) is not an error worth reporting.
        let _ = writeln!(
            std::io::stdout(),
            "{}",
            ExperimentConfig::default().to_json_pretty()
        );
        return ExitCode::SUCCESS;
    }
    let result = match cli.command {
        Some(Command::Validate { config }) => ExperimentConfig::load(&config).map(|c| {
            println!(
                "{}: ok ({} runs, config hash {})",
                config.display(),
                c.descriptors().len(),
                c.hash()
            );
            ExitCode::SUCCESS
        }),
        Some(Command::Run {
            config,
            seed,
            out,
            force,
            parallelism,
        }) => run(config, seed, out, force, parallelism),
        None => Ok(ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::FAILURE
    })
}

fn run(
    path: PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
    force: bool,
    parallelism: Option<usize>,
) -> fedcs_core::Result<ExitCode> {
    let mut config = ExperimentConfig::load(&path)?;
    if let Some(seed) = seed {
        config.seeds = vec![seed];
    }
    let out_dir = out
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let options = RunOptions {
        out_dir,
        force,
        parallelism: parallelism
            .or_else(|| std::thread::available_parallelism().ok().map(usize::from))
            .unwrap_or(1),
    };
    let summary = run_to_dir(&config, &options)?;
    print_summary(&summary);
    println!("wrote {}", options.out_dir.display());
    let failures: Vec<_> = summary.failures().collect();
    for f in &failures {
        eprintln!("run {} failed: {}", f.run, f.error);
    }
    Ok(if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn print_summary(summary: &SweepSummary) {
    let toa_headers: Vec<String> = summary
        .thresholds
        .iter()
        .map(|t| format!("toa@{t}"))
        .collect();
    println!(
        "{:<32} {:>6} {:>16} {:>16} {:>10} {}",
        "setting",
        "runs",
        "clients/round",
        "nonempty",
        "final_acc",
        toa_headers.join(" ")
    );
    for g in &summary.groups {
        let s = &g.summary;
        let nonempty = s
            .mean_clients_per_nonempty_round
            .map_or("NaN".to_string(), |m| format!("{:.2}±{:.2}", m.mean, m.std));
        let toa: Vec<String> = s.toa.iter().map(|t| format_toa(t.mean)).collect();
        println!(
            "{:<32} {:>6} {:>16} {:>16} {:>10.4} {}",
            g.group,
            g.runs.len(),
            format!(
                "{:.2}±{:.2}",
                s.mean_clients_per_round.mean, s.mean_clients_per_round.std
            ),
            nonempty,
            s.final_accuracy.mean,
            toa.join(" ")
        );
    }
}
