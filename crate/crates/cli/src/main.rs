use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use verifier_core::config::RunConfig;
use verifier_core::report::Verdict;
use verifier_core::runner;

/// Default output directory when neither the config nor `--out` names one.
const DEFAULT_OUT: &str = "verifier-report";

#[derive(Parser)]
#[command(name = "verifier", version, about = "Run the numerical verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured suites and write report.json and per-suite CSVs.
    Run {
        /// JSON config; omitted keys take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override one config value by dotted path, e.g. `graph.m_list=[4,8]`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory (overrides `out_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List every registered check with its anchor quote.
    Describe,
}

fn load(config: Option<PathBuf>, set: &[String], out: Option<PathBuf>) -> verifier_core::Result<RunConfig> {
    let mut cfg = match config {
        Some(p) => RunConfig::load(&p)?,
        None => RunConfig::default(),
    };
    cfg = cfg.with_overrides(set)?;
    if out.is_some() {
        cfg.out_dir = out;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Describe => {
            print!("{}", runner::describe());
            ExitCode::SUCCESS
        }
        Command::Run { config, set, out } => {
            let cfg = match load(config, &set, out) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("verifier: {e}");
                    return ExitCode::from(2);
                }
            };
            let output = match runner::run(&cfg) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("verifier: {e}");
                    return ExitCode::from(2);
                }
            };
            let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            if let Err(e) = runner::write_outputs(&output, &cfg, &dir) {
                eprintln!("verifier: cannot write reports to {}: {e}", dir.display());
                return ExitCode::from(2);
            }
            for r in &output.report.records {
                let measured = r.measured.map_or_else(|| "-".to_string(), |m| format!("{m:.6e}"));
                println!("{:<5} {:<15} {:<26} {measured}", r.verdict.as_str(), r.suite, r.check);
                if r.verdict == Verdict::Fail {
                    if let Some(d) = &r.diagnostics {
                        println!("      {d}");
                    }
                }
            }
            let s = output.report.summary;
            println!(
                "{} checks: {} pass, {} fail, {} info -> {}",
                s.total,
                s.pass,
                s.fail,
                s.info,
                dir.display()
            );
            ExitCode::from(output.exit_code() as u8)
        }
    }
}
