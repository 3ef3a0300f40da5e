use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use qpwh_cli::{apply_overrides, compare_files, run, Overrides, ScenarioConfig, EXIT_CONFIG};

/// Quarter-plane Wiener-Hopf scenario runner.
#[derive(Parser)]
#[command(version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Option<Cmd>,
    /// scenario config (TOML)
    #[arg(long)]
    config: Option<PathBuf>,
    /// solve | continue | crossing | field | wh1d | uniqueness | singular-map
    #[arg(long)]
    task: Option<String>,
    /// output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// single-threaded, bit-reproducible run
    #[arg(long)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Node-wise difference of two grid CSVs
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// write the report here as well as to stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(Cmd::Compare { a, b, out }) = cli.cmd {
        return match compare_files(&a, &b) {
            Ok(r) => {
                let text = serde_json::to_string_pretty(&r).expect("json serialises");
                println!("{text}");
                if let Some(o) = out {
                    if let Err(e) = std::fs::write(&o, &text) {
                        eprintln!("{}: {e}", o.display());
                        return ExitCode::from(3);
                    }
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(EXIT_CONFIG as u8)
            }
        };
    }
    let base = match &cli.config {
        Some(p) => ScenarioConfig::load(p),
        None => Ok(ScenarioConfig::default()),
    };
    let ov = Overrides { task: cli.task, out: cli.out, workers: cli.workers, deterministic: cli.deterministic };
    let cfg = match base.and_then(|c| apply_overrides(c, &ov)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let o = run(cfg);
    if o.code == 0 {
        println!("{}", o.message);
    } else {
        eprintln!("{}", o.message);
    }
    if let Some(d) = o.out_dir {
        println!("artifacts in {}", d.display());
    }
    ExitCode::from(o.code as u8)
}
