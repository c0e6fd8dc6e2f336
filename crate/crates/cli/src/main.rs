use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use maxglm::harness::{self, CheckSizes, RkMethod, RunConfig, Scheme, Suite};

/// Experiments for the augmented Maxwell-GLM solvers.
#[derive(Parser, Debug)]
#[command(name = "maxglm", version)]
struct Cli {
    /// Root directory for outputs. Defaults to $MAXGLM_OUT, then `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a single simulation described by a `key = value` config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// `key=value`, applied after the file. Repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Planar-wave convergence study.
    Convergence {
        #[arg(long, value_parser = parse_scheme)]
        scheme: Scheme,
        #[arg(long, value_delimiter = ',', default_value = "20,40,80,160")]
        n: Vec<usize>,
        #[arg(long, default_value = "rk_high", value_parser = parse_rk)]
        rk: RkMethod,
    },
    /// Divergence errors of the staggered scheme for growing cleaning speed.
    Ap {
        #[arg(long, value_delimiter = ',', default_value = "1e2,1e3,1e4,1e5")]
        ch: Vec<f64>,
    },
    /// Property suites: discrete identities, flux compatibility, matrices.
    Check {
        #[arg(long, default_value = "all", value_parser = parse_suite)]
        suite: Suite,
    },
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: maxglm::Error| e.to_string())
}

fn parse_rk(s: &str) -> Result<RkMethod, String> {
    s.parse().map_err(|e: maxglm::Error| e.to_string())
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: maxglm::Error| e.to_string())
}

fn out_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("MAXGLM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` means the command ran but some check failed.
fn real_main() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    let root = out_root(cli.out);
    match cli.command {
        Command::Run { config, overrides } => {
            let mut cfg = RunConfig::from_file(&config)?;
            cfg.apply_overrides(&overrides)?;
            if cfg.output_dir.is_none() {
                let stem = config.file_stem().map(|s| s.to_string_lossy().into_owned());
                cfg.output_dir = Some(root.join(stem.unwrap_or_else(|| "run".into())));
            } else if let Some(d) = cfg.output_dir.as_ref().filter(|d| d.is_relative()) {
                cfg.output_dir = Some(root.join(d));
            }
            let out = harness::run(&cfg).with_context(|| format!("running {}", config.display()))?;
            print!("{}", harness::run_summary(&cfg, &out));
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            Ok(true)
        }
        Command::Convergence { scheme, n, rk } => {
            if n.is_empty() {
                bail!("--n needs at least one resolution");
            }
            let dir = root.join(format!("convergence_{scheme}"));
            let study = harness::study_convergence(scheme, &n, rk, Some(&dir))?;
            print!("{}", study.table.to_csv()?);
            println!("{}", study.report);
            println!("wrote {}", dir.join("errors.csv").display());
            println!("wrote {}", dir.join("summary.txt").display());
            Ok(study.report.all_pass())
        }
        Command::Ap { ch } => {
            let dir = root.join("ap");
            let study = harness::study_ap(&ch, Some(&dir))?;
            print!("{}", study.to_csv());
            println!("{}", study.report);
            println!("wrote {}", dir.join("ap.csv").display());
            println!("wrote {}", dir.join("summary.txt").display());
            Ok(study.report.all_pass())
        }
        Command::Check { suite } => {
            let report = harness::check(suite, CheckSizes::default())?;
            println!("{report}");
            Ok(report.all_pass())
        }
    }
}
