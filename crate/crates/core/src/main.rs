use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use dropout_mfg::cli::{parse_config, run, Command};
use dropout_mfg::Error;

/// Equilibria of liquidation games with market drop-out.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    /// riccati | solve-mfg | solve-nplayer | baseline | compare | converge | paths
    command: String,
    /// TOML configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Overrides as `--section.key=value`, plus `--M`, `--N`, `--Ns`, `--delta`, `--tol`, `--out`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&Error::config("arguments", e.to_string())),
    };
    let result = Command::parse(&args.command)
        .and_then(|cmd| parse_config(cmd, args.config.as_deref(), &args.overrides))
        .and_then(|cfg| run(&cfg));
    match result {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &Error) -> ExitCode {
    let (category, code) = e.category();
    eprintln!(
        "{}",
        serde_json::json!({ "error": category, "message": e.to_string() })
    );
    ExitCode::from(code as u8)
}
