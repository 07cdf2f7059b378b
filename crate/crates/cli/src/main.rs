//! `afcm run <config>`, `afcm export-field <report-dir>`, `afcm list-problems`.
//!
//! Exit status: 0 on success, 1 for configuration or input errors, 2 when the
//! solver fails.

use std::path::PathBuf;
use std::process::ExitCode;

use afcm::experiment::{export_field_from_dir, run_config_file, ProblemKind, Window};
use afcm::AfcmError;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "afcm", version, about = "Adaptive feature capture for near-singular PDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config (AFCM_SEED overrides the seed).
    Run { config: PathBuf },
    /// Sample the final solution of a finished run on a uniform grid.
    ExportField {
        report_dir: PathBuf,
        /// Rectangle `x0,y0,x1,y1`; defaults to the whole domain.
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
        #[arg(long, default_value_t = 101)]
        resolution: usize,
        /// Output CSV; defaults to `<report-dir>/field.csv`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List the registered problems.
    ListProblems,
}

fn exit_code(e: &AfcmError) -> ExitCode {
    if e.is_solver_failure() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run { config } => run_config_file(&config).map(|out| {
            for (k, linf, l2) in out.report.error_rows() {
                println!("{k:>3}  linf {linf:.3e}  l2 {l2:.3e}");
            }
            println!("wrote {} ({:.1} s)", out.output.display(), out.timings.total);
        }),
        Command::ExportField {
            report_dir,
            window,
            resolution,
            output,
        } => export(&report_dir, window.as_deref(), resolution, output),
        Command::ListProblems => {
            for p in ProblemKind::ALL {
                println!("{:<20} {}", p.name(), p.description());
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("afcm: {e}");
            exit_code(&e)
        }
    }
}

fn export(
    dir: &std::path::Path,
    window: Option<&str>,
    resolution: usize,
    output: Option<PathBuf>,
) -> afcm::Result<()> {
    let window = match window {
        Some(w) => Window::parse(w)?,
        None => {
            let sol = afcm::experiment::load_solution(dir)?;
            Window::full(&sol.partition.domain)
        }
    };
    let path = export_field_from_dir(dir, window, resolution, output.as_deref())?;
    println!("wrote {}", path.display());
    Ok(())
}
