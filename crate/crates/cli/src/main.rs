use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use effcap::mixfit::Family;
use effcap_cli::fit::FitArgs;
use effcap_cli::input::{read_channel, read_source};
use effcap_cli::pdf_dump::{Column, PdfDumpArgs, Spacing};
use effcap_cli::sweep::SweepSpec;
use effcap_cli::validate::ValidateArgs;
use effcap_cli::{fit, pdf_dump, sweep, validate, Output, UsageError, EXIT_USAGE};

/// Effective capacity of α-η-μ/gamma composite fading channels.
#[derive(Debug, Parser)]
#[command(name = "effcap", version)]
struct Cli {
    /// RNG seed (overrides the seed in a sweep spec).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel evaluation.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write the primary output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress reports and metadata on standard error.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Mg,
    Mog,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SpacingArg {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum ColumnArg {
    Exact,
    Mg,
    Mog,
}

#[derive(Debug, clap::Args)]
struct FitOpts {
    /// Target canonical-grid MSE.
    #[arg(long, default_value_t = 1e-8)]
    mse_target: f64,
    /// Training draws for the MoG fit.
    #[arg(long)]
    mog_samples: Option<usize>,
    /// Highest order tried by the order search.
    #[arg(long)]
    max_order: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select an order and fit an MG or MoG model.
    Fit {
        /// Channel JSON: a file, `-` for stdin or inline JSON.
        #[arg(long)]
        channel: String,
        #[arg(long, value_enum, default_value = "mg")]
        family: FamilyArg,
        #[command(flatten)]
        fit: FitOpts,
    },
    /// Run a sweep described by a JSON spec and emit CSV.
    Sweep {
        /// Sweep spec JSON: a file, `-` for stdin or inline JSON.
        spec: String,
    },
    /// Compare MG, MoG, exact quadrature and Monte Carlo at several A.
    Validate {
        #[arg(long)]
        channel: String,
        /// Comma-separated exponents; 0 gives the ergodic limit.
        #[arg(long = "a", value_delimiter = ',', default_value = "0.5,1,2,5")]
        a_values: Vec<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        mc_samples: usize,
        #[command(flatten)]
        fit: FitOpts,
    },
    /// Tabulate densities on a grid.
    PdfDump {
        #[arg(long)]
        channel: String,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, value_enum, default_value = "log")]
        spacing: SpacingArg,
        #[arg(
            long,
            value_enum,
            value_delimiter = ',',
            default_value = "exact,mg,mog"
        )]
        which: Vec<ColumnArg>,
        #[command(flatten)]
        fit: FitOpts,
    },
}

fn family(f: FamilyArg) -> Family {
    match f {
        FamilyArg::Mg => Family::Mg,
        FamilyArg::Mog => Family::Mog,
    }
}

fn execute(cli: &Cli) -> Result<(Output, Option<&'static str>)> {
    let seed = cli.seed.unwrap_or(0);
    Ok(match &cli.command {
        Command::Fit {
            channel,
            family: f,
            fit,
        } => {
            let args = FitArgs {
                channel: read_channel(channel)?,
                family: family(*f),
                mse_target: fit.mse_target,
                seed,
                mog_samples: fit.mog_samples,
                max_order: fit.max_order,
            };
            (fit::run(&args)?, None)
        }
        Command::Sweep { spec } => {
            let spec = SweepSpec::from_json(&read_source(spec)?)?;
            (sweep::run(&spec, cli.seed)?.0, Some(".meta.json"))
        }
        Command::Validate {
            channel,
            a_values,
            mc_samples,
            fit,
        } => {
            let args = ValidateArgs {
                channel: read_channel(channel)?,
                a_values: a_values.clone(),
                mc_samples: *mc_samples,
                seed,
                mse_target: fit.mse_target,
                mog_samples: fit.mog_samples,
                max_order: fit.max_order,
            };
            validate::check_args(&args)?;
            (validate::run(&args)?.0, None)
        }
        Command::PdfDump {
            channel,
            from,
            to,
            points,
            spacing,
            which,
            fit,
        } => {
            let args = PdfDumpArgs {
                channel: read_channel(channel)?,
                from: *from,
                to: *to,
                points: *points,
                spacing: match spacing {
                    SpacingArg::Log => Spacing::Log,
                    SpacingArg::Linear => Spacing::Linear,
                },
                columns: which
                    .iter()
                    .map(|c| match c {
                        ColumnArg::Exact => Column::Exact,
                        ColumnArg::Mg => Column::Mg,
                        ColumnArg::Mog => Column::Mog,
                    })
                    .collect(),
                mse_target: fit.mse_target,
                seed,
                mog_samples: fit.mog_samples,
                max_order: fit.max_order,
            };
            (pdf_dump::run(&args)?, None)
        }
    })
}

fn sidecar_path(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn emit(cli: &Cli, output: &Output, sidecar_suffix: Option<&str>) -> Result<()> {
    match &cli.out {
        Some(path) => {
            std::fs::write(path, &output.body)
                .with_context(|| format!("writing {}", path.display()))?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(output.body.as_bytes())?;
            stdout.flush()?;
        }
    }
    if let Some(side) = &output.sidecar {
        match (&cli.out, sidecar_suffix) {
            (Some(path), Some(suffix)) => {
                let p = sidecar_path(path, suffix);
                std::fs::write(&p, side).with_context(|| format!("writing {}", p.display()))?;
            }
            _ if cli.quiet => {}
            _ => eprint!("{side}"),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(EXIT_USAGE as u8);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = execute(&cli).and_then(|(output, suffix)| {
        emit(&cli, &output, suffix)?;
        Ok(output.outcome)
    });
    match result {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(EXIT_USAGE as u8)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
