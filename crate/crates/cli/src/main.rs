use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod report;

/// Phase retrieval frames and sorting encoders: certify, encode, decode, bound.
#[derive(Debug, Parser)]
#[command(name = "phasekey", version, about)]
struct Cli {
    /// Add wall-clock time to JSON reports (makes output non-reproducible).
    #[arg(long, global = true)]
    timing: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a random Gaussian key.
    Keygen {
        /// Ambient dimension d.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        rows: u64,
        /// Number of frame vectors D.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        cols: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run injectivity certificates on a key.
    Check {
        key: PathBuf,
        /// Certificate to run; all four when omitted.
        #[arg(long, value_enum)]
        certificate: Option<Certificate>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Optimal Lipschitz constants, optimal partition and extremal witnesses.
    Bounds {
        key: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Encode a signal or configuration.
    Encode {
        #[arg(long, value_enum)]
        encoder: Encoder,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the sorting permutations (beta only), one line per column.
        #[arg(long)]
        perms: Option<PathBuf>,
    },
    /// Recover a 2 x d configuration from its embedding.
    Decode {
        #[arg(long, value_enum)]
        encoder: DecodeEncoder,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write a JSON report with the residual.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Distance between two orbits.
    Metric {
        #[arg(long, value_enum)]
        space: Space,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the invariant battery against a key.
    Verify {
        key: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Certificate {
    FullSpark,
    Complement,
    PhaseRetrievable,
    UniversalKey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Encoder {
    Alpha,
    Beta,
    BetaTilde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecodeEncoder {
    Beta,
    BetaTilde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Space {
    #[value(name = "hatH")]
    HatH,
    #[value(name = "hatV")]
    HatV,
}

fn configure_threads() {
    // THREADS only changes scheduling; every search reduces deterministically
    if let Some(n) = std::env::var("THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let ctx = commands::Context { timing: cli.timing };
    let outcome = match cli.command {
        Command::Keygen {
            rows,
            cols,
            seed,
            out,
        } => commands::keygen(rows as usize, cols as usize, seed, &out),
        Command::Check {
            key,
            certificate,
            report,
        } => commands::check(&ctx, &key, certificate, report.as_deref()),
        Command::Bounds { key, report } => commands::bounds(&ctx, &key, report.as_deref()),
        Command::Encode {
            encoder,
            key,
            input,
            out,
            perms,
        } => commands::encode(encoder, &key, &input, &out, perms.as_deref()),
        Command::Decode {
            encoder,
            key,
            input,
            out,
            report,
        } => commands::decode(&ctx, encoder, &key, &input, &out, report.as_deref()),
        Command::Metric {
            space,
            x,
            y,
            report,
        } => commands::metric(&ctx, space, &x, &y, report.as_deref()),
        Command::Verify {
            key,
            samples,
            seed,
            report,
        } => commands::verify(&ctx, &key, samples, seed, report.as_deref()),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::exit_code_for(&err))
        }
    }
}
