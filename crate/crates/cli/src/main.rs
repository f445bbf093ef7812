mod commands;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gibbs_factor::sft::DEFAULT_ENUMERATION_LIMIT;

use report::Format;

#[derive(Parser, Debug)]
#[command(name = "gibbs-factor", version, about = "Gibbs states on shifts of finite type and their factor projections")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Also compute exact rational Perron data and measures.
    #[arg(long, global = true)]
    pub exact: bool,
    /// Tolerance of the command's own checks (oracle comparison, limit convergence).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Maximum number of words any enumeration may visit.
    #[arg(long, global = true, default_value_t = DEFAULT_ENUMERATION_LIMIT)]
    pub budget: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse and validate a system description.
    Validate { system: PathBuf },
    /// Pressure and Perron eigen-data of the transfer matrix.
    Perron { system: PathBuf },
    /// Gibbs measure of a cylinder.
    Measure {
        system: PathBuf,
        #[arg(long)]
        word: String,
    },
    /// Projected measure of an image cylinder.
    Project {
        system: PathBuf,
        #[arg(long)]
        word: String,
        /// Compare with the sum over all preimages.
        #[arg(long)]
        oracle: bool,
    },
    /// Compare block-product and brute-force projected measures on every image word.
    ProjectVerify {
        system: PathBuf,
        #[arg(long)]
        max_len: usize,
    },
    /// Search for the smallest fiber-wise mixing index.
    Fwm {
        system: PathBuf,
        #[arg(long = "max-N", default_value_t = 8)]
        max_n: usize,
    },
    /// Finite-depth g-function approximant of an image word.
    Gfun {
        system: PathBuf,
        #[arg(long)]
        word: String,
    },
    /// g at the eventually periodic point prefix·tail^∞.
    GfunLimit {
        system: PathBuf,
        #[arg(long, default_value = "")]
        prefix: String,
        #[arg(long)]
        tail: String,
        #[arg(long, default_value_t = 30)]
        jmax: usize,
    },
    /// Empirical variation profile of log g.
    Variation {
        system: PathBuf,
        #[command(flatten)]
        profile: ProfileArgs,
    },
    /// Classify the decay of the variation profile.
    Fit {
        system: PathBuf,
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, default_value_t = 2)]
        n0: usize,
    },
    /// Explicit contraction rate bound.
    Eta {
        system: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        #[arg(long, conflicts_with = "optimize", required_unless_present = "optimize")]
        sigma: Option<f64>,
        #[arg(long)]
        optimize: bool,
        /// Grid size of the σ search.
        #[arg(long, default_value_t = gibbs_factor::ganalysis::DEFAULT_SIGMA_GRID)]
        grid: usize,
        /// Fiber-wise mixing index; searched for (up to 8) when omitted.
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        full_shift: bool,
        /// Also fit the variation profile and check its rate against the bound.
        #[arg(long)]
        compare: bool,
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, default_value_t = 2)]
        n0: usize,
    },
    /// Projective diameters of the N-step block products.
    Contraction {
        system: PathBuf,
        #[arg(long = "N")]
        n: usize,
        /// Random positive vector pairs per product on which to check the contraction inequality.
        #[arg(long, default_value_t = 0)]
        samples: usize,
    },
    /// Reproduce the two-fiber example: Perron data, g at 0^∞, fiber-wise mixing.
    Example2,
    /// Print a built-in system description (example2, three-shift, full-shift-N).
    Fixture { name: String },
}

#[derive(Args, Debug, Clone)]
pub struct ProfileArgs {
    /// Length of the image words sampled.
    #[arg(long, default_value_t = 14)]
    pub m: usize,
    /// Largest n in the profile; (m−1)/2 when omitted.
    #[arg(long)]
    pub n_max: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let format = cli.global.format;
    let mut stdout = std::io::stdout().lock();
    let written = match commands::run(&cli) {
        Ok(commands::Output::Report(report)) => {
            let w = report.write(format, &mut stdout);
            if let Some(v) = &report.violation {
                eprintln!("property violation: {v}");
            }
            w.map(|_| if report.violation.is_some() { 1 } else { 0 })
        }
        Ok(commands::Output::Text(text)) => stdout.write_all(text.as_bytes()).map(|_| 0),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match written {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: cannot write output: {e}");
            ExitCode::from(2)
        }
    }
}
