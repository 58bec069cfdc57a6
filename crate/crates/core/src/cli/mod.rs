//! Command-line front end.
//!
//! Exit codes: 0 success (or `converges` for `analyze`), 1 usage, parse or
//! I/O error, 2 divergence or a failed precondition, 3 `undetermined`.

mod commands;
pub mod pairfile;
pub mod presets;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::scheme::Mode;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DIVERGES: i32 = 2;
pub const EXIT_UNDETERMINED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dysub", version, about = "Dyadic subdivision scheme toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide convergence of a mask and print the verdict as JSON
    Analyze(AnalyzeArgs),
    /// Write the cascade frame of the refinable function as CSV
    Cascade(CascadeArgs),
    /// Sample the fractal curve of an affine pair
    Fractal(FractalArgs),
    /// Run the dyadic and classical schemes side by side
    Compare(CompareArgs),
    /// List the built-in example masks
    Presets,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct MaskSource {
    /// Built-in example, ex1 .. ex9
    #[arg(long)]
    preset: Option<String>,
    /// Comma-separated coefficients; p/q fractions are accepted
    #[arg(long, allow_hyphen_values = true)]
    mask: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Dyadic,
    Classical,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Dyadic => Mode::Dyadic,
            ModeArg::Classical => Mode::Classical,
        }
    }
}

#[derive(Debug, Args)]
struct ProbeArgs {
    /// Probe convergence threshold
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Probe iteration count
    #[arg(long, default_value_t = 24, value_parser = clap::value_parser!(u32).range(2..=40))]
    max_iter: u32,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: MaskSource,
    #[command(flatten)]
    probe: ProbeArgs,
    /// Product length for the spectral radius search
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u32).range(1..=24))]
    jsr_depth: u32,
    /// Deepest index-set level for the nonnegative rule
    #[arg(long, default_value_t = 6)]
    levels: u32,
}

#[derive(Debug, Args)]
struct CascadeArgs {
    #[command(flatten)]
    source: MaskSource,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..=30))]
    iters: u32,
    #[arg(long, value_enum, default_value_t = ModeArg::Dyadic)]
    mode: ModeArg,
    /// CSV destination; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG rendering here
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Write the frame even if the probe reports divergence
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    probe: ProbeArgs,
}

#[derive(Debug, Args)]
struct FractalArgs {
    /// Pair file: dimension, then d rows of d+1 numbers for each operator
    #[arg(conflicts_with = "mask_pair", required_unless_present = "mask_pair")]
    pair: Option<PathBuf>,
    /// Use the pair on difference coordinates of a mask (preset name or coefficients)
    #[arg(long, allow_hyphen_values = true)]
    mask_pair: Option<String>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(0..=22))]
    depth: u32,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Coordinates drawn in the SVG, e.g. 1,2
    #[arg(long, default_value = "1,2")]
    coords: String,
    /// Product length for the contraction check
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..=24))]
    jsr_depth: u32,
    /// Sample even if the contraction check fails
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    source: MaskSource,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..=30))]
    iters: u32,
    /// Directory for the two CSV files
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Write frames even for a diverging mode
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    probe: ProbeArgs,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => commands::analyze(a, out, err),
        Command::Cascade(a) => commands::cascade(a, out, err),
        Command::Fractal(a) => commands::fractal(a, out, err),
        Command::Compare(a) => commands::compare(a, out, err),
        Command::Presets => commands::presets(out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}
