use std::error::Error as StdError;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::pairfile::parse_pair;
use super::presets::{self, PRESETS};
use super::{
    AnalyzeArgs, CascadeArgs, CompareArgs, FractalArgs, MaskSource, ProbeArgs, EXIT_DIVERGES,
    EXIT_OK, EXIT_UNDETERMINED,
};
use crate::criteria::{analyze as analyze_mask, AnalyzeOptions, Overall};
use crate::error::Error;
use crate::fractal::{affine_pair_from_mask, sample_curve_with, AffinePair, CurveOptions};
use crate::render::{curve_svg, frame_svg};
use crate::scheme::{
    cascade_with, convergence_probe_with, format_value, Mask, Mode, ProbeOptions, ProbeReport,
    ProbeVerdict,
};
use crate::spectral::{describe_bracket, holder_exponent};

type CmdResult = Result<i32, Box<dyn StdError>>;

fn load_mask(source: &MaskSource) -> Result<(Mask, String), Error> {
    match (&source.preset, &source.mask) {
        (Some(name), _) => {
            let p = presets::find(name)?;
            Ok((p.mask(), p.name.to_string()))
        }
        (None, Some(text)) => Ok((Mask::parse(text)?, "mask".to_string())),
        (None, None) => Err(Error::Parse("give --preset or --mask".into())),
    }
}

fn probe_options(args: &ProbeArgs) -> Result<ProbeOptions, Error> {
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(Error::Parse(format!(
            "--tol must be positive, got {}",
            args.tol
        )));
    }
    Ok(ProbeOptions {
        max_iter: args.max_iter,
        convergence_tol: args.tol,
        ..ProbeOptions::default()
    })
}

fn write_target(path: Option<&Path>, content: &str, out: &mut dyn Write) -> std::io::Result<()> {
    match path {
        Some(p) => fs::write(p, content),
        None => out.write_all(content.as_bytes()),
    }
}

fn describe_probe(p: &ProbeReport) -> String {
    format!(
        "{} probe: {} (fitted ratio {}, {} differences{})",
        p.mode,
        p.verdict,
        p.fitted_ratio.map_or("n/a".into(), |r| format!("{r:.6}")),
        p.differences.len(),
        if p.overflow { ", overflow" } else { "" }
    )
}

pub(super) fn analyze(args: AnalyzeArgs, out: &mut dyn Write, _err: &mut dyn Write) -> CmdResult {
    let (mask, _) = load_mask(&args.source)?;
    let opts = AnalyzeOptions {
        jsr_depth: args.jsr_depth,
        probe: probe_options(&args.probe)?,
        nonnegative_levels: args.levels,
        ..AnalyzeOptions::default()
    };
    let verdict = analyze_mask(&mask, &opts);
    writeln!(out, "{}", verdict.to_json())?;
    Ok(match verdict.overall {
        Overall::Converges => EXIT_OK,
        Overall::Diverges => EXIT_DIVERGES,
        Overall::Undetermined => EXIT_UNDETERMINED,
    })
}

pub(super) fn cascade(args: CascadeArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let (mask, name) = load_mask(&args.source)?;
    let mode: Mode = args.mode.into();
    let opts = probe_options(&args.probe)?;
    let probe = convergence_probe_with(&mask, mode, &opts)?;
    writeln!(err, "{}", describe_probe(&probe))?;
    if probe.verdict == ProbeVerdict::Diverging && !args.force {
        writeln!(
            err,
            "refusing to write a diverging cascade; pass --force to override"
        )?;
        return Ok(EXIT_DIVERGES);
    }
    let frame = cascade_with(&mask, args.iters, mode, &opts.cascade)?;
    write_target(args.out.as_deref(), &frame.to_csv_string(), out)?;
    if let Some(svg) = &args.svg {
        let title = format!("{name} {mode} cascade, {} iterations", args.iters);
        fs::write(svg, frame_svg(&frame, &title))?;
    }
    Ok(EXIT_OK)
}

fn parse_coords(text: &str) -> Result<(usize, usize), Error> {
    let bad = || {
        Error::Parse(format!(
            "--coords expects two indices like 1,2, got '{text}'"
        ))
    };
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    let a = a.trim().parse().map_err(|_| bad())?;
    let b = b.trim().parse().map_err(|_| bad())?;
    Ok((a, b))
}

fn load_pair(args: &FractalArgs) -> Result<AffinePair, Box<dyn StdError>> {
    if let Some(path) = &args.pair {
        let text =
            fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        return Ok(parse_pair(&text)?);
    }
    let source = args.mask_pair.as_deref().unwrap_or_default();
    let mask = match presets::find(source) {
        Ok(p) => p.mask(),
        Err(_) => Mask::parse(source)?,
    };
    let pair = affine_pair_from_mask(&mask)?;
    if pair.dimension() == 0 {
        return Err(
            "the mask has a one-dimensional transition pair; its curve is a single point".into(),
        );
    }
    Ok(pair)
}

pub(super) fn fractal(args: FractalArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let pair = load_pair(&args)?;
    let coords = parse_coords(&args.coords)?;
    let opts = CurveOptions {
        jsr_depth: args.jsr_depth,
        force: args.force,
        ..CurveOptions::default()
    };
    let est = pair.jsr(args.jsr_depth)?;
    let holder = holder_exponent(&est);
    let fmt_exp = |x: Option<f64>| x.map_or("inf".to_string(), |v| format!("{v:.6}"));
    writeln!(
        err,
        "{}; holder exponent in [{}, {}]",
        describe_bracket(&est),
        fmt_exp(holder.lo),
        fmt_exp(holder.hi)
    )?;
    let curve = match sample_curve_with(&pair, args.depth, &opts) {
        Ok(c) => c,
        Err(e @ (Error::Precondition(_) | Error::NoContractiveFixedPoint(_))) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_DIVERGES);
        }
        Err(e) => return Err(e.into()),
    };
    let mut csv = Vec::new();
    curve.write_csv(&mut csv)?;
    write_target(args.out.as_deref(), &String::from_utf8(csv)?, out)?;
    if let Some(svg) = &args.svg {
        let title = format!("dyadic fractal curve, depth {}", args.depth);
        fs::write(svg, curve_svg(&curve, coords.0, coords.1, &title)?)?;
    }
    Ok(EXIT_OK)
}

pub(super) fn compare(args: CompareArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let (mask, name) = load_mask(&args.source)?;
    let opts = probe_options(&args.probe)?;
    fs::create_dir_all(&args.out_dir)?;
    writeln!(
        out,
        "{:<10} {:<13} {:>12} {:>14}  csv",
        "mode", "probe", "fitted_ratio", "last_diff"
    )?;
    for mode in [Mode::Dyadic, Mode::Classical] {
        let probe = match convergence_probe_with(&mask, mode, &opts) {
            Ok(p) => p,
            Err(e) => {
                writeln!(err, "{mode}: {e}")?;
                writeln!(out, "{:<10} {:<13}", mode.as_str(), "error")?;
                continue;
            }
        };
        let csv = if probe.verdict == ProbeVerdict::Diverging && !args.force {
            "skipped (diverging)".to_string()
        } else {
            match cascade_with(&mask, args.iters, mode, &opts.cascade) {
                Ok(frame) => {
                    let path = args.out_dir.join(format!("{name}_{mode}.csv"));
                    fs::write(&path, frame.to_csv_string())?;
                    path.display().to_string()
                }
                Err(e) => {
                    writeln!(err, "{mode}: {e}")?;
                    "error".to_string()
                }
            }
        };
        writeln!(
            out,
            "{:<10} {:<13} {:>12} {:>14}  {csv}",
            mode.as_str(),
            probe.verdict.to_string(),
            probe
                .fitted_ratio
                .map_or("n/a".into(), |r| format!("{r:.6}")),
            probe
                .differences
                .last()
                .map_or("n/a".into(), |&d| format!("{d:.6e}")),
        )?;
    }
    Ok(EXIT_OK)
}

pub(super) fn presets(out: &mut dyn Write) -> CmdResult {
    writeln!(
        out,
        "{:<5} {:<10} {:<10} coefficients",
        "name", "dyadic", "classical"
    )?;
    for p in &PRESETS {
        let coeffs: Vec<String> = p.coefficients.iter().map(|&c| format_value(c)).collect();
        writeln!(
            out,
            "{:<5} {:<10} {:<10} {}  # {}",
            p.name,
            p.dyadic.to_string(),
            p.classical.map_or("-".to_string(), |o| o.to_string()),
            coeffs.join(","),
            p.note
        )?;
    }
    Ok(EXIT_OK)
}
