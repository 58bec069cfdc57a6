//! Masks, the subdivision operator in dyadic and classical modes, cascade
//! iteration and the numerical convergence probe.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::Serialize;

use crate::dyadic::DyadicRational;
use crate::error::{Error, Result};

/// Which addition the subdivision operator uses for `α - 2β`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Digitwise binary addition on the half-line (`α ⊖ 2β` is XOR).
    Dyadic,
    /// Ordinary subtraction on the line.
    Classical,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Dyadic => "dyadic",
            Mode::Classical => "classical",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dyadic" => Ok(Mode::Dyadic),
            "classical" => Ok(Mode::Classical),
            other => Err(Error::Parse(format!("unknown mode '{other}'"))),
        }
    }
}

/// A finite mask `c_0 … c_{L-1}` with `L = 2^n`, `n ≥ 1`.
///
/// Shorter inputs of other lengths are zero-padded to the next power of two;
/// the original coefficients keep their indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    coefficients: Vec<f64>,
    original_len: usize,
}

impl Mask {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidMask("mask is empty".into()));
        }
        if let Some(bad) = coefficients.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidMask(format!(
                "coefficient {bad} is not finite"
            )));
        }
        let original_len = coefficients.len();
        let len = original_len.next_power_of_two().max(2);
        if len > 1 << 20 {
            return Err(Error::InvalidMask(format!(
                "{original_len} coefficients is too many"
            )));
        }
        let mut coefficients = coefficients;
        coefficients.resize(len, 0.0);
        Ok(Mask {
            coefficients,
            original_len,
        })
    }

    /// Parses a comma-separated list of decimals; `p/q` fractions are accepted.
    pub fn parse(text: &str) -> Result<Self> {
        let coefficients = text
            .split(',')
            .map(|tok| parse_number(tok.trim()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(coefficients)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Coefficient `c_i`, zero outside the mask.
    pub fn coefficient(&self, i: usize) -> f64 {
        self.coefficients.get(i).copied().unwrap_or(0.0)
    }

    /// Padded length `L = 2^n`.
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The exponent `n` with `L = 2^n`.
    pub fn exponent(&self) -> u32 {
        self.coefficients.len().trailing_zeros()
    }

    /// Transition matrix dimension `N = 2^(n-1)`.
    pub fn dimension(&self) -> usize {
        self.coefficients.len() / 2
    }

    pub fn original_len(&self) -> usize {
        self.original_len
    }

    pub fn is_padded(&self) -> bool {
        self.original_len != self.coefficients.len()
    }

    /// Sums of the even-indexed and of the odd-indexed coefficients.
    pub fn parity_sums(&self) -> (f64, f64) {
        let even = self.coefficients.iter().step_by(2).sum();
        let odd = self.coefficients.iter().skip(1).step_by(2).sum();
        (even, odd)
    }
}

fn parse_number(tok: &str) -> Result<f64> {
    let bad = || Error::Parse(format!("'{tok}' is not a number"));
    let value = match tok.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            p / q
        }
        None => tok.parse().map_err(|_| bad())?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

/// A finitely supported sequence on the non-negative integers; entries past
/// the end are zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sequence {
    entries: Vec<f64>,
}

impl Sequence {
    pub fn new(entries: Vec<f64>) -> Self {
        Sequence { entries }
    }

    /// The δ-sequence `(1, 0, 0, …)`.
    pub fn delta() -> Self {
        Sequence { entries: vec![1.0] }
    }

    /// `δ(· ⊖ k)`, identical in both modes since `k ≥ 0`.
    pub fn shifted_delta(k: usize) -> Self {
        let mut entries = vec![0.0; k + 1];
        entries[k] = 1.0;
        Sequence { entries }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> f64 {
        self.entries.get(i).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Index of the last non-zero entry plus one.
    pub fn support_len(&self) -> usize {
        self.entries
            .iter()
            .rposition(|&x| x != 0.0)
            .map_or(0, |i| i + 1)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Sequence::new(self.entries.iter().map(|x| x * factor).collect())
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, factor: f64, other: &Sequence) -> Self {
        let len = self.len().max(other.len());
        Sequence::new(
            (0..len)
                .map(|i| self.get(i) + factor * other.get(i))
                .collect(),
        )
    }

    /// Largest absolute entrywise difference.
    pub fn sup_distance(&self, other: &Sequence) -> f64 {
        let len = self.len().max(other.len());
        (0..len)
            .map(|i| (self.get(i) - other.get(i)).abs())
            .fold(0.0, f64::max)
    }
}

/// One step of the scheme: `(Sa)(α) = Σ_β c_{α⊖2β} a_β`.
pub fn apply_subdivision(mask: &Mask, a: &Sequence, mode: Mode) -> Sequence {
    let c = mask.coefficients();
    let len_a = a.support_len();
    if len_a == 0 {
        return Sequence::default();
    }
    let out_len = match mode {
        // j < L and 2β < 2·len_a; XOR stays below the next power of two.
        Mode::Dyadic => c.len().max(2 * len_a).next_power_of_two(),
        Mode::Classical => c.len() + 2 * (len_a - 1),
    };
    let mut out = vec![0.0; out_len];
    for (beta, &a_beta) in a.entries()[..len_a].iter().enumerate() {
        if a_beta == 0.0 {
            continue;
        }
        let base = 2 * beta;
        match mode {
            Mode::Dyadic => {
                for (j, &cj) in c.iter().enumerate() {
                    out[j ^ base] += cj * a_beta;
                }
            }
            Mode::Classical => {
                for (j, &cj) in c.iter().enumerate() {
                    out[j + base] += cj * a_beta;
                }
            }
        }
    }
    Sequence::new(out)
}

/// Samples of a function on the grid `{k·2^-r : 0 ≤ k < M·2^r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFrame {
    resolution: u32,
    support_bound: usize,
    mode: Mode,
    values: Vec<f64>,
}

impl SequenceFrame {
    pub fn new(
        resolution: u32,
        support_bound: usize,
        mode: Mode,
        values: Vec<f64>,
    ) -> Result<Self> {
        if support_bound == 0 {
            return Err(Error::Precondition(
                "support bound must be at least 1".into(),
            ));
        }
        let expected = frame_len(support_bound, resolution).ok_or_else(|| {
            Error::ResourceLimit(format!("frame at resolution {resolution} is too large"))
        })?;
        if values.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "frame needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(SequenceFrame {
            resolution,
            support_bound,
            mode,
            values,
        })
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn support_bound(&self) -> usize {
        self.support_bound
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at grid index `k`; zero outside `[0, M)`.
    pub fn value_at(&self, k: usize) -> f64 {
        self.values.get(k).copied().unwrap_or(0.0)
    }

    /// The grid point `k·2^-r`.
    pub fn point(&self, k: usize) -> Result<DyadicRational> {
        DyadicRational::new(k as u64, self.resolution)
    }

    pub fn sup_distance(&self, other: &SequenceFrame) -> f64 {
        let len = self.len().max(other.len());
        (0..len)
            .map(|k| (self.value_at(k) - other.value_at(k)).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,value`, rows in increasing `t`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,value")?;
        for (k, &v) in self.values.iter().enumerate() {
            let t = DyadicRational::new(k as u64, self.resolution)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
            writeln!(out, "{},{}", t, format_value(v))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

/// Deterministic number formatting for the text outputs.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1e-6 && v.abs() < 1e15 {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn frame_len(support_bound: usize, resolution: u32) -> Option<usize> {
    1usize
        .checked_shl(resolution)
        .filter(|_| resolution < usize::BITS - 1)
        .and_then(|p| p.checked_mul(support_bound))
}

/// Support bound `M` of the cascade frame: `N` (dyadic) or `L-1` (classical).
pub fn support_bound(mask: &Mask, mode: Mode) -> usize {
    match mode {
        Mode::Dyadic => mask.dimension(),
        Mode::Classical => (mask.len() - 1).max(1),
    }
}

/// Limits for the cascade and the probe.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeOptions {
    /// Largest number of grid cells any level may occupy.
    pub max_cells: usize,
}

impl Default for CascadeOptions {
    fn default() -> Self {
        CascadeOptions { max_cells: 1 << 22 }
    }
}

fn level_cells(mask: &Mask, mode: Mode, level: u32, opts: &CascadeOptions) -> Result<usize> {
    frame_len(support_bound(mask, mode), level)
        .filter(|&cells| cells <= opts.max_cells)
        .ok_or_else(|| {
            Error::ResourceLimit(format!(
                "{level} iterations exceed the configured limit of {} cells",
                opts.max_cells
            ))
        })
}

fn into_frame(mask: &Mask, mode: Mode, level: u32, seq: Sequence, cells: usize) -> SequenceFrame {
    let mut values = seq.entries;
    debug_assert!(values.iter().skip(cells).all(|&v| v == 0.0));
    values.resize(cells, 0.0);
    SequenceFrame {
        resolution: level,
        support_bound: support_bound(mask, mode),
        mode,
        values,
    }
}

/// The frame of `S^n δ` at resolution `n`.
pub fn cascade(mask: &Mask, iterations: u32, mode: Mode) -> Result<SequenceFrame> {
    cascade_with(mask, iterations, mode, &CascadeOptions::default())
}

pub fn cascade_with(
    mask: &Mask,
    iterations: u32,
    mode: Mode,
    opts: &CascadeOptions,
) -> Result<SequenceFrame> {
    let cells = level_cells(mask, mode, iterations, opts)?;
    let mut seq = Sequence::delta();
    for _ in 0..iterations {
        seq = apply_subdivision(mask, &seq, mode);
    }
    Ok(into_frame(mask, mode, iterations, seq, cells))
}

/// `Σ_k a_k φ_n(x ⊖ k)` assembled from the cascade frame `φ_n`.
pub fn limit_function(
    mask: &Mask,
    a: &Sequence,
    iterations: u32,
    mode: Mode,
) -> Result<SequenceFrame> {
    let probe = ProbeOptions {
        max_iter: 16,
        ..ProbeOptions::default()
    };
    limit_function_with(mask, a, iterations, mode, &probe)
}

pub fn limit_function_with(
    mask: &Mask,
    a: &Sequence,
    iterations: u32,
    mode: Mode,
    probe_opts: &ProbeOptions,
) -> Result<SequenceFrame> {
    let report = convergence_probe_with(mask, mode, probe_opts)?;
    if report.verdict == ProbeVerdict::Diverging {
        return Err(Error::NonConvergent(format!(
            "{mode} probe diverges (fitted ratio {:?})",
            report.fitted_ratio
        )));
    }
    let phi = cascade_with(mask, iterations, mode, &probe_opts.cascade)?;
    let m = phi.support_bound();
    let len_a = a.support_len().max(1);
    let support = match mode {
        Mode::Dyadic => m.max(len_a).next_power_of_two(),
        Mode::Classical => m + len_a - 1,
    };
    let cells = frame_len(support, iterations)
        .filter(|&c| c <= probe_opts.cascade.max_cells)
        .ok_or_else(|| Error::ResourceLimit("limit function frame is too large".into()))?;
    let mut values = vec![0.0; cells];
    for (k, &ak) in a.entries().iter().enumerate() {
        if ak == 0.0 {
            continue;
        }
        let shift = k << iterations;
        for (x, &v) in phi.values().iter().enumerate() {
            let idx = match mode {
                Mode::Dyadic => x ^ shift,
                Mode::Classical => x + shift,
            };
            values[idx] += ak * v;
        }
    }
    SequenceFrame::new(iterations, support, mode, values)
}

/// Stopping rule and thresholds of [`convergence_probe_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOptions {
    pub max_iter: u32,
    /// Convergence is declared once a difference falls below this.
    pub convergence_tol: f64,
    /// Divergence is declared once a difference exceeds this.
    pub divergence_tol: f64,
    /// Fitted ratios within `1 ± margin` are inconclusive.
    pub ratio_margin: f64,
    pub cascade: CascadeOptions,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            max_iter: 24,
            convergence_tol: 1e-8,
            divergence_tol: 1e8,
            ratio_margin: 0.02,
            cascade: CascadeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeVerdict {
    Converging,
    Diverging,
    Inconclusive,
}

impl fmt::Display for ProbeVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProbeVerdict::Converging => "converging",
            ProbeVerdict::Diverging => "diverging",
            ProbeVerdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub mode: Mode,
    /// `d_n` for `n = 1, 2, …`.
    pub differences: Vec<f64>,
    /// Successive quotients `d_{n+1} / d_n` (zero when `d_n = 0`).
    pub ratios: Vec<f64>,
    /// `exp` of the least-squares slope of `ln d_n` over the fit window.
    pub fitted_ratio: Option<f64>,
    pub verdict: ProbeVerdict,
    /// Non-finite values appeared.
    pub overflow: bool,
    /// A difference exceeded the divergence threshold.
    pub exceeded_threshold: bool,
    /// Iteration count at which the fitted geometric decay would reach the
    /// convergence tolerance.
    pub projected_iterations: Option<f64>,
    /// The cell limit stopped the probe before `max_iter`.
    pub truncated: bool,
}

/// Numerical convergence test on the δ-sequence.
///
/// `d_n = max_k max_{e∈{0,1}} |(S^{n+1}δ)(2k+e) − (S^nδ)(k)|` compares each
/// level-`n` sample with both of its children, so it sees jumps that appear
/// between coincident grid points as well as drift at them.
pub fn convergence_probe(mask: &Mask, max_iter: u32, mode: Mode) -> Result<ProbeReport> {
    let opts = ProbeOptions {
        max_iter,
        ..ProbeOptions::default()
    };
    convergence_probe_with(mask, mode, &opts)
}

pub fn convergence_probe_with(mask: &Mask, mode: Mode, opts: &ProbeOptions) -> Result<ProbeReport> {
    if opts.max_iter < 2 {
        return Err(Error::Precondition("probe needs max_iter >= 2".into()));
    }
    let mut differences = Vec::new();
    let mut overflow = false;
    let mut exceeded_threshold = false;
    let mut truncated = false;
    let mut below_tol = false;

    let mut current = apply_subdivision(mask, &Sequence::delta(), mode);
    for n in 1..opts.max_iter {
        if level_cells(mask, mode, n + 1, &opts.cascade).is_err() {
            truncated = true;
            break;
        }
        let next = apply_subdivision(mask, &current, mode);
        let cells = frame_len(support_bound(mask, mode), n).unwrap_or(usize::MAX);
        let mut d = 0.0f64;
        for k in 0..cells {
            let parent = current.get(k);
            for child in [next.get(2 * k), next.get(2 * k + 1)] {
                let diff = (child - parent).abs();
                if diff.is_nan() {
                    d = f64::NAN;
                } else if !d.is_nan() {
                    d = d.max(diff);
                }
            }
        }
        differences.push(d);
        if !d.is_finite() {
            overflow = true;
            break;
        }
        if d > opts.divergence_tol {
            exceeded_threshold = true;
            break;
        }
        if d < opts.convergence_tol {
            below_tol = true;
            break;
        }
        current = next;
    }

    let ratios = differences
        .windows(2)
        .map(|w| if w[0] == 0.0 { 0.0 } else { w[1] / w[0] })
        .collect();
    let window = 3.max(opts.max_iter as usize / 2);
    let fitted_ratio = fit_ratio(&differences, window);

    let verdict = if overflow || exceeded_threshold {
        ProbeVerdict::Diverging
    } else if below_tol {
        ProbeVerdict::Converging
    } else {
        match fitted_ratio {
            Some(r) if r < 1.0 - opts.ratio_margin => ProbeVerdict::Converging,
            Some(r) if r > 1.0 + opts.ratio_margin => ProbeVerdict::Diverging,
            _ => ProbeVerdict::Inconclusive,
        }
    };
    let projected_iterations = match (fitted_ratio, differences.last()) {
        (Some(r), Some(&last)) if r > 0.0 && r < 1.0 && last > 0.0 => {
            let steps = (opts.convergence_tol / last).ln() / r.ln();
            Some(differences.len() as f64 + steps.max(0.0))
        }
        (_, Some(&last)) if last < opts.convergence_tol => Some(differences.len() as f64),
        _ => None,
    };

    Ok(ProbeReport {
        mode,
        differences,
        ratios,
        fitted_ratio,
        verdict,
        overflow,
        exceeded_threshold,
        projected_iterations,
        truncated,
    })
}

/// Geometric rate fitted to the last `window` differences.
fn fit_ratio(differences: &[f64], window: usize) -> Option<f64> {
    let last = *differences.last()?;
    if last == 0.0 {
        return Some(0.0);
    }
    let start = differences.len().saturating_sub(window);
    let points: Vec<(f64, f64)> = differences[start..]
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > 0.0 && d.is_finite())
        .map(|(i, &d)| ((start + i) as f64, d.ln()))
        .collect();
    least_squares_slope(&points).map(f64::exp)
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(c: &[f64]) -> Mask {
        Mask::new(c.to_vec()).unwrap()
    }

    #[test]
    fn padding_keeps_coefficients() {
        let m = mask(&[0.5, 0.5, 0.5]);
        assert_eq!(m.coefficients(), &[0.5, 0.5, 0.5, 0.0]);
        assert!(m.is_padded());
        assert_eq!((m.len(), m.exponent(), m.dimension()), (4, 2, 2));
        let single = mask(&[1.0]);
        assert_eq!(single.coefficients(), &[1.0, 0.0]);
        assert!(Mask::new(vec![]).is_err());
        assert!(Mask::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn parse_masks() {
        let m = Mask::parse("1/4, 0.75,3/4 ,0.25").unwrap();
        assert_eq!(m.coefficients(), &[0.25, 0.75, 0.75, 0.25]);
        assert!(Mask::parse("1,,2").is_err());
        assert!(Mask::parse("1,x").is_err());
        assert!(Mask::parse("1/0,1").is_err());
    }

    #[test]
    fn subdivision_of_delta_is_the_mask() {
        let m = mask(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]);
        for mode in [Mode::Dyadic, Mode::Classical] {
            let s = apply_subdivision(&m, &Sequence::delta(), mode);
            assert_eq!(&s.entries()[..8], m.coefficients());
        }
    }

    #[test]
    fn shifted_delta_dyadic() {
        let s = apply_subdivision(
            &mask(&[1.0, 1.0]),
            &Sequence::shifted_delta(1),
            Mode::Dyadic,
        );
        assert_eq!(s.entries(), &[0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn zero_mask_gives_zero() {
        let a = Sequence::new(vec![1.0, -2.0, 3.5]);
        for mode in [Mode::Dyadic, Mode::Classical] {
            let s = apply_subdivision(&mask(&[0.0; 4]), &a, mode);
            assert!(s.entries().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn cascade_base_cases() {
        let m = mask(&[0.3, 0.1, 0.7, 0.9]);
        let f0 = cascade(&m, 0, Mode::Dyadic).unwrap();
        assert_eq!(f0.values(), &[1.0, 0.0]);
        assert_eq!(f0.resolution(), 0);
        let f1 = cascade(&m, 1, Mode::Dyadic).unwrap();
        assert_eq!(f1.values(), m.coefficients());
        assert_eq!(f1.point(3).unwrap().to_f64(), 1.5);
        let c = cascade(&m, 3, Mode::Classical).unwrap();
        assert_eq!(c.support_bound(), 3);
        assert_eq!(c.len(), 24);
    }

    #[test]
    fn cascade_depth_limit() {
        let opts = CascadeOptions { max_cells: 64 };
        let m = mask(&[0.25, 0.75, 0.75, 0.25]);
        assert!(cascade_with(&m, 5, Mode::Dyadic, &opts).is_ok());
        assert!(matches!(
            cascade_with(&m, 6, Mode::Dyadic, &opts),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn indicator_mask_probe_is_exact() {
        let r = convergence_probe(&mask(&[1.0, 1.0]), 24, Mode::Dyadic).unwrap();
        assert_eq!(r.verdict, ProbeVerdict::Converging);
        assert!(r.differences.iter().all(|&d| d == 0.0));
        let f = cascade(&mask(&[1.0, 1.0]), 5, Mode::Dyadic).unwrap();
        assert!(f.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn probe_four_coefficient_rate() {
        let r = convergence_probe(&mask(&[0.4, -0.1, 0.6, 1.1]), 14, Mode::Dyadic).unwrap();
        assert_eq!(r.verdict, ProbeVerdict::Converging);
        let ratio = r.fitted_ratio.unwrap();
        assert!((ratio - 0.5).abs() < 1e-9, "ratio {ratio}");
        assert!(r.projected_iterations.unwrap() > 14.0);
    }

    #[test]
    fn probe_divergent() {
        let r = convergence_probe(&mask(&[2.6, 0.7, -1.6, 0.3]), 14, Mode::Dyadic).unwrap();
        assert_eq!(r.verdict, ProbeVerdict::Diverging);
        assert!(r.fitted_ratio.unwrap() > 1.5);
        let r = convergence_probe(&mask(&[4.0, -2.0, -3.0, 3.0]), 24, Mode::Dyadic).unwrap();
        assert!(r.exceeded_threshold);
        assert!(!r.overflow);
    }

    #[test]
    fn probe_flags_non_finite_values() {
        let r = convergence_probe(&mask(&[1e300, 1e300, 0.0, 0.0]), 10, Mode::Dyadic).unwrap();
        assert_eq!(r.verdict, ProbeVerdict::Diverging);
        assert!(r.overflow || r.exceeded_threshold);
        let r = convergence_probe(&mask(&[1e200, -1e200, 1e200, 1e200]), 10, Mode::Dyadic).unwrap();
        assert!(r.overflow);
    }

    #[test]
    fn probe_rejects_short_runs() {
        assert!(convergence_probe(&mask(&[1.0, 1.0]), 1, Mode::Dyadic).is_err());
    }

    #[test]
    fn probe_sees_jumps_between_coincident_points() {
        // even children repeat their parent exactly, odd children keep jumping by 1/4
        let mut c = vec![0.0; 16];
        for i in [0, 6, 9, 15] {
            c[i] = 0.5;
        }
        let r = convergence_probe(&Mask::new(c).unwrap(), 14, Mode::Dyadic).unwrap();
        assert_eq!(r.verdict, ProbeVerdict::Inconclusive);
        assert!(r.differences[2..].iter().all(|&d| (d - 0.25).abs() < 1e-15));
    }

    #[test]
    fn limit_function_of_delta_is_cascade() {
        let m = mask(&[0.25, 0.75, 0.75, 0.25]);
        let phi = cascade(&m, 6, Mode::Dyadic).unwrap();
        let f = limit_function(&m, &Sequence::delta(), 6, Mode::Dyadic).unwrap();
        assert_eq!(f, phi);
        let g = limit_function(&m, &Sequence::new(vec![2.0]), 6, Mode::Dyadic).unwrap();
        for (x, y) in g.values().iter().zip(phi.values()) {
            assert_eq!(*x, 2.0 * y);
        }
    }

    #[test]
    fn limit_function_refuses_divergent_scheme() {
        let m = mask(&[2.6, 0.7, -1.6, 0.3]);
        assert!(matches!(
            limit_function(&m, &Sequence::delta(), 4, Mode::Dyadic),
            Err(Error::NonConvergent(_))
        ));
    }

    #[test]
    fn csv_layout() {
        let f = cascade(&mask(&[1.0, 1.0]), 2, Mode::Dyadic).unwrap();
        assert_eq!(f.to_csv_string(), "t,value\n0,1\n0.25,1\n0.5,1\n0.75,1\n");
    }

    #[test]
    fn value_formatting() {
        assert_eq!(format_value(-0.0), "0");
        assert_eq!(format_value(0.125), "0.125");
        assert_eq!(format_value(1e-20), "1e-20");
        assert_eq!(format_value(-3.0), "-3");
    }
}
