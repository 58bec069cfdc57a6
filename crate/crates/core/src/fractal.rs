//! Dyadic fractal curves generated by a pair of affine operators, and the
//! dyadic modulus of continuity of sampled functions.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::dyadic::DyadicRational;
use crate::error::{Error, Result};
use crate::linalg::{spectral_radius, Matrix, Vector};
use crate::scheme::{format_value, least_squares_slope, Mask, SequenceFrame};
use crate::spectral::{
    difference_coordinates, fixed_vector, jsr_bounds, restrict_to_difference_subspace,
    transition_matrices, JsrEstimate,
};

pub const DEFAULT_MODULUS_RESOLUTION: u32 = 14;
const PARALLEL_THRESHOLD: usize = 1 << 12;

/// `v ↦ L v + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineOperator {
    pub linear: Matrix,
    pub translation: Vector,
}

impl AffineOperator {
    pub fn new(linear: Matrix, translation: Vector) -> Result<Self> {
        if !linear.is_square() || linear.nrows() != translation.len() {
            return Err(Error::DimensionMismatch(format!(
                "linear part {:?} with translation of length {}",
                linear.shape(),
                translation.len()
            )));
        }
        Ok(AffineOperator {
            linear,
            translation,
        })
    }

    pub fn dimension(&self) -> usize {
        self.translation.len()
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        &self.linear * v + &self.translation
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffinePair {
    pub a0: AffineOperator,
    pub a1: AffineOperator,
}

impl AffinePair {
    pub fn new(a0: AffineOperator, a1: AffineOperator) -> Result<Self> {
        if a0.dimension() != a1.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "operators of dimension {} and {}",
                a0.dimension(),
                a1.dimension()
            )));
        }
        Ok(AffinePair { a0, a1 })
    }

    pub fn dimension(&self) -> usize {
        self.a0.dimension()
    }

    pub fn operator(&self, digit: u8) -> &AffineOperator {
        if digit == 0 {
            &self.a0
        } else {
            &self.a1
        }
    }

    /// Conjugates both operators by `x ↦ x + shift`.
    pub fn translated(&self, shift: &Vector) -> Self {
        let conj = |op: &AffineOperator| AffineOperator {
            linear: op.linear.clone(),
            translation: &op.translation + shift - &op.linear * shift,
        };
        AffinePair {
            a0: conj(&self.a0),
            a1: conj(&self.a1),
        }
    }

    pub fn jsr(&self, depth: u32) -> Result<JsrEstimate> {
        jsr_bounds(&self.a0.linear, &self.a1.linear, depth)
    }
}

/// The affine pair acting on difference coordinates of `v(t) − v(0)`, built
/// from a mask's transition matrices. Its curve is the refinable vector
/// function shifted to start at the origin.
pub fn affine_pair_from_mask(mask: &Mask) -> Result<AffinePair> {
    let pair = transition_matrices(mask);
    let restricted = restrict_to_difference_subspace(&pair)?;
    let v0 = fixed_vector(&pair)?;
    let op = |d: u8| {
        let t = pair.matrix(d);
        AffineOperator::new(
            restricted.matrix(d).clone(),
            difference_coordinates(&(t * &v0 - &v0)),
        )
    };
    AffinePair::new(op(0)?, op(1)?)
}

/// Solves `v = L v + t`.
pub fn fixed_point(op: &AffineOperator) -> Result<Vector> {
    let n = op.dimension();
    if n == 0 {
        return Ok(Vector::zeros(0));
    }
    let rho = spectral_radius(&op.linear);
    if rho >= 1.0 {
        return Err(Error::NoContractiveFixedPoint(format!(
            "spectral radius of the linear part is {rho}"
        )));
    }
    let system = Matrix::identity(n, n) - &op.linear;
    system
        .lu()
        .solve(&op.translation)
        .ok_or_else(|| Error::NoContractiveFixedPoint("I - L is singular".into()))
}

/// Curve values at `t = j·2^-k`, `j = 0 … 2^k − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSamples {
    pub depth: u32,
    pub points: Vec<Vector>,
    pub pair: AffinePair,
}

impl CurveSamples {
    pub fn dimension(&self) -> usize {
        self.pair.dimension()
    }

    pub fn t(&self, j: usize) -> Result<DyadicRational> {
        DyadicRational::new(j as u64, self.depth)
    }

    /// Largest `‖v(t) − A_{d₁} v(2t ⊖ d₁)‖` over all samples.
    pub fn recursion_residual(&self) -> f64 {
        if self.depth == 0 {
            return (&self.points[0] - self.pair.a0.apply(&self.points[0])).norm();
        }
        let half = 1usize << (self.depth - 1);
        self.points
            .iter()
            .enumerate()
            .map(|(idx, v)| {
                let digit = u8::from(idx >= half);
                let parent = (idx & (half - 1)) << 1;
                (v - self.pair.operator(digit).apply(&self.points[parent])).norm()
            })
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,x1,…,xd`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let header: Vec<String> = (1..=self.dimension()).map(|i| format!("x{i}")).collect();
        writeln!(out, "t,{}", header.join(","))?;
        for (j, p) in self.points.iter().enumerate() {
            let t = self
                .t(j)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
            let cells: Vec<String> = p.iter().map(|&x| format_value(x)).collect();
            writeln!(out, "{t},{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveOptions {
    /// Product length for the contraction check.
    pub jsr_depth: u32,
    /// Skip the check entirely.
    pub force: bool,
    pub max_points: usize,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions {
            jsr_depth: 8,
            force: false,
            max_points: 1 << 22,
        }
    }
}

pub fn sample_curve(pair: &AffinePair, depth: u32) -> Result<CurveSamples> {
    sample_curve_with(pair, depth, &CurveOptions::default())
}

/// `v(0.d₁…d_k) = A_{d₁}∘…∘A_{d_k}(v₀)` with `v₀` the fixed point of `A₀`.
pub fn sample_curve_with(
    pair: &AffinePair,
    depth: u32,
    opts: &CurveOptions,
) -> Result<CurveSamples> {
    let count = 1usize
        .checked_shl(depth)
        .filter(|&c| depth < 40 && c <= opts.max_points)
        .ok_or_else(|| Error::ResourceLimit(format!("depth {depth} is too large")))?;
    if !opts.force && pair.dimension() > 0 {
        let est = pair.jsr(opts.jsr_depth)?;
        if est.upper >= 1.0 {
            return Err(Error::Precondition(format!(
                "linear parts are not contractive: radius upper bound {} >= 1 at depth {}",
                est.upper, est.depth
            )));
        }
    }
    let v0 = fixed_point(&pair.a0)?;
    let mut level = vec![v0];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(level.len() * 2);
        for d in 0..2u8 {
            let op = pair.operator(d);
            if level.len() >= PARALLEL_THRESHOLD {
                next.par_extend(level.par_iter().map(|v| op.apply(v)));
            } else {
                next.extend(level.iter().map(|v| op.apply(v)));
            }
        }
        level = next;
    }
    debug_assert_eq!(level.len(), count);
    Ok(CurveSamples {
        depth,
        points: level,
        pair: pair.clone(),
    })
}

/// Anything sampled on a grid `k·2^-r` that can report the distance between
/// two of its samples.
pub trait SampledFunction: Sync {
    fn resolution(&self) -> u32;
    fn sample_count(&self) -> usize;
    fn sample_distance(&self, a: usize, b: usize) -> f64;
}

impl SampledFunction for SequenceFrame {
    fn resolution(&self) -> u32 {
        SequenceFrame::resolution(self)
    }

    fn sample_count(&self) -> usize {
        self.len()
    }

    fn sample_distance(&self, a: usize, b: usize) -> f64 {
        (self.value_at(a) - self.value_at(b)).abs()
    }
}

impl SampledFunction for CurveSamples {
    fn resolution(&self) -> u32 {
        self.depth
    }

    fn sample_count(&self) -> usize {
        self.points.len()
    }

    fn sample_distance(&self, a: usize, b: usize) -> f64 {
        let (x, y) = (&self.points[a], &self.points[b]);
        x.zip_fold(y, 0.0, |acc, p, q| acc + (p - q) * (p - q))
            .sqrt()
    }
}

/// `ω(f, 2^-n)`: the largest `|f(x ⊕ y) − f(x)|` over grid points `x` and
/// grid offsets `0 ≤ y < 2^-n`.
pub fn dyadic_modulus<F: SampledFunction + ?Sized>(f: &F, n: u32) -> Result<f64> {
    dyadic_modulus_capped(f, n, DEFAULT_MODULUS_RESOLUTION)
}

pub fn dyadic_modulus_capped<F: SampledFunction + ?Sized>(
    f: &F,
    n: u32,
    max_resolution: u32,
) -> Result<f64> {
    let r = f.resolution();
    if n > r {
        return Err(Error::ResolutionTooCoarse(format!(
            "scale 2^-{n} needs resolution >= {n}, samples have {r}"
        )));
    }
    if r > max_resolution {
        return Err(Error::ResourceLimit(format!(
            "resolution {r} exceeds the modulus cap {max_resolution}"
        )));
    }
    let offsets = 1usize << (r - n);
    let count = f.sample_count();
    let worst = (0..count)
        .into_par_iter()
        .map(|x| {
            (1..offsets)
                .map(|o| x ^ o)
                .filter(|&y| y < count)
                .map(|y| f.sample_distance(x, y))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// Slope of `−log₂ ω` against `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalHolder {
    /// `f64::INFINITY` when every modulus is zero.
    pub exponent: f64,
    pub locally_constant: bool,
    /// Scales that entered the regression.
    pub scales: Vec<u32>,
}

/// Regresses over the finest half (at least three) of the supplied scales.
pub fn empirical_holder(moduli: &[(u32, f64)]) -> Result<EmpiricalHolder> {
    if moduli.len() < 3 {
        return Err(Error::Precondition("need at least three scales".into()));
    }
    if moduli.iter().all(|&(_, w)| w == 0.0) {
        return Ok(EmpiricalHolder {
            exponent: f64::INFINITY,
            locally_constant: true,
            scales: Vec::new(),
        });
    }
    let mut sorted = moduli.to_vec();
    sorted.sort_by_key(|&(n, _)| n);
    let keep = 3.max(sorted.len().div_ceil(2));
    let finest = &sorted[sorted.len() - keep..];
    let points: Vec<(f64, f64)> = finest
        .iter()
        .filter(|&&(_, w)| w > 0.0 && w.is_finite())
        .map(|&(n, w)| (f64::from(n), -w.log2()))
        .collect();
    let slope = least_squares_slope(&points).ok_or_else(|| {
        Error::Precondition("fewer than two finest scales have a positive modulus".into())
    })?;
    Ok(EmpiricalHolder {
        exponent: slope,
        locally_constant: false,
        scales: finest.iter().map(|&(n, _)| n).collect(),
    })
}

/// Operator from `d` rows of `d + 1` numbers: linear part, then translation.
pub fn operator_from_rows(rows: &[Vec<f64>]) -> Result<AffineOperator> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d + 1) {
        return Err(Error::DimensionMismatch(format!(
            "each of the {d} rows needs {} numbers",
            d + 1
        )));
    }
    let linear = Matrix::from_fn(d, d, |i, j| rows[i][j]);
    let translation = Vector::from_fn(d, |i, _| rows[i][d]);
    AffineOperator::new(linear, translation)
}
