//! Transition matrices, their restriction to the difference subspace,
//! joint spectral radius bounds, Hölder exponents and matrix-product sampling
//! of refinable functions.

use std::io::{self, Write};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{l1_norm, null_space, spectral_norm, spectral_radius, Matrix, Vector};
use crate::scheme::{format_value, Mask, Mode, SequenceFrame};

/// Column sums of a transition matrix must match 1 this closely before the
/// difference subspace is treated as invariant.
pub const INVARIANCE_TOL: f64 = 1e-9;
/// Tolerance for column-stochastic input.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Singular-value cutoff used to detect the eigenvalue 1 of `T0`.
pub const EIGEN_TOL: f64 = 1e-9;
pub const DEFAULT_JSR_DEPTH: u32 = 12;
pub const MAX_JSR_DEPTH: u32 = 24;

/// `T0[i][j] = c_{2i ⊕ j}` and `T1[i][j] = c_{(2i+1) ⊕ j}` (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionPair {
    pub t0: Matrix,
    pub t1: Matrix,
    pub mask: Mask,
}

pub fn transition_matrices(mask: &Mask) -> TransitionPair {
    let n = mask.dimension();
    let build = |d: usize| Matrix::from_fn(n, n, |i, j| mask.coefficient((2 * i + d) ^ j));
    TransitionPair {
        t0: build(0),
        t1: build(1),
        mask: mask.clone(),
    }
}

impl TransitionPair {
    pub fn dimension(&self) -> usize {
        self.t0.nrows()
    }

    pub fn matrix(&self, digit: u8) -> &Matrix {
        if digit == 0 {
            &self.t0
        } else {
            &self.t1
        }
    }

    /// Largest deviation of any column sum from 1, over both matrices.
    pub fn column_sum_deviation(&self) -> f64 {
        [&self.t0, &self.t1]
            .iter()
            .flat_map(|m| {
                m.column_iter()
                    .map(|c| (c.sum() - 1.0).abs())
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }

    /// Row-major CSV, one block per matrix headed `# T0 N=<dim>`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (name, m) in [("T0", &self.t0), ("T1", &self.t1)] {
            writeln!(out, "# {name} N={}", m.nrows())?;
            for row in m.row_iter() {
                let cells: Vec<String> = row.iter().map(|&x| format_value(x)).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        Ok(())
    }
}

/// Linear parts of `T0`, `T1` on `X = {x : Σx = 0}` in the basis
/// `e_i − e_{i+1}`, `i = 0 … N−2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedPair {
    pub b0: Matrix,
    pub b1: Matrix,
}

impl RestrictedPair {
    pub const BASIS: &'static str = "e_i - e_(i+1), i = 0..N-2; coordinates are prefix sums";

    pub fn dimension(&self) -> usize {
        self.b0.nrows()
    }

    pub fn matrix(&self, digit: u8) -> &Matrix {
        if digit == 0 {
            &self.b0
        } else {
            &self.b1
        }
    }

    pub fn jsr(&self, depth: u32) -> Result<JsrEstimate> {
        jsr_bounds(&self.b0, &self.b1, depth)
    }
}

/// Coordinates of `x ∈ X` in the difference basis (the first `N−1` prefix sums).
pub fn difference_coordinates(x: &Vector) -> Vector {
    let n = x.len().saturating_sub(1);
    let mut acc = 0.0;
    Vector::from_fn(n, |k, _| {
        acc += x[k];
        acc
    })
}

/// Inverse of [`difference_coordinates`].
pub fn from_difference_coordinates(y: &Vector) -> Vector {
    let n = y.len() + 1;
    Vector::from_fn(n, |j, _| {
        let cur = if j < y.len() { y[j] } else { 0.0 };
        let prev = if j > 0 { y[j - 1] } else { 0.0 };
        cur - prev
    })
}

fn difference_embedding(n: usize) -> Matrix {
    Matrix::from_fn(n, n.saturating_sub(1), |i, j| {
        if i == j {
            1.0
        } else if i == j + 1 {
            -1.0
        } else {
            0.0
        }
    })
}

fn prefix_sum_matrix(n: usize) -> Matrix {
    Matrix::from_fn(
        n.saturating_sub(1),
        n,
        |k, j| if j <= k { 1.0 } else { 0.0 },
    )
}

pub fn restrict_to_difference_subspace(pair: &TransitionPair) -> Result<RestrictedPair> {
    let dev = pair.column_sum_deviation();
    if dev > INVARIANCE_TOL {
        let (even, odd) = pair.mask.parity_sums();
        return Err(Error::InvarianceViolation(format!(
            "even sum {even}, odd sum {odd} (column sums off by {dev:e})"
        )));
    }
    let n = pair.dimension();
    let e = difference_embedding(n);
    let c = prefix_sum_matrix(n);
    Ok(RestrictedPair {
        b0: &c * &pair.t0 * &e,
        b1: &c * &pair.t1 * &e,
    })
}

/// Bracket for the joint spectral radius of a pair of matrices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JsrEstimate {
    pub lower: f64,
    pub upper: f64,
    pub depth: u32,
    /// Digits `d₁ … d_r` of the product attaining the lower bound.
    #[serde(serialize_with = "serialize_digits")]
    pub witness: Vec<u8>,
    /// Running lower bound after each product length.
    #[serde(skip)]
    pub lower_by_depth: Vec<f64>,
    /// Running upper bound after each product length.
    #[serde(skip)]
    pub upper_by_depth: Vec<f64>,
}

fn serialize_digits<S: Serializer>(digits: &[u8], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&digits_to_string(digits))
}

pub fn digits_to_string(digits: &[u8]) -> String {
    digits.iter().map(|&d| char::from(b'0' + d)).collect()
}

impl JsrEstimate {
    fn zero(depth: u32) -> Self {
        JsrEstimate {
            lower: 0.0,
            upper: 0.0,
            depth,
            witness: Vec::new(),
            lower_by_depth: vec![0.0; depth as usize],
            upper_by_depth: vec![0.0; depth as usize],
        }
    }
}

struct LevelSearch<'a> {
    mats: [&'a Matrix; 2],
    level: usize,
    /// `max_norms[j]` = largest norm over products of length `j`.
    max_norms: &'a [f64],
    best_norm: f64,
    best_lower: f64,
    witness: Vec<u8>,
    prefix: Vec<u8>,
}

impl LevelSearch<'_> {
    fn visit(&mut self, product: &Matrix) {
        let k = self.prefix.len();
        let inv = 1.0 / self.level as f64;
        if k == self.level {
            self.best_norm = self.best_norm.max(spectral_norm(product));
            let rho = spectral_radius(product).powf(inv);
            if rho > self.best_lower
                && (self.best_lower <= 0.0 || rho > self.best_lower * (1.0 + 1e-12))
            {
                self.best_lower = rho;
                self.witness = self.prefix.clone();
            }
            return;
        }
        if k > 0 {
            let bound = spectral_norm(product) * self.max_norms[self.level - k];
            if bound <= self.best_norm && bound.powf(inv) <= self.best_lower {
                return;
            }
        }
        for d in 0..2u8 {
            let next = if k == 0 {
                self.mats[d as usize].clone()
            } else {
                product * self.mats[d as usize]
            };
            self.prefix.push(d);
            self.visit(&next);
            self.prefix.pop();
        }
    }
}

/// Brackets `ρ(A0, A1)` by exhaustive product search up to `max_depth`.
///
/// The lower bound is the largest `ρ(P)^{1/|P|}` seen, the upper bound the
/// smallest `max_{|P|=ℓ} ‖P‖₂^{1/ℓ}`. Subtrees whose norm bound cannot raise
/// either quantity at the current length are skipped. The search is
/// sequential, so ties resolve to the shortest, then lexicographically
/// smallest, digit string. An empty pair has radius 0.
pub fn jsr_bounds(a0: &Matrix, a1: &Matrix, max_depth: u32) -> Result<JsrEstimate> {
    if !a0.is_square() || !a1.is_square() || a0.shape() != a1.shape() {
        return Err(Error::DimensionMismatch(format!(
            "pair shapes {:?} and {:?}",
            a0.shape(),
            a1.shape()
        )));
    }
    if max_depth == 0 {
        return Err(Error::Precondition(
            "search depth must be at least 1".into(),
        ));
    }
    if max_depth > MAX_JSR_DEPTH {
        return Err(Error::ResourceLimit(format!(
            "search depth {max_depth} exceeds {MAX_JSR_DEPTH}"
        )));
    }
    if a0.is_empty() {
        return Ok(JsrEstimate::zero(max_depth));
    }

    let mut max_norms = vec![1.0];
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut witness = Vec::new();
    let mut lower_by_depth = Vec::new();
    let mut upper_by_depth = Vec::new();
    for level in 1..=max_depth as usize {
        let mut search = LevelSearch {
            mats: [a0, a1],
            level,
            max_norms: &max_norms,
            best_norm: 0.0,
            best_lower: lower,
            witness: Vec::new(),
            prefix: Vec::new(),
        };
        search.visit(&Matrix::identity(a0.nrows(), a0.ncols()));
        if search.best_lower > lower {
            lower = search.best_lower;
            witness = search.witness;
        }
        let norm = search.best_norm;
        max_norms.push(norm);
        // keep lower <= upper under rounding
        upper = upper.min(norm.powf(1.0 / level as f64)).max(lower);
        lower_by_depth.push(lower.max(0.0));
        upper_by_depth.push(upper);
    }
    Ok(JsrEstimate {
        lower: lower.max(0.0),
        upper,
        depth: max_depth,
        witness,
        lower_by_depth,
        upper_by_depth,
    })
}

/// Hölder exponent interval `[−log₂ upper, −log₂ lower]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderInterval {
    /// `None` when the upper bound is zero (exponent unbounded).
    pub lo: Option<f64>,
    /// `None` when the lower bound is zero.
    pub hi: Option<f64>,
    /// `upper < 1`, which certifies a continuous refinable function.
    pub continuity_certified: bool,
    /// The lower radius bound is zero, so no finite upper exponent is known.
    pub unbounded: bool,
}

pub fn holder_exponent(estimate: &JsrEstimate) -> HolderInterval {
    let exponent = |rho: f64| (rho > 0.0).then(|| -rho.log2());
    HolderInterval {
        lo: exponent(estimate.upper),
        hi: exponent(estimate.lower),
        continuity_certified: estimate.upper < 1.0,
        unbounded: estimate.lower <= 0.0,
    }
}

/// The eigenvector of `T0` for eigenvalue 1, normalised to coordinate sum 1.
pub fn fixed_vector(pair: &TransitionPair) -> Result<Vector> {
    let n = pair.dimension();
    let shifted = &pair.t0 - Matrix::identity(n, n);
    let basis = null_space(&shifted, EIGEN_TOL);
    match basis.as_slice() {
        [v] => {
            let sum = v.sum();
            if sum.abs() < EIGEN_TOL {
                return Err(Error::AmbiguousNormalization(
                    "fixed vector has coordinate sum 0".into(),
                ));
            }
            Ok(v / sum)
        }
        [] => Err(Error::AmbiguousNormalization(
            "1 is not an eigenvalue of T0".into(),
        )),
        more => Err(Error::AmbiguousNormalization(format!(
            "eigenspace for 1 has dimension {}",
            more.len()
        ))),
    }
}

/// `T_{d₁}⋯T_{d_k} · start` for every digit string of length `k`, indexed by
/// the integer `d₁…d_k` read in binary.
pub fn product_samples(pair: &TransitionPair, start: &Vector, depth: u32) -> Vec<Vector> {
    let mut level = vec![start.clone()];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(level.len() * 2);
        for d in 0..2u8 {
            let m = pair.matrix(d);
            next.extend(level.iter().map(|v| m * v));
        }
        level = next;
    }
    level
}

/// Unpacks vectors `v(t)` with `v_j(t) = φ(t ⊕ j)` into a frame of `φ` on `[0, N)`.
pub fn frame_from_vectors(samples: &[Vector], depth: u32) -> Result<SequenceFrame> {
    let n = samples.first().map_or(0, |v| v.len());
    let per_unit = samples.len();
    let mut values = vec![0.0; n * per_unit];
    for (m, v) in samples.iter().enumerate() {
        for j in 0..n {
            values[j * per_unit + m] = v[j];
        }
    }
    SequenceFrame::new(depth, n, Mode::Dyadic, values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingOptions {
    /// Product length used to certify continuity.
    pub jsr_depth: u32,
    /// Sample even when continuity is not certified.
    pub force: bool,
    pub max_cells: usize,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            jsr_depth: DEFAULT_JSR_DEPTH,
            force: false,
            max_cells: 1 << 22,
        }
    }
}

/// Samples `φ` on `[0, N)` at resolution `depth` through
/// `v(0.d₁…d_k) = T_{d₁}⋯T_{d_k} v(0)`.
pub fn refinable_vector_samples(mask: &Mask, depth: u32) -> Result<SequenceFrame> {
    refinable_vector_samples_with(mask, depth, &SamplingOptions::default())
}

pub fn refinable_vector_samples_with(
    mask: &Mask,
    depth: u32,
    opts: &SamplingOptions,
) -> Result<SequenceFrame> {
    let pair = transition_matrices(mask);
    let restricted = restrict_to_difference_subspace(&pair)?;
    if !opts.force {
        let est = restricted.jsr(opts.jsr_depth)?;
        if est.upper >= 1.0 {
            return Err(Error::ContinuityNotCertified(format!(
                "radius bracket [{}, {}] at depth {} does not fall below 1",
                est.lower, est.upper, est.depth
            )));
        }
    }
    let cells = 1usize
        .checked_shl(depth)
        .filter(|_| depth < 40)
        .and_then(|p| p.checked_mul(pair.dimension().max(1)))
        .filter(|&c| c <= opts.max_cells)
        .ok_or_else(|| Error::ResourceLimit(format!("depth {depth} is too large")))?;
    debug_assert!(cells > 0);
    let v0 = fixed_vector(&pair)?;
    frame_from_vectors(&product_samples(&pair, &v0, depth), depth)
}

/// Span grown from `(T1 − T0)·v(0)` under the restricted pair, with the
/// radius bracket on it. A heuristic for the minimal invariant subspace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KrylovReport {
    pub dimension: usize,
    pub ambient_dimension: usize,
    pub jsr: JsrEstimate,
    pub heuristic: bool,
}

pub fn krylov_closure(
    pair: &TransitionPair,
    restricted: &RestrictedPair,
    depth: u32,
) -> Result<KrylovReport> {
    let ambient = restricted.dimension();
    let v0 = fixed_vector(pair)?;
    let seed = difference_coordinates(&(&pair.t1 * &v0 - &pair.t0 * &v0));
    let mut basis: Vec<Vector> = Vec::new();
    let mut pending = vec![seed];
    while let Some(w) = pending.pop() {
        if basis.len() == ambient {
            break;
        }
        let scale = w.norm();
        if scale == 0.0 {
            continue;
        }
        let mut r = w;
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dot(&r);
                r -= b * proj;
            }
        }
        let norm = r.norm();
        if norm <= 1e-10 * scale.max(1.0) {
            continue;
        }
        let q = r / norm;
        pending.push(&restricted.b1 * &q);
        pending.push(&restricted.b0 * &q);
        basis.push(q);
    }
    let dim = basis.len();
    let jsr = if dim == 0 {
        JsrEstimate::zero(depth)
    } else {
        let q = Matrix::from_columns(&basis);
        let qt = q.transpose();
        jsr_bounds(
            &(&qt * &restricted.b0 * &q),
            &(&qt * &restricted.b1 * &q),
            depth,
        )?
    };
    Ok(KrylovReport {
        dimension: dim,
        ambient_dimension: ambient,
        jsr,
        heuristic: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    /// False when no row is strictly positive; nothing is claimed then.
    pub applicable: bool,
    pub positive_row: Option<usize>,
    /// Smallest entry `m` of the chosen positive row.
    pub min_entry: f64,
    /// `1 − m`.
    pub bound: f64,
    /// Largest observed `‖Ax−Ay‖₁ / ‖x−y‖₁`.
    pub worst_ratio: f64,
    pub trials: usize,
    pub violations: usize,
}

/// Checks `‖Ax − Ay‖₁ ≤ (1−m)‖x − y‖₁` on random simplex pairs.
pub fn l1_contraction_check(matrix: &Matrix, trials: usize) -> Result<ContractionReport> {
    l1_contraction_check_seeded(matrix, trials, 0)
}

pub fn l1_contraction_check_seeded(
    matrix: &Matrix,
    trials: usize,
    seed: u64,
) -> Result<ContractionReport> {
    check_column_stochastic(matrix)?;
    let best_row = matrix
        .row_iter()
        .enumerate()
        .map(|(i, row)| (i, row.min()))
        .filter(|&(_, m)| m > 0.0)
        .fold(None, |acc: Option<(usize, f64)>, cur| match acc {
            Some(a) if a.1 >= cur.1 => Some(a),
            _ => Some(cur),
        });
    let Some((row, m)) = best_row else {
        return Ok(ContractionReport {
            applicable: false,
            positive_row: None,
            min_entry: 0.0,
            bound: 1.0,
            worst_ratio: 0.0,
            trials: 0,
            violations: 0,
        });
    };
    let mut rng = StdRng::seed_from_u64(seed);
    let n = matrix.ncols();
    let bound = 1.0 - m;
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..trials {
        let x = random_simplex_point(&mut rng, n);
        let y = random_simplex_point(&mut rng, n);
        let before = l1_norm(&(&x - &y));
        let after = l1_norm(&(matrix * (&x - &y)));
        if after > bound * before + 1e-12 {
            violations += 1;
        }
        if before > 0.0 {
            worst = worst.max(after / before);
        }
    }
    Ok(ContractionReport {
        applicable: true,
        positive_row: Some(row),
        min_entry: m,
        bound,
        worst_ratio: worst,
        trials,
        violations,
    })
}

pub fn check_column_stochastic(matrix: &Matrix) -> Result<()> {
    if !matrix.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "shape {:?}",
            matrix.shape()
        )));
    }
    if let Some(neg) = matrix.iter().find(|&&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::NotStochastic(format!("entry {neg}")));
    }
    for (j, col) in matrix.column_iter().enumerate() {
        let dev = (col.sum() - 1.0).abs();
        if dev > STOCHASTIC_TOL {
            return Err(Error::NotStochastic(format!(
                "column {j} sums to 1 + {dev:e}"
            )));
        }
    }
    Ok(())
}

/// Uniform point on the probability simplex.
pub fn random_simplex_point<R: Rng>(rng: &mut R, n: usize) -> Vector {
    let v = Vector::from_fn(n, |_, _| -(1.0 - rng.random::<f64>()).ln());
    let s = v.sum();
    if s > 0.0 {
        v / s
    } else {
        Vector::from_element(n, 1.0 / n as f64)
    }
}

/// Summary line used by the command-line tools.
pub fn describe_bracket(est: &JsrEstimate) -> String {
    format!(
        "jsr in [{:.6}, {:.6}] at depth {} (witness {})",
        est.lower,
        est.upper,
        est.depth,
        digits_to_string(&est.witness)
    )
}
