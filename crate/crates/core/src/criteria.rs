//! Mask-level convergence criteria and the aggregate analyzer.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scheme::{
    cascade_with, convergence_probe_with, Mask, Mode, ProbeOptions, ProbeReport, ProbeVerdict,
    SequenceFrame,
};
use crate::spectral::{
    holder_exponent, krylov_closure, restrict_to_difference_subspace, transition_matrices,
    HolderInterval, JsrEstimate, KrylovReport, DEFAULT_JSR_DEPTH,
};

/// Tolerance for the even/odd sum rule.
pub const SUM_RULE_TOL: f64 = 1e-9;
/// Largest window the index-set machinery will materialise.
const MAX_INDEX_WINDOW: usize = 1 << 22;
/// Index sets larger than this are left out of reports.
const MAX_REPORTED_SET: usize = 4096;

/// A finite set of non-negative integers closed under nothing in particular.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
#[serde(transparent)]
pub struct IndexSet {
    elements: Vec<usize>,
}

impl IndexSet {
    pub fn new<I: IntoIterator<Item = usize>>(items: I) -> Self {
        let mut elements: Vec<usize> = items.into_iter().collect();
        elements.sort_unstable();
        elements.dedup();
        IndexSet { elements }
    }

    /// `{i : c_i > 0}`.
    pub fn positive_indices(mask: &Mask) -> Self {
        IndexSet::new(
            mask.coefficients()
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0.0)
                .map(|(i, _)| i),
        )
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.elements.binary_search(&x).is_ok()
    }

    pub fn max(&self) -> Option<usize> {
        self.elements.last().copied()
    }

    /// `{x · 2^k}`.
    pub fn scaled(&self, k: u32) -> Self {
        IndexSet {
            elements: self.elements.iter().map(|&x| x << k).collect(),
        }
    }

    /// `{x ⊕ s}`.
    pub fn shifted(&self, s: usize) -> Self {
        IndexSet::new(self.elements.iter().map(|&x| x ^ s))
    }

    /// `A ⊕ B = {a ⊕ b}`.
    pub fn dyadic_sum(&self, other: &IndexSet) -> Self {
        let bound = self.max().unwrap_or(0).max(other.max().unwrap_or(0));
        let width = (bound + 1).next_power_of_two();
        let mut bits = vec![false; width];
        for &b in &other.elements {
            for &a in &self.elements {
                bits[a ^ b] = true;
            }
        }
        IndexSet {
            elements: bits
                .iter()
                .enumerate()
                .filter(|(_, &on)| on)
                .map(|(i, _)| i)
                .collect(),
        }
    }

    /// `I_K = I ⊕ 2I ⊕ … ⊕ 2^{K−1} I`.
    pub fn level(&self, k: u32) -> Self {
        let mut acc = IndexSet::new([0]);
        for s in 0..k {
            acc = acc.dyadic_sum(&self.scaled(s));
        }
        acc
    }

    /// gcd of the non-zero elements; 0 when there are none.
    pub fn gcd(&self) -> usize {
        self.elements
            .iter()
            .filter(|&&x| x != 0)
            .fold(0, |g, &x| num_integer::gcd(g, x))
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.elements.iter().map(|x| x.to_string()).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// `a ⊕ b` for every `b` in `right`, then every `a` in `left`, keeping the
/// first occurrence of each value.
pub fn dyadic_sum_in_order(left: &[usize], right: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    for &b in right {
        for &a in left {
            let x = a ^ b;
            if !out.contains(&x) {
                out.push(x);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleOutcome {
    NotApplicable,
    Converges,
    Diverges,
    Undetermined,
}

impl fmt::Display for RuleOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleOutcome::NotApplicable => "not_applicable",
            RuleOutcome::Converges => "converges",
            RuleOutcome::Diverges => "diverges",
            RuleOutcome::Undetermined => "undetermined",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleResult {
    pub rule: &'static str,
    pub applied: bool,
    pub outcome: RuleOutcome,
    pub detail: String,
}

impl RuleResult {
    fn not_applicable(rule: &'static str, detail: impl Into<String>) -> Self {
        RuleResult {
            rule,
            applied: false,
            outcome: RuleOutcome::NotApplicable,
            detail: detail.into(),
        }
    }

    fn applied(rule: &'static str, outcome: RuleOutcome, detail: impl Into<String>) -> Self {
        RuleResult {
            rule,
            applied: true,
            outcome,
            detail: detail.into(),
        }
    }
}

/// Even- and odd-indexed coefficients each sum to 1.
pub fn necessary_condition(mask: &Mask) -> bool {
    let (even, odd) = mask.parity_sums();
    (even - 1.0).abs() <= SUM_RULE_TOL && (odd - 1.0).abs() <= SUM_RULE_TOL
}

pub fn positive_mask_verdict(mask: &Mask) -> RuleResult {
    const NAME: &str = "positive_mask";
    if !mask.coefficients().iter().all(|&c| c > 0.0) {
        return RuleResult::not_applicable(NAME, "some coefficient is not strictly positive");
    }
    if !necessary_condition(mask) {
        return RuleResult::not_applicable(NAME, "sum rule fails");
    }
    RuleResult::applied(NAME, RuleOutcome::Converges, "all coefficients positive")
}

pub fn four_coefficient_criterion(mask: &Mask) -> RuleResult {
    const NAME: &str = "four_coefficient";
    if mask.len() != 4 {
        return RuleResult::not_applicable(NAME, format!("mask has {} coefficients", mask.len()));
    }
    if !necessary_condition(mask) {
        return RuleResult::not_applicable(NAME, "sum rule fails");
    }
    let gap = (mask.coefficient(0) - mask.coefficient(1)).abs();
    let outcome = if gap < 1.0 {
        RuleOutcome::Converges
    } else if gap > 1.0 {
        RuleOutcome::Diverges
    } else {
        RuleOutcome::Undetermined
    };
    RuleResult::applied(NAME, outcome, format!("|c0 - c1| = {gap}"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonnegativeReport {
    #[serde(flatten)]
    pub result: RuleResult,
    pub index_set: IndexSet,
    /// Level `K` at which the verdict was reached.
    pub level: Option<u32>,
    /// `I_1, I_2, …` up to the last level examined (omitted once large).
    pub level_sets: Vec<IndexSet>,
    /// Missing values in `[0, 2^{K+n−1})` at the deciding level.
    pub gaps: Vec<usize>,
}

/// Coverage test at level `K`: every residue `i < 2^K` admits a row
/// `j < N` with `i ⊕ l ⊕ 2^K j ∈ I_K` for all `l < N`.
///
/// This is equivalent to every product of `K` transition matrices having a
/// strictly positive row.
pub fn coverage_holds(level_set: &IndexSet, k: u32, dimension: usize) -> bool {
    (0..1usize << k).all(|i| {
        (0..dimension).any(|j| (0..dimension).all(|l| level_set.contains(i ^ l ^ (j << k))))
    })
}

fn gaps_below(set: &IndexSet, window: usize) -> Vec<usize> {
    (0..window).filter(|&x| !set.contains(x)).collect()
}

pub fn nonnegative_criterion(mask: &Mask, max_level: u32) -> NonnegativeReport {
    const NAME: &str = "nonnegative";
    let index_set = IndexSet::positive_indices(mask);
    let report = |result, level, level_sets, gaps| NonnegativeReport {
        result,
        index_set: index_set.clone(),
        level,
        level_sets,
        gaps,
    };
    if mask.coefficients().iter().any(|&c| c < 0.0) {
        return report(
            RuleResult::not_applicable(NAME, "negative coefficient"),
            None,
            Vec::new(),
            Vec::new(),
        );
    }
    if !necessary_condition(mask) {
        return report(
            RuleResult::not_applicable(NAME, "sum rule fails"),
            None,
            Vec::new(),
            Vec::new(),
        );
    }
    let n = mask.exponent();
    let dim = mask.dimension();
    let mut sets: Vec<IndexSet> = Vec::new();
    let mut reported: Vec<IndexSet> = Vec::new();
    let level_of = |sets: &mut Vec<IndexSet>, k: u32| -> IndexSet {
        while sets.len() < k as usize {
            let next = match sets.last() {
                None => index_set.clone(),
                Some(prev) => prev.dyadic_sum(&index_set.scaled(sets.len() as u32)),
            };
            sets.push(next);
        }
        sets[k as usize - 1].clone()
    };
    for k in 1..=max_level {
        let window = 1usize << (k + n - 1);
        if window.saturating_mul(4) > MAX_INDEX_WINDOW {
            break;
        }
        let current = level_of(&mut sets, k);
        if current.len() <= MAX_REPORTED_SET {
            reported.push(current.clone());
        }
        if coverage_holds(&current, k, dim) {
            return report(
                RuleResult::applied(
                    NAME,
                    RuleOutcome::Converges,
                    format!("every product of length {k} has a positive row"),
                ),
                Some(k),
                reported,
                Vec::new(),
            );
        }
        let gaps = gaps_below(&current, window);
        let stable = [k + 1, k + 2]
            .iter()
            .all(|&deeper| gaps_below(&level_of(&mut sets, deeper), window) == gaps);
        if stable && !gaps.is_empty() {
            return report(
                RuleResult::applied(
                    NAME,
                    RuleOutcome::Diverges,
                    format!(
                        "{} values below {window} stay missing through level {}",
                        gaps.len(),
                        k + 2
                    ),
                ),
                Some(k),
                reported,
                gaps,
            );
        }
    }
    report(
        RuleResult::applied(
            NAME,
            RuleOutcome::Undetermined,
            format!("no decision up to level {max_level}"),
        ),
        None,
        reported,
        Vec::new(),
    )
}

/// Advisory only: never feeds into the overall verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GcdAdvisory {
    pub label: &'static str,
    pub gcd: usize,
    pub conjectured_divergent: bool,
    pub note: String,
}

pub fn gcd_conjecture_flag(index_set: &IndexSet) -> GcdAdvisory {
    let gcd = index_set.gcd();
    let conjectured_divergent = gcd != 1;
    let mut note = format!(
        "conjecture: gcd(I) = {gcd}, {}",
        if conjectured_divergent {
            "divergence expected"
        } else {
            "convergence expected"
        }
    );
    let odd: Vec<usize> = index_set
        .elements()
        .iter()
        .copied()
        .filter(|x| x % 2 == 1)
        .collect();
    let even: Vec<usize> = index_set
        .elements()
        .iter()
        .copied()
        .filter(|x| x % 2 == 0)
        .collect();
    let lone_last_odd = odd.len() == 1 && index_set.max() == odd.first().copied();
    let lone_first_even = even.len() == 1 && index_set.elements().first() == even.first();
    if lone_last_odd || lone_first_even {
        note.push_str(
            "; I has a single odd element at the end or a single even element at the start, \
             which forces a jump at 0 on the line but is compatible with convergence here",
        );
    }
    GcdAdvisory {
        label: "conjecture",
        gcd,
        conjectured_divergent,
        note,
    }
}

/// Gram-matrix surrogate for linear independence of the shifts `φ(· ⊕ k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub shifts: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// `min / max`, zero for a vanishing frame.
    pub ratio: f64,
    pub stable: bool,
    pub heuristic: bool,
}

pub const STABILITY_THRESHOLD: f64 = 1e-6;

pub fn stability_probe(frame: &SequenceFrame, probe: &ProbeReport) -> Result<StabilityReport> {
    if probe.verdict != ProbeVerdict::Converging {
        return Err(Error::NonConvergent(format!(
            "probe verdict is {}, stability needs a converged frame",
            probe.verdict
        )));
    }
    if frame.mode() != Mode::Dyadic || !frame.support_bound().is_power_of_two() {
        return Err(Error::Precondition(
            "stability needs a dyadic frame whose support bound is a power of two".into(),
        ));
    }
    let r = frame.resolution();
    let shifts = frame.support_bound();
    let step = 0.5f64.powi(r as i32);
    let values = frame.values();
    let gram = Matrix::from_fn(shifts, shifts, |k, l| {
        let (sk, sl) = (k << r, l << r);
        (0..values.len())
            .map(|x| frame.value_at(x ^ sk) * frame.value_at(x ^ sl))
            .sum::<f64>()
            * step
    });
    let eig = gram.symmetric_eigenvalues();
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    Ok(StabilityReport {
        shifts,
        min_eigenvalue: min,
        max_eigenvalue: max,
        ratio,
        stable: max > 0.0 && min > STABILITY_THRESHOLD * max,
        heuristic: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Overall {
    Converges,
    Diverges,
    Undetermined,
}

impl fmt::Display for Overall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Overall::Converges => "converges",
            Overall::Diverges => "diverges",
            Overall::Undetermined => "undetermined",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub jsr_depth: u32,
    pub probe: ProbeOptions,
    pub nonnegative_levels: u32,
    /// Cascade depth for the stability heuristic.
    pub stability_iterations: u32,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            jsr_depth: DEFAULT_JSR_DEPTH,
            probe: ProbeOptions::default(),
            nonnegative_levels: 6,
            stability_iterations: 10,
        }
    }
}

/// Which halves of the "continuous and stable" hypothesis were checked and how.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypotheses {
    pub continuity: &'static str,
    pub stability: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub necessary_ok: bool,
    pub parity_sums: [f64; 2],
    pub rules: Vec<RuleResult>,
    pub jsr: Option<JsrEstimate>,
    pub holder: Option<HolderInterval>,
    pub krylov: Option<KrylovReport>,
    pub probe: Option<ProbeReport>,
    pub nonnegative: Option<NonnegativeReport>,
    pub gcd_advisory: Option<GcdAdvisory>,
    pub stability: Option<StabilityReport>,
    pub hypotheses: Hypotheses,
    pub overall: Overall,
    pub deciding_rule: Option<String>,
    pub warnings: Vec<String>,
    pub diagnostics: Vec<String>,
}

impl Verdict {
    pub fn rule(&self, name: &str) -> Option<&RuleResult> {
        self.rules.iter().find(|r| r.rule == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serialises")
    }
}

/// Runs every applicable criterion on the dyadic scheme and combines them.
pub fn analyze(mask: &Mask, opts: &AnalyzeOptions) -> Verdict {
    let (even, odd) = mask.parity_sums();
    let necessary_ok = necessary_condition(mask);
    let mut warnings = Vec::new();
    if mask.is_padded() {
        warnings.push(format!(
            "mask of length {} was zero-padded to {}; the index set I includes the padding positions as zeros",
            mask.original_len(),
            mask.len()
        ));
    }
    let mut verdict = Verdict {
        necessary_ok,
        parity_sums: [even, odd],
        rules: vec![RuleResult::applied(
            "necessary",
            if necessary_ok {
                RuleOutcome::Undetermined
            } else {
                RuleOutcome::Diverges
            },
            format!("even sum {even}, odd sum {odd}"),
        )],
        jsr: None,
        holder: None,
        krylov: None,
        probe: None,
        nonnegative: None,
        gcd_advisory: None,
        stability: None,
        hypotheses: Hypotheses {
            continuity: "not checked",
            stability: "not checked",
        },
        overall: Overall::Diverges,
        deciding_rule: Some("necessary".into()),
        warnings,
        diagnostics: Vec::new(),
    };
    if !necessary_ok {
        return verdict;
    }

    let four = four_coefficient_criterion(mask);
    let positive = positive_mask_verdict(mask);
    let mut nonneg = nonnegative_criterion(mask, opts.nonnegative_levels);
    if nonneg.result.applied {
        verdict.gcd_advisory = Some(gcd_conjecture_flag(&nonneg.index_set));
        verdict.warnings.push(
            "nonnegative rule reads the offsets l as ranging over the matrix dimension N".into(),
        );
    }

    let pair = transition_matrices(mask);
    let mut jsr_rule = RuleResult::not_applicable("jsr", "restriction unavailable");
    match restrict_to_difference_subspace(&pair) {
        Ok(restricted) => match restricted.jsr(opts.jsr_depth) {
            Ok(est) => {
                let holder = holder_exponent(&est);
                jsr_rule = RuleResult::applied(
                    "jsr",
                    if est.upper < 1.0 {
                        RuleOutcome::Converges
                    } else {
                        RuleOutcome::Undetermined
                    },
                    format!(
                        "radius on the difference subspace in [{}, {}]",
                        est.lower, est.upper
                    ),
                );
                verdict.hypotheses.continuity = if holder.continuity_certified {
                    "certified"
                } else {
                    "not certified"
                };
                match krylov_closure(&pair, &restricted, opts.jsr_depth) {
                    Ok(k) => verdict.krylov = Some(k),
                    Err(e) => verdict.diagnostics.push(format!("krylov closure: {e}")),
                }
                verdict.jsr = Some(est);
                verdict.holder = Some(holder);
            }
            Err(e) => verdict.diagnostics.push(format!("jsr: {e}")),
        },
        Err(e) => verdict.diagnostics.push(format!("restriction: {e}")),
    }

    match convergence_probe_with(mask, Mode::Dyadic, &opts.probe) {
        Ok(p) => verdict.probe = Some(p),
        Err(e) => verdict.diagnostics.push(format!("probe: {e}")),
    }
    let probe_verdict = verdict.probe.as_ref().map(|p| p.verdict);
    let probe_blew_up = verdict
        .probe
        .as_ref()
        .is_some_and(|p| p.overflow || p.exceeded_threshold);

    let disagrees = matches!(
        (nonneg.result.outcome, probe_verdict),
        (RuleOutcome::Converges, Some(ProbeVerdict::Diverging))
            | (RuleOutcome::Diverges, Some(ProbeVerdict::Converging))
    );
    if disagrees {
        verdict.diagnostics.push(format!(
            "nonnegative rule said {} but the probe says {}; rule downgraded",
            nonneg.result.outcome,
            probe_verdict.map_or("nothing".to_string(), |v| v.to_string())
        ));
        nonneg.result.outcome = RuleOutcome::Undetermined;
    }

    if let Some(probe) = verdict
        .probe
        .as_ref()
        .filter(|p| p.verdict == ProbeVerdict::Converging)
    {
        let cascade_opts = opts.probe.cascade.clone();
        match cascade_with(mask, opts.stability_iterations, Mode::Dyadic, &cascade_opts)
            .and_then(|frame| stability_probe(&frame, probe))
        {
            Ok(s) => {
                verdict.hypotheses.stability = "heuristic";
                verdict.stability = Some(s);
            }
            Err(e) => verdict.diagnostics.push(format!("stability: {e}")),
        }
    }

    verdict
        .rules
        .extend([four, positive, nonneg.result.clone(), jsr_rule]);
    verdict.nonnegative = Some(nonneg);

    let sufficient = ["four_coefficient", "positive_mask", "nonnegative", "jsr"];
    let converging = sufficient.iter().find(|name| {
        verdict
            .rule(name)
            .is_some_and(|r| r.outcome == RuleOutcome::Converges)
    });
    let diverging = ["four_coefficient", "nonnegative"]
        .iter()
        .find(|name| {
            verdict
                .rule(name)
                .is_some_and(|r| r.outcome == RuleOutcome::Diverges)
        })
        .map(|s| s.to_string())
        .or_else(|| probe_blew_up.then(|| "probe".to_string()));

    (verdict.overall, verdict.deciding_rule) = match (converging, diverging) {
        (Some(c), Some(d)) => {
            verdict
                .diagnostics
                .push(format!("{c} says converges, {d} says diverges"));
            (Overall::Undetermined, None)
        }
        (Some(c), None) => (Overall::Converges, Some(c.to_string())),
        (None, Some(d)) => (Overall::Diverges, Some(d)),
        (None, None) => (Overall::Undetermined, None),
    };
    verdict
}
