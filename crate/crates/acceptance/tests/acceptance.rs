//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness and exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use dysub::cli::presets;
use dysub::criteria::{
    dyadic_sum_in_order, four_coefficient_criterion, nonnegative_criterion, IndexSet, RuleOutcome,
};
use dysub::fractal::{
    dyadic_modulus, empirical_holder, fixed_point, sample_curve, AffineOperator, AffinePair,
};
use dysub::linalg::{spectral_norm, Matrix, Vector};
use dysub::scheme::{
    apply_subdivision, cascade, convergence_probe_with, Mask, Mode, ProbeOptions, ProbeVerdict,
    Sequence,
};
use dysub::spectral::{
    holder_exponent, jsr_bounds, l1_contraction_check_seeded, product_samples,
    refinable_vector_samples, restrict_to_difference_subspace, transition_matrices,
};
use dysub::{dyadic_add, DyadicRational};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn preset(name: &str) -> Mask {
    presets::find(name).unwrap().mask()
}

fn random_dyadic(rng: &mut StdRng) -> DyadicRational {
    DyadicRational::new(rng.random_range(0..1u64 << 40), rng.random_range(0..=20)).unwrap()
}

fn dyadic_arithmetic() -> Outcome {
    let three = DyadicRational::from_integer(3).unwrap();
    let six = DyadicRational::from_integer(6).unwrap();
    let base = dyadic_add(three, six).unwrap() == DyadicRational::from_integer(5).unwrap();
    let mut rng = StdRng::seed_from_u64(1);
    let mut failures = 0;
    let trials = 100_000;
    for _ in 0..trials {
        let (x, y, z) = (
            random_dyadic(&mut rng),
            random_dyadic(&mut rng),
            random_dyadic(&mut rng),
        );
        let add = |a, b| dyadic_add(a, b).unwrap();
        let ok = add(x, x) == DyadicRational::ZERO
            && add(x, y) == add(y, x)
            && add(add(x, y), z) == add(x, add(y, z))
            && add(x, DyadicRational::ZERO) == x;
        failures += usize::from(!ok);
    }
    outcome(
        base && failures == 0,
        format!("3+6 -> 5: {base}; {failures} failures in {trials} random property checks"),
    )
}

fn transition_structure() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let t0_rows = [[0, 1, 2, 3], [2, 3, 0, 1], [4, 5, 6, 7], [6, 7, 4, 5]];
    let t1_rows = [[1, 0, 3, 2], [3, 2, 1, 0], [5, 4, 7, 6], [7, 6, 5, 4]];
    let mut pattern_failures = 0;
    for _ in 0..100 {
        let c: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
        let p = transition_matrices(&Mask::new(c.clone()).unwrap());
        for i in 0..4 {
            for j in 0..4 {
                if p.t0[(i, j)] != c[t0_rows[i][j]] || p.t1[(i, j)] != c[t1_rows[i][j]] {
                    pattern_failures += 1;
                }
            }
        }
    }
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=5u32);
        let len = 1usize << n;
        let mut c: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
        let even: f64 = c.iter().step_by(2).sum();
        let odd: f64 = c.iter().skip(1).step_by(2).sum();
        for (i, x) in c.iter_mut().enumerate() {
            *x /= if i % 2 == 0 { even } else { odd };
        }
        let p = transition_matrices(&Mask::new(c).unwrap());
        worst = worst.max(p.column_sum_deviation());
    }
    outcome(
        pattern_failures == 0 && worst <= 1e-12,
        format!("{pattern_failures} pattern mismatches; worst column-sum deviation {worst:e}"),
    )
}

fn four_coefficient_vs_jsr() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    let mut disagreements = 0;
    for _ in 0..500 {
        let c0: f64 = rng.random_range(-2.0..2.0);
        let c1: f64 = rng.random_range(-2.0..2.0);
        let mask = Mask::new(vec![c0, c1, 1.0 - c0, 1.0 - c1]).unwrap();
        let r = restrict_to_difference_subspace(&transition_matrices(&mask)).unwrap();
        let shape_ok = r.dimension() == 1 && r.b0[(0, 0)] == c0 - c1 && r.b1[(0, 0)] == c1 - c0;
        let est = r.jsr(12).unwrap();
        let rho = (c0 - c1).abs();
        let exact = est.lower == rho && est.upper == rho;
        let rule = four_coefficient_criterion(&mask).outcome;
        let expected = if est.upper < 1.0 {
            RuleOutcome::Converges
        } else if est.lower > 1.0 {
            RuleOutcome::Diverges
        } else {
            RuleOutcome::Undetermined
        };
        disagreements += usize::from(!(shape_ok && exact && rule == expected));
    }
    outcome(
        disagreements == 0,
        format!("{disagreements} disagreements in 500 pairs"),
    )
}

fn preset_probes() -> Outcome {
    let opts = ProbeOptions {
        max_iter: 14,
        convergence_tol: 1e-8,
        divergence_tol: 1e8,
        ..ProbeOptions::default()
    };
    let mut wrong = Vec::new();
    let mut check = |name: &str, mode: Mode, want: ProbeVerdict| {
        let r = convergence_probe_with(&preset(name), mode, &opts).unwrap();
        if r.verdict != want {
            wrong.push(format!(
                "{name} {mode}: {} (ratio {:?})",
                r.verdict, r.fitted_ratio
            ));
        }
    };
    for name in ["ex1", "ex2", "ex3", "ex4", "ex6", "ex7", "ex8", "ex9"] {
        check(name, Mode::Dyadic, ProbeVerdict::Converging);
    }
    check("ex5", Mode::Dyadic, ProbeVerdict::Diverging);
    check("ex6", Mode::Classical, ProbeVerdict::Diverging);
    check("ex5", Mode::Classical, ProbeVerdict::Diverging);
    let detail = if wrong.is_empty() {
        "all eleven probe verdicts as expected".to_string()
    } else {
        wrong.join("; ")
    };
    outcome(wrong.is_empty(), detail)
}

fn support_bounds() -> Outcome {
    let mask = preset("ex1");
    let mut notes = Vec::new();
    let mut pass = true;
    for (mode, bound) in [(Mode::Dyadic, 2usize), (Mode::Classical, 3)] {
        let frame = cascade(&mask, 10, mode).unwrap();
        let mut seq = Sequence::delta();
        for _ in 0..10 {
            seq = apply_subdivision(&mask, &seq, mode);
        }
        let outside = seq
            .entries()
            .iter()
            .skip(bound << 10)
            .filter(|&&v| v != 0.0)
            .count();
        let inside_match = (0..frame.len()).all(|k| frame.value_at(k) == seq.get(k));
        pass &= frame.support_bound() == bound && outside == 0 && inside_match;
        notes.push(format!(
            "{mode}: bound {} with {outside} non-zero values past {bound}",
            frame.support_bound()
        ));
    }
    outcome(pass, notes.join("; "))
}

fn oracle_equivalence() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for name in ["ex1", "ex2", "ex4", "ex8"] {
        let mask = preset(name);
        let frame = cascade(&mask, 10, Mode::Dyadic).unwrap();
        let samples = refinable_vector_samples(&mask, 10).unwrap();
        let diff = frame.sup_distance(&samples);
        // the cascade itself equals products applied to e_0
        let pair = transition_matrices(&mask);
        let mut e0 = Vector::zeros(pair.dimension());
        e0[0] = 1.0;
        let exact =
            dysub::spectral::frame_from_vectors(&product_samples(&pair, &e0, 10), 10).unwrap();
        let start_gap = frame.sup_distance(&exact);
        pass &= diff <= 1e-9;
        notes.push(format!("{name}: {diff:.3e} (from e0: {start_gap:.1e})"));
    }
    outcome(
        pass,
        format!("max |cascade - matrix samples| {}", notes.join(", ")),
    )
}

fn holder_consistency() -> Outcome {
    let mask = preset("ex6");
    let r = restrict_to_difference_subspace(&transition_matrices(&mask)).unwrap();
    let est = r.jsr(12).unwrap();
    let h = holder_exponent(&est);
    let bracket_ok = r.dimension() == 1 && est.lower == 0.5 && est.upper == 0.5;
    let alpha_ok = h.lo == Some(1.0) && h.hi == Some(1.0);
    let frame = cascade(&mask, 14, Mode::Dyadic).unwrap();
    let moduli: Vec<(u32, f64)> = (6..=12)
        .map(|n| (n, dyadic_modulus(&frame, n).unwrap()))
        .collect();
    let slope = empirical_holder(&moduli).unwrap().exponent;
    outcome(
        bracket_ok && alpha_ok && (0.9..=1.1).contains(&slope),
        format!(
            "bracket [{}, {}], alpha [{:?}, {:?}], empirical slope {slope:.4}",
            est.lower, est.upper, h.lo, h.hi
        ),
    )
}

fn nonnegative_example() -> Outcome {
    let i = [0usize, 6, 9, 15];
    let two_i: Vec<usize> = i.iter().map(|x| 2 * x).collect();
    let listed = dyadic_sum_in_order(&i, &two_i);
    let expected = vec![0, 6, 9, 15, 12, 10, 5, 3, 18, 20, 27, 29, 30, 24, 23, 17];
    let set = IndexSet::new(i).level(2);
    let absorbed = set.shifted(24) == set;
    let mut c = vec![0.0; 16];
    for k in i {
        c[k] = 0.5;
    }
    let report = nonnegative_criterion(&Mask::new(c).unwrap(), 6);
    outcome(
        listed == expected && absorbed && report.result.outcome == RuleOutcome::Diverges,
        format!(
            "sumset matches: {}; absorption: {absorbed}; verdict {}",
            listed == expected,
            report.result.outcome
        ),
    )
}

fn contraction() -> Outcome {
    let mut rng = StdRng::seed_from_u64(9);
    let mut violations = 0;
    let mut worst_margin = f64::NEG_INFINITY;
    for trial in 0..200 {
        let n = rng.random_range(1..=16usize);
        let row = rng.random_range(0..n);
        let mut m = Matrix::from_fn(n, n, |i, _| {
            if i == row {
                rng.random_range(0.05..1.0)
            } else if rng.random_bool(0.5) {
                rng.random::<f64>()
            } else {
                0.0
            }
        });
        for mut col in m.column_iter_mut() {
            let s = col.sum();
            col /= s;
        }
        let r = l1_contraction_check_seeded(&m, 100, trial).unwrap();
        violations += r.violations + usize::from(!r.applicable);
        worst_margin = worst_margin.max(r.worst_ratio - r.bound);
    }
    outcome(
        violations == 0,
        format!("{violations} violations; worst ratio - bound = {worst_margin:.3e}"),
    )
}

fn fractal_recursion() -> Outcome {
    let mut rng = StdRng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    let mut ends_ok = true;
    for _ in 0..20 {
        let mut op = || {
            let l = Matrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
            let l = &l * (rng.random_range(0.2..0.9) / spectral_norm(&l));
            let t = Vector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
            AffineOperator::new(l, t).unwrap()
        };
        let pair = AffinePair::new(op(), op()).unwrap();
        let curve = sample_curve(&pair, 12).unwrap();
        worst = worst.max(curve.recursion_residual());
        let v0 = fixed_point(&pair.a0).unwrap();
        ends_ok &= (&curve.points[0] - &v0).norm() <= 1e-10;
        ends_ok &= (&curve.points[1 << 11] - pair.a1.apply(&v0)).norm() <= 1e-10;
    }
    outcome(
        worst <= 1e-10 && ends_ok,
        format!("worst recursion residual {worst:.3e}; endpoints ok: {ends_ok}"),
    )
}

fn jsr_bracket() -> Outcome {
    let r = restrict_to_difference_subspace(&transition_matrices(&preset("ex8"))).unwrap();
    let est = jsr_bounds(&r.b0, &r.b1, 12).unwrap();
    let lower_mono = est.lower_by_depth.windows(2).all(|w| w[0] <= w[1]);
    let upper_mono = est.upper_by_depth.windows(2).all(|w| w[0] >= w[1]);
    let width = est.upper - est.lower;
    outcome(
        width < 0.05 && lower_mono && upper_mono,
        format!(
            "bracket [{}, {:.3e}], width {width:.3e}, monotone: {}",
            est.lower,
            est.upper,
            lower_mono && upper_mono
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("dyadic arithmetic", dyadic_arithmetic),
        ("transition matrices", transition_structure),
        ("four-coefficient rule vs jsr", four_coefficient_vs_jsr),
        ("preset probe outcomes", preset_probes),
        ("support bounds", support_bounds),
        ("cascade vs matrix products", oracle_equivalence),
        ("holder consistency", holder_consistency),
        ("nonnegative criterion", nonnegative_example),
        ("l1 contraction", contraction),
        ("fractal recursion", fractal_recursion),
        ("jsr bracket", jsr_bracket),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!(
            "criterion {:>2} {status} {name} [{:.2}s]: {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
