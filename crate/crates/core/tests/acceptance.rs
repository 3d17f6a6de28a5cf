//! Acceptance run: one line per criterion, non-zero exit on any failure.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use holonomy_core::bundle::{
    canonical_amplitude, gauge_algebra_basis, holonomy, horizontal_lift, horizontal_vector_at, metric_g_total,
    project, split, transported_frame,
};
use holonomy_core::curves::{concatenate, reverse};
use holonomy_core::dynamics::{
    evolve, qubit_axis, qubit_hamiltonian, qubit_reference, qubit_run, speed_limit, split_hamiltonian, uncertainty,
    QubitRun,
};
use holonomy_core::invariants::{
    check_isoholonomic, eigenphases, pure_ihb, speeds, wilson_loop, SLACK_TOL,
};
use holonomy_core::linalg::{diag_real, frobenius, propagator_step, DEFAULT_GAP_TOL, I};
use holonomy_core::random;
use holonomy_core::spectra::spectral_decompose;
use holonomy_core::synthesis::{synthesize, verify_saturation, DEFAULT_SAMPLES};
use holonomy_core::{
    Amplitude, CMat, DegeneracySpectrum, EigenprojectorBasis, GaugeElement, HamiltonianSchedule, OperatorCurve,
    SpectralBound, C64,
};
use rand::Rng;

type Check = std::result::Result<String, String>;

const OMEGA: f64 = 2.0 * PI;
const P0: f64 = 0.7;
const QUBIT_N3: [f64; 3] = [0.2, 0.6, 0.9];
const QUBIT_SAMPLES: usize = 2001;

fn angle_between(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

struct Outcome {
    label: String,
    pass: bool,
    detail: String,
}

fn run(label: &str, budget: Option<Duration>, f: impl FnOnce() -> Check) -> Outcome {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let (mut pass, mut detail) = match result {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if let Some(b) = budget {
        if elapsed > b {
            pass = false;
            detail = format!("{detail}; over budget {b:?}");
        }
    }
    Outcome { label: label.into(), pass, detail: format!("{detail} [{:.3}s]", elapsed.as_secs_f64()) }
}

fn qubit_phase_error(r: &QubitRun, n3: f64) -> std::result::Result<f64, String> {
    let phases = eigenphases(&r.holonomy).map_err(fail)?;
    let expected = [PI * (1.0 + n3), PI * (1.0 - n3)];
    Ok(phases
        .blocks()
        .iter()
        .zip(expected)
        .map(|(b, e)| angle_between(b[0], e))
        .fold(0.0, f64::max))
}

fn criterion_1() -> std::result::Result<(String, Vec<(f64, QubitRun)>), String> {
    let mut runs = Vec::new();
    let mut worst = (0.0f64, 0.0f64);
    for n3 in QUBIT_N3 {
        let r = qubit_run(qubit_axis(n3), OMEGA, P0, QUBIT_SAMPLES).map_err(fail)?;
        let err = qubit_phase_error(&r, n3)?;
        let w = wilson_loop(&r.holonomy);
        let w_ref = C64::from_polar(1.0, PI * (1.0 + n3)) + C64::from_polar(1.0, PI * (1.0 - n3));
        let w_err = (w - w_ref).norm();
        ensure(err <= 1e-5, || format!("n3 = {n3}: phase error {err:.3e}"))?;
        ensure(w_err <= 1e-5, || format!("n3 = {n3}: Wilson loop error {w_err:.3e}"))?;
        worst = (worst.0.max(err), worst.1.max(w_err));
        runs.push((n3, r));
    }
    Ok((format!("max phase error {:.2e}, max Wilson loop error {:.2e}", worst.0, worst.1), runs))
}

fn criterion_2(runs: &[(f64, QubitRun)]) -> Check {
    let mut worst = 0.0f64;
    for (n3, r) in runs {
        let err = (r.report.length - PI * (1.0 - n3 * n3).sqrt()).abs();
        ensure(err <= 1e-4, || format!("n3 = {n3}: |L - iHB| = {err:.3e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("max |L - pi sqrt(1 - n3^2)| {worst:.2e}"))
}

fn criterion_3() -> Check {
    let mut worst = 0.0f64;
    for n3 in [0.0, 0.2, 0.3, 0.6, 0.9] {
        let r = qubit_run(qubit_axis(n3), OMEGA, P0, QUBIT_SAMPLES).map_err(fail)?;
        let p1 = 1.0 - P0;
        let closed = (2.0 * PI / OMEGA) * ((1.0 - n3 * n3) / (1.0 - n3 * n3 * (P0 - p1).powi(2))).sqrt();
        let reference = qubit_reference(qubit_axis(n3), OMEGA, P0).map_err(fail)?;
        let err = (r.report.bound - closed).abs();
        ensure(err <= 1e-6, || format!("n3 = {n3}: bound {} vs closed form {closed} ({err:.3e})", r.report.bound))?;
        ensure((reference.bound - closed).abs() <= 1e-12, || format!("n3 = {n3}: reference bound disagrees"))?;
        ensure(reference.period - reference.bound >= 0.0, || format!("n3 = {n3}: closed-form margin negative"))?;
        ensure(r.report.margin >= -SLACK_TOL, || format!("n3 = {n3}: margin {:.3e}", r.report.margin))?;
        if n3 == 0.0 {
            ensure(r.report.margin.abs() <= 1e-6, || format!("n3 = 0: margin {:.3e} not zero", r.report.margin))?;
        } else {
            ensure(r.report.margin > 1e-6, || format!("n3 = {n3}: margin {:.3e} should be positive", r.report.margin))?;
        }
        worst = worst.max(err);
    }
    Ok(format!("max bound error {worst:.2e}; margin vanishes only at n3 = 0"))
}

fn criterion_4() -> Check {
    let rho = spectral_decompose(&diag_real(&[1.0, 0.0]), DEFAULT_GAP_TOL).map_err(fail)?;
    let h = qubit_hamiltonian(qubit_axis(0.0), OMEGA);
    let tau = 2.0 * PI / OMEGA;
    let sched = HamiltonianSchedule::constant(h, tau, QUBIT_SAMPLES).map_err(fail)?;
    let ev = evolve(&rho, &sched).map_err(fail)?;
    let w0 = canonical_amplitude(&rho, &EigenprojectorBasis::standard(rho.m.clone())).map_err(fail)?;
    let report = speed_limit(&ev.states, &sched, &w0).map_err(fail)?;
    let gap = (tau * report.delta_e - pure_ihb(PI).map_err(fail)?).abs();
    ensure(gap <= 1e-5, || format!("|tau dE - pure_ihb(pi)| = {gap:.3e}"))?;
    Ok(format!("|tau dE - pure_ihb(pi)| {gap:.2e}, numeric iHB {:.10}", report.ihb))
}

fn criterion_5() -> Check {
    let configs: [(&[f64], &[usize]); 3] = [(&[1.0], &[1]), (&[0.7, 0.3], &[1, 1]), (&[0.5, 0.25], &[1, 2])];
    let mut rng = random::rng(5);
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for trial in 0..50 {
        let (p, m) = configs[trial % configs.len()];
        let r: usize = m.iter().sum();
        let n = 2 * r;
        let mut values = Vec::new();
        for (pj, &mj) in p.iter().zip(m) {
            values.extend(std::iter::repeat_n(*pj, mj));
        }
        values.resize(n, 0.0);
        let rho = spectral_decompose(&random::state_with_spectrum(&mut rng, &values), DEFAULT_GAP_TOL).map_err(fail)?;
        let basis = EigenprojectorBasis::standard(DegeneracySpectrum::new(m.to_vec()).map_err(fail)?);
        let w = canonical_amplitude(&rho, &basis).map_err(fail)?;
        let target = GaugeElement::new(random::block_unitary(&mut rng, m), basis).map_err(fail)?;
        let tau = rng.random_range(0.5..2.0);
        let plan = synthesize(&rho, &w, &target, tau, n, DEFAULT_SAMPLES).map_err(|e| format!("trial {trial}: {e}"))?;
        let report = verify_saturation(&plan).map_err(|e| format!("trial {trial}: {e}"))?;
        worst = (
            worst.0.max(report.holonomy_error),
            worst.1.max(report.length_error),
            worst.2.max(report.max_h_in),
        );
    }
    Ok(format!(
        "50 targets saturate; max holonomy error {:.2e}, max length error {:.2e}, max H_in {:.2e}",
        worst.0, worst.1, worst.2
    ))
}

/// Closed loop `V_t D_t V_t†` with `V_t = exp(−2πi t K1) exp(−i a sin(2πt) K2) U0`,
/// `K1` having integer eigenvalues, and `D_t` diagonal with block values
/// `p + ε s(t) d`, `s(0) = s(1) = 0`.
struct RandomLoop {
    curve: OperatorCurve,
    amplitude: Amplitude,
    min_p: Vec<f64>,
}

fn random_loop<R: Rng>(
    rng: &mut R,
    p: &[f64],
    m: &[usize],
    n: usize,
    samples: usize,
    u0: Option<&CMat>,
) -> RandomLoop {
    let q = random::unitary(rng, n);
    let ints: Vec<f64> = (0..n).map(|_| rng.random_range(-2i32..=2) as f64).collect();
    let k1 = &q * diag_real(&ints) * q.adjoint();
    let k2 = random::hermitian(rng, n);
    let u0 = u0.cloned().unwrap_or_else(|| random::unitary(rng, n));
    let a = rng.random_range(0.3..1.0);
    let b = rng.random_range(-1.0..1.0);

    let l = p.len();
    let weights: Vec<f64> = m.iter().map(|&k| k as f64).collect();
    let mut d: Vec<f64> = (0..l).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mean = d.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>() / weights.iter().sum::<f64>();
    d.iter_mut().for_each(|x| *x -= mean);
    let mut gaps: Vec<f64> = p.windows(2).map(|w| w[0] - w[1]).collect();
    gaps.push(p[l - 1]);
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = d.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-12);
    let eps = 0.2 * min_gap / scale;

    let spectrum_at = |t: f64| -> Vec<f64> {
        let s = eps * ((2.0 * PI * t).sin() + b * (4.0 * PI * t).sin()) / (1.0 + b.abs());
        p.iter().zip(&d).map(|(pj, dj)| pj + s * dj).collect()
    };
    let diag_at = |t: f64| -> CMat {
        let mut v = Vec::new();
        for (pj, &mj) in spectrum_at(t).iter().zip(m) {
            v.extend(std::iter::repeat_n(*pj, mj));
        }
        v.resize(n, 0.0);
        diag_real(&v)
    };
    let curve = OperatorCurve::from_fn(1.0, samples, |t| {
        let v = propagator_step(&k1, 2.0 * PI * t).unwrap() * propagator_step(&k2, a * (2.0 * PI * t).sin()).unwrap()
            * &u0;
        &v * diag_at(t) * v.adjoint()
    })
    .unwrap();
    let first = curve.first().clone();
    // `ρ_1` and `ρ_0` agree up to rounding in `exp(−2πi K1)`
    let mut samples_vec = curve.into_samples();
    *samples_vec.last_mut().unwrap() = first;
    let curve = OperatorCurve::new(1.0, samples_vec).unwrap();

    let rho = spectral_decompose(curve.first(), DEFAULT_GAP_TOL).unwrap();
    let amplitude = canonical_amplitude(&rho, &EigenprojectorBasis::standard(rho.m.clone())).unwrap();
    let min_p = (0..l).map(|j| p[j] - eps * d[j].abs()).collect();
    RandomLoop { curve, amplitude, min_p }
}

/// Eigenvectors of `ρ` in descending order, kernel last.
fn full_frame(rho: &holonomy_core::DensityOperator) -> CMat {
    let support = rho.support_frame();
    let n = rho.dim();
    CMat::from_fn(n, n, |i, j| if j < support.ncols() { support[(i, j)] } else { rho.kernel[(i, j - support.ncols())] })
}

const LOOP_CONFIGS: [(&[f64], &[usize], usize); 7] = [
    (&[0.7, 0.3], &[1, 1], 2),
    (&[0.7, 0.3], &[1, 1], 3),
    (&[0.5, 0.3, 0.2], &[1, 1, 1], 3),
    (&[0.4, 0.3], &[1, 2], 3),
    (&[0.6, 0.2], &[1, 2], 4),
    (&[0.3, 0.2], &[2, 2], 4),
    (&[0.4, 0.3, 0.2, 0.1], &[1, 1, 1, 1], 4),
];

fn loops(seed: u64, count: usize, samples: usize) -> Vec<RandomLoop> {
    let mut rng = random::rng(seed);
    (0..count)
        .map(|i| {
            let (p, m, n) = LOOP_CONFIGS[i % LOOP_CONFIGS.len()];
            random_loop(&mut rng, p, m, n, samples, None)
        })
        .collect()
}

fn prop_gauge_covariance() -> Check {
    let mut rng = random::rng(61);
    let mut worst = 0.0f64;
    for l in loops(601, 14, 1001) {
        let g = holonomy(&l.curve, &l.amplitude).map_err(fail)?;
        let basis = l.amplitude.basis().clone();
        let u = GaugeElement::new(random::block_unitary(&mut rng, basis.degeneracy().as_slice()), basis).map_err(fail)?;
        let gu = holonomy(&l.curve, &l.amplitude.gauge(&u)).map_err(fail)?;
        let err = gu.distance(&u.inverse().compose(&g).compose(&u));
        ensure(err <= 1e-8, || format!("covariance error {err:.3e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("max {worst:.2e}"))
}

fn prop_composition() -> Check {
    let mut worst = 0.0f64;
    let mut rng = random::rng(62);
    for (i, l) in loops(602, 14, 1001).into_iter().enumerate() {
        let (p, m, n) = LOOP_CONFIGS[i % LOOP_CONFIGS.len()];
        let u0 = spectral_decompose(l.curve.first(), DEFAULT_GAP_TOL).map_err(fail)?;
        let second = random_loop(&mut rng, p, m, n, 1001, Some(&full_frame(&u0)));
        let gap = frobenius(&(second.curve.first() - l.curve.first()));
        ensure(gap <= 1e-12, || format!("base points differ by {gap:.3e}"))?;
        let g1 = holonomy(&l.curve, &l.amplitude).map_err(fail)?;
        let g2 = holonomy(&second.curve, &l.amplitude).map_err(fail)?;
        let g12 = holonomy(&concatenate(&l.curve, &second.curve).map_err(fail)?, &l.amplitude).map_err(fail)?;
        let err = g12.distance(&g2.compose(&g1));
        ensure(err <= 1e-7, || format!("composition error {err:.3e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("max {worst:.2e}"))
}

fn prop_reversal() -> Check {
    let mut worst = 0.0f64;
    for l in loops(603, 14, 1001) {
        let g = holonomy(&l.curve, &l.amplitude).map_err(fail)?;
        let gr = holonomy(&reverse(&l.curve), &l.amplitude).map_err(fail)?;
        let err = gr.distance(&g.inverse());
        ensure(err <= 1e-7, || format!("reversal error {err:.3e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("max {worst:.2e}"))
}

fn prop_auxiliary_independence() -> Check {
    let mut rng = random::rng(64);
    let mut worst = (0.0f64, 0.0f64);
    for l in loops(604, 14, 801) {
        let basis = l.amplitude.basis().clone();
        let v = random::unitary(&mut rng, basis.dim());
        let basis2 = basis.pulled_back(&v).map_err(fail)?;
        let w2 = Amplitude::new(l.amplitude.matrix() * &v, basis2).map_err(fail)?;
        let g = holonomy(&l.curve, &l.amplitude).map_err(fail)?;
        let g2 = holonomy(&l.curve, &w2).map_err(fail)?;
        let err = g2.distance(&g.pulled_back(&v).map_err(fail)?);
        ensure(err <= 1e-9, || format!("holonomy conjugation error {err:.3e}"))?;

        let n = l.curve.shape().0;
        let rho = spectral_decompose(l.curve.first(), DEFAULT_GAP_TOL).map_err(fail)?;
        let h1 = random::hermitian(&mut rng, n);
        let h2 = random::hermitian(&mut rng, n);
        let rd1 = (&h1 * &rho.matrix - &rho.matrix * &h1) * -I;
        let rd2 = (&h2 * &rho.matrix - &rho.matrix * &h2) * -I;
        let tol = 1e-9;
        let g_a = metric_g_total(
            &horizontal_vector_at(&l.amplitude, &rd1, tol).map_err(fail)?,
            &horizontal_vector_at(&l.amplitude, &rd2, tol).map_err(fail)?,
        );
        let g_b = metric_g_total(
            &horizontal_vector_at(&w2, &rd1, tol).map_err(fail)?,
            &horizontal_vector_at(&w2, &rd2, tol).map_err(fail)?,
        );
        let merr = (g_a - g_b).abs();
        ensure(merr <= 1e-9, || format!("metric disagreement {merr:.3e}"))?;
        worst = (worst.0.max(err), worst.1.max(merr));
    }
    Ok(format!("max holonomy {:.2e}, max metric {:.2e}", worst.0, worst.1))
}

fn prop_lift_frame_round_trip() -> Check {
    let mut worst = 0.0f64;
    for l in loops(605, 14, 801) {
        let lift = horizontal_lift(&l.curve, &l.amplitude).map_err(fail)?;
        let start = project(&l.amplitude);
        let frames = transported_frame(&l.curve, &start.frames, DEFAULT_GAP_TOL).map_err(fail)?;
        let basis = l.amplitude.basis();
        for (k, (w, sample)) in lift.amplitudes.iter().zip(l.curve.samples()).enumerate() {
            let p = &lift.spectra[k];
            // frames to lift
            let mut assembled = CMat::zeros(w.nrows(), w.ncols());
            for (j, f) in frames[k].iter().enumerate() {
                assembled += f * basis.block(j).adjoint() * C64::new(p[j].sqrt(), 0.0);
            }
            // lift to frames
            let mut frame_err = 0.0f64;
            for (j, f) in frames[k].iter().enumerate() {
                let back = (w * basis.block(j)).unscale(p[j].sqrt());
                frame_err = frame_err.max(frobenius(&(back - f)));
            }
            let proj_err = frobenius(&(w * w.adjoint() - sample));
            let err = frobenius(&(assembled - w)).max(frame_err).max(proj_err);
            ensure(err <= 1e-8, || format!("sample {k}: round-trip error {err:.3e}"))?;
            worst = worst.max(err);
        }
    }
    Ok(format!("max {worst:.2e}"))
}

fn prop_orthogonality() -> Check {
    let mut rng = random::rng(66);
    let mut worst = 0.0f64;
    for (p, m, n) in LOOP_CONFIGS.iter().chain([(&[0.4, 0.2][..], &[2, 1][..], 5)].iter()) {
        for _ in 0..4 {
            let mut values = Vec::new();
            for (pj, &mj) in p.iter().zip(m.iter()) {
                values.extend(std::iter::repeat_n(*pj, mj));
            }
            values.resize(*n, 0.0);
            let rho = spectral_decompose(&random::state_with_spectrum(&mut rng, &values), DEFAULT_GAP_TOL).map_err(fail)?;
            let basis = EigenprojectorBasis::standard(rho.m.clone());
            let w = canonical_amplitude(&rho, &basis).map_err(fail)?;
            let wdot = random::complex_matrix(&mut rng, w.matrix().nrows(), w.matrix().ncols());
            let (_, hor) = split(&w, &wdot).map_err(fail)?;
            for x in gauge_algebra_basis(&basis) {
                let g = metric_g_total(&hor, &(w.matrix() * x)).abs();
                ensure(g <= 1e-9, || format!("cross term {g:.3e}"))?;
                worst = worst.max(g);
            }
        }
    }
    Ok(format!("max cross term {worst:.2e}"))
}

fn prop_variance_pythagoras() -> Check {
    let mut rng = random::rng(67);
    let mut worst = 0.0f64;
    for trial in 0..200 {
        let n = 2 + trial % 5;
        let rank = 1 + rng.random_range(0..n);
        let mut values: Vec<f64> = (0..rank).map(|_| rng.random_range(0.05..1.0)).collect();
        values.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let s: f64 = values.iter().sum();
        values.iter_mut().for_each(|v| *v /= s);
        values.resize(n, 0.0);
        let rho = spectral_decompose(&random::state_with_spectrum(&mut rng, &values), DEFAULT_GAP_TOL).map_err(fail)?;
        let h = random::hermitian(&mut rng, n);
        let u = uncertainty(&rho, &h).map_err(fail)?;
        let err = (u.total.powi(2) - u.coherent.powi(2) - u.incoherent.powi(2)).abs();
        let (_, h_co) = split_hamiltonian(&h, &rho).map_err(fail)?;
        let mean_co = (&rho.matrix * h_co).trace().norm();
        ensure(err <= 1e-9, || format!("variance defect {err:.3e}"))?;
        ensure(mean_co <= 1e-10, || format!("tr(rho H_co) = {mean_co:.3e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("max defect {worst:.2e}"))
}

fn prop_speed_identity() -> Check {
    let mut rng = random::rng(68);
    let mut worst = 0.0f64;
    for (i, (p, m, n)) in LOOP_CONFIGS.iter().enumerate() {
        let mut values = Vec::new();
        for (pj, &mj) in p.iter().zip(m.iter()) {
            values.extend(std::iter::repeat_n(*pj, mj));
        }
        values.resize(*n, 0.0);
        let rho = spectral_decompose(&random::state_with_spectrum(&mut rng, &values), DEFAULT_GAP_TOL).map_err(fail)?;
        let h0 = random::hermitian(&mut rng, *n);
        let h1 = random::hermitian(&mut rng, *n);
        let sched = HamiltonianSchedule::new(
            1.0,
            (0..QUBIT_SAMPLES)
                .map(|k| {
                    let t = k as f64 / (QUBIT_SAMPLES - 1) as f64;
                    &h0 + &h1 * C64::new((3.0 * t + i as f64).sin(), 0.0)
                })
                .collect(),
        )
        .map_err(fail)?;
        let ev = evolve(&rho, &sched).map_err(fail)?;
        let v = speeds(&ev.states, DEFAULT_GAP_TOL).map_err(fail)?;
        let mut co = Vec::with_capacity(v.len());
        for (s, h) in ev.states.samples().iter().zip(sched.samples()) {
            let d = spectral_decompose(s, DEFAULT_GAP_TOL).map_err(fail)?;
            co.push(uncertainty(&d, h).map_err(fail)?.coherent);
        }
        let scale = co.iter().copied().fold(0.0, f64::max);
        let err = v.iter().zip(&co).map(|(a, b)| (a - b).abs() / scale).fold(0.0, f64::max);
        ensure(err <= 1e-4, || format!("relative speed error {err:.3e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("max relative error {worst:.2e}"))
}

fn prop_strong_inequality() -> Check {
    let mut worst = f64::INFINITY;
    for (i, l) in loops(609, 100, QUBIT_SAMPLES).into_iter().enumerate() {
        let alpha = SpectralBound::new(l.min_p.iter().map(|v| 0.8 * v).collect()).map_err(fail)?;
        let r = check_isoholonomic(&l.curve, &l.amplitude, Some(&alpha)).map_err(|e| format!("loop {i}: {e}"))?;
        ensure(!r.isospectral, || format!("loop {i}: spectrum does not vary"))?;
        let s = r.strong_slack.ok_or_else(|| format!("loop {i}: no strong slack"))?;
        ensure(s >= -1e-6, || format!("loop {i}: strong slack {s:.3e}"))?;
        worst = worst.min(s);
    }
    Ok(format!("100 loops, min strong slack {worst:.3e}"))
}

fn criterion_7() -> Check {
    let mut ratios = Vec::new();
    for n3 in QUBIT_N3 {
        let coarse = qubit_run(qubit_axis(n3), OMEGA, P0, QUBIT_SAMPLES).map_err(fail)?;
        let fine = qubit_run(qubit_axis(n3), OMEGA, P0, 2 * QUBIT_SAMPLES - 1).map_err(fail)?;
        let (e1, e2) = (qubit_phase_error(&coarse, n3)?, qubit_phase_error(&fine, n3)?);
        let ratio = e1 / e2;
        ensure((3.5..=4.5).contains(&ratio), || format!("n3 = {n3}: ratio {ratio:.3} ({e1:.3e} -> {e2:.3e})"))?;
        ratios.push(ratio);
    }
    Ok(format!("error ratios {}", ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", ")))
}

fn prop_membership() -> Check {
    for l in loops(610, 14, 801) {
        let g = holonomy(&l.curve, &l.amplitude).map_err(fail)?;
        ensure(
            holonomy_core::bundle::gauge_membership(g.matrix(), l.amplitude.basis()),
            || "holonomy leaves the gauge group".into(),
        )?;
    }
    Ok("14 loops".into())
}

fn main() -> ExitCode {
    let mut outcomes = Vec::new();
    let mut runs = Vec::new();
    outcomes.push(run("1 qubit holonomy", Some(Duration::from_secs(1)), || {
        let (msg, r) = criterion_1()?;
        runs = r;
        Ok(msg)
    }));
    outcomes.push(run("2 isoholonomic-bound equality", None, || {
        if runs.is_empty() {
            return Err("no qubit runs".into());
        }
        criterion_2(&runs)
    }));
    outcomes.push(run("3 speed limit", None, criterion_3));
    outcomes.push(run("4 pure-state saturation", None, criterion_4));
    outcomes.push(run("5 tightness", Some(Duration::from_secs(30)), criterion_5));

    let budget = Some(Duration::from_secs(10));
    let subs: [(&str, fn() -> Check); 10] = [
        ("gauge covariance", prop_gauge_covariance),
        ("composition", prop_composition),
        ("reversal", prop_reversal),
        ("auxiliary-basis independence", prop_auxiliary_independence),
        ("lift/frame round trip", prop_lift_frame_round_trip),
        ("horizontal/vertical orthogonality", prop_orthogonality),
        ("variance decomposition", prop_variance_pythagoras),
        ("speed identity", prop_speed_identity),
        ("strong inequality", prop_strong_inequality),
        ("gauge membership of holonomies", prop_membership),
    ];
    let sub_outcomes: Vec<Outcome> = subs.iter().map(|(name, f)| run(name, budget, f)).collect();
    let pass6 = sub_outcomes.iter().all(|o| o.pass);
    let detail6 = sub_outcomes
        .iter()
        .map(|o| format!("{}: {} ({})", o.label, if o.pass { "ok" } else { "FAILED" }, o.detail))
        .collect::<Vec<_>>()
        .join("; ");
    outcomes.push(Outcome { label: "6 property suite".into(), pass: pass6, detail: detail6 });
    outcomes.push(run("7 second-order convergence", None, criterion_7));

    for o in &outcomes {
        println!("[{}] criterion {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.label, o.detail);
    }
    if outcomes.iter().all(|o| o.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
