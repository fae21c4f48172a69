use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ria_core::gns::{spin_spin_model, SpinSpinParams};
use ria_core::numerics::{ComplexMatrix, Tolerances};
use ria_core::reduced::{analyze_model, asymptotic_expectation};
use ria_core::sforacle::{
    sf_linear_all, sf_quadratic_all, sf_quadratic_alphas, sf_quadratic_eigs, sf_quadratic_entropy,
    sf_quadratic_entropy_methods, spinspin_oracle, FormFactor, FormFactorFamily, PerturbativeResult,
};
use ria_core::thermo::thermo_report;
use ria_core::{Error, C64};

fn exp_ff(kappa: f64, beta: f64) -> FormFactor {
    FormFactor::new(FormFactorFamily::Exponential { c: 1.0, kappa }, beta).unwrap()
}

fn sinc2(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (x.sin() / x).powi(2)
    }
}

/// Stratified Monte-Carlo estimate of α_j for ‖g(r)‖² = e^{−2r}: each coordinate is sampled from
/// the density 2e^{−2r} through its inverse CDF, one jittered point per cell of a k×k grid.
fn alpha_monte_carlo(beta: f64, tau: f64, j: usize, k: usize, rng: &mut impl Rng) -> f64 {
    let weight = |r: f64| 1.0 / (2.0 * (1.0 + (-beta * r).exp()));
    let mut sum = 0.0;
    for i1 in 0..k {
        for i2 in 0..k {
            let u1 = (i1 as f64 + rng.random::<f64>()) / k as f64;
            let u2 = (i2 as f64 + rng.random::<f64>()) / k as f64;
            let (r1, r2) = (-(1.0 - u1).ln() / 2.0, -(1.0 - u2).ln() / 2.0);
            let rj = if j == 1 { r1 } else { r2 };
            sum += weight(r1) * weight(r2) * (-beta * rj).exp() * sinc2(tau * (2.0 - r1 + r2) / 2.0);
        }
    }
    sum / (k * k) as f64
}

#[test]
fn quadratic_alphas_match_monte_carlo() {
    let ff = exp_ff(1.0, 1.0);
    let (a1, a2) = sf_quadratic_alphas(&ff, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    // 3163² ≈ 10⁷ samples each
    let mc1 = alpha_monte_carlo(1.0, 1.0, 1, 3163, &mut rng);
    let mc2 = alpha_monte_carlo(1.0, 1.0, 2, 3163, &mut rng);
    assert!(((a1 - mc1) / mc1).abs() <= 1e-4, "{a1} vs {mc1}");
    assert!(((a2 - mc2) / mc2).abs() <= 1e-4, "{a2} vs {mc2}");
    assert!(a1 > 0.0 && a2 > 0.0 && (a1 - a2).abs() > 1e-3);
    // frozen after the comparison above
    assert!((a1 - 0.038539067474650926).abs() <= 1e-9);
    assert!((a2 - 0.04387294793864305).abs() <= 1e-9);
}

#[test]
fn default_form_factor_gives_positive_rates() {
    let ff = FormFactor::default_with_beta(0.5).unwrap();
    let q = sf_quadratic_all(&ff, 1.0, 0.05).unwrap();
    let l = sf_linear_all(&ff, 1.0, 0.05).unwrap();
    for r in [&q, &l] {
        assert!(r.alpha1 > 0.0 && r.alpha2 > 0.0);
        assert!(r.ds_plus_leading > 0.0);
        assert!((r.omega_plus_diag[0] + r.omega_plus_diag[1] - 1.0).abs() <= 1e-14);
        assert!(r.warnings.is_empty());
    }
}

#[test]
fn zero_form_factor_is_degenerate() {
    let ff = FormFactor::new(FormFactorFamily::Exponential { c: 0.0, kappa: 1.0 }, 1.0).unwrap();
    assert!(ff.is_zero());
    assert_eq!(sf_quadratic_alphas(&ff, 1.0).unwrap(), (0.0, 0.0));
    assert!(matches!(sf_quadratic_all(&ff, 1.0, 0.05), Err(Error::Precondition(_))));
}

#[test]
fn uncoupled_eigenvalues() {
    for ff in [exp_ff(1.0, 1.0), FormFactor::default_with_beta(0.5).unwrap()] {
        let (e0, ep, em) = sf_quadratic_eigs(&ff, 1.0, 0.0).unwrap();
        assert_eq!(e0, C64::new(1.0, 0.0));
        assert!((ep - C64::from_polar(1.0, 2.0)).norm() <= 1e-15);
        assert!((em - C64::from_polar(1.0, -2.0)).norm() <= 1e-15);
        let l = sf_linear_all(&ff, 1.0, 0.0).unwrap();
        assert_eq!(l.e0, C64::new(1.0, 0.0));
        assert!((l.e_plus - C64::from_polar(1.0, 2.0)).norm() <= 1e-15);
        assert_eq!(sf_quadratic_entropy(&ff, 1.0, 0.0).unwrap(), 0.0);
    }
}

#[test]
fn minus_eigenvalue_is_conjugate() {
    let i = ComplexMatrix::from_rows(&[
        vec![C64::new(0.3, 0.2), C64::new(1.0, 0.0)],
        vec![C64::new(0.6, -0.3), C64::new(-0.5, 0.1)],
    ])
    .unwrap();
    let mut results: Vec<PerturbativeResult> = vec![spinspin_oracle(1.0, 1.5, 1.0, 1.0, 0.1, &i).unwrap()];
    for (tau, lambda) in [(0.7, 0.05), (1.3, 0.15)] {
        let ff = exp_ff(1.0, 1.0);
        results.push(sf_quadratic_all(&ff, tau, lambda).unwrap());
        results.push(sf_linear_all(&ff, tau, lambda).unwrap());
    }
    for r in results {
        assert!((r.e_minus - r.e_plus.conj()).norm() <= 1e-15, "{}", r.model);
    }
}

#[test]
fn gap_is_realized_by_the_rotating_pair() {
    let ff = exp_ff(1.0, 1.0);
    for lambda in [0.02, 0.01] {
        for r in [sf_quadratic_all(&ff, 1.0, lambda).unwrap(), sf_linear_all(&ff, 1.0, lambda).unwrap()] {
            let g0 = -r.e0.norm().ln();
            let gp = -r.e_plus.norm().ln();
            assert!(gp < g0);
            assert!((gp - r.gamma_leading).abs() <= lambda.powi(3), "{}: {gp} vs {}", r.model, r.gamma_leading);
            assert!((r.gamma_leading - (r.alpha1 + r.alpha2) * lambda * lambda / 2.0).abs() <= 1e-15);
        }
    }
}

#[test]
fn entropy_integrand_is_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    for _ in 0..10_000 {
        let (x, y, beta): (f64, f64, f64) = (rng.random_range(0.0..50.0), rng.random_range(0.0..50.0), rng.random_range(0.0..3.0));
        assert!((x - y) * ((-beta * y).exp() - (-beta * x).exp()) >= 0.0);
    }
}

#[test]
fn entropy_methods_agree() {
    for (ff, tau) in [(exp_ff(1.0, 1.0), 1.0), (FormFactor::default_with_beta(0.5).unwrap(), 1.0), (exp_ff(1.0, 1.0), 2.3)] {
        let (sep, tensor) = sf_quadratic_entropy_methods(&ff, tau).unwrap();
        assert!(sep > 0.0);
        assert!(((sep - tensor) / sep).abs() <= 1e-5, "{sep} vs {tensor}");
        assert!(sf_quadratic_entropy(&ff, tau, 0.05).unwrap() > 0.0);
    }
}

#[test]
fn linear_model_entropy_is_positive() {
    let r = sf_linear_all(&exp_ff(1.0, 1.0), 1.0, 0.05).unwrap();
    assert!(r.ds_plus_leading > 0.0);
}

#[test]
fn refusals() {
    let ff = exp_ff(1.0, 1.0);
    for tau in [PI / 2.0, 1.5 * PI, PI / 2.0 + 5e-7] {
        assert!(matches!(sf_quadratic_alphas(&ff, tau), Err(Error::Precondition(_))));
        assert!(matches!(sf_linear_all(&ff, tau, 0.1), Err(Error::Precondition(_))));
    }
    // e^{βh/2} g must be square integrable
    assert!(matches!(sf_quadratic_alphas(&exp_ff(1.0, 2.5), 1.0), Err(Error::Precondition(_))));
    let zero = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
    assert!(matches!(spinspin_oracle(1.0, 1.5, 1.0, 1.0, 0.1, &zero), Err(Error::Precondition(_))));
    let i = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
    assert!(matches!(spinspin_oracle(1.0, PI, 1.0, 1.0, 0.1, &i), Err(Error::Precondition(_))));
    let big = sf_quadratic_all(&ff, 1.0, 0.3).unwrap();
    assert_eq!(big.warnings.len(), 1);
}

#[test]
fn spin_spin_closed_forms() {
    let i = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
    let r = spinspin_oracle(1.0, 1.5, 1.0, 1.0, 0.1, &i).unwrap();
    let q = (-1.5f64).exp();
    let (sm, sp) = (sinc2(0.25), sinc2(1.25));
    let a1 = sm + q * sp;
    let a2 = q * sm + sp;
    assert!((r.alpha1 - a1).abs() <= 1e-14 && (r.alpha2 - a2).abs() <= 1e-14);
    assert!((r.alpha1 - 1.1080).abs() <= 1e-4 && (r.alpha2 - 0.7949).abs() <= 1e-4);
    let gamma0 = ((a1 + a2) / (1.0 + q)).min((a1 + a2) / (2.0 * (1.0 + q)));
    assert!((r.gamma_leading / 0.01 - gamma0).abs() <= 1e-14);
    assert!((gamma0 - 0.778).abs() <= 1e-3);
    // a = d and real b = c: e₀ is real and the diagonal couplings drop out of the damping
    let sym = ComplexMatrix::from_real(2, 2, &[0.4, 0.7, 0.7, 0.4]).unwrap();
    let r = spinspin_oracle(1.0, 1.5, 1.0, 1.0, 0.1, &sym).unwrap();
    assert_eq!(r.e0.im, 0.0);
}

fn oracle_vs_numerics(coupling: &ComplexMatrix) {
    let p = SpinSpinParams { e_s: 1.0, e_e: 1.5, coupling: coupling.clone() };
    let mut ks = Vec::new();
    let mut pop_ks = Vec::new();
    let mut ds_dev = Vec::new();
    for lambda in [0.02, 0.01, 0.005] {
        let model = spin_spin_model(&p, 0.0, 1.0, lambda, 1.0).unwrap();
        let data = analyze_model(&model, &Tolerances::default()).unwrap();
        let o = spinspin_oracle(1.0, 1.5, 1.0, 1.0, lambda, coupling).unwrap();
        let worst = [o.e0, o.e_plus, o.e_minus]
            .iter()
            .map(|z| data.eigenvalues[1..].iter().map(|w| (w - z).norm()).fold(f64::MAX, f64::min))
            .fold(0.0, f64::max);
        ks.push(worst / lambda.powi(3));
        let p1 = asymptotic_expectation(&data, &ComplexMatrix::from_real_diag(&[1.0, 0.0])).unwrap().re;
        pop_ks.push((p1 - o.omega_plus_diag[0]).abs() / (lambda * lambda));
        let ds = thermo_report(&model, &data).unwrap().dS_plus;
        ds_dev.push(((ds - o.ds_plus_leading) / o.ds_plus_leading).abs());
        if lambda == 0.02 {
            assert!((data.gamma / o.gamma_leading - 1.0).abs() <= 0.15);
        }
    }
    assert!(ks.iter().all(|&k| k <= 50.0), "cubic constants {ks:?}");
    assert!(pop_ks.iter().all(|&k| k <= 50.0), "quadratic constants {pop_ks:?}");
    // relative deviation shrinks at least linearly as λ halves
    assert!(ds_dev[1] <= 0.6 * ds_dev[0] && ds_dev[2] <= 0.6 * ds_dev[1], "{ds_dev:?}");
}

#[test]
fn spin_spin_oracle_matches_reduced_map() {
    oracle_vs_numerics(&ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap());
    oracle_vs_numerics(
        &ComplexMatrix::from_rows(&[
            vec![C64::new(0.0, 0.3), C64::new(1.0, 0.0)],
            vec![C64::new(0.6, 0.0), C64::new(0.5, 0.0)],
        ])
        .unwrap(),
    );
}

#[test]
fn spectrum_does_not_depend_on_system_reference() {
    let p = SpinSpinParams::benchmark();
    let base = analyze_model(&spin_spin_model(&p, 0.0, 1.0, 0.3, 1.0).unwrap(), &Tolerances::default()).unwrap();
    for bs in [0.5, 0.7, 1.0] {
        let other = analyze_model(&spin_spin_model(&p, bs, 1.0, 0.3, 1.0).unwrap(), &Tolerances::default()).unwrap();
        for z in &other.eigenvalues {
            let d = base.eigenvalues.iter().map(|w| (w - z).norm()).fold(f64::MAX, f64::min);
            assert!(d <= 1e-9);
        }
        assert!((other.gamma - base.gamma).abs() <= 1e-9);
    }
}

#[test]
fn production_matches_leading_order_at_small_coupling() {
    let model = spin_spin_model(&SpinSpinParams::benchmark(), 0.0, 1.0, 0.05, 1.0).unwrap();
    let data = analyze_model(&model, &Tolerances::default()).unwrap();
    let r = thermo_report(&model, &data).unwrap();
    let o = spinspin_oracle(1.0, 1.5, 1.0, 1.0, 0.05, &SpinSpinParams::benchmark().coupling).unwrap();
    assert!(((r.dS_plus - o.ds_plus_leading) / o.ds_plus_leading).abs() <= 0.1);
    assert!(r.no_invariant_state);
}

#[test]
fn results_round_trip_through_json() {
    let r = sf_quadratic_all(&exp_ff(1.0, 1.0), 1.0, 0.05).unwrap();
    let text = serde_json::to_string(&r).unwrap();
    assert!(text.contains("\"e_plus\":["));
    let back: PerturbativeResult = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
    let ff: FormFactor = serde_json::from_str(r#"{"family":"exponential","c":1.0,"kappa":0.5,"beta":0.5}"#).unwrap();
    assert_eq!(ff, FormFactor::default_with_beta(0.5).unwrap());
}
