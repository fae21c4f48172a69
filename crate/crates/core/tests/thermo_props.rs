use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ria_core::chainsim::init_chain;
use ria_core::gns::{benchmark_model, build_gns_system, random_model, InteractionTerm, RepeatedInteractionModel};
use ria_core::numerics::{ComplexMatrix, Tolerances};
use ria_core::reduced::{analyze_model, analyze_spectrum, reduced_map};
use ria_core::thermo::{j_plus, j_plus_forms, no_invariant_state_certificate, productions, thermo_report, FORM_TOL};
use ria_core::Error;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn lenient_report(model: &RepeatedInteractionModel) -> ria_core::Result<ria_core::thermo::ThermoReport> {
    let m = reduced_map(model)?;
    let data = analyze_spectrum(&m, &model.sys_s.omega, &tol())?;
    j_plus(model, &data).map(productions)
}

fn commuting_model() -> RepeatedInteractionModel {
    let s = build_gns_system(&ComplexMatrix::from_real_diag(&[0.0, 1.0]), 0.5).unwrap();
    let e = build_gns_system(&ComplexMatrix::from_real_diag(&[0.0, 1.5]), 1.0).unwrap();
    let z = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
    RepeatedInteractionModel::new(s, e, vec![InteractionTerm::new(z.clone(), z)], 0.6, 1.0).unwrap()
}

#[test]
fn zero_coupling_has_zero_flux() {
    let r = lenient_report(&benchmark_model(0.0)).unwrap();
    assert_eq!(r.j_plus_op.max_abs(), 0.0);
    assert_eq!((r.j_plus_value, r.dE_plus, r.dS_plus), (0.0, 0.0, 0.0));
    assert!(!no_invariant_state_certificate(&r));
}

#[test]
fn commuting_interaction_has_zero_flux() {
    let model = commuting_model();
    let (a, b, _) = j_plus_forms(&model).unwrap();
    assert!(a.max_abs() <= 1e-12 && b.max_abs() <= 1e-12);
    let r = lenient_report(&model).unwrap();
    assert_eq!(r.j_plus_value, 0.0);
    assert!(!r.no_invariant_state);
}

#[test]
fn nonzero_flux_needs_ergodicity() {
    // a non-ergodic model with a nonzero flux operator
    let s = build_gns_system(&ComplexMatrix::from_real_diag(&[0.0, 1.0]), 0.0).unwrap();
    let e = build_gns_system(&ComplexMatrix::from_real_diag(&[0.0, 1.5]), 1.0).unwrap();
    let z = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
    let x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
    let model = RepeatedInteractionModel::new(s, e, vec![InteractionTerm::new(z, x)], 0.6, 1.0).unwrap();
    assert!(j_plus_forms(&model).unwrap().0.max_abs() > 1e-6);
    assert!(matches!(lenient_report(&model), Err(Error::NotErgodic { .. })));
}

#[test]
fn flux_is_nonnegative_and_forms_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut checked = 0;
    while checked < 15 {
        let model = random_model(&mut rng);
        let Ok(data) = analyze_model(&model, &tol()) else { continue };
        checked += 1;
        let r = thermo_report(&model, &data).unwrap();
        assert!(r.j_plus_value >= -1e-9, "ω₊(j₊) = {}", r.j_plus_value);
        assert!(r.form_residual <= FORM_TOL, "residual {}", r.form_residual);
        assert!(r.second_law_residual <= 1e-12);
        assert!(r.j_plus_imag.abs() <= 1e-9);
    }
}

#[test]
fn benchmark_flux_is_positive() {
    for lambda in [0.05, 0.3, 0.6] {
        let model = benchmark_model(lambda);
        let r = thermo_report(&model, &analyze_model(&model, &tol()).unwrap()).unwrap();
        assert!(r.j_plus_value > 1e-6);
        assert!(r.no_invariant_state);
        assert!((r.dS_plus - r.dE_plus).abs() <= 1e-15, "β_E = 1 makes both productions equal");
    }
}

#[test]
fn flux_matches_simulated_energy_jumps() {
    let model = benchmark_model(0.6);
    let r = thermo_report(&model, &analyze_model(&model, &tol()).unwrap()).unwrap();
    let rho0 = ComplexMatrix::from_real(2, 2, &[0.1, 0.2, 0.2, 0.9]).unwrap();
    let st = init_chain(&model, 9, &rho0).unwrap().evolve_to(8.0).unwrap();
    let jump = st.energy_jump().unwrap();
    println!("jump(8) = {jump:.6}, ω₊(j₊) = {:.6}", r.j_plus_value);
    assert!((jump - r.j_plus_value).abs() <= 5e-3);
}

#[test]
fn entropy_increments_approach_the_production() {
    let model = benchmark_model(0.6);
    let r = thermo_report(&model, &analyze_model(&model, &tol()).unwrap()).unwrap();
    let rho0 = ComplexMatrix::from_real(2, 2, &[0.1, 0.2, 0.2, 0.9]).unwrap();
    let mut st = init_chain(&model, 10, &rho0).unwrap();
    let mut ent = vec![st.relative_entropy_unitary(0.0, 1.0).unwrap()];
    for m in 1..=10 {
        st.advance_to(m as f64).unwrap();
        ent.push(st.relative_entropy_unitary(0.0, 1.0).unwrap());
    }
    let target = r.dS_plus * model.tau;
    for m in 0..10 {
        println!("m = {m}: increment {:.6} vs {target:.6}", ent[m + 1] - ent[m]);
    }
    // dichotomy: positive flux gives growth of at least half the production per step
    for m in 5..10 {
        assert!(ent[m + 1] - ent[m] >= 0.5 * target);
    }
    assert!((ent[9] - ent[8] - target).abs() <= 5e-3);
}

#[test]
fn zero_flux_keeps_entropy_bounded() {
    let model = commuting_model();
    let rho0 = ComplexMatrix::from_real(2, 2, &[0.1, 0.2, 0.2, 0.9]).unwrap();
    let mut st = init_chain(&model, 8, &rho0).unwrap();
    let mut ent = vec![st.relative_entropy_unitary(0.5, 1.0).unwrap()];
    for m in 1..=8 {
        st.advance_to(m as f64).unwrap();
        ent.push(st.relative_entropy_unitary(0.5, 1.0).unwrap());
    }
    let (lo, hi) = ent.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    assert!(hi - lo <= 1e-2, "spread {}", hi - lo);
}

#[test]
fn integral_form_refines_for_fast_dynamics() {
    let p = ria_core::gns::SpinSpinParams { e_s: 8.0, e_e: 12.0, ..ria_core::gns::SpinSpinParams::benchmark() };
    let model = ria_core::gns::spin_spin_model(&p, 0.0, 1.0, 0.8, 2.0).unwrap();
    let (a, b, delta) = j_plus_forms(&model).unwrap();
    assert!(delta <= ria_core::thermo::RICHARDSON_TOL);
    assert!((&a - &b).max_abs() <= FORM_TOL);
}
