use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ria_core::chainsim::{correlation, cptp_step, cumulative_energy, gibbs_state, init_chain, ChainState};
use ria_core::gns::{benchmark_model, random_matrix, random_model_with, RepeatedInteractionModel};
use ria_core::numerics::{eigh, kron, ComplexMatrix, Tolerances};
use ria_core::reduced::{analyze_model, rias_expectation, InstantObservable};
use ria_core::{Error, C64};

fn random_density(rng: &mut impl Rng, d: usize) -> ComplexMatrix {
    let g = random_matrix(rng, d, d);
    let r = &g * &g.adjoint();
    r.scale_real(1.0 / r.trace().re)
}

fn projector(d: usize, k: usize) -> ComplexMatrix {
    let mut diag = vec![0.0; d];
    diag[k] = 1.0;
    ComplexMatrix::from_real_diag(&diag)
}

fn spectrum(st: &ChainState) -> Vec<f64> {
    eigh(&st.rho()).unwrap().values
}

#[test]
fn evolution_is_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let model = random_model_with(&mut rng, 2, 3, 0.3, 1.2, 0.7, 0.9);
    let st = init_chain(&model, 3, &random_density(&mut rng, 2)).unwrap();
    let before = spectrum(&st);
    for t in [0.4, 0.9, 1.7, 2.7] {
        let after = st.evolve_to(t).unwrap();
        let rho = after.rho();
        assert!((rho.trace().re - 1.0).abs() <= 1e-10);
        assert!(rho.is_hermitian(1e-10));
        for (a, b) in before.iter().zip(spectrum(&after)) {
            assert!((a - b).abs() <= 1e-9);
        }
    }
}

#[test]
fn lazy_free_evolution_matches_explicit_rotation() {
    // reading a past element directly, compared with evolving its reduced state by hand
    let model = benchmark_model(0.6);
    let rho0 = ComplexMatrix::from_real(2, 2, &[0.3, 0.2, 0.2, 0.7]).unwrap();
    let st = init_chain(&model, 3, &rho0).unwrap().evolve_to(1.0).unwrap();
    let red1 = st.reduced(&[0, 1]).unwrap();
    let later = st.evolve_to(1.8).unwrap();
    let u = ria_core::numerics::expm(&model.sys_e.h.scale(C64::new(0.0, -0.8))).unwrap();
    // element 1 only evolves freely after t = τ
    let e1_then = ria_core::numerics::partial_trace(&red1, &ria_core::numerics::FactorShape::new(vec![2, 2]).unwrap(), &[1]).unwrap();
    let e1_now = later.reduced(&[1]).unwrap();
    assert!(e1_now.approx_eq(&(&(&u * &e1_then) * &u.adjoint()), 1e-12));
}

#[test]
fn free_evolution_keeps_populations() {
    let model = benchmark_model(0.0);
    let rho0 = ComplexMatrix::from_real(2, 2, &[0.3, 0.4, 0.4, 0.7]).unwrap();
    let st = init_chain(&model, 3, &rho0).unwrap();
    let later = st.evolve_to(2.3).unwrap();
    let rs = later.rho_s();
    assert!((rs[(0, 0)].re - 0.3).abs() <= 1e-12 && (rs[(1, 1)].re - 0.7).abs() <= 1e-12);
    let phase = C64::from_polar(1.0, 2.3 * model.sys_s.h[(1, 1)].re);
    assert!((rs[(0, 1)] - rho0[(0, 1)] * phase).norm() <= 1e-12);
}

#[test]
fn simulation_matches_cptp_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let model = random_model_with(&mut rng, 2, 2, 0.0, 1.0, 0.8, 1.3);
    let rho0 = random_density(&mut rng, 2);
    let mut st = init_chain(&model, 5, &rho0).unwrap();
    let mut reduced = rho0;
    for m in 1..=5 {
        st.advance_to(m as f64 * model.tau).unwrap();
        reduced = cptp_step(&model, &reduced).unwrap();
        assert!(st.rho_s().approx_eq(&reduced, 1e-9));
    }
}

fn total_energy(st: &ChainState, model: &RepeatedInteractionModel, k: usize) -> f64 {
    let mut e = st.expect_local(&model.sys_s.h, &[0]).unwrap().re;
    for j in 1..=st.n_elements {
        e += st.expect_local(&model.sys_e.h, &[j]).unwrap().re;
    }
    e + st.expect_local(&model.physical_v().scale_real(model.lambda), &[0, k]).unwrap().re
}

#[test]
fn energy_is_conserved_within_each_interval() {
    let model = benchmark_model(0.6);
    let rho0 = ComplexMatrix::from_real(2, 2, &[0.2, 0.1, 0.1, 0.8]).unwrap();
    let st = init_chain(&model, 4, &rho0).unwrap();
    for k in 1..=4 {
        let start = st.evolve_to((k - 1) as f64).unwrap();
        let e0 = total_energy(&start, &model, k);
        for s in [0.3, 0.7, 1.0] {
            let at = st.evolve_to((k - 1) as f64 + s).unwrap();
            assert!((total_energy(&at, &model, k) - e0).abs() <= 1e-9);
        }
    }
}

#[test]
fn expectation_basics() {
    let model = benchmark_model(0.6);
    let rho0 = ComplexMatrix::from_real(2, 2, &[0.2, 0.1, 0.1, 0.8]).unwrap();
    let st = init_chain(&model, 4, &rho0).unwrap();
    let id = InstantObservable::system(ComplexMatrix::identity(2), 2);
    assert!((st.expect(&id).unwrap() - C64::new(1.0, 0.0)).norm() <= 1e-12);
    let a = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, -3.0]).unwrap();
    let want = (&rho0 * &a).trace();
    assert!((st.expect(&InstantObservable::system(a, 2)).unwrap() - want).norm() <= 1e-12);
    let later = st.evolve_to(2.5).unwrap();
    assert!((later.expect(&id).unwrap() - C64::new(1.0, 0.0)).norm() <= 1e-10);
    // the window must fit inside the chain
    let mut far = InstantObservable::system(ComplexMatrix::identity(2), 2);
    far.b_future = vec![ComplexMatrix::identity(2); 3];
    assert!(matches!(later.expect(&far), Err(Error::InvalidInput(_))));
    assert!(matches!(st.evolve_to(4.5), Err(Error::Capacity(_))));
}

#[test]
fn jumps_vanish_without_coupling() {
    let model = benchmark_model(0.0);
    let st = init_chain(&model, 4, &projector(2, 1)).unwrap();
    for k in 1..4 {
        assert_eq!(st.evolve_to(k as f64).unwrap().energy_jump().unwrap(), 0.0);
    }
    assert!(st.evolve_to(0.5).unwrap().energy_jump().is_err());
}

#[test]
fn relative_entropy_closed_forms() {
    let model = ria_core::gns::spin_spin_model(&ria_core::gns::SpinSpinParams::benchmark(), 0.7, 1.0, 0.6, 1.0).unwrap();
    let g = gibbs_state(&model.sys_s.h, 0.7).unwrap();
    let st = init_chain(&model, 3, &g).unwrap();
    assert!(st.relative_entropy(0.7, 1.0).unwrap().abs() <= 1e-12);
    // excited system state against the Gibbs reference: −log p₂ = β_S E_S + log Z_S
    let st = init_chain(&model, 3, &projector(2, 1)).unwrap();
    let want = 0.7 * 1.0 + (1.0 + (-0.7f64).exp()).ln();
    assert!((st.relative_entropy(0.7, 1.0).unwrap() - want).abs() <= 1e-12);
    assert!((st.relative_entropy_unitary(0.7, 1.0).unwrap() - want).abs() <= 1e-12);
}

#[test]
fn entropy_routes_agree_along_a_trajectory() {
    let model = benchmark_model(0.6);
    let rho0 = ComplexMatrix::from_real(2, 2, &[0.4, 0.3, 0.3, 0.6]).unwrap();
    let mut st = init_chain(&model, 6, &rho0).unwrap();
    for i in 1..=12 {
        st.advance_to(0.5 * i as f64).unwrap();
        let dense = st.relative_entropy(0.0, 1.0).unwrap();
        let fast = st.relative_entropy_unitary(0.0, 1.0).unwrap();
        assert!(dense >= -1e-9);
        assert!((dense - fast).abs() <= 1e-9, "t = {}: {dense} vs {fast}", st.clock);
    }
}

#[test]
fn entropy_derivative_formula() {
    // dEnt/dt = −⟨i[β_S h_S + β_E h_E, λv]⟩ on the interacting pair
    let (bs, be) = (0.3, 1.0);
    let model = ria_core::gns::spin_spin_model(&ria_core::gns::SpinSpinParams::benchmark(), bs, be, 0.6, 1.0).unwrap();
    let rho0 = ComplexMatrix::from_real(2, 2, &[0.4, 0.3, 0.3, 0.6]).unwrap();
    let base = init_chain(&model, 4, &rho0).unwrap();
    let h = 1.0 / 400.0;
    let hh = &kron(&model.sys_s.h.scale_real(bs), &ComplexMatrix::identity(2))
        + &kron(&ComplexMatrix::identity(2), &model.sys_e.h.scale_real(be));
    let lv = model.physical_v().scale_real(model.lambda);
    let gen = hh.commutator(&lv).scale(C64::new(0.0, 1.0));
    for t in [0.35, 1.5, 2.8] {
        let k = (t as usize) + 1;
        let ent = |x: f64| base.evolve_to(x).unwrap().relative_entropy_unitary(bs, be).unwrap();
        let fd = (ent(t + h) - ent(t - h)) / (2.0 * h);
        let at = base.evolve_to(t).unwrap();
        let want = -at.expect_local(&gen, &[0, k]).unwrap().re;
        assert!((fd - want).abs() <= 1e-5, "t = {t}: {fd} vs {want}");
    }
}

#[test]
fn cptp_step_is_a_channel() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let model = random_model_with(&mut rng, 3, 2, 0.5, 1.5, 0.9, 1.1);
    for _ in 0..5 {
        let rho = random_density(&mut rng, 3);
        let out = cptp_step(&model, &rho).unwrap();
        assert!((out.trace() - C64::new(1.0, 0.0)).norm() <= 1e-12);
        assert!(eigh(&out).unwrap().values[0] >= -1e-10);
    }
    let free = benchmark_model(0.0);
    let rho = ComplexMatrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]).unwrap();
    let u = ria_core::numerics::expm(&free.sys_s.h.scale(C64::new(0.0, -1.0))).unwrap();
    assert!(cptp_step(&free, &rho).unwrap().approx_eq(&(&(&u * &rho) * &u.adjoint()), 1e-12));
}

#[test]
fn cptp_fixed_point_near_leading_order_state() {
    let model = benchmark_model(0.05);
    let mut rho = ComplexMatrix::identity(2).scale_real(0.5);
    for _ in 0..20_000 {
        rho = cptp_step(&model, &rho).unwrap();
    }
    // leading-order populations α₁/(α₁+α₂), α₂/(α₁+α₂)
    let p1 = 0.58227;
    assert!((rho[(0, 0)].re - p1).abs() <= 0.05);
    assert!(rho[(0, 1)].norm() <= 0.05);
}

#[test]
fn correlations_factorize_and_reconstruct_the_initial_state() {
    let model = benchmark_model(0.6);
    let data = analyze_model(&model, &Tolerances::default()).unwrap();
    let rho0 = ComplexMatrix::from_real(2, 2, &[0.3, 0.25, 0.25, 0.7]).unwrap();
    let obs = InstantObservable::system(projector(2, 0), 2);
    let n = 9;
    let t = 8.0;
    // identity probe reduces to the plain expectation
    let plain = init_chain(&model, n, &rho0).unwrap().evolve_to(t).unwrap().expect(&obs).unwrap();
    let c_id = correlation(&model, n, &rho0, &ComplexMatrix::identity(2), 0, &obs, t).unwrap();
    assert!((plain - c_id).norm() <= 1e-10);
    // a probe on S and the first element
    let a = kron(
        &ComplexMatrix::from_real(2, 2, &[1.0, 0.5, 0.5, 2.0]).unwrap(),
        &ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 3.0]).unwrap(),
    );
    let omega_a = (&kron(&rho0, &model.sys_e.gibbs()) * &a).trace();
    let e_plus = rias_expectation(&model, &data, &obs, 0.0).unwrap();
    let c = correlation(&model, n, &rho0, &a, 1, &obs, t).unwrap();
    assert!((c - omega_a * e_plus).norm() <= 5e-3 * omega_a.norm());
    assert!((c / e_plus - omega_a).norm() <= 1e-2 * omega_a.norm());
}

#[test]
fn cumulative_energy_follows_jumps() {
    let jumps = [0.1, 0.2, 0.3];
    assert_eq!(cumulative_energy(&jumps, 0.5, 1.0), 0.0);
    assert!((cumulative_energy(&jumps, 2.5, 1.0) - 0.3).abs() < 1e-15);
}
