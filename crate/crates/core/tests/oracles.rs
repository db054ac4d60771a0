use nalgebra::{Matrix2, Matrix4};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twoqubit::evolution::{propagate, spectral_propagate, Propagator};
use twoqubit::lindblad::{
    detuned_jump_channels, global_jump_channels, master_rhs, resonant_jump_channels, unvectorize, vectorize,
    ChannelLabel, JumpChannel, OpenSystem,
};
use twoqubit::observables::{concurrence, populations, von_neumann_entropy, PopulationVector};
use twoqubit::reduced::solve_rates;
use twoqubit::system::{
    antisymmetric_ket, basis_ket, build_hamiltonian, eigen_system, sigma1, sigma2, symmetric_ket, DensityMatrix,
    SystemParams, EE, EG, GE, GG,
};
use twoqubit::{Operator, C64};

fn max_abs(m: &Operator) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_density(rng: &mut impl Rng) -> DensityMatrix {
    let a = Operator::from_fn(|_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let m = a * a.adjoint();
    let tr = m.trace();
    DensityMatrix::from_product(m / tr)
}

fn detuned(y: f64) -> SystemParams {
    let mut p = SystemParams::default();
    p.omega1 = p.omega2 + y * p.coupling;
    p
}

/// `e^{iHt} A e^{−iHt}` by matrix exponential.
fn heisenberg(h: &Operator, a: &Operator, t: f64) -> Operator {
    let u = (h * c(0.0, t)).exp();
    u * a * u.adjoint()
}

fn expand(chs: &[&JumpChannel], t: f64) -> Operator {
    chs.iter()
        .fold(Operator::zeros(), |acc, ch| acc + ch.operator * C64::from_polar(1.0, ch.transition_frequency * t))
}

fn pick(chs: &[JumpChannel], f: impl Fn(ChannelLabel) -> bool) -> Vec<&JumpChannel> {
    chs.iter().filter(|ch| f(ch.label)).collect()
}

fn check_interaction_picture(params: &SystemParams, chs: &[JumpChannel], rng: &mut impl Rng) {
    let h = build_hamiltonian(params);
    let rad = pick(chs, |l| matches!(l, ChannelLabel::Rad1 | ChannelLabel::Rad2));
    let dp1 = pick(chs, |l| matches!(l, ChannelLabel::Dephasing { bath: 1, .. }));
    let dp2 = pick(chs, |l| matches!(l, ChannelLabel::Dephasing { bath: 2, .. }));
    assert_eq!((rad.len(), dp1.len(), dp2.len()), (2, 3, 3));
    for _ in 0..10 {
        let t = rng.gen_range(0.0..100.0);
        let s = sigma1() + sigma2();
        assert!(max_abs(&(heisenberg(&h, &s, t) - expand(&rad, t))) < 1e-10, "radiative at t = {t}");
        let n1 = sigma1().adjoint() * sigma1();
        assert!(max_abs(&(heisenberg(&h, &n1, t) - expand(&dp1, t))) < 1e-10, "dephasing 1 at t = {t}");
        let n2 = sigma2().adjoint() * sigma2();
        assert!(max_abs(&(heisenberg(&h, &n2, t) - expand(&dp2, t))) < 1e-10, "dephasing 2 at t = {t}");
    }
}

#[test]
fn resonant_channels_match_interaction_picture() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = SystemParams::default();
    check_interaction_picture(&p, &resonant_jump_channels(&p).unwrap(), &mut rng);
}

#[test]
fn detuned_channels_match_interaction_picture() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for y in [-2.0, -0.7, 0.05, 0.5, 1.0, 2.0] {
        let p = detuned(y);
        check_interaction_picture(&p, &detuned_jump_channels(&p).unwrap(), &mut rng);
    }
}

#[test]
fn detuned_channels_reduce_to_resonant() {
    let p = SystemParams::default();
    let a = resonant_jump_channels(&p).unwrap();
    let b = detuned_jump_channels(&p).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.label, y.label);
        assert!(max_abs(&(x.operator - y.operator)) <= 1e-12, "{}", x.label);
        assert!((x.rate - y.rate).abs() <= 1e-12 * x.rate.max(1.0));
        assert!((x.transition_frequency - y.transition_frequency).abs() <= 1e-12);
    }
}

#[test]
fn eigenfrequencies_match_hermitian_solver() {
    for y in [0.0, 0.3, -1.5, 2.0] {
        let p = detuned(y);
        let mut expected: Vec<f64> = build_hamiltonian(&p).symmetric_eigenvalues().iter().copied().collect();
        expected.sort_by(f64::total_cmp);
        let mut got = eigen_system(&p).unwrap().frequencies.to_vec();
        got.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "y = {y}: {got:?} vs {expected:?}");
        }
    }
}

#[test]
fn liouvillian_matches_direct_rhs_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for p in [SystemParams::default(), detuned(0.8)] {
        let sys = OpenSystem::global(&p).unwrap();
        for _ in 0..20 {
            let rho = random_density(&mut rng);
            let direct = master_rhs(rho.matrix(), &sys.hamiltonian, &sys.channels);
            let lifted = unvectorize(&(sys.liouvillian.matrix * vectorize(rho.matrix())));
            assert!(max_abs(&(direct - lifted)) < 1e-13);
        }
    }
}

#[test]
fn spectrum_is_stable_and_relaxes_to_ground() {
    let sys = OpenSystem::global(&SystemParams::default()).unwrap();
    assert!(sys.liouvillian.spectrum().iter().all(|z| z.re <= 1e-10));
    let rho = spectral_propagate(&sys.liouvillian, &DensityMatrix::basis_state(EE), &[1e12]).unwrap();
    let fidelity = rho.states[0].matrix()[(GG, GG)].re;
    assert!(fidelity > 1.0 - 1e-4, "{fidelity}");
}

#[test]
fn dicke_chain_closed_form() {
    let p = SystemParams {
        gamma_dp1: 0.0,
        gamma_dp2: 0.0,
        ..SystemParams::default()
    };
    let sys = OpenSystem::global(&p).unwrap();
    let basis = eigen_system(&p).unwrap();
    let times: Vec<f64> = (0..=60).map(|k| 10f64.powf(k as f64 / 10.0)).collect();
    let traj = spectral_propagate(&sys.liouvillian, &DensityMatrix::basis_state(EE), &times).unwrap();
    let g = p.gamma_rad;
    for (t, rho) in times.iter().zip(&traj.states) {
        let pop = populations(rho, &basis).unwrap();
        let d = (-2.0 * g * t).exp();
        assert!((pop.p_ee - d).abs() < 1e-6);
        assert!((pop.p_s - 2.0 * g * t * d).abs() < 1e-6);
        assert!(pop.p_as.abs() < 1e-9);
        assert!(concurrence(rho).unwrap() <= 1e-9);
    }
}

#[test]
fn spectral_and_rk_agree() {
    let sys = OpenSystem::global(&SystemParams::default()).unwrap();
    let rho0 = DensityMatrix::basis_state(EE);
    let times = [1e4, 1e5];
    let a = propagate(&sys, &rho0, &times, Propagator::Spectral).unwrap();
    let b = propagate(&sys, &rho0, &times, Propagator::Rk).unwrap();
    for (x, y) in a.states.iter().zip(&b.states) {
        assert!(max_abs(&(x.matrix() - y.matrix())) < 1e-8);
    }
}

#[test]
fn expm_agrees_with_spectral_from_a_coherent_state() {
    let sys = OpenSystem::global(&detuned(0.4)).unwrap();
    let rho0 = DensityMatrix::pure(&((basis_ket(EG) + basis_ket(GE) * c(0.0, 1.0)) * c(0.5f64.sqrt(), 0.0)));
    let times: Vec<f64> = (0..=40).map(|k| 10f64.powf(k as f64 / 5.0 - 1.0)).collect();
    let a = propagate(&sys, &rho0, &times, Propagator::Spectral).unwrap();
    let b = propagate(&sys, &rho0, &times, Propagator::Expm).unwrap();
    for (x, y) in a.states.iter().zip(&b.states) {
        assert!(max_abs(&(x.matrix() - y.matrix())) < 1e-9);
    }
}

#[test]
fn semigroup_property() {
    let sys = OpenSystem::global(&detuned(0.3)).unwrap();
    let rho0 = DensityMatrix::pure(&symmetric_ket());
    for (t1, t2) in [(3.0, 7.0), (1e3, 4e4), (2e5, 1e6)] {
        let direct = spectral_propagate(&sys.liouvillian, &rho0, &[t1 + t2]).unwrap();
        let mid = spectral_propagate(&sys.liouvillian, &rho0, &[t1]).unwrap();
        let two = spectral_propagate(&sys.liouvillian, &mid.states[0], &[t2]).unwrap();
        assert!(max_abs(&(direct.states[0].matrix() - two.states[0].matrix())) < 1e-10);
    }
}

#[test]
fn full_model_follows_rate_equations() {
    let p = SystemParams::default();
    let sys = OpenSystem::global(&p).unwrap();
    let basis = eigen_system(&p).unwrap();
    let times: Vec<f64> = (0..=100).map(|k| 10f64.powf(k as f64 / 10.0)).collect();
    let traj = spectral_propagate(&sys.liouvillian, &DensityMatrix::basis_state(EE), &times).unwrap();
    let rates = solve_rates(&PopulationVector::EXCITED, &times, &p).unwrap();
    for (rho, q) in traj.states.iter().zip(&rates) {
        let full = populations(rho, &basis).unwrap().to_array();
        for (a, b) in full.iter().zip(q.to_array()) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

#[test]
fn kms_ratio_between_conjugate_channels() {
    let p = detuned(0.6);
    let chs = global_jump_channels(&p).unwrap();
    let rate = |l: ChannelLabel| chs.iter().find(|ch| ch.label == l).unwrap();
    for (down, up) in [(ChannelLabel::Rad1, ChannelLabel::Rad1Dagger), (ChannelLabel::Rad2, ChannelLabel::Rad2Dagger)] {
        let (d, u) = (rate(down), rate(up));
        assert_eq!(d.transition_frequency, -u.transition_frequency);
        assert_eq!(u.rate, (-u.transition_frequency / p.temp_rad).exp() * d.rate);
    }
}

fn qubit_unitary(a: f64, b: f64, phi: f64) -> Matrix2<C64> {
    let h = Matrix2::new(c(a, 0.0), c(b, phi), c(b, -phi), c(-a, 0.0));
    (h * c(0.0, 1.0)).exp()
}

fn kron2(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Operator {
    Matrix4::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
}

fn density_strategy() -> impl Strategy<Value = DensityMatrix> {
    proptest::collection::vec(-1.0f64..1.0, 32).prop_map(|v| {
        let a = Operator::from_fn(|i, j| c(v[4 * i + j], v[16 + 4 * i + j]));
        let m = a * a.adjoint();
        let tr = m.trace();
        DensityMatrix::from_product(m / tr)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenbasis_diagonalizes_hamiltonian(w1 in 0.01f64..10.0, w2 in 0.01f64..10.0, g in 0.01f64..10.0) {
        let p = SystemParams {
            omega1: w1,
            omega2: w2,
            coupling: g,
            ..SystemParams::default()
        };
        let basis = eigen_system(&p).unwrap();
        prop_assert!(basis.unitarity_error() < 1e-12);
        let h = build_hamiltonian(&p);
        for k in 0..4 {
            let v = basis.column(k);
            let r = h * v - v * c(basis.frequencies[k], 0.0);
            prop_assert!(r.iter().all(|z| z.norm() < 1e-11 * (w1 + w2 + g)));
        }
    }

    #[test]
    fn concurrence_is_local_unitary_invariant(
        rho in density_strategy(),
        u in (-2.0f64..2.0, -2.0f64..2.0, -3.0f64..3.0),
        v in (-2.0f64..2.0, -2.0f64..2.0, -3.0f64..3.0),
    ) {
        let w = kron2(&qubit_unitary(u.0, u.1, u.2), &qubit_unitary(v.0, v.1, v.2));
        let rotated = DensityMatrix::from_product(w * rho.matrix() * w.adjoint());
        let (a, b) = (concurrence(&rho).unwrap(), concurrence(&rotated).unwrap());
        prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
    }

    #[test]
    fn entropy_is_basis_independent(rho in density_strategy(), h in proptest::collection::vec(-1.0f64..1.0, 32)) {
        let gen = Operator::from_fn(|i, j| c(h[4 * i + j], h[16 + 4 * i + j]));
        let u = ((gen + gen.adjoint()) * c(0.0, 1.0)).exp();
        let rotated = DensityMatrix::from_product(u * rho.matrix() * u.adjoint());
        let (a, b) = (von_neumann_entropy(&rho).unwrap(), von_neumann_entropy(&rotated).unwrap());
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=4f64.ln() + 1e-12).contains(&a));
    }

    #[test]
    fn bell_states_are_maximally_entangled(theta in 0.0f64..std::f64::consts::TAU) {
        let phase = C64::from_polar(1.0, theta);
        let r = c(0.5f64.sqrt(), 0.0);
        for ket in [
            (basis_ket(EE) + basis_ket(GG) * phase) * r,
            (basis_ket(EG) + basis_ket(GE) * phase) * r,
        ] {
            let cc = concurrence(&DensityMatrix::pure(&ket)).unwrap();
            prop_assert!((cc - 1.0).abs() < 1e-10);
        }
        prop_assert!(concurrence(&DensityMatrix::pure(&antisymmetric_ket())).unwrap() > 1.0 - 1e-10);
    }

    #[test]
    fn trajectories_stay_physical(y in -2.0f64..2.0, k in 0usize..4) {
        let p = detuned(y);
        let sys = OpenSystem::global(&p).unwrap();
        let times: Vec<f64> = (0..=20).map(|i| 10f64.powf(i as f64 / 2.0)).collect();
        let traj = spectral_propagate(&sys.liouvillian, &DensityMatrix::basis_state(k), &times).unwrap();
        for rho in &traj.states {
            prop_assert!((rho.trace() - c(1.0, 0.0)).norm() < 1e-9);
            prop_assert!(rho.min_eigenvalue() > -1e-9);
        }
    }
}
