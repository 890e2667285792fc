use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use proptest::prelude::*;
use qres_core::entanglement::{concurrence, concurrence_report, initial_state, xi, xi_eigenvalues, InitialState};
use qres_core::propagator::{evolve, resonance_data, DensityMatrix4};
use qres_core::rates::{lowest_order_rates, CouplingSet};
use qres_core::solvable::{exact_evolve, resonance_evolve_ec, MemoryFunctions, MemoryValues};
use qres_core::spectral::{emission_fraction, sigma, sigma_minus, FormFactor, SpectralData};
use qres_core::system::{cluster_partition, hamiltonian_eigenvalues, SystemParams};

fn system() -> impl Strategy<Value = SystemParams> {
    (0.2f64..2.0, 1.05f64..3.0, 0.2f64..5.0)
        .prop_filter("away from B2 = 2 B1", |(_, r, _)| (r - 2.0).abs() > 0.05)
        .prop_map(|(b1, r, beta)| SystemParams::new(b1, b1 * r, beta).unwrap())
}

fn symmetric_couplings() -> impl Strategy<Value = CouplingSet> {
    (0.0f64..0.05, 0.0f64..0.05, 0.0f64..0.05, 0.0f64..0.05).prop_map(|(l, m, k, n)| CouplingSet::symmetric(l, m, k, n))
}

fn any_couplings() -> impl Strategy<Value = CouplingSet> {
    prop::array::uniform8(0.0f64..0.05).prop_map(|a| CouplingSet {
        lambda1: a[0],
        lambda2: a[1],
        mu1: a[2],
        mu2: a[3],
        kappa1: a[4],
        kappa2: a[5],
        nu1: a[6],
        nu2: a[7],
    })
}

/// Mixture of two random pure states.
fn state() -> impl Strategy<Value = DensityMatrix4> {
    (prop::array::uniform16(-1.0f64..1.0), 0.0f64..1.0).prop_filter_map("vanishing trace", |(a, w)| {
        let v = Vector4::from_fn(|i, _| Complex64::new(a[i], a[i + 4]));
        let u = Vector4::from_fn(|i, _| Complex64::new(a[i + 8], a[i + 12]));
        let p = v * v.adjoint() + u * u.adjoint() * Complex64::from(w);
        let tr = p.trace();
        (tr.re > 1e-3).then(|| DensityMatrix4::new(p / tr).unwrap())
    })
}

fn form_factor() -> impl Strategy<Value = FormFactor> {
    (0u32..4, 1u8..=2, 0.1f64..3.0).prop_map(|(n, m, w)| FormFactor::new(n as f64 - 0.5, m, w).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sigma_is_nonnegative(x in 0.0f64..20.0, beta in 0.05f64..10.0, h in form_factor()) {
        prop_assert!(sigma(x, beta, &h).unwrap() >= 0.0);
    }

    #[test]
    fn emission_relation(x in 0.01f64..5.0, beta in 0.05f64..10.0, g in form_factor()) {
        let s = sigma(x, beta, &g).unwrap();
        let m = sigma_minus(x, beta, &g).unwrap();
        let want = (2.0 * beta * x).exp() / ((2.0 * beta * x).exp() + 1.0) * s;
        prop_assert!((m - want).abs() <= 1e-8 * want.abs().max(1e-300));
        prop_assert!((emission_fraction(x, beta) * s - want).abs() <= 1e-12 * want.abs());
    }

    #[test]
    fn five_upper_clusters_and_gibbs_normalization(sys in system()) {
        let p = cluster_partition(&hamiltonian_eigenvalues(&sys));
        prop_assert_eq!(p.clusters.len(), 9);
        prop_assert_eq!(p.upper().len(), 5);
        let total: usize = p.clusters.iter().map(|c| c.multiplicity()).sum();
        prop_assert_eq!(total, 16);
        let w = sys.gibbs_weights();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rates_symmetric_under_lambda_mu_swap(sys in system(), c in any_couplings()) {
        let sd = SpectralData::renormalized(&sys);
        let swapped = CouplingSet { lambda1: c.mu1, mu1: c.lambda1, lambda2: c.mu2, mu2: c.lambda2, ..c };
        let a = lowest_order_rates(&c, &sd, &sys).as_array();
        let b = lowest_order_rates(&swapped, &sd, &sys).as_array();
        for (x, y) in a.iter().zip(b) {
            prop_assert!((x - y).abs() <= 1e-15 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn rates_scale_quadratically(sys in system(), c in any_couplings(), s in 0.1f64..10.0) {
        let sd = SpectralData::renormalized(&sys);
        let a = lowest_order_rates(&c, &sd, &sys);
        let b = lowest_order_rates(&c.scaled(s), &sd, &sys);
        // rates are sums of signed terms, so the error is relative to their sizes
        let size = a.as_array().iter().map(|r| r.abs()).sum::<f64>() + a.y2 + a.y3;
        for (x, y) in a.as_array().iter().zip(b.as_array()) {
            prop_assert!((y - s * s * x).abs() <= 1e-12 * s * s * size);
        }
        prop_assert!(a.y2 >= 0.0 && a.y3 >= 0.0);
    }

    #[test]
    fn hermitian_and_trace_preserving(sys in system(), c in symmetric_couplings(), rho in state(), t in 0.0f64..1e5) {
        let rd = resonance_data(&c, &SpectralData::renormalized(&sys), &sys).unwrap();
        let r = evolve(&rho, t, &rd);
        prop_assert_eq!(*r.matrix(), r.matrix().adjoint());
        prop_assert!((r.trace() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn semigroup(sys in system(), c in symmetric_couplings(), rho in state(), t in 0.0f64..2e3, r in 0.0f64..2e3) {
        let rd = resonance_data(&c, &SpectralData::renormalized(&sys), &sys).unwrap();
        let two_step = evolve(&evolve(&rho, t, &rd), r, &rd);
        let one_step = evolve(&rho, t + r, &rd);
        prop_assert!(two_step.max_abs_diff(&one_step) < 1e-9);
    }

    #[test]
    fn only_sum_of_squares_matters(sys in system(), a in 0.0f64..0.05, k in 0.0f64..0.05, n in 0.0f64..0.05, rho in state(), t in 0.0f64..1e4) {
        let sd = SpectralData::renormalized(&sys);
        let lam = resonance_data(&CouplingSet::symmetric(a, 0.0, k, n), &sd, &sys).unwrap();
        let mu = resonance_data(&CouplingSet::symmetric(0.0, a, k, n), &sd, &sys).unwrap();
        prop_assert!(evolve(&rho, t, &lam).max_abs_diff(&evolve(&rho, t, &mu)) < 1e-12);
    }

    #[test]
    fn corner_element_envelope(sys in system(), c in symmetric_couplings(), rho in state(), t in 0.0f64..1e4) {
        let rd = resonance_data(&c, &SpectralData::renormalized(&sys), &sys).unwrap();
        let r = evolve(&rho, t, &rd);
        let want = (-t * rd.eps_plus.im).exp() * rho.get(1, 4).norm();
        prop_assert!((r.get(1, 4).norm() - want).abs() <= 1e-12 * want.max(1e-300));
    }

    #[test]
    fn exact_model_is_a_positive_channel(sys in system(), k in 0.0f64..0.3, n in 0.0f64..0.3, rho in state(), s in 0.0f64..1e3, g in 0.0f64..1e3, t in 0.0f64..1e3) {
        let mem = MemoryValues { s, gamma: g };
        let r = exact_evolve(&rho, t, k, n, &sys, mem);
        prop_assert!(r.min_eigenvalue() >= -1e-12);
        prop_assert!((r.trace() - 1.0).abs() < 1e-12);
        // the S phase never changes moduli
        let no_phase = exact_evolve(&rho, t, k, n, &sys, MemoryValues { s: 0.0, gamma: g });
        for m in 1..=4 {
            for l in 1..=4 {
                prop_assert!((r.get(m, l).norm() - no_phase.get(m, l).norm()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn resonance_energy_conserving_bounds(sys in system(), k in 0.0f64..0.1, n in 0.0f64..0.1, rho in state(), t in 0.0f64..1e4) {
        let sd = SpectralData::renormalized(&sys);
        let r = resonance_evolve_ec(&rho, t, k, n, &sys, &sd);
        prop_assert!((r.trace() - 1.0).abs() < 1e-14);
        prop_assert!(r.min_eigenvalue() >= -10.0 * (k * k + n * n) - 1e-14);
    }

    #[test]
    fn concurrence_in_unit_interval(sys in system(), c in symmetric_couplings(), rho in state(), t in 0.0f64..1e4) {
        let v = concurrence(&rho).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        let rd = resonance_data(&c, &SpectralData::renormalized(&sys), &sys).unwrap();
        let rep = concurrence_report(&evolve(&rho, t, &rd), c.kappa_max()).unwrap();
        prop_assert!((0.0..=1.0).contains(&rep.value));
    }

    #[test]
    fn xi_eigenvalues_sum_to_trace(rho in state()) {
        let ev = xi_eigenvalues(&rho).unwrap();
        prop_assert!((ev.iter().sum::<f64>() - xi(&rho).trace().re).abs() < 1e-9);
    }

    #[test]
    fn local_phases_leave_concurrence_unchanged(rho in state(), t1 in 0.0f64..6.3, t2 in 0.0f64..6.3) {
        let s1 = [1.0, 1.0, -1.0, -1.0];
        let s2 = [1.0, -1.0, 1.0, -1.0];
        let u = Matrix4::from_diagonal(&Vector4::from_fn(|i, _| Complex64::new(0.0, t1 * s1[i] + t2 * s2[i]).exp()));
        let rotated = DensityMatrix4::new(u * rho.matrix() * u.adjoint()).unwrap();
        prop_assert!((concurrence(&rho).unwrap() - concurrence(&rotated).unwrap()).abs() < 1e-10);
    }
}

/// Concurrence along exact trajectories changes by at most `L·Δt` between
/// samples, with `L` fixed from the fastest decay rate of the model.
#[test]
fn concurrence_continuous_along_exact_trajectories() {
    let sys = SystemParams::new(1.0, 1.25, 1.0).unwrap();
    let mf = MemoryFunctions::new(FormFactor::default_conserving(), 1.0).unwrap();
    let (k, n) = (0.1, 0.05);
    // |dC/dt| ≤ Σ|d ρ_mn/dt| ≤ 4·max rate, rate ≤ (16κ² + 8ν²)·|dΓ/dt|, |dΓ/dt| ≲ 1
    let lip = 4.0 * (16.0 * k * k + 8.0 * n * n) * 2.0;
    let dt = 0.5;
    for p in [0.1, 0.3, 0.5, 0.8] {
        let rho0 = initial_state(&InitialState::with_p(p)).unwrap();
        let mut prev = concurrence(&rho0).unwrap();
        for i in 1..=200 {
            let t = i as f64 * dt;
            let rho = exact_evolve(&rho0, t, k, n, &sys, mf.eval(t).unwrap());
            let c = concurrence(&rho).unwrap();
            assert!((c - prev).abs() < lip * dt, "p={p} t={t}: jump {}", (c - prev).abs());
            prev = c;
        }
    }
}
