mod support;

use euler_alpha::diagnostics::energies;
use euler_alpha::dynamics::{Dynamics, PhysicsParams};
use euler_alpha::spectral::{Spectral, SpectralField};
use euler_alpha::timestepper::{advance, StepController};
use proptest::prelude::*;
use support::{galerkin_rhs, grid, relative_max_error};

fn random_state(spectral: &Spectral, seed: u64) -> SpectralField {
    spectral.random_field(seed, |k| if k > 0.0 { 1.0 / (1.0 + k * k) } else { 0.0 })
}

#[test]
fn rhs_matches_dense_triad_sum_with_dissipation() {
    let spectral = Spectral::new(grid(16));
    for (seed, alpha) in [(1, 0.0), (2, 0.3)] {
        let params = PhysicsParams { alpha, nu: 0.07, delta: 0.4, forcing: None };
        let dynamics = Dynamics::new(spectral.clone(), params).unwrap();
        let omega = random_state(&spectral, seed);
        let fast = dynamics.rhs(&omega).unwrap();
        let slow = galerkin_rhs(&omega, alpha, 0.07, 0.4);
        let err = relative_max_error(fast.coeffs(), &slow);
        assert!(err < 1e-12, "alpha {alpha}: relative error {err}");
    }
}

#[test]
fn rhs_ignores_modes_beyond_the_dealiasing_radius() {
    let spectral = Spectral::new(grid(24));
    let dynamics = Dynamics::new(spectral.clone(), PhysicsParams::inviscid(0.1)).unwrap();
    let omega = random_state(&spectral, 5);
    let mut polluted = omega.clone();
    polluted.set_mode_pair(9, 7, num_complex::Complex64::new(0.3, -0.2)).unwrap();
    assert_eq!(dynamics.rhs(&omega).unwrap(), dynamics.rhs(&polluted).unwrap());
}

#[test]
fn tiny_alpha_approaches_the_euler_tendency() {
    let spectral = Spectral::new(grid(64));
    let omega = random_state(&spectral, 11);
    let euler = Dynamics::new(spectral.clone(), PhysicsParams::inviscid(0.0)).unwrap();
    let alpha = PhysicsParams::alpha_from_k_alpha(1e6).unwrap();
    let averaged = Dynamics::new(spectral.clone(), PhysicsParams::inviscid(alpha)).unwrap();
    let err = relative_max_error(averaged.rhs(&omega).unwrap().coeffs(), euler.rhs(&omega).unwrap().coeffs());
    assert!(err < 1e-6, "relative difference {err}");
}

#[test]
fn rhs_is_deterministic() {
    let spectral = Spectral::new(grid(32));
    let dynamics = Dynamics::new(spectral.clone(), PhysicsParams::inviscid(0.05)).unwrap();
    let omega = random_state(&spectral, 3);
    let a = dynamics.rhs(&omega).unwrap();
    let b = dynamics.rhs(&omega).unwrap();
    assert_eq!(a, b);
    assert!(a.hermitian_defect() == 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Inviscid, unforced tendencies conserve `E_H1` and `Z_H2` exactly, so a
    /// short tightly controlled integration preserves both.
    #[test]
    fn inviscid_flow_conserves_averaged_invariants(seed in 0u64..1000, k_alpha in prop_oneof![Just(0.0), 4.0f64..20.0]) {
        let spectral = Spectral::new(grid(32));
        let alpha = PhysicsParams::alpha_from_k_alpha(k_alpha).unwrap();
        let dynamics = Dynamics::new(spectral.clone(), PhysicsParams::inviscid(alpha)).unwrap();
        let mut omega = random_state(&spectral, seed);
        let before = energies(&spectral, &omega, alpha);
        let mut t = 0.0;
        let mut ctrl = StepController::new(1e-10, 1e-12, 1e-3);
        let mut rhs = |_t: f64, w: &SpectralField| dynamics.rhs(w);
        advance(&mut omega, &mut t, &mut rhs, &mut ctrl, 0.5, |_, _| {}).unwrap();
        let after = energies(&spectral, &omega, alpha);
        prop_assert!(((after.energy_h1 - before.energy_h1) / before.energy_h1).abs() < 1e-8);
        prop_assert!(((after.enstrophy_h2 - before.enstrophy_h2) / before.enstrophy_h2).abs() < 1e-8);
    }

    /// The nonlinear term exchanges no `E_H1` or `Z_H2`: `⟨ψ, N⟩ = ⟨q, N⟩ = 0`
    /// for the tendency `N = (1 - α²Δ)·rhs`.
    #[test]
    fn nonlinear_tendency_is_orthogonal_to_invariant_duals(seed in 0u64..1000, alpha in 0.0f64..0.3) {
        let spectral = Spectral::new(grid(32));
        let dynamics = Dynamics::new(spectral.clone(), PhysicsParams::inviscid(alpha)).unwrap();
        let omega = random_state(&spectral, seed);
        let n = spectral.helmholtz(&dynamics.rhs(&omega).unwrap(), alpha).unwrap();
        let psi = spectral.poisson_solve(&omega);
        let q = spectral.helmholtz(&omega, alpha).unwrap();
        let dot = |a: &SpectralField, b: &SpectralField| -> f64 {
            a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x.conj() * y).re).sum()
        };
        let scale = |a: &SpectralField| (dot(a, a) * dot(&n, &n)).sqrt();
        prop_assert!(dot(&psi, &n).abs() < 1e-12 * scale(&psi));
        prop_assert!(dot(&q, &n).abs() < 1e-12 * scale(&q));
    }
}
