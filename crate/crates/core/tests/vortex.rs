use std::f64::consts::PI;

use euler_alpha::timestepper::StepController;
use euler_alpha::vortex::{blob_hamiltonian, evolve, velocity_field, BlobKernel, VortexSystem};

/// Decaying solution of `g'' - g'/x - g = 0` with `g(0) = 1`, tabulated by
/// classical RK4 in `u = ln x`, where the system `g_u = x p`, `p_u = p + x g`
/// is regular. Integrating inward from `x = 40` keeps the decaying solution
/// dominant, so crude starting values suffice.
fn radial_profile(points: &[f64]) -> Vec<f64> {
    let (u_start, u_stop, h) = (40f64.ln(), 1e-7f64.ln(), -2e-4);
    let f = |u: f64, y: [f64; 2]| {
        let x = u.exp();
        [x * y[1], y[1] + x * y[0]]
    };
    let mut targets: Vec<(usize, f64)> = points.iter().map(|x| x.ln()).enumerate().collect();
    targets.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut values = vec![0.0; points.len()];
    let mut y = [1e-12, -1e-12];
    let mut u = u_start;
    let mut next = 0;
    let step = |u: f64, y: [f64; 2], h: f64| {
        let k1 = f(u, y);
        let k2 = f(u + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
        let k3 = f(u + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
        let k4 = f(u + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    };
    while u > u_stop {
        while next < targets.len() && targets[next].1 > u + h {
            let (idx, ut) = targets[next];
            values[idx] = step(u, y, ut - u)[0];
            next += 1;
        }
        y = step(u, y, h);
        u += h;
    }
    // g(x) = 1 + O(x² ln x), so the value at 1e-7 normalises to 1e-12.
    values.iter().map(|v| v / y[0]).collect()
}

#[test]
fn blob_speed_matches_radial_boundary_value_problem() {
    let alpha = 0.1;
    let kernel = BlobKernel::bessel_k0(alpha).unwrap();
    let xs = [0.05, 0.5, 1.0, 2.0, 5.0, 10.0];
    let g = radial_profile(&xs);
    for (&x, &gx) in xs.iter().zip(&g) {
        let r = x * alpha;
        let expected = (1.0 - gx) / (2.0 * PI * r);
        let got = kernel.tangential_speed(r, 1.0).unwrap();
        assert!(
            ((got - expected) / expected).abs() < 1e-6,
            "r/α = {x}: speed {got} vs {expected}"
        );
    }
}

fn co_rotation_period(d: f64, gamma_sum: f64, kernel: &BlobKernel) -> f64 {
    let speed_factor = kernel.tangential_speed(d, 1.0).unwrap() * 2.0 * PI * d;
    4.0 * PI * PI * d * d / (gamma_sum * speed_factor)
}

/// Rotation angle of the separation vector between the two blobs.
fn swept_angle(system: &VortexSystem, t_end: f64) -> f64 {
    let mut ctrl = StepController::new(1e-12, 1e-14, 1e-3);
    let traj = evolve(system, t_end, &mut ctrl).unwrap();
    let mut total = 0.0;
    let sep = |p: &[[f64; 2]]| [p[1][0] - p[0][0], p[1][1] - p[0][1]];
    for w in traj.positions.windows(2) {
        let (a, b) = (sep(&w[0]), sep(&w[1]));
        total += (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]);
    }
    total
}

#[test]
fn point_pair_co_rotates_with_closed_form_period() {
    let (g1, g2, d) = (1.3, 0.7, 0.8);
    let kernel = BlobKernel::point();
    let system = VortexSystem::new(vec![[0.2, -0.1], [0.2 + d, -0.1]], vec![g1, g2], kernel).unwrap();
    let period = 4.0 * PI * PI * d * d / (g1 + g2);
    let angle = swept_angle(&system, period);
    assert!((angle / (2.0 * PI) - 1.0).abs() < 1e-8, "angle {angle}");
}

#[test]
fn blob_pair_rotates_slower_by_the_kernel_factor() {
    let (alpha, d) = (0.5, 0.6);
    let kernel = BlobKernel::bessel_k0(alpha).unwrap();
    let system = VortexSystem::new(vec![[0.0, 0.0], [d, 0.0]], vec![1.0, 1.0], kernel).unwrap();
    let period = co_rotation_period(d, 2.0, &kernel);
    assert!(period > 4.0 * PI * PI * d * d / 2.0 * 1.5);
    let angle = swept_angle(&system, period);
    assert!((angle / (2.0 * PI) - 1.0).abs() < 1e-8, "angle {angle}");
}

#[test]
fn blob_velocity_field_is_divergence_free() {
    let kernel = BlobKernel::bessel_k0(0.2).unwrap();
    let system = VortexSystem::new(
        vec![[0.0, 0.0], [0.3, 0.1], [-0.2, 0.4], [0.1, -0.35]],
        vec![1.0, -0.6, 0.8, 0.4],
        kernel,
    )
    .unwrap();
    let h = 1e-4;
    for q in [[0.05, 0.02], [0.4, 0.4], [-0.5, -0.1], [0.25, 0.1], [1.5, -2.0]] {
        let pts = [[q[0] + h, q[1]], [q[0] - h, q[1]], [q[0], q[1] + h], [q[0], q[1] - h]];
        let u = velocity_field(&system, &pts).unwrap();
        let div = (u[0][0] - u[1][0] + u[2][1] - u[3][1]) / (2.0 * h);
        let scale = u.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max) / 0.2;
        assert!(div.abs() < 1e-6 * scale, "divergence {div} at {q:?}");
    }
}

#[test]
fn invariants_hold_for_a_blob_cluster() {
    let kernel = BlobKernel::bessel_k0(0.15).unwrap();
    let system = VortexSystem::new(
        vec![[0.0, 0.0], [0.3, 0.1], [-0.2, 0.4], [0.1, -0.35], [0.5, -0.2]],
        vec![1.0, -0.6, 0.8, 0.4, 0.3],
        kernel,
    )
    .unwrap();
    let mut ctrl = StepController::new(1e-11, 1e-13, 1e-3);
    let traj = evolve(&system, 2.0, &mut ctrl).unwrap();
    let last = VortexSystem { positions: traj.final_positions().to_vec(), ..system.clone() };
    let h0 = blob_hamiltonian(&system).unwrap();
    let h1 = blob_hamiltonian(&last).unwrap();
    assert!(((h1 - h0) / h0).abs() < 1e-8);
    let (p0, p1) = (system.linear_impulse(), last.linear_impulse());
    assert!((p0[0] - p1[0]).abs() < 1e-9 && (p0[1] - p1[1]).abs() < 1e-9);
    assert!((system.angular_impulse() - last.angular_impulse()).abs() < 1e-9);
    assert_eq!(system.total_circulation(), last.total_circulation());
}
