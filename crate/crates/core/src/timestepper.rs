//! Embedded Cash-Karp Runge-Kutta 5(4) integrator with adaptive step control.
//!
//! The fifth-order solution is propagated; the difference to the embedded
//! fourth-order solution drives the step-size controller.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// State vectors the integrator can combine and measure.
pub trait OdeState: Clone {
    /// `self += a * x`.
    fn add_scaled(&mut self, a: f64, x: &Self);

    /// Sum of squared weighted errors and the number of components, with
    /// weight `atol + rtol * max(|y0|, |y1|)` per component.
    fn weighted_error(&self, y0: &Self, y1: &Self, rtol: f64, atol: f64) -> (f64, usize);

    fn is_finite(&self) -> bool;
}

impl OdeState for f64 {
    fn add_scaled(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }

    fn weighted_error(&self, y0: &Self, y1: &Self, rtol: f64, atol: f64) -> (f64, usize) {
        let w = atol + rtol * y0.abs().max(y1.abs());
        ((self / w).powi(2), 1)
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl OdeState for Vec<f64> {
    fn add_scaled(&mut self, a: f64, x: &Self) {
        for (y, xv) in self.iter_mut().zip(x) {
            *y += a * xv;
        }
    }

    fn weighted_error(&self, y0: &Self, y1: &Self, rtol: f64, atol: f64) -> (f64, usize) {
        let sum = self
            .iter()
            .zip(y0.iter().zip(y1))
            .map(|(e, (a, b))| {
                let w = atol + rtol * a.abs().max(b.abs());
                (e / w).powi(2)
            })
            .sum();
        (sum, self.len())
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl OdeState for SpectralField {
    fn add_scaled(&mut self, a: f64, x: &Self) {
        SpectralField::add_scaled(self, a, x);
    }

    fn weighted_error(&self, y0: &Self, y1: &Self, rtol: f64, atol: f64) -> (f64, usize) {
        let norm = |c: &Complex64| c.norm();
        let sum = self
            .coeffs()
            .iter()
            .zip(y0.coeffs().iter().zip(y1.coeffs().iter()))
            .map(|(e, (a, b))| {
                let w = atol + rtol * norm(a).max(norm(b));
                (norm(e) / w).powi(2)
            })
            .sum();
        (sum, self.coeffs().len())
    }

    fn is_finite(&self) -> bool {
        self.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

// Cash-Karp tableau.
const C: [f64; 6] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 3.0 / 5.0, 1.0, 7.0 / 8.0];
const A: [&[f64]; 6] = [
    &[],
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0],
    &[-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0],
    &[
        1631.0 / 55296.0,
        175.0 / 512.0,
        575.0 / 13824.0,
        44275.0 / 110592.0,
        253.0 / 4096.0,
    ],
];
const B5: [f64; 6] = [
    37.0 / 378.0,
    0.0,
    250.0 / 621.0,
    125.0 / 594.0,
    0.0,
    512.0 / 1771.0,
];
const B4: [f64; 6] = [
    2825.0 / 27648.0,
    0.0,
    18575.0 / 48384.0,
    13525.0 / 55296.0,
    277.0 / 14336.0,
    1.0 / 4.0,
];

/// One Cash-Karp step of size `dt` from `(t, y)`.
///
/// Returns the fifth-order candidate and the error field (fifth minus
/// fourth order). `y` is not modified.
pub fn ck_step<S, F>(y: &S, t: f64, dt: f64, rhs: &mut F) -> Result<(S, S)>
where
    S: OdeState,
    F: FnMut(f64, &S) -> Result<S>,
{
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("step size must be positive, got {dt}")));
    }
    let mut stages: Vec<S> = Vec::with_capacity(6);
    for s in 0..6 {
        let mut ys = y.clone();
        for (a, k) in A[s].iter().zip(&stages) {
            if *a != 0.0 {
                ys.add_scaled(dt * a, k);
            }
        }
        let ts = t + C[s] * dt;
        let k = rhs(ts, &ys)?;
        if !k.is_finite() {
            return Err(Error::Divergence { t: ts });
        }
        stages.push(k);
    }
    let mut candidate = y.clone();
    let mut error = y.clone();
    error.add_scaled(-1.0, y);
    for (s, k) in stages.iter().enumerate() {
        if B5[s] != 0.0 {
            candidate.add_scaled(dt * B5[s], k);
        }
        error.add_scaled(dt * (B5[s] - B4[s]), k);
    }
    Ok((candidate, error))
}

/// Adaptive step-size controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepController {
    pub rtol: f64,
    pub atol: f64,
    pub safety: f64,
    pub min_shrink: f64,
    pub max_grow: f64,
    /// Step to attempt next.
    pub dt: f64,
    pub dt_min: f64,
}

impl StepController {
    pub fn new(rtol: f64, atol: f64, dt: f64) -> Self {
        Self {
            rtol,
            atol,
            safety: 0.9,
            min_shrink: 0.1,
            max_grow: 5.0,
            dt,
            dt_min: 1e-12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.rtol >= 0.0
            && self.atol >= 0.0
            && self.rtol + self.atol > 0.0
            && 0.0 < self.min_shrink
            && self.min_shrink < 1.0
            && self.max_grow > 1.0
            && self.safety > 0.0
            && self.dt > 0.0
            && self.dt_min >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid step controller {self:?}")))
        }
    }

    /// RMS of the weighted error; `<= 1` means the step is acceptable.
    pub fn error_norm<S: OdeState>(&self, error: &S, y0: &S, y1: &S) -> f64 {
        let (sum, count) = error.weighted_error(y0, y1, self.rtol, self.atol);
        if count == 0 {
            0.0
        } else {
            (sum / count as f64).sqrt()
        }
    }

    fn factor(&self, err: f64, exponent: f64) -> f64 {
        if err == 0.0 {
            return self.max_grow;
        }
        (self.safety * err.powf(-exponent)).clamp(self.min_shrink, self.max_grow)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    pub error_estimate: f64,
    /// Time at the start of the attempted step.
    pub t: f64,
    pub dt_used: f64,
    pub dt_next: f64,
}

/// Integrates `state` from `*t` to exactly `t_target`.
///
/// `on_accept(t, state)` runs on every accepted state before the next step and sits
/// outside the error estimate. On failure `state` and `*t` hold the last
/// accepted values.
pub fn advance<S, F, P>(
    state: &mut S,
    t: &mut f64,
    rhs: &mut F,
    controller: &mut StepController,
    t_target: f64,
    mut on_accept: P,
) -> Result<Vec<StepOutcome>>
where
    S: OdeState,
    F: FnMut(f64, &S) -> Result<S>,
    P: FnMut(f64, &mut S),
{
    controller.validate()?;
    if !(t_target >= *t) {
        return Err(Error::Parameter(format!(
            "target time {t_target} precedes current time {}",
            *t
        )));
    }
    let mut log = Vec::new();
    while *t < t_target {
        let remaining = t_target - *t;
        let (dt, last) = if controller.dt >= remaining {
            (remaining, true)
        } else {
            (controller.dt, false)
        };
        let t_start = *t;
        let (candidate, error) = ck_step(state, t_start, dt, rhs)?;
        let err = controller.error_norm(&error, state, &candidate);
        let accepted = err <= 1.0;
        if accepted {
            *state = candidate;
            *t = if last { t_target } else { *t + dt };
            on_accept(*t, state);
            let proposed = dt * controller.factor(err, 1.0 / 5.0);
            controller.dt = if last {
                controller.dt.max(proposed)
            } else {
                proposed
            };
        } else {
            let shrink = if err.is_nan() {
                controller.min_shrink
            } else {
                controller.factor(err, 1.0 / 4.0).min(1.0)
            };
            controller.dt = dt * shrink;
            if controller.dt < controller.dt_min {
                return Err(Error::StepUnderflow {
                    t: *t,
                    dt: controller.dt,
                    dt_min: controller.dt_min,
                });
            }
        }
        log.push(StepOutcome {
            accepted,
            error_estimate: err,
            t: t_start,
            dt_used: dt,
            dt_next: controller.dt,
        });
    }
    Ok(log)
}

/// Fixed-step integration with the fifth-order solution, no error control.
pub fn integrate_fixed<S, F>(state: &S, t0: f64, dt: f64, steps: usize, rhs: &mut F) -> Result<S>
where
    S: OdeState,
    F: FnMut(f64, &S) -> Result<S>,
{
    let mut y = state.clone();
    for i in 0..steps {
        y = ck_step(&y, t0 + i as f64 * dt, dt, rhs)?.0;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_t: f64, y: &f64) -> Result<f64> {
        Ok(-y)
    }

    #[test]
    fn single_step_matches_exponential() {
        let (y, _) = ck_step(&1.0, 0.0, 0.1, &mut decay).unwrap();
        assert!((y - (-0.1f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn zero_rhs_is_stationary_with_zero_error() {
        let y0 = vec![1.0, -2.0, 3.5];
        let (y, e) = ck_step(&y0, 0.0, 0.3, &mut |_, y: &Vec<f64>| Ok(vec![0.0; y.len()])).unwrap();
        assert_eq!(y, y0);
        assert!(e.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn quartic_in_time_is_exact() {
        // y' = 5t⁴ - 3t² + 1  =>  y(t) = t⁵ - t³ + t; exact polynomial quadrature.
        let mut f = |t: f64, _y: &f64| Ok(5.0 * t.powi(4) - 3.0 * t * t + 1.0);
        let exact = |t: f64| t.powi(5) - t.powi(3) + t;
        let (y, _) = ck_step(&exact(0.3), 0.3, 0.7, &mut f).unwrap();
        assert!((y - exact(1.0)).abs() < 1e-14);
    }

    #[test]
    fn nonfinite_rhs_is_divergence() {
        let r = ck_step(&1.0, 0.0, 0.1, &mut |_, _: &f64| Ok(f64::NAN));
        assert!(matches!(r, Err(Error::Divergence { .. })));
    }

    #[test]
    fn advance_lands_on_target_with_accuracy() {
        let mut y = 1.0;
        let mut t = 0.0;
        let mut ctrl = StepController::new(1e-8, 1e-12, 0.01);
        let log = advance(&mut y, &mut t, &mut decay, &mut ctrl, 1.0, |_, _| {}).unwrap();
        assert_eq!(t, 1.0);
        assert!((y - (-1.0f64).exp()).abs() < 1e-7);
        assert!(log.iter().filter(|o| o.accepted).all(|o| o.error_estimate <= 1.0));
        assert!(log.iter().filter(|o| !o.accepted).all(|o| o.error_estimate > 1.0));
    }

    #[test]
    fn tighter_tolerance_does_not_increase_error() {
        let mut prev = f64::INFINITY;
        for rtol in [1e-4, 5e-5, 2.5e-5, 1.25e-5, 1e-6, 1e-8] {
            let (mut y, mut t) = (1.0, 0.0);
            let mut ctrl = StepController::new(rtol, 0.0, 0.1);
            advance(&mut y, &mut t, &mut decay, &mut ctrl, 1.0, |_, _| {}).unwrap();
            let err = (y - (-1.0f64).exp()).abs();
            assert!(err <= prev * 1.0001, "rtol {rtol}: {err} > {prev}");
            prev = err;
        }
    }

    #[test]
    fn rejected_steps_keep_committed_state() {
        let mut y = 1.0;
        let mut t = 0.0;
        let mut ctrl = StepController::new(1e-10, 0.0, 2.0);
        let mut seen = Vec::new();
        let log = advance(&mut y, &mut t, &mut decay, &mut ctrl, 2.0, |_, s| seen.push(*s)).unwrap();
        assert!(log.iter().any(|o| !o.accepted));
        assert_eq!(seen.len(), log.iter().filter(|o| o.accepted).count());
        // every committed value decreases monotonically along the true solution
        assert!(seen.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn underflow_aborts_with_last_state() {
        let mut y = 1.0;
        let mut t = 0.0;
        let mut ctrl = StepController::new(1e-12, 0.0, 0.1);
        ctrl.dt_min = 0.05;
        let mut stiff = |_t: f64, y: &f64| Ok(-1e6 * y);
        let r = advance(&mut y, &mut t, &mut stiff, &mut ctrl, 1.0, |_, _| {});
        assert!(matches!(r, Err(Error::StepUnderflow { .. })));
        assert_eq!((y, t), (1.0, 0.0));
    }

    #[test]
    fn determinism() {
        let run = || {
            let (mut y, mut t) = (vec![1.0, 0.5], 0.0);
            let mut ctrl = StepController::new(1e-9, 1e-12, 0.05);
            let mut osc = |_t: f64, y: &Vec<f64>| Ok(vec![y[1], -y[0]]);
            let log = advance(&mut y, &mut t, &mut osc, &mut ctrl, 3.0, |_, _| {}).unwrap();
            (y, log.len(), ctrl.dt)
        };
        let (a, b) = (run(), run());
        assert_eq!(a.0[0].to_bits(), b.0[0].to_bits());
        assert_eq!(a.0[1].to_bits(), b.0[1].to_bits());
        assert_eq!((a.1, a.2.to_bits()), (b.1, b.2.to_bits()));
    }

    #[test]
    fn fixed_step_convergence_is_fifth_order() {
        // Richardson slope oracle against the closed form e^{-t}.
        let errs: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&dt| {
                let steps = (2.0f64 / dt).round() as usize;
                let y = integrate_fixed(&1.0, 0.0, dt, steps, &mut decay).unwrap();
                (y - (-2.0f64).exp()).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let slope = (w[0] / w[1]).log2();
            assert!((4.5..=5.5).contains(&slope), "slope {slope}");
            // dt⁵ scaling within a factor 2
            let ratio = w[0] / w[1] / 32.0;
            assert!((0.5..=2.0).contains(&ratio));
        }
    }
}
