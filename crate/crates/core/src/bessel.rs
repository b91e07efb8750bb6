//! Modified Bessel functions of orders 0 and 1.
//!
//! Small arguments use the ascending series; larger ones use the trapezoidal
//! rule on `K_ν(x) = ∫₀^∞ exp(-x cosh t) cosh(νt) dt`, which converges
//! geometrically in the step size for this entire integrand.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Switch point between the series and the integral representation.
const SERIES_LIMIT: f64 = 2.0;

/// Beyond this `K_ν(x) < 1e-300`.
const UNDERFLOW: f64 = 690.0;

/// Beyond this `x K₁(x)` and `K₀(x)` fall below half an ulp of `1` and `ln x`.
const NEGLIGIBLE: f64 = 40.0;

/// Terms `(x²/4)^k / (k! (k+ν)!)` of the ascending series, until negligible.
fn series_terms(x: f64, order: u32) -> impl Iterator<Item = (u32, f64)> {
    let y = 0.25 * x * x;
    let mut term = 1.0;
    for m in 1..=order {
        term /= m as f64;
    }
    (0u32..200).scan(term, move |t, k| {
        let current = *t;
        *t *= y / ((k + 1) as f64 * (k + 1 + order) as f64);
        Some((k, current))
    })
    .take_while(|&(k, t)| k < 2 || t > 1e-18 * f64::EPSILON)
}

pub fn i0(x: f64) -> f64 {
    series_terms(x.abs(), 0).map(|(_, t)| t).sum()
}

pub fn i1(x: f64) -> f64 {
    0.5 * x * series_terms(x.abs(), 1).map(|(_, t)| t).sum::<f64>()
}

/// `ψ(k+1)` for integer `k`.
fn digamma_int(k: u32) -> f64 {
    -EULER_GAMMA + (1..=k).map(|j| 1.0 / j as f64).sum::<f64>()
}

/// `Σ_{k≥1} H_k (x²/4)^k / (k!)²`, the regular part of the `K₀` series.
fn k0_series_tail(x: f64) -> f64 {
    series_terms(x, 0)
        .skip(1)
        .map(|(k, t)| (digamma_int(k) + EULER_GAMMA) * t)
        .sum()
}

/// `Σ_{k≥0} [ψ(k+1) + ψ(k+2)] (x²/4)^k / (k!(k+1)!)`.
fn k1_series_sum(x: f64) -> f64 {
    series_terms(x, 1)
        .map(|(k, t)| (digamma_int(k) + digamma_int(k + 1)) * t)
        .sum()
}

/// `e^x K_ν(x)` for `x ≥ SERIES_LIMIT` by the trapezoidal rule.
fn scaled_k_integral(x: f64, order: f64) -> f64 {
    // Integrand width shrinks like 1/√x; keep ~10 points across it.
    let h = (0.5 / x.sqrt()).min(0.2);
    let f = |t: f64| {
        let s = (0.5 * t).sinh();
        (-2.0 * x * s * s).exp() * (order * t).cosh()
    };
    let mut sum = 0.5 * f(0.0);
    let mut m = 1;
    loop {
        let v = f(m as f64 * h);
        sum += v;
        if v < 1e-18 * sum {
            break;
        }
        m += 1;
    }
    h * sum
}

/// Modified Bessel function of the second kind, order 0. `x > 0`.
pub fn k0(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::INFINITY;
    }
    if x <= SERIES_LIMIT {
        -((0.5 * x).ln() + EULER_GAMMA) * i0(x) + k0_series_tail(x)
    } else if x < UNDERFLOW {
        (-x).exp() * scaled_k_integral(x, 0.0)
    } else {
        0.0
    }
}

/// Modified Bessel function of the second kind, order 1. `x > 0`.
pub fn k1(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::INFINITY;
    }
    if x <= SERIES_LIMIT {
        1.0 / x + (0.5 * x).ln() * i1(x) - 0.25 * x * k1_series_sum(x)
    } else if x < UNDERFLOW {
        (-x).exp() * scaled_k_integral(x, 1.0)
    } else {
        0.0
    }
}

/// `1 - x K₁(x)`, the fraction of a `K₀` blob's circulation inside radius `x α`.
///
/// Evaluated without cancellation for small `x`; tends to `0` as `x → 0`.
pub fn one_minus_x_k1(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x <= SERIES_LIMIT {
        -x * (0.5 * x).ln() * i1(x) + 0.25 * x * x * k1_series_sum(x)
    } else if x > NEGLIGIBLE {
        1.0
    } else {
        1.0 - x * k1(x)
    }
}

/// `K₀(x) + ln x`, finite at `x = 0` where it equals `ln 2 - γ`.
pub fn k0_plus_ln(x: f64) -> f64 {
    if x <= 0.0 {
        std::f64::consts::LN_2 - EULER_GAMMA
    } else if x <= SERIES_LIMIT {
        // ln x (1 - I₀) + (ln 2 - γ) I₀ + tail
        let i0_minus_one: f64 = series_terms(x, 0).skip(1).map(|(_, t)| t).sum();
        let i0 = 1.0 + i0_minus_one;
        -x.ln() * i0_minus_one + (std::f64::consts::LN_2 - EULER_GAMMA) * i0 + k0_series_tail(x)
    } else if x > NEGLIGIBLE {
        x.ln()
    } else {
        k0(x) + x.ln()
    }
}
