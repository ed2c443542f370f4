//! Numerical quadrature for the thermodynamic-limit correlator.
//!
//! Two independent schemes, so results can be cross-checked:
//!
//! - *Adaptive Gauss-Kronrod*: a 7/15-point pair per interval; the worst
//!   interval (by the |K15 - G7| estimate) is bisected until the summed
//!   estimate meets the tolerance. Two-dimensional integrals are iterated:
//!   the outer integrand evaluates an inner adaptive integral.
//! - *Fixed Gauss-Legendre tensor grid*: classical nodes/weights from
//!   Newton iteration on the Legendre recurrence, applied as an outer
//!   product over both axes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Hard cap on adaptive subdivisions per 1D integral.
const MAX_INTERVALS: usize = 4096;

/// Quadrature scheme selection for the correlator oracle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum QuadratureConfig {
    /// Iterated adaptive Gauss-Kronrod with an absolute tolerance.
    Adaptive { tolerance: f64 },
    /// Tensor-product Gauss-Legendre of a fixed order per axis.
    GaussLegendre { order: usize },
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig::Adaptive { tolerance: 1e-9 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            QuadratureConfig::Adaptive { tolerance } => {
                if !(tolerance > 0.0) || !tolerance.is_finite() {
                    return Err(Error::Config(format!(
                        "quadrature tolerance must be positive, got {tolerance}"
                    )));
                }
            }
            QuadratureConfig::GaussLegendre { order } => {
                if order < 2 || order > 512 {
                    return Err(Error::Config(format!(
                        "Gauss-Legendre order must lie in [2, 512], got {order}"
                    )));
                }
            }
        }
        Ok(())
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
// Abscissae are symmetric; only the non-negative half is tabulated.
const KRONROD_NODES: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
// The embedded Gauss rule uses every second Kronrod node (indices 1,3,5,7).
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One Gauss-Kronrod evaluation on [a, b]: returns (K15 value, |K15 - G7|).
fn gk_panel<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> (C64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = C64::new(0.0, 0.0);
    let mut gauss = C64::new(0.0, 0.0);
    for (i, (&x, &wk)) in KRONROD_NODES.iter().zip(&KRONROD_WEIGHTS).enumerate() {
        let (lo, hi) = (f(mid - half * x), f(mid + half * x));
        // The center node coincides with its mirror; count it once.
        let pair = if x == 0.0 { lo } else { lo + hi };
        kronrod += pair * wk;
        if i % 2 == 1 {
            gauss += pair * GAUSS_WEIGHTS[i / 2];
        }
    }
    kronrod *= half;
    gauss *= half;
    (kronrod, (kronrod - gauss).norm())
}

/// Adaptive 1D integral of a complex integrand. Returns the value and the
/// final error estimate; errors out if the tolerance is unreachable within
/// the subdivision budget.
pub(crate) fn adaptive_integral<F: FnMut(f64) -> C64>(
    f: &mut F,
    a: f64,
    b: f64,
    tolerance: f64,
) -> Result<(C64, f64)> {
    struct Panel {
        a: f64,
        b: f64,
        value: C64,
        error: f64,
    }
    let (value, error) = gk_panel(f, a, b);
    let mut panels = vec![Panel { a, b, value, error }];
    loop {
        let total_error: f64 = panels.iter().map(|p| p.error).sum();
        if total_error <= tolerance {
            let total: C64 = panels.iter().map(|p| p.value).sum();
            return Ok((total, total_error));
        }
        if panels.len() >= MAX_INTERVALS {
            return Err(Error::Numerics(format!(
                "quadrature did not reach tolerance {tolerance}: \
                 estimate {total_error:.3e} after {MAX_INTERVALS} intervals"
            )));
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).expect("finite errors"))
            .map(|(i, _)| i)
            .expect("at least one panel");
        let Panel { a, b, .. } = panels.swap_remove(worst);
        let mid = 0.5 * (a + b);
        let (v1, e1) = gk_panel(f, a, mid);
        let (v2, e2) = gk_panel(f, mid, b);
        panels.push(Panel { a, b: mid, value: v1, error: e1 });
        panels.push(Panel { a: mid, b, value: v2, error: e2 });
    }
}

/// Classical Gauss-Legendre nodes and weights on [-1, 1] by Newton
/// iteration on the three-term recurrence.
pub(crate) fn gauss_legendre_rule(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi-style initial guess for the i-th root (descending).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' at x via the recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        // The middle node is exactly zero; recompute its weight cleanly.
        nodes[n / 2] = 0.0;
        let (mut p0, mut p1) = (1.0, 0.0);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = (-(kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        // P_n'(0) = n * P_{n-1}(0) for odd n (x=0 root).
        let dp = n as f64 * p0;
        weights[n / 2] = 2.0 / (dp * dp);
    }
    (nodes, weights)
}

/// Two-dimensional integral of `f` over `[-1,1] x [-1,1]` under `config`.
pub(crate) fn integrate_unit_square<F: Fn(f64, f64) -> C64>(
    config: &QuadratureConfig,
    f: F,
) -> Result<C64> {
    config.validate()?;
    match *config {
        QuadratureConfig::Adaptive { tolerance } => {
            // Iterated integration; the inner tolerance is tightened so the
            // combined estimate stays within budget.
            let inner_tol = tolerance / 8.0;
            let mut inner_failure: Option<Error> = None;
            let mut outer = |x: f64| -> C64 {
                let mut g = |y: f64| f(x, y);
                match adaptive_integral(&mut g, -1.0, 1.0, inner_tol) {
                    Ok((v, _)) => v,
                    Err(e) => {
                        if inner_failure.is_none() {
                            inner_failure = Some(e);
                        }
                        C64::new(f64::NAN, f64::NAN)
                    }
                }
            };
            let result = adaptive_integral(&mut outer, -1.0, 1.0, tolerance / 2.0);
            if let Some(e) = inner_failure {
                return Err(e);
            }
            result.map(|(v, _)| v)
        }
        QuadratureConfig::GaussLegendre { order } => {
            let (nodes, weights) = gauss_legendre_rule(order);
            let mut total = C64::new(0.0, 0.0);
            for (x, wx) in nodes.iter().zip(&weights) {
                for (y, wy) in nodes.iter().zip(&weights) {
                    total += f(*x, *y) * (wx * wy);
                }
            }
            Ok(total)
        }
    }
}
