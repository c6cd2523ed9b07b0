//! Gauss-Legendre quadrature for complex-valued integrands.
//!
//! Nodes are stored as exact ± pairs so that integrals of f over symmetric
//! intervals satisfy conj(∫f) = ∫conj∘f to machine precision when
//! f(−z) = conj(f(z)); the SPDC z-kernel has exactly that symmetry and the
//! conjugation-mirror identities of the amplitudes rely on it. Sums are
//! compensated (Kahan).

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};

/// A fixed-order Gauss-Legendre rule on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    /// Positive half-nodes with their weights; the mirrored nodes share them.
    pairs: Vec<(f64, f64)>,
    /// Weight of the node at zero for odd orders.
    center_weight: Option<f64>,
}

impl GaussLegendre {
    /// Compute the n-point rule by Newton iteration on P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature order must be positive");
        let mut pairs = Vec::with_capacity(n / 2);
        let mut center_weight = None;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (value, derivative) = legendre_with_derivative(n, x);
                let step = value / derivative;
                x -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            let (_, derivative) = legendre_with_derivative(n, x);
            let weight = 2.0 / ((1.0 - x * x) * derivative * derivative);
            if n % 2 == 1 && i == n / 2 {
                center_weight = Some(weight);
            } else {
                pairs.push((x.abs(), weight));
            }
        }
        GaussLegendre {
            pairs,
            center_weight,
        }
    }

    /// Shared, cached rule of the given order.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: Mutex<BTreeMap<usize, Arc<GaussLegendre>>> = Mutex::new(BTreeMap::new());
        let mut cache = CACHE.lock().expect("quadrature cache lock");
        cache
            .entry(n)
            .or_insert_with(|| Arc::new(GaussLegendre::new(n)))
            .clone()
    }

    pub fn order(&self) -> usize {
        2 * self.pairs.len() + usize::from(self.center_weight.is_some())
    }

    /// Positive half-nodes with their weights; the mirrored node at −x
    /// shares the weight.
    pub fn node_pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    /// Weight of the node at zero, present for odd orders.
    pub fn center_node_weight(&self) -> Option<f64> {
        self.center_weight
    }

    /// ∫_a^b f(x) dx.
    pub fn integrate<F: Fn(f64) -> Complex64>(&self, a: f64, b: f64, f: F) -> Complex64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut sum = KahanComplex::new();
        for &(x, w) in &self.pairs {
            sum.add(f(mid + half * x) * w);
            sum.add(f(mid - half * x) * w);
        }
        if let Some(w0) = self.center_weight {
            sum.add(f(mid) * w0);
        }
        sum.value() * half
    }

    /// ∫_{−h}^{h} f(z) dz with the ± nodes paired before accumulation.
    ///
    /// If f(−z) is the bitwise conjugate of f(z), the result's imaginary
    /// part is exactly zero.
    pub fn integrate_symmetric<F: Fn(f64) -> Complex64>(&self, h: f64, f: F) -> Complex64 {
        self.integrate_symmetric_with_l1(h, f).0
    }

    /// [`integrate_symmetric`](Self::integrate_symmetric) plus ∫|f|, the
    /// cancellation-free scale of the integrand.
    pub fn integrate_symmetric_with_l1<F: Fn(f64) -> Complex64>(
        &self,
        h: f64,
        f: F,
    ) -> (Complex64, f64) {
        let mut sum = KahanComplex::new();
        let mut l1 = 0.0f64;
        for &(x, w) in &self.pairs {
            let plus = f(h * x);
            let minus = f(-h * x);
            l1 += (plus.norm() + minus.norm()) * w;
            sum.add((plus + minus) * w);
        }
        if let Some(w0) = self.center_weight {
            let center = f(0.0);
            l1 += center.norm() * w0;
            sum.add(center * w0);
        }
        (sum.value() * h, l1 * h)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let k = k as f64;
        let p_next = ((2.0 * k - 1.0) * x * p - (k - 1.0) * p_prev) / k;
        p_prev = p;
        p = p_next;
    }
    let derivative = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, derivative)
}

/// Settings for the order-doubling z-quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    pub initial_nodes: usize,
    /// Relative change between successive doublings considered converged.
    pub tolerance: f64,
    pub max_nodes: usize,
}

impl QuadratureSettings {
    pub fn with_tolerance(tolerance: f64) -> Self {
        QuadratureSettings {
            tolerance,
            ..Default::default()
        }
    }
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            initial_nodes: 64,
            tolerance: 1e-8,
            max_nodes: 16384,
        }
    }
}

/// ∫_{−h}^{h} f, doubling the order until the change between successive
/// orders drops below the tolerance. The change is measured against the
/// integral itself or, for deeply cancelling integrands, against ∫|f|,
/// the strongest scale any quadrature statement can promise there.
/// Non-convergence is an error, not a silent result.
pub fn integrate_adaptive_symmetric<F: Fn(f64) -> Complex64>(
    h: f64,
    settings: &QuadratureSettings,
    context: &str,
    f: F,
) -> Result<Complex64> {
    let mut nodes = settings.initial_nodes.max(2);
    let (mut previous, _) = GaussLegendre::cached(nodes).integrate_symmetric_with_l1(h, &f);
    let mut last_change = f64::INFINITY;
    while nodes * 2 <= settings.max_nodes {
        let doubled = nodes * 2;
        let (current, l1) = GaussLegendre::cached(doubled).integrate_symmetric_with_l1(h, &f);
        let scale = current
            .norm()
            .max(previous.norm())
            .max(l1 * settings.tolerance.sqrt());
        let change = if scale == 0.0 {
            0.0
        } else {
            (current - previous).norm() / scale
        };
        if change <= settings.tolerance {
            return Ok(current);
        }
        nodes = doubled;
        previous = current;
        last_change = change;
    }
    Err(Error::QuadratureNotConverged {
        context: context.to_string(),
        achieved: last_change,
        tolerance: settings.tolerance,
        nodes,
    })
}

/// Kahan-compensated accumulator for complex values.
struct KahanComplex {
    sum_re: f64,
    sum_im: f64,
    c_re: f64,
    c_im: f64,
}

impl KahanComplex {
    fn new() -> Self {
        KahanComplex {
            sum_re: 0.0,
            sum_im: 0.0,
            c_re: 0.0,
            c_im: 0.0,
        }
    }

    fn add(&mut self, v: Complex64) {
        let y = v.re - self.c_re;
        let t = self.sum_re + y;
        self.c_re = (t - self.sum_re) - y;
        self.sum_re = t;

        let y = v.im - self.c_im;
        let t = self.sum_im + y;
        self.c_im = (t - self.sum_im) - y;
        self.sum_im = t;
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.sum_re, self.sum_im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(8);
        // Degree-15 polynomial is exact for an 8-point rule.
        let value = rule.integrate(0.0, 1.0, |x| Complex64::new(x.powi(15), 0.0));
        assert_relative_eq!(value.re, 1.0 / 16.0, max_relative = 1e-13);
    }

    #[test]
    fn integrates_oscillatory_integrand() {
        let rule = GaussLegendre::new(64);
        let value = rule.integrate_symmetric(1.0, |x| Complex64::from_polar(1.0, 10.0 * x));
        // ∫ exp(10ix) dx over [−1,1] = 2 sin(10)/10
        assert_relative_eq!(
            value.re,
            2.0 * (10.0_f64).sin() / 10.0,
            max_relative = 1e-12
        );
        assert!(value.im.abs() < 1e-15);
    }

    #[test]
    fn symmetric_rule_cancels_odd_imaginary_parts_exactly() {
        let rule = GaussLegendre::new(33); // odd order exercises the center node
        let value = rule.integrate_symmetric(2.0, |x| Complex64::new(x * x, x.powi(3)));
        assert_eq!(value.im, 0.0);
        assert_relative_eq!(value.re, 16.0 / 3.0, max_relative = 1e-13);
    }

    #[test]
    fn adaptive_reports_convergence_failure() {
        // A needle the doubling never resolves within the node budget.
        let settings = QuadratureSettings {
            initial_nodes: 2,
            tolerance: 1e-14,
            max_nodes: 4,
        };
        let result = integrate_adaptive_symmetric(1.0, &settings, "needle", |x| {
            Complex64::new(1.0 / (1e-12 + x * x), 0.0)
        });
        assert!(matches!(result, Err(Error::QuadratureNotConverged { .. })));
    }

    #[test]
    fn adaptive_converges_on_smooth_integrand() {
        let settings = QuadratureSettings::default();
        let value = integrate_adaptive_symmetric(1.0, &settings, "gaussian", |x| {
            Complex64::new((-x * x).exp(), 0.0)
        })
        .unwrap();
        assert_relative_eq!(value.re, 1.493648265624854, max_relative = 1e-12);
    }
}
