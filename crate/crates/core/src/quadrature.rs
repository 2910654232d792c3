//! Gauss–Legendre quadrature and mesh trapezoid sums.

use std::f64::consts::PI;

use crate::compensated::NeumaierSum;

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes come from Newton iteration on `P_n` started at the Chebyshev guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = NeumaierSum::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        half * sum.total()
    }

    /// The rule applied on `panels` equal sub-intervals of `[a, b]`.
    pub fn composite(&self, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut sum = NeumaierSum::default();
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let hi = if p + 1 == panels { b } else { lo + h };
            sum += self.integrate(lo, hi, &f);
        }
        sum.total()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Trapezoid sum of uniformly spaced samples with spacing `h`.
pub fn trapezoid(samples: &[f64], h: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        n => {
            let mut sum = NeumaierSum::default();
            sum += 0.5 * samples[0];
            for &s in &samples[1..n - 1] {
                sum += s;
            }
            sum += 0.5 * samples[n - 1];
            h * sum.total()
        }
    }
}
