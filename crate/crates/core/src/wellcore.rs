//! Well geometry, eigenmodes and finite superposition states.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// π², the ground-state energy of the unit well.
pub const PI2: f64 = PI * PI;

/// Tolerance on Σ|d_l|² for a state to count as normalized.
pub const NORM_TOL: f64 = 1e-12;

/// Expresses an energy as a multiple of π² (display helper).
pub fn in_pi2(energy: f64) -> f64 {
    energy / PI2
}

/// An interval `[left, right]` with infinite walls at both ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WellSegment {
    left: f64,
    right: f64,
}

impl WellSegment {
    pub fn new(left: f64, right: f64) -> Result<Self> {
        if !(left.is_finite() && right.is_finite()) {
            return domain(format!("segment bounds must be finite, got [{left}, {right}]"));
        }
        if left < 0.0 || right <= left {
            return domain(format!("segment needs 0 <= left < right, got [{left}, {right}]"));
        }
        Ok(Self { left, right })
    }

    /// The well `[0, 1]`.
    pub fn unit() -> Self {
        Self {
            left: 0.0,
            right: 1.0,
        }
    }

    /// The well `[0, length]`.
    pub fn with_length(length: f64) -> Result<Self> {
        Self::new(0.0, length)
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.left && x <= self.right
    }

    /// Wavenumber `lπ/D` of mode `l`.
    pub fn wavenumber(&self, l: u32) -> f64 {
        l as f64 * PI / self.width()
    }

    /// `π² l² / D²`; `l` must be positive.
    pub fn energy(&self, l: u32) -> f64 {
        let k = self.wavenumber(l);
        k * k
    }

    /// `√(2/D) sin(lπ(x − left)/D)` inside the segment, zero outside.
    pub fn mode(&self, l: u32, x: f64) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        (2.0 / self.width()).sqrt() * (self.wavenumber(l) * (x - self.left)).sin()
    }

    pub fn mode_derivative(&self, l: u32, x: f64) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        let k = self.wavenumber(l);
        (2.0 / self.width()).sqrt() * k * (k * (x - self.left)).cos()
    }

    pub fn mode_second_derivative(&self, l: u32, x: f64) -> f64 {
        -self.energy(l) * self.mode(l, x)
    }

    /// `∫_a^b ψ_l ψ_m dx` for `[a, b]` inside the segment, in closed form.
    pub fn mode_overlap(&self, l: u32, m: u32, a: f64, b: f64) -> f64 {
        let d = self.width();
        let (ua, ub) = (a - self.left, b - self.left);
        let half = |n: i64, u: f64| -> f64 {
            // ∫ cos(nπu/D) du
            if n == 0 {
                u
            } else {
                let q = n as f64 * PI / d;
                (q * u).sin() / q
            }
        };
        let diff = l as i64 - m as i64;
        let sum = l as i64 + m as i64;
        let integral = 0.5 * ((half(diff, ub) - half(diff, ua)) - (half(sum, ub) - half(sum, ua)));
        2.0 / d * integral
    }
}

/// Energy of mode `l` of `seg`. Non-positive `l` is a domain error.
pub fn eigenenergy(seg: &WellSegment, l: i64) -> Result<f64> {
    if l < 1 {
        return domain(format!("mode index must be >= 1, got {l}"));
    }
    Ok(seg.energy(l as u32))
}

/// Value of eigenfunction `l` of `seg` at `x` (zero outside the segment).
pub fn eigenfunction_value(seg: &WellSegment, l: u32, x: f64) -> f64 {
    seg.mode(l, x)
}

/// A finite superposition `Σ d_l ψ_l(x) e^{−iE_l (t − t0)}` on one segment.
///
/// Coefficients are indexed from `l = 1`; the vector is normalized and its
/// trailing entry is nonzero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WellState {
    segment: WellSegment,
    coeffs: Vec<Complex64>,
    t0: f64,
}

impl WellState {
    /// Builds a state from coefficients that must already be normalized.
    pub fn new(segment: WellSegment, coeffs: Vec<Complex64>, t0: f64) -> Result<Self> {
        let coeffs = trim(coeffs);
        if coeffs.is_empty() {
            return domain("state needs at least one nonzero coefficient");
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return domain("state coefficients must be finite");
        }
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return domain(format!("coefficients are not normalized: sum |d|^2 = {norm}"));
        }
        Ok(Self {
            segment,
            coeffs,
            t0: if t0.is_finite() { t0 } else { return domain("t0 must be finite") },
        })
    }

    /// Normalizes `coeffs` and builds the state at `t0 = 0`.
    pub fn normalized(segment: WellSegment, coeffs: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return domain("cannot normalize a zero or non-finite coefficient vector");
        }
        let coeffs = coeffs.into_iter().map(|c| c / norm).collect();
        Self::new(segment, coeffs, 0.0)
    }

    /// Normalized state from real coefficients.
    pub fn from_real(segment: WellSegment, coeffs: &[f64]) -> Result<Self> {
        Self::normalized(segment, coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// The eigenstate `l` of `segment`.
    pub fn single_mode(segment: WellSegment, l: u32) -> Result<Self> {
        if l == 0 {
            return domain("mode index must be >= 1");
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); l as usize];
        coeffs[l as usize - 1] = Complex64::new(1.0, 0.0);
        Self::new(segment, coeffs, 0.0)
    }

    pub fn segment(&self) -> &WellSegment {
        &self.segment
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of mode `l` (1-based); zero beyond the support.
    pub fn coeff(&self, l: u32) -> Complex64 {
        if l == 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs
            .get(l as usize - 1)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Highest populated mode.
    pub fn max_mode(&self) -> u32 {
        self.coeffs.len() as u32
    }

    /// Indices `l` with `d_l != 0`.
    pub fn populated_modes(&self) -> impl Iterator<Item = u32> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(i, _)| i as u32 + 1)
    }

    /// Coefficients `d_l e^{−iE_l (t − t0)}`.
    pub fn coefficients_at(&self, t: f64) -> Vec<Complex64> {
        let dt = t - self.t0;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * phase(-self.segment.energy(i as u32 + 1) * dt))
            .collect()
    }

    /// The same physical state with its reference time moved to `t`.
    pub fn evolved(&self, t: f64) -> Self {
        Self {
            segment: self.segment,
            coeffs: self.coefficients_at(t),
            t0: t,
        }
    }

    /// Ψ(x, t).
    pub fn evaluate(&self, x: f64, t: f64) -> Complex64 {
        self.combine(t, |l| self.segment.mode(l, x))
    }

    /// ∂Ψ/∂x.
    pub fn derivative(&self, x: f64, t: f64) -> Complex64 {
        self.combine(t, |l| self.segment.mode_derivative(l, x))
    }

    /// ∂²Ψ/∂x².
    pub fn second_derivative(&self, x: f64, t: f64) -> Complex64 {
        self.combine(t, |l| self.segment.mode_second_derivative(l, x))
    }

    /// ∂Ψ/∂t = −i Σ E_l d_l ψ_l e^{−iE_l (t − t0)}.
    pub fn time_derivative(&self, x: f64, t: f64) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        -i * self.combine(t, |l| self.segment.energy(l) * self.segment.mode(l, x))
    }

    fn combine(&self, t: f64, f: impl Fn(u32) -> f64) -> Complex64 {
        let dt = t - self.t0;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let l = i as u32 + 1;
            acc += c * phase(-self.segment.energy(l) * dt) * f(l);
        }
        acc
    }

    /// ⟨E⟩ = Σ |d_l|² E_l.
    pub fn mean_energy(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.norm_sqr() * self.segment.energy(i as u32 + 1))
            .sum()
    }
}

/// `e^{iθ}`.
pub(crate) fn phase(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

fn trim(mut coeffs: Vec<Complex64>) -> Vec<Complex64> {
    while coeffs.last().is_some_and(|c| c.norm_sqr() == 0.0) {
        coeffs.pop();
    }
    coeffs
}

/// `α = 2 cos(π x0 / L)`.
pub fn alpha(well: &WellSegment, x0: f64) -> f64 {
    2.0 * (PI * (x0 - well.left()) / well.width()).cos()
}

/// The two-mode state `∝ α ψ_1 − ψ_2` with a zero at `x0` at `t = 0`, on the unit well.
pub fn make_alpha_state(x0: f64) -> Result<WellState> {
    make_alpha_state_in(&WellSegment::unit(), x0)
}

/// As [`make_alpha_state`] on an arbitrary well `[left, left + L]`.
pub fn make_alpha_state_in(well: &WellSegment, x0: f64) -> Result<WellState> {
    check_alpha_domain(well, x0)?;
    WellState::from_real(*well, &[alpha(well, x0), -1.0])
}

/// The reflection `∝ α ψ_1 + ψ_2`, which peaks where the alpha state vanishes.
pub fn make_alpha_mirror_state(x0: f64) -> Result<WellState> {
    let well = WellSegment::unit();
    check_alpha_domain(&well, x0)?;
    WellState::from_real(well, &[alpha(&well, x0), 1.0])
}

fn check_alpha_domain(well: &WellSegment, x0: f64) -> Result<()> {
    let rel = x0 - well.left();
    if !(rel > 0.0 && rel < 0.5 * well.width()) {
        return domain(format!("alpha state needs 0 < x0 < L/2, got x0 = {x0}"));
    }
    Ok(())
}
