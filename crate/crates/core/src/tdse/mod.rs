//! Mesh evolution while a Gaussian barrier is ramped up.
//!
//! The solution is carried as `ψ = ψ₀ + Δψ` with `Δψ` accumulated in a
//! compensated field, so corrections many orders below `ψ₀` survive 10³
//! steps. Each step applies
//!
//! ```text
//! Δψ ← Δψ + iΔt (∂²ψ − V̄ ψ),   V̄ = [V(t) + 4V(t + Δt/2) + V(t + Δt)] / 6
//! ```
//!
//! with the three-point Laplacian and Dirichlet ends.

mod fit;
pub mod reference;

use num_complex::Complex64;
use serde::Serialize;

pub use fit::{fit_power_law, fit_predict, sweep, FitPrediction, PowerLawFit, SweepJob, SweepRow, C_K, C_V, P_V, Q_V};

use crate::compensated::{CompensatedField, NeumaierSum};
use crate::error::{domain, Error, Result};
use crate::wellcore::WellState;

/// Per-step correction ratio allowed by default.
pub const VALIDITY_THRESHOLD: f64 = 1e-2;

/// Norm drift beyond which a run is marked untrusted.
pub const UNTRUSTED_NORM: f64 = 1e-6;

/// Uniform mesh `x_i = L i / n`, `i = 0..=n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Mesh {
    length: f64,
    intervals: usize,
}

impl Mesh {
    pub fn new(length: f64, intervals: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return domain(format!("mesh length must be positive, got {length}"));
        }
        if intervals < 4 {
            return domain(format!("mesh needs at least 4 intervals, got {intervals}"));
        }
        Ok(Self { length, intervals })
    }

    /// Unit-length mesh with spacing as close to `dx` as an integer count allows.
    pub fn with_spacing(dx: f64) -> Result<Self> {
        if !(dx > 0.0 && dx < 1.0) {
            return domain(format!("mesh spacing must lie in (0, 1), got {dx}"));
        }
        Self::new(1.0, (1.0 / dx).round() as usize)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn points(&self) -> usize {
        self.intervals + 1
    }

    pub fn dx(&self) -> f64 {
        self.length / self.intervals as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.length
        } else {
            self.length * i as f64 / self.intervals as f64
        }
    }

    /// Samples `f` with the Dirichlet ends forced to zero.
    pub fn sample(&self, f: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = (0..self.points()).map(|i| f(self.x(i))).collect();
        v[0] = Complex64::new(0.0, 0.0);
        v[self.intervals] = Complex64::new(0.0, 0.0);
        v
    }
}

/// Three-point second difference; the end values are left at zero.
pub fn laplacian(f: &[Complex64], dx: f64, out: &mut [Complex64]) {
    let n = f.len();
    let inv = 1.0 / (dx * dx);
    out[0] = Complex64::new(0.0, 0.0);
    out[n - 1] = Complex64::new(0.0, 0.0);
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * inv;
    }
}

/// Trapezoid quadrature of a field that vanishes at both ends.
fn integrate(dx: f64, values: impl Iterator<Item = f64>) -> f64 {
    dx * values.collect::<NeumaierSum>().total()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RampLaw {
    /// `V(t) = (t/τ) V_m`.
    #[default]
    Linear,
}

impl RampLaw {
    /// Fraction of the peak reached at `s = t/τ`.
    pub fn fraction(self, s: f64) -> f64 {
        match self {
            Self::Linear => s,
        }
    }
}

/// A Gaussian barrier of full width at half maximum `w` rising over `τ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BarrierRamp {
    pub w: f64,
    pub x0: f64,
    pub v_m: f64,
    pub tau: f64,
    pub law: RampLaw,
}

impl BarrierRamp {
    pub fn linear(w: f64, x0: f64, v_m: f64, tau: f64) -> Result<Self> {
        let r = Self {
            w,
            x0,
            v_m,
            tau,
            law: RampLaw::Linear,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w > 0.0 && self.w.is_finite()) {
            return domain(format!("barrier width must be positive, got {}", self.w));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return domain(format!("ramp duration must be positive, got {}", self.tau));
        }
        if !(self.v_m >= 0.0 && self.v_m.is_finite()) {
            return domain(format!("barrier peak must be finite and >= 0, got {}", self.v_m));
        }
        if !self.x0.is_finite() {
            return domain("barrier centre must be finite");
        }
        Ok(())
    }

    /// Barrier strength `V(t)` multiplying the kernel.
    pub fn strength(&self, t: f64) -> f64 {
        self.v_m * self.law.fraction(t / self.tau)
    }

    /// Simpson average of the strength over `[t, t + dt]`.
    pub fn step_average(&self, t: f64, dt: f64) -> f64 {
        (self.strength(t) + 4.0 * self.strength(t + 0.5 * dt) + self.strength(t + dt)) / 6.0
    }
}

/// A Gaussian sampled on a mesh and normalized to unit trapezoid integral.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Kernel {
    pub mesh: Mesh,
    pub w: f64,
    pub x0: f64,
    pub values: Vec<f64>,
    /// `w < 4 Δx`.
    pub under_resolved: bool,
}

impl Kernel {
    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// `e^{−4 ln 2 ((x − x0)/w)²}` normalized on `[0, L]`.
pub fn gaussian_kernel(w: f64, x0: f64, mesh: &Mesh) -> Result<Kernel> {
    if !(w > 0.0 && w.is_finite()) {
        return domain(format!("kernel width must be positive, got {w}"));
    }
    let c = 4.0 * std::f64::consts::LN_2;
    let mut values: Vec<f64> = (0..mesh.points())
        .map(|i| {
            let u = (mesh.x(i) - x0) / w;
            (-c * u * u).exp()
        })
        .collect();
    let total = crate::quadrature::trapezoid(&values, mesh.dx());
    if !(total > 0.0) {
        return domain(format!("kernel centred at {x0} with width {w} vanishes on the mesh"));
    }
    for v in &mut values {
        *v /= total;
    }
    Ok(Kernel {
        mesh: *mesh,
        w,
        x0,
        values,
        under_resolved: w < 4.0 * mesh.dx(),
    })
}

/// `A_w = ∫ |ψ(x, t0)|² G_w(x) dx` on the kernel's mesh.
pub fn overlap_aw(state: &WellState, kernel: &Kernel) -> f64 {
    let psi = kernel.mesh.sample(|x| state.evaluate(x, state.t0()));
    overlap_samples(&psi, kernel)
}

fn overlap_samples(psi: &[Complex64], kernel: &Kernel) -> f64 {
    let samples: Vec<f64> = psi.iter().zip(&kernel.values).map(|(p, g)| p.norm_sqr() * g).collect();
    crate::quadrature::trapezoid(&samples, kernel.mesh.dx())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimOptions {
    pub steps: usize,
    /// Step counts after which a [`Checkpoint`] is recorded.
    pub checkpoints: Vec<usize>,
    pub validity_threshold: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            steps: 1000,
            checkpoints: Vec::new(),
            validity_threshold: VALIDITY_THRESHOLD,
        }
    }
}

/// Energy bookkeeping part-way through the ramp.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Checkpoint {
    pub step: usize,
    pub t: f64,
    /// Barrier strength `V(t)`.
    pub strength: f64,
    pub delta_k: f64,
    pub delta_v_dpsi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub mesh: Mesh,
    pub ramp: BarrierRamp,
    pub steps: usize,
    /// `∫|ψ(τ)|² / ∫|ψ₀|² − 1`.
    pub norm_error: f64,
    pub k0: f64,
    pub delta_k: f64,
    /// Barrier energy carried by `Δψ`: `∫ (|Δψ|² + 2 Re ψ₀* Δψ) V`.
    pub delta_v_dpsi: f64,
    /// `A_w V_m`.
    pub delta_v_psi0: f64,
    pub a_w: f64,
    pub max_step_ratio: f64,
    pub untrusted: bool,
    pub under_resolved: bool,
    pub checkpoints: Vec<Checkpoint>,
    #[serde(skip)]
    pub psi0: Vec<Complex64>,
    #[serde(skip)]
    pub dpsi: Vec<Complex64>,
}

impl SimReport {
    pub fn psi_final(&self) -> Vec<Complex64> {
        self.psi0.iter().zip(&self.dpsi).map(|(a, b)| a + b).collect()
    }

    /// `−∫ ψ* ∂²ψ` of the final state, computed directly.
    pub fn final_kinetic(&self) -> f64 {
        kinetic(&self.psi_final(), self.mesh.dx())
    }
}

pub(crate) fn kinetic(psi: &[Complex64], dx: f64) -> f64 {
    let mut lap = vec![Complex64::new(0.0, 0.0); psi.len()];
    laplacian(psi, dx, &mut lap);
    -integrate(dx, psi.iter().zip(&lap).map(|(p, l)| (p.conj() * l).re))
}

/// Energy decomposition of `ψ₀ + Δψ` under barrier `strength · G`.
pub(crate) struct Bookkeeping {
    pub k0: f64,
    pub delta_k: f64,
    pub delta_v_dpsi: f64,
    pub norm_error: f64,
}

pub(crate) fn bookkeeping(psi0: &[Complex64], lap0: &[Complex64], dpsi: &[Complex64], kernel: &Kernel, strength: f64) -> Bookkeeping {
    let dx = kernel.mesh.dx();
    let mut lapd = vec![Complex64::new(0.0, 0.0); dpsi.len()];
    laplacian(dpsi, dx, &mut lapd);
    let k0 = -integrate(dx, psi0.iter().zip(lap0).map(|(p, l)| (p.conj() * l).re));
    let delta_k = -integrate(
        dx,
        (0..psi0.len()).map(|i| (dpsi[i].conj() * lapd[i] + psi0[i].conj() * lapd[i] + dpsi[i].conj() * lap0[i]).re),
    );
    let cross = |i: usize| dpsi[i].norm_sqr() + 2.0 * (psi0[i].conj() * dpsi[i]).re;
    let delta_v_dpsi = strength * integrate(dx, (0..psi0.len()).map(|i| cross(i) * kernel.values[i]));
    let n0 = integrate(dx, psi0.iter().map(|p| p.norm_sqr()));
    let dn = integrate(dx, (0..psi0.len()).map(cross));
    Bookkeeping {
        k0,
        delta_k,
        delta_v_dpsi,
        norm_error: dn / n0,
    }
}

/// Runs the ramp with `n_steps` steps and default options.
pub fn simulate(state: &WellState, ramp: &BarrierRamp, mesh: &Mesh, n_steps: usize) -> Result<SimReport> {
    simulate_with(
        state,
        ramp,
        mesh,
        &SimOptions {
            steps: n_steps,
            ..SimOptions::default()
        },
    )
}

pub fn simulate_with(state: &WellState, ramp: &BarrierRamp, mesh: &Mesh, options: &SimOptions) -> Result<SimReport> {
    ramp.validate()?;
    if options.steps == 0 {
        return domain("simulation needs at least one step");
    }
    if (state.segment().left(), state.segment().right()) != (0.0, mesh.length()) {
        return domain("the mesh must cover the state's well [0, L]");
    }
    let kernel = gaussian_kernel(ramp.w, ramp.x0, mesh)?;
    let dx = mesh.dx();
    let n = mesh.points();
    let psi0 = mesh.sample(|x| state.evaluate(x, state.t0()));
    let mut lap0 = vec![Complex64::new(0.0, 0.0); n];
    laplacian(&psi0, dx, &mut lap0);

    let dt = ramp.tau / options.steps as f64;
    let mut field = CompensatedField::zeros(n);
    let mut dpsi = vec![Complex64::new(0.0, 0.0); n];
    let mut lapd = vec![Complex64::new(0.0, 0.0); n];
    let mut corr = vec![Complex64::new(0.0, 0.0); n];
    let mut checkpoints = Vec::new();
    let mut max_ratio: f64 = 0.0;
    let idt = Complex64::new(0.0, dt);

    for step in 0..options.steps {
        let t = step as f64 * dt;
        let vbar = ramp.step_average(t, dt);
        laplacian(&dpsi, dx, &mut lapd);
        let mut corr_norm = NeumaierSum::default();
        let mut psi_norm = NeumaierSum::default();
        for i in 1..n - 1 {
            let psi = psi0[i] + dpsi[i];
            corr[i] = idt * (lap0[i] + lapd[i] - vbar * kernel.values[i] * psi);
            corr_norm += corr[i].norm_sqr();
            psi_norm += psi.norm_sqr();
        }
        let ratio = (corr_norm.total() / psi_norm.total()).sqrt();
        max_ratio = max_ratio.max(ratio);
        if !(ratio <= options.validity_threshold) {
            return Err(Error::ValidityBreach {
                step: step + 1,
                ratio,
                threshold: options.validity_threshold,
            });
        }
        field.accumulate(&corr);
        field.totals_into(&mut dpsi);

        if options.checkpoints.contains(&(step + 1)) {
            let tc = (step + 1) as f64 * dt;
            let strength = ramp.strength(tc);
            let b = bookkeeping(&psi0, &lap0, &dpsi, &kernel, strength);
            checkpoints.push(Checkpoint {
                step: step + 1,
                t: tc,
                strength,
                delta_k: b.delta_k,
                delta_v_dpsi: b.delta_v_dpsi,
            });
        }
    }

    let b = bookkeeping(&psi0, &lap0, &dpsi, &kernel, ramp.strength(ramp.tau));
    let a_w = overlap_samples(&psi0, &kernel);
    Ok(SimReport {
        mesh: *mesh,
        ramp: *ramp,
        steps: options.steps,
        norm_error: b.norm_error,
        k0: b.k0,
        delta_k: b.delta_k,
        delta_v_dpsi: b.delta_v_dpsi,
        delta_v_psi0: a_w * ramp.v_m,
        a_w,
        max_step_ratio: max_ratio,
        untrusted: b.norm_error.abs() > UNTRUSTED_NORM,
        under_resolved: kernel.under_resolved,
        checkpoints,
        psi0,
        dpsi,
    })
}
