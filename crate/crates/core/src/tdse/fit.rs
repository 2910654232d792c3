//! Empirical fit laws, parameter sweeps and log-log regression.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::{simulate_with, BarrierRamp, Checkpoint, Mesh, SimOptions};
use crate::error::{domain, Result};
use crate::wellcore::WellState;

pub const C_K: f64 = 4.9895e-9;
pub const C_V: f64 = -1.5921e-7;
pub const P_V: f64 = 4.3164;
pub const Q_V: f64 = 2.3146;

/// Widest barrier for which the fit laws were calibrated.
pub const NARROW_LIMIT: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitPrediction {
    pub delta_k: f64,
    pub delta_v: f64,
    /// `w` outside the narrow-barrier regime.
    pub extrapolated: bool,
}

/// `ΔK = C_K A_w τ² V⁴ / w³` and `ΔV = C_V A_w τ² V^p / w^q`.
pub fn fit_predict(tau: f64, w: f64, a_w: f64, v: f64) -> FitPrediction {
    FitPrediction {
        delta_k: C_K * a_w * tau * tau * v.powi(4) / w.powi(3),
        delta_v: C_V * a_w * tau * tau * v.powf(P_V) / w.powf(Q_V),
        extrapolated: w > NARROW_LIMIT,
    }
}

/// Least-squares fit of `ln|y| = c + Σ_i p_i ln x_i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub names: Vec<String>,
    pub exponents: Vec<f64>,
    pub intercept: f64,
    pub rms_ln: f64,
    pub rms_dex: f64,
    pub samples: usize,
}

impl PowerLawFit {
    pub fn exponent(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.exponents[i])
    }
}

/// Each row of `xs` holds the regressors for the matching `ys` entry.
pub fn fit_power_law(names: &[&str], xs: &[Vec<f64>], ys: &[f64]) -> Result<PowerLawFit> {
    let p = names.len();
    if xs.len() != ys.len() || xs.iter().any(|r| r.len() != p) {
        return domain("regressor rows must match the response length and name count");
    }
    if ys.len() <= p + 1 {
        return domain(format!("{} samples cannot determine {} exponents", ys.len(), p));
    }
    if ys.iter().chain(xs.iter().flatten()).any(|v| !(v.abs() > 0.0 && v.is_finite())) {
        return domain("power-law fits need finite nonzero data");
    }
    let a = DMatrix::from_fn(ys.len(), p + 1, |i, j| if j == 0 { 1.0 } else { xs[i][j - 1].abs().ln() });
    let b = DVector::from_iterator(ys.len(), ys.iter().map(|y| y.abs().ln()));
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| crate::Error::Internal(format!("least squares failed: {e}")))?;
    let resid = &a * &coef - &b;
    let rms_ln = (resid.norm_squared() / ys.len() as f64).sqrt();
    Ok(PowerLawFit {
        names: names.iter().map(|s| s.to_string()).collect(),
        exponents: coef.iter().skip(1).copied().collect(),
        intercept: coef[0],
        rms_ln,
        rms_dex: rms_ln / std::f64::consts::LN_10,
        samples: ys.len(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepJob {
    pub state_id: String,
    pub state: WellState,
    pub tau: f64,
    pub w: f64,
    pub x0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub state_id: String,
    pub tau: f64,
    pub w: f64,
    pub v_m: f64,
    pub a_w: f64,
    pub k0: f64,
    pub delta_k: f64,
    pub delta_v_dpsi: f64,
    pub delta_v_psi0: f64,
    pub norm_error: f64,
    pub aborted: bool,
    pub error: Option<String>,
    #[serde(skip)]
    pub checkpoints: Vec<Checkpoint>,
}

/// Runs every job; failed runs become rows with `aborted` set.
pub fn sweep(jobs: &[SweepJob], mesh: &Mesh, v_m: f64, options: &SimOptions) -> Vec<SweepRow> {
    jobs.par_iter()
        .map(|job| {
            let run = BarrierRamp::linear(job.w, job.x0, v_m, job.tau)
                .and_then(|ramp| simulate_with(&job.state, &ramp, mesh, options));
            match run {
                Ok(r) => SweepRow {
                    state_id: job.state_id.clone(),
                    tau: job.tau,
                    w: job.w,
                    v_m,
                    a_w: r.a_w,
                    k0: r.k0,
                    delta_k: r.delta_k,
                    delta_v_dpsi: r.delta_v_dpsi,
                    delta_v_psi0: r.delta_v_psi0,
                    norm_error: r.norm_error,
                    aborted: false,
                    error: None,
                    checkpoints: r.checkpoints,
                },
                Err(e) => SweepRow {
                    state_id: job.state_id.clone(),
                    tau: job.tau,
                    w: job.w,
                    v_m,
                    a_w: f64::NAN,
                    k0: f64::NAN,
                    delta_k: f64::NAN,
                    delta_v_dpsi: f64::NAN,
                    delta_v_psi0: f64::NAN,
                    norm_error: f64::NAN,
                    aborted: true,
                    error: Some(e.to_string()),
                    checkpoints: Vec::new(),
                },
            }
        })
        .collect()
}
