//! Energy lent to or taken from a suddenly raised barrier.
//!
//! For a post-selected sub-well outcome `k_j`, the barrier energy is
//! `⟨E^B⟩ = −Σ_l P_{k_j}(l) ΔE_{k_j l}` with `ΔE_{k_j l} = E_j(k_j) − E_0(l)`.
//! The weights `P_{k_j}(l)` depend on the chosen [`TransitionModel`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::splitter::{matrix_element, SplitConfig};
use crate::wellcore::{WellSegment, WellState};

/// Amplitudes `|⟨k_j|Ψ⟩|` below this are treated as a forbidden post-selection.
const MIN_AMPLITUDE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionModel {
    /// `|d_l|²`, independent of the outcome.
    Modulus,
    /// `Re(A_{k_j l} d_l / Σ_l' A_{k_j l'} d_l')`; may leave `[0, 1]`.
    Weak,
    /// `|A_{k_j l}|² |d_l|²`, normalized.
    Mixed,
}

impl TransitionModel {
    pub const ALL: [TransitionModel; 3] = [Self::Modulus, Self::Weak, Self::Mixed];

    pub fn name(self) -> &'static str {
        match self {
            Self::Modulus => "modulus",
            Self::Weak => "weak",
            Self::Mixed => "mixed",
        }
    }
}

/// A post-selected outcome: sub-well `well` (from 1), mode `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Outcome {
    pub well: usize,
    pub k: u32,
}

impl Outcome {
    pub fn new(well: usize, k: u32) -> Self {
        Self { well, k }
    }
}

struct Setup {
    well: WellSegment,
    sub: WellSegment,
    d: Vec<Complex64>,
}

fn setup(state: &WellState, cfg: &SplitConfig, outcome: Outcome, l_max: u32) -> Result<Setup> {
    if state.segment() != cfg.well() {
        return domain("state and split configuration live on different wells");
    }
    let segments = cfg.segments();
    if outcome.well == 0 || outcome.well > segments.len() || outcome.k == 0 {
        return domain(format!(
            "outcome ({}, {}) outside wells 1..={} with k >= 1",
            outcome.well,
            outcome.k,
            segments.len()
        ));
    }
    let n = l_max.max(state.max_mode()) as usize;
    let mut d = state.coeffs().to_vec();
    d.resize(n, Complex64::new(0.0, 0.0));
    Ok(Setup {
        well: *cfg.well(),
        sub: segments[outcome.well - 1],
        d,
    })
}

/// `P_{k_j}(l)` for `l = 1..=max(l_max, highest populated mode)`.
pub fn transition_probs(
    model: TransitionModel,
    state: &WellState,
    cfg: &SplitConfig,
    outcome: Outcome,
    l_max: u32,
) -> Result<Vec<f64>> {
    let s = setup(state, cfg, outcome, l_max)?;
    let a: Vec<f64> = (1..=s.d.len() as u32)
        .map(|l| matrix_element(&s.well, &s.sub, outcome.k, l))
        .collect();
    Ok(match model {
        TransitionModel::Modulus => s.d.iter().map(|d| d.norm_sqr()).collect(),
        TransitionModel::Weak => {
            let amp: Complex64 = a.iter().zip(&s.d).map(|(a, d)| a * d).sum();
            if amp.norm() < MIN_AMPLITUDE {
                return domain(format!(
                    "weak values need a possible post-selection, but <k|psi> = {amp} for outcome ({}, {})",
                    outcome.well, outcome.k
                ));
            }
            a.iter().zip(&s.d).map(|(a, d)| (a * d / amp).re).collect()
        }
        TransitionModel::Mixed => {
            let w: Vec<f64> = a.iter().zip(&s.d).map(|(a, d)| a * a * d.norm_sqr()).collect();
            let total: f64 = w.iter().sum();
            if total == 0.0 {
                return domain(format!("outcome ({}, {}) has zero overlap with the state", outcome.well, outcome.k));
            }
            w.into_iter().map(|w| w / total).collect()
        }
    })
}

/// `⟨E^B⟩ = −Σ_l P_{k_j}(l) (E_j(k_j) − E_0(l))`.
pub fn barrier_energy(
    model: TransitionModel,
    state: &WellState,
    cfg: &SplitConfig,
    outcome: Outcome,
    l_max: u32,
) -> Result<f64> {
    let weights = transition_probs(model, state, cfg, outcome, l_max)?;
    let well = state.segment();
    let sub = cfg.segments()[outcome.well - 1];
    let e_out = sub.energy(outcome.k);
    Ok(-weights
        .iter()
        .enumerate()
        .map(|(i, p)| p * (e_out - well.energy(i as u32 + 1)))
        .sum::<f64>())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZeroTheorem {
    /// `Σ_l d_l sin(lπx0/L)`; zero exactly when `Ψ(x0) = 0`.
    pub numerator: Complex64,
    /// `−Re[Σ d_l sin(lπx0/L) / Σ d_l sin(lπx0/L)/ΔE_{k l}]`.
    pub closed_form: f64,
    /// The weak-model barrier energy computed from matrix entries.
    pub weak: f64,
}

/// Evaluates the weak-model barrier energy for outcome `k` of the left sub-well
/// `[0, x0]` both directly and through its closed form.
///
/// Using `A_{kl} ΔE_{kl} = −ψ_l(x0) φ_k'(x0)` the ratio collapses to sums of
/// `d_l sin(lπx0/L)`; terms with `ΔE = 0` keep their `A_{kl}` form.
pub fn zero_theorem_check(state: &WellState, x0: f64, k: u32, l_max: u32) -> Result<ZeroTheorem> {
    let well = *state.segment();
    let cfg = SplitConfig::in_well(well, vec![x0])?;
    let s = setup(state, &cfg, Outcome::new(1, k), l_max)?;
    let sub = s.sub;
    let e_out = sub.energy(k);
    let slope = sub.mode_derivative(k, sub.right());
    let root = (0.5 * well.width()).sqrt();

    let mut numerator = Complex64::new(0.0, 0.0);
    let mut denominator = Complex64::new(0.0, 0.0);
    for (i, d) in s.d.iter().enumerate() {
        let l = i as u32 + 1;
        let sine = (well.wavenumber(l) * (x0 - well.left())).sin();
        numerator += d * sine;
        let de = e_out - well.energy(l);
        if de.abs() < crate::deltasolver::DEGENERACY_TOL * e_out {
            denominator -= d * root * matrix_element(&well, &sub, k, l) / slope;
        } else {
            denominator += d * sine / de;
        }
    }
    let weak = barrier_energy(TransitionModel::Weak, state, &cfg, Outcome::new(1, k), l_max)?;
    Ok(ZeroTheorem {
        numerator,
        closed_form: -(numerator / denominator).re,
        weak,
    })
}
