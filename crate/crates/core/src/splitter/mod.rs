//! Sudden splitting of the well at zeros of the state.
//!
//! Barriers at `χ_1 < … < χ_N` cut the well into `N + 1` sub-wells. The state
//! at the split instant is re-expanded in sub-well modes through
//! [`BasisChangeMatrix`]; sub-wells then evolve as independent sectors.

mod basis;
mod carpet;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

pub use basis::{basis_change, matrix_element, BasisChangeMatrix, DEGENERACY_TOL};
pub use carpet::{carpet, Carpet};

use crate::error::{domain, Error, Result};
use crate::quadrature::GaussLegendre;
use crate::wellcore::{WellSegment, WellState};

/// Default tolerance on `|Ψ(χ)|` for a barrier to count as placed at a zero.
pub const ZERO_TOL: f64 = 1e-8;

/// Relative agreement required by [`mean_energy_check`].
pub const ENERGY_CHECK_TOL: f64 = 1e-6;

/// Barrier positions inside a well.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitConfig {
    well: WellSegment,
    chis: Vec<f64>,
}

impl SplitConfig {
    /// Barriers in the unit well.
    pub fn new(chis: Vec<f64>) -> Result<Self> {
        Self::in_well(WellSegment::unit(), chis)
    }

    pub fn in_well(well: WellSegment, chis: Vec<f64>) -> Result<Self> {
        if chis.is_empty() {
            return domain("a split needs at least one barrier");
        }
        let mut prev = well.left();
        for &c in &chis {
            if !(c.is_finite() && c > prev && c < well.right()) {
                return domain(format!(
                    "barrier positions must be strictly increasing inside ({}, {}), got {chis:?}",
                    well.left(),
                    well.right()
                ));
            }
            prev = c;
        }
        Ok(Self { well, chis })
    }

    pub fn well(&self) -> &WellSegment {
        &self.well
    }

    pub fn chis(&self) -> &[f64] {
        &self.chis
    }

    pub fn wells(&self) -> usize {
        self.chis.len() + 1
    }

    /// Sub-well segments `(χ_{j−1}, χ_j)` for `j = 1..=N+1`.
    pub fn segments(&self) -> Vec<WellSegment> {
        let mut edges = Vec::with_capacity(self.chis.len() + 2);
        edges.push(self.well.left());
        edges.extend_from_slice(&self.chis);
        edges.push(self.well.right());
        edges
            .windows(2)
            .map(|w| WellSegment::new(w[0], w[1]).expect("validated barrier positions"))
            .collect()
    }
}

/// Truncation caps on original modes (`l_max`) and sub-well modes (`k_max`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Caps {
    pub l_max: u32,
    pub k_max: u32,
}

impl Default for Caps {
    fn default() -> Self {
        Self { l_max: 200, k_max: 200 }
    }
}

/// A barrier that does not sit on a zero of the state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OffZero {
    pub chi: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitProbabilities {
    /// `P(j)` for `j = 1..=N+1`.
    pub probabilities: Vec<f64>,
    pub warnings: Vec<OffZero>,
}

fn check_geometry(state: &WellState, cfg: &SplitConfig) -> Result<()> {
    if state.segment() != cfg.well() {
        return domain("state and split configuration live on different wells");
    }
    Ok(())
}

fn off_zero(state: &WellState, cfg: &SplitConfig, t: f64, zero_tol: f64) -> Vec<OffZero> {
    cfg.chis()
        .iter()
        .map(|&chi| OffZero {
            chi,
            residual: state.evaluate(chi, t).norm(),
        })
        .filter(|w| w.residual > zero_tol)
        .collect()
}

/// `P(j) = ∫ |Ψ(x, t)|²` over each sub-well, from closed-form mode overlaps.
pub fn split_probabilities(state: &WellState, cfg: &SplitConfig, t: f64) -> Result<SplitProbabilities> {
    split_probabilities_with(state, cfg, t, ZERO_TOL)
}

pub fn split_probabilities_with(
    state: &WellState,
    cfg: &SplitConfig,
    t: f64,
    zero_tol: f64,
) -> Result<SplitProbabilities> {
    check_geometry(state, cfg)?;
    let seg = state.segment();
    let c = state.coefficients_at(t);
    let mut probabilities = Vec::with_capacity(cfg.wells());
    for sub in cfg.segments() {
        let mut p = 0.0;
        for (i, ci) in c.iter().enumerate() {
            if ci.norm_sqr() == 0.0 {
                continue;
            }
            for (m, cm) in c.iter().enumerate().skip(i) {
                let w = seg.mode_overlap(i as u32 + 1, m as u32 + 1, sub.left(), sub.right());
                let cross = (ci.conj() * cm).re * w;
                p += if m == i { cross } else { 2.0 * cross };
            }
        }
        if !(-1e-12..=1.0 + 1e-12).contains(&p) {
            return Err(Error::Internal(format!("sub-well probability {p} outside [0, 1]")));
        }
        probabilities.push(p.clamp(0.0, 1.0));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::Internal(format!("sub-well probabilities sum to {total}")));
    }
    Ok(SplitProbabilities {
        probabilities,
        warnings: off_zero(state, cfg, t, zero_tol),
    })
}

/// Closed-form split coefficients of the alpha state in the unit well.
///
/// Returns `(a_n, b_m)` for `n, m = 1..=count`, the amplitudes on the left
/// and right sub-well modes. `x0 = 1/2` is accepted as the limit in which
/// the state becomes `−ψ_2`.
pub fn simple_coefficients(x0: f64, count: u32) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(x0 > 0.0 && x0 <= 0.5) {
        return domain(format!("simple coefficients need 0 < x0 <= L/2, got {x0}"));
    }
    let big_l = 1.0;
    let alpha = 2.0 * (PI * x0 / big_l).cos();
    let norm = (alpha * alpha + 1.0).sqrt();
    let y = big_l - x0;
    let sign = |n: u32| if n % 2 == 0 { 1.0 } else { -1.0 };

    // sin(lπx0/L) / (l² w² − n² L²) with its limit at l w = n L
    let left_term = |l: u32, n: u32| {
        let lw = l as f64 * x0;
        let nl = n as f64 * big_l;
        if (lw - nl).abs() < DEGENERACY_TOL * big_l {
            sign(n) * PI / (2.0 * n as f64 * big_l * big_l)
        } else {
            (l as f64 * PI * x0 / big_l).sin() / (lw * lw - nl * nl)
        }
    };
    let right_term = |l: u32, m: u32| {
        let lw = l as f64 * y;
        let ml = m as f64 * big_l;
        if (lw - ml).abs() < DEGENERACY_TOL * big_l {
            -sign(l + m) * PI / (2.0 * m as f64 * big_l * big_l)
        } else {
            (l as f64 * PI * x0 / big_l).sin() / (lw * lw - ml * ml)
        }
    };

    let a = (1..=count)
        .map(|n| {
            let pre = 2.0 * n as f64 * big_l.powf(1.5) * x0.sqrt() * sign(n) / (PI * norm);
            pre * (alpha * left_term(1, n) - left_term(2, n))
        })
        .collect();
    let b = (1..=count)
        .map(|m| {
            let pre = -2.0 * m as f64 * big_l.powf(1.5) * y.sqrt() / (PI * norm);
            pre * (alpha * right_term(1, m) - right_term(2, m))
        })
        .collect();
    Ok((a, b))
}

/// One level of the interference spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectrumEntry {
    /// Sub-well index, from 1.
    pub well: usize,
    pub k: u32,
    pub energy: f64,
}

/// `E_j(k) = π² k² / D_j²` for every sub-well and `k ≤ k_max`, ascending.
///
/// Equal energies keep `(well, k)` order.
pub fn interference_spectrum(cfg: &SplitConfig, k_max: u32) -> Result<Vec<SpectrumEntry>> {
    if k_max == 0 {
        return domain("k_max must be >= 1");
    }
    let mut out: Vec<SpectrumEntry> = cfg
        .segments()
        .iter()
        .enumerate()
        .flat_map(|(j, seg)| {
            (1..=k_max).map(move |k| SpectrumEntry {
                well: j + 1,
                k,
                energy: seg.energy(k),
            })
        })
        .collect();
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub well: usize,
    pub k: u32,
    pub energy: f64,
    pub amplitude: Complex64,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeTable {
    /// Ordered by well, then `k`.
    pub outcomes: Vec<Outcome>,
    /// `Σ_k P(k_j)` per well.
    pub marginals: Vec<f64>,
    /// `P(j)` from [`split_probabilities`].
    pub split: Vec<f64>,
    /// `1 − Σ` over the table.
    pub tail: f64,
    /// Upper bound on the probability beyond `k_max`.
    pub tail_bound: f64,
    pub caps: Caps,
    pub warnings: Vec<OffZero>,
}

impl OutcomeTable {
    pub fn probability(&self, well: usize, k: u32) -> f64 {
        self.outcomes
            .iter()
            .find(|o| o.well == well && o.k == k)
            .map_or(0.0, |o| o.probability)
    }

    pub fn captured(&self) -> f64 {
        self.marginals.iter().sum()
    }
}

/// `P(k_j) = |Σ_l d_l A_{k_j l}|²` for the state at its reference time.
///
/// `l_max` is raised to the state's highest mode if needed.
pub fn outcome_probabilities(state: &WellState, cfg: &SplitConfig, caps: Caps) -> Result<OutcomeTable> {
    check_geometry(state, cfg)?;
    let caps = Caps {
        l_max: caps.l_max.max(state.max_mode()),
        k_max: caps.k_max,
    };
    let t = state.t0();
    let matrix = basis_change(cfg, caps.l_max, caps.k_max)?;
    let amps = matrix.project(state.coeffs());
    let segments = cfg.segments();
    let mut outcomes = Vec::with_capacity(amps.len() * caps.k_max as usize);
    let mut marginals = Vec::with_capacity(amps.len());
    for (j, (row, seg)) in amps.iter().zip(&segments).enumerate() {
        let mut sum = crate::compensated::NeumaierSum::default();
        for (ki, &amplitude) in row.iter().enumerate() {
            let probability = amplitude.norm_sqr();
            sum += probability;
            outcomes.push(Outcome {
                well: j + 1,
                k: ki as u32 + 1,
                energy: seg.energy(ki as u32 + 1),
                amplitude,
                probability,
            });
        }
        marginals.push(sum.total());
    }
    let split = split_probabilities(state, cfg, t)?;
    let tail = 1.0 - marginals.iter().sum::<f64>();
    Ok(OutcomeTable {
        outcomes,
        marginals,
        split: split.probabilities,
        tail,
        tail_bound: matrix.tail_bound(state, t),
        caps,
        warnings: split.warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WellEnergy {
    pub probability: f64,
    pub mean_energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyCheck {
    /// `⟨E⟩` of the unsplit state.
    pub mean_energy: f64,
    /// `Σ_j P_j ⟨E_j⟩` from the truncated, renormalized sub-well states.
    pub split_sum: f64,
    pub per_well: Vec<WellEnergy>,
    pub consistent: bool,
}

/// Compares `⟨E⟩` with the probability-weighted sub-well energies.
///
/// The right side integrates `−Ψ* Ψ''` over each sub-well; it drifts from the
/// left side when a barrier sits away from a zero.
pub fn mean_energy_check(state: &WellState, cfg: &SplitConfig) -> Result<EnergyCheck> {
    check_geometry(state, cfg)?;
    let t = state.t0();
    let gl = GaussLegendre::new(48);
    let panels = (state.max_mode() as usize / 4).max(2);
    let per_well: Vec<WellEnergy> = cfg
        .segments()
        .iter()
        .map(|seg| {
            let norm = gl.composite(seg.left(), seg.right(), panels, |x| state.evaluate(x, t).norm_sqr());
            let kin = gl.composite(seg.left(), seg.right(), panels, |x| {
                -(state.evaluate(x, t).conj() * state.second_derivative(x, t)).re
            });
            WellEnergy {
                probability: norm,
                mean_energy: if norm > 0.0 { kin / norm } else { 0.0 },
            }
        })
        .collect();
    let split_sum = per_well.iter().map(|w| w.probability * w.mean_energy).sum::<f64>();
    let mean_energy = state.mean_energy();
    Ok(EnergyCheck {
        mean_energy,
        split_sum,
        consistent: (split_sum - mean_energy).abs() <= ENERGY_CHECK_TOL * mean_energy.abs().max(1.0),
        per_well,
    })
}
