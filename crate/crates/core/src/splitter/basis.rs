//! Change of basis from original-well modes to sub-well modes.

use num_complex::Complex64;
use rayon::prelude::*;

use super::SplitConfig;
use crate::quadrature::GaussLegendre;
use crate::wellcore::{WellSegment, WellState};

/// Relative threshold on `|l D − k L|` below which an entry is node-aligned.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// `⟨k_j | l⟩`: overlap of sub-well mode `k` on `sub` with mode `l` of `well`.
///
/// Rewritten with half angles so the expression stays finite as `l D → k L`,
/// where it tends to `√(D/L) cos(lπ χ_{j−1}/L)`.
pub fn matrix_element(well: &WellSegment, sub: &WellSegment, k: u32, l: u32) -> f64 {
    let big_l = well.width();
    let d = sub.width();
    let (k, l) = (k as f64, l as f64);
    let theta = l * std::f64::consts::PI * (sub.left() - well.left()) / big_l;
    let gap = l * d - k * big_l;
    if gap.abs() < DEGENERACY_TOL * big_l {
        return (d / big_l).sqrt() * theta.cos();
    }
    let half = 0.5 * std::f64::consts::PI * gap / big_l;
    2.0 * k * (big_l * d).sqrt() * (theta + half).cos() * (half.sin() / half) / (l * d + k * big_l)
}

/// Truncated change-of-basis matrices, one block per sub-well.
#[derive(Clone, Debug)]
pub struct BasisChangeMatrix {
    config: SplitConfig,
    l_max: u32,
    k_max: u32,
    // blocks[j][(k − 1) · l_max + (l − 1)]
    blocks: Vec<Vec<f64>>,
}

impl BasisChangeMatrix {
    pub fn config(&self) -> &SplitConfig {
        &self.config
    }

    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    /// `A_{k_j l}` with `j` counted from 1.
    pub fn entry(&self, j: usize, k: u32, l: u32) -> f64 {
        self.blocks[j - 1][(k as usize - 1) * self.l_max as usize + (l as usize - 1)]
    }

    pub fn row(&self, j: usize, k: u32) -> &[f64] {
        let n = self.l_max as usize;
        let start = (k as usize - 1) * n;
        &self.blocks[j - 1][start..start + n]
    }

    /// Sub-well amplitudes `Σ_l A_{k_j l} c_l`, outer index over wells.
    ///
    /// Coefficients beyond `l_max` are ignored; callers size the matrix.
    pub fn project(&self, coeffs: &[Complex64]) -> Vec<Vec<Complex64>> {
        let used = coeffs.len().min(self.l_max as usize);
        (1..=self.blocks.len())
            .map(|j| {
                (1..=self.k_max)
                    .map(|k| {
                        let row = self.row(j, k);
                        coeffs[..used].iter().zip(row).map(|(c, a)| c * a).sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// Rigorous bound on `Σ_{k > k_max} |⟨k_j|Ψ⟩|²` summed over wells.
    ///
    /// Integrating the sub-well sine coefficients by parts splits them into
    /// a boundary part falling as `1/k` and a part bounded by `∫|Ψ'|²`.
    pub fn tail_bound(&self, state: &WellState, t: f64) -> f64 {
        let gl = GaussLegendre::new(48);
        let panels = (state.max_mode() as usize / 4).max(2);
        let kk = self.k_max as f64;
        self.config
            .segments()
            .iter()
            .map(|seg| {
                let d = seg.width();
                let ends = state.evaluate(seg.left(), t).norm() + state.evaluate(seg.right(), t).norm();
                let s1 = 2.0 * d / std::f64::consts::PI.powi(2) * ends * ends / kk;
                let kinetic = gl.composite(seg.left(), seg.right(), panels, |x| state.derivative(x, t).norm_sqr());
                let s2 = (d / (kk * std::f64::consts::PI)).powi(2) * kinetic;
                (s1.sqrt() + s2.sqrt()).powi(2)
            })
            .sum()
    }
}

/// Builds the matrix for `cfg` with modes `l ≤ l_max` and `k_j ≤ k_max`.
pub fn basis_change(cfg: &SplitConfig, l_max: u32, k_max: u32) -> crate::Result<BasisChangeMatrix> {
    if l_max == 0 || k_max == 0 {
        return crate::error::domain(format!("truncation caps must be >= 1, got ({l_max}, {k_max})"));
    }
    let well = *cfg.well();
    let blocks = cfg
        .segments()
        .iter()
        .map(|sub| {
            let mut block = vec![0.0; (k_max * l_max) as usize];
            block
                .par_chunks_mut(l_max as usize)
                .enumerate()
                .for_each(|(ki, row)| {
                    for (li, a) in row.iter_mut().enumerate() {
                        *a = matrix_element(&well, sub, ki as u32 + 1, li as u32 + 1);
                    }
                });
            block
        })
        .collect();
    Ok(BasisChangeMatrix {
        config: cfg.clone(),
        l_max,
        k_max,
        blocks,
    })
}
