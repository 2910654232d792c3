//! Space-time density grids across a sudden split.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{basis_change, check_geometry, off_zero, Caps, OffZero, SplitConfig, ZERO_TOL};
use crate::error::{Error, Result};
use crate::wellcore::{phase, WellState};

/// Post-split norm below which the caps are considered insufficient.
const MIN_POST_NORM: f64 = 0.999;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Carpet {
    pub nx: usize,
    pub nt: usize,
    /// `|Ψ(x_i, t_n)|²` at `values[n * nx + i]`.
    pub values: Vec<f64>,
    pub post_norm: f64,
    pub warnings: Vec<OffZero>,
}

impl Carpet {
    pub fn at(&self, n: usize, i: usize) -> f64 {
        self.values[n * self.nx + i]
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.values[n * self.nx..(n + 1) * self.nx]
    }
}

/// `|Ψ|²` on `t_grid × x_grid`, with the well split at `t_split`.
///
/// Rows with `t < t_split` evolve in the original basis; later rows evolve each
/// sub-well superposition with its own phases.
pub fn carpet(
    state: &WellState,
    cfg: &SplitConfig,
    t_split: f64,
    x_grid: &[f64],
    t_grid: &[f64],
    caps: Caps,
) -> Result<Carpet> {
    check_geometry(state, cfg)?;
    let well = *cfg.well();
    let l_max = caps.l_max.max(state.max_mode());
    let matrix = basis_change(cfg, l_max, caps.k_max)?;
    let amps = matrix.project(&state.coefficients_at(t_split));
    let post_norm: f64 = amps.iter().flatten().map(|a| a.norm_sqr()).sum();
    if post_norm < MIN_POST_NORM {
        return Err(Error::Truncation {
            defect: 1.0 - post_norm,
            allowed: 1.0 - MIN_POST_NORM,
        });
    }

    let segments = cfg.segments();
    let owner: Vec<Option<usize>> = x_grid
        .iter()
        .map(|&x| segments.iter().position(|s| s.contains(x)))
        .collect();
    let pre_modes: Vec<Vec<f64>> = x_grid
        .iter()
        .map(|&x| state.populated_modes().map(|l| well.mode(l, x)).collect())
        .collect();
    let post_modes: Vec<Vec<f64>> = x_grid
        .iter()
        .zip(&owner)
        .map(|(&x, j)| match j {
            Some(j) => (1..=matrix.k_max()).map(|k| segments[*j].mode(k, x)).collect(),
            None => Vec::new(),
        })
        .collect();
    let populated: Vec<u32> = state.populated_modes().collect();

    let nx = x_grid.len();
    let mut values = vec![0.0; nx * t_grid.len()];
    values.par_chunks_mut(nx.max(1)).zip(t_grid).for_each(|(row, &t)| {
        if t < t_split {
            let c = state.coefficients_at(t);
            let c: Vec<Complex64> = populated.iter().map(|&l| c[l as usize - 1]).collect();
            for (v, modes) in row.iter_mut().zip(&pre_modes) {
                let psi: Complex64 = c.iter().zip(modes).map(|(c, m)| c * m).sum();
                *v = psi.norm_sqr();
            }
        } else {
            let evolved: Vec<Vec<Complex64>> = amps
                .iter()
                .zip(&segments)
                .map(|(b, seg)| {
                    b.iter()
                        .enumerate()
                        .map(|(ki, b)| b * phase(-seg.energy(ki as u32 + 1) * (t - t_split)))
                        .collect()
                })
                .collect();
            for ((v, modes), j) in row.iter_mut().zip(&post_modes).zip(&owner) {
                *v = match j {
                    Some(j) => {
                        let psi: Complex64 = evolved[*j].iter().zip(modes).map(|(b, m)| b * m).sum();
                        psi.norm_sqr()
                    }
                    None => 0.0,
                };
            }
        }
    });

    Ok(Carpet {
        nx,
        nt: t_grid.len(),
        values,
        post_norm,
        warnings: off_zero(state, cfg, t_split, ZERO_TOL),
    })
}
