//! Crank–Nicolson integrator used to cross-check the production scheme.
//!
//! Solves `(I + iΔt H/2) ψ_{n+1} = (I − iΔt H/2) ψ_n` with `H = −∂² + V̄`,
//! written for `Δψ = ψ − ψ₀` so that `ψ₀` never enters the rounding of the
//! update.

use num_complex::Complex64;

use super::{bookkeeping, gaussian_kernel, laplacian, overlap_samples, BarrierRamp, Mesh, SimReport, UNTRUSTED_NORM};
use crate::error::{domain, Result};
use crate::wellcore::WellState;

pub fn crank_nicolson(state: &WellState, ramp: &BarrierRamp, mesh: &Mesh, steps: usize) -> Result<SimReport> {
    ramp.validate()?;
    if steps == 0 {
        return domain("simulation needs at least one step");
    }
    let kernel = gaussian_kernel(ramp.w, ramp.x0, mesh)?;
    let dx = mesh.dx();
    let n = mesh.points();
    let psi0 = mesh.sample(|x| state.evaluate(x, state.t0()));
    let mut lap0 = vec![Complex64::new(0.0, 0.0); n];
    laplacian(&psi0, dx, &mut lap0);

    let dt = ramp.tau / steps as f64;
    let half = Complex64::new(0.0, 0.5 * dt);
    let off = -1.0 / (dx * dx);
    let m = n - 2;
    let mut dpsi = vec![Complex64::new(0.0, 0.0); n];
    let mut rhs = vec![Complex64::new(0.0, 0.0); m];
    let mut diag = vec![Complex64::new(0.0, 0.0); m];
    let mut c_prime = vec![Complex64::new(0.0, 0.0); m];
    let mut max_ratio: f64 = 0.0;

    for step in 0..steps {
        let vbar = ramp.step_average(step as f64 * dt, dt);
        let psi_norm: f64 = (1..n - 1).map(|i| (psi0[i] + dpsi[i]).norm_sqr()).sum();
        for j in 0..m {
            let i = j + 1;
            let hd = 2.0 / (dx * dx) + vbar * kernel.values[i];
            let h_dpsi = hd * dpsi[i] + off * (dpsi[i - 1] + dpsi[i + 1]);
            let h_psi0 = -lap0[i] + vbar * kernel.values[i] * psi0[i];
            rhs[j] = dpsi[i] - half * h_dpsi - 2.0 * half * h_psi0;
            diag[j] = 1.0 + half * hd;
        }
        // Thomas sweep with constant off-diagonal `half · off`
        let e = half * off;
        c_prime[0] = e / diag[0];
        rhs[0] /= diag[0];
        for j in 1..m {
            let denom = diag[j] - e * c_prime[j - 1];
            c_prime[j] = e / denom;
            rhs[j] = (rhs[j] - e * rhs[j - 1]) / denom;
        }
        for j in (0..m - 1).rev() {
            rhs[j] = rhs[j] - c_prime[j] * rhs[j + 1];
        }
        let change: f64 = (0..m).map(|j| (rhs[j] - dpsi[j + 1]).norm_sqr()).sum();
        max_ratio = max_ratio.max((change / psi_norm).sqrt());
        dpsi[1..n - 1].copy_from_slice(&rhs);
    }

    let b = bookkeeping(&psi0, &lap0, &dpsi, &kernel, ramp.strength(ramp.tau));
    let a_w = overlap_samples(&psi0, &kernel);
    Ok(SimReport {
        mesh: *mesh,
        ramp: *ramp,
        steps,
        norm_error: b.norm_error,
        k0: b.k0,
        delta_k: b.delta_k,
        delta_v_dpsi: b.delta_v_dpsi,
        delta_v_psi0: a_w * ramp.v_m,
        a_w,
        max_step_ratio: max_ratio,
        untrusted: b.norm_error.abs() > UNTRUSTED_NORM,
        under_resolved: kernel.under_resolved,
        checkpoints: Vec::new(),
        psi0,
        dpsi,
    })
}
