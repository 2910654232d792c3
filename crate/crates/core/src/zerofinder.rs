//! Zeros of Ψ(x, t) strictly inside the well.
//!
//! A zero of a complex function on a spatial slice is found through the real
//! zeros of `e^{iθ}Ψ`, with `θ` chosen to make the coefficient vector as real
//! as possible. For two-mode states this phase exists exactly at the instants
//! when a zero is present; for more modes, local minima of `|Ψ|` are refined
//! instead.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::wellcore::WellState;

/// Default residual tolerance on `|Ψ|`.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Distance from a wall inside which nothing is reported.
const WALL_MARGIN: f64 = 1e-9;

/// Tolerance of the analytic node test `sin(lπx/L) = 0`.
const NODE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroKind {
    /// A node shared by every populated mode; present at all times.
    Stationary,
    Transient,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZeroEvent {
    pub x: f64,
    pub t: f64,
    pub kind: ZeroKind,
    /// `|Ψ(x, t)|` at the reported point.
    pub residual: f64,
    /// Set when `∂Ψ/∂x` also vanishes (a tangential or wide zero).
    pub flat: bool,
}

/// Events found plus the number of candidates whose refinement missed `tol`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ZeroScan {
    pub events: Vec<ZeroEvent>,
    pub dropped: usize,
}

/// All zeros of Ψ(·, t) in the open well interval.
pub fn zeros_at_time(state: &WellState, t: f64, grid_n: usize, tol: f64) -> Result<ZeroScan> {
    if grid_n < 64 {
        return domain(format!("zero scan needs grid_n >= 64, got {grid_n}"));
    }
    check_tol(tol)?;
    let stationary = stationary_nodes(state);
    let mut scan = ZeroScan::default();
    for &x in &stationary {
        scan.events.push(event(state, x, t, ZeroKind::Stationary));
    }
    let transient = transient_slice(state, t, grid_n, tol, &stationary);
    scan.dropped += transient.dropped;
    scan.events.extend(transient.events);
    finish(&mut scan.events);
    Ok(scan)
}

/// Zero events in `[t_start, t_end]`, one per occurrence.
///
/// Stationary nodes are reported once, stamped with `t_start`.
pub fn zero_events(
    state: &WellState,
    window: (f64, f64),
    grid: (usize, usize),
    tol: f64,
) -> Result<ZeroScan> {
    let (ta, tb) = window;
    if !(ta.is_finite() && tb.is_finite() && tb > ta) {
        return domain(format!("time window needs t_end > t_start, got [{ta}, {tb}]"));
    }
    let (nx, nt) = grid;
    if nx < 64 {
        return domain(format!("zero scan needs n_x >= 64, got {nx}"));
    }
    check_tol(tol)?;

    let stationary = stationary_nodes(state);
    let mut scan = ZeroScan::default();
    for &x in &stationary {
        scan.events.push(event(state, x, ta, ZeroKind::Stationary));
    }

    let modes: Vec<u32> = state.populated_modes().collect();
    match modes.len() {
        1 => {}
        2 => {
            for t in real_phase_times(state, modes[0], modes[1], ta, tb) {
                let slice = transient_slice(state, t, nx, tol, &stationary);
                scan.dropped += slice.dropped;
                scan.events.extend(slice.events);
            }
        }
        _ => {
            if nt < 2 {
                return domain("a time grid of at least 2 slices is needed for states with 3+ modes");
            }
            let found = search_2d(state, (ta, tb), (nx, nt), tol, &stationary);
            scan.dropped += found.dropped;
            scan.events.extend(found.events);
        }
    }
    finish(&mut scan.events);
    Ok(scan)
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    Ok(())
}

/// Nodes common to every populated mode: `u = p/g` with `g` the gcd of the mode indices.
fn stationary_nodes(state: &WellState) -> Vec<f64> {
    let g = state.populated_modes().fold(0u32, gcd);
    let seg = state.segment();
    (1..g)
        .map(|p| seg.left() + seg.width() * p as f64 / g as f64)
        .filter(|&x| is_common_node(state, x))
        .collect()
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn is_common_node(state: &WellState, x: f64) -> bool {
    let seg = state.segment();
    state
        .populated_modes()
        .all(|l| (seg.wavenumber(l) * (x - seg.left())).sin().abs() < NODE_TOL)
}

fn event(state: &WellState, x: f64, t: f64, kind: ZeroKind) -> ZeroEvent {
    ZeroEvent {
        x,
        t,
        kind,
        residual: state.evaluate(x, t).norm(),
        flat: is_flat(state, x, t),
    }
}

fn derivative_scale(state: &WellState) -> f64 {
    let seg = state.segment();
    let amp = (2.0 / seg.width()).sqrt();
    state
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| c.norm() * amp * seg.wavenumber(i as u32 + 1))
        .sum()
}

fn is_flat(state: &WellState, x: f64, t: f64) -> bool {
    state.derivative(x, t).norm() <= 1e-6 * derivative_scale(state)
}

/// Phase `θ` maximizing the realness of `e^{iθ} c`.
fn realizing_phase(coeffs: &[Complex64]) -> Complex64 {
    let s: Complex64 = coeffs.iter().map(|c| c * c).sum();
    if s.norm() == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    Complex64::from_polar(1.0, -0.5 * s.arg())
}

/// Instants in `[ta, tb]` when `c_1(t)/c_2(t)` is real.
fn real_phase_times(state: &WellState, l1: u32, l2: u32, ta: f64, tb: f64) -> Vec<f64> {
    let seg = state.segment();
    let de = seg.energy(l2) - seg.energy(l1);
    let ratio = state.coeff(l1) / state.coeff(l2);
    let t0 = state.t0();
    // arg(ratio) + de (t − t0) = nπ
    let time = |n: f64| t0 + (n * PI - ratio.arg()) / de;
    let slack = 1e-12 * (tb - ta).abs().max(1.0);
    let n_lo = ((ta - t0) * de + ratio.arg()) / PI;
    let mut n = (n_lo - 1.0).floor();
    let mut out = Vec::new();
    loop {
        let t = time(n);
        if t > tb + slack {
            break;
        }
        if t >= ta - slack {
            out.push(t.clamp(ta, tb));
        }
        n += 1.0;
    }
    out
}

fn transient_slice(state: &WellState, t: f64, n: usize, tol: f64, stationary: &[f64]) -> ZeroScan {
    let seg = *state.segment();
    let rot = realizing_phase(&state.coefficients_at(t));
    let h = seg.width() / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| seg.left() + seg.width() * i as f64 / n as f64).collect();
    let psi: Vec<Complex64> = xs.iter().map(|&x| rot * state.evaluate(x, t)).collect();
    let dpsi: Vec<f64> = xs.iter().map(|&x| state.derivative(x, t).norm()).collect();
    let near_node = |x: f64| stationary.iter().any(|&s| (s - x).abs() < 2.0 * h);

    let real = |x: f64| (rot * state.evaluate(x, t)).re;
    let mut scan = ZeroScan::default();
    let accept = |x: f64, scan: &mut ZeroScan| {
        if x - seg.left() < WALL_MARGIN || seg.right() - x < WALL_MARGIN || near_node(x) {
            return;
        }
        let residual = state.evaluate(x, t).norm();
        if residual < tol {
            scan.events.push(ZeroEvent {
                x,
                t,
                kind: ZeroKind::Transient,
                residual,
                flat: is_flat(state, x, t),
            });
        } else {
            scan.dropped += 1;
        }
    };

    let screen = |i: usize| psi[i].norm() <= 2.0 * dpsi[i] * h + 1e3 * tol;
    let mut bracketed = vec![false; n + 1];
    for i in 0..n {
        let (a, b) = (psi[i].re, psi[i + 1].re);
        if a == 0.0 || a.signum() == b.signum() {
            continue;
        }
        // sign change of Re only matters where Im is also small
        if !(screen(i) || screen(i + 1)) {
            continue;
        }
        bracketed[i] = true;
        bracketed[i + 1] = true;
        let x = refine_sign_change(&real, xs[i], xs[i + 1], |x| (rot * state.derivative(x, t)).re);
        let x = polish_minimum(state, t, x, h);
        accept(x, &mut scan);
    }
    for i in 1..n {
        let m = psi[i].norm();
        if bracketed[i] || m > psi[i - 1].norm() || m > psi[i + 1].norm() || !screen(i) {
            continue;
        }
        if psi[i].re == 0.0 && psi[i].im == 0.0 {
            accept(xs[i], &mut scan);
            continue;
        }
        let x = refine_minimum(state, t, xs[i - 1], xs[i + 1]);
        accept(x, &mut scan);
    }
    scan
}

/// Bisection on a bracketed sign change followed by Newton polishing.
fn refine_sign_change(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, df: impl Fn(f64) -> f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = df(x);
        if d == 0.0 {
            break;
        }
        let next = x - f(x) / d;
        if !(next >= lo && next <= hi) || f(next).abs() >= f(x).abs() {
            break;
        }
        x = next;
    }
    x
}

/// Minimizes `|Ψ|²` on `[lo, hi]` via the sign of `Re(Ψ* Ψ')`.
fn refine_minimum(state: &WellState, t: f64, lo: f64, hi: f64) -> f64 {
    let g = |x: f64| (state.evaluate(x, t).conj() * state.derivative(x, t)).re;
    let (mut lo, mut hi) = (lo, hi);
    if g(lo) > 0.0 || g(hi) < 0.0 {
        return 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A Newton step on `|Ψ|²` that is kept only if it lowers the residual.
fn polish_minimum(state: &WellState, t: f64, x: f64, h: f64) -> f64 {
    let psi = state.evaluate(x, t);
    let d1 = state.derivative(x, t);
    let d2 = state.second_derivative(x, t);
    let g = (psi.conj() * d1).re;
    let dg = d1.norm_sqr() + (psi.conj() * d2).re;
    if dg <= 0.0 {
        return x;
    }
    let next = x - g / dg;
    if (next - x).abs() < h && state.evaluate(next, t).norm() < psi.norm() {
        next
    } else {
        x
    }
}

fn search_2d(
    state: &WellState,
    (ta, tb): (f64, f64),
    (nx, nt): (usize, usize),
    tol: f64,
    stationary: &[f64],
) -> ZeroScan {
    let seg = *state.segment();
    let hx = seg.width() / nx as f64;
    let ht = (tb - ta) / (nt - 1) as f64;
    let xs: Vec<f64> = (0..=nx).map(|i| seg.left() + seg.width() * i as f64 / nx as f64).collect();
    let ts: Vec<f64> = (0..nt).map(|j| ta + (tb - ta) * j as f64 / (nt - 1) as f64).collect();
    let grid: Vec<Vec<f64>> = ts
        .iter()
        .map(|&t| xs.iter().map(|&x| state.evaluate(x, t).norm()).collect())
        .collect();
    let near_node = |x: f64| stationary.iter().any(|&s| (s - x).abs() < 2.0 * hx);

    let mut scan = ZeroScan::default();
    for j in 0..nt {
        for i in 1..nx {
            let m = grid[j][i];
            let mut is_min = true;
            'nb: for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (jj, ii) = (j as i64 + dj, i as i64 + di);
                    if jj < 0 || jj >= nt as i64 || ii < 0 || ii > nx as i64 {
                        continue;
                    }
                    if grid[jj as usize][ii as usize] < m {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if !is_min || near_node(xs[i]) {
                continue;
            }
            let (x, t) = (xs[i], ts[j]);
            let screen = 2.0 * (state.derivative(x, t).norm() * hx + state.time_derivative(x, t).norm() * ht);
            if m > screen + 1e3 * tol {
                continue;
            }
            match newton_2d(state, x, t, hx, ht, tol) {
                Some((x, t))
                    if t >= ta - 1e-12
                        && t <= tb + 1e-12
                        && x - seg.left() > WALL_MARGIN
                        && seg.right() - x > WALL_MARGIN
                        && !near_node(x) =>
                {
                    scan.events.push(ZeroEvent {
                        x,
                        t: t.clamp(ta, tb),
                        kind: ZeroKind::Transient,
                        residual: state.evaluate(x, t).norm(),
                        flat: is_flat(state, x, t),
                    });
                }
                Some(_) => {}
                None => scan.dropped += 1,
            }
        }
    }
    scan
}

/// Newton iteration on `(Re Ψ, Im Ψ) = 0` in the `(x, t)` plane.
fn newton_2d(state: &WellState, mut x: f64, mut t: f64, hx: f64, ht: f64, tol: f64) -> Option<(f64, f64)> {
    for _ in 0..60 {
        let f = state.evaluate(x, t);
        if f.norm() < tol {
            return Some((x, t));
        }
        let fx = state.derivative(x, t);
        let ft = state.time_derivative(x, t);
        let det = fx.re * ft.im - ft.re * fx.im;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let mut dx = (f.re * ft.im - ft.re * f.im) / det;
        let mut dt = (fx.re * f.im - f.re * fx.im) / det;
        // keep steps within a few grid cells
        let scale = (dx.abs() / (4.0 * hx)).max(dt.abs() / (4.0 * ht)).max(1.0);
        dx /= scale;
        dt /= scale;
        x -= dx;
        t -= dt;
        if !state.segment().contains(x) {
            return None;
        }
    }
    let r = state.evaluate(x, t).norm();
    (r < tol).then_some((x, t))
}

/// Sorts by `(t, x)` and merges duplicates.
fn finish(events: &mut Vec<ZeroEvent>) {
    events.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.x.total_cmp(&b.x)));
    let mut out: Vec<ZeroEvent> = Vec::with_capacity(events.len());
    for e in events.drain(..) {
        if let Some(last) = out.last_mut() {
            if (last.x - e.x).abs() < 1e-8 && (last.t - e.t).abs() < 1e-8 && last.kind == e.kind {
                if e.residual < last.residual {
                    *last = e;
                }
                continue;
            }
        }
        out.push(e);
    }
    *events = out;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wellcore::{make_alpha_state, WellSegment};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn alpha_state_zero_at_t0() {
        let s = make_alpha_state(0.375).unwrap();
        let scan = zeros_at_time(&s, 0.0, 256, DEFAULT_TOL).unwrap();
        assert_eq!(scan.events.len(), 1);
        let e = scan.events[0];
        assert_eq!(e.kind, ZeroKind::Transient);
        assert_relative_eq!(e.x, 0.375, epsilon = 1e-12);
        assert!(e.residual < DEFAULT_TOL);
        assert!(!e.flat);
    }

    #[test]
    fn alpha_state_mirror_zero() {
        let s = make_alpha_state(0.375).unwrap();
        let t = 1.0 / (3.0 * PI);
        let scan = zeros_at_time(&s, t, 256, DEFAULT_TOL).unwrap();
        assert_eq!(scan.events.len(), 1);
        assert_relative_eq!(scan.events[0].x, 0.625, epsilon = 1e-12);
    }

    #[test]
    fn no_zero_between_events() {
        let s = make_alpha_state(0.375).unwrap();
        let scan = zeros_at_time(&s, 0.05, 256, DEFAULT_TOL).unwrap();
        assert!(scan.events.is_empty());
    }

    #[test]
    fn eigenstate_nodes_are_stationary() {
        let s = WellState::single_mode(WellSegment::unit(), 3).unwrap();
        for t in [0.0, 0.123, 4.5] {
            let scan = zeros_at_time(&s, t, 300, DEFAULT_TOL).unwrap();
            let xs: Vec<f64> = scan.events.iter().map(|e| e.x).collect();
            assert_eq!(xs.len(), 2, "{:?}", scan.events);
            assert_relative_eq!(xs[0], 1.0 / 3.0, epsilon = 1e-12);
            assert_relative_eq!(xs[1], 2.0 / 3.0, epsilon = 1e-12);
            assert!(scan.events.iter().all(|e| e.kind == ZeroKind::Stationary));
        }
    }

    #[test]
    fn grid_and_window_validation() {
        let s = make_alpha_state(0.375).unwrap();
        assert!(zeros_at_time(&s, 0.0, 10, DEFAULT_TOL).is_err());
        assert!(zero_events(&s, (1.0, 0.5), (128, 128), DEFAULT_TOL).is_err());
        assert!(zero_events(&s, (0.0, 1.0), (128, 128), -1.0).is_err());
    }

    #[test]
    fn alpha_events_over_one_relative_period() {
        let s = make_alpha_state(0.375).unwrap();
        let period = 2.0 / (3.0 * PI);
        let scan = zero_events(&s, (0.0, period), (256, 2), DEFAULT_TOL).unwrap();
        let got: Vec<(f64, f64)> = scan.events.iter().map(|e| (e.x, e.t)).collect();
        let want = [(0.375, 0.0), (0.625, 1.0 / (3.0 * PI)), (0.375, period)];
        assert_eq!(got.len(), 3, "{got:?}");
        for ((x, t), (wx, wt)) in got.iter().zip(want) {
            assert_relative_eq!(*x, wx, epsilon = 1e-10);
            assert_relative_eq!(*t, wt, epsilon = 1e-14);
        }
    }

    #[test]
    fn alpha_events_over_full_phase_period() {
        // every relative-phase crossing of π inside [0, 2/π]
        let s = make_alpha_state(0.375).unwrap();
        let scan = zero_events(&s, (0.0, 2.0 / PI), (256, 2), DEFAULT_TOL).unwrap();
        assert_eq!(scan.events.len(), 7);
        for (n, e) in scan.events.iter().enumerate() {
            assert_relative_eq!(e.t, n as f64 / (3.0 * PI), epsilon = 1e-13);
            let want = if n % 2 == 0 { 0.375 } else { 0.625 };
            assert_relative_eq!(e.x, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn stationary_zero_of_second_mode() {
        let s = WellState::single_mode(WellSegment::unit(), 2).unwrap();
        let scan = zero_events(&s, (0.3, 2.0), (128, 16), DEFAULT_TOL).unwrap();
        assert_eq!(scan.events.len(), 1);
        let e = scan.events[0];
        assert_eq!(e.kind, ZeroKind::Stationary);
        assert_relative_eq!(e.x, 0.5, epsilon = 1e-15);
        assert_eq!(e.t, 0.3);
    }

    #[test]
    fn shared_node_is_not_double_counted() {
        // modes 2 and 4 share the node at 1/2
        let s = WellState::from_real(WellSegment::unit(), &[0.0, 1.0, 0.0, 0.5]).unwrap();
        let scan = zero_events(&s, (0.0, 0.2), (512, 2), DEFAULT_TOL).unwrap();
        let stationary: Vec<_> = scan.events.iter().filter(|e| e.kind == ZeroKind::Stationary).collect();
        assert_eq!(stationary.len(), 1);
        assert!(scan
            .events
            .iter()
            .filter(|e| e.kind == ZeroKind::Transient)
            .all(|e| (e.x - 0.5).abs() > 1e-6));
    }

    #[test]
    fn tangential_zero_is_flagged_flat() {
        // ψ1 + ψ3 = 4 sin(πx) cos²(πx): double zero at 1/2
        let s = WellState::from_real(WellSegment::unit(), &[1.0, 0.0, 1.0]).unwrap();
        let scan = zeros_at_time(&s, 0.0, 256, DEFAULT_TOL).unwrap();
        assert_eq!(scan.events.len(), 1);
        assert_relative_eq!(scan.events[0].x, 0.5, epsilon = 1e-6);
        assert!(scan.events[0].flat);
    }

    #[test]
    fn three_mode_search_finds_isolated_zeros() {
        let s = WellState::from_real(WellSegment::unit(), &[1.0, -0.7, 0.4]).unwrap();
        let scan = zero_events(&s, (0.0, 0.2), (400, 400), DEFAULT_TOL).unwrap();
        assert!(!scan.events.is_empty());
        for e in &scan.events {
            assert!(s.evaluate(e.x, e.t).norm() < DEFAULT_TOL);
        }
        // the t = 0 slice of a real state is real, so it must match the slice finder
        let at0 = zeros_at_time(&s, 0.0, 400, DEFAULT_TOL).unwrap();
        for e in at0.events {
            assert!(scan.events.iter().any(|f| (f.x - e.x).abs() < 1e-8 && f.t.abs() < 1e-8));
        }
    }

    proptest! {
        #[test]
        fn alpha_family_mirror_symmetry(x0 in 0.05f64..0.45, n in 0usize..6) {
            let s = make_alpha_state(x0).unwrap();
            let half = 1.0 / (3.0 * PI);
            let t = n as f64 * half;
            let a = zeros_at_time(&s, t, 256, DEFAULT_TOL).unwrap();
            let b = zeros_at_time(&s, half - t, 256, DEFAULT_TOL).unwrap();
            prop_assert_eq!(a.events.len(), 1);
            prop_assert_eq!(b.events.len(), 1);
            prop_assert!((a.events[0].x - (1.0 - b.events[0].x)).abs() < 1e-9);
        }

        #[test]
        fn reported_events_are_zeros(c in prop::collection::vec(-1.0f64..1.0, 2..4), t in 0.0f64..0.3) {
            let Ok(s) = WellState::from_real(WellSegment::unit(), &c) else { return Ok(()); };
            let scan = zeros_at_time(&s, t, 128, DEFAULT_TOL).unwrap();
            for e in scan.events {
                prop_assert!(s.evaluate(e.x, e.t).norm() < DEFAULT_TOL);
                prop_assert!(e.x > 1e-9 && e.x < 1.0 - 1e-9);
            }
        }
    }
}
