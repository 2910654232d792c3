//! Infinite well with a repulsive delta barrier `V δ(x − x0)`.
//!
//! With ħ = 1 and 2M = 1 the Hamiltonian is `−∂² + V δ(x − x0)`. An
//! eigenfunction is `A sin(kx)` left of the barrier and `B sin(k(L − x))`
//! right of it, continuous at `x0` with `ψ'(x0⁺) − ψ'(x0⁻) = V ψ(x0)`. Writing
//! `a = x0` and `b = L − x0`, levels with `ψ(x0) ≠ 0` solve
//!
//! ```text
//! k [cot(ka) + cot(kb)] = −V
//! ```
//!
//! Levels with `sin(ka) = sin(kb) = 0` ignore the barrier entirely.
//!
//! The left side decreases monotonically between consecutive poles
//! `nπ/a`, `mπ/b`, so each gap between merged poles holds exactly one root.
//! The level count below the `i`-th pole is therefore `i`, which doubles as
//! a missed-root check.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::quadrature::GaussLegendre;

/// Relative spacing under which two poles are treated as one shared node.
const COINCIDENCE_TOL: f64 = 1e-12;

/// Relative energy gap below which neighbouring levels are flagged degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelClass {
    Generic,
    /// `sin(k x0) = sin(k(L − x0)) = 0`; the level is the unperturbed one for every `V`.
    PersistentNode,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeltaLevel {
    /// Position in the spectrum, from 1.
    pub index: usize,
    pub k: f64,
    pub energy: f64,
    pub class: LevelClass,
    /// Within [`DEGENERACY_TOL`] of a neighbouring level.
    pub degenerate: bool,
    /// Left amplitude; non-negative by convention.
    pub a: f64,
    /// Right amplitude.
    pub b: f64,
    pub p_left: f64,
    pub p_right: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaWellSpectrum {
    pub length: f64,
    pub x0: f64,
    pub v: f64,
    pub levels: Vec<DeltaLevel>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug)]
struct Pole {
    k: f64,
    side: Side,
    /// `n` for `nπ/a`, `m` for `mπ/b`.
    order: u64,
}

/// Lowest `count` levels in the unit well.
pub fn delta_spectrum(x0: f64, v: f64, count: usize) -> Result<DeltaWellSpectrum> {
    delta_spectrum_in(1.0, x0, v, count)
}

pub fn delta_spectrum_in(length: f64, x0: f64, v: f64, count: usize) -> Result<DeltaWellSpectrum> {
    if !(length > 0.0 && length.is_finite()) {
        return domain(format!("well length must be positive, got {length}"));
    }
    if !(x0 > 0.0 && x0 < length) {
        return domain(format!("barrier must sit inside (0, {length}), got x0 = {x0}"));
    }
    if !(v >= 0.0 && v.is_finite()) {
        return domain(format!("barrier strength must be finite and >= 0, got {v}"));
    }
    if count == 0 {
        return domain("level count must be >= 1");
    }
    let a = x0;
    let b = length - x0;
    let poles = merged_poles(a, b, count);

    let mut levels: Vec<DeltaLevel> = (0..count)
        .into_par_iter()
        .map(|i| {
            let hi = poles[i];
            let lo = if i == 0 { None } else { Some(poles[i - 1]) };
            match lo {
                Some(lo) if (hi.k - lo.k).abs() <= COINCIDENCE_TOL * hi.k => persistent_level(length, lo, hi, i),
                _ => generic_level(a, b, v, lo, hi, &poles[..i], i),
            }
        })
        .collect();

    for i in 0..levels.len() {
        let k = levels[i].k;
        let lower = (i + 1) as f64 * PI / length;
        let upper = poles[i].k;
        let slack = 1e-12 * upper;
        if !(k >= lower - slack && k <= upper + slack) {
            return Err(Error::MissedRoot {
                level: i + 1,
                k,
                lower,
                upper,
            });
        }
    }
    for i in 1..levels.len() {
        let (e0, e1) = (levels[i - 1].energy, levels[i].energy);
        if (e1 - e0).abs() < DEGENERACY_TOL * e1 {
            levels[i - 1].degenerate = true;
            levels[i].degenerate = true;
        }
    }
    Ok(DeltaWellSpectrum { length, x0, v, levels })
}

/// The first `count` of `nπ/a` and `mπ/b` merged, with multiplicity.
fn merged_poles(a: f64, b: f64, count: usize) -> Vec<Pole> {
    let mut poles: Vec<Pole> = (1..=count as u64)
        .map(|n| Pole {
            k: n as f64 * PI / a,
            side: Side::Left,
            order: n,
        })
        .chain((1..=count as u64).map(|m| Pole {
            k: m as f64 * PI / b,
            side: Side::Right,
            order: m,
        }))
        .collect();
    // left poles first on ties keeps the ordering deterministic
    poles.sort_by(|p, q| p.k.total_cmp(&q.k).then((p.side == Side::Right).cmp(&(q.side == Side::Right))));
    poles.truncate(count);
    poles
}

fn persistent_level(length: f64, lo: Pole, hi: Pole, i: usize) -> DeltaLevel {
    let l = lo.order + hi.order;
    let k = l as f64 * PI / length;
    let amp = (2.0 / length).sqrt();
    let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
    let (a, b) = match lo.side {
        Side::Left => (lo.order as f64 * PI / k, hi.order as f64 * PI / k),
        Side::Right => (hi.order as f64 * PI / k, lo.order as f64 * PI / k),
    };
    DeltaLevel {
        index: i + 1,
        k,
        energy: k * k,
        class: LevelClass::PersistentNode,
        degenerate: false,
        a: amp,
        b: sign * amp,
        p_left: a / length,
        p_right: b / length,
    }
}

/// Reduced arguments for one cotangent term inside a panel.
struct Term {
    width: f64,
    /// Index of the last pole of this term at or below the panel start.
    below: u64,
    /// Distance from that pole to the panel start.
    offset: f64,
    at_top: bool,
}

impl Term {
    fn new(width: f64, side: Side, lo_k: f64, below: u64, hi: Pole) -> Self {
        let offset = lo_k - below as f64 * PI / width;
        Self {
            width,
            below,
            offset: offset.max(0.0),
            at_top: hi.side == side,
        }
    }

    /// `(sin(kw), cot(kw))` at `k = P_hi − η`, with `span = P_hi − P_lo`.
    fn eval(&self, eta: f64, span: f64) -> (f64, f64) {
        let parity = if self.below % 2 == 0 { 1.0 } else { -1.0 };
        if self.at_top {
            // kw = (below + 1)π − ηw
            let y = eta * self.width;
            (parity * y.sin(), -y.cos() / y.sin())
        } else {
            let u = (self.offset + span - eta) * self.width;
            (parity * u.sin(), u.cos() / u.sin())
        }
    }
}

fn generic_level(a: f64, b: f64, v: f64, lo: Option<Pole>, hi: Pole, below: &[Pole], i: usize) -> DeltaLevel {
    let lo_k = lo.map_or(0.0, |p| p.k);
    let span = hi.k - lo_k;
    let count = |side: Side| below.iter().filter(|p| p.side == side).map(|p| p.order).max().unwrap_or(0);
    let ta = Term::new(a, Side::Left, lo_k, count(Side::Left), hi);
    let tb = Term::new(b, Side::Right, lo_k, count(Side::Right), hi);

    let f = |eta: f64| {
        let k = hi.k - eta;
        let (_, ca) = ta.eval(eta, span);
        let (_, cb) = tb.eval(eta, span);
        k * (ca + cb) + v
    };
    // f → −∞ as η → 0⁺ and f > 0 at the panel start
    let (mut e_lo, mut e_hi) = (0.0, span);
    for _ in 0..200 {
        let mid = 0.5 * (e_lo + e_hi);
        if mid <= e_lo || mid >= e_hi {
            break;
        }
        if f(mid) < 0.0 {
            e_lo = mid;
        } else {
            e_hi = mid;
        }
    }
    let eta = 0.5 * (e_lo + e_hi);
    let k = hi.k - eta;
    let (sa, ca) = ta.eval(eta, span);
    let (sb, cb) = tb.eval(eta, span);

    // A ∝ sin(kb), B ∝ sin(ka) keeps ψ continuous
    let (mut amp_a, mut amp_b) = (sb, sa);
    let w_left = 0.5 * a - sa * sa * ca / (2.0 * k);
    let w_right = 0.5 * b - sb * sb * cb / (2.0 * k);
    let (w_left, w_right) = (
        if sa == 0.0 { 0.5 * a } else { w_left },
        if sb == 0.0 { 0.5 * b } else { w_right },
    );
    let norm = (amp_a * amp_a * w_left + amp_b * amp_b * w_right).sqrt();
    amp_a /= norm;
    amp_b /= norm;
    if amp_a < 0.0 || (amp_a == 0.0 && amp_b < 0.0) {
        amp_a = -amp_a;
        amp_b = -amp_b;
    }
    let p_left = amp_a * amp_a * w_left;
    DeltaLevel {
        index: i + 1,
        k,
        energy: k * k,
        class: LevelClass::Generic,
        degenerate: false,
        a: amp_a,
        b: amp_b,
        p_left,
        p_right: 1.0 - p_left,
    }
}

/// A normalized eigenfunction in piecewise form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeltaEigenfunction {
    pub length: f64,
    pub x0: f64,
    pub v: f64,
    pub k: f64,
    pub a: f64,
    pub b: f64,
    pub p_left: f64,
    pub p_right: f64,
    /// `|ψ(x0⁻) − ψ(x0⁺)|`.
    pub continuity_residual: f64,
    /// `|ψ'(x0⁺) − ψ'(x0⁻) − V ψ(x0)|`, relative to `k max(|A|, |B|)`.
    pub jump_residual: f64,
}

impl DeltaEigenfunction {
    pub fn value(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= self.length {
            0.0
        } else if x <= self.x0 {
            self.a * (self.k * x).sin()
        } else {
            self.b * (self.k * (self.length - x)).sin()
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x < 0.0 || x > self.length {
            0.0
        } else if x <= self.x0 {
            self.a * self.k * (self.k * x).cos()
        } else {
            -self.b * self.k * (self.k * (self.length - x)).cos()
        }
    }
}

/// Piecewise description of level `level` (from 1).
pub fn delta_eigenfunction(spec: &DeltaWellSpectrum, level: usize) -> Result<DeltaEigenfunction> {
    let Some(lv) = level.checked_sub(1).and_then(|i| spec.levels.get(i)) else {
        return domain(format!("level {level} outside 1..={}", spec.levels.len()));
    };
    let (k, x0, big_l) = (lv.k, spec.x0, spec.length);
    let left = lv.a * (k * x0).sin();
    let right = lv.b * (k * (big_l - x0)).sin();
    let d_left = lv.a * k * (k * x0).cos();
    let d_right = -lv.b * k * (k * (big_l - x0)).cos();
    let psi0 = 0.5 * (left + right);
    let scale = k * lv.a.abs().max(lv.b.abs());
    Ok(DeltaEigenfunction {
        length: big_l,
        x0,
        v: spec.v,
        k,
        a: lv.a,
        b: lv.b,
        p_left: lv.p_left,
        p_right: lv.p_right,
        continuity_residual: (left - right).abs(),
        jump_residual: (d_right - d_left - spec.v * psi0).abs() / scale,
    })
}

/// The two confined states that a degenerate pair of levels tends to as `V → ∞`.
///
/// With `x0/L = p/q` in lowest terms, mode `l = s q` of the full well has
/// `n = s p` half-waves on the left and `m = s(q − p)` on the right, so
/// `E_0(l) = E_1(n) = E_2(m)`. Levels `l − 1` and `l` meet there.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitPair {
    pub length: f64,
    pub x0: f64,
    pub l: u64,
    pub n: u64,
    pub m: u64,
    /// `x0 / (L − x0)`.
    pub r: f64,
    /// Normalization of the limit of the generic level `l − 1`.
    pub a_norm: f64,
    pub b_norm: f64,
    pub c_norm: f64,
}

impl LimitPair {
    fn u(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= self.length {
            return 0.0;
        }
        (self.l as f64 * PI * x / self.length).sin()
    }

    /// The `V → ∞` limit of level `l − 1`: `A u` on the left, `−r A u` on the right.
    pub fn generic_limit(&self, x: f64) -> f64 {
        let side = if x <= self.x0 { 1.0 } else { -self.r };
        self.a_norm * side * self.u(x)
    }

    /// `ψ⁰_l`, the persistent level.
    pub fn persistent(&self, x: f64) -> f64 {
        (2.0 / self.length).sqrt() * self.u(x)
    }

    /// `B (generic + r A √(L/2) ψ⁰_l)`, confined to `[0, x0]`.
    pub fn left_state(&self, x: f64) -> f64 {
        let mix = self.r * self.a_norm * (0.5 * self.length).sqrt();
        self.b_norm * (self.generic_limit(x) + mix * self.persistent(x))
    }

    /// `C (generic − A √(L/2) ψ⁰_l)`, confined to `[x0, L]`.
    pub fn right_state(&self, x: f64) -> f64 {
        let mix = self.a_norm * (0.5 * self.length).sqrt();
        self.c_norm * (self.generic_limit(x) - mix * self.persistent(x))
    }

    /// Coefficients of `(generic limit, ψ⁰_l)` in the left and right states.
    pub fn coefficients(&self) -> [[f64; 2]; 2] {
        let root = (0.5 * self.length).sqrt();
        [
            [self.b_norm, self.b_norm * self.r * self.a_norm * root],
            [self.c_norm, -self.c_norm * self.a_norm * root],
        ]
    }

    /// `∫ left · right` by quadrature.
    pub fn overlap(&self) -> f64 {
        let gl = GaussLegendre::new(32);
        let panels = (self.l as usize).max(4);
        gl.composite(0.0, self.x0, panels, |x| self.left_state(x) * self.right_state(x))
            + gl.composite(self.x0, self.length, panels, |x| self.left_state(x) * self.right_state(x))
    }
}

/// Limit pair number `s` for a barrier at `x0` in the unit well.
pub fn degenerate_limit_pair(x0: f64, s: u64) -> Result<LimitPair> {
    degenerate_limit_pair_in(1.0, x0, s)
}

pub fn degenerate_limit_pair_in(length: f64, x0: f64, s: u64) -> Result<LimitPair> {
    if s == 0 {
        return domain("pair number s must be >= 1");
    }
    if !(x0 > 0.0 && x0 < length) {
        return domain(format!("barrier must sit inside (0, {length}), got x0 = {x0}"));
    }
    let Some((p, q)) = rational(x0 / length, 10_000) else {
        return domain(format!(
            "no degenerate pair: x0/L = {} is not p/q with q <= 10000, so E_0(l) = E_1(n) = E_2(m) has no solution",
            x0 / length
        ));
    };
    let r = x0 / (length - x0);
    let a_norm = (2.0 / (x0 * (1.0 + r))).sqrt();
    Ok(LimitPair {
        length,
        x0,
        l: s * q,
        n: s * p,
        m: s * (q - p),
        r,
        a_norm,
        b_norm: 1.0 / (a_norm * (1.0 + r) * (0.5 * x0).sqrt()),
        c_norm: 1.0 / (a_norm * (1.0 + r) * (0.5 * (length - x0)).sqrt()),
    })
}

/// Smallest-denominator `p/q` within `1e-12` of `x`, searching `q ≤ max_q`.
fn rational(x: f64, max_q: u64) -> Option<(u64, u64)> {
    (1..=max_q).find_map(|q| {
        let p = (x * q as f64).round();
        ((x - p / q as f64).abs() < 1e-12 && p >= 1.0).then_some((p as u64, q))
    })
}

/// One row of a spectrum-versus-strength table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub v: f64,
    pub level: usize,
    pub k: f64,
    pub energy: f64,
    pub p_left: f64,
}

/// Lowest `count` levels for each strength in `vs`, rows ordered by `(V, level)`.
pub fn spectrum_sweep(x0: f64, vs: &[f64], count: usize) -> Result<Vec<SweepRow>> {
    let spectra: Vec<DeltaWellSpectrum> = vs
        .par_iter()
        .map(|&v| delta_spectrum(x0, v, count))
        .collect::<Result<_>>()?;
    Ok(spectra
        .iter()
        .flat_map(|s| {
            s.levels.iter().map(move |lv| SweepRow {
                v: s.v,
                level: lv.index,
                k: lv.k,
                energy: lv.energy,
                p_left: lv.p_left,
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wellcore::PI2;
    use approx::assert_relative_eq;

    #[test]
    fn free_well_levels() {
        let s = delta_spectrum(0.3, 0.0, 12).unwrap();
        for (i, lv) in s.levels.iter().enumerate() {
            assert_relative_eq!(lv.k, (i + 1) as f64 * PI, max_relative = 1e-12);
        }
    }

    #[test]
    fn free_ground_state_shape() {
        let s = delta_spectrum(0.375, 0.0, 1).unwrap();
        let f = delta_eigenfunction(&s, 1).unwrap();
        assert_relative_eq!(f.a, 2f64.sqrt(), epsilon = 1e-10);
        assert_relative_eq!(f.b, 2f64.sqrt(), epsilon = 1e-10);
        let want = 0.375 - (2.0 * PI * 0.375).sin() / (2.0 * PI);
        assert_relative_eq!(f.p_left, want, epsilon = 1e-10);
    }

    #[test]
    fn strong_barrier_ground_state() {
        let s = delta_spectrum(0.375, 1e4, 1).unwrap();
        assert_relative_eq!(s.levels[0].energy / PI2, 2.559181, epsilon = 1e-6);
        let s = delta_spectrum(0.375, 1e12, 1).unwrap();
        assert_relative_eq!(s.levels[0].energy / PI2, 2.56, epsilon = 1e-9);
    }

    #[test]
    fn ground_state_confined_right() {
        let s = delta_spectrum(0.375, 1e6, 1).unwrap();
        assert!(s.levels[0].p_right > 0.999);
    }

    #[test]
    fn persistent_level_at_three_eighths() {
        for v in [0.0, 1.0, 1e3, 1e9] {
            let s = delta_spectrum(0.375, v, 10).unwrap();
            let lv = s.levels[7];
            assert_eq!(lv.class, LevelClass::PersistentNode);
            assert_relative_eq!(lv.k, 8.0 * PI, max_relative = 1e-15);
            assert_relative_eq!(lv.b / lv.a, -1.0, epsilon = 1e-15);
            assert_relative_eq!(lv.p_left, 0.375, epsilon = 1e-15);
            assert!((lv.k * 0.375).sin().abs() < 1e-12 && (lv.k * 0.625).sin().abs() < 1e-12);
        }
        assert!(delta_spectrum(0.375, 1e12, 8).unwrap().levels[6].degenerate);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(delta_spectrum(0.0, 1.0, 3).is_err());
        assert!(delta_spectrum(0.5, -1.0, 3).is_err());
        assert!(delta_spectrum(0.5, 1.0, 0).is_err());
        let s = delta_spectrum(0.5, 1.0, 3).unwrap();
        assert!(delta_eigenfunction(&s, 0).is_err());
        assert!(delta_eigenfunction(&s, 4).is_err());
    }

    #[test]
    fn jump_and_continuity_hold() {
        for v in [0.5, 10.0, 1e3, 1e7] {
            let s = delta_spectrum(0.3137, v, 15).unwrap();
            for i in 1..=15 {
                let f = delta_eigenfunction(&s, i).unwrap();
                assert!(f.continuity_residual < 1e-8, "v={v} level {i}");
                assert!(f.jump_residual < 1e-8, "v={v} level {i}: {}", f.jump_residual);
                assert_relative_eq!(f.p_left + f.p_right, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn limit_pair_at_three_eighths() {
        let p = degenerate_limit_pair(0.375, 1).unwrap();
        assert_eq!((p.l, p.n, p.m), (8, 3, 5));
        assert_relative_eq!(p.r, 0.6, epsilon = 1e-15);
        assert_relative_eq!(p.a_norm, (10.0f64 / 3.0).sqrt(), epsilon = 1e-14);
        let [[_, left_mix], [_, right_mix]] = p.coefficients();
        let root = 0.5f64.sqrt();
        assert_relative_eq!(left_mix / p.b_norm, 0.6 * p.a_norm * root, epsilon = 1e-14);
        assert_relative_eq!(right_mix / p.c_norm, -p.a_norm * root, epsilon = 1e-14);
        assert!(p.overlap().abs() < 1e-12);
        for i in 0..=10_000 {
            let x = i as f64 / 10_000.0;
            if x > 0.375 {
                assert!(p.left_state(x).abs() < 1e-10);
            }
            if x < 0.375 {
                assert!(p.right_state(x).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn second_limit_pair_keeps_coefficients() {
        let p1 = degenerate_limit_pair(0.375, 1).unwrap();
        let p2 = degenerate_limit_pair(0.375, 2).unwrap();
        assert_eq!((p2.l, p2.n, p2.m), (16, 6, 10));
        assert_eq!(p1.coefficients(), p2.coefficients());
    }

    #[test]
    fn irrational_position_has_no_pair() {
        let err = degenerate_limit_pair(1.0 / std::f64::consts::E, 1).unwrap_err();
        assert!(err.to_string().contains("E_0(l) = E_1(n) = E_2(m)"));
    }

    #[test]
    fn sweep_rows_are_ordered() {
        let rows = spectrum_sweep(0.375, &[0.0, 1.0, 100.0], 4).unwrap();
        assert_eq!(rows.len(), 12);
        assert_eq!((rows[5].v, rows[5].level), (1.0, 2));
    }
}
