//! Acceptance criteria, one test per criterion.
//!
//! Every check prints a `PASS` or `FAIL` line; a criterion's test fails if
//! any of its checks fails. Run with `--nocapture` to see the lines.
//! `WELLSPLIT_DESK_SCALE=1` runs the TDSE worked point on the coarse mesh.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wellsplit::accounting::{barrier_energy, transition_probs, zero_theorem_check, Outcome, TransitionModel};
use wellsplit::deltasolver::{degenerate_limit_pair, delta_spectrum, LevelClass};
use wellsplit::quadrature::GaussLegendre;
use wellsplit::splitter::{interference_spectrum, outcome_probabilities, simple_coefficients, Caps, SplitConfig};
use wellsplit::tdse::{
    fit_power_law, gaussian_kernel, laplacian, overlap_aw, simulate, sweep, BarrierRamp, Mesh, SimOptions, SweepJob,
};
use wellsplit::wellcore::{make_alpha_mirror_state, make_alpha_state, WellSegment};
use wellsplit::{Complex64, WellState, PI2};

struct Criterion {
    id: u32,
    passed: bool,
    started: Instant,
}

impl Criterion {
    fn new(id: u32) -> Self {
        Self {
            id,
            passed: true,
            started: Instant::now(),
        }
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        println!("criterion {} {:<44} {} {}", self.id, name, if ok { "PASS" } else { "FAIL" }, detail);
        self.passed &= ok;
    }

    fn runtime(&mut self, limit: Duration) {
        let el = self.started.elapsed();
        self.check("runtime", el < limit, format!("{el:.2?} (limit {limit:?})"));
    }

    fn finish(self) {
        assert!(self.passed, "criterion {} failed", self.id);
    }
}

fn desk_scale() -> bool {
    std::env::var("WELLSPLIT_DESK_SCALE").is_ok_and(|v| v == "1")
}

fn unit() -> WellSegment {
    WellSegment::unit()
}

#[test]
fn criterion_1_showcase_probability() {
    let mut c = Criterion::new(1);
    let s = make_alpha_state(0.375).unwrap();
    let cfg = SplitConfig::new(vec![0.375]).unwrap();
    let table = outcome_probabilities(&s, &cfg, Caps::default()).unwrap();
    let p = table.probability(1, 1);
    c.check("P(k1=1) in [0.055, 0.065]", (0.055..=0.065).contains(&p), format!("{p:.6}"));

    let (a, _) = simple_coefficients(0.375, 1).unwrap();
    let sub = WellSegment::new(0.0, 0.375).unwrap();
    let q = GaussLegendre::new(40).composite(0.0, 0.375, 8, |x| s.evaluate(x, 0.0).re * sub.mode(1, x));
    let diff = (a[0] - q).abs();
    c.check("closed form vs quadrature", diff < 1e-9, format!("|diff| = {diff:.1e}"));
    c.runtime(Duration::from_secs(1));
    c.finish();
}

#[test]
fn criterion_2_showcase_energies() {
    let mut c = Criterion::new(2);
    let cfg = SplitConfig::new(vec![0.375]).unwrap();
    let spec = interference_spectrum(&cfg, 3).unwrap();
    let e = |j: usize, k: u32| spec.iter().find(|e| e.well == j && e.k == k).unwrap().energy;
    let e11 = e(1, 1) / PI2;
    let e21 = e(2, 1) / PI2;
    c.check("E_1(1) = (64/9) pi^2", (e11 - 64.0 / 9.0).abs() < 1e-12, format!("{e11:.15}"));
    c.check("E_2(1) = 2.56 pi^2", (e21 - 2.56).abs() < 1e-12, format!("{e21:.15}"));
    let mean = make_alpha_state(0.375).unwrap().mean_energy() / PI2;
    c.check("<E> = 2.8918 pi^2 +- 1e-3", (mean - 2.8918).abs() < 1e-3, format!("{mean:.6}"));
    c.runtime(Duration::from_secs(1));
    c.finish();
}

/// Sturm-bisection eigenvalues of the FD operator with a one-node top-hat barrier.
fn fd_levels(x0: f64, v: f64, intervals: usize, count: usize) -> Vec<f64> {
    let h = 1.0 / intervals as f64;
    let mut diag = vec![2.0 / (h * h); intervals - 1];
    diag[(x0 / h).round() as usize - 1] += v / h;
    let off2 = 1.0 / h.powi(4);
    let below = |lambda: f64| {
        let mut q = 1.0;
        let mut n = 0;
        for (i, d) in diag.iter().enumerate() {
            q = d - lambda - if i == 0 { 0.0 } else { off2 / if q == 0.0 { 1e-300 } else { q } };
            n += usize::from(q < 0.0);
        }
        n
    };
    (0..count)
        .map(|i| {
            let (mut lo, mut hi) = (0.0, 1e6);
            while hi - lo > 1e-11 * hi {
                let mid = 0.5 * (lo + hi);
                if below(mid) > i {
                    hi = mid
                } else {
                    lo = mid
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

#[test]
fn criterion_3_delta_endpoints() {
    let mut c = Criterion::new(3);
    let e4 = delta_spectrum(0.375, 1e4, 1).unwrap().levels[0].energy / PI2;
    c.check("E(1) at V=1e4 = 2.5605 pi^2 +- 5e-4", (e4 - 2.5605).abs() <= 5e-4, format!("{e4:.6}"));
    let e10 = delta_spectrum(0.375, 1e10, 1).unwrap().levels[0].energy / PI2;
    c.check("E(1) at V=1e10 = 2.5600 pi^2 +- 1e-4", (e10 - 2.56).abs() <= 1e-4, format!("{e10:.10}"));

    let mut persistent = true;
    for v in [0.0, 1.0, 1e2, 1e4, 1e6, 1e8, 1e10] {
        let lv = delta_spectrum(0.375, v, 8).unwrap().levels[7];
        persistent &= lv.class == LevelClass::PersistentNode && (lv.energy / PI2 - 64.0).abs() < 1e-12;
    }
    c.check("l=8 level at 64 pi^2 for all V", persistent, String::new());

    let mut worst: f64 = 0.0;
    for v in [10.0, 1e3] {
        let fd = fd_levels(0.375, v, 20_000, 10);
        let spec = delta_spectrum(0.375, v, 10).unwrap();
        for (lv, e) in spec.levels.iter().zip(&fd) {
            worst = worst.max((lv.energy - e).abs() / e);
        }
    }
    c.check("FD oracle, lowest 10 levels, V in {10, 1e3}", worst < 1e-3, format!("max rel {worst:.2e}"));
    c.runtime(Duration::from_secs(10));
    c.finish();
}

#[test]
fn criterion_4_degenerate_pair() {
    let mut c = Criterion::new(4);
    let p = degenerate_limit_pair(0.375, 1).unwrap();
    let mut off_side: f64 = 0.0;
    for i in 0..=10_000 {
        let x = i as f64 / 10_000.0;
        if x > 0.375 {
            off_side = off_side.max(p.left_state(x).abs());
        }
        if x < 0.375 {
            off_side = off_side.max(p.right_state(x).abs());
        }
    }
    c.check("off-side values < 1e-10", off_side < 1e-10, format!("max {off_side:.1e}"));
    let gl = GaussLegendre::new(32);
    let norm = |f: &dyn Fn(f64) -> f64| gl.composite(0.0, 1.0, 64, |x| f(x) * f(x));
    let nl = norm(&|x| p.left_state(x));
    let nr = norm(&|x| p.right_state(x));
    let ov = p.overlap();
    let ok = (nl - 1.0).abs() < 1e-12 && (nr - 1.0).abs() < 1e-12 && ov.abs() < 1e-12;
    c.check("orthonormal to 1e-12", ok, format!("norms {nl:.15} {nr:.15}, overlap {ov:.1e}"));
    c.runtime(Duration::from_secs(1));
    c.finish();
}

#[test]
fn criterion_5_tdse_worked_point() {
    let mut c = Criterion::new(5);
    let desk = desk_scale();
    let (dx, widen) = if desk { (1e-4, 10.0) } else { (1e-5, 1.0) };
    println!("criterion 5 mesh dx = {dx:e}{}", if desk { " (desk scale, tolerances x10)" } else { "" });
    let mesh = Mesh::with_spacing(dx).unwrap();
    let s = make_alpha_state(0.375).unwrap();
    let ramp = BarrierRamp::linear(1e-3, 0.375, 1e4, 1e-10).unwrap();
    let r = simulate(&s, &ramp, &mesh, 1000).unwrap();
    let dk = r.delta_k / r.k0;
    let dv = r.delta_v_dpsi / r.k0;
    let dv0 = r.delta_v_psi0 / r.k0;
    let band = |value: f64, target: f64| {
        let ratio = value / target;
        ratio >= 0.5 / widen && ratio <= 2.0 * widen
    };
    c.check("norm error <= 1e-8", r.norm_error.abs() <= 1e-8 * widen, format!("{:.2e}", r.norm_error));
    c.check("dK/K0 within [0.5, 2] x 1.58e-10", band(dk, 1.58e-10), format!("{dk:.4e} ({:.3}x)", dk / 1.58e-10));
    c.check("dV_dpsi/K0 within [0.5, 2] x -5.19e-10", band(dv, -5.19e-10), format!("{dv:.4e} ({:.3}x)", dv / -5.19e-10));
    c.check(
        "dV_psi0/K0 = 2.29e-3 +- 2e-5",
        (dv0 - 2.29e-3).abs() <= 2e-5 * widen,
        format!("{dv0:.5e}"),
    );
    c.finish();
}

#[test]
fn criterion_6_fit_exponents() {
    let mut c = Criterion::new(6);
    let mesh = Mesh::with_spacing(1e-4).unwrap();
    let widths = [1e-3, 2e-3, 4e-3];
    let taus = [1e-10, 1e-11, 1e-12];
    let states = [
        ("zero", make_alpha_state(0.375).unwrap()),
        ("mirror", make_alpha_mirror_state(0.375).unwrap()),
    ];
    let mut jobs = Vec::new();
    for (id, st) in &states {
        for &w in &widths {
            for &tau in &taus {
                jobs.push(SweepJob {
                    state_id: id.to_string(),
                    state: st.clone(),
                    tau,
                    w,
                    x0: 0.375,
                });
            }
        }
    }
    let opts = SimOptions {
        checkpoints: vec![250, 500, 750, 1000],
        ..SimOptions::default()
    };
    let rows = sweep(&jobs, &mesh, 1e4, &opts);
    c.check("all runs completed", rows.iter().all(|r| !r.aborted), String::new());

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in &rows {
        for cp in &r.checkpoints {
            xs.push(vec![r.tau, cp.strength, r.w]);
            ys.push(cp.delta_k / r.a_w);
        }
    }
    let fit = fit_power_law(&["tau", "V", "w"], &xs, &ys).unwrap();
    let pt = fit.exponent("tau").unwrap();
    let pv = fit.exponent("V").unwrap();
    let pw = fit.exponent("w").unwrap();
    c.check("slope vs tau = 2 +- 0.3", (pt - 2.0).abs() <= 0.3, format!("{pt:.4}"));
    c.check("slope vs V(t) = 4 +- 0.4", (pv - 4.0).abs() <= 0.4, format!("{pv:.4}"));
    c.check("slope vs w = -3 +- 0.4", (pw + 3.0).abs() <= 0.4, format!("{pw:.4}"));
    println!("criterion 6 fit rms residual {:.4} dex over {} samples", fit.rms_dex, fit.samples);

    let zero = &states[0].1;
    let aw: Vec<f64> = widths
        .iter()
        .map(|&w| overlap_aw(zero, &gaussian_kernel(w, 0.375, &mesh).unwrap()))
        .collect();
    let aw_fit = fit_power_law(&["w"], &widths.iter().map(|&w| vec![w]).collect::<Vec<_>>(), &aw).unwrap();
    let pa = aw_fit.exponent("w").unwrap();
    c.check("A_w slope vs w = 2 +- 0.1 (zero state)", (pa - 2.0).abs() <= 0.1, format!("{pa:.4}"));
    c.runtime(Duration::from_secs(300));
    c.finish();
}

#[test]
fn criterion_7_accounting_triple() {
    let mut c = Criterion::new(7);
    let s = make_alpha_state(0.375).unwrap();
    let cfg = SplitConfig::new(vec![0.375]).unwrap();
    let o = Outcome::new(1, 1);
    let e = |m| barrier_energy(m, &s, &cfg, o, 2).unwrap() / PI2;
    let em = e(TransitionModel::Modulus);
    let ew = e(TransitionModel::Weak);
    let ex = e(TransitionModel::Mixed);
    c.check("modulus <E^B> = -4.22 E0(1) +- 0.05", (em + 4.22).abs() <= 0.05, format!("{em:.5}"));
    c.check("weak <E^B> = 0 +- 1e-9 E0(1)", ew.abs() <= 1e-9, format!("{ew:.1e}"));
    c.check("mixed <E^B> = -3.73 E0(1) +- 0.05", (ex + 3.73).abs() <= 0.05, format!("{ex:.5}"));
    let w = transition_probs(TransitionModel::Weak, &s, &cfg, o, 2).unwrap();
    let ok = (w[0] + 1.037).abs() <= 0.01 && (w[1] - 2.037).abs() <= 0.01;
    c.check("quasi-probabilities -1.037 / 2.037 +- 0.01", ok, format!("{:.6} / {:.6}", w[0], w[1]));
    c.runtime(Duration::from_secs(1));
    c.finish();
}

#[test]
fn criterion_8_zero_theorem_random_states() {
    let mut c = Criterion::new(8);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    let mut accepted = 0;
    while accepted < 50 {
        let modes = rng.random_range(2..=4usize);
        let x0: f64 = rng.random_range(0.05..0.95);
        let k = rng.random_range(1..=3u32);
        let mut d: Vec<Complex64> =
            (0..modes).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let sine = |l: usize| (l as f64 * PI * x0).sin();
        let fixed = rng.random_range(0..modes);
        if sine(fixed + 1).abs() < 1e-2 {
            continue;
        }
        let rest: Complex64 = (0..modes).filter(|&i| i != fixed).map(|i| d[i] * sine(i + 1)).sum();
        d[fixed] = -rest / sine(fixed + 1);
        let Ok(state) = WellState::normalized(unit(), d) else { continue };
        let cfg = SplitConfig::new(vec![x0]).unwrap();
        let amp: Complex64 = outcome_probabilities(&state, &cfg, Caps { l_max: 4, k_max: k })
            .unwrap()
            .outcomes[(k - 1) as usize]
            .amplitude;
        // weak values of a nearly forbidden post-selection are ill-conditioned
        if amp.norm() < 1e-3 {
            continue;
        }
        let z = zero_theorem_check(&state, x0, k, 4).unwrap();
        worst = worst.max(z.weak.abs() / PI2);
        accepted += 1;
    }
    c.check("50 states: weak <E^B> = 0 +- 1e-8 E0(1)", worst <= 1e-8, format!("max {worst:.2e}"));
    c.runtime(Duration::from_secs(5));
    c.finish();
}

#[test]
fn criterion_9_invariant_suites() {
    let mut c = Criterion::new(9);
    let cfg = SplitConfig::new(vec![0.375]).unwrap();

    // Parseval / completeness over a fixed family of states on l <= 5
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut parseval = true;
    for _ in 0..10 {
        let d: Vec<Complex64> =
            (0..5).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let s = WellState::normalized(unit(), d).unwrap();
        let mut last = f64::INFINITY;
        for k_max in [100, 250, 500] {
            let t = outcome_probabilities(&s, &cfg, Caps { l_max: 5, k_max }).unwrap();
            parseval &= t.tail >= -1e-12 && t.tail <= last && t.tail <= t.tail_bound;
            last = t.tail;
        }
    }
    c.check("Parseval: tail shrinks and stays within bound", parseval, String::new());

    let alpha = make_alpha_state(0.375).unwrap();
    let t = outcome_probabilities(&alpha, &cfg, Caps { l_max: 5, k_max: 500 }).unwrap();
    c.check("completeness at K=500 for the alpha state", t.tail.abs() < 1e-3, format!("tail {:.2e}", t.tail));

    let mut immune = true;
    for (l, nodes) in [(8u32, vec![0.375]), (6, vec![1.0 / 3.0, 0.5]), (4, vec![0.25, 0.5, 0.75])] {
        let s = WellState::single_mode(unit(), l).unwrap();
        let t = outcome_probabilities(&s, &SplitConfig::new(nodes).unwrap(), Caps { l_max: 10, k_max: 20 }).unwrap();
        immune &= (t.captured() - 1.0).abs() < 1e-12;
        immune &= t
            .outcomes
            .iter()
            .filter(|o| o.probability > 1e-20)
            .all(|o| (o.energy / unit().energy(l) - 1.0).abs() < 1e-12);
    }
    c.check("eigenstate-node immunity", immune, String::new());

    let mut marginals = true;
    for chi in [0.2, 0.375, 0.61] {
        let t = outcome_probabilities(&alpha, &SplitConfig::new(vec![chi]).unwrap(), Caps::default()).unwrap();
        for j in 0..2 {
            marginals &= (t.split[j] - t.marginals[j]) >= -1e-12 && (t.split[j] - t.marginals[j]) <= t.tail_bound;
        }
    }
    c.check("marginal consistency within tail bound", marginals, String::new());

    let mesh = Mesh::with_spacing(1e-4).unwrap();
    let mut worst_norm: f64 = 0.0;
    for tau in [1e-10, 1e-12, 1e-14] {
        let ramp = BarrierRamp::linear(1e-3, 0.375, 1e4, tau).unwrap();
        worst_norm = worst_norm.max(simulate(&alpha, &ramp, &mesh, 1000).unwrap().norm_error.abs());
    }
    c.check("norm conservation <= 1e-8", worst_norm <= 1e-8, format!("max {worst_norm:.2e}"));

    let mut slopes = Vec::new();
    for l in 1..=3 {
        let k = l as f64 * PI;
        let err = |n: usize| {
            let m = Mesh::new(1.0, n).unwrap();
            let f = m.sample(|x| Complex64::new((k * x).sin(), 0.0));
            let mut out = vec![Complex64::new(0.0, 0.0); f.len()];
            laplacian(&f, m.dx(), &mut out);
            (1..n).map(|i| (out[i].re + k * k * f[i].re).abs()).fold(0.0, f64::max)
        };
        slopes.push((err(200) / err(400)).log2());
    }
    let ok = slopes.iter().all(|s| (s - 2.0).abs() < 0.05);
    c.check("Laplacian O(dx^2) for l = 1, 2, 3", ok, format!("{slopes:.3?}"));
    c.finish();
}
