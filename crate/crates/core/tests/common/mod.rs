//! Test-side oracles. Everything here is written from the definitions and
//! shares no code with the library beyond its public data types.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use stap_slp::convex::{ConstraintSet, ConvexSubproblem};
use stap_slp::model::ArrayConfig;
use stap_slp::{CMat, CVec};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Largest entry modulus.
pub fn max_abs(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `X̄ = blkdiag_m(I_{N_r} ⊗ X_mᵀ)` built entry by entry, with
/// `X_m(t, n) = x[m·N·Nt + n·Nt + t]`.
pub fn xbar(cfg: &ArrayConfig, x: &CVec) -> CMat {
    let (nt, nr, m_, n) = (cfg.n_tx, cfg.n_rx, cfg.n_pulses, cfg.n_samples);
    let mut out = CMat::zeros(m_ * n * nr, m_ * nr * nt);
    for m in 0..m_ {
        let xm_t = CMat::from_fn(n, nt, |s, t| x[m * n * nt + s * nt + t]);
        let block = DMatrix::<Complex64>::identity(nr, nr).kronecker(&xm_t);
        out.view_mut((m * n * nr, m * nr * nt), (n * nr, nr * nt)).copy_from(&block);
    }
    out
}

/// `J_l(i, j) = 1` iff `i − j + l = 0`.
pub fn shift(n: usize, l: isize) -> CMat {
    CMat::from_fn(n, n, |i, j| {
        if i as isize - j as isize + l == 0 {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// `J̄_l = I_{N_r} ⊗ I_M ⊗ J_lᵀ`.
pub fn jbar(cfg: &ArrayConfig, l: isize) -> CMat {
    let k = cfg.n_rx * cfg.n_pulses;
    DMatrix::<Complex64>::identity(k, k).kronecker(&shift(cfg.n_samples, l).transpose())
}

// ---------------------------------------------------------------------------
// Convex subproblem oracle: projected gradient, with the projection onto the
// intersection computed by Dykstra's algorithm over the elementary sets.

enum Piece<'a> {
    Half(&'a stap_slp::convex::Halfspace),
    Disks(f64),
    Sim(&'a stap_slp::convex::Similarity),
    Ball(f64),
}

fn pieces(cs: &ConstraintSet) -> Vec<Piece<'_>> {
    assert!(cs.equalities.is_empty(), "oracle handles inequality sets only");
    let mut v: Vec<Piece> = cs.halfspaces.iter().map(Piece::Half).collect();
    if let Some(r) = cs.disk_radius {
        v.push(Piece::Disks(r));
    }
    if let Some(s) = &cs.similarity {
        v.push(Piece::Sim(s));
    }
    if let Some(r) = cs.ball_radius {
        v.push(Piece::Ball(r));
    }
    v
}

fn project_piece(p: &Piece, x: &mut CVec) {
    match p {
        Piece::Half(h) => {
            let val = h.eval(x);
            if val < h.threshold {
                let k = (h.threshold - val) / h.coeffs.norm_squared();
                for (i, ci) in h.coeffs.iter().enumerate() {
                    x[h.offset + i] += ci * k;
                }
            }
        }
        Piece::Disks(r) => {
            for v in x.iter_mut() {
                let a = v.norm();
                if a > *r {
                    *v *= r / a;
                }
            }
        }
        Piece::Sim(s) => {
            for (v, c0) in x.iter_mut().zip(s.center.iter()) {
                let d = *v - c0;
                let a = d.norm();
                if a > s.radius {
                    *v = c0 + d * (s.radius / a);
                }
            }
        }
        Piece::Ball(r) => {
            let a = x.norm();
            if a > *r {
                *x *= c(r / a, 0.0);
            }
        }
    }
}

/// Euclidean projection onto the constraint set (Dykstra).
pub fn dykstra(cs: &ConstraintSet, z: &CVec, max_sweeps: usize, tol: f64) -> CVec {
    let ps = pieces(cs);
    let mut x = z.clone();
    let mut incr = vec![CVec::zeros(z.len()); ps.len()];
    for _ in 0..max_sweeps {
        let before = x.clone();
        for (p, q) in ps.iter().zip(incr.iter_mut()) {
            let y = &x + &*q;
            let mut px = y.clone();
            project_piece(p, &mut px);
            *q = y - &px;
            x = px;
        }
        if max_abs(&(&x - before)) < tol {
            break;
        }
    }
    x
}

/// Alternating projections until every constraint holds to `tol`.
pub fn polish(cs: &ConstraintSet, x: &mut CVec, tol: f64) {
    let ps = pieces(cs);
    for _ in 0..100_000 {
        if cs.max_violation(x) <= tol {
            return;
        }
        for p in &ps {
            project_piece(p, x);
        }
    }
}

fn lambda_max(d: &CMat) -> f64 {
    d.clone().symmetric_eigenvalues().iter().cloned().fold(0.0, f64::max)
}

pub struct OracleSolution {
    pub x: CVec,
    pub objective: f64,
    pub iterations: usize,
}

/// Minimizes `xᴴDx − Re{bᴴx} + (ρ/2)‖x − v‖²` over the constraint set by
/// projected gradient with step `1/L`, for at most `max_iter` iterations.
pub fn projected_gradient(p: &ConvexSubproblem, max_iter: usize) -> OracleSolution {
    let lip = 2.0 * lambda_max(&p.quad) + p.prox_weight;
    let step = c(1.0 / lip, 0.0);
    let cs = &p.constraints;
    let mut x = dykstra(cs, &p.prox_center, 20_000, 1e-15);
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let g = &p.quad * &x * c(2.0, 0.0) - &p.linear + (&x - &p.prox_center) * c(p.prox_weight, 0.0);
        let next = dykstra(cs, &(&x - g * step), 20_000, 1e-15);
        let moved = max_abs(&(&next - &x));
        x = next;
        if moved < 1e-14 {
            break;
        }
    }
    polish(cs, &mut x, 1e-12);
    OracleSolution {
        objective: p.objective(&x),
        x,
        iterations: it,
    }
}

// ---------------------------------------------------------------------------
// Elementwise modulus update: brute-force grid over (|y|, ∠y).

/// `|y − a|² + (|y| − b)²`, the per-coordinate augmented term.
pub fn modulus_cost(y: Complex64, a: Complex64, b: f64) -> f64 {
    (y - a).norm_sqr() + (y.norm() - b).powi(2)
}

/// Best point on a `k × k` polar grid, |y| in `[max(0, t − w), t + w]` and
/// ∠y over a full turn starting at `∠a − π`. Returns the point and the two
/// grid spacings.
pub fn modulus_grid_search(a: Complex64, b: f64, center: f64, w: f64, k: usize) -> (Complex64, f64, f64) {
    let lo = (center - w).max(0.0);
    let hi = center + w;
    let dt = (hi - lo) / (k - 1) as f64;
    let dphi = 2.0 * PI / k as f64;
    let phi0 = a.arg() - PI;
    let mut best = (f64::INFINITY, c(0.0, 0.0));
    for i in 0..k {
        let t = lo + i as f64 * dt;
        for j in 0..k {
            let y = Complex64::from_polar(t, phi0 + j as f64 * dphi);
            let v = modulus_cost(y, a, b);
            if v < best.0 {
                best = (v, y);
            }
        }
    }
    (best.1, dt, dphi)
}

// ---------------------------------------------------------------------------
// Infeasibility certificates for one slot.
//
// A slot holds `Nt` entries. The relaxed set is a product of lenses
// `{|z| ≤ r, |z − z0| ≤ ξ}`; the exact set is a product of circle arcs
// `{r·e^{jφ}: |φ − φ0| ≤ half}`. Linear functionals have closed-form
// maxima over both, which gives weak-duality bounds over a convex weight of
// the two CI rows of a user, refined by branch and bound on phase boxes.

/// `max Re{w̄·z}` over `{|z| ≤ r, |z − z0| ≤ xi}`, exactly. `None` if the
/// lens is empty.
pub fn lens_support(w: Complex64, r: f64, z0: Complex64, xi: f64) -> Option<f64> {
    let d = z0.norm();
    if d > r + xi {
        return None;
    }
    if w.norm() == 0.0 {
        return Some(0.0);
    }
    let u = w / w.norm();
    let val = |z: Complex64| (w.conj() * z).re;
    let in_big = |z: Complex64| z.norm() <= r * (1.0 + 1e-12);
    let in_sim = |z: Complex64| (z - z0).norm() <= xi * (1.0 + 1e-12) + 1e-15;
    let mut best = f64::NEG_INFINITY;
    for cand in [u * r, z0 + u * xi] {
        if in_big(cand) && in_sim(cand) {
            best = best.max(val(cand));
        }
    }
    // circle intersections
    if d > 0.0 && d >= (r - xi).abs() {
        let a = (r * r - xi * xi + d * d) / (2.0 * d);
        let h2 = r * r - a * a;
        if h2 >= 0.0 {
            let e = z0 / d;
            let base = e * a;
            let perp = c(-e.im, e.re) * h2.sqrt();
            for cand in [base + perp, base - perp] {
                best = best.max(val(cand));
            }
        }
    }
    if best == f64::NEG_INFINITY {
        // one disk inside the other: the smaller one decides
        best = if xi + d <= r { val(z0 + u * xi) } else { val(u * r) };
    }
    Some(best)
}

/// `max Re{w̄·r·e^{jφ}}` over `φ ∈ [lo, hi]`.
pub fn arc_support(w: Complex64, r: f64, lo: f64, hi: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let d = ((w.arg() - mid + PI).rem_euclid(2.0 * PI) - PI).abs();
    r * w.norm() * if d <= half { 1.0 } else { (d - half).cos() }
}

/// Both rows `Re{cₖᴴz} ≥ γₖ` of a pair, with a support function for the
/// slot set: returns the smallest weak-duality bound over `k` weights.
fn pair_bound(c1: &CVec, c2: &CVec, g1: f64, g2: f64, k: usize, support: &dyn Fn(usize, Complex64) -> Option<f64>) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..k {
        let th = i as f64 / (k - 1) as f64;
        let mut s = 0.0;
        for t in 0..c1.len() {
            match support(t, c1[t] * th + c2[t] * (1.0 - th)) {
                Some(v) => s += v,
                None => return f64::NEG_INFINITY,
            }
        }
        best = best.min(s - th * g1 - (1.0 - th) * g2);
    }
    best
}

/// Proves that no point of the lens product meets both rows.
pub fn ci_pair_infeasible_on_lenses(c1: &CVec, c2: &CVec, g1: f64, g2: f64, r: f64, z0: &[Complex64], xi: f64) -> bool {
    pair_bound(c1, c2, g1, g2, 2001, &|t, w| lens_support(w, r, z0[t], xi)) < 0.0
}

/// Proves that no point of the arc product meets both rows, splitting
/// phase boxes until every box is refuted or `max_boxes` is spent.
pub fn ci_pair_infeasible_on_arcs(c1: &CVec, c2: &CVec, g1: f64, g2: f64, r: f64, phi0: &[f64], half: f64, max_boxes: usize) -> bool {
    let lo: Vec<f64> = phi0.iter().map(|p| p - half).collect();
    let hi: Vec<f64> = phi0.iter().map(|p| p + half).collect();
    let mut stack = vec![(lo, hi)];
    let mut used = 0;
    while let Some((lo, hi)) = stack.pop() {
        used += 1;
        if used > max_boxes {
            return false;
        }
        if pair_bound(c1, c2, g1, g2, 201, &|t, w| Some(arc_support(w, r, lo[t], hi[t]))) < -1e-12 * (g1.abs() + g2.abs()) {
            continue;
        }
        if !split(&mut stack, lo, hi) {
            return false;
        }
    }
    true
}

/// Halves the widest side; `false` once boxes are too small to be worth it.
fn split(stack: &mut Vec<(Vec<f64>, Vec<f64>)>, lo: Vec<f64>, hi: Vec<f64>) -> bool {
    let t = (0..lo.len()).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b]))).unwrap();
    if hi[t] - lo[t] < 1e-9 {
        return false;
    }
    let m = 0.5 * (lo[t] + hi[t]);
    let (mut h1, mut l2) = (hi.clone(), lo.clone());
    h1[t] = m;
    l2[t] = m;
    stack.push((lo, h1));
    stack.push((l2, hi));
    true
}

/// Proves `hᴴz ≠ target` for every `z` in the arc product: on each phase
/// box some direction separates the target from the reachable sums.
pub fn zf_slot_infeasible_on_arcs(h: &CVec, target: Complex64, r: f64, phi0: &[f64], half: f64, max_boxes: usize) -> bool {
    let lo: Vec<f64> = phi0.iter().map(|p| p - half).collect();
    let hi: Vec<f64> = phi0.iter().map(|p| p + half).collect();
    let fixed: Vec<Complex64> = (0..16).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 16.0)).collect();
    let mut stack = vec![(lo, hi)];
    let mut used = 0;
    while let Some((lo, hi)) = stack.pop() {
        used += 1;
        if used > max_boxes {
            return false;
        }
        let center: Complex64 = (0..h.len()).map(|t| h[t].conj() * Complex64::from_polar(r, 0.5 * (lo[t] + hi[t]))).sum();
        let gap = center - target;
        let mut dirs = fixed.clone();
        if gap.norm() > 0.0 {
            dirs.push(gap / gap.norm());
        }
        // hᴴz = Σ conj(h_t)·r·e^{jφ_t}; Re{ū·hᴴz} ≥ −Σ sup over the arc of −u
        let refuted = dirs.iter().any(|u| {
            let low: f64 = (0..h.len()).map(|t| -arc_support(-(*u) * h[t], r, lo[t], hi[t])).sum();
            low > (u.conj() * target).re + 1e-12 * (r * h.norm() + target.norm())
        });
        if !refuted {
            if !split(&mut stack, lo, hi) {
                return false;
            }
        }
    }
    true
}
