//! Interior-point solver for the convex waveform subproblems.
//!
//! Every subproblem is posed over the real embedding `z = [Re x; Im x]`:
//!
//! ```text
//! minimize    xᴴDx − Re{bᴴx} + (ρ/2)‖x − v‖²
//! subject to  Re{hᵢᴴx} ≥ γᵢ          (halfspaces)
//!             hₖᴴx = τₖ               (affine equalities)
//!             |x_j| ≤ r               (per-coordinate disks)
//!             |x_j − x₀_j| ≤ ξ        (similarity disks)
//!             ‖x‖ ≤ R                 (power ball)
//! ```
//!
//! The main path is an infeasible-start primal-dual interior-point method
//! with Mehrotra's predictor-corrector, which needs no strictly feasible
//! start and takes about ten Newton steps on the design subproblems. When
//! it stalls, a log-barrier method with phase-I initialization takes over;
//! that path also certifies infeasibility. The barrier engine also solves
//! the maximin problem used to initialize the design loop.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{CMat, CVec, Error, Result};

type RVec = DVector<f64>;
type RMat = DMatrix<f64>;

/// `Re{coeffsᴴ·x[offset .. offset + coeffs.len()]} ≥ threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub offset: usize,
    #[serde(with = "crate::cser::vec")]
    pub coeffs: CVec,
    pub threshold: f64,
}

impl Halfspace {
    pub fn eval(&self, x: &CVec) -> f64 {
        self.coeffs.dotc(&x.rows(self.offset, self.coeffs.len())).re
    }
}

/// `coeffsᴴ·x[offset .. offset + coeffs.len()] = target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearEquality {
    pub offset: usize,
    #[serde(with = "crate::cser::vec")]
    pub coeffs: CVec,
    pub target: [f64; 2],
}

impl LinearEquality {
    pub fn new(offset: usize, coeffs: CVec, target: Complex64) -> Self {
        Self {
            offset,
            coeffs,
            target: [target.re, target.im],
        }
    }

    pub fn target(&self) -> Complex64 {
        Complex64::new(self.target[0], self.target[1])
    }

    pub fn residual(&self, x: &CVec) -> Complex64 {
        self.coeffs.dotc(&x.rows(self.offset, self.coeffs.len())) - self.target()
    }
}

/// Per-coordinate disks `|x_j − center_j| ≤ radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    #[serde(with = "crate::cser::vec")]
    pub center: CVec,
    pub radius: f64,
}

/// The constraint part of a subproblem.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub halfspaces: Vec<Halfspace>,
    pub equalities: Vec<LinearEquality>,
    pub disk_radius: Option<f64>,
    pub ball_radius: Option<f64>,
    pub similarity: Option<Similarity>,
}

impl ConstraintSet {
    fn validate(&self, n: usize) -> Result<()> {
        for h in &self.halfspaces {
            if h.offset + h.coeffs.len() > n {
                return Err(Error::dim("halfspace row", n, h.offset + h.coeffs.len()));
            }
        }
        for e in &self.equalities {
            if e.offset + e.coeffs.len() > n {
                return Err(Error::dim("equality row", n, e.offset + e.coeffs.len()));
            }
        }
        for (name, r) in [("disk radius", self.disk_radius), ("ball radius", self.ball_radius)] {
            if let Some(r) = r {
                if !(r > 0.0) || !r.is_finite() {
                    return Err(Error::InvalidParameter(format!("{name} must be positive, got {r}")));
                }
            }
        }
        if let Some(s) = &self.similarity {
            if s.center.len() != n {
                return Err(Error::dim("similarity center", n, s.center.len()));
            }
            if !(s.radius > 0.0) || !s.radius.is_finite() {
                return Err(Error::InvalidParameter(format!("similarity radius must be positive, got {}", s.radius)));
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint at `x` (zero when feasible).
    pub fn max_violation(&self, x: &CVec) -> f64 {
        let mut v: f64 = 0.0;
        for h in &self.halfspaces {
            v = v.max(h.threshold - h.eval(x));
        }
        for e in &self.equalities {
            v = v.max(e.residual(x).norm());
        }
        if let Some(r) = self.disk_radius {
            for c in x.iter() {
                v = v.max(c.norm() - r);
            }
        }
        if let Some(s) = &self.similarity {
            for (c, c0) in x.iter().zip(s.center.iter()) {
                v = v.max((c - c0).norm() - s.radius);
            }
        }
        if let Some(r) = self.ball_radius {
            v = v.max(x.norm() - r);
        }
        v
    }
}

/// One x-update of the ADMM loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexSubproblem {
    /// Hermitian PSD `D`, stored as `[re, im]` pairs in column-major order.
    #[serde(with = "cmat")]
    pub quad: CMat,
    #[serde(with = "crate::cser::vec")]
    pub linear: CVec,
    pub prox_weight: f64,
    #[serde(with = "crate::cser::vec")]
    pub prox_center: CVec,
    pub constraints: ConstraintSet,
}

impl ConvexSubproblem {
    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.quad.nrows() != n || self.quad.ncols() != n {
            return Err(Error::dim("quadratic term", n, self.quad.nrows()));
        }
        if self.prox_center.len() != n {
            return Err(Error::dim("prox center", n, self.prox_center.len()));
        }
        if !(self.prox_weight > 0.0) || !self.prox_weight.is_finite() {
            return Err(Error::InvalidParameter(format!("prox weight must be positive, got {}", self.prox_weight)));
        }
        self.constraints.validate(n)
    }

    /// `xᴴDx − Re{bᴴx} + (ρ/2)‖x − v‖²`.
    pub fn objective(&self, x: &CVec) -> f64 {
        x.dotc(&(&self.quad * x)).re - self.linear.dotc(x).re + 0.5 * self.prox_weight * (x - &self.prox_center).norm_squared()
    }

    /// Gradient of the objective with respect to `[Re x; Im x]`, returned
    /// as the complex vector `∂/∂Re + j·∂/∂Im`.
    pub fn gradient(&self, x: &CVec) -> CVec {
        &self.quad * x * Complex64::new(2.0, 0.0) - &self.linear + (x - &self.prox_center) * Complex64::new(self.prox_weight, 0.0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }
}

mod cmat {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Dense {
        rows: usize,
        cols: usize,
        data: Vec<[f64; 2]>,
    }

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        Dense {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let m = Dense::deserialize(d)?;
        if m.data.len() != m.rows * m.cols {
            return Err(serde::de::Error::custom("matrix data length does not match its shape"));
        }
        Ok(CMat::from_iterator(m.rows, m.cols, m.data.iter().map(|&[re, im]| Complex64::new(re, im))))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

/// Lagrange multipliers, one per constraint in declaration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Duals {
    pub halfspace: Vec<f64>,
    pub equality: Vec<Complex64>,
    pub disk: Vec<f64>,
    pub similarity: Vec<f64>,
    pub ball: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: CVec,
    pub primal_infeasibility: f64,
    pub objective_value: f64,
    /// Newton steps, phase I included.
    pub iterations: usize,
    pub status: SolveStatus,
    pub duals: Duals,
    pub kkt_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub kkt_tol: f64,
    /// Target duality gap, relative to `1 + |objective|`.
    pub gap_tol: f64,
    pub max_iter: usize,
    pub barrier_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-6,
            kkt_tol: 1e-6,
            gap_tol: 1e-10,
            max_iter: 200,
            barrier_factor: 10.0,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if !(self.feas_tol > 0.0 && self.kkt_tol > 0.0 && self.gap_tol > 0.0 && self.barrier_factor > 1.0) || self.max_iter == 0 {
            return Err(Error::InvalidParameter("solver tolerances must be positive and barrier factor > 1".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Real-valued engine

/// `Σ a_k z[idx_k] − b ≤ 0` or `scale·(‖z[idx] − c‖² − r²) ≤ 0`, each
/// optionally minus a phase-I slack variable.
#[derive(Debug, Clone)]
enum Con {
    Lin { idx: Vec<usize>, a: Vec<f64>, b: f64 },
    Quad { idx: Vec<usize>, c: Vec<f64>, r2: f64, scale: f64 },
}

#[derive(Debug, Clone)]
struct Ineq {
    con: Con,
    slack: Option<usize>,
}

impl Ineq {
    fn value(&self, z: &RVec) -> f64 {
        let v = match &self.con {
            Con::Lin { idx, a, b } => idx.iter().zip(a).map(|(&i, a)| a * z[i]).sum::<f64>() - b,
            Con::Quad { idx, c, r2, scale } => scale * (idx.iter().zip(c).map(|(&i, c)| (z[i] - c).powi(2)).sum::<f64>() - r2),
        };
        match self.slack {
            Some(s) => v - z[s],
            None => v,
        }
    }

    /// Sparse gradient as `(index, value)` pairs.
    fn grad(&self, z: &RVec) -> Vec<(usize, f64)> {
        let mut g: Vec<(usize, f64)> = match &self.con {
            Con::Lin { idx, a, .. } => idx.iter().cloned().zip(a.iter().cloned()).collect(),
            Con::Quad { idx, c, scale, .. } => idx.iter().zip(c).map(|(&i, c)| (i, 2.0 * scale * (z[i] - c))).collect(),
        };
        if let Some(s) = self.slack {
            g.push((s, -1.0));
        }
        g
    }

    /// Diagonal curvature applied on the support (zero for linear rows).
    fn curvature(&self) -> Option<(&[usize], f64)> {
        match &self.con {
            Con::Lin { .. } => None,
            Con::Quad { idx, scale, .. } => Some((idx, 2.0 * scale)),
        }
    }
}

/// `minimize ½zᵀHz + qᵀz` s.t. inequalities and `Az = b`.
#[derive(Debug, Clone)]
struct Engine {
    h: RMat,
    q: RVec,
    ineq: Vec<Ineq>,
    eq_a: RMat,
    eq_b: RVec,
}

struct Outcome {
    z: RVec,
    nu: RVec,
    /// Inequality multipliers, first-order corrected along the last Newton
    /// direction.
    lam: Vec<f64>,
    iterations: usize,
    converged: bool,
}

impl Engine {
    fn dim(&self) -> usize {
        self.q.len()
    }

    fn f0(&self, z: &RVec) -> f64 {
        0.5 * z.dot(&(&self.h * z)) + self.q.dot(z)
    }

    fn max_ineq(&self, z: &RVec) -> f64 {
        self.ineq.iter().map(|c| c.value(z)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `φ_t(z + s·d) − φ_t(z)`, evaluated without forming `φ_t` itself so
    /// the comparison survives large `t`. `None` outside the domain.
    fn barrier_change(&self, z: &RVec, d: &RVec, s: f64, t: f64, g_at_z: &[f64]) -> Option<f64> {
        let hd = &self.h * d;
        let lin = (&self.h * z + &self.q).dot(d);
        let mut delta = t * (s * lin + 0.5 * s * s * d.dot(&hd));
        let cand = z + d * s;
        for (c, &g0) in self.ineq.iter().zip(g_at_z) {
            let g = c.value(&cand);
            if !(g < 0.0) {
                return None;
            }
            delta -= (g / g0).ln();
        }
        Some(delta)
    }

    fn grad_hess(&self, z: &RVec, t: f64) -> (RVec, RMat) {
        let mut grad = (&self.h * z + &self.q) * t;
        let mut hess = &self.h * t;
        for c in &self.ineq {
            let g = c.value(z);
            let inv = 1.0 / (-g);
            let dg = c.grad(z);
            for &(i, a) in &dg {
                grad[i] += a * inv;
                for &(k, b) in &dg {
                    hess[(i, k)] += a * b * inv * inv;
                }
            }
            if let Some((idx, curv)) = c.curvature() {
                for &i in idx {
                    hess[(i, i)] += curv * inv;
                }
            }
        }
        (grad, hess)
    }

    /// Newton direction and the equality multiplier estimate.
    fn newton_step(&self, z: &RVec, grad: RVec, hess: RMat) -> Option<(RVec, RVec)> {
        let p = self.dim();
        let me = self.eq_b.len();
        if me == 0 {
            let rhs = -grad;
            if let Some(ch) = hess.clone().cholesky() {
                return Some((ch.solve(&rhs), RVec::zeros(0)));
            }
            return hess.lu().solve(&rhs).map(|d| (d, RVec::zeros(0)));
        }
        let mut kkt = RMat::zeros(p + me, p + me);
        kkt.view_mut((0, 0), (p, p)).copy_from(&hess);
        kkt.view_mut((p, 0), (me, p)).copy_from(&self.eq_a);
        kkt.view_mut((0, p), (p, me)).copy_from(&self.eq_a.transpose());
        let mut rhs = RVec::zeros(p + me);
        rhs.rows_mut(0, p).copy_from(&(-grad));
        rhs.rows_mut(p, me).copy_from(&(&self.eq_b - &self.eq_a * z));
        let sol = kkt.lu().solve(&rhs)?;
        Some((sol.rows(0, p).into_owned(), sol.rows(p, me).into_owned()))
    }

    /// Barrier path-following from a strictly feasible `z`. `stop` is
    /// checked after every centering step.
    fn run(&self, mut z: RVec, t0: f64, gap_tol: f64, mu: f64, max_iter: usize, stop: &dyn Fn(&RVec) -> bool) -> Result<Outcome> {
        let m = self.ineq.len().max(1) as f64;
        let mut t = t0;
        let mut iterations = 0;
        let mut nu: RVec;
        let mut lam: Vec<f64>;
        loop {
            // centering
            let mut inner = 0;
            loop {
                let (grad, hess) = self.grad_hess(&z, t);
                let Some((dz, w)) = self.newton_step(&z, grad.clone(), hess) else {
                    return Err(Error::Solver("singular Newton system".into()));
                };
                nu = w / t;
                lam = self
                    .ineq
                    .iter()
                    .map(|c| {
                        let ng = -c.value(&z);
                        let slope: f64 = c.grad(&z).iter().map(|&(i, a)| a * dz[i]).sum();
                        ((1.0 + slope / ng) / (t * ng)).max(0.0)
                    })
                    .collect();
                let dec = -grad.dot(&dz);
                let eq_res = if self.eq_b.is_empty() { 0.0 } else { (&self.eq_a * &z - &self.eq_b).amax() };
                if (dec <= 1e-9 && eq_res <= 1e-12) || inner >= 50 {
                    break;
                }
                let g_at_z: Vec<f64> = self.ineq.iter().map(|c| c.value(&z)).collect();
                let mut s = 1.0;
                let mut accepted = false;
                for _ in 0..80 {
                    if let Some(delta) = self.barrier_change(&z, &dz, s, t, &g_at_z) {
                        if delta <= -0.01 * s * dec.max(0.0) || eq_res > 1e-12 || dec < 1e-9 {
                            z += &dz * s;
                            accepted = true;
                            break;
                        }
                    }
                    s *= 0.5;
                }
                iterations += 1;
                inner += 1;
                if !accepted && dec < 1e-5 && eq_res <= 1e-12 {
                    // roundoff floor of the line search; close enough to center
                    break;
                }
                if !accepted || iterations >= max_iter {
                    let converged = m / t <= gap_tol * (1.0 + self.f0(&z).abs());
                    return Ok(Outcome {
                        z,
                        nu,
                        lam,
                        iterations,
                        converged,
                    });
                }
            }
            if stop(&z) {
                return Ok(Outcome {
                    z,
                    nu,
                    lam,
                    iterations,
                    converged: true,
                });
            }
            if m / t <= gap_tol * (1.0 + self.f0(&z).abs()) {
                return Ok(Outcome {
                    z,
                    nu,
                    lam,
                    iterations,
                    converged: true,
                });
            }
            t *= mu;
        }
    }

    /// Infeasible-start primal-dual path following with Mehrotra's
    /// predictor-corrector. Slacks `s = −g(z)` and multipliers are kept
    /// positive by a fraction-to-boundary rule; `z` itself may start
    /// anywhere. Returns `converged = false` when it stalls, in which case
    /// the caller falls back to the barrier method.
    fn run_pd(&self, z0: &RVec, opts: &SolverOptions) -> Outcome {
        let p = self.dim();
        let m = self.ineq.len();
        let me = self.eq_b.len();
        let mut z = z0.clone();
        let mut s = RVec::from_fn(m, |i, _| (-self.ineq[i].value(&z)).max(1e-2));
        let mut lam = RVec::from_element(m, 1.0);
        let mut nu = RVec::zeros(me);
        let fail = |z: RVec, nu: RVec, lam: &RVec, iterations| Outcome {
            z,
            nu,
            lam: lam.iter().cloned().collect(),
            iterations,
            converged: false,
        };
        for it in 0..opts.max_iter {
            let gv = RVec::from_fn(m, |i, _| self.ineq[i].value(&z));
            let grads: Vec<Vec<(usize, f64)>> = self.ineq.iter().map(|c| c.grad(&z)).collect();
            let mut rd = &self.h * &z + &self.q;
            if me > 0 {
                rd += self.eq_a.transpose() * &nu;
            }
            for (gr, l) in grads.iter().zip(lam.iter()) {
                for &(i, a) in gr {
                    rd[i] += a * l;
                }
            }
            let rp = &gv + &s;
            let re = if me > 0 { &self.eq_a * &z - &self.eq_b } else { RVec::zeros(0) };
            let mu = if m > 0 { s.dot(&lam) / m as f64 } else { 0.0 };
            let feas = rp.amax().max(if me > 0 { re.amax() } else { 0.0 });
            let gap = m as f64 * mu;
            let gap_ok = gap <= (opts.gap_tol * (1.0 + self.f0(&z).abs())).min(0.1 * opts.kkt_tol);
            if rd.amax() <= 0.1 * opts.kkt_tol && feas <= 1e-3 * opts.feas_tol && gap_ok {
                return Outcome {
                    z,
                    nu,
                    lam: lam.iter().cloned().collect(),
                    iterations: it,
                    converged: true,
                };
            }

            let mut k = self.h.clone();
            for (c, l) in self.ineq.iter().zip(lam.iter()) {
                if let Some((idx, curv)) = c.curvature() {
                    for &i in idx {
                        k[(i, i)] += curv * l;
                    }
                }
            }
            for ((gr, l), si) in grads.iter().zip(lam.iter()).zip(s.iter()) {
                let w = l / si;
                for &(i, a) in gr {
                    for &(j, b) in gr {
                        k[(i, j)] += w * a * b;
                    }
                }
            }
            enum Factor {
                Chol(nalgebra::Cholesky<f64, nalgebra::Dyn>),
                Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
            }
            let factor = if me == 0 {
                match k.clone().cholesky() {
                    Some(c) => Factor::Chol(c),
                    None => Factor::Lu(k.lu()),
                }
            } else {
                let mut kkt = RMat::zeros(p + me, p + me);
                kkt.view_mut((0, 0), (p, p)).copy_from(&k);
                kkt.view_mut((p, 0), (me, p)).copy_from(&self.eq_a);
                kkt.view_mut((0, p), (p, me)).copy_from(&self.eq_a.transpose());
                Factor::Lu(kkt.lu())
            };
            // direction for a complementarity target rc = s∘λ − σμ (+ corr)
            let direction = |rc: &RVec| -> Option<(RVec, RVec, RVec, RVec)> {
                let t = RVec::from_fn(m, |i, _| (lam[i] * rp[i] - rc[i]) / s[i]);
                let mut rhs = -&rd;
                for (gr, ti) in grads.iter().zip(t.iter()) {
                    for &(i, a) in gr {
                        rhs[i] -= a * ti;
                    }
                }
                let (dz, dnu) = match &factor {
                    Factor::Chol(c) => (c.solve(&rhs), RVec::zeros(0)),
                    Factor::Lu(lu) if me == 0 => (lu.solve(&rhs)?, RVec::zeros(0)),
                    Factor::Lu(lu) => {
                        let mut full = RVec::zeros(p + me);
                        full.rows_mut(0, p).copy_from(&rhs);
                        full.rows_mut(p, me).copy_from(&(-&re));
                        let sol = lu.solve(&full)?;
                        (sol.rows(0, p).into_owned(), sol.rows(p, me).into_owned())
                    }
                };
                let jdz = RVec::from_fn(m, |i, _| grads[i].iter().map(|&(j, a)| a * dz[j]).sum::<f64>());
                let ds = -&rp - &jdz;
                let dl = RVec::from_fn(m, |i, _| (-rc[i] - lam[i] * ds[i]) / s[i]);
                if dz.iter().chain(dl.iter()).any(|v| !v.is_finite()) {
                    return None;
                }
                Some((dz, ds, dl, dnu))
            };
            let max_step = |v: &RVec, dv: &RVec, frac: f64| -> f64 {
                v.iter().zip(dv.iter()).filter(|(_, d)| **d < 0.0).map(|(x, d)| -frac * x / d).fold(1.0, f64::min)
            };
            let rc_aff = s.component_mul(&lam);
            let Some((_, ds_a, dl_a, _)) = direction(&rc_aff) else {
                return fail(z, nu, &lam, it);
            };
            let a_aff = max_step(&s, &ds_a, 1.0).min(max_step(&lam, &dl_a, 1.0));
            let mu_aff = if m > 0 { (&s + &ds_a * a_aff).dot(&(&lam + &dl_a * a_aff)) / m as f64 } else { 0.0 };
            let sigma = if mu > 0.0 { (mu_aff / mu).powi(3).min(1.0) } else { 0.0 };
            let rc = RVec::from_fn(m, |i, _| s[i] * lam[i] + ds_a[i] * dl_a[i] - sigma * mu);
            let Some((dz, ds, dl, dnu)) = direction(&rc) else {
                return fail(z, nu, &lam, it);
            };
            let alpha = max_step(&s, &ds, 0.995).min(max_step(&lam, &dl, 0.995));
            if !(alpha > 1e-10) {
                return fail(z, nu, &lam, it);
            }
            z += &dz * alpha;
            s += &ds * alpha;
            lam += &dl * alpha;
            if me > 0 {
                nu += &dnu * alpha;
            }
        }
        fail(z, nu, &lam, opts.max_iter)
    }

    /// Barrier weight whose central-path stationarity best matches `z`.
    fn initial_t(&self, z: &RVec, gap_tol: f64) -> f64 {
        let g0 = &self.h * z + &self.q;
        let mut gphi = RVec::zeros(self.dim());
        for c in &self.ineq {
            let inv = 1.0 / (-c.value(z));
            for (i, a) in c.grad(z) {
                gphi[i] += a * inv;
            }
        }
        let m = self.ineq.len().max(1) as f64;
        let nn = g0.norm_squared();
        let t = if nn > 0.0 { -g0.dot(&gphi) / nn } else { 1.0 };
        let hi = m / (gap_tol * (1.0 + self.f0(z).abs()));
        if t.is_finite() && t > 0.0 {
            t.clamp(1e-3, hi.max(1e-3))
        } else {
            1.0f64.min(hi)
        }
    }

    fn equality_projection(&self, z: &RVec) -> Result<RVec> {
        if self.eq_b.is_empty() {
            return Ok(z.clone());
        }
        let gram = &self.eq_a * self.eq_a.transpose();
        let r = &self.eq_b - &self.eq_a * z;
        let y = gram
            .cholesky()
            .ok_or_else(|| Error::Solver("equality rows are linearly dependent".into()))?
            .solve(&r);
        Ok(z + self.eq_a.transpose() * y)
    }

    /// Strictly feasible point, or `None` if the set has empty interior.
    fn phase_one(&self, z_start: &RVec, max_iter: usize) -> Result<(Option<RVec>, usize)> {
        let p = self.dim();
        let z0 = self.equality_projection(z_start)?;
        if self.ineq.is_empty() {
            return Ok((Some(z0), 0));
        }
        let g0 = self.max_ineq(&z0);
        if g0 < -1e-9 {
            return Ok((Some(z0), 0));
        }
        let s = p;
        let delta = 1e-8;
        let mut h = RMat::zeros(p + 1, p + 1);
        let mut q = RVec::zeros(p + 1);
        for i in 0..p {
            h[(i, i)] = delta;
            q[i] = -delta * z0[i];
        }
        q[s] = 1.0;
        let mut ineq: Vec<Ineq> = self
            .ineq
            .iter()
            .map(|c| Ineq {
                con: c.con.clone(),
                slack: Some(s),
            })
            .collect();
        ineq.push(Ineq {
            con: Con::Lin {
                idx: vec![s],
                a: vec![-1.0],
                b: 1.0,
            },
            slack: None,
        });
        let mut eq_a = RMat::zeros(self.eq_b.len(), p + 1);
        eq_a.view_mut((0, 0), (self.eq_b.len(), p)).copy_from(&self.eq_a);
        let aux = Engine {
            h,
            q,
            ineq,
            eq_a,
            eq_b: self.eq_b.clone(),
        };
        let mut za = RVec::zeros(p + 1);
        za.rows_mut(0, p).copy_from(&z0);
        za[s] = g0.max(0.0) + 1.0;
        let out = aux.run(za, 1.0, 1e-12, 10.0, max_iter, &|z: &RVec| z[s] < -1e-6)?;
        let zf = out.z.rows(0, p).into_owned();
        if out.z[s] < 0.0 && self.max_ineq(&zf) < 0.0 {
            Ok((Some(zf), out.iterations))
        } else {
            Ok((None, out.iterations))
        }
    }
}

// ---------------------------------------------------------------------------
// Complex problem ↔ engine

struct Layout {
    n: usize,
    /// Scale applied to each engine inequality, in declaration order.
    scales: Vec<f64>,
    n_half: usize,
    n_disk: usize,
    n_sim: usize,
    has_ball: bool,
}

fn embed(v: &CVec) -> RVec {
    let n = v.len();
    RVec::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

fn unembed(z: &RVec, n: usize) -> CVec {
    CVec::from_fn(n, |i, _| Complex64::new(z[i], z[n + i]))
}

fn build_constraints(cs: &ConstraintSet, n: usize, extra: Option<usize>) -> (Vec<Ineq>, RMat, RVec, Layout) {
    let p = 2 * n + extra.map_or(0, |_| 1);
    let mut ineq = Vec::new();
    let mut scales = Vec::new();
    for h in &cs.halfspaces {
        let norm = h.coeffs.norm().max(f64::MIN_POSITIVE);
        let mut idx = Vec::new();
        let mut a = Vec::new();
        for (k, c) in h.coeffs.iter().enumerate() {
            idx.push(h.offset + k);
            a.push(-c.re / norm);
            idx.push(n + h.offset + k);
            a.push(-c.im / norm);
        }
        ineq.push(Ineq {
            con: Con::Lin { idx, a, b: -h.threshold / norm },
            slack: extra,
        });
        scales.push(1.0 / norm);
    }
    let mut push_disk = |idx: Vec<usize>, c: Vec<f64>, r: f64, ineq: &mut Vec<Ineq>| {
        let scale = 1.0 / (2.0 * r);
        ineq.push(Ineq {
            con: Con::Quad { idx, c, r2: r * r, scale },
            slack: None,
        });
        scales.push(scale);
    };
    let mut n_disk = 0;
    if let Some(r) = cs.disk_radius {
        for j in 0..n {
            push_disk(vec![j, n + j], vec![0.0, 0.0], r, &mut ineq);
        }
        n_disk = n;
    }
    let mut n_sim = 0;
    if let Some(s) = &cs.similarity {
        for j in 0..n {
            push_disk(vec![j, n + j], vec![s.center[j].re, s.center[j].im], s.radius, &mut ineq);
        }
        n_sim = n;
    }
    let has_ball = cs.ball_radius.is_some();
    if let Some(r) = cs.ball_radius {
        push_disk((0..2 * n).collect(), vec![0.0; 2 * n], r, &mut ineq);
    }
    let me = 2 * cs.equalities.len();
    let mut eq_a = RMat::zeros(me, p);
    let mut eq_b = RVec::zeros(me);
    for (k, e) in cs.equalities.iter().enumerate() {
        // Re{hᴴx} = hr·xr + hi·xi, Im{hᴴx} = hr·xi − hi·xr
        for (i, c) in e.coeffs.iter().enumerate() {
            let j = e.offset + i;
            eq_a[(2 * k, j)] = c.re;
            eq_a[(2 * k, n + j)] = c.im;
            eq_a[(2 * k + 1, j)] = -c.im;
            eq_a[(2 * k + 1, n + j)] = c.re;
        }
        eq_b[2 * k] = e.target[0];
        eq_b[2 * k + 1] = e.target[1];
    }
    let layout = Layout {
        n,
        scales,
        n_half: cs.halfspaces.len(),
        n_disk,
        n_sim,
        has_ball,
    };
    (ineq, eq_a, eq_b, layout)
}

fn engine_for(p: &ConvexSubproblem) -> (Engine, Layout) {
    let n = p.dim();
    let (ineq, eq_a, eq_b, layout) = build_constraints(&p.constraints, n, None);
    // xᴴDx = zᵀ[[Dr, −Di], [Di, Dr]]z
    let mut h = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for k in 0..n {
            let d = p.quad[(i, k)];
            h[(i, k)] = 2.0 * d.re;
            h[(i, n + k)] = -2.0 * d.im;
            h[(n + i, k)] = 2.0 * d.im;
            h[(n + i, n + k)] = 2.0 * d.re;
        }
    }
    let h = (&h + h.transpose()) * 0.5 + RMat::identity(2 * n, 2 * n) * p.prox_weight;
    let q = -(embed(&p.linear) + embed(&p.prox_center) * p.prox_weight);
    (Engine { h, q, ineq, eq_a, eq_b }, layout)
}

fn recover_duals(lay: &Layout, out: &Outcome) -> Duals {
    let lam: Vec<f64> = out.lam.iter().zip(&lay.scales).map(|(l, s)| l * s).collect();
    let nu = &out.nu;
    let (h, rest) = lam.split_at(lay.n_half);
    let (d, rest) = rest.split_at(lay.n_disk);
    let (s, rest) = rest.split_at(lay.n_sim);
    let equality = (0..nu.len() / 2).map(|k| Complex64::new(nu[2 * k], nu[2 * k + 1])).collect();
    Duals {
        halfspace: h.to_vec(),
        equality,
        disk: d.to_vec(),
        similarity: s.to_vec(),
        ball: if lay.has_ball { rest[0] } else { 0.0 },
    }
}

/// Stationarity plus complementary-slackness residual of `(x, duals)`.
///
/// Stationarity is measured in the real embedding as the max-norm of
/// `∇f + Σλᵢ∇gᵢ + Σν∇h`; complementarity as `Σ|λᵢgᵢ|`, and negative
/// multipliers count as violations.
pub fn kkt_residual(p: &ConvexSubproblem, x: &CVec, duals: &Duals) -> f64 {
    let cs = &p.constraints;
    let two = Complex64::new(2.0, 0.0);
    let mut stat = p.gradient(x);
    let mut comp = 0.0;
    let mut neg = 0.0;
    let mut lam_of = |v: Option<&f64>| -> f64 {
        let l = v.cloned().unwrap_or(0.0);
        neg += (-l).max(0.0);
        l
    };
    for (i, h) in cs.halfspaces.iter().enumerate() {
        let l = lam_of(duals.halfspace.get(i));
        // g = γ − Re{hᴴx}; ∇g = −h
        let n = h.coeffs.len();
        let mut seg = stat.rows_mut(h.offset, n);
        seg -= &h.coeffs * Complex64::new(l, 0.0);
        comp += (l * (h.threshold - h.eval(x))).abs();
    }
    if let Some(r) = cs.disk_radius {
        for j in 0..x.len() {
            let l = lam_of(duals.disk.get(j));
            stat[j] += x[j] * two * l;
            comp += (l * (x[j].norm_sqr() - r * r)).abs();
        }
    }
    if let Some(s) = &cs.similarity {
        for j in 0..x.len() {
            let l = lam_of(duals.similarity.get(j));
            let d = x[j] - s.center[j];
            stat[j] += d * two * l;
            comp += (l * (d.norm_sqr() - s.radius * s.radius)).abs();
        }
    }
    if let Some(r) = cs.ball_radius {
        let l = lam_of(Some(&duals.ball));
        stat += x * two * Complex64::new(l, 0.0);
        comp += (l * (x.norm_squared() - r * r)).abs();
    }
    for (k, e) in cs.equalities.iter().enumerate() {
        let nu = duals.equality.get(k).cloned().unwrap_or_default();
        // ∇Re{hᴴx} = h and ∇Im{hᴴx} = j·h in complex form, so the
        // multiplier term is h·(νr + j·νi).
        let n = e.coeffs.len();
        let mut seg = stat.rows_mut(e.offset, n);
        seg += &e.coeffs * nu;
    }
    let s = stat.iter().map(|c| c.re.abs().max(c.im.abs())).fold(0.0, f64::max);
    s + comp + neg
}

fn finish(p: &ConvexSubproblem, lay: &Layout, out: &Outcome, extra_iters: usize, opts: &SolverOptions) -> SolveReport {
    let x = unembed(&out.z, lay.n);
    let duals = recover_duals(lay, out);
    let kkt = kkt_residual(p, &x, &duals);
    let infeas = p.constraints.max_violation(&x);
    let status = if out.converged && infeas <= opts.feas_tol && kkt <= opts.kkt_tol {
        SolveStatus::Optimal
    } else {
        SolveStatus::MaxIter
    };
    SolveReport {
        objective_value: p.objective(&x),
        solution: x,
        primal_infeasibility: infeas,
        iterations: out.iterations + extra_iters,
        status,
        duals,
        kkt_residual: kkt,
    }
}

fn interior_start(eng: &Engine, warm: Option<RVec>, fallback: RVec, max_iter: usize) -> Result<(Option<RVec>, usize)> {
    if let Some(w) = warm {
        let wp = eng.equality_projection(&w)?;
        if eng.ineq.is_empty() || eng.max_ineq(&wp) < -1e-12 {
            return Ok((Some(wp), 0));
        }
        // pull a boundary warm start slightly inward
        let (z, it) = eng.phase_one(&wp, max_iter)?;
        if z.is_some() {
            return Ok((z, it));
        }
    }
    eng.phase_one(&fallback, max_iter)
}

/// Solves the subproblem, warm-starting from `warm_start` when it is
/// strictly feasible.
pub fn solve(p: &ConvexSubproblem, opts: &SolverOptions, warm_start: Option<&CVec>) -> Result<SolveReport> {
    p.validate()?;
    opts.validate()?;
    if let Some(w) = warm_start {
        if w.len() != p.dim() {
            return Err(Error::dim("warm start", p.dim(), w.len()));
        }
    }
    let (eng, lay) = engine_for(p);
    let z_pd = warm_start.map(embed).unwrap_or_else(|| embed(&p.prox_center));
    let pd = eng.run_pd(&z_pd, opts);
    if pd.converged {
        let rep = finish(p, &lay, &pd, 0, opts);
        if rep.status == SolveStatus::Optimal {
            return Ok(rep);
        }
    }
    let (start, it1) = interior_start(&eng, warm_start.map(embed), embed(&p.prox_center) * 0.0, opts.max_iter)?;
    let it1 = it1 + pd.iterations;
    let Some(z0) = start else {
        return Ok(SolveReport {
            solution: CVec::zeros(p.dim()),
            primal_infeasibility: f64::INFINITY,
            objective_value: f64::NAN,
            iterations: it1,
            status: SolveStatus::Infeasible,
            duals: Duals::default(),
            kkt_residual: f64::INFINITY,
        });
    };
    let t0 = eng.initial_t(&z0, opts.gap_tol);
    let out = eng.run(z0, t0, opts.gap_tol, opts.barrier_factor, opts.max_iter, &|_: &RVec| false)?;
    Ok(finish(p, &lay, &out, it1, opts))
}

/// Result of the maximin initialization problem.
#[derive(Debug, Clone)]
pub struct MaximinReport {
    pub solution: CVec,
    /// `min_i (Re{hᵢᴴx} − γᵢ)` at the solution.
    pub value: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

/// `maximize_x min_i (Re{hᵢᴴx} − γᵢ)` over the remaining constraints of
/// `cs`. Requires at least one halfspace and a bounded set (a disk or a
/// ball).
pub fn solve_maximin(cs: &ConstraintSet, n: usize, opts: &SolverOptions) -> Result<MaximinReport> {
    cs.validate(n)?;
    opts.validate()?;
    if cs.halfspaces.is_empty() {
        return Err(Error::InvalidParameter("maximin needs at least one halfspace".into()));
    }
    if cs.disk_radius.is_none() && cs.ball_radius.is_none() {
        return Err(Error::InvalidParameter("maximin needs a bounded constraint set".into()));
    }
    // Epigraph: maximize τ s.t. γᵢ + τ − Re{hᵢᴴx} ≤ 0. Halfspaces are
    // normalized by ‖hᵢ‖ inside the engine, so attach τ with weight 1/‖hᵢ‖.
    let tau = 2 * n;
    let (mut ineq, eq_a0, eq_b, _) = build_constraints(cs, n, None);
    for (c, h) in ineq.iter_mut().zip(&cs.halfspaces) {
        if let Con::Lin { idx, a, .. } = &mut c.con {
            idx.push(tau);
            a.push(1.0 / h.coeffs.norm().max(f64::MIN_POSITIVE));
        }
    }
    let mut eq_a = RMat::zeros(eq_b.len(), 2 * n + 1);
    eq_a.view_mut((0, 0), (eq_b.len(), 2 * n)).copy_from(&eq_a0);
    let mut q = RVec::zeros(2 * n + 1);
    q[tau] = -1.0;
    let eng = Engine {
        h: RMat::zeros(2 * n + 1, 2 * n + 1),
        q,
        ineq,
        eq_a,
        eq_b,
    };
    let z0 = eng.equality_projection(&RVec::zeros(2 * n + 1))?;
    let x0 = unembed(&z0, n);
    let worst = cs.halfspaces.iter().map(|h| h.eval(&x0) - h.threshold).fold(f64::INFINITY, f64::min);
    // τ below the worst margin makes the halfspaces strict; the rest
    // needs a phase-I pass over x only.
    let inner = Engine {
        h: RMat::zeros(2 * n, 2 * n),
        q: RVec::zeros(2 * n),
        ineq: build_constraints(
            &ConstraintSet {
                halfspaces: vec![],
                ..cs.clone()
            },
            n,
            None,
        )
        .0,
        eq_a: eq_a0.clone(),
        eq_b: eng.eq_b.clone(),
    };
    let (xs, it1) = inner.phase_one(&z0.rows(0, 2 * n).into_owned(), opts.max_iter)?;
    let Some(xs) = xs else {
        return Ok(MaximinReport {
            solution: CVec::zeros(n),
            value: f64::NEG_INFINITY,
            iterations: it1,
            status: SolveStatus::Infeasible,
        });
    };
    let xc = unembed(&xs, n);
    let worst2 = cs.halfspaces.iter().map(|h| h.eval(&xc) - h.threshold).fold(worst, f64::min);
    let mut za = RVec::zeros(2 * n + 1);
    za.rows_mut(0, 2 * n).copy_from(&xs);
    za[tau] = worst2 - 1.0;
    let out = eng.run(za, 1.0, opts.gap_tol, opts.barrier_factor, opts.max_iter, &|_: &RVec| false)?;
    let x = unembed(&out.z, n);
    let value = cs.halfspaces.iter().map(|h| h.eval(&x) - h.threshold).fold(f64::INFINITY, f64::min);
    Ok(MaximinReport {
        solution: x,
        value,
        iterations: out.iterations + it1,
        status: if out.converged { SolveStatus::Optimal } else { SolveStatus::MaxIter },
    })
}
