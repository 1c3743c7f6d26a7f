//! MM outer loop with nonlinear-equality ADMM inner loops.
//!
//! Each outer iteration replaces the negated SINR by its convex majorizer
//! and minimizes that over the waveform set. The nonconvex part of the set
//! (unit-modulus entries, or the total-power sphere) is split off into an
//! auxiliary variable `y` with closed-form updates; the convex remainder
//! goes to the interior-point solver.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::comm::{CiConstraintSet, ZfConstraintSet};
use crate::convex::{self, ConstraintSet, ConvexSubproblem, Halfspace, LinearEquality, Similarity, SolveStatus, SolverOptions};
use crate::model::OperatorSet;
use crate::radar::{concentrated_objective, mvdr_filter};
use crate::surrogate::{build_surrogate, SurrogateCoeffs};
use crate::{cser, linear_to_db, CVec, Error, Result};

/// Waveform constraint family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintVariant {
    /// `|x_j| = √(P/n)`.
    Cm { total_power: f64 },
    /// `‖x‖² = P` and `|x_j|² ≤ (1+ε)P/n`.
    Papr { total_power: f64, papr_eps: f64 },
    /// Constant modulus plus `|x_j − x₀_j| ≤ ξ`.
    Cms {
        total_power: f64,
        similarity_xi: f64,
        #[serde(with = "cser::vec")]
        reference: CVec,
    },
}

impl ConstraintVariant {
    pub fn total_power(&self) -> f64 {
        match *self {
            Self::Cm { total_power } | Self::Papr { total_power, .. } | Self::Cms { total_power, .. } => total_power,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Cm { .. } => "cm",
            Self::Papr { .. } => "papr",
            Self::Cms { .. } => "cms",
        }
    }

    /// Per-entry modulus `√(P/n)`.
    pub fn modulus(&self, n: usize) -> f64 {
        (self.total_power() / n as f64).sqrt()
    }

    /// Radius of the per-entry disks of the convex relaxation.
    pub fn disk_radius(&self, n: usize) -> f64 {
        match *self {
            Self::Papr { papr_eps, .. } => self.modulus(n) * (1.0 + papr_eps).sqrt(),
            _ => self.modulus(n),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let p = self.total_power();
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("total power must be positive, got {p}")));
        }
        match self {
            Self::Cm { .. } => {}
            Self::Papr { papr_eps, .. } => {
                if !(*papr_eps >= 0.0) || !papr_eps.is_finite() {
                    return Err(Error::InvalidParameter(format!("papr_eps must be >= 0, got {papr_eps}")));
                }
            }
            Self::Cms {
                similarity_xi, reference, ..
            } => {
                if !(*similarity_xi >= 0.0) {
                    return Err(Error::InvalidParameter(format!("similarity_xi must be >= 0, got {similarity_xi}")));
                }
                if reference.len() != n {
                    return Err(Error::dim("similarity reference", n, reference.len()));
                }
                let r = self.modulus(n);
                let dev = reference.iter().map(|c| (c.norm() - r).abs()).fold(0.0, f64::max);
                if dev > 1e-9 * r {
                    return Err(Error::InvalidParameter("similarity reference must have constant modulus sqrt(P/n)".into()));
                }
            }
        }
        Ok(())
    }

    /// Convex hull of the variant set used in the x-update.
    pub fn convex_part(&self, n: usize) -> ConstraintSet {
        let mut cs = ConstraintSet {
            disk_radius: Some(self.disk_radius(n)),
            ..Default::default()
        };
        match self {
            Self::Cm { .. } => {}
            Self::Papr { total_power, .. } => cs.ball_radius = Some(total_power.sqrt()),
            Self::Cms {
                similarity_xi, reference, ..
            } => {
                // ξ beyond the diameter 2r cannot bind
                if *similarity_xi < 2.0 * self.modulus(n) {
                    cs.similarity = Some(Similarity {
                        center: reference.clone(),
                        radius: similarity_xi.max(1e-12),
                    });
                }
            }
        }
        cs
    }

    /// Distance-like residual to the nonconvex part of the set: the largest
    /// modulus error (plus any similarity excess) for CM/CMS, the
    /// total-power error for PAPR.
    pub fn set_residual(&self, x: &CVec) -> f64 {
        let n = x.len();
        match self {
            Self::Papr { total_power, .. } => (x.norm() - total_power.sqrt()).abs(),
            Self::Cm { .. } => max_modulus_error(x, self.modulus(n)),
            Self::Cms {
                similarity_xi, reference, ..
            } => {
                let sim = (x - reference).iter().map(|c| c.norm() - similarity_xi).fold(0.0, f64::max);
                max_modulus_error(x, self.modulus(n)) + sim
            }
        }
    }

    /// Half-angle of the arc `{|y| = r, |y − x₀| ≤ ξ}` around each
    /// reference phase, or `None` when the similarity bound cannot bind.
    pub fn similarity_arc(&self, n: usize) -> Option<f64> {
        match self {
            Self::Cms { similarity_xi, .. } if *similarity_xi < 2.0 * self.modulus(n) => {
                Some(2.0 * (similarity_xi / (2.0 * self.modulus(n))).asin())
            }
            _ => None,
        }
    }

    /// Exact projection onto the nonconvex variant set.
    pub fn snap(&self, x: &CVec) -> CVec {
        let n = x.len();
        match self {
            Self::Papr { total_power, .. } => {
                let nrm = x.norm();
                if nrm == 0.0 {
                    y_update_papr(x, *total_power)
                } else {
                    x * Complex64::new(total_power.sqrt() / nrm, 0.0)
                }
            }
            Self::Cm { .. } => {
                let r = self.modulus(n);
                x.map(|c| Complex64::from_polar(r, if c == Complex64::default() { 0.0 } else { c.arg() }))
            }
            Self::Cms { reference, .. } => {
                let r = self.modulus(n);
                let ys = CVec::from_fn(n, |j, _| Complex64::from_polar(r, if x[j] == Complex64::default() { reference[j].arg() } else { x[j].arg() }));
                match self.similarity_arc(n) {
                    Some(half) => clamp_to_arc(&ys, reference, half),
                    None => ys,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// ADMM penalty `ρ`.
    pub rho: f64,
    /// Multiply `ρ` by the curvature scale of each surrogate (its largest
    /// eigenvalue, or `‖b‖/2‖x_t‖` when that is larger). Off means `ρ` is
    /// used as an absolute value.
    pub rho_relative: bool,
    /// Stop when the relative SINR increase of an outer step falls below this.
    pub mm_tol: f64,
    pub mm_max_iter: usize,
    /// Primal and modulus residual tolerance, relative to the entry modulus.
    pub admm_primal_tol: f64,
    /// Dual residual tolerance, relative to the entry modulus.
    pub admm_dual_tol: f64,
    pub admm_max_iter: usize,
    /// Residual tolerance of the final ADMM pass before the exact projection.
    pub polish_tol: f64,
    pub polish_max_iter: usize,
    pub inner: SolverOptions,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            rho_relative: true,
            mm_tol: 1e-3,
            mm_max_iter: 100,
            admm_primal_tol: 1e-4,
            admm_dual_tol: 1e-4,
            admm_max_iter: 300,
            polish_tol: 1e-9,
            polish_max_iter: 3000,
            inner: SolverOptions::default(),
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.rho, self.mm_tol, self.admm_primal_tol, self.admm_dual_tol, self.polish_tol];
        if pos.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("solver tolerances and rho must be positive".into()));
        }
        if self.mm_max_iter == 0 || self.admm_max_iter == 0 {
            return Err(Error::InvalidParameter("iteration limits must be >= 1".into()));
        }
        Ok(())
    }

    /// Penalty used by the ADMM run on `sur`.
    pub fn effective_rho(&self, sur: &SurrogateCoeffs) -> f64 {
        if !self.rho_relative {
            return self.rho;
        }
        let curvature = sur.d_matrix.symmetric_eigenvalues().max();
        let slope = sur.b_vector.norm() / (2.0 * sur.iterate.norm());
        let scale = curvature.max(slope);
        if scale.is_finite() && scale > 0.0 {
            self.rho * scale
        } else {
            self.rho
        }
    }
}

/// Communication constraints attached to a design run.
#[derive(Debug, Clone, Copy)]
pub enum CommConstraints<'a> {
    None,
    Ci(&'a CiConstraintSet),
    Zf(&'a ZfConstraintSet),
}

impl CommConstraints<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::None => "radar_only",
            Self::Ci(_) => "ci",
            Self::Zf(_) => "zf",
        }
    }

    pub fn add_to(&self, cs: &mut ConstraintSet) {
        match self {
            Self::None => {}
            Self::Ci(ci) => {
                for (row, &g) in ci.rows.iter().zip(&ci.thresholds) {
                    cs.halfspaces.push(Halfspace {
                        offset: row.slot * row.coeffs.len(),
                        coeffs: row.coeffs.clone(),
                        threshold: g,
                    });
                }
            }
            Self::Zf(zf) => {
                for (row, &t) in zf.rows.iter().zip(&zf.targets) {
                    cs.equalities.push(LinearEquality::new(row.slot * row.coeffs.len(), row.coeffs.clone(), t));
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub sinr_db: f64,
    pub admm_iterations: usize,
    pub admm_converged: bool,
}

/// Constraint audit of a design output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Smallest `Re{h̃ᵢᴴx} − γᵢ`, CI runs only.
    pub min_ci_margin: Option<f64>,
    /// Largest `|hᵢᴴx − targetᵢ|`, ZF runs only.
    pub max_zf_residual: Option<f64>,
    /// `max_j | |x_j| − √(P/n) |`.
    pub max_modulus_deviation: f64,
    pub total_power: f64,
    /// `max_j |x_j|²·n / P`.
    pub papr: f64,
    /// `max_j |x_j − x₀_j|`, CMS runs only.
    pub max_similarity_deviation: Option<f64>,
    /// Same quantities before the exact projection.
    pub pre_snap_max_modulus_deviation: f64,
    pub pre_snap_min_ci_margin: Option<f64>,
    /// True when the reported waveform is the projected one.
    pub snapped: bool,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignResult {
    pub variant: ConstraintVariant,
    /// `radar_only`, `ci` or `zf`.
    pub comm: String,
    #[serde(with = "cser::vec")]
    pub waveform: CVec,
    #[serde(with = "cser::vec")]
    pub filter: CVec,
    pub sinr_db: f64,
    /// SINR of the convex-feasible iterate before the exact projection.
    pub pre_snap_sinr_db: f64,
    /// Initial point followed by one entry per accepted outer step.
    pub trace: Vec<TraceEntry>,
    pub outer_iterations: usize,
    pub converged: bool,
    /// Maximin value of the initialization, CI runs only.
    pub init_maximin: Option<f64>,
    pub feasibility: FeasibilityReport,
}

impl DesignResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// CSV of the SINR trace.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("#schema:stap-slp.trace.v1\niteration,sinr_db,admm_iterations,admm_converged\n");
        for t in &self.trace {
            s.push_str(&format!("{},{:.9},{},{}\n", t.iteration, t.sinr_db, t.admm_iterations, t.admm_converged));
        }
        s
    }
}

/// `max(0, (|aᵢ| + bᵢ)/2)·e^{j∠aᵢ}`, with phase 0 where `aᵢ = 0`.
pub fn y_update_cm(a: &CVec, b: &DVector<f64>) -> Result<CVec> {
    if a.len() != b.len() {
        return Err(Error::dim("modulus target", a.len(), b.len()));
    }
    Ok(CVec::from_fn(a.len(), |i, _| {
        let t = (0.5 * (a[i].norm() + b[i])).max(0.0);
        let phase = if a[i] == Complex64::default() { 0.0 } else { a[i].arg() };
        Complex64::from_polar(t, phase)
    }))
}

/// Rotates each entry of `y` onto the arc of half-angle `half` around the
/// phase of `reference`, keeping its modulus.
pub fn clamp_to_arc(y: &CVec, reference: &CVec, half: f64) -> CVec {
    CVec::from_fn(y.len(), |j, _| {
        let p0 = reference[j].arg();
        let d = (y[j].arg() - p0 + PI).rem_euclid(2.0 * PI) - PI;
        Complex64::from_polar(y[j].norm(), p0 + d.clamp(-half, half))
    })
}

/// `√P·a/‖a‖`; a zero input maps to `√P·e₁`.
pub fn y_update_papr(a: &CVec, total_power: f64) -> CVec {
    let nrm = a.norm();
    if nrm == 0.0 {
        let mut y = CVec::zeros(a.len());
        if !y.is_empty() {
            y[0] = Complex64::new(total_power.sqrt(), 0.0);
        }
        return y;
    }
    a * Complex64::new(total_power.sqrt() / nrm, 0.0)
}

/// `λ + ρ(x − y)` and, when a modulus multiplier is carried,
/// `μ + ρ(|y| − r)`.
pub fn dual_update(lambda: &CVec, mu: Option<&DVector<f64>>, rho: f64, x: &CVec, y: &CVec, radius: f64) -> (CVec, Option<DVector<f64>>) {
    let lam = lambda + (x - y) * Complex64::new(rho, 0.0);
    let mu = mu.map(|m| DVector::from_fn(m.len(), |i, _| m[i] + rho * (y[i].norm() - radius)));
    (lam, mu)
}

fn max_modulus_error(x: &CVec, r: f64) -> f64 {
    x.iter().map(|c| (c.norm() - r).abs()).fold(0.0, f64::max)
}

fn max_abs(v: &CVec) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

struct AdmmOutcome {
    x: CVec,
    iterations: usize,
    converged: bool,
}

fn admm(
    sur: &SurrogateCoeffs,
    x0: &CVec,
    variant: &ConstraintVariant,
    cs: &ConstraintSet,
    cfg: &SolverConfig,
    tol: f64,
    max_iter: usize,
) -> Result<AdmmOutcome> {
    let n = x0.len();
    let r = variant.modulus(n);
    let rho = cfg.effective_rho(sur);
    let papr = matches!(variant, ConstraintVariant::Papr { .. });
    let arc = variant.similarity_arc(n);
    let mut x = x0.clone();
    let mut y = x0.clone();
    let mut lam = CVec::zeros(n);
    let mut mu = if papr { None } else { Some(DVector::zeros(n)) };
    let inv_rho = Complex64::new(1.0 / rho, 0.0);
    let mut sub = ConvexSubproblem {
        quad: sur.d_matrix.clone(),
        linear: sur.b_vector.clone(),
        prox_weight: rho,
        prox_center: y.clone(),
        constraints: cs.clone(),
    };
    for k in 1..=max_iter {
        sub.prox_center = &y - &lam * inv_rho;
        let rep = convex::solve(&sub, &cfg.inner, Some(&x))?;
        match rep.status {
            SolveStatus::Infeasible => return Err(Error::Infeasible("waveform subproblem has an empty feasible set".into())),
            SolveStatus::MaxIter if rep.primal_infeasibility > cfg.inner.feas_tol => {
                return Err(Error::Solver(format!("x-update stalled at infeasibility {:.3e}", rep.primal_infeasibility)))
            }
            _ => {}
        }
        x = rep.solution;
        let a = &x + &lam * inv_rho;
        let y_prev = std::mem::replace(
            &mut y,
            match &mu {
                Some(m) => {
                    let y = y_update_cm(&a, &DVector::from_fn(n, |i, _| r - m[i] / rho))?;
                    match (arc, variant) {
                        (Some(half), ConstraintVariant::Cms { reference, .. }) => clamp_to_arc(&y, reference, half),
                        _ => y,
                    }
                }
                None => y_update_papr(&a, variant.total_power()),
            },
        );
        let (l, m) = dual_update(&lam, mu.as_ref(), rho, &x, &y, r);
        lam = l;
        mu = m;
        let primal = max_abs(&(&x - &y));
        let modulus = if papr {
            (y.norm() - variant.total_power().sqrt()).abs()
        } else {
            y.iter().map(|c| (c.norm() - r).abs()).fold(0.0, f64::max)
        };
        // step of y, i.e. the dual residual divided by ρ
        let dual = max_abs(&(&y - &y_prev));
        if primal.max(modulus) <= tol * r && dual <= tol * r * (cfg.admm_dual_tol / cfg.admm_primal_tol) {
            return Ok(AdmmOutcome {
                x,
                iterations: k,
                converged: true,
            });
        }
    }
    Ok(AdmmOutcome {
        x,
        iterations: max_iter,
        converged: false,
    })
}

/// Maximin starting point: `max_x min_i (Re{h̃ᵢᴴx} − γᵢ)` over the convex
/// part of the variant set. Returns the point and its maximin value.
pub fn initialize_waveform(cset: &CiConstraintSet, variant: &ConstraintVariant, n: usize, opts: &SolverOptions) -> Result<(CVec, f64)> {
    variant.validate(n)?;
    let mut cs = variant.convex_part(n);
    CommConstraints::Ci(cset).add_to(&mut cs);
    let rep = convex::solve_maximin(&cs, n, opts)?;
    if rep.status == SolveStatus::Infeasible {
        return Err(Error::Infeasible("waveform constraint set is empty".into()));
    }
    Ok((rep.solution, rep.value))
}

/// Upper bound on the best worst-case margin of each `±` CI row pair over
/// the exact constant-modulus set (phases confined to the similarity arcs
/// for CMS), by weak duality over a convex weight of the two rows. Returns
/// the slot and value of the smallest bound, or `None` for PAPR. A negative
/// value proves that no waveform of the variant meets the CI constraints,
/// even when the convex relaxation does.
pub fn nonconvex_ci_bound(ci: &CiConstraintSet, variant: &ConstraintVariant, n: usize) -> Option<(usize, f64)> {
    let r = variant.modulus(n);
    let (half, reference) = match variant {
        ConstraintVariant::Papr { .. } => return None,
        ConstraintVariant::Cm { .. } => (PI, None),
        ConstraintVariant::Cms { reference, .. } => (variant.similarity_arc(n).unwrap_or(PI), Some(reference)),
    };
    // max of Re{w̄·r·e^{jφ}} over |φ − φ₀| ≤ half
    let sup = |w: Complex64, phi0: f64| {
        let d = ((w.arg() - phi0 + PI).rem_euclid(2.0 * PI) - PI).abs();
        r * w.norm() * if d <= half { 1.0 } else { (d - half).cos() }
    };
    let mut worst: Option<(usize, f64)> = None;
    for i in 0..ci.len() {
        let k = ci.partner(i);
        if k < i {
            continue;
        }
        let (a, b) = (&ci.rows[i], &ci.rows[k]);
        let off = a.slot * a.coeffs.len();
        let mut bound = f64::INFINITY;
        for step in 0..=40 {
            let th = step as f64 / 40.0;
            let s: f64 = (0..a.coeffs.len())
                .map(|t| {
                    let w = a.coeffs[t] * th + b.coeffs[t] * (1.0 - th);
                    sup(w, reference.map_or(0.0, |x0| x0[off + t].arg()))
                })
                .sum();
            bound = bound.min(s - th * ci.thresholds[i] - (1.0 - th) * ci.thresholds[k]);
        }
        if worst.is_none_or(|(_, v)| bound < v) {
            worst = Some((a.slot, bound));
        }
    }
    worst
}

/// Looks for a zero-forcing row whose target lies outside the set of values
/// `hᴴx_slot` reachable on the modulus arcs of the variant. Phase boxes are
/// split until each is separated from the target by a line or the box budget
/// runs out; only a completed proof counts. Returns the offending slot.
pub fn nonconvex_zf_screen(zf: &ZfConstraintSet, variant: &ConstraintVariant, n: usize) -> Option<usize> {
    let r = variant.modulus(n);
    let (half, reference) = match variant {
        ConstraintVariant::Papr { .. } => return None,
        ConstraintVariant::Cm { .. } => (PI, None),
        ConstraintVariant::Cms { reference, .. } => (variant.similarity_arc(n).unwrap_or(PI), Some(reference)),
    };
    zf.rows.iter().zip(&zf.targets).find_map(|(row, &target)| {
        let nt = row.coeffs.len();
        let phi0: Vec<f64> = (0..nt).map(|t| reference.map_or(0.0, |x0| x0[row.slot * nt + t].arg())).collect();
        unreachable_on_arcs(&row.coeffs, target, r, &phi0, half, 20_000).then_some(row.slot)
    })
}

fn unreachable_on_arcs(h: &CVec, target: Complex64, r: f64, phi0: &[f64], half: f64, budget: usize) -> bool {
    // smallest Re{ū·conj(h)·r·e^{jφ}} over φ ∈ [lo, hi]
    let low = |u: Complex64, h: Complex64, lo: f64, hi: f64| {
        let w = u.conj() * h.conj();
        let mid = 0.5 * (lo + hi);
        let d = ((w.arg() + mid).rem_euclid(2.0 * PI) - PI).abs();
        let rad = 0.5 * (hi - lo);
        -r * w.norm() * if d <= rad { 1.0 } else { (d - rad).cos() }
    };
    let mut boxes = vec![(phi0.iter().map(|p| p - half).collect::<Vec<_>>(), phi0.iter().map(|p| p + half).collect::<Vec<_>>())];
    let slack = 1e-12 * (r * h.norm() + target.norm());
    let mut used = 0;
    while let Some((lo, hi)) = boxes.pop() {
        used += 1;
        if used > budget {
            return false;
        }
        let mid: Complex64 = (0..h.len()).map(|t| h[t].conj() * Complex64::from_polar(r, 0.5 * (lo[t] + hi[t]))).sum();
        let gap = mid - target;
        let mut dirs = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)];
        if gap.norm() > 0.0 {
            dirs.push(gap / gap.norm());
        }
        let separated = dirs.iter().any(|&u| {
            let reach: f64 = (0..h.len()).map(|t| low(u, h[t], lo[t], hi[t])).sum();
            reach > (u.conj() * target).re + slack
        });
        if separated {
            continue;
        }
        let t = (0..lo.len()).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b]))).unwrap();
        if hi[t] - lo[t] < 1e-9 {
            // a box this small that cannot be separated holds a near-solution
            return false;
        }
        let m = 0.5 * (lo[t] + hi[t]);
        let (mut h1, mut l2) = (hi.clone(), lo.clone());
        h1[t] = m;
        l2[t] = m;
        boxes.push((lo, h1));
        boxes.push((l2, hi));
    }
    true
}

/// Constant-modulus point matched to the target steering: phases of `A₀ᴴ1`.
pub fn default_radar_init(ops: &OperatorSet, variant: &ConstraintVariant) -> CVec {
    let r = variant.modulus(ops.waveform_len());
    let ones = CVec::from_element(ops.filter_len(), Complex64::new(1.0, 0.0));
    ops.a0
        .adjoint(&ones)
        .map(|c| Complex64::from_polar(r, if c.norm() < 1e-12 { 0.0 } else { c.arg() }))
}

fn feasibility(variant: &ConstraintVariant, comm: CommConstraints, x: &CVec, pre: &CVec, snapped: bool, warning: Option<String>) -> FeasibilityReport {
    let n = x.len();
    let r = variant.modulus(n);
    let p = variant.total_power();
    let moddev = |v: &CVec| v.iter().map(|c| (c.norm() - r).abs()).fold(0.0, f64::max);
    let ci = |v: &CVec| match comm {
        CommConstraints::Ci(c) => Some(c.min_margin(v)),
        _ => None,
    };
    FeasibilityReport {
        min_ci_margin: ci(x),
        max_zf_residual: match comm {
            CommConstraints::Zf(z) => Some(z.max_residual(x)),
            _ => None,
        },
        max_modulus_deviation: moddev(x),
        total_power: x.norm_squared(),
        papr: x.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max) * n as f64 / p,
        max_similarity_deviation: match variant {
            ConstraintVariant::Cms { reference, .. } => Some((x - reference).iter().map(|c| c.norm()).fold(0.0, f64::max)),
            _ => None,
        },
        pre_snap_max_modulus_deviation: moddev(pre),
        pre_snap_min_ci_margin: ci(pre),
        snapped,
        warning,
    }
}

/// Full design pipeline. `init` overrides the starting point; it must lie
/// in the convex part of the constraint set.
pub fn design_with(
    variant: &ConstraintVariant,
    ops: &OperatorSet,
    target_power: f64,
    comm: CommConstraints,
    cfg: &SolverConfig,
    init: Option<&CVec>,
) -> Result<DesignResult> {
    let n = ops.waveform_len();
    variant.validate(n)?;
    cfg.validate()?;
    if !(target_power > 0.0) {
        return Err(Error::InvalidParameter(format!("target power must be positive, got {target_power}")));
    }
    let mut cs = variant.convex_part(n);
    comm.add_to(&mut cs);
    if let CommConstraints::Ci(ci) = comm {
        if let Some((slot, b)) = nonconvex_ci_bound(ci, variant, n) {
            if b < 0.0 {
                return Err(Error::Infeasible(format!(
                    "no {} waveform meets the CI constraints of slot {slot} (margin bound {b:.3e} < 0)",
                    variant.name()
                )));
            }
        }
    }
    if let CommConstraints::Zf(zf) = comm {
        if let Some(slot) = nonconvex_zf_screen(zf, variant, n) {
            return Err(Error::Infeasible(format!(
                "no {} waveform meets the zero-forcing equalities of slot {slot}",
                variant.name()
            )));
        }
    }

    let mut init_maximin = None;
    let mut x = match (init, comm) {
        (Some(x0), _) => {
            if x0.len() != n {
                return Err(Error::dim("initial waveform", n, x0.len()));
            }
            let v = cs.max_violation(x0);
            if v > 1e-6 * variant.modulus(n).max(1.0) {
                return Err(Error::InvalidParameter(format!("initial waveform violates the constraints by {v:.3e}")));
            }
            x0.clone()
        }
        (None, CommConstraints::Ci(ci)) => {
            let (x0, value) = initialize_waveform(ci, variant, n, &cfg.inner)?;
            init_maximin = Some(value);
            if !(value > 0.0) {
                return Err(Error::Infeasible(format!(
                    "communication constraints cannot be met: best worst-case margin {value:.3e} < 0"
                )));
            }
            x0
        }
        (None, _) => {
            let seed = default_radar_init(ops, variant);
            if cs.equalities.is_empty() {
                seed
            } else {
                // closest point of the affine-and-disk set to the seed
                let p = ConvexSubproblem {
                    quad: crate::CMat::zeros(n, n),
                    linear: CVec::zeros(n),
                    prox_weight: 1.0,
                    prox_center: seed,
                    constraints: cs.clone(),
                };
                let rep = convex::solve(&p, &cfg.inner, None)?;
                if rep.status == SolveStatus::Infeasible || rep.primal_infeasibility > cfg.inner.feas_tol {
                    return Err(Error::Infeasible("zero-forcing equalities are incompatible with the waveform constraints".into()));
                }
                rep.solution
            }
        }
    };

    // The MM bound only orders iterates that lie on the nonconvex set. A
    // relaxed starting point is first pulled onto it, and the trace and
    // the ascent test start from there.
    let on_set = |v: &CVec| variant.set_residual(v) <= 10.0 * cfg.admm_primal_tol * variant.modulus(n);
    let mut anchored = on_set(&x);
    let mut g = concentrated_objective(ops, &x)?;
    let mut trace = Vec::new();
    if anchored {
        trace.push(TraceEntry {
            iteration: 0,
            sinr_db: linear_to_db(target_power * g),
            admm_iterations: 0,
            admm_converged: true,
        });
    }
    let mut converged = false;
    let mut outer = 0;
    let mut last_sur = None;
    for it in 1..=cfg.mm_max_iter {
        outer = it;
        let sur = build_surrogate(ops, &x)?;
        let step = admm(&sur, &x, variant, &cs, cfg, cfg.admm_primal_tol, cfg.admm_max_iter)?;
        let g_new = concentrated_objective(ops, &step.x)?;
        last_sur = Some(sur);
        if anchored && g_new < g {
            // inexact inner solve lost ground; keep the previous iterate
            converged = true;
            break;
        }
        let rel = (g_new - g) / g;
        let was_anchored = anchored;
        anchored = anchored || on_set(&step.x);
        x = step.x;
        g = g_new;
        if anchored {
            trace.push(TraceEntry {
                iteration: it,
                sinr_db: linear_to_db(target_power * g),
                admm_iterations: step.iterations,
                admm_converged: step.converged,
            });
        }
        if was_anchored && rel < cfg.mm_tol {
            converged = true;
            break;
        }
    }

    // Tighten the splitting residual at the final surrogate so the exact
    // projection moves the waveform as little as possible.
    let sur = match last_sur {
        Some(s) if s.iterate == x => s,
        _ => build_surrogate(ops, &x)?,
    };
    let polished = admm(&sur, &x, variant, &cs, cfg, cfg.polish_tol, cfg.polish_max_iter)?;
    let pre = if concentrated_objective(ops, &polished.x)? >= g * (1.0 - 1e-3) {
        polished.x
    } else {
        x.clone()
    };
    let snapped = variant.snap(&pre);
    let mut warning = None;
    let snap_ok = match comm {
        CommConstraints::Ci(ci) => ci.min_margin(&snapped) >= -1e-6,
        CommConstraints::Zf(zf) => zf.max_residual(&snapped) <= 1e-6,
        CommConstraints::None => true,
    } && match variant {
        ConstraintVariant::Cms {
            similarity_xi, reference, ..
        } => (&snapped - reference).iter().all(|c| c.norm() <= similarity_xi + 1e-6),
        ConstraintVariant::Papr { papr_eps, total_power } => {
            snapped.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max) * n as f64 / total_power <= 1.0 + papr_eps + 1e-6
        }
        ConstraintVariant::Cm { .. } => true,
    };
    let (final_x, is_snapped) = if snap_ok {
        (snapped, true)
    } else {
        warning = Some("exact projection broke a constraint; reporting the convex-feasible waveform".into());
        (pre.clone(), false)
    };
    let g_final = concentrated_objective(ops, &final_x)?;
    let filter = mvdr_filter(ops, &final_x)?;
    Ok(DesignResult {
        variant: variant.clone(),
        comm: comm.name().into(),
        feasibility: feasibility(variant, comm, &final_x, &pre, is_snapped, warning),
        waveform: final_x,
        filter,
        sinr_db: linear_to_db(target_power * g_final),
        pre_snap_sinr_db: linear_to_db(target_power * concentrated_objective(ops, &pre)?),
        trace,
        outer_iterations: outer,
        converged,
        init_maximin,
    })
}

/// CI-constrained design.
pub fn design(variant: &ConstraintVariant, ops: &OperatorSet, target_power: f64, ci: &CiConstraintSet, cfg: &SolverConfig) -> Result<DesignResult> {
    design_with(variant, ops, target_power, CommConstraints::Ci(ci), cfg, None)
}

/// Zero-forcing baseline: the CI halfspaces are replaced by equalities.
pub fn design_zf_baseline(variant: &ConstraintVariant, ops: &OperatorSet, target_power: f64, zf: &ZfConstraintSet, cfg: &SolverConfig) -> Result<DesignResult> {
    design_with(variant, ops, target_power, CommConstraints::Zf(zf), cfg, None)
}

/// Radar-only baseline without communication constraints.
pub fn design_radar_only(variant: &ConstraintVariant, ops: &OperatorSet, target_power: f64, cfg: &SolverConfig) -> Result<DesignResult> {
    design_with(variant, ops, target_power, CommConstraints::None, cfg, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cm_update_examples() {
        let a = CVec::from_vec(vec![c(2.0, 0.0), Complex64::from_polar(2.0, std::f64::consts::FRAC_PI_4), c(1.0, 0.0), c(0.0, 0.0)]);
        let b = DVector::from_vec(vec![4.0, 0.0, -3.0, 2.0]);
        let y = y_update_cm(&a, &b).unwrap();
        assert!((y[0] - c(3.0, 0.0)).norm() < 1e-15);
        assert!((y[1] - Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)).norm() < 1e-15);
        assert_eq!(y[2], c(0.0, 0.0));
        assert_eq!(y[3], c(1.0, 0.0));
    }

    #[test]
    fn papr_update_projects_radially() {
        let a = CVec::from_vec(vec![c(3.0, 4.0), c(0.0, 0.0)]);
        let y = y_update_papr(&a, 2.0);
        assert!((y.norm_squared() - 2.0).abs() < 1e-12);
        let y2 = y_update_papr(&(&a * c(7.0, 0.0)), 2.0);
        assert!((&y - y2).norm() < 1e-12);
        let on = y_update_papr(&y, 2.0);
        assert!((&on - &y).norm() < 1e-12);
        let z = y_update_papr(&CVec::zeros(3), 4.0);
        assert_eq!(z[0], c(2.0, 0.0));
    }

    #[test]
    fn dual_update_examples() {
        let y = CVec::from_vec(vec![c(0.6, 0.8), c(-1.0, 0.0)]);
        let lam = CVec::from_vec(vec![c(0.1, 0.2), c(0.0, -0.3)]);
        let mu = DVector::from_vec(vec![0.5, -0.5]);
        let (l, m) = dual_update(&lam, Some(&mu), 2.0, &y, &y, 1.0);
        assert_eq!(l, lam);
        assert_eq!(m.unwrap(), mu);
        let x = &y + CVec::from_element(2, c(0.1, -0.1));
        let (l1, _) = dual_update(&lam, None, 2.0, &x, &y, 1.0);
        let (l2, _) = dual_update(&l1, None, 2.0, &x, &y, 1.0);
        assert!((l2 - (&lam + (&x - &y) * c(4.0, 0.0))).norm() < 1e-15);
    }

    #[test]
    fn cm_is_papr_with_zero_eps() {
        let n = 8;
        let cm = ConstraintVariant::Cm { total_power: 2.0 };
        let pa = ConstraintVariant::Papr {
            total_power: 2.0,
            papr_eps: 0.0,
        };
        assert_eq!(cm.disk_radius(n), pa.disk_radius(n));
        let x = CVec::from_fn(n, |i, _| Complex64::from_polar(0.3 + i as f64 * 0.01, i as f64));
        let s = cm.snap(&x);
        assert!(s.iter().all(|c| (c.norm() - cm.modulus(n)).abs() < 1e-15));
        assert!((s.norm_squared() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn variant_validation() {
        assert!(ConstraintVariant::Cm { total_power: 0.0 }.validate(4).is_err());
        assert!(ConstraintVariant::Papr {
            total_power: 1.0,
            papr_eps: -0.1
        }
        .validate(4)
        .is_err());
        let bad = ConstraintVariant::Cms {
            total_power: 4.0,
            similarity_xi: 0.5,
            reference: CVec::from_element(4, c(2.0, 0.0)),
        };
        assert!(bad.validate(4).is_err());
        let good = ConstraintVariant::Cms {
            total_power: 4.0,
            similarity_xi: 0.5,
            reference: CVec::from_element(4, c(0.0, 1.0)),
        };
        assert!(good.validate(4).is_ok());
    }

    #[test]
    fn arc_reachability_proofs() {
        let one = Complex64::new(1.0, 0.0);
        let h = CVec::from_vec(vec![one, one]);
        // two unit circles reach exactly the disk of radius 2
        assert!(unreachable_on_arcs(&h, Complex64::new(2.5, 0.0), 1.0, &[0.0, 0.0], PI, 1000));
        assert!(!unreachable_on_arcs(&h, Complex64::new(1.0, 0.3), 1.0, &[0.0, 0.0], PI, 1000));
        let h = CVec::from_vec(vec![one]);
        assert!(unreachable_on_arcs(&h, Complex64::from_polar(1.0, 0.5), 1.0, &[0.0], 0.1, 1000));
        assert!(!unreachable_on_arcs(&h, Complex64::from_polar(1.0, 0.05), 1.0, &[0.0], 0.1, 1000));
    }

    #[test]
    fn nonconvex_bound_separates_cm_from_cms() {
        use crate::comm::SlotRow;
        // Re{x} ≥ γ and Im{x} ≥ γ on the unit circle: met iff γ ≤ 1/√2,
        // and only for γ ≤ sin 30° once x stays within 30° of phase 0.
        let ci = |g: f64| CiConstraintSet {
            n_slots: 1,
            rows: vec![
                SlotRow {
                    slot: 0,
                    coeffs: CVec::from_element(1, c(1.0, 0.0)),
                },
                SlotRow {
                    slot: 0,
                    coeffs: CVec::from_element(1, c(0.0, 1.0)),
                },
            ],
            thresholds: vec![g, g],
        };
        let cm = ConstraintVariant::Cm { total_power: 1.0 };
        let cms = ConstraintVariant::Cms {
            total_power: 1.0,
            similarity_xi: 2.0 * (15f64).to_radians().sin(),
            reference: CVec::from_element(1, c(1.0, 0.0)),
        };
        let (_, b) = nonconvex_ci_bound(&ci(0.6), &cm, 1).unwrap();
        assert!((b - (0.5f64.sqrt() - 0.6)).abs() < 1e-12, "{b}");
        assert!(nonconvex_ci_bound(&ci(0.75), &cm, 1).unwrap().1 < 0.0);
        assert!(nonconvex_ci_bound(&ci(0.45), &cms, 1).unwrap().1 > 0.0);
        let (_, b) = nonconvex_ci_bound(&ci(0.6), &cms, 1).unwrap();
        assert!((b - (0.5 - 0.6)).abs() < 1e-12, "{b}");
        let papr = ConstraintVariant::Papr {
            total_power: 1.0,
            papr_eps: 1.0,
        };
        assert!(nonconvex_ci_bound(&ci(0.6), &papr, 1).is_none());
    }
}
