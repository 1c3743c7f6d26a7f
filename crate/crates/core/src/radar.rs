//! Radar-side figures of merit: MVDR filter, output SINR, the concentrated
//! objective and the space-time cross-ambiguity function.

use nalgebra::Cholesky;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{build_target_operator, st_steering, ArrayConfig, OperatorSet};
use crate::{linear_to_db, CVec, Error, Result};

/// Cholesky factor of `W(x) = Σ (A_{l,r}x)(A_{l,r}x)ᴴ + σ_r²I` together with
/// the target return `s = A₀x`.
pub struct Interference {
    chol: Cholesky<Complex64, nalgebra::Dyn>,
    /// `A₀x`
    pub target_return: CVec,
}

impl Interference {
    pub fn new(ops: &OperatorSet, x: &CVec) -> Result<Self> {
        if x.len() != ops.waveform_len() {
            return Err(Error::dim("waveform", ops.waveform_len(), x.len()));
        }
        if !(ops.noise_power > 0.0) {
            return Err(Error::SingularCovariance);
        }
        let w = ops.interference_covariance(x);
        let chol = Cholesky::new(w).ok_or(Error::SingularCovariance)?;
        Ok(Self {
            chol,
            target_return: ops.a0.apply(x),
        })
    }

    /// `W⁻¹·v`
    pub fn solve(&self, v: &CVec) -> CVec {
        self.chol.solve(v)
    }

    /// `W⁻¹A₀x`
    pub fn whitened_target(&self) -> CVec {
        self.solve(&self.target_return)
    }
}

/// `W⁻¹A₀x / (xᴴA₀ᴴW⁻¹A₀x)`.
pub fn mvdr_filter(ops: &OperatorSet, x: &CVec) -> Result<CVec> {
    let inf = Interference::new(ops, x)?;
    let q = inf.whitened_target();
    let denom = inf.target_return.dotc(&q).re;
    if !(denom > 0.0) {
        return Err(Error::InvalidParameter("waveform produces no target return".into()));
    }
    Ok(q / Complex64::new(denom, 0.0))
}

/// Radar output SINR (linear) of waveform `x` and filter `w`.
pub fn output_sinr(ops: &OperatorSet, target_power: f64, x: &CVec, w: &CVec) -> Result<f64> {
    if w.len() != ops.filter_len() {
        return Err(Error::dim("filter", ops.filter_len(), w.len()));
    }
    if x.len() != ops.waveform_len() {
        return Err(Error::dim("waveform", ops.waveform_len(), x.len()));
    }
    if w.norm() == 0.0 {
        return Err(Error::ZeroFilter);
    }
    let signal = w.dotc(&ops.a0.apply(x)).norm_sqr();
    let mut noise = ops.noise_power * w.norm_squared();
    for op in &ops.clutter {
        noise += w.dotc(&op.apply(x)).norm_sqr();
    }
    if !(noise > 0.0) {
        return Err(Error::SingularCovariance);
    }
    Ok(target_power * signal / noise)
}

/// `g(x) = xᴴA₀ᴴW(x)⁻¹A₀x`; the SINR of the MVDR filter is `σ₀²·g(x)`.
pub fn concentrated_objective(ops: &OperatorSet, x: &CVec) -> Result<f64> {
    let inf = Interference::new(ops, x)?;
    Ok(inf.target_return.dotc(&inf.whitened_target()).re)
}

/// SINR of the MVDR filter in dB.
pub fn mvdr_sinr_db(ops: &OperatorSet, target_power: f64, x: &CVec) -> Result<f64> {
    Ok(linear_to_db(target_power * concentrated_objective(ops, x)?))
}

/// Rectangular grid over normalized Doppler and normalized spatial frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityGrid {
    pub doppler: Vec<f64>,
    pub spatial: Vec<f64>,
}

impl AmbiguityGrid {
    /// `n_doppler × n_spatial` points evenly covering `[lo, hi]²`.
    pub fn uniform(n_doppler: usize, n_spatial: usize, lo: f64, hi: f64) -> Self {
        let lin = |n: usize| -> Vec<f64> {
            if n == 1 {
                return vec![0.5 * (lo + hi)];
            }
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        };
        Self {
            doppler: lin(n_doppler),
            spatial: lin(n_spatial),
        }
    }

    pub fn len(&self) -> usize {
        self.doppler.len() * self.spatial.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for AmbiguityGrid {
    fn default() -> Self {
        Self::uniform(101, 101, -0.5, 0.5)
    }
}

/// `|wᴴX̄u(f_d, θ)|²` sampled on a grid; row-major in Doppler.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityMap {
    pub grid: AmbiguityGrid,
    pub values: Vec<f64>,
}

impl AmbiguityMap {
    pub fn value(&self, i_doppler: usize, i_spatial: usize) -> f64 {
        self.values[i_doppler * self.grid.spatial.len() + i_spatial]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// CSV with columns `norm_doppler,norm_spatial_freq,value_db`, values in
    /// dB relative to `reference` (linear).
    pub fn to_csv(&self, reference: f64) -> String {
        let mut s = String::from("#schema:stap-slp.ambiguity.v1\nnorm_doppler,norm_spatial_freq,value_db\n");
        for (i, fd) in self.grid.doppler.iter().enumerate() {
            for (k, fs) in self.grid.spatial.iter().enumerate() {
                let v = self.value(i, k) / reference;
                s.push_str(&format!("{fd:.6},{fs:.6},{:.6}\n", linear_to_db(v.max(1e-300))));
            }
        }
        s
    }
}

/// Evaluates the space-time cross-ambiguity function of `(x, w)`.
pub fn cross_ambiguity(cfg: &ArrayConfig, x: &CVec, w: &CVec, grid: &AmbiguityGrid) -> Result<AmbiguityMap> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty ambiguity grid".into()));
    }
    if x.len() != cfg.waveform_len() {
        return Err(Error::dim("waveform", cfg.waveform_len(), x.len()));
    }
    if w.len() != cfg.filter_len() {
        return Err(Error::dim("filter", cfg.filter_len(), w.len()));
    }
    let points: Vec<(f64, f64)> = grid
        .doppler
        .iter()
        .flat_map(|&fd| grid.spatial.iter().map(move |&fs| (fd, fs)))
        .collect();
    let values = points
        .par_iter()
        .map(|&(fd, fs)| {
            let theta = cfg
                .azimuth_for_spatial_frequency(fs)
                .ok_or_else(|| Error::InvalidParameter(format!("spatial frequency {fs} not visible")))?;
            let op = build_target_operator(cfg, st_steering(cfg, fd, theta))?;
            Ok(w.dotc(&op.apply(x)).norm_sqr())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(AmbiguityMap {
        grid: grid.clone(),
        values,
    })
}
