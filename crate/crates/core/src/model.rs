//! Array geometry, steering vectors and the linear operators of the signal
//! model.
//!
//! Layout conventions used throughout the crate:
//!
//! * waveform `x` (length `M·N·Nt`): pulse-major, then sample, then transmit
//!   antenna, i.e. `x[m·N·Nt + n·Nt + t] = X_m(t, n)`;
//! * space-time steering `u` (length `M·Nr·Nt`):
//!   `u[m·Nr·Nt + p·Nt + q] = d_m · b_p · a_q`;
//! * receive vector (length `M·N·Nr`): `y[m·N·Nr + p·N + n]`, the sample
//!   `n` of receive channel `p` during pulse `m`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{CMat, CVec, Error, Result};

/// Geometry and timing of the colocated transmit/receive ULAs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    /// Transmit element spacing in wavelengths.
    pub d_tx_over_lambda: f64,
    /// Receive element spacing in wavelengths.
    pub d_rx_over_lambda: f64,
    pub n_pulses: usize,
    /// Fast-time samples per pulse.
    pub n_samples: usize,
    pub prf_hz: f64,
    pub carrier_hz: f64,
}

impl ArrayConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_tx", self.n_tx),
            ("n_rx", self.n_rx),
            ("n_pulses", self.n_pulses),
            ("n_samples", self.n_samples),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be >= 1")));
            }
        }
        let positive = [
            ("d_tx_over_lambda", self.d_tx_over_lambda),
            ("d_rx_over_lambda", self.d_rx_over_lambda),
            ("prf_hz", self.prf_hz),
            ("carrier_hz", self.carrier_hz),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0")));
            }
        }
        Ok(())
    }

    /// `M·N·Nt`.
    pub fn waveform_len(&self) -> usize {
        self.n_pulses * self.n_samples * self.n_tx
    }

    /// `M·N·Nr`.
    pub fn filter_len(&self) -> usize {
        self.n_pulses * self.n_samples * self.n_rx
    }

    /// `M·Nr·Nt`.
    pub fn steering_len(&self) -> usize {
        self.n_pulses * self.n_rx * self.n_tx
    }

    /// Number of transmit time slots `M·N`.
    pub fn n_slots(&self) -> usize {
        self.n_pulses * self.n_samples
    }

    pub fn pri_s(&self) -> f64 {
        1.0 / self.prf_hz
    }

    pub fn wavelength_m(&self) -> f64 {
        299_792_458.0 / self.carrier_hz
    }

    /// Normalized spatial frequency `d_r·sinθ/λ`.
    pub fn spatial_frequency(&self, theta: f64) -> f64 {
        self.d_rx_over_lambda * theta.sin()
    }

    /// Inverse of [`Self::spatial_frequency`]; `None` outside the visible region.
    pub fn azimuth_for_spatial_frequency(&self, fs: f64) -> Option<f64> {
        let s = fs / self.d_rx_over_lambda;
        (s.abs() <= 1.0).then(|| s.asin())
    }
}

/// Target direction, normalized Doppler `f_d·T_r` and mean power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetModel {
    pub azimuth_rad: f64,
    pub normalized_doppler: f64,
    pub power: f64,
}

impl TargetModel {
    pub fn validate(&self) -> Result<()> {
        if self.normalized_doppler.abs() > 0.5 {
            return Err(Error::InvalidParameter(
                "normalized target Doppler must lie in [-0.5, 0.5]".into(),
            ));
        }
        if self.power < 0.0 {
            return Err(Error::InvalidParameter("target power must be >= 0".into()));
        }
        Ok(())
    }
}

fn phase_progression(len: usize, step: f64) -> CVec {
    CVec::from_fn(len, |k, _| Complex64::from_polar(1.0, step * k as f64))
}

/// Transmit steering vector `a(θ)`, element `k` is `exp(-j2π·k·(d_t/λ)·sinθ)`.
pub fn steering_tx(cfg: &ArrayConfig, theta: f64) -> CVec {
    let fs = cfg.spatial_frequency(theta);
    let ratio = cfg.d_tx_over_lambda / cfg.d_rx_over_lambda;
    phase_progression(cfg.n_tx, -2.0 * PI * fs * ratio)
}

/// Receive steering vector `b(θ)`, element `k` is `exp(-j2π·k·f_s)`.
pub fn steering_rx(cfg: &ArrayConfig, theta: f64) -> CVec {
    let fs = cfg.spatial_frequency(theta);
    phase_progression(cfg.n_rx, -2.0 * PI * fs)
}

/// Slow-time Doppler response `d(f)`, element `m` is `exp(j2π·m·f)`.
pub fn doppler_vec(cfg: &ArrayConfig, normalized_doppler: f64) -> CVec {
    phase_progression(cfg.n_pulses, 2.0 * PI * normalized_doppler)
}

/// Space-time steering vector `d(f) ⊗ b(θ) ⊗ a(θ)`.
pub fn st_steering(cfg: &ArrayConfig, normalized_doppler: f64, theta: f64) -> CVec {
    let d = doppler_vec(cfg, normalized_doppler);
    let b = steering_rx(cfg, theta);
    let a = steering_tx(cfg, theta);
    let (nr, nt) = (cfg.n_rx, cfg.n_tx);
    CVec::from_fn(cfg.steering_len(), |i, _| {
        let m = i / (nr * nt);
        let p = (i / nt) % nr;
        let q = i % nt;
        d[m] * b[p] * a[q]
    })
}

/// Range shift matrix: entry `(i, j)` is one iff `i - j + l = 0`.
///
/// Shifts with `|l| >= n` give the zero matrix.
pub fn shift_matrix(n: usize, l: isize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i as isize - j as isize + l == 0 {
            1.0
        } else {
            0.0
        }
    })
}

/// Permutation with `vec(X_mᵀ) = T·vec(X_m)` for `X_m` of size `n_tx × n`.
pub fn permutation_t(n_tx: usize, n: usize) -> DMatrix<f64> {
    let dim = n_tx * n;
    let mut t = DMatrix::zeros(dim, dim);
    for tx in 0..n_tx {
        for s in 0..n {
            t[(tx * n + s, s * n_tx + tx)] = 1.0;
        }
    }
    t
}

/// The map `x ↦ J̄_l·X̄·u` for a fixed space-time vector `u` and range shift `l`.
///
/// Applied implicitly; [`StOperator::to_dense`] exists for verification.
#[derive(Debug, Clone)]
pub struct StOperator {
    n_tx: usize,
    n_rx: usize,
    n_pulses: usize,
    n_samples: usize,
    shift: isize,
    u: CVec,
}

impl StOperator {
    pub fn new(cfg: &ArrayConfig, shift: isize, u: CVec) -> Result<Self> {
        if u.len() != cfg.steering_len() {
            return Err(Error::dim("space-time vector", cfg.steering_len(), u.len()));
        }
        Ok(Self {
            n_tx: cfg.n_tx,
            n_rx: cfg.n_rx,
            n_pulses: cfg.n_pulses,
            n_samples: cfg.n_samples,
            shift,
            u,
        })
    }

    pub fn shift(&self) -> isize {
        self.shift
    }

    pub fn factor(&self) -> &CVec {
        &self.u
    }

    pub fn input_len(&self) -> usize {
        self.n_pulses * self.n_samples * self.n_tx
    }

    pub fn output_len(&self) -> usize {
        self.n_pulses * self.n_samples * self.n_rx
    }

    pub fn apply(&self, x: &CVec) -> CVec {
        assert_eq!(x.len(), self.input_len(), "operator input length");
        let (nt, nr, n) = (self.n_tx, self.n_rx, self.n_samples);
        let mut out = CVec::zeros(self.output_len());
        for m in 0..self.n_pulses {
            let xm = &x.as_slice()[m * n * nt..(m + 1) * n * nt];
            let um = &self.u.as_slice()[m * nr * nt..(m + 1) * nr * nt];
            for p in 0..nr {
                let up = &um[p * nt..(p + 1) * nt];
                let base = m * n * nr + p * n;
                for s in 0..n {
                    let dst = s as isize + self.shift;
                    if dst < 0 || dst >= n as isize {
                        continue;
                    }
                    let xs = &xm[s * nt..(s + 1) * nt];
                    let v: Complex64 = xs.iter().zip(up).map(|(a, b)| a * b).sum();
                    out[base + dst as usize] = v;
                }
            }
        }
        out
    }

    pub fn adjoint(&self, y: &CVec) -> CVec {
        assert_eq!(y.len(), self.output_len(), "operator adjoint length");
        let (nt, nr, n) = (self.n_tx, self.n_rx, self.n_samples);
        let mut out = CVec::zeros(self.input_len());
        for m in 0..self.n_pulses {
            let um = &self.u.as_slice()[m * nr * nt..(m + 1) * nr * nt];
            for p in 0..nr {
                let up = &um[p * nt..(p + 1) * nt];
                let base = m * n * nr + p * n;
                for s in 0..n {
                    let src = s as isize + self.shift;
                    if src < 0 || src >= n as isize {
                        continue;
                    }
                    let ys = y[base + src as usize];
                    let dst = &mut out.as_mut_slice()[m * n * nt + s * nt..m * n * nt + (s + 1) * nt];
                    for (o, uq) in dst.iter_mut().zip(up) {
                        *o += uq.conj() * ys;
                    }
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> CMat {
        let cols = self.input_len();
        let mut a = CMat::zeros(self.output_len(), cols);
        let mut e = CVec::zeros(cols);
        for j in 0..cols {
            e[j] = Complex64::new(1.0, 0.0);
            a.set_column(j, &self.apply(&e));
            e[j] = Complex64::new(0.0, 0.0);
        }
        a
    }
}

/// Target operator `A₀` with `A₀·x = X̄·u₀`.
pub fn build_target_operator(cfg: &ArrayConfig, u0: CVec) -> Result<StOperator> {
    StOperator::new(cfg, 0, u0)
}

/// Clutter operator `A_{l,r}` with `A_{l,r}·x = J̄_l·X̄·u_{l,r}`.
pub fn build_clutter_operator(cfg: &ArrayConfig, l: isize, u_lr: CVec) -> Result<StOperator> {
    StOperator::new(cfg, l, u_lr)
}

/// Target operator, clutter factor operators and receiver noise power.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub a0: StOperator,
    pub clutter: Vec<StOperator>,
    pub noise_power: f64,
}

impl OperatorSet {
    pub fn waveform_len(&self) -> usize {
        self.a0.input_len()
    }

    pub fn filter_len(&self) -> usize {
        self.a0.output_len()
    }

    /// `Σ_{l,r} (A_{l,r}x)(A_{l,r}x)ᴴ`.
    pub fn clutter_covariance(&self, x: &CVec) -> CMat {
        let dim = self.filter_len();
        let mut r = CMat::zeros(dim, dim);
        for op in &self.clutter {
            let s = op.apply(x);
            r.ger(Complex64::new(1.0, 0.0), &s, &s.conjugate(), Complex64::new(1.0, 0.0));
        }
        r
    }

    /// Clutter covariance plus `σ_r²·I`.
    pub fn interference_covariance(&self, x: &CVec) -> CMat {
        let mut w = self.clutter_covariance(x);
        for i in 0..w.nrows() {
            w[(i, i)] += self.noise_power;
        }
        w
    }
}
