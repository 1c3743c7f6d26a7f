//! Multi-user downlink: Rayleigh channels, PSK symbol blocks and the
//! constructive-interference (CI) and zero-forcing (ZF) constraint sets.
//!
//! Time slot `j = m·N + n` (pulse `m`, sample `n`) owns the waveform block
//! `x[j·Nt .. (j+1)·Nt]`, the vector fed to the transmit antennas at that
//! instant.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::ArrayConfig;
use crate::{cser, CVec, Error, Result};

/// I.i.d. `CN(0, 1)` channel vectors, one per user.
pub fn generate_channels(n_tx: usize, n_users: usize, seed: u64) -> Vec<CVec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..n_users)
        .map(|_| {
            CVec::from_fn(n_tx, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(s * re, s * im)
            })
        })
        .collect()
}

/// PSK constellation point `exp(j(2πq/Ω + π/Ω))`.
pub fn psk_symbol(q: usize, order: usize) -> Complex64 {
    let o = order as f64;
    Complex64::from_polar(1.0, 2.0 * PI * q as f64 / o + PI / o)
}

/// Nearest constellation index to a received sample.
pub fn psk_decide(r: Complex64, order: usize) -> usize {
    let o = order as f64;
    let k = ((r.arg() - PI / o) * o / (2.0 * PI)).round() as i64;
    k.rem_euclid(order as i64) as usize
}

/// Symbol indices for every user and slot; `indices[k·n_slots + j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolBlock {
    pub psk_order: usize,
    pub n_users: usize,
    pub n_slots: usize,
    pub indices: Vec<usize>,
}

impl SymbolBlock {
    pub fn index(&self, user: usize, slot: usize) -> usize {
        self.indices[user * self.n_slots + slot]
    }

    pub fn symbol(&self, user: usize, slot: usize) -> Complex64 {
        psk_symbol(self.index(user, slot), self.psk_order)
    }
}

/// Uniform random `Ω`-PSK symbols for `K_u` users over `M·N` slots.
pub fn generate_symbols(
    n_users: usize,
    n_pulses: usize,
    n_samples: usize,
    psk_order: usize,
    seed: u64,
) -> Result<SymbolBlock> {
    if psk_order < 2 || !psk_order.is_power_of_two() {
        return Err(Error::InvalidParameter(
            "PSK order must be a power of two >= 2".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_slots = n_pulses * n_samples;
    let indices = (0..n_users * n_slots)
        .map(|_| rng.random_range(0..psk_order))
        .collect();
    Ok(SymbolBlock {
        psk_order,
        n_users,
        n_slots,
        indices,
    })
}

/// Everything the communication side contributes to a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommSetup {
    #[serde(with = "cser::vecs")]
    pub channels: Vec<CVec>,
    pub symbols: SymbolBlock,
    /// Receiver noise power `σ²` (linear).
    pub noise_power: f64,
    /// Per-user QoS `Γ_k` (linear).
    pub qos: Vec<f64>,
    pub channel_seed: u64,
    pub symbol_seed: u64,
}

impl CommSetup {
    pub fn n_users(&self) -> usize {
        self.channels.len()
    }

    pub fn psk_order(&self) -> usize {
        self.symbols.psk_order
    }

    /// Half-width `Φ = π/Ω` of a decision sector.
    pub fn half_sector(&self) -> f64 {
        PI / self.symbols.psk_order as f64
    }

    /// Amplitude `σ√Γ_k` of the interference-free received point.
    pub fn amplitude(&self, user: usize) -> f64 {
        (self.noise_power * self.qos[user]).sqrt()
    }

    pub fn validate(&self, cfg: &ArrayConfig) -> Result<()> {
        let k = self.channels.len();
        if self.qos.len() != k || self.symbols.n_users != k {
            return Err(Error::InvalidParameter(
                "channels, symbols and QoS disagree on the number of users".into(),
            ));
        }
        if self.symbols.n_slots != cfg.n_slots() {
            return Err(Error::dim("symbol slots", cfg.n_slots(), self.symbols.n_slots));
        }
        for h in &self.channels {
            if h.len() != cfg.n_tx {
                return Err(Error::dim("channel", cfg.n_tx, h.len()));
            }
            if h.norm() == 0.0 {
                return Err(Error::InvalidParameter("zero channel vector".into()));
            }
        }
        if self.qos.iter().any(|&g| !(g >= 0.0)) {
            return Err(Error::InvalidParameter("QoS must be >= 0".into()));
        }
        if !(self.noise_power > 0.0) {
            return Err(Error::InvalidParameter("communication noise power must be > 0".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// A real affine form `Re{cᴴ·x_slot}` on one slot of the waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRow {
    pub slot: usize,
    pub coeffs: CVec,
}

impl SlotRow {
    pub fn eval(&self, x: &CVec) -> Complex64 {
        let nt = self.coeffs.len();
        let xs = x.rows(self.slot * nt, nt);
        self.coeffs.dotc(&xs)
    }

    /// The row embedded in a full-length vector `h̃`.
    pub fn dense(&self, len: usize) -> CVec {
        let nt = self.coeffs.len();
        let mut v = CVec::zeros(len);
        v.rows_mut(self.slot * nt, nt).copy_from(&self.coeffs);
        v
    }
}

/// `Re{h̃ᵢᴴx} ≥ γᵢ`, `i = 0 .. 2·K_u·M·N`.
///
/// Row order: user-major, then the `+`/`−` member of the pair, then slot,
/// so row `2k·MN + j` and row `(2k+1)·MN + j` bound the same user and slot.
#[derive(Debug, Clone, PartialEq)]
pub struct CiConstraintSet {
    pub n_slots: usize,
    pub rows: Vec<SlotRow>,
    pub thresholds: Vec<f64>,
}

impl CiConstraintSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Index of the row sharing slot and user with row `i`.
    pub fn partner(&self, i: usize) -> usize {
        let block = i / self.n_slots;
        let j = i % self.n_slots;
        (block ^ 1) * self.n_slots + j
    }

    /// `Re{h̃ᵢᴴx} − γᵢ` for every row.
    pub fn margins(&self, x: &CVec) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.thresholds)
            .map(|(r, g)| r.eval(x).re - g)
            .collect()
    }

    pub fn min_margin(&self, x: &CVec) -> f64 {
        self.margins(x).into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_threshold(&self) -> f64 {
        self.thresholds.iter().cloned().fold(0.0, f64::max)
    }
}

/// Builds the CI rows for every user and slot.
pub fn build_ci_constraints(setup: &CommSetup, cfg: &ArrayConfig) -> Result<CiConstraintSet> {
    setup.validate(cfg)?;
    let n_slots = cfg.n_slots();
    let phi = setup.half_sector();
    // c = h·e^{j∠s}·conj(sinΦ ∓ j·cosΦ), so that cᴴx = hᴴx·e^{-j∠s}·(sinΦ ∓ j·cosΦ)
    let factors = [
        Complex64::new(phi.sin(), -phi.cos()).conj(),
        Complex64::new(phi.sin(), phi.cos()).conj(),
    ];
    let mut rows = Vec::with_capacity(2 * setup.n_users() * n_slots);
    let mut thresholds = Vec::with_capacity(rows.capacity());
    for (k, h) in setup.channels.iter().enumerate() {
        let gamma = setup.amplitude(k) * phi.sin();
        for f in factors {
            for j in 0..n_slots {
                let rot = Complex64::from_polar(1.0, setup.symbols.symbol(k, j).arg());
                rows.push(SlotRow {
                    slot: j,
                    coeffs: h * (rot * f),
                });
                thresholds.push(gamma);
            }
        }
    }
    Ok(CiConstraintSet {
        n_slots,
        rows,
        thresholds,
    })
}

/// `hᵢᴴ·x_slot = targetᵢ` for every user and slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ZfConstraintSet {
    pub rows: Vec<SlotRow>,
    pub targets: Vec<Complex64>,
}

impl ZfConstraintSet {
    /// Largest `|hᵢᴴx_slot − targetᵢ|`.
    pub fn max_residual(&self, x: &CVec) -> f64 {
        self.rows
            .iter()
            .zip(&self.targets)
            .map(|(r, t)| (r.eval(x) - t).norm())
            .fold(0.0, f64::max)
    }
}

/// Builds the zero-forcing equalities `h_kᴴx_{m,n} = σ√Γ_k·s_{m,n,k}`.
pub fn build_zf_constraints(setup: &CommSetup, cfg: &ArrayConfig) -> Result<ZfConstraintSet> {
    setup.validate(cfg)?;
    if setup.n_users() > cfg.n_tx {
        return Err(Error::InvalidParameter(format!(
            "zero forcing needs n_users <= n_tx ({} > {})",
            setup.n_users(),
            cfg.n_tx
        )));
    }
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for (k, h) in setup.channels.iter().enumerate() {
        for j in 0..cfg.n_slots() {
            rows.push(SlotRow {
                slot: j,
                coeffs: h.clone(),
            });
            targets.push(setup.symbols.symbol(k, j) * setup.amplitude(k));
        }
    }
    Ok(ZfConstraintSet { rows, targets })
}

/// Monte Carlo symbol error rate of one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerReport {
    pub user: usize,
    pub trials: u64,
    pub errors: u64,
    pub rate: f64,
    /// Normal-approximation 95% half-width.
    pub ci95: f64,
}

/// Sends every slot `n_trials` times through AWGN of power `σ²` and counts
/// nearest-sector decision errors.
pub fn estimate_ser(setup: &CommSetup, x: &CVec, n_trials: usize, seed: u64) -> Result<Vec<SerReport>> {
    if n_trials == 0 {
        return Err(Error::InvalidParameter("n_trials must be >= 1".into()));
    }
    let n_slots = setup.symbols.n_slots;
    let nt = setup.channels.first().map_or(0, |h| h.len());
    if x.len() != n_slots * nt {
        return Err(Error::dim("waveform", n_slots * nt, x.len()));
    }
    let sigma = (setup.noise_power / 2.0).sqrt();
    let order = setup.psk_order();
    Ok((0..setup.n_users())
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64 + 1);
            let h = &setup.channels[k];
            let mut errors = 0u64;
            for j in 0..n_slots {
                let clean = h.dotc(&x.rows(j * nt, nt));
                let want = setup.symbols.index(k, j);
                for _ in 0..n_trials {
                    let nr: f64 = rng.sample(StandardNormal);
                    let ni: f64 = rng.sample(StandardNormal);
                    let r = clean + Complex64::new(sigma * nr, sigma * ni);
                    if psk_decide(r, order) != want {
                        errors += 1;
                    }
                }
            }
            let trials = (n_trials * n_slots) as u64;
            let rate = errors as f64 / trials as f64;
            SerReport {
                user: k,
                trials,
                errors,
                rate,
                ci95: 1.96 * (rate * (1.0 - rate) / trials as f64).sqrt(),
            }
        })
        .collect())
}

/// SER reports as CSV (`user,trials,errors,rate,ci95`).
pub fn ser_csv(reports: &[SerReport]) -> String {
    let mut s = String::from("#schema:stap-slp.ser.v1\nuser,trials,errors,rate,ci95\n");
    for r in reports {
        s.push_str(&format!("{},{},{},{:.6e},{:.6e}\n", r.user, r.trials, r.errors, r.rate, r.ci95));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(nt: usize, m: usize, n: usize) -> ArrayConfig {
        ArrayConfig {
            n_tx: nt,
            n_rx: 2,
            d_tx_over_lambda: 2.0,
            d_rx_over_lambda: 0.5,
            n_pulses: m,
            n_samples: n,
            prf_hz: 1000.0,
            carrier_hz: 2.4e9,
        }
    }

    fn single_user(nt: usize, q: usize, gamma: f64) -> CommSetup {
        let mut h = CVec::zeros(nt);
        h[0] = Complex64::new(1.0, 0.0);
        CommSetup {
            channels: vec![h],
            symbols: SymbolBlock {
                psk_order: 4,
                n_users: 1,
                n_slots: 1,
                indices: vec![q],
            },
            noise_power: 0.01,
            qos: vec![gamma],
            channel_seed: 0,
            symbol_seed: 0,
        }
    }

    #[test]
    fn channels_seeded_and_unit_variance() {
        assert_eq!(generate_channels(4, 3, 5), generate_channels(4, 3, 5));
        let h = generate_channels(100_000, 1, 17).remove(0);
        let n = h.len() as f64;
        let var: f64 = h.iter().map(|c| c.norm_sqr()).sum::<f64>() / n;
        let var_re: f64 = h.iter().map(|c| c.re * c.re).sum::<f64>() / n;
        assert!((var - 1.0).abs() < 0.02, "{var}");
        assert!((var_re - 0.5).abs() < 0.01, "{var_re}");
    }

    #[test]
    fn qpsk_contains_diagonal_point() {
        let s = psk_symbol(0, 4);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s - Complex64::new(r, r)).norm() < 1e-15);
        let b = generate_symbols(3, 2, 4, 8, 1).unwrap();
        assert_eq!(b, generate_symbols(3, 2, 4, 8, 1).unwrap());
        for k in 0..3 {
            for j in 0..8 {
                assert!((b.symbol(k, j).norm() - 1.0).abs() < 1e-15);
                assert_eq!(psk_decide(b.symbol(k, j), 8), b.index(k, j));
            }
        }
        assert!(generate_symbols(1, 1, 1, 3, 0).is_err());
        assert!(generate_symbols(1, 1, 1, 1, 0).is_err());
    }

    #[test]
    fn point_a_has_zero_margin_and_scaling_adds_margin() {
        let c = cfg(3, 1, 1);
        let g = 3.0;
        let setup = single_user(3, 0, g);
        let set = build_ci_constraints(&setup, &c).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.partner(0), 1);
        let s = setup.symbols.symbol(0, 0);
        let amp = setup.amplitude(0);
        let mut x = CVec::zeros(3);
        x[0] = s * amp;
        for m in set.margins(&x) {
            assert!(m.abs() < 1e-14);
        }
        let t = 1.7;
        x[0] = s * amp * t;
        let phi = PI / 4.0;
        for m in set.margins(&x) {
            assert!((m - (t - 1.0) * amp * phi.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn outside_sector_violates_a_row() {
        let c = cfg(2, 1, 1);
        let setup = single_user(2, 1, 1.0);
        let set = build_ci_constraints(&setup, &c).unwrap();
        let s = setup.symbols.symbol(0, 0);
        let phi = PI / 4.0;
        // a far point rotated by angle a off the symbol direction
        for i in 0..=360 {
            let a = (i as f64 - 180.0).to_radians();
            let mut x = CVec::zeros(2);
            x[0] = s * Complex64::from_polar(10.0, a);
            let inside = a.abs() < phi - 1e-9;
            let worst = set.min_margin(&x);
            if a.abs() > phi + 1e-9 {
                assert!(worst < 0.0, "angle {a}");
            } else if inside {
                assert!(worst > 0.0, "angle {a}");
            }
        }
    }

    #[test]
    fn zero_waveform_margins() {
        let c = cfg(2, 2, 2);
        let setup = CommSetup {
            channels: generate_channels(2, 2, 3),
            symbols: generate_symbols(2, 2, 2, 4, 3).unwrap(),
            noise_power: 0.01,
            qos: vec![3.0, 5.0],
            channel_seed: 3,
            symbol_seed: 3,
        };
        let set = build_ci_constraints(&setup, &c).unwrap();
        assert_eq!(set.len(), 2 * 2 * 4);
        for (m, g) in set.margins(&CVec::zeros(8)).iter().zip(&set.thresholds) {
            assert_eq!(*m, -g);
        }
    }

    #[test]
    fn zf_rejects_too_many_users_and_hits_point_a() {
        let c = cfg(2, 1, 1);
        let mut setup = single_user(2, 2, 2.0);
        let zf = build_zf_constraints(&setup, &c).unwrap();
        let mut x = CVec::zeros(2);
        x[0] = setup.symbols.symbol(0, 0) * setup.amplitude(0);
        x[1] = Complex64::new(0.3, -4.0);
        assert!(zf.max_residual(&x) < 1e-14);
        let ci = build_ci_constraints(&setup, &c).unwrap();
        assert!(ci.margins(&x).iter().all(|m| m.abs() < 1e-12));

        setup.channels = generate_channels(2, 3, 0);
        setup.qos = vec![1.0; 3];
        setup.symbols = generate_symbols(3, 1, 1, 4, 0).unwrap();
        assert!(build_zf_constraints(&setup, &c).is_err());
    }

    #[test]
    fn ser_noise_free_is_zero() {
        let c = cfg(2, 1, 1);
        let mut setup = single_user(2, 3, 10.0);
        let mut x = CVec::zeros(2);
        x[0] = setup.symbols.symbol(0, 0) * setup.amplitude(0);
        assert!(build_ci_constraints(&setup, &c).unwrap().min_margin(&x) > -1e-12);
        setup.noise_power = 1e-12;
        let r = estimate_ser(&setup, &x, 100, 1).unwrap();
        assert_eq!(r[0].errors, 0);
    }

    #[test]
    fn ser_csv_shape() {
        let r = vec![SerReport {
            user: 0,
            trials: 10,
            errors: 1,
            rate: 0.1,
            ci95: 0.2,
        }];
        let s = ser_csv(&r);
        assert_eq!(s.lines().count(), 3);
        assert!(s.lines().nth(1).unwrap().starts_with("user,trials"));
    }
}
