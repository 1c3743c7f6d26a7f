//! Clutter scenes, inner clutter covariance matrices and their rank factors.

use std::f64::consts::PI;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{build_clutter_operator, st_steering, ArrayConfig, OperatorSet, StOperator};
use crate::{CMat, CVec, Error, Result};

/// Default relative eigenvalue cut-off for [`rank_factorize`].
pub const DEFAULT_RANK_THRESHOLD: f64 = 1e-10;

/// How clutter patch Dopplers relate to their azimuths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DopplerModel {
    /// All patches at zero Doppler.
    Stationary,
    /// `f = slope · f_s(θ)`: the usual side-looking clutter ridge.
    Ridge { slope: f64 },
    /// Independent uniform Dopplers in `[-0.5, 0.5)`.
    Uniform,
}

impl Default for DopplerModel {
    fn default() -> Self {
        DopplerModel::Ridge { slope: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AzimuthMode {
    /// Evenly spaced over `[-π/2, π/2)`.
    #[default]
    Grid,
    /// Uniform random over `[-π/2, π/2)`.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub azimuth_rad: f64,
    pub normalized_doppler: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClutterCell {
    pub index: isize,
    pub patches: Vec<Patch>,
}

/// `2L+1` range cells of `N_c` patches each, with common patch power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClutterScene {
    pub half_width_cells: usize,
    pub patches_per_cell: usize,
    pub patch_power: f64,
    pub azimuth_mode: AzimuthMode,
    pub doppler_model: DopplerModel,
    pub rng_seed: u64,
    pub cells: Vec<ClutterCell>,
}

impl ClutterScene {
    pub fn cell(&self, l: isize) -> Option<&ClutterCell> {
        self.cells.iter().find(|c| c.index == l)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Draws (or lays out) a clutter scene. Reproducible for a given seed.
pub fn generate_scene(
    cfg: &ArrayConfig,
    half_width_cells: usize,
    patches_per_cell: usize,
    patch_power: f64,
    azimuth_mode: AzimuthMode,
    doppler_model: DopplerModel,
    seed: u64,
) -> Result<ClutterScene> {
    if patches_per_cell == 0 {
        return Err(Error::InvalidParameter("patches_per_cell must be >= 1".into()));
    }
    if patch_power < 0.0 {
        return Err(Error::InvalidParameter("patch power must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = half_width_cells as isize;
    let cells = (-l..=l)
        .map(|index| {
            let patches = (0..patches_per_cell)
                .map(|k| {
                    let azimuth_rad = match azimuth_mode {
                        AzimuthMode::Grid => -PI / 2.0 + k as f64 * PI / patches_per_cell as f64,
                        AzimuthMode::Random => rng.random_range(-PI / 2.0..PI / 2.0),
                    };
                    let normalized_doppler = match doppler_model {
                        DopplerModel::Stationary => 0.0,
                        DopplerModel::Ridge { slope } => slope * cfg.spatial_frequency(azimuth_rad),
                        DopplerModel::Uniform => rng.random_range(-0.5..0.5),
                    };
                    Patch {
                        azimuth_rad,
                        normalized_doppler,
                    }
                })
                .collect();
            ClutterCell { index, patches }
        })
        .collect();
    Ok(ClutterScene {
        half_width_cells,
        patches_per_cell,
        patch_power,
        azimuth_mode,
        doppler_model,
        rng_seed: seed,
        cells,
    })
}

/// Inner clutter covariance of one range cell, with optional rank factors.
#[derive(Debug, Clone)]
pub struct InnerCcm {
    pub cell_index: isize,
    pub matrix: CMat,
    /// `u_{l,r} = √λ_{l,r}·ũ_{l,r}`; empty until [`rank_factorize`] runs.
    pub rank_factors: Vec<CVec>,
}

/// `M_l = σ_c²·Σ_k u_k u_kᴴ` over the patches of cell `l`.
pub fn inner_ccm(cfg: &ArrayConfig, scene: &ClutterScene, l: isize) -> Result<InnerCcm> {
    let cell = scene
        .cell(l)
        .ok_or_else(|| Error::InvalidParameter(format!("range cell {l} not in scene")))?;
    let dim = cfg.steering_len();
    let mut m = CMat::zeros(dim, dim);
    let w = Complex64::new(scene.patch_power, 0.0);
    for p in &cell.patches {
        let u = st_steering(cfg, p.normalized_doppler, p.azimuth_rad);
        m.ger(w, &u, &u.conjugate(), Complex64::new(1.0, 0.0));
    }
    Ok(InnerCcm {
        cell_index: l,
        matrix: m,
        rank_factors: Vec::new(),
    })
}

pub(crate) fn hermitian_defect(m: &CMat) -> f64 {
    (m - m.adjoint()).norm() / m.norm().max(f64::MIN_POSITIVE)
}

/// Eigen-factorizes `M_l`, keeping eigenpairs with `λ ≥ rel_threshold·λ_max`.
pub fn rank_factorize(mut m: InnerCcm, rel_threshold: f64) -> Result<InnerCcm> {
    let defect = hermitian_defect(&m.matrix);
    if defect > 1e-10 {
        return Err(Error::NotHermitian(defect));
    }
    let herm = (&m.matrix + m.matrix.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let mut factors = Vec::new();
    if lmax > 0.0 {
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        for i in order {
            let lam = eig.eigenvalues[i];
            if lam < rel_threshold * lmax {
                break;
            }
            factors.push(eig.eigenvectors.column(i) * Complex64::new(lam.sqrt(), 0.0));
        }
    }
    m.rank_factors = factors;
    Ok(m)
}

/// Builds the clutter operators `A_{l,r}` from factorized inner CCMs.
pub fn clutter_operators(cfg: &ArrayConfig, ccms: &[InnerCcm]) -> Result<Vec<StOperator>> {
    let mut ops = Vec::new();
    for ccm in ccms {
        for u in &ccm.rank_factors {
            ops.push(build_clutter_operator(cfg, ccm.cell_index, u.clone())?);
        }
    }
    Ok(ops)
}

/// Factorized inner CCMs of every cell of a scene.
pub fn scene_ccms(cfg: &ArrayConfig, scene: &ClutterScene, rel_threshold: f64) -> Result<Vec<InnerCcm>> {
    scene
        .cells
        .iter()
        .map(|c| rank_factorize(inner_ccm(cfg, scene, c.index)?, rel_threshold))
        .collect()
}

/// `R_c = Σ_{l,r} (A_{l,r}x)(A_{l,r}x)ᴴ`.
pub fn full_ccm(ops: &OperatorSet, x: &CVec) -> Result<CMat> {
    if x.len() != ops.waveform_len() {
        return Err(Error::dim("waveform", ops.waveform_len(), x.len()));
    }
    Ok(ops.clutter_covariance(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ArrayConfig {
        ArrayConfig {
            n_tx: 2,
            n_rx: 2,
            d_tx_over_lambda: 2.0,
            d_rx_over_lambda: 0.5,
            n_pulses: 2,
            n_samples: 3,
            prf_hz: 1000.0,
            carrier_hz: 2.4e9,
        }
    }

    #[test]
    fn grid_azimuth_spacing() {
        let s = generate_scene(&cfg(), 2, 60, 1.0, AzimuthMode::Grid, DopplerModel::default(), 1).unwrap();
        assert_eq!(s.cells.len(), 5);
        let p = &s.cells[0].patches;
        for w in p.windows(2) {
            assert!((w[1].azimuth_rad - w[0].azimuth_rad - PI / 60.0).abs() < 1e-12);
        }
        assert!(p.iter().all(|q| (-PI / 2.0..PI / 2.0).contains(&q.azimuth_rad)));
    }

    #[test]
    fn seeded_scene_is_reproducible() {
        let a = generate_scene(&cfg(), 1, 7, 1.0, AzimuthMode::Random, DopplerModel::Uniform, 9).unwrap();
        let b = generate_scene(&cfg(), 1, 7, 1.0, AzimuthMode::Random, DopplerModel::Uniform, 9).unwrap();
        assert_eq!(a, b);
        let back = ClutterScene::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn zero_half_width_is_single_cell() {
        let s = generate_scene(&cfg(), 0, 3, 1.0, AzimuthMode::Grid, DopplerModel::Stationary, 0).unwrap();
        assert_eq!(s.cells.len(), 1);
        assert_eq!(s.cells[0].index, 0);
        assert!(s.cells[0].patches.iter().all(|p| p.normalized_doppler == 0.0));
    }

    #[test]
    fn ccm_trace_and_hermitian() {
        let c = cfg();
        let s = generate_scene(&c, 1, 5, 2.0, AzimuthMode::Random, DopplerModel::Uniform, 4).unwrap();
        let m = inner_ccm(&c, &s, -1).unwrap();
        let tr: f64 = m.matrix.diagonal().iter().map(|v| v.re).sum();
        assert!((tr - 2.0 * 5.0 * c.steering_len() as f64).abs() < 1e-9);
        assert!(hermitian_defect(&m.matrix) < 1e-12);
        assert!(inner_ccm(&c, &s, 2).is_err());
    }

    #[test]
    fn rank_one_factor() {
        let c = cfg();
        let s = generate_scene(&c, 0, 1, 1.0, AzimuthMode::Grid, DopplerModel::default(), 0).unwrap();
        let m = rank_factorize(inner_ccm(&c, &s, 0).unwrap(), 1e-12).unwrap();
        assert_eq!(m.rank_factors.len(), 1);
        let tr: f64 = m.matrix.diagonal().iter().map(|v| v.re).sum();
        assert!((tr - c.steering_len() as f64).abs() < 1e-10);
        let u = st_steering(&c, s.cells[0].patches[0].normalized_doppler, s.cells[0].patches[0].azimuth_rad);
        let f = &m.rank_factors[0];
        // equal up to a global phase
        let ph = f.dotc(&u);
        assert!((ph.norm() - u.norm_squared()).abs() < 1e-9);
    }

    #[test]
    fn reconstruction_and_rank_bound() {
        let c = cfg();
        let s = generate_scene(&c, 1, 5, 1.0, AzimuthMode::Random, DopplerModel::Uniform, 11).unwrap();
        for cell in &s.cells {
            let m = rank_factorize(inner_ccm(&c, &s, cell.index).unwrap(), 1e-12).unwrap();
            assert!(m.rank_factors.len() <= 5.min(c.steering_len()));
            let mut rec = CMat::zeros(c.steering_len(), c.steering_len());
            for u in &m.rank_factors {
                rec += u * u.adjoint();
            }
            assert!((rec - &m.matrix).norm() / m.matrix.norm() <= 1e-10);
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut a = CMat::identity(3, 3);
        a[(0, 1)] = Complex64::new(1.0, 0.0);
        let m = InnerCcm {
            cell_index: 0,
            matrix: a,
            rank_factors: vec![],
        };
        assert!(matches!(rank_factorize(m, 1e-10), Err(Error::NotHermitian(_))));
    }
}
