//! Scenario configuration, seeded runs, parameter sweeps and exports.
//!
//! A scenario is a single TOML document. Powers given in dB carry a `_db`
//! suffix; everything else is linear. Two presets ship with the crate:
//! `paper` (full-size array and CPI) and `desk` (a reduced
//! array and CPI that runs in seconds).

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clutter::{clutter_operators, generate_scene, scene_ccms, AzimuthMode, ClutterScene, DopplerModel, DEFAULT_RANK_THRESHOLD};
use crate::comm::{build_ci_constraints, build_zf_constraints, estimate_ser, generate_channels, generate_symbols, ser_csv, CiConstraintSet, CommSetup, ZfConstraintSet};
use crate::designer::{design_with, CommConstraints, ConstraintVariant, DesignResult, SolverConfig};
use crate::model::{build_target_operator, st_steering, ArrayConfig, OperatorSet};
use crate::radar::{cross_ambiguity, AmbiguityGrid, AmbiguityMap};
use crate::{db_to_linear, CVec, Error, Result};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "STAP_SLP_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarConfig {
    /// Receiver noise power `σ_r²`.
    pub noise_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub azimuth_deg: f64,
    pub normalized_doppler: f64,
    /// Target power `σ₀²`.
    pub power_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClutterConfig {
    /// `L`: cells `−L..=L` around the cell under test.
    pub half_width_cells: usize,
    /// `N_c`.
    pub patches_per_cell: usize,
    /// Per-patch power `σ_c²`.
    pub power_db: f64,
    #[serde(default)]
    pub azimuth_mode: AzimuthMode,
    #[serde(default)]
    pub doppler_model: DopplerModel,
    #[serde(default = "default_rank_threshold")]
    pub rank_threshold: f64,
}

fn default_rank_threshold() -> f64 {
    DEFAULT_RANK_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommConfig {
    pub n_users: usize,
    pub psk_order: usize,
    /// `Γ_k` per user; a single entry applies to every user.
    pub qos_db: Vec<f64>,
    /// Receiver noise power `σ²`.
    pub noise_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    Cm,
    Papr,
    Cms,
}

impl VariantKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cm" => Ok(Self::Cm),
            "papr" => Ok(Self::Papr),
            "cms" => Ok(Self::Cms),
            _ => Err(Error::Config(format!("unknown variant '{s}' (expected cm, papr or cms)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConfig {
    pub kind: VariantKind,
    /// `P` in watts.
    pub total_power: f64,
    #[serde(default = "default_papr_eps")]
    pub papr_eps: f64,
    /// `ξ` as a multiple of `√(P/MNNt)`.
    #[serde(default = "default_xi_mult")]
    pub similarity_xi_mult: f64,
}

fn default_papr_eps() -> f64 {
    1.0
}

fn default_xi_mult() -> f64 {
    1.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub scene: u64,
    pub channel: u64,
    pub symbol: u64,
}

/// Which communication constraint a design run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommMode {
    Ci,
    Zf,
    RadarOnly,
}

impl CommMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ci => "ci",
            Self::Zf => "zf",
            Self::RadarOnly => "radar_only",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ci" => Ok(Self::Ci),
            "zf" => Ok(Self::Zf),
            "radar_only" | "radar-only" => Ok(Self::RadarOnly),
            _ => Err(Error::Config(format!("unknown baseline '{s}' (expected ci, zf or radar_only)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Extra designs run next to the CI design.
    pub baselines: Vec<CommMode>,
    pub ambiguity: bool,
    /// Grid points per axis of the ambiguity map.
    pub ambiguity_points: usize,
    /// Also render the ambiguity map as PNG (needs the `heatmap` feature).
    pub heatmap: bool,
    /// Monte Carlo trials per user for the SER table; 0 disables it.
    pub ser_trials: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            baselines: vec![],
            ambiguity: true,
            ambiguity_points: 101,
            heatmap: true,
            ser_trials: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub array: ArrayConfig,
    pub radar: RadarConfig,
    pub target: TargetConfig,
    pub clutter: ClutterConfig,
    pub comm: CommConfig,
    pub variant: VariantConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub seeds: Seeds,
    #[serde(default)]
    pub outputs: OutputConfig,
}

const PRESETS: &[(&str, &str)] = &[("desk", include_str!("../presets/desk.toml")), ("paper", include_str!("../presets/paper.toml"))];

/// Names of the built-in presets.
pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

/// TOML text of a built-in preset.
pub fn preset_text(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::Config(format!("unknown preset '{name}' (available: {})", preset_names().join(", "))))
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    ScenarioConfig::from_toml(preset_text(name)?)
}

impl ScenarioConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        let c: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Reads a config file, or a preset when `path` is `preset:<name>`.
    pub fn load(path: &Path) -> Result<Self> {
        if let Some(name) = path.to_str().and_then(|s| s.strip_prefix("preset:")) {
            return preset(name);
        }
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        self.solver.validate()?;
        let c = &self.comm;
        if c.qos_db.len() != 1 && c.qos_db.len() != c.n_users {
            return Err(Error::Config(format!(
                "comm.qos_db needs 1 or n_users = {} entries, got {}",
                c.n_users,
                c.qos_db.len()
            )));
        }
        if self.target.normalized_doppler.abs() > 0.5 {
            return Err(Error::Config("target.normalized_doppler must lie in [-0.5, 0.5]".into()));
        }
        if self.clutter.patches_per_cell == 0 {
            return Err(Error::Config("clutter.patches_per_cell must be >= 1".into()));
        }
        let v = &self.variant;
        if !(v.total_power > 0.0) || !(v.papr_eps >= 0.0) || !(v.similarity_xi_mult >= 0.0) {
            return Err(Error::Config("variant: total_power must be > 0, papr_eps and similarity_xi_mult >= 0".into()));
        }
        if self.outputs.ambiguity_points == 0 {
            return Err(Error::Config("outputs.ambiguity_points must be >= 1".into()));
        }
        Ok(())
    }

    pub fn qos_linear(&self) -> Vec<f64> {
        let q = &self.comm.qos_db;
        (0..self.comm.n_users).map(|k| db_to_linear(if q.len() == 1 { q[0] } else { q[k] })).collect()
    }
}

/// Orthogonal LFM reference `X₀(i, j) = √(P/MNNt)·e^{j2πi(j−1)/Nt}·e^{jπ(j−1)²/Nt}`
/// with 1-based `i` (antenna) and `j` (slot), vectorized slot by slot.
pub fn build_reference_lfm(cfg: &ArrayConfig, total_power: f64) -> CVec {
    let nt = cfg.n_tx;
    let n = cfg.waveform_len();
    let amp = (total_power / n as f64).sqrt();
    CVec::from_fn(n, |idx, _| {
        let i = (idx % nt + 1) as f64;
        let j0 = (idx / nt) as f64;
        let phase = 2.0 * PI * i * j0 / nt as f64 + PI * j0 * j0 / nt as f64;
        Complex64::from_polar(amp, phase)
    })
}

/// Every object a design run needs, built from a config.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub scene: ClutterScene,
    pub ops: OperatorSet,
    pub target_power: f64,
    pub comm: CommSetup,
    pub ci: CiConstraintSet,
    pub reference: CVec,
}

impl Scenario {
    pub fn build(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let cfg = &config.array;
        let scene = generate_scene(
            cfg,
            config.clutter.half_width_cells,
            config.clutter.patches_per_cell,
            db_to_linear(config.clutter.power_db),
            config.clutter.azimuth_mode,
            config.clutter.doppler_model,
            config.seeds.scene,
        )?;
        let ccms = scene_ccms(cfg, &scene, config.clutter.rank_threshold)?;
        let theta0 = config.target.azimuth_deg.to_radians();
        let ops = OperatorSet {
            a0: build_target_operator(cfg, st_steering(cfg, config.target.normalized_doppler, theta0))?,
            clutter: clutter_operators(cfg, &ccms)?,
            noise_power: db_to_linear(config.radar.noise_db),
        };
        let comm = CommSetup {
            channels: generate_channels(cfg.n_tx, config.comm.n_users, config.seeds.channel),
            symbols: generate_symbols(config.comm.n_users, cfg.n_pulses, cfg.n_samples, config.comm.psk_order, config.seeds.symbol)?,
            noise_power: db_to_linear(config.comm.noise_db),
            qos: config.qos_linear(),
            channel_seed: config.seeds.channel,
            symbol_seed: config.seeds.symbol,
        };
        let ci = build_ci_constraints(&comm, cfg)?;
        Ok(Self {
            reference: build_reference_lfm(cfg, config.variant.total_power),
            config: config.clone(),
            scene,
            ops,
            target_power: db_to_linear(config.target.power_db),
            comm,
            ci,
        })
    }

    pub fn variant(&self, kind: VariantKind) -> ConstraintVariant {
        let v = &self.config.variant;
        let p = v.total_power;
        match kind {
            VariantKind::Cm => ConstraintVariant::Cm { total_power: p },
            VariantKind::Papr => ConstraintVariant::Papr {
                total_power: p,
                papr_eps: v.papr_eps,
            },
            VariantKind::Cms => ConstraintVariant::Cms {
                total_power: p,
                similarity_xi: v.similarity_xi_mult * (p / self.config.array.waveform_len() as f64).sqrt(),
                reference: self.reference.clone(),
            },
        }
    }

    pub fn zf(&self) -> Result<ZfConstraintSet> {
        build_zf_constraints(&self.comm, &self.config.array)
    }

    /// Runs one design. Radar-only runs start from the LFM reference.
    pub fn design(&self, kind: VariantKind, mode: CommMode, init: Option<&CVec>) -> Result<DesignResult> {
        let variant = self.variant(kind);
        let solver = &self.config.solver;
        match mode {
            CommMode::Ci => design_with(&variant, &self.ops, self.target_power, CommConstraints::Ci(&self.ci), solver, init),
            CommMode::Zf => {
                let zf = self.zf()?;
                design_with(&variant, &self.ops, self.target_power, CommConstraints::Zf(&zf), solver, init)
            }
            CommMode::RadarOnly => {
                let start = init.unwrap_or(&self.reference);
                design_with(&variant, &self.ops, self.target_power, CommConstraints::None, solver, Some(start))
            }
        }
    }
}

/// Samples the cross-ambiguity of a design on a square grid.
pub fn ambiguity_map(config: &ScenarioConfig, result: &DesignResult, points: usize) -> Result<AmbiguityMap> {
    let grid = AmbiguityGrid::uniform(points, points, -0.5, 0.5);
    cross_ambiguity(&config.array, &result.waveform, &result.filter, &grid)
}

/// Mean of the map (linear) over the band `|f_d − β·f_s| ≤ half_width`
/// around the clutter ridge, in dB relative to `reference`.
pub fn ridge_band_average_db(map: &AmbiguityMap, slope: f64, half_width: f64, reference: f64) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, fd) in map.grid.doppler.iter().enumerate() {
        for (k, fs) in map.grid.spatial.iter().enumerate() {
            if (fd - slope * fs).abs() <= half_width {
                sum += map.value(i, k);
                count += 1;
            }
        }
    }
    (count > 0).then(|| crate::linear_to_db(sum / count as f64 / reference))
}

/// Renders a map in dB (clipped to `[floor_db, 0]` relative to its peak)
/// as a PNG heatmap, Doppler increasing upward.
#[cfg(feature = "heatmap")]
pub fn write_heatmap(map: &AmbiguityMap, path: &Path, floor_db: f64) -> Result<()> {
    let w = map.grid.spatial.len() as u32;
    let h = map.grid.doppler.len() as u32;
    let peak = map.max().max(f64::MIN_POSITIVE);
    let mut img = image::RgbImage::new(w, h);
    for i in 0..h as usize {
        for k in 0..w as usize {
            let db = crate::linear_to_db((map.value(i, k) / peak).max(1e-300));
            let t = ((db - floor_db) / -floor_db).clamp(0.0, 1.0);
            img.put_pixel(k as u32, h - 1 - i as u32, image::Rgb(colormap(t)));
        }
    }
    img.save(path).map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

#[cfg(feature = "heatmap")]
fn colormap(t: f64) -> [u8; 3] {
    // dark blue → teal → yellow
    let stops = [(0.0, [20.0, 12.0, 70.0]), (0.5, [30.0, 150.0, 140.0]), (1.0, [250.0, 230.0, 40.0])];
    let (a, b) = if t <= 0.5 { (stops[0], stops[1]) } else { (stops[1], stops[2]) };
    let u = (t - a.0) / (b.0 - a.0);
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (a.1[c] + u * (b.1[c] - a.1[c])).round() as u8;
    }
    out
}

/// Writes `ambiguity.csv` (values in dB relative to the target response)
/// and, with the `heatmap` feature and `outputs.heatmap`, `ambiguity.png`.
pub fn write_ambiguity(config: &ScenarioConfig, ops: &OperatorSet, result: &DesignResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let map = ambiguity_map(config, result, config.outputs.ambiguity_points)?;
    let target = result.filter.dotc(&ops.a0.apply(&result.waveform)).norm_sqr();
    write(out_dir.join("ambiguity.csv"), &map.to_csv(target), &mut files)?;
    #[cfg(feature = "heatmap")]
    if config.outputs.heatmap {
        let p = out_dir.join("ambiguity.png");
        write_heatmap(&map, &p, -60.0)?;
        files.push(p);
    }
    Ok(files)
}

/// Files written by [`run`] and the designs they hold.
#[derive(Debug)]
pub struct RunOutput {
    pub result: DesignResult,
    pub baselines: Vec<(CommMode, Result<DesignResult>)>,
    pub files: Vec<PathBuf>,
}

fn write(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text)?;
    files.push(path);
    Ok(())
}

/// Machine-readable failure record written next to the artifacts.
#[derive(Debug, Serialize)]
pub struct FailureRecord<'a> {
    pub kind: &'a str,
    pub message: String,
}

pub fn failure_kind(e: &Error) -> &'static str {
    match e {
        Error::Infeasible(_) => "infeasible",
        Error::Solver(_) => "solver",
        Error::Config(_) => "config",
        _ => "error",
    }
}

/// Builds the scenario, runs the CI design plus configured baselines, and
/// writes `result.json`, `trace.csv`, `scene.json`, `comm.json`,
/// `baseline_<name>.json`, and optionally `ambiguity.csv`,
/// `ambiguity.png` and `ser.csv` into `out_dir`. On failure an
/// `error.json` is written before the error is returned.
pub fn run(config: &ScenarioConfig, out_dir: &Path) -> Result<RunOutput> {
    fs::create_dir_all(out_dir)?;
    let res = run_inner(config, out_dir);
    if let Err(e) = &res {
        let rec = FailureRecord {
            kind: failure_kind(e),
            message: e.to_string(),
        };
        fs::write(out_dir.join("error.json"), serde_json::to_string_pretty(&rec)?)?;
    }
    res
}

fn run_inner(config: &ScenarioConfig, out_dir: &Path) -> Result<RunOutput> {
    let sc = Scenario::build(config)?;
    let mut files = Vec::new();
    write(out_dir.join("scene.json"), &sc.scene.to_json()?, &mut files)?;
    write(out_dir.join("comm.json"), &sc.comm.to_json()?, &mut files)?;
    let kind = config.variant.kind;
    let result = sc.design(kind, CommMode::Ci, None)?;
    write(out_dir.join("result.json"), &result.to_json()?, &mut files)?;
    write(out_dir.join("trace.csv"), &result.trace_csv(), &mut files)?;
    let baselines: Vec<(CommMode, Result<DesignResult>)> = config
        .outputs
        .baselines
        .par_iter()
        .filter(|m| **m != CommMode::Ci)
        // the CI waveform is feasible without communication constraints,
        // so starting there keeps the radar-only baseline on top
        .map(|&m| (m, sc.design(kind, m, (m == CommMode::RadarOnly).then_some(&result.waveform))))
        .collect();
    for (m, r) in &baselines {
        let path = out_dir.join(format!("baseline_{}.json", m.name()));
        match r {
            Ok(r) => write(path, &r.to_json()?, &mut files)?,
            Err(e) => write(
                path,
                &serde_json::to_string_pretty(&FailureRecord {
                    kind: failure_kind(e),
                    message: e.to_string(),
                })?,
                &mut files,
            )?,
        }
    }
    if config.outputs.ambiguity {
        files.extend(write_ambiguity(config, &sc.ops, &result, out_dir)?);
    }
    if config.outputs.ser_trials > 0 {
        let rep = estimate_ser(&sc.comm, &result.waveform, config.outputs.ser_trials, config.solver.seed)?;
        write(out_dir.join("ser.csv"), &ser_csv(&rep), &mut files)?;
    }
    Ok(RunOutput { result, baselines, files })
}

/// Sweepable scenario parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    QosDb,
    Power,
    NUsers,
    NAntennas,
    Doppler,
    PaprEps,
    SimilarityXi,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 7] = [
        Self::QosDb,
        Self::Power,
        Self::NUsers,
        Self::NAntennas,
        Self::Doppler,
        Self::PaprEps,
        Self::SimilarityXi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::QosDb => "qos_db",
            Self::Power => "power",
            Self::NUsers => "n_users",
            Self::NAntennas => "n_antennas",
            Self::Doppler => "doppler",
            Self::PaprEps => "papr_eps",
            Self::SimilarityXi => "similarity_xi",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown sweep axis '{s}'")))
    }

    /// Copy of `base` with this parameter set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut c = base.clone();
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("{} needs a positive integer, got {v}", self.name())))
            }
        };
        match self {
            Self::QosDb => c.comm.qos_db = vec![value],
            Self::Power => c.variant.total_power = value,
            Self::NUsers => {
                c.comm.n_users = count(value)?;
                if c.comm.qos_db.len() != 1 {
                    c.comm.qos_db.truncate(1);
                }
            }
            Self::NAntennas => {
                c.array.n_tx = count(value)?;
                c.array.n_rx = c.array.n_tx;
            }
            Self::Doppler => c.target.normalized_doppler = value,
            Self::PaprEps => c.variant.papr_eps = value,
            Self::SimilarityXi => c.variant.similarity_xi_mult = value,
        }
        c.validate()?;
        Ok(c)
    }
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub variant: VariantKind,
    pub comm: CommMode,
    pub sinr_db: Option<f64>,
    pub outer_iterations: Option<usize>,
    pub converged: bool,
    pub snapped: bool,
    pub min_ci_margin: Option<f64>,
    pub error: Option<String>,
}

/// Runs every `(value, variant, comm)` combination in parallel. All points
/// share the seeds of `base`, so rows at one value compare designs on the
/// same scenario. Failures are recorded per row.
pub fn sweep(base: &ScenarioConfig, axis: SweepAxis, values: &[f64], variants: &[VariantKind], comms: &[CommMode]) -> Vec<SweepRow> {
    let jobs: Vec<(f64, VariantKind, CommMode)> = values
        .iter()
        .flat_map(|&v| variants.iter().flat_map(move |&k| comms.iter().map(move |&m| (v, k, m))))
        .collect();
    jobs.par_iter()
        .map(|&(value, variant, comm)| {
            let res = axis
                .apply(base, value)
                .and_then(|c| Scenario::build(&c))
                .and_then(|sc| sc.design(variant, comm, None));
            let mut row = SweepRow {
                axis,
                value,
                variant,
                comm,
                sinr_db: None,
                outer_iterations: None,
                converged: false,
                snapped: false,
                min_ci_margin: None,
                error: None,
            };
            match res {
                Ok(r) => {
                    row.sinr_db = Some(r.sinr_db);
                    row.outer_iterations = Some(r.outer_iterations);
                    row.converged = r.converged;
                    row.snapped = r.feasibility.snapped;
                    row.min_ci_margin = r.feasibility.min_ci_margin;
                }
                Err(e) => row.error = Some(format!("{}: {e}", failure_kind(&e))),
            }
            row
        })
        .collect()
}

/// CSV of sweep rows; empty fields mark values that do not apply.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.9}"));
    let mut s = String::from("#schema:stap-slp.sweep.v1\naxis,value,variant,comm,sinr_db,outer_iterations,converged,snapped,min_ci_margin,error\n");
    for r in rows {
        let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.axis.name(),
            r.value,
            serde_json::to_value(r.variant).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            r.comm.name(),
            opt(r.sinr_db),
            r.outer_iterations.map_or(String::new(), |v| v.to_string()),
            r.converged,
            r.snapped,
            opt(r.min_ci_margin),
            err
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for name in preset_names() {
            let c = preset(name).unwrap();
            assert_eq!(c.name, name);
        }
        let p = preset("paper").unwrap();
        assert_eq!((p.array.n_tx, p.array.n_pulses, p.array.n_samples), (6, 4, 8));
        assert_eq!(p.clutter.patches_per_cell, 60);
        assert!(preset("nope").is_err());
    }

    #[test]
    fn missing_field_is_named() {
        let text = preset_text("desk").unwrap().replace("n_rx = 4\n", "");
        let e = ScenarioConfig::from_toml(&text).unwrap_err().to_string();
        assert!(e.contains("n_rx"), "{e}");
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = preset_text("desk").unwrap().replace("[radar]\n", "[radar]\nbogus = 1\n");
        assert!(ScenarioConfig::from_toml(&text).is_err());
    }

    #[test]
    fn lfm_first_entry_and_modulus() {
        let c = preset("paper").unwrap();
        let p = 30.0;
        let x = build_reference_lfm(&c.array, p);
        let n = c.array.waveform_len();
        let amp = (p / n as f64).sqrt();
        // j = 1 zeroes both phase terms
        assert!((x[0] - Complex64::new(amp, 0.0)).norm() < 1e-14);
        assert!(x.iter().all(|v| (v.norm() - amp).abs() < 1e-14));
        assert!((x.norm_squared() - p).abs() < 1e-10);
        // i = 2, j = 3
        let nt = c.array.n_tx as f64;
        let e = Complex64::from_polar(amp, 2.0 * PI * 2.0 * 2.0 / nt + PI * 4.0 / nt);
        assert!((x[2 * c.array.n_tx + 1] - e).norm() < 1e-13);
    }

    #[test]
    fn axis_application() {
        let c = preset("desk").unwrap();
        assert_eq!(SweepAxis::NAntennas.apply(&c, 3.0).unwrap().array.n_rx, 3);
        assert!(SweepAxis::NUsers.apply(&c, 1.5).is_err());
        assert_eq!(SweepAxis::QosDb.apply(&c, 7.0).unwrap().comm.qos_db, vec![7.0]);
        assert!(SweepAxis::Doppler.apply(&c, 0.7).is_err());
        for a in SweepAxis::ALL {
            assert_eq!(SweepAxis::parse(a.name()).unwrap(), a);
        }
    }

    #[test]
    fn toml_round_trip() {
        let c = preset("desk").unwrap();
        assert_eq!(ScenarioConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
    }
}
