//! Cross-ambiguity of a CM design: target response, clutter ridge
//! suppression and an optional PNG heatmap.

use stap_slp::clutter::DopplerModel;
use stap_slp::experiments::{ambiguity_map, preset, ridge_band_average_db, CommMode, Scenario, VariantKind};
use stap_slp::linear_to_db;
use stap_slp::radar::{cross_ambiguity, AmbiguityGrid};

fn main() -> stap_slp::Result<()> {
    let cfg = preset("desk")?;
    let sc = Scenario::build(&cfg)?;
    let r = sc.design(VariantKind::Cm, CommMode::Ci, None)?;
    let target = r.filter.dotc(&sc.ops.a0.apply(&r.waveform)).norm_sqr();

    let fs0 = cfg.array.spatial_frequency(cfg.target.azimuth_deg.to_radians());
    let at = AmbiguityGrid {
        doppler: vec![cfg.target.normalized_doppler],
        spatial: vec![fs0],
    };
    let v = cross_ambiguity(&cfg.array, &r.waveform, &r.filter, &at)?.values[0];
    println!("target cell {:.3} dB", linear_to_db(v / target));

    let map = ambiguity_map(&cfg, &r, 61)?;
    let slope = match cfg.clutter.doppler_model {
        DopplerModel::Ridge { slope } => slope,
        _ => 1.0,
    };
    if let Some(db) = ridge_band_average_db(&map, slope, 0.02, target) {
        println!("clutter ridge band average {db:.2} dB");
    }

    #[cfg(feature = "heatmap")]
    {
        let path = std::env::temp_dir().join("stap_slp_ambiguity.png");
        stap_slp::experiments::write_heatmap(&map, &path, -60.0)?;
        println!("heatmap written to {}", path.display());
    }
    Ok(())
}
