//! CI design against the zero-forcing and radar-only baselines on the same
//! scenario.

use stap_slp::experiments::{preset, CommMode, Scenario, VariantKind};

fn main() -> stap_slp::Result<()> {
    let mut cfg = preset("desk")?;
    cfg.comm.n_users = 1;
    let sc = Scenario::build(&cfg)?;
    for kind in [VariantKind::Cm, VariantKind::Papr] {
        let ci = sc.design(kind, CommMode::Ci, None)?;
        let zf = sc.design(kind, CommMode::Zf, None)?;
        let radar = sc.design(kind, CommMode::RadarOnly, Some(&ci.waveform))?;
        println!(
            "{:?}: radar-only {:.3} dB, CI {:.3} dB, ZF {:.3} dB, CI gain over ZF {:.3} dB",
            kind,
            radar.sinr_db,
            ci.sinr_db,
            zf.sinr_db,
            ci.sinr_db - zf.sinr_db
        );
    }
    Ok(())
}
