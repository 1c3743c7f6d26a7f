//! PAPR-constrained design across several ε on one scenario.

use stap_slp::experiments::{preset, CommMode, Scenario, VariantKind};

fn main() -> stap_slp::Result<()> {
    let mut cfg = preset("desk")?;
    cfg.comm.n_users = 1;
    for eps in [0.0, 0.5, 1.0, 2.0] {
        cfg.variant.papr_eps = eps;
        let sc = Scenario::build(&cfg)?;
        let r = sc.design(VariantKind::Papr, CommMode::Ci, None)?;
        let f = &r.feasibility;
        println!(
            "eps {eps:3.1}: SINR {:7.3} dB, PAPR {:.3}, power {:.4}, min CI margin {:+.2e}",
            r.sinr_db,
            f.papr,
            f.total_power,
            f.min_ci_margin.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
