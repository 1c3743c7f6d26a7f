//! Constant modulus plus similarity to the LFM reference. Tight ξ can make
//! the CI constraints unreachable; that shows up as an infeasibility error.

use stap_slp::designer::ConstraintVariant;
use stap_slp::experiments::{preset, CommMode, Scenario, VariantKind};

fn main() -> stap_slp::Result<()> {
    let mut cfg = preset("desk")?;
    cfg.comm.n_users = 1;
    for mult in [0.5, 1.0, 1.5, 2.0] {
        cfg.variant.similarity_xi_mult = mult;
        let sc = Scenario::build(&cfg)?;
        match sc.design(VariantKind::Cms, CommMode::Ci, None) {
            Ok(r) => println!(
                "xi x{mult}: SINR {:7.3} dB, max |x - x0| {:.4} (xi {:.4}), modulus deviation {:.1e}",
                r.sinr_db,
                r.feasibility.max_similarity_deviation.unwrap_or(f64::NAN),
                xi(&r.variant),
                r.feasibility.max_modulus_deviation
            ),
            Err(e) => println!("xi x{mult}: {e}"),
        }
    }
    Ok(())
}

fn xi(v: &ConstraintVariant) -> f64 {
    match v {
        ConstraintVariant::Cms { similarity_xi, .. } => *similarity_xi,
        _ => f64::INFINITY,
    }
}
