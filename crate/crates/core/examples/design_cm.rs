//! Constant-modulus design on the desk preset, CI constraints on.

use std::time::Instant;

use stap_slp::experiments::{preset, CommMode, Scenario, VariantKind};

fn main() -> stap_slp::Result<()> {
    let cfg = preset("desk")?;
    let sc = Scenario::build(&cfg)?;
    let t = Instant::now();
    let r = sc.design(VariantKind::Cm, CommMode::Ci, None)?;
    println!("elapsed {:.2?}", t.elapsed());
    println!("init maximin {:.4}", r.init_maximin.unwrap_or(f64::NAN));
    for e in &r.trace {
        println!("iter {:3}  sinr {:8.3} dB  admm {:4} {}", e.iteration, e.sinr_db, e.admm_iterations, e.admm_converged);
    }
    println!("final sinr {:.3} dB (pre-snap {:.3}), converged {}", r.sinr_db, r.pre_snap_sinr_db, r.converged);
    println!("{:#?}", r.feasibility);
    Ok(())
}
