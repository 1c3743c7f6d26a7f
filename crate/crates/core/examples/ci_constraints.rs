//! Constructive-interference halfspaces and zero-forcing equalities for a
//! random channel and QPSK block.

use stap_slp::comm::{build_zf_constraints, estimate_ser};
use stap_slp::experiments::{preset, Scenario};

fn main() -> stap_slp::Result<()> {
    let mut cfg = preset("desk")?;
    cfg.comm.n_users = 2;
    let sc = Scenario::build(&cfg)?;
    println!("{} CI rows, largest threshold {:.4}", sc.ci.len(), sc.ci.max_threshold());
    println!("row 0 bounds slot {}, paired with row {}", sc.ci.rows[0].slot, sc.ci.partner(0));

    // The LFM reference ignores the users, so some margins are negative.
    let margins = sc.ci.margins(&sc.reference);
    let violated = margins.iter().filter(|m| **m < 0.0).count();
    println!("LFM reference: {violated} of {} rows violated", margins.len());

    let zf = build_zf_constraints(&sc.comm, &cfg.array)?;
    println!("ZF residual of the LFM reference {:.4}", zf.max_residual(&sc.reference));

    for r in estimate_ser(&sc.comm, &sc.reference, 200, 7)? {
        println!("user {} SER {:.3} ± {:.3}", r.user, r.rate, r.ci95);
    }
    Ok(())
}
