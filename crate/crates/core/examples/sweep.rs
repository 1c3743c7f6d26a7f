//! QoS sweep with paired seeds, printed as the CSV the CLI writes.

use stap_slp::experiments::{preset, sweep, sweep_csv, CommMode, SweepAxis, VariantKind};

fn main() -> stap_slp::Result<()> {
    let mut cfg = preset("desk")?;
    cfg.comm.n_users = 1;
    let rows = sweep(&cfg, SweepAxis::QosDb, &[0.0, 5.0, 10.0], &[VariantKind::Cm], &[CommMode::Ci]);
    print!("{}", sweep_csv(&rows));
    Ok(())
}
