//! Monte Carlo symbol error rate of a CI design compared with the LFM
//! reference, which ignores the users.

use stap_slp::comm::{estimate_ser, ser_csv};
use stap_slp::experiments::{preset, CommMode, Scenario, VariantKind};

fn main() -> stap_slp::Result<()> {
    let sc = Scenario::build(&preset("desk")?)?;
    let r = sc.design(VariantKind::Cm, CommMode::Ci, None)?;
    println!("CI design:");
    print!("{}", ser_csv(&estimate_ser(&sc.comm, &r.waveform, 2000, 11)?));
    println!("LFM reference:");
    print!("{}", ser_csv(&estimate_ser(&sc.comm, &sc.reference, 2000, 11)?));
    Ok(())
}
