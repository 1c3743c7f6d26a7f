//! MVDR receive filter and output SINR of the LFM reference waveform.

use stap_slp::experiments::{preset, Scenario};
use stap_slp::linear_to_db;
use stap_slp::radar::{concentrated_objective, mvdr_filter, output_sinr};

fn main() -> stap_slp::Result<()> {
    let sc = Scenario::build(&preset("desk")?)?;
    let x = &sc.reference;
    let w = mvdr_filter(&sc.ops, x)?;
    let sinr = output_sinr(&sc.ops, sc.target_power, x, &w)?;
    println!("distortionless response |w^H A0 x| = {:.6}", w.dotc(&sc.ops.a0.apply(x)).norm());
    println!("output SINR {:.3} dB", linear_to_db(sinr));
    println!("concentrated objective {:.6e}", concentrated_objective(&sc.ops, x)?);
    Ok(())
}
