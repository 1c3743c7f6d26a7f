//! Space-time operators: target steering, the structured map x → X̄u and
//! its adjoint.

use num_complex::Complex64;
use stap_slp::experiments::preset;
use stap_slp::model::{build_target_operator, st_steering};
use stap_slp::CVec;

fn main() -> stap_slp::Result<()> {
    let cfg = preset("desk")?.array;
    let u0 = st_steering(&cfg, 0.3, 0.0);
    let a0 = build_target_operator(&cfg, u0)?;
    println!("waveform length {}, filter length {}", a0.input_len(), a0.output_len());

    let x = CVec::from_fn(cfg.waveform_len(), |i, _| Complex64::from_polar(1.0, 0.7 * i as f64));
    let y = CVec::from_fn(cfg.filter_len(), |i, _| Complex64::new(1.0 / (1.0 + i as f64), 0.5));
    let lhs = a0.apply(&x).dotc(&y);
    let rhs = x.dotc(&a0.adjoint(&y));
    println!("<A x, y> = {lhs:.6}");
    println!("<x, A^H y> = {rhs:.6}");
    println!("target return power {:.4}", a0.apply(&x).norm_squared());
    Ok(())
}
