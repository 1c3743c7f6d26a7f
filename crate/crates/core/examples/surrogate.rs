//! Quadratic majorizer of −g, the negated concentrated objective: tangent
//! at the expansion point, above −g elsewhere.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stap_slp::experiments::{preset, Scenario};
use stap_slp::radar::concentrated_objective;
use stap_slp::surrogate::{build_surrogate, surrogate_value};

fn main() -> stap_slp::Result<()> {
    let sc = Scenario::build(&preset("desk")?)?;
    let x_t = &sc.reference;
    let sur = build_surrogate(&sc.ops, x_t)?;
    let g_t = concentrated_objective(&sc.ops, x_t)?;
    println!("-g(x_t) = {:.9}, surrogate at x_t = {:.9}", -g_t, surrogate_value(&sur, x_t)?);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let x = x_t.map(|v| v + Complex64::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)));
        worst = worst.min(surrogate_value(&sur, &x)? + concentrated_objective(&sc.ops, &x)?);
    }
    println!("smallest surrogate + g over 20 perturbations: {worst:.3e}");
    Ok(())
}
