//! Direct use of the interior-point solver on a small quadratic with disk
//! and halfspace constraints.

use num_complex::Complex64;
use stap_slp::convex::{solve, ConstraintSet, ConvexSubproblem, Halfspace, SolverOptions};
use stap_slp::{CMat, CVec};

fn main() -> stap_slp::Result<()> {
    let n = 4;
    let quad = CMat::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(2.0 + i as f64, 0.0)
        } else {
            Complex64::new(0.1, 0.05 * (i as f64 - j as f64))
        }
    });
    let p = ConvexSubproblem {
        quad,
        linear: CVec::from_element(n, Complex64::new(1.0, -0.5)),
        prox_weight: 1e-3,
        prox_center: CVec::zeros(n),
        constraints: ConstraintSet {
            halfspaces: vec![Halfspace {
                offset: 0,
                coeffs: CVec::from_element(2, Complex64::new(1.0, 0.0)),
                threshold: 0.8,
            }],
            disk_radius: Some(1.0),
            ..Default::default()
        },
    };
    let r = solve(&p, &SolverOptions::default(), None)?;
    println!("status {:?} after {} iterations", r.status, r.iterations);
    println!("objective {:.9}, KKT residual {:.2e}", r.objective_value, r.kkt_residual);
    println!("halfspace value {:.6} (threshold 0.8), dual {:.4}", p.constraints.halfspaces[0].eval(&r.solution), r.duals.halfspace[0]);
    for (j, v) in r.solution.iter().enumerate() {
        println!("x[{j}] = {v:.5}  |x| = {:.5}", v.norm());
    }
    Ok(())
}
