//! Convex quadratic majorizer of the negated concentrated objective.
//!
//! With `s = A₀x` and `W(x) = Σ A_{l,r}xxᴴA_{l,r}ᴴ + σ_r²I`, the function
//! `f(x) = −sᴴW⁻¹s` is bounded above by its linearization in `(s, W)` at
//! the current iterate. Substituting `W(x)` back in gives
//!
//! ```text
//! f(x) ≤ xᴴD_t x − Re{b_tᴴx} + c₂
//! b_t = 2A₀ᴴW_t⁻¹A₀x_t
//! D_t = Σ_{l,r} g_{l,r}g_{l,r}ᴴ,   g_{l,r} = A_{l,r}ᴴW_t⁻¹A₀x_t
//! ```
//!
//! with equality at `x_t`. Because `x_t x_tᴴ` has rank one, `D_t` is a sum
//! of outer products and one Cholesky factorization of `W_t` serves all of
//! them.

use num_complex::Complex64;

use crate::model::OperatorSet;
use crate::radar::Interference;
use crate::{CMat, CVec, Error, Result};

/// `(D_t, b_t, c₂)` of the majorizer at `iterate`.
#[derive(Debug, Clone)]
pub struct SurrogateCoeffs {
    pub d_matrix: CMat,
    pub b_vector: CVec,
    pub const_offset: f64,
    pub iterate: CVec,
    /// `g(x_t)`, the concentrated objective at the iterate.
    pub objective_at_iterate: f64,
}

pub fn build_surrogate(ops: &OperatorSet, x_t: &CVec) -> Result<SurrogateCoeffs> {
    let inf = Interference::new(ops, x_t)?;
    let q = inf.whitened_target();
    let g = inf.target_return.dotc(&q).re;
    let n = ops.waveform_len();
    let mut d = CMat::zeros(n, n);
    let one = Complex64::new(1.0, 0.0);
    for op in &ops.clutter {
        let v = op.adjoint(&q);
        d.ger(one, &v, &v.conjugate(), one);
    }
    let b = ops.a0.adjoint(&q) * Complex64::new(2.0, 0.0);
    let quad = x_t.dotc(&(&d * x_t)).re;
    let lin = b.dotc(x_t).re;
    Ok(SurrogateCoeffs {
        const_offset: -g - quad + lin,
        d_matrix: d,
        b_vector: b,
        iterate: x_t.clone(),
        objective_at_iterate: g,
    })
}

/// `xᴴD_t x − Re{b_tᴴx} + c₂`.
pub fn surrogate_value(c: &SurrogateCoeffs, x: &CVec) -> Result<f64> {
    if x.len() != c.b_vector.len() {
        return Err(Error::dim("waveform", c.b_vector.len(), x.len()));
    }
    Ok(x.dotc(&(&c.d_matrix * x)).re - c.b_vector.dotc(x).re + c.const_offset)
}

/// Gradient of the surrogate with respect to the real embedding
/// `[Re x; Im x]`, returned in complex form `2·(2D_t x − b_t)/2`.
///
/// For real-valued `φ(x)`, `∂φ/∂Re x + j·∂φ/∂Im x = 2D_t x − b_t`.
pub fn surrogate_gradient(c: &SurrogateCoeffs, x: &CVec) -> CVec {
    &c.d_matrix * x * Complex64::new(2.0, 0.0) - &c.b_vector
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clutter::{clutter_operators, generate_scene, scene_ccms, AzimuthMode, DopplerModel};
    use crate::model::{build_target_operator, st_steering, ArrayConfig};
    use crate::radar::concentrated_objective;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(clutter: bool) -> OperatorSet {
        let c = ArrayConfig {
            n_tx: 2,
            n_rx: 2,
            d_tx_over_lambda: 2.0,
            d_rx_over_lambda: 0.5,
            n_pulses: 2,
            n_samples: 3,
            prf_hz: 1000.0,
            carrier_hz: 2.4e9,
        };
        let a0 = build_target_operator(&c, st_steering(&c, 0.3, 0.0)).unwrap();
        let clutter = if clutter {
            let s = generate_scene(&c, 1, 6, 10.0, AzimuthMode::Grid, DopplerModel::default(), 0).unwrap();
            clutter_operators(&c, &scene_ccms(&c, &s, 1e-10).unwrap()).unwrap()
        } else {
            vec![]
        };
        OperatorSet {
            a0,
            clutter,
            noise_power: 1.0,
        }
    }

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CVec {
        CVec::from_fn(n, |_, _| Complex64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale)))
    }

    #[test]
    fn no_clutter_surrogate_is_linear() {
        let o = setup(false);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xt = rand_vec(&mut rng, 12, 1.0);
        let c = build_surrogate(&o, &xt).unwrap();
        assert_eq!(c.d_matrix.norm(), 0.0);
        let a = o.a0.to_dense();
        let want = a.adjoint() * &a * &xt * Complex64::new(2.0, 0.0);
        assert!((&c.b_vector - want).norm() < 1e-10);
        assert!((surrogate_value(&c, &CVec::zeros(12)).unwrap() - c.const_offset).abs() < 1e-15);
    }

    #[test]
    fn tangent_and_majorizing() {
        let o = setup(true);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let xt = rand_vec(&mut rng, 12, 1.0);
            let c = build_surrogate(&o, &xt).unwrap();
            let f = -concentrated_objective(&o, &xt).unwrap();
            assert!((surrogate_value(&c, &xt).unwrap() - f).abs() <= 1e-9 * (1.0 + f.abs()));
            for scale in [1e-3, 0.1, 1.0, 5.0] {
                for _ in 0..40 {
                    let x = &xt + rand_vec(&mut rng, 12, scale);
                    let fx = -concentrated_objective(&o, &x).unwrap();
                    assert!(surrogate_value(&c, &x).unwrap() >= fx - 1e-8 * (1.0 + fx.abs()));
                }
            }
        }
    }

    #[test]
    fn doubled_quadratic_term_fails_to_majorize() {
        // With the quadratic term doubled the surrogate is no longer tangent:
        // its gradient at x_t picks up 2D_t x_t, so a short step along
        // −D_t x_t drops below the objective.
        let o = setup(true);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xt = rand_vec(&mut rng, 12, 1.0);
        let mut c = build_surrogate(&o, &xt).unwrap();
        let quad = xt.dotc(&(&c.d_matrix * &xt)).re;
        c.d_matrix *= Complex64::new(2.0, 0.0);
        c.const_offset -= quad;
        let dir = &c.d_matrix * &xt;
        let x = &xt - &dir * Complex64::new(1e-4 / c.d_matrix.norm(), 0.0);
        let fx = -concentrated_objective(&o, &x).unwrap();
        assert!(surrogate_value(&c, &x).unwrap() < fx);
    }

    #[test]
    fn convex_midpoints_and_gradient() {
        let o = setup(true);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xt = rand_vec(&mut rng, 12, 1.0);
        let c = build_surrogate(&o, &xt).unwrap();
        for _ in 0..20 {
            let a = rand_vec(&mut rng, 12, 2.0);
            let b = rand_vec(&mut rng, 12, 2.0);
            let mid = (&a + &b) * Complex64::new(0.5, 0.0);
            let lhs = surrogate_value(&c, &mid).unwrap();
            let rhs = 0.5 * (surrogate_value(&c, &a).unwrap() + surrogate_value(&c, &b).unwrap());
            assert!(lhs <= rhs + 1e-9 * rhs.abs());
        }
        let x = rand_vec(&mut rng, 12, 1.0);
        let g = surrogate_gradient(&c, &x);
        let h = 1e-5;
        for k in 0..12 {
            for (dir, comp) in [(Complex64::new(h, 0.0), g[k].re), (Complex64::new(0.0, h), g[k].im)] {
                let mut xp = x.clone();
                xp[k] += dir;
                let mut xm = x.clone();
                xm[k] -= dir;
                let fd = (surrogate_value(&c, &xp).unwrap() - surrogate_value(&c, &xm).unwrap()) / (2.0 * h);
                assert!((fd - comp).abs() <= 1e-5 * (1.0 + comp.abs()), "{fd} vs {comp}");
            }
        }
    }
}
