//! The extended Blasius equation as a first-order system, together with the
//! one-parameter scaling group that leaves it invariant.
//!
//! The third-order equation `f''' (f'')^(P-1) + f f'' / 2 = 0` is stored in
//! explicit form `f''' = -f (f'')^(2-P) / 2`. For `1 <= P < 2` the exponent
//! `2 - P` lies in `(0, 1]`, so the right-hand side vanishes as `f'' -> 0+`.
//!
//! The group `f* = lambda f`, `eta* = lambda^delta eta` maps solutions to
//! solutions iff `delta = (2 - P) / (1 - 2P)`.

use thiserror::Error;

/// Errors raised while building or evaluating the model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("power-law index P = {0} is outside the admissible range 1 <= P < 2")]
    OutOfRange(f64),
    #[error(
        "power-law index P = 2 is not admitted: the problem has infinitely many solutions there \
         (admissible range is 1 <= P < 2)"
    )]
    InfinitelyManySolutions,
    #[error("power-law index must be finite, got {0}")]
    NotFinite(f64),
    #[error(
        "non-positive curvature f'' = {fpp:e} with P = {power_index}; (f'')^(2-P) is undefined"
    )]
    NonPositiveCurvature { fpp: f64, power_index: f64 },
}

/// Power-law index `P` and the group exponent `delta` derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    power_index: f64,
    delta: f64,
}

impl ProblemParams {
    /// Validates `P` and caches `delta = (2 - P) / (1 - 2P)`.
    pub fn new(power_index: f64) -> Result<Self, ModelError> {
        if !power_index.is_finite() {
            return Err(ModelError::NotFinite(power_index));
        }
        if power_index == 2.0 {
            return Err(ModelError::InfinitelyManySolutions);
        }
        if !(1.0..2.0).contains(&power_index) {
            return Err(ModelError::OutOfRange(power_index));
        }
        Ok(Self {
            power_index,
            delta: (2.0 - power_index) / (1.0 - 2.0 * power_index),
        })
    }

    /// The classical Blasius problem.
    pub fn newtonian() -> Self {
        Self {
            power_index: 1.0,
            delta: -1.0,
        }
    }

    pub fn power_index(&self) -> f64 {
        self.power_index
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_newtonian(&self) -> bool {
        self.power_index == 1.0
    }

    /// Exponent `2 - P` applied to the curvature in the explicit right-hand side.
    pub fn curvature_exponent(&self) -> f64 {
        2.0 - self.power_index
    }
}

/// Alias for [`ProblemParams::new`].
pub fn make_params(power_index: f64) -> Result<ProblemParams, ModelError> {
    ProblemParams::new(power_index)
}

/// Phase point `(f, f', f'')` at one abscissa. Also used for derivative triples.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State {
    pub f: f64,
    pub fp: f64,
    pub fpp: f64,
}

impl State {
    pub const fn new(f: f64, fp: f64, fpp: f64) -> Self {
        Self { f, fp, fpp }
    }

    pub fn is_finite(&self) -> bool {
        self.f.is_finite() && self.fp.is_finite() && self.fpp.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.f, self.fp, self.fpp]
    }

    pub fn from_array([f, fp, fpp]: [f64; 3]) -> Self {
        Self { f, fp, fpp }
    }
}

/// Right-hand side `(f', f'', f''')` of the first-order system.
///
/// At `P = 1` the third component is exactly `-0.5 * f * f''` and any sign of
/// `f''` is accepted. Otherwise `f'' <= 0` is an error.
pub fn rhs(params: &ProblemParams, s: &State) -> Result<State, ModelError> {
    if params.is_newtonian() {
        return Ok(State::new(s.fp, s.fpp, -0.5 * s.f * s.fpp));
    }
    if !(s.fpp > 0.0) {
        return Err(ModelError::NonPositiveCurvature {
            fpp: s.fpp,
            power_index: params.power_index,
        });
    }
    Ok(State::new(
        s.fp,
        s.fpp,
        -0.5 * s.f * s.fpp.powf(params.curvature_exponent()),
    ))
}

/// Maps a star-variable state back to original variables:
/// `(f, f', f'') -> (lambda^-1 f, lambda^(delta-1) f', lambda^(2 delta-1) f'')`.
///
/// The abscissa follows [`physical_abscissa`].
pub fn scale_state(params: &ProblemParams, lambda: f64, s: &State) -> State {
    debug_assert!(lambda > 0.0, "group parameter must be positive");
    if lambda == 1.0 {
        return *s;
    }
    let d = params.delta;
    State::new(
        s.f / lambda,
        s.fp * lambda.powf(d - 1.0),
        s.fpp * lambda.powf(2.0 * d - 1.0),
    )
}

/// `eta = lambda^(-delta) eta*`.
pub fn physical_abscissa(params: &ProblemParams, lambda: f64, eta_star: f64) -> f64 {
    eta_star * lambda.powf(-params.delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn delta_at_reference_indices() {
        assert_eq!(make_params(1.0).unwrap().delta(), -1.0);
        assert_eq!(make_params(1.5).unwrap().delta(), -0.25);
        assert_eq!(ProblemParams::newtonian(), make_params(1.0).unwrap());
    }

    #[test]
    fn rejects_outside_range() {
        assert_eq!(make_params(2.0), Err(ModelError::InfinitelyManySolutions));
        assert!(make_params(2.0)
            .unwrap_err()
            .to_string()
            .contains("infinitely many solutions"));
        for p in [0.0, 0.999_999, 2.000_1, 2.5, -1.0] {
            assert_eq!(make_params(p), Err(ModelError::OutOfRange(p)));
        }
        assert!(matches!(
            make_params(f64::NAN),
            Err(ModelError::NotFinite(_))
        ));
        assert!(make_params(1.999_999_9).is_ok());
    }

    #[test]
    fn delta_is_increasing_on_admissible_range() {
        let deltas: Vec<f64> = (0..1000)
            .map(|i| make_params(1.0 + i as f64 / 1000.0).unwrap().delta())
            .collect();
        assert!(deltas.windows(2).all(|w| w[0] < w[1]));
        assert!(deltas.iter().all(|d| (-1.0..=0.0).contains(d)));
    }

    #[test]
    fn rhs_examples() {
        for p in [1.0, 1.3, 1.5, 1.9] {
            let params = make_params(p).unwrap();
            assert_eq!(
                rhs(&params, &State::new(0.0, 0.0, 1.0)).unwrap(),
                State::new(0.0, 1.0, 0.0)
            );
        }
        let newtonian = ProblemParams::newtonian();
        assert_eq!(
            rhs(&newtonian, &State::new(1.0, 0.0, 2.0)).unwrap(),
            State::new(0.0, 2.0, -1.0)
        );
        let p15 = make_params(1.5).unwrap();
        assert_eq!(
            rhs(&p15, &State::new(2.0, 0.5, 4.0)).unwrap(),
            State::new(0.5, 4.0, -2.0)
        );
    }

    #[test]
    fn rhs_rejects_non_positive_curvature_unless_newtonian() {
        let p15 = make_params(1.5).unwrap();
        for fpp in [0.0, -1e-300, -2.0, f64::NAN] {
            assert!(matches!(
                rhs(&p15, &State::new(1.0, 1.0, fpp)),
                Err(ModelError::NonPositiveCurvature { .. })
            ));
        }
        let newtonian = ProblemParams::newtonian();
        assert_eq!(
            rhs(&newtonian, &State::new(2.0, 1.0, -3.0)).unwrap().fpp,
            3.0
        );
    }

    #[test]
    fn scale_state_examples() {
        let p15 = make_params(1.5).unwrap();
        let s = State::new(1.0, 1.0, 1.0);
        assert_eq!(
            scale_state(&p15, 16.0, &s),
            State::new(0.0625, 0.03125, 0.015625)
        );
        let t = State::new(0.3, -2.0, 7.0);
        assert_eq!(scale_state(&p15, 1.0, &t), t);
        assert_eq!(physical_abscissa(&p15, 16.0, 1.0), 2.0);
    }

    proptest! {
        #[test]
        fn scaling_is_a_group_action(
            p in 1.0f64..1.999,
            l1 in 0.1f64..10.0,
            l2 in 0.1f64..10.0,
            f in -5.0f64..5.0,
            fp in -5.0f64..5.0,
            fpp in 0.01f64..5.0,
        ) {
            let params = make_params(p).unwrap();
            let s = State::new(f, fp, fpp);
            let twice = scale_state(&params, l2, &scale_state(&params, l1, &s));
            let once = scale_state(&params, l1 * l2, &s);
            for (a, b) in twice.to_array().iter().zip(once.to_array()) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
            }
        }

        #[test]
        fn newtonian_rhs_is_exact(f in -50.0f64..50.0, fpp in -50.0f64..50.0) {
            let d = rhs(&ProblemParams::newtonian(), &State::new(f, 0.0, fpp)).unwrap();
            prop_assert_eq!(d.fpp, -0.5 * f * fpp);
        }
    }
}
