//! Bisection shooting on the wall curvature, integrated directly in
//! original variables. Shares only the RK4 stepper with the transformation
//! method, so agreement between the two is a meaningful cross-check.

use thiserror::Error;

use crate::integrator::{self, CurvaturePolicy, GridSpec, IntegrationError};
use crate::model::{ProblemParams, State};

/// Truncated boundary for the shooting integration.
pub const DEFAULT_ETA_INF: f64 = 12.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("curvature must be positive and finite, got {0}")]
    BadCurvature(f64),
    #[error("invalid shooting configuration: {0}")]
    BadConfig(String),
    #[error(
        "bracket [{lo}, {hi}] does not straddle the root: residuals {res_lo:e} and {res_hi:e} \
         have the same sign"
    )]
    NoSignChange {
        lo: f64,
        hi: f64,
        res_lo: f64,
        res_hi: f64,
    },
    #[error("shooting with curvature {curvature} failed ({source}); try a narrower bracket")]
    Integration {
        curvature: f64,
        #[source]
        source: IntegrationError,
    },
    #[error("no convergence after {iterations} bisections; best curvature {best} (residual {residual:e})")]
    MaxIterations {
        iterations: usize,
        best: f64,
        residual: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingConfig {
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    /// Stop once `|f'(eta_inf) - 1| <= tol`.
    pub tol: f64,
    /// Stop once the bracket is narrower than this.
    pub curvature_tol: f64,
    pub max_iter: usize,
    pub grid: GridSpec,
    pub policy: CurvaturePolicy,
}

impl ShootingConfig {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            bracket_lo: 0.1,
            bracket_hi: 1.0,
            tol: 1e-12,
            curvature_tol: 1e-13,
            max_iter: 200,
            grid,
            policy: CurvaturePolicy::Extinction,
        }
    }

    pub fn with_bracket(mut self, lo: f64, hi: f64) -> Self {
        self.bracket_lo = lo;
        self.bracket_hi = hi;
        self
    }

    fn validate(&self) -> Result<(), OracleError> {
        if !(self.bracket_lo > 0.0
            && self.bracket_lo < self.bracket_hi
            && self.bracket_hi.is_finite())
        {
            return Err(OracleError::BadConfig(format!(
                "need 0 < bracket_lo < bracket_hi, got [{}, {}]",
                self.bracket_lo, self.bracket_hi
            )));
        }
        if !(self.tol > 0.0) || !(self.curvature_tol > 0.0) {
            return Err(OracleError::BadConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self::new(GridSpec::new(DEFAULT_ETA_INF, 1e-3).expect("default grid is integral"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOutcome {
    pub curvature: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// `f'(eta_inf) - 1` for the IVP `f(0) = f'(0) = 0`, `f''(0) = curvature`.
pub fn shoot(
    params: &ProblemParams,
    curvature: f64,
    grid: &GridSpec,
    policy: CurvaturePolicy,
) -> Result<f64, OracleError> {
    if !(curvature > 0.0 && curvature.is_finite()) {
        return Err(OracleError::BadCurvature(curvature));
    }
    let end =
        integrator::integrate_endpoint(params, &State::new(0.0, 0.0, curvature), grid, policy)
            .map_err(|source| OracleError::Integration { curvature, source })?;
    Ok(end.fp - 1.0)
}

/// Upper bound on bisections needed to shrink `width` below `curvature_tol`.
pub fn max_bisections(width: f64, curvature_tol: f64) -> usize {
    (width / curvature_tol).log2().ceil().max(0.0) as usize
}

pub fn solve_by_shooting(
    params: &ProblemParams,
    cfg: &ShootingConfig,
) -> Result<ShootingOutcome, OracleError> {
    cfg.validate()?;
    let residual = |c: f64| shoot(params, c, &cfg.grid, cfg.policy);
    let (mut lo, mut hi) = (cfg.bracket_lo, cfg.bracket_hi);
    let (res_lo, res_hi) = (residual(lo)?, residual(hi)?);
    if res_lo.signum() == res_hi.signum() && res_lo != 0.0 && res_hi != 0.0 {
        return Err(OracleError::NoSignChange {
            lo,
            hi,
            res_lo,
            res_hi,
        });
    }
    for (c, r) in [(lo, res_lo), (hi, res_hi)] {
        if r.abs() <= cfg.tol {
            return Ok(ShootingOutcome {
                curvature: c,
                residual: r,
                iterations: 0,
            });
        }
    }
    let lo_sign = res_lo.signum();
    let mut best = if res_lo.abs() < res_hi.abs() {
        (lo, res_lo)
    } else {
        (hi, res_hi)
    };
    for iterations in 1..=cfg.max_iter {
        let mid = 0.5 * (lo + hi);
        let r = residual(mid)?;
        if r.abs() < best.1.abs() {
            best = (mid, r);
        }
        if r.abs() <= cfg.tol || (hi - lo) * 0.5 <= cfg.curvature_tol {
            return Ok(ShootingOutcome {
                curvature: mid,
                residual: r,
                iterations,
            });
        }
        if r.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(OracleError::MaxIterations {
        iterations: cfg.max_iter,
        best: best.0,
        residual: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_params;

    #[test]
    fn residual_increases_with_curvature() {
        let params = make_params(1.5).unwrap();
        let grid = GridSpec::new(12.0, 1e-3).unwrap();
        let res: Vec<f64> = (1..=10)
            .map(|i| shoot(&params, i as f64 / 10.0, &grid, CurvaturePolicy::Extinction).unwrap())
            .collect();
        assert!(res.windows(2).all(|w| w[0] < w[1]), "{res:?}");
        assert!(res[0] < 0.0 && res[9] > 0.0);
    }

    #[test]
    fn bracket_without_sign_change_is_rejected() {
        let params = make_params(1.5).unwrap();
        let cfg = ShootingConfig::default().with_bracket(0.9, 1.0);
        assert!(matches!(
            solve_by_shooting(&params, &cfg),
            Err(OracleError::NoSignChange { .. })
        ));
        let cfg = ShootingConfig::default().with_bracket(1.0, 0.5);
        assert!(matches!(
            solve_by_shooting(&params, &cfg),
            Err(OracleError::BadConfig(_))
        ));
    }

    #[test]
    fn strict_policy_failure_becomes_bracket_advice() {
        let params = make_params(1.5).unwrap();
        let grid = GridSpec::new(12.0, 1e-2).unwrap();
        let err = shoot(&params, 0.5, &grid, CurvaturePolicy::Strict).unwrap_err();
        assert!(err.to_string().contains("narrower bracket"));
        assert!(matches!(
            shoot(&params, -0.5, &grid, CurvaturePolicy::Strict),
            Err(OracleError::BadCurvature(_))
        ));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let params = ProblemParams::newtonian();
        let mut cfg = ShootingConfig::new(GridSpec::new(10.0, 1e-2).unwrap());
        cfg.max_iter = 3;
        match solve_by_shooting(&params, &cfg) {
            Err(OracleError::MaxIterations {
                iterations, best, ..
            }) => {
                assert_eq!(iterations, 3);
                assert!((best - 0.332).abs() < 0.1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bisection_count_is_bounded() {
        let params = ProblemParams::newtonian();
        let mut cfg = ShootingConfig::new(GridSpec::new(10.0, 1e-2).unwrap());
        cfg.tol = 1e-300;
        cfg.curvature_tol = 1e-9;
        let out = solve_by_shooting(&params, &cfg).unwrap();
        assert!(out.iterations <= max_bisections(0.9, 1e-9));
        assert!((out.curvature - 0.332057).abs() < 1e-5);
    }
}
