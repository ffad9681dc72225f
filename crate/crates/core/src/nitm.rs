//! Non-iterative transformation method.
//!
//! One initial value problem is integrated in star variables with
//! `f*(0) = f*'(0) = 0` and `f*''(0) = c`. The far-field slope fixes the
//! group parameter `lambda = f*'(eta*_inf)^(1/(1-delta))`, which gives the
//! wall curvature `f''(0) = lambda^(2 delta - 1) c` and, by rescaling, the
//! whole solution of the boundary value problem.

use thiserror::Error;

use crate::integrator::{
    self, CurvaturePolicy, Frame, GridSpec, IntegrationError, Storage, Trajectory,
};
use crate::model::{self, ProblemParams, State};

/// Star truncated boundary used for `P = 1`.
pub const NEWTONIAN_ETA_INF_STAR: f64 = 10.0;
/// Star truncated boundary used for `P > 1`.
pub const POWER_LAW_ETA_INF_STAR: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NitmError {
    #[error("far-field slope must be positive, got {0}")]
    NonPositiveSlope(f64),
    #[error("star initial curvature must be positive and finite, got {0}")]
    BadCurvature(f64),
    #[error("expected a star-frame trajectory, got {0}")]
    WrongFrame(Frame),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

pub fn default_eta_inf_star(params: &ProblemParams) -> f64 {
    if params.is_newtonian() {
        NEWTONIAN_ETA_INF_STAR
    } else {
        POWER_LAW_ETA_INF_STAR
    }
}

/// `lambda = fp_at_infinity^(1 / (1 - delta))`.
pub fn compute_lambda(params: &ProblemParams, fp_at_infinity: f64) -> Result<f64, NitmError> {
    if !(fp_at_infinity > 0.0 && fp_at_infinity.is_finite()) {
        return Err(NitmError::NonPositiveSlope(fp_at_infinity));
    }
    Ok(fp_at_infinity.powf(1.0 / (1.0 - params.delta())))
}

/// `f''(0) = lambda^(2 delta - 1) * star_curvature_at_0`.
pub fn missing_ic(params: &ProblemParams, lambda: f64, star_curvature_at_0: f64) -> f64 {
    lambda.powf(2.0 * params.delta() - 1.0) * star_curvature_at_0
}

/// Maps every node of a star trajectory to original variables.
pub fn rescale_trajectory(
    params: &ProblemParams,
    lambda: f64,
    star: &Trajectory,
) -> Result<Trajectory, NitmError> {
    if star.frame() != Frame::Star {
        return Err(NitmError::WrongFrame(star.frame()));
    }
    let stretch = lambda.powf(-params.delta());
    let states = star
        .states()
        .iter()
        .map(|s| model::scale_state(params, lambda, s))
        .collect();
    let grid = if lambda == 1.0 {
        *star.grid()
    } else {
        star.grid().stretched(stretch)
    };
    Ok(Trajectory::from_parts(grid, states, Frame::Physical))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub star_curvature: f64,
    pub policy: CurvaturePolicy,
    pub store: Storage,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            star_curvature: 1.0,
            policy: CurvaturePolicy::Strict,
            store: Storage::Endpoint,
        }
    }
}

impl SolveOptions {
    pub fn with_policy(mut self, policy: CurvaturePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_curvature(mut self, c: f64) -> Self {
        self.star_curvature = c;
        self
    }

    pub fn full(mut self) -> Self {
        self.store = Storage::Full;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NitmResult {
    pub lambda: f64,
    /// `f''(0)` in original variables.
    pub missing_ic: f64,
    pub eta_inf_star: f64,
    /// `lambda^(-delta) * eta_inf_star`.
    pub eta_inf_physical: f64,
    /// Star far-field slope `f*'(eta*_inf)`.
    pub star_far_slope: f64,
    pub star_curvature: f64,
    pub star_trajectory: Option<Trajectory>,
    pub physical_trajectory: Option<Trajectory>,
}

pub fn solve(
    params: &ProblemParams,
    grid: &GridSpec,
    opts: SolveOptions,
) -> Result<NitmResult, NitmError> {
    let c = opts.star_curvature;
    if !(c > 0.0 && c.is_finite()) {
        return Err(NitmError::BadCurvature(c));
    }
    let ic = State::new(0.0, 0.0, c);
    let star = integrator::integrate(params, &ic, grid, opts.policy, opts.store)?;
    let far = star.final_state();
    let lambda = compute_lambda(params, far.fp)?;
    let star_trajectory = star.into_trajectory();
    let physical_trajectory = star_trajectory
        .as_ref()
        .map(|t| rescale_trajectory(params, lambda, t))
        .transpose()?;
    Ok(NitmResult {
        lambda,
        missing_ic: missing_ic(params, lambda, c),
        eta_inf_star: grid.eta_end(),
        eta_inf_physical: model::physical_abscissa(params, lambda, grid.eta_end()),
        star_far_slope: far.fp,
        star_curvature: c,
        star_trajectory,
        physical_trajectory,
    })
}

/// Centered finite-difference residual of `f''' (f'')^(P-1) + f f'' / 2` at
/// interior nodes `2..len-2` of a physical trajectory, as max absolute value.
pub fn max_equation_residual(params: &ProblemParams, traj: &Trajectory) -> f64 {
    let h = traj.grid().h();
    let s = traj.states();
    let p = params.power_index();
    (2..s.len().saturating_sub(2))
        .filter(|&i| s[i].fpp > 0.0)
        .map(|i| {
            let fppp = (s[i + 1].fpp - s[i - 1].fpp) / (2.0 * h);
            (fppp * s[i].fpp.powf(p - 1.0) + 0.5 * s[i].f * s[i].fpp).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_params;

    #[test]
    fn lambda_examples() {
        for p in [1.0, 1.2, 1.5, 1.9] {
            assert_eq!(compute_lambda(&make_params(p).unwrap(), 1.0).unwrap(), 1.0);
        }
        let p15 = make_params(1.5).unwrap();
        assert!((compute_lambda(&p15, 32.0).unwrap() - 16.0).abs() < 1e-13);
        let p1 = ProblemParams::newtonian();
        assert_eq!(compute_lambda(&p1, 2.25).unwrap(), 1.5);
        assert!(matches!(
            compute_lambda(&p1, 0.0),
            Err(NitmError::NonPositiveSlope(_))
        ));
        assert!(matches!(
            compute_lambda(&p1, -3.0),
            Err(NitmError::NonPositiveSlope(_))
        ));
    }

    #[test]
    fn missing_ic_examples() {
        let p15 = make_params(1.5).unwrap();
        assert_eq!(missing_ic(&p15, 1.0, 1.0), 1.0);
        assert_eq!(missing_ic(&p15, 16.0, 1.0), 0.015625);
    }

    #[test]
    fn rescale_with_unit_lambda_only_retags() {
        let params = make_params(1.5).unwrap();
        let grid = GridSpec::new(2.0, 0.01).unwrap();
        let star = integrator::integrate_full(
            &params,
            &State::new(0.0, 0.0, 1.0),
            &grid,
            CurvaturePolicy::Strict,
            Frame::Star,
        )
        .unwrap();
        let phys = rescale_trajectory(&params, 1.0, &star).unwrap();
        assert_eq!(phys.frame(), Frame::Physical);
        assert_eq!(phys.states(), star.states());
        assert_eq!(phys.grid(), star.grid());
        assert_eq!(
            rescale_trajectory(&params, 2.0, &phys).unwrap_err(),
            NitmError::WrongFrame(Frame::Physical)
        );
    }

    #[test]
    fn solve_recovers_far_field_condition() {
        for (p, policy) in [
            (1.0, CurvaturePolicy::Strict),
            (1.5, CurvaturePolicy::ComplexBranch),
            (1.75, CurvaturePolicy::Extinction),
        ] {
            let params = make_params(p).unwrap();
            let grid = GridSpec::new(default_eta_inf_star(&params), 0.01).unwrap();
            let r = solve(
                &params,
                &grid,
                SolveOptions::default().with_policy(policy).full(),
            )
            .unwrap();
            let phys = r.physical_trajectory.as_ref().unwrap();
            assert!((phys.last().fp - 1.0).abs() < 1e-12);
            assert_eq!(phys.first().fpp, r.missing_ic);
            assert!(r.lambda > 1.0);
            assert!(r.eta_inf_physical > r.eta_inf_star);
            assert!((phys.grid().eta_end() - r.eta_inf_physical).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_curvature_rejected() {
        let grid = GridSpec::new(1.0, 0.1).unwrap();
        let params = ProblemParams::newtonian();
        for c in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                solve(&params, &grid, SolveOptions::default().with_curvature(c)),
                Err(NitmError::BadCurvature(_))
            ));
        }
    }

    #[test]
    fn strict_policy_surfaces_integration_error() {
        let params = make_params(1.5).unwrap();
        let grid = GridSpec::new(5.0, 0.001).unwrap();
        assert!(matches!(
            solve(&params, &grid, SolveOptions::default()),
            Err(NitmError::Integration(IntegrationError::Curvature { .. }))
        ));
    }

    #[test]
    fn equation_residual_shrinks_with_step() {
        let params = make_params(1.25).unwrap();
        let residual = |h: f64| {
            let grid = GridSpec::new(3.0, h).unwrap();
            let r = solve(&params, &grid, SolveOptions::default().full()).unwrap();
            max_equation_residual(&params, r.physical_trajectory.as_ref().unwrap())
        };
        let (coarse, mid, fine) = (residual(0.02), residual(0.01), residual(0.005));
        assert!(mid < coarse && fine < mid, "{coarse} {mid} {fine}");
        assert!(fine < 1e-4);
    }
}
