//! Classical fourth-order Runge-Kutta with constant step on a uniform grid.

use std::fmt;
use std::ops::{Add, Mul};

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{self, ModelError, ProblemParams, State};

/// Relative residual allowed between `n_steps * h` and `eta_end`.
pub const GRID_INTEGRALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("truncated boundary must be positive and finite, got {0}")]
    BadEnd(f64),
    #[error("step size must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("step {h} does not divide the interval [0, {eta_end}] into a whole number of steps")]
    NotIntegral { eta_end: f64, h: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("step {step} (eta = {eta}): {source}")]
    Curvature {
        step: usize,
        eta: f64,
        #[source]
        source: ModelError,
    },
    #[error("non-finite state at step {step} (eta = {eta})")]
    NonFinite { step: usize, eta: f64 },
}

impl IntegrationError {
    pub fn step(&self) -> usize {
        match self {
            Self::Curvature { step, .. } | Self::NonFinite { step, .. } => *step,
        }
    }
}

/// Uniform grid `0, h, 2h, ..., n_steps h = eta_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    eta_end: f64,
    h: f64,
    n_steps: usize,
}

impl GridSpec {
    /// Rounds `eta_end / h` to the nearest integer and rejects the grid unless
    /// that count reproduces `eta_end` to [`GRID_INTEGRALITY_TOL`].
    pub fn new(eta_end: f64, h: f64) -> Result<Self, GridError> {
        if !(eta_end.is_finite() && eta_end > 0.0) {
            return Err(GridError::BadEnd(eta_end));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(GridError::BadStep(h));
        }
        let n = (eta_end / h).round();
        if n < 1.0
            || n > u32::MAX as f64
            || (n * h - eta_end).abs() > GRID_INTEGRALITY_TOL * eta_end
        {
            return Err(GridError::NotIntegral { eta_end, h });
        }
        Ok(Self {
            eta_end,
            h,
            n_steps: n as usize,
        })
    }

    /// Grid with the same step count whose abscissae are multiplied by `factor`.
    pub(crate) fn stretched(&self, factor: f64) -> Self {
        Self {
            eta_end: self.eta_end * factor,
            h: self.h * factor,
            n_steps: self.n_steps,
        }
    }

    pub fn eta_end(&self) -> f64 {
        self.eta_end
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Abscissa of node `i`, computed as `i * h` (no accumulation).
    pub fn abscissa(&self, i: usize) -> f64 {
        i as f64 * self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Star,
    Physical,
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Frame::Star => "star",
            Frame::Physical => "physical",
        })
    }
}

/// States on every node of a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: GridSpec,
    states: Vec<State>,
    frame: Frame,
}

impl Trajectory {
    pub(crate) fn from_parts(grid: GridSpec, states: Vec<State>, frame: Frame) -> Self {
        assert_eq!(states.len(), grid.n_steps + 1, "one state per node");
        Self {
            grid,
            states,
            frame,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn first(&self) -> &State {
        &self.states[0]
    }

    pub fn last(&self) -> &State {
        &self.states[self.states.len() - 1]
    }

    pub fn abscissa(&self, i: usize) -> f64 {
        self.grid.abscissa(i)
    }

    /// `(eta_i, state_i)` pairs.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, &State)> + '_ {
        self.states
            .iter()
            .enumerate()
            .map(move |(i, s)| (self.grid.abscissa(i), s))
    }
}

/// What to do once the curvature `f''` reaches zero for `P > 1`.
///
/// With `P > 1` the curvature of the exact solution vanishes at a finite
/// abscissa and stays zero afterwards, so an integration carried past that
/// point must choose a continuation. `P = 1` never triggers any of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CurvaturePolicy {
    /// Fail with the step index and abscissa.
    #[default]
    Strict,
    /// Use `max(f'', 0)^(2-P)` and project `f''` back onto `f'' >= 0` after
    /// every step: the curvature dies out and `f'` freezes.
    Extinction,
    /// Carry the state in complex arithmetic with the principal branch of
    /// `(f'')^(2-P)` and report real parts. This is the behaviour of
    /// integrating the same formula in an environment that silently promotes
    /// negative bases to complex numbers; it reproduces the published
    /// refinement tables but converges only at first order.
    ComplexBranch,
}

impl CurvaturePolicy {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Strict => "strict",
            Self::Extinction => "extinction",
            Self::ComplexBranch => "complex",
        }
    }
}

impl std::str::FromStr for CurvaturePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(Self::Strict),
            "extinction" => Ok(Self::Extinction),
            "complex" => Ok(Self::ComplexBranch),
            other => Err(format!(
                "unknown curvature policy '{other}' (expected strict, extinction or complex)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Storage {
    Full,
    #[default]
    Endpoint,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Integration {
    Full(Trajectory),
    Endpoint(State),
}

impl Integration {
    pub fn final_state(&self) -> State {
        match self {
            Integration::Full(t) => *t.last(),
            Integration::Endpoint(s) => *s,
        }
    }

    pub fn into_trajectory(self) -> Option<Trajectory> {
        match self {
            Integration::Full(t) => Some(t),
            Integration::Endpoint(_) => None,
        }
    }
}

/// One RK4 update of a triple for an arbitrary field.
fn rk4_generic<T, E>(
    y: [T; 3],
    h: f64,
    mut field: impl FnMut(&[T; 3]) -> Result<[T; 3], E>,
) -> Result<[T; 3], E>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    let offset = |k: &[T; 3], c: f64| [y[0] + k[0] * c, y[1] + k[1] * c, y[2] + k[2] * c];
    let k1 = field(&y)?;
    let k2 = field(&offset(&k1, 0.5 * h))?;
    let k3 = field(&offset(&k2, 0.5 * h))?;
    let k4 = field(&offset(&k3, h))?;
    let sixth = h / 6.0;
    let mut out = y;
    for i in 0..3 {
        out[i] = y[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * sixth;
    }
    Ok(out)
}

/// RK4 step for a caller-supplied field; lets tests drive the scheme with
/// equations other than the Blasius family.
pub fn rk4_step_with<E>(
    s: &State,
    h: f64,
    mut field: impl FnMut(&State) -> Result<State, E>,
) -> Result<State, E> {
    rk4_generic(s.to_array(), h, |y| {
        field(&State::from_array(*y)).map(State::to_array)
    })
    .map(State::from_array)
}

/// One RK4 step of the model right-hand side. Fails on a non-positive
/// curvature at any stage when `P != 1`.
pub fn rk4_step(params: &ProblemParams, s: &State, h: f64) -> Result<State, ModelError> {
    rk4_step_with(s, h, |y| model::rhs(params, y))
}

fn extinction_step(params: &ProblemParams, s: &State, h: f64) -> State {
    let exponent = params.curvature_exponent();
    let field = |y: &State| -> Result<State, std::convert::Infallible> {
        let source = if params.is_newtonian() {
            y.fpp
        } else if y.fpp > 0.0 {
            y.fpp.powf(exponent)
        } else {
            0.0
        };
        Ok(State::new(y.fp, y.fpp, -0.5 * y.f * source))
    };
    let Ok(mut next) = rk4_step_with(s, h, field);
    if !params.is_newtonian() && next.fpp < 0.0 {
        next.fpp = 0.0;
    }
    next
}

fn complex_step(params: &ProblemParams, y: [Complex64; 3], h: f64) -> [Complex64; 3] {
    let exponent = params.curvature_exponent();
    let newtonian = params.is_newtonian();
    let field = |y: &[Complex64; 3]| -> Result<[Complex64; 3], std::convert::Infallible> {
        let source = if newtonian {
            y[2]
        } else if y[2].im == 0.0 && y[2].re >= 0.0 {
            Complex64::new(y[2].re.powf(exponent), 0.0)
        } else {
            y[2].powf(exponent)
        };
        Ok([y[1], y[2], y[0] * source * -0.5])
    };
    let Ok(next) = rk4_generic(y, h, field);
    next
}

/// Sequential stepper shared by the storage modes.
struct Stepper<'a> {
    params: &'a ProblemParams,
    policy: CurvaturePolicy,
    h: f64,
    real: State,
    complex: [Complex64; 3],
}

impl<'a> Stepper<'a> {
    fn new(params: &'a ProblemParams, ic: State, h: f64, policy: CurvaturePolicy) -> Self {
        Self {
            params,
            policy,
            h,
            real: ic,
            complex: ic.to_array().map(|x| Complex64::new(x, 0.0)),
        }
    }

    /// Advances from node `step` to node `step + 1`.
    fn advance(&mut self, step: usize) -> Result<State, IntegrationError> {
        let eta = step as f64 * self.h;
        let next = match self.policy {
            CurvaturePolicy::Strict => {
                let next = rk4_step(self.params, &self.real, self.h)
                    .map_err(|source| IntegrationError::Curvature { step, eta, source })?;
                if !self.params.is_newtonian() && !(next.fpp > 0.0) {
                    return Err(IntegrationError::Curvature {
                        step: step + 1,
                        eta: (step + 1) as f64 * self.h,
                        source: ModelError::NonPositiveCurvature {
                            fpp: next.fpp,
                            power_index: self.params.power_index(),
                        },
                    });
                }
                next
            }
            CurvaturePolicy::Extinction => extinction_step(self.params, &self.real, self.h),
            CurvaturePolicy::ComplexBranch => {
                self.complex = complex_step(self.params, self.complex, self.h);
                State::from_array(self.complex.map(|z| z.re))
            }
        };
        let complex_ok = self.policy != CurvaturePolicy::ComplexBranch
            || self.complex.iter().all(|z| z.im.is_finite());
        if !next.is_finite() || !complex_ok {
            return Err(IntegrationError::NonFinite {
                step: step + 1,
                eta: (step + 1) as f64 * self.h,
            });
        }
        self.real = next;
        Ok(next)
    }
}

fn check_initial(
    params: &ProblemParams,
    ic: &State,
    policy: CurvaturePolicy,
) -> Result<(), IntegrationError> {
    if !ic.is_finite() {
        return Err(IntegrationError::NonFinite { step: 0, eta: 0.0 });
    }
    if policy == CurvaturePolicy::Strict && !params.is_newtonian() && !(ic.fpp > 0.0) {
        return Err(IntegrationError::Curvature {
            step: 0,
            eta: 0.0,
            source: ModelError::NonPositiveCurvature {
                fpp: ic.fpp,
                power_index: params.power_index(),
            },
        });
    }
    Ok(())
}

/// Integrates from `eta = 0` to `grid.eta_end()` in `grid.n_steps()` steps.
pub fn integrate(
    params: &ProblemParams,
    ic: &State,
    grid: &GridSpec,
    policy: CurvaturePolicy,
    store: Storage,
) -> Result<Integration, IntegrationError> {
    Ok(match store {
        Storage::Full => Integration::Full(integrate_full(params, ic, grid, policy, Frame::Star)?),
        Storage::Endpoint => Integration::Endpoint(integrate_endpoint(params, ic, grid, policy)?),
    })
}

/// Full trajectory, tagged with `frame`.
pub fn integrate_full(
    params: &ProblemParams,
    ic: &State,
    grid: &GridSpec,
    policy: CurvaturePolicy,
    frame: Frame,
) -> Result<Trajectory, IntegrationError> {
    check_initial(params, ic, policy)?;
    let mut states = Vec::with_capacity(grid.n_steps + 1);
    states.push(*ic);
    let mut stepper = Stepper::new(params, *ic, grid.h, policy);
    for step in 0..grid.n_steps {
        states.push(stepper.advance(step)?);
    }
    Ok(Trajectory::from_parts(*grid, states, frame))
}

/// Final state only, in constant memory.
pub fn integrate_endpoint(
    params: &ProblemParams,
    ic: &State,
    grid: &GridSpec,
    policy: CurvaturePolicy,
) -> Result<State, IntegrationError> {
    check_initial(params, ic, policy)?;
    let mut stepper = Stepper::new(params, *ic, grid.h, policy);
    let mut last = *ic;
    for step in 0..grid.n_steps {
        last = stepper.advance(step)?;
    }
    Ok(last)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonotonicityViolation {
    #[error("f'' = {fpp:e} is not positive at node {node}")]
    NonPositiveCurvature { node: usize, fpp: f64 },
    #[error("f'' does not decrease between nodes {node} and {}", node + 1)]
    CurvatureNotDecreasing { node: usize },
    #[error("f' does not increase between nodes {node} and {}", node + 1)]
    SlopeNotIncreasing { node: usize },
}

/// Checks `f'' > 0`, `f''` strictly decreasing and `f'` strictly increasing.
///
/// A stalled `f'` is accepted only where the increment `h f''` is below
/// the spacing of doubles at `f'`, i.e. where no binary64 value could
/// represent the increase.
pub fn check_monotonicity(traj: &Trajectory) -> Result<(), MonotonicityViolation> {
    let h = traj.grid().h();
    let states = traj.states();
    for (node, s) in states.iter().enumerate() {
        if !(s.fpp > 0.0) {
            return Err(MonotonicityViolation::NonPositiveCurvature { node, fpp: s.fpp });
        }
    }
    for (node, pair) in states.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        if !(b.fpp < a.fpp) {
            return Err(MonotonicityViolation::CurvatureNotDecreasing { node });
        }
        let unrepresentable = h * a.fpp < f64::EPSILON * a.fp.abs();
        if !(b.fp > a.fp || (b.fp == a.fp && unrepresentable)) {
            return Err(MonotonicityViolation::SlopeNotIncreasing { node });
        }
    }
    Ok(())
}
