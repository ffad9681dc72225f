//! Mesh refinement, Richardson extrapolation and decimal-place certification.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::integrator::{CurvaturePolicy, GridError, GridSpec};
use crate::model::ProblemParams;
use crate::nitm::{self, NitmError, SolveOptions};

/// Denominator `4 - 1` used in the published extrapolation tables.
pub const DEFAULT_DENOMINATOR: f64 = 3.0;
/// Agreement tolerance corresponding to six decimal places.
pub const DEFAULT_TOLERANCE: f64 = 5e-7;
/// Largest decimal count reported for identical entries.
pub const MAX_DECIMALS: u32 = 15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvergenceError {
    #[error("a refinement study needs at least {needed} levels, got {got}")]
    TooFewLevels { needed: usize, got: usize },
    #[error("level {level} (h = {h}): {source}")]
    Grid {
        level: usize,
        h: f64,
        #[source]
        source: GridError,
    },
    #[error("level {level} (h = {h}): {source}")]
    Solve {
        level: usize,
        h: f64,
        #[source]
        source: NitmError,
    },
    #[error("successive differences vanish at level {level}; order is undefined")]
    DegenerateDifference { level: usize },
    #[error("study value at level {level} is not finite and positive: {value}")]
    BadValue { level: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyConfig {
    pub eta_inf_star: f64,
    pub h0: f64,
    pub levels: usize,
    pub policy: CurvaturePolicy,
    pub star_curvature: f64,
    pub parallel: bool,
}

impl StudyConfig {
    pub fn new(eta_inf_star: f64, h0: f64, levels: usize) -> Self {
        Self {
            eta_inf_star,
            h0,
            levels,
            policy: CurvaturePolicy::Strict,
            star_curvature: 1.0,
            parallel: true,
        }
    }

    pub fn with_policy(mut self, policy: CurvaturePolicy) -> Self {
        self.policy = policy;
        self
    }
}

/// Missing initial conditions `U_{g,0}` on steps `h0 * 2^-g`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementStudy {
    pub power_index: f64,
    pub eta_inf_star: f64,
    pub h0: f64,
    pub policy: CurvaturePolicy,
    pub values: Vec<f64>,
}

impl RefinementStudy {
    /// Wraps externally produced values (e.g. re-read from a file).
    pub fn from_values(
        power_index: f64,
        eta_inf_star: f64,
        h0: f64,
        policy: CurvaturePolicy,
        values: Vec<f64>,
    ) -> Result<Self, ConvergenceError> {
        if let Some((level, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(ConvergenceError::BadValue { level, value });
        }
        Ok(Self {
            power_index,
            eta_inf_star,
            h0,
            policy,
            values,
        })
    }

    pub fn levels(&self) -> usize {
        self.values.len()
    }

    /// `h0 * 2^-g`; exact in binary floating point.
    pub fn step(&self, level: usize) -> f64 {
        self.h0 * 0.5f64.powi(level as i32)
    }

    pub fn steps(&self) -> Vec<f64> {
        (0..self.levels()).map(|g| self.step(g)).collect()
    }
}

pub fn run_study(
    params: &ProblemParams,
    cfg: &StudyConfig,
) -> Result<RefinementStudy, ConvergenceError> {
    if cfg.levels < 2 {
        return Err(ConvergenceError::TooFewLevels {
            needed: 2,
            got: cfg.levels,
        });
    }
    let grids = (0..cfg.levels)
        .map(|level| {
            let h = cfg.h0 * 0.5f64.powi(level as i32);
            GridSpec::new(cfg.eta_inf_star, h).map_err(|source| ConvergenceError::Grid {
                level,
                h,
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let opts = SolveOptions::default()
        .with_policy(cfg.policy)
        .with_curvature(cfg.star_curvature);
    let one = |(level, grid): (usize, &GridSpec)| {
        nitm::solve(params, grid, opts)
            .map(|r| r.missing_ic)
            .map_err(|source| ConvergenceError::Solve {
                level,
                h: grid.h(),
                source,
            })
    };
    let values = if cfg.parallel {
        grids
            .par_iter()
            .enumerate()
            .map(one)
            .collect::<Result<Vec<_>, _>>()?
    } else {
        grids
            .iter()
            .enumerate()
            .map(one)
            .collect::<Result<Vec<_>, _>>()?
    };
    RefinementStudy::from_values(
        params.power_index(),
        cfg.eta_inf_star,
        cfg.h0,
        cfg.policy,
        values,
    )
}

/// Lower-triangular table `U_{g,k}`, `0 <= k <= g`.
#[derive(Debug, Clone, PartialEq)]
pub struct RichardsonTableau {
    pub denominator: f64,
    rows: Vec<Vec<f64>>,
}

impl RichardsonTableau {
    pub fn levels(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, g: usize, k: usize) -> Option<f64> {
        self.rows.get(g).and_then(|r| r.get(k)).copied()
    }

    pub fn row(&self, g: usize) -> &[f64] {
        &self.rows[g]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.get(k).copied()).collect()
    }

    /// Most extrapolated entry `U_{G-1,G-1}`.
    pub fn last_diagonal(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.last()).copied()
    }
}

/// Applies `U_{g+1,k+1} = U_{g+1,k} + (U_{g+1,k} - U_{g,k}) / denominator`.
pub fn extrapolate_values(values: &[f64], denominator: f64) -> RichardsonTableau {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    for (g, &u) in values.iter().enumerate() {
        let mut row = Vec::with_capacity(g + 1);
        row.push(u);
        for k in 0..g {
            let fine = row[k];
            let coarse = rows[g - 1][k];
            row.push(fine + (fine - coarse) / denominator);
        }
        rows.push(row);
    }
    RichardsonTableau { denominator, rows }
}

pub fn extrapolate(study: &RefinementStudy, denominator: f64) -> RichardsonTableau {
    extrapolate_values(&study.values, denominator)
}

/// `p_g = log2(|U_g - U_{g-1}| / |U_{g+1} - U_g|)` for `g = 1..G-2`.
pub fn observed_order(values: &[f64]) -> Result<Vec<f64>, ConvergenceError> {
    if values.len() < 3 {
        return Err(ConvergenceError::TooFewLevels {
            needed: 3,
            got: values.len(),
        });
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    if let Some(i) = diffs.iter().position(|d| *d == 0.0) {
        return Err(ConvergenceError::DegenerateDifference { level: i + 1 });
    }
    Ok(diffs.windows(2).map(|d| (d[0] / d[1]).log2()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// `U_{g+1,k} = U_{g,k}`: two grids agree at the same extrapolation level.
    MeshRefinement,
    /// `U_{g,k+1} = U_{g,k}`: one more extrapolation changes nothing.
    Extrapolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Equality(StopRule),
    WithinTolerance(StopRule),
    NoConvergence,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = |r: &StopRule| match r {
            StopRule::MeshRefinement => "mesh refinement",
            StopRule::Extrapolation => "extrapolation",
        };
        match self {
            StopReason::Equality(r) => write!(f, "{} rule (exact equality)", rule(r)),
            StopReason::WithinTolerance(r) => write!(f, "{} rule (within tolerance)", rule(r)),
            StopReason::NoConvergence => f.write_str("no convergence"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certification {
    pub value: f64,
    pub decimals: u32,
    pub stop: StopReason,
    /// Tableau position `(g, k)` of `value`.
    pub position: (usize, usize),
    /// Absolute difference of the agreeing pair.
    pub spread: f64,
}

impl Certification {
    pub fn converged(&self) -> bool {
        self.stop != StopReason::NoConvergence
    }

    /// `value` rounded to the certified number of decimals.
    pub fn rounded(&self) -> String {
        format!("{:.*}", self.decimals as usize, self.value)
    }
}

/// Number of decimals `d` such that two values differ by at most half a
/// unit in the `d`-th decimal place.
pub fn agreeing_decimals(a: f64, b: f64) -> u32 {
    let spread = (a - b).abs();
    (0..=MAX_DECIMALS)
        .take_while(|&d| spread <= 0.5 * 10f64.powi(-(d as i32)))
        .last()
        .unwrap_or(0)
}

/// Walks the tableau one grid at a time and stops at the first pair of
/// neighbouring entries agreeing within `tol`.
///
/// In row `g` the extrapolation pair `(U_{g,g-1}, U_{g,g})` is examined
/// first, then the refinement pairs `(U_{g-1,k}, U_{g,k})` from the highest
/// `k` downward. The certified value is the newer entry of the pair.
pub fn certify(tableau: &RichardsonTableau, tol: f64) -> Certification {
    for g in 1..tableau.levels() {
        let row = tableau.row(g);
        let prev = tableau.row(g - 1);
        let mut pairs = vec![(StopRule::Extrapolation, g, row[g - 1])];
        pairs.extend((0..g).rev().map(|k| (StopRule::MeshRefinement, k, prev[k])));
        for (rule, k, other) in pairs {
            let value = row[k];
            let spread = (value - other).abs();
            if spread <= tol {
                let stop = if spread == 0.0 {
                    StopReason::Equality(rule)
                } else {
                    StopReason::WithinTolerance(rule)
                };
                return Certification {
                    value,
                    decimals: agreeing_decimals(value, other),
                    stop,
                    position: (g, k),
                    spread,
                };
            }
        }
    }
    let g = tableau.levels().saturating_sub(1);
    Certification {
        value: tableau.last_diagonal().unwrap_or(f64::NAN),
        decimals: 0,
        stop: StopReason::NoConvergence,
        position: (g, g),
        spread: f64::INFINITY,
    }
}
