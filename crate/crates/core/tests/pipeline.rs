use blasius_nitm::convergence::{self, StudyConfig};
use blasius_nitm::integrator::{self, CurvaturePolicy, GridSpec};
use blasius_nitm::nitm::{self, SolveOptions};
use blasius_nitm::oracle::{self, ShootingConfig};
use blasius_nitm::{make_params, ProblemParams};
use proptest::prelude::*;

/// Shooting value on a fine grid, the reference for everything below.
fn reference(params: &ProblemParams) -> f64 {
    let grid = GridSpec::new(oracle::DEFAULT_ETA_INF, 1e-4).unwrap();
    oracle::solve_by_shooting(params, &ShootingConfig::new(grid))
        .unwrap()
        .curvature
}

fn extinction() -> SolveOptions {
    SolveOptions::default().with_policy(CurvaturePolicy::Extinction)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Below P ~ 1.25 the layer decays too slowly for eta*_inf = 5, and the
    // truncation error then depends on how far the scaled boundary moves.
    #[test]
    fn missing_ic_does_not_depend_on_star_curvature(
        p in 1.25f64..1.9,
        c in 0.5f64..2.0,
    ) {
        let params = make_params(p).unwrap();
        let grid = GridSpec::new(nitm::default_eta_inf_star(&params), 0.002).unwrap();
        let base = nitm::solve(&params, &grid, extinction()).unwrap();
        let other = nitm::solve(&params, &grid, extinction().with_curvature(c)).unwrap();
        prop_assert!((base.missing_ic - other.missing_ic).abs() < 1e-7,
            "P={p} c={c}: {} vs {}", base.missing_ic, other.missing_ic);
    }
}

#[test]
fn physical_profile_satisfies_the_equation() {
    for p in [1.0, 1.2] {
        let params = make_params(p).unwrap();
        let grid = GridSpec::new(5.0, 0.001).unwrap();
        let r = nitm::solve(&params, &grid, extinction().full()).unwrap();
        let residual =
            nitm::max_equation_residual(&params, r.physical_trajectory.as_ref().unwrap());
        assert!(residual < 1e-6, "P={p}: residual {residual}");
    }
}

#[test]
fn physical_profile_meets_boundary_conditions() {
    let params = make_params(1.5).unwrap();
    let grid = GridSpec::new(5.0, 0.001).unwrap();
    let r = nitm::solve(&params, &grid, extinction().full()).unwrap();
    let phys = r.physical_trajectory.as_ref().unwrap();
    let first = phys.first();
    let last = phys.last();
    assert_eq!((first.f, first.fp), (0.0, 0.0));
    assert!((last.fp - 1.0).abs() < 1e-12);
    assert!((r.eta_inf_physical - r.lambda.powf(-params.delta()) * 5.0).abs() < 1e-12);
}

#[test]
fn strict_trajectories_are_monotone() {
    for p in [1.0, 1.1, 1.3] {
        let params = make_params(p).unwrap();
        let grid = GridSpec::new(2.5, 0.005).unwrap();
        let r = nitm::solve(&params, &grid, SolveOptions::default().full()).unwrap();
        integrator::check_monotonicity(r.star_trajectory.as_ref().unwrap()).unwrap();
        integrator::check_monotonicity(r.physical_trajectory.as_ref().unwrap()).unwrap();
    }
}

#[test]
fn refinement_approaches_the_reference() {
    for p in [1.0, 1.25, 1.5] {
        let params = make_params(p).unwrap();
        let target = reference(&params);
        let cfg = StudyConfig::new(nitm::default_eta_inf_star(&params), 0.02, 2)
            .with_policy(CurvaturePolicy::Extinction);
        let study = convergence::run_study(&params, &cfg).unwrap();
        let coarse = (study.values[0] - target).abs();
        let fine = (study.values[1] - target).abs();
        assert!(fine < coarse, "P={p}: {coarse:e} -> {fine:e}");
    }
}

#[test]
fn extrapolated_diagonal_is_close_to_reference() {
    let params = make_params(1.5).unwrap();
    let target = reference(&params);
    let cfg = StudyConfig::new(5.0, 0.001, 6).with_policy(CurvaturePolicy::ComplexBranch);
    let study = convergence::run_study(&params, &cfg).unwrap();
    let tableau = convergence::extrapolate(&study, 3.0);
    let raw = (study.values[5] - target).abs();
    let diag = (tableau.get(5, 5).unwrap() - target).abs();
    assert!(diag < raw, "{diag:e} vs {raw:e}");
    assert!(diag < 5e-6);
}

#[test]
fn complex_branch_matches_extinction_before_the_curvature_vanishes() {
    // With eta*_inf = 2.5 the star curvature stays positive, so every
    // policy integrates the same real problem.
    let params = make_params(1.5).unwrap();
    let grid = GridSpec::new(2.5, 0.001).unwrap();
    let values: Vec<f64> = [
        CurvaturePolicy::Strict,
        CurvaturePolicy::Extinction,
        CurvaturePolicy::ComplexBranch,
    ]
    .into_iter()
    .map(|policy| {
        nitm::solve(&params, &grid, SolveOptions::default().with_policy(policy))
            .unwrap()
            .missing_ic
    })
    .collect();
    assert_eq!(values[0], values[1]);
    assert!((values[0] - values[2]).abs() < 1e-15);
}
