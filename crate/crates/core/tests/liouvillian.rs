mod common;

use atomlaser::liouvillian::{
    apply_rhs, build_superoperator, evolve, max_stable_step, steady_state, steady_state_with,
    unvectorize, vectorize, ConstraintRow, SolveMethod, SteadyStateOptions,
};
use atomlaser::observables::{moments, photon_distribution};
use atomlaser::strong_coupling::exact_distribution;
use atomlaser::{DensityMatrix, ModelParams, SpaceConfig, C64};
use nalgebra::DMatrix;

use common::{random_params, random_state, reference_rhs, rng, space};

fn fixed_space_opts() -> SteadyStateOptions {
    SteadyStateOptions {
        adaptive: false,
        tail_threshold: 1.0,
        ..Default::default()
    }
}

#[test]
fn rhs_matches_dense_reference() {
    let mut r = rng(11);
    for n_max in [1, 3, 6] {
        for _ in 0..5 {
            let rho = random_state(&mut r, space(n_max));
            let p = random_params(&mut r);
            let got = apply_rhs(&rho, p).unwrap();
            let want = reference_rhs(&rho, p);
            assert!(got.approx_eq(&want, 1e-12), "n_max {n_max}, {p:?}");
        }
    }
}

#[test]
fn superoperator_matches_rhs() {
    let mut r = rng(12);
    let sp = space(4);
    let p = ModelParams::new(0.8, 0.3, 0.6).unwrap();
    let l = build_superoperator(p, sp);
    for _ in 0..5 {
        let rho = random_state(&mut r, sp);
        let v = vectorize(rho.matrix());
        let lv: Vec<C64> = (0..l.rows())
            .map(|i| l.row(i).iter().zip(&v).map(|(a, b)| a * b).sum())
            .collect();
        let via_l = unvectorize(&lv, sp.dim()).unwrap();
        let direct = apply_rhs(&rho, p).unwrap();
        assert!(via_l.approx_eq(&direct, 1e-12));
    }
}

#[test]
fn rhs_is_traceless() {
    let mut r = rng(13);
    for _ in 0..20 {
        let rho = random_state(&mut r, space(5));
        let p = random_params(&mut r);
        let tr = apply_rhs(&rho, p).unwrap().trace();
        assert!(tr.norm() < 1e-12, "trace {tr}");
    }
}

#[test]
fn trace_functional_annihilates_superoperator() {
    let sp = space(3);
    let d = sp.dim();
    let l = build_superoperator(ModelParams::new(1.2, 0.4, 0.9).unwrap(), sp);
    for col in 0..l.cols() {
        let s: C64 = (0..d).map(|i| l[(i * d + i, col)]).sum();
        assert!(s.norm() < 1e-13);
    }
}

#[test]
fn uncoupled_generator_has_degenerate_kernel() {
    let sp = space(1);
    let l = build_superoperator(ModelParams::new(0.0, 0.0, 0.0).unwrap(), sp);
    let sv = l.to_dmatrix().singular_values();
    let null = sv.iter().filter(|&&s| s < 1e-12).count();
    assert!(null >= 2, "null space dimension {null}");
    let err = steady_state(ModelParams::new(0.0, 0.0, 0.0).unwrap(), sp, 1e-9).unwrap_err();
    assert!(matches!(err, atomlaser::Error::Degenerate(_)));
}

#[test]
fn sub_poissonian_near_optimum() {
    let t = std::f64::consts::FRAC_1_SQRT_2;
    let res = steady_state(
        ModelParams::matched(t).unwrap(),
        SpaceConfig::default(),
        1e-9,
    )
    .unwrap();
    let q = moments(&res.rho).q.unwrap();
    assert!((q + 0.15).abs() < 0.02, "Q = {q}");
}

#[test]
fn heavy_loss_quenches_field() {
    let res = steady_state(
        ModelParams::matched(5.0).unwrap(),
        SpaceConfig::default(),
        1e-9,
    )
    .unwrap();
    let m = moments(&res.rho);
    assert!(m.n1 < 0.03, "<n> = {}", m.n1);
    assert!(m.d > 0.9, "inversion {}", m.d);
}

#[test]
fn weak_loss_approaches_exact_distribution() {
    let res = steady_state(
        ModelParams::matched(0.05).unwrap(),
        SpaceConfig::default(),
        1e-9,
    )
    .unwrap();
    let exact = exact_distribution(1e-17).unwrap();
    let tv = photon_distribution(&res.rho).total_variation(exact.probs());
    assert!(tv < 0.05, "TV = {tv}");
}

#[test]
fn constraint_row_does_not_matter() {
    let sp = space(12);
    let p = ModelParams::new(0.9, 0.2, 0.7).unwrap();
    let base = steady_state_with(p, sp, &fixed_space_opts()).unwrap();
    for idx in [
        sp.index(0, 0),
        sp.index(1, 0),
        sp.index(0, 3),
        sp.index(1, 5),
    ] {
        let opts = SteadyStateOptions {
            constraint: ConstraintRow::Population(idx),
            ..fixed_space_opts()
        };
        let other = steady_state_with(p, sp, &opts).unwrap();
        assert_eq!(other.constraint_index, idx);
        let diff = (base.rho.matrix() - other.rho.matrix()).max_abs();
        assert!(diff < 1e-8, "row {idx}: {diff:e}");
    }
}

#[test]
fn sector_and_full_solves_agree() {
    let sp = space(6);
    for p in [
        ModelParams::matched(0.5).unwrap(),
        ModelParams::new(1.5, 0.4, 0.8).unwrap(),
    ] {
        let sector = steady_state_with(p, sp, &fixed_space_opts()).unwrap();
        let full = steady_state_with(
            p,
            sp,
            &SteadyStateOptions {
                method: SolveMethod::Full,
                ..fixed_space_opts()
            },
        )
        .unwrap();
        let diff = (sector.rho.matrix() - full.rho.matrix()).max_abs();
        assert!(diff < 1e-10, "{p:?}: {diff:e}");
    }
}

#[test]
fn truncation_is_converged() {
    for tau in [0.05, 0.3, 0.7, 1.5, 3.0, 5.0] {
        let p = ModelParams::matched(tau).unwrap();
        let a = steady_state(p, space(20), 1e-9).unwrap();
        let b = steady_state(p, space(30), 1e-9).unwrap();
        let (ma, mb) = (moments(&a.rho), moments(&b.rho));
        assert!((ma.n1 - mb.n1).abs() < 1e-8, "tau {tau}");
        assert!((ma.n2 - mb.n2).abs() < 1e-8, "tau {tau}");
        let tv = photon_distribution(&a.rho).total_variation(photon_distribution(&b.rho).probs());
        assert!(tv < 1e-8, "tau {tau}: {tv:e}");
    }
}

#[test]
fn solutions_are_physical() {
    let mut r = rng(14);
    for _ in 0..8 {
        let p = ModelParams::new(
            rand::Rng::gen_range(&mut r, 0.1..2.0),
            rand::Rng::gen_range(&mut r, 0.0..1.0),
            rand::Rng::gen_range(&mut r, 0.1..2.0),
        )
        .unwrap();
        let res = steady_state(p, SpaceConfig::default(), 1e-9).unwrap();
        assert!(res.rho.matrix().hermiticity_error() < 1e-10);
        assert!((res.rho.matrix().trace().re - 1.0).abs() < 1e-10);
        assert!(res.rho.min_eigenvalue() > -1e-8);
        assert!(res.residual_norm <= 1e-9);
    }
}

#[test]
fn evolution_relaxes_to_steady_state() {
    let sp = space(10);
    let p = ModelParams::matched(0.5).unwrap();
    let rho0 = DensityMatrix::basis_state(sp, SpaceConfig::ATOM_LOWER, 0).unwrap();
    let dt = max_stable_step(p, sp);
    let late = evolve(&rho0, p, 200.0, dt).unwrap();
    let ss = steady_state_with(p, sp, &fixed_space_opts()).unwrap();
    let dist = late.trace_distance(&ss.rho).unwrap();
    assert!(dist < 1e-4, "trace distance {dist:e}");
}

#[test]
fn halving_the_step_barely_changes_the_result() {
    let sp = space(8);
    let p = ModelParams::matched(1.0).unwrap();
    let rho0 = DensityMatrix::basis_state(sp, SpaceConfig::ATOM_UPPER, 0).unwrap();
    let dt = max_stable_step(p, sp);
    let coarse = evolve(&rho0, p, 10.0, dt).unwrap();
    let fine = evolve(&rho0, p, 10.0, dt / 2.0).unwrap();
    let diff = (coarse.matrix() - fine.matrix()).max_abs();
    assert!(diff < 1e-8, "{diff:e}");
}

#[test]
fn evolution_contracts_trace_distance() {
    let mut r = rng(15);
    let sp = space(4);
    for _ in 0..10 {
        let p = random_params(&mut r);
        let a = random_state(&mut r, sp);
        let b = random_state(&mut r, sp);
        let dt = max_stable_step(p, sp);
        let before = a.trace_distance(&b).unwrap();
        let after = evolve(&a, p, 1.0, dt)
            .unwrap()
            .trace_distance(&evolve(&b, p, 1.0, dt).unwrap())
            .unwrap();
        assert!(after <= before + 1e-9, "{after} > {before}");
    }
}

/// Smallest non-zero decay rate of the generator.
fn gap(tau: f64, n_max: usize) -> f64 {
    let l = build_superoperator(ModelParams::matched(tau).unwrap(), space(n_max));
    assert!(l.as_slice().iter().all(|z| z.im == 0.0));
    let real = DMatrix::from_fn(l.rows(), l.cols(), |r, c| l[(r, c)].re);
    real.complex_eigenvalues()
        .iter()
        .map(|z| z.re.abs())
        .filter(|&x| x > 1e-9)
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn relaxation_slows_at_weak_loss() {
    let slow = gap(0.05, 10);
    let fast = gap(0.5, 10);
    assert!(slow < fast, "{slow} vs {fast}");
    assert!(slow < 0.1 && fast > 0.2);
}

#[test]
fn vectorize_roundtrip() {
    let mut r = rng(16);
    let m = common::random_matrix(&mut r, 5, 5);
    assert_eq!(unvectorize(&vectorize(&m), 5).unwrap(), m);
    assert!(unvectorize(&vectorize(&m), 4).is_err());
}
