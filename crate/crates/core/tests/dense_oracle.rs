//! The sparse engine against an explicit dense-matrix walk on a finite window.

mod common;

use common::{c, flip_2x2, hadamard_2x2, symmetric_spinor, DenseLineWalk};
use qwalk_core::engine::step;
use qwalk_core::{
    build_plan, coin_su2, construct_g, fidelity, inner_product, return_probability, run_plan,
    Complex, LatticeGeometry, PhaseData, PlanSpec, RunOptions, WalkState,
};
use std::f64::consts::{FRAC_PI_4, PI};

fn sparse_start() -> WalkState {
    WalkState::localized(LatticeGeometry::line(), &[0], &symmetric_spinor()).unwrap()
}

#[test]
fn two_step_values_from_dense_oracle() {
    let dense = DenseLineWalk::new(4, hadamard_2x2(), flip_2x2());
    let psi0 = dense.localized(symmetric_spinor());
    let psi1 = dense.evolve(&psi0, false);
    let psi2 = dense.evolve(&psi1, false);

    // Frozen from the oracle; both agree with the hand computation 1/2.
    let p0 = dense.return_probability(&psi2);
    let f2 = DenseLineWalk::fidelity(&psi0, &psi2);
    assert!((p0 - 0.5).abs() < 1e-15);
    assert!((f2 - 0.5).abs() < 1e-15);
    let overlap: Complex = psi0.iter().zip(&psi2).map(|(a, b)| a.conj() * b).sum();
    assert!((overlap - c(0.5, -0.5)).norm() < 1e-15);

    let had = coin_su2(FRAC_PI_4, 0.0, 0.0);
    let s0 = sparse_start();
    let s2 = step(&step(&s0, had.matrix()).unwrap(), had.matrix()).unwrap();
    assert!((return_probability(&s2, &[0]) - p0).abs() < 1e-15);
    assert!((fidelity(&s0, &s2).unwrap() - f2).abs() < 1e-15);
    assert!((inner_product(&s0, &s2).unwrap() - overlap).norm() < 1e-15);
}

#[test]
fn engine_matches_dense_walk_amplitude_by_amplitude() {
    let half = 20;
    let dense = DenseLineWalk::new(half, hadamard_2x2(), flip_2x2());
    let had = coin_su2(FRAC_PI_4, 0.0, 0.0);
    let g = construct_g(&PhaseData::new(vec![0.0, PI], PI).unwrap(), 2).unwrap();

    for spec in [
        PlanSpec::Free { steps: 15 },
        PlanSpec::W { l: 3, r: 3 },
        PlanSpec::Z { l: 4, m: 2, r: 2 },
    ] {
        let plan = build_plan(spec).unwrap();
        let opts = RunOptions {
            snapshot_steps: (0..=plan.len()).collect(),
            ..RunOptions::default()
        };
        let traj = run_plan(&sparse_start(), &had, Some(&g), &plan, &opts).unwrap();

        let mut psi = dense.localized(symmetric_spinor());
        for (i, kind) in plan.steps().iter().enumerate() {
            psi = dense.evolve(&psi, *kind == qwalk_core::StepKind::Intervention);
            let (t, snap) = &traj.snapshots[i + 1];
            assert_eq!(*t, i + 1);
            for x in -half..=half {
                for z in 0..2 {
                    let sparse = snap.get(&[x]).map_or(c(0.0, 0.0), |s| s[z]);
                    assert!(
                        (sparse - dense.amplitude(&psi, x, z)).norm() < 1e-13,
                        "{spec} t={t} x={x}"
                    );
                }
            }
        }
    }
}
