//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::Arc;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qwalk_core::coins::fourier_coin;
use qwalk_core::engine::{apply_shift, step};
use qwalk_core::kspace::default_torus_size;
use qwalk_core::state::{max_amplitude_difference, random_spinor};
use qwalk_core::{
    build_plan, check_admissible, coin_su2, construct_g, grover_coin, hadamard_coin, partial_polya,
    random_admissible_coin, return_probability, run_plan, torus_evolve, verify_identities, CMatrix,
    CoinSpec, Complex, LatticeGeometry, PlanSpec, PolyaKind, RunOptions, UnitaryMatrix,
    VerifyConfig, WalkState,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn hadamard_1d() -> (CoinSpec, UnitaryMatrix) {
    let coin = coin_su2(FRAC_PI_4, 0.0, 0.0);
    let g = UnitaryMatrix::from_rows(&[
        vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)],
        vec![Complex::new(-1.0, 0.0), Complex::new(0.0, 0.0)],
    ])
    .unwrap();
    (coin, g)
}

fn symmetric_start() -> WalkState {
    WalkState::localized(LatticeGeometry::line(), &[0], &common::symmetric_spinor()).unwrap()
}

fn revival_error(
    s0: &WalkState,
    coin: &CoinSpec,
    g: &UnitaryMatrix,
    spec: PlanSpec,
    t: usize,
) -> Result<f64, String> {
    let plan = build_plan(spec).map_err(|e| e.to_string())?;
    let traj =
        run_plan(s0, coin, Some(g), &plan, &RunOptions::default()).map_err(|e| e.to_string())?;
    let f = traj
        .fidelity_at(t)
        .ok_or_else(|| format!("no fidelity at t={t}"))?;
    Ok((f - 1.0).abs())
}

fn random_state(geometry: &Arc<LatticeGeometry>, sites: usize, rng: &mut ChaCha8Rng) -> WalkState {
    let d = geometry.dim();
    let positions: Vec<Vec<i64>> = (0..sites)
        .map(|_| (0..d).map(|_| rng.random_range(-4..=4)).collect())
        .collect();
    WalkState::random(geometry.clone(), &positions, rng).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (coin, g) = hadamard_1d();
    let s0 = symmetric_start();
    let e3 = revival_error(&s0, &coin, &g, PlanSpec::W { l: 3, r: 2 }, 8)?;
    let e7 = revival_error(&s0, &coin, &g, PlanSpec::W { l: 7, r: 2 }, 16)?;
    let elapsed = start.elapsed();
    ensure(e3 <= 1e-10, || format!("|F(8) - 1| = {e3:.3e}"))?;
    ensure(e7 <= 1e-10, || format!("|F(16) - 1| = {e7:.3e}"))?;
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "|F(8)-1| = {e3:.1e}, |F(16)-1| = {e7:.1e}, {elapsed:.2?}"
    ))
}

fn criterion_2() -> Outcome {
    let (coin, g) = hadamard_1d();
    let line = Arc::new(LatticeGeometry::line());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut states = Vec::new();
    for _ in 0..100 {
        states.push(WalkState::localized(line.clone(), &[0], &random_spinor(2, &mut rng)).unwrap());
    }
    for _ in 0..20 {
        states.push(random_state(&line, 3, &mut rng));
    }
    for s0 in &states {
        worst = worst.max(revival_error(s0, &coin, &g, PlanSpec::W { l: 3, r: 2 }, 8)?);
        worst = worst.max(revival_error(
            s0,
            &coin,
            &g,
            PlanSpec::W { l: 7, r: 2 },
            16,
        )?);
    }
    ensure(worst <= 1e-9, || format!("worst |F - 1| = {worst:.3e}"))?;
    Ok(format!(
        "{} initial states, worst |F-1| = {worst:.1e}",
        states.len()
    ))
}

fn criterion_3() -> Outcome {
    let (coin, _) = hadamard_1d();
    let plan = build_plan(PlanSpec::Free { steps: 100 }).map_err(|e| e.to_string())?;
    let traj = run_plan(
        &symmetric_start(),
        &coin,
        None,
        &plan,
        &RunOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let series =
        partial_polya(&traj.fidelity_values(), PolyaKind::Fsr).map_err(|e| e.to_string())?;
    let max = series.partials.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    ensure(series.partials.len() == 100, || {
        format!("{} partials", series.partials.len())
    })?;
    ensure(max < 1.0 - 1e-6, || format!("max partial = {max:.15}"))?;
    ensure(series.first_unity.is_none(), || "first_unity set".into())?;
    Ok(format!("max partial over n <= 100 = {max:.9}"))
}

fn identity_check(
    geometry: &LatticeGeometry,
    coin: &CoinSpec,
    config: &VerifyConfig,
) -> Result<usize, String> {
    let phases = check_admissible(coin, 1e-10).ok_or("coin not admissible")?;
    let g = construct_g(&phases, coin.dim()).map_err(|e| e.to_string())?;
    let reports =
        verify_identities(geometry, coin, &g, &phases, config).map_err(|e| e.to_string())?;
    for r in &reports {
        ensure(r.pass, || {
            format!("{} deviates by {:.3e}", r.identity.name(), r.max_deviation)
        })?;
        ensure(r.samples >= 100, || format!("only {} samples", r.samples))?;
    }
    ensure(reports.len() == 5, || {
        format!("{} identity families", reports.len())
    })?;
    Ok(reports[0].samples)
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let config = VerifyConfig {
        l_max: 10,
        samples: 100,
        tol: 1e-11,
        seed: 4,
    };
    let line = LatticeGeometry::line();
    let plane = LatticeGeometry::standard(2).unwrap();
    identity_check(&line, &coin_su2(FRAC_PI_4, 0.0, 0.0), &config)
        .map_err(|e| format!("hadamard 2: {e}"))?;
    identity_check(&plane, &hadamard_coin(4).unwrap(), &config)
        .map_err(|e| format!("hadamard 4: {e}"))?;
    identity_check(&plane, &grover_coin(4).unwrap(), &config)
        .map_err(|e| format!("grover 4: {e}"))?;
    let mut count = 0;
    for c in [2usize, 4, 6] {
        let geometry = LatticeGeometry::standard(c / 2).unwrap();
        for seed in 0..70u64 {
            let (coin, _) =
                random_admissible_coin(c, 1000 * c as u64 + seed).map_err(|e| e.to_string())?;
            let cfg = VerifyConfig { seed, ..config };
            identity_check(&geometry, &coin, &cfg)
                .map_err(|e| format!("random c={c} seed={seed}: {e}"))?;
            count += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "3 named + {count} random coins, 5 identities each, {elapsed:.2?}"
    ))
}

fn same_up_to_phase(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    let Some((i, _)) = b.iter().enumerate().find(|(_, z)| z.norm() > 0.5) else {
        return false;
    };
    let phase = a[i] / b[i];
    (phase.norm() - 1.0).abs() <= tol
        && a.iter()
            .zip(b.iter())
            .all(|(x, y)| (x - phase * y).norm() <= tol)
}

fn antidiagonal(values: &[f64]) -> CMatrix {
    let c = values.len();
    CMatrix::from_fn(c, c, |i, j| {
        if i + j == c - 1 {
            Complex::new(values[i], 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    })
}

fn criterion_5() -> Outcome {
    let h = check_admissible(&hadamard_coin(4).unwrap(), 1e-10).ok_or("hadamard 4 rejected")?;
    let expected = [0.0, PI, PI, 0.0];
    let phase_ok = h
        .phases
        .iter()
        .zip(expected)
        .all(|(a, b)| qwalk_core::coins::angle_distance(*a, b) < 1e-9);
    ensure(phase_ok, || format!("hadamard 4 phases {:?}", h.phases))?;
    ensure(
        qwalk_core::coins::angle_distance(h.conjugation_phase, 0.0) < 1e-9,
        || format!("hadamard 4 Phi = {}", h.conjugation_phase),
    )?;
    let gh = construct_g(&h, 4).map_err(|e| e.to_string())?;
    ensure(
        same_up_to_phase(gh.matrix(), &antidiagonal(&[1.0, -1.0, -1.0, 1.0]), 1e-12),
        || "hadamard 4 G is not antidiag(1,-1,-1,1)".into(),
    )?;

    let gr = check_admissible(&grover_coin(4).unwrap(), 1e-10).ok_or("grover 4 rejected")?;
    let equal = gr
        .phases
        .iter()
        .all(|p| qwalk_core::coins::angle_distance(*p, gr.phases[0]) < 1e-9);
    ensure(equal, || format!("grover 4 phases {:?}", gr.phases))?;
    let gg = construct_g(&gr, 4).map_err(|e| e.to_string())?;
    ensure(
        same_up_to_phase(gg.matrix(), &antidiagonal(&[1.0; 4]), 1e-12),
        || "grover 4 G is not antidiag(1,1,1,1)".into(),
    )?;

    ensure(
        check_admissible(&fourier_coin(4).unwrap(), 1e-10).is_none(),
        || "fourier 4 accepted".into(),
    )?;
    Ok("hadamard 4 and grover 4 certified, fourier 4 rejected".into())
}

fn planar_coins() -> Vec<(&'static str, CoinSpec, UnitaryMatrix)> {
    [
        ("grover", grover_coin(4).unwrap()),
        ("hadamard", hadamard_coin(4).unwrap()),
    ]
    .into_iter()
    .map(|(name, coin)| {
        let phases = check_admissible(&coin, 1e-10).unwrap();
        let g = construct_g(&phases, 4).unwrap();
        (name, coin, g)
    })
    .collect()
}

fn criterion_6() -> Outcome {
    let plane = Arc::new(LatticeGeometry::standard(2).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut runs = 0;
    for (name, coin, g) in planar_coins() {
        for l in 1..=5 {
            for sites in [1, 3] {
                for _ in 0..4 {
                    let s0 = random_state(&plane, sites, &mut rng);
                    let e = revival_error(&s0, &coin, &g, PlanSpec::W { l, r: 2 }, 2 * (l + 1))?;
                    ensure(e <= 1e-9, || format!("{name} l={l}: |F-1| = {e:.3e}"))?;
                    worst = worst.max(e);
                    runs += 1;
                }
            }
        }
    }
    Ok(format!("{runs} runs, worst |F-1| = {worst:.1e}"))
}

fn criterion_7() -> Outcome {
    let plane = Arc::new(LatticeGeometry::standard(2).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut runs = 0;
    for (name, coin, g) in planar_coins() {
        for l in 0..=5 {
            for m in 0..=l {
                if l == 0 {
                    ensure(build_plan(PlanSpec::Z { l, m, r: 2 }).is_err(), || {
                        "l = 0 accepted".into()
                    })?;
                    continue;
                }
                for sites in [1, 3] {
                    let s0 = random_state(&plane, sites, &mut rng);
                    let e = revival_error(&s0, &coin, &g, PlanSpec::Z { l, m, r: 2 }, 2 * (l + 1))?;
                    ensure(e <= 1e-9, || format!("{name} l={l} m={m}: |F-1| = {e:.3e}"))?;
                    worst = worst.max(e);
                    runs += 1;
                }
            }
        }
    }
    Ok(format!(
        "{runs} runs over 1 <= l <= 5, 0 <= m <= l, worst |F-1| = {worst:.1e}"
    ))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let d = [1usize, 2, 1, 2, 3][i as usize % 5];
        let t_max = if d == 3 { 8 } else { 30 };
        let t = rng.random_range(1..=t_max);
        let c = 2 * d;
        let (coin, phases) = random_admissible_coin(c, 800 + i).map_err(|e| e.to_string())?;
        let g = construct_g(&phases, c).map_err(|e| e.to_string())?;
        let geometry = Arc::new(LatticeGeometry::standard(d).unwrap());
        let s0 = random_state(&geometry, rng.random_range(1..=3), &mut rng);
        let spec = match i % 3 {
            0 => PlanSpec::Free { steps: t },
            1 => PlanSpec::W {
                l: t.max(2) - 1,
                r: 1,
            },
            _ => PlanSpec::Z {
                l: t.max(2) - 1,
                m: (t - 1) / 2,
                r: 1,
            },
        };
        let plan = build_plan(spec).map_err(|e| e.to_string())?;
        let torus = torus_evolve(&s0, &coin, Some(&g), &plan, default_torus_size(plan.len()))
            .map_err(|e| e.to_string())?;
        let sparse = run_plan(&s0, &coin, Some(&g), &plan, &RunOptions::default())
            .map_err(|e| e.to_string())?
            .final_state;
        let diff = max_amplitude_difference(&torus, &sparse).map_err(|e| e.to_string())?;
        ensure(diff <= 1e-10, || {
            format!("config {i} (d={d}, {spec}): diff {diff:.3e}")
        })?;
        worst = worst.max(diff);
    }
    Ok(format!(
        "20 configs, worst amplitude difference {worst:.1e}"
    ))
}

fn criterion_9() -> Outcome {
    let dense = common::DenseLineWalk::new(3, common::hadamard_2x2(), common::flip_2x2());
    let psi0 = dense.localized(common::symmetric_spinor());
    let psi2 = dense.evolve(&dense.evolve(&psi0, false), false);
    let oracle_p0 = dense.return_probability(&psi2);
    let oracle_f = common::DenseLineWalk::fidelity(&psi0, &psi2);
    ensure((oracle_p0 - 0.5).abs() < 1e-15, || {
        format!("oracle p0(2) = {oracle_p0}")
    })?;
    ensure((oracle_f - 0.5).abs() < 1e-15, || {
        format!("oracle F(2) = {oracle_f}")
    })?;

    let (coin, g) = hadamard_1d();
    let plan = build_plan(PlanSpec::Free { steps: 2 }).map_err(|e| e.to_string())?;
    let opts = RunOptions {
        return_origin: Some(vec![0]),
        ..RunOptions::default()
    };
    let traj =
        run_plan(&symmetric_start(), &coin, Some(&g), &plan, &opts).map_err(|e| e.to_string())?;
    let f2 = traj.fidelity_at(2).ok_or("missing F(2)")?;
    let p2 = return_probability(&traj.final_state, &[0]);
    ensure((f2 - 0.5).abs() < 1e-15, || format!("engine F(2) = {f2}"))?;
    ensure((p2 - 0.5).abs() < 1e-15, || format!("engine p0(2) = {p2}"))?;
    Ok(format!("p0(2) = {p2}, F(2) = {f2}"))
}

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&strategy, test)
        .map_err(|e| format!("{name}: {e}"))
}

fn criterion_10() -> Outcome {
    let (coin, g) = hadamard_1d();
    let mut s = symmetric_start();
    let mut drift = 0.0f64;
    for t in 0..10_000 {
        let m = if t % 8 == 0 { &g } else { coin.matrix() };
        s = step(&s, m).map_err(|e| e.to_string())?;
        drift = drift.max((s.norm() - 1.0).abs());
    }
    ensure(drift <= 1e-10, || {
        format!("norm drift {drift:.3e} over 10^4 steps")
    })?;

    run_property(
        "norm",
        (any::<u64>(), 1usize..=3, 1usize..60),
        |(seed, d, steps)| {
            let (coin, _) = random_admissible_coin(2 * d, seed).unwrap();
            let geometry = Arc::new(LatticeGeometry::standard(d).unwrap());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = random_state(&geometry, 3, &mut rng);
            for _ in 0..steps {
                s = step(&s, coin.matrix()).unwrap();
            }
            prop_assert!((s.norm() - 1.0).abs() <= 1e-10);
            Ok(())
        },
    )?;

    run_property(
        "monotonicity",
        prop::collection::vec(0.0f64..=1.0, 0..300),
        |series| {
            let p = partial_polya(&series, PolyaKind::Fsr).unwrap();
            for w in p.partials.windows(2) {
                prop_assert!(w[1].1 >= w[0].1);
            }
            Ok(())
        },
    )?;

    run_property(
        "shift permutation",
        (any::<u64>(), 1usize..=3, 1usize..16),
        |(seed, d, sites)| {
            let geometry = Arc::new(LatticeGeometry::standard(d).unwrap());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_state(&geometry, sites, &mut rng);
            let moduli = |s: &WalkState| {
                let mut v: Vec<u64> = s
                    .iter()
                    .flat_map(|(_, sp)| sp.iter().map(|z| z.norm().to_bits()))
                    .filter(|b| *b != 0)
                    .collect();
                v.sort_unstable();
                v
            };
            prop_assert_eq!(moduli(&s), moduli(&apply_shift(&s)));
            Ok(())
        },
    )?;

    Ok(format!(
        "10^4-step drift {drift:.1e}; 3 properties x 1000 cases"
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1D Hadamard revival period", criterion_1),
        ("revival independent of initial state", criterion_2),
        ("no revival without interventions", criterion_3),
        ("quasi-momentum identities", criterion_4),
        ("admissibility certificates", criterion_5),
        ("2D W-plan revival", criterion_6),
        ("Z-plan revival", criterion_7),
        ("torus oracle equivalence", criterion_8),
        ("hand-derived two-step values", criterion_9),
        ("invariant suite", criterion_10),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
