mod common;

use common::qp;
use dsvkernel::kernel::{gram, KernelConfig};
use dsvkernel::linalg::Matrix;
use dsvkernel::rng::SplitMix64;
use dsvkernel::svm::{decision_value, dual_objective, fit_binary, sign, solve_dual, SvmConfig};
use proptest::prelude::*;

struct Instance {
    points: Vec<Vec<f64>>,
    labels: Vec<f64>,
    gamma: f64,
    c: f64,
}

fn instance(seed: u64) -> Instance {
    let mut rng = SplitMix64::new(seed);
    let m = 3 + rng.below(6) as usize;
    let points: Vec<Vec<f64>> = (0..m)
        .map(|_| vec![2.0 * rng.next_f64() - 1.0, 2.0 * rng.next_f64() - 1.0])
        .collect();
    let mut labels: Vec<f64> = (0..m)
        .map(|_| if rng.next_f64() < 0.5 { 1.0 } else { -1.0 })
        .collect();
    labels[0] = 1.0;
    labels[1] = -1.0;
    let gamma = 0.5 + 2.5 * rng.next_f64();
    let c = [0.5, 1.0, 10.0][rng.below(3) as usize];
    Instance {
        points,
        labels,
        gamma,
        c,
    }
}

fn config(inst: &Instance) -> SvmConfig {
    SvmConfig::new(KernelConfig::direct(inst.gamma).unwrap())
        .with_c(inst.c)
        .with_tol(1e-10)
        .with_max_passes(10_000)
}

#[test]
fn smo_matches_exhaustive_qp() {
    for seed in 0..30 {
        let inst = instance(seed);
        let x = Matrix::from_rows(&inst.points).unwrap();
        let model = fit_binary(&x, &inst.labels, &config(&inst), seed).unwrap();
        assert!(model.converged, "seed {seed}");
        let k = qp::kernel_matrix(&inst.points, inst.gamma);
        let oracle = qp::solve(&k, &inst.labels, inst.c);
        assert!(
            (model.objective - oracle.objective).abs() <= 1e-6,
            "seed {seed}: smo {} vs oracle {}",
            model.objective,
            oracle.objective
        );
        let mut rng = SplitMix64::new(1000 + seed);
        for _ in 0..100 {
            let p = [2.0 * rng.next_f64() - 1.0, 2.0 * rng.next_f64() - 1.0];
            let ours = decision_value(&model, &p).unwrap();
            let theirs = qp::decision(&inst.points, &inst.labels, &oracle, inst.gamma, &p);
            assert!(
                (ours - theirs).abs() <= 1e-5,
                "seed {seed}: {ours} vs {theirs}"
            );
            if theirs.abs() > 1e-5 {
                assert_eq!(sign(ours), sign(theirs), "seed {seed}");
            }
        }
    }
}

#[test]
fn objective_never_decreases() {
    for seed in 0..10 {
        let inst = instance(seed + 50);
        let x = Matrix::from_rows(&inst.points).unwrap();
        let g = gram(&x, inst.gamma).unwrap();
        let sol = solve_dual(&g, &inst.labels, &config(&inst), seed).unwrap();
        let mut prev = 0.0;
        for &obj in &sol.objective_trace {
            assert!(obj >= prev - 1e-12, "seed {seed}: {prev} -> {obj}");
            prev = obj;
        }
        assert_eq!(dual_objective(&g, &inst.labels, &sol.alphas), sol.objective);
    }
}

#[test]
fn training_is_deterministic() {
    let inst = instance(7);
    let x = Matrix::from_rows(&inst.points).unwrap();
    let a = fit_binary(&x, &inst.labels, &config(&inst), 11).unwrap();
    let b = fit_binary(&x, &inst.labels, &config(&inst), 11).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dual_feasibility(seed in 0u64..10_000, c in 0.1f64..20.0) {
        let inst = Instance { c, ..instance(seed) };
        let x = Matrix::from_rows(&inst.points).unwrap();
        let g = gram(&x, inst.gamma).unwrap();
        let cfg = SvmConfig::new(KernelConfig::direct(inst.gamma).unwrap()).with_c(c);
        let sol = solve_dual(&g, &inst.labels, &cfg, seed).unwrap();
        let balance: f64 = sol.alphas.iter().zip(&inst.labels).map(|(a, y)| a * y).sum();
        prop_assert!(balance.abs() <= 1e-9 * c.max(1.0));
        for a in &sol.alphas {
            prop_assert!(*a >= 0.0 && *a <= c);
        }
        // any feasible point bounds the optimum from below
        prop_assert!(sol.objective >= -1e-12);
    }
}
