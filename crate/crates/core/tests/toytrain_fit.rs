#![allow(clippy::needless_range_loop)]

mod common;

use approx::assert_abs_diff_eq;
use coartic::coarticulation::{central_differences, max_relative_error};
use coartic::synth::{gen_viseme_track, StandardCorpus};
use coartic::toytrain::{ablate_window, fit, fit_model, init_model, Objective, TemporalBasis};
use coartic::{
    coarticulation_weights, Error, EvalPlan, FrameLoss, MeshSequence, ToyModel, TrainConfig,
    VertexRegionMask, WindowSpec,
};
use common::*;
use rand::Rng;

fn plan_for(gt: &MeshSequence) -> EvalPlan {
    EvalPlan::from_energy(
        VertexRegionMask::all(gt.num_vertices(), "lips").unwrap(),
        gt,
    )
    .unwrap()
}

/// Solves the weighted least-squares normal equations `Bᵀ W B c = Bᵀ W g`
/// densely with Gaussian elimination and partial pivoting.
fn weighted_lstsq(basis: &TemporalBasis, n: usize, w: &[f64], g: &[f64]) -> Vec<f64> {
    let k = basis.num_basis();
    let b: Vec<Vec<f64>> = (0..n)
        .map(|t| {
            let u = TemporalBasis::frame_position(t, n);
            (0..k).map(|j| basis.eval(j, u)).collect()
        })
        .collect();
    let mut a = vec![vec![0.0; k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = (0..n).map(|t| w[t] * b[t][i] * b[t][j]).sum();
        }
        a[i][k] = (0..n).map(|t| w[t] * b[t][i] * g[t]).sum();
    }
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for row in 0..k {
            if row != col {
                let f = a[row][col] / a[col][col];
                for c in col..=k {
                    a[row][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..k).map(|i| a[i][k] / a[i][i]).collect()
}

#[test]
fn zero_model_predicts_zeros_and_bump_is_linear() {
    let basis = TemporalBasis::cubic(5).unwrap();
    let zero = ToyModel::zeros(basis.clone(), 3, 30.0);
    let p = zero.predict(11).unwrap();
    assert!(p.as_flat().iter().flatten().all(|c| *c == 0.0));

    let mut coef = vec![[0.0; 3]; 5 * 3];
    coef[2 * 3 + 1] = [1.0, 0.0, 0.0];
    let model = ToyModel::with_coefficients(basis.clone(), 3, coef, 30.0).unwrap();
    let p = model.predict(11).unwrap();
    for t in 0..11 {
        let bump = basis.eval(2, TemporalBasis::frame_position(t, 11));
        assert_eq!(p.frame(t)[1][0], bump);
        assert_eq!(p.frame(t)[0], [0.0; 3]);
    }
}

#[test]
fn target_in_span_is_fitted_exactly() {
    let mut r = rng(30);
    let (n, k, v) = (40, 8, 3);
    let basis = TemporalBasis::cubic(k).unwrap();
    let coef: Vec<[f64; 3]> = (0..k * v)
        .map(|_| std::array::from_fn(|_| r.gen_range(-1.0..1.0)))
        .collect();
    let gt = ToyModel::with_coefficients(basis, v, coef, 30.0)
        .unwrap()
        .predict(n)
        .unwrap();
    let cfg = TrainConfig {
        capacity: Some(k),
        learning_rate: 0.1,
        steps: 4000,
        ..TrainConfig::default()
    };
    let (_, report) = fit(&gt, &cfg, &plan_for(&gt)).unwrap();
    assert!(
        report.final_frame_loss <= 1e-6,
        "{}",
        report.final_frame_loss
    );
}

#[test]
fn converges_to_weighted_least_squares_solution() {
    let mut r = rng(31);
    let (n, k, v) = (30, 6, 2);
    let gt = random_sequence(&mut r, n, v, 1.0);
    for loss_choice in [FrameLoss::Rec, FrameLoss::Pc] {
        let cfg = TrainConfig {
            loss_choice,
            capacity: Some(k),
            learning_rate: 0.05,
            steps: 6000,
            sigma: 1,
            ..TrainConfig::default()
        };
        let (model, _) = fit(&gt, &cfg, &plan_for(&gt)).unwrap();
        let w = match loss_choice {
            FrameLoss::Rec => vec![1.0; n],
            FrameLoss::Pc => coarticulation_weights(&gt, &WindowSpec::new(1))
                .unwrap()
                .weights()
                .to_vec(),
        };
        let basis = TemporalBasis::cubic(k).unwrap();
        for i in 0..v {
            for c in 0..3 {
                let g: Vec<f64> = (0..n).map(|t| gt.frame(t)[i][c]).collect();
                let want = weighted_lstsq(&basis, n, &w, &g);
                for (j, wv) in want.iter().enumerate() {
                    assert_abs_diff_eq!(model.coefficients()[j * v + i][c], *wv, epsilon = 1e-6);
                }
            }
        }
    }
}

#[test]
fn full_capacity_identity_basis_reproduces_targets() {
    let mut r = rng(32);
    let gt = random_sequence(&mut r, 12, 4, 1.0);
    let basis = TemporalBasis::identity(12).unwrap();
    let model = init_model(basis, 4, 30.0, 1e-3, 0);
    let cfg = TrainConfig {
        learning_rate: 0.2,
        steps: 200,
        ..TrainConfig::default()
    };
    let (fitted, report) = fit_model(model, &gt, &cfg, &plan_for(&gt)).unwrap();
    assert!(report.final_frame_loss <= 1e-12);
    let pred = fitted.predict(12).unwrap();
    for (a, b) in pred
        .as_flat()
        .iter()
        .flatten()
        .zip(gt.as_flat().iter().flatten())
    {
        assert_abs_diff_eq!(a, b, epsilon = 1e-7);
    }
    // the capacity check in `fit` refuses K = T
    let cfg = TrainConfig {
        capacity: Some(12),
        ..cfg
    };
    assert!(matches!(
        fit(&gt, &cfg, &plan_for(&gt)),
        Err(Error::InvalidConfig(_))
    ));
}

#[test]
fn loss_curve_is_monotone_for_stable_rates() {
    let mut r = rng(33);
    let gt = random_sequence(&mut r, 50, 3, 1.0);
    for (loss_choice, vel) in [(FrameLoss::Rec, 0.0), (FrameLoss::Pc, 0.5)] {
        let cfg = TrainConfig {
            loss_choice,
            vel_coefficient: vel,
            capacity: Some(10),
            steps: 300,
            learning_rate: 0.02,
            ..TrainConfig::default()
        };
        let (_, report) = fit(&gt, &cfg, &plan_for(&gt)).unwrap();
        assert_eq!(report.loss_curve.len(), 300);
        for w in report.loss_curve.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
        assert!(report.metrics.fve >= 0.0 && report.metrics.ldtw >= 0.0);
    }
}

#[test]
fn training_is_deterministic() {
    let spec = &StandardCorpus::default().specs().unwrap()[0];
    let (gt, ann) = gen_viseme_track(spec).unwrap();
    let plan = EvalPlan::from_annotation(StandardCorpus::default().lips().unwrap(), &ann);
    let cfg = TrainConfig {
        loss_choice: FrameLoss::Pc,
        capacity: Some(30),
        steps: 100,
        seed: 9,
        ..TrainConfig::default()
    };
    let a = fit(&gt, &cfg, &plan).unwrap();
    let b = fit(&gt, &cfg, &plan).unwrap();
    assert_eq!(a, b);
    let other = fit(&gt, &TrainConfig { seed: 10, ..cfg }, &plan).unwrap();
    assert_ne!(a.0, other.0);
}

#[test]
fn chained_gradient_matches_finite_differences() {
    let mut r = rng(34);
    for trial in 0..10 {
        let n = r.gen_range(5..20);
        let v = r.gen_range(1..4);
        let k = r.gen_range(1..n.min(7));
        let gt = random_sequence(&mut r, n, v, 1.0);
        let cfg = TrainConfig {
            loss_choice: if trial % 2 == 0 {
                FrameLoss::Pc
            } else {
                FrameLoss::Rec
            },
            vel_coefficient: r.gen_range(0.0..2.0),
            sigma: r.gen_range(0..3),
            holdout_every: (trial % 3 == 0).then_some(3),
            ..TrainConfig::default()
        };
        let model = init_model(TemporalBasis::cubic(k).unwrap(), v, 30.0, 1.0, trial);
        let objective = Objective::new(&gt, model.basis(), &cfg).unwrap();
        let (_, grad) = objective.value_and_gradient(&model);
        let theta: Vec<f64> = model.coefficients().iter().flatten().copied().collect();
        let mut probe = model.clone();
        let numeric = central_differences(
            |x| {
                for (c, p) in probe.coefficients_mut().iter_mut().zip(x.chunks(3)) {
                    *c = [p[0], p[1], p[2]];
                }
                objective.value(&probe)
            },
            &theta,
            1e-4,
        );
        let analytic: Vec<f64> = grad.iter().flatten().copied().collect();
        assert!(max_relative_error(&analytic, &numeric, 1e-6) <= 1e-4);
    }
}

#[test]
fn zero_steps_keeps_initialization() {
    let mut r = rng(35);
    let gt = random_sequence(&mut r, 20, 2, 1.0);
    let cfg = TrainConfig {
        steps: 0,
        capacity: Some(5),
        seed: 4,
        ..TrainConfig::default()
    };
    let (model, report) = fit(&gt, &cfg, &plan_for(&gt)).unwrap();
    assert!(report.loss_curve.is_empty());
    let init = init_model(TemporalBasis::cubic(5).unwrap(), 2, 30.0, cfg.init_scale, 4);
    assert_eq!(model, init);
}

#[test]
fn divergence_reports_the_step() {
    let mut r = rng(36);
    let gt = random_sequence(&mut r, 20, 2, 1.0);
    let cfg = TrainConfig {
        learning_rate: 50.0,
        steps: 5000,
        capacity: Some(5),
        ..TrainConfig::default()
    };
    match fit(&gt, &cfg, &plan_for(&gt)) {
        Err(Error::Diverged { step, .. }) => assert!(step > 0 && step < 5000),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn ablation_table_shape() {
    let mut r = rng(37);
    let gt = random_sequence(&mut r, 24, 3, 1.0);
    let cfg = TrainConfig {
        steps: 50,
        capacity: Some(6),
        ..TrainConfig::default()
    };
    let plan = plan_for(&gt);
    let t = ablate_window(&gt, &cfg, &[2], &plan).unwrap();
    assert_eq!(t.rows.len(), 2);
    assert_eq!(t.baseline().sigma, None);
    assert_eq!(t.window_rows()[0].sigma, Some(2));
    let t = ablate_window(&gt, &cfg, &[], &plan).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert!(t.sigmas_beating_baseline().is_empty());
}

#[test]
fn holdout_evaluates_only_held_out_frames() {
    let mut r = rng(38);
    let gt = random_sequence(&mut r, 30, 2, 1.0);
    let cfg = TrainConfig {
        steps: 20,
        capacity: Some(5),
        holdout_every: Some(5),
        ..TrainConfig::default()
    };
    let (_, report) = fit(&gt, &cfg, &plan_for(&gt)).unwrap();
    assert_eq!(report.metrics.per_frame_fve.len(), 6);
}
