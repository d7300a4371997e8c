mod common;

use approx::assert_abs_diff_eq;
use coartic::coarticulation::{
    central_differences, finite_difference_gradient, flatten, grad_loss_pc, grad_loss_rec,
    grad_loss_vel, max_relative_error, motion_energies, motion_energy, softmax,
};
use coartic::{
    coarticulation_weights, loss_pc, loss_rec, loss_vel, BoundaryPolicy, CoarticulationWeights,
    Error, MeshSequence, WindowSpec,
};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn micro() -> MeshSequence {
    MeshSequence::new(
        vec![
            vec![[0.0, 0.0, 0.0]],
            vec![[1.0, 0.0, 0.0]],
            vec![[1.0, 0.0, 0.0]],
        ],
        30.0,
    )
    .unwrap()
}

#[test]
fn micro_example_energies_and_weights() {
    let w = coarticulation_weights(&micro(), &WindowSpec::new(1)).unwrap();
    assert_eq!(w.raw_energy(), &[1.0, 0.5, 0.5]);
    let expected = [0.45186, 0.27407, 0.27407];
    for (got, want) in w.weights().iter().zip(expected) {
        assert_abs_diff_eq!(*got, want, epsilon = 1e-5);
    }
    // e / (e + 2 e^0.5) from the closed form
    let e = std::f64::consts::E;
    assert_abs_diff_eq!(w.weights()[0], e / (e + 2.0 * e.sqrt()), epsilon = 1e-15);
}

#[test]
fn motion_energy_single_frame_matches_vector() {
    let mut r = rng(1);
    for _ in 0..50 {
        let n = r.gen_range(2..20);
        let v = r.gen_range(1..5);
        let seq = random_sequence(&mut r, n, v, 1.0);
        let sigma = r.gen_range(0..4);
        let spec = WindowSpec::new(sigma);
        let all = motion_energies(&seq, &spec).unwrap();
        for (t, e) in all.iter().enumerate() {
            assert_eq!(motion_energy(&seq, t, &spec).unwrap(), *e);
        }
    }
}

#[test]
fn clamp_energies_match_one_based_oracle() {
    let mut r = rng(2);
    for _ in 0..200 {
        let n = r.gen_range(2..30);
        let v = r.gen_range(1..6);
        let seq = random_sequence(&mut r, n, v, 2.0);
        let sigma = r.gen_range(0..6);
        let got = motion_energies(&seq, &WindowSpec::new(sigma)).unwrap();
        let want = energies_oracle(&nested(&seq), sigma);
        for (g, w) in got.iter().zip(&want) {
            assert_abs_diff_eq!(*g, *w, epsilon = 1e-12);
        }
        let weights = coarticulation_weights(&seq, &WindowSpec::new(sigma)).unwrap();
        for (g, w) in weights.weights().iter().zip(softmax_oracle(&want)) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-12);
        }
    }
}

#[test]
fn strict_policy_interior_and_errors() {
    let seq = micro();
    // sigma 0: frames 1 and 2 have their own step, frame 0 borrows frame 1's
    let e = motion_energies(&seq, &WindowSpec::strict(0)).unwrap();
    assert_eq!(e, vec![1.0, 1.0, 0.0]);
    // T = 3, sigma = 1 leaves one interior frame
    let e = motion_energies(&seq, &WindowSpec::strict(1)).unwrap();
    assert_eq!(e, vec![0.5, 0.5, 0.5]);
    let err = motion_energies(&seq, &WindowSpec::strict(2)).unwrap_err();
    assert!(matches!(err, Error::Window(_)));
    assert!(err.to_string().contains("T > 2*sigma"), "{err}");
    assert!(motion_energy(&seq, 0, &WindowSpec::strict(1)).is_err());
    let w = WindowSpec::new(1).with_policy(BoundaryPolicy::Strict);
    assert_eq!(w, WindowSpec::strict(1));
}

#[test]
fn strict_matches_clamp_on_interior_frames() {
    let mut r = rng(3);
    for _ in 0..100 {
        let sigma = r.gen_range(0..4);
        let n = r.gen_range((2 * sigma + 1).max(2)..2 * sigma + 20);
        let seq = random_sequence(&mut r, n, 3, 1.0);
        let clamp = motion_energies(&seq, &WindowSpec::new(sigma)).unwrap();
        let strict = motion_energies(&seq, &WindowSpec::strict(sigma)).unwrap();
        for t in sigma.max(1)..n - sigma {
            assert_eq!(clamp[t], strict[t]);
        }
    }
}

#[test]
fn static_sequence_has_zero_energy() {
    let seq = MeshSequence::constant(&[[0.2, 0.1, -3.0], [1.0, 1.0, 1.0]], 7, 30.0).unwrap();
    for sigma in 0..5 {
        let e = motion_energies(&seq, &WindowSpec::new(sigma)).unwrap();
        assert!(e.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn too_short_and_bad_temperature() {
    let one = MeshSequence::constant(&[[0.0; 3]], 1, 30.0).unwrap();
    assert!(matches!(
        coarticulation_weights(&one, &WindowSpec::default()),
        Err(Error::TooShort { .. })
    ));
    let spec = WindowSpec {
        temperature: 0.0,
        ..WindowSpec::default()
    };
    assert!(coarticulation_weights(&micro(), &spec).is_err());
}

#[test]
fn temperature_flattens_weights() {
    let seq = micro();
    let hot = WindowSpec {
        temperature: 1e6,
        ..WindowSpec::new(1)
    };
    let w = coarticulation_weights(&seq, &hot).unwrap();
    for v in w.weights() {
        assert_abs_diff_eq!(*v, 1.0 / 3.0, epsilon = 1e-6);
    }
}

#[test]
fn softmax_handles_large_inputs() {
    let w = softmax(&[1000.0, 1000.0, 999.0], 1.0);
    assert!(w.iter().all(|v| v.is_finite()));
    assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(w[0], w[1], epsilon = 0.0);
}

#[test]
fn from_parts_validates() {
    assert!(CoarticulationWeights::from_parts(vec![0.5, 0.5], vec![0.0, 0.0], 1).is_ok());
    assert!(CoarticulationWeights::from_parts(vec![0.6, 0.5], vec![0.0, 0.0], 1).is_err());
    assert!(CoarticulationWeights::from_parts(vec![1.0, 0.0], vec![0.0, 0.0], 1).is_err());
    assert!(CoarticulationWeights::from_parts(vec![1.0], vec![], 1).is_err());
}

#[test]
fn losses_match_longhand_sums() {
    let mut r = rng(4);
    for _ in 0..100 {
        let n = r.gen_range(2..15);
        let v = r.gen_range(1..6);
        let gt = random_sequence(&mut r, n, v, 1.0);
        let pred = random_sequence(&mut r, n, v, 1.0);
        let g = nested(&gt);
        let p = nested(&pred);

        let rec: f64 = (0..n).map(|t| frame_sq(&g[t], &p[t])).sum();
        assert_abs_diff_eq!(loss_rec(&gt, &pred).unwrap().total, rec, epsilon = 1e-12);

        let mut vel = 0.0;
        for t in 1..n {
            for i in 0..v {
                for c in 0..3 {
                    let d = (g[t][i][c] - g[t - 1][i][c]) - (p[t][i][c] - p[t - 1][i][c]);
                    vel += d * d;
                }
            }
        }
        let report = loss_vel(&gt, &pred).unwrap();
        assert_abs_diff_eq!(report.total, vel, epsilon = 1e-12);
        assert_eq!(report.first_frame, 1);
        assert_eq!(report.per_frame.len(), n - 1);

        let sigma = r.gen_range(0..4);
        let w = softmax_oracle(&energies_oracle(&g, sigma));
        let pc: f64 = (0..n).map(|t| w[t] * frame_sq(&g[t], &p[t])).sum();
        let weights = coarticulation_weights(&gt, &WindowSpec::new(sigma)).unwrap();
        assert_abs_diff_eq!(
            loss_pc(&gt, &pred, &weights).unwrap().total,
            pc,
            epsilon = 1e-12
        );
    }
}

#[test]
fn loss_shape_mismatch_names_both_shapes() {
    let mut r = rng(5);
    let a = random_sequence(&mut r, 4, 2, 1.0);
    let b = random_sequence(&mut r, 5, 2, 1.0);
    let err = loss_rec(&a, &b).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("4x2") && msg.contains("5x2"), "{msg}");
    let w = coarticulation_weights(&b, &WindowSpec::default()).unwrap();
    assert!(loss_pc(&a, &a, &w).is_err());
}

#[test]
fn gradients_match_finite_differences() {
    let mut r = rng(6);
    for _ in 0..40 {
        let n = r.gen_range(2..9);
        let v = r.gen_range(1..4);
        let gt = random_sequence(&mut r, n, v, 1.0);
        let pred = random_sequence(&mut r, n, v, 1.0);
        let w = coarticulation_weights(&gt, &WindowSpec::new(r.gen_range(0..3))).unwrap();

        let numeric =
            finite_difference_gradient(|a, b| loss_rec(a, b).map(|l| l.total), &gt, &pred, 1e-4)
                .unwrap();
        let analytic = grad_loss_rec(&gt, &pred).unwrap();
        assert!(max_relative_error(&flatten(&analytic), &flatten(&numeric), 1e-6) <= 1e-4);

        let numeric =
            finite_difference_gradient(|a, b| loss_vel(a, b).map(|l| l.total), &gt, &pred, 1e-4)
                .unwrap();
        let analytic = grad_loss_vel(&gt, &pred).unwrap();
        assert!(max_relative_error(&flatten(&analytic), &flatten(&numeric), 1e-6) <= 1e-4);

        let numeric =
            finite_difference_gradient(|a, b| loss_pc(a, b, &w).map(|l| l.total), &gt, &pred, 1e-4)
                .unwrap();
        let analytic = grad_loss_pc(&gt, &pred, &w).unwrap();
        assert!(max_relative_error(&flatten(&analytic), &flatten(&numeric), 1e-6) <= 1e-4);
    }
}

#[test]
fn central_differences_on_cubic() {
    // derivative of x^3 is 3x^2; the central-difference error is h^2 x
    let g = central_differences(|x| x[0].powi(3), &[2.0], 1e-3);
    assert_abs_diff_eq!(g[0], 12.0, epsilon = 1e-5);
}

fn arb_case() -> impl Strategy<Value = (MeshSequence, usize)> {
    (3usize..40, 1usize..8, 0usize..6, any::<u64>()).prop_map(|(n, v, sigma, seed)| {
        let mut r = rng(seed);
        (random_sequence(&mut r, n, v, 1.0), sigma)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn weights_are_normalized_and_positive((seq, sigma) in arb_case()) {
        let w = coarticulation_weights(&seq, &WindowSpec::new(sigma)).unwrap();
        prop_assert!((w.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(w.weights().iter().all(|v| *v > 0.0));
        prop_assert_eq!(w.sigma(), sigma);
    }

    #[test]
    fn weights_preserve_energy_order((seq, sigma) in arb_case()) {
        let w = coarticulation_weights(&seq, &WindowSpec::new(sigma)).unwrap();
        let (e, p) = (w.raw_energy(), w.weights());
        for i in 0..e.len() {
            for j in 0..e.len() {
                if e[i] > e[j] {
                    prop_assert!(p[i] >= p[j]);
                }
            }
        }
    }

    #[test]
    fn weights_ignore_rigid_translation(
        (seq, sigma) in arb_case(),
        d in proptest::array::uniform3(-5.0f64..5.0),
    ) {
        let a = coarticulation_weights(&seq, &WindowSpec::new(sigma)).unwrap();
        let b = coarticulation_weights(&translate_all(&seq, d), &WindowSpec::new(sigma)).unwrap();
        for (x, y) in a.weights().iter().zip(b.weights()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn pc_loss_is_bounded_by_frame_errors((seq, sigma) in arb_case(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let pred = random_sequence(&mut r, seq.num_frames(), seq.num_vertices(), 1.0);
        let w = coarticulation_weights(&seq, &WindowSpec::new(sigma)).unwrap();
        let pc = loss_pc(&seq, &pred, &w).unwrap().total;
        let per_frame = loss_rec(&seq, &pred).unwrap().per_frame;
        let lo = per_frame.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = per_frame.iter().cloned().fold(0.0, f64::max);
        prop_assert!(pc >= lo - 1e-12 && pc <= hi + 1e-12);
    }

    #[test]
    fn softmax_is_shift_invariant(
        x in proptest::collection::vec(-50.0f64..50.0, 1..30),
        c in -1e3f64..1e3,
    ) {
        let a = softmax(&x, 1.0);
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let b = softmax(&shifted, 1.0);
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() <= 1e-12);
        }
    }

    #[test]
    fn constant_velocity_reduces_to_scaled_rec(
        n in 2usize..40,
        v in 1usize..6,
        vel in proptest::array::uniform3(-1.0f64..1.0),
        sigma in 0usize..6,
        seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let start = random_sequence(&mut r, 1, v, 1.0);
        let gt = MeshSequence::constant(start.frame(0), n, 30.0)
            .unwrap()
            .map_points(|t, _, p| {
                let s = t as f64;
                [p[0] + s * vel[0], p[1] + s * vel[1], p[2] + s * vel[2]]
            })
            .unwrap();
        let pred = random_sequence(&mut r, n, v, 1.0);
        let w = coarticulation_weights(&gt, &WindowSpec::new(sigma)).unwrap();
        let pc = loss_pc(&gt, &pred, &w).unwrap().total;
        let rec = loss_rec(&gt, &pred).unwrap().total;
        prop_assert!((pc - rec / n as f64).abs() <= 1e-9);
    }
}
