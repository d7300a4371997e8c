//! Randomized comparison of every analytic gradient against central
//! finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coarticulation::{
    central_differences, coarticulation_weights, flatten, grad_loss_pc, grad_loss_rec,
    grad_loss_vel, loss_pc, loss_rec, loss_vel, max_relative_error, WindowSpec,
};
use crate::error::Result;
use crate::mesh::{MeshSequence, Vec3};
use crate::toytrain::{init_model, FrameLoss, Objective, TemporalBasis, TrainConfig};

pub const DEFAULT_STEP: f64 = 1e-4;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
/// Denominator floor for relative errors of near-zero gradient entries.
pub const RELATIVE_FLOOR: f64 = 1e-6;

/// Worst relative error seen for one gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckCase {
    pub name: &'static str,
    pub max_rel_error: f64,
    /// Trial index and instance size where the maximum occurred.
    pub trial: usize,
    pub num_frames: usize,
    pub num_vertices: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub trials: usize,
    pub seed: u64,
    pub step: f64,
    pub cases: Vec<GradcheckCase>,
}

impl GradcheckReport {
    pub fn worst(&self) -> &GradcheckCase {
        self.cases
            .iter()
            .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
            .expect("four cases")
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.worst().max_rel_error <= tolerance
    }
}

fn random_sequence(rng: &mut ChaCha8Rng, n: usize, v: usize) -> MeshSequence {
    let data: Vec<Vec3> = (0..n * v)
        .map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
        .collect();
    MeshSequence::from_flat(n, v, data, 30.0).expect("finite")
}

fn with_flat(template: &MeshSequence, x: &[f64]) -> MeshSequence {
    let points = x.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    MeshSequence::from_flat(
        template.num_frames(),
        template.num_vertices(),
        points,
        template.fps(),
    )
    .expect("finite probe")
}

/// Runs `trials` random instances (`T ≤ 12`, `V ≤ 4`, `K ≤ 4`,
/// coordinates in `[−1, 1]`) through the reconstruction, velocity and
/// weighted losses and the toy model's full objective.
pub fn run_gradcheck(trials: usize, seed: u64, step: f64) -> Result<GradcheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = ["loss_rec", "loss_vel", "loss_pc", "toy_objective"];
    let mut cases: Vec<GradcheckCase> = names
        .iter()
        .map(|&name| GradcheckCase {
            name,
            max_rel_error: 0.0,
            trial: 0,
            num_frames: 0,
            num_vertices: 0,
        })
        .collect();

    for trial in 0..trials {
        let n = rng.gen_range(3..=12);
        let v = rng.gen_range(1..=4);
        let sigma = rng.gen_range(0..=3);
        let gt = random_sequence(&mut rng, n, v);
        let pred = random_sequence(&mut rng, n, v);
        let x: Vec<f64> = pred.as_flat().iter().flatten().copied().collect();
        let weights = coarticulation_weights(&gt, &WindowSpec::new(sigma))?;

        let rec = max_relative_error(
            &flatten(&grad_loss_rec(&gt, &pred)?),
            &central_differences(
                |x| loss_rec(&gt, &with_flat(&pred, x)).unwrap().total,
                &x,
                step,
            ),
            RELATIVE_FLOOR,
        );
        let vel = max_relative_error(
            &flatten(&grad_loss_vel(&gt, &pred)?),
            &central_differences(
                |x| loss_vel(&gt, &with_flat(&pred, x)).unwrap().total,
                &x,
                step,
            ),
            RELATIVE_FLOOR,
        );
        let pc = max_relative_error(
            &flatten(&grad_loss_pc(&gt, &pred, &weights)?),
            &central_differences(
                |x| loss_pc(&gt, &with_flat(&pred, x), &weights).unwrap().total,
                &x,
                step,
            ),
            RELATIVE_FLOOR,
        );

        let k = rng.gen_range(1..=4.min(n - 1));
        let cfg = TrainConfig {
            loss_choice: if rng.gen_bool(0.5) {
                FrameLoss::Pc
            } else {
                FrameLoss::Rec
            },
            vel_coefficient: rng.gen_range(0.0..1.0),
            sigma,
            capacity: Some(k),
            ..TrainConfig::default()
        };
        let basis = TemporalBasis::cubic(k)?;
        let model = init_model(basis, v, gt.fps(), 1.0, rng.gen());
        let objective = Objective::new(&gt, model.basis(), &cfg)?;
        let (_, analytic) = objective.value_and_gradient(&model);
        let theta: Vec<f64> = model.coefficients().iter().flatten().copied().collect();
        let mut probe = model.clone();
        let numeric = central_differences(
            |x| {
                for (c, chunk) in probe.coefficients_mut().iter_mut().zip(x.chunks_exact(3)) {
                    *c = [chunk[0], chunk[1], chunk[2]];
                }
                objective.value(&probe)
            },
            &theta,
            step,
        );
        let analytic: Vec<f64> = analytic.iter().flatten().copied().collect();
        let toy = max_relative_error(&analytic, &numeric, RELATIVE_FLOOR);

        for (case, err) in cases.iter_mut().zip([rec, vel, pc, toy]) {
            if err > case.max_rel_error || trial == 0 {
                *case = GradcheckCase {
                    name: case.name,
                    max_rel_error: err,
                    trial,
                    num_frames: n,
                    num_vertices: v,
                };
            }
        }
    }
    Ok(GradcheckReport {
        trials,
        seed,
        step,
        cases,
    })
}
