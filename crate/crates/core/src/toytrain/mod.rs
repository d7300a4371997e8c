//! A deliberately under-capacity model fitted by gradient descent.
//!
//! Predicted frame `t` is `Σₖ basisₖ(t) · coefₖ`, with `K < T` fixed
//! B-spline functions in time and trainable per-vertex coefficients. The
//! model cannot follow every frame, so the choice of frame loss decides
//! where the residual error ends up. Training it once with the unweighted
//! reconstruction loss and once with the coarticulation-weighted loss shows
//! the effect of the weighting on transition frames.

mod ablate;
mod basis;

pub use ablate::{ablate_window, AblationRow, AblationTable};
pub use basis::{DesignRows, TemporalBasis};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coarticulation::{coarticulation_weights, WindowSpec};
use crate::error::{Error, Result};
use crate::io::{Cell, CsvTable, KvFile};
use crate::mesh::{MeshSequence, Vec3, VertexRegionMask};
use crate::metrics::{self, MetricReport};
use crate::synth::SegmentAnnotation;

/// Basis expansion in time with per-vertex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    basis: TemporalBasis,
    /// `K × V`, basis-major.
    coefficients: Vec<Vec3>,
    num_vertices: usize,
    fps: f64,
}

impl ToyModel {
    pub fn zeros(basis: TemporalBasis, num_vertices: usize, fps: f64) -> Self {
        ToyModel {
            coefficients: vec![[0.0; 3]; basis.num_basis() * num_vertices],
            basis,
            num_vertices,
            fps,
        }
    }

    pub fn with_coefficients(
        basis: TemporalBasis,
        num_vertices: usize,
        coefficients: Vec<Vec3>,
        fps: f64,
    ) -> Result<Self> {
        if num_vertices == 0 || coefficients.len() != basis.num_basis() * num_vertices {
            return Err(Error::InvalidConfig(format!(
                "expected {} x {num_vertices} coefficients, got {}",
                basis.num_basis(),
                coefficients.len()
            )));
        }
        Ok(ToyModel {
            basis,
            coefficients,
            num_vertices,
            fps,
        })
    }

    pub fn basis(&self) -> &TemporalBasis {
        &self.basis
    }

    pub fn capacity(&self) -> usize {
        self.basis.num_basis()
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn coefficients(&self) -> &[Vec3] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Vec3] {
        &mut self.coefficients
    }

    fn predict_with(&self, design: &DesignRows) -> Vec<Vec3> {
        let v = self.num_vertices;
        let mut out = vec![[0.0; 3]; design.len() * v];
        for (t, row) in design.iter().enumerate() {
            let frame = &mut out[t * v..(t + 1) * v];
            for &(k, b) in row {
                let coef = &self.coefficients[k * v..(k + 1) * v];
                for (p, c) in frame.iter_mut().zip(coef) {
                    p[0] += b * c[0];
                    p[1] += b * c[1];
                    p[2] += b * c[2];
                }
            }
        }
        out
    }

    /// Evaluates the model at `num_frames` evenly spaced frames.
    pub fn predict(&self, num_frames: usize) -> Result<MeshSequence> {
        let design = self.basis.design(num_frames);
        MeshSequence::from_flat(
            num_frames,
            self.num_vertices,
            self.predict_with(&design),
            self.fps,
        )
    }
}

/// Frame loss used for training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameLoss {
    Rec,
    Pc,
}

impl std::str::FromStr for FrameLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rec" => Ok(FrameLoss::Rec),
            "pc" => Ok(FrameLoss::Pc),
            other => Err(Error::InvalidConfig(format!(
                "unknown frame loss {other:?} (expected rec or pc)"
            ))),
        }
    }
}

impl std::fmt::Display for FrameLoss {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FrameLoss::Rec => "rec",
            FrameLoss::Pc => "pc",
        })
    }
}

/// Training hyperparameters.
///
/// The objective is `frame_coefficient · L_frame + vel_coefficient · L_vel`.
/// When `frame_coefficient` is `None` it is 1 for `Rec` and `T` for `Pc`,
/// which puts a uniform-weight `Pc` run on the same scale as `Rec`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub loss_choice: FrameLoss,
    pub vel_coefficient: f64,
    pub frame_coefficient: Option<f64>,
    pub sigma: usize,
    pub learning_rate: f64,
    pub steps: usize,
    pub seed: u64,
    /// Number of basis functions; `None` means `T / 4`.
    pub capacity: Option<usize>,
    /// Coefficients start uniform in `[−init_scale, init_scale]`.
    pub init_scale: f64,
    /// Every `n`-th frame (starting at frame `n − 1`) is left out of
    /// training and used for evaluation. `None` trains and evaluates on all
    /// frames.
    pub holdout_every: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss_choice: FrameLoss::Rec,
            vel_coefficient: 0.0,
            frame_coefficient: None,
            sigma: WindowSpec::DEFAULT_SIGMA,
            learning_rate: 5e-2,
            steps: 2000,
            seed: 0,
            capacity: None,
            init_scale: 1e-3,
            holdout_every: None,
        }
    }
}

const CONFIG_KEYS: &[&str] = &[
    "loss",
    "vel_coefficient",
    "frame_coefficient",
    "sigma",
    "learning_rate",
    "steps",
    "seed",
    "capacity",
    "init_scale",
    "holdout_every",
];

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.vel_coefficient.is_finite() && self.vel_coefficient >= 0.0) {
            return bad(format!(
                "vel_coefficient must be >= 0, got {}",
                self.vel_coefficient
            ));
        }
        if let Some(c) = self.frame_coefficient {
            if !(c.is_finite() && c > 0.0) {
                return bad(format!("frame_coefficient must be > 0, got {c}"));
            }
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            ));
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return bad(format!("init_scale must be >= 0, got {}", self.init_scale));
        }
        if self.capacity == Some(0) {
            return bad("capacity must be at least 1".into());
        }
        if matches!(self.holdout_every, Some(n) if n < 2) {
            return bad("holdout_every must be at least 2".into());
        }
        Ok(())
    }

    /// Reads `key = value` lines; unspecified keys keep their defaults.
    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        kv.reject_unknown(CONFIG_KEYS)?;
        let d = TrainConfig::default();
        let cfg = TrainConfig {
            loss_choice: kv.optional("loss")?.unwrap_or(d.loss_choice),
            vel_coefficient: kv.optional("vel_coefficient")?.unwrap_or(d.vel_coefficient),
            frame_coefficient: kv.optional("frame_coefficient")?.or(d.frame_coefficient),
            sigma: kv.optional("sigma")?.unwrap_or(d.sigma),
            learning_rate: kv.optional("learning_rate")?.unwrap_or(d.learning_rate),
            steps: kv.optional("steps")?.unwrap_or(d.steps),
            seed: kv.optional("seed")?.unwrap_or(d.seed),
            capacity: kv.optional("capacity")?.or(d.capacity),
            init_scale: kv.optional("init_scale")?.unwrap_or(d.init_scale),
            holdout_every: kv.optional("holdout_every")?.or(d.holdout_every),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_kv(&KvFile::read(path)?)
    }

    pub fn capacity_for(&self, num_frames: usize) -> usize {
        self.capacity.unwrap_or((num_frames / 4).max(1))
    }

    pub fn frame_coefficient_for(&self, num_frames: usize) -> f64 {
        self.frame_coefficient.unwrap_or(match self.loss_choice {
            FrameLoss::Rec => 1.0,
            FrameLoss::Pc => num_frames as f64,
        })
    }
}

/// What to evaluate after training: the lip region and which frames count
/// as transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPlan {
    pub lips: VertexRegionMask,
    pub transition: Vec<bool>,
}

impl EvalPlan {
    /// Transition frames from a synth annotation.
    pub fn from_annotation(lips: VertexRegionMask, ann: &SegmentAnnotation) -> Self {
        let transition = ann
            .labels
            .iter()
            .map(|l| l == crate::synth::TRANSITION)
            .collect();
        EvalPlan { lips, transition }
    }

    /// Transition frames are those whose ground-truth motion energy (default
    /// window) exceeds its median.
    pub fn from_energy(lips: VertexRegionMask, gt: &MeshSequence) -> Result<Self> {
        let energy = crate::coarticulation::motion_energies(gt, &WindowSpec::default())?;
        let median = crate::synth::median(&energy);
        Ok(EvalPlan {
            lips,
            transition: energy.iter().map(|e| *e > median).collect(),
        })
    }
}

/// Outcome of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub loss_choice: FrameLoss,
    /// Final (frame loss, velocity loss, objective) on the training frames.
    pub final_frame_loss: f64,
    pub final_vel_loss: f64,
    pub final_objective: f64,
    /// All four metrics on the evaluation frames.
    pub metrics: MetricReport,
    /// LVE on evaluation frames marked as transitions.
    pub lve_transition: Option<f64>,
    /// LVE on the remaining evaluation frames.
    pub lve_hold: Option<f64>,
    /// Objective before each update.
    pub loss_curve: Vec<f64>,
}

/// Training objective over a fixed design matrix.
pub struct Objective<'a> {
    gt: &'a MeshSequence,
    design: DesignRows,
    /// Per-frame factor on the squared reconstruction error.
    frame_scale: Vec<f64>,
    /// Per-step factor on the velocity error for the step ending at `t`.
    vel_scale: Vec<f64>,
}

impl<'a> Objective<'a> {
    /// Builds the objective for `cfg`. Weights for `Pc` come from `gt` once.
    pub fn new(gt: &'a MeshSequence, basis: &TemporalBasis, cfg: &TrainConfig) -> Result<Self> {
        let n = gt.num_frames();
        let train = training_mask(n, cfg.holdout_every);
        let lambda = cfg.frame_coefficient_for(n);
        let weights = match cfg.loss_choice {
            FrameLoss::Rec => vec![1.0; n],
            FrameLoss::Pc => coarticulation_weights(gt, &WindowSpec::new(cfg.sigma))?
                .weights()
                .to_vec(),
        };
        let frame_scale = (0..n)
            .map(|t| if train[t] { lambda * weights[t] } else { 0.0 })
            .collect();
        let vel_scale = (0..n)
            .map(|t| {
                if t > 0 && train[t] && train[t - 1] {
                    cfg.vel_coefficient
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Objective {
            gt,
            design: basis.design(n),
            frame_scale,
            vel_scale,
        })
    }

    pub fn design(&self) -> &DesignRows {
        &self.design
    }

    /// `(frame term, velocity term)` before coefficients are applied, i.e.
    /// with `frame_scale` and `vel_scale` folded in.
    fn terms(&self, pred: &[Vec3]) -> (f64, f64) {
        let v = self.gt.num_vertices();
        let gt = self.gt.as_flat();
        let mut frame = 0.0;
        let mut vel = 0.0;
        for t in 0..self.gt.num_frames() {
            if self.frame_scale[t] != 0.0 {
                let e: f64 = (t * v..(t + 1) * v)
                    .map(|i| crate::mesh::sq_dist(&gt[i], &pred[i]))
                    .sum();
                frame += self.frame_scale[t] * e;
            }
            if self.vel_scale[t] != 0.0 {
                let mut e = 0.0;
                for i in t * v..(t + 1) * v {
                    for c in 0..3 {
                        let r = (pred[i][c] - pred[i - v][c]) - (gt[i][c] - gt[i - v][c]);
                        e += r * r;
                    }
                }
                vel += self.vel_scale[t] * e;
            }
        }
        (frame, vel)
    }

    pub fn value(&self, model: &ToyModel) -> f64 {
        let (f, v) = self.terms(&model.predict_with(&self.design));
        f + v
    }

    /// Objective value and its gradient with respect to the coefficients.
    pub fn value_and_gradient(&self, model: &ToyModel) -> (f64, Vec<Vec3>) {
        let pred = model.predict_with(&self.design);
        let (f, vl) = self.terms(&pred);
        let v = self.gt.num_vertices();
        let gt = self.gt.as_flat();
        let mut dpred = vec![[0.0; 3]; pred.len()];
        for t in 0..self.gt.num_frames() {
            let s = 2.0 * self.frame_scale[t];
            if s != 0.0 {
                for i in t * v..(t + 1) * v {
                    for c in 0..3 {
                        dpred[i][c] += s * (pred[i][c] - gt[i][c]);
                    }
                }
            }
            let s = 2.0 * self.vel_scale[t];
            if s != 0.0 {
                for i in t * v..(t + 1) * v {
                    for c in 0..3 {
                        let r = (pred[i][c] - pred[i - v][c]) - (gt[i][c] - gt[i - v][c]);
                        dpred[i][c] += s * r;
                        dpred[i - v][c] -= s * r;
                    }
                }
            }
        }
        let mut grad = vec![[0.0; 3]; model.coefficients.len()];
        for (t, row) in self.design.iter().enumerate() {
            let d = &dpred[t * v..(t + 1) * v];
            for &(k, b) in row {
                for (g, p) in grad[k * v..(k + 1) * v].iter_mut().zip(d) {
                    g[0] += b * p[0];
                    g[1] += b * p[1];
                    g[2] += b * p[2];
                }
            }
        }
        (f + vl, grad)
    }
}

fn training_mask(num_frames: usize, holdout_every: Option<usize>) -> Vec<bool> {
    (0..num_frames)
        .map(|t| holdout_every.is_none_or(|n| (t + 1) % n != 0))
        .collect()
}

fn select_frames(seq: &MeshSequence, frames: &[usize]) -> Result<MeshSequence> {
    let data = frames
        .iter()
        .flat_map(|&t| seq.frame(t).iter().copied())
        .collect();
    MeshSequence::from_flat(frames.len(), seq.num_vertices(), data, seq.fps())
}

/// Coefficients uniform in `[−scale, scale]` from ChaCha8 seeded with `seed`.
pub fn init_model(
    basis: TemporalBasis,
    num_vertices: usize,
    fps: f64,
    scale: f64,
    seed: u64,
) -> ToyModel {
    let mut model = ToyModel::zeros(basis, num_vertices, fps);
    if scale > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for c in model.coefficients.iter_mut().flatten() {
            *c = rng.gen_range(-scale..=scale);
        }
    }
    model
}

/// Plain gradient descent on an already constructed model. No capacity
/// check, so full-capacity bases can be used in tests.
pub fn fit_model(
    mut model: ToyModel,
    gt: &MeshSequence,
    cfg: &TrainConfig,
    plan: &EvalPlan,
) -> Result<(ToyModel, TrainReport)> {
    cfg.validate()?;
    if gt.num_frames() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: gt.num_frames(),
        });
    }
    if model.num_vertices != gt.num_vertices() {
        return Err(Error::ShapeMismatch {
            left: format!("model with {} vertices", model.num_vertices),
            right: gt.shape_string(),
        });
    }
    if plan.transition.len() != gt.num_frames() {
        return Err(Error::ShapeMismatch {
            left: gt.shape_string(),
            right: format!("{} segment labels", plan.transition.len()),
        });
    }
    plan.lips.check_against(gt.num_vertices())?;

    let objective = Objective::new(gt, &model.basis, cfg)?;
    let mut loss_curve = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let (value, grad) = objective.value_and_gradient(&model);
        if !value.is_finite() {
            return Err(Error::Diverged { step, value });
        }
        loss_curve.push(value);
        for (c, g) in model.coefficients.iter_mut().zip(&grad) {
            c[0] -= cfg.learning_rate * g[0];
            c[1] -= cfg.learning_rate * g[1];
            c[2] -= cfg.learning_rate * g[2];
        }
    }

    let pred_flat = model.predict_with(objective.design());
    if let Some(bad) = pred_flat.iter().flatten().find(|c| !c.is_finite()) {
        return Err(Error::Diverged {
            step: cfg.steps,
            value: *bad,
        });
    }
    let (frame_term, vel_term) = objective.terms(&pred_flat);
    let n = gt.num_frames();
    let lambda = cfg.frame_coefficient_for(n);
    let pred = MeshSequence::from_flat(n, gt.num_vertices(), pred_flat, gt.fps())?;

    let eval_frames: Vec<usize> = match cfg.holdout_every {
        None => (0..n).collect(),
        Some(_) => {
            let train = training_mask(n, cfg.holdout_every);
            (0..n).filter(|&t| !train[t]).collect()
        }
    };
    if eval_frames.is_empty() {
        return Err(Error::InvalidConfig(
            "holdout leaves no evaluation frames".into(),
        ));
    }
    let gt_eval = select_frames(gt, &eval_frames)?;
    let pred_eval = select_frames(&pred, &eval_frames)?;
    let metrics = metrics::evaluate(&gt_eval, &pred_eval, &plan.lips)?;
    let (trans, hold): (Vec<usize>, Vec<usize>) =
        eval_frames.iter().partition(|&&t| plan.transition[t]);
    let segment = |frames: &[usize]| -> Result<Option<f64>> {
        if frames.is_empty() {
            Ok(None)
        } else {
            metrics::lve_on_frames(gt, &pred, &plan.lips, frames).map(Some)
        }
    };

    let report = TrainReport {
        loss_choice: cfg.loss_choice,
        final_frame_loss: frame_term / lambda,
        final_vel_loss: if cfg.vel_coefficient > 0.0 {
            vel_term / cfg.vel_coefficient
        } else {
            0.0
        },
        final_objective: frame_term + vel_term,
        metrics,
        lve_transition: segment(&trans)?,
        lve_hold: segment(&hold)?,
        loss_curve,
    };
    Ok((model, report))
}

/// Fits a cubic B-spline model with `K < T` basis functions.
pub fn fit(
    gt: &MeshSequence,
    cfg: &TrainConfig,
    plan: &EvalPlan,
) -> Result<(ToyModel, TrainReport)> {
    let n = gt.num_frames();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let k = cfg.capacity_for(n);
    if k >= n {
        return Err(Error::InvalidConfig(format!(
            "capacity {k} must be below the sequence length {n}"
        )));
    }
    let basis = TemporalBasis::cubic(k)?;
    let model = init_model(basis, gt.num_vertices(), gt.fps(), cfg.init_scale, cfg.seed);
    fit_model(model, gt, cfg, plan)
}

fn optional_cell(v: Option<f64>) -> Cell {
    v.map_or(Cell::from(""), Cell::from)
}

/// One summary row; segment LVEs are empty when the segment has no frames.
impl CsvTable for TrainReport {
    fn header(&self) -> Vec<&'static str> {
        vec![
            "loss",
            "frame_loss",
            "vel_loss",
            "objective",
            "fve",
            "lve",
            "ldtw",
            "lip_max",
            "lve_transition",
            "lve_hold",
        ]
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        let m = &self.metrics;
        vec![vec![
            Cell::Text(self.loss_choice.to_string()),
            self.final_frame_loss.into(),
            self.final_vel_loss.into(),
            self.final_objective.into(),
            m.fve.into(),
            m.lve.into(),
            m.ldtw.into(),
            m.lip_max.into(),
            optional_cell(self.lve_transition),
            optional_cell(self.lve_hold),
        ]]
    }
}

/// Objective per optimization step, as `step,objective`.
pub struct LossCurve<'a>(pub &'a [f64]);

impl CsvTable for LossCurve<'_> {
    fn header(&self) -> Vec<&'static str> {
        vec!["step", "objective"]
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        self.0
            .iter()
            .enumerate()
            .map(|(i, v)| vec![i.into(), (*v).into()])
            .collect()
    }
}
