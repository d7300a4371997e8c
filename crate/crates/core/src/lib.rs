//! Coarticulation-weighted reconstruction loss for speech-driven facial
//! animation, with the companion losses, evaluation metrics, a synthetic
//! viseme corpus generator and a small under-capacity trainer.
//!
//! Sequences are [`MeshSequence`]s of `T` frames by `V` vertices. Frame
//! indices are 0-based everywhere in the API.

pub mod coarticulation;
pub mod error;
pub mod gradcheck;
pub mod io;
pub mod mesh;
pub mod metrics;
pub mod synth;
pub mod toytrain;

pub use coarticulation::{
    coarticulation_weights, loss_pc, loss_rec, loss_vel, BoundaryPolicy, CoarticulationWeights,
    LossKind, LossReport, WindowSpec,
};
pub use error::{Error, Result};
pub use mesh::{
    apply_deformation, frame_difference_norms, translate_sequence, validate_sequence,
    DeformationSequence, FaceTemplate, MeshSequence, Vec3, VertexRegionMask,
};
pub use metrics::{evaluate, DtwResult, MetricReport};
pub use synth::{SegmentAnnotation, SynthSpec};
pub use toytrain::{EvalPlan, FrameLoss, ToyModel, TrainConfig, TrainReport};
