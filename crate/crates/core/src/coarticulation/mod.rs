//! Coarticulation weights and the losses built on them.
//!
//! Motion energy is the windowed mean of squared frame-to-frame
//! displacements of the ground truth. A softmax over those energies gives one
//! weight per frame, and the weighted reconstruction loss sums the per-frame
//! squared errors under these weights. The unweighted reconstruction and
//! velocity losses live here too, each with an analytic gradient.
//!
//! Frame indices are 0-based throughout.

mod fd;
mod loss;
mod weights;

pub use fd::{central_differences, finite_difference_gradient, flatten, max_relative_error};
pub use loss::{
    frame_errors, grad_loss_pc, grad_loss_rec, grad_loss_vel, loss_pc, loss_rec, loss_vel,
    LossKind, LossReport,
};
pub use weights::{
    coarticulation_weights, motion_energies, motion_energy, softmax, BoundaryPolicy,
    CoarticulationWeights, WindowSpec,
};
