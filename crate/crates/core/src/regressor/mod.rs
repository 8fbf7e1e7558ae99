//! Parameter regressors: an MLP surrogate for the data-to-parameters
//! map, and nearest-neighbor baselines over sample banks.
//!
//! The MLP maps a unit-norm surface data vector to the rescaled
//! parameter triple in `[0, 1]^3`. It is trained by scaled conjugate
//! gradient on a convex combination of mean squared weights and mean
//! squared error. The nearest-neighbor baselines return the target of
//! the closest bank sample; they need no training but scan the whole
//! bank per query, which is what the MLP is measured against.

mod evaluate;
mod mlp;
mod nn;
mod scg;

pub use evaluate::{evaluate_mlp, evaluate_nn, EvalRow, Evaluation};
pub use mlp::{lipschitz_probe, load_model, save_model, train_mlp, MlpModel};
pub use nn::SampleBank;
pub use scg::scg_minimize;
