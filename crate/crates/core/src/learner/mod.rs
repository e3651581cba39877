//! Softmax regression, SGD with momentum, non-IID partitioning and the
//! noiseless CHOCO reference round.

mod choco;
mod data;
mod fstar;
mod model;
mod optimizer;
mod partition;

pub use choco::{choco_round_ideal, compression_error, consensus_step, Compressor, DeviceState};
pub use data::{minibatch, synthetic_blobs, Dataset};
pub use fstar::{estimate_fstar, FStar, FStarConfig};
pub use model::{accuracy, global_loss, lipschitz_constant, loss_and_gradient, Model};
pub use optimizer::{LearningRate, Momentum};
pub use partition::{partition_noniid, Partition};
