//! From-scratch 1-D convolutional network engine: forward/backward passes
//! for convolution, batch norm and ReLU, four architecture variants with
//! skip connections, global average pooling and softmax cross-entropy.

pub mod batch;
pub mod conv;
pub mod gradcheck;
pub mod loss;
pub mod model;
pub mod norm;

pub use batch::SeriesBatch;
pub use conv::Conv1d;
pub use gradcheck::{grad_check, GradCheckReport};
pub use loss::{softmax_cross_entropy, softmax_rows};
pub use model::{Gradients, Mode, Network, NetworkConfig, Variant};
pub use norm::BatchNorm;
