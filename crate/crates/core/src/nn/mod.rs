//! The learned node-operation scorer: embedding, parameters, forward and
//! backward passes, and training.

pub mod embed;
pub mod math;
pub mod model;
pub mod params;
pub mod train;

pub use embed::{HashedTrigramEmbedder, TextEmbedder};
pub use model::{assemble_input, forward, loss_and_grad, predict, score_graph, ModelInput};
pub use params::{load_params, save_params, ModelConfig, ScorerParams, CHECKPOINT_VERSION};
pub use train::{train, TrainConfig, TrainReport};
