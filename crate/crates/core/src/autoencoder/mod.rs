//! Encoder/decoder stacks, end-to-end training through the channel, and
//! checkpoint persistence.

mod checkpoint;
mod model;
mod train;

pub use checkpoint::{load_model, save_model, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use model::{
    ae_forward_backward, ae_forward_backward_fixed, default_hidden_width, training_loss, AeGrads, AeModel,
    Stack, TrainingMetadata, HIDDEN_LAYERS,
};
pub use train::{train_autoencoder, EpochRecord, TrainConfig, TrainOutcome};
