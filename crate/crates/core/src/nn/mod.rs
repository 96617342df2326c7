//! The convolutional classifier: two conv/pool blocks, two hidden ReLU
//! layers with dropout and a softmax output, trained by plain mini-batch SGD
//! on the mean cross-entropy. All arithmetic is f64.

mod augment;
mod checkpoint;
mod config;
mod network;
mod ops;
mod predict;
mod train;

pub use augment::{augment_patch, Dihedral};
pub use checkpoint::{decode_network, encode_network, read_network, write_network, NETWORK_MAGIC};
pub use config::{ConvSpec, InitScheme, NetworkConfig, TrainConfig, POOL};
pub use network::{ForwardCache, Gradients, Layer, Mode, Network};
pub use ops::{
    conv2d_valid, cross_entropy, dense_forward, maxpool2_ceil, one_hot, softmax, Activation, Filters,
    Tensor, PROB_FLOOR,
};
pub use predict::{predict_padded, predict_probmap, predict_probmap_per_patch};
pub use train::{train_epochs, Trainer};
