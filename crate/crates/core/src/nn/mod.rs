//! A minimal trainable CNN: forward pass with switch recording,
//! backpropagation, and SGD with momentum.

mod layers;
mod model;
mod tensor;
mod train;

pub use layers::{
    conv2d_same, dense_forward, maxpool2x2, relu, relu_inplace, softmax, ConvLayer, DenseLayer,
    SwitchRecord, KERNEL,
};
pub use model::{Activation, Architecture, CnnModel, DropoutMasks, ForwardTrace};
pub use tensor::Tensor3;
pub use train::{
    backward, cross_entropy, evaluate, train, Dataset, EpochStats, Gradients, Hyper, Sample,
};
