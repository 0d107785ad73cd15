//! Numerical learning kernel: a small convolutional network trained with
//! momentum SGD, PCA, a linear margin classifier, augmentation and class
//! balancing.

pub mod augment;
pub mod balance;
pub mod gradcheck;
pub mod margin;
pub mod net;
pub mod pca;
pub mod train;

pub use augment::{apply_augment, augment, AugmentParams};
pub use balance::balance_classes;
pub use gradcheck::{grad_check, gradient};
pub use margin::{margin_decide, margin_objective, margin_train, MarginFit, MarginModel};
pub use net::{net_forward, Architecture, ConvStage, Grads, Layer, NetModel, Shape};
pub use pca::{pca_fit, pca_project, PcaModel};
pub use train::{accuracy, net_train, sgdm_step, train_model, Dataset, Trained, TrainConfig};
