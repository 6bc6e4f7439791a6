//! Numerical core for concatenation-augmented biosignal classification.
//!
//! Everything here is `no_std` + `alloc`: signal conditioning (wavelet
//! denoising, running-median baseline removal, clipped standardization),
//! the seven-variant concatenation augmentation, a small reverse-mode
//! autodiff engine with the layers a 1-D ResNet needs, focal loss, AdamW,
//! the ResNet-attention model itself, and the training/evaluation loop.
//!
//! File formats, timing and the command line live in the `sigcat` crate.
#![no_std]

extern crate alloc;

pub mod augment;
mod error;
pub mod model;
pub mod preprocess;
pub mod seed;
pub mod signal;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
