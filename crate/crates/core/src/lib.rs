//! Gauge-equivariant complex graph attention with self-interference
//! cancellation: complex kernels, graphs and datasets, the layer with its
//! hand-written reverse pass, training, and the property checkers.
//!
//! `no_std` with `alloc`; file formats and the command line live in the
//! companion `gesc` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod complex;
pub mod config;
pub mod error;
pub mod graph;
pub mod layer;
pub mod model;
pub mod optim;
pub mod rng;
pub mod train;
pub mod verify;

pub use complex::{ComplexMatrix, ComplexVector, ProjectorHandle, C64};
pub use config::{AttentionMode, GescConfig, Gating, ModelConfig, ParamMode, SicPosition, TrainConfig};
pub use error::{GescError, Result};
pub use graph::{Arc, Dataset, Graph, Splits, SyntheticSpec};
