//! Discrete weak-KAM toolkit on the flat tori T¹ and T².
//!
//! Minimal actions are tabulated as min-plus kernels between grid nodes;
//! the Lax-Oleinik semigroup, its windowed variants, barriers, Aubry sets
//! and backward weak KAM checks are all built on those kernels.

pub mod action;
pub mod error;
pub mod grid;
pub mod models;
pub mod operators;
pub mod weakkam;

pub use error::{Error, Result};
