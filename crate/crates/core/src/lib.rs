#![no_std]
//! Numerical laboratory for time analyticity of the heat equation on
//! gradient shrinking Ricci solitons.

extern crate alloc;

pub mod error;
pub mod math;
pub mod quadrature;
pub mod soliton;

pub use error::{Error, Result};
pub use soliton::{ModelKind, Point, SolitonModel};
pub mod data;
pub mod discrete;
pub mod tychonov;
pub mod analyticity;
pub mod heat;
pub mod inequality;
pub mod linalg;
