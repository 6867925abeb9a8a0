//! Measure-valued strain calculus on triangulated rectangles, concentration
//! experiments for damaged strains, and a time-incremental solver for
//! elasto-plasticity with gradient damage.

pub mod cli;
pub mod config;
pub mod error;
pub mod fields;
pub mod lab;
pub mod lsc;
pub mod measure;
pub mod mesh;
pub mod model;
pub mod poly;
pub mod solver;
pub mod quadrature;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use tensor::{Point, SymTensor2, Vec2};
