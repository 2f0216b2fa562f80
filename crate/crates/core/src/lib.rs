//! Constructive K-closedness decompositions on periodic grids.

pub mod error;
pub mod fft;
pub mod config;
pub mod corpus;
pub mod decompose;
pub mod grid;
pub mod io;
pub mod maximal;
pub mod runner;
pub mod spectral;
pub mod tents;
pub mod verify;
pub mod whitney;
pub mod window;

pub use error::{Error, Result};
pub use grid::{GridField, GridMask, GridSpec, HalfSpaceField, KInput, TLadder};
