//! Multi-bit TFHE with key-switching-first programmable bootstrapping, an
//! FHE dataflow compiler, and a cycle-level performance model of a
//! bootstrapping accelerator.
//!
//! The crate is `no_std` with `alloc`; file formats and the command line
//! live in the `taurus` companion crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod compiler;
pub mod error;
pub mod fft;
pub mod perf;
pub mod tfhe;
pub mod torus;

pub use error::{Error, ProgramErrorKind, Result};
