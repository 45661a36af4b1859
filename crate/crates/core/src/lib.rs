//! Nested lattice codes over prime fields.
//!
//! The crate is `no_std` (it needs `alloc`) and covers:
//!
//! * [`zp`]: exact linear algebra over `Z_p`,
//! * [`codes`]: nested linear code pairs in generator and parity-check form,
//! * [`lattice`]: the map from `Z_p` codes to real lattice codebooks,
//! * [`measures`]: finite-support measures, Prokhorov distance, divergence,
//!   mutual information and weak* typicality,
//! * [`quantize`]: dyadic quantizers and clipping for continuous alphabets,
//! * [`gp`] and [`wz`]: channel coding with state at the encoder and source
//!   coding with side information at the decoder,
//! * [`verify`]: exhaustive and Monte Carlo checks of the code ensembles,
//! * [`instances`]: the built-in reference instances.

#![no_std]

extern crate alloc;

pub mod codes;
pub mod error;
pub mod gp;
pub mod instances;
pub mod lattice;
pub mod measures;
pub mod quantize;
pub mod rng;
pub mod stats;
pub mod verify;
pub mod wz;
pub mod zp;

pub use error::{Error, Result};
