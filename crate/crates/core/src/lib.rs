//! Full-rate space-time block codes with low-complexity ML decoding.
//!
//! The crate covers the proposed 2x2 and 4x2 coordinate-interleaved codes,
//! CIODs, the Alamouti code and the Golden code: encoders, the real equivalent
//! channel and its QR structure, exhaustive and conditional ML decoders,
//! minimum-determinant analysis and Monte Carlo CER simulation.

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod codes;
pub mod constellation;
pub mod decoders;
pub mod error;
pub mod linalg;
pub mod sim;
pub mod verify;
