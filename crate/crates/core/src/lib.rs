//! A laboratory for the chained MDC authenticated-encryption modes
//! PES-PCBC, IOBC and EPBC, and for the forgery attacks against them.

pub mod analysis;
pub mod attacks;
pub mod bitblocks;
pub mod ciphers;
pub mod error;
pub mod experiment;
pub mod modes;

pub use error::{Error, Result};
