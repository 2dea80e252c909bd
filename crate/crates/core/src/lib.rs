//! Noise spectroscopy of quantum baths from repetitive interaction measurements.

pub mod bath;
pub mod channel;
pub mod compare;
pub mod correlation;
pub mod dd;
pub mod error;
pub mod operator;
pub mod spectrum;
pub mod spin;
pub mod trajectory;
pub mod units;

pub use error::{Error, Result};
pub use operator::{Operator, SuperOperator, C64};
