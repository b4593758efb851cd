pub mod audiostats;
pub mod binomtail;
pub mod error;
pub mod spaces;
pub mod xprec;

pub use error::{Error, Result};
