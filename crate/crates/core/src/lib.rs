pub mod analysis;
pub mod banded;
pub mod contact;
pub mod distributed;
pub mod error;
pub mod lumped;
pub mod scenario;
pub mod tanpura;

pub use error::{Error, Result};
