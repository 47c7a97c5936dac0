//! Achievable rate regions of homogeneous (UV) and heterogeneous (UX / VX)
//! superposition coding over two-receiver discrete memoryless broadcast
//! channels.

pub mod channel;
pub mod error;
pub mod geom;
pub mod prob;
pub mod scheme;
pub mod search;
pub mod sim;
pub mod theorem;

pub use error::{Error, Result};
