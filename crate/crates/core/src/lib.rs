pub mod capacity;
pub mod channels;
pub mod error;
pub mod grid;
pub mod mixfit;
pub mod quad;
pub mod specfun;

pub use channels::{ChannelParams, EtaFormat};
pub use error::{Error, Result};
