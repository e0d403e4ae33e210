pub mod airsim;
pub mod csi;
pub mod dbfile;
pub mod error;
pub mod eval;
pub mod fingerprint;
pub mod kde;
pub mod protocol;
pub mod rnn;
pub mod ssp;
pub mod textio;

pub use error::{Error, Result};
