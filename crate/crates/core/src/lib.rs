//! Coded network function virtualization for uplink channel decoding.
//!
//! Received frames encoded with a common linear code are combined over GF(2)
//! before being dispatched to unreliable decoding servers, so that any
//! sufficiently large set of correct, available servers lets the controller
//! recover every message. The crate provides the building blocks (GF(2)
//! algebra, convolutional coding with Viterbi decoding, channel and failure
//! models), the NFV schemes themselves, error-probability estimators, a
//! generator-matrix designer, and a sweep driver producing CSV/JSON results.

pub mod blockcode;
pub mod channel;
pub mod convcode;
pub mod designer;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod gf2;
pub mod nfv;
pub mod oracle;
pub mod trials;

pub use error::{Error, Result};
