//! Rate-distortion secrecy with side information at both decoders.
//!
//! A source `X` is compressed and broadcast noiselessly. The legitimate
//! receiver decodes with side information `B`, the eavesdropper observes the
//! message with side information `W`. Fidelity at the receiver and secrecy
//! against the eavesdropper are both measured by expected distortion.
//!
//! * [`prob`]: dense pmfs, channels, distortion, total variation.
//! * [`info`]: entropies, mutual informations and capability orderings.
//! * [`region`]: inner and outer bound evaluation and auxiliary-variable search.
//! * [`becbsc`]: the binary source with erasure/BSC side information.
//! * [`codesim`]: finite-blocklength superposition codebooks, likelihood
//!   encoder, decoders, an exact eavesdropper and soft-covering checks.
//!
//! ```
//! use rdsecrecy::becbsc::{outer_dw, rate_floor, BecBscParams};
//!
//! let params = BecBscParams::new(0.5, 0.4, 0.1).unwrap();
//! assert!((rate_floor(&params) - 0.4).abs() < 1e-12);
//! assert!((outer_dw(&params) - 0.1).abs() < 1e-12);
//! ```

pub mod becbsc;
pub mod codesim;
pub mod error;
pub mod info;
pub mod numeric;
pub mod prob;
pub mod region;
pub mod rng;
mod search;
pub mod svg;

pub use error::{Error, Result};
pub use prob::{Alphabet, Channel, ConditionalPmf, DistortionMeasure, JointPmf, Pmf};
