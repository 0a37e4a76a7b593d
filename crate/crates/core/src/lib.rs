//! A LoRa physical-layer laboratory built around a collision-resistant
//! symbol detector.
//!
//! The crate is split along the receive chain:
//!
//! * [`phy`]: chirp modulation, frame assembly, dechirping and the argmax
//!   demodulator every LoRa receiver uses.
//! * [`channel`]: AWGN, frequency offsets, frame collisions, tapped-delay-line
//!   Rayleigh fading and the synthetic training-symbol generator.
//! * [`detector`]: the peak magnitude deviation (PMD) and half-period
//!   discriminator (HPD) features, the posterior grid and the Bayesian
//!   classifier that picks the true peak among interference peaks.
//! * [`harness`]: seeded symbol-error / frame-success campaigns, per-stage
//!   benchmarks and CSV output.
//! * [`cli`]: the `cora` command-line tool and its file formats.

pub mod channel;
pub mod cli;
pub mod detector;
mod error;
pub mod harness;
pub mod numfmt;
pub mod phy;

pub use error::{Error, Result};
