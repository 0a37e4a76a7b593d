//! The collision-resistant symbol detector.
//!
//! Two per-bin features are computed from each dechirped window:
//!
//! * PMD, the peak magnitude deviation: how far a bin's magnitude sits from
//!   the expected true-peak magnitude measured on the preamble.
//! * HPD, the half-period discriminator: flipping the sign of the second
//!   half of the window cancels a complete integer-frequency tone in its own
//!   bin, while a clipped tone survives.
//!
//! A posterior grid maps each `(p, h)` pair to the probability that the bin
//! holds a complete waveform. The classifier multiplies that probability by
//! the chance that the same bin did *not* hold one in the previous window,
//! which suppresses interfering preambles, and picks the best bin.

mod classifier;
mod features;
mod grid;
mod train;

pub use classifier::{
    classify, detect_symbol, score_bins, ClassifierState, CoraDetector, Decision,
};
pub use features::{eq1_check, hpd, pmd, FeatureExtractor, FeatureField};
pub use grid::{load_grid, save_grid, PosteriorGrid, GRID_MAGIC};
pub use train::{gaussian_smooth, train, train_with_report, TrainingReport, MIN_KEPT_WINDOWS};
