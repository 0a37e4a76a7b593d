use std::sync::Arc;

use super::features::{FeatureExtractor, FeatureField};
use super::grid::PosteriorGrid;
use crate::phy::{argmax, SymbolWindow};
use crate::{Error, Result};

/// Posteriors of the previous window of one demodulation stream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassifierState {
    prev_posteriors: Option<Vec<f64>>,
}

impl ClassifierState {
    pub fn new() -> Self {
        Self::default()
    }

    /// State carrying externally computed posteriors, e.g. from the window
    /// just before the payload.
    pub fn with_previous(posteriors: Vec<f64>) -> Result<Self> {
        if let Some(bad) = posteriors.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Validation(format!("posterior {bad} outside [0, 1]")));
        }
        Ok(Self {
            prev_posteriors: Some(posteriors),
        })
    }

    pub fn previous(&self) -> Option<&[f64]> {
        self.prev_posteriors.as_deref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub bin: usize,
    pub score: f64,
}

/// Posterior `q_k` per bin and the classifier score
/// `q_k · (1 − q'_k)`, where `q'` is the previous window's posterior. With no
/// previous window the score is `q_k`.
pub fn score_bins(
    features: &FeatureField,
    grid: &PosteriorGrid,
    state: &ClassifierState,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let q: Vec<f64> = features
        .p
        .iter()
        .zip(&features.h)
        .map(|(&p, &h)| grid.lookup_unchecked(p, h))
        .collect();
    let scores = match state.previous() {
        Some(prev) => {
            if prev.len() != q.len() {
                return Err(Error::WindowLength {
                    expected: prev.len(),
                    got: q.len(),
                });
            }
            q.iter().zip(prev).map(|(a, b)| a * (1.0 - b)).collect()
        }
        None => q.clone(),
    };
    Ok((q, scores))
}

/// Picks the bin with the highest score (lowest index on ties) and returns
/// the state for the next window.
pub fn classify(
    features: &FeatureField,
    grid: &PosteriorGrid,
    state: &ClassifierState,
) -> Result<(Decision, ClassifierState)> {
    let (q, scores) = score_bins(features, grid, state)?;
    let bin = argmax(&scores);
    Ok((
        Decision {
            bin,
            score: scores[bin],
        },
        ClassifierState {
            prev_posteriors: Some(q),
        },
    ))
}

/// Features then classification for one window.
pub fn detect_symbol(
    window: &SymbolWindow,
    expected_peak: f64,
    grid: &PosteriorGrid,
    state: &ClassifierState,
) -> Result<(Decision, ClassifierState)> {
    let features = FeatureExtractor::new(window.n())?.extract(window, expected_peak)?;
    classify(&features, grid, state)
}

/// A detector bound to one stream: shared grid, own FFT plan and state.
#[derive(Debug, Clone)]
pub struct CoraDetector {
    grid: Arc<PosteriorGrid>,
    extractor: FeatureExtractor,
    state: ClassifierState,
}

impl CoraDetector {
    pub fn new(grid: Arc<PosteriorGrid>, n: usize) -> Result<Self> {
        Ok(Self {
            grid,
            extractor: FeatureExtractor::new(n)?,
            state: ClassifierState::new(),
        })
    }

    pub fn grid(&self) -> &PosteriorGrid {
        &self.grid
    }

    pub fn extractor(&self) -> &FeatureExtractor {
        &self.extractor
    }

    pub fn state(&self) -> &ClassifierState {
        &self.state
    }

    pub fn reset(&mut self) {
        self.state = ClassifierState::new();
    }

    /// Records `window`'s posteriors as the previous window without
    /// producing a decision.
    pub fn prime(&mut self, window: &SymbolWindow, expected_peak: f64) -> Result<()> {
        let features = self.extractor.extract(window, expected_peak)?;
        let (q, _) = score_bins(&features, &self.grid, &ClassifierState::new())?;
        self.state = ClassifierState {
            prev_posteriors: Some(q),
        };
        Ok(())
    }

    pub fn detect(&mut self, window: &SymbolWindow, expected_peak: f64) -> Result<Decision> {
        let features = self.extractor.extract(window, expected_peak)?;
        let (decision, state) = classify(&features, &self.grid, &self.state)?;
        self.state = state;
        Ok(decision)
    }
}
