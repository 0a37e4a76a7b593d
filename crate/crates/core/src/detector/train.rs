//! Posterior grid estimation from synthetic training windows.

use rayon::prelude::*;

use super::features::FeatureExtractor;
use super::grid::PosteriorGrid;
use crate::channel::{substream, TrainConfig, TrainingSynth};
use crate::phy::baseline_detect;
use crate::{Error, Result};

/// Training fails with fewer windows than this after filtering.
pub const MIN_KEPT_WINDOWS: usize = 100;

/// A trained grid together with the intermediate densities.
#[derive(Debug, Clone)]
pub struct TrainingReport {
    pub grid: PosteriorGrid,
    /// Windows the baseline demodulator got wrong.
    pub kept_windows: usize,
    pub true_samples: usize,
    pub interference_samples: usize,
    /// Smoothed `P(ph | C)`, row-major like the grid.
    pub likelihood_true: Vec<f64>,
    /// Smoothed `P(ph | ¬C)`.
    pub likelihood_interference: Vec<f64>,
    /// `P(ph)` by total probability.
    pub evidence: Vec<f64>,
}

type FeaturePair = (f64, f64);

struct KeptWindow {
    true_pair: FeaturePair,
    interference: Vec<FeaturePair>,
}

pub fn train(cfg: &TrainConfig) -> Result<PosteriorGrid> {
    train_with_report(cfg).map(|r| r.grid)
}

/// Generates `cfg.n_symbols` windows (window `i` uses substream `i` of
/// `cfg.seed`), keeps those the baseline misclassifies, and builds the grid
/// from smoothed class-conditional histograms.
pub fn train_with_report(cfg: &TrainConfig) -> Result<TrainingReport> {
    let synth = TrainingSynth::new(cfg)?;
    let extractor = FeatureExtractor::new(cfg.n_bins)?;
    // The target tone has unit amplitude, so its complete-waveform peak is N.
    let expected_peak = cfg.n_bins as f64;
    let per_window = cfg.interference_samples_per_symbol;

    let kept: Vec<KeptWindow> = (0..cfg.n_symbols as u64)
        .into_par_iter()
        .map(|i| -> Result<Option<KeptWindow>> {
            let sym = synth.generate(&mut substream(cfg.seed, i));
            if baseline_detect(&sym.window.spectrum) == sym.true_bin {
                return Ok(None);
            }
            let f = extractor.extract(&sym.window, expected_peak)?;
            let mut others: Vec<usize> = (0..cfg.n_bins).filter(|&k| k != sym.true_bin).collect();
            others.sort_by(|&a, &b| f.p[a].total_cmp(&f.p[b]).then(a.cmp(&b)));
            Ok(Some(KeptWindow {
                true_pair: (f.p[sym.true_bin], f.h[sym.true_bin]),
                interference: others[..per_window]
                    .iter()
                    .map(|&k| (f.p[k], f.h[k]))
                    .collect(),
            }))
        })
        .filter_map(|r| r.transpose())
        .collect::<Result<_>>()?;

    if kept.len() < MIN_KEPT_WINDOWS {
        return Err(Error::InsufficientTraining {
            kept: kept.len(),
            required: MIN_KEPT_WINDOWS,
        });
    }

    let res = cfg.resolution;
    let index = |v: f64| ((v * res as f64) as usize).min(res - 1);
    let mut hist_true = vec![0.0; res * res];
    let mut hist_intf = vec![0.0; res * res];
    for w in &kept {
        hist_true[index(w.true_pair.0) * res + index(w.true_pair.1)] += 1.0;
        for &(p, h) in &w.interference {
            hist_intf[index(p) * res + index(h)] += 1.0;
        }
    }
    let true_samples = kept.len();
    let interference_samples = kept.len() * per_window;

    let likelihood_true = to_density(&hist_true, res, cfg);
    let likelihood_interference = to_density(&hist_intf, res, cfg);
    let prior = true_samples as f64 / (true_samples + interference_samples) as f64;

    let evidence: Vec<f64> = likelihood_true
        .iter()
        .zip(&likelihood_interference)
        .map(|(c, nc)| c * prior + nc * (1.0 - prior))
        .collect();
    let cells: Vec<f64> = likelihood_true
        .iter()
        .zip(&evidence)
        .map(|(c, e)| (c * prior / e).clamp(0.0, 1.0))
        .collect();

    Ok(TrainingReport {
        grid: PosteriorGrid::new(res, cells, prior, cfg.clone())?,
        kept_windows: kept.len(),
        true_samples,
        interference_samples,
        likelihood_true,
        likelihood_interference,
        evidence,
    })
}

fn to_density(hist: &[f64], res: usize, cfg: &TrainConfig) -> Vec<f64> {
    let mut d = gaussian_smooth(hist, res, cfg.smoothing_sigma);
    normalize(&mut d);
    d.iter_mut().for_each(|v| *v += cfg.smoothing_floor);
    normalize(&mut d);
    d
}

fn normalize(d: &mut [f64]) {
    let total: f64 = d.iter().sum();
    d.iter_mut().for_each(|v| *v /= total);
}

/// Separable Gaussian blur of a `res`×`res` row-major image with a kernel
/// truncated at 3σ. Mass falling outside the grid is dropped.
pub fn gaussian_smooth(image: &[f64], res: usize, sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return image.to_vec();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = {
        let raw: Vec<f64> = (-radius..=radius)
            .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / s).collect()
    };
    let blur = |src: &[f64], stride_outer: usize, stride_inner: usize| {
        let mut dst = vec![0.0; res * res];
        for o in 0..res {
            for i in 0..res {
                let mut acc = 0.0;
                for (t, w) in kernel.iter().enumerate() {
                    let j = i as isize + t as isize - radius;
                    if j >= 0 && (j as usize) < res {
                        acc += w * src[o * stride_outer + j as usize * stride_inner];
                    }
                }
                dst[o * stride_outer + i * stride_inner] = acc;
            }
        }
        dst
    };
    let rows = blur(image, res, 1);
    blur(&rows, 1, res)
}
