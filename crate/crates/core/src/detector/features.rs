use num_complex::Complex64;

use crate::phy::{DechirpedSpectrum, Fourier, SymbolWindow};
use crate::{Error, Result};

/// Per-bin PMD and HPD values of one window, both in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureField {
    pub p: Vec<f64>,
    pub h: Vec<f64>,
}

impl FeatureField {
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

/// Peak magnitude deviation: `min(| |X_k| - E | / E, 1)`.
pub fn pmd(spectrum: &DechirpedSpectrum, expected_peak: f64) -> Result<Vec<f64>> {
    if !(expected_peak.is_finite() && expected_peak > 0.0) {
        return Err(Error::InvalidParams(format!(
            "expected peak {expected_peak} must be positive"
        )));
    }
    Ok(spectrum
        .magnitudes
        .iter()
        .map(|&m| ((m - expected_peak) / expected_peak).abs().min(1.0))
        .collect())
}

fn check_even(n: usize) -> Result<()> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!(
            "half-period discriminator needs an even window, got {n}"
        )));
    }
    Ok(())
}

/// `min(|X_k|, |Y_k|) / |X_k|`, where `Y` is the spectrum with the second
/// half of the window negated. Zero-magnitude bins get 1.
fn hpd_from(x_mags: &[f64], y_bins: &[Complex64]) -> Vec<f64> {
    x_mags
        .iter()
        .zip(y_bins)
        .map(|(&x, y)| {
            if x == 0.0 {
                1.0
            } else {
                x.min(y.norm_sqr().sqrt()) / x
            }
        })
        .collect()
}

fn half_inverted(x: &[Complex64]) -> Vec<Complex64> {
    let half = x.len() / 2;
    x.iter()
        .enumerate()
        .map(|(i, &v)| if i < half { v } else { -v })
        .collect()
}

/// Half-period discriminator for every bin of `window`.
pub fn hpd(window: &SymbolWindow) -> Result<Vec<f64>> {
    FeatureExtractor::new(window.n())?.hpd(window)
}

/// Feature computation with a reusable FFT plan.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    fourier: Fourier,
}

impl FeatureExtractor {
    pub fn new(n: usize) -> Result<Self> {
        check_even(n)?;
        Ok(Self {
            fourier: Fourier::new(n),
        })
    }

    pub fn n(&self) -> usize {
        self.fourier.len()
    }

    pub fn hpd(&self, window: &SymbolWindow) -> Result<Vec<f64>> {
        if window.n() != self.n() {
            return Err(Error::WindowLength {
                expected: self.n(),
                got: window.n(),
            });
        }
        let y = self.fourier.transform(&half_inverted(&window.time_samples));
        Ok(hpd_from(&window.spectrum.magnitudes, &y))
    }

    pub fn extract(&self, window: &SymbolWindow, expected_peak: f64) -> Result<FeatureField> {
        let p = pmd(&window.spectrum, expected_peak)?;
        let h = self.hpd(window)?;
        Ok(FeatureField { p, h })
    }
}

/// Evaluates the half-length identity
/// `Y_k = Σ_{n<N/2} (x_n − (−1)^k x_{n+N/2}) e^{−j2πkn/N}` directly and
/// returns its largest deviation from the FFT of the half-inverted window.
pub fn eq1_check(window: &SymbolWindow) -> f64 {
    let x = &window.time_samples;
    let n = x.len();
    if n == 0 || !n.is_multiple_of(2) {
        return f64::NAN;
    }
    let half = n / 2;
    let fft = Fourier::new(n).transform(&half_inverted(x));
    let mut worst = 0.0f64;
    for (k, yk) in fft.iter().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let direct: Complex64 = (0..half)
            .map(|i| {
                let phase = -2.0 * std::f64::consts::PI * ((k * i) % n) as f64 / n as f64;
                (x[i] - x[i + half] * sign) * Complex64::from_polar(1.0, phase)
            })
            .sum();
        worst = worst.max((direct - yk).norm());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{add_tone, substream};
    use crate::phy::{modulate_symbol, Dechirper, PhyParams};
    use proptest::prelude::*;
    use rand::Rng;

    fn spectrum(mags: &[f64]) -> DechirpedSpectrum {
        DechirpedSpectrum::from_bins(mags.iter().map(|&m| Complex64::new(m, 0.0)).collect())
    }

    #[test]
    fn pmd_formula() {
        let p = pmd(&spectrum(&[100.0, 0.0, 200.0, 50.0, 150.0, 1000.0]), 100.0).unwrap();
        assert_eq!(p, vec![0.0, 1.0, 1.0, 0.5, 0.5, 1.0]);
        assert!(pmd(&spectrum(&[1.0]), 0.0).is_err());
        assert!(pmd(&spectrum(&[1.0]), -3.0).is_err());
    }

    #[test]
    fn hpd_nulls_complete_tone() {
        for sf in [7u8, 8, 9, 10] {
            let params = PhyParams::new(sf, 125e3).unwrap();
            let d = Dechirper::new(&params);
            let fx = FeatureExtractor::new(params.n()).unwrap();
            for m in [0, 1, 2, 3, params.n() / 2, params.n() - 1] {
                let w = d
                    .dechirp(&modulate_symbol(m, &params).unwrap().samples)
                    .unwrap();
                let h = fx.hpd(&w).unwrap();
                assert!(h[m] < 1e-9, "sf={sf} m={m} h={}", h[m]);
            }
        }
    }

    #[test]
    fn hpd_of_half_window_tone_is_one() {
        let n = 256;
        let fourier = Fourier::new(n);
        for bin in [0usize, 5, 6, 100] {
            let mut x = vec![Complex64::new(0.0, 0.0); n];
            add_tone(&mut x, bin as f64, 1.0, 0.7, 0..n / 2);
            let h = hpd(&fourier.window(x)).unwrap();
            assert!((h[bin] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hpd_zero_bins_and_odd_length() {
        let w = Fourier::new(16).window(vec![Complex64::new(0.0, 0.0); 16]);
        assert!(hpd(&w).unwrap().iter().all(|&h| h == 1.0));
        assert!(FeatureExtractor::new(15).is_err());
        let odd = Fourier::new(15).window(vec![Complex64::new(1.0, 0.0); 15]);
        assert!(hpd(&odd).is_err());
    }

    #[test]
    fn eq1_identity_holds() {
        let fourier = Fourier::new(256);
        let mut rng = substream(8, 0);
        for _ in 0..50 {
            let x: Vec<_> = (0..256)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            assert!(eq1_check(&fourier.window(x)) < 1e-9 * 256.0);
        }
        assert_eq!(
            eq1_check(&fourier.window(vec![Complex64::new(0.0, 0.0); 256])),
            0.0
        );
    }

    #[test]
    fn even_tone_halves_repeat() {
        let n = 256;
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        add_tone(&mut x, 42.0, 1.0, 0.0, 0..n);
        for i in 0..n / 2 {
            assert!((x[i] - x[i + n / 2]).norm() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn features_stay_in_unit_range(
            re in proptest::collection::vec(-10.0f64..10.0, 64),
            im in proptest::collection::vec(-10.0f64..10.0, 64),
            expected in 0.001f64..1000.0,
        ) {
            let x: Vec<_> = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
            let fx = FeatureExtractor::new(64).unwrap();
            let w = Fourier::new(64).window(x);
            let f = fx.extract(&w, expected).unwrap();
            prop_assert!(f.p.iter().chain(&f.h).all(|v| (0.0..=1.0).contains(v)));
        }

        #[test]
        fn features_gain_invariant(seed in any::<u64>(), gain in 0.05f64..20.0) {
            let mut rng = substream(seed, 0);
            let x: Vec<_> = (0..128)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let fourier = Fourier::new(128);
            let fx = FeatureExtractor::new(128).unwrap();
            let a = fx.extract(&fourier.window(x.clone()), 10.0).unwrap();
            let b = fx
                .extract(&fourier.window(x.iter().map(|v| v * gain).collect()), 10.0 * gain)
                .unwrap();
            for (u, v) in a.p.iter().zip(&b.p).chain(a.h.iter().zip(&b.h)) {
                prop_assert!((u - v).abs() < 1e-9);
            }
        }
    }
}
