//! Chirp spread spectrum modulation and the standard FFT demodulator.
//!
//! Everything runs at critical sampling (sample rate equal to the
//! bandwidth), so one symbol spans exactly `N = 2^SF` samples and the
//! dechirped spectrum has `N` bins. The reference upchirp uses the discrete
//! form `x0[n] = exp(jπ n²/N)`, which is exactly `N`-periodic for even `N`:
//! a symbol `m` is the cyclic shift `x0[(n + m) mod N]` and dechirps to a
//! pure tone at bin `m`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Result};

/// Bin value carried by both sync-word symbols.
pub const SYNC_WORD_BIN: usize = 8;

/// Preamble length used by LoRa transceivers out of the box.
pub const DEFAULT_PREAMBLE_LEN: usize = 8;

/// Spreading factor and bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhyParams {
    sf: u8,
    bandwidth_hz: f64,
}

impl PhyParams {
    pub fn new(sf: u8, bandwidth_hz: f64) -> Result<Self> {
        if !(7..=12).contains(&sf) {
            return Err(Error::InvalidParams(format!(
                "spreading factor {sf} outside 7..=12"
            )));
        }
        if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
            return Err(Error::InvalidParams(format!(
                "bandwidth {bandwidth_hz} Hz must be positive"
            )));
        }
        Ok(Self { sf, bandwidth_hz })
    }

    pub fn sf(&self) -> u8 {
        self.sf
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    /// Samples (and bins) per symbol.
    pub fn n(&self) -> usize {
        1 << self.sf
    }

    pub fn symbol_time_s(&self) -> f64 {
        self.n() as f64 / self.bandwidth_hz
    }
}

/// Complex baseband samples with their sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Self {
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean squared magnitude.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self::new(
            self.samples.iter().map(|s| s * gain).collect(),
            self.sample_rate_hz,
        )
    }
}

/// DFT of one dechirped window.
#[derive(Debug, Clone, PartialEq)]
pub struct DechirpedSpectrum {
    pub bins: Vec<Complex64>,
    pub magnitudes: Vec<f64>,
}

impl DechirpedSpectrum {
    pub fn from_bins(bins: Vec<Complex64>) -> Self {
        let magnitudes = bins.iter().map(|b| b.norm_sqr().sqrt()).collect();
        Self { bins, magnitudes }
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Phase of bin `k`. Carries no symbol information.
    pub fn phase(&self, k: usize) -> f64 {
        self.bins[k].arg()
    }
}

/// A dechirped symbol in both domains.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolWindow {
    pub time_samples: Vec<Complex64>,
    pub spectrum: DechirpedSpectrum,
}

impl SymbolWindow {
    pub fn n(&self) -> usize {
        self.time_samples.len()
    }

    /// Largest deviation between the stored spectrum and a direct DFT of the
    /// time samples. O(N²); for self-checks only.
    pub fn spectrum_deviation(&self) -> f64 {
        let direct = naive_dft(&self.time_samples);
        direct
            .iter()
            .zip(&self.spectrum.bins)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Direct O(N²) DFT with the same sign convention as the FFT.
pub fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(i, &v)| {
                    let idx = (i * k) % n;
                    v * Complex64::from_polar(1.0, -2.0 * PI * idx as f64 / n as f64)
                })
                .sum()
        })
        .collect()
}

/// A planned forward FFT of fixed length.
#[derive(Clone)]
pub struct Fourier {
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fourier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fourier").field("len", &self.len()).finish()
    }
}

impl Fourier {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n);
        Self { fft }
    }

    pub fn len(&self) -> usize {
        self.fft.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn transform(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let mut buf = samples.to_vec();
        self.fft.process(&mut buf);
        buf
    }

    pub fn spectrum(&self, samples: &[Complex64]) -> DechirpedSpectrum {
        DechirpedSpectrum::from_bins(self.transform(samples))
    }

    pub fn window(&self, time_samples: Vec<Complex64>) -> SymbolWindow {
        let spectrum = self.spectrum(&time_samples);
        SymbolWindow {
            time_samples,
            spectrum,
        }
    }
}

fn chirp_sample(n: usize, big_n: usize) -> Complex64 {
    // Reduce n² mod 2N first so the phase stays exact for long indices.
    let wrapped = ((n as u64) * (n as u64)) % (2 * big_n as u64);
    Complex64::from_polar(1.0, PI * wrapped as f64 / big_n as f64)
}

/// One period of the reference upchirp.
pub fn base_upchirp(params: &PhyParams) -> ComplexSignal {
    let n = params.n();
    ComplexSignal::new(
        (0..n).map(|i| chirp_sample(i, n)).collect(),
        params.bandwidth_hz(),
    )
}

/// Complex conjugate of [`base_upchirp`].
pub fn downchirp(params: &PhyParams) -> ComplexSignal {
    let mut s = base_upchirp(params);
    s.samples.iter_mut().for_each(|v| *v = v.conj());
    s
}

/// Symbol `m` as a cyclic shift of the reference upchirp.
pub fn modulate_symbol(m: usize, params: &PhyParams) -> Result<ComplexSignal> {
    let n = params.n();
    if m >= n {
        return Err(Error::SymbolOutOfRange { symbol: m, n });
    }
    Ok(ComplexSignal::new(
        (0..n).map(|i| chirp_sample((i + m) % n, n)).collect(),
        params.bandwidth_hz(),
    ))
}

/// Sample positions of the frame sections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub n: usize,
    pub preamble_len: usize,
    pub payload_len: usize,
}

impl FrameLayout {
    pub fn new(params: &PhyParams, preamble_len: usize, payload_len: usize) -> Self {
        Self {
            n: params.n(),
            preamble_len,
            payload_len,
        }
    }

    /// Start of preamble window `i`.
    pub fn preamble_start(&self, i: usize) -> usize {
        i * self.n
    }

    /// First sample of the payload: preamble, two sync words and 2.25
    /// downchirps precede it.
    pub fn payload_start(&self) -> usize {
        (self.preamble_len + 4) * self.n + self.n / 4
    }

    pub fn payload_window_start(&self, j: usize) -> usize {
        self.payload_start() + j * self.n
    }

    pub fn total_len(&self) -> usize {
        self.payload_start() + self.payload_len * self.n
    }
}

/// Preamble upchirps, two sync words, 2.25 downchirps, then the payload.
pub fn build_frame(
    payload_symbols: &[usize],
    preamble_len: usize,
    params: &PhyParams,
) -> Result<ComplexSignal> {
    if preamble_len == 0 {
        return Err(Error::InvalidParams(
            "preamble length must be at least 1".into(),
        ));
    }
    let n = params.n();
    if let Some(&bad) = payload_symbols.iter().find(|&&s| s >= n) {
        return Err(Error::SymbolOutOfRange { symbol: bad, n });
    }
    let layout = FrameLayout::new(params, preamble_len, payload_symbols.len());
    let up = base_upchirp(params).samples;
    let down = downchirp(params).samples;
    let sync = modulate_symbol(SYNC_WORD_BIN, params)?.samples;

    let mut samples = Vec::with_capacity(layout.total_len());
    for _ in 0..preamble_len {
        samples.extend_from_slice(&up);
    }
    samples.extend_from_slice(&sync);
    samples.extend_from_slice(&sync);
    samples.extend_from_slice(&down);
    samples.extend_from_slice(&down);
    samples.extend_from_slice(&down[..n / 4]);
    for &m in payload_symbols {
        samples.extend((0..n).map(|i| chirp_sample((i + m) % n, n)));
    }
    debug_assert_eq!(samples.len(), layout.total_len());
    Ok(ComplexSignal::new(samples, params.bandwidth_hz()))
}

/// Dechirps windows for one set of PHY parameters, reusing the downchirp
/// and the FFT plan.
#[derive(Debug, Clone)]
pub struct Dechirper {
    downchirp: Vec<Complex64>,
    fourier: Fourier,
}

impl Dechirper {
    pub fn new(params: &PhyParams) -> Self {
        Self {
            downchirp: downchirp(params).samples,
            fourier: Fourier::new(params.n()),
        }
    }

    pub fn n(&self) -> usize {
        self.downchirp.len()
    }

    pub fn fourier(&self) -> &Fourier {
        &self.fourier
    }

    pub fn dechirp(&self, window: &[Complex64]) -> Result<SymbolWindow> {
        if window.len() != self.n() {
            return Err(Error::WindowLength {
                expected: self.n(),
                got: window.len(),
            });
        }
        let time_samples = window
            .iter()
            .zip(&self.downchirp)
            .map(|(x, d)| x * d)
            .collect();
        Ok(self.fourier.window(time_samples))
    }
}

/// Multiplies one window by the downchirp and takes its DFT.
pub fn dechirp(window: &[Complex64], params: &PhyParams) -> Result<SymbolWindow> {
    Dechirper::new(params).dechirp(window)
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = k;
        }
    }
    best
}

/// Standard LoRa demodulation: the bin with the highest magnitude.
pub fn baseline_detect(spectrum: &DechirpedSpectrum) -> usize {
    argmax(&spectrum.magnitudes)
}

/// Mean of the preamble peak magnitudes, the expected magnitude of a true
/// peak.
pub fn estimate_expected_peak(preamble_windows: &[SymbolWindow]) -> Result<f64> {
    if preamble_windows.is_empty() {
        return Err(Error::Empty("preamble window list"));
    }
    let total: f64 = preamble_windows
        .iter()
        .map(|w| w.spectrum.magnitudes.iter().copied().fold(0.0, f64::max))
        .sum();
    Ok(total / preamble_windows.len() as f64)
}
