//! Channel impairments, frame collisions and synthetic training symbols.
//!
//! All randomness flows through explicit generators. Monte-Carlo loops
//! derive one ChaCha substream per trial from a master seed ([`substream`]),
//! so results do not depend on how trials are spread over workers.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numfmt::sig17;
use crate::phy::{ComplexSignal, Fourier, PhyParams, SymbolWindow};
use crate::{Error, Result};

/// Sinusoids per tap in the sum-of-sinusoids Rayleigh generator.
pub const JAKES_OSCILLATORS: usize = 16;

/// Deterministic, independent random stream `stream` of master seed `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Circularly-symmetric complex Gaussian sample with variance `power`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, power: f64) -> Complex64 {
    let sd = (power / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * sd, im * sd)
}

fn add_noise<R: Rng + ?Sized>(samples: &mut [Complex64], noise_power: f64, rng: &mut R) {
    for s in samples.iter_mut() {
        *s += complex_gaussian(rng, noise_power);
    }
}

/// Adds white Gaussian noise so that the input's mean power over the noise
/// variance equals `snr_db`. An infinite SNR adds nothing.
pub fn add_awgn<R: Rng + ?Sized>(
    signal: &ComplexSignal,
    snr_db: f64,
    rng: &mut R,
) -> Result<ComplexSignal> {
    if snr_db.is_nan() {
        return Err(Error::InvalidParams("SNR must not be NaN".into()));
    }
    let power = signal.mean_power();
    if power == 0.0 {
        return Err(Error::ZeroPower);
    }
    let mut out = signal.clone();
    if snr_db != f64::INFINITY {
        add_noise(&mut out.samples, power / db_to_power(snr_db), rng);
    }
    Ok(out)
}

/// Rotates sample `n` by `exp(j2π·delta_bins·n/N)`: a frequency shift of
/// `delta_bins` bin spacings for an `N`-sample symbol.
pub fn apply_freq_offset(signal: &ComplexSignal, delta_bins: f64, n: usize) -> ComplexSignal {
    let step = 2.0 * PI * delta_bins / n as f64;
    ComplexSignal::new(
        signal
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| s * Complex64::from_polar(1.0, step * i as f64))
            .collect(),
        signal.sample_rate_hz,
    )
}

/// Power-delay profile of a tapped-delay-line Rayleigh channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingProfile {
    tap_delays_s: Vec<f64>,
    tap_powers_db: Vec<f64>,
    max_doppler_hz: f64,
}

impl FadingProfile {
    pub fn new(
        tap_delays_s: Vec<f64>,
        tap_powers_db: Vec<f64>,
        max_doppler_hz: f64,
    ) -> Result<Self> {
        if tap_delays_s.is_empty() || tap_delays_s.len() != tap_powers_db.len() {
            return Err(Error::InvalidParams(
                "fading profile needs equally many delays and powers, at least one".into(),
            ));
        }
        if tap_delays_s[0] != 0.0 {
            return Err(Error::InvalidParams("first tap delay must be 0".into()));
        }
        if tap_delays_s.iter().any(|d| !d.is_finite())
            || tap_delays_s.windows(2).any(|w| w[0] > w[1])
        {
            return Err(Error::InvalidParams("tap delays must be ascending".into()));
        }
        if tap_powers_db.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParams("tap powers must be finite".into()));
        }
        if !(max_doppler_hz.is_finite() && max_doppler_hz >= 0.0) {
            return Err(Error::InvalidParams("Doppler must be non-negative".into()));
        }
        Ok(Self {
            tap_delays_s,
            tap_powers_db,
            max_doppler_hz,
        })
    }

    /// Nine-tap Extended Typical Urban power-delay profile (delays up to
    /// 5 µs).
    pub fn etu(max_doppler_hz: f64) -> Result<Self> {
        Self::new(
            [
                0.0, 50.0, 120.0, 200.0, 230.0, 500.0, 1600.0, 2300.0, 5000.0,
            ]
            .iter()
            .map(|ns| ns * 1e-9)
            .collect(),
            vec![-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, -3.0, -5.0, -7.0],
            max_doppler_hz,
        )
    }

    /// Single tap: flat Rayleigh fading.
    pub fn flat(max_doppler_hz: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![0.0], max_doppler_hz)
    }

    pub fn tap_delays_s(&self) -> &[f64] {
        &self.tap_delays_s
    }

    pub fn tap_powers_db(&self) -> &[f64] {
        &self.tap_powers_db
    }

    pub fn max_doppler_hz(&self) -> f64 {
        self.max_doppler_hz
    }

    /// Linear tap powers normalized to a total of one.
    pub fn normalized_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self.tap_powers_db.iter().map(|&p| db_to_power(p)).collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|p| p / total).collect()
    }
}

/// One tap's time-varying gain: a sum of equal-power sinusoids with random
/// arrival angles and phases.
struct TapProcess {
    amplitude: f64,
    doppler_rad_s: Vec<f64>,
    phases: Vec<f64>,
}

impl TapProcess {
    fn draw<R: Rng + ?Sized>(power: f64, max_doppler_hz: f64, rng: &mut R) -> Self {
        let mut doppler_rad_s = Vec::with_capacity(JAKES_OSCILLATORS);
        let mut phases = Vec::with_capacity(JAKES_OSCILLATORS);
        for _ in 0..JAKES_OSCILLATORS {
            let angle = rng.random::<f64>() * 2.0 * PI;
            doppler_rad_s.push(2.0 * PI * max_doppler_hz * angle.cos());
            phases.push(rng.random::<f64>() * 2.0 * PI);
        }
        Self {
            amplitude: (power / JAKES_OSCILLATORS as f64).sqrt(),
            doppler_rad_s,
            phases,
        }
    }

    fn gain(&self, t: f64) -> Complex64 {
        let sum: Complex64 = self
            .doppler_rad_s
            .iter()
            .zip(&self.phases)
            .map(|(w, p)| Complex64::from_polar(1.0, w * t + p))
            .sum();
        sum * self.amplitude
    }
}

/// Passes `signal` through a tapped delay line whose taps fade
/// independently. Delays are rounded to whole samples; the output keeps the
/// input length.
pub fn apply_fading<R: Rng + ?Sized>(
    signal: &ComplexSignal,
    profile: &FadingProfile,
    rng: &mut R,
) -> ComplexSignal {
    let fs = signal.sample_rate_hz;
    let taps: Vec<(usize, TapProcess)> = profile
        .tap_delays_s
        .iter()
        .zip(profile.normalized_powers())
        .map(|(&d, p)| {
            (
                (d * fs).round() as usize,
                TapProcess::draw(p, profile.max_doppler_hz, rng),
            )
        })
        .collect();
    let static_gains: Option<Vec<Complex64>> =
        (profile.max_doppler_hz == 0.0).then(|| taps.iter().map(|(_, t)| t.gain(0.0)).collect());

    let mut out = vec![Complex64::new(0.0, 0.0); signal.len()];
    for (i, y) in out.iter_mut().enumerate() {
        let t = i as f64 / fs;
        for (k, (delay, tap)) in taps.iter().enumerate() {
            if *delay > i {
                continue;
            }
            let h = match &static_gains {
                Some(g) => g[k],
                None => tap.gain(t),
            };
            *y += h * signal.samples[i - delay];
        }
    }
    ComplexSignal::new(out, fs)
}

/// A colliding frame and its placement relative to the target.
#[derive(Debug, Clone, PartialEq)]
pub struct Interferer {
    pub frame: ComplexSignal,
    /// Start of the interferer in target samples.
    pub offset_samples: usize,
    /// Power relative to the target frame; `-inf` removes the interferer.
    pub gain_db: f64,
}

/// Ground truth for one target payload window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruthSymbol {
    pub window_start: usize,
    pub value: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionScenario {
    pub phy: PhyParams,
    pub target_frame: ComplexSignal,
    pub interferers: Vec<Interferer>,
    /// SNR against the target's mean power before fading.
    pub snr_db: f64,
    /// Applied independently to the target and each interferer.
    pub fading: Option<FadingProfile>,
    pub truth: Vec<TruthSymbol>,
}

impl CollisionScenario {
    pub fn validate(&self) -> Result<()> {
        let len = self.target_frame.len();
        let n = self.phy.n();
        if len == 0 {
            return Err(Error::Validation("target frame is empty".into()));
        }
        if self.snr_db.is_nan() {
            return Err(Error::Validation("SNR is NaN".into()));
        }
        for (i, intf) in self.interferers.iter().enumerate() {
            if intf.frame.is_empty() {
                return Err(Error::Validation(format!("interferer {i} is empty")));
            }
            if intf.offset_samples >= len {
                return Err(Error::Validation(format!(
                    "interferer {i} starts at {} past the target end {len}",
                    intf.offset_samples
                )));
            }
            if intf.gain_db.is_nan() || intf.gain_db == f64::INFINITY {
                return Err(Error::Validation(format!(
                    "interferer {i} has invalid gain"
                )));
            }
        }
        if let Some(first) = self.truth.first() {
            for t in &self.truth {
                if t.window_start < first.window_start
                    || (t.window_start - first.window_start) % n != 0
                {
                    return Err(Error::Validation(format!(
                        "truth window {} is not aligned to the payload grid",
                        t.window_start
                    )));
                }
                if t.window_start + n > len {
                    return Err(Error::Validation(format!(
                        "truth window {} runs past the frame",
                        t.window_start
                    )));
                }
                if t.value >= n {
                    return Err(Error::SymbolOutOfRange { symbol: t.value, n });
                }
            }
        }
        Ok(())
    }
}

/// Sums the target with its delayed, scaled interferers over the target's
/// extent, then adds noise.
pub fn compose_collision<R: Rng + ?Sized>(
    scenario: &CollisionScenario,
    rng: &mut R,
) -> Result<(ComplexSignal, Vec<TruthSymbol>)> {
    scenario.validate()?;
    let target = &scenario.target_frame;
    let reference_power = target.mean_power();
    let mut out = match &scenario.fading {
        Some(profile) => apply_fading(target, profile, rng),
        None => target.clone(),
    };
    let len = out.len();
    for intf in &scenario.interferers {
        if intf.gain_db == f64::NEG_INFINITY {
            continue;
        }
        let scaled = intf.frame.scaled(db_to_amplitude(intf.gain_db));
        let frame = match &scenario.fading {
            Some(profile) => apply_fading(&scaled, profile, rng),
            None => scaled,
        };
        let span = (len - intf.offset_samples).min(frame.len());
        for (dst, src) in out.samples[intf.offset_samples..intf.offset_samples + span]
            .iter_mut()
            .zip(&frame.samples)
        {
            *dst += src;
        }
    }
    if scenario.snr_db != f64::INFINITY {
        if reference_power == 0.0 {
            return Err(Error::ZeroPower);
        }
        add_noise(
            &mut out.samples,
            reference_power / db_to_power(scenario.snr_db),
            rng,
        );
    }
    Ok((out, scenario.truth.clone()))
}

/// Parameters of the synthetic training-symbol generator and the grid
/// estimator fed by it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub n_bins: usize,
    pub n_symbols: usize,
    pub max_interferers: usize,
    /// Interferer power range relative to the unit target tone, dB.
    pub power_range_db: (f64, f64),
    /// Half-width of the uniform fractional frequency deviation, in bins.
    pub frac_freq_range: f64,
    pub interference_samples_per_symbol: usize,
    /// Per-sample SNR of the unit target tone.
    pub snr_db: f64,
    pub resolution: usize,
    /// Histogram smoothing kernel width, cells.
    pub smoothing_sigma: f64,
    /// Probability added to every cell of each smoothed, normalized class
    /// histogram before renormalizing. It should exceed the peak density a
    /// single smoothed sample leaves, `1 / (2πσ² · samples)`, so cells backed
    /// by a stray sample or two stay near the prior.
    pub smoothing_floor: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_bins: 256,
            n_symbols: 100_000,
            max_interferers: 2,
            power_range_db: (-15.0, 13.0),
            frac_freq_range: 0.125,
            interference_samples_per_symbol: 10,
            snr_db: -1.0,
            resolution: 200,
            smoothing_sigma: 2.0,
            smoothing_floor: 1e-5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub const KEYS: &'static [&'static str] = &[
        "n_bins",
        "n_symbols",
        "max_interferers",
        "power_min_db",
        "power_max_db",
        "frac_freq_range",
        "interference_samples_per_symbol",
        "snr_db",
        "resolution",
        "smoothing_sigma",
        "smoothing_floor",
        "seed",
    ];

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Validation(m.to_string()));
        if !self.n_bins.is_power_of_two() || self.n_bins < 4 {
            return fail("n_bins must be a power of two, at least 4");
        }
        if self.n_symbols == 0 || self.interference_samples_per_symbol == 0 || self.resolution == 0
        {
            return fail(
                "n_symbols, interference_samples_per_symbol and resolution must be at least 1",
            );
        }
        if self.interference_samples_per_symbol >= self.n_bins {
            return fail("interference_samples_per_symbol must be below n_bins");
        }
        let (lo, hi) = self.power_range_db;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return fail("power range must be finite and ordered");
        }
        if !(self.frac_freq_range.is_finite() && self.frac_freq_range >= 0.0) {
            return fail("frac_freq_range must be non-negative");
        }
        if self.snr_db.is_nan() {
            return fail("snr_db must not be NaN");
        }
        if !(self.smoothing_sigma.is_finite() && self.smoothing_sigma >= 0.0) {
            return fail("smoothing_sigma must be non-negative");
        }
        if !(self.smoothing_floor.is_finite() && self.smoothing_floor >= 0.0) {
            return fail("smoothing_floor must be non-negative");
        }
        Ok(())
    }

    /// Sets one field from its `key=value` spelling.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
        }
        match key {
            "n_bins" => self.n_bins = parse(key, value)?,
            "n_symbols" => self.n_symbols = parse(key, value)?,
            "max_interferers" => self.max_interferers = parse(key, value)?,
            "power_min_db" => self.power_range_db.0 = parse(key, value)?,
            "power_max_db" => self.power_range_db.1 = parse(key, value)?,
            "frac_freq_range" => self.frac_freq_range = parse(key, value)?,
            "interference_samples_per_symbol" => {
                self.interference_samples_per_symbol = parse(key, value)?
            }
            "snr_db" => self.snr_db = parse(key, value)?,
            "resolution" => self.resolution = parse(key, value)?,
            "smoothing_sigma" => self.smoothing_sigma = parse(key, value)?,
            "smoothing_floor" => self.smoothing_floor = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown training key {other:?}"))),
        }
        Ok(())
    }

    /// Space-separated `key=value` pairs, floats with 17 significant digits.
    pub fn to_pairs(&self) -> String {
        [
            format!("n_bins={}", self.n_bins),
            format!("n_symbols={}", self.n_symbols),
            format!("max_interferers={}", self.max_interferers),
            format!("power_min_db={}", sig17(self.power_range_db.0)),
            format!("power_max_db={}", sig17(self.power_range_db.1)),
            format!("frac_freq_range={}", sig17(self.frac_freq_range)),
            format!(
                "interference_samples_per_symbol={}",
                self.interference_samples_per_symbol
            ),
            format!("snr_db={}", sig17(self.snr_db)),
            format!("resolution={}", self.resolution),
            format!("smoothing_sigma={}", sig17(self.smoothing_sigma)),
            format!("smoothing_floor={}", sig17(self.smoothing_floor)),
            format!("seed={}", self.seed),
        ]
        .join(" ")
    }

    pub fn from_pairs(line: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for pair in line.split_whitespace() {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got {pair:?}")))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

/// One clipped-tone pair produced by a misaligned interferer.
#[derive(Debug, Clone, PartialEq)]
pub struct ClippedInterferer {
    /// Sample where the second tone takes over.
    pub boundary: usize,
    /// Frequency (bins) on `[0, boundary)`.
    pub first_freq: f64,
    /// Frequency (bins) on `[boundary, N)`.
    pub second_freq: f64,
    pub power_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSymbol {
    pub window: SymbolWindow,
    pub true_bin: usize,
    /// Frequency of the complete tone including its fractional deviation.
    pub true_freq: f64,
    pub interferers: Vec<ClippedInterferer>,
}

/// Adds `amplitude·exp(j(2π·freq·n/N + phase))` over `range`.
pub fn add_tone(
    samples: &mut [Complex64],
    freq_bins: f64,
    amplitude: f64,
    phase: f64,
    range: std::ops::Range<usize>,
) {
    let n = samples.len() as f64;
    let step = 2.0 * PI * freq_bins / n;
    for i in range {
        samples[i] += Complex64::from_polar(amplitude, step * i as f64 + phase);
    }
}

/// Synthesizes dechirped-domain training windows: one complete unit tone
/// plus clipped-tone pairs from interferers, plus noise.
#[derive(Debug, Clone)]
pub struct TrainingSynth {
    cfg: TrainConfig,
    fourier: Fourier,
}

impl TrainingSynth {
    pub fn new(cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.clone(),
            fourier: Fourier::new(cfg.n_bins),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn fourier(&self) -> &Fourier {
        &self.fourier
    }

    fn deviation<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let r = self.cfg.frac_freq_range;
        if r == 0.0 {
            0.0
        } else {
            rng.random_range(-r..=r)
        }
    }

    /// Draws the interferer count uniformly from `0..=max_interferers`.
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> TrainingSymbol {
        let count = rng.random_range(0..=self.cfg.max_interferers);
        self.generate_with(count, rng)
    }

    pub fn generate_with<R: Rng + ?Sized>(
        &self,
        interferers: usize,
        rng: &mut R,
    ) -> TrainingSymbol {
        let n = self.cfg.n_bins;
        let mut x = vec![Complex64::new(0.0, 0.0); n];

        let true_bin = rng.random_range(0..n);
        let true_freq = true_bin as f64 + self.deviation(rng);
        let phase = rng.random::<f64>() * 2.0 * PI;
        add_tone(&mut x, true_freq, 1.0, phase, 0..n);

        let (lo, hi) = self.cfg.power_range_db;
        let mut clipped = Vec::with_capacity(interferers);
        for _ in 0..interferers {
            let boundary = rng.random_range(0..n);
            let first_freq = rng.random_range(0..n) as f64 + self.deviation(rng);
            let second_freq = rng.random_range(0..n) as f64 + self.deviation(rng);
            let power_db = if lo == hi {
                lo
            } else {
                rng.random_range(lo..=hi)
            };
            let amp = db_to_amplitude(power_db);
            let p1 = rng.random::<f64>() * 2.0 * PI;
            let p2 = rng.random::<f64>() * 2.0 * PI;
            add_tone(&mut x, first_freq, amp, p1, 0..boundary);
            add_tone(&mut x, second_freq, amp, p2, boundary..n);
            clipped.push(ClippedInterferer {
                boundary,
                first_freq,
                second_freq,
                power_db,
            });
        }

        if self.cfg.snr_db != f64::INFINITY {
            add_noise(&mut x, 1.0 / db_to_power(self.cfg.snr_db), rng);
        }

        TrainingSymbol {
            window: self.fourier.window(x),
            true_bin,
            true_freq,
            interferers: clipped,
        }
    }
}

/// One training window; plans a fresh FFT, prefer [`TrainingSynth`] in loops.
pub fn gen_training_symbol<R: Rng + ?Sized>(
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<TrainingSymbol> {
    Ok(TrainingSynth::new(cfg)?.generate(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::hpd;
    use crate::phy::{baseline_detect, build_frame, modulate_symbol, Dechirper, FrameLayout};
    use proptest::prelude::*;

    fn sf8() -> PhyParams {
        PhyParams::new(8, 125e3).unwrap()
    }

    #[test]
    fn awgn_vanishes_at_high_snr() {
        let p = sf8();
        let sig = modulate_symbol(5, &p).unwrap();
        let noisy = add_awgn(&sig, 300.0, &mut substream(1, 0)).unwrap();
        for (a, b) in sig.samples.iter().zip(&noisy.samples) {
            assert!((a - b).norm() <= 1e-10 * a.norm());
        }
        let zero = ComplexSignal::new(vec![Complex64::new(0.0, 0.0); 16], 1.0);
        assert!(matches!(
            add_awgn(&zero, 10.0, &mut substream(1, 0)),
            Err(Error::ZeroPower)
        ));
    }

    #[test]
    fn awgn_variance() {
        let sig = ComplexSignal::new(vec![Complex64::new(1.0, 0.0); 100_000], 1.0);
        let noisy = add_awgn(&sig, 0.0, &mut substream(7, 3)).unwrap();
        let noise_power = noisy
            .samples
            .iter()
            .map(|s| (s - Complex64::new(1.0, 0.0)).norm_sqr())
            .sum::<f64>()
            / 1e5;
        assert!((0.9..=1.1).contains(&noise_power), "{noise_power}");
    }

    #[test]
    fn freq_offset_shifts_bins() {
        let p = sf8();
        let d = Dechirper::new(&p);
        let sig = modulate_symbol(40, &p).unwrap();
        assert_eq!(apply_freq_offset(&sig, 0.0, 256), sig);
        let tone = d.dechirp(&sig.samples).unwrap().time_samples;
        let shifted = apply_freq_offset(&ComplexSignal::new(tone.clone(), 125e3), 1.0, 256);
        let spec = d.fourier().spectrum(&shifted.samples);
        assert_eq!(baseline_detect(&spec), 41);
        let wrapped = apply_freq_offset(
            &ComplexSignal::new(
                d.dechirp(&modulate_symbol(255, &p).unwrap().samples)
                    .unwrap()
                    .time_samples,
                125e3,
            ),
            1.0,
            256,
        );
        assert_eq!(baseline_detect(&d.fourier().spectrum(&wrapped.samples)), 0);

        let frac = apply_freq_offset(&ComplexSignal::new(tone, 125e3), 0.125, 256);
        let w = d.fourier().window(frac.samples);
        let h = hpd(&w).unwrap();
        assert_eq!(baseline_detect(&w.spectrum), 40);
        assert!(h[40] > 0.0);
        let clean = hpd(&d.dechirp(&sig.samples).unwrap()).unwrap();
        assert!(h[40] > clean[40] + 0.1);
    }

    fn target(p: &PhyParams, payload: &[usize]) -> (ComplexSignal, Vec<TruthSymbol>) {
        let frame = build_frame(payload, 8, p).unwrap();
        let layout = FrameLayout::new(p, 8, payload.len());
        let truth = payload
            .iter()
            .enumerate()
            .map(|(j, &v)| TruthSymbol {
                window_start: layout.payload_window_start(j),
                value: v,
            })
            .collect();
        (frame, truth)
    }

    #[test]
    fn compose_without_interferers_is_identity() {
        let p = sf8();
        let (frame, truth) = target(&p, &[1, 2, 3]);
        let sc = CollisionScenario {
            phy: p,
            target_frame: frame.clone(),
            interferers: vec![Interferer {
                frame: frame.clone(),
                offset_samples: 100,
                gain_db: f64::NEG_INFINITY,
            }],
            snr_db: f64::INFINITY,
            fading: None,
            truth: truth.clone(),
        };
        let (out, t) = compose_collision(&sc, &mut substream(0, 0)).unwrap();
        assert_eq!(out, frame);
        assert_eq!(t, truth);

        let sc300 = CollisionScenario {
            interferers: vec![],
            snr_db: 300.0,
            ..sc
        };
        let (out, _) = compose_collision(&sc300, &mut substream(0, 0)).unwrap();
        for (a, b) in frame.samples.iter().zip(&out.samples) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn compose_validation() {
        let p = sf8();
        let (frame, truth) = target(&p, &[1, 2]);
        let mut sc = CollisionScenario {
            phy: p,
            target_frame: frame.clone(),
            interferers: vec![Interferer {
                frame: frame.clone(),
                offset_samples: frame.len(),
                gain_db: 0.0,
            }],
            snr_db: 10.0,
            fading: None,
            truth: truth.clone(),
        };
        assert!(matches!(
            compose_collision(&sc, &mut substream(0, 0)),
            Err(Error::Validation(_))
        ));
        sc.interferers.clear();
        sc.truth[1].window_start += 3;
        assert!(matches!(sc.validate(), Err(Error::Validation(_))));
    }

    /// Local maxima of `mags` above `floor`.
    fn peaks_above(mags: &[f64], floor: f64) -> Vec<usize> {
        let n = mags.len();
        (0..n)
            .filter(|&k| {
                let l = mags[(k + n - 1) % n];
                let r = mags[(k + 1) % n];
                mags[k] > floor && mags[k] >= l && mags[k] >= r
            })
            .collect()
    }

    /// Target payload window j straddles two interferer payload symbols.
    fn straddling_collision(gain_db: f64, delta: usize) -> (SymbolWindow, usize, usize, usize) {
        let p = sf8();
        let n = 256;
        let payload = vec![10, 100, 50, 220];
        let (frame, truth) = target(&p, &payload);
        let intf_payload = vec![3, 30, 180, 90];
        let intf = build_frame(&intf_payload, 8, &p).unwrap();
        let layout = FrameLayout::new(&p, 8, payload.len());
        // Interferer payload symbol 1 starts `delta` samples into target window 1.
        let w1 = layout.payload_window_start(1);
        let offset = w1 + delta - layout.payload_window_start(1);
        let sc = CollisionScenario {
            phy: p,
            target_frame: frame,
            interferers: vec![Interferer {
                frame: intf,
                offset_samples: offset,
                gain_db,
            }],
            snr_db: f64::INFINITY,
            fading: None,
            truth,
        };
        let (out, _) = compose_collision(&sc, &mut substream(0, 0)).unwrap();
        let w = Dechirper::new(&p)
            .dechirp(&out.samples[w1..w1 + n])
            .unwrap();
        // Dechirped frequency of an interferer symbol m starting d samples
        // into the window is (m - d) mod N.
        let f1 = (intf_payload[0] + n - delta % n) % n;
        let f2 = (intf_payload[1] + n - delta % n) % n;
        (w, payload[1], f1, f2)
    }

    #[test]
    fn collision_window_has_three_peaks() {
        let delta = 128;
        let (w, fm, f1, f2) = straddling_collision(0.0, delta);
        let mags = &w.spectrum.magnitudes;
        assert!((mags[fm] - 256.0).abs() < 20.0);
        let mut peaks = peaks_above(mags, 0.75 * delta as f64);
        peaks.sort_unstable();
        let mut expect = vec![fm, f1, f2];
        expect.sort_unstable();
        assert_eq!(peaks, expect);
    }

    #[test]
    fn stronger_interferer_fools_baseline() {
        let delta = (0.6 * 256.0) as usize;
        let (w, fm, f1, f2) = straddling_collision(6.0, delta);
        let detected = baseline_detect(&w.spectrum);
        assert_ne!(detected, fm);
        assert!(detected == f1 || detected == f2);
        // the true bin still holds a complete waveform
        let h = hpd(&w).unwrap();
        assert!(h[fm] < 0.2);
        assert!(h[fm] < 0.5 * h[f1].min(h[f2]));
    }

    #[test]
    fn single_static_tap_is_constant_gain() {
        let p = sf8();
        let sig = modulate_symbol(9, &p).unwrap();
        let prof = FadingProfile::flat(0.0).unwrap();
        let out = apply_fading(&sig, &prof, &mut substream(3, 0));
        let h = out.samples[0] / sig.samples[0];
        for (o, i) in out.samples.iter().zip(&sig.samples) {
            assert!((o / i - h).norm() < 1e-12);
        }
    }

    #[test]
    fn static_tap_envelope_is_rayleigh() {
        // E|h|² = 1 and E|h| = sqrt(pi)/2 for unit-power Rayleigh.
        let prof = FadingProfile::flat(0.0).unwrap();
        let sig = ComplexSignal::new(vec![Complex64::new(1.0, 0.0)], 1.0);
        let mut rng = substream(11, 0);
        let draws: Vec<f64> = (0..20_000)
            .map(|_| apply_fading(&sig, &prof, &mut rng).samples[0].norm())
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let power = draws.iter().map(|a| a * a).sum::<f64>() / draws.len() as f64;
        assert!((power - 1.0).abs() < 0.05, "{power}");
        assert!((mean - PI.sqrt() / 2.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn fading_preserves_mean_power() {
        // Signal spans many coherence times so each realization averages
        // its own fluctuations.
        let prof = FadingProfile::etu(5.0).unwrap();
        let sig = ComplexSignal::new(vec![Complex64::new(1.0, 0.0); 4000], 1000.0);
        let mean: f64 = (0..100)
            .map(|r| apply_fading(&sig, &prof, &mut substream(21, r)).mean_power())
            .sum::<f64>()
            / 100.0;
        assert!((mean - 1.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn etu_peak_varies_over_frame() {
        let p = sf8();
        let payload: Vec<usize> = (0..30).map(|i| (i * 37) % 256).collect();
        let frame = build_frame(&payload, 8, &p).unwrap();
        let faded = apply_fading(
            &frame,
            &FadingProfile::etu(5.0).unwrap(),
            &mut substream(5, 0),
        );
        let layout = FrameLayout::new(&p, 8, payload.len());
        let d = Dechirper::new(&p);
        let peaks: Vec<f64> = (0..30)
            .map(|j| {
                let s = layout.payload_window_start(j);
                let w = d.dechirp(&faded.samples[s..s + 256]).unwrap();
                w.spectrum.magnitudes.iter().copied().fold(0.0, f64::max)
            })
            .collect();
        let mean = peaks.iter().sum::<f64>() / 30.0;
        let var = peaks.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / 30.0;
        assert!(var > 0.0);
    }

    #[test]
    fn fading_profile_validation() {
        assert!(FadingProfile::new(vec![], vec![], 0.0).is_err());
        assert!(FadingProfile::new(vec![1e-6], vec![0.0], 0.0).is_err());
        assert!(FadingProfile::new(vec![0.0, 2e-6, 1e-6], vec![0.0; 3], 0.0).is_err());
        assert!(FadingProfile::new(vec![0.0], vec![0.0], -1.0).is_err());
        let etu = FadingProfile::etu(5.0).unwrap();
        assert_eq!(etu.tap_delays_s().len(), 9);
        assert!((etu.normalized_powers().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn training_symbol_without_interferers() {
        let cfg = TrainConfig {
            max_interferers: 0,
            frac_freq_range: 0.0,
            snr_db: 30.0,
            ..TrainConfig::default()
        };
        let synth = TrainingSynth::new(&cfg).unwrap();
        let mut rng = substream(2, 0);
        for _ in 0..200 {
            let s = synth.generate(&mut rng);
            assert!(s.interferers.is_empty());
            assert_eq!(baseline_detect(&s.window.spectrum), s.true_bin);
        }
    }

    #[test]
    fn strong_interferers_fool_baseline_sometimes() {
        let cfg = TrainConfig {
            power_range_db: (13.0, 13.0),
            ..TrainConfig::default()
        };
        let synth = TrainingSynth::new(&cfg).unwrap();
        let mut rng = substream(4, 0);
        let wrong = (0..10_000)
            .filter(|_| {
                let s = synth.generate(&mut rng);
                baseline_detect(&s.window.spectrum) != s.true_bin
            })
            .count();
        assert!(wrong > 0);
    }

    #[test]
    fn clipped_tone_peak_scales_with_length() {
        let n = 256;
        let fourier = Fourier::new(n);
        for (len, amp) in [(64usize, 1.0), (100, 2.5), (200, 0.5)] {
            let mut x = vec![Complex64::new(0.0, 0.0); n];
            add_tone(&mut x, 17.0, amp, 0.3, 0..len);
            let spec = fourier.spectrum(&x);
            assert!((spec.magnitudes[17] - amp * len as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn train_config_pairs_round_trip() {
        let cfg = TrainConfig {
            seed: 99,
            snr_db: 3.25,
            ..TrainConfig::default()
        };
        assert_eq!(TrainConfig::from_pairs(&cfg.to_pairs()).unwrap(), cfg);
        assert!(TrainConfig::from_pairs("bogus=1").is_err());
        assert!(TrainConfig {
            n_bins: 100,
            ..cfg.clone()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            power_range_db: (5.0, -5.0),
            ..cfg
        }
        .validate()
        .is_err());
    }

    proptest! {
        #[test]
        fn gain_scales_power(g in -40.0f64..40.0, m in 0usize..256) {
            let p = sf8();
            let sig = modulate_symbol(m, &p).unwrap();
            let scaled = sig.scaled(db_to_amplitude(g));
            let ratio = scaled.mean_power() / sig.mean_power();
            prop_assert!((ratio / db_to_power(g) - 1.0).abs() < 1e-9);
        }

        #[test]
        fn training_is_deterministic(seed in any::<u64>()) {
            let cfg = TrainConfig::default();
            let synth = TrainingSynth::new(&cfg).unwrap();
            let a = synth.generate(&mut substream(seed, 1));
            let b = synth.generate(&mut substream(seed, 1));
            prop_assert_eq!(a, b);
        }
    }
}
