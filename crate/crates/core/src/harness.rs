//! Seeded symbol-error and frame-success campaigns, per-stage benchmarks
//! and CSV output.
//!
//! Demodulation runs in known-boundary mode: window positions come from the
//! frame layout instead of a synchronizer. Frame `i` of a campaign draws all
//! its randomness from substream `i` of the campaign seed, so baseline and
//! CoRa runs with the same seed see identical channel realizations and
//! results do not depend on the number of worker threads.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::{
    compose_collision, substream, CollisionScenario, FadingProfile, Interferer, TruthSymbol,
};
use crate::detector::{
    score_bins, ClassifierState, CoraDetector, Decision, FeatureExtractor, PosteriorGrid,
};
use crate::numfmt::sig17;
use crate::phy::{
    argmax, baseline_detect, build_frame, estimate_expected_peak, Dechirper, FrameLayout,
    PhyParams, SymbolWindow,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    Baseline,
    Cora,
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectorKind::Baseline => "baseline",
            DetectorKind::Cora => "cora",
        })
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(DetectorKind::Baseline),
            "cora" => Ok(DetectorKind::Cora),
            other => Err(Error::Config(format!("unknown detector {other:?}"))),
        }
    }
}

/// Where interferers start relative to the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffsetMode {
    /// Uniform over the target's extent.
    Random,
    Fixed(usize),
}

/// Channel conditions of one campaign point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub snr_db: f64,
    pub interferers: usize,
    /// Target-to-interferer power ratio, drawn uniformly per interferer.
    pub sir_range_db: (f64, f64),
    pub offset: OffsetMode,
    pub fading: Option<FadingProfile>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            snr_db: f64::INFINITY,
            interferers: 0,
            sir_range_db: (0.0, 0.0),
            offset: OffsetMode::Random,
            fading: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub phy: PhyParams,
    pub detector: DetectorKind,
    pub grid: Option<Arc<PosteriorGrid>>,
    pub scenario: ScenarioSpec,
    pub preamble_len: usize,
    pub n_frames: usize,
    pub symbols_per_frame: usize,
    /// A frame succeeds when it has at most this many symbol errors.
    pub frame_error_threshold: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(phy: PhyParams, detector: DetectorKind) -> Self {
        Self {
            phy,
            detector,
            grid: None,
            scenario: ScenarioSpec::default(),
            preamble_len: crate::phy::DEFAULT_PREAMBLE_LEN,
            n_frames: 100,
            symbols_per_frame: 20,
            frame_error_threshold: 0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_frames == 0 || self.symbols_per_frame == 0 || self.preamble_len == 0 {
            return Err(Error::Config(
                "n_frames, symbols_per_frame and preamble_len must be at least 1".into(),
            ));
        }
        if self.detector == DetectorKind::Cora && self.grid.is_none() {
            return Err(Error::Config(
                "the cora detector needs a posterior grid".into(),
            ));
        }
        let (lo, hi) = self.scenario.sir_range_db;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config("SIR range must be finite and ordered".into()));
        }
        if self.scenario.snr_db.is_nan() {
            return Err(Error::Config("SNR must not be NaN".into()));
        }
        Ok(())
    }

    pub fn layout(&self) -> FrameLayout {
        FrameLayout::new(&self.phy, self.preamble_len, self.symbols_per_frame)
    }
}

/// Mean seconds per symbol spent in each demodulation stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimes {
    pub dechirp: f64,
    pub features: f64,
    pub classifier: f64,
    pub argmax: f64,
}

impl StageTimes {
    pub fn total(&self) -> f64 {
        self.dechirp + self.features + self.classifier + self.argmax
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub detector: DetectorKind,
    pub sf: u8,
    pub snr_db: f64,
    pub sir_range_db: (f64, f64),
    pub interferers: usize,
    pub fading: bool,
    pub frames_total: usize,
    pub symbols_total: usize,
    pub symbol_errors: usize,
    pub ser: f64,
    pub frames_ok: usize,
    pub prr: f64,
    /// Successful frames per second of simulated airtime.
    pub throughput_fps: f64,
    pub stage_times: StageTimes,
    /// End-to-end time per symbol measured in one pass; benchmarks only.
    pub pipeline_time_s: f64,
    pub seed: u64,
}

impl MetricsRecord {
    fn new(
        cfg: &ExperimentConfig,
        frames_total: usize,
        symbols_total: usize,
        symbol_errors: usize,
        frames_ok: usize,
    ) -> Self {
        let airtime =
            frames_total as f64 * cfg.layout().total_len() as f64 / cfg.phy.bandwidth_hz();
        Self {
            detector: cfg.detector,
            sf: cfg.phy.sf(),
            snr_db: cfg.scenario.snr_db,
            sir_range_db: cfg.scenario.sir_range_db,
            interferers: cfg.scenario.interferers,
            fading: cfg.scenario.fading.is_some(),
            frames_total,
            symbols_total,
            symbol_errors,
            ser: symbol_errors as f64 / symbols_total as f64,
            frames_ok,
            prr: frames_ok as f64 / frames_total as f64,
            throughput_fps: frames_ok as f64 / airtime,
            stage_times: StageTimes::default(),
            pipeline_time_s: 0.0,
            seed: cfg.seed,
        }
    }
}

/// One simulated reception: the composite signal over the target's extent
/// and what was sent.
#[derive(Debug, Clone)]
pub struct FrameRealization {
    pub composite: Vec<Complex64>,
    pub layout: FrameLayout,
    pub truth: Vec<TruthSymbol>,
    /// `(offset_samples, gain_db)` per interferer.
    pub interferers: Vec<(usize, f64)>,
}

/// Builds frame `frame_index` of the campaign described by `cfg`.
pub fn realize_frame(cfg: &ExperimentConfig, frame_index: u64) -> Result<FrameRealization> {
    let mut rng = substream(cfg.seed, frame_index);
    let n = cfg.phy.n();
    let layout = cfg.layout();

    let payload: Vec<usize> = (0..cfg.symbols_per_frame)
        .map(|_| rng.random_range(0..n))
        .collect();
    let target = build_frame(&payload, cfg.preamble_len, &cfg.phy)?;
    let truth = payload
        .iter()
        .enumerate()
        .map(|(j, &value)| TruthSymbol {
            window_start: layout.payload_window_start(j),
            value,
        })
        .collect();

    let (lo, hi) = cfg.scenario.sir_range_db;
    let mut interferers = Vec::with_capacity(cfg.scenario.interferers);
    for _ in 0..cfg.scenario.interferers {
        let intf_payload: Vec<usize> = (0..cfg.symbols_per_frame)
            .map(|_| rng.random_range(0..n))
            .collect();
        let offset_samples = match cfg.scenario.offset {
            OffsetMode::Random => rng.random_range(0..target.len()),
            OffsetMode::Fixed(o) => o,
        };
        let sir = if lo == hi {
            lo
        } else {
            rng.random_range(lo..=hi)
        };
        interferers.push(Interferer {
            frame: build_frame(&intf_payload, cfg.preamble_len, &cfg.phy)?,
            offset_samples,
            gain_db: -sir,
        });
    }
    let placement = interferers
        .iter()
        .map(|i| (i.offset_samples, i.gain_db))
        .collect();

    let scenario = CollisionScenario {
        phy: cfg.phy,
        target_frame: target,
        interferers,
        snr_db: cfg.scenario.snr_db,
        fading: cfg.scenario.fading.clone(),
        truth,
    };
    let (composite, truth) = compose_collision(&scenario, &mut rng)?;
    Ok(FrameRealization {
        composite: composite.samples,
        layout,
        truth,
        interferers: placement,
    })
}

/// Known-boundary demodulator for whole frames.
#[derive(Debug, Clone)]
pub struct FrameReceiver {
    dechirper: Dechirper,
    cora: Option<CoraDetector>,
}

impl FrameReceiver {
    pub fn new(
        phy: &PhyParams,
        kind: DetectorKind,
        grid: Option<Arc<PosteriorGrid>>,
    ) -> Result<Self> {
        let cora = match kind {
            DetectorKind::Baseline => None,
            DetectorKind::Cora => {
                let grid = grid.ok_or_else(|| {
                    Error::Config("the cora detector needs a posterior grid".into())
                })?;
                Some(CoraDetector::new(grid, phy.n())?)
            }
        };
        Ok(Self {
            dechirper: Dechirper::new(phy),
            cora,
        })
    }

    fn window(&self, samples: &[Complex64], start: usize) -> Result<SymbolWindow> {
        let n = self.dechirper.n();
        let slice = samples.get(start..start + n).ok_or(Error::WindowLength {
            expected: n,
            got: samples.len().saturating_sub(start).min(n),
        })?;
        self.dechirper.dechirp(slice)
    }

    /// Demodulates the windows at `payload_starts`. The expected peak comes
    /// from `preamble_len` upchirp windows starting at sample 0; CoRa's
    /// previous-window state is seeded from the window right before the
    /// first payload window.
    pub fn demodulate(
        &mut self,
        samples: &[Complex64],
        preamble_len: usize,
        payload_starts: &[usize],
    ) -> Result<Vec<Decision>> {
        let n = self.dechirper.n();
        match self.cora.take() {
            None => payload_starts
                .iter()
                .map(|&s| {
                    let w = self.window(samples, s)?;
                    let bin = baseline_detect(&w.spectrum);
                    Ok(Decision {
                        bin,
                        score: w.spectrum.magnitudes[bin],
                    })
                })
                .collect(),
            Some(mut det) => {
                let result = (|| {
                    let preamble = (0..preamble_len)
                        .map(|i| self.window(samples, i * n))
                        .collect::<Result<Vec<_>>>()?;
                    let expected = estimate_expected_peak(&preamble)?;
                    if expected <= 0.0 {
                        return Err(Error::ZeroPower);
                    }
                    det.reset();
                    if let Some(&first) = payload_starts.first() {
                        if first >= n {
                            det.prime(&self.window(samples, first - n)?, expected)?;
                        }
                    }
                    payload_starts
                        .iter()
                        .map(|&s| det.detect(&self.window(samples, s)?, expected))
                        .collect()
                })();
                self.cora = Some(det);
                result
            }
        }
    }
}

fn symbol_errors(decisions: &[Decision], truth: &[TruthSymbol]) -> usize {
    decisions
        .iter()
        .zip(truth)
        .filter(|(d, t)| d.bin != t.value)
        .count()
}

/// Runs every frame of the campaign and aggregates the counts.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsRecord> {
    cfg.validate()?;
    let per_frame: Vec<usize> = (0..cfg.n_frames as u64)
        .into_par_iter()
        .map_init(
            || FrameReceiver::new(&cfg.phy, cfg.detector, cfg.grid.clone()),
            |rx, f| {
                let rx = rx.as_mut().map_err(|e| Error::Config(e.to_string()))?;
                let frame = realize_frame(cfg, f)?;
                let starts: Vec<usize> = frame.truth.iter().map(|t| t.window_start).collect();
                let decisions = rx.demodulate(&frame.composite, cfg.preamble_len, &starts)?;
                Ok(symbol_errors(&decisions, &frame.truth))
            },
        )
        .collect::<Result<_>>()?;
    let errors: usize = per_frame.iter().sum();
    let ok = per_frame
        .iter()
        .filter(|&&e| e <= cfg.frame_error_threshold)
        .count();
    Ok(MetricsRecord::new(
        cfg,
        cfg.n_frames,
        cfg.n_frames * cfg.symbols_per_frame,
        errors,
        ok,
    ))
}

/// One record per SNR value, everything else fixed.
pub fn run_sweep(cfg: &ExperimentConfig, snrs_db: &[f64]) -> Result<Vec<MetricsRecord>> {
    snrs_db
        .iter()
        .map(|&snr| {
            let mut point = cfg.clone();
            point.scenario.snr_db = snr;
            run_experiment(&point)
        })
        .collect()
}

/// Raw payload windows plus the per-frame expected peak, for benchmarking.
struct BenchInput {
    raw: Vec<Vec<Complex64>>,
    expected: Vec<f64>,
    truth: Vec<usize>,
    frame: Vec<usize>,
}

fn bench_input(cfg: &ExperimentConfig, count: usize) -> Result<BenchInput> {
    let dechirper = Dechirper::new(&cfg.phy);
    let n = cfg.phy.n();
    let mut input = BenchInput {
        raw: Vec::with_capacity(count),
        expected: Vec::with_capacity(count),
        truth: Vec::with_capacity(count),
        frame: Vec::with_capacity(count),
    };
    let mut f = 0u64;
    while input.raw.len() < count {
        let frame = realize_frame(cfg, f)?;
        let preamble = (0..cfg.preamble_len)
            .map(|i| dechirper.dechirp(&frame.composite[i * n..(i + 1) * n]))
            .collect::<Result<Vec<_>>>()?;
        let expected = estimate_expected_peak(&preamble)?;
        for t in &frame.truth {
            input
                .raw
                .push(frame.composite[t.window_start..t.window_start + n].to_vec());
            input.expected.push(expected);
            input.truth.push(t.value);
            input.frame.push(f as usize);
        }
        f += 1;
    }
    input.raw.truncate(count);
    input.expected.truncate(count);
    input.truth.truncate(count);
    input.frame.truncate(count);
    Ok(input)
}

/// Timing rounds per benchmark.
pub const BENCH_ROUNDS: usize = 5;

/// Measures mean wall time per symbol for each demodulation stage.
/// Each of the `n_iter` symbols after `n_warmup` untimed ones is timed
/// stage by stage; every figure is the fastest of [`BENCH_ROUNDS`] round
/// means. The baseline has no feature or classifier stage.
pub fn bench_stages(
    cfg: &ExperimentConfig,
    n_warmup: usize,
    n_iter: usize,
) -> Result<MetricsRecord> {
    cfg.validate()?;
    if n_iter < 30 {
        return Err(Error::Config(format!(
            "n_iter {n_iter} below the minimum of 30"
        )));
    }
    let input = bench_input(cfg, n_warmup + n_iter)?;
    let indices: Vec<usize> = (0..input.raw.len()).collect();
    let (warm, timed) = indices.split_at(n_warmup);

    let dechirper = Dechirper::new(&cfg.phy);
    let extractor = FeatureExtractor::new(cfg.phy.n())?;
    let grid = cfg.grid.clone();
    let kind = cfg.detector;

    let pipeline = |i: usize, state: &mut ClassifierState| -> Result<usize> {
        let w = dechirper.dechirp(&input.raw[i])?;
        match (&grid, kind) {
            (Some(g), DetectorKind::Cora) => {
                let f = extractor.extract(&w, input.expected[i])?;
                let (q, scores) = score_bins(&f, g, state)?;
                *state = ClassifierState::with_previous(q)?;
                Ok(argmax(&scores))
            }
            _ => Ok(baseline_detect(&w.spectrum)),
        }
    };

    let mut state = ClassifierState::new();
    for &i in warm {
        std::hint::black_box(pipeline(i, &mut state)?);
    }

    // Chained timestamps per symbol: consecutive stage durations tile the
    // symbol's processing time, so their sum tracks the end-to-end time.
    // The end-to-end run of each symbol is interleaved with the staged one,
    // alternating which goes first, so both see the same machine load.
    let round = |decisions: &mut Vec<usize>| -> Result<([Duration; 4], Duration)> {
        let mut acc = [Duration::ZERO; 4];
        let mut pipe = Duration::ZERO;
        let mut staged_state = ClassifierState::new();
        let mut pipe_state = ClassifierState::new();
        decisions.clear();
        for (j, &i) in timed.iter().enumerate() {
            let mut end_to_end = || -> Result<()> {
                let t = Instant::now();
                std::hint::black_box(pipeline(i, &mut pipe_state)?);
                pipe += t.elapsed();
                Ok(())
            };
            if j % 2 == 1 {
                end_to_end()?;
            }
            let t0 = Instant::now();
            let w = dechirper.dechirp(&input.raw[i])?;
            let t1 = Instant::now();
            acc[0] += t1 - t0;
            match (&grid, kind) {
                (Some(g), DetectorKind::Cora) => {
                    let f = extractor.extract(&w, input.expected[i])?;
                    let t2 = Instant::now();
                    let (q, scores) = score_bins(&f, g, &staged_state)?;
                    staged_state = ClassifierState::with_previous(q)?;
                    let t3 = Instant::now();
                    decisions.push(argmax(std::hint::black_box(&scores)));
                    let t4 = Instant::now();
                    acc[1] += t2 - t1;
                    acc[2] += t3 - t2;
                    acc[3] += t4 - t3;
                }
                _ => {
                    decisions.push(baseline_detect(std::hint::black_box(&w.spectrum)));
                    acc[3] += t1.elapsed();
                }
            }
            if j % 2 == 0 {
                end_to_end()?;
            }
        }
        Ok((acc, pipe))
    };

    // Report the fastest round, which discards rounds disturbed by other
    // load on the machine.
    let mut decisions = Vec::with_capacity(timed.len());
    let mut best: Option<([Duration; 4], Duration)> = None;
    for _ in 0..BENCH_ROUNDS {
        let r = round(&mut decisions)?;
        let cost = |(a, p): &([Duration; 4], Duration)| a.iter().sum::<Duration>() + *p;
        if best.as_ref().is_none_or(|b| cost(&r) < cost(b)) {
            best = Some(r);
        }
    }
    let (best, best_pipeline) = best.expect("at least one round");
    let per_symbol = |d: Duration| d.as_secs_f64() / timed.len() as f64;
    let times = StageTimes {
        dechirp: per_symbol(best[0]),
        features: per_symbol(best[1]),
        classifier: per_symbol(best[2]),
        argmax: per_symbol(best[3]),
    };
    let pipeline_time_s = per_symbol(best_pipeline);

    let mut frame_errors = vec![0usize; input.frame.last().map_or(0, |f| f + 1)];
    for (&d, &i) in decisions.iter().zip(timed) {
        if d != input.truth[i] {
            frame_errors[input.frame[i]] += 1;
        }
    }
    let first_frame = input.frame[timed[0]];
    let timed_frames = &frame_errors[first_frame..];
    let errors: usize = timed_frames.iter().sum();
    let ok = timed_frames
        .iter()
        .filter(|&&e| e <= cfg.frame_error_threshold)
        .count();
    let mut rec = MetricsRecord::new(cfg, timed_frames.len(), timed.len(), errors, ok);
    rec.stage_times = times;
    rec.pipeline_time_s = pipeline_time_s;
    Ok(rec)
}

/// Column order of [`write_csv`].
pub const CSV_HEADER: &str = "detector,sf,snr_db,sir_db,interferers,fading,frames,symbols,symbol_errors,ser,frames_ok,prr,throughput_fps,t_dechirp_s,t_features_s,t_classifier_s,t_argmax_s,seed";

fn sir_field(range: (f64, f64)) -> String {
    if range.0 == range.1 {
        sig17(range.0)
    } else {
        format!("{}:{}", sig17(range.0), sig17(range.1))
    }
}

pub fn csv_row(r: &MetricsRecord) -> String {
    [
        r.detector.to_string(),
        r.sf.to_string(),
        sig17(r.snr_db),
        sir_field(r.sir_range_db),
        r.interferers.to_string(),
        if r.fading { "on" } else { "off" }.to_string(),
        r.frames_total.to_string(),
        r.symbols_total.to_string(),
        r.symbol_errors.to_string(),
        sig17(r.ser),
        r.frames_ok.to_string(),
        sig17(r.prr),
        sig17(r.throughput_fps),
        sig17(r.stage_times.dechirp),
        sig17(r.stage_times.features),
        sig17(r.stage_times.classifier),
        sig17(r.stage_times.argmax),
        r.seed.to_string(),
    ]
    .join(",")
}

pub fn to_csv(records: &[MetricsRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::Empty("record list"));
    }
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_csv(records: &[MetricsRecord], destination: &Path) -> Result<()> {
    let text = to_csv(records)?;
    fs::write(destination, text).map_err(|e| Error::io(destination, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: DetectorKind) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(PhyParams::new(8, 125e3).unwrap(), kind);
        c.n_frames = 10;
        c.symbols_per_frame = 20;
        c
    }

    #[test]
    fn noiseless_baseline_is_perfect() {
        let r = run_experiment(&cfg(DetectorKind::Baseline)).unwrap();
        assert_eq!(r.symbol_errors, 0);
        assert_eq!(r.ser, 0.0);
        assert_eq!(r.prr, 1.0);
        assert_eq!(r.symbols_total, 200);
        assert!(r.throughput_fps > 0.0);
    }

    #[test]
    fn cora_needs_grid() {
        assert!(matches!(
            run_experiment(&cfg(DetectorKind::Cora)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn paired_realizations_match() {
        let mut a = cfg(DetectorKind::Baseline);
        a.scenario.interferers = 2;
        a.scenario.snr_db = 5.0;
        a.scenario.sir_range_db = (-3.0, 3.0);
        let mut b = a.clone();
        b.detector = DetectorKind::Cora;
        for f in 0..3 {
            let x = realize_frame(&a, f).unwrap();
            let y = realize_frame(&b, f).unwrap();
            assert_eq!(x.composite, y.composite);
            assert_eq!(x.interferers, y.interferers);
        }
    }

    #[test]
    fn worker_count_does_not_matter() {
        let mut c = cfg(DetectorKind::Baseline);
        c.scenario.interferers = 1;
        c.scenario.snr_db = 0.0;
        c.scenario.sir_range_db = (-6.0, 0.0);
        c.n_frames = 40;
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| run_experiment(&c).unwrap());
        let b = four.install(|| run_experiment(&c).unwrap());
        assert_eq!(a, b);
        assert!(a.symbol_errors > 0);
    }

    #[test]
    fn frame_threshold_counts_frames() {
        let mut c = cfg(DetectorKind::Baseline);
        c.scenario.snr_db = -12.0;
        c.n_frames = 30;
        let strict = run_experiment(&c).unwrap();
        c.frame_error_threshold = 20;
        let lenient = run_experiment(&c).unwrap();
        assert_eq!(strict.symbol_errors, lenient.symbol_errors);
        assert_eq!(lenient.frames_ok, 30);
        assert!(strict.frames_ok < 30);
        assert!((0.0..=1.0).contains(&strict.ser));
    }

    #[test]
    fn csv_shape() {
        let r = run_experiment(&cfg(DetectorKind::Baseline)).unwrap();
        let text = to_csv(&[r]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1].split(',').count(), CSV_HEADER.split(',').count());
        assert!(text.ends_with('\n'));
        assert!(matches!(to_csv(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn bench_requires_iterations() {
        assert!(bench_stages(&cfg(DetectorKind::Baseline), 0, 10).is_err());
        let r = bench_stages(&cfg(DetectorKind::Baseline), 10, 50).unwrap();
        assert_eq!(r.stage_times.features, 0.0);
        assert_eq!(r.stage_times.classifier, 0.0);
        assert!(r.stage_times.dechirp > 0.0);
        assert_eq!(r.symbol_errors, 0);
    }
}
