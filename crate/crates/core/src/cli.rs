//! The `cora` command-line tool.
//!
//! Config files are flat `key=value` text, one pair per line, `#` starts a
//! comment. Each subcommand accepts its own set of keys and rejects the
//! rest. Exit codes: 0 success, 1 validation error, 2 runtime or I/O error.
//!
//! IQ files start with the ASCII line `CORA-IQ v1 fs=<Hz> n=<samples>`
//! followed by `n` little-endian `f32` I/Q pairs. The truth sidecar next to
//! an IQ file (`<iq>.truth.csv`) is a `window_start,true_bin` CSV preceded
//! by `#` metadata lines.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use log::info;
use num_complex::Complex64;

use crate::channel::{FadingProfile, TrainConfig, TruthSymbol};
use crate::detector::{load_grid, save_grid, train_with_report, PosteriorGrid};
use crate::harness::{
    bench_stages, realize_frame, run_sweep, to_csv, DetectorKind, ExperimentConfig, FrameReceiver,
    MetricsRecord, OffsetMode,
};
use crate::numfmt::sig17;
use crate::phy::{ComplexSignal, PhyParams};
use crate::{Error, Result};

pub const IQ_MAGIC: &str = "CORA-IQ v1";

#[derive(Debug, Parser)]
#[command(
    name = "cora",
    version,
    about = "Collision-resistant LoRa symbol detection lab"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// key=value config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// baseline or cora
    #[arg(long)]
    pub detector: Option<String>,
    /// Posterior grid file
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Repeat for more detail
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a posterior grid from simulated symbols
    Train(CommonArgs),
    /// Run symbol-error / frame-success campaigns, write CSV
    Evaluate(CommonArgs),
    /// Time the demodulation stages of both detectors
    Bench(CommonArgs),
    /// Demodulate an IQ file using its truth sidecar for window positions
    Demod {
        iq: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Write one simulated reception as IQ file plus truth sidecar
    GenScenario(CommonArgs),
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Train(c)
            | Command::Evaluate(c)
            | Command::Bench(c)
            | Command::GenScenario(c) => c,
            Command::Demod { common, .. } => common,
        }
    }
}

/// Parsed `key=value` file, remembering line numbers for diagnostics.
#[derive(Debug, Clone, Default)]
pub struct KvConfig {
    origin: String,
    entries: BTreeMap<String, (String, usize)>,
}

impl KvConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fail = |message: String| Error::Format {
                path: origin.to_string(),
                line: idx + 1,
                message,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| fail(format!("expected key=value, got {line:?}")))?;
            let k = k.trim().to_string();
            if entries
                .insert(k.clone(), (v.trim().to_string(), idx + 1))
                .is_some()
            {
                return Err(fail(format!("duplicate key {k:?}")));
            }
        }
        Ok(Self {
            origin: origin.to_string(),
            entries,
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Self::parse(&text, &p.display().to_string())
            }
        }
    }

    /// Rejects keys outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for (k, (_, line)) in &self.entries {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Config(format!(
                    "{}:{line}: unknown key {k:?}",
                    self.origin
                )));
            }
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|_| {
                Error::Config(format!("{}:{line}: bad value {v:?} for {key}", self.origin))
            }),
        }
    }

    pub fn get_list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|s| s.trim().parse())
                .collect::<std::result::Result<Vec<T>, _>>()
                .map(Some)
                .map_err(|_| {
                    Error::Config(format!("{}:{line}: bad list {v:?} for {key}", self.origin))
                }),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries
            .iter()
            .map(|(k, (v, _))| (k.as_str(), v.as_str()))
    }
}

const SCENARIO_KEYS: &[&str] = &[
    "sf",
    "bandwidth_hz",
    "snr_db",
    "interferers",
    "sir_min_db",
    "sir_max_db",
    "offset",
    "fading",
    "max_doppler_hz",
    "preamble_len",
    "symbols_per_frame",
    "seed",
];
const CAMPAIGN_KEYS: &[&str] = &["detector", "grid", "n_frames", "frame_error_threshold"];
const BENCH_KEYS: &[&str] = &["n_warmup", "n_iter"];

/// Everything the experiment-style subcommands read from their config.
#[derive(Debug, Clone)]
pub struct ExperimentSettings {
    pub base: ExperimentConfig,
    pub sfs: Vec<u8>,
    pub snrs_db: Vec<f64>,
    pub grid_path: Option<PathBuf>,
    pub n_warmup: usize,
    pub n_iter: usize,
}

impl ExperimentSettings {
    pub fn from_config(kv: &KvConfig, args: &CommonArgs) -> Result<Self> {
        let sfs: Vec<u8> = kv.get_list("sf")?.unwrap_or_else(|| vec![8]);
        if sfs.is_empty() {
            return Err(Error::Config("sf list is empty".into()));
        }
        let bandwidth = kv.get("bandwidth_hz")?.unwrap_or(125e3);
        let phy = PhyParams::new(sfs[0], bandwidth)?;
        for &sf in &sfs {
            PhyParams::new(sf, bandwidth)?;
        }
        let detector = match args.detector.as_deref().or(kv.raw("detector")) {
            Some(d) => d.parse()?,
            None => DetectorKind::Baseline,
        };
        let mut base = ExperimentConfig::new(phy, detector);
        let snrs_db: Vec<f64> = kv
            .get_list("snr_db")?
            .unwrap_or_else(|| vec![f64::INFINITY]);
        base.scenario.snr_db = snrs_db[0];
        base.scenario.interferers = kv.get("interferers")?.unwrap_or(0);
        let sir_min = kv.get("sir_min_db")?.unwrap_or(0.0);
        base.scenario.sir_range_db = (sir_min, kv.get("sir_max_db")?.unwrap_or(sir_min));
        base.scenario.offset = match kv.raw("offset") {
            None | Some("random") => OffsetMode::Random,
            Some(_) => OffsetMode::Fixed(kv.get("offset")?.unwrap_or(0)),
        };
        let doppler = kv.get("max_doppler_hz")?.unwrap_or(5.0);
        base.scenario.fading = match kv.raw("fading") {
            None | Some("off") => None,
            Some("etu") => Some(FadingProfile::etu(doppler)?),
            Some("flat") => Some(FadingProfile::flat(doppler)?),
            Some(other) => return Err(Error::Config(format!("unknown fading profile {other:?}"))),
        };
        if let Some(v) = kv.get("preamble_len")? {
            base.preamble_len = v;
        }
        if let Some(v) = kv.get("n_frames")? {
            base.n_frames = v;
        }
        if let Some(v) = kv.get("symbols_per_frame")? {
            base.symbols_per_frame = v;
        }
        if let Some(v) = kv.get("frame_error_threshold")? {
            base.frame_error_threshold = v;
        }
        base.seed = args.seed.or(kv.get("seed")?).unwrap_or(0);
        let grid_path = args
            .grid
            .clone()
            .or_else(|| kv.raw("grid").map(PathBuf::from));
        Ok(Self {
            base,
            sfs,
            snrs_db,
            grid_path,
            n_warmup: kv.get("n_warmup")?.unwrap_or(100),
            n_iter: kv.get("n_iter")?.unwrap_or(1000),
        })
    }

    fn load_grid(&self) -> Result<Arc<PosteriorGrid>> {
        let path = self.grid_path.as_ref().ok_or_else(|| {
            Error::Config("the cora detector needs --grid or grid= in the config".into())
        })?;
        Ok(Arc::new(load_grid(path)?))
    }
}

pub fn cmd_train(args: &CommonArgs) -> Result<()> {
    let kv = KvConfig::load(args.config.as_deref())?;
    kv.check_keys(TrainConfig::KEYS)?;
    let mut cfg = TrainConfig::default();
    for (k, v) in kv.iter() {
        cfg.set(k, v)?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = require_out(args)?;
    info!(
        "training on {} symbols of {} bins",
        cfg.n_symbols, cfg.n_bins
    );
    let report = train_with_report(&cfg)?;
    save_grid(&report.grid, out)?;
    println!(
        "kept_windows={} true_samples={} interference_samples={} prior={} resolution={}",
        report.kept_windows,
        report.true_samples,
        report.interference_samples,
        sig17(report.grid.prior()),
        report.grid.resolution()
    );
    Ok(())
}

fn require_out(args: &CommonArgs) -> Result<&Path> {
    args.out
        .as_deref()
        .ok_or_else(|| Error::Config("--out is required".into()))
}

fn emit_csv(records: &[MetricsRecord], out: Option<&Path>) -> Result<()> {
    let text = to_csv(records)?;
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_evaluate(args: &CommonArgs) -> Result<()> {
    let kv = KvConfig::load(args.config.as_deref())?;
    kv.check_keys(&[SCENARIO_KEYS, CAMPAIGN_KEYS].concat())?;
    let settings = ExperimentSettings::from_config(&kv, args)?;
    if settings.sfs.len() != 1 {
        return Err(Error::Config("evaluate takes a single sf".into()));
    }
    let mut cfg = settings.base.clone();
    if cfg.detector == DetectorKind::Cora {
        cfg.grid = Some(settings.load_grid()?);
    }
    let records = run_sweep(&cfg, &settings.snrs_db)?;
    for r in &records {
        info!(
            "{} snr={} ser={} prr={}",
            r.detector, r.snr_db, r.ser, r.prr
        );
    }
    emit_csv(&records, args.out.as_deref())
}

pub fn cmd_bench(args: &CommonArgs) -> Result<()> {
    let kv = KvConfig::load(args.config.as_deref())?;
    kv.check_keys(&[SCENARIO_KEYS, CAMPAIGN_KEYS, BENCH_KEYS].concat())?;
    let settings = ExperimentSettings::from_config(&kv, args)?;
    let grid = settings.load_grid()?;
    let mut records = Vec::new();
    for &sf in &settings.sfs {
        for kind in [DetectorKind::Baseline, DetectorKind::Cora] {
            let mut cfg = settings.base.clone();
            cfg.phy = PhyParams::new(sf, cfg.phy.bandwidth_hz())?;
            cfg.detector = kind;
            cfg.grid = Some(grid.clone());
            let r = bench_stages(&cfg, settings.n_warmup, settings.n_iter)?;
            info!("sf={sf} {kind}: {:.3e} s/symbol", r.stage_times.total());
            records.push(r);
        }
    }
    emit_csv(&records, args.out.as_deref())
}

/// Sidecar path for an IQ file.
pub fn sidecar_path(iq: &Path) -> PathBuf {
    let mut s = iq.as_os_str().to_owned();
    s.push(".truth.csv");
    PathBuf::from(s)
}

pub fn encode_iq(signal: &ComplexSignal) -> Vec<u8> {
    let header = format!(
        "{IQ_MAGIC} fs={} n={}\n",
        signal.sample_rate_hz,
        signal.len()
    );
    let mut out = Vec::with_capacity(header.len() + signal.len() * 8);
    out.extend_from_slice(header.as_bytes());
    for s in &signal.samples {
        out.extend_from_slice(&(s.re as f32).to_le_bytes());
        out.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    out
}

pub fn decode_iq(bytes: &[u8], origin: &str) -> Result<ComplexSignal> {
    let fail = |message: String| Error::Format {
        path: origin.to_string(),
        line: 1,
        message,
    };
    let nl = bytes
        .iter()
        .take(256)
        .position(|&b| b == b'\n')
        .ok_or_else(|| fail("missing IQ header line".into()))?;
    let header =
        std::str::from_utf8(&bytes[..nl]).map_err(|_| fail("header is not ASCII".into()))?;
    let rest = header
        .strip_prefix(IQ_MAGIC)
        .ok_or_else(|| fail(format!("expected {IQ_MAGIC:?} header, got {header:?}")))?;
    let mut fs_hz = None;
    let mut n = None;
    for pair in rest.split_whitespace() {
        match pair.split_once('=') {
            Some(("fs", v)) => fs_hz = v.parse::<f64>().ok().filter(|f| f.is_finite() && *f > 0.0),
            Some(("n", v)) => n = v.parse::<usize>().ok(),
            _ => return Err(fail(format!("unexpected header field {pair:?}"))),
        }
    }
    let fs_hz = fs_hz.ok_or_else(|| fail("missing or invalid fs".into()))?;
    let n = n.ok_or_else(|| fail("missing or invalid n".into()))?;
    let data = &bytes[nl + 1..];
    let expected = n * 8;
    if data.len() < expected {
        return Err(Error::Truncated {
            path: origin.to_string(),
            message: format!(
                "sample data ends at byte offset {} but {} samples need {} bytes",
                bytes.len(),
                n,
                nl + 1 + expected
            ),
        });
    }
    if data.len() > expected {
        return Err(Error::Truncated {
            path: origin.to_string(),
            message: format!(
                "unexpected trailing data at byte offset {}",
                nl + 1 + expected
            ),
        });
    }
    let samples = data
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    Ok(ComplexSignal::new(samples, fs_hz))
}

/// Contents of a truth sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct Sidecar {
    pub metadata: BTreeMap<String, String>,
    /// `(offset_samples, gain_db)` per interferer.
    pub interferers: Vec<(usize, f64)>,
    pub truth: Vec<TruthSymbol>,
}

impl Sidecar {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let meta: Vec<String> = self
            .metadata
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        out.push_str(&format!("# {}\n", meta.join(" ")));
        for (offset, gain) in &self.interferers {
            out.push_str(&format!(
                "# interferer offset={offset} gain_db={}\n",
                sig17(*gain)
            ));
        }
        out.push_str("window_start,true_bin\n");
        for t in &self.truth {
            out.push_str(&format!("{},{}\n", t.window_start, t.value));
        }
        out
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let fail = |line: usize, message: String| Error::Format {
            path: origin.to_string(),
            line,
            message,
        };
        let mut metadata = BTreeMap::new();
        let mut interferers = Vec::new();
        let mut truth = Vec::new();
        let mut seen_header = false;
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(rest) = comment.strip_prefix("interferer ") {
                    let mut offset = None;
                    let mut gain = None;
                    for pair in rest.split_whitespace() {
                        match pair.split_once('=') {
                            Some(("offset", v)) => offset = v.parse().ok(),
                            Some(("gain_db", v)) => gain = v.parse().ok(),
                            _ => {
                                return Err(fail(line_no, format!("bad interferer field {pair:?}")))
                            }
                        }
                    }
                    match (offset, gain) {
                        (Some(o), Some(g)) => interferers.push((o, g)),
                        _ => {
                            return Err(fail(line_no, "interferer needs offset and gain_db".into()))
                        }
                    }
                } else {
                    for pair in comment.split_whitespace() {
                        let (k, v) = pair
                            .split_once('=')
                            .ok_or_else(|| fail(line_no, format!("bad metadata {pair:?}")))?;
                        metadata.insert(k.to_string(), v.to_string());
                    }
                }
                continue;
            }
            if !seen_header {
                if line.trim() != "window_start,true_bin" {
                    return Err(fail(line_no, format!("expected CSV header, got {line:?}")));
                }
                seen_header = true;
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| fail(line_no, format!("expected two columns, got {line:?}")))?;
            let window_start = a
                .trim()
                .parse()
                .map_err(|_| fail(line_no, format!("bad window_start {a:?}")))?;
            let value = b
                .trim()
                .parse()
                .map_err(|_| fail(line_no, format!("bad true_bin {b:?}")))?;
            truth.push(TruthSymbol {
                window_start,
                value,
            });
        }
        if !seen_header {
            return Err(fail(text.lines().count() + 1, "missing CSV header".into()));
        }
        Ok(Self {
            metadata,
            interferers,
            truth,
        })
    }

    fn meta<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.metadata
            .get(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Validation(format!("sidecar lacks a valid {key}")))
    }
}

pub fn cmd_gen_scenario(args: &CommonArgs) -> Result<()> {
    let kv = KvConfig::load(args.config.as_deref())?;
    kv.check_keys(SCENARIO_KEYS)?;
    let settings = ExperimentSettings::from_config(&kv, args)?;
    if settings.sfs.len() != 1 || settings.snrs_db.len() != 1 {
        return Err(Error::Config(
            "gen-scenario takes a single sf and snr_db".into(),
        ));
    }
    let out = require_out(args)?;
    let cfg = settings.base;
    let frame = realize_frame(&cfg, 0)?;
    let signal = ComplexSignal::new(frame.composite, cfg.phy.bandwidth_hz());

    let mut metadata = BTreeMap::new();
    metadata.insert("sf".to_string(), cfg.phy.sf().to_string());
    metadata.insert(
        "bandwidth_hz".to_string(),
        format!("{}", cfg.phy.bandwidth_hz()),
    );
    metadata.insert("preamble_len".to_string(), cfg.preamble_len.to_string());
    metadata.insert("snr_db".to_string(), sig17(cfg.scenario.snr_db));
    metadata.insert("seed".to_string(), cfg.seed.to_string());
    let sidecar = Sidecar {
        metadata,
        interferers: frame.interferers,
        truth: frame.truth,
    };
    fs::write(out, encode_iq(&signal)).map_err(|e| Error::io(out, e))?;
    let side = sidecar_path(out);
    fs::write(&side, sidecar.to_text()).map_err(|e| Error::io(&side, e))?;
    info!("wrote {} samples to {}", signal.len(), out.display());
    Ok(())
}

pub fn cmd_demod(iq: &Path, args: &CommonArgs) -> Result<()> {
    let kv = KvConfig::load(args.config.as_deref())?;
    kv.check_keys(&["detector", "grid"])?;
    let bytes = fs::read(iq).map_err(|e| Error::io(iq, e))?;
    let signal = decode_iq(&bytes, &iq.display().to_string())?;
    let side_path = sidecar_path(iq);
    let side_text = fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
    let sidecar = Sidecar::parse(&side_text, &side_path.display().to_string())?;

    let phy = PhyParams::new(sidecar.meta("sf")?, signal.sample_rate_hz)?;
    let preamble_len: usize = sidecar.meta("preamble_len")?;
    let detector: DetectorKind = match args.detector.as_deref().or(kv.raw("detector")) {
        Some(d) => d.parse()?,
        None => DetectorKind::Baseline,
    };
    let grid = match detector {
        DetectorKind::Baseline => None,
        DetectorKind::Cora => {
            let path = args
                .grid
                .clone()
                .or_else(|| kv.raw("grid").map(PathBuf::from))
                .ok_or_else(|| Error::Config("the cora detector needs --grid".into()))?;
            Some(Arc::new(load_grid(&path)?))
        }
    };
    let starts: Vec<usize> = sidecar.truth.iter().map(|t| t.window_start).collect();
    let mut rx = FrameReceiver::new(&phy, detector, grid)?;
    let decisions = rx.demodulate(&signal.samples, preamble_len, &starts)?;

    let mut text = String::from("window_start,symbol,score\n");
    for (s, d) in starts.iter().zip(&decisions) {
        text.push_str(&format!("{s},{},{}\n", d.bin, sig17(d.score)));
    }
    match args.out.as_deref() {
        Some(p) => fs::write(p, &text).map_err(|e| Error::io(p, e))?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e))?,
    }
    let errors = decisions
        .iter()
        .zip(&sidecar.truth)
        .filter(|(d, t)| d.bin != t.value)
        .count();
    eprintln!(
        "{detector}: {errors} of {} symbols differ from the sidecar truth",
        decisions.len()
    );
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Demod { iq, common } => cmd_demod(iq, common),
        Command::GenScenario(a) => cmd_gen_scenario(a),
    }
}
