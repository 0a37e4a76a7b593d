mod common;

use cora::harness::{run_experiment, run_sweep, DetectorKind, ExperimentConfig};
use cora::phy::PhyParams;

fn sf8(kind: DetectorKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(PhyParams::new(8, 125e3).unwrap(), kind);
    if kind == DetectorKind::Cora {
        cfg.grid = Some(common::trained_grid());
    }
    cfg
}

#[test]
fn noiseless_cora_is_perfect() {
    let mut cfg = sf8(DetectorKind::Cora);
    cfg.n_frames = 10;
    let r = run_experiment(&cfg).unwrap();
    assert_eq!(r.symbols_total, 200);
    assert_eq!(r.symbol_errors, 0);
    assert_eq!(r.prr, 1.0);
}

#[test]
fn two_interferer_campaign_favors_cora() {
    let mut base = sf8(DetectorKind::Baseline);
    base.n_frames = 500;
    base.scenario.snr_db = 10.0;
    base.scenario.interferers = 2;
    base.scenario.sir_range_db = (-6.0, 0.0);
    base.seed = 2024;
    let mut cora = base.clone();
    cora.detector = DetectorKind::Cora;
    cora.grid = Some(common::trained_grid());
    let b = run_experiment(&base).unwrap();
    let c = run_experiment(&cora).unwrap();
    assert!(c.ser < b.ser, "cora {} vs baseline {}", c.ser, b.ser);
}

#[test]
fn baseline_ser_falls_with_snr() {
    let mut cfg = sf8(DetectorKind::Baseline);
    cfg.n_frames = 100;
    cfg.seed = 5;
    let snrs = [-16.0, -10.0, 0.0, 10.0, 30.0];
    let records = run_sweep(&cfg, &snrs).unwrap();
    let mut inversions = 0;
    for pair in records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if b.ser > a.ser {
            let se = (b.ser * (1.0 - b.ser) / b.symbols_total as f64).sqrt();
            assert!(b.ser - a.ser <= se, "{} -> {}", a.ser, b.ser);
            inversions += 1;
        }
    }
    assert!(inversions <= 1);
    assert!(records[0].ser > 0.0);
    assert_eq!(records.last().unwrap().ser, 0.0);
}
