#![allow(dead_code)]

use std::sync::{Arc, OnceLock};

use cora::channel::TrainConfig;
use cora::detector::{train, PosteriorGrid};

/// A grid trained once per test binary on 20k default training symbols.
pub fn trained_grid() -> Arc<PosteriorGrid> {
    static GRID: OnceLock<Arc<PosteriorGrid>> = OnceLock::new();
    GRID.get_or_init(|| {
        let cfg = TrainConfig {
            n_symbols: 20_000,
            ..TrainConfig::default()
        };
        Arc::new(train(&cfg).expect("training"))
    })
    .clone()
}
