use std::fs;
use std::path::Path;

use crate::channel::TrainConfig;
use crate::numfmt::sig17;
use crate::{Error, Result};

/// First line of every grid file.
pub const GRID_MAGIC: &str = "CORA-GRID v1";

/// `P(complete waveform | p, h)` sampled at the centers of a square grid
/// over the unit square, row index along `p`, column index along `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid {
    resolution: usize,
    cells: Vec<f64>,
    prior: f64,
    config: TrainConfig,
}

impl PosteriorGrid {
    pub fn new(
        resolution: usize,
        cells: Vec<f64>,
        prior: f64,
        config: TrainConfig,
    ) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::Validation(
                "grid resolution must be at least 1".into(),
            ));
        }
        if cells.len() != resolution * resolution {
            return Err(Error::Validation(format!(
                "{} cells for resolution {resolution}",
                cells.len()
            )));
        }
        if let Some(bad) = cells.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::Validation(format!(
                "cell value {bad} outside [0, 1]"
            )));
        }
        if !(prior > 0.0 && prior < 1.0) {
            return Err(Error::Validation(format!("prior {prior} outside (0, 1)")));
        }
        Ok(Self {
            resolution,
            cells,
            prior,
            config,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn cell(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.resolution + j]
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.resolution as f64
    }

    /// Cell whose center is nearest to `v`, clamped to the edges.
    #[inline]
    pub fn cell_index(&self, v: f64) -> usize {
        ((v * self.resolution as f64) as usize).min(self.resolution - 1)
    }

    /// Nearest-neighbor lookup without range checks; callers guarantee
    /// `p` and `h` lie in `[0, 1]`.
    #[inline]
    pub fn lookup_unchecked(&self, p: f64, h: f64) -> f64 {
        self.cells[self.cell_index(p) * self.resolution + self.cell_index(h)]
    }

    pub fn lookup(&self, p: f64, h: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&h) {
            return Err(Error::InvalidParams(format!(
                "feature pair ({p}, {h}) outside the unit square"
            )));
        }
        Ok(self.lookup_unchecked(p, h))
    }

    /// Mean cell value over cells whose centers satisfy `pred(p, h)`.
    pub fn region_mean(&self, pred: impl Fn(f64, f64) -> bool) -> Option<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..self.resolution {
            for j in 0..self.resolution {
                if pred(self.cell_center(i), self.cell_center(j)) {
                    sum += self.cell(i, j);
                    count += 1;
                }
            }
        }
        (count > 0).then(|| sum / count as f64)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.cells.len() * 21 + 512);
        out.push_str(GRID_MAGIC);
        out.push('\n');
        out.push_str(&format!(
            "resolution={} prior={}\n",
            self.resolution,
            sig17(self.prior)
        ));
        out.push_str(&self.config.to_pairs());
        out.push('\n');
        for row in self.cells.chunks(self.resolution) {
            let line: Vec<String> = row.iter().map(|&c| sig17(c)).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the text format. `origin` names the source in diagnostics.
    pub fn from_text(text: &str, origin: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Format {
            path: origin.to_string(),
            line,
            message,
        };
        let mut lines = text.split('\n');
        match lines.next() {
            Some(GRID_MAGIC) => {}
            Some(l) if l.starts_with("CORA-GRID") => {
                return Err(err(1, format!("unsupported version {l:?}")))
            }
            _ => return Err(err(1, format!("missing {GRID_MAGIC:?} header"))),
        }

        let header = lines
            .next()
            .ok_or_else(|| err(2, "missing resolution line".into()))?;
        let mut resolution = None;
        let mut prior = None;
        for pair in header.split(' ') {
            match pair.split_once('=') {
                Some(("resolution", v)) => {
                    resolution = Some(
                        v.parse::<usize>()
                            .map_err(|_| err(2, format!("bad resolution {v:?}")))?,
                    )
                }
                Some(("prior", v)) => {
                    prior = Some(
                        v.parse::<f64>()
                            .map_err(|_| err(2, format!("bad prior {v:?}")))?,
                    )
                }
                _ => return Err(err(2, format!("unexpected field {pair:?}"))),
            }
        }
        let resolution = resolution.ok_or_else(|| err(2, "missing resolution".into()))?;
        let prior = prior.ok_or_else(|| err(2, "missing prior".into()))?;
        if resolution == 0 {
            return Err(err(2, "resolution must be at least 1".into()));
        }

        let cfg_line = lines
            .next()
            .ok_or_else(|| err(3, "missing training config line".into()))?;
        let config = TrainConfig::from_pairs(cfg_line).map_err(|e| err(3, e.to_string()))?;

        let mut cells = Vec::with_capacity(resolution * resolution);
        for row in 0..resolution {
            let line_no = 4 + row;
            let line = lines.next().ok_or_else(|| {
                err(
                    line_no,
                    format!("truncated: expected {resolution} rows, found {row}"),
                )
            })?;
            let before = cells.len();
            for (col, tok) in line.split(' ').enumerate() {
                let v = tok.parse::<f64>().map_err(|_| {
                    err(
                        line_no,
                        format!("bad cell value {tok:?} in column {}", col + 1),
                    )
                })?;
                cells.push(v);
            }
            if cells.len() - before != resolution {
                return Err(err(
                    line_no,
                    format!(
                        "expected {resolution} values, found {}",
                        cells.len() - before
                    ),
                ));
            }
        }
        // Only the final newline may follow the last row.
        match (lines.next(), lines.next()) {
            (Some(""), None) => {}
            (None, _) => return Err(err(3 + resolution, "missing final newline".into())),
            _ => return Err(err(4 + resolution, "trailing content after grid".into())),
        }
        Self::new(resolution, cells, prior, config).map_err(|e| err(2, e.to_string()))
    }
}

pub fn save_grid(grid: &PosteriorGrid, destination: &Path) -> Result<()> {
    fs::write(destination, grid.to_text()).map_err(|e| Error::io(destination, e))
}

pub fn load_grid(source: &Path) -> Result<PosteriorGrid> {
    let text = fs::read_to_string(source).map_err(|e| Error::io(source, e))?;
    PosteriorGrid::from_text(&text, &source.display().to_string())
}
