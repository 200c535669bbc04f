//! Time-series CSV, binary snapshots with JSON sidecars, and JSON reports.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::grid::{DistributionField, PhaseGrid};
use crate::integrator::DiagnosticsSink;
use crate::riesz::{riesz_normalization, KernelForm, KernelSpec};
use crate::scalar::Real;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SNAPSHOT_DTYPE: &str = "f64-le";

/// Where a file came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    /// `r(d, β)` linking each `Λ^{-β}` to its power-law kernel; `None`
    /// where no such kernel exists (`β ≥ d`).
    pub kernel_normalization: Vec<Option<f64>>,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: u64, spec: &KernelSpec<f64>, dim: usize) -> Self {
        Self {
            config_hash: config_hash.into(),
            code_version: CODE_VERSION.to_string(),
            seed,
            kernel_normalization: kernel_normalization(spec, dim),
        }
    }
}

/// One normalization constant per multiplier or kernel term.
pub fn kernel_normalization<T: Real>(spec: &KernelSpec<T>, dim: usize) -> Vec<Option<f64>> {
    let d = T::of(dim);
    let r = |beta: T| (beta > T::zero() && beta < d).then(|| riesz_normalization(dim, beta).as_f64());
    match &spec.form {
        KernelForm::Multiplier { beta, .. } => vec![r(*beta)],
        KernelForm::KernelSum { terms } => terms.iter().map(|t| r(d - t.alpha)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub shape: Vec<usize>,
    pub dtype: String,
    pub time: f64,
    pub grid: PhaseGrid<f64>,
    #[serde(flatten)]
    pub provenance: Provenance,
}

pub fn write_json<V: Serialize + ?Sized>(path: &Path, value: &V) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes `<stem>.bin` (row-major little-endian `f64`) and `<stem>.json`.
pub fn write_snapshot<T: Real>(dir: &Path, stem: &str, f: &DistributionField<T>, provenance: &Provenance) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let bin = dir.join(format!("{stem}.bin"));
    let mut w = BufWriter::new(File::create(&bin)?);
    for v in &f.values {
        w.write_all(&v.as_f64().to_le_bytes())?;
    }
    w.flush()?;
    let g = f.grid;
    let meta = SnapshotMeta {
        shape: g.phase_shape(),
        dtype: SNAPSHOT_DTYPE.into(),
        time: f.time.as_f64(),
        grid: PhaseGrid {
            dim: g.dim,
            lx: g.lx.as_f64(),
            lv: g.lv.as_f64(),
            nx: g.nx,
            nv: g.nv,
        },
        provenance: provenance.clone(),
    };
    write_json(&dir.join(format!("{stem}.json")), &meta)?;
    Ok(bin)
}

/// Reads a snapshot given the path of either file.
pub fn read_snapshot(path: &Path) -> Result<(DistributionField<f64>, SnapshotMeta)> {
    let meta: SnapshotMeta = serde_json::from_str(&fs::read_to_string(path.with_extension("json"))?)?;
    if meta.dtype != SNAPSHOT_DTYPE {
        return Err(Error::Domain(format!("unsupported snapshot dtype {}", meta.dtype)));
    }
    let bytes = fs::read(path.with_extension("bin"))?;
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let g = meta.grid;
    let grid = PhaseGrid::new(g.dim, g.lx, g.lv, g.nx, g.nv)?;
    let mut field = DistributionField::from_values(grid, values)?;
    field.time = meta.time;
    Ok((field, meta))
}

/// Streams records to a CSV file; the header is taken from the first record.
pub struct CsvSeriesWriter {
    writer: csv::Writer<File>,
    header_written: bool,
}

impl CsvSeriesWriter {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        Ok(Self {
            writer: csv::Writer::from_path(path)?,
            header_written: false,
        })
    }

    pub fn write<T: Real>(&mut self, record: &DiagnosticsRecord<T>) -> Result<()> {
        if !self.header_written {
            self.writer.write_record(record.csv_header())?;
            self.header_written = true;
        }
        self.writer.write_record(record.csv_row())?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

pub fn write_series_csv<T: Real>(path: &Path, series: &[DiagnosticsRecord<T>]) -> Result<()> {
    let mut w = CsvSeriesWriter::create(path)?;
    for r in series {
        w.write(r)?;
    }
    w.flush()
}

/// Sink writing the CSV series and periodic snapshots during a run.
pub struct RunWriter {
    dir: PathBuf,
    csv: Option<CsvSeriesWriter>,
    snapshots: bool,
    snapshot_interval: usize,
    provenance: Provenance,
    records: usize,
}

impl RunWriter {
    pub fn new(dir: &Path, csv: bool, snapshots: bool, snapshot_interval: usize, provenance: Provenance) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let csv = if csv {
            Some(CsvSeriesWriter::create(&dir.join("timeseries.csv"))?)
        } else {
            None
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            csv,
            snapshots,
            snapshot_interval,
            provenance,
            records: 0,
        })
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Flushes the CSV and writes `final` when snapshots are enabled.
    pub fn finish<T: Real>(&mut self, last: &DistributionField<T>) -> Result<()> {
        if let Some(csv) = &mut self.csv {
            csv.flush()?;
        }
        if self.snapshots {
            write_snapshot(&self.dir, "final", last, &self.provenance)?;
        }
        Ok(())
    }
}

impl<T: Real> DiagnosticsSink<T> for RunWriter {
    fn record(&mut self, record: &DiagnosticsRecord<T>, f: &DistributionField<T>) -> Result<()> {
        if let Some(csv) = &mut self.csv {
            csv.write(record)?;
        }
        let due = self.records == 0 || (self.snapshot_interval > 0 && self.records % self.snapshot_interval == 0);
        if self.snapshots && due {
            write_snapshot(&self.dir, &format!("snapshot_{:06}", self.records), f, &self.provenance)?;
        }
        self.records += 1;
        Ok(())
    }
}
