//! TOML run configuration with dotted-path overrides.
//!
//! ```toml
//! seed = 7
//!
//! [grid]
//! dim = 1
//! lx = 16.0
//! lv = 12.0
//! nx = 128
//! nv = 128
//!
//! [kernel]
//! form = "multiplier"
//! kappa = 2.0
//! beta = 1.0
//!
//! [integrator]
//! dt = 1e-3
//! t_end = 1.0
//!
//! [initial_data]
//! generator = "gaussian"
//! std_x = 1.0
//! v_th = 1.5
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::closed_form::ClosedFormDensity;
use crate::diagnostics::DiagnosticsOptions;
use crate::error::{Error, Result};
use crate::grid::PhaseGrid;
use crate::integrator::IntegratorConfig;
use crate::riesz::KernelSpec;
use crate::scenario::InitialData;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub lx: f64,
    pub lv: f64,
    pub nx: usize,
    pub nv: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SobolevSpec {
    pub s: f64,
    pub n: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Steps between records.
    pub interval: usize,
    pub sobolev: Vec<SobolevSpec>,
    pub decay_check: bool,
    pub support_threshold: f64,
    pub strict_negativity: bool,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        let d = DiagnosticsOptions::<f64>::default();
        Self {
            interval: 1,
            sobolev: Vec::new(),
            decay_check: d.decay_check,
            support_threshold: d.support_threshold,
            strict_negativity: d.strict_negativity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupCheck {
    SigmaZero,
    SigmaPositive,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlowupConfig {
    pub checks: Vec<BlowupCheck>,
    /// Fixed δ; scanned when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub horizon: f64,
    /// Closed-form datum (any `d ≤ 3`) used instead of the grid datum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<ClosedFormDensity<f64>>,
}

impl Default for BlowupConfig {
    fn default() -> Self {
        Self {
            checks: Vec::new(),
            delta: None,
            horizon: 10.0,
            closed_form: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    Snapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
    /// Records between snapshots; 0 keeps only the initial and final states.
    pub snapshot_interval: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Snapshot],
            snapshot_interval: 0,
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, format: OutputFormat) -> bool {
        self.formats.contains(&format)
    }
}

/// Thresholds for `verify-identities`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub energy_tol: f64,
    pub ledger_tol: f64,
    pub virial_tol: f64,
    /// Also rerun at `2·dt` and require this observed virial order.
    pub order_check: bool,
    pub min_order: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            energy_tol: 1e-6,
            ledger_tol: 1e-4,
            virial_tol: 1e-3,
            order_check: true,
            min_order: 1.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    pub kernel: KernelSpec<f64>,
    #[serde(default)]
    pub integrator: IntegratorConfig<f64>,
    pub initial_data: InitialData<f64>,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub blowup: BlowupConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read config: {e}")))?;
        Self::from_toml_str(&text, overrides)
    }

    /// Parses, applies `key.path=value` overrides in order, then validates.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<document>", e.message().to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let mut path = e.path().to_string();
            let message = e.inner().to_string();
            if let Some(field) = missing_field(&message) {
                path = if path == "." { field.to_string() } else { format!("{path}.{field}") };
            }
            Error::config(path, message)
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<document>", e.to_string()))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    pub fn phase_grid(&self) -> Result<PhaseGrid<f64>> {
        let g = self.grid;
        PhaseGrid::new(g.dim, g.lx, g.lv, g.nx, g.nv).map_err(|e| Error::config("grid", e.to_string()))
    }

    pub fn integrator_config(&self) -> IntegratorConfig<f64> {
        IntegratorConfig {
            diag_interval: self.diagnostics.interval,
            ..self.integrator
        }
    }

    pub fn diagnostics_options(&self) -> DiagnosticsOptions<f64> {
        let d = &self.diagnostics;
        DiagnosticsOptions {
            sigma: self.integrator.sigma,
            neg_tol: self.integrator.neg_tol,
            strict_negativity: d.strict_negativity,
            support_threshold: d.support_threshold,
            sobolev: d.sobolev.iter().map(|s| (s.s, s.n)).collect(),
            decay_check: d.decay_check,
            ..DiagnosticsOptions::default()
        }
    }

    /// Dimension the kernel is checked against: the closed-form datum's
    /// when one is configured, the grid's otherwise.
    pub fn analysis_dim(&self) -> usize {
        self.blowup.closed_form.map_or(self.grid.dim, |c| c.dim)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.phase_grid()?;
        self.kernel
            .validate(self.analysis_dim())
            .map_err(|e| Error::config("kernel", e.to_string()))?;
        if self.diagnostics.interval == 0 {
            return Err(Error::config("diagnostics.interval", "must be at least 1"));
        }
        for (i, s) in self.diagnostics.sobolev.iter().enumerate() {
            if !(s.s >= 0.0) {
                return Err(Error::config(format!("diagnostics.sobolev[{i}].s"), "must be >= 0"));
            }
        }
        self.integrator_config()
            .validate(&grid)
            .map_err(|e| Error::config("integrator", e.to_string()))?;
        self.initial_data.validate(&grid).map_err(|e| match e {
            Error::Config { .. } => e,
            other => Error::config("initial_data", other.to_string()),
        })?;
        let b = &self.blowup;
        if !(b.horizon > 0.0 && b.horizon.is_finite()) {
            return Err(Error::config("blowup.horizon", "must be positive"));
        }
        if let Some(d) = b.delta {
            if !(d > 0.0) {
                return Err(Error::config("blowup.delta", "must be positive"));
            }
        }
        if let Some(c) = &b.closed_form {
            c.validate().map_err(|e| Error::config("blowup.closed_form", e.to_string()))?;
        }
        if self.output.formats.is_empty() {
            return Err(Error::config("output.formats", "at least one format is required"));
        }
        Ok(())
    }
}

fn missing_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("missing field `")?;
    rest.split('`').next()
}

/// Applies `a.b.c=value`. The value is read as a TOML literal and falls back
/// to a bare string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::config(spec, "override must look like key.path=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::config(key, "empty segment in override path"));
    }
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let segments: Vec<&str> = key.split('.').collect();
    let (last, parents) = segments.split_last().expect("nonempty");
    let mut node = table;
    for (i, seg) in parents.iter().enumerate() {
        let entry = node
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(segments[..=i].join("."), "override path crosses a non-table value"))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}
