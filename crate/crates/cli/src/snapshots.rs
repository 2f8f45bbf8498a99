//! Snapshot files: CSV interchange for already-beamformed measurement vectors.
//!
//! The format is deliberately plain so it can be produced from any language
//! and diffed by eye: a two-line header (column names, then values) describing
//! the array, followed by one row per snapshot with the sensor entries'
//! real and imaginary parts in alternating columns.  Values are written with
//! Rust's shortest round-trip float formatting, so a write→read cycle
//! reproduces every finite f64 bit-exactly.
//!
//! The header carries no sensor mask, so snapshot files always describe a
//! uniform line array; masked experiments go through scenario files instead.

use beamcs::ArrayGeometry;
use nalgebra::DVector;
use num_complex::Complex64;
use std::io::Write as _;
use std::path::Path;

use crate::error::{CliError, CliResult};

/// A parsed snapshot file: a uniform array and `L` measurement vectors.
#[derive(Debug, Clone)]
pub struct SnapshotFile {
    pub geometry: ArrayGeometry,
    /// Free-text frequency label (e.g. "125Hz"); not interpreted numerically.
    pub frequency: String,
    pub snapshots: Vec<DVector<Complex64>>,
}

impl SnapshotFile {
    pub fn new(
        geometry: ArrayGeometry,
        frequency: impl Into<String>,
        snapshots: Vec<DVector<Complex64>>,
    ) -> CliResult<Self> {
        if !geometry.is_ula() {
            return Err(CliError::Config(
                "snapshot files describe uniform arrays only; use a scenario for masks".into(),
            ));
        }
        let frequency = frequency.into();
        if frequency.contains(',') || frequency.contains('\n') || frequency.is_empty() {
            return Err(CliError::Config(
                "frequency label must be non-empty and free of commas/newlines".into(),
            ));
        }
        for (l, y) in snapshots.iter().enumerate() {
            if y.len() != geometry.num_active() {
                return Err(CliError::Config(format!(
                    "snapshot {l} has {} entries, geometry has {} sensors",
                    y.len(),
                    geometry.num_active()
                )));
            }
            if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(CliError::Config(format!(
                    "snapshot {l} contains non-finite entries"
                )));
            }
        }
        Ok(SnapshotFile {
            geometry,
            frequency,
            snapshots,
        })
    }

    /// Serialize to the CSV text form.
    pub fn to_csv(&self) -> String {
        let m = self.geometry.num_active();
        let mut out = String::new();
        out.push_str("sensors,snapshots,spacing_over_lambda,frequency\n");
        out.push_str(&format!(
            "{},{},{},{}\n",
            m,
            self.snapshots.len(),
            self.geometry.spacing_over_lambda(),
            self.frequency
        ));
        for y in &self.snapshots {
            let row: Vec<String> = y
                .iter()
                .flat_map(|v| [format!("{}", v.re), format!("{}", v.im)])
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Write atomically (temp file + rename) next to the destination.
    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    /// Parse the CSV text form, reporting the offending line on failure.
    pub fn from_csv(text: &str) -> CliResult<Self> {
        let mut lines = text.lines().enumerate();
        let (_, names) = lines
            .next()
            .ok_or_else(|| CliError::Config("line 1: empty file".into()))?;
        if names.trim() != "sensors,snapshots,spacing_over_lambda,frequency" {
            return Err(CliError::Config(format!(
                "line 1: expected header 'sensors,snapshots,spacing_over_lambda,frequency', got '{}'",
                names.trim()
            )));
        }
        let (_, values) = lines
            .next()
            .ok_or_else(|| CliError::Config("line 2: missing header values".into()))?;
        let fields: Vec<&str> = values.trim().split(',').collect();
        if fields.len() != 4 {
            return Err(CliError::Config(format!(
                "line 2: expected 4 header values, got {}",
                fields.len()
            )));
        }
        let m: usize = fields[0]
            .parse()
            .map_err(|e| CliError::Config(format!("line 2: bad sensor count: {e}")))?;
        let l: usize = fields[1]
            .parse()
            .map_err(|e| CliError::Config(format!("line 2: bad snapshot count: {e}")))?;
        let spacing: f64 = fields[2]
            .parse()
            .map_err(|e| CliError::Config(format!("line 2: bad spacing: {e}")))?;
        let frequency = fields[3].to_string();
        if frequency.is_empty() {
            return Err(CliError::Config("line 2: empty frequency label".into()));
        }
        let geometry = ArrayGeometry::ula(m, spacing)
            .map_err(|e| CliError::Config(format!("line 2: {e}")))?;

        let mut snapshots = Vec::with_capacity(l);
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.trim().split(',').collect();
            if cells.len() != 2 * m {
                return Err(CliError::Config(format!(
                    "line {lineno}: expected {} columns (re/im per sensor), got {}",
                    2 * m,
                    cells.len()
                )));
            }
            let mut y = DVector::zeros(m);
            for i in 0..m {
                let re: f64 = cells[2 * i].trim().parse().map_err(|e| {
                    CliError::Config(format!("line {lineno}, column {}: {e}", 2 * i + 1))
                })?;
                let im: f64 = cells[2 * i + 1].trim().parse().map_err(|e| {
                    CliError::Config(format!("line {lineno}, column {}: {e}", 2 * i + 2))
                })?;
                if !re.is_finite() || !im.is_finite() {
                    return Err(CliError::Config(format!(
                        "line {lineno}: non-finite entry for sensor {i}"
                    )));
                }
                y[i] = Complex64::new(re, im);
            }
            snapshots.push(y);
        }
        if snapshots.len() != l {
            return Err(CliError::Config(format!(
                "header promises {l} snapshots but file contains {}",
                snapshots.len()
            )));
        }
        SnapshotFile::new(geometry, frequency, snapshots)
    }

    /// Read and parse a snapshot file.
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_csv(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

}

/// Write bytes to `path` via a temp file in the same directory plus rename,
/// so readers never observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", tmp.display())))?;
        f.write_all(bytes)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", tmp.display())))?;
        f.sync_all().ok();
    }
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::Io(format!("cannot move {} into place: {e}", tmp.display())))?;
    Ok(())
}
