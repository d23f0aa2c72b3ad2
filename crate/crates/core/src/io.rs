//! On-disk artifacts: binary row-major field dumps with JSON sidecars,
//! run-length-encoded region masks, bit-exact simulation checkpoints, and
//! CSV files that embed the resolved configuration plus a content hash.

use crate::domain::Grid;
use crate::error::{GlError, Result};
use crate::fields::LinkField;
use crate::tdgl::{GLState, PhysicsParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write as _;
use std::path::Path;

fn f64s_to_bytes(vals: &[f64], out: &mut Vec<u8>) {
    for v in vals {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn bytes_to_f64s(bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return Err(GlError::Config(format!(
            "binary dump length {} is not a multiple of 8",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// JSON sidecar for a binary row-major grid dump.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldHeader {
    pub field: String,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub units: String,
    pub sha256: String,
}

/// Write a node field as `<name>.bin` (f64 little-endian, row-major, row 0
/// first) plus `<name>.json` sidecar in `dir`.
pub fn write_field(dir: &Path, name: &str, grid: &Grid, data: &[f64], units: &str) -> Result<()> {
    assert_eq!(data.len(), grid.n_nodes(), "field length must match the grid");
    std::fs::create_dir_all(dir)?;
    let mut bytes = Vec::with_capacity(8 * data.len());
    f64s_to_bytes(data, &mut bytes);
    let header = FieldHeader {
        field: name.to_string(),
        nx: grid.nx,
        ny: grid.ny,
        h: grid.h,
        units: units.to_string(),
        sha256: sha256_hex(&bytes),
    };
    std::fs::write(dir.join(format!("{name}.bin")), &bytes)?;
    std::fs::write(
        dir.join(format!("{name}.json")),
        serde_json::to_string_pretty(&header).expect("header serializes"),
    )?;
    Ok(())
}

/// Read a field dump written by [`write_field`], verifying the content hash.
pub fn read_field(dir: &Path, name: &str) -> Result<(FieldHeader, Vec<f64>)> {
    let header: FieldHeader =
        serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{name}.json")))?)
            .map_err(|e| GlError::Config(format!("bad sidecar for '{name}': {e}")))?;
    let bytes = std::fs::read(dir.join(format!("{name}.bin")))?;
    if sha256_hex(&bytes) != header.sha256 {
        return Err(GlError::Config(format!("content hash mismatch for '{name}.bin'")));
    }
    let vals = bytes_to_f64s(&bytes)?;
    if vals.len() != header.nx * header.ny {
        return Err(GlError::Config(format!(
            "field '{name}' has {} values for a {}x{} grid",
            vals.len(),
            header.nx,
            header.ny
        )));
    }
    Ok((header, vals))
}

/// Run-length-encoded boolean mask: alternating run lengths starting with a
/// `false` run (possibly of length zero).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct RleMask {
    pub nx: usize,
    pub ny: usize,
    pub runs: Vec<usize>,
}

/// Encode a node mask (row-major) as run lengths.
pub fn mask_to_rle(grid: &Grid, mask: &[bool]) -> RleMask {
    assert_eq!(mask.len(), grid.n_nodes());
    let mut runs = Vec::new();
    let mut current = false;
    let mut len = 0usize;
    for &m in mask {
        if m == current {
            len += 1;
        } else {
            runs.push(len);
            current = m;
            len = 1;
        }
    }
    runs.push(len);
    RleMask { nx: grid.nx, ny: grid.ny, runs }
}

/// Decode a run-length-encoded mask back to the flat boolean field.
pub fn rle_to_mask(rle: &RleMask) -> Result<Vec<bool>> {
    let mut mask = Vec::with_capacity(rle.nx * rle.ny);
    let mut value = false;
    for &len in &rle.runs {
        mask.extend(std::iter::repeat(value).take(len));
        value = !value;
    }
    if mask.len() != rle.nx * rle.ny {
        return Err(GlError::Config(format!(
            "RLE mask decodes to {} nodes for a {}x{} grid",
            mask.len(),
            rle.nx,
            rle.ny
        )));
    }
    Ok(mask)
}

/// Write a mask as RLE JSON.
pub fn write_mask(path: &Path, grid: &Grid, mask: &[bool]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let rle = mask_to_rle(grid, mask);
    std::fs::write(path, serde_json::to_string(&rle).expect("mask serializes"))?;
    Ok(())
}

/// JSON header of a checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub t: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub lx: f64,
    pub ly: f64,
    pub params: PhysicsParams,
    pub sha256: String,
}

/// Save the full simulation state as `<base>.bin` + `<base>.json`. The
/// binary layout is psi real, psi imag, A x-links, A y-links, phi, all f64
/// little-endian, so restarts are bit-exact.
pub fn save_checkpoint(
    base: &Path,
    grid: &Grid,
    params: &PhysicsParams,
    state: &GLState,
) -> Result<()> {
    if let Some(parent) = base.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let n = grid.n_nodes();
    assert_eq!(state.psi.len(), n);
    let mut bytes = Vec::with_capacity(8 * (2 * n + state.a.ax.len() + state.a.ay.len() + n));
    let re: Vec<f64> = state.psi.iter().map(|z| z.re).collect();
    let im: Vec<f64> = state.psi.iter().map(|z| z.im).collect();
    f64s_to_bytes(&re, &mut bytes);
    f64s_to_bytes(&im, &mut bytes);
    f64s_to_bytes(&state.a.ax, &mut bytes);
    f64s_to_bytes(&state.a.ay, &mut bytes);
    f64s_to_bytes(&state.phi, &mut bytes);
    let header = CheckpointHeader {
        t: state.t,
        nx: grid.nx,
        ny: grid.ny,
        h: grid.h,
        lx: grid.lx,
        ly: grid.ly,
        params: *params,
        sha256: sha256_hex(&bytes),
    };
    std::fs::write(base.with_extension("bin"), &bytes)?;
    std::fs::write(
        base.with_extension("json"),
        serde_json::to_string_pretty(&header).expect("header serializes"),
    )?;
    Ok(())
}

/// Load a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(base: &Path) -> Result<(CheckpointHeader, GLState)> {
    let header: CheckpointHeader =
        serde_json::from_str(&std::fs::read_to_string(base.with_extension("json"))?)
            .map_err(|e| GlError::Config(format!("bad checkpoint header: {e}")))?;
    let bytes = std::fs::read(base.with_extension("bin"))?;
    if sha256_hex(&bytes) != header.sha256 {
        return Err(GlError::Config("checkpoint content hash mismatch".into()));
    }
    let vals = bytes_to_f64s(&bytes)?;
    let n = header.nx * header.ny;
    let n_ax = (header.nx - 1) * header.ny;
    let n_ay = header.nx * (header.ny - 1);
    if vals.len() != 3 * n + n_ax + n_ay {
        return Err(GlError::Config(format!(
            "checkpoint has {} values; expected {}",
            vals.len(),
            3 * n + n_ax + n_ay
        )));
    }
    let (re, rest) = vals.split_at(n);
    let (im, rest) = rest.split_at(n);
    let (ax, rest) = rest.split_at(n_ax);
    let (ay, phi) = rest.split_at(n_ay);
    let psi = re
        .iter()
        .zip(im)
        .map(|(&r, &i)| num_complex::Complex64::new(r, i))
        .collect();
    let state = GLState {
        psi,
        a: LinkField { ax: ax.to_vec(), ay: ay.to_vec() },
        phi: phi.to_vec(),
        t: header.t,
    };
    Ok((header, state))
}

/// Plot-ready CSV builder. The output embeds the resolved configuration as
/// leading comment lines and ends with a sha256 line covering everything
/// above it, so identical inputs give byte-identical files.
#[derive(Debug, Clone)]
pub struct CsvTable {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// Deterministic cell formatting for floats (shortest round-trip form).
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

impl CsvTable {
    pub fn new<S: Into<String>>(columns: Vec<S>) -> Self {
        CsvTable { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push_row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.columns.len(), "row width must match the header");
        self.rows.push(cells);
    }

    /// Render with the config pairs as `# key = value` comments and the
    /// trailing content hash line.
    pub fn to_bytes(&self, config: &[(String, String)]) -> Vec<u8> {
        let mut out = Vec::new();
        for (k, v) in config {
            writeln!(out, "# {k} = {v}").unwrap();
        }
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            writeln!(out, "{}", row.join(",")).unwrap();
        }
        let hash = sha256_hex(&out);
        writeln!(out, "# sha256 = {hash}").unwrap();
        out
    }

    pub fn write(&self, path: &Path, config: &[(String, String)]) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, self.to_bytes(config))?;
        Ok(())
    }
}

/// Append rows to a CSV file without the hash trailer (used for cumulative
/// logs like the spectral results table). Creates the file with the header
/// if it does not exist.
pub fn append_csv_rows(path: &Path, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut body = String::new();
    if !path.exists() {
        body.push_str(&columns.join(","));
        body.push('\n');
    }
    for row in rows {
        body.push_str(&row.join(","));
        body.push('\n');
    }
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(body.as_bytes())?;
    Ok(())
}

/// Write a JSON value with the resolved config and a content hash embedded.
pub fn write_json_report(
    path: &Path,
    config: &[(String, String)],
    body: serde_json::Value,
) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let cfg: serde_json::Map<String, serde_json::Value> = config
        .iter()
        .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
        .collect();
    let mut doc = serde_json::Map::new();
    doc.insert("config".into(), serde_json::Value::Object(cfg));
    doc.insert("report".into(), body);
    let rendered = serde_json::to_string_pretty(&serde_json::Value::Object(doc.clone()))
        .expect("report serializes");
    doc.insert("sha256".into(), serde_json::Value::String(sha256_hex(rendered.as_bytes())));
    let final_doc = serde_json::to_string_pretty(&serde_json::Value::Object(doc))
        .expect("report serializes");
    std::fs::write(path, final_doc)?;
    Ok(())
}
