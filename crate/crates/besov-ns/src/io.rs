//! On-disk formats: a binary coefficient container per field, a JSON
//! sidecar describing it, and a JSON manifest tying a time trace together.
//!
//! The binary layout is fixed little-endian:
//!
//! ```text
//! offset  0: magic "BFC1"
//! offset  4: dim   (u32)
//! offset  8: n     (u32, points per axis)
//! offset 12: ncomp (u32)
//! offset 16: flags (u32; bit 0 = divergence-free, other bits reserved)
//! offset 20: ncomp * n^dim coefficients, component-major, modes in
//!            row-major lattice order, each as f64 re then f64 im
//! ```
//!
//! Decoders validate every header field with checked arithmetic before
//! allocating anything, so hostile or corrupted inputs fail fast with a
//! typed error instead of exhausting memory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FourierField, TimeTrace};
use crate::grid::TorusGrid;

const MAGIC: &[u8; 4] = b"BFC1";
const HEADER_LEN: usize = 20;
const FLAG_DIVERGENCE_FREE: u32 = 1;
/// Generous ceiling on components (tensors need dim^2 = 9).
const MAX_NCOMP: u32 = 16;
/// Mirror of the grid construction bounds, checked before any allocation.
const MAX_N: u32 = 8192;

/// Serializes a field into the binary container format.
pub fn encode_field(field: &FourierField) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + field.ncomp() * grid.len() * 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    out.extend_from_slice(&(field.ncomp() as u32).to_le_bytes());
    let flags = if field.divergence_free() { FLAG_DIVERGENCE_FREE } else { 0 };
    out.extend_from_slice(&flags.to_le_bytes());
    for c in 0..field.ncomp() {
        for z in field.component(c) {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

/// Parses a binary container. Every length is validated against the input
/// size before the coefficient buffers are allocated.
pub fn decode_field(bytes: &[u8]) -> Result<FourierField> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Container(format!(
            "{} bytes are shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Container("bad magic; expected BFC1".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let dim = word(4);
    let n = word(8);
    let ncomp = word(12);
    let flags = word(16);

    if !(2..=3).contains(&dim) {
        return Err(Error::Container(format!("dimension {dim} not supported")));
    }
    if n == 0 || n > MAX_N {
        return Err(Error::Container(format!("grid size {n} outside [1, {MAX_N}]")));
    }
    if ncomp == 0 || ncomp > MAX_NCOMP {
        return Err(Error::Container(format!("component count {ncomp} outside [1, {MAX_NCOMP}]")));
    }
    if flags & !FLAG_DIVERGENCE_FREE != 0 {
        return Err(Error::Container(format!("unknown flag bits {:#x}", flags)));
    }

    let modes = (n as usize)
        .checked_pow(dim)
        .ok_or_else(|| Error::Container("mode count overflows".into()))?;
    let payload = modes
        .checked_mul(ncomp as usize)
        .and_then(|m| m.checked_mul(16))
        .ok_or_else(|| Error::Container("payload length overflows".into()))?;
    let actual = bytes.len() - HEADER_LEN;
    if actual != payload {
        return Err(Error::Container(format!(
            "payload holds {actual} bytes, header promises {payload}"
        )));
    }

    let grid = Arc::new(TorusGrid::new(dim as usize, n as usize)?);
    let mut comps = Vec::with_capacity(ncomp as usize);
    let mut at = HEADER_LEN;
    for _ in 0..ncomp {
        let mut coeffs = Vec::with_capacity(modes);
        for _ in 0..modes {
            let re = f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
            let im = f64::from_le_bytes(bytes[at + 8..at + 16].try_into().unwrap());
            coeffs.push(Complex64::new(re, im));
            at += 16;
        }
        comps.push(coeffs);
    }
    let mut field = FourierField::from_coeffs(grid, comps)?;
    field.set_divergence_free(flags & FLAG_DIVERGENCE_FREE != 0);
    Ok(field)
}

pub fn write_field(path: &Path, field: &FourierField) -> Result<()> {
    Ok(std::fs::write(path, encode_field(field))?)
}

pub fn read_field(path: &Path) -> Result<FourierField> {
    decode_field(&std::fs::read(path)?)
}

/// Human-readable companion of a binary field file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSidecar {
    pub dim: usize,
    pub n: usize,
    pub ncomp: usize,
    pub divergence_free: bool,
    #[serde(default)]
    pub coeff_l2: Option<f64>,
    #[serde(default)]
    pub description: Option<String>,
}

impl FieldSidecar {
    pub fn describe(field: &FourierField) -> Self {
        Self {
            dim: field.grid().dim(),
            n: field.grid().n(),
            ncomp: field.ncomp(),
            divergence_free: field.divergence_free(),
            coeff_l2: Some(field.coeff_l2()),
            description: None,
        }
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        let sidecar: FieldSidecar =
            serde_json::from_slice(bytes).map_err(Error::config_from_json)?;
        if sidecar.n == 0 || sidecar.ncomp == 0 {
            return Err(Error::Container("sidecar describes an empty field".into()));
        }
        Ok(sidecar)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Checks that a decoded field matches this description.
    pub fn matches(&self, field: &FourierField) -> Result<()> {
        if field.grid().dim() != self.dim
            || field.grid().n() != self.n
            || field.ncomp() != self.ncomp
            || field.divergence_free() != self.divergence_free
        {
            return Err(Error::Container(format!(
                "sidecar (dim {}, n {}, ncomp {}, div-free {}) does not describe \
                 the field (dim {}, n {}, ncomp {}, div-free {})",
                self.dim,
                self.n,
                self.ncomp,
                self.divergence_free,
                field.grid().dim(),
                field.grid().n(),
                field.ncomp(),
                field.divergence_free()
            )));
        }
        Ok(())
    }
}

/// Index of a stored time trace: sample times, the field file per sample,
/// an echo of the generating configuration, and summary diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceManifest {
    pub times: Vec<f64>,
    pub field_files: Vec<String>,
    pub config_echo: serde_json::Value,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, f64>,
}

impl TraceManifest {
    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        let manifest: TraceManifest =
            serde_json::from_slice(bytes).map_err(Error::config_from_json)?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() {
            return Err(Error::EmptyTrace);
        }
        if self.times.len() != self.field_files.len() {
            return Err(Error::Container(format!(
                "{} times but {} field files",
                self.times.len(),
                self.field_files.len()
            )));
        }
        if self.times[0] != 0.0
            || self.times.iter().any(|t| !t.is_finite())
            || self.times.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::BadTimeGrid);
        }
        for name in &self.field_files {
            let p = Path::new(name);
            let escapes = p.is_absolute()
                || p.components().any(|c| {
                    matches!(
                        c,
                        std::path::Component::ParentDir | std::path::Component::RootDir
                    )
                });
            if name.is_empty() || escapes {
                return Err(Error::Container(format!(
                    "field file name {name:?} must be a relative path inside the trace directory"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Writes every sample of a trace plus its manifest under `dir`, returning
/// the manifest path. Field files are named `<stem>_<index>.bfc`.
pub fn write_trace(
    trace: &TimeTrace,
    dir: &Path,
    stem: &str,
    config_echo: serde_json::Value,
    diagnostics: BTreeMap<String, f64>,
) -> Result<PathBuf> {
    if stem.is_empty() || stem.contains(['/', '\\']) {
        return Err(Error::InvalidArgument(format!("bad trace stem {stem:?}")));
    }
    std::fs::create_dir_all(dir)?;
    let mut field_files = Vec::with_capacity(trace.len());
    for i in 0..trace.len() {
        let name = format!("{stem}_{i:05}.bfc");
        write_field(&dir.join(&name), trace.field(i))?;
        field_files.push(name);
    }
    let manifest = TraceManifest {
        times: trace.times().to_vec(),
        field_files,
        config_echo,
        diagnostics,
    };
    manifest.validate()?;
    let path = dir.join(format!("{stem}.manifest.json"));
    std::fs::write(&path, manifest.to_json_string()?)?;
    Ok(path)
}

/// Loads a manifest and every field it references (relative to the
/// manifest's directory).
pub fn read_trace(manifest_path: &Path) -> Result<(TimeTrace, TraceManifest)> {
    let manifest = TraceManifest::from_slice(&std::fs::read(manifest_path)?)?;
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut fields = Vec::with_capacity(manifest.field_files.len());
    for name in &manifest.field_files {
        fields.push(read_field(&dir.join(name))?);
    }
    let trace = TimeTrace::new(manifest.times.clone(), fields)?;
    Ok((trace, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{random_field, RandomFieldOpts};
    use crate::ops::{heat_flow_trace, taylor_green};

    fn grid2(n: usize) -> Arc<TorusGrid> {
        Arc::new(TorusGrid::new(2, n).unwrap())
    }

    #[test]
    fn container_round_trip_preserves_every_bit() {
        let grid = grid2(16);
        let mut f = random_field(
            &grid,
            7,
            RandomFieldOpts { ncomp: 2, divergence_free: true, ..RandomFieldOpts::default() },
        );
        // Exercise signed zero and subnormals explicitly.
        f.component_mut(0)[3] = Complex64::new(-0.0, f64::MIN_POSITIVE / 4.0);
        f.set_divergence_free(true);

        let bytes = encode_field(&f);
        let g = decode_field(&bytes).unwrap();
        assert_eq!(g.grid().dim(), 2);
        assert_eq!(g.grid().n(), 16);
        assert_eq!(g.ncomp(), 2);
        assert!(g.divergence_free());
        for c in 0..2 {
            for (a, b) in f.component(c).iter().zip(g.component(c)) {
                assert_eq!(a.re.to_bits(), b.re.to_bits());
                assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }

    #[test]
    fn malformed_containers_are_rejected_without_allocating() {
        // Truncated header.
        assert!(decode_field(b"BFC").is_err());
        // Wrong magic.
        assert!(decode_field(&[0u8; 64]).is_err());

        let mut header = Vec::new();
        header.extend_from_slice(b"BFC1");
        header.extend_from_slice(&3u32.to_le_bytes()); // dim
        header.extend_from_slice(&8192u32.to_le_bytes()); // n: the largest legal grid
        header.extend_from_slice(&9u32.to_le_bytes()); // ncomp
        header.extend_from_slice(&0u32.to_le_bytes()); // flags
        // The header promises terabytes; the 4-byte payload must be rejected
        // before any table is built.
        let mut huge_claim = header.clone();
        huge_claim.extend_from_slice(&[0u8; 4]);
        let t0 = std::time::Instant::now();
        assert!(decode_field(&huge_claim).is_err());
        assert!(t0.elapsed().as_millis() < 100);

        let make = |dim: u32, n: u32, ncomp: u32, flags: u32, payload: usize| {
            let mut b = Vec::new();
            b.extend_from_slice(b"BFC1");
            for v in [dim, n, ncomp, flags] {
                b.extend_from_slice(&v.to_le_bytes());
            }
            b.extend(std::iter::repeat(0u8).take(payload));
            b
        };
        // Non power of two, dimension out of range, ncomp 0, unknown flags,
        // payload length mismatch.
        assert!(decode_field(&make(2, 12, 1, 0, 12 * 12 * 16)).is_err());
        assert!(decode_field(&make(4, 16, 1, 0, 16)).is_err());
        assert!(decode_field(&make(2, 16, 0, 0, 0)).is_err());
        assert!(decode_field(&make(2, 16, 1, 6, 16 * 16 * 16)).is_err());
        assert!(decode_field(&make(2, 16, 1, 0, 16 * 16 * 16 - 8)).is_err());
        // And the valid shape parses.
        assert!(decode_field(&make(2, 16, 1, 1, 16 * 16 * 16)).is_ok());
    }

    #[test]
    fn sidecar_describes_and_validates_fields() {
        let grid = grid2(16);
        let f = taylor_green(&grid).unwrap();
        let sc = FieldSidecar::describe(&f);
        assert!(sc.matches(&f).is_ok());

        let text = sc.to_json_string().unwrap();
        let back = FieldSidecar::from_slice(text.as_bytes()).unwrap();
        assert_eq!(back, sc);

        let other = random_field(&grid, 3, RandomFieldOpts::default());
        assert!(sc.matches(&other).is_err());

        assert!(FieldSidecar::from_slice(b"{\"dim\": 2}").is_err());
        assert!(FieldSidecar::from_slice(
            br#"{"dim":2,"n":16,"ncomp":2,"divergence_free":true,"extra":1}"#
        )
        .is_err());
    }

    #[test]
    fn trace_round_trip_through_manifest() {
        let grid = grid2(16);
        let u0 = taylor_green(&grid).unwrap();
        let trace = heat_flow_trace(&u0, vec![0.0, 0.05, 0.1, 0.2]).unwrap();
        let dir = tempfile::tempdir().unwrap();

        let mut diags = BTreeMap::new();
        diags.insert("sigma".to_string(), 1e-11);
        let manifest_path = write_trace(
            &trace,
            dir.path(),
            "run",
            serde_json::json!({"dt": 0.05}),
            diags,
        )
        .unwrap();

        let (back, manifest) = read_trace(&manifest_path).unwrap();
        assert_eq!(back.times(), trace.times());
        assert_eq!(manifest.diagnostics["sigma"], 1e-11);
        for i in 0..trace.len() {
            for c in 0..2 {
                for (a, b) in trace.field(i).component(c).iter().zip(back.field(i).component(c)) {
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn manifests_reject_inconsistent_or_escaping_entries() {
        let good = TraceManifest {
            times: vec![0.0, 0.1],
            field_files: vec!["a.bfc".into(), "b.bfc".into()],
            config_echo: serde_json::Value::Null,
            diagnostics: BTreeMap::new(),
        };
        assert!(good.validate().is_ok());

        let mut mismatched = good.clone();
        mismatched.field_files.pop();
        assert!(mismatched.validate().is_err());

        let mut unordered = good.clone();
        unordered.times = vec![0.0, 0.0];
        assert!(unordered.validate().is_err());

        let mut late_start = good.clone();
        late_start.times = vec![0.1, 0.2];
        assert!(late_start.validate().is_err());

        let mut escaping = good.clone();
        escaping.field_files[0] = "../secret.bfc".into();
        assert!(escaping.validate().is_err());

        let mut absolute = good;
        absolute.field_files[0] = "/etc/passwd".into();
        assert!(absolute.validate().is_err());
    }
}
