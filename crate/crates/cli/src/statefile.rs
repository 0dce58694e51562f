//! JSON state files: loading and saving the objects the command line
//! works with.
//!
//! Every file is an object `{ "kind", "dims", "data", "metadata"? }`.
//! Complex numbers are `[re, im]` pairs. Supported kinds:
//!
//! * `"pure"`  — `dims: [m, n]`, `data`: `m·n` amplitudes in row-major
//!   (sender-major) order.
//! * `"mixed"` — `dims: [m, n]`, `data`: an `(m·n) × (m·n)` density matrix
//!   as a list of rows.
//! * `"input"` — `dims: [d]`, `data`: `d` amplitudes.
//!
//! Loading is forgiving to write-time rounding: norms and traces off by at
//! most `1e-6` are renormalized with a warning on stderr, and a density
//! matrix is symmetrized when its Hermiticity deviation is below the same
//! bound. Anything worse is rejected.

use qutel_core::{BipartiteMixed, BipartitePure, ComplexMatrix, InputState, C64};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Tolerance for write-time rounding in state files.
const FILE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub kind: String,
    pub dims: Vec<usize>,
    pub data: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

fn parse_complex(value: &serde_json::Value, what: &str) -> Result<C64, String> {
    let pair = value
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| format!("{what}: expected a [re, im] pair, got {value}"))?;
    let re = pair[0]
        .as_f64()
        .ok_or_else(|| format!("{what}: non-numeric real part {}", pair[0]))?;
    let im = pair[1]
        .as_f64()
        .ok_or_else(|| format!("{what}: non-numeric imaginary part {}", pair[1]))?;
    Ok(C64::new(re, im))
}

fn parse_vector(value: &serde_json::Value, len: usize, what: &str) -> Result<Vec<C64>, String> {
    let entries = value
        .as_array()
        .ok_or_else(|| format!("{what}: expected an array of [re, im] pairs"))?;
    if entries.len() != len {
        return Err(format!("{what}: expected {len} entries, found {}", entries.len()));
    }
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| parse_complex(e, &format!("{what}[{i}]")))
        .collect()
}

fn parse_matrix(value: &serde_json::Value, size: usize, what: &str) -> Result<ComplexMatrix, String> {
    let rows = value
        .as_array()
        .ok_or_else(|| format!("{what}: expected an array of rows"))?;
    if rows.len() != size {
        return Err(format!("{what}: expected {size} rows, found {}", rows.len()));
    }
    let mut flat = Vec::with_capacity(size * size);
    for (r, row) in rows.iter().enumerate() {
        flat.extend(parse_vector(row, size, &format!("{what} row {r}"))?);
    }
    ComplexMatrix::from_vec(size, size, flat).map_err(|e| e.to_string())
}

fn complex_json(z: C64) -> serde_json::Value {
    serde_json::json!([z.re, z.im])
}

fn read(path: &Path) -> Result<StateFile, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("cannot parse {}: {e}", path.display()))
}

fn warn(path: &Path, message: &str) {
    eprintln!("warning: {}: {message}", path.display());
}

fn renormalized(amplitudes: Vec<C64>, path: &Path, what: &str) -> Result<Vec<C64>, String> {
    let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > FILE_TOLERANCE {
        return Err(format!(
            "{}: {what} has norm {norm:.9}, more than {FILE_TOLERANCE:.0e} from 1",
            path.display()
        ));
    }
    if (norm - 1.0).abs() <= 1e-12 {
        return Ok(amplitudes);
    }
    warn(path, &format!("{what} norm {norm:.9} renormalized to 1"));
    Ok(amplitudes.into_iter().map(|z| z / norm).collect())
}

fn bipartite_dims(file: &StateFile, path: &Path) -> Result<(usize, usize), String> {
    match file.dims.as_slice() {
        [m, n] if *m > 0 && *n > 0 => Ok((*m, *n)),
        other => Err(format!(
            "{}: expected dims [m, n] with positive entries, got {other:?}",
            path.display()
        )),
    }
}

pub fn load_pure(path: &Path) -> Result<BipartitePure, String> {
    let file = read(path)?;
    if file.kind != "pure" {
        return Err(format!("{}: expected kind \"pure\", got \"{}\"", path.display(), file.kind));
    }
    let dims = bipartite_dims(&file, path)?;
    let amplitudes = parse_vector(&file.data, dims.0 * dims.1, "data")?;
    let amplitudes = renormalized(amplitudes, path, "pure state")?;
    BipartitePure::new(dims, amplitudes).map_err(|e| format!("{}: {e}", path.display()))
}

/// Load a resource state: a `"mixed"` density matrix, or a `"pure"` state
/// promoted to its projector.
pub fn load_resource(path: &Path) -> Result<BipartiteMixed, String> {
    let file = read(path)?;
    match file.kind.as_str() {
        "pure" => Ok(BipartiteMixed::from_pure(&load_pure(path)?)),
        "mixed" => {
            let dims = bipartite_dims(&file, path)?;
            let size = dims.0 * dims.1;
            let mut density = parse_matrix(&file.data, size, "data")?;
            let herm = density.hermiticity_deviation();
            if herm > FILE_TOLERANCE {
                return Err(format!(
                    "{}: density matrix is not Hermitian (deviation {herm:.3e})",
                    path.display()
                ));
            }
            if herm > 1e-12 {
                warn(path, &format!("symmetrized density matrix (deviation {herm:.3e})"));
                density = density.add(&density.adjoint()).scale(C64::new(0.5, 0.0));
            }
            let trace = density.trace().re;
            if (trace - 1.0).abs() > FILE_TOLERANCE {
                return Err(format!(
                    "{}: density matrix has trace {trace:.9}, more than {FILE_TOLERANCE:.0e} from 1",
                    path.display()
                ));
            }
            if (trace - 1.0).abs() > 1e-12 {
                warn(path, &format!("trace {trace:.9} renormalized to 1"));
                density = density.scale(C64::new(1.0 / trace, 0.0));
            }
            BipartiteMixed::new(dims, density).map_err(|e| format!("{}: {e}", path.display()))
        }
        other => Err(format!(
            "{}: expected kind \"pure\" or \"mixed\", got \"{other}\"",
            path.display()
        )),
    }
}

pub fn load_input(path: &Path) -> Result<InputState, String> {
    let file = read(path)?;
    if file.kind != "input" {
        return Err(format!("{}: expected kind \"input\", got \"{}\"", path.display(), file.kind));
    }
    let d = match file.dims.as_slice() {
        [d] if *d > 0 => *d,
        other => return Err(format!("{}: expected dims [d], got {other:?}", path.display())),
    };
    let amplitudes = parse_vector(&file.data, d, "data")?;
    let amplitudes = renormalized(amplitudes, path, "input state")?;
    InputState::new(d, amplitudes).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn save_pure(state: &BipartitePure, label: &str, path: &Path) -> Result<(), String> {
    let file = StateFile {
        kind: "pure".into(),
        dims: vec![state.dims().0, state.dims().1],
        data: serde_json::Value::Array(state.amplitudes().iter().map(|&z| complex_json(z)).collect()),
        metadata: Some(serde_json::json!({ "label": label })),
    };
    write(&file, path)
}

pub fn save_resource(state: &BipartiteMixed, label: &str, path: &Path) -> Result<(), String> {
    let size = state.dims().0 * state.dims().1;
    let rows: Vec<serde_json::Value> = (0..size)
        .map(|r| {
            serde_json::Value::Array((0..size).map(|c| complex_json(state.density().get(r, c))).collect())
        })
        .collect();
    let file = StateFile {
        kind: "mixed".into(),
        dims: vec![state.dims().0, state.dims().1],
        data: serde_json::Value::Array(rows),
        metadata: Some(serde_json::json!({ "label": label })),
    };
    write(&file, path)
}

pub fn save_input(state: &InputState, label: &str, path: &Path) -> Result<(), String> {
    let file = StateFile {
        kind: "input".into(),
        dims: vec![state.d()],
        data: serde_json::Value::Array(state.amplitudes().iter().map(|&z| complex_json(z)).collect()),
        metadata: Some(serde_json::json!({ "label": label })),
    };
    write(&file, path)
}

fn write(file: &StateFile, path: &Path) -> Result<(), String> {
    let text = serde_json::to_string_pretty(file).map_err(|e| e.to_string())?;
    std::fs::write(path, text + "\n").map_err(|e| format!("cannot write {}: {e}", path.display()))
}
