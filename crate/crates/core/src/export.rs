//! CSV and JSON artifacts.
//!
//! Every floating-point number is written with 17 significant digits in
//! scientific notation, which round-trips `f64` exactly. Files are written to
//! a temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Number, Value};

use crate::dictionary::Dictionary;
use crate::edmd::KoopmanModel;
use crate::model::StateVec;
use crate::nsfd::Trajectory;
use crate::scenarios::{PipelineOutput, RunReport};
use crate::{Error, Result};

pub const TRAJECTORY_HEADER: &str = "t,s,i,r,d";

/// `x` with 17 significant digits, e.g. `5.0000000000000000e-1`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.len() * 120);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for (k, x) in traj.states.iter().enumerate() {
        let row = [traj.time(k), x.s, x.i, x.r, x.d].map(fmt_num).join(",");
        out.push_str(&row);
        out.push('\n');
    }
    out
}

/// Parses a trajectory CSV. The header must be exactly `t,s,i,r,d` and the
/// time column must be uniformly spaced.
pub fn parse_trajectory_csv(text: &str) -> Result<Trajectory> {
    let bad = |detail: String| Error::Format {
        what: "trajectory CSV",
        detail,
    };
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRAJECTORY_HEADER => {}
        other => {
            return Err(bad(format!(
                "expected header '{TRAJECTORY_HEADER}', got {other:?}"
            )))
        }
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad(format!(
                "row {}: expected 5 fields, got {}",
                n + 1,
                fields.len()
            )));
        }
        let mut v = [0.0; 5];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f
                .trim()
                .parse()
                .map_err(|_| bad(format!("row {}: '{f}' is not a number", n + 1)))?;
        }
        times.push(v[0]);
        states.push(StateVec::new(v[1], v[2], v[3], v[4]));
    }
    if states.len() < 2 {
        return Err(bad(format!("need at least 2 rows, got {}", states.len())));
    }
    let t0 = times[0];
    let dt = times[1] - times[0];
    for (k, t) in times.iter().enumerate() {
        let expected = t0 + k as f64 * dt;
        if (t - expected).abs() > 1e-9 * (1.0 + expected.abs()) {
            return Err(bad(format!(
                "row {}: time {t} breaks uniform spacing",
                k + 1
            )));
        }
    }
    Ok(Trajectory { t0, dt, states })
}

pub fn read_trajectory_csv(path: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory_csv(&text)
}

/// Serializes `value` as pretty JSON with every float rewritten to 17
/// significant digits. Non-finite floats become `null`.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Format {
        what: "JSON",
        detail: e.to_string(),
    })?;
    reformat_floats(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Format {
        what: "JSON",
        detail: e.to_string(),
    })?;
    s.push('\n');
    Ok(s)
}

fn reformat_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            *v = n.as_f64().map(float_value).unwrap_or(Value::Null);
        }
        Value::Array(items) => items.iter_mut().for_each(reformat_floats),
        Value::Object(map) => map.values_mut().for_each(reformat_floats),
        _ => {}
    }
}

fn float_value(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(
            fmt_num(x)
                .parse::<Number>()
                .expect("formatted float is valid JSON"),
        )
    } else {
        Value::Null
    }
}

/// Model export: dictionary name and labels, `dt`, `svd_tol`, `K` as rows,
/// eigenvalues as `{re, im}` and the training residual.
pub fn model_json(model: &KoopmanModel, dict: &Dictionary) -> Result<String> {
    if model.dictionary != dict.name() || model.dim() != dict.len() {
        return Err(Error::Dimension(format!(
            "model '{}' does not match dictionary '{}'",
            model.dictionary,
            dict.name()
        )));
    }
    let k: Vec<Vec<f64>> = model
        .k
        .row_iter()
        .map(|row| row.iter().copied().collect())
        .collect();
    let eig: Vec<Value> = model
        .eigenvalues
        .iter()
        .map(|l| json!({ "re": l.re, "im": l.im }))
        .collect();
    let v = json!({
        "dictionary": { "name": dict.name(), "labels": dict.labels() },
        "dt": model.dt,
        "svd_tol": model.svd_tol,
        "K": k,
        "eigenvalues": eig,
        "residual": model.residual,
    });
    to_json_string(&v)
}

/// Reads a model export, re-decomposing `K`. Returns the model and the
/// dictionary labels stored with it.
pub fn parse_model_json(text: &str) -> Result<(KoopmanModel, Vec<String>)> {
    let bad = |detail: &str| Error::Format {
        what: "model JSON",
        detail: detail.to_string(),
    };
    let v: Value = serde_json::from_str(text).map_err(|e| bad(&e.to_string()))?;
    let num = |key: &str| v.get(key).and_then(Value::as_f64).ok_or_else(|| bad(key));
    let name = v["dictionary"]["name"]
        .as_str()
        .ok_or_else(|| bad("dictionary.name"))?;
    let labels = v["dictionary"]["labels"]
        .as_array()
        .ok_or_else(|| bad("dictionary.labels"))?
        .iter()
        .map(|l| l.as_str().map(str::to_string).ok_or_else(|| bad("label")))
        .collect::<Result<Vec<_>>>()?;
    let rows = v["K"].as_array().ok_or_else(|| bad("K"))?;
    let n = rows.len();
    let mut entries = Vec::with_capacity(n * n);
    for row in rows {
        let row = row
            .as_array()
            .filter(|r| r.len() == n)
            .ok_or_else(|| bad("K row"))?;
        for x in row {
            entries.push(x.as_f64().ok_or_else(|| bad("K entry"))?);
        }
    }
    if n != labels.len() {
        return Err(bad("K size does not match the label count"));
    }
    let k = DMatrix::from_row_slice(n, n, &entries);
    let model = KoopmanModel::from_matrix(k, name, num("dt")?, num("svd_tol")?, num("residual")?)?;
    Ok((model, labels))
}

pub fn report_json(report: &RunReport) -> Result<String> {
    to_json_string(report)
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::other("path has no file name")))?;
    let tmp = dir.join(format!(".{}.tmp", file_name.to_string_lossy()));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Writes the truth CSV and, per dictionary, the prediction CSV, model JSON and
/// report JSON. Returns the written paths in order.
pub fn export_pipeline(out_dir: &Path, output: &PipelineOutput) -> Result<Vec<PathBuf>> {
    let stem = &output.label;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let path = out_dir.join(name);
        write_atomic(&path, body.as_bytes())?;
        written.push(path);
        Ok(())
    };
    put(format!("{stem}_nsfd.csv"), trajectory_csv(&output.truth))?;
    for run in &output.runs {
        let d = run.dictionary.name();
        put(
            format!("{stem}_koopman_{d}.csv"),
            trajectory_csv(&run.prediction),
        )?;
        put(
            format!("{stem}_{d}_model.json"),
            model_json(&run.model, &run.dictionary)?,
        )?;
        put(format!("{stem}_{d}_report.json"), report_json(&run.report)?)?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_has_17_significant_digits() {
        assert_eq!(fmt_num(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_num(-200.0), "-2.0000000000000000e2");
        for x in [0.1, 1.0 / 3.0, -6.931_471_805_599_453, 1e-300, f64::MAX] {
            assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_layout() {
        let tr = Trajectory {
            t0: 0.0,
            dt: 0.1,
            states: vec![StateVec::new(0.9, 0.1, 0.0, 0.0); 3],
        };
        let text = trajectory_csv(&tr);
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines[0], "t,s,i,r,d");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[4], "");
        assert!(!text.contains('\r'));
        assert_eq!(
            lines[1],
            "0.0000000000000000e0,9.0000000000000002e-1,1.0000000000000001e-1,0.0000000000000000e0,0.0000000000000000e0"
        );
        assert_eq!(parse_trajectory_csv(&text).unwrap(), tr);
    }

    #[test]
    fn csv_rejects_bad_schema() {
        assert!(parse_trajectory_csv("t,s,i,r\n0,1,0,0\n0.1,1,0,0\n").is_err());
        assert!(parse_trajectory_csv("t,s,i,r,d\n0,1,0,0,0\n0.1,1,0,x,0\n").is_err());
        assert!(parse_trajectory_csv("t,s,i,r,d\n0,1,0,0,0\n").is_err());
        assert!(parse_trajectory_csv("t,s,i,r,d\n0,1,0,0,0\n0.1,1,0,0,0\n0.5,1,0,0,0\n").is_err());
    }

    #[test]
    fn json_floats_are_rewritten_and_non_finite_is_null() {
        let s = to_json_string(&json!({ "a": 0.25, "n": 3, "bad": f64::NAN })).unwrap();
        let v: Value = serde_json::from_str(&s).unwrap();
        assert!(s.contains("2.5000000000000000e-1"));
        assert_eq!(v["n"].as_u64(), Some(3));
        assert!(v["bad"].is_null());
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("a.txt");
        write_atomic(&path, b"hello").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "hello");
        let names: Vec<_> = fs::read_dir(path.parent().unwrap()).unwrap().collect();
        assert_eq!(names.len(), 1);
    }
}
