//! CSV and JSON writers. Floats are written with 17 significant digits so every value
//! round-trips bit-exactly; line endings are LF.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use accel_core::{CoupledRun, FlowTrajectory64, Trajectory64};
use serde::Serialize;

use crate::error::{HarnessError, HarnessResult};

pub const DISCRETE_COLUMNS: [&str; 4] = ["k", "f_gap", "grad_norm", "monotone_flag"];
pub const FLOW_COLUMNS: [&str; 6] = ["t", "f_gap", "grad_norm", "m0_residual_norm", "mp_residual_norm", "storage"];
pub const ESTIMATION_COLUMNS: [&str; 4] = ["k", "phi_star", "lambda", "gap_phi_minus_f"];
pub const SWEEP_COLUMNS: [&str; 5] = ["kappa", "method", "fitted_contraction", "theoretical", "pass"];
pub const COMPARE_COLUMNS: [&str; 3] = ["k", "t", "deviation"];

/// `{:.16e}`, which `str::parse::<f64>` inverts exactly.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

/// Writes a table through a temporary file and a rename.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> HarnessResult<()> {
    let tmp = tmp_path(path);
    let file = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    w.write_record(header).map_err(csv_err(&tmp))?;
    for row in rows {
        w.write_record(&row).map_err(csv_err(&tmp))?;
    }
    w.flush().map_err(io_err(&tmp))?;
    drop(w);
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn write_discrete_csv(path: &Path, t: &Trajectory64) -> HarnessResult<()> {
    let flags = t.monotone_flags();
    let rows = (0..t.len()).map(|k| {
        vec![
            k.to_string(),
            fmt_f64(t.f_gaps[k]),
            fmt_f64(t.grad_norms[k]),
            flags[k].to_string(),
        ]
    });
    write_table(path, &DISCRETE_COLUMNS, rows)
}

pub fn write_flow_csv(path: &Path, t: &FlowTrajectory64) -> HarnessResult<()> {
    let rows = t.samples.iter().map(|s| {
        let d = &s.diagnostics;
        vec![
            fmt_f64(s.state.t),
            fmt_f64(d.f_gap),
            fmt_f64(d.grad_norm),
            fmt_f64(d.m0_residual_norm),
            fmt_f64(d.mp_residual_norm),
            fmt_f64(d.storage),
        ]
    });
    write_table(path, &FLOW_COLUMNS, rows)
}

pub fn write_estimation_csv(path: &Path, run: &CoupledRun<f64>) -> HarnessResult<()> {
    let rows = run.history.iter().zip(&run.trajectory.values).map(|(s, f)| {
        vec![
            s.k.to_string(),
            fmt_f64(s.phi_star),
            fmt_f64(s.lambda),
            fmt_f64(s.phi_star - f),
        ]
    });
    write_table(path, &ESTIMATION_COLUMNS, rows)
}

pub fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Pretty JSON with a trailing newline, written to a temporary file and renamed into place.
pub fn write_json_atomic<S: Serialize>(path: &Path, value: &S) -> HarnessResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("summary serializes");
    bytes.push(b'\n');
    write_bytes_atomic(path, &bytes)
}

pub fn write_bytes_atomic(path: &Path, bytes: &[u8]) -> HarnessResult<()> {
    let tmp = tmp_path(path);
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn ensure_dir(dir: &Path) -> HarnessResult<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}
