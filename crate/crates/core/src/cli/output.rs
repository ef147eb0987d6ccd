use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::FlowSnapshot;

pub const SNAPSHOT_HEADER: [&str; 7] = ["r", "phi", "phi_r", "psi", "psi_r", "lambda1", "lambda2"];

pub fn snapshot_file_name(t: f64) -> String {
    format!("snapshot_t{t:.6e}.csv")
}

fn field(x: f64) -> Result<String> {
    if !x.is_finite() {
        return Err(Error::NonFinite("snapshot table"));
    }
    Ok(format!("{x:.16e}"))
}

pub fn write_snapshot(dir: &Path, s: &FlowSnapshot) -> Result<PathBuf> {
    let path = dir.join(snapshot_file_name(s.t));
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(SNAPSHOT_HEADER)?;
    for i in 0..s.len() {
        let row = [
            s.r[i],
            s.phi[i],
            s.phi_r[i],
            s.psi[i],
            s.psi_r[i],
            s.lambda1[i],
            s.lambda2[i],
        ];
        let cells = row.iter().map(|&x| field(x)).collect::<Result<Vec<_>>>()?;
        w.write_record(&cells)?;
    }
    w.flush()?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}
