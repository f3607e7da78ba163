//! Instance files: `{"n", "s", "C", "A"?, "b"?}` with `C` stored full and row-major.

use std::path::Path;

use gscale_core::{Instance, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub s: usize,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
}

fn rows_to_mat(rows: &[Vec<f64>], cols: usize, what: &str) -> CliResult<Mat> {
    if rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::Usage(format!("every row of {what} needs {cols} entries")));
    }
    Ok(Mat::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

impl InstanceFile {
    pub fn to_instance(&self) -> CliResult<Instance> {
        if self.c.len() != self.n {
            return Err(CliError::Usage(format!("C has {} rows, n = {}", self.c.len(), self.n)));
        }
        let c = rows_to_mat(&self.c, self.n, "C")?;
        let (a, b) = match (&self.a, &self.b) {
            (None, None) => (Mat::zeros(0, self.n), Vec::new()),
            (Some(a), Some(b)) => (rows_to_mat(a, self.n, "A")?, b.clone()),
            _ => return Err(CliError::Usage("A and b must be given together".into())),
        };
        Ok(Instance::new(c, self.s, a, b)?)
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let rows = |m: &Mat| (0..m.rows()).map(|i| m.row(i).to_vec()).collect::<Vec<_>>();
        let (a, b) = if inst.m() == 0 { (None, None) } else { (Some(rows(inst.a())), Some(inst.b().to_vec())) };
        InstanceFile { n: inst.n(), s: inst.s(), c: rows(inst.c()), a, b }
    }
}

pub fn parse_instance(text: &str) -> CliResult<Instance> {
    let f: InstanceFile = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("instance JSON: {e}")))?;
    f.to_instance()
}

pub fn load_instance(path: &Path) -> CliResult<Instance> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    parse_instance(&text)
}

pub fn instance_json(inst: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_instance(inst)).expect("instance serializes")
}
