use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::Group;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Classification => "classification",
            Task::Regression => "regression",
        })
    }
}

/// Rows `(x_i, s_i, y_i)`. Classification targets are 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    s: Vec<Group>,
    y: Array1<f64>,
    columns: Vec<String>,
    task: Task,
}

impl Dataset {
    pub fn new(x: Array2<f64>, s: Vec<Group>, y: Array1<f64>, columns: Vec<String>, task: Task) -> Result<Self> {
        let n = x.nrows();
        if s.len() != n || y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} feature rows, {} group labels, {} targets",
                s.len(),
                y.len()
            )));
        }
        if columns.len() != x.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature columns but {} names",
                x.ncols(),
                columns.len()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Validation("dataset contains non-finite values".into()));
        }
        if task == Task::Classification && y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Validation("classification targets must be 0 or 1".into()));
        }
        Ok(Dataset { x, s, y, columns, task })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.x.row(i)
    }

    pub fn s(&self) -> &[Group] {
        &self.s
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn task(&self) -> Task {
        self.task
    }

    /// Distinct group labels, ascending.
    pub fn groups(&self) -> Vec<Group> {
        self.group_rows().into_keys().collect()
    }

    /// Row indices of each group, in dataset order.
    pub fn group_rows(&self) -> BTreeMap<Group, Vec<usize>> {
        let mut out: BTreeMap<Group, Vec<usize>> = BTreeMap::new();
        for (i, &g) in self.s.iter().enumerate() {
            out.entry(g).or_default().push(i);
        }
        out
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(Axis(0), rows),
            s: rows.iter().map(|&i| self.s[i]).collect(),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            columns: self.columns.clone(),
            task: self.task,
        }
    }

    /// Same rows with a different task tag (and targets).
    pub fn with_targets(&self, y: Array1<f64>, task: Task) -> Result<Dataset> {
        Dataset::new(self.x.clone(), self.s.clone(), y, self.columns.clone(), task)
    }

    /// CSV with the feature columns, then `s`, then `y`. Numbers are written
    /// with 17 significant digits so a reload is bit-exact.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        header.extend(["s", "y"]);
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec: Vec<String> = self.x.row(i).iter().map(|v| fmt_f64(*v)).collect();
            rec.push(self.s[i].to_string());
            rec.push(fmt_f64(self.y[i]));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::Validation(format!("csv flush: {e}")))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Schema describing the layout produced by [`Dataset::write_csv`].
    pub fn schema(&self) -> super::SchemaConfig {
        super::SchemaConfig {
            task: self.task,
            numeric: self.columns.clone(),
            categorical: Vec::new(),
            sensitive: super::SensitiveColumn {
                column: "s".into(),
                labels: BTreeMap::new(),
                skip_unmapped: false,
            },
            target: super::TargetColumn {
                column: "y".into(),
                labels: BTreeMap::new(),
            },
            standardize: false,
            missing: super::schema::default_missing(),
        }
    }
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
