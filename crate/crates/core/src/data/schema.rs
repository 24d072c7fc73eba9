use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Task};
use crate::error::{Error, Result};
use crate::group::Group;

/// Column roles of a CSV file.
///
/// ```toml
/// task = "classification"
/// numeric = ["age", "hours_per_week"]
/// categorical = ["workclass"]
/// standardize = true
///
/// [sensitive]
/// column = "sex"
/// labels = { Male = 0, Female = 1 }
///
/// [target]
/// column = "income"
/// labels = { "<=50K" = 0, ">50K" = 1 }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaConfig {
    pub task: Task,
    #[serde(default)]
    pub numeric: Vec<String>,
    #[serde(default)]
    pub categorical: Vec<String>,
    pub sensitive: SensitiveColumn,
    pub target: TargetColumn,
    #[serde(default)]
    pub standardize: bool,
    /// Cell values treated as missing; rows containing one are rejected.
    #[serde(default = "default_missing")]
    pub missing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitiveColumn {
    pub column: String,
    /// Raw value to group label. Empty means the column holds integers.
    #[serde(default)]
    pub labels: BTreeMap<String, i64>,
    /// Reject rows whose label is not in `labels` instead of failing.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub skip_unmapped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetColumn {
    pub column: String,
    /// Raw value to target. Empty means the column is numeric.
    #[serde(default)]
    pub labels: BTreeMap<String, f64>,
}

pub(crate) fn default_missing() -> Vec<String> {
    vec!["".into(), "?".into(), "NA".into()]
}

impl SchemaConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SchemaConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schema serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        let roles = self
            .numeric
            .iter()
            .chain(&self.categorical)
            .chain([&self.sensitive.column, &self.target.column]);
        for col in roles {
            if !seen.insert(col) {
                return Err(Error::Config(format!("column `{col}` has more than one role")));
            }
        }
        Ok(())
    }
}

/// Centering and scaling of the numeric columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub columns: Vec<usize>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Fits on `columns` of `x`. Constant columns keep scale 1.
    pub fn fit(x: &Array2<f64>, columns: &[usize]) -> Self {
        let n = x.nrows() as f64;
        let mut mean = Vec::with_capacity(columns.len());
        let mut scale = Vec::with_capacity(columns.len());
        for &c in columns {
            let col = x.column(c);
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            mean.push(m);
            scale.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Standardizer { columns: columns.to_vec(), mean, scale }
    }

    pub fn apply(&self, x: &mut Array2<f64>) {
        for (k, &c) in self.columns.iter().enumerate() {
            x.column_mut(c).mapv_inplace(|v| (v - self.mean[k]) / self.scale[k]);
        }
    }
}

/// What was learned from the training file: category levels and, when
/// requested, standardization statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub levels: BTreeMap<String, Vec<String>>,
    pub standardizer: Option<Standardizer>,
}

#[derive(Debug, Clone)]
pub struct LoadReport {
    pub dataset: Dataset,
    pub rejected_rows: usize,
    pub encoder: Encoder,
}

/// Reads a training CSV: categorical levels and standardization statistics
/// are fitted on this file.
pub fn load_csv(path: &Path, schema: &SchemaConfig) -> Result<LoadReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_csv_str(&text, schema, None)
}

/// Reads an evaluation CSV with an encoder fitted on the training file.
pub fn load_csv_with(path: &Path, schema: &SchemaConfig, encoder: &Encoder) -> Result<LoadReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_csv_str(&text, schema, Some(encoder))
}

pub fn load_csv_str(text: &str, schema: &SchemaConfig, encoder: Option<&Encoder>) -> Result<LoadReport> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &String| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.clone()))
    };
    let numeric_idx: Vec<usize> = schema.numeric.iter().map(find).collect::<Result<_>>()?;
    let cat_idx: Vec<usize> = schema.categorical.iter().map(find).collect::<Result<_>>()?;
    let s_idx = find(&schema.sensitive.column)?;
    let y_idx = find(&schema.target.column)?;

    // first pass: parse scalar columns and collect raw categories
    struct Raw {
        numeric: Vec<f64>,
        cats: Vec<String>,
        s: Group,
        y: f64,
    }
    let is_missing = |v: &str| schema.missing.iter().any(|m| m == v);
    let mut rows = Vec::new();
    let mut rejected = 0;
    for rec in reader.records() {
        let rec = rec?;
        let cell = |i: usize| rec.get(i).map(str::trim).unwrap_or("");
        let s_raw = cell(s_idx);
        let s = if schema.sensitive.labels.is_empty() {
            s_raw.parse::<Group>().map_err(|_| Error::ParseFailure(format!("sensitive label `{s_raw}`")))?
        } else {
            match schema.sensitive.labels.get(s_raw) {
                Some(&g) => Group(g),
                None if schema.sensitive.skip_unmapped => {
                    rejected += 1;
                    continue;
                }
                None => return Err(Error::ParseFailure(format!("unmapped sensitive label `{s_raw}`"))),
            }
        };
        let numeric: Option<Vec<f64>> = numeric_idx
            .iter()
            .map(|&i| cell(i).parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        let y_raw = cell(y_idx);
        let y = if schema.target.labels.is_empty() {
            y_raw.parse::<f64>().ok().filter(|v| v.is_finite())
        } else {
            schema.target.labels.get(y_raw).copied()
        };
        let cats: Vec<String> = cat_idx.iter().map(|&i| cell(i).to_string()).collect();
        match (numeric, y) {
            (Some(numeric), Some(y)) if !cats.iter().any(|c| is_missing(c)) => rows.push(Raw { numeric, cats, s, y }),
            _ => rejected += 1,
        }
    }

    let levels: BTreeMap<String, Vec<String>> = match encoder {
        Some(enc) => enc.levels.clone(),
        None => schema
            .categorical
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let set: BTreeSet<&str> = rows.iter().map(|r| r.cats[k].as_str()).collect();
                (name.clone(), set.into_iter().map(String::from).collect())
            })
            .collect(),
    };

    let mut columns = schema.numeric.clone();
    for name in &schema.categorical {
        // drop-first: the first level is the reference
        for level in levels.get(name).map(|l| &l[1.min(l.len())..]).unwrap_or(&[]) {
            columns.push(format!("{name}={level}"));
        }
    }
    let d = columns.len();
    let mut data = Vec::with_capacity(rows.len() * d);
    let mut s = Vec::with_capacity(rows.len());
    let mut y = Vec::with_capacity(rows.len());
    'rows: for r in &rows {
        let start = data.len();
        data.extend(&r.numeric);
        for (k, name) in schema.categorical.iter().enumerate() {
            let lv = levels.get(name).map(Vec::as_slice).unwrap_or(&[]);
            let Some(pos) = lv.iter().position(|l| *l == r.cats[k]) else {
                // level unseen in the training file
                data.truncate(start);
                rejected += 1;
                continue 'rows;
            };
            data.extend((1..lv.len()).map(|l| if l == pos { 1.0 } else { 0.0 }));
        }
        s.push(r.s);
        y.push(r.y);
    }
    let n = s.len();
    let mut x = Array2::from_shape_vec((n, d), data).expect("row width");
    let standardizer = match encoder {
        Some(enc) => enc.standardizer.clone(),
        None if schema.standardize => {
            if n == 0 {
                return Err(Error::Validation("no usable rows".into()));
            }
            Some(Standardizer::fit(&x, &(0..schema.numeric.len()).collect::<Vec<_>>()))
        }
        None => None,
    };
    if let Some(st) = &standardizer {
        st.apply(&mut x);
    }
    let dataset = Dataset::new(x, s, Array1::from(y), columns, schema.task)?;
    Ok(LoadReport {
        dataset,
        rejected_rows: rejected,
        encoder: Encoder { levels, standardizer },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn schema(numeric: &[&str], categorical: &[&str]) -> SchemaConfig {
        SchemaConfig {
            task: Task::Regression,
            numeric: numeric.iter().map(|s| s.to_string()).collect(),
            categorical: categorical.iter().map(|s| s.to_string()).collect(),
            sensitive: SensitiveColumn {
                column: "s".into(),
                labels: BTreeMap::new(),
                skip_unmapped: false,
            },
            target: TargetColumn {
                column: "y".into(),
                labels: BTreeMap::new(),
            },
            standardize: false,
            missing: default_missing(),
        }
    }

    #[test]
    fn numeric_columns() {
        let text = "a,b,s,y\n1,2,0,0.5\n3,4,1,1.5\n5,6,0,2.5\n";
        let r = load_csv_str(text, &schema(&["a", "b"], &[]), None).unwrap();
        assert_eq!(r.dataset.x(), &array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        assert_eq!(r.dataset.s(), &[Group(0), Group(1), Group(0)]);
        assert_eq!(r.rejected_rows, 0);
    }

    #[test]
    fn drop_first_one_hot() {
        let text = "c,s,y\nred,0,1\ngreen,1,2\nblue,0,3\nred,1,4\n";
        let r = load_csv_str(text, &schema(&[], &["c"]), None).unwrap();
        // levels sorted: blue (dropped), green, red
        assert_eq!(r.dataset.columns(), &["c=green", "c=red"]);
        assert_eq!(r.dataset.x(), &array![[0.0, 1.0], [1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn unmapped_sensitive_label() {
        let mut sc = schema(&["a"], &[]);
        sc.sensitive.labels = [("M".to_string(), 0), ("F".to_string(), 1)].into();
        let err = load_csv_str("a,s,y\n1,M,0\n2,X,1\n", &sc, None).unwrap_err();
        assert!(matches!(err, Error::ParseFailure(msg) if msg.contains("`X`")));
        sc.sensitive.skip_unmapped = true;
        let r = load_csv_str("a,s,y\n1,M,0\n2,X,1\n", &sc, None).unwrap();
        assert_eq!((r.dataset.n(), r.rejected_rows), (1, 1));
    }

    #[test]
    fn bad_rows_rejected_and_counted() {
        let text = "a,s,y\n1,0,0\nfoo,1,1\n?,0,1\n4,1,\n5,1,2\n";
        let r = load_csv_str(text, &schema(&["a"], &[]), None).unwrap();
        assert_eq!(r.dataset.n(), 2);
        assert_eq!(r.rejected_rows, 3);
    }

    #[test]
    fn missing_column() {
        let err = load_csv_str("a,s,y\n1,0,0\n", &schema(&["b"], &[]), None).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "b"));
    }

    #[test]
    fn roles_must_be_disjoint() {
        assert!(schema(&["s"], &[]).validate().is_err());
    }

    #[test]
    fn train_statistics_reused() {
        let mut sc = schema(&["a"], &["c"]);
        sc.standardize = true;
        let train = load_csv_str("a,c,s,y\n1,u,0,0\n3,v,1,0\n", &sc, None).unwrap();
        assert_eq!(train.dataset.x().column(0).to_vec(), vec![-1.0, 1.0]);
        let test = load_csv_str("a,c,s,y\n5,v,0,0\n2,w,1,0\n", &sc, Some(&train.encoder)).unwrap();
        // unseen level `w` is rejected
        assert_eq!(test.rejected_rows, 1);
        assert_eq!(test.dataset.x(), &array![[3.0, 1.0]]);
    }

    #[test]
    fn schema_toml_round_trip() {
        let mut sc = schema(&["a"], &["c"]);
        sc.target.labels = [(">50K".to_string(), 1.0), ("<=50K".to_string(), 0.0)].into();
        assert_eq!(SchemaConfig::from_toml(&sc.to_toml()).unwrap(), sc);
    }
}
