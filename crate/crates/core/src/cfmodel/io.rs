use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CounterfactualModel, GroupedData, ModelKind};
use crate::data::dataset::fmt_f64;
use crate::error::{Error, Result};
use crate::group::Group;
use crate::transport::{Coupling, DiscreteDistribution};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRef {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEntry {
    pub label: Group,
    pub atoms: usize,
    pub share: f64,
    #[serde(flatten)]
    pub points: FileRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub s: Group,
    pub s_prime: Group,
    #[serde(flatten)]
    pub coupling: FileRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<FileRef>,
}

/// Index of a saved model directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub kind: ModelKind,
    pub dim: usize,
    pub groups: Vec<GroupEntry>,
    pub couplings: Vec<PairEntry>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<FileRef> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(FileRef {
        file: name.to_string(),
        sha256: sha256_hex(text.as_bytes()),
    })
}

fn read_file(dir: &Path, r: &FileRef) -> Result<String> {
    let path = dir.join(&r.file);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    if sha256_hex(text.as_bytes()) != r.sha256 {
        return Err(Error::Validation(format!("checksum mismatch for {}", path.display())));
    }
    Ok(text)
}

fn points_csv(points: &Array2<f64>, weights: Option<&Array1<f64>>) -> String {
    let mut header: Vec<String> = (1..=points.ncols()).map(|k| format!("x{k}")).collect();
    if weights.is_some() {
        header.push("weight".into());
    }
    let mut out = header.join(",");
    out.push('\n');
    for (i, row) in points.rows().into_iter().enumerate() {
        let mut cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        if let Some(w) = weights {
            cells.push(fmt_f64(w[i]));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn parse_points(text: &str, dim: usize, with_weights: bool) -> Result<(Array2<f64>, Vec<f64>)> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let width = dim + usize::from(with_weights);
    let mut data = Vec::new();
    let mut weights = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.len() != width {
            return Err(Error::ParseFailure(format!("point row has {} fields, expected {width}", rec.len())));
        }
        let vals: Vec<f64> = rec
            .iter()
            .map(|c| c.trim().parse::<f64>().map_err(|_| Error::ParseFailure(format!("bad number `{c}`"))))
            .collect::<Result<_>>()?;
        data.extend_from_slice(&vals[..dim]);
        if with_weights {
            weights.push(vals[dim]);
        }
    }
    let n = data.len() / dim.max(1);
    let pts = Array2::from_shape_vec((n, dim), data).map_err(|e| Error::ParseFailure(e.to_string()))?;
    Ok((pts, weights))
}

/// Writes one file per group, one coupling file per ordered pair (plus the
/// mapped targets where present) and a manifest with SHA-256 checksums.
pub fn save_model(model: &CounterfactualModel, dir: &Path) -> Result<ModelManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let data = model.data();
    let mut groups = Vec::new();
    for (&g, mu) in data.groups() {
        let points = write_file(dir, &format!("group_{g}.csv"), &points_csv(mu.points(), Some(mu.weights())))?;
        groups.push(GroupEntry {
            label: g,
            atoms: mu.len(),
            share: data.share(g)?,
            points,
        });
    }
    let mut couplings = Vec::new();
    for (&(s, t), c) in model.couplings() {
        let coupling = write_file(dir, &format!("coupling_{s}_{t}.txt"), &c.to_text())?;
        let targets = match model.mapped_targets().get(&(s, t)) {
            Some(pts) => Some(write_file(dir, &format!("targets_{s}_{t}.csv"), &points_csv(pts, None))?),
            None => None,
        };
        couplings.push(PairEntry {
            s,
            s_prime: t,
            coupling,
            targets,
        });
    }
    let manifest = ModelManifest {
        kind: model.kind(),
        dim: data.dim(),
        groups,
        couplings,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let path = dir.join(MANIFEST);
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Reads a directory written by [`save_model`], verifying checksums.
pub fn load_model(dir: &Path) -> Result<CounterfactualModel> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: ModelManifest =
        serde_json::from_str(&text).map_err(|e| Error::ParseFailure(format!("{}: {e}", path.display())))?;
    let mut groups = BTreeMap::new();
    let mut shares = BTreeMap::new();
    for g in &manifest.groups {
        let (pts, w) = parse_points(&read_file(dir, &g.points)?, manifest.dim, true)?;
        if pts.nrows() != g.atoms {
            return Err(Error::Validation(format!("group {} has {} atoms, manifest says {}", g.label, pts.nrows(), g.atoms)));
        }
        groups.insert(g.label, DiscreteDistribution::new(pts, Array1::from(w))?);
        shares.insert(g.label, g.share);
    }
    let data = GroupedData::new(groups, shares)?;
    let mut couplings = BTreeMap::new();
    let mut targets = BTreeMap::new();
    for p in &manifest.couplings {
        let src = data.group(p.s)?.weights().to_vec();
        let tgt = match &p.targets {
            Some(r) => {
                let (pts, _) = parse_points(&read_file(dir, r)?, manifest.dim, false)?;
                targets.insert((p.s, p.s_prime), pts);
                src.clone()
            }
            None => data.group(p.s_prime)?.weights().to_vec(),
        };
        let c = Coupling::from_text_with_marginals(&read_file(dir, &p.coupling)?, src, tgt)?;
        couplings.insert((p.s, p.s_prime), c);
    }
    CounterfactualModel::new(manifest.kind, data, couplings, targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfmodel::{build_ot_model, build_scm_model};
    use crate::scm::{LinearAdditiveScm, NoiseSpec};
    use ndarray::array;

    fn data() -> GroupedData {
        let groups = BTreeMap::from([
            (Group(0), DiscreteDistribution::uniform(array![[0.1, 0.2], [1.0 / 3.0, -4.0]]).unwrap()),
            (Group(1), DiscreteDistribution::uniform(array![[5.0, 1e-300], [2.0, 2.0], [0.7, 9.0]]).unwrap()),
        ]);
        let shares = BTreeMap::from([(Group(0), 0.4), (Group(1), 0.6)]);
        GroupedData::new(groups, shares).unwrap()
    }

    #[test]
    fn ot_model_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = build_ot_model(&data()).unwrap();
        save_model(&m, dir.path()).unwrap();
        assert_eq!(load_model(dir.path()).unwrap(), m);
    }

    #[test]
    fn scm_model_round_trip() {
        let scm = LinearAdditiveScm::new(
            array![[0.0, 0.0], [0.5, 0.0]],
            array![1.0, 1.0],
            array![0.0, 0.0],
            vec![NoiseSpec::Gaussian { mean: 0.0, sd: 1.0 }; 2],
            NoiseSpec::Bernoulli { p: 0.5 },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let m = build_scm_model(&scm, &data()).unwrap();
        save_model(&m, dir.path()).unwrap();
        assert_eq!(load_model(dir.path()).unwrap(), m);
    }

    #[test]
    fn tampering_detected() {
        let dir = tempfile::tempdir().unwrap();
        let m = build_ot_model(&data()).unwrap();
        save_model(&m, dir.path()).unwrap();
        let f = dir.path().join("coupling_0_1.txt");
        let text = fs::read_to_string(&f).unwrap();
        fs::write(&f, text.replace("0,", "1,")).unwrap();
        assert!(matches!(load_model(dir.path()), Err(Error::Validation(_))));
    }
}
