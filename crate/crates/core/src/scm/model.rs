use std::collections::{BTreeSet, HashMap};

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::expr::{Expr, Var};
use super::noise::{JointGaussian, NoiseSpec};
use crate::error::{Error, Result};
use crate::rng;

/// Relative tolerance for re-substitution checks.
pub const RESIDUAL_TOL: f64 = 1e-12;

/// Serializable description of an acyclic structural causal model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmConfig {
    pub exogenous: Vec<ExogenousConfig>,
    #[serde(rename = "node")]
    pub nodes: Vec<NodeConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub joint_gaussian: Vec<JointGaussian>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExogenousConfig {
    pub name: String,
    pub dist: NoiseSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeConfig {
    pub name: String,
    /// Endogenous parents.
    #[serde(default)]
    pub parents: Vec<String>,
    /// Exogenous parents.
    #[serde(default)]
    pub exogenous: Vec<String>,
    pub mechanism: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub endo_parents: Vec<usize>,
    pub exo_parents: Vec<usize>,
    pub mechanism: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exogenous {
    pub name: String,
    pub dist: NoiseSpec,
}

#[derive(Debug, Clone, PartialEq)]
struct JointBlock {
    members: Vec<usize>,
    mean: Vec<f64>,
    chol: Vec<Vec<f64>>,
    spec: JointGaussian,
}

/// A do-intervention: replace the mechanism of `target` by the constant `value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoIntervention {
    pub target: String,
    pub value: f64,
}

/// An acyclic structural causal model.
///
/// Immutable once built; acyclicity and parent declarations are checked at
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Scm {
    nodes: Vec<Node>,
    exogenous: Vec<Exogenous>,
    joint: Vec<JointBlock>,
    order: Vec<usize>,
}

/// Kahn's algorithm over endogenous parent lists. Ties are broken by the
/// lowest node index so the order is deterministic.
pub fn topological_order(parents: &[Vec<usize>]) -> Result<Vec<usize>> {
    let n = parents.len();
    let mut indegree = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for (k, ps) in parents.iter().enumerate() {
        for &p in ps {
            if p >= n {
                return Err(Error::UnknownNode(format!("#{p}")));
            }
            indegree[k] += 1;
            children[p].push(k);
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&k| indegree[k] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(k) = ready.pop_first() {
        order.push(k);
        for &c in &children[k] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() != n {
        let stuck: Vec<String> = (0..n).filter(|&k| indegree[k] > 0).map(|k| format!("#{k}")).collect();
        return Err(Error::CycleDetected(stuck.join(", ")));
    }
    Ok(order)
}

impl Scm {
    pub fn from_config(config: &ScmConfig) -> Result<Self> {
        let mut exo_index = HashMap::new();
        let mut exogenous = Vec::with_capacity(config.exogenous.len());
        for (k, e) in config.exogenous.iter().enumerate() {
            e.dist.validate()?;
            if exo_index.insert(e.name.clone(), k).is_some() {
                return Err(Error::Config(format!("duplicate exogenous variable `{}`", e.name)));
            }
            exogenous.push(Exogenous {
                name: e.name.clone(),
                dist: e.dist.clone(),
            });
        }
        let mut endo_index = HashMap::new();
        for (k, n) in config.nodes.iter().enumerate() {
            if exo_index.contains_key(&n.name) || endo_index.insert(n.name.clone(), k).is_some() {
                return Err(Error::Config(format!("duplicate variable name `{}`", n.name)));
            }
        }

        let mut nodes = Vec::with_capacity(config.nodes.len());
        for n in &config.nodes {
            let endo_parents = n
                .parents
                .iter()
                .map(|p| endo_index.get(p).copied().ok_or_else(|| Error::UnknownNode(p.clone())))
                .collect::<Result<Vec<_>>>()?;
            let exo_parents = n
                .exogenous
                .iter()
                .map(|p| exo_index.get(p).copied().ok_or_else(|| Error::UnknownNode(p.clone())))
                .collect::<Result<Vec<_>>>()?;
            let mechanism = Expr::parse(&n.mechanism)?.resolve(&|name: &str| {
                if let Some(&k) = endo_index.get(name) {
                    endo_parents.contains(&k).then_some(Var::Endogenous(k))
                } else if let Some(&k) = exo_index.get(name) {
                    exo_parents.contains(&k).then_some(Var::Exogenous(k))
                } else {
                    None
                }
            })
            .map_err(|e| match e {
                Error::UnknownNode(name) => Error::Config(format!(
                    "mechanism of `{}` references `{name}`, which is not a declared parent",
                    n.name
                )),
                other => other,
            })?;
            nodes.push(Node {
                name: n.name.clone(),
                endo_parents,
                exo_parents,
                mechanism,
            });
        }

        let mut joint = Vec::new();
        let mut claimed = BTreeSet::new();
        for block in &config.joint_gaussian {
            let chol = block.cholesky()?;
            let members = block
                .members
                .iter()
                .map(|m| exo_index.get(m).copied().ok_or_else(|| Error::UnknownNode(m.clone())))
                .collect::<Result<Vec<_>>>()?;
            for &m in &members {
                if !claimed.insert(m) {
                    return Err(Error::Config(format!(
                        "exogenous variable `{}` belongs to two joint blocks",
                        exogenous[m].name
                    )));
                }
            }
            joint.push(JointBlock {
                members,
                mean: block.mean.clone(),
                chol,
                spec: block.clone(),
            });
        }

        let parents: Vec<Vec<usize>> = nodes.iter().map(|n| n.endo_parents.clone()).collect();
        let order = topological_order(&parents).map_err(|e| match e {
            Error::CycleDetected(_) => {
                let names: Vec<&str> = nodes.iter().map(|n| n.name.as_str()).collect();
                Error::CycleDetected(names.join(", "))
            }
            other => other,
        })?;
        Ok(Scm {
            nodes,
            exogenous,
            joint,
            order,
        })
    }

    /// Back to the serializable form.
    pub fn to_config(&self) -> ScmConfig {
        let endo_names = self.node_names();
        let exo_names: Vec<String> = self.exogenous.iter().map(|e| e.name.clone()).collect();
        ScmConfig {
            exogenous: self
                .exogenous
                .iter()
                .map(|e| ExogenousConfig {
                    name: e.name.clone(),
                    dist: e.dist.clone(),
                })
                .collect(),
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeConfig {
                    name: n.name.clone(),
                    parents: n.endo_parents.iter().map(|&p| endo_names[p].clone()).collect(),
                    exogenous: n.exo_parents.iter().map(|&p| exo_names[p].clone()).collect(),
                    mechanism: n.mechanism.render(&endo_names, &exo_names),
                })
                .collect(),
            joint_gaussian: self.joint.iter().map(|b| b.spec.clone()).collect(),
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn exogenous(&self) -> &[Exogenous] {
        &self.exogenous
    }

    pub fn node_names(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.name.clone()).collect()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    /// Node names in a valid evaluation order.
    pub fn topological_order(&self) -> Vec<&str> {
        self.order.iter().map(|&k| self.nodes[k].name.as_str()).collect()
    }

    /// Endogenous values for one exogenous draw, in declaration order.
    pub fn solve(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.exogenous.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} exogenous values, got {}",
                self.exogenous.len(),
                u.len()
            )));
        }
        let mut v = vec![0.0; self.nodes.len()];
        self.solve_into(u, &mut v);
        Ok(v)
    }

    fn solve_into(&self, u: &[f64], v: &mut [f64]) {
        for &k in &self.order {
            v[k] = self.nodes[k].mechanism.eval(v, u);
        }
    }

    /// Relative re-substitution residual of each structural equation.
    pub fn residuals(&self, v: &[f64], u: &[f64]) -> Vec<f64> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(k, node)| {
                let rhs = node.mechanism.eval(v, u);
                (v[k] - rhs).abs() / rhs.abs().max(1.0)
            })
            .collect()
    }

    /// The intervened model: `target` gets a constant mechanism and loses its
    /// parents; everything else is untouched.
    pub fn intervene(&self, intervention: &DoIntervention) -> Result<Scm> {
        let k = self
            .node_index(&intervention.target)
            .ok_or_else(|| Error::UnknownNode(intervention.target.clone()))?;
        let mut out = self.clone();
        out.nodes[k].mechanism = Expr::Const(intervention.value);
        out.nodes[k].endo_parents.clear();
        out.nodes[k].exo_parents.clear();
        let parents: Vec<Vec<usize>> = out.nodes.iter().map(|n| n.endo_parents.clone()).collect();
        out.order = topological_order(&parents)?;
        Ok(out)
    }

    /// Indices of all strict descendants of node `k`.
    pub fn descendants(&self, k: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut stack = vec![k];
        while let Some(cur) = stack.pop() {
            for (c, node) in self.nodes.iter().enumerate() {
                if node.endo_parents.contains(&cur) && out.insert(c) {
                    stack.push(c);
                }
            }
        }
        out
    }

    /// Draws one exogenous vector.
    pub fn sample_exogenous<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut u = vec![0.0; self.exogenous.len()];
        let in_block: BTreeSet<usize> = self.joint.iter().flat_map(|b| b.members.iter().copied()).collect();
        for (k, e) in self.exogenous.iter().enumerate() {
            if !in_block.contains(&k) {
                u[k] = e.dist.sample(rng);
            }
        }
        for block in &self.joint {
            let z: Vec<f64> = block.members.iter().map(|_| rng.sample(StandardNormal)).collect();
            for (r, &m) in block.members.iter().enumerate() {
                let corr: f64 = (0..=r).map(|c| block.chol[r][c] * z[c]).sum();
                u[m] = block.mean[r] + corr;
            }
        }
        u
    }

    /// `n` i.i.d. solutions, one row per draw, columns in node order.
    /// Chunks are seeded by `(seed, chunk index)`, so the result is the
    /// same whatever the thread count.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Array2<f64>> {
        if n == 0 {
            return Err(Error::Config("sample size must be at least 1".into()));
        }
        let width = self.nodes.len();
        let chunks: Vec<Vec<f64>> = (0..n.div_ceil(rng::CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut r = rng::chunk_rng(seed, c);
                let rows = rng::CHUNK.min(n - c * rng::CHUNK);
                let mut buf = vec![0.0; rows * width];
                for row in buf.chunks_mut(width) {
                    let u = self.sample_exogenous(&mut r);
                    self.solve_into(&u, row);
                }
                buf
            })
            .collect();
        let flat: Vec<f64> = chunks.into_iter().flatten().collect();
        Ok(Array2::from_shape_vec((n, width), flat).expect("shape"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn example_one() -> ScmConfig {
        let exo = |name: &str| ExogenousConfig {
            name: name.into(),
            dist: NoiseSpec::Gaussian { mean: 0.0, sd: 1.0 },
        };
        let node = |name: &str, parents: &[&str], exogenous: &[&str], mechanism: &str| NodeConfig {
            name: name.into(),
            parents: parents.iter().map(|s| s.to_string()).collect(),
            exogenous: exogenous.iter().map(|s| s.to_string()).collect(),
            mechanism: mechanism.into(),
        };
        ScmConfig {
            exogenous: vec![exo("U1"), exo("U2"), exo("U3")],
            nodes: vec![
                node("V1", &[], &["U1"], "U1"),
                node("V2", &["V1"], &["U2"], "V1 + U2"),
                node("V3", &["V1", "V2"], &["U3"], "V1 + V2 + U3"),
            ],
            joint_gaussian: vec![],
        }
    }

    #[test]
    fn order_of_example_graph() {
        let scm = Scm::from_config(&example_one()).unwrap();
        assert_eq!(scm.topological_order(), vec!["V1", "V2", "V3"]);
    }

    #[test]
    fn order_respects_parents_declared_out_of_order() {
        let mut cfg = example_one();
        cfg.nodes.reverse();
        let scm = Scm::from_config(&cfg).unwrap();
        assert_eq!(scm.topological_order(), vec!["V1", "V2", "V3"]);
    }

    #[test]
    fn singleton_and_cycle() {
        assert_eq!(topological_order(&[vec![]]).unwrap(), vec![0]);
        assert!(matches!(topological_order(&[vec![1], vec![0]]), Err(Error::CycleDetected(_))));

        let mut cfg = example_one();
        cfg.nodes[0].parents = vec!["V2".into()];
        cfg.nodes[0].mechanism = "U1 + V2".into();
        assert!(matches!(Scm::from_config(&cfg), Err(Error::CycleDetected(_))));
    }

    #[test]
    fn solve_example_one() {
        let scm = Scm::from_config(&example_one()).unwrap();
        assert_eq!(scm.solve(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 3.0, 7.0]);
        assert_eq!(scm.solve(&[0.0, 0.0, 0.0]).unwrap(), vec![0.0, 0.0, 0.0]);
        assert!(matches!(scm.solve(&[1.0]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn intervention_example_two() {
        let scm = Scm::from_config(&example_one()).unwrap();
        let cut = scm
            .intervene(&DoIntervention {
                target: "V2".into(),
                value: 0.0,
            })
            .unwrap();
        assert_eq!(cut.solve(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 0.0, 4.0]);
        // the original is untouched
        assert_eq!(scm.solve(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 3.0, 7.0]);
        assert!(matches!(
            scm.intervene(&DoIntervention {
                target: "V9".into(),
                value: 0.0
            }),
            Err(Error::UnknownNode(_))
        ));
    }

    #[test]
    fn intervention_on_root() {
        let scm = Scm::from_config(&example_one()).unwrap();
        let cut = scm
            .intervene(&DoIntervention {
                target: "V1".into(),
                value: 2.5,
            })
            .unwrap();
        let v = cut.solve(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(v, vec![2.5, 4.5, 10.0]);
    }

    #[test]
    fn undeclared_reference_rejected() {
        let mut cfg = example_one();
        cfg.nodes[1].mechanism = "V1 + U2 + U3".into();
        assert!(matches!(Scm::from_config(&cfg), Err(Error::Config(_))));
        let mut cfg = example_one();
        cfg.nodes[1].parents.push("V7".into());
        assert!(matches!(Scm::from_config(&cfg), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn sampling_is_seeded() {
        let scm = Scm::from_config(&example_one()).unwrap();
        let a = scm.sample(5, 11).unwrap();
        let b = scm.sample(5, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, scm.sample(5, 12).unwrap());
        assert!(scm.sample(0, 1).is_err());
    }

    #[test]
    fn sampling_crosses_chunks_consistently() {
        let scm = Scm::from_config(&example_one()).unwrap();
        let big = scm.sample(rng::CHUNK + 10, 3).unwrap();
        let small = scm.sample(10, 3).unwrap();
        assert_eq!(big.slice(ndarray::s![..10, ..]), small);
    }

    #[test]
    fn solutions_resubstitute() {
        let scm = Scm::from_config(&example_one()).unwrap();
        let mut r = rng::seeded(9);
        for _ in 0..100 {
            let u = scm.sample_exogenous(&mut r);
            let v = scm.solve(&u).unwrap();
            assert!(scm.residuals(&v, &u).iter().all(|&e| e <= RESIDUAL_TOL));
        }
    }

    #[test]
    fn joint_block_correlation() {
        let mut cfg = example_one();
        cfg.joint_gaussian.push(JointGaussian {
            members: vec!["U1".into(), "U2".into()],
            mean: vec![0.0, 0.0],
            cov: vec![vec![1.0, 0.8], vec![0.8, 1.0]],
        });
        let scm = Scm::from_config(&cfg).unwrap();
        let mut r = rng::seeded(5);
        let n = 20_000;
        let mut cross = 0.0;
        for _ in 0..n {
            let u = scm.sample_exogenous(&mut r);
            cross += u[0] * u[1];
        }
        assert!((cross / n as f64 - 0.8).abs() < 0.05);
    }

    #[test]
    fn config_round_trip_through_toml() {
        let scm = Scm::from_config(&example_one()).unwrap();
        let text = toml::to_string(&scm.to_config()).unwrap();
        let back: ScmConfig = toml::from_str(&text).unwrap();
        assert_eq!(Scm::from_config(&back).unwrap(), scm);
    }
}
