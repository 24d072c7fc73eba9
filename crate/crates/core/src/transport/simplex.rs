//! Network simplex for the transportation problem.
//!
//! The bipartite flow network has one node per source atom, one per target
//! atom and an artificial root. The starting basis routes every source to the
//! root and the root to every target, which is a strongly feasible spanning
//! tree. Entering arcs come from block-search pricing (first most negative
//! reduced cost in the block, scan order breaks ties); the leaving arc follows
//! the strongly-feasible-tree rule, which rules out cycling on degenerate
//! pivots.
//!
//! Costs are rescaled to `[-1, 1]` internally. Because the network is a
//! complete bipartite graph, routing a unit through the root can always be
//! replaced by a direct arc, so an artificial cost of 2 already keeps the
//! artificial arcs empty at the optimum and potentials stay small.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Reduced-cost threshold (in rescaled units) below which an arc may enter.
const PRICING_EPS: f64 = 1e-12;
const ART_COST: f64 = 2.0;
const NONE: usize = usize::MAX;

/// Optimal basic solution of a transportation problem.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    /// Basic arcs with positive flow, sorted by `(source, target)`.
    pub entries: Vec<(usize, usize, f64)>,
    /// Total cost in the units of the input cost matrix.
    pub cost: f64,
    /// Dual potentials of the sources and targets (original cost units):
    /// `cost[i][j] + src_potential[i] - tgt_potential[j] >= 0` at optimality.
    pub src_potential: Vec<f64>,
    pub tgt_potential: Vec<f64>,
    pub pivots: usize,
}

struct Network<'a> {
    n: usize,
    m: usize,
    cost: &'a Array2<f64>,
    scale: f64,
    in_tree: Vec<bool>,

    // spanning tree, indexed by node; the root is node n + m
    parent: Vec<usize>,
    pred: Vec<usize>,
    up: Vec<bool>,
    flow: Vec<f64>,
    depth: Vec<usize>,
    pi: Vec<f64>,
    first_child: Vec<usize>,
    next_sib: Vec<usize>,
    prev_sib: Vec<usize>,

    block: usize,
    next_arc: usize,
    stack: Vec<usize>,
    path_u: Vec<usize>,
    path_v: Vec<usize>,
}

impl<'a> Network<'a> {
    fn new(a: &[f64], b: &[f64], cost: &'a Array2<f64>) -> Self {
        let (n, m) = (a.len(), b.len());
        let nodes = n + m + 1;
        let root = n + m;
        let scale = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let arcs = n * m;

        let mut net = Network {
            n,
            m,
            cost,
            scale,
            in_tree: vec![false; arcs],
            parent: vec![NONE; nodes],
            pred: vec![NONE; nodes],
            up: vec![false; nodes],
            flow: vec![0.0; nodes],
            depth: vec![0; nodes],
            pi: vec![0.0; nodes],
            first_child: vec![NONE; nodes],
            next_sib: vec![NONE; nodes],
            prev_sib: vec![NONE; nodes],
            block: ((arcs as f64).sqrt() as usize).max(10),
            next_arc: 0,
            stack: Vec::new(),
            path_u: Vec::new(),
            path_v: Vec::new(),
        };
        for u in 0..n + m {
            net.parent[u] = root;
            net.pred[u] = arcs + u;
            net.depth[u] = 1;
            net.attach(u, root);
            if u < n {
                net.up[u] = true;
                net.flow[u] = a[u];
                net.pi[u] = 0.0;
            } else {
                net.up[u] = false;
                net.flow[u] = b[u - n];
                net.pi[u] = ART_COST;
            }
        }
        net
    }

    fn arcs(&self) -> usize {
        self.n * self.m
    }

    /// Endpoints of arc `e`. Real arcs run source -> target; artificial arc
    /// `arcs + u` runs u -> root for sources and root -> u for targets.
    fn endpoints(&self, e: usize) -> (usize, usize) {
        let arcs = self.arcs();
        if e < arcs {
            (e / self.m, self.n + e % self.m)
        } else {
            let u = e - arcs;
            let root = self.n + self.m;
            if u < self.n {
                (u, root)
            } else {
                (root, u)
            }
        }
    }

    fn arc_cost(&self, e: usize) -> f64 {
        let arcs = self.arcs();
        if e < arcs {
            self.cost[[e / self.m, e % self.m]] / self.scale
        } else if e - arcs < self.n {
            0.0
        } else {
            ART_COST
        }
    }

    fn attach(&mut self, child: usize, parent: usize) {
        let head = self.first_child[parent];
        self.next_sib[child] = head;
        self.prev_sib[child] = NONE;
        if head != NONE {
            self.prev_sib[head] = child;
        }
        self.first_child[parent] = child;
    }

    fn detach(&mut self, child: usize, parent: usize) {
        let (prev, next) = (self.prev_sib[child], self.next_sib[child]);
        if prev != NONE {
            self.next_sib[prev] = next;
        } else {
            self.first_child[parent] = next;
        }
        if next != NONE {
            self.prev_sib[next] = prev;
        }
        self.prev_sib[child] = NONE;
        self.next_sib[child] = NONE;
    }

    /// Block search over the real arcs.
    fn find_entering(&mut self) -> Option<usize> {
        let total = self.arcs();
        let mut best = -PRICING_EPS;
        let mut best_arc = None;
        let mut count = self.block;
        let mut e = self.next_arc;
        for _ in 0..total {
            if !self.in_tree[e] {
                let i = e / self.m;
                let j = e - i * self.m;
                let rc = self.cost[[i, j]] / self.scale + self.pi[i] - self.pi[self.n + j];
                if rc < best {
                    best = rc;
                    best_arc = Some(e);
                }
            }
            e += 1;
            if e == total {
                e = 0;
            }
            count -= 1;
            if count == 0 {
                if best_arc.is_some() {
                    break;
                }
                count = self.block;
            }
        }
        self.next_arc = e;
        best_arc
    }

    fn pivot(&mut self, entering: usize) {
        let (src, tgt) = self.endpoints(entering);

        // walk both endpoints up to the join node
        self.path_u.clear();
        self.path_v.clear();
        let (mut u, mut v) = (src, tgt);
        while self.depth[u] > self.depth[v] {
            self.path_u.push(u);
            u = self.parent[u];
        }
        while self.depth[v] > self.depth[u] {
            self.path_v.push(v);
            v = self.parent[v];
        }
        while u != v {
            self.path_u.push(u);
            self.path_v.push(v);
            u = self.parent[u];
            v = self.parent[v];
        }

        // Flow runs src -> tgt on the entering arc, up from tgt to the join
        // and down from the join to src. Strict comparison on the src side
        // and non-strict on the tgt side picks the last blocking arc met
        // when traversing the cycle from the join in flow direction.
        let mut delta = f64::INFINITY;
        let mut out = NONE;
        let mut out_on_src_side = true;
        for &w in &self.path_u {
            if self.up[w] {
                let d = self.flow[w].max(0.0);
                if d < delta {
                    delta = d;
                    out = w;
                    out_on_src_side = true;
                }
            }
        }
        for &w in &self.path_v {
            if !self.up[w] {
                let d = self.flow[w].max(0.0);
                if d <= delta {
                    delta = d;
                    out = w;
                    out_on_src_side = false;
                }
            }
        }
        debug_assert!(out != NONE, "uncapacitated transportation problem is bounded");

        if delta > 0.0 {
            for k in 0..self.path_u.len() {
                let w = self.path_u[k];
                self.flow[w] += if self.up[w] { -delta } else { delta };
            }
            for k in 0..self.path_v.len() {
                let w = self.path_v[k];
                self.flow[w] += if self.up[w] { delta } else { -delta };
            }
        }
        self.flow[out] = 0.0;
        let leaving = self.pred[out];
        if leaving < self.arcs() {
            self.in_tree[leaving] = false;
        }
        self.in_tree[entering] = true;

        let (u_in, v_in) = if out_on_src_side { (src, tgt) } else { (tgt, src) };

        // re-root the subtree of `out` at u_in, reversing the stem u_in..out
        self.stack.clear();
        let mut w = u_in;
        loop {
            self.stack.push(w);
            if w == out {
                break;
            }
            w = self.parent[w];
        }
        let stem = std::mem::take(&mut self.stack);
        for &node in &stem {
            let p = self.parent[node];
            self.detach(node, p);
        }
        // shift pred arcs one step down the stem, flipping orientation
        for k in (1..stem.len()).rev() {
            let (child, parent) = (stem[k], stem[k - 1]);
            self.pred[child] = self.pred[parent];
            self.up[child] = !self.up[parent];
            self.flow[child] = self.flow[parent];
            self.parent[child] = parent;
            self.attach(child, parent);
        }
        self.pred[u_in] = entering;
        self.up[u_in] = u_in == src;
        self.flow[u_in] = delta;
        self.parent[u_in] = v_in;
        self.attach(u_in, v_in);
        self.stack = stem;

        // shift potentials of the moved subtree so the entering arc has zero
        // reduced cost, and refresh depths
        let c = self.arc_cost(entering);
        let sigma = if self.up[u_in] {
            self.pi[v_in] - c - self.pi[u_in]
        } else {
            self.pi[v_in] + c - self.pi[u_in]
        };
        self.stack.clear();
        self.stack.push(u_in);
        while let Some(node) = self.stack.pop() {
            self.pi[node] += sigma;
            self.depth[node] = self.depth[self.parent[node]] + 1;
            let mut ch = self.first_child[node];
            while ch != NONE {
                self.stack.push(ch);
                ch = self.next_sib[ch];
            }
        }
    }

    /// Recomputes all potentials from the root along tree arcs.
    fn refresh_potentials(&mut self) {
        let root = self.n + self.m;
        self.pi[root] = 0.0;
        self.stack.clear();
        let mut ch = self.first_child[root];
        while ch != NONE {
            self.stack.push(ch);
            ch = self.next_sib[ch];
        }
        while let Some(node) = self.stack.pop() {
            let c = self.arc_cost(self.pred[node]);
            let p = self.parent[node];
            self.pi[node] = if self.up[node] { self.pi[p] - c } else { self.pi[p] + c };
            let mut ch = self.first_child[node];
            while ch != NONE {
                self.stack.push(ch);
                ch = self.next_sib[ch];
            }
        }
    }
}

/// Solves `min Σ cost[i][j] π(i,j)` over couplings with row sums `a` and
/// column sums `b`. Total masses must agree within `1e-9`.
pub fn solve_transport(a: &[f64], b: &[f64], cost: &Array2<f64>) -> Result<TransportSolution> {
    let (n, m) = (a.len(), b.len());
    if cost.dim() != (n, m) {
        return Err(Error::DimensionMismatch(format!(
            "cost matrix is {:?}, marginals are {n} and {m}",
            cost.dim()
        )));
    }
    if n == 0 || m == 0 {
        return Err(Error::InvalidDistribution("empty marginal".into()));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidDistribution("cost matrix has non-finite entries".into()));
    }
    if a.iter().chain(b).any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidDistribution("negative or non-finite mass".into()));
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if (sa - sb).abs() > 1e-9 {
        return Err(Error::InfeasibleWeights { src: sa, tgt: sb });
    }

    let mut net = Network::new(a, b, cost);
    let mut pivots = 0;
    loop {
        match net.find_entering() {
            Some(e) => {
                net.pivot(e);
                pivots += 1;
            }
            None => {
                // confirm optimality against freshly computed potentials
                net.refresh_potentials();
                match net.find_entering() {
                    Some(e) => {
                        net.pivot(e);
                        pivots += 1;
                    }
                    None => break,
                }
            }
        }
    }

    let arcs = net.arcs();
    let mut entries = Vec::with_capacity(n + m);
    for node in 0..n + m {
        let e = net.pred[node];
        if e < arcs && net.flow[node] > 0.0 {
            entries.push((e / m, e % m, net.flow[node]));
        }
    }
    entries.sort_by_key(|e| (e.0, e.1));
    let total = entries.iter().map(|&(i, j, f)| f * cost[[i, j]]).sum();
    let scale = net.scale;
    Ok(TransportSolution {
        entries,
        cost: total,
        src_potential: net.pi[..n].iter().map(|p| p * scale).collect(),
        tgt_potential: net.pi[n..n + m].iter().map(|p| p * scale).collect(),
        pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn check_feasible(sol: &TransportSolution, a: &[f64], b: &[f64]) {
        let mut rows = vec![0.0; a.len()];
        let mut cols = vec![0.0; b.len()];
        for &(i, j, f) in &sol.entries {
            assert!(f > 0.0);
            rows[i] += f;
            cols[j] += f;
        }
        for (r, w) in rows.iter().zip(a) {
            assert!((r - w).abs() <= 1e-9, "{rows:?} vs {a:?}");
        }
        for (c, w) in cols.iter().zip(b) {
            assert!((c - w).abs() <= 1e-9, "{cols:?} vs {b:?}");
        }
        assert!(sol.entries.len() < a.len() + b.len());
    }

    #[test]
    fn textbook_instance() {
        // classic 3x4 instance, optimum 435
        let a = [15.0, 25.0, 10.0];
        let b = [5.0, 15.0, 15.0, 15.0];
        let cost = array![[10.0, 2.0, 20.0, 11.0], [12.0, 7.0, 9.0, 20.0], [4.0, 14.0, 16.0, 18.0]];
        let sol = solve_transport(&a, &b, &cost).unwrap();
        check_feasible(&sol, &a, &b);
        assert!((sol.cost - 435.0).abs() < 1e-9, "{}", sol.cost);
    }

    #[test]
    fn dual_certificate() {
        let a = [0.2, 0.3, 0.5];
        let b = [0.4, 0.1, 0.25, 0.25];
        let cost = array![[3.0, 1.0, 7.0, 4.0], [2.0, 6.0, 5.0, 9.0], [8.0, 3.0, 3.0, 2.0]];
        let sol = solve_transport(&a, &b, &cost).unwrap();
        check_feasible(&sol, &a, &b);
        assert!((sol.cost - 2.25).abs() < 1e-12);
        for i in 0..3 {
            for j in 0..4 {
                let rc = cost[[i, j]] + sol.src_potential[i] - sol.tgt_potential[j];
                assert!(rc >= -1e-9, "rc({i},{j}) = {rc}");
            }
        }
        // complementary slackness on the support
        for &(i, j, _) in &sol.entries {
            let rc = cost[[i, j]] + sol.src_potential[i] - sol.tgt_potential[j];
            assert!(rc.abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_unbalanced() {
        let cost = Array2::zeros((1, 1));
        assert!(matches!(
            solve_transport(&[1.0], &[0.5], &cost),
            Err(Error::InfeasibleWeights { .. })
        ));
    }

    #[test]
    fn zero_mass_atoms() {
        let a = [0.0, 1.0];
        let b = [0.5, 0.5, 0.0];
        let cost = array![[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]];
        let sol = solve_transport(&a, &b, &cost).unwrap();
        check_feasible(&sol, &a, &b);
        assert!((sol.cost - 1.5).abs() < 1e-12);
    }
}
