//! Partitions, solutions and canonical solutions, with cost evaluation and
//! the friendship and large-cluster diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{distances_from, max_flow, vertices_within, Edge, Graph};
use crate::instance::Instance;
use crate::metric::{check_terminal_preservation, SemiMetric};
use crate::{par, EPS};

/// A partition of `0..n` into `cluster_count` nonempty clusters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    assignment: Vec<usize>,
    cluster_count: usize,
}

impl Partition {
    /// Cluster ids must be dense: every id below the maximum is used.
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        let cluster_count = assignment.iter().map(|&c| c + 1).max().unwrap_or(0);
        let mut used = vec![false; cluster_count];
        for &c in &assignment {
            used[c] = true;
        }
        if let Some(c) = used.iter().position(|&u| !u) {
            return Err(Error::InvalidSolution(format!("cluster {c} is empty")));
        }
        Ok(Partition { assignment, cluster_count })
    }

    /// Renumbers arbitrary labels densely in order of first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let assignment = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Partition {
            assignment,
            cluster_count: map.len(),
        }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            assignment: (0..n).collect(),
            cluster_count: n,
        }
    }

    #[inline]
    pub fn cluster_of(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.cluster_count];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cluster_count];
        for (v, &c) in self.assignment.iter().enumerate() {
            out[c].push(v);
        }
        out
    }

    /// Cluster of each terminal, failing if two terminals share one.
    pub fn terminal_clusters(&self, inst: &Instance) -> Result<Vec<usize>> {
        if self.n() != inst.n() {
            return Err(Error::DimensionMismatch {
                expected: inst.n(),
                found: self.n(),
            });
        }
        let mut owner = vec![usize::MAX; self.cluster_count];
        let mut out = Vec::with_capacity(inst.k());
        for (i, &t) in inst.terminals.iter().enumerate() {
            let c = self.assignment[t];
            if owner[c] != usize::MAX {
                return Err(Error::TerminalsMerged {
                    first: owner[c],
                    second: i,
                    cluster: c,
                });
            }
            owner[c] = i;
            out.push(c);
        }
        Ok(out)
    }
}

/// `Σ_e c(e) · δ(F(u), F(v))` over the edges of `g`.
fn edge_sum(edges: &[Edge], partition: &Partition, delta: impl Fn(usize, usize) -> f64) -> f64 {
    edges
        .iter()
        .map(|e| {
            let (a, b) = (partition.cluster_of(e.u), partition.cluster_of(e.v));
            if a == b {
                0.0
            } else {
                e.capacity * delta(a, b)
            }
        })
        .sum()
}

/// A partition together with a semi-metric on its clusters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub partition: Partition,
    pub delta: SemiMetric,
}

impl Solution {
    /// Checks sizes, terminal separation and terminal preservation.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        if self.delta.size() != self.partition.cluster_count() {
            return Err(Error::InvalidSolution(format!(
                "delta has size {} for {} clusters",
                self.delta.size(),
                self.partition.cluster_count()
            )));
        }
        let tc = self.partition.terminal_clusters(inst)?;
        if !check_terminal_preservation(&self.delta, &tc, &inst.terminal_metric)? {
            return Err(Error::InvalidSolution("terminal distances are not preserved".into()));
        }
        Ok(())
    }

    /// `vol(F, δ) = Σ_{(u,v) ∈ E(G)} c(u,v) · δ(F(u), F(v))`.
    pub fn cost(&self, inst: &Instance) -> Result<f64> {
        self.validate(inst)?;
        Ok(edge_sum(inst.graph.edges(), &self.partition, |a, b| self.delta.get(a, b)))
    }
}

/// A partition whose clusters carry distinct center vertices; the cluster of
/// a terminal is centered at that terminal. Cluster distances are graph
/// distances between centers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalSolution {
    pub partition: Partition,
    pub centers: Vec<usize>,
}

impl CanonicalSolution {
    pub fn new(partition: Partition, centers: Vec<usize>, inst: &Instance) -> Result<Self> {
        let cs = CanonicalSolution { partition, centers };
        cs.validate(inst)?;
        Ok(cs)
    }

    /// Clusters are the fibres of `map`; each is centered at its image.
    /// Terminals must be fixed points. Clusters are numbered by center id.
    pub fn from_vertex_map(map: &[usize], inst: &Instance) -> Result<Self> {
        if map.len() != inst.n() {
            return Err(Error::DimensionMismatch {
                expected: inst.n(),
                found: map.len(),
            });
        }
        let mut centers: Vec<usize> = map.to_vec();
        centers.sort_unstable();
        centers.dedup();
        let mut slot = vec![usize::MAX; inst.n()];
        for (c, &v) in centers.iter().enumerate() {
            inst.graph.check_vertex(v)?;
            slot[v] = c;
        }
        let assignment = map.iter().map(|&v| slot[v]).collect();
        CanonicalSolution::new(Partition::new(assignment)?, centers, inst)
    }

    pub fn validate(&self, inst: &Instance) -> Result<()> {
        let count = self.partition.cluster_count();
        if self.centers.len() != count {
            return Err(Error::InvalidSolution(format!(
                "{} centers for {count} clusters",
                self.centers.len()
            )));
        }
        let mut seen = vec![false; inst.n()];
        for &c in &self.centers {
            inst.graph.check_vertex(c)?;
            if seen[c] {
                return Err(Error::InvalidSolution(format!("vertex {c} centers two clusters")));
            }
            seen[c] = true;
        }
        let tc = self.partition.terminal_clusters(inst)?;
        for (i, &c) in tc.iter().enumerate() {
            if self.centers[c] != inst.terminals[i] {
                return Err(Error::InvalidSolution(format!(
                    "cluster {c} holds terminal {} but is centered at {}",
                    inst.terminals[i], self.centers[c]
                )));
            }
        }
        Ok(())
    }

    /// Distance rows in `G` from each center.
    pub fn center_rows(&self, inst: &Instance) -> Vec<Vec<f64>> {
        par::map_slice(&self.centers, |&c| distances_from(&inst.graph, c))
    }

    /// `δ(F, F') = dist_G(v(F), v(F'))`.
    pub fn canonical_delta(&self, inst: &Instance) -> SemiMetric {
        SemiMetric::restrict_rows(&self.center_rows(inst), &self.centers)
    }

    pub fn to_solution(&self, inst: &Instance) -> Solution {
        Solution {
            partition: self.partition.clone(),
            delta: self.canonical_delta(inst),
        }
    }

    /// Cost with `δ` given by center distances in `G`.
    pub fn cost(&self, inst: &Instance) -> Result<f64> {
        self.validate(inst)?;
        Ok(canonical_cost_unchecked(inst, &self.partition, &self.centers))
    }
}

/// Cost of assigning vertices to `centers` with `δ` the graph distance
/// between centers, without checking canonicity. Only centers touched by a
/// cut edge are expanded.
pub fn canonical_cost_unchecked(inst: &Instance, partition: &Partition, centers: &[usize]) -> f64 {
    let g = &inst.graph;
    let mut needed = vec![false; centers.len()];
    for e in g.edges() {
        let (a, b) = (partition.cluster_of(e.u), partition.cluster_of(e.v));
        if a != b {
            needed[a.min(b)] = true;
        }
    }
    let sources: Vec<usize> = (0..centers.len()).filter(|&c| needed[c]).collect();
    let rows = par::map_slice(&sources, |&c| distances_from(g, centers[c]));
    let mut row_of = vec![usize::MAX; centers.len()];
    for (i, &c) in sources.iter().enumerate() {
        row_of[c] = i;
    }
    edge_sum(g.edges(), partition, |a, b| {
        let (lo, hi) = (a.min(b), a.max(b));
        rows[row_of[lo]][centers[hi]]
    })
}

/// For each cluster, the other clusters whose centers lie within `radius`
/// of its center in `G'`. Lists are sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Friendship {
    pub friends: Vec<Vec<usize>>,
}

impl Friendship {
    pub fn are_friends(&self, a: usize, b: usize) -> bool {
        a != b && self.friends[a].binary_search(&b).is_ok()
    }

    /// Number of unordered friend pairs.
    pub fn pair_count(&self) -> usize {
        self.friends.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Friendship of clusters with the given centers in `raw`.
pub fn friendship_by_centers(raw: &Graph, centers: &[usize], radius: f64) -> Friendship {
    let mut cluster_at = vec![usize::MAX; raw.n()];
    for (c, &v) in centers.iter().enumerate() {
        cluster_at[v] = c;
    }
    let friends = par::map_range(centers.len(), |c| {
        let mut near: Vec<usize> = vertices_within(raw, centers[c], radius)
            .into_iter()
            .map(|(v, _)| cluster_at[v])
            .filter(|&f| f != usize::MAX && f != c)
            .collect();
        near.sort_unstable();
        near.dedup();
        near
    });
    Friendship { friends }
}

/// `F ∼ F'` iff `dist_{G'}(v(F), v(F')) ≤ radius`.
pub fn friendship(cs: &CanonicalSolution, inst: &Instance, radius: f64) -> Friendship {
    friendship_by_centers(&inst.raw_graph, &cs.centers, radius)
}

/// Edges of `raw` whose endpoints lie in distinct clusters that are not
/// friends. `assignment` maps vertices to indices of `centers`; centers need
/// not be distinct or canonical.
pub fn unfriendly_edges_by_centers(raw: &Graph, assignment: &[usize], centers: &[usize], radius: f64) -> usize {
    let rel = friendship_by_centers(raw, centers, radius);
    raw.edges()
        .iter()
        .filter(|e| {
            let (a, b) = (assignment[e.u], assignment[e.v]);
            a != b && centers[a] != centers[b] && !rel.are_friends(a, b)
        })
        .count()
}

/// Number of `G'` edges between clusters that are not friends.
pub fn unfriendly_edge_count(cs: &CanonicalSolution, inst: &Instance, radius: f64) -> usize {
    unfriendly_edges_by_centers(&inst.raw_graph, cs.partition.assignment(), &cs.centers, radius)
}

/// Knobs for [`case_diagnostics`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseParams {
    /// A cluster is large when its size is at least `n^large_exponent`.
    pub large_exponent: f64,
    /// Case 1 holds when the large-cluster mass is at most `mass_fraction · n`.
    pub mass_fraction: f64,
}

impl Default for CaseParams {
    fn default() -> Self {
        CaseParams {
            large_exponent: 0.1,
            mass_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPacking {
    /// Max-flow value from the terminals to the large clusters in `G'`.
    pub flow_value: f64,
    pub path_count: usize,
    /// Paths that use no removed edge.
    pub surviving_paths: usize,
    /// Centers of the large clusters.
    pub large_centers: Vec<usize>,
    /// `Σ_P dist_G(t_P, v''_P)` over surviving paths, where `v''_P` is the
    /// center of the cluster in which `P` ends.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub large_threshold: f64,
    pub large_clusters: usize,
    pub large_mass: usize,
    pub case: u8,
    pub cost: f64,
    /// Present in Case 2.
    pub packing: Option<PathPacking>,
    /// `bound ≤ cost` (vacuously true in Case 1).
    pub bound_ok: bool,
}

/// Splits into the small-mass and large-mass cases and, in the latter,
/// packs edge-disjoint terminal-to-large-cluster paths.
pub fn case_diagnostics(cs: &CanonicalSolution, inst: &Instance, params: CaseParams) -> Result<CaseReport> {
    cs.validate(inst)?;
    let n = inst.n();
    let cost = canonical_cost_unchecked(inst, &cs.partition, &cs.centers);
    let large_threshold = (n as f64).powf(params.large_exponent);
    let sizes = cs.partition.sizes();
    let large: Vec<bool> = sizes.iter().map(|&s| s as f64 >= large_threshold - EPS).collect();
    let large_mass: usize = sizes.iter().zip(&large).filter(|(_, &l)| l).map(|(s, _)| s).sum();
    let large_clusters = large.iter().filter(|&&l| l).count();
    let case = if large_mass as f64 <= params.mass_fraction * n as f64 + EPS { 1 } else { 2 };
    if case == 1 {
        return Ok(CaseReport {
            large_threshold,
            large_clusters,
            large_mass,
            case,
            cost,
            packing: None,
            bound_ok: true,
        });
    }

    // G' plus a source s joined to every terminal and a sink t joined to
    // every vertex of a large cluster
    let (s, t) = (n, n + 1);
    let raw = &inst.raw_graph;
    let mut edges: Vec<Edge> = raw.edges().iter().map(|e| Edge::unit(e.u, e.v)).collect();
    edges.extend(inst.terminals.iter().map(|&x| Edge::unit(s, x)));
    edges.extend((0..n).filter(|&v| large[cs.partition.cluster_of(v)]).map(|v| Edge::unit(v, t)));
    let augmented = Graph::new(n + 2, edges)?;
    let flow = max_flow(&augmented, s, t)?;
    let paths = flow.paths.unwrap_or_default();

    let mut removed = vec![false; raw.m()];
    for &id in &inst.removal_log {
        removed[id] = true;
    }
    let surviving: Vec<_> = paths
        .iter()
        .filter(|p| p.edges.iter().all(|&id| id >= raw.m() || !removed[id]))
        .collect();
    let ends: Vec<(usize, usize)> = surviving
        .iter()
        .map(|p| {
            // vertices: s, t_P, ..., v'_P, t
            let first = p.vertices[1];
            let last = p.vertices[p.vertices.len() - 2];
            (first, cs.centers[cs.partition.cluster_of(last)])
        })
        .collect();
    let bound = par::map_slice(&ends, |&(a, b)| distances_from(&inst.graph, a)[b])
        .into_iter()
        .sum::<f64>();
    let large_centers = (0..cs.centers.len()).filter(|&c| large[c]).map(|c| cs.centers[c]).collect();
    Ok(CaseReport {
        large_threshold,
        large_clusters,
        large_mass,
        case,
        cost,
        bound_ok: bound <= cost + EPS,
        packing: Some(PathPacking {
            flow_value: flow.value,
            path_count: paths.len(),
            surviving_paths: surviving.len(),
            large_centers,
            bound,
        }),
    })
}
