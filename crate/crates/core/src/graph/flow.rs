use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::EPS;

/// A source-to-sink path carrying one unit of flow.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowPath {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxFlow {
    pub value: f64,
    /// Edge-disjoint paths, present when every capacity is exactly 1.
    pub paths: Option<Vec<FlowPath>>,
}

// Edge e becomes arcs 2e (u -> v) and 2e+1 (v -> u), each with capacity c(e);
// pushing along one arc frees the same amount on its twin.
struct Network<'a> {
    g: &'a Graph,
    flow: Vec<f64>,
    out: Vec<Vec<usize>>,
    level: Vec<usize>,
    next: Vec<usize>,
}

impl<'a> Network<'a> {
    fn new(g: &'a Graph) -> Self {
        let mut out = vec![Vec::new(); g.n()];
        for (id, e) in g.edges().iter().enumerate() {
            out[e.u].push(2 * id);
            out[e.v].push(2 * id + 1);
        }
        Network {
            g,
            flow: vec![0.0; 2 * g.m()],
            out,
            level: vec![usize::MAX; g.n()],
            next: vec![0; g.n()],
        }
    }

    fn head(&self, arc: usize) -> usize {
        let e = self.g.edge(arc / 2);
        if arc % 2 == 0 {
            e.v
        } else {
            e.u
        }
    }

    fn residual(&self, arc: usize) -> f64 {
        self.g.edge(arc / 2).capacity - self.flow[arc]
    }

    fn push(&mut self, arc: usize, amount: f64) {
        self.flow[arc] += amount;
        self.flow[arc ^ 1] -= amount;
    }

    fn build_levels(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = usize::MAX);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for i in 0..self.out[u].len() {
                let arc = self.out[u][i];
                let w = self.head(arc);
                if self.level[w] == usize::MAX && self.residual(arc) > EPS {
                    self.level[w] = self.level[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        self.level[t] != usize::MAX
    }

    fn augment(&mut self, u: usize, t: usize, limit: f64) -> f64 {
        if u == t {
            return limit;
        }
        while self.next[u] < self.out[u].len() {
            let arc = self.out[u][self.next[u]];
            let w = self.head(arc);
            let room = self.residual(arc);
            if room > EPS && self.level[w] == self.level[u] + 1 {
                let pushed = self.augment(w, t, limit.min(room));
                if pushed > 0.0 {
                    self.push(arc, pushed);
                    return pushed;
                }
            }
            self.next[u] += 1;
        }
        0.0
    }
}

/// Maximum flow between `source` and `sink` by Dinic's algorithm, treating
/// each edge as two opposite arcs of capacity `c(e)`.
pub fn max_flow(g: &Graph, source: usize, sink: usize) -> Result<MaxFlow> {
    g.check_vertex(source)?;
    g.check_vertex(sink)?;
    if source == sink {
        return Err(Error::InvalidArgument("source and sink coincide".into()));
    }
    let mut net = Network::new(g);
    let mut value = 0.0;
    while net.build_levels(source, sink) {
        net.next.iter_mut().for_each(|x| *x = 0);
        loop {
            let pushed = net.augment(source, sink, f64::INFINITY);
            if pushed <= 0.0 {
                break;
            }
            value += pushed;
        }
    }
    let unit = g.edges().iter().all(|e| e.capacity == 1.0);
    let paths = unit.then(|| decompose(g, &net.flow, source, sink));
    Ok(MaxFlow { value, paths })
}

/// Splits an integral unit flow into edge-disjoint paths, discarding any
/// circulation met along the way.
fn decompose(g: &Graph, flow: &[f64], source: usize, sink: usize) -> Vec<FlowPath> {
    // outgoing flow-carrying arcs per vertex
    let mut carrying: Vec<Vec<(usize, usize)>> = vec![Vec::new(); g.n()];
    for (id, e) in g.edges().iter().enumerate() {
        if flow[2 * id] > 0.5 {
            carrying[e.u].push((e.v, id));
        } else if flow[2 * id + 1] > 0.5 {
            carrying[e.v].push((e.u, id));
        }
    }
    for list in &mut carrying {
        list.reverse();
    }
    let mut paths = Vec::new();
    let mut on_walk = vec![usize::MAX; g.n()];
    while let Some(&(_, _)) = carrying[source].last() {
        let mut vertices = vec![source];
        let mut edges = Vec::new();
        on_walk[source] = 0;
        let mut at = source;
        while at != sink {
            let Some((w, id)) = carrying[at].pop() else {
                break;
            };
            if on_walk[w] != usize::MAX {
                // closed a circulation; drop it from the walk
                let keep = on_walk[w];
                for &v in &vertices[keep + 1..] {
                    on_walk[v] = usize::MAX;
                }
                vertices.truncate(keep + 1);
                edges.truncate(keep);
                at = w;
                continue;
            }
            on_walk[w] = vertices.len();
            vertices.push(w);
            edges.push(id);
            at = w;
        }
        for &v in &vertices {
            on_walk[v] = usize::MAX;
        }
        if at == sink {
            paths.push(FlowPath { vertices, edges });
        }
    }
    paths
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    #[test]
    fn unit_path_carries_one() {
        let g = Graph::from_unit_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let f = max_flow(&g, 0, 2).unwrap();
        assert_eq!(f.value, 1.0);
        let paths = f.paths.unwrap();
        assert_eq!(paths, vec![FlowPath { vertices: vec![0, 1, 2], edges: vec![0, 1] }]);
    }

    #[test]
    fn k4_has_three_disjoint_paths() {
        let g = Graph::from_unit_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let f = max_flow(&g, 0, 3).unwrap();
        assert_eq!(f.value, 3.0);
        let paths = f.paths.unwrap();
        assert_eq!(paths.len(), 3);
        let mut used: Vec<usize> = paths.iter().flat_map(|p| p.edges.clone()).collect();
        let total = used.len();
        used.sort();
        used.dedup();
        assert_eq!(used.len(), total);
        for p in &paths {
            assert_eq!(p.vertices.first(), Some(&0));
            assert_eq!(p.vertices.last(), Some(&3));
        }
    }

    #[test]
    fn weighted_capacities_and_degenerate_cases() {
        let g = Graph::new(
            4,
            [
                Edge::new(0, 1, 1.0, 2.5),
                Edge::new(1, 3, 1.0, 1.0),
                Edge::new(0, 2, 1.0, 0.5),
                Edge::new(2, 3, 1.0, 4.0),
                Edge::new(1, 2, 1.0, 1.0),
            ],
        )
        .unwrap();
        let f = max_flow(&g, 0, 3).unwrap();
        // cut {0, 1} | {2, 3} has capacity 1 + 0.5 + 1
        assert!((f.value - 2.5).abs() < 1e-9);
        assert!(f.paths.is_none());
        assert!(max_flow(&g, 1, 1).is_err());
        let split = Graph::from_unit_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(max_flow(&split, 0, 3).unwrap().value, 0.0);
    }
}
