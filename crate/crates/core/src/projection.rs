//! Projection of graph vertices onto the tight span of the terminal metric,
//! and the tightness graph of a tight-span point.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::distances_from;
use crate::instance::Instance;
use crate::metric::{tight_span_membership, Membership, SemiMetric, TightSpanPoint};
use crate::{par, EPS};

fn check_bounds(d: &[f64], metric: &SemiMetric) -> Result<()> {
    let k = metric.size();
    if d.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: d.len() });
    }
    for i in 0..k {
        if !(d[i] >= -EPS) || !d[i].is_finite() {
            return Err(Error::InfeasibleDistances { i, j: i });
        }
        for j in i + 1..k {
            let dij = metric.get(i, j);
            if (d[i] - d[j]).abs() > dij + EPS || dij > d[i] + d[j] + EPS {
                return Err(Error::InfeasibleDistances { i, j });
            }
        }
    }
    Ok(())
}

/// Projects the distance vector `d` onto the tight span of `metric`.
///
/// All coordinates start free and shrink at the same rate; a coordinate is
/// frozen as soon as one of its constraints becomes tight. With `S` the free
/// set, each round computes
/// `Δ_ij = (d_i + d_j − D_ij)/2` for `i, j ∈ S` (including `i = j`),
/// `Δ_ij = d_i + x_j − D_ij` for `i ∈ S, j ∉ S`, `Δ_i = min_j Δ_ij`, and
/// freezes every `i` with `Δ_i = Δ = min Δ_i` at `x_i = d_i − Δ`.
pub fn project_point(d: &[f64], metric: &SemiMetric) -> Result<TightSpanPoint> {
    project_point_traced(d, metric).map(|(x, _)| x)
}

/// Like [`project_point`], also returning the minimum `Δ` of every round.
pub fn project_point_traced(d: &[f64], metric: &SemiMetric) -> Result<(TightSpanPoint, Vec<f64>)> {
    check_bounds(d, metric)?;
    let k = d.len();
    let mut x = vec![0.0; k];
    let mut free = vec![true; k];
    let mut active: Vec<usize> = (0..k).collect();
    let pair = |i: usize, j: usize| (d[i] + d[j] - metric.get(i, j)) / 2.0;

    // Δ_i and the j attaining it
    let mut best: Vec<(f64, usize)> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| (pair(i, j), j))
                .fold((f64::INFINITY, usize::MAX), |a, b| if b.0 < a.0 { b } else { a })
        })
        .collect();
    let mut rounds = Vec::new();

    while !active.is_empty() {
        let delta = active.iter().map(|&i| best[i].0).fold(f64::INFINITY, f64::min);
        rounds.push(delta);
        let (fixed, rest): (Vec<usize>, Vec<usize>) =
            active.iter().partition(|&&i| best[i].0 <= delta + EPS);
        for &i in &fixed {
            x[i] = d[i] - delta;
            free[i] = false;
        }
        active = rest;
        let mut newly = vec![false; k];
        for &j in &fixed {
            newly[j] = true;
        }
        for &i in &active {
            let entry = |j: usize| {
                if free[j] {
                    pair(i, j)
                } else {
                    d[i] + x[j] - metric.get(i, j)
                }
            };
            best[i] = if newly[best[i].1] {
                // the minimizer moved out of S; its entry grew, so rescan
                (0..k)
                    .map(|j| (entry(j), j))
                    .fold((f64::INFINITY, usize::MAX), |a, b| if b.0 < a.0 { b } else { a })
            } else {
                fixed
                    .iter()
                    .map(|&j| (entry(j), j))
                    .fold(best[i], |a, b| if b.0 < a.0 { b } else { a })
            };
        }
    }
    Ok((TightSpanPoint { coords: x }, rounds))
}

/// Distances from `v` to every terminal in `G`.
pub fn terminal_distances(inst: &Instance, v: usize) -> Result<Vec<f64>> {
    inst.graph.check_vertex(v)?;
    let dist = distances_from(&inst.graph, v);
    Ok(inst.terminals.iter().map(|&t| dist[t]).collect())
}

pub fn project_vertex(inst: &Instance, v: usize) -> Result<TightSpanPoint> {
    project_point(&terminal_distances(inst, v)?, &inst.terminal_metric)
}

/// Projections of every vertex, in vertex order.
pub fn project_all(inst: &Instance) -> Result<Vec<TightSpanPoint>> {
    par::map_range(inst.n(), |v| project_vertex(inst, v)).into_iter().collect()
}

/// `Γ(x)`: an edge `{i, j}` whenever `x_i + x_j = D(i, j)`, and a loop at
/// every `i` with `x_i = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TightnessGraph {
    pub k: usize,
    /// Pairs `i < j`, lexicographic.
    pub edges: Vec<(usize, usize)>,
    pub loops: Vec<usize>,
}

impl TightnessGraph {
    pub fn is_connected(&self) -> bool {
        self.two_coloring().0
    }

    /// Whether some closed walk has odd length; loops count as odd cycles.
    pub fn has_odd_cycle(&self) -> bool {
        !self.loops.is_empty() || !self.two_coloring().1
    }

    // (connected, bipartite ignoring loops)
    fn two_coloring(&self) -> (bool, bool) {
        if self.k == 0 {
            return (true, true);
        }
        let mut adj = vec![Vec::new(); self.k];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut color = vec![u8::MAX; self.k];
        let mut bipartite = true;
        let mut components = 0;
        for start in 0..self.k {
            if color[start] != u8::MAX {
                continue;
            }
            components += 1;
            color[start] = 0;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &w in &adj[u] {
                    if color[w] == u8::MAX {
                        color[w] = 1 - color[u];
                        queue.push_back(w);
                    } else if color[w] == color[u] {
                        bipartite = false;
                    }
                }
            }
        }
        (components == 1, bipartite)
    }
}

fn require_member(x: &TightSpanPoint, metric: &SemiMetric) -> Result<()> {
    match tight_span_membership(&x.coords, metric)? {
        Membership::Member => Ok(()),
        other => Err(Error::NotAMember(other)),
    }
}

pub fn tightness_graph(x: &TightSpanPoint, metric: &SemiMetric) -> Result<TightnessGraph> {
    require_member(x, metric)?;
    let k = metric.size();
    let c = &x.coords;
    let mut edges = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if (c[i] + c[j] - metric.get(i, j)).abs() <= EPS {
                edges.push((i, j));
            }
        }
    }
    let loops = (0..k).filter(|&i| c[i].abs() <= EPS).collect();
    Ok(TightnessGraph { k, edges, loops })
}

/// `Γ(x)` connected and not bipartite.
pub fn is_extreme_point(x: &TightSpanPoint, metric: &SemiMetric) -> Result<bool> {
    let gamma = tightness_graph(x, metric)?;
    Ok(gamma.is_connected() && gamma.has_odd_cycle())
}
