//! The random hard instance: union of three random permutation graphs with
//! short cycles removed, a terminal set and the terminal metric.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    bfs_tree, conductance_estimate, diameter, distances_from, girth, remove_short_cycles, ConductanceBounds,
    Edge, Graph, DEFAULT_EXACT_THRESHOLD,
};
use crate::metric::SemiMetric;
use crate::{par, EPS};

/// Coefficient `c` in the removal threshold `c · log₂ n` used by the
/// asymptotic construction.
pub const ASYMPTOTIC_GIRTH_COEFFICIENT: f64 = 0.01;

/// Coefficient used by experiments so that removal actually happens at
/// small `n`.
pub const EXPERIMENT_GIRTH_COEFFICIENT: f64 = 1.0 / 3.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalRule {
    /// Terminals are vertices `0..k`.
    #[default]
    Prefix,
    /// A uniformly random `k`-subset, drawn from the instance RNG after the
    /// permutations, sorted by id.
    RandomSubset,
}

impl FromStr for TerminalRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "prefix" => Ok(TerminalRule::Prefix),
            "random-subset" | "random" => Ok(TerminalRule::RandomSubset),
            other => Err(Error::InvalidArgument(format!("unknown terminal rule `{other}`"))),
        }
    }
}

impl fmt::Display for TerminalRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminalRule::Prefix => "prefix",
            TerminalRule::RandomSubset => "random-subset",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub n: usize,
    pub seed: u64,
    pub girth_coefficient: f64,
    pub terminal_rule: TerminalRule,
}

impl InstanceConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        InstanceConfig {
            n,
            seed,
            girth_coefficient: EXPERIMENT_GIRTH_COEFFICIENT,
            terminal_rule: TerminalRule::Prefix,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.girth_coefficient * (self.n as f64).log2()
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub config: InstanceConfig,
    /// `G`, after short-cycle removal.
    pub graph: Graph,
    /// `G'`, the union of the three permutation graphs.
    pub raw_graph: Graph,
    pub terminals: Vec<usize>,
    pub terminal_metric: SemiMetric,
    /// Ids in `raw_graph` of the removed edges, in removal order.
    pub removal_log: Vec<usize>,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn k(&self) -> usize {
        self.terminals.len()
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn threshold(&self) -> f64 {
        self.config.threshold()
    }

    /// `Some(i)` when vertex `v` is terminal `i`.
    pub fn terminal_index(&self, v: usize) -> Option<usize> {
        self.terminals.iter().position(|&t| t == v)
    }

    /// Builds an instance from stored parts, recomputing the post-removal
    /// graph and terminal metric.
    pub fn from_parts(
        config: InstanceConfig,
        raw_graph: Graph,
        terminals: Vec<usize>,
        removal_log: Vec<usize>,
    ) -> Result<Instance> {
        for &id in &removal_log {
            if id >= raw_graph.m() {
                return Err(Error::InvalidArgument(format!("removed edge {id} does not exist")));
            }
        }
        let graph = raw_graph.without_edges(&removal_log);
        let terminal_metric = terminal_metric(&graph, &terminals)?;
        Ok(Instance {
            config,
            graph,
            raw_graph,
            terminals,
            terminal_metric,
            removal_log,
        })
    }
}

/// `⌈n · log₂log₂n / log₂n⌉`.
pub fn terminal_count(n: usize) -> Result<usize> {
    if n < 16 {
        return Err(Error::InvalidN(n));
    }
    let l = (n as f64).log2();
    let exact = n as f64 * l.log2() / l;
    // guard exact integers against rounding up by an ulp
    let rounded = exact.round();
    Ok(if (exact - rounded).abs() < 1e-9 { rounded } else { exact.ceil() } as usize)
}

fn permutation_edges(n: usize, rng: &mut ChaCha8Rng) -> Vec<Edge> {
    let mut edges = Vec::with_capacity(3 * n);
    for _ in 0..3 {
        let mut sigma: Vec<usize> = (0..n).collect();
        sigma.shuffle(rng);
        edges.extend((0..n).map(|v| Edge::unit(v, sigma[v])));
    }
    edges
}

/// `G'`: edges `(v, σᵢ(v))` for three uniformly random permutations, as a
/// multigraph. Fixed points become self-loops and are dropped.
pub fn sample_union_graph(n: usize, seed: u64) -> Result<Graph> {
    if n < 4 {
        return Err(Error::InvalidN(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Graph::new(n, permutation_edges(n, &mut rng))
}

fn terminal_metric(graph: &Graph, terminals: &[usize]) -> Result<SemiMetric> {
    let rows = par::map_slice(terminals, |&t| distances_from(graph, t));
    for (&t, row) in terminals.iter().zip(&rows) {
        if let Some(vertex) = terminals.iter().copied().find(|&s| row[s].is_infinite()) {
            return Err(Error::DisconnectedGraph { from: t, vertex });
        }
    }
    Ok(SemiMetric::restrict_rows(&rows, terminals))
}

/// Runs the full construction: sample `G'`, take the BFS tree from vertex 0,
/// delete non-tree edges on cycles of length at most `c · log₂ n`, choose
/// terminals and compute their metric.
pub fn build_instance(config: InstanceConfig) -> Result<Instance> {
    let n = config.n;
    let k = terminal_count(n)?;
    if !(config.girth_coefficient > 0.0) {
        return Err(Error::InvalidArgument("girth coefficient must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let raw_graph = Graph::new(n, permutation_edges(n, &mut rng))?;
    let terminals = match config.terminal_rule {
        TerminalRule::Prefix => (0..k).collect(),
        TerminalRule::RandomSubset => {
            let mut ids: Vec<usize> = (0..n).collect();
            ids.shuffle(&mut rng);
            let mut chosen = ids[..k].to_vec();
            chosen.sort_unstable();
            chosen
        }
    };
    let tree = bfs_tree(&raw_graph, 0)?;
    let (graph, removal_log) = remove_short_cycles(&raw_graph, config.threshold(), &tree)?;
    let terminal_metric = terminal_metric(&graph, &terminals)?;
    Ok(Instance {
        config,
        graph,
        raw_graph,
        terminals,
        terminal_metric,
        removal_log,
    })
}

/// Structural checks on a built instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDiagnostics {
    pub n: usize,
    pub k: usize,
    pub raw_edges: usize,
    pub edges: usize,
    pub dropped_self_loops: usize,
    pub max_degree: usize,
    pub threshold: f64,
    /// `None` when the graph is a forest.
    pub girth: Option<f64>,
    pub girth_threshold_ok: bool,
    pub removed_count: usize,
    pub removed_vs_n03: bool,
    pub diameter: f64,
    pub diameter_over_log: f64,
    pub conductance: ConductanceBounds,
}

pub fn instance_diagnostics(inst: &Instance) -> InstanceDiagnostics {
    let n = inst.n();
    let g = girth(&inst.graph);
    let diam = diameter(&inst.graph).unwrap_or(f64::INFINITY);
    let conductance = conductance_estimate(&inst.raw_graph, DEFAULT_EXACT_THRESHOLD).unwrap_or(ConductanceBounds {
        lower: 0.0,
        upper: 0.0,
        exact: false,
    });
    InstanceDiagnostics {
        n,
        k: inst.k(),
        raw_edges: inst.raw_graph.m(),
        edges: inst.graph.m(),
        dropped_self_loops: inst.raw_graph.dropped_self_loops(),
        max_degree: inst.raw_graph.max_degree(),
        threshold: inst.threshold(),
        girth: g.is_finite().then_some(g),
        girth_threshold_ok: g > inst.threshold() + EPS || g.is_infinite(),
        removed_count: inst.removal_log.len(),
        removed_vs_n03: inst.removal_log.len() as f64 <= (n as f64).powf(0.3),
        diameter: diam,
        diameter_over_log: diam / (n as f64).log2(),
        conductance,
    }
}
