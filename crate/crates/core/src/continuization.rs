//! The continuization of a graph (every edge a segment of its length), the
//! tree and high-girth embeddings of a solution into it, and rounding an
//! embedding back to a canonical solution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{diameter, girth, shortest_path_unique, DistanceMatrix, Graph, ShortestPath};
use crate::instance::Instance;
use crate::solution::{CanonicalSolution, Solution};
use crate::{par, EPS};

/// A point of the continuization: edge id and distance from the endpoint
/// with the smaller vertex id.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConPoint {
    pub edge: usize,
    pub offset: f64,
}

impl ConPoint {
    pub fn new(g: &Graph, edge: usize, offset: f64) -> Result<Self> {
        if edge >= g.m() {
            return Err(Error::InvalidArgument(format!("edge {edge} does not exist")));
        }
        let length = g.edge(edge).length;
        if !(offset >= -EPS && offset <= length + EPS) {
            return Err(Error::InvalidOffset { edge, offset, length });
        }
        Ok(ConPoint {
            edge,
            offset: offset.clamp(0.0, length),
        })
    }

    /// Canonical form of vertex `v`: its incident edge of smallest id.
    pub fn vertex(g: &Graph, v: usize) -> Result<Self> {
        g.check_vertex(v)?;
        let edge = g
            .neighbors(v)
            .iter()
            .map(|&(_, id)| id)
            .min()
            .ok_or_else(|| Error::InvalidArgument(format!("isolated vertex {v} has no point")))?;
        let (lo, _) = g.edge(edge).ordered();
        let offset = if lo == v { 0.0 } else { g.edge(edge).length };
        Ok(ConPoint { edge, offset })
    }

    /// `(smaller endpoint, larger endpoint)`.
    pub fn endpoints(&self, g: &Graph) -> (usize, usize) {
        g.edge(self.edge).ordered()
    }

    /// The vertex this point sits on, if any.
    pub fn as_vertex(&self, g: &Graph) -> Option<usize> {
        let (lo, hi) = self.endpoints(g);
        let length = g.edge(self.edge).length;
        if self.offset <= EPS {
            Some(lo)
        } else if self.offset >= length - EPS {
            Some(hi)
        } else {
            None
        }
    }

    /// Rewrites points sitting on a vertex into that vertex's canonical form.
    pub fn normalized(self, g: &Graph) -> Self {
        match self.as_vertex(g) {
            Some(v) => ConPoint::vertex(g, v).unwrap_or(self),
            None => self,
        }
    }

    /// The endpoint nearer to the point; the smaller id at the exact midpoint.
    pub fn nearer_endpoint(&self, g: &Graph) -> usize {
        let (lo, hi) = self.endpoints(g);
        if self.offset <= g.edge(self.edge).length / 2.0 + EPS {
            lo
        } else {
            hi
        }
    }
}

/// `ℓ^con(p, q)`: through the endpoints of both segments, or directly when
/// both lie on the same segment. Points are assumed valid.
pub fn con_distance(g: &Graph, dist: &DistanceMatrix, p: &ConPoint, q: &ConPoint) -> f64 {
    let (a, b) = p.endpoints(g);
    let (c, d) = q.endpoints(g);
    let (lp, lq) = (g.edge(p.edge).length, g.edge(q.edge).length);
    let ends_p = [(a, p.offset), (b, lp - p.offset)];
    let ends_q = [(c, q.offset), (d, lq - q.offset)];
    let mut best = f64::INFINITY;
    for &(x, px) in &ends_p {
        for &(y, qy) in &ends_q {
            best = best.min(px + dist.get(x, y) + qy);
        }
    }
    if p.edge == q.edge {
        best = best.min((p.offset - q.offset).abs());
    }
    best
}

/// [`con_distance`] after validating both points.
pub fn con_distance_checked(g: &Graph, dist: &DistanceMatrix, p: &ConPoint, q: &ConPoint) -> Result<f64> {
    let p = ConPoint::new(g, p.edge, p.offset)?;
    let q = ConPoint::new(g, q.edge, q.offset)?;
    Ok(con_distance(g, dist, &p, &q))
}

/// The point at distance `s` from the start of `path`, clamped to the path.
pub fn point_on_path(g: &Graph, path: &ShortestPath, s: f64) -> Result<ConPoint> {
    let start = path.vertices[0];
    if path.edges.is_empty() {
        return ConPoint::vertex(g, start);
    }
    let s = s.clamp(0.0, path.length);
    let mut walked = 0.0;
    for (step, &id) in path.edges.iter().enumerate() {
        let length = g.edge(id).length;
        let last = step + 1 == path.edges.len();
        if s <= walked + length + EPS || last {
            let from = path.vertices[step];
            let into = (s - walked).clamp(0.0, length);
            let (lo, _) = g.edge(id).ordered();
            let offset = if from == lo { into } else { length - into };
            return Ok(ConPoint { edge: id, offset }.normalized(g));
        }
        walked += length;
    }
    unreachable!("loop returns on the last edge")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NuMode {
    /// `(δ(F,F_t) + δ(F,F_t') − δ(F_t,F_t'))/2`
    Tree,
    /// `(δ(F,F_t) + δ(F,F_t') − δ(F_t,F_t')/2)/2`
    Girth,
}

/// `ν(F)` and the first minimizing terminal pair `(t1, t2)`, `t1 ≤ t2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nu {
    pub value: f64,
    pub pair: (usize, usize),
}

/// Minimizes over all terminal pairs including `t = t'`. `to_terminals[i]`
/// is `δ(F, F_{t_i})` and `between(i, j)` is `δ(F_{t_i}, F_{t_j})`. Ties go
/// to the lexicographically smallest pair.
pub fn nu(to_terminals: &[f64], between: impl Fn(usize, usize) -> f64, mode: NuMode) -> Nu {
    let weight = match mode {
        NuMode::Tree => 1.0,
        NuMode::Girth => 0.5,
    };
    let mut best = Nu {
        value: f64::INFINITY,
        pair: (0, 0),
    };
    let k = to_terminals.len();
    for i in 0..k {
        for j in i..k {
            let v = (to_terminals[i] + to_terminals[j] - weight * between(i, j)) / 2.0;
            if v < best.value - EPS {
                best = Nu { value: v, pair: (i, j) };
            }
        }
    }
    best
}

/// Cluster-level view of a solution: terminal clusters and the δ rows
/// towards them.
struct View<'a> {
    sol: &'a Solution,
    terminal_cluster: Vec<usize>,
    terminal_of: Vec<Option<usize>>,
}

impl<'a> View<'a> {
    fn new(sol: &'a Solution, inst: &Instance) -> Result<Self> {
        sol.validate(inst)?;
        let terminal_cluster = sol.partition.terminal_clusters(inst)?;
        let mut terminal_of = vec![None; sol.partition.cluster_count()];
        for (i, &c) in terminal_cluster.iter().enumerate() {
            terminal_of[c] = Some(i);
        }
        Ok(View {
            sol,
            terminal_cluster,
            terminal_of,
        })
    }

    fn to_terminals(&self, f: usize) -> Vec<f64> {
        self.terminal_cluster.iter().map(|&c| self.sol.delta.get(f, c)).collect()
    }

    fn between(&self, i: usize, j: usize) -> f64 {
        self.sol.delta.get(self.terminal_cluster[i], self.terminal_cluster[j])
    }

    fn nu(&self, f: usize, mode: NuMode) -> (Nu, Vec<f64>) {
        let row = self.to_terminals(f);
        (nu(&row, |i, j| self.between(i, j), mode), row)
    }
}

/// Embeds the clusters of `sol` into the continuization of a tree.
///
/// A terminal cluster goes to its terminal; any other cluster goes to the
/// point of the `t1`–`t2` path at distance `δ(F,F_{t1}) − ν(F)` from `t1`,
/// with `ν` in tree mode.
pub fn embed_tree(sol: &Solution, inst: &Instance) -> Result<Vec<ConPoint>> {
    let g = &inst.graph;
    if !g.is_tree() {
        return Err(Error::NotATree);
    }
    let view = View::new(sol, inst)?;
    let count = sol.partition.cluster_count();
    par::map_range(count, |f| {
        if let Some(i) = view.terminal_of[f] {
            return ConPoint::vertex(g, inst.terminals[i]);
        }
        let (nu, row) = view.nu(f, NuMode::Tree);
        let (t1, t2) = nu.pair;
        let path = shortest_path_unique(g, inst.terminals[t1], inst.terminals[t2])?;
        point_on_path(g, &path, row[t1] - nu.value)
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq)]
enum Placement {
    Terminal { point: ConPoint },
    /// Always farther than `g/30` from every terminal.
    Far,
    Near { point: ConPoint, nu: Nu, a: f64 },
    /// Placement was attempted and failed; only matters when `A_F ≤ r`.
    Failed { a: f64, error: PlacementError },
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum PlacementError {
    GTree,
    NonUnique { from: usize, to: usize },
}

/// The random high-girth embedding with everything that does not depend on
/// the radius `r` precomputed. `φ_r(F)` is the precomputed placement when
/// `A_F ≤ r` and `t*` otherwise.
pub struct GirthEmbedder {
    pub girth: f64,
    pub diameter: f64,
    /// `A_F = min_t δ(F, F_t)`.
    pub a: Vec<f64>,
    pub t_star: usize,
    t_star_point: ConPoint,
    placements: Vec<Placement>,
}

impl GirthEmbedder {
    pub fn new(sol: &Solution, inst: &Instance) -> Result<Self> {
        Self::with_max_radius(sol, inst, None)
    }

    /// Precomputes placements for every radius up to `r_max` (default
    /// `g/30`), so [`GirthEmbedder::embed_with_radius`] is exact below it.
    pub fn with_max_radius(sol: &Solution, inst: &Instance, r_max: Option<f64>) -> Result<Self> {
        let g = &inst.graph;
        let gth = girth(g);
        if !gth.is_finite() {
            return Err(Error::InvalidArgument("graph is a forest, girth is infinite".into()));
        }
        let view = View::new(sol, inst)?;
        let count = sol.partition.cluster_count();
        let r_max = r_max.unwrap_or(gth / 30.0).max(gth / 30.0);
        let t_star = inst.terminals[0];
        let t_star_point = ConPoint::vertex(g, t_star)?;
        let a: Vec<f64> = (0..count)
            .map(|f| view.to_terminals(f).into_iter().fold(f64::INFINITY, f64::min))
            .collect();
        let placements = par::map_range(count, |f| -> Result<Placement> {
            if let Some(i) = view.terminal_of[f] {
                return Ok(Placement::Terminal {
                    point: ConPoint::vertex(g, inst.terminals[i])?,
                });
            }
            if a[f] > r_max + EPS {
                return Ok(Placement::Far);
            }
            let (nu, row) = view.nu(f, NuMode::Girth);
            let (t1, t2) = nu.pair;
            if row[t1] + row[t2] > 4.0 * a[f] + EPS {
                return Ok(Placement::Failed {
                    a: a[f],
                    error: PlacementError::GTree,
                });
            }
            let (from, to) = (inst.terminals[t1], inst.terminals[t2]);
            let path = shortest_path_unique(g, from, to)?;
            if !path.unique {
                return Ok(Placement::Failed {
                    a: a[f],
                    error: PlacementError::NonUnique { from, to },
                });
            }
            let point = point_on_path(g, &path, 2.0 * (row[t1] - nu.value))?;
            Ok(Placement::Near { point, nu, a: a[f] })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(GirthEmbedder {
            girth: gth,
            diameter: diameter(g)?,
            a,
            t_star,
            t_star_point,
            placements,
        })
    }

    /// `[g/60, g/30]`.
    pub fn radius_range(&self) -> (f64, f64) {
        (self.girth / 60.0, self.girth / 30.0)
    }

    pub fn sample_radius(&self, rng: &mut impl Rng) -> f64 {
        let (lo, hi) = self.radius_range();
        rng.random_range(lo..=hi)
    }

    pub fn cluster_count(&self) -> usize {
        self.placements.len()
    }

    /// `φ_r(F)` for a single cluster.
    pub fn point(&self, f: usize, r: f64) -> Result<ConPoint> {
        match &self.placements[f] {
            Placement::Terminal { point } => Ok(*point),
            Placement::Far => Ok(self.t_star_point),
            Placement::Near { point, a, .. } => Ok(if *a <= r + EPS { *point } else { self.t_star_point }),
            Placement::Failed { a, error } => {
                if *a <= r + EPS {
                    Err(match *error {
                        PlacementError::GTree => Error::GTreeViolated { cluster: f },
                        PlacementError::NonUnique { from, to } => Error::NonUniqueShortestPath { from, to },
                    })
                } else {
                    Ok(self.t_star_point)
                }
            }
        }
    }

    /// The embedding for radius `r`, without checking that `r` lies in
    /// the sampling range. Clusters beyond the precomputed maximum radius
    /// are treated as far.
    pub fn embed_with_radius(&self, r: f64) -> Result<Vec<ConPoint>> {
        (0..self.cluster_count()).map(|f| self.point(f, r)).collect()
    }

    /// The embedding for a radius from the sampling range.
    pub fn embed(&self, r: f64) -> Result<Vec<ConPoint>> {
        let (lo, hi) = self.radius_range();
        if r < lo - EPS || r > hi + EPS {
            return Err(Error::InvalidArgument(format!("radius {r} outside [{lo}, {hi}]")));
        }
        self.embed_with_radius(r)
    }

    /// The point a cluster takes whenever it is near, with its `ν`
    /// (`0` for terminal clusters). `None` for far or failed clusters.
    pub fn near_placement(&self, f: usize) -> Option<(ConPoint, f64)> {
        match &self.placements[f] {
            Placement::Terminal { point, .. } => Some((*point, 0.0)),
            Placement::Near { point, nu, .. } => Some((*point, nu.value)),
            _ => None,
        }
    }

    pub fn t_star_point(&self) -> ConPoint {
        self.t_star_point
    }
}

/// One random embedding with `r` drawn from `[g/60, g/30]`.
pub fn embed_girth(sol: &Solution, inst: &Instance, seed: u64) -> Result<(f64, Vec<ConPoint>)> {
    let emb = GirthEmbedder::new(sol, inst)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = emb.sample_radius(&mut rng);
    Ok((r, emb.embed(r)?))
}

/// Constant in the expected-stretch bound `62 · diam(G) / girth(G)`.
pub const STRETCH_CONSTANT: f64 = 62.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairStat {
    pub a: usize,
    pub b: usize,
    pub delta: f64,
    pub mean_ratio: f64,
    pub std_error: f64,
}

/// Number of samples on which each claim fired although its premises held.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimCounts {
    pub g_tree: usize,
    pub g_proj: usize,
    pub g_close: usize,
    pub far_pair: usize,
}

impl ClaimCounts {
    pub fn total(&self) -> usize {
        self.g_tree + self.g_proj + self.g_close + self.far_pair
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub girth: f64,
    pub diameter: f64,
    /// `62 · diam / girth`.
    pub bound: f64,
    pub samples: usize,
    pub pairs: Vec<PairStat>,
    pub claims: ClaimCounts,
    /// Pairs whose mean ratio exceeds `bound + 3 · std_error`.
    pub bound_violations: usize,
}

/// One sampled embedding, summarized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub r: f64,
    /// `ℓ^con(φ(F), φ(F')) / δ(F, F')` for every pair with `δ > 0`, in pair order.
    pub ratios: Vec<f64>,
    pub violated_claims: Vec<String>,
}

/// Everything about the girth embedding of a solution that Monte Carlo
/// sampling over `r` needs. For each pair the distance takes one of four
/// values depending on which endpoints are near, so sampling is cheap.
pub struct GirthDiagnostics {
    pub embedder: GirthEmbedder,
    near: Vec<bool>,
    /// `(a, b, δ, near-near, a near only, b near only)`
    pairs: Vec<(usize, usize, f64, f64, f64, f64)>,
    g_tree_from: f64,
    g_proj_from: f64,
    g_close_from: f64,
}

impl GirthDiagnostics {
    pub fn new(sol: &Solution, inst: &Instance, dist: &DistanceMatrix) -> Result<Self> {
        let g = &inst.graph;
        let embedder = GirthEmbedder::new(sol, inst)?;
        let view = View::new(sol, inst)?;
        let count = embedder.cluster_count();
        let star = embedder.t_star_point();
        let near_at: Vec<Option<(ConPoint, f64)>> = (0..count).map(|f| embedder.near_placement(f)).collect();
        let a = &embedder.a;

        let g_tree_from = (0..count)
            .filter(|&f| matches!(embedder.placements[f], Placement::Failed { .. }))
            .map(|f| a[f])
            .fold(f64::INFINITY, f64::min);

        // g-proj: ℓ(φ(F), t) ≤ 2 (δ(F, F_t) − ν(F)) whenever δ(F, F_t) ≤ 6r
        let terminal_points: Vec<ConPoint> = inst
            .terminals
            .iter()
            .map(|&t| ConPoint::vertex(g, t))
            .collect::<Result<_>>()?;
        let g_proj_from = par::map_range(count, |f| {
            let Some((point, nu)) = near_at[f] else {
                return f64::INFINITY;
            };
            let row = view.to_terminals(f);
            let worst = terminal_points
                .iter()
                .zip(&row)
                .filter(|(tp, &d)| con_distance(g, dist, &point, tp) > 2.0 * (d - nu) + EPS)
                .map(|(_, &d)| d / 6.0)
                .fold(f64::INFINITY, f64::min);
            a[f].max(worst)
        })
        .into_iter()
        .fold(f64::INFINITY, f64::min);

        let index: Vec<(usize, usize)> = (0..count).flat_map(|x| (x + 1..count).map(move |y| (x, y))).collect();
        let pairs = par::map_slice(&index, |&(x, y)| {
            let d = sol.delta.get(x, y);
            let px = near_at[x].map(|p| p.0);
            let py = near_at[y].map(|p| p.0);
            let nn = match (px, py) {
                (Some(p), Some(q)) => con_distance(g, dist, &p, &q),
                _ => f64::NAN,
            };
            let nf = px.map_or(f64::NAN, |p| con_distance(g, dist, &p, &star));
            let fnr = py.map_or(f64::NAN, |q| con_distance(g, dist, &star, &q));
            (x, y, d, nn, nf, fnr)
        });
        let g_close_from = pairs
            .iter()
            .filter(|p| p.3 > 2.0 * p.2 + EPS)
            .map(|p| a[p.0].max(a[p.1]).max(p.2))
            .fold(f64::INFINITY, f64::min);
        let near = near_at.iter().map(Option::is_some).collect();
        Ok(GirthDiagnostics {
            embedder,
            near,
            pairs,
            g_tree_from,
            g_proj_from,
            g_close_from,
        })
    }

    fn is_near(&self, f: usize, r: f64) -> bool {
        self.near[f] && self.embedder.a[f] <= r + EPS
    }

    fn pair_distance(&self, p: &(usize, usize, f64, f64, f64, f64), r: f64) -> f64 {
        match (self.is_near(p.0, r), self.is_near(p.1, r)) {
            (true, true) => p.3,
            (true, false) => p.4,
            (false, true) => p.5,
            (false, false) => 0.0,
        }
    }

    fn fired(&self, r: f64) -> ClaimCounts {
        let hit = |from: f64| usize::from(from <= r + EPS);
        ClaimCounts {
            g_tree: hit(self.g_tree_from),
            g_proj: hit(self.g_proj_from),
            g_close: hit(self.g_close_from),
            far_pair: 0,
        }
    }

    /// Ratios and fired claims for a single radius.
    pub fn sample(&self, r: f64) -> SampleSummary {
        let ratios = self
            .pairs
            .iter()
            .filter(|p| p.2 > EPS)
            .map(|p| self.pair_distance(p, r) / p.2)
            .collect();
        let c = self.fired(r);
        let mut violated_claims = Vec::new();
        for (name, count) in [("g-tree", c.g_tree), ("g-proj", c.g_proj), ("g-close", c.g_close)] {
            if count > 0 {
                violated_claims.push(name.to_string());
            }
        }
        SampleSummary { r, ratios, violated_claims }
    }

    pub fn radii(&self, samples: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..samples).map(|_| self.embedder.sample_radius(&mut rng)).collect()
    }

    /// Draws `samples` radii and aggregates per-pair stretch and claim firings.
    pub fn monte_carlo(&self, samples: usize, seed: u64) -> MonteCarloReport {
        let radii = self.radii(samples, seed);
        let emb = &self.embedder;
        let bound = STRETCH_CONSTANT * emb.diameter / emb.girth;
        let a = &emb.a;
        let stats: Vec<(Option<PairStat>, usize)> = par::map_slice(&self.pairs, |p| {
            let (mut sum, mut sq, mut far_pair) = (0.0, 0.0, 0);
            for &r in &radii {
                let value = self.pair_distance(p, r);
                // both far: r ≤ A_F ≤ A_F' forces φ(F) = φ(F') = t*
                if r <= a[p.0].min(a[p.1]) - EPS && value > EPS {
                    far_pair += 1;
                }
                if p.2 > EPS {
                    let ratio = value / p.2;
                    sum += ratio;
                    sq += ratio * ratio;
                }
            }
            if p.2 <= EPS || radii.is_empty() {
                return (None, far_pair);
            }
            let m = radii.len() as f64;
            let mean = sum / m;
            let var = if m > 1.0 { ((sq - m * mean * mean) / (m - 1.0)).max(0.0) } else { 0.0 };
            let stat = PairStat {
                a: p.0,
                b: p.1,
                delta: p.2,
                mean_ratio: mean,
                std_error: (var / m).sqrt(),
            };
            (Some(stat), far_pair)
        });
        let mut claims = ClaimCounts::default();
        for &r in &radii {
            let c = self.fired(r);
            claims.g_tree += c.g_tree;
            claims.g_proj += c.g_proj;
            claims.g_close += c.g_close;
        }
        claims.far_pair = stats.iter().map(|s| s.1).sum();
        let pairs: Vec<PairStat> = stats.into_iter().filter_map(|s| s.0).collect();
        let bound_violations = pairs
            .iter()
            .filter(|p| p.mean_ratio > bound + 3.0 * p.std_error + EPS)
            .count();
        MonteCarloReport {
            girth: emb.girth,
            diameter: emb.diameter,
            bound,
            samples,
            pairs,
            claims,
            bound_violations,
        }
    }
}

/// Result of [`round_to_canonical`].
#[derive(Clone, Debug, PartialEq)]
pub struct Rounding {
    pub canonical: CanonicalSolution,
    /// Rounded center of every original cluster.
    pub centers: Vec<usize>,
    /// Original cluster to cluster of `canonical`.
    pub merge_map: Vec<usize>,
    /// Pairs of non-terminal clusters that rounded to the same vertex.
    pub collisions: Vec<(usize, usize)>,
    /// `(cluster, terminal vertex)`: a non-terminal cluster rounded onto a
    /// terminal and was merged into that terminal's cluster.
    pub terminal_clashes: Vec<(usize, usize)>,
}

/// Rounds every point to the nearer endpoint of its edge and merges
/// clusters that land on the same vertex.
pub fn round_to_canonical(points: &[ConPoint], sol: &Solution, inst: &Instance) -> Result<Rounding> {
    let count = sol.partition.cluster_count();
    if points.len() != count {
        return Err(Error::DimensionMismatch {
            expected: count,
            found: points.len(),
        });
    }
    let g = &inst.graph;
    let tc = sol.partition.terminal_clusters(inst)?;
    let mut is_terminal_cluster = vec![false; count];
    for &c in &tc {
        is_terminal_cluster[c] = true;
    }
    let centers: Vec<usize> = points.iter().map(|p| p.nearer_endpoint(g)).collect();
    let mut first_at = vec![usize::MAX; g.n()];
    for &c in &tc {
        first_at[centers[c]] = c;
    }
    let mut collisions = Vec::new();
    let mut terminal_clashes = Vec::new();
    for f in 0..count {
        if is_terminal_cluster[f] {
            continue;
        }
        let v = centers[f];
        match first_at[v] {
            usize::MAX => first_at[v] = f,
            owner if is_terminal_cluster[owner] => terminal_clashes.push((f, v)),
            owner => collisions.push((owner, f)),
        }
    }
    let map: Vec<usize> = (0..g.n()).map(|v| centers[sol.partition.cluster_of(v)]).collect();
    let canonical = CanonicalSolution::from_vertex_map(&map, inst)?;
    let merge_map = (0..count)
        .map(|f| canonical.centers.binary_search(&centers[f]).expect("every center survives"))
        .collect();
    Ok(Rounding {
        canonical,
        centers,
        merge_map,
        collisions,
        terminal_clashes,
    })
}
