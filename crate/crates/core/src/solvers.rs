//! The graph-metric LP baseline, exhaustive oracles for tiny instances and a
//! local search over canonical solutions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{distances_from, DistanceMatrix};
use crate::instance::Instance;
use crate::solution::CanonicalSolution;
use crate::{par, EPS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveBudget {
    /// Largest number of complete assignments the exhaustive solvers may visit.
    pub max_assignments: u64,
    /// Move evaluations per local-search restart.
    pub max_iterations: u64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolveBudget {
    fn default() -> Self {
        SolveBudget {
            max_assignments: 10_000_000,
            max_iterations: 100_000,
            restarts: 8,
            seed: 0,
        }
    }
}

/// `Σ_{(u,v) ∈ E} c(u,v) · dist(u,v)`: the cost of the graph metric itself,
/// a feasible point of the semi-metric relaxation.
pub fn lp_feasible_value(inst: &Instance) -> Result<f64> {
    let g = &inst.graph;
    if let Some(len) = g.uniform_length() {
        if len > 0.0 {
            return Ok(g.edges().iter().map(|e| e.capacity * len).sum());
        }
    }
    let rows = par::map_range(g.n(), |u| {
        if g.neighbors(u).iter().any(|&(w, _)| w > u) {
            Some(distances_from(g, u))
        } else {
            None
        }
    });
    let mut total = 0.0;
    for e in g.edges() {
        let (lo, hi) = e.ordered();
        let d = rows[lo].as_ref().map_or(f64::INFINITY, |r| r[hi]);
        if !d.is_finite() {
            return Err(Error::DisconnectedGraph { from: lo, vertex: hi });
        }
        total += e.capacity * d;
    }
    Ok(total)
}

fn checked_power(base: usize, exp: usize) -> u128 {
    (0..exp).try_fold(1u128, |acc, _| acc.checked_mul(base as u128)).unwrap_or(u128::MAX)
}

fn non_terminals(inst: &Instance) -> Vec<usize> {
    let mut is_terminal = vec![false; inst.n()];
    for &t in &inst.terminals {
        is_terminal[t] = true;
    }
    (0..inst.n()).filter(|&v| !is_terminal[v]).collect()
}

/// Cost of the vertex map `f` with `δ` the graph distance between images.
fn map_cost(inst: &Instance, dist: &DistanceMatrix, f: &[usize]) -> f64 {
    inst.graph
        .edges()
        .iter()
        .map(|e| e.capacity * dist.get(f[e.u], f[e.v]))
        .sum()
}

/// Runs an odometer over `choices[i]` for each position, calling `visit`
/// with the current digits; later positions turn fastest.
fn odometer(choices: &[Vec<usize>], mut visit: impl FnMut(&[usize])) {
    let mut digit = vec![0usize; choices.len()];
    let mut current: Vec<usize> = choices.iter().map(|c| c[0]).collect();
    loop {
        visit(&current);
        let mut i = choices.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            digit[i] += 1;
            if digit[i] < choices[i].len() {
                current[i] = choices[i][digit[i]];
                break;
            }
            digit[i] = 0;
            current[i] = choices[i][0];
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroExtension {
    /// Terminal index assigned to each vertex.
    pub assignment: Vec<usize>,
    pub cost: f64,
}

/// Exact 0-extension by enumerating all `k^(n−k)` maps of the non-terminals.
pub fn brute_zero_ext(inst: &Instance, budget: &SolveBudget) -> Result<ZeroExtension> {
    let free = non_terminals(inst);
    let k = inst.k();
    let required = checked_power(k, free.len());
    if required > budget.max_assignments as u128 {
        return Err(Error::BudgetExceeded {
            required,
            budget: budget.max_assignments,
        });
    }
    let dist = DistanceMatrix::all_pairs(&inst.graph)?;
    let mut f: Vec<usize> = (0..inst.n()).collect();
    let choices = vec![inst.terminals.clone(); free.len()];
    let mut best = (f64::INFINITY, f.clone());
    odometer(&choices, |images| {
        for (&v, &t) in free.iter().zip(images) {
            f[v] = t;
        }
        let c = map_cost(inst, &dist, &f);
        if c < best.0 - EPS {
            best = (c, f.clone());
        }
    });
    let assignment = best
        .1
        .iter()
        .map(|&t| inst.terminal_index(t).expect("every image is a terminal"))
        .collect();
    Ok(ZeroExtension {
        assignment,
        cost: best.0,
    })
}

/// Exact minimum-cost canonical solution with at most `f_k` clusters.
///
/// Canonical solutions are maps `f: V → V` fixing the terminals, with the
/// clusters being the fibres. Every non-terminal tries itself first and then
/// the other vertices in id order; only strict improvements replace the
/// incumbent. With `f_k = k` the images are restricted to terminals.
pub fn brute_canonical(inst: &Instance, f_k: usize, budget: &SolveBudget) -> Result<(CanonicalSolution, f64)> {
    let k = inst.k();
    if f_k < k {
        return Err(Error::InvalidArgument(format!("f_k = {f_k} is below k = {k}")));
    }
    let free = non_terminals(inst);
    let n = inst.n();
    let choices: Vec<Vec<usize>> = if f_k == k {
        vec![inst.terminals.clone(); free.len()]
    } else {
        free.iter()
            .map(|&v| std::iter::once(v).chain((0..n).filter(|&w| w != v)).collect())
            .collect()
    };
    let required = choices
        .iter()
        .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
        .unwrap_or(u128::MAX);
    if required > budget.max_assignments as u128 {
        return Err(Error::BudgetExceeded {
            required,
            budget: budget.max_assignments,
        });
    }
    let dist = DistanceMatrix::all_pairs(&inst.graph)?;
    let mut is_terminal = vec![false; n];
    for &t in &inst.terminals {
        is_terminal[t] = true;
    }
    let mut f: Vec<usize> = (0..n).collect();
    let mut mark = vec![usize::MAX; n];
    let mut stamp = 0usize;
    let mut best: Option<(f64, Vec<usize>)> = None;
    odometer(&choices, |images| {
        stamp += 1;
        let mut extra = 0;
        for (&v, &c) in free.iter().zip(images) {
            f[v] = c;
            if !is_terminal[c] && mark[c] != stamp {
                mark[c] = stamp;
                extra += 1;
            }
        }
        if k + extra > f_k {
            return;
        }
        let c = map_cost(inst, &dist, &f);
        if best.as_ref().is_none_or(|b| c < b.0 - EPS) {
            best = Some((c, f.clone()));
        }
    });
    let (cost, map) = best.expect("the all-terminal maps always fit");
    Ok((CanonicalSolution::from_vertex_map(&map, inst)?, cost))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalSearchResult {
    pub solution: CanonicalSolution,
    pub cost: f64,
    pub initial_cost: f64,
    /// Move evaluations summed over restarts.
    pub iterations: u64,
    pub best_restart: usize,
}

/// Counts move evaluations; `tick` yields `None` once the limit is hit.
struct Clock {
    used: u64,
    limit: u64,
}

impl Clock {
    fn tick(&mut self) -> Option<()> {
        if self.used >= self.limit {
            return None;
        }
        self.used += 1;
        Some(())
    }
}

struct SearchState<'a> {
    inst: &'a Instance,
    dist: &'a DistanceMatrix,
    center: Vec<usize>,
    slot_of: Vec<usize>,
    members: Vec<Vec<usize>>,
    pos: Vec<usize>,
    /// slot a vertex is the center of, if any
    centered: Vec<usize>,
    /// Steiner slots whose cluster emptied; their centers are free again.
    empty: Vec<usize>,
    is_terminal: Vec<bool>,
    cost: f64,
}

impl<'a> SearchState<'a> {
    fn new(inst: &'a Instance, dist: &'a DistanceMatrix, centers: Vec<usize>) -> Self {
        let n = inst.n();
        let mut centered = vec![usize::MAX; n];
        for (s, &c) in centers.iter().enumerate() {
            centered[c] = s;
        }
        let mut is_terminal = vec![false; n];
        for &t in &inst.terminals {
            is_terminal[t] = true;
        }
        // nearest center, ties to the smaller center id
        let slot_of: Vec<usize> = par::map_range(n, |v| {
            if centered[v] != usize::MAX {
                return centered[v];
            }
            let row = dist.row(v);
            (0..centers.len())
                .min_by(|&a, &b| row[centers[a]].total_cmp(&row[centers[b]]).then(centers[a].cmp(&centers[b])))
                .expect("at least one center")
        });
        let mut members = vec![Vec::new(); centers.len()];
        let mut pos = vec![0; n];
        for v in 0..n {
            pos[v] = members[slot_of[v]].len();
            members[slot_of[v]].push(v);
        }
        let mut state = SearchState {
            inst,
            dist,
            center: centers,
            slot_of,
            members,
            pos,
            centered,
            empty: Vec::new(),
            is_terminal,
            cost: 0.0,
        };
        state.cost = state.full_cost();
        state
    }

    fn full_cost(&self) -> f64 {
        self.inst
            .graph
            .edges()
            .iter()
            .map(|e| e.capacity * self.dist.get(self.center[self.slot_of[e.u]], self.center[self.slot_of[e.v]]))
            .sum()
    }

    /// Cost change when `v` joins a cluster centered at `new_c`.
    fn reassign_delta(&self, v: usize, new_c: usize) -> f64 {
        let g = &self.inst.graph;
        let old_c = self.center[self.slot_of[v]];
        g.neighbors(v)
            .iter()
            .map(|&(w, id)| {
                let cw = self.center[self.slot_of[w]];
                g.edge(id).capacity * (self.dist.get(new_c, cw) - self.dist.get(old_c, cw))
            })
            .sum()
    }

    fn move_vertex(&mut self, v: usize, to: usize) {
        let from = self.slot_of[v];
        let p = self.pos[v];
        self.members[from].swap_remove(p);
        if let Some(&moved) = self.members[from].get(p) {
            self.pos[moved] = p;
        }
        self.pos[v] = self.members[to].len();
        self.members[to].push(v);
        self.slot_of[v] = to;
        if self.members[from].is_empty() {
            // terminal clusters never empty, so this frees a Steiner center
            self.centered[self.center[from]] = usize::MAX;
            self.empty.push(from);
        }
    }

    /// Moves `v` into an empty slot recentered at `x`.
    fn open(&mut self, v: usize, x: usize) {
        let s = self.empty.pop().expect("an empty slot");
        self.center[s] = x;
        self.centered[x] = s;
        self.move_vertex(v, s);
    }

    /// Vertices near `v` (all vertices on small graphs) that center nothing.
    fn free_near(&self, v: usize) -> Vec<usize> {
        let n = self.inst.n();
        let mut out: Vec<usize> = if n <= 64 {
            (0..n).collect()
        } else {
            let mut c: Vec<usize> = std::iter::once(v)
                .chain(self.inst.graph.neighbors(v).iter().map(|&(w, _)| w))
                .collect();
            c.sort_unstable();
            c.dedup();
            c
        };
        out.retain(|&x| self.centered[x] == usize::MAX);
        out
    }

    fn recenter_delta(&self, s: usize, x: usize) -> f64 {
        let g = &self.inst.graph;
        let old = self.center[s];
        let mut delta = 0.0;
        for &u in &self.members[s] {
            for &(w, id) in g.neighbors(u) {
                let sw = self.slot_of[w];
                if sw == s {
                    continue;
                }
                let cw = self.center[sw];
                delta += g.edge(id).capacity * (self.dist.get(x, cw) - self.dist.get(old, cw));
            }
        }
        delta
    }

    fn recenter(&mut self, s: usize, x: usize) {
        self.centered[self.center[s]] = usize::MAX;
        self.centered[x] = s;
        self.center[s] = x;
    }

    fn swap_candidates(&self, s: usize) -> Vec<usize> {
        let n = self.inst.n();
        let mut out: Vec<usize> = if n <= 64 {
            (0..n).collect()
        } else {
            let g = &self.inst.graph;
            let mut c: Vec<usize> = self.members[s]
                .iter()
                .flat_map(|&u| std::iter::once(u).chain(g.neighbors(u).iter().map(|&(w, _)| w)))
                .collect();
            c.sort_unstable();
            c.dedup();
            c
        };
        out.retain(|&x| self.centered[x] == usize::MAX);
        out
    }

    /// Clusters worth trying as targets for `vs`: all of them on small
    /// instances, otherwise those of the neighbors.
    fn targets(&self, vs: &[usize]) -> Vec<usize> {
        let slots = self.center.len();
        let mut t: Vec<usize> = if slots <= 64 {
            (0..slots).collect()
        } else {
            vs.iter()
                .flat_map(|&v| self.inst.graph.neighbors(v).iter().map(|&(w, _)| self.slot_of[w]))
                .collect()
        };
        t.sort_unstable();
        t.dedup();
        t.retain(|&s| !self.members[s].is_empty());
        t
    }

    fn merge_delta(&self, s: usize, t: usize) -> f64 {
        let g = &self.inst.graph;
        let (old, new) = (self.center[s], self.center[t]);
        let mut delta = 0.0;
        for &u in &self.members[s] {
            for &(w, id) in g.neighbors(u) {
                let sw = self.slot_of[w];
                if sw != s {
                    let cw = self.center[sw];
                    delta += g.edge(id).capacity * (self.dist.get(new, cw) - self.dist.get(old, cw));
                }
            }
        }
        delta
    }

    fn merge(&mut self, s: usize, t: usize) {
        while let Some(&u) = self.members[s].last() {
            self.move_vertex(u, t);
        }
    }

    /// Single-vertex moves, including into a freed slot.
    fn try_vertex(&mut self, v: usize, clock: &mut Clock) -> Option<bool> {
        let here = self.slot_of[v];
        for to in self.targets(&[v]) {
            if to == here {
                continue;
            }
            clock.tick()?;
            let d = self.reassign_delta(v, self.center[to]);
            if d < -EPS {
                self.move_vertex(v, to);
                self.cost += d;
                return Some(true);
            }
        }
        if self.empty.is_empty() {
            return Some(false);
        }
        for x in self.free_near(v) {
            clock.tick()?;
            let d = self.reassign_delta(v, x);
            if d < -EPS {
                self.open(v, x);
                self.cost += d;
                return Some(true);
            }
        }
        Some(false)
    }

    /// Moves `v` together with a neighbor from the same cluster.
    fn try_pair(&mut self, v: usize, clock: &mut Clock) -> Option<bool> {
        let here = self.slot_of[v];
        let mut partners: Vec<usize> = self
            .inst
            .graph
            .neighbors(v)
            .iter()
            .map(|&(w, _)| w)
            .filter(|&w| self.slot_of[w] == here && !self.is_terminal[w])
            .collect();
        partners.sort_unstable();
        partners.dedup();
        for w in partners {
            for to in self.targets(&[v, w]) {
                if to == here {
                    continue;
                }
                clock.tick()?;
                let first = self.reassign_delta(v, self.center[to]);
                self.move_vertex(v, to);
                let d = first + self.reassign_delta(w, self.center[to]);
                if d < -EPS {
                    self.move_vertex(w, to);
                    self.cost += d;
                    return Some(true);
                }
                self.move_vertex(v, here);
            }
        }
        Some(false)
    }

    /// Recentering and merging of a non-terminal cluster.
    fn try_cluster(&mut self, s: usize, clock: &mut Clock) -> Option<bool> {
        if self.members[s].is_empty() {
            return Some(false);
        }
        for x in self.swap_candidates(s) {
            clock.tick()?;
            let d = self.recenter_delta(s, x);
            if d < -EPS {
                self.recenter(s, x);
                self.cost += d;
                return Some(true);
            }
        }
        let members = self.members[s].clone();
        for t in self.targets(&members) {
            if t == s {
                continue;
            }
            clock.tick()?;
            let d = self.merge_delta(s, t);
            if d < -EPS {
                self.merge(s, t);
                self.cost += d;
                return Some(true);
            }
        }
        Some(false)
    }

    /// First-improvement descent; returns move evaluations used.
    fn descend(&mut self, rng: &mut ChaCha8Rng, max_iterations: u64) -> u64 {
        let mut clock = Clock {
            used: 0,
            limit: max_iterations,
        };
        let mut vertices: Vec<usize> = (0..self.inst.n()).filter(|&v| !self.is_terminal[v]).collect();
        let mut movable: Vec<usize> = (0..self.center.len())
            .filter(|&s| !self.is_terminal[self.center[s]])
            .collect();
        let _ = self.passes(rng, &mut vertices, &mut movable, &mut clock);
        clock.used
    }

    fn passes(
        &mut self,
        rng: &mut ChaCha8Rng,
        vertices: &mut [usize],
        movable: &mut [usize],
        clock: &mut Clock,
    ) -> Option<()> {
        loop {
            let mut improved = false;
            vertices.shuffle(rng);
            for &v in vertices.iter() {
                improved |= self.try_vertex(v, clock)?;
            }
            movable.shuffle(rng);
            for &s in movable.iter() {
                improved |= self.try_cluster(s, clock)?;
            }
            if !improved {
                for &v in vertices.iter() {
                    improved |= self.try_pair(v, clock)?;
                }
            }
            if !improved {
                return Some(());
            }
        }
    }

    /// Vertex map `v -> center of its cluster`, dropping empty slots.
    fn vertex_map(&self) -> Vec<usize> {
        (0..self.inst.n()).map(|v| self.center[self.slot_of[v]]).collect()
    }
}

/// Initial centers: the terminals, then the `f_k − k` non-terminals of
/// largest eccentricity (ties to the smaller id).
pub fn initial_centers(inst: &Instance, dist: &DistanceMatrix, f_k: usize) -> Vec<usize> {
    let mut rest = non_terminals(inst);
    let ecc: Vec<f64> = (0..inst.n()).map(|v| dist.row(v).iter().copied().fold(0.0, f64::max)).collect();
    rest.sort_by(|&a, &b| ecc[b].total_cmp(&ecc[a]).then(a.cmp(&b)));
    let extra = f_k.saturating_sub(inst.k()).min(rest.len());
    inst.terminals.iter().copied().chain(rest.into_iter().take(extra)).collect()
}

/// Local search over canonical solutions with at most `f_k` clusters.
///
/// Moves reassign a non-terminal vertex to another cluster (or to a fresh
/// cluster once an earlier move emptied one), move the center of a
/// non-terminal cluster to a vertex that is not a center, merge a
/// non-terminal cluster into another, and, when nothing else improves, move
/// two adjacent vertices of a cluster together. Each
/// restart scans moves in its own seeded order and accepts the first
/// improvement; the best restart wins.
pub fn local_search_canonical(inst: &Instance, f_k: usize, budget: &SolveBudget) -> Result<LocalSearchResult> {
    let dist = DistanceMatrix::all_pairs(&inst.graph)?;
    local_search_with(inst, &dist, f_k, budget)
}

/// [`local_search_canonical`] with a precomputed distance matrix of `G`.
pub fn local_search_with(
    inst: &Instance,
    dist: &DistanceMatrix,
    f_k: usize,
    budget: &SolveBudget,
) -> Result<LocalSearchResult> {
    if f_k < inst.k() {
        return Err(Error::InvalidArgument(format!("f_k = {f_k} is below k = {}", inst.k())));
    }
    let centers = initial_centers(inst, dist, f_k);
    let initial = SearchState::new(inst, dist, centers.clone());
    let initial_cost = initial.cost;
    let runs = par::map_range(budget.restarts.max(1), |i| {
        let mut state = SearchState::new(inst, dist, centers.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        rng.set_stream(i as u64);
        let used = state.descend(&mut rng, budget.max_iterations);
        (state.full_cost(), state.vertex_map(), used)
    });
    let iterations = runs.iter().map(|r| r.2).sum();
    let (best_restart, (_, map, _)) = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.0.cmp(&b.0)))
        .expect("at least one restart");
    let solution = CanonicalSolution::from_vertex_map(map, inst)?;
    let cost = solution.cost(inst)?;
    Ok(LocalSearchResult {
        solution,
        cost,
        initial_cost,
        iterations,
        best_restart,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[serde(rename = "brute-0ext")]
    BruteZeroExt,
    BruteCanonical,
    #[default]
    Local,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute-0ext" => Ok(Method::BruteZeroExt),
            "brute-canonical" => Ok(Method::BruteCanonical),
            "local" => Ok(Method::Local),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::BruteZeroExt => "brute-0ext",
            Method::BruteCanonical => "brute-canonical",
            Method::Local => "local",
        })
    }
}

/// Runs `method` and returns a canonical solution with its cost. A
/// 0-extension becomes the canonical solution centered at the terminals.
pub fn solve(inst: &Instance, method: Method, f_k: usize, budget: &SolveBudget) -> Result<(CanonicalSolution, f64)> {
    match method {
        Method::BruteZeroExt => {
            let z = brute_zero_ext(inst, budget)?;
            let map: Vec<usize> = z.assignment.iter().map(|&i| inst.terminals[i]).collect();
            Ok((CanonicalSolution::from_vertex_map(&map, inst)?, z.cost))
        }
        Method::BruteCanonical => brute_canonical(inst, f_k, budget),
        Method::Local => local_search_canonical(inst, f_k, budget).map(|r| (r.solution, r.cost)),
    }
}
