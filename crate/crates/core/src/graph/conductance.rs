use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::paths::bfs_hops;
use super::Graph;
use crate::error::{Error, Result};

/// Largest vertex count for which [`conductance_estimate`] enumerates subsets.
pub const DEFAULT_EXACT_THRESHOLD: usize = 20;

const POWER_ITERATIONS: usize = 3000;
const POWER_TOL: f64 = 1e-12;

/// An interval `[lower, upper]` for the conductance. Volumes are vertex
/// degrees and cuts count edges, so capacities play no role.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConductanceBounds {
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
}

fn check(g: &Graph) -> Result<()> {
    if g.n() < 2 {
        return Err(Error::InvalidArgument("conductance needs at least two vertices".into()));
    }
    let hops = bfs_hops(g, 0);
    match hops.iter().position(|&h| h == usize::MAX) {
        Some(vertex) => Err(Error::DisconnectedGraph { from: 0, vertex }),
        None => Ok(()),
    }
}

/// Exact conductance by Gray-code enumeration of every subset that avoids
/// the last vertex (complements cover the rest).
pub fn exact_conductance(g: &Graph) -> Result<f64> {
    check(g)?;
    let n = g.n();
    if n > 40 {
        return Err(Error::InvalidArgument(format!("exact conductance on {n} vertices is infeasible")));
    }
    let total = 2.0 * g.m() as f64;
    let mut inside = vec![false; n];
    let (mut cut, mut vol) = (0i64, 0i64);
    let mut best = f64::INFINITY;
    for i in 1u64..(1u64 << (n - 1)) {
        let v = i.trailing_zeros() as usize;
        let mut toward_s = 0i64;
        for &(w, _) in g.neighbors(v) {
            if inside[w] {
                toward_s += 1;
            }
        }
        let deg = g.degree(v) as i64;
        if inside[v] {
            inside[v] = false;
            cut -= deg - 2 * toward_s;
            vol -= deg;
        } else {
            inside[v] = true;
            cut += deg - 2 * toward_s;
            vol += deg;
        }
        let denom = (vol as f64).min(total - vol as f64);
        if denom > 0.0 {
            best = best.min(cut as f64 / denom);
        }
    }
    Ok(best)
}

/// Conductance interval.
///
/// Up to `exact_threshold` vertices this enumerates subsets and the interval
/// collapses to a point. Beyond it, the second eigenvalue `λ₂` of the
/// normalized Laplacian is estimated by deflated power iteration; the lower
/// end is `λ₂/2` and the upper end is the best sweep cut of the eigenvector
/// estimate. The lower end is clamped to the upper one.
pub fn conductance_estimate(g: &Graph, exact_threshold: usize) -> Result<ConductanceBounds> {
    check(g)?;
    if g.n() <= exact_threshold.min(40) {
        let phi = exact_conductance(g)?;
        return Ok(ConductanceBounds {
            lower: phi,
            upper: phi,
            exact: true,
        });
    }
    let (lambda2, vector) = second_eigenpair(g);
    let upper = sweep_cut(g, &vector);
    Ok(ConductanceBounds {
        lower: (lambda2 / 2.0).clamp(0.0, upper),
        upper,
        exact: false,
    })
}

/// Power iteration on the lazy walk operator `(I + D^-1/2 A D^-1/2) / 2`
/// restricted to the complement of its top eigenvector `D^1/2 1`.
fn second_eigenpair(g: &Graph) -> (f64, Vec<f64>) {
    let n = g.n();
    let sqrt_deg: Vec<f64> = (0..n).map(|v| (g.degree(v) as f64).sqrt()).collect();
    let top_norm = sqrt_deg.iter().map(|x| x * x).sum::<f64>().sqrt();
    let top: Vec<f64> = sqrt_deg.iter().map(|x| x / top_norm).collect();

    let deflate = |x: &mut [f64]| {
        let dot: f64 = x.iter().zip(&top).map(|(a, b)| a * b).sum();
        for (xi, ti) in x.iter_mut().zip(&top) {
            *xi -= dot * ti;
        }
    };
    let normalize = |x: &mut [f64]| {
        let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 0.0 {
            x.iter_mut().for_each(|a| *a /= norm);
        }
    };
    let apply = |x: &[f64], out: &mut [f64]| {
        for v in 0..n {
            let mut acc = 0.0;
            for &(w, _) in g.neighbors(v) {
                acc += x[w] / (sqrt_deg[v] * sqrt_deg[w]);
            }
            out[v] = 0.5 * (x[v] + acc);
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(0x00c0_ffee);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    deflate(&mut x);
    normalize(&mut x);
    let mut y = vec![0.0; n];
    let mut mu = 0.0;
    for _ in 0..POWER_ITERATIONS {
        apply(&x, &mut y);
        deflate(&mut y);
        let next: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        normalize(&mut y);
        std::mem::swap(&mut x, &mut y);
        let done = (next - mu).abs() < POWER_TOL;
        mu = next;
        if done {
            break;
        }
    }
    let lambda2 = (2.0 * (1.0 - mu)).max(0.0);
    let embedding = x.iter().zip(&sqrt_deg).map(|(a, s)| a / s).collect();
    (lambda2, embedding)
}

/// Best prefix cut when vertices are ordered by `score` (ties by id).
fn sweep_cut(g: &Graph, score: &[f64]) -> f64 {
    let n = g.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score[a].total_cmp(&score[b]).then(a.cmp(&b)));
    let total = 2.0 * g.m() as f64;
    let mut inside = vec![false; n];
    let (mut cut, mut vol) = (0i64, 0i64);
    let mut best = f64::INFINITY;
    for &v in &order[..n - 1] {
        let toward_s = g.neighbors(v).iter().filter(|&&(w, _)| inside[w]).count() as i64;
        let deg = g.degree(v) as i64;
        inside[v] = true;
        cut += deg - 2 * toward_s;
        vol += deg;
        let denom = (vol as f64).min(total - vol as f64);
        if denom > 0.0 {
            best = best.min(cut as f64 / denom);
        }
    }
    best
}
