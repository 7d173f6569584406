//! Semi-metrics, terminal preservation, the average-distance feasibility
//! check and tight-span membership.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::graph::DistanceMatrix;
use crate::{par, EPS};

#[derive(Clone, Debug, PartialEq, Error, Serialize, Deserialize)]
pub enum MetricError {
    #[error("row {row} has {len} entries, expected {expected}")]
    NonSquare { row: usize, len: usize, expected: usize },
    #[error("entry ({i}, {j}) is negative or not finite")]
    Negative { i: usize, j: usize },
    #[error("diagonal entry {i} is nonzero")]
    NonzeroDiagonal { i: usize },
    #[error("entries ({i}, {j}) and ({j}, {i}) differ")]
    Asymmetric { i: usize, j: usize },
    #[error("d({i}, {j}) exceeds d({i}, {l}) + d({l}, {j})")]
    TriangleViolation { i: usize, j: usize, l: usize },
}

/// Checks the semi-metric axioms within [`EPS`].
///
/// Shape problems are reported first, then entry-wise problems in row-major
/// order, then the lexicographically first `(i, j, l)` with
/// `m[i][j] > m[i][l] + m[l][j]`.
pub fn validate_semimetric(m: &[Vec<f64>]) -> Result<(), MetricError> {
    let k = m.len();
    for (row, r) in m.iter().enumerate() {
        if r.len() != k {
            return Err(MetricError::NonSquare { row, len: r.len(), expected: k });
        }
    }
    for i in 0..k {
        for j in 0..k {
            let x = m[i][j];
            if !(x >= 0.0 && x.is_finite()) {
                return Err(MetricError::Negative { i, j });
            }
            if i == j && x > EPS {
                return Err(MetricError::NonzeroDiagonal { i });
            }
            if (x - m[j][i]).abs() > EPS {
                return Err(MetricError::Asymmetric { i: i.min(j), j: i.max(j) });
            }
        }
    }
    let witness = par::find_first(k, |i| {
        for j in 0..k {
            for l in 0..k {
                if m[i][j] > m[i][l] + m[l][j] + EPS {
                    return Some((i, j, l));
                }
            }
        }
        None
    });
    match witness {
        Some((i, j, l)) => Err(MetricError::TriangleViolation { i, j, l }),
        None => Ok(()),
    }
}

/// A validated semi-metric on `0..size`, stored densely.
///
/// Serializes as a JSON array of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SemiMetric {
    size: usize,
    entries: Vec<f64>,
}

impl SemiMetric {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        validate_semimetric(&rows)?;
        Ok(Self::from_rows_unchecked(rows))
    }

    fn from_rows_unchecked(rows: Vec<Vec<f64>>) -> Self {
        SemiMetric {
            size: rows.len(),
            entries: rows.into_iter().flatten().collect(),
        }
    }

    /// Builds `m[i][j] = f(i, j)` and validates it.
    pub fn from_fn(size: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self, MetricError> {
        Self::new((0..size).map(|i| (0..size).map(|j| f(i, j)).collect()).collect())
    }

    /// Restriction of a shortest-path matrix to `points`. Shortest-path
    /// distances are a metric, so no validation is needed.
    pub fn restrict(dist: &DistanceMatrix, points: &[usize]) -> Self {
        let entries = points
            .iter()
            .flat_map(|&a| points.iter().map(move |&b| dist.get(a, b)))
            .collect();
        SemiMetric { size: points.len(), entries }
    }

    /// Same as [`SemiMetric::restrict`], from per-point distance rows
    /// (`rows[i][v]` is the distance from `points[i]` to vertex `v`).
    pub fn restrict_rows(rows: &[Vec<f64>], points: &[usize]) -> Self {
        let entries = rows
            .iter()
            .flat_map(|row| points.iter().map(move |&b| row[b]))
            .collect();
        SemiMetric { size: points.len(), entries }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.size).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<Vec<f64>>> for SemiMetric {
    type Error = MetricError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        SemiMetric::new(rows)
    }
}

impl From<SemiMetric> for Vec<Vec<f64>> {
    fn from(m: SemiMetric) -> Self {
        m.to_rows()
    }
}

fn terminal_clusters_distinct(terminal_cluster: &[usize]) -> Result<()> {
    let mut owner = std::collections::HashMap::new();
    for (t, &c) in terminal_cluster.iter().enumerate() {
        if let Some(&first) = owner.get(&c) {
            return Err(Error::TerminalsMerged { first, second: t, cluster: c });
        }
        owner.insert(c, t);
    }
    Ok(())
}

fn check_shapes(delta: &SemiMetric, terminal_cluster: &[usize], d: &SemiMetric) -> Result<()> {
    if terminal_cluster.len() != d.size() {
        return Err(Error::DimensionMismatch {
            expected: d.size(),
            found: terminal_cluster.len(),
        });
    }
    if let Some(&c) = terminal_cluster.iter().find(|&&c| c >= delta.size()) {
        return Err(Error::DimensionMismatch {
            expected: delta.size(),
            found: c + 1,
        });
    }
    Ok(())
}

/// Whether `delta(F(t), F(t')) = D(t, t')` for every terminal pair, where
/// `terminal_cluster[t]` is the cluster holding terminal `t`.
pub fn check_terminal_preservation(delta: &SemiMetric, terminal_cluster: &[usize], d: &SemiMetric) -> Result<bool> {
    check_shapes(delta, terminal_cluster, d)?;
    terminal_clusters_distinct(terminal_cluster)?;
    let k = d.size();
    Ok((0..k).all(|i| {
        (0..k).all(|j| (delta.get(terminal_cluster[i], terminal_cluster[j]) - d.get(i, j)).abs() <= EPS)
    }))
}

/// The average-distance condition: the demand-weighted sum of cluster
/// distances between terminals is at least the demand-weighted sum of
/// terminal distances, up to `EPS` times the total demand.
pub fn check_agk_feasibility(
    delta: &SemiMetric,
    terminal_cluster: &[usize],
    d: &SemiMetric,
    demand: &[Vec<f64>],
) -> Result<bool> {
    check_shapes(delta, terminal_cluster, d)?;
    let k = d.size();
    if demand.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: demand.len() });
    }
    if let Some(row) = demand.iter().find(|r| r.len() != k) {
        return Err(Error::DimensionMismatch { expected: k, found: row.len() });
    }
    if demand.iter().flatten().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidArgument("demands must be nonnegative".into()));
    }
    let (mut lhs, mut rhs, mut total) = (0.0, 0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            let w = demand[i][j];
            lhs += w * delta.get(terminal_cluster[i], terminal_cluster[j]);
            rhs += w * d.get(i, j);
            total += w;
        }
    }
    Ok(lhs >= rhs - EPS * total.max(1.0))
}

/// Classification of a vector against the tight span of a metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    Member,
    /// Satisfies every pair constraint but coordinate `index` is tight with nobody.
    InPolytopeNotMinimal { index: usize },
    /// `x_i + x_j < D(i, j)`; the lexicographically first such pair (`i ≤ j`).
    OutsidePolytope { i: usize, j: usize },
}

/// Membership in the tight span `{x : x_i + x_j ≥ D(i,j), each i tight with some j}`.
/// Pairs include `i = j`, so a coordinate at 0 is tight with itself.
pub fn tight_span_membership(x: &[f64], d: &SemiMetric) -> Result<Membership> {
    let k = d.size();
    if x.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: x.len() });
    }
    for i in 0..k {
        for j in i..k {
            if x[i] + x[j] < d.get(i, j) - EPS {
                return Ok(Membership::OutsidePolytope { i, j });
            }
        }
    }
    for i in 0..k {
        if !(0..k).any(|j| (x[i] + x[j] - d.get(i, j)).abs() <= EPS) {
            return Ok(Membership::InPolytopeNotMinimal { index: i });
        }
    }
    Ok(Membership::Member)
}

/// A certified member of the tight span of some terminal metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TightSpanPoint {
    pub coords: Vec<f64>,
}

impl TightSpanPoint {
    pub fn new(coords: Vec<f64>, d: &SemiMetric) -> Result<Self> {
        match tight_span_membership(&coords, d)? {
            Membership::Member => Ok(TightSpanPoint { coords }),
            other => Err(Error::NotAMember(other)),
        }
    }

    pub fn linf(&self, other: &TightSpanPoint) -> f64 {
        linf(&self.coords, &other.coords)
    }
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `x^{t_i}`: the distances from terminal `i` to every terminal.
pub fn terminal_vector(d: &SemiMetric, i: usize) -> Result<TightSpanPoint> {
    if i >= d.size() {
        return Err(Error::VertexOutOfRange { vertex: i, n: d.size() });
    }
    TightSpanPoint::new(d.row(i).to_vec(), d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(dist: f64) -> SemiMetric {
        SemiMetric::new(vec![vec![0.0, dist], vec![dist, 0.0]]).unwrap()
    }

    #[test]
    fn validation_examples() {
        assert!(validate_semimetric(&[vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]]).is_ok());
        let bad = vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]];
        assert_eq!(
            validate_semimetric(&bad),
            Err(MetricError::TriangleViolation { i: 0, j: 2, l: 1 })
        );
        assert!(matches!(
            validate_semimetric(&[vec![0.0, 1.0], vec![0.0]]),
            Err(MetricError::NonSquare { row: 1, .. })
        ));
        assert_eq!(
            validate_semimetric(&[vec![0.0, 1.0], vec![2.0, 0.0]]),
            Err(MetricError::Asymmetric { i: 0, j: 1 })
        );
        assert_eq!(
            validate_semimetric(&[vec![0.0, -1.0], vec![-1.0, 0.0]]),
            Err(MetricError::Negative { i: 0, j: 1 })
        );
    }

    #[test]
    fn json_is_a_dense_matrix() {
        let m = pair(2.0);
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(text, "[[0.0,2.0],[2.0,0.0]]");
        let back: SemiMetric = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<SemiMetric>("[[0.0,1.0],[2.0,0.0]]").is_err());
    }

    #[test]
    fn preservation_examples() {
        let d = SemiMetric::new(vec![vec![0.0, 2.0, 3.0], vec![2.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]]).unwrap();
        assert!(check_terminal_preservation(&d, &[0, 1, 2], &d).unwrap());
        let mut rows = d.to_rows();
        rows[0][1] += 0.5;
        rows[1][0] += 0.5;
        let bumped = SemiMetric::new(rows).unwrap();
        assert!(!check_terminal_preservation(&bumped, &[0, 1, 2], &d).unwrap());
        assert!(matches!(
            check_terminal_preservation(&d, &[0, 1, 1], &d),
            Err(Error::TerminalsMerged { first: 1, second: 2, cluster: 1 })
        ));
    }

    #[test]
    fn agk_examples() {
        let d = pair(2.0);
        let uniform = vec![vec![1.0; 2]; 2];
        assert!(check_agk_feasibility(&d, &[0, 1], &d, &uniform).unwrap());
        assert!(check_agk_feasibility(&pair(4.0), &[0, 1], &d, &uniform).unwrap());
        assert!(!check_agk_feasibility(&pair(1.0), &[0, 1], &d, &uniform).unwrap());
        assert!(matches!(
            check_agk_feasibility(&d, &[0, 1], &d, &[vec![1.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn membership_examples() {
        let d = pair(2.0);
        assert_eq!(tight_span_membership(&[1.0, 1.0], &d).unwrap(), Membership::Member);
        assert_eq!(
            tight_span_membership(&[2.0, 2.0], &d).unwrap(),
            Membership::InPolytopeNotMinimal { index: 0 }
        );
        assert_eq!(
            tight_span_membership(&[0.5, 1.0], &d).unwrap(),
            Membership::OutsidePolytope { i: 0, j: 1 }
        );
        assert!(tight_span_membership(&[1.0], &d).is_err());
    }

    #[test]
    fn terminal_vectors_are_members() {
        let d = pair(2.0);
        assert_eq!(terminal_vector(&d, 0).unwrap().coords, vec![0.0, 2.0]);
        let d3 = SemiMetric::new(vec![vec![0.0, 2.0, 3.0], vec![2.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]]).unwrap();
        for i in 0..3 {
            let x = terminal_vector(&d3, i).unwrap();
            assert_eq!(x.coords[i], 0.0);
        }
    }
}
