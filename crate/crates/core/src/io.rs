//! On-disk formats: the edge list with its JSON sidecar, and solution files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::instance::{instance_diagnostics, terminal_count, Instance, InstanceConfig, InstanceDiagnostics};
use crate::metric::SemiMetric;
use crate::solution::{CanonicalSolution, Partition, Solution};

/// A deleted edge of `G'`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemovedEdge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
    pub capacity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub seed: u64,
    pub config: InstanceConfig,
    pub terminals: Vec<usize>,
    #[serde(rename = "D")]
    pub terminal_metric: SemiMetric,
    /// Removed edges in removal order.
    pub removal_log: Vec<RemovedEdge>,
    pub diagnostics: Option<InstanceDiagnostics>,
}

/// Sidecar path for an edge-list path: `graph.txt` gives `graph.txt.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn sidecar_for(inst: &Instance, diagnostics: Option<InstanceDiagnostics>) -> Sidecar {
    Sidecar {
        seed: inst.seed(),
        config: inst.config,
        terminals: inst.terminals.clone(),
        terminal_metric: inst.terminal_metric.clone(),
        removal_log: inst
            .removal_log
            .iter()
            .map(|&id| {
                let e = inst.raw_graph.edge(id);
                RemovedEdge {
                    u: e.u,
                    v: e.v,
                    length: e.length,
                    capacity: e.capacity,
                }
            })
            .collect(),
        diagnostics,
    }
}

/// Writes `G` as an edge list to `path` and the sidecar next to it.
pub fn save_instance(inst: &Instance, path: &Path, with_diagnostics: bool) -> Result<()> {
    fs::write(path, inst.graph.to_edge_list())?;
    let diagnostics = with_diagnostics.then(|| instance_diagnostics(inst));
    let sidecar = sidecar_for(inst, diagnostics);
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

/// Reads an edge list and, if present, its sidecar. `G'` is rebuilt by
/// appending the logged edges to `G`. Without a sidecar the terminals are
/// the first `terminal_count(n)` vertices and nothing was removed.
pub fn load_instance(path: &Path) -> Result<Instance> {
    let graph = Graph::from_edge_list(&fs::read_to_string(path)?)?;
    let side = sidecar_path(path);
    if !side.exists() {
        let n = graph.n();
        let terminals = (0..terminal_count(n)?).collect();
        return Instance::from_parts(InstanceConfig::new(n, 0), graph, terminals, Vec::new());
    }
    let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(side)?)?;
    if sidecar.config.n != graph.n() {
        return Err(Error::DimensionMismatch {
            expected: sidecar.config.n,
            found: graph.n(),
        });
    }
    let m = graph.m();
    let mut edges: Vec<Edge> = graph.edges().to_vec();
    edges.extend(sidecar.removal_log.iter().map(|r| Edge::new(r.u, r.v, r.length, r.capacity)));
    let raw = Graph::new(graph.n(), edges)?;
    let removed = (m..raw.m()).collect();
    let inst = Instance::from_parts(sidecar.config, raw, sidecar.terminals, removed)?;
    if inst.terminal_metric != sidecar.terminal_metric {
        return Err(Error::InvalidArgument("sidecar D does not match the graph".into()));
    }
    Ok(inst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaTag {
    Canonical,
}

/// Either an explicit cluster metric or the tag `"canonical"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Delta {
    Matrix(Vec<Vec<f64>>),
    Tag(DeltaTag),
}

/// `{assignment, delta, centers}`; `centers` is required when `delta` is
/// `"canonical"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub assignment: Vec<usize>,
    pub delta: Delta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<usize>>,
}

pub enum ParsedSolution {
    Canonical(CanonicalSolution),
    General(Solution),
}

impl SolutionFile {
    pub fn from_canonical(cs: &CanonicalSolution) -> Self {
        SolutionFile {
            assignment: cs.partition.assignment().to_vec(),
            delta: Delta::Tag(DeltaTag::Canonical),
            centers: Some(cs.centers.clone()),
        }
    }

    pub fn from_solution(sol: &Solution) -> Self {
        SolutionFile {
            assignment: sol.partition.assignment().to_vec(),
            delta: Delta::Matrix(sol.delta.to_rows()),
            centers: None,
        }
    }

    /// Validated against `inst`.
    pub fn parse(&self, inst: &Instance) -> Result<ParsedSolution> {
        let partition = Partition::new(self.assignment.clone())?;
        match &self.delta {
            Delta::Tag(DeltaTag::Canonical) => {
                let centers = self
                    .centers
                    .clone()
                    .ok_or_else(|| Error::InvalidSolution("canonical delta needs centers".into()))?;
                Ok(ParsedSolution::Canonical(CanonicalSolution::new(partition, centers, inst)?))
            }
            Delta::Matrix(rows) => {
                let sol = Solution {
                    partition,
                    delta: SemiMetric::new(rows.clone())?,
                };
                sol.validate(inst)?;
                Ok(ParsedSolution::General(sol))
            }
        }
    }

    /// Validates and returns the cost.
    pub fn score(&self, inst: &Instance) -> Result<f64> {
        match self.parse(inst)? {
            ParsedSolution::Canonical(cs) => cs.cost(inst),
            ParsedSolution::General(sol) => sol.cost(inst),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::build_instance;

    #[test]
    fn instance_survives_a_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        let inst = build_instance(InstanceConfig::new(128, 4)).unwrap();
        assert!(!inst.removal_log.is_empty());
        save_instance(&inst, &path, false).unwrap();
        let back = load_instance(&path).unwrap();
        assert_eq!(back.graph.edges(), inst.graph.edges());
        assert_eq!(back.terminals, inst.terminals);
        assert_eq!(back.removal_log.len(), inst.removal_log.len());
        assert_eq!(back.raw_graph.m(), inst.raw_graph.m());
    }

    #[test]
    fn solution_json_shapes() {
        let canonical: SolutionFile =
            serde_json::from_str(r#"{"assignment":[0,1,1],"delta":"canonical","centers":[0,2]}"#).unwrap();
        assert_eq!(canonical.delta, Delta::Tag(DeltaTag::Canonical));
        let general: SolutionFile =
            serde_json::from_str(r#"{"assignment":[0,0],"delta":[[0.0]]}"#).unwrap();
        assert_eq!(general.delta, Delta::Matrix(vec![vec![0.0]]));
        assert_eq!(
            serde_json::to_string(&canonical).unwrap(),
            r#"{"assignment":[0,1,1],"delta":"canonical","centers":[0,2]}"#
        );
    }

    #[test]
    fn scoring_matches_the_solution_module() {
        let g = Graph::from_unit_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let inst = Instance::from_parts(InstanceConfig::new(3, 0), g, vec![0, 2], Vec::new()).unwrap();
        let file = SolutionFile {
            assignment: vec![0, 0, 1],
            delta: Delta::Tag(DeltaTag::Canonical),
            centers: Some(vec![0, 2]),
        };
        assert_eq!(file.score(&inst).unwrap(), 2.0);
        let missing = SolutionFile { centers: None, ..file };
        assert!(matches!(missing.score(&inst), Err(Error::InvalidSolution(_))));
    }
}
