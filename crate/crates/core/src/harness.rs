//! Gap experiment: instance sweeps, solver runs, per-record diagnostics and
//! report files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{diameter, girth};
use crate::instance::{build_instance, Instance, InstanceConfig, TerminalRule, EXPERIMENT_GIRTH_COEFFICIENT};
use crate::io::SolutionFile;
use crate::solution::{case_diagnostics, unfriendly_edge_count, CaseParams};
use crate::solvers::{lp_feasible_value, solve, Method, SolveBudget};

/// `⌈C · k · (log₂ k)^(1−ε)⌉`, never below `k`.
pub fn size_function(k: usize, epsilon: f64, c: f64) -> usize {
    let raw = c * k as f64 * (k as f64).log2().powf(1.0 - epsilon);
    // absorb float noise before rounding up
    let f = (raw - 1e-9).ceil();
    (f.max(0.0) as usize).max(k)
}

/// Friendship radius `ε · log₂log₂n / 30`.
pub fn formula_radius(n: usize, epsilon: f64) -> f64 {
    epsilon * (n as f64).log2().log2() / 30.0
}

/// Radii swept next to [`formula_radius`], which is below 1 at small `n`.
pub const SWEEP_RADII: [f64; 3] = [1.0, 2.0, 3.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub ns: Vec<usize>,
    pub seeds: Vec<u64>,
    pub girth_coefficient: f64,
    pub terminal_rule: TerminalRule,
    pub epsilon: f64,
    pub size_constant: f64,
    pub method: Method,
    pub budget: SolveBudget,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            ns: vec![256, 1024, 4096],
            seeds: (0..5).collect(),
            girth_coefficient: EXPERIMENT_GIRTH_COEFFICIENT,
            terminal_rule: TerminalRule::Prefix,
            epsilon: 0.5,
            size_constant: 1.0,
            method: Method::Local,
            budget: SolveBudget::default(),
            out_dir: PathBuf::from("gap-out"),
        }
    }
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::InvalidArgument(format!("{key}: cannot parse `{s}`"))))
        .collect()
}

fn one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("{key}: cannot parse `{value}`")))
}

impl ExperimentConfig {
    /// Parses `key = value` lines; `#` starts a comment. Keys:
    ///
    /// | key | value |
    /// |---|---|
    /// | `n` | comma-separated sizes |
    /// | `seeds` | a count `s` meaning seeds `0..s` |
    /// | `seed_list` | explicit comma-separated seeds |
    /// | `girth_coeff` | removal threshold coefficient |
    /// | `terminal_rule` | `prefix` or `random-subset` |
    /// | `epsilon`, `size_constant` | parameters of [`size_function`] |
    /// | `method` | `brute-0ext`, `brute-canonical` or `local` |
    /// | `max_assignments`, `max_iterations`, `restarts`, `solver_seed` | solver budget |
    /// | `out_dir` | output directory |
    ///
    /// Missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Parse {
                line: no + 1,
                message: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "n" => cfg.ns = list(key, value)?,
                "seeds" => cfg.seeds = (0..one::<u64>(key, value)?).collect(),
                "seed_list" => cfg.seeds = list(key, value)?,
                "girth_coeff" => cfg.girth_coefficient = one(key, value)?,
                "terminal_rule" => cfg.terminal_rule = one(key, value)?,
                "epsilon" => cfg.epsilon = one(key, value)?,
                "size_constant" => cfg.size_constant = one(key, value)?,
                "method" => cfg.method = one(key, value)?,
                "max_assignments" => cfg.budget.max_assignments = one(key, value)?,
                "max_iterations" => cfg.budget.max_iterations = one(key, value)?,
                "restarts" => cfg.budget.restarts = one(key, value)?,
                "solver_seed" => cfg.budget.seed = one(key, value)?,
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                _ => {
                    return Err(Error::Parse {
                        line: no + 1,
                        message: format!("unknown key `{key}`"),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidArgument("n and seed lists must be nonempty".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon {} outside (0, 1)", self.epsilon)));
        }
        if !(self.size_constant > 0.0) || !(self.girth_coefficient > 0.0) {
            return Err(Error::InvalidArgument("constants must be positive".into()));
        }
        if self.budget.max_assignments == 0 || self.budget.max_iterations == 0 || self.budget.restarts == 0 {
            return Err(Error::InvalidArgument("budget limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Ok,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub f_k: usize,
    pub status: RecordStatus,
    pub lp_value: f64,
    pub best_cost: f64,
    pub ratio: f64,
    pub girth: Option<f64>,
    pub diameter: f64,
    pub removed_edges: usize,
    pub formula_radius: f64,
    /// Unfriendly `G'` edges at [`formula_radius`] and at each of [`SWEEP_RADII`].
    pub unfriendly: [usize; 4],
    pub case_tag: u8,
    /// Max-flow value of the large-cluster packing; 0 in Case 1.
    pub flow_value: f64,
    /// Solution file relative to the output directory.
    pub solution_file: Option<String>,
    pub error: Option<String>,
}

impl GapRecord {
    fn failed(n: usize, seed: u64, error: &Error) -> Self {
        GapRecord {
            n,
            k: 0,
            seed,
            f_k: 0,
            status: RecordStatus::Failed,
            lp_value: 0.0,
            best_cost: 0.0,
            ratio: 0.0,
            girth: None,
            diameter: 0.0,
            removed_edges: 0,
            formula_radius: 0.0,
            unfriendly: [0; 4],
            case_tag: 0,
            flow_value: 0.0,
            solution_file: None,
            error: Some(error.to_string()),
        }
    }
}

fn solution_name(n: usize, seed: u64) -> String {
    format!("solutions/n{n}_s{seed}.json")
}

/// One record: solve, persist the solution and gather diagnostics.
pub fn run_record(cfg: &ExperimentConfig, inst: &Instance, out_dir: Option<&Path>) -> Result<GapRecord> {
    let n = inst.n();
    let k = inst.k();
    let f_k = size_function(k, cfg.epsilon, cfg.size_constant).min(n);
    let lp_value = lp_feasible_value(inst)?;
    let (cs, best_cost) = solve(inst, cfg.method, f_k, &cfg.budget)?;
    let solution_file = match out_dir {
        Some(dir) => {
            let name = solution_name(n, inst.seed());
            SolutionFile::from_canonical(&cs).save(&dir.join(&name))?;
            Some(name)
        }
        None => None,
    };
    let g = girth(&inst.graph);
    let radius = formula_radius(n, cfg.epsilon);
    let mut unfriendly = [0; 4];
    for (slot, r) in std::iter::once(radius).chain(SWEEP_RADII).enumerate() {
        unfriendly[slot] = unfriendly_edge_count(&cs, inst, r);
    }
    let case = case_diagnostics(&cs, inst, CaseParams::default())?;
    Ok(GapRecord {
        n,
        k,
        seed: inst.seed(),
        f_k,
        status: RecordStatus::Ok,
        lp_value,
        best_cost,
        ratio: best_cost / lp_value,
        girth: g.is_finite().then_some(g),
        diameter: diameter(&inst.graph)?,
        removed_edges: inst.removal_log.len(),
        formula_radius: radius,
        unfriendly,
        case_tag: case.case,
        flow_value: case.packing.map_or(0.0, |p| p.flow_value),
        solution_file,
        error: None,
    })
}

/// Runs every `(n, seed)` pair in order. Each record is appended to
/// `records.jsonl` as soon as it is done; failures become failed records.
pub fn run_gap_experiment(cfg: &ExperimentConfig) -> Result<Vec<GapRecord>> {
    cfg.validate()?;
    fs::create_dir_all(cfg.out_dir.join("solutions"))?;
    let mut log = BufWriter::new(File::create(cfg.out_dir.join("records.jsonl"))?);
    let mut records = Vec::new();
    for &n in &cfg.ns {
        for &seed in &cfg.seeds {
            let config = InstanceConfig {
                n,
                seed,
                girth_coefficient: cfg.girth_coefficient,
                terminal_rule: cfg.terminal_rule,
            };
            let record = build_instance(config)
                .and_then(|inst| run_record(cfg, &inst, Some(&cfg.out_dir)))
                .unwrap_or_else(|e| GapRecord::failed(n, seed, &e));
            serde_json::to_writer(&mut log, &record)?;
            writeln!(log)?;
            log.flush()?;
            records.push(record);
        }
    }
    Ok(records)
}

pub const CSV_COLUMNS: [&str; 18] = [
    "n",
    "k",
    "seed",
    "f_k",
    "status",
    "lp_value",
    "best_cost",
    "ratio",
    "girth",
    "diameter",
    "removed_edges",
    "unfriendly_formula",
    "unfriendly_r1",
    "unfriendly_r2",
    "unfriendly_r3",
    "case_tag",
    "flow_value",
    "error",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n: usize,
    pub records: usize,
    pub failed: usize,
    pub mean_ratio: f64,
    pub median_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub sizes: Vec<SizeSummary>,
    /// Mean ratios never decrease with `n`.
    pub non_decreasing: bool,
    /// Least-squares slope of the mean ratio against `log₂log₂n`.
    pub slope_vs_loglog: f64,
}

fn median(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        l if l % 2 == 1 => sorted[l / 2],
        l => (sorted[l / 2 - 1] + sorted[l / 2]) / 2.0,
    }
}

/// Ordinary least-squares slope; 0 with fewer than two distinct `x`.
pub fn ols_slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    if points.len() < 2 {
        return 0.0;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx
}

/// Per-size statistics over successful records, sizes ascending.
pub fn summarize(records: &[GapRecord]) -> Summary {
    let mut ns: Vec<usize> = records.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let sizes: Vec<SizeSummary> = ns
        .into_iter()
        .map(|n| {
            let of_n: Vec<&GapRecord> = records.iter().filter(|r| r.n == n).collect();
            let mut ratios: Vec<f64> = of_n
                .iter()
                .filter(|r| r.status == RecordStatus::Ok)
                .map(|r| r.ratio)
                .collect();
            ratios.sort_by(f64::total_cmp);
            let mean = if ratios.is_empty() {
                f64::NAN
            } else {
                ratios.iter().sum::<f64>() / ratios.len() as f64
            };
            SizeSummary {
                n,
                records: of_n.len(),
                failed: of_n.len() - ratios.len(),
                mean_ratio: mean,
                median_ratio: median(&ratios),
            }
        })
        .collect();
    let valid: Vec<&SizeSummary> = sizes.iter().filter(|s| s.mean_ratio.is_finite()).collect();
    let non_decreasing = valid.windows(2).all(|w| w[1].mean_ratio >= w[0].mean_ratio);
    let points: Vec<(f64, f64)> = valid
        .iter()
        .map(|s| ((s.n as f64).log2().log2(), s.mean_ratio))
        .collect();
    Summary {
        sizes,
        non_decreasing,
        slope_vs_loglog: ols_slope(&points),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportPaths {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub plot: PathBuf,
}

/// Writes `gap.csv` (columns [`CSV_COLUMNS`]), `summary.json` and
/// `gap.dat` (`n mean_ratio` per line) into `dir`.
pub fn emit_report(records: &[GapRecord], dir: &Path) -> Result<ReportPaths> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records to report".into()));
    }
    fs::create_dir_all(dir)?;
    let paths = ReportPaths {
        csv: dir.join("gap.csv"),
        summary: dir.join("summary.json"),
        plot: dir.join("gap.dat"),
    };
    let mut w = csv::Writer::from_path(&paths.csv)?;
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        let status = match r.status {
            RecordStatus::Ok => "ok",
            RecordStatus::Failed => "failed",
        };
        let mut row = vec![
            r.n.to_string(),
            r.k.to_string(),
            r.seed.to_string(),
            r.f_k.to_string(),
            status.to_string(),
            r.lp_value.to_string(),
            r.best_cost.to_string(),
            r.ratio.to_string(),
            r.girth.map_or(String::new(), |g| g.to_string()),
            r.diameter.to_string(),
            r.removed_edges.to_string(),
        ];
        row.extend(r.unfriendly.iter().map(ToString::to_string));
        row.push(r.case_tag.to_string());
        row.push(r.flow_value.to_string());
        row.push(r.error.clone().unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;

    let summary = summarize(records);
    fs::write(&paths.summary, serde_json::to_string_pretty(&summary)?)?;
    let mut plot = String::from("# n mean_ratio\n");
    for s in summary.sizes.iter().filter(|s| s.mean_ratio.is_finite()) {
        plot.push_str(&format!("{} {}\n", s.n, s.mean_ratio));
    }
    fs::write(&paths.plot, plot)?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_function_examples() {
        assert_eq!(size_function(96, 1.0, 1.0), 96);
        assert_eq!(size_function(256, 0.5, 1.0), 725);
        assert_eq!(size_function(2, 0.5, 0.01), 2);
        assert_eq!(size_function(1024, 0.5, 1.0), (1024.0 * 10f64.sqrt()).ceil() as usize);
    }

    #[test]
    fn config_parsing() {
        let cfg = ExperimentConfig::parse(
            "# sweep\nn = 256, 1024\nseeds = 3\nmethod = brute-canonical\nepsilon=0.25\nout_dir = /tmp/x # here\n",
        )
        .unwrap();
        assert_eq!(cfg.ns, vec![256, 1024]);
        assert_eq!(cfg.seeds, vec![0, 1, 2]);
        assert_eq!(cfg.method, Method::BruteCanonical);
        assert_eq!(cfg.epsilon, 0.25);
        assert_eq!(cfg.out_dir, PathBuf::from("/tmp/x"));
        assert!(ExperimentConfig::parse("epsilon = 1").is_err());
        assert!(ExperimentConfig::parse("n =").is_err());
        assert!(matches!(ExperimentConfig::parse("bogus = 1"), Err(Error::Parse { line: 1, .. })));
    }

    fn record(n: usize, ratio: f64, ok: bool) -> GapRecord {
        let mut r = GapRecord::failed(n, 0, &Error::InvalidArgument("x".into()));
        if ok {
            r.status = RecordStatus::Ok;
            r.ratio = ratio;
            r.error = None;
        }
        r
    }

    #[test]
    fn report_files() {
        let dir = tempfile::tempdir().unwrap();
        let recs = vec![record(256, 1.0, true), record(256, 3.0, true), record(256, 0.0, false), record(1024, 2.5, true)];
        let paths = emit_report(&recs, dir.path()).unwrap();
        let text = fs::read_to_string(&paths.csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(lines.len(), 5);
        assert!(lines[3].contains(",failed,"));
        let summary: Summary = serde_json::from_str(&fs::read_to_string(&paths.summary).unwrap()).unwrap();
        assert_eq!(summary.sizes[0].failed, 1);
        assert_eq!(summary.sizes[0].mean_ratio, 2.0);
        assert_eq!(summary.sizes[0].median_ratio, 2.0);
        assert!(summary.non_decreasing);
        assert!(summary.slope_vs_loglog > 0.0);
        assert_eq!(fs::read_to_string(&paths.plot).unwrap(), "# n mean_ratio\n256 2\n1024 2.5\n");
        assert!(emit_report(&[], dir.path()).is_err());
    }

    #[test]
    fn small_sweep_replays_identically() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            ns: vec![64],
            seeds: vec![0, 1],
            budget: SolveBudget {
                max_iterations: 5_000,
                restarts: 2,
                ..SolveBudget::default()
            },
            out_dir: dir.path().to_path_buf(),
            ..ExperimentConfig::default()
        };
        let a = run_gap_experiment(&cfg).unwrap();
        let b = run_gap_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(fs::read_to_string(dir.path().join("records.jsonl")).unwrap().lines().count(), 2);
        for r in &a {
            assert_eq!(r.status, RecordStatus::Ok, "{:?}", r.error);
            assert!(r.ratio > 0.0);
        }
    }
}
