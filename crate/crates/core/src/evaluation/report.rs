use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::wilcoxon::wilcoxon_signed_rank;
use super::EvalError;

/// One repetition of one scenario on one version pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub pair: String,
    pub scenario: String,
    pub rep: usize,
    pub auc: f64,
    pub f1: f64,
}

/// A (pair, scenario) cell that could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub pair: String,
    pub scenario: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub pair: String,
    pub scenario: String,
    pub repetitions: usize,
    pub mean_auc: f64,
    pub std_auc: f64,
    pub mean_f1: f64,
    pub std_f1: f64,
}

/// Wilcoxon test of a scenario against the baseline. `pair` is `*` when the
/// paired samples are per-pair mean AUCs, otherwise the samples are that
/// pair's repetitions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub pair: String,
    pub baseline: String,
    pub scenario: String,
    pub n: usize,
    pub mean_diff: f64,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub note: String,
}

/// Mean metrics at one anchor count, for plotting anchor sweeps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub pair: String,
    pub strategy: String,
    pub algorithm: String,
    pub method: String,
    pub anchors: String,
    pub mean_auc: f64,
    pub mean_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
    pub comparisons: Vec<Comparison>,
    pub sweep: Vec<SweepPoint>,
    pub failures: Vec<Failure>,
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation; 0 for fewer than two values.
pub fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// AUC and F1 samples per (pair, scenario).
type Cells<'a> = BTreeMap<(&'a str, &'a str), (Vec<f64>, Vec<f64>)>;

pub fn summarize(runs: &[RunRecord]) -> Vec<SummaryRow> {
    let mut cells: Cells = BTreeMap::new();
    for r in runs {
        let e = cells.entry((&r.pair, &r.scenario)).or_default();
        e.0.push(r.auc);
        e.1.push(r.f1);
    }
    cells
        .into_iter()
        .map(|((pair, scenario), (aucs, f1s))| SummaryRow {
            pair: pair.into(),
            scenario: scenario.into(),
            repetitions: aucs.len(),
            mean_auc: mean(&aucs),
            std_auc: std_dev(&aucs),
            mean_f1: mean(&f1s),
            std_f1: std_dev(&f1s),
        })
        .collect()
}

fn compare_samples(pair: &str, baseline: &str, scenario: &str, a: &[f64], b: &[f64]) -> Comparison {
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mut c = Comparison {
        pair: pair.into(),
        baseline: baseline.into(),
        scenario: scenario.into(),
        n: a.len(),
        mean_diff: mean(&diffs),
        statistic: None,
        p_value: None,
        note: String::new(),
    };
    match wilcoxon_signed_rank(a, b) {
        Ok(w) => {
            c.statistic = Some(w.statistic);
            c.p_value = Some(w.p_value);
            c.note = if w.exact { "exact" } else { "normal" }.into();
        }
        Err(e) => c.note = e.to_string(),
    }
    c
}

/// AUC comparisons of every scenario against `baseline`: per pair over
/// repetitions, and across pairs over per-pair means.
pub fn compare_to_baseline(runs: &[RunRecord], summary: &[SummaryRow], baseline: &str) -> Vec<Comparison> {
    let mut by_cell: BTreeMap<(&str, &str), BTreeMap<usize, f64>> = BTreeMap::new();
    for r in runs {
        by_cell.entry((&r.pair, &r.scenario)).or_default().insert(r.rep, r.auc);
    }
    let scenarios: Vec<&str> = {
        let mut s: Vec<&str> = summary.iter().map(|r| r.scenario.as_str()).filter(|s| *s != baseline).collect();
        s.sort();
        s.dedup();
        s
    };
    let pairs: Vec<&str> = {
        let mut p: Vec<&str> = summary.iter().map(|r| r.pair.as_str()).collect();
        p.sort();
        p.dedup();
        p
    };
    let mut out = Vec::new();
    for scenario in &scenarios {
        let (mut cross_a, mut cross_b) = (Vec::new(), Vec::new());
        for pair in &pairs {
            let (Some(base), Some(other)) = (by_cell.get(&(*pair, baseline)), by_cell.get(&(*pair, *scenario))) else {
                continue;
            };
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for (rep, auc) in other {
                if let Some(bv) = base.get(rep) {
                    a.push(*auc);
                    b.push(*bv);
                }
            }
            if a.is_empty() {
                continue;
            }
            cross_a.push(mean(&a));
            cross_b.push(mean(&b));
            out.push(compare_samples(pair, baseline, scenario, &a, &b));
        }
        if pairs.len() > 1 && !cross_a.is_empty() {
            out.push(compare_samples("*", baseline, scenario, &cross_a, &cross_b));
        }
    }
    out
}

impl EvalReport {
    pub fn from_runs(mut runs: Vec<RunRecord>, failures: Vec<Failure>, baseline: &str) -> Self {
        runs.sort_by(|a, b| (&a.pair, &a.scenario, a.rep).cmp(&(&b.pair, &b.scenario, b.rep)));
        let summary = summarize(&runs);
        let comparisons = compare_to_baseline(&runs, &summary, baseline);
        Self {
            runs,
            summary,
            comparisons,
            sweep: Vec::new(),
            failures,
        }
    }

    pub fn mean_auc(&self, pair: &str, scenario: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|r| r.pair == pair && r.scenario == scenario)
            .map(|r| r.mean_auc)
    }

    /// Writes `runs.csv`, `summary.csv`, `comparisons.csv`,
    /// `anchor_sweep.csv` and, if any, `failures.csv`.
    pub fn write_dir(&self, dir: &Path) -> Result<(), EvalError> {
        std::fs::create_dir_all(dir).map_err(|e| EvalError::Io(dir.display().to_string(), e))?;
        write_csv(&dir.join("runs.csv"), &self.runs)?;
        write_csv(&dir.join("summary.csv"), &self.summary)?;
        write_csv(&dir.join("comparisons.csv"), &self.comparisons)?;
        write_csv(&dir.join("anchor_sweep.csv"), &self.sweep)?;
        let failures = dir.join("failures.csv");
        if self.failures.is_empty() {
            if failures.exists() {
                std::fs::remove_file(&failures).map_err(|e| EvalError::Io(failures.display().to_string(), e))?;
            }
        } else {
            write_csv(&failures, &self.failures)?;
        }
        Ok(())
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), EvalError> {
    let name = path.display().to_string();
    let mut w = csv::Writer::from_path(path).map_err(|e| EvalError::Csv(name.clone(), e))?;
    if rows.is_empty() {
        // serde-driven headers need at least one row
        drop(w);
        std::fs::write(path, "").map_err(|e| EvalError::Io(name, e))?;
        return Ok(());
    }
    for r in rows {
        w.serialize(r).map_err(|e| EvalError::Csv(name.clone(), e))?;
    }
    w.flush().map_err(|e| EvalError::Io(name, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(pair: &str, scenario: &str, rep: usize, auc: f64) -> RunRecord {
        RunRecord {
            pair: pair.into(),
            scenario: scenario.into(),
            rep,
            auc,
            f1: auc / 2.0,
        }
    }

    #[test]
    fn summary_statistics() {
        let runs = vec![run("p", "s", 0, 0.6), run("p", "s", 1, 0.8), run("p", "s", 2, 0.7)];
        let s = summarize(&runs);
        assert_eq!(s.len(), 1);
        assert!((s[0].mean_auc - 0.7).abs() < 1e-12);
        assert!((s[0].std_auc - 0.1).abs() < 1e-12);
        assert_eq!(s[0].repetitions, 3);
    }

    #[test]
    fn single_repetition_has_zero_std() {
        let s = summarize(&[run("p", "s", 0, 0.6)]);
        assert_eq!(s[0].std_auc, 0.0);
        assert_eq!(s[0].mean_auc, 0.6);
    }

    #[test]
    fn comparisons_pair_by_repetition() {
        let mut runs = Vec::new();
        for rep in 0..6 {
            runs.push(run("p", "static_only", rep, 0.5 + rep as f64 * 0.01));
            runs.push(run("p", "emb", rep, 0.6 + rep as f64 * 0.013));
        }
        let report = EvalReport::from_runs(runs, vec![], "static_only");
        assert_eq!(report.comparisons.len(), 1);
        let c = &report.comparisons[0];
        assert_eq!(c.n, 6);
        assert_eq!(c.statistic, Some(0.0));
        assert!(c.mean_diff > 0.0);
    }

    #[test]
    fn writes_csv_files() {
        let dir = tempfile::tempdir().unwrap();
        let report = EvalReport::from_runs(vec![run("p", "s", 0, 0.6)], vec![], "s");
        report.write_dir(dir.path()).unwrap();
        let runs = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
        assert_eq!(runs, "pair,scenario,rep,auc,f1\np,s,0,0.6,0.3\n");
        assert!(dir.path().join("summary.csv").exists());
        assert!(!dir.path().join("failures.csv").exists());
    }
}
