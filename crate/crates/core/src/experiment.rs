//! Frequentist evaluation of posterior estimators over a factorial design of
//! true parameter values, plus variable-importance reporting.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::features::{featurize, FeatureVector, FEATURE_NAMES};
use crate::forest::{FeatureMatrix, Importance};
use crate::graph::DiGraph;
use crate::prevision::PrevisionModel;
use crate::rng::{stream, Domain};
use crate::sfbn::{sfbn_sample, ModelSpec, ParamVector, PARAM_NAMES};

/// Level lists per parameter (canonical order) crossed in full.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorialDesign {
    pub levels: [Vec<f64>; 5],
    pub replicates: usize,
}

impl FactorialDesign {
    pub fn new(levels: [Vec<f64>; 5], replicates: usize) -> Result<Self> {
        if replicates == 0 {
            return invalid("replicates must be at least 1");
        }
        for (name, ls) in PARAM_NAMES.iter().zip(&levels) {
            if ls.is_empty() {
                return invalid(format!("{name} has no levels"));
            }
            if ls.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return invalid(format!("{name} levels must lie in [0, 1]"));
            }
        }
        Ok(Self { levels, replicates })
    }

    /// 4 x 4 x 3 x 3 x 3 grid with `d` at mean degrees 1, 3 and 6.
    pub fn standard_grid(n: usize, replicates: usize) -> Result<Self> {
        if n < 8 {
            return invalid("standard grid needs n >= 8 so that d = 6/(n-1) < 1");
        }
        let m = n as f64 - 1.0;
        Self::new(
            [
                vec![0.0, 0.25, 0.5, 0.75],
                vec![0.0, 0.1, 0.2, 0.3],
                vec![0.0, 0.25, 0.5],
                vec![1.0 / m, 3.0 / m, 6.0 / m],
                vec![0.0, 0.1, 0.2],
            ],
            replicates,
        )
    }

    /// All cells, last parameter varying fastest.
    pub fn cells(&self) -> Vec<ParamVector> {
        let mut out = vec![[0.0; 5]];
        for (k, ls) in self.levels.iter().enumerate() {
            out = out
                .into_iter()
                .flat_map(|c| {
                    ls.iter().map(move |&v| {
                        let mut c = c;
                        c[k] = v;
                        c
                    })
                })
                .collect();
        }
        out.into_iter().map(ParamVector::from_array).collect()
    }
}

/// A simulated test case handed to an estimator.
#[derive(Debug, Clone)]
pub struct Case {
    /// Position in design order (`cell * replicates + replicate`).
    pub index: usize,
    pub graph: DiGraph,
    pub features: FeatureVector,
}

/// Point estimate and central 95% interval for one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

pub trait Estimator: Sync {
    fn estimate(&self, case: &Case) -> Result<[Estimate; 5]>;
}

impl Estimator for PrevisionModel {
    fn estimate(&self, case: &Case) -> Result<[Estimate; 5]> {
        let s = self.summarize_features(&case.features.values, &[0.025, 0.975])?;
        Ok(std::array::from_fn(|k| {
            let p = &s.params[k];
            Estimate { mean: p.mean, lower: p.quantiles[0].1, upper: p.quantiles[1].1 }
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub cell: usize,
    pub replicate: usize,
    pub truth: [f64; 5],
    pub estimates: [Estimate; 5],
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamMetrics {
    pub name: &'static str,
    /// Mean of estimate minus truth.
    pub bias: f64,
    /// Median absolute error.
    pub mae: f64,
    /// Fraction of intervals containing the truth.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub cases: Vec<CaseResult>,
    pub metrics: Vec<ParamMetrics>,
}

/// Simulate every cell x replicate and score `estimator` on it. Case `i`
/// uses chain stream `i` of the design domain.
pub fn run_design<E: Estimator + ?Sized>(
    design: &FactorialDesign,
    estimator: &E,
    spec: &ModelSpec,
    burnin: u64,
    seed: u64,
) -> Result<EvalReport> {
    let cells = design.cells();
    let reps = design.replicates;
    let cases: Vec<CaseResult> = (0..cells.len() * reps)
        .into_par_iter()
        .map(|index| {
            let truth = cells[index / reps];
            let mut rng = stream(seed, Domain::Design, index as u64);
            let graph = sfbn_sample(&truth, spec, burnin, &mut rng, None)?;
            let features = featurize(&graph)?;
            let edges = graph.edge_count();
            let case = Case { index, graph, features };
            Ok(CaseResult {
                cell: index / reps,
                replicate: index % reps,
                truth: truth.to_array(),
                estimates: estimator.estimate(&case)?,
                edges,
            })
        })
        .collect::<Result<_>>()?;
    let metrics = summarize(&cases);
    Ok(EvalReport { cases, metrics })
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Bias, median absolute error and interval coverage per parameter.
pub fn summarize(cases: &[CaseResult]) -> Vec<ParamMetrics> {
    (0..5)
        .map(|k| {
            let n = cases.len() as f64;
            let bias = cases.iter().map(|c| c.estimates[k].mean - c.truth[k]).sum::<f64>() / n;
            let mut abs: Vec<f64> = cases.iter().map(|c| (c.estimates[k].mean - c.truth[k]).abs()).collect();
            let covered = cases
                .iter()
                .filter(|c| c.estimates[k].lower <= c.truth[k] && c.truth[k] <= c.estimates[k].upper)
                .count();
            ParamMetrics { name: PARAM_NAMES[k], bias, mae: median(&mut abs), coverage: covered as f64 / n }
        })
        .collect()
}

impl EvalReport {
    /// One row per case.
    pub fn write_cases_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["cell".to_string(), "replicate".into(), "edges".into()];
        for p in PARAM_NAMES {
            for col in ["true", "mean", "lower", "upper"] {
                header.push(format!("{p}_{col}"));
            }
        }
        w.write_record(&header).map_err(csv_err)?;
        for c in &self.cases {
            let mut rec = vec![c.cell.to_string(), c.replicate.to_string(), c.edges.to_string()];
            for k in 0..5 {
                let e = c.estimates[k];
                rec.extend([c.truth[k], e.mean, e.lower, e.upper].iter().map(|v| v.to_string()));
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_metrics_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["parameter", "bias", "mae", "coverage"]).map_err(csv_err)?;
        for m in &self.metrics {
            w.write_record([m.name.to_string(), m.bias.to_string(), m.mae.to_string(), m.coverage.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Fixed-width summary table.
    pub fn table(&self) -> String {
        let mut s = format!("{:<10}{:>10}{:>10}{:>10}\n", "parameter", "bias", "MAE", "coverage");
        for m in &self.metrics {
            let _ = writeln!(s, "{:<10}{:>10.4}{:>10.4}{:>10.3}", m.name, m.bias, m.mae, m.coverage);
        }
        s
    }
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Format(e.to_string())
}

/// Importance scores per parameter with per-parameter ranks (1 = most important).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportanceReport {
    pub features: Vec<String>,
    /// `scores[k][f]` for parameter `k`, feature `f`.
    pub scores: Vec<Vec<f64>>,
    pub ranks: Vec<Vec<usize>>,
}

/// Rank 1 for the largest score; ties broken by feature order.
pub fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut ranks = vec![0; scores.len()];
    for (r, &f) in order.iter().enumerate() {
        ranks[f] = r + 1;
    }
    ranks
}

/// Permutation importance of every feature for each parameter's mean forest.
/// `features` must be the training matrix of `model`.
pub fn importance_report(model: &PrevisionModel, features: &FeatureMatrix) -> Result<ImportanceReport> {
    let mut scores = Vec::with_capacity(5);
    for f in &model.mean {
        let imp: Vec<Importance> = f.importance(features)?;
        scores.push(imp.iter().map(|i| i.score).collect::<Vec<_>>());
    }
    Ok(ImportanceReport::from_scores(scores))
}

impl ImportanceReport {
    pub fn from_scores(scores: Vec<Vec<f64>>) -> Self {
        let ranks = scores.iter().map(|s| rank_descending(s)).collect();
        Self { features: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(), scores, ranks }
    }

    /// Mean rank across parameters per feature.
    pub fn mean_ranks(&self) -> Vec<f64> {
        (0..self.features.len())
            .map(|f| self.ranks.iter().map(|r| r[f] as f64).sum::<f64>() / self.ranks.len() as f64)
            .collect()
    }

    pub fn top(&self, param: usize) -> &str {
        let f = self.ranks[param].iter().position(|&r| r == 1).expect("rank 1 exists");
        &self.features[f]
    }

    pub fn rank_of(&self, param: usize, feature: &str) -> Option<usize> {
        self.features.iter().position(|f| f == feature).map(|f| self.ranks[param][f])
    }

    /// Features ordered by mean rank, with scores and ranks per parameter.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["feature".to_string(), "mean_rank".into()];
        for p in PARAM_NAMES {
            header.push(format!("{p}_score"));
            header.push(format!("{p}_rank"));
        }
        w.write_record(&header).map_err(csv_err)?;
        let mean = self.mean_ranks();
        let mut order: Vec<usize> = (0..self.features.len()).collect();
        order.sort_by(|&a, &b| mean[a].total_cmp(&mean[b]).then(a.cmp(&b)));
        for f in order {
            let mut rec = vec![self.features[f].clone(), mean[f].to_string()];
            for k in 0..self.scores.len() {
                rec.push(self.scores[k][f].to_string());
                rec.push(self.ranks[k][f].to_string());
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Horizontal bar chart as a standalone SVG document.
pub fn svg_bar_chart(title: &str, labels: &[String], values: &[f64]) -> String {
    let row = 16.0;
    let (left, width) = (110.0, 360.0);
    let height = 30.0 + row * labels.len() as f64 + 10.0;
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"11\">\n",
        left + width + 20.0
    );
    let _ = writeln!(s, "<text x=\"4\" y=\"16\" font-size=\"13\">{}</text>", escape(title));
    for (i, (label, v)) in labels.iter().zip(values).enumerate() {
        let y = 26.0 + row * i as f64;
        let w = (v.max(0.0) / max * width).max(0.0);
        let _ =
            writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>", left - 4.0, y + 11.0, escape(label));
        let _ = writeln!(
            s,
            "<rect x=\"{left}\" y=\"{y}\" width=\"{w:.2}\" height=\"{}\" fill=\"#4477aa\"><title>{v}</title></rect>",
            row - 3.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
