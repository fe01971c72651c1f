//! Approximate Bayesian inference by random forest prevision.
//!
//! Parameters are drawn from a slab-and-spike prior, pushed through the
//! sampler and the feature battery, and forests learn `E[psi | s]`,
//! `E[psi^2 | s]` and conditional quantiles from the simulated pairs.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::features::{featurize, schema_hash, FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
use crate::forest::{self, FeatureMatrix, Forest, ForestConfig, Task};
use crate::graph::DiGraph;
use crate::persist::names_hash;
use crate::rng::{child_seed, stream, Domain};
use crate::sfbn::{sfbn_sample, ModelSpec, ParamVector, PARAM_NAMES};

/// Quantile levels reported by default.
pub const DEFAULT_LEVELS: [f64; 7] = [0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975];

/// Default target mean degree used to centre the prior on `d`.
pub const DEFAULT_MEAN_DEGREE: f64 = 10.0;

/// Concentration `a + b` of the prior on `d`.
const D_CONCENTRATION: f64 = 5.0;

const MANIFEST: &str = "manifest.json";
const MANIFEST_FORMAT: &str = "biasnet-prevision";
const MANIFEST_VERSION: u32 = 1;

/// Zero with probability `spike`, otherwise Beta(a, b).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabSpike {
    pub spike: f64,
    pub a: f64,
    pub b: f64,
}

impl SlabSpike {
    fn validate(&self, name: &str) -> Result<()> {
        if !(0.0..=1.0).contains(&self.spike) {
            return invalid(format!("{name}: spike weight {} outside [0, 1]", self.spike));
        }
        if !(self.a > 0.0 && self.b > 0.0 && self.a.is_finite() && self.b.is_finite()) {
            return invalid(format!("{name}: Beta({}, {}) needs positive finite shapes", self.a, self.b));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub n: usize,
    pub target_mean_degree: f64,
    /// In canonical parameter order.
    pub params: [SlabSpike; 5],
}

impl PriorSpec {
    pub fn default_for(n: usize) -> Result<Self> {
        Self::with_mean_degree(n, DEFAULT_MEAN_DEGREE)
    }

    /// Bias parameters: half spike, Beta(0.5, 1.5) slab. `d`: no spike,
    /// mean `k / (n - 1)` with concentration 5.
    pub fn with_mean_degree(n: usize, k: f64) -> Result<Self> {
        if n < 2 {
            return invalid("graph order must be at least 2");
        }
        let mean = k / (n as f64 - 1.0);
        if !(mean > 0.0 && mean < 1.0) {
            return invalid(format!(
                "target mean degree {k} gives d prior mean {mean}, which must lie in (0, 1); need n > k + 1"
            ));
        }
        let bias = SlabSpike { spike: 0.5, a: 0.5, b: 1.5 };
        let d = SlabSpike { spike: 0.0, a: D_CONCENTRATION * mean, b: D_CONCENTRATION * (1.0 - mean) };
        let spec = Self { n, target_mean_degree: k, params: [bias, bias, bias, d, bias] };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in PARAM_NAMES.iter().zip(&self.params) {
            p.validate(name)?;
        }
        if self.params[3].spike != 0.0 {
            return invalid("d must have spike weight 0");
        }
        Ok(())
    }

    /// Hash of the canonical JSON encoding.
    pub fn fingerprint(&self) -> u64 {
        let json = serde_json::to_string(self).expect("prior spec serializes");
        names_hash(&[json])
    }
}

/// One draw from the prior. `d` is redrawn in the (underflow-only) event of an exact zero.
pub fn sample_prior<R: Rng + ?Sized>(spec: &PriorSpec, rng: &mut R) -> Result<ParamVector> {
    spec.validate()?;
    let mut out = [0.0; 5];
    for (k, p) in spec.params.iter().enumerate() {
        let beta = Beta::new(p.a, p.b).map_err(|e| Error::InvalidArgument(format!("{}: {e}", PARAM_NAMES[k])))?;
        out[k] = loop {
            if p.spike > 0.0 && rng.gen::<f64>() < p.spike {
                break 0.0;
            }
            let v: f64 = beta.sample(rng);
            if k != 3 || v > 0.0 {
                break v;
            }
        };
    }
    Ok(ParamVector::from_array(out))
}

/// Simulated `(psi, s(Y))` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub params: Vec<ParamVector>,
    pub features: FeatureMatrix,
    /// Rows whose structure statistics used the flat fallback fit.
    pub fallback_rows: usize,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Responses for parameter `k`.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.params.iter().map(|p| p.to_array()[k]).collect()
    }
}

/// Simulate one graph per prior draw. Draw `i` uses the prior and chain
/// streams with index `i`, so output is independent of the thread count.
/// Both model classes share prior draws for a given seed; their chains use
/// separate streams so paired graphs are independent given the parameters.
pub fn generate_training_set(
    prior: &PriorSpec,
    m: usize,
    spec: &ModelSpec,
    burnin: u64,
    seed: u64,
) -> Result<TrainingSet> {
    if m == 0 {
        return invalid("need at least one draw");
    }
    if prior.n != spec.n {
        return invalid(format!("prior is for n = {}, model spec for n = {}", prior.n, spec.n));
    }
    prior.validate()?;
    let rows: Vec<(ParamVector, FeatureVector)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let psi = sample_prior(prior, &mut stream(seed, Domain::Prior, i as u64))?;
            let chain = if spec.dichotomized { Domain::DichotomizedChain } else { Domain::Chain };
            let g = sfbn_sample(&psi, spec, burnin, &mut stream(seed, chain, i as u64), None)?;
            Ok((psi, featurize(&g)?))
        })
        .collect::<Result<_>>()?;
    let fallback_rows = rows.iter().filter(|r| r.1.structure_fallback).count();
    let mut data = Vec::with_capacity(m * FEATURE_COUNT);
    for (_, f) in &rows {
        data.extend_from_slice(&f.values);
    }
    Ok(TrainingSet {
        params: rows.iter().map(|r| r.0).collect(),
        features: FeatureMatrix::new(m, FEATURE_COUNT, data)?,
        fallback_rows,
    })
}

/// Forest settings shared by every forest in a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrevisionConfig {
    pub n_trees: usize,
    pub seed: u64,
    pub min_node_size: Option<usize>,
}

impl PrevisionConfig {
    pub fn new(seed: u64) -> Self {
        Self { n_trees: 500, seed, min_node_size: None }
    }

    fn forest(&self, task: Task, tag: u64) -> ForestConfig {
        ForestConfig {
            min_node_size: self.min_node_size,
            ..ForestConfig::new(task, child_seed(self.seed, tag)).with_trees(self.n_trees)
        }
    }
}

fn feature_names() -> Vec<String> {
    FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
}

/// Per-parameter forests plus an optional model-class classifier.
#[derive(Debug, Clone)]
pub struct PrevisionModel {
    pub prior: PriorSpec,
    pub spec: ModelSpec,
    pub config: PrevisionConfig,
    pub training_rows: usize,
    /// Quantile forests; their leaf means give the posterior mean.
    pub mean: Vec<Forest>,
    /// Regression forests on `psi^2`.
    pub mean_square: Vec<Forest>,
    /// Label 0 = undichotomized, 1 = dichotomized.
    pub selector: Option<Forest>,
}

/// Train mean / quantile and mean-square forests for all five parameters.
pub fn train_prevision(
    set: &TrainingSet,
    prior: &PriorSpec,
    spec: &ModelSpec,
    cfg: &PrevisionConfig,
) -> Result<PrevisionModel> {
    let names = feature_names();
    let mut mean = Vec::with_capacity(5);
    let mut mean_square = Vec::with_capacity(5);
    for k in 0..5 {
        let y = set.column(k);
        mean.push(forest::train(&set.features, &y, &names, &cfg.forest(Task::Quantile, 100 + k as u64))?);
        let y2: Vec<f64> = y.iter().map(|v| v * v).collect();
        mean_square.push(forest::train(&set.features, &y2, &names, &cfg.forest(Task::Regression, 200 + k as u64))?);
    }
    Ok(PrevisionModel {
        prior: prior.clone(),
        spec: *spec,
        config: cfg.clone(),
        training_rows: set.len(),
        mean,
        mean_square,
        selector: None,
    })
}

/// Classifier separating undichotomized (label 0) from dichotomized (label 1) draws.
pub fn train_class_selector(
    undichotomized: &FeatureMatrix,
    dichotomized: &FeatureMatrix,
    cfg: &PrevisionConfig,
) -> Result<Forest> {
    let x = undichotomized.stack(dichotomized)?;
    let mut y = vec![0.0; undichotomized.rows()];
    y.resize(x.rows(), 1.0);
    let fc = ForestConfig { min_node_size: None, ..cfg.forest(Task::Classification { classes: 2 }, 300) };
    forest::train(&x, &y, &feature_names(), &fc)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamPosterior {
    pub name: &'static str,
    pub mean: f64,
    pub sd: f64,
    /// `E[psi^2] - E[psi]^2` before clamping at zero.
    pub raw_variance: f64,
    /// `(level, value)` pairs, values sorted nondecreasing.
    pub quantiles: Vec<(f64, f64)>,
    /// Largest change any quantile underwent when sorted.
    pub sort_perturbation: f64,
}

impl ParamPosterior {
    pub fn variance_clamped(&self) -> bool {
        self.raw_variance < 0.0
    }

    /// Quantile at `level`, if it was requested.
    pub fn quantile(&self, level: f64) -> Option<f64> {
        self.quantiles.iter().find(|q| q.0 == level).map(|q| q.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorSummary {
    pub params: Vec<ParamPosterior>,
    /// Probability that the graph came from the undichotomized model.
    pub undichotomized_probability: Option<f64>,
    pub warnings: Vec<String>,
}

impl PrevisionModel {
    pub fn schema_hash(&self) -> u64 {
        schema_hash()
    }

    pub fn posterior_summary(&self, g: &DiGraph) -> Result<PosteriorSummary> {
        self.posterior_summary_with(g, &DEFAULT_LEVELS)
    }

    pub fn posterior_summary_with(&self, g: &DiGraph, levels: &[f64]) -> Result<PosteriorSummary> {
        let mut summary = self.summarize_features(&featurize(g)?.values, levels)?;
        if g.n() != self.spec.n {
            summary.warnings.push(format!(
                "graph has order {} but the model was trained at n = {}",
                g.n(),
                self.spec.n
            ));
        }
        Ok(summary)
    }

    /// Posterior summary from a precomputed feature row.
    pub fn summarize_features(&self, x: &[f64], levels: &[f64]) -> Result<PosteriorSummary> {
        if x.len() != FEATURE_COUNT {
            return invalid(format!("feature row has {} values, expected {FEATURE_COUNT}", x.len()));
        }
        let mut params = Vec::with_capacity(5);
        let mut warnings = Vec::new();
        for k in 0..5 {
            let mean = self.mean[k].predict(x)?;
            let raw_variance = self.mean_square[k].predict(x)? - mean * mean;
            let raw = self.mean[k].predict_quantiles(x, levels)?;
            let mut sorted = raw.clone();
            sorted.sort_by(f64::total_cmp);
            let sort_perturbation = raw.iter().zip(&sorted).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if raw_variance < 0.0 {
                warnings.push(format!("{}: negative variance estimate {raw_variance:e} clamped to 0", PARAM_NAMES[k]));
            }
            params.push(ParamPosterior {
                name: PARAM_NAMES[k],
                mean,
                sd: raw_variance.max(0.0).sqrt(),
                raw_variance,
                quantiles: levels.iter().copied().zip(sorted).collect(),
                sort_perturbation,
            });
        }
        let undichotomized_probability = match &self.selector {
            Some(f) => Some(f.predict_proba(x)?[0]),
            None => None,
        };
        Ok(PosteriorSummary { params, undichotomized_probability, warnings })
    }

    /// Write `manifest.json` plus one forest container per forest into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        for (k, name) in PARAM_NAMES.iter().enumerate() {
            for (kind, f) in [("mean", &self.mean[k]), ("meansq", &self.mean_square[k])] {
                let file = format!("{kind}_{name}.bnf");
                f.save(std::io::BufWriter::new(fs::File::create(dir.join(&file))?))?;
                files.push(file);
            }
        }
        let selector = match &self.selector {
            Some(f) => {
                f.save(std::io::BufWriter::new(fs::File::create(dir.join("selector.bnf"))?))?;
                Some("selector.bnf".to_string())
            }
            None => None,
        };
        let manifest = Manifest {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            schema_hash: format!("{:016x}", schema_hash()),
            feature_names: feature_names(),
            prior: self.prior.clone(),
            prior_fingerprint: format!("{:016x}", self.prior.fingerprint()),
            model_spec: self.spec,
            config: self.config.clone(),
            training_rows: self.training_rows,
            forests: files,
            selector,
            crate_version: env!("CARGO_PKG_VERSION").into(),
        };
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(dir.join(MANIFEST), json + "\n")?;
        Ok(())
    }

    /// Load a model directory. A feature schema other than the current one is a
    /// [`Error::SchemaMismatch`].
    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Format(format!("manifest: {e}")))?;
        if m.format != MANIFEST_FORMAT || m.version != MANIFEST_VERSION {
            return Err(Error::Format(format!("unsupported manifest {} v{}", m.format, m.version)));
        }
        let expected = schema_hash();
        let found = u64::from_str_radix(&m.schema_hash, 16).map_err(|e| Error::Format(format!("schema hash: {e}")))?;
        if found != expected {
            return Err(Error::SchemaMismatch { expected, found });
        }
        m.prior.validate()?;
        let open = |file: &str| -> Result<Forest> {
            if file.contains(['/', '\\']) {
                return Err(Error::Format(format!("forest path {file} must be a plain file name")));
            }
            Forest::load(std::io::BufReader::new(fs::File::open(dir.join(file))?), Some(expected))
        };
        if m.forests.len() != 10 {
            return Err(Error::Format(format!("expected 10 forests, manifest lists {}", m.forests.len())));
        }
        let mut mean = Vec::with_capacity(5);
        let mut mean_square = Vec::with_capacity(5);
        for pair in m.forests.chunks(2) {
            mean.push(open(&pair[0])?);
            mean_square.push(open(&pair[1])?);
        }
        let selector = m.selector.as_deref().map(open).transpose()?;
        Ok(Self {
            prior: m.prior,
            spec: m.model_spec,
            config: m.config,
            training_rows: m.training_rows,
            mean,
            mean_square,
            selector,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    schema_hash: String,
    feature_names: Vec<String>,
    prior: PriorSpec,
    prior_fingerprint: String,
    model_spec: ModelSpec,
    config: PrevisionConfig,
    training_rows: usize,
    forests: Vec<String>,
    selector: Option<String>,
    crate_version: String,
}
