//! Random forests for regression, quantile regression and classification.
//!
//! Trees are grown on bootstrap samples (tracked as per-row multiplicities),
//! splitting on the midpoint between consecutive distinct values of the best
//! of `mtry` randomly chosen features. Regression trees maximise the reduction
//! in within-node squared error; classification trees minimise Gini impurity.
//! A split is only admissible when both children keep at least
//! `min_node_size` bootstrap samples.
//!
//! Each tree draws from its own random stream `(seed, tree index)`, so a
//! forest is bit-identical regardless of how many worker threads built it.
//!
//! # Container layout
//!
//! All integers little-endian; `str` is a `u32` byte length then UTF-8.
//!
//! ```text
//! magic        8 bytes  "BNFOREST"
//! version      u32      1
//! schema_hash  u64      names_hash(feature names)
//! n_features   u32, then n_features x str
//! task         u8       0 regression, 1 quantile, 2 classification
//! n_classes    u32
//! n_trees      u32
//! mtry         u32
//! min_node     u32
//! max_depth    u32      0 = unlimited
//! seed         u64
//! n_rows       u32, then n_rows x f64 training responses
//! per tree:
//!   n_nodes    u32, then per node: feature u32 (0xFFFFFFFF = leaf),
//!              threshold f64, left u32, right u32, value f64
//!   n_samples  u32, then (row u32, count u32) pairs   (quantile leaves)
//!   n_probs    u32, then f64 class probabilities      (classification leaves)
//!   n_oob      u32, then u32 row indices
//! end marker   8 bytes  "BNFEND01"
//! ```
//!
//! For leaves, `left..right` indexes the sample list (quantile) or `left`
//! is the offset of `n_classes` probabilities (classification).

use std::io::{Read, Write};

use rand::seq::index::sample as sample_indices;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::persist::{names_hash, Reader, Writer};
use crate::rng::{stream_with_tag, Domain};

const MAGIC: &[u8; 8] = b"BNFOREST";
const END: &[u8; 8] = b"BNFEND01";
const VERSION: u32 = 1;
const LEAF: u32 = u32::MAX;

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return invalid(format!("matrix data has {} values, expected {rows} x {cols}", data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return invalid("feature matrix contains non-finite values");
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.as_ref().len() != cols {
                return invalid("ragged feature rows");
            }
            data.extend_from_slice(r.as_ref());
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self { rows: idx.len(), cols: self.cols, data }
    }

    /// Vertical concatenation.
    pub fn stack(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return invalid("column counts differ");
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self { rows: self.rows + other.rows, cols: self.cols, data })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Regression,
    /// Regression trees whose leaves also keep their bootstrap rows.
    Quantile,
    /// Labels are `0..classes` stored as `f64`.
    Classification {
        classes: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Defaults to `floor(sqrt(p))`.
    pub mtry: Option<usize>,
    /// Defaults to 10 for regression / quantile and 1 for classification.
    pub min_node_size: Option<usize>,
    pub max_depth: Option<usize>,
    pub seed: u64,
    pub task: Task,
}

impl ForestConfig {
    pub fn new(task: Task, seed: u64) -> Self {
        Self { n_trees: 500, mtry: None, min_node_size: None, max_depth: None, seed, task }
    }

    pub fn with_trees(mut self, n: usize) -> Self {
        self.n_trees = n;
        self
    }

    fn resolved_mtry(&self, p: usize) -> usize {
        self.mtry.unwrap_or_else(|| ((p as f64).sqrt().floor() as usize).max(1))
    }

    fn resolved_min_node(&self) -> usize {
        self.min_node_size.unwrap_or(match self.task {
            Task::Classification { .. } => 1,
            _ => 10,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Node {
    feature: u32,
    threshold: f64,
    left: u32,
    right: u32,
    value: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
    leaf_samples: Vec<(u32, u32)>,
    class_probs: Vec<f64>,
    oob: Vec<u32>,
}

impl Tree {
    #[inline]
    fn leaf_for(&self, x: &[f64]) -> &Node {
        let mut node = &self.nodes[0];
        while node.feature != LEAF {
            let next = if x[node.feature as usize] <= node.threshold { node.left } else { node.right };
            node = &self.nodes[next as usize];
        }
        node
    }

    /// Leaf reached when feature `swap.0` takes the value `swap.1`.
    #[inline]
    fn leaf_with(&self, x: &[f64], swap: (usize, f64)) -> &Node {
        let mut node = &self.nodes[0];
        while node.feature != LEAF {
            let f = node.feature as usize;
            let v = if f == swap.0 { swap.1 } else { x[f] };
            let next = if v <= node.threshold { node.left } else { node.right };
            node = &self.nodes[next as usize];
        }
        node
    }

    fn uses_feature(&self, f: usize) -> bool {
        self.nodes.iter().any(|n| n.feature as usize == f && n.feature != LEAF)
    }
}

/// A trained forest together with its training responses and feature schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    config: ForestConfig,
    mtry: usize,
    min_node: usize,
    feature_names: Vec<String>,
    responses: Vec<f64>,
    trees: Vec<Tree>,
}

/// Per-feature permutation importance.
#[derive(Debug, Clone, PartialEq)]
pub struct Importance {
    pub feature: String,
    /// Mean over trees of the increase in OOB error after permutation.
    pub score: f64,
    /// Standard error of that mean across trees.
    pub std_error: f64,
}

/// Train a forest on `x` (rows = observations) and responses `y`.
pub fn train(x: &FeatureMatrix, y: &[f64], feature_names: &[String], cfg: &ForestConfig) -> Result<Forest> {
    let (n, p) = (x.rows(), x.cols());
    if n != y.len() {
        return invalid(format!("{n} feature rows but {} responses", y.len()));
    }
    if n < 2 {
        return invalid("need at least two training rows");
    }
    if feature_names.len() != p {
        return invalid(format!("{} feature names for {p} columns", feature_names.len()));
    }
    if cfg.n_trees == 0 {
        return invalid("n_trees must be at least 1");
    }
    if y.iter().any(|v| !v.is_finite()) {
        return invalid("responses must be finite");
    }
    if let Task::Classification { classes } = cfg.task {
        if classes < 2 {
            return invalid("classification needs at least two classes");
        }
        if y.iter().any(|&v| v < 0.0 || v.fract() != 0.0 || v >= classes as f64) {
            return invalid(format!("labels must be integers in 0..{classes}"));
        }
    }
    let mtry = cfg.resolved_mtry(p);
    if mtry == 0 || mtry > p {
        return invalid(format!("mtry {mtry} outside 1..={p}"));
    }
    let min_node = cfg.resolved_min_node().max(1);
    let grower = Grower { x, y, cfg, mtry, min_node };
    let trees = (0..cfg.n_trees).into_par_iter().map(|t| grower.grow(t)).collect();
    Ok(Forest {
        config: cfg.clone(),
        mtry,
        min_node,
        feature_names: feature_names.to_vec(),
        responses: y.to_vec(),
        trees,
    })
}

struct Grower<'a> {
    x: &'a FeatureMatrix,
    y: &'a [f64],
    cfg: &'a ForestConfig,
    mtry: usize,
    min_node: usize,
}

/// Running statistics of one side of a candidate split.
#[derive(Clone)]
struct SideStats {
    weight: f64,
    sum: f64,
    classes: Vec<f64>,
}

impl SideStats {
    fn new(k: usize) -> Self {
        Self { weight: 0.0, sum: 0.0, classes: vec![0.0; k] }
    }

    #[inline]
    fn add(&mut self, y: f64, w: f64, classify: bool) {
        self.weight += w;
        if classify {
            self.classes[y as usize] += w;
        } else {
            self.sum += w * y;
        }
    }

    #[inline]
    fn remove(&mut self, y: f64, w: f64, classify: bool) {
        self.weight -= w;
        if classify {
            self.classes[y as usize] -= w;
        } else {
            self.sum -= w * y;
        }
    }

    /// Larger is purer: `sum^2 / w` for regression, `sum_c n_c^2 / w` for Gini.
    #[inline]
    fn score(&self, classify: bool) -> f64 {
        if self.weight <= 0.0 {
            return 0.0;
        }
        if classify {
            self.classes.iter().map(|c| c * c).sum::<f64>() / self.weight
        } else {
            self.sum * self.sum / self.weight
        }
    }
}

struct WorkItem {
    node: usize,
    start: usize,
    end: usize,
    depth: usize,
}

impl Grower<'_> {
    fn classes(&self) -> usize {
        match self.cfg.task {
            Task::Classification { classes } => classes as usize,
            _ => 0,
        }
    }

    fn grow(&self, tree_index: usize) -> Tree {
        let n = self.x.rows();
        let mut rng = stream_with_tag(self.cfg.seed, Domain::Tree as u64, tree_index as u64);
        let mut counts = vec![0u32; n];
        for _ in 0..n {
            counts[rng.gen_range(0..n)] += 1;
        }
        let mut rows: Vec<u32> = (0..n as u32).filter(|&i| counts[i as usize] > 0).collect();
        let oob: Vec<u32> = (0..n as u32).filter(|&i| counts[i as usize] == 0).collect();

        let classify = matches!(self.cfg.task, Task::Classification { .. });
        let keep_samples = self.cfg.task == Task::Quantile;
        let k = self.classes();
        let mut tree = Tree { nodes: Vec::new(), leaf_samples: Vec::new(), class_probs: Vec::new(), oob };
        tree.nodes.push(Node { feature: LEAF, threshold: 0.0, left: 0, right: 0, value: 0.0 });
        let mut stack = vec![WorkItem { node: 0, start: 0, end: rows.len(), depth: 0 }];
        let mut scratch: Vec<(f64, u32)> = Vec::with_capacity(rows.len());

        while let Some(item) = stack.pop() {
            let segment = &rows[item.start..item.end];
            let mut total = SideStats::new(k);
            for &r in segment {
                total.add(self.y[r as usize], counts[r as usize] as f64, classify);
            }
            let depth_ok = self.cfg.max_depth.map_or(true, |d| item.depth < d);
            let split = if depth_ok && total.weight >= 2.0 * self.min_node as f64 && !self.is_pure(segment) {
                self.best_split(segment, &counts, &total, classify, &mut rng, &mut scratch)
            } else {
                None
            };
            match split {
                Some((feature, threshold)) => {
                    let seg = &mut rows[item.start..item.end];
                    let mut lo = 0;
                    for idx in 0..seg.len() {
                        if self.x.get(seg[idx] as usize, feature) <= threshold {
                            seg.swap(lo, idx);
                            lo += 1;
                        }
                    }
                    // Keep each child's rows in ascending order so later
                    // stages never depend on partition history.
                    seg[..lo].sort_unstable();
                    seg[lo..].sort_unstable();
                    let left = tree.nodes.len();
                    tree.nodes.push(Node { feature: LEAF, threshold: 0.0, left: 0, right: 0, value: 0.0 });
                    tree.nodes.push(Node { feature: LEAF, threshold: 0.0, left: 0, right: 0, value: 0.0 });
                    tree.nodes[item.node] = Node {
                        feature: feature as u32,
                        threshold,
                        left: left as u32,
                        right: left as u32 + 1,
                        value: 0.0,
                    };
                    let mid = item.start + lo;
                    stack.push(WorkItem { node: left + 1, start: mid, end: item.end, depth: item.depth + 1 });
                    stack.push(WorkItem { node: left, start: item.start, end: mid, depth: item.depth + 1 });
                }
                None => {
                    let node = &mut tree.nodes[item.node];
                    if classify {
                        node.left = tree.class_probs.len() as u32;
                        node.right = node.left + k as u32;
                        tree.class_probs.extend(total.classes.iter().map(|c| c / total.weight));
                        node.value = argmax(&total.classes) as f64;
                    } else {
                        node.value = total.sum / total.weight;
                    }
                    if keep_samples {
                        node.left = tree.leaf_samples.len() as u32;
                        tree.leaf_samples.extend(segment.iter().map(|&r| (r, counts[r as usize])));
                        node.right = tree.leaf_samples.len() as u32;
                    }
                }
            }
        }
        tree
    }

    fn is_pure(&self, segment: &[u32]) -> bool {
        let first = self.y[segment[0] as usize];
        segment.iter().all(|&r| self.y[r as usize] == first)
    }

    fn best_split<R: Rng>(
        &self,
        segment: &[u32],
        counts: &[u32],
        total: &SideStats,
        classify: bool,
        rng: &mut R,
        scratch: &mut Vec<(f64, u32)>,
    ) -> Option<(usize, f64)> {
        let p = self.x.cols();
        let mut candidates = sample_indices(rng, p, self.mtry).into_vec();
        candidates.sort_unstable();
        let parent = total.score(classify);
        let min_w = self.min_node as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        for &f in &candidates {
            scratch.clear();
            scratch.extend(segment.iter().map(|&r| (self.x.get(r as usize, f), r)));
            scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if scratch[0].0 == scratch[scratch.len() - 1].0 {
                continue;
            }
            let mut left = SideStats::new(total.classes.len());
            let mut right = total.clone();
            for w in 0..scratch.len() - 1 {
                let (v, r) = scratch[w];
                let (y, c) = (self.y[r as usize], counts[r as usize] as f64);
                left.add(y, c, classify);
                right.remove(y, c, classify);
                let next = scratch[w + 1].0;
                if next == v || left.weight < min_w || right.weight < min_w {
                    continue;
                }
                let gain = left.score(classify) + right.score(classify) - parent;
                if gain > 1e-12 * parent.abs().max(1e-300) && best.map_or(true, |b| gain > b.0) {
                    best = Some((gain, f, midpoint(v, next)));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Midpoint of `lo < hi` that still separates them after rounding.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m < hi {
        m
    } else {
        lo
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

impl Forest {
    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn schema_hash(&self) -> u64 {
        names_hash(&self.feature_names)
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn n_training_rows(&self) -> usize {
        self.responses.len()
    }

    pub fn mtry(&self) -> usize {
        self.mtry
    }

    fn check_row(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.feature_names.len() {
            return invalid(format!("feature row has {} values, forest expects {}", x.len(), self.feature_names.len()));
        }
        Ok(())
    }

    fn classes(&self) -> Option<usize> {
        match self.config.task {
            Task::Classification { classes } => Some(classes as usize),
            _ => None,
        }
    }

    /// Mean of the leaf means (regression and quantile forests).
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check_row(x)?;
        if self.classes().is_some() {
            return invalid("predict on a classification forest; use predict_proba");
        }
        Ok(self.predict_unchecked(x))
    }

    fn predict_unchecked(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.leaf_for(x).value).sum::<f64>() / self.trees.len() as f64
    }

    /// Mean of the leaf class distributions.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_row(x)?;
        let Some(k) = self.classes() else {
            return invalid("predict_proba needs a classification forest");
        };
        let mut out = vec![0.0; k];
        for t in &self.trees {
            let leaf = t.leaf_for(x);
            let probs = &t.class_probs[leaf.left as usize..leaf.right as usize];
            for (o, p) in out.iter_mut().zip(probs) {
                *o += p;
            }
        }
        let nt = self.trees.len() as f64;
        out.iter_mut().for_each(|o| *o /= nt);
        Ok(out)
    }

    /// Weighted empirical quantiles of the training responses, where each
    /// row's weight is its average share of the leaves that `x` falls into.
    pub fn predict_quantiles(&self, x: &[f64], levels: &[f64]) -> Result<Vec<f64>> {
        self.check_row(x)?;
        if self.config.task != Task::Quantile {
            return invalid("quantile prediction needs a forest trained with Task::Quantile");
        }
        if let Some(q) = levels.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
            return invalid(format!("quantile level {q} outside (0, 1)"));
        }
        let mut weighted: Vec<(f64, u32, f64)> = Vec::new();
        for t in &self.trees {
            let leaf = t.leaf_for(x);
            let samples = &t.leaf_samples[leaf.left as usize..leaf.right as usize];
            let size: u32 = samples.iter().map(|s| s.1).sum();
            let share = 1.0 / size as f64;
            weighted.extend(samples.iter().map(|&(r, c)| (self.responses[r as usize], r, c as f64 * share)));
        }
        weighted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let total: f64 = weighted.iter().map(|w| w.2).sum();
        let mut out = Vec::with_capacity(levels.len());
        for &q in levels {
            let target = q * total;
            let mut acc = 0.0;
            let mut value = weighted[weighted.len() - 1].0;
            for &(y, _, w) in &weighted {
                acc += w;
                if acc >= target {
                    value = y;
                    break;
                }
            }
            out.push(value);
        }
        Ok(out)
    }

    pub fn predict_quantile(&self, x: &[f64], q: f64) -> Result<f64> {
        Ok(self.predict_quantiles(x, &[q])?[0])
    }

    /// Out-of-bag prediction per training row (`None` if the row was in every bootstrap).
    /// Regression: mean; classification: predicted label.
    pub fn oob_predictions(&self, x: &FeatureMatrix) -> Result<Vec<Option<f64>>> {
        self.check_training(x)?;
        let n = x.rows();
        let k = self.classes();
        let width = k.unwrap_or(1);
        let mut acc = vec![0.0; n * width];
        let mut hits = vec![0u32; n];
        for t in &self.trees {
            for &r in &t.oob {
                let r = r as usize;
                let leaf = t.leaf_for(x.row(r));
                hits[r] += 1;
                match k {
                    Some(_) => {
                        let probs = &t.class_probs[leaf.left as usize..leaf.right as usize];
                        for (a, p) in acc[r * width..(r + 1) * width].iter_mut().zip(probs) {
                            *a += p;
                        }
                    }
                    None => acc[r] += leaf.value,
                }
            }
        }
        Ok((0..n)
            .map(|r| {
                (hits[r] > 0).then(|| match k {
                    Some(_) => argmax(&acc[r * width..(r + 1) * width]) as f64,
                    None => acc[r] / hits[r] as f64,
                })
            })
            .collect())
    }

    /// OOB mean squared error (regression) or misclassification rate.
    pub fn oob_error(&self, x: &FeatureMatrix) -> Result<f64> {
        let preds = self.oob_predictions(x)?;
        let classify = self.classes().is_some();
        let (mut sum, mut count) = (0.0, 0usize);
        for (p, &y) in preds.iter().zip(&self.responses) {
            if let Some(p) = p {
                sum += if classify { (*p != y) as u8 as f64 } else { (p - y) * (p - y) };
                count += 1;
            }
        }
        if count == 0 {
            return invalid("no out-of-bag rows");
        }
        Ok(sum / count as f64)
    }

    fn check_training(&self, x: &FeatureMatrix) -> Result<()> {
        if x.rows() != self.responses.len() || x.cols() != self.feature_names.len() {
            return invalid("matrix does not match the training data shape");
        }
        Ok(())
    }

    fn tree_error(&self, t: &Tree, x: &FeatureMatrix, swap: Option<(usize, &[f64])>) -> f64 {
        let classify = self.classes().is_some();
        let mut sum = 0.0;
        for (pos, &r) in t.oob.iter().enumerate() {
            let row = x.row(r as usize);
            let leaf = match swap {
                Some((f, values)) => t.leaf_with(row, (f, values[pos])),
                None => t.leaf_for(row),
            };
            let y = self.responses[r as usize];
            sum += if classify { (leaf.value != y) as u8 as f64 } else { (leaf.value - y) * (leaf.value - y) };
        }
        sum / t.oob.len() as f64
    }

    /// Permutation importance on out-of-bag rows. `x` must be the training matrix.
    pub fn importance(&self, x: &FeatureMatrix) -> Result<Vec<Importance>> {
        self.check_training(x)?;
        let p = x.cols();
        let seed = self.config.seed;
        let per_tree: Vec<Vec<f64>> = self
            .trees
            .par_iter()
            .enumerate()
            .map(|(ti, t)| {
                if t.oob.is_empty() {
                    return vec![0.0; p];
                }
                let mut rng = stream_with_tag(seed, Domain::Importance as u64, ti as u64);
                let base = self.tree_error(t, x, None);
                let mut values = vec![0.0; t.oob.len()];
                (0..p)
                    .map(|f| {
                        for (v, &r) in values.iter_mut().zip(&t.oob) {
                            *v = x.get(r as usize, f);
                        }
                        values.shuffle(&mut rng);
                        if !t.uses_feature(f) {
                            return 0.0;
                        }
                        self.tree_error(t, x, Some((f, &values))) - base
                    })
                    .collect()
            })
            .collect();
        let used = per_tree.len().max(1) as f64;
        Ok((0..p)
            .map(|f| {
                let mean = per_tree.iter().map(|v| v[f]).sum::<f64>() / used;
                let var = per_tree.iter().map(|v| (v[f] - mean).powi(2)).sum::<f64>() / (used - 1.0).max(1.0);
                Importance { feature: self.feature_names[f].clone(), score: mean, std_error: (var / used).sqrt() }
            })
            .collect())
    }

    /// Largest and smallest leaf weight over all trees (diagnostics and tests).
    pub fn leaf_weight_range(&self) -> Option<(u32, u32)> {
        if self.config.task != Task::Quantile {
            return None;
        }
        let mut lo = u32::MAX;
        let mut hi = 0;
        for t in &self.trees {
            for n in t.nodes.iter().filter(|n| n.feature == LEAF) {
                let w: u32 = t.leaf_samples[n.left as usize..n.right as usize].iter().map(|s| s.1).sum();
                lo = lo.min(w);
                hi = hi.max(w);
            }
        }
        Some((lo, hi))
    }

    pub fn save<W: Write>(&self, out: W) -> Result<()> {
        let mut w = Writer::new(out);
        w.bytes(MAGIC)?;
        w.u32(VERSION)?;
        w.u64(self.schema_hash())?;
        w.u32(self.feature_names.len() as u32)?;
        for n in &self.feature_names {
            w.str(n)?;
        }
        let (task, classes) = match self.config.task {
            Task::Regression => (0u8, 0u32),
            Task::Quantile => (1, 0),
            Task::Classification { classes } => (2, classes),
        };
        w.u8(task)?;
        w.u32(classes)?;
        w.u32(self.trees.len() as u32)?;
        w.u32(self.mtry as u32)?;
        w.u32(self.min_node as u32)?;
        w.u32(self.config.max_depth.unwrap_or(0) as u32)?;
        w.u64(self.config.seed)?;
        w.u32(self.responses.len() as u32)?;
        for &y in &self.responses {
            w.f64(y)?;
        }
        for t in &self.trees {
            w.u32(t.nodes.len() as u32)?;
            for n in &t.nodes {
                w.u32(n.feature)?;
                w.f64(n.threshold)?;
                w.u32(n.left)?;
                w.u32(n.right)?;
                w.f64(n.value)?;
            }
            w.u32(t.leaf_samples.len() as u32)?;
            for &(r, c) in &t.leaf_samples {
                w.u32(r)?;
                w.u32(c)?;
            }
            w.u32(t.class_probs.len() as u32)?;
            for &p in &t.class_probs {
                w.f64(p)?;
            }
            w.u32(t.oob.len() as u32)?;
            for &r in &t.oob {
                w.u32(r)?;
            }
        }
        w.bytes(END)?;
        Ok(())
    }

    /// Load a container; with `expected_schema` set, a different feature schema is an error.
    pub fn load<R: Read>(input: R, expected_schema: Option<u64>) -> Result<Self> {
        const LIMIT: usize = 1 << 30;
        let mut r = Reader::new(input);
        let mut magic = [0u8; 8];
        r.bytes(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a forest container".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported container version {version}")));
        }
        let hash = r.u64()?;
        if let Some(expected) = expected_schema {
            if expected != hash {
                return Err(Error::SchemaMismatch { expected, found: hash });
            }
        }
        let p = r.len(1 << 16, "feature")?;
        let feature_names = (0..p).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
        if names_hash(&feature_names) != hash {
            return Err(Error::Format("schema hash does not match feature names".into()));
        }
        let task_code = r.u8()?;
        let classes = r.u32()?;
        let task = match task_code {
            0 => Task::Regression,
            1 => Task::Quantile,
            2 => Task::Classification { classes },
            other => return Err(Error::Format(format!("unknown task code {other}"))),
        };
        let n_trees = r.len(LIMIT, "tree")?;
        let mtry = r.u32()? as usize;
        let min_node = r.u32()? as usize;
        let max_depth = match r.u32()? {
            0 => None,
            d => Some(d as usize),
        };
        let seed = r.u64()?;
        let n_rows = r.len(LIMIT, "row")?;
        let responses = (0..n_rows).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let nn = r.len(LIMIT, "node")?;
            let mut nodes = Vec::with_capacity(nn);
            for _ in 0..nn {
                nodes.push(Node {
                    feature: r.u32()?,
                    threshold: r.f64()?,
                    left: r.u32()?,
                    right: r.u32()?,
                    value: r.f64()?,
                });
            }
            let ns = r.len(LIMIT, "leaf sample")?;
            let leaf_samples = (0..ns).map(|_| Ok((r.u32()?, r.u32()?))).collect::<Result<Vec<_>>>()?;
            let np = r.len(LIMIT, "class probability")?;
            let class_probs = (0..np).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            let no = r.len(LIMIT, "oob")?;
            let oob = (0..no).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            let tree = Tree { nodes, leaf_samples, class_probs, oob };
            validate_tree(&tree, p, n_rows, classes as usize, task)?;
            trees.push(tree);
        }
        let mut end = [0u8; 8];
        r.bytes(&mut end)?;
        if &end != END {
            return Err(Error::Format("missing end marker".into()));
        }
        let config = ForestConfig { n_trees, mtry: Some(mtry), min_node_size: Some(min_node), max_depth, seed, task };
        Ok(Self { config, mtry, min_node, feature_names, responses, trees })
    }
}

fn validate_tree(t: &Tree, p: usize, rows: usize, classes: usize, task: Task) -> Result<()> {
    let bad = |m: &str| Err(Error::Format(format!("invalid tree: {m}")));
    if t.nodes.is_empty() {
        return bad("no nodes");
    }
    for n in &t.nodes {
        if n.feature == LEAF {
            let (a, b) = (n.left as usize, n.right as usize);
            match task {
                Task::Quantile if a > b || b > t.leaf_samples.len() || a == b => return bad("leaf sample range"),
                Task::Classification { .. } if b != a + classes || b > t.class_probs.len() => {
                    return bad("leaf class range")
                }
                _ => {}
            }
        } else if n.feature as usize >= p || n.left as usize >= t.nodes.len() || n.right as usize >= t.nodes.len() {
            return bad("split node out of range");
        }
    }
    if t.leaf_samples.iter().any(|s| s.0 as usize >= rows) || t.oob.iter().any(|&r| r as usize >= rows) {
        return bad("row index out of range");
    }
    Ok(())
}
