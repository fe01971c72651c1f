//! Summary statistics of a digraph used as learner inputs.

use std::io::{Read, Write};

use nalgebra::{DMatrix, SVD};

use crate::error::{invalid, Error, Result};
use crate::graph::DiGraph;
use crate::logistic::{fit_5pl, flat_fit, LogisticFit};
use crate::triads::triad_census;

/// Feature names in schema order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "Den",
    "EdgeRecip",
    "Trans",
    "T003",
    "T012",
    "T102",
    "T021D",
    "T021U",
    "T021C",
    "T111D",
    "T111U",
    "T030T",
    "T030C",
    "T201",
    "T120D",
    "T120U",
    "T120C",
    "T210",
    "T300",
    "NMeanSqOD",
    "NMeanSqID",
    "NMeanIODProd",
    "FracIsol",
    "SS1",
    "SS2",
    "SS3",
    "SS4",
    "SS5",
    "SimmDen",
    "MeanCore",
    "SDCore",
    "SV2v1",
    "SV3v2",
    "SV4v3",
    "SVFrLg",
];

pub const FEATURE_COUNT: usize = 35;

/// Index of the fitted structure-statistic minimum (`SS1`, a.k.a. SSMin).
pub const SS_MIN: usize = 23;

/// Stable 64-bit identifier of the feature schema.
pub fn schema_hash() -> u64 {
    crate::persist::names_hash(&FEATURE_NAMES)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; FEATURE_COUNT],
    /// The structure statistics were flat (or too short) and got the fallback fit.
    pub structure_fallback: bool,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|&n| n == name).map(|i| self.values[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphIndices {
    pub density: f64,
    pub edge_reciprocity: f64,
    pub transitivity: f64,
}

/// Density, edgewise reciprocity and transitivity.
///
/// Empty premise sets give reciprocity 1 and transitivity 1.
pub fn graph_level_indices(g: &DiGraph) -> GraphIndices {
    let n = g.n();
    let m = g.edge_count();
    let density = if n < 2 { 0.0 } else { m as f64 / (n * (n - 1)) as f64 };

    let reciprocated = g.edges().filter(|&(i, j)| g.has_edge(j, i)).count();
    let edge_reciprocity = if m == 0 { 1.0 } else { reciprocated as f64 / m as f64 };

    // Two-paths i -> j -> k with k != i, and those closed by i -> k.
    let mut two_paths = 0u64;
    for j in 0..n {
        let back: u32 = g.in_row(j).iter().zip(g.out_row(j)).map(|(a, b)| (a & b).count_ones()).sum();
        two_paths += g.in_degree(j) as u64 * g.out_degree(j) as u64 - back as u64;
    }
    let closed: u64 = g
        .edges()
        .map(|(i, j)| g.out_row(i).iter().zip(g.out_row(j)).map(|(a, b)| (a & b).count_ones() as u64).sum::<u64>())
        .sum();
    let transitivity = if two_paths == 0 { 1.0 } else { closed as f64 / two_paths as f64 };

    GraphIndices { density, edge_reciprocity, transitivity }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeStats {
    pub mean_sq_out: f64,
    pub mean_sq_in: f64,
    pub mean_in_out_product: f64,
    pub isolate_fraction: f64,
}

/// Mean squared degrees and in/out cross-product, each over `(n - 1)^2`, plus isolate fraction.
pub fn degree_statistics(g: &DiGraph) -> DegreeStats {
    let n = g.n();
    if n == 0 {
        return DegreeStats { mean_sq_out: 0.0, mean_sq_in: 0.0, mean_in_out_product: 0.0, isolate_fraction: 0.0 };
    }
    let scale = ((n.max(2) - 1) as f64).powi(2) * n as f64;
    let (mut so, mut si, mut sp, mut iso) = (0u64, 0u64, 0u64, 0usize);
    for v in 0..n {
        let (o, i) = (g.out_degree(v) as u64, g.in_degree(v) as u64);
        so += o * o;
        si += i * i;
        sp += o * i;
        iso += (o == 0 && i == 0) as usize;
    }
    DegreeStats {
        mean_sq_out: so as f64 / scale,
        mean_sq_in: si as f64 / scale,
        mean_in_out_product: sp as f64 / scale,
        isolate_fraction: iso as f64 / n as f64,
    }
}

/// Mean fraction of vertices within directed distance `x` of a seed, for `x = 0..n`.
pub fn structure_statistics(g: &DiGraph) -> Vec<f64> {
    let n = g.n();
    let words = n.div_ceil(64).max(1);
    let mut totals = vec![0u64; n];
    let mut reached = vec![0u64; words];
    let mut frontier = vec![0u64; words];
    let mut next = vec![0u64; words];
    for seed in 0..n {
        reached.iter_mut().for_each(|w| *w = 0);
        frontier.iter_mut().for_each(|w| *w = 0);
        reached[seed / 64] |= 1 << (seed % 64);
        frontier[seed / 64] |= 1 << (seed % 64);
        let mut count = 1u64;
        for total in totals.iter_mut() {
            *total += count;
            if frontier.iter().all(|&w| w == 0) {
                continue;
            }
            next.iter_mut().for_each(|w| *w = 0);
            for (wi, &word) in frontier.iter().enumerate() {
                let mut rest = word;
                while rest != 0 {
                    let v = wi * 64 + rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    for (nw, ow) in next.iter_mut().zip(g.out_row(v)) {
                        *nw |= ow;
                    }
                }
            }
            for (nw, rw) in next.iter_mut().zip(reached.iter_mut()) {
                *nw &= !*rw;
                *rw |= *nw;
                count += nw.count_ones() as u64;
            }
            std::mem::swap(&mut frontier, &mut next);
        }
    }
    let denom = (n * n) as f64;
    totals.into_iter().map(|t| t as f64 / denom).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohesionStats {
    pub simmelian_density: f64,
    pub mean_core: f64,
    pub sd_core: f64,
}

/// Core numbers by peeling on total (in + out) degree.
pub fn core_numbers(g: &DiGraph) -> Vec<usize> {
    let n = g.n();
    let mut degree: Vec<usize> = (0..n).map(|v| g.in_degree(v) + g.out_degree(v)).collect();
    let mut removed = vec![false; n];
    let mut core = vec![0; n];
    let mut level = 0;
    for _ in 0..n {
        let v = (0..n).filter(|&v| !removed[v]).min_by_key(|&v| (degree[v], v)).expect("vertex remains");
        level = level.max(degree[v]);
        core[v] = level;
        removed[v] = true;
        for u in g.out_neighbors(v).chain(g.in_neighbors(v)) {
            if !removed[u] {
                degree[u] -= 1;
            }
        }
    }
    core
}

/// Simmelian tie density and the mean / population SD of core numbers.
pub fn cohesion_statistics(g: &DiGraph) -> CohesionStats {
    let n = g.n();
    if n == 0 {
        return CohesionStats { simmelian_density: 0.0, mean_core: 0.0, sd_core: 0.0 };
    }
    let words = n.div_ceil(64).max(1);
    let mut mutual = vec![0u64; n * words];
    for v in 0..n {
        for (w, (a, b)) in g.out_row(v).iter().zip(g.in_row(v)).enumerate() {
            mutual[v * words + w] = a & b;
        }
    }
    let mut simmelian = 0u64;
    for i in 0..n {
        let row_i = &mutual[i * words..(i + 1) * words];
        for (wi, &word) in row_i.iter().enumerate() {
            let mut rest = word;
            while rest != 0 {
                let j = wi * 64 + rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let row_j = &mutual[j * words..(j + 1) * words];
                if row_i.iter().zip(row_j).any(|(a, b)| a & b != 0) {
                    simmelian += 1;
                }
            }
        }
    }
    let pairs = if n < 2 { 1.0 } else { (n * (n - 1)) as f64 };

    let cores = core_numbers(g);
    let mean = cores.iter().sum::<usize>() as f64 / n as f64;
    let var = cores.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n as f64;
    CohesionStats { simmelian_density: simmelian as f64 / pairs, mean_core: mean, sd_core: var.sqrt() }
}

/// Singular values of the adjacency matrix in nonincreasing order.
pub fn singular_values(g: &DiGraph) -> Vec<f64> {
    let n = g.n();
    if n == 0 {
        return Vec::new();
    }
    if g.edge_count() == 0 {
        return vec![0.0; n];
    }
    let a = DMatrix::from_row_slice(n, n, &g.to_dense());
    let mut s: Vec<f64> = match SVD::try_new(a.clone(), false, false, f64::EPSILON, SVD_MAX_ITERS) {
        Some(svd) => svd.singular_values.iter().copied().collect(),
        None => jacobi_singular_values(a),
    };
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Cap on implicit QR iterations; some sparse 0/1 matrices never converge.
const SVD_MAX_ITERS: usize = 10_000;
const JACOBI_MAX_SWEEPS: usize = 100;

/// One-sided (Hestenes) Jacobi: rotate column pairs until all are
/// orthogonal; the column norms are then the singular values.
fn jacobi_singular_values(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.ncols();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (cp, cq) = (a.column(p), a.column(q));
                let alpha = cp.norm_squared();
                let beta = cq.norm_squared();
                let gamma = cp.dot(&cq);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..a.nrows() {
                    let (x, y) = (a[(r, p)], a[(r, q)]);
                    a[(r, p)] = c * x - s * y;
                    a[(r, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (0..n).map(|j| a.column(j).norm()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralStats {
    pub ratios: [f64; 3],
    pub large_fraction: f64,
}

/// Spectral statistics from singular values already sorted in nonincreasing order.
///
/// Values below `n * eps * s_1` are rounding noise and are treated as zero
/// before taking square roots.
pub fn spectral_from_singular_values(s: &[f64]) -> SpectralStats {
    let n = s.len();
    if n == 0 {
        return SpectralStats { ratios: [0.0; 3], large_fraction: 0.0 };
    }
    let cutoff = n as f64 * f64::EPSILON * s[0];
    let roots: Vec<f64> = s.iter().map(|&v| if v <= cutoff { 0.0 } else { v.sqrt() }).collect();
    let ratio = |i: usize| -> f64 {
        match (roots.get(i), roots.get(i + 1)) {
            (Some(&a), Some(&b)) if a >= 1e-12 => b / a,
            _ => 0.0,
        }
    };
    let threshold = 1.0 / n as f64;
    let large = roots.iter().filter(|&&r| r > threshold).count();
    SpectralStats { ratios: [ratio(0), ratio(1), ratio(2)], large_fraction: large as f64 / n as f64 }
}

pub fn spectral_statistics(g: &DiGraph) -> SpectralStats {
    spectral_from_singular_values(&singular_values(g))
}

/// The full feature vector.
pub fn featurize(g: &DiGraph) -> Result<FeatureVector> {
    let n = g.n();
    if n < 3 {
        return invalid(format!("features need at least 3 vertices, got {n}"));
    }
    let gl = graph_level_indices(g);
    let triads = triad_census(g)?;
    let deg = degree_statistics(g);
    let f = structure_statistics(g);
    let fit: LogisticFit = if f.len() >= 5 { fit_5pl(&f)? } else { flat_fit(f[0]) };
    let coh = cohesion_statistics(g);
    let sp = spectral_statistics(g);

    let mut values = [0.0; FEATURE_COUNT];
    values[0] = gl.density;
    values[1] = gl.edge_reciprocity;
    values[2] = gl.transitivity;
    values[3..19].copy_from_slice(&triads);
    values[19] = deg.mean_sq_out;
    values[20] = deg.mean_sq_in;
    values[21] = deg.mean_in_out_product;
    values[22] = deg.isolate_fraction;
    values[23..28].copy_from_slice(&fit.gamma);
    values[28] = coh.simmelian_density;
    values[29] = coh.mean_core;
    values[30] = coh.sd_core;
    values[31..34].copy_from_slice(&sp.ratios);
    values[34] = sp.large_fraction;
    Ok(FeatureVector { values, structure_fallback: fit.fallback || f.len() < 5 })
}

/// Write a feature table: header `graph,<names...>` then one row per graph.
pub fn write_feature_csv<W: Write>(out: W, rows: &[(String, FeatureVector)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["graph"];
    header.extend(FEATURE_NAMES);
    w.write_record(&header).map_err(csv_err)?;
    for (label, fv) in rows {
        let mut rec = vec![label.clone()];
        rec.extend(fv.values.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a table written by [`write_feature_csv`]. The header must match the schema.
pub fn read_feature_csv<R: Read>(input: R) -> Result<Vec<(String, [f64; FEATURE_COUNT])>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    let names: Vec<&str> = header.iter().skip(1).collect();
    if header.get(0) != Some("graph") || names != FEATURE_NAMES {
        return Err(Error::SchemaMismatch { expected: schema_hash(), found: crate::persist::names_hash(&names) });
    }
    let mut rows = Vec::new();
    for (idx, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = idx + 2;
        if rec.len() != FEATURE_COUNT + 1 {
            return Err(Error::Parse { line, message: format!("expected {} fields", FEATURE_COUNT + 1) });
        }
        let mut values = [0.0; FEATURE_COUNT];
        for (slot, field) in values.iter_mut().zip(rec.iter().skip(1)) {
            *slot = field.parse().map_err(|_| Error::Parse { line, message: format!("bad number {field:?}") })?;
        }
        rows.push((rec[0].to_string(), values));
    }
    Ok(rows)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}
