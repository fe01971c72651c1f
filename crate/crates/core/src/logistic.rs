//! Five-parameter logistic compression of structure statistics.
//!
//! ```text
//! F(x) = g4 - (g4 - g1) / [1 + (x / g3)^g2]^g5
//! ```
//!
//! `g1` is held at the observed value at the origin (for structure statistics
//! this is exactly `1/n`); the remaining four parameters are fitted by least
//! squares. The search runs Nelder-Mead from the best few members of a fixed
//! initialisation grid and finishes with a Levenberg-Marquardt polish, all in
//! the unconstrained coordinates `(ln g2, ln g3, ln(g4 - g1), ln g5)`.

use nalgebra::{Matrix4, Vector4};

use crate::error::{invalid, Result};

/// Abscissa used in place of `x = 0`.
pub const X_ORIGIN: f64 = 1e-6;

const GRID_SCALE: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 20.0];
const GRID_STEEPNESS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
const GRID_ASYMMETRY: [f64; 3] = [0.5, 1.0, 2.0];
const LOCAL_STARTS: usize = 2;
const NM_MAX_EVALS: usize = 400;
const LM_MAX_ITERS: usize = 200;
const COORD_BOUND: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticFit {
    /// `(g1, g2, g3, g4, g5)`: minimum, steepness, x-scale, maximum, asymmetry.
    pub gamma: [f64; 5],
    pub rss: f64,
    /// Set when the input was flat and no curve was fitted.
    pub fallback: bool,
}

impl LogisticFit {
    pub fn eval(&self, x: f64) -> f64 {
        logistic5(&self.gamma, x)
    }
}

pub fn logistic5(g: &[f64; 5], x: f64) -> f64 {
    let x = if x <= 0.0 { X_ORIGIN } else { x };
    curve(g, g[2].ln(), x.ln())
}

/// `[1 + z]^-g5` is evaluated as `exp(-g5 ln(1 + z))` with `ln z = g2 (ln x - ln g3)`.
#[inline]
fn curve(g: &[f64; 5], ln_g3: f64, ln_x: f64) -> f64 {
    let ln_z = g[1] * (ln_x - ln_g3);
    g[3] - (g[3] - g[0]) * (-g[4] * softplus(ln_z)).exp()
}

#[inline]
fn abscissa(k: usize) -> f64 {
    if k == 0 {
        X_ORIGIN
    } else {
        k as f64
    }
}

fn log_abscissae(len: usize) -> Vec<f64> {
    (0..len).map(|k| abscissa(k).ln()).collect()
}

fn rss_with_logs(gamma: &[f64; 5], f: &[f64], ln_x: &[f64]) -> f64 {
    let ln_g3 = gamma[2].ln();
    f.iter()
        .zip(ln_x)
        .map(|(&y, &lx)| {
            let r = curve(gamma, ln_g3, lx) - y;
            r * r
        })
        .sum()
}

/// Residual sum of squares of a parameter vector against `f` at `x = 0, 1, ...`.
pub fn rss(gamma: &[f64; 5], f: &[f64]) -> f64 {
    rss_with_logs(gamma, f, &log_abscissae(f.len()))
}

/// Initialisation grid in evaluation order (scale outermost, asymmetry innermost).
pub fn grid_starts(f: &[f64]) -> Vec<[f64; 5]> {
    let lo = f[0];
    let hi = f[f.len() - 1];
    let mut out = Vec::with_capacity(60);
    for &g3 in &GRID_SCALE {
        for &g2 in &GRID_STEEPNESS {
            for &g5 in &GRID_ASYMMETRY {
                out.push([lo, g2, g3, hi, g5]);
            }
        }
    }
    out
}

/// Least-squares 5PL fit to a nondecreasing curve sampled at `x = 0..len`.
pub fn fit_5pl(f: &[f64]) -> Result<LogisticFit> {
    if f.len() < 5 {
        return invalid(format!("need at least 5 points for a 5PL fit, got {}", f.len()));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return invalid("curve contains non-finite values");
    }
    if f.windows(2).any(|w| w[1] < w[0]) {
        return invalid("curve is not nondecreasing");
    }
    let lo = f[0];
    let hi = f[f.len() - 1];
    if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        return Ok(flat_fit(lo));
    }

    let problem = Problem { f, ln_x: log_abscissae(f.len()), g1: lo };
    let mut starts: Vec<(usize, [f64; 4], f64)> = grid_starts(f)
        .iter()
        .enumerate()
        .map(|(idx, g)| {
            let t = to_coords(g);
            (idx, t, problem.rss(&t))
        })
        .collect();
    // Stable sort keeps grid order among equal residuals.
    starts.sort_by(|a, b| a.2.total_cmp(&b.2));

    let mut best: Option<([f64; 4], f64)> = None;
    for &(_, start, start_rss) in starts.iter().take(LOCAL_STARTS) {
        let (t, r) = nelder_mead(&problem, start, start_rss);
        let (t, r) = levenberg_marquardt(&problem, t, r);
        if best.map_or(true, |(_, b)| r < b) {
            best = Some((t, r));
        }
    }
    let (t, r) = best.expect("at least one start");
    Ok(LogisticFit { gamma: problem.gamma(&t), rss: r, fallback: false })
}

/// Convention for flat input.
pub fn flat_fit(level: f64) -> LogisticFit {
    LogisticFit { gamma: [level, 1.0, 1.0, level, 1.0], rss: 0.0, fallback: true }
}

struct Problem<'a> {
    f: &'a [f64],
    ln_x: Vec<f64>,
    g1: f64,
}

fn to_coords(g: &[f64; 5]) -> [f64; 4] {
    [g[1].ln(), g[2].ln(), (g[3] - g[0]).ln(), g[4].ln()]
}

fn clamp(t: [f64; 4]) -> [f64; 4] {
    t.map(|v| v.clamp(-COORD_BOUND, COORD_BOUND))
}

/// `ln(1 + e^v)` without overflow.
#[inline]
fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

impl Problem<'_> {
    fn gamma(&self, t: &[f64; 4]) -> [f64; 5] {
        [self.g1, t[0].exp(), t[1].exp(), self.g1 + t[2].exp(), t[3].exp()]
    }

    fn rss(&self, t: &[f64; 4]) -> f64 {
        rss_with_logs(&self.gamma(&clamp(*t)), self.f, &self.ln_x)
    }

    /// Residuals and their Jacobian with respect to the coordinates.
    fn jacobian(&self, t: &[f64; 4]) -> (Vec<f64>, Vec<[f64; 4]>) {
        let (g2, ln_g3, a, g5) = (t[0].exp(), t[1], t[2].exp(), t[3].exp());
        let mut res = Vec::with_capacity(self.f.len());
        let mut jac = Vec::with_capacity(self.f.len());
        for (&y, &lx) in self.f.iter().zip(&self.ln_x) {
            let ln_ratio = lx - ln_g3;
            let ln_z = g2 * ln_ratio;
            let w = softplus(ln_z);
            let d = (-g5 * w).exp();
            let s = 1.0 / (1.0 + (-ln_z).exp());
            let common = a * g5 * g2 * s * d;
            res.push(self.g1 + a - a * d - y);
            jac.push([common * ln_ratio, -common, a * (1.0 - d), g5 * a * d * w]);
        }
        (res, jac)
    }
}

fn nelder_mead(p: &Problem, start: [f64; 4], start_rss: f64) -> ([f64; 4], f64) {
    const STEP: f64 = 0.5;
    let mut simplex: Vec<([f64; 4], f64)> = Vec::with_capacity(5);
    simplex.push((start, start_rss));
    for axis in 0..4 {
        let mut v = start;
        v[axis] += STEP;
        let v = clamp(v);
        simplex.push((v, p.rss(&v)));
    }
    let mut evals = 5;
    while evals < NM_MAX_EVALS {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[4].1);
        if worst - best <= 1e-16 * (best + 1e-30) || worst - best < 1e-30 {
            break;
        }
        let mut centroid = [0.0; 4];
        for (v, _) in &simplex[..4] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / 4.0;
            }
        }
        let along = |coef: f64| -> [f64; 4] {
            let w = simplex[4].0;
            clamp(std::array::from_fn(|i| centroid[i] + coef * (w[i] - centroid[i])))
        };
        let reflected = along(-1.0);
        let fr = p.rss(&reflected);
        evals += 1;
        if fr < simplex[0].1 {
            let expanded = along(-2.0);
            let fe = p.rss(&expanded);
            evals += 1;
            simplex[4] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[3].1 {
            simplex[4] = (reflected, fr);
        } else {
            let contracted = if fr < simplex[4].1 { along(-0.5) } else { along(0.5) };
            let fc = p.rss(&contracted);
            evals += 1;
            if fc < simplex[4].1.min(fr) {
                simplex[4] = (contracted, fc);
            } else {
                let b = simplex[0].0;
                for entry in simplex.iter_mut().skip(1) {
                    let v = clamp(std::array::from_fn(|i| b[i] + 0.5 * (entry.0[i] - b[i])));
                    *entry = (v, p.rss(&v));
                }
                evals += 4;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

fn levenberg_marquardt(p: &Problem, start: [f64; 4], start_rss: f64) -> ([f64; 4], f64) {
    let (mut t, mut cur) = (start, start_rss);
    let mut lambda = 1e-3;
    for _ in 0..LM_MAX_ITERS {
        let (res, jac) = p.jacobian(&t);
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for (r, row) in res.iter().zip(&jac) {
            for a in 0..4 {
                jtr[a] += row[a] * r;
                for b in 0..4 {
                    jtj[(a, b)] += row[a] * row[b];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut m = jtj;
            for a in 0..4 {
                m[(a, a)] += lambda * jtj[(a, a)].max(1e-300);
            }
            let Some(step) = m.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let cand = clamp(std::array::from_fn(|i| t[i] + step[i]));
            let r = p.rss(&cand);
            if r.is_finite() && r < cur {
                let gain = cur - r;
                t = cand;
                cur = r;
                lambda = (lambda * 0.3).max(1e-12);
                improved = gain > 1e-15 * cur;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (t, cur)
}
