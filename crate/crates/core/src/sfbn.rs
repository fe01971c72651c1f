//! Bias-event statistics and the Markovian biased net process.
//!
//! Each update picks an ordered pair `(i, j)` uniformly at random and sets the
//! edge present with probability
//!
//! ```text
//! P = (1 - delta)^w * [1 - (1 - d)(1 - pi)^t_p (1 - sigma)^t_s (1 - rho)^t_r]
//! ```
//!
//! where `t_p`, `t_s`, `t_r` count potential parent, sibling and double-role
//! events for the pair and `w` counts satiation events (other out-ties of `i`).
//! An edge that is present but not re-confirmed is removed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graph::DiGraph;

/// Parameter names in canonical order.
pub const PARAM_NAMES: [&str; 5] = ["pi", "sigma", "rho", "d", "delta"];

/// Counts at or below this bound use `powi`; larger counts go through logs.
const DIRECT_POW_LIMIT: u32 = 64;

/// Formation probabilities `(pi, sigma, rho, d)` and the satiation probability `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamVector {
    pub pi: f64,
    pub sigma: f64,
    pub rho: f64,
    pub d: f64,
    pub delta: f64,
}

impl ParamVector {
    pub fn new(pi: f64, sigma: f64, rho: f64, d: f64, delta: f64) -> Result<Self> {
        let p = Self { pi, sigma, rho, d, delta };
        p.validate()?;
        Ok(p)
    }

    /// Baseline-only parameters.
    pub fn baseline(d: f64) -> Self {
        Self { d, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in PARAM_NAMES.iter().zip(self.to_array()) {
            if !(0.0..=1.0).contains(&v) {
                return invalid(format!("{name} = {v} is not a probability"));
            }
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.pi, self.sigma, self.rho, self.d, self.delta]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self { pi: a[0], sigma: a[1], rho: a[2], d: a[3], delta: a[4] }
    }
}

/// Which optional event types are switched on. The baseline is always active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveTerms {
    pub parent: bool,
    pub sibling: bool,
    pub double_role: bool,
    pub satiation: bool,
}

impl Default for ActiveTerms {
    fn default() -> Self {
        Self { parent: true, sibling: true, double_role: true, satiation: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n: usize,
    /// Truncate sibling and double-role counts at one shared partner.
    pub dichotomized: bool,
    pub terms: ActiveTerms,
}

impl ModelSpec {
    pub fn new(n: usize, dichotomized: bool) -> Result<Self> {
        if n < 2 {
            return invalid(format!("graph order must be at least 2, got {n}"));
        }
        Ok(Self { n, dichotomized, terms: ActiveTerms::default() })
    }

    pub fn with_terms(mut self, terms: ActiveTerms) -> Self {
        self.terms = terms;
        self
    }
}

/// Potential bias events for a focal pair. The baseline count is implicitly 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EventCounts {
    pub parent: u32,
    pub sibling: u32,
    pub double_role: u32,
    pub satiation: u32,
}

/// Event counts for `(i, j)` computed on the graph with the `(i, j)` edge ignored.
pub fn event_counts(g: &DiGraph, i: usize, j: usize, spec: &ModelSpec) -> Result<EventCounts> {
    if i >= g.n() || j >= g.n() {
        return invalid(format!("vertex out of range: ({i}, {j}) with n = {}", g.n()));
    }
    if i == j {
        return invalid(format!("focal pair ({i}, {i}) is a loop"));
    }
    Ok(counts_unchecked(g, i, j, spec))
}

#[inline]
fn counts_unchecked(g: &DiGraph, i: usize, j: usize, spec: &ModelSpec) -> EventCounts {
    let terms = spec.terms;
    let reciprocated = g.has_edge(j, i) as u32;
    let mut shared = if terms.sibling || terms.double_role { g.shared_in_partners(i, j) as u32 } else { 0 };
    if spec.dichotomized {
        shared = shared.min(1);
    }
    let satiation = if terms.satiation { (g.out_degree(i) - g.has_edge(i, j) as usize) as u32 } else { 0 };
    EventCounts {
        parent: if terms.parent { reciprocated } else { 0 },
        sibling: if terms.sibling { shared } else { 0 },
        double_role: if terms.double_role { reciprocated * shared } else { 0 },
        satiation,
    }
}

/// `(1 - theta)^count`.
#[inline]
fn fail_power(theta: f64, count: u32) -> f64 {
    if count <= DIRECT_POW_LIMIT {
        (1.0 - theta).powi(count as i32)
    } else {
        (count as f64 * (-theta).ln_1p()).exp()
    }
}

/// Apply `w` satiation events to a formation probability.
///
/// Multiplying one factor at a time makes `P(w + 1) = (1 - delta) P(w)` hold
/// exactly in floating point.
#[inline]
fn inhibit(mut p: f64, delta: f64, w: u32) -> f64 {
    if delta == 0.0 {
        return p;
    }
    let keep = 1.0 - delta;
    for _ in 0..w {
        p *= keep;
    }
    p
}

#[inline]
fn formation(psi: &ParamVector, fp: f64, fs: f64, fr: f64) -> f64 {
    // d + (1 - d)(1 - F) rather than 1 - (1 - d)F, so the baseline-only case returns d exactly.
    psi.d + (1.0 - psi.d) * (1.0 - fp * fs * fr)
}

/// Probability that the focal edge is present after an update.
pub fn update_probability(counts: &EventCounts, psi: &ParamVector) -> f64 {
    let p = formation(
        psi,
        fail_power(psi.pi, counts.parent),
        fail_power(psi.sigma, counts.sibling),
        fail_power(psi.rho, counts.double_role),
    );
    inhibit(p, psi.delta, counts.satiation)
}

/// Precomputed update kernel for one `(psi, spec)` pair.
#[derive(Debug, Clone)]
pub struct Sampler {
    psi: ParamVector,
    spec: ModelSpec,
    parent_fail: [f64; 2],
    sibling_fail: Vec<f64>,
    double_role_fail: Vec<f64>,
    satiation_keep: Vec<f64>,
    pick_source: UniformIndex,
    pick_target: UniformIndex,
}

/// Unbiased draw from `0..m` by Lemire's multiply-and-reject with a
/// precomputed rejection threshold.
#[derive(Debug, Clone, Copy)]
struct UniformIndex {
    m: u32,
    threshold: u32,
}

impl UniformIndex {
    fn new(m: u32) -> Self {
        debug_assert!(m > 0);
        Self { m, threshold: m.wrapping_neg() % m }
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        loop {
            let prod = rng.next_u32() as u64 * self.m as u64;
            if (prod as u32) >= self.threshold {
                return (prod >> 32) as usize;
            }
        }
    }
}

impl Sampler {
    pub fn new(psi: ParamVector, spec: ModelSpec) -> Result<Self> {
        psi.validate()?;
        if spec.n < 2 {
            return invalid("graph order must be at least 2");
        }
        let table = |theta: f64| (0..=spec.n as u32).map(|c| fail_power(theta, c)).collect::<Vec<_>>();
        Ok(Self {
            psi,
            spec,
            parent_fail: [fail_power(psi.pi, 0), fail_power(psi.pi, 1)],
            sibling_fail: table(psi.sigma),
            double_role_fail: table(psi.rho),
            satiation_keep: (0..=spec.n as u32).map(|w| inhibit(1.0, psi.delta, w)).collect(),
            pick_source: UniformIndex::new(spec.n as u32),
            pick_target: UniformIndex::new(spec.n as u32 - 1),
        })
    }

    pub fn params(&self) -> &ParamVector {
        &self.psi
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// [`update_probability`] for the counts at `(i, j)`, up to rounding in
    /// the last place (the satiation factor comes from a table here).
    #[inline]
    pub fn probability(&self, g: &DiGraph, i: usize, j: usize) -> f64 {
        let c = counts_unchecked(g, i, j, &self.spec);
        let p = formation(
            &self.psi,
            self.parent_fail[c.parent as usize],
            self.sibling_fail[c.sibling as usize],
            self.double_role_fail[c.double_role as usize],
        );
        p * self.satiation_keep[c.satiation as usize]
    }

    /// Update `(i, j)` given the uniform deviate `u`. Returns the new state.
    #[inline]
    pub fn apply(&self, g: &mut DiGraph, i: usize, j: usize, u: f64) -> bool {
        let present = u < self.probability(g, i, j);
        g.set_unchecked(i, j, present);
        present
    }

    /// One update of a uniformly chosen ordered pair. Returns the pair.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, g: &mut DiGraph, rng: &mut R) -> (usize, usize) {
        let i = self.pick_source.sample(rng);
        let k = self.pick_target.sample(rng);
        let j = if k >= i { k + 1 } else { k };
        let u: f64 = rng.gen();
        self.apply(g, i, j, u);
        (i, j)
    }

    pub fn run<R: Rng + ?Sized>(&self, g: &mut DiGraph, steps: u64, rng: &mut R) {
        for _ in 0..steps {
            self.step(g, rng);
        }
    }
}

/// Run `burnin` updates from `initial` (the empty graph when `None`).
pub fn sfbn_sample<R: Rng + ?Sized>(
    psi: &ParamVector,
    spec: &ModelSpec,
    burnin: u64,
    rng: &mut R,
    initial: Option<DiGraph>,
) -> Result<DiGraph> {
    let mut g = match initial {
        Some(g) if g.n() != spec.n => {
            return invalid(format!("initial graph has order {}, model expects {}", g.n(), spec.n))
        }
        Some(g) => g,
        None => DiGraph::empty(spec.n),
    };
    if psi.d == 0.0 && g.edge_count() == 0 && burnin > 0 {
        return invalid("d = 0 makes the empty graph an absorbing state");
    }
    let sampler = Sampler::new(*psi, *spec)?;
    sampler.run(&mut g, burnin, rng);
    Ok(g)
}

/// Burn-in of `multiplier * n^2` updates.
pub fn burnin_steps(n: usize, multiplier: u64) -> u64 {
    multiplier * (n as u64) * (n as u64)
}

/// The two values of `Pr(Y_jk = 1 | rest)` implied by the conditional
/// baseline + sibling specification on the three-vertex counterexample.
/// They agree only when `sigma = 0`.
pub fn illposed_marginals(d: f64, sigma: f64) -> Result<(f64, f64)> {
    if !(d > 0.0 && d < 1.0) {
        return invalid(format!("d = {d} must lie in (0, 1)"));
    }
    if !(0.0..1.0).contains(&sigma) {
        return invalid(format!("sigma = {sigma} must lie in [0, 1)"));
    }
    let m2 = d + sigma - d * sigma;
    let m1 = d * m2 / (d + sigma * (1.0 - d) * (1.0 - d));
    Ok((m1, m2))
}
