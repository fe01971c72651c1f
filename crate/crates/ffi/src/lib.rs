//! C ABI over the `biasnet` library.
//!
//! Objects cross the boundary as opaque handles created and destroyed by the
//! library. Every fallible function returns a [`BnStatus`]; on failure the
//! message is available from [`bn_last_error`] on the same thread.
//! Panics never unwind across the boundary; they surface as `BN_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use biasnet::features::{featurize, FEATURE_COUNT, FEATURE_NAMES};
use biasnet::prevision::PrevisionModel;
use biasnet::rng::{stream, Domain};
use biasnet::sfbn::{self, EventCounts, ModelSpec, ParamVector};
use biasnet::{DiGraph, Error, ValuedEdgeList};

/// Status codes returned by every fallible call.
#[allow(non_camel_case_types)]
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnStatus {
    BN_OK = 0,
    BN_INVALID_ARGUMENT = 1,
    BN_PARSE = 2,
    BN_SCHEMA_MISMATCH = 3,
    BN_FORMAT = 4,
    BN_IO = 5,
    BN_NULL_POINTER = 6,
    BN_PANIC = 7,
}

/// Model parameters in canonical order.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BnParams {
    pub pi: f64,
    pub sigma: f64,
    pub rho: f64,
    pub d: f64,
    pub delta: f64,
}

impl From<BnParams> for ParamVector {
    fn from(p: BnParams) -> Self {
        ParamVector { pi: p.pi, sigma: p.sigma, rho: p.rho, d: p.d, delta: p.delta }
    }
}

/// Opaque directed graph.
pub struct BnGraph(DiGraph);

/// Opaque trained prevision model.
pub struct BnModel(PrevisionModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: BnStatus, msg: impl Into<String>) -> BnStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> BnStatus {
    let status = match &e {
        Error::InvalidArgument(_) => BnStatus::BN_INVALID_ARGUMENT,
        Error::Parse { .. } => BnStatus::BN_PARSE,
        Error::SchemaMismatch { .. } => BnStatus::BN_SCHEMA_MISMATCH,
        Error::Format(_) => BnStatus::BN_FORMAT,
        Error::Io(_) => BnStatus::BN_IO,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> BnStatus) -> BnStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(BnStatus::BN_PANIC, "internal panic"),
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(BnStatus::BN_NULL_POINTER, concat!(stringify!($p), " is null"));
        })+
    };
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL,
/// or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bn_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Empty graph on `n` vertices.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn bn_graph_new(n: usize, out: *mut *mut BnGraph) -> BnStatus {
    guard(|| {
        non_null!(out);
        *out = Box::into_raw(Box::new(BnGraph(DiGraph::empty(n))));
        BnStatus::BN_OK
    })
}

/// Parse the edge-list text format, thresholding at strength `level`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn bn_graph_parse(text: *const c_char, level: u32, out: *mut *mut BnGraph) -> BnStatus {
    guard(|| {
        non_null!(text, out);
        let Ok(s) = CStr::from_ptr(text).to_str() else {
            return fail(BnStatus::BN_PARSE, "text is not UTF-8");
        };
        match ValuedEdgeList::parse(s).and_then(|v| v.threshold(level)) {
            Ok(g) => {
                *out = Box::into_raw(Box::new(BnGraph(g)));
                BnStatus::BN_OK
            }
            Err(e) => from_error(e),
        }
    })
}

/// Release a graph. Null is ignored.
///
/// # Safety
/// `g` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bn_graph_free(g: *mut BnGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Vertex count, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bn_graph_order(g: *const BnGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.n())
}

/// Edge count, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bn_graph_edge_count(g: *const BnGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.edge_count())
}

/// Set the state of edge `(i, j)`.
///
/// # Safety
/// `g` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bn_graph_set_edge(g: *mut BnGraph, i: usize, j: usize, present: bool) -> BnStatus {
    guard(|| {
        non_null!(g);
        match (*g).0.set_edge(i, j, present) {
            Ok(_) => BnStatus::BN_OK,
            Err(e) => from_error(e),
        }
    })
}

/// Query edge `(i, j)`.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bn_graph_has_edge(g: *const BnGraph, i: usize, j: usize, out: *mut bool) -> BnStatus {
    guard(|| {
        non_null!(g, out);
        let n = (*g).0.n();
        if i >= n || j >= n {
            return fail(BnStatus::BN_INVALID_ARGUMENT, format!("vertex out of range 0..{n}"));
        }
        *out = (*g).0.has_edge(i, j);
        BnStatus::BN_OK
    })
}

/// Simulate one network: `burnin` updates from the empty graph using chain
/// stream `index` of `seed`.
///
/// # Safety
/// `params` must be readable and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn bn_simulate(
    params: *const BnParams,
    n: usize,
    dichotomized: bool,
    burnin: u64,
    seed: u64,
    index: u64,
    out: *mut *mut BnGraph,
) -> BnStatus {
    guard(|| {
        non_null!(params, out);
        let psi = ParamVector::from(*params);
        let result = ModelSpec::new(n, dichotomized).and_then(|spec| {
            psi.validate()?;
            sfbn::sfbn_sample(&psi, &spec, burnin, &mut stream(seed, Domain::Chain, index), None)
        });
        match result {
            Ok(g) => {
                *out = Box::into_raw(Box::new(BnGraph(g)));
                BnStatus::BN_OK
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of features written by [`bn_featurize`].
#[no_mangle]
pub extern "C" fn bn_feature_count() -> usize {
    FEATURE_COUNT
}

/// Name of feature `i` as a static NUL-terminated string, or null when out of range.
#[no_mangle]
pub extern "C" fn bn_feature_name(i: usize) -> *const c_char {
    static NAMES: std::sync::OnceLock<Vec<CString>> = std::sync::OnceLock::new();
    let names = NAMES.get_or_init(|| FEATURE_NAMES.iter().map(|n| CString::new(*n).expect("ascii")).collect());
    names.get(i).map_or(ptr::null(), |c| c.as_ptr())
}

/// Write the feature vector into `out[0..len]`; `len` must be at least [`bn_feature_count`].
///
/// # Safety
/// `g` must be a live handle and `out` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bn_featurize(g: *const BnGraph, out: *mut f64, len: usize) -> BnStatus {
    guard(|| {
        non_null!(g, out);
        if len < FEATURE_COUNT {
            return fail(BnStatus::BN_INVALID_ARGUMENT, format!("buffer holds {len} values, need {FEATURE_COUNT}"));
        }
        match featurize(&(*g).0) {
            Ok(f) => {
                ptr::copy_nonoverlapping(f.values.as_ptr(), out, FEATURE_COUNT);
                BnStatus::BN_OK
            }
            Err(e) => from_error(e),
        }
    })
}

/// Edge probability for the given event counts.
///
/// # Safety
/// `params` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bn_update_probability(
    parent: u32,
    sibling: u32,
    double_role: u32,
    satiation: u32,
    params: *const BnParams,
    out: *mut f64,
) -> BnStatus {
    guard(|| {
        non_null!(params, out);
        let psi = ParamVector::from(*params);
        if let Err(e) = psi.validate() {
            return from_error(e);
        }
        let counts = EventCounts { parent, sibling, double_role, satiation };
        *out = sfbn::update_probability(&counts, &psi);
        BnStatus::BN_OK
    })
}

/// The two incompatible conditional marginals of the three-vertex example.
///
/// # Safety
/// `m1` and `m2` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bn_illposed_marginals(d: f64, sigma: f64, m1: *mut f64, m2: *mut f64) -> BnStatus {
    guard(|| {
        non_null!(m1, m2);
        match sfbn::illposed_marginals(d, sigma) {
            Ok((a, b)) => {
                *m1 = a;
                *m2 = b;
                BnStatus::BN_OK
            }
            Err(e) => from_error(e),
        }
    })
}

/// Load a model directory written by the CLI's `train`.
///
/// # Safety
/// `dir` must be a NUL-terminated path; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn bn_model_load(dir: *const c_char, out: *mut *mut BnModel) -> BnStatus {
    guard(|| {
        non_null!(dir, out);
        let Ok(s) = CStr::from_ptr(dir).to_str() else {
            return fail(BnStatus::BN_INVALID_ARGUMENT, "path is not UTF-8");
        };
        match PrevisionModel::load(Path::new(s)) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(BnModel(m)));
                BnStatus::BN_OK
            }
            Err(e) => from_error(e),
        }
    })
}

/// Release a model. Null is ignored.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bn_model_free(m: *mut BnModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Posterior summary for `g`. Writes 5 means and 5 standard deviations
/// (canonical parameter order) and `5 * n_levels` quantiles, parameter-major.
/// `undichotomized` receives the class probability, or NaN when the model
/// has no selector; it may be null.
///
/// # Safety
/// Handles must be live; `levels` must hold `n_levels` doubles; `means`
/// and `sds` 5 doubles each; `quantiles` `5 * n_levels` doubles (may be
/// null when `n_levels` is 0).
#[no_mangle]
pub unsafe extern "C" fn bn_model_posterior(
    m: *const BnModel,
    g: *const BnGraph,
    levels: *const f64,
    n_levels: usize,
    means: *mut f64,
    sds: *mut f64,
    quantiles: *mut f64,
    undichotomized: *mut f64,
) -> BnStatus {
    guard(|| {
        non_null!(m, g, means, sds);
        if n_levels > 0 && (levels.is_null() || quantiles.is_null()) {
            return fail(BnStatus::BN_NULL_POINTER, "levels and quantiles are required when n_levels > 0");
        }
        let lv: &[f64] = if n_levels == 0 { &[] } else { std::slice::from_raw_parts(levels, n_levels) };
        let s = match (*m).0.posterior_summary_with(&(*g).0, lv) {
            Ok(s) => s,
            Err(e) => return from_error(e),
        };
        for (k, p) in s.params.iter().enumerate() {
            *means.add(k) = p.mean;
            *sds.add(k) = p.sd;
            for (l, q) in p.quantiles.iter().enumerate() {
                *quantiles.add(k * n_levels + l) = q.1;
            }
        }
        if !undichotomized.is_null() {
            *undichotomized = s.undichotomized_probability.unwrap_or(f64::NAN);
        }
        BnStatus::BN_OK
    })
}
