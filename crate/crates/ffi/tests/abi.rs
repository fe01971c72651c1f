use std::ffi::{c_char, CStr, CString};
use std::ptr;

use biasnet_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { bn_last_error(buf.as_mut_ptr(), buf.len()) };
    if n == 0 {
        return String::new();
    }
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn params(pi: f64, sigma: f64, rho: f64, d: f64, delta: f64) -> BnParams {
    BnParams { pi, sigma, rho, d, delta }
}

#[test]
fn update_probability_and_marginals() {
    let mut p = 0.0;
    let psi = params(0.0, 0.2, 0.0, 0.1, 0.5);
    assert_eq!(unsafe { bn_update_probability(0, 2, 0, 2, &psi, &mut p) }, BnStatus::BN_OK);
    assert!((p - 0.106).abs() < 1e-12);
    let (mut m1, mut m2) = (0.0, 0.0);
    assert_eq!(unsafe { bn_illposed_marginals(0.5, 0.5, &mut m1, &mut m2) }, BnStatus::BN_OK);
    assert!((m1 - 0.6).abs() < 1e-12 && (m2 - 0.75).abs() < 1e-12);
    assert_eq!(unsafe { bn_illposed_marginals(0.0, 0.5, &mut m1, &mut m2) }, BnStatus::BN_INVALID_ARGUMENT);
    assert!(last_error().contains("d = 0"));
    let bad = params(1.5, 0.0, 0.0, 0.1, 0.0);
    assert_eq!(unsafe { bn_update_probability(0, 0, 0, 0, &bad, &mut p) }, BnStatus::BN_INVALID_ARGUMENT);
}

#[test]
fn graph_handles() {
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(bn_graph_new(3, &mut g), BnStatus::BN_OK);
        assert_eq!(bn_graph_set_edge(g, 0, 1, true), BnStatus::BN_OK);
        assert_eq!(bn_graph_set_edge(g, 1, 1, true), BnStatus::BN_INVALID_ARGUMENT);
        assert!(!last_error().is_empty());
        let mut has = false;
        assert_eq!(bn_graph_has_edge(g, 0, 1, &mut has), BnStatus::BN_OK);
        assert!(has);
        assert_eq!(bn_graph_has_edge(g, 0, 7, &mut has), BnStatus::BN_INVALID_ARGUMENT);
        assert_eq!(bn_graph_order(g), 3);
        assert_eq!(bn_graph_edge_count(g), 1);
        bn_graph_free(g);
        bn_graph_free(ptr::null_mut());
        assert_eq!(bn_graph_set_edge(ptr::null_mut(), 0, 1, true), BnStatus::BN_NULL_POINTER);
    }
}

#[test]
fn parse_and_featurize() {
    let text = CString::new("4\n0 1 3\n1 2 1\n2 3 2\n").unwrap();
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(bn_graph_parse(text.as_ptr(), 2, &mut g), BnStatus::BN_OK);
        assert_eq!(bn_graph_edge_count(g), 2);
        let mut values = vec![0.0; bn_feature_count()];
        assert_eq!(bn_featurize(g, values.as_mut_ptr(), values.len()), BnStatus::BN_OK);
        assert!((values[0] - 2.0 / 12.0).abs() < 1e-12);
        assert_eq!(bn_featurize(g, values.as_mut_ptr(), 3), BnStatus::BN_INVALID_ARGUMENT);
        assert_eq!(CStr::from_ptr(bn_feature_name(0)).to_str().unwrap(), "Den");
        assert!(bn_feature_name(bn_feature_count()).is_null());
        bn_graph_free(g);
        let bad = CString::new("3\n0 0 1\n").unwrap();
        assert_eq!(bn_graph_parse(bad.as_ptr(), 1, &mut g), BnStatus::BN_PARSE);
        assert!(last_error().contains("line 2"));
    }
}

#[test]
fn simulate_is_deterministic() {
    let psi = params(0.3, 0.0, 0.0, 0.1, 0.0);
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(bn_simulate(&psi, 20, false, 20_000, 7, 0, &mut a), BnStatus::BN_OK);
        assert_eq!(bn_simulate(&psi, 20, false, 20_000, 7, 0, &mut b), BnStatus::BN_OK);
        let mut fa = vec![0.0; bn_feature_count()];
        let mut fb = fa.clone();
        bn_featurize(a, fa.as_mut_ptr(), fa.len());
        bn_featurize(b, fb.as_mut_ptr(), fb.len());
        assert_eq!(fa, fb);
        bn_graph_free(a);
        bn_graph_free(b);
        let zero = params(0.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(bn_simulate(&zero, 20, false, 10, 7, 0, &mut a), BnStatus::BN_INVALID_ARGUMENT);
        assert!(last_error().contains("absorbing"));
    }
}

#[test]
fn model_load_errors() {
    let dir = CString::new("/nonexistent/biasnet-model").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { bn_model_load(dir.as_ptr(), &mut m) }, BnStatus::BN_IO);
    assert!(m.is_null());
}

#[test]
fn header_lists_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/biasnet.h")).unwrap();
    for name in ["bn_simulate", "bn_featurize", "bn_model_posterior", "bn_last_error", "BN_SCHEMA_MISMATCH", "BnParams"]
    {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn model_posterior_round_trip() {
    use biasnet::prevision::{generate_training_set, train_prevision, PrevisionConfig, PriorSpec};
    use biasnet::sfbn::ModelSpec;

    let n = 14;
    let spec = ModelSpec::new(n, false).unwrap();
    let prior = PriorSpec::with_mean_degree(n, 3.0).unwrap();
    let set = generate_training_set(&prior, 80, &spec, 2_000, 1).unwrap();
    let cfg = PrevisionConfig { n_trees: 10, ..PrevisionConfig::new(2) };
    let model = train_prevision(&set, &prior, &spec, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    model.save(dir.path()).unwrap();

    let path = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut m = ptr::null_mut();
    let mut g = ptr::null_mut();
    let psi = params(0.2, 0.0, 0.0, 0.2, 0.0);
    unsafe {
        assert_eq!(bn_model_load(path.as_ptr(), &mut m), BnStatus::BN_OK, "{}", last_error());
        assert_eq!(bn_simulate(&psi, n, false, 2_000, 5, 0, &mut g), BnStatus::BN_OK);
        let levels = [0.025, 0.5, 0.975];
        let (mut means, mut sds, mut qs, mut p) = ([0.0; 5], [0.0; 5], [0.0; 15], 0.0);
        let status =
            bn_model_posterior(m, g, levels.as_ptr(), 3, means.as_mut_ptr(), sds.as_mut_ptr(), qs.as_mut_ptr(), &mut p);
        assert_eq!(status, BnStatus::BN_OK);
        assert!(p.is_nan());
        let direct = model.posterior_summary_with(&graph_of(g), &levels).unwrap();
        for k in 0..5 {
            assert_eq!(means[k], direct.params[k].mean);
            assert!(qs[3 * k] <= qs[3 * k + 1] && qs[3 * k + 1] <= qs[3 * k + 2]);
        }
        bn_graph_free(g);
        bn_model_free(m);
    }
}

/// Rebuild the graph behind a handle through the public ABI.
unsafe fn graph_of(g: *const BnGraph) -> biasnet::DiGraph {
    let n = bn_graph_order(g);
    let mut out = biasnet::DiGraph::empty(n);
    for i in 0..n {
        for j in 0..n {
            let mut has = false;
            if i != j && bn_graph_has_edge(g, i, j, &mut has) == BnStatus::BN_OK && has {
                out.set_edge(i, j, true).unwrap();
            }
        }
    }
    out
}
