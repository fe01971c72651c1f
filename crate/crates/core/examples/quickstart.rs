//! Simulate a network, train a small prevision model and summarise the posterior.
//!
//! cargo run --release --example quickstart

use biasnet::prevision::{generate_training_set, train_prevision, PrevisionConfig, PriorSpec};
use biasnet::rng::{stream, Domain};
use biasnet::sfbn::{burnin_steps, sfbn_sample};
use biasnet::{ModelSpec, ParamVector};

fn main() -> biasnet::Result<()> {
    let n = 20;
    let spec = ModelSpec::new(n, false)?;
    let burnin = burnin_steps(n, 200);

    let truth = ParamVector::new(0.5, 0.1, 0.0, 0.1, 0.1)?;
    let observed = sfbn_sample(&truth, &spec, burnin, &mut stream(1, Domain::Chain, 0), None)?;
    println!("observed network: {} vertices, {} edges", observed.n(), observed.edge_count());

    let prior = PriorSpec::with_mean_degree(n, 3.0)?;
    let set = generate_training_set(&prior, 2000, &spec, burnin, 2)?;
    let mut cfg = PrevisionConfig::new(3);
    cfg.n_trees = 100;
    let model = train_prevision(&set, &prior, &spec, &cfg)?;

    let summary = model.posterior_summary_with(&observed, &[0.025, 0.5, 0.975])?;
    println!("{:<6} {:>6} {:>8} {:>8} {:>8} {:>8}", "param", "truth", "mean", "q0.025", "q0.5", "q0.975");
    for (p, t) in summary.params.iter().zip(truth.to_array()) {
        let q: Vec<f64> = p.quantiles.iter().map(|q| q.1).collect();
        println!("{:<6} {:>6.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3}", p.name, t, p.mean, q[0], q[1], q[2]);
    }
    Ok(())
}
