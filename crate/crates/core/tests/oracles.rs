use dsg_core::belief::{exact_nstage_value, exact_payoff};
use dsg_core::coupling::{doeblin_reset_probability, simulate_coupling, simulate_payoff, CouplingOptions};
use dsg_core::fixtures;
use dsg_core::pipeline::{approximate_uniform_value, PipelineCaps};
use dsg_core::solver::UniformOptions;
use dsg_core::structure::{derive_certificate, CertificateOptions};
use dsg_core::{Belief, Strategy};

fn belief_rule() -> (Strategy<f64>, Strategy<f64>) {
    (
        Strategy::stationary(|b: &Belief<f64>| b.probs().to_vec()),
        Strategy::stationary(|b: &Belief<f64>| b.probs().iter().rev().copied().collect()),
    )
}

#[test]
fn monte_carlo_payoff_matches_exact() {
    let spec = fixtures::two_signal_pair::<f64>();
    let (sigma, tau) = belief_rule();
    let b1 = spec.initial_belief();
    let exact = exact_payoff(&spec, b1, &sigma, &tau, 5, 1_000_000).unwrap();
    let mc = simulate_payoff(&spec, b1, &sigma, &tau, 5, 40_000, 3).unwrap();
    assert!((mc.mean - exact).abs() <= 4.0 * mc.stderr, "{} vs {exact} ± {}", mc.mean, mc.stderr);
}

#[test]
fn coupled_hidden_game_has_the_right_marginal() {
    // With history-independent strategies the shadow states are irrelevant,
    // so the hidden-game side of the coupling is plain play of the pair.
    let spec = fixtures::blind_rank_one_pair::<f64>();
    let sigma = Strategy::constant(vec![0.3, 0.7]);
    let tau = Strategy::constant(vec![0.6, 0.4]);
    let b1 = spec.initial_belief();
    let opts = CouplingOptions {
        episodes: 20_000,
        blocks: 1,
        seed: 5,
        trace_episodes: 0,
    };
    let rep = simulate_coupling(&spec, b1, 6, 2, 0.25, &sigma, &tau, &opts).unwrap();
    let exact = exact_payoff(&spec, b1, &sigma, &tau, 6, 1_000_000).unwrap();
    assert!((rep.mean_payoff - exact).abs() <= 4.0 * rep.payoff_stderr, "{} vs {exact}", rep.mean_payoff);
    assert_eq!(rep.stage_mean_reward.len(), 6);
}

#[test]
fn reset_witness_reaches_delta() {
    let spec = fixtures::blind_rank_one_pair::<f64>();
    let cert = derive_certificate(&spec, 0.25, &CertificateOptions::default()).unwrap();
    let w = doeblin_reset_probability(&spec, cert.m_eps as usize, 0.25, 8, 2_000, 1).unwrap();
    assert!(w.witness >= cert.delta_eps - 3.0 * w.stderr, "{} < {}", w.witness, cert.delta_eps);
}

#[test]
fn counterexample_reset_witness_is_reported() {
    let spec = fixtures::counterexample::<f64>();
    let w = doeblin_reset_probability(&spec, 4, 0.25, 4, 500, 2).unwrap();
    assert!((0.0..=1.0).contains(&w.witness));
    assert_eq!(w.per_pair.len(), 4);
}

#[test]
fn pipeline_reports_are_reproducible() {
    let spec = fixtures::two_signal_pair::<f64>();
    let run = || {
        let r = approximate_uniform_value(&spec, 0.25, None, &PipelineCaps::default(), Some(4), &UniformOptions::default())
            .unwrap();
        serde_json::to_string(&r).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn coupling_is_thread_count_independent() {
    let spec = fixtures::coupling_pair::<f64>();
    let (sigma, tau) = belief_rule();
    let opts = CouplingOptions {
        episodes: 3_000,
        blocks: 2,
        seed: 17,
        trace_episodes: 2,
    };
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| simulate_coupling(&spec, spec.initial_belief(), 8, 2, 0.2, &sigma, &tau, &opts).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.trace_csv(), b.trace_csv());
}

#[test]
fn overridden_pipeline_tracks_long_horizon_value() {
    let spec = fixtures::blind_rank_one_pair::<f64>();
    let r = approximate_uniform_value(&spec, 0.25, None, &PipelineCaps::default(), Some(8), &UniformOptions::default())
        .unwrap();
    let long = exact_nstage_value(&spec, spec.initial_belief(), 64, 1_000_000).unwrap();
    assert!((r.value - long).abs() <= 0.25, "{} vs {long}", r.value);
}

#[test]
fn value_is_insensitive_to_initial_belief_on_primitive_game() {
    let spec = fixtures::coupling_pair::<f64>();
    let caps = PipelineCaps::default();
    let opts = UniformOptions::default();
    let at = |p: f64| {
        let s = spec.clone().with_initial_belief(Belief::from_f64(&[p, 1.0 - p]).unwrap());
        approximate_uniform_value(&s, 0.2, None, &caps, Some(10), &opts).unwrap().value
    };
    let (a, b) = (at(1.0), at(0.0));
    assert!((a - b).abs() <= 2.0 * 0.2 + opts.tol, "{a} vs {b}");
}
