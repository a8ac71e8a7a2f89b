//! Monte Carlo coupling of a hidden game and its abstract game, and an
//! empirical witness for the Doeblin reset probability.
//!
//! Both games share one uniform per player for the action draws; each game
//! draws its signal from its own uniform. Draws use the inverse CDF. Every
//! episode owns a ChaCha stream keyed by its index, so results do not depend
//! on how episodes are spread over threads.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::abstraction::AbstractState;
use crate::belief::{belief_update, signal_distribution, stage_reward};
use crate::error::{Error, Result};
use crate::game::{Belief, GameSpec};
use crate::scalar::Scalar;
use crate::strategy::{random_mixture, History, PlayView, Step, Strategy};

/// Episodes per deterministic reduction chunk.
const CHUNK: usize = 512;

/// Index drawn from `mix` by inverse CDF at `u ∈ [0, 1)`.
fn pick<T: Scalar>(mix: &[T], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (a, &p) in mix.iter().enumerate() {
        let p = p.as_f64();
        if p > 0.0 {
            acc += p;
            last = a;
            if u < acc {
                return a;
            }
        }
    }
    last
}

#[derive(Clone, Copy, Debug)]
pub struct CouplingOptions {
    pub episodes: usize,
    pub blocks: usize,
    pub seed: u64,
    /// Number of leading episodes whose stage-by-stage trace is kept.
    pub trace_episodes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CouplingReport {
    pub episodes: usize,
    pub blocks: usize,
    pub eta: usize,
    pub m_eps: usize,
    pub epsilon: f64,
    pub horizon: usize,
    pub seed: u64,
    /// Mean over episodes of `(1/n) Σ_m (Ḡ_m − Ḡ^A_m)`.
    pub mean_gap: f64,
    pub gap_stderr: f64,
    pub mean_payoff: f64,
    pub payoff_stderr: f64,
    pub mean_abstract_payoff: f64,
    pub abstract_payoff_stderr: f64,
    /// Value recorded when case 1 never occurs in a block.
    pub t_ell_sentinel: usize,
    pub t_ell_histogram: BTreeMap<usize, u64>,
    /// Per block: mean over episodes of `T_ℓ / (η / m_ε)`.
    pub case2_fraction: Vec<f64>,
    pub stage_mean_reward: Vec<f64>,
    pub stage_mean_abstract_reward: Vec<f64>,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

impl CouplingReport {
    /// Empirical `P(T_ℓ > ω)` over all (episode, block) pairs and its standard error.
    pub fn tail_probability(&self, omega: usize) -> (f64, f64) {
        let total: u64 = self.t_ell_histogram.values().sum();
        let over: u64 = self.t_ell_histogram.range(omega + 1..).map(|(_, &c)| c).sum();
        let p = over as f64 / total as f64;
        (p, (p * (1.0 - p) / total as f64).sqrt())
    }

    /// `episode,stage,belief,abstract_state,gap`; beliefs are `;`-separated.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("episode,stage,belief,abstract_state,gap\n");
        for r in &self.trace {
            let b: Vec<String> = r.belief.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(out, "{},{},{},\"{}\",{}", r.episode, r.stage, b.join(";"), r.abstract_state, r.gap);
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub episode: usize,
    pub stage: usize,
    pub belief: Vec<f64>,
    pub abstract_state: String,
    pub gap: f64,
}

#[derive(Default)]
struct Totals {
    gap: f64,
    gap_sq: f64,
    pay: f64,
    pay_sq: f64,
    apay: f64,
    apay_sq: f64,
    stage: Vec<f64>,
    astage: Vec<f64>,
    t_ell: BTreeMap<usize, u64>,
    t_sum: Vec<f64>,
    trace: Vec<TraceRow>,
}

impl Totals {
    fn new(horizon: usize, blocks: usize) -> Self {
        Self {
            stage: vec![0.0; horizon],
            astage: vec![0.0; horizon],
            t_sum: vec![0.0; blocks],
            ..Default::default()
        }
    }

    fn merge(&mut self, o: Totals) {
        self.gap += o.gap;
        self.gap_sq += o.gap_sq;
        self.pay += o.pay;
        self.pay_sq += o.pay_sq;
        self.apay += o.apay;
        self.apay_sq += o.apay_sq;
        for (a, b) in self.stage.iter_mut().zip(o.stage) {
            *a += b;
        }
        for (a, b) in self.astage.iter_mut().zip(o.astage) {
            *a += b;
        }
        for (k, c) in o.t_ell {
            *self.t_ell.entry(k).or_insert(0) += c;
        }
        for (a, b) in self.t_sum.iter_mut().zip(o.t_sum) {
            *a += b;
        }
        self.trace.extend(o.trace);
    }
}

fn episode_rng(seed: u64, episode: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode as u64);
    rng
}

struct Ctx<'a, T: Scalar> {
    spec: &'a GameSpec<T>,
    b1: &'a Belief<T>,
    eta: usize,
    m_eps: usize,
    eps: T,
    sigma_a: &'a Strategy<T>,
    tau: &'a Strategy<T>,
    blocks: usize,
}

/// Moves the abstract state; an inadmissible signal leaves it in place.
fn advance_abstract<T: Scalar>(spec: &GameSpec<T>, x: &mut AbstractState<T>, st: Step, eta: usize) -> Result<()> {
    match x.advance(spec, st.a1, st.a2, st.signal, eta) {
        Ok(()) | Err(Error::InadmissibleSignal { .. }) => {}
        Err(e) => return Err(e),
    }
    Ok(())
}

fn advance_belief<T: Scalar>(spec: &GameSpec<T>, b: &mut Belief<T>, st: Step) -> Result<()> {
    match belief_update(spec, b, st.a1, st.a2, st.signal) {
        Ok(next) => *b = next,
        Err(Error::ZeroProbabilitySignal { .. }) => {}
        Err(e) => return Err(e),
    }
    Ok(())
}

fn run_episode<T: Scalar>(ctx: &Ctx<'_, T>, e: usize, seed: u64, keep_trace: bool, tot: &mut Totals) -> Result<()> {
    let spec = ctx.spec;
    let (ni, nj) = (spec.num_actions1(), spec.num_actions2());
    let subs = ctx.eta / ctx.m_eps;
    let horizon = ctx.blocks * ctx.eta;
    let two_eps = ctx.eps + ctx.eps;
    let mut rng = episode_rng(seed, e);

    let mut b = ctx.b1.clone();
    let mut x = AbstractState::initial(ctx.b1);
    let mut hist: Vec<Step> = Vec::new();
    let mut ahist: Vec<Step> = Vec::new();
    // Player 1 in Γ plays σ_A against a shadow abstract state fed by Γ's own
    // steps; Player 2 in Γ_A plays τ against a shadow belief fed by Γ_A's
    // steps. Both shadows restart from the other game's state at each re-root.
    let mut x_sh = x.clone();
    let mut b_sh = b.clone();
    let mut ahist_sh: Vec<Step> = Vec::new();
    let mut hist_sh: Vec<Step> = Vec::new();

    let (mut gap_sum, mut pay_sum, mut apay_sum) = (0.0, 0.0, 0.0);
    let mut stage = 0;
    for l in 0..ctx.blocks {
        let mut t_ell = subs;
        let mut coupled = false;
        for r in 0..subs {
            if !coupled {
                if b.l1_distance(x.proj()) <= two_eps {
                    coupled = true;
                    t_ell = r;
                }
                x_sh = x.clone();
                b_sh = b.clone();
                ahist_sh.clone_from(&ahist);
                hist_sh.clone_from(&hist);
            }
            for _ in 0..ctx.m_eps {
                let (u1, u2, u3, u4): (f64, f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen(), rng.gen());

                let view1 = PlayView {
                    history: &ahist_sh,
                    belief: x_sh.proj(),
                    abstract_key: Some(&x_sh.key),
                };
                let view2 = PlayView {
                    history: &hist,
                    belief: &b,
                    abstract_key: None,
                };
                let i = pick(&ctx.sigma_a.mixture(&view1, ni)?, u1);
                let j = pick(&ctx.tau.mixture(&view2, nj)?, u2);
                let s = pick(&signal_distribution(spec, &b, i, j), u3);
                let g = stage_reward(spec, &b, i, j).as_f64();

                let view1a = PlayView {
                    history: &ahist,
                    belief: x.proj(),
                    abstract_key: Some(&x.key),
                };
                let view2a = PlayView {
                    history: &hist_sh,
                    belief: &b_sh,
                    abstract_key: None,
                };
                let ia = pick(&ctx.sigma_a.mixture(&view1a, ni)?, u1);
                let ja = pick(&ctx.tau.mixture(&view2a, nj)?, u2);
                let sa = pick(&signal_distribution(spec, x.proj(), ia, ja), u4);
                let ga = stage_reward(spec, x.proj(), ia, ja).as_f64();

                if keep_trace {
                    tot.trace.push(TraceRow {
                        episode: e,
                        stage: stage + 1,
                        belief: b.to_f64(),
                        abstract_state: x.key.label(),
                        gap: g - ga,
                    });
                }
                tot.stage[stage] += g;
                tot.astage[stage] += ga;
                gap_sum += g - ga;
                pay_sum += g;
                apay_sum += ga;
                stage += 1;

                let st = Step::new(i, j, s);
                let sta = Step::new(ia, ja, sa);
                advance_belief(spec, &mut b, st)?;
                hist.push(st);
                advance_abstract(spec, &mut x_sh, st, ctx.eta)?;
                ahist_sh.push(st);
                advance_abstract(spec, &mut x, sta, ctx.eta)?;
                ahist.push(sta);
                advance_belief(spec, &mut b_sh, sta)?;
                hist_sh.push(sta);
            }
        }
        *tot.t_ell.entry(t_ell).or_insert(0) += 1;
        tot.t_sum[l] += t_ell as f64 / subs as f64;
    }
    let n = horizon as f64;
    let (gap, pay, apay) = (gap_sum / n, pay_sum / n, apay_sum / n);
    tot.gap += gap;
    tot.gap_sq += gap * gap;
    tot.pay += pay;
    tot.pay_sq += pay * pay;
    tot.apay += apay;
    tot.apay_sq += apay * apay;
    Ok(())
}

fn mean_stderr(sum: f64, sum_sq: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

fn check_blocks(eta: usize, m_eps: usize) -> Result<()> {
    if m_eps == 0 || eta == 0 || !eta.is_multiple_of(m_eps) {
        return Err(Error::InvalidBlockStructure(format!(
            "eta = {eta} must be a positive multiple of m_eps = {m_eps}"
        )));
    }
    Ok(())
}

/// Runs `Γ` under `(σ, τ)` and `Γ_A(b₁, η)` under `(σ_A, τ_A)` in lockstep,
/// where `σ` and `τ_A` are the translations of the given `σ_A` and `τ`.
///
/// Blocks have `η` stages, split into sub-blocks of `m_ε` stages. Until the
/// first sub-block start where `‖b − proj(x)‖₁ ≤ 2ε` (that index is `T_ℓ`),
/// continuation strategies are re-rooted at every sub-block start; after it
/// they are kept for the rest of the block.
#[allow(clippy::too_many_arguments)]
pub fn simulate_coupling<T: Scalar>(
    spec: &GameSpec<T>,
    b1: &Belief<T>,
    eta: usize,
    m_eps: usize,
    eps: f64,
    sigma_a: &Strategy<T>,
    tau: &Strategy<T>,
    opts: &CouplingOptions,
) -> Result<CouplingReport> {
    check_blocks(eta, m_eps)?;
    if opts.episodes == 0 || opts.blocks == 0 {
        return Err(Error::InvalidArgument("need at least one episode and one block".into()));
    }
    let ctx = Ctx {
        spec,
        b1,
        eta,
        m_eps,
        eps: T::lit(eps),
        sigma_a,
        tau,
        blocks: opts.blocks,
    };
    let horizon = opts.blocks * eta;
    let chunks: Vec<Result<Totals>> = (0..opts.episodes.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut tot = Totals::new(horizon, opts.blocks);
            for e in c * CHUNK..((c + 1) * CHUNK).min(opts.episodes) {
                run_episode(&ctx, e, opts.seed, e < opts.trace_episodes, &mut tot)?;
            }
            Ok(tot)
        })
        .collect();
    let mut tot = Totals::new(horizon, opts.blocks);
    for c in chunks {
        tot.merge(c?);
    }
    let n = opts.episodes;
    let (mean_gap, gap_stderr) = mean_stderr(tot.gap, tot.gap_sq, n);
    let (mean_payoff, payoff_stderr) = mean_stderr(tot.pay, tot.pay_sq, n);
    let (mean_abstract_payoff, abstract_payoff_stderr) = mean_stderr(tot.apay, tot.apay_sq, n);
    let nf = n as f64;
    Ok(CouplingReport {
        episodes: n,
        blocks: opts.blocks,
        eta,
        m_eps,
        epsilon: eps,
        horizon,
        seed: opts.seed,
        mean_gap,
        gap_stderr,
        mean_payoff,
        payoff_stderr,
        mean_abstract_payoff,
        abstract_payoff_stderr,
        t_ell_sentinel: eta / m_eps,
        t_ell_histogram: tot.t_ell,
        case2_fraction: tot.t_sum.into_iter().map(|x| x / nf).collect(),
        stage_mean_reward: tot.stage.into_iter().map(|x| x / nf).collect(),
        stage_mean_abstract_reward: tot.astage.into_iter().map(|x| x / nf).collect(),
        trace: tot.trace,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PayoffEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub stage_means: Vec<f64>,
}

/// Plain Monte Carlo of `γ_n(b₁, σ, τ)` in the belief game.
pub fn simulate_payoff<T: Scalar>(
    spec: &GameSpec<T>,
    b1: &Belief<T>,
    sigma: &Strategy<T>,
    tau: &Strategy<T>,
    horizon: usize,
    episodes: usize,
    seed: u64,
) -> Result<PayoffEstimate> {
    if horizon == 0 || episodes == 0 {
        return Err(Error::InvalidArgument("need a positive horizon and episode count".into()));
    }
    let (ni, nj) = (spec.num_actions1(), spec.num_actions2());
    let chunks: Vec<Result<(f64, f64, Vec<f64>)>> = (0..episodes.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let (mut sum, mut sq, mut stages) = (0.0, 0.0, vec![0.0; horizon]);
            for e in c * CHUNK..((c + 1) * CHUNK).min(episodes) {
                let mut rng = episode_rng(seed, e);
                let mut b = b1.clone();
                let mut hist = Vec::with_capacity(horizon);
                let mut total = 0.0;
                for slot in stages.iter_mut() {
                    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
                    let view = PlayView {
                        history: &hist,
                        belief: &b,
                        abstract_key: None,
                    };
                    let i = pick(&sigma.mixture(&view, ni)?, u1);
                    let j = pick(&tau.mixture(&view, nj)?, u2);
                    let s = pick(&signal_distribution(spec, &b, i, j), u3);
                    let g = stage_reward(spec, &b, i, j).as_f64();
                    *slot += g;
                    total += g;
                    let st = Step::new(i, j, s);
                    advance_belief(spec, &mut b, st)?;
                    hist.push(st);
                }
                let avg = total / horizon as f64;
                sum += avg;
                sq += avg * avg;
            }
            Ok((sum, sq, stages))
        })
        .collect();
    let (mut sum, mut sq, mut stages) = (0.0, 0.0, vec![0.0; horizon]);
    for c in chunks {
        let (a, b, s) = c?;
        sum += a;
        sq += b;
        for (x, y) in stages.iter_mut().zip(s) {
            *x += y;
        }
    }
    let (mean, stderr) = mean_stderr(sum, sq, episodes);
    Ok(PayoffEstimate {
        mean,
        stderr,
        stage_means: stages.into_iter().map(|x| x / episodes as f64).collect(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ResetWitness {
    /// Minimum over sampled pairs and initial vertices of the best common
    /// cluster frequency.
    pub witness: f64,
    pub stderr: f64,
    pub per_pair: Vec<f64>,
    pub samples_per_vertex: usize,
}

/// Empirical lower-bound witness for `δ_ε`.
///
/// For each sampled strategy pair (independent random mixtures at every
/// history, drawn lazily), simulates `m_ε` transitions from every vertex
/// belief, then looks for the ball of radius `ε` around a sampled terminal
/// belief that captures the largest worst-case fraction across vertices.
pub fn doeblin_reset_probability<T: Scalar>(
    spec: &GameSpec<T>,
    m_eps: usize,
    eps: f64,
    strategy_pairs: usize,
    samples_per_vertex: usize,
    seed: u64,
) -> Result<ResetWitness> {
    if strategy_pairs == 0 || samples_per_vertex == 0 {
        return Err(Error::InvalidArgument("need at least one pair and one sample".into()));
    }
    let k = spec.num_states();
    let (ni, nj) = (spec.num_actions1(), spec.num_actions2());
    let per_pair: Vec<Result<f64>> = (0..strategy_pairs)
        .into_par_iter()
        .map(|pair| {
            let mut strat_rng = episode_rng(seed ^ 0x5bd1_e995, pair);
            let mut table: HashMap<History, (Vec<T>, Vec<T>)> = HashMap::new();
            let mut terminal: Vec<Vec<Belief<T>>> = Vec::with_capacity(k);
            for v in 0..k {
                let mut ends = Vec::with_capacity(samples_per_vertex);
                for n in 0..samples_per_vertex {
                    let mut rng = episode_rng(seed, (pair * k + v) * samples_per_vertex + n);
                    let mut b = Belief::dirac(k, v);
                    let mut h = History::empty();
                    for _ in 0..m_eps {
                        let (x, y) = table
                            .entry(h.clone())
                            .or_insert_with(|| (random_mixture(&mut strat_rng, ni), random_mixture(&mut strat_rng, nj)))
                            .clone();
                        let i = pick(&x, rng.gen());
                        let j = pick(&y, rng.gen());
                        let s = pick(&signal_distribution(spec, &b, i, j), rng.gen());
                        let st = Step::new(i, j, s);
                        advance_belief(spec, &mut b, st)?;
                        h.push(st);
                    }
                    ends.push(b);
                }
                terminal.push(ends);
            }
            let radius = T::lit(eps);
            let mut best: f64 = 0.0;
            for center in terminal.iter().flatten() {
                let worst = terminal
                    .iter()
                    .map(|ends| ends.iter().filter(|e| e.l1_distance(center) <= radius).count())
                    .min()
                    .unwrap_or(0);
                best = best.max(worst as f64 / samples_per_vertex as f64);
            }
            Ok(best)
        })
        .collect();
    let per_pair = per_pair.into_iter().collect::<Result<Vec<_>>>()?;
    let witness = per_pair.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ResetWitness {
        witness,
        stderr: (witness * (1.0 - witness) / samples_per_vertex as f64).sqrt(),
        per_pair,
        samples_per_vertex,
    })
}
