//! Belief updates, forward products and exact small-horizon oracles on the
//! belief game.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{Belief, GameSpec};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::solver::matrix_game::matrix_game_value_fast;
use crate::strategy::{History, PlayView, Step, Strategy};

/// `P(S = s | b, i, j) = bᵀ P(i, j, s) 𝟙`.
pub fn signal_probability<T: Scalar>(spec: &GameSpec<T>, b: &Belief<T>, i: usize, j: usize, s: usize) -> T {
    let p = spec.matrix(i, j, s);
    b.support()
        .iter()
        .map(|&k| b.probs()[k] * p.row(k).iter().copied().sum::<T>())
        .sum()
}

/// All signal probabilities at `(b, i, j)`, indexed by signal.
pub fn signal_distribution<T: Scalar>(spec: &GameSpec<T>, b: &Belief<T>, i: usize, j: usize) -> Vec<T> {
    (0..spec.num_signals())
        .map(|s| signal_probability(spec, b, i, j, s))
        .collect()
}

/// Expected stage reward `ḡ(b, i, j) = Σ_k b(k) g(k, i, j)`.
pub fn stage_reward<T: Scalar>(spec: &GameSpec<T>, b: &Belief<T>, i: usize, j: usize) -> T {
    b.support()
        .iter()
        .map(|&k| b.probs()[k] * spec.reward(k, i, j))
        .sum()
}

/// Posterior `ψ(b, i, j, s) ∝ bᵀ P(i, j, s)`.
pub fn belief_update<T: Scalar>(spec: &GameSpec<T>, b: &Belief<T>, i: usize, j: usize, s: usize) -> Result<Belief<T>> {
    let p = spec.matrix(i, j, s);
    let mut next = vec![T::zero(); spec.num_states()];
    for &k in b.support() {
        let w = b.probs()[k];
        for (n, &x) in next.iter_mut().zip(p.row(k)) {
            *n += w * x;
        }
    }
    let mass: T = next.iter().copied().sum();
    if mass <= T::admissible_tol() {
        return Err(Error::ZeroProbabilitySignal {
            probability: mass.as_f64(),
        });
    }
    for x in &mut next {
        *x /= mass;
    }
    Ok(Belief::from_raw(next))
}

/// Forward product `T(h) = P(i₁, j₁, s₂) ⋯ P(i_{m−1}, j_{m−1}, s_m)`; identity
/// for the empty history.
pub fn forward_product<T: Scalar>(spec: &GameSpec<T>, h: &[Step]) -> Matrix<T> {
    h.iter().fold(Matrix::identity(spec.num_states()), |acc, st| {
        acc.mul(spec.matrix(st.a1, st.a2, st.signal))
    })
}

/// `b₁ᵀ T(h)` without normalization, carried as a row vector.
fn unnormalized_posterior<T: Scalar>(spec: &GameSpec<T>, b1: &Belief<T>, h: &[Step]) -> Vec<T> {
    h.iter().fold(b1.probs().to_vec(), |v, st| {
        spec.matrix(st.a1, st.a2, st.signal).left_mul(&v)
    })
}

/// `b₁ᵀ T(h) 𝟙`, the signal-sequence likelihood of `h` from `b₁`.
pub fn history_normalizer<T: Scalar>(spec: &GameSpec<T>, b1: &Belief<T>, h: &[Step]) -> T {
    unnormalized_posterior(spec, b1, h).into_iter().sum()
}

/// Belief after `h` from `b₁`, `b₁ᵀT(h) / b₁ᵀT(h)𝟙`.
pub fn belief_from_history<T: Scalar>(spec: &GameSpec<T>, b1: &Belief<T>, h: &[Step]) -> Result<Belief<T>> {
    let v = unnormalized_posterior(spec, b1, h);
    let norm: T = v.iter().copied().sum();
    if norm <= T::admissible_tol() {
        return Err(Error::InadmissibleHistory {
            normalizer: norm.as_f64(),
        });
    }
    Ok(Belief::from_raw(v.into_iter().map(|x| x / norm).collect()))
}

/// One admissible history with its belief and its probability when both
/// players mix uniformly.
#[derive(Clone, Debug)]
pub struct AdmissibleHistory<T> {
    pub history: History,
    pub belief: Belief<T>,
    pub weight: T,
}

#[derive(Serialize)]
struct TraceEntry {
    history: Vec<[usize; 3]>,
    belief: Vec<f64>,
    weight: f64,
}

/// JSON array of `{history, belief, weight}` records.
pub fn trace_json<T: Scalar>(nodes: &[AdmissibleHistory<T>]) -> serde_json::Value {
    let entries: Vec<TraceEntry> = nodes
        .iter()
        .map(|n| TraceEntry {
            history: n.history.iter().map(|s| [s.a1, s.a2, s.signal]).collect(),
            belief: n.belief.to_f64(),
            weight: n.weight.as_f64(),
        })
        .collect();
    serde_json::to_value(entries).expect("trace entries serialize")
}

/// All histories before stage `m` (length `m − 1`) with positive normalizer
/// from `b₁`, in lexicographic order.
pub fn enumerate_admissible<T: Scalar>(
    spec: &GameSpec<T>,
    b1: &Belief<T>,
    m: usize,
    cap: usize,
) -> Result<Vec<AdmissibleHistory<T>>> {
    if m == 0 {
        return Err(Error::InvalidArgument("stages are numbered from 1".into()));
    }
    let action_weight = T::one() / T::from_usize_lossy(spec.num_actions1() * spec.num_actions2());
    // (history, unnormalized posterior, uniform-play weight)
    let mut level = vec![(History::empty(), b1.probs().to_vec(), T::one())];
    for _ in 1..m {
        let mut next = Vec::new();
        for (h, v, w) in &level {
            for (i, j, s) in spec.letters() {
                let u = spec.matrix(i, j, s).left_mul(v);
                let norm: T = u.iter().copied().sum();
                if norm <= T::admissible_tol() {
                    continue;
                }
                let prev: T = v.iter().copied().sum();
                next.push((h.extended(Step::new(i, j, s)), u, *w * action_weight * norm / prev));
                if next.len() > cap {
                    return Err(Error::CapExceeded {
                        what: "admissible histories",
                        cap,
                    });
                }
            }
        }
        level = next;
    }
    Ok(level
        .into_iter()
        .map(|(history, v, weight)| {
            let norm: T = v.iter().copied().sum();
            AdmissibleHistory {
                history,
                belief: Belief::from_raw(v.into_iter().map(|x| x / norm).collect()),
                weight,
            }
        })
        .collect())
}

pub(crate) fn belief_key<T: Scalar>(b: &Belief<T>) -> Vec<i64> {
    let scale = 1.0 / T::MERGE_TOL;
    b.probs().iter().map(|p| (p.as_f64() * scale).round() as i64).collect()
}

/// Exact `v̄_n(b₁)` by backward induction on the belief tree. Beliefs at the
/// same depth that agree to within `MERGE_TOL` share one node.
pub fn exact_nstage_value<T: Scalar>(spec: &GameSpec<T>, b1: &Belief<T>, n: usize, cap: usize) -> Result<T> {
    if n == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let mut memo = HashMap::new();
    let total = nstage_rec(spec, b1, n, cap, &mut memo)?;
    Ok(total / T::from_usize_lossy(n))
}

/// Undiscounted `w_t(b)` (sum of `t` stage rewards under optimal play).
fn nstage_rec<T: Scalar>(
    spec: &GameSpec<T>,
    b: &Belief<T>,
    t: usize,
    cap: usize,
    memo: &mut HashMap<(usize, Vec<i64>), T>,
) -> Result<T> {
    if t == 0 {
        return Ok(T::zero());
    }
    let key = (t, belief_key(b));
    if let Some(&v) = memo.get(&key) {
        return Ok(v);
    }
    let (ni, nj) = (spec.num_actions1(), spec.num_actions2());
    let mut payoff = Matrix::zeros(ni, nj);
    for i in 0..ni {
        for j in 0..nj {
            let mut acc = stage_reward(spec, b, i, j);
            if t > 1 {
                for s in 0..spec.num_signals() {
                    let sp = signal_probability(spec, b, i, j, s);
                    if sp <= T::admissible_tol() {
                        continue;
                    }
                    let next = belief_update(spec, b, i, j, s)?;
                    acc += sp * nstage_rec(spec, &next, t - 1, cap, memo)?;
                }
            }
            payoff[(i, j)] = acc;
        }
    }
    let v = matrix_game_value_fast(&payoff)?;
    if memo.len() >= cap {
        return Err(Error::CapExceeded {
            what: "belief tree",
            cap,
        });
    }
    memo.insert(key, v);
    Ok(v)
}

/// Exact `γ_n(b₁, σ, τ)` by forward recursion over weighted belief nodes.
pub fn exact_payoff<T: Scalar>(
    spec: &GameSpec<T>,
    b1: &Belief<T>,
    sigma: &Strategy<T>,
    tau: &Strategy<T>,
    n: usize,
    cap: usize,
) -> Result<T> {
    if n == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let mut nodes = 0usize;
    let mut history = Vec::new();
    let total = payoff_rec(spec, b1, sigma, tau, n, cap, &mut nodes, &mut history)?;
    Ok(total / T::from_usize_lossy(n))
}

#[allow(clippy::too_many_arguments)]
fn payoff_rec<T: Scalar>(
    spec: &GameSpec<T>,
    b: &Belief<T>,
    sigma: &Strategy<T>,
    tau: &Strategy<T>,
    remaining: usize,
    cap: usize,
    nodes: &mut usize,
    history: &mut Vec<Step>,
) -> Result<T> {
    *nodes += 1;
    if *nodes > cap {
        return Err(Error::CapExceeded {
            what: "payoff tree",
            cap,
        });
    }
    let view = PlayView {
        history,
        belief: b,
        abstract_key: None,
    };
    let x = sigma.mixture(&view, spec.num_actions1())?;
    let y = tau.mixture(&view, spec.num_actions2())?;
    let mut total = T::zero();
    for (i, &xi) in x.iter().enumerate() {
        for (j, &yj) in y.iter().enumerate() {
            let w = xi * yj;
            if w == T::zero() {
                continue;
            }
            let mut acc = stage_reward(spec, b, i, j);
            if remaining > 1 {
                for s in 0..spec.num_signals() {
                    let sp = signal_probability(spec, b, i, j, s);
                    if sp <= T::admissible_tol() {
                        continue;
                    }
                    let next = belief_update(spec, b, i, j, s)?;
                    history.push(Step::new(i, j, s));
                    let cont = payoff_rec(spec, &next, sigma, tau, remaining - 1, cap, nodes, history);
                    history.pop();
                    acc += sp * cont?;
                }
            }
            total += w * acc;
        }
    }
    Ok(total)
}
