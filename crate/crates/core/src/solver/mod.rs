//! Zero-sum solvers: one-shot matrix games and finite stochastic games
//! (n-stage, discounted, and a uniform-value estimate).

pub mod matrix_game;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::stochastic::StochasticGame;

pub use matrix_game::{matrix_game_value, MatrixGame, MatrixGameSolution, DEFAULT_TOL};
use matrix_game::matrix_game_value_fast;

/// Sweeps over fewer states than this stay on the calling thread.
const PAR_THRESHOLD: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Horizon(usize),
    Discount(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValueFunction<T> {
    pub values: Vec<T>,
    pub kind: ValueKind,
}

impl<T: Scalar> ValueFunction<T> {
    /// `{label: value}` in state order.
    pub fn to_json(&self, labels: &[String]) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = labels
            .iter()
            .zip(&self.values)
            .map(|(l, v)| (l.clone(), serde_json::json!(v.as_f64())))
            .collect();
        serde_json::Value::Object(map)
    }
}

fn local_game<T: Scalar>(game: &StochasticGame<T>, x: usize, w: &[T], reward_weight: T, cont_weight: T) -> Matrix<T> {
    let (ni, nj) = (game.num_actions1(), game.num_actions2());
    let mut m = Matrix::zeros(ni, nj);
    for i in 0..ni {
        for j in 0..nj {
            let cont: T = game.transition(x, i, j).iter().map(|&(y, p)| p * w[y]).sum();
            m[(i, j)] = reward_weight * game.reward(x, i, j) + cont_weight * cont;
        }
    }
    m
}

/// One Shapley sweep: `val[g + P w]`, or `val[λg + (1−λ)P w]` with a discount.
pub fn shapley_operator<T: Scalar>(game: &StochasticGame<T>, w: &[T], discount: Option<T>) -> Result<Vec<T>> {
    let (a, b) = match discount {
        Some(l) => (l, T::one() - l),
        None => (T::one(), T::one()),
    };
    let solve = |x: usize| matrix_game_value_fast(&local_game(game, x, w, a, b));
    if game.num_states() >= PAR_THRESHOLD {
        (0..game.num_states()).into_par_iter().map(solve).collect()
    } else {
        (0..game.num_states()).map(solve).collect()
    }
}

/// `w_n / n` with `w₀ = 0`, `w_{t+1} = val[g + P w_t]`.
pub fn shapley_nstage<T: Scalar>(game: &StochasticGame<T>, n: usize) -> Result<ValueFunction<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let mut w = vec![T::zero(); game.num_states()];
    for _ in 0..n {
        w = shapley_operator(game, &w, None)?;
    }
    let nn = T::from_usize_lossy(n);
    Ok(ValueFunction {
        values: w.into_iter().map(|x| x / nn).collect(),
        kind: ValueKind::Horizon(n),
    })
}

fn sup_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    crate::scalar::max_abs_diff(a, b)
}

/// Iterates the discounted operator from `start` until the sup-norm step is
/// at most `residual`. The sweep budget is twice what the contraction needs
/// from a unit gap, so a stall (round-off above `residual`) fails cleanly.
fn discounted_from<T: Scalar>(game: &StochasticGame<T>, lambda: T, residual: T, start: Vec<T>) -> Result<Vec<T>> {
    let (l, r) = (lambda.as_f64(), residual.as_f64());
    let max_iter = (2.0 * r.ln() / (-l).ln_1p()).ceil().max(0.0) as usize + 1000;
    let mut v = start;
    for _ in 0..max_iter {
        let next = shapley_operator(game, &v, Some(lambda))?;
        let gap = sup_diff(&next, &v);
        if !gap.is_finite() {
            return Err(Error::NumericalFailure(format!("non-finite iterate at lambda = {lambda}")));
        }
        v = next;
        if gap <= residual {
            return Ok(v);
        }
    }
    Err(Error::NumericalFailure(format!(
        "discounted iteration at lambda = {lambda} did not reach residual {residual} in {max_iter} sweeps"
    )))
}

/// Fixed point of `v = val[λg + (1−λ)P v]` to sup-norm residual `tol`.
pub fn discounted_value<T: Scalar>(game: &StochasticGame<T>, lambda: T, tol: T) -> Result<ValueFunction<T>> {
    if !(lambda > T::zero() && lambda < T::one()) {
        return Err(Error::InvalidArgument(format!("discount {lambda} outside (0, 1)")));
    }
    if !(tol > T::zero()) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let values = discounted_from(game, lambda, tol, vec![T::zero(); game.num_states()])?;
    Ok(ValueFunction {
        values,
        kind: ValueKind::Discount(lambda.as_f64()),
    })
}

#[derive(Clone, Copy, Debug)]
pub struct UniformOptions {
    /// Agreement required between the two estimates.
    pub tol: f64,
    /// First horizon; the discount starts at its reciprocal.
    pub start_n: usize,
    /// Maximum number of refinements (doublings).
    pub budget: usize,
}

impl Default for UniformOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            start_n: 16,
            budget: 14,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformTrace {
    pub iteration: usize,
    pub n: usize,
    pub lambda: f64,
    /// `v_n` and `v_λ` at the initial state.
    pub nstage: f64,
    pub discounted: f64,
    /// The debiased estimates that are compared.
    pub nstage_extrapolated: f64,
    pub discounted_extrapolated: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformEstimate {
    pub value: f64,
    pub refinements: usize,
    pub trace: Vec<UniformTrace>,
    /// Agreement of the two limits is a stopping heuristic, not a bound.
    pub stopping_rule: &'static str,
}

impl UniformEstimate {
    /// `iteration,kind,parameter,value` rows, four per refinement.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,kind,parameter,value\n");
        for t in &self.trace {
            let _ = writeln!(out, "{},nstage,{},{}", t.iteration, t.n, t.nstage);
            let _ = writeln!(out, "{},discounted,{},{}", t.iteration, t.lambda, t.discounted);
            let _ = writeln!(out, "{},nstage_extrapolated,{},{}", t.iteration, t.n, t.nstage_extrapolated);
            let _ = writeln!(out, "{},discounted_extrapolated,{},{}", t.iteration, t.lambda, t.discounted_extrapolated);
        }
        out
    }
}

/// Estimates the uniform value at the initial state from the `n`-stage and
/// `λ`-discounted families, `n` doubling and `λ = 1/n`.
///
/// Both families carry a first-order bias in `1/n` that is usually the same,
/// so plain agreement says little. Each is therefore debiased before the
/// comparison: `2 v_{λ/2} − v_λ` for the discounted side, and for the
/// `n`-stage side the mean of `(w_{t+n} − w_t)/n` over `t ∈ [n, 2n)`, where
/// `w_t` is the `t`-stage total, which also averages out periodic terms. The
/// run stops once the two agree within `tol` on two consecutive refinements
/// and returns the midpoint of the last pair.
pub fn uniform_value_estimate<T: Scalar>(game: &StochasticGame<T>, opts: &UniformOptions) -> Result<UniformEstimate> {
    if opts.start_n == 0 || !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("uniform estimate needs start_n >= 1 and tol > 0".into()));
    }
    let x1 = game.initial();
    let nx = game.num_states();
    let mut w = vec![T::zero(); nx];
    // prefix[t] = Σ_{s ≤ t} w_s(x₁), with w_0 = 0.
    let mut prefix = vec![0.0];
    let extend = |target: usize, w: &mut Vec<T>, prefix: &mut Vec<f64>| -> Result<()> {
        while prefix.len() <= target {
            *w = shapley_operator(game, w, None)?;
            let last = prefix[prefix.len() - 1];
            prefix.push(last + w[x1].as_f64());
        }
        Ok(())
    };
    let mut v = vec![T::zero(); nx];
    let v_at = |lambda: f64, v: &mut Vec<T>| -> Result<f64> {
        // The fixed point lies within residual (1 − λ)/λ of the iterate.
        let residual = T::lit((opts.tol * lambda / 100.0).max(1e-14));
        *v = discounted_from(game, T::lit(lambda), residual, std::mem::take(v))?;
        Ok(v[x1].as_f64())
    };

    let mut n = opts.start_n;
    let mut discounted = v_at(1.0 / n as f64, &mut v)?;
    let mut trace = Vec::new();
    let mut agreed = 0;
    let mut last_gap = f64::INFINITY;
    for it in 0..opts.budget {
        let lambda = 1.0 / n as f64;
        extend(3 * n - 1, &mut w, &mut prefix)?;
        let nf = n as f64;
        let first = (prefix[2 * n - 1] - prefix[n - 1]) / nf;
        let second = (prefix[3 * n - 1] - prefix[2 * n - 1]) / nf;
        let ne = (second - first) / nf;
        let nstage = (prefix[n] - prefix[n - 1]) / nf;
        let discounted2 = v_at(lambda / 2.0, &mut v)?;
        let de = 2.0 * discounted2 - discounted;
        trace.push(UniformTrace {
            iteration: it,
            n,
            lambda,
            nstage,
            discounted,
            nstage_extrapolated: ne,
            discounted_extrapolated: de,
        });
        last_gap = (ne - de).abs();
        if last_gap <= opts.tol {
            agreed += 1;
            if agreed == 2 {
                return Ok(UniformEstimate {
                    value: (ne + de) / 2.0,
                    refinements: it + 1,
                    trace,
                    stopping_rule: "debiased n-stage and discounted estimates agreed on two consecutive refinements",
                });
            }
        } else {
            agreed = 0;
        }
        n = n.saturating_mul(2);
        discounted = discounted2;
    }
    Err(Error::NoConvergence {
        refinements: opts.budget,
        last_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_state(payoff: &[&[f64]]) -> StochasticGame<f64> {
        let ni = payoff.len();
        let nj = payoff[0].len();
        StochasticGame::from_dense(
            vec!["x".into()],
            (0..ni).map(|i| format!("i{i}")).collect(),
            (0..nj).map(|j| format!("j{j}")).collect(),
            |_, _, _, _| 1.0,
            |_, i, j| payoff[i][j],
            0,
        )
        .unwrap()
    }

    fn two_state_chain(a: f64, b: f64) -> StochasticGame<f64> {
        StochasticGame::from_dense(
            vec!["0".into(), "1".into()],
            vec!["-".into()],
            vec!["-".into()],
            |x, _, _, y| match (x, y) {
                (0, 0) => 1.0 - a,
                (0, 1) => a,
                (1, 0) => b,
                _ => 1.0 - b,
            },
            |x, _, _| x as f64,
            0,
        )
        .unwrap()
    }

    #[test]
    fn constant_reward() {
        let g = single_state(&[&[0.3, 0.3], &[0.3, 0.3]]);
        for n in 1..5 {
            assert!((shapley_nstage(&g, n).unwrap().values[0] - 0.3).abs() < 1e-15);
        }
        let v = discounted_value(&g, 0.1, 1e-12).unwrap();
        assert!((v.values[0] - 0.3).abs() < 1e-10);
        let u = uniform_value_estimate(&g, &UniformOptions::default()).unwrap();
        assert!((u.value - 0.3).abs() <= 1e-6);
        assert_eq!(u.refinements, 2);
    }

    #[test]
    fn matching_pennies_kernel() {
        let g = single_state(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!((shapley_nstage(&g, 7).unwrap().values[0] - 0.5).abs() < 1e-12);
        let u = uniform_value_estimate(&g, &UniformOptions::default()).unwrap();
        assert!((u.value - 0.5).abs() <= 1e-6);
    }

    #[test]
    fn absorbing_split() {
        // From the start state both actions lead to the 1- or 0-absorbing state
        // with probability 1/2; the start reward is itself 1/2.
        let g = StochasticGame::from_dense(
            vec!["start".into(), "one".into(), "zero".into()],
            vec!["-".into()],
            vec!["-".into()],
            |x, _, _, y| match (x, y) {
                (0, 1) | (0, 2) => 0.5,
                (1, 1) | (2, 2) => 1.0,
                _ => 0.0,
            },
            |x, _, _| [0.5, 1.0, 0.0][x],
            0,
        )
        .unwrap();
        let v = discounted_value::<f64>(&g, 0.05, 1e-12).unwrap();
        assert!((v.values[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn recurrent_chain_average() {
        let (a, b) = (0.3, 0.1);
        let g = two_state_chain(a, b);
        let u = uniform_value_estimate(&g, &UniformOptions::default()).unwrap();
        let stationary = a / (a + b);
        assert!((u.value - stationary).abs() <= 1e-6, "{} vs {stationary}", u.value);
        // The raw families are still visibly biased at the stopping horizon.
        let last = u.trace.last().unwrap();
        assert!((last.nstage - stationary).abs() > 1e-4);
        assert_eq!(u.trace_csv().lines().count(), 1 + 4 * u.trace.len());
    }

    #[test]
    fn discounted_residual_is_small() {
        let g = two_state_chain(0.2, 0.7);
        let v = discounted_value(&g, 0.2, 1e-10).unwrap();
        let again = shapley_operator(&g, &v.values, Some(0.2)).unwrap();
        assert!(sup_diff(&again, &v.values) <= 1e-10);
    }

    #[test]
    fn no_convergence_is_reported() {
        let g = two_state_chain(0.3, 0.1);
        let opts = UniformOptions {
            tol: 1e-15,
            start_n: 2,
            budget: 2,
        };
        assert!(matches!(uniform_value_estimate(&g, &opts), Err(Error::NoConvergence { .. })));
    }
}
