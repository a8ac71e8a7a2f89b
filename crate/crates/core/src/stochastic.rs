//! Finite zero-sum stochastic games with observed states.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::scalar::Scalar;

/// Sparse finite stochastic game; row player maximizes.
#[derive(Clone, Debug)]
pub struct StochasticGame<T> {
    pub(crate) state_labels: Vec<String>,
    pub(crate) actions1: Vec<String>,
    pub(crate) actions2: Vec<String>,
    /// `transitions[(x·|I| + i)·|J| + j]` lists `(x', p)` with `p > 0`, sorted by `x'`.
    pub(crate) transitions: Vec<Vec<(usize, T)>>,
    /// Same indexing as `transitions`.
    pub(crate) rewards: Vec<T>,
    pub(crate) initial: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GameStats {
    pub states: usize,
    pub edges: usize,
}

impl<T: Scalar> StochasticGame<T> {
    /// Builds a game from a dense transition function `q(x' | x, i, j)` and
    /// reward `r(x, i, j)`. Zero entries are dropped.
    pub fn from_dense(
        state_labels: Vec<String>,
        actions1: Vec<String>,
        actions2: Vec<String>,
        q: impl Fn(usize, usize, usize, usize) -> T,
        r: impl Fn(usize, usize, usize) -> T,
        initial: usize,
    ) -> Result<Self> {
        let (nx, ni, nj) = (state_labels.len(), actions1.len(), actions2.len());
        let mut transitions = Vec::with_capacity(nx * ni * nj);
        let mut rewards = Vec::with_capacity(nx * ni * nj);
        for x in 0..nx {
            for i in 0..ni {
                for j in 0..nj {
                    let row: Vec<(usize, T)> = (0..nx)
                        .map(|y| (y, q(x, i, j, y)))
                        .filter(|&(_, p)| p > T::zero())
                        .collect();
                    transitions.push(row);
                    rewards.push(r(x, i, j));
                }
            }
        }
        Self::from_sparse(state_labels, actions1, actions2, transitions, rewards, initial)
    }

    pub fn from_sparse(
        state_labels: Vec<String>,
        actions1: Vec<String>,
        actions2: Vec<String>,
        transitions: Vec<Vec<(usize, T)>>,
        rewards: Vec<T>,
        initial: usize,
    ) -> Result<Self> {
        let (nx, ni, nj) = (state_labels.len(), actions1.len(), actions2.len());
        if nx == 0 || ni == 0 || nj == 0 {
            return Err(Error::InvalidArgument("stochastic game with an empty alphabet".into()));
        }
        if transitions.len() != nx * ni * nj || rewards.len() != nx * ni * nj {
            return Err(Error::InvalidArgument("transition/reward table has the wrong size".into()));
        }
        if initial >= nx {
            return Err(Error::IndexOutOfRange {
                kind: "initial state",
                index: initial,
                size: nx,
            });
        }
        for (idx, row) in transitions.iter().enumerate() {
            let sum: T = row.iter().map(|&(_, p)| p).sum();
            if row.iter().any(|&(y, p)| y >= nx || p < T::zero())
                || (sum - T::one()).abs() > T::lit(1e-10).max(T::mass_tol())
            {
                return Err(Error::NotStochastic {
                    row: idx,
                    sum: sum.as_f64(),
                });
            }
        }
        Ok(Self {
            state_labels,
            actions1,
            actions2,
            transitions,
            rewards,
            initial,
        })
    }

    pub fn num_states(&self) -> usize {
        self.state_labels.len()
    }

    pub fn num_actions1(&self) -> usize {
        self.actions1.len()
    }

    pub fn num_actions2(&self) -> usize {
        self.actions2.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    pub fn actions1(&self) -> &[String] {
        &self.actions1
    }

    pub fn actions2(&self) -> &[String] {
        &self.actions2
    }

    #[inline]
    fn idx(&self, x: usize, i: usize, j: usize) -> usize {
        (x * self.actions1.len() + i) * self.actions2.len() + j
    }

    #[inline]
    pub fn transition(&self, x: usize, i: usize, j: usize) -> &[(usize, T)] {
        &self.transitions[self.idx(x, i, j)]
    }

    #[inline]
    pub fn reward(&self, x: usize, i: usize, j: usize) -> T {
        self.rewards[self.idx(x, i, j)]
    }

    pub fn stats(&self) -> GameStats {
        GameStats {
            states: self.num_states(),
            edges: self.transitions.iter().map(Vec::len).sum(),
        }
    }

    pub fn with_initial(mut self, initial: usize) -> Self {
        assert!(initial < self.num_states());
        self.initial = initial;
        self
    }
}

/// The observed game behind a state-revealing hidden game: every signal with
/// positive probability names a single next state, and the initial belief is
/// a Dirac mass. Fails with `InvalidArgument` otherwise.
pub fn from_revealing<T: Scalar>(spec: &GameSpec<T>) -> Result<StochasticGame<T>> {
    let b1 = spec.initial_belief();
    if !b1.is_dirac() {
        return Err(Error::InvalidArgument("initial belief is not a Dirac mass".into()));
    }
    let mut target: Vec<Option<usize>> = vec![None; spec.num_signals()];
    for (i, j, s) in spec.letters() {
        let m = spec.matrix(i, j, s);
        for k in 0..spec.num_states() {
            for (k2, &p) in m.row(k).iter().enumerate() {
                if p > T::zero() {
                    match target[s] {
                        Some(t) if t != k2 => {
                            return Err(Error::InvalidArgument(format!(
                                "signal `{}` is emitted on moves to both `{}` and `{}`",
                                spec.signals()[s],
                                spec.states()[t],
                                spec.states()[k2]
                            )));
                        }
                        _ => target[s] = Some(k2),
                    }
                }
            }
        }
    }
    StochasticGame::from_dense(
        spec.states().to_vec(),
        spec.actions1().to_vec(),
        spec.actions2().to_vec(),
        |x, i, j, y| (0..spec.num_signals()).map(|s| spec.prob(x, i, j, y, s)).sum(),
        |x, i, j| spec.reward(x, i, j),
        b1.support()[0],
    )
}
