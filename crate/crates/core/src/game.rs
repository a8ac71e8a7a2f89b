//! Finite hidden stochastic games `(K, I, J, S, p, g)` with an initial belief.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Probability vector over the states, with its support cached.
#[derive(Clone, Debug, PartialEq)]
pub struct Belief<T> {
    probs: Vec<T>,
    support: Vec<usize>,
}

impl<T: Scalar> Belief<T> {
    /// Checked constructor: entries nonnegative, unit mass within `MASS_TOL`.
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("belief over an empty state set".into()));
        }
        if let Some(k) = probs.iter().position(|&p| !(p >= T::zero())) {
            return Err(Error::InvalidArgument(format!(
                "belief entry {k} is negative or NaN ({})",
                probs[k]
            )));
        }
        let mass: T = probs.iter().copied().sum();
        if (mass - T::one()).abs() > T::mass_tol() {
            return Err(Error::InvalidArgument(format!("belief mass {mass} is not 1")));
        }
        Ok(Self::from_raw(probs))
    }

    pub fn from_f64(probs: &[f64]) -> Result<Self> {
        Self::new(probs.iter().map(|&x| T::lit(x)).collect())
    }

    /// Scales a nonnegative vector to unit mass. Fails on zero mass.
    pub fn normalized(mut weights: Vec<T>) -> Result<Self> {
        let mass: T = weights.iter().copied().sum();
        if !(mass > T::zero()) {
            return Err(Error::InvalidArgument("cannot normalize zero mass".into()));
        }
        for w in &mut weights {
            *w /= mass;
        }
        Ok(Self::from_raw(weights))
    }

    /// Unchecked; used for game files that are validated separately.
    pub(crate) fn from_raw(probs: Vec<T>) -> Self {
        let support = probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > T::mass_tol())
            .map(|(k, _)| k)
            .collect();
        Self { probs, support }
    }

    pub fn dirac(n: usize, k: usize) -> Self {
        let mut probs = vec![T::zero(); n];
        probs[k] = T::one();
        Self::from_raw(probs)
    }

    pub fn uniform(n: usize) -> Self {
        Self::from_raw(vec![T::one() / T::from_usize_lossy(n); n])
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Indices with mass above `MASS_TOL`, ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn is_dirac(&self) -> bool {
        self.support.len() == 1
    }

    pub fn l1_distance(&self, other: &Belief<T>) -> T {
        crate::scalar::l1_distance(&self.probs, &other.probs)
    }

    pub fn max_distance(&self, other: &Belief<T>) -> T {
        crate::scalar::max_abs_diff(&self.probs, &other.probs)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.as_f64()).collect()
    }
}

/// Dense index of one `(i, j, s)` letter of the full alphabet.
pub type Letter = (usize, usize, usize);

/// `P(i, j, s)` together with its tag.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix<T> {
    pub entries: Matrix<T>,
    pub tag: Letter,
}

#[derive(Clone, Debug)]
pub struct GameSpec<T> {
    pub(crate) states: Vec<String>,
    pub(crate) actions1: Vec<String>,
    pub(crate) actions2: Vec<String>,
    pub(crate) signals: Vec<String>,
    /// `kernel[(i·|J| + j)·|S| + s]` is `P(i, j, s)`.
    pub(crate) kernel: Vec<Matrix<T>>,
    /// `reward[(k·|I| + i)·|J| + j]` is `g(k, i, j)`.
    pub(crate) reward: Vec<T>,
    pub(crate) initial: Belief<T>,
}

impl<T: Scalar> GameSpec<T> {
    /// Assembles a spec from dense parts without validating stochasticity;
    /// run [`validate_game`] for that. Shapes are checked.
    pub fn from_parts(
        states: Vec<String>,
        actions1: Vec<String>,
        actions2: Vec<String>,
        signals: Vec<String>,
        transition: impl Fn(usize, usize, usize, usize, usize) -> T,
        reward: impl Fn(usize, usize, usize) -> T,
        initial: Vec<T>,
    ) -> Result<Self> {
        let (nk, ni, nj, ns) = (states.len(), actions1.len(), actions2.len(), signals.len());
        if nk == 0 || ni == 0 || nj == 0 || ns == 0 {
            return Err(Error::InvalidArgument("every alphabet must be nonempty".into()));
        }
        if initial.len() != nk {
            return Err(Error::InvalidArgument(format!(
                "initial belief has {} entries for {nk} states",
                initial.len()
            )));
        }
        let mut kernel = Vec::with_capacity(ni * nj * ns);
        for i in 0..ni {
            for j in 0..nj {
                for s in 0..ns {
                    let mut m = Matrix::zeros(nk, nk);
                    for k in 0..nk {
                        for k2 in 0..nk {
                            m[(k, k2)] = transition(k, i, j, k2, s);
                        }
                    }
                    kernel.push(m);
                }
            }
        }
        let mut rewards = Vec::with_capacity(nk * ni * nj);
        for k in 0..nk {
            for i in 0..ni {
                for j in 0..nj {
                    rewards.push(reward(k, i, j));
                }
            }
        }
        Ok(Self {
            states,
            actions1,
            actions2,
            signals,
            kernel,
            reward: rewards,
            initial: Belief::from_raw(initial),
        })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions1(&self) -> usize {
        self.actions1.len()
    }

    pub fn num_actions2(&self) -> usize {
        self.actions2.len()
    }

    pub fn num_signals(&self) -> usize {
        self.signals.len()
    }

    pub fn is_blind(&self) -> bool {
        self.signals.len() == 1
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn actions1(&self) -> &[String] {
        &self.actions1
    }

    pub fn actions2(&self) -> &[String] {
        &self.actions2
    }

    pub fn signals(&self) -> &[String] {
        &self.signals
    }

    pub fn initial_belief(&self) -> &Belief<T> {
        &self.initial
    }

    pub fn with_initial_belief(mut self, b: Belief<T>) -> Self {
        assert_eq!(b.len(), self.num_states());
        self.initial = b;
        self
    }

    /// `P(i, j, s)` by dense index.
    #[inline]
    pub fn matrix(&self, i: usize, j: usize, s: usize) -> &Matrix<T> {
        &self.kernel[(i * self.actions2.len() + j) * self.signals.len() + s]
    }

    /// `p(k', s | k, i, j)`.
    #[inline]
    pub fn prob(&self, k: usize, i: usize, j: usize, k2: usize, s: usize) -> T {
        self.matrix(i, j, s)[(k, k2)]
    }

    /// `g(k, i, j)`.
    #[inline]
    pub fn reward(&self, k: usize, i: usize, j: usize) -> T {
        self.reward[(k * self.actions1.len() + i) * self.actions2.len() + j]
    }

    /// Every `(i, j, s)` in index order.
    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        let (ni, nj, ns) = (self.num_actions1(), self.num_actions2(), self.num_signals());
        (0..ni).flat_map(move |i| (0..nj).flat_map(move |j| (0..ns).map(move |s| (i, j, s))))
    }

    pub fn state_index(&self, label: &str) -> Result<usize> {
        lookup(&self.states, "state", label)
    }

    pub fn action1_index(&self, label: &str) -> Result<usize> {
        lookup(&self.actions1, "action1", label)
    }

    pub fn action2_index(&self, label: &str) -> Result<usize> {
        lookup(&self.actions2, "action2", label)
    }

    pub fn signal_index(&self, label: &str) -> Result<usize> {
        lookup(&self.signals, "signal", label)
    }

    /// Same game with every reward mapped through `f`; used for dominance checks.
    pub fn map_rewards(&self, f: impl Fn(usize, usize, usize, T) -> T) -> Self {
        let mut out = self.clone();
        let (ni, nj) = (self.num_actions1(), self.num_actions2());
        for k in 0..self.num_states() {
            for i in 0..ni {
                for j in 0..nj {
                    out.reward[(k * ni + i) * nj + j] = f(k, i, j, self.reward(k, i, j));
                }
            }
        }
        out
    }
}

fn lookup(labels: &[String], kind: &'static str, label: &str) -> Result<usize> {
    labels
        .iter()
        .position(|l| l == label)
        .ok_or_else(|| Error::UnknownLabel {
            kind,
            label: label.to_string(),
        })
}

/// `P(i, j, s)` by label.
pub fn transition_matrix<T: Scalar>(
    spec: &GameSpec<T>,
    i: &str,
    j: &str,
    s: &str,
) -> Result<TransitionMatrix<T>> {
    let tag = (spec.action1_index(i)?, spec.action2_index(j)?, spec.signal_index(s)?);
    Ok(TransitionMatrix {
        entries: spec.matrix(tag.0, tag.1, tag.2).clone(),
        tag,
    })
}

/// `Σ_s P(i, j, s)`, which is row-stochastic for a valid game.
pub fn signal_sum<T: Scalar>(spec: &GameSpec<T>, i: usize, j: usize) -> Matrix<T> {
    let n = spec.num_states();
    let mut acc = Matrix::zeros(n, n);
    for s in 0..spec.num_signals() {
        acc.add_assign(spec.matrix(i, j, s));
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `Σ_{k',s} p(k', s | k, i, j)` differs from 1; `magnitude = |sum − 1|`.
    RowSum {
        state: usize,
        a1: usize,
        a2: usize,
        magnitude: f64,
    },
    NegativeProbability {
        state: usize,
        a1: usize,
        a2: usize,
        to: usize,
        signal: usize,
        value: f64,
    },
    RewardRange {
        state: usize,
        a1: usize,
        a2: usize,
        value: f64,
    },
    InitialBeliefMass {
        magnitude: f64,
    },
    NegativeInitialBelief {
        state: usize,
        value: f64,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every invariant violation of the game; an empty report means valid.
pub fn validate_game<T: Scalar>(spec: &GameSpec<T>) -> ValidationReport {
    let mut violations = Vec::new();
    let tol = T::mass_tol();
    let (nk, ni, nj, ns) = (
        spec.num_states(),
        spec.num_actions1(),
        spec.num_actions2(),
        spec.num_signals(),
    );
    for k in 0..nk {
        for i in 0..ni {
            for j in 0..nj {
                let mut sum = T::zero();
                for s in 0..ns {
                    for k2 in 0..nk {
                        let p = spec.prob(k, i, j, k2, s);
                        if !(p >= T::zero()) {
                            violations.push(Violation::NegativeProbability {
                                state: k,
                                a1: i,
                                a2: j,
                                to: k2,
                                signal: s,
                                value: p.as_f64(),
                            });
                        }
                        sum += p;
                    }
                }
                let dev = (sum - T::one()).abs();
                if !(dev <= tol) {
                    violations.push(Violation::RowSum {
                        state: k,
                        a1: i,
                        a2: j,
                        magnitude: dev.as_f64(),
                    });
                }
                let g = spec.reward(k, i, j);
                if !(g >= T::zero() && g <= T::one()) {
                    violations.push(Violation::RewardRange {
                        state: k,
                        a1: i,
                        a2: j,
                        value: g.as_f64(),
                    });
                }
            }
        }
    }
    let b = spec.initial_belief().probs();
    for (k, &p) in b.iter().enumerate() {
        if !(p >= T::zero()) {
            violations.push(Violation::NegativeInitialBelief {
                state: k,
                value: p.as_f64(),
            });
        }
    }
    let mass: T = b.iter().copied().sum();
    let dev = (mass - T::one()).abs();
    if !(dev <= tol) {
        violations.push(Violation::InitialBeliefMass {
            magnitude: dev.as_f64(),
        });
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|x| format!("{prefix}{x}")).collect()
    }

    fn single(p: f64, g: f64) -> GameSpec<f64> {
        GameSpec::from_parts(
            labels("k", 1),
            labels("i", 1),
            labels("j", 1),
            labels("s", 1),
            |_, _, _, _, _| p,
            |_, _, _| g,
            vec![1.0],
        )
        .unwrap()
    }

    #[test]
    fn degenerate_game_is_valid() {
        assert!(validate_game(&single(1.0, 0.7)).is_valid());
    }

    #[test]
    fn short_row_is_reported_with_magnitude() {
        let report = validate_game(&single(0.9, 0.7));
        assert_eq!(report.violations.len(), 1);
        match &report.violations[0] {
            Violation::RowSum { magnitude, .. } => assert!((magnitude - 0.1).abs() < 1e-12),
            v => panic!("unexpected violation {v:?}"),
        }
    }

    #[test]
    fn reward_and_belief_violations() {
        let mut g = single(1.0, 1.5);
        g.initial = Belief::from_raw(vec![0.5]);
        let report = validate_game(&g);
        assert_eq!(report.violations.len(), 2);
        assert!(matches!(report.violations[0], Violation::RewardRange { .. }));
        assert!(matches!(report.violations[1], Violation::InitialBeliefMass { .. }));
    }

    #[test]
    fn two_signal_split() {
        // From each state, mass 0.6 on signal a and 0.4 on signal b.
        let spec = GameSpec::from_parts(
            labels("k", 2),
            labels("i", 1),
            labels("j", 1),
            vec!["a".into(), "b".into()],
            |_, _, _, k2, s| match (s, k2) {
                (0, 0) => 0.6,
                (1, 1) => 0.4,
                _ => 0.0,
            },
            |_, _, _| 0.0,
            vec![0.5, 0.5],
        )
        .unwrap();
        let a = transition_matrix(&spec, "i0", "j0", "a").unwrap();
        let b = transition_matrix(&spec, "i0", "j0", "b").unwrap();
        assert_eq!(a.entries.row_sums(), vec![0.6, 0.6]);
        assert_eq!(b.entries.row_sums(), vec![0.4, 0.4]);
        assert_eq!(b.tag, (0, 0, 1));
        assert!(matches!(
            transition_matrix(&spec, "i0", "j0", "zz"),
            Err(Error::UnknownLabel { kind: "signal", .. })
        ));
        let total = signal_sum(&spec, 0, 0);
        assert_eq!(total.row_sums(), vec![1.0, 1.0]);
    }

    #[test]
    fn belief_support_and_checks() {
        let b = Belief::<f64>::from_f64(&[0.0, 0.25, 0.75]).unwrap();
        assert_eq!(b.support(), &[1, 2]);
        assert!(Belief::<f64>::from_f64(&[0.5, 0.4]).is_err());
        assert!(Belief::<f64>::from_f64(&[1.5, -0.5]).is_err());
        assert!(Belief::<f64>::dirac(3, 2).is_dirac());
    }
}
