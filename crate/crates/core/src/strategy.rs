//! Behavioral strategies over histories, beliefs, or abstract states.

use std::borrow::Borrow;
use std::collections::HashMap;
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::abstraction::AbstractKey;
use crate::error::{Error, Result};
use crate::game::{Belief, GameSpec};
use crate::scalar::Scalar;

/// One observed stage: both actions and the public signal that followed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Step {
    pub a1: usize,
    pub a2: usize,
    pub signal: usize,
}

impl Step {
    pub fn new(a1: usize, a2: usize, signal: usize) -> Self {
        Self { a1, a2, signal }
    }
}

/// History before stage `m`: a sequence of `m − 1` steps.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct History(pub Vec<Step>);

impl History {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn push(&mut self, step: Step) {
        self.0.push(step);
    }

    pub fn extended(&self, step: Step) -> Self {
        let mut h = self.clone();
        h.push(step);
        h
    }

    pub fn concat(&self, tail: &[Step]) -> Self {
        let mut h = self.clone();
        h.0.extend_from_slice(tail);
        h
    }
}

// Hash and Eq of the newtype agree with the slice, so tables can be probed
// with a borrowed `&[Step]`.
impl Borrow<[Step]> for History {
    fn borrow(&self) -> &[Step] {
        &self.0
    }
}

impl Deref for History {
    type Target = [Step];

    fn deref(&self) -> &[Step] {
        &self.0
    }
}

impl From<Vec<Step>> for History {
    fn from(v: Vec<Step>) -> Self {
        Self(v)
    }
}

/// Everything a strategy may condition on at the current stage.
pub struct PlayView<'a, T> {
    /// History relative to the strategy's root.
    pub history: &'a [Step],
    pub belief: &'a Belief<T>,
    pub abstract_key: Option<&'a AbstractKey>,
}

pub type MixtureRule<T> = Arc<dyn Fn(&Belief<T>) -> Vec<T> + Send + Sync>;

#[derive(Clone)]
pub enum Strategy<T> {
    Uniform,
    /// Explicit mixtures per history; histories missing from the table are errors.
    HistoryTable(HashMap<History, Vec<T>>),
    /// Mixtures per abstract state; falls back to `default` when given.
    AbstractTable {
        table: HashMap<AbstractKey, Vec<T>>,
        default: Option<Vec<T>>,
    },
    /// Stationary in the current belief (or `proj(x)` in the abstract game).
    BeliefStationary(MixtureRule<T>),
}

impl<T> fmt::Debug for Strategy<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Uniform => f.write_str("Uniform"),
            Strategy::HistoryTable(t) => write!(f, "HistoryTable({} entries)", t.len()),
            Strategy::AbstractTable { table, .. } => write!(f, "AbstractTable({} entries)", table.len()),
            Strategy::BeliefStationary(_) => f.write_str("BeliefStationary"),
        }
    }
}

impl<T: Scalar> Strategy<T> {
    pub fn stationary(rule: impl Fn(&Belief<T>) -> Vec<T> + Send + Sync + 'static) -> Self {
        Strategy::BeliefStationary(Arc::new(rule))
    }

    /// Same fixed mixture at every history.
    pub fn constant(mixture: Vec<T>) -> Self {
        Self::stationary(move |_| mixture.clone())
    }

    pub fn is_shift_invariant(&self) -> bool {
        !matches!(self, Strategy::HistoryTable(_))
    }

    /// Mixture over `n_actions` at the given view; checks it is a distribution.
    pub fn mixture(&self, view: &PlayView<'_, T>, n_actions: usize) -> Result<Vec<T>> {
        let mix = match self {
            Strategy::Uniform => return Ok(vec![T::one() / T::from_usize_lossy(n_actions); n_actions]),
            Strategy::HistoryTable(table) => table
                .get(view.history)
                .cloned()
                .ok_or_else(|| Error::InvalidStrategy(format!("no entry for history {:?}", view.history)))?,
            Strategy::AbstractTable { table, default } => {
                let key = view
                    .abstract_key
                    .ok_or_else(|| Error::InvalidStrategy("abstract-state strategy used outside the abstract game".into()))?;
                match (table.get(key), default) {
                    (Some(m), _) | (None, Some(m)) => m.clone(),
                    (None, None) => {
                        return Err(Error::InvalidStrategy(format!("no entry for abstract state {key:?}")));
                    }
                }
            }
            Strategy::BeliefStationary(rule) => rule(view.belief),
        };
        check_mixture(&mix, n_actions)?;
        Ok(mix)
    }
}

fn check_mixture<T: Scalar>(mix: &[T], n: usize) -> Result<()> {
    let sum: T = mix.iter().copied().sum();
    if mix.len() != n || mix.iter().any(|&p| !(p >= T::zero())) || (sum - T::one()).abs() > T::mass_tol() {
        return Err(Error::InvalidStrategy(format!(
            "mixture of length {} with mass {sum} over {n} actions",
            mix.len()
        )));
    }
    Ok(())
}

/// Continuation of `sigma` after `h`: tables are re-rooted at `h`,
/// stationary rules are returned unchanged.
pub fn shift_strategy<T: Scalar>(sigma: &Strategy<T>, h: &[Step]) -> Strategy<T> {
    match sigma {
        Strategy::HistoryTable(table) if !h.is_empty() => Strategy::HistoryTable(
            table
                .iter()
                .filter(|(k, _)| k.starts_with(h))
                .map(|(k, v)| (History(k[h.len()..].to_vec()), v.clone()))
                .collect(),
        ),
        other => other.clone(),
    }
}

/// Every history of length `< depth` over the full `(i, j, s)` alphabet, in
/// lexicographic index order. Fails past `cap` entries.
pub fn all_histories<T: Scalar>(spec: &GameSpec<T>, depth: usize, cap: usize) -> Result<Vec<History>> {
    let letters: Vec<Step> = spec.letters().map(|(i, j, s)| Step::new(i, j, s)).collect();
    let mut out = vec![History::empty()];
    let mut frontier = vec![History::empty()];
    for _ in 1..depth {
        let mut next = Vec::with_capacity(frontier.len() * letters.len());
        for h in &frontier {
            for &l in &letters {
                next.push(h.extended(l));
            }
        }
        if out.len() + next.len() > cap {
            return Err(Error::CapExceeded { what: "history table", cap });
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(out)
}

/// Random mixture with i.i.d. exponential weights (uniform on the simplex).
pub fn random_mixture<T: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<T> {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    let mut mix: Vec<T> = w.iter().map(|x| T::lit(x / total)).collect();
    // Push rounding residue onto the last entry so the mass check is exact.
    let head: T = mix[..n - 1].iter().copied().sum();
    mix[n - 1] = (T::one() - head).max(T::zero());
    mix
}

/// Table strategy with an independent random mixture at every history of
/// length `< depth`.
pub fn random_history_table<T: Scalar, R: Rng + ?Sized>(
    spec: &GameSpec<T>,
    depth: usize,
    n_actions: usize,
    cap: usize,
    rng: &mut R,
) -> Result<Strategy<T>> {
    let table = all_histories(spec, depth, cap)?
        .into_iter()
        .map(|h| (h, random_mixture(rng, n_actions)))
        .collect();
    Ok(Strategy::HistoryTable(table))
}
