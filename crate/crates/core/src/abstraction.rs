//! Grid projection `π_η`, the abstract stochastic game `Γ_A(b₁, η)` and the
//! history maps between the two games.
//!
//! An abstract state is an anchor (the initial belief or a grid point) plus a
//! trail of steps replayed exactly from it. A block lasts `η` stages: the
//! trail grows to length `η − 1`, and the next step re-anchors on the
//! projection of the exact posterior, keeping only the signal.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::Serialize;

use crate::belief::{belief_key, belief_update, signal_probability, stage_reward};
use crate::error::{Error, Result};
use crate::game::{Belief, GameSpec};
use crate::scalar::Scalar;
use crate::stochastic::{GameStats, StochasticGame};
use crate::strategy::{History, Step};

/// Point of the grid `{n/η : n ∈ ℕ^K, Σn = η}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GridPoint {
    pub numerators: Vec<u32>,
    pub eta: usize,
}

impl GridPoint {
    pub fn to_belief<T: Scalar>(&self) -> Belief<T> {
        let eta = T::from_usize_lossy(self.eta);
        Belief::from_raw(
            self.numerators
                .iter()
                .map(|&n| T::from_usize_lossy(n as usize) / eta)
                .collect(),
        )
    }
}

/// L1-nearest grid point with the same support as `b`, lexicographically
/// smallest among the minimizers.
///
/// Each coordinate's cost `|b_k − n/η|` is convex in `n`, so the optimum
/// hands out the `η − |supp|` free units in order of marginal cost. Every
/// minimizer differs only in where the units tied at the cutoff go; filling
/// the highest indices first gives the smallest vector.
pub fn project<T: Scalar>(b: &Belief<T>, eta: usize) -> Result<GridPoint> {
    let support = b.support();
    if eta < support.len() || eta == 0 {
        return Err(Error::EtaTooSmall {
            eta,
            needed: support.len().max(1),
        });
    }
    let k = b.len();
    let unit = 1.0 / eta as f64;
    let tie = 1e-12 * unit;
    let mut n = vec![0u32; k];
    // floor(η b_k) with values within rounding of an integer snapped, and
    // the marginal cost of the unit that crosses b_k.
    let mut below = Vec::with_capacity(support.len());
    let mut crossing = Vec::new();
    for &c in support {
        n[c] = 1;
        let bk = b.probs()[c].as_f64();
        let x = bk * eta as f64;
        let r = x.round();
        let (fl, exact) = if (x - r).abs() <= 1e-12 * x.max(1.0) {
            (r as usize, true)
        } else {
            (x.floor() as usize, false)
        };
        below.push((c, fl.saturating_sub(1)));
        if fl >= 1 && !exact {
            let cost = (2 * fl + 1) as f64 * unit - 2.0 * bk;
            if cost < unit - tie {
                crossing.push((c, cost));
            }
        }
    }
    let mut free = eta - support.len();

    // Units that move n_k/η towards b_k from below all cost −1/η.
    let total_below: usize = below.iter().map(|&(_, a)| a).sum();
    if free <= total_below {
        for &(c, a) in below.iter().rev() {
            let take = a.min(free);
            n[c] += take as u32;
            free -= take;
        }
        return Ok(GridPoint { numerators: n, eta });
    }
    for &(c, a) in &below {
        n[c] += a as u32;
    }
    free -= total_below;

    crossing.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut g = 0;
    while g < crossing.len() && free > 0 {
        let mut end = g;
        while end < crossing.len() && crossing[end].1 - crossing[g].1 <= tie {
            end += 1;
        }
        let group = &mut crossing[g..end];
        if group.len() <= free {
            for &(c, _) in group.iter() {
                n[c] += 1;
            }
            free -= group.len();
        } else {
            group.sort_by_key(|&(c, _)| std::cmp::Reverse(c));
            for &(c, _) in group.iter().take(free) {
                n[c] += 1;
            }
            free = 0;
        }
        g = end;
    }
    // Whatever is left costs +1/η wherever it goes.
    if free > 0 {
        let last = *support.last().expect("nonempty support");
        n[last] += free as u32;
    }
    Ok(GridPoint { numerators: n, eta })
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    Initial,
    Grid(Vec<u32>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trail {
    Empty,
    /// Fresh anchor reached through this signal.
    Signal(usize),
    Steps(Vec<Step>),
}

impl Trail {
    pub fn len(&self) -> usize {
        match self {
            Trail::Steps(h) => h.len(),
            _ => 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Structural identity of an abstract state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct AbstractKey {
    pub anchor: Anchor,
    pub trail: Trail,
}

impl AbstractKey {
    pub fn initial() -> Self {
        Self {
            anchor: Anchor::Initial,
            trail: Trail::Empty,
        }
    }

    pub fn label(&self) -> String {
        let anchor = match &self.anchor {
            Anchor::Initial => "b1".to_string(),
            Anchor::Grid(n) => format!("{n:?}").replace(' ', ""),
        };
        match &self.trail {
            Trail::Empty => anchor,
            Trail::Signal(s) => format!("{anchor}|s{s}"),
            Trail::Steps(h) => {
                let steps: Vec<String> = h.iter().map(|st| format!("{}.{}.{}", st.a1, st.a2, st.signal)).collect();
                format!("{anchor}|{}", steps.join(","))
            }
        }
    }
}

/// Abstract state with its exact belief `proj(x)`.
#[derive(Clone, Debug)]
pub struct AbstractState<T> {
    pub key: AbstractKey,
    pub belief: Belief<T>,
}

impl<T: Scalar> AbstractState<T> {
    pub fn initial(b1: &Belief<T>) -> Self {
        Self {
            key: AbstractKey::initial(),
            belief: b1.clone(),
        }
    }

    pub fn proj(&self) -> &Belief<T> {
        &self.belief
    }
}

/// `ψ_A(x, i, j, s)`.
pub fn abstract_update<T: Scalar>(
    spec: &GameSpec<T>,
    x: &AbstractState<T>,
    i: usize,
    j: usize,
    s: usize,
    eta: usize,
) -> Result<AbstractState<T>> {
    let mut next = x.clone();
    next.advance(spec, i, j, s, eta)?;
    Ok(next)
}

impl<T: Scalar> AbstractState<T> {
    /// In-place `ψ_A`; appends to the trail without copying it. On error the
    /// state is unchanged.
    pub fn advance(&mut self, spec: &GameSpec<T>, i: usize, j: usize, s: usize, eta: usize) -> Result<()> {
        if eta == 0 {
            return Err(Error::EtaTooSmall { eta, needed: 1 });
        }
        let next = match belief_update(spec, &self.belief, i, j, s) {
            Ok(b) => b,
            Err(Error::ZeroProbabilitySignal { .. }) => return Err(Error::InadmissibleSignal { signal: s }),
            Err(e) => return Err(e),
        };
        let step = Step::new(i, j, s);
        if self.key.trail.len() + 1 < eta {
            match &mut self.key.trail {
                Trail::Steps(h) => h.push(step),
                t => *t = Trail::Steps(vec![step]),
            }
            self.belief = next;
        } else {
            let grid = project(&next, eta)?;
            self.belief = grid.to_belief();
            self.key = AbstractKey {
                anchor: Anchor::Grid(grid.numerators),
                trail: Trail::Signal(s),
            };
        }
        Ok(())
    }
}

/// Reachable part of `Γ_A(b₁, η)` as a finite stochastic game.
#[derive(Clone, Debug)]
pub struct AbstractGame<T> {
    pub game: StochasticGame<T>,
    pub states: Vec<AbstractState<T>>,
    /// BFS depth at which each state was first reached.
    pub depth: Vec<usize>,
    pub eta: usize,
    index: HashMap<AbstractKey, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AbstractStats {
    pub states: usize,
    pub edges: usize,
    pub depth_histogram: BTreeMap<usize, usize>,
}

impl<T: Scalar> AbstractGame<T> {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> usize {
        self.game.initial()
    }

    pub fn id_of(&self, key: &AbstractKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn proj(&self, x: usize) -> &Belief<T> {
        &self.states[x].belief
    }

    pub fn stats(&self) -> AbstractStats {
        let GameStats { states, edges } = self.game.stats();
        let mut depth_histogram = BTreeMap::new();
        for &d in &self.depth {
            *depth_histogram.entry(d).or_insert(0) += 1;
        }
        AbstractStats {
            states,
            edges,
            depth_histogram,
        }
    }
}

/// How reached abstract states are identified.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StateMerge {
    /// By `(anchor, trail)`.
    #[default]
    Structural,
    /// By `(trail length, proj(x))`, beliefs compared at `MERGE_TOL`. Rewards
    /// and transitions depend only on these two, so values are unchanged.
    Belief,
}

#[derive(PartialEq, Eq, Hash)]
enum NodeKey {
    Exact(AbstractKey),
    Merged(usize, Vec<i64>),
}

fn node_key<T: Scalar>(x: &AbstractState<T>, merge: StateMerge) -> NodeKey {
    match merge {
        StateMerge::Structural => NodeKey::Exact(x.key.clone()),
        StateMerge::Belief => NodeKey::Merged(x.key.trail.len(), belief_key(&x.belief)),
    }
}

/// Breadth-first closure of `x₁ = (b₁, ∅)` under `ψ_A`. State ids follow
/// discovery order, which is deterministic.
pub fn build_abstract<T: Scalar>(spec: &GameSpec<T>, b1: &Belief<T>, eta: usize, cap: usize) -> Result<AbstractGame<T>> {
    build_abstract_with(spec, b1, eta, cap, StateMerge::Structural)
}

/// [`build_abstract`] with a choice of state identification. Under
/// [`StateMerge::Belief`] each state keeps the key of its first visit and
/// [`AbstractGame::id_of`] only knows those keys.
pub fn build_abstract_with<T: Scalar>(
    spec: &GameSpec<T>,
    b1: &Belief<T>,
    eta: usize,
    cap: usize,
    merge: StateMerge,
) -> Result<AbstractGame<T>> {
    let k = spec.num_states();
    if eta < k {
        return Err(Error::EtaTooSmall { eta, needed: k });
    }
    let (ni, nj) = (spec.num_actions1(), spec.num_actions2());
    let mut states = vec![AbstractState::initial(b1)];
    let mut depth = vec![0usize];
    let mut nodes = HashMap::from([(node_key(&states[0], merge), 0usize)]);
    let mut transitions: Vec<Vec<(usize, T)>> = Vec::new();
    let mut rewards = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(x) = queue.pop_front() {
        // States are expanded in id order, so row blocks line up with ids.
        debug_assert_eq!(transitions.len(), x * ni * nj);
        for i in 0..ni {
            for j in 0..nj {
                let mut row: BTreeMap<usize, T> = BTreeMap::new();
                for s in 0..spec.num_signals() {
                    let p = signal_probability(spec, &states[x].belief, i, j, s);
                    if p <= T::admissible_tol() {
                        continue;
                    }
                    let next = abstract_update(spec, &states[x], i, j, s, eta)?;
                    let id = match nodes.get(&node_key(&next, merge)) {
                        Some(&id) => id,
                        None => {
                            let id = states.len();
                            if id >= cap {
                                return Err(Error::CapExceeded {
                                    what: "abstract states",
                                    cap,
                                });
                            }
                            nodes.insert(node_key(&next, merge), id);
                            states.push(next);
                            depth.push(depth[x] + 1);
                            queue.push_back(id);
                            id
                        }
                    };
                    *row.entry(id).or_insert_with(T::zero) += p;
                }
                transitions.push(row.into_iter().collect());
                rewards.push(stage_reward(spec, &states[x].belief, i, j));
            }
        }
    }
    let labels = states.iter().map(|s| s.key.label()).collect();
    let index = states.iter().enumerate().map(|(id, s)| (s.key.clone(), id)).collect();
    let game = StochasticGame::from_sparse(
        labels,
        spec.actions1().to_vec(),
        spec.actions2().to_vec(),
        transitions,
        rewards,
        0,
    )?;
    Ok(AbstractGame {
        game,
        states,
        depth,
        eta,
        index,
    })
}

/// Abstract history: states `x₁ … x_m` and the action pairs between them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AbstractHistory {
    pub states: Vec<AbstractKey>,
    pub actions: Vec<(usize, usize)>,
}

/// `ξ`: the abstract history driven by `ψ_A` along `h`.
pub fn map_history_xi<T: Scalar>(
    spec: &GameSpec<T>,
    b1: &Belief<T>,
    eta: usize,
    h: &[Step],
) -> Result<AbstractHistory> {
    let mut x = AbstractState::initial(b1);
    let mut out = AbstractHistory {
        states: vec![x.key.clone()],
        actions: Vec::with_capacity(h.len()),
    };
    for (m, st) in h.iter().enumerate() {
        x = abstract_update(spec, &x, st.a1, st.a2, st.signal, eta).map_err(|e| match e {
            Error::InadmissibleSignal { .. } => Error::InadmissibleHistory {
                normalizer: crate::belief::history_normalizer(spec, b1, &h[..=m]).as_f64(),
            },
            e => e,
        })?;
        out.actions.push((st.a1, st.a2));
        out.states.push(x.key.clone());
    }
    Ok(out)
}

/// `ξ_A`: recovers the signal consumed at every abstract transition.
pub fn map_history_xi_a<T: Scalar>(
    spec: &GameSpec<T>,
    b1: &Belief<T>,
    eta: usize,
    ha: &AbstractHistory,
) -> Result<History> {
    let inadmissible = || Error::InadmissibleHistory { normalizer: 0.0 };
    if ha.states.len() != ha.actions.len() + 1 || ha.states[0] != AbstractKey::initial() {
        return Err(inadmissible());
    }
    let mut x = AbstractState::initial(b1);
    let mut h = History::empty();
    for (m, &(i, j)) in ha.actions.iter().enumerate() {
        let target = &ha.states[m + 1];
        let s = match &target.trail {
            Trail::Signal(s) => *s,
            Trail::Steps(steps) => steps.last().ok_or_else(inadmissible)?.signal,
            Trail::Empty => return Err(inadmissible()),
        };
        let next = abstract_update(spec, &x, i, j, s, eta).map_err(|_| inadmissible())?;
        if &next.key != target {
            return Err(inadmissible());
        }
        h.push(Step::new(i, j, s));
        x = next;
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::belief_from_history;
    use crate::fixtures;

    fn b(p: &[f64]) -> Belief<f64> {
        Belief::from_f64(p).unwrap()
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project(&b(&[1.0, 0.0]), 7).unwrap().numerators, vec![7, 0]);
        assert_eq!(project(&b(&[0.3, 0.7]), 4).unwrap().numerators, vec![1, 3]);
        assert_eq!(project(&b(&[0.25, 0.75]), 2).unwrap().numerators, vec![1, 1]);
        assert!(matches!(project(&b(&[0.5, 0.5]), 1), Err(Error::EtaTooSmall { .. })));
    }

    #[test]
    fn projection_ties_prefer_small_prefix() {
        // (0.5, 0.5) at η = 3: (1,2) and (2,1) both cost 1/3.
        assert_eq!(project(&b(&[0.5, 0.5]), 3).unwrap().numerators, vec![1, 2]);
        let third = 1.0 / 3.0;
        assert_eq!(project(&b(&[third, third, third]), 4).unwrap().numerators, vec![1, 1, 2]);
    }

    fn brute_force(b: &[f64], eta: usize) -> Vec<u32> {
        fn rec(k: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if k == 1 {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
                return;
            }
            for n in 0..=left {
                cur.push(n);
                rec(k - 1, left - n, cur, out);
                cur.pop();
            }
        }
        let mut all = Vec::new();
        rec(b.len(), eta as u32, &mut Vec::new(), &mut all);
        let cost = |n: &Vec<u32>| -> f64 { n.iter().zip(b).map(|(&x, &p)| (p - x as f64 / eta as f64).abs()).sum() };
        let feasible: Vec<_> = all
            .into_iter()
            .filter(|n| n.iter().zip(b).all(|(&x, &p)| (x > 0) == (p > 1e-12)))
            .collect();
        let best = feasible.iter().map(cost).fold(f64::INFINITY, f64::min);
        feasible
            .into_iter()
            .filter(|n| cost(n) <= best + 1e-12)
            .min()
            .unwrap()
    }

    #[test]
    fn projection_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..400 {
            let k = rng.gen_range(2..=4);
            let mut p: Vec<f64> = (0..k).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen() }).collect();
            if p.iter().all(|&x| x == 0.0) {
                p[0] = 1.0;
            }
            let s: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= s);
            let eta = rng.gen_range(k..=9);
            let got = project(&b(&p), eta).unwrap().numerators;
            assert_eq!(got, brute_force(&p, eta), "b={p:?} eta={eta}");
        }
    }

    #[test]
    fn first_update_appends() {
        let spec = fixtures::blind_rank_one_pair::<f64>();
        let x = AbstractState::initial(spec.initial_belief());
        let y = abstract_update(&spec, &x, 0, 1, 0, 3).unwrap();
        assert_eq!(y.key.anchor, Anchor::Initial);
        assert_eq!(y.key.trail, Trail::Steps(vec![Step::new(0, 1, 0)]));
    }

    #[test]
    fn eta_one_reanchors_every_step() {
        // Deterministic blind dynamics keep every posterior on the η = 1 grid.
        let spec = fixtures::blind_from_matrices::<f64>(
            &[&[&[0.0, 1.0], &[1.0, 0.0]], &[&[1.0, 0.0], &[1.0, 0.0]]],
            2,
            1,
        );
        let h = [Step::new(0, 0, 0), Step::new(0, 0, 0), Step::new(1, 0, 0), Step::new(0, 0, 0)];
        let mut x = AbstractState::initial(spec.initial_belief());
        let mut exact = spec.initial_belief().clone();
        for st in &h {
            exact = belief_update(&spec, &exact, st.a1, st.a2, st.signal).unwrap();
            x = abstract_update(&spec, &x, st.a1, st.a2, st.signal, 1).unwrap();
            assert_eq!(x.key.trail, Trail::Signal(0));
            assert_eq!(x.key.anchor, Anchor::Grid(project(&exact, 1).unwrap().numerators));
        }
    }

    #[test]
    fn within_block_beliefs_are_exact() {
        let spec = fixtures::two_signal_pair::<f64>();
        let b1 = spec.initial_belief().clone();
        let g = build_abstract(&spec, &b1, 3, 10_000).unwrap();
        for st in &g.states {
            if let (Anchor::Initial, Trail::Steps(h)) = (&st.key.anchor, &st.key.trail) {
                let exact = belief_from_history(&spec, &b1, h).unwrap();
                assert!(st.belief.max_distance(&exact) < 1e-12);
            }
        }
    }

    #[test]
    fn xi_round_trip() {
        let spec = fixtures::two_signal_pair::<f64>();
        let b1 = spec.initial_belief().clone();
        let nodes = crate::belief::enumerate_admissible(&spec, &b1, 5, 100_000).unwrap();
        for n in nodes {
            let ha = map_history_xi(&spec, &b1, 2, &n.history).unwrap();
            assert_eq!(map_history_xi_a(&spec, &b1, 2, &ha).unwrap(), n.history);
        }
    }

    #[test]
    fn belief_merge_keeps_values() {
        for spec in [fixtures::two_signal_pair::<f64>(), fixtures::blind_rank_one_pair()] {
            let b1 = spec.initial_belief().clone();
            let a = build_abstract(&spec, &b1, 3, 100_000).unwrap();
            let b = build_abstract_with(&spec, &b1, 3, 100_000, StateMerge::Belief).unwrap();
            assert!(b.num_states() <= a.num_states());
            for n in 1..8 {
                let va = crate::solver::shapley_nstage(&a.game, n).unwrap().values[a.initial()];
                let vb = crate::solver::shapley_nstage(&b.game, n).unwrap().values[b.initial()];
                assert!((va - vb).abs() < 1e-12, "n = {n}");
            }
        }
        let one = fixtures::constant_game::<f64>(0.3);
        let g = build_abstract_with(&one, one.initial_belief(), 50, 1000, StateMerge::Belief).unwrap();
        assert_eq!(g.num_states(), 50);
    }
}
