//! Ready-made games: the non-Doeblin counterexample, revealing reductions of
//! observed stochastic games, and small blind/primitive test games.

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::scalar::Scalar;
use crate::stochastic::StochasticGame;

fn labels(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn numbered(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

pub const COUNTEREXAMPLE_STATES: [&str; 7] = ["0+", "0++", "0*", "1+", "1++", "1T", "1*"];
const BLOCKS: [&str; 4] = ["zero", "one", "zeroabs", "oneabs"];

/// Block label index of a counterexample state.
fn block_of(k: usize) -> usize {
    match k {
        0 | 1 => 0,
        2 => 2,
        3..=5 => 1,
        _ => 3,
    }
}

/// Seven-state game in which Player 1 moves the `0` block with `c`/`q` and
/// Player 2 moves the `1` block. Signals are `d/<block>` or `d'/<block>`,
/// the block being that of the next state. Absorbing states repeat `d`.
pub fn counterexample<T: Scalar>() -> GameSpec<T> {
    // (from, action of the controlling player) -> [(to, d' ?, prob)]
    fn arcs(k: usize, a: usize) -> &'static [(usize, bool, f64)] {
        const C: usize = 0;
        match (k, a) {
            (0, C) => &[(0, false, 0.5), (1, true, 0.5)],
            (0, _) => &[(4, false, 1.0)],
            (1, C) => &[(0, false, 0.25), (1, false, 0.25), (1, true, 0.5)],
            (1, _) => &[(2, true, 1.0)],
            (2, _) => &[(2, false, 1.0)],
            (3, C) => &[(3, false, 0.5), (4, true, 0.5)],
            (3, _) => &[(1, false, 1.0)],
            (4, C) => &[(5, false, 0.5), (4, true, 0.5)],
            (4, _) => &[(6, true, 1.0)],
            (5, C) => &[(3, false, 0.375), (4, false, 0.125), (4, true, 0.5)],
            (5, _) => &[(6, true, 1.0)],
            _ => &[(6, false, 1.0)],
        }
    }
    let signals: Vec<String> = ["d", "d'"]
        .iter()
        .flat_map(|s1| BLOCKS.iter().map(move |b| format!("{s1}/{b}")))
        .collect();
    let mut initial = vec![T::zero(); 7];
    initial[1] = T::one();
    GameSpec::from_parts(
        labels(&COUNTEREXAMPLE_STATES),
        labels(&["c", "q"]),
        labels(&["c", "q"]),
        signals,
        |k, i, j, k2, s| {
            let a = if k <= 2 { i } else { j };
            arcs(k, a)
                .iter()
                .filter(|&&(to, dp, _)| to == k2 && s == usize::from(dp) * 4 + block_of(to))
                .map(|&(_, _, p)| T::lit(p))
                .sum()
        },
        |k, _, _| if k >= 3 { T::one() } else { T::zero() },
        initial,
    )
    .expect("counterexample shapes are consistent")
}

/// Hidden game whose signal is the next state; the initial belief is the
/// Dirac mass on the input's initial state.
pub fn build_revealing<T: Scalar>(game: &StochasticGame<T>) -> Result<GameSpec<T>> {
    let n = game.num_states();
    let mut initial = vec![T::zero(); n];
    initial[game.initial()] = T::one();
    GameSpec::from_parts(
        game.state_labels().to_vec(),
        game.actions1().to_vec(),
        game.actions2().to_vec(),
        game.state_labels().to_vec(),
        |k, i, j, k2, s| {
            if s != k2 {
                return T::zero();
            }
            game.transition(k, i, j)
                .iter()
                .find(|&&(y, _)| y == k2)
                .map_or(T::zero(), |&(_, p)| p)
        },
        |k, i, j| game.reward(k, i, j),
        initial,
    )
}

/// Blind game from one matrix per action pair (`mats[i·n2 + j]`), reward
/// `k/(|K|−1)` and initial belief on state 0.
pub fn blind_from_matrices<T: Scalar>(mats: &[&[&[f64]]], n1: usize, n2: usize) -> GameSpec<T> {
    assert_eq!(mats.len(), n1 * n2, "one matrix per action pair");
    let k = mats[0].len();
    let mut initial = vec![T::zero(); k];
    initial[0] = T::one();
    let denom = (k.max(2) - 1) as f64;
    GameSpec::from_parts(
        numbered("k", k),
        numbered("i", n1),
        numbered("j", n2),
        labels(&["-"]),
        |a, i, j, b, _| T::lit(mats[i * n2 + j][a][b]),
        |a, _, _| T::lit(a as f64 / denom),
        initial,
    )
    .expect("matrix shapes")
}

/// Reward shared by the two-state blind fixtures: state 1 pays 0.6 and
/// matching actions pay 0.4.
fn blind_pair_reward<T: Scalar>(k: usize, i: usize, j: usize) -> T {
    T::lit(0.6 * (k == 1) as u8 as f64 + 0.4 * (i == j) as u8 as f64)
}

fn blind_pair<T: Scalar>(first: [[f64; 2]; 2]) -> GameSpec<T> {
    const RANK_ONE: [[f64; 2]; 2] = [[0.4, 0.6], [0.4, 0.6]];
    GameSpec::from_parts(
        labels(&["a", "b"]),
        labels(&["x", "y"]),
        labels(&["x", "y"]),
        labels(&["-"]),
        |k, i, _, k2, _| T::lit(if i == 0 { first[k][k2] } else { RANK_ONE[k][k2] }),
        blind_pair_reward,
        vec![T::lit(0.5), T::lit(0.5)],
    )
    .expect("fixture shapes")
}

/// Blind primitive two-state game. Only Player 1's action moves the state:
/// `x` applies a positive mixing matrix, `y` a rank-one reset.
pub fn blind_rank_one_pair<T: Scalar>() -> GameSpec<T> {
    blind_pair([[0.8, 0.2], [0.3, 0.7]])
}

/// Same shape as [`blind_rank_one_pair`] with a fast-mixing `x` matrix, so a
/// single step already contracts beliefs below `0.2`.
pub fn coupling_pair<T: Scalar>() -> GameSpec<T> {
    blind_pair([[0.6, 0.4], [0.45, 0.55]])
}

/// One state, two actions each, constant reward `c`.
pub fn constant_game<T: Scalar>(c: f64) -> GameSpec<T> {
    GameSpec::from_parts(
        labels(&["k"]),
        labels(&["i0", "i1"]),
        labels(&["j0", "j1"]),
        labels(&["-"]),
        |_, _, _, _, _| T::one(),
        |_, _, _| T::lit(c),
        vec![T::one()],
    )
    .expect("fixture shapes")
}

fn matching_pennies_game<T: Scalar>() -> StochasticGame<T> {
    StochasticGame::from_dense(
        labels(&["k"]),
        labels(&["h", "t"]),
        labels(&["h", "t"]),
        |_, _, _, _| T::one(),
        |_, i, j| if i == j { T::one() } else { T::zero() },
        0,
    )
    .expect("fixture shapes")
}

/// Revealing single-state game with payoff `1{i = j}`.
pub fn matching_pennies<T: Scalar>() -> GameSpec<T> {
    build_revealing(&matching_pennies_game()).expect("fixture shapes")
}

/// Action-free two-state chain `0 → 1` w.p. `a`, `1 → 0` w.p. `b`, state
/// rewards `(0, 1)`, started in state 0.
pub fn chain_game<T: Scalar>(a: f64, b: f64) -> StochasticGame<T> {
    StochasticGame::from_dense(
        labels(&["s0", "s1"]),
        labels(&["-"]),
        labels(&["-"]),
        |x, _, _, y| {
            T::lit(match (x, y) {
                (0, 0) => 1.0 - a,
                (0, _) => a,
                (_, 0) => b,
                _ => 1.0 - b,
            })
        },
        |x, _, _| T::lit(x as f64),
        0,
    )
    .expect("fixture shapes")
}

/// Deterministic two-state cycle; both players' actions are irrelevant.
pub fn cycle_game<T: Scalar>() -> StochasticGame<T> {
    StochasticGame::from_dense(
        labels(&["s0", "s1"]),
        labels(&["i0", "i1"]),
        labels(&["j0", "j1"]),
        |x, _, _, y| if x != y { T::one() } else { T::zero() },
        |x, i, j| T::lit(if x == 1 { 0.75 } else { 0.25 * (i == j) as u8 as f64 }),
        0,
    )
    .expect("fixture shapes")
}

/// Three-state game where Player 1 picks between a safe state and a gamble
/// that Player 2 can steer.
pub fn gamble_game<T: Scalar>() -> StochasticGame<T> {
    StochasticGame::from_dense(
        labels(&["hub", "safe", "risky"]),
        labels(&["s", "r"]),
        labels(&["l", "h"]),
        |x, i, j, y| {
            let p: f64 = match (x, i, j, y) {
                (0, 0, _, 1) => 1.0,
                (0, 1, 0, 2) => 0.8,
                (0, 1, 0, 0) => 0.2,
                (0, 1, 1, 2) => 0.3,
                (0, 1, 1, 0) => 0.7,
                (1, _, _, 0) => 0.5,
                (1, _, _, 1) => 0.5,
                (2, _, j, 0) => [0.4, 0.6][j],
                (2, _, j, 2) => [0.6, 0.4][j],
                _ => 0.0,
            };
            T::lit(p)
        },
        |x, i, j| T::lit([[[0.2, 0.3], [0.1, 0.5]], [[0.5, 0.5], [0.5, 0.5]], [[0.9, 0.1], [0.3, 0.8]]][x][i][j]),
        0,
    )
    .expect("fixture shapes")
}

/// Two states, 2×2 actions, two informative signals; every transition matrix
/// is positive.
pub fn two_signal_pair<T: Scalar>() -> GameSpec<T> {
    // q[(i,j)][k][k'] and the probability of signal 0 given k'.
    const Q: [[[f64; 2]; 2]; 4] = [
        [[0.7, 0.3], [0.2, 0.8]],
        [[0.5, 0.5], [0.6, 0.4]],
        [[0.9, 0.1], [0.35, 0.65]],
        [[0.25, 0.75], [0.55, 0.45]],
    ];
    const SIG0: [f64; 2] = [0.8, 0.3];
    GameSpec::from_parts(
        labels(&["a", "b"]),
        labels(&["u", "v"]),
        labels(&["l", "r"]),
        labels(&["lo", "hi"]),
        |k, i, j, k2, s| {
            let p = Q[i * 2 + j][k][k2];
            T::lit(if s == 0 { p * SIG0[k2] } else { p * (1.0 - SIG0[k2]) })
        },
        |k, i, j| T::lit([[0.9, 0.2], [0.4, 0.6]][i][j] * if k == 0 { 1.0 } else { 0.5 }),
        vec![T::lit(0.3), T::lit(0.7)],
    )
    .expect("fixture shapes")
}

/// Two states, one action each, two signals with different row masses.
pub fn signal_split<T: Scalar>() -> GameSpec<T> {
    const P: [[[f64; 2]; 2]; 2] = [[[0.45, 0.15], [0.1, 0.2]], [[0.3, 0.1], [0.35, 0.35]]];
    GameSpec::from_parts(
        labels(&["a", "b"]),
        labels(&["-"]),
        labels(&["-"]),
        labels(&["s0", "s1"]),
        |k, _, _, k2, s| T::lit(P[s][k][k2]),
        |k, _, _| T::lit(k as f64),
        vec![T::lit(0.5), T::lit(0.5)],
    )
    .expect("fixture shapes")
}

/// Random valid game. Each `(k, i, j)` row gets exponential weights over
/// `(k', s)`, with each entry zeroed with probability `zero_prob` (at least
/// one entry survives). Rewards and initial belief are uniform draws.
pub fn random_spec<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    ni: usize,
    nj: usize,
    ns: usize,
    zero_prob: f64,
) -> GameSpec<f64> {
    let mut rows = vec![vec![0.0; k * ns]; k * ni * nj];
    for row in &mut rows {
        for x in row.iter_mut() {
            *x = if rng.gen_bool(zero_prob) { 0.0 } else { -(1.0 - rng.gen::<f64>()).ln() };
        }
        if row.iter().all(|&x| x == 0.0) {
            let c = rng.gen_range(0..row.len());
            row[c] = 1.0;
        }
        let t: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= t);
    }
    let rewards: Vec<f64> = (0..k * ni * nj).map(|_| rng.gen()).collect();
    let mut init: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let t: f64 = init.iter().sum();
    init.iter_mut().for_each(|x| *x /= t);
    GameSpec::from_parts(
        numbered("k", k),
        numbered("i", ni),
        numbered("j", nj),
        numbered("s", ns),
        |a, i, j, b, s| rows[(a * ni + i) * nj + j][b * ns + s],
        |a, i, j| rewards[(a * ni + i) * nj + j],
        init,
    )
    .expect("random shapes")
}

pub const FIXTURE_NAMES: [&str; 9] = [
    "counterexample",
    "revealing-cycle",
    "revealing-chain",
    "revealing-gamble",
    "revealing-matching-pennies",
    "blind-primitive",
    "coupling-primitive",
    "two-signal",
    "constant",
];

/// Fixture by CLI name.
pub fn named_fixture(name: &str) -> Result<GameSpec<f64>> {
    Ok(match name {
        "counterexample" => counterexample(),
        "revealing-cycle" => build_revealing(&cycle_game())?,
        "revealing-chain" => build_revealing(&chain_game(0.3, 0.1))?,
        "revealing-gamble" => build_revealing(&gamble_game())?,
        "revealing-matching-pennies" => matching_pennies(),
        "blind-primitive" => blind_rank_one_pair(),
        "coupling-primitive" => coupling_pair(),
        "two-signal" => two_signal_pair(),
        "constant" => constant_game(0.3),
        _ => {
            return Err(Error::UnknownLabel {
                kind: "fixture",
                label: name.to_string(),
            })
        }
    })
}
