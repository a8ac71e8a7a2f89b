//! JSON game files.
//!
//! ```json
//! { "states": ["a", "b"], "actions1": ["x"], "actions2": ["y"], "signals": ["s"],
//!   "transitions": [{"from": "a", "a1": "x", "a2": "y", "to": "b", "signal": "s", "prob": 1.0}, ...],
//!   "rewards": [{"state": "a", "a1": "x", "a2": "y", "value": 0.5}, ...],
//!   "initial_belief": [{"state": "a", "prob": 1.0}] }
//! ```
//!
//! Every `(from, a1, a2)` needs at least one transition entry; reward entries
//! default to 0 and initial-belief entries to 0.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::scalar::Scalar;
use crate::stochastic::StochasticGame;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub states: Vec<String>,
    pub actions1: Vec<String>,
    pub actions2: Vec<String>,
    pub signals: Vec<String>,
    pub transitions: Vec<TransitionEntry>,
    #[serde(default)]
    pub rewards: Vec<RewardEntry>,
    pub initial_belief: Vec<BeliefEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionEntry {
    pub from: String,
    pub a1: String,
    pub a2: String,
    pub to: String,
    pub signal: String,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardEntry {
    pub state: String,
    pub a1: String,
    pub a2: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefEntry {
    pub state: String,
    pub prob: f64,
}

fn index_of(labels: &[String]) -> HashMap<String, usize> {
    labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect()
}

fn check_alphabet(labels: &[String], field: &str) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::parse(field, "must not be empty"));
    }
    let mut seen = HashSet::new();
    for (n, l) in labels.iter().enumerate() {
        if !seen.insert(l) {
            return Err(Error::parse(format!("{field}[{n}]"), format!("duplicate label `{l}`")));
        }
    }
    Ok(())
}

fn resolve(map: &HashMap<String, usize>, label: &str, location: String, kind: &str) -> Result<usize> {
    map.get(label)
        .copied()
        .ok_or_else(|| Error::parse(location, format!("unknown {kind} `{label}`")))
}

fn check_number(x: f64, location: String) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::parse(location, "must be a finite number"))
    }
}

impl GameFile {
    pub fn into_spec<T: Scalar>(self) -> Result<GameSpec<T>> {
        check_alphabet(&self.states, "states")?;
        check_alphabet(&self.actions1, "actions1")?;
        check_alphabet(&self.actions2, "actions2")?;
        check_alphabet(&self.signals, "signals")?;
        let ks = index_of(&self.states);
        let is = index_of(&self.actions1);
        let js = index_of(&self.actions2);
        let ss = index_of(&self.signals);
        let (nk, ni, nj) = (self.states.len(), self.actions1.len(), self.actions2.len());

        let mut p: HashMap<(usize, usize, usize, usize, usize), f64> = HashMap::new();
        let mut rows = vec![false; nk * ni * nj];
        for (n, t) in self.transitions.iter().enumerate() {
            let at = |f: &str| format!("transitions[{n}].{f}");
            let k = resolve(&ks, &t.from, at("from"), "state")?;
            let i = resolve(&is, &t.a1, at("a1"), "action1")?;
            let j = resolve(&js, &t.a2, at("a2"), "action2")?;
            let k2 = resolve(&ks, &t.to, at("to"), "state")?;
            let s = resolve(&ss, &t.signal, at("signal"), "signal")?;
            let prob = check_number(t.prob, at("prob"))?;
            if p.insert((k, i, j, k2, s), prob).is_some() {
                return Err(Error::parse(format!("transitions[{n}]"), "duplicate (from, a1, a2, to, signal) entry"));
            }
            rows[(k * ni + i) * nj + j] = true;
        }
        if let Some(r) = rows.iter().position(|&seen| !seen) {
            let (k, i, j) = (r / (ni * nj), (r / nj) % ni, r % nj);
            return Err(Error::parse(
                "transitions",
                format!(
                    "missing row for (from `{}`, a1 `{}`, a2 `{}`)",
                    self.states[k], self.actions1[i], self.actions2[j]
                ),
            ));
        }

        let mut g = HashMap::new();
        for (n, r) in self.rewards.iter().enumerate() {
            let at = |f: &str| format!("rewards[{n}].{f}");
            let k = resolve(&ks, &r.state, at("state"), "state")?;
            let i = resolve(&is, &r.a1, at("a1"), "action1")?;
            let j = resolve(&js, &r.a2, at("a2"), "action2")?;
            let v = check_number(r.value, at("value"))?;
            if g.insert((k, i, j), v).is_some() {
                return Err(Error::parse(format!("rewards[{n}]"), "duplicate (state, a1, a2) entry"));
            }
        }

        let mut b = vec![T::zero(); nk];
        let mut seen = HashSet::new();
        for (n, e) in self.initial_belief.iter().enumerate() {
            let k = resolve(&ks, &e.state, format!("initial_belief[{n}].state"), "state")?;
            if !seen.insert(k) {
                return Err(Error::parse(format!("initial_belief[{n}]"), "duplicate state"));
            }
            b[k] = T::lit(check_number(e.prob, format!("initial_belief[{n}].prob"))?);
        }
        GameSpec::from_parts(
            self.states,
            self.actions1,
            self.actions2,
            self.signals,
            |k, i, j, k2, s| T::lit(p.get(&(k, i, j, k2, s)).copied().unwrap_or(0.0)),
            |k, i, j| T::lit(g.get(&(k, i, j)).copied().unwrap_or(0.0)),
            b,
        )
    }

    pub fn from_spec<T: Scalar>(spec: &GameSpec<T>) -> Self {
        let mut transitions = Vec::new();
        let mut rewards = Vec::new();
        let (nk, ni, nj) = (spec.num_states(), spec.num_actions1(), spec.num_actions2());
        for k in 0..nk {
            for i in 0..ni {
                for j in 0..nj {
                    for k2 in 0..nk {
                        for s in 0..spec.num_signals() {
                            let prob = spec.prob(k, i, j, k2, s).as_f64();
                            if prob != 0.0 {
                                transitions.push(TransitionEntry {
                                    from: spec.states()[k].clone(),
                                    a1: spec.actions1()[i].clone(),
                                    a2: spec.actions2()[j].clone(),
                                    to: spec.states()[k2].clone(),
                                    signal: spec.signals()[s].clone(),
                                    prob,
                                });
                            }
                        }
                    }
                    rewards.push(RewardEntry {
                        state: spec.states()[k].clone(),
                        a1: spec.actions1()[i].clone(),
                        a2: spec.actions2()[j].clone(),
                        value: spec.reward(k, i, j).as_f64(),
                    });
                }
            }
        }
        let initial_belief = spec
            .initial_belief()
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != T::zero())
            .map(|(k, &p)| BeliefEntry {
                state: spec.states()[k].clone(),
                prob: p.as_f64(),
            })
            .collect();
        Self {
            states: spec.states().to_vec(),
            actions1: spec.actions1().to_vec(),
            actions2: spec.actions2().to_vec(),
            signals: spec.signals().to_vec(),
            transitions,
            rewards,
            initial_belief,
        }
    }

    /// A fully observed game written in the same format: each signal names
    /// the next state.
    pub fn from_stochastic<T: Scalar>(game: &StochasticGame<T>) -> Self {
        let labels = game.state_labels();
        let mut transitions = Vec::new();
        let mut rewards = Vec::new();
        for x in 0..game.num_states() {
            for i in 0..game.num_actions1() {
                for j in 0..game.num_actions2() {
                    for &(y, p) in game.transition(x, i, j) {
                        transitions.push(TransitionEntry {
                            from: labels[x].clone(),
                            a1: game.actions1()[i].clone(),
                            a2: game.actions2()[j].clone(),
                            to: labels[y].clone(),
                            signal: labels[y].clone(),
                            prob: p.as_f64(),
                        });
                    }
                    rewards.push(RewardEntry {
                        state: labels[x].clone(),
                        a1: game.actions1()[i].clone(),
                        a2: game.actions2()[j].clone(),
                        value: game.reward(x, i, j).as_f64(),
                    });
                }
            }
        }
        Self {
            states: labels.to_vec(),
            actions1: game.actions1().to_vec(),
            actions2: game.actions2().to_vec(),
            signals: labels.to_vec(),
            transitions,
            rewards,
            initial_belief: vec![BeliefEntry {
                state: labels[game.initial()].clone(),
                prob: 1.0,
            }],
        }
    }
}

/// Parses a game file; syntax errors carry line and column.
pub fn parse_game<T: Scalar>(text: &str) -> Result<GameSpec<T>> {
    let file: GameFile = serde_json::from_str(text).map_err(|e| {
        Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
    })?;
    file.into_spec()
}

pub fn read_game<T: Scalar>(path: &Path) -> Result<GameSpec<T>> {
    let text = std::fs::read_to_string(path)?;
    parse_game(&text)
}

pub fn game_to_json<T: Scalar>(spec: &GameSpec<T>) -> String {
    serde_json::to_string_pretty(&GameFile::from_spec(spec)).expect("game file serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const TINY: &str = r#"{
        "states": ["a"], "actions1": ["x"], "actions2": ["y"], "signals": ["s"],
        "transitions": [{"from": "a", "a1": "x", "a2": "y", "to": "a", "signal": "s", "prob": 1.0}],
        "initial_belief": [{"state": "a", "prob": 1.0}]
    }"#;

    #[test]
    fn missing_rewards_default_to_zero() {
        let g: GameSpec<f64> = parse_game(TINY).unwrap();
        assert_eq!(g.reward(0, 0, 0), 0.0);
        assert_eq!(g.prob(0, 0, 0, 0, 0), 1.0);
    }

    #[test]
    fn errors_carry_locations() {
        let bad_label = TINY.replace(r#""to": "a""#, r#""to": "zz""#);
        match parse_game::<f64>(&bad_label) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "transitions[0].to"),
            other => panic!("{other:?}"),
        }
        let missing_row = TINY.replace(r#""actions2": ["y"]"#, r#""actions2": ["y", "w"]"#);
        match parse_game::<f64>(&missing_row) {
            Err(Error::Parse { location, message }) => {
                assert_eq!(location, "transitions");
                assert!(message.contains("`w`"));
            }
            other => panic!("{other:?}"),
        }
        match parse_game::<f64>("{\n \"states\": [\"a\"],\n oops }") {
            Err(Error::Parse { location, .. }) => assert!(location.starts_with("line 3")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fixture_round_trip() {
        for name in fixtures::FIXTURE_NAMES {
            let spec = fixtures::named_fixture(name).unwrap();
            let back: GameSpec<f64> = parse_game(&game_to_json(&spec)).unwrap();
            assert_eq!(GameFile::from_spec(&back), GameFile::from_spec(&spec), "{name}");
            assert_eq!(back.kernel, spec.kernel);
        }
    }
}
