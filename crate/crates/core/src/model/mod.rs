//! Game structures, specification tasks and runtime-information vectors.

mod format;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rational::Rational;

pub use format::{parse_game, write_game, ParseError};
pub use validate::{validate_game, Finding, FindingCode};

pub type StateId = usize;
pub type InputId = usize;
pub type OutputId = usize;
pub type StateSet = BTreeSet<StateId>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub state: StateId,
    pub input: InputId,
    pub output: OutputId,
    pub next: StateId,
    pub weight: Rational,
}

/// A finite turn-based arena: the environment picks an input, then the agent
/// picks one of the outputs legal for that `(state, input)` pair.
///
/// Fields are public so that tests can build deliberately broken games;
/// algorithms assume the structure passed [`validate_game`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameStructure {
    pub name: String,
    pub states: Vec<String>,
    pub initial: StateId,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub transitions: Vec<Transition>,
    pub labels: BTreeMap<String, StateSet>,
}

impl GameStructure {
    pub fn state_index(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name)
    }

    pub fn input_index(&self, name: &str) -> Option<InputId> {
        self.inputs.iter().position(|s| s == name)
    }

    pub fn output_index(&self, name: &str) -> Option<OutputId> {
        self.outputs.iter().position(|s| s == name)
    }

    pub fn label(&self, name: &str) -> Option<&StateSet> {
        self.labels.get(name)
    }

    pub fn arena(&self) -> Arena {
        Arena::new(self)
    }
}

/// Liveness guarantees, optional assumptions and the per-coordinate scenario
/// goal sets of the runtime-information vector. All sets are label names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecTask {
    pub guarantees: Vec<String>,
    #[serde(default)]
    pub assumptions: Vec<String>,
    pub scenarios: Vec<String>,
    /// Zero-based guarantee index serviced by each scenario.
    pub scenario_to_guarantee: Vec<usize>,
}

impl SpecTask {
    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    pub fn num_guarantees(&self) -> usize {
        self.guarantees.len()
    }

    /// Resolves label names to state sets. Unknown labels resolve to `None`.
    fn resolve(names: &[String], game: &GameStructure) -> Vec<Option<StateSet>> {
        names.iter().map(|n| game.label(n).cloned()).collect()
    }

    pub fn guarantee_sets(&self, game: &GameStructure) -> Vec<StateSet> {
        Self::resolve(&self.guarantees, game).into_iter().map(Option::unwrap_or_default).collect()
    }

    pub fn scenario_sets(&self, game: &GameStructure) -> Vec<StateSet> {
        Self::resolve(&self.scenarios, game).into_iter().map(Option::unwrap_or_default).collect()
    }

    pub fn assumption_sets(&self, game: &GameStructure) -> Vec<StateSet> {
        Self::resolve(&self.assumptions, game).into_iter().map(Option::unwrap_or_default).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub output: OutputId,
    pub next: StateId,
    pub weight: Rational,
}

/// Successor lists indexed by `(state, input)`, outputs sorted ascending.
#[derive(Debug, Clone)]
pub struct Arena {
    num_states: usize,
    num_inputs: usize,
    succ: Vec<Vec<Edge>>,
}

impl Arena {
    pub fn new(game: &GameStructure) -> Self {
        let num_states = game.states.len();
        let num_inputs = game.inputs.len();
        let mut succ = vec![Vec::new(); num_states * num_inputs];
        for t in &game.transitions {
            if t.state < num_states && t.input < num_inputs {
                succ[t.state * num_inputs + t.input].push(Edge {
                    output: t.output,
                    next: t.next,
                    weight: t.weight.clone(),
                });
            }
        }
        for list in &mut succ {
            list.sort_by_key(|e| e.output);
            list.dedup_by_key(|e| e.output);
        }
        Arena { num_states, num_inputs, succ }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn edges(&self, state: StateId, input: InputId) -> &[Edge] {
        &self.succ[state * self.num_inputs + input]
    }

    pub fn step(&self, state: StateId, input: InputId, output: OutputId) -> Option<&Edge> {
        let list = self.edges(state, input);
        list.binary_search_by_key(&output, |e| e.output).ok().map(|i| &list[i])
    }

    pub fn max_weight(&self) -> Rational {
        self.succ.iter().flatten().map(|e| &e.weight).max().cloned().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InfoError {
    #[error("information vector is empty")]
    Empty,
    #[error("entry {index} is negative ({value})")]
    Negative { index: usize, value: Rational },
    #[error("all entries are zero")]
    AllZero,
    #[error("entries sum to {0}, expected 1")]
    NotNormalized(Rational),
    #[error("expected {expected} entries, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// A point of the probability simplex: non-negative entries summing to one.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct InfoVector(Vec<Rational>);

impl InfoVector {
    pub fn new(entries: Vec<Rational>) -> Result<Self, InfoError> {
        if entries.is_empty() {
            return Err(InfoError::Empty);
        }
        if let Some((index, value)) = entries.iter().enumerate().find(|(_, v)| v.is_negative()) {
            return Err(InfoError::Negative { index, value: value.clone() });
        }
        let total: Rational = entries.iter().sum();
        if total != Rational::one() {
            return Err(InfoError::NotNormalized(total));
        }
        Ok(InfoVector(entries))
    }

    /// The basis vector with a one at `index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = vec![Rational::zero(); dim];
        v[index] = Rational::one();
        InfoVector(v)
    }

    pub fn uniform(dim: usize) -> Self {
        InfoVector(vec![Rational::new(1, dim as i64); dim])
    }

    pub fn entries(&self) -> &[Rational] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, index: usize) -> &Rational {
        &self.0[index]
    }

    pub fn into_inner(self) -> Vec<Rational> {
        self.0
    }

    pub fn dot(&self, weights: &[Rational]) -> Rational {
        self.0.iter().zip(weights).map(|(q, w)| q * w).sum()
    }
}

impl<'de> Deserialize<'de> for InfoVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let entries = Vec::<Rational>::deserialize(deserializer)?;
        InfoVector::new(entries).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for InfoVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, q) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{q}")?;
        }
        f.write_str("]")
    }
}

impl fmt::Debug for InfoVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Divides non-negative raw weights by their sum.
pub fn normalize_info(raw: &[Rational]) -> Result<InfoVector, InfoError> {
    if raw.is_empty() {
        return Err(InfoError::Empty);
    }
    if let Some((index, value)) = raw.iter().enumerate().find(|(_, v)| v.is_negative()) {
        return Err(InfoError::Negative { index, value: value.clone() });
    }
    let total: Rational = raw.iter().sum();
    if total.is_zero() {
        return Err(InfoError::AllZero);
    }
    Ok(InfoVector(raw.iter().map(|q| q / &total).collect()))
}

/// Parses a comma-separated list of fractions or decimals.
pub fn parse_vector(text: &str) -> Result<Vec<Rational>, crate::rational::ParseRationalError> {
    text.split(',').map(|part| part.trim().parse()).collect()
}
