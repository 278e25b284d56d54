use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{validate_game, Finding, GameStructure, SpecTask, StateSet, Transition};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{location}: unknown {kind} {name:?}")]
    UnknownReference { location: String, kind: &'static str, name: String },
    #[error("duplicate {kind} id {name:?}")]
    DuplicateId { kind: &'static str, name: String },
    #[error("invalid game: {}", join_findings(.0))]
    Invalid(Vec<Finding>),
}

fn join_findings(findings: &[Finding]) -> String {
    findings.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGame {
    name: String,
    states: Vec<String>,
    initial: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    transitions: Vec<(String, String, String, String, Rational)>,
    labels: BTreeMap<String, Vec<String>>,
    spec: SpecTask,
}

fn index_of(kind: &'static str, names: &[String]) -> Result<HashMap<String, usize>, ParseError> {
    let mut map = HashMap::with_capacity(names.len());
    for (i, n) in names.iter().enumerate() {
        if map.insert(n.clone(), i).is_some() {
            return Err(ParseError::DuplicateId { kind, name: n.clone() });
        }
    }
    Ok(map)
}

fn lookup(
    map: &HashMap<String, usize>,
    kind: &'static str,
    name: &str,
    location: impl Fn() -> String,
) -> Result<usize, ParseError> {
    map.get(name).copied().ok_or_else(|| ParseError::UnknownReference {
        location: location(),
        kind,
        name: name.to_string(),
    })
}

/// Parses and validates a game document. Weights may be JSON numbers or
/// fraction strings and are read exactly.
pub fn parse_game(text: &str) -> Result<(GameStructure, SpecTask), ParseError> {
    let raw: RawGame = serde_json::from_str(text).map_err(|e| ParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let states = index_of("state", &raw.states)?;
    let inputs = index_of("input", &raw.inputs)?;
    let outputs = index_of("output", &raw.outputs)?;
    let initial = lookup(&states, "state", &raw.initial, || "initial".into())?;

    let mut transitions = Vec::with_capacity(raw.transitions.len());
    for (k, (s, i, o, n, w)) in raw.transitions.into_iter().enumerate() {
        let loc = || format!("transitions[{k}]");
        transitions.push(Transition {
            state: lookup(&states, "state", &s, loc)?,
            input: lookup(&inputs, "input", &i, loc)?,
            output: lookup(&outputs, "output", &o, loc)?,
            next: lookup(&states, "state", &n, loc)?,
            weight: w,
        });
    }
    let mut labels = BTreeMap::new();
    for (name, members) in raw.labels {
        let set = members
            .iter()
            .map(|m| lookup(&states, "state", m, || format!("labels.{name}")))
            .collect::<Result<StateSet, _>>()?;
        labels.insert(name, set);
    }
    let game = GameStructure {
        name: raw.name,
        states: raw.states,
        initial,
        inputs: raw.inputs,
        outputs: raw.outputs,
        transitions,
        labels,
    };
    let findings = validate_game(&game, &raw.spec);
    if findings.is_empty() {
        Ok((game, raw.spec))
    } else {
        Err(ParseError::Invalid(findings))
    }
}

/// Serializes a game in the format read by [`parse_game`].
pub fn write_game(game: &GameStructure, spec: &SpecTask) -> String {
    let raw = RawGame {
        name: game.name.clone(),
        states: game.states.clone(),
        initial: game.states[game.initial].clone(),
        inputs: game.inputs.clone(),
        outputs: game.outputs.clone(),
        transitions: game
            .transitions
            .iter()
            .map(|t| {
                (
                    game.states[t.state].clone(),
                    game.inputs[t.input].clone(),
                    game.outputs[t.output].clone(),
                    game.states[t.next].clone(),
                    t.weight.clone(),
                )
            })
            .collect(),
        labels: game
            .labels
            .iter()
            .map(|(k, v)| (k.clone(), v.iter().map(|&s| game.states[s].clone()).collect()))
            .collect(),
        spec: spec.clone(),
    };
    let mut text = serde_json::to_string_pretty(&raw).expect("game serialization is infallible");
    text.push('\n');
    text
}
