use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::{GameStructure, SpecTask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FindingCode {
    EmptyStates,
    UnknownState,
    UnknownInput,
    UnknownOutput,
    DuplicateId,
    DuplicateTransition,
    IncompleteTransition,
    NegativeWeight,
    UnknownLabel,
    NoGuarantees,
    NoScenarios,
    ScenarioMap,
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            FindingCode::EmptyStates => "EMPTY_STATES",
            FindingCode::UnknownState => "UNKNOWN_STATE",
            FindingCode::UnknownInput => "UNKNOWN_INPUT",
            FindingCode::UnknownOutput => "UNKNOWN_OUTPUT",
            FindingCode::DuplicateId => "DUPLICATE_ID",
            FindingCode::DuplicateTransition => "DUPLICATE_TRANSITION",
            FindingCode::IncompleteTransition => "INCOMPLETE_TRANSITION",
            FindingCode::NegativeWeight => "NEGATIVE_WEIGHT",
            FindingCode::UnknownLabel => "UNKNOWN_LABEL",
            FindingCode::NoGuarantees => "NO_GUARANTEES",
            FindingCode::NoScenarios => "NO_SCENARIOS",
            FindingCode::ScenarioMap => "SCENARIO_MAP",
        };
        f.write_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub code: FindingCode,
    pub location: String,
    pub message: String,
}

impl Finding {
    fn new(code: FindingCode, location: impl Into<String>, message: impl Into<String>) -> Self {
        Finding { code, location: location.into(), message: message.into() }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.location, self.message)
    }
}

fn duplicates(names: &[String]) -> Vec<&str> {
    let mut seen = BTreeSet::new();
    let mut dups = BTreeSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            dups.insert(n.as_str());
        }
    }
    dups.into_iter().collect()
}

/// Checks every structural invariant of a game and its task. An empty result
/// means the pair is well formed.
pub fn validate_game(game: &GameStructure, spec: &SpecTask) -> Vec<Finding> {
    use FindingCode::*;
    let mut out = Vec::new();
    let ns = game.states.len();
    let ni = game.inputs.len();
    let no = game.outputs.len();

    if ns == 0 {
        out.push(Finding::new(EmptyStates, "states", "game has no states"));
    }
    for (kind, names) in [("state", &game.states), ("input", &game.inputs), ("output", &game.outputs)] {
        for d in duplicates(names) {
            out.push(Finding::new(DuplicateId, format!("{kind}s"), format!("duplicate {kind} id {d:?}")));
        }
    }
    if game.initial >= ns {
        out.push(Finding::new(UnknownState, "initial", format!("initial state index {} out of range", game.initial)));
    }

    let mut seen: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    let mut legal = vec![false; ns * ni];
    for (k, t) in game.transitions.iter().enumerate() {
        let loc = format!("transitions[{k}]");
        let mut in_range = true;
        if t.state >= ns || t.next >= ns {
            out.push(Finding::new(UnknownState, &loc, "transition references an unknown state"));
            in_range = false;
        }
        if t.input >= ni {
            out.push(Finding::new(UnknownInput, &loc, "transition references an unknown input"));
            in_range = false;
        }
        if t.output >= no {
            out.push(Finding::new(UnknownOutput, &loc, "transition references an unknown output"));
            in_range = false;
        }
        if t.weight.is_negative() {
            out.push(Finding::new(NegativeWeight, &loc, format!("weight {} is negative", t.weight)));
        }
        if !in_range {
            continue;
        }
        if let Some(first) = seen.insert((t.state, t.input, t.output), k) {
            out.push(Finding::new(
                DuplicateTransition,
                &loc,
                format!("(state, input, output) already defined by transitions[{first}]"),
            ));
        }
        legal[t.state * ni + t.input] = true;
    }
    for g in 0..ns {
        for i in 0..ni {
            if !legal[g * ni + i] {
                out.push(Finding::new(
                    IncompleteTransition,
                    format!("state {:?}, input {:?}", game.states[g], game.inputs[i]),
                    "incomplete transition function: no legal output",
                ));
            }
        }
    }
    for (name, set) in &game.labels {
        if let Some(bad) = set.iter().find(|&&s| s >= ns) {
            out.push(Finding::new(UnknownState, format!("labels.{name}"), format!("state index {bad} out of range")));
        }
    }

    if spec.guarantees.is_empty() {
        out.push(Finding::new(NoGuarantees, "spec.guarantees", "at least one guarantee is required"));
    }
    if spec.scenarios.is_empty() {
        out.push(Finding::new(NoScenarios, "spec.scenarios", "at least one scenario is required"));
    }
    for (field, names) in
        [("guarantees", &spec.guarantees), ("assumptions", &spec.assumptions), ("scenarios", &spec.scenarios)]
    {
        for (k, n) in names.iter().enumerate() {
            if !game.labels.contains_key(n) {
                out.push(Finding::new(UnknownLabel, format!("spec.{field}[{k}]"), format!("undeclared label {n:?}")));
            }
        }
    }
    if spec.scenario_to_guarantee.len() != spec.scenarios.len() {
        out.push(Finding::new(
            ScenarioMap,
            "spec.scenario_to_guarantee",
            format!("{} entries for {} scenarios", spec.scenario_to_guarantee.len(), spec.scenarios.len()),
        ));
    }
    for (k, &g) in spec.scenario_to_guarantee.iter().enumerate() {
        if g >= spec.guarantees.len() {
            out.push(Finding::new(
                ScenarioMap,
                format!("spec.scenario_to_guarantee[{k}]"),
                format!("guarantee index {g} out of range"),
            ));
        }
    }
    out
}
