//! Reference games used by tests, benches and the command-line examples.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{GameStructure, SpecTask, StateSet, Transition};
use crate::rational::Rational;

/// Incremental construction of a game by symbol names.
#[derive(Debug, Clone)]
pub struct GameBuilder {
    game: GameStructure,
}

fn intern(list: &mut Vec<String>, name: &str) -> usize {
    match list.iter().position(|s| s == name) {
        Some(i) => i,
        None => {
            list.push(name.to_string());
            list.len() - 1
        }
    }
}

impl GameBuilder {
    pub fn new(name: &str) -> Self {
        GameBuilder {
            game: GameStructure {
                name: name.to_string(),
                states: Vec::new(),
                initial: 0,
                inputs: Vec::new(),
                outputs: Vec::new(),
                transitions: Vec::new(),
                labels: BTreeMap::new(),
            },
        }
    }

    pub fn state(mut self, name: &str) -> Self {
        intern(&mut self.game.states, name);
        self
    }

    pub fn initial(mut self, name: &str) -> Self {
        self.game.initial = intern(&mut self.game.states, name);
        self
    }

    pub fn edge(mut self, from: &str, input: &str, output: &str, to: &str, weight: Rational) -> Self {
        let g = &mut self.game;
        let t = Transition {
            state: intern(&mut g.states, from),
            input: intern(&mut g.inputs, input),
            output: intern(&mut g.outputs, output),
            next: intern(&mut g.states, to),
            weight,
        };
        g.transitions.push(t);
        self
    }

    pub fn label(mut self, name: &str, members: &[&str]) -> Self {
        let set: StateSet = members.iter().map(|m| intern(&mut self.game.states, m)).collect();
        self.game.labels.insert(name.to_string(), set);
        self
    }

    pub fn build(self) -> GameStructure {
        self.game
    }
}

/// Guarantees equal the scenario goal sets, one per label.
pub fn tour_spec(labels: &[&str]) -> SpecTask {
    let names: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
    SpecTask {
        guarantees: names.clone(),
        assumptions: Vec::new(),
        scenario_to_guarantee: (0..names.len()).collect(),
        scenarios: names,
    }
}

fn star_builder() -> GameBuilder {
    let one = Rational::one;
    GameBuilder::new("star")
        .initial("hub")
        .edge("hub", "tick", "stay", "hub", one())
        .edge("hub", "tick", "arm_a", "a1", one())
        .edge("hub", "tick", "arm_b", "b1", one())
        .edge("hub", "tick", "arm_c", "c1", one())
        .edge("a1", "tick", "back", "hub", one())
        .edge("b1", "tick", "back", "hub", one())
        .edge("b1", "tick", "fwd", "b2", one())
        .edge("b2", "tick", "back", "b1", one())
        .edge("c1", "tick", "back", "hub", one())
        .edge("c1", "tick", "fwd", "c2", one())
        .edge("c2", "tick", "back", "c1", one())
        .edge("c2", "tick", "fwd", "c3", one())
        .edge("c3", "tick", "back", "c2", one())
        .label("tip_a", &["a1"])
        .label("tip_b", &["b2"])
        .label("tip_c", &["c3"])
}

/// A hub with three arms of lengths 1, 2 and 3, unit weights, one
/// environment input and one goal per arm tip.
pub fn star() -> (GameStructure, SpecTask) {
    (star_builder().build(), tour_spec(&["tip_a", "tip_b", "tip_c"]))
}

/// [`star`] plus an absorbing `pit` reachable from the hub.
pub fn star_with_pit() -> (GameStructure, SpecTask) {
    let game = star_builder()
        .edge("hub", "tick", "fall", "pit", Rational::one())
        .edge("pit", "tick", "stay", "pit", Rational::one())
        .build();
    (game, tour_spec(&["tip_a", "tip_b", "tip_c"]))
}

/// The environment picks a branch at `start`; on the left branch goal `A` is
/// cheap, on the right branch goal `B` is. Worst cases on different branches
/// hit different scenarios.
pub fn fork() -> (GameStructure, SpecTask) {
    let w = |n| Rational::from_int(n);
    let mut b = GameBuilder::new("fork").initial("start");
    b = b.edge("start", "left", "go", "L", w(0)).edge("start", "right", "go", "R", w(0));
    for input in ["left", "right"] {
        b = b
            .edge("L", input, "to_a", "A", w(1))
            .edge("L", input, "to_b", "B", w(3))
            .edge("R", input, "to_a", "A", w(3))
            .edge("R", input, "to_b", "B", w(1))
            .edge("A", input, "to_b", "B", w(1))
            .edge("A", input, "home", "start", w(1))
            .edge("B", input, "to_a", "A", w(1))
            .edge("B", input, "home", "start", w(1));
    }
    let game = b.label("goal_a", &["A"]).label("goal_b", &["B"]).build();
    (game, tour_spec(&["goal_a", "goal_b"]))
}

#[derive(Debug, Clone, Copy)]
pub struct RandomGameParams {
    pub min_states: usize,
    pub max_states: usize,
    pub max_inputs: usize,
    pub max_outputs: usize,
    pub max_weight: i64,
    pub min_scenarios: usize,
    pub max_scenarios: usize,
    pub max_goal_size: usize,
    /// Chance that a non-first input reuses the first input's moves at a
    /// state, so the environment only matters at some states.
    pub shared_input_prob: f64,
}

impl Default for RandomGameParams {
    fn default() -> Self {
        RandomGameParams {
            min_states: 2,
            max_states: 12,
            max_inputs: 2,
            max_outputs: 3,
            max_weight: 5,
            min_scenarios: 1,
            max_scenarios: 3,
            max_goal_size: 2,
            shared_input_prob: 0.0,
        }
    }
}

/// A seeded random game with complete transitions, integer weights and one
/// guarantee per scenario. The initial state need not be winning.
pub fn random_game(seed: u64, params: &RandomGameParams) -> (GameStructure, SpecTask) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ns = rng.gen_range(params.min_states.max(1)..=params.max_states.max(params.min_states).max(1));
    let ni = rng.gen_range(1..=params.max_inputs.max(1));
    let no = params.max_outputs.max(1);
    let states: Vec<String> = (0..ns).map(|i| format!("s{i}")).collect();
    let inputs: Vec<String> = (0..ni).map(|i| format!("i{i}")).collect();
    let outputs: Vec<String> = (0..no).map(|i| format!("o{i}")).collect();
    let mut transitions = Vec::new();
    for g in 0..ns {
        let first = transitions.len();
        for s in 0..ni {
            if s > 0 && rng.gen_bool(params.shared_input_prob) {
                let copies: Vec<Transition> = transitions[first..]
                    .iter()
                    .filter(|t: &&Transition| t.input == 0)
                    .map(|t| Transition { input: s, ..t.clone() })
                    .collect();
                transitions.extend(copies);
                continue;
            }
            let k = rng.gen_range(1..=no);
            let mut chosen = sample(&mut rng, no, k).into_vec();
            chosen.sort_unstable();
            for o in chosen {
                transitions.push(Transition {
                    state: g,
                    input: s,
                    output: o,
                    next: rng.gen_range(0..ns),
                    weight: Rational::from_int(rng.gen_range(0..=params.max_weight)),
                });
            }
        }
    }
    let n = rng.gen_range(params.min_scenarios.max(1)..=params.max_scenarios.max(params.min_scenarios).max(1));
    let mut labels = BTreeMap::new();
    let mut names = Vec::new();
    for j in 0..n {
        let size = rng.gen_range(1..=params.max_goal_size.clamp(1, ns));
        let set: StateSet = sample(&mut rng, ns, size).into_iter().collect();
        let name = format!("goal{}", j + 1);
        labels.insert(name.clone(), set);
        names.push(name);
    }
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let game =
        GameStructure { name: format!("random-{seed}"), states, initial: 0, inputs, outputs, transitions, labels };
    (game, tour_spec(&refs))
}

/// Parameters of the randomized corpus used by the property suites: up to
/// 12 states, 2 inputs, 3 outputs per move, weights 0..=5 and 2-3 scenarios.
pub fn corpus_params() -> RandomGameParams {
    RandomGameParams {
        min_states: 4,
        min_scenarios: 2,
        max_goal_size: 2,
        shared_input_prob: 0.6,
        ..RandomGameParams::default()
    }
}

/// Seeded random games whose initial state can visit every guarantee and
/// every scenario goal infinitely often. Returns `(seed, game, spec)`.
pub fn winning_corpus(count: usize, first_seed: u64, params: &RandomGameParams) -> Vec<(u64, GameStructure, SpecTask)> {
    let mut out = Vec::with_capacity(count);
    let mut seed = first_seed;
    while out.len() < count {
        let (g, s) = random_game(seed, params);
        if let Ok(syn) = crate::synthesis::Synthesizer::new(&g, &s) {
            if syn.unreachable_scenarios().is_empty() {
                out.push((seed, g, s));
            }
        }
        seed += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_game, validate_game, write_game};

    #[test]
    fn fixtures_validate() {
        for (g, s) in [star(), star_with_pit(), fork()] {
            assert_eq!(validate_game(&g, &s), vec![], "{}", g.name);
        }
        let (g, _) = star();
        assert_eq!(g.states.len(), 7);
        assert_eq!(g.states[g.initial], "hub");
    }

    #[test]
    fn random_games_validate_and_round_trip() {
        for seed in 0..50 {
            let (g, s) = random_game(seed, &RandomGameParams::default());
            assert_eq!(validate_game(&g, &s), vec![]);
            assert_eq!(parse_game(&write_game(&g, &s)).unwrap(), (g, s));
        }
    }

    #[test]
    fn random_games_are_seeded() {
        let p = RandomGameParams::default();
        assert_eq!(random_game(7, &p), random_game(7, &p));
        assert_ne!(random_game(7, &p), random_game(8, &p));
    }
}
