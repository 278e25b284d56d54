use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SimError, SimGame};
use crate::model::{InfoVector, InputId, StateId};
use crate::rational::Cost;
use crate::synthesis::min_max_distance;

/// How the environment picks inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdversaryModel {
    Uniform(u64),
    /// Input names, one per step.
    Script(Vec<String>),
    /// Maximizes the agent's expected cost-to-go after its best reply.
    Greedy,
}

impl AdversaryModel {
    /// Parses `uniform:<seed>` or `greedy`. Scripts come from [`parse_script`].
    pub fn parse(text: &str) -> Result<AdversaryModel, SimError> {
        match text.split_once(':') {
            None if text == "greedy" => Ok(AdversaryModel::Greedy),
            Some(("uniform", seed)) => seed
                .trim()
                .parse()
                .map(AdversaryModel::Uniform)
                .map_err(|_| SimError::Adversary(format!("invalid seed {seed:?}"))),
            _ => Err(SimError::Adversary(format!("unknown adversary {text:?}"))),
        }
    }

    pub fn with_seed(&self, seed: u64) -> AdversaryModel {
        match self {
            AdversaryModel::Uniform(_) => AdversaryModel::Uniform(seed),
            other => other.clone(),
        }
    }
}

/// Input names separated by whitespace or commas.
pub fn parse_script(text: &str) -> Vec<String> {
    text.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).map(str::to_string).collect()
}

pub(crate) enum Adversary {
    Uniform(Box<ChaCha8Rng>, usize),
    Script(Vec<InputId>),
    Greedy(Vec<Vec<Cost>>),
}

impl Adversary {
    pub(crate) fn new(model: &AdversaryModel, sim: &SimGame, horizon: usize) -> Result<Adversary, SimError> {
        let ni = sim.arena.num_inputs();
        Ok(match model {
            AdversaryModel::Uniform(seed) => Adversary::Uniform(Box::new(ChaCha8Rng::seed_from_u64(*seed)), ni),
            AdversaryModel::Script(names) => {
                if names.len() < horizon {
                    return Err(SimError::ScriptTooShort { needed: horizon, got: names.len() });
                }
                let ids = names
                    .iter()
                    .map(|n| sim.game.input_index(n).ok_or_else(|| SimError::Adversary(format!("unknown input {n:?}"))))
                    .collect::<Result<_, _>>()?;
                Adversary::Script(ids)
            }
            AdversaryModel::Greedy => {
                let everywhere = vec![true; sim.arena.num_states()];
                let dist =
                    sim.scenario_masks.iter().map(|goal| min_max_distance(&sim.arena, &everywhere, goal)).collect();
                Adversary::Greedy(dist)
            }
        })
    }

    pub(crate) fn choose(&mut self, sim: &SimGame, step: usize, g: StateId, p: &InfoVector) -> InputId {
        match self {
            Adversary::Uniform(rng, ni) => rng.gen_range(0..*ni),
            Adversary::Script(ids) => ids[step],
            Adversary::Greedy(dist) => {
                let value = |h: StateId| {
                    let mut total = Cost::zero();
                    for (j, d) in dist.iter().enumerate() {
                        total = total.plus(&d[h].scale(p.get(j)));
                    }
                    total
                };
                let mut best: Option<(Cost, InputId)> = None;
                for sigma in 0..sim.arena.num_inputs() {
                    let reply = sim
                        .arena
                        .edges(g, sigma)
                        .iter()
                        .map(|e| value(e.next).add(&e.weight))
                        .min()
                        .unwrap_or(Cost::Infinite);
                    if best.as_ref().is_none_or(|(b, _)| reply > *b) {
                        best = Some((reply, sigma));
                    }
                }
                best.map_or(0, |(_, s)| s)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_specs() {
        assert_eq!(AdversaryModel::parse("uniform:42").unwrap(), AdversaryModel::Uniform(42));
        assert_eq!(AdversaryModel::parse("greedy").unwrap(), AdversaryModel::Greedy);
        assert!(AdversaryModel::parse("uniform:x").is_err());
        assert!(AdversaryModel::parse("chaos").is_err());
        assert_eq!(parse_script("a, b\nc  a"), vec!["a", "b", "c", "a"]);
    }
}
