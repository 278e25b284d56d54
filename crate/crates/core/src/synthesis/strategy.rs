use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::model::{Arena, GameStructure, InputId, OutputId, StateId, StateSet};
use crate::rational::Cost;

pub type MemId = usize;

/// A finite-memory agent strategy.
///
/// Memory `0` is the initial memory. The move table is only defined on the
/// `(memory, state)` pairs reachable from `(0, g)` for states `g` of the
/// region the strategy was built for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    pub id: usize,
    num_states: usize,
    num_inputs: usize,
    memory_count: usize,
    rows: Vec<(MemId, StateId)>,
    index: HashMap<(MemId, StateId), usize>,
    /// `rows.len() * num_inputs` entries of `(output, next memory)`.
    moves: Vec<(OutputId, MemId)>,
    pub basis_costs: Vec<Cost>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StrategyError {
    #[error("malformed strategy document: {0}")]
    Json(String),
    #[error("move table entry {0:?} is out of range")]
    OutOfRange(Vec<usize>),
    #[error("move for (memory {memory}, state {state}) is incomplete or duplicated")]
    Incomplete { memory: usize, state: usize },
}

pub(crate) struct StrategyBuilder {
    num_states: usize,
    num_inputs: usize,
    rows: Vec<(MemId, StateId)>,
    index: HashMap<(MemId, StateId), usize>,
    moves: Vec<(OutputId, MemId)>,
}

impl StrategyBuilder {
    pub(crate) fn new(num_states: usize, num_inputs: usize) -> Self {
        StrategyBuilder { num_states, num_inputs, rows: Vec::new(), index: HashMap::new(), moves: Vec::new() }
    }

    pub(crate) fn add_row(&mut self, memory: MemId, state: StateId, row: Vec<(OutputId, MemId)>) {
        debug_assert_eq!(row.len(), self.num_inputs);
        self.index.insert((memory, state), self.rows.len());
        self.rows.push((memory, state));
        self.moves.extend(row);
    }

    pub(crate) fn finish(self, memory_count: usize) -> Strategy {
        Strategy {
            id: 0,
            num_states: self.num_states,
            num_inputs: self.num_inputs,
            memory_count,
            rows: self.rows,
            index: self.index,
            moves: self.moves,
            basis_costs: Vec::new(),
        }
    }
}

impl Strategy {
    pub fn initial_memory(&self) -> MemId {
        0
    }

    pub fn memory_count(&self) -> usize {
        self.memory_count
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn is_defined(&self, memory: MemId, state: StateId) -> bool {
        self.index.contains_key(&(memory, state))
    }

    /// Output and next memory at `(memory, state)` under `input`.
    pub fn step(&self, memory: MemId, state: StateId, input: InputId) -> Option<(OutputId, MemId)> {
        let row = *self.index.get(&(memory, state))?;
        Some(self.moves[row * self.num_inputs + input])
    }

    pub fn next_move(&self, memory: MemId, state: StateId, input: InputId) -> Option<OutputId> {
        self.step(memory, state, input).map(|(o, _)| o)
    }

    /// Memory after the agent played `output`; `None` off the strategy.
    pub fn memory_update(&self, memory: MemId, state: StateId, input: InputId, output: OutputId) -> Option<MemId> {
        match self.step(memory, state, input) {
            Some((o, m)) if o == output => Some(m),
            _ => None,
        }
    }

    /// Defined `(memory, state)` pairs in construction order.
    pub fn rows(&self) -> &[(MemId, StateId)] {
        &self.rows
    }

    pub fn to_json(&self, arena: &Arena) -> String {
        let mut moves = Vec::new();
        let mut updates = Vec::new();
        let mut rows: Vec<(usize, (MemId, StateId))> = self.rows.iter().copied().enumerate().collect();
        rows.sort_by_key(|&(_, key)| key);
        for (r, (m, g)) in rows {
            for s in 0..self.num_inputs {
                let (a, m2) = self.moves[r * self.num_inputs + s];
                let g2 = arena.step(g, s, a).map(|e| e.next).unwrap_or(usize::MAX);
                moves.push([m, g, s, a]);
                updates.push([m, g, s, a, g2, m2]);
            }
        }
        let doc = StrategyDoc {
            id: self.id,
            num_states: self.num_states,
            num_inputs: self.num_inputs,
            memory_states: (0..self.memory_count).collect(),
            initial_memory: 0,
            r#move: moves,
            memory_update: updates,
            basis_costs: self.basis_costs.clone(),
        };
        let mut text = serde_json::to_string(&doc).expect("strategy serialization is infallible");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Strategy, StrategyError> {
        let doc: StrategyDoc = serde_json::from_str(text).map_err(|e| StrategyError::Json(e.to_string()))?;
        let m_count = doc.memory_states.len();
        let mut next_mem = HashMap::new();
        for &[m, g, s, a, _, m2] in &doc.memory_update {
            next_mem.insert((m, g, s, a), m2);
        }
        type Row = Vec<Option<(OutputId, MemId)>>;
        let mut pending: HashMap<(MemId, StateId), Row> = HashMap::new();
        let mut order = Vec::new();
        for &[m, g, s, a] in &doc.r#move {
            if m >= m_count || g >= doc.num_states || s >= doc.num_inputs {
                return Err(StrategyError::OutOfRange(vec![m, g, s, a]));
            }
            let m2 = *next_mem.get(&(m, g, s, a)).ok_or(StrategyError::Incomplete { memory: m, state: g })?;
            if m2 >= m_count {
                return Err(StrategyError::OutOfRange(vec![m, g, s, a, m2]));
            }
            let row = pending.entry((m, g)).or_insert_with(|| {
                order.push((m, g));
                vec![None; doc.num_inputs]
            });
            if row[s].replace((a, m2)).is_some() {
                return Err(StrategyError::Incomplete { memory: m, state: g });
            }
        }
        let mut b = StrategyBuilder::new(doc.num_states, doc.num_inputs);
        for key in order {
            let row: Option<Vec<_>> = pending.remove(&key).unwrap().into_iter().collect();
            let row = row.ok_or(StrategyError::Incomplete { memory: key.0, state: key.1 })?;
            b.add_row(key.0, key.1, row);
        }
        let mut st = b.finish(m_count);
        st.id = doc.id;
        st.basis_costs = doc.basis_costs;
        Ok(st)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrategyDoc {
    id: usize,
    num_states: usize,
    num_inputs: usize,
    memory_states: Vec<usize>,
    initial_memory: usize,
    r#move: Vec<[usize; 4]>,
    memory_update: Vec<[usize; 6]>,
    basis_costs: Vec<Cost>,
}

/// Worst-case accumulated weight from `(memory 0, start)` until the play
/// first enters `goal`, one entry per goal. Infinite when some play avoids
/// the goal forever or leaves the strategy's domain.
pub fn worst_case_reach(arena: &Arena, strategy: &Strategy, start: StateId, goals: &[StateSet]) -> Vec<Cost> {
    // product graph reachable from the start node
    let mut ids: HashMap<(MemId, StateId), usize> = HashMap::new();
    let mut nodes = vec![(0, start)];
    ids.insert((0, start), 0);
    let mut succ: Vec<Option<Vec<(usize, crate::rational::Rational)>>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        let (m, g) = nodes[u];
        let mut out = Some(Vec::new());
        for s in 0..arena.num_inputs() {
            let step = strategy.step(m, g, s).and_then(|(a, m2)| arena.step(g, s, a).map(|e| (e, m2)));
            match step {
                Some((e, m2)) => {
                    let key = (m2, e.next);
                    let v = *ids.entry(key).or_insert_with(|| {
                        nodes.push(key);
                        queue.push_back(nodes.len() - 1);
                        nodes.len() - 1
                    });
                    out.as_mut().unwrap().push((v, e.weight.clone()));
                }
                None => {
                    out = None;
                    break;
                }
            }
        }
        if succ.len() <= u {
            succ.resize(u + 1, None);
        }
        succ[u] = out;
    }
    goals.iter().map(|goal| longest_to_goal(&nodes, &succ, goal)).collect()
}

fn longest_to_goal(
    nodes: &[(MemId, StateId)],
    succ: &[Option<Vec<(usize, crate::rational::Rational)>>],
    goal: &StateSet,
) -> Cost {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut mark = vec![Mark::New; nodes.len()];
    let mut value: Vec<Option<crate::rational::Rational>> = vec![None; nodes.len()];
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    mark[0] = Mark::Open;
    while let Some(&mut (u, ref mut k)) = stack.last_mut() {
        if goal.contains(&nodes[u].1) {
            value[u] = Some(crate::rational::Rational::zero());
            mark[u] = Mark::Done;
            stack.pop();
            continue;
        }
        let Some(out) = &succ[u] else { return Cost::Infinite };
        if *k < out.len() {
            let v = out[*k].0;
            *k += 1;
            match mark[v] {
                Mark::Open => return Cost::Infinite,
                Mark::New => {
                    mark[v] = Mark::Open;
                    stack.push((v, 0));
                }
                Mark::Done => {}
            }
            continue;
        }
        let best = out
            .iter()
            .map(|(v, w)| value[*v].as_ref().expect("successor finished") + w)
            .max()
            .expect("at least one input");
        value[u] = Some(best);
        mark[u] = Mark::Done;
        stack.pop();
    }
    Cost::Finite(value[0].clone().expect("start finished"))
}

/// Basis costs of `strategy` from the game's initial state.
pub fn eval_cost_basis(game: &GameStructure, scenarios: &[StateSet], strategy: &Strategy) -> Vec<Cost> {
    worst_case_reach(&game.arena(), strategy, game.initial, scenarios)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_rejects_out_of_range_rows() {
        let text = r#"{"id":0,"num_states":1,"num_inputs":1,"memory_states":[0],"initial_memory":0,
            "move":[[0,3,0,0]],"memory_update":[[0,3,0,0,0,0]],"basis_costs":["1"]}"#;
        assert!(matches!(Strategy::from_json(text), Err(StrategyError::OutOfRange(_))));
    }
}
