//! Winning regions, cost-optimal strategy synthesis and cost evaluation.
//!
//! A strategy is asked to visit every guarantee set infinitely often and,
//! within each service round, to reach every scenario goal set. Its cost at
//! an information vector `q` is `sum_j q_j * C_j` where `C_j` is the
//! worst-case weight accumulated before the first visit of goal `j`.
//!
//! Synthesis computes, once per game, the Pareto frontier of achievable
//! worst-case vectors `(C_1, ..., C_n)`; the optimum for any `q` is then a
//! minimum over that frontier.

mod frontier;
mod oracle;
mod reach;
mod strategy;
mod winning;

use std::collections::{HashMap, VecDeque};

use crate::model::{Arena, GameStructure, InfoVector, SpecTask, StateId, StateSet};
use crate::rational::{Cost, Rational};
use frontier::{EntryId, Frontier};

pub use oracle::{Oracle, CELL_LIMIT};
pub use reach::min_max_distance;
#[cfg(test)]
pub(crate) use strategy::StrategyBuilder;
pub use strategy::{eval_cost_basis, worst_case_reach, MemId, Strategy, StrategyError};
pub use winning::{ranks_within, winning_mask};

/// Scenario bitmasks are `u32`, but the frontier has `2^n` layers per state.
pub const MAX_SCENARIOS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("unrealizable: initial state {0:?} is outside the winning region")]
    Unrealizable(String),
    #[error("unrealizable without assumptions from initial state {0:?}: assumption exploitation unsupported")]
    AssumptionsUnsupported(String),
    #[error("scenario goals cannot all be visited together from initial state {0:?}")]
    JointlyUnreachable(String),
    #[error("scenario {} ({name}) cannot be guaranteed but has positive weight", index + 1)]
    ScenarioUnreachable { index: usize, name: String },
    #[error("information vector has {got} entries, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("too many scenarios or guarantees ({0})")]
    TooLarge(usize),
    #[error("budget table exceeds the size limit")]
    SizeGuard,
}

/// Per-game data shared by synthesis, evaluation and the oracle.
#[derive(Debug, Clone)]
pub(crate) struct Context {
    game: GameStructure,
    arena: Arena,
    n: usize,
    scenario_sets: Vec<StateSet>,
    scenario_names: Vec<String>,
    /// Joint winning region for all tracked target sets.
    winning: Vec<bool>,
    dropped_scen: u32,
    full_scen: u32,
    full_targets: u64,
    hit_targets: Vec<u64>,
    hit_scen: Vec<u32>,
    completion_ranks: Vec<Vec<Option<usize>>>,
}

impl Context {
    fn new(game: &GameStructure, spec: &SpecTask) -> Result<Context, SynthError> {
        let arena = game.arena();
        let ns = arena.num_states();
        let n = spec.num_scenarios();
        if n > MAX_SCENARIOS {
            return Err(SynthError::TooLarge(n));
        }
        let scenario_sets = spec.scenario_sets(game);
        let g_masks: Vec<Vec<bool>> = spec.guarantee_sets(game).iter().map(|s| winning::mask_of(ns, s)).collect();
        let s_masks: Vec<Vec<bool>> = scenario_sets.iter().map(|s| winning::mask_of(ns, s)).collect();
        let g0 = game.initial;
        let initial_name = || game.states[g0].clone();

        let w_f = winning_mask(&arena, &g_masks);
        if !w_f[g0] && !spec.assumptions.is_empty() {
            return Err(SynthError::AssumptionsUnsupported(initial_name()));
        }
        if !w_f[g0] {
            return Err(SynthError::Unrealizable(initial_name()));
        }
        let mut dropped_scen = 0u32;
        let joint = |dropped: u32| -> (Vec<Vec<bool>>, Vec<bool>) {
            let mut targets: Vec<Vec<bool>> = Vec::new();
            for m in g_masks
                .iter()
                .chain(s_masks.iter().enumerate().filter(|(j, _)| dropped & (1 << j) == 0).map(|(_, m)| m))
            {
                if !targets.contains(m) {
                    targets.push(m.clone());
                }
            }
            let w = winning_mask(&arena, &targets);
            (targets, w)
        };
        let (mut targets, mut winning) = joint(0);
        if !winning[g0] {
            for (j, m) in s_masks.iter().enumerate() {
                let mut t = g_masks.clone();
                t.push(m.clone());
                if !winning_mask(&arena, &t)[g0] {
                    dropped_scen |= 1 << j;
                }
            }
            (targets, winning) = joint(dropped_scen);
            if !winning[g0] {
                return Err(SynthError::JointlyUnreachable(initial_name()));
            }
        }
        if targets.len() > 64 {
            return Err(SynthError::TooLarge(targets.len()));
        }
        let hit_targets = (0..ns)
            .map(|g| targets.iter().enumerate().filter(|(_, t)| t[g]).fold(0u64, |acc, (k, _)| acc | 1 << k))
            .collect();
        let hit_scen = (0..ns)
            .map(|g| {
                (0..n).filter(|&j| dropped_scen & (1 << j) == 0 && s_masks[j][g]).fold(0u32, |acc, j| acc | 1 << j)
            })
            .collect();
        let completion_ranks = targets.iter().map(|t| ranks_within(&arena, &winning, t)).collect();
        Ok(Context {
            game: game.clone(),
            n,
            scenario_sets,
            scenario_names: spec.scenarios.clone(),
            winning,
            dropped_scen,
            full_scen: ((1u64 << n) - 1) as u32,
            full_targets: if targets.len() == 64 { u64::MAX } else { (1u64 << targets.len()) - 1 },
            hit_targets,
            hit_scen,
            completion_ranks,
            arena,
        })
    }

    fn check_weights(&self, p: &InfoVector) -> Result<(), SynthError> {
        if p.dim() != self.n {
            return Err(SynthError::Dimension { expected: self.n, got: p.dim() });
        }
        for j in 0..self.n {
            if self.dropped_scen & (1 << j) != 0 && p.get(j).is_positive() {
                return Err(SynthError::ScenarioUnreachable { index: j, name: self.scenario_names[j].clone() });
            }
        }
        Ok(())
    }
}

/// Memory of a synthesized strategy before numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    /// Start of a service round; resolved against the current state.
    Fresh,
    /// Reaching scenario goals along frontier witnesses.
    Cost { visited: u64, entry: EntryId },
    /// All scenarios seen; visiting the remaining guarantees.
    Complete { visited: u64 },
}

/// Game-level synthesis state: the joint winning region and the cost
/// frontier. Building it is the expensive part; strategies for individual
/// information vectors are then cheap.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    ctx: Context,
    frontier: Frontier,
}

impl Synthesizer {
    pub fn new(game: &GameStructure, spec: &SpecTask) -> Result<Synthesizer, SynthError> {
        let ctx = Context::new(game, spec)?;
        let frontier = Frontier::build(&ctx);
        Ok(Synthesizer { ctx, frontier })
    }

    pub fn game(&self) -> &GameStructure {
        &self.ctx.game
    }

    pub fn arena(&self) -> &Arena {
        &self.ctx.arena
    }

    pub fn num_scenarios(&self) -> usize {
        self.ctx.n
    }

    pub fn scenario_sets(&self) -> &[StateSet] {
        &self.ctx.scenario_sets
    }

    /// States from which all guarantees and all reachable scenario goals can
    /// be visited infinitely often. Synthesized strategies never leave it.
    pub fn region(&self) -> StateSet {
        (0..self.ctx.winning.len()).filter(|&g| self.ctx.winning[g]).collect()
    }

    /// Scenarios whose goal cannot be guaranteed from the initial state.
    pub fn unreachable_scenarios(&self) -> Vec<usize> {
        (0..self.ctx.n).filter(|&j| self.ctx.dropped_scen & (1 << j) != 0).collect()
    }

    fn start_node(&self, g: StateId) -> u32 {
        self.ctx.hit_scen[g] | self.ctx.dropped_scen
    }

    /// Pareto-minimal worst-case cost vectors achievable from the initial
    /// state, in lexicographic order.
    pub fn initial_frontier(&self) -> Vec<Vec<Rational>> {
        let g0 = self.ctx.game.initial;
        let mut out: Vec<Vec<Rational>> = self
            .frontier
            .live(g0, self.start_node(g0))
            .iter()
            .map(|&id| self.frontier.entries[id].vec.clone())
            .collect();
        out.sort();
        out
    }

    /// Minimal expected cost `C*(p)` among strategies that stay in the
    /// region.
    pub fn optimal_cost(&self, p: &InfoVector) -> Result<Cost, SynthError> {
        self.ctx.check_weights(p)?;
        let g0 = self.ctx.game.initial;
        let best =
            self.frontier.best(g0, self.start_node(g0), p.entries()).expect("frontier is non-empty in the region");
        let x = &self.frontier.entries[best].vec;
        Ok(Cost::Finite(p.dot(x)))
    }

    /// Optimal per-scenario costs `l_j = C*(e_j)`.
    pub fn optimal_basis_costs(&self) -> Vec<Cost> {
        let ctx = &self.ctx;
        let g0 = ctx.game.initial;
        (0..ctx.n)
            .map(|j| {
                if ctx.dropped_scen & (1 << j) != 0 {
                    return Cost::Infinite;
                }
                let target = winning::mask_of(ctx.arena.num_states(), &ctx.scenario_sets[j]);
                min_max_distance(&ctx.arena, &ctx.winning, &target).swap_remove(g0)
            })
            .collect()
    }

    /// Optimal strategy for `p`, with basis costs filled in.
    pub fn synthesize(&self, p: &InfoVector) -> Result<Strategy, SynthError> {
        self.ctx.check_weights(p)?;
        let mut st = self.build_strategy(p.entries());
        st.basis_costs = self.eval_cost_basis(&st);
        Ok(st)
    }

    pub fn eval_cost_basis(&self, strategy: &Strategy) -> Vec<Cost> {
        worst_case_reach(&self.ctx.arena, strategy, self.ctx.game.initial, &self.ctx.scenario_sets)
    }

    /// An oracle sharing this synthesizer's region but none of its frontier.
    pub fn oracle(&self) -> Result<Oracle<'_>, SynthError> {
        Oracle::new(&self.ctx)
    }

    fn resolve(&self, key: Key, g: StateId, q: &[Rational]) -> Key {
        let ctx = &self.ctx;
        match key {
            Key::Fresh => {
                let visited = ctx.hit_targets[g];
                let s = self.start_node(g);
                if s == ctx.full_scen {
                    Key::Complete { visited }
                } else {
                    let entry = self.frontier.best(g, s, q).expect("frontier is non-empty in the region");
                    Key::Cost { visited, entry }
                }
            }
            other => other,
        }
    }

    fn advance(&self, visited: u64, next: StateId, entry: Option<EntryId>) -> Key {
        let ctx = &self.ctx;
        let v2 = visited | ctx.hit_targets[next];
        if v2 == ctx.full_targets {
            return Key::Fresh;
        }
        match entry {
            Some(e) if self.frontier.node_parts(self.frontier.entries[e].node).1 != ctx.full_scen => {
                Key::Cost { visited: v2, entry: e }
            }
            _ => Key::Complete { visited: v2 },
        }
    }

    fn act(&self, key: Key, g: StateId, sigma: usize) -> (usize, Key) {
        let ctx = &self.ctx;
        match key {
            Key::Fresh => unreachable!("resolved before acting"),
            Key::Cost { visited, entry } => {
                let (a, e2) = self.frontier.entries[entry].witness[sigma];
                let next = ctx.arena.step(g, sigma, a).expect("witness is a legal move").next;
                (a, self.advance(visited, next, Some(e2)))
            }
            Key::Complete { visited } if visited == ctx.full_targets => {
                let e = ctx.arena.edges(g, sigma).iter().find(|e| ctx.winning[e.next]).expect("region is closed");
                (e.output, Key::Fresh)
            }
            Key::Complete { visited } => {
                let t = (!visited).trailing_zeros() as usize;
                let ranks = &ctx.completion_ranks[t];
                let here = ranks[g].expect("region lies in every target attractor");
                let e = ctx
                    .arena
                    .edges(g, sigma)
                    .iter()
                    .find(|e| ranks[e.next].is_some_and(|r| r < here))
                    .expect("attractor rank decreases");
                (e.output, self.advance(visited, e.next, None))
            }
        }
    }

    fn build_strategy(&self, q: &[Rational]) -> Strategy {
        let ctx = &self.ctx;
        let ns = ctx.arena.num_states();
        let ni = ctx.arena.num_inputs();
        let mut ids: HashMap<Key, MemId> = HashMap::from([(Key::Fresh, 0)]);
        let mut keys = vec![Key::Fresh];
        let mut seen: HashMap<(MemId, StateId), ()> = HashMap::new();
        let mut queue: VecDeque<(MemId, StateId)> = VecDeque::new();
        for g in (0..ns).filter(|&g| ctx.winning[g]) {
            seen.insert((0, g), ());
            queue.push_back((0, g));
        }
        let mut b = strategy::StrategyBuilder::new(ns, ni);
        while let Some((m, g)) = queue.pop_front() {
            let key = self.resolve(keys[m], g, q);
            let mut row = Vec::with_capacity(ni);
            for sigma in 0..ni {
                let (a, k2) = self.act(key, g, sigma);
                let next = ctx.arena.step(g, sigma, a).expect("legal move").next;
                let m2 = *ids.entry(k2).or_insert_with(|| {
                    keys.push(k2);
                    keys.len() - 1
                });
                if seen.insert((m2, next), ()).is_none() {
                    queue.push_back((m2, next));
                }
                row.push((a, m2));
            }
            b.add_row(m, g, row);
        }
        b.finish(keys.len())
    }
}

/// States from which the agent can force visiting every guarantee set
/// infinitely often.
pub fn winning_region(game: &GameStructure, spec: &SpecTask) -> StateSet {
    let arena = game.arena();
    let ns = arena.num_states();
    let masks: Vec<Vec<bool>> = spec.guarantee_sets(game).iter().map(|s| winning::mask_of(ns, s)).collect();
    let w = winning_mask(&arena, &masks);
    (0..ns).filter(|&g| w[g]).collect()
}

/// Cost-optimal correct strategy for one information vector.
pub fn synth_optimal(game: &GameStructure, spec: &SpecTask, p: &InfoVector) -> Result<Strategy, SynthError> {
    Synthesizer::new(game, spec)?.synthesize(p)
}

/// `C(rho, p) = sum_j q_j * C(rho, e_j)`, with `0 * inf = 0`.
pub fn eval_cost(basis_costs: &[Cost], p: &InfoVector) -> Cost {
    basis_costs.iter().zip(p.entries()).fold(Cost::zero(), |acc, (c, q)| acc.plus(&c.scale(q)))
}

pub fn optimal_basis_costs(game: &GameStructure, spec: &SpecTask) -> Result<Vec<Cost>, SynthError> {
    Ok(Synthesizer::new(game, spec)?.optimal_basis_costs())
}

/// Reference value of `C*(p)` from the budget oracle.
pub fn oracle_optimal_cost(game: &GameStructure, spec: &SpecTask, p: &InfoVector) -> Result<Cost, SynthError> {
    let ctx = Context::new(game, spec)?;
    Oracle::new(&ctx)?.optimal_cost(p)
}
