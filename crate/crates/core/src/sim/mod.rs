//! Closed-loop execution of strategies against an environment.
//!
//! Every executor runs the same loop: the adversary picks an input, the
//! active strategy answers, the monitor decides whether to reset or switch,
//! and the runtime-information stream advances. Runs are deterministic given
//! the stream and the adversary seed.

mod adversary;
mod metrics;
mod stream;

use std::collections::HashMap;
use std::sync::Arc;

pub use adversary::{parse_script, AdversaryModel};
pub use metrics::{metrics_summary, GuaranteeStats, MeanGuarantee, MeanMetrics, MetricsSummary, Round, TraceMetrics};
pub use stream::{bayes_update, BayesStream, InfoStream, StreamCursor, ZeroEvidence};

use crate::cert::PolytopeCert;
use crate::model::{Arena, GameStructure, InfoVector, InputId, OutputId, SpecTask, StateId};
use crate::rational::Rational;
use crate::switching::{select_from, strategy_winning_states, Guarantees, MonitorState, SwitchError};
use crate::synthesis::{Strategy, SynthError, Synthesizer};
use adversary::Adversary;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("initial state is losing for every strategy")]
    InitialLosing,
    #[error("strategy {} has no move at step {step}", strategy + 1)]
    NoMove { step: usize, strategy: usize },
    #[error("expected {expected} entries, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("zero total evidence for observation")]
    ZeroEvidence,
    #[error("stream: {0}")]
    Stream(String),
    #[error("adversary: {0}")]
    Adversary(String),
    #[error("input script has {got} entries, horizon needs {needed}")]
    ScriptTooShort { needed: usize, got: usize },
    #[error("resynthesis period must be at least 1")]
    Period,
    #[error("no strategies supplied")]
    NoStrategies,
    #[error("no traces to summarize")]
    NoTraces,
    #[error("cert has {cert} strategies but {given} were supplied")]
    CertMismatch { cert: usize, given: usize },
    #[error(transparent)]
    Switch(#[from] SwitchError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

/// Read-only game data shared by all runs.
#[derive(Debug, Clone)]
pub struct SimGame<'a> {
    pub game: &'a GameStructure,
    pub spec: &'a SpecTask,
    pub arena: Arena,
    pub guarantees: Guarantees,
    pub scenario_masks: Vec<Vec<bool>>,
    scenario_hits: Vec<u64>,
    /// States inside every declared assumption set.
    assumption_ok: Vec<bool>,
}

impl<'a> SimGame<'a> {
    pub fn new(game: &'a GameStructure, spec: &'a SpecTask) -> Result<Self, SimError> {
        let ns = game.states.len();
        let guarantees = Guarantees::from_spec(game, spec)?;
        let scenario_sets = spec.scenario_sets(game);
        if scenario_sets.len() > 64 {
            return Err(SimError::Dimension { expected: 64, got: scenario_sets.len() });
        }
        let scenario_masks: Vec<Vec<bool>> =
            scenario_sets.iter().map(|s| (0..ns).map(|g| s.contains(&g)).collect()).collect();
        let scenario_hits = (0..ns)
            .map(|g| (0..scenario_masks.len()).filter(|&j| scenario_masks[j][g]).fold(0, |m, j| m | 1 << j))
            .collect();
        let assumptions = spec.assumption_sets(game);
        let assumption_ok = (0..ns).map(|g| assumptions.iter().all(|a| a.contains(&g))).collect();
        Ok(SimGame { game, spec, arena: game.arena(), guarantees, scenario_masks, scenario_hits, assumption_ok })
    }

    pub fn num_scenarios(&self) -> usize {
        self.scenario_masks.len()
    }

    pub fn winning_sets(&self, strategies: &[Strategy]) -> Vec<Vec<bool>> {
        strategies.iter().map(|s| strategy_winning_states(&self.arena, &self.guarantees, s)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExecutorKind {
    Switching,
    Uninformed,
    Oracle,
}

impl ExecutorKind {
    pub fn name(self) -> &'static str {
        match self {
            ExecutorKind::Switching => "switching",
            ExecutorKind::Uninformed => "uninformed",
            ExecutorKind::Oracle => "oracle",
        }
    }

    pub fn parse(text: &str) -> Option<ExecutorKind> {
        match text {
            "switching" => Some(ExecutorKind::Switching),
            "uninformed" => Some(ExecutorKind::Uninformed),
            "oracle" => Some(ExecutorKind::Oracle),
            _ => None,
        }
    }
}

/// One game step as seen by the monitor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub step: usize,
    pub state: StateId,
    pub input: InputId,
    pub output: OutputId,
    pub next: StateId,
    pub weight: Rational,
    /// Monitor's visited set before the step.
    pub visited: u64,
    /// Strategy that chose `output`.
    pub active: usize,
    pub selected: Option<usize>,
    /// The active strategy changes after this step.
    pub switched: bool,
    pub prior_full: bool,
    /// `next` lies in the selected strategy's winning set.
    pub next_in_w: bool,
    /// The monitor reset its visited set at this step.
    pub reset: bool,
    /// An assumption was violated at or before `state`.
    pub excluded: bool,
    pub guarantees_hit: u64,
    pub scenarios_hit: u64,
    pub p: Arc<InfoVector>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunTrace {
    pub executor: ExecutorKind,
    /// Position within a batch of runs.
    pub run: usize,
    pub num_guarantees: usize,
    pub num_scenarios: usize,
    pub steps: Vec<StepRecord>,
}

impl RunTrace {
    pub fn switch_steps(&self) -> Vec<usize> {
        self.steps.iter().filter(|r| r.switched).map(|r| r.step).collect()
    }

    /// Steps whose source state lies in guarantee `j`.
    pub fn visit_times(&self, j: usize) -> Vec<usize> {
        self.steps.iter().filter(|r| r.guarantees_hit >> j & 1 == 1).map(|r| r.step).collect()
    }

    pub fn rounds(&self) -> Vec<Round> {
        metrics::rounds(self)
    }

    pub fn metrics(&self) -> TraceMetrics {
        metrics::trace_metrics(self)
    }

    /// CSV with one line per step; indices are 1-based.
    pub fn to_csv(&self, game: &GameStructure) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = [
            "step",
            "game_state",
            "input",
            "output",
            "next_state",
            "visited_bitmask",
            "active_index",
            "region_selected",
            "switched",
            "prior_full",
            "next_in_w",
            "weight",
            "cost_excluded",
        ]
        .map(String::from)
        .to_vec();
        header.extend((1..=self.num_scenarios).map(|j| format!("p{j}")));
        write_record(&mut w, &header);
        for r in &self.steps {
            let mut row = vec![
                r.step.to_string(),
                game.states[r.state].clone(),
                game.inputs[r.input].clone(),
                game.outputs[r.output].clone(),
                game.states[r.next].clone(),
                r.visited.to_string(),
                (r.active + 1).to_string(),
                r.selected.map(|i| (i + 1).to_string()).unwrap_or_default(),
                r.switched.to_string(),
                r.prior_full.to_string(),
                r.next_in_w.to_string(),
                r.weight.to_string(),
                r.excluded.to_string(),
            ];
            row.extend(r.p.entries().iter().map(ToString::to_string));
            write_record(&mut w, &row);
        }
        finish_csv(w)
    }
}

pub(crate) fn write_record(w: &mut csv::Writer<Vec<u8>>, row: &[String]) {
    w.write_record(row).expect("writing to memory");
}

pub(crate) fn finish_csv(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("writing to memory");
    String::from_utf8(bytes).expect("fields are UTF-8")
}

/// Supplies strategies and the switch target to the shared loop.
trait Controller {
    fn strategy(&self, i: usize) -> &Strategy;
    fn winning(&self) -> &[Vec<bool>];
    fn refresh(&mut self, step: usize, p: &InfoVector, changed: bool) -> Result<(), SimError>;
    fn select(&self, g: StateId) -> Option<usize>;
}

fn execute<C: Controller>(
    sim: &SimGame,
    ctrl: &mut C,
    kind: ExecutorKind,
    stream: &InfoStream,
    adversary: &AdversaryModel,
    horizon: usize,
) -> Result<RunTrace, SimError> {
    let n = sim.num_scenarios();
    if stream.dim() != n {
        return Err(SimError::Dimension { expected: n, got: stream.dim() });
    }
    let mut cursor = StreamCursor::new(stream)?;
    let mut adv = Adversary::new(adversary, sim, horizon)?;
    let mut g = sim.game.initial;
    let changed = cursor.take_changed();
    ctrl.refresh(0, cursor.current(), changed)?;
    let active = ctrl.select(g).or_else(|| ctrl.winning().iter().position(|w| w[g])).ok_or(SimError::InitialLosing)?;
    let gs = &sim.guarantees;
    let mut mon = MonitorState { visited: gs.full(), active };
    let mut memory = ctrl.strategy(active).initial_memory();
    let mut excluded = !sim.assumption_ok[g];
    let mut steps = Vec::with_capacity(horizon);
    for t in 0..horizon {
        if t > 0 {
            cursor.advance_to(t)?;
            let changed = cursor.take_changed();
            ctrl.refresh(t, cursor.current(), changed)?;
        }
        let p = Arc::clone(cursor.current());
        let sigma = adv.choose(sim, t, g, &p);
        let strategy = ctrl.strategy(mon.active);
        let (a, m2) = strategy.step(memory, g, sigma).ok_or(SimError::NoMove { step: t, strategy: mon.active })?;
        let edge = sim.arena.step(g, sigma, a).ok_or(SimError::NoMove { step: t, strategy: mon.active })?;
        let next = edge.next;
        let selected = ctrl.select(next);
        let prior_full = mon.visited == gs.full();
        let next_in_w = selected.is_some_and(|j| ctrl.winning()[j][next]);
        let after = crate::switching::monitor_step(mon, gs, ctrl.winning(), g, next, selected);
        let switched = after.active != mon.active;
        steps.push(StepRecord {
            step: t,
            state: g,
            input: sigma,
            output: a,
            next,
            weight: edge.weight.clone(),
            visited: mon.visited,
            active: mon.active,
            selected,
            switched,
            prior_full,
            next_in_w,
            reset: prior_full && next_in_w,
            excluded,
            guarantees_hit: gs.hits(g),
            scenarios_hit: sim.scenario_hits[g],
            p,
        });
        memory = if switched { ctrl.strategy(after.active).initial_memory() } else { m2 };
        mon = after;
        excluded |= !sim.assumption_ok[next];
        if cursor.observes_goals() {
            for (j, label) in sim.spec.scenarios.iter().enumerate() {
                if sim.scenario_masks[j][next] {
                    cursor.observe(&format!("at:{label}"))?;
                }
            }
        }
        g = next;
    }
    Ok(RunTrace { executor: kind, run: 0, num_guarantees: gs.len(), num_scenarios: n, steps })
}

struct Switching<'s> {
    strategies: &'s [Strategy],
    cert: &'s PolytopeCert,
    winning: Vec<Vec<bool>>,
    members: Vec<bool>,
}

impl Controller for Switching<'_> {
    fn strategy(&self, i: usize) -> &Strategy {
        &self.strategies[i]
    }
    fn winning(&self) -> &[Vec<bool>] {
        &self.winning
    }
    fn refresh(&mut self, _: usize, p: &InfoVector, changed: bool) -> Result<(), SimError> {
        if changed {
            self.members = self.cert.systems.iter().map(|s| s.contains(p)).collect();
        }
        Ok(())
    }
    fn select(&self, g: StateId) -> Option<usize> {
        select_from(&self.members, &self.winning, g)
    }
}

fn check_family(sim: &SimGame, strategies: &[Strategy], cert: Option<&PolytopeCert>) -> Result<(), SimError> {
    if strategies.is_empty() {
        return Err(SimError::NoStrategies);
    }
    if let Some(st) = strategies.iter().find(|s| s.num_states() != sim.arena.num_states()) {
        return Err(SimError::Dimension { expected: sim.arena.num_states(), got: st.num_states() });
    }
    match cert {
        Some(c) if c.len() != strategies.len() => {
            Err(SimError::CertMismatch { cert: c.len(), given: strategies.len() })
        }
        Some(c) if c.dim() != sim.num_scenarios() => {
            Err(SimError::Dimension { expected: sim.num_scenarios(), got: c.dim() })
        }
        _ => Ok(()),
    }
}

/// Switches among certified strategies using the cert's polytopes.
pub fn run_switching(
    sim: &SimGame,
    strategies: &[Strategy],
    cert: &PolytopeCert,
    stream: &InfoStream,
    adversary: &AdversaryModel,
    horizon: usize,
) -> Result<RunTrace, SimError> {
    check_family(sim, strategies, Some(cert))?;
    let mut ctrl = Switching { strategies, cert, winning: sim.winning_sets(strategies), members: Vec::new() };
    execute(sim, &mut ctrl, ExecutorKind::Switching, stream, adversary, horizon)
}

struct Uninformed<'s> {
    strategies: &'s [Strategy],
    winning: Vec<Vec<bool>>,
}

impl Controller for Uninformed<'_> {
    fn strategy(&self, i: usize) -> &Strategy {
        &self.strategies[i]
    }
    fn winning(&self) -> &[Vec<bool>] {
        &self.winning
    }
    fn refresh(&mut self, _: usize, _: &InfoVector, _: bool) -> Result<(), SimError> {
        Ok(())
    }
    fn select(&self, g: StateId) -> Option<usize> {
        let last = self.strategies.len() - 1;
        self.winning[last][g].then_some(last)
    }
}

/// Runs the last strategy of the family for the whole horizon.
pub fn run_uninformed(
    sim: &SimGame,
    strategies: &[Strategy],
    stream: &InfoStream,
    adversary: &AdversaryModel,
    horizon: usize,
) -> Result<RunTrace, SimError> {
    check_family(sim, strategies, None)?;
    let last = strategies.len() - 1;
    let mut winning = vec![vec![false; sim.arena.num_states()]; strategies.len()];
    winning[last] = strategy_winning_states(&sim.arena, &sim.guarantees, &strategies[last]);
    let mut ctrl = Uninformed { strategies, winning };
    execute(sim, &mut ctrl, ExecutorKind::Uninformed, stream, adversary, horizon)
}

struct Resynthesis<'s> {
    synth: &'s Synthesizer,
    guarantees: &'s Guarantees,
    period: usize,
    cache: HashMap<InfoVector, usize>,
    strategies: Vec<Strategy>,
    winning: Vec<Vec<bool>>,
    target: usize,
}

impl Controller for Resynthesis<'_> {
    fn strategy(&self, i: usize) -> &Strategy {
        &self.strategies[i]
    }
    fn winning(&self) -> &[Vec<bool>] {
        &self.winning
    }
    fn refresh(&mut self, step: usize, p: &InfoVector, changed: bool) -> Result<(), SimError> {
        if !changed && !step.is_multiple_of(self.period) {
            return Ok(());
        }
        self.target = match self.cache.get(p) {
            Some(&i) => i,
            None => {
                let mut st = self.synth.synthesize(p)?;
                let i = self.strategies.len();
                st.id = i;
                self.winning.push(strategy_winning_states(self.synth.arena(), self.guarantees, &st));
                self.strategies.push(st);
                self.cache.insert(p.clone(), i);
                i
            }
        };
        Ok(())
    }
    fn select(&self, _: StateId) -> Option<usize> {
        Some(self.target)
    }
}

/// Re-synthesizes an optimal strategy every `period` steps and whenever the
/// information changes, adopting it at the next legal switch point. Strategy
/// indices in the trace count distinct synthesized strategies.
pub fn run_resynthesis_oracle(
    sim: &SimGame,
    synth: &Synthesizer,
    stream: &InfoStream,
    adversary: &AdversaryModel,
    horizon: usize,
    period: usize,
) -> Result<RunTrace, SimError> {
    if period == 0 {
        return Err(SimError::Period);
    }
    let mut ctrl = Resynthesis {
        synth,
        guarantees: &sim.guarantees,
        period,
        cache: HashMap::new(),
        strategies: Vec::new(),
        winning: Vec::new(),
        target: 0,
    };
    execute(sim, &mut ctrl, ExecutorKind::Oracle, stream, adversary, horizon)
}
