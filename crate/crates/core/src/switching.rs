//! Runtime switching between certified strategies.
//!
//! The monitor tracks the guarantees visited since the last switch point and
//! the active strategy. A switch to strategy `j` happens only once every
//! guarantee has been visited and the successor state lies in `W_j`, the set
//! of states from which `j` alone enforces all guarantees.

use std::collections::VecDeque;

use crate::cert::PolytopeCert;
use crate::model::{Arena, GameStructure, InfoVector, SpecTask, StateId, StateSet};
use crate::synthesis::Strategy;

pub const MAX_GUARANTEES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SwitchError {
    #[error("the monitor needs at least one guarantee")]
    NoGuarantees,
    #[error("{0} guarantees exceed the supported maximum of {MAX_GUARANTEES}")]
    TooManyGuarantees(usize),
    #[error("no strategies to switch between")]
    NoStrategies,
    #[error("cert has {cert} strategies but {given} were supplied")]
    CertMismatch { cert: usize, given: usize },
}

/// Monitor state `(V, i)`: bit `j` of `visited` is guarantee `j`; `active`
/// is a zero-based strategy index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MonitorState {
    pub visited: u64,
    pub active: usize,
}

impl MonitorState {
    pub fn is_full(&self, m: usize) -> bool {
        self.visited == full_mask(m)
    }
}

pub fn full_mask(m: usize) -> u64 {
    if m >= 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

/// All guarantees visited and strategy 0 active, so the first legal step may
/// already switch.
pub fn monitor_init(m: usize) -> Result<MonitorState, SwitchError> {
    match m {
        0 => Err(SwitchError::NoGuarantees),
        m if m > MAX_GUARANTEES => Err(SwitchError::TooManyGuarantees(m)),
        m => Ok(MonitorState { visited: full_mask(m), active: 0 }),
    }
}

/// Per-state bitmask of the guarantee sets containing the state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guarantees {
    m: usize,
    hits: Vec<u64>,
}

impl Guarantees {
    pub fn new(num_states: usize, sets: &[StateSet]) -> Result<Self, SwitchError> {
        monitor_init(sets.len())?;
        let mut hits = vec![0u64; num_states];
        for (j, set) in sets.iter().enumerate() {
            for &g in set {
                hits[g] |= 1 << j;
            }
        }
        Ok(Guarantees { m: sets.len(), hits })
    }

    pub fn from_spec(game: &GameStructure, spec: &SpecTask) -> Result<Self, SwitchError> {
        Self::new(game.states.len(), &spec.guarantee_sets(game))
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn full(&self) -> u64 {
        full_mask(self.m)
    }

    pub fn hits(&self, g: StateId) -> u64 {
        self.hits[g]
    }

    pub fn contains(&self, j: usize, g: StateId) -> bool {
        self.hits[g] >> j & 1 == 1
    }
}

/// One monitor transition for the game step `g -> next`. Visits are counted
/// at the source state `g`.
pub fn monitor_step(
    state: MonitorState,
    guarantees: &Guarantees,
    winning: &[Vec<bool>],
    g: StateId,
    next: StateId,
    selected: Option<usize>,
) -> MonitorState {
    if state.visited == guarantees.full() {
        if let Some(j) = selected {
            if winning[j][next] {
                return MonitorState { visited: 0, active: j };
            }
        }
    }
    MonitorState { visited: state.visited | guarantees.hits(g), active: state.active }
}

/// Least `i` with `p` in `S_i` and `g` in `W_i`, otherwise the last strategy
/// if `g` is in its winning set.
pub fn select_strategy(cert: &PolytopeCert, winning: &[Vec<bool>], g: StateId, p: &InfoVector) -> Option<usize> {
    let members: Vec<bool> = (0..cert.len()).map(|i| cert.systems[i].contains(p)).collect();
    select_from(&members, winning, g)
}

/// [`select_strategy`] with the polytope memberships of `p` precomputed.
pub fn select_from(members: &[bool], winning: &[Vec<bool>], g: StateId) -> Option<usize> {
    let n = winning.len();
    (0..n).find(|&i| members.get(i).copied().unwrap_or(false) && winning[i][g]).or_else(|| {
        let last = n.checked_sub(1)?;
        winning[last][g].then_some(last)
    })
}

/// States `g` from which every play of the strategy started at
/// `(initial memory, g)` visits each guarantee set infinitely often.
///
/// A play fails when it reaches an undefined move or a cycle avoiding some
/// guarantee set, so `g` is winning iff no such product node is reachable.
pub fn strategy_winning_states(arena: &Arena, guarantees: &Guarantees, strategy: &Strategy) -> Vec<bool> {
    let ns = arena.num_states();
    let ni = arena.num_inputs();
    let total = strategy.memory_count().max(1) * ns;
    let node = |m: usize, g: usize| m * ns + g;
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); total];
    let mut bad = vec![false; total];
    for (v, out) in succ.iter_mut().enumerate() {
        let (m, g) = (v / ns, v % ns);
        for sigma in 0..ni {
            let next = strategy
                .step(m, g, sigma)
                .and_then(|(a, m2)| arena.step(g, sigma, a).map(|e| node(m2, e.next)))
                .filter(|&w| w < total);
            match next {
                Some(w) => out.push(w),
                None => {
                    bad[v] = true;
                    break;
                }
            }
        }
    }
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); total];
    for (v, out) in succ.iter().enumerate() {
        if !bad[v] {
            for &w in out {
                pred[w].push(v);
            }
        }
    }
    // nodes that can stay away from guarantee j forever: prune sinks of the
    // subgraph without F_j until only nodes with an infinite path remain
    for j in 0..guarantees.len() {
        let inside = |v: usize| !bad[v] && !guarantees.contains(j, v % ns);
        let mut degree: Vec<usize> =
            (0..total).map(|v| if inside(v) { succ[v].iter().filter(|&&w| inside(w)).count() } else { 0 }).collect();
        let mut alive: Vec<bool> = (0..total).map(inside).collect();
        let mut queue: VecDeque<usize> = (0..total).filter(|&v| alive[v] && degree[v] == 0).collect();
        while let Some(v) = queue.pop_front() {
            if !alive[v] {
                continue;
            }
            alive[v] = false;
            for &u in &pred[v] {
                if alive[u] {
                    degree[u] -= 1;
                    if degree[u] == 0 {
                        queue.push_back(u);
                    }
                }
            }
        }
        for (v, a) in alive.into_iter().enumerate() {
            if a {
                bad[v] = true;
            }
        }
    }
    // anything that can reach a bad node loses
    let mut doomed = bad.clone();
    let mut queue: VecDeque<usize> = (0..total).filter(|&v| bad[v]).collect();
    while let Some(v) = queue.pop_front() {
        for &u in &pred[v] {
            if !doomed[u] {
                doomed[u] = true;
                queue.push_back(u);
            }
        }
    }
    (0..ns).map(|g| !doomed[node(strategy.initial_memory(), g)]).collect()
}

/// Liveness bound `max_i |memory(rho_i)| * |states| * 2^m * N`, saturating.
pub fn liveness_bound(strategies: &[Strategy], num_states: usize, m: usize) -> u128 {
    let mem = strategies.iter().map(Strategy::memory_count).max().unwrap_or(1) as u128;
    let pow = if m >= 127 { u128::MAX } else { 1u128 << m };
    mem.saturating_mul(num_states as u128).saturating_mul(pow).saturating_mul(strategies.len() as u128)
}

/// Monitor with the winning sets of a fixed strategy family.
#[derive(Debug, Clone)]
pub struct SwitchMonitor<'a> {
    pub guarantees: Guarantees,
    pub winning: Vec<Vec<bool>>,
    pub cert: &'a PolytopeCert,
    pub state: MonitorState,
}

impl<'a> SwitchMonitor<'a> {
    pub fn new(
        game: &GameStructure,
        spec: &SpecTask,
        strategies: &[Strategy],
        cert: &'a PolytopeCert,
    ) -> Result<Self, SwitchError> {
        if strategies.is_empty() {
            return Err(SwitchError::NoStrategies);
        }
        if cert.len() != strategies.len() {
            return Err(SwitchError::CertMismatch { cert: cert.len(), given: strategies.len() });
        }
        let guarantees = Guarantees::from_spec(game, spec)?;
        let arena = game.arena();
        let winning = strategies.iter().map(|s| strategy_winning_states(&arena, &guarantees, s)).collect();
        let state = monitor_init(guarantees.len())?;
        Ok(SwitchMonitor { guarantees, winning, cert, state })
    }

    pub fn select(&self, g: StateId, p: &InfoVector) -> Option<usize> {
        select_strategy(self.cert, &self.winning, g, p)
    }

    /// Pure transition; the caller decides whether to keep the result.
    pub fn step(&self, g: StateId, next: StateId, selected: Option<usize>) -> MonitorState {
        monitor_step(self.state, &self.guarantees, &self.winning, g, next, selected)
    }

    pub fn winning_set(&self, i: usize) -> StateSet {
        self.winning[i].iter().enumerate().filter(|(_, &w)| w).map(|(g, _)| g).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cert::{certify, CertifyOptions};
    use crate::fixtures::{self, GameBuilder};
    use crate::rational::{rat, Rational};
    use crate::synthesis::{StrategyBuilder, Synthesizer};
    use proptest::prelude::*;

    fn star_guarantees() -> (GameStructure, Guarantees) {
        let (g, s) = fixtures::star();
        let gs = Guarantees::from_spec(&g, &s).unwrap();
        (g, gs)
    }

    #[test]
    fn init_is_full_with_first_strategy() {
        assert_eq!(monitor_init(3).unwrap(), MonitorState { visited: 0b111, active: 0 });
        assert_eq!(monitor_init(1).unwrap(), MonitorState { visited: 1, active: 0 });
        assert_eq!(monitor_init(0), Err(SwitchError::NoGuarantees));
        assert_eq!(monitor_init(65), Err(SwitchError::TooManyGuarantees(65)));
    }

    #[test]
    fn step_cases() {
        let (_, gs) = star_guarantees();
        let all = vec![vec![true; 7]; 3];
        // full set and a legal target: reset and switch
        let s = monitor_step(MonitorState { visited: 0b111, active: 0 }, &gs, &all, 0, 6, Some(2));
        assert_eq!(s, MonitorState { visited: 0, active: 2 });
        // accumulation at the source state a1
        let s = monitor_step(MonitorState { visited: 0, active: 1 }, &gs, &all, 1, 0, None);
        assert_eq!(s, MonitorState { visited: 0b001, active: 1 });
        // no goal, not full
        let s = monitor_step(MonitorState { visited: 0b011, active: 0 }, &gs, &all, 0, 4, Some(2));
        assert_eq!(s, MonitorState { visited: 0b011, active: 0 });
        // full but successor outside the target's winning set
        let mut w = all.clone();
        w[2][6] = false;
        let s = monitor_step(MonitorState { visited: 0b111, active: 0 }, &gs, &w, 5, 6, Some(2));
        assert_eq!(s, MonitorState { visited: 0b111, active: 0 });
    }

    #[test]
    fn star_tours_win_everywhere() {
        let (g, s) = fixtures::star();
        let syn = Synthesizer::new(&g, &s).unwrap();
        let gs = Guarantees::from_spec(&g, &s).unwrap();
        for j in 0..3 {
            let st = syn.synthesize(&InfoVector::basis(3, j)).unwrap();
            assert_eq!(strategy_winning_states(syn.arena(), &gs, &st), vec![true; 7]);
        }
    }

    #[test]
    fn idle_strategy_wins_nowhere() {
        let (g, _) = star_guarantees();
        let (game, spec) = fixtures::star();
        let gs = Guarantees::from_spec(&game, &spec).unwrap();
        let mut b = StrategyBuilder::new(7, 1);
        b.add_row(0, 0, vec![(0, 0)]);
        let st = b.finish(1);
        assert_eq!(strategy_winning_states(&g.arena(), &gs, &st), vec![false; 7]);
    }

    #[test]
    fn trap_move_excludes_its_state() {
        let one = Rational::one;
        let game = GameBuilder::new("trap")
            .initial("x")
            .edge("x", "tick", "go", "y", one())
            .edge("y", "tick", "go", "x", one())
            .edge("x", "tick", "fall", "t", one())
            .edge("t", "tick", "stay", "t", one())
            .label("gx", &["x"])
            .label("gy", &["y"])
            .build();
        let spec = fixtures::tour_spec(&["gx", "gy"]);
        let gs = Guarantees::from_spec(&game, &spec).unwrap();
        // from y the strategy alternates; at x with fresh memory it falls
        let mut b = StrategyBuilder::new(3, 1);
        b.add_row(0, 1, vec![(0, 1)]);
        b.add_row(1, 0, vec![(0, 0)]);
        b.add_row(0, 0, vec![(1, 0)]);
        b.add_row(0, 2, vec![(2, 0)]);
        let st = b.finish(2);
        assert_eq!(strategy_winning_states(&game.arena(), &gs, &st), vec![false, true, false]);
    }

    #[test]
    fn selection_prefers_least_polytope_with_guard() {
        let (g, s) = fixtures::star();
        let syn = Synthesizer::new(&g, &s).unwrap();
        let cands = (0..3).map(|j| InfoVector::basis(3, j)).collect();
        let c = certify(&syn, cands, &CertifyOptions { epsilon: Some(rat(2, 1)), ..Default::default() }).unwrap();
        let mon = SwitchMonitor::new(&g, &s, &c.strategies, &c.cert).unwrap();
        let p = InfoVector::new(vec![rat(3, 5), rat(3, 10), rat(1, 10)]).unwrap();
        assert_eq!(mon.select(0, &p), Some(0));
        // uncovered point falls back to the last strategy
        let c0 = certify(&syn, (0..3).map(|j| InfoVector::basis(3, j)).collect(), &CertifyOptions::default()).unwrap();
        let half = InfoVector::new(vec![rat(1, 2), rat(1, 2), rat(0, 1)]).unwrap();
        let w = vec![vec![true; 7]; 3];
        assert_eq!(select_strategy(&c0.cert, &w, 0, &half), Some(2));
        // member of S_2 only, but the state is outside W_2
        let mut w = vec![vec![true; 7]; 3];
        w[1][0] = false;
        assert_eq!(select_from(&[false, true, false], &w, 0), Some(2));
        w[2][0] = false;
        assert_eq!(select_from(&[false, true, false], &w, 0), None);
    }

    #[test]
    fn bound_matches_formula() {
        let (g, s) = fixtures::star();
        let syn = Synthesizer::new(&g, &s).unwrap();
        let st = syn.synthesize(&InfoVector::basis(3, 0)).unwrap();
        let d = liveness_bound(&[st.clone(), st.clone()], 7, 3);
        assert_eq!(d, st.memory_count() as u128 * 7 * 8 * 2);
    }

    proptest! {
        #[test]
        fn step_is_pure_and_accumulates(
            visited in 0u64..8, active in 0usize..3, g in 0usize..7, next in 0usize..7,
            sel in prop::option::of(0usize..3),
        ) {
            let (_, gs) = star_guarantees();
            let w = vec![vec![true; 7], vec![false; 7], vec![true; 7]];
            let s = MonitorState { visited, active };
            let a = monitor_step(s, &gs, &w, g, next, sel);
            prop_assert_eq!(a, monitor_step(s, &gs, &w, g, next, sel));
            if a.active != active {
                prop_assert!(s.is_full(3) && w[a.active][next]);
            }
            if s.is_full(3) && sel.is_some_and(|j| w[j][next]) {
                prop_assert_eq!(a, MonitorState { visited: 0, active: sel.unwrap() });
            } else {
                prop_assert_eq!(a, MonitorState { visited: visited | gs.hits(g), active });
            }
        }
    }
}
