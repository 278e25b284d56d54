//! Independent optimal-cost oracle.
//!
//! For a threshold `T` the oracle decides, for every per-scenario budget
//! vector `r` with `q . r <= T`, whether the agent can force each tracked
//! scenario goal to be reached before its budget runs out. The optimum is the
//! smallest `q . r` over winning budgets at the start; `T` doubles from the
//! lower bound `q . l` until some budget wins. Only scenarios with positive
//! weight are tracked, and budgets are integers after scaling all weights by
//! the lcm of their denominators.

use num_integer::Integer;
use num_traits::ToPrimitive;

use super::{reach::min_max_distance, winning::mask_of, Context, SynthError};
use crate::model::InfoVector;
use crate::rational::{Cost, Rational};

/// Upper bound on budget-table cells (bits) per query.
pub const CELL_LIMIT: usize = 400_000_000;

pub struct Oracle<'a> {
    ctx: &'a Context,
    scale: i64,
    /// `weights[g][input]` = `(next, scaled weight)` per legal output.
    weights: Vec<Vec<Vec<(usize, i64)>>>,
    /// Scaled min-max distance from the start to each scenario goal.
    lower: Vec<Option<i64>>,
}

struct Bits(Vec<u64>);

impl Bits {
    fn new(len: usize) -> Bits {
        Bits(vec![0; len.div_ceil(64)])
    }
    fn get(&self, i: usize) -> bool {
        self.0[i >> 6] >> (i & 63) & 1 == 1
    }
    fn set(&mut self, i: usize) {
        self.0[i >> 6] |= 1 << (i & 63);
    }
}

impl<'a> Oracle<'a> {
    pub(crate) fn new(ctx: &'a Context) -> Result<Self, SynthError> {
        let arena = &ctx.arena;
        let mut lcm = num_bigint::BigInt::from(1);
        for g in 0..arena.num_states() {
            for s in 0..arena.num_inputs() {
                for e in arena.edges(g, s) {
                    lcm = lcm.lcm(&e.weight.denom());
                }
            }
        }
        let scale = lcm.to_i64().ok_or(SynthError::SizeGuard)?;
        let scale_r = Rational::from_int(scale);
        let mut weights = Vec::with_capacity(arena.num_states());
        for g in 0..arena.num_states() {
            let mut per_input = Vec::new();
            for s in 0..arena.num_inputs() {
                let mut list = Vec::new();
                for e in arena.edges(g, s) {
                    let w = (&e.weight * &scale_r).floor_i64().ok_or(SynthError::SizeGuard)?;
                    list.push((e.next, w));
                }
                per_input.push(list);
            }
            weights.push(per_input);
        }
        let lower = ctx
            .scenario_sets
            .iter()
            .map(|set| {
                let target = mask_of(arena.num_states(), set);
                match &min_max_distance(arena, &ctx.winning, &target)[ctx.game.initial] {
                    Cost::Finite(d) => (d * &scale_r).floor_i64(),
                    Cost::Infinite => None,
                }
            })
            .collect();
        Ok(Oracle { ctx, scale, weights, lower })
    }

    /// Optimal `sum_j q_j * (worst-case cost to reach G_j)` over strategies
    /// that keep the play inside the joint winning region.
    pub fn optimal_cost(&mut self, p: &InfoVector) -> Result<Cost, SynthError> {
        let ctx = self.ctx;
        if p.dim() != ctx.n {
            return Err(SynthError::Dimension { expected: ctx.n, got: p.dim() });
        }
        let tracked: Vec<usize> = (0..ctx.n).filter(|&j| p.get(j).is_positive()).collect();
        if tracked.iter().any(|&j| ctx.dropped_scen & (1 << j) != 0) {
            return Ok(Cost::Infinite);
        }
        let g0 = ctx.game.initial;
        if !ctx.winning[g0] {
            return Ok(Cost::Infinite);
        }
        let d = tracked.len();
        let s0 = self.hits(&tracked, g0);
        if s0 == (1u32 << d) - 1 {
            return Ok(Cost::zero());
        }
        let q: Vec<Rational> = tracked.iter().map(|&j| p.get(j).clone()).collect();
        let mut lower = Rational::zero();
        for (k, &j) in tracked.iter().enumerate() {
            match self.lower[j] {
                Some(l) => lower += &q[k] * &Rational::from_int(l),
                None => return Ok(Cost::Infinite),
            }
        }
        let w_max = self.weights.iter().flatten().flatten().map(|&(_, w)| w).max().unwrap_or(0);
        // visiting the goals one after another never costs more than this
        let cap = Rational::from_int((d as i64 + 1) * (ctx.arena.num_states() as i64) * w_max.max(1));
        let mut threshold = lower.max(Rational::one());
        loop {
            if let Some(best) = self.solve(&tracked, &q, s0, &threshold)? {
                return Ok(Cost::Finite(best / Rational::from_int(self.scale)));
            }
            if threshold > cap {
                return Ok(Cost::Infinite);
            }
            threshold = &threshold * &Rational::from_int(2);
        }
    }

    fn hits(&self, tracked: &[usize], g: usize) -> u32 {
        let mut s = 0;
        for (k, &j) in tracked.iter().enumerate() {
            if self.ctx.hit_scen[g] & (1 << j) != 0 {
                s |= 1 << k;
            }
        }
        s
    }

    /// Smallest `q . r` over budgets `r` in the region that win at the start.
    fn solve(
        &self,
        tracked: &[usize],
        q: &[Rational],
        s0: u32,
        threshold: &Rational,
    ) -> Result<Option<Rational>, SynthError> {
        let ctx = self.ctx;
        let d = tracked.len();
        let ns = ctx.arena.num_states();
        let ni = ctx.arena.num_inputs();
        let g0 = ctx.game.initial;
        let bounds: Vec<usize> = q
            .iter()
            .map(|qj| (threshold / qj).floor_i64().and_then(|b| usize::try_from(b).ok()).ok_or(SynthError::SizeGuard))
            .collect::<Result<_, _>>()?;
        let mut radix = vec![1usize; d];
        let mut cells = 1usize;
        for k in 0..d {
            radix[k] = cells;
            cells = cells.checked_mul(bounds[k] + 1).ok_or(SynthError::SizeGuard)?;
        }
        let total = cells
            .checked_mul(1 << d)
            .and_then(|c| c.checked_mul(ns))
            .filter(|&c| c <= CELL_LIMIT)
            .ok_or(SynthError::SizeGuard)?;
        let region = region_points(&bounds, q, threshold);
        let hits: Vec<u32> = (0..ns).map(|g| self.hits(tracked, g)).collect();
        let full = (1u32 << d) - 1;
        let mut win = Bits::new(total);
        let cell = |idx: usize, s: u32, g: usize| (idx << d | s as usize) * ns + g;
        let mut best: Option<Rational> = None;
        for r in &region {
            let idx: usize = r.iter().zip(&radix).map(|(&x, &m)| x as usize * m).sum();
            let canonical = |s: u32| (0..d).all(|k| s & (1 << k) == 0 || r[k] == 0);
            loop {
                let mut changed = false;
                for s in (0..=full).filter(|&s| canonical(s)) {
                    for g in 0..ns {
                        if !ctx.winning[g] || win.get(cell(idx, s, g)) {
                            continue;
                        }
                        let ok = s == full
                            || (0..ni).all(|sigma| {
                                self.weights[g][sigma].iter().any(|&(next, w)| {
                                    if !ctx.winning[next] {
                                        return false;
                                    }
                                    let s2 = s | hits[next];
                                    let mut idx2 = 0;
                                    for k in 0..d {
                                        let pending = s & (1 << k) == 0;
                                        if pending && r[k] < w {
                                            return false;
                                        }
                                        if pending && s2 & (1 << k) == 0 {
                                            idx2 += (r[k] - w) as usize * radix[k];
                                        }
                                    }
                                    win.get(cell(idx2, s2, next))
                                })
                            });
                        if ok {
                            win.set(cell(idx, s, g));
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if canonical(s0) && win.get(cell(idx, s0, g0)) {
                let v: Rational = r.iter().zip(q).map(|(&x, qk)| qk * &Rational::from_int(x)).sum();
                if best.as_ref().is_none_or(|b| &v < b) {
                    best = Some(v);
                }
            }
        }
        Ok(best)
    }
}

/// Budget vectors with `q . r <= threshold`, in lexicographic order of the
/// reversed coordinates, so every componentwise-smaller vector comes first.
fn region_points(bounds: &[usize], q: &[Rational], threshold: &Rational) -> Vec<Vec<i64>> {
    fn rec(k: usize, bounds: &[usize], q: &[Rational], left: &Rational, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if k == 0 {
            out.push(cur.clone());
            return;
        }
        let j = k - 1;
        for x in 0..=bounds[j] as i64 {
            let used = &q[j] * &Rational::from_int(x);
            if &used > left {
                break;
            }
            cur[j] = x;
            rec(j, bounds, q, &(left - &used), cur, out);
        }
        cur[j] = 0;
    }
    let mut out = Vec::new();
    let mut cur = vec![0; bounds.len()];
    rec(bounds.len(), bounds, q, threshold, &mut cur, &mut out);
    out
}
