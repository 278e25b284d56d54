//! Pareto frontier of worst-case per-scenario cost vectors on the product
//! of game states and visited-scenario subsets.
//!
//! Every inserted vector is kept in an append-only arena together with the
//! move that realises it (per input: output and successor entry). Entries are
//! only ever marked as dominated, never removed, so witnesses stay valid and
//! always point to strictly older entries. Following witnesses therefore
//! terminates at a node where every scenario has been visited.

use super::Context;
use crate::model::OutputId;
use crate::rational::Rational;

pub(crate) type EntryId = usize;

#[derive(Debug, Clone)]
pub(crate) struct Entry {
    pub vec: Vec<Rational>,
    pub node: usize,
    /// Per input: chosen output and successor entry. Empty at terminal nodes.
    pub witness: Vec<(OutputId, EntryId)>,
}

#[derive(Debug, Clone)]
pub(crate) struct Frontier {
    n: usize,
    live: Vec<Vec<EntryId>>,
    pub entries: Vec<Entry>,
}

type Option_ = (Vec<Rational>, Vec<(OutputId, EntryId)>);

fn leq(a: &[Rational], b: &[Rational]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Drops vectors weakly dominated by an earlier or strictly dominated by a
/// later one; keeps first occurrences.
fn pareto_min(mut items: Vec<Option_>) -> Vec<Option_> {
    let mut keep: Vec<Option_> = Vec::with_capacity(items.len());
    for item in items.drain(..) {
        if keep.iter().any(|k| leq(&k.0, &item.0)) {
            continue;
        }
        keep.retain(|k| !leq(&item.0, &k.0));
        keep.push(item);
    }
    keep
}

impl Frontier {
    pub(crate) fn node(&self, g: usize, s: u32) -> usize {
        (g << self.n) | s as usize
    }

    pub(crate) fn node_parts(&self, node: usize) -> (usize, u32) {
        (node >> self.n, (node & ((1 << self.n) - 1)) as u32)
    }

    pub(crate) fn live(&self, g: usize, s: u32) -> &[EntryId] {
        &self.live[self.node(g, s)]
    }

    pub(crate) fn build(ctx: &Context) -> Frontier {
        let n = ctx.n;
        let ns = ctx.arena.num_states();
        let full: u32 = ctx.full_scen;
        let mut f = Frontier { n, live: vec![Vec::new(); ns << n], entries: Vec::new() };
        for g in (0..ns).filter(|&g| ctx.winning[g]) {
            let node = f.node(g, full);
            f.entries.push(Entry { vec: vec![Rational::zero(); n], node, witness: Vec::new() });
            f.live[node].push(f.entries.len() - 1);
        }
        let mut order: Vec<(usize, u32)> = Vec::new();
        for s in 0..full {
            if s & ctx.dropped_scen != ctx.dropped_scen {
                continue;
            }
            for g in (0..ns).filter(|&g| ctx.winning[g] && ctx.hit_scen[g] & !s == 0) {
                order.push((g, s));
            }
        }
        order.sort_by_key(|&(g, s)| (std::cmp::Reverse(s.count_ones()), s, g));
        loop {
            let mut changed = false;
            for &(g, s) in &order {
                for cand in f.bellman(ctx, g, s) {
                    changed |= f.insert(f.node(g, s), cand);
                }
            }
            if !changed {
                return f;
            }
        }
    }

    fn bellman(&self, ctx: &Context, g: usize, s: u32) -> Vec<Option_> {
        let pending: Vec<bool> = (0..self.n).map(|j| s & (1 << j) == 0).collect();
        let mut combos: Option<Vec<Option_>> = None;
        for sigma in 0..ctx.arena.num_inputs() {
            let mut opts = Vec::new();
            for e in ctx.arena.edges(g, sigma) {
                if !ctx.winning[e.next] {
                    continue;
                }
                let succ = self.node(e.next, s | ctx.hit_scen[e.next]);
                for &id in &self.live[succ] {
                    let vec = self.entries[id]
                        .vec
                        .iter()
                        .zip(&pending)
                        .map(|(x, &p)| if p { x + &e.weight } else { x.clone() })
                        .collect();
                    opts.push((vec, vec![(e.output, id)]));
                }
            }
            let opts = pareto_min(opts);
            if opts.is_empty() {
                return Vec::new();
            }
            combos = Some(match combos {
                None => opts,
                Some(prev) => {
                    let mut next = Vec::with_capacity(prev.len() * opts.len());
                    for (pv, pw) in &prev {
                        for (ov, ow) in &opts {
                            let vec = pv.iter().zip(ov).map(|(a, b)| a.max(b).clone()).collect();
                            let mut w = pw.clone();
                            w.extend_from_slice(ow);
                            next.push((vec, w));
                        }
                    }
                    pareto_min(next)
                }
            });
        }
        combos.unwrap_or_default()
    }

    fn insert(&mut self, node: usize, (vec, witness): Option_) -> bool {
        if self.live[node].iter().any(|&id| leq(&self.entries[id].vec, &vec)) {
            return false;
        }
        let entries = &self.entries;
        self.live[node].retain(|&id| !leq(&vec, &entries[id].vec));
        self.entries.push(Entry { vec, node, witness });
        self.live[node].push(self.entries.len() - 1);
        true
    }

    /// Live entry minimizing `q . x`; ties go to the lexicographically
    /// smallest vector, then to the oldest entry.
    pub(crate) fn best(&self, g: usize, s: u32, q: &[Rational]) -> Option<EntryId> {
        self.live(g, s)
            .iter()
            .map(|&id| {
                let x = &self.entries[id].vec;
                let value: Rational = x.iter().zip(q).filter(|(_, q)| !q.is_zero()).map(|(x, q)| x * q).sum();
                (value, x, id)
            })
            .min()
            .map(|(_, _, id)| id)
    }
}
