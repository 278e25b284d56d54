use crate::model::{Arena, StateId};

/// Reverse edges: for each state, the `(state, input)` pairs with at least
/// one output leading to it (one entry per such output).
pub(crate) struct Preds {
    list: Vec<Vec<(StateId, usize)>>,
}

impl Preds {
    pub(crate) fn new(arena: &Arena) -> Self {
        let mut list = vec![Vec::new(); arena.num_states()];
        for g in 0..arena.num_states() {
            for s in 0..arena.num_inputs() {
                for e in arena.edges(g, s) {
                    list[e.next].push((g, s));
                }
            }
        }
        Preds { list }
    }
}

/// `{g in within : every input has an output leading into target}`.
pub(crate) fn cpre(arena: &Arena, within: &[bool], target: &[bool]) -> Vec<bool> {
    (0..arena.num_states())
        .map(|g| within[g] && (0..arena.num_inputs()).all(|s| arena.edges(g, s).iter().any(|e| target[e.next])))
        .collect()
}

/// Controllable attractor of `target` inside `within`, with ranks.
///
/// Rank 0 marks target states; a state of rank `r > 0` has, for every input,
/// an output whose successor has rank `< r`. States outside the attractor get
/// `None`.
pub(crate) fn attractor_ranks(arena: &Arena, preds: &Preds, within: &[bool], target: &[bool]) -> Vec<Option<usize>> {
    let ns = arena.num_states();
    let ni = arena.num_inputs();
    let mut rank = vec![None; ns];
    // hits[g * ni + s] = number of outputs of (g, s) already leading into the attractor
    let mut hits = vec![0usize; ns * ni];
    let mut covered = vec![0usize; ns];
    let mut layer: Vec<StateId> = (0..ns).filter(|&g| within[g] && target[g]).collect();
    for &g in &layer {
        rank[g] = Some(0);
    }
    let mut r = 0;
    while !layer.is_empty() {
        let mut next = Vec::new();
        for &g2 in &layer {
            for &(g, s) in &preds.list[g2] {
                if !within[g] || rank[g].is_some() {
                    continue;
                }
                let h = &mut hits[g * ni + s];
                *h += 1;
                if *h == 1 {
                    covered[g] += 1;
                    if covered[g] == ni {
                        next.push(g);
                    }
                }
            }
        }
        r += 1;
        next.sort_unstable();
        next.dedup();
        for &g in &next {
            rank[g] = Some(r);
        }
        layer = next;
    }
    rank
}

/// Greatest fixpoint: states from which the agent can force visiting every
/// target set infinitely often.
pub fn winning_mask(arena: &Arena, targets: &[Vec<bool>]) -> Vec<bool> {
    let ns = arena.num_states();
    let preds = Preds::new(arena);
    let mut z = vec![true; ns];
    if targets.is_empty() {
        return z;
    }
    loop {
        let mut next = z.clone();
        for t in targets {
            let stay = cpre(arena, &z, &z);
            let base: Vec<bool> = (0..ns).map(|g| t[g] && stay[g]).collect();
            let ranks = attractor_ranks(arena, &preds, &z, &base);
            for g in 0..ns {
                next[g] &= ranks[g].is_some();
            }
        }
        if next == z {
            return z;
        }
        z = next;
    }
}

pub(crate) fn mask_of(ns: usize, set: &crate::model::StateSet) -> Vec<bool> {
    let mut m = vec![false; ns];
    for &g in set {
        if g < ns {
            m[g] = true;
        }
    }
    m
}

/// Ranks towards `target` inside the (closed) region `within`.
pub fn ranks_within(arena: &Arena, within: &[bool], target: &[bool]) -> Vec<Option<usize>> {
    let preds = Preds::new(arena);
    let base: Vec<bool> = (0..arena.num_states()).map(|g| within[g] && target[g]).collect();
    attractor_ranks(arena, &preds, within, &base)
}
