use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::model::Arena;
use crate::rational::{Cost, Rational};

/// Min-max distance to `target` for every state, staying inside `within`:
/// the agent minimizes and the environment maximizes accumulated weight.
///
/// Dijkstra over the bipartite graph of states (environment picks an input)
/// and `(state, input)` choice nodes (agent picks an output). A state settles
/// once all of its inputs have settled; its value is the last, hence largest,
/// of those.
pub fn min_max_distance(arena: &Arena, within: &[bool], target: &[bool]) -> Vec<Cost> {
    let ns = arena.num_states();
    let ni = arena.num_inputs();
    let mut preds: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); ns];
    for g in 0..ns {
        if !within[g] {
            continue;
        }
        for s in 0..ni {
            for e in arena.edges(g, s) {
                if within[e.next] {
                    preds[e.next].push((g * ni + s, e.weight.clone()));
                }
            }
        }
    }
    let mut dist: Vec<Option<Rational>> = vec![None; ns];
    let mut choice_done = vec![false; ns * ni];
    let mut settled_inputs = vec![0usize; ns];
    let mut heap: BinaryHeap<Reverse<(Rational, u64, usize)>> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut ready: Vec<(usize, Rational)> =
        (0..ns).filter(|&g| within[g] && target[g]).map(|g| (g, Rational::zero())).collect();
    loop {
        for (g, d) in ready.drain(..) {
            if dist[g].is_some() {
                continue;
            }
            for (c, w) in &preds[g] {
                if !choice_done[*c] && !target[c / ni] {
                    heap.push(Reverse((&d + w, seq, *c)));
                    seq += 1;
                }
            }
            dist[g] = Some(d);
        }
        let Some(Reverse((d, _, c))) = heap.pop() else { break };
        if choice_done[c] {
            continue;
        }
        choice_done[c] = true;
        let g = c / ni;
        settled_inputs[g] += 1;
        if settled_inputs[g] == ni {
            ready.push((g, d));
        }
    }
    dist.into_iter().map(|d| d.map_or(Cost::Infinite, Cost::Finite)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::rat;
    use crate::synthesis::winning::mask_of;

    #[test]
    fn star_distances() {
        let (g, _) = fixtures::star();
        let tip = mask_of(7, g.label("tip_c").unwrap());
        let d = min_max_distance(&g.arena(), &[true; 7], &tip);
        assert_eq!(d[g.state_index("hub").unwrap()], Cost::Finite(rat(3, 1)));
        assert_eq!(d[g.state_index("b2").unwrap()], Cost::Finite(rat(5, 1)));
        assert_eq!(d[g.state_index("c3").unwrap()], Cost::zero());
    }

    #[test]
    fn environment_maximizes() {
        let (g, _) = fixtures::fork();
        let n = g.states.len();
        let a = mask_of(n, g.label("goal_a").unwrap());
        let d = min_max_distance(&g.arena(), &vec![true; n], &a);
        // right branch forces 3 (direct) or 1 + 1 via B
        assert_eq!(d[g.state_index("start").unwrap()], Cost::Finite(rat(2, 1)));
    }

    #[test]
    fn region_restriction_blocks_paths() {
        let (g, _) = fixtures::star();
        let tip = mask_of(7, g.label("tip_c").unwrap());
        let mut within = vec![true; 7];
        within[g.state_index("c2").unwrap()] = false;
        let d = min_max_distance(&g.arena(), &within, &tip);
        assert_eq!(d[g.state_index("hub").unwrap()], Cost::Infinite);
    }
}
