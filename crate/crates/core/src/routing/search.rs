//! Minimum-cost simple-path search over a stage graph.
//!
//! A reverse Dijkstra pass computes, for every state it settles, the exact
//! cost-to-go of the relaxed problem (walks may revisit a physical node in a
//! different stage). That bound is consistent, so a forward best-first search
//! over partial paths that rejects physical-node repeats returns the optimal
//! simple path. Ties on cost are broken by the lexicographic order of the
//! `(node id, stage)` sequence.
//!
//! Proving that no simple path exists can mean enumerating every simple
//! prefix, so large searches also prune prefixes whose last state cannot
//! reach the goal while avoiding the nodes already used.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use super::stage::{PackedCost, StageArc, StageGraph, StateId};

/// Upper bound on partial paths held by one forward search.
const LABEL_BUDGET: usize = 4_000_000;

/// Searches that grow past this many partial paths start discarding those
/// that can no longer reach the goal without revisiting a node.
const PRUNE_AFTER: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatePath {
    pub states: Vec<StateId>,
    pub arcs: Vec<StageArc>,
    pub cost: PackedCost,
}

impl StatePath {
    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }
}

struct Label {
    state: StateId,
    parent: u32,
    arc: Option<StageArc>,
    g: PackedCost,
}

const NO_PARENT: u32 = u32::MAX;

fn seq_key(graph: &StageGraph<'_>, state: StateId) -> u64 {
    let (_, stage) = StageGraph::split(state);
    ((graph.node_id(state).0 as u64) << 2) | stage as u64
}

/// Cost-to-go lower bounds. Settled states carry exact relaxed values; the
/// rest are bounded below by the cost at which the start state settled.
struct Heuristic {
    exact: Vec<PackedCost>,
    settled: Vec<bool>,
    floor: PackedCost,
}

impl Heuristic {
    fn get(&self, s: StateId) -> PackedCost {
        if self.settled[s as usize] {
            self.exact[s as usize]
        } else {
            self.floor
        }
    }
}

fn reverse_pass(graph: &StageGraph<'_>, start: StateId, accept: &[StateId]) -> Option<Heuristic> {
    let n = graph.state_count();
    let mut dist = vec![PackedCost::MAX; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &a in accept {
        dist[a as usize] = 0;
        heap.push(Reverse((0, a)));
    }
    let mut buf = Vec::new();
    while let Some(Reverse((d, s))) = heap.pop() {
        if settled[s as usize] {
            continue;
        }
        settled[s as usize] = true;
        if s == start {
            return Some(Heuristic {
                exact: dist,
                settled,
                floor: d,
            });
        }
        graph.arcs_into(s, &mut buf);
        for arc in &buf {
            let nd = d + graph.arc_cost(arc);
            let slot = &mut dist[arc.from as usize];
            if nd < *slot {
                *slot = nd;
                heap.push(Reverse((nd, arc.from)));
            }
        }
    }
    None
}

/// Sorted physical slots visited by the partial path ending at `idx`.
fn visited(labels: &[Label], mut idx: u32) -> Vec<u32> {
    let mut out = Vec::new();
    while idx != NO_PARENT {
        let l = &labels[idx as usize];
        out.push(StageGraph::split(l.state).0 as u32);
        idx = l.parent;
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Visited flags cleared in O(1) by bumping a generation counter.
struct Marks {
    stamp: Vec<u32>,
    current: u32,
}

impl Marks {
    fn new(n: usize) -> Self {
        Self {
            stamp: vec![0; n],
            current: 0,
        }
    }

    fn clear(&mut self) {
        self.current += 1;
    }

    fn get(&self, s: StateId) -> bool {
        self.stamp[s as usize] == self.current
    }

    fn set(&mut self, s: StateId) {
        self.stamp[s as usize] = self.current;
    }
}

fn is_subset(small: &[u32], big: &[u32]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

/// Whether some accepting state is reachable from `from` without entering a
/// physical node in `used` (other than the one `from` sits on).
fn can_finish(
    graph: &StageGraph<'_>,
    from: StateId,
    used: &[u32],
    accept: &[StateId],
    marks: &mut Marks,
) -> bool {
    let (here, _) = StageGraph::split(from);
    marks.clear();
    marks.set(from);
    let mut stack = vec![from];
    let mut buf = Vec::new();
    while let Some(s) = stack.pop() {
        if accept.contains(&s) {
            return true;
        }
        graph.arcs_from(s, &mut buf);
        for arc in &buf {
            let (slot, _) = StageGraph::split(arc.to);
            if marks.get(arc.to) || (slot != here && used.binary_search(&(slot as u32)).is_ok()) {
                continue;
            }
            marks.set(arc.to);
            stack.push(arc.to);
        }
    }
    false
}

/// Cheapest simple path from `start` to any of `accept`, or `None` when no
/// such path exists. Physical nodes may appear in several consecutive states
/// (codec transitions) but never twice along the route.
pub fn shortest_delay_path(graph: &StageGraph<'_>, start: StateId, accept: &[StateId]) -> Option<StatePath> {
    if accept.contains(&start) {
        return Some(StatePath {
            states: vec![start],
            arcs: Vec::new(),
            cost: 0,
        });
    }
    let h = reverse_pass(graph, start, accept)?;

    let mut labels = vec![Label {
        state: start,
        parent: NO_PARENT,
        arc: None,
        g: 0,
    }];
    let mut heap: BinaryHeap<Reverse<(PackedCost, Vec<u64>, u32)>> = BinaryHeap::new();
    heap.push(Reverse((h.get(start), vec![seq_key(graph, start)], 0)));
    let mut buf = Vec::new();
    let mut marks = Marks::new(graph.state_count());
    // node sets of the prefixes already expanded at each state; prefixes
    // ending at one state pop in (cost, sequence) order
    let mut expanded: HashMap<StateId, Vec<Vec<u32>>> = HashMap::new();

    while let Some(Reverse((_, seq, idx))) = heap.pop() {
        let (state, g) = {
            let l = &labels[idx as usize];
            (l.state, l.g)
        };
        if accept.contains(&state) {
            return Some(reconstruct(&labels, idx));
        }
        let seen = visited(&labels, idx);
        let done = expanded.entry(state).or_default();
        if done.iter().any(|d| is_subset(d, &seen)) {
            continue;
        }
        if labels.len() > PRUNE_AFTER && !can_finish(graph, state, &seen, accept, &mut marks) {
            continue;
        }
        done.push(seen.clone());
        let (slot, _) = StageGraph::split(state);
        graph.arcs_from(state, &mut buf);
        for arc in &buf {
            let (to_slot, _) = StageGraph::split(arc.to);
            if to_slot != slot && seen.binary_search(&(to_slot as u32)).is_ok() {
                continue;
            }
            if labels.len() >= LABEL_BUDGET {
                log::warn!("route search exceeded {LABEL_BUDGET} partial paths; giving up");
                return None;
            }
            let ng = g + graph.arc_cost(arc);
            let f = ng.saturating_add(h.get(arc.to));
            let child = labels.len() as u32;
            labels.push(Label {
                state: arc.to,
                parent: idx,
                arc: Some(*arc),
                g: ng,
            });
            let mut child_seq = Vec::with_capacity(seq.len() + 1);
            child_seq.extend_from_slice(&seq);
            child_seq.push(seq_key(graph, arc.to));
            heap.push(Reverse((f, child_seq, child)));
        }
    }
    None
}

fn reconstruct(labels: &[Label], mut idx: u32) -> StatePath {
    let cost = labels[idx as usize].g;
    let mut states = Vec::new();
    let mut arcs = Vec::new();
    while idx != NO_PARENT {
        let l = &labels[idx as usize];
        states.push(l.state);
        if let Some(a) = l.arc {
            arcs.push(a);
        }
        idx = l.parent;
    }
    states.reverse();
    arcs.reverse();
    StatePath { states, arcs, cost }
}
