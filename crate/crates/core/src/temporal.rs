//! Time discretization of a contact plan into service windows and
//! construction of the static snapshot graph valid in each window.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{ContactPlan, LinkKind};
use crate::types::{NodeId, NodeKind, NodeSpec};

/// Half-open interval `[start, end)` in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub index: usize,
    pub start: f64,
    pub end: f64,
}

impl TimeWindow {
    pub fn new(index: usize, start: f64, end: f64) -> Self {
        Self { index, start, end }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizationConfig {
    /// Minimum service duration (seconds).
    pub min_duration_s: f64,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        Self { min_duration_s: 60.0 }
    }
}

/// Every contact start/end plus the horizon endpoints, ascending and
/// de-duplicated.
pub fn sort_timestamps(plan: &ContactPlan) -> Vec<f64> {
    let mut ts: Vec<f64> = Vec::with_capacity(plan.len() * 2 + 2);
    ts.push(plan.horizon.start);
    ts.push(plan.horizon.end);
    for c in plan.contacts() {
        ts.push(c.start);
        ts.push(c.end);
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// Merges consecutive boundary intervals into windows of at least
/// `min_duration_s`, scanning left to right. A trailing remainder shorter
/// than the threshold is folded into the last emitted window.
pub fn merge_windows(boundaries: &[f64], cfg: &DiscretizationConfig) -> Result<Vec<TimeWindow>> {
    if boundaries.len() < 2 {
        return Err(Error::Validation(
            "window merging needs at least two boundaries".into(),
        ));
    }
    if boundaries.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Validation("boundaries must be strictly increasing".into()));
    }
    if !(cfg.min_duration_s >= 0.0) {
        return Err(Error::Config("minimum service duration must be >= 0".into()));
    }

    let mut windows: Vec<TimeWindow> = Vec::new();
    let mut current = boundaries[0];
    for &b in &boundaries[1..] {
        if b - current >= cfg.min_duration_s {
            windows.push(TimeWindow::new(windows.len(), current, b));
            current = b;
        }
    }
    let last = *boundaries.last().unwrap();
    if current < last {
        match windows.last_mut() {
            Some(w) => w.end = last,
            None => windows.push(TimeWindow::new(0, current, last)),
        }
    }
    Ok(windows)
}

/// Timestamp sorting followed by window merging.
pub fn discretize(plan: &ContactPlan, cfg: &DiscretizationConfig) -> Result<Vec<TimeWindow>> {
    let ts = sort_timestamps(plan);
    if ts.len() < 2 {
        return Ok(Vec::new());
    }
    merge_windows(&ts, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotLink {
    pub a: NodeId,
    pub b: NodeId,
    pub rate_mbps: f64,
    pub residual_mbps: f64,
    pub delay_ms: f64,
    pub kind: LinkKind,
}

impl SnapshotLink {
    pub fn other(&self, n: NodeId) -> NodeId {
        if n == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// Static graph for one time window. Nodes are kept sorted by id; the dense
/// position of a node in that order is its *slot*.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotGraph {
    pub window: TimeWindow,
    nodes: Vec<NodeSpec>,
    index: HashMap<NodeId, usize>,
    links: Vec<SnapshotLink>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl SnapshotGraph {
    /// Assembles a snapshot from explicit nodes and links. Every link endpoint
    /// must be present and each node pair may appear at most once.
    pub fn from_parts(
        window: TimeWindow,
        mut nodes: Vec<NodeSpec>,
        links: Vec<SnapshotLink>,
    ) -> Result<Self> {
        nodes.sort_by_key(|n| n.id);
        if nodes.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(Error::Validation("duplicate node id in snapshot".into()));
        }
        let index: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut seen = HashMap::new();
        for (li, l) in links.iter().enumerate() {
            if l.a == l.b {
                return Err(Error::Validation(format!("self-loop on node {}", l.a)));
            }
            if !(l.residual_mbps >= 0.0 && l.residual_mbps <= l.rate_mbps) {
                return Err(Error::Validation(format!(
                    "link {}-{} residual outside [0, rate]",
                    l.a, l.b
                )));
            }
            let key = (l.a.min(l.b), l.a.max(l.b));
            if seen.insert(key, li).is_some() {
                return Err(Error::Validation(format!("duplicate link {}-{}", key.0, key.1)));
            }
            let ia = *index
                .get(&l.a)
                .ok_or_else(|| Error::Validation(format!("link endpoint {} not in snapshot", l.a)))?;
            let ib = *index
                .get(&l.b)
                .ok_or_else(|| Error::Validation(format!("link endpoint {} not in snapshot", l.b)))?;
            adjacency[ia].push((ib, li));
            adjacency[ib].push((ia, li));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        Ok(Self {
            window,
            nodes,
            index,
            links,
            adjacency,
        })
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeSpec> {
        self.index.get(&id).map(|&i| &self.nodes[i])
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut NodeSpec> {
        self.index.get(&id).map(|&i| &mut self.nodes[i])
    }

    pub fn find_by_name(&self, name: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn slot(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn node_at(&self, slot: usize) -> &NodeSpec {
        &self.nodes[slot]
    }

    pub fn links(&self) -> &[SnapshotLink] {
        &self.links
    }

    pub fn link(&self, idx: usize) -> &SnapshotLink {
        &self.links[idx]
    }

    pub(crate) fn link_mut(&mut self, idx: usize) -> &mut SnapshotLink {
        &mut self.links[idx]
    }

    /// `(neighbor slot, link index)` pairs of the node at `slot`.
    pub fn neighbors(&self, slot: usize) -> &[(usize, usize)] {
        &self.adjacency[slot]
    }

    pub fn link_between(&self, a: NodeId, b: NodeId) -> Option<usize> {
        let sa = self.slot(a)?;
        let sb = self.slot(b)?;
        self.adjacency[sa]
            .iter()
            .find(|&&(n, _)| n == sb)
            .map(|&(_, l)| l)
    }

    /// Multiplies every link's capacity and residual by `factor`.
    pub fn scale_capacity(&mut self, factor: f64) {
        for l in &mut self.links {
            l.rate_mbps *= factor;
            l.residual_mbps *= factor;
        }
    }
}

/// Snapshot for `window`: the links whose contact covers the whole window,
/// their endpoints, and every terminal.
pub fn build_snapshot(plan: &ContactPlan, window: TimeWindow, nodes: &[NodeSpec]) -> Result<SnapshotGraph> {
    let by_id: HashMap<NodeId, &NodeSpec> = nodes.iter().map(|n| (n.id, n)).collect();
    let mut present: Vec<NodeId> = nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Terminal)
        .map(|n| n.id)
        .collect();
    let mut links = Vec::new();
    for c in plan.contacts() {
        if c.covers(window.start, window.end) {
            for id in [c.node_a, c.node_b] {
                if !by_id.contains_key(&id) {
                    return Err(Error::Validation(format!("contact references unknown node {id}")));
                }
                present.push(id);
            }
            links.push(SnapshotLink {
                a: c.node_a,
                b: c.node_b,
                rate_mbps: c.rate_mbps,
                residual_mbps: c.rate_mbps,
                delay_ms: c.delay_ms,
                kind: c.kind,
            });
        }
    }
    present.sort_unstable();
    present.dedup();
    let members = present.into_iter().map(|id| by_id[&id].clone()).collect();
    SnapshotGraph::from_parts(window, members, links)
}

pub fn build_snapshots(
    plan: &ContactPlan,
    windows: &[TimeWindow],
    nodes: &[NodeSpec],
) -> Result<Vec<SnapshotGraph>> {
    windows
        .par_iter()
        .map(|w| build_snapshot(plan, *w, nodes))
        .collect()
}

/// All maximal intervals during which every consecutive pair of `path` has an
/// active contact.
pub fn stable_intervals(plan: &ContactPlan, path: &[NodeId]) -> Result<Vec<(f64, f64)>> {
    if path.len() < 2 {
        return Err(Error::Validation("path needs at least two nodes".into()));
    }
    let mut acc: Option<Vec<(f64, f64)>> = None;
    for hop in path.windows(2) {
        let key = (hop[0].min(hop[1]), hop[0].max(hop[1]));
        let mut ivs: Vec<(f64, f64)> = plan
            .contacts()
            .iter()
            .filter(|c| c.pair() == key)
            .map(|c| (c.start, c.end))
            .collect();
        if ivs.is_empty() {
            return Err(Error::Validation(format!(
                "no contact between {} and {}",
                hop[0], hop[1]
            )));
        }
        ivs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let ivs = union(ivs);
        acc = Some(match acc {
            None => ivs,
            Some(prev) => intersect(&prev, &ivs),
        });
    }
    Ok(acc.unwrap_or_default())
}

/// The earliest interval during which the whole path is simultaneously up.
pub fn stable_interval(plan: &ContactPlan, path: &[NodeId]) -> Result<Option<(f64, f64)>> {
    Ok(stable_intervals(plan, path)?.into_iter().next())
}

fn union(sorted: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
    for (s, e) in sorted {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

fn intersect(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        let s = a[i].0.max(b[j].0);
        let e = a[i].1.min(b[j].1);
        if s < e {
            out.push((s, e));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Contact, Horizon};

    fn minutes(m: f64) -> f64 {
        m * 60.0
    }

    fn plan(spans: &[(u32, u32, f64, f64)], horizon: (f64, f64)) -> ContactPlan {
        let contacts = spans
            .iter()
            .map(|&(a, b, s, e)| Contact::new(NodeId(a), NodeId(b), s, e, 100.0, 5.0, LinkKind::Isl).unwrap())
            .collect();
        ContactPlan::new(Horizon::new(horizon.0, horizon.1), contacts).unwrap()
    }

    #[test]
    fn single_contact_boundaries() {
        let p = plan(&[(0, 1, 3.0, 7.0)], (0.0, 10.0));
        assert_eq!(sort_timestamps(&p), vec![0.0, 3.0, 7.0, 10.0]);
        let e = ContactPlan::empty(Horizon::new(0.0, 10.0));
        assert_eq!(sort_timestamps(&e), vec![0.0, 10.0]);
    }

    #[test]
    fn duplicate_timestamps_collapse() {
        let p = plan(
            &[(0, 1, 0.0, 5.0), (1, 2, 0.0, 5.0), (2, 3, 5.0, 9.0)],
            (0.0, 9.0),
        );
        let ts = sort_timestamps(&p);
        assert_eq!(ts, vec![0.0, 5.0, 9.0]);
    }

    #[test]
    fn merging_examples() {
        let b: Vec<f64> = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0].map(minutes).to_vec();
        let zero = merge_windows(&b, &DiscretizationConfig { min_duration_s: 0.0 }).unwrap();
        assert_eq!(zero.len(), 5);
        assert!(zero.iter().all(|w| w.duration() == minutes(5.0)));

        let six = merge_windows(
            &b,
            &DiscretizationConfig {
                min_duration_s: minutes(6.0),
            },
        )
        .unwrap();
        let spans: Vec<_> = six.iter().map(|w| (w.start, w.end)).collect();
        assert_eq!(spans, vec![(0.0, minutes(10.0)), (minutes(10.0), minutes(25.0))]);
        assert_eq!(six[1].index, 1);

        let one = merge_windows(&[0.0, 100.0], &DiscretizationConfig { min_duration_s: 60.0 }).unwrap();
        assert_eq!(one, vec![TimeWindow::new(0, 0.0, 100.0)]);

        let huge = merge_windows(&b, &DiscretizationConfig { min_duration_s: 1e9 }).unwrap();
        assert_eq!(huge, vec![TimeWindow::new(0, 0.0, minutes(25.0))]);
    }

    #[test]
    fn merging_rejects_bad_boundaries() {
        let cfg = DiscretizationConfig::default();
        assert!(merge_windows(&[1.0], &cfg).is_err());
        assert!(merge_windows(&[0.0, 0.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn snapshot_contains_only_covering_contacts() {
        let p = plan(&[(0, 1, 0.0, 10.0), (1, 2, 4.0, 10.0)], (0.0, 10.0));
        let nodes: Vec<_> = (0..3).map(|i| NodeSpec::satellite(NodeId(i), 1)).collect();
        let s = build_snapshot(&p, TimeWindow::new(0, 2.0, 6.0), &nodes).unwrap();
        assert_eq!(s.links().len(), 1);
        assert_eq!(s.nodes().len(), 2);
        let outside = build_snapshot(&p, TimeWindow::new(0, 20.0, 30.0), &nodes).unwrap();
        assert!(outside.links().is_empty());
        let l = &s.links()[0];
        assert_eq!(l.residual_mbps, l.rate_mbps);
    }

    #[test]
    fn stable_interval_edge_cases() {
        let p = plan(
            &[(0, 1, 0.0, 4.0), (1, 2, 5.0, 9.0), (0, 1, 6.0, 8.0)],
            (0.0, 10.0),
        );
        assert_eq!(
            stable_interval(&p, &[NodeId(1), NodeId(2)]).unwrap(),
            Some((5.0, 9.0))
        );
        assert_eq!(
            stable_intervals(&p, &[NodeId(0), NodeId(1), NodeId(2)]).unwrap(),
            vec![(6.0, 8.0)]
        );
        let disjoint = plan(&[(0, 1, 0.0, 4.0), (1, 2, 5.0, 9.0)], (0.0, 10.0));
        assert_eq!(
            stable_interval(&disjoint, &[NodeId(0), NodeId(1), NodeId(2)]).unwrap(),
            None
        );
        assert!(stable_interval(&disjoint, &[NodeId(0), NodeId(2)]).is_err());
    }
}
