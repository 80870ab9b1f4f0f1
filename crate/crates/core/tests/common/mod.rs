//! Brute-force reference implementations shared by integration tests.
//!
//! Nothing here calls into the router or the deployment solvers; only plain
//! data types and snapshot accessors are used.

#![allow(dead_code)]

use gsc_core::fixtures::SnapshotBuilder;
use gsc_core::routing::{Application, CaseType, CompressionProfile, Method};
use gsc_core::types::{ModelRole, NodeId, NodeKind};
use gsc_core::SnapshotGraph;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const RAW_PRE: u64 = 0;
const FRESH: u64 = 1;
const COMPRESSED: u64 = 2;
const RAW_POST: u64 = 3;

/// Best plan found by exhaustive enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct OraclePlan {
    pub delay_ms: f64,
    pub occupied_mbps: f64,
    pub nodes: Vec<NodeId>,
    /// Link index and rate for every hop.
    pub hops: Vec<(usize, f64)>,
    pub encoder: Option<NodeId>,
    pub decoder: Option<NodeId>,
    /// `(node id << 2 | stage)` for every visited state; a codec step
    /// repeats the node with its new stage.
    key: Vec<u64>,
}

impl OraclePlan {
    fn better_than(&self, o: &OraclePlan) -> bool {
        (self.delay_ms, self.occupied_mbps)
            .partial_cmp(&(o.delay_ms, o.occupied_mbps))
            .unwrap()
            .then_with(|| self.key.cmp(&o.key))
            .is_lt()
    }
}

/// Every simple path from `src` to `dst` that never passes through a
/// terminal, as `(nodes, links)`.
pub fn simple_paths(snap: &SnapshotGraph, src: NodeId, dst: NodeId) -> Vec<(Vec<NodeId>, Vec<usize>)> {
    let mut out = Vec::new();
    let mut nodes = vec![src];
    let mut links = Vec::new();
    fn dfs(
        snap: &SnapshotGraph,
        dst: NodeId,
        nodes: &mut Vec<NodeId>,
        links: &mut Vec<usize>,
        out: &mut Vec<(Vec<NodeId>, Vec<usize>)>,
    ) {
        let here = *nodes.last().unwrap();
        if here == dst {
            out.push((nodes.clone(), links.clone()));
            return;
        }
        if nodes.len() > 1 && snap.node(here).unwrap().kind == NodeKind::Terminal {
            return;
        }
        for (li, l) in snap.links().iter().enumerate() {
            let next = if l.a == here {
                l.b
            } else if l.b == here {
                l.a
            } else {
                continue;
            };
            if nodes.contains(&next) {
                continue;
            }
            nodes.push(next);
            links.push(li);
            dfs(snap, dst, nodes, links, out);
            nodes.pop();
            links.pop();
        }
    }
    dfs(snap, dst, &mut nodes, &mut links, &mut out);
    out
}

/// Path indices of the encoder and decoder; `None` means terminal-side or
/// absent.
type Placement = (Option<usize>, Option<usize>);

/// Exhaustive routing. `residual[i]` overrides the residual of link `i`;
/// `None` ignores capacity altogether.
pub fn brute_force_route(
    snap: &SnapshotGraph,
    app: &Application,
    profile: &CompressionProfile,
    method: Method,
    residual: Option<&[f64]>,
) -> Option<OraclePlan> {
    let ratio = app.ratio.unwrap_or(profile.ratios[app.kb]);
    let raw = app.rate_mbps;
    let comp = raw * ratio;
    let enc_lat = profile.encode_latency_ms[app.kb];
    let dec_lat = profile.decode_latency_ms[app.kb];
    let is_ai = |n: NodeId| snap.node(n).unwrap().kind == NodeKind::AiSat;
    let can = |n: NodeId, role: ModelRole| is_ai(n) && snap.node(n).unwrap().caps(role)[app.kb] >= 1;

    let mut best: Option<OraclePlan> = None;
    for (nodes, links) in simple_paths(snap, app.src, app.dst) {
        let k = links.len();
        // candidate placements and the stage of the first state
        let relays = 1..k;
        let (placements, start_stage): (Vec<Placement>, u64) = match (method, app.case) {
            (Method::Traditional, _) => (vec![(None, None)], RAW_PRE),
            (Method::Gsc, CaseType::BothEnds) => (vec![(None, None)], COMPRESSED),
            (Method::Gsc, CaseType::SenderEncodes) => (
                relays
                    .filter(|&j| can(nodes[j], ModelRole::Decoder))
                    .map(|j| (None, Some(j)))
                    .collect(),
                COMPRESSED,
            ),
            (Method::Gsc, CaseType::ReceiverDecodes) => (
                relays
                    .filter(|&i| can(nodes[i], ModelRole::Encoder))
                    .map(|i| (Some(i), None))
                    .collect(),
                RAW_PRE,
            ),
            (Method::Gsc, CaseType::SatelliteCodec) => (
                relays
                    .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
                    .filter(|&(i, j)| can(nodes[i], ModelRole::Encoder) && can(nodes[j], ModelRole::Decoder))
                    .map(|(i, j)| (Some(i), Some(j)))
                    .collect(),
                RAW_PRE,
            ),
        };

        for (enc, dec) in placements {
            let mut stage = start_stage;
            let mut key = Vec::new();
            let mut hops = Vec::new();
            let mut ok = true;
            for (idx, &n) in nodes.iter().enumerate() {
                key.push(((n.0 as u64) << 2) | stage);
                if enc == Some(idx) {
                    stage = FRESH;
                    key.push(((n.0 as u64) << 2) | stage);
                }
                if dec == Some(idx) {
                    stage = RAW_POST;
                    key.push(((n.0 as u64) << 2) | stage);
                }
                if idx == k {
                    break;
                }
                let rate = if stage == FRESH || stage == COMPRESSED {
                    comp
                } else {
                    raw
                };
                let li = links[idx];
                if let Some(res) = residual {
                    if res[li] + 1e-9 < rate {
                        ok = false;
                        break;
                    }
                }
                hops.push((li, rate));
                if stage == FRESH {
                    stage = COMPRESSED;
                }
            }
            if !ok {
                continue;
            }
            let link_delay: f64 = links.iter().map(|&l| snap.link(l).delay_ms).sum();
            let delay = link_delay + enc.map_or(0.0, |_| enc_lat) + dec.map_or(0.0, |_| dec_lat);
            let occupied: f64 = hops.iter().map(|h| h.1).sum();
            let terminal_enc =
                method == Method::Gsc && matches!(app.case, CaseType::BothEnds | CaseType::SenderEncodes);
            let terminal_dec =
                method == Method::Gsc && matches!(app.case, CaseType::BothEnds | CaseType::ReceiverDecodes);
            let cand = OraclePlan {
                delay_ms: delay,
                occupied_mbps: occupied,
                nodes: nodes.clone(),
                hops,
                encoder: enc.map(|i| nodes[i]).or(terminal_enc.then_some(app.src)),
                decoder: dec.map(|j| nodes[j]).or(terminal_dec.then_some(app.dst)),
                key,
            };
            if best.as_ref().is_none_or(|b| cand.better_than(b)) {
                best = Some(cand);
            }
        }
    }
    best
}

pub fn residuals(snap: &SnapshotGraph) -> Vec<f64> {
    snap.links().iter().map(|l| l.residual_mbps).collect()
}

pub fn grid_profile(kb_count: usize) -> CompressionProfile {
    CompressionProfile::uniform(kb_count, 0.5)
}

pub const RATIOS: [f64; 4] = [0.125, 0.25, 0.5, 1.0];

/// Random network of at most `max_nodes` nodes with integer delays and
/// rates, so that sums are exact and ties are common. Nodes `0..t` are
/// terminals, the rest satellites, some of them AI-capable.
pub fn random_snapshot(rng: &mut ChaCha8Rng, max_nodes: usize, kb_count: usize) -> SnapshotGraph {
    let n = rng.gen_range(3..=max_nodes);
    let terminals = rng.gen_range(2..=3.min(n - 1));
    let mut b = SnapshotBuilder::new(kb_count);
    for id in 0..n as u32 {
        if (id as usize) < terminals {
            b = b.terminal(id, &format!("T{id}"));
        } else if rng.gen_bool(0.5) {
            let enc: Vec<usize> = (0..kb_count).filter(|_| rng.gen_bool(0.6)).collect();
            let dec: Vec<usize> = (0..kb_count).filter(|_| rng.gen_bool(0.6)).collect();
            b = b.ai(id, &format!("S{id}"), &enc, &dec, 8);
        } else {
            b = b.satellite(id, &format!("S{id}"));
        }
    }
    let density = rng.gen_range(0.3..0.8);
    let mut links = Vec::new();
    for a in 0..n as u32 {
        for c in a + 1..n as u32 {
            if rng.gen_bool(density) {
                links.push((a, c));
            }
        }
    }
    for (a, c) in links {
        let rate = rng.gen_range(2..=12) as f64 * 5.0;
        let delay = rng.gen_range(1..=6) as f64;
        b = b.link(a, c, rate, delay);
    }
    let mut snap = b.build();
    // some links start partly used
    let used: Vec<f64> = snap
        .links()
        .iter()
        .map(|l| {
            if rng.gen_bool(0.3) {
                (rng.gen_range(0..=4) as f64 * 10.0).min(l.rate_mbps)
            } else {
                0.0
            }
        })
        .collect();
    let mut adjusted = Vec::new();
    for (l, u) in snap.links().iter().zip(used) {
        let mut l = l.clone();
        l.residual_mbps = l.rate_mbps - u;
        adjusted.push(l);
    }
    snap = SnapshotGraph::from_parts(snap.window, snap.nodes().to_vec(), adjusted).unwrap();
    snap
}

pub fn random_app(rng: &mut ChaCha8Rng, id: u32, snap: &SnapshotGraph, kb_count: usize) -> Application {
    let terminals: Vec<NodeId> = snap
        .nodes()
        .iter()
        .filter(|n| n.kind == NodeKind::Terminal)
        .map(|n| n.id)
        .collect();
    let s = rng.gen_range(0..terminals.len());
    let mut d = rng.gen_range(0..terminals.len() - 1);
    if d >= s {
        d += 1;
    }
    Application {
        id,
        case: CaseType::ALL[rng.gen_range(0..4)],
        src: terminals[s],
        dst: terminals[d],
        rate_mbps: rng.gen_range(1..=8) as f64 * 5.0,
        kb: rng.gen_range(0..kb_count),
        ratio: Some(RATIOS[rng.gen_range(0..RATIOS.len())]),
    }
}

/// Reachability relaying only through satellites.
pub fn connected(snap: &SnapshotGraph, src: NodeId, dst: NodeId) -> bool {
    !simple_paths(snap, src, dst).is_empty()
}

/// One `(node, kb, role)` decision.
pub type Triple = (NodeId, usize, ModelRole);

/// Objective of a deployment computed with the brute-force router:
/// apps in order, each admitted against a private residual table, and a
/// penalty of `rate × penalty_hops` for apps that cannot meet their bound.
pub fn oracle_objective(
    snap: &SnapshotGraph,
    apps: &[Application],
    profile: &CompressionProfile,
    bound_ms: f64,
    penalty_hops: f64,
    triples: &[Triple],
) -> f64 {
    let mut nodes = snap.nodes().to_vec();
    for &(n, kb, role) in triples {
        let node = nodes.iter_mut().find(|x| x.id == n).unwrap();
        match role {
            ModelRole::Encoder => node.encoder_caps[kb] += 1,
            ModelRole::Decoder => node.decoder_caps[kb] += 1,
        }
    }
    let with_caps = SnapshotGraph::from_parts(snap.window, nodes, snap.links().to_vec()).unwrap();
    let mut residual = residuals(&with_caps);
    let mut total = 0.0;
    for app in apps {
        match brute_force_route(&with_caps, app, profile, Method::Gsc, Some(&residual)) {
            Some(p) if p.delay_ms <= bound_ms + 1e-9 => {
                for &(l, r) in &p.hops {
                    residual[l] -= r;
                }
                total += p.occupied_mbps;
            }
            _ => total += app.rate_mbps * penalty_hops,
        }
    }
    total
}

/// Minimum of [`oracle_objective`] over every subset of
/// `candidates × kbs × roles` that fits each candidate's free slots.
pub fn oracle_best_objective(
    snap: &SnapshotGraph,
    candidates: &[NodeId],
    apps: &[Application],
    profile: &CompressionProfile,
    bound_ms: f64,
    penalty_hops: f64,
) -> f64 {
    let kb_count = profile.ratios.len();
    let mut all: Vec<Triple> = Vec::new();
    for &c in candidates {
        for kb in 0..kb_count {
            for role in [ModelRole::Encoder, ModelRole::Decoder] {
                all.push((c, kb, role));
            }
        }
    }
    assert!(all.len() <= 20, "oracle instance too large");
    let free = |n: NodeId| {
        let spec = snap.node(n).unwrap();
        spec.compute_capacity - spec.used_slots()
    };
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << all.len()) {
        let chosen: Vec<Triple> = all
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, t)| *t)
            .collect();
        if candidates
            .iter()
            .any(|&c| chosen.iter().filter(|t| t.0 == c).count() as u32 > free(c))
        {
            continue;
        }
        best = best.min(oracle_objective(
            snap,
            apps,
            profile,
            bound_ms,
            penalty_hops,
            &chosen,
        ));
    }
    best
}

/// A small deployment instance: AI satellites with empty capability vectors
/// as candidates, a handful of apps competing for scarce links.
pub struct DeploymentInstance {
    pub snapshot: SnapshotGraph,
    pub candidates: Vec<NodeId>,
    pub apps: Vec<Application>,
    pub profile: CompressionProfile,
    pub bound_ms: f64,
}

pub fn random_deployment_instance(rng: &mut ChaCha8Rng) -> DeploymentInstance {
    let kb_count = rng.gen_range(1..=2);
    let n_candidates = if kb_count == 1 {
        rng.gen_range(2..=6)
    } else {
        rng.gen_range(2..=3)
    };
    let n_sats = n_candidates + rng.gen_range(0..=2usize);
    let terminals = rng.gen_range(2..=3u32);
    let mut b = SnapshotBuilder::new(kb_count);
    for t in 0..terminals {
        b = b.terminal(t, &format!("T{t}"));
    }
    // candidates are interleaved with plain relays at random ids
    let mut sat_ids: Vec<u32> = (0..n_sats as u32).map(|s| 10 + s).collect();
    for i in (1..sat_ids.len()).rev() {
        sat_ids.swap(i, rng.gen_range(0..=i));
    }
    let mut candidates = Vec::new();
    for (i, &id) in sat_ids.iter().enumerate() {
        if i < n_candidates {
            b = b.ai(id, &format!("A{id}"), &[], &[], rng.gen_range(1..=2));
            candidates.push(NodeId(id));
        } else {
            b = b.satellite(id, &format!("S{id}"));
        }
    }
    candidates.sort();
    let rate = |rng: &mut ChaCha8Rng| rng.gen_range(3..=10) as f64 * 10.0;
    let mut pairs = std::collections::BTreeSet::new();
    // backbone chain keeps the satellites connected
    for w in sat_ids.windows(2) {
        pairs.insert((w[0].min(w[1]), w[0].max(w[1])));
    }
    for i in 0..sat_ids.len() {
        for j in i + 1..sat_ids.len() {
            if rng.gen_bool(0.3) {
                pairs.insert((sat_ids[i].min(sat_ids[j]), sat_ids[i].max(sat_ids[j])));
            }
        }
    }
    for t in 0..terminals {
        let uplinks = rng.gen_range(1..=2);
        for _ in 0..uplinks {
            let s = sat_ids[rng.gen_range(0..sat_ids.len())];
            pairs.insert((t, s));
        }
    }
    for (a, c) in pairs {
        let r = rate(rng);
        b = b.link(a, c, r, rng.gen_range(1..=5) as f64);
    }
    let snapshot = b.build();
    let n_apps = rng.gen_range(2..=4);
    let apps = (0..n_apps)
        .map(|i| {
            let mut a = random_app(rng, i, &snapshot, kb_count);
            if a.case == CaseType::BothEnds && rng.gen_bool(0.7) {
                a.case = CaseType::ALL[rng.gen_range(1..4)];
            }
            a.rate_mbps = rng.gen_range(2..=8) as f64 * 5.0;
            a
        })
        .collect();
    let bound_ms = if rng.gen_bool(0.25) {
        rng.gen_range(6..=15) as f64
    } else {
        1000.0
    };
    DeploymentInstance {
        snapshot,
        candidates,
        apps,
        profile: CompressionProfile::uniform(kb_count, 0.5),
        bound_ms,
    }
}

/// A plan over a `k`-hop chain of nodes `0..=k` with the encoder at path
/// index `enc` and the decoder at index `dec` (`enc < dec`).
pub fn chain_plan(k: usize, enc: usize, dec: usize, rate: f64, ratio: f64) -> gsc_core::RoutePlan {
    use gsc_core::routing::{CodecPlacement, PlanHop};
    use gsc_core::Stage;
    assert!(enc < dec && dec <= k);
    let hops = (0..k)
        .map(|h| {
            let stage = if h < enc {
                Stage::RawPre
            } else if h < dec {
                Stage::Compressed
            } else {
                Stage::RawPost
            };
            PlanHop {
                from: NodeId(h as u32),
                to: NodeId(h as u32 + 1),
                link: h,
                stage,
                rate_mbps: if stage == Stage::Compressed {
                    rate * ratio
                } else {
                    rate
                },
                delay_ms: 1.0,
            }
        })
        .collect();
    let at = |i: usize| CodecPlacement {
        node: NodeId(i as u32),
        on_satellite: i != 0 && i != k,
    };
    gsc_core::RoutePlan {
        app_id: 0,
        case: CaseType::SatelliteCodec,
        method: Method::Gsc,
        kb: 0,
        nodes: (0..=k as u32).map(NodeId).collect(),
        hops,
        encoder: Some(at(enc)),
        decoder: Some(at(dec)),
        occupied_mbps: 0.0,
        delay_ms: 0.0,
    }
}

/// Checks that `windows` partition `[ts[0], ts[last])` into contiguous
/// windows whose boundaries are drawn from `ts` and, where the horizon
/// allows it, last at least `lambda`.
pub fn check_partition(ts: &[f64], lambda: f64, windows: &[gsc_core::TimeWindow]) -> Result<(), String> {
    let (first, last) = (ts[0], *ts.last().unwrap());
    if windows.is_empty() {
        return Err("no windows".into());
    }
    if windows[0].start != first || windows.last().unwrap().end != last {
        return Err(format!("windows do not span [{first}, {last})"));
    }
    for (i, w) in windows.iter().enumerate() {
        if w.index != i {
            return Err(format!("window {i} carries index {}", w.index));
        }
        if w.start >= w.end {
            return Err(format!("window {i} is empty"));
        }
        if !ts.contains(&w.start) || !ts.contains(&w.end) {
            return Err(format!("window {i} boundary is not a timestamp"));
        }
        if last - first >= lambda && w.duration() < lambda {
            return Err(format!("window {i} lasts {} < {lambda}", w.duration()));
        }
    }
    for p in windows.windows(2) {
        if p[0].end != p[1].start {
            return Err(format!("gap or overlap at {}", p[0].end));
        }
    }
    Ok(())
}

/// Strictly increasing timestamps with random spacing.
pub fn random_timestamps(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.gen_range(2..40);
    let mut t = rng.gen_range(0..100) as f64;
    let mut ts = vec![t];
    for _ in 1..n {
        t += rng.gen_range(1..300) as f64;
        ts.push(t);
    }
    ts
}
