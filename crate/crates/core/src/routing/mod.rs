//! Semantic-aware routing of applications over a snapshot.
//!
//! Each application's capability case fixes where its data may be encoded
//! and decoded. Routing searches the stage-expanded snapshot for the path and
//! codec placement with the smallest end-to-end delay (occupied bandwidth
//! breaks ties), then admission books the chosen rates against link
//! residuals.

mod search;
mod stage;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

pub use search::{shortest_delay_path, StatePath};
pub use stage::{expand_stage_graph, ArcKind, PackedCost, Stage, StageArc, StageGraph, StageState, StateId};

use crate::error::{Error, Result};
use crate::temporal::SnapshotGraph;
use crate::types::{NodeId, NodeKind};
use stage::CAPACITY_EPS;

/// Where the sender/receiver terminals can run codecs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CaseType {
    /// Sender encodes and receiver decodes.
    BothEnds = 1,
    /// Sender encodes; a satellite decodes.
    SenderEncodes = 2,
    /// A satellite encodes; receiver decodes.
    ReceiverDecodes = 3,
    /// Satellites both encode and decode.
    SatelliteCodec = 4,
}

impl CaseType {
    pub const ALL: [CaseType; 4] = [
        CaseType::BothEnds,
        CaseType::SenderEncodes,
        CaseType::ReceiverDecodes,
        CaseType::SatelliteCodec,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(CaseType::BothEnds),
            2 => Ok(CaseType::SenderEncodes),
            3 => Ok(CaseType::ReceiverDecodes),
            4 => Ok(CaseType::SatelliteCodec),
            other => Err(Error::Validation(format!("case type {other} not in 1..=4"))),
        }
    }
}

impl fmt::Display for CaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for CaseType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n: u8 = s
            .trim()
            .parse()
            .map_err(|_| Error::Validation(format!("case type `{s}` is not an integer")))?;
        Self::from_number(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// Raw data on a plain shortest-delay path.
    Traditional,
    /// Case-respecting semantic routing.
    Gsc,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Traditional => "traditional",
            Method::Gsc => "gsc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "traditional" => Ok(Method::Traditional),
            "gsc" => Ok(Method::Gsc),
            other => Err(Error::Validation(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Objective {
    #[default]
    DelayFirst,
    BandwidthFirst,
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delay" | "delay-first" => Ok(Objective::DelayFirst),
            "bandwidth" | "bandwidth-first" => Ok(Objective::BandwidthFirst),
            other => Err(Error::Validation(format!("unknown objective `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Application {
    pub id: u32,
    pub case: CaseType,
    pub src: NodeId,
    pub dst: NodeId,
    pub rate_mbps: f64,
    pub kb: usize,
    /// Per-application compression ratio; falls back to the profile's
    /// per-KB ratio when absent.
    pub ratio: Option<f64>,
}

impl Application {
    pub fn validate(&self, kb_count: usize) -> Result<()> {
        if self.src == self.dst {
            return Err(Error::Validation(format!(
                "application {}: source equals destination",
                self.id
            )));
        }
        if !(self.rate_mbps > 0.0) {
            return Err(Error::Validation(format!(
                "application {}: rate must be positive",
                self.id
            )));
        }
        if self.kb >= kb_count {
            return Err(Error::Validation(format!(
                "application {}: knowledge base {} outside catalog of {kb_count}",
                self.id, self.kb
            )));
        }
        if let Some(r) = self.ratio {
            check_ratio(r)?;
        }
        Ok(())
    }
}

fn check_ratio(r: f64) -> Result<()> {
    if r > 0.0 && r <= 1.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("compression ratio {r} outside (0, 1]")))
    }
}

/// Per-knowledge-base compression ratio and satellite codec latencies.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionProfile {
    pub ratios: Vec<f64>,
    pub encode_latency_ms: Vec<f64>,
    pub decode_latency_ms: Vec<f64>,
}

impl CompressionProfile {
    /// Same ratio for every base, zero satellite latency.
    pub fn uniform(kb_count: usize, ratio: f64) -> Self {
        Self {
            ratios: vec![ratio; kb_count],
            encode_latency_ms: vec![0.0; kb_count],
            decode_latency_ms: vec![0.0; kb_count],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for &r in &self.ratios {
            check_ratio(r)?;
        }
        if self
            .encode_latency_ms
            .iter()
            .chain(&self.decode_latency_ms)
            .any(|&l| !(l >= 0.0))
        {
            return Err(Error::Validation("codec latency must be non-negative".into()));
        }
        Ok(())
    }

    pub fn ratio_for(&self, app: &Application) -> f64 {
        app.ratio
            .unwrap_or_else(|| self.ratios.get(app.kb).copied().unwrap_or(1.0))
    }

    pub fn encode_latency_ms(&self, kb: usize) -> f64 {
        self.encode_latency_ms.get(kb).copied().unwrap_or(0.0)
    }

    pub fn decode_latency_ms(&self, kb: usize) -> f64 {
        self.decode_latency_ms.get(kb).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnroutableReason {
    Disconnected,
    NoMatchingKb,
    InsufficientCapacity,
}

impl fmt::Display for UnroutableReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnroutableReason::Disconnected => "disconnected",
            UnroutableReason::NoMatchingKb => "noMatchingKB",
            UnroutableReason::InsufficientCapacity => "insufficientCapacity",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("unroutable: {reason}")]
pub struct Unroutable {
    pub reason: UnroutableReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdmissionError {
    #[error("link {a}-{b} has {residual} Mbps left, plan needs {needed}")]
    Insufficient {
        a: NodeId,
        b: NodeId,
        residual: String,
        needed: String,
    },
    #[error("plan hop {0}-{1} does not match the snapshot")]
    Mismatch(NodeId, NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodecPlacement {
    pub node: NodeId,
    /// Whether the codec runs on a satellite (as opposed to a terminal).
    pub on_satellite: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanHop {
    pub from: NodeId,
    pub to: NodeId,
    /// Index into the snapshot's link list.
    pub link: usize,
    pub stage: Stage,
    pub rate_mbps: f64,
    pub delay_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutePlan {
    pub app_id: u32,
    pub case: CaseType,
    pub method: Method,
    pub kb: usize,
    pub nodes: Vec<NodeId>,
    pub hops: Vec<PlanHop>,
    pub encoder: Option<CodecPlacement>,
    pub decoder: Option<CodecPlacement>,
    pub occupied_mbps: f64,
    pub delay_ms: f64,
}

impl RoutePlan {
    pub fn stage_labels(&self) -> Vec<Stage> {
        self.hops.iter().map(|h| h.stage).collect()
    }

    pub fn count_stage(&self, stage: Stage) -> usize {
        self.hops.iter().filter(|h| h.stage == stage).count()
    }
}

/// Sum of per-link rates along the plan.
pub fn occupied_bandwidth(plan: &RoutePlan) -> f64 {
    plan.hops.iter().map(|h| h.rate_mbps).sum()
}

/// Link propagation delays plus codec latency for transitions hosted on
/// satellites. Terminal-side codecs add nothing.
pub fn end_to_end_delay(plan: &RoutePlan, profile: &CompressionProfile) -> f64 {
    let links: f64 = plan.hops.iter().map(|h| h.delay_ms).sum();
    let enc = match plan.encoder {
        Some(c) if c.on_satellite => profile.encode_latency_ms(plan.kb),
        _ => 0.0,
    };
    let dec = match plan.decoder {
        Some(c) if c.on_satellite => profile.decode_latency_ms(plan.kb),
        _ => 0.0,
    };
    links + enc + dec
}

/// Routes `app` under its capability case with the default delay-first
/// objective.
pub fn route(
    app: &Application,
    snapshot: &SnapshotGraph,
    profile: &CompressionProfile,
) -> std::result::Result<RoutePlan, Unroutable> {
    route_with(app, snapshot, profile, Method::Gsc, Objective::DelayFirst)
}

/// Raw-rate shortest-delay baseline.
pub fn route_traditional(
    app: &Application,
    snapshot: &SnapshotGraph,
    profile: &CompressionProfile,
) -> std::result::Result<RoutePlan, Unroutable> {
    route_with(app, snapshot, profile, Method::Traditional, Objective::DelayFirst)
}

pub fn route_with(
    app: &Application,
    snapshot: &SnapshotGraph,
    profile: &CompressionProfile,
    method: Method,
    objective: Objective,
) -> std::result::Result<RoutePlan, Unroutable> {
    let unroutable = |reason| Unroutable { reason };
    let graph = StageGraph::new(snapshot, app, profile, method, objective)
        .ok_or(unroutable(UnroutableReason::Disconnected))?;
    let start = graph.start();
    let accept = [graph.accepting()];
    match shortest_delay_path(&graph, start, &accept) {
        Some(path) => Ok(build_plan(&graph, app, profile, method, &path)),
        None => Err(unroutable(diagnose(graph, app, snapshot))),
    }
}

fn diagnose(graph: StageGraph<'_>, app: &Application, snapshot: &SnapshotGraph) -> UnroutableReason {
    let relaxed = graph.ignoring_capacity();
    let start = relaxed.start();
    if shortest_delay_path(&relaxed, start, &[relaxed.accepting()]).is_some() {
        return UnroutableReason::InsufficientCapacity;
    }
    if connected(snapshot, app.src, app.dst) {
        UnroutableReason::NoMatchingKb
    } else {
        UnroutableReason::Disconnected
    }
}

/// Reachability from `src` to `dst` relaying only through satellites.
fn connected(snapshot: &SnapshotGraph, src: NodeId, dst: NodeId) -> bool {
    let (Some(s), Some(d)) = (snapshot.slot(src), snapshot.slot(dst)) else {
        return false;
    };
    let mut seen = vec![false; snapshot.nodes().len()];
    let mut stack = vec![s];
    seen[s] = true;
    while let Some(u) = stack.pop() {
        if u == d {
            return true;
        }
        if u != s && snapshot.node_at(u).kind == NodeKind::Terminal {
            continue;
        }
        for &(v, _) in snapshot.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    false
}

fn build_plan(
    graph: &StageGraph<'_>,
    app: &Application,
    profile: &CompressionProfile,
    method: Method,
    path: &StatePath,
) -> RoutePlan {
    let snapshot = graph.snapshot();
    let mut nodes = vec![app.src];
    let mut hops = Vec::new();
    let mut encoder = None;
    let mut decoder = None;
    for arc in &path.arcs {
        let (from_slot, from_stage) = StageGraph::split(arc.from);
        let from = snapshot.node_at(from_slot).id;
        match arc.kind {
            ArcKind::Link(link) => {
                let to = graph.node_id(arc.to);
                nodes.push(to);
                hops.push(PlanHop {
                    from,
                    to,
                    link,
                    stage: from_stage.label(),
                    rate_mbps: graph.stage_rate(from_stage),
                    delay_ms: snapshot.link(link).delay_ms,
                });
            }
            ArcKind::Encode => {
                encoder = Some(CodecPlacement {
                    node: from,
                    on_satellite: true,
                })
            }
            ArcKind::Decode => {
                decoder = Some(CodecPlacement {
                    node: from,
                    on_satellite: true,
                })
            }
        }
    }
    if method == Method::Gsc {
        if matches!(app.case, CaseType::BothEnds | CaseType::SenderEncodes) {
            encoder = Some(CodecPlacement {
                node: app.src,
                on_satellite: false,
            });
        }
        if matches!(app.case, CaseType::BothEnds | CaseType::ReceiverDecodes) {
            decoder = Some(CodecPlacement {
                node: app.dst,
                on_satellite: false,
            });
        }
    }
    let mut plan = RoutePlan {
        app_id: app.id,
        case: app.case,
        method,
        kb: app.kb,
        nodes,
        hops,
        encoder,
        decoder,
        occupied_mbps: 0.0,
        delay_ms: 0.0,
    };
    plan.occupied_mbps = occupied_bandwidth(&plan);
    plan.delay_ms = end_to_end_delay(&plan, profile);
    plan
}

/// Books the plan's per-link rates against the snapshot's residual
/// capacities. On failure the snapshot is left untouched.
pub fn admit(plan: &RoutePlan, snapshot: &mut SnapshotGraph) -> std::result::Result<(), AdmissionError> {
    for hop in &plan.hops {
        if hop.link >= snapshot.links().len() {
            return Err(AdmissionError::Mismatch(hop.from, hop.to));
        }
        let l = snapshot.link(hop.link);
        let matches = (l.a == hop.from && l.b == hop.to) || (l.a == hop.to && l.b == hop.from);
        if !matches {
            return Err(AdmissionError::Mismatch(hop.from, hop.to));
        }
        if l.residual_mbps + CAPACITY_EPS < hop.rate_mbps {
            return Err(AdmissionError::Insufficient {
                a: l.a,
                b: l.b,
                residual: l.residual_mbps.to_string(),
                needed: hop.rate_mbps.to_string(),
            });
        }
    }
    for hop in &plan.hops {
        let l = snapshot.link_mut(hop.link);
        l.residual_mbps = (l.residual_mbps - hop.rate_mbps).max(0.0);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplanOutcome {
    /// One entry per snapshot, in window order.
    pub per_window: Vec<(usize, std::result::Result<RoutePlan, Unroutable>)>,
    /// Consecutive routed windows whose node sequences differ.
    pub switches: usize,
}

impl ReplanOutcome {
    pub fn plans(&self) -> impl Iterator<Item = (usize, &RoutePlan)> {
        self.per_window
            .iter()
            .filter_map(|(w, r)| r.as_ref().ok().map(|p| (*w, p)))
    }

    pub fn gaps(&self) -> usize {
        self.per_window.iter().filter(|(_, r)| r.is_err()).count()
    }
}

/// Routes `app` independently in every window and counts path switches
/// between consecutive routed windows. Unroutable windows are gaps.
pub fn replan_routes(
    app: &Application,
    snapshots: &[SnapshotGraph],
    profile: &CompressionProfile,
) -> ReplanOutcome {
    let per_window: Vec<_> = snapshots
        .par_iter()
        .map(|s| (s.window.index, route(app, s, profile)))
        .collect();
    let routed: Vec<&RoutePlan> = per_window.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();
    let switches = routed.windows(2).filter(|w| w[0].nodes != w[1].nodes).count();
    ReplanOutcome { per_window, switches }
}
