//! Product of a snapshot with the codec stage an application's data is in.
//!
//! A state is `(node slot, stage)`. Link arcs stay within a stage and require
//! residual capacity for that stage's rate; encode/decode arcs change stage at
//! a single satellite. The graph is implicit: arcs are generated on demand in
//! both directions.

use std::fmt;

use super::{Application, CaseType, CompressionProfile, Method, Objective};
use crate::temporal::SnapshotGraph;
use crate::types::{NodeId, NodeKind};

/// Slack when comparing a residual capacity against a stage rate.
pub(crate) const CAPACITY_EPS: f64 = 1e-9;

const STAGES: u32 = 4;

/// Codec stage of the data carried on a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    RawPre,
    Compressed,
    RawPost,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::RawPre => "raw-pre",
            Stage::Compressed => "compressed",
            Stage::RawPost => "raw-post",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Internal stage of a search state. `Fresh` is compressed data that has not
/// yet crossed a link since it was encoded on a satellite; it may not be
/// decoded, which forbids same-node encode-then-decode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StageState {
    RawPre = 0,
    Fresh = 1,
    Compressed = 2,
    RawPost = 3,
}

impl StageState {
    fn from_index(i: u32) -> Self {
        match i {
            0 => StageState::RawPre,
            1 => StageState::Fresh,
            2 => StageState::Compressed,
            _ => StageState::RawPost,
        }
    }

    pub fn label(self) -> Stage {
        match self {
            StageState::RawPre => Stage::RawPre,
            StageState::Fresh | StageState::Compressed => Stage::Compressed,
            StageState::RawPost => Stage::RawPost,
        }
    }

    fn after_link(self) -> Self {
        match self {
            StageState::Fresh => StageState::Compressed,
            s => s,
        }
    }
}

pub type StateId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArcKind {
    Link(usize),
    Encode,
    Decode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StageArc {
    pub from: StateId,
    pub to: StateId,
    pub kind: ArcKind,
    /// Delay in nanoseconds.
    pub delay_ns: u64,
    /// Occupied bandwidth in bits per second.
    pub bw_bps: u64,
}

/// Lexicographic two-part cost packed into one integer: the objective's
/// primary metric in the high 64 bits.
pub type PackedCost = u128;

pub(crate) fn ms_to_ns(ms: f64) -> u64 {
    (ms * 1e6).round() as u64
}

pub(crate) fn mbps_to_bps(mbps: f64) -> u64 {
    (mbps * 1e6).round() as u64
}

pub struct StageGraph<'a> {
    snapshot: &'a SnapshotGraph,
    method: Method,
    case: CaseType,
    kb: usize,
    raw_rate: f64,
    compressed_rate: f64,
    encode_ns: u64,
    decode_ns: u64,
    objective: Objective,
    src: usize,
    dst: usize,
    ignore_capacity: bool,
}

impl<'a> StageGraph<'a> {
    /// `None` when either endpoint is missing from the snapshot.
    pub(crate) fn new(
        snapshot: &'a SnapshotGraph,
        app: &Application,
        profile: &CompressionProfile,
        method: Method,
        objective: Objective,
    ) -> Option<Self> {
        let src = snapshot.slot(app.src)?;
        let dst = snapshot.slot(app.dst)?;
        let ratio = profile.ratio_for(app);
        Some(Self {
            snapshot,
            method,
            case: app.case,
            kb: app.kb,
            raw_rate: app.rate_mbps,
            compressed_rate: app.rate_mbps * ratio,
            encode_ns: ms_to_ns(profile.encode_latency_ms(app.kb)),
            decode_ns: ms_to_ns(profile.decode_latency_ms(app.kb)),
            objective,
            src,
            dst,
            ignore_capacity: false,
        })
    }

    pub(crate) fn ignoring_capacity(mut self) -> Self {
        self.ignore_capacity = true;
        self
    }

    pub fn snapshot(&self) -> &SnapshotGraph {
        self.snapshot
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn state(slot: usize, stage: StageState) -> StateId {
        slot as u32 * STAGES + stage as u32
    }

    pub fn split(state: StateId) -> (usize, StageState) {
        ((state / STAGES) as usize, StageState::from_index(state % STAGES))
    }

    pub fn state_count(&self) -> usize {
        self.snapshot.nodes().len() * STAGES as usize
    }

    pub fn node_id(&self, state: StateId) -> NodeId {
        self.snapshot.node_at(Self::split(state).0).id
    }

    fn initial_stage(&self) -> StageState {
        match self.method {
            Method::Traditional => StageState::RawPre,
            Method::Gsc => match self.case {
                CaseType::BothEnds | CaseType::SenderEncodes => StageState::Compressed,
                CaseType::ReceiverDecodes | CaseType::SatelliteCodec => StageState::RawPre,
            },
        }
    }

    fn accepting_stage(&self) -> StageState {
        match self.method {
            Method::Traditional => StageState::RawPre,
            Method::Gsc => match self.case {
                CaseType::BothEnds | CaseType::ReceiverDecodes => StageState::Compressed,
                CaseType::SenderEncodes | CaseType::SatelliteCodec => StageState::RawPost,
            },
        }
    }

    pub fn start(&self) -> StateId {
        Self::state(self.src, self.initial_stage())
    }

    pub fn accepting(&self) -> StateId {
        Self::state(self.dst, self.accepting_stage())
    }

    fn allows_encode(&self) -> bool {
        self.method == Method::Gsc
            && matches!(self.case, CaseType::ReceiverDecodes | CaseType::SatelliteCodec)
    }

    fn allows_decode(&self) -> bool {
        self.method == Method::Gsc && matches!(self.case, CaseType::SenderEncodes | CaseType::SatelliteCodec)
    }

    pub fn stage_rate(&self, stage: StageState) -> f64 {
        match stage {
            StageState::RawPre | StageState::RawPost => self.raw_rate,
            StageState::Fresh | StageState::Compressed => self.compressed_rate,
        }
    }

    fn link_usable(&self, link: usize, stage: StageState) -> bool {
        self.ignore_capacity
            || self.snapshot.link(link).residual_mbps + CAPACITY_EPS >= self.stage_rate(stage)
    }

    /// Terminals only act as the application's endpoints, never as relays.
    fn may_leave(&self, slot: usize) -> bool {
        slot == self.src || (slot != self.dst && self.snapshot.node_at(slot).kind != NodeKind::Terminal)
    }

    fn may_enter(&self, slot: usize) -> bool {
        slot == self.dst || (slot != self.src && self.snapshot.node_at(slot).kind != NodeKind::Terminal)
    }

    fn is_ai(&self, slot: usize) -> bool {
        self.snapshot.node_at(slot).kind == NodeKind::AiSat
    }

    fn link_arc(&self, from: StateId, to: StateId, link: usize, stage: StageState) -> StageArc {
        StageArc {
            from,
            to,
            kind: ArcKind::Link(link),
            delay_ns: ms_to_ns(self.snapshot.link(link).delay_ms),
            bw_bps: mbps_to_bps(self.stage_rate(stage)),
        }
    }

    pub fn arc_cost(&self, arc: &StageArc) -> PackedCost {
        let (p, s) = match self.objective {
            Objective::DelayFirst => (arc.delay_ns, arc.bw_bps),
            Objective::BandwidthFirst => (arc.bw_bps, arc.delay_ns),
        };
        ((p as u128) << 64) | s as u128
    }

    /// Arcs leaving `state`.
    pub fn arcs_from(&self, state: StateId, out: &mut Vec<StageArc>) {
        out.clear();
        let (slot, stage) = Self::split(state);
        if !self.may_leave(slot) {
            return;
        }
        let node = self.snapshot.node_at(slot);
        if stage == StageState::RawPre && self.allows_encode() && self.is_ai(slot) && node.can_encode(self.kb)
        {
            out.push(StageArc {
                from: state,
                to: Self::state(slot, StageState::Fresh),
                kind: ArcKind::Encode,
                delay_ns: self.encode_ns,
                bw_bps: 0,
            });
        }
        if stage == StageState::Compressed
            && self.allows_decode()
            && self.is_ai(slot)
            && node.can_decode(self.kb)
        {
            out.push(StageArc {
                from: state,
                to: Self::state(slot, StageState::RawPost),
                kind: ArcKind::Decode,
                delay_ns: self.decode_ns,
                bw_bps: 0,
            });
        }
        let next_stage = stage.after_link();
        for &(nbr, link) in self.snapshot.neighbors(slot) {
            if self.may_enter(nbr) && self.link_usable(link, stage) {
                out.push(self.link_arc(state, Self::state(nbr, next_stage), link, stage));
            }
        }
    }

    /// Arcs entering `state`; the exact mirror of [`Self::arcs_from`].
    pub fn arcs_into(&self, state: StateId, out: &mut Vec<StageArc>) {
        out.clear();
        let (slot, stage) = Self::split(state);
        let node = self.snapshot.node_at(slot);
        if self.may_leave(slot) {
            if stage == StageState::Fresh
                && self.allows_encode()
                && self.is_ai(slot)
                && node.can_encode(self.kb)
            {
                out.push(StageArc {
                    from: Self::state(slot, StageState::RawPre),
                    to: state,
                    kind: ArcKind::Encode,
                    delay_ns: self.encode_ns,
                    bw_bps: 0,
                });
            }
            if stage == StageState::RawPost
                && self.allows_decode()
                && self.is_ai(slot)
                && node.can_decode(self.kb)
            {
                out.push(StageArc {
                    from: Self::state(slot, StageState::Compressed),
                    to: state,
                    kind: ArcKind::Decode,
                    delay_ns: self.decode_ns,
                    bw_bps: 0,
                });
            }
        }
        if !self.may_enter(slot) {
            return;
        }
        let prev_stages: &[StageState] = match stage {
            StageState::RawPre => &[StageState::RawPre],
            StageState::Fresh => &[],
            StageState::Compressed => &[StageState::Compressed, StageState::Fresh],
            StageState::RawPost => &[StageState::RawPost],
        };
        for &(nbr, link) in self.snapshot.neighbors(slot) {
            if !self.may_leave(nbr) {
                continue;
            }
            for &ps in prev_stages {
                if self.link_usable(link, ps) {
                    out.push(self.link_arc(Self::state(nbr, ps), state, link, ps));
                }
            }
        }
    }

    /// Every arc reachable from the start state, materialized. Intended for
    /// inspection and tests; routing walks the graph implicitly.
    pub fn reachable_arcs(&self) -> Vec<StageArc> {
        let mut seen = vec![false; self.state_count()];
        let mut stack = vec![self.start()];
        seen[self.start() as usize] = true;
        let mut arcs = Vec::new();
        let mut buf = Vec::new();
        while let Some(s) = stack.pop() {
            self.arcs_from(s, &mut buf);
            for a in &buf {
                arcs.push(*a);
                if !seen[a.to as usize] {
                    seen[a.to as usize] = true;
                    stack.push(a.to);
                }
            }
        }
        arcs.sort_by_key(|a| (a.from, a.to));
        arcs
    }
}

/// Builds the stage-expanded view of `snapshot` for `app`. `None` when an
/// endpoint is absent from the snapshot.
pub fn expand_stage_graph<'a>(
    snapshot: &'a SnapshotGraph,
    app: &Application,
    profile: &CompressionProfile,
) -> Option<StageGraph<'a>> {
    StageGraph::new(snapshot, app, profile, Method::Gsc, Objective::DelayFirst)
}
