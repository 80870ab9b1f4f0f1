//! Small hand-built networks used by tests, benches and the CLI examples.

use crate::geometry::{Contact, ContactPlan, Horizon, LinkKind};
use crate::temporal::{SnapshotGraph, SnapshotLink, TimeWindow};
use crate::types::{NodeId, NodeKind, NodeSpec};

#[derive(Debug, Clone)]
pub struct SnapshotBuilder {
    kb_count: usize,
    window: TimeWindow,
    nodes: Vec<NodeSpec>,
    links: Vec<SnapshotLink>,
}

impl SnapshotBuilder {
    pub fn new(kb_count: usize) -> Self {
        Self {
            kb_count,
            window: TimeWindow::new(0, 0.0, 60.0),
            nodes: Vec::new(),
            links: Vec::new(),
        }
    }

    pub fn window(mut self, window: TimeWindow) -> Self {
        self.window = window;
        self
    }

    pub fn terminal(mut self, id: u32, name: &str) -> Self {
        self.nodes
            .push(NodeSpec::terminal(NodeId(id), name, self.kb_count));
        self
    }

    pub fn satellite(mut self, id: u32, name: &str) -> Self {
        self.nodes
            .push(NodeSpec::new(NodeId(id), name, NodeKind::CommSat, self.kb_count));
        self
    }

    /// AI satellite hosting encoders for `enc` and decoders for `dec`.
    pub fn ai(mut self, id: u32, name: &str, enc: &[usize], dec: &[usize], slots: u32) -> Self {
        let mut n = NodeSpec::new(NodeId(id), name, NodeKind::AiSat, self.kb_count);
        for &k in enc {
            n.encoder_caps[k] += 1;
        }
        for &k in dec {
            n.decoder_caps[k] += 1;
        }
        n.compute_capacity = slots;
        self.nodes.push(n);
        self
    }

    pub fn link(mut self, a: u32, b: u32, rate_mbps: f64, delay_ms: f64) -> Self {
        let kind = if self.is_terminal(a) || self.is_terminal(b) {
            LinkKind::Sgl
        } else {
            LinkKind::Isl
        };
        self.links.push(SnapshotLink {
            a: NodeId(a.min(b)),
            b: NodeId(a.max(b)),
            rate_mbps,
            residual_mbps: rate_mbps,
            delay_ms,
            kind,
        });
        self
    }

    fn is_terminal(&self, id: u32) -> bool {
        self.nodes
            .iter()
            .any(|n| n.id == NodeId(id) && n.kind == NodeKind::Terminal)
    }

    pub fn build(self) -> SnapshotGraph {
        SnapshotGraph::from_parts(self.window, self.nodes, self.links)
            .expect("fixture snapshot is well formed")
    }
}

/// Node ids of [`detour_snapshot`].
pub mod detour {
    pub const A: u32 = 0;
    pub const B: u32 = 1;
    pub const C: u32 = 2;
    pub const D: u32 = 3;
    pub const E: u32 = 4;
    pub const U1: u32 = 5;
    pub const U2: u32 = 6;
}

/// Seven-node network where the shortest route `U1-A-B-U2` has three 5 ms
/// links and the only encoder (knowledge base 0) sits on `D`, reachable only
/// via the five-link detour `U1-A-C-D-E-U2`.
pub fn detour_snapshot() -> SnapshotGraph {
    use detour::*;
    SnapshotBuilder::new(1)
        .satellite(A, "A")
        .satellite(B, "B")
        .satellite(C, "C")
        .ai(D, "D", &[0], &[], 1)
        .satellite(E, "E")
        .terminal(U1, "U1")
        .terminal(U2, "U2")
        .link(U1, A, 300.0, 5.0)
        .link(A, B, 300.0, 5.0)
        .link(B, U2, 300.0, 5.0)
        .link(A, C, 300.0, 5.0)
        .link(C, D, 300.0, 5.0)
        .link(D, E, 300.0, 5.0)
        .link(E, U2, 300.0, 5.0)
        .build()
}

/// Node ids of [`staggered_plan`].
pub mod staggered {
    pub const A: u32 = 0;
    pub const B: u32 = 1;
    pub const C: u32 = 2;
    pub const S: u32 = 3;
    pub const D: u32 = 4;
}

/// Four links of the path `S-A-B-C-D` with staggered availability
/// (minutes): S-A 0..15, A-B 5..20, B-C 10..25, C-D 10..20. Times are in
/// seconds.
pub fn staggered_plan() -> ContactPlan {
    use staggered::*;
    let m = |x: f64| x * 60.0;
    let spans = [
        (S, A, 0.0, 15.0, LinkKind::Sgl),
        (A, B, 5.0, 20.0, LinkKind::Isl),
        (B, C, 10.0, 25.0, LinkKind::Isl),
        (C, D, 10.0, 20.0, LinkKind::Sgl),
    ];
    let contacts = spans
        .iter()
        .map(|&(a, b, s, e, k)| {
            Contact::new(NodeId(a), NodeId(b), m(s), m(e), 300.0, 5.0, k).expect("valid contact")
        })
        .collect();
    ContactPlan::new(Horizon::new(0.0, m(25.0)), contacts).expect("valid plan")
}

pub fn staggered_nodes() -> Vec<NodeSpec> {
    use staggered::*;
    vec![
        NodeSpec::new(NodeId(A), "A", NodeKind::CommSat, 1),
        NodeSpec::new(NodeId(B), "B", NodeKind::CommSat, 1),
        NodeSpec::new(NodeId(C), "C", NodeKind::CommSat, 1),
        NodeSpec::terminal(NodeId(S), "S", 1),
        NodeSpec::terminal(NodeId(D), "D", 1),
    ]
}
