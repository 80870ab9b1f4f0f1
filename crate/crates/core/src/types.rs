//! Node and knowledge-base types shared by every module.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Global node identifier. Satellites occupy `0..sat_count`, ground
/// terminals follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for NodeId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.parse().map(NodeId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    CommSat,
    AiSat,
    Terminal,
}

impl NodeKind {
    pub fn is_satellite(self) -> bool {
        !matches!(self, NodeKind::Terminal)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::CommSat => "comm",
            NodeKind::AiSat => "ai",
            NodeKind::Terminal => "terminal",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "comm" => Ok(NodeKind::CommSat),
            "ai" => Ok(NodeKind::AiSat),
            "terminal" => Ok(NodeKind::Terminal),
            other => Err(Error::Validation(format!("unknown node kind `{other}`"))),
        }
    }
}

/// Which half of a semantic codec a model slot hosts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelRole {
    Encoder,
    Decoder,
}

impl ModelRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelRole::Encoder => "encoder",
            ModelRole::Decoder => "decoder",
        }
    }
}

impl fmt::Display for ModelRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "encoder" => Ok(ModelRole::Encoder),
            "decoder" => Ok(ModelRole::Decoder),
            other => Err(Error::Validation(format!("unknown model role `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeBase {
    pub id: usize,
    pub label: String,
}

/// The set of shared knowledge bases; ids are dense indices `0..len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeBaseCatalog {
    entries: Vec<KnowledgeBase>,
}

impl KnowledgeBaseCatalog {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        let entries = labels
            .into_iter()
            .enumerate()
            .map(|(id, label)| KnowledgeBase {
                id,
                label: label.into(),
            })
            .collect();
        Self { entries }
    }

    /// Catalog of `n` opaque entries labelled `kb0..kbN`.
    pub fn with_size(n: usize) -> Self {
        Self::new((0..n).map(|i| format!("kb{i}")))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[KnowledgeBase] {
        &self.entries
    }

    pub fn get(&self, id: usize) -> Option<&KnowledgeBase> {
        self.entries.get(id)
    }
}

impl Default for KnowledgeBaseCatalog {
    fn default() -> Self {
        Self::with_size(3)
    }
}

/// A satellite or ground terminal with per-knowledge-base codec capability
/// counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub id: NodeId,
    pub name: String,
    pub kind: NodeKind,
    pub encoder_caps: Vec<u32>,
    pub decoder_caps: Vec<u32>,
    /// Model slots available for hosting encoders/decoders.
    pub compute_capacity: u32,
}

impl NodeSpec {
    pub fn new(id: NodeId, name: impl Into<String>, kind: NodeKind, kb_count: usize) -> Self {
        Self {
            id,
            name: name.into(),
            kind,
            encoder_caps: vec![0; kb_count],
            decoder_caps: vec![0; kb_count],
            compute_capacity: 0,
        }
    }

    pub fn satellite(id: NodeId, kb_count: usize) -> Self {
        Self::new(id, format!("sat{}", id.0), NodeKind::CommSat, kb_count)
    }

    pub fn terminal(id: NodeId, name: impl Into<String>, kb_count: usize) -> Self {
        Self::new(id, name, NodeKind::Terminal, kb_count)
    }

    pub fn kb_count(&self) -> usize {
        self.encoder_caps.len()
    }

    pub fn can_encode(&self, kb: usize) -> bool {
        self.encoder_caps.get(kb).is_some_and(|&c| c >= 1)
    }

    pub fn can_decode(&self, kb: usize) -> bool {
        self.decoder_caps.get(kb).is_some_and(|&c| c >= 1)
    }

    pub fn caps(&self, role: ModelRole) -> &[u32] {
        match role {
            ModelRole::Encoder => &self.encoder_caps,
            ModelRole::Decoder => &self.decoder_caps,
        }
    }

    pub fn caps_mut(&mut self, role: ModelRole) -> &mut [u32] {
        match role {
            ModelRole::Encoder => &mut self.encoder_caps,
            ModelRole::Decoder => &mut self.decoder_caps,
        }
    }

    pub fn is_gsc_capable(&self) -> bool {
        self.encoder_caps
            .iter()
            .chain(&self.decoder_caps)
            .any(|&c| c >= 1)
    }

    /// Model slots currently in use.
    pub fn used_slots(&self) -> u32 {
        self.encoder_caps.iter().chain(&self.decoder_caps).sum()
    }

    pub fn validate(&self, kb_count: usize) -> Result<()> {
        if self.encoder_caps.len() != kb_count || self.decoder_caps.len() != kb_count {
            return Err(Error::Validation(format!(
                "node {}: capability vectors must have length {kb_count}",
                self.id
            )));
        }
        if self.kind == NodeKind::CommSat && self.is_gsc_capable() {
            return Err(Error::Validation(format!(
                "node {}: communication satellite carries codec capabilities",
                self.id
            )));
        }
        Ok(())
    }
}
