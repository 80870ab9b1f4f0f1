//! Walker-delta constellation synthesis, circular-orbit propagation and
//! contact-plan derivation (inter-satellite and satellite-ground links).

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{keyed_rng, stream_rng, Stream};
use crate::types::{KnowledgeBaseCatalog, NodeId, NodeKind, NodeSpec};

pub const EARTH_RADIUS_KM: f64 = 6371.0;
pub const EARTH_MU_KM3_S2: f64 = 398_600.441_8;
pub const EARTH_ROTATION_RAD_S: f64 = 7.292_115_9e-5;

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationSpec {
    pub planes: u32,
    pub sats_per_plane: u32,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    /// Walker phasing parameter `F`, in `0..planes`.
    pub phasing: u32,
    pub ai_fraction: f64,
}

impl ConstellationSpec {
    pub fn sat_count(&self) -> usize {
        self.planes as usize * self.sats_per_plane as usize
    }

    pub fn radius_km(&self) -> f64 {
        EARTH_RADIUS_KM + self.altitude_km
    }

    pub fn period_s(&self) -> f64 {
        TAU * (self.radius_km().powi(3) / EARTH_MU_KM3_S2).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if self.planes == 0 || self.sats_per_plane == 0 {
            return Err(Error::Config(
                "constellation needs at least one plane and one satellite per plane".into(),
            ));
        }
        if !(self.altitude_km > 0.0) {
            return Err(Error::Config("altitude must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.ai_fraction) {
            return Err(Error::Config(format!(
                "ai fraction {} outside [0, 1]",
                self.ai_fraction
            )));
        }
        Ok(())
    }

    /// Node id of the satellite in `plane` at `slot`.
    pub fn sat_id(&self, plane: u32, slot: u32) -> NodeId {
        NodeId(plane * self.sats_per_plane + slot)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundSite {
    pub name: String,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
}

impl GroundSite {
    pub fn new(name: impl Into<String>, latitude_deg: f64, longitude_deg: f64) -> Result<Self> {
        let site = Self {
            name: name.into(),
            latitude_deg,
            longitude_deg,
        };
        site.validate()?;
        Ok(site)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.latitude_deg) || !(-180.0..=180.0).contains(&self.longitude_deg) {
            return Err(Error::Validation(format!(
                "site `{}` has out-of-range coordinates ({}, {})",
                self.name, self.latitude_deg, self.longitude_deg
            )));
        }
        Ok(())
    }

    /// Earth-centered inertial position at `t`, assuming the prime meridian
    /// is aligned with the inertial x axis at `t = 0`.
    pub fn position_eci(&self, t: f64) -> Vec3 {
        let lat = self.latitude_deg.to_radians();
        let lon = self.longitude_deg.to_radians() + EARTH_ROTATION_RAD_S * t;
        [
            EARTH_RADIUS_KM * lat.cos() * lon.cos(),
            EARTH_RADIUS_KM * lat.cos() * lon.sin(),
            EARTH_RADIUS_KM * lat.sin(),
        ]
    }
}

/// The ten terminal regions shipped with the crate.
pub fn bundled_sites() -> Vec<GroundSite> {
    crate::io::parse_sites(include_str!("../data/sites.csv")).expect("bundled site table is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinkKind {
    Isl,
    Sgl,
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkKind::Isl => "ISL",
            LinkKind::Sgl => "SGL",
        })
    }
}

impl FromStr for LinkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ISL" => Ok(LinkKind::Isl),
            "SGL" => Ok(LinkKind::Sgl),
            other => Err(Error::Validation(format!("unknown link kind `{other}`"))),
        }
    }
}

/// A timed communication opportunity. Endpoints are stored with
/// `node_a < node_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Contact {
    pub node_a: NodeId,
    pub node_b: NodeId,
    pub start: f64,
    pub end: f64,
    pub rate_mbps: f64,
    pub delay_ms: f64,
    pub kind: LinkKind,
}

impl Contact {
    pub fn new(
        a: NodeId,
        b: NodeId,
        start: f64,
        end: f64,
        rate_mbps: f64,
        delay_ms: f64,
        kind: LinkKind,
    ) -> Result<Self> {
        let (node_a, node_b) = if a <= b { (a, b) } else { (b, a) };
        let c = Self {
            node_a,
            node_b,
            start,
            end,
            rate_mbps,
            delay_ms,
            kind,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_a == self.node_b {
            return Err(Error::Validation(format!(
                "contact joins node {} to itself",
                self.node_a
            )));
        }
        if !(self.start < self.end) {
            return Err(Error::Validation(format!(
                "contact {}-{} has empty interval [{}, {})",
                self.node_a, self.node_b, self.start, self.end
            )));
        }
        if !(self.rate_mbps > 0.0) || !(self.delay_ms >= 0.0) {
            return Err(Error::Validation(format!(
                "contact {}-{} needs positive rate and non-negative delay",
                self.node_a, self.node_b
            )));
        }
        Ok(())
    }

    pub fn pair(&self) -> (NodeId, NodeId) {
        (self.node_a, self.node_b)
    }

    pub fn covers(&self, start: f64, end: f64) -> bool {
        self.start <= start && end <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon {
    pub start: f64,
    pub end: f64,
}

impl Horizon {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactPlan {
    pub horizon: Horizon,
    contacts: Vec<Contact>,
}

impl ContactPlan {
    /// Validates and canonicalizes (sorts) a set of contacts.
    pub fn new(horizon: Horizon, mut contacts: Vec<Contact>) -> Result<Self> {
        if horizon.end < horizon.start {
            return Err(Error::Validation("horizon end precedes start".into()));
        }
        for c in &contacts {
            c.validate()?;
            if c.start < horizon.start || c.end > horizon.end {
                return Err(Error::Validation(format!(
                    "contact {}-{} [{}, {}) leaves the horizon",
                    c.node_a, c.node_b, c.start, c.end
                )));
            }
        }
        contacts.sort_by(|x, y| {
            (x.node_a, x.node_b)
                .cmp(&(y.node_a, y.node_b))
                .then(x.start.total_cmp(&y.start))
        });
        for w in contacts.windows(2) {
            if w[0].pair() == w[1].pair() && w[1].start < w[0].end {
                return Err(Error::Validation(format!(
                    "overlapping contacts for pair {}-{}",
                    w[0].node_a, w[0].node_b
                )));
            }
        }
        contacts.sort_by(|x, y| {
            x.start
                .total_cmp(&y.start)
                .then((x.node_a, x.node_b).cmp(&(y.node_a, y.node_b)))
        });
        Ok(Self { horizon, contacts })
    }

    pub fn empty(horizon: Horizon) -> Self {
        Self {
            horizon,
            contacts: Vec::new(),
        }
    }

    pub fn contacts(&self) -> &[Contact] {
        &self.contacts
    }

    pub fn len(&self) -> usize {
        self.contacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contacts.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IslPattern {
    /// Two intra-plane and two inter-plane neighbours per satellite.
    PlusGrid,
    /// Fixed list of satellite pairs.
    Explicit(Vec<(NodeId, NodeId)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityRules {
    pub elevation_mask_deg: f64,
    pub sampling_step_s: f64,
    pub isl_rate_mbps: (f64, f64),
    pub isl_delay_ms: (f64, f64),
    pub sgl_rate_mbps: (f64, f64),
    pub sgl_delay_ms: (f64, f64),
    pub isl_pattern: IslPattern,
}

impl Default for VisibilityRules {
    fn default() -> Self {
        Self {
            elevation_mask_deg: 25.0,
            sampling_step_s: 10.0,
            isl_rate_mbps: (300.0, 350.0),
            isl_delay_ms: (5.0, 15.0),
            sgl_rate_mbps: (300.0, 350.0),
            sgl_delay_ms: (5.0, 15.0),
            isl_pattern: IslPattern::PlusGrid,
        }
    }
}

impl VisibilityRules {
    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_step_s > 0.0) {
            return Err(Error::Config("sampling step must be positive".into()));
        }
        for (name, (lo, hi), min) in [
            ("isl rate", self.isl_rate_mbps, f64::MIN_POSITIVE),
            ("sgl rate", self.sgl_rate_mbps, f64::MIN_POSITIVE),
            ("isl delay", self.isl_delay_ms, 0.0),
            ("sgl delay", self.sgl_delay_ms, 0.0),
        ] {
            if !(lo >= min && lo <= hi) {
                return Err(Error::Config(format!("{name} range [{lo}, {hi}] is invalid")));
            }
        }
        Ok(())
    }
}

/// Positions of every satellite at time `t` (km, inertial frame), indexed by
/// node id.
pub fn propagate_positions(spec: &ConstellationSpec, t: f64) -> Result<Vec<Vec3>> {
    spec.validate()?;
    let r = spec.radius_km();
    let mean_motion = TAU / spec.period_s();
    let inc = spec.inclination_deg.to_radians();
    let (sin_i, cos_i) = inc.sin_cos();
    let planes = spec.planes as f64;
    let per_plane = spec.sats_per_plane as f64;
    let total = planes * per_plane;

    let mut out = Vec::with_capacity(spec.sat_count());
    for p in 0..spec.planes {
        let raan = TAU * p as f64 / planes;
        let (sin_o, cos_o) = raan.sin_cos();
        for s in 0..spec.sats_per_plane {
            let u0 = TAU * s as f64 / per_plane + TAU * (spec.phasing * p) as f64 / total;
            let u = u0 + mean_motion * t;
            let (sin_u, cos_u) = u.sin_cos();
            out.push([
                r * (cos_o * cos_u - sin_o * sin_u * cos_i),
                r * (sin_o * cos_u + cos_o * sin_u * cos_i),
                r * sin_u * sin_i,
            ]);
        }
    }
    Ok(out)
}

/// Elevation (degrees) of a satellite seen from a ground point, both in the
/// same Cartesian frame.
pub fn elevation_deg(site: Vec3, sat: Vec3) -> f64 {
    let d = [sat[0] - site[0], sat[1] - site[1], sat[2] - site[2]];
    let dn = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let sn = (site[0] * site[0] + site[1] * site[1] + site[2] * site[2]).sqrt();
    let dot = d[0] * site[0] + d[1] * site[1] + d[2] * site[2];
    (dot / (dn * sn)).clamp(-1.0, 1.0).asin().to_degrees()
}

fn isl_pairs(spec: &ConstellationSpec, pattern: &IslPattern) -> BTreeSet<(NodeId, NodeId)> {
    let norm = |a: NodeId, b: NodeId| if a <= b { (a, b) } else { (b, a) };
    let mut pairs = BTreeSet::new();
    match pattern {
        IslPattern::PlusGrid => {
            for p in 0..spec.planes {
                for s in 0..spec.sats_per_plane {
                    let me = spec.sat_id(p, s);
                    let next_slot = spec.sat_id(p, (s + 1) % spec.sats_per_plane);
                    let next_plane = spec.sat_id((p + 1) % spec.planes, s);
                    for other in [next_slot, next_plane] {
                        if other != me {
                            pairs.insert(norm(me, other));
                        }
                    }
                }
            }
        }
        IslPattern::Explicit(list) => {
            for &(a, b) in list {
                if a != b {
                    pairs.insert(norm(a, b));
                }
            }
        }
    }
    pairs
}

fn draw(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

#[allow(clippy::too_many_arguments)]
fn sampled_contact(
    seed: u64,
    a: NodeId,
    b: NodeId,
    start: f64,
    end: f64,
    kind: LinkKind,
    rates: (f64, f64),
    delays: (f64, f64),
) -> Result<Contact> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let mut rng = keyed_rng(
        seed,
        Stream::Contacts,
        &[lo.0 as u64, hi.0 as u64, start.to_bits()],
    );
    let rate = draw(&mut rng, rates);
    let delay = draw(&mut rng, delays);
    Contact::new(lo, hi, start, end, rate, delay, kind)
}

/// Derives the contact plan over `horizon`. Terminal node ids follow the
/// satellites in site order. Rates and delays are drawn once per contact from
/// a stream keyed on the contact identity, so the plan does not depend on
/// evaluation order.
pub fn compute_contacts(
    spec: &ConstellationSpec,
    sites: &[GroundSite],
    horizon: Horizon,
    rules: &VisibilityRules,
    seed: u64,
) -> Result<ContactPlan> {
    spec.validate()?;
    rules.validate()?;
    for s in sites {
        s.validate()?;
    }
    if !(horizon.end > horizon.start) {
        return Ok(ContactPlan::empty(horizon));
    }

    let mut contacts = Vec::new();
    for (a, b) in isl_pairs(spec, &rules.isl_pattern) {
        contacts.push(sampled_contact(
            seed,
            a,
            b,
            horizon.start,
            horizon.end,
            LinkKind::Isl,
            rules.isl_rate_mbps,
            rules.isl_delay_ms,
        )?);
    }

    let n_sats = spec.sat_count();
    let step = rules.sampling_step_s;
    let mut open: Vec<Option<f64>> = vec![None; n_sats * sites.len()];
    let mut k = 0u64;
    loop {
        let t = horizon.start + k as f64 * step;
        if t >= horizon.end {
            break;
        }
        let sats = propagate_positions(spec, t)?;
        for (si, site) in sites.iter().enumerate() {
            let ground = site.position_eci(t);
            for (sat, pos) in sats.iter().enumerate() {
                let slot = &mut open[si * n_sats + sat];
                let visible = elevation_deg(ground, *pos) > rules.elevation_mask_deg;
                match (visible, *slot) {
                    (true, None) => *slot = Some(t),
                    (false, Some(start)) => {
                        *slot = None;
                        contacts.push(sampled_contact(
                            seed,
                            NodeId(sat as u32),
                            NodeId((n_sats + si) as u32),
                            start,
                            t,
                            LinkKind::Sgl,
                            rules.sgl_rate_mbps,
                            rules.sgl_delay_ms,
                        )?);
                    }
                    _ => {}
                }
            }
        }
        k += 1;
    }
    for (i, slot) in open.iter().enumerate() {
        if let Some(start) = *slot {
            let (si, sat) = (i / n_sats, i % n_sats);
            contacts.push(sampled_contact(
                seed,
                NodeId(sat as u32),
                NodeId((n_sats + si) as u32),
                start,
                horizon.end,
                LinkKind::Sgl,
                rules.sgl_rate_mbps,
                rules.sgl_delay_ms,
            )?);
        }
    }
    ContactPlan::new(horizon, contacts)
}

/// Satellite and terminal node records for a constellation plus sites, with
/// all capability vectors zeroed.
pub fn build_nodes(spec: &ConstellationSpec, sites: &[GroundSite], kb_count: usize) -> Vec<NodeSpec> {
    let n = spec.sat_count();
    (0..n)
        .map(|i| NodeSpec::satellite(NodeId(i as u32), kb_count))
        .chain(
            sites
                .iter()
                .enumerate()
                .map(|(i, s)| NodeSpec::terminal(NodeId((n + i) as u32), s.name.clone(), kb_count)),
        )
        .collect()
}

/// Marks `round(ai_fraction * satellites)` randomly chosen satellites as AI
/// satellites. Each gets `slots` model slots and one knowledge base drawn
/// uniformly; with two or more slots it hosts both the encoder and decoder
/// for that base, otherwise one role at random.
pub fn assign_ai_capabilities(
    nodes: &[NodeSpec],
    catalog: &KnowledgeBaseCatalog,
    ai_fraction: f64,
    slots: u32,
    seed: u64,
) -> Result<Vec<NodeSpec>> {
    if !(0.0..=1.0).contains(&ai_fraction) {
        return Err(Error::Config(format!("ai fraction {ai_fraction} outside [0, 1]")));
    }
    let sat_idx: Vec<usize> = nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.kind.is_satellite())
        .map(|(i, _)| i)
        .collect();
    let count = (ai_fraction * sat_idx.len() as f64).round() as usize;
    if count > 0 && (catalog.is_empty() || slots == 0) {
        return Err(Error::Config(
            "AI satellites need a non-empty catalog and at least one slot".into(),
        ));
    }

    let mut out: Vec<NodeSpec> = nodes.to_vec();
    for &i in &sat_idx {
        let n = &mut out[i];
        n.kind = NodeKind::CommSat;
        n.encoder_caps = vec![0; catalog.len()];
        n.decoder_caps = vec![0; catalog.len()];
        n.compute_capacity = 0;
    }

    let mut rng = stream_rng(seed, Stream::Capabilities);
    let mut chosen = index::sample(&mut rng, sat_idx.len(), count).into_vec();
    chosen.sort_unstable();
    for c in chosen {
        let n = &mut out[sat_idx[c]];
        n.kind = NodeKind::AiSat;
        n.compute_capacity = slots;
        let kb = rng.gen_range(0..catalog.len());
        if slots >= 2 {
            n.encoder_caps[kb] = 1;
            n.decoder_caps[kb] = 1;
        } else if rng.gen_bool(0.5) {
            n.encoder_caps[kb] = 1;
        } else {
            n.decoder_caps[kb] = 1;
        }
    }
    Ok(out)
}
