//! Line-oriented text formats.
//!
//! All formats are comma separated, one record per line. Lines starting with
//! `#` are comments unless noted. Floats are written in Rust's shortest
//! round-trip form, so every file reads back to identical values.
//!
//! Contact plan:
//! ```text
//! # horizon,<start_s>,<end_s>
//! node_a,node_b,start,end,rate_mbps,delay_ms,kind
//! 0,1,0,3600,312.5,7.25,ISL
//! ```
//!
//! Windows: `index,start,end`.
//!
//! Snapshot (plus optional applications):
//! ```text
//! window,<index>,<start>,<end>
//! node,<id>,<name>,<kind>,<slots>,<encoder caps ;-separated>,<decoder caps>
//! link,<a>,<b>,<rate_mbps>,<residual_mbps>,<delay_ms>,<kind>
//! app,<id>,<case 1-4>,<src>,<dst>,<rate_mbps>,<kb>,<ratio or ->
//! ```
//!
//! Route records:
//! `app_id,window,case_type,method,path,encoder,decoder,occupied_mbps,delay_ms,status,fallback`
//! with the path as `-`-joined node ids and `-` for an absent codec or path.
//!
//! Deployment plan: `# key=value` header lines (solver, objective,
//! occupied_mbps, gap, infeasible) followed by `node,kb,role` records.
//!
//! Metrics: `case_type,method,mean_occupied_mbps,mean_delay_ms,routed,blocked`.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::deployment::{Assignment, DeploymentPlan, Solver};
use crate::error::{Error, Result};
use crate::geometry::{Contact, ContactPlan, GroundSite, Horizon, LinkKind};
use crate::routing::{Application, CaseType, Method, UnroutableReason};
use crate::scenario::{MetricsReport, MetricsRow, RouteRecord};
use crate::temporal::{SnapshotGraph, SnapshotLink, TimeWindow};
use crate::types::{ModelRole, NodeId, NodeKind, NodeSpec};

pub const CONTACT_HEADER: &str = "node_a,node_b,start,end,rate_mbps,delay_ms,kind";
pub const WINDOW_HEADER: &str = "index,start,end";
pub const ROUTE_HEADER: &str =
    "app_id,window,case_type,method,path,encoder,decoder,occupied_mbps,delay_ms,status,fallback";
pub const PLAN_HEADER: &str = "node,kb,role";
pub const METRICS_HEADER: &str = "case_type,method,mean_occupied_mbps,mean_delay_ms,routed,blocked";

/// Non-empty, non-comment lines with their 1-based numbers, skipping the
/// given header if present.
fn records<'a>(text: &'a str, header: &'a str) -> impl Iterator<Item = (usize, &'a str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(move |(_, l)| !l.is_empty() && !l.starts_with('#') && *l != header)
}

fn fields(line: usize, text: &str, n: usize) -> Result<Vec<&str>> {
    let f: Vec<&str> = text.split(',').map(str::trim).collect();
    if f.len() != n {
        return Err(Error::parse(
            line,
            format!("expected {n} fields, found {}", f.len()),
        ));
    }
    Ok(f)
}

fn num<T: FromStr>(line: usize, s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("bad {what} `{s}`")))
}

fn check_name(name: &str) -> Result<()> {
    if name.contains([',', '\n']) || name.trim() != name || name.is_empty() {
        return Err(Error::Validation(format!("node name `{name}` cannot be written")));
    }
    Ok(())
}

pub fn parse_sites(text: &str) -> Result<Vec<GroundSite>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("name")) {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(Error::parse(i + 1, "expected name,latitude,longitude"));
        }
        let lat = f[1].parse().map_err(|_| Error::parse(i + 1, "bad latitude"))?;
        let lon = f[2].parse().map_err(|_| Error::parse(i + 1, "bad longitude"))?;
        out.push(GroundSite::new(f[0], lat, lon)?);
    }
    Ok(out)
}

pub fn write_contact_plan(plan: &ContactPlan) -> String {
    let mut s = format!(
        "# horizon,{},{}\n{CONTACT_HEADER}\n",
        plan.horizon.start, plan.horizon.end
    );
    for c in plan.contacts() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            c.node_a, c.node_b, c.start, c.end, c.rate_mbps, c.delay_ms, c.kind
        );
    }
    s
}

pub fn parse_contact_plan(text: &str) -> Result<ContactPlan> {
    let mut horizon = None;
    for (i, line) in text.lines().enumerate() {
        if let Some(rest) = line.trim().strip_prefix("# horizon,") {
            let f = fields(i + 1, rest, 2)?;
            horizon = Some(Horizon::new(
                num(i + 1, f[0], "horizon start")?,
                num(i + 1, f[1], "horizon end")?,
            ));
        }
    }
    let horizon = horizon.ok_or_else(|| Error::parse(1, "missing `# horizon,<start>,<end>` line"))?;
    let mut contacts = Vec::new();
    for (ln, line) in records(text, CONTACT_HEADER) {
        let f = fields(ln, line, 7)?;
        let kind: LinkKind = f[6].parse().map_err(|_| Error::parse(ln, "bad link kind"))?;
        let c = Contact::new(
            num(ln, f[0], "node id")?,
            num(ln, f[1], "node id")?,
            num(ln, f[2], "start")?,
            num(ln, f[3], "end")?,
            num(ln, f[4], "rate")?,
            num(ln, f[5], "delay")?,
            kind,
        )
        .map_err(|e| Error::parse(ln, e.to_string()))?;
        contacts.push(c);
    }
    ContactPlan::new(horizon, contacts)
}

pub fn write_windows(windows: &[TimeWindow]) -> String {
    let mut s = format!("{WINDOW_HEADER}\n");
    for w in windows {
        let _ = writeln!(s, "{},{},{}", w.index, w.start, w.end);
    }
    s
}

pub fn parse_windows(text: &str) -> Result<Vec<TimeWindow>> {
    records(text, WINDOW_HEADER)
        .map(|(ln, line)| {
            let f = fields(ln, line, 3)?;
            Ok(TimeWindow::new(
                num(ln, f[0], "index")?,
                num(ln, f[1], "start")?,
                num(ln, f[2], "end")?,
            ))
        })
        .collect()
}

fn join_caps(caps: &[u32]) -> String {
    caps.iter().map(u32::to_string).collect::<Vec<_>>().join(";")
}

fn split_caps(ln: usize, s: &str) -> Result<Vec<u32>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(|c| num(ln, c, "capability count")).collect()
}

/// A snapshot plus the applications to route on it.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFile {
    pub snapshot: SnapshotGraph,
    pub apps: Vec<Application>,
}

pub fn write_snapshot(snapshot: &SnapshotGraph, apps: &[Application]) -> Result<String> {
    let w = snapshot.window;
    let mut s = format!("window,{},{},{}\n", w.index, w.start, w.end);
    for n in snapshot.nodes() {
        check_name(&n.name)?;
        let _ = writeln!(
            s,
            "node,{},{},{},{},{},{}",
            n.id,
            n.name,
            n.kind,
            n.compute_capacity,
            join_caps(&n.encoder_caps),
            join_caps(&n.decoder_caps)
        );
    }
    for l in snapshot.links() {
        let _ = writeln!(
            s,
            "link,{},{},{},{},{},{}",
            l.a, l.b, l.rate_mbps, l.residual_mbps, l.delay_ms, l.kind
        );
    }
    for a in apps {
        let ratio = a.ratio.map_or("-".to_string(), |r| r.to_string());
        let _ = writeln!(
            s,
            "app,{},{},{},{},{},{},{}",
            a.id, a.case, a.src, a.dst, a.rate_mbps, a.kb, ratio
        );
    }
    Ok(s)
}

pub fn parse_snapshot(text: &str) -> Result<SnapshotFile> {
    let mut window = None;
    let mut nodes = Vec::new();
    let mut links = Vec::new();
    let mut apps = Vec::new();
    for (ln, line) in records(text, "") {
        let tag = line.split(',').next().unwrap_or_default();
        match tag {
            "window" => {
                let f = fields(ln, line, 4)?;
                window = Some(TimeWindow::new(
                    num(ln, f[1], "index")?,
                    num(ln, f[2], "start")?,
                    num(ln, f[3], "end")?,
                ));
            }
            "node" => {
                let f = fields(ln, line, 7)?;
                let kind: NodeKind = f[3].parse().map_err(|_| Error::parse(ln, "bad node kind"))?;
                let encoder_caps = split_caps(ln, f[5])?;
                let decoder_caps = split_caps(ln, f[6])?;
                if encoder_caps.len() != decoder_caps.len() {
                    return Err(Error::parse(ln, "capability vectors differ in length"));
                }
                let node = NodeSpec {
                    id: num(ln, f[1], "node id")?,
                    name: f[2].to_string(),
                    kind,
                    encoder_caps,
                    decoder_caps,
                    compute_capacity: num(ln, f[4], "slot count")?,
                };
                node.validate(node.kb_count())
                    .map_err(|e| Error::parse(ln, e.to_string()))?;
                nodes.push(node);
            }
            "link" => {
                let f = fields(ln, line, 7)?;
                links.push(SnapshotLink {
                    a: num(ln, f[1], "node id")?,
                    b: num(ln, f[2], "node id")?,
                    rate_mbps: num(ln, f[3], "rate")?,
                    residual_mbps: num(ln, f[4], "residual")?,
                    delay_ms: num(ln, f[5], "delay")?,
                    kind: f[6].parse().map_err(|_| Error::parse(ln, "bad link kind"))?,
                });
            }
            "app" => {
                let f = fields(ln, line, 8)?;
                let ratio = match f[7] {
                    "-" => None,
                    r => Some(num(ln, r, "ratio")?),
                };
                apps.push(Application {
                    id: num(ln, f[1], "app id")?,
                    case: f[2].parse().map_err(|e: Error| Error::parse(ln, e.to_string()))?,
                    src: num(ln, f[3], "node id")?,
                    dst: num(ln, f[4], "node id")?,
                    rate_mbps: num(ln, f[5], "rate")?,
                    kb: num(ln, f[6], "knowledge base")?,
                    ratio,
                });
            }
            other => return Err(Error::parse(ln, format!("unknown record `{other}`"))),
        }
    }
    let window = window.ok_or_else(|| Error::parse(1, "missing window record"))?;
    if let Some(k) = nodes.first().map(NodeSpec::kb_count) {
        if nodes.iter().any(|n| n.kb_count() != k) {
            return Err(Error::Validation("nodes disagree on catalog size".into()));
        }
        for a in &apps {
            a.validate(k)?;
        }
    }
    let snapshot = SnapshotGraph::from_parts(window, nodes, links)?;
    Ok(SnapshotFile { snapshot, apps })
}

/// One line of a route record file.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteLine {
    pub app_id: u32,
    pub window: usize,
    pub case: CaseType,
    pub method: Method,
    pub path: Vec<NodeId>,
    pub encoder: Option<NodeId>,
    pub decoder: Option<NodeId>,
    pub occupied_mbps: f64,
    pub delay_ms: f64,
    /// `None` when admitted, otherwise why routing failed.
    pub unroutable: Option<UnroutableReason>,
    pub fallback: bool,
}

impl From<&RouteRecord> for RouteLine {
    fn from(r: &RouteRecord) -> Self {
        let (path, encoder, decoder, occ, delay, unroutable) = match &r.outcome {
            Ok(p) => (
                p.nodes.clone(),
                p.encoder.map(|c| c.node),
                p.decoder.map(|c| c.node),
                p.occupied_mbps,
                p.delay_ms,
                None,
            ),
            Err(reason) => (Vec::new(), None, None, 0.0, 0.0, Some(*reason)),
        };
        RouteLine {
            app_id: r.app_id,
            window: r.window,
            case: r.case,
            method: r.method,
            path,
            encoder,
            decoder,
            occupied_mbps: occ,
            delay_ms: delay,
            unroutable,
            fallback: r.fallback,
        }
    }
}

fn opt_node(n: Option<NodeId>) -> String {
    n.map_or("-".to_string(), |n| n.to_string())
}

fn parse_opt_node(ln: usize, s: &str) -> Result<Option<NodeId>> {
    match s {
        "-" => Ok(None),
        s => Ok(Some(num(ln, s, "node id")?)),
    }
}

pub fn format_route_line(r: &RouteLine) -> String {
    let path = if r.path.is_empty() {
        "-".to_string()
    } else {
        r.path.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("-")
    };
    let status = r
        .unroutable
        .map_or("admitted".to_string(), |u| format!("unroutable:{u}"));
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.app_id,
        r.window,
        r.case,
        r.method,
        path,
        opt_node(r.encoder),
        opt_node(r.decoder),
        r.occupied_mbps,
        r.delay_ms,
        status,
        r.fallback
    )
}

pub fn write_route_records<'a>(lines: impl IntoIterator<Item = &'a RouteLine>) -> String {
    let mut s = format!("{ROUTE_HEADER}\n");
    for l in lines {
        s.push_str(&format_route_line(l));
        s.push('\n');
    }
    s
}

fn parse_reason(ln: usize, s: &str) -> Result<UnroutableReason> {
    match s {
        "disconnected" => Ok(UnroutableReason::Disconnected),
        "noMatchingKB" => Ok(UnroutableReason::NoMatchingKb),
        "insufficientCapacity" => Ok(UnroutableReason::InsufficientCapacity),
        other => Err(Error::parse(ln, format!("unknown unroutable reason `{other}`"))),
    }
}

pub fn parse_route_records(text: &str) -> Result<Vec<RouteLine>> {
    records(text, ROUTE_HEADER)
        .map(|(ln, line)| {
            let f = fields(ln, line, 11)?;
            let path = match f[4] {
                "-" => Vec::new(),
                p => p
                    .split('-')
                    .map(|n| num(ln, n, "node id"))
                    .collect::<Result<_>>()?,
            };
            let unroutable = match f[9] {
                "admitted" => None,
                s => Some(parse_reason(
                    ln,
                    s.strip_prefix("unroutable:")
                        .ok_or_else(|| Error::parse(ln, format!("bad status `{s}`")))?,
                )?),
            };
            Ok(RouteLine {
                app_id: num(ln, f[0], "app id")?,
                window: num(ln, f[1], "window")?,
                case: f[2].parse().map_err(|e: Error| Error::parse(ln, e.to_string()))?,
                method: f[3].parse().map_err(|e: Error| Error::parse(ln, e.to_string()))?,
                path,
                encoder: parse_opt_node(ln, f[5])?,
                decoder: parse_opt_node(ln, f[6])?,
                occupied_mbps: num(ln, f[7], "occupied bandwidth")?,
                delay_ms: num(ln, f[8], "delay")?,
                unroutable,
                fallback: num(ln, f[10], "fallback flag")?,
            })
        })
        .collect()
}

pub fn write_deployment_plan(plan: &DeploymentPlan) -> String {
    let infeasible = plan
        .infeasible
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(";");
    let mut s = format!(
        "# solver={}\n# objective={}\n# occupied_mbps={}\n",
        plan.solver, plan.objective, plan.occupied_mbps
    );
    if let Some(g) = plan.gap {
        let _ = writeln!(s, "# gap={g}");
    }
    let _ = writeln!(s, "# infeasible={infeasible}\n{PLAN_HEADER}");
    for a in &plan.assignments {
        let _ = writeln!(s, "{},{},{}", a.node, a.kb, a.role);
    }
    s
}

pub fn parse_deployment_plan(text: &str) -> Result<DeploymentPlan> {
    let mut solver = None;
    let mut objective = None;
    let mut occupied = None;
    let mut gap = None;
    let mut infeasible = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let Some(kv) = line.trim().strip_prefix('#') else {
            continue;
        };
        let Some((k, v)) = kv.trim().split_once('=') else {
            continue;
        };
        let ln = i + 1;
        match k {
            "solver" => solver = Some(Solver::from_str(v).map_err(|e| Error::parse(ln, e.to_string()))?),
            "objective" => objective = Some(num(ln, v, "objective")?),
            "occupied_mbps" => occupied = Some(num(ln, v, "occupied bandwidth")?),
            "gap" => gap = Some(num(ln, v, "gap")?),
            "infeasible" if !v.is_empty() => {
                infeasible = v
                    .split(';')
                    .map(|x| num(ln, x, "app id"))
                    .collect::<Result<_>>()?
            }
            _ => {}
        }
    }
    let mut assignments = records(text, PLAN_HEADER)
        .map(|(ln, line)| {
            let f = fields(ln, line, 3)?;
            Ok(Assignment {
                node: num(ln, f[0], "node id")?,
                kb: num(ln, f[1], "knowledge base")?,
                role: ModelRole::from_str(f[2]).map_err(|e| Error::parse(ln, e.to_string()))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    assignments.sort();
    Ok(DeploymentPlan {
        assignments,
        objective: objective.ok_or_else(|| Error::parse(1, "missing objective"))?,
        occupied_mbps: occupied.ok_or_else(|| Error::parse(1, "missing occupied_mbps"))?,
        infeasible,
        solver: solver.ok_or_else(|| Error::parse(1, "missing solver"))?,
        gap,
    })
}

pub fn write_metrics(report: &MetricsReport) -> String {
    let mut s = format!("{METRICS_HEADER}\n");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.case, r.method, r.mean_occupied_mbps, r.mean_delay_ms, r.routed, r.blocked
        );
    }
    s
}

pub fn parse_metrics(text: &str) -> Result<MetricsReport> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == METRICS_HEADER => {}
        _ => return Err(Error::parse(1, format!("expected header `{METRICS_HEADER}`"))),
    }
    let rows = lines
        .map(|(i, line)| {
            let ln = i + 1;
            let f = fields(ln, line, 6)?;
            Ok(MetricsRow {
                case: f[0].parse().map_err(|e: Error| Error::parse(ln, e.to_string()))?,
                method: f[1].parse().map_err(|e: Error| Error::parse(ln, e.to_string()))?,
                mean_occupied_mbps: num(ln, f[2], "mean occupied bandwidth")?,
                mean_delay_ms: num(ln, f[3], "mean delay")?,
                routed: num(ln, f[4], "routed count")?,
                blocked: num(ln, f[5], "blocked count")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport { rows })
}

/// `key: value` lines summarizing a report.
pub fn write_summary(report: &MetricsReport, extra: &[(&str, String)]) -> String {
    let mut s = String::from("{\n");
    let _ = writeln!(s, "  overall_reduction: {}", report.overall_reduction());
    if let Ok(c) = crate::scenario::compare_methods(report) {
        for (i, r) in c.reductions.iter().enumerate() {
            let _ = writeln!(s, "  reduction_type{}: {r}", i + 1);
        }
        let _ = writeln!(s, "  type1_largest_reduction: {}", c.type1_max);
        let _ = writeln!(s, "  type4_smallest_reduction: {}", c.type4_min);
    }
    for (k, v) in extra {
        let _ = writeln!(s, "  {k}: {v}");
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{detour_snapshot, staggered_plan};

    #[test]
    fn fixtures_round_trip() {
        let plan = staggered_plan();
        assert_eq!(parse_contact_plan(&write_contact_plan(&plan)).unwrap(), plan);

        let snap = detour_snapshot();
        let apps = vec![Application {
            id: 3,
            case: CaseType::ReceiverDecodes,
            src: NodeId(5),
            dst: NodeId(6),
            rate_mbps: 20.0,
            kb: 0,
            ratio: Some(0.25),
        }];
        let text = write_snapshot(&snap, &apps).unwrap();
        let back = parse_snapshot(&text).unwrap();
        assert_eq!(back.snapshot, snap);
        assert_eq!(back.apps, apps);
    }

    #[test]
    fn malformed_inputs_name_the_line() {
        let err = parse_contact_plan(
            "# horizon,0,10\nnode_a,node_b,start,end,rate_mbps,delay_ms,kind\n0,1,0,5,300\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(parse_contact_plan("0,1,0,5,300,5,ISL\n").is_err());
        let err = parse_snapshot("window,0,0,60\nbogus,1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse_snapshot("window,0,0,60\napp,1,5,0,1,10,0,-\n").is_err());
        assert!(parse_metrics("a,b\n").is_err());
    }

    #[test]
    fn deployment_plan_round_trip() {
        let plan = DeploymentPlan {
            assignments: vec![
                Assignment {
                    node: NodeId(2),
                    kb: 1,
                    role: ModelRole::Decoder,
                },
                Assignment {
                    node: NodeId(4),
                    kb: 0,
                    role: ModelRole::Encoder,
                },
            ],
            objective: 123.456,
            occupied_mbps: 123.456,
            infeasible: vec![7, 9],
            solver: Solver::Greedy,
            gap: Some(0.125),
        };
        assert_eq!(
            parse_deployment_plan(&write_deployment_plan(&plan)).unwrap(),
            plan
        );
        let empty = DeploymentPlan {
            assignments: vec![],
            infeasible: vec![],
            gap: None,
            solver: Solver::Exact,
            ..plan
        };
        assert_eq!(
            parse_deployment_plan(&write_deployment_plan(&empty)).unwrap(),
            empty
        );
    }

    #[test]
    fn route_line_round_trip() {
        let lines = vec![
            RouteLine {
                app_id: 1,
                window: 2,
                case: CaseType::ReceiverDecodes,
                method: Method::Gsc,
                path: vec![NodeId(5), NodeId(0), NodeId(6)],
                encoder: Some(NodeId(0)),
                decoder: Some(NodeId(6)),
                occupied_mbps: 0.1 + 0.2,
                delay_ms: 10.0,
                unroutable: None,
                fallback: false,
            },
            RouteLine {
                app_id: 2,
                window: 2,
                case: CaseType::SatelliteCodec,
                method: Method::Gsc,
                path: vec![],
                encoder: None,
                decoder: None,
                occupied_mbps: 0.0,
                delay_ms: 0.0,
                unroutable: Some(UnroutableReason::NoMatchingKb),
                fallback: true,
            },
        ];
        assert_eq!(parse_route_records(&write_route_records(&lines)).unwrap(), lines);
        assert!(format_route_line(&lines[1]).contains("unroutable:noMatchingKB"));
    }

    #[test]
    fn metrics_csv_has_fixed_header() {
        let report = crate::scenario::MetricsAccumulator::default().report();
        let text = write_metrics(&report);
        assert!(text.starts_with(METRICS_HEADER));
        assert_eq!(text.lines().count(), 9);
        assert_eq!(parse_metrics(&text).unwrap(), report);
    }
}
