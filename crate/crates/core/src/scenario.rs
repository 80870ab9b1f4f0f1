//! End-to-end experiment: constellation, contacts, windows, workload, and a
//! per-window comparison of semantic routing against the raw baseline.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use crate::deployment::{apply_to_nodes, DeploymentPlan};
use crate::error::{Error, Result};
use crate::geometry::{
    assign_ai_capabilities, build_nodes, bundled_sites, compute_contacts, ConstellationSpec, ContactPlan,
    GroundSite, Horizon, VisibilityRules,
};
use crate::rng::{stream_rng, Stream};
use crate::routing::{
    admit, route_with, Application, CaseType, CompressionProfile, Method, Objective, RoutePlan,
    UnroutableReason,
};
use crate::temporal::{build_snapshot, discretize, DiscretizationConfig, SnapshotGraph, TimeWindow};
use crate::types::{KnowledgeBaseCatalog, NodeId, NodeSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub constellation: ConstellationSpec,
    pub visibility: VisibilityRules,
    pub discretization: DiscretizationConfig,
    pub kb_count: usize,
    /// Model slots per AI satellite.
    pub ai_slots: u32,
    /// Compression ratios an application may draw.
    pub ratio_choices: Vec<f64>,
    pub encode_latency_ms: f64,
    pub decode_latency_ms: f64,
    pub app_count: usize,
    pub rate_range_mbps: (f64, f64),
    /// Probability of case types 1 to 4.
    pub case_probabilities: [f64; 4],
    /// Windows simulated; surplus windows at the end of the horizon are
    /// dropped.
    pub window_count: usize,
    /// Simulated span in seconds. Defaults to `window_count × λ`.
    pub horizon_s: Option<f64>,
    pub sites: Vec<GroundSite>,
}

impl ExperimentConfig {
    /// 2,500 satellites (50 planes of 50 at 550 km, 53°), 20% AI, three
    /// knowledge bases, 200 applications over 60 one-minute windows between
    /// the ten bundled sites.
    pub fn reference() -> Self {
        Self {
            seed: 1,
            constellation: ConstellationSpec {
                planes: 50,
                sats_per_plane: 50,
                altitude_km: 550.0,
                inclination_deg: 53.0,
                phasing: 1,
                ai_fraction: 0.2,
            },
            visibility: VisibilityRules::default(),
            discretization: DiscretizationConfig::default(),
            kb_count: 3,
            ai_slots: 2,
            ratio_choices: vec![0.125, 0.25, 0.5],
            encode_latency_ms: 0.0,
            decode_latency_ms: 0.0,
            app_count: 200,
            rate_range_mbps: (5.0, 100.0),
            case_probabilities: [0.25; 4],
            window_count: 60,
            horizon_s: None,
            sites: bundled_sites(),
        }
    }

    pub fn horizon(&self) -> Horizon {
        let end = self
            .horizon_s
            .unwrap_or(self.window_count as f64 * self.discretization.min_duration_s);
        Horizon::new(0.0, end)
    }

    pub fn profile(&self) -> CompressionProfile {
        CompressionProfile {
            ratios: vec![1.0; self.kb_count],
            encode_latency_ms: vec![self.encode_latency_ms; self.kb_count],
            decode_latency_ms: vec![self.decode_latency_ms; self.kb_count],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.constellation.validate()?;
        self.visibility.validate()?;
        if self.kb_count == 0 {
            return Err(Error::Config("knowledge base catalog is empty".into()));
        }
        if self.ratio_choices.is_empty() || self.ratio_choices.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(Error::Config(
                "ratio choices must be non-empty and within (0, 1]".into(),
            ));
        }
        let (lo, hi) = self.rate_range_mbps;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::Config(format!("rate range [{lo}, {hi}] is invalid")));
        }
        let p = &self.case_probabilities;
        if p.iter().any(|&x| !(x >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "case probabilities {p:?} must be non-negative and sum to 1"
            )));
        }
        if !(self.encode_latency_ms >= 0.0 && self.decode_latency_ms >= 0.0) {
            return Err(Error::Config("codec latencies must be non-negative".into()));
        }
        if self.window_count == 0 {
            return Err(Error::Config("window count must be positive".into()));
        }
        let h = self.horizon();
        if !(h.end > 0.0) || !h.end.is_finite() {
            return Err(Error::Config(format!("horizon {} s must be positive", h.end)));
        }
        for s in &self.sites {
            s.validate()?;
        }
        Ok(())
    }

    /// Node id of the terminal at site index `i`.
    pub fn terminal_id(&self, i: usize) -> NodeId {
        NodeId((self.constellation.sat_count() + i) as u32)
    }
}

/// Applications with random endpoints, rates, cases, bases and ratios,
/// drawn from the workload stream of the run seed.
pub fn generate_workload(cfg: &ExperimentConfig) -> Result<Vec<Application>> {
    if cfg.sites.len() < 2 {
        return Err(Error::Config(format!(
            "workload needs at least two sites, got {}",
            cfg.sites.len()
        )));
    }
    let mut rng = stream_rng(cfg.seed, Stream::Workload);
    let n_sites = cfg.sites.len();
    let (lo, hi) = cfg.rate_range_mbps;
    let mut apps = Vec::with_capacity(cfg.app_count);
    for id in 0..cfg.app_count {
        let src = rng.gen_range(0..n_sites);
        let mut dst = rng.gen_range(0..n_sites - 1);
        if dst >= src {
            dst += 1;
        }
        let rate_mbps = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut case = CaseType::SatelliteCodec;
        for (c, &p) in CaseType::ALL.iter().zip(&cfg.case_probabilities) {
            acc += p;
            if u < acc {
                case = *c;
                break;
            }
        }
        let kb = rng.gen_range(0..cfg.kb_count);
        let ratio = cfg.ratio_choices[rng.gen_range(0..cfg.ratio_choices.len())];
        apps.push(Application {
            id: id as u32,
            case,
            src: cfg.terminal_id(src),
            dst: cfg.terminal_id(dst),
            rate_mbps,
            kb,
            ratio: Some(ratio),
        });
    }
    Ok(apps)
}

/// Running totals for one `(case, method)` cell.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CellStats {
    pub occupied_sum: f64,
    pub delay_sum: f64,
    pub routed: usize,
    pub blocked: usize,
    /// Semantic-routing apps carried on the raw baseline because no
    /// matching AI satellite was reachable.
    pub fallback: usize,
}

impl CellStats {
    fn merge(&mut self, o: &CellStats) {
        self.occupied_sum += o.occupied_sum;
        self.delay_sum += o.delay_sum;
        self.routed += o.routed;
        self.blocked += o.blocked;
        self.fallback += o.fallback;
    }
}

/// Totals per `(case, method)`. Merging is done in a fixed order by callers
/// so results do not depend on scheduling.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsAccumulator {
    pub cells: BTreeMap<(CaseType, Method), CellStats>,
}

impl MetricsAccumulator {
    pub fn record(&mut self, case: CaseType, method: Method, plan: Option<&RoutePlan>, fallback: bool) {
        let cell = self.cells.entry((case, method)).or_default();
        match plan {
            Some(p) => {
                cell.occupied_sum += p.occupied_mbps;
                cell.delay_sum += p.delay_ms;
                cell.routed += 1;
            }
            None => cell.blocked += 1,
        }
        if fallback {
            cell.fallback += 1;
        }
    }

    pub fn merge(&mut self, other: &MetricsAccumulator) {
        for (k, v) in &other.cells {
            self.cells.entry(*k).or_default().merge(v);
        }
    }

    pub fn fallbacks(&self) -> usize {
        self.cells.values().map(|c| c.fallback).sum()
    }

    /// One row per case type and method, cases ascending, traditional first.
    pub fn report(&self) -> MetricsReport {
        let mut rows = Vec::new();
        for case in CaseType::ALL {
            for method in [Method::Traditional, Method::Gsc] {
                let c = self.cells.get(&(case, method)).copied().unwrap_or_default();
                let mean = |s: f64| if c.routed > 0 { s / c.routed as f64 } else { 0.0 };
                rows.push(MetricsRow {
                    case,
                    method,
                    mean_occupied_mbps: mean(c.occupied_sum),
                    mean_delay_ms: mean(c.delay_sum),
                    routed: c.routed,
                    blocked: c.blocked,
                });
            }
        }
        MetricsReport { rows }
    }

    /// Occupied bandwidth summed over every admitted app of `method`.
    pub fn total_occupied(&self, method: Method) -> (f64, usize) {
        self.cells
            .iter()
            .filter(|((_, m), _)| *m == method)
            .fold((0.0, 0), |(s, n), (_, c)| (s + c.occupied_sum, n + c.routed))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub case: CaseType,
    pub method: Method,
    pub mean_occupied_mbps: f64,
    pub mean_delay_ms: f64,
    pub routed: usize,
    pub blocked: usize,
}

/// Means over admitted `(app, window)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
}

impl MetricsReport {
    pub fn row(&self, case: CaseType, method: Method) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.case == case && r.method == method)
    }

    /// `1 - mean_gsc / mean_traditional` over all admitted pairs, with means
    /// weighted by routed counts. Zero when the baseline routed nothing.
    pub fn overall_reduction(&self) -> f64 {
        let pooled = |m: Method| {
            let (s, n) = self
                .rows
                .iter()
                .filter(|r| r.method == m)
                .fold((0.0, 0usize), |(s, n), r| {
                    (s + r.mean_occupied_mbps * r.routed as f64, n + r.routed)
                });
            if n > 0 {
                Some(s / n as f64)
            } else {
                None
            }
        };
        match (pooled(Method::Gsc), pooled(Method::Traditional)) {
            (Some(g), Some(t)) if t > 0.0 => 1.0 - g / t,
            _ => 0.0,
        }
    }

    pub fn routed_total(&self) -> usize {
        self.rows.iter().map(|r| r.routed).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Bandwidth reduction per case type, index 0 is case 1.
    pub reductions: [f64; 4],
    /// Case 1 strictly exceeds every other reduction.
    pub type1_max: bool,
    /// Case 4 is strictly below every other reduction.
    pub type4_min: bool,
}

pub fn compare_methods(report: &MetricsReport) -> Result<Comparison> {
    let mut reductions = [0.0; 4];
    for (i, case) in CaseType::ALL.iter().enumerate() {
        let get = |m: Method| {
            report
                .row(*case, m)
                .filter(|r| r.routed > 0)
                .ok_or_else(|| Error::Validation(format!("report has no routed {m} apps of case {case}")))
        };
        let t = get(Method::Traditional)?;
        let g = get(Method::Gsc)?;
        reductions[i] = if t.mean_occupied_mbps > 0.0 {
            1.0 - g.mean_occupied_mbps / t.mean_occupied_mbps
        } else {
            0.0
        };
    }
    let type1_max = reductions[1..].iter().all(|&r| reductions[0] > r);
    let type4_min = reductions[..3].iter().all(|&r| reductions[3] < r);
    Ok(Comparison {
        reductions,
        type1_max,
        type4_min,
    })
}

/// Outcome of routing one app in one window under one method.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteRecord {
    pub window: usize,
    pub method: Method,
    pub app_id: u32,
    pub case: CaseType,
    pub outcome: std::result::Result<RoutePlan, UnroutableReason>,
    /// Semantic routing found no matching AI satellite and the app was
    /// carried raw on the baseline path instead.
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub plan: ContactPlan,
    pub nodes: Vec<NodeSpec>,
    pub windows: Vec<TimeWindow>,
    pub apps: Vec<Application>,
    pub records: Vec<RouteRecord>,
    pub metrics: MetricsAccumulator,
    pub report: MetricsReport,
    pub diagnostics: Vec<String>,
}

/// Routes every app in id order on a fresh copy of the snapshot per method,
/// admitting each routed plan before the next app.
pub fn simulate_window(
    snapshot: &SnapshotGraph,
    apps: &[Application],
    profile: &CompressionProfile,
) -> (Vec<RouteRecord>, MetricsAccumulator) {
    let mut records = Vec::with_capacity(apps.len() * 2);
    let mut acc = MetricsAccumulator::default();
    let mut ordered: Vec<&Application> = apps.iter().collect();
    ordered.sort_by_key(|a| a.id);
    for method in [Method::Traditional, Method::Gsc] {
        let mut snap = snapshot.clone();
        for app in &ordered {
            let mut fallback = false;
            let mut res = route_with(app, &snap, profile, method, Objective::DelayFirst);
            if method == Method::Gsc && app.case != CaseType::BothEnds {
                if let Err(e) = &res {
                    if e.reason == UnroutableReason::NoMatchingKb {
                        fallback = true;
                        res = route_with(app, &snap, profile, Method::Traditional, Objective::DelayFirst);
                    }
                }
            }
            if let Ok(plan) = &res {
                admit(plan, &mut snap).expect("plan was routed on this snapshot");
            }
            acc.record(app.case, method, res.as_ref().ok(), fallback);
            records.push(RouteRecord {
                window: snapshot.window.index,
                method,
                app_id: app.id,
                case: app.case,
                outcome: res.map_err(|e| e.reason),
                fallback,
            });
        }
    }
    (records, acc)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    run_experiment_with(cfg, None)
}

/// [`run_experiment`] with extra model assignments layered on top of the
/// randomly drawn AI capabilities.
pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    extra: Option<&DeploymentPlan>,
) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let apps = generate_workload(cfg)?;
    let catalog = KnowledgeBaseCatalog::with_size(cfg.kb_count);
    let nodes = build_nodes(&cfg.constellation, &cfg.sites, cfg.kb_count);
    let nodes = assign_ai_capabilities(
        &nodes,
        &catalog,
        cfg.constellation.ai_fraction,
        cfg.ai_slots,
        cfg.seed,
    )?;
    let nodes = match extra {
        Some(p) => apply_to_nodes(p, &nodes)?,
        None => nodes,
    };
    let plan = compute_contacts(
        &cfg.constellation,
        &cfg.sites,
        cfg.horizon(),
        &cfg.visibility,
        cfg.seed,
    )?;
    let mut windows = discretize(&plan, &cfg.discretization)?;
    windows.truncate(cfg.window_count);
    let profile = cfg.profile();
    log::info!(
        "{} contacts, {} windows, {} applications",
        plan.len(),
        windows.len(),
        apps.len()
    );

    let per_window: Vec<(Vec<RouteRecord>, MetricsAccumulator)> = windows
        .par_iter()
        .map(|w| {
            let snap = build_snapshot(&plan, *w, &nodes)?;
            Ok(simulate_window(&snap, &apps, &profile))
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    let mut metrics = MetricsAccumulator::default();
    for (r, m) in per_window {
        records.extend(r);
        metrics.merge(&m);
    }
    let report = metrics.report();
    let mut diagnostics = Vec::new();
    if report.routed_total() == 0 {
        diagnostics.push("no application was routable in any window".to_string());
    }
    let fallbacks = metrics.fallbacks();
    if fallbacks > 0 {
        diagnostics.push(format!(
            "{fallbacks} semantic routings fell back to raw transmission for lack of a matching AI satellite"
        ));
    }
    Ok(ExperimentOutcome {
        plan,
        nodes,
        windows,
        apps,
        records,
        metrics,
        report,
        diagnostics,
    })
}
