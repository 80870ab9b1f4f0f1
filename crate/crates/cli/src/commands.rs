use std::io::Write;
use std::path::{Path, PathBuf};

use gsc_core::deployment::{relative_gap, solve, solve_exact, DeploymentPlan, DeploymentProblem, Solver};
use gsc_core::io::{
    format_route_line, parse_metrics, parse_snapshot, write_contact_plan, write_deployment_plan,
    write_metrics, write_route_records, write_summary, write_windows, RouteLine, SnapshotFile,
};
use gsc_core::routing::{route_with, Objective};
use gsc_core::scenario::{compare_methods, run_experiment_with, MetricsReport};
use gsc_core::{Application, CaseType, CompressionProfile, Error, Method, NodeId, RoutePlan, SnapshotGraph};

use crate::{read_input, write_atomic, CliError, RunConfig};

pub const CONTACTS_FILE: &str = "contacts.csv";
pub const WINDOWS_FILE: &str = "windows.csv";
pub const ROUTES_FILE: &str = "routes.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const PLAN_FILE: &str = "plan.csv";

fn emit(out: &mut dyn Write, text: impl std::fmt::Display) -> Result<(), CliError> {
    writeln!(out, "{text}").map_err(CliError::runtime)
}

/// Runs the full experiment and writes contact plan, windows, route
/// records, metrics and summary into `out_dir`. Fails with a runtime error
/// (after writing) when no application could be routed at all.
pub fn simulate(cfg: &RunConfig, out_dir: &Path, out: &mut dyn Write) -> Result<MetricsReport, CliError> {
    let exp = cfg.experiment()?;
    let extra = cfg.extra_plan()?;
    let outcome = run_experiment_with(&exp, extra.as_ref()).map_err(|e| match e {
        Error::Config(_) | Error::Parse { .. } => CliError::usage(e),
        other => CliError::runtime(other),
    })?;

    let lines: Vec<RouteLine> = outcome.records.iter().map(RouteLine::from).collect();
    let stats = [
        ("seed", exp.seed.to_string()),
        ("satellites", exp.constellation.sat_count().to_string()),
        ("terminals", exp.sites.len().to_string()),
        ("contacts", outcome.plan.len().to_string()),
        ("windows", outcome.windows.len().to_string()),
        ("applications", outcome.apps.len().to_string()),
        ("routed", outcome.report.routed_total().to_string()),
        ("fallbacks", outcome.metrics.fallbacks().to_string()),
    ];
    write_atomic(&out_dir.join(CONTACTS_FILE), &write_contact_plan(&outcome.plan))?;
    write_atomic(&out_dir.join(WINDOWS_FILE), &write_windows(&outcome.windows))?;
    write_atomic(&out_dir.join(ROUTES_FILE), &write_route_records(&lines))?;
    write_atomic(&out_dir.join(METRICS_FILE), &write_metrics(&outcome.report))?;
    write_atomic(
        &out_dir.join(SUMMARY_FILE),
        &write_summary(&outcome.report, &stats),
    )?;

    for d in &outcome.diagnostics {
        log::warn!("{d}");
    }
    emit(out, format_report(&outcome.report))?;
    emit(out, format!("outputs written to {}", out_dir.display()))?;
    if outcome.report.routed_total() == 0 {
        return Err(CliError::Runtime(
            "no application was routable in any window".into(),
        ));
    }
    Ok(outcome.report)
}

fn load_snapshot(path: &Path) -> Result<SnapshotFile, CliError> {
    parse_snapshot(&read_input(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn profile_for(cfg: &RunConfig, snapshot: &SnapshotGraph) -> CompressionProfile {
    let k = snapshot.nodes().first().map_or(0, |n| n.kb_count());
    CompressionProfile {
        ratios: vec![1.0; k],
        encode_latency_ms: vec![cfg.compression.encode_latency_ms; k],
        decode_latency_ms: vec![cfg.compression.decode_latency_ms; k],
    }
}

fn require_ratios(apps: &[Application]) -> Result<(), CliError> {
    match apps.iter().find(|a| a.ratio.is_none()) {
        Some(a) => Err(CliError::Usage(format!(
            "application {} has no compression ratio",
            a.id
        ))),
        None => Ok(()),
    }
}

/// Chooses model placements for the applications of a snapshot file over
/// every AI satellite in it and writes the plan to `out_dir`. Greedy plans
/// carry their gap to the exact optimum when that is small enough to
/// enumerate.
pub fn plan(
    cfg: &RunConfig,
    snapshot: &Path,
    solver: Solver,
    out_dir: &Path,
    out: &mut dyn Write,
) -> Result<DeploymentPlan, CliError> {
    let file = load_snapshot(snapshot)?;
    require_ratios(&file.apps)?;
    let profile = profile_for(cfg, &file.snapshot);
    let candidates = DeploymentProblem::all_ai_candidates(&file.snapshot);
    let mut problem = DeploymentProblem::new(
        file.snapshot,
        candidates,
        file.apps,
        profile,
        cfg.deployment.delay_bound_ms,
    );
    problem.penalty_hops = cfg.deployment.penalty_hops;
    problem.weights = cfg.weights();
    problem.validate().map_err(CliError::usage)?;

    let mut plan = solve(&problem, solver).map_err(CliError::runtime)?;
    if solver == Solver::Greedy {
        match solve_exact(&problem) {
            Ok(exact) => plan.gap = Some(relative_gap(plan.objective, exact.objective)),
            Err(Error::TooLarge(n)) => {
                log::warn!("no gap reported: exact reference would score {n} combinations")
            }
            Err(e) => return Err(CliError::runtime(e)),
        }
    }
    let path = out_dir.join(PLAN_FILE);
    write_atomic(&path, &write_deployment_plan(&plan))?;
    emit(
        out,
        format!(
            "{} plan: {} assignments, objective {}, {} infeasible{}",
            plan.solver,
            plan.assignments.len(),
            plan.objective,
            plan.infeasible.len(),
            plan.gap.map_or(String::new(), |g| format!(", gap {g}"))
        ),
    )?;
    emit(out, format!("written to {}", path.display()))?;
    Ok(plan)
}

/// Which application [`route`] should route.
#[derive(Debug, Clone, PartialEq)]
pub enum AppSpec {
    /// An `app` record of the snapshot file.
    FromFile(u32),
    Inline {
        case: CaseType,
        /// Node id or name.
        src: String,
        dst: String,
        rate_mbps: f64,
        kb: usize,
        ratio: Option<f64>,
    },
}

fn resolve_node(snapshot: &SnapshotGraph, s: &str) -> Result<NodeId, CliError> {
    if let Ok(id) = s.parse::<NodeId>() {
        if snapshot.node(id).is_some() {
            return Ok(id);
        }
    }
    snapshot
        .find_by_name(s)
        .map(|n| n.id)
        .ok_or_else(|| CliError::Usage(format!("no node `{s}` in the snapshot")))
}

fn node_label(snapshot: &SnapshotGraph, id: NodeId) -> String {
    match snapshot.node(id) {
        Some(n) if n.name != id.to_string() => format!("{}({id})", n.name),
        _ => id.to_string(),
    }
}

/// Routes one application on a snapshot file, after applying the deployment
/// plan named by the configuration (if any). Prints a readable description
/// and the route record line; an unroutable query is a runtime error whose
/// message is `unroutable: <reason>`.
pub fn route(
    cfg: &RunConfig,
    snapshot: &Path,
    app: &AppSpec,
    method: Method,
    out: &mut dyn Write,
) -> Result<RoutePlan, CliError> {
    let file = load_snapshot(snapshot)?;
    let mut snap = file.snapshot;
    if let Some(p) = cfg.extra_plan()? {
        snap = gsc_core::deployment::apply_plan(&p, std::slice::from_ref(&snap))
            .map_err(CliError::usage)?
            .remove(0);
    }
    let app = match app {
        AppSpec::FromFile(id) => file
            .apps
            .iter()
            .find(|a| a.id == *id)
            .cloned()
            .ok_or_else(|| CliError::Usage(format!("no application {id} in {}", snapshot.display())))?,
        AppSpec::Inline {
            case,
            src,
            dst,
            rate_mbps,
            kb,
            ratio,
        } => Application {
            id: 0,
            case: *case,
            src: resolve_node(&snap, src)?,
            dst: resolve_node(&snap, dst)?,
            rate_mbps: *rate_mbps,
            kb: *kb,
            ratio: *ratio,
        },
    };
    let profile = profile_for(cfg, &snap);
    app.validate(profile.ratios.len()).map_err(CliError::usage)?;
    if method == Method::Gsc {
        require_ratios(std::slice::from_ref(&app))?;
    }

    match route_with(&app, &snap, &profile, method, Objective::DelayFirst) {
        Ok(plan) => {
            emit(out, describe(&snap, &plan))?;
            let record = RouteLine {
                app_id: app.id,
                window: snap.window.index,
                case: app.case,
                method,
                path: plan.nodes.clone(),
                encoder: plan.encoder.map(|c| c.node),
                decoder: plan.decoder.map(|c| c.node),
                occupied_mbps: plan.occupied_mbps,
                delay_ms: plan.delay_ms,
                unroutable: None,
                fallback: false,
            };
            emit(out, format!("record: {}", format_route_line(&record)))?;
            Ok(plan)
        }
        Err(e) => {
            emit(out, format!("unroutable: {}", e.reason))?;
            Err(CliError::Runtime(format!("unroutable: {}", e.reason)))
        }
    }
}

fn describe(snap: &SnapshotGraph, plan: &RoutePlan) -> String {
    let path: Vec<String> = plan.nodes.iter().map(|&n| node_label(snap, n)).collect();
    let codec = |c: Option<gsc_core::routing::CodecPlacement>| match c {
        None => "none".to_string(),
        Some(c) if c.on_satellite => format!("{} (satellite)", node_label(snap, c.node)),
        Some(c) => format!("{} (terminal)", node_label(snap, c.node)),
    };
    let stages: Vec<&str> = plan.hops.iter().map(|h| h.stage.as_str()).collect();
    format!(
        "app {} case {} via {}\n  path: {}\n  stages: {}\n  encoder: {}\n  decoder: {}\n  occupied bandwidth: {} Mbps\n  end-to-end delay: {} ms",
        plan.app_id,
        plan.case,
        plan.method,
        path.join(" -> "),
        stages.join(" "),
        codec(plan.encoder),
        codec(plan.decoder),
        plan.occupied_mbps,
        plan.delay_ms
    )
}

/// Table of a metrics report with per-type reductions.
pub fn format_report(report: &MetricsReport) -> String {
    let mut s = format!(
        "{:<6} {:<12} {:>14} {:>12} {:>8} {:>8}\n",
        "type", "method", "mean Mbps", "mean ms", "routed", "blocked"
    );
    for r in &report.rows {
        s.push_str(&format!(
            "{:<6} {:<12} {:>14.3} {:>12.3} {:>8} {:>8}\n",
            r.case.to_string(),
            r.method.to_string(),
            r.mean_occupied_mbps,
            r.mean_delay_ms,
            r.routed,
            r.blocked
        ));
    }
    s.push_str(&format!(
        "overall bandwidth reduction: {:.4}",
        report.overall_reduction()
    ));
    if let Ok(c) = compare_methods(report) {
        let per: Vec<String> = c.reductions.iter().map(|r| format!("{r:.4}")).collect();
        s.push_str(&format!(
            "\nper-type reduction: {}\ntype 1 largest: {}, type 4 smallest: {}",
            per.join(" "),
            c.type1_max,
            c.type4_min
        ));
    }
    s
}

/// Prints a metrics CSV produced by [`simulate`].
pub fn report(metrics: &Path, out: &mut dyn Write) -> Result<MetricsReport, CliError> {
    let report = parse_metrics(&read_input(metrics)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", metrics.display())))?;
    emit(out, format_report(&report))?;
    Ok(report)
}

/// The metrics file a `report` invocation reads: an explicit path or the
/// one inside an output directory.
pub fn metrics_path(explicit: Option<PathBuf>, out_dir: &Path) -> PathBuf {
    explicit.unwrap_or_else(|| out_dir.join(METRICS_FILE))
}
