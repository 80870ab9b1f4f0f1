//! Placement of semantic encoder/decoder models on AI satellites.
//!
//! A plan is a set of `(node, kb, role)` assignments, one model slot each.
//! Plans are scored by routing every application in order on the snapshot
//! augmented with the plan, admitting each routed plan before the next app
//! is considered. Apps that cannot be routed within their delay bound pay a
//! penalty of `rate × penalty_hops`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::routing::{admit, route, Application, CaseType, CompressionProfile};
use crate::temporal::SnapshotGraph;
use crate::types::{ModelRole, NodeId, NodeKind, NodeSpec};

/// Default hop-equivalent multiplier charged for an unroutable app.
pub const DEFAULT_PENALTY_HOPS: f64 = 16.0;

/// Largest number of assignment combinations [`solve_exact`] will score.
pub const EXACT_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment {
    pub node: NodeId,
    pub kb: usize,
    pub role: ModelRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Exact,
    Greedy,
}

impl Solver {
    pub fn as_str(self) -> &'static str {
        match self {
            Solver::Exact => "exact",
            Solver::Greedy => "greedy",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Solver::Exact),
            "greedy" => Ok(Solver::Greedy),
            other => Err(Error::Validation(format!("unknown solver `{other}`"))),
        }
    }
}

/// Weighted sum of total occupied bandwidth (Mbps) and total delay (ms).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub bandwidth: f64,
    pub delay: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            bandwidth: 1.0,
            delay: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentProblem {
    /// Snapshot whose capability vectors are the starting point; plans add
    /// to them.
    pub snapshot: SnapshotGraph,
    pub candidates: Vec<NodeId>,
    pub apps: Vec<Application>,
    pub profile: CompressionProfile,
    /// Delay bound per app, parallel to `apps`.
    pub delay_bounds_ms: Vec<f64>,
    pub penalty_hops: f64,
    pub weights: Weights,
}

impl DeploymentProblem {
    /// Problem with one delay bound shared by every app and default penalty
    /// and weights.
    pub fn new(
        snapshot: SnapshotGraph,
        candidates: Vec<NodeId>,
        apps: Vec<Application>,
        profile: CompressionProfile,
        delay_bound_ms: f64,
    ) -> Self {
        let delay_bounds_ms = vec![delay_bound_ms; apps.len()];
        Self {
            snapshot,
            candidates,
            apps,
            profile,
            delay_bounds_ms,
            penalty_hops: DEFAULT_PENALTY_HOPS,
            weights: Weights::default(),
        }
    }

    /// Every AI satellite of the snapshot becomes a candidate.
    pub fn all_ai_candidates(snapshot: &SnapshotGraph) -> Vec<NodeId> {
        snapshot
            .nodes()
            .iter()
            .filter(|n| n.kind == NodeKind::AiSat)
            .map(|n| n.id)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.delay_bounds_ms.len() != self.apps.len() {
            return Err(Error::Validation(format!(
                "{} delay bounds for {} applications",
                self.delay_bounds_ms.len(),
                self.apps.len()
            )));
        }
        if let Some(b) = self.delay_bounds_ms.iter().find(|&&b| !(b > 0.0)) {
            return Err(Error::Validation(format!("delay bound {b} must be positive")));
        }
        if !(self.penalty_hops >= 0.0) {
            return Err(Error::Validation("penalty hops must be non-negative".into()));
        }
        for &c in &self.candidates {
            match self.snapshot.node(c) {
                None => return Err(Error::Validation(format!("candidate {c} is not in the snapshot"))),
                Some(n) if n.kind != NodeKind::AiSat => return Err(Error::NotAiNode(c)),
                Some(_) => {}
            }
        }
        Ok(())
    }

    fn free_slots(&self, node: NodeId) -> u32 {
        self.snapshot
            .node(node)
            .map(|n| n.compute_capacity.saturating_sub(n.used_slots()))
            .unwrap_or(0)
    }

    /// `(kb, role)` pairs some application could use, in sorted order.
    /// Case 2 needs decoders, Case 3 encoders, Case 4 both; Case 1 none.
    pub fn demanded(&self) -> Vec<(usize, ModelRole)> {
        let mut out = Vec::new();
        for app in &self.apps {
            let roles: &[ModelRole] = match app.case {
                CaseType::BothEnds => &[],
                CaseType::SenderEncodes => &[ModelRole::Decoder],
                CaseType::ReceiverDecodes => &[ModelRole::Encoder],
                CaseType::SatelliteCodec => &[ModelRole::Encoder, ModelRole::Decoder],
            };
            out.extend(roles.iter().map(|&r| (app.kb, r)));
        }
        out.sort();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentPlan {
    /// Sorted, without duplicates.
    pub assignments: Vec<Assignment>,
    pub objective: f64,
    /// Occupied bandwidth of admitted apps plus penalties.
    pub occupied_mbps: f64,
    /// Ids of apps that could not be routed within their delay bound.
    pub infeasible: Vec<u32>,
    pub solver: Solver,
    /// Relative gap to a reference objective, when one was computed.
    pub gap: Option<f64>,
}

/// Scores of one candidate plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub occupied_mbps: f64,
    pub delay_ms: f64,
    pub infeasible: Vec<u32>,
}

fn apply_one(node: &mut NodeSpec, a: &Assignment) -> Result<()> {
    if node.kind != NodeKind::AiSat {
        return Err(Error::NotAiNode(node.id));
    }
    if a.kb >= node.kb_count() {
        return Err(Error::Validation(format!(
            "assignment on {} names knowledge base {} outside the catalog",
            node.id, a.kb
        )));
    }
    let used = node.used_slots() + 1;
    if used > node.compute_capacity {
        return Err(Error::CapacityExceeded {
            node: node.id,
            used,
            capacity: node.compute_capacity,
        });
    }
    node.caps_mut(a.role)[a.kb] += 1;
    Ok(())
}

fn apply_to_snapshot(snapshot: &mut SnapshotGraph, assignments: &[Assignment]) -> Result<()> {
    for a in assignments {
        if let Some(n) = snapshot.node_mut(a.node) {
            apply_one(n, a)?;
        }
    }
    Ok(())
}

/// Returns copies of `snapshots` with the plan's capability increments.
/// Assignments on nodes absent from a snapshot are skipped for it.
pub fn apply_plan(plan: &DeploymentPlan, snapshots: &[SnapshotGraph]) -> Result<Vec<SnapshotGraph>> {
    snapshots
        .iter()
        .map(|s| {
            let mut s = s.clone();
            apply_to_snapshot(&mut s, &plan.assignments)?;
            Ok(s)
        })
        .collect()
}

/// Node-list variant of [`apply_plan`]; every assignment must name a node
/// in `nodes`.
pub fn apply_to_nodes(plan: &DeploymentPlan, nodes: &[NodeSpec]) -> Result<Vec<NodeSpec>> {
    let mut out = nodes.to_vec();
    for a in &plan.assignments {
        let n = out
            .iter_mut()
            .find(|n| n.id == a.node)
            .ok_or_else(|| Error::Validation(format!("assignment names unknown node {}", a.node)))?;
        apply_one(n, a)?;
    }
    Ok(out)
}

/// Routes all apps in order on the problem snapshot augmented with
/// `assignments`, admitting each routed app before the next.
pub fn evaluate(problem: &DeploymentProblem, assignments: &[Assignment]) -> Result<Evaluation> {
    let mut snap = problem.snapshot.clone();
    apply_to_snapshot(&mut snap, assignments)?;
    let mut occupied = 0.0;
    let mut delay = 0.0;
    let mut infeasible = Vec::new();
    for (app, &bound) in problem.apps.iter().zip(&problem.delay_bounds_ms) {
        let routed = route(app, &snap, &problem.profile)
            .ok()
            .filter(|p| p.delay_ms <= bound + 1e-9);
        match routed {
            Some(plan) => {
                admit(&plan, &mut snap).expect("fresh plan fits the snapshot it was routed on");
                occupied += plan.occupied_mbps;
                delay += plan.delay_ms;
            }
            None => {
                occupied += app.rate_mbps * problem.penalty_hops;
                delay += bound;
                infeasible.push(app.id);
            }
        }
    }
    Ok(Evaluation {
        objective: problem.weights.bandwidth * occupied + problem.weights.delay * delay,
        occupied_mbps: occupied,
        delay_ms: delay,
        infeasible,
    })
}

fn finish(assignments: Vec<Assignment>, eval: Evaluation, solver: Solver) -> DeploymentPlan {
    DeploymentPlan {
        assignments,
        objective: eval.objective,
        occupied_mbps: eval.occupied_mbps,
        infeasible: eval.infeasible,
        solver,
        gap: None,
    }
}

/// Subsets of `0..n` with at most `k` members, as bitmasks in ascending
/// numeric order.
fn bounded_subsets(n: usize, k: u32) -> Vec<u32> {
    (0u32..1 << n).filter(|m| m.count_ones() <= k).collect()
}

/// Exhaustive search over every slot-feasible combination of demanded
/// `(kb, role)` pairs on the candidates. Pairs no app can use never change
/// routing, so restricting to demanded pairs loses nothing. Among equal
/// objectives the first combination in enumeration order wins.
pub fn solve_exact(problem: &DeploymentProblem) -> Result<DeploymentPlan> {
    problem.validate()?;
    let demanded = problem.demanded();
    if demanded.len() > 16 {
        return Err(Error::TooLarge(usize::MAX));
    }
    let options: Vec<Vec<u32>> = problem
        .candidates
        .iter()
        .map(|&c| bounded_subsets(demanded.len(), problem.free_slots(c)))
        .collect();
    let total = options
        .iter()
        .try_fold(1usize, |acc, o| acc.checked_mul(o.len()))
        .unwrap_or(usize::MAX);
    if total > EXACT_LIMIT {
        return Err(Error::TooLarge(total));
    }

    let decode = |digits: &[usize]| -> Vec<Assignment> {
        let mut out = Vec::new();
        for (ci, &d) in digits.iter().enumerate() {
            let mask = options[ci][d];
            for (bit, &(kb, role)) in demanded.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    out.push(Assignment {
                        node: problem.candidates[ci],
                        kb,
                        role,
                    });
                }
            }
        }
        out.sort();
        out
    };

    let mut digits = vec![0usize; options.len()];
    let mut best: Option<(Vec<Assignment>, Evaluation)> = None;
    loop {
        let assignments = decode(&digits);
        let eval = evaluate(problem, &assignments)?;
        if best.as_ref().is_none_or(|(_, b)| eval.objective < b.objective) {
            best = Some((assignments, eval));
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == digits.len() {
                let (a, e) = best.expect("at least the empty plan is scored");
                return Ok(finish(a, e, Solver::Exact));
            }
            digits[i] += 1;
            if digits[i] < options[i].len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Greedy marginal-gain placement. Each round adds the single assignment
/// with the largest strict improvement; when no single addition helps, pairs
/// of additions are tried so that an encoder and a decoder that are only
/// useful together can still be placed. Stops when nothing improves or no
/// slot is left. Candidates and pairs are scanned in a fixed order, so the
/// result is deterministic.
pub fn solve_greedy(problem: &DeploymentProblem) -> Result<DeploymentPlan> {
    problem.validate()?;
    let demanded = problem.demanded();
    let mut current: Vec<Assignment> = Vec::new();
    let mut current_eval = evaluate(problem, &current)?;

    loop {
        let moves: Vec<Assignment> = problem
            .candidates
            .iter()
            .filter(|&&c| used_by(&current, c) < problem.free_slots(c))
            .flat_map(|&c| {
                demanded
                    .iter()
                    .map(move |&(kb, role)| Assignment { node: c, kb, role })
            })
            .filter(|a| !current.contains(a))
            .collect();
        if moves.is_empty() {
            break;
        }

        let singles = moves.iter().map(|m| with(&current, &[*m]));
        let mut best = best_improvement(problem, singles, current_eval.objective)?;
        if best.is_none() {
            let mut pairs = Vec::new();
            for (i, a) in moves.iter().enumerate() {
                for b in &moves[i + 1..] {
                    if a.node == b.node && used_by(&current, a.node) + 2 > problem.free_slots(a.node) {
                        continue;
                    }
                    pairs.push(with(&current, &[*a, *b]));
                }
            }
            best = best_improvement(problem, pairs.into_iter(), current_eval.objective)?;
        }
        match best {
            Some((next, eval)) => {
                current = next;
                current_eval = eval;
            }
            None => break,
        }
    }
    Ok(finish(current, current_eval, Solver::Greedy))
}

/// First strictly best plan among `options` that beats `bar`.
fn best_improvement(
    problem: &DeploymentProblem,
    options: impl Iterator<Item = Vec<Assignment>>,
    bar: f64,
) -> Result<Option<(Vec<Assignment>, Evaluation)>> {
    let mut best: Option<(Vec<Assignment>, Evaluation)> = None;
    for next in options {
        let eval = evaluate(problem, &next)?;
        let threshold = best.as_ref().map_or(bar, |(_, e)| e.objective);
        if eval.objective < threshold - 1e-9 {
            best = Some((next, eval));
        }
    }
    Ok(best)
}

fn used_by(assignments: &[Assignment], node: NodeId) -> u32 {
    assignments.iter().filter(|a| a.node == node).count() as u32
}

fn with(current: &[Assignment], extra: &[Assignment]) -> Vec<Assignment> {
    let mut v = current.to_vec();
    v.extend_from_slice(extra);
    v.sort();
    v
}

pub fn solve(problem: &DeploymentProblem, solver: Solver) -> Result<DeploymentPlan> {
    match solver {
        Solver::Exact => solve_exact(problem),
        Solver::Greedy => solve_greedy(problem),
    }
}

/// Independent per-window solves.
pub fn solve_per_window(problems: &[DeploymentProblem], solver: Solver) -> Result<Vec<DeploymentPlan>> {
    problems.par_iter().map(|p| solve(p, solver)).collect()
}

/// `(value - reference) / reference`, or 0 when the reference is 0.
pub fn relative_gap(value: f64, reference: f64) -> f64 {
    if reference > 0.0 {
        (value - reference) / reference
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::SnapshotBuilder;

    fn app(id: u32, case: CaseType, src: u32, dst: u32, kb: usize) -> Application {
        Application {
            id,
            case,
            src: NodeId(src),
            dst: NodeId(dst),
            rate_mbps: 20.0,
            kb,
            ratio: None,
        }
    }

    /// U(10) - 0 - 1 - 2 - V(11); satellites 0 and 2 are empty AI nodes.
    fn line(slots: u32) -> SnapshotGraph {
        SnapshotBuilder::new(2)
            .ai(0, "p2", &[], &[], slots)
            .satellite(1, "p3")
            .ai(2, "p4", &[], &[], slots)
            .terminal(10, "U")
            .terminal(11, "V")
            .link(10, 0, 300.0, 5.0)
            .link(0, 1, 300.0, 5.0)
            .link(1, 2, 300.0, 5.0)
            .link(2, 11, 300.0, 5.0)
            .build()
    }

    #[test]
    fn no_apps_no_assignments() {
        let p = DeploymentProblem::new(
            line(2),
            vec![NodeId(0)],
            vec![],
            CompressionProfile::uniform(2, 0.5),
            100.0,
        );
        let plan = solve_exact(&p).unwrap();
        assert!(plan.assignments.is_empty());
        assert_eq!(plan.objective, 0.0);
        assert!(solve_greedy(&p).unwrap().assignments.is_empty());
    }

    #[test]
    fn case4_single_node_is_infeasible() {
        let apps = vec![app(1, CaseType::SatelliteCodec, 10, 11, 0)];
        let profile = CompressionProfile::uniform(2, 0.5);
        let p = DeploymentProblem::new(line(2), vec![NodeId(0)], apps.clone(), profile.clone(), 100.0);
        let plan = solve_exact(&p).unwrap();
        assert_eq!(plan.infeasible, vec![1]);
        assert_eq!(plan.objective, 20.0 * DEFAULT_PENALTY_HOPS);

        let p = DeploymentProblem::new(line(2), vec![NodeId(0), NodeId(2)], apps, profile, 100.0);
        let plan = solve_exact(&p).unwrap();
        assert!(plan.infeasible.is_empty());
        assert_eq!(
            plan.assignments,
            vec![
                Assignment {
                    node: NodeId(0),
                    kb: 0,
                    role: ModelRole::Encoder
                },
                Assignment {
                    node: NodeId(2),
                    kb: 0,
                    role: ModelRole::Decoder
                },
            ]
        );
        assert_eq!(plan.objective, 20.0 + 10.0 * 2.0 + 20.0);
        let greedy = solve_greedy(&p).unwrap();
        assert_eq!(greedy.assignments, plan.assignments);
    }

    #[test]
    fn capacity_one_nodes_take_one_model_each() {
        let apps = vec![
            app(1, CaseType::ReceiverDecodes, 10, 11, 0),
            app(2, CaseType::ReceiverDecodes, 10, 11, 1),
        ];
        let p = DeploymentProblem::new(
            line(1),
            vec![NodeId(0), NodeId(2)],
            apps,
            CompressionProfile::uniform(2, 0.5),
            100.0,
        );
        let plan = solve_greedy(&p).unwrap();
        assert_eq!(plan.assignments.len(), 2);
        assert_eq!(used_by(&plan.assignments, NodeId(0)), 1);
        assert_eq!(used_by(&plan.assignments, NodeId(2)), 1);
        assert!(plan.infeasible.is_empty());
    }

    #[test]
    fn delay_bound_makes_apps_infeasible() {
        let apps = vec![app(1, CaseType::BothEnds, 10, 11, 0)];
        let p = DeploymentProblem::new(line(1), vec![], apps, CompressionProfile::uniform(2, 0.5), 19.0);
        let plan = solve_exact(&p).unwrap();
        assert_eq!(plan.infeasible, vec![1]);
    }

    #[test]
    fn apply_plan_increments_and_rejects() {
        let snap = line(1);
        let mut plan = DeploymentPlan {
            assignments: vec![],
            objective: 0.0,
            occupied_mbps: 0.0,
            infeasible: vec![],
            solver: Solver::Exact,
            gap: None,
        };
        let out = apply_plan(&plan, std::slice::from_ref(&snap)).unwrap();
        assert_eq!(out[0], snap);

        plan.assignments = vec![Assignment {
            node: NodeId(0),
            kb: 1,
            role: ModelRole::Encoder,
        }];
        let out = apply_plan(&plan, std::slice::from_ref(&snap)).unwrap();
        assert_eq!(out[0].node(NodeId(0)).unwrap().encoder_caps, vec![0, 1]);
        assert_eq!(snap.node(NodeId(0)).unwrap().encoder_caps, vec![0, 0]);

        plan.assignments.push(Assignment {
            node: NodeId(0),
            kb: 0,
            role: ModelRole::Decoder,
        });
        match apply_plan(&plan, std::slice::from_ref(&snap)) {
            Err(Error::CapacityExceeded { node, .. }) => assert_eq!(node, NodeId(0)),
            other => panic!("expected capacity error, got {other:?}"),
        }
        plan.assignments = vec![Assignment {
            node: NodeId(1),
            kb: 0,
            role: ModelRole::Decoder,
        }];
        assert!(matches!(
            apply_plan(&plan, &[snap]),
            Err(Error::NotAiNode(NodeId(1)))
        ));
    }

    #[test]
    fn non_ai_candidate_is_rejected() {
        let p = DeploymentProblem::new(
            line(1),
            vec![NodeId(1)],
            vec![],
            CompressionProfile::uniform(2, 0.5),
            10.0,
        );
        assert!(matches!(solve_exact(&p), Err(Error::NotAiNode(NodeId(1)))));
    }

    #[test]
    fn subsets_respect_bound() {
        assert_eq!(bounded_subsets(3, 1), vec![0, 1, 2, 4]);
        assert_eq!(bounded_subsets(2, 5).len(), 4);
        assert_eq!(bounded_subsets(4, 0), vec![0]);
    }
}
