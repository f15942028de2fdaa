//! Deterministic approximation of marginals and of the log partition
//! function by self-reducibility over certified marginal intervals.

use serde::Serialize;

use crate::boundary::{BoundaryCondition, Spin};
use crate::decay::{marginal_interval_counted, MarginalInterval};
use crate::error::{finite_above, Error, Result};
use crate::graph::{Activity, Graph};
use crate::weitz::DEFAULT_NODE_BUDGET;

#[derive(Debug, Clone, Copy)]
pub struct FptasOptions {
    /// Node guard per marginal evaluation.
    pub node_budget: u64,
    /// Starting expansion depth of the adaptive loop.
    pub initial_depth: u32,
    /// Depth increment between attempts.
    pub depth_step: u32,
    /// Giving-up depth: reaching it without meeting the width target means
    /// no decay certificate is in effect at this activity.
    pub depth_cap: u32,
    /// Eliminate vertices in descending degree order instead of index order.
    /// Affects cost only, never correctness.
    pub max_degree_first: bool,
}

impl Default for FptasOptions {
    fn default() -> Self {
        FptasOptions {
            node_budget: DEFAULT_NODE_BUDGET,
            initial_depth: 4,
            depth_step: 2,
            depth_cap: 4096,
            max_degree_first: false,
        }
    }
}

/// Resolved plan for one partition-function run: the per-vertex additive
/// target, the depth schedule, and the elimination order.
#[derive(Debug, Clone, Serialize)]
pub struct ApproxPlan {
    pub delta: f64,
    pub initial_depth: u32,
    pub depth_step: u32,
    pub depth_cap: u32,
    pub order: Vec<u32>,
}

/// Splits the relative budget `mu` evenly over the vertices, with the
/// activity-dependent conversion factor and a safety factor of two:
/// `delta = mu / (2 n (1 + lambda))`.
pub fn build_plan(
    graph: &Graph,
    activity: Activity,
    mu: f64,
    opts: &FptasOptions,
) -> Result<ApproxPlan> {
    if !(finite_above(mu, 0.0) && mu < 1.0) {
        return Err(Error::arg(format!(
            "relative target mu must lie in (0, 1), got {mu}"
        )));
    }
    if graph.n() == 0 {
        return Err(Error::arg("cannot plan on the empty graph"));
    }
    Ok(ApproxPlan {
        delta: mu / (2.0 * graph.n() as f64 * (1.0 + activity.value())),
        initial_depth: opts.initial_depth.max(1),
        depth_step: opts.depth_step.max(1),
        depth_cap: opts.depth_cap,
        order: elimination_order(graph, opts.max_degree_first),
    })
}

/// A certified additive approximation of one occupation ratio.
#[derive(Debug, Clone, Copy)]
pub struct ApproxMarginal {
    /// Midpoint of the final interval.
    pub ratio: f64,
    pub interval: MarginalInterval,
    pub nodes: u64,
}

/// Approximates `R_v(sigma, G)` to additive error `delta`, deepening the
/// walk-tree expansion until the certified interval is narrow enough.
/// Returns 0 immediately when a neighbor of `v` is fixed occupied. On a
/// finite graph the loop always terminates: once the depth passes the
/// longest walk the interval collapses to the exact value.
pub fn approx_occupation(
    graph: &Graph,
    sigma: &BoundaryCondition,
    v: u32,
    activity: Activity,
    delta: f64,
    opts: &FptasOptions,
) -> Result<ApproxMarginal> {
    if !finite_above(delta, 0.0) {
        return Err(Error::arg(format!("additive target must be > 0, got {delta}")));
    }
    graph.check_vertex(v)?;
    if sigma.is_fixed(v) {
        return Err(Error::VertexFixed(v));
    }
    if graph
        .neighbors(v)
        .iter()
        .any(|&w| sigma.get(w) == Some(Spin::Occupied))
    {
        return Ok(ApproxMarginal {
            ratio: 0.0,
            interval: MarginalInterval {
                lower: 0.0,
                upper: 0.0,
                depth: 0,
                width: 0.0,
            },
            nodes: 0,
        });
    }
    let mut depth = opts.initial_depth.max(1);
    let mut total_nodes = 0u64;
    loop {
        let (interval, nodes) =
            marginal_interval_counted(graph, v, sigma, depth, activity, opts.node_budget)?;
        total_nodes += nodes;
        if interval.width <= 2.0 * delta {
            return Ok(ApproxMarginal {
                ratio: interval.midpoint(),
                interval,
                nodes: total_nodes,
            });
        }
        if depth >= opts.depth_cap {
            return Err(Error::NoDecay {
                vertex: v,
                lower: interval.lower,
                upper: interval.upper,
                depth,
            });
        }
        depth = (depth + opts.depth_step).min(opts.depth_cap);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VertexEstimate {
    pub vertex: u32,
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub depth: u32,
    pub nodes: u64,
}

/// Output of the partition-function approximation.
#[derive(Debug, Clone, Serialize)]
pub struct ApproxResult {
    #[serde(rename = "log_Z")]
    pub log_z: f64,
    /// Certified bound on `|Z_hat / Z - 1|` accumulated from the per-vertex
    /// interval widths; at least the true error.
    pub relative_error_bound: f64,
    pub nodes_expanded: u64,
    pub per_vertex: Vec<VertexEstimate>,
}

/// Elimination order used by [`approx_log_partition`].
pub fn elimination_order(graph: &Graph, max_degree_first: bool) -> Vec<u32> {
    let mut order: Vec<u32> = (0..graph.n()).collect();
    if max_degree_first {
        order.sort_by_key(|&v| std::cmp::Reverse(graph.degree(v)));
    }
    order
}

/// Approximates `log Z(G, lambda)` to relative error `mu` by eliminating
/// vertices one at a time: at each step the current vertex's occupation
/// ratio is approximated on the graph conditioned on all previous vertices
/// being unoccupied, with per-vertex additive budget
/// `delta = mu / (2 n (1 + lambda))`, and `log Z = sum log(1 + R_hat)`.
pub fn approx_log_partition(
    graph: &Graph,
    activity: Activity,
    mu: f64,
    opts: &FptasOptions,
) -> Result<ApproxResult> {
    if !(finite_above(mu, 0.0) && mu < 1.0) {
        return Err(Error::arg(format!(
            "relative target mu must lie in (0, 1), got {mu}"
        )));
    }
    let n = graph.n();
    if n == 0 {
        return Ok(ApproxResult {
            log_z: 0.0,
            relative_error_bound: 0.0,
            nodes_expanded: 0,
            per_vertex: Vec::new(),
        });
    }
    let plan = build_plan(graph, activity, mu, opts)?;
    let mut sigma = BoundaryCondition::new();
    let mut log_z = 0.0f64;
    let mut log_error = 0.0f64;
    let mut nodes_expanded = 0u64;
    let mut per_vertex = Vec::with_capacity(n as usize);
    for v in plan.order.iter().copied() {
        let m = approx_occupation(graph, &sigma, v, activity, plan.delta, opts)?;
        log_z += m.ratio.ln_1p();
        log_error += log_factor_bound(&m.interval);
        nodes_expanded += m.nodes;
        per_vertex.push(VertexEstimate {
            vertex: v,
            ratio: m.ratio,
            lower: m.interval.lower,
            upper: m.interval.upper,
            depth: m.interval.depth,
            nodes: m.nodes,
        });
        sigma.set(v, Spin::Unoccupied)?;
    }
    Ok(ApproxResult {
        log_z,
        relative_error_bound: log_error.exp_m1(),
        nodes_expanded,
        per_vertex,
    })
}

/// Worst-case `|log(1 + R_hat) - log(1 + R)|` over `R` in the interval,
/// with `R_hat` the midpoint.
fn log_factor_bound(interval: &MarginalInterval) -> f64 {
    let mid = interval.midpoint();
    let up = ((1.0 + interval.upper) / (1.0 + mid)).ln();
    let down = ((1.0 + mid) / (1.0 + interval.lower)).ln();
    up.max(down)
}

/// Analytic depth estimate `2 * ceil(log(c / delta) / log(1 / (nu * Delta)))`
/// for reaching additive accuracy `delta` under contraction factor
/// `nu_delta < 1`. Advisory: the adaptive loop remains authoritative.
pub fn plan_depth(nu_delta: f64, delta: f64, c: f64) -> Result<u32> {
    if !(finite_above(nu_delta, 0.0) && nu_delta < 1.0) {
        return Err(Error::arg(format!(
            "plan_depth requires nu * Delta in (0, 1), got {nu_delta}"
        )));
    }
    if !finite_above(delta, 0.0) || !finite_above(c, 0.0) {
        return Err(Error::arg("plan_depth requires positive delta and c"));
    }
    let raw = ((c / delta).ln() / (1.0 / nu_delta).ln()).ceil();
    Ok((2.0 * raw.max(0.0)) as u32)
}

/// [`plan_depth`] with the per-vertex budget split used by
/// [`approx_log_partition`].
pub fn plan_depth_for(
    n: u32,
    mu: f64,
    activity: Activity,
    nu_delta: f64,
    c: f64,
) -> Result<u32> {
    if n == 0 || !(finite_above(mu, 0.0) && mu < 1.0) {
        return Err(Error::arg("plan_depth_for requires n >= 1 and mu in (0, 1)"));
    }
    plan_depth(nu_delta, mu / (2.0 * n as f64 * (1.0 + activity.value())), c)
}
