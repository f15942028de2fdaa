//! The ratio recurrence, certified marginal intervals from the two extreme
//! frontier completions, decay profiling, and spherically-symmetric-tree
//! reports.

use serde::Serialize;

use crate::boundary::BoundaryCondition;
use crate::error::{Error, Result};
use crate::graph::{Activity, Graph};
use crate::threshold;
use crate::weitz::build_weitz_saw_tree;

/// A ratio flowing through the recurrence. Occupied fixings stay symbolic so
/// no infinities enter the arithmetic; they force the parent ratio to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioValue {
    FixedOccupied,
    Value(f64),
}

/// One step of the ratio recurrence: `lambda * prod_i 1 / (1 + R_i)`.
/// An empty child list yields `lambda`; any occupied child yields exactly 0.
pub fn recurrence_step(activity: Activity, children: &[RatioValue]) -> Result<RatioValue> {
    let mut prod = 1.0;
    let mut occupied = false;
    for (i, child) in children.iter().enumerate() {
        match *child {
            RatioValue::FixedOccupied => occupied = true,
            RatioValue::Value(x) => {
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::arg(format!("child ratio {i} is {x}, not in [0, inf)")));
                }
                prod *= 1.0 / (1.0 + x);
            }
        }
    }
    if occupied {
        Ok(RatioValue::Value(0.0))
    } else {
        Ok(RatioValue::Value(activity.value() * prod))
    }
}

/// Certified enclosure of an occupation ratio: the exact `R_v(sigma, G)`
/// lies in `[lower, upper]`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MarginalInterval {
    pub lower: f64,
    pub upper: f64,
    pub depth: u32,
    pub width: f64,
}

impl MarginalInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

fn interval_from_extremes(plus: f64, minus: f64, depth: u32) -> MarginalInterval {
    let (lower, upper) = if plus <= minus {
        (plus, minus)
    } else {
        (minus, plus)
    };
    MarginalInterval {
        lower,
        upper,
        depth,
        width: upper - lower,
    }
}

/// Expands the walk tree to depth `depth`, evaluates the recurrence with the
/// unfixed frontier set all-occupied and all-unoccupied, and returns the
/// sorted pair. Also reports the number of tree nodes visited.
pub fn marginal_interval_counted(
    graph: &Graph,
    vertex: u32,
    sigma: &BoundaryCondition,
    depth: u32,
    activity: Activity,
    node_budget: u64,
) -> Result<(MarginalInterval, u64)> {
    if depth == 0 {
        return Err(Error::arg("marginal interval requires depth >= 1"));
    }
    let tree = build_weitz_saw_tree(graph, vertex, sigma, Some(depth), node_budget)?;
    let (plus, minus, nodes) = tree.eval_extremes(activity)?;
    Ok((interval_from_extremes(plus, minus, depth), nodes))
}

/// See [`marginal_interval_counted`].
pub fn marginal_interval(
    graph: &Graph,
    vertex: u32,
    sigma: &BoundaryCondition,
    depth: u32,
    activity: Activity,
    node_budget: u64,
) -> Result<MarginalInterval> {
    marginal_interval_counted(graph, vertex, sigma, depth, activity, node_budget)
        .map(|(interval, _)| interval)
}

/// Fully expanded evaluation: walks are finite, both extremes coincide, and
/// the returned value is the exact ratio.
pub fn full_depth_ratio(
    graph: &Graph,
    vertex: u32,
    sigma: &BoundaryCondition,
    activity: Activity,
    node_budget: u64,
) -> Result<f64> {
    let tree = build_weitz_saw_tree(graph, vertex, sigma, None, node_budget)?;
    let (plus, _minus, _) = tree.eval_extremes(activity)?;
    Ok(plus)
}

/// What to profile: a concrete graph vertex, or the infinite complete
/// `arity`-ary tree (handled in closed recurrence form, no materialization).
pub enum DecayTarget<'a> {
    Graph {
        graph: &'a Graph,
        vertex: u32,
        boundary: &'a BoundaryCondition,
    },
    CompleteTree {
        arity: u32,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayRow {
    pub depth: u32,
    pub r_minus: f64,
    pub r_plus: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayProfile {
    pub rows: Vec<DecayRow>,
    /// Per-level factor `exp(slope)` fitted to `log width` against depth,
    /// over rows with width above the underflow cutoff. `None` when fewer
    /// than two rows qualify.
    pub fitted_rate: Option<f64>,
}

/// Widths below this are treated as exhausted by f64 cancellation and are
/// excluded from the rate fit.
const WIDTH_CUTOFF: f64 = 1e-14;

/// Interval widths over a depth range plus a least-squares exponential rate.
pub fn decay_profile(
    target: &DecayTarget<'_>,
    activity: Activity,
    depths: &[u32],
    node_budget: u64,
) -> Result<DecayProfile> {
    if depths.is_empty() {
        return Err(Error::arg("depth range must be nonempty"));
    }
    if depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("depth range must be strictly ascending"));
    }
    if depths[0] == 0 {
        return Err(Error::arg("depths must be >= 1"));
    }
    let mut rows = Vec::with_capacity(depths.len());
    match target {
        DecayTarget::Graph {
            graph,
            vertex,
            boundary,
        } => {
            for &depth in depths {
                let interval =
                    marginal_interval(graph, *vertex, boundary, depth, activity, node_budget)?;
                rows.push(DecayRow {
                    depth,
                    r_minus: interval.lower,
                    r_plus: interval.upper,
                    width: interval.width,
                });
            }
        }
        DecayTarget::CompleteTree { arity } => {
            if *arity == 0 {
                return Err(Error::arg("complete tree arity must be >= 1"));
            }
            let lambda = activity.value();
            let d = *arity as f64;
            let max_depth = *depths.last().unwrap();
            // iterate the one-argument recurrence from the two frontier
            // fixings; at depth l the extremes are iterates l-1 and l of 0
            let mut iterates = Vec::with_capacity(max_depth as usize + 1);
            iterates.push(0.0f64);
            for _ in 0..max_depth {
                let prev = *iterates.last().unwrap();
                iterates.push(threshold::recurrence(d, lambda, prev));
            }
            for &depth in depths {
                let a = iterates[depth as usize - 1];
                let b = iterates[depth as usize];
                let interval = interval_from_extremes(a, b, depth);
                rows.push(DecayRow {
                    depth,
                    r_minus: interval.lower,
                    r_plus: interval.upper,
                    width: interval.width,
                });
            }
        }
    }
    Ok(DecayProfile {
        fitted_rate: fit_rate(&rows),
        rows,
    })
}

fn fit_rate(rows: &[DecayRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.width > WIDTH_CUTOFF)
        .map(|r| (r.depth as f64, r.width.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return None;
    }
    Some(((n * sxy - sx * sy) / denom).exp())
}

pub fn decay_profile_csv(profile: &DecayProfile) -> String {
    let mut out = String::from("depth,R_minus,R_plus,width\n");
    for r in &profile.rows {
        out.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e}\n",
            r.depth, r.r_minus, r.r_plus, r.width
        ));
    }
    out
}

/// Report for a spherically symmetric tree with given arity sequence.
#[derive(Debug, Clone, Serialize)]
pub struct SymmetricTreeReport {
    pub arities: Vec<u32>,
    pub depth: usize,
    /// `delta[j]` is the geometric mean of the arities at depths `j..depth`;
    /// `delta[depth] = 1`.
    pub delta: Vec<f64>,
    /// Decay functional evaluated at the whole-tree mean arity `delta[0]`.
    pub chi: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub width: f64,
}

/// Geometric arity means, the decay functional at the root mean, and the
/// empirical root interval of the symmetric tree truncated at `depth`.
/// Every vertex at one depth has the same subtree, so the tree evaluation
/// collapses to one recurrence pass from the frontier up.
pub fn symmetric_tree_report(
    arities: &[u32],
    activity: Activity,
    depth: usize,
) -> Result<SymmetricTreeReport> {
    if arities.contains(&0) {
        return Err(Error::arg("arities must be >= 1"));
    }
    if depth == 0 || depth > arities.len() {
        return Err(Error::arg(format!(
            "depth must be in 1..={}, got {depth}",
            arities.len()
        )));
    }
    let log_arities: Vec<f64> = arities[..depth].iter().map(|&d| (d as f64).ln()).collect();
    let mut delta = vec![1.0; depth + 1];
    let mut suffix = 0.0;
    for j in (0..depth).rev() {
        suffix += log_arities[j];
        delta[j] = (suffix / (depth - j) as f64).exp();
    }
    let chi = threshold::chi(delta[0], activity)?;
    let lambda = activity.value();
    // frontier at `depth`: occupied kills the level above, unoccupied frees it
    let mut plus = 0.0f64;
    let mut minus = lambda;
    for j in (0..depth - 1).rev() {
        let d = arities[j] as f64;
        plus = threshold::recurrence(d, lambda, plus);
        minus = threshold::recurrence(d, lambda, minus);
    }
    let (r_minus, r_plus) = if plus <= minus {
        (plus, minus)
    } else {
        (minus, plus)
    };
    Ok(SymmetricTreeReport {
        arities: arities[..depth].to_vec(),
        depth,
        delta,
        chi,
        r_minus,
        r_plus,
        width: r_plus - r_minus,
    })
}
