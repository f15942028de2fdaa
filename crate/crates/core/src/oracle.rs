//! Ground-truth partition functions and marginals on small graphs.
//!
//! The solver runs the deletion recurrence `Z(G) = Z(G - v) + lambda * Z(G - N[v])`
//! on a maximum-degree pivot of each connected component, memoizing per
//! component bitmask and accumulating in the log domain. A plain
//! subset-enumeration oracle is kept alongside as an independent cross-check
//! for very small graphs.

use std::collections::HashMap;

use crate::boundary::{reduce_by_boundary, BoundaryCondition};
use crate::error::{Error, Result};
use crate::graph::{Activity, Graph};

/// Hard cap imposed by the bitmask representation.
const MASK_LIMIT: u32 = 64;

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Refuse graphs larger than this many vertices.
    pub size_guard: u32,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { size_guard: 40 }
    }
}

/// Exact quantities at a vertex: log partition function of the conditioned
/// graph, occupation probability, and occupation ratio.
#[derive(Debug, Clone, Copy)]
pub struct ExactResult {
    pub log_z: f64,
    pub p: Option<f64>,
    pub ratio: Option<f64>,
}

fn check_size(g: &Graph, opts: &OracleOptions) -> Result<()> {
    let guard = opts.size_guard.min(MASK_LIMIT);
    if g.n() > guard {
        return Err(Error::SizeGuard { n: g.n(), guard });
    }
    Ok(())
}

#[inline]
fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

struct Solver {
    /// Closed-neighborhood masks: `nbhd[v]` includes `v` itself.
    adj: Vec<u64>,
    ln_lambda: f64,
    memo: HashMap<u64, f64>,
}

impl Solver {
    fn new(g: &Graph, activity: Activity) -> Self {
        let adj = (0..g.n())
            .map(|v| {
                g.neighbors(v)
                    .iter()
                    .fold(0u64, |acc, &w| acc | (1u64 << w))
            })
            .collect();
        Solver {
            adj,
            ln_lambda: activity.ln(),
            memo: HashMap::new(),
        }
    }

    fn log_z(&mut self, mask: u64) -> f64 {
        let mut total = 0.0;
        let mut rest = mask;
        while rest != 0 {
            let comp = self.component_of(rest.trailing_zeros(), mask);
            total += self.log_z_component(comp);
            rest &= !comp;
        }
        total
    }

    fn component_of(&self, start: u32, mask: u64) -> u64 {
        let mut comp = 1u64 << start;
        let mut frontier = comp;
        while frontier != 0 {
            let mut grown = comp;
            let mut f = frontier;
            while f != 0 {
                let v = f.trailing_zeros();
                grown |= self.adj[v as usize] & mask;
                f &= f - 1;
            }
            frontier = grown & !comp;
            comp = grown;
        }
        comp
    }

    fn log_z_component(&mut self, comp: u64) -> f64 {
        if comp == 0 {
            return 0.0;
        }
        if comp.count_ones() == 1 {
            return log_sum_exp(0.0, self.ln_lambda);
        }
        if let Some(&v) = self.memo.get(&comp) {
            return v;
        }
        // pivot on a maximum-degree vertex of the component
        let mut pivot = comp.trailing_zeros();
        let mut best = 0;
        let mut m = comp;
        while m != 0 {
            let v = m.trailing_zeros();
            let deg = (self.adj[v as usize] & comp).count_ones();
            if deg > best {
                best = deg;
                pivot = v;
            }
            m &= m - 1;
        }
        let without_v = comp & !(1u64 << pivot);
        let without_nbhd = comp & !(self.adj[pivot as usize] | (1u64 << pivot));
        let a = self.log_z(without_v);
        let b = self.ln_lambda + self.log_z(without_nbhd);
        let value = log_sum_exp(a, b);
        self.memo.insert(comp, value);
        value
    }
}

fn full_mask(n: u32) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Exact `log Z(G, lambda)` by deletion recursion with memoization.
pub fn exact_log_partition(g: &Graph, activity: Activity, opts: &OracleOptions) -> Result<f64> {
    check_size(g, opts)?;
    let mut solver = Solver::new(g, activity);
    Ok(solver.log_z(full_mask(g.n())))
}

/// Exact occupation probability and ratio of `v` under boundary `sigma`.
pub fn exact_occupation(
    g: &Graph,
    sigma: &BoundaryCondition,
    v: u32,
    activity: Activity,
    opts: &OracleOptions,
) -> Result<ExactResult> {
    g.check_vertex(v)?;
    if sigma.is_fixed(v) {
        return Err(Error::VertexFixed(v));
    }
    let reduced = reduce_by_boundary(g, sigma, activity)?;
    check_size(&reduced.graph, opts)?;
    let mut solver = Solver::new(&reduced.graph, activity);
    let all = full_mask(reduced.graph.n());
    let log_z_reduced = solver.log_z(all);
    let log_z = reduced.log_prefactor + log_z_reduced;
    match reduced.vertex_map[v as usize] {
        // v was swept away by an occupied neighbor, so it is never occupied.
        None => Ok(ExactResult {
            log_z,
            p: Some(0.0),
            ratio: Some(0.0),
        }),
        Some(nv) => {
            let bit = 1u64 << nv;
            let nbhd = solver.adj[nv as usize] | bit;
            let log_z_without_v = solver.log_z(all & !bit);
            let log_z_without_nbhd = solver.log_z(all & !nbhd);
            // R = lambda * Z(G' - N[v]) / Z(G' - v); p = R / (1 + R)
            let log_ratio = activity.ln() + log_z_without_nbhd - log_z_without_v;
            let ratio = log_ratio.exp();
            let p = if log_ratio > 0.0 {
                1.0 / (1.0 + (-log_ratio).exp())
            } else {
                ratio / (1.0 + ratio)
            };
            Ok(ExactResult {
                log_z,
                p: Some(p),
                ratio: Some(ratio),
            })
        }
    }
}

/// Independent oracle: direct enumeration of all independent sets.
/// Quadratic-exponential, so restricted to 20 vertices.
pub fn brute_force_log_partition(g: &Graph, activity: Activity) -> Result<f64> {
    let n = g.n();
    if n > 20 {
        return Err(Error::SizeGuard { n, guard: 20 });
    }
    let adj: Vec<u64> = (0..n)
        .map(|v| {
            g.neighbors(v)
                .iter()
                .fold(0u64, |acc, &w| acc | (1u64 << w))
        })
        .collect();
    let lambda = activity.value();
    let mut z = 0.0f64;
    for set in 0u64..(1u64 << n) {
        let mut ok = true;
        let mut m = set;
        while m != 0 {
            let v = m.trailing_zeros();
            if adj[v as usize] & set != 0 {
                ok = false;
                break;
            }
            m &= m - 1;
        }
        if ok {
            z += lambda.powi(set.count_ones() as i32);
        }
    }
    Ok(z.ln())
}
