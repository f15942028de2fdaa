//! Exact self-avoiding-walk counting and empirical connective-constant
//! estimation.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Per-length walk counts from one vertex, with cumulative growth roots.
///
/// Counts are exact: every counted walk is also charged against the node
/// budget, so they stay far below `u64` range by construction.
#[derive(Debug, Clone, Serialize)]
pub struct SawCounts {
    pub vertex: u32,
    /// `counts[i]` is the number of self-avoiding walks of length `i + 1`.
    pub counts: Vec<u64>,
    /// `cumulative_roots[i]` is `(sum of counts up to length i + 1)^(1 / (i + 1))`.
    pub cumulative_roots: Vec<f64>,
}

impl SawCounts {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("length,count,cumulative_root\n");
        for (i, (&c, &r)) in self.counts.iter().zip(&self.cumulative_roots).enumerate() {
            out.push_str(&format!("{},{},{:.12}\n", i + 1, c, r));
        }
        out
    }
}

/// Counts all self-avoiding walks from `v` of length up to `max_length` by
/// exhaustive depth-first search. Budget-guarded: the cost is the count
/// itself.
pub fn count_saws(graph: &Graph, v: u32, max_length: u32, node_budget: u64) -> Result<SawCounts> {
    graph.check_vertex(v)?;
    if max_length == 0 {
        return Err(Error::arg("max_length must be >= 1"));
    }
    let lmax = max_length as usize;
    let n = graph.n() as usize;
    // flat adjacency keeps the hot loop on two arrays
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0u32);
    let mut targets: Vec<u32> = Vec::with_capacity(2 * graph.m());
    for u in 0..n as u32 {
        targets.extend_from_slice(graph.neighbors(u));
        offsets.push(targets.len() as u32);
    }
    let mut counts = vec![0u64; lmax];
    let mut visited = vec![false; n];
    let mut budget_left = node_budget;
    visited[v as usize] = true;
    if lmax <= RECURSION_LIMIT {
        // bounded depth: the recursive form keeps the scan in registers
        dfs_count(
            &offsets,
            &targets,
            &mut visited,
            &mut counts,
            &mut budget_left,
            node_budget,
            v,
            0,
            lmax,
        )?;
        return Ok(finish_counts(v, counts));
    }
    struct Frame {
        vertex: u32,
        cursor: u32,
        end: u32,
    }
    let mut stack: Vec<Frame> = Vec::with_capacity(lmax + 1);
    stack.push(Frame {
        vertex: v,
        cursor: offsets[v as usize],
        end: offsets[v as usize + 1],
    });
    while let Some(top) = stack.last() {
        let len = stack.len() - 1; // walk length so far
        let (vertex, mut cursor, end) = (top.vertex, top.cursor, top.end);
        if len + 1 == lmax {
            // final level: count extensions without descending
            let mut fresh = 0u64;
            for &w in &targets[cursor as usize..end as usize] {
                fresh += u64::from(!visited[w as usize]);
            }
            if fresh > budget_left {
                return Err(Error::NodeBudget(node_budget));
            }
            budget_left -= fresh;
            counts[len] += fresh;
            visited[vertex as usize] = false;
            stack.pop();
            continue;
        }
        let mut descend = None;
        while cursor < end {
            let w = targets[cursor as usize];
            cursor += 1;
            if !visited[w as usize] {
                descend = Some(w);
                break;
            }
        }
        match descend {
            Some(w) => {
                if budget_left == 0 {
                    return Err(Error::NodeBudget(node_budget));
                }
                budget_left -= 1;
                counts[len] += 1;
                visited[w as usize] = true;
                let fi = stack.len() - 1;
                stack[fi].cursor = cursor;
                stack.push(Frame {
                    vertex: w,
                    cursor: offsets[w as usize],
                    end: offsets[w as usize + 1],
                });
            }
            None => {
                visited[vertex as usize] = false;
                stack.pop();
            }
        }
    }
    Ok(finish_counts(v, counts))
}

const RECURSION_LIMIT: usize = 64;

#[allow(clippy::too_many_arguments)]
fn dfs_count(
    offsets: &[u32],
    targets: &[u32],
    visited: &mut [bool],
    counts: &mut [u64],
    budget_left: &mut u64,
    node_budget: u64,
    u: u32,
    len: usize,
    lmax: usize,
) -> Result<()> {
    let range = offsets[u as usize] as usize..offsets[u as usize + 1] as usize;
    if len + 1 == lmax {
        let mut fresh = 0u64;
        for &w in &targets[range] {
            fresh += u64::from(!visited[w as usize]);
        }
        if fresh > *budget_left {
            return Err(Error::NodeBudget(node_budget));
        }
        *budget_left -= fresh;
        counts[len] += fresh;
        return Ok(());
    }
    for i in range {
        let w = targets[i];
        if !visited[w as usize] {
            if *budget_left == 0 {
                return Err(Error::NodeBudget(node_budget));
            }
            *budget_left -= 1;
            counts[len] += 1;
            visited[w as usize] = true;
            let r = dfs_count(
                offsets,
                targets,
                visited,
                counts,
                budget_left,
                node_budget,
                w,
                len + 1,
                lmax,
            );
            visited[w as usize] = false;
            r?;
        }
    }
    Ok(())
}

fn finish_counts(v: u32, counts: Vec<u64>) -> SawCounts {
    let mut cumulative_roots = Vec::with_capacity(counts.len());
    let mut sum = 0u64;
    for (i, &c) in counts.iter().enumerate() {
        sum += c;
        let root = if sum == 0 {
            0.0
        } else {
            (sum as f64).powf(1.0 / (i + 1) as f64)
        };
        cumulative_roots.push(root);
    }
    SawCounts {
        vertex: v,
        counts,
        cumulative_roots,
    }
}

/// Connective-constant estimate over a vertex sample: the cumulative growth
/// root of each sampled vertex at length `length`, and the sample maximum.
#[derive(Debug, Clone, Serialize)]
pub struct ConnectiveEstimate {
    pub length: u32,
    /// `(vertex, cumulative root at `length`)` per sampled vertex.
    pub per_vertex: Vec<(u32, f64)>,
    pub max_root: f64,
}

/// Runs [`count_saws`] on each sample vertex (in parallel; results are
/// deterministic per vertex) and reports cumulative roots at `length`.
/// The budget applies per vertex.
pub fn estimate_connective(
    graph: &Graph,
    sample: &[u32],
    length: u32,
    node_budget: u64,
) -> Result<ConnectiveEstimate> {
    if sample.is_empty() {
        return Err(Error::arg("vertex sample must be nonempty"));
    }
    let per_vertex: Vec<(u32, f64)> = sample
        .par_iter()
        .map(|&v| {
            let counts = count_saws(graph, v, length, node_budget)?;
            Ok((v, *counts.cumulative_roots.last().unwrap()))
        })
        .collect::<Result<_>>()?;
    let max_root = per_vertex.iter().map(|&(_, r)| r).fold(0.0, f64::max);
    Ok(ConnectiveEstimate {
        length,
        per_vertex,
        max_root,
    })
}
