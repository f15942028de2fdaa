//! Boundary conditions (partially specified independent sets) and the
//! conditioning reduction they induce on a graph.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Activity, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Occupied,
    Unoccupied,
}

/// A partial assignment of spins, required to be independent on its
/// occupied set. Iteration order is by vertex id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BoundaryCondition {
    assignment: BTreeMap<u32, Spin>,
}

#[derive(Serialize, Deserialize, Default)]
struct BoundaryJson {
    #[serde(default)]
    occupied: Vec<u32>,
    #[serde(default)]
    unoccupied: Vec<u32>,
}

impl BoundaryCondition {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_sets(occupied: &[u32], unoccupied: &[u32]) -> Result<Self> {
        let mut bc = BoundaryCondition::new();
        for &v in occupied {
            bc.set(v, Spin::Occupied)?;
        }
        for &v in unoccupied {
            bc.set(v, Spin::Unoccupied)?;
        }
        Ok(bc)
    }

    /// Inserts an assignment; re-assigning a vertex to a different spin is an
    /// error, re-assigning the same spin is a no-op.
    pub fn set(&mut self, v: u32, spin: Spin) -> Result<()> {
        match self.assignment.insert(v, spin) {
            Some(old) if old != spin => Err(Error::ConflictingAssignment(v)),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn get(&self, v: u32) -> Option<Spin> {
        self.assignment.get(&v).copied()
    }

    #[inline]
    pub fn is_fixed(&self, v: u32) -> bool {
        self.assignment.contains_key(&v)
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, Spin)> + '_ {
        self.assignment.iter().map(|(&v, &s)| (v, s))
    }

    pub fn occupied(&self) -> impl Iterator<Item = u32> + '_ {
        self.iter()
            .filter(|&(_, s)| s == Spin::Occupied)
            .map(|(v, _)| v)
    }

    pub fn unoccupied(&self) -> impl Iterator<Item = u32> + '_ {
        self.iter()
            .filter(|&(_, s)| s == Spin::Unoccupied)
            .map(|(v, _)| v)
    }

    /// Checks range and independence of the occupied set against `g`.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        for (v, spin) in self.iter() {
            g.check_vertex(v)?;
            if spin == Spin::Occupied {
                for &w in g.neighbors(v) {
                    if w > v && self.get(w) == Some(Spin::Occupied) {
                        return Err(Error::NotIndependent(v, w));
                    }
                }
            }
        }
        Ok(())
    }

    /// Parses `{"occupied": [...], "unoccupied": [...]}`.
    pub fn parse_json(text: &str) -> Result<Self> {
        let raw: BoundaryJson = serde_json::from_str(text)?;
        Self::from_sets(&raw.occupied, &raw.unoccupied)
    }

    pub fn to_json(&self) -> String {
        let raw = BoundaryJson {
            occupied: self.occupied().collect(),
            unoccupied: self.unoccupied().collect(),
        };
        serde_json::to_string(&raw).expect("boundary serialization cannot fail")
    }
}

/// Result of conditioning a graph on a boundary: the surviving graph, the
/// log-scale weight absorbed from occupied fixings, and the vertex
/// relabeling.
#[derive(Debug, Clone)]
pub struct ReducedGraph {
    pub graph: Graph,
    pub log_prefactor: f64,
    /// `vertex_map[v]` is the new id of original vertex `v`, or `None` if it
    /// was removed by the reduction.
    pub vertex_map: Vec<Option<u32>>,
}

/// Conditions `g` on `sigma`: an occupied vertex deletes its closed
/// neighborhood and contributes a factor of the activity; an unoccupied
/// vertex deletes itself. The conditioned partition function satisfies
/// `Z(g | sigma) = exp(log_prefactor) * Z(reduced graph)`.
pub fn reduce_by_boundary(
    g: &Graph,
    sigma: &BoundaryCondition,
    activity: Activity,
) -> Result<ReducedGraph> {
    sigma.validate(g)?;
    let n = g.n() as usize;
    let mut removed = vec![false; n];
    let mut occupied_count = 0u64;
    for (v, spin) in sigma.iter() {
        removed[v as usize] = true;
        if spin == Spin::Occupied {
            occupied_count += 1;
            for &w in g.neighbors(v) {
                removed[w as usize] = true;
            }
        }
    }
    let mut vertex_map = vec![None; n];
    let mut next = 0u32;
    for v in 0..n {
        if !removed[v] {
            vertex_map[v] = Some(next);
            next += 1;
        }
    }
    let mut edges = Vec::new();
    for (u, v) in g.edges() {
        if let (Some(nu_), Some(nv)) = (vertex_map[u as usize], vertex_map[v as usize]) {
            edges.push((nu_, nv));
        }
    }
    Ok(ReducedGraph {
        graph: Graph::new(next, &edges)?,
        log_prefactor: occupied_count as f64 * activity.ln(),
        vertex_map,
    })
}
