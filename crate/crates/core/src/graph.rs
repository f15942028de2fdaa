//! Graph representation, text/JSON formats, and deterministic generators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite simple undirected graph with dense vertex ids `0..n`.
///
/// Neighbor lists are kept sorted ascending. This order doubles as the
/// canonical per-vertex edge ordering used by the self-avoiding-walk
/// constructions, so everything downstream is reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<u32>>,
    labels: Option<Vec<String>>,
}

/// Vertex activity of the hard-core model, validated once at the API boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Activity(f64);

impl Activity {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && lambda > 0.0 {
            Ok(Activity(lambda))
        } else {
            Err(Error::InvalidActivity(lambda))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn ln(self) -> f64 {
        self.0.ln()
    }
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: u32,
    edges: Vec<(u32, u32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl Graph {
    /// Builds a graph from an edge list, validating simplicity.
    pub fn new(n: u32, edges: &[(u32, u32)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n as usize];
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            let (u, v) = (a.min(b), a.max(b));
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, n });
            }
            if !seen.insert((u, v)) {
                return Err(Error::DuplicateEdge(u, v));
            }
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph {
            adjacency,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() as usize {
            return Err(Error::arg(format!(
                "got {} labels for {} vertices",
                labels.len(),
                self.n()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.adjacency.len() as u32
    }

    pub fn m(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adjacency[v as usize]
    }

    #[inline]
    pub fn degree(&self, v: u32) -> usize {
        self.adjacency[v as usize].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.adjacency[u as usize].binary_search(&v).is_ok()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Edges as sorted `(u, v)` pairs with `u < v`.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.m());
        for (u, list) in self.adjacency.iter().enumerate() {
            for &v in list {
                if (u as u32) < v {
                    out.push((u as u32, v));
                }
            }
        }
        out
    }

    pub fn check_vertex(&self, v: u32) -> Result<()> {
        if v < self.n() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange {
                vertex: v,
                n: self.n(),
            })
        }
    }

    /// Parses the plain text format: a header line `n m` followed by `m`
    /// lines `u v`. Edges may appear in either orientation; duplicates and
    /// self-loops are rejected.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedInput("empty input".into()))?;
        let mut it = header.split_whitespace();
        let n: u32 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::MalformedInput(format!("bad header line {header:?}")))?;
        let m: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::MalformedInput(format!("bad header line {header:?}")))?;
        if it.next().is_some() {
            return Err(Error::MalformedInput(format!(
                "trailing tokens in header {header:?}"
            )));
        }
        let mut edges = Vec::with_capacity(m);
        for line in lines {
            let mut it = line.split_whitespace();
            let u: u32 = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::MalformedInput(format!("bad edge line {line:?}")))?;
            let v: u32 = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::MalformedInput(format!("bad edge line {line:?}")))?;
            if it.next().is_some() {
                return Err(Error::MalformedInput(format!(
                    "trailing tokens in edge line {line:?}"
                )));
            }
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(Error::MalformedInput(format!(
                "header declares {m} edges, found {}",
                edges.len()
            )));
        }
        Graph::new(n, &edges)
    }

    /// Canonical text form: `n m` header, then edges sorted with `u < v`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n(), self.m());
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let raw: GraphJson = serde_json::from_str(text)?;
        let g = Graph::new(raw.n, &raw.edges)?;
        match raw.labels {
            Some(labels) => g.with_labels(labels),
            None => Ok(g),
        }
    }

    pub fn to_json(&self) -> String {
        let raw = GraphJson {
            n: self.n(),
            edges: self.edges(),
            labels: self.labels.clone(),
        };
        serde_json::to_string(&raw).expect("graph serialization cannot fail")
    }

    /// Structural invariant check: symmetric, sorted, simple. Used by tests
    /// and generators.
    pub fn check_invariants(&self) -> Result<()> {
        for (u, list) in self.adjacency.iter().enumerate() {
            let u = u as u32;
            for w in list.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::MalformedInput(format!(
                        "neighbor list of {u} not strictly sorted"
                    )));
                }
            }
            for &v in list {
                if v == u {
                    return Err(Error::SelfLoop(u));
                }
                if self.adjacency[v as usize].binary_search(&u).is_err() {
                    return Err(Error::MalformedInput(format!(
                        "adjacency not symmetric on {{{u}, {v}}}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// SplitMix64 output function. This is the only randomness primitive in the
/// crate; fixing it makes every seeded artifact bit-identical across
/// platforms.
#[inline]
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sequential SplitMix64 stream, for places that want a plain RNG.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `0..bound`.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        // Modulo bias is irrelevant at the sizes used here.
        self.next_u64() % bound.max(1)
    }
}

/// Uniform `[0, 1)` variate for the unordered pair `{u, v}` under `seed`.
///
/// The stream is splittable by construction: the pair index `u * n + v`
/// (with `u < v`) is folded into the seed through SplitMix64, so each pair
/// has an independent, order-free decision.
fn pair_uniform(seed: u64, u: u64, v: u64, n: u64) -> f64 {
    let idx = u * n + v;
    let z = splitmix64(seed ^ idx.wrapping_mul(0xA24B_AED4_963E_E407));
    (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Erdős–Rényi graph `G(n, d/n)` with a deterministic per-pair coin.
///
/// Identical `(n, d, seed)` produce byte-identical graphs on every platform.
pub fn generate_gnp(n: u32, d: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::arg("G(n, d/n) requires n >= 1"));
    }
    if !d.is_finite() || d < 0.0 {
        return Err(Error::arg(format!("mean degree must be >= 0, got {d}")));
    }
    let p = d / n as f64;
    if p > 1.0 {
        return Err(Error::EdgeProbability(p));
    }
    let mut edges = Vec::new();
    for u in 0..n as u64 {
        for v in (u + 1)..n as u64 {
            if pair_uniform(seed, u, v, n as u64) < p {
                edges.push((u as u32, v as u32));
            }
        }
    }
    Graph::new(n, &edges)
}

/// Supported lattice patch families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeKind {
    Cartesian,
    Triangular,
    Honeycomb,
}

impl std::str::FromStr for LatticeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cartesian" | "grid" => Ok(LatticeKind::Cartesian),
            "triangular" => Ok(LatticeKind::Triangular),
            "honeycomb" => Ok(LatticeKind::Honeycomb),
            other => Err(Error::arg(format!("unsupported lattice kind {other:?}"))),
        }
    }
}

/// Open-boundary (non-wrapping) finite patch of the named lattice.
///
/// Cartesian patches take one extent per dimension; triangular and honeycomb
/// patches take exactly two. The honeycomb patch uses the brick-wall
/// embedding: all horizontal edges, plus a vertical edge at even-parity
/// columns.
pub fn generate_lattice_patch(kind: LatticeKind, extents: &[u32]) -> Result<Graph> {
    if extents.is_empty() || extents.contains(&0) {
        return Err(Error::arg("extents must be nonempty and positive"));
    }
    match kind {
        LatticeKind::Cartesian => cartesian_patch(extents),
        LatticeKind::Triangular | LatticeKind::Honeycomb => {
            if extents.len() != 2 {
                return Err(Error::arg(format!(
                    "{kind:?} patches take exactly 2 extents, got {}",
                    extents.len()
                )));
            }
            let (w, h) = (extents[0], extents[1]);
            let id = |x: u32, y: u32| y * w + x;
            let mut edges = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    if x + 1 < w {
                        edges.push((id(x, y), id(x + 1, y)));
                    }
                    match kind {
                        LatticeKind::Triangular => {
                            if y + 1 < h {
                                edges.push((id(x, y), id(x, y + 1)));
                                if x + 1 < w {
                                    edges.push((id(x, y), id(x + 1, y + 1)));
                                }
                            }
                        }
                        LatticeKind::Honeycomb => {
                            if y + 1 < h && (x + y) % 2 == 0 {
                                edges.push((id(x, y), id(x, y + 1)));
                            }
                        }
                        LatticeKind::Cartesian => unreachable!(),
                    }
                }
            }
            Graph::new(w * h, &edges)
        }
    }
}

fn cartesian_patch(extents: &[u32]) -> Result<Graph> {
    let n: u64 = extents.iter().map(|&e| e as u64).product();
    if n > u32::MAX as u64 {
        return Err(Error::arg("lattice patch too large"));
    }
    let mut strides = vec![1u64; extents.len()];
    for k in 1..extents.len() {
        strides[k] = strides[k - 1] * extents[k - 1] as u64;
    }
    let mut edges = Vec::new();
    for id in 0..n {
        for (k, &e) in extents.iter().enumerate() {
            let coord = (id / strides[k]) % e as u64;
            if coord + 1 < e as u64 {
                edges.push((id as u32, (id + strides[k]) as u32));
            }
        }
    }
    Graph::new(n as u32, &edges)
}
