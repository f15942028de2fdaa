//! Self-avoiding-walk trees with occupied/unoccupied fixings at
//! cycle-closing leaves, built so that the root occupation ratio on the tree
//! equals the one on the graph.
//!
//! Nodes are walks. The children of a walk ending at `u` are its extensions
//! by one neighbor other than the predecessor, enumerated in ascending
//! neighbor order (the canonical edge ordering). An extension that returns
//! to a visited vertex `x` becomes a leaf: it is fixed occupied when the
//! closing edge comes after the edge through which the walk left `x` in `x`'s
//! ordering, unoccupied when it comes before. A walk reaching a vertex fixed
//! by the boundary condition is fixed identically and also terminates.

use crate::boundary::{BoundaryCondition, Spin};
use crate::error::{Error, Result};
use crate::graph::{Activity, Graph};

/// Default guard on the number of tree nodes visited in one expansion.
pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafKind {
    /// Extension closed a cycle; fixed per the canonical edge ordering.
    Cycle(Spin),
    /// Endpoint is fixed by the translated boundary condition.
    Fixed(Spin),
    /// Unfixed walk cut at the expansion depth.
    Truncated,
}

pub(crate) trait TreeVisitor {
    fn internal_enter(&mut self, vertex: u32, depth: u32);
    fn internal_exit(&mut self, vertex: u32, depth: u32);
    fn leaf(&mut self, vertex: u32, depth: u32, kind: LeafKind);
}

struct Frame {
    vertex: u32,
    pred: u32,
    next: usize,
}

const NO_PRED: u32 = u32::MAX;
const OFF_PATH: u32 = u32::MAX;

/// Iterative depth-first traversal of the walk tree. Returns the number of
/// nodes visited (internal plus leaves). Walk depth can reach the number of
/// graph vertices, so no recursion.
pub(crate) fn traverse<V: TreeVisitor>(
    graph: &Graph,
    sigma: &BoundaryCondition,
    root: u32,
    depth_limit: Option<u32>,
    budget: u64,
    visitor: &mut V,
) -> Result<u64> {
    graph.check_vertex(root)?;
    if sigma.is_fixed(root) {
        return Err(Error::VertexFixed(root));
    }
    sigma.validate(graph)?;
    let mut spin_of: Vec<Option<Spin>> = vec![None; graph.n() as usize];
    for (v, spin) in sigma.iter() {
        spin_of[v as usize] = Some(spin);
    }

    let mut path: Vec<u32> = vec![root];
    let mut pos_on_path = vec![OFF_PATH; graph.n() as usize];
    pos_on_path[root as usize] = 0;
    let mut stack = vec![Frame {
        vertex: root,
        pred: NO_PRED,
        next: 0,
    }];
    let mut nodes: u64 = 1;
    visitor.internal_enter(root, 0);

    loop {
        let top = stack.len() - 1;
        let depth_child = stack.len() as u32;
        let vertex = stack[top].vertex;
        let pred = stack[top].pred;
        let adj = graph.neighbors(vertex);
        let mut descend = None;
        while stack[top].next < adj.len() {
            let w = adj[stack[top].next];
            stack[top].next += 1;
            if w == pred {
                continue;
            }
            nodes += 1;
            if nodes > budget {
                return Err(Error::NodeBudget(budget));
            }
            if let Some(spin) = spin_of[w as usize] {
                visitor.leaf(w, depth_child, LeafKind::Fixed(spin));
                continue;
            }
            let pos = pos_on_path[w as usize];
            if pos != OFF_PATH {
                // cycle closing at x = w: compare the closing edge {w, vertex}
                // with the edge through which the walk left w
                let exit = path[pos as usize + 1];
                let spin = if vertex > exit {
                    Spin::Occupied
                } else {
                    Spin::Unoccupied
                };
                visitor.leaf(w, depth_child, LeafKind::Cycle(spin));
                continue;
            }
            if depth_limit == Some(depth_child) {
                visitor.leaf(w, depth_child, LeafKind::Truncated);
                continue;
            }
            descend = Some(w);
            break;
        }
        match descend {
            Some(w) => {
                visitor.internal_enter(w, depth_child);
                pos_on_path[w as usize] = path.len() as u32;
                path.push(w);
                stack.push(Frame {
                    vertex: w,
                    pred: vertex,
                    next: 0,
                });
            }
            None => {
                let frame = stack.pop().expect("stack nonempty");
                visitor.internal_exit(frame.vertex, stack.len() as u32);
                if stack.is_empty() {
                    return Ok(nodes);
                }
                path.pop();
                pos_on_path[frame.vertex as usize] = OFF_PATH;
            }
        }
    }
}

/// Lazily expanded walk tree rooted at a vertex. Holds the construction
/// inputs; expansion and evaluation walk the graph on demand.
#[derive(Debug, Clone)]
pub struct WeitzSawTree<'a> {
    pub graph: &'a Graph,
    pub root: u32,
    pub boundary: &'a BoundaryCondition,
    /// `None` expands walks to exhaustion (finite on finite graphs).
    pub depth: Option<u32>,
    pub node_budget: u64,
}

pub fn build_weitz_saw_tree<'a>(
    graph: &'a Graph,
    root: u32,
    boundary: &'a BoundaryCondition,
    depth: Option<u32>,
    node_budget: u64,
) -> Result<WeitzSawTree<'a>> {
    graph.check_vertex(root)?;
    boundary.validate(graph)?;
    if boundary.is_fixed(root) {
        return Err(Error::VertexFixed(root));
    }
    Ok(WeitzSawTree {
        graph,
        root,
        boundary,
        depth,
        node_budget,
    })
}

/// Materialized tree node, for inspection and small cases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandedNode {
    pub vertex: u32,
    pub kind: Option<LeafKind>,
    pub children: Vec<ExpandedNode>,
}

impl ExpandedNode {
    pub fn is_leaf(&self) -> bool {
        self.kind.is_some()
    }
}

/// Per-level census of an expansion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LevelCount {
    pub internal: u64,
    pub cycle_leaves: u64,
    pub fixed_leaves: u64,
    pub truncated: u64,
}

impl<'a> WeitzSawTree<'a> {
    /// Materializes the tree. Intended for small graphs; the node budget
    /// still applies.
    pub fn expand(&self) -> Result<ExpandedNode> {
        struct Builder {
            stack: Vec<ExpandedNode>,
            result: Option<ExpandedNode>,
        }
        impl TreeVisitor for Builder {
            fn internal_enter(&mut self, vertex: u32, _depth: u32) {
                self.stack.push(ExpandedNode {
                    vertex,
                    kind: None,
                    children: Vec::new(),
                });
            }
            fn internal_exit(&mut self, _vertex: u32, _depth: u32) {
                let node = self.stack.pop().expect("builder stack");
                match self.stack.last_mut() {
                    Some(parent) => parent.children.push(node),
                    None => self.result = Some(node),
                }
            }
            fn leaf(&mut self, vertex: u32, _depth: u32, kind: LeafKind) {
                self.stack
                    .last_mut()
                    .expect("leaf below root")
                    .children
                    .push(ExpandedNode {
                        vertex,
                        kind: Some(kind),
                        children: Vec::new(),
                    });
            }
        }
        let mut b = Builder {
            stack: Vec::new(),
            result: None,
        };
        traverse(
            self.graph,
            self.boundary,
            self.root,
            self.depth,
            self.node_budget,
            &mut b,
        )?;
        Ok(b.result.expect("traversal produces a root"))
    }

    /// Node counts per level, split by role.
    pub fn level_counts(&self) -> Result<Vec<LevelCount>> {
        struct Census {
            levels: Vec<LevelCount>,
        }
        impl Census {
            fn at(&mut self, depth: u32) -> &mut LevelCount {
                let depth = depth as usize;
                if self.levels.len() <= depth {
                    self.levels.resize(depth + 1, LevelCount::default());
                }
                &mut self.levels[depth]
            }
        }
        impl TreeVisitor for Census {
            fn internal_enter(&mut self, _vertex: u32, depth: u32) {
                self.at(depth).internal += 1;
            }
            fn internal_exit(&mut self, _vertex: u32, _depth: u32) {}
            fn leaf(&mut self, _vertex: u32, depth: u32, kind: LeafKind) {
                let slot = self.at(depth);
                match kind {
                    LeafKind::Cycle(_) => slot.cycle_leaves += 1,
                    LeafKind::Fixed(_) => slot.fixed_leaves += 1,
                    LeafKind::Truncated => slot.truncated += 1,
                }
            }
        }
        let mut census = Census { levels: Vec::new() };
        traverse(
            self.graph,
            self.boundary,
            self.root,
            self.depth,
            self.node_budget,
            &mut census,
        )?;
        Ok(census.levels)
    }

    /// Evaluates the ratio recurrence under the two extreme completions of
    /// the truncation frontier: every unfixed frontier node occupied
    /// (`value_plus`) or unoccupied (`value_minus`). Returns
    /// `(value_plus, value_minus, nodes_visited)`.
    pub fn eval_extremes(&self, activity: Activity) -> Result<(f64, f64, u64)> {
        struct EvalFrame {
            prod_plus: f64,
            prod_minus: f64,
            occ_plus: bool,
            occ_minus: bool,
        }
        struct Eval {
            lambda: f64,
            frames: Vec<EvalFrame>,
            result: (f64, f64),
        }
        impl TreeVisitor for Eval {
            fn internal_enter(&mut self, _vertex: u32, _depth: u32) {
                self.frames.push(EvalFrame {
                    prod_plus: 1.0,
                    prod_minus: 1.0,
                    occ_plus: false,
                    occ_minus: false,
                });
            }
            fn internal_exit(&mut self, _vertex: u32, _depth: u32) {
                let f = self.frames.pop().expect("eval stack");
                let plus = if f.occ_plus {
                    0.0
                } else {
                    self.lambda * f.prod_plus
                };
                let minus = if f.occ_minus {
                    0.0
                } else {
                    self.lambda * f.prod_minus
                };
                debug_assert!(
                    (0.0..=self.lambda).contains(&plus) && (0.0..=self.lambda).contains(&minus),
                    "intermediate ratio escaped [0, lambda]"
                );
                match self.frames.last_mut() {
                    Some(parent) => {
                        parent.prod_plus *= 1.0 / (1.0 + plus);
                        parent.prod_minus *= 1.0 / (1.0 + minus);
                    }
                    None => self.result = (plus, minus),
                }
            }
            fn leaf(&mut self, _vertex: u32, _depth: u32, kind: LeafKind) {
                let top = self.frames.last_mut().expect("leaf below root");
                match kind {
                    LeafKind::Cycle(Spin::Occupied) | LeafKind::Fixed(Spin::Occupied) => {
                        top.occ_plus = true;
                        top.occ_minus = true;
                    }
                    // unoccupied fixings contribute a unit factor
                    LeafKind::Cycle(Spin::Unoccupied) | LeafKind::Fixed(Spin::Unoccupied) => {}
                    LeafKind::Truncated => {
                        top.occ_plus = true;
                    }
                }
            }
        }
        let mut eval = Eval {
            lambda: activity.value(),
            frames: Vec::new(),
            result: (f64::NAN, f64::NAN),
        };
        let nodes = traverse(
            self.graph,
            self.boundary,
            self.root,
            self.depth,
            self.node_budget,
            &mut eval,
        )?;
        Ok((eval.result.0, eval.result.1, nodes))
    }
}
