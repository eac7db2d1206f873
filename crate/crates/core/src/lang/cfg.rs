//! Basic-block control-flow graph of a lowered program.
//!
//! Each branch site terminates exactly one block, so conditional nodes and
//! branch sites are in 1:1 correspondence. Compound conditions expand into
//! chains of such blocks with short-circuit edges.

use super::ir::{BranchSite, IrCond, IrStmt};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Assign(usize),
    Reach(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminator {
    Goto(NodeId),
    Branch {
        label: usize,
        on_true: NodeId,
        on_false: NodeId,
    },
    /// Program end.
    Exit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Unconditional,
    True,
    False,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasicBlock {
    pub ops: Vec<Op>,
    pub term: Terminator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cfg {
    pub nodes: Vec<BasicBlock>,
    pub entry: NodeId,
    /// Blocks containing each target's reach marker, indexed by target.
    pub target_nodes: Vec<Vec<NodeId>>,
    /// Block terminated by each branch site, indexed by label.
    pub site_nodes: Vec<NodeId>,
    in_loop: Vec<bool>,
}

impl Cfg {
    pub(crate) fn build(body: &[IrStmt], sites: &[BranchSite], targets: usize) -> Cfg {
        let mut b = Builder {
            nodes: vec![BasicBlock {
                ops: Vec::new(),
                term: Terminator::Exit,
            }],
            target_nodes: vec![Vec::new(); targets],
            site_nodes: vec![usize::MAX; sites.len()],
        };
        b.block(body, 0);
        debug_assert!(b.site_nodes.iter().all(|&n| n != usize::MAX));
        let in_loop = sites.iter().map(|s| s.in_loop).collect();
        Cfg {
            nodes: b.nodes,
            entry: 0,
            target_nodes: b.target_nodes,
            site_nodes: b.site_nodes,
            in_loop,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn site_in_loop(&self, label: usize) -> bool {
        self.in_loop[label]
    }

    pub fn branch_count(&self) -> usize {
        self.site_nodes.len()
    }

    pub fn successors(&self, node: NodeId) -> Vec<(NodeId, EdgeKind)> {
        match self.nodes[node].term {
            Terminator::Goto(n) => vec![(n, EdgeKind::Unconditional)],
            Terminator::Branch {
                on_true, on_false, ..
            } => vec![(on_true, EdgeKind::True), (on_false, EdgeKind::False)],
            Terminator::Exit => Vec::new(),
        }
    }

    pub fn edges(&self) -> Vec<Edge> {
        (0..self.nodes.len())
            .flat_map(|from| {
                self.successors(from)
                    .into_iter()
                    .map(move |(to, kind)| Edge { from, to, kind })
            })
            .collect()
    }

    /// Edges whose target precedes or equals their source in a DFS
    /// discovery order, i.e. loop back edges.
    pub fn back_edges(&self) -> Vec<Edge> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            White,
            Grey,
            Black,
        }
        let mut mark = vec![Mark::White; self.nodes.len()];
        let mut out = Vec::new();
        let mut stack = vec![(self.entry, 0usize)];
        mark[self.entry] = Mark::Grey;
        while let Some(&mut (node, ref mut i)) = stack.last_mut() {
            let succ = self.successors(node);
            if *i < succ.len() {
                let (to, kind) = succ[*i];
                *i += 1;
                match mark[to] {
                    Mark::White => {
                        mark[to] = Mark::Grey;
                        stack.push((to, 0));
                    }
                    Mark::Grey => out.push(Edge {
                        from: node,
                        to,
                        kind,
                    }),
                    Mark::Black => {}
                }
            } else {
                mark[node] = Mark::Black;
                stack.pop();
            }
        }
        out
    }

    pub fn reachable_from_entry(&self) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.entry];
        seen[self.entry] = true;
        while let Some(n) = stack.pop() {
            for (s, _) in self.successors(n) {
                if !seen[s] {
                    seen[s] = true;
                    stack.push(s);
                }
            }
        }
        seen
    }
}

struct Builder {
    nodes: Vec<BasicBlock>,
    target_nodes: Vec<Vec<NodeId>>,
    site_nodes: Vec<NodeId>,
}

impl Builder {
    fn fresh(&mut self) -> NodeId {
        self.nodes.push(BasicBlock {
            ops: Vec::new(),
            term: Terminator::Exit,
        });
        self.nodes.len() - 1
    }

    /// Appends `stmts` starting in block `cur`; returns the block control
    /// falls through to.
    fn block(&mut self, stmts: &[IrStmt], mut cur: NodeId) -> NodeId {
        for s in stmts {
            match s {
                IrStmt::Assign(slot, _) => self.nodes[cur].ops.push(Op::Assign(*slot)),
                IrStmt::Reach(t) => {
                    self.nodes[cur].ops.push(Op::Reach(*t));
                    self.target_nodes[*t].push(cur);
                }
                IrStmt::If { cond, then, els } => {
                    let then_b = self.fresh();
                    let else_b = if els.is_empty() {
                        None
                    } else {
                        Some(self.fresh())
                    };
                    let join = self.fresh();
                    self.cond(cond, cur, then_b, else_b.unwrap_or(join));
                    let end = self.block(then, then_b);
                    self.nodes[end].term = Terminator::Goto(join);
                    if let Some(else_b) = else_b {
                        let end = self.block(els, else_b);
                        self.nodes[end].term = Terminator::Goto(join);
                    }
                    cur = join;
                }
                IrStmt::While { cond, body } => {
                    let header = self.fresh();
                    self.nodes[cur].term = Terminator::Goto(header);
                    let body_b = self.fresh();
                    let exit = self.fresh();
                    self.cond(cond, header, body_b, exit);
                    let end = self.block(body, body_b);
                    self.nodes[end].term = Terminator::Goto(header);
                    cur = exit;
                }
            }
        }
        cur
    }

    fn cond(&mut self, cond: &IrCond, at: NodeId, on_true: NodeId, on_false: NodeId) {
        match cond {
            IrCond::Site(label) => {
                self.nodes[at].term = Terminator::Branch {
                    label: *label,
                    on_true,
                    on_false,
                };
                self.site_nodes[*label] = at;
            }
            IrCond::Not(c) => self.cond(c, at, on_false, on_true),
            IrCond::And(a, b) => {
                let mid = self.fresh();
                self.cond(a, at, mid, on_false);
                self.cond(b, mid, on_true, on_false);
            }
            IrCond::Or(a, b) => {
                let mid = self.fresh();
                self.cond(a, at, on_true, mid);
                self.cond(b, mid, on_true, on_false);
            }
        }
    }
}
