//! Undirected agent graphs and connected components.

use std::collections::BTreeSet;

use crate::profile::PairEvent;

/// Union-find with union by size and path halving.
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        Self { parent: (0..len).collect(), size: vec![1; len] }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut x = x;
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, x: usize, y: usize) {
        let mut xr = self.find(x);
        let mut yr = self.find(y);
        if xr == yr {
            return;
        }
        if self.size[xr] < self.size[yr] {
            std::mem::swap(&mut xr, &mut yr);
        }
        self.parent[yr] = xr;
        self.size[xr] += self.size[yr];
    }
}

/// An undirected graph on the agent set `{0, .., m-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentGraph {
    agents: usize,
    edges: BTreeSet<PairEvent>,
}

impl AgentGraph {
    pub fn new(agents: usize) -> Self {
        Self { agents, edges: BTreeSet::new() }
    }

    pub fn with_edges(agents: usize, edges: impl IntoIterator<Item = PairEvent>) -> Self {
        let mut g = Self::new(agents);
        for e in edges {
            g.add_edge(e);
        }
        g
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn add_edge(&mut self, edge: PairEvent) {
        debug_assert!(edge.high() < self.agents);
        self.edges.insert(edge);
    }

    pub fn has_edge(&self, edge: PairEvent) -> bool {
        self.edges.contains(&edge)
    }

    pub fn edges(&self) -> impl Iterator<Item = PairEvent> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_connected(&self) -> bool {
        connected_components(self).len() == 1
    }
}

/// Connected-components partition of the agent set. Isolated agents are
/// singleton components. Components are sorted by their smallest member,
/// members ascending; the result does not depend on edge enumeration order.
pub fn connected_components(graph: &AgentGraph) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(graph.agents);
    for e in &graph.edges {
        uf.union(e.low(), e.high());
    }
    let mut by_root: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; graph.agents];
    for agent in 0..graph.agents {
        let root = uf.find(agent);
        if root_slot[root] == usize::MAX {
            root_slot[root] = by_root.len();
            by_root.push(Vec::new());
        }
        by_root[root_slot[root]].push(agent);
    }
    by_root
}
