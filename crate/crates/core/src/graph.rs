//! Small directed-graph toolkit: compressed adjacency, Tarjan SCC,
//! weak components and reverse Cuthill–McKee ordering.

use std::collections::VecDeque;

/// Directed graph in compressed sparse row form.
#[derive(Debug, Clone)]
pub struct Digraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Digraph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut deg = vec![0usize; n + 1];
        for &(a, _) in edges {
            deg[a + 1] += 1;
        }
        for i in 0..n {
            deg[i + 1] += deg[i];
        }
        let mut targets = vec![0; edges.len()];
        let mut fill = deg.clone();
        for &(a, b) in edges {
            targets[fill[a]] = b;
            fill[a] += 1;
        }
        Digraph { offsets: deg, targets }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }
}

/// Strongly connected components. `comp[v]` is the component of `v`;
/// components are numbered in reverse topological order (Tarjan order).
#[derive(Debug, Clone)]
pub struct Components {
    pub comp: Vec<usize>,
    pub count: usize,
}

impl Components {
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count];
        for (v, &c) in self.comp.iter().enumerate() {
            out[c].push(v);
        }
        out
    }

    /// Per component: true when no edge leaves it.
    pub fn closed(&self, g: &Digraph) -> Vec<bool> {
        let mut closed = vec![true; self.count];
        for v in 0..g.len() {
            for &w in g.successors(v) {
                if self.comp[w] != self.comp[v] {
                    closed[self.comp[v]] = false;
                }
            }
        }
        closed
    }
}

/// Iterative Tarjan; safe for graphs with millions of vertices.
pub fn strongly_connected(g: &Digraph) -> Components {
    const UNSEEN: usize = usize::MAX;
    let n = g.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut call: Vec<(usize, usize)> = Vec::new();
    let mut next = 0usize;
    let mut count = 0usize;

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let succ = g.successors(v);
            if *pos < succ.len() {
                let w = succ[*pos];
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = count;
                        if w == v {
                            break;
                        }
                    }
                    count += 1;
                }
            }
        }
    }
    Components { comp, count }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Weakly connected components, numbered by smallest member.
pub fn weakly_connected(n: usize, edges: &[(usize, usize)]) -> Components {
    let mut parent: Vec<usize> = (0..n).collect();
    for &(a, b) in edges {
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b);
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut comp = vec![0; n];
    let mut count = 0;
    for v in 0..n {
        let r = find(&mut parent, v);
        if label[r] == usize::MAX {
            label[r] = count;
            count += 1;
        }
        comp[v] = label[r];
    }
    Components { comp, count }
}

/// Reverse Cuthill–McKee ordering of an undirected graph given as
/// symmetric adjacency lists. Returns `order[k] = vertex placed at k`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs_levels = |start: usize, visited: &[bool]| -> (usize, usize) {
        // returns (eccentricity, a vertex of minimal degree in the last level)
        let mut dist = vec![usize::MAX; n];
        let mut q = VecDeque::new();
        dist[start] = 0;
        q.push_back(start);
        let mut last = start;
        while let Some(v) = q.pop_front() {
            if dist[v] > dist[last] || (dist[v] == dist[last] && adj[v].len() < adj[last].len()) {
                last = v;
            }
            for &w in &adj[v] {
                if !visited[w] && dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    q.push_back(w);
                }
            }
        }
        (dist[last], last)
    };
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (adj[v].len(), v));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let mut start = seed;
        let (mut ecc, mut far) = bfs_levels(start, &visited);
        for _ in 0..8 {
            let (e2, f2) = bfs_levels(far, &visited);
            if e2 <= ecc {
                break;
            }
            start = far;
            ecc = e2;
            far = f2;
        }
        let mut q = VecDeque::new();
        visited[start] = true;
        q.push_back(start);
        while let Some(v) = q.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            nb.sort_by_key(|&w| (adj[w].len(), w));
            nb.dedup();
            for w in nb {
                if !visited[w] {
                    visited[w] = true;
                    q.push_back(w);
                }
            }
        }
    }
    order.reverse();
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scc_of_cycle_and_tail() {
        // 0 -> 1 -> 2 -> 0, 2 -> 3
        let g = Digraph::from_edges(4, &[(0, 1), (1, 2), (2, 0), (2, 3)]);
        let c = strongly_connected(&g);
        assert_eq!(c.count, 2);
        assert_eq!(c.comp[0], c.comp[1]);
        assert_eq!(c.comp[1], c.comp[2]);
        let closed = c.closed(&g);
        assert!(closed[c.comp[3]]);
        assert!(!closed[c.comp[0]]);
    }

    #[test]
    fn scc_deep_chain_no_overflow() {
        let n = 200_000;
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let g = Digraph::from_edges(n, &edges);
        assert_eq!(strongly_connected(&g).count, n);
    }

    #[test]
    fn weak_components() {
        let c = weakly_connected(5, &[(0, 1), (3, 2)]);
        assert_eq!(c.count, 3);
        assert_eq!(c.comp, vec![0, 0, 1, 1, 2]);
    }

    #[test]
    fn rcm_is_permutation_and_narrows_band() {
        // a path shuffled
        let perm = [5, 2, 7, 0, 3, 6, 1, 4];
        let mut adj = vec![Vec::new(); 8];
        for i in 0..7 {
            let (a, b) = (perm[i], perm[i + 1]);
            adj[a].push(b);
            adj[b].push(a);
        }
        let order = reverse_cuthill_mckee(&adj);
        let mut pos = vec![0; 8];
        for (k, &v) in order.iter().enumerate() {
            pos[v] = k;
        }
        let mut seen = order.clone();
        seen.sort();
        assert_eq!(seen, (0..8).collect::<Vec<_>>());
        for v in 0..8 {
            for &w in &adj[v] {
                assert!((pos[v] as i64 - pos[w] as i64).abs() <= 1);
            }
        }
    }
}
