//! Influence graph of a gain network: strongly connected components and simple cycles.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::GainNetwork;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkGraph {
    pub n: usize,
    /// `succ[j]` lists every `i` with an edge `j -> i`, ascending.
    pub succ: Vec<Vec<usize>>,
    /// Components, sinks first; members ascending.
    pub scc: Vec<Vec<usize>>,
    /// New position `k` holds old index `permutation[k]`.
    pub permutation: Vec<usize>,
    pub block_of: Vec<usize>,
}

impl NetworkGraph {
    pub fn is_irreducible(&self) -> bool {
        self.scc.len() == 1 && self.scc[0].len() == self.n
    }

    /// Johnson's enumeration. Each cycle starts at its smallest node and follows the edges.
    pub fn simple_cycles(&self, cap: usize) -> Result<Vec<Vec<usize>>> {
        let mut out = Vec::new();
        for s in 0..self.n {
            let mut st = JohnsonState { blocked: vec![false; self.n], b: vec![Vec::new(); self.n], stack: Vec::new() };
            self.circuit(s, s, &mut st, &mut out, cap)?;
        }
        Ok(out)
    }

    fn circuit(
        &self,
        v: usize,
        s: usize,
        st: &mut JohnsonState,
        out: &mut Vec<Vec<usize>>,
        cap: usize,
    ) -> Result<bool> {
        let mut found = false;
        st.stack.push(v);
        st.blocked[v] = true;
        for &w in self.succ[v].iter().filter(|&&w| w >= s) {
            if w == s {
                out.push(st.stack.clone());
                if out.len() > cap {
                    return Err(Error::CycleCap(cap));
                }
                found = true;
            } else if !st.blocked[w] && self.circuit(w, s, st, out, cap)? {
                found = true;
            }
        }
        if found {
            st.unblock(v);
        } else {
            for &w in self.succ[v].iter().filter(|&&w| w >= s) {
                if !st.b[w].contains(&v) {
                    st.b[w].push(v);
                }
            }
        }
        st.stack.pop();
        Ok(found)
    }
}

struct JohnsonState {
    blocked: Vec<bool>,
    b: Vec<Vec<usize>>,
    stack: Vec<usize>,
}

impl JohnsonState {
    fn unblock(&mut self, u: usize) {
        self.blocked[u] = false;
        while let Some(w) = self.b[u].pop() {
            if self.blocked[w] {
                self.unblock(w);
            }
        }
    }
}

pub fn condensation(net: &GainNetwork) -> NetworkGraph {
    let n = net.n();
    let mut succ = vec![Vec::new(); n];
    for (i, j) in net.edges() {
        succ[j].push(i);
    }
    for s in &mut succ {
        s.sort_unstable();
    }
    let comps = tarjan(&succ);
    let mut comp_of = vec![0; n];
    for (c, members) in comps.iter().enumerate() {
        for &v in members {
            comp_of[v] = c;
        }
    }
    let mut remaining: Vec<bool> = vec![true; comps.len()];
    let mut scc = Vec::with_capacity(comps.len());
    while scc.len() < comps.len() {
        let pick = (0..comps.len())
            .filter(|&c| remaining[c])
            .filter(|&c| comps[c].iter().all(|&v| succ[v].iter().all(|&w| comp_of[w] == c || !remaining[comp_of[w]])))
            .min_by_key(|&c| comps[c][0])
            .expect("a finite DAG always has a sink");
        remaining[pick] = false;
        scc.push(comps[pick].clone());
    }
    let permutation: Vec<usize> = scc.iter().flatten().copied().collect();
    let mut block_of = vec![0; n];
    for (b, members) in scc.iter().enumerate() {
        for &v in members {
            block_of[v] = b;
        }
    }
    NetworkGraph { n, succ, scc, permutation, block_of }
}

fn tarjan(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct T<'a> {
        succ: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }
    fn visit(t: &mut T, v: usize) {
        t.index[v] = Some(t.next);
        t.low[v] = t.next;
        t.next += 1;
        t.stack.push(v);
        t.on_stack[v] = true;
        for k in 0..t.succ[v].len() {
            let w = t.succ[v][k];
            match t.index[w] {
                None => {
                    visit(t, w);
                    t.low[v] = t.low[v].min(t.low[w]);
                }
                Some(iw) if t.on_stack[w] => t.low[v] = t.low[v].min(iw),
                _ => {}
            }
        }
        if Some(t.low[v]) == t.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = t.stack.pop().unwrap();
                t.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            t.out.push(comp);
        }
    }
    let n = succ.len();
    let mut t = T {
        succ,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if t.index[v].is_none() {
            visit(&mut t, v);
        }
    }
    t.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kfun::Aggregation::*;
    use crate::network::tests::example_net;

    fn net_from_edges(n: usize, edges: &[(usize, usize)]) -> GainNetwork {
        let mut s = vec![vec![0.0; n]; n];
        for &(from, to) in edges {
            s[to][from] = 0.5;
        }
        GainNetwork::linear(vec![Max; n], &s, &vec![0.0; n]).unwrap()
    }

    #[test]
    fn example_is_irreducible() {
        let g = condensation(&example_net());
        assert!(g.is_irreducible());
        assert_eq!(g.scc, vec![vec![0, 1, 2]]);
        let cycles = g.simple_cycles(10_000).unwrap();
        assert_eq!(cycles, vec![vec![0, 1, 2], vec![1, 2]]);
    }

    #[test]
    fn cascade_and_disjoint_cycles() {
        let g = condensation(&net_from_edges(2, &[(0, 1)]));
        assert_eq!(g.scc, vec![vec![1], vec![0]]);
        assert_eq!(g.permutation, vec![1, 0]);
        assert!(g.simple_cycles(10).unwrap().is_empty());
        let g = condensation(&net_from_edges(4, &[(0, 1), (1, 0), (2, 3), (3, 2)]));
        assert_eq!(g.scc, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn permutation_is_block_upper_triangular() {
        let net = net_from_edges(5, &[(0, 1), (1, 2), (2, 1), (3, 4), (4, 0), (2, 3)]);
        let g = condensation(&net);
        let p = net.permuted(&g.permutation).unwrap();
        let block: Vec<usize> = g.permutation.iter().map(|&v| g.block_of[v]).collect();
        for (i, j) in p.edges() {
            assert!(block[i] <= block[j], "edge {j}->{i} below the block diagonal");
        }
    }

    #[test]
    fn complete_graph_cycle_count_and_cap() {
        let n = 5;
        let edges: Vec<(usize, usize)> =
            (0..n).flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b))).collect();
        let g = condensation(&net_from_edges(n, &edges));
        // sum over k = 2..5 of C(5,k) (k-1)!
        assert_eq!(g.simple_cycles(10_000).unwrap().len(), 10 + 20 + 30 + 24);
        assert!(matches!(g.simple_cycles(50), Err(Error::CycleCap(50))));
    }
}
