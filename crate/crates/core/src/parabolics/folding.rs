//! Stallings graphs for finitely generated subgroups of free groups.
//!
//! Letters of the free basis are encoded as nonzero `i32`: `k` is the k-th
//! basis letter (1-based) and `-k` its inverse.

use std::collections::BTreeMap;

#[derive(Clone, Debug)]
pub struct StallingsGraph {
    /// `edges[v]` maps a label to the target vertex. Both orientations are stored.
    edges: Vec<BTreeMap<i32, usize>>,
}

pub fn reduce_free(w: &[i32]) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::with_capacity(w.len());
    for &x in w {
        if out.last() == Some(&-x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    out
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
}

impl StallingsGraph {
    pub fn new(gens: &[Vec<i32>]) -> Self {
        // Raw multigraph: one petal per generator, then fold.
        let mut raw: Vec<(usize, i32, usize)> = Vec::new();
        let mut n = 1usize;
        for g in gens {
            let g = reduce_free(g);
            if g.is_empty() {
                continue;
            }
            let mut cur = 0;
            for (k, &x) in g.iter().enumerate() {
                let next = if k + 1 == g.len() {
                    0
                } else {
                    n += 1;
                    n - 1
                };
                raw.push((cur, x, next));
                cur = next;
            }
        }

        let mut uf = UnionFind((0..n).collect());
        loop {
            let mut adj: Vec<BTreeMap<i32, usize>> = vec![BTreeMap::new(); n];
            let mut merge: Option<(usize, usize)> = None;
            'scan: for &(u, x, v) in &raw {
                let (u, v) = (uf.find(u), uf.find(v));
                for (a, lab, b) in [(u, x, v), (v, -x, u)] {
                    match adj[a].get(&lab) {
                        Some(&t) if t != b => {
                            merge = Some((t, b));
                            break 'scan;
                        }
                        _ => {
                            adj[a].insert(lab, b);
                        }
                    }
                }
            }
            match merge {
                Some((a, b)) => {
                    // Keep the base vertex as the representative of its class.
                    let (a, b) = (uf.find(a), uf.find(b));
                    let (keep, drop) = if b == uf.find(0) { (b, a) } else { (a, b) };
                    uf.0[drop] = keep;
                }
                None => return StallingsGraph { edges: adj },
            }
        }
    }

    pub fn accepts(&self, w: &[i32]) -> bool {
        let mut v = 0usize;
        for &x in &reduce_free(w) {
            match self.edges[v].get(&x) {
                Some(&t) => v = t,
                None => return false,
            }
        }
        v == 0
    }

    /// True iff the subgroup is trivial (no edges at the base).
    pub fn is_trivial(&self) -> bool {
        self.edges.iter().all(|e| e.is_empty())
    }
}
