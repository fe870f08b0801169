//! Geometry of the relative Cayley graph `Γ(G, X ∪ 𝒫)`.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::group::{Element, GroupInstance};
use crate::metrics;
use crate::parabolics::Payload;
use crate::words::{Letter, RelWord};

/// A maximal run of letters from one `P_i`, as `start..end` letter indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub value: Payload,
}

pub fn components(g: &GroupInstance, w: &RelWord) -> Vec<Component> {
    let mut out: Vec<Component> = Vec::new();
    for (k, l) in w.0.iter().enumerate() {
        if let Letter::Para { index, payload } = l {
            match out.last_mut() {
                Some(c) if c.index == *index && c.end == k => {
                    c.value = g.oracles()[*index].mul(&c.value, payload);
                    c.end = k + 1;
                }
                _ => out.push(Component {
                    index: *index,
                    start: k,
                    end: k + 1,
                    value: payload.clone(),
                }),
            }
        }
    }
    out
}

/// The `P_i` value of the subword strictly between `s` and `t`, when that
/// subword lies in `P_i`.
fn connecting_value(g: &GroupInstance, w: &RelWord, s: &Component, t: &Component) -> Result<Option<Payload>> {
    if s.index != t.index || s.end > t.start {
        return Ok(None);
    }
    let between = RelWord(w.0[s.end..t.start].to_vec());
    metrics::parabolic_membership(g, s.index, &between)
}

pub fn are_connected(g: &GroupInstance, w: &RelWord, s: &Component, t: &Component) -> Result<bool> {
    Ok(connecting_value(g, w, s, t)?.is_some())
}

fn first_connected(g: &GroupInstance, w: &RelWord) -> Result<Option<(Component, Component, Payload)>> {
    let comps = components(g, w);
    for (a, s) in comps.iter().enumerate() {
        for t in &comps[a + 1..] {
            if let Some(p) = connecting_value(g, w, s, t)? {
                return Ok(Some((s.clone(), t.clone(), p)));
            }
        }
    }
    Ok(None)
}

pub fn has_backtracking(g: &GroupInstance, w: &RelWord) -> Result<Option<(Component, Component)>> {
    Ok(first_connected(g, w)?.map(|(s, t, _)| (s, t)))
}

/// Repeatedly replaces the first connected pair `s … t` by the single
/// parabolic letter it spells (dropped when trivial).
pub fn remove_backtracking(g: &GroupInstance, w: &RelWord) -> Result<RelWord> {
    let mut w = w.clone();
    while let Some((s, t, mid)) = first_connected(g, &w)? {
        let o = &g.oracles()[s.index];
        let value = o.mul(&o.mul(&s.value, &mid), &t.value);
        let mut letters = w.0[..s.start].to_vec();
        if !o.is_identity(&value) {
            letters.push(Letter::Para { index: s.index, payload: value });
        }
        letters.extend_from_slice(&w.0[t.end..]);
        w = RelWord(letters);
    }
    Ok(w)
}

/// Exact `|w|_{X∪𝒫}`. Native free products read it off the normal form;
/// otherwise the bounded search of [`relative_length_o3`] is used.
pub fn relative_length(g: &GroupInstance, w: &RelWord) -> Result<usize> {
    match g.native() {
        Some(_) => Ok(g.native_relative_length(&g.element(w)?)),
        None => relative_length_o3(g, w),
    }
}

/// Component bound used by the bounded search: the longest component of the
/// backtracking-free form plus `2ε(|w'|, |w'|)`.
pub fn o3_component_bound(g: &GroupInstance, w: &RelWord) -> Result<(RelWord, usize)> {
    let w2 = remove_backtracking(g, w)?;
    let mut longest = 0;
    for c in components(g, &w2) {
        longest = longest.max(g.oracles()[c.index].length(&c.value)?);
    }
    let n = w2.len() as f64;
    let eps = metrics::bcp_epsilon(g, n.max(1.0), n)? as usize;
    Ok((w2, longest + 2 * eps))
}

/// Relative length by breadth-first search over edges `X ∪ {p : |p|_X ≤ B}`
/// with `B` the O3 component bound. Searches from both ends and meets in
/// the middle.
pub fn relative_length_o3(g: &GroupInstance, w: &RelWord) -> Result<usize> {
    let (w2, bound) = o3_component_bound(g, w)?;
    let target = g.element(&w2)?;
    if target.is_identity() {
        return Ok(0);
    }
    let edges = edge_set(g, bound)?;
    let upper = w2.len();
    let cap = g.budgets().max_vertices;

    let mut sides: [HashMap<Element, usize>; 2] = [
        HashMap::from([(Element::identity(), 0)]),
        HashMap::from([(target.clone(), 0)]),
    ];
    let mut frontiers = [vec![Element::identity()], vec![target]];
    let mut radii = [0usize; 2];
    loop {
        if radii[0] + radii[1] >= upper {
            return Ok(upper);
        }
        let side = if frontiers[0].len() <= frontiers[1].len() { 0 } else { 1 };
        let mut next = Vec::new();
        let mut best: Option<usize> = None;
        for v in &frontiers[side] {
            for e in &edges {
                let u = g.mul(v, e);
                if sides[side].contains_key(&u) {
                    continue;
                }
                if let Some(d) = sides[1 - side].get(&u) {
                    let total = radii[side] + 1 + d;
                    best = Some(best.map_or(total, |b: usize| b.min(total)));
                }
                sides[side].insert(u.clone(), radii[side] + 1);
                next.push(u);
                if sides[0].len() + sides[1].len() > cap {
                    return Err(Error::budget(
                        "relative length search",
                        Some((radii[0] + radii[1] + 1) as u64),
                    ));
                }
            }
        }
        radii[side] += 1;
        if let Some(b) = best {
            return Ok(b);
        }
        if next.is_empty() {
            return Err(Error::Contract("relative length search exhausted the graph".into()));
        }
        frontiers[side] = next;
    }
}

/// Edge labels `X ∪ {p ∈ 𝒫 : |p|_{X_i} ≤ bound}` as elements, deduplicated.
fn edge_set(g: &GroupInstance, bound: usize) -> Result<Vec<Element>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for x in g.alphabet().letters() {
        let e = g.gen_element(x);
        if seen.insert(e.clone()) {
            out.push(e);
        }
    }
    for (i, o) in g.oracles().iter().enumerate() {
        for (p, d) in o.enumerate_capped(bound, g.budgets().max_vertices)? {
            if d == 0 {
                continue;
            }
            let e = g.para_element(i, &p);
            if seen.insert(e.clone()) {
                out.push(e);
            }
        }
    }
    Ok(out)
}

/// First subword `w[s..e]` (ordered by start, then length) with
/// `|u|_{X∪𝒫} < |u|/λ − c`, or `None` when `w` is a `(λ,c)`-quasigeodesic.
pub fn first_violation(g: &GroupInstance, w: &RelWord, lambda: f64, c: f64) -> Result<Option<(usize, usize)>> {
    if lambda < 1.0 || c < 0.0 {
        return Err(Error::Contract("quasigeodesic constants need λ ≥ 1 and c ≥ 0".into()));
    }
    // Subwords of a geodesic are geodesic, and geodesics pass whenever λ ≥ 1, c ≥ 0.
    if relative_length(g, w)? == w.len() {
        return Ok(None);
    }
    let ok = |len: usize, rel: usize| rel as f64 >= len as f64 / lambda - c;
    if g.native().is_some() {
        for s in 0..w.len() {
            let mut e = Element::identity();
            for t in s..w.len() {
                e = g.mul(&e, &g.letter_element(&w.0[t]));
                if !ok(t + 1 - s, g.native_relative_length(&e)) {
                    return Ok(Some((s, t + 1)));
                }
            }
        }
    } else {
        for s in 0..w.len() {
            for t in s + 1..=w.len() {
                let u = RelWord(w.0[s..t].to_vec());
                if !ok(t - s, relative_length(g, &u)?) {
                    return Ok(Some((s, t)));
                }
            }
        }
    }
    Ok(None)
}

/// `(C, C)`-quasigeodesic test; on failure returns the first violating subword.
pub fn is_quasigeodesic(g: &GroupInstance, w: &RelWord, big_c: f64) -> Result<(bool, Option<RelWord>)> {
    if big_c < 1.0 {
        return Err(Error::Contract("C must be at least 1".into()));
    }
    Ok(match first_violation(g, w, big_c, big_c)? {
        None => (true, None),
        Some((s, t)) => (false, Some(RelWord(w.0[s..t].to_vec()))),
    })
}

/// Exact ball of `Γ(G, X ∪ {p : |p|_X ≤ B})` around the identity.
#[derive(Clone, Debug)]
pub struct RelBall {
    pub radius: usize,
    pub bound: usize,
    vertices: Vec<Element>,
    dist: Vec<usize>,
    index: HashMap<Element, usize>,
    /// Every edge `(parent, label)` into a vertex from the previous layer.
    parents: Vec<Vec<(usize, Letter)>>,
}

impl RelBall {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Element] {
        &self.vertices
    }

    pub fn distance_at(&self, k: usize) -> usize {
        self.dist[k]
    }

    pub fn index_of(&self, e: &Element) -> Option<usize> {
        self.index.get(e).copied()
    }

    pub fn distance(&self, e: &Element) -> Option<usize> {
        self.index_of(e).map(|k| self.dist[k])
    }

    pub fn parents(&self, k: usize) -> &[(usize, Letter)] {
        &self.parents[k]
    }

    /// One geodesic word from the centre to vertex `k` (first parent each step).
    pub fn geodesic_word(&self, mut k: usize) -> RelWord {
        let mut letters = Vec::new();
        while let Some((p, l)) = self.parents[k].first() {
            letters.push(l.clone());
            k = *p;
        }
        letters.reverse();
        RelWord(letters)
    }

    /// Indices of every vertex lying on some geodesic from the centre to `k`.
    pub fn geodesic_vertices(&self, k: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([k]);
        let mut stack = vec![k];
        while let Some(v) = stack.pop() {
            for (p, _) in &self.parents[v] {
                if seen.insert(*p) {
                    stack.push(*p);
                }
            }
        }
        seen
    }
}

pub fn ball(g: &GroupInstance, radius: usize, bound: usize) -> Result<RelBall> {
    if radius > g.budgets().max_ball_radius {
        return Err(Error::budget("ball radius", Some(radius as u64)));
    }
    if bound > g.budgets().max_component_bound {
        return Err(Error::budget("component bound", Some(bound as u64)));
    }
    g.element(&RelWord::new())?;
    let mut labels: Vec<(Letter, Element)> = g
        .alphabet()
        .letters()
        .map(|x| (Letter::Gen(x), g.gen_element(x)))
        .collect();
    for (i, o) in g.oracles().iter().enumerate() {
        for (p, d) in o.enumerate(bound) {
            if d > 0 {
                let e = g.para_element(i, &p);
                labels.push((Letter::Para { index: i, payload: p }, e));
            }
        }
    }
    let mut b = RelBall {
        radius,
        bound,
        vertices: vec![Element::identity()],
        dist: vec![0],
        index: HashMap::from([(Element::identity(), 0)]),
        parents: vec![Vec::new()],
    };
    let mut head = 0;
    while head < b.vertices.len() {
        let d = b.dist[head];
        if d == radius {
            break;
        }
        let v = b.vertices[head].clone();
        for (l, e) in &labels {
            let u = g.mul(&v, e);
            match b.index.get(&u) {
                Some(&k) => {
                    if b.dist[k] == d + 1 {
                        b.parents[k].push((head, l.clone()));
                    }
                }
                None => {
                    if b.vertices.len() >= g.budgets().max_vertices {
                        return Err(Error::budget("relative ball", Some(d as u64)));
                    }
                    b.index.insert(u.clone(), b.vertices.len());
                    b.vertices.push(u);
                    b.dist.push(d + 1);
                    b.parents.push(vec![(head, l.clone())]);
                }
            }
        }
        head += 1;
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn p(g: &GroupInstance, s: &str) -> RelWord {
        g.parse_relword(s).unwrap()
    }

    #[test]
    fn relative_length_examples() {
        let g = fixtures::fprod();
        assert_eq!(relative_length(&g, &p(&g, "P1[2,3]")).unwrap(), 1);
        assert_eq!(relative_length(&g, &RelWord::new()).unwrap(), 0);
        assert_eq!(relative_length(&g, &p(&g, "a1 b a2 b")).unwrap(), 4);
        assert_eq!(relative_length_o3(&g, &p(&g, "a1 b a2 b")).unwrap(), 4);
        assert_eq!(relative_length_o3(&g, &p(&g, "a1 a2 a1")).unwrap(), 1);
    }

    #[test]
    fn quasigeodesic_examples() {
        let g = fixtures::fprod();
        assert!(is_quasigeodesic(&g, &p(&g, "b b a1 b"), 1.0).unwrap().0);
        let (ok, bad) = is_quasigeodesic(&g, &p(&g, "b b^-1"), 1.0).unwrap();
        assert!(!ok);
        assert_eq!(bad.unwrap().len(), 2);
        assert!(is_quasigeodesic(&g, &p(&g, "a1 b a2 b"), 2.0).unwrap().0);
        // a1 a1 a1: length 3, relative length 1 ≥ 3/1 − 1 fails.
        let (ok, bad) = is_quasigeodesic(&g, &p(&g, "a1 a1 a1"), 1.0).unwrap();
        assert!(!ok);
        assert_eq!(g.format_relword(&bad.unwrap()), "a1 a1 a1");
    }

    #[test]
    fn component_examples() {
        let g = fixtures::fprod();
        let c = components(&g, &p(&g, "b P1[1,0] P1[0,2] b"));
        assert_eq!(c.len(), 1);
        assert_eq!((c[0].start, c[0].end), (1, 3));
        assert_eq!(c[0].value, Payload::Vector(vec![1, 2]));
        assert_eq!(components(&g, &p(&g, "P1[1,0] b P1[1,0]")).len(), 2);
        assert!(components(&g, &p(&g, "b a1")).is_empty());
    }

    #[test]
    fn connectivity_and_backtracking_examples() {
        let g = fixtures::fprod();
        let w = p(&g, "P1[1,0] b b^-1 P1[0,1]");
        let c = components(&g, &w);
        assert!(are_connected(&g, &w, &c[0], &c[1]).unwrap());
        assert!(has_backtracking(&g, &w).unwrap().is_some());
        assert_eq!(g.format_relword(&remove_backtracking(&g, &w).unwrap()), "P1[1,1]");

        let w = p(&g, "P1[1,0] b P1[0,1]");
        let c = components(&g, &w);
        assert!(!are_connected(&g, &w, &c[0], &c[1]).unwrap());
        assert!(has_backtracking(&g, &w).unwrap().is_none());
        assert_eq!(remove_backtracking(&g, &w).unwrap(), w);

        let w = p(&g, "P1[1,0] b b^-1 P1[-1,0]");
        assert!(remove_backtracking(&g, &w).unwrap().is_empty());
    }

    #[test]
    fn ball_counts() {
        let free = fixtures::free();
        assert_eq!(ball(&free, 0, 0).unwrap().len(), 1);
        assert_eq!(ball(&free, 2, 0).unwrap().len(), 17);
        let g = fixtures::fprod();
        // 1 + {b, b^-1} + nonzero vectors of ℓ¹-norm ≤ 3 (2·3·4 of them).
        assert_eq!(ball(&g, 1, 3).unwrap().len(), 1 + 2 + 24);
    }

    #[test]
    fn ball_distances_match_relative_length() {
        let g = fixtures::fprod();
        let b = ball(&g, 3, 2).unwrap();
        for k in 0..b.len() {
            let w = b.geodesic_word(k);
            assert_eq!(w.len(), b.distance_at(k));
            assert_eq!(g.element(&w).unwrap(), b.vertices()[k]);
            // Distances in the truncated graph are upper bounds, and exact
            // once every parabolic syllable is an admitted edge.
            let e = &b.vertices()[k];
            let rel = relative_length(&g, &w).unwrap();
            assert!(rel <= b.distance_at(k));
            let admitted = e.syllables().iter().all(|s| match s {
                crate::group::Syllable::Para(i, p) => g.oracles()[*i].length(p).unwrap() <= 2,
                _ => true,
            });
            if admitted {
                assert_eq!(rel, b.distance_at(k));
            }
        }
    }

    #[test]
    fn remove_backtracking_keeps_vertices() {
        let g = fixtures::fprod();
        let w = p(&g, "b P1[1,0] b a1 b^-1 P1[0,1] b");
        let r = remove_backtracking(&g, &w).unwrap();
        let path = |w: &RelWord| {
            let mut v = vec![Element::identity()];
            for l in &w.0 {
                let next = g.mul(v.last().unwrap(), &g.letter_element(l));
                v.push(next);
            }
            v
        };
        let orig = path(&w);
        for v in path(&r) {
            assert!(orig.contains(&v));
        }
        assert!(has_backtracking(&g, &r).unwrap().is_none());
        assert!(g.element_equal(&r, &w).unwrap());
    }
}
