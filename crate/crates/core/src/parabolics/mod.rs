//! Peripheral subgroups `P_i` and their decision procedures.
//!
//! Each [`ParabolicOracle`] wraps one concrete backend (free abelian, free or
//! finite) together with the letters of `X` that generate `P_i`. Elements are
//! kept in backend normal form ([`Payload`]) so equality is structural.

pub mod folding;
pub mod lattice;

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::words::GenId;

use folding::{reduce_free, StallingsGraph};
use lattice::Lattice;

/// Backend normal form of an element of some `P_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Payload {
    /// Integer vector in `ℤ^k`.
    Vector(Vec<i64>),
    /// Freely reduced word in the free basis, letters `±(j+1)`.
    Word(Vec<i32>),
    /// Element id of a finite group; `0` is the identity.
    Element(u32),
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: Vec<String>| v.join(",");
        match self {
            Payload::Vector(v) => write!(f, "{}", join(v.iter().map(|x| x.to_string()).collect())),
            Payload::Word(v) => write!(f, "{}", join(v.iter().map(|x| x.to_string()).collect())),
            Payload::Element(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Backend {
    FreeAbelian { rank: usize },
    Free { rank: usize },
    Finite { table: Vec<Vec<u32>>, inverse: Vec<u32> },
}

impl Backend {
    pub fn kind(&self) -> &'static str {
        match self {
            Backend::FreeAbelian { .. } => "free_abelian",
            Backend::Free { .. } => "free",
            Backend::Finite { .. } => "finite",
        }
    }

    pub fn finite(table: Vec<Vec<u32>>) -> Result<Self> {
        let n = table.len();
        if n == 0 || table.iter().any(|r| r.len() != n) {
            return Err(Error::Malformed("finite table must be square and non-empty".into()));
        }
        if table.iter().flatten().any(|&x| x as usize >= n) {
            return Err(Error::Malformed("finite table entry out of range".into()));
        }
        for (a, row) in table.iter().enumerate() {
            if table[0][a] as usize != a || row[0] as usize != a {
                return Err(Error::Malformed("element 0 must be the identity".into()));
            }
        }
        let mut inverse = vec![0u32; n];
        for (a, row) in table.iter().enumerate() {
            let mut seen = vec![false; n];
            for &x in row {
                seen[x as usize] = true;
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::Malformed("finite table rows must be permutations".into()));
            }
            inverse[a] = row.iter().position(|&x| x == 0).unwrap() as u32;
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let ab = table[a][b] as usize;
                    let bc = table[b][c] as usize;
                    if table[ab][c] != table[a][bc] {
                        return Err(Error::Malformed("finite table is not associative".into()));
                    }
                }
            }
        }
        Ok(Backend::Finite { table, inverse })
    }

    pub fn identity(&self) -> Payload {
        match self {
            Backend::FreeAbelian { rank } => Payload::Vector(vec![0; *rank]),
            Backend::Free { .. } => Payload::Word(Vec::new()),
            Backend::Finite { .. } => Payload::Element(0),
        }
    }

    pub fn validate(&self, p: &Payload) -> Result<()> {
        let ok = match (self, p) {
            (Backend::FreeAbelian { rank }, Payload::Vector(v)) => v.len() == *rank,
            (Backend::Free { rank }, Payload::Word(w)) => {
                w.iter().all(|&x| x != 0 && x.unsigned_abs() as usize <= *rank)
                    && reduce_free(w).len() == w.len()
            }
            (Backend::Finite { table, .. }, Payload::Element(e)) => (*e as usize) < table.len(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Malformed(format!("payload {p} invalid for {} backend", self.kind())))
        }
    }

    pub fn mul(&self, a: &Payload, b: &Payload) -> Payload {
        match (self, a, b) {
            (Backend::FreeAbelian { .. }, Payload::Vector(x), Payload::Vector(y)) => {
                Payload::Vector(x.iter().zip(y).map(|(p, q)| p + q).collect())
            }
            (Backend::Free { .. }, Payload::Word(x), Payload::Word(y)) => {
                let mut v = x.clone();
                v.extend(y);
                Payload::Word(reduce_free(&v))
            }
            (Backend::Finite { table, .. }, Payload::Element(x), Payload::Element(y)) => {
                Payload::Element(table[*x as usize][*y as usize])
            }
            _ => panic!("payload/backend mismatch"),
        }
    }

    pub fn inv(&self, a: &Payload) -> Payload {
        match (self, a) {
            (Backend::FreeAbelian { .. }, Payload::Vector(x)) => {
                Payload::Vector(x.iter().map(|v| -v).collect())
            }
            (Backend::Free { .. }, Payload::Word(x)) => {
                Payload::Word(x.iter().rev().map(|v| -v).collect())
            }
            (Backend::Finite { inverse, .. }, Payload::Element(x)) => {
                Payload::Element(inverse[*x as usize])
            }
            _ => panic!("payload/backend mismatch"),
        }
    }

    pub fn parse_payload(&self, text: &str) -> Result<Payload> {
        let nums: Result<Vec<i64>> = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<i64>().map_err(|_| Error::Malformed(format!("bad payload {text:?}"))))
            .collect();
        let nums = nums?;
        let p = match self {
            Backend::FreeAbelian { .. } => Payload::Vector(nums),
            Backend::Free { .. } => Payload::Word(nums.iter().map(|&x| x as i32).collect()),
            Backend::Finite { .. } => match nums.as_slice() {
                [e] if *e >= 0 => Payload::Element(*e as u32),
                _ => return Err(Error::Malformed(format!("bad finite payload {text:?}"))),
            },
        };
        self.validate(&p)?;
        Ok(p)
    }
}

/// Decision procedures for one peripheral subgroup `P_i = ⟨X_i | R_i⟩`.
#[derive(Clone, Debug)]
pub struct ParabolicOracle {
    backend: Backend,
    /// Base generator indices of `X` lying in `X_i`, with the image of each.
    generators: Vec<(usize, Payload)>,
    relators: Vec<Vec<GenId>>,
    /// Set when the generators map onto the standard basis, so `|p|_{X_i}`
    /// has a closed form.
    standard_basis: bool,
    finite_lengths: Option<Vec<usize>>,
}

/// Enumeration cap for generic geodesic-length searches.
const LENGTH_SEARCH_CAP: usize = 2_000_000;

impl ParabolicOracle {
    pub fn new(
        backend: Backend,
        generators: Vec<(usize, Payload)>,
        relators: Vec<Vec<GenId>>,
    ) -> Result<Self> {
        for (_, p) in &generators {
            backend.validate(p)?;
        }
        let mut seen = HashSet::new();
        if !generators.iter().all(|(b, _)| seen.insert(*b)) {
            return Err(Error::Malformed("generator listed twice in one peripheral".into()));
        }
        let standard_basis = match &backend {
            Backend::FreeAbelian { rank } => {
                let mut hit = vec![false; *rank];
                generators.len() == *rank
                    && generators.iter().all(|(_, p)| match p {
                        Payload::Vector(v) => {
                            let nz: Vec<usize> = (0..v.len()).filter(|&k| v[k] != 0).collect();
                            nz.len() == 1 && v[nz[0]] == 1 && !std::mem::replace(&mut hit[nz[0]], true)
                        }
                        _ => false,
                    })
            }
            Backend::Free { rank } => {
                let mut hit = vec![false; *rank];
                generators.len() == *rank
                    && generators.iter().all(|(_, p)| match p {
                        Payload::Word(w) => {
                            w.len() == 1 && w[0] > 0 && !std::mem::replace(&mut hit[w[0] as usize - 1], true)
                        }
                        _ => false,
                    })
            }
            Backend::Finite { .. } => false,
        };
        let mut oracle = ParabolicOracle {
            backend,
            generators,
            relators: Vec::new(),
            standard_basis,
            finite_lengths: None,
        };
        if let Backend::Finite { table, .. } = &oracle.backend {
            let n = table.len();
            let mut dist = vec![usize::MAX; n];
            for (p, d) in oracle.bfs(usize::MAX, n)? {
                if let Payload::Element(e) = p {
                    dist[e as usize] = d;
                }
            }
            oracle.finite_lengths = Some(dist);
        }
        for r in &relators {
            if !oracle.word_problem(r)? {
                return Err(Error::Malformed(
                    "peripheral relator does not evaluate to the identity in its backend".into(),
                ));
            }
        }
        oracle.relators = relators;
        Ok(oracle)
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn relators(&self) -> &[Vec<GenId>] {
        &self.relators
    }

    pub fn generator_bases(&self) -> impl Iterator<Item = usize> + '_ {
        self.generators.iter().map(|(b, _)| *b)
    }

    pub fn identity(&self) -> Payload {
        self.backend.identity()
    }

    pub fn is_identity(&self, p: &Payload) -> bool {
        *p == self.identity()
    }

    pub fn mul(&self, a: &Payload, b: &Payload) -> Payload {
        self.backend.mul(a, b)
    }

    pub fn inv(&self, a: &Payload) -> Payload {
        self.backend.inv(a)
    }

    /// Image of a letter of `X_i`, or `None` when the letter is not in `X_i`.
    pub fn image(&self, g: GenId) -> Option<Payload> {
        let (_, p) = self.generators.iter().find(|(b, _)| *b == g.base())?;
        Some(if g.is_inverse() { self.inv(p) } else { p.clone() })
    }

    /// Symmetric generating images, in letter order.
    pub fn symmetric_images(&self) -> Vec<Payload> {
        self.generators
            .iter()
            .flat_map(|(_, p)| [p.clone(), self.inv(p)])
            .collect()
    }

    pub fn eval(&self, w: &[GenId]) -> Result<Payload> {
        let mut acc = self.identity();
        for &g in w {
            let p = self
                .image(g)
                .ok_or_else(|| Error::Malformed(format!("letter x{} is not a peripheral generator", g.0)))?;
            acc = self.mul(&acc, &p);
        }
        Ok(acc)
    }

    pub fn word_problem(&self, w: &[GenId]) -> Result<bool> {
        Ok(self.is_identity(&self.eval(w)?))
    }

    pub fn membership(&self, gens: &[Vec<GenId>], w: &[GenId]) -> Result<bool> {
        let s: Vec<Payload> = gens.iter().map(|g| self.eval(g)).collect::<Result<_>>()?;
        let p = self.eval(w)?;
        Ok(self.membership_elems(&s, &p))
    }

    /// Whether `p ∈ ⟨gens⟩`, with everything in normal form.
    pub fn membership_elems(&self, gens: &[Payload], p: &Payload) -> bool {
        self.member_fn(gens)(p)
    }

    /// A membership test for `⟨gens⟩` with the lattice, folded graph or
    /// closure built once.
    pub fn member_fn<'a>(&'a self, gens: &[Payload]) -> Box<dyn Fn(&Payload) -> bool + 'a> {
        match &self.backend {
            Backend::FreeAbelian { rank } => {
                let vs: Vec<Vec<i64>> = gens
                    .iter()
                    .map(|g| match g {
                        Payload::Vector(v) => v.clone(),
                        _ => unreachable!(),
                    })
                    .collect();
                let lattice = Lattice::span(*rank, &vs);
                Box::new(move |p| match p {
                    Payload::Vector(v) => lattice.contains(v),
                    _ => false,
                })
            }
            Backend::Free { .. } => {
                let ws: Vec<Vec<i32>> = gens
                    .iter()
                    .map(|g| match g {
                        Payload::Word(w) => w.clone(),
                        _ => unreachable!(),
                    })
                    .collect();
                let graph = StallingsGraph::new(&ws);
                Box::new(move |p| match p {
                    Payload::Word(w) => graph.accepts(w),
                    _ => false,
                })
            }
            Backend::Finite { .. } => {
                let set = self.closure(gens);
                Box::new(move |p| set.contains(p))
            }
        }
    }

    fn closure(&self, gens: &[Payload]) -> HashSet<Payload> {
        let mut seen: HashSet<Payload> = HashSet::from([self.identity()]);
        let mut queue = VecDeque::from([self.identity()]);
        while let Some(x) = queue.pop_front() {
            for g in gens {
                let y = self.mul(&x, g);
                if seen.insert(y.clone()) {
                    queue.push_back(y);
                }
            }
        }
        seen
    }

    pub fn is_finite(&self, gens: &[Vec<GenId>]) -> Result<bool> {
        let s: Vec<Payload> = gens.iter().map(|g| self.eval(g)).collect::<Result<_>>()?;
        Ok(self.is_finite_elems(&s))
    }

    pub fn is_finite_elems(&self, gens: &[Payload]) -> bool {
        match &self.backend {
            // Torsion-free backends: finite iff trivial.
            Backend::FreeAbelian { .. } | Backend::Free { .. } => {
                gens.iter().all(|g| self.is_identity(g))
            }
            Backend::Finite { .. } => true,
        }
    }

    /// All elements with `|p|_{X_i} ≤ radius`, each with its exact length, in
    /// breadth-first order.
    pub fn enumerate(&self, radius: usize) -> Vec<(Payload, usize)> {
        self.bfs(radius, usize::MAX).expect("unbounded enumeration")
    }

    /// Like [`Self::enumerate`], failing once more than `cap` elements are found.
    pub fn enumerate_capped(&self, radius: usize, cap: usize) -> Result<Vec<(Payload, usize)>> {
        self.bfs(radius, cap)
    }

    fn bfs(&self, radius: usize, cap: usize) -> Result<Vec<(Payload, usize)>> {
        let gens = self.symmetric_images();
        let mut seen: HashSet<Payload> = HashSet::from([self.identity()]);
        let mut out = vec![(self.identity(), 0usize)];
        let mut head = 0;
        while head < out.len() {
            let (x, d) = out[head].clone();
            head += 1;
            if d == radius {
                continue;
            }
            for g in &gens {
                let y = self.mul(&x, g);
                if seen.insert(y.clone()) {
                    if out.len() >= cap {
                        return Err(Error::budget("peripheral enumeration", Some(d as u64)));
                    }
                    out.push((y, d + 1));
                }
            }
        }
        Ok(out)
    }

    /// Exact `|p|_{X_i}`.
    pub fn length(&self, p: &Payload) -> Result<usize> {
        if let Some(d) = &self.finite_lengths {
            if let Payload::Element(e) = p {
                return match d[*e as usize] {
                    usize::MAX => Err(Error::Malformed(format!("{p} not generated by X_i"))),
                    l => Ok(l),
                };
            }
        }
        if self.standard_basis {
            match p {
                Payload::Vector(v) => return Ok(v.iter().map(|x| x.unsigned_abs() as usize).sum()),
                Payload::Word(w) => return Ok(w.len()),
                Payload::Element(_) => {}
            }
        }
        let gens = self.symmetric_images();
        let mut seen: HashMap<Payload, usize> = HashMap::from([(self.identity(), 0)]);
        let mut queue = VecDeque::from([self.identity()]);
        if seen.contains_key(p) {
            return Ok(0);
        }
        while let Some(x) = queue.pop_front() {
            let d = seen[&x];
            for g in &gens {
                let y = self.mul(&x, g);
                if !seen.contains_key(&y) {
                    if &y == p {
                        return Ok(d + 1);
                    }
                    if seen.len() >= LENGTH_SEARCH_CAP {
                        return Err(Error::budget("peripheral length search", Some(d as u64)));
                    }
                    seen.insert(y.clone(), d + 1);
                    queue.push_back(y);
                }
            }
        }
        Err(Error::Malformed(format!("{p} not generated by X_i")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2() -> ParabolicOracle {
        ParabolicOracle::new(
            Backend::FreeAbelian { rank: 2 },
            vec![(0, Payload::Vector(vec![1, 0])), (1, Payload::Vector(vec![0, 1]))],
            vec![vec![GenId(0), GenId(2), GenId(1), GenId(3)]],
        )
        .unwrap()
    }

    fn f2() -> ParabolicOracle {
        ParabolicOracle::new(
            Backend::Free { rank: 2 },
            vec![(0, Payload::Word(vec![1])), (1, Payload::Word(vec![2]))],
            vec![],
        )
        .unwrap()
    }

    fn z3() -> ParabolicOracle {
        let table = (0..3u32).map(|a| (0..3u32).map(|b| (a + b) % 3).collect()).collect();
        ParabolicOracle::new(Backend::finite(table).unwrap(), vec![(0, Payload::Element(1))], vec![])
            .unwrap()
    }

    const A1: GenId = GenId(0);
    const A1I: GenId = GenId(1);
    const A2: GenId = GenId(2);
    const A2I: GenId = GenId(3);

    #[test]
    fn word_problem_examples() {
        assert!(z2().word_problem(&[A1, A2, A1I, A2I]).unwrap());
        assert!(!z2().word_problem(&[A1]).unwrap());
        assert!(!f2().word_problem(&[A1, A2, A1I]).unwrap());
        assert!(z2().word_problem(&[GenId(4)]).is_err());
    }

    #[test]
    fn relator_must_be_trivial() {
        let bad = ParabolicOracle::new(
            Backend::FreeAbelian { rank: 1 },
            vec![(0, Payload::Vector(vec![1]))],
            vec![vec![A1]],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn membership_examples() {
        assert!(!z2().membership(&[vec![A1, A1], vec![A2]], &[A1]).unwrap());
        for o in [z2(), f2()] {
            assert!(o.membership(&[vec![A1]], &[]).unwrap());
        }
        assert!(z3().membership(&[], &[]).unwrap());
        assert!(!f2().membership(&[vec![A1]], &[A2, A1, A2I]).unwrap());
    }

    #[test]
    fn finiteness_examples() {
        assert!(z2().is_finite(&[]).unwrap());
        let z1 = ParabolicOracle::new(
            Backend::FreeAbelian { rank: 1 },
            vec![(0, Payload::Vector(vec![1]))],
            vec![],
        )
        .unwrap();
        assert!(!z1.is_finite(&[vec![A1]]).unwrap());
        assert!(z3().is_finite(&[vec![A1]]).unwrap());
        assert!(f2().is_finite(&[vec![A1, A1I]]).unwrap());
    }

    #[test]
    fn enumerate_examples() {
        let z1 = ParabolicOracle::new(
            Backend::FreeAbelian { rank: 1 },
            vec![(0, Payload::Vector(vec![1]))],
            vec![],
        )
        .unwrap();
        let mut got: Vec<(i64, usize)> = z1
            .enumerate(2)
            .into_iter()
            .map(|(p, d)| match p {
                Payload::Vector(v) => (v[0], d),
                _ => unreachable!(),
            })
            .collect();
        got.sort();
        assert_eq!(got, vec![(-2, 2), (-1, 1), (0, 0), (1, 1), (2, 2)]);
        for o in [z2(), f2(), z3()] {
            assert_eq!(o.enumerate(0), vec![(o.identity(), 0)]);
        }
        assert_eq!(z2().enumerate(1).len(), 5);
    }

    #[test]
    fn generators_belong_and_products_close() {
        for o in [z2(), f2(), z3()] {
            let ball = o.enumerate(2);
            let gens: Vec<Payload> = ball.iter().skip(1).take(3).map(|(p, _)| p.clone()).collect();
            for g in &gens {
                assert!(o.membership_elems(&gens, g));
            }
            let members: Vec<&Payload> =
                ball.iter().map(|(p, _)| p).filter(|p| o.membership_elems(&gens, p)).collect();
            for u in &members {
                for v in &members {
                    assert!(o.membership_elems(&gens, &o.mul(u, v)));
                }
            }
        }
    }

    #[test]
    fn enumeration_nested_and_lengths_exact() {
        for o in [z2(), f2(), z3()] {
            for r in 0..4 {
                let small = o.enumerate(r);
                let big: HashMap<Payload, usize> = o.enumerate(r + 1).into_iter().collect();
                for (p, d) in &small {
                    assert!(*d <= r);
                    assert_eq!(big.get(p), Some(d));
                    assert_eq!(o.length(p).unwrap(), *d);
                }
            }
        }
    }

    #[test]
    fn payload_parsing() {
        let o = z2();
        assert_eq!(o.backend().parse_payload("1,-2").unwrap(), Payload::Vector(vec![1, -2]));
        assert!(o.backend().parse_payload("1").is_err());
        assert!(f2().backend().parse_payload("1,-1").is_err());
        assert!(z3().backend().parse_payload("5").is_err());
    }

    #[test]
    fn nonstandard_basis_length_uses_search() {
        let o = ParabolicOracle::new(
            Backend::FreeAbelian { rank: 1 },
            vec![(0, Payload::Vector(vec![2])), (1, Payload::Vector(vec![3]))],
            vec![],
        )
        .unwrap();
        assert_eq!(o.length(&Payload::Vector(vec![1])).unwrap(), 2);
        assert_eq!(o.length(&Payload::Vector(vec![6])).unwrap(), 2);
    }
}
