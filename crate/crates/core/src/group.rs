//! The ambient pair `(G, 𝒫)`: relative presentation, normal forms and the
//! word problem.
//!
//! Instances that declare the `free_product` native word problem are read as
//! `G = P_1 ∗ … ∗ P_n ∗ F`, where `F` is free on the generators of `X` not
//! claimed by any peripheral. Every such element has a unique alternating
//! syllable normal form ([`Element`]), which is what balls, distances and
//! caches key on.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::metrics::ConstantsCertificate;
use crate::parabolics::{ParabolicOracle, Payload};
use crate::words::{free_reduce, invert_word, Alphabet, GenId, Letter, RelWord};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Syllable {
    /// One letter of the free factor.
    Free(GenId),
    /// A nontrivial element of `P_i`.
    Para(usize, Payload),
}

/// Free-product normal form: no cancelling adjacent free letters, no two
/// adjacent syllables of the same peripheral, no trivial payloads.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element(Vec<Syllable>);

impl Element {
    pub fn identity() -> Self {
        Element(Vec::new())
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NativeWordProblem {
    FreeProduct,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Budgets {
    pub max_ball_radius: usize,
    pub max_component_bound: usize,
    pub max_vertices: usize,
    /// Largest `n` for which parabolic distortion is also computed exactly
    /// from an `X`-ball.
    pub exact_distortion_radius: usize,
    pub default_fuel: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            max_ball_radius: 12,
            max_component_bound: 64,
            max_vertices: 4_000_000,
            exact_distortion_radius: 6,
            default_fuel: 1_000_000,
        }
    }
}

/// A letter of `Y`: `2k` is the k-th subgroup generator, `2k + 1` its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct YLetter(pub u32);

impl YLetter {
    pub fn inverse(self) -> YLetter {
        YLetter(self.0 ^ 1)
    }
    pub fn index(self) -> usize {
        (self.0 >> 1) as usize
    }
    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }
}

pub type YWord = Vec<YLetter>;

pub fn invert_yword(w: &[YLetter]) -> YWord {
    w.iter().rev().map(|y| y.inverse()).collect()
}

pub fn reduce_yword(w: &[YLetter]) -> YWord {
    let mut out: YWord = Vec::with_capacity(w.len());
    for &y in w {
        if out.last() == Some(&y.inverse()) {
            out.pop();
        } else {
            out.push(y);
        }
    }
    out
}

/// Generators `Y ⊆ X*` of the subgroup `H`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgroupSpec {
    gens: Vec<Vec<GenId>>,
}

impl SubgroupSpec {
    pub fn new(gens: Vec<Vec<GenId>>) -> Result<Self> {
        if gens.is_empty() {
            return Err(Error::Malformed("subgroup needs at least one generator".into()));
        }
        let gens: Vec<Vec<GenId>> = gens.iter().map(|g| free_reduce(g)).collect();
        if gens.iter().any(|g| g.is_empty()) {
            return Err(Error::Malformed("subgroup generator reduces to the empty word".into()));
        }
        Ok(SubgroupSpec { gens })
    }

    pub fn parse(alphabet: &Alphabet, text: &str) -> Result<Self> {
        let gens = text
            .split(',')
            .map(|s| alphabet.parse_word(s))
            .collect::<Result<Vec<_>>>()?;
        SubgroupSpec::new(gens)
    }

    pub fn gens(&self) -> &[Vec<GenId>] {
        &self.gens
    }

    /// Symmetric letters of `Y`, in order `y1, y1^-1, y2, …`.
    pub fn letters(&self) -> impl Iterator<Item = YLetter> {
        (0..2 * self.gens.len() as u32).map(YLetter)
    }

    pub fn letter_word(&self, y: YLetter) -> Vec<GenId> {
        let g = &self.gens[y.index()];
        if y.is_inverse() {
            invert_word(g)
        } else {
            g.clone()
        }
    }

    /// The `X`-word spelled by a `Y`-word.
    pub fn to_x_word(&self, w: &[YLetter]) -> Vec<GenId> {
        w.iter().flat_map(|&y| self.letter_word(y)).collect()
    }

    pub fn max_gen_len(&self) -> usize {
        self.gens.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn format_yword(&self, alphabet: &Alphabet, w: &[YLetter]) -> String {
        alphabet.format_word(&self.to_x_word(w))
    }
}

#[derive(Clone, Debug)]
pub struct GroupInstance {
    alphabet: Alphabet,
    relators: Vec<RelWord>,
    oracles: Vec<ParabolicOracle>,
    /// Which peripheral claims each base generator.
    owner: Vec<Option<usize>>,
    constants: Option<ConstantsCertificate>,
    native: Option<NativeWordProblem>,
    budgets: Budgets,
}

impl GroupInstance {
    pub fn new(
        alphabet: Alphabet,
        relators: Vec<RelWord>,
        oracles: Vec<ParabolicOracle>,
        constants: Option<ConstantsCertificate>,
        native: Option<NativeWordProblem>,
        budgets: Budgets,
    ) -> Result<Self> {
        let mut owner = vec![None; alphabet.base_names().len()];
        for (i, o) in oracles.iter().enumerate() {
            for b in o.generator_bases() {
                if b >= owner.len() {
                    return Err(Error::Malformed(format!("peripheral {} uses unknown generator", i + 1)));
                }
                if owner[b].replace(i).is_some() {
                    return Err(Error::Malformed(format!(
                        "generator {} claimed by two peripherals",
                        alphabet.base_names()[b]
                    )));
                }
            }
        }
        for r in &relators {
            if r.is_empty() {
                return Err(Error::Malformed("empty relator".into()));
            }
        }
        let inst = GroupInstance {
            alphabet,
            relators,
            oracles,
            owner,
            constants,
            native,
            budgets,
        };
        if inst.native.is_some() {
            for r in &inst.relators {
                if !inst.element(r)?.is_identity() {
                    return Err(Error::Malformed(
                        "relator is not trivial in the declared free-product normal form".into(),
                    ));
                }
            }
        }
        Ok(inst)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn relators(&self) -> &[RelWord] {
        &self.relators
    }

    pub fn oracles(&self) -> &[ParabolicOracle] {
        &self.oracles
    }

    pub fn oracle(&self, i: usize) -> Result<&ParabolicOracle> {
        self.oracles
            .get(i)
            .ok_or_else(|| Error::Malformed(format!("no peripheral with index {}", i + 1)))
    }

    pub fn num_peripherals(&self) -> usize {
        self.oracles.len()
    }

    pub fn constants(&self) -> Result<&ConstantsCertificate> {
        self.constants
            .as_ref()
            .ok_or_else(|| Error::Unsupported("instance has no constants certificate".into()))
    }

    pub fn native(&self) -> Option<NativeWordProblem> {
        self.native
    }

    pub fn budgets(&self) -> &Budgets {
        &self.budgets
    }

    pub fn set_budgets(&mut self, budgets: Budgets) {
        self.budgets = budgets;
    }

    /// Peripheral index owning generator letter `g`, if any.
    pub fn owner(&self, g: GenId) -> Option<usize> {
        self.owner[g.base()]
    }

    fn require_native(&self) -> Result<()> {
        match self.native {
            Some(NativeWordProblem::FreeProduct) => Ok(()),
            None => Err(Error::Unsupported(
                "operation needs a native normal form (free_product)".into(),
            )),
        }
    }

    // ---- parsing and formatting -------------------------------------------------

    pub fn parse_letter(&self, token: &str) -> Result<Letter> {
        if let Some(rest) = token.strip_prefix('P') {
            if let Some((idx, payload)) = rest.split_once('[') {
                let payload = payload
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Malformed(format!("unterminated letter {token:?}")))?;
                let i: usize = idx
                    .parse()
                    .map_err(|_| Error::Malformed(format!("bad peripheral index in {token:?}")))?;
                if i == 0 {
                    return Err(Error::Malformed("peripheral indices start at 1".into()));
                }
                let o = self.oracle(i - 1)?;
                let p = o.backend().parse_payload(payload)?;
                if o.is_identity(&p) {
                    return Err(Error::Malformed(format!("{token} is the identity of P{i}")));
                }
                return Ok(Letter::Para { index: i - 1, payload: p });
            }
        }
        self.alphabet.lookup(token).map(Letter::Gen)
    }

    pub fn parse_relword(&self, text: &str) -> Result<RelWord> {
        let text = text.trim();
        if text == "1" || text == "ε" {
            return Ok(RelWord::new());
        }
        text.split_whitespace()
            .map(|t| self.parse_letter(t))
            .collect::<Result<Vec<_>>>()
            .map(RelWord)
    }

    pub fn format_letter(&self, l: &Letter) -> String {
        match l {
            Letter::Gen(g) => self.alphabet.name(*g),
            Letter::Para { index, payload } => format!("P{}[{}]", index + 1, payload),
        }
    }

    pub fn format_relword(&self, w: &RelWord) -> String {
        w.0.iter().map(|l| self.format_letter(l)).collect::<Vec<_>>().join(" ")
    }

    pub fn format_element(&self, e: &Element) -> String {
        self.format_relword(&self.element_word(e))
    }

    /// A relative word spelling `e`: free letters and one parabolic letter per syllable.
    pub fn element_word(&self, e: &Element) -> RelWord {
        RelWord(
            e.0.iter()
                .map(|s| match s {
                    Syllable::Free(g) => Letter::Gen(*g),
                    Syllable::Para(i, p) => Letter::Para { index: *i, payload: p.clone() },
                })
                .collect(),
        )
    }

    // ---- normal forms ------------------------------------------------------------

    fn push_syllable(&self, out: &mut Vec<Syllable>, s: Syllable) {
        match (out.last_mut(), s) {
            (Some(Syllable::Free(g)), Syllable::Free(h)) if *g == h.inverse() => {
                out.pop();
            }
            (Some(Syllable::Para(i, p)), Syllable::Para(j, q)) if *i == j => {
                let o = &self.oracles[j];
                let r = o.mul(p, &q);
                if o.is_identity(&r) {
                    out.pop();
                } else {
                    *p = r;
                }
            }
            (_, s) => out.push(s),
        }
    }

    fn letter_syllable(&self, l: &Letter) -> Syllable {
        match l {
            Letter::Gen(g) => match self.owner(*g) {
                Some(i) => Syllable::Para(i, self.oracles[i].image(*g).expect("owned letter has image")),
                None => Syllable::Free(*g),
            },
            Letter::Para { index, payload } => Syllable::Para(*index, payload.clone()),
        }
    }

    pub fn element(&self, w: &RelWord) -> Result<Element> {
        self.require_native()?;
        let mut out = Vec::with_capacity(w.len());
        for l in &w.0 {
            self.check_letter(l)?;
            let s = self.letter_syllable(l);
            self.push_syllable(&mut out, s);
        }
        Ok(Element(out))
    }

    fn check_letter(&self, l: &Letter) -> Result<()> {
        match l {
            Letter::Gen(g) if self.alphabet.contains(*g) => Ok(()),
            Letter::Gen(g) => Err(Error::Malformed(format!("unknown symbol id {}", g.0))),
            Letter::Para { index, payload } => {
                let o = self.oracle(*index)?;
                o.backend().validate(payload)?;
                if o.is_identity(payload) {
                    Err(Error::Malformed("parabolic letter carries the identity".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn element_of_gens(&self, w: &[GenId]) -> Result<Element> {
        self.element(&RelWord::from_gens(w))
    }

    pub fn gen_element(&self, g: GenId) -> Element {
        Element(vec![self.letter_syllable(&Letter::Gen(g))])
    }

    pub fn letter_element(&self, l: &Letter) -> Element {
        Element(vec![self.letter_syllable(l)])
    }

    pub fn para_element(&self, i: usize, p: &Payload) -> Element {
        if self.oracles[i].is_identity(p) {
            Element::identity()
        } else {
            Element(vec![Syllable::Para(i, p.clone())])
        }
    }

    pub fn mul(&self, a: &Element, b: &Element) -> Element {
        let mut out = a.0.clone();
        for s in &b.0 {
            self.push_syllable(&mut out, s.clone());
        }
        Element(out)
    }

    pub fn inv(&self, a: &Element) -> Element {
        Element(
            a.0.iter()
                .rev()
                .map(|s| match s {
                    Syllable::Free(g) => Syllable::Free(g.inverse()),
                    Syllable::Para(i, p) => Syllable::Para(*i, self.oracles[*i].inv(p)),
                })
                .collect(),
        )
    }

    /// `a⁻¹ b`.
    pub fn quotient(&self, a: &Element, b: &Element) -> Element {
        self.mul(&self.inv(a), b)
    }

    pub fn conjugate(&self, g: &Element, x: &Element) -> Element {
        // g x g⁻¹
        self.mul(&self.mul(g, x), &self.inv(g))
    }

    /// `Some(p)` when `e ∈ P_i`, with the identity mapped to the identity payload.
    pub fn parabolic_payload(&self, i: usize, e: &Element) -> Option<Payload> {
        match e.0.as_slice() {
            [] => Some(self.oracles[i].identity()),
            [Syllable::Para(j, p)] if *j == i => Some(p.clone()),
            _ => None,
        }
    }

    // ---- word problem ----------------------------------------------------------

    pub fn is_trivial_in_g(&self, w: &RelWord) -> Result<bool> {
        match self.native {
            Some(NativeWordProblem::FreeProduct) => Ok(self.element(w)?.is_identity()),
            None => {
                let k = self
                    .constants
                    .as_ref()
                    .map(|c| c.dehn_k)
                    .ok_or_else(|| {
                        Error::Unsupported("no native word problem and no certified Dehn constant".into())
                    })?;
                for l in &w.0 {
                    self.check_letter(l)?;
                }
                self.dehn_search(w, k)
            }
        }
    }

    pub fn element_equal(&self, a: &RelWord, b: &RelWord) -> Result<bool> {
        let mut w = a.0.clone();
        w.extend(self.invert_relword(b).0);
        self.is_trivial_in_g(&RelWord(w))
    }

    pub fn invert_relword(&self, w: &RelWord) -> RelWord {
        RelWord(
            w.0.iter()
                .rev()
                .map(|l| match l {
                    Letter::Gen(g) => Letter::Gen(g.inverse()),
                    Letter::Para { index, payload } => Letter::Para {
                        index: *index,
                        payload: self.oracles[*index].inv(payload),
                    },
                })
                .collect(),
        )
    }

    /// Reduction in `F(X) ∗ P̃_1 ∗ … ∗ P̃_n`, where generator letters and
    /// parabolic letters are unrelated.
    fn reduce_free_product(&self, w: &[Letter]) -> Vec<Letter> {
        let mut out: Vec<Letter> = Vec::with_capacity(w.len());
        for l in w {
            match (out.last_mut(), l) {
                (Some(Letter::Gen(g)), Letter::Gen(h)) if *g == h.inverse() => {
                    out.pop();
                }
                (Some(Letter::Para { index: i, payload: p }), Letter::Para { index: j, payload: q })
                    if *i == *j =>
                {
                    let o = &self.oracles[*j];
                    let r = o.mul(p, q);
                    if o.is_identity(&r) {
                        out.pop();
                    } else {
                        *p = r;
                    }
                }
                _ => out.push(l.clone()),
            }
        }
        out
    }

    /// Bounded breadth-first search for a van Kampen derivation: insert
    /// cyclic conjugates of relators (up to `K·|w|` insertions) and reduce.
    /// Answers `false` when the bounded search space is exhausted.
    fn dehn_search(&self, w: &RelWord, dehn_k: u64) -> Result<bool> {
        let start = self.reduce_free_product(&w.0);
        if start.is_empty() {
            return Ok(true);
        }
        let mut pieces: Vec<Vec<Letter>> = Vec::new();
        for r in &self.relators {
            for rr in [r.clone(), self.invert_relword(r)] {
                for k in 0..rr.len() {
                    let mut c = rr.0[k..].to_vec();
                    c.extend_from_slice(&rr.0[..k]);
                    if !pieces.contains(&c) {
                        pieces.push(c);
                    }
                }
            }
        }
        let max_area = dehn_k as usize * w.len();
        let max_rel = pieces.iter().map(Vec::len).max().unwrap_or(0);
        let max_len = w.len() + max_area.min(4) * max_rel;
        let mut seen: HashSet<Vec<Letter>> = HashSet::from([start.clone()]);
        let mut queue = VecDeque::from([(start, 0usize)]);
        while let Some((cur, area)) = queue.pop_front() {
            if area == max_area {
                continue;
            }
            for pos in 0..=cur.len() {
                for piece in &pieces {
                    let mut next = cur[..pos].to_vec();
                    next.extend(piece.iter().cloned());
                    next.extend_from_slice(&cur[pos..]);
                    let next = self.reduce_free_product(&next);
                    if next.is_empty() {
                        return Ok(true);
                    }
                    if next.len() <= max_len && seen.insert(next.clone()) {
                        if seen.len() > self.budgets.max_vertices {
                            return Err(Error::budget("bounded Dehn search", None));
                        }
                        queue.push_back((next, area + 1));
                    }
                }
            }
        }
        Ok(false)
    }

    // ---- conversions and metrics --------------------------------------------------

    /// Compresses each maximal run of letters from one `X_i` into a single
    /// parabolic letter, dropping runs that are trivial in `P_i`.
    pub fn to_relative(&self, w: &[GenId]) -> Result<RelWord> {
        let w = self.alphabet.checked_free_reduce(w).map(|_| w)?;
        let mut out = Vec::new();
        let mut k = 0;
        while k < w.len() {
            match self.owner(w[k]) {
                None => {
                    out.push(Letter::Gen(w[k]));
                    k += 1;
                }
                Some(i) => {
                    let start = k;
                    while k < w.len() && self.owner(w[k]) == Some(i) {
                        k += 1;
                    }
                    let p = self.oracles[i].eval(&w[start..k])?;
                    if !self.oracles[i].is_identity(&p) {
                        out.push(Letter::Para { index: i, payload: p });
                    }
                }
            }
        }
        Ok(RelWord(out))
    }

    /// Exact `|e|_X`.
    pub fn x_length(&self, e: &Element) -> Result<usize> {
        self.require_native()?;
        e.0.iter()
            .map(|s| match s {
                Syllable::Free(_) => Ok(1),
                Syllable::Para(i, p) => self.oracles[*i].length(p),
            })
            .sum()
    }

    /// `|p|_X` for a single letter (exact in a free product).
    pub fn letter_x_length(&self, l: &Letter) -> Result<usize> {
        match l {
            Letter::Gen(_) => Ok(1),
            Letter::Para { index, payload } => self.oracle(*index)?.length(payload),
        }
    }

    pub fn word_x_length(&self, w: &RelWord) -> Result<usize> {
        w.0.iter().map(|l| self.letter_x_length(l)).sum()
    }

    /// `|e|_{X∪𝒫}` from the normal form: every free letter and every
    /// parabolic syllable costs one edge, and no word does better because each
    /// letter of `X ∪ 𝒫` lies in a single free factor.
    pub fn native_relative_length(&self, e: &Element) -> usize {
        e.0.len()
    }

    /// All elements with `|g|_X ≤ radius`, with exact lengths, in BFS order.
    pub fn x_ball(&self, radius: usize) -> Result<Vec<(Element, usize)>> {
        self.require_native()?;
        let gens: Vec<Element> = self.alphabet.letters().map(|g| self.gen_element(g)).collect();
        let mut seen: HashSet<Element> = HashSet::from([Element::identity()]);
        let mut out = vec![(Element::identity(), 0usize)];
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
                    if out.len() >= self.budgets.max_vertices {
                        return Err(Error::budget("X-ball", Some(d as u64)));
                    }
                    out.push((y, d + 1));
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|s| match s {
                Syllable::Free(g) => format!("x{}", g.0),
                Syllable::Para(i, p) => format!("P{}[{}]", i + 1, p),
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn trivial_word_examples() {
        let g = fixtures::fprod();
        assert!(g.is_trivial_in_g(&RelWord::new()).unwrap());
        assert!(g.is_trivial_in_g(&g.parse_relword("a1 a2 a1^-1 a2^-1").unwrap()).unwrap());
        assert!(!g.is_trivial_in_g(&g.parse_relword("a1 b").unwrap()).unwrap());
    }

    #[test]
    fn element_equal_examples() {
        let g = fixtures::fprod();
        let w = |s: &str| g.parse_relword(s).unwrap();
        assert!(g.element_equal(&w("a1 b a2"), &w("a1 b a2")).unwrap());
        assert!(g.element_equal(&w("a1 a2"), &w("a2 a1")).unwrap());
        assert!(!g.element_equal(&w("b"), &w("a1")).unwrap());
        assert!(g.element_equal(&w("a1 a2"), &w("P1[1,1]")).unwrap());
    }

    #[test]
    fn to_relative_examples() {
        let g = fixtures::fprod();
        let x = |s: &str| g.alphabet().parse_word(s).unwrap();
        assert_eq!(g.format_relword(&g.to_relative(&x("a1 a2")).unwrap()), "P1[1,1]");
        assert_eq!(g.format_relword(&g.to_relative(&x("b")).unwrap()), "b");
        assert_eq!(g.format_relword(&g.to_relative(&x("a1 a1^-1 b")).unwrap()), "b");
    }

    #[test]
    fn rejects_identity_payload_and_bad_index() {
        let g = fixtures::fprod();
        assert!(g.parse_relword("P1[0,0]").is_err());
        assert!(g.parse_relword("P2[1,0]").is_err());
        assert!(g.parse_relword("P0[1,0]").is_err());
        assert!(g.parse_relword("c").is_err());
    }

    #[test]
    fn unsupported_without_native_or_constants() {
        let base = fixtures::fprod();
        let g = GroupInstance::new(
            base.alphabet().clone(),
            vec![],
            base.oracles().to_vec(),
            None,
            None,
            Budgets::default(),
        )
        .unwrap();
        let w = g.parse_relword("a1").unwrap();
        assert!(matches!(g.is_trivial_in_g(&w), Err(Error::Unsupported(_))));
    }

    #[test]
    fn dehn_search_on_generic_presentation() {
        // Same group as INST-FPROD, but presented relatively: a_k = P1[e_k].
        let base = fixtures::fprod();
        let mut g = GroupInstance::new(
            base.alphabet().clone(),
            vec![],
            base.oracles().to_vec(),
            Some(base.constants().unwrap().clone()),
            None,
            Budgets::default(),
        )
        .unwrap();
        g.relators = vec![g.parse_relword("a1 P1[-1,0]").unwrap(), g.parse_relword("a2 P1[0,-1]").unwrap()];
        let w = |s: &str| g.parse_relword(s).unwrap();
        assert!(g.is_trivial_in_g(&w("a1 P1[-1,0]")).unwrap());
        assert!(g.is_trivial_in_g(&w("P1[1,0] a1^-1")).unwrap());
        assert!(!g.is_trivial_in_g(&w("b")).unwrap());
    }

    fn x_words(g: &GroupInstance, len: usize) -> Vec<Vec<GenId>> {
        let letters: Vec<GenId> = g.alphabet().letters().collect();
        let mut out = vec![vec![]];
        let mut frontier = vec![vec![]];
        for _ in 0..len {
            let mut next = Vec::new();
            for w in &frontier {
                for &l in &letters {
                    let mut v: Vec<GenId> = w.clone();
                    v.push(l);
                    next.push(v);
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    /// Independent oracle for `ℤ² ∗ ℤ`: abelianize each maximal `a`-run and
    /// cancel across `b`-letters by hand.
    fn fprod_trivial_oracle(g: &GroupInstance, w: &[GenId]) -> bool {
        #[derive(PartialEq, Debug)]
        enum S {
            B(i64),
            A(i64, i64),
        }
        let mut st: Vec<S> = Vec::new();
        for &l in w {
            let name = g.alphabet().name(l);
            let s = match name.as_str() {
                "a1" => S::A(1, 0),
                "a1^-1" => S::A(-1, 0),
                "a2" => S::A(0, 1),
                "a2^-1" => S::A(0, -1),
                "b" => S::B(1),
                "b^-1" => S::B(-1),
                _ => unreachable!(),
            };
            let merged = match (st.pop(), s) {
                (Some(S::A(x, y)), S::A(u, v)) => Some(S::A(x + u, y + v)),
                (Some(S::B(x)), S::B(u)) => Some(S::B(x + u)),
                (Some(top), s) => {
                    st.push(top);
                    Some(s)
                }
                (None, s) => Some(s),
            };
            if let Some(m) = merged {
                if m != S::A(0, 0) && m != S::B(0) {
                    st.push(m);
                }
            }
        }
        st.is_empty()
    }

    #[test]
    fn word_problem_matches_independent_oracle_up_to_length_8() {
        let g = fixtures::fprod();
        for w in x_words(&g, 8) {
            assert_eq!(
                g.is_trivial_in_g(&RelWord::from_gens(&w)).unwrap(),
                fprod_trivial_oracle(&g, &w),
                "{}",
                g.alphabet().format_word(&w)
            );
        }
    }

    #[test]
    fn to_relative_preserves_element() {
        for g in [fixtures::fprod(), fixtures::cyc(), fixtures::free()] {
            for w in x_words(&g, 6) {
                let r = g.to_relative(&w).unwrap();
                assert!(g.element_equal(&r, &RelWord::from_gens(&w)).unwrap());
            }
        }
    }

    #[test]
    fn element_equal_is_an_equivalence_on_the_3_ball() {
        for g in [fixtures::fprod(), fixtures::cyc(), fixtures::free()] {
            let words: Vec<RelWord> = x_words(&g, 3).iter().map(|w| RelWord::from_gens(w)).collect();
            let n = words.len();
            let eq: Vec<Vec<bool>> = words
                .iter()
                .map(|a| words.iter().map(|b| g.element_equal(a, b).unwrap()).collect())
                .collect();
            for i in 0..n {
                assert!(eq[i][i]);
                for j in 0..n {
                    assert_eq!(eq[i][j], eq[j][i]);
                    if eq[i][j] {
                        for (k, &jk) in eq[j].iter().enumerate() {
                            if jk {
                                assert!(eq[i][k]);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn x_length_matches_ball() {
        let g = fixtures::fprod();
        for (e, d) in g.x_ball(4).unwrap() {
            assert_eq!(g.x_length(&e).unwrap(), d);
        }
    }
}
