//! Peripheral-structure candidates on `H`, the canonical map `ι`, and the
//! scans behind detector steps 3 and 4.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::group::{invert_yword, reduce_yword, Element, GroupInstance, SubgroupSpec, YLetter, YWord};
use crate::metrics::{bcp_epsilon, conjugated_payloads, local_to_global, o1_bound};
use crate::parabolics::Payload;
use crate::relcayley::{ball, first_violation};
use crate::words::{invert_word, GenId, Letter, RelWord};

/// A source of work units. Every scan asks for one tick before each unit of
/// work and pauses when refused.
pub trait Ticker {
    fn tick(&mut self) -> bool;
}

/// A ticker that never refuses.
pub struct Unmetered;

impl Ticker for Unmetered {
    fn tick(&mut self) -> bool {
        true
    }
}

/// Outcome of a resumable scan step.
#[derive(Clone, Debug, PartialEq)]
pub enum Poll<T> {
    Ready(T),
    Pending,
}

/// One entry `(i_j, g_j, Y_j)`: `O_j = ⟨Y_j⟩ ≤ H ∩ P_{i_j}^{g_j}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CandidateEntry {
    /// 0-based peripheral index.
    pub peripheral: usize,
    pub conjugator: Vec<GenId>,
    pub gens: Vec<YWord>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PeripheralCandidate {
    entries: Vec<CandidateEntry>,
}

impl PeripheralCandidate {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Checks that each generator of `Y_j` conjugates into `P_{i_j}` via `g_j`.
    pub fn new(g: &GroupInstance, sub: &SubgroupSpec, entries: Vec<CandidateEntry>) -> Result<Self> {
        for e in &entries {
            g.oracle(e.peripheral)
                .map_err(|_| Error::Contract(format!("no peripheral subgroup P{}", e.peripheral + 1)))?;
            if !e.conjugator.iter().all(|&x| g.alphabet().contains(x)) {
                return Err(Error::Contract("conjugator uses letters outside X".into()));
            }
            if e.gens.iter().flatten().any(|y| y.index() >= sub.gens().len()) {
                return Err(Error::Contract("generator uses letters outside Y".into()));
            }
            conjugated_payloads(g, &e.conjugator, e.peripheral, &e.gens, sub)?;
        }
        Ok(PeripheralCandidate { entries })
    }

    pub fn entries(&self) -> &[CandidateEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `μ = max({|y| : y ∈ Y} ∪ {2|g_j| + 1})`.
pub fn mu(candidate: &PeripheralCandidate, sub: &SubgroupSpec) -> usize {
    candidate
        .entries
        .iter()
        .map(|e| 2 * e.conjugator.len() + 1)
        .chain(std::iter::once(sub.max_gen_len()))
        .max()
        .unwrap_or(0)
}

/// Constants of steps 1 and 2 for one value of `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingConstants {
    pub mu: usize,
    pub n: u64,
    pub l: u64,
    pub big_c: f64,
    pub d: u64,
    pub lambda: f64,
    pub c: f64,
    pub epsilon: u64,
    /// Bound on `|h|_Y` scanned in step 3.
    pub witness_bound: u64,
    pub epsilon_certified: bool,
    pub l2g_certified: bool,
}

/// The smallest admissible `N` for a given `μ`: `⌈2(μ+1)²⌉`.
pub fn initial_n(mu: usize) -> u64 {
    2 * (mu as u64 + 1).pow(2)
}

/// Memoized `o1_bound` values, failures included, keyed by entry and radius.
pub type DCache = HashMap<(CandidateEntry, usize), Result<u64>>;

/// Steps 1 and 2 at a given `N`.
pub fn embedding_constants(
    g: &GroupInstance,
    sub: &SubgroupSpec,
    candidate: &PeripheralCandidate,
    n: u64,
    d_cache: &mut DCache,
) -> Result<EmbeddingConstants> {
    let mu = mu(candidate, sub);
    if mu == 0 {
        return Err(Error::Contract("μ must be positive".into()));
    }
    if n < initial_n(mu) {
        return Err(Error::Contract(format!("N = {n} is below ⌈2(μ+1)²⌉ = {}", initial_n(mu))));
    }
    let cert = g.constants()?;
    let l2g = local_to_global(cert, n)?;
    let big_c = (n as f64 / 2.0).sqrt() - mu as f64;
    let muf = mu as f64;
    let epsilon = bcp_epsilon(g, l2g.lambda / muf, l2g.c + muf)?.max(bcp_epsilon(g, n as f64, n as f64 + muf)?);
    let mut d = 0u64;
    for e in &candidate.entries {
        let radius = epsilon as usize + 2 * e.conjugator.len();
        let v = d_cache
            .entry((e.clone(), radius))
            .or_insert_with(|| o1_bound(g, &e.conjugator, e.peripheral, &e.gens, sub, radius))
            .clone()?;
        d = d.max(v);
    }
    let df = d as f64;
    let nf = n as f64;
    let witness_bound = (df * nf * (muf + nf)).max(df * (l2g.lambda / muf) * (muf + l2g.c)).ceil() as u64;
    Ok(EmbeddingConstants {
        mu,
        n,
        l: l2g.l,
        big_c,
        d,
        lambda: l2g.lambda,
        c: l2g.c,
        epsilon,
        witness_bound,
        epsilon_certified: cert.epsilon_certified(),
        l2g_certified: l2g.certified,
    })
}

/// A letter of `𝒪`: a nontrivial `o ∈ O_j`, stored as its canonical `Y`-word
/// and the value `p = g_j o g_j⁻¹ ∈ P_{i_j}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OLetter {
    pub entry: usize,
    pub word: YWord,
    pub payload: Payload,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TLetter {
    Y(YLetter),
    O(OLetter),
}

/// `ι` on a single letter.
pub fn iota_letter(g: &GroupInstance, sub: &SubgroupSpec, candidate: &PeripheralCandidate, t: &TLetter) -> Result<RelWord> {
    match t {
        TLetter::Y(y) => {
            if y.index() >= sub.gens().len() {
                return Err(Error::Malformed("letter outside Y".into()));
            }
            Ok(RelWord::from_gens(&sub.letter_word(*y)))
        }
        TLetter::O(o) => {
            let e = candidate
                .entries
                .get(o.entry)
                .ok_or_else(|| Error::Malformed(format!("no entry {}", o.entry + 1)))?;
            if g.oracle(e.peripheral)?.is_identity(&o.payload) {
                return Err(Error::Malformed("𝒪-letters must be nontrivial".into()));
            }
            let mut w = RelWord::from_gens(&invert_word(&e.conjugator));
            w.0.push(Letter::Para { index: e.peripheral, payload: o.payload.clone() });
            w.0.extend(e.conjugator.iter().map(|&x| Letter::Gen(x)));
            Ok(w)
        }
    }
}

/// The canonical map `ι : (Y ∪ 𝒪)* → (X ∪ 𝒫)*`.
pub fn canonical_map(g: &GroupInstance, sub: &SubgroupSpec, candidate: &PeripheralCandidate, w: &[TLetter]) -> Result<RelWord> {
    let mut out = RelWord::new();
    for t in w {
        out.0.extend(iota_letter(g, sub, candidate, t)?.0);
    }
    Ok(out)
}

/// Per-entry data for membership in `O_j` through the backend of `P_{i_j}`:
/// `h ∈ O_j` iff `g_j h g_j⁻¹ ∈ ⟨g_j Y_j g_j⁻¹⟩ ≤ P_{i_j}`.
struct EntryData {
    peripheral: usize,
    conj: Element,
    payloads: Vec<Payload>,
}

fn entry_data(g: &GroupInstance, sub: &SubgroupSpec, candidate: &PeripheralCandidate) -> Result<Vec<EntryData>> {
    candidate
        .entries
        .iter()
        .map(|e| {
            Ok(EntryData {
                peripheral: e.peripheral,
                conj: g.element_of_gens(&e.conjugator)?,
                payloads: conjugated_payloads(g, &e.conjugator, e.peripheral, &e.gens, sub)?,
            })
        })
        .collect()
}

fn y_elements(g: &GroupInstance, sub: &SubgroupSpec) -> Result<Vec<(YLetter, Element)>> {
    sub.letters()
        .map(|y| Ok((y, g.element_of_gens(&sub.letter_word(y))?)))
        .collect()
}

/// All `o ∈ O_j` with `|o|_Y ≤ d`, each with its shortlex-least `Y`-word.
pub fn enumerate_short_o_letters(
    g: &GroupInstance,
    sub: &SubgroupSpec,
    candidate: &PeripheralCandidate,
    j: usize,
    d: usize,
    ticker: &mut dyn Ticker,
) -> Result<Poll<Vec<OLetter>>> {
    let data = entry_data(g, sub, candidate)?;
    let ed = data.get(j).ok_or_else(|| Error::Contract(format!("no entry {}", j + 1)))?;
    let oracle = g.oracle(ed.peripheral)?;
    if ed.payloads.iter().all(|p| oracle.is_identity(p)) {
        return Ok(Poll::Ready(Vec::new()));
    }
    let member = oracle.member_fn(&ed.payloads);
    let ys = y_elements(g, sub)?;
    let mut seen: HashSet<Element> = HashSet::from([Element::identity()]);
    let mut layer: Vec<(YWord, Element)> = vec![(Vec::new(), Element::identity())];
    let mut out = Vec::new();
    for _ in 0..d {
        let mut next = Vec::new();
        for (w, e) in &layer {
            for (y, ye) in &ys {
                if !ticker.tick() {
                    return Ok(Poll::Pending);
                }
                let f = g.mul(e, ye);
                if !seen.insert(f.clone()) {
                    continue;
                }
                if seen.len() > g.budgets().max_vertices {
                    return Err(Error::budget("short 𝒪-letter enumeration", Some(out.len() as u64)));
                }
                let mut fw = w.clone();
                fw.push(*y);
                if let Some(p) = g.parabolic_payload(ed.peripheral, &g.conjugate(&ed.conj, &f)) {
                    if member(&p) {
                        out.push(OLetter { entry: j, word: fw.clone(), payload: p });
                    }
                }
                next.push((fw, f));
            }
        }
        layer = next;
    }
    Ok(Poll::Ready(out))
}

/// A step-3 witness: `g_j h g_k⁻¹ ∈ P_i`, with `h ∉ O_j` when `j = k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub j: usize,
    pub k: usize,
    pub h: YWord,
}

/// Resumable breadth-first scan of `H` for step-3 witnesses, in shortlex order
/// of `h` and then lexicographic order of `(j, k)`.
pub struct WitnessScan {
    bound: u64,
    nodes: Vec<(Element, u32, Option<YLetter>, u64)>,
    seen: HashSet<Element>,
    head: usize,
}

impl WitnessScan {
    pub fn new(bound: u64) -> Self {
        WitnessScan {
            bound,
            nodes: vec![(Element::identity(), 0, None, 0)],
            seen: HashSet::from([Element::identity()]),
            head: 0,
        }
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    /// Number of `H`-elements examined so far.
    pub fn examined(&self) -> usize {
        self.head
    }

    fn word(&self, mut k: usize) -> YWord {
        let mut w = Vec::new();
        while let Some(y) = self.nodes[k].2 {
            w.push(y);
            k = self.nodes[k].1 as usize;
        }
        w.reverse();
        w
    }

    pub fn resume(
        &mut self,
        g: &GroupInstance,
        sub: &SubgroupSpec,
        candidate: &PeripheralCandidate,
        ticker: &mut dyn Ticker,
    ) -> Result<Poll<Option<Witness>>> {
        let data = entry_data(g, sub, candidate)?;
        let members: Vec<_> = data
            .iter()
            .map(|d| Ok(g.oracle(d.peripheral)?.member_fn(&d.payloads)))
            .collect::<Result<_>>()?;
        let conj_inv: Vec<Element> = data.iter().map(|d| g.inv(&d.conj)).collect();
        let ys = y_elements(g, sub)?;
        while self.head < self.nodes.len() {
            if !ticker.tick() {
                return Ok(Poll::Pending);
            }
            let (h, _, _, depth) = self.nodes[self.head].clone();
            for (j, dj) in data.iter().enumerate() {
                let gh = g.mul(&dj.conj, &h);
                for (k, dk) in data.iter().enumerate() {
                    if dk.peripheral != dj.peripheral {
                        continue;
                    }
                    let Some(p) = g.parabolic_payload(dj.peripheral, &g.mul(&gh, &conj_inv[k])) else {
                        continue;
                    };
                    if j == k && members[j](&p) {
                        continue;
                    }
                    return Ok(Poll::Ready(Some(Witness { j, k, h: self.word(self.head) })));
                }
            }
            if depth < self.bound {
                for (y, ye) in &ys {
                    let f = g.mul(&h, ye);
                    if self.seen.insert(f.clone()) {
                        if self.nodes.len() >= g.budgets().max_vertices {
                            return Err(Error::budget("step-3 witness scan", Some(depth)));
                        }
                        self.nodes.push((f, self.head as u32, Some(*y), depth + 1));
                    }
                }
            }
            self.head += 1;
        }
        Ok(Poll::Ready(None))
    }
}

/// Runs a [`WitnessScan`] to completion.
pub fn find_parabolic_witness(
    g: &GroupInstance,
    sub: &SubgroupSpec,
    candidate: &PeripheralCandidate,
    bound: u64,
) -> Result<Option<Witness>> {
    match WitnessScan::new(bound).resume(g, sub, candidate, &mut Unmetered)? {
        Poll::Ready(w) => Ok(w),
        Poll::Pending => unreachable!("unmetered scans never pause"),
    }
}

/// Refines a candidate along a witness: add `h` to `Y_j` if `j = k`, otherwise replace `Y_j` and
/// `Y_k` by `Y_j^h ∪ Y_k` (kept at `k`'s conjugator).
pub fn refine_structure(
    g: &GroupInstance,
    sub: &SubgroupSpec,
    candidate: &PeripheralCandidate,
    w: &Witness,
) -> Result<PeripheralCandidate> {
    let n = candidate.entries.len();
    if w.j >= n || w.k >= n {
        return Err(Error::Contract("witness names a missing entry".into()));
    }
    let (ej, ek) = (&candidate.entries[w.j], &candidate.entries[w.k]);
    if ej.peripheral != ek.peripheral {
        return Err(Error::Contract("witness pairs entries of different peripherals".into()));
    }
    let data = entry_data(g, sub, candidate)?;
    let h = g.element_of_gens(&sub.to_x_word(&w.h))?;
    let x = g.mul(&g.mul(&data[w.j].conj, &h), &g.inv(&data[w.k].conj));
    let Some(p) = g.parabolic_payload(ej.peripheral, &x) else {
        return Err(Error::Contract("g_j h g_k⁻¹ is not in P_i".into()));
    };
    let mut entries = candidate.entries.clone();
    if w.j == w.k {
        if g.oracle(ej.peripheral)?.membership_elems(&data[w.j].payloads, &p) {
            return Err(Error::Contract("h already lies in O_j".into()));
        }
        entries[w.j].gens.push(w.h.clone());
    } else {
        let hinv = invert_yword(&w.h);
        let mut gens: Vec<YWord> = ej
            .gens
            .iter()
            .map(|y| reduce_yword(&[hinv.as_slice(), y, &w.h].concat()))
            .collect();
        gens.extend(ek.gens.iter().cloned());
        entries[w.k].gens = gens;
        entries.remove(w.j);
    }
    PeripheralCandidate::new(g, sub, entries)
}

/// A word over the truncated alphabet whose image under `ι` is not a
/// quasigeodesic, together with the offending subword of the image.
#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub word: Vec<TLetter>,
    pub image: RelWord,
    pub subword: RelWord,
}

struct TEntry {
    letter: TLetter,
    elem: Element,
    image: RelWord,
}

/// Resumable enumeration of the geodesic words of length `≤ l` in the Cayley
/// graph of `H` over `Y ∪ 𝒪_{≤D}`, testing each image under `ι`.
pub struct GeodesicScan {
    l: u64,
    lambda: f64,
    c: f64,
    alphabet: Vec<TEntry>,
    depth_of: HashMap<Element, u64>,
    level: Vec<(Vec<u32>, Element, usize)>,
    next: Vec<(Vec<u32>, Element, usize)>,
    depth: u64,
    cursor: (usize, usize),
    tested: u64,
}

impl GeodesicScan {
    /// `o_letters` are the short `𝒪`-letters of all entries.
    pub fn new(
        g: &GroupInstance,
        sub: &SubgroupSpec,
        candidate: &PeripheralCandidate,
        o_letters: &[OLetter],
        l: u64,
        lambda: f64,
        c: f64,
    ) -> Result<Self> {
        let mut alphabet = Vec::new();
        let letters = sub
            .letters()
            .map(TLetter::Y)
            .chain(o_letters.iter().cloned().map(TLetter::O));
        for t in letters {
            let image = iota_letter(g, sub, candidate, &t)?;
            let elem = g.element(&image)?;
            alphabet.push(TEntry { letter: t, elem, image });
        }
        Ok(GeodesicScan {
            l,
            lambda,
            c,
            alphabet,
            depth_of: HashMap::from([(Element::identity(), 0)]),
            level: vec![(Vec::new(), Element::identity(), 0)],
            next: Vec::new(),
            depth: 0,
            cursor: (0, 0),
            tested: 0,
        })
    }

    /// Words tested so far.
    pub fn tested(&self) -> u64 {
        self.tested
    }

    pub fn resume(&mut self, g: &GroupInstance, ticker: &mut dyn Ticker) -> Result<Poll<Option<Counterexample>>> {
        while self.depth < self.l && !self.level.is_empty() {
            while self.cursor.0 < self.level.len() {
                while self.cursor.1 < self.alphabet.len() {
                    if !ticker.tick() {
                        return Ok(Poll::Pending);
                    }
                    let (vi, ti) = self.cursor;
                    self.cursor.1 += 1;
                    let e = g.mul(&self.level[vi].1, &self.alphabet[ti].elem);
                    match self.depth_of.get(&e) {
                        Some(&dd) if dd <= self.depth => continue,
                        Some(_) => {}
                        None => {
                            if self.depth_of.len() >= g.budgets().max_vertices {
                                return Err(Error::budget("step-4 geodesic scan", Some(self.depth)));
                            }
                            self.depth_of.insert(e.clone(), self.depth + 1);
                        }
                    }
                    self.tested += 1;
                    let mut word = self.level[vi].0.clone();
                    word.push(ti as u32);
                    let image_len = self.level[vi].2 + self.alphabet[ti].image.len();
                    if let Some(ce) = self.test(g, &word, &e, image_len)? {
                        return Ok(Poll::Ready(Some(ce)));
                    }
                    if self.depth + 1 < self.l {
                        self.next.push((word, e, image_len));
                    }
                }
                self.cursor = (self.cursor.0 + 1, 0);
            }
            self.level = std::mem::take(&mut self.next);
            self.cursor = (0, 0);
            self.depth += 1;
        }
        Ok(Poll::Ready(None))
    }

    fn test(&self, g: &GroupInstance, word: &[u32], e: &Element, image_len: usize) -> Result<Option<Counterexample>> {
        // A geodesic image has only geodesic subwords, and those always pass.
        if g.native().is_some() && g.native_relative_length(e) == image_len {
            return Ok(None);
        }
        let mut image = RelWord::new();
        for &t in word {
            image.0.extend(self.alphabet[t as usize].image.0.iter().cloned());
        }
        Ok(first_violation(g, &image, self.lambda, self.c)?.map(|(s, t)| Counterexample {
            word: word.iter().map(|&t| self.alphabet[t as usize].letter.clone()).collect(),
            subword: RelWord(image.0[s..t].to_vec()),
            image,
        }))
    }
}

/// Step 4: all truncated-geodesic words of length `≤ L` map to
/// `(C, C)`-quasigeodesics.
pub fn check_short_geodesics(
    g: &GroupInstance,
    sub: &SubgroupSpec,
    candidate: &PeripheralCandidate,
    consts: &EmbeddingConstants,
    o_letters: &[OLetter],
) -> Result<Option<Counterexample>> {
    let mut scan = GeodesicScan::new(g, sub, candidate, o_letters, consts.l, consts.big_c, consts.big_c)?;
    match scan.resume(g, &mut Unmetered)? {
        Poll::Ready(r) => Ok(r),
        Poll::Pending => unreachable!("unmetered scans never pause"),
    }
}

/// `ν = ε + μ`.
pub fn compute_nu(epsilon: u64, mu: u64) -> u64 {
    epsilon + mu
}

/// The quasigeodesic constants `(μλ, 2μ + 2μ²λ + μλc)` whose BCP constant
/// feeds `ν`.
pub fn nu_parameters(mu: usize, lambda: f64, c: f64) -> (f64, f64) {
    let m = mu as f64;
    (m * lambda, 2.0 * m + 2.0 * m * m * lambda + m * lambda * c)
}

/// A vertex on a relative geodesic from `1` to `target ∈ H` that is farther
/// than `ν` from `H` in `d_X`.
#[derive(Clone, Debug, PartialEq)]
pub struct QcViolation {
    pub target: Element,
    pub vertex: Element,
    /// Smallest `d_X(vertex, h)` over the enumerated `h ∈ H`.
    pub distance: usize,
}

/// Brute-force check of relative quasiconvexity with constant `ν` inside the
/// ball of the given radius and component bound.
///
/// Pairs of `H`-points are translated so that one endpoint is `1`, so this
/// covers every pair at relative distance `≤ radius`. `H`-points are the
/// elements of `Y`-length `≤ h_radius`.
pub fn verify_quasiconvexity(
    g: &GroupInstance,
    sub: &SubgroupSpec,
    nu: u64,
    radius: usize,
    bound: usize,
    h_radius: usize,
) -> Result<Option<QcViolation>> {
    let b = ball(g, radius, bound)?;
    let ys = y_elements(g, sub)?;
    let mut h_set: HashSet<Element> = HashSet::from([Element::identity()]);
    let mut layer = vec![Element::identity()];
    for _ in 0..h_radius {
        let mut next = Vec::new();
        for e in &layer {
            for (_, ye) in &ys {
                let f = g.mul(e, ye);
                if h_set.insert(f.clone()) {
                    if h_set.len() > g.budgets().max_vertices {
                        return Err(Error::budget("H enumeration", None));
                    }
                    next.push(f);
                }
            }
        }
        layer = next;
    }
    let h_list: Vec<&Element> = h_set.iter().collect();
    let x_nbhd: Option<Vec<Element>> = if nu as usize <= g.budgets().exact_distortion_radius {
        Some(g.x_ball(nu as usize)?.into_iter().map(|(e, _)| e).collect())
    } else {
        None
    };
    let mut checked: HashSet<usize> = HashSet::new();
    for k in 0..b.len() {
        let target = &b.vertices()[k];
        if !h_set.contains(target) {
            continue;
        }
        let verts: BTreeSet<usize> = b.geodesic_vertices(k);
        for v in verts {
            if checked.contains(&v) {
                // Closeness to H does not depend on the geodesic.
                continue;
            }
            let ve = &b.vertices()[v];
            let near = |h: &Element| -> Result<usize> { g.x_length(&g.quotient(ve, h)) };
            if near(&Element::identity())? as u64 <= nu || near(target)? as u64 <= nu {
                checked.insert(v);
                continue;
            }
            let close = match &x_nbhd {
                Some(nb) => nb.iter().any(|u| h_set.contains(&g.mul(ve, u))),
                None => {
                    let mut ok = false;
                    for h in &h_list {
                        if near(h)? as u64 <= nu {
                            ok = true;
                            break;
                        }
                    }
                    ok
                }
            };
            if !close {
                let mut distance = usize::MAX;
                for h in &h_list {
                    distance = distance.min(near(h)?);
                }
                return Ok(Some(QcViolation { target: target.clone(), vertex: ve.clone(), distance }));
            }
            checked.insert(v);
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_yword, StructureConfig};
    use crate::fixtures;
    use crate::metrics::o2_membership;
    use crate::relcayley::is_quasigeodesic;

    fn sub(g: &GroupInstance, s: &str) -> SubgroupSpec {
        SubgroupSpec::parse(g.alphabet(), s).unwrap()
    }

    fn entry(g: &GroupInstance, sb: &SubgroupSpec, i: usize, conj: &str, gens: &[&str]) -> CandidateEntry {
        CandidateEntry {
            peripheral: i,
            conjugator: g.alphabet().parse_word(conj).unwrap(),
            gens: gens.iter().map(|s| parse_yword(g, sb, s).unwrap()).collect(),
        }
    }

    fn structure_candidate(g: &GroupInstance, sb: &SubgroupSpec, text: &str) -> PeripheralCandidate {
        let s = StructureConfig::from_json(text).unwrap();
        let entries = s
            .entries
            .iter()
            .map(|e| {
                let gens: Vec<&str> = e.generators.iter().map(String::as_str).collect();
                entry(g, sb, e.peripheral - 1, &e.conjugator, &gens)
            })
            .collect();
        PeripheralCandidate::new(g, sb, entries).unwrap()
    }

    #[test]
    fn mu_examples() {
        let g = fixtures::fprod();
        let b = sub(&g, "b");
        assert_eq!(mu(&PeripheralCandidate::empty(), &b), 1);
        let with_b = PeripheralCandidate { entries: vec![CandidateEntry { peripheral: 0, conjugator: g.alphabet().parse_word("b").unwrap(), gens: vec![] }] };
        assert_eq!(mu(&with_b, &b), 3);
        let ab = sub(&g, "a1 b");
        let triv = PeripheralCandidate { entries: vec![CandidateEntry { peripheral: 0, conjugator: vec![], gens: vec![] }] };
        assert_eq!(mu(&triv, &ab), 2);
    }

    #[test]
    fn candidate_validation() {
        let g = fixtures::fprod();
        let sb = sub(&g, "a1,b");
        assert!(PeripheralCandidate::new(&g, &sb, vec![entry(&g, &sb, 0, "", &["a1"])]).is_ok());
        let bad = PeripheralCandidate::new(&g, &sb, vec![entry(&g, &sb, 0, "", &["b"])]);
        assert!(matches!(bad, Err(Error::Contract(_))));
        let conj = PeripheralCandidate::new(&g, &sb, vec![entry(&g, &sb, 0, "b", &["y2^-1 y1 y2"])]);
        assert!(conj.is_ok());
    }

    #[test]
    fn canonical_map_examples() {
        let g = fixtures::fprod();
        let sb = sub(&g, "a1,a2,b");
        let a1 = g.alphabet().lookup("a1").unwrap();
        let b = g.alphabet().lookup("b").unwrap();
        let p10 = Payload::Vector(vec![1, 0]);
        // y ↦ y
        let c0 = PeripheralCandidate::empty();
        let w = canonical_map(&g, &sb, &c0, &[TLetter::Y(YLetter(0))]).unwrap();
        assert_eq!(w, RelWord::from_gens(&[a1]));
        // trivial conjugator: a single parabolic letter
        let c1 = PeripheralCandidate::new(&g, &sb, vec![entry(&g, &sb, 0, "", &["a1"])]).unwrap();
        let o = OLetter { entry: 0, word: vec![YLetter(0)], payload: p10.clone() };
        let w = canonical_map(&g, &sb, &c1, &[TLetter::O(o.clone())]).unwrap();
        assert_eq!(w.0, vec![Letter::Para { index: 0, payload: p10.clone() }]);
        // conjugator b: b⁻¹ p b
        let c2 = PeripheralCandidate::new(&g, &sb, vec![entry(&g, &sb, 0, "b", &["y3^-1 y1 y3"])]).unwrap();
        let o2 = OLetter { entry: 0, word: parse_yword(&g, &sb, "y3^-1 y1 y3").unwrap(), payload: p10.clone() };
        let w = canonical_map(&g, &sb, &c2, &[TLetter::O(o2.clone())]).unwrap();
        assert_eq!(w.0, vec![Letter::Gen(b.inverse()), Letter::Para { index: 0, payload: p10.clone() }, Letter::Gen(b)]);
        assert!(g.element_equal(&w, &RelWord::from_gens(&sb.to_x_word(&o2.word))).unwrap());
        // the identity is not an 𝒪-letter
        let o0 = OLetter { entry: 0, word: vec![], payload: Payload::Vector(vec![0, 0]) };
        assert!(matches!(canonical_map(&g, &sb, &c1, &[TLetter::O(o0)]), Err(Error::Malformed(_))));
    }

    #[test]
    fn canonical_map_preserves_elements_and_length_bound() {
        let g = fixtures::fprod();
        let sb = sub(&g, "a1,b");
        let c = PeripheralCandidate::new(&g, &sb, vec![entry(&g, &sb, 0, "b", &["y2^-1 y1 y2"])]).unwrap();
        let os = match enumerate_short_o_letters(&g, &sb, &c, 0, 5, &mut Unmetered).unwrap() {
            Poll::Ready(v) => v,
            Poll::Pending => unreachable!(),
        };
        assert!(!os.is_empty());
        let m = mu(&c, &sb);
        let mut letters: Vec<TLetter> = sb.letters().map(TLetter::Y).collect();
        letters.extend(os.into_iter().take(3).map(TLetter::O));
        for a in &letters {
            for b2 in &letters {
                let w = vec![a.clone(), b2.clone()];
                let img = canonical_map(&g, &sb, &c, &w).unwrap();
                assert!(img.len() <= m * w.len());
                let direct: Vec<GenId> = w
                    .iter()
                    .flat_map(|t| match t {
                        TLetter::Y(y) => sb.letter_word(*y),
                        TLetter::O(o) => sb.to_x_word(&o.word),
                    })
                    .collect();
                assert!(g.element_equal(&img, &RelWord::from_gens(&direct)).unwrap());
            }
        }
    }

    #[test]
    fn short_o_letters_examples() {
        let g = fixtures::fprod();
        let sb = sub(&g, "a1,a2,b");
        let c = PeripheralCandidate::new(&g, &sb, vec![entry(&g, &sb, 0, "", &["a1"])]).unwrap();
        let run = |d| match enumerate_short_o_letters(&g, &sb, &c, 0, d, &mut Unmetered).unwrap() {
            Poll::Ready(v) => v,
            Poll::Pending => unreachable!(),
        };
        assert!(run(0).is_empty());
        let got: BTreeSet<Vec<i64>> = run(2)
            .into_iter()
            .map(|o| match o.payload {
                Payload::Vector(v) => v,
                _ => unreachable!(),
            })
            .collect();
        let want: BTreeSet<Vec<i64>> = [[1, 0], [-1, 0], [2, 0], [-2, 0]].iter().map(|v| v.to_vec()).collect();
        assert_eq!(got, want);
        // canonical words are the shortest, and agree with the O2 oracle
        for o in run(3) {
            assert_eq!(o.word.len() as i64, match &o.payload {
                Payload::Vector(v) => v[0].abs(),
                _ => unreachable!(),
            });
            assert!(o2_membership(&g, &sb.to_x_word(&o.word), &[], 0, &c.entries[0].gens, &sb).unwrap());
        }
        let trivial = PeripheralCandidate::new(&g, &sb, vec![entry(&g, &sb, 0, "", &[])]).unwrap();
        assert_eq!(enumerate_short_o_letters(&g, &sb, &trivial, 0, 4, &mut Unmetered).unwrap(), Poll::Ready(vec![]));
    }

    #[test]
    fn witness_none_for_induced_structure() {
        let g = fixtures::fprod();
        let sb = sub(&g, "a1,b");
        let c = structure_candidate(&g, &sb, fixtures::INDUCED_STRUCTURE_JSON);
        for bound in 0..=4 {
            assert_eq!(find_parabolic_witness(&g, &sb, &c, bound).unwrap(), None);
        }
    }

    #[test]
    fn remark_fixture_witness_is_a1() {
        let g = fixtures::fprod();
        let sb = sub(&g, "a1,a2,b");
        let c = structure_candidate(&g, &sb, fixtures::REMARK_STRUCTURE_JSON);
        let w = find_parabolic_witness(&g, &sb, &c, 3).unwrap().unwrap();
        assert_eq!((w.j, w.k), (0, 0));
        assert_eq!(sb.format_yword(g.alphabet(), &w.h), "a1");
        // independent check: a1 ∈ P_1 but a1 ∉ ⟨a1², a2⟩ (parity of the first coordinate)
        let refined = refine_structure(&g, &sb, &c, &w).unwrap();
        assert_eq!(refined.entries[0].gens.len(), 3);
        assert_eq!(find_parabolic_witness(&g, &sb, &refined, 3).unwrap(), None);
        assert!(matches!(refine_structure(&g, &sb, &refined, &w), Err(Error::Contract(_))));
    }

    #[test]
    fn two_entry_merge() {
        let g = fixtures::fprod();
        let sb = sub(&g, "a1,b");
        let c = PeripheralCandidate::new(
            &g,
            &sb,
            vec![entry(&g, &sb, 0, "", &["a1"]), entry(&g, &sb, 0, "b", &["y2^-1 y1 y2"])],
        )
        .unwrap();
        let w = find_parabolic_witness(&g, &sb, &c, 2).unwrap().unwrap();
        assert_ne!(w.j, w.k);
        let merged = refine_structure(&g, &sb, &c, &w).unwrap();
        assert_eq!(merged.len(), 1);
        assert_eq!(merged.entries[0].gens.len(), 2);
    }

    #[test]
    fn witness_monotone_in_bound() {
        let g = fixtures::fprod();
        let sb = sub(&g, "a1 a1,a2 b");
        let c = PeripheralCandidate::new(&g, &sb, vec![entry(&g, &sb, 0, "", &["y1"])]).unwrap();
        let mut found = false;
        for bound in 0..=3 {
            let w = find_parabolic_witness(&g, &sb, &c, bound).unwrap();
            assert!(!(found && w.is_none()));
            found |= w.is_some();
        }
    }

    #[test]
    fn scan_pauses_and_resumes_identically() {
        struct Budget(u32);
        impl Ticker for Budget {
            fn tick(&mut self) -> bool {
                if self.0 == 0 {
                    return false;
                }
                self.0 -= 1;
                true
            }
        }
        let g = fixtures::fprod();
        let sb = sub(&g, "a1,a2,b");
        let c = structure_candidate(&g, &sb, fixtures::REMARK_STRUCTURE_JSON);
        let mut scan = WitnessScan::new(3);
        let mut rounds = 0;
        let w = loop {
            rounds += 1;
            if let Poll::Ready(w) = scan.resume(&g, &sb, &c, &mut Budget(1)).unwrap() {
                break w;
            }
        };
        assert!(rounds > 1);
        assert_eq!(w, find_parabolic_witness(&g, &sb, &c, 3).unwrap());
    }

    #[test]
    fn short_geodesics_examples() {
        let g = fixtures::fprod();
        let sb = sub(&g, "b");
        let c = PeripheralCandidate::empty();
        for l in [1, 4] {
            let mut scan = GeodesicScan::new(&g, &sb, &c, &[], l, 1.0, 1.0).unwrap();
            assert_eq!(scan.resume(&g, &mut Unmetered).unwrap(), Poll::Ready(None));
            assert_eq!(scan.tested(), 2 * l);
        }
        // length-1 words pass at C = 1 for any Y
        let sb = sub(&g, "a1 b a1^-1,b a2");
        let mut scan = GeodesicScan::new(&g, &sb, &c, &[], 1, 1.0, 1.0).unwrap();
        assert_eq!(scan.resume(&g, &mut Unmetered).unwrap(), Poll::Ready(None));
    }

    #[test]
    fn distorted_images_fail_without_step_3() {
        // With no 𝒪-letters, powers of a1 stay Y-geodesic while their images
        // collapse to a single parabolic syllable.
        let g = fixtures::fprod();
        let sb = sub(&g, "a1,a2,b");
        let c = PeripheralCandidate::empty();
        let mut scan = GeodesicScan::new(&g, &sb, &c, &[], 6, 1.0, 1.0).unwrap();
        match scan.resume(&g, &mut Unmetered).unwrap() {
            Poll::Ready(Some(ce)) => {
                assert!(ce.subword.len() >= 2);
                assert!(!is_quasigeodesic(&g, &ce.image, 1.0).unwrap().0);
            }
            other => panic!("expected a counterexample, got {other:?}"),
        }
    }

    #[test]
    fn truncated_geodesics_are_n_quasigeodesic_for_induced_structure() {
        let g = fixtures::fprod();
        let sb = sub(&g, "a1,b");
        let c = structure_candidate(&g, &sb, fixtures::INDUCED_STRUCTURE_JSON);
        let os = match enumerate_short_o_letters(&g, &sb, &c, 0, 3, &mut Unmetered).unwrap() {
            Poll::Ready(v) => v,
            Poll::Pending => unreachable!(),
        };
        let n = initial_n(mu(&c, &sb)) as f64;
        let mut scan = GeodesicScan::new(&g, &sb, &c, &os, 4, n, n).unwrap();
        assert_eq!(scan.resume(&g, &mut Unmetered).unwrap(), Poll::Ready(None));
    }

    #[test]
    fn nu_examples() {
        assert_eq!(compute_nu(5, 3), 8);
        assert_eq!(compute_nu(0, 1), 1);
        assert_eq!(compute_nu(7, 0), 7);
        assert_eq!(nu_parameters(1, 2.0, 3.0), (2.0, 2.0 + 4.0 + 6.0));
    }

    #[test]
    fn quasiconvexity_examples() {
        let g = fixtures::fprod();
        let all = sub(&g, "a1,a2,b");
        assert_eq!(verify_quasiconvexity(&g, &all, 0, 2, 2, 4).unwrap(), None);
        let b = sub(&g, "b");
        assert_eq!(verify_quasiconvexity(&g, &b, 0, 3, 3, 6).unwrap(), None);
        let ab = sub(&g, "a1 b");
        let v = verify_quasiconvexity(&g, &ab, 0, 3, 3, 6).unwrap().expect("a violation");
        assert!(v.distance >= 1);
        assert_eq!(verify_quasiconvexity(&g, &ab, 1, 3, 3, 6).unwrap(), None);
    }

    #[test]
    fn embedding_constants_for_free_factor() {
        let g = fixtures::fprod();
        let sb = sub(&g, "b");
        let c = PeripheralCandidate::empty();
        let k = embedding_constants(&g, &sb, &c, initial_n(1), &mut DCache::new()).unwrap();
        assert_eq!((k.mu, k.n, k.d, k.witness_bound), (1, 8, 0, 0));
        assert!((k.big_c - 1.0).abs() < 1e-12);
        assert!(embedding_constants(&g, &sb, &c, 7, &mut DCache::new()).is_err());
    }
}
