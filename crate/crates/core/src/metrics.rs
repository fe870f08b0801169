//! Constants certificates and the distortion calculus.
//!
//! Distortion functions are computed over any [`Ambient`] group: the ambient
//! `G` itself (elements in free-product normal form) or a single peripheral
//! backend.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Debug;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Element, GroupInstance, SubgroupSpec, YWord};
use crate::parabolics::{ParabolicOracle, Payload};
use crate::relcayley;
use crate::words::{GenId, Letter, RelWord};

// ---- certificate ---------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsilonMode {
    /// `ε(λ,c) = ⌈αλ + βc + α + β⌉`.
    Affine { alpha: f64, beta: f64 },
    /// Values on a grid; queries round up to the next grid point.
    Table { lambdas: Vec<f64>, cs: Vec<f64>, values: Vec<Vec<u64>> },
    /// Bigon scan in `ball(radius, bound)`; never certified.
    Empirical { radius: usize, bound: usize },
}

/// Quadratic `a0 + a1·N + a2·N²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadratic(pub [f64; 3]);

impl Quadratic {
    pub fn at(&self, n: f64) -> f64 {
        self.0[0] + self.0[1] * n + self.0[2] * n * n
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum L2gMode {
    /// The shipped conservative scheme (see the README); never certified.
    Formula,
    /// Certificate-supplied quadratics in `N`.
    Certified { l: Quadratic, lambda: Quadratic, c: Quadratic },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsCertificate {
    pub delta: u64,
    pub dehn_k: u64,
    pub epsilon: EpsilonMode,
    pub l2g: L2gMode,
    /// Per peripheral `(a, b)` with `Dist_G^{P_i}(n) ≤ a·n + b`.
    #[serde(default)]
    pub parabolic_distortion: Option<Vec<(u64, u64)>>,
    #[serde(default)]
    pub provenance: String,
}

impl ConstantsCertificate {
    pub fn validate(&self) -> Result<()> {
        if self.dehn_k < 1 {
            return Err(Error::Config("dehn_K must be at least 1".into()));
        }
        match &self.epsilon {
            EpsilonMode::Affine { alpha, beta } => {
                if !(*alpha >= 0.0 && *beta >= 0.0) {
                    return Err(Error::Config("affine ε coefficients must be non-negative".into()));
                }
            }
            EpsilonMode::Table { lambdas, cs, values } => {
                let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
                if lambdas.is_empty() || cs.is_empty() || !sorted(lambdas) || !sorted(cs) {
                    return Err(Error::Config("ε table axes must be non-empty and increasing".into()));
                }
                if values.len() != lambdas.len() || values.iter().any(|r| r.len() != cs.len()) {
                    return Err(Error::Config("ε table shape does not match its axes".into()));
                }
                for a in 0..lambdas.len() {
                    for b in 0..cs.len() {
                        let v = values[a][b];
                        if (a > 0 && values[a - 1][b] > v) || (b > 0 && values[a][b - 1] > v) {
                            return Err(Error::Config("ε table must be monotone in both arguments".into()));
                        }
                    }
                }
            }
            EpsilonMode::Empirical { .. } => {}
        }
        Ok(())
    }

    pub fn epsilon_certified(&self) -> bool {
        !matches!(self.epsilon, EpsilonMode::Empirical { .. })
    }

    pub fn l2g_certified(&self) -> bool {
        matches!(self.l2g, L2gMode::Certified { .. })
    }

    pub fn parabolic_distortion_certified(&self) -> bool {
        self.parabolic_distortion.is_some()
    }
}

/// BCP constant `ε(λ, c)`.
pub fn bcp_epsilon(g: &GroupInstance, lambda: f64, c: f64) -> Result<u64> {
    let cert = g.constants()?;
    match &cert.epsilon {
        EpsilonMode::Affine { alpha, beta } => Ok((alpha * lambda + beta * c + alpha + beta).ceil() as u64),
        EpsilonMode::Table { lambdas, cs, values } => {
            let a = lambdas.iter().position(|&x| x >= lambda);
            let b = cs.iter().position(|&x| x >= c);
            match (a, b) {
                (Some(a), Some(b)) => Ok(values[a][b]),
                _ => Err(Error::Unsupported(format!("ε table does not cover ({lambda}, {c})"))),
            }
        }
        EpsilonMode::Empirical { radius, bound } => empirical_epsilon(g, lambda, c, *radius, *bound),
    }
}

/// Twice the largest deviation seen between pairs of `(λ,c)`-quasigeodesic
/// words without backtracking that share endpoints, over all such words of
/// length at most `radius` on the edges of `ball(radius, bound)`.
///
/// Deviation covers clause (i) (vertex of one path to the other path, in
/// `d_X`) and clause (iii) (endpoints of connected components).
pub fn empirical_epsilon(g: &GroupInstance, lambda: f64, c: f64, radius: usize, bound: usize) -> Result<u64> {
    if bound > g.budgets().max_component_bound {
        return Err(Error::budget("component bound", Some(bound as u64)));
    }
    let mut labels: Vec<Letter> = g.alphabet().letters().map(Letter::Gen).collect();
    for (i, o) in g.oracles().iter().enumerate() {
        for (p, d) in o.enumerate(bound) {
            if d > 0 {
                labels.push(Letter::Para { index: i, payload: p });
            }
        }
    }
    // Depth-first enumeration; both properties are inherited by prefixes.
    let mut by_end: HashMap<Element, Vec<RelWord>> = HashMap::new();
    let mut stack: Vec<RelWord> = vec![RelWord::new()];
    let mut count = 0usize;
    while let Some(w) = stack.pop() {
        count += 1;
        if count > g.budgets().max_vertices {
            return Err(Error::budget("empirical ε scan", None));
        }
        if !w.is_empty() {
            by_end.entry(g.element(&w)?).or_default().push(w.clone());
        }
        if w.len() == radius {
            continue;
        }
        for l in labels.iter().rev() {
            let mut v = w.0.clone();
            v.push(l.clone());
            let v = RelWord(v);
            if relcayley::first_violation(g, &v, lambda, c)?.is_none()
                && relcayley::has_backtracking(g, &v)?.is_none()
            {
                stack.push(v);
            }
        }
    }
    let path = |w: &RelWord| -> Vec<Element> {
        let mut out = vec![Element::identity()];
        for l in &w.0 {
            let next = g.mul(out.last().unwrap(), &g.letter_element(l));
            out.push(next);
        }
        out
    };
    let mut worst = 0usize;
    let mut ends: Vec<_> = by_end.into_iter().collect();
    ends.sort();
    for (_, words) in ends {
        let paths: Vec<Vec<Element>> = words.iter().map(path).collect();
        for p in &paths {
            for q in &paths {
                for v in p {
                    let mut best = usize::MAX;
                    for u in q {
                        best = best.min(g.x_length(&g.quotient(v, u))?);
                    }
                    worst = worst.max(best);
                }
            }
        }
        for (wp, pp) in words.iter().zip(&paths) {
            for (wq, pq) in words.iter().zip(&paths) {
                let cp = relcayley::components(g, wp);
                let cq = relcayley::components(g, wq);
                for s in &cp {
                    for t in &cq {
                        if s.index != t.index {
                            continue;
                        }
                        // s and the reversed t are connected in p · q⁻¹.
                        let mid = g.quotient(&pp[s.end], &pq[t.end]);
                        if g.parabolic_payload(s.index, &mid).is_some() {
                            let d1 = g.x_length(&g.quotient(&pp[s.start], &pq[t.start]))?;
                            let d2 = g.x_length(&mid)?;
                            worst = worst.max(d1).max(d2);
                        }
                    }
                }
            }
        }
    }
    Ok((2 * worst).max(1) as u64)
}

/// Local-to-global constants `(L, λ, c)`: every `(L, N, N)`-local
/// quasigeodesic is a `(λ/μ, c)`-quasigeodesic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalToGlobal {
    pub l: u64,
    pub lambda: f64,
    pub c: f64,
    pub certified: bool,
}

pub fn local_to_global(cert: &ConstantsCertificate, n: u64) -> Result<LocalToGlobal> {
    if n < 1 {
        return Err(Error::Contract("local-to-global needs N ≥ 1".into()));
    }
    let nf = n as f64;
    let d = cert.delta as f64;
    let out = match &cert.l2g {
        L2gMode::Formula => {
            let k = 2.0 * nf * (nf + 1.0) + 8.0 * d;
            LocalToGlobal { l: k as u64 + 2, lambda: k, c: k, certified: false }
        }
        L2gMode::Certified { l, lambda, c } => LocalToGlobal {
            l: l.at(nf).ceil() as u64,
            lambda: lambda.at(nf),
            c: c.at(nf),
            certified: true,
        },
    };
    // The word a^k with k = N(N+1)+1 inside one peripheral (or any path
    // through N(N+1)+1 vertices of a bounded set) is locally (N,N) below
    // that length, so smaller windows cannot certify anything.
    if out.l <= n * (n + 1) {
        return Err(Error::Config(format!(
            "local-to-global window L = {} must exceed N(N+1) = {}",
            out.l,
            n * (n + 1)
        )));
    }
    if out.lambda < nf || out.c < nf {
        return Err(Error::Config("local-to-global constants must satisfy λ ≥ N and c ≥ N".into()));
    }
    Ok(out)
}

// ---- ambient groups -----------------------------------------------------------

pub trait Ambient {
    type Elem: Clone + Eq + Hash + Ord + Debug;
    fn identity(&self) -> Self::Elem;
    fn op(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inverse(&self, a: &Self::Elem) -> Self::Elem;
    /// Symmetric generating set defining the ambient word length.
    fn generators(&self) -> Vec<Self::Elem>;
}

impl Ambient for GroupInstance {
    type Elem = Element;
    fn identity(&self) -> Element {
        Element::identity()
    }
    fn op(&self, a: &Element, b: &Element) -> Element {
        self.mul(a, b)
    }
    fn inverse(&self, a: &Element) -> Element {
        self.inv(a)
    }
    fn generators(&self) -> Vec<Element> {
        self.alphabet().letters().map(|x| self.gen_element(x)).collect()
    }
}

impl Ambient for ParabolicOracle {
    type Elem = Payload;
    fn identity(&self) -> Payload {
        ParabolicOracle::identity(self)
    }
    fn op(&self, a: &Payload, b: &Payload) -> Payload {
        self.mul(a, b)
    }
    fn inverse(&self, a: &Payload) -> Payload {
        self.inv(a)
    }
    fn generators(&self) -> Vec<Payload> {
        self.symmetric_images()
    }
}

thread_local! {
    static WORK: std::cell::Cell<u64> = const { std::cell::Cell::new(0) };
}

/// Vertices visited by Cayley-ball searches on this thread so far. Callers
/// that cannot pause a search charge the difference as fuel afterwards.
pub fn work_done() -> u64 {
    WORK.with(|w| w.get())
}

/// Breadth-first ball of the Cayley graph of `⟨gens⟩`, with exact lengths.
pub fn cayley_ball<A: Ambient>(
    amb: &A,
    gens: &[A::Elem],
    radius: usize,
    cap: usize,
) -> Result<Vec<(A::Elem, usize)>> {
    let mut sym: Vec<A::Elem> = Vec::new();
    for s in gens {
        for t in [s.clone(), amb.inverse(s)] {
            if !sym.contains(&t) && t != amb.identity() {
                sym.push(t);
            }
        }
    }
    let mut seen: HashSet<A::Elem> = HashSet::from([amb.identity()]);
    let mut out = vec![(amb.identity(), 0usize)];
    let mut head = 0;
    while head < out.len() {
        let (x, d) = out[head].clone();
        head += 1;
        if d == radius {
            continue;
        }
        for s in &sym {
            let y = amb.op(&x, s);
            if seen.insert(y.clone()) {
                WORK.with(|w| w.set(w.get() + 1));
                if out.len() >= cap {
                    return Err(Error::budget("Cayley ball", Some(d as u64)));
                }
                out.push((y, d + 1));
            }
        }
    }
    Ok(out)
}

/// `|t|_S` for every target, by growing the `S`-ball until all are found.
fn subgroup_lengths<A: Ambient>(
    amb: &A,
    gens: &[A::Elem],
    targets: &HashSet<A::Elem>,
    cap: usize,
) -> Result<HashMap<A::Elem, usize>> {
    let mut found = HashMap::new();
    if targets.is_empty() {
        return Ok(found);
    }
    let mut radius = 1;
    loop {
        let ball = cayley_ball(amb, gens, radius, cap)?;
        let exhausted = ball.iter().all(|(_, d)| *d < radius);
        for (e, d) in &ball {
            if targets.contains(e) {
                found.insert(e.clone(), *d);
            }
        }
        if found.len() == targets.len() {
            return Ok(found);
        }
        if exhausted {
            return Err(Error::Contract("distortion target is not in the subgroup".into()));
        }
        radius *= 2;
    }
}

/// Monotone table of `Dist(n)` for `n = 0..len`, each entry exact or an upper bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistortionTable {
    entries: Vec<u64>,
    exact: Vec<bool>,
}

impl DistortionTable {
    pub fn new(entries: Vec<u64>, exact: Vec<bool>) -> Result<Self> {
        if entries.len() != exact.len() {
            return Err(Error::Contract("distortion table flags do not match entries".into()));
        }
        if entries.first().is_some_and(|&e| e != 0) {
            return Err(Error::Contract("distortion table must start at 0".into()));
        }
        if entries.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Contract("distortion table must be monotone".into()));
        }
        Ok(DistortionTable { entries, exact })
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn exact(&self) -> &[bool] {
        &self.exact
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Value at `n`; past the end the table has no information.
    pub fn get(&self, n: usize) -> Option<u64> {
        self.entries.get(n).copied()
    }
}

/// Exact `Dist_{(A,gens)}^{(H,ygens)}(n)` for `n = 0..=upto`, where `H`
/// is decided by `member`.
pub fn distortion_table_from_membership<A: Ambient>(
    amb: &A,
    ygens: &[A::Elem],
    mut member: impl FnMut(&A::Elem) -> Result<bool>,
    upto: usize,
    cap: usize,
) -> Result<DistortionTable> {
    let ball = cayley_ball(amb, &amb.generators(), upto, cap)?;
    let mut in_h: Vec<(A::Elem, usize)> = Vec::new();
    for (e, d) in ball {
        if member(&e)? {
            in_h.push((e, d));
        }
    }
    let targets: HashSet<A::Elem> = in_h.iter().map(|(e, _)| e.clone()).collect();
    let lengths = subgroup_lengths(amb, ygens, &targets, cap)?;
    let mut entries = vec![0u64; upto + 1];
    for (e, d) in &in_h {
        let y = lengths[e] as u64;
        entries[*d] = entries[*d].max(y);
    }
    for n in 1..=upto {
        entries[n] = entries[n].max(entries[n - 1]);
    }
    DistortionTable::new(entries, vec![true; upto + 1])
}

pub fn distortion_from_membership<A: Ambient>(
    amb: &A,
    ygens: &[A::Elem],
    member: impl FnMut(&A::Elem) -> Result<bool>,
    n: usize,
    cap: usize,
) -> Result<u64> {
    Ok(distortion_table_from_membership(amb, ygens, member, n, cap)?.entries[n])
}

/// Decides `w ∈ ⟨ygens⟩` given `dist`, a valid upper bound for the
/// distortion of that subgroup: `w` lies in it iff some `ygens`-word of length
/// at most `dist(|w|)` equals `w`.
pub fn membership_from_distortion<A: Ambient>(
    amb: &A,
    w: &A::Elem,
    w_len: usize,
    ygens: &[A::Elem],
    dist: impl Fn(usize) -> Result<u64>,
    cap: usize,
) -> Result<bool> {
    let radius = dist(w_len)? as usize;
    Ok(cayley_ball(amb, ygens, radius, cap)?.iter().any(|(e, _)| e == w))
}

// ---- parabolic distortion -------------------------------------------------------

fn affine_coefficients(g: &GroupInstance, i: usize) -> Result<(u64, u64)> {
    let cert = g.constants()?;
    match &cert.parabolic_distortion {
        Some(v) => v
            .get(i)
            .copied()
            .ok_or_else(|| Error::Config(format!("no distortion coefficients for peripheral {}", i + 1))),
        None => {
            let longest = g.relators().iter().map(RelWord::len).max().unwrap_or(1).max(1) as u64;
            Ok((cert.dehn_k * longest, 0))
        }
    }
}

/// Upper bound for `Dist_{(G,X)}^{(P_i,X_i)}(n)` together with whether it is exact.
pub fn parabolic_distortion(g: &GroupInstance, i: usize, n: usize) -> Result<(u64, bool)> {
    g.oracle(i)?;
    let (a, b) = affine_coefficients(g, i)?;
    let affine = a * n as u64 + if n == 0 { 0 } else { b };
    if g.native().is_some() && n <= g.budgets().exact_distortion_radius {
        let exact = exact_parabolic_distortion(g, i, n)?;
        if exact <= affine {
            return Ok((exact, true));
        }
    }
    Ok((affine, n == 0))
}

/// `max{|p|_{X_i} : p ∈ P_i, |p|_X ≤ n}` from the `X`-ball of `G`.
pub fn exact_parabolic_distortion(g: &GroupInstance, i: usize, n: usize) -> Result<u64> {
    let mut best = 0u64;
    for (e, _) in g.x_ball(n)? {
        if let Some(p) = g.parabolic_payload(i, &e) {
            best = best.max(g.oracles()[i].length(&p)? as u64);
        }
    }
    Ok(best)
}

/// `Some(p)` when `w` represents `p ∈ P_i`.
pub fn parabolic_membership(g: &GroupInstance, i: usize, w: &RelWord) -> Result<Option<Payload>> {
    match g.native() {
        Some(_) => Ok(g.parabolic_payload(i, &g.element(w)?)),
        None => parabolic_membership_via_distortion(g, i, w),
    }
}

/// Membership in `P_i` through the distortion of `P_i`: `w ∈ P_i` iff
/// some `X_i`-word of length at most `Dist(|w|_X)` equals `w` in `G`.
pub fn parabolic_membership_via_distortion(g: &GroupInstance, i: usize, w: &RelWord) -> Result<Option<Payload>> {
    let o = g.oracle(i)?;
    let len = g.word_x_length(w)?;
    let (bound, _) = parabolic_distortion(g, i, len)?;
    for (p, _) in o.enumerate_capped(bound as usize, g.budgets().max_vertices)? {
        let letter = if o.is_identity(&p) {
            RelWord::new()
        } else {
            RelWord(vec![Letter::Para { index: i, payload: p.clone() }])
        };
        if g.element_equal(w, &letter)? {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

// ---- O1 and O2 -------------------------------------------------------------------

/// The generators `g s g⁻¹ ∈ P_i` of `O^{g⁻¹}` as payloads.
pub fn conjugated_payloads(
    g: &GroupInstance,
    conj: &[GenId],
    i: usize,
    s_words: &[YWord],
    sub: &SubgroupSpec,
) -> Result<Vec<Payload>> {
    let ge = g.element_of_gens(conj)?;
    s_words
        .iter()
        .map(|s| {
            let se = g.element_of_gens(&sub.to_x_word(s))?;
            g.parabolic_payload(i, &g.conjugate(&ge, &se)).ok_or_else(|| {
                Error::Contract(format!(
                    "generator {} does not lie in P{}^g",
                    sub.format_yword(g.alphabet(), s),
                    i + 1
                ))
            })
        })
        .collect()
}

/// `(Dist_{(P_i,X_i)}^{(O^{g⁻¹},S^{g⁻¹})} ∘ Dist_{(G,X)}^{(P_i,X_i)})(n + 2|g|)`,
/// an upper bound for `Dist_{(G,X)}^{(O,S)}(n)`.
pub fn o_distortion_bound(g: &GroupInstance, conj: &[GenId], i: usize, payloads: &[Payload], n: usize) -> Result<u64> {
    let o = g.oracle(i)?;
    if o.is_finite_elems(payloads) && payloads.iter().all(|p| o.is_identity(p)) {
        return Ok(0);
    }
    let (m, _) = parabolic_distortion(g, i, n + 2 * conj.len())?;
    let member = o.member_fn(payloads);
    distortion_from_membership(
        o,
        payloads,
        |p| Ok(member(p)),
        m as usize,
        g.budgets().max_vertices,
    )
}

/// Upper bound for `Dist_{(G,X)}^{(O,Y)}(n)`:
/// `max|s|_Y · Dist^{(O^{g⁻¹},S^{g⁻¹})}_{P_i}(Dist_G^{P_i}(n + 2|g|))`.
pub fn o1_bound(
    g: &GroupInstance,
    conj: &[GenId],
    i: usize,
    s_words: &[YWord],
    sub: &SubgroupSpec,
    n: usize,
) -> Result<u64> {
    let payloads = conjugated_payloads(g, conj, i, s_words, sub)?;
    let max_s = s_words.iter().map(|s| s.len() as u64).max().unwrap_or(0);
    Ok(max_s * o_distortion_bound(g, conj, i, &payloads, n)?)
}

/// Whether the `X`-word `w` represents an element of `O = ⟨S⟩ ≤ P_i^g`,
/// searching `S`-words up to the distortion bound of `O`.
pub fn o2_membership(
    g: &GroupInstance,
    w: &[GenId],
    conj: &[GenId],
    i: usize,
    s_words: &[YWord],
    sub: &SubgroupSpec,
) -> Result<bool> {
    let target = g.element_of_gens(w)?;
    if target.is_identity() {
        return Ok(true);
    }
    let payloads = conjugated_payloads(g, conj, i, s_words, sub)?;
    let s_elems: Vec<Element> = s_words
        .iter()
        .map(|s| g.element_of_gens(&sub.to_x_word(s)))
        .collect::<Result<_>>()?;
    membership_from_distortion(
        g,
        &target,
        w.len(),
        &s_elems,
        |k| o_distortion_bound(g, conj, i, &payloads, k),
        g.budgets().max_vertices,
    )
}

/// Exact `Dist_{(G,X)}^{(H,Y)}` table using `member` for `H`.
pub fn subgroup_distortion_table(
    g: &GroupInstance,
    sub: &SubgroupSpec,
    member: impl FnMut(&Element) -> Result<bool>,
    upto: usize,
) -> Result<DistortionTable> {
    let ygens: Vec<Element> = sub
        .gens()
        .iter()
        .map(|y| g.element_of_gens(y))
        .collect::<Result<_>>()?;
    distortion_table_from_membership(g, &ygens, member, upto, g.budgets().max_vertices)
}

/// Memo of parabolic-distortion values keyed by `(i, n)`.
#[derive(Clone, Debug, Default)]
pub struct DistortionCache(BTreeMap<(usize, usize), (u64, bool)>);

impl DistortionCache {
    pub fn parabolic(&mut self, g: &GroupInstance, i: usize, n: usize) -> Result<(u64, bool)> {
        if let Some(v) = self.0.get(&(i, n)) {
            return Ok(*v);
        }
        let v = parabolic_distortion(g, i, n)?;
        self.0.insert((i, n), v);
        Ok(v)
    }
}
