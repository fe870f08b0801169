//! The dovetailed semi-algorithm: candidate enumeration, per-candidate
//! partial runs of steps 1 to 5, and fuel-bounded round-robin scheduling.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Element, GroupInstance, SubgroupSpec, YWord};
use crate::metrics::{bcp_epsilon, local_to_global, work_done};
use crate::structures::{
    compute_nu, embedding_constants, DCache, enumerate_short_o_letters, initial_n, mu, nu_parameters, refine_structure,
    CandidateEntry, Counterexample, EmbeddingConstants, GeodesicScan, PeripheralCandidate, Poll,
    Ticker, Witness, WitnessScan,
};
use crate::words::GenId;

/// Tick accounting. Runs draw from a per-slice allowance; sub-computations
/// that cannot pause cleanly draw only from the total.
#[derive(Clone, Debug)]
pub struct Fuel {
    total: u64,
    consumed: u64,
    slice: u64,
    left_in_slice: u64,
}

impl Fuel {
    pub fn new(total: u64, slice: u64) -> Self {
        Fuel { total, consumed: 0, slice: slice.max(1), left_in_slice: 0 }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    pub fn is_exhausted(&self) -> bool {
        self.consumed >= self.total
    }

    /// Refills the per-slice allowance.
    pub fn open_slice(&mut self) {
        self.left_in_slice = self.slice;
    }

    pub fn sliced(&mut self) -> impl Ticker + '_ {
        Sliced(self)
    }

    pub fn atomic(&mut self) -> impl Ticker + '_ {
        Atomic(self)
    }

    /// Charges `cost` ticks of work already done against the total; `false`
    /// (with the total used up) when it does not fit.
    pub fn charge(&mut self, cost: u64) -> bool {
        let left = self.total - self.consumed.min(self.total);
        self.left_in_slice = self.left_in_slice.saturating_sub(cost);
        if cost > left {
            self.consumed = self.total;
            return false;
        }
        self.consumed += cost;
        true
    }
}

struct Sliced<'a>(&'a mut Fuel);

impl Ticker for Sliced<'_> {
    fn tick(&mut self) -> bool {
        let f = &mut *self.0;
        if f.consumed >= f.total || f.left_in_slice == 0 {
            return false;
        }
        f.consumed += 1;
        f.left_in_slice -= 1;
        true
    }
}

struct Atomic<'a>(&'a mut Fuel);

impl Ticker for Atomic<'_> {
    fn tick(&mut self) -> bool {
        let f = &mut *self.0;
        if f.consumed >= f.total {
            return false;
        }
        f.consumed += 1;
        f.left_in_slice = f.left_in_slice.saturating_sub(1);
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Standard,
    Constructive,
}

/// Progress events, in schedule order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    CandidateStarted { candidate: usize, entries: usize },
    Constants { candidate: usize, n: u64, l: u64, d: u64, witness_bound: u64 },
    StepThreePassed { candidate: usize, n: u64, scanned: usize },
    Escalated { candidate: usize, n: u64 },
    Refined { candidate: usize, entries: usize },
    Rejected { candidate: usize },
    Stalled { candidate: usize, reason: String },
    Accepted { candidate: usize },
}

/// Every constant behind an Accept, with certification flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub delta: u64,
    pub dehn_k: u64,
    pub mu: u64,
    pub n: u64,
    pub l: u64,
    pub big_c: f64,
    pub d: u64,
    pub lambda: f64,
    pub c: f64,
    pub epsilon: u64,
    pub epsilon_nu: u64,
    pub nu: u64,
    pub witness_bound: u64,
    pub words_tested: u64,
    pub escalations: u64,
    pub refinements: u64,
    pub epsilon_certified: bool,
    pub l2g_certified: bool,
    pub parabolic_distortion_certified: bool,
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Acceptance {
    pub candidate_index: usize,
    /// The structure after step 5.
    pub structure: PeripheralCandidate,
    /// The structure that passed steps 3 and 4.
    pub tested: PeripheralCandidate,
    pub lambda: f64,
    pub c: f64,
    pub nu: u64,
    pub evidence: Evidence,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunResult {
    Accepted(Box<Acceptance>),
    Rejected(Witness),
    /// A hard budget was hit; the run is abandoned.
    Stalled(Error),
}

enum RunState {
    Constants,
    Witness(WitnessScan),
    Letters,
    Geodesics(GeodesicScan),
    Finish,
    Done(RunResult),
}

/// Steps 1 to 5 on one candidate, resumable at tick granularity.
pub struct PartialRun {
    index: usize,
    mode: Mode,
    candidate: PeripheralCandidate,
    n: u64,
    consts: Option<EmbeddingConstants>,
    state: RunState,
    escalations: u64,
    refinements: u64,
    words_tested: u64,
    slices: u64,
    last_counterexample: Option<Counterexample>,
}

impl PartialRun {
    pub fn new(index: usize, candidate: PeripheralCandidate, sub: &SubgroupSpec, mode: Mode) -> Self {
        let n = initial_n(mu(&candidate, sub));
        PartialRun {
            index,
            mode,
            candidate,
            n,
            consts: None,
            state: RunState::Constants,
            escalations: 0,
            refinements: 0,
            words_tested: 0,
            slices: 0,
            last_counterexample: None,
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn candidate(&self) -> &PeripheralCandidate {
        &self.candidate
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn slices(&self) -> u64 {
        self.slices
    }

    pub fn escalations(&self) -> u64 {
        self.escalations
    }

    pub fn last_counterexample(&self) -> Option<&Counterexample> {
        self.last_counterexample.as_ref()
    }

    pub fn result(&self) -> Option<&RunResult> {
        match &self.state {
            RunState::Done(r) => Some(r),
            _ => None,
        }
    }

    pub fn phase(&self) -> &'static str {
        match &self.state {
            RunState::Constants => "step2",
            RunState::Witness(_) => "step3",
            RunState::Letters | RunState::Geodesics(_) => "step4",
            RunState::Finish => "step5",
            RunState::Done(RunResult::Accepted(_)) => "accepted",
            RunState::Done(RunResult::Rejected(_)) => "rejected",
            RunState::Done(RunResult::Stalled(_)) => "stalled",
        }
    }

    /// Runs one slice. Budget errors end the run as `Stalled`; other errors
    /// propagate.
    pub fn run_slice(
        &mut self,
        g: &GroupInstance,
        sub: &SubgroupSpec,
        fuel: &mut Fuel,
        d_cache: &mut DCache,
        events: &mut Vec<Event>,
    ) -> Result<()> {
        if matches!(self.state, RunState::Done(_)) {
            return Ok(());
        }
        self.slices += 1;
        fuel.open_slice();
        if let Err(e) = self.advance(g, sub, fuel, d_cache, events) {
            if !e.is_budget() {
                return Err(e);
            }
            events.push(Event::Stalled { candidate: self.index, reason: e.to_string() });
            self.state = RunState::Done(RunResult::Stalled(e));
        }
        Ok(())
    }

    fn advance(
        &mut self,
        g: &GroupInstance,
        sub: &SubgroupSpec,
        fuel: &mut Fuel,
        d_cache: &mut DCache,
        events: &mut Vec<Event>,
    ) -> Result<()> {
        loop {
            match &mut self.state {
                RunState::Done(_) => return Ok(()),
                RunState::Constants => {
                    // Computing D cannot pause: it costs one tick plus every
                    // vertex its searches visit, charged afterwards.
                    if !fuel.sliced().tick() {
                        return Ok(());
                    }
                    let before = work_done();
                    let k = embedding_constants(g, sub, &self.candidate, self.n, d_cache);
                    if !fuel.charge(work_done() - before) {
                        return Ok(());
                    }
                    let k = k?;
                    events.push(Event::Constants {
                        candidate: self.index,
                        n: k.n,
                        l: k.l,
                        d: k.d,
                        witness_bound: k.witness_bound,
                    });
                    self.state = RunState::Witness(WitnessScan::new(k.witness_bound));
                    self.consts = Some(k);
                }
                RunState::Witness(scan) => match scan.resume(g, sub, &self.candidate, &mut fuel.sliced())? {
                    Poll::Pending => return Ok(()),
                    Poll::Ready(None) => {
                        events.push(Event::StepThreePassed { candidate: self.index, n: self.n, scanned: scan.examined() });
                        self.state = RunState::Letters;
                    }
                    Poll::Ready(Some(w)) => match self.mode {
                        Mode::Standard => {
                            events.push(Event::Rejected { candidate: self.index });
                            self.state = RunState::Done(RunResult::Rejected(w));
                        }
                        Mode::Constructive => {
                            self.candidate = refine_structure(g, sub, &self.candidate, &w)?;
                            self.refinements += 1;
                            self.n = self.n.max(initial_n(mu(&self.candidate, sub)));
                            events.push(Event::Refined { candidate: self.index, entries: self.candidate.len() });
                            self.state = RunState::Constants;
                        }
                    },
                },
                RunState::Letters => {
                    let k = self.consts.as_ref().expect("constants precede step 4");
                    let mut letters = Vec::new();
                    for j in 0..self.candidate.len() {
                        // Restarted from scratch if fuel runs out, which ends the search anyway.
                        match enumerate_short_o_letters(g, sub, &self.candidate, j, k.d as usize, &mut fuel.atomic())? {
                            Poll::Ready(v) => letters.extend(v),
                            Poll::Pending => return Ok(()),
                        }
                    }
                    let scan = GeodesicScan::new(g, sub, &self.candidate, &letters, k.l, k.big_c, k.big_c)?;
                    self.state = RunState::Geodesics(scan);
                }
                RunState::Geodesics(scan) => {
                    let before = scan.tested();
                    let r = scan.resume(g, &mut fuel.sliced())?;
                    self.words_tested += scan.tested() - before;
                    match r {
                        Poll::Pending => return Ok(()),
                        Poll::Ready(None) => self.state = RunState::Finish,
                        Poll::Ready(Some(ce)) => {
                            self.last_counterexample = Some(ce);
                            self.n += 1;
                            self.escalations += 1;
                            events.push(Event::Escalated { candidate: self.index, n: self.n });
                            self.state = RunState::Constants;
                        }
                    }
                }
                RunState::Finish => {
                    if !fuel.sliced().tick() {
                        return Ok(());
                    }
                    let acc = self.finish(g, sub)?;
                    events.push(Event::Accepted { candidate: self.index });
                    self.state = RunState::Done(RunResult::Accepted(Box::new(acc)));
                }
            }
        }
    }

    fn finish(&self, g: &GroupInstance, sub: &SubgroupSpec) -> Result<Acceptance> {
        let k = self.consts.as_ref().expect("constants precede step 5");
        let cert = g.constants()?;
        let (a, b) = nu_parameters(k.mu, k.lambda, k.c);
        let epsilon_nu = bcp_epsilon(g, a, b)?;
        let nu = compute_nu(epsilon_nu, k.mu as u64);
        let pd = cert.parabolic_distortion_certified() || self.candidate.is_empty();
        let evidence = Evidence {
            delta: cert.delta,
            dehn_k: cert.dehn_k,
            mu: k.mu as u64,
            n: k.n,
            l: k.l,
            big_c: k.big_c,
            d: k.d,
            lambda: k.lambda,
            c: k.c,
            epsilon: k.epsilon,
            epsilon_nu,
            nu,
            witness_bound: k.witness_bound,
            words_tested: self.words_tested,
            escalations: self.escalations,
            refinements: self.refinements,
            epsilon_certified: k.epsilon_certified,
            l2g_certified: k.l2g_certified,
            parabolic_distortion_certified: pd,
            certified: k.epsilon_certified && k.l2g_certified && pd,
        };
        Ok(Acceptance {
            candidate_index: self.index,
            structure: drop_finite_peripherals(g, sub, &self.candidate)?,
            tested: self.candidate.clone(),
            lambda: k.lambda,
            c: k.c,
            nu,
            evidence,
        })
    }
}

/// Step 5: removes entries whose `O_j` is finite.
pub fn drop_finite_peripherals(
    g: &GroupInstance,
    sub: &SubgroupSpec,
    candidate: &PeripheralCandidate,
) -> Result<PeripheralCandidate> {
    let mut keep = Vec::new();
    for e in candidate.entries() {
        let payloads = crate::metrics::conjugated_payloads(g, &e.conjugator, e.peripheral, &e.gens, sub)?;
        if !g.oracle(e.peripheral)?.is_finite_elems(&payloads) {
            keep.push(e.clone());
        }
    }
    PeripheralCandidate::new(g, sub, keep)
}

/// A triple `(h, g, i)` with `1 ≠ g h g⁻¹ ∈ P_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triple {
    pub h: YWord,
    pub g: Vec<GenId>,
    pub i: usize,
}

/// Next reduced word of the same length in lexicographic order, over letters
/// `0..n` paired by `x ↔ x ^ 1`.
fn next_reduced(w: &mut [u32], n: u32) -> bool {
    let len = w.len();
    let mut i = len;
    while i > 0 {
        i -= 1;
        let mut x = w[i] + 1;
        while x < n && i > 0 && x == w[i - 1] ^ 1 {
            x += 1;
        }
        if x < n {
            w[i] = x;
            for k in i + 1..len {
                w[k] = (w[k - 1] == 1) as u32;
            }
            return true;
        }
    }
    false
}

/// Dovetailed search for triples `(h, g, i)`, by total length `|h| + |g|`,
/// then `h`, then `g`, then `i`.
pub struct TripleEnumerator {
    y_letters: u32,
    x_letters: u32,
    peripherals: usize,
    total: usize,
    hw: Vec<u32>,
    gw: Vec<u32>,
    i: usize,
    seen: HashSet<(usize, Vec<GenId>, Element)>,
    triples: Vec<Triple>,
}

impl TripleEnumerator {
    pub fn new(g: &GroupInstance, sub: &SubgroupSpec) -> Self {
        TripleEnumerator {
            y_letters: 2 * sub.gens().len() as u32,
            x_letters: g.alphabet().len() as u32,
            peripherals: g.num_peripherals(),
            total: 1,
            hw: vec![0],
            gw: vec![],
            i: 0,
            seen: HashSet::new(),
            triples: Vec::new(),
        }
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    /// No triple can ever be found.
    pub fn is_finished(&self) -> bool {
        self.peripherals == 0
    }

    fn advance(&mut self) {
        self.i += 1;
        if self.i < self.peripherals {
            return;
        }
        self.i = 0;
        if next_reduced(&mut self.gw, self.x_letters) {
            return;
        }
        if !next_reduced(&mut self.hw, self.y_letters) {
            if self.hw.len() == self.total {
                self.total += 1;
                self.hw = vec![0; 1];
            } else {
                self.hw = vec![0; self.hw.len() + 1];
            }
        }
        self.gw = vec![0; self.total - self.hw.len()];
    }

    pub fn resume(&mut self, g: &GroupInstance, sub: &SubgroupSpec, ticker: &mut dyn Ticker) -> Result<()> {
        if self.is_finished() {
            return Ok(());
        }
        while ticker.tick() {
            let h: YWord = self.hw.iter().map(|&y| crate::group::YLetter(y)).collect();
            let gword: Vec<GenId> = self.gw.iter().map(|&x| GenId(x)).collect();
            let i = self.i;
            self.advance();
            let he = g.element_of_gens(&sub.to_x_word(&h))?;
            if he.is_identity() {
                continue;
            }
            let ge = g.element_of_gens(&gword)?;
            if g.parabolic_payload(i, &g.conjugate(&ge, &he)).is_some() && self.seen.insert((i, gword.clone(), he)) {
                self.triples.push(Triple { h, g: gword, i });
            }
        }
        Ok(())
    }

    /// Candidate number `k`: the triples at the set bits of `k`, grouped into
    /// entries by `(i, g)` in order of first appearance. `None` until enough
    /// triples are known.
    pub fn candidate(&self, g: &GroupInstance, sub: &SubgroupSpec, k: u64) -> Result<Option<PeripheralCandidate>> {
        let needed = 64 - k.leading_zeros() as usize;
        if needed > self.triples.len() {
            return Ok(None);
        }
        let mut entries: Vec<CandidateEntry> = Vec::new();
        for (b, t) in self.triples.iter().enumerate().take(needed) {
            if k >> b & 1 == 0 {
                continue;
            }
            match entries.iter_mut().find(|e| e.peripheral == t.i && e.conjugator == t.g) {
                Some(e) => e.gens.push(t.h.clone()),
                None => entries.push(CandidateEntry { peripheral: t.i, conjugator: t.g.clone(), gens: vec![t.h.clone()] }),
            }
        }
        PeripheralCandidate::new(g, sub, entries).map(Some)
    }
}

#[derive(Clone, Debug)]
pub struct DetectConfig {
    pub fuel: u64,
    pub slice: u64,
    pub mode: Mode,
}

impl DetectConfig {
    pub fn new(fuel: u64) -> Self {
        DetectConfig { fuel, slice: DEFAULT_SLICE, mode: Mode::Standard }
    }
}

pub const DEFAULT_SLICE: u64 = 2_000;

/// State of one run when the search stopped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub candidate: usize,
    pub entries: usize,
    pub phase: String,
    pub n: u64,
    pub slices: u64,
    pub escalations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub candidates_explored: usize,
    pub triples_found: usize,
    /// No further candidate can appear and every run has ended.
    pub search_exhausted: bool,
    pub runs: Vec<RunSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DetectorOutcome {
    Accept(Box<Acceptance>),
    OutOfFuel(Snapshot),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectReport {
    pub outcome: DetectorOutcome,
    pub fuel_consumed: u64,
    pub events: Vec<Event>,
}

/// Checks that the instance can run steps 1 and 2 at all, before spending fuel.
pub fn preflight(g: &GroupInstance, sub: &SubgroupSpec) -> Result<()> {
    let cert = g.constants()?;
    cert.validate()?;
    for y in sub.gens() {
        if !y.iter().all(|&x| g.alphabet().contains(x)) {
            return Err(Error::Config("subgroup generator outside X".into()));
        }
    }
    local_to_global(cert, initial_n(sub.max_gen_len().max(1)))?;
    Ok(())
}

fn snapshot(enumerator: &TripleEnumerator, runs: &[PartialRun], next: u64) -> Snapshot {
    Snapshot {
        candidates_explored: runs.len(),
        triples_found: enumerator.triples().len(),
        search_exhausted: enumerator.is_finished() && next >= 1 << enumerator.triples().len().min(63) && runs.iter().all(|r| r.result().is_some()),
        runs: runs
            .iter()
            .map(|r| RunSummary {
                candidate: r.index(),
                entries: r.candidate().len(),
                phase: r.phase().to_string(),
                n: r.n(),
                slices: r.slices(),
                escalations: r.escalations(),
            })
            .collect(),
    }
}

/// Round-robin dovetailing. Each round gives the triple search one slice,
/// admits at most one new candidate, then gives every live run one slice in
/// admission order. The first Accept in schedule order wins.
pub fn detect(g: &GroupInstance, sub: &SubgroupSpec, cfg: &DetectConfig) -> Result<DetectReport> {
    preflight(g, sub)?;
    let mut fuel = Fuel::new(cfg.fuel, cfg.slice);
    let mut events = Vec::new();
    let mut enumerator = TripleEnumerator::new(g, sub);
    let mut runs: Vec<PartialRun> = Vec::new();
    let mut d_cache = DCache::new();
    let mut next: u64 = 0;
    loop {
        if fuel.is_exhausted() {
            break;
        }
        if next < 1 << 62 {
            if let Some(c) = enumerator.candidate(g, sub, next)? {
                events.push(Event::CandidateStarted { candidate: runs.len(), entries: c.len() });
                runs.push(PartialRun::new(runs.len(), c, sub, cfg.mode));
                next += 1;
            }
        }
        for r in runs.iter_mut() {
            if r.result().is_some() {
                continue;
            }
            r.run_slice(g, sub, &mut fuel, &mut d_cache, &mut events)?;
            if let Some(RunResult::Accepted(acc)) = r.result() {
                return Ok(DetectReport {
                    outcome: DetectorOutcome::Accept(acc.clone()),
                    fuel_consumed: fuel.consumed(),
                    events,
                });
            }
        }
        let before = fuel.consumed();
        fuel.open_slice();
        enumerator.resume(g, sub, &mut fuel.sliced())?;
        let idle = runs.iter().all(|r| r.result().is_some()) && fuel.consumed() == before;
        if idle && enumerator.candidate(g, sub, next)?.is_none() {
            break;
        }
    }
    Ok(DetectReport {
        outcome: DetectorOutcome::OutOfFuel(snapshot(&enumerator, &runs, next)),
        fuel_consumed: fuel.consumed(),
        events,
    })
}

/// Steps 1 to 5 on a single user-supplied candidate.
pub fn check_candidate(
    g: &GroupInstance,
    sub: &SubgroupSpec,
    candidate: PeripheralCandidate,
    fuel: u64,
    mode: Mode,
) -> Result<(Option<RunResult>, PartialRun, u64, Vec<Event>)> {
    preflight(g, sub)?;
    let mut f = Fuel::new(fuel, fuel);
    let mut events = vec![Event::CandidateStarted { candidate: 0, entries: candidate.len() }];
    let mut run = PartialRun::new(0, candidate, sub, mode);
    run.run_slice(g, sub, &mut f, &mut DCache::new(), &mut events)?;
    Ok((run.result().cloned(), run, f.consumed(), events))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::group::YLetter;

    fn sub(g: &GroupInstance, s: &str) -> SubgroupSpec {
        SubgroupSpec::parse(g.alphabet(), s).unwrap()
    }

    #[test]
    fn reduced_word_enumeration_counts() {
        for (n, len, want) in [(4u32, 1usize, 4usize), (4, 2, 12), (4, 3, 36), (6, 2, 30), (2, 3, 2)] {
            let mut w = vec![0u32; len];
            let mut count = 1;
            let mut prev = w.clone();
            while next_reduced(&mut w, n) {
                assert!(w > prev);
                assert!(w.windows(2).all(|p| p[1] != p[0] ^ 1));
                prev = w.clone();
                count += 1;
            }
            assert_eq!(count, want);
        }
        assert!(!next_reduced(&mut [], 4));
    }

    #[test]
    fn fuel_accounting() {
        let mut f = Fuel::new(5, 2);
        f.open_slice();
        assert!(f.sliced().tick());
        assert!(f.sliced().tick());
        assert!(!f.sliced().tick());
        assert!(f.atomic().tick());
        assert_eq!(f.consumed(), 3);
        f.open_slice();
        assert!(f.sliced().tick());
        assert!(f.sliced().tick());
        assert!(!f.atomic().tick());
        assert!(f.is_exhausted());
    }

    #[test]
    fn triple_enumeration_examples() {
        let g = fixtures::fprod();
        let s = sub(&g, "a1,b");
        let mut e = TripleEnumerator::new(&g, &s);
        struct Budget(u32);
        impl Ticker for Budget {
            fn tick(&mut self) -> bool {
                self.0 = self.0.saturating_sub(1);
                self.0 > 0
            }
        }
        e.resume(&g, &s, &mut Budget(40)).unwrap();
        let t = &e.triples()[0];
        assert_eq!((t.h.clone(), t.g.clone(), t.i), (vec![YLetter(0)], vec![], 0));
        assert!(e.triples().iter().all(|t| !t.h.contains(&YLetter(2)) || t.h.len() > 1));
        let c0 = e.candidate(&g, &s, 0).unwrap().unwrap();
        assert!(c0.is_empty());
        let c1 = e.candidate(&g, &s, 1).unwrap().unwrap();
        assert_eq!(c1.entries(), &[CandidateEntry { peripheral: 0, conjugator: vec![], gens: vec![vec![YLetter(0)]] }]);
    }

    #[test]
    fn drop_finite_examples() {
        let g = fixtures::fprod();
        let s = sub(&g, "a1,b");
        let c = PeripheralCandidate::new(
            &g,
            &s,
            vec![
                CandidateEntry { peripheral: 0, conjugator: vec![], gens: vec![] },
                CandidateEntry { peripheral: 0, conjugator: vec![], gens: vec![vec![YLetter(0)]] },
            ],
        )
        .unwrap();
        let d = drop_finite_peripherals(&g, &s, &c).unwrap();
        assert_eq!(d.entries(), &c.entries()[1..]);
    }

    #[test]
    fn free_factor_accepts_with_empty_structure() {
        let g = fixtures::fprod();
        let s = sub(&g, "b");
        let r = detect(&g, &s, &DetectConfig::new(1_000_000)).unwrap();
        match r.outcome {
            DetectorOutcome::Accept(acc) => {
                assert!(acc.structure.is_empty());
                assert_eq!(acc.evidence.mu, 1);
                assert!(acc.nu >= acc.evidence.mu);
            }
            other => panic!("expected Accept, got {other:?}"),
        }
    }

    #[test]
    fn tiny_fuel_runs_out_with_a_snapshot() {
        let g = fixtures::fprod();
        let s = sub(&g, "b");
        let mut cfg = DetectConfig::new(10);
        cfg.slice = 3;
        let r = detect(&g, &s, &cfg).unwrap();
        match r.outcome {
            DetectorOutcome::OutOfFuel(snap) => assert!(snap.candidates_explored >= 1),
            other => panic!("expected OutOfFuel, got {other:?}"),
        }
        assert_eq!(r.fuel_consumed, 10);
    }

    #[test]
    fn remark_candidate_rejected_in_standard_mode() {
        let g = fixtures::fprod();
        let s = sub(&g, "a1,a2,b");
        let c = PeripheralCandidate::new(
            &g,
            &s,
            vec![CandidateEntry { peripheral: 0, conjugator: vec![], gens: vec![vec![YLetter(0), YLetter(0)], vec![YLetter(2)]] }],
        )
        .unwrap();
        let (r, _, _, _) = check_candidate(&g, &s, c, 1_000_000, Mode::Standard).unwrap();
        match r {
            Some(RunResult::Rejected(w)) => assert_eq!(w.h, vec![YLetter(0)]),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn missing_constants_fail_before_any_tick() {
        let mut cfg = crate::config::InstanceConfig::from_json(fixtures::FPROD_JSON).unwrap();
        cfg.constants = None;
        let g = cfg.build(|_| None).unwrap();
        let s = sub(&g, "b");
        assert!(matches!(detect(&g, &s, &DetectConfig::new(100)), Err(Error::Unsupported(_))));
    }
}
