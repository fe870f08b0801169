//! The `relqc` command line: detection, single-candidate checks and the
//! brute-force helpers, with JSON result documents.

use std::collections::HashSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{parse_yword, InstanceConfig, StructureConfig, SCHEMA_VERSION};
use crate::detector::{
    check_candidate, detect, DetectConfig, DetectorOutcome, Evidence, Mode, RunResult, Snapshot, DEFAULT_SLICE,
};
use crate::error::{Error, Result};
use crate::group::{Element, GroupInstance, SubgroupSpec, YWord};
use crate::metrics::subgroup_distortion_table;
use crate::relcayley::{ball, relative_length};
use crate::structures::{CandidateEntry, PeripheralCandidate, Witness};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_OUT_OF_FUEL: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "relqc", version, about = "Relative quasiconvexity detection at desk scale")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for an induced peripheral structure and certify quasiconvexity.
    Detect {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        subgroup: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run steps 1 to 5 on one user-supplied peripheral structure.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        subgroup: String,
        #[arg(long)]
        structure: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Distortion table of a subgroup.
    Dist {
        #[command(flatten)]
        common: Common,
        #[arg(long, alias = "subgroup")]
        sub: String,
        #[arg(long)]
        upto: usize,
        /// Y-radius for enumerating the subgroup when it is not parabolic.
        #[arg(long, default_value_t = 8)]
        h_radius: usize,
    },
    /// Layer sizes of the truncated relative Cayley ball.
    Ball {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        radius: usize,
        #[arg(long)]
        component_bound: usize,
    },
    /// Relative length of a word over `X ∪ 𝒫`.
    Rellen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        word: String,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    group: PathBuf,
    /// Write the JSON result document here.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    max_ball_radius: Option<usize>,
    #[arg(long)]
    max_component_bound: Option<usize>,
    #[arg(long)]
    max_vertices: Option<usize>,
    #[arg(long)]
    exact_distortion_radius: Option<usize>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    fuel: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_SLICE)]
    slice: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Standard)]
    mode: ModeArg,
    /// Print progress events to standard error.
    #[arg(long)]
    events: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Standard,
    Constructive,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Standard => Mode::Standard,
            ModeArg::Constructive => Mode::Constructive,
        }
    }
}

/// One entry of a peripheral structure, in printable form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryDoc {
    /// 1-based.
    pub peripheral: usize,
    pub conjugator: String,
    /// Generators as `X`-words.
    pub generators: Vec<String>,
    /// The same generators as `Y`-words (`y1 y2^-1 …`).
    pub generators_y: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessDoc {
    pub j: usize,
    pub k: usize,
    pub h: String,
    pub h_y: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingDoc {
    /// Deterministic work measure; wall-clock time goes to standard error.
    pub ticks: u64,
}

/// The machine-readable result of every command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub input_hash: String,
    pub outcome: String,
    pub certified: Option<bool>,
    pub lambda: Option<f64>,
    pub c: Option<f64>,
    pub nu: Option<u64>,
    pub evidence: Option<Evidence>,
    pub structure: Option<Vec<EntryDoc>>,
    pub witness: Option<WitnessDoc>,
    pub snapshot: Option<Snapshot>,
    pub table: Option<Vec<serde_json::Value>>,
    pub value: Option<u64>,
    pub message: Option<String>,
    pub fuel_total: Option<u64>,
    pub fuel_consumed: Option<u64>,
    pub timing: TimingDoc,
}

impl ResultDocument {
    fn new(command: &str, input_hash: String, outcome: &str) -> Self {
        ResultDocument {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.into(),
            input_hash,
            outcome: outcome.into(),
            certified: None,
            lambda: None,
            c: None,
            nu: None,
            evidence: None,
            structure: None,
            witness: None,
            snapshot: None,
            table: None,
            value: None,
            message: None,
            fuel_total: None,
            fuel_consumed: None,
            timing: TimingDoc { ticks: 0 },
        }
    }

    /// Pretty JSON with keys sorted at every level.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("document serializes");
        let mut s = serde_json::to_string_pretty(&sort_keys(v)).expect("value serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))
    }
}

fn sort_keys(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Object(m) => {
            let mut entries: Vec<(String, Value)> = m.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sort_keys(v))).collect())
        }
        Value::Array(a) => Value::Array(a.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

fn format_yword_tokens(w: &YWord) -> String {
    if w.is_empty() {
        return "1".into();
    }
    w.iter()
        .map(|y| format!("y{}{}", y.index() + 1, if y.is_inverse() { "^-1" } else { "" }))
        .collect::<Vec<_>>()
        .join(" ")
}

fn format_x(g: &GroupInstance, w: &[crate::words::GenId]) -> String {
    if w.is_empty() {
        "1".into()
    } else {
        g.alphabet().format_word(w)
    }
}

pub fn structure_doc(g: &GroupInstance, sub: &SubgroupSpec, c: &PeripheralCandidate) -> Vec<EntryDoc> {
    c.entries()
        .iter()
        .map(|e| EntryDoc {
            peripheral: e.peripheral + 1,
            conjugator: format_x(g, &e.conjugator),
            generators: e.gens.iter().map(|y| format_x(g, &sub.to_x_word(y))).collect(),
            generators_y: e.gens.iter().map(format_yword_tokens).collect(),
        })
        .collect()
}

fn witness_doc(g: &GroupInstance, sub: &SubgroupSpec, w: &Witness) -> WitnessDoc {
    WitnessDoc {
        j: w.j + 1,
        k: w.k + 1,
        h: format_x(g, &sub.to_x_word(&w.h)),
        h_y: format_yword_tokens(&w.h),
    }
}

/// Builds a candidate from a structure file, validating every generator.
pub fn load_structure(g: &GroupInstance, sub: &SubgroupSpec, s: &StructureConfig) -> Result<PeripheralCandidate> {
    let mut entries = Vec::new();
    for e in &s.entries {
        if e.peripheral == 0 || e.peripheral > g.num_peripherals() {
            return Err(Error::Config(format!("no peripheral subgroup P{}", e.peripheral)));
        }
        let conj = e.conjugator.trim();
        let conjugator = if conj.is_empty() || conj == "1" { vec![] } else { g.alphabet().parse_word(conj)? };
        let gens = e.generators.iter().map(|t| parse_yword(g, sub, t)).collect::<Result<Vec<_>>>()?;
        entries.push(CandidateEntry { peripheral: e.peripheral - 1, conjugator, gens });
    }
    PeripheralCandidate::new(g, sub, entries).map_err(|e| Error::Config(format!("invalid structure: {e}")))
}

fn hash_inputs(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn load_group(common: &Common, env: &dyn Fn(&str) -> Option<String>) -> Result<(GroupInstance, String)> {
    let text = read(&common.group)?;
    let cfg = InstanceConfig::from_json(&text)?;
    let mut g = cfg.build(env)?;
    let mut b = g.budgets().clone();
    if let Some(v) = common.max_ball_radius {
        b.max_ball_radius = v;
    }
    if let Some(v) = common.max_component_bound {
        b.max_component_bound = v;
    }
    if let Some(v) = common.max_vertices {
        b.max_vertices = v;
    }
    if let Some(v) = common.exact_distortion_radius {
        b.exact_distortion_radius = v;
    }
    g.set_budgets(b);
    Ok((g, text))
}

fn fill_accept(doc: &mut ResultDocument, g: &GroupInstance, sub: &SubgroupSpec, acc: &crate::detector::Acceptance) {
    doc.certified = Some(acc.evidence.certified);
    doc.lambda = Some(acc.lambda);
    doc.c = Some(acc.c);
    doc.nu = Some(acc.nu);
    doc.evidence = Some(acc.evidence.clone());
    doc.structure = Some(structure_doc(g, sub, &acc.structure));
}

/// The one-line human summary printed after `detect` and `check`.
pub fn summary_line(doc: &ResultDocument) -> String {
    match doc.outcome.as_str() {
        "accept" => {
            let ev = doc.evidence.as_ref().expect("accept carries evidence");
            let status = if ev.certified {
                "certified".to_string()
            } else {
                let mut bad = Vec::new();
                if !ev.epsilon_certified {
                    bad.push("epsilon");
                }
                if !ev.l2g_certified {
                    bad.push("local-to-global");
                }
                if !ev.parabolic_distortion_certified {
                    bad.push("parabolic distortion");
                }
                format!("NON-CERTIFIED ({})", bad.join(", "))
            };
            let s = doc.structure.as_ref().map(|s| s.len()).unwrap_or(0);
            format!(
                "accept [{status}]: {s} peripheral entr{}, lambda = {}, c = {}, nu = {}",
                if s == 1 { "y" } else { "ies" },
                ev.lambda,
                ev.c,
                ev.nu
            )
        }
        "rejected" => {
            let w = doc.witness.as_ref().expect("rejection carries a witness");
            format!("rejected: witness h = {} for entries ({}, {})", w.h, w.j, w.k)
        }
        "out_of_fuel" => format!(
            "out of fuel after {} ticks ({} candidates explored)",
            doc.fuel_consumed.unwrap_or(0),
            doc.snapshot.as_ref().map(|s| s.candidates_explored).unwrap_or(0)
        ),
        other => format!("{other}: {}", doc.message.clone().unwrap_or_default()),
    }
}

fn exit_for(e: &Error) -> i32 {
    if e.is_budget() {
        EXIT_BUDGET
    } else {
        EXIT_CONFIG
    }
}

/// Runs the CLI on `args`; returns the process exit code.
pub fn run(
    args: impl IntoIterator<Item = impl Into<OsString> + Clone>,
    out: &mut dyn Write,
    err: &mut dyn Write,
    env: &dyn Fn(&str) -> Option<String>,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_CONFIG;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    let started = std::time::Instant::now();
    let (json_path, result) = match &cli.command {
        Command::Detect { common, .. }
        | Command::Check { common, .. }
        | Command::Dist { common, .. }
        | Command::Ball { common, .. }
        | Command::Rellen { common, .. } => (common.json.clone(), execute(&cli.command, env, err)),
    };
    let (code, doc) = match result {
        Ok(pair) => pair,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_for(&e);
        }
    };
    let _ = writeln!(out, "{}", summary_line(&doc));
    let _ = writeln!(err, "elapsed: {:.3}s", started.elapsed().as_secs_f64());
    if let Some(p) = json_path {
        if let Err(e) = std::fs::write(&p, doc.to_json()) {
            let _ = writeln!(err, "error: cannot write {}: {e}", p.display());
            return EXIT_CONFIG;
        }
    }
    code
}

fn execute(cmd: &Command, env: &dyn Fn(&str) -> Option<String>, err: &mut dyn Write) -> Result<(i32, ResultDocument)> {
    match cmd {
        Command::Detect { common, subgroup, run } => {
            let (g, text) = load_group(common, env)?;
            let sub = SubgroupSpec::parse(g.alphabet(), subgroup).map_err(|e| Error::Config(e.to_string()))?;
            let fuel = run.fuel.unwrap_or(g.budgets().default_fuel);
            let mode: Mode = run.mode.into();
            let hash = hash_inputs(&[
                b"detect",
                text.as_bytes(),
                subgroup.as_bytes(),
                &fuel.to_le_bytes(),
                &run.slice.to_le_bytes(),
                format!("{mode:?}").as_bytes(),
            ]);
            let cfg = DetectConfig { fuel, slice: run.slice, mode };
            let report = detect(&g, &sub, &cfg)?;
            if run.events {
                for e in &report.events {
                    let _ = writeln!(err, "{}", serde_json::to_string(e).expect("event serializes"));
                }
            }
            let (code, mut doc) = match &report.outcome {
                DetectorOutcome::Accept(acc) => {
                    let mut doc = ResultDocument::new("detect", hash, "accept");
                    fill_accept(&mut doc, &g, &sub, acc);
                    (EXIT_OK, doc)
                }
                DetectorOutcome::OutOfFuel(snap) => {
                    let mut doc = ResultDocument::new("detect", hash, "out_of_fuel");
                    doc.snapshot = Some(snap.clone());
                    (EXIT_OUT_OF_FUEL, doc)
                }
            };
            doc.fuel_total = Some(fuel);
            doc.fuel_consumed = Some(report.fuel_consumed);
            doc.timing.ticks = report.fuel_consumed;
            Ok((code, doc))
        }
        Command::Check { common, subgroup, structure, run } => {
            let (g, text) = load_group(common, env)?;
            let sub = SubgroupSpec::parse(g.alphabet(), subgroup).map_err(|e| Error::Config(e.to_string()))?;
            let stext = read(structure)?;
            let scfg = StructureConfig::from_json(&stext)?;
            let cand = load_structure(&g, &sub, &scfg)?;
            let fuel = run.fuel.unwrap_or(g.budgets().default_fuel);
            let mode: Mode = run.mode.into();
            let hash = hash_inputs(&[
                b"check",
                text.as_bytes(),
                subgroup.as_bytes(),
                stext.as_bytes(),
                &fuel.to_le_bytes(),
                format!("{mode:?}").as_bytes(),
            ]);
            let (res, partial, consumed, events) = check_candidate(&g, &sub, cand, fuel, mode)?;
            if run.events {
                for e in &events {
                    let _ = writeln!(err, "{}", serde_json::to_string(e).expect("event serializes"));
                }
            }
            let (code, mut doc) = match res {
                Some(RunResult::Accepted(acc)) => {
                    let mut doc = ResultDocument::new("check", hash, "accept");
                    fill_accept(&mut doc, &g, &sub, &acc);
                    (EXIT_OK, doc)
                }
                Some(RunResult::Rejected(w)) => {
                    let mut doc = ResultDocument::new("check", hash, "rejected");
                    doc.witness = Some(witness_doc(&g, &sub, &w));
                    doc.structure = Some(structure_doc(&g, &sub, partial.candidate()));
                    (EXIT_OK, doc)
                }
                Some(RunResult::Stalled(e)) => {
                    let mut doc = ResultDocument::new("check", hash, "budget_exceeded");
                    doc.message = Some(e.to_string());
                    (EXIT_BUDGET, doc)
                }
                None => {
                    let mut doc = ResultDocument::new("check", hash, "out_of_fuel");
                    doc.snapshot = Some(Snapshot {
                        candidates_explored: 1,
                        triples_found: 0,
                        search_exhausted: false,
                        runs: vec![crate::detector::RunSummary {
                            candidate: 0,
                            entries: partial.candidate().len(),
                            phase: partial.phase().to_string(),
                            n: partial.n(),
                            slices: partial.slices(),
                            escalations: partial.escalations(),
                        }],
                    });
                    (EXIT_OUT_OF_FUEL, doc)
                }
            };
            doc.fuel_total = Some(fuel);
            doc.fuel_consumed = Some(consumed);
            doc.timing.ticks = consumed;
            Ok((code, doc))
        }
        Command::Dist { common, sub, upto, h_radius } => {
            let (g, text) = load_group(common, env)?;
            let s = SubgroupSpec::parse(g.alphabet(), sub).map_err(|e| Error::Config(e.to_string()))?;
            let hash = hash_inputs(&[b"dist", text.as_bytes(), sub.as_bytes(), &upto.to_le_bytes()]);
            let (table, exact) = match dist_table(&g, &s, *upto, *h_radius) {
                Ok(t) => t,
                Err(e) if e.is_budget() => {
                    let mut doc = ResultDocument::new("dist", hash, "budget_exceeded");
                    doc.message = Some(e.to_string());
                    return Ok((EXIT_BUDGET, doc));
                }
                Err(e) => return Err(e),
            };
            let mut doc = ResultDocument::new("dist", hash, "ok");
            doc.table = Some(
                table
                    .iter()
                    .enumerate()
                    .map(|(n, d)| serde_json::json!({ "n": n, "dist": d, "exact": exact }))
                    .collect(),
            );
            doc.message = Some(table.iter().map(u64::to_string).collect::<Vec<_>>().join(","));
            Ok((EXIT_OK, doc))
        }
        Command::Ball { common, radius, component_bound } => {
            let (g, text) = load_group(common, env)?;
            let hash = hash_inputs(&[b"ball", text.as_bytes(), &radius.to_le_bytes(), &component_bound.to_le_bytes()]);
            let b = match ball(&g, *radius, *component_bound) {
                Ok(b) => b,
                Err(e) if e.is_budget() => {
                    let mut doc = ResultDocument::new("ball", hash, "budget_exceeded");
                    doc.message = Some(e.to_string());
                    return Ok((EXIT_BUDGET, doc));
                }
                Err(e) => return Err(e),
            };
            let mut layers = vec![0u64; radius + 1];
            for k in 0..b.len() {
                layers[b.distance_at(k)] += 1;
            }
            let mut doc = ResultDocument::new("ball", hash, "ok");
            doc.value = Some(b.len() as u64);
            doc.table = Some(
                layers
                    .iter()
                    .enumerate()
                    .map(|(r, n)| serde_json::json!({ "radius": r, "vertices": n }))
                    .collect(),
            );
            doc.message = Some(format!("{} vertices", b.len()));
            Ok((EXIT_OK, doc))
        }
        Command::Rellen { common, word } => {
            let (g, text) = load_group(common, env)?;
            let hash = hash_inputs(&[b"rellen", text.as_bytes(), word.as_bytes()]);
            let w = g.parse_relword(word).map_err(|e| Error::Config(e.to_string()))?;
            let n = relative_length(&g, &w)?;
            let mut doc = ResultDocument::new("rellen", hash, "ok");
            doc.value = Some(n as u64);
            doc.message = Some(n.to_string());
            Ok((EXIT_OK, doc))
        }
    }
}

/// Distortion of `sub` in `G`. Exact when every generator lies in one
/// peripheral subgroup (membership through its backend); otherwise membership
/// comes from enumerating `sub` to `Y`-length `h_radius` and the table is a
/// lower bound.
pub fn dist_table(g: &GroupInstance, sub: &SubgroupSpec, upto: usize, h_radius: usize) -> Result<(Vec<u64>, bool)> {
    let gens: Vec<Element> = sub.gens().iter().map(|y| g.element_of_gens(y)).collect::<Result<_>>()?;
    let parabolic = (0..g.num_peripherals()).find(|&i| gens.iter().all(|e| g.parabolic_payload(i, e).is_some()));
    if let Some(i) = parabolic {
        let o = g.oracle(i)?;
        let payloads: Vec<_> = gens.iter().map(|e| g.parabolic_payload(i, e).expect("checked")).collect();
        let member = o.member_fn(&payloads);
        let t = subgroup_distortion_table(g, sub, |e| Ok(g.parabolic_payload(i, e).is_some_and(|p| member(&p))), upto)?;
        return Ok((t.entries().to_vec(), true));
    }
    let mut h: HashSet<Element> = HashSet::from([Element::identity()]);
    let mut layer = vec![Element::identity()];
    let sym: Vec<Element> = gens.iter().flat_map(|e| [e.clone(), g.inv(e)]).collect();
    for _ in 0..h_radius {
        let mut next = Vec::new();
        for e in &layer {
            for s in &sym {
                let f = g.mul(e, s);
                if h.insert(f.clone()) {
                    if h.len() > g.budgets().max_vertices {
                        return Err(Error::budget("subgroup enumeration", None));
                    }
                    next.push(f);
                }
            }
        }
        layer = next;
    }
    let t = subgroup_distortion_table(g, sub, |e| Ok(h.contains(e)), upto)?;
    Ok((t.entries().to_vec(), false))
}
