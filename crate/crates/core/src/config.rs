//! JSON instance configs and peripheral-structure files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Budgets, GroupInstance, NativeWordProblem, SubgroupSpec, YLetter, YWord};
use crate::metrics::ConstantsCertificate;
use crate::parabolics::{Backend, ParabolicOracle, Payload};
use crate::words::Alphabet;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    /// Base generator names; inverses are written `x^-1`.
    pub generators: Vec<String>,
    /// Relators of the relative presentation, as words over `X ∪ 𝒫`.
    #[serde(default)]
    pub relators: Vec<String>,
    #[serde(default)]
    pub parabolics: Vec<ParabolicConfig>,
    pub constants: Option<ConstantsCertificate>,
    #[serde(default)]
    pub native_word_problem: Option<String>,
    #[serde(default)]
    pub budgets: BudgetConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParabolicConfig {
    pub backend: BackendConfig,
    pub generators: Vec<GeneratorImage>,
    /// Relators of `P_i` over its generators (checked against the backend).
    #[serde(default)]
    pub relators: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    FreeAbelian { rank: usize },
    Free { rank: usize },
    Finite { table: Vec<Vec<u32>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorImage {
    pub name: String,
    /// FreeAbelian: a vector; Free: a reduced word of signed basis indices;
    /// Finite: a single element id.
    pub image: Vec<i64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub max_ball_radius: Option<usize>,
    pub max_component_bound: Option<usize>,
    pub max_vertices: Option<usize>,
    pub exact_distortion_radius: Option<usize>,
    pub default_fuel: Option<u64>,
}

impl BudgetConfig {
    /// Config values over defaults, then `RELQC_BUDGET_*` overrides from `env`.
    pub fn resolve(&self, env: impl Fn(&str) -> Option<String>) -> Result<Budgets> {
        let d = Budgets::default();
        let pick = |name: &str, cfg: Option<usize>, def: usize| -> Result<usize> {
            match env(&format!("RELQC_BUDGET_{name}")) {
                Some(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("RELQC_BUDGET_{name} is not a number: {v:?}"))),
                None => Ok(cfg.unwrap_or(def)),
            }
        };
        Ok(Budgets {
            max_ball_radius: pick("MAX_BALL_RADIUS", self.max_ball_radius, d.max_ball_radius)?,
            max_component_bound: pick("MAX_COMPONENT_BOUND", self.max_component_bound, d.max_component_bound)?,
            max_vertices: pick("MAX_VERTICES", self.max_vertices, d.max_vertices)?,
            exact_distortion_radius: pick(
                "EXACT_DISTORTION_RADIUS",
                self.exact_distortion_radius,
                d.exact_distortion_radius,
            )?,
            default_fuel: pick("DEFAULT_FUEL", self.default_fuel.map(|f| f as usize), d.default_fuel as usize)?
                as u64,
        })
    }
}

fn backend_payload(backend: &Backend, image: &[i64]) -> Result<Payload> {
    let p = match backend {
        Backend::FreeAbelian { .. } => Payload::Vector(image.to_vec()),
        Backend::Free { .. } => Payload::Word(image.iter().map(|&x| x as i32).collect()),
        Backend::Finite { .. } => match image {
            [e] if *e >= 0 => Payload::Element(*e as u32),
            _ => return Err(Error::Config("finite image must be one element id".into())),
        },
    };
    backend.validate(&p).map_err(|e| Error::Config(e.to_string()))?;
    Ok(p)
}

impl InstanceConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: InstanceConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn build(&self, env: impl Fn(&str) -> Option<String>) -> Result<GroupInstance> {
        let alphabet = Alphabet::new(self.generators.iter().cloned()).map_err(cfg_err)?;
        let mut oracles = Vec::new();
        for (i, pc) in self.parabolics.iter().enumerate() {
            let backend = match &pc.backend {
                BackendConfig::FreeAbelian { rank } => Backend::FreeAbelian { rank: *rank },
                BackendConfig::Free { rank } => Backend::Free { rank: *rank },
                BackendConfig::Finite { table } => Backend::finite(table.clone()).map_err(cfg_err)?,
            };
            let mut gens = Vec::new();
            for gi in &pc.generators {
                let id = alphabet
                    .lookup(&gi.name)
                    .map_err(|_| Error::Config(format!("peripheral {} names unknown generator {:?}", i + 1, gi.name)))?;
                if id.is_inverse() {
                    return Err(Error::Config("peripheral generators must be positive letters".into()));
                }
                gens.push((id.base(), backend_payload(&backend, &gi.image)?));
            }
            let rels = pc
                .relators
                .iter()
                .map(|r| alphabet.parse_word(r))
                .collect::<Result<Vec<_>>>()
                .map_err(cfg_err)?;
            oracles.push(ParabolicOracle::new(backend, gens, rels).map_err(cfg_err)?);
        }
        let native = match self.native_word_problem.as_deref() {
            None => None,
            Some("free_product") => Some(NativeWordProblem::FreeProduct),
            Some(other) => return Err(Error::Config(format!("unknown native_word_problem {other:?}"))),
        };
        if let Some(c) = &self.constants {
            c.validate()?;
            if let Some(pd) = &c.parabolic_distortion {
                if pd.len() != oracles.len() {
                    return Err(Error::Config("parabolic_distortion needs one entry per peripheral".into()));
                }
            }
        }
        let budgets = self.budgets.resolve(env)?;
        // Relators may mention parabolic letters, so parse them against a
        // relator-free instance first.
        let shell = GroupInstance::new(alphabet.clone(), vec![], oracles.clone(), None, None, budgets.clone())
            .map_err(cfg_err)?;
        let relators = self
            .relators
            .iter()
            .map(|r| shell.parse_relword(r))
            .collect::<Result<Vec<_>>>()
            .map_err(cfg_err)?;
        GroupInstance::new(alphabet, relators, oracles, self.constants.clone(), native, budgets).map_err(cfg_err)
    }
}

fn cfg_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

/// A user-supplied peripheral structure for a fixed subgroup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConfig {
    pub schema_version: u32,
    pub entries: Vec<StructureEntryConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureEntryConfig {
    /// 1-based peripheral index.
    pub peripheral: usize,
    /// Conjugator `g_j` as an `X`-word (`""` or `"1"` for the identity).
    #[serde(default)]
    pub conjugator: String,
    /// Generators of `O_j` as `Y`-words: tokens `y<k>` / `y<k>^-1`, or the
    /// name of a single-letter subgroup generator.
    pub generators: Vec<String>,
}

impl StructureConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: StructureConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if s.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported schema_version {}", s.schema_version)));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Parses a `Y`-word such as `y1 y1 y2^-1` (or `a1 a1 a2` when those are
/// single-letter generators of the subgroup).
pub fn parse_yword(g: &GroupInstance, sub: &SubgroupSpec, text: &str) -> Result<YWord> {
    let text = text.trim();
    if text.is_empty() || text == "1" {
        return Ok(Vec::new());
    }
    text.split_whitespace()
        .map(|tok| {
            let (stem, inv) = match tok.strip_suffix("^-1").or_else(|| tok.strip_suffix("⁻¹")) {
                Some(s) => (s, true),
                None => (tok, false),
            };
            let idx = if let Some(k) = stem.strip_prefix('y').and_then(|k| k.parse::<usize>().ok()) {
                if k == 0 || k > sub.gens().len() {
                    return Err(Error::Malformed(format!("no subgroup generator {tok}")));
                }
                k - 1
            } else {
                let x = g.alphabet().lookup(stem)?;
                sub.gens()
                    .iter()
                    .position(|y| y.as_slice() == [x])
                    .ok_or_else(|| Error::Malformed(format!("{tok} is not a subgroup generator")))?
            };
            Ok(YLetter((idx as u32) << 1 | inv as u32))
        })
        .collect()
}
