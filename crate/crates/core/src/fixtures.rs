//! The shipped instances, embedded from `fixtures/*.json`.

use crate::config::InstanceConfig;
use crate::group::GroupInstance;
use crate::metrics::ConstantsCertificate;

pub const FREE_JSON: &str = include_str!("../fixtures/inst_free.json");
pub const CYC_JSON: &str = include_str!("../fixtures/inst_cyc.json");
pub const FPROD_JSON: &str = include_str!("../fixtures/inst_fprod.json");
pub const REMARK_STRUCTURE_JSON: &str = include_str!("../fixtures/remark_structure.json");
pub const INDUCED_STRUCTURE_JSON: &str = include_str!("../fixtures/induced_structure.json");

fn load(text: &str, constants: Option<ConstantsCertificate>) -> GroupInstance {
    let mut cfg = InstanceConfig::from_json(text).expect("shipped fixture parses");
    if constants.is_some() {
        cfg.constants = constants;
    }
    cfg.build(|_| None).expect("shipped fixture builds")
}

/// `F(a, b)` with empty peripheral structure.
pub fn free() -> GroupInstance {
    load(FREE_JSON, None)
}

/// `F(a, b)` relative to `⟨a⟩`.
pub fn cyc() -> GroupInstance {
    load(CYC_JSON, None)
}

/// `ℤ² ∗ ℤ = ⟨a1, a2, b | [a1, a2]⟩` relative to `⟨a1, a2⟩`.
pub fn fprod() -> GroupInstance {
    load(FPROD_JSON, None)
}

pub fn free_with_constants(c: ConstantsCertificate) -> GroupInstance {
    load(FREE_JSON, Some(c))
}

pub fn fprod_with_constants(c: ConstantsCertificate) -> GroupInstance {
    load(FPROD_JSON, Some(c))
}
