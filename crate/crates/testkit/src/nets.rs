//! The shared fixture networks, embedded from the repository's fixtures
//! directory so library tests and CLI tests read the same text.

pub const REV: &str = include_str!("../../../fixtures/rev.net");
pub const SIS: &str = include_str!("../../../fixtures/sis.net");
pub const SIR: &str = include_str!("../../../fixtures/sir.net");
pub const MM: &str = include_str!("../../../fixtures/mm.net");
pub const RMM: &str = include_str!("../../../fixtures/rmm.net");
pub const CASCADE: &str = include_str!("../../../fixtures/cascade.net");
pub const LKV: &str = include_str!("../../../fixtures/lkv.net");
pub const HIS: &str = include_str!("../../../fixtures/his.net");
pub const ERG: &str = include_str!("../../../fixtures/erg.net");
pub const PCC: &str = include_str!("../../../fixtures/pcc.net");

/// All fixtures by short name.
pub const ALL: &[(&str, &str)] = &[
    ("rev", REV),
    ("sis", SIS),
    ("sir", SIR),
    ("mm", MM),
    ("rmm", RMM),
    ("cascade", CASCADE),
    ("lkv", LKV),
    ("his", HIS),
    ("erg", ERG),
    ("pcc", PCC),
];
