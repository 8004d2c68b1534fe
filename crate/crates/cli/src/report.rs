//! Report schemas and renderers. Text reports tag every species and
//! constraint with a color word (green for upper bounds, red for lower
//! bounds, blue for equalities, gray for unconstrained entries); json
//! reports follow a stable schema with sorted keys; dot reports draw the
//! reaction graph with the same colors on nodes and edges.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use srn_order_core::linalg::ConservationBasis;
use srn_order_core::network::ReactionNetwork;
use srn_order_core::order::{PreorderingStructure, RateConstraint, Side, SpeciesTag};
use srn_order_core::search::SearchReport;

pub fn tag_word(tag: SpeciesTag) -> &'static str {
    match tag {
        SpeciesTag::Eq => "eq",
        SpeciesTag::Geq => "geq",
        SpeciesTag::Leq => "leq",
        SpeciesTag::Uncompared => "uncompared",
    }
}

pub fn tag_color(tag: SpeciesTag) -> &'static str {
    match tag {
        SpeciesTag::Eq => "blue",
        SpeciesTag::Geq => "red",
        SpeciesTag::Leq => "green",
        SpeciesTag::Uncompared => "gray",
    }
}

pub fn constraint_word(c: RateConstraint) -> &'static str {
    match c {
        RateConstraint::Le => "le",
        RateConstraint::Ge => "ge",
        RateConstraint::Eq => "eq",
        RateConstraint::Free => "free",
    }
}

pub fn constraint_color(c: RateConstraint) -> &'static str {
    match c {
        RateConstraint::Le => "green",
        RateConstraint::Ge => "red",
        RateConstraint::Eq => "blue",
        RateConstraint::Free => "gray",
    }
}

#[derive(Serialize)]
pub struct NetworkJson {
    species: Vec<String>,
    reactions: Vec<String>,
    conservation: Vec<Vec<i64>>,
}

pub fn network_json(net: &ReactionNetwork, cons: &ConservationBasis) -> NetworkJson {
    NetworkJson {
        species: net.species.iter().map(|s| s.name.clone()).collect(),
        reactions: net.reactions.iter().map(|r| r.label.clone()).collect(),
        conservation: cons.c.clone(),
    }
}

#[derive(Serialize)]
pub struct StructureJson {
    matrix: Vec<Vec<i64>>,
    closure: Vec<String>,
    species: BTreeMap<String, SpeciesTag>,
    reactions: BTreeMap<String, RateConstraint>,
}

pub fn structure_json(net: &ReactionNetwork, s: &PreorderingStructure) -> StructureJson {
    StructureJson {
        matrix: s.canonical_m.clone(),
        closure: s
            .closure
            .iter()
            .map(|u| {
                let sign = if u.negated { '-' } else { '+' };
                format!("{sign}{}", net.species[u.species].name)
            })
            .collect(),
        species: net
            .species
            .iter()
            .zip(&s.species_tags)
            .map(|(sp, &t)| (sp.name.clone(), t))
            .collect(),
        reactions: net
            .reactions
            .iter()
            .zip(&s.reaction_constraints)
            .map(|(r, &c)| (r.label.clone(), c))
            .collect(),
    }
}

#[derive(Serialize)]
pub struct StatsJson {
    pub candidates: u64,
    pub lp_queries: u64,
    pub cache_hits: u64,
}

#[derive(Serialize)]
pub struct SearchJson {
    network: NetworkJson,
    structures: Vec<StructureJson>,
    equivalence_structures: Vec<StructureJson>,
    stats: StatsJson,
}

#[derive(Serialize)]
pub struct InvalidJson {
    pub reaction: String,
    pub side: String,
}

#[derive(Serialize)]
pub struct CheckJson {
    network: NetworkJson,
    input_matrix: Vec<Vec<i64>>,
    canonicalized: bool,
    matrix: Vec<Vec<i64>>,
    outcome: &'static str,
    structure: Option<StructureJson>,
    invalid: Option<InvalidJson>,
}

fn pretty(value: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

fn row_text(row: &[i64]) -> String {
    let parts: Vec<String> = row.iter().map(|v| v.to_string()).collect();
    parts.join(" ")
}

fn structure_text(net: &ReactionNetwork, s: &PreorderingStructure, out: &mut String) {
    if s.canonical_m.is_empty() {
        out.push_str("  matrix | (empty)\n");
    }
    for row in &s.canonical_m {
        let _ = writeln!(out, "  matrix | {}", row_text(row));
    }
    for (sp, &tag) in net.species.iter().zip(&s.species_tags) {
        let _ = writeln!(out, "  {}: {} [{}]", sp.name, tag_word(tag), tag_color(tag));
    }
    for (r, &c) in net.reactions.iter().zip(&s.reaction_constraints) {
        let _ = writeln!(
            out,
            "  {}: {} [{}]",
            r.label,
            constraint_word(c),
            constraint_color(c)
        );
    }
}

fn count_phrase(n: usize, noun: &str) -> String {
    if n == 1 {
        format!("1 {noun}")
    } else {
        format!("{n} {noun}s")
    }
}

pub fn render_search_text(net: &ReactionNetwork, report: &SearchReport) -> String {
    let mut out = count_phrase(report.structures.len(), "structure");
    if !report.equivalence_structures.is_empty() {
        let _ = write!(
            out,
            ", {}",
            count_phrase(report.equivalence_structures.len(), "equivalence structure")
        );
    }
    out.push('\n');
    for (i, s) in report.structures.iter().enumerate() {
        let _ = writeln!(out, "\nstructure {}", i + 1);
        structure_text(net, s, &mut out);
    }
    for (i, s) in report.equivalence_structures.iter().enumerate() {
        let _ = writeln!(out, "\nequivalence structure {}", i + 1);
        structure_text(net, s, &mut out);
    }
    let _ = writeln!(
        out,
        "\ncandidates {}, lp solves {}, cache hits {}",
        report.counts.candidates, report.counts.lp_queries, report.counts.cache_hits
    );
    out
}

pub fn render_search_json(
    net: &ReactionNetwork,
    cons: &ConservationBasis,
    report: &SearchReport,
) -> String {
    pretty(&SearchJson {
        network: network_json(net, cons),
        structures: report
            .structures
            .iter()
            .map(|s| structure_json(net, s))
            .collect(),
        equivalence_structures: report
            .equivalence_structures
            .iter()
            .map(|s| structure_json(net, s))
            .collect(),
        stats: StatsJson {
            candidates: report.counts.candidates,
            lp_queries: report.counts.lp_queries,
            cache_hits: report.counts.cache_hits,
        },
    })
}

pub struct CheckRendering<'a> {
    pub net: &'a ReactionNetwork,
    pub cons: &'a ConservationBasis,
    pub input_matrix: &'a [Vec<i64>],
    pub canonicalized: bool,
    pub matrix: &'a [Vec<i64>],
    pub structure: Option<&'a PreorderingStructure>,
    pub invalid: Option<(String, Side)>,
}

pub fn render_check_text(c: &CheckRendering) -> String {
    let mut out = String::new();
    let label = if c.canonicalized {
        "matrix (canonical form)"
    } else {
        "matrix (as given)"
    };
    let _ = writeln!(out, "{label}");
    if c.matrix.is_empty() {
        out.push_str("  | (empty)\n");
    }
    for row in c.matrix {
        let _ = writeln!(out, "  | {}", row_text(row));
    }
    match (&c.structure, &c.invalid) {
        (Some(s), _) => {
            out.push_str("valid: the preorder is preserved under these constraints\n");
            structure_text(c.net, s, &mut out);
        }
        (None, Some((label, side))) => {
            let _ = writeln!(out, "invalid: reaction {label} fails on side {side}");
        }
        (None, None) => unreachable!("check rendering carries an outcome"),
    }
    out
}

pub fn render_check_json(c: &CheckRendering) -> String {
    pretty(&CheckJson {
        network: network_json(c.net, c.cons),
        input_matrix: c.input_matrix.to_vec(),
        canonicalized: c.canonicalized,
        matrix: c.matrix.to_vec(),
        outcome: if c.structure.is_some() {
            "valid"
        } else {
            "invalid"
        },
        structure: c.structure.map(|s| structure_json(c.net, s)),
        invalid: c.invalid.as_ref().map(|(reaction, side)| InvalidJson {
            reaction: reaction.clone(),
            side: side.to_string(),
        }),
    })
}

/// One digraph per structure: species nodes colored by tag, one point
/// node per reaction with its in/out edges colored by the constraint.
pub fn render_structure_dot(
    net: &ReactionNetwork,
    name: &str,
    tags: &[SpeciesTag],
    constraints: Option<&[RateConstraint]>,
    comment: Option<&str>,
) -> String {
    let mut out = String::new();
    if let Some(c) = comment {
        let _ = writeln!(out, "// {c}");
    }
    let _ = writeln!(out, "digraph {name} {{");
    out.push_str("  rankdir=LR;\n");
    for (sp, &tag) in net.species.iter().zip(tags) {
        let _ = writeln!(out, "  \"{}\" [color={}];", sp.name, tag_color(tag));
    }
    for (i, r) in net.reactions.iter().enumerate() {
        let color = constraints
            .map(|cs| constraint_color(cs[i]))
            .unwrap_or("gray");
        let _ = writeln!(out, "  \"r{i}\" [shape=point, color={color}];");
        for (j, &coef) in r.source.coefficients.iter().enumerate() {
            if coef > 0 {
                let label = if coef > 1 {
                    format!(", label=\"{coef}\"")
                } else {
                    String::new()
                };
                let _ = writeln!(
                    out,
                    "  \"{}\" -> \"r{i}\" [color={color}{label}];",
                    net.species[j].name
                );
            }
        }
        for (j, &coef) in r.product.coefficients.iter().enumerate() {
            if coef > 0 {
                let label = if coef > 1 {
                    format!(", label=\"{coef}\"")
                } else {
                    String::new()
                };
                let _ = writeln!(
                    out,
                    "  \"r{i}\" -> \"{}\" [color={color}{label}];",
                    net.species[j].name
                );
            }
        }
    }
    out.push_str("}\n");
    out
}

pub fn render_search_dot(net: &ReactionNetwork, report: &SearchReport) -> String {
    let mut out = String::new();
    for (i, s) in report.structures.iter().enumerate() {
        out.push_str(&render_structure_dot(
            net,
            &format!("structure_{}", i + 1),
            &s.species_tags,
            Some(&s.reaction_constraints),
            None,
        ));
    }
    for (i, s) in report.equivalence_structures.iter().enumerate() {
        out.push_str(&render_structure_dot(
            net,
            &format!("equivalence_{}", i + 1),
            &s.species_tags,
            Some(&s.reaction_constraints),
            None,
        ));
    }
    out
}
