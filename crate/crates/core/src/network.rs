//! Reaction-network model, the text format for describing networks, and
//! exact mass-action rate evaluation.
//!
//! A network is a list of species and a list of reactions between integer
//! linear combinations of species (complexes). Each reaction `r` carries a
//! source complex `nu_r`, a product complex `nu'_r`, and the net change
//! `xi_r = nu'_r - nu_r`. Under mass-action kinetics with rate constant
//! `kappa_r`, the propensity at state `x` is
//! `kappa_r * prod_j (x_j) * (x_j - 1) * ... * (x_j - nu_{r,j} + 1)`,
//! a falling factorial per species in the source support. All rate
//! arithmetic is exact rational.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest stoichiometric coefficient the text format accepts.
pub const MAX_COEFFICIENT: i64 = 1_000_000;

/// A species together with its position in the network's species order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpeciesId {
    pub index: usize,
    pub name: String,
}

/// An integer linear combination of species with non-negative coefficients,
/// stored densely over the network's species order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Complex {
    pub coefficients: Vec<i64>,
}

impl Complex {
    pub fn is_empty(&self) -> bool {
        self.coefficients.iter().all(|&c| c == 0)
    }

    /// Species indices with a positive coefficient.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(j, _)| j)
    }
}

/// A single reaction: source and product complexes plus the cached net
/// change vector and a canonical display label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reaction {
    pub source: Complex,
    pub product: Complex,
    pub xi: Vec<i64>,
    pub label: String,
}

/// A reaction network over a fixed species order.
///
/// `distinct_vectors` lists the distinct net change vectors in order of
/// first occurrence; several reactions may share one vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReactionNetwork {
    pub species: Vec<SpeciesId>,
    pub reactions: Vec<Reaction>,
    pub distinct_vectors: Vec<Vec<i64>>,
}

/// Two parallel sets of non-negative rate constants, one per reaction.
/// Zero constants are allowed and switch a reaction off.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KineticsPair {
    pub kx: Vec<BigRational>,
    pub ky: Vec<BigRational>,
}

/// A non-negative species count vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct State {
    pub counts: Vec<i64>,
}

impl State {
    /// Builds a state, rejecting negative counts.
    pub fn new(counts: Vec<i64>) -> Result<Self, NetworkError> {
        if let Some(&c) = counts.iter().find(|&&c| c < 0) {
            return Err(NetworkError::NegativeCount(c));
        }
        Ok(State { counts })
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.counts.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("negative species count {0}")]
    NegativeCount(i64),
    #[error("state has {got} entries, network has {want} species")]
    DimensionMismatch { got: usize, want: usize },
    #[error("kinetics cover {got} reactions, network has {want}")]
    KineticsMismatch { got: usize, want: usize },
    #[error("negative rate constant for reaction {0}")]
    NegativeRateConstant(String),
}

/// Errors produced while reading the network text format. Positions are
/// 1-based line and column numbers.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("line {line}: negative rate constant {text}")]
    NegativeRate { line: usize, text: String },
    #[error("line {line}: reaction {label} has identical source and product")]
    IdenticalComplexes { line: usize, label: String },
    #[error("line {line}: duplicate reaction {label}")]
    DuplicateReaction { line: usize, label: String },
    #[error("line {line}, column {col}: coefficient exceeds {MAX_COEFFICIENT}")]
    CoefficientTooLarge { line: usize, col: usize },
    #[error("line {line}: rate annotations must cover every reaction or none")]
    MixedAnnotations { line: usize },
    #[error("network has no reactions")]
    Empty,
}

/// A validation finding on a programmatically built network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    UnusedSpecies(String),
    IdenticalComplexes(String),
    DuplicateReaction(String),
    BadChangeVector(String),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UnusedSpecies(n) => write!(f, "species {n} appears in no complex"),
            Diagnostic::IdenticalComplexes(l) => {
                write!(f, "reaction {l} has identical source and product")
            }
            Diagnostic::DuplicateReaction(l) => write!(f, "reaction {l} appears more than once"),
            Diagnostic::BadChangeVector(l) => {
                write!(f, "reaction {l} has xi != product - source")
            }
        }
    }
}

/// One parsed term: coefficient, species name, column of the term start.
struct Term {
    coeff: i64,
    name: String,
    col: usize,
}

/// Cursor over a single line with 1-based column tracking.
struct LineCursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    text: &'a str,
}

impl<'a> LineCursor<'a> {
    fn new(line: usize, text: &'a str) -> Self {
        LineCursor {
            chars: text.chars().collect(),
            pos: 0,
            line,
            text,
        }
    }

    fn col(&self) -> usize {
        self.pos + 1
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn starts_with(&self, s: &str) -> bool {
        self.text[self.byte_pos()..].starts_with(s)
    }

    fn byte_pos(&self) -> usize {
        self.chars[..self.pos].iter().map(|c| c.len_utf8()).sum()
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            col: self.col(),
            msg: msg.into(),
        }
    }

    fn take_digits(&mut self) -> Option<String> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            None
        } else {
            Some(self.chars[start..self.pos].iter().collect())
        }
    }

    fn take_name(&mut self) -> Option<String> {
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return None,
        }
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        Some(self.chars[start..self.pos].iter().collect())
    }
}

/// Parses a rational literal: an integer, a fraction `p/q`, or an exact
/// decimal such as `0.25`. Returns the value and whether a sign was seen.
fn parse_rational(text: &str) -> Option<BigRational> {
    let s = text.trim();
    if s.is_empty() {
        return None;
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let value = if let Some((num, den)) = body.split_once('/') {
        let n: BigInt = num.parse().ok()?;
        let d: BigInt = den.parse().ok()?;
        if d.is_zero() {
            return None;
        }
        BigRational::new(n, d)
    } else if let Some((int, frac)) = body.split_once('.') {
        if !int.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
            || (int.is_empty() && frac.is_empty())
        {
            return None;
        }
        let digits = format!("{int}{frac}");
        let n: BigInt = if digits.is_empty() {
            return None;
        } else {
            digits.parse().ok()?
        };
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        BigRational::new(n, den)
    } else {
        let n: BigInt = body.parse().ok()?;
        BigRational::from_integer(n)
    };
    Some(if neg { -value } else { value })
}

/// Renders a rational as `p` or `p/q` in lowest terms.
pub fn rational_to_string(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

struct ParsedLine {
    line: usize,
    source: Vec<Term>,
    product: Vec<Term>,
    reversible: bool,
    rates: BTreeMap<String, (BigRational, String)>,
}

fn parse_complex(cur: &mut LineCursor<'_>) -> Result<Vec<Term>, ParseError> {
    let mut terms = Vec::new();
    loop {
        cur.skip_ws();
        let col = cur.col();
        if cur.peek() == Some('0')
            && !matches!(cur.chars.get(cur.pos + 1), Some(c) if c.is_ascii_alphanumeric())
        {
            cur.bump();
            terms.push(Term {
                coeff: 0,
                name: String::new(),
                col,
            });
        } else {
            let coeff = match cur.take_digits() {
                Some(digits) => {
                    let v: i64 = digits
                        .parse()
                        .map_err(|_| ParseError::CoefficientTooLarge {
                            line: cur.line,
                            col,
                        })?;
                    if v > MAX_COEFFICIENT {
                        return Err(ParseError::CoefficientTooLarge {
                            line: cur.line,
                            col,
                        });
                    }
                    if v == 0 {
                        return Err(cur.err("coefficient must be positive"));
                    }
                    v
                }
                None => 1,
            };
            cur.skip_ws();
            let name = cur
                .take_name()
                .ok_or_else(|| cur.err("expected species name"))?;
            terms.push(Term { coeff, name, col });
        }
        cur.skip_ws();
        if cur.peek() == Some('+') {
            cur.bump();
        } else {
            break;
        }
    }
    if terms.len() > 1 {
        if let Some(zero) = terms.iter().find(|t| t.coeff == 0) {
            return Err(ParseError::Syntax {
                line: cur.line,
                col: zero.col,
                msg: "the empty complex 0 cannot be combined with other terms".into(),
            });
        }
    }
    Ok(terms)
}

fn parse_line(line_no: usize, text: &str) -> Result<Option<ParsedLine>, ParseError> {
    let content = match text.find('#') {
        Some(i) => &text[..i],
        None => text,
    };
    if content.trim().is_empty() {
        return Ok(None);
    }
    let mut cur = LineCursor::new(line_no, content);
    let source = parse_complex(&mut cur)?;
    cur.skip_ws();
    let reversible = if cur.starts_with("<->") {
        cur.pos += 3;
        true
    } else if cur.starts_with("->") {
        cur.pos += 2;
        false
    } else {
        return Err(cur.err("expected -> or <->"));
    };
    let product = parse_complex(&mut cur)?;
    let mut rates = BTreeMap::new();
    loop {
        cur.skip_ws();
        if cur.peek().is_none() {
            break;
        }
        let key_col = cur.col();
        let key = cur
            .take_name()
            .ok_or_else(|| cur.err("expected rate annotation key"))?;
        if !matches!(key.as_str(), "kX" | "kY" | "kX2" | "kY2") {
            return Err(ParseError::Syntax {
                line: line_no,
                col: key_col,
                msg: format!("unknown annotation key {key}, expected kX, kY, kX2 or kY2"),
            });
        }
        cur.skip_ws();
        if cur.peek() != Some('=') {
            return Err(cur.err("expected = after annotation key"));
        }
        cur.bump();
        cur.skip_ws();
        let val_start = cur.pos;
        while matches!(cur.peek(), Some(c) if !c.is_whitespace()) {
            cur.pos += 1;
        }
        let val_text: String = cur.chars[val_start..cur.pos].iter().collect();
        let value = parse_rational(&val_text).ok_or_else(|| ParseError::Syntax {
            line: line_no,
            col: val_start + 1,
            msg: format!("invalid rational literal {val_text}"),
        })?;
        if value.is_negative() {
            return Err(ParseError::NegativeRate {
                line: line_no,
                text: val_text,
            });
        }
        if rates.insert(key.clone(), (value, val_text)).is_some() {
            return Err(ParseError::Syntax {
                line: line_no,
                col: key_col,
                msg: format!("annotation {key} given twice"),
            });
        }
    }
    if !rates.is_empty() {
        let want: &[&str] = if reversible {
            &["kX", "kY", "kX2", "kY2"]
        } else {
            &["kX", "kY"]
        };
        for k in want {
            if !rates.contains_key(*k) {
                return Err(ParseError::Syntax {
                    line: line_no,
                    col: 1,
                    msg: format!("annotated reaction is missing {k}"),
                });
            }
        }
        if !reversible && (rates.contains_key("kX2") || rates.contains_key("kY2")) {
            return Err(ParseError::Syntax {
                line: line_no,
                col: 1,
                msg: "kX2/kY2 are only valid on <-> reactions".into(),
            });
        }
    }
    Ok(Some(ParsedLine {
        line: line_no,
        source,
        product,
        reversible,
        rates,
    }))
}

fn format_complex(c: &Complex, species: &[SpeciesId]) -> String {
    let mut parts = Vec::new();
    for (j, &coeff) in c.coefficients.iter().enumerate() {
        if coeff == 0 {
            continue;
        }
        if coeff == 1 {
            parts.push(species[j].name.clone());
        } else {
            parts.push(format!("{}{}", coeff, species[j].name));
        }
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join("+")
    }
}

/// Reads the text format: one reaction per line, `#` starts a comment,
/// complexes are `+`-separated terms, `->` or `<->` between them, and
/// optional `kX=`/`kY=` (plus `kX2=`/`kY2=` for `<->`) rate annotations.
/// Species are numbered in order of first appearance; `<->` expands into
/// two reactions.
pub fn parse_network(text: &str) -> Result<(ReactionNetwork, Option<KineticsPair>), ParseError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if let Some(parsed) = parse_line(i + 1, raw)? {
            lines.push(parsed);
        }
    }
    if lines.is_empty() {
        return Err(ParseError::Empty);
    }

    let mut species: Vec<SpeciesId> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for line in &lines {
        for term in line.source.iter().chain(line.product.iter()) {
            if term.coeff == 0 {
                continue;
            }
            if !index.contains_key(&term.name) {
                index.insert(term.name.clone(), species.len());
                species.push(SpeciesId {
                    index: species.len(),
                    name: term.name.clone(),
                });
            }
        }
    }
    let d = species.len();
    let to_complex = |terms: &[Term]| -> Complex {
        let mut coeffs = vec![0i64; d];
        for t in terms {
            if t.coeff > 0 {
                coeffs[index[&t.name]] += t.coeff;
            }
        }
        Complex {
            coefficients: coeffs,
        }
    };

    let mut reactions: Vec<Reaction> = Vec::new();
    let mut kx = Vec::new();
    let mut ky = Vec::new();
    let mut annotated_lines = 0usize;
    let push_reaction = |source: Complex,
                         product: Complex,
                         line: usize,
                         reactions: &mut Vec<Reaction>|
     -> Result<(), ParseError> {
        let label = format!(
            "{}->{}",
            format_complex(&source, &species),
            format_complex(&product, &species)
        );
        if source == product {
            return Err(ParseError::IdenticalComplexes { line, label });
        }
        if reactions
            .iter()
            .any(|r| r.source == source && r.product == product)
        {
            return Err(ParseError::DuplicateReaction { line, label });
        }
        let xi: Vec<i64> = (0..d)
            .map(|j| product.coefficients[j] - source.coefficients[j])
            .collect();
        reactions.push(Reaction {
            source,
            product,
            xi,
            label,
        });
        Ok(())
    };

    for line in &lines {
        let src = to_complex(&line.source);
        let dst = to_complex(&line.product);
        let annotated = !line.rates.is_empty();
        if annotated {
            annotated_lines += 1;
        }
        push_reaction(src.clone(), dst.clone(), line.line, &mut reactions)?;
        if annotated {
            kx.push(line.rates["kX"].0.clone());
            ky.push(line.rates["kY"].0.clone());
        }
        if line.reversible {
            push_reaction(dst, src, line.line, &mut reactions)?;
            if annotated {
                kx.push(line.rates["kX2"].0.clone());
                ky.push(line.rates["kY2"].0.clone());
            }
        }
    }

    if annotated_lines != 0 && annotated_lines != lines.len() {
        let first_bare = lines
            .iter()
            .find(|l| l.rates.is_empty())
            .map(|l| l.line)
            .unwrap_or(1);
        return Err(ParseError::MixedAnnotations { line: first_bare });
    }

    let mut distinct_vectors: Vec<Vec<i64>> = Vec::new();
    for r in &reactions {
        if !distinct_vectors.contains(&r.xi) {
            distinct_vectors.push(r.xi.clone());
        }
    }

    let net = ReactionNetwork {
        species,
        reactions,
        distinct_vectors,
    };
    let kinetics = if annotated_lines > 0 {
        Some(KineticsPair { kx, ky })
    } else {
        None
    };
    Ok((net, kinetics))
}

/// Renders a network (and optional kinetics) back into the text format.
/// Reactions come out one per line in network order, so reversible pairs
/// appear as two lines; re-parsing reproduces the network exactly.
pub fn to_dsl(net: &ReactionNetwork, kinetics: Option<&KineticsPair>) -> String {
    let mut out = String::new();
    for (r, reaction) in net.reactions.iter().enumerate() {
        let src = format_complex(&reaction.source, &net.species);
        let dst = format_complex(&reaction.product, &net.species);
        out.push_str(&src);
        out.push_str(" -> ");
        out.push_str(&dst);
        if let Some(k) = kinetics {
            out.push_str(&format!(
                " kX={} kY={}",
                rational_to_string(&k.kx[r]),
                rational_to_string(&k.ky[r])
            ));
        }
        out.push('\n');
    }
    out
}

impl ReactionNetwork {
    pub fn species_count(&self) -> usize {
        self.species.len()
    }

    pub fn species_names(&self) -> Vec<&str> {
        self.species.iter().map(|s| s.name.as_str()).collect()
    }

    /// Index of a change vector in `distinct_vectors`, if present.
    pub fn vector_index(&self, xi: &[i64]) -> Option<usize> {
        self.distinct_vectors.iter().position(|v| v == xi)
    }
}

/// Falling factorial `(x)_n = x (x-1) ... (x-n+1)`, with `(x)_0 = 1`.
fn falling_factorial(x: i64, n: i64) -> BigInt {
    let mut acc = BigInt::one();
    for k in 0..n {
        acc *= BigInt::from(x - k);
    }
    acc
}

/// Exact mass-action propensity of reaction `r` at state `x`.
pub fn propensity(
    net: &ReactionNetwork,
    constants: &[BigRational],
    r: usize,
    x: &State,
) -> BigRational {
    let reaction = &net.reactions[r];
    debug_assert_eq!(x.counts.len(), net.species_count());
    let kappa = &constants[r];
    if kappa.is_zero() {
        return BigRational::zero();
    }
    let mut factor = BigInt::one();
    for (j, &nu) in reaction.source.coefficients.iter().enumerate() {
        if nu == 0 {
            continue;
        }
        if x.counts[j] < nu {
            return BigRational::zero();
        }
        factor *= falling_factorial(x.counts[j], nu);
    }
    kappa * BigRational::from_integer(factor)
}

/// Total rate of moving from `x` to `x + xi`: the sum of propensities over
/// reactions whose change vector equals `xi`. Zero when no reaction has
/// that vector.
pub fn aggregate_rate(
    net: &ReactionNetwork,
    constants: &[BigRational],
    x: &State,
    xi: &[i64],
) -> BigRational {
    let mut total = BigRational::zero();
    for (r, reaction) in net.reactions.iter().enumerate() {
        if reaction.xi == xi {
            total += propensity(net, constants, r, x);
        }
    }
    total
}

/// Structural checks for programmatically assembled networks. Returns an
/// empty list when every species appears in some complex, every reaction
/// joins distinct complexes, no reaction repeats, and every cached change
/// vector matches product minus source.
pub fn validate_network(net: &ReactionNetwork) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let d = net.species_count();
    for sp in &net.species {
        let used = net.reactions.iter().any(|r| {
            r.source.coefficients.get(sp.index).copied().unwrap_or(0) > 0
                || r.product.coefficients.get(sp.index).copied().unwrap_or(0) > 0
        });
        if !used {
            out.push(Diagnostic::UnusedSpecies(sp.name.clone()));
        }
    }
    for (i, r) in net.reactions.iter().enumerate() {
        if r.source == r.product {
            out.push(Diagnostic::IdenticalComplexes(r.label.clone()));
        }
        let expect: Vec<i64> = (0..d)
            .map(|j| r.product.coefficients[j] - r.source.coefficients[j])
            .collect();
        if r.xi != expect {
            out.push(Diagnostic::BadChangeVector(r.label.clone()));
        }
        if net.reactions[..i]
            .iter()
            .any(|p| p.source == r.source && p.product == r.product)
        {
            out.push(Diagnostic::DuplicateReaction(r.label.clone()));
        }
    }
    out
}

impl KineticsPair {
    pub fn new(kx: Vec<BigRational>, ky: Vec<BigRational>) -> Result<Self, NetworkError> {
        for v in kx.iter().chain(ky.iter()) {
            if v.is_negative() {
                return Err(NetworkError::NegativeRateConstant(rational_to_string(v)));
            }
        }
        Ok(KineticsPair { kx, ky })
    }
}
