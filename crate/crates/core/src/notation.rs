//! Pedigree string notations.
//!
//! Three readers share one tokenizer and one operator-precedence combiner:
//!
//! * Purdy: `/`, `//`, `/3/`, `/4/`, ... delimit crosses of rank 1, 2, 3, 4.
//!   Higher ranks bind later; equal ranks associate to the left.
//! * Star: `*` crosses, parentheses group, `*` is left-associative.
//! * Mixed: `x`, `×` and `*` are synonymous cross operators, `[]` and `()`
//!   are synonymous groups, and Purdy delimiters are accepted. A group that
//!   mixes slash delimiters with cross operators is reported as ambiguous.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pedigree::{LineId, LineRecord, ParentRelation, Role};

/// Deepest bracket nesting accepted before giving up.
pub const MAX_NESTING: usize = 256;

/// Parsed pedigree: a variety name or a cross of two sub-pedigrees.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum CrossTree {
    Leaf {
        name: String,
    },
    Cross {
        left: Box<CrossTree>,
        right: Box<CrossTree>,
        rank: u32,
    },
}

impl CrossTree {
    pub fn leaf(name: impl Into<String>) -> Self {
        CrossTree::Leaf { name: name.into() }
    }

    pub fn cross(left: CrossTree, right: CrossTree, rank: u32) -> Self {
        CrossTree::Cross {
            left: Box::new(left),
            right: Box::new(right),
            rank,
        }
    }

    /// Number of crosses on the longest root-to-leaf path.
    pub fn height(&self) -> u32 {
        match self {
            CrossTree::Leaf { .. } => 0,
            CrossTree::Cross { left, right, .. } => 1 + left.height().max(right.height()),
        }
    }

    pub fn rank(&self) -> u32 {
        match self {
            CrossTree::Leaf { .. } => 0,
            CrossTree::Cross { rank, .. } => *rank,
        }
    }

    pub fn cross_count(&self) -> usize {
        match self {
            CrossTree::Leaf { .. } => 0,
            CrossTree::Cross { left, right, .. } => 1 + left.cross_count() + right.cross_count(),
        }
    }

    /// Leaf names, left to right.
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            CrossTree::Leaf { name } => out.push(name),
            CrossTree::Cross { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }

    /// Structural equality ignoring rank values.
    pub fn same_shape(&self, other: &CrossTree) -> bool {
        match (self, other) {
            (CrossTree::Leaf { name: a }, CrossTree::Leaf { name: b }) => a == b,
            (
                CrossTree::Cross {
                    left: l1,
                    right: r1,
                    ..
                },
                CrossTree::Cross {
                    left: l2,
                    right: r2,
                    ..
                },
            ) => l1.same_shape(l2) && r1.same_shape(r2),
            _ => false,
        }
    }

    /// Copy with every rank replaced by the cross's height, the numbering
    /// used by [`serialize_purdy`].
    pub fn canonical(&self) -> CrossTree {
        match self {
            CrossTree::Leaf { name } => CrossTree::leaf(name.clone()),
            CrossTree::Cross { left, right, .. } => {
                let (l, r) = (left.canonical(), right.canonical());
                let rank = 1 + l.rank().max(r.rank());
                CrossTree::cross(l, r, rank)
            }
        }
    }

    /// Ranks are positive and no cross ranks below either operand.
    pub fn ranks_valid(&self) -> bool {
        match self {
            CrossTree::Leaf { .. } => true,
            CrossTree::Cross { left, right, rank } => {
                *rank >= 1
                    && *rank >= left.rank()
                    && *rank >= right.rank()
                    && left.ranks_valid()
                    && right.ranks_valid()
            }
        }
    }
}

impl fmt::Display for CrossTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CrossTree::Leaf { name } => write!(f, "{name}"),
            CrossTree::Cross { left, right, rank } => {
                write!(f, "Cross({left}, {right}, {rank})")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParseErrorKind {
    EmptyInput,
    EmptyOperand,
    MalformedRank,
    UnbalancedParens,
    MissingOperator,
    AmbiguousNotation,
    NestingTooDeep,
}

/// A parse failure pinned to a byte offset of the input.
#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{kind:?} at offset {offset}: {message}")]
pub struct ParseDiagnostic {
    pub kind: ParseErrorKind,
    pub offset: usize,
    pub message: String,
    /// Further offsets involved, e.g. every conflicting operator.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub related: Vec<usize>,
}

impl ParseDiagnostic {
    fn new(kind: ParseErrorKind, offset: usize, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            kind,
            offset,
            message: message.into(),
            related: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Notation {
    Purdy,
    Star,
    Mixed,
}

impl Notation {
    fn dialect(self) -> Dialect {
        match self {
            Notation::Purdy => Dialect {
                slashes: true,
                stars: false,
                word_x: false,
                parens: false,
                brackets: false,
            },
            Notation::Star => Dialect {
                slashes: false,
                stars: true,
                word_x: false,
                parens: true,
                brackets: false,
            },
            Notation::Mixed => Dialect {
                slashes: true,
                stars: true,
                word_x: true,
                parens: true,
                brackets: true,
            },
        }
    }
}

impl std::str::FromStr for Notation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "purdy" => Ok(Notation::Purdy),
            "star" | "lamacraft-finlay" => Ok(Notation::Star),
            "mixed" => Ok(Notation::Mixed),
            other => Err(format!("unknown notation `{other}`")),
        }
    }
}

#[derive(Clone, Copy)]
struct Dialect {
    slashes: bool,
    stars: bool,
    /// Standalone words `x`/`X` and the `×` sign act as cross operators.
    word_x: bool,
    parens: bool,
    brackets: bool,
}

impl Dialect {
    fn is_special(&self, c: char) -> bool {
        (self.slashes && c == '/')
            || (self.stars && c == '*')
            || (self.word_x && c == '×')
            || (self.parens && (c == '(' || c == ')'))
            || (self.brackets && (c == '[' || c == ']'))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Name(String, usize),
    Open(char, usize),
    Close(char, usize),
    Star(usize),
    Slash(u32, usize),
}

impl Tok {
    fn offset(&self) -> usize {
        match self {
            Tok::Name(_, o) | Tok::Open(_, o) | Tok::Close(_, o) | Tok::Star(o) => *o,
            Tok::Slash(_, o) => *o,
        }
    }
}

fn tokenize(input: &str, dialect: Dialect) -> Result<Vec<Tok>, ParseDiagnostic> {
    let mut toks = Vec::new();
    let chars: Vec<(usize, char)> = input.char_indices().collect();
    let mut i = 0;
    let mut seg_start: Option<usize> = None;

    let flush = |toks: &mut Vec<Tok>, from: Option<usize>, to: usize| {
        if let Some(from) = from {
            push_segment(toks, input, from, to, dialect);
        }
    };

    while i < chars.len() {
        let (off, c) = chars[i];
        if !dialect.is_special(c) {
            seg_start.get_or_insert(off);
            i += 1;
            continue;
        }
        flush(&mut toks, seg_start.take(), off);
        match c {
            '/' => {
                let run = chars[i..].iter().take_while(|(_, ch)| *ch == '/').count();
                if run > 1 {
                    toks.push(Tok::Slash(run as u32, off));
                    i += run;
                    continue;
                }
                // `/n/` rank marker: a tight token starting with a digit
                // and closed by another slash.
                let body: Vec<(usize, char)> = chars[i + 1..]
                    .iter()
                    .copied()
                    .take_while(|(_, ch)| !ch.is_whitespace() && *ch != '/' && !dialect.is_special(*ch))
                    .collect();
                let closed = chars
                    .get(i + 1 + body.len())
                    .is_some_and(|(_, ch)| *ch == '/');
                if closed && body.first().is_some_and(|(_, ch)| ch.is_ascii_digit()) {
                    let text: String = body.iter().map(|(_, ch)| ch).collect();
                    match text.parse::<u32>() {
                        Ok(n) if n >= 1 && text.chars().all(|ch| ch.is_ascii_digit()) => {
                            toks.push(Tok::Slash(n, off));
                            i += body.len() + 2;
                            continue;
                        }
                        _ => {
                            return Err(ParseDiagnostic::new(
                                ParseErrorKind::MalformedRank,
                                off,
                                format!("`/{text}/` is not a valid cross rank"),
                            ))
                        }
                    }
                }
                toks.push(Tok::Slash(1, off));
                i += 1;
            }
            '*' | '×' => {
                toks.push(Tok::Star(off));
                i += 1;
            }
            '(' | '[' => {
                toks.push(Tok::Open(c, off));
                i += 1;
            }
            ')' | ']' => {
                toks.push(Tok::Close(c, off));
                i += 1;
            }
            _ => unreachable!("special character"),
        }
    }
    flush(&mut toks, seg_start, input.len());
    Ok(toks)
}

/// Splits a run of ordinary characters into names, and, when enabled,
/// standalone `x` words into cross operators. Internal spacing of names is
/// preserved.
fn push_segment(toks: &mut Vec<Tok>, input: &str, from: usize, to: usize, dialect: Dialect) {
    let seg = &input[from..to];
    if !dialect.word_x {
        let trimmed = seg.trim();
        if !trimmed.is_empty() {
            let lead = seg.len() - seg.trim_start().len();
            toks.push(Tok::Name(trimmed.to_string(), from + lead));
        }
        return;
    }
    let mut name_span: Option<(usize, usize)> = None;
    let mut pos = 0;
    for word in seg.split_whitespace() {
        let start = pos + seg[pos..].find(word).expect("word comes from segment");
        let end = start + word.len();
        pos = end;
        if word == "x" || word == "X" {
            if let Some((s, e)) = name_span.take() {
                toks.push(Tok::Name(seg[s..e].to_string(), from + s));
            }
            toks.push(Tok::Star(from + start));
        } else {
            name_span = Some(match name_span {
                Some((s, _)) => (s, end),
                None => (start, end),
            });
        }
    }
    if let Some((s, e)) = name_span {
        toks.push(Tok::Name(seg[s..e].to_string(), from + s));
    }
}

#[derive(Clone, Copy, PartialEq)]
enum OpKind {
    Star,
    Slash(u32),
}

struct Parser<'a> {
    toks: &'a [Tok],
    pos: usize,
    input_len: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    /// Parses operands and operators up to the matching close bracket (or
    /// the end of input when `open` is `None`).
    fn sequence(
        &mut self,
        depth: usize,
        open: Option<(char, usize)>,
    ) -> Result<CrossTree, ParseDiagnostic> {
        if depth > MAX_NESTING {
            let at = open.map_or(0, |(_, o)| o);
            return Err(ParseDiagnostic::new(
                ParseErrorKind::NestingTooDeep,
                at,
                format!("groups nested deeper than {MAX_NESTING}"),
            ));
        }
        let mut operands: Vec<CrossTree> = Vec::new();
        let mut ops: Vec<(OpKind, usize)> = Vec::new();
        loop {
            // Operand.
            match self.peek().cloned() {
                Some(Tok::Name(name, _)) => {
                    self.pos += 1;
                    operands.push(CrossTree::leaf(name));
                }
                Some(Tok::Open(c, off)) => {
                    self.pos += 1;
                    operands.push(self.sequence(depth + 1, Some((c, off)))?);
                }
                Some(tok) => {
                    return Err(ParseDiagnostic::new(
                        ParseErrorKind::EmptyOperand,
                        tok.offset(),
                        "expected a variety name or a group",
                    ))
                }
                None => {
                    if let Some((c, off)) = open {
                        return Err(ParseDiagnostic::new(
                            ParseErrorKind::UnbalancedParens,
                            off,
                            format!("`{c}` is never closed"),
                        ));
                    }
                    return Err(ParseDiagnostic::new(
                        ParseErrorKind::EmptyOperand,
                        self.input_len,
                        "input ends where an operand is expected",
                    ));
                }
            }
            // Operator or end of sequence.
            match self.peek().cloned() {
                Some(Tok::Star(off)) => {
                    self.pos += 1;
                    ops.push((OpKind::Star, off));
                }
                Some(Tok::Slash(rank, off)) => {
                    self.pos += 1;
                    ops.push((OpKind::Slash(rank), off));
                }
                Some(Tok::Close(c, off)) => match open {
                    Some((o, _)) if matches!((o, c), ('(', ')') | ('[', ']')) => {
                        self.pos += 1;
                        return combine(operands, &ops);
                    }
                    Some((o, oo)) => {
                        let mut d = ParseDiagnostic::new(
                            ParseErrorKind::UnbalancedParens,
                            off,
                            format!("`{c}` does not close `{o}`"),
                        );
                        d.related.push(oo);
                        return Err(d);
                    }
                    None => {
                        return Err(ParseDiagnostic::new(
                            ParseErrorKind::UnbalancedParens,
                            off,
                            format!("unmatched `{c}`"),
                        ))
                    }
                },
                Some(tok) => {
                    return Err(ParseDiagnostic::new(
                        ParseErrorKind::MissingOperator,
                        tok.offset(),
                        "two operands without a cross operator between them",
                    ))
                }
                None => {
                    if let Some((c, off)) = open {
                        return Err(ParseDiagnostic::new(
                            ParseErrorKind::UnbalancedParens,
                            off,
                            format!("`{c}` is never closed"),
                        ));
                    }
                    return combine(operands, &ops);
                }
            }
        }
    }
}

/// Operator-precedence reduction. Slash ranks bind lower ranks first and
/// associate equal ranks to the left; star operators all share rank 1.
fn combine(operands: Vec<CrossTree>, ops: &[(OpKind, usize)]) -> Result<CrossTree, ParseDiagnostic> {
    let has_star = ops.iter().any(|(k, _)| *k == OpKind::Star);
    let has_slash = ops.iter().any(|(k, _)| matches!(k, OpKind::Slash(_)));
    if has_star && has_slash {
        let mut d = ParseDiagnostic::new(
            ParseErrorKind::AmbiguousNotation,
            ops[0].1,
            "slash delimiters and cross operators mixed without grouping",
        );
        d.related = ops.iter().map(|(_, o)| *o).collect();
        return Err(d);
    }
    let mut out: Vec<CrossTree> = Vec::with_capacity(operands.len());
    let mut pending: Vec<u32> = Vec::new();
    let reduce = |out: &mut Vec<CrossTree>, rank: u32| {
        let right = out.pop().expect("right operand");
        let left = out.pop().expect("left operand");
        out.push(CrossTree::cross(left, right, rank));
    };
    let mut operands = operands.into_iter();
    out.push(operands.next().expect("at least one operand"));
    for ((kind, _), operand) in ops.iter().zip(operands) {
        let rank = match kind {
            OpKind::Star => 1,
            OpKind::Slash(r) => *r,
        };
        while pending.last().is_some_and(|&top| top <= rank) {
            let top = pending.pop().expect("checked");
            reduce(&mut out, top);
        }
        pending.push(rank);
        out.push(operand);
    }
    while let Some(top) = pending.pop() {
        reduce(&mut out, top);
    }
    Ok(out.pop().expect("single result"))
}

fn parse_with(s: &str, notation: Notation) -> Result<CrossTree, ParseDiagnostic> {
    if s.trim().is_empty() {
        return Err(ParseDiagnostic::new(
            ParseErrorKind::EmptyInput,
            0,
            "pedigree string is empty",
        ));
    }
    let toks = tokenize(s, notation.dialect())?;
    let mut parser = Parser {
        toks: &toks,
        pos: 0,
        input_len: s.len(),
    };
    parser.sequence(0, None)
}

/// Parses Purdy slash notation. Ranks are taken from the delimiters.
pub fn parse_purdy(s: &str) -> Result<CrossTree, ParseDiagnostic> {
    parse_with(s, Notation::Purdy)
}

/// Parses star notation; ranks are assigned bottom-up (innermost cross 1).
pub fn parse_star(s: &str) -> Result<CrossTree, ParseDiagnostic> {
    parse_with(s, Notation::Star).map(|t| t.canonical())
}

/// Tolerant reader for mixed notations. Ranks are assigned bottom-up.
/// Every failure is returned with byte offsets rather than guessed around.
pub fn parse_mixed(s: &str) -> Result<CrossTree, Vec<ParseDiagnostic>> {
    parse_with(s, Notation::Mixed)
        .map(|t| t.canonical())
        .map_err(|d| vec![d])
}

/// Dispatches on notation, always returning a diagnostic list on failure.
pub fn parse(s: &str, notation: Notation) -> Result<CrossTree, Vec<ParseDiagnostic>> {
    match notation {
        Notation::Purdy => parse_purdy(s).map_err(|d| vec![d]),
        Notation::Star => parse_star(s).map_err(|d| vec![d]),
        Notation::Mixed => parse_mixed(s),
    }
}

fn purdy_delimiter(rank: u32) -> String {
    match rank {
        1 => "/".to_string(),
        2 => "//".to_string(),
        n => format!("/{n}/"),
    }
}

/// Canonical Purdy form: ranks renumbered to cross heights.
pub fn serialize_purdy(tree: &CrossTree) -> String {
    let mut out = String::new();
    write_purdy(tree, &mut out);
    out
}

/// Writes `tree` and returns its canonical rank.
fn write_purdy(tree: &CrossTree, out: &mut String) -> u32 {
    match tree {
        CrossTree::Leaf { name } => {
            out.push_str(name);
            0
        }
        CrossTree::Cross { left, right, .. } => {
            let l = write_purdy(left, out);
            let at = out.len();
            let r = write_purdy(right, out);
            let rank = 1 + l.max(r);
            out.insert_str(at, &purdy_delimiter(rank));
            rank
        }
    }
}

/// Fully parenthesized star form; the outermost cross is left bare.
pub fn serialize_star(tree: &CrossTree) -> String {
    fn go(t: &CrossTree, root: bool, out: &mut String) {
        match t {
            CrossTree::Leaf { name } => out.push_str(name),
            CrossTree::Cross { left, right, .. } => {
                if !root {
                    out.push('(');
                }
                go(left, false, out);
                out.push_str(" * ");
                go(right, false, out);
                if !root {
                    out.push(')');
                }
            }
        }
    }
    let mut out = String::new();
    go(tree, true, &mut out);
    out
}

/// Which operand is recorded as the female parent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoleConvention {
    #[default]
    LeftFemale,
    LeftMale,
}

/// Parent/child rows produced from one pedigree string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomizedPedigree {
    pub relations: Vec<ParentRelation>,
    /// One line per unnamed internal cross, named by its Purdy form.
    pub intermediates: Vec<LineRecord>,
    /// Varieties named at the leaves.
    pub founders: Vec<LineRecord>,
    pub child: LineRecord,
}

impl AtomizedPedigree {
    /// Every line the relations mention, each once.
    pub fn lines(&self) -> Vec<LineRecord> {
        let mut seen = BTreeSet::new();
        self.founders
            .iter()
            .chain(&self.intermediates)
            .chain(std::iter::once(&self.child))
            .filter(|l| seen.insert(l.id.clone()))
            .cloned()
            .collect()
    }
}

/// Splits a tree into parent/child relations with left = female,
/// right = male. A cross of a line with itself becomes one self relation.
pub fn atomize(tree: &CrossTree, child_name: &str) -> AtomizedPedigree {
    atomize_with(tree, child_name, RoleConvention::LeftFemale)
}

pub fn atomize_with(tree: &CrossTree, child_name: &str, convention: RoleConvention) -> AtomizedPedigree {
    let mut acc = AtomizedPedigree {
        relations: Vec::new(),
        intermediates: Vec::new(),
        founders: Vec::new(),
        child: LineRecord::named(child_name),
    };
    let mut seen_lines = BTreeSet::new();
    let mut seen_rels = BTreeSet::new();
    if let CrossTree::Cross { left, right, .. } = tree {
        let l = atomize_node(left, convention, &mut acc, &mut seen_lines, &mut seen_rels);
        let r = atomize_node(right, convention, &mut acc, &mut seen_lines, &mut seen_rels);
        push_family(child_name, &l, &r, convention, &mut acc, &mut seen_rels);
    }
    acc
}

fn atomize_node(
    tree: &CrossTree,
    convention: RoleConvention,
    acc: &mut AtomizedPedigree,
    seen_lines: &mut BTreeSet<String>,
    seen_rels: &mut BTreeSet<ParentRelation>,
) -> String {
    match tree {
        CrossTree::Leaf { name } => {
            if seen_lines.insert(name.clone()) {
                acc.founders.push(LineRecord::named(name));
            }
            name.clone()
        }
        CrossTree::Cross { left, right, .. } => {
            let name = serialize_purdy(tree);
            let l = atomize_node(left, convention, acc, seen_lines, seen_rels);
            let r = atomize_node(right, convention, acc, seen_lines, seen_rels);
            if seen_lines.insert(name.clone()) {
                acc.intermediates.push(LineRecord::named(&name));
            }
            push_family(&name, &l, &r, convention, acc, seen_rels);
            name
        }
    }
}

fn push_family(
    child: &str,
    left: &str,
    right: &str,
    convention: RoleConvention,
    acc: &mut AtomizedPedigree,
    seen: &mut BTreeSet<ParentRelation>,
) {
    let rels = if left == right {
        vec![ParentRelation::selfed(child, left)]
    } else {
        let (lr, rr) = match convention {
            RoleConvention::LeftFemale => (Role::Female, Role::Male),
            RoleConvention::LeftMale => (Role::Male, Role::Female),
        };
        vec![
            ParentRelation::new(LineId::from(child), left, lr, "cross"),
            ParentRelation::new(LineId::from(child), right, rr, "cross"),
        ]
    };
    for rel in rels {
        if seen.insert(rel.clone()) {
            acc.relations.push(rel);
        }
    }
}
