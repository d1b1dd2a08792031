//! HOA v1 interchange for deterministic Rabin automata.
//!
//! Supported subset: single start state, explicit labeled edges over the full
//! powerset of the declared APs, state-based acceptance with
//! `acc-name: Rabin k`. Anything else is reported as unsupported, naming the
//! offending header.

use std::collections::BTreeSet;

use super::{Alphabet, RabinAutomaton, RabinPair, DEFAULT_ALPHABET_CAP};
use crate::error::{Error, Result};
use crate::props::PropSet;

/// Renders the automaton as HOA v1 text with one edge per alphabet symbol.
///
/// Exporting is lossless for automata over a full powerset alphabet:
/// `import_hoa(export_hoa(d))` is isomorphic to `d`.
pub fn export_hoa(dra: &RabinAutomaton) -> String {
    let mut out = String::new();
    out.push_str("HOA: v1\n");
    out.push_str(&format!("States: {}\n", dra.state_count()));
    out.push_str(&format!("Start: {}\n", dra.initial));
    out.push_str(&format!("AP: {}", dra.ap.len()));
    for name in &dra.ap {
        out.push_str(&format!(" \"{name}\""));
    }
    out.push('\n');
    out.push_str(&format!("acc-name: Rabin {}\n", dra.pairs.len()));
    if dra.pairs.is_empty() {
        out.push_str("Acceptance: 0 f\n");
    } else {
        let terms: Vec<String> = (0..dra.pairs.len())
            .map(|i| format!("(Fin({}) & Inf({}))", 2 * i, 2 * i + 1))
            .collect();
        out.push_str(&format!(
            "Acceptance: {} {}\n",
            2 * dra.pairs.len(),
            terms.join(" | ")
        ));
    }
    let full = dra.alphabet.len() == 1usize << dra.ap.len();
    out.push_str("properties: trans-labels explicit-labels state-acc deterministic");
    if full {
        out.push_str(" complete");
    }
    out.push('\n');
    out.push_str("--BODY--\n");
    for state in 0..dra.state_count() as u32 {
        let mut sets = Vec::new();
        for (i, pair) in dra.pairs.iter().enumerate() {
            if pair.fin.contains(&state) {
                sets.push(2 * i);
            }
            if pair.inf.contains(&state) {
                sets.push(2 * i + 1);
            }
        }
        if sets.is_empty() {
            out.push_str(&format!("State: {state}\n"));
        } else {
            let rendered: Vec<String> = sets.iter().map(|s| s.to_string()).collect();
            out.push_str(&format!("State: {state} {{{}}}\n", rendered.join(" ")));
        }
        for (sym_idx, &sym) in dra.alphabet.symbols().iter().enumerate() {
            let label: Vec<String> = (0..dra.ap.len())
                .map(|bit| {
                    if sym.contains(bit) {
                        format!("{bit}")
                    } else {
                        format!("!{bit}")
                    }
                })
                .collect();
            let label = if label.is_empty() {
                "t".to_string()
            } else {
                label.join("&")
            };
            out.push_str(&format!("[{label}] {}\n", dra.step(state, sym_idx)));
        }
    }
    out.push_str("--END--\n");
    out
}

// Boolean formula over AP indices as used in edge labels.
#[derive(Debug, Clone)]
enum LabelExpr {
    True,
    False,
    Ap(usize),
    Not(Box<LabelExpr>),
    And(Box<LabelExpr>, Box<LabelExpr>),
    Or(Box<LabelExpr>, Box<LabelExpr>),
}

impl LabelExpr {
    fn eval(&self, sym: PropSet) -> bool {
        match self {
            LabelExpr::True => true,
            LabelExpr::False => false,
            LabelExpr::Ap(i) => sym.contains(*i),
            LabelExpr::Not(a) => !a.eval(sym),
            LabelExpr::And(a, b) => a.eval(sym) && b.eval(sym),
            LabelExpr::Or(a, b) => a.eval(sym) || b.eval(sym),
        }
    }
}

struct LabelParser<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> LabelParser<'a> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && (self.bytes[self.pos] as char).is_whitespace() {
            self.pos += 1;
        }
    }

    fn or(&mut self) -> Result<LabelExpr> {
        let mut lhs = self.and()?;
        loop {
            self.skip_ws();
            if self.bytes.get(self.pos) == Some(&b'|') {
                self.pos += 1;
                let rhs = self.and()?;
                lhs = LabelExpr::Or(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn and(&mut self) -> Result<LabelExpr> {
        let mut lhs = self.atom()?;
        loop {
            self.skip_ws();
            if self.bytes.get(self.pos) == Some(&b'&') {
                self.pos += 1;
                let rhs = self.atom()?;
                lhs = LabelExpr::And(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn atom(&mut self) -> Result<LabelExpr> {
        self.skip_ws();
        match self.bytes.get(self.pos) {
            Some(b'!') => {
                self.pos += 1;
                Ok(LabelExpr::Not(Box::new(self.atom()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.or()?;
                self.skip_ws();
                if self.bytes.get(self.pos) != Some(&b')') {
                    return Err(self.error("expected `)` in edge label"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b't') => {
                self.pos += 1;
                Ok(LabelExpr::True)
            }
            Some(b'f') => {
                self.pos += 1;
                Ok(LabelExpr::False)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self
                    .bytes
                    .get(self.pos)
                    .map(|c| c.is_ascii_digit())
                    .unwrap_or(false)
                {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
                Ok(LabelExpr::Ap(text.parse().unwrap()))
            }
            _ => Err(self.error("malformed edge label")),
        }
    }
}

fn parse_label(text: &str, line: usize) -> Result<LabelExpr> {
    let mut parser = LabelParser {
        bytes: text.as_bytes(),
        pos: 0,
        line,
    };
    let expr = parser.or()?;
    parser.skip_ws();
    if parser.pos != parser.bytes.len() {
        return Err(parser.error("trailing input in edge label"));
    }
    Ok(expr)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column: 1,
        message: message.into(),
    }
}

fn parse_quoted_list(rest: &str, line: usize) -> Result<Vec<String>> {
    let mut names = Vec::new();
    let mut chars = rest.chars().peekable();
    while let Some(c) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        if c != '"' {
            return Err(parse_err(line, "expected quoted AP name"));
        }
        let mut name = String::new();
        for c in chars.by_ref() {
            if c == '"' {
                break;
            }
            name.push(c);
        }
        names.push(name);
    }
    Ok(names)
}

/// Parses HOA v1 text into a deterministic, complete Rabin automaton.
pub fn import_hoa(text: &str) -> Result<RabinAutomaton> {
    let mut states: Option<usize> = None;
    let mut start: Option<u32> = None;
    let mut ap: Option<Vec<String>> = None;
    let mut n_pairs: Option<usize> = None;
    let mut acceptance_seen = false;
    let mut body_line = None;

    let lines: Vec<&str> = text.lines().collect();
    let mut first_directive = true;
    for (idx, raw) in lines.iter().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "--BODY--" {
            body_line = Some(idx + 1);
            break;
        }
        let (header, rest) = match line.split_once(':') {
            Some((h, r)) => (h.trim(), r.trim()),
            None => return Err(parse_err(line_no, "expected a `header: value` line")),
        };
        if first_directive {
            if header != "HOA" || rest != "v1" {
                return Err(Error::Unsupported(format!(
                    "expected `HOA: v1` as the first header, found `{line}`"
                )));
            }
            first_directive = false;
            continue;
        }
        match header {
            "States" => {
                states = Some(
                    rest.parse()
                        .map_err(|_| parse_err(line_no, "invalid `States:` count"))?,
                );
            }
            "Start" => {
                if start.is_some() || rest.split_whitespace().count() != 1 {
                    return Err(Error::Unsupported(
                        "`Start:` must name exactly one initial state".into(),
                    ));
                }
                start = Some(
                    rest.parse()
                        .map_err(|_| parse_err(line_no, "invalid `Start:` state"))?,
                );
            }
            "AP" => {
                let (count, names_part) = match rest.split_once(char::is_whitespace) {
                    Some((c, n)) => (c, n),
                    None => (rest, ""),
                };
                let count: usize = count
                    .parse()
                    .map_err(|_| parse_err(line_no, "invalid `AP:` count"))?;
                let names = parse_quoted_list(names_part, line_no)?;
                if names.len() != count {
                    return Err(parse_err(line_no, "`AP:` count does not match names"));
                }
                ap = Some(names);
            }
            "acc-name" => {
                let mut parts = rest.split_whitespace();
                match (parts.next(), parts.next(), parts.next()) {
                    (Some("Rabin"), Some(k), None) => {
                        n_pairs = Some(k.parse().map_err(|_| {
                            parse_err(line_no, "invalid Rabin pair count in `acc-name:`")
                        })?);
                    }
                    _ => {
                        return Err(Error::Unsupported(format!(
                            "acc-name `{rest}` (only `Rabin k` is supported)"
                        )))
                    }
                }
            }
            "Acceptance" => {
                acceptance_seen = true;
            }
            "name" | "properties" | "tool" => {} // informational, ignored
            other => {
                return Err(Error::Unsupported(format!("HOA header `{other}:`")));
            }
        }
    }

    let states = states.ok_or_else(|| Error::Unsupported("missing `States:` header".into()))?;
    let start = start.ok_or_else(|| Error::Unsupported("missing `Start:` header".into()))?;
    let ap = ap.ok_or_else(|| Error::Unsupported("missing `AP:` header".into()))?;
    let n_pairs = n_pairs.ok_or_else(|| Error::Unsupported("missing `acc-name:` header".into()))?;
    if !acceptance_seen {
        return Err(Error::Unsupported("missing `Acceptance:` header".into()));
    }
    let body_line =
        body_line.ok_or_else(|| Error::Unsupported("missing `--BODY--` marker".into()))?;

    let alphabet = Alphabet::full(ap.len(), DEFAULT_ALPHABET_CAP)?;
    let mut transitions: Vec<Vec<Option<u32>>> = vec![vec![None; alphabet.len()]; states];
    let mut pairs = vec![
        RabinPair {
            fin: BTreeSet::new(),
            inf: BTreeSet::new(),
        };
        n_pairs
    ];

    let mut current: Option<u32> = None;
    for (idx, raw) in lines.iter().enumerate().skip(body_line) {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "--END--" {
            break;
        }
        if let Some(rest) = line.strip_prefix("State:") {
            let rest = rest.trim();
            let (state_part, acc_part) = match rest.split_once('{') {
                Some((s, a)) => {
                    let a = a
                        .strip_suffix('}')
                        .ok_or_else(|| parse_err(line_no, "unterminated acceptance set"))?;
                    (s.trim(), Some(a))
                }
                None => (rest, None),
            };
            if state_part.contains('"') || state_part.contains('[') {
                return Err(Error::Unsupported(
                    "state labels on `State:` lines are not supported".into(),
                ));
            }
            let id: u32 = state_part
                .parse()
                .map_err(|_| parse_err(line_no, "invalid state id"))?;
            if id as usize >= states {
                return Err(parse_err(line_no, "state id out of declared range"));
            }
            if let Some(acc) = acc_part {
                for token in acc.split_whitespace() {
                    let set: usize = token
                        .parse()
                        .map_err(|_| parse_err(line_no, "invalid acceptance set index"))?;
                    if set / 2 >= n_pairs {
                        return Err(parse_err(line_no, "acceptance set outside declared pairs"));
                    }
                    if set.is_multiple_of(2) {
                        pairs[set / 2].fin.insert(id);
                    } else {
                        pairs[set / 2].inf.insert(id);
                    }
                }
            }
            current = Some(id);
            continue;
        }
        // Edge line: [label] destination
        let state = current.ok_or_else(|| parse_err(line_no, "edge before any `State:` line"))?;
        let rest = line
            .strip_prefix('[')
            .ok_or_else(|| Error::Unsupported(format!("unlabeled edge at line {line_no}")))?;
        let (label_text, dest_text) = rest
            .split_once(']')
            .ok_or_else(|| parse_err(line_no, "unterminated edge label"))?;
        let dest_text = dest_text.trim();
        if dest_text.contains('{') {
            return Err(Error::Unsupported(
                "transition-based acceptance marks are not supported".into(),
            ));
        }
        if dest_text.split_whitespace().count() != 1 {
            return Err(Error::Unsupported(format!(
                "nondeterministic edge (multiple destinations) at line {line_no}"
            )));
        }
        let dest: u32 = dest_text
            .parse()
            .map_err(|_| parse_err(line_no, "invalid edge destination"))?;
        if dest as usize >= states {
            return Err(parse_err(line_no, "edge destination out of range"));
        }
        let label = parse_label(label_text, line_no)?;
        for (sym_idx, &sym) in alphabet.symbols().iter().enumerate() {
            if label.eval(sym) {
                if transitions[state as usize][sym_idx].is_some() {
                    return Err(Error::Unsupported(format!(
                        "nondeterministic transitions from state {state} on symbol index {sym_idx}"
                    )));
                }
                transitions[state as usize][sym_idx] = Some(dest);
            }
        }
    }

    let mut resolved = Vec::with_capacity(states);
    for (state, row) in transitions.into_iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (sym_idx, entry) in row.into_iter().enumerate() {
            match entry {
                Some(dest) => out.push(dest),
                None => {
                    return Err(Error::Unsupported(format!(
                    "incomplete transitions: state {state} has no edge on symbol index {sym_idx}"
                )))
                }
            }
        }
        resolved.push(out);
    }

    let dra = RabinAutomaton {
        ap,
        alphabet,
        transitions: resolved,
        initial: start,
        pairs,
    };
    dra.validate()?;
    Ok(dra)
}
