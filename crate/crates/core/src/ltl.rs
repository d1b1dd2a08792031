//! LTL formulas: parsing, negation normal form, and direct semantics on
//! ultimately periodic words.
//!
//! The lasso evaluator is the independent oracle used to test the automata
//! pipeline: it computes satisfaction by per-position fixpoints over the
//! finite position graph of `prefix . cycle^omega`, which is exact for
//! ultimately periodic words.

use std::fmt;

use crate::error::{Error, Result};
use crate::props::{PropSet, PropTable};

/// LTL abstract syntax tree over named atomic propositions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Formula {
        Formula::Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: Formula, b: Formula) -> Formula {
        Formula::Release(Box::new(a), Box::new(b))
    }

    pub fn eventually(f: Formula) -> Formula {
        Formula::Eventually(Box::new(f))
    }

    pub fn always(f: Formula) -> Formula {
        Formula::Always(Box::new(f))
    }

    /// Atom names in order of first appearance.
    pub fn atoms(&self) -> Vec<String> {
        let mut out = Vec::new();
        fn walk(f: &Formula, out: &mut Vec<String>) {
            match f {
                Formula::Atom(name) => {
                    if !out.iter().any(|n| n == name) {
                        out.push(name.clone());
                    }
                }
                Formula::True | Formula::False => {}
                Formula::Not(a)
                | Formula::Next(a)
                | Formula::Eventually(a)
                | Formula::Always(a) => walk(a, out),
                Formula::And(a, b)
                | Formula::Or(a, b)
                | Formula::Implies(a, b)
                | Formula::Until(a, b)
                | Formula::Release(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        walk(self, &mut out);
        out
    }

    /// Checks that every atom is declared in `table`.
    pub fn check_atoms(&self, table: &PropTable) -> Result<()> {
        for name in self.atoms() {
            if table.index_of(&name).is_none() {
                return Err(Error::Validation(format!(
                    "formula references undeclared proposition `{name}`"
                )));
            }
        }
        Ok(())
    }

    /// Negation normal form: negations pushed onto atoms; `implies`,
    /// `eventually` and `always` rewritten into and/or/until/release/next.
    pub fn to_nnf(&self) -> Formula {
        fn nnf(f: &Formula, positive: bool) -> Formula {
            match f {
                Formula::True => {
                    if positive {
                        Formula::True
                    } else {
                        Formula::False
                    }
                }
                Formula::False => {
                    if positive {
                        Formula::False
                    } else {
                        Formula::True
                    }
                }
                Formula::Atom(name) => {
                    let atom = Formula::Atom(name.clone());
                    if positive {
                        atom
                    } else {
                        Formula::not(atom)
                    }
                }
                Formula::Not(a) => nnf(a, !positive),
                Formula::And(a, b) => {
                    if positive {
                        Formula::and(nnf(a, true), nnf(b, true))
                    } else {
                        Formula::or(nnf(a, false), nnf(b, false))
                    }
                }
                Formula::Or(a, b) => {
                    if positive {
                        Formula::or(nnf(a, true), nnf(b, true))
                    } else {
                        Formula::and(nnf(a, false), nnf(b, false))
                    }
                }
                Formula::Implies(a, b) => {
                    if positive {
                        Formula::or(nnf(a, false), nnf(b, true))
                    } else {
                        Formula::and(nnf(a, true), nnf(b, false))
                    }
                }
                Formula::Next(a) => Formula::next(nnf(a, positive)),
                Formula::Until(a, b) => {
                    if positive {
                        Formula::until(nnf(a, true), nnf(b, true))
                    } else {
                        Formula::release(nnf(a, false), nnf(b, false))
                    }
                }
                Formula::Release(a, b) => {
                    if positive {
                        Formula::release(nnf(a, true), nnf(b, true))
                    } else {
                        Formula::until(nnf(a, false), nnf(b, false))
                    }
                }
                Formula::Eventually(a) => {
                    if positive {
                        Formula::until(Formula::True, nnf(a, true))
                    } else {
                        Formula::release(Formula::False, nnf(a, false))
                    }
                }
                Formula::Always(a) => {
                    if positive {
                        Formula::release(Formula::False, nnf(a, true))
                    } else {
                        Formula::until(Formula::True, nnf(a, false))
                    }
                }
            }
        }
        nnf(self, true)
    }

    /// True when negations appear only directly on atoms and no
    /// implies/eventually/always nodes remain.
    pub fn is_nnf(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => true,
            Formula::Not(a) => matches!(**a, Formula::Atom(_)),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Until(a, b)
            | Formula::Release(a, b) => a.is_nnf() && b.is_nnf(),
            Formula::Next(a) => a.is_nnf(),
            Formula::Implies(_, _) | Formula::Eventually(_) | Formula::Always(_) => false,
        }
    }
}

// Precedence levels for printing: higher binds tighter.
fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Implies(_, _) => 1,
        Formula::Or(_, _) => 2,
        Formula::And(_, _) => 3,
        Formula::Until(_, _) | Formula::Release(_, _) => 4,
        Formula::Not(_) | Formula::Next(_) | Formula::Eventually(_) | Formula::Always(_) => 5,
        Formula::True | Formula::False | Formula::Atom(_) => 6,
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Binary operators are right-associative, so a left child at the same
        // precedence level needs parentheses while a right child does not.
        fn child(
            out: &mut fmt::Formatter<'_>,
            c: &Formula,
            parent: u8,
            is_left: bool,
        ) -> fmt::Result {
            let p = precedence(c);
            let parens = p < parent || (p == parent && is_left);
            if parens {
                write!(out, "({c})")
            } else {
                write!(out, "{c}")
            }
        }
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(name) => write!(f, "{name}"),
            Formula::Not(a) => {
                let p = precedence(self);
                if precedence(a) < p {
                    write!(f, "!({a})")
                } else {
                    write!(f, "!{a}")
                }
            }
            Formula::Next(a) => unary(f, "X", a),
            Formula::Eventually(a) => unary(f, "F", a),
            Formula::Always(a) => unary(f, "G", a),
            Formula::And(a, b) => {
                child(f, a, 3, true)?;
                write!(f, " && ")?;
                child(f, b, 3, false)
            }
            Formula::Or(a, b) => {
                child(f, a, 2, true)?;
                write!(f, " || ")?;
                child(f, b, 2, false)
            }
            Formula::Implies(a, b) => {
                child(f, a, 1, true)?;
                write!(f, " -> ")?;
                child(f, b, 1, false)
            }
            Formula::Until(a, b) => {
                child(f, a, 4, true)?;
                write!(f, " U ")?;
                child(f, b, 4, false)
            }
            Formula::Release(a, b) => {
                child(f, a, 4, true)?;
                write!(f, " R ")?;
                child(f, b, 4, false)
            }
        }
    }
}

fn unary(f: &mut fmt::Formatter<'_>, op: &str, a: &Formula) -> fmt::Result {
    if precedence(a) < 5 {
        write!(f, "{op}({a})")
    } else {
        write!(f, "{op} {a}")
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    True,
    False,
    Not,
    Next,
    Eventually,
    Always,
    Until,
    Release,
    And,
    Or,
    Implies,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(Token, usize)>> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '(' => {
                tokens.push((Token::LParen, i));
                i += 1;
            }
            ')' => {
                tokens.push((Token::RParen, i));
                i += 1;
            }
            '!' => {
                tokens.push((Token::Not, i));
                i += 1;
            }
            '&' => {
                let len = if bytes.get(i + 1) == Some(&b'&') {
                    2
                } else {
                    1
                };
                tokens.push((Token::And, i));
                i += len;
            }
            '|' => {
                let len = if bytes.get(i + 1) == Some(&b'|') {
                    2
                } else {
                    1
                };
                tokens.push((Token::Or, i));
                i += len;
            }
            '-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    tokens.push((Token::Implies, i));
                    i += 2;
                } else {
                    return Err(Error::Syntax {
                        position: i,
                        message: "expected `->`".into(),
                    });
                }
            }
            '[' => {
                if bytes.get(i + 1) == Some(&b']') {
                    tokens.push((Token::Always, i));
                    i += 2;
                } else {
                    return Err(Error::Syntax {
                        position: i,
                        message: "expected `[]`".into(),
                    });
                }
            }
            '<' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    tokens.push((Token::Eventually, i));
                    i += 2;
                } else {
                    return Err(Error::Syntax {
                        position: i,
                        message: "expected `<>`".into(),
                    });
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                let word = &text[start..i];
                let token = match word {
                    "true" => Token::True,
                    "false" => Token::False,
                    "U" => Token::Until,
                    "R" => Token::Release,
                    "X" => Token::Next,
                    "F" => Token::Eventually,
                    "G" => Token::Always,
                    _ => Token::Ident(word.to_string()),
                };
                tokens.push((token, start));
            }
            other => {
                return Err(Error::Syntax {
                    position: i,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|&(_, p)| p)
            .unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            position: self.here(),
            message: message.into(),
        })
    }

    // implies := or ('->' implies)?      right-associative, loosest
    fn implies(&mut self) -> Result<Formula> {
        let lhs = self.or()?;
        if self.peek() == Some(&Token::Implies) {
            self.bump();
            let rhs = self.implies()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn or(&mut self) -> Result<Formula> {
        let lhs = self.and()?;
        if self.peek() == Some(&Token::Or) {
            self.bump();
            let rhs = self.or()?;
            Ok(Formula::or(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn and(&mut self) -> Result<Formula> {
        let lhs = self.until()?;
        if self.peek() == Some(&Token::And) {
            self.bump();
            let rhs = self.and()?;
            Ok(Formula::and(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    // until := unary (('U'|'R') until)?   binds tighter than && per grammar
    fn until(&mut self) -> Result<Formula> {
        let lhs = self.unary()?;
        match self.peek() {
            Some(Token::Until) => {
                self.bump();
                let rhs = self.until()?;
                Ok(Formula::until(lhs, rhs))
            }
            Some(Token::Release) => {
                self.bump();
                let rhs = self.until()?;
                Ok(Formula::release(lhs, rhs))
            }
            _ => Ok(lhs),
        }
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek() {
            Some(Token::Not) => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Some(Token::Next) => {
                self.bump();
                Ok(Formula::next(self.unary()?))
            }
            Some(Token::Eventually) => {
                self.bump();
                Ok(Formula::eventually(self.unary()?))
            }
            Some(Token::Always) => {
                self.bump();
                Ok(Formula::always(self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula> {
        match self.bump() {
            Some(Token::LParen) => {
                let inner = self.implies()?;
                match self.bump() {
                    Some(Token::RParen) => Ok(inner),
                    _ => {
                        self.pos -= 1;
                        self.err("expected `)`")
                    }
                }
            }
            Some(Token::True) => Ok(Formula::True),
            Some(Token::False) => Ok(Formula::False),
            Some(Token::Ident(name)) => Ok(Formula::Atom(name)),
            Some(_) => {
                self.pos -= 1;
                self.err("expected a formula")
            }
            None => {
                self.pos -= 1;
                self.err("unexpected end of input")
            }
        }
    }
}

/// Parses a formula string.
///
/// Unary operators bind tightest, then `U`/`R` (right-associative), then
/// `&&`, `||`, `->` in decreasing binding strength, all right-associative.
/// `[]` and `<>` are aliases for `G` and `F`.
pub fn parse_ltl(text: &str) -> Result<Formula> {
    let tokens = lex(text)?;
    if tokens.is_empty() {
        return Err(Error::Syntax {
            position: 0,
            message: "empty formula".into(),
        });
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let formula = parser.implies()?;
    if parser.pos != parser.tokens.len() {
        return parser.err("trailing input after formula");
    }
    Ok(formula)
}

/// An ultimately periodic word `prefix . cycle^omega` over subsets of the
/// proposition table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LassoWord {
    pub prefix: Vec<PropSet>,
    pub cycle: Vec<PropSet>,
}

impl LassoWord {
    pub fn new(prefix: Vec<PropSet>, cycle: Vec<PropSet>) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::Input("lasso cycle must be nonempty".into()));
        }
        Ok(LassoWord { prefix, cycle })
    }

    /// Symbol at absolute position `i`.
    pub fn at(&self, i: usize) -> PropSet {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }

    fn positions(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    fn succ(&self, i: usize) -> usize {
        if i + 1 < self.positions() {
            i + 1
        } else {
            self.prefix.len()
        }
    }
}

// Flattened formula arena for the evaluator.
enum EvalNode {
    True,
    False,
    Atom(usize),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Implies(usize, usize),
    Next(usize),
    Until(usize, usize),
    Release(usize, usize),
    Eventually(usize),
    Always(usize),
}

fn flatten(f: &Formula, table: &PropTable, arena: &mut Vec<EvalNode>) -> Result<usize> {
    let node = match f {
        Formula::True => EvalNode::True,
        Formula::False => EvalNode::False,
        Formula::Atom(name) => {
            EvalNode::Atom(table.index_of(name).ok_or_else(|| {
                Error::Validation(format!("proposition `{name}` is not declared"))
            })?)
        }
        Formula::Not(a) => EvalNode::Not(flatten(a, table, arena)?),
        Formula::Next(a) => EvalNode::Next(flatten(a, table, arena)?),
        Formula::Eventually(a) => EvalNode::Eventually(flatten(a, table, arena)?),
        Formula::Always(a) => EvalNode::Always(flatten(a, table, arena)?),
        Formula::And(a, b) => EvalNode::And(flatten(a, table, arena)?, flatten(b, table, arena)?),
        Formula::Or(a, b) => EvalNode::Or(flatten(a, table, arena)?, flatten(b, table, arena)?),
        Formula::Implies(a, b) => {
            EvalNode::Implies(flatten(a, table, arena)?, flatten(b, table, arena)?)
        }
        Formula::Until(a, b) => {
            EvalNode::Until(flatten(a, table, arena)?, flatten(b, table, arena)?)
        }
        Formula::Release(a, b) => {
            EvalNode::Release(flatten(a, table, arena)?, flatten(b, table, arena)?)
        }
    };
    arena.push(node);
    Ok(arena.len() - 1)
}

/// Decides whether `prefix . cycle^omega` satisfies `f`.
///
/// Truth values are computed bottom-up per subformula over the lasso's
/// position graph; until-like operators take a least fixpoint and
/// release-like operators a greatest fixpoint, which matches the recursive
/// semantics exactly on ultimately periodic words.
pub fn eval_lasso(f: &Formula, word: &LassoWord, table: &PropTable) -> Result<bool> {
    let mut arena = Vec::new();
    let root = flatten(f, table, &mut arena)?;
    let n = word.positions();
    // values[node][pos]; children have smaller indices (post-order push).
    let mut values: Vec<Vec<bool>> = Vec::with_capacity(arena.len());
    for (idx, node) in arena.iter().enumerate() {
        let row = match node {
            EvalNode::True => vec![true; n],
            EvalNode::False => vec![false; n],
            EvalNode::Atom(p) => (0..n).map(|i| word.at(i).contains(*p)).collect(),
            EvalNode::Not(a) => (0..n).map(|i| !values[*a][i]).collect(),
            EvalNode::And(a, b) => (0..n).map(|i| values[*a][i] && values[*b][i]).collect(),
            EvalNode::Or(a, b) => (0..n).map(|i| values[*a][i] || values[*b][i]).collect(),
            EvalNode::Implies(a, b) => (0..n).map(|i| !values[*a][i] || values[*b][i]).collect(),
            EvalNode::Next(a) => (0..n).map(|i| values[*a][word.succ(i)]).collect(),
            EvalNode::Until(a, b) => {
                lfp(n, word, |i, next| values[*b][i] || (values[*a][i] && next))
            }
            EvalNode::Eventually(a) => lfp(n, word, |i, next| values[*a][i] || next),
            EvalNode::Release(a, b) => {
                gfp(n, word, |i, next| values[*b][i] && (values[*a][i] || next))
            }
            EvalNode::Always(a) => gfp(n, word, |i, next| values[*a][i] && next),
        };
        debug_assert_eq!(idx, values.len());
        values.push(row);
    }
    Ok(values[root][0])
}

// Least fixpoint of v[i] = step(i, v[succ(i)]), starting from all-false.
fn lfp(n: usize, word: &LassoWord, step: impl Fn(usize, bool) -> bool) -> Vec<bool> {
    let mut v = vec![false; n];
    loop {
        let mut changed = false;
        for i in (0..n).rev() {
            if !v[i] && step(i, v[word.succ(i)]) {
                v[i] = true;
                changed = true;
            }
        }
        if !changed {
            return v;
        }
    }
}

// Greatest fixpoint, starting from all-true.
fn gfp(n: usize, word: &LassoWord, step: impl Fn(usize, bool) -> bool) -> Vec<bool> {
    let mut v = vec![true; n];
    loop {
        let mut changed = false;
        for i in 0..n {
            if v[i] && !step(i, v[word.succ(i)]) {
                v[i] = false;
                changed = true;
            }
        }
        if !changed {
            return v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_ab() -> PropTable {
        PropTable::new(["a", "b"]).unwrap()
    }

    fn sym(names: &[&str], table: &PropTable) -> PropSet {
        table.set_of(names.iter().copied()).unwrap()
    }

    #[test]
    fn parse_nested_unary() {
        let f = parse_ltl("G F pickup").unwrap();
        assert_eq!(
            f,
            Formula::always(Formula::eventually(Formula::atom("pickup")))
        );
    }

    #[test]
    fn until_binds_tighter_than_and() {
        let f = parse_ltl("a U b && c").unwrap();
        assert_eq!(
            f,
            Formula::and(
                Formula::until(Formula::atom("a"), Formula::atom("b")),
                Formula::atom("c")
            )
        );
    }

    #[test]
    fn parse_surveillance_conjunct() {
        let f = parse_ltl("G(pickup && !observe9 -> X(!pickup U event7))").unwrap();
        let expected = Formula::always(Formula::implies(
            Formula::and(
                Formula::atom("pickup"),
                Formula::not(Formula::atom("observe9")),
            ),
            Formula::next(Formula::until(
                Formula::not(Formula::atom("pickup")),
                Formula::atom("event7"),
            )),
        ));
        assert_eq!(f, expected);
    }

    #[test]
    fn parse_aliases_and_literals() {
        assert_eq!(parse_ltl("[] a").unwrap(), parse_ltl("G a").unwrap());
        assert_eq!(parse_ltl("<> a").unwrap(), parse_ltl("F a").unwrap());
        assert_eq!(
            parse_ltl("a & b | c").unwrap(),
            parse_ltl("a && b || c").unwrap()
        );
        assert_eq!(parse_ltl("true").unwrap(), Formula::True);
    }

    #[test]
    fn parse_errors_carry_position() {
        assert!(matches!(
            parse_ltl(""),
            Err(Error::Syntax { position: 0, .. })
        ));
        match parse_ltl("a U") {
            Err(Error::Syntax { position, .. }) => assert_eq!(position, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(parse_ltl("a # b").is_err());
        assert!(parse_ltl("(a U b").is_err());
        assert!(parse_ltl("a b").is_err());
    }

    #[test]
    fn nnf_not_eventually_is_always_not() {
        let f = parse_ltl("!F a").unwrap().to_nnf();
        assert_eq!(
            f,
            Formula::release(Formula::False, Formula::not(Formula::atom("a")))
        );
    }

    #[test]
    fn nnf_until_release_duality() {
        let f = parse_ltl("!(a U b)").unwrap().to_nnf();
        assert_eq!(
            f,
            Formula::release(
                Formula::not(Formula::atom("a")),
                Formula::not(Formula::atom("b"))
            )
        );
    }

    #[test]
    fn nnf_is_idempotent_on_nnf_input() {
        let f = parse_ltl("(!a R b) && (c U (X !d))").unwrap();
        let nnf = f.to_nnf();
        assert!(nnf.is_nnf());
        assert_eq!(nnf.to_nnf(), nnf);
        assert_eq!(nnf, f); // already in NNF
    }

    #[test]
    fn eval_eventually_on_empty_word_is_false() {
        let t = table_ab();
        let w = LassoWord::new(vec![], vec![PropSet::EMPTY]).unwrap();
        let f = parse_ltl("F a").unwrap();
        assert!(!eval_lasso(&f, &w, &t).unwrap());
    }

    #[test]
    fn eval_recurring_conjunction() {
        let t = table_ab();
        let w = LassoWord::new(vec![], vec![sym(&["a"], &t), sym(&["b"], &t)]).unwrap();
        let f = parse_ltl("G F a && G F b").unwrap();
        assert!(eval_lasso(&f, &w, &t).unwrap());
    }

    #[test]
    fn eval_until_blocked_by_prefix() {
        // o_0 = {p}, then {q}^omega: p holds before q, so !p U q fails.
        let t = PropTable::new(["p", "q"]).unwrap();
        let w = LassoWord::new(vec![sym(&["p"], &t)], vec![sym(&["q"], &t)]).unwrap();
        let f = parse_ltl("!p U q").unwrap();
        assert!(!eval_lasso(&f, &w, &t).unwrap());
        // Sanity: the dual with a benign prefix holds.
        let w2 = LassoWord::new(vec![PropSet::EMPTY], vec![sym(&["q"], &t)]).unwrap();
        assert!(eval_lasso(&f, &w2, &t).unwrap());
    }

    #[test]
    fn eval_rejects_undeclared_atom() {
        let t = table_ab();
        let w = LassoWord::new(vec![], vec![PropSet::EMPTY]).unwrap();
        assert!(eval_lasso(&parse_ltl("zzz").unwrap(), &w, &t).is_err());
    }

    #[test]
    fn lasso_requires_nonempty_cycle() {
        assert!(LassoWord::new(vec![PropSet::EMPTY], vec![]).is_err());
    }
}
