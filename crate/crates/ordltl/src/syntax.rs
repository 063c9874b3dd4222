//! Formula syntax: the core AST, the surface parser and the printer.
//!
//! The core language has six constructors — `T`, atoms, `!`, `&`, `X` and the
//! strict `U`. Everything else on the surface (`F` as a constant, `|`, `->`,
//! `<->`, `F`, `G`, `R`, `WX`) is rewritten into the core at parse time and
//! never shows up in an AST. `Until` is strict: `a U b` requires `b` to hold
//! strictly after the current position.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// An atomic proposition. Names match `[a-z][a-z0-9_]*`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Proposition(String);

impl Proposition {
    pub fn new(name: impl Into<String>) -> Result<Self, ParseError> {
        let name = name.into();
        let mut chars = name.chars();
        let head_ok = chars.next().is_some_and(|c| c.is_ascii_lowercase());
        let tail_ok = chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
        if head_ok && tail_ok {
            Ok(Proposition(name))
        } else {
            Err(ParseError {
                pos: 1,
                message: format!("invalid proposition name {name:?}"),
            })
        }
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A core formula. Construct surface forms through the helper constructors
/// ([`Formula::or`], [`Formula::eventually`], …), which perform the
/// desugaring.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    Atom(Proposition),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
}

impl Formula {
    /// Convenience constructor for tests and examples. Panics on an invalid
    /// name; use [`Proposition::new`] when the name is not a literal.
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(Proposition::new(name).expect("valid proposition name"))
    }

    // An associated constructor, deliberately named like its connective
    // (`Formula::not` beside `Formula::and`, `Formula::until`, …).
    #[allow(clippy::should_implement_trait)]
    pub fn not(phi: Formula) -> Formula {
        Formula::Not(Box::new(phi))
    }

    pub fn and(lhs: Formula, rhs: Formula) -> Formula {
        Formula::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn next(phi: Formula) -> Formula {
        Formula::Next(Box::new(phi))
    }

    pub fn until(lhs: Formula, rhs: Formula) -> Formula {
        Formula::Until(Box::new(lhs), Box::new(rhs))
    }

    /// `⊥ ≡ ¬⊤`.
    pub fn falsum() -> Formula {
        Formula::not(Formula::True)
    }

    /// `α ∨ β ≡ ¬(¬α ∧ ¬β)`.
    pub fn or(lhs: Formula, rhs: Formula) -> Formula {
        Formula::not(Formula::and(Formula::not(lhs), Formula::not(rhs)))
    }

    /// `α → β ≡ ¬(α ∧ ¬β)`.
    pub fn implies(lhs: Formula, rhs: Formula) -> Formula {
        Formula::not(Formula::and(lhs, Formula::not(rhs)))
    }

    /// `α ↔ β ≡ (α → β) ∧ (β → α)`.
    pub fn iff(lhs: Formula, rhs: Formula) -> Formula {
        Formula::and(
            Formula::implies(lhs.clone(), rhs.clone()),
            Formula::implies(rhs, lhs),
        )
    }

    /// Reflexive eventually: `F α ≡ α ∨ (⊤ U α)`.
    pub fn eventually(phi: Formula) -> Formula {
        Formula::or(phi.clone(), Formula::until(Formula::True, phi))
    }

    /// Reflexive always: `G α ≡ ¬F¬α`.
    pub fn always(phi: Formula) -> Formula {
        Formula::not(Formula::eventually(Formula::not(phi)))
    }

    /// `α R β ≡ ¬(¬α U ¬β)`.
    pub fn release(lhs: Formula, rhs: Formula) -> Formula {
        Formula::not(Formula::until(Formula::not(lhs), Formula::not(rhs)))
    }

    /// Weak next: `WX α ≡ ¬X⊤ ∨ Xα`. The textbook `¬X¬α` is wrong here —
    /// at the last position of a word both `X¬α` and `Xα` are false.
    pub fn weak_next(phi: Formula) -> Formula {
        Formula::or(
            Formula::not(Formula::next(Formula::True)),
            Formula::next(phi),
        )
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::Atom(_) => 1,
            Formula::Not(a) | Formula::Next(a) => 1 + a.size(),
            Formula::And(a, b) | Formula::Until(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// The least set containing `self` and closed under immediate subterms.
    pub fn subformulas(&self) -> BTreeSet<Formula> {
        let mut out = BTreeSet::new();
        self.collect_subformulas(&mut out);
        out
    }

    fn collect_subformulas(&self, out: &mut BTreeSet<Formula>) {
        if !out.insert(self.clone()) {
            return;
        }
        match self {
            Formula::True | Formula::Atom(_) => {}
            Formula::Not(a) | Formula::Next(a) => a.collect_subformulas(out),
            Formula::And(a, b) | Formula::Until(a, b) => {
                a.collect_subformulas(out);
                b.collect_subformulas(out);
            }
        }
    }

    /// All propositions occurring in the formula.
    pub fn propositions(&self) -> BTreeSet<Proposition> {
        let mut out = BTreeSet::new();
        self.collect_propositions(&mut out);
        out
    }

    fn collect_propositions(&self, out: &mut BTreeSet<Proposition>) {
        match self {
            Formula::True => {}
            Formula::Atom(p) => {
                out.insert(p.clone());
            }
            Formula::Not(a) | Formula::Next(a) => a.collect_propositions(out),
            Formula::And(a, b) | Formula::Until(a, b) => {
                a.collect_propositions(out);
                b.collect_propositions(out);
            }
        }
    }

    /// Parses surface syntax into a core AST. See the module documentation of
    /// the crate for the grammar.
    pub fn parse(text: &str) -> Result<Formula, ParseError> {
        Parser::new(text)?.parse_formula()
    }

    /// Renders the core AST back to surface syntax using only core operators.
    /// `parse(render(φ))` is structurally equal to `φ`.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

/// Syntax error with a 1-based character position into the input.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("parse error at position {pos}: {message}")]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

// Binding strengths for the printer, loosest to tightest. Core formulas only
// use the And/Until/Unary levels.
const PREC_AND: u8 = 4;
const PREC_UNTIL: u8 = 5;
const PREC_UNARY: u8 = 6;

impl Formula {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = match self {
            Formula::True | Formula::Atom(_) => 7,
            Formula::Not(_) | Formula::Next(_) => PREC_UNARY,
            Formula::Until(_, _) => PREC_UNTIL,
            Formula::And(_, _) => PREC_AND,
        };
        let parens = prec < min;
        if parens {
            write!(f, "(")?;
        }
        match self {
            Formula::True => write!(f, "T")?,
            Formula::Atom(p) => write!(f, "{p}")?,
            Formula::Not(a) => {
                write!(f, "!")?;
                a.fmt_prec(f, PREC_UNARY)?;
            }
            Formula::Next(a) => {
                write!(f, "X ")?;
                a.fmt_prec(f, PREC_UNARY)?;
            }
            // `U` is right-associative: the left operand must be a unary.
            Formula::Until(a, b) => {
                a.fmt_prec(f, PREC_UNARY)?;
                write!(f, " U ")?;
                b.fmt_prec(f, PREC_UNTIL)?;
            }
            // `&` is left-associative: the right operand binds tighter.
            Formula::And(a, b) => {
                a.fmt_prec(f, PREC_AND)?;
                write!(f, " & ")?;
                b.fmt_prec(f, PREC_UNTIL)?;
            }
        }
        if parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    TopKw,    // "T"
    BottomKw, // "F" when not used as the eventually operator
    Bang,
    Amp,
    Pipe,
    Arrow,
    DoubleArrow,
    NextKw,
    UntilKw,
    ReleaseKw,
    AlwaysKw,
    WeakNextKw,
    LParen,
    RParen,
}

impl Token {
    /// Could this token begin a formula? Decides whether a preceding `F` is
    /// the eventually operator or the constant false.
    fn starts_formula(&self) -> bool {
        matches!(
            self,
            Token::Ident(_)
                | Token::TopKw
                | Token::BottomKw
                | Token::Bang
                | Token::NextKw
                | Token::AlwaysKw
                | Token::WeakNextKw
                | Token::LParen
        )
    }
}

struct Parser {
    /// `(1-based character position, token)`.
    tokens: Vec<(usize, Token)>,
    cursor: usize,
    end_pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        let mut tokens = Vec::new();
        let chars: Vec<char> = text.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let pos = i + 1;
            let c = chars[i];
            match c {
                c if c.is_whitespace() => {
                    i += 1;
                    continue;
                }
                '!' => tokens.push((pos, Token::Bang)),
                '&' => tokens.push((pos, Token::Amp)),
                '|' => tokens.push((pos, Token::Pipe)),
                '(' => tokens.push((pos, Token::LParen)),
                ')' => tokens.push((pos, Token::RParen)),
                '-' => {
                    if chars.get(i + 1) == Some(&'>') {
                        tokens.push((pos, Token::Arrow));
                        i += 1;
                    } else {
                        return Err(ParseError {
                            pos,
                            message: "expected \"->\"".into(),
                        });
                    }
                }
                '<' => {
                    if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') {
                        tokens.push((pos, Token::DoubleArrow));
                        i += 2;
                    } else {
                        return Err(ParseError {
                            pos,
                            message: "expected \"<->\"".into(),
                        });
                    }
                }
                'T' => tokens.push((pos, Token::TopKw)),
                'F' => tokens.push((pos, Token::BottomKw)),
                'X' => tokens.push((pos, Token::NextKw)),
                'U' => tokens.push((pos, Token::UntilKw)),
                'R' => tokens.push((pos, Token::ReleaseKw)),
                'G' => tokens.push((pos, Token::AlwaysKw)),
                'W' => {
                    if chars.get(i + 1) == Some(&'X') {
                        tokens.push((pos, Token::WeakNextKw));
                        i += 1;
                    } else {
                        return Err(ParseError {
                            pos,
                            message: "unknown operator 'W' (did you mean \"WX\"?)".into(),
                        });
                    }
                }
                c if c.is_ascii_lowercase() => {
                    let start = i;
                    while i < chars.len()
                        && (chars[i].is_ascii_lowercase()
                            || chars[i].is_ascii_digit()
                            || chars[i] == '_')
                    {
                        i += 1;
                    }
                    let name: String = chars[start..i].iter().collect();
                    tokens.push((start + 1, Token::Ident(name)));
                    continue;
                }
                other => {
                    return Err(ParseError {
                        pos,
                        message: format!("unexpected character {other:?}"),
                    });
                }
            }
            i += 1;
        }
        Ok(Parser {
            tokens,
            cursor: 0,
            end_pos: chars.len() + 1,
        })
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.cursor).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.tokens
            .get(self.cursor)
            .map_or(self.end_pos, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.cursor).map(|(_, t)| t.clone());
        if t.is_some() {
            self.cursor += 1;
        }
        t
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&token) {
            self.cursor += 1;
            Ok(())
        } else {
            Err(ParseError {
                pos: self.pos(),
                message: format!("expected {what}"),
            })
        }
    }

    fn parse_formula(&mut self) -> Result<Formula, ParseError> {
        let formula = self.parse_iff()?;
        if self.cursor < self.tokens.len() {
            return Err(ParseError {
                pos: self.pos(),
                message: "unexpected trailing input".into(),
            });
        }
        Ok(formula)
    }

    fn parse_iff(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_impl()?;
        while self.peek() == Some(&Token::DoubleArrow) {
            self.cursor += 1;
            let rhs = self.parse_impl()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_impl(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_or()?;
        while self.peek() == Some(&Token::Arrow) {
            self.cursor += 1;
            let rhs = self.parse_or()?;
            lhs = Formula::implies(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_and()?;
        while self.peek() == Some(&Token::Pipe) {
            self.cursor += 1;
            let rhs = self.parse_and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_until()?;
        while self.peek() == Some(&Token::Amp) {
            self.cursor += 1;
            let rhs = self.parse_until()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_until(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.parse_unary()?;
        match self.peek() {
            Some(Token::UntilKw) => {
                self.cursor += 1;
                let rhs = self.parse_until()?;
                Ok(Formula::until(lhs, rhs))
            }
            Some(Token::ReleaseKw) => {
                self.cursor += 1;
                let rhs = self.parse_until()?;
                Ok(Formula::release(lhs, rhs))
            }
            _ => Ok(lhs),
        }
    }

    fn parse_unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Token::Bang) => {
                self.cursor += 1;
                Ok(Formula::not(self.parse_unary()?))
            }
            Some(Token::NextKw) => {
                self.cursor += 1;
                Ok(Formula::next(self.parse_unary()?))
            }
            Some(Token::AlwaysKw) => {
                self.cursor += 1;
                Ok(Formula::always(self.parse_unary()?))
            }
            Some(Token::WeakNextKw) => {
                self.cursor += 1;
                Ok(Formula::weak_next(self.parse_unary()?))
            }
            // "F" is the eventually operator when a formula follows,
            // otherwise the constant false.
            Some(Token::BottomKw) => {
                self.cursor += 1;
                if self.peek().is_some_and(Token::starts_formula) {
                    Ok(Formula::eventually(self.parse_unary()?))
                } else {
                    Ok(Formula::falsum())
                }
            }
            _ => self.parse_atom(),
        }
    }

    fn parse_atom(&mut self) -> Result<Formula, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Some(Token::TopKw) => Ok(Formula::True),
            Some(Token::Ident(name)) => Ok(Formula::Atom(
                Proposition::new(name).map_err(|e| ParseError { pos, ..e })?,
            )),
            Some(Token::LParen) => {
                let inner = self.parse_iff()?;
                self.expect(Token::RParen, "closing parenthesis")?;
                Ok(inner)
            }
            Some(other) => Err(ParseError {
                pos,
                message: format!("unexpected token {other:?}"),
            }),
            None => Err(ParseError {
                pos,
                message: "unexpected end of input".into(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(name: &str) -> Formula {
        Formula::atom(name)
    }

    #[test]
    fn parse_atom_and_until() {
        assert_eq!(Formula::parse("p").unwrap(), p("p"));
        assert_eq!(
            Formula::parse("p U (q & !p)").unwrap(),
            Formula::until(p("p"), Formula::and(p("q"), Formula::not(p("p"))))
        );
    }

    #[test]
    fn parse_desugars_eventually() {
        // F p becomes ¬(¬p ∧ ¬(⊤ U p)).
        let expected = Formula::not(Formula::and(
            Formula::not(p("p")),
            Formula::not(Formula::until(Formula::True, p("p"))),
        ));
        assert_eq!(Formula::parse("F p").unwrap(), expected);
    }

    #[test]
    fn parse_desugars_weak_next() {
        let expected = Formula::or(
            Formula::not(Formula::next(Formula::True)),
            Formula::next(p("p")),
        );
        assert_eq!(Formula::parse("WX p").unwrap(), expected);
    }

    #[test]
    fn bare_f_is_false() {
        assert_eq!(Formula::parse("F").unwrap(), Formula::falsum());
        assert_eq!(
            Formula::parse("F & p").unwrap(),
            Formula::and(Formula::falsum(), p("p"))
        );
        // F followed by something that starts a formula is the operator.
        assert_eq!(
            Formula::parse("F F").unwrap(),
            Formula::eventually(Formula::falsum())
        );
    }

    #[test]
    fn until_is_right_associative() {
        assert_eq!(
            Formula::parse("p U q U r").unwrap(),
            Formula::until(p("p"), Formula::until(p("q"), p("r")))
        );
    }

    #[test]
    fn and_is_left_associative() {
        assert_eq!(
            Formula::parse("p & q & r").unwrap(),
            Formula::and(Formula::and(p("p"), p("q")), p("r"))
        );
    }

    #[test]
    fn precedence_layers() {
        // unary > U > & > | > -> > <->
        assert_eq!(
            Formula::parse("!p U q").unwrap(),
            Formula::until(Formula::not(p("p")), p("q"))
        );
        assert_eq!(
            Formula::parse("p U q & r").unwrap(),
            Formula::and(Formula::until(p("p"), p("q")), p("r"))
        );
        assert_eq!(
            Formula::parse("p | q & r").unwrap(),
            Formula::or(p("p"), Formula::and(p("q"), p("r")))
        );
        assert_eq!(
            Formula::parse("p -> q | r").unwrap(),
            Formula::implies(p("p"), Formula::or(p("q"), p("r")))
        );
        assert_eq!(
            Formula::parse("p <-> q -> r").unwrap(),
            Formula::iff(p("p"), Formula::implies(p("q"), p("r")))
        );
    }

    #[test]
    fn release_desugars() {
        assert_eq!(
            Formula::parse("p R q").unwrap(),
            Formula::not(Formula::until(Formula::not(p("p")), Formula::not(p("q"))))
        );
    }

    #[test]
    fn parse_errors_carry_positions() {
        let e = Formula::parse("p &").unwrap_err();
        assert_eq!(e.pos, 4);
        let e = Formula::parse("p @ q").unwrap_err();
        assert_eq!(e.pos, 3);
        let e = Formula::parse("(p").unwrap_err();
        assert_eq!(e.pos, 3);
        let e = Formula::parse("p)").unwrap_err();
        assert_eq!(e.pos, 2);
        let e = Formula::parse("W p").unwrap_err();
        assert_eq!(e.pos, 1);
    }

    #[test]
    fn render_examples() {
        assert_eq!(p("p").render(), "p");
        assert_eq!(Formula::until(Formula::True, p("p")).render(), "T U p");
        assert_eq!(
            Formula::until(Formula::until(p("p"), p("q")), p("r")).render(),
            "(p U q) U r"
        );
        assert_eq!(
            Formula::and(p("p"), Formula::and(p("q"), p("r"))).render(),
            "p & (q & r)"
        );
        assert_eq!(
            Formula::not(Formula::and(p("p"), p("q"))).render(),
            "!(p & q)"
        );
    }

    #[test]
    fn subformula_examples() {
        let f = Formula::until(p("p"), p("q"));
        let subs = f.subformulas();
        assert_eq!(subs.len(), 3);
        assert!(subs.contains(&p("p")) && subs.contains(&p("q")) && subs.contains(&f));

        let g = Formula::not(Formula::and(p("p"), Formula::next(p("q"))));
        let subs = g.subformulas();
        let expected: BTreeSet<_> = [
            g.clone(),
            Formula::and(p("p"), Formula::next(p("q"))),
            p("p"),
            Formula::next(p("q")),
            p("q"),
        ]
        .into_iter()
        .collect();
        assert_eq!(subs, expected);
    }

    #[test]
    fn size_counts_nodes() {
        assert_eq!(p("p").size(), 1);
        assert_eq!(Formula::parse("p U (q & !p)").unwrap().size(), 6);
    }

    #[test]
    fn proposition_validation() {
        assert!(Proposition::new("p_1").is_ok());
        assert!(Proposition::new("P").is_err());
        assert!(Proposition::new("").is_err());
        assert!(Proposition::new("1p").is_err());
    }
}
