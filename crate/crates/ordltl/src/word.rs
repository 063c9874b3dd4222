//! Finitely presented transfinite words.
//!
//! A [`Word`] is built from single letters, finite concatenation and ω-power,
//! which is enough to present any "nested lasso" word. Every word has length
//! at least 1 and below ω^ω; a word whose presentation nests ω-powers to
//! depth k has length below ω^{k+1}.
//!
//! Words normalize on construction: nested concatenations are flattened and
//! one-element concatenations collapse. Equality is structural equality of
//! the normalized presentation, not equality of the denoted words.
//!
//! The JSON interchange format is
//! `{"letter": ["p","q"]}` | `{"cat": [word, …]}` | `{"omega": word}`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ordinal::Ordinal;
use crate::syntax::Proposition;

/// One position's worth of content: the set of propositions that hold there.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Letter(BTreeSet<Proposition>);

impl Letter {
    pub fn new(props: impl IntoIterator<Item = Proposition>) -> Self {
        Letter(props.into_iter().collect())
    }

    /// Convenience constructor from literal names; panics on invalid names.
    pub fn of(names: &[&str]) -> Self {
        Letter(
            names
                .iter()
                .map(|n| Proposition::new(*n).expect("valid proposition name"))
                .collect(),
        )
    }

    pub fn contains(&self, p: &Proposition) -> bool {
        self.0.contains(p)
    }

    pub fn props(&self) -> impl Iterator<Item = &Proposition> {
        self.0.iter()
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, p) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

/// A transfinite word of length in [1, ω^ω).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[derive(Serialize, Deserialize)]
#[serde(try_from = "WordRepr", into = "WordRepr")]
pub enum Word {
    /// A single letter; length 1.
    Single(Letter),
    /// Concatenation, left to right. Normalized: ≥ 2 parts, none of which
    /// is itself a `Cat`.
    Cat(Vec<Word>),
    /// The body repeated ω times; length `times_omega(length(body))`.
    OmegaPow(Box<Word>),
}

/// Errors from word indexing and deserialization.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum WordError {
    #[error("position {position} is out of range for a word of length {length}")]
    PositionOutOfRange { position: String, length: String },
    #[error("concatenation must have at least one part")]
    EmptyCat,
    #[error("invalid proposition name {0:?}")]
    InvalidProposition(String),
}

impl Word {
    pub fn single(letter: Letter) -> Word {
        Word::Single(letter)
    }

    /// Concatenation with normalization: flattens nested `Cat`s and
    /// collapses a one-part concatenation. Panics on an empty sequence
    /// (a word always has at least one letter).
    pub fn cat(parts: Vec<Word>) -> Word {
        let mut flat = Vec::with_capacity(parts.len());
        for part in parts {
            match part {
                Word::Cat(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => panic!("Word::cat requires at least one part"),
            1 => flat.pop().expect("one element"),
            _ => Word::Cat(flat),
        }
    }

    pub fn omega(body: Word) -> Word {
        Word::OmegaPow(Box::new(body))
    }

    /// The word's length, an ordinal in [1, ω^ω).
    pub fn length(&self) -> Ordinal {
        match self {
            Word::Single(_) => Ordinal::finite(1),
            Word::Cat(parts) => parts
                .iter()
                .fold(Ordinal::zero(), |acc, p| acc.add(&p.length())),
            Word::OmegaPow(body) => body
                .length()
                .times_omega()
                .expect("word length is never zero"),
        }
    }

    /// Maximum ω-power nesting depth. A level-k word has length below
    /// ω^{k+1}.
    pub fn level(&self) -> u32 {
        match self {
            Word::Single(_) => 0,
            Word::Cat(parts) => parts.iter().map(Word::level).max().unwrap_or(0),
            Word::OmegaPow(body) => 1 + body.level(),
        }
    }

    /// The letter at position `pos`, for `pos < length(self)`.
    pub fn letter_at(&self, pos: &Ordinal) -> Result<&Letter, WordError> {
        match self {
            Word::Single(letter) => {
                if pos.is_zero() {
                    Ok(letter)
                } else {
                    Err(self.out_of_range(pos))
                }
            }
            Word::Cat(parts) => {
                let mut rest = pos.clone();
                for part in parts {
                    let len = part.length();
                    if rest < len {
                        return part.letter_at(&rest);
                    }
                    rest = len
                        .left_subtract(&rest)
                        .expect("rest ≥ len was just checked");
                }
                Err(self.out_of_range(pos))
            }
            Word::OmegaPow(body) => {
                let beta = body.length();
                let (_, rho) = beta
                    .split_block(pos)
                    .map_err(|_| self.out_of_range(pos))?;
                body.letter_at(&rho)
            }
        }
    }

    /// The suffix starting at position `pos` (inclusive), as a word.
    ///
    /// Key law: inside an ω-power, the suffix at any block boundary is the
    /// ω-power itself — `suffix_from(OmegaPow(v), length(v)·n) = OmegaPow(v)`.
    pub fn suffix_from(&self, pos: &Ordinal) -> Result<Word, WordError> {
        if pos.is_zero() {
            return Ok(self.clone());
        }
        match self {
            Word::Single(_) => Err(self.out_of_range(pos)),
            Word::Cat(parts) => {
                let mut rest = pos.clone();
                for (k, part) in parts.iter().enumerate() {
                    let len = part.length();
                    if rest < len {
                        let mut out = vec![part.suffix_from(&rest)?];
                        out.extend(parts[k + 1..].iter().cloned());
                        return Ok(Word::cat(out));
                    }
                    rest = len
                        .left_subtract(&rest)
                        .expect("rest ≥ len was just checked");
                }
                Err(self.out_of_range(pos))
            }
            Word::OmegaPow(body) => {
                let beta = body.length();
                let (_, rho) = beta
                    .split_block(pos)
                    .map_err(|_| self.out_of_range(pos))?;
                if rho.is_zero() {
                    Ok(self.clone())
                } else {
                    Ok(Word::cat(vec![body.suffix_from(&rho)?, self.clone()]))
                }
            }
        }
    }

    fn out_of_range(&self, pos: &Ordinal) -> WordError {
        WordError::PositionOutOfRange {
            position: pos.to_string(),
            length: self.length().to_string(),
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Word::Single(letter) => write!(f, "{letter}"),
            Word::Cat(parts) => {
                for (k, part) in parts.iter().enumerate() {
                    if k > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{part}")?;
                }
                Ok(())
            }
            Word::OmegaPow(body) => write!(f, "({body})^w"),
        }
    }
}

/// Serialization shadow matching the JSON interchange format.
#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum WordRepr {
    Letter(Vec<String>),
    Cat(Vec<WordRepr>),
    Omega(Box<WordRepr>),
}

impl TryFrom<WordRepr> for Word {
    type Error = WordError;

    fn try_from(repr: WordRepr) -> Result<Word, WordError> {
        match repr {
            WordRepr::Letter(names) => {
                let mut props = BTreeSet::new();
                for name in names {
                    let p = Proposition::new(name.as_str())
                        .map_err(|_| WordError::InvalidProposition(name.clone()))?;
                    props.insert(p);
                }
                Ok(Word::Single(Letter(props)))
            }
            WordRepr::Cat(parts) => {
                if parts.is_empty() {
                    return Err(WordError::EmptyCat);
                }
                let words = parts
                    .into_iter()
                    .map(Word::try_from)
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Word::cat(words))
            }
            WordRepr::Omega(body) => Ok(Word::omega(Word::try_from(*body)?)),
        }
    }
}

impl From<Word> for WordRepr {
    fn from(word: Word) -> WordRepr {
        match word {
            Word::Single(letter) => {
                WordRepr::Letter(letter.0.into_iter().map(|p| p.name().to_owned()).collect())
            }
            Word::Cat(parts) => WordRepr::Cat(parts.into_iter().map(WordRepr::from).collect()),
            Word::OmegaPow(body) => WordRepr::Omega(Box::new(WordRepr::from(*body))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ord(s: &str) -> Ordinal {
        s.parse().expect("valid ordinal literal")
    }

    fn w_pq() -> Word {
        Word::cat(vec![
            Word::single(Letter::of(&["p"])),
            Word::single(Letter::of(&["q"])),
        ])
    }

    /// (Single{p} · (Single{q})^ω)^ω — length ω².
    fn nested() -> Word {
        Word::omega(Word::cat(vec![
            Word::single(Letter::of(&["p"])),
            Word::omega(Word::single(Letter::of(&["q"]))),
        ]))
    }

    #[test]
    fn length_examples() {
        assert_eq!(w_pq().length(), ord("2"));
        assert_eq!(
            Word::omega(Word::single(Letter::of(&["q"]))).length(),
            ord("w")
        );
        // Inner block has length 1 + ω = ω; the outer power gives ω·ω = ω².
        assert_eq!(nested().length(), ord("w^2"));
    }

    #[test]
    fn letter_at_examples() {
        assert_eq!(w_pq().letter_at(&ord("1")).unwrap(), &Letter::of(&["q"]));
        // Position ω is the start of the second inner block.
        assert_eq!(
            nested().letter_at(&ord("w")).unwrap(),
            &Letter::of(&["p"])
        );
        assert_eq!(nested().letter_at(&ord("0")).unwrap(), &Letter::of(&["p"]));
        assert_eq!(nested().letter_at(&ord("1")).unwrap(), &Letter::of(&["q"]));
        assert_eq!(
            nested().letter_at(&ord("w*3+5")).unwrap(),
            &Letter::of(&["q"])
        );
        assert!(w_pq().letter_at(&ord("2")).is_err());
        assert!(nested().letter_at(&ord("w^2")).is_err());
    }

    #[test]
    fn suffix_examples() {
        assert_eq!(
            w_pq().suffix_from(&ord("1")).unwrap(),
            Word::single(Letter::of(&["q"]))
        );
        // Tail invariance at block boundaries.
        let w = Word::omega(w_pq());
        assert_eq!(w.suffix_from(&ord("2")).unwrap(), w);
        assert_eq!(w.suffix_from(&ord("4")).unwrap(), w);
        assert_eq!(
            w.suffix_from(&ord("1")).unwrap(),
            Word::cat(vec![Word::single(Letter::of(&["q"])), w.clone()])
        );
        // Outer blocks of `nested` start at ω·n, so ω·2 is a block boundary.
        assert_eq!(nested().suffix_from(&ord("w*2")).unwrap(), nested());
        assert!(w_pq().suffix_from(&ord("2")).is_err());
    }

    #[test]
    fn suffix_length_law() {
        let words = [w_pq(), nested(), Word::omega(w_pq())];
        let positions = ["0", "1", "2", "3", "w", "w+1", "w*2"];
        for w in &words {
            let len = w.length();
            for p in positions {
                let pos = ord(p);
                if pos >= len {
                    continue;
                }
                let suffix = w.suffix_from(&pos).unwrap();
                assert_eq!(
                    pos.add(&suffix.length()),
                    len,
                    "suffix law for {w} at {pos}"
                );
            }
        }
    }

    #[test]
    fn cat_normalizes() {
        let a = Word::single(Letter::of(&["p"]));
        let b = Word::single(Letter::of(&["q"]));
        let nested_cat = Word::cat(vec![
            Word::cat(vec![a.clone(), b.clone()]),
            a.clone(),
        ]);
        assert_eq!(nested_cat, Word::Cat(vec![a.clone(), b.clone(), a.clone()]));
        assert_eq!(Word::cat(vec![a.clone()]), a);
    }

    #[test]
    fn level_counts_nesting() {
        assert_eq!(w_pq().level(), 0);
        assert_eq!(Word::omega(w_pq()).level(), 1);
        assert_eq!(nested().level(), 2);
    }

    #[test]
    fn json_round_trip() {
        let w = nested();
        let json = serde_json::to_string(&w).unwrap();
        assert_eq!(
            json,
            r#"{"omega":{"cat":[{"letter":["p"]},{"omega":{"letter":["q"]}}]}}"#
        );
        let back: Word = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn json_rejects_bad_input() {
        assert!(serde_json::from_str::<Word>(r#"{"cat":[]}"#).is_err());
        assert!(serde_json::from_str::<Word>(r#"{"letter":["P"]}"#).is_err());
        // A non-normalized cat-of-cat normalizes on intake.
        let w: Word =
            serde_json::from_str(r#"{"cat":[{"cat":[{"letter":[]},{"letter":["p"]}]},{"letter":[]}]}"#)
                .unwrap();
        assert_eq!(
            w,
            Word::Cat(vec![
                Word::single(Letter::default()),
                Word::single(Letter::of(&["p"])),
                Word::single(Letter::default()),
            ])
        );
    }
}
