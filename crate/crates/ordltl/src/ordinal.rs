//! Ordinals below ω^ω in Cantor normal form.
//!
//! An [`Ordinal`] is a finite sum `ω^{e_1}·c_1 + … + ω^{e_k}·c_k` with strictly
//! decreasing exponents and positive coefficients; the empty sum is 0. This is
//! exactly the range of word lengths the rest of the crate works with, so the
//! arithmetic here is deliberately small: comparison, addition, left
//! subtraction, successor/limit tests and multiplication by ω on the right.
//! General ordinal multiplication and exponentiation are out of scope.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// An ordinal strictly below ω^ω, kept in Cantor normal form.
///
/// The derived `Ord` agrees with the ordinal order: term sequences are
/// compared lexicographically by (exponent, coefficient), and a proper prefix
/// precedes any extension of it.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Ordinal {
    /// `(exponent, coefficient)` pairs, exponents strictly decreasing, all
    /// coefficients ≥ 1.
    terms: Vec<(u32, u64)>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrdinalError {
    /// `left_subtract(α, γ)` was called with α > γ.
    #[error("cannot left-subtract {minuend} from the smaller ordinal {subtrahend}")]
    Underflow { minuend: String, subtrahend: String },
    /// `times_omega(0)` has no leading term to promote.
    #[error("times_omega is undefined on 0")]
    TimesOmegaOnZero,
    /// Text input violated the grammar documented on [`Ordinal::from_str`].
    #[error("invalid ordinal text at position {pos}: {message}")]
    Parse { pos: usize, message: String },
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn finite(n: u64) -> Self {
        if n == 0 {
            Self::zero()
        } else {
            Ordinal { terms: vec![(0, n)] }
        }
    }

    pub fn omega() -> Self {
        Self::omega_pow(1)
    }

    /// ω^e (so `omega_pow(0)` is 1).
    pub fn omega_pow(e: u32) -> Self {
        Ordinal { terms: vec![(e, 1)] }
    }

    /// Builds an ordinal from `(exponent, coefficient)` terms, which must
    /// already be canonical. Panics on malformed input; callers constructing
    /// terms programmatically should prefer [`Ordinal::add`].
    pub fn from_terms(terms: Vec<(u32, u64)>) -> Self {
        for window in terms.windows(2) {
            assert!(
                window[0].0 > window[1].0,
                "exponents must be strictly decreasing"
            );
        }
        assert!(terms.iter().all(|&(_, c)| c >= 1), "coefficients must be ≥ 1");
        Ordinal { terms }
    }

    pub fn terms(&self) -> &[(u32, u64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True iff the ordinal is a limit: nonzero with no finite part.
    pub fn is_limit(&self) -> bool {
        match self.terms.last() {
            None => false,
            Some(&(e, _)) => e > 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self.terms.first() {
            None => true,
            Some(&(e, _)) => e == 0,
        }
    }

    /// The exponent of the leading term; 0 for finite ordinals (including 0).
    pub fn degree(&self) -> u32 {
        self.terms.first().map_or(0, |&(e, _)| e)
    }

    /// Three-way ordinal comparison. Identical to the derived `Ord`; kept as a
    /// named operation because call sites read better with it.
    pub fn compare(&self, other: &Ordinal) -> Ordering {
        self.cmp(other)
    }

    /// Ordinal addition. Terms of `self` below the leading exponent of `rhs`
    /// are absorbed; equal leading exponents merge their coefficients.
    ///
    /// Panics on coefficient overflow (u64); inputs at that scale are outside
    /// anything this crate constructs.
    pub fn add(&self, rhs: &Ordinal) -> Ordinal {
        let Some(&(lead, lead_coeff)) = rhs.terms.first() else {
            return self.clone();
        };
        let mut terms: Vec<(u32, u64)> = self
            .terms
            .iter()
            .copied()
            .take_while(|&(e, _)| e >= lead)
            .collect();
        match terms.last_mut() {
            Some(last) if last.0 == lead => {
                last.1 = last
                    .1
                    .checked_add(lead_coeff)
                    .expect("ordinal coefficient overflow");
                terms.extend_from_slice(&rhs.terms[1..]);
            }
            _ => terms.extend_from_slice(&rhs.terms),
        }
        Ordinal { terms }
    }

    /// The unique β with `self + β = total`. Errors if `self > total`.
    pub fn left_subtract(&self, total: &Ordinal) -> Result<Ordinal, OrdinalError> {
        match self.compare(total) {
            Ordering::Greater => Err(OrdinalError::Underflow {
                minuend: total.to_string(),
                subtrahend: self.to_string(),
            }),
            Ordering::Equal => Ok(Ordinal::zero()),
            Ordering::Less => {
                let mut k = 0;
                while k < self.terms.len()
                    && k < total.terms.len()
                    && self.terms[k] == total.terms[k]
                {
                    k += 1;
                }
                if k == self.terms.len() {
                    // self is a strict prefix of total: the remainder is the
                    // rest of total's terms.
                    return Ok(Ordinal {
                        terms: total.terms[k..].to_vec(),
                    });
                }
                let (se, sc) = self.terms[k];
                let (te, tc) = total.terms[k];
                if se < te {
                    // self's tail is absorbed wholesale by total's next term.
                    Ok(Ordinal {
                        terms: total.terms[k..].to_vec(),
                    })
                } else {
                    debug_assert!(se == te && sc < tc, "ordering contract violated");
                    let mut terms = vec![(te, tc - sc)];
                    terms.extend_from_slice(&total.terms[k + 1..]);
                    Ok(Ordinal { terms })
                }
            }
        }
    }

    /// The least ordinal strictly greater than `self`.
    pub fn succ(&self) -> Ordinal {
        self.add(&Ordinal::finite(1))
    }

    /// Right multiplication by ω: `β·ω = ω^{e+1}` where e is the leading
    /// exponent of β. Errors on β = 0.
    pub fn times_omega(&self) -> Result<Ordinal, OrdinalError> {
        match self.terms.first() {
            None => Err(OrdinalError::TimesOmegaOnZero),
            Some(&(e, _)) => Ok(Ordinal::omega_pow(
                e.checked_add(1).expect("ordinal exponent overflow"),
            )),
        }
    }

    /// `self · n` for a finite n. For n ≥ 1 this is ω^e·(c·n) followed by the
    /// tail of `self` (the inner copies' tails are absorbed).
    pub(crate) fn times_finite(&self, n: u64) -> Ordinal {
        if n == 0 || self.is_zero() {
            return Ordinal::zero();
        }
        let (e, c) = self.terms[0];
        let mut terms = vec![(e, c.checked_mul(n).expect("ordinal coefficient overflow"))];
        terms.extend_from_slice(&self.terms[1..]);
        Ordinal { terms }
    }

    /// Splits a position `pos < self·ω` into the unique `(n, ρ)` with
    /// `pos = self·n + ρ` and `ρ < self`. Used for indexing into ω-power
    /// words. Panics if `self` is 0; errors if `pos ≥ self·ω`.
    pub(crate) fn split_block(&self, pos: &Ordinal) -> Result<(u64, Ordinal), OrdinalError> {
        assert!(!self.is_zero(), "block length must be positive");
        let (e, c) = self.terms[0];
        if pos.degree() > e {
            return Err(OrdinalError::Underflow {
                minuend: pos.to_string(),
                subtrahend: self.times_omega().unwrap().to_string(),
            });
        }
        if pos.compare(self) == Ordering::Less {
            return Ok((0, pos.clone()));
        }
        // pos ≥ self, hence leading exponents agree; divide the leading
        // coefficients and adjust downward if the tails forbid the quotient.
        debug_assert_eq!(pos.degree(), e);
        let d = pos.terms[0].1;
        let mut n = d / c;
        if n * c == d {
            let self_tail = Ordinal {
                terms: self.terms[1..].to_vec(),
            };
            let pos_tail = Ordinal {
                terms: pos.terms[1..].to_vec(),
            };
            if self_tail.compare(&pos_tail) == Ordering::Greater {
                n -= 1;
            }
        }
        debug_assert!(n >= 1);
        let rho = self.times_finite(n).left_subtract(pos)?;
        debug_assert!(rho.compare(self) == Ordering::Less);
        Ok((n, rho))
    }
}

impl fmt::Display for Ordinal {
    /// Canonical text form: `0`, `5`, `w`, `w^2`, `w^2*3+w*2+7`. The `*` is
    /// omitted for coefficient 1 and `^` for exponent 1.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, &(e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            match e {
                0 => write!(f, "{c}")?,
                1 => {
                    write!(f, "w")?;
                    if c > 1 {
                        write!(f, "*{c}")?;
                    }
                }
                _ => {
                    write!(f, "w^{e}")?;
                    if c > 1 {
                        write!(f, "*{c}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ordinal({self})")
    }
}

impl FromStr for Ordinal {
    type Err = OrdinalError;

    /// Parses the canonical text form:
    ///
    /// ```text
    /// ordinal := "0" | term ("+" term)*
    /// term    := "w" ("^" nat)? ("*" nat)? | nat
    /// nat     := [0-9]+
    /// ```
    ///
    /// Terms must appear with strictly decreasing exponents and nonzero
    /// coefficients; whitespace is not permitted.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = s.as_bytes();
        let mut pos = 0;
        let err = |pos: usize, message: &str| OrdinalError::Parse {
            pos: pos + 1,
            message: message.to_string(),
        };
        let parse_nat = |pos: &mut usize| -> Result<u64, OrdinalError> {
            let start = *pos;
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
            if start == *pos {
                return Err(err(start, "expected a number"));
            }
            s[start..*pos]
                .parse::<u64>()
                .map_err(|_| err(start, "number out of range"))
        };

        if s == "0" {
            return Ok(Ordinal::zero());
        }
        let mut terms: Vec<(u32, u64)> = Vec::new();
        loop {
            let (e, c) = if pos < bytes.len() && bytes[pos] == b'w' {
                pos += 1;
                let e = if pos < bytes.len() && bytes[pos] == b'^' {
                    pos += 1;
                    let n = parse_nat(&mut pos)?;
                    u32::try_from(n).map_err(|_| err(pos, "exponent out of range"))?
                } else {
                    1
                };
                let c = if pos < bytes.len() && bytes[pos] == b'*' {
                    pos += 1;
                    parse_nat(&mut pos)?
                } else {
                    1
                };
                (e, c)
            } else {
                (0, parse_nat(&mut pos)?)
            };
            if c == 0 {
                return Err(err(pos, "zero coefficient"));
            }
            if let Some(&(prev, _)) = terms.last() {
                if prev <= e {
                    return Err(err(pos, "exponents must be strictly decreasing"));
                }
            }
            terms.push((e, c));
            if pos == bytes.len() {
                break;
            }
            if bytes[pos] != b'+' {
                return Err(err(pos, "expected '+' or end of input"));
            }
            pos += 1;
        }
        Ok(Ordinal { terms })
    }
}
