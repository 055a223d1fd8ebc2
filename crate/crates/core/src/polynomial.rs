//! Sparse multivariate polynomials: the targets the constructors approximate.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::series::{ExponentVector, Layout, TruncatedSeries};

/// A polynomial as a list of `(coefficient, exponents)` monomials.
///
/// Exponent vectors are pairwise distinct, coefficients nonzero, and the
/// monomials kept in graded-lexicographic order. Degree and sparsity are
/// computed on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePolynomial {
    n: usize,
    monomials: Vec<(f64, ExponentVector)>,
}

impl SparsePolynomial {
    /// Builds a polynomial, merging repeated exponents and dropping zeros.
    pub fn new<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, ExponentVector)>,
    {
        let mut acc: BTreeMap<ExponentVector, f64> = BTreeMap::new();
        for (c, e) in terms {
            if e.n() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: e.n(),
                    context: "monomial exponent length",
                });
            }
            if !c.is_finite() {
                return Err(Error::Invalid(format!("non-finite coefficient {c}")));
            }
            *acc.entry(e).or_insert(0.0) += c;
        }
        let monomials = acc
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(e, c)| (c, e))
            .collect();
        Ok(Self { n, monomials })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            monomials: Vec::new(),
        }
    }

    /// `coefficient · x^r`.
    pub fn monomial(coefficient: f64, r: ExponentVector) -> Result<Self> {
        let n = r.n();
        Self::new(n, [(coefficient, r)])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total degree (0 for constants and the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.monomials
            .iter()
            .map(|(_, e)| e.degree())
            .max()
            .unwrap_or(0)
    }

    /// Number of monomials, `c`.
    pub fn sparsity(&self) -> usize {
        self.monomials.len()
    }

    pub fn monomials(&self) -> &[(f64, ExponentVector)] {
        &self.monomials
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degrees = self.monomials.iter().map(|(_, e)| e.degree());
        match degrees.next() {
            Some(d) => degrees.all(|x| x == d),
            None => true,
        }
    }

    pub fn coefficient(&self, e: &ExponentVector) -> f64 {
        self.monomials
            .iter()
            .find(|(_, m)| m == e)
            .map_or(0.0, |(c, _)| *c)
    }

    /// The constant term (zero when absent).
    pub fn constant_term(&self) -> f64 {
        self.coefficient(&ExponentVector::zeros(self.n))
    }

    /// The same polynomial viewed in `n ≥ self.n()` variables.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        if n < self.n {
            return Err(Error::Invalid(format!(
                "polynomial uses {} variables; cannot shrink to {n}",
                self.n
            )));
        }
        let monomials = self
            .monomials
            .iter()
            .map(|(c, e)| {
                let mut v = e.as_slice().to_vec();
                v.resize(n, 0);
                (*c, ExponentVector::new(v))
            })
            .collect();
        Ok(Self { n, monomials })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.monomials.iter().map(|(c, e)| c * e.eval(x)).sum()
    }

    /// Each monomial as its own single-term polynomial.
    pub fn split_monomials(&self) -> Vec<SparsePolynomial> {
        self.monomials
            .iter()
            .map(|(c, e)| Self {
                n: self.n,
                monomials: vec![(*c, e.clone())],
            })
            .collect()
    }

    /// Converts to a series with cap `cap ≥ degree`.
    pub fn to_series(&self, cap: u32) -> Result<TruncatedSeries> {
        if cap < self.degree() {
            return Err(Error::CapTooSmall {
                cap,
                degree: self.degree(),
            });
        }
        let layout = Arc::new(Layout::new(self.n, cap)?);
        self.to_series_on(&layout)
    }

    /// Converts onto an existing layout, which must hold every monomial.
    pub fn to_series_on(&self, layout: &Arc<Layout>) -> Result<TruncatedSeries> {
        if layout.n() != self.n {
            return Err(Error::Dimension {
                expected: layout.n(),
                got: self.n,
                context: "polynomial variable count",
            });
        }
        if layout.cap() < self.degree() {
            return Err(Error::CapTooSmall {
                cap: layout.cap(),
                degree: self.degree(),
            });
        }
        TruncatedSeries::from_terms(layout, self.monomials.iter().map(|(c, e)| (e.clone(), *c)))
    }

    /// The polynomial formed by a series' nonzero terms.
    pub fn from_series(s: &TruncatedSeries) -> Self {
        Self {
            n: s.n(),
            monomials: s.terms().map(|(e, c)| (c, e.clone())).collect(),
        }
    }
}

impl fmt::Display for SparsePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.monomials.is_empty() {
            return f.write_str("0");
        }
        for (k, (c, e)) in self.monomials.iter().enumerate() {
            let mag = c.abs();
            match (k, *c < 0.0) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let mut first = true;
            if mag != 1.0 || e.degree() == 0 {
                write!(f, "{mag:?}")?;
                first = false;
            }
            for (i, p) in e.support() {
                if !first {
                    f.write_str("*")?;
                }
                first = false;
                write!(f, "x{}", i + 1)?;
                if p > 1 {
                    write!(f, "^{p}")?;
                }
            }
        }
        Ok(())
    }
}

impl FromStr for SparsePolynomial {
    type Err = Error;

    /// Parses signed terms such as `3*x1^2*x2 - x3 + 0.5`. Whitespace is
    /// ignored; the variable count is the largest index mentioned.
    fn from_str(s: &str) -> Result<Self> {
        let src: Vec<(usize, u8)> = s
            .bytes()
            .enumerate()
            .filter(|(_, b)| !b.is_ascii_whitespace())
            .collect();
        let mut p = Parser { src: &src, pos: 0 };
        let raw = p.polynomial()?;
        let n = raw
            .iter()
            .flat_map(|(_, vars)| vars.iter().map(|(i, _)| *i))
            .max()
            .unwrap_or(0);
        let terms = raw.into_iter().map(|(c, vars)| {
            let mut e = vec![0u32; n];
            for (i, pow) in vars {
                e[i - 1] += pow;
            }
            (c, ExponentVector::new(e))
        });
        SparsePolynomial::new(n, terms)
    }
}

type RawTerm = (f64, Vec<(usize, u32)>);

struct Parser<'a> {
    src: &'a [(usize, u8)],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).map(|&(_, b)| b)
    }

    fn offset(&self) -> usize {
        self.src
            .get(self.pos)
            .map_or_else(|| self.src.last().map_or(0, |&(o, _)| o + 1), |&(o, _)| o)
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn polynomial(&mut self) -> Result<Vec<RawTerm>> {
        if self.src.is_empty() {
            return self.fail("empty polynomial");
        }
        let mut terms = Vec::new();
        let mut first = true;
        while self.peek().is_some() {
            let sign = match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    1.0
                }
                Some(b'-') => {
                    self.pos += 1;
                    -1.0
                }
                _ if first => 1.0,
                _ => return self.fail("expected `+` or `-` between terms"),
            };
            first = false;
            let (c, vars) = self.term()?;
            terms.push((sign * c, vars));
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<RawTerm> {
        let mut coeff = 1.0;
        let mut vars = Vec::new();
        loop {
            match self.peek() {
                Some(b'x') => {
                    self.pos += 1;
                    let idx = self.integer()?;
                    if idx == 0 {
                        return self.fail("variables are numbered from x1");
                    }
                    let mut pow = 1;
                    if self.peek() == Some(b'^') {
                        self.pos += 1;
                        pow = self.integer()? as u32;
                    }
                    vars.push((idx, pow));
                }
                Some(b) if b.is_ascii_digit() || b == b'.' => coeff *= self.number()?,
                _ => return self.fail("expected a number or a variable"),
            }
            if self.peek() == Some(b'*') {
                self.pos += 1;
            } else {
                return Ok((coeff, vars));
            }
        }
    }

    fn integer(&mut self) -> Result<usize> {
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.fail("expected an integer");
        }
        let text: String = self.src[start..self.pos].iter().map(|&(_, b)| b as char).collect();
        text.parse().or_else(|_| self.fail("integer out of range"))
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_digit() || b == b'.') {
            self.pos += 1;
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        let text: String = self.src[start..self.pos].iter().map(|&(_, b)| b as char).collect();
        match text.parse::<f64>() {
            Ok(v) => Ok(v),
            Err(_) => {
                self.pos = start;
                self.fail(format!("malformed number `{text}`"))
            }
        }
    }
}
