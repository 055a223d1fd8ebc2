use std::fmt;
use std::sync::Arc;

use super::{ExponentVector, Layout, Nonlinearity};
use crate::error::{Error, Result};
use crate::numeric::{exact_sum, fmt_f64_17};

/// A multivariate power series truncated at total degree `cap`.
///
/// Coefficients are stored densely against a shared [`Layout`]; only the
/// nonzero ones are reported as terms. Values are immutable: every operation
/// returns a new series.
#[derive(Clone)]
pub struct TruncatedSeries {
    layout: Arc<Layout>,
    coeffs: Vec<f64>,
}

impl TruncatedSeries {
    /// The zero series in `n` variables with cap `cap`, on a fresh layout.
    pub fn new(n: usize, cap: u32) -> Result<Self> {
        Ok(Self::zero(&Arc::new(Layout::new(n, cap)?)))
    }

    pub fn zero(layout: &Arc<Layout>) -> Self {
        Self {
            layout: Arc::clone(layout),
            coeffs: vec![0.0; layout.len()],
        }
    }

    pub fn constant(layout: &Arc<Layout>, c: f64) -> Self {
        let mut s = Self::zero(layout);
        s.coeffs[0] = c;
        s
    }

    /// The coordinate series `x_{i+1}`. Empty when `cap == 0`.
    pub fn variable(layout: &Arc<Layout>, i: usize) -> Self {
        let mut s = Self::zero(layout);
        if layout.cap() >= 1 {
            let idx = layout
                .index_of(&ExponentVector::unit(layout.n(), i))
                .expect("variable index out of range");
            s.coeffs[idx] = 1.0;
        }
        s
    }

    /// Builds a series from terms, summing duplicates and dropping any term
    /// above the cap.
    pub fn from_terms<I>(layout: &Arc<Layout>, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ExponentVector, f64)>,
    {
        let mut s = Self::zero(layout);
        for (e, c) in terms {
            if e.n() != layout.n() {
                return Err(Error::Dimension {
                    expected: layout.n(),
                    got: e.n(),
                    context: "exponent vector length",
                });
            }
            if let Some(i) = layout.index_of(&e) {
                s.coeffs[i] += c;
            }
        }
        Ok(s)
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    pub fn cap(&self) -> u32 {
        self.layout.cap()
    }

    /// Dense coefficient vector in layout order (zeros included).
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, e: &ExponentVector) -> f64 {
        self.layout.index_of(e).map_or(0.0, |i| self.coeffs[i])
    }

    pub fn constant_term(&self) -> f64 {
        self.coeffs[0]
    }

    /// Nonzero terms in graded-lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&ExponentVector, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(move |(i, &c)| (self.layout.exponent(i), c))
    }

    /// Number of stored (nonzero) terms.
    pub fn len(&self) -> usize {
        self.coeffs.iter().filter(|&&c| c != 0.0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.layout.same_shape(&other.layout) {
            Ok(())
        } else {
            Err(Error::SeriesMismatch {
                n_left: self.n(),
                cap_left: self.cap(),
                n_right: other.n(),
                cap_right: other.cap(),
            })
        }
    }

    fn with_coeffs(&self, coeffs: Vec<f64>) -> Self {
        Self {
            layout: Arc::clone(&self.layout),
            coeffs,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.with_coeffs(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.with_coeffs(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    pub fn neg(&self) -> Self {
        self.with_coeffs(self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn scale(&self, k: f64) -> Self {
        self.with_coeffs(self.coeffs.iter().map(|c| c * k).collect())
    }

    /// Product truncated at the cap.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let layout = &self.layout;
        let cap = layout.cap();
        let nz_a: Vec<usize> = nonzero_indices(&self.coeffs);
        let nz_b: Vec<usize> = nonzero_indices(&other.coeffs);
        let mut out = vec![0.0; layout.len()];
        for &i in &nz_a {
            let a = self.coeffs[i];
            let limit = layout.prefix_len(cap - layout.degree(i));
            match layout.product_row(i) {
                Some(row) => {
                    for &j in nz_b.iter().take_while(|&&j| j < limit) {
                        out[row[j] as usize] += a * other.coeffs[j];
                    }
                }
                None => {
                    for &j in nz_b.iter().take_while(|&&j| j < limit) {
                        let k = layout.product_index(i, j).expect("index within cap");
                        out[k] += a * other.coeffs[j];
                    }
                }
            }
        }
        Ok(self.with_coeffs(out))
    }

    /// Taylor expansion of `σ(self)` truncated at the cap.
    ///
    /// `σ` is expanded about the constant term `c` of `self`, then composed
    /// with `self − c`, which has no constant term, so the result is exact
    /// through the cap.
    pub fn compose(&self, sigma: Nonlinearity) -> Result<Self> {
        if !sigma.is_analytic() {
            return Err(Error::NonAnalytic(sigma.name()));
        }
        let cap = self.cap() as usize;
        let center = self.constant_term();
        let tau = sigma.taylor(center, cap + 1)?;
        let mut t = self.clone();
        t.coeffs[0] = 0.0;

        let mut out = vec![0.0; self.coeffs.len()];
        out[0] = tau[0];
        if t.is_empty() {
            return Ok(self.with_coeffs(out));
        }
        let mut power = t.clone();
        for (j, &tj) in tau.iter().enumerate().skip(1) {
            if tj != 0.0 {
                for (o, p) in out.iter_mut().zip(&power.coeffs) {
                    *o += tj * p;
                }
            }
            if j < cap {
                power = power.mul(&t)?;
                if power.is_empty() {
                    break;
                }
            }
        }
        Ok(self.with_coeffs(out))
    }

    /// `Σ wᵢ·sᵢ + constant`, each coefficient summed exactly so that
    /// symmetric contributions cancel to a true zero.
    pub fn linear_combination(
        layout: &Arc<Layout>,
        parts: &[(f64, &TruncatedSeries)],
        constant: f64,
    ) -> Result<Self> {
        for (_, s) in parts {
            if !s.layout.same_shape(layout) {
                return Err(Error::SeriesMismatch {
                    n_left: layout.n(),
                    cap_left: layout.cap(),
                    n_right: s.n(),
                    cap_right: s.cap(),
                });
            }
        }
        let mut out = vec![0.0; layout.len()];
        let mut buf = Vec::with_capacity(parts.len() + 1);
        for (k, o) in out.iter_mut().enumerate() {
            buf.clear();
            if k == 0 && constant != 0.0 {
                buf.push(constant);
            }
            for (w, s) in parts {
                let c = s.coeffs[k];
                if c != 0.0 && *w != 0.0 {
                    buf.push(w * c);
                }
            }
            *o = match buf.len() {
                0 => 0.0,
                1 => buf[0],
                _ => exact_sum(buf.iter().copied()),
            };
        }
        Ok(Self {
            layout: Arc::clone(layout),
            coeffs: out,
        })
    }

    /// Re-expresses the series under a smaller cap.
    pub fn truncated(&self, cap: u32) -> Result<Self> {
        if cap > self.cap() {
            return Err(Error::Invalid(format!(
                "cannot raise cap from {} to {cap} by truncation",
                self.cap()
            )));
        }
        let layout = Arc::new(Layout::new(self.n(), cap)?);
        let len = layout.len();
        Ok(Self {
            layout,
            coeffs: self.coeffs[..len].to_vec(),
        })
    }

    /// The homogeneous slice of degree `d`, as a series on the same layout.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        let mut out = vec![0.0; self.coeffs.len()];
        let range = self.layout.degree_range(d);
        out[range.clone()].copy_from_slice(&self.coeffs[range]);
        self.with_coeffs(out)
    }

    /// Largest coefficient magnitude of degree `d`.
    pub fn degree_magnitude(&self, d: u32) -> f64 {
        self.coeffs[self.layout.degree_range(d)]
            .iter()
            .fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Lowest degree carrying a coefficient with magnitude above `tol`.
    pub fn lowest_degree(&self, tol: f64) -> Option<u32> {
        (0..=self.cap()).find(|&d| self.degree_magnitude(d) > tol)
    }

    /// Evaluates the truncated polynomial at `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms().map(|(e, c)| c * e.eval(x)).sum()
    }

    /// Maximum absolute coefficient difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// True when every coefficient pair agrees within `rel_tol` relative to
    /// the larger of the two series' max coefficient magnitudes.
    pub fn approx_eq(&self, other: &Self, rel_tol: f64) -> bool {
        let Ok(diff) = self.max_abs_diff(other) else {
            return false;
        };
        let scale = self
            .coeffs
            .iter()
            .chain(&other.coeffs)
            .fold(0.0f64, |m, c| m.max(c.abs()));
        diff <= rel_tol * scale.max(f64::MIN_POSITIVE)
    }

    /// Golden-file text form: one `e1,…,en : coefficient` line per nonzero
    /// term, graded-lex order, 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (e, c) in self.terms() {
            s.push_str(&format!("{e} : {}\n", fmt_f64_17(c)));
        }
        s
    }
}

impl fmt::Debug for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruncatedSeries(n={}, cap={}) {{", self.n(), self.cap())?;
        for (e, c) in self.terms() {
            write!(f, " {e:?}: {c},")?;
        }
        f.write_str(" }")
    }
}

fn nonzero_indices(c: &[f64]) -> Vec<usize> {
    c.iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(n: usize, cap: u32) -> Arc<Layout> {
        Arc::new(Layout::new(n, cap).unwrap())
    }

    fn ev(v: &[u32]) -> ExponentVector {
        ExponentVector::new(v.to_vec())
    }

    #[test]
    fn add_linear_terms() {
        let l = layout(2, 2);
        let x = TruncatedSeries::variable(&l, 0);
        let y = TruncatedSeries::variable(&l, 1);
        let s = x.add(&y).unwrap();
        let terms: Vec<_> = s.terms().map(|(e, c)| (e.clone(), c)).collect();
        assert_eq!(terms, vec![(ev(&[1, 0]), 1.0), (ev(&[0, 1]), 1.0)]);
    }

    #[test]
    fn additive_inverse_is_empty() {
        let l = layout(2, 3);
        let s = TruncatedSeries::from_terms(&l, [(ev(&[1, 1]), 0.3), (ev(&[0, 0]), -2.0)]).unwrap();
        let z = s.add(&s.neg()).unwrap();
        assert!(z.is_empty());
        assert_eq!(z.len(), 0);
    }

    #[test]
    fn like_terms_merge() {
        let l = layout(1, 4);
        let a = TruncatedSeries::from_terms(&l, [(ev(&[0]), 1.0), (ev(&[2]), 1.0)]).unwrap();
        let b = TruncatedSeries::from_terms(&l, [(ev(&[2]), 1.0)]).unwrap();
        let s = a.add(&b).unwrap();
        assert_eq!(s.coeff(&ev(&[0])), 1.0);
        assert_eq!(s.coeff(&ev(&[2])), 2.0);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let a = TruncatedSeries::new(2, 2).unwrap();
        let b = TruncatedSeries::new(2, 3).unwrap();
        let c = TruncatedSeries::new(3, 2).unwrap();
        assert!(matches!(a.add(&b), Err(Error::SeriesMismatch { .. })));
        assert!(matches!(a.mul(&c), Err(Error::SeriesMismatch { .. })));
    }

    #[test]
    fn binomial_product() {
        let l = layout(2, 2);
        let one = TruncatedSeries::constant(&l, 1.0);
        let x = TruncatedSeries::variable(&l, 0);
        let y = TruncatedSeries::variable(&l, 1);
        let p = one.add(&x).unwrap().mul(&one.add(&y).unwrap()).unwrap();
        assert_eq!(p.len(), 4);
        for e in [[0, 0], [1, 0], [0, 1], [1, 1]] {
            assert_eq!(p.coeff(&ev(&e)), 1.0);
        }
    }

    #[test]
    fn square_of_sum() {
        let l = layout(2, 2);
        let s = TruncatedSeries::variable(&l, 0)
            .add(&TruncatedSeries::variable(&l, 1))
            .unwrap();
        let sq = s.mul(&s).unwrap();
        // Brute-force expansion of (x + y)(x + y) by distributing term pairs.
        let mut expect = std::collections::BTreeMap::new();
        for a in [ev(&[1, 0]), ev(&[0, 1])] {
            for b in [ev(&[1, 0]), ev(&[0, 1])] {
                *expect.entry(a.add(&b)).or_insert(0.0) += 1.0;
            }
        }
        let got: std::collections::BTreeMap<_, _> =
            sq.terms().map(|(e, c)| (e.clone(), c)).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn truncation_drops_high_degree() {
        let l = layout(1, 1);
        let x = TruncatedSeries::variable(&l, 0);
        assert!(x.mul(&x).unwrap().is_empty());
    }

    #[test]
    fn compose_exp_of_constant_zero() {
        let l = layout(2, 3);
        let z = TruncatedSeries::zero(&l);
        let e = z.compose(Nonlinearity::Exp).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.constant_term(), 1.0);
    }

    #[test]
    fn compose_exp_of_sum() {
        let l = layout(2, 2);
        let s = TruncatedSeries::variable(&l, 0)
            .add(&TruncatedSeries::variable(&l, 1))
            .unwrap();
        let e = s.compose(Nonlinearity::Exp).unwrap();
        let expect = [
            ([0, 0], 1.0),
            ([1, 0], 1.0),
            ([0, 1], 1.0),
            ([2, 0], 0.5),
            ([1, 1], 1.0),
            ([0, 2], 0.5),
        ];
        assert_eq!(e.len(), expect.len());
        for (x, c) in expect {
            assert!((e.coeff(&ev(&x)) - c).abs() < 1e-15);
        }
    }

    #[test]
    fn compose_tanh_cubic() {
        let l = layout(1, 3);
        let x = TruncatedSeries::variable(&l, 0);
        let t = x.compose(Nonlinearity::Tanh).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.coeff(&ev(&[1])), 1.0);
        assert!((t.coeff(&ev(&[3])) + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn compose_recenters_on_constant() {
        // exp(1 + x) = e·exp(x)
        let l = layout(1, 5);
        let s = TruncatedSeries::constant(&l, 1.0)
            .add(&TruncatedSeries::variable(&l, 0))
            .unwrap();
        let e = s.compose(Nonlinearity::Exp).unwrap();
        let mut fact = 1.0;
        for k in 0..=5u32 {
            if k > 0 {
                fact *= k as f64;
            }
            let want = std::f64::consts::E / fact;
            assert!((e.coeff(&ev(&[k])) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn relu_composition_is_refused() {
        let s = TruncatedSeries::new(1, 2).unwrap();
        assert_eq!(
            s.compose(Nonlinearity::Relu).unwrap_err(),
            Error::NonAnalytic("relu")
        );
    }

    #[test]
    fn text_form_is_graded_lex() {
        let l = layout(2, 2);
        let s = TruncatedSeries::from_terms(&l, [(ev(&[0, 2]), -1.5), (ev(&[1, 0]), 0.1)]).unwrap();
        assert_eq!(
            s.to_text(),
            "1,0 : 1.0000000000000001e-1\n0,2 : -1.5000000000000000e0\n"
        );
    }

    #[test]
    fn linear_combination_cancels_exactly() {
        let l = layout(1, 3);
        let x = TruncatedSeries::variable(&l, 0).scale(0.1 / 3.0);
        let parts = [(1.0, &x), (1.0, &x), (1.0, &x), (-1.0, &x), (-1.0, &x), (-1.0, &x)];
        let s = TruncatedSeries::linear_combination(&l, &parts, 0.0).unwrap();
        assert!(s.is_empty());
    }
}
