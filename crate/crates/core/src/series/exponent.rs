use std::cmp::Ordering;
use std::fmt;

/// Exponents `(r₁, …, rₙ)` of a monomial `x₁^r₁ ⋯ xₙ^rₙ`.
///
/// Ordered graded-lexicographically: lower total degree first, and within
/// a degree `x₁` outranks `x₂` (so `x₁² < x₁x₂ < x₂²`).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExponentVector(Vec<u32>);

impl ExponentVector {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self(exponents)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    /// `e_i`, the exponent of the single variable `x_{i+1}`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0; n];
        v[i] = 1;
        Self(v)
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.0
    }

    /// Component-wise sum. Panics on length mismatch.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n(), other.n(), "exponent length mismatch");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// True when every component is `≤` the matching one in `other`.
    pub fn divides(&self, other: &Self) -> bool {
        self.n() == other.n() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Exponents with zero entries removed, paired with their variable index.
    pub fn support(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.0.iter().copied().enumerate().filter(|&(_, e)| e > 0)
    }

    /// Evaluate `∏ xᵢ^rᵢ` at a point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }

    /// All exponent vectors `s` with `0 ≤ s ≤ self` component-wise, i.e. the
    /// sub-multisets of the multiset this vector describes. Mixed-radix order
    /// with the first variable varying fastest.
    pub fn sub_multisets(&self) -> Vec<ExponentVector> {
        let total: usize = self.0.iter().map(|&r| r as usize + 1).product();
        let mut out = Vec::with_capacity(total);
        let mut cur = vec![0u32; self.n()];
        for _ in 0..total {
            out.push(Self(cur.clone()));
            for (c, &r) in cur.iter_mut().zip(&self.0) {
                if *c < r {
                    *c += 1;
                    break;
                }
                *c = 0;
            }
        }
        out
    }
}

impl From<Vec<u32>> for ExponentVector {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl Ord for ExponentVector {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for ExponentVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order() {
        let mut v: Vec<ExponentVector> = vec![
            vec![0, 2].into(),
            vec![1, 0].into(),
            vec![1, 1].into(),
            vec![0, 0].into(),
            vec![2, 0].into(),
            vec![0, 1].into(),
        ];
        v.sort();
        let got: Vec<Vec<u32>> = v.into_iter().map(|e| e.into_vec()).collect();
        assert_eq!(
            got,
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
    }

    #[test]
    fn sub_multisets_count() {
        let r = ExponentVector::new(vec![2, 2, 1]);
        let subs = r.sub_multisets();
        assert_eq!(subs.len(), 18);
        assert!(subs.iter().all(|s| s.divides(&r)));
        let mut dedup = subs.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 18);
    }
}
