use super::builder::{Builder, Form};
use super::gates;
use crate::bounds::solve_optimal_groups;
use crate::error::{Error, Result};
use crate::network::{FeedforwardNetwork, GateTag};
use crate::series::{ExponentVector, Nonlinearity};

/// Group sizes for the layered product tree: layer `i` multiplies
/// consecutive groups of `bᵢ` values from the layer below.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreePlan {
    n: usize,
    groups: Vec<usize>,
}

impl TreePlan {
    /// Validates `∏ bᵢ ≥ n`; a short final group at some layer is allowed.
    pub fn new(n: usize, groups: Vec<usize>) -> Result<Self> {
        if n == 0 || groups.is_empty() || groups.contains(&0) {
            return Err(Error::Invalid(format!(
                "tree plan needs n >= 1 and positive group sizes, got n = {n}, b = {groups:?}"
            )));
        }
        let covered = groups
            .iter()
            .try_fold(1usize, |acc, &b| acc.checked_mul(b))
            .unwrap_or(usize::MAX);
        if covered < n {
            return Err(Error::Invalid(format!(
                "group sizes {groups:?} multiply to {covered} < n = {n}"
            )));
        }
        Ok(Self { n, groups })
    }

    /// Equal group sizes `⌈n^{1/k}⌉`, each then lowered as far as coverage allows.
    pub fn balanced(n: usize, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Invalid("tree depth must be at least 1".into()));
        }
        let mut b = ((n as f64).powf(1.0 / k as f64).floor() as usize).saturating_sub(1).max(1);
        while b.checked_pow(k as u32).is_some_and(|p| p < n) {
            b += 1;
        }
        let mut groups = vec![b; k];
        for i in 0..k {
            while groups[i] > 1 {
                groups[i] -= 1;
                if groups.iter().product::<usize>() < n {
                    groups[i] += 1;
                    break;
                }
            }
        }
        groups.sort_unstable();
        Self::new(n, groups)
    }

    /// The optimal integer plan when the group-size recursion is defined for
    /// `(n, k)`, otherwise [`TreePlan::balanced`].
    pub fn for_depth(n: usize, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Invalid("tree depth must be at least 1".into()));
        }
        match solve_optimal_groups(n as f64, k) {
            Ok(plan) => Self::new(n, plan.integer_b),
            Err(_) => Self::balanced(n, k),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn depth(&self) -> usize {
        self.groups.len()
    }

    /// Number of groups formed at each layer.
    pub fn group_counts(&self) -> Vec<usize> {
        let mut values = self.n;
        self.groups
            .iter()
            .map(|&b| {
                values = values.div_ceil(b);
                values
            })
            .collect()
    }

    /// Size of every group at every layer; only the last group of a layer
    /// can fall short of `bᵢ`.
    pub fn assignments(&self) -> Vec<Vec<usize>> {
        let mut values = self.n;
        self.groups
            .iter()
            .map(|&b| {
                let sizes: Vec<usize> = (0..values.div_ceil(b))
                    .map(|g| b.min(values - g * b))
                    .collect();
                values = sizes.len();
                sizes
            })
            .collect()
    }
}

/// Multiplies `x₁⋯xₙ` along the plan: each full group goes through a
/// sign-pattern gadget; a short group uses a smaller gadget, or an identity
/// carry when it holds a single value.
pub fn tree_product(n: usize, plan: &TreePlan, sigma: Nonlinearity) -> Result<FeedforwardNetwork> {
    if plan.n() != n {
        return Err(Error::Invalid(format!(
            "plan covers {} inputs but n = {n}",
            plan.n()
        )));
    }
    let mut b = Builder::new(n, sigma);
    let values = b.inputs();
    let out = tree_over(&mut b, values, plan)?;
    b.finish(&[out])
}

/// Tree product over the variable multiset of `x^r` (repeated variables
/// become repeated inputs).
pub fn tree_monomial(r: &ExponentVector, k: usize, sigma: Nonlinearity) -> Result<FeedforwardNetwork> {
    let d = r.degree() as usize;
    if d == 0 {
        return Err(Error::Invalid("monomial of degree zero has no tree network".into()));
    }
    let mut b = Builder::new(r.n(), sigma);
    let inputs = b.inputs();
    let values: Vec<Form> = r
        .support()
        .flat_map(|(i, ri)| std::iter::repeat(inputs[i].clone()).take(ri as usize))
        .collect();
    if d == 1 {
        return b.finish(&values);
    }
    let plan = TreePlan::for_depth(d, k)?;
    let out = tree_over(&mut b, values, &plan)?;
    b.finish(&[out])
}

fn tree_over(b: &mut Builder, mut values: Vec<Form>, plan: &TreePlan) -> Result<Form> {
    let sigma = b.sigma();
    for &g in plan.groups() {
        let frags = values
            .chunks(g)
            .map(|chunk| {
                if chunk.len() == 1 && g > 1 {
                    gates::identity(sigma, &chunk[0], GateTag::Carry)
                } else {
                    gates::sign_gadget(sigma, chunk, GateTag::SignPattern)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        values = b.layer(frags)?;
    }
    Ok(values.pop().expect("plan reduces to a single value"))
}
