use super::builder::{Builder, Form, Fragment};
use super::gates;
use crate::error::{Error, Result};
use crate::network::{FeedforwardNetwork, GateTag};
use crate::numeric::binomial_u64;
use crate::series::{ExponentVector, Nonlinearity};

/// One hidden layer of `2^N` neurons computing `y₁⋯y_N` through degree `N`.
pub fn shallow_product_gadget(n: usize, sigma: Nonlinearity) -> Result<FeedforwardNetwork> {
    if n == 0 {
        return Err(Error::Invalid("the product gadget needs N >= 1".into()));
    }
    let mut b = Builder::new(n, sigma);
    let inputs = b.inputs();
    let frag = gates::sign_gadget(sigma, &inputs, GateTag::SignPattern)?;
    let out = b.layer(vec![frag])?;
    b.finish(&out)
}

/// The sign-pattern gadget for `x^r` with repeated inputs merged: one
/// hidden layer of exactly `∏(rᵢ + 1)` neurons.
///
/// Setting `mᵢ` of the `rᵢ` copies of `xᵢ` negative gives input weight
/// `rᵢ − 2mᵢ`; the `∏ C(rᵢ, mᵢ)` sign vectors that collapse onto it share
/// the sign `(−1)^Σmᵢ`, so their output weights add up to an integer
/// multiple of `1 / (2^d d! σ_d)`.
pub fn shallow_monomial(r: &ExponentVector, sigma: Nonlinearity) -> Result<FeedforwardNetwork> {
    let d = r.degree() as usize;
    if d == 0 {
        return Err(Error::Invalid("monomial of degree zero has no gadget".into()));
    }
    let sd = gates::required(sigma, d, "the shallow monomial gadget")?;
    let mut fact = 1.0;
    for k in 2..=d {
        fact *= k as f64;
    }
    let unit = 1.0 / (2f64.powi(d as i32) * fact * sd);

    let support: Vec<(usize, u32)> = r.support().collect();
    let radix: Vec<u32> = support.iter().map(|&(_, ri)| ri + 1).collect();
    let count: usize = radix.iter().map(|&x| x as usize).product();
    let mut m = vec![0u32; support.len()];
    let mut pres = Vec::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let terms = support
            .iter()
            .zip(&m)
            .map(|(&(i, ri), &mi)| (i, ri as f64 - 2.0 * mi as f64))
            .filter(|&(_, w)| w != 0.0)
            .collect();
        pres.push(Form {
            terms,
            constant: 0.0,
        });
        let multiplicity: f64 = support
            .iter()
            .zip(&m)
            .map(|(&(_, ri), &mi)| binomial_u64(ri as u64, mi as u64) as f64)
            .product();
        let odd = m.iter().sum::<u32>() % 2 == 1;
        out.push(if odd { -multiplicity } else { multiplicity } * unit);
        for (mi, &base) in m.iter_mut().zip(&radix) {
            *mi += 1;
            if *mi < base {
                break;
            }
            *mi = 0;
        }
    }

    let mut b = Builder::new(r.n(), sigma);
    let outs = b.layer(vec![Fragment {
        pres,
        out,
        out_const: 0.0,
        tag: GateTag::SignPattern,
    }])?;
    b.finish(&outs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(v: &[u32]) -> ExponentVector {
        ExponentVector::new(v.to_vec())
    }

    #[test]
    fn gadget_two_weights() {
        let net = shallow_product_gadget(2, Nonlinearity::Exp).unwrap();
        assert_eq!(net.neuron_count(), 4);
        let w = net.layers()[1].weights();
        assert_eq!(w, &[0.25, -0.25, -0.25, 0.25]);
        let s = net.taylor_expand(2).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.coeff(&ev(&[1, 1])), 1.0);
    }

    #[test]
    fn gadget_one_has_no_constant() {
        let net = shallow_product_gadget(1, Nonlinearity::Exp).unwrap();
        assert_eq!(net.neuron_count(), 2);
        let s = net.taylor_expand(1).unwrap();
        assert_eq!(s.constant_term(), 0.0);
        assert_eq!(s.coeff(&ev(&[1])), 1.0);
    }

    #[test]
    fn monomial_counts() {
        for (r, count) in [(vec![1, 1, 1], 8), (vec![2, 1], 6), (vec![2, 0], 3)] {
            let net = shallow_monomial(&ev(&r), Nonlinearity::Exp).unwrap();
            assert_eq!(net.neuron_count(), count, "{r:?}");
        }
    }

    #[test]
    fn square_collapse_matches_product_gadget() {
        // x² through the merged gadget equals the N = 2 gadget with y₁ = y₂ = x.
        let merged = shallow_monomial(&ev(&[2]), Nonlinearity::Exp).unwrap();
        let gadget = shallow_product_gadget(2, Nonlinearity::Exp).unwrap();
        for x in [-0.5, 0.1, 0.8] {
            let a = merged.eval_scalar(&[x]).unwrap();
            let b = gadget.eval_scalar(&[x, x]).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn degree_zero_rejected() {
        assert!(shallow_monomial(&ev(&[0, 0]), Nonlinearity::Exp).is_err());
        assert!(matches!(
            shallow_monomial(&ev(&[2]), Nonlinearity::Tanh),
            Err(Error::ZeroCoefficient { degree: 2, .. })
        ));
    }
}
