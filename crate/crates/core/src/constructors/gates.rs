//! Square, product, identity and sign-pattern gates, plus the exact carry.

use nalgebra::{DMatrix, DVector};

use super::builder::{Form, Fragment};
use crate::error::{Error, Result};
use crate::network::GateTag;
use crate::numeric::exact_sum;
use crate::series::Nonlinearity;

/// Maclaurin coefficients `σ₀ … σ_{count-1}`, refusing non-analytic σ.
pub(crate) fn coefficients(sigma: Nonlinearity, count: usize) -> Result<Vec<f64>> {
    if !sigma.is_analytic() {
        return Err(Error::NonAnalytic(sigma.name()));
    }
    sigma.maclaurin(count)
}

/// `σ_degree`, or an error naming the construction that needs it.
pub(crate) fn required(
    sigma: Nonlinearity,
    degree: usize,
    required_by: &'static str,
) -> Result<f64> {
    let c = coefficients(sigma, degree + 1)?[degree];
    if c == 0.0 {
        Err(Error::ZeroCoefficient {
            name: sigma.name(),
            degree,
            required_by,
        })
    } else {
        Ok(c)
    }
}

/// `(σ(v) + σ(−v) − 2σ(0)) / (2σ₂)`: three neurons, the last one a
/// zero-weight unit that supplies `σ(0)`.
pub(crate) fn square(sigma: Nonlinearity, v: &Form) -> Result<Fragment> {
    let s2 = required(sigma, 2, "the square gate")?;
    let scale = 1.0 / (2.0 * s2);
    Ok(Fragment {
        pres: vec![v.clone(), v.scaled(-1.0), Form::default()],
        out: vec![scale, scale, -2.0 * scale],
        out_const: 0.0,
        tag: GateTag::Square,
    })
}

/// The two-input sign gadget computing `u·v`.
pub(crate) fn product(sigma: Nonlinearity, u: &Form, v: &Form) -> Result<Fragment> {
    required(sigma, 2, "the product gate")?;
    sign_gadget(sigma, &[u.clone(), v.clone()], GateTag::Product)
}

/// `(σ(v) − σ₀) / σ₁`.
pub(crate) fn identity(sigma: Nonlinearity, v: &Form, tag: GateTag) -> Result<Fragment> {
    let s = coefficients(sigma, 2)?;
    if s[1] == 0.0 {
        return Err(Error::ZeroCoefficient {
            name: sigma.name(),
            degree: 1,
            required_by: "the identity gate",
        });
    }
    let w = 1.0 / s[1];
    Ok(Fragment {
        pres: vec![v.clone()],
        out: vec![w],
        out_const: -(w * s[0]),
        tag,
    })
}

/// `Σ_s (∏ sᵢ) σ(s·y) / (2^N N! σ_N)` over all `2^N` sign vectors; its
/// expansion is `y₁⋯y_N` plus terms of degree `N + 2` and above.
///
/// Sign vectors are enumerated by bit mask, bit `i` set meaning `sᵢ = −1`.
pub(crate) fn sign_gadget(sigma: Nonlinearity, inputs: &[Form], tag: GateTag) -> Result<Fragment> {
    let n = inputs.len();
    if n == 0 {
        return Err(Error::Invalid("sign gadget needs at least one input".into()));
    }
    if n > 24 {
        return Err(Error::Invalid(format!("sign gadget over {n} inputs is too wide")));
    }
    let sn = required(sigma, n, "the sign-pattern gadget")?;
    let mut fact = 1.0;
    for k in 2..=n {
        fact *= k as f64;
    }
    let w = 1.0 / (2f64.powi(n as i32) * fact * sn);
    let count = 1usize << n;
    let mut pres = Vec::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    for mask in 0..count {
        let parts: Vec<(f64, &Form)> = inputs
            .iter()
            .enumerate()
            .map(|(i, f)| (if mask >> i & 1 == 1 { -1.0 } else { 1.0 }, f))
            .collect();
        pres.push(Form::combine(&parts));
        out.push(if mask.count_ones() % 2 == 1 { -w } else { w });
    }
    Ok(Fragment {
        pres,
        out,
        out_const: 0.0,
        tag,
    })
}

/// A carry `g(v) = Σ wᵢ σ(aᵢ v) + b` with `g(v) = v + O(v^{rows+1})`.
///
/// Powers `v²…v^rows` are cancelled by solving a small Vandermonde system,
/// so a value of lowest degree `e` crosses a layer without adding any term
/// of degree `≤ e·(rows + 1) − 1`. Rows whose Taylor coefficient is zero
/// need no neuron.
pub(crate) fn exact_carry(sigma: Nonlinearity, v: &Form, rows: u32) -> Result<Fragment> {
    let rows = rows.max(1) as usize;
    let s = coefficients(sigma, rows + 1)?;
    if s[1] == 0.0 {
        return Err(Error::ZeroCoefficient {
            name: sigma.name(),
            degree: 1,
            required_by: "the exact carry",
        });
    }
    let powers: Vec<usize> = (1..=rows).filter(|&j| s[j] != 0.0).collect();
    let m = powers.len();
    let nodes: Vec<f64> = (0..m)
        .map(|i| 0.5 * (1.0 + (std::f64::consts::PI * (2 * i + 1) as f64 / (2 * m) as f64).cos()))
        .collect();
    let a = DMatrix::from_fn(m, m, |r, c| s[powers[r]] * nodes[c].powi(powers[r] as i32));
    let rhs = DVector::from_fn(m, |r, _| if powers[r] == 1 { 1.0 } else { 0.0 });
    let w = a
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|w| w.iter().all(|x| x.is_finite()))
        .ok_or(Error::IllConditioned {
            condition: f64::INFINITY,
        })?;
    let out: Vec<f64> = w.iter().copied().collect();
    let out_const = -exact_sum(out.iter().map(|wi| wi * s[0]));
    Ok(Fragment {
        pres: nodes.iter().map(|&a| v.scaled(a)).collect(),
        out,
        out_const,
        tag: GateTag::Carry,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructors::builder::Builder;
    use crate::series::ExponentVector;

    fn one_gate(sigma: Nonlinearity, frag: impl Fn(&Form) -> Result<Fragment>) -> crate::FeedforwardNetwork {
        let mut b = Builder::new(1, sigma);
        let x = b.inputs();
        let out = b.layer(vec![frag(&x[0]).unwrap()]).unwrap();
        b.finish(&out).unwrap()
    }

    #[test]
    fn square_gate_with_exp() {
        let net = one_gate(Nonlinearity::Exp, |x| square(Nonlinearity::Exp, x));
        assert_eq!(net.neuron_count(), 3);
        let s = net.taylor_expand(4).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.coeff(&ExponentVector::new(vec![2])), 1.0);
        assert!((s.coeff(&ExponentVector::new(vec![4])) - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn square_gate_rejects_tanh() {
        let x = Form::unit(0);
        assert_eq!(
            square(Nonlinearity::Tanh, &x).unwrap_err(),
            Error::ZeroCoefficient {
                name: "tanh",
                degree: 2,
                required_by: "the square gate"
            }
        );
    }

    #[test]
    fn identity_gate_degree_one_is_exact() {
        let net = one_gate(Nonlinearity::Exp, |x| identity(Nonlinearity::Exp, x, GateTag::Identity));
        let s = net.taylor_expand(2).unwrap();
        assert_eq!(s.constant_term(), 0.0);
        assert_eq!(s.coeff(&ExponentVector::new(vec![1])), 1.0);
        assert_eq!(s.coeff(&ExponentVector::new(vec![2])), 0.5);
    }

    #[test]
    fn exact_carry_cancels_requested_powers() {
        for sigma in [Nonlinearity::Exp, Nonlinearity::Tanh, Nonlinearity::Sigmoid] {
            let net = one_gate(sigma, |x| exact_carry(sigma, x, 5));
            let s = net.taylor_expand(6).unwrap();
            assert!(s.constant_term().abs() < 1e-14, "{sigma}");
            assert!((s.coeff(&ExponentVector::new(vec![1])) - 1.0).abs() < 1e-12, "{sigma}");
            for j in 2..=5 {
                assert!(s.coeff(&ExponentVector::new(vec![j])).abs() < 1e-10, "{sigma} j={j}");
            }
        }
    }
}
