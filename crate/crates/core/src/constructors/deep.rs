use super::builder::{Builder, Form, Fragment};
use super::gates;
use crate::error::{Error, Result};
use crate::network::{FeedforwardNetwork, GateTag};
use crate::numeric::ceil_log2;
use crate::series::{ExponentVector, Nonlinearity};

#[derive(Debug, Clone, Copy)]
enum Role {
    Square,
    Acc,
    Done,
}

/// Binary exponentiation of one input: layer `ℓ` squares `x^{2^{ℓ-1}}` and
/// folds the matching binary digit into a running product.
struct PowerLane {
    top: u32,
    bits: u32,
    step: u32,
    s: Form,
    acc: Option<Form>,
    result: Option<Form>,
}

impl PowerLane {
    fn new(d: u32, x: Form) -> Self {
        let top = 31 - d.leading_zeros();
        let result = (d == 1).then(|| x.clone());
        Self {
            top,
            bits: d,
            step: 0,
            s: x,
            acc: None,
            result,
        }
    }

    fn layers(d: u32) -> usize {
        ceil_log2(d as u64) as usize
    }

    fn emit(&self, sigma: Nonlinearity) -> Result<Vec<(Role, Fragment)>> {
        if let Some(r) = &self.result {
            return Ok(vec![(Role::Done, gates::identity(sigma, r, GateTag::Carry)?)]);
        }
        let layer = self.step + 1;
        if layer > self.top {
            let acc = self.acc.as_ref().expect("accumulator holds the low bits");
            return Ok(vec![(Role::Done, gates::product(sigma, acc, &self.s)?)]);
        }
        let mut out = vec![(Role::Square, gates::square(sigma, &self.s)?)];
        let bit_set = self.bits >> (layer - 1) & 1 == 1;
        match (&self.acc, bit_set) {
            (None, true) => out.push((Role::Acc, gates::identity(sigma, &self.s, GateTag::Identity)?)),
            (Some(acc), true) => out.push((Role::Acc, gates::product(sigma, acc, &self.s)?)),
            (Some(acc), false) => out.push((Role::Acc, gates::identity(sigma, acc, GateTag::Identity)?)),
            (None, false) => {}
        }
        Ok(out)
    }

    fn accept(&mut self, roles: &[Role], forms: Vec<Form>) {
        for (role, f) in roles.iter().zip(forms) {
            match role {
                Role::Square => self.s = f,
                Role::Acc => self.acc = Some(f),
                Role::Done => self.result = Some(f),
            }
        }
        if self.result.is_none() {
            self.step += 1;
            if self.step == self.top && self.acc.is_none() {
                self.result = Some(self.s.clone());
            }
        }
    }
}

/// Network for `x^d` built from square, product and identity gates.
///
/// `d = 1` gives a depth-zero affine identity; otherwise the depth is
/// `⌈log₂ d⌉` with at most seven neurons per layer.
pub fn deep_power(d: u32, sigma: Nonlinearity) -> Result<FeedforwardNetwork> {
    deep_monomial(&ExponentVector::new(vec![d]), sigma)
}

/// Network for `x^r`: one power lane per variable run side by side, the
/// finished powers carried to a common depth, then multiplied along a
/// balanced tree of product gates.
pub fn deep_monomial(r: &ExponentVector, sigma: Nonlinearity) -> Result<FeedforwardNetwork> {
    if r.degree() == 0 {
        return Err(Error::Invalid("monomial of degree zero has no deep network".into()));
    }
    let mut b = Builder::new(r.n(), sigma);
    let inputs = b.inputs();
    let support: Vec<(usize, u32)> = r.support().collect();
    let depth = support
        .iter()
        .map(|&(_, ri)| PowerLane::layers(ri))
        .max()
        .unwrap_or(0);
    let mut lanes: Vec<PowerLane> = support
        .iter()
        .map(|&(i, ri)| PowerLane::new(ri, inputs[i].clone()))
        .collect();

    for _ in 0..depth {
        let mut frags = Vec::new();
        let mut roles = Vec::with_capacity(lanes.len());
        for lane in &lanes {
            let emitted = lane.emit(sigma)?;
            roles.push(emitted.iter().map(|(r, _)| *r).collect::<Vec<_>>());
            frags.extend(emitted.into_iter().map(|(_, f)| f));
        }
        let mut forms = b.layer(frags)?.into_iter();
        for (lane, roles) in lanes.iter_mut().zip(&roles) {
            let taken: Vec<Form> = forms.by_ref().take(roles.len()).collect();
            lane.accept(roles, taken);
        }
    }

    let mut values: Vec<Form> = lanes
        .into_iter()
        .map(|l| l.result.expect("every lane finishes within the common depth"))
        .collect();
    while values.len() > 1 {
        let mut frags = Vec::with_capacity(values.len().div_ceil(2));
        for pair in values.chunks(2) {
            frags.push(match pair {
                [u, v] => gates::product(sigma, u, v)?,
                [u] => gates::identity(sigma, u, GateTag::Carry)?,
                _ => unreachable!(),
            });
        }
        values = b.layer(frags)?;
    }
    b.finish(&values)
}
