//! Layer-by-layer assembly of networks from gate fragments.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::network::{AffineLayer, Annotation, FeedforwardNetwork, GateTag};
use crate::numeric::exact_sum;
use crate::series::Nonlinearity;

/// An affine function of the units in the current frontier (the inputs, or
/// the most recent hidden layer).
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Form {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Form {
    pub fn unit(i: usize) -> Self {
        Self {
            terms: vec![(i, 1.0)],
            constant: 0.0,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|&(i, w)| (i, w * k)).collect(),
            constant: self.constant * k,
        }
    }

    /// `Σ kᵢ·fᵢ`, each unit's weight summed exactly.
    pub fn combine(parts: &[(f64, &Form)]) -> Self {
        let mut by_unit: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        let mut consts = Vec::new();
        for (k, f) in parts {
            for &(i, w) in &f.terms {
                by_unit.entry(i).or_default().push(k * w);
            }
            consts.push(k * f.constant);
        }
        Self {
            terms: by_unit
                .into_iter()
                .map(|(i, ws)| (i, exact_sum(ws)))
                .filter(|&(_, w)| w != 0.0)
                .collect(),
            constant: exact_sum(consts),
        }
    }
}

/// A group of hidden neurons `σ(pre_i)` together with the affine read-out
/// `Σ out_i·σ(pre_i) + out_const` that the next layer sees.
#[derive(Debug, Clone)]
pub(crate) struct Fragment {
    pub pres: Vec<Form>,
    pub out: Vec<f64>,
    pub out_const: f64,
    pub tag: GateTag,
}

pub(crate) struct Builder {
    n: usize,
    sigma: Nonlinearity,
    layers: Vec<AffineLayer>,
    annotations: Vec<Annotation>,
    width: usize,
}

impl Builder {
    pub fn new(n: usize, sigma: Nonlinearity) -> Self {
        Self {
            n,
            sigma,
            layers: Vec::new(),
            annotations: Vec::new(),
            width: n,
        }
    }

    /// The input coordinates as forms.
    pub fn inputs(&self) -> Vec<Form> {
        (0..self.n).map(Form::unit).collect()
    }

    /// Re-opens a finished network: its hidden layers are kept and its
    /// outputs are returned as forms over the last hidden layer.
    pub fn from_network(net: &FeedforwardNetwork) -> (Self, Vec<Form>) {
        let (n, sigma, mut layers, annotations) = net.clone().into_parts();
        let last = layers.pop().expect("non-empty");
        let outputs = (0..last.rows())
            .map(|r| Form {
                terms: last
                    .row(r)
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| **w != 0.0)
                    .map(|(i, w)| (i, *w))
                    .collect(),
                constant: last.bias()[r],
            })
            .collect();
        let b = Self {
            n,
            sigma,
            width: last.cols(),
            layers,
            annotations,
        };
        (b, outputs)
    }

    pub fn sigma(&self) -> Nonlinearity {
        self.sigma
    }

    /// Emits one hidden layer holding every fragment side by side and
    /// returns each fragment's read-out as a form over the new layer.
    pub fn layer(&mut self, fragments: Vec<Fragment>) -> Result<Vec<Form>> {
        let rows: usize = fragments.iter().map(|f| f.pres.len()).sum();
        if rows == 0 {
            return Err(Error::Invalid("empty hidden layer".into()));
        }
        let mut layer = AffineLayer::zeros(rows, self.width);
        let hidden = self.layers.len();
        let mut outs = Vec::with_capacity(fragments.len());
        let mut row = 0;
        for frag in fragments {
            let start = row;
            for pre in &frag.pres {
                for &(i, w) in &pre.terms {
                    if i >= self.width {
                        return Err(Error::Invalid(format!(
                            "gate reads unit {i} of a {}-unit frontier",
                            self.width
                        )));
                    }
                    layer.weights_mut()[row * self.width + i] = w;
                }
                layer.bias_mut()[row] = pre.constant;
                row += 1;
            }
            self.annotations.push(Annotation {
                layer: hidden,
                from: start,
                to: row,
                tag: frag.tag,
                part: None,
                correction: false,
            });
            outs.push(Form {
                terms: frag
                    .out
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| **w != 0.0)
                    .map(|(k, w)| (start + k, *w))
                    .collect(),
                constant: frag.out_const,
            });
        }
        self.layers.push(layer);
        self.width = rows;
        Ok(outs)
    }

    /// Closes the network with an output layer reading the given forms.
    pub fn finish(mut self, outputs: &[Form]) -> Result<FeedforwardNetwork> {
        let mut last = AffineLayer::zeros(outputs.len(), self.width);
        for (r, f) in outputs.iter().enumerate() {
            for &(i, w) in &f.terms {
                last.weights_mut()[r * self.width + i] = w;
            }
            last.bias_mut()[r] = f.constant;
        }
        self.layers.push(last);
        FeedforwardNetwork::new(self.n, self.sigma, self.layers, self.annotations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combine_merges_units_exactly() {
        let a = Form {
            terms: vec![(0, 0.1), (2, 1.0)],
            constant: 0.5,
        };
        let b = Form {
            terms: vec![(0, 0.1)],
            constant: -0.5,
        };
        let c = Form::combine(&[(1.0, &a), (-1.0, &b)]);
        assert_eq!(c.terms, vec![(2, 1.0)]);
        assert_eq!(c.constant, 1.0);
    }

    #[test]
    fn finish_without_hidden_layers_is_affine() {
        let b = Builder::new(2, Nonlinearity::Exp);
        let x = b.inputs();
        let f = Form::combine(&[(2.0, &x[0]), (1.0, &x[1])]);
        let net = b.finish(&[f]).unwrap();
        assert_eq!(net.depth(), 0);
        assert_eq!(net.eval_scalar(&[1.0, 3.0]).unwrap(), 5.0);
    }
}
