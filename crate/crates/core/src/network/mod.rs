//! Feedforward networks `A_k σ(⋯ σ(A_1 σ(A_0 x)))` with biased affine maps.

pub(crate) mod combine;
mod json;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Layout, Nonlinearity, TruncatedSeries};

pub use combine::{sum_networks, sum_networks_with, Carry};

/// A dense affine map `y = W x + b` with `W` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLayer {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl AffineLayer {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                got: weights.len(),
                context: "layer weight count",
            });
        }
        if bias.len() != rows {
            return Err(Error::Dimension {
                expected: rows,
                got: bias.len(),
                context: "layer bias length",
            });
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("layer entries must be finite".into()));
        }
        Ok(Self {
            rows,
            cols,
            weights,
            bias,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            bias: vec![0.0; rows],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weight(&self, r: usize, c: usize) -> f64 {
        self.weights[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.weights[r * self.cols..(r + 1) * self.cols]
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub(crate) fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .fold(self.bias[r], |acc, (w, xi)| acc + w * xi)
            })
            .collect()
    }

    /// Applies the map to a vector of series, summing each output exactly.
    pub fn apply_series(
        &self,
        layout: &Arc<Layout>,
        inputs: &[TruncatedSeries],
    ) -> Result<Vec<TruncatedSeries>> {
        (0..self.rows)
            .map(|r| {
                let parts: Vec<(f64, &TruncatedSeries)> = self
                    .row(r)
                    .iter()
                    .zip(inputs)
                    .filter(|(w, _)| **w != 0.0)
                    .map(|(w, s)| (*w, s))
                    .collect();
                TruncatedSeries::linear_combination(layout, &parts, self.bias[r])
            })
            .collect()
    }
}

/// What a run of hidden neurons implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateTag {
    Square,
    Product,
    Identity,
    SignPattern,
    Vandermonde,
    /// Identity gates inserted only to align depths.
    Carry,
}

impl GateTag {
    pub fn name(self) -> &'static str {
        match self {
            GateTag::Square => "square",
            GateTag::Product => "product",
            GateTag::Identity => "identity",
            GateTag::SignPattern => "sign-pattern",
            GateTag::Vandermonde => "vandermonde",
            GateTag::Carry => "carry",
        }
    }
}

/// Tags hidden neurons `from..to` of hidden layer `layer`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub layer: usize,
    pub from: usize,
    pub to: usize,
    pub tag: GateTag,
    /// Index of the summand this range belongs to, for networks built by
    /// summing independent sub-networks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part: Option<usize>,
    /// Set on neurons that cancel another summand's low-degree residue.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub correction: bool,
}

/// An immutable feedforward network with one shared activation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedforwardNetwork {
    n: usize,
    activation: Nonlinearity,
    layers: Vec<AffineLayer>,
    annotations: Vec<Annotation>,
}

impl FeedforwardNetwork {
    pub fn new(
        n: usize,
        activation: Nonlinearity,
        layers: Vec<AffineLayer>,
        annotations: Vec<Annotation>,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Invalid("a network needs at least one layer".into()));
        }
        let mut width = n;
        for l in &layers {
            if l.cols != width {
                return Err(Error::Dimension {
                    expected: width,
                    got: l.cols,
                    context: "layer input width",
                });
            }
            width = l.rows;
        }
        let hidden = layers.len() - 1;
        for a in &annotations {
            if a.layer >= hidden || a.from >= a.to || a.to > layers[a.layer].rows {
                return Err(Error::Invalid(format!(
                    "annotation {}..{} on hidden layer {} is out of range",
                    a.from, a.to, a.layer
                )));
            }
        }
        Ok(Self {
            n,
            activation,
            layers,
            annotations,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn activation(&self) -> Nonlinearity {
        self.activation
    }

    pub fn layers(&self) -> &[AffineLayer] {
        &self.layers
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    /// Number of hidden layers `k`.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, AffineLayer::rows)
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.depth()].iter().map(AffineLayer::rows).collect()
    }

    /// Hidden neurons only; inputs, outputs and biases are not counted.
    pub fn neuron_count(&self) -> usize {
        self.hidden_widths().iter().sum()
    }

    pub fn count_tagged(&self, tag: GateTag) -> usize {
        self.annotations
            .iter()
            .filter(|a| a.tag == tag)
            .map(|a| a.to - a.from)
            .sum()
    }

    /// Neurons tagged as depth-alignment carries.
    pub fn padding_count(&self) -> usize {
        self.count_tagged(GateTag::Carry)
    }

    /// Neurons belonging to residue-cancelling summands.
    pub fn correction_count(&self) -> usize {
        self.annotations
            .iter()
            .filter(|a| a.correction)
            .map(|a| a.to - a.from)
            .sum()
    }

    /// Neurons that are neither padding nor correction.
    pub fn core_count(&self) -> usize {
        let extra: usize = self
            .annotations
            .iter()
            .filter(|a| a.correction || a.tag == GateTag::Carry)
            .map(|a| a.to - a.from)
            .sum();
        self.neuron_count() - extra
    }

    /// True when the annotations cover every hidden neuron exactly once.
    pub fn annotations_partition_hidden(&self) -> bool {
        let widths = self.hidden_widths();
        let mut seen: Vec<Vec<u8>> = widths.iter().map(|&w| vec![0; w]).collect();
        for a in &self.annotations {
            for slot in &mut seen[a.layer][a.from..a.to] {
                *slot += 1;
            }
        }
        seen.iter().flatten().all(|&c| c == 1)
    }

    /// Evaluates the network at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: x.len(),
                context: "network input",
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("network input must be finite".into()));
        }
        let k = self.depth();
        let mut h = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            h = layer.apply(&h);
            if l < k {
                for v in &mut h {
                    *v = self.activation.eval(*v);
                }
            }
            if h.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { layer: l });
            }
        }
        Ok(h)
    }

    /// Evaluates a single-output network.
    pub fn eval_scalar(&self, x: &[f64]) -> Result<f64> {
        self.require_scalar()?;
        Ok(self.eval(x)?[0])
    }

    fn require_scalar(&self) -> Result<()> {
        if self.output_dim() == 1 {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: 1,
                got: self.output_dim(),
                context: "network output width",
            })
        }
    }

    /// Taylor expansion about the origin of every output, truncated at `cap`.
    pub fn taylor_expand_outputs(&self, cap: u32) -> Result<Vec<TruncatedSeries>> {
        if !self.activation.is_analytic() && self.depth() > 0 {
            return Err(Error::NonAnalytic(self.activation.name()));
        }
        let layout = Arc::new(Layout::new(self.n, cap)?);
        let mut h: Vec<TruncatedSeries> = (0..self.n)
            .map(|i| TruncatedSeries::variable(&layout, i))
            .collect();
        let k = self.depth();
        for (l, layer) in self.layers.iter().enumerate() {
            h = layer.apply_series(&layout, &h)?;
            if l < k {
                h = h
                    .iter()
                    .map(|s| s.compose(self.activation))
                    .collect::<Result<_>>()?;
            }
        }
        Ok(h)
    }

    /// Taylor expansion of a single-output network.
    pub fn taylor_expand(&self, cap: u32) -> Result<TruncatedSeries> {
        self.require_scalar()?;
        Ok(self.taylor_expand_outputs(cap)?.remove(0))
    }

    /// Multiplies the output layer (weights and bias) by `k`.
    pub fn scale_output(&self, k: f64) -> Result<Self> {
        let mut net = self.clone();
        let last = net.layers.last_mut().expect("non-empty");
        last.weights.iter_mut().for_each(|w| *w *= k);
        last.bias.iter_mut().for_each(|b| *b *= k);
        net.validate_finite()?;
        Ok(net)
    }

    /// Adds `c` to every output bias.
    pub fn shift_output(&self, c: f64) -> Self {
        let mut net = self.clone();
        let last = net.layers.last_mut().expect("non-empty");
        last.bias.iter_mut().for_each(|b| *b += c);
        net
    }

    /// Returns the network `x ↦ N(δx) / δ^d`.
    ///
    /// Only input weights are scaled; hidden biases stay put so that the
    /// result is exactly the rescaled function.
    pub fn rescale(&self, d: u32, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::Invalid(format!(
                "rescale factor must lie in (0, 1], got {delta}"
            )));
        }
        let denom = delta.powi(d as i32);
        if denom < f64::MIN_POSITIVE || !(1.0 / denom).is_finite() {
            return Err(Error::DeltaUnderflow { delta, degree: d });
        }
        let mut net = self.clone();
        net.layers[0].weights.iter_mut().for_each(|w| *w *= delta);
        let last = net.layers.last_mut().expect("non-empty");
        last.weights.iter_mut().for_each(|w| *w /= denom);
        last.bias.iter_mut().for_each(|b| *b /= denom);
        net.validate_finite()?;
        Ok(net)
    }

    fn validate_finite(&self) -> Result<()> {
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.weights.iter().chain(&layer.bias).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { layer: l });
            }
        }
        Ok(())
    }

    /// Serializes to the JSON network document.
    pub fn to_json(&self) -> String {
        json::to_json(self)
    }

    /// Parses a JSON network document.
    pub fn from_json(text: &str) -> Result<Self> {
        json::from_json(text)
    }

    pub(crate) fn into_parts(self) -> (usize, Nonlinearity, Vec<AffineLayer>, Vec<Annotation>) {
        (self.n, self.activation, self.layers, self.annotations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ExponentVector;

    fn identity2() -> FeedforwardNetwork {
        let l = AffineLayer::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]).unwrap();
        FeedforwardNetwork::new(2, Nonlinearity::Exp, vec![l], vec![]).unwrap()
    }

    #[test]
    fn affine_identity_network() {
        let net = identity2();
        assert_eq!(net.depth(), 0);
        assert_eq!(net.neuron_count(), 0);
        assert_eq!(net.eval(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn dimension_errors() {
        let net = identity2();
        assert!(matches!(net.eval(&[1.0]), Err(Error::Dimension { .. })));
        let bad = AffineLayer::new(2, 2, vec![1.0; 3], vec![0.0; 2]);
        assert!(bad.is_err());
        let l0 = AffineLayer::zeros(3, 2);
        let l1 = AffineLayer::zeros(1, 2);
        assert!(FeedforwardNetwork::new(2, Nonlinearity::Exp, vec![l0, l1], vec![]).is_err());
    }

    #[test]
    fn non_finite_is_reported_with_layer() {
        let l0 = AffineLayer::new(1, 1, vec![800.0], vec![0.0]).unwrap();
        let l1 = AffineLayer::new(1, 1, vec![1.0], vec![0.0]).unwrap();
        let net = FeedforwardNetwork::new(1, Nonlinearity::Exp, vec![l0, l1], vec![]).unwrap();
        assert_eq!(net.eval(&[1.0]), Err(Error::NonFinite { layer: 0 }));
    }

    #[test]
    fn depth_zero_expansion_is_linear() {
        let l = AffineLayer::new(1, 2, vec![2.0, -3.0], vec![0.0]).unwrap();
        let net = FeedforwardNetwork::new(2, Nonlinearity::Exp, vec![l], vec![]).unwrap();
        let s = net.taylor_expand(4).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.coeff(&ExponentVector::new(vec![1, 0])), 2.0);
        assert_eq!(s.coeff(&ExponentVector::new(vec![0, 1])), -3.0);
    }

    #[test]
    fn relu_networks_evaluate_but_do_not_expand() {
        let l0 = AffineLayer::new(1, 1, vec![1.0], vec![0.0]).unwrap();
        let l1 = AffineLayer::new(1, 1, vec![1.0], vec![0.0]).unwrap();
        let net = FeedforwardNetwork::new(1, Nonlinearity::Relu, vec![l0, l1], vec![]).unwrap();
        assert_eq!(net.eval_scalar(&[-1.0]).unwrap(), 0.0);
        assert_eq!(net.taylor_expand(2).unwrap_err(), Error::NonAnalytic("relu"));
    }

    #[test]
    fn rescale_rejects_bad_delta() {
        let net = identity2();
        assert!(matches!(net.rescale(2, 0.0), Err(Error::Invalid(_))));
        assert!(matches!(net.rescale(2, -0.5), Err(Error::Invalid(_))));
        assert!(matches!(
            net.rescale(400, 0.1),
            Err(Error::DeltaUnderflow { .. })
        ));
        assert_eq!(net.rescale(3, 1.0).unwrap(), net);
    }
}
