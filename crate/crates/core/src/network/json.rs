use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use super::{AffineLayer, Annotation, FeedforwardNetwork};
use crate::error::{Error, Result};
use crate::numeric::fmt_f64_17;
use crate::series::Nonlinearity;

#[derive(Serialize)]
struct DocOut<'a> {
    n: usize,
    activation: Nonlinearity,
    layers: Vec<LayerOut>,
    annotations: &'a [Annotation],
}

#[derive(Serialize)]
struct LayerOut {
    rows: usize,
    cols: usize,
    weights: Vec<Box<RawValue>>,
    bias: Vec<Box<RawValue>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocIn {
    n: usize,
    activation: Nonlinearity,
    layers: Vec<LayerIn>,
    #[serde(default)]
    annotations: Vec<Annotation>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerIn {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

fn raw(values: &[f64]) -> Vec<Box<RawValue>> {
    values
        .iter()
        .map(|v| RawValue::from_string(fmt_f64_17(*v)).expect("formatted float is valid JSON"))
        .collect()
}

pub(super) fn to_json(net: &FeedforwardNetwork) -> String {
    let doc = DocOut {
        n: net.n,
        activation: net.activation,
        layers: net
            .layers
            .iter()
            .map(|l| LayerOut {
                rows: l.rows,
                cols: l.cols,
                weights: raw(&l.weights),
                bias: raw(&l.bias),
            })
            .collect(),
        annotations: &net.annotations,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("network document serializes");
    s.push('\n');
    s
}

pub(super) fn from_json(text: &str) -> Result<FeedforwardNetwork> {
    let doc: DocIn = serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
    let layers = doc
        .layers
        .into_iter()
        .map(|l| AffineLayer::new(l.rows, l.cols, l.weights, l.bias))
        .collect::<Result<Vec<_>>>()?;
    FeedforwardNetwork::new(doc.n, doc.activation, layers, doc.annotations)
}
