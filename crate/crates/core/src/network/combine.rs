use super::{AffineLayer, Annotation, FeedforwardNetwork};
use crate::constructors::builder::Builder;
use crate::constructors::gates;
use crate::error::{Error, Result};
use crate::network::GateTag;
use crate::numeric::exact_sum;

/// How a shallower summand is carried up to the common depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Carry {
    /// One identity gate `(σ(v) − σ₀)/σ₁` per carried value per layer.
    Identity,
    /// Multi-neuron carries that leave the summand's Taylor expansion
    /// unchanged through total degree `cap`.
    Exact { cap: u32 },
}

/// Sums networks that share inputs and activation, padding shallower ones
/// with identity gates. Each summand's neurons are labelled with its index
/// as their `part`.
pub fn sum_networks(nets: &[FeedforwardNetwork]) -> Result<FeedforwardNetwork> {
    sum_networks_with(nets, Carry::Identity)
}

pub fn sum_networks_with(nets: &[FeedforwardNetwork], carry: Carry) -> Result<FeedforwardNetwork> {
    combine(nets, carry, true)
}

pub(crate) fn combine(
    nets: &[FeedforwardNetwork],
    carry: Carry,
    label_parts: bool,
) -> Result<FeedforwardNetwork> {
    let first = nets
        .first()
        .ok_or_else(|| Error::Invalid("cannot sum an empty list of networks".into()))?;
    for net in nets {
        if net.activation != first.activation {
            return Err(Error::ActivationMismatch(
                first.activation.name(),
                net.activation.name(),
            ));
        }
        if net.n != first.n {
            return Err(Error::Dimension {
                expected: first.n,
                got: net.n,
                context: "summand input width",
            });
        }
        if net.output_dim() != first.output_dim() {
            return Err(Error::Dimension {
                expected: first.output_dim(),
                got: net.output_dim(),
                context: "summand output width",
            });
        }
    }
    let depth = nets.iter().map(FeedforwardNetwork::depth).max().unwrap_or(0);
    let padded = nets
        .iter()
        .map(|net| pad(net, depth, carry))
        .collect::<Result<Vec<_>>>()?;
    let n = first.n;
    let out_dim = first.output_dim();

    if depth == 0 {
        let mut layer = AffineLayer::zeros(out_dim, n);
        for r in 0..out_dim {
            for c in 0..n {
                layer.weights_mut()[r * n + c] =
                    exact_sum(padded.iter().map(|p| p.layers[0].weight(r, c)));
            }
            layer.bias_mut()[r] = exact_sum(padded.iter().map(|p| p.layers[0].bias()[r]));
        }
        return FeedforwardNetwork::new(n, first.activation, vec![layer], Vec::new());
    }

    let mut layers = Vec::with_capacity(depth + 1);
    let mut annotations = Vec::new();
    let mut prev_offsets = vec![0usize; padded.len()];
    let mut prev_width = n;
    for l in 0..depth {
        let rows: usize = padded.iter().map(|p| p.layers[l].rows).sum();
        let mut layer = AffineLayer::zeros(rows, prev_width);
        let mut offsets = Vec::with_capacity(padded.len());
        let mut row0 = 0;
        for (i, p) in padded.iter().enumerate() {
            let src = &p.layers[l];
            let col0 = if l == 0 { 0 } else { prev_offsets[i] };
            for r in 0..src.rows {
                for c in 0..src.cols {
                    layer.weights_mut()[(row0 + r) * prev_width + col0 + c] = src.weight(r, c);
                }
                layer.bias_mut()[row0 + r] = src.bias[r];
            }
            for a in p.annotations.iter().filter(|a| a.layer == l) {
                annotations.push(Annotation {
                    from: a.from + row0,
                    to: a.to + row0,
                    part: if label_parts { Some(i) } else { a.part },
                    ..a.clone()
                });
            }
            offsets.push(row0);
            row0 += src.rows;
        }
        layers.push(layer);
        prev_offsets = offsets;
        prev_width = rows;
    }
    let mut last = AffineLayer::zeros(out_dim, prev_width);
    for r in 0..out_dim {
        for (i, p) in padded.iter().enumerate() {
            let src = &p.layers[depth];
            for c in 0..src.cols {
                last.weights_mut()[r * prev_width + prev_offsets[i] + c] = src.weight(r, c);
            }
        }
        last.bias_mut()[r] = exact_sum(padded.iter().map(|p| p.layers[depth].bias()[r]));
    }
    layers.push(last);
    FeedforwardNetwork::new(n, first.activation, layers, annotations)
}

/// Extends `net` to `depth` hidden layers with carry gates on its outputs.
fn pad(net: &FeedforwardNetwork, depth: usize, carry: Carry) -> Result<FeedforwardNetwork> {
    if net.depth() >= depth {
        return Ok(net.clone());
    }
    let sigma = net.activation;
    let rows: Vec<u32> = match carry {
        Carry::Identity => vec![1; net.output_dim()],
        Carry::Exact { cap } => net
            .taylor_expand_outputs(cap)?
            .iter()
            .map(|s| {
                let scale = (0..=cap).fold(0.0f64, |m, d| m.max(s.degree_magnitude(d)));
                match s.lowest_degree(1e-12 * scale) {
                    Some(e) if e > 0 => cap / e,
                    _ => cap,
                }
            })
            .collect(),
    };
    let mark_part = net.annotations.first().and_then(|a| a.part);
    let before = net.annotations.len();
    let (mut b, mut outs) = Builder::from_network(net);
    for _ in net.depth()..depth {
        let frags = outs
            .iter()
            .zip(&rows)
            .map(|(f, &m)| match carry {
                Carry::Identity => gates::identity(sigma, f, GateTag::Carry),
                Carry::Exact { .. } => gates::exact_carry(sigma, f, m),
            })
            .collect::<Result<Vec<_>>>()?;
        outs = b.layer(frags)?;
    }
    let mut padded = b.finish(&outs)?;
    for a in &mut padded.annotations[before..] {
        a.part = mark_part;
    }
    Ok(padded)
}

impl FeedforwardNetwork {
    /// Recovers the summands of a network built by [`sum_networks`].
    ///
    /// Returns `None` unless every hidden neuron carries a part label and no
    /// weight connects different parts. Each recovered part gets the output
    /// bias that makes its value at the origin zero.
    pub fn split_parts(&self) -> Option<Vec<FeedforwardNetwork>> {
        let depth = self.depth();
        if depth == 0 {
            return None;
        }
        let widths = self.hidden_widths();
        let mut owner: Vec<Vec<Option<usize>>> = widths.iter().map(|&w| vec![None; w]).collect();
        for a in &self.annotations {
            let p = a.part?;
            for slot in &mut owner[a.layer][a.from..a.to] {
                if slot.replace(p).is_some() {
                    return None;
                }
            }
        }
        if owner.iter().flatten().any(Option::is_none) {
            return None;
        }
        let mut ids: Vec<usize> = owner.iter().flatten().map(|p| p.expect("checked")).collect();
        ids.sort_unstable();
        ids.dedup();

        for l in 1..depth {
            let layer = &self.layers[l];
            for r in 0..layer.rows {
                for c in 0..layer.cols {
                    if layer.weight(r, c) != 0.0 && owner[l][r] != owner[l - 1][c] {
                        return None;
                    }
                }
            }
        }

        let mut parts = Vec::with_capacity(ids.len());
        for &id in &ids {
            let keep: Vec<Vec<usize>> = owner
                .iter()
                .map(|layer| {
                    layer
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| **p == Some(id))
                        .map(|(i, _)| i)
                        .collect()
                })
                .collect();
            let mut layers = Vec::with_capacity(depth + 1);
            for l in 0..=depth {
                let src = &self.layers[l];
                let rows: Vec<usize> = if l < depth {
                    keep[l].clone()
                } else {
                    (0..src.rows).collect()
                };
                let cols: Vec<usize> = if l == 0 {
                    (0..src.cols).collect()
                } else {
                    keep[l - 1].clone()
                };
                let weights = rows
                    .iter()
                    .flat_map(|&r| cols.iter().map(move |&c| src.weight(r, c)))
                    .collect();
                let bias = if l < depth {
                    rows.iter().map(|&r| src.bias[r]).collect()
                } else {
                    vec![0.0; rows.len()]
                };
                layers.push(AffineLayer::new(rows.len(), cols.len(), weights, bias).ok()?);
            }
            let mut annotations = Vec::new();
            for a in self.annotations.iter().filter(|a| a.part == Some(id)) {
                let base = keep[a.layer].iter().position(|&i| i == a.from)?;
                let len = a.to - a.from;
                if keep[a.layer].get(base + len - 1) != Some(&(a.to - 1)) {
                    return None;
                }
                annotations.push(Annotation {
                    from: base,
                    to: base + len,
                    ..a.clone()
                });
            }
            let mut net = FeedforwardNetwork::new(self.n, self.activation, layers, annotations).ok()?;
            let at_zero = net.eval(&vec![0.0; self.n]).ok()?;
            let last = net.layers.last_mut().expect("non-empty");
            for (b, v) in last.bias.iter_mut().zip(at_zero) {
                *b = -v;
            }
            parts.push(net);
        }
        Some(parts)
    }

    pub(crate) fn mark_correction(mut self) -> Self {
        for a in &mut self.annotations {
            a.correction = true;
        }
        self
    }
}
