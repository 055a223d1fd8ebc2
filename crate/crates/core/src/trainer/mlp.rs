use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{AffineLayer, FeedforwardNetwork};
use crate::series::Nonlinearity;

/// Dense MLP with every parameter in one flat vector.
///
/// Layer `l` stores its row-major weights followed by its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    activation: Nonlinearity,
    params: Vec<f64>,
    offsets: Vec<usize>,
}

/// Forward-pass buffers reused across samples.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    delta: Vec<f64>,
    next: Vec<f64>,
}

impl Mlp {
    /// `depth` hidden layers of `width` neurons on `n` inputs, one output.
    pub fn zeros(n: usize, depth: usize, width: usize, activation: Nonlinearity) -> Result<Self> {
        if n == 0 || depth == 0 || width == 0 {
            return Err(Error::Invalid(format!(
                "n, depth and width must be positive (got {n}, {depth}, {width})"
            )));
        }
        let mut sizes = vec![n];
        sizes.extend(std::iter::repeat(width).take(depth));
        sizes.push(1);
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut total = 0;
        for w in sizes.windows(2) {
            offsets.push(total);
            total += w[1] * w[0] + w[1];
        }
        offsets.push(total);
        Ok(Self {
            sizes,
            activation,
            params: vec![0.0; total],
            offsets,
        })
    }

    /// Uniform `±√(6/(fan_in + fan_out))` weights, zero biases.
    pub fn init(
        n: usize,
        depth: usize,
        width: usize,
        activation: Nonlinearity,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let mut m = Self::zeros(n, depth, width, activation)?;
        for l in 0..m.layers() {
            let (rows, cols) = (m.sizes[l + 1], m.sizes[l]);
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            let start = m.offsets[l];
            for w in &mut m.params[start..start + rows * cols] {
                *w = rng.gen_range(-limit..limit);
            }
        }
        Ok(m)
    }

    pub fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activation(&self) -> Nonlinearity {
        self.activation
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn split(&self, l: usize) -> (&[f64], &[f64]) {
        let (rows, cols) = (self.sizes[l + 1], self.sizes[l]);
        let s = self.offsets[l];
        let w = &self.params[s..s + rows * cols];
        let b = &self.params[s + rows * cols..self.offsets[l + 1]];
        (w, b)
    }

    /// Output for one input; the workspace keeps the intermediate values.
    pub fn forward(&self, x: &[f64], ws: &mut Workspace) -> f64 {
        let k = self.layers();
        ws.pre.resize_with(k, Vec::new);
        ws.post.resize_with(k + 1, Vec::new);
        ws.post[0].clear();
        ws.post[0].extend_from_slice(x);
        for l in 0..k {
            let (w, b) = self.split(l);
            let cols = self.sizes[l];
            let (lower, upper) = ws.post.split_at_mut(l + 1);
            let input = &lower[l];
            let z = &mut ws.pre[l];
            z.clear();
            z.extend(b.iter().enumerate().map(|(r, &br)| {
                let row = &w[r * cols..(r + 1) * cols];
                row.iter().zip(input).fold(br, |acc, (a, v)| acc + a * v)
            }));
            let a = &mut upper[0];
            a.clear();
            if l + 1 < k {
                a.extend(z.iter().map(|&v| self.activation.eval(v)));
            } else {
                a.extend_from_slice(z);
            }
        }
        ws.post[k][0]
    }

    /// Adds `dy · ∂y/∂θ` for the last forward pass into `grad`.
    pub fn backward(&self, dy: f64, ws: &mut Workspace, grad: &mut [f64]) {
        let k = self.layers();
        ws.delta.clear();
        ws.delta.push(dy);
        for l in (0..k).rev() {
            let (rows, cols) = (self.sizes[l + 1], self.sizes[l]);
            let s = self.offsets[l];
            let input = &ws.post[l];
            for r in 0..rows {
                let d = ws.delta[r];
                if d == 0.0 {
                    continue;
                }
                let g = &mut grad[s + r * cols..s + (r + 1) * cols];
                for (gi, v) in g.iter_mut().zip(input) {
                    *gi += d * v;
                }
                grad[s + rows * cols + r] += d;
            }
            if l == 0 {
                break;
            }
            let (w, _) = self.split(l);
            ws.next.clear();
            ws.next.resize(cols, 0.0);
            for r in 0..rows {
                let d = ws.delta[r];
                if d == 0.0 {
                    continue;
                }
                for (c, nv) in ws.next.iter_mut().enumerate() {
                    *nv += d * w[r * cols + c];
                }
            }
            for (c, nv) in ws.next.iter_mut().enumerate() {
                *nv *= self.activation.derivative(ws.pre[l - 1][c]);
            }
            std::mem::swap(&mut ws.delta, &mut ws.next);
        }
    }

    /// The same map as a [`FeedforwardNetwork`].
    pub fn to_network(&self) -> Result<FeedforwardNetwork> {
        let layers = (0..self.layers())
            .map(|l| {
                let (w, b) = self.split(l);
                AffineLayer::new(self.sizes[l + 1], self.sizes[l], w.to_vec(), b.to_vec())
            })
            .collect::<Result<Vec<_>>>()?;
        FeedforwardNetwork::new(self.sizes[0], self.activation, layers, Vec::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn shape_and_count() {
        let m = Mlp::zeros(2, 1, 8, Nonlinearity::Tanh).unwrap();
        assert_eq!(m.param_count(), 8 * 2 + 8 + 8 + 1);
        assert!(Mlp::zeros(2, 1, 0, Nonlinearity::Tanh).is_err());
    }

    #[test]
    fn forward_matches_network_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = Mlp::init(3, 2, 5, Nonlinearity::Tanh, &mut rng).unwrap();
        let net = m.to_network().unwrap();
        let x = [0.3, -1.2, 0.8];
        let mut ws = Workspace::default();
        assert_eq!(m.forward(&x, &mut ws), net.eval_scalar(&x).unwrap());
    }
}
