use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{LayerSpec, ModelSpec};
use super::{matmul, Real};
use crate::error::{Error, Result};

/// Samples per gradient work unit. Fixed so the reduction order, and hence
/// the floating-point result, does not depend on the thread count.
pub(crate) const CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

#[derive(Debug, Clone)]
struct Step {
    layer: LayerSpec,
    input: (usize, usize),
    output: (usize, usize),
    /// Index of the weight tensor; the bias follows it.
    param: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Network<T> {
    pub spec: ModelSpec,
    pub params: Vec<Param<T>>,
    steps: Vec<Step>,
}

/// Activations kept for the backward pass.
pub struct Cache<T> {
    /// `acts[i]` is the input of step `i`; the last entry is the output.
    acts: Vec<Vec<T>>,
    pool_idx: Vec<Vec<u32>>,
    n: usize,
}

impl<T> Cache<T> {
    pub fn output(&self) -> &[T] {
        self.acts.last().unwrap()
    }
}

fn plan(spec: &ModelSpec) -> Result<(Vec<Step>, Vec<(String, Vec<usize>)>)> {
    let shapes = spec.shapes()?;
    let mut steps = Vec::new();
    let mut params = Vec::new();
    for (i, layer) in spec.layers().into_iter().enumerate() {
        let (input, output) = (shapes[i], shapes[i + 1]);
        let param = match layer {
            LayerSpec::Dense { out } => {
                let fan_in = input.0 * input.1;
                params.push((format!("{i}.weight"), vec![out, fan_in]));
                params.push((format!("{i}.bias"), vec![out]));
                Some(params.len() - 2)
            }
            LayerSpec::Conv1d { filters, width } => {
                params.push((format!("{i}.weight"), vec![filters, input.0, width]));
                params.push((format!("{i}.bias"), vec![filters]));
                Some(params.len() - 2)
            }
            _ => None,
        };
        steps.push(Step {
            layer,
            input,
            output,
            param,
        });
    }
    Ok((steps, params))
}

fn elu<T: Real>(x: T) -> T {
    if x > T::ZERO {
        x
    } else {
        x.exp() - T::ONE
    }
}

fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::ZERO {
        T::ONE / (T::ONE + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::ONE + e)
    }
}

/// `col[(c*w + k) * len + t] = x[c, t + k - w/2]`, zero outside.
fn im2col<T: Real>(x: &[T], channels: usize, len: usize, width: usize, col: &mut [T]) {
    let half = width / 2;
    for c in 0..channels {
        let row = &x[c * len..(c + 1) * len];
        for k in 0..width {
            let dst = &mut col[(c * width + k) * len..(c * width + k + 1) * len];
            // t + k - half in [0, len)
            let lo = half.saturating_sub(k);
            let hi = (len + half).saturating_sub(k).min(len);
            dst[..lo].fill(T::ZERO);
            if hi > lo {
                let src0 = lo + k - half;
                dst[lo..hi].copy_from_slice(&row[src0..src0 + hi - lo]);
            }
            dst[hi.max(lo)..].fill(T::ZERO);
        }
    }
}

fn col2im<T: Real>(col: &[T], channels: usize, len: usize, width: usize, dx: &mut [T]) {
    let half = width / 2;
    for c in 0..channels {
        let row = &mut dx[c * len..(c + 1) * len];
        for k in 0..width {
            let src = &col[(c * width + k) * len..(c * width + k + 1) * len];
            let lo = half.saturating_sub(k);
            let hi = (len + half).saturating_sub(k).min(len);
            for t in lo..hi {
                row[t + k - half] += src[t];
            }
        }
    }
}

impl<T: Real> Network<T> {
    /// Kaiming-uniform weights (bound `sqrt(6 / fan_in)`), zero biases.
    pub fn new<R: Rng>(spec: &ModelSpec, rng: &mut R) -> Result<Self> {
        let (steps, shapes) = plan(spec)?;
        let params = shapes
            .into_iter()
            .map(|(name, shape)| {
                let len = shape.iter().product();
                let data = if name.ends_with(".weight") {
                    let fan_in: usize = shape[1..].iter().product();
                    let bound = (6.0 / fan_in as f64).sqrt();
                    (0..len)
                        .map(|_| T::from_f64(rng.gen_range(-bound..bound)))
                        .collect()
                } else {
                    vec![T::ZERO; len]
                };
                Param { name, shape, data }
            })
            .collect();
        Ok(Network {
            spec: spec.clone(),
            params,
            steps,
        })
    }

    /// Network with the given parameters; names and shapes must match the spec.
    pub fn from_params(spec: &ModelSpec, params: Vec<Param<T>>) -> Result<Self> {
        let (steps, shapes) = plan(spec)?;
        if shapes.len() != params.len() {
            return Err(Error::Shape(format!(
                "expected {} tensors, found {}",
                shapes.len(),
                params.len()
            )));
        }
        for ((name, shape), p) in shapes.iter().zip(&params) {
            if *name != p.name || *shape != p.shape || p.data.len() != shape.iter().product::<usize>() {
                return Err(Error::Shape(format!(
                    "tensor {} {:?} does not match expected {} {:?}",
                    p.name, p.shape, name, shape
                )));
            }
        }
        Ok(Network {
            spec: spec.clone(),
            params,
            steps,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        let (c, l) = self.steps.last().unwrap().output;
        c * l
    }

    pub fn n_params(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }

    pub fn zero_grads(&self) -> Vec<Vec<T>> {
        self.params.iter().map(|p| vec![T::ZERO; p.data.len()]).collect()
    }

    fn check_input(&self, x: &[T]) -> Result<usize> {
        let d = self.input_dim();
        if !x.len().is_multiple_of(d) {
            return Err(Error::Shape(format!(
                "input length {} is not a multiple of input_dim {d}",
                x.len()
            )));
        }
        Ok(x.len() / d)
    }

    /// Forward pass over `n` row-major samples, keeping activations.
    pub fn forward_cache(&self, x: &[T]) -> Result<Cache<T>> {
        let n = self.check_input(x)?;
        let mut acts = vec![x.to_vec()];
        let mut pool_idx = Vec::new();
        for step in &self.steps {
            let input = acts.last().unwrap();
            let (ci, li) = step.input;
            let (co, lo) = step.output;
            let mut out = vec![T::ZERO; n * co * lo];
            let mut idx = Vec::new();
            match step.layer {
                LayerSpec::Dense { out: units } => {
                    let p = step.param.unwrap();
                    let fan_in = ci * li;
                    matmul(n, fan_in, units, input, false, &self.params[p].data, true, &mut out, false);
                    let bias = &self.params[p + 1].data;
                    for row in out.chunks_mut(units) {
                        for (o, &b) in row.iter_mut().zip(bias) {
                            *o += b;
                        }
                    }
                }
                LayerSpec::Conv1d { filters, width } => {
                    let p = step.param.unwrap();
                    let (w, bias) = (&self.params[p].data, &self.params[p + 1].data);
                    let mut col = vec![T::ZERO; ci * width * li];
                    for s in 0..n {
                        im2col(&input[s * ci * li..(s + 1) * ci * li], ci, li, width, &mut col);
                        let y = &mut out[s * co * lo..(s + 1) * co * lo];
                        matmul(filters, ci * width, li, w, false, &col, false, y, false);
                        for (f, row) in y.chunks_mut(li).enumerate() {
                            for v in row {
                                *v += bias[f];
                            }
                        }
                    }
                }
                LayerSpec::MaxPool { width } => {
                    idx = vec![0u32; n * co * lo];
                    for (r, (src, dst)) in input.chunks(li).zip(out.chunks_mut(lo)).enumerate() {
                        for (j, d) in dst.iter_mut().enumerate() {
                            let mut best = j * width;
                            for k in j * width + 1..(j + 1) * width {
                                if src[k] > src[best] {
                                    best = k;
                                }
                            }
                            *d = src[best];
                            idx[r * lo + j] = best as u32;
                        }
                    }
                }
                LayerSpec::Elu => out.iter_mut().zip(input).for_each(|(o, &v)| *o = elu(v)),
                LayerSpec::Sigmoid => out.iter_mut().zip(input).for_each(|(o, &v)| *o = sigmoid(v)),
                LayerSpec::Relu => out
                    .iter_mut()
                    .zip(input)
                    .for_each(|(o, &v)| *o = if v > T::ZERO { v } else { T::ZERO }),
                LayerSpec::Flatten => out.copy_from_slice(input),
            }
            pool_idx.push(idx);
            acts.push(out);
        }
        Ok(Cache { acts, pool_idx, n })
    }

    /// Gradients of the parameters given `dout = dL/d(output)`.
    pub fn backward(&self, cache: &Cache<T>, dout: &[T]) -> Vec<Vec<T>> {
        let n = cache.n;
        let mut grads = self.zero_grads();
        let mut delta = dout.to_vec();
        for (i, step) in self.steps.iter().enumerate().rev() {
            let input = &cache.acts[i];
            let output = &cache.acts[i + 1];
            let (ci, li) = step.input;
            let (co, lo) = step.output;
            let need_dx = i > 0;
            let mut dx = vec![T::ZERO; if need_dx || !matches!(step.layer, LayerSpec::Dense { .. } | LayerSpec::Conv1d { .. }) { n * ci * li } else { 0 }];
            match step.layer {
                LayerSpec::Dense { out: units } => {
                    let p = step.param.unwrap();
                    let fan_in = ci * li;
                    let (gw, rest) = grads[p..].split_at_mut(1);
                    matmul(units, n, fan_in, &delta, true, input, false, &mut gw[0], true);
                    for row in delta.chunks(units) {
                        for (g, &d) in rest[0].iter_mut().zip(row) {
                            *g += d;
                        }
                    }
                    if need_dx {
                        matmul(n, units, fan_in, &delta, false, &self.params[p].data, false, &mut dx, false);
                    }
                }
                LayerSpec::Conv1d { filters, width } => {
                    let p = step.param.unwrap();
                    let w = &self.params[p].data;
                    let mut col = vec![T::ZERO; ci * width * li];
                    let mut dcol = vec![T::ZERO; ci * width * li];
                    for s in 0..n {
                        let dy = &delta[s * co * lo..(s + 1) * co * lo];
                        im2col(&input[s * ci * li..(s + 1) * ci * li], ci, li, width, &mut col);
                        matmul(filters, li, ci * width, dy, false, &col, true, &mut grads[p], true);
                        for (f, row) in dy.chunks(lo).enumerate() {
                            grads[p + 1][f] += row.iter().copied().sum::<T>();
                        }
                        if need_dx {
                            matmul(ci * width, filters, li, w, true, dy, false, &mut dcol, false);
                            col2im(&dcol, ci, li, width, &mut dx[s * ci * li..(s + 1) * ci * li]);
                        }
                    }
                }
                LayerSpec::MaxPool { .. } => {
                    let idx = &cache.pool_idx[i];
                    for (r, row) in delta.chunks(lo).enumerate() {
                        for (j, &d) in row.iter().enumerate() {
                            dx[r * li + idx[r * lo + j] as usize] += d;
                        }
                    }
                }
                LayerSpec::Elu => {
                    for ((g, &d), (&x, &y)) in dx.iter_mut().zip(&delta).zip(input.iter().zip(output)) {
                        *g = if x > T::ZERO { d } else { d * (y + T::ONE) };
                    }
                }
                LayerSpec::Sigmoid => {
                    for ((g, &d), &y) in dx.iter_mut().zip(&delta).zip(output) {
                        *g = d * y * (T::ONE - y);
                    }
                }
                LayerSpec::Relu => {
                    for ((g, &d), &x) in dx.iter_mut().zip(&delta).zip(input) {
                        *g = if x > T::ZERO { d } else { T::ZERO };
                    }
                }
                LayerSpec::Flatten => dx.copy_from_slice(&delta),
            }
            if !need_dx {
                break;
            }
            delta = dx;
        }
        grads
    }

    /// Sum of squared errors over a batch and the gradient of
    /// `sse / norm`.
    pub fn sse_and_grad(&self, x: &[T], targets: &[T], norm: f64) -> Result<(f64, Vec<Vec<T>>)> {
        let cache = self.forward_cache(x)?;
        let y = cache.output();
        if y.len() != targets.len() {
            return Err(Error::Shape(format!(
                "target length {} does not match output length {}",
                targets.len(),
                y.len()
            )));
        }
        let scale = T::from_f64(2.0 / norm);
        let mut sse = 0.0;
        let dout: Vec<T> = y
            .iter()
            .zip(targets)
            .map(|(&a, &b)| {
                let e = a - b;
                sse += (e * e).to_f64();
                scale * e
            })
            .collect();
        Ok((sse, self.backward(&cache, &dout)))
    }

    /// Mean-squared error and its gradient over a batch, computed in fixed
    /// chunks of samples in parallel and reduced in chunk order.
    pub fn mse_and_grad(&self, x: &[T], targets: &[T]) -> Result<(f64, Vec<Vec<T>>)> {
        let n = self.check_input(x)?;
        let (d, od) = (self.input_dim(), self.output_dim());
        if targets.len() != n * od {
            return Err(Error::Shape(format!(
                "expected {} targets, found {}",
                n * od,
                targets.len()
            )));
        }
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let norm = (n * od) as f64;
        let parts: Vec<Result<(f64, Vec<Vec<T>>)>> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let (a, b) = (c * CHUNK, ((c + 1) * CHUNK).min(n));
                self.sse_and_grad(&x[a * d..b * d], &targets[a * od..b * od], norm)
            })
            .collect();
        let mut total = 0.0;
        let mut grads = self.zero_grads();
        for part in parts {
            let (sse, g) = part?;
            total += sse;
            for (acc, gi) in grads.iter_mut().zip(g) {
                for (a, v) in acc.iter_mut().zip(gi) {
                    *a += v;
                }
            }
        }
        Ok((total / norm, grads))
    }

    /// Inference over `n` row-major samples.
    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        let n = self.check_input(x)?;
        let d = self.input_dim();
        let parts: Vec<Result<Vec<T>>> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let (a, b) = (c * CHUNK, ((c + 1) * CHUNK).min(n));
                Ok(self.forward_cache(&x[a * d..b * d])?.acts.pop().unwrap())
            })
            .collect();
        let mut out = Vec::with_capacity(n * self.output_dim());
        for p in parts {
            out.extend(p?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::super::spec::OutputHead;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny(head: OutputHead) -> ModelSpec {
        use LayerSpec::*;
        ModelSpec {
            input_dim: 16,
            architecture: vec![
                Conv1d { filters: 3, width: 5 },
                MaxPool { width: 2 },
                Elu,
                Conv1d { filters: 2, width: 3 },
                MaxPool { width: 2 },
                Elu,
                Flatten,
                Dense { out: 5 },
                Elu,
            ],
            head,
        }
    }

    fn finite_diff_check(spec: &ModelSpec) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net: Network<f64> = Network::new(spec, &mut rng).unwrap();
        // Keep ReLU-head pre-activations away from the kink.
        if spec.head == OutputHead::InverseAlpha {
            let last = net.params.len() - 1;
            net.params[last].data.iter_mut().for_each(|b| *b = 2.0);
        }
        let n = 3;
        let x: Vec<f64> = (0..n * 16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t: Vec<f64> = (0..n * net.output_dim()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let (_, grads) = net.mse_and_grad(&x, &t).unwrap();
        let h = 1e-4;
        for (pi, g) in grads.iter().enumerate() {
            for j in 0..g.len() {
                let orig = net.params[pi].data[j];
                net.params[pi].data[j] = orig + h;
                let (lp, _) = net.mse_and_grad(&x, &t).unwrap();
                net.params[pi].data[j] = orig - h;
                let (lm, _) = net.mse_and_grad(&x, &t).unwrap();
                net.params[pi].data[j] = orig;
                let fd = (lp - lm) / (2.0 * h);
                let rel = (fd - g[j]).abs() / fd.abs().max(g[j].abs()).max(1e-8);
                assert!(
                    rel < 1e-4 || (fd - g[j]).abs() < 1e-9,
                    "{} [{j}]: analytic {} vs numeric {fd}",
                    net.params[pi].name,
                    g[j]
                );
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        finite_diff_check(&tiny(OutputHead::Alpha));
        finite_diff_check(&tiny(OutputHead::AlphaAndScattering));
        finite_diff_check(&tiny(OutputHead::InverseAlpha));
    }

    #[test]
    fn zero_weights_give_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net: Network<f64> = Network::new(&tiny(OutputHead::Alpha), &mut rng).unwrap();
        net.params.iter_mut().for_each(|p| p.data.fill(0.0));
        let y = net.forward(&vec![0.7; 32]).unwrap();
        assert_eq!(y.len(), 12);
        assert!(y.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn delta_kernel_is_identity() {
        let spec = ModelSpec {
            input_dim: 10,
            architecture: vec![LayerSpec::Conv1d { filters: 1, width: 5 }],
            head: OutputHead::Alpha,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net: Network<f64> = Network::new(&spec, &mut rng).unwrap();
        net.params[0].data = vec![0.0, 0.0, 1.0, 0.0, 0.0];
        net.params[1].data = vec![0.0];
        let x: Vec<f64> = (0..10).map(|i| i as f64 - 3.5).collect();
        let cache = net.forward_cache(&x).unwrap();
        assert_eq!(cache.acts[1], x);
    }

    #[test]
    fn shifted_kernel_pads_with_zeros() {
        let spec = ModelSpec {
            input_dim: 6,
            architecture: vec![LayerSpec::Conv1d { filters: 1, width: 3 }],
            head: OutputHead::Alpha,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net: Network<f64> = Network::new(&spec, &mut rng).unwrap();
        // y[t] = x[t + 1]
        net.params[0].data = vec![0.0, 0.0, 1.0];
        net.params[1].data = vec![0.0];
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let cache = net.forward_cache(&x).unwrap();
        assert_eq!(cache.acts[1], vec![2.0, 3.0, 4.0, 5.0, 6.0, 0.0]);
    }

    #[test]
    fn chunked_gradient_matches_single_pass() {
        let spec = tiny(OutputHead::Alpha);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net: Network<f64> = Network::new(&spec, &mut rng).unwrap();
        let n = 37;
        let x: Vec<f64> = (0..n * 16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t: Vec<f64> = (0..n * 6).map(|_| rng.gen_range(0.0..1.0)).collect();
        let (l1, g1) = net.mse_and_grad(&x, &t).unwrap();
        let (sse, g2) = net.sse_and_grad(&x, &t, (n * 6) as f64).unwrap();
        assert!((l1 - sse / (n * 6) as f64).abs() < 1e-12);
        for (a, b) in g1.iter().flatten().zip(g2.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_mismatched_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net: Network<f32> = Network::new(&tiny(OutputHead::Alpha), &mut rng).unwrap();
        assert!(matches!(net.forward(&[0.0; 17]), Err(Error::Shape(_))));
    }
}
