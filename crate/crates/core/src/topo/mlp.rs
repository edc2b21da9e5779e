use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, x: &mut Array2<f64>) {
        if self == Activation::Relu {
            x.mapv_inplace(|v| v.max(0.0));
        }
    }
}

/// Row-vector affine map `y = x · W + b`, with `W` stored as `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn new(weight: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        if weight.ncols() != bias.len() {
            return Err(Error::Shape(format!(
                "weight is {}x{} but bias has {} entries",
                weight.nrows(),
                weight.ncols(),
                bias.len()
            )));
        }
        Ok(Linear { weight, bias })
    }

    pub fn input_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.ncols()
    }

    fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }
}

/// Stack of linear layers. `activations[k]` follows layer `k`; the output
/// layer is always linear.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Linear>,
    pub activations: Vec<Activation>,
}

impl MlpParams {
    pub fn new(layers: Vec<Linear>, activations: Vec<Activation>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("an MLP needs at least one layer".into()));
        }
        if activations.len() + 1 != layers.len() {
            return Err(Error::Shape(format!(
                "{} layers need {} hidden activations, got {}",
                layers.len(),
                layers.len() - 1,
                activations.len()
            )));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::Shape(format!(
                    "layer {k} outputs {} features but layer {} expects {}",
                    pair[0].output_dim(),
                    k + 1,
                    pair[1].input_dim()
                )));
            }
        }
        Ok(MlpParams {
            layers,
            activations,
        })
    }

    pub fn linear(weight: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        Self::new(vec![Linear::new(weight, bias)?], Vec::new())
    }

    pub fn identity(dim: usize) -> Self {
        MlpParams {
            layers: vec![Linear {
                weight: Array2::eye(dim),
                bias: Array1::zeros(dim),
            }],
            activations: Vec::new(),
        }
    }

    /// Gaussian init scaled by `1/sqrt(fan_in)`, small random biases,
    /// ReLU between layers. `sizes` lists every layer width including input
    /// and output.
    pub fn random<R: Rng>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::Shape("need at least input and output sizes".into()));
        }
        let layers = sizes
            .windows(2)
            .map(|w| {
                let scale = 1.0 / (w[0] as f64).sqrt();
                let weight = Array2::from_shape_fn((w[0], w[1]), |_| {
                    scale * rng.sample::<f64, _>(StandardNormal)
                });
                let bias =
                    Array1::from_shape_fn(w[1], |_| 0.1 * rng.sample::<f64, _>(StandardNormal));
                Linear { weight, bias }
            })
            .collect();
        Self::new(layers, vec![Activation::Relu; sizes.len() - 2])
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn is_linear(&self) -> bool {
        self.activations.iter().all(|&a| a == Activation::Identity)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub(crate) fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.weight.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }
}

pub(crate) struct MlpCache {
    /// Input to each layer.
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of each hidden layer.
    pre: Vec<Array2<f64>>,
}

impl MlpCache {
    /// Signs of every ReLU pre-activation, used to detect kink crossings.
    pub(crate) fn relu_pattern(&self, p: &MlpParams, out: &mut Vec<bool>) {
        for (pre, &act) in self.pre.iter().zip(&p.activations) {
            if act == Activation::Relu {
                out.extend(pre.iter().map(|&v| v > 0.0));
            }
        }
    }

    pub(crate) fn min_abs_relu_pre(&self, p: &MlpParams) -> f64 {
        self.pre
            .iter()
            .zip(&p.activations)
            .filter(|(_, &a)| a == Activation::Relu)
            .flat_map(|(pre, _)| pre.iter().map(|v| v.abs()))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrads {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<LinearGrads>,
}

impl MlpGrads {
    pub(crate) fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.weight.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }
}

fn check_input(x: &ArrayView2<f64>, p: &MlpParams) -> Result<()> {
    if x.ncols() != p.input_dim() {
        return Err(Error::Shape(format!(
            "MLP expects {} input features, got {}",
            p.input_dim(),
            x.ncols()
        )));
    }
    Ok(())
}

/// Applies the MLP to each row of `x`.
pub fn mlp_forward(x: ArrayView2<f64>, p: &MlpParams) -> Result<Array2<f64>> {
    check_input(&x, p)?;
    Ok(forward_cached(x, p).0)
}

pub(crate) fn forward_cached(x: ArrayView2<f64>, p: &MlpParams) -> (Array2<f64>, MlpCache) {
    let mut inputs = Vec::with_capacity(p.layers.len());
    let mut pre = Vec::with_capacity(p.activations.len());
    let mut h = x.to_owned();
    for (k, layer) in p.layers.iter().enumerate() {
        let mut z = layer.forward(h.view());
        inputs.push(h);
        if let Some(&act) = p.activations.get(k) {
            pre.push(z.clone());
            act.apply(&mut z);
        }
        h = z;
    }
    (h, MlpCache { inputs, pre })
}

pub(crate) fn backward(
    p: &MlpParams,
    cache: &MlpCache,
    grad_out: ArrayView2<f64>,
) -> (Array2<f64>, MlpGrads) {
    let mut grads = Vec::with_capacity(p.layers.len());
    let mut g = grad_out.to_owned();
    for k in (0..p.layers.len()).rev() {
        if let Some(&act) = p.activations.get(k) {
            if act == Activation::Relu {
                ndarray::Zip::from(&mut g)
                    .and(&cache.pre[k])
                    .for_each(|gv, &z| {
                        if z <= 0.0 {
                            *gv = 0.0;
                        }
                    });
            }
        }
        let layer = &p.layers[k];
        grads.push(LinearGrads {
            weight: cache.inputs[k].t().dot(&g),
            bias: g.sum_axis(Axis(0)),
        });
        g = g.dot(&layer.weight.t());
    }
    grads.reverse();
    (g, MlpGrads { layers: grads })
}
