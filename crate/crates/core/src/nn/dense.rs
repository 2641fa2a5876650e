use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{gemm, uniform_fan_in, Batch, Parameterized};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, v: &mut [f64]) {
        match self {
            Activation::Relu => v.iter_mut().for_each(|x| *x = x.max(0.0)),
            Activation::Tanh => v.iter_mut().for_each(|x| *x = x.tanh()),
            Activation::Linear => {}
        }
    }

    /// Multiplies `grad` by the derivative, expressed through the activation output.
    fn backprop(self, output: &[f64], grad: &mut [f64]) {
        match self {
            Activation::Relu => grad.iter_mut().zip(output).for_each(|(g, &y)| {
                if y <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Tanh => grad.iter_mut().zip(output).for_each(|(g, &y)| *g *= 1.0 - y * y),
            Activation::Linear => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

impl LayerShape {
    fn weight_len(&self) -> usize {
        self.inputs * self.outputs
    }

    fn param_len(&self) -> usize {
        self.weight_len() + self.outputs
    }
}

/// Stack of affine layers with element-wise activations.
///
/// Layer `l` owns a weight block `outputs × inputs` (row-major) followed by
/// its bias, packed back to back in one parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    layers: Vec<LayerShape>,
    params: Vec<f64>,
}

/// Activations recorded by [`DenseNet::forward_trace`] for the backward pass.
#[derive(Debug, Clone)]
pub struct DenseTrace {
    // inputs[l] feeds layer l; inputs[len] is the network output.
    values: Vec<Batch>,
}

impl DenseTrace {
    pub fn output(&self) -> &Batch {
        self.values.last().expect("trace always holds the input")
    }

    pub fn into_output(mut self) -> Batch {
        self.values.pop().expect("trace always holds the input")
    }
}

impl DenseNet {
    /// Zero-initialised network; `layers` lists `(width, activation)` per layer.
    pub fn zeros(input: usize, layers: &[(usize, Activation)]) -> Result<Self> {
        if input == 0 || layers.is_empty() || layers.iter().any(|&(w, _)| w == 0) {
            return Err(Error::Config(format!(
                "dense net needs positive widths, got input {input} and layers {layers:?}"
            )));
        }
        let mut shapes = Vec::with_capacity(layers.len());
        let mut prev = input;
        for &(outputs, activation) in layers {
            shapes.push(LayerShape {
                inputs: prev,
                outputs,
                activation,
            });
            prev = outputs;
        }
        let total = shapes.iter().map(LayerShape::param_len).sum();
        Ok(Self {
            layers: shapes,
            params: vec![0.0; total],
        })
    }

    /// Weights and biases uniform in ±1/√fan-in.
    pub fn new<R: Rng + ?Sized>(input: usize, layers: &[(usize, Activation)], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(input, layers)?;
        for l in 0..net.layers.len() {
            let fan_in = net.layers[l].inputs;
            let (w, b) = net.layer_params_mut(l);
            uniform_fan_in(rng, fan_in, w);
            uniform_fan_in(rng, fan_in, b);
        }
        Ok(net)
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn layers(&self) -> &[LayerShape] {
        &self.layers
    }

    fn offset(&self, layer: usize) -> usize {
        self.layers[..layer].iter().map(LayerShape::param_len).sum()
    }

    pub fn layer_params(&self, layer: usize) -> (&[f64], &[f64]) {
        let shape = self.layers[layer];
        let start = self.offset(layer);
        let block = &self.params[start..start + shape.param_len()];
        block.split_at(shape.weight_len())
    }

    /// `(weights, bias)` of one layer; weights are `outputs × inputs` row-major.
    pub fn layer_params_mut(&mut self, layer: usize) -> (&mut [f64], &mut [f64]) {
        let shape = self.layers[layer];
        let start = self.offset(layer);
        let block = &mut self.params[start..start + shape.param_len()];
        block.split_at_mut(shape.weight_len())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_batch(&Batch::row_vector(input))?.into_vec())
    }

    pub fn forward_batch(&self, x: &Batch) -> Result<Batch> {
        Ok(self.forward_trace(x)?.into_output())
    }

    pub fn forward_trace(&self, x: &Batch) -> Result<DenseTrace> {
        if x.cols() != self.input_width() {
            return Err(Error::Config(format!(
                "dense input width {} does not match network input {}",
                x.cols(),
                self.input_width()
            )));
        }
        let rows = x.rows();
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        values.push(x.clone());
        for (l, shape) in self.layers.iter().enumerate() {
            let (w, b) = self.layer_params(l);
            let mut out = Batch::zeros(rows, shape.outputs);
            for r in 0..rows {
                out.row_mut(r).copy_from_slice(b);
            }
            let input = values.last().expect("non-empty");
            gemm(
                rows,
                shape.inputs,
                shape.outputs,
                input.as_slice(),
                false,
                w,
                true,
                1.0,
                out.as_mut_slice(),
            );
            shape.activation.apply(out.as_mut_slice());
            values.push(out);
        }
        Ok(DenseTrace { values })
    }

    /// Backpropagates `d_output` (gradient w.r.t. the network output).
    ///
    /// Parameter gradients are *accumulated* into `grads` when given (layout of
    /// [`Parameterized::param_slices`]); the input gradient is returned when
    /// `want_input` is set.
    pub fn backward(
        &self,
        trace: &DenseTrace,
        d_output: &Batch,
        mut grads: Option<&mut [f64]>,
        want_input: bool,
    ) -> Result<Option<Batch>> {
        let out = trace.output();
        if d_output.rows() != out.rows() || d_output.cols() != out.cols() {
            return Err(Error::Config("dense backward: gradient shape mismatch".into()));
        }
        if let Some(g) = grads.as_deref() {
            if g.len() != self.params.len() {
                return Err(Error::Config("dense backward: gradient buffer length mismatch".into()));
            }
        }
        let rows = out.rows();
        let mut delta = d_output.clone();
        for l in (0..self.layers.len()).rev() {
            let shape = self.layers[l];
            shape
                .activation
                .backprop(trace.values[l + 1].as_slice(), delta.as_mut_slice());
            let input = &trace.values[l];
            if let Some(g) = grads.as_deref_mut() {
                let start = self.offset(l);
                let (gw, gb) = g[start..start + shape.param_len()].split_at_mut(shape.weight_len());
                gemm(
                    shape.outputs,
                    rows,
                    shape.inputs,
                    delta.as_slice(),
                    true,
                    input.as_slice(),
                    false,
                    1.0,
                    gw,
                );
                for r in 0..rows {
                    for (acc, d) in gb.iter_mut().zip(delta.row(r)) {
                        *acc += d;
                    }
                }
            }
            if l == 0 && !want_input {
                return Ok(None);
            }
            let (w, _) = self.layer_params(l);
            let mut d_input = Batch::zeros(rows, shape.inputs);
            gemm(
                rows,
                shape.outputs,
                shape.inputs,
                delta.as_slice(),
                false,
                w,
                false,
                0.0,
                d_input.as_mut_slice(),
            );
            delta = d_input;
        }
        Ok(Some(delta))
    }
}

impl Parameterized for DenseNet {
    fn param_slices(&self) -> Vec<&[f64]> {
        vec![&self.params]
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.params]
    }
}
