//! Actor and critic function approximators.
//!
//! Two shapes share one interface:
//!
//! * `Mlp`: a plain dense stack over the current observation, or over the
//!   frame-stacked `[h_1, …, h_l, o]` when `stacked` is set (TD3-FS).
//! * `Recurrent`: memory extraction (an LSTM over the history window),
//!   current-feature extraction (a dense layer over the observation, plus the
//!   action for critics) and a perception-integration head over their
//!   concatenation (LSTM-TD3). With an empty history the memory branch is
//!   dropped and the model reduces to a dense stack.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, Batch, DenseNet, DenseTrace, Grads, LstmCell, LstmTrace, Parameterized};

/// Network inputs for one mini-batch: current observations plus the history
/// window (`history[k]` is the `k`-th oldest frame of every row).
#[derive(Debug, Clone, Copy)]
pub struct Inputs<'a> {
    pub obs: &'a Batch,
    pub history: &'a [Batch],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Mlp {
        net: DenseNet,
        stacked: bool,
    },
    Recurrent {
        mem: Option<LstmCell>,
        cfe: DenseNet,
        pi: DenseNet,
    },
}

#[derive(Debug, Clone)]
pub enum ModelTrace {
    Mlp(DenseTrace),
    Recurrent {
        mem: Option<LstmTrace>,
        cfe: DenseTrace,
        pi: DenseTrace,
    },
}

impl ModelTrace {
    pub fn output(&self) -> &Batch {
        match self {
            ModelTrace::Mlp(t) => t.output(),
            ModelTrace::Recurrent { pi, .. } => pi.output(),
        }
    }
}

fn hidden_layers(widths: &[usize], out_act: Activation) -> Vec<(usize, Activation)> {
    let mut layers: Vec<(usize, Activation)> = widths.iter().map(|&w| (w, Activation::Relu)).collect();
    layers.push((1, out_act));
    layers
}

impl Model {
    /// Dense stack `input → hidden… → 1`.
    pub fn mlp<R: Rng + ?Sized>(
        input: usize,
        hidden: &[usize],
        out_act: Activation,
        stacked: bool,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(Model::Mlp {
            net: DenseNet::new(input, &hidden_layers(hidden, out_act), rng)?,
            stacked,
        })
    }

    /// MEM/CFE/PI composition: LSTM over `obs_dim` frames (skipped when
    /// `history_len == 0`), CFE `cfe_input → width` (relu), PI
    /// `width(+width) → width → 1`.
    pub fn recurrent<R: Rng + ?Sized>(
        obs_dim: usize,
        cfe_input: usize,
        history_len: usize,
        width: usize,
        out_act: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let mem = if history_len > 0 {
            Some(LstmCell::new(obs_dim, width, rng)?)
        } else {
            None
        };
        let cfe = DenseNet::new(cfe_input, &[(width, Activation::Relu)], rng)?;
        let pi_in = width + mem.as_ref().map_or(0, LstmCell::hidden_width);
        let pi = DenseNet::new(pi_in, &hidden_layers(&[width], out_act), rng)?;
        Ok(Model::Recurrent { mem, cfe, pi })
    }

    /// Forward pass; `extra` (the action, for critics) is appended to the
    /// current-feature input.
    pub fn forward_trace(&self, inputs: Inputs<'_>, extra: Option<&Batch>) -> Result<ModelTrace> {
        match self {
            Model::Mlp { net, stacked } => {
                let mut parts: Vec<&Batch> = Vec::new();
                if *stacked {
                    parts.extend(inputs.history.iter());
                }
                parts.push(inputs.obs);
                if let Some(e) = extra {
                    parts.push(e);
                }
                let x = if parts.len() == 1 {
                    inputs.obs.clone()
                } else {
                    Batch::hconcat(&parts)?
                };
                Ok(ModelTrace::Mlp(net.forward_trace(&x)?))
            }
            Model::Recurrent { mem, cfe, pi } => {
                let mem_trace = match mem {
                    Some(cell) => {
                        if inputs.history.is_empty() {
                            return Err(Error::Config("recurrent model needs a history window".into()));
                        }
                        Some(cell.forward_sequence(inputs.history)?)
                    }
                    None => None,
                };
                let cfe_in = match extra {
                    Some(e) => Batch::hconcat(&[inputs.obs, e])?,
                    None => inputs.obs.clone(),
                };
                let cfe_trace = cfe.forward_trace(&cfe_in)?;
                let pi_in = match &mem_trace {
                    Some(m) => Batch::hconcat(&[m.output(), cfe_trace.output()])?,
                    None => cfe_trace.output().clone(),
                };
                let pi_trace = pi.forward_trace(&pi_in)?;
                Ok(ModelTrace::Recurrent {
                    mem: mem_trace,
                    cfe: cfe_trace,
                    pi: pi_trace,
                })
            }
        }
    }

    pub fn forward(&self, inputs: Inputs<'_>, extra: Option<&Batch>) -> Result<Batch> {
        Ok(self.forward_trace(inputs, extra)?.output().clone())
    }

    /// Backward pass from `d_output` (`B × 1`).
    ///
    /// Accumulates into `grads` when given; returns the gradient w.r.t. the
    /// `extra` input columns when `want_extra` is set.
    pub fn backward(
        &self,
        trace: &ModelTrace,
        d_output: &Batch,
        grads: Option<&mut Grads>,
        want_extra: Option<usize>,
    ) -> Result<Option<Batch>> {
        match (self, trace) {
            (Model::Mlp { net, .. }, ModelTrace::Mlp(t)) => {
                let g = grads.map(|g| g[0].as_mut_slice());
                let d_in = net.backward(t, d_output, g, want_extra.is_some())?;
                tail_columns(d_in, want_extra)
            }
            (
                Model::Recurrent { mem, cfe, pi },
                ModelTrace::Recurrent {
                    mem: mem_t,
                    cfe: cfe_t,
                    pi: pi_t,
                },
            ) => {
                let (g_mem, g_cfe, g_pi) = match grads {
                    Some(g) => {
                        let mut it = g.iter_mut();
                        let m = if mem.is_some() { it.next() } else { None };
                        (m, it.next(), it.next())
                    }
                    None => (None, None, None),
                };
                let need_mem_grad = mem.is_some() && g_mem.is_some();
                let d_pi_in = pi
                    .backward(pi_t, d_output, g_pi.map(Vec::as_mut_slice), true)?
                    .expect("input gradient requested");
                let cfe_width = cfe.output_width();
                let mem_width = d_pi_in.cols() - cfe_width;
                let parts = d_pi_in.hsplit(&[mem_width, cfe_width])?;
                if need_mem_grad {
                    let cell = mem.as_ref().expect("checked");
                    let t = mem_t.as_ref().expect("trace matches model");
                    cell.backward(t, &parts[0], g_mem.map(Vec::as_mut_slice), false)?;
                }
                let d_cfe_in = cfe.backward(cfe_t, &parts[1], g_cfe.map(Vec::as_mut_slice), want_extra.is_some())?;
                tail_columns(d_cfe_in, want_extra)
            }
            _ => Err(Error::Config("trace does not belong to this model".into())),
        }
    }

    pub fn is_recurrent(&self) -> bool {
        matches!(self, Model::Recurrent { .. })
    }
}

fn tail_columns(d_in: Option<Batch>, width: Option<usize>) -> Result<Option<Batch>> {
    match (d_in, width) {
        (Some(d), Some(w)) => {
            let lead = d.cols() - w;
            Ok(Some(d.hsplit(&[lead, w])?.pop().expect("two parts")))
        }
        _ => Ok(None),
    }
}

impl Parameterized for Model {
    fn param_slices(&self) -> Vec<&[f64]> {
        match self {
            Model::Mlp { net, .. } => net.param_slices(),
            Model::Recurrent { mem, cfe, pi } => {
                let mut v = Vec::with_capacity(3);
                if let Some(m) = mem {
                    v.extend(m.param_slices());
                }
                v.extend(cfe.param_slices());
                v.extend(pi.param_slices());
                v
            }
        }
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Model::Mlp { net, .. } => net.param_slices_mut(),
            Model::Recurrent { mem, cfe, pi } => {
                let mut v = Vec::with_capacity(3);
                if let Some(m) = mem {
                    v.extend(m.param_slices_mut());
                }
                v.extend(cfe.param_slices_mut());
                v.extend(pi.param_slices_mut());
                v
            }
        }
    }
}
