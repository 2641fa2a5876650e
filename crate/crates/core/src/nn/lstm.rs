use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{gemm, uniform_fan_in, Batch, Parameterized};
use crate::error::{Error, Result};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Single LSTM layer.
///
/// Parameters are packed as `W` (`4h × n`), `U` (`4h × h`) and `b` (`4h`), with
/// gate blocks ordered input, forget, candidate, output. The cell carries no
/// state between calls: every sequence starts from zero hidden and cell
/// vectors and only the last hidden vector is returned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCell {
    input: usize,
    hidden: usize,
    params: Vec<f64>,
}

/// Hidden and cell vectors of one sequence in flight.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub hidden: Vec<f64>,
    pub cell: Vec<f64>,
}

impl LstmState {
    pub fn zeros(width: usize) -> Self {
        Self {
            hidden: vec![0.0; width],
            cell: vec![0.0; width],
        }
    }

    pub fn reset(&mut self) {
        self.hidden.iter_mut().for_each(|v| *v = 0.0);
        self.cell.iter_mut().for_each(|v| *v = 0.0);
    }
}

#[derive(Debug, Clone)]
struct StepRecord {
    x: Batch,
    h_prev: Batch,
    c_prev: Batch,
    // activated gates, B × 4h in i, f, g, o order
    gates: Batch,
    tanh_c: Batch,
}

/// Per-step activations of a batched sequence pass.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    steps: Vec<StepRecord>,
    hidden_states: Vec<Batch>,
}

impl LstmTrace {
    /// Final hidden vectors, `B × h`.
    pub fn output(&self) -> &Batch {
        self.hidden_states.last().expect("non-empty sequence")
    }

    /// Hidden output of every step; only the last one feeds downstream layers.
    pub fn hidden_states(&self) -> &[Batch] {
        &self.hidden_states
    }
}

impl LstmCell {
    pub fn zeros(input: usize, hidden: usize) -> Result<Self> {
        if input == 0 || hidden == 0 {
            return Err(Error::Config(format!(
                "lstm needs positive widths, got input {input}, hidden {hidden}"
            )));
        }
        let len = 4 * hidden * (input + hidden + 1);
        Ok(Self {
            input,
            hidden,
            params: vec![0.0; len],
        })
    }

    /// Uniform ±1/√hidden initialisation of all gate weights and biases.
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        let mut cell = Self::zeros(input, hidden)?;
        uniform_fan_in(rng, hidden, &mut cell.params);
        Ok(cell)
    }

    pub fn input_width(&self) -> usize {
        self.input
    }

    pub fn hidden_width(&self) -> usize {
        self.hidden
    }

    fn split(&self) -> (&[f64], &[f64], &[f64]) {
        let g = 4 * self.hidden;
        let (w, rest) = self.params.split_at(g * self.input);
        let (u, b) = rest.split_at(g * self.hidden);
        (w, u, b)
    }

    /// `(W, U, b)` views for hand-setting parameters.
    pub fn weights_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64]) {
        let g = 4 * self.hidden;
        let (w, rest) = self.params.split_at_mut(g * self.input);
        let (u, b) = rest.split_at_mut(g * self.hidden);
        (w, u, b)
    }

    /// Advances one sample by one input vector.
    pub fn step(&self, state: &LstmState, x: &[f64]) -> Result<LstmState> {
        if state.hidden.len() != self.hidden || state.cell.len() != self.hidden {
            return Err(Error::Config("lstm state width mismatch".into()));
        }
        let (h, c) = self.step_batch(
            &Batch::row_vector(x),
            &Batch::row_vector(&state.hidden),
            &Batch::row_vector(&state.cell),
        )?;
        Ok(LstmState {
            hidden: h.into_vec(),
            cell: c.into_vec(),
        })
    }

    fn step_batch(&self, x: &Batch, h_prev: &Batch, c_prev: &Batch) -> Result<(Batch, Batch)> {
        let rec = self.step_record(x.clone(), h_prev.clone(), c_prev.clone())?;
        let c = self.next_cell(&rec);
        let h = self.next_hidden(&rec);
        Ok((h, c))
    }

    fn step_record(&self, x: Batch, h_prev: Batch, c_prev: Batch) -> Result<StepRecord> {
        if x.cols() != self.input {
            return Err(Error::Config(format!(
                "lstm input width {} does not match cell input {}",
                x.cols(),
                self.input
            )));
        }
        let rows = x.rows();
        let hw = self.hidden;
        let (w, u, b) = self.split();
        let mut gates = Batch::zeros(rows, 4 * hw);
        for r in 0..rows {
            gates.row_mut(r).copy_from_slice(b);
        }
        gemm(
            rows,
            self.input,
            4 * hw,
            x.as_slice(),
            false,
            w,
            true,
            1.0,
            gates.as_mut_slice(),
        );
        gemm(
            rows,
            hw,
            4 * hw,
            h_prev.as_slice(),
            false,
            u,
            true,
            1.0,
            gates.as_mut_slice(),
        );
        let mut tanh_c = Batch::zeros(rows, hw);
        for r in 0..rows {
            let g = gates.row_mut(r);
            for v in &mut g[..2 * hw] {
                *v = sigmoid(*v);
            }
            for v in &mut g[2 * hw..3 * hw] {
                *v = v.tanh();
            }
            for v in &mut g[3 * hw..] {
                *v = sigmoid(*v);
            }
            let g = gates.row(r);
            let cp = c_prev.row(r);
            let tc = tanh_c.row_mut(r);
            for j in 0..hw {
                let c = g[hw + j] * cp[j] + g[j] * g[2 * hw + j];
                tc[j] = c.tanh();
            }
        }
        Ok(StepRecord {
            x,
            h_prev,
            c_prev,
            gates,
            tanh_c,
        })
    }

    fn next_cell(&self, rec: &StepRecord) -> Batch {
        let hw = self.hidden;
        let mut c = Batch::zeros(rec.x.rows(), hw);
        for r in 0..rec.x.rows() {
            let g = rec.gates.row(r);
            let cp = rec.c_prev.row(r);
            for (j, out) in c.row_mut(r).iter_mut().enumerate() {
                *out = g[hw + j] * cp[j] + g[j] * g[2 * hw + j];
            }
        }
        c
    }

    fn next_hidden(&self, rec: &StepRecord) -> Batch {
        let hw = self.hidden;
        let mut h = Batch::zeros(rec.x.rows(), hw);
        for r in 0..rec.x.rows() {
            let g = rec.gates.row(r);
            let tc = rec.tanh_c.row(r);
            for (j, out) in h.row_mut(r).iter_mut().enumerate() {
                *out = g[3 * hw + j] * tc[j];
            }
        }
        h
    }

    /// Single-sample convenience: final hidden vector of `sequence`.
    pub fn forward(&self, sequence: &[Vec<f64>]) -> Result<Vec<f64>> {
        let seq: Vec<Batch> = sequence.iter().map(|x| Batch::row_vector(x)).collect();
        Ok(self.forward_sequence(&seq)?.output().clone().into_vec())
    }

    /// Batched pass over `sequence` (one `B × n` batch per time step), from a
    /// zero state.
    pub fn forward_sequence(&self, sequence: &[Batch]) -> Result<LstmTrace> {
        let first = sequence
            .first()
            .ok_or_else(|| Error::Contract("lstm forward on an empty sequence".into()))?;
        let rows = first.rows();
        if sequence.iter().any(|x| x.rows() != rows) {
            return Err(Error::Config("lstm sequence batches differ in row count".into()));
        }
        let mut h = Batch::zeros(rows, self.hidden);
        let mut c = Batch::zeros(rows, self.hidden);
        let mut steps = Vec::with_capacity(sequence.len());
        let mut hidden_states = Vec::with_capacity(sequence.len());
        for x in sequence {
            let rec = self.step_record(x.clone(), h, c)?;
            c = self.next_cell(&rec);
            h = self.next_hidden(&rec);
            hidden_states.push(h.clone());
            steps.push(rec);
        }
        Ok(LstmTrace { steps, hidden_states })
    }

    /// Backpropagation through time from a gradient on the final hidden state.
    ///
    /// Accumulates parameter gradients into `grads` when given; returns the
    /// per-step input gradients when `want_inputs` is set.
    pub fn backward(
        &self,
        trace: &LstmTrace,
        d_hidden: &Batch,
        mut grads: Option<&mut [f64]>,
        want_inputs: bool,
    ) -> Result<Option<Vec<Batch>>> {
        let out = trace.output();
        if d_hidden.rows() != out.rows() || d_hidden.cols() != self.hidden {
            return Err(Error::Config("lstm backward: gradient shape mismatch".into()));
        }
        if let Some(g) = grads.as_deref() {
            if g.len() != self.params.len() {
                return Err(Error::Config("lstm backward: gradient buffer length mismatch".into()));
            }
        }
        let rows = out.rows();
        let hw = self.hidden;
        let (w, u, _) = self.split();
        let mut dh = d_hidden.clone();
        let mut dc = Batch::zeros(rows, hw);
        let mut d_inputs = Vec::new();
        for rec in trace.steps.iter().rev() {
            let mut dz = Batch::zeros(rows, 4 * hw);
            let mut dc_prev = Batch::zeros(rows, hw);
            for r in 0..rows {
                let g = rec.gates.row(r);
                let tc = rec.tanh_c.row(r);
                let cp = rec.c_prev.row(r);
                let dhr = dh.row(r);
                let dcr = dc.row_mut(r);
                let dzr = dz.row_mut(r);
                for j in 0..hw {
                    let (i, f, gg, o) = (g[j], g[hw + j], g[2 * hw + j], g[3 * hw + j]);
                    let d_o = dhr[j] * tc[j];
                    let dcj = dcr[j] + dhr[j] * o * (1.0 - tc[j] * tc[j]);
                    dzr[j] = dcj * gg * i * (1.0 - i);
                    dzr[hw + j] = dcj * cp[j] * f * (1.0 - f);
                    dzr[2 * hw + j] = dcj * i * (1.0 - gg * gg);
                    dzr[3 * hw + j] = d_o * o * (1.0 - o);
                    dcr[j] = dcj;
                }
                for (p, (&dcj, &f)) in dc_prev.row_mut(r).iter_mut().zip(dc.row(r).iter().zip(&g[hw..2 * hw])) {
                    *p = dcj * f;
                }
            }
            if let Some(gr) = grads.as_deref_mut() {
                let gsz = 4 * hw;
                let (gw, rest) = gr.split_at_mut(gsz * self.input);
                let (gu, gb) = rest.split_at_mut(gsz * hw);
                gemm(
                    gsz,
                    rows,
                    self.input,
                    dz.as_slice(),
                    true,
                    rec.x.as_slice(),
                    false,
                    1.0,
                    gw,
                );
                gemm(
                    gsz,
                    rows,
                    hw,
                    dz.as_slice(),
                    true,
                    rec.h_prev.as_slice(),
                    false,
                    1.0,
                    gu,
                );
                for r in 0..rows {
                    for (acc, d) in gb.iter_mut().zip(dz.row(r)) {
                        *acc += d;
                    }
                }
            }
            if want_inputs {
                let mut dx = Batch::zeros(rows, self.input);
                gemm(
                    rows,
                    4 * hw,
                    self.input,
                    dz.as_slice(),
                    false,
                    w,
                    false,
                    0.0,
                    dx.as_mut_slice(),
                );
                d_inputs.push(dx);
            }
            let mut dh_prev = Batch::zeros(rows, hw);
            gemm(
                rows,
                4 * hw,
                hw,
                dz.as_slice(),
                false,
                u,
                false,
                0.0,
                dh_prev.as_mut_slice(),
            );
            dh = dh_prev;
            dc = dc_prev;
        }
        if want_inputs {
            d_inputs.reverse();
            Ok(Some(d_inputs))
        } else {
            Ok(None)
        }
    }
}

impl Parameterized for LstmCell {
    fn param_slices(&self) -> Vec<&[f64]> {
        vec![&self.params]
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.params]
    }
}
