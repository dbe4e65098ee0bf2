use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::ClassifierError;

/// Gate blocks inside the stacked pre-activation vector, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Output = 2,
    Candidate = 3,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Output, Gate::Candidate];
}

/// Which tensor a flat parameter index belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    InputWeight(Gate),
    RecurrentWeight(Gate),
    Bias(Gate),
    DenseWeight,
    DenseBias,
}

/// Single-layer LSTM followed by a dense sigmoid unit, stored as one flat
/// vector: `W` (4H×D), `U` (4H×H), `b` (4H), `v` (H), `c` (1). Gate rows
/// are stacked in [`Gate`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    input: usize,
    hidden: usize,
    data: Vec<f64>,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

/// Binary cross-entropy of `sigmoid(logit)` against `target` in {0, 1}.
pub fn bce_from_logit(logit: f64, target: f64) -> f64 {
    softplus(logit) - target * logit
}

impl LstmParams {
    pub fn len_for(input: usize, hidden: usize) -> usize {
        4 * hidden * input + 4 * hidden * hidden + 4 * hidden + hidden + 1
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            input,
            hidden,
            data: vec![0.0; Self::len_for(input, hidden)],
        }
    }

    /// Uniform(-1/sqrt(H), 1/sqrt(H)) weights, forget-gate bias 1.
    pub fn random<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(input, hidden);
        let k = 1.0 / libm::sqrt(hidden.max(1) as f64);
        for x in &mut p.data {
            *x = rng.random_range(-k..k);
        }
        let b = p.b_off() + hidden * Gate::Forget as usize;
        for x in &mut p.data[b..b + hidden] {
            *x = 1.0;
        }
        p
    }

    pub fn from_vec(input: usize, hidden: usize, data: Vec<f64>) -> Result<Self, ClassifierError> {
        if input == 0 || hidden == 0 || data.len() != Self::len_for(input, hidden) {
            return Err(ClassifierError::Shape);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(ClassifierError::NonFinite);
        }
        Ok(Self { input, hidden, data })
    }

    pub fn input(&self) -> usize {
        self.input
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn u_off(&self) -> usize {
        4 * self.hidden * self.input
    }

    fn b_off(&self) -> usize {
        self.u_off() + 4 * self.hidden * self.hidden
    }

    fn v_off(&self) -> usize {
        self.b_off() + 4 * self.hidden
    }

    fn c_off(&self) -> usize {
        self.v_off() + self.hidden
    }

    /// Classifies a flat parameter index.
    pub fn kind(&self, index: usize) -> ParamKind {
        let h = self.hidden;
        let gate = |row: usize| Gate::ALL[row / h];
        if index < self.u_off() {
            ParamKind::InputWeight(gate(index / self.input))
        } else if index < self.b_off() {
            ParamKind::RecurrentWeight(gate((index - self.u_off()) / h))
        } else if index < self.v_off() {
            ParamKind::Bias(gate(index - self.b_off()))
        } else if index < self.c_off() {
            ParamKind::DenseWeight
        } else {
            ParamKind::DenseBias
        }
    }

    /// `W[gate][unit][feature]`.
    pub fn input_weight(&self, gate: Gate, unit: usize, feature: usize) -> f64 {
        self.data[(gate as usize * self.hidden + unit) * self.input + feature]
    }

    /// `U[gate][unit][from]`.
    pub fn recurrent_weight(&self, gate: Gate, unit: usize, from: usize) -> f64 {
        self.data[self.u_off() + (gate as usize * self.hidden + unit) * self.hidden + from]
    }

    pub fn bias(&self, gate: Gate, unit: usize) -> f64 {
        self.data[self.b_off() + gate as usize * self.hidden + unit]
    }

    pub fn dense_weight(&self, unit: usize) -> f64 {
        self.data[self.v_off() + unit]
    }

    pub fn dense_bias(&self) -> f64 {
        self.data[self.c_off()]
    }
}

/// Activations recorded during a forward pass, reused across calls.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    steps: usize,
    /// Post-activation gates per step, 4H each.
    gates: Vec<f64>,
    /// Cell states, (T+1)·H with the zero initial state first.
    cells: Vec<f64>,
    /// tanh of cell states per step.
    cell_tanh: Vec<f64>,
    /// Hidden states, (T+1)·H.
    hiddens: Vec<f64>,
    inputs: Vec<f64>,
    z: Vec<f64>,
}

impl Tape {
    fn reset(&mut self, steps: usize, input: usize, hidden: usize) {
        self.steps = steps;
        self.gates.resize(steps * 4 * hidden, 0.0);
        self.cells.clear();
        self.cells.resize((steps + 1) * hidden, 0.0);
        self.cell_tanh.resize(steps * hidden, 0.0);
        self.hiddens.clear();
        self.hiddens.resize((steps + 1) * hidden, 0.0);
        self.inputs.resize(steps * input, 0.0);
        self.z.resize(4 * hidden, 0.0);
    }

    /// Final hidden state of the last forward pass.
    pub fn last_hidden(&self, hidden: usize) -> &[f64] {
        &self.hiddens[self.steps * hidden..(self.steps + 1) * hidden]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Runs the recurrence over `seq` (row-major, `input` values per step) and
/// returns the output logit. `mask` scales the final hidden state before
/// the dense layer (inverted dropout).
pub fn forward_logit(
    p: &LstmParams,
    seq: &[f64],
    mask: Option<&[f64]>,
    tape: &mut Tape,
) -> Result<f64, ClassifierError> {
    let (d, h) = (p.input, p.hidden);
    if seq.len() % d != 0 || seq.is_empty() {
        return Err(ClassifierError::Shape);
    }
    let steps = seq.len() / d;
    tape.reset(steps, d, h);
    tape.inputs.copy_from_slice(seq);
    let (w, rest) = p.data.split_at(p.u_off());
    let (u, rest) = rest.split_at(4 * h * h);
    let (b, rest) = rest.split_at(4 * h);
    let (v, c) = rest.split_at(h);

    for t in 0..steps {
        let x = &seq[t * d..(t + 1) * d];
        let h_prev = &tape.hiddens[t * h..(t + 1) * h];
        for r in 0..4 * h {
            tape.z[r] = b[r] + dot(&w[r * d..(r + 1) * d], x) + dot(&u[r * h..(r + 1) * h], h_prev);
        }
        let gates = &mut tape.gates[t * 4 * h..(t + 1) * 4 * h];
        for r in 0..4 * h {
            gates[r] = if r < 3 * h {
                sigmoid(tape.z[r])
            } else {
                libm::tanh(tape.z[r])
            };
        }
        for j in 0..h {
            let (ig, fg, og, gg) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
            let c_new = fg * tape.cells[t * h + j] + ig * gg;
            let tc = libm::tanh(c_new);
            tape.cells[(t + 1) * h + j] = c_new;
            tape.cell_tanh[t * h + j] = tc;
            tape.hiddens[(t + 1) * h + j] = og * tc;
        }
    }
    let last = &tape.hiddens[steps * h..(steps + 1) * h];
    let logit = match mask {
        Some(m) => c[0] + last.iter().zip(m).zip(v).map(|((x, m), w)| x * m * w).sum::<f64>(),
        None => c[0] + dot(last, v),
    };
    if !logit.is_finite() {
        return Err(ClassifierError::NonFinite);
    }
    Ok(logit)
}

/// Output probability for `seq` with dropout disabled.
pub fn forward(p: &LstmParams, seq: &[f64]) -> Result<f64, ClassifierError> {
    let mut tape = Tape::default();
    forward_logit(p, seq, None, &mut tape).map(sigmoid)
}

/// Scratch space for [`backward`].
#[derive(Debug, Clone, Default)]
pub struct GradBuffers {
    dh: Vec<f64>,
    dc: Vec<f64>,
    dz: Vec<f64>,
    dh_prev: Vec<f64>,
}

/// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(logit), using
/// the activations left in `tape` by [`forward_logit`].
pub fn backward(
    p: &LstmParams,
    tape: &Tape,
    mask: Option<&[f64]>,
    dlogit: f64,
    grad: &mut [f64],
    buf: &mut GradBuffers,
) {
    let (d, h) = (p.input, p.hidden);
    let steps = tape.steps;
    let (u_off, b_off, v_off, c_off) = (p.u_off(), p.b_off(), p.v_off(), p.c_off());
    let u = &p.data[u_off..b_off];
    let v = &p.data[v_off..c_off];

    buf.dh.resize(h, 0.0);
    buf.dc.clear();
    buf.dc.resize(h, 0.0);
    buf.dz.resize(4 * h, 0.0);
    buf.dh_prev.resize(h, 0.0);

    let last = tape.last_hidden(h);
    for j in 0..h {
        let m = mask.map_or(1.0, |m| m[j]);
        grad[v_off + j] += dlogit * last[j] * m;
        buf.dh[j] = dlogit * v[j] * m;
    }
    grad[c_off] += dlogit;

    for t in (0..steps).rev() {
        let gates = &tape.gates[t * 4 * h..(t + 1) * 4 * h];
        let c_prev = &tape.cells[t * h..(t + 1) * h];
        let tc = &tape.cell_tanh[t * h..(t + 1) * h];
        for j in 0..h {
            let (ig, fg, og, gg) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
            let dh = buf.dh[j];
            let d_o = dh * tc[j];
            let dc = buf.dc[j] + dh * og * (1.0 - tc[j] * tc[j]);
            buf.dz[j] = dc * gg * ig * (1.0 - ig);
            buf.dz[h + j] = dc * c_prev[j] * fg * (1.0 - fg);
            buf.dz[2 * h + j] = d_o * og * (1.0 - og);
            buf.dz[3 * h + j] = dc * ig * (1.0 - gg * gg);
            buf.dc[j] = dc * fg;
        }
        let x = &tape.inputs[t * d..(t + 1) * d];
        let h_prev = &tape.hiddens[t * h..(t + 1) * h];
        buf.dh_prev.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..4 * h {
            let dz = buf.dz[r];
            if dz == 0.0 {
                continue;
            }
            grad[b_off + r] += dz;
            for (g, xi) in grad[r * d..(r + 1) * d].iter_mut().zip(x) {
                *g += dz * xi;
            }
            let urow = &u[r * h..(r + 1) * h];
            let grow = &mut grad[u_off + r * h..u_off + (r + 1) * h];
            for k in 0..h {
                grow[k] += dz * h_prev[k];
                buf.dh_prev[k] += dz * urow[k];
            }
        }
        core::mem::swap(&mut buf.dh, &mut buf.dh_prev);
    }
}

/// BCE loss of one sequence and its gradient (added into `grad`).
pub fn loss_and_grad(
    p: &LstmParams,
    seq: &[f64],
    target: f64,
    mask: Option<&[f64]>,
    grad: &mut [f64],
    tape: &mut Tape,
    buf: &mut GradBuffers,
) -> Result<f64, ClassifierError> {
    let logit = forward_logit(p, seq, mask, tape)?;
    let dlogit = sigmoid(logit) - target;
    backward(p, tape, mask, dlogit, grad, buf);
    Ok(bce_from_logit(logit, target))
}
