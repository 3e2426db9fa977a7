use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::numcore::{init_params, ParamTensor, Rng};

/// GRU cell `R^d × R^h → R^h`:
///
/// ```text
/// z  = σ(W_z x + U_z h + b_z)
/// r  = σ(W_r x + U_r h + b_r)
/// h̃  = tanh(W_h x + U_h (r ⊙ h) + b_h)
/// h' = (1 - z) ⊙ h + z ⊙ h̃
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GruCell {
    pub wz: ParamTensor,
    pub uz: ParamTensor,
    pub bz: ParamTensor,
    pub wr: ParamTensor,
    pub ur: ParamTensor,
    pub br: ParamTensor,
    pub wh: ParamTensor,
    pub uh: ParamTensor,
    pub bh: ParamTensor,
}

/// Intermediate values of one step, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct GruStep {
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    cand: Vec<f64>,
    pub h: Vec<f64>,
}

impl GruCell {
    pub fn new(input_dim: usize, hidden: usize, rng: &mut Rng) -> Self {
        let mut m = |rows, cols| init_params(&[rows, cols], rng);
        let (wz, uz) = (m(hidden, input_dim), m(hidden, hidden));
        let (wr, ur) = (m(hidden, input_dim), m(hidden, hidden));
        let (wh, uh) = (m(hidden, input_dim), m(hidden, hidden));
        let b = || ParamTensor::zeros(&[hidden]);
        GruCell { wz, uz, bz: b(), wr, ur, br: b(), wh, uh, bh: b() }
    }

    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        let w = || ParamTensor::zeros(&[hidden, input_dim]);
        let u = || ParamTensor::zeros(&[hidden, hidden]);
        let b = || ParamTensor::zeros(&[hidden]);
        GruCell { wz: w(), uz: u(), bz: b(), wr: w(), ur: u(), br: b(), wh: w(), uh: u(), bh: b() }
    }

    pub fn input_dim(&self) -> usize {
        self.wz.cols()
    }

    pub fn hidden(&self) -> usize {
        self.wz.rows()
    }

    pub fn named_params(&self, prefix: &str) -> Vec<(String, &ParamTensor)> {
        [
            ("wz", &self.wz),
            ("uz", &self.uz),
            ("bz", &self.bz),
            ("wr", &self.wr),
            ("ur", &self.ur),
            ("br", &self.br),
            ("wh", &self.wh),
            ("uh", &self.uh),
            ("bh", &self.bh),
        ]
        .into_iter()
        .map(|(n, p)| (format!("{prefix}.{n}"), p))
        .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        vec![
            &mut self.wz,
            &mut self.uz,
            &mut self.bz,
            &mut self.wr,
            &mut self.ur,
            &mut self.br,
            &mut self.wh,
            &mut self.uh,
            &mut self.bh,
        ]
    }

    fn gate(w: &ParamTensor, u: &ParamTensor, b: &ParamTensor, x: &[f64], h: &[f64]) -> Vec<f64> {
        let mut a = w.matvec(x);
        u.matvec_acc(h, &mut a);
        a.iter_mut().zip(&b.values).for_each(|(v, b)| *v += b);
        a
    }

    pub fn step(&self, x: &[f64], h_prev: &[f64]) -> GruStep {
        let z: Vec<f64> = Self::gate(&self.wz, &self.uz, &self.bz, x, h_prev)
            .into_iter()
            .map(math::sigmoid)
            .collect();
        let r: Vec<f64> = Self::gate(&self.wr, &self.ur, &self.br, x, h_prev)
            .into_iter()
            .map(math::sigmoid)
            .collect();
        let rh: Vec<f64> = r.iter().zip(h_prev).map(|(r, h)| r * h).collect();
        let cand: Vec<f64> = Self::gate(&self.wh, &self.uh, &self.bh, x, &rh)
            .into_iter()
            .map(math::tanh)
            .collect();
        let h = (0..z.len())
            .map(|k| (1.0 - z[k]) * h_prev[k] + z[k] * cand[k])
            .collect();
        GruStep {
            h_prev: h_prev.to_vec(),
            z,
            r,
            cand,
            h,
        }
    }

    /// Accumulates parameter gradients for `dh` (gradient w.r.t. the step
    /// output) and returns the gradient w.r.t. the previous state.
    pub fn step_backward(&mut self, x: &[f64], s: &GruStep, dh: &[f64]) -> Vec<f64> {
        let n = dh.len();
        let mut dprev: Vec<f64> = (0..n).map(|k| dh[k] * (1.0 - s.z[k])).collect();

        let dcand_pre: Vec<f64> = (0..n)
            .map(|k| dh[k] * s.z[k] * (1.0 - s.cand[k] * s.cand[k]))
            .collect();
        let rh: Vec<f64> = s.r.iter().zip(&s.h_prev).map(|(r, h)| r * h).collect();
        self.wh.add_outer_grad(&dcand_pre, x);
        self.uh.add_outer_grad(&dcand_pre, &rh);
        self.bh.add_grad(&dcand_pre);
        let mut drh = vec![0.0; n];
        self.uh.matvec_t_acc(&dcand_pre, &mut drh);
        for k in 0..n {
            dprev[k] += drh[k] * s.r[k];
        }

        let dz_pre: Vec<f64> = (0..n)
            .map(|k| dh[k] * (s.cand[k] - s.h_prev[k]) * s.z[k] * (1.0 - s.z[k]))
            .collect();
        self.wz.add_outer_grad(&dz_pre, x);
        self.uz.add_outer_grad(&dz_pre, &s.h_prev);
        self.bz.add_grad(&dz_pre);
        self.uz.matvec_t_acc(&dz_pre, &mut dprev);

        let dr_pre: Vec<f64> = (0..n)
            .map(|k| drh[k] * s.h_prev[k] * s.r[k] * (1.0 - s.r[k]))
            .collect();
        self.wr.add_outer_grad(&dr_pre, x);
        self.ur.add_outer_grad(&dr_pre, &s.h_prev);
        self.br.add_grad(&dr_pre);
        self.ur.matvec_t_acc(&dr_pre, &mut dprev);

        dprev
    }

    /// Runs the cell over `xs` from a zero state, left to right, or right to
    /// left when `reverse` is set. Steps are returned in input order.
    pub fn run(&self, xs: &[Vec<f64>], reverse: bool) -> Vec<GruStep> {
        let n = xs.len();
        let mut steps: Vec<Option<GruStep>> = (0..n).map(|_| None).collect();
        let mut h = vec![0.0; self.hidden()];
        for t in 0..n {
            let i = if reverse { n - 1 - t } else { t };
            let s = self.step(&xs[i], &h);
            h.clone_from(&s.h);
            steps[i] = Some(s);
        }
        steps.into_iter().map(|s| s.expect("every step ran")).collect()
    }

    /// Backpropagation through time for a run produced by [`GruCell::run`];
    /// `dhs[i]` is the external gradient on the state at position `i`.
    pub fn run_backward(&mut self, xs: &[Vec<f64>], steps: &[GruStep], dhs: &[Vec<f64>], reverse: bool) {
        let n = xs.len();
        let mut carry = vec![0.0; self.hidden()];
        for t in (0..n).rev() {
            let i = if reverse { n - 1 - t } else { t };
            let dh: Vec<f64> = dhs[i].iter().zip(&carry).map(|(a, b)| a + b).collect();
            carry = self.step_backward(&xs[i], &steps[i], &dh);
        }
    }
}
