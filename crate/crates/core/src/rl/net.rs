//! Recurrent actor-critic with hand-written backpropagation.
//!
//! Layout: a shared per-ray encoder, mean-pooled into angular sectors and
//! projected to a visual code; a two-layer encoder for the polar goal; an
//! Elman tanh core over both codes and the previous hidden state; linear
//! action and value heads. Gradients are truncated at the previous hidden
//! state, which is treated as an input.

use crate::error::RlError;
use crate::rng::{self, tag};
use crate::world::Action;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::ops::Range;

pub const NUM_ACTIONS: usize = 4;
pub const NAV_INPUTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetShape {
    pub rays: usize,
    pub ray_inputs: usize,
    pub ray_hidden: usize,
    pub sectors: usize,
    pub visual: usize,
    pub nav_hidden: usize,
    pub core: usize,
}

impl NetShape {
    pub fn new(rays: usize, ray_inputs: usize) -> Self {
        Self {
            rays,
            ray_inputs,
            ray_hidden: 12,
            sectors: 8.min(rays.max(1)),
            visual: 64,
            nav_hidden: 16,
            core: 64,
        }
    }

    fn sector_of(&self, ray: usize) -> usize {
        ray * self.sectors / self.rays
    }
}

/// Offsets of every tensor inside the flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
struct Layout {
    w1: Range<usize>,
    b1: Range<usize>,
    w2: Range<usize>,
    b2: Range<usize>,
    w3: Range<usize>,
    b3: Range<usize>,
    w4: Range<usize>,
    b4: Range<usize>,
    wx: Range<usize>,
    wh: Range<usize>,
    bh: Range<usize>,
    wa: Range<usize>,
    ba: Range<usize>,
    wv: Range<usize>,
    bv: Range<usize>,
    total: usize,
}

impl Layout {
    fn new(s: &NetShape) -> Self {
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let w1 = take(s.ray_hidden * s.ray_inputs);
        let b1 = take(s.ray_hidden);
        let w2 = take(s.visual * s.sectors * s.ray_hidden);
        let b2 = take(s.visual);
        let w3 = take(s.nav_hidden * NAV_INPUTS);
        let b3 = take(s.nav_hidden);
        let w4 = take(s.nav_hidden * s.nav_hidden);
        let b4 = take(s.nav_hidden);
        let wx = take(s.core * (s.visual + s.nav_hidden));
        let wh = take(s.core * s.core);
        let bh = take(s.core);
        let wa = take(NUM_ACTIONS * s.core);
        let ba = take(NUM_ACTIONS);
        let wv = take(s.core);
        let bv = take(1);
        Self {
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
            w4,
            b4,
            wx,
            wh,
            bh,
            wa,
            ba,
            wv,
            bv,
            total: at,
        }
    }
}

/// One network input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyInput {
    /// `rays x ray_inputs`, row-major.
    pub rays: Vec<f64>,
    pub nav: [f64; NAV_INPUTS],
    /// Whether Annotate may be sampled.
    pub annotate_allowed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyNet {
    pub shape: NetShape,
    pub params: Vec<f64>,
    layout: Layout,
}

/// Intermediate activations of one forward pass, kept for backprop.
#[derive(Clone, Debug)]
pub struct Forward {
    u: Vec<f64>,
    s: Vec<f64>,
    v: Vec<f64>,
    n1: Vec<f64>,
    n2: Vec<f64>,
    z: Vec<f64>,
    h_prev: Vec<f64>,
    pub hidden: Vec<f64>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub value: f64,
    pub annotate_allowed: bool,
}

impl Forward {
    pub fn log_prob(&self, action: usize) -> f64 {
        self.probs[action].max(1e-300).ln()
    }

    pub fn entropy(&self) -> f64 {
        -self.probs.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }
}

fn matvec(w: &[f64], x: &[f64], b: &[f64], out: &mut [f64]) {
    let n = x.len();
    for (o, (row, bi)) in out.iter_mut().zip(w.chunks_exact(n).zip(b)) {
        *o = bi + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
    }
}

/// `g += d x^T` for a `d.len() x x.len()` matrix.
fn outer_add(g: &mut [f64], d: &[f64], x: &[f64]) {
    let n = x.len();
    for (row, di) in g.chunks_exact_mut(n).zip(d) {
        if *di == 0.0 {
            continue;
        }
        for (gi, xi) in row.iter_mut().zip(x) {
            *gi += di * xi;
        }
    }
}

/// `out += w^T d`.
fn matvec_t_add(w: &[f64], d: &[f64], out: &mut [f64]) {
    let n = out.len();
    for (row, di) in w.chunks_exact(n).zip(d) {
        if *di == 0.0 {
            continue;
        }
        for (o, wi) in out.iter_mut().zip(row) {
            *o += di * wi;
        }
    }
}

fn tanh_grad(d: &mut [f64], y: &[f64]) {
    for (di, yi) in d.iter_mut().zip(y) {
        *di *= 1.0 - yi * yi;
    }
}

impl PolicyNet {
    /// Glorot-uniform hidden layers; zero action and value heads.
    pub fn new(shape: NetShape, seed: u64) -> Self {
        let layout = Layout::new(&shape);
        let mut params = vec![0.0; layout.total];
        let mut rng = rng::seeded(&[seed, tag::POLICY]);
        let s = &shape;
        for (range, fan_in, fan_out) in [
            (&layout.w1, s.ray_inputs, s.ray_hidden),
            (&layout.w2, s.sectors * s.ray_hidden, s.visual),
            (&layout.w3, NAV_INPUTS, s.nav_hidden),
            (&layout.w4, s.nav_hidden, s.nav_hidden),
            (&layout.wx, s.visual + s.nav_hidden, s.core),
            (&layout.wh, s.core, s.core),
        ] {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut params[range.clone()] {
                *p = rng.random_range(-a..a);
            }
        }
        Self { shape, params, layout }
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn from_params(shape: NetShape, params: Vec<f64>) -> Result<Self, RlError> {
        let layout = Layout::new(&shape);
        if params.len() != layout.total {
            return Err(RlError::Checkpoint(format!(
                "expected {} parameters, found {}",
                layout.total,
                params.len()
            )));
        }
        Ok(Self { shape, params, layout })
    }

    pub fn zero_hidden(&self) -> Vec<f64> {
        vec![0.0; self.shape.core]
    }

    fn p(&self, r: &Range<usize>) -> &[f64] {
        &self.params[r.clone()]
    }

    pub fn forward(&self, input: &PolicyInput, h_prev: &[f64]) -> Result<Forward, RlError> {
        let s = &self.shape;
        let l = &self.layout;
        let (rh, ri) = (s.ray_hidden, s.ray_inputs);
        if input.rays.len() != s.rays * ri || h_prev.len() != s.core {
            return Err(RlError::Shape(format!(
                "expected {} ray values and hidden {}, got {} and {}",
                s.rays * ri,
                s.core,
                input.rays.len(),
                h_prev.len()
            )));
        }
        let mut u = vec![0.0; s.rays * rh];
        let mut s_pool = vec![0.0; s.sectors * rh];
        let mut counts = vec![0usize; s.sectors];
        for r in 0..s.rays {
            let out = &mut u[r * rh..(r + 1) * rh];
            matvec(self.p(&l.w1), &input.rays[r * ri..(r + 1) * ri], self.p(&l.b1), out);
            out.iter_mut().for_each(|x| *x = x.tanh());
            let k = s.sector_of(r);
            counts[k] += 1;
            for (a, b) in s_pool[k * rh..(k + 1) * rh].iter_mut().zip(out.iter()) {
                *a += b;
            }
        }
        for k in 0..s.sectors {
            let c = counts[k].max(1) as f64;
            s_pool[k * rh..(k + 1) * rh].iter_mut().for_each(|x| *x /= c);
        }
        let mut v = vec![0.0; s.visual];
        matvec(self.p(&l.w2), &s_pool, self.p(&l.b2), &mut v);
        v.iter_mut().for_each(|x| *x = x.tanh());
        let mut n1 = vec![0.0; s.nav_hidden];
        matvec(self.p(&l.w3), &input.nav, self.p(&l.b3), &mut n1);
        n1.iter_mut().for_each(|x| *x = x.tanh());
        let mut n2 = vec![0.0; s.nav_hidden];
        matvec(self.p(&l.w4), &n1, self.p(&l.b4), &mut n2);
        n2.iter_mut().for_each(|x| *x = x.tanh());
        let z: Vec<f64> = v.iter().chain(&n2).copied().collect();
        let mut hidden = vec![0.0; s.core];
        matvec(self.p(&l.wx), &z, self.p(&l.bh), &mut hidden);
        let mut rec = vec![0.0; s.core];
        matvec(self.p(&l.wh), h_prev, &vec![0.0; s.core], &mut rec);
        for (h, r) in hidden.iter_mut().zip(&rec) {
            *h = (*h + r).tanh();
        }
        let mut logits = vec![0.0; NUM_ACTIONS];
        matvec(self.p(&l.wa), &hidden, self.p(&l.ba), &mut logits);
        let value = self.p(&l.bv)[0] + self.p(&l.wv).iter().zip(&hidden).map(|(a, b)| a * b).sum::<f64>();
        let allowed = |a: usize| a != Action::Annotate.index() || input.annotate_allowed;
        let m = (0..NUM_ACTIONS)
            .filter(|a| allowed(*a))
            .map(|a| logits[a])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = (0..NUM_ACTIONS)
            .map(|a| if allowed(a) { (logits[a] - m).exp() } else { 0.0 })
            .collect();
        let zsum: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= zsum);
        if !value.is_finite() || probs.iter().any(|p| !p.is_finite()) {
            return Err(RlError::NonFinite("policy output"));
        }
        Ok(Forward {
            u,
            s: s_pool,
            v,
            n1,
            n2,
            z,
            h_prev: h_prev.to_vec(),
            hidden,
            logits,
            probs,
            value,
            annotate_allowed: input.annotate_allowed,
        })
    }

    /// Accumulates into `grad` the parameter gradient of a scalar loss with
    /// upstream derivatives `d_logits` and `d_value`.
    pub fn backward(&self, input: &PolicyInput, fwd: &Forward, d_logits: &[f64], d_value: f64, grad: &mut [f64]) {
        let s = &self.shape;
        let l = &self.layout;
        let (rh, ri) = (s.ray_hidden, s.ray_inputs);
        let mut dh = vec![0.0; s.core];
        matvec_t_add(self.p(&l.wa), d_logits, &mut dh);
        for (d, w) in dh.iter_mut().zip(self.p(&l.wv)) {
            *d += d_value * w;
        }
        outer_add(&mut grad[l.wa.clone()], d_logits, &fwd.hidden);
        for (g, d) in grad[l.ba.clone()].iter_mut().zip(d_logits) {
            *g += d;
        }
        for (g, h) in grad[l.wv.clone()].iter_mut().zip(&fwd.hidden) {
            *g += d_value * h;
        }
        grad[l.bv.start] += d_value;

        tanh_grad(&mut dh, &fwd.hidden);
        outer_add(&mut grad[l.wx.clone()], &dh, &fwd.z);
        outer_add(&mut grad[l.wh.clone()], &dh, &fwd.h_prev);
        for (g, d) in grad[l.bh.clone()].iter_mut().zip(&dh) {
            *g += d;
        }
        let mut dz = vec![0.0; s.visual + s.nav_hidden];
        matvec_t_add(self.p(&l.wx), &dh, &mut dz);
        let (dv, dn2) = dz.split_at_mut(s.visual);

        tanh_grad(dn2, &fwd.n2);
        outer_add(&mut grad[l.w4.clone()], dn2, &fwd.n1);
        for (g, d) in grad[l.b4.clone()].iter_mut().zip(dn2.iter()) {
            *g += d;
        }
        let mut dn1 = vec![0.0; s.nav_hidden];
        matvec_t_add(self.p(&l.w4), dn2, &mut dn1);
        tanh_grad(&mut dn1, &fwd.n1);
        outer_add(&mut grad[l.w3.clone()], &dn1, &input.nav);
        for (g, d) in grad[l.b3.clone()].iter_mut().zip(&dn1) {
            *g += d;
        }

        tanh_grad(dv, &fwd.v);
        outer_add(&mut grad[l.w2.clone()], dv, &fwd.s);
        for (g, d) in grad[l.b2.clone()].iter_mut().zip(dv.iter()) {
            *g += d;
        }
        let mut ds = vec![0.0; s.sectors * rh];
        matvec_t_add(self.p(&l.w2), dv, &mut ds);
        let mut counts = vec![0usize; s.sectors];
        for r in 0..s.rays {
            counts[s.sector_of(r)] += 1;
        }
        let mut du = vec![0.0; rh];
        for r in 0..s.rays {
            let k = s.sector_of(r);
            let c = counts[k] as f64;
            for j in 0..rh {
                let y = fwd.u[r * rh + j];
                du[j] = ds[k * rh + j] / c * (1.0 - y * y);
            }
            outer_add(&mut grad[l.w1.clone()], &du, &input.rays[r * ri..(r + 1) * ri]);
            for (g, d) in grad[l.b1.clone()].iter_mut().zip(&du) {
                *g += d;
            }
        }
    }
}

/// Derivative of `log p(action)` with respect to the logits.
pub fn d_log_prob(fwd: &Forward, action: usize) -> Vec<f64> {
    (0..NUM_ACTIONS)
        .map(|a| {
            if fwd.probs[a] == 0.0 {
                0.0
            } else {
                (a == action) as u8 as f64 - fwd.probs[a]
            }
        })
        .collect()
}

/// Derivative of the policy entropy with respect to the logits.
pub fn d_entropy(fwd: &Forward) -> Vec<f64> {
    let h = fwd.entropy();
    fwd.probs
        .iter()
        .map(|&p| if p > 0.0 { -p * (p.ln() + h) } else { 0.0 })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / b1t;
            let vh = self.v[i] / b2t;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}
