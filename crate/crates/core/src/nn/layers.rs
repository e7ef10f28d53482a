//! Transformer building blocks composed from tape ops.
//!
//! [`GraphBuilder`] wraps a [`Tape`] with lazy parameter binding from a
//! [`ParamStore`]: each named parameter becomes one leaf per graph, frozen
//! names become non-trainable leaves. Layer initializers live next to the
//! forward helpers so shapes are defined in exactly one place.

use super::params::{Init, ParamStore};
use super::tape::{Tape, Var};
use ndarray::Array2;
use std::collections::BTreeMap;

pub struct GraphBuilder<'s> {
    pub tape: Tape,
    store: &'s ParamStore,
    bound: BTreeMap<String, Var>,
    frozen_prefixes: Vec<String>,
}

impl<'s> GraphBuilder<'s> {
    pub fn new(store: &'s ParamStore) -> Self {
        Self { tape: Tape::new(), store, bound: BTreeMap::new(), frozen_prefixes: Vec::new() }
    }

    /// Parameters whose names start with any of these prefixes bind as
    /// non-trainable leaves.
    pub fn freeze_prefix(&mut self, prefix: &str) {
        self.frozen_prefixes.push(prefix.to_string());
    }

    pub fn is_frozen(&self, name: &str) -> bool {
        self.frozen_prefixes.iter().any(|p| name.starts_with(p.as_str()))
    }

    /// Binds a named parameter (once per graph).
    pub fn p(&mut self, name: &str) -> Var {
        if let Some(v) = self.bound.get(name) {
            return *v;
        }
        let trainable = !self.is_frozen(name);
        let v = self.tape.param(name, self.store.get(name).clone(), trainable);
        self.bound.insert(name.to_string(), v);
        v
    }

    pub fn c(&mut self, value: Array2<f64>) -> Var {
        self.tape.constant(value)
    }

    /// `x @ W + b` with parameters `{prefix}.w`, `{prefix}.b`.
    pub fn linear(&mut self, x: Var, prefix: &str) -> Var {
        let w = self.p(&format!("{prefix}.w"));
        let b = self.p(&format!("{prefix}.b"));
        let xw = self.tape.matmul(x, w);
        self.tape.add_row(xw, b)
    }

    pub fn layer_norm(&mut self, x: Var, prefix: &str) -> Var {
        let gamma = self.p(&format!("{prefix}.gamma"));
        let beta = self.p(&format!("{prefix}.beta"));
        self.tape.layer_norm(x, gamma, beta)
    }

    /// Multi-head attention with queries from `q_in` and keys/values from
    /// `kv_in`. Self-attention is the `q_in == kv_in` case.
    pub fn attention(&mut self, q_in: Var, kv_in: Var, prefix: &str, heads: usize) -> Var {
        let d = self.tape.value(q_in).ncols();
        assert_eq!(d % heads, 0, "width {d} not divisible by {heads} heads");
        let dh = d / heads;
        let q = self.linear(q_in, &format!("{prefix}.q"));
        let k = self.linear(kv_in, &format!("{prefix}.k"));
        let v = self.linear(kv_in, &format!("{prefix}.v"));
        let scale = 1.0 / (dh as f64).sqrt();
        let mut head_outputs = Vec::with_capacity(heads);
        for h in 0..heads {
            let qh = self.tape.slice_cols(q, h * dh, dh);
            let kh = self.tape.slice_cols(k, h * dh, dh);
            let vh = self.tape.slice_cols(v, h * dh, dh);
            let kt = self.tape.transpose(kh);
            let logits = self.tape.matmul(qh, kt);
            let scaled = self.tape.scale(logits, scale);
            let weights = self.tape.softmax(scaled);
            head_outputs.push(self.tape.matmul(weights, vh));
        }
        let merged = self.tape.concat_cols(&head_outputs);
        self.linear(merged, &format!("{prefix}.o"))
    }

    /// Position-wise feed-forward: linear -> GELU -> linear.
    pub fn ffn(&mut self, x: Var, prefix: &str) -> Var {
        let h = self.linear(x, &format!("{prefix}.in"));
        let a = self.tape.gelu(h);
        self.linear(a, &format!("{prefix}.out"))
    }

    /// Pre-norm transformer encoder layer (self-attention + FFN): the
    /// residual stream bypasses the norms, so deep stacks train without
    /// warmup.
    pub fn encoder_layer(&mut self, x: Var, prefix: &str, heads: usize) -> Var {
        let n1 = self.layer_norm(x, &format!("{prefix}.ln1"));
        let att = self.attention(n1, n1, &format!("{prefix}.att"), heads);
        let res1 = self.tape.add(x, att);
        let n2 = self.layer_norm(res1, &format!("{prefix}.ln2"));
        let ff = self.ffn(n2, &format!("{prefix}.ffn"));
        self.tape.add(res1, ff)
    }

    /// Pre-norm cross-attention layer: queries from `x`, keys/values from
    /// `context`, followed by an FFN.
    pub fn cross_layer(&mut self, x: Var, context: Var, prefix: &str, heads: usize) -> Var {
        let n1 = self.layer_norm(x, &format!("{prefix}.ln1"));
        let att = self.attention(n1, context, &format!("{prefix}.att"), heads);
        let res1 = self.tape.add(x, att);
        let n2 = self.layer_norm(res1, &format!("{prefix}.ln2"));
        let ff = self.ffn(n2, &format!("{prefix}.ffn"));
        self.tape.add(res1, ff)
    }

    /// Feature-wise modulation from a context row: `h * (1 + s) + b`
    /// with `s`, `b` linear in the context. Zero-initialized maps make it
    /// the identity at the start of training.
    pub fn film(&mut self, h: Var, ctx: Var, prefix: &str) -> Var {
        let d = self.tape.value(h).ncols();
        let s = self.linear(ctx, &format!("{prefix}.s"));
        let ones = self.c(Array2::ones((1, d)));
        let scale_row = self.tape.add(ones, s);
        let shift_row = self.linear(ctx, &format!("{prefix}.b"));
        let scaled = self.tape.mul_row(h, scale_row);
        self.tape.add_row(scaled, shift_row)
    }

    /// Pre-norm denoiser layer: self-attention over frames,
    /// cross-attention to the conditioning sequence, then an FFN. Each
    /// sub-block input is modulated by the fused text/timestep context
    /// row (stylization in the style of the reference diffusion
    /// backbone).
    pub fn denoiser_layer(
        &mut self,
        x: Var,
        cond: Var,
        ctx: Var,
        prefix: &str,
        heads: usize,
    ) -> Var {
        let n1 = self.layer_norm(x, &format!("{prefix}.ln1"));
        let m1 = self.film(n1, ctx, &format!("{prefix}.film1"));
        let sa = self.attention(m1, m1, &format!("{prefix}.self"), heads);
        let res1 = self.tape.add(x, sa);
        let n2 = self.layer_norm(res1, &format!("{prefix}.ln2"));
        let m2 = self.film(n2, ctx, &format!("{prefix}.film2"));
        let ca = self.attention(m2, cond, &format!("{prefix}.cross"), heads);
        let res2 = self.tape.add(res1, ca);
        let n3 = self.layer_norm(res2, &format!("{prefix}.ln3"));
        let m3 = self.film(n3, ctx, &format!("{prefix}.film3"));
        let ff = self.ffn(m3, &format!("{prefix}.ffn"));
        self.tape.add(res2, ff)
    }
}

/// Shape registration mirrors of the forward helpers.
pub fn init_linear(store: &mut ParamStore, prefix: &str, d_in: usize, d_out: usize, seed: u64) {
    store.init(&format!("{prefix}.w"), d_in, d_out, Init::Xavier, seed);
    store.init(&format!("{prefix}.b"), 1, d_out, Init::Zeros, seed);
}

pub fn init_linear_zero(store: &mut ParamStore, prefix: &str, d_in: usize, d_out: usize, seed: u64) {
    store.init(&format!("{prefix}.w"), d_in, d_out, Init::Zeros, seed);
    store.init(&format!("{prefix}.b"), 1, d_out, Init::Zeros, seed);
}

pub fn init_layer_norm(store: &mut ParamStore, prefix: &str, d: usize, seed: u64) {
    store.init(&format!("{prefix}.gamma"), 1, d, Init::Ones, seed);
    store.init(&format!("{prefix}.beta"), 1, d, Init::Zeros, seed);
}

pub fn init_attention(store: &mut ParamStore, prefix: &str, d: usize, seed: u64) {
    for part in ["q", "k", "v", "o"] {
        init_linear(store, &format!("{prefix}.{part}"), d, d, seed);
    }
}

pub fn init_ffn(store: &mut ParamStore, prefix: &str, d: usize, hidden: usize, seed: u64) {
    init_linear(store, &format!("{prefix}.in"), d, hidden, seed);
    init_linear(store, &format!("{prefix}.out"), hidden, d, seed);
}

pub fn init_encoder_layer(store: &mut ParamStore, prefix: &str, d: usize, hidden: usize, seed: u64) {
    init_attention(store, &format!("{prefix}.att"), d, seed);
    init_layer_norm(store, &format!("{prefix}.ln1"), d, seed);
    init_ffn(store, &format!("{prefix}.ffn"), d, hidden, seed);
    init_layer_norm(store, &format!("{prefix}.ln2"), d, seed);
}

pub fn init_denoiser_layer(store: &mut ParamStore, prefix: &str, d: usize, hidden: usize, seed: u64) {
    init_attention(store, &format!("{prefix}.self"), d, seed);
    init_layer_norm(store, &format!("{prefix}.ln1"), d, seed);
    init_attention(store, &format!("{prefix}.cross"), d, seed);
    init_layer_norm(store, &format!("{prefix}.ln2"), d, seed);
    init_ffn(store, &format!("{prefix}.ffn"), d, hidden, seed);
    init_layer_norm(store, &format!("{prefix}.ln3"), d, seed);
    for film in ["film1", "film2", "film3"] {
        init_linear_zero(store, &format!("{prefix}.{film}.s"), d, d, seed);
        init_linear_zero(store, &format!("{prefix}.{film}.b"), d, d, seed);
    }
}
