//! Syndrome-based message passing on a Tanner graph.
//!
//! Supports sum-product, min-sum and normalized min-sum check updates under
//! flooding, serial and layered schedules. Every check-to-bit message carries
//! the factor `(-1)^s` of its check's syndrome bit, so the decoder searches
//! for an error pattern matching the syndrome rather than a codeword.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::{BitVec, SparseBitMatrix};

/// Largest tanh product fed to `atanh`; keeps sum-product messages finite.
const MAX_TANH: f64 = 1.0 - 1e-15;

pub const DEFAULT_CLAMP: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("{what}: expected length {expected}, got {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid decoder config: {0}")]
    InvalidConfig(String),
}

/// Log-likelihood ratios, one per bit; positive favours "no error".
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LlrVector(pub Vec<f64>);

impl Deref for LlrVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for LlrVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl<'a> IntoIterator for &'a LlrVector {
    type Item = &'a f64;
    type IntoIter = std::slice::Iter<'a, f64>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl LlrVector {
    pub fn gather(&self, indices: &[usize]) -> LlrVector {
        LlrVector(indices.iter().map(|&i| self.0[i]).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algorithm {
    SumProduct,
    MinSum,
    NormalizedMinSum { alpha: f64 },
}

impl Algorithm {
    pub fn tag(&self) -> &'static str {
        match self {
            Algorithm::SumProduct => "sp",
            Algorithm::MinSum => "ms",
            Algorithm::NormalizedMinSum { .. } => "nms",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "layers", rename_all = "snake_case")]
pub enum Schedule {
    Flooding,
    /// Checks processed one at a time in ascending row order.
    Serial,
    /// Groups of checks processed in order; checks within a group read the
    /// same bit values.
    Layered(Vec<Vec<usize>>),
}

impl Schedule {
    pub fn tag(&self) -> &'static str {
        match self {
            Schedule::Flooding => "flooding",
            Schedule::Serial => "serial",
            Schedule::Layered(_) => "layered",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub algorithm: Algorithm,
    pub schedule: Schedule,
    pub max_iters: usize,
    #[serde(default = "default_clamp")]
    pub clamp: f64,
}

fn default_clamp() -> f64 {
    DEFAULT_CLAMP
}

impl DecoderConfig {
    pub fn new(algorithm: Algorithm, schedule: Schedule, max_iters: usize) -> Self {
        DecoderConfig {
            algorithm,
            schedule,
            max_iters,
            clamp: DEFAULT_CLAMP,
        }
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        if let Algorithm::NormalizedMinSum { alpha } = self.algorithm {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(DecodeError::InvalidConfig(format!("alpha {alpha} outside (0, 1]")));
            }
        }
        if self.max_iters == 0 {
            return Err(DecodeError::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.clamp > 0.0) {
            return Err(DecodeError::InvalidConfig(format!("clamp {} must be positive", self.clamp)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub hard: BitVec,
    pub soft: LlrVector,
    /// `h · hard == s`
    pub converged: bool,
    pub iterations: usize,
}

/// `ê_i = 0` iff `soft_i >= 0`.
pub fn hard_decision(soft: &[f64]) -> BitVec {
    let mut out = BitVec::zeros(soft.len());
    for (i, &g) in soft.iter().enumerate() {
        if g < 0.0 {
            out.set(i, true);
        }
    }
    out
}

/// Tanner graph with edges numbered row by row.
#[derive(Debug, Clone)]
struct TannerGraph {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    edge_bit: Vec<usize>,
    bit_edges: Vec<Vec<usize>>,
}

impl TannerGraph {
    fn new(h: &SparseBitMatrix) -> Self {
        let mut row_ptr = Vec::with_capacity(h.rows() + 1);
        let mut edge_bit = Vec::with_capacity(h.nnz());
        let mut bit_edges = vec![Vec::new(); h.cols()];
        row_ptr.push(0);
        for r in 0..h.rows() {
            for &c in h.row(r) {
                bit_edges[c].push(edge_bit.len());
                edge_bit.push(c);
            }
            row_ptr.push(edge_bit.len());
        }
        TannerGraph {
            rows: h.rows(),
            cols: h.cols(),
            row_ptr,
            edge_bit,
            bit_edges,
        }
    }

    #[inline]
    fn edges(&self, r: usize) -> std::ops::Range<usize> {
        self.row_ptr[r]..self.row_ptr[r + 1]
    }

    fn syndrome_matches(&self, hard: &[bool], s: &[bool]) -> bool {
        (0..self.rows).all(|r| {
            let parity = self.edges(r).fold(false, |acc, e| acc ^ hard[self.edge_bit[e]]);
            parity == s[r]
        })
    }
}

/// Per-layer bookkeeping: whether each edge's bit appears once in its layer.
#[derive(Debug, Clone)]
struct LayerPlan {
    layers: Vec<Vec<usize>>,
    single: Vec<bool>,
    multi_bits: Vec<Vec<usize>>,
}

impl LayerPlan {
    fn new(graph: &TannerGraph, layers: &[Vec<usize>]) -> Result<Self, DecodeError> {
        let mut seen = vec![false; graph.rows];
        for &r in layers.iter().flatten() {
            if r >= graph.rows || seen[r] {
                return Err(DecodeError::InvalidConfig(format!(
                    "layers must partition rows 0..{}; bad or repeated row {r}",
                    graph.rows
                )));
            }
            seen[r] = true;
        }
        if let Some(r) = seen.iter().position(|&s| !s) {
            return Err(DecodeError::InvalidConfig(format!("row {r} missing from layers")));
        }
        let mut single = vec![true; graph.edge_bit.len()];
        let mut multi_bits = Vec::with_capacity(layers.len());
        let mut count = vec![0usize; graph.cols];
        for layer in layers {
            for &r in layer {
                for e in graph.edges(r) {
                    count[graph.edge_bit[e]] += 1;
                }
            }
            let mut multi = Vec::new();
            for &r in layer {
                for e in graph.edges(r) {
                    let b = graph.edge_bit[e];
                    if count[b] > 1 {
                        single[e] = false;
                        multi.push(b);
                    }
                }
            }
            multi.sort_unstable();
            multi.dedup();
            for &r in layer {
                for e in graph.edges(r) {
                    count[graph.edge_bit[e]] = 0;
                }
            }
            multi_bits.push(multi);
        }
        Ok(LayerPlan {
            layers: layers.to_vec(),
            single,
            multi_bits,
        })
    }
}

/// A message-passing decoder bound to one parity-check matrix.
#[derive(Debug, Clone)]
pub struct MpDecoder {
    graph: TannerGraph,
    config: DecoderConfig,
    layers: Option<LayerPlan>,
}

/// Mutable message state for one decoding call.
struct Messages {
    c2v: Vec<f64>,
    v2c: Vec<f64>,
    soft: Vec<f64>,
    scratch: Vec<f64>,
}

impl MpDecoder {
    pub fn new(h: &SparseBitMatrix, config: DecoderConfig) -> Result<Self, DecodeError> {
        config.validate()?;
        let graph = TannerGraph::new(h);
        let layers = match &config.schedule {
            Schedule::Layered(layers) => Some(LayerPlan::new(&graph, layers)?),
            _ => None,
        };
        Ok(MpDecoder { graph, config, layers })
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    fn check_inputs(&self, s: &BitVec, priors: &[f64]) -> Result<(), DecodeError> {
        if s.len() != self.graph.rows {
            return Err(DecodeError::DimensionMismatch {
                what: "syndrome",
                expected: self.graph.rows,
                found: s.len(),
            });
        }
        if priors.len() != self.graph.cols {
            return Err(DecodeError::DimensionMismatch {
                what: "priors",
                expected: self.graph.cols,
                found: priors.len(),
            });
        }
        Ok(())
    }

    /// Decodes until the hard decision matches `s` or `max_iters` is reached.
    pub fn decode(&self, s: &BitVec, priors: &[f64]) -> Result<DecodeOutcome, DecodeError> {
        self.check_inputs(s, priors)?;
        Ok(self.run(s, priors, self.config.max_iters, true))
    }

    /// Runs exactly `iterations` iterations with no early stop.
    pub fn decode_fixed(&self, s: &BitVec, priors: &[f64], iterations: usize) -> Result<DecodeOutcome, DecodeError> {
        self.check_inputs(s, priors)?;
        Ok(self.run(s, priors, iterations, false))
    }

    fn run(&self, s: &BitVec, priors: &[f64], iterations: usize, stop_early: bool) -> DecodeOutcome {
        let g = &self.graph;
        let syn: Vec<bool> = (0..g.rows).map(|r| s.get(r)).collect();
        let clamp = self.config.clamp;
        let mut msgs = Messages {
            c2v: vec![0.0; g.edge_bit.len()],
            v2c: vec![0.0; g.edge_bit.len()],
            soft: priors.iter().map(|&p| p.clamp(-clamp, clamp)).collect(),
            scratch: Vec::new(),
        };
        let mut hard: Vec<bool> = msgs.soft.iter().map(|&x| x < 0.0).collect();
        let mut converged = g.syndrome_matches(&hard, &syn);

        let unsatisfiable = (0..g.rows).any(|r| syn[r] && g.edges(r).is_empty());
        let mut done = 0;
        if !unsatisfiable && !(stop_early && converged) {
            for it in 1..=iterations {
                match &self.config.schedule {
                    Schedule::Flooding => self.flooding_iteration(&syn, priors, &mut msgs),
                    Schedule::Serial => self.serial_iteration(&syn, &mut msgs),
                    Schedule::Layered(_) => self.layered_iteration(&syn, priors, &mut msgs),
                }
                done = it;
                for (h, &x) in hard.iter_mut().zip(&msgs.soft) {
                    *h = x < 0.0;
                }
                converged = g.syndrome_matches(&hard, &syn);
                if stop_early && converged {
                    break;
                }
            }
        }
        DecodeOutcome {
            hard: BitVec::from_bools(&hard),
            soft: LlrVector(msgs.soft),
            converged,
            iterations: done,
        }
    }

    fn flooding_iteration(&self, syn: &[bool], priors: &[f64], m: &mut Messages) {
        let g = &self.graph;
        let clamp = self.config.clamp;
        for (b, edges) in g.bit_edges.iter().enumerate() {
            let total = priors[b] + edges.iter().map(|&e| m.c2v[e]).sum::<f64>();
            for &e in edges {
                m.v2c[e] = (total - m.c2v[e]).clamp(-clamp, clamp);
            }
        }
        for r in 0..g.rows {
            let range = g.edges(r);
            self.check_update(syn[r], &m.v2c[range.clone()], &mut m.scratch);
            m.c2v[range].copy_from_slice(&m.scratch);
        }
        for (b, edges) in g.bit_edges.iter().enumerate() {
            let total = priors[b] + edges.iter().map(|&e| m.c2v[e]).sum::<f64>();
            m.soft[b] = total.clamp(-clamp, clamp);
        }
    }

    fn serial_iteration(&self, syn: &[bool], m: &mut Messages) {
        let g = &self.graph;
        let clamp = self.config.clamp;
        for r in 0..g.rows {
            let range = g.edges(r);
            for e in range.clone() {
                m.v2c[e] = (m.soft[g.edge_bit[e]] - m.c2v[e]).clamp(-clamp, clamp);
            }
            self.check_update(syn[r], &m.v2c[range.clone()], &mut m.scratch);
            for (k, e) in range.enumerate() {
                m.c2v[e] = m.scratch[k];
                m.soft[g.edge_bit[e]] = (m.v2c[e] + m.scratch[k]).clamp(-clamp, clamp);
            }
        }
    }

    fn layered_iteration(&self, syn: &[bool], priors: &[f64], m: &mut Messages) {
        let g = &self.graph;
        let plan = self.layers.as_ref().expect("layer plan built for layered schedule");
        let clamp = self.config.clamp;
        for (layer, multi) in plan.layers.iter().zip(&plan.multi_bits) {
            for &r in layer {
                for e in g.edges(r) {
                    m.v2c[e] = (m.soft[g.edge_bit[e]] - m.c2v[e]).clamp(-clamp, clamp);
                }
            }
            for &r in layer {
                let range = g.edges(r);
                self.check_update(syn[r], &m.v2c[range.clone()], &mut m.scratch);
                m.c2v[range].copy_from_slice(&m.scratch);
            }
            for &r in layer {
                for e in g.edges(r) {
                    if plan.single[e] {
                        m.soft[g.edge_bit[e]] = (m.v2c[e] + m.c2v[e]).clamp(-clamp, clamp);
                    }
                }
            }
            for &b in multi {
                let total = priors[b] + g.bit_edges[b].iter().map(|&e| m.c2v[e]).sum::<f64>();
                m.soft[b] = total.clamp(-clamp, clamp);
            }
        }
    }

    /// Computes extrinsic check-to-bit messages from `inputs` into `out`.
    fn check_update(&self, syndrome: bool, inputs: &[f64], out: &mut Vec<f64>) {
        let clamp = self.config.clamp;
        out.clear();
        let base_sign = if syndrome { -1.0 } else { 1.0 };
        match self.config.algorithm {
            Algorithm::SumProduct => {
                // Prefix/suffix products of tanh(m/2) give the extrinsic
                // product without dividing by a possibly zero factor.
                let t: Vec<f64> = inputs.iter().map(|&x| (x / 2.0).tanh()).collect();
                let d = t.len();
                out.resize(d, 0.0);
                let mut prefix = 1.0;
                for k in 0..d {
                    out[k] = prefix;
                    prefix *= t[k];
                }
                let mut suffix = 1.0;
                for k in (0..d).rev() {
                    let prod = (out[k] * suffix).clamp(-MAX_TANH, MAX_TANH);
                    out[k] = (base_sign * 2.0 * prod.atanh()).clamp(-clamp, clamp);
                    suffix *= t[k];
                }
            }
            Algorithm::MinSum | Algorithm::NormalizedMinSum { .. } => {
                let scale = match self.config.algorithm {
                    Algorithm::NormalizedMinSum { alpha } => alpha,
                    _ => 1.0,
                };
                let mut sign = base_sign;
                let (mut min1, mut min2, mut argmin) = (f64::INFINITY, f64::INFINITY, usize::MAX);
                for (k, &x) in inputs.iter().enumerate() {
                    if x < 0.0 {
                        sign = -sign;
                    }
                    let a = x.abs();
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        argmin = k;
                    } else if a < min2 {
                        min2 = a;
                    }
                }
                for (k, &x) in inputs.iter().enumerate() {
                    let own = if x < 0.0 { -1.0 } else { 1.0 };
                    let mag = if k == argmin { min2 } else { min1 };
                    // A degree-1 check has no extrinsic inputs: min2 stays infinite.
                    let mag = if mag.is_finite() { mag } else { clamp };
                    out.push((sign * own * scale * mag).clamp(-clamp, clamp));
                }
            }
        }
    }
}

/// One-shot convenience wrapper around [`MpDecoder`].
pub fn decode(
    h: &SparseBitMatrix,
    s: &BitVec,
    priors: &[f64],
    config: &DecoderConfig,
) -> Result<DecodeOutcome, DecodeError> {
    MpDecoder::new(h, config.clone())?.decode(s, priors)
}
