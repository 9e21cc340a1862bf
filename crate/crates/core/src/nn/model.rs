//! Scorer forward and backward passes.
//!
//! Per context graph: node encoding through an MLP, a one-layer
//! bi-directional GRU over the traversal sequence, a stack of graph
//! attention layers with edge features, and three linear heads producing
//! Keep/Delete/Move scores for the center node. The backward pass mirrors
//! the forward pass exactly; every gradient is checked against central
//! finite differences in the test suite.
//!
//! Attention per head: logits are `a . tanh(W_src h_j + W_tgt h_i +
//! W_edge f_ji + b)`, softmax-normalized per target over incoming edges plus
//! a self-loop (zero edge features); messages are the projected source
//! states `W_src h_j`; head outputs are averaged and added residually.

use crate::block::Document;
use crate::edit::OpLabel;
use crate::error::{Error, Result};
use crate::graph::ContextGraph;
use crate::nn::embed::TextEmbedder;
use crate::nn::math::{axpy, dot, matvec, matvec_acc, matvec_t_acc, outer_acc, sigmoid, softmax_in_place};
use crate::nn::params::{GruOffsets, ScorerParams};
use crate::tree::DocTree;

/// Numeric view of one context graph: node inputs in traversal order plus
/// typed edges and the center bookkeeping score heads need.
#[derive(Debug, Clone)]
pub struct ModelInput {
    pub n: usize,
    /// n x d_in, row per node.
    pub x: Vec<f64>,
    /// Directed edges over local node indices.
    pub edges: Vec<(usize, usize)>,
    /// edges.len() x d_edge.
    pub edge_feats: Vec<f64>,
    pub center: usize,
    /// Preceding siblings of the center present in the graph.
    pub prs: Vec<usize>,
}

/// Build the numeric input for a graph: each node row is the text embedding
/// concatenated with the raw node features.
pub fn assemble_input(
    doc: &Document,
    tree: &DocTree,
    graph: &ContextGraph,
    embedder: &dyn TextEmbedder,
) -> ModelInput {
    let d_in = embedder.dim() + graph.node_feats.first().map_or(0, |f| f.len());
    let mut x = Vec::with_capacity(graph.len() * d_in);
    for (local, &node) in graph.nodes.iter().enumerate() {
        let block = tree.block(doc, node);
        x.extend(embedder.embed(&block.text));
        x.extend(&graph.node_feats[local]);
    }
    ModelInput {
        n: graph.len(),
        x,
        edges: graph.edges.iter().map(|e| (e.src, e.dst)).collect(),
        edge_feats: graph.edge_feats.iter().flatten().copied().collect(),
        center: graph.center,
        prs: graph.center_preceding_siblings.clone(),
    }
}

/// Incoming-edge table: per target, the self-loop first, then graph edges in
/// assembly order. `feat` is an index into `edge_feats` (None for the loop).
struct Adjacency {
    offsets: Vec<usize>,
    src: Vec<usize>,
    feat: Vec<Option<usize>>,
}

impl Adjacency {
    fn build(input: &ModelInput) -> Adjacency {
        let n = input.n;
        let mut counts = vec![1usize; n]; // self-loop
        for &(_, dst) in &input.edges {
            counts[dst] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut at = 0;
        for k in 0..n {
            offsets.push(at);
            at += counts[k];
        }
        offsets.push(at);
        let mut src = vec![0usize; at];
        let mut feat = vec![None; at];
        let mut cursor: Vec<usize> = offsets[..n].to_vec();
        for k in 0..n {
            src[cursor[k]] = k; // self-loop
            cursor[k] += 1;
        }
        for (e, &(s, dst)) in input.edges.iter().enumerate() {
            src[cursor[dst]] = s;
            feat[cursor[dst]] = Some(e);
            cursor[dst] += 1;
        }
        Adjacency { offsets, src, feat }
    }

    fn range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }
}

#[derive(Debug, Clone, Default)]
struct GruTrace {
    /// Gate activations per processing step, n x d_h each.
    r: Vec<f64>,
    z: Vec<f64>,
    n: Vec<f64>,
    /// Cached `U_n h_prev` per step.
    uh: Vec<f64>,
    /// Hidden states per step.
    h: Vec<f64>,
}

#[derive(Debug, Clone)]
struct HeadTrace {
    /// Source/target projections, n x d_h.
    s: Vec<f64>,
    t: Vec<f64>,
    /// Per incoming slot: tanh pre-activation output, slots x d_h.
    q: Vec<f64>,
    /// Attention weights per incoming slot.
    alpha: Vec<f64>,
}

/// Everything the backward pass needs from one forward evaluation.
pub struct Forward {
    a1: Vec<f64>,
    b: Vec<f64>,
    fwd: GruTrace,
    bwd: GruTrace,
    v: Vec<f64>,
    /// Node states per attention layer; `h_layers[0]` is v, the last entry is
    /// the final representation.
    h_layers: Vec<Vec<f64>>,
    att: Vec<HeadTrace>,
    pool: Vec<f64>,
    pool_src: Vec<Option<usize>>,
    pub scores: [f64; 3],
    pub probs: [f64; 3],
}

fn gru_direction(
    params: &ScorerParams,
    off: &GruOffsets,
    inputs: &[f64], // n x d_h in processing order
    n: usize,
) -> GruTrace {
    let d_h = params.cfg().d_h;
    let p = &params.data;
    let mut tr = GruTrace {
        r: vec![0.0; n * d_h],
        z: vec![0.0; n * d_h],
        n: vec![0.0; n * d_h],
        uh: vec![0.0; n * d_h],
        h: vec![0.0; n * d_h],
    };
    let zero = vec![0.0; d_h];
    let mut buf_r = vec![0.0; d_h];
    let mut buf_z = vec![0.0; d_h];
    let mut buf_n = vec![0.0; d_h];
    for t in 0..n {
        let x = &inputs[t * d_h..(t + 1) * d_h];
        let h_prev: &[f64] = if t == 0 {
            &zero
        } else {
            &tr.h[(t - 1) * d_h..t * d_h]
        };
        matvec(&p[off.w_r..off.w_r + d_h * d_h], d_h, d_h, x, &mut buf_r);
        matvec_acc(&p[off.u_r..off.u_r + d_h * d_h], d_h, d_h, h_prev, &mut buf_r);
        matvec(&p[off.w_z..off.w_z + d_h * d_h], d_h, d_h, x, &mut buf_z);
        matvec_acc(&p[off.u_z..off.u_z + d_h * d_h], d_h, d_h, h_prev, &mut buf_z);
        let uh = &mut tr.uh[t * d_h..(t + 1) * d_h];
        matvec(&p[off.u_n..off.u_n + d_h * d_h], d_h, d_h, h_prev, uh);
        matvec(&p[off.w_n..off.w_n + d_h * d_h], d_h, d_h, x, &mut buf_n);
        for i in 0..d_h {
            let r = sigmoid(buf_r[i] + p[off.b_r + i]);
            let z = sigmoid(buf_z[i] + p[off.b_z + i]);
            let nv = (buf_n[i] + r * uh[i] + p[off.b_n + i]).tanh();
            tr.r[t * d_h + i] = r;
            tr.z[t * d_h + i] = z;
            tr.n[t * d_h + i] = nv;
            tr.h[t * d_h + i] = (1.0 - z) * nv + z * h_prev[i];
        }
    }
    tr
}

fn gru_direction_backward(
    params: &ScorerParams,
    off: &GruOffsets,
    inputs: &[f64],
    tr: &GruTrace,
    upstream: &[f64], // n x d_h in processing order
    n: usize,
    grad: &mut [f64],
    d_inputs: &mut [f64], // n x d_h in processing order
) {
    let d_h = params.cfg().d_h;
    let p = &params.data;
    let zero = vec![0.0; d_h];
    let mut carry = vec![0.0; d_h];
    let mut dn_pre = vec![0.0; d_h];
    let mut dz_pre = vec![0.0; d_h];
    let mut dr_pre = vec![0.0; d_h];
    let mut duh = vec![0.0; d_h];
    for t in (0..n).rev() {
        let x = &inputs[t * d_h..(t + 1) * d_h];
        let h_prev: &[f64] = if t == 0 {
            &zero
        } else {
            &tr.h[(t - 1) * d_h..t * d_h]
        };
        let r = &tr.r[t * d_h..(t + 1) * d_h];
        let z = &tr.z[t * d_h..(t + 1) * d_h];
        let nv = &tr.n[t * d_h..(t + 1) * d_h];
        let uh = &tr.uh[t * d_h..(t + 1) * d_h];
        let mut dh_prev = vec![0.0; d_h];
        for i in 0..d_h {
            let dh = upstream[t * d_h + i] + carry[i];
            let dz = dh * (h_prev[i] - nv[i]);
            let dn = dh * (1.0 - z[i]);
            dh_prev[i] = dh * z[i];
            dn_pre[i] = dn * (1.0 - nv[i] * nv[i]);
            let dr = dn_pre[i] * uh[i];
            duh[i] = dn_pre[i] * r[i];
            dz_pre[i] = dz * z[i] * (1.0 - z[i]);
            dr_pre[i] = dr * r[i] * (1.0 - r[i]);
        }
        outer_acc(&mut grad[off.w_n..off.w_n + d_h * d_h], d_h, d_h, &dn_pre, x);
        outer_acc(&mut grad[off.u_n..off.u_n + d_h * d_h], d_h, d_h, &duh, h_prev);
        outer_acc(&mut grad[off.w_z..off.w_z + d_h * d_h], d_h, d_h, &dz_pre, x);
        outer_acc(&mut grad[off.u_z..off.u_z + d_h * d_h], d_h, d_h, &dz_pre, h_prev);
        outer_acc(&mut grad[off.w_r..off.w_r + d_h * d_h], d_h, d_h, &dr_pre, x);
        outer_acc(&mut grad[off.u_r..off.u_r + d_h * d_h], d_h, d_h, &dr_pre, h_prev);
        for i in 0..d_h {
            grad[off.b_n + i] += dn_pre[i];
            grad[off.b_z + i] += dz_pre[i];
            grad[off.b_r + i] += dr_pre[i];
        }
        matvec_t_acc(&p[off.u_n..off.u_n + d_h * d_h], d_h, d_h, &duh, &mut dh_prev);
        matvec_t_acc(&p[off.u_z..off.u_z + d_h * d_h], d_h, d_h, &dz_pre, &mut dh_prev);
        matvec_t_acc(&p[off.u_r..off.u_r + d_h * d_h], d_h, d_h, &dr_pre, &mut dh_prev);
        let dx = &mut d_inputs[t * d_h..(t + 1) * d_h];
        matvec_t_acc(&p[off.w_n..off.w_n + d_h * d_h], d_h, d_h, &dn_pre, dx);
        matvec_t_acc(&p[off.w_z..off.w_z + d_h * d_h], d_h, d_h, &dz_pre, dx);
        matvec_t_acc(&p[off.w_r..off.w_r + d_h * d_h], d_h, d_h, &dr_pre, dx);
        carry = dh_prev;
    }
}

/// Full forward evaluation of one context graph.
pub fn forward(params: &ScorerParams, input: &ModelInput) -> Result<Forward> {
    let cfg = *params.cfg();
    let d_h = cfg.d_h;
    let d_in = cfg.d_in();
    let n = input.n;
    if input.x.len() != n * d_in {
        return Err(Error::Config(format!(
            "input rows have {} values, model expects {} x {}",
            input.x.len(),
            n,
            d_in
        )));
    }
    let p = &params.data;
    let l = &params.layout;

    // node encoding
    let mut a1 = vec![0.0; n * d_h];
    let mut b = vec![0.0; n * d_h];
    for k in 0..n {
        let x = &input.x[k * d_in..(k + 1) * d_in];
        let za = &mut a1[k * d_h..(k + 1) * d_h];
        matvec(&p[l.mlp_w1..l.mlp_w1 + d_h * d_in], d_h, d_in, x, za);
        for i in 0..d_h {
            za[i] = (za[i] + p[l.mlp_b1 + i]).tanh();
        }
        let zb = &mut b[k * d_h..(k + 1) * d_h];
        matvec(
            &p[l.mlp_w2..l.mlp_w2 + d_h * d_h],
            d_h,
            d_h,
            &a1[k * d_h..(k + 1) * d_h],
            zb,
        );
        for i in 0..d_h {
            zb[i] += p[l.mlp_b2 + i];
        }
    }

    // bi-directional GRU over the traversal sequence
    let fwd = gru_direction(params, &l.gru[0], &b, n);
    let mut rev_inputs = vec![0.0; n * d_h];
    for t in 0..n {
        let node = n - 1 - t;
        rev_inputs[t * d_h..(t + 1) * d_h].copy_from_slice(&b[node * d_h..(node + 1) * d_h]);
    }
    let bwd = gru_direction(params, &l.gru[1], &rev_inputs, n);

    let mut v = vec![0.0; n * d_h];
    let mut cat = vec![0.0; 2 * d_h];
    for k in 0..n {
        cat[..d_h].copy_from_slice(&fwd.h[k * d_h..(k + 1) * d_h]);
        let bpos = n - 1 - k;
        cat[d_h..].copy_from_slice(&bwd.h[bpos * d_h..(bpos + 1) * d_h]);
        let vk = &mut v[k * d_h..(k + 1) * d_h];
        matvec(&p[l.proj_w..l.proj_w + d_h * 2 * d_h], d_h, 2 * d_h, &cat, vk);
        for i in 0..d_h {
            vk[i] += p[l.proj_b + i];
        }
    }

    // graph attention stack
    let mut h_layers = vec![v.clone()];
    let mut att = Vec::new();
    if cfg.use_gnn {
        let adj = Adjacency::build(input);
        let d_e = cfg.d_edge;
        for layer in 0..cfg.n_layers {
            let h_cur = h_layers[layer].clone();
            let mut h_next = h_cur.clone();
            for head in 0..cfg.n_heads {
                let g = *l.gat_at(layer, head);
                let mut s = vec![0.0; n * d_h];
                let mut t = vec![0.0; n * d_h];
                for k in 0..n {
                    matvec(
                        &p[g.w_src..g.w_src + d_h * d_h],
                        d_h,
                        d_h,
                        &h_cur[k * d_h..(k + 1) * d_h],
                        &mut s[k * d_h..(k + 1) * d_h],
                    );
                    matvec(
                        &p[g.w_tgt..g.w_tgt + d_h * d_h],
                        d_h,
                        d_h,
                        &h_cur[k * d_h..(k + 1) * d_h],
                        &mut t[k * d_h..(k + 1) * d_h],
                    );
                }
                let slots = adj.src.len();
                let mut q = vec![0.0; slots * d_h];
                let mut alpha = vec![0.0; slots];
                let a_vec = &p[g.a_vec..g.a_vec + d_h];
                for k in 0..n {
                    let range = adj.range(k);
                    let mut logits: Vec<f64> = Vec::with_capacity(range.len());
                    for slot in range.clone() {
                        let srcn = adj.src[slot];
                        let qe = &mut q[slot * d_h..(slot + 1) * d_h];
                        for i in 0..d_h {
                            qe[i] = s[srcn * d_h + i] + t[k * d_h + i] + p[g.b_att + i];
                        }
                        if let Some(f) = adj.feat[slot] {
                            matvec_acc(
                                &p[g.w_edge..g.w_edge + d_h * d_e],
                                d_h,
                                d_e,
                                &input.edge_feats[f * d_e..(f + 1) * d_e],
                                qe,
                            );
                        }
                        for x in qe.iter_mut() {
                            *x = x.tanh();
                        }
                        logits.push(dot(a_vec, qe));
                    }
                    softmax_in_place(&mut logits);
                    for (slot, &w) in range.clone().zip(&logits) {
                        alpha[slot] = w;
                        axpy(
                            w / cfg.n_heads as f64,
                            &s[adj.src[slot] * d_h..(adj.src[slot] + 1) * d_h],
                            &mut h_next[k * d_h..(k + 1) * d_h],
                        );
                    }
                }
                att.push(HeadTrace { s, t, q, alpha });
            }
            h_layers.push(h_next);
        }
    }

    // score heads
    let h_final = h_layers.last().unwrap();
    let hc = &h_final[input.center * d_h..(input.center + 1) * d_h];
    let o_kp = dot(&p[l.w_kp..l.w_kp + d_h], hc) + p[l.b_kp];
    let o_de = dot(&p[l.w_de..l.w_de + d_h], hc) + p[l.b_de];
    let mut pool = vec![0.0; d_h];
    let mut pool_src = vec![None; d_h];
    for &s in &input.prs {
        let hs = &h_final[s * d_h..(s + 1) * d_h];
        for i in 0..d_h {
            if pool_src[i].is_none() || hs[i] > pool[i] {
                pool[i] = hs[i];
                pool_src[i] = Some(s);
            }
        }
    }
    let o_mv = dot(&p[l.w_mv..l.w_mv + d_h], &pool)
        + dot(&p[l.w_mv + d_h..l.w_mv + 2 * d_h], hc)
        + p[l.b_mv];

    let scores = [o_kp, o_de, o_mv];
    let mut probs = scores;
    softmax_in_place(&mut probs);

    Ok(Forward {
        a1,
        b,
        fwd,
        bwd,
        v,
        h_layers,
        att,
        pool,
        pool_src,
        scores,
        probs,
    })
}

/// Back-propagate a gradient on the three scores into the parameter
/// gradient.
pub fn backward(
    params: &ScorerParams,
    input: &ModelInput,
    fw: &Forward,
    dscores: [f64; 3],
    grad: &mut [f64],
) {
    let cfg = *params.cfg();
    let d_h = cfg.d_h;
    let d_in = cfg.d_in();
    let n = input.n;
    let p = &params.data;
    let l = &params.layout;

    let h_final = fw.h_layers.last().unwrap();
    let hc = &h_final[input.center * d_h..(input.center + 1) * d_h];

    let mut d_h_buf = vec![0.0; n * d_h];
    grad[l.b_kp] += dscores[0];
    grad[l.b_de] += dscores[1];
    grad[l.b_mv] += dscores[2];
    for i in 0..d_h {
        grad[l.w_kp + i] += dscores[0] * hc[i];
        grad[l.w_de + i] += dscores[1] * hc[i];
        grad[l.w_mv + i] += dscores[2] * fw.pool[i];
        grad[l.w_mv + d_h + i] += dscores[2] * hc[i];
        let dc = dscores[0] * p[l.w_kp + i]
            + dscores[1] * p[l.w_de + i]
            + dscores[2] * p[l.w_mv + d_h + i];
        d_h_buf[input.center * d_h + i] += dc;
        if let Some(srcn) = fw.pool_src[i] {
            d_h_buf[srcn * d_h + i] += dscores[2] * p[l.w_mv + i];
        }
    }

    // attention stack, reversed
    if cfg.use_gnn {
        let adj = Adjacency::build(input);
        let d_e = cfg.d_edge;
        for layer in (0..cfg.n_layers).rev() {
            let h_cur = &fw.h_layers[layer];
            let d_up = d_h_buf.clone(); // gradient w.r.t. this layer's output
            let mut d_cur = d_up.clone(); // residual path
            for head in 0..cfg.n_heads {
                let tr = &fw.att[layer * cfg.n_heads + head];
                let g = *l.gat_at(layer, head);
                let a_vec = &p[g.a_vec..g.a_vec + d_h];
                let mut ds = vec![0.0; n * d_h];
                let mut dt = vec![0.0; n * d_h];
                let inv_heads = 1.0 / cfg.n_heads as f64;
                let mut dpre = vec![0.0; d_h];
                for k in 0..n {
                    let range = adj.range(k);
                    let dagg = &d_up[k * d_h..(k + 1) * d_h];
                    // attention weight gradients
                    let mut dalpha: Vec<f64> = Vec::with_capacity(range.len());
                    for slot in range.clone() {
                        let srcn = adj.src[slot];
                        dalpha.push(
                            inv_heads * dot(dagg, &tr.s[srcn * d_h..(srcn + 1) * d_h]),
                        );
                        axpy(
                            inv_heads * tr.alpha[slot],
                            dagg,
                            &mut ds[srcn * d_h..(srcn + 1) * d_h],
                        );
                    }
                    let mean: f64 = range
                        .clone()
                        .zip(&dalpha)
                        .map(|(slot, &da)| tr.alpha[slot] * da)
                        .sum();
                    for (slot, &da) in range.clone().zip(&dalpha) {
                        let dlogit = tr.alpha[slot] * (da - mean);
                        if dlogit == 0.0 {
                            continue;
                        }
                        let qe = &tr.q[slot * d_h..(slot + 1) * d_h];
                        for i in 0..d_h {
                            grad[g.a_vec + i] += dlogit * qe[i];
                            dpre[i] = dlogit * a_vec[i] * (1.0 - qe[i] * qe[i]);
                        }
                        let srcn = adj.src[slot];
                        for i in 0..d_h {
                            ds[srcn * d_h + i] += dpre[i];
                            dt[k * d_h + i] += dpre[i];
                            grad[g.b_att + i] += dpre[i];
                        }
                        if let Some(f) = adj.feat[slot] {
                            outer_acc(
                                &mut grad[g.w_edge..g.w_edge + d_h * d_e],
                                d_h,
                                d_e,
                                &dpre,
                                &input.edge_feats[f * d_e..(f + 1) * d_e],
                            );
                        }
                    }
                }
                for k in 0..n {
                    let hk = &h_cur[k * d_h..(k + 1) * d_h];
                    outer_acc(
                        &mut grad[g.w_src..g.w_src + d_h * d_h],
                        d_h,
                        d_h,
                        &ds[k * d_h..(k + 1) * d_h],
                        hk,
                    );
                    matvec_t_acc(
                        &p[g.w_src..g.w_src + d_h * d_h],
                        d_h,
                        d_h,
                        &ds[k * d_h..(k + 1) * d_h],
                        &mut d_cur[k * d_h..(k + 1) * d_h],
                    );
                    outer_acc(
                        &mut grad[g.w_tgt..g.w_tgt + d_h * d_h],
                        d_h,
                        d_h,
                        &dt[k * d_h..(k + 1) * d_h],
                        hk,
                    );
                    matvec_t_acc(
                        &p[g.w_tgt..g.w_tgt + d_h * d_h],
                        d_h,
                        d_h,
                        &dt[k * d_h..(k + 1) * d_h],
                        &mut d_cur[k * d_h..(k + 1) * d_h],
                    );
                }
            }
            d_h_buf = d_cur;
        }
    }

    // projection
    let mut d_fwd = vec![0.0; n * d_h];
    let mut d_bwd = vec![0.0; n * d_h]; // in backward-direction processing order
    let mut cat = vec![0.0; 2 * d_h];
    let mut dcat = vec![0.0; 2 * d_h];
    for k in 0..n {
        let dv = &d_h_buf[k * d_h..(k + 1) * d_h];
        cat[..d_h].copy_from_slice(&fw.fwd.h[k * d_h..(k + 1) * d_h]);
        let bpos = n - 1 - k;
        cat[d_h..].copy_from_slice(&fw.bwd.h[bpos * d_h..(bpos + 1) * d_h]);
        outer_acc(
            &mut grad[l.proj_w..l.proj_w + d_h * 2 * d_h],
            d_h,
            2 * d_h,
            dv,
            &cat,
        );
        for i in 0..d_h {
            grad[l.proj_b + i] += dv[i];
        }
        dcat.fill(0.0);
        matvec_t_acc(&p[l.proj_w..l.proj_w + d_h * 2 * d_h], d_h, 2 * d_h, dv, &mut dcat);
        d_fwd[k * d_h..(k + 1) * d_h].copy_from_slice(&dcat[..d_h]);
        d_bwd[bpos * d_h..(bpos + 1) * d_h].copy_from_slice(&dcat[d_h..]);
    }

    // GRU directions
    let mut d_b = vec![0.0; n * d_h];
    gru_direction_backward(params, &l.gru[0], &fw.b, &fw.fwd, &d_fwd, n, grad, &mut d_b);
    let mut rev_inputs = vec![0.0; n * d_h];
    for t in 0..n {
        let node = n - 1 - t;
        rev_inputs[t * d_h..(t + 1) * d_h]
            .copy_from_slice(&fw.b[node * d_h..(node + 1) * d_h]);
    }
    let mut d_rev = vec![0.0; n * d_h];
    gru_direction_backward(params, &l.gru[1], &rev_inputs, &fw.bwd, &d_bwd, n, grad, &mut d_rev);
    for t in 0..n {
        let node = n - 1 - t;
        axpy(1.0, &d_rev[t * d_h..(t + 1) * d_h], &mut d_b[node * d_h..(node + 1) * d_h]);
    }

    // MLP
    let mut da1 = vec![0.0; d_h];
    for k in 0..n {
        let db = &d_b[k * d_h..(k + 1) * d_h];
        let a1k = &fw.a1[k * d_h..(k + 1) * d_h];
        outer_acc(&mut grad[l.mlp_w2..l.mlp_w2 + d_h * d_h], d_h, d_h, db, a1k);
        for i in 0..d_h {
            grad[l.mlp_b2 + i] += db[i];
        }
        da1.fill(0.0);
        matvec_t_acc(&p[l.mlp_w2..l.mlp_w2 + d_h * d_h], d_h, d_h, db, &mut da1);
        for i in 0..d_h {
            da1[i] *= 1.0 - a1k[i] * a1k[i];
        }
        outer_acc(
            &mut grad[l.mlp_w1..l.mlp_w1 + d_h * d_in],
            d_h,
            d_in,
            &da1,
            &input.x[k * d_in..(k + 1) * d_in],
        );
        for i in 0..d_h {
            grad[l.mlp_b1 + i] += da1[i];
        }
    }
}

/// Argmax over the softmax, ties broken Keep > Delete > Move.
pub fn predict(scores: [f64; 3]) -> ([f64; 3], OpLabel) {
    let mut probs = scores;
    softmax_in_place(&mut probs);
    let mut best = OpLabel::Keep;
    let mut best_p = probs[0];
    for (op, &pr) in [OpLabel::Delete, OpLabel::Move].iter().zip(&probs[1..]) {
        if pr > best_p {
            best_p = pr;
            best = *op;
        }
    }
    (probs, best)
}

/// Forward-only scoring of one assembled graph.
pub fn score_graph(params: &ScorerParams, input: &ModelInput) -> Result<([f64; 3], OpLabel)> {
    let fw = forward(params, input)?;
    let (probs, op) = predict(fw.scores);
    Ok((probs, op))
}

/// Mean weighted cross-entropy over a batch, with the full parameter
/// gradient accumulated into `grad` (which must be zeroed by the caller).
pub fn loss_and_grad(
    params: &ScorerParams,
    batch: &[(&ModelInput, OpLabel)],
    class_weights: [f64; 3],
    grad: &mut [f64],
    batch_id: usize,
) -> Result<f64> {
    debug_assert_eq!(grad.len(), params.layout.total);
    let inv_n = 1.0 / batch.len().max(1) as f64;
    let mut loss = 0.0;
    for (input, label) in batch {
        let fw = forward(params, input)?;
        let y = label.class_index();
        let w = class_weights[y];
        loss += -w * fw.probs[y].max(1e-300).ln() * inv_n;
        let mut dscores = fw.probs;
        for (c, d) in dscores.iter_mut().enumerate() {
            *d = w * inv_n * (*d - if c == y { 1.0 } else { 0.0 });
        }
        backward(params, input, &fw, dscores, grad);
    }
    if !loss.is_finite() {
        return Err(Error::Training(format!(
            "non-finite loss in batch {batch_id}"
        )));
    }
    Ok(loss)
}
