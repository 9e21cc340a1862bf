//! Scorer parameters: layout, initialization, checkpoints.
//!
//! All learnable weights live in one flat `f64` vector with a precomputed
//! layout. Gradients, the optimizer state, finite-difference checks, and
//! checkpoints all operate on the same flat view.

use std::fs;
use std::ops::Range;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EDGE_FEATURE_DIM, NODE_FEATURE_DIM};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Shapes of the scorer. `n_layers` equals the BFS depth of the context
/// graphs the scorer is trained for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Text embedder output dimension (including pattern flags).
    pub d_text: usize,
    /// Raw node feature dimension.
    pub d_node: usize,
    /// Edge feature dimension.
    pub d_edge: usize,
    /// Hidden size shared by the MLP, GRU, and attention layers.
    pub d_h: usize,
    /// Number of graph attention layers.
    pub n_layers: usize,
    /// Attention heads per layer; head outputs are averaged.
    pub n_heads: usize,
    /// When false the attention stack is skipped and node states pass
    /// through unchanged (the ablation variant).
    pub use_gnn: bool,
}

impl ModelConfig {
    pub fn new(d_text: usize, d_h: usize, n_layers: usize) -> Self {
        ModelConfig {
            d_text,
            d_node: NODE_FEATURE_DIM,
            d_edge: EDGE_FEATURE_DIM,
            d_h,
            n_layers,
            n_heads: 2,
            use_gnn: true,
        }
    }

    pub fn d_in(&self) -> usize {
        self.d_text + self.d_node
    }

    fn validate(&self) -> Result<()> {
        if self.d_text == 0
            || self.d_h == 0
            || self.n_layers == 0
            || self.n_heads == 0
            || self.d_node != NODE_FEATURE_DIM
            || self.d_edge != EDGE_FEATURE_DIM
        {
            return Err(Error::Config(format!("invalid model config: {self:?}")));
        }
        Ok(())
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        // d_h 128 and two attention layers match the default BFS depth.
        ModelConfig::new(68, 128, 2)
    }
}

/// Offsets of one GRU direction.
#[derive(Debug, Clone, Copy)]
pub struct GruOffsets {
    pub w_r: usize,
    pub w_z: usize,
    pub w_n: usize,
    pub u_r: usize,
    pub u_z: usize,
    pub u_n: usize,
    pub b_r: usize,
    pub b_z: usize,
    pub b_n: usize,
}

/// Offsets of one attention head in one layer.
#[derive(Debug, Clone, Copy)]
pub struct GatOffsets {
    pub w_src: usize,
    pub w_tgt: usize,
    pub w_edge: usize,
    pub b_att: usize,
    pub a_vec: usize,
}

/// Flat-vector layout for a `ModelConfig`.
#[derive(Debug, Clone)]
pub struct Layout {
    pub cfg: ModelConfig,
    pub mlp_w1: usize,
    pub mlp_b1: usize,
    pub mlp_w2: usize,
    pub mlp_b2: usize,
    pub gru: [GruOffsets; 2],
    pub proj_w: usize,
    pub proj_b: usize,
    pub gat: Vec<GatOffsets>,
    pub w_kp: usize,
    pub b_kp: usize,
    pub w_de: usize,
    pub b_de: usize,
    pub w_mv: usize,
    pub b_mv: usize,
    pub total: usize,
}

impl Layout {
    pub fn new(cfg: ModelConfig) -> Layout {
        let d_h = cfg.d_h;
        let d_in = cfg.d_in();
        let mut at = 0usize;
        let mut take = |len: usize| {
            let off = at;
            at += len;
            off
        };
        let mlp_w1 = take(d_h * d_in);
        let mlp_b1 = take(d_h);
        let mlp_w2 = take(d_h * d_h);
        let mlp_b2 = take(d_h);
        let mut gru_dir = || GruOffsets {
            w_r: take(d_h * d_h),
            w_z: take(d_h * d_h),
            w_n: take(d_h * d_h),
            u_r: take(d_h * d_h),
            u_z: take(d_h * d_h),
            u_n: take(d_h * d_h),
            b_r: take(d_h),
            b_z: take(d_h),
            b_n: take(d_h),
        };
        let gru = [gru_dir(), gru_dir()];
        let proj_w = take(d_h * 2 * d_h);
        let proj_b = take(d_h);
        let mut gat = Vec::with_capacity(cfg.n_layers * cfg.n_heads);
        for _ in 0..cfg.n_layers * cfg.n_heads {
            gat.push(GatOffsets {
                w_src: take(d_h * d_h),
                w_tgt: take(d_h * d_h),
                w_edge: take(d_h * cfg.d_edge),
                b_att: take(d_h),
                a_vec: take(d_h),
            });
        }
        let w_kp = take(d_h);
        let b_kp = take(1);
        let w_de = take(d_h);
        let b_de = take(1);
        let w_mv = take(2 * d_h);
        let b_mv = take(1);
        Layout {
            cfg,
            mlp_w1,
            mlp_b1,
            mlp_w2,
            mlp_b2,
            gru,
            proj_w,
            proj_b,
            gat,
            w_kp,
            b_kp,
            w_de,
            b_de,
            w_mv,
            b_mv,
            total: at,
        }
    }

    pub fn gat_at(&self, layer: usize, head: usize) -> &GatOffsets {
        &self.gat[layer * self.cfg.n_heads + head]
    }

    pub fn range(&self, off: usize, len: usize) -> Range<usize> {
        off..off + len
    }
}

/// All learnable weights of the scorer.
#[derive(Debug, Clone)]
pub struct ScorerParams {
    pub layout: Layout,
    pub data: Vec<f64>,
}

impl ScorerParams {
    /// Zero-initialized parameters (used by tests that pin linear behaviour).
    pub fn zeros(cfg: ModelConfig) -> Result<ScorerParams> {
        cfg.validate()?;
        let layout = Layout::new(cfg);
        let data = vec![0.0; layout.total];
        Ok(ScorerParams { layout, data })
    }

    /// Seeded uniform init, scale 1/sqrt(fan_in) per matrix; biases zero.
    pub fn init(cfg: ModelConfig, seed: u64) -> Result<ScorerParams> {
        cfg.validate()?;
        let layout = Layout::new(cfg);
        let mut data = vec![0.0; layout.total];
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let d_h = cfg.d_h;
        let mut fill = |data: &mut [f64], off: usize, rows: usize, cols: usize| {
            let s = 1.0 / (cols as f64).sqrt();
            for x in data[off..off + rows * cols].iter_mut() {
                *x = rng.gen_range(-s..s);
            }
        };
        fill(&mut data, layout.mlp_w1, d_h, cfg.d_in());
        fill(&mut data, layout.mlp_w2, d_h, d_h);
        for dir in 0..2 {
            let g = layout.gru[dir];
            for off in [g.w_r, g.w_z, g.w_n, g.u_r, g.u_z, g.u_n] {
                fill(&mut data, off, d_h, d_h);
            }
        }
        fill(&mut data, layout.proj_w, d_h, 2 * d_h);
        for l in 0..cfg.n_layers {
            for h in 0..cfg.n_heads {
                let g = *layout.gat_at(l, h);
                fill(&mut data, g.w_src, d_h, d_h);
                fill(&mut data, g.w_tgt, d_h, d_h);
                fill(&mut data, g.w_edge, d_h, cfg.d_edge);
                fill(&mut data, g.a_vec, 1, d_h);
            }
        }
        fill(&mut data, layout.w_kp, 1, d_h);
        fill(&mut data, layout.w_de, 1, d_h);
        fill(&mut data, layout.w_mv, 1, 2 * d_h);
        Ok(ScorerParams { layout, data })
    }

    pub fn cfg(&self) -> &ModelConfig {
        &self.layout.cfg
    }

    pub fn slice(&self, off: usize, len: usize) -> &[f64] {
        &self.data[off..off + len]
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    config: ModelConfig,
    data: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct VersionProbe {
    version: u32,
}

/// Versioned JSON checkpoint. `f64` values round-trip exactly through
/// serde_json, so save followed by load is the identity.
pub fn save_params(params: &ScorerParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ck = Checkpoint {
        version: CHECKPOINT_VERSION,
        config: *params.cfg(),
        data: params.data.clone(),
    };
    let body = serde_json::to_string(&ck).expect("serialize");
    fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_params(path: impl AsRef<Path>) -> Result<ScorerParams> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let probe: VersionProbe =
        serde_json::from_str(&raw).map_err(|e| Error::CorruptCheckpoint {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    if probe.version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointVersion {
            path: path.display().to_string(),
            found: probe.version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let ck: Checkpoint = serde_json::from_str(&raw).map_err(|e| Error::CorruptCheckpoint {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    ck.config.validate()?;
    let layout = Layout::new(ck.config);
    if ck.data.len() != layout.total || ck.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::CorruptCheckpoint {
            path: path.display().to_string(),
            message: format!(
                "parameter vector has {} entries, layout wants {}",
                ck.data.len(),
                layout.total
            ),
        });
    }
    Ok(ScorerParams {
        layout,
        data: ck.data,
    })
}
