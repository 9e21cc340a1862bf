//! Synthetic document generator with known gold ToCs.
//!
//! Documents come out of a seeded generator as block dumps plus gold trees,
//! the generator's own reading order, and a ledger naming exactly which
//! headings were made to violate which assumption. With all violation rates
//! at zero the documents satisfy the three structural assumptions exactly,
//! so label derivation followed by tree modification reproduces the gold
//! tree and every learned-pipeline test has a clean target.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::block::{BBox, Block, Document, PageDims, TocNode};
use crate::error::{Error, Result};

const PAGE_W: f64 = 612.0;
const PAGE_H: f64 = 792.0;
const MARGIN: f64 = 50.0;
const COLUMN_GAP: f64 = 30.0;
/// Vertical leading between blocks; kept below the reading-order gap
/// threshold so columns never split into horizontal bands.
const LEADING: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Multi-level sections with per-level font sizes.
    Standard,
    /// Flat corpus where headings and decoys share size and text statistics;
    /// only the font pattern across adjacent siblings separates them.
    ContextNecessity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub doc_id: String,
    pub variant: Variant,
    /// Target page count range (inclusive). The layout paginates content, so
    /// the realized count can differ by a page.
    pub pages: (u32, u32),
    /// 1 or 2 columns.
    pub columns: u32,
    /// Heading depth (number of heading levels), at most 4.
    pub depth: u32,
    /// Strictly decreasing per-level font sizes.
    pub level_sizes: Vec<f64>,
    pub body_size: f64,
    pub bodies_per_heading: (u32, u32),
    /// Sub-headings per non-leaf heading (inclusive range).
    pub children_per_heading: (u32, u32),
    /// Violation targets as a fraction of all headings; injections are
    /// capped by per-assumption eligibility.
    pub a1_rate: f64,
    pub a2_rate: f64,
    pub a3_rate: f64,
    /// Small callout blocks ("$5,300m") interleaved with bodies.
    pub decoy_rate: f64,
    /// Sub-threshold fine-print blocks.
    pub tiny_rate: f64,
    /// Prefix headings with "2.1"-style numbering. Off by default so models
    /// cannot shortcut via the numbering.
    pub numbering: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            doc_id: "doc".into(),
            variant: Variant::Standard,
            pages: (3, 5),
            columns: 1,
            depth: 3,
            level_sizes: vec![16.0, 14.0, 12.0],
            body_size: 10.0,
            bodies_per_heading: (1, 4),
            children_per_heading: (1, 3),
            a1_rate: 0.0,
            a2_rate: 0.0,
            a3_rate: 0.0,
            decoy_rate: 0.1,
            tiny_rate: 0.05,
            numbering: false,
        }
    }
}

/// Which headings were injected with which violation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    pub a1: Vec<String>,
    pub a2: Vec<String>,
    pub a3: Vec<String>,
}

impl Ledger {
    pub fn flags(&self) -> BTreeMap<String, crate::eval::HeadingFlags> {
        let mut out: BTreeMap<String, crate::eval::HeadingFlags> = BTreeMap::new();
        for id in &self.a1 {
            out.entry(id.clone()).or_default().a1 = true;
        }
        for id in &self.a2 {
            out.entry(id.clone()).or_default().a2 = true;
        }
        for id in &self.a3 {
            out.entry(id.clone()).or_default().a3 = true;
        }
        out
    }
}

pub struct GenOutput {
    pub doc: Document,
    pub gold: TocNode,
    /// Ground-truth reading order (block ids).
    pub reading_order: Vec<String>,
    pub ledger: Ledger,
}

#[derive(Debug, Clone)]
struct Logical {
    id: String,
    text: String,
    font: String,
    size: f64,
    colour: [u8; 3],
    lines: u32,
}

const WORDS: &[&str] = &[
    "governance", "emissions", "strategy", "report", "community", "supply",
    "chain", "energy", "water", "safety", "people", "growth", "climate",
    "carbon", "impact", "review", "targets", "assurance", "risk", "board",
    "policy", "training", "health", "waste", "materials", "performance",
    "overview", "highlights", "approach", "stakeholders", "investment",
    "operations", "workforce", "diversity", "ethics", "audit", "disclosure",
    "framework", "baseline", "progress", "initiative", "partnership",
    "resources", "footprint", "renewable", "recycling", "biodiversity",
    "engagement", "compliance", "innovation", "efficiency", "standards",
    "reduction", "transition", "resilience", "measurement", "reporting",
];

fn title_words(rng: &mut ChaCha20Rng, n: usize) -> String {
    (0..n)
        .map(|_| {
            let w = WORDS[rng.gen_range(0..WORDS.len())];
            let mut c = w.chars();
            match c.next() {
                Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn body_text(rng: &mut ChaCha20Rng, words: usize) -> (String, u32) {
    let mut out = String::new();
    let per_line = 9;
    let mut lines = 1u32;
    for i in 0..words {
        if i > 0 {
            if i % per_line == 0 {
                out.push('\n');
                lines += 1;
            } else {
                out.push(' ');
            }
        }
        out.push_str(WORDS[rng.gen_range(0..WORDS.len())]);
    }
    (out, lines)
}

fn decoy_text(rng: &mut ChaCha20Rng) -> String {
    match rng.gen_range(0..3) {
        0 => format!("${},{:03}m", rng.gen_range(1..9), rng.gen_range(0..999)),
        1 => format!("{},{:03}", rng.gen_range(10..99), rng.gen_range(0..999)),
        _ => format!("{},{:03} jobs", rng.gen_range(1..9), rng.gen_range(0..999)),
    }
}

struct Builder {
    seq: Vec<Logical>,
    next_id: usize,
}

impl Builder {
    fn new() -> Builder {
        Builder {
            seq: Vec::new(),
            next_id: 1,
        }
    }

    fn push(&mut self, mut block: Logical) -> String {
        let id = format!("b{:05}", self.next_id);
        self.next_id += 1;
        block.id = id.clone();
        self.seq.push(block);
        id
    }
}

fn block_height(size: f64, lines: u32) -> f64 {
    lines as f64 * size * 1.25 + 4.0
}

/// Usable vertical space per column.
fn usable_height() -> f64 {
    PAGE_H - 2.0 * MARGIN
}

fn column_width(columns: u32) -> f64 {
    (PAGE_W - 2.0 * MARGIN - COLUMN_GAP * (columns - 1) as f64) / columns as f64
}

/// Assign pages, columns and bounding boxes scanning the sequence in order.
fn layout(
    seq: &[Logical],
    columns: u32,
    rng: &mut ChaCha20Rng,
) -> Result<(Vec<Block>, Vec<PageDims>)> {
    let col_w = column_width(columns);
    let mut blocks = Vec::with_capacity(seq.len());
    let mut page = 1u32;
    let mut col = 0u32;
    let mut y = MARGIN;
    for item in seq {
        let h = block_height(item.size, item.lines);
        if h > usable_height() {
            return Err(Error::Generation(format!(
                "block {} taller than a column ({h:.1} pt)",
                item.id
            )));
        }
        if y + h > PAGE_H - MARGIN {
            col += 1;
            if col >= columns {
                col = 0;
                page += 1;
            }
            y = MARGIN;
        }
        let x0 = MARGIN + col as f64 * (col_w + COLUMN_GAP);
        let w = col_w * rng.gen_range(0.6..1.0);
        blocks.push(Block {
            id: item.id.clone(),
            text: item.text.clone(),
            font: item.font.clone(),
            size: item.size,
            colour: item.colour,
            page,
            bbox: BBox::new(x0, y, x0 + w, y + h),
            line_count: item.lines,
        });
        y += h + LEADING;
    }
    let dims = vec![PageDims { w: PAGE_W, h: PAGE_H }; page as usize];
    Ok((blocks, dims))
}

const LEVEL_COLOURS: [[u8; 3]; 4] = [[20, 40, 90], [30, 60, 110], [40, 80, 130], [50, 100, 150]];
const BODY_COLOUR: [u8; 3] = [10, 10, 10];

fn build_gold(nodes: &[(String, String, u32)]) -> TocNode {
    // paths[level] = index path to the current open heading at that level
    fn attach(root: &mut TocNode, path: &[usize]) -> &mut TocNode {
        let mut cur = root;
        for &i in path {
            cur = &mut cur.children[i];
        }
        cur
    }
    let mut root = TocNode::root(vec![]);
    let mut path: Vec<usize> = Vec::new();
    for (id, text, level) in nodes {
        let depth = (*level as usize).saturating_sub(1);
        path.truncate(depth);
        let parent = attach(&mut root, &path);
        parent.children.push(TocNode {
            id: Some(id.clone()),
            text: text.clone(),
            children: vec![],
        });
        path.push(parent.children.len() - 1);
    }
    root
}

/// Heading metadata used by the violation injector.
struct HeadingInfo {
    id: String,
    level: u32,
    /// Gold parent id (None for top level).
    parent: Option<String>,
    /// Number of same-parent heading siblings (excluding itself).
    siblings: usize,
    /// Number of heading children.
    heading_children: usize,
    /// Sequence span [start, end) of the heading's section.
    span: (usize, usize),
}

fn generate_standard(cfg: &GenConfig, rng: &mut ChaCha20Rng) -> Result<GenOutput> {
    let depth = cfg.depth.clamp(1, 4);
    if cfg.level_sizes.len() < depth as usize {
        return Err(Error::Generation(format!(
            "need {depth} level sizes, got {}",
            cfg.level_sizes.len()
        )));
    }
    for w in cfg.level_sizes[..depth as usize].windows(2) {
        if w[1] >= w[0] {
            return Err(Error::Generation("level sizes must strictly decrease".into()));
        }
    }
    if cfg.body_size >= cfg.level_sizes[depth as usize - 1] {
        return Err(Error::Generation("body size must stay below the deepest level".into()));
    }

    let target_pages = rng.gen_range(cfg.pages.0..=cfg.pages.1) as f64;
    let budget = target_pages * cfg.columns as f64 * usable_height();

    let mut b = Builder::new();
    let mut gold_nodes: Vec<(String, String, u32)> = Vec::new();
    let mut headings: Vec<HeadingInfo> = Vec::new();
    let mut height_used = 0.0;

    // recursive section writer
    #[allow(clippy::too_many_arguments)]
    fn section(
        level: u32,
        depth: u32,
        number: &mut Vec<u32>,
        parent_id: Option<&str>,
        cfg: &GenConfig,
        rng: &mut ChaCha20Rng,
        b: &mut Builder,
        gold_nodes: &mut Vec<(String, String, u32)>,
        headings: &mut Vec<HeadingInfo>,
        height_used: &mut f64,
    ) {
        let mut text = title_words(rng, rng.gen_range(2..=5));
        if cfg.numbering {
            let prefix: Vec<String> = number.iter().map(|n| n.to_string()).collect();
            text = format!("{} {}", prefix.join("."), text);
        }
        let size = cfg.level_sizes[level as usize - 1];
        let span_start = b.seq.len();
        let hid = b.push(Logical {
            id: String::new(),
            text: text.clone(),
            font: format!("Heading-Sans-{level}"),
            size,
            colour: LEVEL_COLOURS[level as usize - 1],
            lines: 1,
        });
        *height_used += block_height(size, 1) + LEADING;
        gold_nodes.push((hid.clone(), text, level));

        let mut write_bodies = |rng: &mut ChaCha20Rng, b: &mut Builder, height_used: &mut f64| {
            let n_bodies = rng.gen_range(cfg.bodies_per_heading.0..=cfg.bodies_per_heading.1);
            for _ in 0..n_bodies.max(1) {
                let (text, lines) = body_text(rng, rng.gen_range(14..40));
                *height_used += block_height(cfg.body_size, lines) + LEADING;
                b.push(Logical {
                    id: String::new(),
                    text,
                    font: "Body-Serif".into(),
                    size: cfg.body_size,
                    colour: BODY_COLOUR,
                    lines,
                });
                if rng.gen_bool(cfg.decoy_rate) {
                    let decoy_size = (cfg.body_size - 1.0).max(1.0);
                    *height_used += block_height(decoy_size, 1) + LEADING;
                    b.push(Logical {
                        id: String::new(),
                        text: decoy_text(rng),
                        font: "Callout-Sans".into(),
                        size: decoy_size,
                        colour: [90, 30, 30],
                        lines: 1,
                    });
                }
                if rng.gen_bool(cfg.tiny_rate) {
                    *height_used += block_height(4.0, 1) + LEADING;
                    b.push(Logical {
                        id: String::new(),
                        text: "source: internal estimates".into(),
                        font: "Fine-Print".into(),
                        size: 4.0,
                        colour: [120, 120, 120],
                        lines: 1,
                    });
                }
            }
        };

        write_bodies(rng, b, height_used);

        let mut n_children = 0usize;
        if level < depth {
            n_children =
                rng.gen_range(cfg.children_per_heading.0..=cfg.children_per_heading.1) as usize;
            for c in 0..n_children {
                number.push(c as u32 + 1);
                section(
                    level + 1,
                    depth,
                    number,
                    Some(&hid),
                    cfg,
                    rng,
                    b,
                    gold_nodes,
                    headings,
                    height_used,
                );
                number.pop();
            }
        }
        headings.push(HeadingInfo {
            id: hid,
            level,
            parent: parent_id.map(str::to_string),
            siblings: 0, // filled later
            heading_children: n_children,
            span: (span_start, b.seq.len()),
        });
    }

    let mut top = 0u32;
    while height_used < budget {
        top += 1;
        let mut number = vec![top];
        section(
            1,
            depth,
            &mut number,
            None,
            cfg,
            rng,
            &mut b,
            &mut gold_nodes,
            &mut headings,
            &mut height_used,
        );
    }

    // sibling counts per gold parent
    let mut group_sizes: BTreeMap<Option<String>, usize> = BTreeMap::new();
    for h in &headings {
        *group_sizes.entry(h.parent.clone()).or_insert(0) += 1;
    }
    for h in headings.iter_mut() {
        h.siblings = group_sizes[&h.parent] - 1;
    }

    let ledger = inject_violations(cfg, rng, &mut b.seq, &headings)?;

    let (blocks, dims) = layout(&b.seq, cfg.columns.max(1), rng)?;
    let gold = build_gold(&gold_nodes);
    let reading_order = blocks.iter().map(|blk| blk.id.clone()).collect();
    let doc = Document {
        doc_id: cfg.doc_id.clone(),
        blocks,
        page_dims: dims,
        gold: Some(gold.clone()),
    };
    Ok(GenOutput {
        doc,
        gold,
        reading_order,
        ledger,
    })
}

/// Draw `count` distinct items from `eligible` (ids), deterministically.
fn draw(
    rng: &mut ChaCha20Rng,
    eligible: &[&HeadingInfo],
    count: usize,
    taken: &mut Vec<String>,
) -> Vec<String> {
    let mut pool: Vec<&HeadingInfo> = eligible
        .iter()
        .filter(|h| !taken.contains(&h.id))
        .copied()
        .collect();
    pool.shuffle(rng);
    let chosen: Vec<String> = pool
        .into_iter()
        .take(count)
        .map(|h| h.id.clone())
        .collect();
    taken.extend(chosen.iter().cloned());
    chosen
}

/// Inject assumption violations into the logical sequence.
///
/// A2 shrinks a singleton-sibling non-leaf heading below its first heading
/// child; A3 shrinks grouped siblings by distinct quarter-point deltas (the
/// group's modal size stays with the uninjected members whenever at least
/// two remain); A1 swaps a heading behind its first descendant, applied in
/// reverse reading order so earlier swaps cannot undo later ones. The three
/// target sets are disjoint, so the "Any" column is exactly their union.
fn inject_violations(
    cfg: &GenConfig,
    rng: &mut ChaCha20Rng,
    seq: &mut [Logical],
    headings: &[HeadingInfo],
) -> Result<Ledger> {
    let n = headings.len().max(1);
    let target = |rate: f64| (rate * n as f64).round() as usize;
    let mut taken: Vec<String> = Vec::new();

    // A2 first (scarcest eligibility), then A3, then A1.
    let a2_eligible: Vec<&HeadingInfo> = headings
        .iter()
        .filter(|h| h.heading_children > 0 && h.siblings == 0)
        .collect();
    let a2 = {
        let mut ids = draw(rng, &a2_eligible, target(cfg.a2_rate), &mut taken);
        ids.sort();
        ids
    };

    let a3_eligible: Vec<&HeadingInfo> = headings.iter().filter(|h| h.siblings >= 1).collect();
    let a3 = {
        let mut ids = draw(rng, &a3_eligible, target(cfg.a3_rate), &mut taken);
        ids.sort();
        ids
    };

    let a1_eligible: Vec<&HeadingInfo> = headings
        .iter()
        .filter(|h| h.span.1 - h.span.0 >= 2)
        .collect();
    let a1 = {
        let mut ids = draw(rng, &a1_eligible, target(cfg.a1_rate), &mut taken);
        ids.sort();
        ids
    };

    let by_id: BTreeMap<&str, &HeadingInfo> =
        headings.iter().map(|h| (h.id.as_str(), h)).collect();
    let level_size = |level: u32| cfg.level_sizes[level as usize - 1];

    // A2: size drops just below the child level.
    for id in &a2 {
        let info = by_id[id.as_str()];
        let new_size = level_size(info.level + 1) - 0.5;
        let item = seq.iter_mut().find(|l| &l.id == id).unwrap();
        item.size = new_size;
    }

    // A3: distinct shrink per injected member of each sibling group. The
    // shrink must stay below the inter-level size gap or it would cross into
    // an A2 violation as well.
    let min_gap = {
        let depth = cfg.depth.clamp(1, 4) as usize;
        let mut gap = cfg.level_sizes[depth - 1] - cfg.body_size;
        for w in cfg.level_sizes[..depth].windows(2) {
            gap = gap.min(w[0] - w[1]);
        }
        gap
    };
    let mut group_counter: BTreeMap<Option<String>, usize> = BTreeMap::new();
    for id in &a3 {
        let info = by_id[id.as_str()];
        let k = group_counter.entry(info.parent.clone()).or_insert(0);
        *k += 1;
        let delta = 0.25 * *k as f64;
        if delta >= min_gap {
            return Err(Error::Generation(format!(
                "a3 injections too dense for the level-size gap ({delta} vs {min_gap}); \
                 lower a3_rate or widen the level sizes"
            )));
        }
        let item = seq.iter_mut().find(|l| &l.id == id).unwrap();
        item.size -= delta;
    }

    // A1: swap behind the first descendant, deepest-position first.
    let mut a1_infos: Vec<&HeadingInfo> = a1.iter().map(|id| by_id[id.as_str()]).collect();
    a1_infos.sort_by_key(|h| std::cmp::Reverse(h.span.0));
    for info in a1_infos {
        let pos = seq.iter().position(|l| l.id == info.id).unwrap();
        debug_assert!(pos + 1 < seq.len());
        seq.swap(pos, pos + 1);
    }

    Ok(Ledger { a1, a2, a3 })
}

/// Context-necessity corpus: one flat heading level. Page content repeats a
/// six-slot cycle of top-size blocks — a heading run of three sharing the
/// document's heading font, a lone decoy with a page-unique font, and a
/// decoy pair sharing a font — each followed by a run of bodies. Locally a
/// heading and a decoy look identical; only the font pattern across adjacent
/// siblings tells them apart, and the decoy pairs need two hops.
fn generate_context_necessity(cfg: &GenConfig, rng: &mut ChaCha20Rng) -> Result<GenOutput> {
    let s1 = cfg.level_sizes[0];
    if cfg.body_size >= s1 {
        return Err(Error::Generation("body size must stay below the heading size".into()));
    }
    let target_pages = rng.gen_range(cfg.pages.0..=cfg.pages.1) as f64;
    let budget = target_pages * cfg.columns.max(1) as f64 * usable_height();

    const FONT_POOL: [&str; 17] = [
        "Alpha-Grotesk", "Beta-Serif", "Gamma-Slab", "Delta-Mono", "Epsilon-Sans",
        "Zeta-Display", "Eta-Text", "Theta-Book", "Iota-Round", "Kappa-Narrow",
        "Lambda-Wide", "Mu-Humanist", "Nu-Geometric", "Xi-Antiqua", "Omicron-Gothic",
        "Pi-Caption", "Rho-Headline",
    ];
    let doc_font = FONT_POOL[rng.gen_range(0..FONT_POOL.len())];
    let decoy_fonts: Vec<&str> = FONT_POOL.iter().filter(|f| **f != doc_font).copied().collect();

    let colour = [60, 60, 60];
    let mut b = Builder::new();
    let mut gold_nodes: Vec<(String, String, u32)> = Vec::new();
    let mut height_used = 0.0;
    let mut decoy_cursor = 0usize;

    #[derive(Clone, Copy, PartialEq)]
    enum Slot {
        Heading,
        DecoySingle,
        DecoyPairA,
        DecoyPairB,
    }
    let cycle = [
        Slot::Heading,
        Slot::Heading,
        Slot::Heading,
        Slot::DecoySingle,
        Slot::DecoyPairA,
        Slot::DecoyPairB,
    ];

    let mut pair_font = decoy_fonts[0];
    while height_used < budget {
        for slot in cycle {
            let font = match slot {
                Slot::Heading => doc_font.to_string(),
                Slot::DecoySingle => {
                    let f = decoy_fonts[decoy_cursor % decoy_fonts.len()];
                    decoy_cursor += 1;
                    f.to_string()
                }
                Slot::DecoyPairA => {
                    pair_font = decoy_fonts[decoy_cursor % decoy_fonts.len()];
                    decoy_cursor += 1;
                    pair_font.to_string()
                }
                Slot::DecoyPairB => pair_font.to_string(),
            };
            let text = title_words(rng, rng.gen_range(2..=5));
            let id = b.push(Logical {
                id: String::new(),
                text: text.clone(),
                font,
                size: s1,
                colour,
                lines: 1,
            });
            height_used += block_height(s1, 1) + LEADING;
            if slot == Slot::Heading {
                gold_nodes.push((id, text, 1));
            }
            let n_bodies = rng.gen_range(3..=7);
            for _ in 0..n_bodies {
                let (text, lines) = body_text(rng, rng.gen_range(14..36));
                height_used += block_height(cfg.body_size, lines) + LEADING;
                b.push(Logical {
                    id: String::new(),
                    text,
                    font: "Body-Serif".into(),
                    size: cfg.body_size,
                    colour,
                    lines,
                });
            }
        }
    }

    let (blocks, dims) = layout(&b.seq, cfg.columns.max(1), rng)?;
    let gold = build_gold(&gold_nodes);
    let reading_order = blocks.iter().map(|blk| blk.id.clone()).collect();
    let doc = Document {
        doc_id: cfg.doc_id.clone(),
        blocks,
        page_dims: dims,
        gold: Some(gold.clone()),
    };
    Ok(GenOutput {
        doc,
        gold,
        reading_order,
        ledger: Ledger::default(),
    })
}

/// Generate one document. Deterministic for a given config.
pub fn generate(cfg: &GenConfig) -> Result<GenOutput> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    match cfg.variant {
        Variant::Standard => generate_standard(cfg, &mut rng),
        Variant::ContextNecessity => generate_context_necessity(cfg, &mut rng),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub master_seed: u64,
    pub config: GenConfig,
    pub splits: BTreeMap<String, Vec<String>>,
}

fn splitmix(seed: u64, i: u64) -> u64 {
    let mut z = seed.wrapping_add(i.wrapping_mul(0x9e3779b97f4a7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Generate a corpus under `out_dir` with train/dev/test subdirectories,
/// disjoint per-document seeds, and a manifest. `split` gives the three
/// document counts; their sum must be `n_docs`.
pub fn make_corpus(
    template: &GenConfig,
    n_docs: usize,
    master_seed: u64,
    split: (usize, usize, usize),
    out_dir: impl AsRef<Path>,
) -> Result<Manifest> {
    if split.0 + split.1 + split.2 != n_docs || n_docs < 3 {
        return Err(Error::Generation(format!(
            "split {split:?} does not cover {n_docs} documents"
        )));
    }
    let out_dir = out_dir.as_ref();
    let mut splits: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (name, _) in [("train", split.0), ("dev", split.1), ("test", split.2)] {
        fs::create_dir_all(out_dir.join(name))
            .map_err(|e| Error::io(out_dir.join(name).display().to_string(), e))?;
        splits.insert(name.to_string(), Vec::new());
    }
    for i in 0..n_docs {
        let part = if i < split.0 {
            "train"
        } else if i < split.0 + split.1 {
            "dev"
        } else {
            "test"
        };
        let mut cfg = template.clone();
        cfg.seed = splitmix(master_seed, i as u64);
        cfg.doc_id = format!("doc{i:04}");
        let out = generate(&cfg)?;
        let dir = out_dir.join(part);
        crate::block::save_document(&out.doc, &dir)?;
        let ledger_path = dir.join(format!("{}.ledger.json", cfg.doc_id));
        fs::write(
            &ledger_path,
            serde_json::to_string_pretty(&out.ledger).expect("serialize"),
        )
        .map_err(|e| Error::io(ledger_path.display().to_string(), e))?;
        splits.get_mut(part).unwrap().push(cfg.doc_id);
    }
    let manifest = Manifest {
        master_seed,
        config: template.clone(),
        splits,
    };
    let mpath = out_dir.join("manifest.json");
    fs::write(
        &mpath,
        serde_json::to_string_pretty(&manifest).expect("serialize"),
    )
    .map_err(|e| Error::io(mpath.display().to_string(), e))?;
    Ok(manifest)
}
