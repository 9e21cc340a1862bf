//! Block-level document model and the JSONL interchange format.
//!
//! A block is one text object from a PDF dump (usually a paragraph): text,
//! font, size, colour, bounding box, page and id. Documents are immutable
//! after load; every pipeline stage works on shared references.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box in page coordinates, origin top-left, units points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        BBox { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn translate(&self, dx: f64, dy: f64) -> BBox {
        BBox::new(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)
    }
}

/// One PDF text object.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub id: String,
    pub text: String,
    pub font: String,
    /// Font size in points; strictly positive.
    pub size: f64,
    pub colour: [u8; 3],
    /// 1-based page number.
    pub page: u32,
    pub bbox: BBox,
    pub line_count: u32,
}

impl Block {
    /// Character count of the text content.
    pub fn text_length(&self) -> usize {
        self.text.chars().count()
    }
}

/// Per-page width/height in points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageDims {
    pub w: f64,
    pub h: f64,
}

/// Node of a ToC tree. The root is the pseudo node (id = None); every other
/// node references a block id. Children are ordered by reading order. The
/// same shape serves gold trees and predicted trees so they compare directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TocNode {
    pub id: Option<String>,
    pub text: String,
    #[serde(default)]
    pub children: Vec<TocNode>,
}

impl TocNode {
    pub fn root(children: Vec<TocNode>) -> Self {
        TocNode {
            id: None,
            text: String::new(),
            children,
        }
    }

    pub fn leaf(id: impl Into<String>, text: impl Into<String>) -> Self {
        TocNode {
            id: Some(id.into()),
            text: text.into(),
            children: Vec::new(),
        }
    }

    /// Count of non-root nodes.
    pub fn size(&self) -> usize {
        self.children.iter().map(|c| c.count_subtree()).sum()
    }

    fn count_subtree(&self) -> usize {
        1 + self.children.iter().map(|c| c.count_subtree()).sum::<usize>()
    }

    /// Ids of all non-root nodes, pre-order.
    pub fn ids(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_ids(&mut out);
        out
    }

    fn collect_ids<'a>(&'a self, out: &mut Vec<&'a str>) {
        if let Some(id) = &self.id {
            out.push(id);
        }
        for c in &self.children {
            c.collect_ids(out);
        }
    }
}

/// A document: blocks in dump order plus per-page dimensions and an optional
/// gold ToC.
#[derive(Debug, Clone)]
pub struct Document {
    pub doc_id: String,
    pub blocks: Vec<Block>,
    pub page_dims: Vec<PageDims>,
    pub gold: Option<TocNode>,
}

impl Document {
    pub fn page_dims_of(&self, page: u32) -> PageDims {
        self.page_dims[(page - 1) as usize]
    }

    pub fn block_index(&self) -> HashMap<&str, usize> {
        self.blocks
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.as_str(), i))
            .collect()
    }
}

/// Wire record for one JSONL line of the block dump.
#[derive(Debug, Serialize, Deserialize)]
struct BlockRecord {
    id: String,
    text: String,
    font: String,
    size: f64,
    color: [u8; 3],
    page: u32,
    bbox: [f64; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    lines: Option<u32>,
}

impl BlockRecord {
    fn into_block(self) -> Block {
        let line_count = self
            .lines
            .unwrap_or_else(|| self.text.matches('\n').count() as u32 + 1);
        Block {
            id: self.id,
            text: self.text,
            font: self.font,
            size: self.size,
            colour: self.color,
            page: self.page,
            bbox: BBox::new(self.bbox[0], self.bbox[1], self.bbox[2], self.bbox[3]),
            line_count,
        }
    }

    fn from_block(b: &Block) -> Self {
        BlockRecord {
            id: b.id.clone(),
            text: b.text.clone(),
            font: b.font.clone(),
            size: b.size,
            color: b.colour,
            page: b.page,
            bbox: [b.bbox.x0, b.bbox.y0, b.bbox.x1, b.bbox.y1],
            lines: Some(b.line_count),
        }
    }
}

/// Sidecar file: `{"pages": [{"w": .., "h": ..}, ..]}`.
#[derive(Debug, Serialize, Deserialize)]
struct PagesFile {
    pages: Vec<PageDims>,
}

/// Validate block invariants, clamp bbox overshoot into page bounds, check id
/// uniqueness. Clamping is logged rather than rejected; real dumps overshoot.
fn validate(doc_id: &str, blocks: &mut [Block], page_dims: &[PageDims]) -> Result<()> {
    let mut seen: HashMap<&str, ()> = HashMap::with_capacity(blocks.len());
    for b in blocks.iter() {
        if b.size <= 0.0 || !b.size.is_finite() {
            return Err(Error::validation(
                doc_id,
                format!("block {}: non-positive font size {}", b.id, b.size),
            ));
        }
        if b.page < 1 {
            return Err(Error::validation(
                doc_id,
                format!("block {}: page number must be >= 1", b.id),
            ));
        }
        if b.page as usize > page_dims.len() {
            return Err(Error::validation(
                doc_id,
                format!(
                    "block {}: page {} exceeds page count {}",
                    b.id,
                    b.page,
                    page_dims.len()
                ),
            ));
        }
        if !(b.bbox.x0 < b.bbox.x1 && b.bbox.y0 < b.bbox.y1) {
            return Err(Error::validation(
                doc_id,
                format!("block {}: degenerate bbox", b.id),
            ));
        }
    }
    for b in blocks.iter() {
        if seen.insert(b.id.as_str(), ()).is_some() {
            return Err(Error::validation(
                doc_id,
                format!("duplicate block id {}", b.id),
            ));
        }
    }
    for b in blocks.iter_mut() {
        let dims = page_dims[(b.page - 1) as usize];
        let clamped = BBox::new(
            b.bbox.x0.max(0.0).min(dims.w),
            b.bbox.y0.max(0.0).min(dims.h),
            b.bbox.x1.max(0.0).min(dims.w),
            b.bbox.y1.max(0.0).min(dims.h),
        );
        if clamped != b.bbox {
            log::warn!(
                "{doc_id}: block {} bbox outside page bounds, clamped",
                b.id
            );
            if !(clamped.x0 < clamped.x1 && clamped.y0 < clamped.y1) {
                return Err(Error::validation(
                    doc_id,
                    format!("block {}: bbox entirely outside page", b.id),
                ));
            }
            b.bbox = clamped;
        }
    }
    Ok(())
}

fn infer_page_dims(blocks: &[Block]) -> Vec<PageDims> {
    let max_page = blocks.iter().map(|b| b.page).max().unwrap_or(0) as usize;
    let mut dims = vec![
        PageDims { w: 612.0, h: 792.0 };
        max_page
    ];
    for b in blocks {
        let d = &mut dims[(b.page - 1) as usize];
        d.w = d.w.max(b.bbox.x1);
        d.h = d.h.max(b.bbox.y1);
    }
    dims
}

/// Strip the dump suffix to obtain the document stem, e.g.
/// `report.blocks.jsonl` -> `report`.
fn doc_stem(path: &Path) -> (String, std::path::PathBuf) {
    let name = path.file_name().unwrap_or_default().to_string_lossy();
    let stem = name
        .strip_suffix(".blocks.jsonl")
        .or_else(|| name.strip_suffix(".jsonl"))
        .unwrap_or(&name)
        .to_string();
    let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    (stem, dir)
}

/// Parse a block dump (JSONL, one block per line) into validated blocks.
pub fn parse_blocks(path_label: &str, content: &str) -> Result<Vec<Block>> {
    let mut blocks = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: BlockRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path_label.to_string(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        blocks.push(rec.into_block());
    }
    Ok(blocks)
}

/// Load a document from a block dump. Sidecar files are found by stem
/// convention next to the dump: `<stem>.pages.json` (page dims; inferred from
/// block extents when absent) and `<stem>.gold.json` (gold ToC, optional).
pub fn load_document(path: impl AsRef<Path>) -> Result<Document> {
    let path = path.as_ref();
    let content =
        fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut blocks = parse_blocks(&path.display().to_string(), &content)?;

    let (stem, dir) = doc_stem(path);
    let pages_path = dir.join(format!("{stem}.pages.json"));
    let page_dims = if pages_path.exists() {
        let raw = fs::read_to_string(&pages_path)
            .map_err(|e| Error::io(pages_path.display().to_string(), e))?;
        let pf: PagesFile = serde_json::from_str(&raw).map_err(|e| Error::Parse {
            path: pages_path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        pf.pages
    } else {
        infer_page_dims(&blocks)
    };

    let gold_path = dir.join(format!("{stem}.gold.json"));
    let gold = if gold_path.exists() {
        let raw = fs::read_to_string(&gold_path)
            .map_err(|e| Error::io(gold_path.display().to_string(), e))?;
        let tree: TocNode = serde_json::from_str(&raw).map_err(|e| Error::Parse {
            path: gold_path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        Some(tree)
    } else {
        None
    };

    validate(&stem, &mut blocks, &page_dims)?;
    let doc = Document {
        doc_id: stem,
        blocks,
        page_dims,
        gold,
    };
    if let Some(g) = &doc.gold {
        validate_gold(&doc, g)?;
    }
    Ok(doc)
}

/// Check that every non-root gold node references an existing block id.
pub fn validate_gold(doc: &Document, gold: &TocNode) -> Result<()> {
    let index = doc.block_index();
    let missing: Vec<String> = gold
        .ids()
        .iter()
        .filter(|id| !index.contains_key(**id))
        .map(|s| s.to_string())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingGoldIds { ids: missing })
    }
}

/// Canonical JSONL serialization of a document's blocks: fixed key order,
/// `lines` always present, one record per line. `load` of a canonical dump
/// re-serializes byte-for-byte.
pub fn blocks_to_jsonl(blocks: &[Block]) -> String {
    let mut out = String::new();
    for b in blocks {
        let rec = BlockRecord::from_block(b);
        // serde_json writes struct fields in declaration order.
        writeln!(out, "{}", serde_json::to_string(&rec).expect("serialize")).unwrap();
    }
    out
}

pub fn pages_to_json(page_dims: &[PageDims]) -> String {
    serde_json::to_string(&PagesFile {
        pages: page_dims.to_vec(),
    })
    .expect("serialize")
}

/// Write `<stem>.blocks.jsonl`, `<stem>.pages.json` and, when gold is
/// present, `<stem>.gold.json` into `dir`.
pub fn save_document(doc: &Document, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let write = |name: String, data: String| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, data).map_err(|e| Error::io(p.display().to_string(), e))
    };
    write(
        format!("{}.blocks.jsonl", doc.doc_id),
        blocks_to_jsonl(&doc.blocks),
    )?;
    write(
        format!("{}.pages.json", doc.doc_id),
        pages_to_json(&doc.page_dims),
    )?;
    if let Some(g) = &doc.gold {
        write(
            format!("{}.gold.json", doc.doc_id),
            serde_json::to_string_pretty(g).expect("serialize"),
        )?;
    }
    Ok(())
}

/// Size normalization policy: quantize sizes to a grid, then (optionally)
/// nudge colliding fonts apart so distinct fonts never share a final size.
#[derive(Debug, Clone, Copy)]
pub struct SizeNormPolicy {
    /// Quantization grid in points.
    pub grid: f64,
    /// Give each distinct font on the same quantized size a deterministic
    /// offset of `epsilon * rank`, rank by first appearance in the document.
    pub font_disambiguation: bool,
    pub epsilon: f64,
}

impl Default for SizeNormPolicy {
    fn default() -> Self {
        SizeNormPolicy {
            grid: 0.25,
            font_disambiguation: true,
            epsilon: 0.01,
        }
    }
}

/// Quantize font sizes to the policy grid and disambiguate font collisions.
/// Returns a new document; the input is untouched. Idempotent: the epsilon
/// offsets are far below grid/2, so re-quantization recovers the same grid
/// value and the same first-appearance ranks.
pub fn normalize_sizes(doc: &Document, policy: SizeNormPolicy) -> Document {
    let mut out = doc.clone();
    let quantize = |s: f64| (s / policy.grid).round() * policy.grid;
    for b in out.blocks.iter_mut() {
        b.size = quantize(b.size);
    }
    if policy.font_disambiguation {
        // rank fonts per quantized size by first appearance
        let mut ranks: HashMap<(u64, &str), usize> = HashMap::new();
        let mut next_rank: HashMap<u64, usize> = HashMap::new();
        let key = |s: f64| (s / policy.grid).round() as u64;
        let mut offsets = Vec::with_capacity(out.blocks.len());
        for b in out.blocks.iter() {
            let k = key(b.size);
            let rank = *ranks.entry((k, b.font.as_str())).or_insert_with(|| {
                let r = next_rank.entry(k).or_insert(0);
                let v = *r;
                *r += 1;
                v
            });
            offsets.push(rank as f64 * policy.epsilon);
        }
        for (b, off) in out.blocks.iter_mut().zip(offsets) {
            b.size += off;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn block(id: &str, size: f64, page: u32, bbox: BBox) -> Block {
        Block {
            id: id.to_string(),
            text: format!("text {id}"),
            font: "F1".to_string(),
            size,
            colour: [0, 0, 0],
            page,
            bbox,
            line_count: 1,
        }
    }

    fn doc(blocks: Vec<Block>) -> Document {
        let page_dims = infer_page_dims(&blocks);
        Document {
            doc_id: "t".into(),
            blocks,
            page_dims,
            gold: None,
        }
    }

    #[test]
    fn load_single_block_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("one.blocks.jsonl");
        std::fs::write(
            &p,
            r#"{"id":"b1","text":"Hello","font":"F","size":12.0,"color":[1,2,3],"page":1,"bbox":[10.0,10.0,100.0,20.0]}"#,
        )
        .unwrap();
        let d = load_document(&p).unwrap();
        assert_eq!(d.blocks.len(), 1);
        assert_eq!(d.blocks[0].id, "b1");
        assert_eq!(d.blocks[0].line_count, 1); // derived from text
        assert_eq!(d.doc_id, "one");
    }

    #[test]
    fn duplicate_id_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("dup.blocks.jsonl");
        let line = r#"{"id":"b1","text":"x","font":"F","size":12.0,"color":[0,0,0],"page":1,"bbox":[0.0,0.0,10.0,10.0]}"#;
        std::fs::write(&p, format!("{line}\n{line}\n")).unwrap();
        let err = load_document(&p).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }), "{err}");
        assert!(err.to_string().contains("duplicate block id b1"));
    }

    #[test]
    fn non_positive_size_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.blocks.jsonl");
        std::fs::write(
            &p,
            r#"{"id":"b1","text":"x","font":"F","size":0.0,"color":[0,0,0],"page":1,"bbox":[0.0,0.0,10.0,10.0]}"#,
        )
        .unwrap();
        assert!(matches!(
            load_document(&p).unwrap_err(),
            Error::Validation { .. }
        ));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mal.blocks.jsonl");
        let good = r#"{"id":"b1","text":"x","font":"F","size":12.0,"color":[0,0,0],"page":1,"bbox":[0.0,0.0,10.0,10.0]}"#;
        std::fs::write(&p, format!("{good}\n{{not json\n")).unwrap();
        match load_document(&p).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn load_save_identity_on_canonical_form() {
        // Round-trip oracle: a canonical 3-block fixture re-serializes
        // byte-for-byte.
        let blocks = vec![
            block("a", 14.0, 1, BBox::new(10.0, 10.0, 200.0, 30.0)),
            block("b", 10.5, 1, BBox::new(10.0, 40.0, 200.0, 90.0)),
            block("c", 10.5, 2, BBox::new(10.0, 10.0, 150.0, 60.0)),
        ];
        let canonical = blocks_to_jsonl(&blocks);
        let reparsed = parse_blocks("fixture", &canonical).unwrap();
        assert_eq!(reparsed, blocks);
        assert_eq!(blocks_to_jsonl(&reparsed), canonical);
    }

    #[test]
    fn bbox_overshoot_clamped_not_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("clamp.blocks.jsonl");
        std::fs::write(
            &p,
            r#"{"id":"b1","text":"x","font":"F","size":12.0,"color":[0,0,0],"page":1,"bbox":[-5.0,10.0,100.0,20.0]}"#,
        )
        .unwrap();
        std::fs::write(
            dir.path().join("clamp.pages.json"),
            r#"{"pages":[{"w":612.0,"h":792.0}]}"#,
        )
        .unwrap();
        let d = load_document(&p).unwrap();
        assert_eq!(d.blocks[0].bbox.x0, 0.0);
    }

    #[test]
    fn quantization_to_grid() {
        let d = doc(vec![
            block("a", 12.01, 1, BBox::new(0.0, 0.0, 10.0, 10.0)),
            block("b", 11.99, 1, BBox::new(0.0, 20.0, 10.0, 30.0)),
        ]);
        let n = normalize_sizes(&d, SizeNormPolicy::default());
        assert_eq!(n.blocks[0].size, 12.0);
        assert_eq!(n.blocks[1].size, 12.0);
        // original untouched
        assert_eq!(d.blocks[0].size, 12.01);
    }

    #[test]
    fn font_collision_gets_epsilon_offsets() {
        let mut a = block("a", 12.0, 1, BBox::new(0.0, 0.0, 10.0, 10.0));
        a.font = "A".into();
        let mut b = block("b", 12.0, 1, BBox::new(0.0, 20.0, 10.0, 30.0));
        b.font = "B".into();
        let d = doc(vec![a, b]);
        let n = normalize_sizes(&d, SizeNormPolicy::default());
        assert_eq!(n.blocks[0].size, 12.0); // first-appearance rank 0
        assert_eq!(n.blocks[1].size, 12.01);
    }

    #[test]
    fn no_two_fonts_share_a_final_size() {
        // 100 synthetic blocks over 3 fonts and a handful of raw sizes.
        let fonts = ["A", "B", "C"];
        let sizes = [9.9, 10.0, 10.1, 12.0, 14.05];
        let mut blocks = Vec::new();
        for i in 0..100 {
            let mut b = block(
                &format!("b{i}"),
                sizes[i % sizes.len()],
                1,
                BBox::new(0.0, i as f64 * 10.0, 10.0, i as f64 * 10.0 + 5.0),
            );
            b.font = fonts[i % fonts.len()].to_string();
            blocks.push(b);
        }
        let n = normalize_sizes(&doc(blocks), SizeNormPolicy::default());
        let mut size_to_font: HashMap<u64, &str> = HashMap::new();
        for b in &n.blocks {
            let key = (b.size * 1000.0).round() as u64;
            if let Some(f) = size_to_font.get(&key) {
                assert_eq!(*f, b.font.as_str(), "fonts collide on size {}", b.size);
            } else {
                size_to_font.insert(key, b.font.as_str());
            }
        }
    }

    #[test]
    fn normalize_is_idempotent() {
        let fonts = ["A", "B", "C"];
        let mut blocks = Vec::new();
        for i in 0..30 {
            let mut b = block(
                &format!("b{i}"),
                9.8 + (i % 7) as f64 * 0.37,
                1,
                BBox::new(0.0, i as f64 * 10.0, 10.0, i as f64 * 10.0 + 5.0),
            );
            b.font = fonts[i % fonts.len()].to_string();
            blocks.push(b);
        }
        let d = doc(blocks);
        let once = normalize_sizes(&d, SizeNormPolicy::default());
        let twice = normalize_sizes(&once, SizeNormPolicy::default());
        let s1: Vec<f64> = once.blocks.iter().map(|b| b.size).collect();
        let s2: Vec<f64> = twice.blocks.iter().map(|b| b.size).collect();
        assert_eq!(s1, s2);
    }

    #[test]
    fn normalize_preserves_order_within_font() {
        let mut blocks = Vec::new();
        for i in 0..40 {
            let raw = 6.0 + (i * 13 % 29) as f64 * 0.61;
            blocks.push(block(
                &format!("b{i}"),
                raw,
                1,
                BBox::new(0.0, i as f64 * 12.0, 10.0, i as f64 * 12.0 + 5.0),
            ));
        }
        let d = doc(blocks);
        let n = normalize_sizes(&d, SizeNormPolicy::default());
        for i in 0..d.blocks.len() {
            for j in 0..d.blocks.len() {
                if d.blocks[i].size < d.blocks[j].size {
                    assert!(n.blocks[i].size <= n.blocks[j].size);
                }
            }
        }
    }
}
