//! Reading order via recursive XY-cut.
//!
//! Pages are segmented by whitespace gaps in the axis projections of block
//! bounding boxes: horizontal bands first (headers and footers split before
//! columns), then columns, recursing until no gap of at least the threshold
//! remains; leaves sort by (y0, x0, id).

use crate::block::{Block, Document};

/// Recursion guard for degenerate adversarial layouts.
const MAX_DEPTH: u32 = 32;

/// A permutation of a document's blocks in reading order. Indices refer to
/// `Document::blocks`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedBlocks {
    pub order: Vec<usize>,
}

impl OrderedBlocks {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn blocks<'a>(&'a self, doc: &'a Document) -> impl Iterator<Item = &'a Block> + 'a {
        self.order.iter().map(|&i| &doc.blocks[i])
    }
}

/// Maximal whitespace gaps of length >= `threshold` between the union of
/// projected intervals. Returns split coordinates (gap midpoints).
fn projection_gaps(intervals: &mut Vec<(f64, f64)>, threshold: f64) -> Vec<f64> {
    intervals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut cuts = Vec::new();
    let mut cur_end = f64::NEG_INFINITY;
    for &(lo, hi) in intervals.iter() {
        if cur_end != f64::NEG_INFINITY && lo - cur_end >= threshold && lo > cur_end {
            cuts.push((cur_end + lo) / 2.0);
        }
        cur_end = cur_end.max(hi);
    }
    cuts
}

fn leaf_sort(blocks: &[Block], idxs: &mut [usize]) {
    idxs.sort_by(|&a, &b| {
        let (ba, bb) = (&blocks[a], &blocks[b]);
        ba.bbox
            .y0
            .partial_cmp(&bb.bbox.y0)
            .unwrap()
            .then(ba.bbox.x0.partial_cmp(&bb.bbox.x0).unwrap())
            .then(ba.id.cmp(&bb.id))
    });
}

fn cut_recursive(blocks: &[Block], idxs: Vec<usize>, threshold: f64, depth: u32, out: &mut Vec<usize>) {
    if idxs.len() <= 1 {
        out.extend(idxs);
        return;
    }
    if depth >= MAX_DEPTH {
        let mut idxs = idxs;
        leaf_sort(blocks, &mut idxs);
        out.extend(idxs);
        return;
    }

    // horizontal bands first
    let mut ys: Vec<(f64, f64)> = idxs.iter().map(|&i| (blocks[i].bbox.y0, blocks[i].bbox.y1)).collect();
    let y_cuts = projection_gaps(&mut ys, threshold);
    if !y_cuts.is_empty() {
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); y_cuts.len() + 1];
        for &i in &idxs {
            let y = blocks[i].bbox.y0;
            let g = y_cuts.partition_point(|&c| c < y);
            groups[g].push(i);
        }
        for g in groups {
            if !g.is_empty() {
                cut_recursive(blocks, g, threshold, depth + 1, out);
            }
        }
        return;
    }

    // then columns
    let mut xs: Vec<(f64, f64)> = idxs.iter().map(|&i| (blocks[i].bbox.x0, blocks[i].bbox.x1)).collect();
    let x_cuts = projection_gaps(&mut xs, threshold);
    if !x_cuts.is_empty() {
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); x_cuts.len() + 1];
        for &i in &idxs {
            let x = blocks[i].bbox.x0;
            let g = x_cuts.partition_point(|&c| c < x);
            groups[g].push(i);
        }
        for g in groups {
            if !g.is_empty() {
                cut_recursive(blocks, g, threshold, depth + 1, out);
            }
        }
        return;
    }

    let mut idxs = idxs;
    leaf_sort(blocks, &mut idxs);
    out.extend(idxs);
}

/// Order the blocks of a single page. Returns a permutation of `0..blocks.len()`.
pub fn xy_cut(blocks: &[Block], gap_threshold: f64) -> Vec<usize> {
    debug_assert!(gap_threshold >= 0.0);
    let idxs: Vec<usize> = (0..blocks.len()).collect();
    let mut out = Vec::with_capacity(blocks.len());
    cut_recursive(blocks, idxs, gap_threshold, 0, &mut out);
    out
}

/// Reading order for a whole document: per-page XY-cut concatenated in
/// ascending page order.
pub fn order_document(doc: &Document, gap_threshold: f64) -> OrderedBlocks {
    let mut pages: Vec<u32> = doc.blocks.iter().map(|b| b.page).collect();
    pages.sort_unstable();
    pages.dedup();

    let mut order = Vec::with_capacity(doc.blocks.len());
    for page in pages {
        let page_idxs: Vec<usize> = (0..doc.blocks.len())
            .filter(|&i| doc.blocks[i].page == page)
            .collect();
        let page_blocks: Vec<Block> = page_idxs.iter().map(|&i| doc.blocks[i].clone()).collect();
        let perm = xy_cut(&page_blocks, gap_threshold);
        order.extend(perm.into_iter().map(|p| page_idxs[p]));
    }
    OrderedBlocks { order }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::{BBox, Document, PageDims};
    use proptest::prelude::*;

    fn block(id: &str, page: u32, bbox: BBox) -> Block {
        Block {
            id: id.to_string(),
            text: String::new(),
            font: "F".into(),
            size: 10.0,
            colour: [0, 0, 0],
            page,
            bbox,
            line_count: 1,
        }
    }

    fn doc(blocks: Vec<Block>) -> Document {
        let pages = blocks.iter().map(|b| b.page).max().unwrap_or(1);
        Document {
            doc_id: "t".into(),
            blocks,
            page_dims: vec![PageDims { w: 612.0, h: 792.0 }; pages as usize],
            gold: None,
        }
    }

    #[test]
    fn vertical_stack_top_first() {
        let blocks = vec![
            block("b", 1, BBox::new(10.0, 30.0, 100.0, 40.0)),
            block("a", 1, BBox::new(10.0, 10.0, 100.0, 20.0)),
        ];
        assert_eq!(xy_cut(&blocks, 4.0), vec![1, 0]);
    }

    #[test]
    fn single_block_identity() {
        let blocks = vec![block("a", 1, BBox::new(10.0, 10.0, 100.0, 20.0))];
        assert_eq!(xy_cut(&blocks, 4.0), vec![0]);
    }

    #[test]
    fn empty_input_empty_output() {
        assert!(xy_cut(&[], 4.0).is_empty());
    }

    #[test]
    fn two_columns_left_before_right() {
        // Left column x in [0,200], right in [300,500]; staggered y so no
        // y-gap spans the page. Brute-force check: every left id precedes
        // every right id.
        let mut blocks = Vec::new();
        for i in 0..6 {
            blocks.push(block(
                &format!("l{i}"),
                1,
                BBox::new(0.0, 10.0 + 60.0 * i as f64, 200.0, 50.0 + 60.0 * i as f64),
            ));
            blocks.push(block(
                &format!("r{i}"),
                1,
                BBox::new(300.0, 40.0 + 60.0 * i as f64, 500.0, 80.0 + 60.0 * i as f64),
            ));
        }
        let perm = xy_cut(&blocks, 4.0);
        let pos = |id: &str| perm.iter().position(|&p| blocks[p].id == id).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!(
                    pos(&format!("l{i}")) < pos(&format!("r{j}")),
                    "left {i} must precede right {j}"
                );
            }
        }
    }

    #[test]
    fn pages_concatenate_in_order() {
        let d = doc(vec![
            block("p2", 2, BBox::new(10.0, 10.0, 100.0, 20.0)),
            block("p1", 1, BBox::new(10.0, 10.0, 100.0, 20.0)),
        ]);
        let ord = order_document(&d, 4.0);
        let ids: Vec<&str> = ord.blocks(&d).map(|b| b.id.as_str()).collect();
        assert_eq!(ids, vec!["p1", "p2"]);
    }

    #[test]
    fn single_column_matches_sort_oracle() {
        // Closed-form oracle for single-column layouts: (page, y0, x0).
        let mut blocks = Vec::new();
        let mut k = 0;
        for page in 1..=3u32 {
            for row in 0..10 {
                blocks.push(block(
                    &format!("b{k}"),
                    page,
                    BBox::new(50.0, 30.0 * row as f64, 400.0, 30.0 * row as f64 + 20.0),
                ));
                k += 1;
            }
        }
        // scramble input order deterministically
        blocks.reverse();
        let d = doc(blocks);
        let ord = order_document(&d, 4.0);
        let mut oracle: Vec<usize> = (0..d.blocks.len()).collect();
        oracle.sort_by(|&a, &b| {
            let (ba, bb) = (&d.blocks[a], &d.blocks[b]);
            ba.page
                .cmp(&bb.page)
                .then(ba.bbox.y0.partial_cmp(&bb.bbox.y0).unwrap())
                .then(ba.bbox.x0.partial_cmp(&bb.bbox.x0).unwrap())
        });
        assert_eq!(ord.order, oracle);
    }

    proptest! {
        #[test]
        fn output_is_permutation(coords in proptest::collection::vec((0.0f64..500.0, 0.0f64..700.0), 0..40)) {
            let blocks: Vec<Block> = coords
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| block(&format!("b{i}"), 1, BBox::new(x, y, x + 30.0, y + 12.0)))
                .collect();
            let mut perm = xy_cut(&blocks, 4.0);
            perm.sort_unstable();
            let expect: Vec<usize> = (0..blocks.len()).collect();
            prop_assert_eq!(perm, expect);
        }

        #[test]
        fn translation_invariance(
            coords in proptest::collection::vec((0.0f64..500.0, 0.0f64..700.0), 1..25),
            dx in -50.0f64..50.0,
            dy in -50.0f64..50.0,
        ) {
            let make = |shift: (f64, f64)| -> Vec<Block> {
                coords
                    .iter()
                    .enumerate()
                    .map(|(i, &(x, y))| {
                        block(
                            &format!("b{i}"),
                            1,
                            BBox::new(x + shift.0, y + shift.1, x + shift.0 + 30.0, y + shift.1 + 12.0),
                        )
                    })
                    .collect()
            };
            let base = xy_cut(&make((0.0, 0.0)), 4.0);
            let shifted = xy_cut(&make((dx, dy)), 4.0);
            prop_assert_eq!(base, shifted);
        }

        #[test]
        fn pairwise_overlap_falls_back_to_leaf_sort(
            offsets in proptest::collection::vec((0.0f64..5.0, 0.0f64..5.0), 2..12)
        ) {
            // Blocks share a large common region, so both projections overlap
            // pairwise and no gap exists.
            let blocks: Vec<Block> = offsets
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| block(&format!("b{i:02}"), 1, BBox::new(x, y, x + 100.0, y + 100.0)))
                .collect();
            let perm = xy_cut(&blocks, 4.0);
            let mut oracle: Vec<usize> = (0..blocks.len()).collect();
            oracle.sort_by(|&a, &b| {
                let (ba, bb) = (&blocks[a], &blocks[b]);
                ba.bbox.y0.partial_cmp(&bb.bbox.y0).unwrap()
                    .then(ba.bbox.x0.partial_cmp(&bb.bbox.x0).unwrap())
                    .then(ba.id.cmp(&bb.id))
            });
            prop_assert_eq!(perm, oracle);
        }
    }
}
