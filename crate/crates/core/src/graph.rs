//! Node-centric context graphs.
//!
//! For a tree node, BFS over {parent, children, adjacent siblings} up to
//! `n_d` hops yields the node set; edges are materialized in both directions
//! between every included pair that stands in a parent/child or
//! adjacent-sibling relation, typed from the target's perspective. The
//! pseudo root is never included (it carries no block features).

use serde::Serialize;

use crate::block::{Block, Document, PageDims};
use crate::error::{Error, Result};
use crate::tree::{DocTree, ROOT};

pub const NODE_FEATURE_DIM: usize = 19;
pub const EDGE_FEATURE_DIM: usize = 11;
/// Buckets for hashed font identity.
pub const FONT_BUCKETS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeType {
    /// Message from the target's parent.
    Parent,
    /// Message from one of the target's children.
    Child,
    /// Message from an adjacent sibling.
    Sibling,
}

#[derive(Debug, Clone, Serialize)]
pub struct Edge {
    /// Local index of the source node.
    pub src: usize,
    /// Local index of the target node.
    pub dst: usize,
    pub etype: EdgeType,
}

/// A node-centric subtree rendered as a typed, feature-bearing graph.
/// Local node indices follow the traversal sequence: the document reading
/// order restricted to the included nodes.
#[derive(Debug, Clone)]
pub struct ContextGraph {
    /// Tree node ids (1-based reading positions), strictly increasing.
    pub nodes: Vec<usize>,
    /// Local index of the center node.
    pub center: usize,
    pub edges: Vec<Edge>,
    /// Per-node feature vectors, `NODE_FEATURE_DIM` each.
    pub node_feats: Vec<Vec<f64>>,
    /// Per-edge feature vectors, `EDGE_FEATURE_DIM` each, aligned to `edges`.
    pub edge_feats: Vec<Vec<f64>>,
    /// Local indices of the center's preceding siblings present in the graph,
    /// in document order.
    pub center_preceding_siblings: Vec<usize>,
}

impl ContextGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// JSON debug dump: nodes (tree id, block id), typed edges, features.
    pub fn debug_json(&self, doc: &Document, tree: &DocTree) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = self
            .nodes
            .iter()
            .zip(&self.node_feats)
            .map(|(&n, f)| {
                serde_json::json!({
                    "node": n,
                    "block_id": tree.block(doc, n).id,
                    "features": f,
                })
            })
            .collect();
        let edges: Vec<serde_json::Value> = self
            .edges
            .iter()
            .zip(&self.edge_feats)
            .map(|(e, f)| {
                serde_json::json!({
                    "src": self.nodes[e.src],
                    "dst": self.nodes[e.dst],
                    "type": e.etype,
                    "features": f,
                })
            })
            .collect();
        serde_json::json!({
            "center": self.nodes[self.center],
            "nodes": nodes,
            "edges": edges,
        })
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn font_bucket(font: &str) -> usize {
    (fnv1a64(font.as_bytes()) % FONT_BUCKETS as u64) as usize
}

/// Raw node features: page (scaled by 1/100), hashed font identity as a
/// one-hot over 8 buckets, size (scaled by 1/10), RGB in [0,1], log line
/// count, log text length, and the bbox corners normalized by page dims.
pub fn node_features(block: &Block, page_dims: PageDims) -> Vec<f64> {
    let mut f = Vec::with_capacity(NODE_FEATURE_DIM);
    f.push(block.page as f64 / 100.0);
    let bucket = font_bucket(&block.font);
    for i in 0..FONT_BUCKETS {
        f.push(if i == bucket { 1.0 } else { 0.0 });
    }
    f.push(block.size / 10.0);
    for c in block.colour {
        f.push(c as f64 / 255.0);
    }
    f.push((1.0 + block.line_count as f64).ln());
    f.push((1.0 + block.text_length() as f64).ln());
    f.push(block.bbox.x0 / page_dims.w);
    f.push(block.bbox.y0 / page_dims.h);
    f.push(block.bbox.x1 / page_dims.w);
    f.push(block.bbox.y1 / page_dims.h);
    debug_assert_eq!(f.len(), NODE_FEATURE_DIM);
    f
}

/// Edge features for an edge from `src` to `dst`: type one-hot, size
/// difference, same-font and same-colour flags, page difference, and
/// per-coordinate bbox deltas (scaled by 1/1000). Differences are
/// source-minus-target, so they negate when the endpoints swap.
pub fn edge_features(src: &Block, dst: &Block, etype: EdgeType) -> Vec<f64> {
    let mut f = Vec::with_capacity(EDGE_FEATURE_DIM);
    f.push(if etype == EdgeType::Parent { 1.0 } else { 0.0 });
    f.push(if etype == EdgeType::Child { 1.0 } else { 0.0 });
    f.push(if etype == EdgeType::Sibling { 1.0 } else { 0.0 });
    f.push(src.size - dst.size);
    f.push(if src.font == dst.font { 1.0 } else { 0.0 });
    f.push(if src.colour == dst.colour { 1.0 } else { 0.0 });
    f.push(src.page as f64 - dst.page as f64);
    f.push((src.bbox.x0 - dst.bbox.x0) / 1000.0);
    f.push((src.bbox.y0 - dst.bbox.y0) / 1000.0);
    f.push((src.bbox.x1 - dst.bbox.x1) / 1000.0);
    f.push((src.bbox.y1 - dst.bbox.y1) / 1000.0);
    debug_assert_eq!(f.len(), EDGE_FEATURE_DIM);
    f
}

/// Neighbors for BFS: parent (unless pseudo root), children, and adjacent
/// siblings. Distant siblings are reachable through chains of adjacent
/// sibling hops.
fn neighbors(tree: &DocTree, node: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let p = tree.tree.parent(node);
    if p != ROOT {
        out.push(p);
    }
    out.extend(tree.tree.children(node));
    if let Some(pr) = tree.tree.preceding_sibling(node) {
        out.push(pr);
    }
    if let Some(su) = tree.tree.subsequent_sibling(node) {
        out.push(su);
    }
    out
}

/// Extract the node-centric subtree of `center` to at most `n_d` hops.
pub fn extract_subtree(doc: &Document, tree: &DocTree, center: usize, n_d: usize) -> Result<ContextGraph> {
    if center == ROOT || center > tree.len() {
        return Err(Error::UnknownNode(format!("tree node {center}")));
    }
    debug_assert!(n_d >= 1);

    // BFS over the neighbor relation.
    let mut dist = vec![usize::MAX; tree.len() + 1];
    dist[center] = 0;
    let mut queue = std::collections::VecDeque::from([center]);
    let mut included = vec![center];
    while let Some(u) = queue.pop_front() {
        if dist[u] == n_d {
            continue;
        }
        for v in neighbors(tree, u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                included.push(v);
                queue.push_back(v);
            }
        }
    }
    // Traversal sequence: reading order restricted to the node set. Node ids
    // are reading positions, so sorting suffices.
    included.sort_unstable();
    let local: std::collections::HashMap<usize, usize> =
        included.iter().enumerate().map(|(l, &n)| (n, l)).collect();

    // Edges between every included pair in a parent/child or adjacent-sibling
    // relation, both directions, typed from the target's perspective.
    let mut edges = Vec::new();
    for &u in &included {
        let p = tree.tree.parent(u);
        if p != ROOT {
            if let Some(&lp) = local.get(&p) {
                let lu = local[&u];
                edges.push(Edge { src: lp, dst: lu, etype: EdgeType::Parent });
                edges.push(Edge { src: lu, dst: lp, etype: EdgeType::Child });
            }
        }
        if let Some(pr) = tree.tree.preceding_sibling(u) {
            if let Some(&lpr) = local.get(&pr) {
                let lu = local[&u];
                edges.push(Edge { src: lpr, dst: lu, etype: EdgeType::Sibling });
                edges.push(Edge { src: lu, dst: lpr, etype: EdgeType::Sibling });
            }
        }
    }
    edges.sort_by_key(|e| (e.dst, e.src, e.etype as u8));
    edges.dedup_by_key(|e| (e.src, e.dst, e.etype));

    let node_feats: Vec<Vec<f64>> = included
        .iter()
        .map(|&n| {
            let b = tree.block(doc, n);
            node_features(b, doc.page_dims_of(b.page))
        })
        .collect();
    let edge_feats: Vec<Vec<f64>> = edges
        .iter()
        .map(|e| {
            let src = tree.block(doc, included[e.src]);
            let dst = tree.block(doc, included[e.dst]);
            edge_features(src, dst, e.etype)
        })
        .collect();

    let center_preceding_siblings: Vec<usize> = tree
        .tree
        .preceding_siblings(center)
        .iter()
        .filter_map(|s| local.get(s).copied())
        .collect();

    Ok(ContextGraph {
        center: local[&center],
        nodes: included,
        edges,
        node_feats,
        edge_feats,
        center_preceding_siblings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::{BBox, PageDims};
    use crate::order::OrderedBlocks;

    fn make_doc(sizes: &[f64]) -> (Document, DocTree) {
        let blocks: Vec<Block> = sizes
            .iter()
            .enumerate()
            .map(|(i, &s)| Block {
                id: format!("b{i}"),
                text: format!("block {i}"),
                font: "F".into(),
                size: s,
                colour: [0, 0, 0],
                page: 1,
                bbox: BBox::new(10.0, 20.0 * i as f64 + 10.0, 100.0, 20.0 * i as f64 + 25.0),
                line_count: 1,
            })
            .collect();
        let doc = Document {
            doc_id: "t".into(),
            blocks,
            page_dims: vec![PageDims { w: 612.0, h: 792.0 }],
            gold: None,
        };
        let ordered = OrderedBlocks {
            order: (0..doc.blocks.len()).collect(),
        };
        let tree = DocTree::build(&doc, &ordered);
        (doc, tree)
    }

    #[test]
    fn chain_center_reaches_parent_and_child() {
        // r -> a -> b -> c, center b, depth 1
        let (doc, tree) = make_doc(&[14.0, 12.0, 10.0]);
        let g = extract_subtree(&doc, &tree, 2, 1).unwrap();
        assert_eq!(g.nodes, vec![1, 2, 3]);
    }

    #[test]
    fn star_sibling_hops_respect_depth() {
        // r -> {a, b, c, d}; center a, depth 2: b is one sibling hop,
        // c two, d three.
        let (doc, tree) = make_doc(&[10.0, 10.0, 10.0, 10.0]);
        let g = extract_subtree(&doc, &tree, 1, 2).unwrap();
        assert_eq!(g.nodes, vec![1, 2, 3]);
    }

    #[test]
    fn bfs_matches_adjacency_oracle() {
        // Brute-force BFS over the explicit adjacency on a mixed tree.
        let sizes = [16.0, 12.0, 10.0, 10.0, 12.0, 10.0, 16.0, 12.0];
        let (doc, tree) = make_doc(&sizes);
        for center in 1..=sizes.len() {
            for n_d in 1..=3usize {
                let g = extract_subtree(&doc, &tree, center, n_d).unwrap();
                // oracle: repeated relaxation over neighbor sets
                let mut dist = vec![usize::MAX; sizes.len() + 1];
                dist[center] = 0;
                for _ in 0..n_d {
                    let mut next = dist.clone();
                    for u in 1..=sizes.len() {
                        if dist[u] == usize::MAX {
                            continue;
                        }
                        for v in neighbors(&tree, u) {
                            if next[v] == usize::MAX || next[v] > dist[u] + 1 {
                                next[v] = dist[u] + 1;
                            }
                        }
                    }
                    dist = next;
                }
                let mut expect: Vec<usize> =
                    (1..=sizes.len()).filter(|&n| dist[n] <= n_d).collect();
                expect.sort_unstable();
                assert_eq!(g.nodes, expect, "center {center} n_d {n_d}");
            }
        }
    }

    #[test]
    fn first_level_heading_sees_peers_and_children() {
        // Shape check: a first-level heading reaches other first-level
        // headings via sibling hops and its own children via child hops.
        let sizes = [16.0, 12.0, 12.0, 16.0, 12.0, 16.0, 16.0];
        let (doc, tree) = make_doc(&sizes);
        let g = extract_subtree(&doc, &tree, 1, 2).unwrap();
        // children 2,3 (child hop), sibling 4 (hop 1), sibling 6 (hop 2)
        assert!(g.nodes.contains(&2) && g.nodes.contains(&3));
        assert!(g.nodes.contains(&4) && g.nodes.contains(&6));
        assert!(!g.nodes.contains(&7), "third sibling is three hops away");
    }

    #[test]
    fn unknown_center_is_an_error() {
        let (doc, tree) = make_doc(&[10.0]);
        assert!(extract_subtree(&doc, &tree, 5, 1).is_err());
    }

    #[test]
    fn edges_are_symmetric_with_mirrored_types() {
        let sizes = [16.0, 12.0, 10.0, 12.0, 12.0];
        let (doc, tree) = make_doc(&sizes);
        let g = extract_subtree(&doc, &tree, 2, 2).unwrap();
        for e in &g.edges {
            let mirror = match e.etype {
                EdgeType::Parent => EdgeType::Child,
                EdgeType::Child => EdgeType::Parent,
                EdgeType::Sibling => EdgeType::Sibling,
            };
            assert!(
                g.edges
                    .iter()
                    .any(|m| m.src == e.dst && m.dst == e.src && m.etype == mirror),
                "missing mirror for {e:?}"
            );
        }
    }

    #[test]
    fn traversal_sequence_strictly_increasing() {
        let sizes = [16.0, 12.0, 10.0, 12.0, 12.0, 16.0, 12.0];
        let (doc, tree) = make_doc(&sizes);
        for center in 1..=sizes.len() {
            let g = extract_subtree(&doc, &tree, center, 2).unwrap();
            assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn neighborhood_is_local_not_document_sized() {
        // Long flat document: center deep inside sees 2*n_d sibling window,
        // not everything.
        let sizes = vec![10.0; 200];
        let (doc, tree) = make_doc(&sizes);
        let g = extract_subtree(&doc, &tree, 100, 2).unwrap();
        assert_eq!(g.nodes, vec![98, 99, 100, 101, 102]);
    }

    #[test]
    fn full_page_block_normalizes_to_unit_bbox() {
        let b = Block {
            id: "b".into(),
            text: String::new(),
            font: "F".into(),
            size: 12.0,
            colour: [255, 255, 255],
            page: 1,
            bbox: BBox::new(0.0, 0.0, 612.0, 792.0),
            line_count: 1,
        };
        let f = node_features(&b, PageDims { w: 612.0, h: 792.0 });
        assert_eq!(&f[NODE_FEATURE_DIM - 4..], &[0.0, 0.0, 1.0, 1.0]);
        // colour (255,255,255) -> (1,1,1)
        assert_eq!(&f[10..13], &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn node_features_match_hand_computed_reference() {
        let b = Block {
            id: "b".into(),
            text: "Hello\nWorld".into(),
            font: "Serif".into(),
            size: 14.0,
            colour: [0, 128, 255],
            page: 3,
            bbox: BBox::new(61.2, 79.2, 306.0, 396.0),
            line_count: 2,
        };
        let f = node_features(&b, PageDims { w: 612.0, h: 792.0 });
        let mut expect = vec![0.03];
        let bucket = font_bucket("Serif");
        for i in 0..FONT_BUCKETS {
            expect.push(if i == bucket { 1.0 } else { 0.0 });
        }
        expect.extend([1.4, 0.0, 128.0 / 255.0, 1.0]);
        expect.push(3.0f64.ln());
        expect.push(12.0f64.ln());
        expect.extend([0.1, 0.1, 0.5, 0.5]);
        assert_eq!(f.len(), expect.len());
        for (a, e) in f.iter().zip(&expect) {
            assert!((a - e).abs() < 1e-12, "{a} vs {e}");
        }
    }

    #[test]
    fn edge_features_self_comparison_is_zero_diff() {
        let (doc, _) = make_doc(&[12.0]);
        let b = &doc.blocks[0];
        let f = edge_features(b, b, EdgeType::Sibling);
        assert_eq!(f[3], 0.0); // size diff
        assert_eq!(f[4], 1.0); // same font
        assert_eq!(f[5], 1.0); // same colour
        assert!(f[6..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn edge_size_difference_is_source_minus_target() {
        let (doc, _) = make_doc(&[14.0, 12.0]);
        let f = edge_features(&doc.blocks[0], &doc.blocks[1], EdgeType::Parent);
        assert_eq!(f[3], 2.0);
    }

    #[test]
    fn edge_differences_antisymmetric() {
        let mut a = make_doc(&[12.0]).0.blocks[0].clone();
        let mut b = a.clone();
        a.page = 3;
        b.page = 40;
        b.id = "other".into();
        b.bbox = BBox::new(50.0, 60.0, 200.0, 90.0);
        let ab = edge_features(&a, &b, EdgeType::Sibling);
        let ba = edge_features(&b, &a, EdgeType::Sibling);
        assert_eq!(ab[6], -37.0);
        assert_eq!(ba[6], 37.0);
        for k in [3usize, 6, 7, 8, 9, 10] {
            assert!((ab[k] + ba[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn type_one_hot_sums_to_one() {
        let (doc, tree) = make_doc(&[16.0, 12.0, 12.0]);
        let g = extract_subtree(&doc, &tree, 2, 2).unwrap();
        for f in &g.edge_feats {
            assert_eq!(f[0] + f[1] + f[2], 1.0);
        }
    }
}
