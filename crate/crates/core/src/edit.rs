//! Ground-truth label derivation and tree modification.
//!
//! Every node gets one of three operations. Delete removes non-headings;
//! Move re-parents a lower-level heading under its preceding sibling (the
//! same-font-size sub-heading case); Keep leaves a heading in place.
//! Modification deletes first, rebuilds the tree over survivors from reading
//! order and font size, then applies moves in reading order.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::block::{Document, TocNode};
use crate::error::{Error, Result};
use crate::tree::{build_tree, DocTree, ROOT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpLabel {
    Keep,
    Delete,
    Move,
}

impl OpLabel {
    pub const ALL: [OpLabel; 3] = [OpLabel::Keep, OpLabel::Delete, OpLabel::Move];

    pub fn class_index(self) -> usize {
        match self {
            OpLabel::Keep => 0,
            OpLabel::Delete => 1,
            OpLabel::Move => 2,
        }
    }
}

/// Per-node labels aligned to tree node ids (1-based reading positions).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels {
    pub ops: Vec<OpLabel>,
}

impl Labels {
    pub fn get(&self, node: usize) -> OpLabel {
        self.ops[node - 1]
    }

    /// Map keyed by block id.
    pub fn by_block_id(&self, doc: &Document, tree: &DocTree) -> BTreeMap<String, OpLabel> {
        self.ops
            .iter()
            .enumerate()
            .map(|(i, &op)| (tree.block(doc, i + 1).id.clone(), op))
            .collect()
    }
}

fn gold_parent_ids(gold: &TocNode) -> HashMap<String, Option<String>> {
    fn walk(node: &TocNode, parent: Option<&str>, out: &mut HashMap<String, Option<String>>) {
        if let Some(id) = &node.id {
            out.insert(id.clone(), parent.map(str::to_string));
        }
        for c in &node.children {
            walk(c, node.id.as_deref(), out);
        }
    }
    let mut out = HashMap::new();
    walk(gold, None, &mut out);
    out
}

/// Derive per-node operation labels from the gold ToC.
///
/// Non-headings are Delete. A heading is Move when its gold parent appears
/// among its preceding siblings in the tree rebuilt over heading nodes only
/// (that placement is exactly what the Move repair can fix); all other
/// headings are Keep.
pub fn derive_labels(doc: &Document, tree: &DocTree, gold: &TocNode) -> Result<Labels> {
    let heading_ids: HashSet<&str> = gold.ids().into_iter().collect();
    let index = doc.block_index();
    let missing: Vec<String> = heading_ids
        .iter()
        .filter(|id| !index.contains_key(**id))
        .map(|s| s.to_string())
        .collect();
    if !missing.is_empty() {
        let mut ids = missing;
        ids.sort();
        return Err(Error::MissingGoldIds { ids });
    }

    let n = tree.len();
    let mut ops = vec![OpLabel::Delete; n];

    // heading nodes in reading order
    let heading_nodes: Vec<usize> = (1..=n)
        .filter(|&node| heading_ids.contains(tree.block(doc, node).id.as_str()))
        .collect();
    let heading_sizes: Vec<f64> = heading_nodes.iter().map(|&node| tree.size_of(node)).collect();
    let heading_tree = build_tree(&heading_sizes);

    let parents = gold_parent_ids(gold);
    for (hpos, &node) in heading_nodes.iter().enumerate() {
        let block_id = tree.block(doc, node).id.as_str();
        let gold_parent = parents.get(block_id).cloned().flatten();
        let mut op = OpLabel::Keep;
        if let Some(gp) = gold_parent {
            let hnode = hpos + 1; // 1-based in the heading tree
            let is_preceding_sibling = heading_tree
                .preceding_siblings(hnode)
                .iter()
                .any(|&s| tree.block(doc, heading_nodes[s - 1]).id == gp);
            if is_preceding_sibling {
                op = OpLabel::Move;
            }
        }
        ops[node - 1] = op;
    }
    Ok(Labels { ops })
}

/// Tiny-text policy applied before modification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TinyTextPolicy {
    /// Absolute threshold in points.
    Absolute(f64),
    /// Factor of the median block size of the document.
    RelativeToMedian(f64),
}

impl Default for TinyTextPolicy {
    fn default() -> Self {
        TinyTextPolicy::Absolute(6.0)
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Force Delete for blocks strictly below the size threshold.
pub fn drop_tiny_text(tree: &DocTree, labels: &Labels, policy: TinyTextPolicy) -> Labels {
    let threshold = match policy {
        TinyTextPolicy::Absolute(t) => t,
        TinyTextPolicy::RelativeToMedian(f) => {
            let mut sizes = tree.sizes.clone();
            sizes.sort_by(|a, b| a.partial_cmp(b).unwrap());
            f * median(&sizes)
        }
    };
    let mut out = labels.clone();
    for node in 1..=tree.len() {
        if tree.size_of(node) < threshold {
            out.ops[node - 1] = OpLabel::Delete;
        }
    }
    out
}

/// Apply the operations: delete, rebuild over survivors, then re-parent every
/// Move node under its preceding sibling, scanning survivors in reading
/// order. A Move with no preceding sibling at scan time stays in place.
pub fn modify_tree(doc: &Document, tree: &DocTree, labels: &Labels) -> TocNode {
    let survivors: Vec<usize> = (1..=tree.len())
        .filter(|&n| labels.get(n) != OpLabel::Delete)
        .collect();
    let sizes: Vec<f64> = survivors.iter().map(|&n| tree.size_of(n)).collect();
    let rebuilt = build_tree(&sizes);

    // mutable arena over survivor ids (1-based positions in `survivors`)
    let m = survivors.len();
    let mut parent: Vec<usize> = (0..=m).map(|i| if i == 0 { ROOT } else { rebuilt.parent(i) }).collect();
    let mut children: Vec<Vec<usize>> = (0..=m)
        .map(|i| rebuilt.children(i).to_vec())
        .collect();

    for s in 1..=m {
        if labels.get(survivors[s - 1]) != OpLabel::Move {
            continue;
        }
        let p = parent[s];
        let pos = children[p].iter().position(|&c| c == s).unwrap();
        if pos == 0 {
            continue; // no preceding sibling: degrade to keep-in-place
        }
        let new_parent = children[p][pos - 1];
        children[p].remove(pos);
        parent[s] = new_parent;
        children[new_parent].push(s);
    }

    fn emit(
        node: usize,
        children: &[Vec<usize>],
        survivors: &[usize],
        doc: &Document,
        tree: &DocTree,
    ) -> Vec<TocNode> {
        children[node]
            .iter()
            .map(|&c| {
                let block = tree.block(doc, survivors[c - 1]);
                TocNode {
                    id: Some(block.id.clone()),
                    text: block.text.clone(),
                    children: emit(c, children, survivors, doc, tree),
                }
            })
            .collect()
    }
    TocNode::root(emit(ROOT, &children, &survivors, doc, tree))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::{BBox, Block, PageDims};
    use crate::order::OrderedBlocks;

    fn make_doc(items: &[(&str, f64)]) -> (Document, DocTree) {
        let blocks: Vec<Block> = items
            .iter()
            .enumerate()
            .map(|(i, &(id, s))| Block {
                id: id.to_string(),
                text: format!("text {id}"),
                font: "F".into(),
                size: s,
                colour: [0, 0, 0],
                page: 1,
                bbox: BBox::new(10.0, 20.0 * i as f64 + 5.0, 100.0, 20.0 * i as f64 + 18.0),
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
    fn no_headings_means_all_delete() {
        let (doc, tree) = make_doc(&[("a", 12.0), ("b", 10.0), ("c", 10.0)]);
        let gold = TocNode::root(vec![]);
        let labels = derive_labels(&doc, &tree, &gold).unwrap();
        assert!(labels.ops.iter().all(|&op| op == OpLabel::Delete));
    }

    #[test]
    fn same_size_subheading_is_move() {
        // A sub-heading sharing the font size of its gold parent sits as its
        // sibling in the built tree and must be labeled Move.
        let (doc, tree) = make_doc(&[
            ("h32", 12.0),
            ("body1", 9.0),
            ("h321", 12.0),
            ("body2", 9.0),
        ]);
        let gold = TocNode::root(vec![TocNode {
            id: Some("h32".into()),
            text: "text h32".into(),
            children: vec![TocNode::leaf("h321", "text h321")],
        }]);
        let labels = derive_labels(&doc, &tree, &gold).unwrap();
        assert_eq!(labels.get(1), OpLabel::Keep);
        assert_eq!(labels.get(2), OpLabel::Delete);
        assert_eq!(labels.get(3), OpLabel::Move);
        assert_eq!(labels.get(4), OpLabel::Delete);

        let toc = modify_tree(&doc, &tree, &labels);
        assert_eq!(toc, gold);
    }

    #[test]
    fn missing_gold_id_lists_ids() {
        let (doc, tree) = make_doc(&[("a", 12.0)]);
        let gold = TocNode::root(vec![TocNode::leaf("ghost", "x")]);
        match derive_labels(&doc, &tree, &gold).unwrap_err() {
            Error::MissingGoldIds { ids } => assert_eq!(ids, vec!["ghost".to_string()]),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn all_keep_is_plain_rebuild() {
        let (doc, tree) = make_doc(&[("a", 14.0), ("b", 12.0), ("c", 12.0)]);
        let labels = Labels {
            ops: vec![OpLabel::Keep; 3],
        };
        let toc = modify_tree(&doc, &tree, &labels);
        assert_eq!(toc.children.len(), 1);
        assert_eq!(toc.children[0].children.len(), 2);
    }

    #[test]
    fn move_attaches_to_preceding_sibling() {
        let (doc, tree) = make_doc(&[("a", 12.0), ("b", 12.0)]);
        let labels = Labels {
            ops: vec![OpLabel::Keep, OpLabel::Move],
        };
        let toc = modify_tree(&doc, &tree, &labels);
        assert_eq!(toc.children.len(), 1);
        assert_eq!(toc.children[0].id.as_deref(), Some("a"));
        assert_eq!(toc.children[0].children[0].id.as_deref(), Some("b"));
    }

    #[test]
    fn move_without_preceding_sibling_stays() {
        let (doc, tree) = make_doc(&[("a", 12.0)]);
        let labels = Labels {
            ops: vec![OpLabel::Move],
        };
        let toc = modify_tree(&doc, &tree, &labels);
        assert_eq!(toc.children.len(), 1);
        assert!(toc.children[0].children.is_empty());
    }

    #[test]
    fn consecutive_moves_share_the_run_head() {
        // Same-size run h, m1, m2: both moves end up children of h because
        // scanning in reading order removes each moved node from the sibling
        // chain before the next is examined.
        let (doc, tree) = make_doc(&[("h", 12.0), ("m1", 12.0), ("m2", 12.0)]);
        let labels = Labels {
            ops: vec![OpLabel::Keep, OpLabel::Move, OpLabel::Move],
        };
        let toc = modify_tree(&doc, &tree, &labels);
        assert_eq!(toc.children.len(), 1);
        let h = &toc.children[0];
        let kids: Vec<&str> = h.children.iter().map(|c| c.id.as_deref().unwrap()).collect();
        assert_eq!(kids, vec!["m1", "m2"]);
    }

    #[test]
    fn modified_tree_never_contains_deleted_nodes() {
        let (doc, tree) = make_doc(&[("a", 14.0), ("b", 9.0), ("c", 12.0), ("d", 9.0)]);
        let labels = Labels {
            ops: vec![OpLabel::Keep, OpLabel::Delete, OpLabel::Keep, OpLabel::Delete],
        };
        let toc = modify_tree(&doc, &tree, &labels);
        let ids = toc.ids();
        assert!(!ids.contains(&"b") && !ids.contains(&"d"));
    }

    #[test]
    fn move_handling_is_local() {
        // Changing labels of nodes after x never changes where x lands.
        let (doc, tree) = make_doc(&[("a", 12.0), ("x", 12.0), ("y", 12.0)]);
        let base = Labels {
            ops: vec![OpLabel::Keep, OpLabel::Move, OpLabel::Keep],
        };
        let alt = Labels {
            ops: vec![OpLabel::Keep, OpLabel::Move, OpLabel::Move],
        };
        let find_parent = |toc: &TocNode| -> Option<String> {
            fn walk(n: &TocNode, target: &str, parent: Option<&str>) -> Option<Option<String>> {
                if n.id.as_deref() == Some(target) {
                    return Some(parent.map(str::to_string));
                }
                for c in &n.children {
                    if let Some(found) = walk(c, target, n.id.as_deref()) {
                        return Some(found);
                    }
                }
                None
            }
            walk(toc, "x", None).unwrap()
        };
        let p1 = find_parent(&modify_tree(&doc, &tree, &base));
        let p2 = find_parent(&modify_tree(&doc, &tree, &alt));
        assert_eq!(p1, p2);
    }

    #[test]
    fn tiny_text_forced_delete() {
        let (doc, tree) = make_doc(&[("a", 12.0), ("tiny", 3.0)]);
        let labels = Labels {
            ops: vec![OpLabel::Keep, OpLabel::Keep],
        };
        let out = drop_tiny_text(&tree, &labels, TinyTextPolicy::default());
        assert_eq!(out.get(1), OpLabel::Keep);
        assert_eq!(out.get(2), OpLabel::Delete);
        let _ = doc;
    }

    #[test]
    fn tiny_text_noop_above_threshold() {
        let (_, tree) = make_doc(&[("a", 12.0), ("b", 8.0)]);
        let labels = Labels {
            ops: vec![OpLabel::Keep, OpLabel::Delete],
        };
        let out = drop_tiny_text(&tree, &labels, TinyTextPolicy::default());
        assert_eq!(out, labels);
    }

    #[test]
    fn tiny_text_relative_mode() {
        // median 10, factor 0.8: strictly below 8 is deleted
        let (_, tree) = make_doc(&[("a", 10.0), ("b", 10.0), ("c", 10.0), ("d", 7.9), ("e", 8.0)]);
        let labels = Labels {
            ops: vec![OpLabel::Keep; 5],
        };
        let out = drop_tiny_text(&tree, &labels, TinyTextPolicy::RelativeToMedian(0.8));
        assert_eq!(out.get(4), OpLabel::Delete);
        assert_eq!(out.get(5), OpLabel::Keep);
    }

    #[test]
    fn reading_order_preserved_in_output_preorder() {
        let (doc, tree) = make_doc(&[("a", 14.0), ("b", 12.0), ("c", 12.0), ("d", 13.0)]);
        let labels = Labels {
            ops: vec![OpLabel::Keep; 4],
        };
        let toc = modify_tree(&doc, &tree, &labels);
        let ids = toc.ids();
        assert_eq!(ids, vec!["a", "b", "c", "d"]);
    }
}
