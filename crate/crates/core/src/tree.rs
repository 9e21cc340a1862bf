//! Initial full tree over blocks, built from reading order and font sizes.
//!
//! Node `i` (1-based reading position) hangs under the nearest preceding
//! node with a strictly larger size, or under the pseudo root. The pseudo
//! root carries an infinite size sentinel so no special case is needed.

use crate::block::Document;
use crate::order::OrderedBlocks;

/// Pseudo-root node id.
pub const ROOT: usize = 0;

/// Rooted ordered tree over items 1..=n; node 0 is the pseudo root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    parent: Vec<usize>,
    children: Vec<Vec<usize>>,
}

impl Tree {
    fn with_capacity(n: usize) -> Self {
        Tree {
            parent: vec![ROOT; n + 1],
            children: vec![Vec::new(); n + 1],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parent of `node`; `ROOT` maps to itself.
    pub fn parent(&self, node: usize) -> usize {
        self.parent[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    /// Preceding sibling, if any.
    pub fn preceding_sibling(&self, node: usize) -> Option<usize> {
        if node == ROOT {
            return None;
        }
        let sibs = &self.children[self.parent[node]];
        let pos = sibs.iter().position(|&c| c == node)?;
        if pos > 0 {
            Some(sibs[pos - 1])
        } else {
            None
        }
    }

    /// Subsequent sibling, if any.
    pub fn subsequent_sibling(&self, node: usize) -> Option<usize> {
        if node == ROOT {
            return None;
        }
        let sibs = &self.children[self.parent[node]];
        let pos = sibs.iter().position(|&c| c == node)?;
        sibs.get(pos + 1).copied()
    }

    /// All preceding siblings in document order.
    pub fn preceding_siblings(&self, node: usize) -> &[usize] {
        if node == ROOT {
            return &[];
        }
        let sibs = &self.children[self.parent[node]];
        let pos = sibs.iter().position(|&c| c == node).unwrap_or(0);
        &sibs[..pos]
    }

    /// Pre-order traversal (excluding the pseudo root).
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack: Vec<usize> = self.children[ROOT].iter().rev().copied().collect();
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.children[n].iter().rev());
        }
        out
    }
}

/// Size of node `i` in a sequence with the pseudo-root sentinel at 0.
#[inline]
fn size_at(sizes: &[f64], node: usize) -> f64 {
    if node == ROOT {
        f64::INFINITY
    } else {
        sizes[node - 1]
    }
}

/// Largest j < i with `sizes[j] > sizes[i]` (1-based positions), else `ROOT`.
/// This is the literal backward scan; `build_tree` reproduces it in O(n).
pub fn nearest_larger_predecessor(sizes: &[f64], i: usize) -> usize {
    debug_assert!(i >= 1 && i <= sizes.len());
    let mut j = i - 1;
    while j >= 1 {
        if sizes[j - 1] > sizes[i - 1] {
            return j;
        }
        j -= 1;
    }
    ROOT
}

/// Reference construction: per-node backward scan, O(n^2). Kept as the test
/// oracle for the stack-based builder.
pub fn build_tree_reference(sizes: &[f64]) -> Tree {
    let n = sizes.len();
    let mut tree = Tree::with_capacity(n);
    for i in 1..=n {
        let p = nearest_larger_predecessor(sizes, i);
        tree.parent[i] = p;
        tree.children[p].push(i);
    }
    tree
}

/// Build the full tree with a monotonic size stack, O(n) amortized. Equal
/// sizes never create parent/child links: the comparison is strict.
pub fn build_tree(sizes: &[f64]) -> Tree {
    let n = sizes.len();
    let mut tree = Tree::with_capacity(n);
    let mut stack: Vec<usize> = vec![ROOT];
    for i in 1..=n {
        while size_at(sizes, *stack.last().unwrap()) <= size_at(sizes, i) {
            stack.pop();
        }
        let p = *stack.last().unwrap();
        tree.parent[i] = p;
        tree.children[p].push(i);
        stack.push(i);
    }
    tree
}

/// The full tree bound to a document's reading order. Node ids 1..=n are
/// reading positions; `order[id - 1]` indexes `Document::blocks`.
#[derive(Debug, Clone)]
pub struct DocTree {
    pub tree: Tree,
    pub order: Vec<usize>,
    pub sizes: Vec<f64>,
}

impl DocTree {
    pub fn build(doc: &Document, ordered: &OrderedBlocks) -> DocTree {
        let sizes: Vec<f64> = ordered.order.iter().map(|&i| doc.blocks[i].size).collect();
        DocTree {
            tree: build_tree(&sizes),
            order: ordered.order.clone(),
            sizes,
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Index into `Document::blocks` for tree node `node` (1-based).
    pub fn block_index(&self, node: usize) -> usize {
        self.order[node - 1]
    }

    pub fn block<'a>(&self, doc: &'a Document, node: usize) -> &'a crate::block::Block {
        &doc.blocks[self.block_index(node)]
    }

    /// Tree node id for a block id.
    pub fn node_of_block(&self, doc: &Document, block_id: &str) -> Option<usize> {
        self.order
            .iter()
            .position(|&i| doc.blocks[i].id == block_id)
            .map(|p| p + 1)
    }

    pub fn size_of(&self, node: usize) -> f64 {
        size_at(&self.sizes, node)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parents(t: &Tree) -> Vec<usize> {
        (1..=t.len()).map(|i| t.parent(i)).collect()
    }

    #[test]
    fn mixed_sizes_follow_algorithm_scan() {
        // sizes [10, 8, 8, 9]: x1 under root; x2, x3 under x1; x4 under x1
        // (nearest predecessor with size > 9 is x1). Expected parents come
        // from the reference scan.
        let sizes = [10.0, 8.0, 8.0, 9.0];
        let oracle = build_tree_reference(&sizes);
        assert_eq!(parents(&oracle), vec![ROOT, 1, 1, 1]);
        assert_eq!(build_tree(&sizes), oracle);
    }

    #[test]
    fn equal_sizes_all_under_root() {
        let sizes = [9.0, 9.0, 9.0];
        let t = build_tree(&sizes);
        assert_eq!(parents(&t), vec![ROOT, ROOT, ROOT]);
        assert_eq!(t.children(ROOT), &[1, 2, 3]);
    }

    #[test]
    fn decreasing_sizes_form_chain() {
        let sizes = [20.0, 14.0, 12.0];
        let t = build_tree(&sizes);
        assert_eq!(parents(&t), vec![ROOT, 1, 2]);
    }

    #[test]
    fn predecessor_of_first_is_root() {
        assert_eq!(nearest_larger_predecessor(&[9.0, 12.0, 9.0], 1), ROOT);
    }

    #[test]
    fn predecessor_strict_comparison() {
        assert_eq!(nearest_larger_predecessor(&[9.0, 12.0, 9.0], 3), 2);
    }

    #[test]
    fn sibling_accessors() {
        let t = build_tree(&[10.0, 8.0, 8.0, 8.0]);
        assert_eq!(t.preceding_sibling(3), Some(2));
        assert_eq!(t.subsequent_sibling(3), Some(4));
        assert_eq!(t.preceding_sibling(2), None);
        assert_eq!(t.preceding_siblings(4), &[2, 3]);
    }

    fn check_invariants(sizes: &[f64], t: &Tree) {
        // strictly decreasing sizes along every root-to-leaf path
        for i in 1..=t.len() {
            let p = t.parent(i);
            assert!(size_at(sizes, p) > size_at(sizes, i));
        }
        // pre-order equals reading order
        let pre = t.preorder();
        let expect: Vec<usize> = (1..=t.len()).collect();
        assert_eq!(pre, expect);
    }

    proptest! {
        #[test]
        fn stack_matches_reference(sizes in proptest::collection::vec(1u8..6, 0..120)) {
            let sizes: Vec<f64> = sizes.into_iter().map(|s| s as f64).collect();
            let fast = build_tree(&sizes);
            let slow = build_tree_reference(&sizes);
            prop_assert_eq!(&fast, &slow);
            check_invariants(&sizes, &fast);
        }

        #[test]
        fn predecessor_matches_bruteforce(sizes in proptest::collection::vec(1u8..8, 1..60)) {
            let sizes: Vec<f64> = sizes.into_iter().map(|s| s as f64).collect();
            for i in 1..=sizes.len() {
                let mut expect = ROOT;
                for j in (1..i).rev() {
                    if sizes[j - 1] > sizes[i - 1] {
                        expect = j;
                        break;
                    }
                }
                prop_assert_eq!(nearest_larger_predecessor(&sizes, i), expect);
            }
        }
    }
}
