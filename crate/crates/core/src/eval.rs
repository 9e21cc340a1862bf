//! Evaluation: ordered-tree edit distance, TEDS, heading-detection F1, and
//! assumption-violation statistics.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::block::{Document, TocNode};
use crate::order::OrderedBlocks;

/// Flattened ordered tree for the edit-distance routines. Node 0 is the
/// pseudo root with a reserved label that always matches the other root.
struct FlatTree {
    /// Post-order labels.
    labels: Vec<String>,
    /// Leftmost leaf descendant per post-order node.
    lmld: Vec<usize>,
    /// Key roots in increasing post-order.
    keyroots: Vec<usize>,
    n: usize,
}

const ROOT_LABEL: &str = "\u{0}root";

fn flatten(t: &TocNode) -> FlatTree {
    // post-order walk
    fn walk(node: &TocNode, labels: &mut Vec<String>, lmld: &mut Vec<usize>) -> usize {
        let mut first_leaf = usize::MAX;
        for c in &node.children {
            let leaf = walk(c, labels, lmld);
            if first_leaf == usize::MAX {
                first_leaf = leaf;
            }
        }
        labels.push(node.text.clone());
        let me = labels.len() - 1;
        let leaf = if first_leaf == usize::MAX { me } else { first_leaf };
        lmld.push(leaf);
        leaf
    }
    let mut labels = Vec::new();
    let mut lmld = Vec::new();
    walk(t, &mut labels, &mut lmld);
    // the root is the final post-order node; give it the reserved label
    let n = labels.len();
    labels[n - 1] = ROOT_LABEL.to_string();
    let mut keyroots = Vec::new();
    for i in 0..n {
        let is_keyroot = (i + 1..n).all(|j| lmld[j] != lmld[i]);
        if is_keyroot {
            keyroots.push(i);
        }
    }
    FlatTree {
        labels,
        lmld,
        keyroots,
        n,
    }
}

/// Exact ordered-tree edit distance with unit costs (insert, delete, rename).
/// Both inputs include their pseudo roots, whose labels always match.
pub fn tree_edit_distance(t1: &TocNode, t2: &TocNode) -> u64 {
    let a = flatten(t1);
    let b = flatten(t2);
    let (n, m) = (a.n, b.n);
    let mut td = vec![vec![0u64; m]; n];
    let mut fd = vec![vec![0u64; m + 1]; n + 1];

    for &i in &a.keyroots {
        for &j in &b.keyroots {
            // forest distance over sub-forests rooted at keyroots i, j
            let li = a.lmld[i];
            let lj = b.lmld[j];
            fd[li][lj] = 0;
            for x in li..=i {
                fd[x + 1][lj] = fd[x][lj] + 1;
            }
            for y in lj..=j {
                fd[li][y + 1] = fd[li][y] + 1;
            }
            for x in li..=i {
                for y in lj..=j {
                    if a.lmld[x] == li && b.lmld[y] == lj {
                        let rename = if a.labels[x] == b.labels[y] { 0 } else { 1 };
                        let d = (fd[x][y + 1] + 1)
                            .min(fd[x + 1][y] + 1)
                            .min(fd[x][y] + rename);
                        fd[x + 1][y + 1] = d;
                        td[x][y] = d;
                    } else {
                        let d = (fd[x][y + 1] + 1)
                            .min(fd[x + 1][y] + 1)
                            .min(fd[a.lmld[x]][b.lmld[y]] + td[x][y]);
                        fd[x + 1][y + 1] = d;
                    }
                }
            }
        }
    }
    td[n - 1][m - 1]
}

/// Brute-force minimum edit cost by enumerating every valid mapping between
/// the two trees (one-to-one, ancestor- and order-preserving). Exponential;
/// reserved for small oracle inputs.
pub fn tree_edit_distance_bruteforce(t1: &TocNode, t2: &TocNode) -> u64 {
    struct Info {
        labels: Vec<String>,
        // preorder intervals: node i covers descendants (i..end[i])
        end: Vec<usize>,
    }
    fn collect(t: &TocNode, labels: &mut Vec<String>, end: &mut Vec<usize>, is_root: bool) {
        let me = labels.len();
        labels.push(if is_root {
            ROOT_LABEL.to_string()
        } else {
            t.text.clone()
        });
        end.push(0);
        for c in &t.children {
            collect(c, labels, end, false);
        }
        end[me] = labels.len();
    }
    let mut a = Info {
        labels: Vec::new(),
        end: Vec::new(),
    };
    collect(t1, &mut a.labels, &mut a.end, true);
    let mut b = Info {
        labels: Vec::new(),
        end: Vec::new(),
    };
    collect(t2, &mut b.labels, &mut b.end, true);

    let is_ancestor = |info: &Info, x: usize, y: usize| x < y && y < info.end[x];

    // Search over mappings in preorder of tree a; prune on cost.
    fn search(
        i: usize,
        a: &Info,
        b: &Info,
        mapping: &mut Vec<(usize, usize)>,
        used_b: &mut Vec<bool>,
        cost_so_far: u64,
        best: &mut u64,
        is_anc_a: &dyn Fn(usize, usize) -> bool,
        is_anc_b: &dyn Fn(usize, usize) -> bool,
    ) {
        let n = a.labels.len();
        let m = b.labels.len();
        if cost_so_far >= *best {
            return;
        }
        if i == n {
            let unmapped_b = m - mapping.len();
            let total = cost_so_far + unmapped_b as u64;
            if total < *best {
                *best = total;
            }
            return;
        }
        // delete a[i]
        search(
            i + 1,
            a,
            b,
            mapping,
            used_b,
            cost_so_far + 1,
            best,
            is_anc_a,
            is_anc_b,
        );
        // map a[i] to some unused b[j] preserving order and ancestry
        for j in 0..m {
            if used_b[j] {
                continue;
            }
            let ok = mapping.iter().all(|&(x, y)| {
                (x < i) == (y < j)
                    && is_anc_a(x, i) == is_anc_b(y, j)
                    && is_anc_a(i, x) == is_anc_b(j, y)
            });
            if !ok {
                continue;
            }
            let rename = if a.labels[i] == b.labels[j] { 0 } else { 1 };
            mapping.push((i, j));
            used_b[j] = true;
            search(
                i + 1,
                a,
                b,
                mapping,
                used_b,
                cost_so_far + rename,
                best,
                is_anc_a,
                is_anc_b,
            );
            used_b[j] = false;
            mapping.pop();
        }
    }

    let mut best = (a.labels.len() + b.labels.len()) as u64;
    let mut mapping = Vec::new();
    let mut used = vec![false; b.labels.len()];
    let anc_a = |x: usize, y: usize| is_ancestor(&a, x, y);
    let anc_b = |x: usize, y: usize| is_ancestor(&b, x, y);
    search(
        0,
        &a,
        &b,
        &mut mapping,
        &mut used,
        0,
        &mut best,
        &anc_a,
        &anc_b,
    );
    best
}

/// Tree-edit-distance similarity: `1 - TED / max(|pred|, |gold|)`, sizes
/// counted without the pseudo roots. Two root-only trees compare as 1.0.
pub fn teds(pred: &TocNode, gold: &TocNode) -> f64 {
    let np = pred.size();
    let ng = gold.size();
    if np == 0 && ng == 0 {
        return 1.0;
    }
    let ted = tree_edit_distance(pred, gold);
    1.0 - ted as f64 / np.max(ng) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

/// Set-based precision/recall/F1 over predicted vs gold heading block ids.
pub fn heading_f1(pred: &HashSet<String>, gold: &HashSet<String>) -> PrecisionRecall {
    let tp = pred.intersection(gold).count() as u64;
    let fp = pred.len() as u64 - tp;
    let fn_ = gold.len() as u64 - tp;
    let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
    let recall = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    PrecisionRecall {
        precision,
        recall,
        f1,
        tp,
        fp,
        fn_,
    }
}

/// Micro-averaged corpus F1 from per-document counts.
pub fn micro_f1(per_doc: &[PrecisionRecall]) -> PrecisionRecall {
    let tp: u64 = per_doc.iter().map(|p| p.tp).sum();
    let fp: u64 = per_doc.iter().map(|p| p.fp).sum();
    let fn_: u64 = per_doc.iter().map(|p| p.fn_).sum();
    let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
    let recall = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    PrecisionRecall {
        precision,
        recall,
        f1,
        tp,
        fp,
        fn_,
    }
}

/// Per-heading assumption-violation flags.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadingFlags {
    pub a1: bool,
    pub a2: bool,
    pub a3: bool,
}

impl HeadingFlags {
    pub fn any(&self) -> bool {
        self.a1 || self.a2 || self.a3
    }
}

/// Aggregate violation percentages over all gold headings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationStats {
    pub total_headings: usize,
    pub a1_pct: f64,
    pub a2_pct: f64,
    pub a3_pct: f64,
    pub any_pct: f64,
}

/// Audit one document's gold headings against the three assumptions:
/// A1 — the heading is read before every gold descendant;
/// A2 — no gold descendant has a strictly larger (quantized) size;
/// A3 — same-parent heading groups share one size. In a mixed group the
/// headings off the group's modal size are the offenders; when no unique
/// mode exists every member of the group is counted.
///
/// Sizes should be quantized (see `normalize_sizes`) before auditing.
pub fn audit_document(
    doc: &Document,
    gold: &TocNode,
    ordered: &OrderedBlocks,
) -> BTreeMap<String, HeadingFlags> {
    let mut pos: HashMap<&str, usize> = HashMap::new();
    for (p, &bi) in ordered.order.iter().enumerate() {
        pos.insert(doc.blocks[bi].id.as_str(), p);
    }
    let size: HashMap<&str, f64> = doc
        .blocks
        .iter()
        .map(|b| (b.id.as_str(), b.size))
        .collect();

    let mut flags: BTreeMap<String, HeadingFlags> = BTreeMap::new();

    // walk the gold tree
    fn walk<'a>(
        node: &'a TocNode,
        pos: &HashMap<&str, usize>,
        size: &HashMap<&str, f64>,
        flags: &mut BTreeMap<String, HeadingFlags>,
    ) -> (Option<usize>, f64) {
        // returns (min position, max size) over this subtree's headings
        let mut min_desc_pos: Option<usize> = None;
        let mut max_desc_size: f64 = f64::NEG_INFINITY;
        for c in &node.children {
            let (p, s) = walk(c, pos, size, flags);
            if let Some(p) = p {
                min_desc_pos = Some(min_desc_pos.map_or(p, |m: usize| m.min(p)));
            }
            max_desc_size = max_desc_size.max(s);
        }
        let Some(id) = node.id.as_deref() else {
            return (min_desc_pos, max_desc_size);
        };
        let my_pos = pos.get(id).copied();
        let my_size = size.get(id).copied().unwrap_or(0.0);
        let entry = flags.entry(id.to_string()).or_default();
        if let (Some(mp), Some(dp)) = (my_pos, min_desc_pos) {
            if dp < mp {
                entry.a1 = true;
            }
        }
        if max_desc_size > my_size {
            entry.a2 = true;
        }
        let min_pos = match (my_pos, min_desc_pos) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        (min_pos, my_size.max(max_desc_size))
    }
    walk(gold, &pos, &size, &mut flags);

    // A3 over same-parent sibling groups
    fn groups<'a>(node: &'a TocNode, out: &mut Vec<Vec<&'a str>>) {
        let group: Vec<&str> = node
            .children
            .iter()
            .filter_map(|c| c.id.as_deref())
            .collect();
        if group.len() >= 2 {
            out.push(group);
        }
        for c in &node.children {
            groups(c, out);
        }
    }
    let mut sibling_groups = Vec::new();
    groups(gold, &mut sibling_groups);
    for group in sibling_groups {
        let sizes: Vec<f64> = group
            .iter()
            .map(|id| size.get(id).copied().unwrap_or(0.0))
            .collect();
        let key = |s: f64| (s * 1e6).round() as i64;
        let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
        for &s in &sizes {
            *counts.entry(key(s)).or_insert(0) += 1;
        }
        if counts.len() <= 1 {
            continue; // uniform
        }
        let max_count = counts.values().copied().max().unwrap();
        let modal: Vec<i64> = counts
            .iter()
            .filter(|(_, &c)| c == max_count)
            .map(|(&k, _)| k)
            .collect();
        for (id, &s) in group.iter().zip(&sizes) {
            let offender = if modal.len() > 1 {
                true // no unique mode: count the whole group
            } else {
                key(s) != modal[0]
            };
            if offender {
                flags.entry(id.to_string()).or_default().a3 = true;
            }
        }
    }

    flags
}

/// Percentages over all gold headings of the given documents.
pub fn assumption_stats(per_doc_flags: &[BTreeMap<String, HeadingFlags>]) -> ViolationStats {
    let mut total = 0usize;
    let (mut a1, mut a2, mut a3, mut any) = (0usize, 0usize, 0usize, 0usize);
    for flags in per_doc_flags {
        for f in flags.values() {
            total += 1;
            if f.a1 {
                a1 += 1;
            }
            if f.a2 {
                a2 += 1;
            }
            if f.a3 {
                a3 += 1;
            }
            if f.any() {
                any += 1;
            }
        }
    }
    let pct = |c: usize| {
        if total == 0 {
            0.0
        } else {
            100.0 * c as f64 / total as f64
        }
    };
    ViolationStats {
        total_headings: total,
        a1_pct: pct(a1),
        a2_pct: pct(a2),
        a3_pct: pct(a3),
        any_pct: pct(any),
    }
}
