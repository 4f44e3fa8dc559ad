//! Frequency-annotated prefix trie over visited architecture sequences.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::trace::TraceEvent;

#[derive(Debug, Clone, PartialEq)]
pub struct TrieNode {
    /// Number of choices on the path from the root; the root has depth 0.
    pub depth: usize,
    /// Choice taken at `depth - 1`; `None` for the root.
    pub choice: Option<u32>,
    pub count: u64,
    pub fraction: f64,
    /// Events whose transferred prefix covers this node.
    pub transfers: u64,
    /// Sequences ending exactly here (the depth limit or full length).
    pub terminal: u64,
    /// Count carried by children removed by pruning.
    pub pruned: u64,
    pub children: BTreeMap<u32, TrieNode>,
}

impl TrieNode {
    fn new(depth: usize, choice: Option<u32>) -> Self {
        TrieNode {
            depth,
            choice,
            count: 0,
            fraction: 0.0,
            transfers: 0,
            terminal: 0,
            pruned: 0,
            children: BTreeMap::new(),
        }
    }

    /// Depth-first visit with each node's path of choices.
    pub fn walk<'a>(&'a self, path: &mut Vec<u32>, f: &mut impl FnMut(&[u32], &'a TrieNode)) {
        f(path, self);
        for (c, child) in &self.children {
            path.push(*c);
            child.walk(path, f);
            path.pop();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrefixTrie {
    pub root: TrieNode,
    pub total: u64,
    pub threshold: f64,
}

impl PrefixTrie {
    /// Every retained non-root prefix with its node.
    pub fn prefixes(&self) -> Vec<(Vec<u32>, &TrieNode)> {
        let mut out = Vec::new();
        self.root.walk(&mut Vec::new(), &mut |path, node| {
            if !path.is_empty() {
                out.push((path.to_vec(), node));
            }
        });
        out
    }

    pub fn node_count(&self) -> usize {
        self.prefixes().len()
    }

    /// Graphviz rendering. Labels read `choice (pct%)`; fill colour runs from
    /// blue (rare) to red (frequent) by fraction.
    pub fn to_dot(&self) -> String {
        let mut out = String::from(
            "digraph trie {\n  rankdir=LR;\n  node [shape=box, style=filled, fontname=\"Helvetica\"];\n",
        );
        let _ = writeln!(
            out,
            "  n [label=\"root ({})\", fillcolor=\"#ffffff\"];",
            self.total
        );
        self.root.walk(&mut Vec::new(), &mut |path, node| {
            if path.is_empty() {
                return;
            }
            let id = node_id(path);
            let red = (node.fraction.clamp(0.0, 1.0) * 255.0).round() as u8;
            let _ = writeln!(
                out,
                "  {id} [label=\"{} ({:.1}%)\", fillcolor=\"#{:02x}00{:02x}\", fontcolor=\"#ffffff\", \
                 count={}, transfers={}];",
                node.choice.unwrap_or_default(),
                node.fraction * 100.0,
                red,
                255 - red,
                node.count,
                node.transfers
            );
            let _ = writeln!(out, "  {} -> {id};", node_id(&path[..path.len() - 1]));
        });
        out.push_str("}\n");
        out
    }
}

fn node_id(path: &[u32]) -> String {
    let mut id = String::from("n");
    for c in path {
        let _ = write!(id, "_{c}");
    }
    id
}

/// Counts every event's path, then drops subtrees whose fraction is below
/// `threshold`. Retained counts and fractions refer to the unpruned search.
pub fn build_trie(events: &[TraceEvent], threshold: f64, depth_limit: Option<usize>) -> PrefixTrie {
    let mut root = TrieNode::new(0, None);
    for ev in events {
        let choices = ev.sequence.choices();
        let depth = depth_limit.map_or(choices.len(), |d| d.min(choices.len()));
        let transferred = ev.donor_prefix_len.unwrap_or(0) as usize;
        root.count += 1;
        let mut node = &mut root;
        for (i, &c) in choices[..depth].iter().enumerate() {
            node = node
                .children
                .entry(c)
                .or_insert_with(|| TrieNode::new(i + 1, Some(c)));
            node.count += 1;
            if i < transferred {
                node.transfers += 1;
            }
        }
        node.terminal += 1;
    }
    let total = events.len() as u64;
    set_fractions(&mut root, total);
    prune(&mut root, threshold);
    PrefixTrie {
        root,
        total,
        threshold,
    }
}

fn set_fractions(node: &mut TrieNode, total: u64) {
    node.fraction = if total == 0 {
        0.0
    } else {
        node.count as f64 / total as f64
    };
    for child in node.children.values_mut() {
        set_fractions(child, total);
    }
}

fn prune(node: &mut TrieNode, threshold: f64) {
    let mut removed = 0;
    node.children.retain(|_, child| {
        let keep = child.fraction >= threshold;
        if !keep {
            removed += child.count;
        }
        keep
    });
    node.pruned += removed;
    for child in node.children.values_mut() {
        prune(child, threshold);
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::space::ArchSequence;

    pub(crate) fn ev(id: u64, seq: &[u32]) -> TraceEvent {
        TraceEvent {
            candidate_id: id,
            begin_ts: id as f64,
            end_ts: id as f64 + 1.0,
            worker_id: 0,
            sequence: ArchSequence::new(seq.to_vec()),
            quality: 0.5,
            stage: 1,
            donor_id: None,
            donor_prefix_len: None,
            mutation_index: None,
            sampled_ids: None,
        }
    }

    fn check_consistency(node: &TrieNode) {
        let children: u64 = node.children.values().map(|c| c.count).sum();
        assert_eq!(node.count, children + node.pruned + node.terminal);
        node.children.values().for_each(check_consistency);
    }

    #[test]
    fn single_path() {
        let trie = build_trie(&[ev(0, &[1, 0, 2])], 0.0, None);
        let nodes = trie.prefixes();
        assert_eq!(nodes.len(), 3);
        assert!(nodes.iter().all(|(_, n)| n.fraction == 1.0));
        check_consistency(&trie.root);
    }

    #[test]
    fn shared_prefix_then_diverge() {
        let trie = build_trie(&[ev(0, &[0, 1, 0]), ev(1, &[0, 1, 2])], 0.0, None);
        let zero = &trie.root.children[&0];
        assert_eq!(zero.fraction, 1.0);
        let one = &zero.children[&1];
        assert_eq!(one.fraction, 1.0);
        assert_eq!(one.children.len(), 2);
        assert!(one.children.values().all(|n| n.fraction == 0.5));
    }

    #[test]
    fn pruning_keeps_counts() {
        let mut events: Vec<TraceEvent> = (0..9).map(|i| ev(i, &[0, 1])).collect();
        events.push(ev(9, &[1, 1]));
        let trie = build_trie(&events, 0.2, None);
        assert_eq!(trie.root.children.len(), 1);
        assert_eq!(trie.root.pruned, 1);
        assert_eq!(trie.root.children[&0].count, 9);
        check_consistency(&trie.root);
        assert!(trie.prefixes().iter().all(|(_, n)| n.fraction >= 0.2));
    }

    #[test]
    fn depth_limit_and_transfers() {
        let mut e = ev(0, &[0, 1, 2, 3]);
        e.donor_id = Some(7);
        e.donor_prefix_len = Some(2);
        let trie = build_trie(&[e], 0.0, Some(3));
        let nodes = trie.prefixes();
        assert_eq!(nodes.len(), 3);
        let transfers: Vec<u64> = nodes.iter().map(|(_, n)| n.transfers).collect();
        assert_eq!(transfers, vec![1, 1, 0]);
        check_consistency(&trie.root);
    }

    #[test]
    fn dot_output() {
        let trie = build_trie(&[ev(0, &[0, 1]), ev(1, &[0, 2])], 0.0, None);
        let dot = trie.to_dot();
        assert!(dot.starts_with("digraph trie {"));
        assert!(dot.contains("n_0 [label=\"0 (100.0%)\", fillcolor=\"#ff0000\""));
        assert!(dot.contains("n_0_2 [label=\"2 (50.0%)\""));
        assert!(dot.contains("n_0 -> n_0_1;"));
    }
}
