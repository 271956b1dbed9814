//! Layered tree connecting `n` leaf registers through cells to one root.
//!
//! Cells are stored layer by layer, so every parent has a smaller id than
//! its child and the root is always the last cell. Node `j` of layer `k`
//! reads nodes `2j` and `2j + 1` of layer `k - 1`; when layer `k - 1` has
//! odd size its last node feeds a cell with no right parent. Such cells are
//! kept so every leaf sits the same number of hops from the root.

use std::fmt;

use crate::error::SimError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeRef {
    Leaf(usize),
    Cell(usize),
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRef::Leaf(i) => write!(f, "leaf{i}"),
            NodeRef::Cell(i) => write!(f, "cell{i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellNode {
    /// 1-based; layer 0 is the leaves.
    pub layer: usize,
    /// Position within the layer.
    pub position: usize,
    pub left: NodeRef,
    pub right: Option<NodeRef>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeTopology {
    pub n: usize,
    pub depth: usize,
    pub cells: Vec<CellNode>,
}

/// Number of cell layers between the leaves and the root output.
pub fn depth_of(n: usize) -> usize {
    if n <= 1 {
        1
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Cells in layer `k >= 1` of a tree over `n` leaves.
pub fn layer_size(n: usize, k: usize) -> usize {
    if k >= usize::BITS as usize {
        return 1;
    }
    n.div_ceil(1 << k).max(1)
}

/// Total cell count, `sum_{k=1..depth} ceil(n / 2^k)`.
pub fn cell_count(n: usize) -> usize {
    (1..=depth_of(n)).map(|k| layer_size(n, k)).sum()
}

pub fn build_tree(n: usize) -> Result<TreeTopology, SimError> {
    if n == 0 {
        return Err(SimError::InvalidConfig(
            "a sorting tree needs at least one leaf".into(),
        ));
    }
    let depth = depth_of(n);
    let mut cells = Vec::with_capacity(cell_count(n));
    // Ids of the previous layer's nodes, in position order.
    let mut previous: Vec<NodeRef> = (0..n).map(NodeRef::Leaf).collect();
    for layer in 1..=depth {
        let mut current = Vec::with_capacity(layer_size(n, layer));
        for (position, pair) in previous.chunks(2).enumerate() {
            current.push(NodeRef::Cell(cells.len()));
            cells.push(CellNode {
                layer,
                position,
                left: pair[0],
                right: pair.get(1).copied(),
            });
        }
        previous = current;
    }
    Ok(TreeTopology { n, depth, cells })
}

impl TreeTopology {
    pub fn root(&self) -> usize {
        self.cells.len() - 1
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.n];
        for cell in &self.cells {
            if sizes.len() <= cell.layer {
                sizes.resize(cell.layer + 1, 0);
            }
            sizes[cell.layer] += 1;
        }
        sizes
    }

    /// Child cell of every leaf and cell, or `None` for the root.
    pub fn children(&self) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
        let mut leaf_child = vec![None; self.n];
        let mut cell_child = vec![None; self.cells.len()];
        for (id, cell) in self.cells.iter().enumerate() {
            for parent in std::iter::once(cell.left).chain(cell.right) {
                match parent {
                    NodeRef::Leaf(i) => leaf_child[i] = Some(id),
                    NodeRef::Cell(i) => cell_child[i] = Some(id),
                }
            }
        }
        (leaf_child, cell_child)
    }

    /// One line per cell: id, layer, parents.
    pub fn dump(&self) -> String {
        let mut out = format!("n={} depth={} cells={}\n", self.n, self.depth, self.cells.len());
        for (id, cell) in self.cells.iter().enumerate() {
            let right = cell.right.map_or_else(|| "-".to_string(), |r| r.to_string());
            out.push_str(&format!(
                "cell{id} layer={} pos={} left={} right={}\n",
                cell.layer, cell.position, cell.left, right
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopologyViolation {
    pub node: String,
    pub rule: String,
}

impl fmt::Display for TopologyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.node, self.rule)
    }
}

/// Checks every structural rule of the tree. Layer shape is checked first;
/// wiring is only inspected once every layer has the expected size.
pub fn validate_topology(t: &TreeTopology) -> Vec<TopologyViolation> {
    let mut out = Vec::new();
    let flag = |out: &mut Vec<TopologyViolation>, node: String, rule: String| {
        out.push(TopologyViolation { node, rule })
    };

    if t.n == 0 {
        flag(&mut out, "tree".into(), "no leaves".into());
        return out;
    }
    if t.depth != depth_of(t.n) {
        flag(
            &mut out,
            "tree".into(),
            format!("depth {} but {} leaves need {}", t.depth, t.n, depth_of(t.n)),
        );
    }

    let mut by_layer: Vec<Vec<usize>> = vec![Vec::new(); t.depth + 1];
    for (id, cell) in t.cells.iter().enumerate() {
        if cell.layer == 0 || cell.layer > t.depth {
            flag(&mut out, format!("cell{id}"), format!("layer {} outside 1..={}", cell.layer, t.depth));
        } else {
            by_layer[cell.layer].push(id);
        }
    }
    for (layer, ids) in by_layer.iter().enumerate().skip(1) {
        let expected = layer_size(t.n, layer);
        let positions: Vec<usize> = ids.iter().map(|&id| t.cells[id].position).collect();
        for missing in (0..expected).filter(|p| !positions.contains(p)) {
            flag(
                &mut out,
                format!("layer{layer}/pos{missing}"),
                format!("missing: layer {layer} needs {expected} cells, has {}", ids.len()),
            );
        }
        for &id in ids {
            let pos = t.cells[id].position;
            if pos >= expected || positions.iter().filter(|&&p| p == pos).count() > 1 {
                flag(&mut out, format!("cell{id}"), format!("unexpected or duplicate position {pos} in layer {layer}"));
            }
        }
    }
    if !out.is_empty() {
        return out;
    }
    if by_layer[t.depth].len() != 1 {
        flag(&mut out, "root".into(), "last layer must hold exactly one cell".into());
    }
    if t.cells.last().map(|c| c.layer) != Some(t.depth) {
        flag(&mut out, "root".into(), "root must be the last cell".into());
    }

    // Node ids of each layer by position; layer 0 is the leaves.
    let mut at: Vec<Vec<NodeRef>> = vec![(0..t.n).map(NodeRef::Leaf).collect()];
    for ids in by_layer.iter().skip(1) {
        let mut row = vec![NodeRef::Cell(0); ids.len()];
        for &id in ids {
            row[t.cells[id].position] = NodeRef::Cell(id);
        }
        at.push(row);
    }

    let mut fed: Vec<Vec<usize>> = at.iter().map(|row| vec![0; row.len()]).collect();
    for (id, cell) in t.cells.iter().enumerate() {
        let upper = &at[cell.layer - 1];
        let want_left = upper.get(2 * cell.position).copied();
        let want_right = upper.get(2 * cell.position + 1).copied();
        if Some(cell.left) != want_left {
            flag(
                &mut out,
                format!("cell{id}"),
                format!("left parent {} should be {:?}", cell.left, want_left),
            );
        }
        if cell.right != want_right {
            flag(
                &mut out,
                format!("cell{id}"),
                format!("right parent {:?} should be {:?}", cell.right, want_right),
            );
        }
        for parent in std::iter::once(cell.left).chain(cell.right) {
            if let NodeRef::Cell(p) = parent {
                if p >= id {
                    flag(&mut out, format!("cell{id}"), format!("parent cell{p} is not stored before it"));
                }
            }
            if let Some(pos) = upper.iter().position(|&u| u == parent) {
                fed[cell.layer - 1][pos] += 1;
            }
        }
    }
    for (k, counts) in fed.iter().enumerate().take(t.depth) {
        for (pos, &c) in counts.iter().enumerate() {
            if c != 1 {
                flag(
                    &mut out,
                    format!("{}", at[k][pos]),
                    format!("feeds {c} cells in layer {}, expected exactly 1", k + 1),
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_tree() {
        let t = build_tree(4).unwrap();
        assert_eq!(t.layer_sizes(), vec![4, 2, 1]);
        assert_eq!((t.cells.len(), t.depth), (3, 2));
    }

    #[test]
    fn six_leaves_keep_single_parent_cell() {
        let t = build_tree(6).unwrap();
        assert_eq!(t.layer_sizes(), vec![6, 3, 2, 1]);
        assert_eq!((t.cells.len(), t.depth), (6, 3));
        let padded: Vec<&CellNode> = t.cells.iter().filter(|c| c.right.is_none()).collect();
        assert_eq!(padded.len(), 1);
        assert_eq!((padded[0].layer, padded[0].position), (2, 1));
        assert_eq!(padded[0].left, NodeRef::Cell(2));
    }

    #[test]
    fn large_tree() {
        let t = build_tree(1024).unwrap();
        assert_eq!((t.cells.len(), t.depth), (1023, 10));
    }

    #[test]
    fn single_leaf_gets_buffer_cell() {
        let t = build_tree(1).unwrap();
        assert_eq!(t.depth, 1);
        assert_eq!(
            t.cells,
            vec![CellNode {
                layer: 1,
                position: 0,
                left: NodeRef::Leaf(0),
                right: None
            }]
        );
        assert!(validate_topology(&t).is_empty());
    }

    #[test]
    fn zero_leaves_rejected() {
        assert!(build_tree(0).is_err());
    }

    #[test]
    fn depths() {
        assert_eq!(depth_of(1024), 10);
        assert_eq!(depth_of(64), 6);
        assert_eq!(depth_of(6), 3);
        assert_eq!(depth_of(2), 1);
        assert_eq!(depth_of(1), 1);
        assert_eq!(depth_of(1025), 11);
    }

    /// Layer-size recurrence `size_k = ceil(size_{k-1} / 2)` until one cell.
    fn recurrence_depth(n: usize) -> usize {
        let (mut size, mut depth) = (n, 0);
        while size > 1 {
            size = size.div_ceil(2);
            depth += 1;
        }
        depth.max(1)
    }

    #[test]
    fn sweep_is_valid() {
        for n in 1..=128 {
            let t = build_tree(n).unwrap();
            assert_eq!(validate_topology(&t), vec![], "n={n}");
            assert_eq!(t.depth, recurrence_depth(n), "n={n}");
            assert_eq!(t.cells.len(), cell_count(n));
            if n.is_power_of_two() && n > 1 {
                assert_eq!(t.cells.len(), n - 1);
            }
        }
    }

    #[test]
    fn every_leaf_is_depth_hops_from_root() {
        for n in 1..=100 {
            let t = build_tree(n).unwrap();
            let (leaf_child, cell_child) = t.children();
            for (leaf, child) in leaf_child.iter().enumerate() {
                let mut hops = 1;
                let mut at = child.unwrap();
                while let Some(next) = cell_child[at] {
                    at = next;
                    hops += 1;
                }
                assert_eq!(at, t.root());
                assert_eq!(hops, t.depth, "n={n} leaf={leaf}");
            }
        }
    }

    #[test]
    fn removed_padding_cell_is_reported() {
        // A naive builder that drops the single-parent cell of layer 2 and
        // wires its parent straight to the root.
        let mut t = build_tree(6).unwrap();
        t.cells.remove(4);
        let root = t.cells.len() - 1;
        t.cells[root].right = Some(NodeRef::Cell(2));
        let v = validate_topology(&t);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].node, "layer2/pos1");
    }

    #[test]
    fn miswired_parent_is_reported() {
        let mut t = build_tree(4).unwrap();
        t.cells[0].right = Some(NodeRef::Leaf(2));
        let v = validate_topology(&t);
        assert!(v.iter().any(|x| x.node == "cell0"));
        assert!(v.iter().any(|x| x.node == "leaf1"));
    }

    #[test]
    fn dump_lists_every_cell() {
        let dump = build_tree(3).unwrap().dump();
        assert_eq!(
            dump,
            "n=3 depth=2 cells=3\n\
             cell0 layer=1 pos=0 left=leaf0 right=leaf1\n\
             cell1 layer=1 pos=1 left=leaf2 right=-\n\
             cell2 layer=2 pos=0 left=cell0 right=cell1\n"
        );
    }
}
