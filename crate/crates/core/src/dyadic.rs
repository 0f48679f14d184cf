//! Finite dyadic trees over a normalized interval `J = [0, 1]`.
//!
//! A weight is a step function that is constant on each of the `2^n`
//! intervals of the finest level. Every dyadic subinterval is addressed by
//! a [`NodeIndex`]; averages of `w^r` over all of them are collected bottom-up
//! into an [`AverageTable`], so a parent's entry is always the arithmetic
//! mean of its children's entries.

use serde::{Deserialize, Serialize};

use crate::bellman::DomainPoint;
use crate::error::{Error, Result};

/// Address of a dyadic subinterval: `level` halvings from the root, then
/// `offset` from the left. Ordering is lexicographic in `(level, offset)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeIndex {
    pub level: u32,
    pub offset: usize,
}

impl NodeIndex {
    pub const ROOT: NodeIndex = NodeIndex {
        level: 0,
        offset: 0,
    };

    pub fn new(level: u32, offset: usize) -> Self {
        Self { level, offset }
    }

    pub fn is_root(&self) -> bool {
        self.level == 0
    }

    pub fn parent(&self) -> Option<NodeIndex> {
        (self.level > 0).then(|| NodeIndex::new(self.level - 1, self.offset / 2))
    }

    /// Left and right halves.
    pub fn children(&self) -> (NodeIndex, NodeIndex) {
        let level = self.level + 1;
        (
            NodeIndex::new(level, 2 * self.offset),
            NodeIndex::new(level, 2 * self.offset + 1),
        )
    }

    pub fn is_valid(&self, depth: u32) -> bool {
        self.level <= depth && self.offset < (1usize << self.level)
    }

    /// Position in breadth-first (heap) order.
    pub fn flat(&self) -> usize {
        (1usize << self.level) - 1 + self.offset
    }

    /// Lebesgue measure of the interval relative to `|J|`.
    pub fn measure(&self) -> f64 {
        (0.5f64).powi(self.level as i32)
    }

    /// All nodes of a depth-`depth` tree in `(level, offset)` order.
    pub fn all(depth: u32) -> impl Iterator<Item = NodeIndex> {
        (0..=depth)
            .flat_map(|level| (0..1usize << level).map(move |offset| NodeIndex::new(level, offset)))
    }
}

/// Positive step weight on the leaves of a dyadic tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicWeight {
    depth: u32,
    leaves: Vec<f64>,
}

impl DyadicWeight {
    /// Validates `leaves` and builds the weight; the depth is `log2(len)`.
    pub fn new(leaves: Vec<f64>) -> Result<Self> {
        if leaves.is_empty() {
            return Err(Error::EmptyWeight);
        }
        if !leaves.len().is_power_of_two() {
            return Err(Error::NotPowerOfTwo(leaves.len()));
        }
        for (index, &value) in leaves.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteLeaf { index, value });
            }
            if value <= 0.0 {
                return Err(Error::NonPositiveLeaf { index, value });
            }
        }
        let depth = leaves.len().trailing_zeros();
        Ok(Self { depth, leaves })
    }

    /// A weight equal to `value` on every leaf of a depth-`depth` tree.
    pub fn constant(depth: u32, value: f64) -> Result<Self> {
        Self::new(vec![value; 1usize << depth])
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn leaves(&self) -> &[f64] {
        &self.leaves
    }

    pub fn into_leaves(self) -> Vec<f64> {
        self.leaves
    }

    /// Leafwise power `w^r`.
    pub fn powf(&self, r: f64) -> Result<Self> {
        Self::new(self.leaves.iter().map(|v| v.powf(r)).collect())
    }

    /// Leafwise multiple `c * w`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.leaves.iter().map(|v| c * v).collect())
    }

    pub fn node_count(&self) -> usize {
        (1usize << (self.depth + 1)) - 1
    }

    pub fn check_node(&self, node: NodeIndex) -> Result<()> {
        if node.is_valid(self.depth) {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                node,
                depth: self.depth,
            })
        }
    }

    /// Leaves lying under `node`.
    pub fn leaves_under(&self, node: NodeIndex) -> Result<&[f64]> {
        self.check_node(node)?;
        let span = 1usize << (self.depth - node.level);
        let start = node.offset * span;
        Ok(&self.leaves[start..start + span])
    }

    /// `<w>_I` summed directly from the leaves (no table).
    pub fn mean_over(&self, node: NodeIndex) -> Result<f64> {
        let leaves = self.leaves_under(node)?;
        Ok(leaves.iter().sum::<f64>() / leaves.len() as f64)
    }
}

/// Averages `<w^r>_I` for every node `I`, stored in heap order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AverageTable {
    exponent: f64,
    depth: u32,
    values: Vec<f64>,
}

impl AverageTable {
    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn get(&self, node: NodeIndex) -> Option<f64> {
        node.is_valid(self.depth).then(|| self.values[node.flat()])
    }

    /// Value at `node`; panics when the node does not belong to the tree.
    pub fn at(&self, node: NodeIndex) -> f64 {
        assert!(
            node.is_valid(self.depth),
            "node {node:?} outside depth {}",
            self.depth
        );
        self.values[node.flat()]
    }

    pub fn root(&self) -> f64 {
        self.values[0]
    }

    /// Entries of one level, left to right.
    pub fn level(&self, level: u32) -> &[f64] {
        let start = (1usize << level) - 1;
        &self.values[start..start + (1usize << level)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Builds the table of `<w^r>_I` bottom-up from the leaves.
pub fn power_averages(w: &DyadicWeight, r: f64) -> AverageTable {
    let depth = w.depth;
    let mut values = vec![0.0; w.node_count()];
    let first_leaf = (1usize << depth) - 1;
    for (slot, &leaf) in values[first_leaf..].iter_mut().zip(&w.leaves) {
        *slot = if r == 0.0 {
            1.0
        } else if r == 1.0 {
            leaf
        } else {
            leaf.powf(r)
        };
    }
    for i in (0..first_leaf).rev() {
        values[i] = 0.5 * (values[2 * i + 1] + values[2 * i + 2]);
    }
    AverageTable {
        exponent: r,
        depth,
        values,
    }
}

/// The point `(<w>_I, <w^p>_I)` for node `I`.
///
/// `<w>_I` is summed from the leaves; `<w^p>_I` is read from `powers`, which
/// must have been built from `w`.
pub fn node_pair(w: &DyadicWeight, node: NodeIndex, powers: &AverageTable) -> Result<DomainPoint> {
    w.check_node(node)?;
    if powers.depth != w.depth {
        return Err(Error::NodeOutOfRange {
            node,
            depth: powers.depth,
        });
    }
    DomainPoint::new(w.mean_over(node)?, powers.at(node))
}

/// Per-weight memo of average tables keyed by exponent.
pub struct AverageCache<'a> {
    weight: &'a DyadicWeight,
    tables: std::sync::Mutex<Vec<std::sync::Arc<AverageTable>>>,
}

impl<'a> AverageCache<'a> {
    pub fn new(weight: &'a DyadicWeight) -> Self {
        Self {
            weight,
            tables: Default::default(),
        }
    }

    pub fn weight(&self) -> &'a DyadicWeight {
        self.weight
    }

    pub fn table(&self, r: f64) -> std::sync::Arc<AverageTable> {
        let mut tables = self.tables.lock().expect("average cache poisoned");
        if let Some(t) = tables.iter().find(|t| t.exponent.to_bits() == r.to_bits()) {
            return t.clone();
        }
        let t = std::sync::Arc::new(power_averages(self.weight, r));
        tables.push(t.clone());
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_validation() {
        assert_eq!(DyadicWeight::new(vec![1.0]).unwrap().depth(), 0);
        assert_eq!(DyadicWeight::new(vec![1.0, 3.0]).unwrap().depth(), 1);
        assert_eq!(
            DyadicWeight::new(vec![1.0, 2.0, 3.0]),
            Err(Error::NotPowerOfTwo(3))
        );
        assert_eq!(DyadicWeight::new(vec![]), Err(Error::EmptyWeight));
        assert!(matches!(
            DyadicWeight::new(vec![1.0, 0.0]),
            Err(Error::NonPositiveLeaf { index: 1, .. })
        ));
        assert!(matches!(
            DyadicWeight::new(vec![1.0, -2.0]),
            Err(Error::NonPositiveLeaf { index: 1, .. })
        ));
        assert!(matches!(
            DyadicWeight::new(vec![f64::NAN, 1.0]),
            Err(Error::NonFiniteLeaf { index: 0, .. })
        ));
        assert!(matches!(
            DyadicWeight::new(vec![1.0, f64::INFINITY]),
            Err(Error::NonFiniteLeaf { index: 1, .. })
        ));
    }

    #[test]
    fn node_navigation() {
        let n = NodeIndex::new(2, 3);
        assert_eq!(n.parent(), Some(NodeIndex::new(1, 1)));
        assert_eq!(n.children(), (NodeIndex::new(3, 6), NodeIndex::new(3, 7)));
        assert_eq!(NodeIndex::ROOT.parent(), None);
        assert!(n.is_valid(2));
        assert!(!n.is_valid(1));
        assert!(!NodeIndex::new(1, 2).is_valid(4));
        assert_eq!(NodeIndex::all(2).count(), 7);
        assert_eq!(
            NodeIndex::all(2).map(|n| n.flat()).collect::<Vec<_>>(),
            (0..7).collect::<Vec<_>>()
        );
    }

    #[test]
    fn two_leaf_averages() {
        let w = DyadicWeight::new(vec![1.0, 3.0]).unwrap();
        let t1 = power_averages(&w, 1.0);
        assert_eq!(t1.root(), 2.0);
        assert_eq!(t1.level(1), &[1.0, 3.0]);
        assert_eq!(power_averages(&w, 2.0).root(), 5.0);
    }

    #[test]
    fn constant_weight_averages() {
        let w = DyadicWeight::constant(3, 2.5).unwrap();
        for r in [-1.5, 0.5, 2.0, 3.0] {
            let t = power_averages(&w, r);
            for v in t.values() {
                assert!((v - 2.5f64.powf(r)).abs() <= 1e-15 * v);
            }
        }
    }

    #[test]
    fn pairs() {
        let w = DyadicWeight::new(vec![1.0, 3.0]).unwrap();
        let t = power_averages(&w, 2.0);
        let root = node_pair(&w, NodeIndex::ROOT, &t).unwrap();
        assert_eq!((root.x1, root.x2), (2.0, 5.0));
        let left = node_pair(&w, NodeIndex::new(1, 0), &t).unwrap();
        assert_eq!((left.x1, left.x2), (1.0, 1.0));
        assert!(matches!(
            node_pair(&w, NodeIndex::new(2, 0), &t),
            Err(Error::NodeOutOfRange { .. })
        ));

        let c = DyadicWeight::constant(2, 2.0).unwrap();
        let t3 = power_averages(&c, 3.0);
        let root = node_pair(&c, NodeIndex::ROOT, &t3).unwrap();
        assert_eq!((root.x1, root.x2), (2.0, 8.0));
    }

    #[test]
    fn cache_reuses_tables() {
        let w = DyadicWeight::new(vec![1.0, 2.0, 4.0, 8.0]).unwrap();
        let cache = AverageCache::new(&w);
        let a = cache.table(2.0);
        let b = cache.table(2.0);
        assert!(std::sync::Arc::ptr_eq(&a, &b));
        assert_eq!(*a, power_averages(&w, 2.0));
    }
}
