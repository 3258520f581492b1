use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Block sizes splitting a signal (or state) vector into per-node pieces.
///
/// Zero-size blocks are allowed so that a node may own no states or no
/// channels of a particular signal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition(Vec<usize>);

impl Partition {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidArgument("partition must have at least one block".into()));
        }
        Ok(Partition(sizes))
    }

    /// `n` blocks of size one.
    pub fn ones(n: usize) -> Self {
        if n == 0 {
            return Partition(vec![0]);
        }
        Partition(vec![1; n])
    }

    pub fn uniform(blocks: usize, size: usize) -> Self {
        Partition(vec![size; blocks.max(1)])
    }

    /// A single block covering `total` entries.
    pub fn single(total: usize) -> Self {
        Partition(vec![total])
    }

    pub fn sizes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.0
            .iter()
            .map(|&sz| {
                let r = start..start + sz;
                start += sz;
                r
            })
            .collect()
    }

    pub fn range(&self, block: usize) -> Range<usize> {
        let start: usize = self.0[..block].iter().sum();
        start..start + self.0[block]
    }

    /// Block owning the given flat index.
    pub fn block_of(&self, index: usize) -> Option<usize> {
        let mut start = 0;
        for (k, &sz) in self.0.iter().enumerate() {
            if index < start + sz {
                return Some(k);
            }
            start += sz;
        }
        None
    }

    pub fn concat(&self, other: &Partition) -> Partition {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Partition(v)
    }

    /// Blockwise sum of two partitions with the same number of blocks.
    pub fn merge(&self, other: &Partition) -> Option<Partition> {
        (self.len() == other.len())
            .then(|| Partition(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    pub(crate) fn check_total(&self, total: usize, what: &str) -> Result<()> {
        if self.total() != total {
            return Err(Error::DimensionMismatch(format!(
                "{what} partition sums to {} but dimension is {total}",
                self.total()
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Partition::new(v)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.0
    }
}

/// Permutation that interleaves two concatenated vectors node by node.
///
/// Given `[x_a; x_b]` with `x_a` split by `a` and `x_b` split by `b`, the
/// returned list maps new position -> old position so that node `k` owns
/// `a[k]` entries followed by `b[k]` entries.
pub(crate) fn interleave_permutation(a: &Partition, b: &Partition) -> Vec<usize> {
    debug_assert_eq!(a.len(), b.len());
    let offset = a.total();
    let ra = a.ranges();
    let rb = b.ranges();
    let mut perm = Vec::with_capacity(offset + b.total());
    for (x, y) in ra.into_iter().zip(rb) {
        perm.extend(x);
        perm.extend(y.map(|i| i + offset));
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_lookup() {
        let p = Partition::new(vec![2, 0, 3]).unwrap();
        assert_eq!(p.total(), 5);
        assert_eq!(p.ranges(), vec![0..2, 2..2, 2..5]);
        assert_eq!(p.block_of(1), Some(0));
        assert_eq!(p.block_of(2), Some(2));
        assert_eq!(p.block_of(5), None);
    }

    #[test]
    fn empty_rejected() {
        assert!(Partition::new(vec![]).is_err());
        assert!(serde_json::from_str::<Partition>("[]").is_err());
    }

    #[test]
    fn interleave() {
        let a = Partition::new(vec![1, 2]).unwrap();
        let b = Partition::new(vec![2, 0]).unwrap();
        assert_eq!(interleave_permutation(&a, &b), vec![0, 3, 4, 1, 2]);
    }
}
