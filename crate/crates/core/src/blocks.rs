//! Block partitions of the signal and the block-pair column supports on
//! which capacities are evaluated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

/// How the N signal indices are split into K blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockLayout {
    /// Block `k` owns `[kL, (k+1)L)`.
    Contiguous,
    /// Caller-provided index lists.
    Explicit(Vec<Vec<usize>>),
}

/// A partition of `0..N` into `K` disjoint, strictly increasing index lists
/// of common length `L`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockStructure {
    n: usize,
    k: usize,
    l: usize,
    blocks: Vec<Vec<usize>>,
}

/// Columns of the pair of blocks `(k, j)`, `k < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSupport {
    pub pair_id: usize,
    pub blocks: (usize, usize),
    pub columns: Vec<usize>,
}

impl BlockStructure {
    pub fn new(n: usize, k: usize, layout: BlockLayout) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(Error::InvalidBlocks(format!("N={n} and K={k} must be positive")));
        }
        if !n.is_multiple_of(k) {
            return Err(Error::InvalidBlocks(format!("N={n} is not divisible by K={k}")));
        }
        let l = n / k;
        let blocks = match layout {
            BlockLayout::Contiguous => (0..k).map(|b| (b * l..(b + 1) * l).collect()).collect(),
            BlockLayout::Explicit(blocks) => {
                validate_explicit(n, k, l, &blocks)?;
                blocks
            }
        };
        Ok(Self { n, k, l, blocks })
    }

    pub fn contiguous(n: usize, k: usize) -> Result<Self> {
        Self::new(n, k, BlockLayout::Contiguous)
    }

    /// Builds a structure from explicit lists; `N` and `K` are inferred.
    pub fn explicit(blocks: Vec<Vec<usize>>) -> Result<Self> {
        let k = blocks.len();
        let n = blocks.iter().map(Vec::len).sum();
        Self::new(n, k, BlockLayout::Explicit(blocks))
    }

    /// One block per index, the standard-sparsity case.
    pub fn singletons(n: usize) -> Self {
        Self::contiguous(n, n.max(1)).expect("singleton partition is always valid")
    }

    pub fn signal_len(&self) -> usize {
        self.n
    }

    pub fn num_blocks(&self) -> usize {
        self.k
    }

    pub fn block_len(&self) -> usize {
        self.l
    }

    pub fn block(&self, k: usize) -> &[usize] {
        &self.blocks[k]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_pairs(&self) -> usize {
        self.k * (self.k - 1) / 2
    }

    /// All `K(K-1)/2` pair supports in lexicographic `(k, j)` order.
    pub fn pair_supports(&self) -> Vec<PairSupport> {
        let mut out = Vec::with_capacity(self.num_pairs());
        for k in 0..self.k {
            for j in (k + 1)..self.k {
                let mut columns = Vec::with_capacity(2 * self.l);
                columns.extend_from_slice(&self.blocks[k]);
                columns.extend_from_slice(&self.blocks[j]);
                out.push(PairSupport { pair_id: out.len(), blocks: (k, j), columns });
            }
        }
        out
    }

    /// Concatenated columns of the given blocks, in the given order.
    pub fn support_columns(&self, blocks: &[usize]) -> Vec<usize> {
        blocks.iter().flat_map(|&b| self.blocks[b].iter().copied()).collect()
    }

    /// `P_k x`.
    pub fn gather(&self, x: &CVector, k: usize) -> CVector {
        CVector::from_iterator(self.l, self.blocks[k].iter().map(|&i| x[i]))
    }

    /// `x += P_k^T v`.
    pub fn scatter_add(&self, x: &mut CVector, k: usize, v: &CVector) {
        for (pos, &i) in self.blocks[k].iter().enumerate() {
            x[i] += v[pos];
        }
    }

    /// Euclidean norm of every block of `x`.
    pub fn block_norms(&self, x: &CVector) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|&i| x[i].norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }
}

fn validate_explicit(n: usize, k: usize, l: usize, blocks: &[Vec<usize>]) -> Result<()> {
    if blocks.len() != k {
        return Err(Error::InvalidBlocks(format!("expected {k} blocks, got {}", blocks.len())));
    }
    let mut seen = vec![false; n];
    for (b, list) in blocks.iter().enumerate() {
        if list.len() != l {
            return Err(Error::InvalidBlocks(format!("block {b} has length {}, expected {l}", list.len())));
        }
        if list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidBlocks(format!("block {b} is not strictly increasing")));
        }
        for &i in list {
            if i >= n {
                return Err(Error::InvalidBlocks(format!("index {i} in block {b} is out of range for N={n}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidBlocks(format!("index {i} appears in more than one block")));
            }
        }
    }
    Ok(())
}

/// Serialized form of a block structure, as used in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "lowercase", deny_unknown_fields)]
pub enum BlockSpec {
    Contiguous {
        #[serde(rename = "N")]
        n: usize,
        #[serde(rename = "K")]
        k: usize,
    },
    Explicit { blocks: Vec<Vec<usize>> },
}

impl BlockSpec {
    pub fn build(&self) -> Result<BlockStructure> {
        match self {
            BlockSpec::Contiguous { n, k } => BlockStructure::contiguous(*n, *k),
            BlockSpec::Explicit { blocks } => BlockStructure::explicit(blocks.clone()),
        }
    }
}

/// Column selection `A Φ^T`: column `j` of the output is column `support[j]` of `a`.
pub fn extract_columns(a: &CMatrix, support: &[usize]) -> Result<CMatrix> {
    if let Some(&bad) = support.iter().find(|&&c| c >= a.ncols()) {
        return Err(Error::IndexOutOfRange { index: bad, len: a.ncols() });
    }
    Ok(a.select_columns(support))
}
