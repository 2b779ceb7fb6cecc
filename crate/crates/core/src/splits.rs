//! Party partitions: k-partite splits, refinement, the bipartite split <->
//! lambda-index bijection, and exact partition counting.
//!
//! Blocks are stored as party masks in the same bit convention as
//! [`QubitSubset`](crate::qstate::QubitSubset): party `A_1` is the most
//! significant of `n` bits and `A_N` is bit 0.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::qstate::{party_bit, QubitSubset};

/// Upper bound on `n` for explicit set-partition enumeration.
pub const MAX_ENUMERATION_PARTIES: usize = 16;

/// A partition of the parties `A_1..A_N` into nonempty disjoint blocks.
///
/// Canonical form keeps blocks ordered by their smallest member, so derived
/// equality and hashing ignore the order the blocks were supplied in.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Split {
    n: usize,
    blocks: Vec<usize>,
}

impl Split {
    pub fn from_masks(n: usize, mut masks: Vec<usize>) -> Result<Self> {
        if n == 0 || n >= usize::BITS as usize {
            return Err(Error::InvalidSplit(format!("unsupported party count {n}")));
        }
        let full = (1usize << n) - 1;
        let mut seen = 0usize;
        for &m in &masks {
            if m == 0 {
                return Err(Error::InvalidSplit("empty block".into()));
            }
            if m & !full != 0 {
                return Err(Error::InvalidSplit(format!(
                    "block {m:#b} names parties beyond {n}"
                )));
            }
            if seen & m != 0 {
                return Err(Error::InvalidSplit("blocks overlap".into()));
            }
            seen |= m;
        }
        if seen != full {
            return Err(Error::InvalidSplit("blocks do not cover every party".into()));
        }
        // Disjoint masks: the larger value holds the smaller party index.
        masks.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Split { n, blocks: masks })
    }

    /// Blocks given as 0-based party indices.
    pub fn new(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let masks = blocks
            .iter()
            .map(|b| QubitSubset::new(n, b).map(|s| s.mask()))
            .collect::<Result<Vec<_>>>()?;
        for (b, &m) in blocks.iter().zip(&masks) {
            if m.count_ones() as usize != b.len() {
                return Err(Error::InvalidSplit("party repeated within a block".into()));
            }
        }
        Self::from_masks(n, masks)
    }

    /// Blocks given as 1-based labels (`[[1, 4, 5], [2, 3, 6]]`).
    pub fn from_labels(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let zero_based = blocks
            .iter()
            .map(|b| {
                b.iter()
                    .map(|&l| {
                        l.checked_sub(1)
                            .ok_or_else(|| Error::InvalidSplit("party labels start at 1".into()))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, &zero_based)
    }

    /// The bipartite split `side | complement`.
    pub fn bipartite(side: &QubitSubset) -> Result<Self> {
        if !side.is_proper() {
            return Err(Error::InvalidSplit(
                "one side of a bipartite split must be a proper nonempty subset".into(),
            ));
        }
        Self::from_masks(side.n(), vec![side.mask(), side.complement().mask()])
    }

    /// Every party in its own block.
    pub fn finest(n: usize) -> Result<Self> {
        Self::from_masks(n, (0..n).map(|p| party_bit(n, p)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of blocks.
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_bipartite(&self) -> bool {
        self.blocks.len() == 2
    }

    pub fn block_masks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn blocks(&self) -> Vec<QubitSubset> {
        self.blocks
            .iter()
            .map(|&m| QubitSubset::from_mask(self.n, m).expect("valid block"))
            .collect()
    }

    /// Blocks as 0-based party lists.
    pub fn block_parties(&self) -> Vec<Vec<usize>> {
        self.blocks().iter().map(QubitSubset::parties).collect()
    }

    /// Blocks as 1-based labels.
    pub fn labels(&self) -> Vec<Vec<usize>> {
        self.block_parties()
            .into_iter()
            .map(|b| b.into_iter().map(|p| p + 1).collect())
            .collect()
    }

    pub fn block_of(&self, party: usize) -> Option<usize> {
        if party >= self.n {
            return None;
        }
        let bit = party_bit(self.n, party);
        self.blocks.iter().position(|&m| m & bit != 0)
    }

    /// True when `i` and `j` sit in different blocks.
    pub fn separates(&self, i: usize, j: usize) -> bool {
        self.block_of(i) != self.block_of(j)
    }

    /// True when every member of `subset` lies in a single block.
    pub fn keeps_together(&self, subset: &QubitSubset) -> bool {
        self.blocks.iter().any(|&m| subset.mask() & !m == 0)
    }

    /// Relabels parties: party `p` becomes party `perm[p]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        crate::qstate::validate_permutation(self.n, perm)?;
        let masks = self
            .blocks
            .iter()
            .map(|&m| {
                (0..self.n)
                    .filter(|&p| m & party_bit(self.n, p) != 0)
                    .fold(0, |acc, p| acc | party_bit(self.n, perm[p]))
            })
            .collect();
        Self::from_masks(self.n, masks)
    }
}

impl fmt::Display for Split {
    /// Renders as `A1-(A2A3)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .labels()
            .iter()
            .map(|b| {
                let inner: String = b.iter().map(|l| format!("A{l}")).collect();
                if b.len() == 1 {
                    inner
                } else {
                    format!("({inner})")
                }
            })
            .collect();
        f.write_str(&parts.join("-"))
    }
}

impl Serialize for Split {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.labels().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Split {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let labels = Vec::<Vec<usize>>::deserialize(deserializer)?;
        let n = labels.iter().flatten().copied().max().unwrap_or(0);
        Split::from_labels(n, &labels).map_err(serde::de::Error::custom)
    }
}

/// Identifies the bipartite split whose PPT condition reads `Δ <= 2 λ_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SplitIndex(pub usize);

impl SplitIndex {
    pub fn value(self) -> usize {
        self.0
    }
}

impl fmt::Display for SplitIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn check_enumeration_size(n: usize) -> Result<()> {
    if n > MAX_ENUMERATION_PARTIES {
        return Err(Error::SizeCap {
            requested: n,
            max: MAX_ENUMERATION_PARTIES,
        });
    }
    Ok(())
}

/// All set partitions of `n` parties into exactly `k` blocks.
///
/// Generated as restricted-growth strings (`a_1 = 0`, `a_i <= 1 + max a_{<i}`),
/// which yields each partition once, already canonical.
pub fn enumerate_k_splits(n: usize, k: usize) -> Result<Vec<Split>> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one party".into()));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "block count {k} out of range 1..={n}"
        )));
    }
    check_enumeration_size(n)?;
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    grow(n, k, 1, 1, &mut rgs, &mut out);
    Ok(out)
}

fn grow(n: usize, k: usize, pos: usize, used: usize, rgs: &mut [usize], out: &mut Vec<Split>) {
    if used + (n - pos) < k {
        return;
    }
    if pos == n {
        if used == k {
            let mut masks = vec![0usize; k];
            for (p, &b) in rgs.iter().enumerate() {
                masks[b] |= party_bit(n, p);
            }
            out.push(Split { n, blocks: masks });
        }
        return;
    }
    for v in 0..=used.min(k - 1) {
        rgs[pos] = v;
        grow(n, k, pos + 1, used.max(v + 1), rgs, out);
    }
}

/// The `2^(n-1) - 1` bipartite splits.
pub fn enumerate_bipartite_splits(n: usize) -> Result<Vec<Split>> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "bipartite splits need at least two parties".into(),
        ));
    }
    enumerate_k_splits(n, 2)
}

/// True iff every block of `coarse` is a union of blocks of `fine`.
pub fn is_contained(fine: &Split, coarse: &Split) -> bool {
    fine.n == coarse.n
        && fine
            .blocks
            .iter()
            .all(|&f| coarse.blocks.iter().any(|&c| f & !c == 0))
}

/// Index `k` of the bipartite split: the side without `A_N`, read as an
/// `(n-1)`-bit number with `A_1` most significant.
pub fn split_to_lambda_index(split: &Split) -> Result<SplitIndex> {
    if !split.is_bipartite() {
        return Err(Error::InvalidSplit(format!(
            "{split} has {} blocks, expected 2",
            split.k()
        )));
    }
    Ok(index_of_side(split.blocks[0], split.blocks[1]))
}

fn index_of_side(a: usize, b: usize) -> SplitIndex {
    let side = if a & 1 == 0 { a } else { b };
    SplitIndex(side >> 1)
}

/// Inverse of [`split_to_lambda_index`].
pub fn lambda_index_to_split(n: usize, index: SplitIndex) -> Result<Split> {
    let max = lambda_count(n)?;
    if index.0 == 0 || index.0 > max {
        return Err(Error::InvalidArgument(format!(
            "split index {index} out of range 1..={max}"
        )));
    }
    let side = index.0 << 1;
    Split::from_masks(n, vec![side, !side & ((1 << n) - 1)])
}

/// `2^(n-1) - 1`, the number of bipartite splits.
pub fn lambda_count(n: usize) -> Result<usize> {
    if !(2..usize::BITS as usize).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "party count {n} out of range"
        )));
    }
    Ok((1usize << (n - 1)) - 1)
}

/// Indices of the bipartite splits obtained by joining blocks of `split`
/// into two groups. There are `2^(k-1) - 1` of them.
pub fn bipartite_coarsenings(split: &Split) -> Vec<SplitIndex> {
    // Blocks other than the one holding A_N choose a side freely.
    let free: Vec<usize> = split.blocks.iter().copied().filter(|m| m & 1 == 0).collect();
    let mut out: Vec<SplitIndex> = (1usize..1 << free.len())
        .map(|choice| {
            let side = free
                .iter()
                .enumerate()
                .filter(|(i, _)| choice >> i & 1 == 1)
                .fold(0, |acc, (_, &m)| acc | m);
            SplitIndex(side >> 1)
        })
        .collect();
    out.sort_unstable();
    out
}

/// Integer partition of `n` written as multiplicities `r_1..r_n`
/// (`r_j` blocks of size `j`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartitionShape {
    multiplicities: Vec<usize>,
}

impl PartitionShape {
    /// `multiplicities[j - 1] = r_j`; the vector length is `n`.
    pub fn new(multiplicities: Vec<usize>) -> Result<Self> {
        let n = multiplicities.len();
        let total: usize = multiplicities
            .iter()
            .enumerate()
            .map(|(i, &r)| (i + 1) * r)
            .sum();
        if total != n {
            return Err(Error::InvalidArgument(format!(
                "shape sums to {total}, expected {n}"
            )));
        }
        Ok(PartitionShape { multiplicities })
    }

    /// Shape from block sizes, e.g. `[2, 1, 1]`.
    pub fn from_block_sizes(sizes: &[usize]) -> Result<Self> {
        let n: usize = sizes.iter().sum();
        let mut r = vec![0usize; n];
        for &s in sizes {
            if s == 0 {
                return Err(Error::InvalidArgument("zero block size".into()));
            }
            r[s - 1] += 1;
        }
        Self::new(r)
    }

    pub fn of_split(split: &Split) -> Self {
        let sizes: Vec<usize> = split
            .block_masks()
            .iter()
            .map(|m| m.count_ones() as usize)
            .collect();
        Self::from_block_sizes(&sizes).expect("split blocks cover n")
    }

    pub fn n(&self) -> usize {
        self.multiplicities.len()
    }

    /// Number of blocks, `sum r_j`.
    pub fn k(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }
}

impl fmt::Display for PartitionShape {
    /// Renders as `{1^2 2^1}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .multiplicities
            .iter()
            .enumerate()
            .filter(|(_, &r)| r > 0)
            .map(|(i, r)| format!("{}^{}", i + 1, r))
            .collect();
        write!(f, "{{{}}}", parts.join(" "))
    }
}

/// All integer partitions of `n`, largest part first.
pub fn integer_partitions(n: usize) -> Vec<PartitionShape> {
    fn rec(remaining: usize, max_part: usize, sizes: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining == 0 {
            out.push(sizes.clone());
            return;
        }
        for part in (1..=remaining.min(max_part)).rev() {
            sizes.push(part);
            rec(remaining - part, part, sizes, out);
            sizes.pop();
        }
    }
    let mut raw = Vec::new();
    rec(n, n, &mut Vec::new(), &mut raw);
    raw.iter()
        .map(|s| PartitionShape::from_block_sizes(s).expect("sizes sum to n"))
        .collect()
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// Number of set partitions with the given shape:
/// `n! / (prod r_j! * prod (j!)^r_j)`.
pub fn count_shape_configurations(shape: &PartitionShape) -> BigUint {
    let mut denom = BigUint::one();
    for (i, &r) in shape.multiplicities.iter().enumerate() {
        denom *= factorial(r);
        denom *= factorial(i + 1).pow(r as u32);
    }
    factorial(shape.n()) / denom
}

/// Number of integer partitions `p(n)` via Euler's pentagonal recurrence
/// `p(m) = sum_k (-1)^(k+1) [p(m - k(3k-1)/2) + p(m - k(3k+1)/2)]`.
pub fn partition_function(n: usize) -> BigUint {
    let mut table: Vec<BigInt> = Vec::with_capacity(n + 1);
    table.push(BigInt::one());
    for m in 1..=n {
        let mut acc = BigInt::zero();
        for k in 1.. {
            let g1 = k * (3 * k - 1) / 2;
            if g1 > m {
                break;
            }
            let mut term = table[m - g1].clone();
            let g2 = k * (3 * k + 1) / 2;
            if g2 <= m {
                term += &table[m - g2];
            }
            if k % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        table.push(acc);
    }
    table[n]
        .to_biguint()
        .expect("partition numbers are nonnegative")
}

/// Stirling number of the second kind, `S(n, k)`.
pub fn stirling2(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    // Row-by-row: S(m, j) = j S(m-1, j) + S(m-1, j-1).
    let mut row = vec![BigUint::zero(); k + 1];
    row[0] = BigUint::one();
    for m in 1..=n {
        for j in (1..=k.min(m)).rev() {
            let carry = row[j - 1].clone();
            row[j] = &row[j] * BigUint::from(j) + carry;
        }
        row[0] = BigUint::zero();
    }
    row[k].clone()
}
