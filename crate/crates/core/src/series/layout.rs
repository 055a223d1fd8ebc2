use std::collections::HashMap;
use std::sync::OnceLock;

use super::ExponentVector;
use crate::error::{Error, Result};
use crate::numeric::binomial_u64;

/// Upper bound on the number of stored coefficients in one layout.
const MAX_TERMS: u64 = 4_000_000;
/// Upper bound on precomputed product-index entries (u32 each).
const MAX_TABLE_ENTRIES: u64 = 8_000_000;

/// Dense index over every exponent vector in `n` variables with total
/// degree `≤ cap`, in graded-lexicographic order.
///
/// Series that share a layout store their coefficients as flat vectors, so
/// products become index arithmetic instead of map lookups.
pub struct Layout {
    n: usize,
    cap: u32,
    exps: Vec<ExponentVector>,
    degrees: Vec<u32>,
    /// `offsets[d]` is the first index of degree `d`; `offsets[cap + 1]` is the length.
    offsets: Vec<usize>,
    index: HashMap<ExponentVector, usize>,
    table: OnceLock<Option<MulTable>>,
}

struct MulTable {
    starts: Vec<usize>,
    targets: Vec<u32>,
}

impl Layout {
    pub fn new(n: usize, cap: u32) -> Result<Self> {
        let count = binomial_u64(n as u64 + cap as u64, n as u64);
        if count > MAX_TERMS {
            return Err(Error::Invalid(format!(
                "a dense series in {n} variables up to degree {cap} needs {count} coefficients"
            )));
        }
        let mut exps = Vec::with_capacity(count as usize);
        let mut offsets = Vec::with_capacity(cap as usize + 2);
        let mut scratch = vec![0u32; n];
        for d in 0..=cap {
            offsets.push(exps.len());
            compositions(d, 0, &mut scratch, &mut exps);
        }
        offsets.push(exps.len());
        let degrees = exps.iter().map(ExponentVector::degree).collect();
        let index = exps
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        Ok(Self {
            n,
            cap,
            exps,
            degrees,
            offsets,
            index,
            table: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponent(&self, i: usize) -> &ExponentVector {
        &self.exps[i]
    }

    pub fn degree(&self, i: usize) -> u32 {
        self.degrees[i]
    }

    pub fn index_of(&self, e: &ExponentVector) -> Option<usize> {
        self.index.get(e).copied()
    }

    /// Index range holding exactly the monomials of degree `d`.
    pub fn degree_range(&self, d: u32) -> std::ops::Range<usize> {
        if d > self.cap {
            return self.len()..self.len();
        }
        self.offsets[d as usize]..self.offsets[d as usize + 1]
    }

    /// Number of monomials with degree `≤ d`.
    pub(crate) fn prefix_len(&self, d: u32) -> usize {
        self.offsets[d.min(self.cap) as usize + 1]
    }

    pub(crate) fn same_shape(&self, other: &Layout) -> bool {
        self.n == other.n && self.cap == other.cap
    }

    /// Index of `e_i + e_j`, when its degree fits under the cap.
    pub(crate) fn product_index(&self, i: usize, j: usize) -> Option<usize> {
        if self.degrees[i] + self.degrees[j] > self.cap {
            return None;
        }
        match self.table() {
            Some(t) => Some(t.targets[t.starts[i] + j] as usize),
            None => self.index_of(&self.exps[i].add(&self.exps[j])),
        }
    }

    /// Row of product targets for `i`, covering every `j` below
    /// `prefix_len(cap - deg i)`. `None` when the table is too large to build.
    pub(crate) fn product_row(&self, i: usize) -> Option<&[u32]> {
        self.table().map(|t| {
            let len = self.prefix_len(self.cap - self.degrees[i]);
            &t.targets[t.starts[i]..t.starts[i] + len]
        })
    }

    fn table(&self) -> Option<&MulTable> {
        self.table
            .get_or_init(|| {
                let entries =
                    binomial_u64(2 * self.n as u64 + self.cap as u64, 2 * self.n as u64);
                if entries > MAX_TABLE_ENTRIES {
                    return None;
                }
                let mut starts = Vec::with_capacity(self.len());
                let mut targets = Vec::with_capacity(entries as usize);
                for i in 0..self.len() {
                    starts.push(targets.len());
                    let len = self.prefix_len(self.cap - self.degrees[i]);
                    for j in 0..len {
                        let k = self.index[&self.exps[i].add(&self.exps[j])];
                        targets.push(k as u32);
                    }
                }
                Some(MulTable { starts, targets })
            })
            .as_ref()
    }
}

impl std::fmt::Debug for Layout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Layout")
            .field("n", &self.n)
            .field("cap", &self.cap)
            .field("len", &self.len())
            .finish()
    }
}

/// Push every composition of `remaining` into the slots from `pos` onward,
/// larger leading parts first (lexicographically descending).
fn compositions(remaining: u32, pos: usize, cur: &mut [u32], out: &mut Vec<ExponentVector>) {
    let n = cur.len();
    if n == 0 {
        if remaining == 0 {
            out.push(ExponentVector::new(Vec::new()));
        }
        return;
    }
    if pos == n - 1 {
        cur[pos] = remaining;
        out.push(ExponentVector::new(cur.to_vec()));
        cur[pos] = 0;
        return;
    }
    for first in (0..=remaining).rev() {
        cur[pos] = first;
        compositions(remaining - first, pos + 1, cur, out);
    }
    cur[pos] = 0;
}
