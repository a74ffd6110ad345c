//! Set partitions, non-crossing partitions and moment-cumulant conversions.
//!
//! Partitions are generated as restricted growth strings (RGS): element `i`
//! carries the index of its block, blocks are numbered in order of their
//! smallest element. RGS order is the canonical enumeration order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest ground set accepted by [`enumerate_set_partitions`] (Bell(12) = 4 213 597).
pub const MAX_SET_PARTITION_N: usize = 12;
/// Largest ground set accepted by [`enumerate_noncrossing`] (Catalan(14) = 2 674 440).
pub const MAX_NONCROSSING_N: usize = 14;

const CAP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CumulantMode {
    /// Sum over all set partitions.
    Classical,
    /// Sum over non-crossing partitions only.
    Free,
}

impl CumulantMode {
    pub fn cap(self) -> usize {
        match self {
            CumulantMode::Classical => MAX_SET_PARTITION_N,
            CumulantMode::Free => MAX_NONCROSSING_N,
        }
    }
}

/// A partition of `{1, …, n}`.
///
/// Stored inline as a restricted growth string, so large enumerations do
/// not allocate per partition.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SetPartition {
    n: u8,
    num_blocks: u8,
    labels: [u8; CAP],
}

impl SetPartition {
    /// Builds a partition from arbitrary blocks of 1-based elements,
    /// validating disjointness and cover and canonicalizing the order.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        if n == 0 || n > CAP {
            return Err(Error::Bounds { what: "n", value: n, min: 1, max: CAP });
        }
        let mut owner = [u8::MAX; CAP];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::domain("empty block"));
            }
            for &e in block {
                if e == 0 || e > n {
                    return Err(Error::domain(format!("element {e} outside 1..={n}")));
                }
                if owner[e - 1] != u8::MAX {
                    return Err(Error::domain(format!("element {e} appears twice")));
                }
                owner[e - 1] = b as u8;
            }
        }
        if let Some(missing) = owner[..n].iter().position(|&o| o == u8::MAX) {
            return Err(Error::domain(format!("element {} not covered", missing + 1)));
        }
        // Relabel blocks by first appearance.
        let mut relabel = [u8::MAX; CAP];
        let mut next = 0u8;
        let mut labels = [0u8; CAP];
        for i in 0..n {
            let o = owner[i] as usize;
            if relabel[o] == u8::MAX {
                relabel[o] = next;
                next += 1;
            }
            labels[i] = relabel[o];
        }
        Ok(Self { n: n as u8, num_blocks: next, labels })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks as usize
    }

    /// Restricted growth string, 0-based block labels.
    pub fn labels(&self) -> &[u8] {
        &self.labels[..self.n()]
    }

    /// Blocks in canonical order, elements 1-based and ascending.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_blocks()];
        for (i, &l) in self.labels().iter().enumerate() {
            out[l as usize].push(i + 1);
        }
        out
    }

    fn for_each_block<E>(&self, mut f: impl FnMut(&[usize]) -> Result<(), E>) -> Result<(), E> {
        let mut buf = [0usize; CAP];
        for b in 0..self.num_blocks {
            let mut len = 0;
            for (i, &l) in self.labels().iter().enumerate() {
                if l == b {
                    buf[len] = i + 1;
                    len += 1;
                }
            }
            f(&buf[..len])?;
        }
        Ok(())
    }

    /// Checks the crossing condition directly: two distinct blocks `B`, `C`
    /// cross iff `b1 < c1 < b2 < c2` for some `b1, b2 ∈ B`, `c1, c2 ∈ C`.
    pub fn is_noncrossing(&self) -> bool {
        let labels = self.labels();
        let n = labels.len();
        for a in 0..n {
            for c in a + 1..n {
                if labels[c] == labels[a] {
                    continue;
                }
                for b in c + 1..n {
                    if labels[b] != labels[a] {
                        continue;
                    }
                    if labels[b + 1..].iter().any(|&l| l == labels[c]) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

impl fmt::Debug for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, block) in self.blocks().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (j, e) in block.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for SetPartition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.blocks().serialize(s)
    }
}

pub fn is_noncrossing(p: &SetPartition) -> bool {
    p.is_noncrossing()
}

fn check_n(n: usize, cap: usize) -> Result<()> {
    if n == 0 || n > cap {
        Err(Error::Bounds { what: "n", value: n, min: 1, max: cap })
    } else {
        Ok(())
    }
}

/// Depth-first RGS generation in canonical order. With `noncrossing`, a
/// branch is cut as soon as the partial partition acquires a crossing.
fn visit<E>(
    n: usize,
    noncrossing: bool,
    f: &mut dyn FnMut(&SetPartition) -> Result<(), E>,
) -> Result<(), E> {
    struct State {
        p: SetPartition,
        // Current min/max element (0-based) of every open block.
        lo: [u8; CAP],
        hi: [u8; CAP],
    }

    fn rec<E>(
        st: &mut State,
        i: usize,
        n: usize,
        noncrossing: bool,
        f: &mut dyn FnMut(&SetPartition) -> Result<(), E>,
    ) -> Result<(), E> {
        if i == n {
            return f(&st.p);
        }
        let k = st.p.num_blocks as usize;
        for b in 0..=k {
            if b < k && noncrossing {
                // Adding i to block b crosses iff some other block straddles
                // the current last element of b.
                let last = st.hi[b];
                let crosses = (0..k).any(|c| c != b && st.lo[c] < last && last < st.hi[c]);
                if crosses {
                    continue;
                }
            }
            let saved_hi = st.hi[b];
            st.p.labels[i] = b as u8;
            if b == k {
                st.p.num_blocks += 1;
                st.lo[b] = i as u8;
            }
            st.hi[b] = i as u8;
            let r = rec(st, i + 1, n, noncrossing, f);
            st.hi[b] = saved_hi;
            if b == k {
                st.p.num_blocks -= 1;
            }
            r?;
        }
        Ok(())
    }

    let mut st = State {
        p: SetPartition { n: n as u8, num_blocks: 0, labels: [0; CAP] },
        lo: [0; CAP],
        hi: [0; CAP],
    };
    rec(&mut st, 0, n, noncrossing, f)
}

/// All partitions of `{1, …, n}` in canonical order.
pub fn enumerate_set_partitions(n: usize) -> Result<Vec<SetPartition>> {
    check_n(n, MAX_SET_PARTITION_N)?;
    let mut out = Vec::new();
    visit::<Error>(n, false, &mut |p| {
        out.push(*p);
        Ok(())
    })?;
    Ok(out)
}

/// All non-crossing partitions of `{1, …, n}`, in the same relative order
/// as [`enumerate_set_partitions`].
pub fn enumerate_noncrossing(n: usize) -> Result<Vec<SetPartition>> {
    check_n(n, MAX_NONCROSSING_N)?;
    let mut out = Vec::new();
    visit::<Error>(n, true, &mut |p| {
        out.push(*p);
        Ok(())
    })?;
    Ok(out)
}

/// Calls `f` on each partition of `{1, …, n}` (or each non-crossing one
/// in free mode) without materializing the list.
pub fn for_each_partition<E>(
    n: usize,
    mode: CumulantMode,
    mut f: impl FnMut(&SetPartition) -> Result<(), E>,
) -> Result<(), E>
where
    E: From<Error>,
{
    check_n(n, mode.cap())?;
    visit(n, mode == CumulantMode::Free, &mut f)
}

/// `Σ_π Π_{B∈π} C(B)` over all partitions (classical) or non-crossing
/// partitions (free) of `{1, …, n}`.
///
/// `cumulant` receives the 1-based, ascending elements of a block and
/// returns `C^{(|B|)}` evaluated at those positions. Each distinct block is
/// evaluated once.
pub fn moments_from_cumulants<F>(n: usize, mode: CumulantMode, mut cumulant: F) -> Result<f64>
where
    F: FnMut(&[usize]) -> Result<f64>,
{
    check_n(n, mode.cap())?;
    let mut cache: Vec<Option<f64>> = vec![None; 1 << n];
    let mut total = 0.0;
    for_each_partition(n, mode, |p| {
        let mut prod = 1.0;
        p.for_each_block(|block| {
            let mask = block.iter().fold(0usize, |m, &e| m | 1 << (e - 1));
            let value = match cache[mask] {
                Some(v) => v,
                None => {
                    let v = cumulant(block)?;
                    cache[mask] = Some(v);
                    v
                }
            };
            prod *= value;
            Ok::<(), Error>(())
        })?;
        total += prod;
        Ok::<(), Error>(())
    })?;
    Ok(total)
}

/// Inverts the diagonal moment-cumulant relation.
///
/// `moments[k-1]` is the k-th moment. Each cumulant is obtained by solving
/// for the one-block term, so the recursion is triangular and exact up to
/// rounding:
///
/// * classical: `m_n = Σ_{k=1}^{n} C(n-1, k-1) c_k m_{n-k}`
/// * free: `m_n = Σ_{s=1}^{n} c_s [z^{n-s}] M(z)^s`, with `M(z) = Σ m_j z^j`, `m_0 = 1`.
pub fn cumulants_from_moments(moments: &[f64], mode: CumulantMode) -> Result<Vec<f64>> {
    let n = moments.len();
    check_n(n, mode.cap())?;
    let mut m = Vec::with_capacity(n + 1);
    m.push(1.0);
    m.extend_from_slice(moments);
    let mut c = vec![0.0; n + 1];
    match mode {
        CumulantMode::Classical => {
            for order in 1..=n {
                let mut rest = 0.0;
                let mut binom = 1.0; // C(order-1, k-1)
                for k in 1..order {
                    rest += binom * c[k] * m[order - k];
                    binom = binom * (order - k) as f64 / k as f64;
                }
                c[order] = m[order] - rest;
            }
        }
        CumulantMode::Free => {
            // powers[s][j] = [z^j] M(z)^s for j ≤ n.
            let mut powers = vec![vec![0.0; n + 1]; n + 1];
            powers[0][0] = 1.0;
            for s in 1..=n {
                for j in 0..=n {
                    powers[s][j] = (0..=j).map(|i| powers[s - 1][i] * m[j - i]).sum();
                }
            }
            for order in 1..=n {
                let rest: f64 = (1..order).map(|s| c[s] * powers[s][order - s]).sum();
                c[order] = m[order] - rest;
            }
        }
    }
    c.remove(0);
    Ok(c)
}

/// Extracts the top multilinear cumulant `κ_n(1, …, n)` from a joint
/// moment functional.
///
/// `moment` receives an ascending list of 1-based positions and returns
/// the mixed moment of the corresponding sub-word. Lower cumulants are
/// built for every subset of positions, then the full-block term is solved
/// for, exactly as in [`cumulants_from_moments`] but without assuming the
/// cumulants depend only on block size.
pub fn multilinear_cumulant<F>(n: usize, mode: CumulantMode, mut moment: F) -> Result<f64>
where
    F: FnMut(&[usize]) -> Result<f64>,
{
    check_n(n, mode.cap().min(CAP))?;
    let full = (1usize << n) - 1;
    let mut kappa: Vec<f64> = vec![0.0; 1 << n];
    let mut masks: Vec<usize> = (1..=full).collect();
    masks.sort_by_key(|m| m.count_ones());
    let mut positions = [0usize; CAP];
    for mask in masks {
        let k = mask.count_ones() as usize;
        let mut len = 0;
        for bit in 0..n {
            if mask & (1 << bit) != 0 {
                positions[len] = bit + 1;
                len += 1;
            }
        }
        let m = moment(&positions[..len])?;
        let mut rest = 0.0;
        for_each_partition(k, mode, |p| {
            if p.num_blocks() == 1 {
                return Ok::<(), Error>(());
            }
            let mut prod = 1.0;
            p.for_each_block(|block| {
                let sub = block.iter().fold(0usize, |acc, &e| acc | 1 << (positions[e - 1] - 1));
                prod *= kappa[sub];
                Ok::<(), Error>(())
            })?;
            rest += prod;
            Ok(())
        })?;
        kappa[mask] = m - rest;
    }
    Ok(kappa[full])
}
