//! The cyclic interval system `I(n)^π` and its two chain partitions.
//!
//! Positions `1..n` sit around a circle; an interval is a nonempty arc
//! that is not the whole circle, realized as a set through the permutation
//! `π`. For every anchor there is an ascending chain (arcs growing
//! clockwise) and a descending chain (arcs growing counterclockwise), and
//! each partition of the `n(n−1)` intervals into `n` chains underlies the
//! grouping certificates in [`crate::grouping`].
//!
//! All chain arithmetic happens on positions; `π` enters only when an arc
//! is realized as a [`SubsetWord`]. This makes the reduction to the
//! identity permutation a literal code path.

use std::fmt;

use crate::lattice::{SetFamily, SubsetWord};
use crate::{Error, Result};

/// A permutation of `[n]`, stored as its image list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicPermutation {
    n: u32,
    image: Vec<u32>,
}

impl CyclicPermutation {
    pub fn identity(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("permutation needs n >= 2"));
        }
        Ok(CyclicPermutation {
            n,
            image: (1..=n).collect(),
        })
    }

    /// Builds from the image list: `image[p−1] = π(p)`.
    pub fn new(n: u32, image: Vec<u32>) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("permutation needs n >= 2"));
        }
        if image.len() != n as usize {
            return Err(Error::invalid(format!(
                "permutation of [{n}] needs {n} images, got {}",
                image.len()
            )));
        }
        let mut seen = vec![false; n as usize + 1];
        for &v in &image {
            if v < 1 || v > n {
                return Err(Error::invalid(format!("image {v} out of range 1..={n}")));
            }
            if seen[v as usize] {
                return Err(Error::invalid(format!("image {v} repeated")));
            }
            seen[v as usize] = true;
        }
        Ok(CyclicPermutation { n, image })
    }

    /// Parses the CLI syntax: `id`, or a comma list `3,1,2,…` meaning
    /// `π(1)=3, π(2)=1, …`.
    pub fn parse(n: u32, text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "id" {
            return Self::identity(n);
        }
        let mut image = Vec::new();
        for token in text.split(',') {
            let v: u32 = token
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("malformed permutation image {token:?}")))?;
            image.push(v);
        }
        Self::new(n, image)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// `π(pos)` for a 1-based position.
    pub fn apply(&self, pos: u32) -> u32 {
        self.image[(pos - 1) as usize]
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &v)| v == i as u32 + 1)
    }

    pub fn inverse(&self) -> CyclicPermutation {
        let mut image = vec![0u32; self.n as usize];
        for p in 1..=self.n {
            image[(self.apply(p) - 1) as usize] = p;
        }
        CyclicPermutation { n: self.n, image }
    }

    /// Relabels a set through `π^{-1}`: positions whose image lies in `w`.
    pub fn preimage_set(&self, w: &SubsetWord) -> SubsetWord {
        let mut bits = 0u64;
        for p in 1..=self.n {
            if w.contains_element(self.apply(p)) {
                bits |= 1u64 << (p - 1);
            }
        }
        SubsetWord::from_bits(bits)
    }
}

impl fmt::Display for CyclicPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "id");
        }
        let parts: Vec<String> = self.image.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Growth direction of an interval chain.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Ascending,
    Descending,
}

impl Direction {
    pub fn opposite(self) -> Direction {
        match self {
            Direction::Ascending => Direction::Descending,
            Direction::Descending => Direction::Ascending,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Direction::Ascending => "asc",
            Direction::Descending => "desc",
        }
    }

    pub fn parse(token: &str) -> Result<Direction> {
        match token {
            "asc" => Ok(Direction::Ascending),
            "desc" => Ok(Direction::Descending),
            _ => Err(Error::invalid(format!("unknown direction {token:?}"))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.token())
    }
}

fn pos_add(n: u32, pos: u32, delta: u32) -> u32 {
    (pos - 1 + delta) % n + 1
}

fn pos_sub(n: u32, pos: u32, delta: u32) -> u32 {
    (pos - 1 + n - delta % n) % n + 1
}

/// A cyclic arc identified by `(start, length)`, with its realized set.
///
/// Lengths run over `1..=n−1`, so distinct `(start, length)` pairs always
/// realize distinct sets and the set doubles as the interval's identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicInterval {
    start: u32,
    len: u32,
    set: SubsetWord,
}

#[allow(clippy::len_without_is_empty)] // lengths are never zero by construction
impl CyclicInterval {
    fn realize(pi: &CyclicPermutation, start: u32, len: u32) -> Self {
        let n = pi.n();
        debug_assert!((1..=n).contains(&start) && (1..n).contains(&len));
        let mut bits = 0u64;
        for d in 0..len {
            bits |= 1u64 << (pi.apply(pos_add(n, start, d)) - 1);
        }
        CyclicInterval {
            start,
            len,
            set: SubsetWord::from_bits(bits),
        }
    }

    /// First position of the arc, clockwise.
    pub fn start(&self) -> u32 {
        self.start
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    /// Last position of the arc, clockwise.
    pub fn end(&self, n: u32) -> u32 {
        pos_add(n, self.start, self.len - 1)
    }

    pub fn set(&self) -> SubsetWord {
        self.set
    }
}

/// The full interval system `I(n)^π`: all `n(n−1)` arcs, ordered by
/// `(length, start)`.
pub fn intervals(pi: &CyclicPermutation) -> Vec<CyclicInterval> {
    let n = pi.n();
    let mut out = Vec::with_capacity((n * (n - 1)) as usize);
    for len in 1..n {
        for start in 1..=n {
            out.push(CyclicInterval::realize(pi, start, len));
        }
    }
    out
}

/// One of the `2n` interval chains.
///
/// Ascending with anchor `i`: arcs `{i}, {i,i+1}, …` growing clockwise.
/// Descending with anchor `i`: arcs `{i}, {i,i−1}, …` growing
/// counterclockwise. Members are listed in growth order (cardinality
/// `1..=n−1`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalChain {
    direction: Direction,
    anchor: u32,
    members: Vec<CyclicInterval>,
}

impl IntervalChain {
    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn anchor(&self) -> u32 {
        self.anchor
    }

    pub fn members(&self) -> &[CyclicInterval] {
        &self.members
    }

    pub fn contains(&self, x: &CyclicInterval) -> bool {
        let m = &self.members[(x.len() - 1) as usize];
        m == x
    }
}

/// Builds the chain of the given direction anchored at `anchor ∈ [n]`.
pub fn chain(pi: &CyclicPermutation, direction: Direction, anchor: u32) -> Result<IntervalChain> {
    let n = pi.n();
    if !(1..=n).contains(&anchor) {
        return Err(Error::invalid(format!("anchor {anchor} out of range 1..={n}")));
    }
    let members = (1..n)
        .map(|len| {
            let start = match direction {
                Direction::Ascending => anchor,
                Direction::Descending => pos_sub(n, anchor, len - 1),
            };
            CyclicInterval::realize(pi, start, len)
        })
        .collect();
    Ok(IntervalChain {
        direction,
        anchor,
        members,
    })
}

/// The unique chain of the opposite direction through `x`, which must be a
/// member of `c`.
pub fn crossing_chain(
    pi: &CyclicPermutation,
    c: &IntervalChain,
    x: &CyclicInterval,
) -> Result<IntervalChain> {
    if !c.contains(x) {
        return Err(Error::invalid(format!(
            "interval {} is not a member of the {} chain anchored at {}",
            x.set(),
            c.direction(),
            c.anchor()
        )));
    }
    let n = pi.n();
    let anchor = match c.direction() {
        // a descending chain holds the arcs ending at its anchor
        Direction::Ascending => x.end(n),
        Direction::Descending => x.start(),
    };
    chain(pi, c.direction().opposite(), anchor)
}

/// The restriction of a chain to a family: hits `C^1, …, C^s`.
///
/// Ascending traces are ordered upward (`C^1 ⊂ … ⊂ C^s`), descending
/// traces downward (`C^1 ⊃ … ⊃ C^s`), so `C^1` is always the extreme hit
/// from which the predecessor is taken.
#[derive(Clone, Debug)]
pub struct ChainTrace {
    chain: IntervalChain,
    hits: Vec<CyclicInterval>,
}

impl ChainTrace {
    pub fn chain(&self) -> &IntervalChain {
        &self.chain
    }

    /// `ℓ(C) = |C ∩ F|`.
    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }

    pub fn hits(&self) -> &[CyclicInterval] {
        &self.hits
    }

    /// `C^i`, 1-based.
    pub fn hit(&self, i: usize) -> &CyclicInterval {
        &self.hits[i - 1]
    }
}

/// Restricts `c` to the members of `f`.
pub fn trace(c: &IntervalChain, f: &SetFamily) -> ChainTrace {
    let mut hits: Vec<CyclicInterval> = c
        .members()
        .iter()
        .filter(|iv| f.contains(&iv.set()))
        .cloned()
        .collect();
    if c.direction() == Direction::Descending {
        hits.reverse();
    }
    ChainTrace {
        chain: c.clone(),
        hits,
    }
}

/// The predecessor chain of `c` with respect to `f`, and `h(C)`.
///
/// For an ascending chain the predecessor is the descending chain through
/// `min(C ∩ F)` and `h` counts its hits strictly below that minimum; for a
/// descending chain, dually through `max(C ∩ F)` counting hits strictly
/// above. Errors when the trace is empty.
pub fn predecessor_and_h(
    pi: &CyclicPermutation,
    c: &IntervalChain,
    f: &SetFamily,
) -> Result<(IntervalChain, usize)> {
    let tr = trace(c, f);
    if tr.is_empty() {
        return Err(Error::invalid(format!(
            "the {} chain anchored at {} has an empty trace",
            c.direction(),
            c.anchor()
        )));
    }
    let extreme = tr.hit(1);
    let pred = crossing_chain(pi, c, extreme)?;
    let pred_trace = trace(&pred, f);
    let h = pred_trace
        .hits()
        .iter()
        .filter(|z| match c.direction() {
            Direction::Ascending => z.set().is_proper_subset_of(&extreme.set()),
            Direction::Descending => extreme.set().is_proper_subset_of(&z.set()),
        })
        .count();
    Ok((pred, h))
}
