//! Ground sets, subsets as machine words, set families, levels of the
//! Boolean lattice, and the classical extremal constructions.
//!
//! Everything here is plain value types: a subset of `[n]` is a bit-vector
//! in a single `u64` (element `i` present iff bit `i−1` is set), and a
//! family keeps its members sorted by `(cardinality, numeric value)` so
//! serialization and search traversal are deterministic.

use std::fmt;

use crate::{Error, Result};

/// The ground set `[n] = {1, 2, …, n}` with `2 ≤ n ≤ 63`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroundSet {
    n: u32,
}

impl GroundSet {
    /// Largest supported ground set; subsets must fit in one `u64` word
    /// with room for the out-of-range convention in [`binomial`].
    pub const MAX_N: u32 = 63;

    pub fn new(n: u32) -> Result<Self> {
        if !(2..=Self::MAX_N).contains(&n) {
            return Err(Error::invalid(format!(
                "ground set size must be in 2..=63, got {n}"
            )));
        }
        Ok(GroundSet { n })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Bit mask with the low `n` bits set: the word of `[n]` itself.
    pub fn full_mask(&self) -> u64 {
        (1u64 << self.n) - 1
    }

    pub fn full_set(&self) -> SubsetWord {
        SubsetWord(self.full_mask())
    }

    /// All subsets of cardinality `i`, in increasing numeric order.
    pub fn level(&self, i: u32) -> Vec<SubsetWord> {
        let n = self.n;
        if i > n {
            return Vec::new();
        }
        if i == 0 {
            return vec![SubsetWord::EMPTY];
        }
        // Gosper's hack: next bit pattern with the same popcount.
        let mut out = Vec::with_capacity(binomial(n, i as i64) as usize);
        let mut v: u64 = (1u64 << i) - 1;
        let limit = self.full_mask();
        while v <= limit {
            out.push(SubsetWord(v));
            let c = v & v.wrapping_neg();
            let r = v + c;
            if r > limit || c == 0 {
                break;
            }
            v = (((r ^ v) >> 2) / c) | r;
        }
        out
    }

    /// All `2^n` subsets in increasing numeric order. Only sensible for
    /// small `n`; callers gate on their own budget.
    pub fn all_subsets(&self) -> impl Iterator<Item = SubsetWord> {
        (0..=self.full_mask()).map(SubsetWord)
    }
}

/// A subset of the ground set, packed into one word.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetWord(u64);

impl SubsetWord {
    pub const EMPTY: SubsetWord = SubsetWord(0);

    pub fn from_bits(bits: u64) -> Self {
        SubsetWord(bits)
    }

    /// Builds a word from 1-based elements.
    pub fn from_elements(elems: &[u32]) -> Self {
        let mut bits = 0u64;
        for &e in elems {
            debug_assert!((1..=GroundSet::MAX_N).contains(&e));
            bits |= 1u64 << (e - 1);
        }
        SubsetWord(bits)
    }

    pub fn bits(&self) -> u64 {
        self.0
    }

    pub fn cardinality(&self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn contains_element(&self, e: u32) -> bool {
        e >= 1 && (self.0 >> (e - 1)) & 1 == 1
    }

    pub fn with_element(&self, e: u32) -> Self {
        SubsetWord(self.0 | 1u64 << (e - 1))
    }

    pub fn is_subset_of(&self, other: &SubsetWord) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_proper_subset_of(&self, other: &SubsetWord) -> bool {
        self.0 != other.0 && self.is_subset_of(other)
    }

    pub fn is_comparable_with(&self, other: &SubsetWord) -> bool {
        self.is_subset_of(other) || other.is_subset_of(self)
    }

    pub fn complement(&self, ground: GroundSet) -> SubsetWord {
        SubsetWord(!self.0 & ground.full_mask())
    }

    /// 1-based elements in increasing order.
    pub fn elements(&self) -> impl Iterator<Item = u32> + '_ {
        let bits = self.0;
        (0..64u32).filter(move |b| (bits >> b) & 1 == 1).map(|b| b + 1)
    }

    /// Canonical sort key: cardinality first, numeric value second.
    pub fn canonical_key(&self) -> (u32, u64) {
        (self.cardinality(), self.0)
    }

    /// Body of the family file line: `-` for the empty set, otherwise
    /// comma-joined base-10 elements.
    pub fn to_line(&self) -> String {
        if self.is_empty() {
            "-".to_string()
        } else {
            let parts: Vec<String> = self.elements().map(|e| e.to_string()).collect();
            parts.join(",")
        }
    }
}

impl fmt::Debug for SubsetWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for SubsetWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        let mut first = true;
        for e in self.elements() {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
            first = false;
        }
        write!(f, "}}")
    }
}

/// A duplicate-free collection of subsets of `[n]`, sorted by
/// `(cardinality, numeric value)`.
#[derive(Clone, PartialEq, Eq)]
pub struct SetFamily {
    ground: GroundSet,
    members: Vec<SubsetWord>,
}

impl SetFamily {
    /// Collects, validates, sorts, and deduplicates the members.
    pub fn new(ground: GroundSet, members: impl IntoIterator<Item = SubsetWord>) -> Result<Self> {
        let mask = ground.full_mask();
        let mut members: Vec<SubsetWord> = members.into_iter().collect();
        for w in &members {
            if w.bits() & !mask != 0 {
                return Err(Error::invalid(format!(
                    "set {w} uses elements outside [{}]",
                    ground.n()
                )));
            }
        }
        members.sort_by_key(|w| w.canonical_key());
        members.dedup();
        Ok(SetFamily { ground, members })
    }

    pub fn empty(ground: GroundSet) -> Self {
        SetFamily {
            ground,
            members: Vec::new(),
        }
    }

    pub fn ground(&self) -> GroundSet {
        self.ground
    }

    pub fn n(&self) -> u32 {
        self.ground.n()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[SubsetWord] {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = &SubsetWord> {
        self.members.iter()
    }

    pub fn member(&self, idx: usize) -> SubsetWord {
        self.members[idx]
    }

    /// Index of `w` in the canonical order, if present.
    pub fn position(&self, w: &SubsetWord) -> Option<usize> {
        self.members
            .binary_search_by_key(&w.canonical_key(), |m| m.canonical_key())
            .ok()
    }

    pub fn contains(&self, w: &SubsetWord) -> bool {
        self.position(w).is_some()
    }

    /// Replaces every member by its complement in `[n]`. An involution.
    pub fn complement_family(&self) -> SetFamily {
        let ground = self.ground;
        let members = self.members.iter().map(|w| w.complement(ground));
        SetFamily::new(ground, members).expect("complement stays inside the ground set")
    }

    pub fn level_profile(&self) -> LevelProfile {
        let n = self.ground.n() as usize;
        let mut level_sizes = vec![0u64; n + 1];
        for w in &self.members {
            level_sizes[w.cardinality() as usize] += 1;
        }
        LevelProfile {
            ground: self.ground,
            level_sizes,
        }
    }
}

impl fmt::Debug for SetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SetFamily(n={}, {{", self.ground.n())?;
        for (i, w) in self.members.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, "}})")
    }
}

/// Per-level member counts of a family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelProfile {
    ground: GroundSet,
    level_sizes: Vec<u64>,
}

impl LevelProfile {
    pub fn ground(&self) -> GroundSet {
        self.ground
    }

    /// `sizes()[i]` = number of members of cardinality `i`; length `n+1`.
    pub fn sizes(&self) -> &[u64] {
        &self.level_sizes
    }

    pub fn total(&self) -> u64 {
        self.level_sizes.iter().sum()
    }

    /// If every nonempty level is completely full, returns the sorted list
    /// of those cardinalities.
    pub fn full_levels(&self) -> Option<Vec<u32>> {
        let n = self.ground.n();
        let mut out = Vec::new();
        for (i, &c) in self.level_sizes.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if c != binomial(n, i as i64) {
                return None;
            }
            out.push(i as u32);
        }
        Some(out)
    }
}

/// Binomial coefficient `C(n, i)` for `n ≤ 63`; `0` when `i < 0` or `i > n`.
pub fn binomial(n: u32, i: i64) -> u64 {
    assert!(n <= GroundSet::MAX_N, "binomial supports n <= 63");
    if i < 0 || i > n as i64 {
        return 0;
    }
    let i = i as u64;
    let i = i.min(n as u64 - i);
    let mut acc: u128 = 1;
    for j in 1..=i {
        acc = acc * (n as u128 - i as u128 + j as u128) / j as u128;
    }
    acc as u64
}

/// Cardinalities of the `k` largest levels of `2^[n]`, sorted ascending.
///
/// Ties between `C(n,i)` and `C(n,n−i)` are broken toward the smaller
/// cardinality, so the selection is deterministic and always forms a
/// contiguous band around the middle.
pub fn largest_levels(n: u32, k: u32) -> Result<Vec<u32>> {
    if k < 1 || k > n + 1 {
        return Err(Error::invalid(format!(
            "level count must be in 1..={}, got {k}",
            n + 1
        )));
    }
    let mut idx: Vec<u32> = (0..=n).collect();
    idx.sort_by_key(|&i| (std::cmp::Reverse(binomial(n, i as i64)), i));
    let mut chosen: Vec<u32> = idx.into_iter().take(k as usize).collect();
    chosen.sort_unstable();
    debug_assert!(chosen.windows(2).all(|w| w[1] == w[0] + 1));
    Ok(chosen)
}

/// `Σ(n,k)`: the sum of the sizes of the `k` largest levels of `2^[n]`.
pub fn sigma_levels(n: u32, k: u32) -> Result<u64> {
    let levels = largest_levels(n, k)?;
    Ok(levels.iter().map(|&i| binomial(n, i as i64)).sum())
}

/// The union of the `k` largest levels of `2^[n]` as a family.
pub fn k_middle_levels(ground: GroundSet, k: u32) -> Result<SetFamily> {
    let n = ground.n();
    let levels = largest_levels(n, k)?;
    let mut members = Vec::new();
    for i in levels {
        members.extend(ground.level(i));
    }
    SetFamily::new(ground, members)
}

/// The Katona–Tarján construction: all `⌊(n−1)/2⌋`-subsets of `[n−1]`,
/// together with each of them extended by the element `n`. The result has
/// `2·C(n−1, ⌊(n−1)/2⌋)` members and contains no V and no Λ, even in the
/// weak sense.
pub fn katona_tarjan_construction(ground: GroundSet) -> SetFamily {
    let n = ground.n();
    let half = (n - 1) / 2;
    let inner = GroundSet { n: n - 1 };
    let mut members = Vec::new();
    for w in inner.level(half) {
        members.push(w);
        members.push(w.with_element(n));
    }
    SetFamily::new(ground, members).expect("construction stays inside the ground set")
}

/// Parses the family file format.
///
/// The format is UTF-8 text, one set per line: elements as base-10
/// integers joined by commas, a single `-` for the empty set. Lines
/// starting with `#` are comments, blank lines are ignored, and the first
/// significant line must be the header `n=<int>`.
pub fn parse_family(text: &str) -> Result<SetFamily> {
    let mut ground: Option<GroundSet> = None;
    let mut members: Vec<(SubsetWord, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some(g) = ground else {
            let Some(value) = line.strip_prefix("n=") else {
                return Err(Error::parse(lineno, "expected header \"n=<int>\""));
            };
            let n: u32 = value
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid ground set size {value:?}")))?;
            ground = Some(GroundSet::new(n).map_err(|e| Error::parse(lineno, e.to_string()))?);
            continue;
        };
        let word = if line == "-" {
            SubsetWord::EMPTY
        } else {
            let mut bits = 0u64;
            for token in line.split(',') {
                let token = token.trim();
                let e: u32 = token.parse().map_err(|_| {
                    Error::parse(lineno, format!("malformed element {token:?}"))
                })?;
                if e < 1 || e > g.n() {
                    return Err(Error::parse(
                        lineno,
                        format!("element {e} out of range 1..={}", g.n()),
                    ));
                }
                let bit = 1u64 << (e - 1);
                if bits & bit != 0 {
                    return Err(Error::parse(lineno, format!("duplicate element {e}")));
                }
                bits |= bit;
            }
            SubsetWord(bits)
        };
        if let Some((_, first)) = members.iter().find(|(w, _)| *w == word) {
            return Err(Error::parse(
                lineno,
                format!("duplicate set {word} (first seen on line {first})"),
            ));
        }
        members.push((word, lineno));
    }
    let Some(ground) = ground else {
        return Err(Error::parse(
            text.lines().count().max(1),
            "missing header \"n=<int>\"",
        ));
    };
    SetFamily::new(ground, members.into_iter().map(|(w, _)| w))
}

/// Serializes a family in the file format; `parse_family` round-trips it
/// bit-exactly.
pub fn serialize_family(fam: &SetFamily) -> String {
    let mut out = String::new();
    out.push_str(&format!("n={}\n", fam.n()));
    for w in fam.iter() {
        out.push_str(&w.to_line());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: u32) -> GroundSet {
        GroundSet::new(n).unwrap()
    }

    fn fam(n: u32, sets: &[&[u32]]) -> SetFamily {
        SetFamily::new(g(n), sets.iter().map(|s| SubsetWord::from_elements(s))).unwrap()
    }

    #[test]
    fn binomial_small_cases() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(3, -1), 0);
        assert_eq!(binomial(63, 31), 916312070471295267);
    }

    #[test]
    fn sigma_levels_small_cases() {
        assert_eq!(sigma_levels(4, 2).unwrap(), 10);
        assert_eq!(sigma_levels(3, 2).unwrap(), 6);
        assert_eq!(sigma_levels(5, 3).unwrap(), 25);
        assert!(sigma_levels(4, 6).is_err());
        assert!(sigma_levels(4, 0).is_err());
    }

    #[test]
    fn middle_levels_tie_breaks_low() {
        // n=4, k=2: C(4,1) = C(4,3) ties; the lower level wins.
        let m = k_middle_levels(g(4), 2).unwrap();
        assert_eq!(m.len(), 10);
        let mut expected = Vec::new();
        for bits in 0u64..16 {
            let w = SubsetWord::from_bits(bits);
            if w.cardinality() == 1 || w.cardinality() == 2 {
                expected.push(w);
            }
        }
        let expected = SetFamily::new(g(4), expected).unwrap();
        assert_eq!(m, expected);

        let m32 = k_middle_levels(g(3), 2).unwrap();
        assert_eq!(m32.len(), 6);
        assert!(m32.iter().all(|w| (1..=2).contains(&w.cardinality())));

        let m21 = k_middle_levels(g(2), 1).unwrap();
        assert_eq!(m21, fam(2, &[&[1], &[2]]));
    }

    #[test]
    fn middle_levels_size_matches_sigma_exhaustively() {
        for n in 2..=12 {
            for k in 1..=n + 1 {
                let m = k_middle_levels(g(n), k).unwrap();
                assert_eq!(m.len() as u64, sigma_levels(n, k).unwrap(), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn katona_tarjan_small_cases() {
        let kt3 = katona_tarjan_construction(g(3));
        assert_eq!(kt3, fam(3, &[&[1], &[2], &[1, 3], &[2, 3]]));
        // n=2: the half-level of [1] is the empty set, so the family is
        // {∅, {2}}, of size 2·C(1,0).
        let kt2 = katona_tarjan_construction(g(2));
        assert_eq!(kt2, fam(2, &[&[], &[2]]));
        let kt4 = katona_tarjan_construction(g(4));
        assert_eq!(kt4.len() as u64, 2 * binomial(3, 1));
    }

    #[test]
    fn complement_small_cases() {
        let f = fam(3, &[&[1]]);
        assert_eq!(f.complement_family(), fam(3, &[&[2, 3]]));
        let e = SetFamily::empty(g(3));
        assert_eq!(e.complement_family(), e);
        let m = k_middle_levels(g(4), 2).unwrap();
        let c = m.complement_family();
        assert!(c.iter().all(|w| (2..=3).contains(&w.cardinality())));
        assert_eq!(c.len(), 10);
        assert_eq!(c.complement_family(), m);
    }

    #[test]
    fn parse_family_basics() {
        let f = parse_family("n=3\n1,2\n3\n").unwrap();
        assert_eq!(f, fam(3, &[&[1, 2], &[3]]));
        let f = parse_family("# header comment\nn=3\n-\n").unwrap();
        assert_eq!(f.members(), &[SubsetWord::EMPTY]);
    }

    #[test]
    fn parse_family_errors_carry_line_numbers() {
        match parse_family("n=4\n5\n") {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("out of range"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_family("n=3\n1\n1\n") {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("duplicate set"), "{msg}");
            }
            other => panic!("expected duplicate error, got {other:?}"),
        }
        match parse_family("n=3\n1,x\n") {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("malformed"), "{msg}");
            }
            other => panic!("expected malformed error, got {other:?}"),
        }
        assert!(parse_family("1,2\n").is_err());
        assert!(parse_family("n=64\n").is_err());
    }

    #[test]
    fn serialize_then_parse_round_trips() {
        let f = fam(4, &[&[], &[2], &[1, 4], &[1, 2, 3]]);
        let text = serialize_family(&f);
        assert_eq!(parse_family(&text).unwrap(), f);
        assert_eq!(text, "n=4\n-\n2\n1,4\n1,2,3\n");
    }

    #[test]
    fn level_profile_full_levels() {
        let m = k_middle_levels(g(4), 2).unwrap();
        let p = m.level_profile();
        assert_eq!(p.sizes(), &[0, 4, 6, 0, 0]);
        assert_eq!(p.full_levels(), Some(vec![1, 2]));
        let partial = fam(4, &[&[1], &[2]]);
        assert_eq!(partial.level_profile().full_levels(), None);
    }
}
