//! Finite poset patterns and weak/induced subposet embedding search.
//!
//! A pattern is a strict partial order on a few elements given by its full
//! relation matrix. Families of sets are treated as posets under strict
//! containment; an embedding maps pattern elements injectively to family
//! members so that relations are preserved (weak mode) or preserved and
//! reflected (induced mode).

use std::fmt;

use crate::lattice::{SetFamily, SubsetWord};
use crate::{Error, Result};

/// Structural identity of a constructed pattern, kept alongside the
/// relation matrix so specialized freeness checkers can recognize the
/// standard shapes.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum PatternKind {
    Chain(u32),
    V,
    Lambda,
    Y(u32),
    YPrime(u32),
    Butterfly,
}

impl PatternKind {
    pub fn dual(self) -> PatternKind {
        match self {
            PatternKind::Chain(k) => PatternKind::Chain(k),
            PatternKind::V => PatternKind::Lambda,
            PatternKind::Lambda => PatternKind::V,
            PatternKind::Y(k) => PatternKind::YPrime(k),
            PatternKind::YPrime(k) => PatternKind::Y(k),
            PatternKind::Butterfly => PatternKind::Butterfly,
        }
    }
}

/// A strict partial order on `size` elements: `less(a, b)` means `a < b`.
///
/// Two patterns compare equal when they have the same size and relation
/// matrix; labels and element names are presentation only.
#[derive(Clone)]
pub struct PosetPattern {
    size: usize,
    less: Vec<bool>,
    label: String,
    names: Vec<String>,
    kind: PatternKind,
}

impl PartialEq for PosetPattern {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size && self.less == other.less
    }
}

impl Eq for PosetPattern {}

impl fmt::Debug for PosetPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PosetPattern({})", self.label)
    }
}

impl PosetPattern {
    fn build(
        size: usize,
        relations: &[(usize, usize)],
        label: String,
        names: Vec<String>,
        kind: PatternKind,
    ) -> Self {
        let mut less = vec![false; size * size];
        for &(a, b) in relations {
            less[a * size + b] = true;
        }
        let p = PosetPattern {
            size,
            less,
            label,
            names,
            kind,
        };
        p.validate().expect("constructed pattern is a strict order");
        p
    }

    /// Total order `c1 < c2 < … < ck`.
    pub fn chain(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("chain length must be at least 1"));
        }
        let k = k as usize;
        let mut rel = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                rel.push((i, j));
            }
        }
        let names = (1..=k).map(|i| format!("c{i}")).collect();
        Ok(Self::build(
            k,
            &rel,
            format!("chain:{k}"),
            names,
            PatternKind::Chain(k as u32),
        ))
    }

    /// `x < y` and `x < z`; `y`, `z` incomparable.
    pub fn v() -> Self {
        Self::build(
            3,
            &[(0, 1), (0, 2)],
            "v".into(),
            vec!["x".into(), "y".into(), "z".into()],
            PatternKind::V,
        )
    }

    /// `x < z` and `y < z`; `x`, `y` incomparable.
    pub fn lambda() -> Self {
        Self::build(
            3,
            &[(0, 2), (1, 2)],
            "lambda".into(),
            vec!["x".into(), "y".into(), "z".into()],
            PatternKind::Lambda,
        )
    }

    /// `x1 < x2 < … < xk < y, z` with `y`, `z` incomparable. `y(1)` is the
    /// same poset as [`PosetPattern::v`], so the two-pattern theorems share
    /// one code path.
    pub fn y(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("y pattern needs a chain of length at least 1"));
        }
        let k = k as usize;
        let size = k + 2;
        let mut rel = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                rel.push((i, j));
            }
            rel.push((i, k));
            rel.push((i, k + 1));
        }
        let mut names: Vec<String> = (1..=k).map(|i| format!("x{i}")).collect();
        names.push("y".into());
        names.push("z".into());
        Ok(Self::build(
            size,
            &rel,
            format!("y:{k}"),
            names,
            PatternKind::Y(k as u32),
        ))
    }

    /// The dual of [`PosetPattern::y`]: all relations reversed.
    pub fn yprime(k: u32) -> Result<Self> {
        let mut p = Self::y(k)?.dual();
        p.label = format!("yprime:{k}");
        Ok(p)
    }

    /// The butterfly: `w, x < y, z`.
    pub fn butterfly() -> Self {
        Self::build(
            4,
            &[(0, 2), (0, 3), (1, 2), (1, 3)],
            "butterfly".into(),
            vec!["w".into(), "x".into(), "y".into(), "z".into()],
            PatternKind::Butterfly,
        )
    }

    /// Parses a pattern spec string: `chain:k`, `v`, `lambda`, `y:k`,
    /// `yprime:k`, or `butterfly`.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (head, arg) = match spec.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (spec, None),
        };
        let parse_k = |arg: Option<&str>| -> Result<u32> {
            let Some(arg) = arg else {
                return Err(Error::invalid(format!("pattern {head:?} needs :k")));
            };
            arg.parse()
                .map_err(|_| Error::invalid(format!("invalid pattern parameter {arg:?}")))
        };
        match head {
            "chain" => Self::chain(parse_k(arg)?),
            "v" if arg.is_none() => Ok(Self::v()),
            "lambda" if arg.is_none() => Ok(Self::lambda()),
            "y" => Self::y(parse_k(arg)?),
            "yprime" => Self::yprime(parse_k(arg)?),
            "butterfly" if arg.is_none() => Ok(Self::butterfly()),
            _ => Err(Error::invalid(format!("unknown pattern spec {spec:?}"))),
        }
    }

    /// Parses a comma-separated list of pattern specs.
    pub fn parse_spec_list(list: &str) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        for part in list.split(',') {
            if part.trim().is_empty() {
                return Err(Error::invalid("empty pattern spec in list"));
            }
            out.push(Self::parse_spec(part)?);
        }
        if out.is_empty() {
            return Err(Error::invalid("empty pattern list"));
        }
        Ok(out)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn less(&self, a: usize, b: usize) -> bool {
        self.less[a * self.size + b]
    }

    pub fn related(&self, a: usize, b: usize) -> bool {
        self.less(a, b) || self.less(b, a)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, a: usize) -> &str {
        &self.names[a]
    }

    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    /// Transpose of the relation matrix. `dual(dual(p)) == p`.
    pub fn dual(&self) -> Self {
        let size = self.size;
        let mut less = vec![false; size * size];
        for a in 0..size {
            for b in 0..size {
                less[b * size + a] = self.less[a * size + b];
            }
        }
        PosetPattern {
            size,
            less,
            label: format!("dual({})", self.label),
            names: self.names.clone(),
            kind: self.kind.dual(),
        }
    }

    /// Checks irreflexivity, antisymmetry, and transitivity.
    pub fn validate(&self) -> Result<()> {
        let m = self.size;
        for a in 0..m {
            if self.less(a, a) {
                return Err(Error::invalid(format!("relation not irreflexive at {a}")));
            }
            for b in 0..m {
                if self.less(a, b) && self.less(b, a) {
                    return Err(Error::invalid(format!(
                        "relation not antisymmetric at ({a},{b})"
                    )));
                }
                for c in 0..m {
                    if self.less(a, b) && self.less(b, c) && !self.less(a, c) {
                        return Err(Error::invalid(format!(
                            "relation not transitive at ({a},{b},{c})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Length of the longest chain strictly below `a`.
    fn depth_below(&self, a: usize) -> u32 {
        let mut memo = vec![u32::MAX; self.size];
        self.depth_below_memo(a, &mut memo)
    }

    fn depth_below_memo(&self, a: usize, memo: &mut [u32]) -> u32 {
        if memo[a] != u32::MAX {
            return memo[a];
        }
        let mut best = 0;
        for b in 0..self.size {
            if self.less(b, a) {
                best = best.max(1 + self.depth_below_memo(b, memo));
            }
        }
        memo[a] = best;
        best
    }

    fn depth_above(&self, a: usize) -> u32 {
        self.dual().depth_below(a)
    }

    /// Poset isomorphism test by backtracking; patterns here are tiny.
    pub fn is_isomorphic_to(&self, other: &Self) -> bool {
        if self.size != other.size {
            return false;
        }
        let m = self.size;
        let sig = |p: &PosetPattern, a: usize| {
            let below: usize = (0..m).filter(|&b| p.less(b, a)).count();
            let above: usize = (0..m).filter(|&b| p.less(a, b)).count();
            (below, above)
        };
        let mut map = vec![usize::MAX; m];
        let mut used = vec![false; m];
        fn assign(
            p: &PosetPattern,
            q: &PosetPattern,
            sig_p: &[(usize, usize)],
            sig_q: &[(usize, usize)],
            map: &mut [usize],
            used: &mut [bool],
            a: usize,
        ) -> bool {
            let m = p.size;
            if a == m {
                return true;
            }
            for b in 0..m {
                if used[b] || sig_p[a] != sig_q[b] {
                    continue;
                }
                let consistent = (0..a).all(|prev| {
                    p.less(prev, a) == q.less(map[prev], b)
                        && p.less(a, prev) == q.less(b, map[prev])
                });
                if consistent {
                    map[a] = b;
                    used[b] = true;
                    if assign(p, q, sig_p, sig_q, map, used, a + 1) {
                        return true;
                    }
                    used[b] = false;
                    map[a] = usize::MAX;
                }
            }
            false
        }
        let sig_p: Vec<_> = (0..m).map(|a| sig(self, a)).collect();
        let sig_q: Vec<_> = (0..m).map(|a| sig(other, a)).collect();
        {
            let mut sp = sig_p.clone();
            let mut sq = sig_q.clone();
            sp.sort_unstable();
            sq.sort_unstable();
            if sp != sq {
                return false;
            }
        }
        assign(self, other, &sig_p, &sig_q, &mut map, &mut used, 0)
    }

    /// Static search order: most-constrained element first, then elements
    /// with the most already-ordered neighbors. Ties break on total degree
    /// and then on index, so the order (and with it the canonical
    /// embedding) is deterministic.
    fn search_order(&self) -> Vec<usize> {
        let m = self.size;
        let deg: Vec<usize> = (0..m)
            .map(|a| (0..m).filter(|&b| self.related(a, b)).count())
            .collect();
        let mut order: Vec<usize> = Vec::with_capacity(m);
        let mut placed = vec![false; m];
        for _ in 0..m {
            let mut best: Option<(usize, usize, usize)> = None;
            for a in 0..m {
                if placed[a] {
                    continue;
                }
                let adj = order.iter().filter(|&&b| self.related(a, b)).count();
                // third component inverts the index so that ties go to the
                // lowest-numbered element under max-comparison
                let key = (adj, deg[a], m - a);
                if best.is_none_or(|b| key > b) {
                    best = Some(key);
                }
            }
            let (_, _, inv_idx) = best.unwrap();
            let a = m - inv_idx;
            placed[a] = true;
            order.push(a);
        }
        order
    }
}

/// A witness injection from pattern elements to family member indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Embedding {
    map: Vec<usize>,
    induced: bool,
}

impl Embedding {
    pub fn new(map: Vec<usize>, induced: bool) -> Self {
        Embedding { map, induced }
    }

    /// `map()[a]` is the family index of pattern element `a`.
    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn is_induced(&self) -> bool {
        self.induced
    }

    /// Re-checks the embedding against a family from scratch: injectivity,
    /// order preservation, and (in induced mode) order reflection.
    pub fn validate(&self, fam: &SetFamily, pattern: &PosetPattern) -> std::result::Result<(), String> {
        let m = pattern.size();
        if self.map.len() != m {
            return Err(format!("map has {} entries, pattern has {m}", self.map.len()));
        }
        for (a, &fa) in self.map.iter().enumerate() {
            if fa >= fam.len() {
                return Err(format!("element {a} maps outside the family"));
            }
            for (b, &fb) in self.map.iter().enumerate() {
                if a == b {
                    continue;
                }
                if fa == fb {
                    return Err(format!("elements {a} and {b} map to the same member"));
                }
                let wa = fam.member(fa);
                let wb = fam.member(fb);
                if pattern.less(a, b) && !wa.is_proper_subset_of(&wb) {
                    return Err(format!(
                        "{} < {} not preserved: {wa} ⊄ {wb}",
                        pattern.name(a),
                        pattern.name(b)
                    ));
                }
                if self.induced && !pattern.related(a, b) && wa.is_comparable_with(&wb) {
                    return Err(format!(
                        "{} ∥ {} not reflected: {wa} and {wb} are comparable",
                        pattern.name(a),
                        pattern.name(b)
                    ));
                }
            }
        }
        Ok(())
    }

    /// Human-readable `name -> set` rendering, one pair per line.
    pub fn render(&self, fam: &SetFamily, pattern: &PosetPattern) -> String {
        let mut out = String::new();
        for (a, &fa) in self.map.iter().enumerate() {
            out.push_str(&format!(
                "{} -> {}\n",
                pattern.name(a),
                fam.member(fa).to_line()
            ));
        }
        out
    }
}

struct EmbedSearch<'a> {
    words: &'a [SubsetWord],
    pattern: &'a PosetPattern,
    induced: bool,
    order: Vec<usize>,
    min_card: Vec<u32>,
    max_card: Vec<i64>,
    assignment: Vec<usize>,
    used: Vec<bool>,
}

impl<'a> EmbedSearch<'a> {
    fn new(n: u32, words: &'a [SubsetWord], pattern: &'a PosetPattern, induced: bool) -> Self {
        let m = pattern.size();
        let min_card = (0..m).map(|a| pattern.depth_below(a)).collect();
        // may go negative when the pattern is taller than the ground set,
        // in which case no candidate passes
        let max_card = (0..m)
            .map(|a| n as i64 - pattern.depth_above(a) as i64)
            .collect();
        EmbedSearch {
            words,
            pattern,
            induced,
            order: pattern.search_order(),
            min_card,
            max_card,
            assignment: vec![usize::MAX; m],
            used: vec![false; words.len()],
        }
    }

    fn candidate_ok(&self, a: usize, f: usize) -> bool {
        let w = self.words[f];
        let card = w.cardinality();
        if card < self.min_card[a] || card as i64 > self.max_card[a] {
            return false;
        }
        for b in 0..self.pattern.size() {
            let fb = self.assignment[b];
            if fb == usize::MAX || b == a {
                continue;
            }
            let wb = self.words[fb];
            if self.pattern.less(a, b) {
                if !w.is_proper_subset_of(&wb) {
                    return false;
                }
            } else if self.pattern.less(b, a) {
                if !wb.is_proper_subset_of(&w) {
                    return false;
                }
            } else if self.induced && w.is_comparable_with(&wb) {
                return false;
            }
        }
        true
    }

    fn search(&mut self, pos: usize) -> bool {
        if pos == self.order.len() {
            return true;
        }
        let a = self.order[pos];
        if self.assignment[a] != usize::MAX {
            return self.search(pos + 1);
        }
        for f in 0..self.words.len() {
            if self.used[f] || !self.candidate_ok(a, f) {
                continue;
            }
            self.assignment[a] = f;
            self.used[f] = true;
            if self.search(pos + 1) {
                return true;
            }
            self.used[f] = false;
            self.assignment[a] = usize::MAX;
        }
        false
    }

    fn search_pinned(mut self, forced: usize) -> Option<Vec<usize>> {
        for a in 0..self.pattern.size() {
            if !self.candidate_ok(a, forced) {
                continue;
            }
            self.assignment[a] = forced;
            self.used[forced] = true;
            if self.search(0) {
                return Some(self.assignment);
            }
            self.used[forced] = false;
            self.assignment[a] = usize::MAX;
        }
        None
    }
}

/// Searches for a (weak or induced) embedding of `pattern` into `fam`.
///
/// Returns the lexicographically least embedding with respect to the
/// module's canonical element order, or `None` if the pattern does not
/// embed.
pub fn find_embedding(fam: &SetFamily, pattern: &PosetPattern, induced: bool) -> Option<Embedding> {
    if pattern.size() > fam.len() {
        return None;
    }
    let mut s = EmbedSearch::new(fam.n(), fam.members(), pattern, induced);
    if s.search(0) {
        Some(Embedding::new(s.assignment, induced))
    } else {
        None
    }
}

/// Embedding existence over a raw word slice (members need not be sorted).
pub(crate) fn embeds_words(
    n: u32,
    words: &[SubsetWord],
    pattern: &PosetPattern,
    induced: bool,
) -> bool {
    if pattern.size() > words.len() {
        return false;
    }
    let mut s = EmbedSearch::new(n, words, pattern, induced);
    s.search(0)
}

/// Embedding existence where the image must include `words[forced]`.
/// Sound as an incremental check: if the family minus that member is
/// free, any new copy must use it.
pub(crate) fn embeds_words_using(
    n: u32,
    words: &[SubsetWord],
    pattern: &PosetPattern,
    induced: bool,
    forced: usize,
) -> bool {
    if pattern.size() > words.len() {
        return false;
    }
    EmbedSearch::new(n, words, pattern, induced)
        .search_pinned(forced)
        .is_some()
}

/// Like [`find_embedding`], but only considers embeddings whose image
/// includes the family member at `forced`.
#[cfg(test)]
pub(crate) fn find_embedding_using(
    fam: &SetFamily,
    pattern: &PosetPattern,
    induced: bool,
    forced: usize,
) -> Option<Embedding> {
    if pattern.size() > fam.len() {
        return None;
    }
    EmbedSearch::new(fam.n(), fam.members(), pattern, induced)
        .search_pinned(forced)
        .map(|map| Embedding::new(map, induced))
}

/// True iff no pattern in the list embeds into the family.
pub fn is_free(fam: &SetFamily, patterns: &[PosetPattern], induced: bool) -> bool {
    patterns
        .iter()
        .all(|p| find_embedding(fam, p, induced).is_none())
}
