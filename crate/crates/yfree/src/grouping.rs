//! Weight certificates over the `2n` interval chains.
//!
//! For a family `A` and permutation `π`, let `F = A ∩ I(n)^π`. The builder
//! partitions all chains whose trace is longer than `k` into groupings of
//! three types, so that the summed weight `Σ (ℓ(C) − k)` over every chain
//! is nonpositive — which is equivalent to `|F| ≤ kn`. Whenever a
//! structural step fails, the input family cannot be induced
//! {Y_k, Y_k′}-free, and the builder returns a concrete embedding that
//! proves it instead of a certificate.
//!
//! [`verify_certificate`] is an independent re-checker: it recomputes
//! every trace, `h`, `m`, `t`, and weight from the family and compares
//! them against the certificate's claims, then checks the grouping graph
//! and all weight sums.

use std::fmt;

use crate::cyclic::{
    chain, intervals, trace, ChainTrace, CyclicInterval, CyclicPermutation, Direction,
    IntervalChain,
};
use crate::lattice::{SetFamily, SubsetWord};
use crate::pattern::{Embedding, PosetPattern};
use crate::{Error, Result};

type StdResult<T, E> = std::result::Result<T, E>;

/// Identity of one of the `2n` chains: ascending anchors come first in the
/// canonical index order, then descending anchors.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChainId {
    pub direction: Direction,
    pub anchor: u32,
}

impl ChainId {
    pub fn new(direction: Direction, anchor: u32) -> Self {
        ChainId { direction, anchor }
    }

    pub fn index(&self, n: u32) -> usize {
        match self.direction {
            Direction::Ascending => (self.anchor - 1) as usize,
            Direction::Descending => (n + self.anchor - 1) as usize,
        }
    }

    pub fn from_index(n: u32, idx: usize) -> Self {
        let idx = idx as u32;
        if idx < n {
            ChainId::new(Direction::Ascending, idx + 1)
        } else {
            ChainId::new(Direction::Descending, idx - n + 1)
        }
    }
}

impl fmt::Display for ChainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.direction.token(), self.anchor)
    }
}

/// Classification of a chain by trace length and `h`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ChainClass {
    Plain,
    Type1,
    Type2,
    Type3,
}

/// Classifies by the thresholds: plain when `ℓ ≤ k`; type 1 when
/// `h ≥ k−1`; type 2 when `ℓ ≥ 2k−1−h` with `h ≤ k−2`; type 3 when
/// `k+1 ≤ ℓ ≤ 2k−2−h` with `h ≤ k−2`.
pub fn classify_chain(t: &ChainTrace, h: usize, k: u32) -> ChainClass {
    classify_len(t.len(), h, k)
}

pub(crate) fn classify_len(len: usize, h: usize, k: u32) -> ChainClass {
    assert!(k >= 2, "classification needs k >= 2");
    let k = k as usize;
    if len <= k {
        ChainClass::Plain
    } else if h >= k - 1 {
        ChainClass::Type1
    } else if len >= 2 * k - 1 - h {
        ChainClass::Type2
    } else {
        debug_assert!(len <= 2 * k - 2 - h);
        ChainClass::Type3
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum GroupKind {
    Type1,
    Type2,
    Type3,
}

impl GroupKind {
    pub fn number(&self) -> u32 {
        match self {
            GroupKind::Type1 => 1,
            GroupKind::Type2 => 2,
            GroupKind::Type3 => 3,
        }
    }

    pub fn from_number(v: u32) -> Result<Self> {
        match v {
            1 => Ok(GroupKind::Type1),
            2 => Ok(GroupKind::Type2),
            3 => Ok(GroupKind::Type3),
            _ => Err(Error::invalid(format!("unknown grouping kind {v}"))),
        }
    }
}

/// A bundle of chains with its weight `w(E) = Σ (ℓ(C) − k)`.
///
/// The first chain is the initiating chain. Types 1 and 2 carry the
/// surplus parameter `r`; type 3 carries the `m` and `t` sequences of its
/// walk (`t` omits the final chain when the walk ended by absorbing it).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grouping {
    pub kind: GroupKind,
    pub chains: Vec<ChainId>,
    pub h_first: usize,
    pub r: Option<usize>,
    pub m: Vec<usize>,
    pub t: Vec<usize>,
    pub weight: i64,
}

/// Directed graph on groupings: `(from, to)` when `from`'s walk terminated
/// on a chain owned by `to`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CertificateGraph {
    pub edges: Vec<(usize, usize)>,
}

impl CertificateGraph {
    pub fn out_edge(&self, node: usize) -> Option<usize> {
        self.edges.iter().find(|(f, _)| *f == node).map(|&(_, t)| t)
    }

    pub fn in_edge(&self, node: usize) -> Option<usize> {
        self.edges.iter().find(|(_, t)| *t == node).map(|&(f, _)| f)
    }
}

/// The full certificate: groupings, graph, leftover short chains, and the
/// accounting that yields `|F| ≤ kn`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleCertificate {
    pub n: u32,
    pub k: u32,
    pub pi: CyclicPermutation,
    /// `|F| = |A ∩ I(n)^π|`.
    pub count: usize,
    /// `kn`.
    pub bound: usize,
    /// `Σ (ℓ(C) − k)` over all `2n` chains; equals `2·count − 2·bound`.
    pub total_weight: i64,
    pub groupings: Vec<Grouping>,
    pub graph: CertificateGraph,
    pub ungrouped: Vec<ChainId>,
}

/// Proof that the input family was not induced {Y_k, Y_k′}-free: a
/// validated induced embedding, plus which structural claim exposed it.
#[derive(Clone, Debug)]
pub struct FreenessViolation {
    pub pattern: PosetPattern,
    pub embedding: Embedding,
    pub provenance: String,
}

impl FreenessViolation {
    /// Re-validates the embedding against the family from scratch.
    pub fn validate(&self, fam: &SetFamily) -> StdResult<(), String> {
        if !self.embedding.is_induced() {
            return Err("violation embedding is not flagged induced".into());
        }
        self.embedding.validate(fam, &self.pattern)
    }
}

/// Result of building a certificate.
#[derive(Clone, Debug)]
pub enum CertifyOutcome {
    Certificate(CycleCertificate),
    Violation(FreenessViolation),
}

/// Result of building a single grouping.
#[derive(Clone, Debug)]
pub enum StepResult {
    Built {
        grouping: Grouping,
        /// For a type-3 walk that stopped on an already-consumed chain:
        /// that chain. `None` for types 1/2 and absorbed walks.
        encountered: Option<ChainId>,
    },
    Violation(FreenessViolation),
}

/// Precomputed traces, `h` values, and crossing structure for all `2n`
/// chains of one `(A, k, π)` instance.
pub struct ChainSystem {
    family: SetFamily,
    k: u32,
    pi: CyclicPermutation,
    chains: Vec<IntervalChain>,
    traces: Vec<ChainTrace>,
    hs: Vec<Option<usize>>,
    f_count: usize,
}

impl ChainSystem {
    pub fn new(a: &SetFamily, k: u32, pi: &CyclicPermutation) -> Result<Self> {
        let n = a.n();
        if k < 2 {
            return Err(Error::invalid(format!("certificates need k >= 2, got {k}")));
        }
        if n < k + 1 {
            return Err(Error::invalid(format!(
                "certificates need n >= k+1, got n={n}, k={k}"
            )));
        }
        if pi.n() != n {
            return Err(Error::invalid(format!(
                "permutation is over [{}] but the family is over [{n}]",
                pi.n()
            )));
        }
        let two_n = 2 * n as usize;
        let mut chains = Vec::with_capacity(two_n);
        for idx in 0..two_n {
            let id = ChainId::from_index(n, idx);
            chains.push(chain(pi, id.direction, id.anchor)?);
        }
        let traces: Vec<ChainTrace> = chains.iter().map(|c| trace(c, a)).collect();
        let f_count = intervals(pi)
            .iter()
            .filter(|iv| a.contains(&iv.set()))
            .count();
        let mut sys = ChainSystem {
            family: a.clone(),
            k,
            pi: pi.clone(),
            chains,
            traces,
            hs: vec![None; two_n],
            f_count,
        };
        for idx in 0..two_n {
            if sys.traces[idx].is_empty() {
                continue;
            }
            let extreme = sys.traces[idx].hit(1).clone();
            let pred = sys.crossing_index(idx, &extreme);
            let dir = sys.direction_of(idx);
            let h = sys.traces[pred]
                .hits()
                .iter()
                .filter(|z| support_side(dir, &extreme.set(), &z.set()))
                .count();
            sys.hs[idx] = Some(h);
        }
        Ok(sys)
    }

    pub fn n(&self) -> u32 {
        self.pi.n()
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn family(&self) -> &SetFamily {
        &self.family
    }

    pub fn pi(&self) -> &CyclicPermutation {
        &self.pi
    }

    pub fn chain_count(&self) -> usize {
        self.chains.len()
    }

    pub fn chain_id(&self, idx: usize) -> ChainId {
        ChainId::from_index(self.n(), idx)
    }

    pub fn chain_index(&self, id: ChainId) -> usize {
        id.index(self.n())
    }

    pub fn interval_chain(&self, idx: usize) -> &IntervalChain {
        &self.chains[idx]
    }

    pub fn trace_of(&self, idx: usize) -> &ChainTrace {
        &self.traces[idx]
    }

    pub fn h_of(&self, idx: usize) -> Option<usize> {
        self.hs[idx]
    }

    pub fn direction_of(&self, idx: usize) -> Direction {
        self.chain_id(idx).direction
    }

    /// `|F| = |A ∩ I(n)^π|`.
    pub fn f_count(&self) -> usize {
        self.f_count
    }

    pub fn class_of(&self, idx: usize) -> ChainClass {
        let len = self.traces[idx].len();
        if len <= self.k as usize {
            ChainClass::Plain
        } else {
            classify_len(len, self.hs[idx].expect("nonempty trace has h"), self.k)
        }
    }

    /// Index of the opposite-direction chain through `x`.
    pub fn crossing_index(&self, idx: usize, x: &CyclicInterval) -> usize {
        let n = self.n();
        let id = self.chain_id(idx);
        debug_assert!(self.chains[idx].contains(x));
        match id.direction {
            Direction::Ascending => ChainId::new(Direction::Descending, x.end(n)).index(n),
            Direction::Descending => ChainId::new(Direction::Ascending, x.start()).index(n),
        }
    }

    pub fn weight_of_chains(&self, idxs: &[usize]) -> i64 {
        idxs.iter()
            .map(|&c| self.traces[c].len() as i64 - self.k as i64)
            .sum()
    }

    /// `Σ (ℓ(C) − k)` over all `2n` chains; equals `2|F| − 2kn`.
    pub fn total_weight(&self) -> i64 {
        let all: Vec<usize> = (0..self.chain_count()).collect();
        self.weight_of_chains(&all)
    }

    /// True iff the chain holds a hit strictly beyond `x` on the violating
    /// side of `dir`.
    fn traces_beyond(&self, idx: usize, dir: Direction, x: &CyclicInterval) -> bool {
        self.traces[idx]
            .hits()
            .iter()
            .any(|iv| violating_side(dir, &x.set(), &iv.set()))
    }

    /// The `h` support sets of a chain: hits of the predecessor strictly
    /// beyond `C^1`, ordered toward `C^1` (ascending for an ascending
    /// chain, descending otherwise).
    fn pred_support_sets(&self, idx: usize) -> Vec<SubsetWord> {
        let tr = &self.traces[idx];
        let extreme = tr.hit(1);
        let pred = self.crossing_index(idx, extreme);
        let dir = self.direction_of(idx);
        let mut out: Vec<SubsetWord> = self.traces[pred]
            .hits()
            .iter()
            .filter(|z| support_side(dir, &extreme.set(), &z.set()))
            .map(|z| z.set())
            .collect();
        out.reverse();
        out
    }

    fn member_index(&self, w: &SubsetWord) -> usize {
        self.family
            .position(w)
            .expect("witness sets are members of the family")
    }

    /// Builds an induced Y_k violation: `chain_sets` ascending with top
    /// `x_k`, and `y`, `z` incomparable strict supersets of it.
    fn violation_pair_above(
        &self,
        chain_sets: &[SubsetWord],
        y: SubsetWord,
        z: SubsetWord,
        provenance: String,
    ) -> FreenessViolation {
        debug_assert_eq!(chain_sets.len(), self.k as usize);
        let pattern = PosetPattern::y(self.k).expect("k >= 2");
        let mut map: Vec<usize> = chain_sets.iter().map(|w| self.member_index(w)).collect();
        map.push(self.member_index(&y));
        map.push(self.member_index(&z));
        let embedding = Embedding::new(map, true);
        debug_assert_eq!(embedding.validate(&self.family, &pattern), Ok(()));
        FreenessViolation {
            pattern,
            embedding,
            provenance,
        }
    }

    /// Builds an induced Y_k′ violation: `chain_sets` descending with
    /// bottom `x_k`, and `y`, `z` incomparable strict subsets of it.
    fn violation_pair_below(
        &self,
        chain_sets: &[SubsetWord],
        y: SubsetWord,
        z: SubsetWord,
        provenance: String,
    ) -> FreenessViolation {
        debug_assert_eq!(chain_sets.len(), self.k as usize);
        let pattern = PosetPattern::yprime(self.k).expect("k >= 2");
        let mut map: Vec<usize> = chain_sets.iter().map(|w| self.member_index(w)).collect();
        map.push(self.member_index(&y));
        map.push(self.member_index(&z));
        let embedding = Embedding::new(map, true);
        debug_assert_eq!(embedding.validate(&self.family, &pattern), Ok(()));
        FreenessViolation {
            pattern,
            embedding,
            provenance,
        }
    }

    /// A second hit `z` beyond the crossing point `C^j` on the violating
    /// side: the support sets, the run `C^1..C^j`, the next hit `C^{j+1}`,
    /// and `z` assemble into an induced Y_k (ascending initiator) or Y_k′
    /// (descending).
    fn beyond_violation(
        &self,
        idx: usize,
        j: usize,
        support: &[SubsetWord],
        z: SubsetWord,
        provenance: String,
    ) -> FreenessViolation {
        let k = self.k as usize;
        let tr = &self.traces[idx];
        let mut pool: Vec<SubsetWord> = support.to_vec();
        pool.extend(tr.hits()[..j].iter().map(|iv| iv.set()));
        assert!(pool.len() >= k, "support plus run reaches k sets");
        let chain_sets = pool[pool.len() - k..].to_vec();
        assert!(j < tr.len(), "a hit past the crossing point exists");
        let y = tr.hit(j + 1).set();
        match self.direction_of(idx) {
            Direction::Ascending => self.violation_pair_above(&chain_sets, y, z, provenance),
            Direction::Descending => self.violation_pair_below(&chain_sets, y, z, provenance),
        }
    }

    /// A second hit `z` on the far side of the crossing point: the run
    /// `C^j..C^{j+k−1}` together with `C^{j−1}` and `z` assemble into the
    /// dual pattern.
    fn far_side_violation(
        &self,
        idx: usize,
        j: usize,
        z: SubsetWord,
        provenance: String,
    ) -> FreenessViolation {
        let k = self.k as usize;
        let tr = &self.traces[idx];
        assert!(j >= 2 && j + k - 1 <= tr.len(), "run fits inside the trace");
        let mut run: Vec<SubsetWord> =
            tr.hits()[j - 1..j - 1 + k].iter().map(|iv| iv.set()).collect();
        run.reverse();
        let y = tr.hit(j - 1).set();
        match self.direction_of(idx) {
            Direction::Ascending => self.violation_pair_below(&run, y, z, provenance),
            Direction::Descending => self.violation_pair_above(&run, y, z, provenance),
        }
    }

    /// The crossing chain at `C^j` must hold exactly one set of `F` (the
    /// crossing point itself); any second hit yields a violation.
    fn singleton_crossing(
        &self,
        idx: usize,
        j: usize,
        kind: GroupKind,
    ) -> StdResult<usize, Box<FreenessViolation>> {
        let tr = &self.traces[idx];
        let x = tr.hit(j).clone();
        let cross = self.crossing_index(idx, &x);
        let ctr = &self.traces[cross];
        if ctr.len() == 1 {
            debug_assert_eq!(ctr.hit(1).set(), x.set());
            return Ok(cross);
        }
        let dir = self.direction_of(idx);
        let provenance = format!(
            "type {} grouping of chain [{}]: crossing chain [{}] at {} holds {} sets of F",
            kind.number(),
            self.chain_id(idx),
            self.chain_id(cross),
            x.set(),
            ctr.len(),
        );
        // prefer a hit beyond the crossing point; taking the hit closest
        // to the crossing point keeps the witness deterministic
        let mut beyond: Option<SubsetWord> = None;
        let mut far: Option<SubsetWord> = None;
        for hit in ctr.hits() {
            let w = hit.set();
            if w == x.set() {
                continue;
            }
            if violating_side(dir, &x.set(), &w) {
                beyond = Some(w);
            } else if far.is_none() {
                far = Some(w);
            }
        }
        if let Some(z) = beyond {
            let support = self.pred_support_sets(idx);
            Err(Box::new(self.beyond_violation(
                idx,
                j,
                &support,
                z,
                provenance,
            )))
        } else {
            let z = far.expect("a second hit lies on one side");
            Err(Box::new(self.far_side_violation(idx, j, z, provenance)))
        }
    }

    fn type1_grouping(&self, idx: usize) -> StdResult<Grouping, Box<FreenessViolation>> {
        let k = self.k as usize;
        let tr = &self.traces[idx];
        let h = self.hs[idx].expect("type 1 chain has hits");
        debug_assert_eq!(self.class_of(idx), ChainClass::Type1);
        let len = tr.len();
        let r = len - k;
        let mut chains = vec![self.chain_id(idx)];
        let mut idxs = vec![idx];
        for j in 2..=r + 1 {
            let cross = self.singleton_crossing(idx, j, GroupKind::Type1)?;
            chains.push(self.chain_id(cross));
            idxs.push(cross);
        }
        let weight = self.weight_of_chains(&idxs);
        debug_assert_eq!(weight, r as i64 + r as i64 * (1 - k as i64));
        debug_assert!(weight <= 0);
        Ok(Grouping {
            kind: GroupKind::Type1,
            chains,
            h_first: h,
            r: Some(r),
            m: Vec::new(),
            t: Vec::new(),
            weight,
        })
    }

    fn type2_grouping(&self, idx: usize) -> StdResult<Grouping, Box<FreenessViolation>> {
        let k = self.k as usize;
        let tr = &self.traces[idx];
        let h = self.hs[idx].expect("type 2 chain has hits");
        debug_assert_eq!(self.class_of(idx), ChainClass::Type2);
        let len = tr.len();
        let r = len - (2 * k - 1 - h);
        let mut chains = vec![self.chain_id(idx)];
        let mut idxs = vec![idx];
        for j in (k - h)..=(k - h + r) {
            let cross = self.singleton_crossing(idx, j, GroupKind::Type2)?;
            chains.push(self.chain_id(cross));
            idxs.push(cross);
        }
        let weight = self.weight_of_chains(&idxs);
        debug_assert_eq!(
            weight,
            (k as i64 - 1 - h as i64) + r as i64 + (r as i64 + 1) * (1 - k as i64)
        );
        debug_assert!(weight <= -(h as i64));
        Ok(Grouping {
            kind: GroupKind::Type2,
            chains,
            h_first: h,
            r: Some(r),
            m: Vec::new(),
            t: Vec::new(),
            weight,
        })
    }

    /// The step-by-step type-3 walk. `consumed` must already contain every
    /// type-1/type-2 chain; the walk marks every chain it takes.
    fn type3_walk(
        &self,
        start: usize,
        consumed: &mut [bool],
    ) -> StdResult<(Grouping, Option<usize>), Box<FreenessViolation>> {
        let k = self.k as usize;
        debug_assert_eq!(self.class_of(start), ChainClass::Type3);
        debug_assert!(!consumed[start]);
        consumed[start] = true;
        let h1 = self.hs[start].expect("type 3 chain has hits");
        let mut idxs = vec![start];
        let mut ms: Vec<usize> = Vec::new();
        let mut ts: Vec<usize> = Vec::new();
        let mut support = self.pred_support_sets(start);
        let mut h_cur = h1;
        let mut cur = start;
        let mut step = 1usize;
        loop {
            let tr = &self.traces[cur];
            let len = tr.len();
            let m_cur = k - h_cur;
            ms.push(m_cur);
            if step == 1 {
                assert!((2..=k).contains(&m_cur), "m(C_1) = k - h(C_1) lies in [2, k]");
                assert!(m_cur < len, "a type 3 chain has a nonempty tail");
            } else {
                assert!(
                    (2..=k - 1).contains(&m_cur),
                    "m(C_i) = k - t(C_i-1) lies in [2, k-1]"
                );
                if m_cur >= len {
                    // absorbed: the walk ends inside this grouping
                    let weight = self.weight_of_chains(&idxs);
                    assert!(weight <= -(h1 as i64));
                    let grouping = Grouping {
                        kind: GroupKind::Type3,
                        chains: idxs.iter().map(|&i| self.chain_id(i)).collect(),
                        h_first: h1,
                        r: None,
                        m: ms,
                        t: ts,
                        weight,
                    };
                    return Ok((grouping, None));
                }
            }
            let t_cur = len - m_cur;
            assert!(
                (1..=k - 2).contains(&t_cur),
                "t(C_i) lies in [1, k-2] once types 1 and 2 are consumed"
            );
            let x = tr.hit(m_cur).clone();
            let next = self.crossing_index(cur, &x);
            let dir = self.direction_of(cur);
            // the crossing chain may hold nothing beyond the crossing point
            let beyond = self.traces[next]
                .hits()
                .iter()
                .map(|iv| iv.set())
                .rev()
                .find(|w| violating_side(dir, &x.set(), w));
            if let Some(z) = beyond {
                let provenance = format!(
                    "type 3 walk step {step}: chain [{}] crossing [{}] at {} holds {} beyond the crossing point",
                    self.chain_id(cur),
                    self.chain_id(next),
                    x.set(),
                    z,
                );
                return Err(Box::new(self.beyond_violation(
                    cur,
                    m_cur,
                    &support,
                    z,
                    provenance,
                )));
            }
            ts.push(t_cur);
            if consumed[next] {
                // the walk ran into an existing grouping
                let weight = self.weight_of_chains(&idxs);
                assert_eq!(weight, t_cur as i64 - h1 as i64);
                let grouping = Grouping {
                    kind: GroupKind::Type3,
                    chains: idxs.iter().map(|&i| self.chain_id(i)).collect(),
                    h_first: h1,
                    r: None,
                    m: ms,
                    t: ts,
                    weight,
                };
                return Ok((grouping, Some(next)));
            }
            consumed[next] = true;
            idxs.push(next);
            let mut next_support: Vec<SubsetWord> =
                tr.hits()[m_cur..].iter().map(|iv| iv.set()).collect();
            next_support.reverse();
            support = next_support;
            h_cur = t_cur;
            cur = next;
            step += 1;
        }
    }

    /// Builds the type-1 grouping initiated by `id`. Standalone entry
    /// point with precondition checks; the orchestrated build uses the
    /// internal path.
    pub fn build_type1(&self, id: ChainId) -> Result<StepResult> {
        let idx = self.chain_index(id);
        if self.class_of(idx) != ChainClass::Type1 {
            return Err(Error::invalid(format!("chain [{id}] is not type 1")));
        }
        Ok(match self.type1_grouping(idx) {
            Ok(grouping) => StepResult::Built {
                grouping,
                encountered: None,
            },
            Err(v) => StepResult::Violation(*v),
        })
    }

    /// Builds the type-2 grouping initiated by `id`.
    pub fn build_type2(&self, id: ChainId) -> Result<StepResult> {
        let idx = self.chain_index(id);
        if self.class_of(idx) != ChainClass::Type2 {
            return Err(Error::invalid(format!("chain [{id}] is not type 2")));
        }
        Ok(match self.type2_grouping(idx) {
            Ok(grouping) => StepResult::Built {
                grouping,
                encountered: None,
            },
            Err(v) => StepResult::Violation(*v),
        })
    }

    /// Runs the type-3 walk from `id`. `consumed` is indexed by canonical
    /// chain index and must already contain every type-1/type-2 chain;
    /// chains taken by the walk are added to it.
    pub fn build_type3(&self, id: ChainId, consumed: &mut [bool]) -> Result<StepResult> {
        let idx = self.chain_index(id);
        if consumed.len() != self.chain_count() {
            return Err(Error::invalid(format!(
                "consumed set must cover all {} chains",
                self.chain_count()
            )));
        }
        if self.class_of(idx) != ChainClass::Type3 {
            return Err(Error::invalid(format!("chain [{id}] is not type 3")));
        }
        if consumed[idx] {
            return Err(Error::invalid(format!("chain [{id}] is already consumed")));
        }
        for (c, &used) in consumed.iter().enumerate() {
            let class = self.class_of(c);
            if (class == ChainClass::Type1 || class == ChainClass::Type2) && !used {
                return Err(Error::invalid(
                    "type 3 walks run after all type 1/2 chains are consumed",
                ));
            }
        }
        Ok(match self.type3_walk(idx, consumed) {
            Ok((grouping, encountered)) => StepResult::Built {
                grouping,
                encountered: encountered.map(|e| self.chain_id(e)),
            },
            Err(v) => StepResult::Violation(*v),
        })
    }
}

/// `z` strictly on the side of `x` that forces a violation: above for an
/// ascending chain, below for a descending one.
fn violating_side(dir: Direction, x: &SubsetWord, z: &SubsetWord) -> bool {
    match dir {
        Direction::Ascending => x.is_proper_subset_of(z),
        Direction::Descending => z.is_proper_subset_of(x),
    }
}

/// `z` strictly on the support side of `x`: where the `h` predecessor sets
/// live.
fn support_side(dir: Direction, x: &SubsetWord, z: &SubsetWord) -> bool {
    violating_side(dir.opposite(), x, z)
}

/// Direct count of `|A ∩ I(n)^π|` against `kn`, independent of the
/// certificate machinery.
pub fn cycle_bound(a: &SetFamily, k: u32, pi: &CyclicPermutation) -> Result<(usize, usize, bool)> {
    if pi.n() != a.n() {
        return Err(Error::invalid("permutation and family sizes differ"));
    }
    let count = intervals(pi)
        .iter()
        .filter(|iv| a.contains(&iv.set()))
        .count();
    let bound = (k * a.n()) as usize;
    Ok((count, bound, count <= bound))
}

/// Builds the certificate (or a freeness violation) processing chains in
/// canonical order: type-1 groupings first, then type-2, then type-3
/// walks.
pub fn build_certificate(a: &SetFamily, k: u32, pi: &CyclicPermutation) -> Result<CertifyOutcome> {
    let order: Vec<usize> = (0..2 * a.n() as usize).collect();
    build_certificate_with_chain_order(a, k, pi, &order)
}

/// [`build_certificate`] with an explicit intra-phase chain order. The
/// resulting groupings may differ, but the bound and its validity do not
/// depend on the order.
pub fn build_certificate_with_chain_order(
    a: &SetFamily,
    k: u32,
    pi: &CyclicPermutation,
    order: &[usize],
) -> Result<CertifyOutcome> {
    let sys = ChainSystem::new(a, k, pi)?;
    let two_n = sys.chain_count();
    {
        let mut seen = vec![false; two_n];
        if order.len() != two_n {
            return Err(Error::invalid("chain order must list every chain once"));
        }
        for &c in order {
            if c >= two_n || seen[c] {
                return Err(Error::invalid("chain order must list every chain once"));
            }
            seen[c] = true;
        }
    }
    let mut consumed = vec![false; two_n];
    let mut owner: Vec<Option<usize>> = vec![None; two_n];
    let mut groupings: Vec<Grouping> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();

    fn adopt(
        sys: &ChainSystem,
        g: Grouping,
        consumed: &mut [bool],
        owner: &mut [Option<usize>],
        groupings: &mut Vec<Grouping>,
    ) -> usize {
        let gi = groupings.len();
        for id in &g.chains {
            let idx = sys.chain_index(*id);
            assert!(owner[idx].is_none(), "groupings never share a chain");
            consumed[idx] = true;
            owner[idx] = Some(gi);
        }
        groupings.push(g);
        gi
    }

    for &c in order {
        if sys.class_of(c) == ChainClass::Type1 {
            match sys.type1_grouping(c) {
                Ok(g) => {
                    adopt(&sys, g, &mut consumed, &mut owner, &mut groupings);
                }
                Err(v) => return Ok(CertifyOutcome::Violation(*v)),
            }
        }
    }
    for &c in order {
        if sys.class_of(c) == ChainClass::Type2 {
            match sys.type2_grouping(c) {
                Ok(g) => {
                    adopt(&sys, g, &mut consumed, &mut owner, &mut groupings);
                }
                Err(v) => return Ok(CertifyOutcome::Violation(*v)),
            }
        }
    }
    for &c in order {
        if sys.class_of(c) == ChainClass::Type3 && !consumed[c] {
            match sys.type3_walk(c, &mut consumed) {
                Ok((g, encountered)) => {
                    let gi = adopt(&sys, g, &mut consumed, &mut owner, &mut groupings);
                    if let Some(enc) = encountered {
                        let target = owner[enc].expect("encountered chain is owned");
                        edges.push((gi, target));
                    }
                }
                Err(v) => return Ok(CertifyOutcome::Violation(*v)),
            }
        }
    }

    let ungrouped: Vec<ChainId> = (0..two_n)
        .filter(|&c| !consumed[c])
        .map(|c| sys.chain_id(c))
        .collect();
    debug_assert!(ungrouped
        .iter()
        .all(|id| sys.trace_of(sys.chain_index(*id)).len() <= k as usize));
    let count = sys.f_count();
    let bound = (k * sys.n()) as usize;
    let total_weight = sys.total_weight();
    debug_assert_eq!(total_weight, 2 * count as i64 - 2 * bound as i64);
    Ok(CertifyOutcome::Certificate(CycleCertificate {
        n: sys.n(),
        k,
        pi: pi.clone(),
        count,
        bound,
        total_weight,
        groupings,
        graph: CertificateGraph { edges },
        ungrouped,
    }))
}

/// Outcome of [`verify_certificate`]: `ok` iff every check passed.
#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub ok: bool,
    pub diagnostics: Vec<String>,
}

/// Independently re-checks a certificate against the family: traces, `h`,
/// `m`, `t`, weights, grouping disjointness and coverage, graph degrees,
/// path and cycle weight sums, and the final bound.
pub fn verify_certificate(cert: &CycleCertificate, a: &SetFamily) -> VerifyReport {
    let mut diag: Vec<String> = Vec::new();
    let k = cert.k as usize;
    if cert.n != a.n() {
        diag.push(format!(
            "certificate is over [{}] but the family is over [{}]",
            cert.n,
            a.n()
        ));
        return VerifyReport {
            ok: false,
            diagnostics: diag,
        };
    }
    let sys = match ChainSystem::new(a, cert.k, &cert.pi) {
        Ok(sys) => sys,
        Err(e) => {
            diag.push(format!("invalid certificate parameters: {e}"));
            return VerifyReport {
                ok: false,
                diagnostics: diag,
            };
        }
    };
    let two_n = sys.chain_count();
    if cert.bound != (cert.k * cert.n) as usize {
        diag.push(format!(
            "bound field {} is not kn = {}",
            cert.bound,
            cert.k * cert.n
        ));
    }
    if cert.count != sys.f_count() {
        diag.push(format!(
            "count field {} differs from |A ∩ I(n)^pi| = {}",
            cert.count,
            sys.f_count()
        ));
    }
    if cert.total_weight != sys.total_weight() {
        diag.push(format!(
            "total weight field {} differs from recomputed {}",
            cert.total_weight,
            sys.total_weight()
        ));
    }
    if sys.f_count() > (cert.k * cert.n) as usize {
        diag.push(format!(
            "bound violated: |F| = {} exceeds kn = {}",
            sys.f_count(),
            cert.k * cert.n
        ));
    }

    // ownership: every chain in exactly one grouping or ungrouped
    let mut owner: Vec<Option<usize>> = vec![None; two_n];
    for (gi, g) in cert.groupings.iter().enumerate() {
        if g.chains.is_empty() {
            diag.push(format!("grouping {gi} has no chains"));
            continue;
        }
        for id in &g.chains {
            if id.anchor < 1 || id.anchor > cert.n {
                diag.push(format!("grouping {gi} names invalid chain [{id}]"));
                continue;
            }
            let idx = sys.chain_index(*id);
            if let Some(prev) = owner[idx] {
                diag.push(format!("chain [{id}] appears in groupings {prev} and {gi}"));
            } else {
                owner[idx] = Some(gi);
            }
        }
    }
    let mut ungrouped_mark = vec![false; two_n];
    for id in &cert.ungrouped {
        if id.anchor < 1 || id.anchor > cert.n {
            diag.push(format!("ungrouped list names invalid chain [{id}]"));
            continue;
        }
        let idx = sys.chain_index(*id);
        if ungrouped_mark[idx] {
            diag.push(format!("chain [{id}] listed ungrouped twice"));
        }
        ungrouped_mark[idx] = true;
        if let Some(gi) = owner[idx] {
            diag.push(format!("chain [{id}] is both ungrouped and in grouping {gi}"));
        }
        if sys.trace_of(idx).len() > k {
            diag.push(format!(
                "uncovered long chain: [{id}] has length {} > k but no grouping",
                sys.trace_of(idx).len()
            ));
        }
    }
    for idx in 0..two_n {
        if owner[idx].is_none() && !ungrouped_mark[idx] {
            let id = sys.chain_id(idx);
            if sys.trace_of(idx).len() > k {
                diag.push(format!(
                    "uncovered long chain: [{id}] has length {} > k but no grouping",
                    sys.trace_of(idx).len()
                ));
            } else {
                diag.push(format!("chain [{id}] is unaccounted for"));
            }
        }
    }

    // graph degrees and targets
    let mut outdeg = vec![0usize; cert.groupings.len()];
    let mut indeg = vec![0usize; cert.groupings.len()];
    for &(from, to) in &cert.graph.edges {
        if from >= cert.groupings.len() || to >= cert.groupings.len() {
            diag.push(format!("edge {from} -> {to} names a missing grouping"));
            continue;
        }
        outdeg[from] += 1;
        indeg[to] += 1;
        if cert.groupings[from].kind != GroupKind::Type3 {
            diag.push(format!("edge {from} -> {to} leaves a non-walk grouping"));
        }
        if cert.groupings[to].kind == GroupKind::Type1 {
            diag.push(format!("edge {from} -> {to} enters a type 1 grouping"));
        }
    }
    for (gi, &d) in outdeg.iter().enumerate() {
        if d > 1 {
            diag.push(format!("grouping {gi} has out-degree {d}"));
        }
    }
    for (gi, &d) in indeg.iter().enumerate() {
        if d > 1 {
            diag.push(format!("grouping {gi} has in-degree {d}"));
        }
    }

    // per-grouping re-derivation
    for (gi, g) in cert.groupings.iter().enumerate() {
        verify_grouping(&sys, cert, gi, g, &owner, &mut diag);
    }

    // path and cycle sums over the grouping graph
    verify_components(cert, &mut diag);

    let total_grouped: i64 = cert.groupings.iter().map(|g| g.weight).sum();
    let ungrouped_weight: i64 = (0..two_n)
        .filter(|&c| ungrouped_mark[c])
        .map(|c| sys.trace_of(c).len() as i64 - k as i64)
        .sum();
    if total_grouped > 0 {
        diag.push(format!("grouped weight sums to {total_grouped} > 0"));
    }
    if diag.is_empty() && total_grouped + ungrouped_weight != cert.total_weight {
        diag.push("grouping weights and ungrouped chains do not add up".into());
    }

    VerifyReport {
        ok: diag.is_empty(),
        diagnostics: diag,
    }
}

fn verify_grouping(
    sys: &ChainSystem,
    cert: &CycleCertificate,
    gi: usize,
    g: &Grouping,
    owner: &[Option<usize>],
    diag: &mut Vec<String>,
) {
    let k = cert.k as usize;
    if g.chains.is_empty() {
        return;
    }
    // invalid anchors were already flagged in the ownership pass
    if g
        .chains
        .iter()
        .any(|id| id.anchor < 1 || id.anchor > cert.n)
    {
        return;
    }
    let first = sys.chain_index(g.chains[0]);
    let ftrace = sys.trace_of(first);
    if ftrace.is_empty() {
        diag.push(format!("grouping {gi}: initiating chain has an empty trace"));
        return;
    }
    let h = sys.h_of(first).expect("nonempty trace");
    if g.h_first != h {
        diag.push(format!(
            "grouping {gi}: h mismatch (claimed {}, recomputed {h})",
            g.h_first
        ));
    }
    let idxs: Vec<usize> = g.chains.iter().map(|id| sys.chain_index(*id)).collect();
    let recomputed_weight = sys.weight_of_chains(&idxs);
    if g.weight != recomputed_weight {
        diag.push(format!(
            "grouping {gi}: weight mismatch (claimed {}, recomputed {recomputed_weight})",
            g.weight
        ));
    }
    let len = ftrace.len();
    match g.kind {
        GroupKind::Type1 => {
            if sys.class_of(first) != ChainClass::Type1 {
                diag.push(format!("grouping {gi}: initiating chain is not type 1"));
                return;
            }
            let r = len - k;
            if g.r != Some(r) {
                diag.push(format!("grouping {gi}: r mismatch (expected {r})"));
            }
            if !g.m.is_empty() || !g.t.is_empty() {
                diag.push(format!("grouping {gi}: type 1 carries no m/t sequences"));
            }
            if g.chains.len() != r + 1 {
                diag.push(format!(
                    "grouping {gi}: type 1 needs {} chains, has {}",
                    r + 1,
                    g.chains.len()
                ));
                return;
            }
            for (slot, j) in (2..=r + 1).enumerate() {
                check_crossing_slot(sys, gi, first, j, &g.chains[slot + 1], diag);
            }
            if recomputed_weight > 0 {
                diag.push(format!("grouping {gi}: type 1 weight must be <= 0"));
            }
        }
        GroupKind::Type2 => {
            if sys.class_of(first) != ChainClass::Type2 {
                diag.push(format!("grouping {gi}: initiating chain is not type 2"));
                return;
            }
            let r = len - (2 * k - 1 - h);
            if g.r != Some(r) {
                diag.push(format!("grouping {gi}: r mismatch (expected {r})"));
            }
            if !g.m.is_empty() || !g.t.is_empty() {
                diag.push(format!("grouping {gi}: type 2 carries no m/t sequences"));
            }
            if g.chains.len() != r + 2 {
                diag.push(format!(
                    "grouping {gi}: type 2 needs {} chains, has {}",
                    r + 2,
                    g.chains.len()
                ));
                return;
            }
            for (slot, j) in ((k - h)..=(k - h + r)).enumerate() {
                check_crossing_slot(sys, gi, first, j, &g.chains[slot + 1], diag);
            }
            if recomputed_weight > -(h as i64) {
                diag.push(format!("grouping {gi}: type 2 weight must be <= -h"));
            }
        }
        GroupKind::Type3 => {
            if sys.class_of(first) != ChainClass::Type3 {
                diag.push(format!("grouping {gi}: initiating chain is not type 3"));
                return;
            }
            if g.r.is_some() {
                diag.push(format!("grouping {gi}: type 3 carries no r"));
            }
            verify_walk(sys, cert, gi, g, owner, diag);
        }
    }
}

fn check_crossing_slot(
    sys: &ChainSystem,
    gi: usize,
    first: usize,
    j: usize,
    claimed: &ChainId,
    diag: &mut Vec<String>,
) {
    let tr = sys.trace_of(first);
    if j > tr.len() {
        diag.push(format!(
            "grouping {gi}: crossing position {j} outside the trace"
        ));
        return;
    }
    let x = tr.hit(j).clone();
    let expected = sys.crossing_index(first, &x);
    if sys.chain_index(*claimed) != expected {
        diag.push(format!(
            "grouping {gi}: crossing chain at position {j} should be [{}], found [{claimed}]",
            sys.chain_id(expected)
        ));
        return;
    }
    if sys.trace_of(expected).len() != 1 {
        diag.push(format!(
            "grouping {gi}: crossing chain [{claimed}] holds {} sets of F, not 1",
            sys.trace_of(expected).len()
        ));
    }
}

fn verify_walk(
    sys: &ChainSystem,
    cert: &CycleCertificate,
    gi: usize,
    g: &Grouping,
    owner: &[Option<usize>],
    diag: &mut Vec<String>,
) {
    let k = cert.k as usize;
    let s = g.chains.len();
    let has_out = cert.graph.edges.iter().any(|(f, _)| *f == gi);
    if g.m.len() != s {
        diag.push(format!(
            "grouping {gi}: m sequence has {} entries for {s} chains",
            g.m.len()
        ));
        return;
    }
    let expected_t = if has_out { s } else { s.saturating_sub(1) };
    if g.t.len() != expected_t {
        diag.push(format!(
            "grouping {gi}: t sequence has {} entries, expected {expected_t}",
            g.t.len()
        ));
        return;
    }
    let h1 = g.h_first;
    let mut h_cur = h1;
    for i in 0..s {
        let cur = sys.chain_index(g.chains[i]);
        let tr = sys.trace_of(cur);
        let len = tr.len();
        let Some(m_i) = k.checked_sub(h_cur) else {
            diag.push(format!("grouping {gi}: h exceeds k at step {}", i + 1));
            return;
        };
        if g.m[i] != m_i {
            diag.push(format!(
                "grouping {gi}: m mismatch at step {} (claimed {}, recomputed {m_i})",
                i + 1,
                g.m[i]
            ));
            return;
        }
        let in_range = if i == 0 {
            (2..=k).contains(&m_i)
        } else {
            (2..=k.saturating_sub(1)).contains(&m_i)
        };
        if !in_range {
            diag.push(format!("grouping {gi}: m out of range at step {}", i + 1));
            return;
        }
        let is_last = i == s - 1;
        if is_last && !has_out {
            // absorbed end: the last chain has no room to continue
            if i == 0 {
                diag.push(format!(
                    "grouping {gi}: a type 3 walk cannot absorb its own start"
                ));
                return;
            }
            if m_i < len {
                diag.push(format!(
                    "grouping {gi}: absorbed chain [{}] still has a tail",
                    g.chains[i]
                ));
            }
            if g.weight > -(h1 as i64) {
                diag.push(format!(
                    "grouping {gi}: absorbed walk weight must be <= -h(C_1)"
                ));
            }
            return;
        }
        if m_i >= len {
            diag.push(format!(
                "grouping {gi}: walk claims to continue past chain [{}] without a tail",
                g.chains[i]
            ));
            return;
        }
        let t_i = len - m_i;
        if g.t[i] != t_i {
            diag.push(format!(
                "grouping {gi}: t mismatch at step {} (claimed {}, recomputed {t_i})",
                i + 1,
                g.t[i]
            ));
            return;
        }
        if !(1..=k - 2).contains(&t_i) {
            diag.push(format!("grouping {gi}: t out of range at step {}", i + 1));
            return;
        }
        let x = tr.hit(m_i).clone();
        let next = sys.crossing_index(cur, &x);
        let dir = sys.direction_of(cur);
        if sys.traces_beyond(next, dir, &x) {
            diag.push(format!(
                "grouping {gi}: crossing chain [{}] holds a set beyond the crossing point",
                sys.chain_id(next)
            ));
            return;
        }
        if is_last {
            // terminated by encountering: the edge must point at the owner
            let target = cert
                .graph
                .edges
                .iter()
                .find(|(f, _)| *f == gi)
                .map(|&(_, t)| t);
            match (owner[next], target) {
                (Some(own), Some(tgt)) if own == tgt => {}
                (own, tgt) => diag.push(format!(
                    "grouping {gi}: walk ends on [{}] owned by {own:?} but edge points to {tgt:?}",
                    sys.chain_id(next)
                )),
            }
            if g.weight != t_i as i64 - h1 as i64 {
                diag.push(format!(
                    "grouping {gi}: terminating walk weight must equal t(C_s) - h(C_1)"
                ));
            }
            return;
        }
        if sys.chain_index(g.chains[i + 1]) != next {
            diag.push(format!(
                "grouping {gi}: walk step {} should continue on [{}], found [{}]",
                i + 1,
                sys.chain_id(next),
                g.chains[i + 1]
            ));
            return;
        }
        h_cur = t_i;
    }
}

fn verify_components(cert: &CycleCertificate, diag: &mut Vec<String>) {
    let g = &cert.groupings;
    let n = g.len();
    let out: Vec<Option<usize>> = (0..n).map(|i| cert.graph.out_edge(i)).collect();
    let inn: Vec<Option<usize>> = (0..n).map(|i| cert.graph.in_edge(i)).collect();
    let mut visited = vec![false; n];
    // paths start at nodes with no incoming edge
    for start in 0..n {
        if inn[start].is_some() {
            continue;
        }
        let mut total = 0i64;
        let mut cur = start;
        let mut terminal = start;
        loop {
            if visited[cur] {
                break;
            }
            visited[cur] = true;
            total += g[cur].weight;
            terminal = cur;
            match out[cur] {
                Some(next) if next != cur => cur = next,
                _ => break,
            }
        }
        if inn[terminal].is_some() && out[terminal].is_none() {
            let bound = -(g[terminal].h_first as i64);
            if g[terminal].weight > bound {
                diag.push(format!(
                    "path terminal grouping {terminal} has weight {} > -h(C_1) = {bound}",
                    g[terminal].weight
                ));
            }
        }
        if total > 0 {
            diag.push(format!(
                "path through grouping {start} has weight {total} > 0"
            ));
        }
    }
    // remaining nodes with an out-edge lie on cycles
    for start in 0..n {
        if visited[start] {
            continue;
        }
        if out[start].is_none() {
            visited[start] = true;
            if g[start].weight > 0 {
                diag.push(format!(
                    "isolated grouping {start} has weight {} > 0",
                    g[start].weight
                ));
            }
            continue;
        }
        let mut total = 0i64;
        let mut cur = start;
        loop {
            visited[cur] = true;
            total += g[cur].weight;
            let next = out[cur].expect("cycle nodes keep an out edge");
            if next == start || visited[next] {
                break;
            }
            cur = next;
        }
        if total != 0 {
            diag.push(format!(
                "cycle through grouping {start} has weight {total}, expected 0"
            ));
        }
    }
}
