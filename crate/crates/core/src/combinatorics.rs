//! Summation domains: the division map, the sets `D`, `U`, `T`,
//! quasi-simplices with their quasi-shuffle products, the decomposition of
//! `T`, and the harmonic words attached to its cells.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cyclotomic::RootOfUnity;
use crate::error::{Error, Result};

/// Euclidean division of the partial sums: `x_1 + ... + x_i = u_i p + t_i`.
pub fn div_map(x: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
    let mut s = 0;
    let mut u = Vec::with_capacity(x.len());
    let mut t = Vec::with_capacity(x.len());
    for &xi in x {
        s += xi;
        u.push(s / p);
        t.push(s % p);
    }
    (u, t)
}

/// Tuples in `[0, p^M - 1]^r` whose partial sums are all prime to `p`, in
/// lexicographic order.
pub fn enumerate_d(r: usize, p: u64, m: u32) -> DomainIter {
    DomainIter::new(r, p, p.pow(m))
}

pub struct DomainIter {
    p: u64,
    bound: u64,
    x: Vec<u64>,
    sums: Vec<u64>,
    done: bool,
    started: bool,
}

impl DomainIter {
    fn new(r: usize, p: u64, bound: u64) -> Self {
        DomainIter {
            p,
            bound,
            x: vec![0; r],
            sums: vec![0; r],
            done: r == 0,
            started: false,
        }
    }

    fn valid_from(&self, i: usize) -> bool {
        self.sums[i..].iter().all(|s| s % self.p != 0)
    }

    fn recompute(&mut self, from: usize) {
        let mut s = if from == 0 { 0 } else { self.sums[from - 1] };
        for i in from..self.x.len() {
            s += self.x[i];
            self.sums[i] = s;
        }
    }

    fn advance(&mut self) -> bool {
        let r = self.x.len();
        let mut i = r;
        while i > 0 {
            i -= 1;
            if self.x[i] + 1 < self.bound {
                self.x[i] += 1;
                for xj in &mut self.x[i + 1..] {
                    *xj = 0;
                }
                self.recompute(i);
                return true;
            }
        }
        false
    }
}

impl Iterator for DomainIter {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            if self.valid_from(0) {
                return Some(self.x.clone());
            }
        }
        loop {
            if !self.advance() {
                self.done = true;
                return None;
            }
            if self.valid_from(0) {
                return Some(self.x.clone());
            }
        }
    }
}

/// Class of an index in a partition triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Part {
    P1,
    P2,
    P3,
}

/// Ordered partition `(P1, P2, P3)` of `{1..r}`.
///
/// With `one_in_p2` set, index 1 lies in `P2` and its `u`-range starts at
/// 0, absorbing the triples with `1` in `P1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartitionTriple {
    classes: Vec<Part>,
    one_in_p2: bool,
}

impl PartitionTriple {
    pub fn new(r: usize, p1: &[usize], p2: &[usize], p3: &[usize]) -> Result<Self> {
        let mut classes = vec![None; r];
        for (set, part) in [(p1, Part::P1), (p2, Part::P2), (p3, Part::P3)] {
            for &i in set {
                if i == 0 || i > r {
                    return Err(Error::InvalidPartition(format!("index {i} outside 1..{r}")));
                }
                if classes[i - 1].is_some() {
                    return Err(Error::InvalidPartition(format!("index {i} repeated")));
                }
                classes[i - 1] = Some(part);
            }
        }
        let classes = classes
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or_else(|| Error::InvalidPartition(format!("index {} missing", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        Ok(PartitionTriple {
            classes,
            one_in_p2: false,
        })
    }

    pub fn from_classes(classes: Vec<Part>) -> Self {
        PartitionTriple {
            classes,
            one_in_p2: false,
        }
    }

    /// The same triple read with the merged convention; requires `1` in `P2`.
    pub fn merged(self) -> Result<Self> {
        if self.classes.first() != Some(&Part::P2) {
            return Err(Error::InvalidPartition(
                "merged convention needs 1 in P2".into(),
            ));
        }
        Ok(PartitionTriple {
            one_in_p2: true,
            ..self
        })
    }

    /// All `3^r` triples in lexicographic order of class vectors.
    pub fn all(r: usize) -> Vec<PartitionTriple> {
        let mut out = Vec::new();
        let parts = [Part::P1, Part::P2, Part::P3];
        let total = 3usize.pow(r as u32);
        for code in 0..total {
            let mut classes = vec![Part::P1; r];
            let mut k = code;
            for i in (0..r).rev() {
                classes[i] = parts[k % 3];
                k /= 3;
            }
            out.push(PartitionTriple::from_classes(classes));
        }
        out
    }

    /// The `3^(r-1)` triples of the merged convention.
    pub fn all_merged(r: usize) -> Vec<PartitionTriple> {
        PartitionTriple::all(r)
            .into_iter()
            .filter(|j| j.classes[0] == Part::P2)
            .map(|j| j.merged().expect("1 in P2"))
            .collect()
    }

    pub fn depth(&self) -> usize {
        self.classes.len()
    }

    pub fn is_merged(&self) -> bool {
        self.one_in_p2
    }

    /// Class of the 1-based index `i`.
    pub fn class(&self, i: usize) -> Part {
        self.classes[i - 1]
    }

    pub fn classes(&self) -> &[Part] {
        &self.classes
    }

    pub fn set(&self, part: Part) -> BTreeSet<usize> {
        (1..=self.depth()).filter(|&i| self.class(i) == part).collect()
    }

    /// `P'_i = P_i` together with the indices `j` with `j + 1` in `P_i`.
    pub fn primed(&self, part: Part) -> BTreeSet<usize> {
        let mut s = self.set(part);
        for i in self.set(part) {
            if i >= 2 {
                s.insert(i - 1);
            }
        }
        s
    }
}

impl fmt::Display for PartitionTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |s: BTreeSet<usize>| {
            let v: Vec<String> = s.iter().map(|i| i.to_string()).collect();
            format!("{{{}}}", v.join(","))
        };
        write!(
            f,
            "({},{},{})",
            show(self.set(Part::P1)),
            show(self.set(Part::P2)),
            show(self.set(Part::P3))
        )
    }
}

/// The tuples `u` of `U_{r,p^M,J}` in lexicographic order.
pub fn enumerate_u(p: u64, m: u32, j: &PartitionTriple) -> Vec<Vec<u64>> {
    let step = p.pow(m - 1);
    let r = j.depth();
    let mut out = Vec::new();
    let mut u = vec![0u64; r];
    fn rec(
        i: usize,
        prev: u64,
        j: &PartitionTriple,
        step: u64,
        u: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
    ) {
        if i == u.len() {
            out.push(u.clone());
            return;
        }
        let range = match j.classes[i] {
            Part::P1 => prev..prev + 1,
            Part::P2 if i == 0 && j.one_in_p2 => 0..step,
            Part::P2 => prev + 1..prev + step,
            Part::P3 => prev + step..prev + step + 1,
        };
        for v in range {
            u[i] = v;
            rec(i + 1, v, j, step, u, out);
        }
    }
    if r > 0 {
        rec(0, 0, j, step, &mut u, &mut out);
    }
    out
}

/// The tuples `t` of `T_{r,J}` in lexicographic order, with `t_0 = 0`.
pub fn enumerate_t(p: u64, j: &PartitionTriple) -> Vec<Vec<u64>> {
    let r = j.depth();
    let mut out = Vec::new();
    let mut t = vec![0u64; r];
    fn rec(i: usize, prev: u64, p: u64, j: &PartitionTriple, t: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if i == t.len() {
            out.push(t.clone());
            return;
        }
        for v in 1..p {
            let ok = match j.classes[i] {
                Part::P1 => prev <= v,
                Part::P2 => true,
                Part::P3 => prev > v,
            };
            if ok {
                t[i] = v;
                rec(i + 1, v, p, j, t, out);
            }
        }
    }
    if r > 0 {
        rec(0, 0, p, j, &mut t, &mut out);
    }
    out
}

/// Maximal runs of consecutive integers, as `(start, end)` pairs.
pub fn canonical_partition(set: &BTreeSet<usize>) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &i in set {
        match out.last_mut() {
            Some((_, end)) if *end + 1 == i => *end = i,
            _ => out.push((i, i)),
        }
    }
    out
}

/// A chain `b_1 < b_2 < ... < b_k` of blocks with equal coordinates inside
/// each block. The empty chain is the point of `[1, p-1]^{}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuasiSimplex {
    blocks: Vec<Vec<usize>>,
}

impl QuasiSimplex {
    pub fn new(blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(blocks.len());
        for mut b in blocks {
            if b.is_empty() {
                return Err(Error::InvalidArgument("empty block".into()));
            }
            b.sort_unstable();
            for &i in &b {
                if i == 0 || !seen.insert(i) {
                    return Err(Error::InvalidArgument(format!("index {i} repeated or zero")));
                }
            }
            out.push(b);
        }
        Ok(QuasiSimplex { blocks: out })
    }

    pub fn empty() -> Self {
        QuasiSimplex { blocks: Vec::new() }
    }

    pub fn singleton(i: usize) -> Self {
        QuasiSimplex {
            blocks: vec![vec![i]],
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn depth(&self) -> usize {
        self.blocks.len()
    }

    pub fn support(&self) -> BTreeSet<usize> {
        self.blocks.iter().flatten().copied().collect()
    }

    /// Membership of a point given as `t[i - 1]` for each index `i`.
    pub fn contains(&self, t: &[u64]) -> bool {
        let mut prev: Option<u64> = None;
        for b in &self.blocks {
            let v = t[b[0] - 1];
            if b.iter().any(|&i| t[i - 1] != v) {
                return false;
            }
            if prev.is_some_and(|q| q >= v) {
                return false;
            }
            prev = Some(v);
        }
        true
    }

    /// The chain realised by a point on `support`.
    pub fn pattern_of(support: &BTreeSet<usize>, t: &[u64]) -> Self {
        let mut by_value: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for &i in support {
            by_value.entry(t[i - 1]).or_default().push(i);
        }
        QuasiSimplex {
            blocks: by_value.into_values().collect(),
        }
    }

    /// Concatenation `self < other`.
    pub fn concat(&self, other: &Self) -> Self {
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks.iter().cloned());
        QuasiSimplex { blocks }
    }

    /// Number of points in `[1, p-1]^S`: `C(p-1, depth)`.
    pub fn cell_size(&self, p: u64) -> u64 {
        let n = p - 1;
        let k = self.depth() as u64;
        if k > n {
            return 0;
        }
        (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
    }

    /// Points of the cell, as full vectors of length `r` (zero outside the
    /// support).
    pub fn points(&self, p: u64, r: usize) -> Vec<Vec<u64>> {
        let k = self.depth();
        let mut out = Vec::new();
        let mut vals = vec![0u64; k];
        fn rec(
            i: usize,
            lo: u64,
            p: u64,
            q: &QuasiSimplex,
            r: usize,
            vals: &mut Vec<u64>,
            out: &mut Vec<Vec<u64>>,
        ) {
            if i == vals.len() {
                let mut t = vec![0u64; r];
                for (b, &v) in q.blocks.iter().zip(vals.iter()) {
                    for &a in b {
                        t[a - 1] = v;
                    }
                }
                out.push(t);
                return;
            }
            for v in lo..p {
                vals[i] = v;
                rec(i + 1, v + 1, p, q, r, vals, out);
            }
        }
        rec(0, 1, p, self, r, &mut vals, &mut out);
        out
    }
}

impl fmt::Display for QuasiSimplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.blocks.is_empty() {
            return write!(f, "()");
        }
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|b| {
                let v: Vec<String> = b.iter().map(|i| i.to_string()).collect();
                format!("({})", v.join(","))
            })
            .collect();
        write!(f, "{}", parts.join("<"))
    }
}

impl std::str::FromStr for QuasiSimplex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "()" {
            return Ok(QuasiSimplex::empty());
        }
        let blocks = s
            .split('<')
            .map(|b| {
                let inner = b
                    .trim()
                    .strip_prefix('(')
                    .and_then(|b| b.strip_suffix(')'))
                    .ok_or_else(|| Error::InvalidArgument(format!("bad block {b:?}")))?;
                inner
                    .split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<usize>()
                            .map_err(|e| Error::InvalidArgument(format!("{x:?}: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        QuasiSimplex::new(blocks)
    }
}

/// A support together with disjoint cells of that support.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuasiSimplexUnion {
    support: BTreeSet<usize>,
    cells: Vec<QuasiSimplex>,
}

impl QuasiSimplexUnion {
    pub fn new(support: BTreeSet<usize>, cells: Vec<QuasiSimplex>) -> Result<Self> {
        for c in &cells {
            if c.support() != support {
                return Err(Error::InvalidArgument(format!(
                    "cell {c} does not have support {support:?}"
                )));
            }
        }
        let distinct: BTreeSet<&QuasiSimplex> = cells.iter().collect();
        if distinct.len() != cells.len() {
            return Err(Error::InvalidArgument("repeated cell".into()));
        }
        Ok(QuasiSimplexUnion { support, cells })
    }

    pub fn from_simplex(q: QuasiSimplex) -> Self {
        QuasiSimplexUnion {
            support: q.support(),
            cells: vec![q],
        }
    }

    /// The unit for `*`: the single point of the empty support.
    pub fn unit() -> Self {
        Self::from_simplex(QuasiSimplex::empty())
    }

    /// The empty subset of `[1, p-1]^support`.
    pub fn empty(support: BTreeSet<usize>) -> Self {
        QuasiSimplexUnion {
            support,
            cells: Vec::new(),
        }
    }

    pub fn support(&self) -> &BTreeSet<usize> {
        &self.support
    }

    pub fn cells(&self) -> &[QuasiSimplex] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, t: &[u64]) -> bool {
        self.cells.iter().any(|c| c.contains(t))
    }

    /// Cells sorted into a canonical order.
    pub fn sorted(mut self) -> Self {
        self.cells.sort();
        self
    }

    /// One cell per line.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for c in &self.cells {
            s.push_str(&c.to_string());
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cells = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.parse::<QuasiSimplex>())
            .collect::<Result<Vec<_>>>()?;
        let support = cells.first().map(|c| c.support()).unwrap_or_default();
        Self::new(support, cells)
    }

    /// Recovers the cells of a union from its point set in `[1, p-1]^S`,
    /// given as vectors of length `r` that vanish off `S`. Fails if the set is not a union
    /// of cells. Requires `p - 1 >= |S|` so that every chain is inhabited.
    pub fn from_points(
        support: BTreeSet<usize>,
        points: &BTreeSet<Vec<u64>>,
        p: u64,
        r: usize,
    ) -> Result<Self> {
        let mut cells: BTreeSet<QuasiSimplex> = BTreeSet::new();
        for t in points {
            cells.insert(QuasiSimplex::pattern_of(&support, t));
        }
        for c in &cells {
            if c.points(p, r).iter().any(|pt| !points.contains(pt)) {
                return Err(Error::InvalidArgument(format!(
                    "point set is not a union of cells near {c}"
                )));
            }
        }
        Self::new(support, cells.into_iter().collect())
    }
}

/// Chains on `S1 u S2` whose restrictions to `S1` and `S2` are `a` and `b`.
fn shuffle_simplices(a: &QuasiSimplex, b: &QuasiSimplex) -> Vec<QuasiSimplex> {
    let s1 = a.support();
    let s2 = b.support();
    let mut out = Vec::new();
    let mut cur = Vec::new();
    shuffle_rec(&a.blocks, &b.blocks, &s1, &s2, &mut cur, &mut out);
    out
}

fn shuffle_rec(
    a: &[Vec<usize>],
    b: &[Vec<usize>],
    s1: &BTreeSet<usize>,
    s2: &BTreeSet<usize>,
    cur: &mut Vec<Vec<usize>>,
    out: &mut Vec<QuasiSimplex>,
) {
    if a.is_empty() && b.is_empty() {
        out.push(QuasiSimplex {
            blocks: cur.clone(),
        });
        return;
    }
    let meet = |x: &[usize], s: &BTreeSet<usize>| -> Vec<usize> {
        x.iter().copied().filter(|i| s.contains(i)).collect()
    };
    if let Some(x) = a.first() {
        if meet(x, s2).is_empty() {
            cur.push(x.clone());
            shuffle_rec(&a[1..], b, s1, s2, cur, out);
            cur.pop();
        }
    }
    if let Some(y) = b.first() {
        if meet(y, s1).is_empty() {
            cur.push(y.clone());
            shuffle_rec(a, &b[1..], s1, s2, cur, out);
            cur.pop();
        }
    }
    if let (Some(x), Some(y)) = (a.first(), b.first()) {
        if meet(x, s2) == meet(y, s1) {
            let mut merged: Vec<usize> = x.iter().chain(y.iter()).copied().collect();
            merged.sort_unstable();
            merged.dedup();
            cur.push(merged);
            shuffle_rec(&a[1..], &b[1..], s1, s2, cur, out);
            cur.pop();
        }
    }
}

/// The quasi-shuffle product: the intersection of `a x [1,p-1]^{S2 - S1}`
/// and `b x [1,p-1]^{S1 - S2}`, cut into cells.
pub fn quasi_shuffle(a: &QuasiSimplexUnion, b: &QuasiSimplexUnion) -> QuasiSimplexUnion {
    let support: BTreeSet<usize> = a.support.union(&b.support).copied().collect();
    let mut cells = Vec::new();
    for x in &a.cells {
        for y in &b.cells {
            cells.extend(shuffle_simplices(x, y));
        }
    }
    QuasiSimplexUnion { support, cells }
}

/// `quasi_shuffle` without the concatenation cell `a < b` of each pair.
pub fn quasi_shuffle_tilde(a: &QuasiSimplexUnion, b: &QuasiSimplexUnion) -> QuasiSimplexUnion {
    let support: BTreeSet<usize> = a.support.union(&b.support).copied().collect();
    let mut cells = Vec::new();
    for x in &a.cells {
        for y in &b.cells {
            let joined = x.concat(y);
            cells.extend(shuffle_simplices(x, y).into_iter().filter(|c| *c != joined));
        }
    }
    QuasiSimplexUnion { support, cells }
}

/// A chain whose links may be `<` or `<=`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeakChain {
    pub blocks: Vec<Vec<usize>>,
    /// `weak[i]` is true when the link between blocks `i` and `i + 1` is `<=`.
    pub weak: Vec<bool>,
}

impl WeakChain {
    /// `t_{i_1} <= t_{i_2} <= ...` over single indices.
    pub fn weakly_increasing(indices: &[usize]) -> Self {
        WeakChain {
            blocks: indices.iter().map(|&i| vec![i]).collect(),
            weak: vec![true; indices.len().saturating_sub(1)],
        }
    }
}

/// Resolves each `<=` link into `<` or `=`.
pub fn phi_expand(chain: &WeakChain) -> Result<QuasiSimplexUnion> {
    if chain.blocks.is_empty() {
        return Ok(QuasiSimplexUnion::unit());
    }
    if chain.weak.len() + 1 != chain.blocks.len() {
        return Err(Error::InvalidArgument("link count mismatch".into()));
    }
    let k = chain.weak.iter().filter(|&&w| w).count();
    let mut cells = Vec::with_capacity(1 << k);
    for mask in 0..(1u64 << k) {
        let mut blocks: Vec<Vec<usize>> = vec![chain.blocks[0].clone()];
        let mut bit = 0;
        for (i, &w) in chain.weak.iter().enumerate() {
            let next = chain.blocks[i + 1].clone();
            let merge = if w {
                let m = mask >> bit & 1 == 1;
                bit += 1;
                m
            } else {
                false
            };
            if merge {
                blocks.last_mut().unwrap().extend(next);
            } else {
                blocks.push(next);
            }
        }
        cells.push(QuasiSimplex::new(blocks)?);
    }
    let support = cells[0].support();
    QuasiSimplexUnion::new(support, cells)
}

/// `T_{r,J}` as a union of cells of support `P'_1 u P'_3`.
///
/// Each maximal run of consecutive indices `i >= 2` in `P1` gives a weakly
/// increasing chain `t_{a-1} <= ... <= t_b`, each run in `P3` a strictly
/// decreasing chain `t_{a-1} > ... > t_b`; the runs overlap in at most one
/// index and are combined with `*`.
pub fn decompose_t(j: &PartitionTriple) -> QuasiSimplexUnion {
    let support: BTreeSet<usize> = j
        .primed(Part::P1)
        .union(&j.primed(Part::P3))
        .copied()
        .collect();
    if !j.is_merged() && j.class(1) == Part::P3 {
        return QuasiSimplexUnion::empty(support);
    }
    let r = j.depth();
    let mut acc = QuasiSimplexUnion::unit();
    let mut i = 2;
    while i <= r {
        let part = j.class(i);
        if part == Part::P2 {
            i += 1;
            continue;
        }
        let start = i;
        while i < r && j.class(i + 1) == part {
            i += 1;
        }
        let indices: Vec<usize> = (start - 1..=i).collect();
        let run = match part {
            Part::P1 => phi_expand(&WeakChain::weakly_increasing(&indices)).expect("valid chain"),
            _ => QuasiSimplexUnion::from_simplex(QuasiSimplex {
                blocks: indices.iter().rev().map(|&a| vec![a]).collect(),
            }),
        };
        acc = quasi_shuffle(&acc, &run);
        i += 1;
    }
    for &a in &support {
        if !acc.support.contains(&a) {
            acc = quasi_shuffle(&acc, &QuasiSimplexUnion::from_simplex(QuasiSimplex::singleton(a)));
        }
    }
    acc
}

/// `decompose_t` extended to the full support `{1..r}` by shuffling in each
/// unconstrained coordinate as a singleton chain.
pub fn full_support_cells(j: &PartitionTriple) -> QuasiSimplexUnion {
    let mut acc = decompose_t(j);
    if acc.is_empty() {
        return QuasiSimplexUnion::empty((1..=j.depth()).collect());
    }
    for a in 1..=j.depth() {
        if !acc.support.contains(&a) {
            acc = quasi_shuffle(&acc, &QuasiSimplexUnion::from_simplex(QuasiSimplex::singleton(a)));
        }
    }
    acc
}

/// Exponents and twists `((n_i); (eps_i))` indexing a harmonic sum.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HarmonicWord {
    pub exponents: Vec<u32>,
    pub twists: Vec<RootOfUnity>,
}

impl HarmonicWord {
    pub fn new(exponents: Vec<u32>, twists: Vec<RootOfUnity>) -> Result<Self> {
        if exponents.len() != twists.len() {
            return Err(Error::InvalidArgument("word length mismatch".into()));
        }
        if exponents.contains(&0) {
            return Err(Error::InvalidArgument("exponents must be positive".into()));
        }
        if let Some(c) = twists.first().map(|t| t.conductor()) {
            if twists.iter().any(|t| t.conductor() != c) {
                return Err(Error::InvalidArgument("mixed conductors".into()));
            }
        }
        Ok(HarmonicWord { exponents, twists })
    }

    /// Word with all twists equal to 1.
    pub fn untwisted(c: u64, exponents: Vec<u32>) -> Self {
        let twists = vec![RootOfUnity::one(c); exponents.len()];
        HarmonicWord { exponents, twists }
    }

    pub fn depth(&self) -> usize {
        self.exponents.len()
    }

    pub fn weight(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// Per-position ratios `eps_{i+1} / eps_i` with `eps_{k+1} = 1`: the
    /// root raised to `m_i` in the summand.
    pub fn ratios(&self) -> Vec<RootOfUnity> {
        let k = self.depth();
        (0..k)
            .map(|i| {
                let next = if i + 1 < k {
                    self.twists[i + 1]
                } else {
                    RootOfUnity::one(self.twists[i].conductor())
                };
                next.div(self.twists[i])
            })
            .collect()
    }

    /// Word from exponents and per-position ratios.
    pub fn from_ratios(exponents: Vec<u32>, ratios: &[RootOfUnity]) -> Result<Self> {
        let k = ratios.len();
        let mut twists = vec![RootOfUnity::one(ratios.first().map_or(1, |r| r.conductor())); k];
        let mut acc = twists.first().copied().unwrap_or(RootOfUnity::one(1));
        for i in (0..k).rev() {
            acc = acc.mul(ratios[i].inv());
            twists[i] = acc;
        }
        HarmonicWord::new(exponents, twists)
    }
}

impl HarmonicWord {
    /// Parses `"n_1,...,n_k;e_1,...,e_k"` with each twist written `1`, `-1`,
    /// `z` or `z^a` for `zeta_c^a`.
    pub fn parse(s: &str, c: u64) -> Result<Self> {
        let (ns, es) = s
            .split_once(';')
            .ok_or_else(|| Error::InvalidArgument(format!("word {s:?} lacks ';'")))?;
        let exponents = ns
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidArgument(format!("bad exponent {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let twists = es
            .split(',')
            .map(|t| parse_root(t.trim(), c))
            .collect::<Result<Vec<_>>>()?;
        HarmonicWord::new(exponents, twists)
    }
}

fn parse_root(t: &str, c: u64) -> Result<RootOfUnity> {
    let bad = || Error::InvalidArgument(format!("bad root of unity {t:?} for c = {c}"));
    match t {
        "1" => Ok(RootOfUnity::one(c)),
        "-1" if c.is_multiple_of(2) => Ok(RootOfUnity::new(c, (c / 2) as i64)),
        "z" if c > 1 => Ok(RootOfUnity::new(c, 1)),
        _ => {
            let a: u64 = t.strip_prefix("z^").ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if a >= c {
                return Err(bad());
            }
            Ok(RootOfUnity::new(c, a as i64))
        }
    }
}

fn show_root(e: RootOfUnity) -> String {
    let (c, a) = (e.conductor(), e.exponent());
    match a {
        0 => "1".into(),
        _ if 2 * a == c => "-1".into(),
        1 => "z".into(),
        _ => format!("z^{a}"),
    }
}

impl fmt::Display for HarmonicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n: Vec<String> = self.exponents.iter().map(|e| e.to_string()).collect();
        let t: Vec<String> = self.twists.iter().map(|&e| show_root(e)).collect();
        write!(f, "{};{}", n.join(","), t.join(","))
    }
}

/// The word attached to a full-support cell: one letter per block, with
/// exponent the sum of `n_a + l_a` over the block and twists telescoped so
/// that the summand at `m_j = t_{b_j}` is the product of
/// `(xi_a / xi_{a+1})^{t_a}` (`xi_{r+1} = 1`).
pub fn weight_word(
    delta: &QuasiSimplex,
    n: &[u32],
    l: &[u32],
    xi: &[RootOfUnity],
) -> Result<HarmonicWord> {
    let r = n.len();
    if l.len() != r || xi.len() != r {
        return Err(Error::InvalidArgument("length mismatch".into()));
    }
    if delta.support() != (1..=r).collect::<BTreeSet<_>>() {
        return Err(Error::InvalidArgument(format!("cell {delta} lacks full support")));
    }
    let c = xi.first().map_or(1, |x| x.conductor());
    let one = RootOfUnity::one(c);
    let mut exps = Vec::with_capacity(delta.depth());
    let mut ratios = Vec::with_capacity(delta.depth());
    for b in delta.blocks() {
        exps.push(b.iter().map(|&a| n[a - 1] + l[a - 1]).sum());
        let eta = b.iter().fold(one, |acc, &a| {
            let next = if a < r { xi[a] } else { one };
            acc.mul(xi[a - 1].div(next))
        });
        ratios.push(eta);
    }
    HarmonicWord::from_ratios(exps, &ratios)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn union_of(cells: &[&str]) -> QuasiSimplexUnion {
        QuasiSimplexUnion::parse(&cells.join("\n")).unwrap().sorted()
    }

    #[test]
    fn div_map_examples() {
        assert_eq!(div_map(&[4, 7], 3), (vec![1, 3], vec![1, 2]));
        assert_eq!(div_map(&[0, 0], 5), (vec![0, 0], vec![0, 0]));
        assert_eq!(div_map(&[2, 2, 2], 2), (vec![1, 2, 3], vec![0, 0, 0]));
    }

    #[test]
    fn domain_examples() {
        assert_eq!(enumerate_d(1, 3, 1).collect::<Vec<_>>(), vec![vec![1], vec![2]]);
        assert_eq!(
            enumerate_d(2, 3, 1).collect::<Vec<_>>(),
            vec![vec![1, 0], vec![1, 1], vec![2, 0], vec![2, 2]]
        );
        assert_eq!(enumerate_d(1, 5, 2).count(), 20);
    }

    #[test]
    fn u_and_t_examples() {
        let j = PartitionTriple::new(1, &[], &[1], &[]).unwrap();
        assert!(enumerate_u(3, 1, &j).is_empty());
        let j1 = PartitionTriple::new(1, &[1], &[], &[]).unwrap();
        assert_eq!(enumerate_u(3, 1, &j1), vec![vec![0]]);
        assert_eq!(enumerate_t(3, &j1), vec![vec![1], vec![2]]);
        let j = PartitionTriple::new(2, &[2], &[1], &[]).unwrap();
        assert!(enumerate_u(3, 1, &j).is_empty());
        let j = PartitionTriple::new(2, &[], &[1, 2], &[]).unwrap();
        assert_eq!(enumerate_u(3, 2, &j).len(), 4);
        assert_eq!(enumerate_u(3, 2, &j.clone().merged().unwrap()).len(), 6);
        assert_eq!(enumerate_t(3, &j).len(), 4);
        assert!(PartitionTriple::new(2, &[1], &[1], &[2]).is_err());
        assert!(PartitionTriple::new(2, &[1], &[], &[]).is_err());
    }

    #[test]
    fn shuffle_examples() {
        let a = QuasiSimplexUnion::from_simplex(QuasiSimplex::singleton(1));
        let b = QuasiSimplexUnion::from_simplex(QuasiSimplex::singleton(2));
        assert_eq!(
            quasi_shuffle(&a, &b).sorted(),
            union_of(&["(1)<(2)", "(2)<(1)", "(1,2)"])
        );
        assert_eq!(quasi_shuffle(&a, &QuasiSimplexUnion::unit()), a);
        let c = union_of(&["(2,3)"]);
        assert_eq!(quasi_shuffle(&a, &c).len(), 3);
        assert_eq!(
            quasi_shuffle_tilde(&a, &b).sorted(),
            union_of(&["(2)<(1)", "(1,2)"])
        );
        let d = union_of(&["(1)<(2)"]);
        let e = union_of(&["(3)"]);
        assert_eq!(quasi_shuffle(&d, &e).len(), 5);
        assert_eq!(quasi_shuffle_tilde(&d, &e).len(), 4);
    }

    #[test]
    fn phi_examples() {
        let w = WeakChain::weakly_increasing(&[1, 2]);
        assert_eq!(phi_expand(&w).unwrap().sorted(), union_of(&["(1)<(2)", "(1,2)"]));
        let w = WeakChain {
            blocks: vec![vec![2], vec![1, 3]],
            weak: vec![true],
        };
        assert_eq!(
            phi_expand(&w).unwrap().sorted(),
            union_of(&["(2)<(1,3)", "(1,2,3)"])
        );
        let w = WeakChain::weakly_increasing(&[1, 2, 3, 4]);
        assert_eq!(phi_expand(&w).unwrap().len(), 8);
    }

    #[test]
    fn canonical_partition_examples() {
        let s: BTreeSet<usize> = [1, 2, 4, 5, 6, 9].into_iter().collect();
        assert_eq!(canonical_partition(&s), vec![(1, 2), (4, 6), (9, 9)]);
        assert!(canonical_partition(&BTreeSet::new()).is_empty());
        assert_eq!(canonical_partition(&[3].into_iter().collect()), vec![(3, 3)]);
    }

    #[test]
    fn decompose_examples() {
        let j = PartitionTriple::new(2, &[2], &[1], &[]).unwrap();
        assert_eq!(decompose_t(&j).sorted(), union_of(&["(1)<(2)", "(1,2)"]));
        let j = PartitionTriple::new(2, &[], &[1, 2], &[]).unwrap();
        assert_eq!(decompose_t(&j), QuasiSimplexUnion::unit());
        assert_eq!(
            full_support_cells(&j).sorted(),
            union_of(&["(1)<(2)", "(2)<(1)", "(1,2)"])
        );
        let j = PartitionTriple::new(2, &[], &[1], &[2]).unwrap();
        assert_eq!(decompose_t(&j).sorted(), union_of(&["(2)<(1)"]));
        let j = PartitionTriple::new(1, &[], &[1], &[]).unwrap();
        assert_eq!(full_support_cells(&j), union_of(&["(1)"]));
    }

    #[test]
    fn dump_round_trip() {
        let u = union_of(&["(1,3)<(2)", "(2)<(1,3)", "(1,2,3)"]);
        assert_eq!(QuasiSimplexUnion::parse(&u.dump()).unwrap(), u);
        assert!("(1,1)".parse::<QuasiSimplex>().is_err());
        assert!("(1)<2".parse::<QuasiSimplex>().is_err());
    }

    #[test]
    fn word_notation_round_trips() {
        let w = HarmonicWord::parse("1,1;1,-1", 2).unwrap();
        assert_eq!(w.twists[1], RootOfUnity::new(2, 1));
        assert_eq!(w.to_string(), "1,1;1,-1");
        let w = HarmonicWord::parse("2,1,3;z^2,z,1", 5).unwrap();
        assert_eq!(HarmonicWord::parse(&w.to_string(), 5).unwrap(), w);
        assert!(HarmonicWord::parse("1;-1", 3).is_err());
        assert!(HarmonicWord::parse("1;z^7", 4).is_err());
        assert!(HarmonicWord::parse("0;1", 2).is_err());
        assert!(HarmonicWord::parse("1,2;1", 2).is_err());
    }

    #[test]
    fn word_examples() {
        let c = 2;
        let one = RootOfUnity::one(c);
        let m = RootOfUnity::new(c, 1);
        let eq: QuasiSimplex = "(1,2)".parse().unwrap();
        let w = weight_word(&eq, &[2, 3], &[0, 0], &[m, m]).unwrap();
        assert_eq!(w.exponents, vec![5]);
        let lt: QuasiSimplex = "(2)<(1)".parse().unwrap();
        let w = weight_word(&lt, &[1, 2], &[0, 1], &[m, one]).unwrap();
        assert_eq!(w.exponents, vec![3, 1]);
        // block (2) carries xi_2 / 1, block (1) carries xi_1 / xi_2
        assert_eq!(w.ratios(), vec![one, m]);
    }
}
