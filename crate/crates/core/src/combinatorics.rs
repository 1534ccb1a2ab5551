//! Exhaustive ground truth on tiny codes.
//!
//! Words are vectors over `{0, ..., q-1}`. A code is B2 when all sums
//! `c_i + c_j` (`i <= j`, componentwise over the integers) are distinct.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{Error, Result};

/// Upper limit on `q^n` for exhaustive search.
pub const SEARCH_GUARD: u64 = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Code {
    q: u8,
    n: usize,
    words: Vec<Vec<u8>>,
}

impl Code {
    pub fn new(q: u8, n: usize, words: Vec<Vec<u8>>) -> Result<Self> {
        if !(2..=36).contains(&q) {
            return Err(Error::InvalidCode(format!("alphabet size {q} not in 2..=36")));
        }
        let mut seen = HashSet::new();
        for w in &words {
            if w.len() != n {
                return Err(Error::InvalidCode(format!("word of length {} in a length-{n} code", w.len())));
            }
            if w.iter().any(|&s| s >= q) {
                return Err(Error::InvalidCode(format!("symbol out of range in {w:?}")));
            }
            if !seen.insert(w) {
                return Err(Error::InvalidCode(format!("repeated word {w:?}")));
            }
        }
        Ok(Code { q, n, words })
    }

    /// Parses words written as digit strings, e.g. `["0102", "1120"]`.
    pub fn from_strings<S: AsRef<str>>(q: u8, words: &[S]) -> Result<Self> {
        let parsed: Vec<Vec<u8>> = words
            .iter()
            .map(|s| {
                s.as_ref()
                    .chars()
                    .map(|c| {
                        c.to_digit(36)
                            .map(|d| d as u8)
                            .ok_or_else(|| Error::InvalidCode(format!("bad symbol {c:?}")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let n = parsed.first().map_or(0, Vec::len);
        Code::new(q, n, parsed)
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn words(&self) -> &[Vec<u8>] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.words
            .iter()
            .map(|w| w.iter().map(|&s| std::char::from_digit(s as u32, 36).unwrap()).collect())
            .collect()
    }

    /// Common weight of a binary code, if there is one.
    pub fn constant_weight(&self) -> Option<usize> {
        if self.q != 2 {
            return None;
        }
        let mut weights = self.words.iter().map(|w| w.iter().filter(|&&s| s == 1).count());
        let first = weights.next()?;
        weights.all(|x| x == first).then_some(first)
    }
}

impl Serialize for Code {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct B2Check {
    pub is_b2: bool,
    /// Two index pairs with the same sum, and that sum.
    pub violation: Option<((usize, usize), (usize, usize), Vec<u8>)>,
}

fn add(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn is_b2_code(code: &Code) -> B2Check {
    let words = code.words();
    let mut sums: HashMap<Vec<u8>, (usize, usize)> = HashMap::new();
    for i in 0..words.len() {
        for j in i..words.len() {
            let s = add(&words[i], &words[j]);
            if let Some(&prev) = sums.get(&s) {
                return B2Check {
                    is_b2: false,
                    violation: Some((prev, (i, j), s)),
                };
            }
            sums.insert(s, (i, j));
        }
    }
    B2Check { is_b2: true, violation: None }
}

/// Whether the differences of distinct suffixes, taken within each class of
/// words sharing their first `prefix_len` symbols, are all distinct.
pub fn prefix_difference_injectivity(code: &Code, prefix_len: usize) -> Result<bool> {
    if prefix_len > code.n() {
        return Err(Error::Domain(format!("prefix length {prefix_len} exceeds n = {}", code.n())));
    }
    let mut classes: BTreeMap<&[u8], Vec<&[u8]>> = BTreeMap::new();
    for w in code.words() {
        let (prefix, suffix) = w.split_at(prefix_len);
        classes.entry(prefix).or_default().push(suffix);
    }
    let mut seen: HashSet<Vec<i16>> = HashSet::new();
    for suffixes in classes.values() {
        for (a, x) in suffixes.iter().enumerate() {
            for (b, y) in suffixes.iter().enumerate() {
                if a == b {
                    continue;
                }
                let d: Vec<i16> = x.iter().zip(y.iter()).map(|(&u, &v)| u as i16 - v as i16).collect();
                if !seen.insert(d) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Number of distinct ordered differences `x - y` over pairs `x != y`.
pub fn distinct_difference_count(code: &Code) -> usize {
    let words = code.words();
    let mut seen = HashSet::new();
    for (a, x) in words.iter().enumerate() {
        for (b, y) in words.iter().enumerate() {
            if a != b {
                seen.insert(x.iter().zip(y).map(|(&u, &v)| u as i16 - v as i16).collect::<Vec<_>>());
            }
        }
    }
    seen.len()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub max_size: usize,
    pub witness: Code,
    pub nodes: u64,
}

/// Sum-set membership over sum codes in base `2q - 1`.
enum SumSet {
    Dense(Vec<u64>),
    Sparse(HashSet<u64>),
}

impl SumSet {
    fn new(universe: u64) -> Self {
        if universe <= 1 << 28 {
            SumSet::Dense(vec![0; (universe as usize).div_ceil(64)])
        } else {
            SumSet::Sparse(HashSet::new())
        }
    }

    fn contains(&self, s: u64) -> bool {
        match self {
            SumSet::Dense(bits) => bits[(s / 64) as usize] >> (s % 64) & 1 == 1,
            SumSet::Sparse(set) => set.contains(&s),
        }
    }

    fn insert(&mut self, s: u64) {
        match self {
            SumSet::Dense(bits) => bits[(s / 64) as usize] |= 1 << (s % 64),
            SumSet::Sparse(set) => {
                set.insert(s);
            }
        }
    }

    fn remove(&mut self, s: u64) {
        match self {
            SumSet::Dense(bits) => bits[(s / 64) as usize] &= !(1 << (s % 64)),
            SumSet::Sparse(set) => {
                set.remove(&s);
            }
        }
    }
}

struct Search {
    /// Sum-encoding `sum_i w_i (2q-1)^i` of each candidate word.
    enc: Vec<u64>,
    /// Encoding of the all-`(q-1)` difference offset.
    off: u64,
    sums: SumSet,
    diffs: SumSet,
    members: SumSet,
    words: Vec<Vec<u8>>,
    q: usize,
    chosen: Vec<usize>,
    best: Vec<usize>,
    nodes: u64,
}

impl Search {
    fn compatible(&self, u: usize) -> bool {
        let eu = self.enc[u];
        !self.sums.contains(2 * eu) && self.chosen.iter().all(|&c| !self.sums.contains(eu + self.enc[c]))
    }

    fn push(&mut self, u: usize) {
        let eu = self.enc[u];
        for &c in &self.chosen {
            let ec = self.enc[c];
            self.sums.insert(eu + ec);
            self.diffs.insert(eu + self.off - ec);
            self.diffs.insert(ec + self.off - eu);
        }
        self.sums.insert(2 * eu);
        self.members.insert(eu);
        self.chosen.push(u);
    }

    fn pop(&mut self) {
        let u = self.chosen.pop().unwrap();
        let eu = self.enc[u];
        self.sums.remove(2 * eu);
        self.members.remove(eu);
        for &c in &self.chosen {
            let ec = self.enc[c];
            self.sums.remove(eu + ec);
            self.diffs.remove(eu + self.off - ec);
            self.diffs.remove(ec + self.off - eu);
        }
    }

    /// Whether two words, each compatible with `chosen`, cannot both join it.
    fn conflict(&self, u: usize, v: usize) -> bool {
        let (eu, ev) = (self.enc[u], self.enc[v]);
        self.sums.contains(eu + ev)
            || self.diffs.contains(eu + self.off - ev)
            || (2 * eu >= ev && self.members.contains(2 * eu - ev))
            || (2 * ev >= eu && self.members.contains(2 * ev - eu))
    }

    /// Greedy clique cover of the conflict graph on `cands`. Returns the words
    /// grouped clique by clique together with the running clique count; any B2
    /// extension takes at most one word per clique.
    fn colour(&self, cands: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let mut cliques: Vec<Vec<usize>> = Vec::new();
        for &u in cands {
            match cliques.iter_mut().find(|k| k.iter().all(|&v| self.conflict(u, v))) {
                Some(k) => k.push(u),
                None => cliques.push(vec![u]),
            }
        }
        let mut order = Vec::with_capacity(cands.len());
        let mut count = Vec::with_capacity(cands.len());
        for (c, k) in cliques.iter().enumerate() {
            order.extend_from_slice(k);
            count.extend(std::iter::repeat_n(c + 1, k.len()));
        }
        (order, count)
    }

    /// Lexicographic depth-first search for the first extension of `chosen`
    /// to `target` words; `cands` are increasing and compatible with `chosen`.
    fn first_of_size(&mut self, cands: &[usize], target: usize) -> bool {
        self.nodes += 1;
        if self.chosen.len() >= target {
            self.best = self.chosen.clone();
            return true;
        }
        if self.chosen.len() + self.colour(cands).1.last().copied().unwrap_or(0) < target {
            return false;
        }
        for (pos, &u) in cands.iter().enumerate() {
            if self.chosen.len() + cands.len() - pos < target {
                return false;
            }
            self.push(u);
            let next: Vec<usize> = cands[pos + 1..].iter().copied().filter(|&v| self.compatible(v)).collect();
            let found = self.first_of_size(&next, target);
            self.pop();
            if found {
                return true;
            }
        }
        false
    }

    /// Coordinates that agree on every chosen word share a class; permuting
    /// within classes fixes `chosen`. `None` when every class is a singleton.
    fn coordinate_classes(&self) -> Option<(Vec<usize>, usize)> {
        let n = self.words.first().map_or(0, Vec::len);
        let mut ids: HashMap<Vec<u8>, usize> = HashMap::new();
        let classes: Vec<usize> = (0..n)
            .map(|i| {
                let column: Vec<u8> = self.chosen.iter().map(|&c| self.words[c][i]).collect();
                let next = ids.len();
                *ids.entry(column).or_insert(next)
            })
            .collect();
        (ids.len() < n).then_some((classes, ids.len()))
    }

    /// Symbol counts per coordinate class: the orbit of `u` under the
    /// permutations fixing `chosen`.
    fn orbit_key(&self, u: usize, classes: &[usize], count: usize) -> Vec<u8> {
        let mut key = vec![0u8; count * self.q];
        for (i, &s) in self.words[u].iter().enumerate() {
            key[classes[i] * self.q + s as usize] += 1;
        }
        key
    }

    /// Branch and bound: candidates are taken from the last clique backwards,
    /// and a branch is cut once the cliques still open cannot beat the
    /// incumbent. The candidate set is always closed under the coordinate
    /// permutations fixing `chosen`, so one word per orbit is branched on and
    /// the rest of its orbit is dropped afterwards.
    fn expand(&mut self, cands: &[usize]) {
        self.nodes += 1;
        if self.chosen.len() > self.best.len() {
            self.best = self.chosen.clone();
        }
        let (order, count) = self.colour(cands);
        let classes = self.coordinate_classes();
        let keys: Option<Vec<Vec<u8>>> =
            classes.as_ref().map(|(cl, k)| order.iter().map(|&u| self.orbit_key(u, cl, *k)).collect());
        let mut done: HashSet<&[u8]> = HashSet::new();
        for idx in (0..order.len()).rev() {
            if self.chosen.len() + count[idx] <= self.best.len() {
                return;
            }
            if keys.as_ref().is_some_and(|k| done.contains(k[idx].as_slice())) {
                continue;
            }
            self.push(order[idx]);
            let mut next: Vec<usize> = (0..idx)
                .filter(|&j| keys.as_ref().is_none_or(|k| !done.contains(k[j].as_slice())))
                .map(|j| order[j])
                .filter(|&v| self.compatible(v))
                .collect();
            next.sort_unstable();
            self.expand(&next);
            self.pop();
            if let Some(keys) = &keys {
                done.insert(&keys[idx]);
            }
        }
    }
}

/// All words of length `n` over `q` symbols in lexicographic order, optionally
/// restricted to binary weight `weight`.
fn enumerate_words(n: usize, q: u8, weight: Option<usize>) -> Vec<Vec<u8>> {
    let total = (q as u64).pow(n as u32);
    (0..total)
        .map(|mut idx| {
            let mut w = vec![0u8; n];
            for slot in w.iter_mut().rev() {
                *slot = (idx % q as u64) as u8;
                idx /= q as u64;
            }
            w
        })
        .filter(|w| weight.is_none_or(|k| w.iter().filter(|&&s| s == 1).count() == k))
        .collect()
}

pub fn check_search_guard(n: usize, q: u8) -> Result<()> {
    let words = (q as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
    if words > SEARCH_GUARD {
        return Err(Error::SearchGuard { words, limit: SEARCH_GUARD });
    }
    Ok(())
}

/// Exact maximum size of a B2 code in `{0..q-1}^n` (binary weight `weight` if given).
///
/// Depth-first branch and bound with incremental sum, difference and member
/// sets. Bounds come from a greedy clique cover of the pairwise conflict graph,
/// and coordinate permutations fixing the partial code are factored out. For
/// unrestricted binary codes the all-zero word is fixed, since translating by a
/// codeword and complementing coordinates keeps a code B2. The witness is
/// the lexicographically first maximum code, with its words sorted.
pub fn max_b2_exhaustive(n: usize, q: u8, weight: Option<usize>) -> Result<SearchOutcome> {
    check_search_guard(n, q)?;
    if n == 0 {
        return Err(Error::Domain("length must be positive".into()));
    }
    if let Some(w) = weight {
        if q != 2 {
            return Err(Error::Domain("constant weight applies to binary codes only".into()));
        }
        if w > n {
            return Err(Error::Domain(format!("weight {w} exceeds length {n}")));
        }
    }
    let words = enumerate_words(n, q, weight);
    let base = 2 * q as u64 - 1;
    let enc: Vec<u64> = words
        .iter()
        .map(|w| w.iter().fold(0u64, |acc, &s| acc * base + s as u64))
        .collect();
    let universe = base.pow(n as u32);
    let mut search = Search {
        enc,
        off: (0..n).fold(0u64, |acc, _| acc * base + q as u64 - 1),
        sums: SumSet::new(universe),
        diffs: SumSet::new(universe),
        members: SumSet::new(universe),
        words: words.clone(),
        q: q as usize,
        chosen: Vec::new(),
        best: Vec::new(),
        nodes: 0,
    };
    let total = words.len();
    if q == 2 && weight.is_none() {
        search.push(0);
        let cands: Vec<usize> = (1..total).filter(|&v| search.compatible(v)).collect();
        search.expand(&cands);
    } else {
        let cands: Vec<usize> = (0..total).collect();
        search.expand(&cands);
    }
    let target = search.best.len();
    while !search.chosen.is_empty() {
        search.pop();
    }
    let cands: Vec<usize> = (0..total).collect();
    let found = search.first_of_size(&cands, target);
    debug_assert!(found);
    let witness = Code::new(q, n, search.best.iter().map(|&i| words[i].clone()).collect())?;
    Ok(SearchOutcome {
        max_size: witness.len(),
        witness,
        nodes: search.nodes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceDistribution {
    pub n: usize,
    pub code_size: usize,
    /// Ordered pairs (including `x = y`) at distance `2i`, for `i = 0..=n/2`.
    pub pair_counts: Vec<u64>,
}

impl DistanceDistribution {
    /// `B_{2i}`: pair counts normalized by the code size.
    pub fn normalized(&self) -> Vec<f64> {
        self.pair_counts.iter().map(|&c| c as f64 / self.code_size as f64).collect()
    }
}

pub fn distance_distribution(code: &Code) -> Result<DistanceDistribution> {
    if code.is_empty() || code.constant_weight().is_none() {
        return Err(Error::NotConstantWeight);
    }
    let mut pair_counts = vec![0u64; code.n() / 2 + 1];
    for x in code.words() {
        for y in code.words() {
            let d = x.iter().zip(y).filter(|(a, b)| a != b).count();
            pair_counts[d / 2] += 1;
        }
    }
    Ok(DistanceDistribution {
        n: code.n(),
        code_size: code.len(),
        pair_counts,
    })
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountingRow {
    pub i: usize,
    /// `|C| B_{2i}`, the ordered pairs at distance `2i`.
    pub lhs: u128,
    /// `binom(n, i) binom(n - i, i)`, the ternary vectors with `i` entries of each sign.
    pub rhs: u128,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountingReport {
    pub rows: Vec<CountingRow>,
    pub all_hold: bool,
}

/// Checks `|C| B_{2i} <= binom(n, i) binom(n - i, i)` for every `i >= 1`.
///
/// The diagonal `i = 0` (pairs `x = x`) is not covered by the counting
/// argument and is skipped.
pub fn verify_counting_bound(code: &Code) -> Result<CountingReport> {
    if !is_b2_code(code).is_b2 {
        return Err(Error::InvalidCode("counting bound requires a B2 code".into()));
    }
    let dist = distance_distribution(code)?;
    let n = dist.n as u64;
    let rows: Vec<CountingRow> = dist
        .pair_counts
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| {
            let rhs = binomial(n, i as u64) * binomial(n - i as u64, i as u64);
            CountingRow { i, lhs: c as u128, rhs, holds: c as u128 <= rhs }
        })
        .collect();
    let all_hold = rows.iter().all(|r| r.holds);
    Ok(CountingReport { rows, all_hold })
}

/// Greedy B2 code from a seeded random word order.
pub fn random_greedy_b2(n: usize, q: u8, weight: Option<usize>, seed: u64) -> Result<Code> {
    check_search_guard(n, q)?;
    if weight.is_some() && q != 2 {
        return Err(Error::Domain("constant weight applies to binary codes only".into()));
    }
    let mut words = enumerate_words(n, q, weight);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    words.shuffle(&mut rng);
    let mut code: Vec<Vec<u8>> = Vec::new();
    let mut sums: HashSet<Vec<u8>> = HashSet::new();
    for w in words {
        let mut fresh: Vec<Vec<u8>> = code.iter().map(|c| add(c, &w)).collect();
        fresh.push(add(&w, &w));
        if fresh.iter().all(|s| !sums.contains(s)) {
            sums.extend(fresh);
            code.push(w);
        }
    }
    code.sort();
    Code::new(q, n, code)
}
