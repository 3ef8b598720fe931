//! Permutations, derangements and condensed derangement sets.
//!
//! Stations are 0-indexed in memory and 1-indexed in every text format.
//! A permutation is stored receiver-indexed: `recv_from[j]` is the station
//! whose data station `j` receives, i.e. row `j` of the switch matrix has its
//! one in column `recv_from[j]`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, C64};

/// Largest `n` accepted by [`enumerate_derangements`].
pub const MAX_ENUMERATION_N: usize = 10;
/// Largest `n` accepted by the condensed-set search.
pub const MAX_CONDENSED_N: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    recv_from: Vec<usize>,
}

impl Permutation {
    /// Validates that `recv_from` is a bijection on `0..n`.
    pub fn new(recv_from: Vec<usize>) -> Result<Self> {
        let n = recv_from.len();
        let mut seen = vec![false; n];
        for &i in &recv_from {
            if i >= n {
                return Err(Error::InvalidPermutation(format!(
                    "station {} out of range 1..={n}",
                    i + 1
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidPermutation(format!(
                    "station {} appears twice",
                    i + 1
                )));
            }
        }
        Ok(Self { recv_from })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            recv_from: (0..n).collect(),
        }
    }

    /// Builds a permutation from destination (column-list) notation:
    /// `dest[i] = j` means station `i` transmits to station `j`.
    pub fn from_destinations(dest: &[usize]) -> Result<Self> {
        let n = dest.len();
        let mut recv_from = vec![usize::MAX; n];
        for (i, &j) in dest.iter().enumerate() {
            if j >= n || recv_from[j] != usize::MAX {
                return Err(Error::InvalidPermutation(format!(
                    "destination list {dest:?} is not a bijection"
                )));
            }
            recv_from[j] = i;
        }
        Ok(Self { recv_from })
    }

    pub fn n(&self) -> usize {
        self.recv_from.len()
    }

    pub fn recv_from(&self) -> &[usize] {
        &self.recv_from
    }

    /// Station that `source` transmits to.
    pub fn destination_of(&self, source: usize) -> usize {
        self.recv_from
            .iter()
            .position(|&i| i == source)
            .expect("permutation is a bijection")
    }

    pub fn destinations(&self) -> Vec<usize> {
        let mut dest = vec![0; self.n()];
        for (j, &i) in self.recv_from.iter().enumerate() {
            dest[i] = j;
        }
        dest
    }

    pub fn is_derangement(&self) -> bool {
        self.recv_from.iter().enumerate().all(|(j, &i)| i != j)
    }

    pub fn is_involution(&self) -> bool {
        self.recv_from
            .iter()
            .enumerate()
            .all(|(j, &i)| self.recv_from[i] == j)
    }

    /// The 0/1 switch matrix.
    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.n(), self.n(), |j, i| {
            C64::new(if self.recv_from[j] == i { 1.0 } else { 0.0 }, 0.0)
        })
    }

    /// `P x`: entry `j` of the output is `x[recv_from[j]]`.
    pub fn apply<T: Clone>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n());
        self.recv_from.iter().map(|&i| x[i].clone()).collect()
    }

    /// Renames every station `s` to `relabel.destination_of(s)`. If this
    /// permutation sends `i -> j` the result sends `σ(i) -> σ(j)`.
    pub fn relabel(&self, relabel: &Permutation) -> Permutation {
        assert_eq!(relabel.n(), self.n());
        let sigma = relabel.destinations();
        let mut recv_from = vec![0; self.n()];
        for (j, &i) in self.recv_from.iter().enumerate() {
            recv_from[sigma[j]] = sigma[i];
        }
        Permutation { recv_from }
    }

    /// Bitmask of the switch-matrix cells `(j, recv_from[j])`, laid out
    /// row-major. Only valid for `n <= 8`.
    fn cell_mask(&self) -> u64 {
        let n = self.n();
        self.recv_from
            .iter()
            .enumerate()
            .fold(0u64, |m, (j, &i)| m | 1 << (j * n + i))
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, i) in self.recv_from.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", i + 1)?;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let recv_from = s
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| match t.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(Error::InvalidPermutation(format!("bad station label {t:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if recv_from.is_empty() {
            return Err(Error::InvalidPermutation("empty permutation".into()));
        }
        Permutation::new(recv_from)
    }
}

/// A fixed-point-free permutation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Derangement(Permutation);

impl Derangement {
    pub fn new(recv_from: Vec<usize>) -> Result<Self> {
        Permutation::new(recv_from)?.try_into()
    }

    pub fn as_permutation(&self) -> &Permutation {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    pub fn recv_from(&self) -> &[usize] {
        self.0.recv_from()
    }

    pub fn relabel(&self, relabel: &Permutation) -> Derangement {
        Derangement(self.0.relabel(relabel))
    }
}

impl TryFrom<Permutation> for Derangement {
    type Error = Error;

    fn try_from(p: Permutation) -> Result<Self> {
        if let Some(j) = p.recv_from.iter().enumerate().position(|(j, &i)| i == j) {
            return Err(Error::InvalidPermutation(format!(
                "station {} is a fixed point",
                j + 1
            )));
        }
        Ok(Derangement(p))
    }
}

impl std::ops::Deref for Derangement {
    type Target = Permutation;

    fn deref(&self) -> &Permutation {
        &self.0
    }
}

impl fmt::Display for Derangement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for Derangement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<Permutation>()?.try_into()
    }
}

/// `n - 1` derangements whose switch matrices sum to `J - I`.
///
/// Stored in canonical (lexicographic) order so that equal sets compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CondensedSet {
    n: usize,
    derangements: Vec<Derangement>,
}

impl CondensedSet {
    pub fn new(mut derangements: Vec<Derangement>) -> Result<Self> {
        let n = derangements.first().map(Derangement::n).unwrap_or(0);
        if n < 2 {
            return Err(Error::InvalidConfig(
                "a condensed set needs at least two stations".into(),
            ));
        }
        if !is_condensed(&derangements) {
            return Err(Error::InvalidPermutation(
                "derangements do not cover every ordered pair exactly once".into(),
            ));
        }
        derangements.sort();
        Ok(Self { n, derangements })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn derangements(&self) -> &[Derangement] {
        &self.derangements
    }

    pub fn len(&self) -> usize {
        self.derangements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.derangements.is_empty()
    }

    /// Index of the member that sends `source -> destination`.
    pub fn slot_serving(&self, source: usize, destination: usize) -> Option<usize> {
        self.derangements
            .iter()
            .position(|d| d.recv_from()[destination] == source)
    }

    pub fn relabel(&self, relabel: &Permutation) -> CondensedSet {
        let mut derangements: Vec<_> = self.derangements.iter().map(|d| d.relabel(relabel)).collect();
        derangements.sort();
        CondensedSet {
            n: self.n,
            derangements,
        }
    }
}

impl fmt::Display for CondensedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.derangements {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

/// `d_n = n d_{n-1} + (-1)^n` with `d_1 = 0` (and `d_0 = 1`).
pub fn derangement_count(n: usize) -> u128 {
    let mut d: u128 = 1;
    for k in 1..=n {
        d *= k as u128;
        if k % 2 == 0 {
            d += 1;
        } else {
            d -= 1;
        }
    }
    d
}

/// All derangements of `n` stations in lexicographic order of `recv_from`.
pub fn enumerate_derangements(n: usize) -> Result<Vec<Derangement>> {
    if n > MAX_ENUMERATION_N {
        return Err(Error::TooLarge {
            what: "derangement enumeration",
            n,
            max: MAX_ENUMERATION_N,
        });
    }
    if n == 0 {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }

    fn extend(j: usize, current: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Derangement>) {
        let n = used.len();
        if j == n {
            out.push(Derangement(Permutation {
                recv_from: current.clone(),
            }));
            return;
        }
        for i in 0..n {
            if i == j || used[i] {
                continue;
            }
            used[i] = true;
            current.push(i);
            extend(j + 1, current, used, out);
            current.pop();
            used[i] = false;
        }
    }

    let mut out = Vec::with_capacity(derangement_count(n) as usize);
    extend(0, &mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    Ok(out)
}

/// True iff the switch matrices of `set` sum to `J - I`.
pub fn is_condensed(set: &[Derangement]) -> bool {
    let Some(n) = set.first().map(Derangement::n) else {
        return false;
    };
    if set.len() + 1 != n || set.iter().any(|d| d.n() != n) {
        return false;
    }
    let mut covered = vec![false; n * n];
    for d in set {
        for (j, &i) in d.recv_from().iter().enumerate() {
            if i == j || std::mem::replace(&mut covered[j * n + i], true) {
                return false;
            }
        }
    }
    true
}

fn check_condensed_bounds(n: usize) -> Result<()> {
    if n > MAX_CONDENSED_N {
        return Err(Error::TooLarge {
            what: "condensed-set search",
            n,
            max: MAX_CONDENSED_N,
        });
    }
    if n < 2 {
        return Err(Error::InvalidConfig(
            "condensed sets need at least two stations".into(),
        ));
    }
    Ok(())
}

/// Exact-cover search over the off-diagonal cells of `J - I`.
///
/// Calls `visit` with the (increasing) indices into `derangements` of each
/// condensed set. Cells are taken in row-major order and candidates in list
/// order, so each unordered set is visited exactly once.
pub fn for_each_condensed_set(derangements: &[Derangement], mut visit: impl FnMut(&[usize])) {
    let Some(n) = derangements.first().map(Derangement::n) else {
        return;
    };
    assert!(n <= 8, "cell masks hold at most 8x8 cells");
    let masks: Vec<u64> = derangements.iter().map(|d| d.cell_mask()).collect();
    let full: u64 = (0..n)
        .flat_map(|j| (0..n).filter(move |&i| i != j).map(move |i| 1u64 << (j * n + i)))
        .fold(0, |a, b| a | b);
    // by_cell[c] lists derangements covering cell c, in enumeration order.
    let mut by_cell: Vec<Vec<usize>> = vec![Vec::new(); n * n];
    for (k, &m) in masks.iter().enumerate() {
        for (c, cell) in by_cell.iter_mut().enumerate() {
            if m >> c & 1 == 1 {
                cell.push(k);
            }
        }
    }

    fn search(
        covered: u64,
        full: u64,
        masks: &[u64],
        by_cell: &[Vec<usize>],
        chosen: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        let open = full & !covered;
        if open == 0 {
            let mut sorted = chosen.clone();
            sorted.sort_unstable();
            visit(&sorted);
            return;
        }
        let cell = open.trailing_zeros() as usize;
        for &k in &by_cell[cell] {
            if masks[k] & covered == 0 {
                chosen.push(k);
                search(covered | masks[k], full, masks, by_cell, chosen, visit);
                chosen.pop();
            }
        }
    }

    search(0, full, &masks, &by_cell, &mut Vec::new(), &mut visit);
}

/// All condensed derangement sets for `n` stations, canonically ordered.
pub fn enumerate_condensed_sets(n: usize) -> Result<Vec<CondensedSet>> {
    check_condensed_bounds(n)?;
    let derangements = enumerate_derangements(n)?;
    let mut index_sets = Vec::new();
    for_each_condensed_set(&derangements, |idx| index_sets.push(idx.to_vec()));
    // Indices follow lexicographic derangement order, so sorting index
    // tuples sorts the sets themselves.
    index_sets.sort_unstable();
    Ok(index_sets
        .into_iter()
        .map(|idx| CondensedSet {
            n,
            derangements: idx.into_iter().map(|k| derangements[k].clone()).collect(),
        })
        .collect())
}

/// Number of unordered condensed sets, without materializing them.
pub fn count_condensed_sets(n: usize) -> Result<u64> {
    check_condensed_bounds(n)?;
    let derangements = enumerate_derangements(n)?;
    let mut count = 0u64;
    for_each_condensed_set(&derangements, |_| count += 1);
    Ok(count)
}

/// Multiplies an unordered count by the `(n-1)!` orderings of each set.
pub fn ordered_condensed_count(unordered: u64, n: usize) -> u128 {
    (1..n as u128).product::<u128>() * unordered as u128
}

/// Serializes condensed sets: one derangement per line, blank line between sets.
pub fn format_condensed_sets(sets: &[CondensedSet]) -> String {
    sets.iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn parse_condensed_sets(text: &str) -> Result<Vec<CondensedSet>> {
    let mut sets = Vec::new();
    let mut current = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            if !current.is_empty() {
                sets.push(CondensedSet::new(std::mem::take(&mut current))?);
            }
            continue;
        }
        let d = line.parse::<Derangement>().map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        current.push(d);
    }
    if !current.is_empty() {
        sets.push(CondensedSet::new(current)?);
    }
    Ok(sets)
}
