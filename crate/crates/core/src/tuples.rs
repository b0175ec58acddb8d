//! t-way tuples and their dense ranking.
//!
//! A [`TupleSpace`] orders every `t`-way tuple of a model by factor subset
//! (lexicographic) and then by level combination (mixed radix, lexicographic),
//! so a tuple's rank doubles as its position in the sort order used for
//! reporting. [`TupleSet`] is a bitmap over that universe.

use serde::{Deserialize, Serialize};

use crate::model::{Assignment, Model, ModelError};

/// Iterator over all `t`-subsets of `0..k` in lexicographic order.
#[derive(Debug, Clone)]
pub struct Combinations {
    k: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(k: usize, t: usize) -> Self {
        let current = (t <= k).then(|| (0..t).collect());
        Combinations { k, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().unwrap();
        let t = cur.len();
        let mut i = t;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if cur[i] < self.k - t + i {
                cur[i] += 1;
                for j in i + 1..t {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// A `t`-way combination: strictly increasing factor indices with one level each.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Tuple {
    factors: Vec<usize>,
    levels: Vec<usize>,
}

impl Tuple {
    /// Returns `None` unless factor indices are strictly increasing and the
    /// two lists have the same non-zero length.
    pub fn new(factors: Vec<usize>, levels: Vec<usize>) -> Option<Self> {
        let ok = !factors.is_empty()
            && factors.len() == levels.len()
            && factors.windows(2).all(|w| w[0] < w[1]);
        ok.then_some(Tuple { factors, levels })
    }

    /// Builds a tuple from unordered `(factor, level)` pairs.
    pub fn from_pairs(mut pairs: Vec<(usize, usize)>) -> Option<Self> {
        pairs.sort_unstable();
        let (factors, levels) = pairs.into_iter().unzip();
        Tuple::new(factors, levels)
    }

    /// Looks factors and levels up by name.
    pub fn from_names(model: &Model, factors: &[&str], levels: &[&str]) -> Option<Self> {
        if factors.len() != levels.len() {
            return None;
        }
        let mut pairs = Vec::with_capacity(factors.len());
        for (f, l) in factors.iter().zip(levels) {
            let fi = model.factor_index(f)?;
            let li = model.factor(fi).level_index(l)?;
            pairs.push((fi, li));
        }
        Tuple::from_pairs(pairs)
    }

    pub fn strength(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn conforms(&self, model: &Model) -> bool {
        self.factors
            .iter()
            .zip(&self.levels)
            .all(|(&f, &l)| f < model.k() && l < model.factor(f).level_count())
    }

    /// Whether `assignment` sets every factor of the tuple to the tuple's level.
    pub fn contained_in(&self, assignment: &[usize]) -> bool {
        self.factors
            .iter()
            .zip(&self.levels)
            .all(|(&f, &l)| assignment.get(f) == Some(&l))
    }

    pub fn factor_names<'a>(&self, model: &'a Model) -> Vec<&'a str> {
        self.factors.iter().map(|&f| model.factor(f).name()).collect()
    }

    pub fn level_names<'a>(&self, model: &'a Model) -> Vec<&'a str> {
        self.factors
            .iter()
            .zip(&self.levels)
            .map(|(&f, &l)| model.factor(f).levels()[l].as_str())
            .collect()
    }

    /// `name=level` pairs joined by commas.
    pub fn display(&self, model: &Model) -> String {
        self.factor_names(model)
            .iter()
            .zip(self.level_names(model))
            .map(|(f, l)| format!("{f}={l}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Dense ranking of all `t`-way tuples of a model.
#[derive(Debug, Clone)]
pub struct TupleSpace {
    strength: usize,
    shape: Vec<usize>,
    subsets: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    sizes: Vec<usize>,
    total: usize,
}

impl TupleSpace {
    pub fn new(model: &Model, t: usize) -> Result<Self, ModelError> {
        let total = model.tuple_count(t)?;
        let total = usize::try_from(total).map_err(|_| ModelError::TupleCountOverflow(t))?;
        let shape = model.shape();
        let subsets: Vec<Vec<usize>> = Combinations::new(model.k(), t).collect();
        let mut offsets = Vec::with_capacity(subsets.len());
        let mut sizes = Vec::with_capacity(subsets.len());
        let mut offset = 0;
        for s in &subsets {
            let size: usize = s.iter().map(|&i| shape[i]).product();
            offsets.push(offset);
            sizes.push(size);
            offset += size;
        }
        debug_assert_eq!(offset, total);
        Ok(TupleSpace {
            strength: t,
            shape,
            subsets,
            offsets,
            sizes,
            total,
        })
    }

    pub fn strength(&self) -> usize {
        self.strength
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn subset_count(&self) -> usize {
        self.subsets.len()
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    /// Rank of the tuple projected from `row` onto subset `subset`.
    #[inline]
    pub fn rank_in_subset(&self, subset: usize, row: &[usize]) -> usize {
        let mut r = 0;
        for &f in &self.subsets[subset] {
            r = r * self.shape[f] + row[f];
        }
        self.offsets[subset] + r
    }

    /// Ranks of every `t`-tuple contained in `row`, one per subset.
    pub fn ranks<'a>(&'a self, row: &'a [usize]) -> impl Iterator<Item = usize> + 'a {
        (0..self.subsets.len()).map(move |s| self.rank_in_subset(s, row))
    }

    pub fn rank(&self, tuple: &Tuple) -> Option<usize> {
        if tuple.strength() != self.strength {
            return None;
        }
        let subset = self.subsets.binary_search_by(|s| s.as_slice().cmp(tuple.factors())).ok()?;
        let mut r = 0;
        for (&f, &l) in tuple.factors().iter().zip(tuple.levels()) {
            if l >= self.shape[f] {
                return None;
            }
            r = r * self.shape[f] + l;
        }
        Some(self.offsets[subset] + r)
    }

    /// Subset index a rank belongs to.
    pub fn subset_of(&self, rank: usize) -> usize {
        self.offsets.partition_point(|&o| o <= rank) - 1
    }

    pub fn unrank(&self, rank: usize) -> Tuple {
        assert!(rank < self.total, "rank {rank} out of range");
        let subset = self.subset_of(rank);
        let factors = self.subsets[subset].clone();
        let mut r = rank - self.offsets[subset];
        let mut levels = vec![0; factors.len()];
        for (i, &f) in factors.iter().enumerate().rev() {
            levels[i] = r % self.shape[f];
            r /= self.shape[f];
        }
        Tuple { factors, levels }
    }
}

/// Covered/uncovered membership over a [`TupleSpace`].
#[derive(Debug, Clone)]
pub struct TupleSet {
    space: TupleSpace,
    bits: Vec<u64>,
    covered: usize,
    uncovered_per_subset: Vec<usize>,
}

impl TupleSet {
    pub fn new(space: TupleSpace) -> Self {
        let bits = vec![0; space.total.div_ceil(64)];
        let uncovered_per_subset = space.sizes.clone();
        TupleSet {
            space,
            bits,
            covered: 0,
            uncovered_per_subset,
        }
    }

    pub fn space(&self) -> &TupleSpace {
        &self.space
    }

    #[inline]
    pub fn contains(&self, rank: usize) -> bool {
        self.bits[rank / 64] & (1 << (rank % 64)) != 0
    }

    /// Marks `rank` covered; returns whether it was newly covered.
    #[inline]
    pub fn insert(&mut self, rank: usize) -> bool {
        let mask = 1 << (rank % 64);
        let word = &mut self.bits[rank / 64];
        if *word & mask != 0 {
            return false;
        }
        *word |= mask;
        self.covered += 1;
        let subset = self.space.subset_of(rank);
        self.uncovered_per_subset[subset] -= 1;
        true
    }

    /// Marks every tuple of `row` covered; returns how many were new.
    pub fn cover_row(&mut self, row: &[usize]) -> usize {
        let mut fresh = 0;
        for s in 0..self.space.subset_count() {
            let r = self.space.rank_in_subset(s, row);
            let mask = 1 << (r % 64);
            if self.bits[r / 64] & mask == 0 {
                self.bits[r / 64] |= mask;
                self.covered += 1;
                self.uncovered_per_subset[s] -= 1;
                fresh += 1;
            }
        }
        fresh
    }

    /// Number of tuples of `row` not yet covered, without marking them.
    #[inline]
    pub fn count_new(&self, row: &[usize]) -> usize {
        (0..self.space.subset_count())
            .filter(|&s| !self.contains(self.space.rank_in_subset(s, row)))
            .count()
    }

    pub fn covered(&self) -> usize {
        self.covered
    }

    pub fn total(&self) -> usize {
        self.space.total
    }

    pub fn uncovered(&self) -> usize {
        self.space.total - self.covered
    }

    pub fn is_complete(&self) -> bool {
        self.covered == self.space.total
    }

    /// Number of factor subsets that still have at least one uncovered tuple;
    /// an upper bound on what any single row can newly cover.
    pub fn open_subsets(&self) -> usize {
        self.uncovered_per_subset.iter().filter(|&&n| n > 0).count()
    }

    /// First uncovered rank at or after `from`, wrapping around.
    pub fn next_uncovered(&self, from: usize) -> Option<usize> {
        if self.is_complete() {
            return None;
        }
        let total = self.space.total;
        (from..total).chain(0..from).find(|&r| !self.contains(r))
    }

    pub fn uncovered_ranks(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.space.total).filter(move |&r| !self.contains(r))
    }

    pub fn cover_all<'a, I>(&mut self, rows: I)
    where
        I: IntoIterator<Item = &'a Assignment>,
    {
        for row in rows {
            self.cover_row(row.values());
        }
    }
}
