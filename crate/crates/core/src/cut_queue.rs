//! Priority structure for Prim's cut edges over discretized weights.
//!
//! All `m` edges live in one array sorted by descending group key (ties by
//! edge id). Each group owns a contiguous interval whose active edges are
//! packed to the left, so insert and delete are a single swap plus a counter
//! update. Group activity counts are aggregated in up to four layers of
//! blocks with fanout `b = ⌈g^{1/layers}⌉` over the `g` occurring groups.
//! Locating the best active group, counting the active edges in a key range
//! and selecting the `r`-th of them each read `O(layers · b)` block
//! counters, while an update touches one counter per layer.

use std::cmp::Reverse;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::graph::{EdgeId, Graph, WeightAssignment};
use crate::rnm::{discretize, GroupedCandidates};
use crate::{Error, Result};

pub const DEFAULT_LAYERS: usize = 4;

#[derive(Debug, Default)]
struct Counter(AtomicU64);

impl Counter {
    #[inline]
    fn add(&self, v: u64) {
        self.0.fetch_add(v, Ordering::Relaxed);
    }

    fn set(&self, v: u64) {
        self.0.store(v, Ordering::Relaxed);
    }

    fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

impl Clone for Counter {
    fn clone(&self) -> Self {
        Counter(AtomicU64::new(self.get()))
    }
}

#[derive(Debug, Clone, Copy)]
struct GroupSpan {
    key: i64,
    begin: u32,
    end: u32,
}

#[derive(Debug, Clone)]
pub struct CutQueue {
    step: f64,
    fanout: usize,
    // edges sorted by (key desc, id asc); active ones packed left per group
    slots: Vec<EdgeId>,
    position: Vec<u32>,
    edge_group: Vec<u32>,
    active: Vec<bool>,
    groups: Vec<GroupSpan>,
    key_index: HashMap<i64, u32>,
    // levels[0][i] = active edges in group i; levels[l][j] sums block j of
    // levels[l - 1], i.e. entries j*fanout .. (j+1)*fanout.
    levels: Vec<Vec<u32>>,
    total_active: usize,
    reads: Counter,
    last_lookup: Counter,
    writes: Counter,
}

fn fanout_for(groups: usize, layers: usize) -> usize {
    if groups <= 1 {
        return 1;
    }
    if layers == 1 {
        return groups;
    }
    let fits = |b: usize| (b as u128).pow(layers as u32) >= groups as u128;
    let mut b = (groups as f64).powf(1.0 / layers as f64).ceil().max(2.0) as usize;
    while !fits(b) {
        b += 1;
    }
    while b > 2 && fits(b - 1) {
        b -= 1;
    }
    b
}

impl CutQueue {
    /// Builds the structure with every edge inactive, keyed by
    /// `⌊±w_e / step⌋` (`-w_e` when `negate`).
    pub fn build(g: &Graph, w: &WeightAssignment, step: f64, negate: bool) -> Result<Self> {
        Self::build_with_layers(g, w, step, negate, DEFAULT_LAYERS)
    }

    pub fn build_with_layers(
        g: &Graph,
        w: &WeightAssignment,
        step: f64,
        negate: bool,
        layers: usize,
    ) -> Result<Self> {
        if !(1..=4).contains(&layers) {
            return Err(Error::param(format!("layer count must be in 1..=4, got {layers}")));
        }
        if w.len() != g.edge_count() {
            return Err(Error::param("weight assignment does not match graph"));
        }
        let sign = if negate { -1.0 } else { 1.0 };
        let keys = w
            .weights()
            .iter()
            .map(|&x| discretize(sign * x, step))
            .collect::<Result<Vec<i64>>>()?;
        let slots = sort_by_key_desc(&keys);

        let m = slots.len();
        let mut position = vec![0u32; m];
        let mut edge_group = vec![0u32; m];
        let mut groups: Vec<GroupSpan> = Vec::new();
        for (i, &e) in slots.iter().enumerate() {
            position[e.index()] = i as u32;
            let key = keys[e.index()];
            match groups.last_mut() {
                Some(span) if span.key == key => span.end += 1,
                _ => groups.push(GroupSpan {
                    key,
                    begin: i as u32,
                    end: i as u32 + 1,
                }),
            }
            edge_group[e.index()] = groups.len() as u32 - 1;
        }
        let key_index = groups.iter().enumerate().map(|(i, s)| (s.key, i as u32)).collect();

        let fanout = fanout_for(groups.len(), layers);
        let mut levels = vec![vec![0u32; groups.len()]];
        // a level that already fits in one block is the top
        for _ in 1..layers {
            let below = levels.last().unwrap().len();
            if below <= fanout {
                break;
            }
            levels.push(vec![0u32; below.div_ceil(fanout).max(1)]);
        }

        Ok(Self {
            step,
            fanout,
            slots,
            position,
            edge_group,
            active: vec![false; m],
            groups,
            key_index,
            levels,
            total_active: 0,
            reads: Counter::default(),
            last_lookup: Counter::default(),
            writes: Counter::default(),
        })
    }

    fn check_edge(&self, e: EdgeId) -> Result<()> {
        if e.index() < self.active.len() {
            Ok(())
        } else {
            Err(Error::UnknownEdge(e))
        }
    }

    #[inline]
    fn bump(&mut self, group: usize, up: bool) {
        let mut idx = group;
        for level in self.levels.iter_mut() {
            if up {
                level[idx] += 1;
            } else {
                level[idx] -= 1;
            }
            idx /= self.fanout;
        }
        self.writes.add(self.levels.len() as u64);
    }

    fn swap_slots(&mut self, a: usize, b: usize) {
        if a != b {
            self.slots.swap(a, b);
            self.position[self.slots[a].index()] = a as u32;
            self.position[self.slots[b].index()] = b as u32;
        }
        self.writes.add(1);
    }

    /// Activates an edge in O(layers).
    pub fn insert(&mut self, e: EdgeId) -> Result<()> {
        self.check_edge(e)?;
        if self.active[e.index()] {
            return Err(Error::AlreadyActive(e));
        }
        let group = self.edge_group[e.index()] as usize;
        let first_free = self.groups[group].begin as usize + self.levels[0][group] as usize;
        self.swap_slots(self.position[e.index()] as usize, first_free);
        self.active[e.index()] = true;
        self.bump(group, true);
        self.total_active += 1;
        Ok(())
    }

    /// Deactivates an edge in O(layers).
    pub fn delete(&mut self, e: EdgeId) -> Result<()> {
        self.check_edge(e)?;
        if !self.active[e.index()] {
            return Err(Error::NotActive(e));
        }
        let group = self.edge_group[e.index()] as usize;
        let last_active = self.groups[group].begin as usize + self.levels[0][group] as usize - 1;
        self.swap_slots(self.position[e.index()] as usize, last_active);
        self.active[e.index()] = false;
        self.bump(group, false);
        self.total_active -= 1;
        Ok(())
    }

    pub fn is_active(&self, e: EdgeId) -> bool {
        self.active.get(e.index()).copied().unwrap_or(false)
    }

    pub fn active_count(&self) -> usize {
        self.total_active
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn layers(&self) -> usize {
        self.levels.len()
    }

    pub fn fanout(&self) -> usize {
        self.fanout
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Group key of an edge.
    pub fn key_of(&self, e: EdgeId) -> Result<i64> {
        self.check_edge(e)?;
        Ok(self.groups[self.edge_group[e.index()] as usize].key)
    }

    /// Block counters read by queries so far.
    pub fn comparisons(&self) -> u64 {
        self.reads.get()
    }

    /// Block counters read by the most recent max lookup.
    pub fn last_lookup_comparisons(&self) -> u64 {
        self.last_lookup.get()
    }

    /// Slot swaps plus counter writes performed by updates so far.
    pub fn update_work(&self) -> u64 {
        self.writes.get()
    }

    /// Index of the best group with an active edge.
    fn top_group(&self) -> Option<usize> {
        if self.total_active == 0 {
            return None;
        }
        let mut reads = 0u64;
        let mut lo = 0usize;
        let mut hi = self.levels.last().unwrap().len();
        let mut found = 0usize;
        for level in self.levels.iter().rev() {
            let end = hi.min(level.len());
            found = (lo..end)
                .find(|&j| {
                    reads += 1;
                    level[j] > 0
                })
                .expect("aggregate counts out of sync");
            lo = found * self.fanout;
            hi = lo + self.fanout;
        }
        self.reads.add(reads);
        self.last_lookup.set(reads);
        Some(found)
    }

    /// Active edges in groups `lo..hi`. Partial blocks are scanned at each
    /// level and whole blocks are summed one level up.
    fn range_sum(&self, lo: usize, hi: usize) -> usize {
        let b = self.fanout;
        let top = self.levels.len() - 1;
        let (mut lo, mut hi) = (lo, hi.min(self.groups.len()));
        let mut reads = 0u64;
        let mut sum = 0usize;
        let mut scan = |level: &[u32], from: usize, to: usize| {
            for &c in &level[from..to] {
                sum += c as usize;
            }
            reads += (to - from) as u64;
        };
        for (l, level) in self.levels.iter().enumerate() {
            if lo >= hi {
                break;
            }
            let (lb, hb) = (lo.div_ceil(b) * b, hi / b * b);
            if l == top || lb >= hb {
                scan(level, lo, hi);
                break;
            }
            scan(level, lo, lb);
            scan(level, hb, hi);
            lo = lb / b;
            hi = hb / b;
        }
        self.reads.add(reads);
        sum
    }

    /// Group and in-group offset of the `rank`-th active edge in groups
    /// `from..`. Climbs while the rest of the current block is too small,
    /// then descends into the block holding the target.
    fn select_in_suffix(&self, from: usize, rank: usize) -> Option<(usize, usize)> {
        let b = self.fanout;
        let top = self.levels.len() - 1;
        let mut reads = 0u64;
        let mut remaining = rank;
        let mut idx = from;
        let mut found = None;
        for (l, level) in self.levels.iter().enumerate() {
            let end = if l == top {
                level.len()
            } else {
                ((idx / b + 1) * b).min(level.len())
            };
            for (j, &c) in level.iter().enumerate().take(end).skip(idx) {
                reads += 1;
                if remaining < c as usize {
                    found = Some((l, j));
                    break;
                }
                remaining -= c as usize;
            }
            if found.is_some() {
                break;
            }
            idx = idx / b + 1;
        }
        let Some((mut l, mut j)) = found else {
            self.reads.add(reads);
            return None;
        };
        while l > 0 {
            l -= 1;
            let level = &self.levels[l];
            let lo = j * b;
            let hi = (lo + b).min(level.len());
            let mut next = None;
            for (k, &c) in level.iter().enumerate().take(hi).skip(lo) {
                reads += 1;
                if remaining < c as usize {
                    next = Some(k);
                    break;
                }
                remaining -= c as usize;
            }
            j = next.expect("aggregate counts out of sync");
        }
        self.reads.add(reads);
        Some((j, remaining))
    }

    fn member(&self, group: usize, offset: usize) -> EdgeId {
        self.slots[self.groups[group].begin as usize + offset]
    }

    /// Largest key with an active edge, and its active count.
    pub fn max_active_group(&self) -> Option<(i64, usize)> {
        self.top_group()
            .map(|g| (self.groups[g].key, self.levels[0][g] as usize))
    }

    // first group index with key <= key_hi
    fn first_at_most(&self, key_hi: i64) -> usize {
        self.groups.partition_point(|s| s.key > key_hi)
    }

    /// Number of active edges whose key lies in `[key_lo, key_hi]`.
    pub fn active_range_count(&self, key_lo: i64, key_hi: i64) -> usize {
        if key_lo > key_hi || self.groups.is_empty() {
            return 0;
        }
        let first = self.first_at_most(key_hi);
        let end = self.groups.partition_point(|s| s.key >= key_lo);
        if first >= end {
            return 0;
        }
        self.range_sum(first, end)
    }

    /// The `rank`-th active edge, in structure order, among groups with key
    /// at most `key_hi`.
    pub fn select_active_by_rank(&self, key_hi: i64, rank: usize) -> Result<EdgeId> {
        let from = self.first_at_most(key_hi);
        match self.select_in_suffix(from, rank) {
            Some((g, offset)) => Ok(self.member(g, offset)),
            None => Err(Error::RankOutOfRange {
                rank,
                available: self.count_from(from),
            }),
        }
    }

    fn group_of_key(&self, key: i64) -> Result<usize> {
        self.key_index
            .get(&key)
            .map(|&g| g as usize)
            .ok_or(Error::UnknownGroup(key))
    }

    /// Active members of the group with this key, in O(1).
    pub fn group_active_count(&self, key: i64) -> Result<usize> {
        Ok(self.levels[0][self.group_of_key(key)?] as usize)
    }

    /// The `i`-th active member of the group with this key, in O(1).
    pub fn group_active_member(&self, key: i64, i: usize) -> Result<EdgeId> {
        let g = self.group_of_key(key)?;
        let available = self.levels[0][g] as usize;
        if i >= available {
            return Err(Error::RankOutOfRange { rank: i, available });
        }
        Ok(self.member(g, i))
    }

    /// Recomputes every invariant from scratch.
    pub fn audit(&self) -> bool {
        let m = self.slots.len();
        if self.position.len() != m || self.active.len() != m || self.edge_group.len() != m {
            return false;
        }
        // the slot array is a permutation inverted by `position`
        let mut seen = vec![false; m];
        for (i, &e) in self.slots.iter().enumerate() {
            if e.index() >= m || seen[e.index()] || self.position[e.index()] as usize != i {
                return false;
            }
            seen[e.index()] = true;
        }
        // groups tile the array in strictly descending key order
        let mut cursor = 0u32;
        for (gi, span) in self.groups.iter().enumerate() {
            if span.begin != cursor || span.end <= span.begin {
                return false;
            }
            if gi > 0 && self.groups[gi - 1].key <= span.key {
                return false;
            }
            if self.key_index.get(&span.key) != Some(&(gi as u32)) {
                return false;
            }
            cursor = span.end;
            let count = self.levels[0][gi];
            if count > span.end - span.begin {
                return false;
            }
            for p in span.begin..span.end {
                let e = self.slots[p as usize];
                if self.edge_group[e.index()] as usize != gi {
                    return false;
                }
                if self.active[e.index()] != (p < span.begin + count) {
                    return false;
                }
            }
        }
        if cursor as usize != m || self.key_index.len() != self.groups.len() {
            return false;
        }
        if self.levels.last().unwrap().len() > self.fanout.max(1) {
            return false;
        }
        for l in 1..self.levels.len() {
            let (below, here) = (&self.levels[l - 1], &self.levels[l]);
            if here.len() != below.len().div_ceil(self.fanout).max(1) {
                return false;
            }
            for (j, &agg) in here.iter().enumerate() {
                let lo = (j * self.fanout).min(below.len());
                let hi = ((j + 1) * self.fanout).min(below.len());
                if below[lo..hi].iter().sum::<u32>() != agg {
                    return false;
                }
            }
        }
        let total: usize = self.levels[0].iter().map(|&c| c as usize).sum();
        total == self.total_active && self.active.iter().filter(|&&a| a).count() == total
    }
}

/// Edge ids ordered by descending key, ties by ascending id. Already sorted
/// input is detected in one pass; narrow key ranges use a counting sort.
fn sort_by_key_desc(keys: &[i64]) -> Vec<EdgeId> {
    let m = keys.len();
    let ids = || (0..m as u32).map(EdgeId);
    if keys.windows(2).all(|w| w[0] >= w[1]) {
        return ids().collect();
    }
    let (lo, hi) = keys
        .iter()
        .fold((i64::MAX, i64::MIN), |(lo, hi), &k| (lo.min(k), hi.max(k)));
    let range = hi.abs_diff(lo) as u128 + 1;
    if range <= 4 * m as u128 {
        let buckets = range as usize;
        let mut start = vec![0usize; buckets + 1];
        for &k in keys {
            start[(hi - k) as usize + 1] += 1;
        }
        for i in 1..=buckets {
            start[i] += start[i - 1];
        }
        let mut out = vec![EdgeId(0); m];
        for e in ids() {
            let b = (hi - keys[e.index()]) as usize;
            out[start[b]] = e;
            start[b] += 1;
        }
        return out;
    }
    let mut out: Vec<EdgeId> = ids().collect();
    out.sort_unstable_by_key(|&e| (Reverse(keys[e.index()]), e));
    out
}

impl GroupedCandidates for CutQueue {
    fn step(&self) -> f64 {
        self.step
    }

    fn slot_count(&self) -> usize {
        self.groups.len()
    }

    fn slot_key(&self, slot: usize) -> i64 {
        self.groups[slot].key
    }

    fn slot_len(&self, slot: usize) -> usize {
        self.levels[0][slot] as usize
    }

    fn slot_member(&self, slot: usize, i: usize) -> EdgeId {
        self.member(slot, i)
    }

    fn top_slot(&self) -> Option<usize> {
        self.top_group()
    }

    fn count_from(&self, from: usize) -> usize {
        self.range_sum(from, self.groups.len())
    }

    fn select_from(&self, from: usize, rank: usize) -> (EdgeId, usize) {
        let (g, offset) = self
            .select_in_suffix(from, rank)
            .expect("rank beyond active count");
        (self.member(g, offset), g)
    }
}
