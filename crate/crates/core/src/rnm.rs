//! Private selection by Report-Noisy-Max with exponential noise.
//!
//! [`rnm_naive`] draws one noise value per candidate and is the reference
//! law every faster variant must reproduce. The fast path works on
//! candidates discretized to multiples of a step `s` and grouped by key:
//!
//! * inside a group only the largest noise value matters, so one draw from
//!   the max-of-exponentials law per group suffices ([`rnm_grouped`]);
//! * groups more than `M` below the best key form the bottom set `L`. An
//!   element of `L` can only win if its noise exceeds `M`; the number of
//!   such elements is binomial and their excess noise is again exponential
//!   by memorylessness ([`sample_bottom_tail`]). Bottom elements whose
//!   noise stays below `M` are never materialized: their clipped score is
//!   strictly below the best key, which the top group always reaches.
//!
//! The module is sign agnostic: it reports a noisy *maximum*. MST callers
//! pass negated weights.

use std::cmp::Ordering;

use crate::graph::EdgeId;
use crate::noise::{self, Rate, RngStream};
use crate::{Error, Result};

/// Largest integer `g` with `g * step <= score`.
pub fn discretize(score: f64, step: f64) -> Result<i64> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::param(format!("step must be > 0, got {step}")));
    }
    if !score.is_finite() {
        return Err(Error::param(format!("score {score} is not finite")));
    }
    let q = (score / step).floor();
    if q.abs() >= 9.0e15 {
        return Err(Error::param(format!("score {score} too large for step {step}")));
    }
    let mut g = q as i64;
    // Division can round across an integer boundary; settle on the exact floor.
    if (g as f64) * step > score {
        g -= 1;
    } else if ((g + 1) as f64) * step <= score {
        g += 1;
    }
    Ok(g)
}

/// A selectable item with its base score (already negated when minimizing).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub edge: EdgeId,
    pub score: f64,
}

/// Outcome of one selection together with work counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub edge: EdgeId,
    /// Noise values drawn, including the binomial draw for the bottom set.
    pub samples_drawn: u64,
    /// Groups that received a max-of-exponentials draw.
    pub top_groups: u64,
    /// Size of the bottom set `L`.
    pub bottom_size: u64,
    /// Bottom candidates that received explicit noise.
    pub bottom_hits: u64,
}

impl Selection {
    fn new(edge: EdgeId, samples_drawn: u64) -> Self {
        Self {
            edge,
            samples_drawn,
            top_groups: 0,
            bottom_size: 0,
            bottom_hits: 0,
        }
    }
}

// Noisy value with the deterministic tie-break: larger base score, then
// lower edge id.
#[derive(Debug, Clone, Copy)]
struct Contender {
    value: f64,
    base: f64,
    edge: EdgeId,
}

impl Contender {
    fn beats(&self, other: &Contender) -> bool {
        match self.value.total_cmp(&other.value) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => match self.base.total_cmp(&other.base) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => self.edge < other.edge,
            },
        }
    }
}

/// Reference Report-Noisy-Max: one independent `Exp(rate)` per candidate.
pub fn rnm_naive(rng: &mut RngStream, candidates: &[Candidate], rate: Rate) -> Result<Selection> {
    let mut best: Option<Contender> = None;
    for c in candidates {
        let z = noise::sample_exp(rng, rate);
        let me = Contender {
            value: c.score + z,
            base: c.score,
            edge: c.edge,
        };
        if best.as_ref().is_none_or(|b| me.beats(b)) {
            best = Some(me);
        }
    }
    let best = best.ok_or(Error::EmptyCandidates)?;
    Ok(Selection::new(best.edge, candidates.len() as u64))
}

/// Candidates grouped by discretized key, in strictly descending key order.
///
/// A slot is one group. Slots may be empty (a queue keeps all groups that
/// ever occur), but every candidate belongs to exactly one slot.
pub trait GroupedCandidates {
    fn step(&self) -> f64;
    fn slot_count(&self) -> usize;
    fn slot_key(&self, slot: usize) -> i64;
    /// Current number of candidates in the slot.
    fn slot_len(&self, slot: usize) -> usize;
    /// The `i`-th candidate of the slot, `i < slot_len(slot)`.
    fn slot_member(&self, slot: usize, i: usize) -> EdgeId;
    /// First non-empty slot, i.e. the one holding the best key.
    fn top_slot(&self) -> Option<usize>;
    /// Number of candidates in slots `from..`.
    fn count_from(&self, from: usize) -> usize;
    /// The `rank`-th candidate in slots `from..` and the slot holding it.
    fn select_from(&self, from: usize, rank: usize) -> (EdgeId, usize);
}

/// A partition of candidates into groups of equal discretized score.
#[derive(Debug, Clone)]
pub struct GroupPartition {
    step: f64,
    keys: Vec<i64>,
    members: Vec<Vec<EdgeId>>,
    // suffix[i] = number of candidates in groups i..
    suffix: Vec<usize>,
}

impl GroupPartition {
    /// Discretizes every score with `step` and groups equal keys. Members keep
    /// their input order.
    pub fn from_candidates(candidates: &[Candidate], step: f64) -> Result<Self> {
        let mut keyed = candidates
            .iter()
            .enumerate()
            .map(|(i, c)| Ok((discretize(c.score, step)?, i, c.edge)))
            .collect::<Result<Vec<_>>>()?;
        keyed.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut groups: Vec<(i64, Vec<EdgeId>)> = Vec::new();
        for (key, _, edge) in keyed {
            match groups.last_mut() {
                Some((k, m)) if *k == key => m.push(edge),
                _ => groups.push((key, vec![edge])),
            }
        }
        Self::from_groups(groups, step)
    }

    /// Explicit groups; keys must be strictly decreasing and groups non-empty.
    pub fn from_groups(groups: Vec<(i64, Vec<EdgeId>)>, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::param(format!("step must be > 0, got {step}")));
        }
        if groups.windows(2).any(|w| w[0].0 <= w[1].0) {
            return Err(Error::param("group keys must be strictly decreasing"));
        }
        if groups.iter().any(|(_, m)| m.is_empty()) {
            return Err(Error::param("groups must be non-empty"));
        }
        let (keys, members): (Vec<_>, Vec<_>) = groups.into_iter().unzip();
        let mut suffix = vec![0usize; keys.len() + 1];
        for i in (0..keys.len()).rev() {
            suffix[i] = suffix[i + 1] + members[i].len();
        }
        Ok(Self {
            step,
            keys,
            members,
            suffix,
        })
    }

    pub fn groups(&self) -> impl Iterator<Item = (i64, &[EdgeId])> {
        self.keys.iter().copied().zip(self.members.iter().map(Vec::as_slice))
    }

    pub fn len(&self) -> usize {
        self.suffix[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every member with its discretized score `key * step`.
    pub fn discretized_candidates(&self) -> Vec<Candidate> {
        self.groups()
            .flat_map(|(k, m)| {
                m.iter().map(move |&edge| Candidate {
                    edge,
                    score: k as f64 * self.step,
                })
            })
            .collect()
    }
}

impl GroupedCandidates for GroupPartition {
    fn step(&self) -> f64 {
        self.step
    }

    fn slot_count(&self) -> usize {
        self.keys.len()
    }

    fn slot_key(&self, slot: usize) -> i64 {
        self.keys[slot]
    }

    fn slot_len(&self, slot: usize) -> usize {
        self.members[slot].len()
    }

    fn slot_member(&self, slot: usize, i: usize) -> EdgeId {
        self.members[slot][i]
    }

    fn top_slot(&self) -> Option<usize> {
        (!self.keys.is_empty()).then_some(0)
    }

    fn count_from(&self, from: usize) -> usize {
        self.suffix[from.min(self.keys.len())]
    }

    fn select_from(&self, from: usize, rank: usize) -> (EdgeId, usize) {
        // global position counted from the front
        let target = self.len() - self.suffix[from] + rank;
        // first slot whose prefix end exceeds target
        let slot = self
            .suffix
            .partition_point(|&s| self.len() - s <= target)
            - 1;
        let offset = target - (self.len() - self.suffix[slot]);
        (self.members[slot][offset], slot)
    }
}

/// Report-Noisy-Grouped-Max: one max-of-exponentials draw per group, the
/// noisy best group wins, and a uniform member of it is released.
pub fn rnm_grouped<G: GroupedCandidates + ?Sized>(
    rng: &mut RngStream,
    groups: &G,
    rate: Rate,
) -> Result<Selection> {
    let step = groups.step();
    let mut best: Option<(f64, i64, usize)> = None;
    let mut samples = 0u64;
    for slot in 0..groups.slot_count() {
        let len = groups.slot_len(slot);
        if len == 0 {
            continue;
        }
        let key = groups.slot_key(slot);
        let value = key as f64 * step + noise::sample_max_exp(rng, len as u64, rate)?;
        samples += 1;
        // Keys are strictly decreasing, so on equal values the earlier slot
        // already has the larger base score.
        if best.is_none_or(|(v, _, _)| value > v) {
            best = Some((value, key, slot));
        }
    }
    let (_, _, slot) = best.ok_or(Error::EmptyCandidates)?;
    let i = noise::sample_uniform_index(rng, groups.slot_len(slot))?;
    let mut sel = Selection::new(groups.slot_member(slot, i), samples);
    sel.top_groups = samples;
    Ok(sel)
}

/// Samples the explicit part of the clipped noise for a bottom set of
/// `bottom_size` elements: `k ~ Bin(bottom_size, e^{-rate*threshold})`
/// distinct ranks, each paired with an independent `threshold + Exp(rate)`.
/// Ranks come back in ascending order.
pub fn sample_bottom_tail(
    rng: &mut RngStream,
    bottom_size: usize,
    rate: Rate,
    threshold: f64,
) -> Result<Vec<(usize, f64)>> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::param(format!("threshold must be > 0, got {threshold}")));
    }
    if bottom_size == 0 {
        return Ok(Vec::new());
    }
    let p = (-rate.get() * threshold).exp();
    let k = noise::sample_binomial(rng, bottom_size as u64, p)? as usize;
    let ranks = noise::sample_distinct_indices(rng, bottom_size, k)?;
    Ok(ranks
        .into_iter()
        .map(|r| (r, threshold + noise::sample_exp(rng, rate)))
        .collect())
}

/// Parameters of the fast selection.
#[derive(Debug, Clone, Copy)]
pub struct RnmParams {
    pub rate: Rate,
    pub sensitivity: f64,
    pub step: f64,
    /// Tail threshold `M` in score units, or `None` to give every group
    /// its own draw.
    pub threshold: Option<f64>,
}

impl RnmParams {
    pub fn new(rate: Rate, sensitivity: f64, step: f64, threshold: Option<f64>) -> Result<Self> {
        let p = Self {
            rate,
            sensitivity,
            step,
            threshold,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.sensitivity.is_finite() && self.sensitivity > 0.0) {
            return Err(Error::param(format!("sensitivity must be > 0, got {}", self.sensitivity)));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::param(format!("step must be > 0, got {}", self.step)));
        }
        self.threshold_steps().map(|_| ())
    }

    /// `M / s` as an integer, when the tail is enabled.
    pub fn threshold_steps(&self) -> Result<Option<i64>> {
        let Some(m) = self.threshold else {
            return Ok(None);
        };
        let ratio = m / self.step;
        let t = ratio.round();
        if !(m.is_finite() && m > 0.0) || t < 1.0 || (ratio - t).abs() > 1e-9 * t.max(1.0) || t > 9.0e15 {
            return Err(Error::param(format!(
                "threshold {m} is not a positive multiple of step {}",
                self.step
            )));
        }
        Ok(Some(t as i64))
    }
}

/// Rounds `value` up to the next positive multiple of `step`.
pub fn round_up_to_step(value: f64, step: f64) -> f64 {
    (value / step).ceil().max(1.0) * step
}

/// Fast discretized Report-Noisy-Max.
///
/// Groups within `M` of the best key each get one max-of-exponentials draw;
/// everything below goes through [`sample_bottom_tail`]. The released edge
/// has exactly the law of [`rnm_naive`] on the discretized scores.
pub fn rnm_fast<G: GroupedCandidates + ?Sized>(
    rng: &mut RngStream,
    groups: &G,
    params: &RnmParams,
) -> Result<Selection> {
    params.validate()?;
    if (groups.step() - params.step).abs() > 1e-12 * params.step {
        return Err(Error::param(format!(
            "partition step {} differs from parameter step {}",
            groups.step(),
            params.step
        )));
    }
    let step = params.step;
    let rate = params.rate;
    let top = groups.top_slot().ok_or(Error::EmptyCandidates)?;
    let top_key = groups.slot_key(top);
    let floor_key = match params.threshold_steps()? {
        Some(t) => top_key.saturating_sub(t),
        None => i64::MIN,
    };

    let mut sel = Selection::new(EdgeId(0), 0);
    // (value, slot) of the best top group; its member is drawn afterwards.
    let mut best_group: Option<(f64, usize)> = None;
    let mut slot = top;
    while slot < groups.slot_count() && groups.slot_key(slot) >= floor_key {
        let len = groups.slot_len(slot);
        if len > 0 {
            let key = groups.slot_key(slot);
            let value = key as f64 * step + noise::sample_max_exp(rng, len as u64, rate)?;
            sel.samples_drawn += 1;
            sel.top_groups += 1;
            if best_group.is_none_or(|(v, _)| value > v) {
                best_group = Some((value, slot));
            }
        }
        slot += 1;
    }
    let (group_value, group_slot) = best_group.expect("top slot is non-empty");

    let mut bottom_best: Option<Contender> = None;
    if let Some(m) = params.threshold {
        let bottom_size = groups.count_from(slot);
        sel.bottom_size = bottom_size as u64;
        if bottom_size > 0 {
            let tail = sample_bottom_tail(rng, bottom_size, rate, m)?;
            sel.samples_drawn += 1 + tail.len() as u64;
            sel.bottom_hits = tail.len() as u64;
            for (rank, z) in tail {
                let (edge, s) = groups.select_from(slot, rank);
                let base = groups.slot_key(s) as f64 * step;
                let me = Contender {
                    value: base + z,
                    base,
                    edge,
                };
                if bottom_best.as_ref().is_none_or(|b| me.beats(b)) {
                    bottom_best = Some(me);
                }
            }
        }
    }

    // Bottom keys are strictly below every top key, so a tie in value goes
    // to the top group.
    sel.edge = match bottom_best {
        Some(b) if b.value > group_value => b.edge,
        _ => {
            let i = noise::sample_uniform_index(rng, groups.slot_len(group_slot))?;
            groups.slot_member(group_slot, i)
        }
    };
    Ok(sel)
}

/// Privacy of one discretized selection at `rate`: `ε = 2·rate·(Δ∞ + s)` and
/// the zCDP cost `ε²/2` of an `ε`-DP mechanism.
pub fn per_step_privacy(rate: f64, sensitivity: f64, step: f64) -> Result<(f64, f64)> {
    for (name, v) in [("rate", rate), ("sensitivity", sensitivity), ("step", step)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::param(format!("{name} must be > 0, got {v}")));
        }
    }
    let epsilon = 2.0 * rate * (sensitivity + step);
    Ok((epsilon, epsilon * epsilon / 2.0))
}
