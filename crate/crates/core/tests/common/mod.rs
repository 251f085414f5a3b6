//! Oracles shared by the integration and acceptance suites. Nothing here
//! calls into the structures under test except through their public API.

#![allow(dead_code)]

use dpmst::cut_queue::CutQueue;
use dpmst::graph::{EdgeId, Graph, WeightAssignment};
use dpmst::noise::{sample_uniform01, sample_uniform_index};
use dpmst::RngStream;

/// Weights built as `(k + f)·step` with integer `k` and `f ∈ [0.1, 0.9)`,
/// so the floor key of `±w` is known without any division.
pub struct KeyedWeights {
    pub weights: Vec<f64>,
    /// `⌊w/step⌋` and `⌊-w/step⌋` per edge.
    pub up: Vec<i64>,
    pub down: Vec<i64>,
}

/// `step` must be a power of two so `(k + f)·step` is computed exactly
/// enough to stay inside `[k, k+1)` steps.
pub fn keyed_weights(rng: &mut RngStream, m: usize, step: f64, key_range: usize) -> KeyedWeights {
    let mut weights = Vec::with_capacity(m);
    let mut up = Vec::with_capacity(m);
    let mut down = Vec::with_capacity(m);
    for _ in 0..m {
        let k = sample_uniform_index(rng, key_range).unwrap() as i64;
        let f = 0.1 + 0.8 * sample_uniform01(rng);
        weights.push((k as f64 + f) * step);
        up.push(k);
        down.push(-k - 1);
    }
    KeyedWeights { weights, up, down }
}

/// Random connected graph: a random spanning tree plus each remaining pair
/// with probability `density`.
pub fn random_connected_graph(rng: &mut RngStream, n: usize, density: f64) -> Graph {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = sample_uniform_index(rng, i + 1).unwrap();
        order.swap(i, j);
    }
    let mut pairs = std::collections::BTreeSet::new();
    for i in 1..n {
        let parent = order[sample_uniform_index(rng, i).unwrap()];
        let (a, b) = (order[i].min(parent), order[i].max(parent));
        pairs.insert((a, b));
    }
    for u in 0..n {
        for v in u + 1..n {
            if sample_uniform01(rng) < density {
                pairs.insert((u, v));
            }
        }
    }
    Graph::new(n, pairs).unwrap()
}

/// Minimum spanning weight by enumerating every (n−1)-subset of edges.
pub fn brute_force_mst_weight(g: &Graph, w: &WeightAssignment) -> Option<f64> {
    let n = g.vertex_count();
    let m = g.edge_count();
    let need = n - 1;
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(need);
    fn rec(
        g: &Graph,
        w: &WeightAssignment,
        start: usize,
        need: usize,
        pick: &mut Vec<usize>,
        best: &mut Option<f64>,
    ) {
        if pick.len() == need {
            if spans(g, pick) {
                let mut ws: Vec<f64> = pick.iter().map(|&e| w.weights()[e]).collect();
                ws.sort_by(f64::total_cmp);
                let total: f64 = ws.iter().sum();
                if best.is_none_or(|b| total < b) {
                    *best = Some(total);
                }
            }
            return;
        }
        for e in start..g.edge_count() {
            pick.push(e);
            rec(g, w, e + 1, need, pick, best);
            pick.pop();
        }
    }
    fn spans(g: &Graph, pick: &[usize]) -> bool {
        let n = g.vertex_count();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            r
        }
        for &e in pick {
            let (u, v) = g.endpoints(EdgeId(e as u32));
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            if a == b {
                return false;
            }
            parent[a] = b;
        }
        true
    }
    if m < need {
        return None;
    }
    rec(g, w, 0, need, &mut pick, &mut best);
    best
}

/// Sum of a tree's weights taken in ascending order. Every minimum spanning
/// tree has the same sorted weight sequence, so this is bit-identical
/// across them.
pub fn sorted_weight_sum(w: &WeightAssignment, edges: &[EdgeId]) -> f64 {
    let mut ws: Vec<f64> = edges.iter().map(|&e| w.weight(e)).collect();
    ws.sort_by(f64::total_cmp);
    ws.iter().sum()
}

/// Brute-force stand-in for the cut queue: a flag per edge and linear scans.
pub struct QueueModel {
    pub keys: Vec<i64>,
    pub active: Vec<bool>,
}

impl QueueModel {
    pub fn new(keys: Vec<i64>) -> Self {
        let m = keys.len();
        Self {
            keys,
            active: vec![false; m],
        }
    }

    pub fn max_group(&self) -> Option<(i64, usize)> {
        let best = (0..self.keys.len())
            .filter(|&e| self.active[e])
            .map(|e| self.keys[e])
            .max()?;
        Some((best, self.group_count(best)))
    }

    pub fn group_count(&self, key: i64) -> usize {
        (0..self.keys.len())
            .filter(|&e| self.active[e] && self.keys[e] == key)
            .count()
    }

    pub fn range_count(&self, lo: i64, hi: i64) -> usize {
        (0..self.keys.len())
            .filter(|&e| self.active[e] && (lo..=hi).contains(&self.keys[e]))
            .count()
    }

    /// Keys of the active edges at or below `hi`, descending.
    pub fn keys_at_most(&self, hi: i64) -> Vec<i64> {
        let mut ks: Vec<i64> = (0..self.keys.len())
            .filter(|&e| self.active[e] && self.keys[e] <= hi)
            .map(|e| self.keys[e])
            .collect();
        ks.sort_unstable_by(|a, b| b.cmp(a));
        ks
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct FuzzReport {
    pub ops: usize,
    pub max_update_work: u64,
    /// Largest `reads / g^{1/4}` seen for each query kind.
    pub max_lookup_ratio: f64,
    pub count_ratio: f64,
    pub rank_ratio: f64,
}

impl FuzzReport {
    pub fn merge(&mut self, other: FuzzReport) {
        self.ops += other.ops;
        self.max_update_work = self.max_update_work.max(other.max_update_work);
        self.max_lookup_ratio = self.max_lookup_ratio.max(other.max_lookup_ratio);
        self.count_ratio = self.count_ratio.max(other.count_ratio);
        self.rank_ratio = self.rank_ratio.max(other.rank_ratio);
    }
}

/// Runs `ops` random operations against both the queue and the model and
/// compares every answer. With `audit_every` set, the structure is audited
/// after every operation.
pub fn fuzz_queue(
    rng: &mut RngStream,
    g: &Graph,
    step: f64,
    key_range: usize,
    layers: usize,
    ops: usize,
    audit_every: bool,
) -> Result<FuzzReport, String> {
    let m = g.edge_count();
    let kw = keyed_weights(rng, m, step, key_range);
    let negate = sample_uniform01(rng) < 0.5;
    let w = WeightAssignment::new(g, kw.weights.clone(), 1.0).unwrap();
    let mut q = CutQueue::build_with_layers(g, &w, step, negate, layers).unwrap();
    let mut model = QueueModel::new(if negate { kw.down } else { kw.up });
    let groups = q.group_count();
    let mut distinct = model.keys.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if groups != distinct.len() {
        return Err(format!("group count {groups} != {}", distinct.len()));
    }
    let quarter = (groups.max(1) as f64).powf(0.25);
    let pick_key = |rng: &mut RngStream| -> i64 {
        let lo = distinct[0] - 2;
        let hi = distinct[distinct.len() - 1] + 2;
        lo + sample_uniform_index(rng, (hi - lo + 1) as usize).unwrap() as i64
    };
    let mut report = FuzzReport::default();
    if !q.audit() {
        return Err("audit failed after build".into());
    }
    for op in 0..ops {
        let kind = sample_uniform_index(rng, 10).unwrap();
        match kind {
            0..=4 => {
                let e = EdgeId(sample_uniform_index(rng, m).unwrap() as u32);
                let before = q.update_work();
                let res = if model.active[e.index()] {
                    q.delete(e)
                } else {
                    q.insert(e)
                };
                res.map_err(|err| format!("op {op}: update of {e} failed: {err}"))?;
                model.active[e.index()] = !model.active[e.index()];
                report.max_update_work = report.max_update_work.max(q.update_work() - before);
                // the opposite call must be rejected
                let wrong = if model.active[e.index()] {
                    q.insert(e)
                } else {
                    q.delete(e)
                };
                if wrong.is_ok() {
                    return Err(format!("op {op}: repeated update of {e} accepted"));
                }
            }
            5 | 6 => {
                let before = q.comparisons();
                let got = q.max_active_group();
                let reads = q.comparisons() - before;
                report.max_lookup_ratio = report.max_lookup_ratio.max(reads as f64 / quarter);
                if got != model.max_group() {
                    return Err(format!("op {op}: max {got:?} != {:?}", model.max_group()));
                }
            }
            7 => {
                let (a, b) = (pick_key(rng), pick_key(rng));
                let (lo, hi) = (a.min(b), a.max(b));
                let before = q.comparisons();
                let got = q.active_range_count(lo, hi);
                let reads = q.comparisons() - before;
                report.count_ratio = report.count_ratio.max(reads as f64 / quarter);
                if got != model.range_count(lo, hi) {
                    return Err(format!("op {op}: count [{lo},{hi}] {got} != {}", model.range_count(lo, hi)));
                }
            }
            8 => {
                let hi = pick_key(rng);
                let keys = model.keys_at_most(hi);
                let rank = sample_uniform_index(rng, keys.len() + 2).unwrap();
                let before = q.comparisons();
                let got = q.select_active_by_rank(hi, rank);
                let reads = q.comparisons() - before;
                match got {
                    Ok(e) => {
                        report.rank_ratio = report.rank_ratio.max(reads as f64 / quarter);
                        if rank >= keys.len() || !model.active[e.index()] || model.keys[e.index()] != keys[rank] {
                            return Err(format!("op {op}: rank {rank} below {hi} gave {e}"));
                        }
                    }
                    Err(_) if rank >= keys.len() => {}
                    Err(err) => return Err(format!("op {op}: rank {rank} below {hi}: {err}")),
                }
            }
            _ => {
                let key = distinct[sample_uniform_index(rng, distinct.len()).unwrap()];
                let c = q.group_active_count(key).map_err(|e| e.to_string())?;
                if c != model.group_count(key) {
                    return Err(format!("op {op}: group {key} count {c}"));
                }
                let mut seen = Vec::with_capacity(c);
                for i in 0..c {
                    let e = q.group_active_member(key, i).map_err(|e| e.to_string())?;
                    if !model.active[e.index()] || model.keys[e.index()] != key {
                        return Err(format!("op {op}: group {key} member {i} is {e}"));
                    }
                    seen.push(e);
                }
                seen.sort_unstable();
                seen.dedup();
                if seen.len() != c || q.group_active_member(key, c).is_ok() {
                    return Err(format!("op {op}: group {key} enumeration broken"));
                }
            }
        }
        if audit_every && !q.audit() {
            return Err(format!("op {op}: audit failed"));
        }
        report.ops += 1;
    }
    // every rank below the top enumerates exactly the active set
    let all: Vec<EdgeId> = (0..q.active_count())
        .map(|r| q.select_active_by_rank(i64::MAX, r).unwrap())
        .collect();
    let mut sorted = all.clone();
    sorted.sort_unstable();
    let expect: Vec<EdgeId> = (0..m).filter(|&e| model.active[e]).map(|e| EdgeId(e as u32)).collect();
    if sorted != expect {
        return Err("rank enumeration is not a bijection onto the active set".into());
    }
    Ok(report)
}
