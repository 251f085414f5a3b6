//! Private minimum spanning trees under edge-weight differential privacy.
//!
//! The topology is public and neighbouring weight assignments differ by at
//! most `Δ∞` on every edge. [`fast_pamst`] and [`pamst_baseline`] run
//! Prim–Jarník and release each next edge through a private selection over
//! the current cut; the post-processing baselines perturb all weights once
//! and run an exact MST on the result.

use std::time::Instant;

use crate::cut_queue::{CutQueue, DEFAULT_LAYERS};
use crate::graph::{exact_mst, kruskal, EdgeId, Graph, RunCounters, TreeResult, WeightAssignment};
use crate::noise::{self, Rate, RngStream};
use crate::rnm::{self, per_step_privacy, round_up_to_step, Candidate, GroupedCandidates, RnmParams};
use crate::{Error, Result};

/// Default constant `c` in the threshold `M = c·ln(n)/λ`; the chance that a
/// run sees any bottom-tail hit is at most `n^{2-c}`.
pub const DEFAULT_THRESHOLD_CONSTANT: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrivacyMode {
    /// ρ-zero-concentrated DP, split evenly over the `n − 1` selections.
    Zcdp { rho: f64 },
    /// ε-DP under basic composition.
    Pure { epsilon: f64 },
    /// No noise at all: every selection is an exact argmax. For testing the
    /// infinite-budget limit only; releases the exact tree.
    Noiseless,
}

/// How the tail threshold `M` of the fast selection is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// `M = c·ln(n)/λ` for the per-step rate `λ`.
    LogOverRate { c: f64 },
    /// `M = 4·√n·ln(n)·Δ∞/√ρ`, zCDP mode only.
    SqrtN,
    /// No tail: every active group gets its own draw.
    Disabled,
}

impl Default for ThresholdRule {
    fn default() -> Self {
        ThresholdRule::LogOverRate {
            c: DEFAULT_THRESHOLD_CONSTANT,
        }
    }
}

/// Which weight assignments count as neighbours for the Laplace baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Neighborhood {
    /// Every edge may move by `Δ∞`.
    #[default]
    LInf,
    /// Total movement over all edges at most `Δ∞`.
    L1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrivacySpec {
    pub mode: PrivacyMode,
    pub sensitivity: f64,
    /// Failure probability for the reported utility bound; `1/n` if unset.
    pub mu: Option<f64>,
    /// Discretization step; `Δ∞` if unset.
    pub step: Option<f64>,
    pub start_vertex: usize,
    pub threshold: ThresholdRule,
    pub layers: usize,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::param(format!("{name} must be finite and > 0, got {v}")))
    }
}

impl PrivacySpec {
    fn with_mode(mode: PrivacyMode, sensitivity: f64) -> Result<Self> {
        let spec = Self {
            mode,
            sensitivity,
            mu: None,
            step: None,
            start_vertex: 0,
            threshold: ThresholdRule::default(),
            layers: DEFAULT_LAYERS,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn zcdp(rho: f64, sensitivity: f64) -> Result<Self> {
        Self::with_mode(PrivacyMode::Zcdp { rho }, sensitivity)
    }

    pub fn pure(epsilon: f64, sensitivity: f64) -> Result<Self> {
        Self::with_mode(PrivacyMode::Pure { epsilon }, sensitivity)
    }

    pub fn noiseless(sensitivity: f64) -> Result<Self> {
        Self::with_mode(PrivacyMode::Noiseless, sensitivity)
    }

    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        self.mu = Some(mu);
        self.validate()?;
        Ok(self)
    }

    pub fn with_step(mut self, step: f64) -> Result<Self> {
        self.step = Some(step);
        self.validate()?;
        Ok(self)
    }

    pub fn with_start_vertex(mut self, v: usize) -> Self {
        self.start_vertex = v;
        self
    }

    pub fn with_threshold(mut self, rule: ThresholdRule) -> Result<Self> {
        self.threshold = rule;
        self.validate()?;
        Ok(self)
    }

    pub fn with_layers(mut self, layers: usize) -> Result<Self> {
        self.layers = layers;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            PrivacyMode::Zcdp { rho } => {
                positive("rho", rho)?;
            }
            PrivacyMode::Pure { epsilon } => {
                positive("epsilon", epsilon)?;
            }
            PrivacyMode::Noiseless => {}
        }
        positive("sensitivity", self.sensitivity)?;
        if let Some(step) = self.step {
            positive("step", step)?;
        }
        if let Some(mu) = self.mu {
            if !(mu > 0.0 && mu < 1.0) {
                return Err(Error::param(format!("mu must lie in (0, 1), got {mu}")));
            }
        }
        match self.threshold {
            ThresholdRule::LogOverRate { c } => {
                positive("threshold constant", c)?;
            }
            ThresholdRule::SqrtN if matches!(self.mode, PrivacyMode::Pure { .. }) => {
                return Err(Error::param("the sqrt(n) threshold rule needs zCDP mode"));
            }
            _ => {}
        }
        if !(1..=4).contains(&self.layers) {
            return Err(Error::param(format!("layer count must be in 1..=4, got {}", self.layers)));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        self.step.unwrap_or(self.sensitivity)
    }

    pub fn mu_for(&self, n: usize) -> f64 {
        self.mu.unwrap_or(1.0 / n as f64)
    }
}

/// Privacy accounting of one run: every selection step costs the same.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetLedger {
    /// Exponential noise rate of each step; infinite when noiseless.
    pub step_rate: f64,
    pub step_epsilon: f64,
    pub step_rho: f64,
    pub steps: usize,
    pub total_epsilon: f64,
    pub total_rho: f64,
    /// Tail threshold used by the fast selection, if any.
    pub threshold: Option<f64>,
    /// High-probability bound on the error, zCDP mode only.
    pub utility_bound: Option<f64>,
}

impl BudgetLedger {
    fn compose(step_rate: f64, step_epsilon: f64, step_rho: f64, steps: usize) -> Self {
        let (mut total_epsilon, mut total_rho) = (0.0, 0.0);
        for _ in 0..steps {
            total_epsilon += step_epsilon;
            total_rho += step_rho;
        }
        Self {
            step_rate,
            step_epsilon,
            step_rho,
            steps,
            total_epsilon,
            total_rho,
            threshold: None,
            utility_bound: None,
        }
    }

    fn noiseless(steps: usize) -> Self {
        Self::compose(f64::INFINITY, f64::INFINITY, f64::INFINITY, steps)
    }
}

/// `4(n−1)·Δ∞·√(n/(2ρ))·ln(n²/μ)`: with probability at least `1 − μ` the
/// fast algorithm's tree is heavier than the optimum by at most this.
pub fn utility_bound(n: usize, rho: f64, sensitivity: f64, mu: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::param(format!("need n >= 2, got {n}")));
    }
    positive("rho", rho)?;
    positive("sensitivity", sensitivity)?;
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::param(format!("mu must lie in (0, 1), got {mu}")));
    }
    let nf = n as f64;
    Ok(4.0 * (nf - 1.0) * sensitivity * (nf / (2.0 * rho)).sqrt() * (nf * nf / mu).ln())
}

fn check_instance(g: &Graph, w: &WeightAssignment, spec: &PrivacySpec) -> Result<()> {
    spec.validate()?;
    if g.vertex_count() < 2 {
        return Err(Error::param("need at least two vertices"));
    }
    if w.len() != g.edge_count() {
        return Err(Error::param("weight assignment does not match graph"));
    }
    if spec.start_vertex >= g.vertex_count() {
        return Err(Error::param(format!("start vertex {} out of range", spec.start_vertex)));
    }
    g.require_connected()
}

/// Per-step rate of the fast algorithm: the budget splits evenly over
/// `n − 1` selections, each `2λ(Δ∞ + s)`-DP.
fn fast_step_rate(spec: &PrivacySpec, n: usize) -> Option<f64> {
    let steps = (n - 1) as f64;
    let scale = 2.0 * (spec.sensitivity + spec.step());
    match spec.mode {
        PrivacyMode::Zcdp { rho } => Some((2.0 * rho / steps).sqrt() / scale),
        PrivacyMode::Pure { epsilon } => Some(epsilon / steps / scale),
        PrivacyMode::Noiseless => None,
    }
}

fn fast_threshold(spec: &PrivacySpec, n: usize, rate: f64) -> Option<f64> {
    let ln_n = (n as f64).ln().max(f64::MIN_POSITIVE);
    let raw = match (spec.threshold, spec.mode) {
        (ThresholdRule::Disabled, _) => return None,
        (ThresholdRule::LogOverRate { c }, _) => c * ln_n / rate,
        (ThresholdRule::SqrtN, PrivacyMode::Zcdp { rho }) => {
            4.0 * (n as f64).sqrt() * ln_n * spec.sensitivity / rho.sqrt()
        }
        (ThresholdRule::SqrtN, _) => unreachable!("rejected by validate"),
    };
    Some(round_up_to_step(raw, spec.step()))
}

/// Prim's frontier bookkeeping shared by both private variants.
struct Frontier<'a> {
    g: &'a Graph,
    visited: Vec<bool>,
}

impl<'a> Frontier<'a> {
    fn new(g: &'a Graph) -> Self {
        Self {
            g,
            visited: vec![false; g.vertex_count()],
        }
    }

    /// Marks `v` visited and reports each incident edge as newly cut
    /// (`true`) or now internal (`false`).
    fn visit(&mut self, v: usize, mut on_edge: impl FnMut(EdgeId, bool) -> Result<()>) -> Result<()> {
        self.visited[v] = true;
        for &e in self.g.incident_edges(v) {
            on_edge(e, !self.visited[self.g.opposite(e, v)])?;
        }
        Ok(())
    }

    /// The endpoint of a cut edge not yet in the tree.
    fn outside_end(&self, e: EdgeId) -> usize {
        let (u, v) = self.g.endpoints(e);
        if self.visited[u] {
            v
        } else {
            u
        }
    }
}

/// Private Prim–Jarník with the fast discretized selection over a
/// [`CutQueue`]. Returns the released tree and its privacy ledger.
pub fn fast_pamst(
    rng: &mut RngStream,
    g: &Graph,
    w: &WeightAssignment,
    spec: &PrivacySpec,
) -> Result<(TreeResult, BudgetLedger)> {
    check_instance(g, w, spec)?;
    let n = g.vertex_count();
    let step = spec.step();
    let rate = fast_step_rate(spec, n);
    let params = match rate {
        Some(r) => Some(RnmParams::new(
            Rate::new(r)?,
            spec.sensitivity,
            step,
            fast_threshold(spec, n, r),
        )?),
        None => None,
    };

    let started = Instant::now();
    let mut queue = CutQueue::build_with_layers(g, w, step, true, spec.layers)?;
    let mut frontier = Frontier::new(g);
    let mut counters = RunCounters::default();
    let mut tree = Vec::with_capacity(n - 1);

    let update = |queue: &mut CutQueue, e: EdgeId, cut: bool| -> Result<()> {
        if cut {
            queue.insert(e)
        } else if queue.is_active(e) {
            queue.delete(e)
        } else {
            // the edge that just joined the tree
            Ok(())
        }
    };
    frontier.visit(spec.start_vertex, |e, cut| update(&mut queue, e, cut))?;
    for _ in 1..n {
        let winner = match &params {
            Some(p) => {
                let sel = rnm::rnm_fast(rng, &queue, p)?;
                counters.samples_drawn += sel.samples_drawn;
                counters.bottom_hits += sel.bottom_hits;
                sel.edge
            }
            None => noiseless_pick(&queue, w)?,
        };
        counters.max_lookup_comparisons = counters
            .max_lookup_comparisons
            .max(queue.last_lookup_comparisons());
        queue.delete(winner)?;
        tree.push(winner);
        let v = frontier.outside_end(winner);
        frontier.visit(v, |e, cut| update(&mut queue, e, cut))?;
    }
    counters.comparisons = queue.comparisons();
    counters.elapsed = started.elapsed();

    let opt = exact_mst(g, w)?.true_weight;
    let mut ledger = match rate {
        Some(r) => {
            let (eps, rho) = per_step_privacy(r, spec.sensitivity, step)?;
            BudgetLedger::compose(r, eps, rho, n - 1)
        }
        None => BudgetLedger::noiseless(n - 1),
    };
    ledger.threshold = params.and_then(|p| p.threshold);
    if let PrivacyMode::Zcdp { rho } = spec.mode {
        ledger.utility_bound = Some(utility_bound(n, rho, spec.sensitivity, spec.mu_for(n))?);
    }
    Ok((TreeResult::evaluate(w, tree, opt, counters), ledger))
}

/// Best active group, then its lightest member (lowest id on ties). Flooring
/// is monotone, so this is exactly Prim's choice.
fn noiseless_pick(queue: &CutQueue, w: &WeightAssignment) -> Result<EdgeId> {
    let slot = queue.top_slot().ok_or(Error::EmptyCandidates)?;
    (0..queue.slot_len(slot))
        .map(|i| queue.slot_member(slot, i))
        .min_by(|&a, &b| w.weight(a).total_cmp(&w.weight(b)).then(a.cmp(&b)))
        .ok_or(Error::EmptyCandidates)
}

/// Active cut edges with O(1) insert and delete.
struct ActiveSet {
    edges: Vec<EdgeId>,
    position: Vec<usize>,
}

impl ActiveSet {
    const ABSENT: usize = usize::MAX;

    fn new(m: usize) -> Self {
        Self {
            edges: Vec::new(),
            position: vec![Self::ABSENT; m],
        }
    }

    fn contains(&self, e: EdgeId) -> bool {
        self.position[e.index()] != Self::ABSENT
    }

    fn insert(&mut self, e: EdgeId) {
        debug_assert!(!self.contains(e));
        self.position[e.index()] = self.edges.len();
        self.edges.push(e);
    }

    fn remove(&mut self, e: EdgeId) {
        let p = self.position[e.index()];
        debug_assert_ne!(p, Self::ABSENT);
        let last = *self.edges.last().expect("non-empty");
        self.edges.swap_remove(p);
        if last != e {
            self.position[last.index()] = p;
        }
        self.position[e.index()] = Self::ABSENT;
    }
}

/// Private Prim–Jarník that draws one exponential per active cut edge at
/// every step, on raw weights, with rate `√(2ρ)/(2√n·Δ∞)`. Its true zCDP
/// spend is `ρ(n−1)/n`, which is what the ledger reports.
pub fn pamst_baseline(
    rng: &mut RngStream,
    g: &Graph,
    w: &WeightAssignment,
    spec: &PrivacySpec,
) -> Result<(TreeResult, BudgetLedger)> {
    check_instance(g, w, spec)?;
    let n = g.vertex_count();
    let delta = spec.sensitivity;
    let rate = match spec.mode {
        PrivacyMode::Zcdp { rho } => Some((2.0 * rho).sqrt() / (2.0 * (n as f64).sqrt() * delta)),
        PrivacyMode::Pure { epsilon } => Some(epsilon / (2.0 * (n - 1) as f64 * delta)),
        PrivacyMode::Noiseless => None,
    };
    let noise_rate = rate.map(Rate::new).transpose()?;

    let started = Instant::now();
    let mut active = ActiveSet::new(g.edge_count());
    let mut frontier = Frontier::new(g);
    let mut counters = RunCounters::default();
    let mut tree = Vec::with_capacity(n - 1);
    let mut candidates = Vec::new();

    let update = |active: &mut ActiveSet, e: EdgeId, cut: bool| -> Result<()> {
        if cut {
            active.insert(e);
        } else if active.contains(e) {
            active.remove(e);
        }
        Ok(())
    };
    frontier.visit(spec.start_vertex, |e, cut| update(&mut active, e, cut))?;
    for _ in 1..n {
        counters.comparisons += active.edges.len() as u64;
        let winner = match noise_rate {
            Some(r) => {
                candidates.clear();
                candidates.extend(active.edges.iter().map(|&e| Candidate {
                    edge: e,
                    score: -w.weight(e),
                }));
                let sel = rnm::rnm_naive(rng, &candidates, r)?;
                counters.samples_drawn += sel.samples_drawn;
                sel.edge
            }
            None => *active
                .edges
                .iter()
                .min_by(|&&a, &&b| w.weight(a).total_cmp(&w.weight(b)).then(a.cmp(&b)))
                .ok_or(Error::EmptyCandidates)?,
        };
        active.remove(winner);
        tree.push(winner);
        let v = frontier.outside_end(winner);
        frontier.visit(v, |e, cut| update(&mut active, e, cut))?;
    }
    counters.elapsed = started.elapsed();

    let opt = exact_mst(g, w)?.true_weight;
    let ledger = match rate {
        Some(r) => {
            let eps = 2.0 * r * delta;
            BudgetLedger::compose(r, eps, eps * eps / 2.0, n - 1)
        }
        None => BudgetLedger::noiseless(n - 1),
    };
    Ok((TreeResult::evaluate(w, tree, opt, counters), ledger))
}

fn perturbed_mst(
    g: &Graph,
    w: &WeightAssignment,
    mut noise: impl FnMut() -> Result<f64>,
) -> Result<TreeResult> {
    g.require_connected()?;
    let started = Instant::now();
    let noisy = w
        .weights()
        .iter()
        .map(|&x| Ok(x + noise()?))
        .collect::<Result<Vec<f64>>>()?;
    let tree = kruskal(g, &noisy)?;
    let counters = RunCounters {
        samples_drawn: g.edge_count() as u64,
        elapsed: started.elapsed(),
        ..RunCounters::default()
    };
    let opt = exact_mst(g, w)?.true_weight;
    Ok(TreeResult::evaluate(w, tree, opt, counters))
}

/// Adds `N(0, n²Δ∞/(2ρ))` to every weight and releases the exact MST of the
/// noisy weights. Needs zCDP (or noiseless) mode.
pub fn post_process_gaussian(
    rng: &mut RngStream,
    g: &Graph,
    w: &WeightAssignment,
    spec: &PrivacySpec,
) -> Result<TreeResult> {
    check_instance(g, w, spec)?;
    let n = g.vertex_count() as f64;
    let sigma = match spec.mode {
        PrivacyMode::Zcdp { rho } => (n * n * spec.sensitivity / (2.0 * rho)).sqrt(),
        PrivacyMode::Noiseless => 0.0,
        PrivacyMode::Pure { .. } => {
            return Err(Error::param("Gaussian post-processing needs zCDP mode"));
        }
    };
    if sigma == 0.0 {
        return perturbed_mst(g, w, || Ok(0.0));
    }
    perturbed_mst(g, w, || noise::sample_gaussian(rng, sigma))
}

/// Adds `Lap(n²Δ∞/ε)` (or `Lap(Δ∞/ε)` for [`Neighborhood::L1`]) to every
/// weight and releases the exact MST of the noisy weights. Needs pure mode
/// (or noiseless).
pub fn post_process_laplace(
    rng: &mut RngStream,
    g: &Graph,
    w: &WeightAssignment,
    spec: &PrivacySpec,
    neighborhood: Neighborhood,
) -> Result<TreeResult> {
    check_instance(g, w, spec)?;
    let n = g.vertex_count() as f64;
    let scale = match spec.mode {
        PrivacyMode::Pure { epsilon } => match neighborhood {
            Neighborhood::LInf => n * n * spec.sensitivity / epsilon,
            Neighborhood::L1 => spec.sensitivity / epsilon,
        },
        PrivacyMode::Noiseless => 0.0,
        PrivacyMode::Zcdp { .. } => {
            return Err(Error::param("Laplace post-processing needs pure mode"));
        }
    };
    if scale == 0.0 {
        return perturbed_mst(g, w, || Ok(0.0));
    }
    perturbed_mst(g, w, || noise::sample_laplace(rng, scale))
}
