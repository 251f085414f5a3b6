use dpmst::cut_queue::CutQueue;
use dpmst::graph::{gen_complete_graph, Graph, WeightDist};
use dpmst::mst_private::{
    fast_pamst, pamst_baseline, post_process_gaussian, post_process_laplace, Neighborhood, PrivacySpec,
};
use dpmst::noise::Rate;
use dpmst::rnm::{discretize, rnm_fast, rnm_naive, Candidate, RnmParams};
use dpmst::{EdgeId, RngStream, WeightAssignment};
use dpmst_stattest as st;

fn uniform_graph(n: usize, seed: u64, sensitivity: f64) -> (Graph, WeightAssignment) {
    let (g, w) = gen_complete_graph(n, seed, WeightDist::Uniform01).unwrap();
    (g, w.with_sensitivity(sensitivity).unwrap())
}

#[test]
fn one_step_through_the_queue_matches_naive_selection() {
    // cut between {0, 1} and {2..6} of K6
    let g = Graph::complete(6).unwrap();
    let weights = vec![
        0.1, 0.3, 0.35, 0.6, 0.9, 0.3, 1.4, 1.45, 2.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    ];
    let w = WeightAssignment::new(&g, weights, 1.0).unwrap();
    let step = 0.25;
    let mut q = CutQueue::build(&g, &w, step, true).unwrap();
    let cut: Vec<EdgeId> = g
        .edge_ids()
        .filter(|&e| {
            let (u, v) = g.endpoints(e);
            (u < 2) != (v < 2)
        })
        .collect();
    for &e in &cut {
        q.insert(e).unwrap();
    }
    let discretized: Vec<Candidate> = cut
        .iter()
        .map(|&e| Candidate {
            edge: e,
            score: discretize(-w.weight(e), step).unwrap() as f64 * step,
        })
        .collect();
    let rate = Rate::new(1.5).unwrap();
    let params = RnmParams::new(rate, 1.0, step, Some(0.5)).unwrap();
    let mut rng = RngStream::new(42);
    let (mut fast, mut naive) = (vec![0u64; g.edge_count()], vec![0u64; g.edge_count()]);
    let mut saw_bottom = false;
    for _ in 0..200_000 {
        let sel = rnm_fast(&mut rng, &q, &params).unwrap();
        saw_bottom |= sel.bottom_size > 0;
        fast[sel.edge.index()] += 1;
        naive[rnm_naive(&mut rng, &discretized, rate).unwrap().edge.index()] += 1;
    }
    assert!(saw_bottom);
    let tv = st::total_variation(&fast, &naive);
    assert!(tv < 0.02, "tv {tv}");
    assert!(q.audit());
}

#[test]
fn huge_budget_variants_agree() {
    let (g, w) = uniform_graph(20, 8, 1e-6);
    let spec = PrivacySpec::zcdp(1e12, 1e-6).unwrap();
    let mut rng = RngStream::new(5);
    let (fast, _) = fast_pamst(&mut rng, &g, &w, &spec).unwrap();
    let (slow, _) = pamst_baseline(&mut rng, &g, &w, &spec).unwrap();
    assert_eq!(fast.tree_edges, slow.tree_edges);
    assert_eq!(fast.error, 0.0);
}

#[test]
fn baseline_error_within_its_bound_at_n128() {
    let n = 128usize;
    let (rho, delta) = (0.1, 1e-5);
    let nf = n as f64;
    let bound = nf.powf(1.5) * nf.ln() * delta * (2.0f64 / rho).sqrt();
    let spec = PrivacySpec::zcdp(rho, delta).unwrap();
    let mut within = 0;
    for seed in 0..20 {
        let (g, w) = uniform_graph(n, seed, delta);
        let (t, _) = pamst_baseline(&mut RngStream::new(seed), &g, &w, &spec).unwrap();
        within += (t.error <= bound) as u32;
    }
    assert!(within >= 19, "{within}/20 within {bound}");
}

#[test]
fn gaussian_error_bound_and_random_tree_regime() {
    let (rho, delta, gamma) = (0.1, 1e-5, 0.05);
    let n = 64usize;
    let nf = n as f64;
    let bound = 2.0 * nf * nf * (delta * (nf * nf / gamma).ln() / rho).sqrt();
    let spec = PrivacySpec::zcdp(rho, delta).unwrap();
    let mut within = 0;
    for seed in 0..40 {
        let (g, w) = uniform_graph(n, seed, delta);
        let t = post_process_gaussian(&mut RngStream::new(seed), &g, &w, &spec).unwrap();
        within += (t.error <= bound) as u32;
    }
    assert!(within >= 38, "{within}/40");

    let (g, w) = uniform_graph(512, 1, delta);
    let t = post_process_gaussian(&mut RngStream::new(2), &g, &w, &spec).unwrap();
    assert!((128.0..=512.0).contains(&t.error), "error {}", t.error);
}

#[test]
fn laplace_l1_bound_and_linf_gap() {
    let (eps, gamma) = (1.0, 0.05);
    let n = 64usize;
    let delta = 1e-3;
    let bound = 4.0 * (n as f64 / eps) * delta * (n as f64 / gamma).ln();
    let spec = PrivacySpec::pure(eps, delta).unwrap();
    for seed in 0..20 {
        let (g, w) = uniform_graph(n, seed, delta);
        let t = post_process_laplace(&mut RngStream::new(seed), &g, &w, &spec, Neighborhood::L1).unwrap();
        assert!(t.error <= bound, "{} > {bound}", t.error);
    }

    let n = 256usize;
    let delta = 1e-5;
    let spec = PrivacySpec::pure(eps, delta).unwrap();
    let mut lap = Vec::new();
    let mut fast = Vec::new();
    for seed in 0..5 {
        let (g, w) = uniform_graph(n, seed, delta);
        let mut rng = RngStream::new(seed);
        lap.push(post_process_laplace(&mut rng, &g, &w, &spec, Neighborhood::LInf).unwrap().error);
        fast.push(fast_pamst(&mut rng, &g, &w, &spec).unwrap().0.error);
    }
    let (lm, fm) = (st::median(&lap), st::median(&fast));
    assert!(lm >= 10.0 * fm, "laplace {lm} vs fast {fm}");
}

#[test]
fn runs_replay_per_seed() {
    let (g, w) = uniform_graph(40, 2, 1e-4);
    let spec = PrivacySpec::zcdp(0.2, 1e-4).unwrap();
    let a = fast_pamst(&mut RngStream::new(9), &g, &w, &spec).unwrap().0;
    let b = fast_pamst(&mut RngStream::new(9), &g, &w, &spec).unwrap().0;
    assert_eq!(a.tree_edges, b.tree_edges);
    assert_eq!(a.counters.samples_drawn, b.counters.samples_drawn);
    assert_eq!(a.counters.comparisons, b.counters.comparisons);
}
