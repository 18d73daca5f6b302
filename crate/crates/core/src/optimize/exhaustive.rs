use rayon::prelude::*;

use super::{
    evaluate_cost, CostSpec, DeltaCell, Evaluation, Evaluator, SearchResult, SimEvaluator,
};
use crate::behaviors::BehaviorSpec;
use crate::error::{Error, Result};
use crate::scenario::{ObstacleParam, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExhaustiveOptions {
    /// Keep every `stride`-th grid node along each axis.
    pub stride: usize,
    /// Worker threads; `0` uses every available core.
    pub jobs: usize,
}

impl Default for ExhaustiveOptions {
    fn default() -> Self {
        Self { stride: 1, jobs: 0 }
    }
}

/// Grid nodes `(i h, j h)` of `s` used as candidate barycenters, `x` fastest.
pub fn barycenter_nodes(s: &Scenario, stride: usize) -> Vec<(f64, f64)> {
    let stride = stride.max(1);
    let h = s.spacing();
    let mut nodes = Vec::new();
    for j in (0..=s.ny).step_by(stride) {
        for i in (0..=s.nx).step_by(stride) {
            nodes.push((i as f64 * h, j as f64 * h));
        }
    }
    nodes
}

/// Scans every node barycenter of `s` for an obstacle of sides `shape`,
/// simulating `natural` at each admissible position.
pub fn exhaustive_search(
    s: &Scenario,
    natural: &BehaviorSpec,
    shape: (f64, f64),
    cost: &CostSpec,
    opts: ExhaustiveOptions,
) -> Result<SearchResult> {
    let eval = SimEvaluator::new(s, natural);
    exhaustive_search_with(&eval, &barycenter_nodes(s, opts.stride), shape, cost, opts)
}

pub(super) fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Exhaustive scan over `nodes` with an arbitrary evaluator. Ties go to the
/// node listed first.
pub fn exhaustive_search_with<E: Evaluator>(
    eval: &E,
    nodes: &[(f64, f64)],
    shape: (f64, f64),
    cost: &CostSpec,
    opts: ExhaustiveOptions,
) -> Result<SearchResult> {
    let lambdas: Vec<ObstacleParam> = nodes
        .iter()
        .map(|&(x, y)| ObstacleParam::new(x, y, shape.0, shape.1))
        .collect();
    let (uncontrolled, outcomes) = in_pool(opts.jobs, || {
        let uncontrolled = eval.metrics(None);
        let outcomes: Vec<Option<Result<_>>> = lambdas
            .par_iter()
            .map(|l| eval.admissible(l).then(|| eval.metrics(Some(l))))
            .collect();
        (uncontrolled, outcomes)
    });
    let uncontrolled_delta = evaluate_cost(cost, &uncontrolled?);

    let mut delta_map = Vec::with_capacity(nodes.len());
    let mut evaluations = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for (k, (lambda, outcome)) in lambdas.iter().zip(outcomes).enumerate() {
        let cell = |delta, admissible| DeltaCell {
            x: lambda.x,
            y: lambda.y,
            delta,
            admissible,
        };
        let Some(m) = outcome else {
            delta_map.push(cell(uncontrolled_delta, false));
            continue;
        };
        let m = m?;
        let delta = evaluate_cost(cost, &m);
        delta_map.push(cell(delta, true));
        if best.is_none_or(|(_, b)| delta < b) {
            best = Some((evaluations.len(), delta));
        }
        evaluations.push(Evaluation {
            step: k,
            rule: None,
            p: None,
            lambda: *lambda,
            delta: Some(delta),
            aborted: m.aborted,
            accepted: false,
        });
    }
    let (b, delta_star) = best.ok_or(Error::NoAdmissiblePosition)?;
    evaluations[b].accepted = true;
    Ok(SearchResult {
        lambda_star: evaluations[b].lambda,
        delta_star,
        uncontrolled_delta,
        evaluations,
        delta_map: Some(delta_map),
    })
}
