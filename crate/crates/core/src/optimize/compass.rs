use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    evaluate_cost, perturb, CostSpec, Evaluation, Evaluator, Rule, SearchResult, SimEvaluator,
    MAX_STEP_CELLS,
};
use crate::behaviors::BehaviorSpec;
use crate::error::{Error, Result};
use crate::scenario::{ObstacleParam, Scenario};

/// Simulated-annealing schedule and the seed of the random walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnealSpec {
    pub enabled: bool,
    /// Initial temperature; `0.1 * Delta(lambda0)` when `None`.
    pub t0: Option<f64>,
    /// Temperature factor applied after every step.
    pub cooling: f64,
    pub rng_seed: u64,
}

impl Default for AnnealSpec {
    fn default() -> Self {
        Self {
            enabled: true,
            t0: None,
            cooling: 0.95,
            rng_seed: 0,
        }
    }
}

impl AnnealSpec {
    pub fn disabled(rng_seed: u64) -> Self {
        Self {
            enabled: false,
            rng_seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(Error::invalid("anneal.cooling", "must lie in (0, 1)"));
        }
        if let Some(t0) = self.t0 {
            if !(t0 >= 0.0) {
                return Err(Error::invalid("anneal.t0", "must be nonnegative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CompassOptions {
    pub max_steps: usize,
    /// Consecutive rejections, inadmissible moves included, that end the walk.
    pub stall_limit: usize,
}

impl Default for CompassOptions {
    fn default() -> Self {
        Self {
            max_steps: 500,
            stall_limit: 200,
        }
    }
}

/// Compass walk from `lambda0` on the grid of `s`, simulating `natural` at
/// each admissible candidate.
pub fn compass_search(
    s: &Scenario,
    natural: &BehaviorSpec,
    lambda0: &ObstacleParam,
    cost: &CostSpec,
    anneal: &AnnealSpec,
    opts: CompassOptions,
) -> Result<SearchResult> {
    let eval = SimEvaluator::new(s, natural);
    compass_search_with(&eval, s.spacing(), lambda0, cost, anneal, opts)
}

/// Memo key: the obstacle quantized to half cells.
fn key(l: &ObstacleParam, h: f64) -> [i64; 4] {
    [l.x, l.y, l.w, l.h].map(|v| (2.0 * v / h).round() as i64)
}

/// Compass walk with an arbitrary evaluator on a grid of spacing `h`.
pub fn compass_search_with<E: Evaluator>(
    eval: &E,
    h: f64,
    lambda0: &ObstacleParam,
    cost: &CostSpec,
    anneal: &AnnealSpec,
    opts: CompassOptions,
) -> Result<SearchResult> {
    anneal.validate()?;
    if !eval.admissible(lambda0) {
        return Err(Error::Inadmissible);
    }
    let uncontrolled_delta = evaluate_cost(cost, &eval.metrics(None)?);
    let mut memo: HashMap<[i64; 4], (f64, bool)> = HashMap::new();
    let mut cost_of = |l: &ObstacleParam| -> Result<(f64, bool)> {
        if let Some(&c) = memo.get(&key(l, h)) {
            return Ok(c);
        }
        let m = eval.metrics(Some(l))?;
        let c = (evaluate_cost(cost, &m), m.aborted);
        memo.insert(key(l, h), c);
        Ok(c)
    };

    let (d0, aborted0) = cost_of(lambda0)?;
    let mut evaluations = vec![Evaluation {
        step: 0,
        rule: None,
        p: None,
        lambda: *lambda0,
        delta: Some(d0),
        aborted: aborted0,
        accepted: true,
    }];
    let mut rng = ChaCha8Rng::seed_from_u64(anneal.rng_seed);
    let mut temperature = anneal.t0.unwrap_or(0.1 * d0);
    let (mut current, mut current_delta) = (*lambda0, d0);
    let (mut best, mut best_delta) = (*lambda0, d0);
    let mut stall = 0;
    for step in 1..=opts.max_steps {
        if stall >= opts.stall_limit {
            break;
        }
        let p = rng.gen_range(1..=MAX_STEP_CELLS);
        let rule = Rule::ALL[rng.gen_range(0..Rule::ALL.len())];
        let candidate = perturb(&current, rule, p, h);
        let mut record = Evaluation {
            step,
            rule: Some(rule),
            p: Some(p),
            lambda: candidate,
            delta: None,
            aborted: false,
            accepted: false,
        };
        if eval.admissible(&candidate) {
            let (d, aborted) = cost_of(&candidate)?;
            record.delta = Some(d);
            record.aborted = aborted;
            record.accepted = if d < current_delta {
                true
            } else if anneal.enabled && temperature > 0.0 {
                rng.gen::<f64>() < (-(d - current_delta) / temperature).exp()
            } else {
                false
            };
            if record.accepted {
                current = candidate;
                current_delta = d;
                if d < best_delta {
                    best = candidate;
                    best_delta = d;
                }
            }
        }
        stall = if record.accepted { 0 } else { stall + 1 };
        temperature *= anneal.cooling;
        evaluations.push(record);
    }
    Ok(SearchResult {
        lambda_star: best,
        delta_star: best_delta,
        uncontrolled_delta,
        evaluations,
        delta_map: None,
    })
}
