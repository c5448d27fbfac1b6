//! Simulated annealing over normalized slicing expressions, minimizing
//! total dead space, plus the repair path that turns arbitrary model output
//! into a legal tree.

use thiserror::Error;

use crate::encoding::expression_to_tree;
use crate::geometry::{evaluate, Envelope, EvalResult, ModuleDef, SlicingTree};
use crate::polish::PolishExpr;
use crate::rng::SplitMix64;

/// Annealing schedule. The starting temperature is not a field: it is
/// calibrated per run so that early uphill moves are accepted with
/// probability close to `initial_acceptance`.
#[derive(Debug, Clone, PartialEq)]
pub struct SAConfig {
    pub seed: u64,
    /// Target acceptance rate for uphill moves at the starting temperature,
    /// in (0, 1).
    pub initial_acceptance: f64,
    /// Geometric cooling factor per temperature level, in (0, 1).
    pub cooling_alpha: f64,
    /// Proposals per temperature level, scaled by the module count.
    pub moves_per_temperature: u64,
    /// Stop once temperature falls below this fraction of the start.
    pub min_temperature_ratio: f64,
    /// Total cost evaluations allowed, counting the starting state. A zero
    /// budget degenerates to evaluating the start only, which the repair
    /// path uses to pass model output through untouched.
    pub max_evaluations: u64,
}

impl SAConfig {
    pub fn new(seed: u64) -> SAConfig {
        SAConfig {
            seed,
            initial_acceptance: 0.9,
            cooling_alpha: 0.9,
            moves_per_temperature: 60,
            min_temperature_ratio: 1e-4,
            max_evaluations: 200_000,
        }
    }
}

/// Everything a run did: the champion, its exact evaluation, and counters.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealTrace {
    pub best_tree: SlicingTree,
    pub best_eval: EvalResult,
    pub evaluations_used: u64,
    pub accepted_moves: u64,
    /// Best cost known at the end of each temperature level.
    pub level_best: Vec<u128>,
}

/// Where a repaired tree came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    LlmDirect,
    LlmPolished,
    SaFallback,
}

impl Provenance {
    pub fn label(self) -> &'static str {
        match self {
            Provenance::LlmDirect => "llm_direct",
            Provenance::LlmPolished => "llm_polished",
            Provenance::SaFallback => "sa_fallback",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot anneal an empty module set")]
pub struct EmptyModuleSet;

/// One random local move. Move kinds are drawn uniformly: relabel two
/// adjacent operands, complement one operator run, or swap an operand with
/// a neighboring operator where that stays normalized (falling back to an
/// operand swap when no such site exists).
fn propose(expr: &mut PolishExpr, rng: &mut SplitMix64, sites: &mut Vec<usize>) {
    let n = expr.operand_count() as u64;
    match rng.next_below(3) {
        0 => expr.swap_adjacent_operands(rng.next_below(n - 1) as usize),
        1 => {
            let which = rng.next_below(expr.chain_count() as u64) as usize;
            expr.complement_chain(which);
        }
        _ => {
            expr.operand_operator_swap_sites(sites);
            if sites.is_empty() {
                expr.swap_adjacent_operands(rng.next_below(n - 1) as usize);
            } else {
                let site = sites[rng.next_below(sites.len() as u64) as usize];
                expr.swap_positions(site);
            }
        }
    }
}

fn run(
    modules: &[ModuleDef],
    mut current: PolishExpr,
    cfg: &SAConfig,
    rng: &mut SplitMix64,
) -> AnnealTrace {
    let n = modules.len();
    let envs: Vec<Envelope> = modules.iter().map(ModuleDef::envelope).collect();
    let mut stack: Vec<Envelope> = Vec::with_capacity(n);
    let mut sites: Vec<usize> = Vec::new();

    let mut evaluations: u64 = 0;
    let mut accepted: u64 = 0;
    let mut level_best: Vec<u128> = Vec::new();

    evaluations += 1;
    let mut current_cost = current.cost(&envs, &mut stack);
    let mut best = current.clone();
    let mut best_cost = current_cost;

    if n > 1 && evaluations < cfg.max_evaluations {
        // Calibration walk: accept every move, average the uphill steps,
        // and size the temperature so such a step passes with probability
        // initial_acceptance.
        let pilot = (2 * n as u64)
            .max(20)
            .min(cfg.max_evaluations - evaluations);
        let mut uphill_sum = 0.0f64;
        let mut uphill_seen = 0u64;
        let mut candidate = current.clone();
        for _ in 0..pilot {
            candidate.clone_from(&current);
            propose(&mut candidate, rng, &mut sites);
            evaluations += 1;
            let cost = candidate.cost(&envs, &mut stack);
            if cost > current_cost {
                uphill_sum += (cost - current_cost) as f64;
                uphill_seen += 1;
            }
            std::mem::swap(&mut current, &mut candidate);
            current_cost = cost;
            if cost < best_cost {
                best_cost = cost;
                best.clone_from(&current);
            }
        }
        let start_temperature = if uphill_seen == 0 || uphill_sum == 0.0 {
            1.0
        } else {
            (uphill_sum / uphill_seen as f64) / (1.0 / cfg.initial_acceptance).ln()
        };

        let floor = start_temperature * cfg.min_temperature_ratio;
        let mut temperature = start_temperature;
        let per_level = cfg.moves_per_temperature.saturating_mul(n as u64);
        'levels: loop {
            for _ in 0..per_level {
                if evaluations >= cfg.max_evaluations {
                    level_best.push(best_cost);
                    break 'levels;
                }
                candidate.clone_from(&current);
                propose(&mut candidate, rng, &mut sites);
                evaluations += 1;
                let cost = candidate.cost(&envs, &mut stack);
                let accept = if cost <= current_cost {
                    true
                } else {
                    let delta = (cost - current_cost) as f64;
                    rng.next_f64() < (-delta / temperature).exp()
                };
                if accept {
                    std::mem::swap(&mut current, &mut candidate);
                    current_cost = cost;
                    accepted += 1;
                    // Strict improvement only; equal-cost champions keep
                    // the incumbent so reruns agree on the witness.
                    if cost < best_cost {
                        best_cost = cost;
                        best.clone_from(&current);
                    }
                }
            }
            level_best.push(best_cost);
            temperature *= cfg.cooling_alpha;
            if temperature < floor {
                break;
            }
        }
    }

    let best_tree = best.to_tree();
    let best_eval = evaluate(&best_tree, modules).expect("annealer trees are structurally legal");
    debug_assert_eq!(best_eval.total_dead_space, best_cost);
    AnnealTrace {
        best_tree,
        best_eval,
        evaluations_used: evaluations,
        accepted_moves: accepted,
        level_best,
    }
}

/// Anneals from a seeded random starting expression.
pub fn anneal(modules: &[ModuleDef], cfg: &SAConfig) -> Result<AnnealTrace, EmptyModuleSet> {
    if modules.is_empty() {
        return Err(EmptyModuleSet);
    }
    let mut rng = SplitMix64::new(cfg.seed);
    let start = PolishExpr::random(modules.len(), &mut rng);
    Ok(run(modules, start, cfg, &mut rng))
}

/// Anneals from a given tree (normalized on entry). The recorded best can
/// only match or beat the start, so the result never regresses below it.
pub fn anneal_from(
    modules: &[ModuleDef],
    start: &SlicingTree,
    cfg: &SAConfig,
) -> Result<AnnealTrace, EmptyModuleSet> {
    if modules.is_empty() {
        return Err(EmptyModuleSet);
    }
    let mut rng = SplitMix64::new(cfg.seed);
    Ok(run(modules, PolishExpr::from_tree(start), cfg, &mut rng))
}

/// Turns raw model output into a legal tree, no matter what.
///
/// Legal output passes through untouched on a zero budget (`llm_direct`) or
/// seeds an annealing run (`llm_polished`); anything that fails to parse is
/// replaced by a run from a random start (`sa_fallback`).
pub fn repair(
    modules: &[ModuleDef],
    raw_output: &str,
    cfg: &SAConfig,
) -> Result<(SlicingTree, Provenance), EmptyModuleSet> {
    if modules.is_empty() {
        return Err(EmptyModuleSet);
    }
    match expression_to_tree(raw_output.trim(), modules) {
        Ok(tree) => {
            if cfg.max_evaluations == 0 {
                Ok((tree, Provenance::LlmDirect))
            } else {
                let trace = anneal_from(modules, &tree, cfg)?;
                Ok((trace.best_tree, Provenance::LlmPolished))
            }
        }
        Err(_) => {
            let trace = anneal(modules, cfg)?;
            Ok((trace.best_tree, Provenance::SaFallback))
        }
    }
}
