//! Exhaustive ground truth for small module sets: every tree shape, every
//! leaf order, every cut labeling. Slow by design and honest about it; the
//! cap exists because the search space is Catalan(n-1) * n! * 2^(n-1).

use itertools::Itertools;
use thiserror::Error;

use crate::geometry::{merge, pair_dead_space, CutKind, Envelope, ModuleDef, SlicingTree};

/// Largest module count the exhaustive search accepts by default
/// (42,577,920 expressions at n = 7).
pub const DEFAULT_CAP: usize = 7;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("cannot search an empty module set")]
    NoModules,
    #[error("exhaustive search over {n} modules exceeds the cap of {cap}")]
    TooManyModules { n: usize, cap: usize },
}

/// Exact optimum plus the first tree attaining it in enumeration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub min_dead_space: u128,
    pub witness_tree: SlicingTree,
    pub expressions_examined: u64,
}

/// Post-order skeleton of a tree shape; leaves and cuts without content.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ShapeTok {
    Leaf,
    Internal,
}

/// All binary tree shapes over `n` leaves as post-order programs, ordered by
/// recursive decomposition with the left subtree size ascending.
fn shapes(n: usize) -> Vec<Vec<ShapeTok>> {
    if n == 1 {
        return vec![vec![ShapeTok::Leaf]];
    }
    let mut out = Vec::new();
    for left in 1..n {
        for l in shapes(left) {
            for r in shapes(n - left) {
                let mut program = Vec::with_capacity(2 * n - 1);
                program.extend_from_slice(&l);
                program.extend_from_slice(&r);
                program.push(ShapeTok::Internal);
                out.push(program);
            }
        }
    }
    out
}

/// Cut kind of internal node `index` (post-order) under labeling `labels`:
/// bit clear = horizontal, bit set = vertical.
fn kind_of(labels: u64, index: usize) -> CutKind {
    if (labels >> index) & 1 == 0 {
        CutKind::Horizontal
    } else {
        CutKind::Vertical
    }
}

/// Evaluates one (shape, permutation, labeling) without building a tree.
/// `stack` is caller-owned scratch so the hot loop never allocates.
fn eval_program(
    program: &[ShapeTok],
    perm: &[usize],
    labels: u64,
    envs: &[Envelope],
    stack: &mut Vec<Envelope>,
) -> u128 {
    stack.clear();
    let mut leaf_cursor = 0;
    let mut op_cursor = 0;
    let mut dead_space: u128 = 0;
    for tok in program {
        match tok {
            ShapeTok::Leaf => {
                stack.push(envs[perm[leaf_cursor]]);
                leaf_cursor += 1;
            }
            ShapeTok::Internal => {
                let right = stack.pop().unwrap();
                let left = stack.pop().unwrap();
                let kind = kind_of(labels, op_cursor);
                op_cursor += 1;
                dead_space += pair_dead_space(left, right, kind);
                stack.push(merge(left, right, kind));
            }
        }
    }
    dead_space
}

fn build_tree(program: &[ShapeTok], perm: &[usize], labels: u64) -> SlicingTree {
    let mut stack: Vec<SlicingTree> = Vec::new();
    let mut leaf_cursor = 0;
    let mut op_cursor = 0;
    for tok in program {
        match tok {
            ShapeTok::Leaf => {
                stack.push(SlicingTree::Leaf(perm[leaf_cursor]));
                leaf_cursor += 1;
            }
            ShapeTok::Internal => {
                let right = stack.pop().unwrap();
                let left = stack.pop().unwrap();
                let kind = kind_of(labels, op_cursor);
                op_cursor += 1;
                stack.push(SlicingTree::cut(kind, left, right));
            }
        }
    }
    stack.pop().unwrap()
}

/// Finds the true minimum dead space by trying every expression.
///
/// Enumeration order is shapes, then leaf permutations (lexicographic),
/// then cut labelings (binary counter); ties keep the first hit, so the
/// witness is stable across runs and platforms. The full space is always
/// walked, never short-circuited, so `expressions_examined` is the size of
/// the space itself.
pub fn brute_force_optimum(modules: &[ModuleDef], cap: usize) -> Result<OracleResult, OracleError> {
    let n = modules.len();
    if n == 0 {
        return Err(OracleError::NoModules);
    }
    if n > cap {
        return Err(OracleError::TooManyModules { n, cap });
    }
    let envs: Vec<Envelope> = modules.iter().map(ModuleDef::envelope).collect();
    let labelings: u64 = 1 << (n - 1);
    let mut best: Option<(u128, usize, Vec<usize>, u64)> = None;
    let mut examined: u64 = 0;
    let mut stack = Vec::with_capacity(n);
    let all_shapes = shapes(n);
    for (shape_index, program) in all_shapes.iter().enumerate() {
        for perm in (0..n).permutations(n) {
            for labels in 0..labelings {
                examined += 1;
                let dead_space = eval_program(program, &perm, labels, &envs, &mut stack);
                if best.as_ref().map_or(true, |(b, ..)| dead_space < *b) {
                    best = Some((dead_space, shape_index, perm.clone(), labels));
                }
            }
        }
    }
    let (min_dead_space, shape_index, perm, labels) = best.expect("n >= 1 examines something");
    let witness_tree = build_tree(&all_shapes[shape_index], &perm, labels);
    Ok(OracleResult {
        min_dead_space,
        witness_tree,
        expressions_examined: examined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_instance, GenConfig};
    use crate::encoding::tree_to_expression;
    use crate::geometry::evaluate;
    use crate::rng::SplitMix64;

    fn modules(dims: &[(u64, u64)]) -> Vec<ModuleDef> {
        dims.iter()
            .enumerate()
            .map(|(i, &(w, h))| ModuleDef::new(i as u32, w, h).unwrap())
            .collect()
    }

    fn catalan(k: u64) -> u64 {
        (0..k).fold(1u64, |c, i| c * 2 * (2 * i + 1) / (i + 2))
    }

    fn factorial(n: u64) -> u64 {
        (1..=n).product::<u64>().max(1)
    }

    fn space_size(n: u64) -> u64 {
        catalan(n - 1) * factorial(n) * (1 << (n - 1))
    }

    #[test]
    fn two_module_search_space() {
        let mods = modules(&[(1, 1), (1, 2)]);
        let result = brute_force_optimum(&mods, DEFAULT_CAP).unwrap();
        assert_eq!(result.min_dead_space, 0);
        assert_eq!(result.expressions_examined, 4);
        assert_eq!(tree_to_expression(&result.witness_tree, &mods), "P_0;P_1;H");
    }

    #[test]
    fn tie_break_is_first_in_enumeration_order() {
        // Every stacking of two unit squares is optimal; the first
        // expression examined must win.
        let mods = modules(&[(1, 1), (1, 1)]);
        let result = brute_force_optimum(&mods, DEFAULT_CAP).unwrap();
        assert_eq!(result.min_dead_space, 0);
        assert_eq!(tree_to_expression(&result.witness_tree, &mods), "P_0;P_1;H");
    }

    #[test]
    fn single_module_is_trivially_optimal() {
        let mods = modules(&[(9, 4)]);
        let result = brute_force_optimum(&mods, DEFAULT_CAP).unwrap();
        assert_eq!(result.min_dead_space, 0);
        assert_eq!(result.witness_tree, SlicingTree::Leaf(0));
        assert_eq!(result.expressions_examined, 1);
    }

    #[test]
    fn examined_count_matches_closed_form_up_to_six() {
        let mut rng = SplitMix64::new(41);
        for n in 1..=6usize {
            let dims: Vec<(u64, u64)> = (0..n)
                .map(|_| (rng.range_inclusive(1, 9), rng.range_inclusive(1, 9)))
                .collect();
            let result = brute_force_optimum(&modules(&dims), DEFAULT_CAP).unwrap();
            assert_eq!(result.expressions_examined, space_size(n as u64), "n = {n}");
            let eval = evaluate(&result.witness_tree, &modules(&dims)).unwrap();
            assert_eq!(eval.total_dead_space, result.min_dead_space);
        }
    }

    #[test]
    fn examined_count_matches_closed_form_at_seven() {
        let dims = [(3, 5), (2, 2), (7, 1), (4, 4), (1, 6), (2, 5), (3, 3)];
        let result = brute_force_optimum(&modules(&dims), DEFAULT_CAP).unwrap();
        assert_eq!(result.expressions_examined, 42_577_920);
        assert_eq!(result.expressions_examined, space_size(7));
        let eval = evaluate(&result.witness_tree, &modules(&dims)).unwrap();
        assert_eq!(eval.total_dead_space, result.min_dead_space);
    }

    #[test]
    fn agrees_with_generator_optimality() {
        for seed in 0..10 {
            let cfg = GenConfig::new(5, 9000 + seed);
            let instance = generate_instance(&cfg).unwrap();
            let result = brute_force_optimum(&instance.modules, DEFAULT_CAP).unwrap();
            assert_eq!(result.min_dead_space, 0, "seed {seed}");
        }
    }

    #[test]
    fn lower_bounds_random_trees() {
        let mut rng = SplitMix64::new(0x0806);
        for _ in 0..20 {
            let n = 2 + rng.next_below(4) as usize;
            let dims: Vec<(u64, u64)> = (0..n)
                .map(|_| (rng.range_inclusive(1, 12), rng.range_inclusive(1, 12)))
                .collect();
            let mods = modules(&dims);
            let result = brute_force_optimum(&mods, DEFAULT_CAP).unwrap();
            let all_shapes = shapes(n);
            for _ in 0..50 {
                let program = &all_shapes[rng.next_below(all_shapes.len() as u64) as usize];
                let mut perm: Vec<usize> = (0..n).collect();
                for i in (1..n).rev() {
                    perm.swap(i, rng.next_below(i as u64 + 1) as usize);
                }
                let labels = rng.next_below(1 << (n - 1));
                let tree = build_tree(program, &perm, labels);
                let eval = evaluate(&tree, &mods).unwrap();
                assert!(eval.total_dead_space >= result.min_dead_space);
            }
        }
    }

    #[test]
    fn program_evaluation_matches_tree_evaluation() {
        let mut rng = SplitMix64::new(0xE7A1);
        for _ in 0..200 {
            let n = 1 + rng.next_below(6) as usize;
            let dims: Vec<(u64, u64)> = (0..n)
                .map(|_| (rng.range_inclusive(1, 5000), rng.range_inclusive(1, 5000)))
                .collect();
            let mods = modules(&dims);
            let envs: Vec<Envelope> = mods.iter().map(ModuleDef::envelope).collect();
            let all_shapes = shapes(n);
            let program = &all_shapes[rng.next_below(all_shapes.len() as u64) as usize];
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                perm.swap(i, rng.next_below(i as u64 + 1) as usize);
            }
            let labels = rng.next_below(1 << (n - 1));
            let mut stack = Vec::new();
            let fast = eval_program(program, &perm, labels, &envs, &mut stack);
            let tree = build_tree(program, &perm, labels);
            assert_eq!(fast, evaluate(&tree, &mods).unwrap().total_dead_space);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let dims: Vec<(u64, u64)> = (0..8).map(|i| (i + 1, i + 2)).collect();
        assert_eq!(
            brute_force_optimum(&modules(&dims), DEFAULT_CAP),
            Err(OracleError::TooManyModules { n: 8, cap: 7 })
        );
        let small = modules(&[(1, 1), (2, 2), (3, 3)]);
        assert_eq!(
            brute_force_optimum(&small, 2),
            Err(OracleError::TooManyModules { n: 3, cap: 2 })
        );
        assert_eq!(
            brute_force_optimum(&[], DEFAULT_CAP),
            Err(OracleError::NoModules)
        );
    }
}
