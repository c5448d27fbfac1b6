//! Normalized postfix form of slicing trees and the three classical local
//! moves the annealer searches with.
//!
//! A sequence is kept normalized: every prefix has more operands than
//! operators (each cut pops two trees) and no two identical cut operators
//! are adjacent. Runs of same-kind cuts therefore associate left, which is
//! a pure re-association: a run of vertical cuts spans the same total width
//! and maximum height however it is bracketed, so dead space and module
//! coordinates are unchanged. That makes the normalized form a canonical
//! representative, not an approximation.

use crate::geometry::{merge, pair_dead_space, CutKind, Envelope, SlicingTree};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Elem {
    Operand(usize),
    Operator(CutKind),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct PolishExpr {
    elems: Vec<Elem>,
}

impl PolishExpr {
    /// Converts a tree, re-associating same-kind cut runs to the left so the
    /// postfix never places two identical operators side by side.
    pub(crate) fn from_tree(tree: &SlicingTree) -> PolishExpr {
        fn emit(tree: &SlicingTree, elems: &mut Vec<Elem>) {
            match tree {
                SlicingTree::Leaf(i) => elems.push(Elem::Operand(*i)),
                SlicingTree::Cut(kind, _, _) => {
                    let mut parts = Vec::new();
                    collect_run(tree, *kind, &mut parts);
                    emit(parts[0], elems);
                    for part in &parts[1..] {
                        emit(part, elems);
                        elems.push(Elem::Operator(*kind));
                    }
                }
            }
        }
        fn collect_run<'t>(tree: &'t SlicingTree, kind: CutKind, out: &mut Vec<&'t SlicingTree>) {
            match tree {
                SlicingTree::Cut(k, l, r) if *k == kind => {
                    collect_run(l, kind, out);
                    collect_run(r, kind, out);
                }
                other => out.push(other),
            }
        }
        let mut elems = Vec::new();
        emit(tree, &mut elems);
        let expr = PolishExpr { elems };
        debug_assert!(expr.is_valid_normalized());
        expr
    }

    pub(crate) fn to_tree(&self) -> SlicingTree {
        let mut stack: Vec<SlicingTree> = Vec::new();
        for elem in &self.elems {
            match elem {
                Elem::Operand(i) => stack.push(SlicingTree::Leaf(*i)),
                Elem::Operator(kind) => {
                    let right = stack.pop().expect("normalized expression");
                    let left = stack.pop().expect("normalized expression");
                    stack.push(SlicingTree::cut(*kind, left, right));
                }
            }
        }
        debug_assert_eq!(stack.len(), 1);
        stack.pop().expect("normalized expression")
    }

    /// Random starting state: a shuffled operand order on a comb skeleton
    /// (operand, then alternating operand/operator), each cut drawn
    /// uniformly. Combs never put operators side by side, so any labeling
    /// is normalized.
    pub(crate) fn random(n: usize, rng: &mut SplitMix64) -> PolishExpr {
        assert!(n >= 1);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.next_below(i as u64 + 1) as usize);
        }
        let mut elems = Vec::with_capacity(2 * n - 1);
        elems.push(Elem::Operand(perm[0]));
        for &module in &perm[1..] {
            elems.push(Elem::Operand(module));
            let kind = if rng.next_below(2) == 0 {
                CutKind::Horizontal
            } else {
                CutKind::Vertical
            };
            elems.push(Elem::Operator(kind));
        }
        let expr = PolishExpr { elems };
        debug_assert!(expr.is_valid_normalized());
        expr
    }

    pub(crate) fn operand_count(&self) -> usize {
        self.elems.len() / 2 + 1
    }

    /// Total dead space; `stack` is reusable scratch for the hot loop.
    pub(crate) fn cost(&self, envs: &[Envelope], stack: &mut Vec<Envelope>) -> u128 {
        stack.clear();
        let mut dead_space: u128 = 0;
        for elem in &self.elems {
            match elem {
                Elem::Operand(i) => stack.push(envs[*i]),
                Elem::Operator(kind) => {
                    let right = stack.pop().expect("normalized expression");
                    let left = stack.pop().expect("normalized expression");
                    dead_space += pair_dead_space(left, right, *kind);
                    stack.push(merge(left, right, *kind));
                }
            }
        }
        debug_assert_eq!(stack.len(), 1);
        dead_space
    }

    /// Full structural check: operand set {0..n-1} exactly once, every
    /// prefix keeps at least one tree on the stack with two available to
    /// every operator, and no same-kind operators touch.
    pub(crate) fn is_valid_normalized(&self) -> bool {
        let n = self.operand_count();
        if self.elems.len() != 2 * n - 1 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut depth: isize = 0;
        let mut previous: Option<&Elem> = None;
        for elem in &self.elems {
            match elem {
                Elem::Operand(i) => {
                    match seen.get_mut(*i) {
                        Some(slot) if !*slot => *slot = true,
                        _ => return false,
                    }
                    depth += 1;
                }
                Elem::Operator(kind) => {
                    if depth < 2 {
                        return false;
                    }
                    depth -= 1;
                    if previous == Some(&Elem::Operator(*kind)) {
                        return false;
                    }
                }
            }
            previous = Some(elem);
        }
        depth == 1 && seen.iter().all(|s| *s)
    }

    /// Swaps the module labels of operands `which` and `which + 1` counted
    /// in operand order. The skeleton is untouched, so validity holds.
    pub(crate) fn swap_adjacent_operands(&mut self, which: usize) {
        let mut operand_index = 0;
        let mut first: Option<usize> = None;
        for position in 0..self.elems.len() {
            if let Elem::Operand(_) = self.elems[position] {
                if operand_index == which {
                    first = Some(position);
                } else if operand_index == which + 1 {
                    let a = first.expect("operands appear in order");
                    self.elems.swap(a, position);
                    debug_assert!(self.is_valid_normalized());
                    return;
                }
                operand_index += 1;
            }
        }
        unreachable!("operand pair {which} out of range");
    }

    /// Number of maximal runs of consecutive operators.
    pub(crate) fn chain_count(&self) -> usize {
        let mut chains = 0;
        let mut in_chain = false;
        for elem in &self.elems {
            match elem {
                Elem::Operator(_) if !in_chain => {
                    chains += 1;
                    in_chain = true;
                }
                Elem::Operator(_) => {}
                Elem::Operand(_) => in_chain = false,
            }
        }
        chains
    }

    /// Flips every operator in the `which`-th maximal run. Runs alternate
    /// kinds (normalization), and flipping preserves alternation.
    pub(crate) fn complement_chain(&mut self, which: usize) {
        let mut chains = 0usize;
        let mut in_chain = false;
        for position in 0..self.elems.len() {
            match self.elems[position] {
                Elem::Operator(kind) => {
                    if !in_chain {
                        in_chain = true;
                        chains += 1;
                    }
                    if chains == which + 1 {
                        self.elems[position] = Elem::Operator(kind.flipped());
                    }
                }
                Elem::Operand(_) => {
                    if in_chain && chains == which + 1 {
                        debug_assert!(self.is_valid_normalized());
                        return;
                    }
                    in_chain = false;
                }
            }
        }
        debug_assert!(self.is_valid_normalized());
    }

    /// Positions `i` where swapping `i` and `i + 1` (one operand, one
    /// operator) keeps the expression normalized. Moving an operator left
    /// needs three more operands than operators before the boundary (the
    /// operator executes one slot earlier); moving it right only risks
    /// touching a same-kind neighbor.
    pub(crate) fn operand_operator_swap_sites(&self, sites: &mut Vec<usize>) {
        sites.clear();
        let mut depth: isize = 0;
        for i in 0..self.elems.len() - 1 {
            let here = self.elems[i];
            if let Elem::Operand(_) = here {
                depth += 1;
            } else {
                depth -= 1;
            }
            match (here, self.elems[i + 1]) {
                (Elem::Operand(_), Elem::Operator(kind)) => {
                    // depth includes position i; the operator lands one
                    // slot earlier, so two operands must precede it with a
                    // third surviving the pop, and its new left neighbor
                    // must not be a same-kind operator.
                    let balloting_ok = depth >= 3;
                    let left_ok = i == 0 || self.elems[i - 1] != Elem::Operator(kind);
                    if balloting_ok && left_ok {
                        sites.push(i);
                    }
                }
                (Elem::Operator(kind), Elem::Operand(_)) => {
                    let right_ok =
                        i + 2 >= self.elems.len() || self.elems[i + 2] != Elem::Operator(kind);
                    if right_ok {
                        sites.push(i);
                    }
                }
                _ => {}
            }
        }
    }

    pub(crate) fn swap_positions(&mut self, i: usize) {
        self.elems.swap(i, i + 1);
        debug_assert!(self.is_valid_normalized());
    }
}
