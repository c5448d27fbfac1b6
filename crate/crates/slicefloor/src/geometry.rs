//! Exact integer geometry for slicing floorplans: envelope merging, pairwise
//! dead space, whole-tree evaluation, coordinate placement, and the
//! zero-dead-space optimality test.
//!
//! All arithmetic is exact. Side lengths are `u64` (modules capped at
//! 2^31 - 1 per side so merged envelopes cannot overflow), areas are `u128`,
//! and the dead-space ratio is a reduced rational, rendered to decimal only
//! at report boundaries.

use num::rational::Ratio;
use num::Zero;
use thiserror::Error;

/// Largest side length accepted for a single module.
pub const MAX_SIDE: u64 = (1 << 31) - 1;

/// One rectangular module with a fixed width and height (no rotation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModuleDef {
    pub id: u32,
    pub width: u64,
    pub height: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("module P_{id} has invalid dimensions {width}x{height} (sides must be in [1, {MAX_SIDE}])")]
pub struct InvalidDimension {
    pub id: u32,
    pub width: u64,
    pub height: u64,
}

impl ModuleDef {
    pub fn new(id: u32, width: u64, height: u64) -> Result<Self, InvalidDimension> {
        if width == 0 || height == 0 || width > MAX_SIDE || height > MAX_SIDE {
            return Err(InvalidDimension { id, width, height });
        }
        Ok(ModuleDef { id, width, height })
    }

    pub fn area(&self) -> u128 {
        self.width as u128 * self.height as u128
    }

    pub fn envelope(&self) -> Envelope {
        Envelope {
            width: self.width,
            height: self.height,
        }
    }
}

/// Cut direction at an internal node of a slicing tree.
///
/// A horizontal cut stacks its children vertically (left child on the
/// bottom); a vertical cut places them side by side (left child on the
/// left).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CutKind {
    Horizontal,
    Vertical,
}

impl CutKind {
    pub fn token(self) -> char {
        match self {
            CutKind::Horizontal => 'H',
            CutKind::Vertical => 'V',
        }
    }

    pub fn flipped(self) -> CutKind {
        match self {
            CutKind::Horizontal => CutKind::Vertical,
            CutKind::Vertical => CutKind::Horizontal,
        }
    }
}

/// Binary tree of cuts over module leaves; the floorplan representation.
///
/// Leaves hold indices into the instance's module list, and a valid tree
/// references each module exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlicingTree {
    Leaf(usize),
    Cut(CutKind, Box<SlicingTree>, Box<SlicingTree>),
}

impl SlicingTree {
    pub fn cut(kind: CutKind, left: SlicingTree, right: SlicingTree) -> SlicingTree {
        SlicingTree::Cut(kind, Box::new(left), Box::new(right))
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            SlicingTree::Leaf(_) => 1,
            SlicingTree::Cut(_, l, r) => l.leaf_count() + r.leaf_count(),
        }
    }

    /// Leaf indices in left-to-right order.
    pub fn leaf_indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.leaf_count());
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            SlicingTree::Leaf(i) => out.push(*i),
            SlicingTree::Cut(_, l, r) => {
                l.collect_leaves(out);
                r.collect_leaves(out);
            }
        }
    }
}

/// Bounding rectangle of a module or composite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Envelope {
    pub width: u64,
    pub height: u64,
}

impl Envelope {
    pub fn new(width: u64, height: u64) -> Envelope {
        debug_assert!(width >= 1 && height >= 1);
        Envelope { width, height }
    }

    pub fn area(&self) -> u128 {
        self.width as u128 * self.height as u128
    }
}

/// Merges two envelopes into the composite envelope across a cut.
///
/// Side-by-side widths add and heights take the max; stacked heights add and
/// widths take the max.
pub fn merge(a: Envelope, b: Envelope, kind: CutKind) -> Envelope {
    match kind {
        CutKind::Vertical => Envelope::new(a.width + b.width, a.height.max(b.height)),
        CutKind::Horizontal => Envelope::new(a.width.max(b.width), a.height + b.height),
    }
}

/// Dead space created by joining two envelopes across a cut.
///
/// Side by side, the shorter child leaves a strip of its own width times the
/// height difference; stacked, the narrower child leaves its height times
/// the width difference. Either form equals the merged envelope area minus
/// the child areas.
pub fn pair_dead_space(a: Envelope, b: Envelope, kind: CutKind) -> u128 {
    match kind {
        CutKind::Vertical => {
            let shorter_width = if a.height <= b.height {
                a.width
            } else {
                b.width
            };
            shorter_width as u128 * a.height.abs_diff(b.height) as u128
        }
        CutKind::Horizontal => {
            let narrower_height = if a.width <= b.width {
                a.height
            } else {
                b.height
            };
            narrower_height as u128 * a.width.abs_diff(b.width) as u128
        }
    }
}

/// Total dead space, final envelope, and dead-space ratio for a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalResult {
    pub total_dead_space: u128,
    pub envelope: Envelope,
    pub module_area_sum: u128,
    /// Dead space over module area sum, reduced at construction.
    pub dead_space_ratio: Ratio<u128>,
}

impl EvalResult {
    /// True exactly when the floorplan wastes no area.
    pub fn is_optimal(&self) -> bool {
        self.total_dead_space == 0
    }
}

/// Tree/module-set mismatch. A contract violation, not a scoring result.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeStructureError {
    #[error("leaf references module index {index} but only {count} modules exist")]
    LeafOutOfRange { index: usize, count: usize },
    #[error("module index {index} appears in more than one leaf")]
    LeafReused { index: usize },
    #[error("module index {index} is not referenced by any leaf")]
    ModuleUnused { index: usize },
}

fn check_structure(tree: &SlicingTree, modules: &[ModuleDef]) -> Result<(), TreeStructureError> {
    let mut seen = vec![false; modules.len()];
    for index in tree.leaf_indices() {
        match seen.get_mut(index) {
            None => {
                return Err(TreeStructureError::LeafOutOfRange {
                    index,
                    count: modules.len(),
                })
            }
            Some(slot) if *slot => return Err(TreeStructureError::LeafReused { index }),
            Some(slot) => *slot = true,
        }
    }
    if let Some(index) = seen.iter().position(|used| !used) {
        return Err(TreeStructureError::ModuleUnused { index });
    }
    Ok(())
}

/// Evaluates a slicing tree: walks the post-order node sequence with a stack
/// of envelopes, accumulating pairwise dead space at every cut.
pub fn evaluate(
    tree: &SlicingTree,
    modules: &[ModuleDef],
) -> Result<EvalResult, TreeStructureError> {
    check_structure(tree, modules)?;

    enum Frame<'t> {
        Visit(&'t SlicingTree),
        Combine(CutKind),
    }

    let mut work = vec![Frame::Visit(tree)];
    let mut stack: Vec<Envelope> = Vec::new();
    let mut dead_space: u128 = 0;
    while let Some(frame) = work.pop() {
        match frame {
            Frame::Visit(SlicingTree::Leaf(i)) => stack.push(modules[*i].envelope()),
            Frame::Visit(SlicingTree::Cut(kind, l, r)) => {
                work.push(Frame::Combine(*kind));
                work.push(Frame::Visit(r));
                work.push(Frame::Visit(l));
            }
            Frame::Combine(kind) => {
                let right = stack.pop().expect("combine with two operands");
                let left = stack.pop().expect("combine with two operands");
                dead_space += pair_dead_space(left, right, kind);
                stack.push(merge(left, right, kind));
            }
        }
    }
    let envelope = stack.pop().expect("evaluation leaves one envelope");
    debug_assert!(stack.is_empty());

    let module_area_sum: u128 = modules.iter().map(ModuleDef::area).sum();
    let dead_space_ratio = if dead_space == 0 {
        Ratio::zero()
    } else {
        Ratio::new(dead_space, module_area_sum)
    };
    Ok(EvalResult {
        total_dead_space: dead_space,
        envelope,
        module_area_sum,
        dead_space_ratio,
    })
}

/// One module anchored at its lower-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlacedModule {
    pub id: u32,
    pub x: u64,
    pub y: u64,
}

/// Lower-left coordinates for every module of an evaluated tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub entries: Vec<PlacedModule>,
    pub envelope: Envelope,
}

/// Assigns coordinates: a vertical cut puts the right child at the left
/// child's envelope width, a horizontal cut stacks the right child at the
/// left child's envelope height. Leaves anchor at their cell's lower-left.
pub fn place(tree: &SlicingTree, modules: &[ModuleDef]) -> Result<Placement, TreeStructureError> {
    check_structure(tree, modules)?;
    let mut entries = Vec::with_capacity(modules.len());
    let envelope = place_node(tree, modules, 0, 0, &mut entries);
    entries.sort_by_key(|p| p.id);
    Ok(Placement { entries, envelope })
}

fn place_node(
    tree: &SlicingTree,
    modules: &[ModuleDef],
    x: u64,
    y: u64,
    out: &mut Vec<PlacedModule>,
) -> Envelope {
    match tree {
        SlicingTree::Leaf(i) => {
            let m = &modules[*i];
            out.push(PlacedModule { id: m.id, x, y });
            m.envelope()
        }
        SlicingTree::Cut(kind, l, r) => {
            let left = place_node(l, modules, x, y, out);
            let right = match kind {
                CutKind::Vertical => place_node(r, modules, x + left.width, y, out),
                CutKind::Horizontal => place_node(r, modules, x, y + left.height, out),
            };
            merge(left, right, *kind)
        }
    }
}
