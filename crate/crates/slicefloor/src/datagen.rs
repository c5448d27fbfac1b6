//! Mass production of provably optimal floorplanning instances.
//!
//! Each instance starts from one random rectangle that is recursively sliced
//! into integer-dimensioned cells. The slice history is the slicing tree, so
//! the modules tile the initial rectangle exactly and the recorded tree has
//! zero dead space by construction. Instances are a pure function of their
//! seed, which keeps dataset bytes reproducible across machines.

use std::collections::HashMap;
use std::io::{self, Write};
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::encoding::{modules_to_listing, tree_to_expression};
use crate::geometry::{CutKind, ModuleDef, SlicingTree, MAX_SIDE};
use crate::rng::{derive_seed, SplitMix64};

/// Prompt instruction block shipped with the crate as a text asset.
pub const DEFAULT_INSTRUCTION: &str = include_str!("../assets/instruction.txt");

/// Attempts per instance before the configuration is declared infeasible.
const MAX_ATTEMPTS: u32 = 100;

/// Free parameters of the instance generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenConfig {
    pub module_count: usize,
    pub initial_width_range: RangeInclusive<u64>,
    pub initial_height_range: RangeInclusive<u64>,
    /// Smallest side length any generated module may have.
    pub min_side: u64,
    /// Inclusive id range from which distinct module labels are drawn.
    pub id_pool: RangeInclusive<u32>,
    pub seed: u64,
}

impl GenConfig {
    /// Defaults sized after production-scale floorplans: sides in
    /// [1000, 25000], modules no thinner than 4, labels from [0, 99].
    pub fn new(module_count: usize, seed: u64) -> GenConfig {
        GenConfig {
            module_count,
            initial_width_range: 1000..=25_000,
            initial_height_range: 1000..=25_000,
            min_side: 4,
            id_pool: 0..=99,
            seed,
        }
    }

    fn validate(&self) -> Result<(), GenError> {
        let invalid = |reason: &str| GenError::InvalidConfig {
            reason: reason.to_owned(),
        };
        if self.module_count == 0 {
            return Err(invalid("module_count must be at least 1"));
        }
        if self.min_side == 0 {
            return Err(invalid("min_side must be at least 1"));
        }
        for (name, range) in [
            ("initial_width_range", &self.initial_width_range),
            ("initial_height_range", &self.initial_height_range),
        ] {
            if range.is_empty() {
                return Err(invalid(&format!("{name} is empty")));
            }
            if *range.start() == 0 || *range.end() > MAX_SIDE {
                return Err(invalid(&format!("{name} must lie within [1, {MAX_SIDE}]")));
            }
        }
        if self.id_pool.is_empty() {
            return Err(invalid("id_pool is empty"));
        }
        let pool_size = *self.id_pool.end() as u64 - *self.id_pool.start() as u64 + 1;
        if pool_size < self.module_count as u64 {
            return Err(invalid("id_pool is smaller than module_count"));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("invalid generator configuration: {reason}")]
    InvalidConfig { reason: String },
    #[error(
        "instance {index}: no slicing into {module_count} modules with min_side {min_side} \
         after {attempts} attempts"
    )]
    Infeasible {
        index: u64,
        module_count: usize,
        min_side: u64,
        attempts: u32,
    },
}

/// One generated problem: a module set plus a tree that wastes no area.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    /// Sorted ascending by id.
    pub modules: Vec<ModuleDef>,
    /// References `modules` by index; evaluates to zero dead space.
    pub optimal_tree: SlicingTree,
    /// Seed this instance regenerates from (per-instance, already derived).
    pub seed: u64,
    pub module_count: usize,
}

/// One fine-tuning sample: instruction, module listing, optimal expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetRecord {
    pub instruction: String,
    pub prompt: String,
    pub completion: String,
}

/// Outcome of one slicing attempt, before ids are assigned. Rectangles are
/// indexed by creation order; each event splits rectangle `target` in two,
/// shrinking it in place and appending the second part as `new`.
struct RawSlicing {
    initial_width: u64,
    initial_height: u64,
    rects: Vec<(u64, u64)>,
    events: Vec<SliceEvent>,
}

#[derive(Clone, Copy)]
struct SliceEvent {
    target: usize,
    kind: CutKind,
    new: usize,
}

/// Runs one seeded slicing attempt. Returns `None` when every remaining
/// rectangle is too small to cut before reaching the target module count.
fn attempt_slicing(seed: u64, cfg: &GenConfig) -> Option<RawSlicing> {
    let mut rng = SplitMix64::new(seed);
    let initial_width = rng.range_inclusive(
        *cfg.initial_width_range.start(),
        *cfg.initial_width_range.end(),
    );
    let initial_height = rng.range_inclusive(
        *cfg.initial_height_range.start(),
        *cfg.initial_height_range.end(),
    );
    if initial_width < cfg.min_side || initial_height < cfg.min_side {
        return None;
    }

    let mut rects = vec![(initial_width, initial_height)];
    let mut events = Vec::with_capacity(cfg.module_count - 1);
    // Rectangles still eligible for slicing, by creation index.
    let mut active: Vec<usize> = vec![0];
    let min = cfg.min_side;
    while rects.len() < cfg.module_count {
        if active.is_empty() {
            return None;
        }
        let slot = rng.next_below(active.len() as u64) as usize;
        let target = active[slot];
        let (w, h) = rects[target];
        // A side shorter than two minimum sides cannot be split across.
        let can_vertical = w >= 2 * min;
        let can_horizontal = h >= 2 * min;
        let kind = match (can_horizontal, can_vertical) {
            (false, false) => {
                active.swap_remove(slot);
                continue;
            }
            (true, false) => CutKind::Horizontal,
            (false, true) => CutKind::Vertical,
            (true, true) => {
                if rng.next_below(2) == 0 {
                    CutKind::Horizontal
                } else {
                    CutKind::Vertical
                }
            }
        };
        let new = rects.len();
        match kind {
            // Vertical cut splits the width; left part keeps the index.
            CutKind::Vertical => {
                let pos = rng.range_inclusive(min, w - min);
                rects[target] = (pos, h);
                rects.push((w - pos, h));
            }
            // Horizontal cut splits the height; bottom part keeps the index.
            CutKind::Horizontal => {
                let pos = rng.range_inclusive(min, h - min);
                rects[target] = (w, pos);
                rects.push((w, h - pos));
            }
        }
        events.push(SliceEvent { target, kind, new });
        active.push(new);
    }
    Some(RawSlicing {
        initial_width,
        initial_height,
        rects,
        events,
    })
}

/// Draws `count` distinct ids uniformly from the pool. Partial Fisher-Yates
/// over a virtual array, so a huge pool costs only `count` map entries.
fn draw_distinct_ids(rng: &mut SplitMix64, pool: &RangeInclusive<u32>, count: usize) -> Vec<u32> {
    let pool_len = *pool.end() as u64 - *pool.start() as u64 + 1;
    let mut swaps: HashMap<u64, u64> = HashMap::new();
    let mut out = Vec::with_capacity(count);
    for i in 0..count as u64 {
        let j = i + rng.next_below(pool_len - i);
        let vi = swaps.get(&i).copied().unwrap_or(i);
        let vj = swaps.get(&j).copied().unwrap_or(j);
        out.push(*pool.start() + vj as u32);
        swaps.insert(j, vi);
    }
    out
}

/// Builds the canonical instance from a successful attempt: labels the
/// cells, sorts modules by id, and replays the slice history into a tree.
fn assemble(raw: RawSlicing, ids: Vec<u32>, seed: u64) -> Instance {
    let n = raw.rects.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&k| ids[k]);
    let modules: Vec<ModuleDef> = order
        .iter()
        .map(|&k| {
            ModuleDef::new(ids[k], raw.rects[k].0, raw.rects[k].1)
                .expect("sliced cells stay within module dimension bounds")
        })
        .collect();
    let mut module_index_of = vec![0usize; n];
    for (position, &creation) in order.iter().enumerate() {
        module_index_of[creation] = position;
    }

    // Replay slices newest-first: each event refines the cell it targeted,
    // so the subtree a cell grows into must be assembled before the earlier
    // cut that created the cell.
    let mut subtree: Vec<Option<SlicingTree>> = (0..n)
        .map(|k| Some(SlicingTree::Leaf(module_index_of[k])))
        .collect();
    for event in raw.events.iter().rev() {
        let right = subtree[event.new]
            .take()
            .expect("each cell is consumed once");
        let left = subtree[event.target]
            .take()
            .expect("each cell is consumed once");
        subtree[event.target] = Some(SlicingTree::cut(event.kind, left, right));
    }
    let optimal_tree = subtree[0]
        .take()
        .expect("slice history roots at the initial rectangle");

    #[cfg(debug_assertions)]
    {
        let eval = crate::geometry::evaluate(&optimal_tree, &modules)
            .expect("replayed tree references every module once");
        debug_assert_eq!(eval.total_dead_space, 0);
        debug_assert_eq!(eval.envelope.width, raw.initial_width);
        debug_assert_eq!(eval.envelope.height, raw.initial_height);
    }

    Instance {
        modules,
        optimal_tree,
        seed,
        module_count: n,
    }
}

fn generate_indexed(cfg: &GenConfig, seed: u64, index: u64) -> Result<Instance, GenError> {
    for attempt in 0..MAX_ATTEMPTS {
        let attempt_seed = derive_seed(seed, attempt as u64);
        if let Some(raw) = attempt_slicing(attempt_seed, cfg) {
            // Ids come from a fresh stream so the slicing shape for a seed
            // does not depend on how many labels get drawn afterwards.
            let mut id_rng = SplitMix64::new(derive_seed(attempt_seed, u64::MAX));
            let ids = draw_distinct_ids(&mut id_rng, &cfg.id_pool, cfg.module_count);
            return Ok(assemble(raw, ids, seed));
        }
    }
    Err(GenError::Infeasible {
        index,
        module_count: cfg.module_count,
        min_side: cfg.min_side,
        attempts: MAX_ATTEMPTS,
    })
}

/// Generates one instance; deterministic in `cfg` (byte-identical reruns).
pub fn generate_instance(cfg: &GenConfig) -> Result<Instance, GenError> {
    cfg.validate()?;
    generate_indexed(cfg, cfg.seed, 0)
}

/// Seed of dataset element `index` under root seed `root`. Exposed so
/// callers can regenerate or shard single elements without the whole run.
pub fn instance_seed(root: u64, index: u64) -> u64 {
    derive_seed(root, index)
}

/// Generates `count` instances from per-index derived seeds. Instances are
/// independent, so generation fans out across threads; results keep index
/// order and errors report the lowest failing index.
pub fn generate_dataset(cfg: &GenConfig, count: u64) -> Result<Vec<Instance>, GenError> {
    cfg.validate()?;
    let results: Vec<Result<Instance, GenError>> = (0..count)
        .into_par_iter()
        .map(|index| generate_indexed(cfg, instance_seed(cfg.seed, index), index))
        .collect();
    results.into_iter().collect()
}

/// Formats an instance as a fine-tuning sample.
pub fn to_record(instance: &Instance, instruction_template: &str) -> DatasetRecord {
    DatasetRecord {
        instruction: instruction_template.to_owned(),
        prompt: modules_to_listing(&instance.modules),
        completion: tree_to_expression(&instance.optimal_tree, &instance.modules),
    }
}

/// Serialization layout for fine-tuning files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JsonlFlavor {
    /// `{"instruction": …, "input": …, "output": …}` per line.
    Generic,
    /// `{"messages": [system, user, assistant]}` per line.
    Chat,
}

#[derive(Serialize)]
struct GenericRow<'a> {
    instruction: &'a str,
    input: &'a str,
    output: &'a str,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRow<'a> {
    messages: [ChatMessage<'a>; 3],
}

/// Writes one record as a single JSONL line.
pub fn write_jsonl_record<W: Write>(
    record: &DatasetRecord,
    flavor: JsonlFlavor,
    out: &mut W,
) -> io::Result<()> {
    match flavor {
        JsonlFlavor::Generic => serde_json::to_writer(
            &mut *out,
            &GenericRow {
                instruction: &record.instruction,
                input: &record.prompt,
                output: &record.completion,
            },
        )?,
        JsonlFlavor::Chat => serde_json::to_writer(
            &mut *out,
            &ChatRow {
                messages: [
                    ChatMessage {
                        role: "system",
                        content: &record.instruction,
                    },
                    ChatMessage {
                        role: "user",
                        content: &record.prompt,
                    },
                    ChatMessage {
                        role: "assistant",
                        content: &record.completion,
                    },
                ],
            },
        )?,
    }
    out.write_all(b"\n")
}

/// Writes records as JSONL and returns how many lines were written.
pub fn emit_jsonl<'a, I, W>(records: I, flavor: JsonlFlavor, out: &mut W) -> io::Result<u64>
where
    I: IntoIterator<Item = &'a DatasetRecord>,
    W: Write,
{
    let mut count = 0;
    for record in records {
        write_jsonl_record(record, flavor, out)?;
        count += 1;
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{expression_to_tree, listing_to_modules};
    use crate::geometry::evaluate;

    #[test]
    fn single_module_is_the_initial_rectangle() {
        let cfg = GenConfig::new(1, 77);
        let instance = generate_instance(&cfg).unwrap();
        assert_eq!(instance.module_count, 1);
        assert_eq!(instance.optimal_tree, SlicingTree::Leaf(0));
        let m = instance.modules[0];
        assert!(cfg.initial_width_range.contains(&m.width));
        assert!(cfg.initial_height_range.contains(&m.height));
    }

    #[test]
    fn sixteen_modules_tile_the_initial_rectangle() {
        let cfg = GenConfig::new(16, 20260816);
        let instance = generate_instance(&cfg).unwrap();
        assert_eq!(instance.modules.len(), 16);
        let eval = evaluate(&instance.optimal_tree, &instance.modules).unwrap();
        assert_eq!(eval.total_dead_space, 0);
        assert_eq!(eval.envelope.area(), eval.module_area_sum);
    }

    #[test]
    fn slicing_partitions_area_exactly() {
        let cfg = GenConfig::new(24, 5);
        for attempt in 0..50u64 {
            let raw = attempt_slicing(derive_seed(11, attempt), &cfg).unwrap();
            let total: u128 = raw.rects.iter().map(|&(w, h)| w as u128 * h as u128).sum();
            assert_eq!(
                total,
                raw.initial_width as u128 * raw.initial_height as u128
            );
            assert_eq!(raw.rects.len(), 24);
            assert!(raw
                .rects
                .iter()
                .all(|&(w, h)| w >= cfg.min_side && h >= cfg.min_side));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GenConfig::new(16, 99);
        assert_eq!(
            generate_instance(&cfg).unwrap(),
            generate_instance(&cfg).unwrap()
        );

        let a = generate_dataset(&cfg, 4).unwrap();
        let b = generate_dataset(&cfg, 4).unwrap();
        assert_eq!(a, b);

        let records: Vec<DatasetRecord> = a
            .iter()
            .map(|i| to_record(i, DEFAULT_INSTRUCTION))
            .collect();
        let mut first = Vec::new();
        let mut second = Vec::new();
        assert_eq!(
            emit_jsonl(&records, JsonlFlavor::Chat, &mut first).unwrap(),
            4
        );
        assert_eq!(
            emit_jsonl(&records, JsonlFlavor::Chat, &mut second).unwrap(),
            4
        );
        assert_eq!(first, second);
    }

    #[test]
    fn dataset_instances_match_their_single_generation() {
        let cfg = GenConfig::new(8, 31337);
        let dataset = generate_dataset(&cfg, 6).unwrap();
        for (index, instance) in dataset.iter().enumerate() {
            let sub = GenConfig {
                seed: instance_seed(cfg.seed, index as u64),
                ..cfg.clone()
            };
            assert_eq!(&generate_instance(&sub).unwrap(), instance);
        }
    }

    #[test]
    fn fuzzed_instances_are_optimal_by_construction() {
        let mut rng = SplitMix64::new(0xDA7A_6E4);
        for _ in 0..1000 {
            let module_count = 1 + rng.next_below(24) as usize;
            let cfg = GenConfig::new(module_count, rng.next_u64());
            let instance = generate_instance(&cfg).unwrap();
            assert_eq!(instance.module_count, module_count);
            assert_eq!(instance.modules.len(), module_count);
            let eval = evaluate(&instance.optimal_tree, &instance.modules).unwrap();
            assert_eq!(eval.total_dead_space, 0);
            assert!(instance
                .modules
                .iter()
                .all(|m| m.width >= cfg.min_side && m.height >= cfg.min_side));
            assert!(instance.modules.windows(2).all(|w| w[0].id < w[1].id));
            assert!(instance.modules.iter().all(|m| cfg.id_pool.contains(&m.id)));
        }
    }

    #[test]
    fn record_round_trips_through_the_codec() {
        let cfg = GenConfig::new(16, 424242);
        let instance = generate_instance(&cfg).unwrap();
        let record = to_record(&instance, DEFAULT_INSTRUCTION);
        let modules = listing_to_modules(&record.prompt).unwrap();
        assert_eq!(modules, instance.modules);
        let tree = expression_to_tree(&record.completion, &modules).unwrap();
        assert_eq!(evaluate(&tree, &modules).unwrap().total_dead_space, 0);
    }

    #[test]
    fn worked_example_record_strings() {
        let modules = vec![
            ModuleDef::new(5, 5412, 522).unwrap(),
            ModuleDef::new(83, 3442, 1961).unwrap(),
            ModuleDef::new(87, 1970, 1961).unwrap(),
        ];
        let optimal_tree = SlicingTree::cut(
            CutKind::Horizontal,
            SlicingTree::cut(
                CutKind::Vertical,
                SlicingTree::Leaf(1),
                SlicingTree::Leaf(2),
            ),
            SlicingTree::Leaf(0),
        );
        let instance = Instance {
            modules,
            optimal_tree,
            seed: 0,
            module_count: 3,
        };
        let record = to_record(&instance, DEFAULT_INSTRUCTION);
        assert_eq!(
            record.prompt,
            "P_5(5412,522);P_83(3442,1961);P_87(1970,1961)"
        );
        assert_eq!(record.completion, "P_83;P_87;V;P_5;H");
        assert!(record.instruction.contains("post-order traversal"));
    }

    #[test]
    fn jsonl_generic_flavor_shape() {
        let record = DatasetRecord {
            instruction: "inst".to_owned(),
            prompt: "P_1(2,3)".to_owned(),
            completion: "P_1".to_owned(),
        };
        let mut buf = Vec::new();
        assert_eq!(
            emit_jsonl([&record], JsonlFlavor::Generic, &mut buf).unwrap(),
            1
        );
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "{\"instruction\":\"inst\",\"input\":\"P_1(2,3)\",\"output\":\"P_1\"}\n"
        );
    }

    #[test]
    fn jsonl_chat_flavor_shape() {
        let record = DatasetRecord {
            instruction: "inst".to_owned(),
            prompt: "P_1(2,3)".to_owned(),
            completion: "P_1".to_owned(),
        };
        let mut buf = Vec::new();
        assert_eq!(
            emit_jsonl([&record], JsonlFlavor::Chat, &mut buf).unwrap(),
            1
        );
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "{\"messages\":[{\"role\":\"system\",\"content\":\"inst\"},\
             {\"role\":\"user\",\"content\":\"P_1(2,3)\"},\
             {\"role\":\"assistant\",\"content\":\"P_1\"}]}\n"
        );
    }

    #[test]
    fn jsonl_empty_input_writes_nothing() {
        let mut buf = Vec::new();
        assert_eq!(emit_jsonl([], JsonlFlavor::Generic, &mut buf).unwrap(), 0);
        assert!(buf.is_empty());
    }

    #[test]
    fn id_drawing_is_a_partial_permutation() {
        let mut rng = SplitMix64::new(7);
        let ids = draw_distinct_ids(&mut rng, &(0..=99), 100);
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 100);
        assert_eq!(sorted, (0..=99).collect::<Vec<_>>());

        let mut rng = SplitMix64::new(8);
        let few = draw_distinct_ids(&mut rng, &(10..=1_000_000), 5);
        assert_eq!(few.len(), 5);
        assert!(few.iter().all(|&id| (10..=1_000_000).contains(&id)));
    }

    #[test]
    fn infeasible_configuration_reports_after_bounded_attempts() {
        let cfg = GenConfig {
            module_count: 2,
            initial_width_range: 4..=4,
            initial_height_range: 4..=4,
            min_side: 4,
            id_pool: 0..=99,
            seed: 3,
        };
        assert_eq!(
            generate_instance(&cfg),
            Err(GenError::Infeasible {
                index: 0,
                module_count: 2,
                min_side: 4,
                attempts: 100
            })
        );
    }

    #[test]
    fn invalid_configurations_rejected() {
        let base = GenConfig::new(4, 1);
        let cases = [
            GenConfig {
                module_count: 0,
                ..base.clone()
            },
            GenConfig {
                min_side: 0,
                ..base.clone()
            },
            GenConfig {
                initial_width_range: 10..=5,
                ..base.clone()
            },
            GenConfig {
                initial_height_range: 0..=5,
                ..base.clone()
            },
            GenConfig {
                initial_width_range: 1..=(MAX_SIDE + 1),
                ..base.clone()
            },
            GenConfig {
                id_pool: 0..=2,
                ..base.clone()
            },
        ];
        for cfg in cases {
            assert!(matches!(
                generate_instance(&cfg),
                Err(GenError::InvalidConfig { .. })
            ));
        }
    }
}
