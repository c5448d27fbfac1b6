//! Evaluation harness: queries an endpoint for k completions per test
//! instance, scores each trial by best-of-k minimum dead-space ratio, and
//! aggregates per-module-count success rate, optimal rate, and mean dead
//! space — all in exact rational arithmetic, with JSON/CSV export and a raw
//! output log that doubles as a replay source.

use std::io::{self, Write};
use std::time::Duration;

use num::rational::Ratio;
use num::{BigInt, BigRational, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use crate::datagen::DEFAULT_INSTRUCTION;
use crate::encoding::{expression_to_tree, modules_to_listing, ParseError};
use crate::geometry::{evaluate, EvalResult, ModuleDef};
use crate::llm::{CompletionRequest, Endpoint};

/// How one trial scored under best-of-k selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// No output parsed into a legal slicing tree.
    Illegal,
    /// At least one legal output, but the best still wastes area.
    LegalSuboptimal,
    /// The best legal output has zero dead space.
    Optimal,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Classification::Illegal => "illegal",
            Classification::LegalSuboptimal => "legal_suboptimal",
            Classification::Optimal => "optimal",
        }
    }
}

/// How raw completion text is prepared before parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractionMode {
    /// Scan for the longest token run matching the expression grammar,
    /// discarding surrounding chatter. The default.
    Lenient,
    /// Parse the raw text unchanged; any chatter makes the output illegal.
    Strict,
}

/// One scored test case: the k raw outputs, per-output legality, and the
/// best evaluation among the legal ones.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub case_index: usize,
    pub module_count: usize,
    pub raw_outputs: Vec<String>,
    /// One entry per output, in order: `Ok(())` for legal, the parse error
    /// otherwise.
    pub parse_results: Vec<Result<(), ParseError>>,
    /// Evaluation of the minimum-dead-space legal output; `None` when every
    /// output is illegal. Ties keep the earliest output.
    pub best_eval: Option<EvalResult>,
    pub classification: Classification,
}

/// Returns the longest contiguous run of grammar tokens (`P_<id>`, `H`,
/// `V`) separated by semicolons, or `""` when the text contains none.
/// Longest means most tokens; ties keep the earliest run. Separator
/// whitespace is kept as written so legal runs parse byte-identically.
pub fn extract_expression(raw: &str) -> &str {
    let bytes = raw.as_bytes();
    let mut best: Option<(usize, usize, usize)> = None; // (tokens, start, end)
    let mut i = 0;
    while i < bytes.len() {
        if let Some(first_end) = token_at(bytes, i) {
            let start = i;
            let mut end = first_end;
            let mut tokens = 1;
            loop {
                let mut j = end;
                while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                    j += 1;
                }
                if j < bytes.len() && bytes[j] == b';' {
                    j += 1;
                    while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                        j += 1;
                    }
                    if let Some(next_end) = token_at(bytes, j) {
                        end = next_end;
                        tokens += 1;
                        continue;
                    }
                }
                break;
            }
            if best.map_or(true, |(t, _, _)| tokens > t) {
                best = Some((tokens, start, end));
            }
            i = end;
        } else {
            i += 1;
        }
    }
    match best {
        Some((_, start, end)) => &raw[start..end],
        None => "",
    }
}

/// Matches one grammar token starting at byte `i`, returning its end.
/// Both edges must sit on word boundaries so `The` contributes no `H` and
/// `P_12x` contributes nothing.
fn token_at(bytes: &[u8], i: usize) -> Option<usize> {
    if i > 0 {
        let prev = bytes[i - 1];
        if prev.is_ascii_alphanumeric() || prev == b'_' {
            return None;
        }
    }
    let end = match *bytes.get(i)? {
        b'H' | b'h' | b'V' | b'v' => i + 1,
        b'P' | b'p' => {
            if bytes.get(i + 1) != Some(&b'_') {
                return None;
            }
            let mut j = i + 2;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            if j == i + 2 || (bytes[i + 2] == b'0' && j > i + 3) {
                return None;
            }
            j
        }
        _ => return None,
    };
    match bytes.get(end) {
        Some(&next) if next.is_ascii_alphanumeric() || next == b'_' => None,
        _ => Some(end),
    }
}

/// The winning output of a best-of-k trial, with its parsed tree.
#[derive(Debug, Clone, PartialEq)]
pub struct BestOutput {
    /// Index into the raw outputs of the winner.
    pub output_index: usize,
    pub tree: crate::geometry::SlicingTree,
    pub eval: EvalResult,
}

/// Finds the legal output with the minimum dead-space ratio, first
/// occurrence winning ties — the selection rule behind `score_trial`,
/// exposed for callers that need the winning tree itself.
pub fn best_legal(
    modules: &[ModuleDef],
    raw_outputs: &[String],
    mode: ExtractionMode,
) -> Option<BestOutput> {
    let mut best: Option<BestOutput> = None;
    for (output_index, raw) in raw_outputs.iter().enumerate() {
        let candidate = match mode {
            ExtractionMode::Lenient => extract_expression(raw),
            ExtractionMode::Strict => raw.as_str(),
        };
        if let Ok(tree) = expression_to_tree(candidate, modules) {
            let eval =
                evaluate(&tree, modules).expect("a tree parsed against these modules evaluates");
            let improves = best
                .as_ref()
                .map_or(true, |b| eval.dead_space_ratio < b.eval.dead_space_ratio);
            if improves {
                best = Some(BestOutput {
                    output_index,
                    tree,
                    eval,
                });
            }
        }
    }
    best
}

/// Scores one trial: parses each output (after extraction), evaluates the
/// legal ones, and keeps the minimum dead-space ratio, first occurrence
/// winning ties. Every failure folds into legality; nothing here errors.
pub fn score_trial(
    case_index: usize,
    modules: &[ModuleDef],
    raw_outputs: &[String],
    mode: ExtractionMode,
) -> TrialOutcome {
    let mut parse_results = Vec::with_capacity(raw_outputs.len());
    let mut best_eval: Option<EvalResult> = None;
    for raw in raw_outputs {
        let candidate = match mode {
            ExtractionMode::Lenient => extract_expression(raw),
            ExtractionMode::Strict => raw.as_str(),
        };
        match expression_to_tree(candidate, modules) {
            Ok(tree) => {
                let eval = evaluate(&tree, modules)
                    .expect("a tree parsed against these modules evaluates");
                let improves = best_eval
                    .as_ref()
                    .map_or(true, |b| eval.dead_space_ratio < b.dead_space_ratio);
                if improves {
                    best_eval = Some(eval);
                }
                parse_results.push(Ok(()));
            }
            Err(error) => parse_results.push(Err(error)),
        }
    }
    let classification = match &best_eval {
        None => Classification::Illegal,
        Some(eval) if eval.is_optimal() => Classification::Optimal,
        Some(_) => Classification::LegalSuboptimal,
    };
    TrialOutcome {
        case_index,
        module_count: modules.len(),
        raw_outputs: raw_outputs.to_vec(),
        parse_results,
        best_eval,
        classification,
    }
}

/// Test instances sharing one module count.
#[derive(Debug, Clone)]
pub struct SweepGroup {
    pub module_count: usize,
    /// One module set per test case; case index = position.
    pub instances: Vec<Vec<ModuleDef>>,
}

/// Sweep-wide knobs. `seed` is report metadata tying the run to the
/// instance generator; sampling randomness lives server-side.
#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub model: String,
    pub seed: u64,
    /// Completions requested per case.
    pub k: u32,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout: Duration,
    /// System prompt sent with every case.
    pub instruction: String,
    pub extraction: ExtractionMode,
}

impl SweepOptions {
    pub fn new(model: impl Into<String>, seed: u64) -> SweepOptions {
        SweepOptions {
            model: model.into(),
            seed,
            k: 5,
            temperature: 1.0,
            max_tokens: 512,
            timeout: Duration::from_secs(60),
            instruction: DEFAULT_INSTRUCTION.to_owned(),
            extraction: ExtractionMode::Lenient,
        }
    }
}

/// Aggregates for one module count. Rates are exact; the case matrix keeps
/// one best dead-space ratio per case, absent where the trial was illegal.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport {
    pub module_count: usize,
    pub sample_count: usize,
    pub legal: usize,
    pub optimal: usize,
    pub case_best: Vec<Option<Ratio<u128>>>,
}

impl GroupReport {
    /// Percent of cases with at least one legal output, exact.
    pub fn success_rate(&self) -> Ratio<u64> {
        percent(self.legal, self.sample_count)
    }

    /// Percent of cases whose best legal output wastes no area, exact.
    pub fn optimal_rate(&self) -> Ratio<u64> {
        percent(self.optimal, self.sample_count)
    }

    /// Mean best dead-space ratio over legal cases only; `None` when no
    /// case was legal.
    pub fn mean_dead_space(&self) -> Option<BigRational> {
        let legal: Vec<&Ratio<u128>> = self.case_best.iter().flatten().collect();
        if legal.is_empty() {
            return None;
        }
        let sum = legal
            .iter()
            .map(|r| BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom())))
            .sum::<BigRational>();
        Some(sum / BigRational::from_integer(BigInt::from(legal.len())))
    }
}

fn percent(part: usize, whole: usize) -> Ratio<u64> {
    if whole == 0 {
        Ratio::from_integer(0)
    } else {
        Ratio::new(part as u64 * 100, whole as u64)
    }
}

/// One full sweep: per-count aggregates in ascending module-count order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub seed: u64,
    pub k: u32,
    pub groups: Vec<GroupReport>,
}

/// One line of the raw output log. The log is written in deterministic
/// (module_count, case_index) order before any scoring happens, and its
/// `prompt`/`outputs` fields make it loadable as a replay source.
#[derive(Serialize)]
struct RawLogLine<'a> {
    module_count: usize,
    case_index: usize,
    prompt: &'a str,
    outputs: &'a [String],
    /// Endpoint failure for this case, if any. Such cases score as illegal;
    /// the flag only distinguishes transport loss from model illegality.
    transport_error: Option<String>,
}

/// Runs every case in `groups` against `endpoint` and aggregates exactly.
///
/// Cases are fetched concurrently but logged and scored in deterministic
/// (module_count, case_index) order. Endpoint failures never abort the
/// sweep: the case is logged with `transport_error` set, scores as illegal,
/// and the run continues. Only `raw_log` I/O failures surface as errors.
pub fn run_sweep<E: Endpoint + ?Sized>(
    groups: &[SweepGroup],
    endpoint: &E,
    options: &SweepOptions,
    mut raw_log: Option<&mut dyn Write>,
) -> io::Result<SweepReport> {
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by_key(|&g| groups[g].module_count);

    struct Task {
        module_count: usize,
        case_index: usize,
        prompt: String,
    }
    let tasks: Vec<Task> = order
        .iter()
        .flat_map(|&g| {
            let group = &groups[g];
            group
                .instances
                .iter()
                .enumerate()
                .map(move |(case_index, modules)| {
                    debug_assert_eq!(modules.len(), group.module_count);
                    Task {
                        module_count: group.module_count,
                        case_index,
                        prompt: modules_to_listing(modules),
                    }
                })
        })
        .collect();

    let batches: Vec<Result<Vec<String>, String>> = tasks
        .par_iter()
        .map(|task| {
            let request = CompletionRequest {
                model: options.model.clone(),
                system: options.instruction.clone(),
                user: task.prompt.clone(),
                k: options.k,
                temperature: options.temperature,
                max_tokens: options.max_tokens,
                timeout: options.timeout,
            };
            endpoint
                .complete(&request)
                .map(|batch| batch.raw_texts)
                .map_err(|error| error.to_string())
        })
        .collect();

    static NO_OUTPUTS: &[String] = &[];
    if let Some(log) = raw_log.as_deref_mut() {
        for (task, batch) in tasks.iter().zip(&batches) {
            let (outputs, transport_error): (&[String], Option<String>) = match batch {
                Ok(texts) => (texts, None),
                Err(detail) => (NO_OUTPUTS, Some(detail.clone())),
            };
            let line = RawLogLine {
                module_count: task.module_count,
                case_index: task.case_index,
                prompt: &task.prompt,
                outputs,
                transport_error,
            };
            serde_json::to_writer(&mut *log, &line)?;
            log.write_all(b"\n")?;
        }
        log.flush()?;
    }

    let mut reports: Vec<GroupReport> = Vec::with_capacity(order.len());
    let mut cursor = 0;
    for &g in &order {
        let group = &groups[g];
        let mut report = GroupReport {
            module_count: group.module_count,
            sample_count: group.instances.len(),
            legal: 0,
            optimal: 0,
            case_best: Vec::with_capacity(group.instances.len()),
        };
        for (case_index, modules) in group.instances.iter().enumerate() {
            let outputs = match &batches[cursor] {
                Ok(texts) => texts.as_slice(),
                Err(_) => NO_OUTPUTS,
            };
            cursor += 1;
            let outcome = score_trial(case_index, modules, outputs, options.extraction);
            match outcome.classification {
                Classification::Illegal => {}
                Classification::LegalSuboptimal => report.legal += 1,
                Classification::Optimal => {
                    report.legal += 1;
                    report.optimal += 1;
                }
            }
            report
                .case_best
                .push(outcome.best_eval.map(|e| e.dead_space_ratio));
        }
        reports.push(report);
    }
    Ok(SweepReport {
        seed: options.seed,
        k: options.k,
        groups: reports,
    })
}

/// Export encodings for a sweep report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Full structured report; rationals appear both exact (reduced
    /// strings) and as decimal approximations.
    Json,
    /// Per-case matrix: `module_count,case_index,best_dead_space_ratio`,
    /// with an empty cell — never 0 — where the case was illegal.
    Csv,
}

#[derive(Serialize)]
struct GroupDoc {
    module_count: usize,
    sample_count: usize,
    legal: usize,
    optimal: usize,
    success_rate: String,
    success_rate_percent: f64,
    optimal_rate: String,
    optimal_rate_percent: f64,
    mean_dead_space: Option<String>,
    mean_dead_space_approx: Option<f64>,
    case_best: Vec<Option<String>>,
}

#[derive(Serialize)]
struct ReportDoc {
    seed: u64,
    k: u32,
    groups: Vec<GroupDoc>,
}

struct CountingWriter<'a> {
    inner: &'a mut dyn Write,
    written: u64,
}

impl Write for CountingWriter<'_> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.written += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Writes the report to `sink` in the chosen format and returns the byte
/// count. Output bytes are a pure function of the report.
pub fn export_report(
    report: &SweepReport,
    format: ReportFormat,
    sink: &mut dyn Write,
) -> io::Result<u64> {
    let mut counter = CountingWriter {
        inner: sink,
        written: 0,
    };
    match format {
        ReportFormat::Json => {
            let doc = ReportDoc {
                seed: report.seed,
                k: report.k,
                groups: report
                    .groups
                    .iter()
                    .map(|g| {
                        let mean = g.mean_dead_space();
                        GroupDoc {
                            module_count: g.module_count,
                            sample_count: g.sample_count,
                            legal: g.legal,
                            optimal: g.optimal,
                            success_rate: g.success_rate().to_string(),
                            success_rate_percent: ratio_to_f64(&g.success_rate()),
                            optimal_rate: g.optimal_rate().to_string(),
                            optimal_rate_percent: ratio_to_f64(&g.optimal_rate()),
                            mean_dead_space: mean.as_ref().map(BigRational::to_string),
                            mean_dead_space_approx: mean.as_ref().and_then(BigRational::to_f64),
                            case_best: g
                                .case_best
                                .iter()
                                .map(|b| b.as_ref().map(Ratio::to_string))
                                .collect(),
                        }
                    })
                    .collect(),
            };
            serde_json::to_writer_pretty(&mut counter, &doc)?;
            counter.write_all(b"\n")?;
        }
        ReportFormat::Csv => {
            counter.write_all(b"module_count,case_index,best_dead_space_ratio\n")?;
            for group in &report.groups {
                for (case_index, best) in group.case_best.iter().enumerate() {
                    match best {
                        Some(ratio) => writeln!(
                            counter,
                            "{},{},{}",
                            group.module_count,
                            case_index,
                            ratio.to_f64().expect("dead-space ratio fits f64")
                        )?,
                        None => writeln!(counter, "{},{},", group.module_count, case_index)?,
                    }
                }
            }
        }
    }
    counter.flush()?;
    Ok(counter.written)
}

fn ratio_to_f64(ratio: &Ratio<u64>) -> f64 {
    *ratio.numer() as f64 / *ratio.denom() as f64
}
