//! Search over a spec's free distributions for the best scheme rate.
//!
//! The channel is fixed; what a designer controls are the compression
//! kernels and, optionally, the input distributions. [`optimize`] runs a
//! multi-start coordinate ascent over those rows, always keeping the spec a
//! valid probability model: a move scales one entry of one row and
//! renormalizes the row, and is kept only when the score improves. Scores
//! are the scheme's unclamped rate when it produces one and a large
//! negative penalty minus the constraint violation when it is infeasible,
//! so the search can climb out of the infeasible region.
//!
//! [`enumerate_deterministic`] scores every combination of deterministic
//! compression maps instead. Deterministic maps are a strict subset of the
//! continuous search space, so its best is a lower bracket for [`optimize`]
//! and a cheap sanity check on the ascent.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSpec;
use crate::pmf::JointPmf;
use crate::schemes::{
    rate_cbj, rate_cbs, rate_cfj, rate_cfs, rate_ruj, RateValue, SchemeError, SchemeId,
    SchemeReport,
};
use crate::setfuncs::EvalContext;
use crate::subsets::SubsetMask;

/// Base score of any infeasible spec; the violation is subtracted so that
/// shrinking it still reads as progress.
pub const INFEASIBLE_PENALTY: f64 = -1e6;

/// Which rows of the spec the search may change.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FreeVariables {
    /// Compression kernels only.
    Compressions,
    /// Compression kernels plus the source and relay input distributions.
    All,
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub scheme: SchemeId,
    /// Target set for ruj; defaults to the full relay set.
    pub target: Option<SubsetMask>,
    pub free: FreeVariables,
    /// Random restarts beyond the template start.
    pub restarts: usize,
    /// Coordinate-ascent sweeps per start.
    pub sweeps: usize,
    pub seed: u64,
}

impl SearchConfig {
    pub fn new(scheme: SchemeId) -> SearchConfig {
        SearchConfig {
            scheme,
            target: None,
            free: FreeVariables::Compressions,
            restarts: 20,
            sweeps: 40,
            seed: 0,
        }
    }
}

/// Where one ascent start ended up.
#[derive(Clone, Debug, Serialize)]
pub struct RestartTrace {
    /// 0 is the template start; 1.. are random starts.
    pub start: usize,
    pub score: f64,
    pub evaluations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizationResult {
    pub scheme: SchemeId,
    /// The spec with the winning rows written back.
    pub best_spec: ChannelSpec,
    /// Scheme evaluation at the winning spec.
    pub report: SchemeReport,
    /// Internal objective at the winner (unclamped rate, or penalty when
    /// everything the search visited was infeasible).
    pub best_score: f64,
    /// Whether the winner satisfies the scheme's feasibility constraints.
    pub feasible: bool,
    pub trace: Vec<RestartTrace>,
    pub evaluations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnumerationResult {
    pub scheme: SchemeId,
    pub best_spec: ChannelSpec,
    pub report: SchemeReport,
    pub best_score: f64,
    /// Combinations of deterministic maps scored.
    pub maps_tried: usize,
}

#[derive(Copy, Clone, Debug)]
enum RowRef {
    Compression { relay: usize, row: usize },
    SourceInput,
    RelayInput { relay: usize },
}

fn list_rows(spec: &ChannelSpec, free: FreeVariables) -> Vec<RowRef> {
    let mut rows = Vec::new();
    for relay in 0..spec.n {
        for row in 0..spec.compression_cond_card(relay) {
            rows.push(RowRef::Compression { relay, row });
        }
    }
    if free == FreeVariables::All {
        rows.push(RowRef::SourceInput);
        if spec.p_xi.is_some() {
            for relay in 0..spec.n {
                rows.push(RowRef::RelayInput { relay });
            }
        }
    }
    rows
}

fn row_mut(spec: &mut ChannelSpec, row: RowRef) -> &mut [f64] {
    match row {
        RowRef::Compression { relay, row } => {
            let card = spec.alphabet_yhat_i[relay];
            &mut spec.compressions[relay][row * card..(row + 1) * card]
        }
        RowRef::SourceInput => &mut spec.p_x,
        RowRef::RelayInput { relay } => &mut spec.p_xi.as_mut().expect("full mode")[relay],
    }
}

fn normalize(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    assert!(sum > 0.0, "a probability row lost all its mass");
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Evaluates the configured scheme on the spec and maps the report to the
/// search objective.
fn score_spec(
    spec: &ChannelSpec,
    scheme: SchemeId,
    target: SubsetMask,
) -> Result<(f64, SchemeReport), SchemeError> {
    let joint = JointPmf::from_spec(spec).expect("the search keeps specs valid");
    let ctx = EvalContext::for_spec(spec, &joint);
    let report = match scheme {
        SchemeId::Cfs => rate_cfs(&ctx),
        SchemeId::Cfj => rate_cfj(&ctx),
        SchemeId::Ruj => rate_ruj(&ctx, target)?,
        SchemeId::Cbs => rate_cbs(&ctx)?,
        SchemeId::Cbj => rate_cbj(&ctx)?,
    };
    let score = match report.rate {
        RateValue::Bits(rate) => report.diagnostics.unclamped_rate.unwrap_or(rate),
        RateValue::Infeasible => {
            let violation = report.diagnostics.lp_violation.unwrap_or_else(|| {
                report
                    .diagnostics
                    .violations
                    .as_ref()
                    .map(|v| v.iter().map(|e| (-e.value).max(0.0)).sum())
                    .unwrap_or(0.0)
            });
            INFEASIBLE_PENALTY - violation
        }
    };
    Ok((score, report))
}

fn randomize_rows(spec: &mut ChannelSpec, free: FreeVariables, rng: &mut ChaCha8Rng) {
    let dist = Uniform::new(0.05f64, 1.0);
    for row_ref in list_rows(spec, free) {
        let row = row_mut(spec, row_ref);
        for v in row.iter_mut() {
            *v = dist.sample(rng);
        }
        normalize(row);
    }
}

/// Multi-start coordinate ascent. Start 0 is the template itself, so the
/// result never scores below it; starts 1..=restarts draw all free rows
/// afresh from a seed-and-stream generator, making the whole search a pure
/// function of the template and the config.
pub fn optimize(
    template: &ChannelSpec,
    cfg: &SearchConfig,
) -> Result<OptimizationResult, SchemeError> {
    if !cfg.scheme.supports(template.mode) {
        return Err(SchemeError::ModeMismatch { scheme: cfg.scheme });
    }
    let target = cfg.target.unwrap_or_else(|| SubsetMask::full(template.n));
    let mut evaluations = 0usize;
    let mut best: Option<(f64, ChannelSpec, SchemeReport)> = None;
    let mut trace = Vec::with_capacity(cfg.restarts + 1);

    for start in 0..=cfg.restarts {
        let evaluations_before = evaluations;
        let mut spec = template.clone();
        if start > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(start as u64);
            randomize_rows(&mut spec, cfg.free, &mut rng);
        }
        let (mut current, mut current_report) = score_spec(&spec, cfg.scheme, target)?;
        evaluations += 1;

        let rows = list_rows(&spec, cfg.free);
        for sweep in 0..cfg.sweeps {
            let factor = 1.0 + 2.0 * 0.88f64.powi(sweep as i32);
            let mut improved = false;
            for &row_ref in &rows {
                let width = row_mut(&mut spec, row_ref).len();
                if width < 2 {
                    continue;
                }
                for k in 0..width {
                    let saved = row_mut(&mut spec, row_ref).to_vec();
                    let p = saved[k];
                    let mut candidates = [p * factor, p / factor];
                    if p < 1e-12 {
                        candidates[1] = 0.15;
                    }
                    let mut winner: Option<Vec<f64>> = None;
                    for &w in &candidates {
                        let row = row_mut(&mut spec, row_ref);
                        row.copy_from_slice(&saved);
                        row[k] = w;
                        normalize(row);
                        let (trial, trial_report) = score_spec(&spec, cfg.scheme, target)?;
                        evaluations += 1;
                        if trial > current + 1e-12 {
                            current = trial;
                            current_report = trial_report;
                            winner = Some(row_mut(&mut spec, row_ref).to_vec());
                            improved = true;
                        }
                    }
                    let row = row_mut(&mut spec, row_ref);
                    match winner {
                        Some(best_row) => row.copy_from_slice(&best_row),
                        None => row.copy_from_slice(&saved),
                    }
                }
            }
            if !improved && factor < 1.02 {
                break;
            }
        }

        trace.push(RestartTrace {
            start,
            score: current,
            evaluations: evaluations - evaluations_before,
        });
        let replace = match &best {
            None => true,
            Some((score, _, _)) => current > *score + 1e-12,
        };
        if replace {
            best = Some((current, spec, current_report));
        }
    }

    let (best_score, best_spec, report) = best.expect("at least the template start ran");
    Ok(OptimizationResult {
        scheme: cfg.scheme,
        best_spec,
        feasible: !matches!(report.rate, RateValue::Infeasible),
        report,
        best_score,
        trace,
        evaluations,
    })
}

/// Scores every combination of deterministic compression maps (input
/// distributions stay at the template). The count of combinations is the
/// product over relays of `|alphabet_yhat_i| ^ conditioning_cardinality`
/// and must not exceed 200k.
pub fn enumerate_deterministic(
    template: &ChannelSpec,
    scheme: SchemeId,
    target: Option<SubsetMask>,
) -> Result<EnumerationResult, SchemeError> {
    if !scheme.supports(template.mode) {
        return Err(SchemeError::ModeMismatch { scheme });
    }
    let target = target.unwrap_or_else(|| SubsetMask::full(template.n));

    let rows_per_relay: Vec<usize> =
        (0..template.n).map(|i| template.compression_cond_card(i)).collect();
    let maps_per_relay: Vec<usize> = (0..template.n)
        .map(|i| template.alphabet_yhat_i[i].pow(rows_per_relay[i] as u32))
        .collect();
    let total: usize = maps_per_relay.iter().product();
    assert!(
        total <= 200_000,
        "deterministic enumeration would score {total} map combinations"
    );

    let mut best: Option<(f64, ChannelSpec, SchemeReport)> = None;
    for combo in 0..total {
        let mut spec = template.clone();
        let mut rest = combo;
        for relay in 0..spec.n {
            let mut map_index = rest % maps_per_relay[relay];
            rest /= maps_per_relay[relay];
            let card = spec.alphabet_yhat_i[relay];
            for row in 0..rows_per_relay[relay] {
                let symbol = map_index % card;
                map_index /= card;
                let slice = &mut spec.compressions[relay][row * card..(row + 1) * card];
                for (k, v) in slice.iter_mut().enumerate() {
                    *v = if k == symbol { 1.0 } else { 0.0 };
                }
            }
        }
        let (score, report) = score_spec(&spec, scheme, target)?;
        let replace = match &best {
            None => true,
            Some((s, _, _)) => score > *s + 1e-12,
        };
        if replace {
            best = Some((score, spec, report));
        }
    }

    let (best_score, best_spec, report) = best.expect("at least one map combination");
    Ok(EnumerationResult {
        scheme,
        best_spec,
        report,
        best_score,
        maps_tried: total,
    })
}

/// Passes each targeted relay's compression output through an erasure
/// stage: with probability `p` the symbol survives, otherwise a fresh
/// erasure symbol (appended to that relay's alphabet) comes out. `p = 1`
/// keeps the original behavior, `p = 0` erases everything.
pub fn apply_erasure(template: &ChannelSpec, relays: SubsetMask, p: f64) -> ChannelSpec {
    assert!((0.0..=1.0).contains(&p), "erasure survival must lie in [0, 1]");
    assert!(
        relays.is_subset_of(SubsetMask::full(template.n)),
        "erasure targets {relays} exceed the relay set"
    );
    let mut spec = template.clone();
    for i in relays.indices() {
        let slot = i - 1;
        let card = spec.alphabet_yhat_i[slot];
        let mut rows = Vec::with_capacity(spec.compressions[slot].len() / card * (card + 1));
        for chunk in spec.compressions[slot].chunks(card) {
            rows.extend(chunk.iter().map(|v| v * p));
            rows.push(1.0 - p);
        }
        spec.compressions[slot] = rows;
        spec.alphabet_yhat_i[slot] = card + 1;
    }
    spec
}
