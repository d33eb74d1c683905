//! Achievable rates of the five compress-and-forward decoding schemes.
//!
//! Forward schemes recover compression indices from the relay bin rates
//! before (cfs) or jointly with (cfj) the message; in full mode the bin
//! rates are free variables inside a small linear program, in digital mode
//! they are the link capacities. Backward and joint schemes (cbs, ruj, cbj)
//! exist only in full mode: cbs decodes compressions behind the message
//! sequentially, ruj decodes the message together with a chosen subset's
//! compressions, and cbj is ruj pointed at the strictly decodable set.
//!
//! Every function fills a [`SchemeReport`]: the rate (clamped at zero with a
//! flag when the underlying minimum is negative), the subsets achieving the
//! minimum, witnesses, and per-subset diagnostic tables.

use serde::{Deserialize, Serialize};

use crate::channel::Mode;
use crate::decodable::{classify_relays, DecodabilityReport, DecodableError, SubsetValue};
use crate::lp::{LinearProgram, LpOutcome, Sense};
use crate::setfuncs::EvalContext;
use crate::subsets::SubsetMask;
use crate::tol;

#[derive(Copy, Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeId {
    Cfs,
    Cfj,
    Ruj,
    Cbs,
    Cbj,
}

impl SchemeId {
    pub const ALL: [SchemeId; 5] =
        [SchemeId::Cfs, SchemeId::Cfj, SchemeId::Ruj, SchemeId::Cbs, SchemeId::Cbj];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Cfs => "cfs",
            SchemeId::Cfj => "cfj",
            SchemeId::Ruj => "ruj",
            SchemeId::Cbs => "cbs",
            SchemeId::Cbj => "cbj",
        }
    }

    /// Whether the scheme is defined for the given mode.
    pub fn supports(self, mode: Mode) -> bool {
        match self {
            SchemeId::Cfs | SchemeId::Cfj => true,
            SchemeId::Ruj | SchemeId::Cbs | SchemeId::Cbj => mode == Mode::Full,
        }
    }
}

impl std::fmt::Display for SchemeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SchemeId {
    type Err = String;

    fn from_str(text: &str) -> Result<SchemeId, String> {
        match text {
            "cfs" => Ok(SchemeId::Cfs),
            "cfj" => Ok(SchemeId::Cfj),
            "ruj" => Ok(SchemeId::Ruj),
            "cbs" => Ok(SchemeId::Cbs),
            "cbj" => Ok(SchemeId::Cbj),
            other => Err(format!("unknown scheme '{other}', expected cfs|cfj|ruj|cbs|cbj")),
        }
    }
}

/// A rate in bits, or infeasibility.
#[derive(Copy, Clone, PartialEq, Debug)]
pub enum RateValue {
    Bits(f64),
    Infeasible,
}

impl RateValue {
    pub fn bits(self) -> Option<f64> {
        match self {
            RateValue::Bits(v) => Some(v),
            RateValue::Infeasible => None,
        }
    }
}

impl Serialize for RateValue {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            RateValue::Bits(v) => serializer.serialize_f64(*v),
            RateValue::Infeasible => serializer.serialize_str("infeasible"),
        }
    }
}

impl<'de> Deserialize<'de> for RateValue {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(v) => Ok(RateValue::Bits(v)),
            Repr::Text(s) if s == "infeasible" => Ok(RateValue::Infeasible),
            Repr::Text(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"infeasible\", got \"{s}\""
            ))),
        }
    }
}

/// Everything a scheme evaluation reports.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchemeReport {
    pub scheme: SchemeId,
    pub mode: Mode,
    pub rate: RateValue,
    /// Subsets achieving the reported minimum, as sorted index lists.
    pub argmin_subsets: Vec<SubsetMask>,
    /// Bin rates certifying feasibility (link capacities in digital mode,
    /// the solver's witness in full mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_rates: Option<Vec<f64>>,
    /// Strictly decodable set, when the scheme computes one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_j: Option<SubsetMask>,
    /// Nonstrictly decodable set, when the scheme computes one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_j_prime: Option<SubsetMask>,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// The minimum before clamping to zero, for schemes that take one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unclamped_rate: Option<f64>,
    /// True when the reported rate was clamped up to zero.
    pub clamped: bool,
    /// The per-subset values the rate is the minimum of (scheme-dependent:
    /// per-subset caps for cfj, joint-decode rates for ruj/cbj, decode
    /// balances for cbs, compression costs for cfs).
    pub subset_table: Vec<SubsetValue>,
    /// Multiple-access bounds on the bin rates (full mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mac_table: Option<Vec<SubsetValue>>,
    /// Subsets certifying infeasibility, with their violating values.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violations: Option<Vec<SubsetValue>>,
    /// Smallest total constraint violation found by the solver when the
    /// bin-rate polytope is empty.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lp_violation: Option<f64>,
    /// The target set, for schemes evaluated against one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_set: Option<SubsetMask>,
    /// Full decodability analysis (cbj).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decodability: Option<DecodabilityReport>,
}

#[derive(Debug, thiserror::Error)]
pub enum SchemeError {
    #[error("scheme {scheme} needs full mode (relay inputs); the spec is digital")]
    ModeMismatch { scheme: SchemeId },
    #[error(transparent)]
    Decodable(#[from] DecodableError),
}

fn cost_table(ctx: &EvalContext) -> Vec<SubsetValue> {
    ctx.full_set()
        .subsets()
        .map(|s| SubsetValue { subset: s, value: ctx.compression_cost(s) })
        .collect()
}

fn mac_table(ctx: &EvalContext) -> Vec<SubsetValue> {
    ctx.full_set()
        .subsets()
        .filter(|s| !s.is_empty())
        .map(|s| SubsetValue { subset: s, value: ctx.mac_bound(s) })
        .collect()
}

/// Minimum of a table and the subsets attaining it within the identity
/// tolerance.
fn table_min(table: &[SubsetValue]) -> (f64, Vec<SubsetMask>) {
    let min = table
        .iter()
        .map(|e| e.value)
        .fold(f64::INFINITY, f64::min);
    let argmin = table
        .iter()
        .filter(|e| e.value <= min + tol::IDENTITY)
        .map(|e| e.subset)
        .collect();
    (min, argmin)
}

fn clamp_rate(unclamped: f64) -> (RateValue, bool) {
    if unclamped < 0.0 {
        (RateValue::Bits(0.0), true)
    } else {
        (RateValue::Bits(unclamped), false)
    }
}

/// Sequential forward decoding: compressions first, message last. Feasible
/// when the bin rates can cover every subset's compression cost inside the
/// multiple-access region; the rate is then the all-compressions rate.
pub fn rate_cfs(ctx: &EvalContext) -> SchemeReport {
    match ctx.mode() {
        Mode::Digital => {
            let costs = cost_table(ctx);
            let violations: Vec<SubsetValue> = costs
                .iter()
                .filter(|e| ctx.rate_sum(e.subset) - e.value < -tol::MARGIN)
                .map(|e| SubsetValue {
                    subset: e.subset,
                    value: ctx.rate_sum(e.subset) - e.value,
                })
                .collect();
            let feasible = violations.is_empty();
            SchemeReport {
                scheme: SchemeId::Cfs,
                mode: Mode::Digital,
                rate: if feasible {
                    RateValue::Bits(ctx.all_compressions_rate())
                } else {
                    RateValue::Infeasible
                },
                argmin_subsets: Vec::new(),
                witness_rates: ctx.rates().map(|r| r.to_vec()),
                d_j: None,
                d_j_prime: None,
                diagnostics: Diagnostics {
                    subset_table: costs,
                    violations: (!feasible).then_some(violations),
                    ..Diagnostics::default()
                },
            }
        }
        Mode::Full => {
            let n = ctx.num_relays();
            let costs = cost_table(ctx);
            let macs = mac_table(ctx);
            let mut lp = LinearProgram::new(n);
            for entry in &macs {
                let mut row = vec![0.0; n];
                for i in entry.subset.indices() {
                    row[i - 1] = 1.0;
                }
                lp.push(row, Sense::Le, entry.value);
            }
            for entry in &costs {
                if entry.subset.is_empty() {
                    continue;
                }
                let mut row = vec![0.0; n];
                for i in entry.subset.indices() {
                    row[i - 1] = 1.0;
                }
                lp.push(row, Sense::Ge, entry.value);
            }
            let (rate, witness, lp_violation) = match crate::lp::solve(&lp) {
                LpOutcome::Optimal { solution, .. } => (
                    RateValue::Bits(ctx.all_compressions_rate()),
                    Some(solution),
                    None,
                ),
                LpOutcome::Infeasible { violation } => {
                    (RateValue::Infeasible, None, Some(violation))
                }
                LpOutcome::Unbounded => unreachable!("feasibility program has no objective"),
            };
            SchemeReport {
                scheme: SchemeId::Cfs,
                mode: Mode::Full,
                rate,
                argmin_subsets: Vec::new(),
                witness_rates: witness,
                d_j: None,
                d_j_prime: None,
                diagnostics: Diagnostics {
                    subset_table: costs,
                    mac_table: Some(macs),
                    lp_violation,
                    ..Diagnostics::default()
                },
            }
        }
    }
}

/// Forward decoding of the message jointly with the compression indices:
/// the largest `t` such that every subset's cap, the all-compressions
/// rate minus `cost(S)` plus `R(S)`, stays above it, with the bin rates
/// free inside the multiple-access region (fixed to the link capacities
/// in digital mode).
pub fn rate_cfj(ctx: &EvalContext) -> SchemeReport {
    let base = ctx.all_compressions_rate();
    match ctx.mode() {
        Mode::Digital => {
            let caps: Vec<SubsetValue> = ctx
                .full_set()
                .subsets()
                .map(|s| SubsetValue { subset: s, value: base + ctx.eval_i_n(s) })
                .collect();
            let (unclamped, argmin) = table_min(&caps);
            let (rate, clamped) = clamp_rate(unclamped);
            SchemeReport {
                scheme: SchemeId::Cfj,
                mode: Mode::Digital,
                rate,
                argmin_subsets: argmin,
                witness_rates: ctx.rates().map(|r| r.to_vec()),
                d_j: None,
                d_j_prime: None,
                diagnostics: Diagnostics {
                    unclamped_rate: Some(unclamped),
                    clamped,
                    subset_table: caps,
                    ..Diagnostics::default()
                },
            }
        }
        Mode::Full => {
            let n = ctx.num_relays();
            let costs = cost_table(ctx);
            let macs = mac_table(ctx);
            // Variable 0 is t (free), variables 1..=n are the bin rates.
            let mut lp = LinearProgram::new(n + 1);
            lp.objective[0] = 1.0;
            lp.free[0] = true;
            for entry in &costs {
                let mut row = vec![0.0; n + 1];
                row[0] = 1.0;
                for i in entry.subset.indices() {
                    row[i] = -1.0;
                }
                lp.push(row, Sense::Le, base - entry.value);
            }
            for entry in &macs {
                let mut row = vec![0.0; n + 1];
                for i in entry.subset.indices() {
                    row[i] = 1.0;
                }
                lp.push(row, Sense::Le, entry.value);
            }
            let (unclamped, witness) = match crate::lp::solve(&lp) {
                LpOutcome::Optimal { objective, solution } => {
                    (objective, solution[1..].to_vec())
                }
                other => unreachable!("the joint-decode program is always solvable, got {other:?}"),
            };
            let subset_table: Vec<SubsetValue> = costs
                .iter()
                .map(|e| SubsetValue {
                    subset: e.subset,
                    value: base - e.value
                        + e.subset.indices().iter().map(|&i| witness[i - 1]).sum::<f64>(),
                })
                .collect();
            let argmin = subset_table
                .iter()
                .filter(|e| e.value <= unclamped + tol::IDENTITY)
                .map(|e| e.subset)
                .collect();
            let (rate, clamped) = clamp_rate(unclamped);
            SchemeReport {
                scheme: SchemeId::Cfj,
                mode: Mode::Full,
                rate,
                argmin_subsets: argmin,
                witness_rates: Some(witness),
                d_j: None,
                d_j_prime: None,
                diagnostics: Diagnostics {
                    unclamped_rate: Some(unclamped),
                    clamped,
                    subset_table,
                    mac_table: Some(macs),
                    ..Diagnostics::default()
                },
            }
        }
    }
}

/// Joint decoding of the message with the compressions of every subset of a
/// chosen target set `m`, relays outside `m` treated as noise.
pub fn rate_ruj(ctx: &EvalContext, m: SubsetMask) -> Result<SchemeReport, SchemeError> {
    if ctx.mode() != Mode::Full {
        return Err(SchemeError::ModeMismatch { scheme: SchemeId::Ruj });
    }
    assert!(
        m.is_subset_of(ctx.full_set()),
        "target set {m} exceeds the relay set"
    );
    let table: Vec<SubsetValue> = m
        .subsets()
        .map(|s| SubsetValue { subset: s, value: ctx.eval_r(m, s) })
        .collect();
    let (unclamped, argmin) = table_min(&table);
    let (rate, clamped) = clamp_rate(unclamped);
    Ok(SchemeReport {
        scheme: SchemeId::Ruj,
        mode: Mode::Full,
        rate,
        argmin_subsets: argmin,
        witness_rates: None,
        d_j: None,
        d_j_prime: None,
        diagnostics: Diagnostics {
            unclamped_rate: Some(unclamped),
            clamped,
            subset_table: table,
            target_set: Some(m),
            ..Diagnostics::default()
        },
    })
}

/// Backward decoding, compressions recovered sequentially after the message:
/// feasible when every subset's decode balance is nonnegative, and then
/// worth the full all-compressions rate.
pub fn rate_cbs(ctx: &EvalContext) -> Result<SchemeReport, SchemeError> {
    if ctx.mode() != Mode::Full {
        return Err(SchemeError::ModeMismatch { scheme: SchemeId::Cbs });
    }
    let table: Vec<SubsetValue> = ctx
        .full_set()
        .subsets()
        .map(|s| SubsetValue { subset: s, value: ctx.eval_j_n(s) })
        .collect();
    let violations: Vec<SubsetValue> = table
        .iter()
        .filter(|e| e.value < -tol::MARGIN)
        .cloned()
        .collect();
    let feasible = violations.is_empty();
    Ok(SchemeReport {
        scheme: SchemeId::Cbs,
        mode: Mode::Full,
        rate: if feasible {
            RateValue::Bits(ctx.all_compressions_rate())
        } else {
            RateValue::Infeasible
        },
        argmin_subsets: Vec::new(),
        witness_rates: None,
        d_j: None,
        d_j_prime: None,
        diagnostics: Diagnostics {
            subset_table: table,
            violations: (!feasible).then_some(violations),
            ..Diagnostics::default()
        },
    })
}

/// Backward-joint decoding: joint decoding pointed at the strictly
/// decodable set, which maximizes the joint-decode rate over target sets.
pub fn rate_cbj(ctx: &EvalContext) -> Result<SchemeReport, SchemeError> {
    if ctx.mode() != Mode::Full {
        return Err(SchemeError::ModeMismatch { scheme: SchemeId::Cbj });
    }
    let analysis = classify_relays(ctx)?;
    let target = analysis.d_strict;
    let table: Vec<SubsetValue> = target
        .subsets()
        .map(|s| SubsetValue { subset: s, value: ctx.eval_r(target, s) })
        .collect();
    let (unclamped, argmin) = table_min(&table);
    let (rate, clamped) = clamp_rate(unclamped);
    Ok(SchemeReport {
        scheme: SchemeId::Cbj,
        mode: Mode::Full,
        rate,
        argmin_subsets: argmin,
        witness_rates: None,
        d_j: Some(analysis.d_strict),
        d_j_prime: Some(analysis.d_nonstrict),
        diagnostics: Diagnostics {
            unclamped_rate: Some(unclamped),
            clamped,
            subset_table: table,
            target_set: Some(target),
            decodability: Some(analysis),
            ..Diagnostics::default()
        },
    })
}

/// Every scheme the spec's mode supports, in declaration order; ruj is
/// evaluated against the full relay set.
pub fn all_supported(ctx: &EvalContext) -> Vec<SchemeReport> {
    let mut reports = vec![rate_cfs(ctx), rate_cfj(ctx)];
    if ctx.mode() == Mode::Full {
        reports.push(rate_ruj(ctx, ctx.full_set()).unwrap());
        reports.push(rate_cbs(ctx).unwrap());
        reports.push(rate_cbj(ctx).unwrap());
    }
    reports
}
