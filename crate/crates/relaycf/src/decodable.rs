//! Which relays' compressions the destination can actually recover.
//!
//! A set `F` is feasible for a family when the family's value is acceptable
//! on every subset of `F` (nonnegative, or strictly positive for strict
//! kinds). Feasible sets are closed under union, so a unique largest one
//! exists; [`largest_feasible_set`] finds it by brute force over all subsets
//! and re-verifies the union. [`peel_supported_subset`] instead walks down
//! from a set whose own value is acceptable, discarding violating subsets
//! until the remainder is feasible everywhere.

use serde::{Deserialize, Serialize};

use crate::setfuncs::EvalContext;
use crate::subsets::SubsetMask;
use crate::tol;

/// Which set function, and whether feasibility is strict.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum FeasibilityKind {
    /// Bin-rate surplus nonnegative on every subset.
    INonStrict,
    /// Decode balance nonnegative on every subset.
    JNonStrict,
    /// Source-conditioned balance strictly positive on every nonempty subset.
    KStrict,
    /// Source-conditioned balance nonnegative on every subset.
    KNonStrict,
}

impl FeasibilityKind {
    pub fn value(self, ctx: &EvalContext, a: SubsetMask, b: SubsetMask, s: SubsetMask) -> f64 {
        match self {
            FeasibilityKind::INonStrict => ctx.eval_i(a, b, s),
            FeasibilityKind::JNonStrict => ctx.eval_j(a, b, s),
            FeasibilityKind::KStrict | FeasibilityKind::KNonStrict => ctx.eval_k(a, b, s),
        }
    }

    pub fn is_strict(self) -> bool {
        matches!(self, FeasibilityKind::KStrict)
    }

    /// Whether a single value passes this kind's test. Empty subsets always
    /// pass: their value is identically zero and strictness exempts them.
    /// Whether a subset's value meets this kind's feasibility threshold.
    /// The empty set always passes.
    pub fn accepts(self, s: SubsetMask, value: f64) -> bool {
        if s.is_empty() {
            true
        } else if self.is_strict() {
            value > tol::MARGIN
        } else {
            value >= -tol::MARGIN
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DecodableError {
    #[error(
        "union {union} of feasible sets fails on subset {subset} with value {value}; \
         feasible sets must be closed under union, so a tolerance or engine bug is present"
    )]
    UnionNotFeasible {
        union: SubsetMask,
        subset: SubsetMask,
        value: f64,
    },
}

/// Whether every subset of `f` passes the kind's test, with `A = {}`.
pub fn is_feasible_set(ctx: &EvalContext, kind: FeasibilityKind, f: SubsetMask) -> bool {
    first_violation(ctx, kind, f).is_none()
}

fn first_violation(
    ctx: &EvalContext,
    kind: FeasibilityKind,
    f: SubsetMask,
) -> Option<(SubsetMask, f64)> {
    for s in f.subsets() {
        let value = kind.value(ctx, SubsetMask::EMPTY, f, s);
        if !kind.accepts(s, value) {
            return Some((s, value));
        }
    }
    None
}

/// The unique largest feasible set: the union of all feasible subsets of the
/// relay set, re-verified to be feasible itself.
pub fn largest_feasible_set(
    ctx: &EvalContext,
    kind: FeasibilityKind,
) -> Result<SubsetMask, DecodableError> {
    let mut union = SubsetMask::EMPTY;
    for f in ctx.full_set().subsets() {
        if is_feasible_set(ctx, kind, f) {
            union = union.union(f);
        }
    }
    if let Some((subset, value)) = first_violation(ctx, kind, union) {
        return Err(DecodableError::UnionNotFeasible { union, subset, value });
    }
    Ok(union)
}

/// Starting from a set `b` whose own value is acceptable given `a`, peels
/// away violating proper subsets (lexicographically smallest first) until
/// every subset of the remainder passes. Returns `None` when the starting
/// value is already unacceptable, and defensively when peeling fails to
/// reach a fully feasible remainder.
pub fn peel_supported_subset(
    ctx: &EvalContext,
    kind: FeasibilityKind,
    a: SubsetMask,
    b: SubsetMask,
) -> Option<SubsetMask> {
    if !kind.accepts(b, kind.value(ctx, a, b, b)) {
        return None;
    }
    let mut current = b;
    loop {
        let violating = current
            .proper_nonempty_subsets_lex()
            .find(|&s| !kind.accepts(s, kind.value(ctx, a, current, s)));
        match violating {
            Some(s) => current = current.minus(s),
            None => break,
        }
    }
    // The loop only inspects proper subsets; confirm the set's own value
    // survived the peeling before vouching for it.
    for s in current.subsets() {
        if !kind.accepts(s, kind.value(ctx, a, current, s)) {
            return None;
        }
    }
    Some(current)
}

/// How a single relay participates in joint decoding.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum RelayClass {
    /// Inside the strict largest set: decoding it strictly helps.
    Decodable,
    /// Only inside the nonstrict largest set: decodable at no net gain.
    MarginallyDecodable,
    /// Outside both: forcing it into the decode hurts the rate.
    Undecodable,
}

/// One set-function evaluation backing a classification.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubsetValue {
    pub subset: SubsetMask,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelayVerdict {
    pub relay: usize,
    pub class: RelayClass,
    /// For an undecodable relay: the worst subset through it within the
    /// nonstrict largest set extended by it, certifying the exclusion.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<SubsetValue>,
}

/// The two largest decodable sets under the source-conditioned balance and
/// the per-relay classification they induce.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecodabilityReport {
    pub d_strict: SubsetMask,
    pub d_nonstrict: SubsetMask,
    pub relays: Vec<RelayVerdict>,
    /// Values over all subsets of the nonstrict largest set.
    pub certifying_values: Vec<SubsetValue>,
}

/// Classifies every relay against the strict and nonstrict largest sets of
/// the source-conditioned balance (full mode only).
pub fn classify_relays(ctx: &EvalContext) -> Result<DecodabilityReport, DecodableError> {
    let d_strict = largest_feasible_set(ctx, FeasibilityKind::KStrict)?;
    let d_nonstrict = largest_feasible_set(ctx, FeasibilityKind::KNonStrict)?;

    let mut relays = Vec::new();
    for relay in 1..=ctx.num_relays() {
        let (class, witness) = if d_strict.contains(relay) {
            (RelayClass::Decodable, None)
        } else if d_nonstrict.contains(relay) {
            (RelayClass::MarginallyDecodable, None)
        } else {
            let extended = d_nonstrict.union(SubsetMask::singleton(relay));
            let worst = extended
                .subsets()
                .filter(|s| s.contains(relay))
                .map(|s| SubsetValue {
                    subset: s,
                    value: ctx.eval_k(SubsetMask::EMPTY, extended, s),
                })
                .min_by(|lhs, rhs| lhs.value.total_cmp(&rhs.value))
                .unwrap();
            (RelayClass::Undecodable, Some(worst))
        };
        relays.push(RelayVerdict { relay, class, witness });
    }

    let certifying_values = d_nonstrict
        .subsets()
        .map(|s| SubsetValue {
            subset: s,
            value: ctx.eval_k(SubsetMask::EMPTY, d_nonstrict, s),
        })
        .collect();

    Ok(DecodabilityReport { d_strict, d_nonstrict, relays, certifying_values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::distributions::{Distribution, Uniform};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::channel::{ChannelSpec, Mode};
    use crate::pmf::JointPmf;

    fn random_row(rng: &mut ChaCha8Rng, card: usize) -> Vec<f64> {
        let dist = Uniform::new(0.01f64, 1.0);
        let raw: Vec<f64> = (0..card).map(|_| dist.sample(rng)).collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / sum).collect()
    }

    fn random_conditional(rng: &mut ChaCha8Rng, rows: usize, card: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(rows * card);
        for _ in 0..rows {
            out.extend(random_row(rng, card));
        }
        out
    }

    fn random_full_spec(n: usize, seed: u64) -> ChannelSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ChannelSpec {
            mode: Mode::Full,
            n,
            alphabet_x: 2,
            alphabet_y: 2,
            alphabet_xi: Some(vec![2; n]),
            alphabet_yi: vec![2; n],
            alphabet_yhat_i: vec![2; n],
            channel: random_conditional(&mut rng, 2usize << n, 2usize << n),
            p_x: random_row(&mut rng, 2),
            p_xi: Some((0..n).map(|_| random_row(&mut rng, 2)).collect()),
            compressions: (0..n).map(|_| random_conditional(&mut rng, 4, 2)).collect(),
            link_capacities: None,
        }
    }

    fn random_digital_spec(n: usize, seed: u64, caps: Vec<f64>) -> ChannelSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ChannelSpec {
            mode: Mode::Digital,
            n,
            alphabet_x: 2,
            alphabet_y: 2,
            alphabet_xi: None,
            alphabet_yi: vec![2; n],
            alphabet_yhat_i: vec![2; n],
            channel: random_conditional(&mut rng, 2, 2usize << n),
            p_x: random_row(&mut rng, 2),
            p_xi: None,
            compressions: (0..n).map(|_| random_conditional(&mut rng, 2, 2)).collect(),
            link_capacities: Some(caps),
        }
    }

    /// Independent check: scan subsets largest-first and confirm the claimed
    /// set is feasible while everything feasible sits inside it.
    fn assert_is_largest(ctx: &EvalContext, kind: FeasibilityKind, claimed: SubsetMask) {
        assert!(is_feasible_set(ctx, kind, claimed));
        for f in ctx.full_set().subsets() {
            if is_feasible_set(ctx, kind, f) {
                assert!(
                    f.is_subset_of(claimed),
                    "feasible {f} escapes the claimed largest set {claimed}"
                );
            }
        }
    }

    #[test]
    fn largest_set_dominates_every_feasible_set() {
        for seed in 0..10u64 {
            let spec = random_full_spec(3, 300 + seed);
            let joint = JointPmf::from_spec(&spec).unwrap();
            let ctx = EvalContext::new(&joint);
            for kind in [
                FeasibilityKind::JNonStrict,
                FeasibilityKind::KStrict,
                FeasibilityKind::KNonStrict,
            ] {
                let d = largest_feasible_set(&ctx, kind).unwrap();
                assert_is_largest(&ctx, kind, d);
            }
        }
        for seed in 0..10u64 {
            let spec = random_digital_spec(3, 400 + seed, vec![0.4, 0.05, 0.7]);
            let joint = JointPmf::from_spec(&spec).unwrap();
            let ctx = EvalContext::for_spec(&spec, &joint);
            let d = largest_feasible_set(&ctx, FeasibilityKind::INonStrict).unwrap();
            assert_is_largest(&ctx, FeasibilityKind::INonStrict, d);
        }
    }

    #[test]
    fn generous_links_make_everything_feasible() {
        let spec = random_digital_spec(2, 17, vec![3.0, 3.0]);
        let joint = JointPmf::from_spec(&spec).unwrap();
        let ctx = EvalContext::for_spec(&spec, &joint);
        let d = largest_feasible_set(&ctx, FeasibilityKind::INonStrict).unwrap();
        assert_eq!(d, SubsetMask::full(2));
    }

    #[test]
    fn starved_links_leave_nothing_feasible() {
        // Nondegenerate observations compressed by copying, but zero-rate
        // links: no compression index can be communicated.
        let spec = ChannelSpec {
            mode: Mode::Digital,
            n: 2,
            alphabet_x: 2,
            alphabet_y: 2,
            alphabet_xi: None,
            alphabet_yi: vec![2, 2],
            alphabet_yhat_i: vec![2, 2],
            channel: {
                let mut rng = ChaCha8Rng::seed_from_u64(5);
                random_conditional(&mut rng, 2, 8)
            },
            p_x: vec![0.5, 0.5],
            p_xi: None,
            compressions: vec![vec![1.0, 0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0, 1.0]],
            link_capacities: Some(vec![0.0, 0.0]),
        };
        let joint = JointPmf::from_spec(&spec).unwrap();
        let ctx = EvalContext::for_spec(&spec, &joint);
        let d = largest_feasible_set(&ctx, FeasibilityKind::INonStrict).unwrap();
        assert!(d.is_empty(), "expected no feasible relay, got {d}");

        // The complement of the largest set carries a negative certificate.
        let dc = d.complement_in(2);
        assert!(ctx.eval_i_n(dc) < 0.0);
    }

    #[test]
    fn peeling_reaches_a_feasible_remainder() {
        // Relay 1's copy compression is unaffordable at zero link rate, but
        // relay 2's generous link keeps the pair's total surplus acceptable.
        let spec = ChannelSpec {
            mode: Mode::Digital,
            n: 2,
            alphabet_x: 2,
            alphabet_y: 2,
            alphabet_xi: None,
            alphabet_yi: vec![2, 2],
            alphabet_yhat_i: vec![2, 2],
            channel: {
                let mut rng = ChaCha8Rng::seed_from_u64(6);
                random_conditional(&mut rng, 2, 8)
            },
            p_x: vec![0.5, 0.5],
            p_xi: None,
            compressions: vec![vec![1.0, 0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0, 1.0]],
            link_capacities: Some(vec![0.0, 2.5]),
        };
        let joint = JointPmf::from_spec(&spec).unwrap();
        let ctx = EvalContext::for_spec(&spec, &joint);
        let n = SubsetMask::full(2);

        assert!(ctx.eval_i_n(n) >= 0.0, "precondition: the whole set's surplus holds");
        assert!(ctx.eval_i_n(SubsetMask::singleton(1)) < 0.0, "relay 1 violates on its own");

        let c = peel_supported_subset(&ctx, FeasibilityKind::INonStrict, SubsetMask::EMPTY, n)
            .expect("peeling must land somewhere");
        assert_eq!(c, SubsetMask::singleton(2));
        assert!(is_feasible_set(&ctx, FeasibilityKind::INonStrict, c));
    }

    #[test]
    fn peeling_declines_when_the_whole_set_already_fails() {
        let spec = random_digital_spec(2, 23, vec![0.0, 0.0]);
        let joint = JointPmf::from_spec(&spec).unwrap();
        let ctx = EvalContext::for_spec(&spec, &joint);
        let n = SubsetMask::full(2);
        if ctx.eval_i_n(n) < -tol::MARGIN {
            assert!(peel_supported_subset(
                &ctx,
                FeasibilityKind::INonStrict,
                SubsetMask::EMPTY,
                n
            )
            .is_none());
        }
    }

    #[test]
    fn peeled_remainder_is_always_feasible_on_random_instances() {
        for seed in 0..20u64 {
            let spec = random_digital_spec(3, 600 + seed, vec![0.1, 0.6, 1.2]);
            let joint = JointPmf::from_spec(&spec).unwrap();
            let ctx = EvalContext::for_spec(&spec, &joint);
            let n = SubsetMask::full(3);
            if let Some(c) =
                peel_supported_subset(&ctx, FeasibilityKind::INonStrict, SubsetMask::EMPTY, n)
            {
                assert!(!c.is_empty());
                assert!(is_feasible_set(&ctx, FeasibilityKind::INonStrict, c), "seed {seed}");
            }
        }
    }

    #[test]
    fn classification_tracks_the_two_largest_sets() {
        for seed in [31u64, 32, 33] {
            let spec = random_full_spec(2, seed);
            let joint = JointPmf::from_spec(&spec).unwrap();
            let ctx = EvalContext::new(&joint);
            let report = classify_relays(&ctx).unwrap();
            assert!(report.d_strict.is_subset_of(report.d_nonstrict));
            for verdict in &report.relays {
                match verdict.class {
                    RelayClass::Decodable => {
                        assert!(report.d_strict.contains(verdict.relay));
                    }
                    RelayClass::MarginallyDecodable => {
                        assert!(report.d_nonstrict.contains(verdict.relay));
                        assert!(!report.d_strict.contains(verdict.relay));
                    }
                    RelayClass::Undecodable => {
                        assert!(!report.d_nonstrict.contains(verdict.relay));
                        let witness = verdict.witness.as_ref().expect("certificate required");
                        assert!(witness.subset.contains(verdict.relay));
                    }
                }
            }
        }
    }

    #[test]
    fn disconnected_noisy_relay_is_undecodable() {
        // Relay 2's input never touches the channel, its observation is fair
        // coin noise, and its compression copies that noise: decoding it
        // costs a full bit and buys nothing. Relay 1 observes X exactly, so
        // its copy compression is free once X is known, and its input
        // genuinely moves Y.
        let mut channel = Vec::new();
        for x in 0..2usize {
            for x1 in 0..2usize {
                for _x2 in 0..2usize {
                    for y in 0..2usize {
                        for y1 in 0..2usize {
                            for _y2 in 0..2usize {
                                let p_y = if y == (x ^ x1) { 0.85 } else { 0.15 };
                                let p_y1 = if y1 == x { 1.0 } else { 0.0 };
                                channel.push(p_y * p_y1 * 0.5);
                            }
                        }
                    }
                }
            }
        }
        let copy = vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0];
        let spec = ChannelSpec {
            mode: Mode::Full,
            n: 2,
            alphabet_x: 2,
            alphabet_y: 2,
            alphabet_xi: Some(vec![2, 2]),
            alphabet_yi: vec![2, 2],
            alphabet_yhat_i: vec![2, 2],
            channel,
            p_x: vec![0.5, 0.5],
            p_xi: Some(vec![vec![0.5, 0.5], vec![0.5, 0.5]]),
            compressions: vec![copy.clone(), copy],
            link_capacities: None,
        };
        let joint = JointPmf::from_spec(&spec).unwrap();
        let ctx = EvalContext::new(&joint);
        let report = classify_relays(&ctx).unwrap();
        assert_eq!(report.relays[1].class, RelayClass::Undecodable);
        assert_eq!(report.d_strict, SubsetMask::singleton(1));

        // The J-family agrees that the pair cannot be decoded backward.
        let d_j = largest_feasible_set(&ctx, FeasibilityKind::JNonStrict).unwrap();
        assert!(!d_j.contains(2));
        // Negative certificate on the complement.
        let dc = d_j.complement_in(2);
        assert!(ctx.eval_j_n(dc) < 0.0);
    }
}
