//! The four families of set functions over relay subsets that drive
//! decodability analysis and the achievable-rate formulas.
//!
//! All four take an already-decoded set `A`, a target set `B` disjoint from
//! it, and a subset `S` of `B`:
//!
//! * `eval_i`: bin-rate surplus of `S` after the destination knows the
//!   compressions of `A` and of `B \ S`. Nonnegative on all `S` means the
//!   compression indices of `B` can be recovered from the relay links.
//! * `eval_j`: what decoding the compressions of `S` adds, net of what
//!   binning must pay for them, when relay inputs carry the indices.
//! * `eval_k`: the same balance conditioned on the source input `X`, which
//!   isolates the relays' own contribution from the message they forward.
//! * `eval_r`: the message rate supported by decoding `X` jointly with the
//!   compression indices of `S` inside `B`, relays outside `B` ignored.
//!
//! `S = {}` gives exactly zero for the first three and the no-relay rate
//! for `eval_r`.

use crate::channel::{ChannelSpec, Mode};
use crate::pmf::{JointPmf, VarSet};
use crate::subsets::SubsetMask;

/// A joint pmf together with the fixed data the set functions need: the
/// relay bin rates (required by the I-family) and the evaluation mode.
pub struct EvalContext<'a> {
    joint: &'a JointPmf,
    rates: Option<Vec<f64>>,
}

impl<'a> EvalContext<'a> {
    pub fn new(joint: &'a JointPmf) -> EvalContext<'a> {
        EvalContext { joint, rates: None }
    }

    /// Attaches the bin-rate vector `R_1..R_n` used by the I-family.
    pub fn with_rates(joint: &'a JointPmf, rates: Vec<f64>) -> EvalContext<'a> {
        assert_eq!(rates.len(), joint.num_relays(), "one rate per relay");
        EvalContext { joint, rates: Some(rates) }
    }

    /// Context for a spec's own joint; digital specs contribute their link
    /// capacities as the rate vector.
    pub fn for_spec(spec: &ChannelSpec, joint: &'a JointPmf) -> EvalContext<'a> {
        match &spec.link_capacities {
            Some(caps) => EvalContext::with_rates(joint, caps.clone()),
            None => EvalContext::new(joint),
        }
    }

    pub fn joint(&self) -> &'a JointPmf {
        self.joint
    }

    pub fn mode(&self) -> Mode {
        self.joint.mode()
    }

    pub fn num_relays(&self) -> usize {
        self.joint.num_relays()
    }

    pub fn full_set(&self) -> SubsetMask {
        SubsetMask::full(self.joint.num_relays())
    }

    pub fn rates(&self) -> Option<&[f64]> {
        self.rates.as_deref()
    }

    /// Sum of the attached rates over `s`.
    pub fn rate_sum(&self, s: SubsetMask) -> f64 {
        let rates = self
            .rates
            .as_ref()
            .expect("the I-family needs a rate vector; construct the context with one");
        s.indices().iter().map(|&i| rates[i - 1]).sum()
    }

    fn check_args(&self, a: SubsetMask, b: SubsetMask, s: SubsetMask) {
        let full = self.full_set();
        assert!(a.is_subset_of(full) && b.is_subset_of(full), "subsets exceed the relay set");
        assert!(a.is_disjoint_from(b), "A = {a} and B = {b} must be disjoint");
        assert!(s.is_subset_of(b), "S = {s} must be contained in B = {b}");
    }

    /// `sum_{i in S} R_i - I(Y_S; Yhat_S | Yhat_A, Yhat_{B\S}, Y)`, with the
    /// relay inputs `X_N` added to the conditioning in full mode.
    pub fn eval_i(&self, a: SubsetMask, b: SubsetMask, s: SubsetMask) -> f64 {
        self.check_args(a, b, s);
        if s.is_empty() {
            return 0.0;
        }
        let mut cond = VarSet::yhat(a.union(b.minus(s))).with(VarSet::y());
        if self.mode() == Mode::Full {
            cond = cond.with(VarSet::xi(self.full_set()));
        }
        let cost = self
            .joint
            .cond_mutual_info(&VarSet::yi(s), &VarSet::yhat(s), &cond)
            .unwrap();
        self.rate_sum(s) - cost
    }

    /// `I(S) = eval_i` against the whole relay set: `A = {}`, `B = N`.
    pub fn eval_i_n(&self, s: SubsetMask) -> f64 {
        self.eval_i(SubsetMask::EMPTY, self.full_set(), s)
    }

    /// `I(X_S; Yhat_{B\S}, Yhat_A, Y | X_A, X_{B\S})
    ///  - I(Y_S; Yhat_S | X_A, Yhat_A, Y, X_B, Yhat_{B\S})`.
    pub fn eval_j(&self, a: SubsetMask, b: SubsetMask, s: SubsetMask) -> f64 {
        self.check_args(a, b, s);
        assert_eq!(self.mode(), Mode::Full, "the J-family needs relay inputs");
        if s.is_empty() {
            return 0.0;
        }
        let rest = b.minus(s);
        let benefit = self
            .joint
            .cond_mutual_info(
                &VarSet::xi(s),
                &VarSet::yhat(rest.union(a)).with(VarSet::y()),
                &VarSet::xi(a.union(rest)),
            )
            .unwrap();
        let cost = self
            .joint
            .cond_mutual_info(
                &VarSet::yi(s),
                &VarSet::yhat(s),
                &VarSet::xi(a.union(b))
                    .with(VarSet::yhat(a.union(rest)))
                    .with(VarSet::y()),
            )
            .unwrap();
        benefit - cost
    }

    /// `J(S) = eval_j` against the whole relay set.
    pub fn eval_j_n(&self, s: SubsetMask) -> f64 {
        self.eval_j(SubsetMask::EMPTY, self.full_set(), s)
    }

    /// The J-family balance with the source input `X` joined to every
    /// conditioning set.
    pub fn eval_k(&self, a: SubsetMask, b: SubsetMask, s: SubsetMask) -> f64 {
        self.check_args(a, b, s);
        assert_eq!(self.mode(), Mode::Full, "the K-family needs relay inputs");
        if s.is_empty() {
            return 0.0;
        }
        let rest = b.minus(s);
        let benefit = self
            .joint
            .cond_mutual_info(
                &VarSet::xi(s),
                &VarSet::yhat(rest.union(a)).with(VarSet::y()),
                &VarSet::x().with(VarSet::xi(a.union(rest))),
            )
            .unwrap();
        let cost = self
            .joint
            .cond_mutual_info(
                &VarSet::yi(s),
                &VarSet::yhat(s),
                &VarSet::x()
                    .with(VarSet::xi(a.union(b)))
                    .with(VarSet::yhat(a.union(rest)))
                    .with(VarSet::y()),
            )
            .unwrap();
        benefit - cost
    }

    /// `K(S) = eval_k` against the whole relay set.
    pub fn eval_k_n(&self, s: SubsetMask) -> f64 {
        self.eval_k(SubsetMask::EMPTY, self.full_set(), s)
    }

    /// `I(X, X_S; Yhat_{B\S}, Y | X_{B\S})
    ///  - I(Y_S; Yhat_S | X, X_B, Yhat_{B\S}, Y)`: the message rate when the
    /// destination decodes the compressions of `S` jointly with the message,
    /// uses the compressions of `B \ S` as side information, and treats
    /// relays outside `B` as noise.
    pub fn eval_r(&self, b: SubsetMask, s: SubsetMask) -> f64 {
        self.check_args(SubsetMask::EMPTY, b, s);
        assert_eq!(self.mode(), Mode::Full, "this rate needs relay inputs");
        let rest = b.minus(s);
        let supported = self
            .joint
            .cond_mutual_info(
                &VarSet::x().with(VarSet::xi(s)),
                &VarSet::yhat(rest).with(VarSet::y()),
                &VarSet::xi(rest),
            )
            .unwrap();
        if s.is_empty() {
            return supported;
        }
        let cost = self
            .joint
            .cond_mutual_info(
                &VarSet::yi(s),
                &VarSet::yhat(s),
                &VarSet::x()
                    .with(VarSet::xi(b))
                    .with(VarSet::yhat(rest))
                    .with(VarSet::y()),
            )
            .unwrap();
        supported - cost
    }

    /// `I(X; Yhat_N, Y | X_N)` (full mode) or `I(X; Yhat_N, Y)` (digital):
    /// the rate once every compression has been recovered.
    pub fn all_compressions_rate(&self) -> f64 {
        let n = self.full_set();
        let cond = match self.mode() {
            Mode::Full => VarSet::xi(n),
            Mode::Digital => VarSet::EMPTY,
        };
        self.joint
            .cond_mutual_info(&VarSet::x(), &VarSet::yhat(n).with(VarSet::y()), &cond)
            .unwrap()
    }

    /// `I(X_S; Y | X_{S^c})`: the multiple-access constraint bound on the
    /// bin rates of `S` (full mode).
    pub fn mac_bound(&self, s: SubsetMask) -> f64 {
        assert_eq!(self.mode(), Mode::Full, "the MAC bound needs relay inputs");
        let full = self.full_set();
        assert!(s.is_subset_of(full), "subset exceeds the relay set");
        self.joint
            .cond_mutual_info(&VarSet::xi(s), &VarSet::y(), &VarSet::xi(full.minus(s)))
            .unwrap()
    }

    /// `I(Y_S; Yhat_S | Yhat_{S^c}, Y [, X_N])`: what binning must cover for
    /// the destination to recover the compressions of `S` last.
    pub fn compression_cost(&self, s: SubsetMask) -> f64 {
        let full = self.full_set();
        assert!(s.is_subset_of(full), "subset exceeds the relay set");
        if s.is_empty() {
            return 0.0;
        }
        let mut cond = VarSet::yhat(full.minus(s)).with(VarSet::y());
        if self.mode() == Mode::Full {
            cond = cond.with(VarSet::xi(full));
        }
        self.joint
            .cond_mutual_info(&VarSet::yi(s), &VarSet::yhat(s), &cond)
            .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::distributions::{Distribution, Uniform};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::channel::{ChannelSpec, Mode};
    use crate::pmf::VarId;

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
        let out_card = 2usize << n;
        let cond_card = 2usize << n;
        ChannelSpec {
            mode: Mode::Full,
            n,
            alphabet_x: 2,
            alphabet_y: 2,
            alphabet_xi: Some(vec![2; n]),
            alphabet_yi: vec![2; n],
            alphabet_yhat_i: vec![2; n],
            channel: random_conditional(&mut rng, cond_card, out_card),
            p_x: random_row(&mut rng, 2),
            p_xi: Some((0..n).map(|_| random_row(&mut rng, 2)).collect()),
            compressions: (0..n).map(|_| random_conditional(&mut rng, 4, 2)).collect(),
            link_capacities: None,
        }
    }

    /// Direct-summation conditional mutual information, sharing nothing with
    /// the engine's entropy route.
    fn naive_cmi(joint: &JointPmf, a: &[VarId], b: &[VarId], c: &[VarId]) -> f64 {
        let vars = joint.variables();
        let dims: Vec<usize> = vars.iter().map(|&(_, card)| card).collect();
        let positions = |ids: &[VarId]| -> Vec<usize> {
            ids.iter()
                .map(|id| vars.iter().position(|&(v, _)| v == *id).unwrap())
                .collect()
        };
        let pa = positions(a);
        let pb = positions(b);
        let pc = positions(c);

        let key = |digits: &[usize], pos: &[usize]| -> usize {
            pos.iter().fold(0, |acc, &p| acc * dims[p] + digits[p])
        };
        let mut digits = vec![0usize; dims.len()];
        let total: usize = dims.iter().product();
        let mut p_ac = std::collections::HashMap::new();
        let mut p_bc = std::collections::HashMap::new();
        let mut p_abc = std::collections::HashMap::new();
        let mut p_c = std::collections::HashMap::new();
        for flat in 0..total {
            let p = joint.probabilities()[flat];
            let ka = key(&digits, &pa);
            let kb = key(&digits, &pb);
            let kc = key(&digits, &pc);
            *p_ac.entry((ka, kc)).or_insert(0.0) += p;
            *p_bc.entry((kb, kc)).or_insert(0.0) += p;
            *p_abc.entry((ka, kb, kc)).or_insert(0.0) += p;
            *p_c.entry(kc).or_insert(0.0) += p;
            for axis in (0..dims.len()).rev() {
                digits[axis] += 1;
                if digits[axis] < dims[axis] {
                    break;
                }
                digits[axis] = 0;
            }
        }
        let mut total_info = 0.0;
        for (&(ka, kb, kc), &p) in &p_abc {
            if p <= 0.0 {
                continue;
            }
            let ratio = p * p_c[&kc] / (p_ac[&(ka, kc)] * p_bc[&(kb, kc)]);
            total_info += p * ratio.log2();
        }
        total_info
    }

    fn yhat_vars(s: SubsetMask) -> Vec<VarId> {
        s.indices().into_iter().map(VarId::YHat).collect()
    }

    fn yi_vars(s: SubsetMask) -> Vec<VarId> {
        s.indices().into_iter().map(VarId::Yi).collect()
    }

    fn xi_vars(s: SubsetMask) -> Vec<VarId> {
        s.indices().into_iter().map(VarId::Xi).collect()
    }

    #[test]
    fn empty_subset_values_are_exactly_zero() {
        let spec = random_full_spec(2, 7);
        let joint = JointPmf::from_spec(&spec).unwrap();
        let ctx = EvalContext::with_rates(&joint, vec![0.3, 0.4]);
        let n = ctx.full_set();
        assert_eq!(ctx.eval_i(SubsetMask::EMPTY, n, SubsetMask::EMPTY), 0.0);
        assert_eq!(ctx.eval_j_n(SubsetMask::EMPTY), 0.0);
        assert_eq!(ctx.eval_k_n(SubsetMask::EMPTY), 0.0);
    }

    #[test]
    fn no_relay_rate_is_direct_link_information() {
        let spec = random_full_spec(2, 11);
        let joint = JointPmf::from_spec(&spec).unwrap();
        let ctx = EvalContext::new(&joint);
        let direct = joint
            .cond_mutual_info(&VarSet::x(), &VarSet::y(), &VarSet::EMPTY)
            .unwrap();
        let r = ctx.eval_r(SubsetMask::EMPTY, SubsetMask::EMPTY);
        assert!((r - direct).abs() < 1e-12);
    }

    #[test]
    fn families_match_naive_composition() {
        for seed in [1u64, 2, 3] {
            let spec = random_full_spec(2, 100 + seed);
            let joint = JointPmf::from_spec(&spec).unwrap();
            let ctx = EvalContext::with_rates(&joint, vec![0.25, 0.6]);
            let n = ctx.full_set();
            for a in n.subsets() {
                for b in n.minus(a).subsets() {
                    for s in b.subsets() {
                        if s.is_empty() {
                            continue;
                        }
                        let rest = b.minus(s);

                        let mut cond = yhat_vars(a.union(rest));
                        cond.push(VarId::Y);
                        cond.extend(xi_vars(n));
                        let want_i = ctx.rate_sum(s)
                            - naive_cmi(&joint, &yi_vars(s), &yhat_vars(s), &cond);
                        let got_i = ctx.eval_i(a, b, s);
                        assert!((got_i - want_i).abs() < 1e-10, "I mismatch at {a} {b} {s}");

                        let mut second = yhat_vars(rest.union(a));
                        second.push(VarId::Y);
                        let benefit =
                            naive_cmi(&joint, &xi_vars(s), &second, &xi_vars(a.union(rest)));
                        let mut cond = xi_vars(a.union(b));
                        cond.extend(yhat_vars(a.union(rest)));
                        cond.push(VarId::Y);
                        let cost = naive_cmi(&joint, &yi_vars(s), &yhat_vars(s), &cond);
                        let got_j = ctx.eval_j(a, b, s);
                        assert!(
                            (got_j - (benefit - cost)).abs() < 1e-10,
                            "J mismatch at {a} {b} {s}"
                        );

                        let mut kcond1 = vec![VarId::X];
                        kcond1.extend(xi_vars(a.union(rest)));
                        let kbenefit = naive_cmi(&joint, &xi_vars(s), &second, &kcond1);
                        let mut kcond2 = vec![VarId::X];
                        kcond2.extend(xi_vars(a.union(b)));
                        kcond2.extend(yhat_vars(a.union(rest)));
                        kcond2.push(VarId::Y);
                        let kcost = naive_cmi(&joint, &yi_vars(s), &yhat_vars(s), &kcond2);
                        let got_k = ctx.eval_k(a, b, s);
                        assert!(
                            (got_k - (kbenefit - kcost)).abs() < 1e-10,
                            "K mismatch at {a} {b} {s}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn joint_decode_rate_matches_naive_composition() {
        let spec = random_full_spec(2, 42);
        let joint = JointPmf::from_spec(&spec).unwrap();
        let ctx = EvalContext::new(&joint);
        let n = ctx.full_set();
        for b in n.subsets() {
            for s in b.subsets() {
                let rest = b.minus(s);
                let mut first_a = vec![VarId::X];
                first_a.extend(xi_vars(s));
                let mut first_b = yhat_vars(rest);
                first_b.push(VarId::Y);
                let supported = naive_cmi(&joint, &first_a, &first_b, &xi_vars(rest));
                let cost = if s.is_empty() {
                    0.0
                } else {
                    let mut cond = vec![VarId::X];
                    cond.extend(xi_vars(b));
                    cond.extend(yhat_vars(rest));
                    cond.push(VarId::Y);
                    naive_cmi(&joint, &yi_vars(s), &yhat_vars(s), &cond)
                };
                let got = ctx.eval_r(b, s);
                assert!(
                    (got - (supported - cost)).abs() < 1e-10,
                    "R mismatch at B = {b}, S = {s}"
                );
            }
        }
    }

    #[test]
    fn joint_decode_rate_decomposes_through_j() {
        // R_N(S) should equal the all-compressions rate plus J(S): decoding
        // everything and then discounting S's balance is the same bookkeeping.
        for seed in [5u64, 6] {
            let spec = random_full_spec(2, 200 + seed);
            let joint = JointPmf::from_spec(&spec).unwrap();
            let ctx = EvalContext::new(&joint);
            let n = ctx.full_set();
            let base = ctx.all_compressions_rate();
            for s in n.subsets() {
                let lhs = ctx.eval_r(n, s);
                let rhs = base + ctx.eval_j_n(s);
                assert!((lhs - rhs).abs() < 1e-9, "S = {s}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn constant_compressions_cost_nothing() {
        let mut spec = random_full_spec(2, 77);
        for comp in spec.compressions.iter_mut() {
            for (k, v) in comp.iter_mut().enumerate() {
                *v = if k % 2 == 0 { 1.0 } else { 0.0 };
            }
        }
        let joint = JointPmf::from_spec(&spec).unwrap();
        let ctx = EvalContext::with_rates(&joint, vec![0.0, 0.0]);
        let n = ctx.full_set();
        for s in n.subsets() {
            assert!(ctx.compression_cost(s).abs() < 1e-12);
            assert!(ctx.eval_i_n(s).abs() < 1e-12);
            assert!(ctx.eval_j_n(s) > -1e-12, "J({s}) = {}", ctx.eval_j_n(s));
            assert!(ctx.eval_k_n(s) > -1e-12);
        }
    }

    #[test]
    #[should_panic(expected = "disjoint")]
    fn overlapping_a_and_b_panic() {
        let spec = random_full_spec(2, 99);
        let joint = JointPmf::from_spec(&spec).unwrap();
        let ctx = EvalContext::new(&joint);
        let one = SubsetMask::singleton(1);
        ctx.eval_j(one, one, one);
    }

    #[test]
    #[should_panic(expected = "relay inputs")]
    fn j_family_rejects_digital_mode() {
        let spec = ChannelSpec {
            mode: Mode::Digital,
            n: 1,
            alphabet_x: 2,
            alphabet_y: 2,
            alphabet_xi: None,
            alphabet_yi: vec![2],
            alphabet_yhat_i: vec![2],
            channel: vec![0.4, 0.1, 0.1, 0.4, 0.1, 0.4, 0.4, 0.1],
            p_x: vec![0.5, 0.5],
            p_xi: None,
            compressions: vec![vec![1.0, 0.0, 0.0, 1.0]],
            link_capacities: Some(vec![1.0]),
        };
        let joint = JointPmf::from_spec(&spec).unwrap();
        let ctx = EvalContext::new(&joint);
        ctx.eval_j_n(SubsetMask::singleton(1));
    }
}
