//! Dense joint distributions over the channel variables and their
//! information measures.
//!
//! The joint over (X, X_1..X_n, Y, Y_1..Y_n, Yhat_1..Yhat_n) is stored as a
//! flat row-major tensor in that canonical variable order (digital mode has
//! no X_i). Entropies are computed from marginals of this tensor and cached
//! per variable subset, so repeated conditional mutual informations against
//! the same joint cost one marginalization each at most.

use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;

use crate::channel::{ChannelSpec, Mode};
use crate::subsets::SubsetMask;
use crate::tol;

/// One variable of the joint. Relay indices are 1-based.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
pub enum VarId {
    X,
    Y,
    Xi(usize),
    Yi(usize),
    YHat(usize),
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarId::X => write!(f, "X"),
            VarId::Y => write!(f, "Y"),
            VarId::Xi(i) => write!(f, "X_{i}"),
            VarId::Yi(i) => write!(f, "Y_{i}"),
            VarId::YHat(i) => write!(f, "Yhat_{i}"),
        }
    }
}

/// A set of variables, used to select marginals and the arguments of
/// information measures.
#[derive(Copy, Clone, Default, PartialEq, Eq, Debug)]
pub struct VarSet {
    pub x: bool,
    pub y: bool,
    pub xi: SubsetMask,
    pub yi: SubsetMask,
    pub yhat: SubsetMask,
}

impl VarSet {
    pub const EMPTY: VarSet = VarSet {
        x: false,
        y: false,
        xi: SubsetMask::EMPTY,
        yi: SubsetMask::EMPTY,
        yhat: SubsetMask::EMPTY,
    };

    pub fn x() -> VarSet {
        VarSet { x: true, ..VarSet::EMPTY }
    }

    pub fn y() -> VarSet {
        VarSet { y: true, ..VarSet::EMPTY }
    }

    pub fn xi(mask: SubsetMask) -> VarSet {
        VarSet { xi: mask, ..VarSet::EMPTY }
    }

    pub fn yi(mask: SubsetMask) -> VarSet {
        VarSet { yi: mask, ..VarSet::EMPTY }
    }

    pub fn yhat(mask: SubsetMask) -> VarSet {
        VarSet { yhat: mask, ..VarSet::EMPTY }
    }

    /// Union with another set.
    pub fn with(self, other: VarSet) -> VarSet {
        VarSet {
            x: self.x || other.x,
            y: self.y || other.y,
            xi: self.xi.union(other.xi),
            yi: self.yi.union(other.yi),
            yhat: self.yhat.union(other.yhat),
        }
    }

    pub fn is_empty(&self) -> bool {
        *self == VarSet::EMPTY
    }

    pub fn overlaps(&self, other: &VarSet) -> bool {
        (self.x && other.x)
            || (self.y && other.y)
            || !self.xi.is_disjoint_from(other.xi)
            || !self.yi.is_disjoint_from(other.yi)
            || !self.yhat.is_disjoint_from(other.yhat)
    }
}

impl fmt::Display for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.x {
            parts.push("X".to_string());
        }
        for i in self.xi.indices() {
            parts.push(format!("X_{i}"));
        }
        if self.y {
            parts.push("Y".to_string());
        }
        for i in self.yi.indices() {
            parts.push(format!("Y_{i}"));
        }
        for i in self.yhat.indices() {
            parts.push(format!("Yhat_{i}"));
        }
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PmfError {
    #[error("variable {var} is not part of this joint")]
    AbsentVariable { var: String },
    #[error("variable sets must be pairwise disjoint, both contain {var}")]
    Overlap { var: String },
}

/// An immutable joint pmf with a memoized entropy table.
pub struct JointPmf {
    mode: Mode,
    n: usize,
    vars: Vec<(VarId, usize)>,
    probs: Vec<f64>,
    entropies: RwLock<HashMap<u32, f64>>,
}

impl JointPmf {
    /// Builds the joint induced by a validated spec:
    /// `p(x) [prod p(x_i)] p(y, y_N | x, x_N) prod p(yhat_i | x_i, y_i)`.
    pub fn from_spec(spec: &ChannelSpec) -> Result<JointPmf, crate::channel::SpecError> {
        spec.validate()?;
        let n = spec.n;
        let full = spec.mode == Mode::Full;

        let mut vars: Vec<(VarId, usize)> = Vec::new();
        vars.push((VarId::X, spec.alphabet_x));
        if full {
            let cards = spec.alphabet_xi.as_ref().unwrap();
            for i in 1..=n {
                vars.push((VarId::Xi(i), cards[i - 1]));
            }
        }
        vars.push((VarId::Y, spec.alphabet_y));
        for i in 1..=n {
            vars.push((VarId::Yi(i), spec.alphabet_yi[i - 1]));
        }
        for i in 1..=n {
            vars.push((VarId::YHat(i), spec.alphabet_yhat_i[i - 1]));
        }

        let dims: Vec<usize> = vars.iter().map(|&(_, card)| card).collect();
        let total: usize = dims.iter().product();

        // Positions of each variable inside the canonical order.
        let pos_x = 0;
        let pos_xi: Vec<usize> = if full { (1..=n).collect() } else { Vec::new() };
        let pos_y = if full { n + 1 } else { 1 };
        let pos_yi: Vec<usize> = (0..n).map(|k| pos_y + 1 + k).collect();
        let pos_yhat: Vec<usize> = (0..n).map(|k| pos_y + 1 + n + k).collect();

        // Channel law axes: conditioning (x, x_N) outermost, then (y, y_N).
        let mut ch_axes: Vec<usize> = vec![pos_x];
        ch_axes.extend(&pos_xi);
        ch_axes.push(pos_y);
        ch_axes.extend(&pos_yi);
        let ch_dims: Vec<usize> = ch_axes.iter().map(|&p| dims[p]).collect();

        let clamp = |v: f64| if v < 0.0 { 0.0 } else { v };

        let mut probs = vec![0.0f64; total];
        let mut digits = vec![0usize; vars.len()];
        for slot in probs.iter_mut() {
            let mut p = clamp(spec.p_x[digits[pos_x]]);
            if full {
                let laws = spec.p_xi.as_ref().unwrap();
                for i in 0..n {
                    p *= clamp(laws[i][digits[pos_xi[i]]]);
                }
            }
            let mut ch_flat = 0usize;
            for (axis, &pos) in ch_axes.iter().enumerate() {
                ch_flat = ch_flat * ch_dims[axis] + digits[pos];
            }
            p *= clamp(spec.channel[ch_flat]);
            for i in 0..n {
                let yhat_card = spec.alphabet_yhat_i[i];
                let comp_flat = if full {
                    (digits[pos_xi[i]] * dims[pos_yi[i]] + digits[pos_yi[i]]) * yhat_card
                        + digits[pos_yhat[i]]
                } else {
                    digits[pos_yi[i]] * yhat_card + digits[pos_yhat[i]]
                };
                p *= clamp(spec.compressions[i][comp_flat]);
            }
            *slot = p;

            for axis in (0..digits.len()).rev() {
                digits[axis] += 1;
                if digits[axis] < dims[axis] {
                    break;
                }
                digits[axis] = 0;
            }
        }

        let mass = compensated_sum(probs.iter().copied());
        assert!(
            (mass - 1.0).abs() < 1e-9,
            "joint mass {mass} strayed from 1; factor normalization must be broken"
        );

        Ok(JointPmf {
            mode: spec.mode,
            n,
            vars,
            probs,
            entropies: RwLock::new(HashMap::new()),
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn num_relays(&self) -> usize {
        self.n
    }

    pub fn variables(&self) -> &[(VarId, usize)] {
        &self.vars
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    fn position(&self, id: VarId) -> Option<usize> {
        self.vars.iter().position(|&(v, _)| v == id)
    }

    fn mask_of(&self, set: &VarSet) -> Result<u32, PmfError> {
        let mut mask = 0u32;
        let mut add = |id: VarId| -> Result<(), PmfError> {
            match self.position(id) {
                Some(pos) => {
                    mask |= 1 << pos;
                    Ok(())
                }
                None => Err(PmfError::AbsentVariable { var: id.to_string() }),
            }
        };
        if set.x {
            add(VarId::X)?;
        }
        if set.y {
            add(VarId::Y)?;
        }
        for i in set.xi.indices() {
            add(VarId::Xi(i))?;
        }
        for i in set.yi.indices() {
            add(VarId::Yi(i))?;
        }
        for i in set.yhat.indices() {
            add(VarId::YHat(i))?;
        }
        Ok(mask)
    }

    fn check_disjoint(sets: &[&VarSet]) -> Result<(), PmfError> {
        for (k, a) in sets.iter().enumerate() {
            for b in &sets[k + 1..] {
                if a.overlaps(b) {
                    let witness = overlap_witness(a, b);
                    return Err(PmfError::Overlap { var: witness });
                }
            }
        }
        Ok(())
    }

    /// Sums the tensor down to the variables in `mask`, preserving order.
    fn marginal_tensor(&self, mask: u32) -> (Vec<(VarId, usize)>, Vec<f64>) {
        let kept: Vec<usize> = (0..self.vars.len()).filter(|&p| mask & (1 << p) != 0).collect();
        let kept_vars: Vec<(VarId, usize)> = kept.iter().map(|&p| self.vars[p]).collect();
        let out_total: usize = kept_vars.iter().map(|&(_, card)| card).product();

        // Stride of each kept variable inside the output tensor.
        let mut out_strides = vec![0usize; self.vars.len()];
        let mut stride = 1usize;
        for &p in kept.iter().rev() {
            out_strides[p] = stride;
            stride *= self.vars[p].1;
        }

        let dims: Vec<usize> = self.vars.iter().map(|&(_, card)| card).collect();
        let mut out = vec![0.0f64; out_total];
        let mut comp = vec![0.0f64; out_total];
        let mut digits = vec![0usize; self.vars.len()];
        let mut out_flat = 0usize;
        for &p in &self.probs {
            // Compensated accumulation keeps marginals accurate on large tensors.
            let slot = out_flat;
            let y = p - comp[slot];
            let t = out[slot] + y;
            comp[slot] = (t - out[slot]) - y;
            out[slot] = t;

            for axis in (0..digits.len()).rev() {
                digits[axis] += 1;
                out_flat += out_strides[axis];
                if digits[axis] < dims[axis] {
                    break;
                }
                digits[axis] = 0;
                out_flat -= out_strides[axis] * dims[axis];
            }
        }
        (kept_vars, out)
    }

    /// Entropy in bits of the marginal selected by `mask`, memoized.
    fn entropy_mask(&self, mask: u32) -> f64 {
        if mask == 0 {
            return 0.0;
        }
        if let Some(&h) = self.entropies.read().unwrap().get(&mask) {
            return h;
        }
        let (_, marginal) = self.marginal_tensor(mask);
        let nats = compensated_sum(
            marginal
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| -p * p.ln()),
        );
        let h = (nats / std::f64::consts::LN_2).max(0.0);
        self.entropies.write().unwrap().insert(mask, h);
        h
    }

    /// A standalone marginal joint over `keep`, in canonical order.
    pub fn marginalize(&self, keep: &VarSet) -> Result<JointPmf, PmfError> {
        let mask = self.mask_of(keep)?;
        let (vars, probs) = self.marginal_tensor(mask);
        Ok(JointPmf {
            mode: self.mode,
            n: self.n,
            vars,
            probs,
            entropies: RwLock::new(HashMap::new()),
        })
    }

    /// `H(A)` in bits.
    pub fn entropy(&self, a: &VarSet) -> Result<f64, PmfError> {
        Ok(self.entropy_mask(self.mask_of(a)?))
    }

    /// `H(A | C)` in bits.
    pub fn cond_entropy(&self, a: &VarSet, c: &VarSet) -> Result<f64, PmfError> {
        Self::check_disjoint(&[a, c])?;
        let mask_a = self.mask_of(a)?;
        let mask_c = self.mask_of(c)?;
        let h = self.entropy_mask(mask_a | mask_c) - self.entropy_mask(mask_c);
        Ok(h.max(0.0))
    }

    /// `I(A; B | C)` in bits. Empty `A` or `B` gives exactly zero.
    ///
    /// Computed as `H(A,C) + H(B,C) - H(A,B,C) - H(C)`; values in
    /// `[-1e-12, 0)` are rounding residue and clamp to zero, anything lower
    /// panics because it can only come from a broken invariant.
    pub fn cond_mutual_info(&self, a: &VarSet, b: &VarSet, c: &VarSet) -> Result<f64, PmfError> {
        Self::check_disjoint(&[a, b, c])?;
        let mask_a = self.mask_of(a)?;
        let mask_b = self.mask_of(b)?;
        let mask_c = self.mask_of(c)?;
        if mask_a == 0 || mask_b == 0 {
            return Ok(0.0);
        }
        let value = self.entropy_mask(mask_a | mask_c) + self.entropy_mask(mask_b | mask_c)
            - self.entropy_mask(mask_a | mask_b | mask_c)
            - self.entropy_mask(mask_c);
        if value < 0.0 {
            assert!(
                value >= tol::CMI_FLOOR,
                "conditional mutual information {value} below the rounding floor \
                 for I({a}; {b} | {c})"
            );
            return Ok(0.0);
        }
        Ok(value)
    }
}

fn overlap_witness(a: &VarSet, b: &VarSet) -> String {
    if a.x && b.x {
        return "X".to_string();
    }
    if a.y && b.y {
        return "Y".to_string();
    }
    let xi = a.xi.intersect(b.xi);
    if let Some(&i) = xi.indices().first() {
        return format!("X_{i}");
    }
    let yi = a.yi.intersect(b.yi);
    if let Some(&i) = yi.indices().first() {
        return format!("Y_{i}");
    }
    let yhat = a.yhat.intersect(b.yhat);
    let i = yhat.indices()[0];
    format!("Yhat_{i}")
}

/// Kahan-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelSpec, Mode};
    use crate::subsets::SubsetMask;

    fn h2(p: f64) -> f64 {
        let term = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
        term(p) + term(1.0 - p)
    }

    /// X uniform, Y = X through BSC(0.1), Y_1 = X through BSC(0.2)
    /// independently, Yhat_1 = Y_1.
    fn digital_bsc_pair() -> ChannelSpec {
        ChannelSpec {
            mode: Mode::Digital,
            n: 1,
            alphabet_x: 2,
            alphabet_y: 2,
            alphabet_xi: None,
            alphabet_yi: vec![2],
            alphabet_yhat_i: vec![2],
            channel: vec![
                0.72, 0.18, 0.08, 0.02, //
                0.02, 0.08, 0.18, 0.72,
            ],
            p_x: vec![0.5, 0.5],
            p_xi: None,
            compressions: vec![vec![1.0, 0.0, 0.0, 1.0]],
            link_capacities: Some(vec![0.5]),
        }
    }

    /// Independent nested-loop construction of the same joint, written
    /// without any shared indexing helpers.
    fn digital_bsc_pair_by_hand() -> Vec<f64> {
        let bsc = |flip: f64, x: usize, y: usize| if x == y { 1.0 - flip } else { flip };
        let mut probs = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                for y1 in 0..2 {
                    for yhat1 in 0..2 {
                        let comp = if yhat1 == y1 { 1.0 } else { 0.0 };
                        probs.push(0.5 * bsc(0.1, x, y) * bsc(0.2, x, y1) * comp);
                    }
                }
            }
        }
        probs
    }

    #[test]
    fn joint_matches_nested_loop_oracle() {
        let joint = JointPmf::from_spec(&digital_bsc_pair()).unwrap();
        let expected = digital_bsc_pair_by_hand();
        assert_eq!(joint.probabilities().len(), expected.len());
        for (got, want) in joint.probabilities().iter().zip(&expected) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn full_mode_joint_matches_nested_loop_oracle() {
        // Y = X xor X_1 through a BSC(0.3); Y_1 = X; Yhat_1 = Y_1 through a
        // BSC(0.25); X_1 biased.
        let mut channel = Vec::new();
        for x in 0..2usize {
            for x1 in 0..2usize {
                for y in 0..2usize {
                    for y1 in 0..2usize {
                        let clean = x ^ x1;
                        let p_y = if y == clean { 0.7 } else { 0.3 };
                        let p_y1 = if y1 == x { 1.0 } else { 0.0 };
                        channel.push(p_y * p_y1);
                    }
                }
            }
        }
        let spec = ChannelSpec {
            mode: Mode::Full,
            n: 1,
            alphabet_x: 2,
            alphabet_y: 2,
            alphabet_xi: Some(vec![2]),
            alphabet_yi: vec![2],
            alphabet_yhat_i: vec![2],
            channel,
            p_x: vec![0.5, 0.5],
            p_xi: Some(vec![vec![0.6, 0.4]]),
            compressions: vec![vec![0.75, 0.25, 0.25, 0.75, 0.75, 0.25, 0.25, 0.75]],
            link_capacities: None,
        };
        let joint = JointPmf::from_spec(&spec).unwrap();

        let mut expected = Vec::new();
        for x in 0..2usize {
            for x1 in 0..2usize {
                for y in 0..2usize {
                    for y1 in 0..2usize {
                        for yhat1 in 0..2usize {
                            let p_x1 = [0.6, 0.4][x1];
                            let p_y = if y == (x ^ x1) { 0.7 } else { 0.3 };
                            let p_y1 = if y1 == x { 1.0 } else { 0.0 };
                            let p_c = if yhat1 == y1 { 0.75 } else { 0.25 };
                            expected.push(0.5 * p_x1 * p_y * p_y1 * p_c);
                        }
                    }
                }
            }
        }
        for (got, want) in joint.probabilities().iter().zip(&expected) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn entropies_hit_closed_forms() {
        let joint = JointPmf::from_spec(&digital_bsc_pair()).unwrap();
        let one = SubsetMask::singleton(1);

        let hx = joint.entropy(&VarSet::x()).unwrap();
        assert!((hx - 1.0).abs() < 1e-12);

        let ixy = joint
            .cond_mutual_info(&VarSet::x(), &VarSet::y(), &VarSet::EMPTY)
            .unwrap();
        assert!((ixy - (1.0 - h2(0.1))).abs() < 1e-12, "I(X;Y) = {ixy}");

        let ixy1 = joint
            .cond_mutual_info(&VarSet::x(), &VarSet::yi(one), &VarSet::EMPTY)
            .unwrap();
        assert!((ixy1 - (1.0 - h2(0.2))).abs() < 1e-12);

        // Y and Y_1 are conditionally independent given X.
        let dep = joint
            .cond_mutual_info(&VarSet::y(), &VarSet::yi(one), &VarSet::x())
            .unwrap();
        assert!(dep.abs() < 1e-12);

        // The compression copies Y_1, so H(Yhat_1 | Y_1) = 0.
        let copy = joint.cond_entropy(&VarSet::yhat(one), &VarSet::yi(one)).unwrap();
        assert!(copy.abs() < 1e-12);
    }

    #[test]
    fn empty_arguments_give_exact_zero() {
        let joint = JointPmf::from_spec(&digital_bsc_pair()).unwrap();
        let zero = joint
            .cond_mutual_info(&VarSet::EMPTY, &VarSet::y(), &VarSet::x())
            .unwrap();
        assert_eq!(zero, 0.0);
        let zero = joint
            .cond_mutual_info(&VarSet::x(), &VarSet::EMPTY, &VarSet::EMPTY)
            .unwrap();
        assert_eq!(zero, 0.0);
        assert_eq!(joint.entropy(&VarSet::EMPTY).unwrap(), 0.0);
    }

    #[test]
    fn overlap_is_rejected() {
        let joint = JointPmf::from_spec(&digital_bsc_pair()).unwrap();
        let err = joint
            .cond_mutual_info(&VarSet::x(), &VarSet::x().with(VarSet::y()), &VarSet::EMPTY)
            .unwrap_err();
        assert!(err.to_string().contains('X'), "got: {err}");
    }

    #[test]
    fn absent_variable_is_rejected() {
        let joint = JointPmf::from_spec(&digital_bsc_pair()).unwrap();
        let err = joint.entropy(&VarSet::xi(SubsetMask::singleton(1))).unwrap_err();
        assert!(err.to_string().contains("X_1"), "got: {err}");
    }

    #[test]
    fn marginal_recovers_input_law() {
        let joint = JointPmf::from_spec(&digital_bsc_pair()).unwrap();
        let marginal = joint.marginalize(&VarSet::x()).unwrap();
        assert_eq!(marginal.probabilities().len(), 2);
        for &p in marginal.probabilities() {
            assert!((p - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn chain_rule_holds() {
        let joint = JointPmf::from_spec(&digital_bsc_pair()).unwrap();
        let one = SubsetMask::singleton(1);
        let lhs = joint
            .cond_mutual_info(&VarSet::x(), &VarSet::y().with(VarSet::yi(one)), &VarSet::EMPTY)
            .unwrap();
        let rhs = joint
            .cond_mutual_info(&VarSet::x(), &VarSet::y(), &VarSet::EMPTY)
            .unwrap()
            + joint
                .cond_mutual_info(&VarSet::x(), &VarSet::yi(one), &VarSet::y())
                .unwrap();
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }
}
