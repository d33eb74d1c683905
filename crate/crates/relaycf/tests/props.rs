use proptest::prelude::*;

use relaycf::channel::{ChannelSpec, Mode};
use relaycf::pmf::{JointPmf, VarSet};
use relaycf::subsets::SubsetMask;
use relaycf::verify::InstanceGenerator;

fn arb_spec() -> impl Strategy<Value = ChannelSpec> {
    (
        any::<u64>(),
        prop_oneof![Just(Mode::Digital), Just(Mode::Full)],
        1..=2usize,
    )
        .prop_map(|(seed, mode, n)| InstanceGenerator::binary(mode, n, seed).instance(0))
}

/// Assigns each variable of the joint to one of the three argument slots
/// (or to none) from two bits apiece, so the slots are always disjoint.
fn split_vars(spec: &ChannelSpec, mut bits: u32) -> (VarSet, VarSet, VarSet) {
    let mut atoms = vec![VarSet::x(), VarSet::y()];
    for i in 1..=spec.n {
        let relay = SubsetMask::singleton(i);
        if spec.mode == Mode::Full {
            atoms.push(VarSet::xi(relay));
        }
        atoms.push(VarSet::yi(relay));
        atoms.push(VarSet::yhat(relay));
    }
    let mut slots = [VarSet::EMPTY; 3];
    for atom in atoms {
        let choice = (bits & 3) as usize;
        bits >>= 2;
        if choice < 3 {
            slots[choice] = slots[choice].with(atom);
        }
    }
    (slots[0], slots[1], slots[2])
}

proptest! {
    #[test]
    fn conditional_information_is_symmetric_and_nonnegative(
        spec in arb_spec(),
        bits in any::<u32>(),
    ) {
        let joint = JointPmf::from_spec(&spec).unwrap();
        let (a, b, c) = split_vars(&spec, bits);
        let forward = joint.cond_mutual_info(&a, &b, &c).unwrap();
        let backward = joint.cond_mutual_info(&b, &a, &c).unwrap();
        prop_assert!((forward - backward).abs() < 1e-10, "{forward} vs {backward}");
        prop_assert!(forward >= -1e-12, "negative information {forward}");
    }

    #[test]
    fn conditional_information_obeys_the_chain_rule(
        spec in arb_spec(),
        bits in any::<u32>(),
    ) {
        let joint = JointPmf::from_spec(&spec).unwrap();
        let (a1, a2, b) = split_vars(&spec, bits);
        let whole = joint.cond_mutual_info(&a1.with(a2), &b, &VarSet::EMPTY).unwrap();
        let split = joint.cond_mutual_info(&a1, &b, &VarSet::EMPTY).unwrap()
            + joint.cond_mutual_info(&a2, &b, &a1).unwrap();
        prop_assert!((whole - split).abs() < 1e-10, "{whole} vs {split}");
    }

    #[test]
    fn entropy_is_bounded_by_the_log_cardinality(
        spec in arb_spec(),
        bits in any::<u32>(),
    ) {
        let joint = JointPmf::from_spec(&spec).unwrap();
        let (a, _, _) = split_vars(&spec, bits);
        let entropy = joint.entropy(&a).unwrap();
        prop_assert!(entropy >= -1e-12);
        let states: usize = joint
            .variables()
            .iter()
            .filter(|&&(id, _)| {
                use relaycf::pmf::VarId;
                match id {
                    VarId::X => a.x,
                    VarId::Y => a.y,
                    VarId::Xi(i) => a.xi.contains(i),
                    VarId::Yi(i) => a.yi.contains(i),
                    VarId::YHat(i) => a.yhat.contains(i),
                }
            })
            .map(|&(_, card)| card)
            .product();
        prop_assert!(entropy <= (states as f64).log2() + 1e-12);
    }

    #[test]
    fn specs_round_trip_through_json(spec in arb_spec()) {
        let text = serde_json::to_string_pretty(&spec).unwrap();
        let back: ChannelSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(text, serde_json::to_string_pretty(&back).unwrap());
    }

    #[test]
    fn subset_masks_round_trip_through_json(raw in 0u16..256) {
        let indices: Vec<usize> = (1..=8).filter(|i| raw & (1 << (i - 1)) != 0).collect();
        let mask = SubsetMask::from_indices(&indices, 8).unwrap();
        let text = serde_json::to_string(&mask).unwrap();
        let back: SubsetMask = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(mask, back);
        prop_assert_eq!(text, format!("{:?}", indices).replace(' ', ""));
    }
}
