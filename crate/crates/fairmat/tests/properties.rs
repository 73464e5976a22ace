//! Cross-module properties on seeded random instances: the envy
//! sufficiency implication, proportionality implying envy-freeness for two
//! agents, and relabeling equivariance of the efficiency verdict.

use fairmat::domain::{
    induced_fractional, Block, ConstraintFamily, DeterministicAssignment, FamilyKind,
    FractionalAssignment, Instance, ItemSet, Lottery, Preference,
};
use fairmat::instances::{random_instance, FamilyStyle, RandomParams};
use fairmat::rat::{rat, Rat};
use fairmat::sdrel::{ef_sufficient_matroid, is_sd_efficient, is_sd_envy_free, is_sd_proportional};
use fairmat::util::SplitMix64;
use fairmat::verify::decompose;

/// A random lottery over valid assignments; its induced matrix is feasible
/// by construction.
fn random_feasible(inst: &Instance, rng: &mut SplitMix64) -> (Lottery, FractionalAssignment) {
    let assignments = fairmat::exactlp::enumerate_assignments(inst).unwrap();
    let k = rng.range(1, 3.min(assignments.len()));
    let entries: Vec<(Rat, DeterministicAssignment)> = (0..k)
        .map(|_| {
            (
                rat(1, k as i64),
                assignments[rng.below(assignments.len())].clone(),
            )
        })
        .collect();
    let lottery = Lottery::from_weighted(entries);
    let pi = induced_fractional(&lottery, inst.m());
    (lottery, pi)
}

/// When every ordered pair passes the matroid sufficiency check, every
/// lottery inducing the matrix is envy-free: both the original lottery and
/// an independent re-decomposition.
#[test]
fn sufficiency_implies_exact_envy_freeness() {
    let mut rng = SplitMix64::new(0x50F0);
    let mut hits = 0;
    for _ in 0..120 {
        let inst = random_instance(
            &RandomParams {
                n: rng.range(2, 3),
                m: rng.range(2, 5),
                family: FamilyStyle::Laminar,
                identical_prefs: true,
                identical_families: rng.chance(1, 2),
            },
            rng.next_u64(),
        );
        // The random-lottery stream supplies mostly insufficient matrices;
        // the eating output supplies sufficient ones.
        let (lottery, pi) = random_feasible(&inst, &mut rng);
        let eating = fairmat::mechanisms::mech_eating(&inst).unwrap().pi;
        for pi in [pi, eating] {
            if ef_sufficient_matroid(&inst, &pi).unwrap().all_hold() {
                hits += 1;
                if induced_fractional(&lottery, inst.m()) == pi {
                    assert!(
                        is_sd_envy_free(&inst, &lottery).unwrap().all_satisfied(),
                        "sufficiency held but the inducing lottery shows envy\n{inst:?}\n{pi:?}"
                    );
                }
                let re = decompose(&inst, &pi).unwrap();
                assert!(
                    is_sd_envy_free(&inst, &re).unwrap().all_satisfied(),
                    "sufficiency held but a decomposition shows envy\n{inst:?}\n{pi:?}"
                );
            }
        }
    }
    assert!(
        hits >= 40,
        "the stream should produce enough sufficient matrices, got {hits}"
    );
}

/// For two agents, a proportional feasible matrix already passes the
/// pairwise sufficiency check.
#[test]
fn proportionality_implies_sufficiency_for_two_agents() {
    let mut rng = SplitMix64::new(0x2EF1);
    let mut hits = 0;
    for _ in 0..150 {
        let inst = random_instance(
            &RandomParams {
                n: 2,
                m: rng.range(2, 5),
                family: FamilyStyle::Laminar,
                identical_prefs: rng.chance(1, 2),
                identical_families: rng.chance(1, 2),
            },
            rng.next_u64(),
        );
        let (_, pi) = random_feasible(&inst, &mut rng);
        let mech = fairmat::mechanisms::mech_two_agent(&inst).unwrap().pi;
        for pi in [pi, mech] {
            if is_sd_proportional(&inst, &pi).unwrap().iter().all(|&b| b) {
                hits += 1;
                assert!(
                    ef_sufficient_matroid(&inst, &pi).unwrap().all_hold(),
                    "proportional matrix failed sufficiency\n{inst:?}\n{pi:?}"
                );
            }
        }
    }
    assert!(
        hits >= 40,
        "the stream should produce enough proportional matrices, got {hits}"
    );
}

/// Re-encoding a laminar matroid by its maximal sets must classify as a
/// matroid and agree with the closed forms on ranks, reduced ranks,
/// choices, eating capacities, and reduced-polytope membership — this
/// drives the subset-enumeration branches that laminar kinds never touch.
#[test]
fn explicit_encoding_matches_laminar_closed_forms() {
    use fairmat::matroid::{choice, eat_capacity, in_reduced_polytope, RankOracle, ReducedRank};
    let mut rng = SplitMix64::new(0xE11C);
    let mut checked = 0;
    for _ in 0..60 {
        let m = rng.range(2, 5);
        let inst = random_instance(
            &RandomParams {
                n: 1,
                m,
                family: FamilyStyle::Laminar,
                identical_prefs: false,
                identical_families: false,
            },
            rng.next_u64(),
        );
        let laminar = &inst.constraints[0];
        // Maximal feasible sets of the same family, explicitly.
        let all: Vec<ItemSet> = ItemSet::full(m)
            .subsets()
            .filter(|&s| fairmat::domain::membership(laminar, s))
            .collect();
        let maximal: Vec<ItemSet> = all
            .iter()
            .copied()
            .filter(|&s| !all.iter().any(|&t| s != t && s.is_subset_of(t)))
            .collect();
        let explicit = ConstraintFamily::explicit_maximal(m, maximal);
        assert!(
            explicit.is_matroid(),
            "re-encoded matroid must pass the augmentation check"
        );
        checked += 1;

        let a = RankOracle::new(laminar).unwrap();
        let b = RankOracle::new(&explicit).unwrap();
        for set in ItemSet::full(m).subsets() {
            assert_eq!(a.rank(set), b.rank(set));
        }
        let x: Vec<Rat> = (0..m).map(|_| rat(rng.range(0, 7) as i64, 4)).collect();
        let ra = ReducedRank::new(&a, x.clone());
        let rb = ReducedRank::new(&b, x.clone());
        for set in ItemSet::full(m).subsets() {
            assert_eq!(
                ra.value(set).unwrap(),
                rb.value(set).unwrap(),
                "reduced rank at {set:?}"
            );
        }
        let fa = choice(&a, &inst.prefs[0], &x).unwrap();
        let fb = choice(&b, &inst.prefs[0], &x).unwrap();
        assert_eq!(fa, fb, "choice differs across encodings");
        for e in 0..m {
            assert_eq!(
                eat_capacity(&a, &fa, e).unwrap(),
                eat_capacity(&b, &fa, e).unwrap(),
                "capacity differs at item {e}"
            );
        }
        assert!(in_reduced_polytope(&ra, &fa).unwrap());
        assert!(in_reduced_polytope(&rb, &fb).unwrap());
    }
    assert!(checked >= 50);
}

/// The efficiency verdict must not depend on the polytope representation:
/// forcing the vertex route (with its profile-maximal pruning) on matroid
/// instances gives the same answer as the rank-inequality route.
#[test]
fn efficiency_verdict_matches_across_representations() {
    use fairmat::exactlp::{enumerate_assignments, optimize_over_p, PolytopeP};
    use fairmat::sdrel::{borda_objective, borda_value, dominance_rows};
    let mut rng = SplitMix64::new(0xD0D0);
    for _ in 0..40 {
        let inst = random_instance(
            &RandomParams {
                n: rng.range(2, 3),
                m: rng.range(2, 5),
                family: FamilyStyle::Laminar,
                identical_prefs: rng.chance(1, 2),
                identical_families: rng.chance(1, 2),
            },
            rng.next_u64(),
        );
        let (_, pi) = random_feasible(&inst, &mut rng);
        let (hrep_verdict, _) = is_sd_efficient(&inst, &pi).unwrap();
        let vrep = PolytopeP::VRep {
            n: inst.n(),
            m: inst.m(),
            assignments: enumerate_assignments(&inst).unwrap(),
        };
        let mut extras = Vec::new();
        for i in 0..inst.n() {
            extras.extend(dominance_rows(&inst, i, pi.row(i)));
        }
        let opt = optimize_over_p(&inst, &vrep, &borda_objective(&inst), &extras).unwrap();
        let vrep_verdict = opt.value == borda_value(&inst, &pi);
        assert_eq!(
            hrep_verdict, vrep_verdict,
            "representations disagree on efficiency\n{inst:?}\n{pi:?}"
        );
    }
}

fn permute_family(family: &ConstraintFamily, perm: &[usize]) -> ConstraintFamily {
    let m = family.m();
    let remap = |s: ItemSet| ItemSet::from_items(s.iter().map(|e| perm[e]));
    match family.kind() {
        FamilyKind::Free => ConstraintFamily::free(m),
        FamilyKind::Uniform { cap } => ConstraintFamily::uniform(m, *cap),
        FamilyKind::Partition { blocks } => ConstraintFamily::partition(
            m,
            blocks
                .iter()
                .map(|b| Block {
                    items: remap(b.items),
                    cap: b.cap,
                })
                .collect(),
        ),
        FamilyKind::Budget { weights, budget } => {
            let mut w = vec![0u64; m];
            for (e, &weight) in weights.iter().enumerate() {
                w[perm[e]] = weight;
            }
            ConstraintFamily::budget(m, w, budget.clone())
        }
        FamilyKind::ExplicitMaximal { maximal } => {
            ConstraintFamily::explicit_maximal(m, maximal.iter().map(|&s| remap(s)).collect())
        }
    }
}

/// The efficiency verdict is invariant under relabeling agents and items.
#[test]
fn efficiency_verdict_is_relabeling_equivariant() {
    let mut rng = SplitMix64::new(0xE9_01);
    for _ in 0..60 {
        let style = if rng.chance(1, 2) {
            FamilyStyle::Laminar
        } else {
            FamilyStyle::ExplicitHereditary
        };
        let inst = random_instance(
            &RandomParams {
                n: rng.range(2, 3),
                m: rng.range(2, 4),
                family: style,
                identical_prefs: false,
                identical_families: false,
            },
            rng.next_u64(),
        );
        let (_, pi) = random_feasible(&inst, &mut rng);
        let (verdict, _) = is_sd_efficient(&inst, &pi).unwrap();

        let n = inst.n();
        let m = inst.m();
        let mut agent_perm: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut agent_perm);
        let mut item_perm: Vec<usize> = (0..m).collect();
        rng.shuffle(&mut item_perm);

        let labels: Vec<String> = {
            let mut v = vec![String::new(); m];
            for e in 0..m {
                v[item_perm[e]] = inst.label(e).to_string();
            }
            v
        };
        let label_refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
        let prefs: Vec<Preference> = agent_perm
            .iter()
            .map(|&old| {
                Preference::new(
                    inst.prefs[old]
                        .order()
                        .iter()
                        .map(|&e| item_perm[e])
                        .collect(),
                )
            })
            .collect();
        let constraints: Vec<ConstraintFamily> = agent_perm
            .iter()
            .map(|&old| permute_family(&inst.constraints[old], &item_perm))
            .collect();
        let relabeled = Instance::new(&label_refs, prefs, constraints);
        let mut rows = vec![vec![Rat::from_integer(0.into()); m]; n];
        for (new_i, &old_i) in agent_perm.iter().enumerate() {
            for e in 0..m {
                rows[new_i][item_perm[e]] = pi.entry(old_i, e).clone();
            }
        }
        let relabeled_pi = FractionalAssignment::new(rows);
        let (relabeled_verdict, _) = is_sd_efficient(&relabeled, &relabeled_pi).unwrap();
        assert_eq!(
            verdict, relabeled_verdict,
            "relabeling flipped the efficiency verdict\n{inst:?}\n{pi:?}"
        );
    }
}
