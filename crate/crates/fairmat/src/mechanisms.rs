//! The five assignment mechanisms. Declared guarantees are re-checked by
//! the sdrel predicates in tests, never trusted.

use crate::domain::{
    membership, ConstraintFamily, DeterministicAssignment, FractionalAssignment, Instance, ItemSet,
    Lottery,
};
use crate::exactlp::{build_p, frank_wolfe_qp, optimize_over_p, FwError, FwOptions, PolytopeError};
use crate::matroid::{choice, eat_capacity, MatroidError, RankOracle};
use crate::rat::{self, Rat};
use crate::sdrel::{borda_objective, dominance_rows, half_vector};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Guarantee {
    SdEfficient,
    SdEnvyFree,
    SdProportional,
    Anonymous,
}

/// A mechanism's output: the exact matrix, an optional explicit lottery,
/// and the guarantees the mechanism declares for it.
#[derive(Clone, Debug)]
pub struct MechanismResult {
    pub pi: FractionalAssignment,
    pub lottery: Option<Lottery>,
    pub provenance: String,
    pub guarantees: Vec<Guarantee>,
}

#[derive(Clone, Debug, Error)]
pub enum MechanismError {
    #[error("mechanism requires exactly {expected} agents, got {got}")]
    WrongAgentCount { expected: usize, got: usize },
    #[error("mechanism requires matroid constraint families")]
    NotAMatroid,
    #[error("mechanism requires identical preferences")]
    PreferencesNotIdentical,
    #[error("mechanism requires identical preferences and identical constraints")]
    NotIdenticalAgents,
    #[error("partitionability search exceeded the enumeration guard")]
    EnumerationTooLarge,
    #[error(transparent)]
    Matroid(#[from] MatroidError),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    FrankWolfe(#[from] FwError),
}

/// Two-agent matroid mechanism: maximize Borda welfare over P subject to
/// each agent weakly dominating her choice at the all-halves vector. The
/// optimum is sd-proportional by construction, hence sd-envy-free, and any
/// welfare maximizer among dominating points is sd-efficient.
pub fn mech_two_agent(inst: &Instance) -> Result<MechanismResult, MechanismError> {
    if inst.n() != 2 {
        return Err(MechanismError::WrongAgentCount {
            expected: 2,
            got: inst.n(),
        });
    }
    if !inst.all_matroids() {
        return Err(MechanismError::NotAMatroid);
    }
    let half = half_vector(inst.m());
    let mut extras = Vec::new();
    for i in 0..2 {
        let oracle = RankOracle::new(&inst.constraints[i])?;
        let target = choice(&oracle, &inst.prefs[i], &half)?;
        extras.extend(dominance_rows(inst, i, &target));
    }
    let p = build_p(inst)?;
    let opt = optimize_over_p(inst, &p, &borda_objective(inst), &extras)?;
    Ok(MechanismResult {
        pi: opt.pi,
        lottery: opt.combination,
        provenance: "two-agent proportional welfare maximizer".into(),
        guarantees: vec![
            Guarantee::SdEfficient,
            Guarantee::SdEnvyFree,
            Guarantee::SdProportional,
        ],
    })
}

/// Item-by-item eating under heterogeneous matroid constraints and a
/// common preference order, in exact rationals. Within each item the loop
/// is event-driven: every pass either exhausts the item's remaining supply
/// or saturates some agent's capacity.
pub fn mech_eating(inst: &Instance) -> Result<MechanismResult, MechanismError> {
    if !inst.identical_preferences() {
        return Err(MechanismError::PreferencesNotIdentical);
    }
    if !inst.all_matroids() {
        return Err(MechanismError::NotAMatroid);
    }
    let n = inst.n();
    let m = inst.m();
    let oracles: Vec<RankOracle> = inst
        .constraints
        .iter()
        .map(RankOracle::new)
        .collect::<Result<_, _>>()?;
    let mut x = vec![vec![Rat::zero(); m]; n];
    for &item in inst.prefs[0].order() {
        loop {
            let caps: Vec<Rat> = (0..n)
                .map(|i| eat_capacity(&oracles[i], &x[i], item))
                .collect::<Result<_, _>>()?;
            let eaters: Vec<usize> = (0..n).filter(|&i| caps[i].is_positive()).collect();
            let supplied: Rat = (0..n).map(|i| &x[i][item]).fold(Rat::zero(), |a, v| a + v);
            if eaters.is_empty() || supplied.is_one() {
                break;
            }
            let fair_share = (Rat::one() - &supplied) / rat::int(eaters.len() as i64);
            let step = eaters
                .iter()
                .map(|&i| caps[i].clone())
                .fold(fair_share, |acc, c| acc.min(c));
            debug_assert!(step.is_positive());
            for &i in &eaters {
                x[i][item] += &step;
            }
        }
    }
    Ok(MechanismResult {
        pi: FractionalAssignment::new(x),
        lottery: None,
        provenance: "synchronized eating over the common preference".into(),
        guarantees: vec![Guarantee::SdEfficient, Guarantee::SdEnvyFree],
    })
}

/// Can `set` be partitioned into `n` disjoint feasible bundles of the
/// common family? Matroid fast path: the covering criterion
/// `|X| ≤ n·r(X)` for every subset. General hereditary families fall back
/// to backtracking.
pub fn partitionable(
    family: &ConstraintFamily,
    set: ItemSet,
    n: usize,
) -> Result<bool, MechanismError> {
    let guard = crate::guards().subset_m;
    if set.len() > guard {
        return Err(MechanismError::EnumerationTooLarge);
    }
    if family.is_matroid() {
        let oracle = RankOracle::new(family)?;
        for sub in set.subsets() {
            if sub.len() > n * oracle.rank(sub) {
                return Ok(false);
            }
        }
        return Ok(true);
    }
    Ok(find_partition(family, set, n).is_some())
}

/// Backtracking search for an explicit partition of `set` into `n`
/// feasible bundles.
pub fn find_partition(family: &ConstraintFamily, set: ItemSet, n: usize) -> Option<Vec<ItemSet>> {
    let items: Vec<usize> = set.iter().collect();
    let mut bundles = vec![ItemSet::EMPTY; n];
    fn rec(
        family: &ConstraintFamily,
        items: &[usize],
        pos: usize,
        bundles: &mut Vec<ItemSet>,
    ) -> bool {
        if pos == items.len() {
            return true;
        }
        let e = items[pos];
        let mut tried = Vec::new();
        for i in 0..bundles.len() {
            // Identical empty bundles are interchangeable.
            if tried.contains(&bundles[i]) {
                continue;
            }
            tried.push(bundles[i]);
            let candidate = bundles[i].with(e);
            if membership(family, candidate) {
                bundles[i] = candidate;
                if rec(family, items, pos + 1, bundles) {
                    return true;
                }
                bundles[i] = bundles[i].without(e);
            }
        }
        false
    }
    if rec(family, &items, 0, &mut bundles) {
        Some(bundles)
    } else {
        None
    }
}

/// Identical agents: take the deterministic assignment whose assigned-item
/// union is lexicographically maximum under the common preference and
/// rotate its bundles uniformly. All rows of the induced matrix are equal.
pub fn mech_rotation(inst: &Instance) -> Result<MechanismResult, MechanismError> {
    if !inst.identical_preferences() || !inst.identical_constraints() {
        return Err(MechanismError::NotIdenticalAgents);
    }
    let n = inst.n();
    let m = inst.m();
    let family = &inst.constraints[0];
    // Greedy over the preference order: keep an item exactly when the kept
    // set stays partitionable. Partitionable sets form a hereditary family,
    // so the greedy set is the lexicographic maximum.
    let mut kept = ItemSet::EMPTY;
    for &e in inst.prefs[0].order() {
        if partitionable(family, kept.with(e), n)? {
            kept = kept.with(e);
        }
    }
    let bundles = find_partition(family, kept, n).expect("kept set is partitionable");
    let base = DeterministicAssignment::new(bundles);
    let share = rat::one() / rat::int(n as i64);
    let mut entries = Vec::with_capacity(n);
    for shift in 0..n {
        let rotated: Vec<ItemSet> = (0..n).map(|i| base.bundles[(i + shift) % n]).collect();
        entries.push((share.clone(), DeterministicAssignment::new(rotated)));
    }
    let lottery = Lottery::from_weighted(entries);
    let pi = crate::domain::induced_fractional(&lottery, m);
    Ok(MechanismResult {
        pi,
        lottery: Some(lottery),
        provenance: "uniform rotation of the lexicographically maximal assignment".into(),
        guarantees: vec![Guarantee::SdEfficient, Guarantee::SdEnvyFree],
    })
}

/// The naive generalized serial mechanism: at every moment each agent eats
/// her most-preferred item that still has supply and for which her
/// marginal capacity is positive, at unit speed. Event-driven and exact.
/// Declares no guarantees; it exists to demonstrate failure.
pub fn mech_naive_ps(inst: &Instance) -> Result<MechanismResult, MechanismError> {
    if !inst.all_matroids() {
        return Err(MechanismError::NotAMatroid);
    }
    let n = inst.n();
    let m = inst.m();
    let oracles: Vec<RankOracle> = inst
        .constraints
        .iter()
        .map(RankOracle::new)
        .collect::<Result<_, _>>()?;
    let mut x = vec![vec![Rat::zero(); m]; n];
    let mut remaining = vec![Rat::one(); m];
    loop {
        // Current target per agent: best item with supply and capacity.
        let mut targets: Vec<Option<(usize, Rat)>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut found = None;
            for &e in inst.prefs[i].order() {
                if !remaining[e].is_positive() {
                    continue;
                }
                let cap = eat_capacity(&oracles[i], &x[i], e)?;
                if cap.is_positive() {
                    found = Some((e, cap));
                    break;
                }
            }
            targets.push(found);
        }
        if targets.iter().all(Option::is_none) {
            break;
        }
        let mut eaters_of = vec![0i64; m];
        for t in targets.iter().flatten() {
            eaters_of[t.0] += 1;
        }
        // Largest step before an item exhausts or a capacity hits zero.
        let mut step: Option<Rat> = None;
        let mut consider = |bound: Rat| {
            step = Some(match step.take() {
                Some(s) => s.min(bound),
                None => bound,
            });
        };
        for e in 0..m {
            if eaters_of[e] > 0 {
                consider(&remaining[e] / rat::int(eaters_of[e]));
            }
        }
        for t in targets.iter().flatten() {
            consider(t.1.clone());
        }
        let step = step.expect("some agent is eating");
        debug_assert!(step.is_positive());
        for (i, t) in targets.iter().enumerate() {
            if let Some((e, _)) = t {
                x[i][*e] += &step;
            }
        }
        for e in 0..m {
            if eaters_of[e] > 0 {
                remaining[e] -= &step * rat::int(eaters_of[e]);
            }
        }
    }
    Ok(MechanismResult {
        pi: FractionalAssignment::new(x),
        lottery: None,
        provenance: "naive generalized serial eating".into(),
        guarantees: vec![],
    })
}

/// Anonymous mechanism: conditional-gradient minimization of the strictly
/// convex prefix-deficit objective, followed by a snap pass that rounds
/// near-rational coordinates (denominator ≤ 48) and re-verifies feasibility
/// exactly. Declares sd-efficiency only when the snap verifies.
pub fn mech_anonymous(inst: &Instance, tol: f64) -> Result<MechanismResult, MechanismError> {
    let p = build_p(inst)?;
    let fw = frank_wolfe_qp(
        inst,
        &p,
        FwOptions {
            tol,
            ..Default::default()
        },
    )?;
    let snapped = snap_matrix(&fw.x, 48, 1e-6);
    let mut guarantees = vec![Guarantee::Anonymous];
    let (pi, snap_ok) = match snapped {
        Some(candidate) if crate::verify::is_feasible(inst, &candidate).unwrap_or(false) => {
            guarantees.push(Guarantee::SdEfficient);
            (candidate, true)
        }
        _ => {
            let exact = FractionalAssignment::new(
                fw.x.iter()
                    .map(|row| {
                        row.iter()
                            .map(|&v| rat::from_f64(v).expect("finite"))
                            .collect()
                    })
                    .collect(),
            );
            (exact, false)
        }
    };
    Ok(MechanismResult {
        pi,
        lottery: None,
        provenance: format!(
            "anonymous convex program (gap {:.3e}, {} iterations, snapped: {snap_ok})",
            fw.gap, fw.iterations
        ),
        guarantees,
    })
}

/// Round every coordinate to the nearest rational with denominator at most
/// `max_den`, provided each rounding moves the value less than `eps`.
fn snap_matrix(x: &[Vec<f64>], max_den: u64, eps: f64) -> Option<FractionalAssignment> {
    let mut rows = Vec::with_capacity(x.len());
    for row in x {
        let mut out = Vec::with_capacity(row.len());
        for &v in row {
            let r = rat::nearest_with_denominator_at_most(v, max_den)?;
            if (rat::to_f64(&r) - v).abs() > eps {
                return None;
            }
            out.push(r);
        }
        rows.push(out);
    }
    Some(FractionalAssignment::new(rows))
}
