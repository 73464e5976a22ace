//! Stochastic-dominance comparisons and the fairness/efficiency predicates:
//! envy-freeness (exact and matroid-sufficient forms), proportionality, and
//! efficiency via an exact Borda-weighted linear program.

use crate::domain::{
    induced_fractional, membership, FractionalAssignment, Instance, ItemSet, Lottery, Preference,
};
use crate::exactlp::{build_p, optimize_over_p, PiConstraint, PolytopeError, Rel};
use crate::matroid::{choice, MatroidError, RankOracle};
use crate::rat::{self, Rat};
use num_traits::Zero;
use thiserror::Error;

#[derive(Clone, Debug, Error)]
pub enum SdError {
    #[error("constraint families are not identical across agents")]
    ConstraintsNotIdentical,
    #[error("bundle of size {size} exceeds the subset enumeration guard {guard}")]
    GroundSetTooLarge { size: usize, guard: usize },
    #[error(transparent)]
    Matroid(#[from] MatroidError),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    StrictlyDominates,
    Equal,
    DominatedStrictly,
    Incomparable,
}

/// Outcome of one stochastic-dominance comparison. The witness is an item
/// where a cumulative inequality is strict (for strict dominance) or
/// violated (for incomparability); absent only for equality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DominanceVerdict {
    pub relation: Relation,
    pub witness: Option<usize>,
}

impl DominanceVerdict {
    /// Weak dominance of the left argument over the right.
    pub fn weakly_dominates(&self) -> bool {
        matches!(self.relation, Relation::StrictlyDominates | Relation::Equal)
    }
}

/// `U(≻, e)`: the items not worse than `e`, i.e. the preference prefix
/// ending at `e`.
pub fn upper_set(pref: &Preference, e: usize) -> ItemSet {
    pref.prefix(pref.rank(e) + 1)
}

/// Cumulative sums of `v` along the preference order.
pub fn prefix_sums(pref: &Preference, v: &[Rat]) -> Vec<Rat> {
    let mut acc = Rat::zero();
    pref.order()
        .iter()
        .map(|&e| {
            acc += &v[e];
            acc.clone()
        })
        .collect()
}

/// Exact comparison of all cumulative sums of `x` and `y` under the
/// preference.
pub fn sd_compare(pref: &Preference, x: &[Rat], y: &[Rat]) -> DominanceVerdict {
    let xs = prefix_sums(pref, x);
    let ys = prefix_sums(pref, y);
    let mut some_pos = None;
    let mut some_neg = None;
    for k in 0..pref.m() {
        if xs[k] > ys[k] {
            some_pos.get_or_insert(pref.item_at(k));
        } else if xs[k] < ys[k] {
            some_neg.get_or_insert(pref.item_at(k));
        }
    }
    match (some_pos, some_neg) {
        (None, None) => DominanceVerdict {
            relation: Relation::Equal,
            witness: None,
        },
        (Some(w), None) => DominanceVerdict {
            relation: Relation::StrictlyDominates,
            witness: Some(w),
        },
        (None, Some(w)) => DominanceVerdict {
            relation: Relation::DominatedStrictly,
            witness: Some(w),
        },
        (Some(_), Some(w)) => DominanceVerdict {
            relation: Relation::Incomparable,
            witness: Some(w),
        },
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvyWitness {
    pub item: usize,
    pub lhs: Rat,
    pub rhs: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairEnvy {
    pub i: usize,
    pub j: usize,
    pub satisfied: bool,
    pub witness: Option<EnvyWitness>,
}

/// Envy verdicts over every ordered agent pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvyReport {
    pub pairs: Vec<PairEnvy>,
}

impl EnvyReport {
    pub fn all_satisfied(&self) -> bool {
        self.pairs.iter().all(|p| p.satisfied)
    }

    pub fn violating_pairs(&self) -> Vec<(usize, usize)> {
        self.pairs
            .iter()
            .filter(|p| !p.satisfied)
            .map(|p| (p.i, p.j))
            .collect()
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<&PairEnvy> {
        self.pairs.iter().find(|p| p.i == i && p.j == j)
    }
}

/// `max{ |Y ∩ U| : Y ⊆ bundle, Y feasible }`. Heredity lets the search be
/// restricted to subsets of `bundle ∩ U`; for matroids that maximum is the
/// rank. Greedy is not assumed valid outside matroids.
pub fn best_subbundle(
    family: &crate::domain::ConstraintFamily,
    oracle: Option<&RankOracle>,
    bundle: ItemSet,
    upper: ItemSet,
) -> Result<usize, SdError> {
    let restricted = bundle.intersect(upper);
    if let Some(oracle) = oracle {
        return Ok(oracle.rank(restricted));
    }
    let guard = crate::guards().subset_m;
    if restricted.len() > guard {
        return Err(SdError::GroundSetTooLarge {
            size: restricted.len(),
            guard,
        });
    }
    let mut best = 0;
    for y in restricted.subsets() {
        if y.len() > best && membership(family, y) {
            best = y.len();
        }
    }
    Ok(best)
}

/// The exact envy inequality of the definition, per ordered pair and item:
/// the agent's own cumulative share against the expected best feasible
/// sub-bundle she could extract from the other agent's realized bundle.
pub fn is_sd_envy_free(inst: &Instance, lottery: &Lottery) -> Result<EnvyReport, SdError> {
    let n = inst.n();
    let m = inst.m();
    let pi = induced_fractional(lottery, m);
    let oracles: Vec<Option<RankOracle>> = inst
        .constraints
        .iter()
        .map(|f| {
            if f.is_matroid() {
                RankOracle::new(f).ok()
            } else {
                None
            }
        })
        .collect();
    let mut pairs = Vec::new();
    for i in 0..n {
        let own = prefix_sums(&inst.prefs[i], pi.row(i));
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut witness = None;
            for k in 0..m {
                let upper = inst.prefs[i].prefix(k + 1);
                let mut rhs = Rat::zero();
                for (p, x) in &lottery.support {
                    let best = best_subbundle(
                        &inst.constraints[i],
                        oracles[i].as_ref(),
                        x.bundles[j],
                        upper,
                    )?;
                    rhs += p * rat::int(best as i64);
                }
                if own[k] < rhs {
                    witness = Some(EnvyWitness {
                        item: inst.prefs[i].item_at(k),
                        lhs: own[k].clone(),
                        rhs,
                    });
                    break;
                }
            }
            pairs.push(PairEnvy {
                i,
                j,
                satisfied: witness.is_none(),
                witness,
            });
        }
    }
    Ok(EnvyReport { pairs })
}

/// The identical-constraint form: pairwise weak dominance of the rows.
pub fn is_sd_envy_free_fractional(
    inst: &Instance,
    pi: &FractionalAssignment,
) -> Result<EnvyReport, SdError> {
    if !inst.identical_constraints() {
        return Err(SdError::ConstraintsNotIdentical);
    }
    let n = inst.n();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let verdict = sd_compare(&inst.prefs[i], pi.row(i), pi.row(j));
            let witness = if verdict.weakly_dominates() {
                None
            } else {
                let item = verdict
                    .witness
                    .expect("non-equal verdict carries a witness");
                let k = inst.prefs[i].rank(item);
                Some(EnvyWitness {
                    item,
                    lhs: prefix_sums(&inst.prefs[i], pi.row(i))[k].clone(),
                    rhs: prefix_sums(&inst.prefs[i], pi.row(j))[k].clone(),
                })
            };
            pairs.push(PairEnvy {
                i,
                j,
                satisfied: witness.is_none(),
                witness,
            });
        }
    }
    Ok(EnvyReport { pairs })
}

/// Per ordered pair: does the agent's own row weakly dominate the choice
/// applied to the other agent's row? All-true is sufficient for
/// envy-freeness of every lottery inducing the matrix, on matroids.
#[derive(Clone, Debug)]
pub struct SufficiencyReport {
    pub pairs: Vec<(usize, usize, bool)>,
}

impl SufficiencyReport {
    pub fn all_hold(&self) -> bool {
        self.pairs.iter().all(|&(_, _, ok)| ok)
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<bool> {
        self.pairs
            .iter()
            .find(|&&(a, b, _)| a == i && b == j)
            .map(|&(_, _, ok)| ok)
    }
}

pub fn ef_sufficient_matroid(
    inst: &Instance,
    pi: &FractionalAssignment,
) -> Result<SufficiencyReport, SdError> {
    let oracles: Vec<RankOracle> = inst
        .constraints
        .iter()
        .map(RankOracle::new)
        .collect::<Result<_, _>>()?;
    let mut pairs = Vec::new();
    for i in 0..inst.n() {
        for j in 0..inst.n() {
            if i == j {
                continue;
            }
            let target = choice(&oracles[i], &inst.prefs[i], pi.row(j))?;
            let ok = sd_compare(&inst.prefs[i], pi.row(i), &target).weakly_dominates();
            pairs.push((i, j, ok));
        }
    }
    Ok(SufficiencyReport { pairs })
}

/// The all-halves vector.
pub fn half_vector(m: usize) -> Vec<Rat> {
    vec![rat::rat(1, 2); m]
}

/// Per agent: does her row weakly dominate the choice at the all-halves
/// vector? By the choice function's dominance property this is equivalent
/// to dominating every feasible vector below one half.
pub fn is_sd_proportional(
    inst: &Instance,
    pi: &FractionalAssignment,
) -> Result<Vec<bool>, SdError> {
    let mut out = Vec::with_capacity(inst.n());
    for i in 0..inst.n() {
        let oracle = RankOracle::new(&inst.constraints[i])?;
        let target = choice(&oracle, &inst.prefs[i], &half_vector(inst.m()))?;
        out.push(sd_compare(&inst.prefs[i], pi.row(i), &target).weakly_dominates());
    }
    Ok(out)
}

/// Strictly order-consistent integral weights: `w_e = |{e' : e ⪰ e'}|`.
pub fn borda_weights(pref: &Preference) -> Vec<Rat> {
    let m = pref.m();
    (0..m)
        .map(|e| rat::int((m - pref.rank(e)) as i64))
        .collect()
}

pub fn borda_objective(inst: &Instance) -> Vec<Vec<Rat>> {
    inst.prefs.iter().map(borda_weights).collect()
}

pub fn borda_value(inst: &Instance, pi: &FractionalAssignment) -> Rat {
    let mut total = Rat::zero();
    for (i, weights) in borda_objective(inst).iter().enumerate() {
        total += crate::util::dot(weights, pi.row(i));
    }
    total
}

/// Weak-dominance rows `prefix_i(y) ≥ prefix_i(target)` for one agent, as
/// extra constraints over the assignment variables.
pub fn dominance_rows(inst: &Instance, agent: usize, target: &[Rat]) -> Vec<PiConstraint> {
    let pref = &inst.prefs[agent];
    let targets = prefix_sums(pref, target);
    (0..inst.m())
        .map(|k| {
            let mut coeffs = vec![vec![Rat::zero(); inst.m()]; inst.n()];
            for &e in &pref.order()[..=k] {
                coeffs[agent][e] = rat::one();
            }
            PiConstraint {
                coeffs,
                rel: Rel::Ge,
                rhs: targets[k].clone(),
            }
        })
        .collect()
}

/// Is the feasible matrix sd-efficient? Maximizes the Borda welfare over
/// `P` subject to every agent weakly dominating her current row: any
/// feasible improvement strictly increases the welfare, so the matrix is
/// efficient exactly when the optimum equals its own welfare. Otherwise the
/// optimizer is returned as a dominating witness.
pub fn is_sd_efficient(
    inst: &Instance,
    pi: &FractionalAssignment,
) -> Result<(bool, Option<FractionalAssignment>), SdError> {
    let p = build_p(inst)?;
    let mut extras = Vec::new();
    for i in 0..inst.n() {
        extras.extend(dominance_rows(inst, i, pi.row(i)));
    }
    let opt = optimize_over_p(inst, &p, &borda_objective(inst), &extras)?;
    let own = borda_value(inst, pi);
    debug_assert!(
        opt.value >= own,
        "a feasible matrix is always its own candidate"
    );
    if opt.value > own {
        Ok((false, Some(opt.pi)))
    } else {
        Ok((true, None))
    }
}
