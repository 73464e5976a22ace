//! Independent oracles and machine-checkable certificates: feasibility
//! checking with constructive decompositions, the nonexistence
//! certifications, a desk-scale searcher for the open two-agent identical
//! case, and a cross-oracle for the choice function.
//!
//! Every certificate re-verifies through a pure checker that looks only at
//! the claim, never at how the certificate was found.

use crate::domain::{
    induced_fractional, ConstraintFamily, DeterministicAssignment, FractionalAssignment, Instance,
    ItemSet, Lottery, Preference,
};
use crate::exactlp::{
    enumerate_assignments, simplex, solver_rows, verify_infeasibility_certificate, Constraint,
    LinearProgram, PolytopeError, Rel, Sense, SimplexOutcome,
};
use crate::matroid::{MatroidError, RankOracle};
use crate::rat::{self, Rat};
use crate::sdrel::{borda_value, is_sd_efficient, prefix_sums, sd_compare, SdError};
use crate::util::SplitMix64;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Clone, Debug, Error)]
pub enum VerifyError {
    #[error("the matrix is not a feasible fractional assignment")]
    InfeasiblePoint,
    #[error("restricted polytope has dimension {dim}, beyond the vertex-enumeration cap")]
    DimensionTooLarge { dim: usize },
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Matroid(#[from] MatroidError),
    #[error(transparent)]
    Sd(#[from] SdError),
    #[error(transparent)]
    Instances(#[from] crate::instances::InstancesError),
}

/// The reason a matrix is outside the assignment polytope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InfeasibilityClaim {
    /// Farkas multipliers for the decomposition system
    /// `{ Σ_X λ_X χ_X = π, Σ λ = 1, λ ≥ 0 }` over every deterministic
    /// assignment.
    NotInPolytope { pi: FractionalAssignment },
    /// A violated valid rank inequality `π_i(X) ≤ r_i(X)`.
    ViolatedRankRow {
        pi: FractionalAssignment,
        agent: usize,
        set: ItemSet,
    },
    /// A violated column inequality `Σ_i π_{ie} ≤ 1`.
    ViolatedColumnRow {
        pi: FractionalAssignment,
        item: usize,
    },
    /// A negative entry.
    NegativeEntry {
        pi: FractionalAssignment,
        agent: usize,
        item: usize,
    },
    /// The envy system restricted to full-coverage support of the built-in
    /// two-agent hereditary instance is infeasible.
    FullCoverageEnvySystem,
}

/// Machine-checkable evidence objects.
#[derive(Clone, Debug)]
pub enum Certificate {
    /// `lottery` induces `pi` exactly.
    Decomposition {
        pi: FractionalAssignment,
        lottery: Lottery,
    },
    /// `witness` is feasible, weakly dominates `pi` for every agent, and
    /// differs from it.
    DominatingPoint {
        pi: FractionalAssignment,
        witness: FractionalAssignment,
    },
    /// The envy inequality fails for pair (i, j) at `item`.
    EnvyWitness {
        lottery: Lottery,
        i: usize,
        j: usize,
        item: usize,
        lhs: Rat,
        rhs: Rat,
    },
    /// An exact infeasibility certificate.
    LpInfeasibility {
        claim: InfeasibilityClaim,
        multipliers: Vec<Rat>,
    },
    /// For every assignment that leaves items unallocated, a dominating
    /// assignment that allocates them.
    SupportRestriction {
        dominations: Vec<(DeterministicAssignment, DeterministicAssignment)>,
    },
}

/// A self-contained certificate: the instance it talks about plus the
/// evidence.
#[derive(Clone, Debug)]
pub struct CertificateDoc {
    pub instance: Instance,
    pub certificate: Certificate,
}

/// The canonical decomposition system for `π` over the full assignment
/// list: one equality row per matrix entry plus the probability row.
fn decomposition_lp(
    assignments: &[DeterministicAssignment],
    pi: &FractionalAssignment,
) -> LinearProgram {
    let n = pi.n();
    let m = pi.m();
    let mut constraints = Vec::with_capacity(n * m + 1);
    for i in 0..n {
        for e in 0..m {
            let coeffs: Vec<Rat> = assignments
                .iter()
                .map(|x| {
                    if x.bundles[i].contains(e) {
                        Rat::one()
                    } else {
                        Rat::zero()
                    }
                })
                .collect();
            constraints.push(Constraint::new(coeffs, Rel::Eq, pi.entry(i, e).clone()));
        }
    }
    constraints.push(Constraint::new(
        vec![Rat::one(); assignments.len()],
        Rel::Eq,
        Rat::one(),
    ));
    LinearProgram {
        num_vars: assignments.len(),
        objective: vec![Rat::zero(); assignments.len()],
        sense: Sense::Max,
        constraints,
    }
}

/// Feasibility verdict only, with no certificate construction: the rank
/// sweep for matroid instances, one feasibility solve otherwise.
pub fn is_feasible(inst: &Instance, pi: &FractionalAssignment) -> Result<bool, VerifyError> {
    if pi.rows().iter().flatten().any(Signed::is_negative) {
        return Ok(false);
    }
    if inst.all_matroids() {
        if (0..inst.m()).any(|e| pi.column_sum(e) > Rat::one()) {
            return Ok(false);
        }
        for (agent, family) in inst.constraints.iter().enumerate() {
            let oracle = RankOracle::new(family).expect("matroid flag checked");
            for set in ItemSet::full(inst.m()).subsets() {
                if !set.is_empty() && pi.row_mass(agent, set) > rat::int(oracle.rank(set) as i64) {
                    return Ok(false);
                }
            }
        }
        return Ok(true);
    }
    let assignments = enumerate_assignments(inst)?;
    Ok(matches!(
        simplex(&decomposition_lp(&assignments, pi)),
        SimplexOutcome::Optimal { .. }
    ))
}

/// Is `π` in the assignment polytope? Matroid instances are checked
/// directly against the rank inequalities; general instances through the
/// decomposition system. The positive certificate is a decomposition, the
/// negative one an exact infeasibility witness. Exceeding an enumeration
/// guard is an error, never a verdict.
pub fn check_feasible(
    inst: &Instance,
    pi: &FractionalAssignment,
) -> Result<(bool, Certificate), VerifyError> {
    debug_assert_eq!((pi.n(), pi.m()), (inst.n(), inst.m()));
    for i in 0..pi.n() {
        for e in 0..pi.m() {
            if pi.entry(i, e).is_negative() {
                return Ok((
                    false,
                    Certificate::LpInfeasibility {
                        claim: InfeasibilityClaim::NegativeEntry {
                            pi: pi.clone(),
                            agent: i,
                            item: e,
                        },
                        multipliers: vec![],
                    },
                ));
            }
        }
    }
    if inst.all_matroids() {
        for e in 0..inst.m() {
            if pi.column_sum(e) > Rat::one() {
                return Ok((
                    false,
                    Certificate::LpInfeasibility {
                        claim: InfeasibilityClaim::ViolatedColumnRow {
                            pi: pi.clone(),
                            item: e,
                        },
                        multipliers: vec![],
                    },
                ));
            }
        }
        for (agent, family) in inst.constraints.iter().enumerate() {
            let oracle = RankOracle::new(family).expect("matroid flag checked");
            for set in ItemSet::full(inst.m()).subsets() {
                if set.is_empty() {
                    continue;
                }
                if pi.row_mass(agent, set) > rat::int(oracle.rank(set) as i64) {
                    return Ok((
                        false,
                        Certificate::LpInfeasibility {
                            claim: InfeasibilityClaim::ViolatedRankRow {
                                pi: pi.clone(),
                                agent,
                                set,
                            },
                            multipliers: vec![],
                        },
                    ));
                }
            }
        }
        let lottery = decompose_matroid(inst, pi);
        return Ok((
            true,
            Certificate::Decomposition {
                pi: pi.clone(),
                lottery,
            },
        ));
    }
    let assignments = enumerate_assignments(inst)?;
    let lp = decomposition_lp(&assignments, pi);
    match simplex(&lp) {
        SimplexOutcome::Optimal { point, .. } => {
            let entries: Vec<(Rat, DeterministicAssignment)> = point
                .iter()
                .zip(&assignments)
                .filter(|(w, _)| w.is_positive())
                .map(|(w, x)| (w.clone(), x.clone()))
                .collect();
            let lottery = Lottery::from_weighted(entries);
            Ok((
                true,
                Certificate::Decomposition {
                    pi: pi.clone(),
                    lottery,
                },
            ))
        }
        SimplexOutcome::Infeasible { certificate } => Ok((
            false,
            Certificate::LpInfeasibility {
                claim: InfeasibilityClaim::NotInPolytope { pi: pi.clone() },
                multipliers: certificate.multipliers,
            },
        )),
        SimplexOutcome::Unbounded { .. } => unreachable!("feasibility system has no objective"),
    }
}

/// Carathéodory walk for matroid instances: repeatedly peel off a vertex of
/// the face containing the current point. Every step makes a new row tight,
/// so the face dimension drops and the support stays within `n·m + 1`.
fn decompose_matroid(inst: &Instance, pi: &FractionalAssignment) -> Lottery {
    let n = inst.n();
    let m = inst.m();
    let rows = solver_rows(inst).expect("matroid instance within guards");
    let mut current = pi.clone();
    let mut remaining = Rat::one();
    let mut pieces: Vec<(Rat, DeterministicAssignment)> = Vec::new();
    loop {
        if current.is_integral() {
            let bundles: Vec<ItemSet> = (0..n)
                .map(|i| ItemSet::from_items((0..m).filter(|&e| current.entry(i, e).is_one())))
                .collect();
            pieces.push((remaining.clone(), DeterministicAssignment::new(bundles)));
            break;
        }
        // Vertex of the minimal face: keep tight rows tight, zero
        // coordinates zero.
        let support: Vec<usize> = (0..n * m)
            .filter(|idx| current.entry(idx / m, idx % m).is_positive())
            .collect();
        let flat_current: Vec<Rat> = (0..n * m)
            .map(|idx| current.entry(idx / m, idx % m).clone())
            .collect();
        let mut constraints = Vec::with_capacity(rows.len());
        for row in &rows {
            let value = crate::util::dot(&row.coeffs, &flat_current);
            let coeffs: Vec<Rat> = support.iter().map(|&idx| row.coeffs[idx].clone()).collect();
            let rel = if value == row.rhs { Rel::Eq } else { Rel::Le };
            constraints.push(Constraint::new(coeffs, rel, row.rhs.clone()));
        }
        let lp = LinearProgram {
            num_vars: support.len(),
            objective: vec![Rat::zero(); support.len()],
            sense: Sense::Max,
            constraints,
        };
        let point = match simplex(&lp) {
            SimplexOutcome::Optimal { point, .. } => point,
            other => unreachable!("face of a nonempty polytope is nonempty: {other:?}"),
        };
        let mut chi_flat = vec![Rat::zero(); n * m];
        for (k, &idx) in support.iter().enumerate() {
            chi_flat[idx] = point[k].clone();
        }
        debug_assert!(chi_flat.iter().all(|v| v.is_zero() || v.is_one()));
        // Largest step that keeps the residual inside the polytope.
        let mut delta: Option<Rat> = None;
        let mut bound = |b: Rat| {
            delta = Some(match delta.take() {
                Some(d) => d.min(b),
                None => b,
            });
        };
        for row in &rows {
            let slack_pi = &row.rhs - crate::util::dot(&row.coeffs, &flat_current);
            let slack_chi = &row.rhs - crate::util::dot(&row.coeffs, &chi_flat);
            if slack_chi.is_positive() {
                bound(&slack_pi / &slack_chi);
            }
        }
        for idx in 0..n * m {
            if chi_flat[idx].is_one() {
                bound(flat_current[idx].clone());
            }
        }
        let delta = delta.expect("a fractional point admits a binding row");
        debug_assert!(delta.is_positive() && delta < Rat::one());
        let bundles: Vec<ItemSet> = (0..n)
            .map(|i| ItemSet::from_items((0..m).filter(|&e| chi_flat[i * m + e].is_one())))
            .collect();
        pieces.push((&remaining * &delta, DeterministicAssignment::new(bundles)));
        let scale = Rat::one() - &delta;
        let mut next = FractionalAssignment::zeros(n, m);
        for i in 0..n {
            for e in 0..m {
                let v = (current.entry(i, e) - &delta * &chi_flat[i * m + e]) / &scale;
                next.set_entry(i, e, v);
            }
        }
        current = next;
        remaining *= scale;
        debug_assert!(pieces.len() <= n * m + 1);
    }
    Lottery::from_weighted(pieces)
}

/// Exact lottery with `induced_fractional(lottery) = π`, support at most
/// `n·m + 1`.
pub fn decompose(inst: &Instance, pi: &FractionalAssignment) -> Result<Lottery, VerifyError> {
    match check_feasible(inst, pi)? {
        (true, Certificate::Decomposition { lottery, .. }) => Ok(lottery),
        (true, _) => unreachable!("positive check always carries a decomposition"),
        (false, _) => Err(VerifyError::InfeasiblePoint),
    }
}

/// Re-check any certificate against its instance. Checkers recompute the
/// claim from scratch; the only shared machinery is the pure multiplier
/// arithmetic of the Farkas check.
pub fn check_certificate(doc: &CertificateDoc) -> Result<bool, VerifyError> {
    let inst = &doc.instance;
    match &doc.certificate {
        Certificate::Decomposition { pi, lottery } => {
            Ok(lottery.is_valid(inst) && induced_fractional(lottery, inst.m()) == *pi)
        }
        Certificate::DominatingPoint { pi, witness } => {
            if witness == pi {
                return Ok(false);
            }
            if !is_feasible(inst, witness)? {
                return Ok(false);
            }
            Ok((0..inst.n())
                .all(|i| sd_compare(&inst.prefs[i], witness.row(i), pi.row(i)).weakly_dominates()))
        }
        Certificate::EnvyWitness {
            lottery,
            i,
            j,
            item,
            lhs,
            rhs,
        } => {
            if !lottery.is_valid(inst) {
                return Ok(false);
            }
            let pi = induced_fractional(lottery, inst.m());
            let k = inst.prefs[*i].rank(*item);
            let own = prefix_sums(&inst.prefs[*i], pi.row(*i))[k].clone();
            let upper = crate::sdrel::upper_set(&inst.prefs[*i], *item);
            let oracle = if inst.constraints[*i].is_matroid() {
                RankOracle::new(&inst.constraints[*i]).ok()
            } else {
                None
            };
            let mut expected = Rat::zero();
            for (p, x) in &lottery.support {
                let best = crate::sdrel::best_subbundle(
                    &inst.constraints[*i],
                    oracle.as_ref(),
                    x.bundles[*j],
                    upper,
                )?;
                expected += p * rat::int(best as i64);
            }
            Ok(own == *lhs && expected == *rhs && lhs < rhs)
        }
        Certificate::LpInfeasibility { claim, multipliers } => match claim {
            InfeasibilityClaim::NotInPolytope { pi } => {
                let assignments = enumerate_assignments(inst)?;
                let lp = decomposition_lp(&assignments, pi);
                Ok(verify_infeasibility_certificate(
                    &lp,
                    &crate::exactlp::FarkasCertificate {
                        multipliers: multipliers.clone(),
                    },
                ))
            }
            InfeasibilityClaim::ViolatedRankRow { pi, agent, set } => {
                let oracle = RankOracle::new(&inst.constraints[*agent])?;
                Ok(pi.row_mass(*agent, *set) > rat::int(oracle.rank(*set) as i64))
            }
            InfeasibilityClaim::ViolatedColumnRow { pi, item } => {
                Ok(pi.column_sum(*item) > Rat::one())
            }
            InfeasibilityClaim::NegativeEntry { pi, agent, item } => {
                Ok(pi.entry(*agent, *item).is_negative())
            }
            InfeasibilityClaim::FullCoverageEnvySystem => {
                let lp = full_coverage_envy_lp(inst)?;
                Ok(verify_infeasibility_certificate(
                    &lp,
                    &crate::exactlp::FarkasCertificate {
                        multipliers: multipliers.clone(),
                    },
                ))
            }
        },
        Certificate::SupportRestriction { dominations } => {
            let full = ItemSet::full(inst.m());
            let assignments = enumerate_assignments(inst)?;
            for x in assignments.iter().filter(|x| x.assigned_union() != full) {
                let Some((_, better)) = dominations.iter().find(|(orig, _)| orig == x) else {
                    return Ok(false);
                };
                if !better.is_valid(inst) {
                    return Ok(false);
                }
                let xf = x.as_fractional(inst.m());
                let bf = better.as_fractional(inst.m());
                if bf == xf {
                    return Ok(false);
                }
                let dominates = (0..inst.n())
                    .all(|i| sd_compare(&inst.prefs[i], bf.row(i), xf.row(i)).weakly_dominates());
                if !dominates {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// The envy system of the definition restricted to lotteries supported on
/// full-coverage assignments, as an explicit linear program over those
/// assignments' probabilities.
fn full_coverage_envy_lp(inst: &Instance) -> Result<LinearProgram, VerifyError> {
    let full = ItemSet::full(inst.m());
    let assignments: Vec<DeterministicAssignment> = enumerate_assignments(inst)?
        .into_iter()
        .filter(|x| x.assigned_union() == full)
        .collect();
    envy_system_lp(inst, &assignments, &[])
}

/// Envy rows `Σ_X p_X (|X_i ∩ U| − best_i(X_j, U)) ≥ 0` for every ordered
/// pair and upper set, plus the probability row, plus optional extra rows.
fn envy_system_lp(
    inst: &Instance,
    assignments: &[DeterministicAssignment],
    extra: &[Constraint],
) -> Result<LinearProgram, VerifyError> {
    let n = inst.n();
    let m = inst.m();
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
    let mut constraints = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for k in 0..m {
                let upper = inst.prefs[i].prefix(k + 1);
                let mut coeffs = Vec::with_capacity(assignments.len());
                for x in assignments {
                    let own = x.bundles[i].intersect(upper).len() as i64;
                    let best = crate::sdrel::best_subbundle(
                        &inst.constraints[i],
                        oracles[i].as_ref(),
                        x.bundles[j],
                        upper,
                    )?;
                    coeffs.push(rat::int(own - best as i64));
                }
                constraints.push(Constraint::new(coeffs, Rel::Ge, Rat::zero()));
            }
        }
    }
    constraints.push(Constraint::new(
        vec![Rat::one(); assignments.len()],
        Rel::Eq,
        Rat::one(),
    ));
    constraints.extend_from_slice(extra);
    Ok(LinearProgram {
        num_vars: assignments.len(),
        objective: assignments.iter().map(|x| borda_of_assignment(inst, x)).collect(),
        sense: Sense::Max,
        constraints,
    })
}

/// Desk-scale searcher for an sd-efficient and sd-envy-free lottery: solve
/// the envy system maximizing Borda welfare, test efficiency, and iterate
/// with welfare-level cuts. `None` means the search gave up, not that no
/// such lottery exists.
pub fn brute_force_search(inst: &Instance) -> Result<Option<Lottery>, VerifyError> {
    let assignments = enumerate_assignments(inst)?;
    let mut cuts: Vec<Constraint> = Vec::new();
    let cut_step = rat::rat(1, 64);
    for _ in 0..16 {
        let lp = envy_system_lp(inst, &assignments, &cuts)?;
        let (point, value) = match simplex(&lp) {
            SimplexOutcome::Optimal { point, value } => (point, value),
            SimplexOutcome::Infeasible { .. } => return Ok(None),
            SimplexOutcome::Unbounded { .. } => unreachable!("probability simplex is bounded"),
        };
        let entries: Vec<(Rat, DeterministicAssignment)> = point
            .iter()
            .zip(&assignments)
            .filter(|(w, _)| w.is_positive())
            .map(|(w, x)| (w.clone(), x.clone()))
            .collect();
        let lottery = Lottery::from_weighted(entries);
        let pi = induced_fractional(&lottery, inst.m());
        if is_sd_efficient(inst, &pi)?.0 {
            return Ok(Some(lottery));
        }
        let mut cut = envy_system_lp(inst, &assignments, &[])?.objective;
        let rhs = &value - &cut_step;
        cuts.push(Constraint::new(std::mem::take(&mut cut), Rel::Le, rhs));
    }
    Ok(None)
}

/// Both certificates behind the two-agent hereditary nonexistence claim:
/// the support restriction (positive mass on partial coverage is
/// dominated) and the exact infeasibility of the full-coverage envy
/// system. Together they rule out any sd-efficient sd-envy-free lottery.
pub struct NonexistenceCertification {
    pub instance: Instance,
    pub support_restriction: Certificate,
    pub envy_infeasibility: Certificate,
    /// Exact bracket on the first item's share forced by the envy rows at
    /// the top item alone: both the minimum and maximum over that
    /// subsystem.
    pub forced_top_share: (Rat, Rat),
}

pub fn certify_thm4_nonexistence() -> Result<NonexistenceCertification, VerifyError> {
    let inst = crate::instances::gallery("thm4")?.instance;
    let full = ItemSet::full(inst.m());
    let assignments = enumerate_assignments(&inst)?;
    // Partial coverage is dominated: hand every unallocated item to the
    // unconstrained agent.
    let mut dominations = Vec::new();
    for x in assignments.iter().filter(|x| x.assigned_union() != full) {
        let better = DeterministicAssignment::new(vec![x.bundles[0], full.minus(x.bundles[0])]);
        dominations.push((x.clone(), better));
    }
    let support_restriction = Certificate::SupportRestriction { dominations };

    let lp = full_coverage_envy_lp(&inst)?;
    let multipliers = match simplex(&lp) {
        SimplexOutcome::Infeasible { certificate } => certificate.multipliers,
        other => unreachable!("full-coverage envy system is infeasible: {other:?}"),
    };
    let envy_infeasibility = Certificate::LpInfeasibility {
        claim: InfeasibilityClaim::FullCoverageEnvySystem,
        multipliers,
    };

    // Re-derivation of the forced one-half share of the top item from the
    // top-item envy rows alone.
    let coverage: Vec<DeterministicAssignment> = assignments
        .iter()
        .filter(|x| x.assigned_union() == full)
        .cloned()
        .collect();
    let top = inst.prefs[0].item_at(0);
    let share_row: Vec<Rat> = coverage
        .iter()
        .map(|x| {
            if x.bundles[0].contains(top) {
                Rat::one()
            } else {
                Rat::zero()
            }
        })
        .collect();
    let mut envy_top_rows = Vec::new();
    for (i, j) in [(0usize, 1usize), (1, 0)] {
        let upper = ItemSet::singleton(top);
        let oracle = if inst.constraints[i].is_matroid() {
            RankOracle::new(&inst.constraints[i]).ok()
        } else {
            None
        };
        let mut coeffs = Vec::new();
        for x in &coverage {
            let own = x.bundles[i].intersect(upper).len() as i64;
            let best = crate::sdrel::best_subbundle(
                &inst.constraints[i],
                oracle.as_ref(),
                x.bundles[j],
                upper,
            )?;
            coeffs.push(rat::int(own - best as i64));
        }
        envy_top_rows.push(Constraint::new(coeffs, Rel::Ge, Rat::zero()));
    }
    envy_top_rows.push(Constraint::new(
        vec![Rat::one(); coverage.len()],
        Rel::Eq,
        Rat::one(),
    ));
    let mut bracket = Vec::new();
    for sense in [Sense::Min, Sense::Max] {
        let lp = LinearProgram {
            num_vars: coverage.len(),
            objective: share_row.clone(),
            sense,
            constraints: envy_top_rows.clone(),
        };
        match simplex(&lp) {
            SimplexOutcome::Optimal { value, .. } => bracket.push(value),
            other => unreachable!("top-item subsystem is feasible: {other:?}"),
        }
    }
    Ok(NonexistenceCertification {
        instance: inst,
        support_restriction,
        envy_infeasibility,
        forced_top_share: (bracket[0].clone(), bracket[1].clone()),
    })
}

/// Which printed improvement direction certified a point of the restricted
/// polytope.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImprovementKind {
    /// Swap mass on the two top categorized items between agents 1 and 2.
    SwapAb,
    /// Rotate mass around (a, c, d, e) between agents 1 and 3.
    RotateAcde,
}

#[derive(Clone, Debug)]
pub struct DirectionCheck {
    pub kind: ImprovementKind,
    pub epsilon: Rat,
    pub verified: bool,
}

#[derive(Clone, Debug)]
pub struct CertifiedPoint {
    pub point: FractionalAssignment,
    pub certificate: Certificate,
    pub certificate_valid: bool,
    pub direction: Option<DirectionCheck>,
}

#[derive(Clone, Debug)]
pub struct Thm5Bounds {
    /// Minimum of the third agent's share of item c over the polytope.
    pub gamma_min: Rat,
    /// Maximum of the first agent's share of item d.
    pub alpha_max: Rat,
    /// Maximum of the third agent's share of item a.
    pub beta_max: Rat,
    /// Maximum of `2β − 3α`; nonpositive confirms `β ≤ 3α/2`.
    pub beta_vs_alpha_max: Rat,
}

#[derive(Clone, Debug)]
pub struct Thm5Report {
    pub n: usize,
    pub seed: u64,
    pub q_dimension: usize,
    pub vertices: Vec<CertifiedPoint>,
    pub samples: Vec<CertifiedPoint>,
    pub bounds: Thm5Bounds,
    /// Epistemic status: vertex sweep plus seeded interior samples are
    /// evidence over the restricted polytope, not a universal proof.
    pub note: String,
}

impl Thm5Report {
    pub fn all_certified(&self) -> bool {
        self.vertices
            .iter()
            .chain(&self.samples)
            .all(|c| c.certificate_valid)
    }
}

/// The restricted polytope `Q` for the identical-matroid nonexistence
/// instance: assignment polytope rows, pairwise envy-freeness prefix rows,
/// and the shares forced by efficiency (full categorized unit per core
/// agent, two thirds of the uncategorized pair, and the private pairs for
/// agents beyond the third).
fn thm5_q_rows(inst: &Instance) -> Result<Vec<Constraint>, VerifyError> {
    let n = inst.n();
    let m = inst.m();
    let var = |i: usize, e: usize| i * m + e;
    let mut rows = solver_rows(inst)?;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for k in 0..m {
                let mut coeffs = vec![Rat::zero(); n * m];
                for &e in &inst.prefs[i].order()[..=k] {
                    coeffs[var(i, e)] = Rat::one();
                    coeffs[var(j, e)] = -Rat::one();
                }
                rows.push(Constraint::new(coeffs, Rel::Ge, Rat::zero()));
            }
        }
    }
    let eq = |idx: Vec<usize>, rhs: Rat| {
        let mut coeffs = vec![Rat::zero(); n * m];
        for id in idx {
            coeffs[id] = Rat::one();
        }
        Constraint::new(coeffs, Rel::Eq, rhs)
    };
    for i in 0..3 {
        rows.push(eq(vec![var(i, 0), var(i, 1), var(i, 2)], Rat::one()));
        rows.push(eq(vec![var(i, 3), var(i, 4)], rat::rat(2, 3)));
        if n > 3 {
            rows.push(eq(vec![var(i, 5)], rat::rat(1, 3)));
            for e in 6..m {
                rows.push(eq(vec![var(i, e)], Rat::zero()));
            }
        }
    }
    for i in 3..n {
        // Private pair o_{2(i+1)-1}, o_{2(i+1)} at indices 2i, 2i+1.
        for e in 0..m {
            let rhs = if e == 2 * i || e == 2 * i + 1 {
                Rat::one()
            } else {
                Rat::zero()
            };
            rows.push(eq(vec![var(i, e)], rhs));
        }
    }
    Ok(rows)
}

/// Exact vertex enumeration of a low-dimensional polytope given by mixed
/// rows over nonnegative variables: detect implied equalities by slack
/// maximization, parametrize the affine hull, then sweep tight-row
/// subsets.
fn enumerate_polytope_vertices(
    num_vars: usize,
    rows: &[Constraint],
) -> Result<(usize, Vec<Vec<Rat>>), VerifyError> {
    // All rows including nonnegativity, as (coeffs, rhs, rel).
    let mut all_rows: Vec<Constraint> = rows.to_vec();
    for j in 0..num_vars {
        let mut coeffs = vec![Rat::zero(); num_vars];
        coeffs[j] = Rat::one();
        all_rows.push(Constraint::new(coeffs, Rel::Ge, Rat::zero()));
    }
    // Implied equalities: an inequality row whose slack cannot leave zero.
    let mut eq_rows: Vec<(Vec<Rat>, Rat)> = Vec::new();
    let mut ineq_rows: Vec<(Vec<Rat>, Rat, Rel)> = Vec::new();
    for row in &all_rows {
        match row.rel {
            Rel::Eq => eq_rows.push((row.coeffs.clone(), row.rhs.clone())),
            rel => {
                // Extreme value of the row functional over the polytope, on
                // the side its slack opens toward: a ≤-row is implied-equal
                // exactly when the minimum of its functional already sits on
                // the bound, a ≥-row when the maximum does.
                let lp = LinearProgram {
                    num_vars,
                    objective: row.coeffs.clone(),
                    sense: if rel == Rel::Le {
                        Sense::Min
                    } else {
                        Sense::Max
                    },
                    constraints: rows.to_vec(),
                };
                match simplex(&lp) {
                    SimplexOutcome::Optimal { value, .. } => {
                        if value == row.rhs {
                            eq_rows.push((row.coeffs.clone(), row.rhs.clone()));
                        } else {
                            ineq_rows.push((row.coeffs.clone(), row.rhs.clone(), rel));
                        }
                    }
                    SimplexOutcome::Infeasible { .. } => return Ok((0, vec![])),
                    SimplexOutcome::Unbounded { .. } => {
                        ineq_rows.push((row.coeffs.clone(), row.rhs.clone(), rel))
                    }
                }
            }
        }
    }
    let a: Vec<Vec<Rat>> = eq_rows.iter().map(|(c, _)| c.clone()).collect();
    let b: Vec<Rat> = eq_rows.iter().map(|(_, r)| r.clone()).collect();
    let Some((origin, basis)) = crate::util::affine_solution_set(&a, &b) else {
        return Ok((0, vec![]));
    };
    let dim = basis.len();
    if dim > 4 {
        return Err(VerifyError::DimensionTooLarge { dim });
    }
    // Project inequalities into the parametrization.
    let mut projected: Vec<(Vec<Rat>, Rat)> = Vec::new();
    for (coeffs, rhs, rel) in &ineq_rows {
        let mut c: Vec<Rat> = basis.iter().map(|v| crate::util::dot(coeffs, v)).collect();
        let mut r = rhs - crate::util::dot(coeffs, &origin);
        if *rel == Rel::Ge {
            for entry in c.iter_mut() {
                *entry = -entry.clone();
            }
            r = -r;
        }
        if c.iter().all(Zero::is_zero) {
            continue;
        }
        projected.push((c, r));
    }
    let satisfied =
        |t: &[Rat]| -> bool { projected.iter().all(|(c, r)| crate::util::dot(c, t) <= *r) };
    let mut vertices: Vec<Vec<Rat>> = Vec::new();
    let mut push_vertex = |t: &[Rat]| {
        let y: Vec<Rat> = (0..num_vars)
            .map(|j| {
                let mut v = origin[j].clone();
                for (coeff, dir) in t.iter().zip(&basis) {
                    v += coeff * &dir[j];
                }
                v
            })
            .collect();
        if !vertices.contains(&y) {
            vertices.push(y);
        }
    };
    if dim == 0 {
        if satisfied(&[]) {
            push_vertex(&[]);
        }
        return Ok((0, vertices));
    }
    let mut combo = vec![0usize; dim];
    fn sweep(
        projected: &[(Vec<Rat>, Rat)],
        combo: &mut Vec<usize>,
        depth: usize,
        start: usize,
        dim: usize,
        satisfied: &dyn Fn(&[Rat]) -> bool,
        push: &mut dyn FnMut(&[Rat]),
    ) {
        if depth == dim {
            let a: Vec<Vec<Rat>> = combo.iter().map(|&r| projected[r].0.clone()).collect();
            let b: Vec<Rat> = combo.iter().map(|&r| projected[r].1.clone()).collect();
            if let Some(t) = crate::util::solve_square(&a, &b) {
                if satisfied(&t) {
                    push(&t);
                }
            }
            return;
        }
        for r in start..projected.len() {
            combo[depth] = r;
            sweep(projected, combo, depth + 1, r + 1, dim, satisfied, push);
        }
    }
    sweep(
        &projected,
        &mut combo,
        0,
        0,
        dim,
        &satisfied,
        &mut push_vertex,
    );
    Ok((dim, vertices))
}

fn certify_point(
    inst: &Instance,
    point: FractionalAssignment,
) -> Result<CertifiedPoint, VerifyError> {
    let (efficient, witness) = is_sd_efficient(inst, &point)?;
    let (certificate, valid) = match witness {
        Some(w) if !efficient => {
            let cert = Certificate::DominatingPoint {
                pi: point.clone(),
                witness: w,
            };
            let ok = check_certificate(&CertificateDoc {
                instance: inst.clone(),
                certificate: cert.clone(),
            })?;
            (cert, ok)
        }
        _ => (
            Certificate::DominatingPoint {
                pi: point.clone(),
                witness: point.clone(),
            },
            false,
        ),
    };
    let direction = improvement_direction(inst, &point)?;
    Ok(CertifiedPoint {
        point,
        certificate,
        certificate_valid: valid,
        direction,
    })
}

/// Try the two printed improvement directions; whichever applies is
/// verified as a feasible strict improvement.
fn improvement_direction(
    inst: &Instance,
    pi: &FractionalAssignment,
) -> Result<Option<DirectionCheck>, VerifyError> {
    let (a, b, c, d, e) = (0usize, 1usize, 2usize, 3usize, 4usize);
    let half = rat::rat(1, 2);
    // Swap on items a/b between agents 1 and 2.
    let swap_room = [
        pi.entry(0, b).clone(),
        pi.entry(1, a).clone(),
        Rat::one() - pi.entry(0, a),
        Rat::one() - pi.entry(1, b),
    ];
    let eps_swap = swap_room.iter().cloned().fold(Rat::one(), Rat::min) * &half;
    let mut fallback = None;
    if eps_swap.is_positive() {
        let mut improved = pi.clone();
        improved.set_entry(0, a, pi.entry(0, a) + &eps_swap);
        improved.set_entry(0, b, pi.entry(0, b) - &eps_swap);
        improved.set_entry(1, a, pi.entry(1, a) - &eps_swap);
        improved.set_entry(1, b, pi.entry(1, b) + &eps_swap);
        let verified = verify_strict_improvement(inst, pi, &improved)?;
        let check = DirectionCheck {
            kind: ImprovementKind::SwapAb,
            epsilon: eps_swap,
            verified,
        };
        if verified {
            return Ok(Some(check));
        }
        fallback = Some(check);
    }
    // Rotation on (a, c, d, e) between agents 1 and 3.
    let rot_room = [
        pi.entry(0, a).clone(),
        pi.entry(0, e).clone(),
        pi.entry(2, c).clone(),
        pi.entry(2, d).clone(),
        Rat::one() - pi.entry(0, c),
        Rat::one() - pi.entry(0, d),
        Rat::one() - pi.entry(2, a),
        Rat::one() - pi.entry(2, e),
    ];
    let eps_rot = rot_room.iter().cloned().fold(Rat::one(), Rat::min) * &half;
    if eps_rot.is_positive() {
        let mut improved = pi.clone();
        improved.set_entry(0, a, pi.entry(0, a) - &eps_rot);
        improved.set_entry(0, c, pi.entry(0, c) + &eps_rot);
        improved.set_entry(0, d, pi.entry(0, d) + &eps_rot);
        improved.set_entry(0, e, pi.entry(0, e) - &eps_rot);
        improved.set_entry(2, a, pi.entry(2, a) + &eps_rot);
        improved.set_entry(2, c, pi.entry(2, c) - &eps_rot);
        improved.set_entry(2, d, pi.entry(2, d) - &eps_rot);
        improved.set_entry(2, e, pi.entry(2, e) + &eps_rot);
        let verified = verify_strict_improvement(inst, pi, &improved)?;
        let check = DirectionCheck {
            kind: ImprovementKind::RotateAcde,
            epsilon: eps_rot,
            verified,
        };
        if verified {
            return Ok(Some(check));
        }
        fallback = fallback.or(Some(check));
    }
    Ok(fallback)
}

fn verify_strict_improvement(
    inst: &Instance,
    pi: &FractionalAssignment,
    improved: &FractionalAssignment,
) -> Result<bool, VerifyError> {
    if improved == pi || !is_feasible(inst, improved)? {
        return Ok(false);
    }
    Ok((0..inst.n())
        .all(|i| sd_compare(&inst.prefs[i], improved.row(i), pi.row(i)).weakly_dominates()))
}

/// Certify the identical-matroid nonexistence evidence for the three-agent
/// instance.
pub fn certify_thm5_sampling(samples: usize, seed: u64) -> Result<Thm5Report, VerifyError> {
    certify_thm5_general(3, samples, seed)
}

/// The same sweep over the n-agent generalization: enumerate the vertices
/// of the restricted polytope exactly, certify each sd-dominated, certify
/// seeded interior samples, and confirm the derived share bounds as
/// implied inequalities.
pub fn certify_thm5_general(
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<Thm5Report, VerifyError> {
    let inst = crate::instances::thm5_general(n)?;
    let m = inst.m();
    let rows = thm5_q_rows(&inst)?;
    let (q_dimension, vertex_points) = enumerate_polytope_vertices(n * m, &rows)?;
    let to_matrix = |flat: &[Rat]| {
        FractionalAssignment::new((0..n).map(|i| flat[i * m..(i + 1) * m].to_vec()).collect())
    };
    let mut vertices = Vec::new();
    for v in &vertex_points {
        vertices.push(certify_point(&inst, to_matrix(v))?);
    }
    let mut rng = SplitMix64::new(seed);
    let mut sampled = Vec::new();
    for _ in 0..samples {
        if vertex_points.is_empty() {
            break;
        }
        let weights: Vec<Rat> = (0..vertex_points.len())
            .map(|_| rng.rat_in_unit(64))
            .collect();
        let total = rat::sum(weights.iter());
        let mut flat = vec![Rat::zero(); n * m];
        for (w, v) in weights.iter().zip(&vertex_points) {
            for (idx, coord) in v.iter().enumerate() {
                flat[idx] += w / &total * coord;
            }
        }
        sampled.push(certify_point(&inst, to_matrix(&flat))?);
    }
    // Derived bounds as exact optimizations over Q.
    let var = |i: usize, e: usize| i * m + e;
    let extreme = |objective: Vec<Rat>, sense: Sense| -> Rat {
        let lp = LinearProgram {
            num_vars: n * m,
            objective,
            sense,
            constraints: rows.clone(),
        };
        match simplex(&lp) {
            SimplexOutcome::Optimal { value, .. } => value,
            other => unreachable!("Q is nonempty and bounded: {other:?}"),
        }
    };
    let unit = |idx: usize| {
        let mut v = vec![Rat::zero(); n * m];
        v[idx] = Rat::one();
        v
    };
    let gamma_min = extreme(unit(var(1, 2)), Sense::Min);
    let alpha_max = extreme(unit(var(0, 3)), Sense::Max);
    let beta_max = extreme(unit(var(2, 0)), Sense::Max);
    let mut combo = vec![Rat::zero(); n * m];
    combo[var(2, 0)] = rat::int(2);
    combo[var(0, 3)] = rat::int(-3);
    let beta_vs_alpha_max = extreme(combo, Sense::Max);
    Ok(Thm5Report {
        n,
        seed,
        q_dimension,
        vertices,
        samples: sampled,
        bounds: Thm5Bounds {
            gamma_min,
            alpha_max,
            beta_max,
            beta_vs_alpha_max,
        },
        note: format!(
            "vertex sweep plus {samples} seeded interior samples (seed {seed}); \
             evidence over the envy-restricted polytope, not a universal proof"
        ),
    })
}

/// Independent implementation of the choice function by sequential
/// lexicographic linear programs over the rank-inequality system
/// intersected with the box below `x`.
pub fn choice_oracle_lex_lp(
    family: &ConstraintFamily,
    pref: &Preference,
    x: &[Rat],
) -> Result<Vec<Rat>, VerifyError> {
    let m = family.m();
    let guard = crate::guards().family_m;
    if m > guard {
        return Err(VerifyError::Matroid(MatroidError::GroundSetTooLarge {
            size: m,
            guard,
        }));
    }
    let oracle = RankOracle::new(family)?;
    let mut constraints = Vec::new();
    for set in ItemSet::full(m).subsets() {
        if set.is_empty() {
            continue;
        }
        let mut coeffs = vec![Rat::zero(); m];
        for e in set.iter() {
            coeffs[e] = Rat::one();
        }
        constraints.push(Constraint::new(
            coeffs,
            Rel::Le,
            rat::int(oracle.rank(set) as i64),
        ));
    }
    for e in 0..m {
        let mut coeffs = vec![Rat::zero(); m];
        coeffs[e] = Rat::one();
        constraints.push(Constraint::new(coeffs, Rel::Le, x[e].clone()));
    }
    let mut result = vec![Rat::zero(); m];
    for k in 0..m {
        let e = pref.item_at(k);
        let mut objective = vec![Rat::zero(); m];
        objective[e] = Rat::one();
        let lp = LinearProgram {
            num_vars: m,
            objective,
            sense: Sense::Max,
            constraints: constraints.clone(),
        };
        let value = match simplex(&lp) {
            SimplexOutcome::Optimal { value, .. } => value,
            other => unreachable!("the reduced polytope is nonempty and bounded: {other:?}"),
        };
        let mut pin = vec![Rat::zero(); m];
        pin[e] = Rat::one();
        constraints.push(Constraint::new(pin, Rel::Eq, value.clone()));
        result[e] = value;
    }
    Ok(result)
}

/// Envy certificates straight from a violated report entry.
pub fn envy_certificate(
    lottery: &Lottery,
    report: &crate::sdrel::EnvyReport,
) -> Option<Certificate> {
    report.pairs.iter().find(|p| !p.satisfied).map(|p| {
        let w = p.witness.as_ref().expect("violated pair carries a witness");
        Certificate::EnvyWitness {
            lottery: lottery.clone(),
            i: p.i,
            j: p.j,
            item: w.item,
            lhs: w.lhs.clone(),
            rhs: w.rhs.clone(),
        }
    })
}

/// Borda welfare of a single deterministic assignment.
pub fn borda_of_assignment(inst: &Instance, x: &DeterministicAssignment) -> Rat {
    borda_value(inst, &x.as_fractional(inst.m()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::gallery;
    use crate::rat::{int, rat};

    #[test]
    fn check_feasible_example1_half_matrix() {
        let inst = gallery("ex1").unwrap().instance;
        let pi = FractionalAssignment::new(vec![vec![rat(1, 2); 4]; 2]);
        let (ok, cert) = check_feasible(&inst, &pi).unwrap();
        assert!(ok);
        assert!(check_certificate(&CertificateDoc {
            instance: inst,
            certificate: cert
        })
        .unwrap());
    }

    #[test]
    fn check_feasible_rejects_column_overflow() {
        let inst = Instance::new(
            &["a"],
            vec![Preference::new(vec![0]); 2],
            vec![ConstraintFamily::free(1); 2],
        );
        let pi = FractionalAssignment::new(vec![vec![int(1)], vec![int(1)]]);
        let (ok, cert) = check_feasible(&inst, &pi).unwrap();
        assert!(!ok);
        assert!(check_certificate(&CertificateDoc {
            instance: inst,
            certificate: cert
        })
        .unwrap());
    }

    #[test]
    fn decompose_point_mass() {
        let inst = gallery("ex1").unwrap().instance;
        let x = DeterministicAssignment::new(vec![
            ItemSet::from_items([0, 2]),
            ItemSet::from_items([1, 3]),
        ]);
        let pi = x.as_fractional(4);
        let lottery = decompose(&inst, &pi).unwrap();
        assert_eq!(lottery.support.len(), 1);
        assert_eq!(lottery.support[0].1, x);
    }

    #[test]
    fn decompose_half_matrix_support_bound() {
        let inst = gallery("ex1").unwrap().instance;
        let pi = FractionalAssignment::new(vec![vec![rat(1, 2); 4]; 2]);
        let lottery = decompose(&inst, &pi).unwrap();
        assert!(lottery.is_valid(&inst));
        assert!(lottery.support.len() <= 2 * 4 + 1);
        assert_eq!(induced_fractional(&lottery, 4), pi);
    }

    #[test]
    fn decompose_rejects_infeasible() {
        let inst = gallery("ex1").unwrap().instance;
        let mut pi = FractionalAssignment::zeros(2, 4);
        pi.set_entry(0, 2, int(1));
        pi.set_entry(0, 3, int(1));
        assert!(matches!(
            decompose(&inst, &pi),
            Err(VerifyError::InfeasiblePoint)
        ));
    }

    #[test]
    fn partition_reduction_yes_and_no() {
        let yes = crate::instances::build_partition_reduction(&[1, 2, 3]);
        let pi = FractionalAssignment::new(vec![vec![rat(1, 2); 3]; 2]);
        let (ok, cert) = check_feasible(&yes, &pi).unwrap();
        assert!(ok);
        assert!(check_certificate(&CertificateDoc {
            instance: yes,
            certificate: cert
        })
        .unwrap());

        let no = crate::instances::build_partition_reduction(&[1, 1, 3]);
        let (ok, cert) = check_feasible(&no, &pi).unwrap();
        assert!(!ok);
        assert!(matches!(
            cert,
            Certificate::LpInfeasibility {
                claim: InfeasibilityClaim::NotInPolytope { .. },
                ..
            }
        ));
        assert!(check_certificate(&CertificateDoc {
            instance: no,
            certificate: cert
        })
        .unwrap());
    }

    #[test]
    fn thm4_certificates_verify() {
        let cert = certify_thm4_nonexistence().unwrap();
        assert_eq!(cert.forced_top_share, (rat(1, 2), rat(1, 2)));
        for c in [&cert.support_restriction, &cert.envy_infeasibility] {
            assert!(check_certificate(&CertificateDoc {
                instance: cert.instance.clone(),
                certificate: c.clone(),
            })
            .unwrap());
        }
    }

    #[test]
    fn choice_oracle_agrees_on_worked_example() {
        let fam = ConstraintFamily::partition(
            4,
            vec![
                crate::domain::Block {
                    items: ItemSet::from_items([0, 2]),
                    cap: 1,
                },
                crate::domain::Block {
                    items: ItemSet::full(4),
                    cap: 2,
                },
            ],
        );
        let pref = Preference::new(vec![0, 1, 2, 3]);
        let x = vec![rat(1, 2), int(1), int(1), int(1)];
        let via_lp = choice_oracle_lex_lp(&fam, &pref, &x).unwrap();
        assert_eq!(via_lp, vec![rat(1, 2), int(1), rat(1, 2), int(0)]);
        let oracle = RankOracle::new(&fam).unwrap();
        assert_eq!(via_lp, crate::matroid::choice(&oracle, &pref, &x).unwrap());
    }

    /// The eating matrix on ex2 decomposes within the Caratheodory bound
    /// (2·5 + 1) and the serial-mechanism matrix checks feasible.
    #[test]
    fn ex2_decomposition_bound_and_ps_feasibility() {
        let inst = gallery("ex2").unwrap().instance;
        let eating = crate::mechanisms::mech_eating(&inst).unwrap().pi;
        let lottery = decompose(&inst, &eating).unwrap();
        assert!(lottery.support.len() <= 11);
        assert_eq!(induced_fractional(&lottery, 5), eating);
        let ps = crate::mechanisms::mech_naive_ps(&inst).unwrap().pi;
        assert!(check_feasible(&inst, &ps).unwrap().0);
    }

    #[test]
    fn choice_oracle_free_family_clips_to_x() {
        let fam = ConstraintFamily::free(3);
        let pref = Preference::new(vec![2, 0, 1]);
        let x = vec![rat(1, 3), rat(3, 4), rat(1, 2)];
        assert_eq!(choice_oracle_lex_lp(&fam, &pref, &x).unwrap(), x);
    }

    #[test]
    fn brute_force_search_single_agent_takes_everything() {
        let inst = Instance::new(
            &["a", "b"],
            vec![Preference::new(vec![0, 1])],
            vec![ConstraintFamily::free(2)],
        );
        let lottery = brute_force_search(&inst).unwrap().unwrap();
        let pi = induced_fractional(&lottery, 2);
        assert_eq!(pi, FractionalAssignment::new(vec![vec![int(1), int(1)]]));
    }

    #[test]
    fn round_trip_random_lotteries() {
        let mut rng = SplitMix64::new(31);
        for _ in 0..25 {
            let style = if rng.chance(1, 2) {
                crate::instances::FamilyStyle::Laminar
            } else {
                crate::instances::FamilyStyle::ExplicitHereditary
            };
            let inst = crate::instances::random_instance(
                &crate::instances::RandomParams {
                    n: rng.range(1, 3),
                    m: rng.range(2, 5),
                    family: style,
                    identical_prefs: false,
                    identical_families: false,
                },
                rng.next_u64(),
            );
            let assignments = enumerate_assignments(&inst).unwrap();
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
            let re = decompose(&inst, &pi).unwrap();
            assert_eq!(induced_fractional(&re, inst.m()), pi);
            assert!(re.support.len() <= inst.n() * inst.m() + 1);
        }
    }
}
