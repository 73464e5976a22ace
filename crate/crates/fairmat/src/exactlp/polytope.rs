//! The feasible-assignment polytope `P`: rank-inequality H-representation
//! for all-matroid instances, explicit vertex list (every deterministic
//! assignment) otherwise, plus exact linear optimization over either.

use super::simplex::{
    simplex, Constraint, FarkasCertificate, LinearProgram, Rel, Sense, SimplexOutcome,
};
use crate::domain::{
    membership, DeterministicAssignment, FamilyKind, FractionalAssignment, Instance, ItemSet,
    Lottery,
};
use crate::matroid::RankOracle;
use crate::rat::{self, Rat};
use num_traits::{Signed, Zero};
use thiserror::Error;

#[derive(Clone, Debug, Error)]
pub enum PolytopeError {
    #[error("ground set of size {size} exceeds the enumeration guard {guard}")]
    GroundSetTooLarge { size: usize, guard: usize },
    #[error("deterministic-assignment enumeration exceeds the guard {guard}")]
    EnumerationTooLarge { guard: usize },
    #[error("constrained system over P is infeasible")]
    Infeasible(FarkasCertificate),
    #[error("optimization over P reported an unbounded direction")]
    Unbounded,
}

/// One row of the H-representation, `Σ_{(i,e) ∈ support} π_{ie} ≤ bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PRow {
    /// `π_i(X) ≤ r_i(X)` for one agent and one nonempty item set.
    Rank {
        agent: usize,
        set: ItemSet,
        bound: usize,
    },
    /// `Σ_i π_{ie} ≤ 1`.
    Column { item: usize },
}

#[derive(Clone, Debug)]
pub enum PolytopeP {
    /// Every rank inequality of every agent plus the column rows. Used only
    /// when all families are matroids.
    HRep { n: usize, m: usize, rows: Vec<PRow> },
    /// Every deterministic assignment.
    VRep {
        n: usize,
        m: usize,
        assignments: Vec<DeterministicAssignment>,
    },
}

impl PolytopeP {
    pub fn is_hrep(&self) -> bool {
        matches!(self, PolytopeP::HRep { .. })
    }
}

/// Construct the polytope representation for an instance: rank rows when
/// every family is a matroid, the explicit vertex list otherwise.
pub fn build_p(inst: &Instance) -> Result<PolytopeP, PolytopeError> {
    let n = inst.n();
    let m = inst.m();
    if inst.all_matroids() {
        let guard = crate::guards().family_m;
        if m > guard {
            return Err(PolytopeError::GroundSetTooLarge { size: m, guard });
        }
        let mut rows = Vec::new();
        for (agent, family) in inst.constraints.iter().enumerate() {
            let oracle = RankOracle::new(family).expect("matroid flag checked");
            for set in ItemSet::full(m).subsets() {
                if !set.is_empty() {
                    rows.push(PRow::Rank {
                        agent,
                        set,
                        bound: oracle.rank(set),
                    });
                }
            }
        }
        for item in 0..m {
            rows.push(PRow::Column { item });
        }
        Ok(PolytopeP::HRep { n, m, rows })
    } else {
        Ok(PolytopeP::VRep {
            n,
            m,
            assignments: enumerate_assignments(inst)?,
        })
    }
}

/// Enumerate every deterministic assignment, agent by agent over the
/// remaining items.
pub fn enumerate_assignments(
    inst: &Instance,
) -> Result<Vec<DeterministicAssignment>, PolytopeError> {
    let guard = crate::guards().assignments;
    let mut out: Vec<DeterministicAssignment> = Vec::new();
    let mut bundles = vec![ItemSet::EMPTY; inst.n()];
    fn rec(
        inst: &Instance,
        agent: usize,
        avail: ItemSet,
        bundles: &mut Vec<ItemSet>,
        out: &mut Vec<DeterministicAssignment>,
        guard: usize,
    ) -> Result<(), PolytopeError> {
        if agent == inst.n() {
            if out.len() == guard {
                return Err(PolytopeError::EnumerationTooLarge { guard });
            }
            out.push(DeterministicAssignment::new(bundles.clone()));
            return Ok(());
        }
        for s in avail.subsets() {
            if membership(&inst.constraints[agent], s) {
                bundles[agent] = s;
                rec(inst, agent + 1, avail.minus(s), bundles, out, guard)?;
            }
        }
        Ok(())
    }
    rec(
        inst,
        0,
        ItemSet::full(inst.m()),
        &mut bundles,
        &mut out,
        guard,
    )?;
    Ok(out)
}

/// The minimal inequality system over the flattened `n·m` variables that
/// carves out the same polytope as the full H-representation: laminar block
/// rows per agent (full rank-row enumeration only for explicitly encoded
/// matroids) plus the column rows.
pub(crate) fn solver_rows(inst: &Instance) -> Result<Vec<Constraint>, PolytopeError> {
    let n = inst.n();
    let m = inst.m();
    let var = |i: usize, e: usize| i * m + e;
    let mut rows = Vec::new();
    for (agent, family) in inst.constraints.iter().enumerate() {
        match family.kind() {
            FamilyKind::Free => {}
            FamilyKind::Uniform { cap } => {
                let mut coeffs = vec![Rat::zero(); n * m];
                for e in 0..m {
                    coeffs[var(agent, e)] = rat::one();
                }
                rows.push(Constraint::new(coeffs, Rel::Le, rat::int(*cap as i64)));
            }
            FamilyKind::Partition { blocks } => {
                for b in blocks {
                    let mut coeffs = vec![Rat::zero(); n * m];
                    for e in b.items.iter() {
                        coeffs[var(agent, e)] = rat::one();
                    }
                    rows.push(Constraint::new(coeffs, Rel::Le, rat::int(b.cap as i64)));
                }
            }
            _ => {
                let guard = crate::guards().family_m;
                if m > guard {
                    return Err(PolytopeError::GroundSetTooLarge { size: m, guard });
                }
                let oracle =
                    RankOracle::new(family).expect("solver_rows requires matroid families");
                for set in ItemSet::full(m).subsets() {
                    if set.is_empty() {
                        continue;
                    }
                    let mut coeffs = vec![Rat::zero(); n * m];
                    for e in set.iter() {
                        coeffs[var(agent, e)] = rat::one();
                    }
                    rows.push(Constraint::new(
                        coeffs,
                        Rel::Le,
                        rat::int(oracle.rank(set) as i64),
                    ));
                }
            }
        }
    }
    for e in 0..m {
        let mut coeffs = vec![Rat::zero(); n * m];
        for i in 0..n {
            coeffs[var(i, e)] = rat::one();
        }
        rows.push(Constraint::new(coeffs, Rel::Le, rat::one()));
    }
    Ok(rows)
}

/// A linear functional or constraint row over the `n × m` assignment
/// variables.
#[derive(Clone, Debug)]
pub struct PiConstraint {
    pub coeffs: Vec<Vec<Rat>>,
    pub rel: Rel,
    pub rhs: Rat,
}

#[derive(Clone, Debug)]
pub struct POptimum {
    pub pi: FractionalAssignment,
    pub value: Rat,
    /// Explicit convex combination over deterministic assignments; present
    /// in VRep mode.
    pub combination: Option<Lottery>,
}

fn flatten(coeffs: &[Vec<Rat>]) -> Vec<Rat> {
    coeffs.iter().flatten().cloned().collect()
}

/// Maximize a linear objective over `P` intersected with extra linear
/// constraints. HRep solves directly over the assignment variables; VRep
/// solves in barycentric coordinates (one weight per vertex) and reports
/// the convex combination.
pub fn optimize_over_p(
    inst: &Instance,
    p: &PolytopeP,
    objective: &[Vec<Rat>],
    extras: &[PiConstraint],
) -> Result<POptimum, PolytopeError> {
    match p {
        PolytopeP::HRep { n, m, .. } => {
            let (n, m) = (*n, *m);
            let mut constraints = solver_rows(inst)?;
            for extra in extras {
                constraints.push(Constraint::new(
                    flatten(&extra.coeffs),
                    extra.rel,
                    extra.rhs.clone(),
                ));
            }
            let lp = LinearProgram {
                num_vars: n * m,
                objective: flatten(objective),
                sense: Sense::Max,
                constraints,
            };
            match simplex(&lp) {
                SimplexOutcome::Optimal { point, value } => {
                    let pi = FractionalAssignment::new(
                        (0..n).map(|i| point[i * m..(i + 1) * m].to_vec()).collect(),
                    );
                    Ok(POptimum {
                        pi,
                        value,
                        combination: None,
                    })
                }
                SimplexOutcome::Infeasible { certificate } => {
                    Err(PolytopeError::Infeasible(certificate))
                }
                SimplexOutcome::Unbounded { .. } => Err(PolytopeError::Unbounded),
            }
        }
        PolytopeP::VRep { n, m, assignments } => {
            let (n, m) = (*n, *m);
            // Restricting to profile-maximal assignments is value-preserving
            // when every extra row is a ≥-row with nonnegative coefficients
            // and the objective is nonnegative: shifting lottery mass from X
            // to any X' ⊇ X (componentwise) can only help such rows and the
            // objective, and heredity makes the restriction closed.
            let monotone_safe = objective.iter().flatten().all(|c| !c.is_negative())
                && extras.iter().all(|x| {
                    x.rel == Rel::Ge && x.coeffs.iter().flatten().all(|c| !c.is_negative())
                });
            let filtered: Vec<&DeterministicAssignment> = if monotone_safe {
                assignments
                    .iter()
                    .filter(|x| is_profile_maximal(inst, x))
                    .collect()
            } else {
                assignments.iter().collect()
            };
            let score = |x: &DeterministicAssignment, coeffs: &[Vec<Rat>]| -> Rat {
                let mut v = Rat::zero();
                for (i, b) in x.bundles.iter().enumerate() {
                    for e in b.iter() {
                        v += &coeffs[i][e];
                    }
                }
                v
            };
            let mut constraints: Vec<Constraint> = extras
                .iter()
                .map(|extra| {
                    Constraint::new(
                        filtered.iter().map(|x| score(x, &extra.coeffs)).collect(),
                        extra.rel,
                        extra.rhs.clone(),
                    )
                })
                .collect();
            constraints.push(Constraint::new(
                vec![rat::one(); filtered.len()],
                Rel::Eq,
                rat::one(),
            ));
            let lp = LinearProgram {
                num_vars: filtered.len(),
                objective: filtered.iter().map(|x| score(x, objective)).collect(),
                sense: Sense::Max,
                constraints,
            };
            match simplex(&lp) {
                SimplexOutcome::Optimal { point, value } => {
                    let entries: Vec<(Rat, DeterministicAssignment)> = point
                        .iter()
                        .zip(&filtered)
                        .filter(|(w, _)| w.is_positive())
                        .map(|(w, x)| (w.clone(), (*x).clone()))
                        .collect();
                    let lottery = Lottery::from_weighted(entries);
                    let pi = crate::domain::induced_fractional(&lottery, m);
                    debug_assert_eq!(pi.n(), n);
                    Ok(POptimum {
                        pi,
                        value,
                        combination: Some(lottery),
                    })
                }
                SimplexOutcome::Infeasible { certificate } => {
                    Err(PolytopeError::Infeasible(certificate))
                }
                SimplexOutcome::Unbounded { .. } => Err(PolytopeError::Unbounded),
            }
        }
    }
}

/// No single unassigned item can be added to any bundle.
fn is_profile_maximal(inst: &Instance, x: &DeterministicAssignment) -> bool {
    let free = ItemSet::full(inst.m()).minus(x.assigned_union());
    for e in free.iter() {
        for (i, &b) in x.bundles.iter().enumerate() {
            if membership(&inst.constraints[i], b.with(e)) {
                return false;
            }
        }
    }
    true
}

/// Exact evaluation of a fractional assignment against the full
/// H-representation; returns the first violated row, if any.
pub fn violated_hrep_row(p: &PolytopeP, pi: &FractionalAssignment) -> Option<PRow> {
    let PolytopeP::HRep { rows, .. } = p else {
        return None;
    };
    for row in rows {
        match row {
            PRow::Rank { agent, set, bound } => {
                if pi.row_mass(*agent, *set) > rat::int(*bound as i64) {
                    return Some(row.clone());
                }
            }
            PRow::Column { item } => {
                if pi.column_sum(*item) > rat::one() {
                    return Some(row.clone());
                }
            }
        }
    }
    // Entry bounds: nonnegativity is part of the polytope description.
    for i in 0..pi.n() {
        for e in 0..pi.m() {
            if pi.entry(i, e).is_negative() {
                return Some(PRow::Rank {
                    agent: i,
                    set: ItemSet::singleton(e),
                    bound: 0,
                });
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Block, ConstraintFamily, Preference};
    use crate::rat::{int, rat};

    fn example1() -> Instance {
        let fam = ConstraintFamily::partition(
            4,
            vec![
                Block {
                    items: ItemSet::from_items([2, 3]),
                    cap: 1,
                },
                Block {
                    items: ItemSet::full(4),
                    cap: 2,
                },
            ],
        );
        Instance::new(
            &["a", "b", "c", "d"],
            vec![
                Preference::new(vec![0, 1, 2, 3]),
                Preference::new(vec![0, 1, 2, 3]),
            ],
            vec![fam.clone(), fam],
        )
    }

    fn thm4() -> Instance {
        let f1 = ConstraintFamily::explicit_maximal(
            4,
            vec![
                ItemSet::singleton(0),
                ItemSet::singleton(1),
                ItemSet::from_items([2, 3]),
            ],
        );
        Instance::new(
            &["e1", "e2", "e3", "e4"],
            vec![
                Preference::new(vec![0, 1, 2, 3]),
                Preference::new(vec![0, 1, 2, 3]),
            ],
            vec![f1, ConstraintFamily::free(4)],
        )
    }

    #[test]
    fn hrep_row_count() {
        let p = build_p(&example1()).unwrap();
        let PolytopeP::HRep { rows, .. } = &p else {
            panic!("expected HRep")
        };
        assert_eq!(rows.len(), 2 * ((1 << 4) - 1) + 4);
    }

    #[test]
    fn hrep_row_count_ex2() {
        let inst = crate::instances::gallery("ex2").unwrap().instance;
        let p = build_p(&inst).unwrap();
        let PolytopeP::HRep { rows, .. } = &p else {
            panic!("expected HRep")
        };
        assert_eq!(rows.len(), 2 * ((1 << 5) - 1) + 5);
    }

    #[test]
    fn thm4_uses_vrep() {
        let p = build_p(&thm4()).unwrap();
        let PolytopeP::VRep { assignments, .. } = &p else {
            panic!("expected VRep")
        };
        // Agent 1 has six feasible bundles; agent 2 takes any subset of the rest.
        let count: usize = [16, 8, 8, 8, 8, 4].iter().sum();
        assert_eq!(assignments.len(), count);
    }

    #[test]
    fn single_free_agent_hrep_reduces_to_unit_box() {
        let inst = Instance::new(
            &["a", "b"],
            vec![Preference::new(vec![0, 1])],
            vec![ConstraintFamily::free(2)],
        );
        let p = build_p(&inst).unwrap();
        let PolytopeP::HRep { rows, .. } = &p else {
            panic!()
        };
        for row in rows {
            match row {
                PRow::Rank { set, bound, .. } => assert_eq!(*bound, set.len()),
                PRow::Column { .. } => {}
            }
        }
        let opt = optimize_over_p(&inst, &p, &[vec![int(1), int(1)]], &[]).unwrap();
        assert_eq!(opt.value, int(2));
    }

    #[test]
    fn zero_objective_feasible() {
        let inst = example1();
        let p = build_p(&inst).unwrap();
        let opt = optimize_over_p(&inst, &p, &vec![vec![int(0); 4]; 2], &[]).unwrap();
        assert_eq!(opt.value, int(0));
    }

    #[test]
    fn thm4_agent2_can_take_e1() {
        let inst = thm4();
        let p = build_p(&inst).unwrap();
        let mut obj = vec![vec![int(0); 4]; 2];
        obj[1][0] = int(1);
        let opt = optimize_over_p(&inst, &p, &obj, &[]).unwrap();
        assert_eq!(opt.value, int(1));
    }

    /// Example-1 Borda optimum: brute force over the vertex list is the
    /// oracle, and both representations must agree with it.
    #[test]
    fn example1_borda_optimum_matches_vertex_scan() {
        let inst = example1();
        let borda = vec![vec![int(4), int(3), int(2), int(1)]; 2];
        let assignments = enumerate_assignments(&inst).unwrap();
        let mut best = int(0);
        for x in &assignments {
            let mut v = int(0);
            for (i, b) in x.bundles.iter().enumerate() {
                for e in b.iter() {
                    v += &borda[i][e];
                }
            }
            best = best.max(v);
        }
        assert_eq!(best, int(10));
        let p = build_p(&inst).unwrap();
        let opt = optimize_over_p(&inst, &p, &borda, &[]).unwrap();
        assert_eq!(opt.value, best);
    }

    /// Optimizing the same objective over the H- and V-representations of
    /// random laminar-matroid instances yields equal values.
    #[test]
    fn hrep_and_vrep_agree_on_random_instances() {
        let mut rng = crate::util::SplitMix64::new(99);
        for _ in 0..40 {
            let inst = crate::instances::random_instance(
                &crate::instances::RandomParams {
                    n: rng.range(1, 3),
                    m: rng.range(2, 5),
                    family: crate::instances::FamilyStyle::Laminar,
                    identical_prefs: false,
                    identical_families: false,
                },
                rng.next_u64(),
            );
            let objective: Vec<Vec<Rat>> = (0..inst.n())
                .map(|_| (0..inst.m()).map(|_| int(rng.range(0, 5) as i64)).collect())
                .collect();
            let hrep = build_p(&inst).unwrap();
            let vrep = PolytopeP::VRep {
                n: inst.n(),
                m: inst.m(),
                assignments: enumerate_assignments(&inst).unwrap(),
            };
            let a = optimize_over_p(&inst, &hrep, &objective, &[]).unwrap();
            let b = optimize_over_p(&inst, &vrep, &objective, &[]).unwrap();
            assert_eq!(a.value, b.value);
        }
    }

    #[test]
    fn infeasible_extra_constraint_surfaces_certificate() {
        let inst = example1();
        let p = build_p(&inst).unwrap();
        let extras = vec![PiConstraint {
            coeffs: vec![vec![int(1); 4]; 2],
            rel: Rel::Ge,
            rhs: int(100),
        }];
        match optimize_over_p(&inst, &p, &vec![vec![int(0); 4]; 2], &extras) {
            Err(PolytopeError::Infeasible(_)) => {}
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn enumeration_guard_stops_huge_vertex_lists() {
        let inst = Instance::new(
            &[
                "a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l", "m",
            ],
            vec![Preference::new((0..13).collect()); 3],
            vec![
                ConstraintFamily::budget(13, vec![1; 13], crate::rat::int(13)),
                ConstraintFamily::free(13),
                ConstraintFamily::free(13),
            ],
        );
        assert!(matches!(
            enumerate_assignments(&inst),
            Err(PolytopeError::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn violated_row_detected() {
        let inst = example1();
        let p = build_p(&inst).unwrap();
        let mut pi = FractionalAssignment::zeros(2, 4);
        pi.set_entry(0, 2, int(1));
        pi.set_entry(0, 3, int(1));
        let row = violated_hrep_row(&p, &pi).unwrap();
        assert!(matches!(row, PRow::Rank { agent: 0, .. }));
        let good = FractionalAssignment::new(vec![vec![rat(1, 2); 4]; 2]);
        assert!(violated_hrep_row(&p, &good).is_none());
    }
}
