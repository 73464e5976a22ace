//! Exact two-phase primal simplex over the rationals with Bland's
//! anti-cycling rule. No tolerances exist anywhere: every comparison is an
//! exact rational comparison, so Bland's rule alone guarantees termination.
//!
//! Variables are implicitly nonnegative; rows may be `≤`, `=`, or `≥`.

use crate::rat::Rat;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Max,
    Min,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<Rat>,
    pub rel: Rel,
    pub rhs: Rat,
}

impl Constraint {
    pub fn new(coeffs: Vec<Rat>, rel: Rel, rhs: Rat) -> Self {
        Constraint { coeffs, rel, rhs }
    }
}

#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<Rat>,
    pub sense: Sense,
    pub constraints: Vec<Constraint>,
}

/// Dual multipliers proving a system infeasible: one per constraint row,
/// nonnegative on `≤` rows, nonpositive on `≥` rows, free on `=` rows, with
/// `Σ y_i a_i ≥ 0` componentwise and `Σ y_i b_i < 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FarkasCertificate {
    pub multipliers: Vec<Rat>,
}

#[derive(Clone, Debug)]
pub enum SimplexOutcome {
    Optimal { point: Vec<Rat>, value: Rat },
    Infeasible { certificate: FarkasCertificate },
    Unbounded { ray: Vec<Rat> },
}

/// Re-check a Farkas certificate against the raw constraint system. Pure;
/// shares nothing with the solver that produced the certificate.
pub fn verify_infeasibility_certificate(lp: &LinearProgram, cert: &FarkasCertificate) -> bool {
    if cert.multipliers.len() != lp.constraints.len() {
        return false;
    }
    for (row, y) in lp.constraints.iter().zip(&cert.multipliers) {
        match row.rel {
            Rel::Le if y.is_negative() => return false,
            Rel::Ge if y.is_positive() => return false,
            _ => {}
        }
    }
    let mut combined = vec![Rat::zero(); lp.num_vars];
    let mut rhs = Rat::zero();
    for (row, y) in lp.constraints.iter().zip(&cert.multipliers) {
        if y.is_zero() {
            continue;
        }
        for (j, a) in row.coeffs.iter().enumerate() {
            if !a.is_zero() {
                combined[j] += y * a;
            }
        }
        rhs += y * &row.rhs;
    }
    combined.iter().all(|c| !c.is_negative()) && rhs.is_negative()
}

struct Tableau {
    rows: Vec<Vec<Rat>>,
    rhs: Vec<Rat>,
    zrow: Vec<Rat>,
    /// Negated objective value of the current basis (minimization sense),
    /// so the pivot updates it exactly like a constraint row.
    zval: Rat,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, prow: usize, pcol: usize) {
        let pivot = self.rows[prow][pcol].clone();
        debug_assert!(!pivot.is_zero());
        for entry in self.rows[prow].iter_mut() {
            if !entry.is_zero() {
                *entry /= &pivot;
            }
        }
        self.rhs[prow] /= &pivot;
        for r in 0..self.rows.len() {
            if r == prow {
                continue;
            }
            let factor = self.rows[r][pcol].clone();
            if factor.is_zero() {
                continue;
            }
            for c in 0..self.ncols {
                if !self.rows[prow][c].is_zero() {
                    let delta = &factor * &self.rows[prow][c];
                    self.rows[r][c] -= delta;
                }
            }
            let delta = &factor * &self.rhs[prow];
            self.rhs[r] -= delta;
        }
        let factor = self.zrow[pcol].clone();
        if !factor.is_zero() {
            for c in 0..self.ncols {
                if !self.rows[prow][c].is_zero() {
                    let delta = &factor * &self.rows[prow][c];
                    self.zrow[c] -= delta;
                }
            }
            let delta = &factor * &self.rhs[prow];
            self.zval -= delta;
        }
        self.basis[prow] = pcol;
    }

    /// Minimize with Bland's rule. `allowed` masks columns that may enter.
    /// Returns the entering column on unboundedness.
    fn run(&mut self, allowed: &[bool]) -> Option<usize> {
        loop {
            let entering = (0..self.ncols).find(|&j| allowed[j] && self.zrow[j].is_negative());
            let Some(pcol) = entering else { return None };
            let mut leave: Option<(usize, Rat)> = None;
            for r in 0..self.rows.len() {
                if self.rows[r][pcol].is_positive() {
                    let ratio = &self.rhs[r] / &self.rows[r][pcol];
                    let better = match &leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < *lratio || (ratio == *lratio && self.basis[r] < self.basis[*lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            match leave {
                Some((prow, _)) => self.pivot(prow, pcol),
                None => return Some(pcol),
            }
        }
    }
}

/// Solve exactly. `Infeasible` carries a checkable Farkas certificate;
/// `Unbounded` carries a feasible improving ray over the structural
/// variables.
pub fn simplex(lp: &LinearProgram) -> SimplexOutcome {
    let nvars = lp.num_vars;
    let nrows = lp.constraints.len();

    // Normalize every row to a nonnegative right-hand side.
    let mut flipped = vec![false; nrows];
    let mut rows: Vec<(Vec<Rat>, Rel, Rat)> = Vec::with_capacity(nrows);
    for (i, c) in lp.constraints.iter().enumerate() {
        debug_assert_eq!(c.coeffs.len(), nvars);
        if c.rhs.is_negative() {
            flipped[i] = true;
            let coeffs = c.coeffs.iter().map(|a| -a).collect();
            let rel = match c.rel {
                Rel::Le => Rel::Ge,
                Rel::Ge => Rel::Le,
                Rel::Eq => Rel::Eq,
            };
            rows.push((coeffs, rel, -c.rhs.clone()));
        } else {
            rows.push((c.coeffs.clone(), c.rel, c.rhs.clone()));
        }
    }

    let n_slack = rows.iter().filter(|(_, rel, _)| *rel != Rel::Eq).count();
    let n_art = rows.iter().filter(|(_, rel, _)| *rel != Rel::Le).count();
    let ncols = nvars + n_slack + n_art;

    let mut t = Tableau {
        rows: vec![vec![Rat::zero(); ncols]; nrows],
        rhs: Vec::with_capacity(nrows),
        zrow: vec![Rat::zero(); ncols],
        zval: Rat::zero(),
        basis: vec![0; nrows],
        ncols,
    };
    let mut slack_col = vec![None; nrows];
    let mut art_col = vec![None; nrows];
    let mut next_slack = nvars;
    let mut next_art = nvars + n_slack;
    for (r, (coeffs, rel, rhs)) in rows.iter().enumerate() {
        for (j, a) in coeffs.iter().enumerate() {
            t.rows[r][j] = a.clone();
        }
        match rel {
            Rel::Le => {
                t.rows[r][next_slack] = Rat::one();
                slack_col[r] = Some(next_slack);
                t.basis[r] = next_slack;
                next_slack += 1;
            }
            Rel::Ge => {
                t.rows[r][next_slack] = -Rat::one();
                slack_col[r] = Some(next_slack);
                next_slack += 1;
                t.rows[r][next_art] = Rat::one();
                art_col[r] = Some(next_art);
                t.basis[r] = next_art;
                next_art += 1;
            }
            Rel::Eq => {
                t.rows[r][next_art] = Rat::one();
                art_col[r] = Some(next_art);
                t.basis[r] = next_art;
                next_art += 1;
            }
        }
        t.rhs.push(rhs.clone());
    }

    let is_art = |j: usize| j >= nvars + n_slack;

    // Phase 1: minimize the sum of artificials.
    if n_art > 0 {
        for j in 0..ncols {
            if is_art(j) {
                continue;
            }
            let mut z = Rat::zero();
            for r in 0..nrows {
                if art_col[r] == Some(t.basis[r]) && !t.rows[r][j].is_zero() {
                    z -= &t.rows[r][j];
                }
            }
            t.zrow[j] = z;
        }
        let mut zval = Rat::zero();
        for r in 0..nrows {
            if art_col[r] == Some(t.basis[r]) {
                zval -= &t.rhs[r];
            }
        }
        t.zval = zval;

        let allowed: Vec<bool> = (0..ncols).map(|_| true).collect();
        let unbounded = t.run(&allowed);
        debug_assert!(unbounded.is_none(), "phase 1 is bounded below by zero");

        if t.zval.is_negative() {
            // Infeasible: read the phase-1 dual off the initial identity
            // columns and map it back through the row normalization.
            let mut multipliers = Vec::with_capacity(nrows);
            for r in 0..nrows {
                let y = match (slack_col[r], art_col[r], rows[r].1) {
                    (Some(s), _, Rel::Le) => -t.zrow[s].clone(),
                    (_, Some(a), _) => Rat::one() - &t.zrow[a],
                    _ => unreachable!("every row has an identity column"),
                };
                // Certificate convention: z = -y, undone per-row flip.
                multipliers.push(if flipped[r] { y } else { -y });
            }
            return SimplexOutcome::Infeasible {
                certificate: FarkasCertificate { multipliers },
            };
        }

        // Drive remaining zero-level artificials out of the basis.
        let mut r = 0;
        while r < t.rows.len() {
            if is_art(t.basis[r]) {
                let pivot_col = (0..ncols).find(|&j| !is_art(j) && !t.rows[r][j].is_zero());
                match pivot_col {
                    Some(j) => t.pivot(r, j),
                    None => {
                        // Redundant row.
                        t.rows.remove(r);
                        t.rhs.remove(r);
                        t.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    // Phase 2 over the original objective (internally a minimization).
    let cost: Vec<Rat> = (0..ncols)
        .map(|j| {
            if j < nvars {
                match lp.sense {
                    Sense::Max => -lp.objective[j].clone(),
                    Sense::Min => lp.objective[j].clone(),
                }
            } else {
                Rat::zero()
            }
        })
        .collect();
    for j in 0..ncols {
        let mut z = cost[j].clone();
        for r in 0..t.rows.len() {
            if !cost[t.basis[r]].is_zero() && !t.rows[r][j].is_zero() {
                z -= &cost[t.basis[r]] * &t.rows[r][j];
            }
        }
        t.zrow[j] = z;
    }
    t.zval = Rat::zero();
    for r in 0..t.rows.len() {
        if !cost[t.basis[r]].is_zero() {
            t.zval -= &cost[t.basis[r]] * &t.rhs[r];
        }
    }

    let allowed: Vec<bool> = (0..ncols).map(|j| !is_art(j)).collect();
    if let Some(entering) = t.run(&allowed) {
        let mut ray = vec![Rat::zero(); nvars];
        if entering < nvars {
            ray[entering] = Rat::one();
        }
        for r in 0..t.rows.len() {
            if t.basis[r] < nvars && !t.rows[r][entering].is_zero() {
                ray[t.basis[r]] = -t.rows[r][entering].clone();
            }
        }
        return SimplexOutcome::Unbounded { ray };
    }

    let mut point = vec![Rat::zero(); nvars];
    for r in 0..t.rows.len() {
        if t.basis[r] < nvars {
            point[t.basis[r]] = t.rhs[r].clone();
        }
    }
    let value = match lp.sense {
        Sense::Max => t.zval.clone(),
        Sense::Min => -t.zval.clone(),
    };
    SimplexOutcome::Optimal { point, value }
}

/// Evaluate a point against every constraint, exactly.
pub fn point_is_feasible(lp: &LinearProgram, point: &[Rat]) -> bool {
    if point.iter().any(|v| v.is_negative()) {
        return false;
    }
    lp.constraints.iter().all(|c| {
        let lhs = crate::util::dot(&c.coeffs, point);
        match c.rel {
            Rel::Le => lhs <= c.rhs,
            Rel::Eq => lhs == c.rhs,
            Rel::Ge => lhs >= c.rhs,
        }
    })
}

/// Brute-force LP oracle: enumerate candidate basic points (every choice of
/// `num_vars` tight rows among the constraints and the nonnegativity
/// bounds), keep the feasible ones, and maximize directly. Intended for
/// cross-checking the simplex on small systems.
pub fn brute_force_optimum(lp: &LinearProgram) -> Option<(Vec<Rat>, Rat)> {
    let n = lp.num_vars;
    // Rows: constraints as equalities, plus x_j = 0 for each variable.
    let mut rows: Vec<(Vec<Rat>, Rat)> = lp
        .constraints
        .iter()
        .map(|c| (c.coeffs.clone(), c.rhs.clone()))
        .collect();
    for j in 0..n {
        let mut coeffs = vec![Rat::zero(); n];
        coeffs[j] = Rat::one();
        rows.push((coeffs, Rat::zero()));
    }
    let total = rows.len();
    let mut best: Option<(Vec<Rat>, Rat)> = None;
    let mut choose = vec![0usize; n];
    fn rec(
        rows: &[(Vec<Rat>, Rat)],
        lp: &LinearProgram,
        choose: &mut Vec<usize>,
        depth: usize,
        start: usize,
        total: usize,
        best: &mut Option<(Vec<Rat>, Rat)>,
    ) {
        let n = lp.num_vars;
        if depth == n {
            let a: Vec<Vec<Rat>> = choose.iter().map(|&r| rows[r].0.clone()).collect();
            let b: Vec<Rat> = choose.iter().map(|&r| rows[r].1.clone()).collect();
            if let Some(x) = crate::util::solve_square(&a, &b) {
                if point_is_feasible(lp, &x) {
                    let value = crate::util::dot(&lp.objective, &x);
                    let keep = match (&*best, lp.sense) {
                        (None, _) => true,
                        (Some((_, bv)), Sense::Max) => value > *bv,
                        (Some((_, bv)), Sense::Min) => value < *bv,
                    };
                    if keep {
                        *best = Some((x, value));
                    }
                }
            }
            return;
        }
        for r in start..total {
            choose[depth] = r;
            rec(rows, lp, choose, depth + 1, r + 1, total, best);
        }
    }
    rec(&rows, lp, &mut choose, 0, 0, total, &mut best);
    best
}
