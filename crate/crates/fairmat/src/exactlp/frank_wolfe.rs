//! Conditional-gradient (Frank-Wolfe) minimization of the strictly convex
//! anonymous objective over the assignment polytope.
//!
//! The objective is `Σ_i Σ_e (Σ_{e'⪰_i e} (1 − x_{ie'}))²` — a positive
//! quadratic in the preference-prefix transform, so exact line search has a
//! closed form. Away steps are used alongside ordinary steps (same linear
//! minimization oracle, same duality-gap stopping rule); without them the
//! gap decays too slowly to reach tight tolerances when the optimum lies on
//! a face.

use super::polytope::{solver_rows, PolytopeError, PolytopeP};
use super::simplex::{simplex, LinearProgram, Sense, SimplexOutcome};
use crate::domain::Instance;
use crate::rat::{self, Rat};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Clone, Copy, Debug)]
pub struct FwOptions {
    /// Stop once the Frank-Wolfe duality gap is at most this.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for FwOptions {
    fn default() -> Self {
        FwOptions {
            tol: 1e-9,
            max_iters: 1_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FwResult {
    pub x: Vec<Vec<f64>>,
    /// The duality gap certified at the returned point.
    pub gap: f64,
    pub iterations: usize,
    pub objective: f64,
}

#[derive(Clone, Debug, Error)]
pub enum FwError {
    #[error("duality gap {gap} not within tolerance after {iterations} iterations")]
    MaxIterations { gap: f64, iterations: usize },
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

struct Quadratic {
    n: usize,
    m: usize,
    /// ranks[i][e] = position of item e in agent i's order.
    ranks: Vec<Vec<usize>>,
}

impl Quadratic {
    fn new(inst: &Instance) -> Self {
        let ranks = inst
            .prefs
            .iter()
            .map(|p| (0..inst.m()).map(|e| p.rank(e)).collect())
            .collect();
        Quadratic {
            n: inst.n(),
            m: inst.m(),
            ranks,
        }
    }

    /// Cumulative prefix sums of `row` in one agent's preference order.
    fn prefixes(&self, i: usize, row: &[f64]) -> Vec<f64> {
        let mut by_pos = vec![0.0; self.m];
        for (e, &v) in row.iter().enumerate() {
            by_pos[self.ranks[i][e]] = v;
        }
        let mut acc = 0.0;
        by_pos
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect()
    }

    fn objective(&self, x: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            for (k, pfx) in self.prefixes(i, &x[i]).iter().enumerate() {
                let res = (k + 1) as f64 - pfx;
                total += res * res;
            }
        }
        total
    }

    fn gradient(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut g = vec![vec![0.0; self.m]; self.n];
        for i in 0..self.n {
            let pfx = self.prefixes(i, &x[i]);
            // Suffix sums of the residuals: item e enters all prefixes at
            // positions ≥ rank(e).
            let mut suffix = vec![0.0; self.m + 1];
            for k in (0..self.m).rev() {
                suffix[k] = suffix[k + 1] + ((k + 1) as f64 - pfx[k]);
            }
            for e in 0..self.m {
                g[i][e] = -2.0 * suffix[self.ranks[i][e]];
            }
        }
        g
    }

    /// The constant quadratic form `dᵀ∇²f d = 2 Σ prefix(d)²`.
    fn curvature(&self, d: &[Vec<f64>]) -> f64 {
        let mut q = 0.0;
        for i in 0..self.n {
            for pfx in self.prefixes(i, &d[i]) {
                q += 2.0 * pfx * pfx;
            }
        }
        q
    }
}

fn dot(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x * y).sum::<f64>())
        .sum()
}

/// Exact linear minimization oracle over P. Returns the vertex both as
/// exact rationals (identity key for the active set) and as floats.
fn lmo(
    inst: &Instance,
    p: &PolytopeP,
    g: &[Vec<f64>],
) -> Result<(Vec<Rat>, Vec<Vec<f64>>), PolytopeError> {
    let n = inst.n();
    let m = inst.m();
    match p {
        PolytopeP::HRep { .. } => {
            let objective: Vec<Rat> = g
                .iter()
                .flatten()
                .map(|&v| rat::from_f64(v).expect("finite gradient"))
                .collect();
            let lp = LinearProgram {
                num_vars: n * m,
                objective,
                sense: Sense::Min,
                constraints: solver_rows(inst)?,
            };
            match simplex(&lp) {
                SimplexOutcome::Optimal { point, .. } => {
                    let floats = (0..n)
                        .map(|i| point[i * m..(i + 1) * m].iter().map(rat::to_f64).collect())
                        .collect();
                    Ok((point, floats))
                }
                SimplexOutcome::Infeasible { certificate } => {
                    Err(PolytopeError::Infeasible(certificate))
                }
                SimplexOutcome::Unbounded { .. } => Err(PolytopeError::Unbounded),
            }
        }
        PolytopeP::VRep { assignments, .. } => {
            let mut best: Option<(f64, usize)> = None;
            for (idx, x) in assignments.iter().enumerate() {
                let mut score = 0.0;
                for (i, b) in x.bundles.iter().enumerate() {
                    for e in b.iter() {
                        score += g[i][e];
                    }
                }
                if best.as_ref().is_none_or(|(s, _)| score < *s) {
                    best = Some((score, idx));
                }
            }
            let (_, idx) = best.expect("P always contains the empty assignment");
            let pi = assignments[idx].as_fractional(m);
            let point: Vec<Rat> = pi.rows().iter().flatten().cloned().collect();
            let floats = pi
                .rows()
                .iter()
                .map(|row| row.iter().map(rat::to_f64).collect())
                .collect();
            Ok((point, floats))
        }
    }
}

fn unflatten(v: &[f64], n: usize, m: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| v[i * m..(i + 1) * m].to_vec()).collect()
}

/// Minimize the anonymous quadratic over P to the requested duality gap.
pub fn frank_wolfe_qp(
    inst: &Instance,
    p: &PolytopeP,
    opts: FwOptions,
) -> Result<FwResult, FwError> {
    let n = inst.n();
    let m = inst.m();
    let quad = Quadratic::new(inst);

    // Active set: exact vertex -> weight. Start from the vertex minimizing
    // the gradient at the origin.
    let zero = vec![vec![0.0; m]; n];
    let (v0, _) = lmo(inst, p, &quad.gradient(&zero))?;
    let mut active: HashMap<Vec<Rat>, f64> = HashMap::new();
    active.insert(v0, 1.0);

    let mut gap = f64::INFINITY;
    for iteration in 0..opts.max_iters {
        let mut xf = vec![0.0; n * m];
        for (v, w) in &active {
            for (idx, coord) in v.iter().enumerate() {
                xf[idx] += w * rat::to_f64(coord);
            }
        }
        let x = unflatten(&xf, n, m);
        let g = quad.gradient(&x);

        let (s_key, s) = lmo(inst, p, &g)?;
        gap = dot(&g, &x) - dot(&g, &s);
        if gap <= opts.tol {
            return Ok(FwResult {
                objective: quad.objective(&x),
                x,
                gap,
                iterations: iteration,
            });
        }

        // Away vertex: the active vertex the gradient most wants to leave.
        let (a_key, a_weight) = active
            .iter()
            .map(|(v, w)| {
                let score: f64 = v
                    .iter()
                    .enumerate()
                    .map(|(idx, c)| rat::to_f64(c) * g[idx / m][idx % m])
                    .sum();
                (v.clone(), *w, score)
            })
            .max_by(|a, b| a.2.total_cmp(&b.2))
            .map(|(v, w, _)| (v, w))
            .expect("active set is nonempty");
        let af: Vec<f64> = a_key.iter().map(rat::to_f64).collect();
        let a = unflatten(&af, n, m);

        let d_fw: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..m).map(|e| s[i][e] - x[i][e]).collect())
            .collect();
        let d_aw: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..m).map(|e| x[i][e] - a[i][e]).collect())
            .collect();
        let progress_fw = -dot(&g, &d_fw);
        let progress_aw = -dot(&g, &d_aw);

        let (dir, gamma_max, is_fw) = if progress_fw >= progress_aw {
            (d_fw, 1.0, true)
        } else {
            let denom = 1.0 - a_weight;
            let cap = if denom <= f64::EPSILON {
                f64::MAX
            } else {
                a_weight / denom
            };
            (d_aw, cap, false)
        };
        let slope = dot(&g, &dir);
        let curve = quad.curvature(&dir);
        let gamma = if curve > 0.0 {
            (-slope / curve).clamp(0.0, gamma_max)
        } else {
            gamma_max
        };
        if gamma <= 0.0 {
            // Numerically stalled below the achievable gap.
            return Err(FwError::MaxIterations {
                gap,
                iterations: iteration,
            });
        }

        if is_fw {
            for w in active.values_mut() {
                *w *= 1.0 - gamma;
            }
            *active.entry(s_key).or_insert(0.0) += gamma;
        } else {
            for w in active.values_mut() {
                *w *= 1.0 + gamma;
            }
            if let Some(w) = active.get_mut(&a_key) {
                *w -= gamma;
            }
        }
        active.retain(|_, w| *w > 1e-15);
        let total: f64 = active.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            for w in active.values_mut() {
                *w /= total;
            }
        }
    }
    Err(FwError::MaxIterations {
        gap,
        iterations: opts.max_iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ConstraintFamily, Preference};
    use crate::exactlp::polytope::build_p;

    fn identical_free(n: usize, m: usize) -> Instance {
        let labels: Vec<String> = (0..m).map(|e| format!("x{e}")).collect();
        let refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
        Instance::new(
            &refs,
            (0..n).map(|_| Preference::new((0..m).collect())).collect(),
            (0..n).map(|_| ConstraintFamily::free(m)).collect(),
        )
    }

    #[test]
    fn single_agent_single_item_saturates() {
        let inst = identical_free(1, 1);
        let p = build_p(&inst).unwrap();
        let res = frank_wolfe_qp(
            &inst,
            &p,
            FwOptions {
                tol: 1e-10,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((res.x[0][0] - 1.0).abs() < 1e-6, "got {}", res.x[0][0]);
    }

    #[test]
    fn two_identical_agents_split_the_item() {
        let inst = identical_free(2, 1);
        let p = build_p(&inst).unwrap();
        let res = frank_wolfe_qp(
            &inst,
            &p,
            FwOptions {
                tol: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((res.x[0][0] - 0.5).abs() < 1e-6);
        assert!((res.x[1][0] - 0.5).abs() < 1e-6);
    }

    /// The converged objective is within tolerance of any feasible point's,
    /// in particular the eating mechanism's exact output.
    #[test]
    fn ex2_objective_no_worse_than_eating_point() {
        let inst = crate::instances::gallery("ex2").unwrap().instance;
        let p = build_p(&inst).unwrap();
        let tol = 1e-7;
        let res = frank_wolfe_qp(
            &inst,
            &p,
            FwOptions {
                tol,
                ..Default::default()
            },
        )
        .unwrap();
        let eating = crate::mechanisms::mech_eating(&inst).unwrap().pi;
        let quad = Quadratic::new(&inst);
        let eating_f: Vec<Vec<f64>> = eating
            .rows()
            .iter()
            .map(|row| row.iter().map(crate::rat::to_f64).collect())
            .collect();
        assert!(res.objective <= quad.objective(&eating_f) + tol);
    }

    #[test]
    fn iteration_cap_reports_gap() {
        let inst = identical_free(2, 1);
        let p = build_p(&inst).unwrap();
        let result = frank_wolfe_qp(
            &inst,
            &p,
            FwOptions {
                tol: 1e-12,
                max_iters: 1,
            },
        );
        assert!(matches!(result, Err(FwError::MaxIterations { .. })));
    }

    #[test]
    fn vrep_path_matches_symmetric_optimum() {
        let mut inst = identical_free(2, 1);
        // Force the general-hereditary path with a budget family.
        inst.constraints = vec![
            ConstraintFamily::budget(1, vec![1], crate::rat::int(1)),
            ConstraintFamily::budget(1, vec![1], crate::rat::int(1)),
        ];
        let p = build_p(&inst).unwrap();
        assert!(!p.is_hrep());
        let res = frank_wolfe_qp(&inst, &p, FwOptions::default()).unwrap();
        assert!((res.x[0][0] - 0.5).abs() < 1e-6);
    }
}
