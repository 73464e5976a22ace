//! Small shared utilities: the deterministic PRNG used by generators and
//! samplers, and exact dense linear algebra for vertex enumeration.

use crate::rat::Rat;
use num_traits::Zero;

/// SplitMix64. Deterministic across platforms; all randomized artifacts
/// (instance generators, interior-point samplers) derive from an explicit
/// seed through this.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `0..n` (n > 0).
    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Uniform in `lo..=hi`.
    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi - lo + 1)
    }

    pub fn chance(&mut self, num: u32, den: u32) -> bool {
        (self.next_u64() % den as u64) < num as u64
    }

    /// Random rational in (0, 1] with denominator `den`.
    pub fn rat_in_unit(&mut self, den: u32) -> Rat {
        crate::rat::rat(self.range(1, den as usize) as i64, den as i64)
    }

    pub fn shuffle<T>(&mut self, v: &mut [T]) {
        for i in (1..v.len()).rev() {
            let j = self.below(i + 1);
            v.swap(i, j);
        }
    }
}

/// Solve the square system `a x = b` exactly. `None` if `a` is singular.
pub fn solve_square(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let n = a.len();
    debug_assert!(a.iter().all(|row| row.len() == n) && b.len() == n);
    let mut m: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for entry in m[col].iter_mut() {
            *entry /= &p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in col..=n {
                    let delta = &factor * &m[col][c];
                    m[r][c] -= delta;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

/// Reduced row echelon form in place; returns the pivot column of each
/// pivot row.
pub fn rref(m: &mut [Vec<Rat>]) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return vec![];
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == rows {
            break;
        }
        let Some(p) = (row..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].clone();
        for entry in m[row].iter_mut() {
            *entry /= &inv;
        }
        for r in 0..rows {
            if r != row && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in 0..cols {
                    let delta = &factor * &m[row][c];
                    m[r][c] -= delta;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

/// Affine solution set of `a x = b`: a particular solution plus a basis of
/// the homogeneous null space. `None` if inconsistent.
pub fn affine_solution_set(a: &[Vec<Rat>], b: &[Rat]) -> Option<(Vec<Rat>, Vec<Vec<Rat>>)> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut m: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut m);
    // Inconsistent if a pivot lands in the RHS column.
    if pivots.contains(&cols) {
        return None;
    }
    let mut particular = vec![Rat::zero(); cols];
    for (prow, &pcol) in pivots.iter().enumerate() {
        particular[pcol] = m[prow][cols].clone();
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let mut basis = Vec::with_capacity(free.len());
    for &f in &free {
        let mut v = vec![Rat::zero(); cols];
        v[f] = crate::rat::one();
        for (prow, &pcol) in pivots.iter().enumerate() {
            v[pcol] = -m[prow][f].clone();
        }
        basis.push(v);
    }
    Some((particular, basis))
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| x * y)
        .fold(Rat::zero(), |acc, t| acc + t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, rat};

    #[test]
    fn solves_small_system() {
        let a = vec![vec![int(2), int(1)], vec![int(1), int(-1)]];
        let b = vec![int(5), int(1)];
        let x = solve_square(&a, &b).unwrap();
        assert_eq!(x, vec![int(2), int(1)]);
    }

    #[test]
    fn singular_detected() {
        let a = vec![vec![int(1), int(2)], vec![int(2), int(4)]];
        assert!(solve_square(&a, &[int(1), int(2)]).is_none());
    }

    #[test]
    fn affine_set_of_rank_one_system() {
        // x + y = 1 in R^2: dimension-1 solution set.
        let a = vec![vec![int(1), int(1)]];
        let b = vec![int(1)];
        let (p, basis) = affine_solution_set(&a, &b).unwrap();
        assert_eq!(p[0].clone() + p[1].clone(), int(1));
        assert_eq!(basis.len(), 1);
        assert_eq!(basis[0][0].clone() + basis[0][1].clone(), int(0));
    }

    #[test]
    fn inconsistent_system_rejected() {
        let a = vec![vec![int(1), int(1)], vec![int(2), int(2)]];
        let b = vec![int(1), int(3)];
        assert!(affine_solution_set(&a, &b).is_none());
    }

    #[test]
    fn splitmix_is_deterministic() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..16 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_eq!(
            SplitMix64::new(7).rat_in_unit(64),
            SplitMix64::new(7).rat_in_unit(64)
        );
        let _ = rat(1, 2);
    }
}
