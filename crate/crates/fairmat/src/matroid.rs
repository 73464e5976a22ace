//! Matroid rank functions, the reduced rank `r^x`, the lexicographic choice
//! function, eating capacities, and the augmentation-axiom check.
//!
//! Laminar kinds (Free, Uniform, Partition) have closed-form fast paths;
//! explicitly encoded matroids go through subset enumeration under the
//! configured guards.

use crate::domain::{membership, ConstraintFamily, FamilyKind, ItemSet, Preference};
use crate::rat::{self, Rat};
use num_traits::{One, Zero};
use std::cell::RefCell;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MatroidError {
    #[error("constraint family is not a matroid")]
    NotAMatroid,
    #[error("ground set of size {size} exceeds the enumeration guard {guard}")]
    GroundSetTooLarge { size: usize, guard: usize },
}

/// A laminar forest built from partition blocks; the closed-form evaluator
/// for ranks and reduced ranks.
#[derive(Clone, Debug)]
struct LaminarForest {
    /// (set, cap, children indices, items not covered by any child)
    nodes: Vec<(ItemSet, usize, Vec<usize>, ItemSet)>,
    roots: Vec<usize>,
    covered: ItemSet,
}

impl LaminarForest {
    fn from_blocks(blocks: &[(ItemSet, usize)]) -> Self {
        let mut order: Vec<usize> = (0..blocks.len()).collect();
        order.sort_by_key(|&k| blocks[k].0.len());
        let mut nodes: Vec<(ItemSet, usize, Vec<usize>, ItemSet)> = Vec::new();
        let mut roots: Vec<usize> = Vec::new();
        let mut covered = ItemSet::EMPTY;
        // Smallest-first insertion: the parent of a node is the smallest
        // strictly larger block containing it.
        for &k in &order {
            let (set, cap) = blocks[k];
            nodes.push((set, cap, Vec::new(), set));
            covered = covered.union(set);
        }
        for idx in 0..nodes.len() {
            let set = nodes[idx].0;
            let mut parent: Option<usize> = None;
            for (j, node) in nodes.iter().enumerate() {
                if j != idx && set.is_subset_of(node.0) && set != node.0 {
                    match parent {
                        Some(p) if nodes[p].0.len() <= node.0.len() => {}
                        _ => parent = Some(j),
                    }
                }
                // Equal sets: treat the later one as the child of the earlier.
                if j < idx && set == node.0 {
                    parent = Some(j);
                }
            }
            match parent {
                Some(p) => nodes[p].2.push(idx),
                None => roots.push(idx),
            }
        }
        for idx in 0..nodes.len() {
            let mut direct = nodes[idx].0;
            for &c in &nodes[idx].2.clone() {
                direct = direct.minus(nodes[c].0);
            }
            nodes[idx].3 = direct;
        }
        LaminarForest {
            nodes,
            roots,
            covered,
        }
    }

    /// Rank of `x` restricted to the subtree at `node`, with per-item caps
    /// given by `leaf`.
    fn eval(&self, node: usize, x: ItemSet, leaf: &dyn Fn(usize) -> Rat) -> Rat {
        let (_, cap, ref children, direct) = self.nodes[node];
        let mut total = Rat::zero();
        for &c in children {
            total += self.eval(c, x, leaf);
        }
        for e in direct.intersect(x).iter() {
            total += leaf(e);
        }
        total.min(rat::int(cap as i64))
    }

    fn eval_all(&self, x: ItemSet, uncovered_of: ItemSet, leaf: &dyn Fn(usize) -> Rat) -> Rat {
        let mut total = Rat::zero();
        for &r in &self.roots {
            total += self.eval(r, x, leaf);
        }
        for e in uncovered_of.intersect(x).minus(self.covered).iter() {
            total += leaf(e);
        }
        total
    }
}

/// A rank oracle over a matroid, memoizing greedy evaluations for
/// explicitly encoded families.
pub struct RankOracle {
    family: ConstraintFamily,
    forest: Option<LaminarForest>,
    cache: RefCell<HashMap<ItemSet, usize>>,
}

impl RankOracle {
    pub fn new(family: &ConstraintFamily) -> Result<Self, MatroidError> {
        if !family.is_matroid() {
            return Err(MatroidError::NotAMatroid);
        }
        let forest = match family.kind() {
            FamilyKind::Free => Some(LaminarForest::from_blocks(&[])),
            FamilyKind::Uniform { cap } => Some(LaminarForest::from_blocks(&[(
                ItemSet::full(family.m()),
                *cap,
            )])),
            FamilyKind::Partition { blocks } => {
                let pairs: Vec<(ItemSet, usize)> =
                    blocks.iter().map(|b| (b.items, b.cap)).collect();
                Some(LaminarForest::from_blocks(&pairs))
            }
            _ => None,
        };
        Ok(RankOracle {
            family: family.clone(),
            forest,
            cache: RefCell::new(HashMap::new()),
        })
    }

    pub fn family(&self) -> &ConstraintFamily {
        &self.family
    }

    pub fn m(&self) -> usize {
        self.family.m()
    }

    /// `r(X) = max{|Y| : Y ⊆ X, Y feasible}`; closed form for laminar
    /// kinds, greedy otherwise (valid because the family is a matroid).
    pub fn rank(&self, x: ItemSet) -> usize {
        if let Some(forest) = &self.forest {
            let leaf = |_e: usize| Rat::one();
            let r = forest.eval_all(x, ItemSet::full(self.m()), &leaf);
            debug_assert!(r.is_integer());
            return r.to_integer().try_into().unwrap_or(0);
        }
        if let Some(&r) = self.cache.borrow().get(&x) {
            return r;
        }
        let mut kept = ItemSet::EMPTY;
        for e in x.iter() {
            if membership(&self.family, kept.with(e)) {
                kept = kept.with(e);
            }
        }
        let r = kept.len();
        self.cache.borrow_mut().insert(x, r);
        r
    }

    fn is_laminar(&self) -> bool {
        self.forest.is_some()
    }
}

/// The polymatroid reduction `r^x(X) = min{ r(Y) + x(X∖Y) : Y ⊆ X }`.
pub struct ReducedRank<'a> {
    oracle: &'a RankOracle,
    x: Vec<Rat>,
    cache: RefCell<HashMap<ItemSet, Rat>>,
}

impl<'a> ReducedRank<'a> {
    pub fn new(oracle: &'a RankOracle, x: Vec<Rat>) -> Self {
        debug_assert_eq!(x.len(), oracle.m());
        ReducedRank {
            oracle,
            x,
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn x(&self) -> &[Rat] {
        &self.x
    }

    /// `r^x(X)`, exact. Laminar fast path clips each leaf at min(1, x_e);
    /// otherwise brute force over subsets of `X` under the guard.
    pub fn value(&self, set: ItemSet) -> Result<Rat, MatroidError> {
        if let Some(v) = self.cache.borrow().get(&set) {
            return Ok(v.clone());
        }
        let v = if let Some(forest) = &self.oracle.forest {
            let leaf = |e: usize| self.x[e].clone().min(Rat::one());
            forest.eval_all(set, ItemSet::full(self.oracle.m()), &leaf)
        } else {
            let guard = crate::guards().subset_m;
            if set.len() > guard {
                return Err(MatroidError::GroundSetTooLarge {
                    size: set.len(),
                    guard,
                });
            }
            let mut best: Option<Rat> = None;
            for y in set.subsets() {
                let mut cand = rat::int(self.oracle.rank(y) as i64);
                for e in set.minus(y).iter() {
                    cand += &self.x[e];
                }
                best = Some(match best {
                    Some(b) => b.min(cand),
                    None => cand,
                });
            }
            best.unwrap_or_else(Rat::zero)
        };
        self.cache.borrow_mut().insert(set, v.clone());
        Ok(v)
    }
}

/// The lexicographically maximum vector of `conv(F)^x` with respect to the
/// preference, computed by telescoping reduced ranks over preference
/// prefixes.
pub fn choice(oracle: &RankOracle, pref: &Preference, x: &[Rat]) -> Result<Vec<Rat>, MatroidError> {
    let m = oracle.m();
    debug_assert_eq!(pref.m(), m);
    let rr = ReducedRank::new(oracle, x.to_vec());
    let mut result = vec![Rat::zero(); m];
    let mut prev = Rat::zero();
    let mut prefix = ItemSet::EMPTY;
    for k in 0..m {
        let e = pref.item_at(k);
        prefix = prefix.with(e);
        let cur = rr.value(prefix)?;
        result[e] = &cur - &prev;
        prev = cur;
    }
    Ok(result)
}

/// The largest `ε` with `x + ε·χ_e` still in `conv(F)`:
/// `min{ r(X) − x(X) : e ∈ X ⊆ E }`.
pub fn eat_capacity(oracle: &RankOracle, x: &[Rat], e: usize) -> Result<Rat, MatroidError> {
    let m = oracle.m();
    if oracle.is_laminar() {
        // Singleton bound plus every enclosing block's remaining capacity.
        let mut cap = Rat::one() - &x[e];
        if let Some(forest) = &oracle.forest {
            for &(set, block_cap, _, _) in &forest.nodes {
                if set.contains(e) {
                    let mass = set.iter().map(|i| &x[i]).fold(Rat::zero(), |a, v| a + v);
                    cap = cap.min(rat::int(block_cap as i64) - mass);
                }
            }
        }
        return Ok(cap);
    }
    let guard = crate::guards().subset_m;
    if m > guard {
        return Err(MatroidError::GroundSetTooLarge { size: m, guard });
    }
    let rest = ItemSet::full(m).without(e);
    let mut best: Option<Rat> = None;
    for y in rest.subsets() {
        let set = y.with(e);
        let mut cand = rat::int(oracle.rank(set) as i64);
        for i in set.iter() {
            cand -= &x[i];
        }
        best = Some(match best {
            Some(b) => b.min(cand),
            None => cand,
        });
    }
    Ok(best.expect("nonempty enumeration"))
}

/// Membership in the reduced polytope: `y(X) ≤ r^x(X)` for all `X ⊆ E`
/// (plus nonnegativity, which the caller guarantees).
pub fn in_reduced_polytope(rr: &ReducedRank<'_>, y: &[Rat]) -> Result<bool, MatroidError> {
    let m = rr.oracle.m();
    debug_assert_eq!(y.len(), m);
    if rr.oracle.is_laminar() {
        // conv(F)^x = { y ≥ 0 : y_e ≤ min(1, x_e), y(B) ≤ cap(B) }.
        for e in 0..m {
            if y[e] > rr.x[e].clone().min(Rat::one()) {
                return Ok(false);
            }
        }
        if let Some(forest) = &rr.oracle.forest {
            for &(set, cap, _, _) in &forest.nodes {
                let mass = set.iter().map(|i| &y[i]).fold(Rat::zero(), |a, v| a + v);
                if mass > rat::int(cap as i64) {
                    return Ok(false);
                }
            }
        }
        return Ok(true);
    }
    let guard = crate::guards().subset_m;
    if m > guard {
        return Err(MatroidError::GroundSetTooLarge { size: m, guard });
    }
    for set in ItemSet::full(m).subsets() {
        let mass = set.iter().map(|i| &y[i]).fold(Rat::zero(), |a, v| a + v);
        if mass > rr.value(set)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Does the family satisfy the matroid augmentation axiom? Checked by
/// enumerating every feasible set (`|X| < |Y|` pairs need some `e ∈ Y∖X`
/// with `X + e` feasible).
pub fn augmentation_check(family: &ConstraintFamily) -> Result<bool, MatroidError> {
    let m = family.m();
    let guard = crate::guards().family_m;
    if m > guard {
        return Err(MatroidError::GroundSetTooLarge { size: m, guard });
    }
    let feasible: Vec<ItemSet> = ItemSet::full(m)
        .subsets()
        .filter(|&s| membership(family, s))
        .collect();
    for &x in &feasible {
        for &y in &feasible {
            if x.len() < y.len() {
                let found = y.minus(x).iter().any(|e| membership(family, x.with(e)));
                if !found {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
