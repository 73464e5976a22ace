//! Core data model: items, preferences, hereditary constraint families,
//! instances, fractional assignments, and lotteries.
//!
//! All values here are immutable after construction. Probabilities are exact
//! rationals throughout.

use crate::rat::{self, Rat};
use num_traits::{One, Signed, Zero};
use std::fmt;

/// A set of item indices as a bitmask. Ground sets are capped at 32 items,
/// far above every enumeration guard.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ItemSet(pub u32);

impl ItemSet {
    pub const EMPTY: ItemSet = ItemSet(0);

    pub fn full(m: usize) -> Self {
        debug_assert!(m <= 32);
        if m == 32 {
            ItemSet(u32::MAX)
        } else {
            ItemSet((1u32 << m) - 1)
        }
    }

    pub fn singleton(e: usize) -> Self {
        ItemSet(1 << e)
    }

    pub fn from_items<I: IntoIterator<Item = usize>>(items: I) -> Self {
        let mut s = ItemSet::EMPTY;
        for e in items {
            s = s.with(e);
        }
        s
    }

    pub fn contains(self, e: usize) -> bool {
        self.0 & (1 << e) != 0
    }

    #[must_use]
    pub fn with(self, e: usize) -> Self {
        ItemSet(self.0 | (1 << e))
    }

    #[must_use]
    pub fn without(self, e: usize) -> Self {
        ItemSet(self.0 & !(1 << e))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        ItemSet(self.0 | other.0)
    }

    pub fn intersect(self, other: Self) -> Self {
        ItemSet(self.0 & other.0)
    }

    pub fn minus(self, other: Self) -> Self {
        ItemSet(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let e = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(e)
            }
        })
    }

    /// All subsets of this set, the empty set and the set itself included.
    pub fn subsets(self) -> impl Iterator<Item = ItemSet> {
        let mask = self.0;
        let mut current = 0u32;
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = ItemSet(current);
            if current == mask {
                done = true;
            } else {
                current = (current.wrapping_sub(mask)) & mask;
            }
            Some(out)
        })
    }
}

impl fmt::Debug for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, e) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

/// An indivisible item: a dense index plus a display label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Item {
    pub index: usize,
    pub label: String,
}

/// A strict total order over all items, most-preferred first, with the
/// inverse rank lookup.
#[derive(Clone, PartialEq, Eq)]
pub struct Preference {
    order: Vec<usize>,
    rank: Vec<usize>,
}

impl Preference {
    /// Build from an order vector. Malformed orders (non-permutations) are
    /// representable so that `validate_instance` can report them as data.
    pub fn new(order: Vec<usize>) -> Self {
        let m = order.len();
        let mut rank = vec![usize::MAX; m];
        for (pos, &e) in order.iter().enumerate() {
            if e < m && rank[e] == usize::MAX {
                rank[e] = pos;
            }
        }
        Preference { order, rank }
    }

    pub fn m(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Position of `e` in the order (0 = most preferred).
    pub fn rank(&self, e: usize) -> usize {
        self.rank[e]
    }

    /// Item at position `k`.
    pub fn item_at(&self, k: usize) -> usize {
        self.order[k]
    }

    /// The top-`k` items as a set.
    pub fn prefix(&self, k: usize) -> ItemSet {
        ItemSet::from_items(self.order[..k].iter().copied())
    }

    pub fn is_permutation(&self) -> bool {
        let m = self.order.len();
        let mut seen = vec![false; m];
        for &e in &self.order {
            if e >= m || seen[e] {
                return false;
            }
            seen[e] = true;
        }
        true
    }

    /// True iff `a` is strictly preferred to `b`.
    pub fn prefers(&self, a: usize, b: usize) -> bool {
        self.rank(a) < self.rank(b)
    }
}

impl fmt::Debug for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Preference{:?}", self.order)
    }
}

/// One capacity cap on one item set. Partition families carry a laminar
/// list of these (sets pairwise disjoint or nested).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub items: ItemSet,
    pub cap: usize,
}

/// The encoding of a hereditary set family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    /// Every subset of the ground set is feasible.
    Free,
    /// At most `cap` items total.
    Uniform { cap: usize },
    /// Laminar capacity caps: `|X ∩ B| ≤ cap(B)` for every block.
    Partition { blocks: Vec<Block> },
    /// Knapsack family `{X : Σ w(X) ≤ budget}`. Never treated as a matroid.
    Budget { weights: Vec<u64>, budget: Rat },
    /// Union of the power sets of the listed maximal sets (an antichain).
    ExplicitMaximal { maximal: Vec<ItemSet> },
}

/// A hereditary feasible-set family over a fixed ground set, with its
/// matroid classification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintFamily {
    m: usize,
    kind: FamilyKind,
    matroid: bool,
}

impl ConstraintFamily {
    /// Build a family and classify it. Free/Uniform/Partition kinds are
    /// matroids by construction; Budget never is; ExplicitMaximal is checked
    /// against the augmentation axiom when the ground set is small enough,
    /// and conservatively treated as general hereditary otherwise.
    pub fn new(m: usize, kind: FamilyKind) -> Self {
        let matroid = match &kind {
            FamilyKind::Free | FamilyKind::Uniform { .. } | FamilyKind::Partition { .. } => true,
            FamilyKind::Budget { .. } => false,
            FamilyKind::ExplicitMaximal { .. } => {
                if m <= crate::guards().family_m {
                    let probe = ConstraintFamily {
                        m,
                        kind: kind.clone(),
                        matroid: false,
                    };
                    crate::matroid::augmentation_check(&probe).unwrap_or(false)
                } else {
                    false
                }
            }
        };
        ConstraintFamily { m, kind, matroid }
    }

    pub fn free(m: usize) -> Self {
        Self::new(m, FamilyKind::Free)
    }

    pub fn uniform(m: usize, cap: usize) -> Self {
        Self::new(m, FamilyKind::Uniform { cap })
    }

    pub fn partition(m: usize, blocks: Vec<Block>) -> Self {
        Self::new(m, FamilyKind::Partition { blocks })
    }

    pub fn budget(m: usize, weights: Vec<u64>, budget: Rat) -> Self {
        Self::new(m, FamilyKind::Budget { weights, budget })
    }

    pub fn explicit_maximal(m: usize, maximal: Vec<ItemSet>) -> Self {
        Self::new(m, FamilyKind::ExplicitMaximal { maximal })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn is_matroid(&self) -> bool {
        self.matroid
    }
}

/// Membership oracle: is `s` feasible under the family's kind semantics?
pub fn membership(family: &ConstraintFamily, s: ItemSet) -> bool {
    match family.kind() {
        FamilyKind::Free => true,
        FamilyKind::Uniform { cap } => s.len() <= *cap,
        FamilyKind::Partition { blocks } => {
            blocks.iter().all(|b| s.intersect(b.items).len() <= b.cap)
        }
        FamilyKind::Budget { weights, budget } => {
            let total: u64 = s.iter().map(|e| weights[e]).sum();
            Rat::from_integer(total.into()) <= *budget
        }
        FamilyKind::ExplicitMaximal { maximal } => maximal.iter().any(|&max| s.is_subset_of(max)),
    }
}

/// A complete problem instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub items: Vec<Item>,
    pub prefs: Vec<Preference>,
    pub constraints: Vec<ConstraintFamily>,
}

impl Instance {
    pub fn new(
        labels: &[&str],
        prefs: Vec<Preference>,
        constraints: Vec<ConstraintFamily>,
    ) -> Self {
        let items = labels
            .iter()
            .enumerate()
            .map(|(index, label)| Item {
                index,
                label: label.to_string(),
            })
            .collect();
        Instance {
            items,
            prefs,
            constraints,
        }
    }

    pub fn n(&self) -> usize {
        self.prefs.len()
    }

    pub fn m(&self) -> usize {
        self.items.len()
    }

    pub fn label(&self, e: usize) -> &str {
        &self.items[e].label
    }

    pub fn item_index(&self, label: &str) -> Option<usize> {
        self.items.iter().position(|it| it.label == label)
    }

    pub fn identical_preferences(&self) -> bool {
        self.prefs.windows(2).all(|w| w[0] == w[1])
    }

    pub fn identical_constraints(&self) -> bool {
        self.constraints.windows(2).all(|w| w[0] == w[1])
    }

    pub fn all_matroids(&self) -> bool {
        self.constraints.iter().all(|f| f.is_matroid())
    }
}

/// An agents-by-items matrix of exact rationals. Feasibility (membership in
/// the assignment polytope) is not intrinsic; it is established by
/// `verify::check_feasible` or by construction.
#[derive(Clone, PartialEq, Eq)]
pub struct FractionalAssignment {
    pi: Vec<Vec<Rat>>,
}

impl FractionalAssignment {
    pub fn new(pi: Vec<Vec<Rat>>) -> Self {
        debug_assert!(pi.windows(2).all(|w| w[0].len() == w[1].len()));
        FractionalAssignment { pi }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        FractionalAssignment {
            pi: vec![vec![Rat::zero(); m]; n],
        }
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    pub fn m(&self) -> usize {
        self.pi.first().map_or(0, |r| r.len())
    }

    pub fn entry(&self, i: usize, e: usize) -> &Rat {
        &self.pi[i][e]
    }

    pub fn set_entry(&mut self, i: usize, e: usize, v: Rat) {
        self.pi[i][e] = v;
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.pi[i]
    }

    pub fn rows(&self) -> &[Vec<Rat>] {
        &self.pi
    }

    pub fn column_sum(&self, e: usize) -> Rat {
        self.pi
            .iter()
            .map(|row| &row[e])
            .fold(Rat::zero(), |acc, r| acc + r)
    }

    /// `Σ_{e ∈ set} π_{ie}`.
    pub fn row_mass(&self, i: usize, set: ItemSet) -> Rat {
        set.iter()
            .map(|e| &self.pi[i][e])
            .fold(Rat::zero(), |acc, r| acc + r)
    }

    /// True iff every entry is 0 or 1.
    pub fn is_integral(&self) -> bool {
        self.pi.iter().flatten().all(|v| v.is_zero() || v.is_one())
    }

    /// Entrywise average of two matrices of equal shape.
    pub fn average(a: &Self, b: &Self) -> Self {
        let half = rat::rat(1, 2);
        let pi =
            a.pi.iter()
                .zip(&b.pi)
                .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x + y) * &half).collect())
                .collect();
        FractionalAssignment { pi }
    }
}

impl fmt::Debug for FractionalAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FractionalAssignment[")?;
        for row in &self.pi {
            let cells: Vec<String> = row.iter().map(rat::display).collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        write!(f, "]")
    }
}

/// One feasible bundle per agent, pairwise disjoint.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeterministicAssignment {
    pub bundles: Vec<ItemSet>,
}

impl DeterministicAssignment {
    pub fn new(bundles: Vec<ItemSet>) -> Self {
        DeterministicAssignment { bundles }
    }

    pub fn empty(n: usize) -> Self {
        DeterministicAssignment {
            bundles: vec![ItemSet::EMPTY; n],
        }
    }

    pub fn n(&self) -> usize {
        self.bundles.len()
    }

    /// Bundles pairwise disjoint and each feasible for its agent.
    pub fn is_valid(&self, inst: &Instance) -> bool {
        if self.bundles.len() != inst.n() {
            return false;
        }
        let mut seen = ItemSet::EMPTY;
        let full = ItemSet::full(inst.m());
        for (i, &b) in self.bundles.iter().enumerate() {
            if !b.is_subset_of(full) || !b.intersect(seen).is_empty() {
                return false;
            }
            if !membership(&inst.constraints[i], b) {
                return false;
            }
            seen = seen.union(b);
        }
        true
    }

    pub fn assigned_union(&self) -> ItemSet {
        self.bundles
            .iter()
            .fold(ItemSet::EMPTY, |acc, &b| acc.union(b))
    }

    /// The 0/1 fractional assignment induced by this point mass.
    pub fn as_fractional(&self, m: usize) -> FractionalAssignment {
        let mut pi = FractionalAssignment::zeros(self.bundles.len(), m);
        for (i, b) in self.bundles.iter().enumerate() {
            for e in b.iter() {
                pi.set_entry(i, e, Rat::one());
            }
        }
        pi
    }
}

/// A finitely supported probability distribution over deterministic
/// assignments.
#[derive(Clone, Debug, PartialEq)]
pub struct Lottery {
    pub support: Vec<(Rat, DeterministicAssignment)>,
}

impl Lottery {
    pub fn point_mass(x: DeterministicAssignment) -> Self {
        Lottery {
            support: vec![(Rat::one(), x)],
        }
    }

    /// Build from weighted assignments, merging duplicates and dropping
    /// zero-probability entries.
    pub fn from_weighted(entries: Vec<(Rat, DeterministicAssignment)>) -> Self {
        let mut merged: Vec<(Rat, DeterministicAssignment)> = Vec::new();
        for (p, x) in entries {
            if p.is_zero() {
                continue;
            }
            match merged.iter_mut().find(|(_, y)| *y == x) {
                Some((q, _)) => *q += p,
                None => merged.push((p, x)),
            }
        }
        Lottery { support: merged }
    }

    pub fn total_probability(&self) -> Rat {
        self.support
            .iter()
            .map(|(p, _)| p)
            .fold(Rat::zero(), |acc, p| acc + p)
    }

    /// Probabilities positive summing to one, no duplicate assignments,
    /// every assignment valid for the instance.
    pub fn is_valid(&self, inst: &Instance) -> bool {
        if !self.total_probability().is_one() {
            return false;
        }
        for (k, (p, x)) in self.support.iter().enumerate() {
            if !p.is_positive() || !x.is_valid(inst) {
                return false;
            }
            if self.support[..k].iter().any(|(_, y)| y == x) {
                return false;
            }
        }
        true
    }
}

/// The fractional assignment induced by a lottery:
/// `π_{ie} = Σ_{X : e ∈ X_i} p_X`, exactly.
pub fn induced_fractional(lottery: &Lottery, m: usize) -> FractionalAssignment {
    let n = lottery.support.first().map_or(0, |(_, x)| x.n());
    let mut pi = FractionalAssignment::zeros(n, m);
    for (p, x) in &lottery.support {
        for (i, b) in x.bundles.iter().enumerate() {
            for e in b.iter() {
                let v = pi.entry(i, e) + p;
                pi.set_entry(i, e, v);
            }
        }
    }
    pi
}

/// A named invariant violation. Violations are data, not exceptions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoAgents,
    TooManyItems { m: usize },
    DuplicateItemLabel { label: String },
    ItemIndexMismatch { position: usize },
    PrefsLengthMismatch,
    ConstraintsLengthMismatch,
    PreferenceNotPermutation { agent: usize },
    ConstraintWrongGroundSet { agent: usize },
    BlocksNotLaminar { agent: usize },
    BlockOutOfRange { agent: usize },
    BudgetWeightsWrongLength { agent: usize },
    BudgetWeightNotPositive { agent: usize },
    BudgetNegative { agent: usize },
    ExplicitFamilyEmpty { agent: usize },
    ExplicitNotAntichain { agent: usize },
    ExplicitOutOfRange { agent: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoAgents => write!(f, "instance has no agents"),
            Violation::TooManyItems { m } => {
                write!(f, "ground set too large for bitmask items: {m} > 32")
            }
            Violation::DuplicateItemLabel { label } => {
                write!(f, "item label not unique: {label:?}")
            }
            Violation::ItemIndexMismatch { position } => {
                write!(f, "item index at position {position} is not contiguous")
            }
            Violation::PrefsLengthMismatch => {
                write!(f, "preference list length differs from agent count")
            }
            Violation::ConstraintsLengthMismatch => {
                write!(f, "constraint list length differs from agent count")
            }
            Violation::PreferenceNotPermutation { agent } => {
                write!(f, "preference not a permutation (agent {agent})")
            }
            Violation::ConstraintWrongGroundSet { agent } => {
                write!(f, "constraint family over wrong ground set (agent {agent})")
            }
            Violation::BlocksNotLaminar { agent } => {
                write!(f, "blocks not disjoint or nested (agent {agent})")
            }
            Violation::BlockOutOfRange { agent } => {
                write!(f, "block items outside ground set (agent {agent})")
            }
            Violation::BudgetWeightsWrongLength { agent } => {
                write!(
                    f,
                    "budget weights length differs from item count (agent {agent})"
                )
            }
            Violation::BudgetWeightNotPositive { agent } => {
                write!(f, "budget weight not positive (agent {agent})")
            }
            Violation::BudgetNegative { agent } => write!(f, "budget negative (agent {agent})"),
            Violation::ExplicitFamilyEmpty { agent } => {
                write!(f, "explicit family has no maximal sets (agent {agent})")
            }
            Violation::ExplicitNotAntichain { agent } => {
                write!(f, "explicit maximal sets not an antichain (agent {agent})")
            }
            Violation::ExplicitOutOfRange { agent } => {
                write!(f, "explicit maximal set outside ground set (agent {agent})")
            }
        }
    }
}

/// True iff `blocks` is laminar: every pair of block sets is disjoint or
/// nested.
pub fn blocks_laminar(blocks: &[Block]) -> bool {
    for (k, a) in blocks.iter().enumerate() {
        for b in &blocks[k + 1..] {
            let inter = a.items.intersect(b.items);
            if !inter.is_empty() && inter != a.items && inter != b.items {
                return false;
            }
        }
    }
    true
}

/// Check every type invariant; the empty list means the instance is
/// well formed.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = inst.n();
    let m = inst.m();
    if n == 0 {
        out.push(Violation::NoAgents);
    }
    if m > 32 {
        out.push(Violation::TooManyItems { m });
        return out;
    }
    for (pos, item) in inst.items.iter().enumerate() {
        if item.index != pos {
            out.push(Violation::ItemIndexMismatch { position: pos });
        }
        if inst.items[..pos]
            .iter()
            .any(|other| other.label == item.label)
        {
            out.push(Violation::DuplicateItemLabel {
                label: item.label.clone(),
            });
        }
    }
    if inst.constraints.len() != n {
        out.push(Violation::ConstraintsLengthMismatch);
    }
    for (agent, pref) in inst.prefs.iter().enumerate() {
        if pref.m() != m || !pref.is_permutation() {
            out.push(Violation::PreferenceNotPermutation { agent });
        }
    }
    let full = ItemSet::full(m);
    for (agent, family) in inst.constraints.iter().enumerate() {
        if family.m() != m {
            out.push(Violation::ConstraintWrongGroundSet { agent });
            continue;
        }
        match family.kind() {
            FamilyKind::Free | FamilyKind::Uniform { .. } => {}
            FamilyKind::Partition { blocks } => {
                if blocks.iter().any(|b| !b.items.is_subset_of(full)) {
                    out.push(Violation::BlockOutOfRange { agent });
                }
                if !blocks_laminar(blocks) {
                    out.push(Violation::BlocksNotLaminar { agent });
                }
            }
            FamilyKind::Budget { weights, budget } => {
                if weights.len() != m {
                    out.push(Violation::BudgetWeightsWrongLength { agent });
                } else if weights.iter().any(|&w| w == 0) {
                    out.push(Violation::BudgetWeightNotPositive { agent });
                }
                if budget.is_negative() {
                    out.push(Violation::BudgetNegative { agent });
                }
            }
            FamilyKind::ExplicitMaximal { maximal } => {
                if maximal.is_empty() {
                    out.push(Violation::ExplicitFamilyEmpty { agent });
                }
                if maximal.iter().any(|s| !s.is_subset_of(full)) {
                    out.push(Violation::ExplicitOutOfRange { agent });
                }
                let antichain = maximal.iter().enumerate().all(|(k, &a)| {
                    maximal
                        .iter()
                        .enumerate()
                        .all(|(j, &b)| j == k || (!a.is_subset_of(b) && !b.is_subset_of(a)))
                });
                if !antichain {
                    out.push(Violation::ExplicitNotAntichain { agent });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use proptest::prelude::*;

    fn two_agent_free() -> Instance {
        Instance::new(
            &["a", "b"],
            vec![Preference::new(vec![0, 1]), Preference::new(vec![0, 1])],
            vec![ConstraintFamily::free(2), ConstraintFamily::free(2)],
        )
    }

    /// Example-1 style family: at most one of {c,d} and at most two items
    /// overall, as nested blocks over {a,b,c,d}.
    fn example1_family() -> ConstraintFamily {
        ConstraintFamily::partition(
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
        )
    }

    #[test]
    fn membership_example1_family_rejects_cd() {
        let fam = example1_family();
        assert!(!membership(&fam, ItemSet::from_items([2, 3])));
        assert!(membership(&fam, ItemSet::from_items([0, 2])));
        assert!(!membership(&fam, ItemSet::from_items([0, 1, 2])));
    }

    #[test]
    fn membership_empty_set_always_feasible() {
        for fam in [
            ConstraintFamily::free(3),
            ConstraintFamily::uniform(3, 0),
            example1_family(),
            ConstraintFamily::budget(3, vec![1, 2, 3], rat(5, 2)),
            ConstraintFamily::explicit_maximal(3, vec![ItemSet::singleton(0)]),
        ] {
            assert!(membership(&fam, ItemSet::EMPTY));
        }
    }

    #[test]
    fn membership_explicit_maximal_subset() {
        let fam = ConstraintFamily::explicit_maximal(
            4,
            vec![
                ItemSet::singleton(0),
                ItemSet::singleton(1),
                ItemSet::from_items([2, 3]),
            ],
        );
        assert!(membership(&fam, ItemSet::singleton(2)));
        assert!(membership(&fam, ItemSet::from_items([2, 3])));
        assert!(!membership(&fam, ItemSet::from_items([0, 1])));
        assert!(!membership(&fam, ItemSet::from_items([0, 2])));
    }

    #[test]
    fn membership_downward_closed_exhaustive() {
        let families = vec![
            example1_family(),
            ConstraintFamily::uniform(4, 2),
            ConstraintFamily::budget(4, vec![3, 1, 2, 2], rat(4, 1)),
            ConstraintFamily::explicit_maximal(
                4,
                vec![ItemSet::from_items([0, 3]), ItemSet::from_items([1, 2, 3])],
            ),
        ];
        for fam in families {
            for s in ItemSet::full(4).subsets() {
                if membership(&fam, s) {
                    for t in s.subsets() {
                        assert!(membership(&fam, t), "not hereditary at {s:?} ⊇ {t:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn induced_fractional_symmetric_half_half() {
        let x1 = DeterministicAssignment::new(vec![ItemSet::singleton(0), ItemSet::singleton(1)]);
        let x2 = DeterministicAssignment::new(vec![ItemSet::singleton(1), ItemSet::singleton(0)]);
        let lot = Lottery::from_weighted(vec![(rat(1, 2), x1), (rat(1, 2), x2)]);
        let pi = induced_fractional(&lot, 2);
        for i in 0..2 {
            for e in 0..2 {
                assert_eq!(*pi.entry(i, e), rat(1, 2));
            }
        }
    }

    #[test]
    fn induced_fractional_point_mass() {
        let x = DeterministicAssignment::new(vec![ItemSet::singleton(0), ItemSet::singleton(1)]);
        let pi = induced_fractional(&Lottery::point_mass(x), 2);
        assert_eq!(*pi.entry(0, 0), rat(1, 1));
        assert_eq!(*pi.entry(0, 1), rat(0, 1));
        assert_eq!(*pi.entry(1, 1), rat(1, 1));
    }

    #[test]
    fn validate_accepts_well_formed() {
        assert!(validate_instance(&two_agent_free()).is_empty());
    }

    #[test]
    fn validate_flags_duplicate_pref_item() {
        let inst = Instance::new(
            &["a", "b"],
            vec![Preference::new(vec![0, 0]), Preference::new(vec![0, 1])],
            vec![ConstraintFamily::free(2), ConstraintFamily::free(2)],
        );
        assert_eq!(
            validate_instance(&inst),
            vec![Violation::PreferenceNotPermutation { agent: 0 }]
        );
    }

    #[test]
    fn validate_flags_overlapping_blocks() {
        let blocks = vec![
            Block {
                items: ItemSet::from_items([0, 1]),
                cap: 1,
            },
            Block {
                items: ItemSet::from_items([1, 2]),
                cap: 1,
            },
        ];
        let inst = Instance::new(
            &["a", "b", "c"],
            vec![Preference::new(vec![0, 1, 2])],
            vec![ConstraintFamily::partition(3, blocks)],
        );
        assert_eq!(
            validate_instance(&inst),
            vec![Violation::BlocksNotLaminar { agent: 0 }]
        );
    }

    #[test]
    fn lottery_merges_duplicates() {
        let x = DeterministicAssignment::empty(2);
        let lot = Lottery::from_weighted(vec![(rat(1, 2), x.clone()), (rat(1, 2), x)]);
        assert_eq!(lot.support.len(), 1);
        assert!(lot.total_probability().is_one());
    }

    #[test]
    fn domain_values_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Instance>();
        assert_send_sync::<ConstraintFamily>();
        assert_send_sync::<Preference>();
        assert_send_sync::<FractionalAssignment>();
        assert_send_sync::<DeterministicAssignment>();
        assert_send_sync::<Lottery>();
    }

    #[test]
    fn subsets_enumerates_power_set() {
        let s = ItemSet::from_items([0, 2, 3]);
        let subs: Vec<_> = s.subsets().collect();
        assert_eq!(subs.len(), 8);
        assert!(subs.contains(&ItemSet::EMPTY));
        assert!(subs.contains(&s));
    }

    proptest! {
        /// Induced matrices of valid lotteries have entries in [0,1] and
        /// column sums at most one, exactly.
        #[test]
        fn induced_fractional_is_substochastic(seed in 0u64..500) {
            let mut rng = crate::util::SplitMix64::new(seed);
            let n = rng.range(1, 3);
            let m = rng.range(1, 5);
            // Random disjoint bundles per draw; probabilities 1/k each.
            let k = rng.range(1, 4);
            let mut entries = Vec::new();
            for _ in 0..k {
                let mut avail: Vec<usize> = (0..m).collect();
                rng.shuffle(&mut avail);
                let mut bundles = vec![ItemSet::EMPTY; n];
                for &e in &avail {
                    let owner = rng.below(n + 1);
                    if owner < n {
                        bundles[owner] = bundles[owner].with(e);
                    }
                }
                entries.push((rat(1, k as i64), DeterministicAssignment::new(bundles)));
            }
            let lot = Lottery::from_weighted(entries);
            let pi = induced_fractional(&lot, m);
            for i in 0..pi.n() {
                for e in 0..m {
                    prop_assert!(!pi.entry(i, e).is_negative());
                    prop_assert!(*pi.entry(i, e) <= rat(1, 1));
                }
            }
            for e in 0..m {
                prop_assert!(pi.column_sum(e) <= rat(1, 1));
            }
        }
    }
}
