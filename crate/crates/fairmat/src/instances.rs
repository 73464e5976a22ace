//! Built-in gallery of reference instances, the hardness-reduction
//! construction, and seeded random instance generators.

use crate::domain::{Block, ConstraintFamily, Instance, ItemSet, Preference};
use crate::rat::{self, Rat};
use crate::util::SplitMix64;
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum InstancesError {
    #[error("unknown gallery id {0:?}")]
    UnknownId(String),
    #[error("the generalized construction needs at least three agents, got {0}")]
    BadN(usize),
}

/// A gallery instance with a short description of what it demonstrates.
#[derive(Clone, Debug)]
pub struct GalleryEntry {
    pub id: String,
    pub instance: Instance,
    pub notes: String,
}

pub const GALLERY_IDS: [&str; 6] = ["ex1", "ex2", "sec41-caution", "footnote1", "thm4", "thm5"];

/// Two agents, four items, identical nested-block constraints (one of
/// {c,d}, two overall). Carries the ex-post-but-not-sd-efficient trio.
fn ex1() -> Instance {
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

/// Two agents, five items, identical preferences, heterogeneous one-block
/// matroids. The naive serial mechanism fails envy-freeness here; the
/// eating algorithm does not.
fn ex2() -> Instance {
    let f1 = ConstraintFamily::partition(
        5,
        vec![Block {
            items: ItemSet::from_items([0, 1, 2, 4]),
            cap: 2,
        }],
    );
    let f2 = ConstraintFamily::partition(
        5,
        vec![Block {
            items: ItemSet::from_items([0, 1, 2]),
            cap: 1,
        }],
    );
    Instance::new(
        &["e1", "e2", "e3", "e4", "e5"],
        vec![
            Preference::new(vec![0, 1, 2, 3, 4]),
            Preference::new(vec![0, 1, 2, 3, 4]),
        ],
        vec![f1, f2],
    )
}

/// Two agents over three items with identical one-block constraints and
/// opposed preferences; the envy-constrained welfare maximizer is dominated
/// here, the proportionality-constrained one is not.
fn sec41_caution() -> Instance {
    let fam = ConstraintFamily::partition(
        3,
        vec![Block {
            items: ItemSet::from_items([0, 1]),
            cap: 1,
        }],
    );
    Instance::new(
        &["e1", "e2", "e3"],
        vec![
            Preference::new(vec![2, 1, 0]),
            Preference::new(vec![1, 0, 2]),
        ],
        vec![fam.clone(), fam],
    )
}

/// Single agent over the smallest hereditary non-matroid family
/// {∅, {e1}, {e2}, {e3}, {e2,e3}}, where the lexicographically maximal
/// point fails to dominate.
fn footnote1() -> Instance {
    let fam = ConstraintFamily::explicit_maximal(
        3,
        vec![ItemSet::singleton(0), ItemSet::from_items([1, 2])],
    );
    Instance::new(
        &["e1", "e2", "e3"],
        vec![Preference::new(vec![0, 1, 2])],
        vec![fam],
    )
}

/// Two agents, four items, identical preferences; agent 1 restricted to
/// one of {e1}, {e2}, {e3,e4}, agent 2 unconstrained. No lottery is both
/// sd-efficient and sd-envy-free.
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

/// Three agents, five items, identical one-per-{a,b,c} partition matroid,
/// heterogeneous preferences. No lottery is both sd-efficient and
/// sd-envy-free.
fn thm5() -> Instance {
    let fam = ConstraintFamily::partition(
        5,
        vec![Block {
            items: ItemSet::from_items([0, 1, 2]),
            cap: 1,
        }],
    );
    Instance::new(
        &["a", "b", "c", "d", "e"],
        vec![
            Preference::new(vec![3, 0, 1, 2, 4]),
            Preference::new(vec![3, 1, 4, 0, 2]),
            Preference::new(vec![0, 3, 4, 1, 2]),
        ],
        vec![fam.clone(), fam.clone(), fam],
    )
}

/// Look up a built-in instance. Parameterized ids: `thm5-general-N` for the
/// n-agent nonexistence construction and `npc-a1,a2,...` for the partition
/// reduction.
pub fn gallery(id: &str) -> Result<GalleryEntry, InstancesError> {
    let (instance, notes) = match id {
        "ex1" => (ex1(), "two agents, identical nested-block matroid; ex-post efficiency does not imply sd-efficiency"),
        "ex2" => (ex2(), "identical preferences, heterogeneous matroids; the naive serial mechanism creates envy"),
        "sec41-caution" => (sec41_caution(), "envy-constrained welfare maximization returns a dominated point"),
        "footnote1" => (footnote1(), "hereditary non-matroid family where the lexicographic maximum does not dominate"),
        "thm4" => (thm4(), "two agents, identical preferences, hereditary constraint; no sd-efficient sd-envy-free lottery"),
        "thm5" => (thm5(), "three agents, identical partition matroid; no sd-efficient sd-envy-free lottery"),
        _ => {
            if let Some(raw) = id.strip_prefix("thm5-general-") {
                let n: usize = raw.parse().map_err(|_| InstancesError::UnknownId(id.into()))?;
                let instance = thm5_general(n)?;
                return Ok(GalleryEntry {
                    id: id.to_string(),
                    instance,
                    notes: format!("{n}-agent generalization of the identical-matroid nonexistence instance"),
                });
            }
            if let Some(raw) = id.strip_prefix("npc-") {
                let values: Result<Vec<u64>, _> = raw.split(',').map(|t| t.trim().parse()).collect();
                let values = values.map_err(|_| InstancesError::UnknownId(id.into()))?;
                if values.is_empty() || values.contains(&0) {
                    return Err(InstancesError::UnknownId(id.into()));
                }
                let instance = build_partition_reduction(&values);
                return Ok(GalleryEntry {
                    id: id.to_string(),
                    instance,
                    notes: format!("partition-problem reduction for values {values:?}"),
                });
            }
            return Err(InstancesError::UnknownId(id.into()));
        }
    };
    Ok(GalleryEntry {
        id: id.to_string(),
        instance,
        notes: notes.to_string(),
    })
}

/// The n-agent nonexistence construction: the three core agents of the
/// identical-matroid instance plus, for n ≥ 4, one private item pair
/// `o_{2i-1} ≻ o_{2i}` per extra agent (and the shared tail item o6).
/// Preference tails beyond the stated prefix follow global index order.
pub fn thm5_general(n: usize) -> Result<Instance, InstancesError> {
    if n < 3 {
        return Err(InstancesError::BadN(n));
    }
    if n == 3 {
        return Ok(thm5());
    }
    let m = 2 * n;
    let mut labels: Vec<String> = ["a", "b", "c", "d", "e"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for k in 6..=2 * n {
        labels.push(format!("o{k}"));
    }
    let label_refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
    // Indices: a,b,c,d,e = 0..5; o_k = k - 1 for k ≥ 6.
    let with_tail = |prefix: Vec<usize>| -> Preference {
        let mut order = prefix.clone();
        for e in 0..m {
            if !order.contains(&e) {
                order.push(e);
            }
        }
        Preference::new(order)
    };
    let mut prefs = vec![
        with_tail(vec![3, 0, 1, 2, 4]),
        with_tail(vec![3, 1, 4, 0, 2]),
        with_tail(vec![0, 3, 4, 1, 2]),
    ];
    for i in 4..=n {
        prefs.push(with_tail(vec![2 * i - 2, 2 * i - 1]));
    }
    let fam = ConstraintFamily::partition(
        m,
        vec![Block {
            items: ItemSet::from_items([0, 1, 2]),
            cap: 1,
        }],
    );
    Ok(Instance::new(&label_refs, prefs, vec![fam; n]))
}

/// The hardness reduction: two agents, identical preferences, identical
/// knapsack family `{E' : Σ a_i ≤ (Σ a)/2}` with the budget held as the
/// exact rational half-sum.
pub fn build_partition_reduction(values: &[u64]) -> Instance {
    let k = values.len();
    let total: u64 = values.iter().sum();
    let budget: Rat = rat::int(total as i64) / rat::int(2);
    let labels: Vec<String> = (1..=k).map(|i| format!("e{i}")).collect();
    let label_refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
    let fam = ConstraintFamily::budget(k, values.to_vec(), budget);
    Instance::new(
        &label_refs,
        vec![
            Preference::new((0..k).collect()),
            Preference::new((0..k).collect()),
        ],
        vec![fam.clone(), fam],
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyStyle {
    /// Random laminar capacity blocks (always a matroid).
    Laminar,
    /// Random antichain of maximal sets (general hereditary).
    ExplicitHereditary,
    Free,
}

#[derive(Clone, Debug)]
pub struct RandomParams {
    pub n: usize,
    pub m: usize,
    pub family: FamilyStyle,
    pub identical_prefs: bool,
    pub identical_families: bool,
}

fn random_pref(rng: &mut SplitMix64, m: usize) -> Preference {
    let mut order: Vec<usize> = (0..m).collect();
    rng.shuffle(&mut order);
    Preference::new(order)
}

fn random_subset(rng: &mut SplitMix64, m: usize, min_len: usize, max_len: usize) -> ItemSet {
    let len = rng.range(min_len, max_len.min(m));
    let mut items: Vec<usize> = (0..m).collect();
    rng.shuffle(&mut items);
    ItemSet::from_items(items.into_iter().take(len))
}

fn random_family(rng: &mut SplitMix64, m: usize, style: FamilyStyle) -> ConstraintFamily {
    match style {
        FamilyStyle::Free => ConstraintFamily::free(m),
        FamilyStyle::Laminar => {
            let mut blocks = Vec::new();
            let outer = random_subset(rng, m, 1, m);
            blocks.push(Block {
                items: outer,
                cap: rng.range(1, outer.len()),
            });
            // Optionally nest a block inside, or add one disjoint from it.
            if outer.len() >= 2 && rng.chance(1, 2) {
                let inner_items: Vec<usize> = outer.iter().collect();
                let take = rng.range(1, inner_items.len() - 1);
                let mut shuffled = inner_items;
                rng.shuffle(&mut shuffled);
                let inner = ItemSet::from_items(shuffled.into_iter().take(take));
                blocks.push(Block {
                    items: inner,
                    cap: rng.range(0, inner.len()),
                });
            } else if rng.chance(1, 3) {
                let outside = ItemSet::full(m).minus(outer);
                if !outside.is_empty() {
                    let items: Vec<usize> = outside.iter().collect();
                    let take = rng.range(1, items.len());
                    let disjoint = ItemSet::from_items(items.into_iter().take(take));
                    blocks.push(Block {
                        items: disjoint,
                        cap: rng.range(0, disjoint.len()),
                    });
                }
            }
            ConstraintFamily::partition(m, blocks)
        }
        FamilyStyle::ExplicitHereditary => {
            let count = rng.range(1, 3);
            let mut maximal: Vec<ItemSet> = Vec::new();
            for _ in 0..count {
                let s = random_subset(rng, m, 1, 3.min(m));
                if !maximal
                    .iter()
                    .any(|&t| s.is_subset_of(t) || t.is_subset_of(s))
                {
                    maximal.push(s);
                }
            }
            ConstraintFamily::explicit_maximal(m, maximal)
        }
    }
}

/// Deterministic function of (params, seed).
pub fn random_instance(params: &RandomParams, seed: u64) -> Instance {
    let mut rng = SplitMix64::new(seed);
    let m = params.m;
    let labels: Vec<String> = (0..m).map(|e| format!("x{e}")).collect();
    let label_refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
    let prefs = if params.identical_prefs {
        let p = random_pref(&mut rng, m);
        vec![p; params.n]
    } else {
        (0..params.n).map(|_| random_pref(&mut rng, m)).collect()
    };
    let constraints = if params.identical_families {
        let f = random_family(&mut rng, m, params.family);
        vec![f; params.n]
    } else {
        (0..params.n)
            .map(|_| random_family(&mut rng, m, params.family))
            .collect()
    };
    Instance::new(&label_refs, prefs, constraints)
}
