//! JSON formats for instances, fractional assignments, lotteries, and
//! certificates. Rationals travel as `"p/q"` strings (bare integers are
//! accepted and emitted where the value is integral).

use crate::domain::{
    Block, ConstraintFamily, DeterministicAssignment, FamilyKind, FractionalAssignment, Instance,
    ItemSet, Lottery, Preference,
};
use crate::rat::{self, Rat};
use crate::verify::{Certificate, CertificateDoc, InfeasibilityClaim};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Clone, Debug, Error)]
pub enum IoError {
    #[error("json parse error: {0}")]
    Json(String),
    #[error("unknown item label {0:?}")]
    UnknownLabel(String),
    #[error("malformed rational {0:?}")]
    BadRational(String),
    #[error("malformed document: {0}")]
    Malformed(String),
}

fn rat_to_value(r: &Rat) -> Value {
    Value::String(rat::display(r))
}

fn rat_from_value(v: &Value) -> Result<Rat, IoError> {
    match v {
        Value::String(s) => rat::parse(s).ok_or_else(|| IoError::BadRational(s.clone())),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(rat::int(i))
            } else {
                Err(IoError::BadRational(n.to_string()))
            }
        }
        other => Err(IoError::BadRational(other.to_string())),
    }
}

#[derive(Serialize, Deserialize)]
struct BlockDto {
    items: Vec<String>,
    cap: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ConstraintDto {
    Free,
    Uniform {
        cap: usize,
    },
    Partition {
        blocks: Vec<BlockDto>,
    },
    Budget {
        weights: BTreeMap<String, u64>,
        budget: Value,
    },
    Explicit {
        maximal: Vec<Vec<String>>,
    },
}

#[derive(Serialize, Deserialize)]
struct InstanceDto {
    agents: usize,
    items: Vec<String>,
    prefs: Vec<Vec<String>>,
    constraints: Vec<ConstraintDto>,
}

fn labels_to_set(inst_items: &[String], labels: &[String]) -> Result<ItemSet, IoError> {
    let mut set = ItemSet::EMPTY;
    for l in labels {
        let idx = inst_items
            .iter()
            .position(|it| it == l)
            .ok_or_else(|| IoError::UnknownLabel(l.clone()))?;
        set = set.with(idx);
    }
    Ok(set)
}

pub fn instance_to_json(inst: &Instance) -> Value {
    let items: Vec<String> = inst.items.iter().map(|it| it.label.clone()).collect();
    let prefs: Vec<Vec<String>> = inst
        .prefs
        .iter()
        .map(|p| p.order().iter().map(|&e| items[e].clone()).collect())
        .collect();
    let constraints: Vec<ConstraintDto> = inst
        .constraints
        .iter()
        .map(|f| match f.kind() {
            FamilyKind::Free => ConstraintDto::Free,
            FamilyKind::Uniform { cap } => ConstraintDto::Uniform { cap: *cap },
            FamilyKind::Partition { blocks } => ConstraintDto::Partition {
                blocks: blocks
                    .iter()
                    .map(|b| BlockDto {
                        items: b.items.iter().map(|e| items[e].clone()).collect(),
                        cap: b.cap,
                    })
                    .collect(),
            },
            FamilyKind::Budget { weights, budget } => ConstraintDto::Budget {
                weights: weights
                    .iter()
                    .enumerate()
                    .map(|(e, &w)| (items[e].clone(), w))
                    .collect(),
                budget: if budget.is_integer() {
                    json!(budget
                        .to_integer()
                        .to_string()
                        .parse::<i64>()
                        .unwrap_or_default())
                } else {
                    rat_to_value(budget)
                },
            },
            FamilyKind::ExplicitMaximal { maximal } => ConstraintDto::Explicit {
                maximal: maximal
                    .iter()
                    .map(|s| s.iter().map(|e| items[e].clone()).collect())
                    .collect(),
            },
        })
        .collect();
    serde_json::to_value(InstanceDto {
        agents: inst.n(),
        items,
        prefs,
        constraints,
    })
    .expect("instance serialization is total")
}

pub fn instance_from_json(v: &Value) -> Result<Instance, IoError> {
    let dto: InstanceDto =
        serde_json::from_value(v.clone()).map_err(|e| IoError::Json(e.to_string()))?;
    let m = dto.items.len();
    let mut prefs = Vec::with_capacity(dto.prefs.len());
    for pref in &dto.prefs {
        let mut order = Vec::with_capacity(pref.len());
        for label in pref {
            let idx = dto
                .items
                .iter()
                .position(|it| it == label)
                .ok_or_else(|| IoError::UnknownLabel(label.clone()))?;
            order.push(idx);
        }
        prefs.push(Preference::new(order));
    }
    let mut constraints = Vec::with_capacity(dto.constraints.len());
    for c in &dto.constraints {
        let family = match c {
            ConstraintDto::Free => ConstraintFamily::free(m),
            ConstraintDto::Uniform { cap } => ConstraintFamily::uniform(m, *cap),
            ConstraintDto::Partition { blocks } => {
                let mut parsed = Vec::with_capacity(blocks.len());
                for b in blocks {
                    parsed.push(Block {
                        items: labels_to_set(&dto.items, &b.items)?,
                        cap: b.cap,
                    });
                }
                ConstraintFamily::partition(m, parsed)
            }
            ConstraintDto::Budget { weights, budget } => {
                let mut w = vec![0u64; m];
                for (label, weight) in weights {
                    let idx = dto
                        .items
                        .iter()
                        .position(|it| it == label)
                        .ok_or_else(|| IoError::UnknownLabel(label.clone()))?;
                    w[idx] = *weight;
                }
                ConstraintFamily::budget(m, w, rat_from_value(budget)?)
            }
            ConstraintDto::Explicit { maximal } => {
                let mut sets = Vec::with_capacity(maximal.len());
                for s in maximal {
                    sets.push(labels_to_set(&dto.items, s)?);
                }
                ConstraintFamily::explicit_maximal(m, sets)
            }
        };
        constraints.push(family);
    }
    if dto.agents != prefs.len() {
        return Err(IoError::Malformed(format!(
            "agents field {} does not match {} preference lists",
            dto.agents,
            prefs.len()
        )));
    }
    let label_refs: Vec<&str> = dto.items.iter().map(|s| s.as_str()).collect();
    Ok(Instance::new(&label_refs, prefs, constraints))
}

pub fn pi_to_json(pi: &FractionalAssignment) -> Value {
    json!({
        "pi": pi.rows().iter().map(|row| {
            Value::Array(row.iter().map(rat_to_value).collect())
        }).collect::<Vec<Value>>()
    })
}

pub fn pi_from_json(v: &Value) -> Result<FractionalAssignment, IoError> {
    let rows = v
        .get("pi")
        .and_then(Value::as_array)
        .ok_or_else(|| IoError::Malformed("missing pi array".into()))?;
    let mut out: Vec<Vec<Rat>> = Vec::with_capacity(rows.len());
    for row in rows {
        let cells = row
            .as_array()
            .ok_or_else(|| IoError::Malformed("pi rows must be arrays".into()))?;
        let parsed = cells
            .iter()
            .map(rat_from_value)
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = out.first() {
            if parsed.len() != first.len() {
                return Err(IoError::Malformed("pi rows have unequal lengths".into()));
            }
        }
        out.push(parsed);
    }
    Ok(FractionalAssignment::new(out))
}

fn bundles_to_json(inst: &Instance, x: &DeterministicAssignment) -> Value {
    Value::Array(
        x.bundles
            .iter()
            .map(|b| Value::Array(b.iter().map(|e| json!(inst.label(e))).collect()))
            .collect(),
    )
}

fn bundles_from_json(inst: &Instance, v: &Value) -> Result<DeterministicAssignment, IoError> {
    let arr = v
        .as_array()
        .ok_or_else(|| IoError::Malformed("bundles must be an array".into()))?;
    let mut bundles = Vec::with_capacity(arr.len());
    for bundle in arr {
        let labels = bundle
            .as_array()
            .ok_or_else(|| IoError::Malformed("bundle must be an array".into()))?;
        let mut set = ItemSet::EMPTY;
        for l in labels {
            let label = l
                .as_str()
                .ok_or_else(|| IoError::Malformed("bundle items must be strings".into()))?;
            let idx = inst
                .item_index(label)
                .ok_or_else(|| IoError::UnknownLabel(label.to_string()))?;
            set = set.with(idx);
        }
        bundles.push(set);
    }
    Ok(DeterministicAssignment::new(bundles))
}

pub fn lottery_to_json(inst: &Instance, lottery: &Lottery) -> Value {
    json!({
        "support": lottery.support.iter().map(|(p, x)| {
            json!({ "p": rat_to_value(p), "bundles": bundles_to_json(inst, x) })
        }).collect::<Vec<Value>>()
    })
}

pub fn lottery_from_json(inst: &Instance, v: &Value) -> Result<Lottery, IoError> {
    // Accept either a bare lottery object or a document carrying one under
    // the "lottery" key (what `solve --decompose` emits).
    let body = if v.get("support").is_some() {
        v
    } else {
        v.get("lottery").unwrap_or(v)
    };
    let support = body
        .get("support")
        .and_then(Value::as_array)
        .ok_or_else(|| IoError::Malformed("missing support array".into()))?;
    let mut entries = Vec::with_capacity(support.len());
    for entry in support {
        let p = rat_from_value(
            entry
                .get("p")
                .ok_or_else(|| IoError::Malformed("missing p".into()))?,
        )?;
        let bundles = bundles_from_json(
            inst,
            entry
                .get("bundles")
                .ok_or_else(|| IoError::Malformed("missing bundles".into()))?,
        )?;
        entries.push((p, bundles));
    }
    Ok(Lottery { support: entries })
}

fn itemset_to_json(inst: &Instance, s: ItemSet) -> Value {
    Value::Array(s.iter().map(|e| json!(inst.label(e))).collect())
}

fn itemset_from_json(inst: &Instance, v: &Value) -> Result<ItemSet, IoError> {
    let arr = v
        .as_array()
        .ok_or_else(|| IoError::Malformed("item set must be array".into()))?;
    let mut set = ItemSet::EMPTY;
    for l in arr {
        let label = l
            .as_str()
            .ok_or_else(|| IoError::Malformed("item must be a string".into()))?;
        set = set.with(
            inst.item_index(label)
                .ok_or_else(|| IoError::UnknownLabel(label.to_string()))?,
        );
    }
    Ok(set)
}

pub fn certificate_to_json(doc: &CertificateDoc) -> Value {
    let inst = &doc.instance;
    let body = match &doc.certificate {
        Certificate::Decomposition { pi, lottery } => json!({
            "kind": "decomposition",
            "pi": pi_to_json(pi)["pi"],
            "lottery": lottery_to_json(inst, lottery),
        }),
        Certificate::DominatingPoint { pi, witness } => json!({
            "kind": "dominating-point",
            "pi": pi_to_json(pi)["pi"],
            "witness": pi_to_json(witness)["pi"],
        }),
        Certificate::EnvyWitness {
            lottery,
            i,
            j,
            item,
            lhs,
            rhs,
        } => json!({
            "kind": "envy-witness",
            "lottery": lottery_to_json(inst, lottery),
            "i": i, "j": j, "item": inst.label(*item),
            "lhs": rat_to_value(lhs), "rhs": rat_to_value(rhs),
        }),
        Certificate::LpInfeasibility { claim, multipliers } => {
            let claim_json = match claim {
                InfeasibilityClaim::NotInPolytope { pi } => json!({
                    "claim": "not-in-polytope",
                    "pi": pi_to_json(pi)["pi"],
                }),
                InfeasibilityClaim::ViolatedRankRow { pi, agent, set } => json!({
                    "claim": "violated-rank-row",
                    "pi": pi_to_json(pi)["pi"],
                    "agent": agent,
                    "set": itemset_to_json(inst, *set),
                }),
                InfeasibilityClaim::ViolatedColumnRow { pi, item } => json!({
                    "claim": "violated-column-row",
                    "pi": pi_to_json(pi)["pi"],
                    "item": inst.label(*item),
                }),
                InfeasibilityClaim::NegativeEntry { pi, agent, item } => json!({
                    "claim": "negative-entry",
                    "pi": pi_to_json(pi)["pi"],
                    "agent": agent,
                    "item": inst.label(*item),
                }),
                InfeasibilityClaim::FullCoverageEnvySystem => json!({
                    "claim": "full-coverage-envy-system",
                }),
            };
            let mut obj = json!({
                "kind": "lp-infeasibility",
                "multipliers": multipliers.iter().map(rat_to_value).collect::<Vec<Value>>(),
            });
            for (k, v) in claim_json.as_object().unwrap() {
                obj[k] = v.clone();
            }
            obj
        }
        Certificate::SupportRestriction { dominations } => json!({
            "kind": "support-restriction",
            "dominations": dominations.iter().map(|(x, better)| json!({
                "assignment": bundles_to_json(inst, x),
                "dominated_by": bundles_to_json(inst, better),
            })).collect::<Vec<Value>>(),
        }),
    };
    json!({ "instance": instance_to_json(inst), "certificate": body })
}

pub fn certificate_from_json(v: &Value) -> Result<CertificateDoc, IoError> {
    let inst = instance_from_json(
        v.get("instance")
            .ok_or_else(|| IoError::Malformed("missing instance".into()))?,
    )?;
    let body = v
        .get("certificate")
        .ok_or_else(|| IoError::Malformed("missing certificate".into()))?;
    let kind = body
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| IoError::Malformed("missing certificate kind".into()))?;
    let get_pi = |key: &str| -> Result<FractionalAssignment, IoError> {
        pi_from_json(&json!({ "pi": body.get(key).cloned().unwrap_or(Value::Null) }))
    };
    let certificate = match kind {
        "decomposition" => Certificate::Decomposition {
            pi: get_pi("pi")?,
            lottery: lottery_from_json(
                &inst,
                body.get("lottery")
                    .ok_or_else(|| IoError::Malformed("missing lottery".into()))?,
            )?,
        },
        "dominating-point" => Certificate::DominatingPoint {
            pi: get_pi("pi")?,
            witness: get_pi("witness")?,
        },
        "envy-witness" => {
            let label = body
                .get("item")
                .and_then(Value::as_str)
                .ok_or_else(|| IoError::Malformed("missing item".into()))?;
            Certificate::EnvyWitness {
                lottery: lottery_from_json(
                    &inst,
                    body.get("lottery")
                        .ok_or_else(|| IoError::Malformed("missing lottery".into()))?,
                )?,
                i: body.get("i").and_then(Value::as_u64).unwrap_or(0) as usize,
                j: body.get("j").and_then(Value::as_u64).unwrap_or(0) as usize,
                item: inst
                    .item_index(label)
                    .ok_or_else(|| IoError::UnknownLabel(label.to_string()))?,
                lhs: rat_from_value(
                    body.get("lhs")
                        .ok_or_else(|| IoError::Malformed("missing lhs".into()))?,
                )?,
                rhs: rat_from_value(
                    body.get("rhs")
                        .ok_or_else(|| IoError::Malformed("missing rhs".into()))?,
                )?,
            }
        }
        "lp-infeasibility" => {
            let multipliers = body
                .get("multipliers")
                .and_then(Value::as_array)
                .map(|arr| {
                    arr.iter()
                        .map(rat_from_value)
                        .collect::<Result<Vec<_>, _>>()
                })
                .transpose()?
                .unwrap_or_default();
            let claim = match body.get("claim").and_then(Value::as_str) {
                Some("not-in-polytope") => InfeasibilityClaim::NotInPolytope { pi: get_pi("pi")? },
                Some("violated-rank-row") => InfeasibilityClaim::ViolatedRankRow {
                    pi: get_pi("pi")?,
                    agent: body.get("agent").and_then(Value::as_u64).unwrap_or(0) as usize,
                    set: itemset_from_json(
                        &inst,
                        body.get("set")
                            .ok_or_else(|| IoError::Malformed("missing set".into()))?,
                    )?,
                },
                Some("violated-column-row") => {
                    let label = body
                        .get("item")
                        .and_then(Value::as_str)
                        .ok_or_else(|| IoError::Malformed("missing item".into()))?;
                    InfeasibilityClaim::ViolatedColumnRow {
                        pi: get_pi("pi")?,
                        item: inst
                            .item_index(label)
                            .ok_or_else(|| IoError::UnknownLabel(label.to_string()))?,
                    }
                }
                Some("negative-entry") => {
                    let label = body
                        .get("item")
                        .and_then(Value::as_str)
                        .ok_or_else(|| IoError::Malformed("missing item".into()))?;
                    InfeasibilityClaim::NegativeEntry {
                        pi: get_pi("pi")?,
                        agent: body.get("agent").and_then(Value::as_u64).unwrap_or(0) as usize,
                        item: inst
                            .item_index(label)
                            .ok_or_else(|| IoError::UnknownLabel(label.to_string()))?,
                    }
                }
                Some("full-coverage-envy-system") => InfeasibilityClaim::FullCoverageEnvySystem,
                other => {
                    return Err(IoError::Malformed(format!(
                        "unknown infeasibility claim {other:?}"
                    )))
                }
            };
            Certificate::LpInfeasibility { claim, multipliers }
        }
        "support-restriction" => {
            let arr = body
                .get("dominations")
                .and_then(Value::as_array)
                .ok_or_else(|| IoError::Malformed("missing dominations".into()))?;
            let mut dominations = Vec::with_capacity(arr.len());
            for entry in arr {
                let x = bundles_from_json(
                    &inst,
                    entry
                        .get("assignment")
                        .ok_or_else(|| IoError::Malformed("missing assignment".into()))?,
                )?;
                let better = bundles_from_json(
                    &inst,
                    entry
                        .get("dominated_by")
                        .ok_or_else(|| IoError::Malformed("missing dominated_by".into()))?,
                )?;
                dominations.push((x, better));
            }
            Certificate::SupportRestriction { dominations }
        }
        other => {
            return Err(IoError::Malformed(format!(
                "unknown certificate kind {other:?}"
            )))
        }
    };
    Ok(CertificateDoc {
        instance: inst,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::gallery;
    use crate::rat::rat;
    use proptest::prelude::*;

    #[test]
    fn instance_round_trip_gallery() {
        for id in crate::instances::GALLERY_IDS {
            let inst = gallery(id).unwrap().instance;
            let v = instance_to_json(&inst);
            let back = instance_from_json(&v).unwrap();
            assert_eq!(inst, back, "round trip failed for {id}");
        }
    }

    #[test]
    fn instance_round_trip_partition_reduction() {
        let inst = crate::instances::build_partition_reduction(&[1, 2, 3]);
        let back = instance_from_json(&instance_to_json(&inst)).unwrap();
        assert_eq!(inst, back);
        // Odd total: the budget is a true fraction and survives the trip.
        let odd = crate::instances::build_partition_reduction(&[1, 1, 3]);
        let back = instance_from_json(&instance_to_json(&odd)).unwrap();
        assert_eq!(odd, back);
    }

    #[test]
    fn ragged_pi_rejected() {
        let v = json!({ "pi": [["1/2", "1/2"], ["1/2"]] });
        assert!(pi_from_json(&v).is_err());
    }

    #[test]
    fn pi_round_trip() {
        let pi =
            FractionalAssignment::new(vec![vec![rat(1, 2), rat(1, 3)], vec![rat(0, 1), rat(2, 3)]]);
        let back = pi_from_json(&pi_to_json(&pi)).unwrap();
        assert_eq!(pi, back);
    }

    #[test]
    fn lottery_round_trip_and_solve_document() {
        let inst = gallery("ex1").unwrap().instance;
        let lottery = Lottery::from_weighted(vec![
            (
                rat(1, 2),
                DeterministicAssignment::new(vec![
                    ItemSet::from_items([0, 2]),
                    ItemSet::from_items([1, 3]),
                ]),
            ),
            (
                rat(1, 2),
                DeterministicAssignment::new(vec![
                    ItemSet::from_items([1, 3]),
                    ItemSet::from_items([0, 2]),
                ]),
            ),
        ]);
        let v = lottery_to_json(&inst, &lottery);
        assert_eq!(lottery_from_json(&inst, &v).unwrap(), lottery);
        // Wrapped the way solve emits it.
        let wrapped = json!({ "mechanism": "rotation", "lottery": v });
        assert_eq!(lottery_from_json(&inst, &wrapped).unwrap(), lottery);
    }

    #[test]
    fn certificate_round_trip() {
        let cert = crate::verify::certify_thm4_nonexistence().unwrap();
        for c in [
            cert.support_restriction.clone(),
            cert.envy_infeasibility.clone(),
        ] {
            let doc = CertificateDoc {
                instance: cert.instance.clone(),
                certificate: c,
            };
            let v = certificate_to_json(&doc);
            let back = certificate_from_json(&v).unwrap();
            assert!(crate::verify::check_certificate(&back).unwrap());
        }
    }

    proptest! {
        #[test]
        fn random_instances_round_trip(seed in 0u64..200) {
            let mut rng = crate::util::SplitMix64::new(seed);
            let style = match rng.below(3) {
                0 => crate::instances::FamilyStyle::Laminar,
                1 => crate::instances::FamilyStyle::ExplicitHereditary,
                _ => crate::instances::FamilyStyle::Free,
            };
            let inst = crate::instances::random_instance(
                &crate::instances::RandomParams {
                    n: rng.range(1, 4),
                    m: rng.range(1, 6),
                    family: style,
                    identical_prefs: rng.chance(1, 2),
                    identical_families: rng.chance(1, 2),
                },
                rng.next_u64(),
            );
            let back = instance_from_json(&instance_to_json(&inst)).unwrap();
            prop_assert_eq!(inst, back);
        }
    }
}
