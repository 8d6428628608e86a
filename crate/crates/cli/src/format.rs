//! JSON formats for instances, verdicts, and graphs.
//!
//! Counts in verdicts are decimal strings because constructed extensions
//! can carry counts past 2^64, where JSON numbers stop interoperating.
//! Unknown keys and duplicate ids are rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::marker::PhantomData;

use indexmap::IndexMap;
use num_bigint::BigUint;
use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use envyfix_core::generators::SimpleGraph;
use envyfix_core::model::{Certificate, Extension, PoolItem, Verdict, Witness};
use envyfix_core::{Instance, Supply};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Schema(String),
}

fn schema(msg: impl Into<String>) -> FormatError {
    FormatError::Schema(msg.into())
}

/// Insertion-ordered string map that rejects duplicate keys while
/// deserializing.
#[derive(Debug, Clone, PartialEq)]
pub struct UniqueMap<V>(pub IndexMap<String, V>);

impl<V> Default for UniqueMap<V> {
    fn default() -> Self {
        UniqueMap(IndexMap::new())
    }
}

impl<'de, V: Deserialize<'de>> Deserialize<'de> for UniqueMap<V> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct MapVisitor<V>(PhantomData<V>);

        impl<'de, V: Deserialize<'de>> Visitor<'de> for MapVisitor<V> {
            type Value = UniqueMap<V>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object with unique keys")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut map = IndexMap::with_capacity(access.size_hint().unwrap_or(0));
                while let Some((key, value)) = access.next_entry::<String, V>()? {
                    if map.insert(key.clone(), value).is_some() {
                        return Err(serde::de::Error::custom(format!("duplicate key `{key}`")));
                    }
                }
                Ok(UniqueMap(map))
            }
        }

        deserializer.deserialize_map(MapVisitor(PhantomData))
    }
}

impl<V: Serialize> Serialize for UniqueMap<V> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_map(&self.0)
    }
}

/// A supply or budget: a nonnegative integer or the string "inf".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupplyDoc(pub Supply);

impl Serialize for SupplyDoc {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Supply::Finite(n) => serializer.serialize_u64(n),
            Supply::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for SupplyDoc {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct SupplyVisitor;

        impl Visitor<'_> for SupplyVisitor {
            type Value = SupplyDoc;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a nonnegative integer or \"inf\"")
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Self::Value, E> {
                Ok(SupplyDoc(Supply::Finite(v)))
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Self::Value, E> {
                u64::try_from(v)
                    .map(|n| SupplyDoc(Supply::Finite(n)))
                    .map_err(|_| serde::de::Error::custom("supply must be nonnegative"))
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Self::Value, E> {
                if v == "inf" {
                    Ok(SupplyDoc(Supply::Infinite))
                } else {
                    Err(serde::de::Error::custom(format!(
                        "expected \"inf\" or an integer, got \"{v}\""
                    )))
                }
            }
        }

        deserializer.deserialize_any(SupplyVisitor)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolItemDoc {
    pub supply: SupplyDoc,
    pub values: UniqueMap<u64>,
}

/// On-disk instance document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub agents: Vec<String>,
    #[serde(default)]
    pub initial_items: UniqueMap<UniqueMap<u64>>,
    #[serde(default)]
    pub pool_items: UniqueMap<PoolItemDoc>,
    #[serde(default)]
    pub initial_allocation: UniqueMap<Vec<String>>,
    pub budget: SupplyDoc,
}

impl InstanceDoc {
    pub fn to_instance(&self) -> Result<Instance, FormatError> {
        let initial_items: BTreeMap<String, BTreeMap<String, u64>> = self
            .initial_items
            .0
            .iter()
            .map(|(id, values)| (id.clone(), values.0.clone().into_iter().collect()))
            .collect();
        let pool_items: Vec<PoolItem> = self
            .pool_items
            .0
            .iter()
            .map(|(id, doc)| PoolItem {
                id: id.clone(),
                supply: doc.supply.0,
                values: doc.values.0.clone().into_iter().collect(),
            })
            .collect();
        let mut allocation: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (agent, items) in &self.initial_allocation.0 {
            let mut bundle = BTreeSet::new();
            for item in items {
                if !bundle.insert(item.clone()) {
                    return Err(schema(format!(
                        "initial_allocation.{agent}: item {item} listed twice"
                    )));
                }
            }
            allocation.insert(agent.clone(), bundle);
        }
        Instance::new(
            self.agents.clone(),
            initial_items,
            pool_items,
            allocation,
            self.budget.0,
        )
        .map_err(|e| schema(e.to_string()))
    }

    pub fn from_instance(inst: &Instance) -> InstanceDoc {
        InstanceDoc {
            agents: inst.agents.clone(),
            initial_items: UniqueMap(
                inst.initial_items
                    .iter()
                    .map(|(id, values)| {
                        (id.clone(), UniqueMap(values.clone().into_iter().collect()))
                    })
                    .collect(),
            ),
            pool_items: UniqueMap(
                inst.pool_items
                    .iter()
                    .map(|p| {
                        (
                            p.id.clone(),
                            PoolItemDoc {
                                supply: SupplyDoc(p.supply),
                                values: UniqueMap(p.values.clone().into_iter().collect()),
                            },
                        )
                    })
                    .collect(),
            ),
            initial_allocation: UniqueMap(
                inst.initial_allocation
                    .iter()
                    .filter(|(_, bundle)| !bundle.is_empty())
                    .map(|(agent, bundle)| {
                        (agent.clone(), bundle.iter().cloned().collect::<Vec<_>>())
                    })
                    .collect(),
            ),
            budget: SupplyDoc(inst.budget),
        }
    }
}

pub fn parse_instance(bytes: &[u8]) -> Result<Instance, FormatError> {
    let doc: InstanceDoc = serde_json::from_slice(bytes)?;
    doc.to_instance()
}

pub fn serialize_instance(inst: &Instance) -> String {
    let mut out = serde_json::to_string_pretty(&InstanceDoc::from_instance(inst))
        .expect("instance documents always serialize");
    out.push('\n');
    out
}

/// On-disk witness, tagged by kind.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WitnessDoc {
    ZeroValueEnvy {
        agent: String,
        envied: String,
    },
    NegativeCycle {
        class_members: Vec<String>,
        cycle: Vec<String>,
    },
    SearchExhausted {
        detail: String,
    },
}

impl From<&Witness> for WitnessDoc {
    fn from(witness: &Witness) -> WitnessDoc {
        match witness {
            Witness::ZeroValueEnvy { agent, envied } => WitnessDoc::ZeroValueEnvy {
                agent: agent.clone(),
                envied: envied.clone(),
            },
            Witness::NegativeCycle {
                class_members,
                cycle,
            } => WitnessDoc::NegativeCycle {
                class_members: class_members.clone(),
                cycle: cycle.clone(),
            },
            Witness::SearchExhausted { detail } => WitnessDoc::SearchExhausted {
                detail: detail.clone(),
            },
        }
    }
}

/// On-disk verdict document. Counts and the size are decimal strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictDoc {
    pub feasible: bool,
    pub extension: Option<BTreeMap<String, BTreeMap<String, String>>>,
    pub size: Option<String>,
    pub witness: Option<WitnessDoc>,
    pub mode: String,
}

impl VerdictDoc {
    pub fn from_verdict(mode: &str, verdict: &Verdict) -> VerdictDoc {
        match verdict {
            Verdict::Feasible {
                extension,
                certificate: Certificate { size, .. },
            } => {
                let mut counts: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
                for (agent, item, count) in extension.iter() {
                    counts
                        .entry(agent.to_string())
                        .or_default()
                        .insert(item.to_string(), count.to_string());
                }
                VerdictDoc {
                    feasible: true,
                    extension: Some(counts),
                    size: Some(size.to_string()),
                    witness: None,
                    mode: mode.to_string(),
                }
            }
            Verdict::Infeasible { witness } => VerdictDoc {
                feasible: false,
                extension: None,
                size: None,
                witness: Some(witness.into()),
                mode: mode.to_string(),
            },
        }
    }

    /// Rebuilds the extension from its decimal-string counts.
    pub fn extension(&self) -> Result<Extension, FormatError> {
        let Some(counts) = &self.extension else {
            return Err(schema("verdict has no extension"));
        };
        let mut ext = Extension::new();
        for (agent, items) in counts {
            for (item, digits) in items {
                let count = digits.parse::<BigUint>().map_err(|_| {
                    schema(format!(
                        "extension.{agent}.{item}: `{digits}` is not a decimal count"
                    ))
                })?;
                ext.add(agent, item, count);
            }
        }
        Ok(ext)
    }
}

pub fn parse_verdict(bytes: &[u8]) -> Result<VerdictDoc, FormatError> {
    Ok(serde_json::from_slice(bytes)?)
}

pub fn serialize_verdict(doc: &VerdictDoc) -> String {
    let mut out = serde_json::to_string_pretty(doc).expect("verdict documents always serialize");
    out.push('\n');
    out
}

/// On-disk graph document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDoc {
    pub vertices: Vec<String>,
    pub edges: Vec<(String, String)>,
}

pub fn parse_graph(bytes: &[u8]) -> Result<SimpleGraph, FormatError> {
    let doc: GraphDoc = serde_json::from_slice(bytes)?;
    SimpleGraph::new(doc.vertices, doc.edges).map_err(|e| schema(e.to_string()))
}

pub fn serialize_graph(g: &SimpleGraph) -> String {
    let doc = GraphDoc {
        vertices: g.vertices.clone(),
        edges: g.edges.clone(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("graph documents always serialize");
    out.push('\n');
    out
}
