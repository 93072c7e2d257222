//! Pod-to-node assignment under pinning, hardware affinity and capacity,
//! plus the migratability classification that tells operators which pods can
//! be moved at runtime and which are tied down.
//!
//! The algorithm is a most-constrained-first greedy: pods with the fewest
//! eligible nodes go first (largest cpu demand, then name, break ties), and
//! each pod lands on the eligible node that keeps the most cpu headroom
//! after placement. Deterministic by construction; not an optimizer.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{AppSpec, ClusterNode, ClusterSpec, PodPlan, ResourceMap};

/// How movable a pod is once deployed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Migratability {
    /// A hosted ROS node names an explicit cluster node.
    Pinned,
    /// The extended-resource demand is satisfiable by exactly one node.
    HardwareBound,
    /// Free to move.
    Migratable,
}

impl std::fmt::Display for Migratability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Migratability::Pinned => write!(f, "PINNED"),
            Migratability::HardwareBound => write!(f, "HARDWARE_BOUND"),
            Migratability::Migratable => write!(f, "MIGRATABLE"),
        }
    }
}

/// A pod the greedy could not seat, with the first constraint that failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnplacedPod {
    pub pod: String,
    pub reason: String,
}

/// The placement result: assignments and unplaced pods are disjoint and
/// jointly cover every pod handed to [`plan_placement`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    /// pod name -> cluster node name.
    pub assignments: BTreeMap<String, String>,
    pub unplaced: Vec<UnplacedPod>,
    pub migratability: BTreeMap<String, Migratability>,
}

impl Placement {
    pub fn node_of(&self, pod: &str) -> Option<&str> {
        self.assignments.get(pod).map(String::as_str)
    }

    pub fn is_fully_placed(&self) -> bool {
        self.unplaced.is_empty()
    }
}

/// Pin targets named by the ROS nodes a pod hosts. More than one entry means
/// the pod is over-constrained and cannot be placed.
fn pin_targets<'a>(pod: &PodPlan, app: &'a AppSpec) -> BTreeSet<&'a str> {
    app.ros_nodes
        .iter()
        .filter(|n| pod.ros_nodes.contains(&n.name))
        .filter_map(|n| n.pinned_node.as_deref())
        .collect()
}

fn satisfies_pins(node: &ClusterNode, pins: &BTreeSet<&str>) -> bool {
    pins.iter().all(|pin| *pin == node.name)
}

fn satisfies_hardware(offer: &ResourceMap, demand: &ResourceMap) -> bool {
    demand
        .iter()
        .all(|(resource, quantity)| offer.get(resource).copied().unwrap_or(0) >= *quantity)
}

/// Cluster nodes that can host the pod against the declared capacities:
/// pin targets honored, extended resources covered, cpu and memory
/// sufficient. Ordered by node name; empty is a valid result.
pub fn eligible_nodes(pod: &PodPlan, app: &AppSpec, cluster: &ClusterSpec) -> Vec<String> {
    let pins = pin_targets(pod, app);
    let mut names: Vec<String> = cluster
        .nodes
        .iter()
        .filter(|n| satisfies_pins(n, &pins))
        .filter(|n| satisfies_hardware(&n.extended_resources, &pod.aggregate_hardware))
        .filter(|n| n.cpu_capacity >= pod.aggregate_cpu)
        .filter(|n| n.memory_capacity >= pod.aggregate_memory)
        .map(|n| n.name.clone())
        .collect();
    names.sort();
    names
}

struct Remaining {
    cpu: u64,
    memory: u64,
    resources: ResourceMap,
}

fn classify(pod: &PodPlan, app: &AppSpec, cluster: &ClusterSpec) -> Migratability {
    if !pin_targets(pod, app).is_empty() {
        return Migratability::Pinned;
    }
    if !pod.aggregate_hardware.is_empty() {
        let hardware_hosts = cluster
            .nodes
            .iter()
            .filter(|n| satisfies_hardware(&n.extended_resources, &pod.aggregate_hardware))
            .count();
        if hardware_hosts == 1 {
            return Migratability::HardwareBound;
        }
    }
    Migratability::Migratable
}

/// Seats one pod against the remaining capacities, or explains the first
/// constraint that ran out.
fn place_one(
    pod: &PodPlan,
    app: &AppSpec,
    cluster: &ClusterSpec,
    remaining: &mut BTreeMap<String, Remaining>,
) -> Result<String, String> {
    let pins = pin_targets(pod, app);
    let pinned: Vec<&ClusterNode> = cluster
        .nodes
        .iter()
        .filter(|n| satisfies_pins(n, &pins))
        .collect();
    if pinned.is_empty() {
        let names: Vec<&str> = pins.iter().copied().collect();
        return Err(if names.len() > 1 {
            format!(
                "hosted ROS nodes pin the pod to different cluster nodes ({})",
                names.join(", ")
            )
        } else {
            format!("pinned cluster node \"{}\" is not available", names[0])
        });
    }

    let with_hardware: Vec<&ClusterNode> = pinned
        .iter()
        .copied()
        .filter(|n| satisfies_hardware(&remaining[&n.name].resources, &pod.aggregate_hardware))
        .collect();
    if with_hardware.is_empty() {
        for (resource, quantity) in &pod.aggregate_hardware {
            let somewhere = pinned.iter().any(|n| {
                remaining[&n.name]
                    .resources
                    .get(resource)
                    .copied()
                    .unwrap_or(0)
                    >= *quantity
            });
            if !somewhere {
                return Err(format!(
                    "insufficient extended resource \"{resource}\" ({quantity} demanded)"
                ));
            }
        }
        return Err("no node satisfies the combined extended-resource demand".to_string());
    }

    let with_cpu: Vec<&ClusterNode> = with_hardware
        .iter()
        .copied()
        .filter(|n| remaining[&n.name].cpu >= pod.aggregate_cpu)
        .collect();
    if with_cpu.is_empty() {
        return Err(format!(
            "insufficient cpu ({}m demanded)",
            pod.aggregate_cpu
        ));
    }

    let with_memory: Vec<&ClusterNode> = with_cpu
        .iter()
        .copied()
        .filter(|n| remaining[&n.name].memory >= pod.aggregate_memory)
        .collect();
    if with_memory.is_empty() {
        return Err(format!(
            "insufficient memory ({} bytes demanded)",
            pod.aggregate_memory
        ));
    }

    // most cpu headroom after placement wins, names break ties
    let chosen = with_memory
        .into_iter()
        .min_by_key(|n| {
            (
                Reverse(remaining[&n.name].cpu - pod.aggregate_cpu),
                n.name.clone(),
            )
        })
        .expect("non-empty candidate set");

    let ledger = remaining.get_mut(&chosen.name).expect("known node");
    ledger.cpu -= pod.aggregate_cpu;
    ledger.memory -= pod.aggregate_memory;
    for (resource, quantity) in &pod.aggregate_hardware {
        *ledger
            .resources
            .get_mut(resource)
            .expect("hardware-checked") -= quantity;
    }
    Ok(chosen.name.clone())
}

/// Assigns every pod to a node, or records why it could not be seated.
/// Deterministic regardless of input ordering.
pub fn plan_placement(pods: &[PodPlan], app: &AppSpec, cluster: &ClusterSpec) -> Placement {
    let mut remaining: BTreeMap<String, Remaining> = cluster
        .nodes
        .iter()
        .map(|n| {
            (
                n.name.clone(),
                Remaining {
                    cpu: n.cpu_capacity,
                    memory: n.memory_capacity,
                    resources: n.extended_resources.clone(),
                },
            )
        })
        .collect();

    let mut order: Vec<&PodPlan> = pods.iter().collect();
    order.sort_by_key(|pod| {
        (
            eligible_nodes(pod, app, cluster).len(),
            Reverse(pod.aggregate_cpu),
            pod.name.clone(),
        )
    });

    let mut placement = Placement::default();
    for pod in order {
        placement
            .migratability
            .insert(pod.name.clone(), classify(pod, app, cluster));
        match place_one(pod, app, cluster, &mut remaining) {
            Ok(node) => {
                placement.assignments.insert(pod.name.clone(), node);
            }
            Err(reason) => placement.unplaced.push(UnplacedPod {
                pod: pod.name.clone(),
                reason,
            }),
        }
    }
    placement.unplaced.sort_by(|a, b| a.pod.cmp(&b.pod));
    placement
}
