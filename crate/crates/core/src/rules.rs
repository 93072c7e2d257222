//! The deployment rule catalog (R1-R7) and the port-exposure decision.
//!
//! Catalog:
//! - R1: a pod may host at most one RTPS-speaking container (RTPS port usage
//!   inside a shared network namespace cannot be coordinated).
//! - R2: RTPS ports must never be exposed through a translating Service.
//! - R3: RTPS workloads need a multicast-capable network backend.
//! - R4 (warning): with multicast on and IGMP snooping off, announcements
//!   flood every node.
//! - R5: the overlay MTU must leave room for encapsulation on every node.
//! - R6: a port forced to NodePort must lie inside the NodePort range.
//! - R7: every extended-resource demand must be satisfiable by some node.
//!
//! Findings are data, not failures: `validate` never errors, it reports.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{AppSpec, ClusterSpec, PodPlan, PortSpec, TrafficClass};

/// Catalog rule identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleId {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// R4 is advisory (a saving, not a correctness requirement); everything else
/// is an ERROR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "ERROR"),
            Severity::Warning => write!(f, "WARNING"),
        }
    }
}

/// One finding: which rule, how bad, where, and why.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub rule_id: RuleId,
    pub severity: Severity,
    /// Path-like identifier of the offending entity, e.g. "pod/joy-pod" or
    /// "container/ur5-driver/port/7400".
    pub subject: String,
    pub message: String,
}

/// How a non-RTPS exposed port reaches the outside world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExposureStrategy {
    NodePort,
    IngressTcpRoute,
    Forbidden,
}

impl fmt::Display for ExposureStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExposureStrategy::NodePort => write!(f, "NODE_PORT"),
            ExposureStrategy::IngressTcpRoute => write!(f, "INGRESS_TCP_ROUTE"),
            ExposureStrategy::Forbidden => write!(f, "FORBIDDEN"),
        }
    }
}

/// Resolved exposure for one port. FORBIDDEN only ever applies to RTPS.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExposureDecision {
    pub port: PortSpec,
    pub strategy: ExposureStrategy,
    pub assigned_nodeport: Option<u16>,
    pub reason: String,
}

/// Evaluates the whole catalog against an application / pod plan / cluster
/// triple. Findings come back sorted by (rule, subject); an empty list means
/// the deployment is compliant.
pub fn validate(app: &AppSpec, pods: &[PodPlan], cluster: &ClusterSpec) -> Vec<Violation> {
    let mut findings = Vec::new();

    // R1: at most one RTPS-speaking container per pod.
    for pod in pods {
        let mut ros_containers: Vec<&str> = pod
            .containers
            .iter()
            .filter(|name| app.container(name).is_some_and(|c| c.is_ros))
            .map(String::as_str)
            .collect();
        ros_containers.sort_unstable();
        if ros_containers.len() >= 2 {
            findings.push(Violation {
                rule_id: RuleId::R1,
                severity: Severity::Error,
                subject: format!("pod/{}", pod.name),
                message: format!(
                    "pod hosts {} RTPS-speaking containers ({}); they share one network \
                     namespace and cannot coordinate RTPS port usage, run at most one per pod",
                    ros_containers.len(),
                    ros_containers.join(", ")
                ),
            });
        }
    }

    // R2: no RTPS port may be declared for exposure.
    for container in &app.containers {
        for port in &container.exposed_ports {
            if port.traffic_class == TrafficClass::Rtps {
                findings.push(Violation {
                    rule_id: RuleId::R2,
                    severity: Severity::Error,
                    subject: format!("container/{}/port/{}", container.name, port.port),
                    message: format!(
                        "RTPS port {}/{} is declared for exposure; Services translate ports \
                         and addresses, which breaks RTPS traffic",
                        port.port, port.protocol
                    ),
                });
            }
        }
    }

    // R3: RTPS workloads need multicast in the overlay.
    if app.has_ros_containers() && !cluster.backend.supports_multicast {
        findings.push(Violation {
            rule_id: RuleId::R3,
            severity: Severity::Error,
            subject: format!("backend/{}", cluster.backend.name),
            message: format!(
                "application has RTPS-speaking containers but backend \"{}\" does not \
                 forward multicast; participant discovery cannot work",
                cluster.backend.name
            ),
        });
    }

    // R4: recommend IGMP snooping when multicast is on.
    if cluster.backend.supports_multicast && !cluster.backend.igmp_snooping {
        findings.push(Violation {
            rule_id: RuleId::R4,
            severity: Severity::Warning,
            subject: format!("backend/{}", cluster.backend.name),
            message: "multicast is delivered to every node regardless of interest; \
                      enable IGMP snooping to filter announcements down to nodes that host \
                      participants"
                .to_string(),
        });
    }

    // R5: the overlay MTU must fit under every node's physical MTU minus the
    // encapsulation overhead.
    for node in &cluster.nodes {
        let budget = node
            .phys_mtu
            .saturating_sub(cluster.backend.encapsulation_overhead);
        if cluster.backend.overlay_mtu > budget {
            findings.push(Violation {
                rule_id: RuleId::R5,
                severity: Severity::Error,
                subject: format!("node/{}", node.name),
                message: format!(
                    "overlay MTU {} exceeds the budget {} on node \"{}\" (physical MTU {} - \
                     encapsulation overhead {}); oversized packets will be dropped",
                    cluster.backend.overlay_mtu,
                    budget,
                    node.name,
                    node.phys_mtu,
                    cluster.backend.encapsulation_overhead
                ),
            });
        }
    }

    // R6: forcing NodePort only works inside the NodePort range.
    for container in &app.containers {
        for port in &container.exposed_ports {
            if port.traffic_class != TrafficClass::Rtps
                && port.force_node_port
                && !cluster.nodeport_range.contains(port.port)
            {
                findings.push(Violation {
                    rule_id: RuleId::R6,
                    severity: Severity::Error,
                    subject: format!("container/{}/port/{}", container.name, port.port),
                    message: format!(
                        "port {} is forced to NodePort but lies outside the NodePort range {}; \
                         drop the force flag to route it through the ingress entry point",
                        port.port, cluster.nodeport_range
                    ),
                });
            }
        }
    }

    // R7: every per-pod extended-resource demand must fit on some node.
    for pod in pods {
        for (resource, quantity) in &pod.aggregate_hardware {
            let satisfiable = cluster
                .nodes
                .iter()
                .any(|n| n.extended_resources.get(resource).copied().unwrap_or(0) >= *quantity);
            if !satisfiable {
                findings.push(Violation {
                    rule_id: RuleId::R7,
                    severity: Severity::Error,
                    subject: format!("pod/{}/resource/{}", pod.name, resource),
                    message: format!(
                        "pod \"{}\" demands {} x \"{}\" but no cluster node offers that much",
                        pod.name, quantity, resource
                    ),
                });
            }
        }
    }

    findings.sort();
    findings
}

/// Resolves how one port gets exposed. RTPS is forbidden outright (R2); a
/// port inside the NodePort range keeps its own number as the node port when
/// still free; everything else goes through an ingress TCP route. Threading
/// `taken_nodeports` through repeated calls keeps one render pass
/// collision-free.
pub fn decide_exposure(
    port: &PortSpec,
    cluster: &ClusterSpec,
    taken_nodeports: &BTreeSet<u16>,
) -> ExposureDecision {
    if port.traffic_class == TrafficClass::Rtps {
        return ExposureDecision {
            port: port.clone(),
            strategy: ExposureStrategy::Forbidden,
            assigned_nodeport: None,
            reason: format!(
                "RTPS port {} must never be exposed through a translating service (rule R2)",
                port.port
            ),
        };
    }
    let range = cluster.nodeport_range;
    if range.contains(port.port) && !taken_nodeports.contains(&port.port) {
        ExposureDecision {
            port: port.clone(),
            strategy: ExposureStrategy::NodePort,
            assigned_nodeport: Some(port.port),
            reason: format!("port {} lies inside the NodePort range {range}", port.port),
        }
    } else {
        let reason = if range.contains(port.port) {
            format!(
                "node port {} is already assigned in this pass; falling back to the ingress \
                 entry point",
                port.port
            )
        } else {
            format!(
                "port {} lies outside the NodePort range {range}; routing through the ingress \
                 entry point",
                port.port
            )
        };
        ExposureDecision {
            port: port.clone(),
            strategy: ExposureStrategy::IngressTcpRoute,
            assigned_nodeport: None,
            reason,
        }
    }
}
