//! Domain model: the pub/sub application graph, the target cluster, and the
//! pod plans derived from the declared container grouping.
//!
//! [`load_app_spec`] and [`load_cluster_spec`] parse the JSON input documents
//! and check every cross-reference and structural invariant up front, so the
//! other modules can assume a well-formed model. Grouping *policy* problems
//! (for example two RTPS containers in one pod) are not load errors; they are
//! findings for the rules module.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Extended-resource demands or offers keyed by resource name
/// (e.g. `squat.ai/joystick`). Quantities are counted integers, the
/// device-plugin semantics: no fractions, no sharing.
pub type ResourceMap = BTreeMap<String, u64>;

/// Error raised while loading or checking an input document. Every variant
/// carries a path to the offending field.
#[derive(Debug, Error)]
pub enum ModelError {
    /// Not well-formed JSON, or a field does not match the schema
    /// (unknown keys are rejected and named here).
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
    /// A name points at an entity that does not exist.
    #[error("reference error at {path}: unknown {kind} \"{name}\"")]
    Reference {
        path: String,
        kind: &'static str,
        name: String,
    },
    /// A value breaks a structural invariant (duplicate name, bad range...).
    #[error("invariant error at {path}: {message}")]
    Invariant { path: String, message: String },
}

impl ModelError {
    fn invariant(path: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError::Invariant {
            path: path.into(),
            message: message.into(),
        }
    }

    fn reference(path: impl Into<String>, kind: &'static str, name: impl Into<String>) -> Self {
        ModelError::Reference {
            path: path.into(),
            kind,
            name: name.into(),
        }
    }
}

/// Transport protocol of an exposed port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Protocol {
    Tcp,
    Udp,
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Protocol::Tcp => write!(f, "TCP"),
            Protocol::Udp => write!(f, "UDP"),
        }
    }
}

/// What kind of traffic an exposed port carries. RTPS ports are the
/// discovery/data ports of the pub/sub middleware and must never go through
/// a translating service; EXTERNAL_DEVICE ports talk to hardware outside the
/// cluster (e.g. a robot controller dialing in); GENERIC is everything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TrafficClass {
    Rtps,
    ExternalDevice,
    Generic,
}

/// One port a container asks to have reachable from outside the cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortSpec {
    pub port: u16,
    pub protocol: Protocol,
    pub traffic_class: TrafficClass,
    /// Insist on NodePort exposure even when the port number lies outside
    /// the cluster's NodePort range. Normally left false and the exposure
    /// decision picks NodePort or an ingress TCP route automatically.
    #[serde(default)]
    pub force_node_port: bool,
}

/// One ROS node: a vertex of the application graph, hosted by a container.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosNodeSpec {
    pub name: String,
    /// Name of the container hosting this node.
    pub container: String,
    #[serde(default)]
    pub publishes: Vec<String>,
    #[serde(default)]
    pub subscribes: Vec<String>,
    /// Extended resources this node needs on its host (e.g. a USB joystick
    /// surfaced by a device plugin). Quantities must be >= 1.
    #[serde(default)]
    pub hardware: ResourceMap,
    /// Hard-pin to a named cluster node, for constraints the resource model
    /// cannot express (storage, privacy, ...).
    #[serde(default)]
    pub pinned_node: Option<String>,
}

/// A named topic of the application graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicSpec {
    pub name: String,
    /// Payload size in bytes, >= 1.
    pub message_size: u64,
    /// Messages per second; 0 means event-driven.
    pub rate: u64,
}

/// One container image plus its runtime demands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContainerSpec {
    pub name: String,
    pub image: String,
    /// CPU request in millicores.
    pub cpu_request: u64,
    /// Memory request in bytes.
    pub memory_request: u64,
    #[serde(default)]
    pub exposed_ports: Vec<PortSpec>,
    /// True if the container hosts RTPS participants (speaks the pub/sub
    /// wire protocol). Drives the one-per-pod rule and the simulator.
    pub is_ros: bool,
}

/// The whole application: graph, containers, and the user-declared
/// container-to-pod grouping. Grouping is declared, never inferred; the
/// toolkit validates it instead of inventing one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppSpec {
    pub name: String,
    pub ros_nodes: Vec<RosNodeSpec>,
    pub topics: Vec<TopicSpec>,
    pub containers: Vec<ContainerSpec>,
    /// container name -> pod name; every container must appear exactly once.
    pub pod_grouping: BTreeMap<String, String>,
}

/// One schedulable machine of the cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterNode {
    pub name: String,
    /// Underlay subnet the node sits in; drives link latency defaults.
    pub subnet: String,
    /// Physical interface MTU in bytes, >= 576.
    pub phys_mtu: u64,
    /// Allocatable CPU in millicores.
    pub cpu_capacity: u64,
    /// Allocatable memory in bytes.
    pub memory_capacity: u64,
    /// Extended resources offered via device plugins.
    #[serde(default)]
    pub extended_resources: ResourceMap,
}

/// Capability record of the overlay network backend (the CNI plugin).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkBackend {
    /// Free-form backend name, e.g. "kube-ovn", "weavenet", "other".
    pub name: String,
    /// Whether the overlay forwards UDP multicast. Without it, peer
    /// discovery is dead on arrival.
    pub supports_multicast: bool,
    /// Whether IGMP snooping filters multicast down to interested nodes.
    pub igmp_snooping: bool,
    /// MTU configured on the overlay (pod) interfaces, >= 576.
    pub overlay_mtu: u64,
    /// Per-packet bytes the encapsulation adds on the wire.
    #[serde(default = "default_encapsulation_overhead")]
    pub encapsulation_overhead: u64,
}

/// Inclusive port interval, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(u16, u16)", into = "(u16, u16)")]
pub struct PortRange {
    pub lower: u16,
    pub upper: u16,
}

impl PortRange {
    pub fn contains(&self, port: u16) -> bool {
        (self.lower..=self.upper).contains(&port)
    }
}

impl From<(u16, u16)> for PortRange {
    fn from((lower, upper): (u16, u16)) -> Self {
        PortRange { lower, upper }
    }
}

impl From<PortRange> for (u16, u16) {
    fn from(r: PortRange) -> Self {
        (r.lower, r.upper)
    }
}

impl std::fmt::Display for PortRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.lower, self.upper)
    }
}

/// The target cluster: nodes plus the network backend capabilities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub nodes: Vec<ClusterNode>,
    pub backend: NetworkBackend,
    #[serde(default = "default_nodeport_range")]
    pub nodeport_range: PortRange,
    #[serde(default = "default_rtps_discovery_port")]
    pub rtps_discovery_port: u16,
    #[serde(default = "default_rtps_multicast_group")]
    pub rtps_multicast_group: String,
}

fn default_encapsulation_overhead() -> u64 {
    100
}

fn default_nodeport_range() -> PortRange {
    PortRange {
        lower: 30000,
        upper: 32767,
    }
}

fn default_rtps_discovery_port() -> u16 {
    7400
}

fn default_rtps_multicast_group() -> String {
    "239.255.0.1".to_string()
}

/// One pod as materialized from the declared grouping: the containers it
/// runs, the ROS nodes those containers host, and the summed scheduling
/// demands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PodPlan {
    pub name: String,
    pub containers: Vec<String>,
    pub ros_nodes: Vec<String>,
    pub aggregate_hardware: ResourceMap,
    pub aggregate_cpu: u64,
    pub aggregate_memory: u64,
}

/// Names used as cross-reference keys (pods, containers, ROS nodes, cluster
/// nodes) must be non-empty and free of '/' and whitespace, so that derived
/// identifiers like "pod/container" stay unambiguous. Topic names are only
/// required to be non-empty (ROS topics routinely contain '/').
fn check_key_name(value: &str, path: &str, what: &str) -> Result<(), ModelError> {
    if value.is_empty() {
        return Err(ModelError::invariant(
            path,
            format!("{what} must not be empty"),
        ));
    }
    if value.contains('/') || value.chars().any(char::is_whitespace) {
        return Err(ModelError::invariant(
            path,
            format!("{what} \"{value}\" must not contain '/' or whitespace"),
        ));
    }
    Ok(())
}

fn parse_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T, ModelError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| ModelError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Parses and fully checks an application document.
pub fn load_app_spec(text: &str) -> Result<AppSpec, ModelError> {
    let app: AppSpec = parse_json(text)?;
    app.check()?;
    Ok(app)
}

/// Parses and fully checks a cluster document, filling defaults
/// (NodePort range 30000-32767, discovery port 7400, multicast group
/// 239.255.0.1, encapsulation overhead 100).
pub fn load_cluster_spec(text: &str) -> Result<ClusterSpec, ModelError> {
    let cluster: ClusterSpec = parse_json(text)?;
    cluster.check()?;
    Ok(cluster)
}

impl AppSpec {
    pub fn container(&self, name: &str) -> Option<&ContainerSpec> {
        self.containers.iter().find(|c| c.name == name)
    }

    pub fn topic(&self, name: &str) -> Option<&TopicSpec> {
        self.topics.iter().find(|t| t.name == name)
    }

    /// ROS nodes hosted by the named container, in declaration order.
    pub fn ros_nodes_in_container<'a>(
        &'a self,
        container: &'a str,
    ) -> impl Iterator<Item = &'a RosNodeSpec> {
        self.ros_nodes
            .iter()
            .filter(move |n| n.container == container)
    }

    /// Summed extended-resource demand of the ROS nodes inside a container.
    pub fn container_hardware(&self, container: &str) -> ResourceMap {
        let mut merged = ResourceMap::new();
        for node in self.ros_nodes_in_container(container) {
            for (resource, quantity) in &node.hardware {
                *merged.entry(resource.clone()).or_insert(0) += quantity;
            }
        }
        merged
    }

    pub fn has_ros_containers(&self) -> bool {
        self.containers.iter().any(|c| c.is_ros)
    }

    /// Checks all invariants and cross-references. Called by
    /// [`load_app_spec`]; call it directly on programmatically built values.
    pub fn check(&self) -> Result<(), ModelError> {
        check_key_name(&self.name, "name", "application name")?;

        let mut topic_names = BTreeSet::new();
        for (i, topic) in self.topics.iter().enumerate() {
            let path = format!("topics[{i}]");
            if topic.name.is_empty() {
                return Err(ModelError::invariant(
                    format!("{path}.name"),
                    "topic name must not be empty",
                ));
            }
            if !topic_names.insert(topic.name.as_str()) {
                return Err(ModelError::invariant(
                    format!("{path}.name"),
                    format!("duplicate topic name \"{}\"", topic.name),
                ));
            }
            if topic.message_size == 0 {
                return Err(ModelError::invariant(
                    format!("{path}.message_size"),
                    "message_size must be >= 1",
                ));
            }
        }

        let mut container_names = BTreeSet::new();
        for (i, container) in self.containers.iter().enumerate() {
            let path = format!("containers[{i}]");
            check_key_name(&container.name, &format!("{path}.name"), "container name")?;
            if !container_names.insert(container.name.as_str()) {
                return Err(ModelError::invariant(
                    format!("{path}.name"),
                    format!("duplicate container name \"{}\"", container.name),
                ));
            }
            if container.image.is_empty() {
                return Err(ModelError::invariant(
                    format!("{path}.image"),
                    "image must not be empty",
                ));
            }
            let mut seen_ports = BTreeSet::new();
            for (j, port) in container.exposed_ports.iter().enumerate() {
                let port_path = format!("{path}.exposed_ports[{j}]");
                if port.port == 0 {
                    return Err(ModelError::invariant(
                        format!("{port_path}.port"),
                        "port must be in 1-65535",
                    ));
                }
                if !seen_ports.insert(port.port) {
                    return Err(ModelError::invariant(
                        format!("{port_path}.port"),
                        format!("port {} listed twice in container", port.port),
                    ));
                }
                if port.traffic_class == TrafficClass::Rtps && port.protocol != Protocol::Udp {
                    return Err(ModelError::invariant(
                        format!("{port_path}.protocol"),
                        "RTPS traffic runs over UDP",
                    ));
                }
            }
        }

        let mut node_names = BTreeSet::new();
        for (i, node) in self.ros_nodes.iter().enumerate() {
            let path = format!("ros_nodes[{i}]");
            check_key_name(&node.name, &format!("{path}.name"), "ROS node name")?;
            if !node_names.insert(node.name.as_str()) {
                return Err(ModelError::invariant(
                    format!("{path}.name"),
                    format!("duplicate ROS node name \"{}\"", node.name),
                ));
            }
            if !container_names.contains(node.container.as_str()) {
                return Err(ModelError::reference(
                    format!("{path}.container"),
                    "container",
                    &node.container,
                ));
            }
            for (j, topic) in node.publishes.iter().enumerate() {
                if !topic_names.contains(topic.as_str()) {
                    return Err(ModelError::reference(
                        format!("{path}.publishes[{j}]"),
                        "topic",
                        topic,
                    ));
                }
            }
            for (j, topic) in node.subscribes.iter().enumerate() {
                if !topic_names.contains(topic.as_str()) {
                    return Err(ModelError::reference(
                        format!("{path}.subscribes[{j}]"),
                        "topic",
                        topic,
                    ));
                }
            }
            for (resource, quantity) in &node.hardware {
                if resource.is_empty() {
                    return Err(ModelError::invariant(
                        format!("{path}.hardware"),
                        "resource name must not be empty",
                    ));
                }
                if *quantity == 0 {
                    return Err(ModelError::invariant(
                        format!("{path}.hardware.{resource}"),
                        "hardware quantity must be >= 1",
                    ));
                }
            }
        }

        for (container, pod) in &self.pod_grouping {
            let path = format!("pod_grouping.{container}");
            if !container_names.contains(container.as_str()) {
                return Err(ModelError::reference(path, "container", container));
            }
            check_key_name(pod, &path, "pod name")?;
        }
        for container in &self.containers {
            if !self.pod_grouping.contains_key(&container.name) {
                return Err(ModelError::invariant(
                    "pod_grouping",
                    format!("container \"{}\" is not mapped to a pod", container.name),
                ));
            }
        }

        Ok(())
    }
}

impl ClusterSpec {
    pub fn node(&self, name: &str) -> Option<&ClusterNode> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn check(&self) -> Result<(), ModelError> {
        if self.nodes.is_empty() {
            return Err(ModelError::invariant(
                "nodes",
                "at least one cluster node required",
            ));
        }
        let mut names = BTreeSet::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let path = format!("nodes[{i}]");
            check_key_name(&node.name, &format!("{path}.name"), "cluster node name")?;
            if !names.insert(node.name.as_str()) {
                return Err(ModelError::invariant(
                    format!("{path}.name"),
                    format!("duplicate cluster node name \"{}\"", node.name),
                ));
            }
            check_key_name(&node.subnet, &format!("{path}.subnet"), "subnet")?;
            if node.phys_mtu < 576 {
                return Err(ModelError::invariant(
                    format!("{path}.phys_mtu"),
                    "physical MTU must be >= 576",
                ));
            }
        }
        if self.backend.name.is_empty() {
            return Err(ModelError::invariant(
                "backend.name",
                "backend name must not be empty",
            ));
        }
        if self.backend.overlay_mtu < 576 {
            return Err(ModelError::invariant(
                "backend.overlay_mtu",
                "overlay MTU must be >= 576",
            ));
        }
        if self.nodeport_range.lower > self.nodeport_range.upper {
            return Err(ModelError::invariant(
                "nodeport_range",
                format!(
                    "lower bound {} exceeds upper bound {}",
                    self.nodeport_range.lower, self.nodeport_range.upper
                ),
            ));
        }
        if self.rtps_discovery_port == 0 {
            return Err(ModelError::invariant(
                "rtps_discovery_port",
                "port must be in 1-65535",
            ));
        }
        if self.rtps_multicast_group.is_empty() {
            return Err(ModelError::invariant(
                "rtps_multicast_group",
                "multicast group must not be empty",
            ));
        }
        Ok(())
    }
}

/// Materializes the declared grouping into pod plans, one per distinct pod
/// name, ordered by pod name. Aggregates are plain sums; containers and ROS
/// nodes keep their declaration order. Grouping policy violations (like two
/// RTPS containers in one pod) still derive; the rules module reports them.
pub fn derive_pods(app: &AppSpec) -> Vec<PodPlan> {
    let mut grouped: BTreeMap<&str, Vec<&ContainerSpec>> = BTreeMap::new();
    for container in &app.containers {
        // check() guarantees the mapping exists
        let pod = &app.pod_grouping[&container.name];
        grouped.entry(pod).or_default().push(container);
    }

    grouped
        .into_iter()
        .map(|(pod, containers)| {
            let container_names: Vec<String> = containers.iter().map(|c| c.name.clone()).collect();
            let ros_nodes: Vec<String> = app
                .ros_nodes
                .iter()
                .filter(|n| container_names.contains(&n.container))
                .map(|n| n.name.clone())
                .collect();
            let mut aggregate_hardware = ResourceMap::new();
            for container in &container_names {
                for (resource, quantity) in app.container_hardware(container) {
                    *aggregate_hardware.entry(resource).or_insert(0) += quantity;
                }
            }
            PodPlan {
                name: pod.to_string(),
                containers: container_names,
                ros_nodes,
                aggregate_hardware,
                aggregate_cpu: containers.iter().map(|c| c.cpu_request).sum(),
                aggregate_memory: containers.iter().map(|c| c.memory_request).sum(),
            }
        })
        .collect()
}
