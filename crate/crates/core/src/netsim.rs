//! Discrete-event model of multicast participant discovery and topic data
//! flow over a placed deployment.
//!
//! Discovery is modeled at participant granularity: every RTPS-speaking
//! container multicasts an announcement to the discovery group each period;
//! the overlay delivers it to every cluster node (or, with IGMP snooping,
//! only to nodes hosting participants), receivers record the sender and
//! confirm back over unicast. Endpoint exchange is collapsed into topic-name
//! matching on mutually discovered pairs. A backend without multicast drops
//! every announcement, so nothing is ever discovered.
//!
//! The data plane checks the configured overlay MTU against each inter-node
//! path's physical budget (min physical MTU of the two endpoints minus the
//! encapsulation overhead). A misconfigured overlay drops inter-node traffic
//! wholesale; there is no partial degradation and no path-MTU discovery.
//! Same-pod traffic rides loopback and never hits an MTU limit.
//!
//! There is no randomness in the channel: the seed only jitters the order of
//! same-timestamp events, never any result. Announcements are scheduled at
//! k * announce_period for k = 1..floor(duration / announce_period), and
//! in-flight packets drain past the horizon, so the per-node multicast count
//! is exactly floor(duration / period) * participants for each reached node.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::model::{derive_pods, AppSpec, ClusterSpec};
use crate::placer::Placement;

/// Identity of one RTPS participant: an RTPS-speaking container within a
/// pod. Serializes as `"pod/container"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParticipantId {
    pub pod: String,
    pub container: String,
}

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.pod, self.container)
    }
}

impl Serialize for ParticipantId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ParticipantId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        let (pod, container) = text
            .split_once('/')
            .ok_or_else(|| D::Error::custom("expected \"pod/container\""))?;
        if pod.is_empty() || container.is_empty() {
            return Err(D::Error::custom("expected \"pod/container\""));
        }
        Ok(ParticipantId {
            pod: pod.to_string(),
            container: container.to_string(),
        })
    }
}

/// One RTPS participant bound to its host node, with the topic sets of the
/// ROS nodes its container hosts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub id: ParticipantId,
    pub host_node: String,
    /// Synthetic overlay address, stable across runs.
    pub virtual_ip: String,
    pub publishes: BTreeSet<String>,
    pub subscribes: BTreeSet<String>,
}

/// Simulation knobs. The timing constants are tool defaults (the protocol
/// model itself fixes none), all overridable.
#[derive(Debug, Clone)]
pub struct SimParams {
    pub announce_period_ms: u64,
    pub duration_ms: u64,
    pub seed: u64,
    /// Override latency between two subnets (looked up in both orders).
    /// Unlisted pairs default to 1 ms within a subnet and 10 ms across.
    pub per_link_latency_ms: BTreeMap<(String, String), u64>,
}

impl SimParams {
    pub fn new(duration_ms: u64, seed: u64) -> Self {
        SimParams {
            announce_period_ms: 1000,
            duration_ms,
            seed,
            per_link_latency_ms: BTreeMap::new(),
        }
    }

    pub fn check(&self) -> Result<(), SimError> {
        if self.announce_period_ms == 0 {
            return Err(SimError::InvalidParams(
                "announce_period_ms must be >= 1".to_string(),
            ));
        }
        if self.duration_ms < self.announce_period_ms {
            return Err(SimError::InvalidParams(format!(
                "duration_ms {} is shorter than announce_period_ms {}",
                self.duration_ms, self.announce_period_ms
            )));
        }
        Ok(())
    }

    fn latency_ms(&self, a: &str, b: &str) -> u64 {
        if let Some(ms) = self
            .per_link_latency_ms
            .get(&(a.to_string(), b.to_string()))
            .or_else(|| {
                self.per_link_latency_ms
                    .get(&(b.to_string(), a.to_string()))
            })
        {
            return *ms;
        }
        if a == b {
            1
        } else {
            10
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation parameters: {0}")]
    InvalidParams(String),
    #[error("pod \"{0}\" hosts RTPS participants but is not placed; simulation undefined")]
    UnplacedPod(String),
    #[error("placement assigns pod \"{pod}\" to unknown cluster node \"{node}\"")]
    UnknownNode { pod: String, node: String },
}

/// What a dropped packet was.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PacketKind {
    Announcement,
    Data,
}

/// Why a packet was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DropReason {
    NoMulticast,
    MtuExceeded,
}

/// One dropped packet: one record per announcement that the backend refused.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DropRecord {
    pub kind: PacketKind,
    pub from: ParticipantId,
    pub to: String,
    pub reason: DropReason,
}

/// One matched pub/sub edge: both sides discovered each other and share the
/// topic name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MatchedTopic {
    pub publisher: ParticipantId,
    pub subscriber: ParticipantId,
    pub topic: String,
}

/// Discovery outcome: the directional discovered relation (encoded as the
/// adjacency list of discovered pairs over `participants`), the matched
/// topic edges, per-node multicast packet accounting, and drop records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReachabilityReport {
    pub participants: Vec<ParticipantId>,
    /// (a, b) present means a has discovered b.
    pub discovered: BTreeSet<(ParticipantId, ParticipantId)>,
    pub matched_topics: Vec<MatchedTopic>,
    /// Every cluster node appears, participant-free nodes included.
    pub mcast_packets_per_node: BTreeMap<String, u64>,
    pub drops: Vec<DropRecord>,
}

impl ReachabilityReport {
    pub fn is_discovered(&self, a: &ParticipantId, b: &ParticipantId) -> bool {
        self.discovered.contains(&(a.clone(), b.clone()))
    }

    /// True when every ordered pair (self-pairs included) is discovered.
    pub fn is_complete(&self) -> bool {
        self.discovered.len() == self.participants.len() * self.participants.len()
    }
}

/// Per-edge data-plane accounting over the simulated duration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeTraffic {
    pub publisher: ParticipantId,
    pub subscriber: ParticipantId,
    pub topic: String,
    pub messages_delivered: u64,
    pub messages_dropped: u64,
    /// Overlay fragments each delivered message splits into; 0 when the edge
    /// drops everything.
    pub fragments_per_message: u64,
    pub drop_reason: Option<DropReason>,
}

/// A subscription with no live publisher edge.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BrokenPath {
    pub topic: String,
    pub subscriber: ParticipantId,
}

/// Data-plane outcome over the matched edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficReport {
    pub per_edge: Vec<EdgeTraffic>,
    pub broken_paths: Vec<BrokenPath>,
}

impl TrafficReport {
    pub fn has_broken_paths(&self) -> bool {
        !self.broken_paths.is_empty()
    }

    pub fn total_dropped(&self) -> u64 {
        self.per_edge.iter().map(|e| e.messages_dropped).sum()
    }
}

/// Builds the participant set: one per RTPS-speaking container, bound to its
/// pod's assigned node. Errors when an RTPS pod is unplaced.
pub fn build_participants(
    placement: &Placement,
    app: &AppSpec,
) -> Result<Vec<Participant>, SimError> {
    let mut participants = Vec::new();
    for pod in derive_pods(app) {
        for container_name in &pod.containers {
            let container = app.container(container_name).expect("checked app");
            if !container.is_ros {
                continue;
            }
            let host = placement
                .node_of(&pod.name)
                .ok_or_else(|| SimError::UnplacedPod(pod.name.clone()))?;
            let mut publishes = BTreeSet::new();
            let mut subscribes = BTreeSet::new();
            for node in app.ros_nodes_in_container(container_name) {
                publishes.extend(node.publishes.iter().cloned());
                subscribes.extend(node.subscribes.iter().cloned());
            }
            participants.push(Participant {
                id: ParticipantId {
                    pod: pod.name.clone(),
                    container: container_name.clone(),
                },
                host_node: host.to_string(),
                virtual_ip: String::new(),
                publishes,
                subscribes,
            });
        }
    }
    participants.sort_by(|a, b| a.id.cmp(&b.id));

    // synthetic but stable addressing: one /24 per distinct host node
    let hosts: Vec<&str> = participants
        .iter()
        .map(|p| p.host_node.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut next_in_host: BTreeMap<&str, u64> = BTreeMap::new();
    let ips: Vec<String> = participants
        .iter()
        .map(|p| {
            let host_index = hosts
                .binary_search(&p.host_node.as_str())
                .expect("known host");
            let counter = next_in_host.entry(hosts[host_index]).or_insert(0);
            *counter += 1;
            format!("10.244.{}.{}", host_index, counter)
        })
        .collect();
    for (participant, ip) in participants.iter_mut().zip(ips) {
        participant.virtual_ip = ip;
    }
    Ok(participants)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    /// Participant multicasts its periodic announcement.
    Announce { from: usize },
    /// The overlay hands one announcement copy to a node.
    Deliver { from: usize, node: usize },
    /// Unicast confirmation back to a newly discovered sender.
    Reply { from: usize, to: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Event {
    at_ms: u64,
    tie: u32,
    seq: u64,
    kind: EventKind,
}

/// Runs the discovery event loop. See the module docs for the model.
pub fn simulate_discovery(
    placement: &Placement,
    app: &AppSpec,
    cluster: &ClusterSpec,
    params: &SimParams,
) -> Result<ReachabilityReport, SimError> {
    params.check()?;
    let participants = build_participants(placement, app)?;

    let node_names: Vec<&str> = cluster.nodes.iter().map(|n| n.name.as_str()).collect();
    let subnet_of: BTreeMap<&str, &str> = cluster
        .nodes
        .iter()
        .map(|n| (n.name.as_str(), n.subnet.as_str()))
        .collect();
    for participant in &participants {
        if !subnet_of.contains_key(participant.host_node.as_str()) {
            return Err(SimError::UnknownNode {
                pod: participant.id.pod.clone(),
                node: participant.host_node.clone(),
            });
        }
    }
    let node_index: BTreeMap<&str, usize> = node_names
        .iter()
        .enumerate()
        .map(|(i, name)| (*name, i))
        .collect();
    let mut hosted: Vec<Vec<usize>> = vec![Vec::new(); node_names.len()];
    for (i, participant) in participants.iter().enumerate() {
        hosted[node_index[participant.host_node.as_str()]].push(i);
    }

    let count = participants.len();
    let mut discovered = vec![vec![false; count]; count];
    let mut mcast_packets: BTreeMap<String, u64> =
        cluster.nodes.iter().map(|n| (n.name.clone(), 0)).collect();
    let mut drops = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut heap: BinaryHeap<Reverse<Event>> = BinaryHeap::new();
    let mut seq = 0u64;
    let push = |heap: &mut BinaryHeap<Reverse<Event>>,
                rng: &mut ChaCha8Rng,
                seq: &mut u64,
                at_ms: u64,
                kind: EventKind| {
        *seq += 1;
        heap.push(Reverse(Event {
            at_ms,
            tie: rng.random(),
            seq: *seq,
            kind,
        }));
    };

    let rounds = params.duration_ms / params.announce_period_ms;
    for round in 1..=rounds {
        for from in 0..count {
            push(
                &mut heap,
                &mut rng,
                &mut seq,
                round * params.announce_period_ms,
                EventKind::Announce { from },
            );
        }
    }

    let group_address = format!(
        "{}:{}",
        cluster.rtps_multicast_group, cluster.rtps_discovery_port
    );
    while let Some(Reverse(event)) = heap.pop() {
        match event.kind {
            EventKind::Announce { from } => {
                if !cluster.backend.supports_multicast {
                    drops.push(DropRecord {
                        kind: PacketKind::Announcement,
                        from: participants[from].id.clone(),
                        to: group_address.clone(),
                        reason: DropReason::NoMulticast,
                    });
                    continue;
                }
                let from_subnet = subnet_of[participants[from].host_node.as_str()];
                for (node, residents) in hosted.iter().enumerate() {
                    if cluster.backend.igmp_snooping && residents.is_empty() {
                        continue;
                    }
                    let latency = params.latency_ms(from_subnet, subnet_of[node_names[node]]);
                    push(
                        &mut heap,
                        &mut rng,
                        &mut seq,
                        event.at_ms + latency,
                        EventKind::Deliver { from, node },
                    );
                }
            }
            EventKind::Deliver { from, node } => {
                *mcast_packets.get_mut(node_names[node]).expect("known node") += 1;
                for &receiver in &hosted[node] {
                    if !discovered[receiver][from] {
                        discovered[receiver][from] = true;
                        if receiver != from {
                            let latency = params.latency_ms(
                                subnet_of[participants[receiver].host_node.as_str()],
                                subnet_of[participants[from].host_node.as_str()],
                            );
                            push(
                                &mut heap,
                                &mut rng,
                                &mut seq,
                                event.at_ms + latency,
                                EventKind::Reply {
                                    from: receiver,
                                    to: from,
                                },
                            );
                        }
                    }
                }
            }
            EventKind::Reply { from, to } => {
                discovered[to][from] = true;
            }
        }
    }

    let mut discovered_pairs = BTreeSet::new();
    for a in 0..count {
        for b in 0..count {
            if discovered[a][b] {
                discovered_pairs.insert((participants[a].id.clone(), participants[b].id.clone()));
            }
        }
    }

    let mut matched_topics = Vec::new();
    for a in 0..count {
        for b in 0..count {
            if discovered[a][b] && discovered[b][a] {
                for topic in participants[a]
                    .publishes
                    .intersection(&participants[b].subscribes)
                {
                    matched_topics.push(MatchedTopic {
                        publisher: participants[a].id.clone(),
                        subscriber: participants[b].id.clone(),
                        topic: topic.clone(),
                    });
                }
            }
        }
    }
    matched_topics.sort();
    drops.sort();

    Ok(ReachabilityReport {
        participants: participants.into_iter().map(|p| p.id).collect(),
        discovered: discovered_pairs,
        matched_topics,
        mcast_packets_per_node: mcast_packets,
        drops,
    })
}

/// Closed-form discovery predicate used to cross-check the event loop:
/// every ordered pair is discovered iff the backend forwards multicast.
/// No events, no timing.
pub fn oracle_reachability(
    placement: &Placement,
    app: &AppSpec,
    cluster: &ClusterSpec,
) -> Result<BTreeSet<(ParticipantId, ParticipantId)>, SimError> {
    let participants = build_participants(placement, app)?;
    let mut pairs = BTreeSet::new();
    if cluster.backend.supports_multicast {
        for a in &participants {
            for b in &participants {
                pairs.insert((a.id.clone(), b.id.clone()));
            }
        }
    }
    Ok(pairs)
}

fn ceil_div(value: u64, divisor: u64) -> u64 {
    value.div_ceil(divisor)
}

/// Runs discovery, then pushes each matched edge's messages through the MTU
/// model. Per edge, delivered + dropped always equals
/// floor(rate * duration / 1000).
pub fn simulate_dataplane(
    placement: &Placement,
    app: &AppSpec,
    cluster: &ClusterSpec,
    params: &SimParams,
) -> Result<TrafficReport, SimError> {
    let reachability = simulate_discovery(placement, app, cluster, params)?;
    let participants = build_participants(placement, app)?;
    let host_of: BTreeMap<&ParticipantId, &str> = participants
        .iter()
        .map(|p| (&p.id, p.host_node.as_str()))
        .collect();
    let phys_mtu: BTreeMap<&str, u64> = cluster
        .nodes
        .iter()
        .map(|n| (n.name.as_str(), n.phys_mtu))
        .collect();
    let overlay = cluster.backend.overlay_mtu;
    let overhead = cluster.backend.encapsulation_overhead;

    let mut per_edge = Vec::new();
    for edge in &reachability.matched_topics {
        let topic = app.topic(&edge.topic).expect("checked app");
        let messages = topic.rate * params.duration_ms / 1000;
        let same_pod = edge.publisher.pod == edge.subscriber.pod;
        let publisher_node = host_of[&edge.publisher];
        let subscriber_node = host_of[&edge.subscriber];

        let (delivered, dropped, fragments, drop_reason) = if same_pod {
            // loopback inside the pod: no MTU limit on the path
            (messages, 0, ceil_div(topic.message_size, overlay), None)
        } else if publisher_node == subscriber_node {
            // same node, different pods: never crosses the underlay
            (messages, 0, ceil_div(topic.message_size, overlay), None)
        } else {
            let budget = phys_mtu[publisher_node]
                .min(phys_mtu[subscriber_node])
                .saturating_sub(overhead);
            if overlay > budget {
                (0, messages, 0, Some(DropReason::MtuExceeded))
            } else {
                let path_mtu = overlay.min(budget);
                (messages, 0, ceil_div(topic.message_size, path_mtu), None)
            }
        };
        per_edge.push(EdgeTraffic {
            publisher: edge.publisher.clone(),
            subscriber: edge.subscriber.clone(),
            topic: edge.topic.clone(),
            messages_delivered: delivered,
            messages_dropped: dropped,
            fragments_per_message: fragments,
            drop_reason,
        });
    }

    let mut broken_paths = Vec::new();
    for participant in &participants {
        for topic in &participant.subscribes {
            let has_publisher = reachability
                .matched_topics
                .iter()
                .any(|e| e.subscriber == participant.id && e.topic == *topic);
            if !has_publisher {
                broken_paths.push(BrokenPath {
                    topic: topic.clone(),
                    subscriber: participant.id.clone(),
                });
            }
        }
    }
    broken_paths.sort();

    Ok(TrafficReport {
        per_edge,
        broken_paths,
    })
}
