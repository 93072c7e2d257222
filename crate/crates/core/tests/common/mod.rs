//! Seeded generators for randomized suites: valid-by-construction
//! application and cluster specs, plus arbitrary (not necessarily feasible)
//! placements for the simulator.
#![allow(dead_code)] // each test binary uses its own subset

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use roskube_core::model::{
    derive_pods, AppSpec, ClusterNode, ClusterSpec, ContainerSpec, NetworkBackend, PodPlan,
    PortSpec, Protocol, ResourceMap, RosNodeSpec, TopicSpec, TrafficClass,
};
use roskube_core::placer::Placement;

pub const RESOURCE_POOL: [&str; 3] = ["squat.ai/joystick", "example.com/gpu", "example.com/lidar"];

const PORT_POOL: [(u16, Protocol, TrafficClass); 6] = [
    (7400, Protocol::Udp, TrafficClass::Rtps),
    (50001, Protocol::Tcp, TrafficClass::ExternalDevice),
    (50002, Protocol::Tcp, TrafficClass::ExternalDevice),
    (30500, Protocol::Tcp, TrafficClass::Generic),
    (31000, Protocol::Udp, TrafficClass::Generic),
    (8080, Protocol::Tcp, TrafficClass::Generic),
];

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gen_cluster(rng: &mut ChaCha8Rng, max_nodes: usize) -> ClusterSpec {
    let node_count = rng.random_range(1..=max_nodes);
    let nodes = (0..node_count)
        .map(|i| {
            let mut extended_resources = ResourceMap::new();
            for resource in RESOURCE_POOL {
                if rng.random_bool(0.4) {
                    extended_resources.insert(resource.to_string(), rng.random_range(1..=2));
                }
            }
            ClusterNode {
                name: format!("node-{i}"),
                subnet: format!("subnet-{}", rng.random_range(0..3)),
                phys_mtu: *[1400u64, 1500, 9000].choose(rng).unwrap(),
                cpu_capacity: rng.random_range(4..=32) * 500,
                memory_capacity: rng.random_range(1..=32) * 1_073_741_824,
                extended_resources,
            }
        })
        .collect();
    let cluster = ClusterSpec {
        nodes,
        backend: NetworkBackend {
            name: ["kube-ovn", "weavenet-like", "other"]
                .choose(rng)
                .unwrap()
                .to_string(),
            supports_multicast: rng.random_bool(0.7),
            igmp_snooping: rng.random_bool(0.5),
            overlay_mtu: rng.random_range(26..=30) * 50, // 1300..=1500
            encapsulation_overhead: *[0u64, 50, 100].choose(rng).unwrap(),
        },
        nodeport_range: (30000, 32767).into(),
        rtps_discovery_port: 7400,
        rtps_multicast_group: "239.255.0.1".to_string(),
    };
    cluster.check().expect("generated cluster is valid");
    cluster
}

pub fn gen_app(rng: &mut ChaCha8Rng, max_pods: usize) -> AppSpec {
    let topic_count = rng.random_range(0..=5);
    let topics: Vec<TopicSpec> = (0..topic_count)
        .map(|i| TopicSpec {
            name: format!("topic-{i}"),
            message_size: rng.random_range(1..=9000),
            rate: rng.random_range(0..=200),
        })
        .collect();

    let container_count = rng.random_range(1..=10);
    let containers: Vec<ContainerSpec> = (0..container_count)
        .map(|i| {
            let mut ports = Vec::new();
            let mut pool = PORT_POOL.to_vec();
            pool.shuffle(rng);
            for (port, protocol, traffic_class) in pool.into_iter().take(rng.random_range(0..=2)) {
                ports.push(PortSpec {
                    port,
                    protocol,
                    traffic_class,
                    force_node_port: traffic_class != TrafficClass::Rtps && rng.random_bool(0.25),
                });
            }
            ContainerSpec {
                name: format!("ctr-{i}"),
                image: format!("registry.local/app/ctr-{i}:1"),
                cpu_request: rng.random_range(0..=8) * 250,
                memory_request: rng.random_range(0..=8) * 134_217_728,
                exposed_ports: ports,
                is_ros: rng.random_bool(0.6),
            }
        })
        .collect();

    let ros_hosts: Vec<&str> = containers
        .iter()
        .filter(|c| c.is_ros)
        .map(|c| c.name.as_str())
        .collect();
    let node_count = if ros_hosts.is_empty() {
        0
    } else {
        rng.random_range(0..=8)
    };
    let ros_nodes: Vec<RosNodeSpec> = (0..node_count)
        .map(|i| {
            let mut hardware = ResourceMap::new();
            if rng.random_bool(0.25) {
                let resource = RESOURCE_POOL.choose(rng).unwrap();
                hardware.insert(resource.to_string(), rng.random_range(1..=2));
            }
            let pick = |rng: &mut ChaCha8Rng| -> Vec<String> {
                topics
                    .iter()
                    .filter(|_| rng.random_bool(0.3))
                    .map(|t| t.name.clone())
                    .collect()
            };
            RosNodeSpec {
                name: format!("rosnode-{i}"),
                container: ros_hosts.choose(rng).unwrap().to_string(),
                publishes: pick(rng),
                subscribes: pick(rng),
                hardware,
                pinned_node: if rng.random_bool(0.1) {
                    Some(format!("node-{}", rng.random_range(0..6)))
                } else {
                    None
                },
            }
        })
        .collect();

    let pod_count = rng.random_range(1..=max_pods);
    let pod_grouping: BTreeMap<String, String> = containers
        .iter()
        .map(|c| {
            (
                c.name.clone(),
                format!("pod-{}", rng.random_range(0..pod_count)),
            )
        })
        .collect();

    let app = AppSpec {
        name: "generated".to_string(),
        ros_nodes,
        topics,
        containers,
        pod_grouping,
    };
    app.check().expect("generated app is valid");
    app
}

/// A small all-RTPS application with one single-container pod per
/// participant, for simulator suites.
pub fn gen_sim_app(rng: &mut ChaCha8Rng, max_participants: usize) -> AppSpec {
    let topic_count = rng.random_range(1..=4);
    let topics: Vec<TopicSpec> = (0..topic_count)
        .map(|i| TopicSpec {
            name: format!("topic-{i}"),
            message_size: rng.random_range(1..=9000),
            rate: rng.random_range(0..=100),
        })
        .collect();
    let participant_count = rng.random_range(1..=max_participants);
    let containers: Vec<ContainerSpec> = (0..participant_count)
        .map(|i| ContainerSpec {
            name: format!("ctr-{i}"),
            image: format!("registry.local/sim/ctr-{i}:1"),
            cpu_request: 100,
            memory_request: 1,
            exposed_ports: Vec::new(),
            is_ros: true,
        })
        .collect();
    let ros_nodes: Vec<RosNodeSpec> = (0..participant_count)
        .map(|i| {
            let pick = |rng: &mut ChaCha8Rng| -> Vec<String> {
                topics
                    .iter()
                    .filter(|_| rng.random_bool(0.4))
                    .map(|t| t.name.clone())
                    .collect()
            };
            RosNodeSpec {
                name: format!("rosnode-{i}"),
                container: format!("ctr-{i}"),
                publishes: pick(rng),
                subscribes: pick(rng),
                hardware: ResourceMap::new(),
                pinned_node: None,
            }
        })
        .collect();
    let pod_grouping: BTreeMap<String, String> = (0..participant_count)
        .map(|i| (format!("ctr-{i}"), format!("pod-{i}")))
        .collect();
    let app = AppSpec {
        name: "sim".to_string(),
        ros_nodes,
        topics,
        containers,
        pod_grouping,
    };
    app.check().expect("generated sim app is valid");
    app
}

/// Assigns every pod to a uniformly random node. Ignores capacity on
/// purpose: the simulator only needs hosts.
pub fn gen_placement(rng: &mut ChaCha8Rng, pods: &[PodPlan], cluster: &ClusterSpec) -> Placement {
    let mut placement = Placement::default();
    for pod in pods {
        let node = cluster.nodes.choose(rng).unwrap();
        placement
            .assignments
            .insert(pod.name.clone(), node.name.clone());
        placement.migratability.insert(
            pod.name.clone(),
            roskube_core::placer::Migratability::Migratable,
        );
    }
    placement
}

pub fn pods_of(app: &AppSpec) -> Vec<PodPlan> {
    derive_pods(app)
}
