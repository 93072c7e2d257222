//! Acceptance suite: one test per release criterion, each printing a
//! [PASS]/[FAIL] line (visible with `--nocapture`). Randomized checks run
//! against independently coded oracles, never against the implementation
//! under test.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, resume_unwind, UnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use common::*;
use rand::prelude::*;

use roskube_core::model::{
    derive_pods, load_app_spec, load_cluster_spec, AppSpec, ClusterSpec, PodPlan, Protocol,
    TrafficClass,
};
use roskube_core::netsim::{
    oracle_reachability, simulate_dataplane, simulate_discovery, DropReason, SimParams,
};
use roskube_core::placer::{plan_placement, Migratability};
use roskube_core::render::render_all;
use roskube_core::rules::{validate, RuleId, Severity};
use roskube_core::slim::{
    compute_keep_set, load_image_model, load_trace, slim_report, FileEntry, ImageModel,
    RuntimeTrace,
};

fn criterion(number: u8, description: &str, body: impl FnOnce() + UnwindSafe) {
    match catch_unwind(body) {
        Ok(()) => println!("[PASS] criterion {number}: {description}"),
        Err(panic) => {
            println!("[FAIL] criterion {number}: {description}");
            resume_unwind(panic);
        }
    }
}

fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name))
        .unwrap_or_else(|e| panic!("reading fixture {name}: {e}"))
}

fn teleop() -> (AppSpec, ClusterSpec) {
    let app = load_app_spec(&read_fixture("teleop-app.json")).expect("teleop app loads");
    let cluster =
        load_cluster_spec(&read_fixture("teleop-cluster.json")).expect("teleop cluster loads");
    (app, cluster)
}

// ---------------------------------------------------------------------------
// criterion 1: teleoperation end to end
// ---------------------------------------------------------------------------

#[test]
fn c1_teleop_end_to_end() {
    criterion(
        1,
        "teleoperation fixture: validate, plan, simulate, render",
        || {
            let started = Instant::now();
            let (app, cluster) = teleop();
            let pods = derive_pods(&app);
            assert_eq!(pods.len(), 2);

            let findings = validate(&app, &pods, &cluster);
            assert!(
                findings.iter().all(|f| f.severity != Severity::Error),
                "unexpected errors: {findings:?}"
            );
            assert!(findings.is_empty(), "expected zero findings: {findings:?}");

            let placement = plan_placement(&pods, &app, &cluster);
            assert!(placement.is_fully_placed());
            assert_eq!(placement.node_of("joy-pod"), Some("edge-1"));
            assert_eq!(
                placement.migratability["joy-pod"],
                Migratability::HardwareBound
            );
            let migratable: Vec<&str> = placement
                .migratability
                .iter()
                .filter(|(_, m)| **m == Migratability::Migratable)
                .map(|(pod, _)| pod.as_str())
                .collect();
            assert_eq!(
                migratable,
                vec!["ur5-driver-pod"],
                "only joy-pod is tied down"
            );

            let params = SimParams::new(5000, 0);
            let reachability = simulate_discovery(&placement, &app, &cluster, &params).unwrap();
            assert!(reachability.is_complete(), "discovery matrix incomplete");
            let traffic = simulate_dataplane(&placement, &app, &cluster, &params).unwrap();
            assert!(
                traffic.broken_paths.is_empty(),
                "{:?}",
                traffic.broken_paths
            );
            assert_eq!(traffic.total_dropped(), 0);

            let bundle = render_all(&app, &cluster, &placement).unwrap();
            assert_eq!(bundle.files.len(), 5);
            let joy_pod = bundle
                .files
                .iter()
                .find(|f| f.path == "pods/joy-pod.yaml")
                .expect("joy pod manifest");
            assert!(
                joy_pod
                    .content
                    .lines()
                    .any(|l| l.trim() == "squat.ai/joystick: 1"),
                "{}",
                joy_pod.content
            );
            for port in [50001, 50002] {
                let route = bundle
                    .files
                    .iter()
                    .find(|f| f.path == format!("routes/ur5-driver-{port}.yaml"))
                    .unwrap_or_else(|| panic!("missing TCP route for {port}"));
                assert!(route.content.contains("kind: IngressRouteTCP"));
                assert!(route.content.contains(&format!("- port-{port}")));
            }

            let elapsed = started.elapsed();
            assert!(elapsed.as_secs_f64() < 1.0, "pipeline took {elapsed:?}");
        },
    );
}

// ---------------------------------------------------------------------------
// criterion 2: rule catalog vs an independent predicate-per-rule oracle
// ---------------------------------------------------------------------------

/// Independent re-statement of the catalog, coded from the rule text alone.
/// Returns (rule, severity, subject) triples; messages are presentation.
mod rule_oracle {
    use std::collections::BTreeMap;

    use roskube_core::model::{AppSpec, ClusterSpec, PodPlan, TrafficClass};
    use roskube_core::rules::{RuleId, Severity};

    pub type Finding = (RuleId, Severity, String);

    pub fn findings(app: &AppSpec, pods: &[PodPlan], cluster: &ClusterSpec) -> Vec<Finding> {
        let mut out = Vec::new();
        let is_ros: BTreeMap<&str, bool> = app
            .containers
            .iter()
            .map(|c| (c.name.as_str(), c.is_ros))
            .collect();

        // R1: two or more RTPS containers grouped into one pod
        for pod in pods {
            let ros_count = pod.containers.iter().filter(|c| is_ros[c.as_str()]).count();
            if ros_count >= 2 {
                out.push((RuleId::R1, Severity::Error, format!("pod/{}", pod.name)));
            }
        }
        // R2: an RTPS-class port declared for exposure
        for container in &app.containers {
            for port in &container.exposed_ports {
                if port.traffic_class == TrafficClass::Rtps {
                    out.push((
                        RuleId::R2,
                        Severity::Error,
                        format!("container/{}/port/{}", container.name, port.port),
                    ));
                }
            }
        }
        // R3: RTPS containers exist but the backend lacks multicast
        if app.containers.iter().any(|c| c.is_ros) && !cluster.backend.supports_multicast {
            out.push((
                RuleId::R3,
                Severity::Error,
                format!("backend/{}", cluster.backend.name),
            ));
        }
        // R4: multicast without IGMP snooping (advisory)
        if cluster.backend.supports_multicast && !cluster.backend.igmp_snooping {
            out.push((
                RuleId::R4,
                Severity::Warning,
                format!("backend/{}", cluster.backend.name),
            ));
        }
        // R5: overlay MTU over the per-node budget
        for node in &cluster.nodes {
            let budget = node.phys_mtu as i128 - cluster.backend.encapsulation_overhead as i128;
            if (cluster.backend.overlay_mtu as i128) > budget {
                out.push((RuleId::R5, Severity::Error, format!("node/{}", node.name)));
            }
        }
        // R6: forced NodePort outside the NodePort range
        for container in &app.containers {
            for port in &container.exposed_ports {
                if port.traffic_class != TrafficClass::Rtps
                    && port.force_node_port
                    && !(cluster.nodeport_range.lower..=cluster.nodeport_range.upper)
                        .contains(&port.port)
                {
                    out.push((
                        RuleId::R6,
                        Severity::Error,
                        format!("container/{}/port/{}", container.name, port.port),
                    ));
                }
            }
        }
        // R7: a per-pod hardware demand nothing can satisfy
        for pod in pods {
            for (resource, quantity) in &pod.aggregate_hardware {
                let anywhere = cluster
                    .nodes
                    .iter()
                    .any(|n| n.extended_resources.get(resource).copied().unwrap_or(0) >= *quantity);
                if !anywhere {
                    out.push((
                        RuleId::R7,
                        Severity::Error,
                        format!("pod/{}/resource/{}", pod.name, resource),
                    ));
                }
            }
        }
        out.sort();
        out
    }
}

fn assert_matches_oracle(app: &AppSpec, cluster: &ClusterSpec, label: &str) {
    let pods = derive_pods(app);
    let got: Vec<rule_oracle::Finding> = validate(app, &pods, cluster)
        .into_iter()
        .map(|v| (v.rule_id, v.severity, v.subject))
        .collect();
    let expected = rule_oracle::findings(app, &pods, cluster);
    assert_eq!(got, expected, "oracle mismatch on {label}");
}

fn assert_rule(app: &AppSpec, cluster: &ClusterSpec, rule: RuleId, present: bool, label: &str) {
    let pods = derive_pods(app);
    let fired = validate(app, &pods, cluster)
        .iter()
        .any(|v| v.rule_id == rule);
    assert_eq!(fired, present, "{label}: expected {rule} present={present}");
    assert_matches_oracle(app, cluster, label);
}

#[test]
fn c2_rule_catalog_positive_negative_and_randomized() {
    criterion(
        2,
        "rule catalog matches the per-rule oracle on fixtures and 200 random specs",
        || {
            let (base_app, base_cluster) = teleop();

            // R1
            let mut app = base_app.clone();
            app.pod_grouping
                .insert("joystick".into(), "ur5-driver-pod".into());
            assert_rule(&app, &base_cluster, RuleId::R1, true, "R1 positive");
            assert_rule(&base_app, &base_cluster, RuleId::R1, false, "R1 negative");

            // R2
            let mut app = base_app.clone();
            app.containers[0]
                .exposed_ports
                .push(roskube_core::model::PortSpec {
                    port: 7400,
                    protocol: Protocol::Udp,
                    traffic_class: TrafficClass::Rtps,
                    force_node_port: false,
                });
            assert_rule(&app, &base_cluster, RuleId::R2, true, "R2 positive");
            assert_rule(&base_app, &base_cluster, RuleId::R2, false, "R2 negative");

            // R3
            let mut cluster = base_cluster.clone();
            cluster.backend.supports_multicast = false;
            assert_rule(&base_app, &cluster, RuleId::R3, true, "R3 positive");
            assert_rule(&base_app, &base_cluster, RuleId::R3, false, "R3 negative");

            // R4
            let mut cluster = base_cluster.clone();
            cluster.backend.igmp_snooping = false;
            assert_rule(&base_app, &cluster, RuleId::R4, true, "R4 positive");
            assert_rule(&base_app, &base_cluster, RuleId::R4, false, "R4 negative");

            // R5
            let mut cluster = base_cluster.clone();
            cluster.backend.overlay_mtu = 1450;
            assert_rule(&base_app, &cluster, RuleId::R5, true, "R5 positive");
            assert_rule(&base_app, &base_cluster, RuleId::R5, false, "R5 negative");

            // R6
            let mut app = base_app.clone();
            app.containers[1].exposed_ports[0].force_node_port = true;
            assert_rule(&app, &base_cluster, RuleId::R6, true, "R6 positive");
            assert_rule(&base_app, &base_cluster, RuleId::R6, false, "R6 negative");

            // R7
            let mut cluster = base_cluster.clone();
            cluster.nodes[0].extended_resources.clear();
            assert_rule(&base_app, &cluster, RuleId::R7, true, "R7 positive");
            assert_rule(&base_app, &base_cluster, RuleId::R7, false, "R7 negative");

            // randomized sweep
            let mut rng = rng_for(0x5eed_2001);
            for case in 0..200 {
                let app = gen_app(&mut rng, 10);
                let cluster = gen_cluster(&mut rng, 6);
                assert_matches_oracle(&app, &cluster, &format!("random case {case}"));
            }
        },
    );
}

// ---------------------------------------------------------------------------
// criterion 3: MTU boundary, rule and simulator agree
// ---------------------------------------------------------------------------

#[test]
fn c3_mtu_boundary_rule_and_simulator_agree() {
    criterion(
        3,
        "overlay 1400 passes and delivers; 1401 fails R5 and drops inter-node traffic",
        || {
            let (app, mut cluster) = teleop();
            let pods = derive_pods(&app);
            let params = SimParams::new(5000, 0);

            cluster.backend.overlay_mtu = 1400;
            let findings = validate(&app, &pods, &cluster);
            assert!(!findings.iter().any(|f| f.rule_id == RuleId::R5));
            let placement = plan_placement(&pods, &app, &cluster);
            let traffic = simulate_dataplane(&placement, &app, &cluster, &params).unwrap();
            assert_eq!(traffic.total_dropped(), 0);
            assert!(traffic.per_edge.iter().all(|e| e.messages_delivered > 0));

            cluster.backend.overlay_mtu = 1401;
            let findings = validate(&app, &pods, &cluster);
            assert!(findings.iter().any(|f| f.rule_id == RuleId::R5));
            let traffic = simulate_dataplane(&placement, &app, &cluster, &params).unwrap();
            let node_of = |pod: &str| placement.node_of(pod).unwrap();
            let mut saw_internode = false;
            for edge in &traffic.per_edge {
                let internode = node_of(&edge.publisher.pod) != node_of(&edge.subscriber.pod);
                if internode {
                    saw_internode = true;
                    assert_eq!(
                        edge.messages_delivered, 0,
                        "inter-node edge must drop everything"
                    );
                    assert!(edge.messages_dropped > 0);
                    assert_eq!(edge.drop_reason, Some(DropReason::MtuExceeded));
                } else {
                    assert_eq!(edge.messages_dropped, 0, "local edges are unaffected");
                }
            }
            assert!(saw_internode, "fixture must exercise an inter-node edge");
        },
    );
}

// ---------------------------------------------------------------------------
// criterion 4: snooping neutrality and the closed-form packet counter
// ---------------------------------------------------------------------------

#[test]
fn c4_snooping_properties_over_random_placements() {
    criterion(
        4,
        "100 random placements: snooping never changes discovery, counts match the closed form",
        || {
            let mut rng = rng_for(0x5eed_2004);
            for case in 0..100 {
                let app = gen_sim_app(&mut rng, 8);
                let mut cluster = gen_cluster(&mut rng, 6);
                cluster.backend.supports_multicast = true;
                let pods = pods_of(&app);
                let placement = gen_placement(&mut rng, &pods, &cluster);
                let mut params = SimParams::new(rng.random_range(2000..=5500), rng.random());
                params.announce_period_ms = 1000;

                cluster.backend.igmp_snooping = true;
                let snooped = simulate_discovery(&placement, &app, &cluster, &params).unwrap();
                cluster.backend.igmp_snooping = false;
                let flooded = simulate_discovery(&placement, &app, &cluster, &params).unwrap();

                assert_eq!(snooped.discovered, flooded.discovered, "case {case}");
                assert_eq!(
                    snooped.matched_topics, flooded.matched_topics,
                    "case {case}"
                );

                let hosting: BTreeSet<&str> =
                    placement.assignments.values().map(String::as_str).collect();
                let rounds = params.duration_ms / params.announce_period_ms;
                let expected = rounds * snooped.participants.len() as u64;
                for node in &cluster.nodes {
                    let with_snooping = snooped.mcast_packets_per_node[&node.name];
                    let without_snooping = flooded.mcast_packets_per_node[&node.name];
                    assert_eq!(
                        without_snooping, expected,
                        "case {case}, node {}",
                        node.name
                    );
                    if hosting.contains(node.name.as_str()) {
                        assert_eq!(with_snooping, expected, "case {case}, node {}", node.name);
                    } else {
                        assert_eq!(with_snooping, 0, "case {case}, node {}", node.name);
                    }
                }
            }
        },
    );
}

// ---------------------------------------------------------------------------
// criterion 5: event-loop discovery equals the closed-form oracle
// ---------------------------------------------------------------------------

#[test]
fn c5_discovery_matches_reachability_oracle() {
    criterion(
        5,
        "100 seeds: simulated discovery equals the closed-form reachability oracle",
        || {
            let mut rng = rng_for(0x5eed_2005);
            for seed in 0..100u64 {
                let app = gen_sim_app(&mut rng, 8);
                let mut cluster = gen_cluster(&mut rng, 6);
                cluster.backend.supports_multicast = rng.random_bool(0.5);
                let pods = pods_of(&app);
                let placement = gen_placement(&mut rng, &pods, &cluster);
                let mut params = SimParams::new(2000 + rng.random_range(0..=3000), seed);
                params.announce_period_ms = 1000;

                let report = simulate_discovery(&placement, &app, &cluster, &params).unwrap();
                let oracle = oracle_reachability(&placement, &app, &cluster).unwrap();
                assert_eq!(report.discovered, oracle, "seed {seed}");
            }
        },
    );
}

// ---------------------------------------------------------------------------
// criterion 6: slim ratios and the exhaustive reachability oracle
// ---------------------------------------------------------------------------

/// Independent keep-set oracle: iterate the edge list to a fixpoint instead
/// of walking an adjacency map.
fn keep_oracle(image: &ImageModel, trace: &RuntimeTrace) -> BTreeSet<String> {
    let files: BTreeSet<&str> = image.files.iter().map(|f| f.path.as_str()).collect();
    let mut kept: BTreeSet<String> = image.entrypoints.iter().cloned().collect();
    kept.extend(
        trace
            .accessed
            .iter()
            .filter(|p| files.contains(p.as_str()))
            .cloned(),
    );
    loop {
        let mut changed = false;
        for (from, to) in &image.deps {
            if kept.contains(from) && !kept.contains(to) {
                kept.insert(to.clone());
                changed = true;
            }
        }
        if !changed {
            return kept;
        }
    }
}

#[test]
fn c6_slim_ratios_and_keep_oracle() {
    criterion(6, "slim reports 82.9% and 88.5% on the sized fixtures; keep set matches the oracle on 500 graphs", || {
        let joy = load_image_model(&read_fixture("slim-joy-image.json")).unwrap();
        let joy_trace = load_trace(&read_fixture("slim-joy-trace.json")).unwrap();
        let keep = compute_keep_set(&joy, &joy_trace);
        let report = slim_report(&joy, &keep, &joy_trace).unwrap();
        assert_eq!(report.original_size, 486_000_000);
        assert_eq!(report.slimmed_size, 83_000_000);
        assert_eq!(format!("{:.1}%", report.reduction_percent), "82.9%");
        assert_eq!(
            report.unknown_trace_paths,
            vec!["/proc/cpuinfo".to_string(), "/sys/class/input/js0".to_string()]
        );

        let ur5 = load_image_model(&read_fixture("slim-ur5-image.json")).unwrap();
        let keep = compute_keep_set(&ur5, &RuntimeTrace::default());
        let report = slim_report(&ur5, &keep, &RuntimeTrace::default()).unwrap();
        assert_eq!(report.original_size, 2_600_000_000);
        assert_eq!(report.slimmed_size, 300_000_000);
        assert_eq!(format!("{:.1}%", report.reduction_percent), "88.5%");

        let mut rng = rng_for(0x5eed_2006);
        for case in 0..500 {
            let file_count = rng.random_range(1..=200);
            let files: Vec<FileEntry> = (0..file_count)
                .map(|i| FileEntry {
                    path: format!("f{i}"),
                    size: rng.random_range(1..=1000),
                })
                .collect();
            let edge_count = rng.random_range(0..=2 * file_count);
            let deps: Vec<(String, String)> = (0..edge_count)
                .map(|_| {
                    (
                        format!("f{}", rng.random_range(0..file_count)),
                        format!("f{}", rng.random_range(0..file_count)),
                    )
                })
                .collect();
            let entrypoints: Vec<String> = (0..file_count)
                .filter(|_| rng.random_bool(0.02))
                .map(|i| format!("f{i}"))
                .collect();
            let image = ImageModel { files, deps, entrypoints };
            image.check().unwrap();
            let mut accessed: BTreeSet<String> = (0..file_count)
                .filter(|_| rng.random_bool(0.02))
                .map(|i| format!("f{i}"))
                .collect();
            if rng.random_bool(0.5) {
                accessed.insert("/proc/phantom".to_string());
            }
            let trace = RuntimeTrace { accessed };

            let keep = compute_keep_set(&image, &trace);
            assert_eq!(keep, keep_oracle(&image, &trace), "case {case}");

            let report = slim_report(&image, &keep, &trace).unwrap();
            assert_eq!(report.kept.len() + report.removed.len(), image.files.len());
            assert!(report.kept.is_disjoint(&report.removed));
        }
    });
}

// ---------------------------------------------------------------------------
// criterion 7: byte-level determinism against the checked-in golden bundle
// ---------------------------------------------------------------------------

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/teleop")
}

fn walk_files(dir: &Path, base: &Path, out: &mut Vec<(String, String)>) {
    for entry in std::fs::read_dir(dir).expect("golden dir readable") {
        let path = entry.expect("dir entry").path();
        if path.is_dir() {
            walk_files(&path, base, out);
        } else {
            let rel = path
                .strip_prefix(base)
                .unwrap()
                .to_string_lossy()
                .into_owned();
            out.push((
                rel,
                std::fs::read_to_string(&path).expect("golden file readable"),
            ));
        }
    }
}

#[test]
fn c7_outputs_are_byte_stable_and_match_goldens() {
    criterion(
        7,
        "re-runs are byte-identical and the teleop bundle matches the golden files",
        || {
            let (app, cluster) = teleop();
            let pods = derive_pods(&app);
            let placement = plan_placement(&pods, &app, &cluster);

            let first = render_all(&app, &cluster, &placement).unwrap();
            let second = render_all(&app, &cluster, &placement).unwrap();
            assert_eq!(first, second, "render must be deterministic");

            let mut golden: Vec<(String, String)> = Vec::new();
            walk_files(&golden_dir(), &golden_dir(), &mut golden);
            golden.sort();
            let rendered: Vec<(String, String)> = first
                .files
                .iter()
                .map(|f| (f.path.clone(), f.content.clone()))
                .collect();
            assert_eq!(
                rendered, golden,
                "bundle diverges from the checked-in goldens"
            );

            // the JSON reports are byte-stable too
            let params = SimParams::new(5000, 0);
            let findings = validate(&app, &pods, &cluster);
            let reach_a = simulate_discovery(&placement, &app, &cluster, &params).unwrap();
            let reach_b = simulate_discovery(&placement, &app, &cluster, &params).unwrap();
            assert_eq!(
                serde_json::to_string(&reach_a).unwrap(),
                serde_json::to_string(&reach_b).unwrap()
            );
            let plan_b = plan_placement(&pods, &app, &cluster);
            assert_eq!(
                serde_json::to_string(&placement).unwrap(),
                serde_json::to_string(&plan_b).unwrap()
            );
            assert_eq!(
                serde_json::to_string(&findings).unwrap(),
                serde_json::to_string(&validate(&app, &pods, &cluster)).unwrap()
            );
        },
    );
}

// ---------------------------------------------------------------------------
// module property: greedy placements are feasible; unplaced pods are either
// truly infeasible or an accepted greedy gap (checked by brute force)
// ---------------------------------------------------------------------------

/// Independent joint-feasibility check of a complete assignment.
fn assignment_feasible(
    pods: &[PodPlan],
    app: &AppSpec,
    cluster: &ClusterSpec,
    assignment: &[usize],
) -> bool {
    for (pod, &node_index) in pods.iter().zip(assignment) {
        let node = &cluster.nodes[node_index];
        for ros_node in &app.ros_nodes {
            if pod.ros_nodes.contains(&ros_node.name) {
                if let Some(pin) = &ros_node.pinned_node {
                    if *pin != node.name {
                        return false;
                    }
                }
            }
        }
    }
    for (node_index, node) in cluster.nodes.iter().enumerate() {
        let members: Vec<&PodPlan> = pods
            .iter()
            .zip(assignment)
            .filter(|(_, &n)| n == node_index)
            .map(|(p, _)| p)
            .collect();
        let cpu: u64 = members.iter().map(|p| p.aggregate_cpu).sum();
        let memory: u64 = members.iter().map(|p| p.aggregate_memory).sum();
        if cpu > node.cpu_capacity || memory > node.memory_capacity {
            return false;
        }
        for resource in RESOURCE_POOL {
            let demand: u64 = members
                .iter()
                .map(|p| p.aggregate_hardware.get(resource).copied().unwrap_or(0))
                .sum();
            if demand > node.extended_resources.get(resource).copied().unwrap_or(0) {
                return false;
            }
        }
    }
    true
}

fn exists_feasible_assignment(pods: &[PodPlan], app: &AppSpec, cluster: &ClusterSpec) -> bool {
    let nodes = cluster.nodes.len();
    let mut assignment = vec![0usize; pods.len()];
    loop {
        if assignment_feasible(pods, app, cluster, &assignment) {
            return true;
        }
        let mut position = 0;
        loop {
            if position == assignment.len() {
                return false;
            }
            assignment[position] += 1;
            if assignment[position] < nodes {
                break;
            }
            assignment[position] = 0;
            position += 1;
        }
    }
}

#[test]
fn placer_greedy_agrees_with_brute_force_on_small_instances() {
    let mut rng = rng_for(0x5eed_9001);
    let mut greedy_gaps = 0;
    for case in 0..150 {
        let app = gen_app(&mut rng, 6);
        let cluster = gen_cluster(&mut rng, 4);
        let pods = pods_of(&app);
        if pods.len() > 6 {
            continue;
        }
        let placement = plan_placement(&pods, &app, &cluster);

        // whatever was placed must be jointly feasible
        let placed: Vec<PodPlan> = pods
            .iter()
            .filter(|p| placement.assignments.contains_key(&p.name))
            .cloned()
            .collect();
        let node_index: Vec<usize> = placed
            .iter()
            .map(|p| {
                cluster
                    .nodes
                    .iter()
                    .position(|n| n.name == placement.assignments[&p.name])
                    .expect("assigned node exists")
            })
            .collect();
        assert!(
            assignment_feasible(&placed, &app, &cluster, &node_index),
            "case {case}: greedy produced an infeasible placement"
        );

        // coverage: every pod is either assigned or explained
        assert_eq!(
            placement.assignments.len() + placement.unplaced.len(),
            pods.len(),
            "case {case}"
        );

        if !placement.unplaced.is_empty() && exists_feasible_assignment(&pods, &app, &cluster) {
            // expected first-fit behavior on rare instances; count, never hide
            greedy_gaps += 1;
        }
    }
    assert!(
        greedy_gaps <= 15,
        "greedy gap rate unexpectedly high: {greedy_gaps}/150"
    );
}

#[test]
fn placer_double_joystick_demand_is_truly_infeasible() {
    // two single-container pods each demanding one joystick against a
    // cluster offering exactly one: the second stays unplaced, naming the
    // resource, and brute force confirms no assignment could have worked
    let app = load_app_spec(
        r#"{
            "name": "double-joystick",
            "ros_nodes": [
                {"name": "a", "container": "c1", "hardware": {"squat.ai/joystick": 1}},
                {"name": "b", "container": "c2", "hardware": {"squat.ai/joystick": 1}}
            ],
            "topics": [],
            "containers": [
                {"name": "c1", "image": "i", "cpu_request": 1, "memory_request": 1, "is_ros": true},
                {"name": "c2", "image": "i", "cpu_request": 1, "memory_request": 1, "is_ros": true}
            ],
            "pod_grouping": {"c1": "p1", "c2": "p2"}
        }"#,
    )
    .unwrap();
    let (_, cluster) = teleop();
    let pods = derive_pods(&app);
    let placement = plan_placement(&pods, &app, &cluster);
    assert_eq!(placement.assignments.len(), 1);
    assert_eq!(placement.unplaced.len(), 1);
    assert!(placement.unplaced[0].reason.contains("squat.ai/joystick"));
    assert!(!exists_feasible_assignment(&pods, &app, &cluster));
}
