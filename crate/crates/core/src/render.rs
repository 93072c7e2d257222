//! Deterministic manifest rendering: pod specs bound to the placement,
//! exposure routes per the exposure decision, and a values summary that
//! makes the bundle a repeatable, templatable unit.
//!
//! Output is plain YAML text built by hand: two-space indent, LF endings,
//! fixed key order, byte-stable across runs. kubectl-style block sequences
//! (the dash sits at the parent indent).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{derive_pods, AppSpec, ClusterSpec, PodPlan, TrafficClass};
use crate::placer::Placement;
use crate::rules::{decide_exposure, ExposureDecision, ExposureStrategy};

/// One rendered file, addressed relative to the bundle root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub path: String,
    pub content: String,
}

/// A complete rendered deployment: files ordered by path plus a digest of
/// the inputs for reproducibility stamping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestBundle {
    pub files: Vec<ManifestFile>,
    pub values_digest: String,
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("pod not placed: {0}")]
    PodNotPlaced(String),
}

/// Renders one pod manifest pinned to its assigned node. Extended resources
/// appear as literal keys under the hosting container's resources.limits;
/// containers without hardware demands get no limits block.
pub fn render_pod_manifest(
    pod: &PodPlan,
    placement: &Placement,
    app: &AppSpec,
) -> Result<String, RenderError> {
    let node = placement
        .node_of(&pod.name)
        .ok_or_else(|| RenderError::PodNotPlaced(pod.name.clone()))?;
    let mut out = String::new();
    out.push_str("apiVersion: v1\n");
    out.push_str("kind: Pod\n");
    out.push_str("metadata:\n");
    out.push_str(&format!("  name: {}\n", pod.name));
    out.push_str("spec:\n");
    out.push_str(&format!("  nodeName: {node}\n"));
    out.push_str("  containers:\n");
    for container_name in &pod.containers {
        let container = app.container(container_name).expect("checked app");
        out.push_str(&format!("  - name: {}\n", container.name));
        out.push_str(&format!("    image: {}\n", container.image));
        out.push_str("    resources:\n");
        out.push_str("      requests:\n");
        out.push_str(&format!("        cpu: {}m\n", container.cpu_request));
        out.push_str(&format!("        memory: {}\n", container.memory_request));
        let hardware = app.container_hardware(container_name);
        if !hardware.is_empty() {
            out.push_str("      limits:\n");
            for (resource, quantity) in &hardware {
                out.push_str(&format!("        {resource}: {quantity}\n"));
            }
        }
    }
    Ok(out)
}

struct ExposureManifest {
    directory: &'static str,
    file_stem: String,
    content: String,
}

fn nodeport_service(pod: &str, name: &str, decision: &ExposureDecision) -> String {
    let port = decision.port.port;
    let protocol = decision.port.protocol;
    let nodeport = decision.assigned_nodeport.expect("NodePort carries a port");
    format!(
        "apiVersion: v1
kind: Service
metadata:
  name: {name}
spec:
  type: NodePort
  selector:
    app: {pod}
  ports:
  - protocol: {protocol}
    port: {port}
    targetPort: {port}
    nodePort: {nodeport}
"
    )
}

fn ingress_tcp_route(pod: &str, name: &str, decision: &ExposureDecision) -> String {
    let port = decision.port.port;
    format!(
        "apiVersion: traefik.io/v1alpha1
kind: IngressRouteTCP
metadata:
  name: {name}
spec:
  entryPoints:
  - port-{port}
  routes:
  - match: HostSNI(`*`)
    services:
    - name: {pod}
      port: {port}
"
    )
}

/// Walks every non-RTPS exposed port in declaration order, resolves it via
/// [`decide_exposure`] with a shared taken-port set, and renders the
/// matching manifest. RTPS ports produce nothing.
fn exposure_manifests(
    app: &AppSpec,
    cluster: &ClusterSpec,
) -> Vec<(ExposureManifest, ExposureDecision)> {
    let mut taken = BTreeSet::new();
    let mut out = Vec::new();
    for container in &app.containers {
        for port in &container.exposed_ports {
            if port.traffic_class == TrafficClass::Rtps {
                continue;
            }
            let decision = decide_exposure(port, cluster, &taken);
            let pod = app.pod_grouping[&container.name].clone();
            let file_stem = format!("{}-{}", container.name, port.port);
            let (directory, content) = match decision.strategy {
                ExposureStrategy::NodePort => {
                    taken.insert(decision.assigned_nodeport.expect("NodePort carries a port"));
                    ("services", nodeport_service(&pod, &file_stem, &decision))
                }
                ExposureStrategy::IngressTcpRoute => {
                    ("routes", ingress_tcp_route(&pod, &file_stem, &decision))
                }
                ExposureStrategy::Forbidden => unreachable!("non-RTPS ports are never forbidden"),
            };
            out.push((
                ExposureManifest {
                    directory,
                    file_stem,
                    content,
                },
                decision,
            ));
        }
    }
    out
}

/// Renders the exposure manifests (NodePort Services and ingress TCP
/// routes) for every non-RTPS exposed port. RTPS ports yield no manifest.
pub fn render_exposure_manifests(app: &AppSpec, cluster: &ClusterSpec) -> Vec<String> {
    exposure_manifests(app, cluster)
        .into_iter()
        .map(|(manifest, _)| manifest.content)
        .collect()
}

fn render_values(
    app: &AppSpec,
    placement: &Placement,
    exposures: &[(ExposureManifest, ExposureDecision)],
    digest: &str,
) -> String {
    let mut out = String::new();
    out.push_str(&format!("app: {}\n", app.name));
    out.push_str(&format!("inputsDigest: {digest}\n"));

    let mut containers: Vec<_> = app.containers.iter().collect();
    containers.sort_by(|a, b| a.name.cmp(&b.name));

    if containers.is_empty() {
        out.push_str("images: {}\n");
        out.push_str("resources: {}\n");
    } else {
        out.push_str("images:\n");
        for container in &containers {
            out.push_str(&format!("  {}: {}\n", container.name, container.image));
        }
        out.push_str("resources:\n");
        for container in &containers {
            out.push_str(&format!("  {}:\n", container.name));
            out.push_str(&format!("    cpu: {}m\n", container.cpu_request));
            out.push_str(&format!("    memory: {}\n", container.memory_request));
        }
    }

    if exposures.is_empty() {
        out.push_str("exposure: {}\n");
    } else {
        out.push_str("exposure:\n");
        for (manifest, decision) in exposures {
            out.push_str(&format!("  {}:\n", manifest.file_stem));
            out.push_str(&format!("    port: {}\n", decision.port.port));
            out.push_str(&format!("    protocol: {}\n", decision.port.protocol));
            out.push_str(&format!("    strategy: {}\n", decision.strategy));
            match decision.strategy {
                ExposureStrategy::NodePort => out.push_str(&format!(
                    "    nodePort: {}\n",
                    decision.assigned_nodeport.expect("NodePort carries a port")
                )),
                ExposureStrategy::IngressTcpRoute => {
                    out.push_str(&format!("    entryPoint: port-{}\n", decision.port.port))
                }
                ExposureStrategy::Forbidden => unreachable!("non-RTPS ports are never forbidden"),
            }
        }
    }

    if placement.assignments.is_empty() {
        out.push_str("placement: {}\n");
    } else {
        out.push_str("placement:\n");
        for (pod, node) in &placement.assignments {
            out.push_str(&format!("  {pod}: {node}\n"));
        }
    }
    out
}

fn inputs_digest(app: &AppSpec, cluster: &ClusterSpec, placement: &Placement) -> String {
    let serialized = serde_json::to_vec(&(app, cluster, placement)).expect("model types serialize");
    let mut hasher = Sha256::new();
    hasher.update(&serialized);
    hex::encode(hasher.finalize())
}

/// Renders the whole bundle: one pod manifest per pod, one manifest per
/// exposed non-RTPS port, plus `values.yaml` echoing the tunables. File
/// order is by path; re-rendering identical inputs is byte-identical.
pub fn render_all(
    app: &AppSpec,
    cluster: &ClusterSpec,
    placement: &Placement,
) -> Result<ManifestBundle, RenderError> {
    let digest = inputs_digest(app, cluster, placement);
    let mut files = Vec::new();
    for pod in derive_pods(app) {
        files.push(ManifestFile {
            path: format!("pods/{}.yaml", pod.name),
            content: render_pod_manifest(&pod, placement, app)?,
        });
    }
    let exposures = exposure_manifests(app, cluster);
    for (manifest, _) in &exposures {
        files.push(ManifestFile {
            path: format!("{}/{}.yaml", manifest.directory, manifest.file_stem),
            content: manifest.content.clone(),
        });
    }
    files.push(ManifestFile {
        path: "values.yaml".to_string(),
        content: render_values(app, placement, &exposures, &digest),
    });
    files.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(ManifestBundle {
        files,
        values_digest: digest,
    })
}
