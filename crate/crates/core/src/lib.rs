//! Toolkit for taking a ROS 2 style pub/sub application to a Kubernetes-like
//! cluster spanning device, edge and cloud: validate the deployment against a
//! catalog of networking and grouping rules, place pods under hardware
//! affinity and capacity, simulate multicast discovery and topic traffic over
//! the placement, render the manifest bundle, and analyze container images
//! for dependency-closure slimming.
//!
//! The `roskube` binary wires these modules into the validate / plan /
//! simulate / render / slim workflow; each module is also usable on its own.
//! All values are immutable after construction and all operations are pure
//! functions, so everything here is safe to share across threads.

pub mod model;
pub mod netsim;
pub mod placer;
pub mod render;
pub mod rules;
pub mod slim;
