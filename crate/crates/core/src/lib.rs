//! 3D instance segmentation by merging geometric superpoints, labeled from a per-scene vocabulary.
//!
//! Superpoints are grouped into instances by spectral clustering over an
//! affinity built from posed, labeled 2D masks; labels come from the scene
//! vocabulary those masks carry.

pub mod pcio;
pub mod neighbors;
pub mod superpoint;
pub mod project;
pub mod affinity;
pub mod spectral;
pub mod semantics;
pub mod evalkit;
pub mod output;
pub mod synth;
pub mod config;
pub mod pipeline;
