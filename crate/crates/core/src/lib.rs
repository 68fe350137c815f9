//! Hierarchical bicubic Bezier surfaces over closed two-manifold polygon meshes.
//!
//! The pipeline assigns a planar polygon frame to every face, vertex and edge
//! of the input mesh, assembles one 4x4 Bezier net per face corner from those
//! frames, and evaluates patches that touch an extraordinary vertex by
//! recursive subdivision with a modified de Casteljau kernel table.

#![allow(clippy::needless_range_loop)]

pub mod corpus;
pub mod geom;
pub mod mesh;
pub mod frames;
pub mod kernels;
pub mod patch;
pub mod tessellate;
pub mod analysis;
pub mod pipeline;
pub mod session;
