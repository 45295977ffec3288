//! tagforge: seeded synthesis of auto-labeled person images, plus the
//! machinery to match rendering-option distributions to a target image set.
//!
//! The crate splits into:
//!
//! - [`scene`]: the identity / rendering-option data model
//! - [`bvh`]: motion-capture file parsing for pose variety
//! - [`renderer`]: procedural humanoid meshes and the software rasterizer
//! - [`imageproc`]: background compositing, color bias, gamma, resolution
//! - [`estimation`]: per-option value estimators trained on labeled renders
//! - [`distribution`]: empirical option distributions, Wasserstein-1
//!   diagnostics, and Monte Carlo resampling
//! - [`pipeline`] (feature `io`): dataset generation and manifests
//!
//! All randomness flows from explicit seeds; generation is reproducible
//! byte for byte across runs and worker counts.

pub mod bvh;
pub mod distribution;
pub mod estimation;
pub mod imageproc;
pub mod math;
#[cfg(feature = "io")]
pub mod pipeline;
pub mod renderer;
pub mod rng;
pub mod scene;

pub use renderer::{build_mesh, render, ImageBuffer, Mesh, RenderError};
pub use scene::{
    builtin_pose, derive_person_spec, BackgroundRef, BuiltinPose, Joint, OptionKey, PersonSpec,
    Pose, PoseRef, RenderOptions,
};
