//! Skeleton-based character animation toolkit.
//!
//! The crate is organised as a pipeline:
//!
//! * [`rotation`], [`skeleton`] and [`kinematics`] hold the data model: joint
//!   hierarchies, quaternion/Euler rotation algebra and forward kinematics.
//! * [`formats`] reads and writes BVH, ASF/AMC and the canonical JSON clip
//!   document, converting everything into [`MotionClip`]s.
//! * [`dataset`] describes datasets on disk, discovers and loads their clips,
//!   computes normalization statistics and cuts fixed-length training windows.
//! * [`models`] fits, evaluates, persists and samples a label-conditioned
//!   linear autoregressive motion model.
//! * [`protocol`] streams poses to external 3D software over a newline-delimited
//!   JSON protocol, with a reference receiving server.

pub mod dataset;
pub mod error;
pub mod formats;
pub mod kinematics;
pub mod models;
pub mod protocol;
pub mod rng;
pub mod rotation;
pub mod skeleton;

pub use error::{Error, ParseError, Result};
pub use kinematics::{forward_kinematics, JointTransform};
pub use rotation::{euler_to_quat, quat_mul, quat_to_euler, Axis, Rotation, RotationOrder, Vec3};
pub use skeleton::{Channel, Joint, MotionClip, Pose, Skeleton};
