//! Robot and obstacle geometry.

pub mod arm;
pub mod geometry;

pub use arm::{joint_distance, ArmModel, IkParams, JointConfig};
pub use geometry::{capsules_collide, segment_segment_distance, Capsule2, Point2, Segment2};
