//! Evolved behaviour genomes and immune-network behaviour arbitration for
//! simulated differential-drive robots.
//!
//! Behaviour sets are evolved offline on a small infrared robot ([`ltl_evolve`]),
//! written to a plain text genome ([`genome`]), and then arbitrated online by an
//! idiotypic network ([`stl_ais`]) on a possibly different platform
//! ([`platform`]). [`simworld`] and [`perception`] provide the deterministic 2D
//! world and its sensors; [`harness`] runs the comparison batteries.

pub mod genome;
pub mod harness;
pub mod ltl_evolve;
pub mod perception;
pub mod platform;
pub mod seed;
pub mod simworld;
pub mod stats;
pub mod stl_ais;

pub use genome::{BehaviourGene, BehaviourKind, GeneSet, Genome, GenomeError, TurnDirection};
pub use perception::{Antigen, BlobZone, SensorFrame};
pub use platform::{PlatformProfile, SpeedCommand};
pub use simworld::{Pose, RobotState, World};
pub use stl_ais::{AisParams, AisState, SelectionMode};

/// Number of antigen classes, and so behaviours per gene set.
pub const ANTIGEN_COUNT: usize = 8;
