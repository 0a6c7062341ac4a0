//! Sensor simulation and antigen classification.

use crate::platform::{PlatformProfile, ProximityComparator, Side, SensorKind};
use crate::simworld::{cast_ray, visible_blob, Blob, RobotState, World};
use crate::ANTIGEN_COUNT;

/// Full-scale infrared reading at zero distance.
pub const IR_MAX: f64 = 4095.0;
/// Decay length of the infrared response, meters.
pub const IR_DECAY: f64 = 0.02;
/// Half-width of the centre blob zone, degrees.
pub const CENTRE_ZONE_DEG: f64 = 10.0;

/// Environmental situation class, codes 1-8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Antigen {
    TargetUnseen = 1,
    TargetSeen = 2,
    ObstacleRight = 3,
    ObstacleRear = 4,
    ObstacleLeft = 5,
    CollisionRight = 6,
    CollisionRear = 7,
    CollisionLeft = 8,
}

impl Antigen {
    pub const ALL: [Antigen; ANTIGEN_COUNT] = [
        Antigen::TargetUnseen,
        Antigen::TargetSeen,
        Antigen::ObstacleRight,
        Antigen::ObstacleRear,
        Antigen::ObstacleLeft,
        Antigen::CollisionRight,
        Antigen::CollisionRear,
        Antigen::CollisionLeft,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    /// 0-based column index (code − 1).
    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(usize::from(code).checked_sub(1)?).copied()
    }

    pub fn is_obstacle(self) -> bool {
        matches!(self, Antigen::ObstacleRight | Antigen::ObstacleRear | Antigen::ObstacleLeft)
    }

    pub fn is_collision(self) -> bool {
        matches!(self, Antigen::CollisionRight | Antigen::CollisionRear | Antigen::CollisionLeft)
    }

    fn obstacle(side: Side) -> Self {
        match side {
            Side::Right => Antigen::ObstacleRight,
            Side::Rear => Antigen::ObstacleRear,
            Side::Left => Antigen::ObstacleLeft,
        }
    }

    fn collision(side: Side) -> Self {
        match side {
            Side::Right => Antigen::CollisionRight,
            Side::Rear => Antigen::CollisionRear,
            Side::Left => Antigen::CollisionLeft,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame {
    /// Raw readings in sensor units, indexed as the profile's bearings.
    pub readings: Vec<f64>,
    pub blob: Option<Blob>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlobZone {
    Left,
    Centre,
    Right,
}

/// Infrared response for an obstacle `d` meters from the body edge.
pub fn ir_reading(d: f64) -> f64 {
    (IR_MAX * (-d / IR_DECAY).exp()).round()
}

/// Reads every range sensor and the camera.
pub fn sense(world: &World, state: &RobotState, profile: &PlatformProfile) -> SensorFrame {
    let origin = state.pose.position();
    let reach = profile.body_radius + profile.sensor_range;
    let readings = profile
        .sensor_bearings
        .iter()
        .map(|&b| {
            let hit = cast_ray(world, origin, state.pose.theta + b, reach);
            let d = (hit - profile.body_radius).max(0.0);
            match profile.sensor_kind {
                SensorKind::Sonar => d.min(profile.sensor_range),
                SensorKind::Infrared if hit >= reach => 0.0,
                SensorKind::Infrared => ir_reading(d),
            }
        })
        .collect();
    SensorFrame {
        readings,
        blob: visible_blob(world, state, profile, world.target_color()),
    }
}

/// Maps a sensor frame to its antigen: collision beats obstacle beats target.
pub fn classify_antigen(frame: &SensorFrame, profile: &PlatformProfile) -> Antigen {
    let closest = frame.readings.iter().copied().enumerate().reduce(|best, cur| {
        let closer = match profile.proximity_comparator {
            ProximityComparator::MaxIsClosest => cur.1 > best.1,
            ProximityComparator::MinIsClosest => cur.1 < best.1,
        };
        if closer {
            cur
        } else {
            best
        }
    });
    if let Some((idx, value)) = closest {
        let side = profile.orientation_map[idx];
        let (collision, obstacle) = match profile.proximity_comparator {
            ProximityComparator::MaxIsClosest => (value > profile.tau2, value > profile.tau1),
            ProximityComparator::MinIsClosest => (value < profile.tau2, value < profile.tau1),
        };
        if collision {
            return Antigen::collision(side);
        }
        if obstacle {
            return Antigen::obstacle(side);
        }
    }
    if frame.blob.is_some() {
        Antigen::TargetSeen
    } else {
        Antigen::TargetUnseen
    }
}

/// Left/centre/right zone of a blob bearing; the ±10° boundary is centre.
pub fn blob_zone(bearing: f64) -> BlobZone {
    let edge = CENTRE_ZONE_DEG.to_radians();
    if bearing > edge {
        BlobZone::Left
    } else if bearing < -edge {
        BlobZone::Right
    } else {
        BlobZone::Centre
    }
}
