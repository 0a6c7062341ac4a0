//! Robot platform profiles and wheel-speed to unicycle-velocity conversion.

use std::f64::consts::PI;

use thiserror::Error;

/// Wheel rotation per epuck speed unit, radians.
pub const PSI: f64 = 0.00683;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensorKind {
    Infrared,
    Sonar,
}

/// Which extreme of the raw readings marks the closest obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProximityComparator {
    MaxIsClosest,
    MinIsClosest,
}

/// Orientation class of a sensor relative to the robot body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Right,
    Rear,
    Left,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlatformProfile {
    pub name: String,
    /// Wheel radius, meters.
    pub wheel_radius: f64,
    /// Axle length, meters.
    pub axle_length: f64,
    /// Bounding-circle radius used for collisions and sensor origins, meters.
    pub body_radius: f64,
    pub sensor_kind: SensorKind,
    /// Sensor bearings in radians, robot frame, positive to the left.
    pub sensor_bearings: Vec<f64>,
    /// Sensor range beyond the body edge, meters.
    pub sensor_range: f64,
    /// No-obstacle / obstacle boundary, sensor units.
    pub tau1: f64,
    /// Obstacle / collision boundary, sensor units.
    pub tau2: f64,
    pub proximity_comparator: ProximityComparator,
    pub orientation_map: Vec<Side>,
    /// Full horizontal camera field of view, radians.
    pub camera_fov: f64,
    /// Angular correction applied when replaying reference-platform turns.
    pub zeta: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{value}` is not a number")]
    NotANumber { line: usize, value: String },
    #[error("invalid profile: {0}")]
    Invalid(String),
}

fn bearings_deg(deg: &[f64]) -> Vec<f64> {
    deg.iter().map(|d| d.to_radians()).collect()
}

impl PlatformProfile {
    /// The small infrared reference robot behaviours are evolved on.
    pub fn epuck() -> Self {
        use Side::*;
        Self {
            name: "epuck".into(),
            wheel_radius: 0.0205,
            axle_length: 0.052,
            body_radius: 0.037,
            sensor_kind: SensorKind::Infrared,
            sensor_bearings: bearings_deg(&[-17.0, -49.0, -90.0, -150.0, 150.0, 90.0, 49.0, 17.0]),
            sensor_range: 0.06,
            tau1: 250.0,
            tau2: 2400.0,
            proximity_comparator: ProximityComparator::MaxIsClosest,
            orientation_map: vec![Right, Right, Right, Rear, Rear, Left, Left, Left],
            camera_fov: PI / 3.0,
            zeta: 1.0,
        }
    }

    /// The large sonar robot evolved behaviours are transferred to.
    pub fn pioneer() -> Self {
        use Side::*;
        let mut orientation_map = vec![Left; 16];
        orientation_map[4..=9].fill(Right);
        orientation_map[10..=13].fill(Rear);
        Self {
            name: "pioneer".into(),
            wheel_radius: 0.095,
            axle_length: 0.33,
            body_radius: 0.22,
            sensor_kind: SensorKind::Sonar,
            sensor_bearings: bearings_deg(&[
                90.0, 50.0, 30.0, 10.0, -10.0, -30.0, -50.0, -90.0, //
                -90.0, -130.0, -150.0, -170.0, 170.0, 150.0, 130.0, 90.0,
            ]),
            sensor_range: 5.0,
            tau1: 0.15,
            tau2: 0.04,
            proximity_comparator: ProximityComparator::MinIsClosest,
            orientation_map,
            camera_fov: PI / 3.0,
            zeta: 1.575,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "epuck" => Some(Self::epuck()),
            "pioneer" => Some(Self::pioneer()),
            _ => None,
        }
    }

    pub fn sensor_count(&self) -> usize {
        self.sensor_bearings.len()
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let bad = |m: &str| Err(ProfileError::Invalid(m.into()));
        if self.sensor_bearings.len() != self.orientation_map.len() {
            return bad("sensor_bearings and orientation_map lengths differ");
        }
        if self.sensor_bearings.is_empty() {
            return bad("profile needs at least one sensor");
        }
        for v in [self.wheel_radius, self.axle_length, self.body_radius, self.sensor_range, self.camera_fov, self.zeta] {
            if !(v.is_finite() && v > 0.0) {
                return bad("geometry values must be positive and finite");
            }
        }
        match (self.sensor_kind, self.proximity_comparator) {
            (SensorKind::Infrared, ProximityComparator::MaxIsClosest) if self.tau1 < self.tau2 => Ok(()),
            (SensorKind::Sonar, ProximityComparator::MinIsClosest) if self.tau2 < self.tau1 => Ok(()),
            _ => bad("thresholds and comparator disagree with sensor kind"),
        }
    }

    /// Applies `key = value` overrides to numeric fields.
    ///
    /// Recognised keys: `wheel_radius`, `axle_length`, `body_radius`,
    /// `sensor_range`, `tau1`, `tau2`, `camera_fov_deg`, `zeta`.
    pub fn with_overrides(mut self, text: &str) -> Result<Self, ProfileError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let line_no = idx + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or(ProfileError::Syntax { line: line_no })?;
            let (key, value) = (key.trim(), value.trim());
            let v: f64 = value.parse().map_err(|_| ProfileError::NotANumber {
                line: line_no,
                value: value.into(),
            })?;
            match key {
                "wheel_radius" => self.wheel_radius = v,
                "axle_length" => self.axle_length = v,
                "body_radius" => self.body_radius = v,
                "sensor_range" => self.sensor_range = v,
                "tau1" => self.tau1 = v,
                "tau2" => self.tau2 = v,
                "camera_fov_deg" => self.camera_fov = v.to_radians(),
                "zeta" => self.zeta = v,
                _ => {
                    return Err(ProfileError::UnknownKey {
                        line: line_no,
                        key: key.into(),
                    })
                }
            }
        }
        self.validate()?;
        Ok(self)
    }
}

/// The (epuck, pioneer) presets.
pub fn builtin_profiles() -> (PlatformProfile, PlatformProfile) {
    (PlatformProfile::epuck(), PlatformProfile::pioneer())
}

/// Unicycle velocity command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedCommand {
    /// Linear velocity, m/s.
    pub v: f64,
    /// Angular velocity, rad/s, counter-clockwise positive.
    pub omega: f64,
}

pub fn psi_to_radians(speed: f64) -> f64 {
    speed * PSI
}

/// Converts reference-platform wheel speeds (ψ/s) into a velocity command for
/// `target`. Linear speed scales with the target wheel; turning rate keeps the
/// reference platform's geometry, corrected by the target's `zeta`.
pub fn wheel_speeds_to_command(
    left: f64,
    right: f64,
    target: &PlatformProfile,
    reference: &PlatformProfile,
) -> SpeedCommand {
    SpeedCommand {
        v: PSI * target.wheel_radius * (right + left) / 2.0,
        omega: target.zeta * PSI * reference.wheel_radius * (right - left) / reference.axle_length,
    }
}
