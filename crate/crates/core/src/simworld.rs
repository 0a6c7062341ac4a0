//! Deterministic fixed-timestep 2D world.
//!
//! Worlds are static: straight walls, optional circular posts, coloured
//! markers visible to the camera, and one completion target (a goal region or
//! a block). The outer `WORLD` rectangle is always enclosed by walls.
//!
//! World file directives (meters and degrees, `#` comments):
//!
//! ```text
//! WORLD w h
//! START x y theta_deg
//! JITTER dx dy dtheta_deg      # optional start-pose variation per scenario
//! WALL x1 y1 x2 y2
//! POST x y r                   # circular obstacle
//! MARKER x y r color
//! BLOCK x y r color
//! GOAL x y r
//! ```

use std::f64::consts::PI;

use rand::Rng;
use thiserror::Error;

use crate::platform::{PlatformProfile, SpeedCommand};
use crate::seed;

/// Simulated seconds per control tick.
pub const TICK_SECONDS: f64 = 0.1;
/// Run cutoff, simulated seconds.
pub const TIME_LIMIT_SECONDS: f64 = 900.0;
/// Run cutoff in ticks.
pub const TIME_LIMIT_TICKS: u64 = 9000;

/// Colour tracked when the world has no block.
pub const DEFAULT_TARGET_COLOR: &str = "blue";

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, o: Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self {
            a: Point::new(x1, y1),
            b: Point::new(x2, y2),
        }
    }

    /// Distance from `p` to the closest point of the segment.
    pub fn distance_to(&self, p: Point) -> f64 {
        let (dx, dy) = (self.b.x - self.a.x, self.b.y - self.a.y);
        let len2 = dx * dx + dy * dy;
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((p.x - self.a.x) * dx + (p.y - self.a.y) * dy) / len2).clamp(0.0, 1.0)
        };
        p.dist(Point::new(self.a.x + t * dx, self.a.y + t * dy))
    }

    /// Ray parameter of the first intersection, if any.
    fn ray_hit(&self, o: Point, dir: (f64, f64)) -> Option<f64> {
        let (ex, ey) = (self.b.x - self.a.x, self.b.y - self.a.y);
        let denom = dir.0 * ey - dir.1 * ex;
        if denom.abs() < 1e-15 {
            return None;
        }
        let (wx, wy) = (self.a.x - o.x, self.a.y - o.y);
        let t = (wx * ey - wy * ex) / denom;
        let u = (wx * dir.1 - wy * dir.0) / denom;
        (t >= 0.0 && (0.0..=1.0).contains(&u)).then_some(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    fn ray_hit(&self, o: Point, dir: (f64, f64)) -> Option<f64> {
        let (fx, fy) = (o.x - self.center.x, o.y - self.center.y);
        let b = fx * dir.0 + fy * dir.1;
        let c = fx * fx + fy * fy - self.radius * self.radius;
        if c <= 0.0 {
            return Some(0.0);
        }
        let disc = b * b - c;
        if disc < 0.0 {
            return None;
        }
        let t = -b - disc.sqrt();
        (t >= 0.0).then_some(t)
    }
}

/// A coloured, camera-visible disc. Markers do not block motion or sonar.
#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub center: Point,
    pub radius: f64,
    pub color: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Heading, radians, counter-clockwise from +x.
    pub theta: f64,
}

impl Pose {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub width: f64,
    pub height: f64,
    /// Declared walls followed by the four boundary walls.
    pub walls: Vec<Segment>,
    pub posts: Vec<Circle>,
    pub markers: Vec<Marker>,
    pub goal: Option<Circle>,
    pub block: Option<Marker>,
    pub start: Pose,
    /// Half-widths of the uniform start-pose variation: (dx, dy, dtheta rad).
    pub start_jitter: Option<(f64, f64, f64)>,
}

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: geometry outside the world rectangle")]
    OutOfBounds { line: usize },
    #[error("missing `{0}` directive")]
    Missing(&'static str),
    #[error("world declares both GOAL and BLOCK")]
    TwoTargets,
    #[error("world has neither GOAL nor BLOCK")]
    NoCompletion,
}

/// Robot pose and run bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub pose: Pose,
    pub ticks: u64,
    /// `ticks × Δt`, seconds.
    pub elapsed: f64,
    pub collisions: u32,
    pub in_contact: bool,
}

impl RobotState {
    pub fn at(pose: Pose) -> Self {
        Self {
            pose,
            ticks: 0,
            elapsed: 0.0,
            collisions: 0,
            in_contact: false,
        }
    }
}

/// Wraps an angle into (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

impl World {
    /// An empty `width × height` room with the start pose at its centre.
    pub fn empty(width: f64, height: f64) -> Self {
        let mut w = Self {
            width,
            height,
            walls: Vec::new(),
            posts: Vec::new(),
            markers: Vec::new(),
            goal: None,
            block: None,
            start: Pose {
                x: width / 2.0,
                y: height / 2.0,
                theta: 0.0,
            },
            start_jitter: None,
        };
        w.add_boundary();
        w
    }

    fn add_boundary(&mut self) {
        let (w, h) = (self.width, self.height);
        self.walls.extend([
            Segment::new(0.0, 0.0, w, 0.0),
            Segment::new(w, 0.0, w, h),
            Segment::new(w, h, 0.0, h),
            Segment::new(0.0, h, 0.0, 0.0),
        ]);
    }

    pub fn parse(text: &str) -> Result<Self, WorldError> {
        let mut size = None;
        let mut start = None;
        let mut jitter = None;
        let mut walls = Vec::new();
        let mut posts = Vec::new();
        let mut markers = Vec::new();
        let mut goal = None;
        let mut block = None;
        let mut checks: Vec<(usize, Vec<Point>)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            let directive = toks.next().unwrap_or_default();
            let args: Vec<&str> = toks.collect();
            let syntax = |reason: String| WorldError::Syntax {
                line: line_no,
                reason,
            };
            let arity = match directive {
                "WORLD" => 2,
                "START" | "JITTER" | "POST" | "GOAL" => 3,
                "WALL" | "MARKER" | "BLOCK" => 4,
                other => return Err(syntax(format!("unknown directive `{other}`"))),
            };
            if args.len() != arity {
                return Err(syntax(format!("{directive} takes {arity} arguments, found {}", args.len())));
            }
            let numeric = if matches!(directive, "MARKER" | "BLOCK") { 3 } else { arity };
            let nums = args[..numeric]
                .iter()
                .map(|a| {
                    a.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| syntax(format!("`{a}` is not a number")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let positive = |v: f64| {
                if v > 0.0 {
                    Ok(v)
                } else {
                    Err(syntax(format!("{directive} needs a positive size")))
                }
            };
            match directive {
                "WORLD" => size = Some((positive(nums[0])?, positive(nums[1])?)),
                "START" => {
                    start = Some(Pose {
                        x: nums[0],
                        y: nums[1],
                        theta: wrap_angle(nums[2].to_radians()),
                    });
                    checks.push((line_no, vec![Point::new(nums[0], nums[1])]));
                }
                "JITTER" => jitter = Some((nums[0].abs(), nums[1].abs(), nums[2].abs().to_radians())),
                "WALL" => {
                    let s = Segment::new(nums[0], nums[1], nums[2], nums[3]);
                    checks.push((line_no, vec![s.a, s.b]));
                    walls.push(s);
                }
                "POST" | "GOAL" => {
                    let c = Circle {
                        center: Point::new(nums[0], nums[1]),
                        radius: positive(nums[2])?,
                    };
                    checks.push((line_no, vec![c.center]));
                    if directive == "POST" {
                        posts.push(c);
                    } else {
                        goal = Some(c);
                    }
                }
                _ => {
                    let color = args[3];
                    if !color.chars().all(|ch| ch.is_ascii_lowercase() || ch.is_ascii_digit() || ch == '_') {
                        return Err(syntax(format!("colour `{color}` must be a lowercase identifier")));
                    }
                    let m = Marker {
                        center: Point::new(nums[0], nums[1]),
                        radius: positive(nums[2])?,
                        color: color.to_string(),
                    };
                    checks.push((line_no, vec![m.center]));
                    if directive == "MARKER" {
                        markers.push(m);
                    } else {
                        block = Some(m);
                    }
                }
            }
        }

        let (width, height) = size.ok_or(WorldError::Missing("WORLD"))?;
        let start = start.ok_or(WorldError::Missing("START"))?;
        for (line, pts) in checks {
            if pts
                .iter()
                .any(|p| p.x < 0.0 || p.y < 0.0 || p.x > width || p.y > height)
            {
                return Err(WorldError::OutOfBounds { line });
            }
        }
        if goal.is_some() && block.is_some() {
            return Err(WorldError::TwoTargets);
        }
        let mut world = Self {
            width,
            height,
            walls,
            posts,
            markers,
            goal,
            block,
            start,
            start_jitter: jitter,
        };
        world.add_boundary();
        Ok(world)
    }

    /// Colour the camera tracks: the block's colour, else [`DEFAULT_TARGET_COLOR`].
    pub fn target_color(&self) -> &str {
        self.block
            .as_ref()
            .map_or(DEFAULT_TARGET_COLOR, |b| b.color.as_str())
    }

    /// Signed gap between a body circle at `p` and the nearest obstacle.
    pub fn clearance(&self, p: Point, body_radius: f64) -> f64 {
        let walls = self.walls.iter().map(|w| w.distance_to(p));
        let posts = self.posts.iter().map(|c| c.center.dist(p) - c.radius);
        walls.chain(posts).fold(f64::INFINITY, f64::min) - body_radius
    }

    /// Start pose for a scenario seed. Without `JITTER` this is `start`.
    pub fn scenario_start(&self, scenario_seed: u64, body_radius: f64) -> Pose {
        let Some((dx, dy, dth)) = self.start_jitter else {
            return self.start;
        };
        let mut rng = seed::rng(seed::derive(scenario_seed, 0x5747));
        for _ in 0..64 {
            let pose = Pose {
                x: self.start.x + rng.gen_range(-1.0..=1.0) * dx,
                y: self.start.y + rng.gen_range(-1.0..=1.0) * dy,
                theta: wrap_angle(self.start.theta + rng.gen_range(-1.0..=1.0) * dth),
            };
            if self.clearance(pose.position(), body_radius) >= 0.0 {
                return pose;
            }
        }
        self.start
    }
}

/// Pose after following the unicycle arc for `fraction` of the tick.
fn arc_point(p: Pose, cmd: SpeedCommand, dt: f64, fraction: f64) -> Point {
    let tau = dt * fraction;
    if cmd.omega.abs() < 1e-9 {
        Point::new(p.x + cmd.v * tau * p.theta.cos(), p.y + cmd.v * tau * p.theta.sin())
    } else {
        let r = cmd.v / cmd.omega;
        let th = p.theta + cmd.omega * tau;
        Point::new(p.x + r * (th.sin() - p.theta.sin()), p.y - r * (th.cos() - p.theta.cos()))
    }
}

/// Advances the robot by one tick of exact unicycle motion.
///
/// If the body would penetrate a wall or post, the position stops at contact
/// while the heading still completes its rotation. A collision is counted
/// when contact begins; it re-arms after a contact-free tick.
pub fn step(world: &World, state: &RobotState, cmd: SpeedCommand, profile: &PlatformProfile, dt: f64) -> RobotState {
    debug_assert!(dt > 0.0);
    let body = profile.body_radius;
    let p0 = state.pose;
    // Starting inside an obstacle is tolerated as long as motion does not go deeper.
    let floor = world.clearance(p0.position(), body).min(0.0) - 1e-12;
    let blocked = |s: f64| world.clearance(arc_point(p0, cmd, dt, s), body) < floor;

    let travel = cmd.v.abs() * dt;
    let samples = ((travel / (body * 0.5)).ceil() as usize).max(1);
    let mut reached = 1.0;
    let mut hit = false;
    let mut prev = 0.0;
    for k in 1..=samples {
        let s = k as f64 / samples as f64;
        if blocked(s) {
            let (mut lo, mut hi) = (prev, s);
            for _ in 0..48 {
                let mid = 0.5 * (lo + hi);
                if blocked(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            reached = lo;
            hit = true;
            break;
        }
        prev = s;
    }
    let pos = arc_point(p0, cmd, dt, reached);
    let ticks = state.ticks + 1;
    RobotState {
        pose: Pose {
            x: pos.x,
            y: pos.y,
            theta: wrap_angle(p0.theta + cmd.omega * dt),
        },
        ticks,
        elapsed: ticks as f64 * dt,
        collisions: state.collisions + u32::from(hit && !state.in_contact),
        in_contact: hit,
    }
}

/// Distance along a ray (absolute `bearing`) to the nearest wall or post,
/// clamped to `max_range`.
pub fn cast_ray(world: &World, origin: Point, bearing: f64, max_range: f64) -> f64 {
    let dir = (bearing.cos(), bearing.sin());
    let walls = world.walls.iter().filter_map(|w| w.ray_hit(origin, dir));
    let posts = world.posts.iter().filter_map(|c| c.ray_hit(origin, dir));
    walls.chain(posts).fold(max_range, f64::min)
}

/// Bearing (robot frame) and angular width of a camera blob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    pub bearing: f64,
    pub angular_width: f64,
}

/// The widest unoccluded blob of `color` inside the camera field of view.
pub fn visible_blob(world: &World, state: &RobotState, profile: &PlatformProfile, color: &str) -> Option<Blob> {
    let eye = state.pose.position();
    let half_fov = profile.camera_fov / 2.0;
    let mut best: Option<Blob> = None;
    for m in world.markers.iter().chain(world.block.iter()) {
        if m.color != color {
            continue;
        }
        let d = eye.dist(m.center);
        let absolute = (m.center.y - eye.y).atan2(m.center.x - eye.x);
        let bearing = wrap_angle(absolute - state.pose.theta);
        if bearing.abs() > half_fov {
            continue;
        }
        if d > 0.0 && cast_ray(world, eye, absolute, d) < d {
            continue;
        }
        let angular_width = 2.0 * (m.radius / d).min(1.0).asin();
        if best.is_none_or(|b| angular_width > b.angular_width) {
            best = Some(Blob {
                bearing,
                angular_width,
            });
        }
    }
    best
}

/// Whether the robot body has reached the goal region or block.
pub fn task_complete(world: &World, state: &RobotState, profile: &PlatformProfile) -> Result<bool, WorldError> {
    let target = match (&world.goal, &world.block) {
        (Some(g), _) => *g,
        (None, Some(b)) => Circle {
            center: b.center,
            radius: b.radius,
        },
        (None, None) => return Err(WorldError::NoCompletion),
    };
    Ok(state.pose.position().dist(target.center) <= target.radius + profile.body_radius)
}
