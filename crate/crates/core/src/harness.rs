//! Idiotypic-versus-greedy run batteries and their statistics.
//!
//! Every run records completion time `t` (capped at the cutoff) and collision
//! count `c`. After a battery, each run gets the combined cost
//! `φ = (t + σ·c) / 2`, where `σ = mean t / mean c` over all runs in the world.
//! Runs cheaper than the world's mean φ are good, the costliest tenth are bad.

use std::fmt::{self, Write as _};

use crate::genome::Genome;
use crate::platform::PlatformProfile;
use crate::seed;
use crate::simworld::{Pose, World, TIME_LIMIT_SECONDS};
use crate::stats::{mean, paired_t_test, welch_t_test, StatsError, TTest};
use crate::stl_ais::{run_genome, AisParams, Episode, EpisodeOptions, SelectionMode};

/// Significance level used when flagging differences.
pub const ALPHA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: usize,
    pub world: String,
    pub mode: SelectionMode,
    pub seed: u64,
    /// Seconds, capped at the cutoff.
    pub t: f64,
    pub c: u32,
    /// Filled by [`score_runs`].
    pub phi: f64,
    pub failed: bool,
}

impl RunRecord {
    pub const CSV_HEADER: &'static str = "run_id,world,mode,seed,t,c,phi,failed";

    pub fn from_episode(run_id: usize, world: &str, mode: SelectionMode, seed: u64, ep: &Episode) -> Self {
        Self {
            run_id,
            world: world.to_string(),
            mode,
            seed,
            t: if ep.completed { ep.t } else { TIME_LIMIT_SECONDS },
            c: ep.collisions,
            phi: 0.0,
            failed: !ep.completed,
        }
    }
}

impl fmt::Display for RunRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{:.1},{},{:.3},{}",
            self.run_id,
            self.world,
            self.mode.as_str(),
            self.seed,
            self.t,
            self.c,
            self.phi,
            self.failed
        )
    }
}

/// Everything a battery needs besides its seeds.
#[derive(Debug, Clone)]
pub struct BatterySetup<'a> {
    pub world: &'a World,
    pub world_id: &'a str,
    pub genome: &'a Genome,
    pub target: &'a PlatformProfile,
    pub reference: &'a PlatformProfile,
    pub params: AisParams,
}

/// Scenario seed of the `k`-th run of `mode`.
pub fn run_seed(base_seed: u64, k: usize, mode: SelectionMode, paired: bool) -> u64 {
    let stream = match (paired, mode) {
        (true, _) => k as u64,
        (false, SelectionMode::Idiotypic) => 2 * k as u64,
        (false, SelectionMode::Greedy) => 2 * k as u64 + 1,
    };
    seed::derive(base_seed, stream)
}

/// Runs `runs_per_mode` idiotypic runs then as many greedy runs.
///
/// Paired batteries give the `k`-th run of each mode the same scenario seed
/// (start pose and random stream); unpaired ones use disjoint seeds.
pub fn run_battery(setup: &BatterySetup<'_>, runs_per_mode: usize, paired: bool, base_seed: u64) -> Vec<RunRecord> {
    let mut records = Vec::with_capacity(2 * runs_per_mode);
    for mode in [SelectionMode::Idiotypic, SelectionMode::Greedy] {
        for k in 0..runs_per_mode {
            let seed = run_seed(base_seed, k, mode, paired);
            let ep = run_genome(
                setup.world,
                setup.genome,
                setup.params,
                mode,
                setup.target,
                setup.reference,
                seed,
                EpisodeOptions::default(),
            );
            records.push(RunRecord::from_episode(records.len(), setup.world_id, mode, seed, &ep));
        }
    }
    records
}

/// Fills `phi` for every record and returns the world's σ.
pub fn score_runs(records: &mut [RunRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let t_bar = records.iter().map(|r| r.t).sum::<f64>() / records.len() as f64;
    let c_bar = records.iter().map(|r| f64::from(r.c)).sum::<f64>() / records.len() as f64;
    let sigma = if c_bar == 0.0 { 0.0 } else { t_bar / c_bar };
    for r in records.iter_mut() {
        r.phi = (r.t + sigma * f64::from(r.c)) / 2.0;
    }
    sigma
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Classification {
    pub good: bool,
    pub bad: bool,
    pub failed: bool,
}

/// Good: φ strictly below the mean. Bad: φ within the costliest 10% (ties included).
pub fn classify(records: &[RunRecord]) -> Vec<Classification> {
    if records.is_empty() {
        return Vec::new();
    }
    let phis: Vec<f64> = records.iter().map(|r| r.phi).collect();
    let mean_phi = mean(&phis);
    let mut sorted = phis.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let worst = (records.len() as f64 * 0.1).ceil().max(1.0) as usize;
    let bad_from = sorted[worst - 1];
    records
        .iter()
        .map(|r| Classification {
            good: r.phi < mean_phi,
            bad: r.phi >= bad_from,
            failed: r.failed,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeSummary {
    pub runs: usize,
    pub mean_t: f64,
    pub mean_c: f64,
    pub mean_phi: f64,
    pub good_pct: f64,
    pub bad_pct: f64,
    pub fail_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub world: String,
    pub paired: bool,
    pub sigma: f64,
    pub idiotypic: ModeSummary,
    pub greedy: ModeSummary,
    /// Idiotypic versus greedy on t, c and φ; `None` when undefined.
    pub test_t: Option<TTest>,
    pub test_c: Option<TTest>,
    pub test_phi: Option<TTest>,
}

fn summarize(records: &[&RunRecord], classes: &[&Classification]) -> ModeSummary {
    let n = records.len();
    if n == 0 {
        return ModeSummary::default();
    }
    let pct = |k: usize| 100.0 * k as f64 / n as f64;
    let avg = |f: &dyn Fn(&RunRecord) -> f64| records.iter().map(|r| f(r)).sum::<f64>() / n as f64;
    ModeSummary {
        runs: n,
        mean_t: avg(&|r| r.t),
        mean_c: avg(&|r| f64::from(r.c)),
        mean_phi: avg(&|r| r.phi),
        good_pct: pct(classes.iter().filter(|c| c.good).count()),
        bad_pct: pct(classes.iter().filter(|c| c.bad).count()),
        fail_pct: pct(classes.iter().filter(|c| c.failed).count()),
    }
}

/// Compares two samples; identical samples give p = 1, undefined tests `None`.
pub fn compare(a: &[f64], b: &[f64], paired: bool) -> Option<TTest> {
    let result = if paired && a.len() == b.len() {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        paired_t_test(&d)
    } else {
        welch_t_test(a, b)
    };
    match result {
        Ok(t) => Some(t),
        Err(StatsError::ZeroVariance) if a == b || (paired && a.iter().zip(b).all(|(x, y)| x == y)) => Some(TTest {
            statistic: 0.0,
            df: (a.len() - 1) as f64,
            p: 1.0,
        }),
        Err(_) => None,
    }
}

/// Builds the per-mode summary for records that already carry φ.
pub fn report(records: &[RunRecord], world: &str, paired: bool) -> ExperimentReport {
    let classes = classify(records);
    let t_bar = records.iter().map(|r| r.t).sum::<f64>() / records.len().max(1) as f64;
    let c_bar = records.iter().map(|r| f64::from(r.c)).sum::<f64>() / records.len().max(1) as f64;
    let sigma = if c_bar == 0.0 { 0.0 } else { t_bar / c_bar };
    let split = |mode| {
        records
            .iter()
            .zip(&classes)
            .filter(|(r, _)| r.mode == mode)
            .unzip::<_, _, Vec<_>, Vec<_>>()
    };
    let (idio_r, idio_c) = split(SelectionMode::Idiotypic);
    let (greedy_r, greedy_c) = split(SelectionMode::Greedy);
    let column = |rs: &[&RunRecord], f: fn(&RunRecord) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<_>>();
    let tests = [|r: &RunRecord| r.t, |r: &RunRecord| f64::from(r.c), |r: &RunRecord| r.phi]
        .map(|f| compare(&column(&idio_r, f), &column(&greedy_r, f), paired));
    ExperimentReport {
        world: world.to_string(),
        paired,
        sigma,
        idiotypic: summarize(&idio_r, &idio_c),
        greedy: summarize(&greedy_r, &greedy_c),
        test_t: tests[0],
        test_c: tests[1],
        test_phi: tests[2],
    }
}

impl ExperimentReport {
    /// Plain-text table: significance, then per-mode t̄, c̄, φ̄, G, B, F.
    pub fn render(&self) -> String {
        let conf = |t: &Option<TTest>| t.map_or("n/a".to_string(), |t| format!("{:.0}", 100.0 * (1.0 - t.p)));
        let p = |t: &Option<TTest>| t.map_or("n/a".to_string(), |t| format!("{:.3e}", t.p));
        let sig = |t: &Option<TTest>| match t {
            Some(t) if t.significant(ALPHA) => "yes",
            Some(_) => "no",
            None => "n/a",
        };
        let mode = |m: &ModeSummary| {
            format!(
                "{:>8.1} {:>6.2} {:>8.1} {:>4.0} {:>4.0} {:>4.0}",
                m.mean_t, m.mean_c, m.mean_phi, m.good_pct, m.bad_pct, m.fail_pct
            )
        };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# world {} | {} idiotypic + {} greedy runs | {} | sigma = {:.3} s/collision",
            self.world,
            self.idiotypic.runs,
            self.greedy.runs,
            if self.paired { "paired" } else { "unpaired" },
            self.sigma
        );
        let _ = writeln!(
            out,
            "{:<12} {:>5} {:>5} {:>5} | {:>8} {:>6} {:>8} {:>4} {:>4} {:>4} | {:>8} {:>6} {:>8} {:>4} {:>4} {:>4}",
            "world", "sig_t", "sig_c", "sig_p", "idio_t", "idio_c", "idio_phi", "G", "B", "F", "grdy_t", "grdy_c", "grdy_phi", "G", "B", "F"
        );
        let _ = writeln!(
            out,
            "{:<12} {:>5} {:>5} {:>5} | {} | {}",
            self.world,
            conf(&self.test_t),
            conf(&self.test_c),
            conf(&self.test_phi),
            mode(&self.idiotypic),
            mode(&self.greedy)
        );
        let _ = writeln!(
            out,
            "# {} two-tailed p: t = {} ({}), c = {} ({}), phi = {} ({}); significant at 99%",
            if self.paired { "paired t-test" } else { "Welch t-test" },
            p(&self.test_t),
            sig(&self.test_t),
            p(&self.test_c),
            sig(&self.test_c),
            p(&self.test_phi),
            sig(&self.test_phi)
        );
        out
    }
}

pub fn results_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(RunRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{r}");
    }
    out
}

pub fn trail_csv(trail: &[Pose]) -> String {
    let mut out = String::from("tick,x,y,theta\n");
    for (k, p) in trail.iter().enumerate() {
        let _ = writeln!(out, "{k},{:.6},{:.6},{:.6}", p.x, p.y, p.theta);
    }
    out
}

/// SVG of the world with the trail drawn as a polyline.
pub fn trail_svg(world: &World, trail: &[Pose], body_radius: f64) -> String {
    let scale = 800.0 / world.width.max(world.height);
    let (w, h) = (world.width * scale, world.height * scale);
    let px = |x: f64| x * scale;
    let py = |y: f64| h - y * scale;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.1} {h:.1}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for s in &world.walls {
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black" stroke-width="3"/>"#,
            px(s.a.x),
            py(s.a.y),
            px(s.b.x),
            py(s.b.y)
        );
    }
    for c in &world.posts {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.1}" cy="{:.1}" r="{:.1}" fill="gray"/>"#,
            px(c.center.x),
            py(c.center.y),
            c.radius * scale
        );
    }
    for m in world.markers.iter().chain(world.block.iter()) {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.1}" cy="{:.1}" r="{:.1}" fill="{}"/>"#,
            px(m.center.x),
            py(m.center.y),
            m.radius * scale,
            m.color
        );
    }
    if let Some(g) = &world.goal {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.1}" cy="{:.1}" r="{:.1}" fill="none" stroke="green" stroke-width="2" stroke-dasharray="6 4"/>"#,
            px(g.center.x),
            py(g.center.y),
            g.radius * scale
        );
    }
    if !trail.is_empty() {
        let points: Vec<String> = trail.iter().map(|p| format!("{:.1},{:.1}", px(p.x), py(p.y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="crimson" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let (s, e) = (trail[0], trail[trail.len() - 1]);
        let _ = writeln!(
            out,
            r#"<circle cx="{:.1}" cy="{:.1}" r="{:.1}" fill="none" stroke="blue" stroke-width="2"/>"#,
            px(s.x),
            py(s.y),
            body_radius * scale
        );
        let _ = writeln!(
            out,
            r#"<circle cx="{:.1}" cy="{:.1}" r="{:.1}" fill="crimson" fill-opacity="0.4"/>"#,
            px(e.x),
            py(e.y),
            body_radius * scale
        );
    }
    out.push_str("</svg>\n");
    out
}
