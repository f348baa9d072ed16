//! Random route generators and independent oracles shared by the property
//! and acceptance tests.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;
use skyroute_core::geodesy::Projection;
use skyroute_core::model::{CameraTaskKind, Path, PathPoint};
use skyroute_core::sim::{CameraEventKind, SimConfig, SimulationResult};

pub const BOGOTA: (f64, f64) = (4.6012, -74.0658);

/// Valid route with up to `max_points` waypoints; any task mix that stores.
pub fn random_stored_path(rng: &mut StdRng, number: u64, max_points: usize) -> Path {
    let mut p = Path::new(format!("PATH-{number}"));
    if rng.random_bool(0.5) {
        let len = rng.random_range(1..24);
        p.description = Some((0..len).map(|_| rng.random_range('a'..='z')).collect());
    }
    let n = rng.random_range(0..=max_points);
    for id in 0..n as u32 {
        let lat = rng.random_range(-89.9..89.9);
        let lon = rng.random_range(-179.9..179.9);
        let alt = rng.random_range(0.0..=120.0);
        let (task, instruction) = random_task(rng);
        p.points
            .push(PathPoint::new(id, lat, lon, alt).with_task(task, instruction));
    }
    p
}

fn random_task(rng: &mut StdRng) -> (CameraTaskKind, String) {
    let kind = CameraTaskKind::ALL[rng.random_range(0..5)];
    let instruction = match kind {
        CameraTaskKind::Video => ["", "start", "stop"][rng.random_range(0..3)].to_string(),
        CameraTaskKind::Interval | CameraTaskKind::Panorama if rng.random_bool(0.5) => {
            rng.random_range(1..12u32).to_string()
        }
        _ => String::new(),
    };
    (kind, instruction)
}

/// Flyable route near `home`: video instructions are kept balanced and at
/// least one waypoint is airborne.
pub fn random_flyable_path(rng: &mut StdRng, home: (f64, f64), max_points: usize) -> Path {
    let mut p = Path::new("PATH-1");
    let n = rng.random_range(1..=max_points);
    let mut recording = false;
    for id in 0..n as u32 {
        let lat = home.0 + rng.random_range(-0.002..0.002);
        let lon = home.1 + rng.random_range(-0.002..0.002);
        let alt = rng.random_range(1.0..60.0);
        let (task, instruction) = match rng.random_range(0..6) {
            0 => (CameraTaskKind::Picture, String::new()),
            1 => {
                let text = match (recording, rng.random_bool(0.5)) {
                    (false, true) => "start",
                    (true, true) => "stop",
                    _ => "",
                };
                recording = !recording;
                (CameraTaskKind::Video, text.to_string())
            }
            2 => {
                let text = if rng.random_bool(0.5) {
                    rng.random_range(1..6u32).to_string()
                } else {
                    String::new()
                };
                (CameraTaskKind::Interval, text)
            }
            3 => {
                let text = if rng.random_bool(0.5) {
                    rng.random_range(1..10u32).to_string()
                } else {
                    String::new()
                };
                (CameraTaskKind::Panorama, text)
            }
            _ => (CameraTaskKind::Nothing, String::new()),
        };
        p.points
            .push(PathPoint::new(id, lat, lon, alt).with_task(task, instruction));
    }
    p
}

/// Interval shots on a leg found by stepping its clock at a fine tick and
/// counting how often the elapsed time crosses a multiple of the interval.
pub fn brute_force_shots(leg_duration_s: f64, interval_s: f64, fine_tick_s: f64) -> usize {
    let steps = (leg_duration_s / fine_tick_s).ceil() as usize;
    let slot = |elapsed: f64| (elapsed / interval_s + 1e-9).floor() as i64;
    let mut shots = 0;
    let mut previous = slot(0.0);
    for j in 1..=steps {
        let elapsed = (j as f64 * fine_tick_s).min(leg_duration_s);
        let current = slot(elapsed);
        if current > previous {
            shots += (current - previous) as usize;
        }
        previous = current;
    }
    shots
}

/// Frames a panorama task takes, from its instruction.
pub fn panorama_frames(point: &PathPoint, config: &SimConfig) -> u32 {
    point
        .instruction
        .trim()
        .parse()
        .unwrap_or(config.panorama_frames)
}

/// Checks event ordering, video balance and panorama frame counts; returns
/// the first failure as text.
pub fn check_events(
    path: &Path,
    result: &SimulationResult,
    config: &SimConfig,
) -> Result<(), String> {
    if result.events.windows(2).any(|w| w[1].time_s < w[0].time_s) {
        return Err("event times decrease".into());
    }
    let mut open = false;
    let mut frames = 0u32;
    for e in &result.events {
        match e.kind {
            CameraEventKind::VideoStart if open => return Err("video start while recording".into()),
            CameraEventKind::VideoStart => open = true,
            CameraEventKind::VideoStop if !open => return Err("video stop without start".into()),
            CameraEventKind::VideoStop => open = false,
            CameraEventKind::PanoramaFrame => frames += 1,
            CameraEventKind::PanoramaComplete => {
                let expected = panorama_frames(&path.points[e.waypoint_id as usize], config);
                if frames != expected {
                    return Err(format!(
                        "panorama at {} took {frames} frames, expected {expected}",
                        e.waypoint_id
                    ));
                }
                frames = 0;
            }
            _ => {}
        }
    }
    if open {
        return Err("video left open".into());
    }
    Ok(())
}

/// Arrival times from leg lengths, climb and hovers, recomputed outside the
/// simulator.
pub fn expected_arrivals(path: &Path, projection: &Projection, config: &SimConfig) -> Vec<f64> {
    let mut t = path.points[0].altitude_m / config.speed_mps;
    let mut out = Vec::new();
    for (i, p) in path.points.iter().enumerate() {
        out.push(t);
        if p.task == CameraTaskKind::Panorama {
            t += config.panorama_rotation_s;
        }
        if let Some(next) = path.points.get(i + 1) {
            t += projection.leg_length_3d(p, next).unwrap() / config.speed_mps;
        }
    }
    out
}

/// Interval legs as `(waypoint id, leg duration, interval)`.
pub fn interval_legs(
    path: &Path,
    projection: &Projection,
    config: &SimConfig,
) -> Vec<(u32, f64, f64)> {
    path.points
        .windows(2)
        .filter(|w| w[0].task == CameraTaskKind::Interval)
        .map(|w| {
            let interval = w[0]
                .instruction
                .trim()
                .parse()
                .unwrap_or(config.default_interval_s);
            let duration = projection.leg_length_3d(&w[0], &w[1]).unwrap() / config.speed_mps;
            (w[0].id, duration, interval)
        })
        .collect()
}
