#![allow(dead_code)]

use hobsim::gear::GearSpec;
use hobsim::hob::{DerivedHob, HobSpec};
use hobsim::kinematics::{CutterSchedule, MachineSetup};
use nalgebra::{Point3, Vector3};

/// Smallest tooth count the oracle instance asks for; at 15° helix it is
/// undercut, so the toy gear runs at 30°.
pub fn toy_setup() -> MachineSetup {
    let gear = GearSpec {
        tooth_count: 12,
        face_width: 6.0,
        helix_angle: 30.0,
        ..GearSpec::default()
    };
    MachineSetup::new(gear, HobSpec::default(), 2.0, 10.0)
}

fn union(frames: &CutterSchedule, hob: &DerivedHob, p: &Point3<f64>) -> f64 {
    frames
        .frames
        .iter()
        .map(|f| {
            let q = f.apply(p);
            hob.signed_membership(q.x, q.y, q.z)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Straight scan of the union of all pose solids along the normal, no
/// culling and no bracketing: first entry going outward when the point is
/// outside, first exit going inward when it is inside.
pub fn brute_force_deviation(
    p: &Point3<f64>,
    n: &Vector3<f64>,
    schedule: &CutterSchedule,
    halfwidth: f64,
    step: f64,
) -> Option<f64> {
    let hob = &schedule.kinematics.hob;
    let steps = (halfwidth / step).round() as i64;
    if union(schedule, hob, p) < 0.0 {
        for i in 1..=steps {
            let t = -(i as f64) * step;
            if union(schedule, hob, &(p + n * t)) >= 0.0 {
                return Some(t + 0.5 * step);
            }
        }
        Some(-halfwidth)
    } else {
        for i in 1..=steps {
            let t = i as f64 * step;
            if union(schedule, hob, &(p + n * t)) < 0.0 {
                return Some(t - 0.5 * step);
            }
        }
        None
    }
}
