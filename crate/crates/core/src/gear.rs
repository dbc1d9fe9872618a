//! Workpiece gear definition and the theoretical involute-helicoid flank.
//!
//! The measured flank is the one on the clockwise side of tooth 0. In the
//! workpiece frame (gear axis = +z) tooth 0 is centred on the +x axis at
//! `z = 0`, and a right-hand helix advances counter-clockwise with +z.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn one() -> f64 {
    1.0
}

fn one_quarter() -> f64 {
    1.25
}

/// Workpiece gear. Angles in degrees, lengths in mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GearSpec {
    pub normal_module: f64,
    pub normal_pressure_angle: f64,
    pub tooth_count: u32,
    /// Signed; positive is right hand.
    pub helix_angle: f64,
    pub face_width: f64,
    #[serde(default = "one")]
    pub addendum_coeff: f64,
    #[serde(default = "one_quarter")]
    pub dedendum_coeff: f64,
}

impl Default for GearSpec {
    fn default() -> Self {
        Self {
            normal_module: 2.0,
            normal_pressure_angle: 20.0,
            tooth_count: 30,
            helix_angle: 15.0,
            face_width: 30.0,
            addendum_coeff: 1.0,
            dedendum_coeff: 1.25,
        }
    }
}

impl GearSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidGear(m.to_string()));
        if !(self.normal_module > 0.0) {
            return bad("normal_module must be > 0");
        }
        if !(self.normal_pressure_angle > 0.0 && self.normal_pressure_angle < 45.0) {
            return bad("normal_pressure_angle must lie in (0, 45) degrees");
        }
        if self.tooth_count < 6 {
            return bad("tooth_count must be >= 6");
        }
        if !(self.helix_angle.abs() < 45.0) {
            return bad("|helix_angle| must be < 45 degrees");
        }
        if !(self.face_width > 0.0) {
            return bad("face_width must be > 0");
        }
        if !(self.addendum_coeff > 0.0) || !(self.dedendum_coeff > 0.0) {
            return bad("addendum/dedendum coefficients must be > 0");
        }
        Ok(())
    }

    /// +1 for right hand (and spur), -1 for left hand.
    pub fn hand_sign(&self) -> f64 {
        if self.helix_angle < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

/// Transverse-plane geometry derived from a [`GearSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransverseParams {
    pub tooth_count: u32,
    pub face_width: f64,
    /// Helix angle in radians, signed.
    pub helix_angle: f64,
    pub transverse_module: f64,
    /// Degrees.
    pub transverse_pressure_angle: f64,
    pub pitch_radius: f64,
    pub base_radius: f64,
    /// Axial advance per full twist; `f64::INFINITY` for spur gears.
    pub lead: f64,
    pub tip_radius: f64,
    pub root_radius: f64,
    /// Lowest radius of the involute reached by the straight flank of the
    /// basic rack working to depth `addendum_coeff * m_n`.
    pub root_form_radius: f64,
    /// Angular half thickness of a tooth at the base circle, radians.
    pub base_half_angle: f64,
}

impl TransverseParams {
    /// Flank rotation per unit of axial travel (rad/mm); 0 for spur gears.
    pub fn twist_rate(&self) -> f64 {
        self.helix_angle.tan() / self.pitch_radius
    }

    pub fn angular_pitch(&self) -> f64 {
        std::f64::consts::TAU / self.tooth_count as f64
    }

    /// Roll parameter of the involute point at `radius`.
    pub fn roll_at_radius(&self, radius: f64) -> f64 {
        ((radius / self.base_radius).powi(2) - 1.0).max(0.0).sqrt()
    }

    pub fn u_tip(&self) -> f64 {
        self.roll_at_radius(self.tip_radius)
    }

    pub fn u_root_form(&self) -> f64 {
        self.roll_at_radius(self.root_form_radius)
    }

    /// Base helix angle, radians (signed like the helix angle).
    pub fn base_helix_angle(&self) -> f64 {
        (self.helix_angle.tan() * self.base_radius / self.pitch_radius).atan()
    }

    /// Polar angle of the measured flank at `radius` in the plane `z`.
    pub fn flank_polar_angle(&self, radius: f64, z: f64) -> f64 {
        let u = self.roll_at_radius(radius);
        -self.base_half_angle + (u - u.atan()) + z * self.twist_rate()
    }

    /// Polar angle of the opposite flank of the previous tooth (tooth -1).
    pub fn mirror_flank_polar_angle(&self, radius: f64, z: f64) -> f64 {
        let u = self.roll_at_radius(radius);
        -self.angular_pitch() + self.base_half_angle - (u - u.atan()) + z * self.twist_rate()
    }
}

fn involute(alpha: f64) -> f64 {
    alpha.tan() - alpha
}

pub fn derive_transverse(spec: &GearSpec) -> Result<TransverseParams> {
    spec.validate()?;
    let beta = spec.helix_angle.to_radians();
    let alpha_n = spec.normal_pressure_angle.to_radians();
    let m_t = spec.normal_module / beta.cos();
    let alpha_t = (alpha_n.tan() / beta.cos()).atan();
    let z = spec.tooth_count as f64;
    let r = m_t * z / 2.0;
    let r_b = r * alpha_t.cos();
    let lead = if beta == 0.0 {
        f64::INFINITY
    } else {
        std::f64::consts::TAU * r / beta.tan().abs()
    };
    let tip = r + spec.addendum_coeff * spec.normal_module;
    let root = r - spec.dedendum_coeff * spec.normal_module;
    let form_roll = r * alpha_t.sin() - spec.addendum_coeff * spec.normal_module / alpha_t.sin();
    if form_roll <= 0.0 {
        return Err(Error::DegenerateProfile(format!(
            "basic rack undercuts the involute (z = {}): base radius {r_b:.4} mm is not below the root-form start",
            spec.tooth_count
        )));
    }
    let root_form = (r_b * r_b + form_roll * form_roll).sqrt();
    if root_form >= tip {
        return Err(Error::DegenerateProfile(format!(
            "root-form radius {root_form:.4} mm reaches the tip radius {tip:.4} mm"
        )));
    }
    // Half tooth thickness on the pitch circle is a quarter of the pitch.
    let half_pitch_angle = std::f64::consts::PI / (2.0 * z);
    Ok(TransverseParams {
        tooth_count: spec.tooth_count,
        face_width: spec.face_width,
        helix_angle: beta,
        transverse_module: m_t,
        transverse_pressure_angle: alpha_t.to_degrees(),
        pitch_radius: r,
        base_radius: r_b,
        lead,
        tip_radius: tip,
        root_radius: root,
        root_form_radius: root_form,
        base_half_angle: half_pitch_angle + involute(alpha_t),
    })
}

fn rotate_z(v: Vector3<f64>, angle: f64) -> Vector3<f64> {
    let (s, c) = angle.sin_cos();
    Vector3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
}

/// Applies the gear's screw motion: rotation `delta` about the axis with
/// the matching axial advance `lead * delta / 2pi`.
pub fn screw(tp: &TransverseParams, p: &Point3<f64>, delta: f64) -> Point3<f64> {
    let q = rotate_z(p.coords, delta);
    let dz = if tp.twist_rate() == 0.0 {
        0.0
    } else {
        delta / tp.twist_rate()
    };
    Point3::new(q.x, q.y, q.z + dz)
}

/// Point of the measured flank at roll parameter `u` and axial position `z`.
pub fn flank_point(tp: &TransverseParams, u: f64, z: f64) -> Point3<f64> {
    let rb = tp.base_radius;
    let (s, c) = u.sin_cos();
    let local = Vector3::new(rb * (c + u * s), rb * (s - u * c), 0.0);
    let q = rotate_z(local, -tp.base_half_angle + z * tp.twist_rate());
    Point3::new(q.x, q.y, z)
}

/// Unit normal of the measured flank, pointing out of the tooth material.
pub fn flank_normal(tp: &TransverseParams, u: f64, z: f64) -> Result<Vector3<f64>> {
    if u <= 0.0 {
        return Err(Error::NormalAtCusp);
    }
    let sigma = -tp.base_half_angle + z * tp.twist_rate();
    let a = rotate_z(Vector3::new(u.cos(), u.sin(), 0.0), sigma) * (tp.base_radius * u);
    let p = flank_point(tp, u, z);
    // d/du x d/dz, with d/dz = k (-y, x, 1)
    let k = tp.twist_rate();
    let n = Vector3::new(a.y, -a.x, k * (a.x * p.x + a.y * p.y));
    Ok(n.normalize())
}

/// Equidistant (u, z) measurement grid on the theoretical flank.
#[derive(Debug, Clone, PartialEq)]
pub struct FlankGrid {
    pub rows: usize,
    pub cols: usize,
    /// Row-major, `rows * cols`.
    pub points: Vec<Point3<f64>>,
    pub normals: Vec<Vector3<f64>>,
    /// Per column.
    pub profile_params: Vec<f64>,
    /// Per row.
    pub axial_params: Vec<f64>,
}

impl FlankGrid {
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn point(&self, row: usize, col: usize) -> Point3<f64> {
        self.points[self.index(row, col)]
    }

    pub fn normal(&self, row: usize, col: usize) -> Vector3<f64> {
        self.normals[self.index(row, col)]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same grid rotated by `angle` about the gear axis.
    pub fn rotated(&self, angle: f64) -> FlankGrid {
        FlankGrid {
            points: self
                .points
                .iter()
                .map(|p| Point3::from(rotate_z(p.coords, angle)))
                .collect(),
            normals: self.normals.iter().map(|n| rotate_z(*n, angle)).collect(),
            ..self.clone()
        }
    }
}

/// Equidistant subsample indices: `count` indices spread over `0..len`.
///
/// For `len = 25, count = 5` this is `[0, 6, 12, 18, 24]`.
pub fn subsample_indices(len: usize, count: usize) -> Vec<usize> {
    assert!(count >= 2 && len >= count && (len - 1).is_multiple_of(count - 1));
    let step = (len - 1) / (count - 1);
    (0..count).map(|i| i * step).collect()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

pub fn build_grid(
    spec: &GearSpec,
    rows: usize,
    cols: usize,
    profile_margin: f64,
    axial_margin: f64,
) -> Result<FlankGrid> {
    let tp = derive_transverse(spec)?;
    build_grid_from(&tp, rows, cols, profile_margin, axial_margin)
}

pub fn build_grid_from(
    tp: &TransverseParams,
    rows: usize,
    cols: usize,
    profile_margin: f64,
    axial_margin: f64,
) -> Result<FlankGrid> {
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidGrid("rows and cols must be >= 2".into()));
    }
    for m in [profile_margin, axial_margin] {
        if !(0.0..=0.2).contains(&m) {
            return Err(Error::InvalidGrid(format!("margin {m} outside [0, 0.2]")));
        }
    }
    let u_lo = tp.u_root_form() * (1.0 + profile_margin);
    let u_hi = tp.u_tip() * (1.0 - profile_margin);
    let z_lo = axial_margin * tp.face_width;
    let z_hi = (1.0 - axial_margin) * tp.face_width;
    if u_lo >= u_hi || z_lo >= z_hi {
        return Err(Error::InvalidGrid(format!(
            "empty measurement window u [{u_lo:.4}, {u_hi:.4}], z [{z_lo:.3}, {z_hi:.3}]"
        )));
    }
    let us = linspace(u_lo, u_hi, cols);
    let zs = linspace(z_lo, z_hi, rows);
    let mut points = Vec::with_capacity(rows * cols);
    let mut normals = Vec::with_capacity(rows * cols);
    for &z in &zs {
        for &u in &us {
            points.push(flank_point(tp, u, z));
            normals.push(flank_normal(tp, u, z)?);
        }
    }
    Ok(FlankGrid {
        rows,
        cols,
        points,
        normals,
        profile_params: us,
        axial_params: zs,
    })
}
