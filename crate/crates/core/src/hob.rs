//! Single-thread worm model of the hob with a continuous cutting edge.
//!
//! The hob frame has the hob axis along +z, origin at the hob mid-plane.
//! The thread solid is described by its axial section in reduced
//! coordinates `(rho, w)`, where `w = z - (lead / 2pi) * theta` folded into
//! one axial pitch. The thread is centred on `w = 0`.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Angle in decimal degrees; deserializes from a number or a `D°M′` string.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Degrees(pub f64);

impl Degrees {
    pub fn from_dm(deg: f64, min: f64) -> Self {
        Degrees(deg + min / 60.0)
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }
}

impl std::str::FromStr for Degrees {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |t: &str| -> Result<f64> {
            let t = t.trim();
            if t.is_empty() {
                return Ok(0.0);
            }
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad angle component `{t}` in `{s}`")))
        };
        let Some((d, rest)) = s.split_once('°') else {
            return parse(s).map(Degrees);
        };
        let deg = parse(d)?;
        let rest = rest.trim();
        let (min, rest) = match rest.find(['′', '\'']) {
            Some(i) => {
                let ch = rest[i..].chars().next().unwrap();
                (parse(&rest[..i])?, rest[i + ch.len_utf8()..].trim())
            }
            None => (parse(rest)?, ""),
        };
        let sec = parse(rest.trim_end_matches(['″', '"']))?;
        let sign = if d.trim_start().starts_with('-') {
            -1.0
        } else {
            1.0
        };
        Ok(Degrees(deg + sign * (min / 60.0 + sec / 3600.0)))
    }
}

impl Serialize for Degrees {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Degrees {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Degrees;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("decimal degrees or a D°M′ string")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Degrees, E> {
                Ok(Degrees(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Degrees, E> {
                Ok(Degrees(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Degrees, E> {
                Ok(Degrees(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Degrees, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hand {
    Right,
    Left,
}

impl Hand {
    pub fn sign(self) -> f64 {
        match self {
            Hand::Right => 1.0,
            Hand::Left => -1.0,
        }
    }
}

/// Flank form of the thread in the hob's axial section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreadForm {
    /// Straight-sided axial section.
    Archimedean,
    /// Involute helicoid flanks (slightly convex axial section).
    Involute,
}

fn default_pressure() -> Degrees {
    Degrees(20.0)
}

fn default_form() -> ThreadForm {
    ThreadForm::Involute
}

/// Hob definition; defaults reproduce the reference hob table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HobSpec {
    pub module: f64,
    pub pitch_diameter: f64,
    pub addendum: f64,
    pub whole_depth: f64,
    pub normal_pitch: f64,
    pub normal_tooth_thickness: f64,
    pub axial_profile_angle: Degrees,
    pub lead_angle: Degrees,
    pub thread_hand: Hand,
    pub tip_corner_radius: f64,
    pub root_fillet_radius: f64,
    pub starts: u32,
    pub hob_length: f64,
    pub external_diameter: f64,
    pub bore: f64,
    /// Normal pressure angle of the generating rack.
    #[serde(default = "default_pressure")]
    pub normal_pressure_angle: Degrees,
    #[serde(default = "default_form")]
    pub thread_form: ThreadForm,
}

impl Default for HobSpec {
    fn default() -> Self {
        Self {
            module: 2.0,
            pitch_diameter: 65.06,
            addendum: 2.5,
            whole_depth: 5.0,
            normal_pitch: 6.286,
            normal_tooth_thickness: 3.143,
            axial_profile_angle: Degrees::from_dm(20.0, 1.0),
            lead_angle: Degrees::from_dm(1.0, 46.0),
            thread_hand: Hand::Right,
            tip_corner_radius: 0.6,
            root_fillet_radius: 0.6,
            starts: 1,
            hob_length: 50.0,
            external_diameter: 71.0,
            bore: 27.0,
            normal_pressure_angle: Degrees(20.0),
            thread_form: ThreadForm::Involute,
        }
    }
}

impl HobSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidHob(m));
        for (name, v) in [
            ("module", self.module),
            ("pitch_diameter", self.pitch_diameter),
            ("addendum", self.addendum),
            ("whole_depth", self.whole_depth),
            ("normal_pitch", self.normal_pitch),
            ("normal_tooth_thickness", self.normal_tooth_thickness),
            ("hob_length", self.hob_length),
            ("external_diameter", self.external_diameter),
            ("bore", self.bore),
        ] {
            if !(v > 0.0) {
                return bad(format!("{name} must be > 0"));
            }
        }
        if self.tip_corner_radius < 0.0 || self.root_fillet_radius < 0.0 {
            return bad("corner radii must be >= 0".into());
        }
        if !(self.lead_angle.0 > 0.0 && self.lead_angle.0 < 10.0) {
            return bad("lead_angle must lie in (0, 10) degrees".into());
        }
        if self.whole_depth < self.addendum {
            return bad("whole_depth must be >= addendum".into());
        }
        if self.starts == 0 {
            return bad("starts must be positive".into());
        }
        if !(self.normal_pressure_angle.0 > 0.0 && self.normal_pressure_angle.0 < 45.0) {
            return bad("normal_pressure_angle must lie in (0, 45) degrees".into());
        }
        Ok(())
    }
}

/// One row of the declared-vs-derived comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyItem {
    pub item: &'static str,
    pub declared: f64,
    pub derived: f64,
    pub difference: f64,
}

/// Half thickness of the thread as a function of radius, with the tip
/// corner and root fillet arcs blended in.
#[derive(Debug, Clone, PartialEq)]
struct AxialProfile {
    form: ThreadForm,
    pitch_radius: f64,
    half_thickness_at_pitch: f64,
    /// Axial profile slope magnitude (Archimedean).
    slope: f64,
    /// Screw parameter lead / 2pi, unsigned.
    screw: f64,
    /// Base radius of the involute thread.
    base_radius: f64,
    root: f64,
    tip: f64,
    tip_r: f64,
    tip_tangent: f64,
    tip_centre_w: f64,
    fillet_r: f64,
    fillet_tangent: f64,
    fillet_centre_w: f64,
}

impl AxialProfile {
    fn inv_term(&self, rho: f64) -> f64 {
        let x = rho / self.base_radius;
        (x * x - 1.0).sqrt() - (1.0 / x).acos()
    }

    /// Straight/involute flank half thickness.
    fn flank(&self, rho: f64) -> f64 {
        match self.form {
            ThreadForm::Archimedean => {
                self.half_thickness_at_pitch - self.slope * (rho - self.pitch_radius)
            }
            ThreadForm::Involute => {
                self.half_thickness_at_pitch
                    - self.screw * (self.inv_term(rho) - self.inv_term(self.pitch_radius))
            }
        }
    }

    /// -d(flank)/d(rho), positive.
    fn flank_slope(&self, rho: f64) -> f64 {
        match self.form {
            ThreadForm::Archimedean => self.slope,
            ThreadForm::Involute => {
                let x = rho / self.base_radius;
                self.screw * (x * x - 1.0).sqrt() / rho
            }
        }
    }

    /// Flank radius where a corner arc of radius `r` centred at radius
    /// `centre_rho` touches, with `sign` +1 for the tip corner (centre
    /// inside the thread) and -1 for the root fillet.
    fn tangent_point(&self, r: f64, centre_rho: f64, sign: f64) -> f64 {
        let mut rho = centre_rho;
        for _ in 0..50 {
            let s = self.flank_slope(rho);
            let next = centre_rho + sign * r * s / (1.0 + s * s).sqrt();
            if (next - rho).abs() < 1e-15 {
                return next;
            }
            rho = next;
        }
        rho
    }

    fn build(mut self) -> Self {
        if self.tip_r > 0.0 {
            self.tip_tangent = self.tangent_point(self.tip_r, self.tip - self.tip_r, 1.0);
            let s = self.flank_slope(self.tip_tangent);
            self.tip_centre_w = self.flank(self.tip_tangent) - self.tip_r / (1.0 + s * s).sqrt();
        } else {
            self.tip_tangent = self.tip;
            self.tip_centre_w = self.flank(self.tip);
        }
        if self.fillet_r > 0.0 {
            self.fillet_tangent =
                self.tangent_point(self.fillet_r, self.root + self.fillet_r, -1.0);
            let s = self.flank_slope(self.fillet_tangent);
            self.fillet_centre_w =
                self.flank(self.fillet_tangent) + self.fillet_r / (1.0 + s * s).sqrt();
        } else {
            self.fillet_tangent = self.root;
            self.fillet_centre_w = self.flank(self.root);
        }
        self
    }

    fn half_thickness(&self, rho: f64) -> f64 {
        let rho = rho.clamp(self.root, self.tip);
        if rho > self.tip_tangent {
            let d = rho - (self.tip - self.tip_r);
            self.tip_centre_w + (self.tip_r * self.tip_r - d * d).max(0.0).sqrt()
        } else if rho < self.fillet_tangent {
            let d = rho - (self.root + self.fillet_r);
            self.fillet_centre_w - (self.fillet_r * self.fillet_r - d * d).max(0.0).sqrt()
        } else {
            self.flank(rho)
        }
    }
}

/// Hob geometry derived from a [`HobSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedHob {
    pub pitch_radius: f64,
    pub cutting_tip_radius: f64,
    pub root_radius: f64,
    pub axial_pitch: f64,
    pub lead: f64,
    /// Degrees.
    pub derived_lead_angle: f64,
    /// Degrees.
    pub derived_axial_profile_angle: f64,
    /// Axial thread thickness at the pitch cylinder.
    pub axial_thickness: f64,
    pub hand: Hand,
    pub starts: u32,
    pub half_length: f64,
    pub consistency: Vec<ConsistencyItem>,
    profile: AxialProfile,
}

pub fn derive_hob(spec: &HobSpec) -> Result<DerivedHob> {
    spec.validate()?;
    let starts = spec.starts as f64;
    let sin_lead = starts * spec.module / spec.pitch_diameter;
    if sin_lead >= 1.0 {
        return Err(Error::InvalidHob(
            "starts * module exceeds pitch diameter".into(),
        ));
    }
    let lead_angle = sin_lead.asin();
    let derived_lead_deg = lead_angle.to_degrees();
    if (derived_lead_deg - spec.lead_angle.0).abs() > 0.1 {
        return Err(Error::InconsistentHob {
            derived: derived_lead_deg,
            declared: spec.lead_angle.0,
        });
    }
    let tan_axial = spec.normal_pressure_angle.radians().tan() / lead_angle.cos();
    let axial_angle = tan_axial.atan();
    let axial_pitch = std::f64::consts::PI * spec.module / lead_angle.cos();
    let lead = starts * axial_pitch;
    let pitch_radius = spec.pitch_diameter / 2.0;
    let tip = pitch_radius + spec.addendum;
    let root = tip - spec.whole_depth;
    if root <= 0.0 {
        return Err(Error::InvalidHob("root radius must be positive".into()));
    }
    let screw = lead / std::f64::consts::TAU;
    // involute thread with the required axial slope at the pitch cylinder
    let k = tan_axial * pitch_radius / screw;
    let base_radius = pitch_radius / (1.0 + k * k).sqrt();
    if spec.thread_form == ThreadForm::Involute && root <= base_radius {
        return Err(Error::InvalidHob(
            "thread root lies inside the involute base cylinder".into(),
        ));
    }
    let axial_thickness = axial_pitch / 2.0;
    let profile = AxialProfile {
        form: spec.thread_form,
        pitch_radius,
        half_thickness_at_pitch: axial_thickness / 2.0,
        slope: tan_axial,
        screw,
        base_radius,
        root,
        tip,
        tip_r: spec.tip_corner_radius,
        tip_tangent: tip,
        tip_centre_w: 0.0,
        fillet_r: spec.root_fillet_radius,
        fillet_tangent: root,
        fillet_centre_w: 0.0,
    }
    .build();
    if profile.tip_tangent <= profile.fillet_tangent {
        return Err(Error::InvalidHob(
            "corner radii consume the whole flank".into(),
        ));
    }
    if profile.tip_centre_w < 0.0 {
        return Err(Error::InvalidHob(
            "tip corner radius exceeds the tip width".into(),
        ));
    }
    if profile.fillet_centre_w > axial_pitch / 2.0 {
        return Err(Error::InvalidHob(
            "root fillets of adjacent threads overlap".into(),
        ));
    }
    let consistency = vec![
        ConsistencyItem {
            item: "lead_angle_deg",
            declared: spec.lead_angle.0,
            derived: derived_lead_deg,
            difference: derived_lead_deg - spec.lead_angle.0,
        },
        ConsistencyItem {
            item: "axial_profile_angle_deg",
            declared: spec.axial_profile_angle.0,
            derived: axial_angle.to_degrees(),
            difference: axial_angle.to_degrees() - spec.axial_profile_angle.0,
        },
        ConsistencyItem {
            item: "axial_pitch_mm",
            declared: spec.normal_pitch,
            derived: axial_pitch,
            difference: axial_pitch - spec.normal_pitch,
        },
        ConsistencyItem {
            item: "axial_thickness_mm",
            declared: spec.normal_tooth_thickness,
            derived: axial_thickness,
            difference: axial_thickness - spec.normal_tooth_thickness,
        },
    ];
    Ok(DerivedHob {
        pitch_radius,
        cutting_tip_radius: tip,
        root_radius: root,
        axial_pitch,
        lead,
        derived_lead_angle: derived_lead_deg,
        derived_axial_profile_angle: axial_angle.to_degrees(),
        axial_thickness,
        hand: spec.thread_hand,
        starts: spec.starts,
        half_length: spec.hob_length / 2.0,
        consistency,
        profile,
    })
}

impl DerivedHob {
    /// Signed screw parameter: axial advance per radian of rotation.
    pub fn screw_parameter(&self) -> f64 {
        self.hand.sign() * self.lead / std::f64::consts::TAU
    }

    /// Reduced axial coordinate folded into `[-p/2, p/2]`.
    pub fn reduced_w(&self, x: f64, y: f64, z: f64) -> f64 {
        let w = z - self.screw_parameter() * y.atan2(x);
        w - self.axial_pitch * (w / self.axial_pitch).round()
    }

    /// Half thickness of the thread (axial) at radius `rho`.
    pub fn half_thickness(&self, rho: f64) -> f64 {
        self.profile.half_thickness(rho)
    }

    /// Membership value in the axial section.
    pub fn section_membership(&self, rho: f64, w: f64) -> f64 {
        let thread =
            (w.abs() - self.profile.half_thickness(rho)).max(rho - self.cutting_tip_radius);
        thread.min(rho - self.root_radius)
    }

    /// Negative strictly inside the thread solid, positive outside.
    #[inline]
    pub fn signed_membership(&self, x: f64, y: f64, z: f64) -> f64 {
        let rho = (x * x + y * y).sqrt();
        let core = self.section_membership(rho, self.reduced_w(x, y, z));
        core.max(z.abs() - self.half_length)
    }

    /// Radii where the flank meets the tip arc and the root fillet arc.
    pub fn arc_tangent_radii(&self) -> (f64, f64) {
        (self.profile.tip_tangent, self.profile.fillet_tangent)
    }

    pub fn thread_form(&self) -> ThreadForm {
        self.profile.form
    }
}
