//! Beam constants, cross-section properties under uniform corrosion, the
//! equivalent single-degree-of-freedom oscillator, midspan deflection and
//! limit-state decay rates.
//!
//! Units follow the structural convention: mm, N/mm² (MPa), kN/m (= N/mm)
//! for line loads, kN·m for moments. SDOF quantities are SI (N/m, kg, Hz).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRAVITY: f64 = 9.81;

/// Midspan compliance factor for a fixed-fixed beam under uniform load:
/// `δ = p L⁴ / (384 E I)`.
pub const FIXED_FIXED_FACTOR: f64 = 384.0;

/// Rolled I-section. Catalog values are kept alongside the plate geometry;
/// computed properties include the four root fillets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IpeSection {
    /// Overall height, mm.
    pub h: f64,
    /// Flange width, mm.
    pub b: f64,
    /// Web thickness, mm.
    pub t_w: f64,
    /// Flange thickness, mm.
    pub t_f: f64,
    /// Root fillet radius, mm.
    pub r: f64,
    pub catalog: CatalogProperties,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatalogProperties {
    /// mm²
    pub area: f64,
    /// mm⁴
    pub i_xx: f64,
    /// mm³
    pub w_el: f64,
    /// mm³
    pub w_pl: f64,
}

impl IpeSection {
    pub const IPE400: IpeSection = IpeSection {
        h: 400.0,
        b: 180.0,
        t_w: 8.6,
        t_f: 13.5,
        r: 21.0,
        catalog: CatalogProperties {
            area: 8446.0,
            i_xx: 231.30e6,
            w_el: 1156e3,
            w_pl: 1307e3,
        },
    };

    /// Geometry after losing `d` mm on every exposed face. The fillet
    /// radius grows by `d` because its surface is concave.
    pub fn corroded(&self, d: f64) -> Result<IpeSection> {
        let limit = self.t_w / 2.0;
        if d.is_nan() || d < 0.0 {
            return Err(Error::param("corrosion depth", format!("must be ≥ 0, got {d}")));
        }
        if d >= limit {
            return Err(Error::SectionConsumed { depth: d, limit });
        }
        Ok(IpeSection {
            h: self.h - 2.0 * d,
            b: self.b - 2.0 * d,
            t_w: self.t_w - 2.0 * d,
            t_f: self.t_f - 2.0 * d,
            r: self.r + d,
            catalog: self.catalog,
        })
    }

    fn fillet(&self) -> Fillet {
        Fillet::new(self.r)
    }

    pub fn area(&self) -> f64 {
        2.0 * self.b * self.t_f + (self.h - 2.0 * self.t_f) * self.t_w + 4.0 * self.fillet().area
    }

    /// Second moment of area about the strong axis, mm⁴.
    pub fn inertia(&self) -> f64 {
        let web_clear = self.h - 2.0 * self.t_f;
        let plates = (self.b * self.h.powi(3) - (self.b - self.t_w) * web_clear.powi(3)) / 12.0;
        let f = self.fillet();
        let y = self.h / 2.0 - self.t_f - f.centroid_offset;
        plates + 4.0 * (f.own_inertia + f.area * y * y)
    }

    pub fn w_el(&self) -> f64 {
        self.inertia() / (self.h / 2.0)
    }

    /// Plastic modulus: twice the first moment of the half section.
    pub fn w_pl(&self) -> f64 {
        let f = self.fillet();
        let half_web = self.h / 2.0 - self.t_f;
        let flange = self.b * self.t_f * (self.h / 2.0 - self.t_f / 2.0);
        let web = self.t_w * half_web * half_web / 2.0;
        let fillets = 2.0 * f.area * (half_web - f.centroid_offset);
        2.0 * (flange + web + fillets)
    }
}

/// Spandrel between two perpendicular faces and a quarter circle of radius r.
struct Fillet {
    area: f64,
    /// Distance of the centroid from either face.
    centroid_offset: f64,
    /// Second moment about its own centroidal axis parallel to a face.
    own_inertia: f64,
}

impl Fillet {
    fn new(r: f64) -> Self {
        let area = (1.0 - PI / 4.0) * r * r;
        let centroid_offset = if r > 0.0 {
            r * (10.0 - 3.0 * PI) / (12.0 - 3.0 * PI)
        } else {
            0.0
        };
        // About the face line: square r⁴/3 minus quarter disc r⁴(5π/16 − 2/3).
        let about_face = r.powi(4) * (1.0 - 5.0 * PI / 16.0);
        Self {
            area,
            centroid_offset,
            own_inertia: about_face - area * centroid_offset * centroid_offset,
        }
    }
}

/// Area, second moment and elastic modulus after corrosion depth `d` (mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionProperties {
    pub area: f64,
    pub inertia: f64,
    pub w_el: f64,
}

pub fn section_properties(section: &IpeSection, d: f64) -> Result<SectionProperties> {
    let s = section.corroded(d)?;
    Ok(SectionProperties {
        area: s.area(),
        inertia: s.inertia(),
        w_el: s.w_el(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeamModel {
    /// Span, mm.
    pub length: f64,
    pub section: IpeSection,
    /// Reference Young's modulus, MPa.
    pub e0: f64,
    /// Yield strength, MPa.
    pub sigma_y: f64,
    /// Design yield strength, MPa.
    pub f_yd: f64,
    /// Steel density, kg/m³.
    pub density_steel: f64,
    /// Reinforced concrete density, kg/m³.
    pub density_concrete: f64,
    /// Slab thickness, mm.
    pub slab_thickness: f64,
    /// Tributary area, m².
    pub tributary_area: f64,
    pub zeta: f64,
    pub mass_participation: f64,
    /// `ρ` in `k = ρ E I / L³`; 384 for fixed-fixed under uniform load.
    pub boundary_factor: f64,
}

impl Default for BeamModel {
    fn default() -> Self {
        Self {
            length: 6000.0,
            section: IpeSection::IPE400,
            e0: 210_000.0,
            sigma_y: 235.0,
            f_yd: 223.9,
            density_steel: 7850.0,
            density_concrete: 2500.0,
            slab_thickness: 180.0,
            tributary_area: 30.0,
            zeta: 0.05,
            mass_participation: 1.0,
            boundary_factor: FIXED_FIXED_FACTOR,
        }
    }
}

impl BeamModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("length", self.length),
            ("e0", self.e0),
            ("f_yd", self.f_yd),
            ("density_steel", self.density_steel),
            ("mass_participation", self.mass_participation),
            ("boundary_factor", self.boundary_factor),
        ] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.zeta) {
            return Err(Error::param("zeta", "must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Elastic resisting moment `W_el f_yd` of the corroded section, kN·m.
    pub fn resisting_moment(&self, d: f64) -> Result<f64> {
        Ok(section_properties(&self.section, d)?.w_el * self.f_yd / 1e6)
    }

    /// Plastic resisting moment `W_pl f_yd`, kN·m.
    pub fn plastic_moment(&self, d: f64) -> Result<f64> {
        Ok(self.section.corroded(d)?.w_pl() * self.f_yd / 1e6)
    }

    /// Steel mass lost over the span at corrosion depth `d`, kg.
    pub fn corrosion_mass_loss(&self, d: f64) -> Result<f64> {
        let a0 = self.section.area();
        let ad = section_properties(&self.section, d)?.area;
        Ok(self.density_steel * (a0 - ad) * 1e-6 * self.length * 1e-3)
    }

    /// Equivalent oscillator for modulus `e` (MPa), load `p_des` (kN/m),
    /// corrosion depth `d` (mm) and stiffness decay `r_fast`.
    pub fn sdof(&self, e: f64, p_des: f64, d: f64, r_fast: f64) -> Result<SdofParams> {
        let props = section_properties(&self.section, d)?;
        let k = stiffness_with_factor(self.boundary_factor, e, props.inertia, self.length, r_fast)?;
        let m = equivalent_mass(p_des, self.length, self.corrosion_mass_loss(d)?, self.mass_participation)?;
        Ok(SdofParams::new(k, m, self.zeta))
    }

    /// Midspan deflection (mm) of the damaged beam.
    pub fn deflection(&self, e: f64, p_des: f64, d: f64, r_fast: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&r_fast) {
            return Err(Error::InvalidDecayRate(r_fast));
        }
        let props = section_properties(&self.section, d)?;
        deflection_with_factor(self.boundary_factor, p_des, e, props.inertia * (1.0 - r_fast), self.length)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdofParams {
    /// N/m
    pub k: f64,
    /// kg
    pub m: f64,
    /// N·s/m
    pub c: f64,
    /// Hz
    pub f_n: f64,
}

impl SdofParams {
    pub fn new(k: f64, m: f64, zeta: f64) -> Self {
        Self {
            k,
            m,
            c: 2.0 * zeta * (k * m).sqrt(),
            f_n: natural_frequency(k, m),
        }
    }
}

pub fn natural_frequency(k: f64, m: f64) -> f64 {
    (k / m).sqrt() / (2.0 * PI)
}

/// `k = 384 E I / L³ · (1 − r)` in N/m, with `E` in MPa, `I` in mm⁴, `L` in mm.
pub fn equivalent_stiffness(e: f64, i: f64, l: f64, r_fast: f64) -> Result<f64> {
    stiffness_with_factor(FIXED_FIXED_FACTOR, e, i, l, r_fast)
}

fn stiffness_with_factor(factor: f64, e: f64, i: f64, l: f64, r_fast: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r_fast) {
        return Err(Error::InvalidDecayRate(r_fast));
    }
    if e <= 0.0 || i <= 0.0 || l <= 0.0 {
        return Err(Error::param("stiffness inputs", "E, I and L must be > 0"));
    }
    // N/mm → N/m
    Ok(factor * e * i / l.powi(3) * (1.0 - r_fast) * 1e3)
}

/// `m = participation · p_des L / g − Δm`, in kg, with `p_des` in kN/m and
/// `L` in mm.
pub fn equivalent_mass(p_des: f64, l: f64, corrosion_loss: f64, participation: f64) -> Result<f64> {
    if p_des.is_nan() || p_des <= 0.0 {
        return Err(Error::param("p_des", "must be > 0"));
    }
    let m = participation * p_des * 1e3 * (l * 1e-3) / GRAVITY - corrosion_loss;
    if m.is_nan() || m <= 0.0 {
        return Err(Error::NonPositiveMass(m));
    }
    Ok(m)
}

/// `δ = p L⁴ / (384 E I)` in mm, with `p` in kN/m (= N/mm).
pub fn midspan_deflection(p: f64, e: f64, i: f64, l: f64) -> Result<f64> {
    deflection_with_factor(FIXED_FIXED_FACTOR, p, e, i, l)
}

fn deflection_with_factor(factor: f64, p: f64, e: f64, i: f64, l: f64) -> Result<f64> {
    if p < 0.0 || e <= 0.0 || i <= 0.0 || l <= 0.0 {
        return Err(Error::param("deflection inputs", "p ≥ 0 and E, I, L > 0 required"));
    }
    Ok(p * l.powi(4) / (factor * e * i))
}

/// A critical stiffness decay rate and its stiffness/frequency consequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayLimit {
    /// Negative when the limit is already exceeded.
    pub rate: f64,
}

impl DecayLimit {
    pub fn exceeded(&self) -> bool {
        self.rate < 0.0
    }

    /// `Δk / k_UD`.
    pub fn stiffness_variation(&self) -> f64 {
        self.rate
    }

    /// `Δf / f_UD = sqrt(r)`; undefined once the limit is exceeded.
    pub fn frequency_variation(&self) -> Option<f64> {
        (self.rate >= 0.0).then(|| self.rate.sqrt())
    }
}

/// `(M_R,el − max M_A) / M_R,el`.
pub fn plastic_decay_rate(m_r_el: f64, m_a_max: f64) -> Result<DecayLimit> {
    if m_r_el.is_nan() || m_r_el <= 0.0 {
        return Err(Error::param("M_R,el", "must be > 0"));
    }
    Ok(DecayLimit {
        rate: (m_r_el - m_a_max) / m_r_el,
    })
}

/// `1 − δ_des / δ_lim`.
pub fn serviceability_decay_rate(delta_des: f64, delta_lim: f64) -> Result<DecayLimit> {
    if delta_lim.is_nan() || delta_lim <= 0.0 {
        return Err(Error::param("delta_lim", "must be > 0"));
    }
    Ok(DecayLimit {
        rate: 1.0 - delta_des / delta_lim,
    })
}

/// Fixed-end moment of a uniformly loaded fixed-fixed beam, `p L² / 12`,
/// in kN·m for `p` in kN/m and `L` in mm.
pub fn support_moment(p: f64, l: f64) -> f64 {
    p * (l * 1e-3).powi(2) / 12.0
}
