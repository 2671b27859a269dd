//! Sachdeva choke model used as the virtual flow meter of every well.
//!
//! The model maps the measured choke opening, the pressures on either side of
//! the choke and the upstream temperature, together with an assumed mass
//! composition of the produced fluid, to the total mass flow through the
//! choke:
//!
//! ```text
//! y_T = C_D A(u) sqrt( 2 rho_2^2 p_1 [ k/(k-1) phi_G (1/rho_G1 - p_r/rho_G2)
//!                                     + (phi_O/rho_O + phi_W/rho_W)(1 - p_r) ] )
//! ```
//!
//! with `p_r = max(p_2/p_1, r_c)` distinguishing critical from sub-critical
//! flow. The gas density entering the harmonic-mean mixture density is taken
//! at downstream conditions (`rho_G2`); the model formulation leaves this
//! implicit.
//!
//! All quantities are SI. Functions are pure and reject inputs outside their
//! physical domain instead of clamping them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sum of a composition vector.
pub const COMPOSITION_TOLERANCE: f64 = 1e-12;

/// Measured inputs of one well at one time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellFeatures {
    /// Choke opening as a fraction of fully open.
    pub u: f64,
    /// Upstream pressure, Pa.
    pub p1: f64,
    /// Downstream pressure, Pa.
    pub p2: f64,
    /// Upstream temperature, K.
    pub temperature: f64,
}

impl WellFeatures {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.u) {
            return Err(Error::invalid(format!("choke opening {} outside [0, 1]", self.u)));
        }
        if !(self.p1 > 0.0 && self.p2 > 0.0 && self.temperature > 0.0) {
            return Err(Error::invalid(format!(
                "non-positive pressure or temperature (p1={}, p2={}, T={})",
                self.p1, self.p2, self.temperature
            )));
        }
        if self.p2 > self.p1 {
            return Err(Error::invalid(format!(
                "downstream pressure {} exceeds upstream pressure {}",
                self.p2, self.p1
            )));
        }
        Ok(())
    }
}

/// Choke opening to flow area profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AreaProfile {
    /// `A(u) = A_max * u`
    #[default]
    Linear,
}

/// Fluid and choke constants shared by all wells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluidProperties {
    /// Oil density, kg/m³.
    pub rho_oil: f64,
    /// Water density, kg/m³.
    pub rho_water: f64,
    /// Gas expansion coefficient.
    pub kappa: f64,
    /// Gas compressibility factor.
    pub z: f64,
    /// Gas molar mass, kg/mol.
    pub molar_mass: f64,
    /// Ideal gas constant, J/(mol K).
    pub gas_constant: f64,
    /// Critical pressure ratio.
    pub critical_ratio: f64,
    /// Discharge coefficient.
    pub discharge_coefficient: f64,
    /// Flow area of the fully open choke, m².
    pub max_area: f64,
    pub area_profile: AreaProfile,
}

impl Default for FluidProperties {
    fn default() -> Self {
        // max_area gives roughly 10 kg/s at u = 0.5, p1 = 50 bar, p2 = 25 bar,
        // T = 340 K and 15% gas by mass.
        Self {
            rho_oil: 800.0,
            rho_water: 1000.0,
            kappa: 1.3,
            z: 1.0,
            molar_mass: 0.016,
            gas_constant: 8.314,
            critical_ratio: 0.6,
            discharge_coefficient: 0.84,
            max_area: 1.2e-3,
            area_profile: AreaProfile::Linear,
        }
    }
}

impl FluidProperties {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho_oil", self.rho_oil),
            ("rho_water", self.rho_water),
            ("z", self.z),
            ("molar_mass", self.molar_mass),
            ("gas_constant", self.gas_constant),
            ("discharge_coefficient", self.discharge_coefficient),
            ("max_area", self.max_area),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.kappa > 1.0 && self.kappa.is_finite()) {
            return Err(Error::invalid(format!("kappa must exceed 1, got {}", self.kappa)));
        }
        if !(self.critical_ratio > 0.0 && self.critical_ratio < 1.0) {
            return Err(Error::invalid(format!(
                "critical pressure ratio must lie in (0, 1), got {}",
                self.critical_ratio
            )));
        }
        Ok(())
    }
}

/// Mass fractions of gas, oil and water.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    pub gas: f64,
    pub oil: f64,
    pub water: f64,
}

impl Composition {
    pub fn new(gas: f64, oil: f64, water: f64) -> Result<Self> {
        let c = Self { gas, oil, water };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.gas, self.oil, self.water] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("mass fraction {v} outside [0, 1]")));
            }
        }
        let sum = self.gas + self.oil + self.water;
        if (sum - 1.0).abs() > COMPOSITION_TOLERANCE {
            return Err(Error::invalid(format!("mass fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.gas, self.oil, self.water]
    }
}

/// `max(p2/p1, r_c)`.
pub fn pressure_ratio(p1: f64, p2: f64, critical_ratio: f64) -> Result<f64> {
    if !(p1 > 0.0 && p2 > 0.0) {
        return Err(Error::invalid(format!("non-positive pressure (p1={p1}, p2={p2})")));
    }
    if p2 > p1 {
        return Err(Error::invalid(format!("downstream pressure {p2} exceeds upstream pressure {p1}")));
    }
    Ok((p2 / p1).max(critical_ratio))
}

/// Ideal-gas density upstream of the choke, `p1 M / (Z R T)`.
pub fn gas_density_upstream(p1: f64, temperature: f64, props: &FluidProperties) -> Result<f64> {
    if !(p1 > 0.0 && temperature > 0.0) {
        return Err(Error::invalid(format!("non-positive pressure or temperature (p1={p1}, T={temperature})")));
    }
    if !(props.molar_mass > 0.0 && props.z > 0.0 && props.gas_constant > 0.0) {
        return Err(Error::invalid("non-positive gas constants"));
    }
    Ok(p1 * props.molar_mass / (props.z * props.gas_constant * temperature))
}

/// Isentropic expansion of the upstream gas density to the pressure ratio.
pub fn gas_density_downstream(rho_g1: f64, pressure_ratio: f64, kappa: f64) -> f64 {
    debug_assert!(rho_g1 > 0.0 && pressure_ratio > 0.0 && pressure_ratio <= 1.0 && kappa > 1.0);
    rho_g1 * pressure_ratio.powf(1.0 / kappa)
}

/// Mass-weighted harmonic mean of the phase densities, with the gas taken at
/// downstream conditions.
pub fn mixture_density_downstream(phi: &Composition, rho_g2: f64, props: &FluidProperties) -> f64 {
    1.0 / (phi.gas / rho_g2 + phi.oil / props.rho_oil + phi.water / props.rho_water)
}

pub fn choke_area(u: f64, max_area: f64, profile: AreaProfile) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::invalid(format!("choke opening {u} outside [0, 1]")));
    }
    Ok(match profile {
        AreaProfile::Linear => max_area * u,
    })
}

/// Total mass flow through the choke, kg/s.
pub fn total_flow(x: &WellFeatures, phi: &Composition, props: &FluidProperties) -> Result<f64> {
    x.validate()?;
    let area = choke_area(x.u, props.max_area, props.area_profile)?;
    if area == 0.0 {
        return Ok(0.0);
    }
    let pr = pressure_ratio(x.p1, x.p2, props.critical_ratio)?;
    let rho_g1 = gas_density_upstream(x.p1, x.temperature, props)?;
    let rho_g2 = gas_density_downstream(rho_g1, pr, props.kappa);
    let rho_2 = mixture_density_downstream(phi, rho_g2, props);

    let gas_work = props.kappa / (props.kappa - 1.0) * phi.gas * (1.0 / rho_g1 - pr / rho_g2);
    let liquid_work = (phi.oil / props.rho_oil + phi.water / props.rho_water) * (1.0 - pr);
    let radicand = 2.0 * rho_2 * rho_2 * x.p1 * (gas_work + liquid_work);
    if radicand < 0.0 || radicand.is_nan() {
        return Err(Error::NumericalDomain(format!(
            "negative radicand {radicand} in choke equation for features {x:?}, composition {phi:?}"
        )));
    }
    Ok(props.discharge_coefficient * area * radicand.sqrt())
}
