//! Physical constants, device parameters and the coefficients derived from them.
//!
//! Everything is SI with the angular-frequency convention: every "frequency"
//! field is in rad/s, couplings `G_j` are in rad/s per metre.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which mirrors are dynamical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    /// End mirrors clamped; only the middle mirror M1 moves (single Fano).
    FixedEnds,
    /// Middle mirror M1 and end mirror M2 both move (double Fano).
    DoubleMovable,
}

impl Topology {
    pub fn name(self) -> &'static str {
        match self {
            Topology::FixedEnds => "fixed_ends",
            Topology::DoubleMovable => "double_movable",
        }
    }
}

impl std::str::FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed_ends" | "fixed-ends" | "FixedEnds" => Ok(Topology::FixedEnds),
            "double_movable" | "double-movable" | "DoubleMovable" => Ok(Topology::DoubleMovable),
            other => Err(Error::InvalidParameter {
                field: "topology",
                reason: format!("unknown topology `{other}`"),
            }),
        }
    }
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Device and drive constants.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    /// Mirror masses, kg.
    pub mass1: f64,
    pub mass2: f64,
    /// Mechanical angular frequencies, rad/s.
    pub omega1: f64,
    pub omega2: f64,
    /// Mechanical damping rates, rad/s.
    pub gamma1: f64,
    pub gamma2: f64,
    /// Cavity frequency pull per displacement, rad/s/m.
    pub coupling1: f64,
    pub coupling2: f64,
    /// Total cavity decay rate, rad/s.
    pub kappa: f64,
    /// External coupling fraction `kappa_ex / kappa`.
    pub eta: f64,
    /// Photon tunneling rate through the middle mirror, rad/s.
    pub tunneling: f64,
    /// Bare pump-cavity detunings, rad/s.
    pub delta1: f64,
    pub delta2: f64,
    /// Pump and probe powers, W.
    pub pump_power: f64,
    pub probe_power: f64,
    /// Pump wavelength, m. Only enters through the pump photon energy.
    pub pump_wavelength: f64,
}

impl PhysicalParams {
    /// The device used for the reflection spectra: 20 ng mirrors at
    /// 51.8 MHz, 41 kHz damping, 13 GHz/nm pull, 15 MHz linewidth, critical
    /// coupling, 1 mW pump red-detuned by one mechanical frequency.
    pub fn paper_preset() -> Self {
        let omega_m = 2.0 * PI * 51.8e6;
        let pump_power = 1e-3;
        Self {
            mass1: 2e-11,
            mass2: 2e-11,
            omega1: omega_m,
            omega2: omega_m,
            gamma1: 2.0 * PI * 41e3,
            gamma2: 2.0 * PI * 41e3,
            coupling1: 2.0 * PI * 1.3e19,
            coupling2: 2.0 * PI * 1.3e19,
            kappa: 2.0 * PI * 15e6,
            eta: 0.5,
            tunneling: 0.0,
            delta1: -omega_m,
            delta2: -omega_m,
            pump_power,
            probe_power: pump_power / 100.0,
            pump_wavelength: 1.064e-6,
        }
    }

    /// Copy with a different tunneling rate.
    pub fn with_tunneling(&self, g: f64) -> Self {
        Self {
            tunneling: g,
            ..self.clone()
        }
    }

    /// Reference mechanical frequency used for the `Omega / Omega_m` axis.
    pub fn omega_m(&self) -> f64 {
        self.omega1
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(field: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be finite and > 0, got {v}"),
                })
            }
        }
        fn non_negative(field: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be finite and >= 0, got {v}"),
                })
            }
        }
        positive("mass1", self.mass1)?;
        positive("mass2", self.mass2)?;
        positive("omega1", self.omega1)?;
        positive("omega2", self.omega2)?;
        non_negative("gamma1", self.gamma1)?;
        non_negative("gamma2", self.gamma2)?;
        non_negative("coupling1", self.coupling1)?;
        non_negative("coupling2", self.coupling2)?;
        positive("kappa", self.kappa)?;
        non_negative("tunneling", self.tunneling)?;
        positive("pump_power", self.pump_power)?;
        positive("probe_power", self.probe_power)?;
        positive("pump_wavelength", self.pump_wavelength)?;
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidParameter {
                field: "eta",
                reason: format!("must lie in (0, 1], got {}", self.eta),
            });
        }
        for (field, v) in [("delta1", self.delta1), ("delta2", self.delta2)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    field,
                    reason: "must be finite".into(),
                });
            }
        }
        Ok(())
    }

    /// Pump angular frequency `2 pi c / lambda_c`.
    pub fn pump_frequency(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.pump_wavelength
    }

    /// Pump field strength `eps_c`.
    pub fn pump_amplitude(&self) -> f64 {
        drive_amplitude(self.pump_power, self.pump_frequency())
            .expect("pump frequency is positive for a positive wavelength")
    }

    /// Probe field strength `eps_p` for a probe detuned by `omega` from the pump.
    pub fn probe_amplitude(&self, omega: f64) -> Result<f64> {
        drive_amplitude(self.probe_power, self.pump_frequency() + omega)
    }

    /// `sqrt(eta * kappa)`, the input coupling amplitude.
    pub fn input_coupling(&self) -> f64 {
        (self.eta * self.kappa).sqrt()
    }

    /// Zero-point fluctuation `sqrt(hbar / (2 m_j Omega_j))` of mirror 1 or 2.
    pub fn zero_point(&self, mirror: Mirror) -> f64 {
        let (m, w) = match mirror {
            Mirror::M1 => (self.mass1, self.omega1),
            Mirror::M2 => (self.mass2, self.omega2),
        };
        (HBAR / (2.0 * m * w)).sqrt()
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::paper_preset()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mirror {
    M1,
    M2,
}

/// Coefficients of the linearized field equations at one probe detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCoefficients {
    pub theta1: Complex64,
    pub theta2: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
    pub d3: Complex64,
    pub d4: Complex64,
    pub delta_bar1: f64,
    pub delta_bar2: f64,
}

/// Field strength `sqrt(P / (hbar omega))` in s^-1/2.
pub fn drive_amplitude(power: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!(
            "drive frequency must be positive, got {omega}"
        )));
    }
    if !(power >= 0.0) {
        return Err(Error::Domain(format!(
            "drive power must be non-negative, got {power}"
        )));
    }
    Ok((power / (HBAR * omega)).sqrt())
}

/// Detunings including the radiation-pressure shift of the mirrors.
pub fn effective_detunings(p: &PhysicalParams, topology: Topology, x1: f64, x2: f64) -> (f64, f64) {
    let bar1 = p.delta1 + p.coupling1 * x1;
    let bar2 = match topology {
        Topology::DoubleMovable => p.delta2 + p.coupling2 * (x2 - x1),
        Topology::FixedEnds => p.delta2 - p.coupling2 * x1,
    };
    (bar1, bar2)
}

/// Mechanical susceptibility `1 / (m (Omega_j^2 - Omega^2 - i gamma_j Omega / 2))`.
///
/// The `gamma/2` follows from the `-(gamma/2) p` damping in the momentum equations.
pub fn mechanical_susceptibility(
    mass: f64,
    omega_j: f64,
    gamma_j: f64,
    omega: f64,
) -> Result<Complex64> {
    let denom = mass * Complex64::new(omega_j * omega_j - omega * omega, -gamma_j * omega / 2.0);
    if denom == Complex64::new(0.0, 0.0) {
        return Err(Error::SingularSusceptibility);
    }
    Ok(denom.inv())
}

pub fn derived_coefficients(
    p: &PhysicalParams,
    delta_bar1: f64,
    delta_bar2: f64,
    omega: f64,
) -> DerivedCoefficients {
    let theta1 = Complex64::new(-p.kappa / 2.0, delta_bar1);
    let theta2 = Complex64::new(-p.kappa / 2.0, delta_bar2);
    DerivedCoefficients {
        theta1,
        theta2,
        d1: theta1 + I * omega,
        d2: theta1 - I * omega,
        d3: theta2 + I * omega,
        d4: theta2 - I * omega,
        delta_bar1,
        delta_bar2,
    }
}
