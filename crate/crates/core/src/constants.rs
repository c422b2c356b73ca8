//! Physical constants (SI, CODATA exact where defined) and caesium data.

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Caesium-133 atomic mass.
pub const CS_MASS: f64 = 2.2069e-25;
/// Cs D2 wavelength in vacuum.
pub const CS_D2_WAVELENGTH: f64 = 852e-9;
/// Cs 6P3/2 radiative lifetime.
pub const CS_LIFETIME: f64 = 30e-9;

pub const MHZ: f64 = 1e6;
pub const NM: f64 = 1e-9;
pub const UM: f64 = 1e-6;

/// `ħ²/(2m)` expressed in MHz·m² (energy divided by Planck's constant).
pub fn kinetic_coefficient(mass: f64) -> f64 {
    HBAR / (4.0 * std::f64::consts::PI * mass) / MHZ
}

/// `k_B T / h` in MHz.
pub fn thermal_energy_mhz(temperature: f64) -> f64 {
    BOLTZMANN * temperature / PLANCK / MHZ
}
