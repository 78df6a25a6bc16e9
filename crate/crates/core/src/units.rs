//! Conversion from laboratory units to the oscillator units used everywhere else.

const HBAR: f64 = 1.054_571_817e-34;
const AMU: f64 = 1.660_539_066_60e-27;
pub const RB87_MASS_AMU: f64 = 86.909_180_527;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillatorUnits {
    /// Axial trap frequency in Hz.
    pub axial_hz: f64,
    /// Particle mass in atomic mass units.
    pub mass_amu: f64,
}

impl OscillatorUnits {
    pub fn rb87(axial_hz: f64) -> Self {
        Self {
            axial_hz,
            mass_amu: RB87_MASS_AMU,
        }
    }

    /// l = √(ħ/mω) in metres for trap frequency `hz`.
    pub fn length_for(&self, hz: f64) -> f64 {
        (HBAR / (self.mass_amu * AMU * 2.0 * std::f64::consts::PI * hz)).sqrt()
    }

    pub fn axial_length(&self) -> f64 {
        self.length_for(self.axial_hz)
    }

    /// l_R = √(l_⊥ λ) in units of l_x, with ω_⊥ = `radial_ratio`·ω_x.
    pub fn rayleigh_length(&self, wavelength_m: f64, radial_ratio: f64) -> f64 {
        let l_perp = self.length_for(self.axial_hz * radial_ratio);
        (l_perp * wavelength_m).sqrt() / self.axial_length()
    }
}
