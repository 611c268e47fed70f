//! Quantum wave impedance `Z(x) = (ħ/im) ψ′(x)/ψ(x)`.
//!
//! `Z` is continuous across potential steps, jumps by `i2α/ħ` across a delta
//! barrier, and inside a uniform region follows a fractional-linear map of
//! the position. Values are iterated from the right lead (the load) to the
//! left lead (the input).

use num_complex::Complex64;

use crate::matrices::ImpedanceMatrix;
use crate::potential::{wavenumber, Element, PotentialProfile, UnitSystem};
use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn checked_ratio(num: Complex64, den: Complex64, err: Error) -> Result<Complex64> {
    if den == ZERO {
        return Err(err);
    }
    let q = num / den;
    if q.is_finite() {
        Ok(q)
    } else {
        Err(err)
    }
}

/// `γ = imz/ħ` (equals `ik`).
pub fn propagation_constant(z: Complex64, units: UnitSystem) -> Complex64 {
    I * z * (units.mass / units.hbar)
}

/// `Z = z (A₊e^{ikx} − A₋e^{−ikx}) / (A₊e^{ikx} + A₋e^{−ikx})`.
pub fn impedance_from_amplitudes(
    a_plus: Complex64,
    a_minus: Complex64,
    k: Complex64,
    x: f64,
    z: Complex64,
) -> Result<Complex64> {
    let fwd = a_plus * (I * k * x).exp();
    let bwd = a_minus * (-I * k * x).exp();
    Ok(z * checked_ratio(fwd - bwd, fwd + bwd, Error::Node)?)
}

/// Moves an impedance a distance `d` to the left through a uniform region of
/// characteristic impedance `z0`:
///
/// `Z_near = z₀ (Z_far ch γd − z₀ sh γd) / (z₀ ch γd − Z_far sh γd)`.
pub fn propagate_uniform(z_far: Complex64, z0: Complex64, gamma0: Complex64, d: f64) -> Result<Complex64> {
    let x = gamma0 * d;
    let (sh, ch) = (x.sinh(), x.cosh());
    Ok(z0 * checked_ratio(z_far * ch - z0 * sh, z0 * ch - z_far * sh, Error::Node)?)
}

/// Impedance just left of a delta barrier `α δ(x)` given the value just right of it.
pub fn delta_jump(z_right_side: Complex64, alpha: f64, units: UnitSystem) -> Complex64 {
    z_right_side + I * (2.0 * alpha / units.hbar)
}

/// `Z(a) = z₁ (z₂Z₁₁ − Z(b)Z₁₂) / (z₂Z₂₁ − Z(b)Z₂₂)`.
pub fn apply_impedance_matrix(
    zm: &ImpedanceMatrix,
    z1: Complex64,
    z2: Complex64,
    z_b: Complex64,
) -> Result<Complex64> {
    let m = &zm.inner;
    Ok(z1 * checked_ratio(z2 * m.m11 - z_b * m.m12, z2 * m.m21 - z_b * m.m22, Error::Node)?)
}

/// `ρ = (z − Z)/(z + Z)`: the reflection amplitude seen from a lead of
/// impedance `z_lead` looking into a load `Z`.
pub fn reflection_from_impedance(z: Complex64, z_lead: Complex64) -> Result<Complex64> {
    checked_ratio(z_lead - z, z_lead + z, Error::BoundStatePole)
}

/// Inverse of [`reflection_from_impedance`]: `Z = z (1 − ρ)/(1 + ρ)`.
pub fn impedance_from_reflection(rho: Complex64, z_lead: Complex64) -> Result<Complex64> {
    Ok(z_lead * checked_ratio(ONE - rho, ONE + rho, Error::Node)?)
}

/// Result of sweeping a profile from its right end to its left end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceSweep {
    /// Impedance at the left end of the structure.
    pub input: Complex64,
    /// `ψ(left end) / ψ(right end)`.
    pub psi_ratio: Complex64,
}

/// Iterates impedance (and the wavefunction ratio alongside it) from the
/// right end, starting at `z_load`, through every segment and delta.
pub fn sweep_profile(profile: &PotentialProfile, energy: f64, z_load: Complex64) -> Result<ImpedanceSweep> {
    let units = profile.units;
    let mut z = z_load;
    let mut psi_ratio = ONE;
    for element in profile.elements.iter().rev() {
        match *element {
            Element::Segment(s) => {
                let k = wavenumber(energy, s.potential, units);
                let zc = units.impedance_of(k);
                if zc == ZERO {
                    return Err(Error::SingularInput("energy equals a segment potential"));
                }
                let x = I * k * s.length;
                let (sh, ch) = (x.sinh(), x.cosh());
                // ψ(a) = ψ(b) [ch γd − (Z(b)/z) sh γd]
                psi_ratio *= ch - z / zc * sh;
                z = propagate_uniform(z, zc, propagation_constant(zc, units), s.length)?;
            }
            Element::Delta(d) => z = delta_jump(z, d.alpha, units),
        }
    }
    Ok(ImpedanceSweep { input: z, psi_ratio })
}

/// Input impedance at the left end of a profile terminated by `z_load`.
pub fn input_impedance(profile: &PotentialProfile, energy: f64, z_load: Complex64) -> Result<Complex64> {
    sweep_profile(profile, energy, z_load).map(|s| s.input)
}

/// Transmission and reflection amplitudes obtained purely from the impedance
/// iteration: the right lead carries one outgoing wave (`Z = z_right`), the
/// input impedance gives `r`, and the tracked wavefunction ratio gives `t`.
pub fn scattering_from_impedance(profile: &PotentialProfile, energy: f64) -> Result<(Complex64, Complex64)> {
    let units = profile.units;
    let z_left = units.impedance_of(wavenumber(energy, profile.left_lead.potential, units));
    let z_right = units.impedance_of(wavenumber(energy, profile.right_lead.potential, units));
    if z_left == ZERO || z_right == ZERO {
        return Err(Error::SingularInput("energy equals a lead potential"));
    }
    let sweep = sweep_profile(profile, energy, z_right)?;
    let r = reflection_from_impedance(sweep.input, z_left)?;
    // ψ_L = A₊ + A₋ and A₊ − A₋ = (Z/z_L) ψ_L, with B₊ = ψ_R = 1.
    let a_plus = sweep.psi_ratio * (ONE + sweep.input / z_left) * 0.5;
    let t = checked_ratio(ONE, a_plus, Error::Resonance)?;
    Ok((t, r))
}
