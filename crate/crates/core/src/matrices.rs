//! 2×2 transfer, scattering and impedance matrices and the maps between them.
//!
//! Transfer matrices act on endpoint amplitudes: with
//! `ψ = A₊e^{ikx} + A₋e^{−ikx}` on the left and `B₊e^{ikx} + B₋e^{−ikx}` on
//! the right,
//!
//! ```text
//! (A₊e^{ik₁a}, A₋e^{−ik₁a})ᵀ = T (B₊e^{ik₂b}, B₋e^{−ik₂b})ᵀ
//! ```
//!
//! so a uniform stretch of length `d` is `diag(e^{−ikd}, e^{ikd})` and
//! cascades multiply left to right.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::potential::{wavenumber, Element, PotentialProfile, UnitSystem};
use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2 {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl Matrix2 {
    pub const IDENTITY: Self = Self { m11: ONE, m12: ZERO, m21: ZERO, m22: ONE };
    pub const ZERO: Self = Self { m11: ZERO, m12: ZERO, m21: ZERO, m22: ZERO };

    pub fn new(m11: Complex64, m12: Complex64, m21: Complex64, m22: Complex64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub fn diag(a: Complex64, b: Complex64) -> Self {
        Self::new(a, ZERO, ZERO, b)
    }

    pub fn det(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> Complex64 {
        self.m11 + self.m22
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.m11, self.m12, self.m21, self.m22]
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|c| c.is_finite())
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest elementwise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (*self - *other).max_abs()
    }

    pub fn to_pairs(&self) -> [[[f64; 2]; 2]; 2] {
        let p = |c: Complex64| [c.re, c.im];
        [[p(self.m11), p(self.m12)], [p(self.m21), p(self.m22)]]
    }

    pub fn from_pairs(p: [[[f64; 2]; 2]; 2]) -> Self {
        let c = |v: [f64; 2]| Complex64::new(v[0], v[1]);
        Self::new(c(p[0][0]), c(p[0][1]), c(p[1][0]), c(p[1][1]))
    }
}

impl Mul for Matrix2 {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        Self::new(
            self.m11 * b.m11 + self.m12 * b.m21,
            self.m11 * b.m12 + self.m12 * b.m22,
            self.m21 * b.m11 + self.m22 * b.m21,
            self.m21 * b.m12 + self.m22 * b.m22,
        )
    }
}

impl Add for Matrix2 {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        Self::new(self.m11 + b.m11, self.m12 + b.m12, self.m21 + b.m21, self.m22 + b.m22)
    }
}

impl Sub for Matrix2 {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        Self::new(self.m11 - b.m11, self.m12 - b.m12, self.m21 - b.m21, self.m22 - b.m22)
    }
}

// JSON form: [[[re, im], [re, im]], [[re, im], [re, im]]]
impl Serialize for Matrix2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_pairs().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        <[[[f64; 2]; 2]; 2]>::deserialize(d).map(Self::from_pairs)
    }
}

/// Transfer matrix together with the characteristic impedances of the media
/// it connects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub inner: Matrix2,
    pub z_left: Complex64,
    pub z_right: Complex64,
}

/// `S = [[t_ab, r_ba], [r_ab, t_ba]]`, mapping ingoing `(A₊, B₋)` to outgoing `(B₊, A₋)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringMatrix {
    pub inner: Matrix2,
    pub z_left: Complex64,
    pub z_right: Complex64,
}

/// Impedance matrix: `Z(a) = z₁ (z₂Z₁₁ − Z(b)Z₁₂) / (z₂Z₂₁ − Z(b)Z₂₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceMatrix {
    pub inner: Matrix2,
    pub z_left: Complex64,
    pub z_right: Complex64,
}

impl TransferMatrix {
    pub fn new(inner: Matrix2, z_left: Complex64, z_right: Complex64) -> Self {
        Self { inner, z_left, z_right }
    }

    pub fn identity(z: Complex64) -> Self {
        Self::new(Matrix2::IDENTITY, z, z)
    }

    pub fn det(&self) -> Complex64 {
        self.inner.det()
    }

    /// Half the trace, `χ`. Governs band (|χ| ≤ 1) versus gap behaviour of a cell.
    pub fn half_trace(&self) -> Complex64 {
        self.inner.trace() * 0.5
    }

    /// Determinant every physical chain must have: `z_right / z_left`
    /// (1 between identical media).
    pub fn expected_det(&self) -> Complex64 {
        self.z_right / self.z_left
    }

    pub fn compose(&self, other: &TransferMatrix) -> Result<TransferMatrix> {
        compose(self, other)
    }
}

pub fn compose(a: &TransferMatrix, b: &TransferMatrix) -> Result<TransferMatrix> {
    if a.z_right != b.z_left {
        return Err(Error::ImpedanceMismatch { left: a.z_right, right: b.z_left });
    }
    Ok(TransferMatrix::new(a.inner * b.inner, a.z_left, b.z_right))
}

/// Interface between media of characteristic impedance `z1` (left) and `z2`
/// (right), from continuity of ψ and ψ′:
/// `½ [[1 + z₂/z₁, 1 − z₂/z₁], [1 − z₂/z₁, 1 + z₂/z₁]]`.
pub fn interface_matrix(z1: Complex64, z2: Complex64) -> Result<TransferMatrix> {
    if z1 == ZERO {
        return Err(Error::SingularInput("interface from a medium with zero impedance"));
    }
    let ratio = z2 / z1;
    let p = (ONE + ratio) * 0.5;
    let m = (ONE - ratio) * 0.5;
    Ok(TransferMatrix::new(Matrix2::new(p, m, m, p), z1, z2))
}

/// Uniform stretch of length `d`: `diag(e^{−ikd}, e^{ikd})`.
pub fn propagation_matrix(k: Complex64, d: f64, units: UnitSystem) -> TransferMatrix {
    let phase = I * k * d;
    let z = units.impedance_of(k);
    TransferMatrix::new(Matrix2::diag((-phase).exp(), phase.exp()), z, z)
}

/// Delta barrier `α δ(x)` in a medium of wavenumber `k`, with
/// `Ω = mα/(ħ²k)`: `[[1 + iΩ, iΩ], [−iΩ, 1 − iΩ]]`.
pub fn delta_matrix(alpha: f64, k: Complex64, units: UnitSystem) -> Result<TransferMatrix> {
    if k == ZERO {
        return Err(Error::SingularInput("delta barrier in a medium with zero wavenumber"));
    }
    let omega = units.mass * alpha / (units.hbar * units.hbar * k);
    let io = I * omega;
    let z = units.impedance_of(k);
    Ok(TransferMatrix::new(Matrix2::new(ONE + io, io, -io, ONE - io), z, z))
}

/// `t = 1/T₁₁`, `r = T₂₁/T₁₁` (amplitudes referred to the system endpoints).
pub fn rt_from_transfer(t: &TransferMatrix) -> Result<(Complex64, Complex64)> {
    let t11 = t.inner.m11;
    if t11 == ZERO {
        return Err(Error::Resonance);
    }
    Ok((ONE / t11, t.inner.m21 / t11))
}

pub fn transfer_to_scattering(t: &TransferMatrix) -> Result<ScatteringMatrix> {
    let m = &t.inner;
    if m.m11 == ZERO {
        return Err(Error::Resonance);
    }
    let inner = Matrix2::new(
        ONE / m.m11,
        -m.m12 / m.m11,
        m.m21 / m.m11,
        m.m22 - m.m12 * m.m21 / m.m11,
    );
    Ok(ScatteringMatrix { inner, z_left: t.z_left, z_right: t.z_right })
}

pub fn scattering_to_transfer(s: &ScatteringMatrix) -> Result<TransferMatrix> {
    let m = &s.inner;
    if m.m11 == ZERO {
        return Err(Error::ZeroTransmission);
    }
    let inner = Matrix2::new(
        ONE / m.m11,
        -m.m12 / m.m11,
        m.m21 / m.m11,
        m.m22 - m.m12 * m.m21 / m.m11,
    );
    Ok(TransferMatrix::new(inner, s.z_left, s.z_right))
}

/// Linear map T → Z. It is `Z = ½ R T C` with `R = [[1, −1], [1, 1]]` and
/// `C = [[1, −1], [1, 1]]`, so `det Z = det T` for every input.
pub fn transfer_to_impedance_matrix(t: &TransferMatrix) -> ImpedanceMatrix {
    let Matrix2 { m11, m12, m21, m22 } = t.inner;
    let inner = Matrix2::new(
        (m11 - m21 + m12 - m22) * 0.5,
        (-m11 + m21 + m12 - m22) * 0.5,
        (m11 + m21 + m12 + m22) * 0.5,
        (-m11 - m21 + m12 + m22) * 0.5,
    );
    ImpedanceMatrix { inner, z_left: t.z_left, z_right: t.z_right }
}

pub fn impedance_matrix_to_transfer(z: &ImpedanceMatrix) -> TransferMatrix {
    let Matrix2 { m11, m12, m21, m22 } = z.inner;
    let inner = Matrix2::new(
        (m11 - m12 + m21 - m22) * 0.5,
        (m11 + m12 + m21 + m22) * 0.5,
        (-m11 + m12 + m21 - m22) * 0.5,
        (-m11 - m12 + m21 + m22) * 0.5,
    );
    TransferMatrix::new(inner, z.z_left, z.z_right)
}

/// Scattering matrix straight from impedance-matrix entries (symmetric leads).
pub fn impedance_matrix_to_scattering(z: &ImpedanceMatrix) -> Result<ScatteringMatrix> {
    let Matrix2 { m11, m12, m21, m22 } = z.inner;
    let den = m11 - m12 + m21 - m22;
    if den == ZERO {
        return Err(Error::Resonance);
    }
    let s11 = Complex64::new(2.0, 0.0) / den;
    let inner = Matrix2::new(s11, -(m11 + m12 + m21 + m22) / den, (-m11 + m12 + m21 - m22) / den, s11);
    Ok(ScatteringMatrix { inner, z_left: z.z_left, z_right: z.z_right })
}

/// Shared pieces of the rectangular-barrier closed forms: `ϰ_b = −i k_b`,
/// `k₀ = m z₀/ħ` and the hyperbolic functions of `ϰ_b L`.
struct BarrierParts {
    kappa: Complex64,
    k0: Complex64,
    sh: Complex64,
    ch: Complex64,
}

fn barrier_parts(
    energy: f64,
    barrier: f64,
    length: f64,
    z0: Complex64,
    units: UnitSystem,
) -> Result<BarrierParts> {
    if energy == barrier {
        return Err(Error::SingularInput("energy equals the barrier height"));
    }
    if z0 == ZERO {
        return Err(Error::SingularInput("lead impedance is zero"));
    }
    let kappa = -I * wavenumber(energy, barrier, units);
    let x = kappa * length;
    Ok(BarrierParts { kappa, k0: units.wavenumber_of(z0), sh: x.sinh(), ch: x.cosh() })
}

/// Closed-form transfer matrix of a rectangular barrier of height `barrier`
/// and width `length` embedded in leads of impedance `z0`:
///
/// ```text
/// T₁₁ = ch(ϰL) + i(ϰ² − k₀²)/(2k₀ϰ) sh(ϰL)     T₁₂ =  i(k₀² + ϰ²)/(2k₀ϰ) sh(ϰL)
/// T₂₁ = −i(k₀² + ϰ²)/(2k₀ϰ) sh(ϰL)            T₂₂ = ch(ϰL) − i(ϰ² − k₀²)/(2k₀ϰ) sh(ϰL)
/// ```
///
/// Valid above the barrier too, where `ϰ` turns imaginary.
pub fn rect_barrier_transfer(
    energy: f64,
    barrier: f64,
    length: f64,
    z0: Complex64,
    units: UnitSystem,
) -> Result<TransferMatrix> {
    let BarrierParts { kappa, k0, sh, ch } = barrier_parts(energy, barrier, length, z0, units)?;
    let denom = k0 * kappa * 2.0;
    let diag = I * (kappa * kappa - k0 * k0) / denom * sh;
    let off = I * (k0 * k0 + kappa * kappa) / denom * sh;
    Ok(TransferMatrix::new(Matrix2::new(ch + diag, off, -off, ch - diag), z0, z0))
}

/// Closed-form impedance matrix of the same barrier, normalized to `det = 1`:
/// `[[iρ sh, −ch], [ch, (i/ρ) sh]]` with `ρ = ϰ/k₀`. The unnormalized form
/// `[[ρ² sh, iρ ch], [−iρ ch, sh]]` is this matrix times `−iρ` and defines the
/// same fractional-linear map.
pub fn rect_barrier_impedance_matrix(
    energy: f64,
    barrier: f64,
    length: f64,
    z0: Complex64,
    units: UnitSystem,
) -> Result<ImpedanceMatrix> {
    let BarrierParts { kappa, k0, sh, ch } = barrier_parts(energy, barrier, length, z0, units)?;
    let rho = kappa / k0;
    let inner = Matrix2::new(I * rho * sh, -ch, ch, I / rho * sh);
    Ok(ImpedanceMatrix { inner, z_left: z0, z_right: z0 })
}

/// Transfer matrix of a whole profile, lead to lead, as the ordered product of
/// interface, propagation and delta factors.
pub fn profile_transfer(profile: &PotentialProfile, energy: f64) -> Result<TransferMatrix> {
    let units = profile.units;
    let mut k = wavenumber(energy, profile.left_lead.potential, units);
    let mut total = TransferMatrix::identity(units.impedance_of(k));
    for element in &profile.elements {
        match *element {
            Element::Segment(s) => {
                let k_seg = wavenumber(energy, s.potential, units);
                let iface = interface_matrix(total.z_right, units.impedance_of(k_seg))?;
                total = total.compose(&iface)?;
                total = total.compose(&propagation_matrix(k_seg, s.length, units))?;
                k = k_seg;
            }
            Element::Delta(d) => {
                total = total.compose(&delta_matrix(d.alpha, k, units)?)?;
            }
        }
    }
    let z_out = units.impedance_of(wavenumber(energy, profile.right_lead.potential, units));
    total.compose(&interface_matrix(total.z_right, z_out)?)
}
