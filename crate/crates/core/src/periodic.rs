//! Closed forms for N identical cells.
//!
//! A unimodular 2×2 matrix satisfies `T² − 2χT + I = 0` with `χ = ½ Tr T`,
//! hence `T^N = T U_{N−1}(χ) − I U_{N−2}(χ)` with `U_n` the Chebyshev
//! polynomials of the second kind. Everything here builds on that identity.

use num_complex::Complex64;

use crate::impedance::propagation_constant;
use crate::matrices::{
    profile_transfer, transfer_to_impedance_matrix, Matrix2, TransferMatrix,
};
use crate::potential::{PotentialProfile, UnitSystem};
use crate::{Error, Result};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Relative unimodularity tolerance accepted by [`matrix_power_chebyshev`].
pub const UNIMODULAR_TOL: f64 = 1e-10;

/// `χ = ½ Tr T` and the Bloch phase `λ = arccos χ` (principal branch, so
/// `λ ∈ [0, π]` inside bands and complex in gaps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochParameter {
    pub chi: Complex64,
    pub lambda: Complex64,
}

impl BlochParameter {
    pub fn from_chi(chi: Complex64) -> Self {
        Self { chi, lambda: chi.acos() }
    }

    pub fn of(t: &TransferMatrix) -> Self {
        Self::from_chi(t.half_trace())
    }

    /// Inside a spectral gap of the infinite lattice.
    pub fn in_gap(&self) -> bool {
        self.chi.re.abs() > 1.0
    }
}

/// `U_n(χ)` by the three-term recurrence `U_{n+1} = 2χU_n − U_{n−1}` from
/// `U_{−1} = 0`, `U_0 = 1`. Negative orders below −1 use `U_{−n−2} = −U_n`.
pub fn chebyshev_u(n: i64, chi: Complex64) -> Complex64 {
    if n < -1 {
        return -chebyshev_u(-n - 2, chi);
    }
    chebyshev_pair(n + 1, chi).0
}

/// `(U_{n−1}, U_{n−2})` for `n ≥ 0`, from a single recurrence pass.
fn chebyshev_pair(n: i64, chi: Complex64) -> (Complex64, Complex64) {
    // (U_{j-1}, U_{j-2}) at j = 0 is (U_{-1}, U_{-2}) = (0, -1)
    let (mut prev, mut prev2) = (ZERO, -ONE);
    for _ in 0..n {
        let next = chi * prev * 2.0 - prev2;
        prev2 = prev;
        prev = next;
    }
    (prev, prev2)
}

/// `U_n(χ) = sin((n+1)λ)/sin λ` with `λ = arccos χ`. Degenerate (0/0) at
/// `χ = ±1`; prefer [`chebyshev_u`] there.
pub fn chebyshev_u_trig(n: i64, chi: Complex64) -> Complex64 {
    let lambda = chi.acos();
    (lambda * (n + 1) as f64).sin() / lambda.sin()
}

fn check_unimodular(t: &TransferMatrix) -> Result<()> {
    if t.z_left != t.z_right {
        return Err(Error::ImpedanceMismatch { left: t.z_right, right: t.z_left });
    }
    let m = &t.inner;
    let scale = (m.m11 * m.m22).norm() + (m.m12 * m.m21).norm();
    let det = m.det();
    if (det - ONE).norm() > UNIMODULAR_TOL * scale.max(1.0) {
        return Err(Error::NotUnimodular(det));
    }
    Ok(())
}

/// `T^N = T U_{N−1}(χ) − I U_{N−2}(χ)`.
pub fn matrix_power_chebyshev(t: &TransferMatrix, n: u32) -> Result<TransferMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("cell count must be positive".into()));
    }
    check_unimodular(t)?;
    let (u1, u2) = chebyshev_pair(n as i64, t.half_trace());
    let m = &t.inner;
    let inner = Matrix2::new(m.m11 * u1 - u2, m.m12 * u1, m.m21 * u1, m.m22 * u1 - u2);
    Ok(TransferMatrix::new(inner, t.z_left, t.z_right))
}

/// Transmission and reflection amplitudes of `N` cells:
/// `t = 1/(T₁₁U_{N−1} − U_{N−2})`, `r = T₂₁U_{N−1}/(T₁₁U_{N−1} − U_{N−2})`.
pub fn rt_n(t: &TransferMatrix, n: u32) -> Result<(Complex64, Complex64)> {
    if n == 0 {
        return Err(Error::InvalidParameter("cell count must be positive".into()));
    }
    let (u1, u2) = chebyshev_pair(n as i64, t.half_trace());
    let den = t.inner.m11 * u1 - u2;
    if den == ZERO {
        return Err(Error::Resonance);
    }
    Ok((ONE / den, t.inner.m21 * u1 / den))
}

/// One elementary cell of a periodic cascade, evaluated at a fixed energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSpec {
    pub transfer: TransferMatrix,
    /// Characteristic impedance at the cell entry.
    pub z0: Complex64,
    /// Characteristic impedance at the cell exit.
    pub z_n: Complex64,
    pub period: f64,
}

impl CellSpec {
    pub fn new(transfer: TransferMatrix, period: f64) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::InvalidParameter(format!("period must be positive, got {period}")));
        }
        if transfer.z_left != transfer.z_right {
            return Err(Error::ImpedanceMismatch { left: transfer.z_right, right: transfer.z_left });
        }
        Ok(Self { transfer, z0: transfer.z_left, z_n: transfer.z_right, period })
    }

    /// Cell given as a profile whose leads are the embedding medium; the
    /// period is the total segment length.
    pub fn from_profile(cell: &PotentialProfile, energy: f64) -> Result<Self> {
        Self::new(profile_transfer(cell, energy)?, cell.total_length())
    }

    pub fn bloch(&self) -> BlochParameter {
        BlochParameter::of(&self.transfer)
    }
}

/// Spacers between the leads and the periodic core. The left spacer spans
/// `left_length + period` in the cell's entry medium, the right one
/// `right_length` in its exit medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffixSpec {
    pub left_length: f64,
    pub right_length: f64,
    pub z_left: Complex64,
    pub z_right: Complex64,
}

fn cheb_u1_u2(cell: &CellSpec, n: u32) -> Result<(Complex64, Complex64)> {
    if n == 0 {
        return Err(Error::InvalidParameter("cell count must be positive".into()));
    }
    Ok(chebyshev_pair(n as i64, cell.transfer.half_trace()))
}

/// Impedance at the entry of `N` cells terminated by `z_load`:
///
/// ```text
/// Z(0) = z₀ [Z₁₁U_{N−1} z_N − (Z₁₂U_{N−1} + U_{N−2}) Z(N)]
///           / [(Z₂₁U_{N−1} − U_{N−2}) z_N − Z₂₂U_{N−1} Z(N)]
/// ```
pub fn input_impedance_n(cell: &CellSpec, n: u32, z_load: Complex64) -> Result<Complex64> {
    let (u1, u2) = cheb_u1_u2(cell, n)?;
    let z = transfer_to_impedance_matrix(&cell.transfer).inner;
    let num = z.m11 * u1 * cell.z_n - (z.m12 * u1 + u2) * z_load;
    let den = (z.m21 * u1 - u2) * cell.z_n - z.m22 * u1 * z_load;
    if den == ZERO {
        return Err(Error::Node);
    }
    let out = cell.z0 * num / den;
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::Node)
    }
}

/// Eigenenergy residual of a finite periodic structure with spacers:
/// lead `z_L` | spacer `l_L + l` | N cells | spacer `l_R` | lead `z_R`.
///
/// The bound-state condition `Z(−l_L − l) = −z_L` is written as
///
/// ```text
/// (z₀ th γ₀(l_L+l) − z_L) / (z₀ − z_L th γ₀(l_L+l))
///   = [Z₁₁U_{N−1} p − (Z₁₂U_{N−1} + U_{N−2}) q] / [(Z₂₁U_{N−1} − U_{N−2}) p − Z₂₂U_{N−1} q]
/// p = z_N − z_R th γ_N l_R,   q = z_R − z_N th γ_N l_R
/// ```
///
/// with every `th` replaced by `sh/ch` and all denominators cleared, then
/// divided by the magnitude of its two terms. Zeros are eigenenergies. For
/// real potentials with evanescent leads and a propagating cell interior the
/// value is purely imaginary.
pub fn eigen_residual_fps(cell: &CellSpec, affix: &AffixSpec, n: u32, units: UnitSystem) -> Result<Complex64> {
    if affix.left_length < 0.0 || affix.right_length < 0.0 {
        return Err(Error::InvalidParameter("spacer lengths must be non-negative".into()));
    }
    let (u1, u2) = cheb_u1_u2(cell, n)?;
    let z = transfer_to_impedance_matrix(&cell.transfer).inner;
    let (z0, zn, zl, zr) = (cell.z0, cell.z_n, affix.z_left, affix.z_right);

    let xl = propagation_constant(z0, units) * (affix.left_length + cell.period);
    let (shl, chl) = (xl.sinh(), xl.cosh());
    let xr = propagation_constant(zn, units) * affix.right_length;
    let (shr, chr) = (xr.sinh(), xr.cosh());

    let lhs_num = z0 * shl - zl * chl;
    let lhs_den = z0 * chl - zl * shl;
    let p = zn * chr - zr * shr;
    let q = zr * chr - zn * shr;
    let rhs_num = z.m11 * u1 * p - (z.m12 * u1 + u2) * q;
    let rhs_den = (z.m21 * u1 - u2) * p - z.m22 * u1 * q;

    let a = lhs_num * rhs_den;
    let b = rhs_num * lhs_den;
    let envelope = a.norm() + b.norm();
    if !(envelope.is_finite()) {
        return Err(Error::InvalidParameter("residual overflowed".into()));
    }
    if envelope == 0.0 {
        return Ok(ZERO);
    }
    Ok((a - b) / envelope)
}
