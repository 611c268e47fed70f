//! Finite Dirac comb between two confining leads and its surface (Tamm) states.
//!
//! Layout along x: lead `U_E` | free stretch `l` | N × (delta `α`, free
//! stretch `l`) | lead `U_E`. The structure is mirror symmetric. Inside the
//! comb `U = 0`, so for `0 < E < U_E` the wave propagates in the comb and
//! decays in both leads.
//!
//! Per-energy quantities: `k₀ = √(2mE)/ħ`, `z₀ = ħk₀/m`, `ξ = k₀l`,
//! `Ω = α/(z₀ħ)`, and `q = ϰ_E/k₀` with `ϰ_E` the decay constant in the
//! leads. The cell Bloch parameter is `χ = cos ξ + Ω sin ξ`; Tamm levels
//! live where `|χ| > 1`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matrices::{
    compose, delta_matrix, profile_transfer, propagation_matrix, ImpedanceMatrix, Matrix2,
    TransferMatrix,
};
use crate::potential::{wavenumber, PotentialProfile, ProfileError, UnitSystem};
use crate::roots::{bisect, linspace, sign_change_brackets};
use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Smallest scan grid accepted by the solvers.
pub const MIN_GRID: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombSpec {
    pub alpha: f64,
    #[serde(rename = "l")]
    pub period: f64,
    #[serde(rename = "N")]
    pub cells: u32,
    #[serde(rename = "U_E")]
    pub lead_potential: f64,
    #[serde(default)]
    pub units: UnitSystem,
}

#[derive(Serialize, Deserialize)]
struct CombDocument {
    comb: CombSpec,
}

/// Dimensionless quantities of the comb at one energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombQuantities {
    pub k0: f64,
    pub z0: f64,
    pub xi: f64,
    pub omega: f64,
    /// `ϰ_E / k₀`.
    pub q: f64,
}

impl CombQuantities {
    /// `χ = cos ξ + Ω sin ξ`.
    pub fn chi(&self) -> f64 {
        self.xi.cos() + self.omega * self.xi.sin()
    }
}

impl CombSpec {
    pub fn new(alpha: f64, period: f64, cells: u32, lead_potential: f64) -> Self {
        Self { alpha, period, cells, lead_potential, units: UnitSystem::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.units.is_valid() {
            return Err(Error::InvalidParameter("units must be positive and finite".into()));
        }
        if !self.alpha.is_finite() || !self.lead_potential.is_finite() {
            return Err(Error::InvalidParameter("alpha and U_E must be finite".into()));
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::InvalidParameter(format!("period must be positive, got {}", self.period)));
        }
        if self.cells == 0 {
            return Err(Error::InvalidParameter("cell count must be at least 1".into()));
        }
        Ok(())
    }

    /// Requires `E > 0`. `q` is computed for `E < U_E` and is 0 otherwise.
    pub fn quantities(&self, energy: f64) -> Result<CombQuantities> {
        if !(energy > 0.0) {
            return Err(Error::SingularInput("comb quantities need E > 0"));
        }
        let u = self.units;
        let k0 = wavenumber(energy, 0.0, u).re;
        let z0 = u.hbar * k0 / u.mass;
        let kappa = wavenumber(energy, self.lead_potential, u).im;
        Ok(CombQuantities {
            k0,
            z0,
            xi: k0 * self.period,
            omega: self.alpha / (z0 * u.hbar),
            q: kappa / k0,
        })
    }

    /// The full structure as a generic profile.
    pub fn to_profile(&self) -> PotentialProfile {
        let mut elements = Vec::with_capacity(2 * self.cells as usize + 1);
        elements.push(PotentialProfile::segment(self.period, 0.0));
        for _ in 0..self.cells {
            elements.push(PotentialProfile::delta(self.alpha));
            elements.push(PotentialProfile::segment(self.period, 0.0));
        }
        let mut p = PotentialProfile::new(self.lead_potential, elements, self.lead_potential, self.units);
        if self.alpha == 0.0 {
            p.elements.retain(|e| !matches!(e, crate::potential::Element::Delta(_)));
        }
        p
    }

    /// Pretty JSON wrapped as `{"comb": {...}}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CombDocument { comb: *self }).expect("comb serializes")
    }
}

pub fn parse_comb(text: &str) -> std::result::Result<CombSpec, ProfileError> {
    let doc: CombDocument = serde_json::from_str(text).map_err(|e| ProfileError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    doc.comb.validate().map_err(|e| ProfileError::Semantic(e.to_string()))?;
    Ok(doc.comb)
}

/// `Z₁₁ = −sh iξ + 2iΩ ch iξ`, `Z₁₂ = −ch iξ + 2iΩ sh iξ`, `Z₂₁ = ch iξ`,
/// `Z₂₂ = sh iξ`; determinant 1.
pub fn comb_cell_impedance_matrix(energy: f64, spec: &CombSpec) -> Result<ImpedanceMatrix> {
    let cq = spec.quantities(energy)?;
    let x = I * cq.xi;
    let (sh, ch) = (x.sinh(), x.cosh());
    let two_i_omega = I * (2.0 * cq.omega);
    let z0 = Complex64::new(cq.z0, 0.0);
    Ok(ImpedanceMatrix {
        inner: Matrix2::new(-sh + two_i_omega * ch, -ch + two_i_omega * sh, ch, sh),
        z_left: z0,
        z_right: z0,
    })
}

/// One cell, delta then free stretch:
/// `[[(1+iΩ)e^{−iξ}, iΩe^{iξ}], [−iΩe^{−iξ}, (1−iΩ)e^{iξ}]]`.
pub fn comb_cell_transfer(energy: f64, spec: &CombSpec) -> Result<TransferMatrix> {
    let cq = spec.quantities(energy)?;
    let k = Complex64::new(cq.k0, 0.0);
    compose(&delta_matrix(spec.alpha, k, spec.units)?, &propagation_matrix(k, spec.period, spec.units))
}

/// `(λ, cot((N+1)λ))` for a gap energy, or `OutOfGap`.
fn gap_phase(energy: f64, spec: &CombSpec, cq: &CombQuantities) -> Result<(Complex64, Complex64)> {
    let chi = cq.chi();
    if chi.abs() <= 1.0 {
        return Err(Error::OutOfGap { energy, chi });
    }
    let lambda = Complex64::new(chi, 0.0).acos();
    let arg = lambda * (spec.cells as f64 + 1.0);
    Ok((lambda, arg.cos() / arg.sin()))
}

fn surface_window(energy: f64, spec: &CombSpec) -> Result<CombQuantities> {
    if !(energy > 0.0 && energy < spec.lead_potential) {
        return Err(Error::InvalidParameter(format!(
            "surface states need 0 < E < U_E, got E = {energy}"
        )));
    }
    spec.quantities(energy)
}

fn real_part(value: Complex64) -> f64 {
    debug_assert!(
        value.im.abs() <= 1e-9 * value.re.abs().max(1.0),
        "residual should be real, got {value}"
    );
    value.re
}

/// Impedance-form surface-state condition
///
/// `cos λ − sin λ cot((N+1)λ) = ((1 − q²) sin ξ − 2q cos ξ) / (2(Ω − q))`
///
/// with the right-hand denominator cleared. Real in gaps; no poles there.
pub fn tamm_residual_impedance(energy: f64, spec: &CombSpec) -> Result<f64> {
    let cq = surface_window(energy, spec)?;
    let (lambda, cot) = gap_phase(energy, spec, &cq)?;
    let g = lambda.cos() - lambda.sin() * cot;
    let (s, c) = cq.xi.sin_cos();
    let rhs_num = (1.0 - cq.q * cq.q) * s - 2.0 * cq.q * c;
    Ok(real_part(g * (2.0 * (cq.omega - cq.q)) - rhs_num))
}

/// Transfer-matrix (cotangent) form `cot((N+1)λ) = (μ² − 1)/(2μ)` with
/// `μ = sin λ / ((q − Ω) sin ξ)`, cleared to
/// `2 sin λ · d · cot((N+1)λ) − sin²λ + d²`, `d = (q − Ω) sin ξ`.
pub fn tamm_residual_cot(energy: f64, spec: &CombSpec) -> Result<f64> {
    let cq = surface_window(energy, spec)?;
    let (lambda, cot) = gap_phase(energy, spec, &cq)?;
    let s = lambda.sin();
    let d = (cq.q - cq.omega) * cq.xi.sin();
    Ok(real_part(s * d * cot * 2.0 - s * s + d * d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TammMethod {
    ImpedanceForm,
    CotForm,
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TammLevel {
    pub energy: f64,
    /// Absolute residual of the defining condition at `energy`.
    pub residual: f64,
    pub method: TammMethod,
    /// Distance to the matching root of the other residual form; infinite
    /// when the other form has no partner. Absent for brute-force levels.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_form_discrepancy: Option<f64>,
}

fn check_range(range: (f64, f64), grid: usize) -> Result<()> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParameter(format!("empty energy range [{lo}, {hi}]")));
    }
    if grid < MIN_GRID {
        return Err(Error::InvalidParameter(format!("grid must be at least {MIN_GRID}, got {grid}")));
    }
    Ok(())
}

/// Scan points for the residuals: the grid samples inside gaps plus each gap
/// edge located by bisection on `|χ| − 1`, grouped per gap.
fn gap_scan_points(spec: &CombSpec, range: (f64, f64), grid: usize) -> Vec<Vec<f64>> {
    let (lo, hi) = range;
    let xs = linspace(lo, hi, grid);
    let chis: Vec<f64> = xs
        .par_iter()
        .map(|&e| spec.quantities(e).map(|q| q.chi()).unwrap_or(0.0))
        .collect();
    let in_gap = |chi: f64| chi.abs() > 1.0;
    let edge = |band: f64, gap: f64| -> f64 {
        let (mut b, mut g) = (band, gap);
        let tol = 1e-14 * (hi - lo);
        for _ in 0..200 {
            if (g - b).abs() <= tol {
                break;
            }
            let mid = 0.5 * (b + g);
            if mid == b || mid == g {
                break;
            }
            match spec.quantities(mid) {
                Ok(q) if in_gap(q.chi()) => g = mid,
                _ => b = mid,
            }
        }
        g
    };

    let mut gaps = Vec::new();
    let mut i = 0;
    while i < xs.len() {
        if !in_gap(chis[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < xs.len() && in_gap(chis[i]) {
            i += 1;
        }
        let mut pts = Vec::with_capacity(i - start + 2);
        if start > 0 {
            let e = edge(xs[start - 1], xs[start]);
            if e < xs[start] {
                pts.push(e);
            }
        }
        pts.extend_from_slice(&xs[start..i]);
        if i < xs.len() {
            let e = edge(xs[i], xs[i - 1]);
            if e > xs[i - 1] {
                pts.push(e);
            }
        }
        gaps.push(pts);
    }
    gaps
}

fn roots_in_gaps<F>(gaps: &[Vec<f64>], residual: &F, tol: f64) -> Vec<f64>
where
    F: Fn(f64) -> Option<f64> + Sync,
{
    let mut roots = Vec::new();
    for pts in gaps {
        let values: Vec<Option<f64>> = pts.par_iter().map(|&e| residual(e)).collect();
        let brackets = sign_change_brackets(pts, &values);
        let found: Vec<f64> = brackets
            .par_iter()
            .map(|&(a, b, fa, fb)| bisect(residual, a, b, fa, fb, tol))
            .collect();
        roots.extend(found);
    }
    roots
}

/// Pairs each root in `a` with the nearest unused root in `b`; unmatched
/// entries get `f64::INFINITY`.
pub fn match_roots(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut used = vec![false; b.len()];
    a.iter()
        .map(|&x| {
            let best = b
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .min_by(|(_, p), (_, q)| (x - **p).abs().total_cmp(&(x - **q).abs()));
            match best {
                Some((j, &y)) => {
                    used[j] = true;
                    (x - y).abs()
                }
                None => f64::INFINITY,
            }
        })
        .collect()
}

/// Tamm levels in `range ⊂ (0, U_E)`: sign changes of the impedance-form
/// residual inside every spectral gap met by the scan, bisected to
/// `10⁻¹² × span`. Each level carries its distance to the cot-form root.
pub fn solve_tamm(spec: &CombSpec, range: (f64, f64), grid: usize) -> Result<Vec<TammLevel>> {
    solve_tamm_with(spec, range, grid, |e| tamm_residual_impedance(e, spec).ok())
}

/// [`solve_tamm`] with a caller-supplied primary residual.
#[doc(hidden)]
pub fn solve_tamm_with<F>(spec: &CombSpec, range: (f64, f64), grid: usize, residual: F) -> Result<Vec<TammLevel>>
where
    F: Fn(f64) -> Option<f64> + Sync,
{
    spec.validate()?;
    check_range(range, grid)?;
    let (lo, hi) = range;
    if !(lo >= 0.0 && hi <= spec.lead_potential) {
        return Err(Error::InvalidParameter(format!(
            "energy range [{lo}, {hi}] must lie inside (0, U_E = {})",
            spec.lead_potential
        )));
    }
    let tol = 1e-12 * (hi - lo);
    let (lo, hi) = (lo.max(tol), hi.min(spec.lead_potential - tol));
    if lo >= hi {
        return Ok(Vec::new());
    }
    let gaps = gap_scan_points(spec, (lo, hi), grid);
    let primary = roots_in_gaps(&gaps, &residual, tol);
    let cot = roots_in_gaps(&gaps, &|e| tamm_residual_cot(e, spec).ok(), tol);
    let discrepancy = match_roots(&primary, &cot);
    if cot.len() != primary.len() {
        log::warn!(
            "impedance form found {} level(s), cot form {}",
            primary.len(),
            cot.len()
        );
    }
    let mut levels: Vec<TammLevel> = primary
        .iter()
        .zip(discrepancy)
        .map(|(&energy, d)| TammLevel {
            energy,
            residual: residual(energy).map_or(f64::NAN, f64::abs),
            method: TammMethod::ImpedanceForm,
            cross_form_discrepancy: Some(d),
        })
        .collect();
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(levels)
}

/// Sorted root set of a single method over `range ⊂ (0, U_E)`.
pub fn tamm_roots(spec: &CombSpec, range: (f64, f64), grid: usize, method: TammMethod) -> Result<Vec<f64>> {
    let mut roots = match method {
        TammMethod::ImpedanceForm => solve_tamm(spec, range, grid)?.into_iter().map(|l| l.energy).collect(),
        TammMethod::CotForm => {
            spec.validate()?;
            check_range(range, grid)?;
            let tol = 1e-12 * (range.1 - range.0);
            let (lo, hi) = (range.0.max(tol), range.1.min(spec.lead_potential - tol));
            let gaps = gap_scan_points(spec, (lo, hi), grid);
            roots_in_gaps(&gaps, &|e| tamm_residual_cot(e, spec).ok(), tol)
        }
        TammMethod::BruteForce => {
            let lo = range.0.max(1e-12 * spec.lead_potential);
            comb_bruteforce_gap_levels(spec, (lo, range.1), grid)?.into_iter().map(|l| l.energy).collect()
        }
    };
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

/// `Re T₁₁` of the whole chain. Below both leads the leads carry `e^{∓ϰx}`
/// and `T₁₁` multiplies the exponential growing into the left lead, so its
/// zeros are bound states. Real up to rounding.
pub fn bound_state_residual(profile: &PotentialProfile, energy: f64) -> Option<f64> {
    profile_transfer(profile, energy).ok().map(|t| t.inner.m11.re)
}

/// Bound states of an arbitrary profile by dense scan of
/// [`bound_state_residual`] and bisection to `10⁻¹² × span`.
pub fn bound_states_bruteforce(profile: &PotentialProfile, range: (f64, f64), grid: usize) -> Result<Vec<TammLevel>> {
    check_range(range, grid)?;
    let floor = profile.left_lead.potential.min(profile.right_lead.potential);
    if range.1 > floor {
        return Err(Error::InvalidParameter(format!(
            "bound-state scan must stay below both leads (E_max = {} > {floor})",
            range.1
        )));
    }
    let tol = 1e-12 * (range.1 - range.0);
    let hi = range.1.min(floor - tol);
    let xs = linspace(range.0, hi, grid);
    let f = |e: f64| bound_state_residual(profile, e);
    let values: Vec<Option<f64>> = xs.par_iter().map(|&e| f(e)).collect();
    let brackets = sign_change_brackets(&xs, &values);
    Ok(brackets
        .par_iter()
        .map(|&(a, b, fa, fb)| {
            let energy = bisect(f, a, b, fa, fb, tol);
            let residual = profile_transfer(profile, energy)
                .map(|t| t.inner.m11.re.abs() / t.inner.max_abs().max(1.0))
                .unwrap_or(f64::NAN);
            TammLevel { energy, residual, method: TammMethod::BruteForce, cross_form_discrepancy: None }
        })
        .collect())
}

/// Brute-force levels of the comb restricted to gap energies, for direct
/// comparison with [`solve_tamm`].
pub fn comb_bruteforce_gap_levels(spec: &CombSpec, range: (f64, f64), grid: usize) -> Result<Vec<TammLevel>> {
    spec.validate()?;
    let all = bound_states_bruteforce(&spec.to_profile(), range, grid)?;
    Ok(all
        .into_iter()
        .filter(|l| spec.quantities(l.energy).is_ok_and(|q| q.chi().abs() > 1.0))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrices::transfer_to_impedance_matrix;
    use crate::periodic::{eigen_residual_fps, AffixSpec, CellSpec};
    use crate::potential::characteristic_impedance;
    use crate::roots::find_roots;
    use proptest::prelude::*;

    fn example() -> CombSpec {
        CombSpec::new(-2.0, 1.0, 3, 10.0)
    }

    fn energies(levels: &[TammLevel]) -> Vec<f64> {
        levels.iter().map(|l| l.energy).collect()
    }

    #[test]
    fn comb_round_trips_through_json() {
        let spec = CombSpec { units: UnitSystem::new(0.5, 2.0).unwrap(), ..example() };
        assert_eq!(parse_comb(&spec.to_json()).unwrap(), spec);
        assert!(parse_comb(r#"{"comb": {"alpha": 1, "l": 1, "N": 0, "U_E": 3}}"#).is_err());
        assert!(parse_comb(r#"{"comb": {"alpha": 1, "l": -1, "N": 2, "U_E": 3}}"#).is_err());
    }

    #[test]
    fn profile_layout_is_mirror_symmetric() {
        let p = example().to_profile();
        assert_eq!(p.elements.len(), 7);
        assert_eq!(p.mirrored(), p);
    }

    #[test]
    fn zero_alpha_cell_is_bare_propagation() {
        let spec = CombSpec::new(0.0, 1.3, 2, 5.0);
        let z = comb_cell_impedance_matrix(2.0, &spec).unwrap().inner;
        let x = I * spec.quantities(2.0).unwrap().xi;
        assert!((z.m11 + x.sinh()).norm() < 1e-15 && (z.m21 - x.cosh()).norm() < 1e-15);
        let t = comb_cell_transfer(2.0, &spec).unwrap().inner;
        assert!((t.m11 - (-x).exp()).norm() < 1e-15 && t.m12.norm() < 1e-15);
    }

    #[test]
    fn transfer_entries_match_closed_form() {
        let spec = CombSpec::new(0.8, 1.1, 1, 4.0);
        let cq = spec.quantities(1.7).unwrap();
        let t = comb_cell_transfer(1.7, &spec).unwrap().inner;
        let (o, e) = (I * cq.omega, (I * cq.xi).exp());
        let want = Matrix2::new((1.0 + o) / e, o * e, -o / e, (1.0 - o) * e);
        assert!(t.max_abs_diff(&want) < 1e-13);
    }

    #[test]
    fn singular_at_zero_energy() {
        assert!(comb_cell_transfer(0.0, &example()).is_err());
        assert!(comb_cell_impedance_matrix(0.0, &example()).is_err());
    }

    #[test]
    fn residuals_reject_band_energies() {
        let spec = example();
        let e = (1..1000)
            .map(|i| i as f64 * 0.01)
            .find(|&e| spec.quantities(e).unwrap().chi().abs() < 0.9)
            .unwrap();
        assert!(matches!(tamm_residual_impedance(e, &spec), Err(Error::OutOfGap { .. })));
        assert!(matches!(tamm_residual_cot(e, &spec), Err(Error::OutOfGap { .. })));
        assert!(tamm_residual_impedance(11.0, &spec).is_err());
    }

    #[test]
    fn example_levels_match_brute_force() {
        let spec = example();
        let levels = solve_tamm(&spec, (0.0, 10.0), 4000).unwrap();
        let brute = comb_bruteforce_gap_levels(&spec, (1e-9, 10.0), 4000).unwrap();
        assert_eq!(levels.len(), brute.len());
        assert!(!levels.is_empty());
        for d in match_roots(&energies(&levels), &energies(&brute)) {
            assert!(d < 1e-8);
        }
        for (l, want) in levels.iter().zip([3.7513754980, 4.3145162637]) {
            assert!((l.energy - want).abs() < 1e-9, "{}", l.energy);
            assert!(l.cross_form_discrepancy.unwrap() < 1e-10);
        }
    }

    #[test]
    fn grid_refinement_keeps_root_count() {
        let spec = example();
        let coarse = solve_tamm(&spec, (0.0, 10.0), 2000).unwrap();
        let fine = solve_tamm(&spec, (0.0, 10.0), 4000).unwrap();
        assert_eq!(coarse.len(), fine.len());
    }

    #[test]
    fn reported_levels_sit_in_gaps() {
        for alpha in [-2.0, 2.0] {
            let spec = CombSpec::new(alpha, 1.0, 5, 10.0);
            for l in solve_tamm(&spec, (0.0, 10.0), 4000).unwrap() {
                assert!(spec.quantities(l.energy).unwrap().chi().abs() > 1.0);
            }
        }
    }

    #[test]
    fn no_delta_means_no_surface_states() {
        let spec = CombSpec::new(0.0, 1.0, 4, 10.0);
        assert!(solve_tamm(&spec, (0.0, 10.0), 2000).unwrap().is_empty());
    }

    #[test]
    fn single_cell_matches_impedance_closure() {
        let spec = CombSpec::new(-1.5, 1.0, 1, 8.0);
        let levels = solve_tamm(&spec, (0.0, 8.0), 4000).unwrap();
        let brute = comb_bruteforce_gap_levels(&spec, (1e-9, 8.0), 4000).unwrap();
        assert_eq!(levels.len(), brute.len());
        for d in match_roots(&energies(&levels), &energies(&brute)) {
            assert!(d < 1e-8);
        }
    }

    #[test]
    fn general_periodic_residual_agrees() {
        // Same eigenproblem through the general spacer formula with zero extra spacers.
        let spec = CombSpec::new(2.0, 1.0, 5, 10.0);
        let units = spec.units;
        let fps = |e: f64| -> Option<f64> {
            let cell = CellSpec::new(comb_cell_transfer(e, &spec).ok()?, spec.period).ok()?;
            let zl = characteristic_impedance(e, spec.lead_potential, units);
            let affix = AffixSpec { left_length: 0.0, right_length: 0.0, z_left: zl, z_right: zl };
            let r = eigen_residual_fps(&cell, &affix, spec.cells, units).ok()?;
            assert!(r.re.abs() < 1e-9);
            (spec.quantities(e).ok()?.chi().abs() > 1.0).then_some(r.im)
        };
        let gaps = gap_scan_points(&spec, (1e-9, 10.0 - 1e-9), 4000);
        let general = roots_in_gaps(&gaps, &fps, 1e-13);
        let levels = solve_tamm(&spec, (0.0, 10.0), 4000).unwrap();
        assert_eq!(general.len(), levels.len());
        for d in match_roots(&general, &energies(&levels)) {
            assert!(d < 1e-9);
        }
    }

    #[test]
    fn free_delta_bound_state() {
        let profile = PotentialProfile::new(0.0, vec![PotentialProfile::delta(-2.0)], 0.0, UnitSystem::default());
        let levels = bound_states_bruteforce(&profile, (-5.0, -0.01), 1000).unwrap();
        assert_eq!(levels.len(), 1);
        assert!((levels[0].energy + 2.0).abs() < 1e-10);
    }

    #[test]
    fn free_delta_bound_state_scales_with_units() {
        let units = UnitSystem::new(0.7, 1.9).unwrap();
        let alpha = -1.3;
        let want = -units.mass * alpha * alpha / (2.0 * units.hbar * units.hbar);
        let profile = PotentialProfile::new(0.0, vec![PotentialProfile::delta(alpha)], 0.0, units);
        let levels = bound_states_bruteforce(&profile, (4.0 * want, -0.01), 1000).unwrap();
        assert_eq!(levels.len(), 1);
        assert!((levels[0].energy - want).abs() < 1e-10 * want.abs());
    }

    #[test]
    fn finite_square_well_levels() {
        let (v0, a) = (10.0f64, 2.0f64);
        let profile = PotentialProfile::new(v0, vec![PotentialProfile::segment(a, 0.0)], v0, UnitSystem::default());
        let brute = energies(&bound_states_bruteforce(&profile, (1e-6, v0), 5000).unwrap());
        // even: k tan(ka/2) = ϰ; odd: −k cot(ka/2) = ϰ (cleared by cos / sin)
        let k = |e: f64| (2.0 * e).sqrt();
        let kap = |e: f64| (2.0 * (v0 - e)).sqrt();
        let even = |e: f64| Some(k(e) * (k(e) * a / 2.0).sin() - kap(e) * (k(e) * a / 2.0).cos());
        let odd = |e: f64| Some(k(e) * (k(e) * a / 2.0).cos() + kap(e) * (k(e) * a / 2.0).sin());
        let mut textbook = find_roots(even, 1e-6, v0 - 1e-9, 5000, 1e-14);
        textbook.extend(find_roots(odd, 1e-6, v0 - 1e-9, 5000, 1e-14));
        textbook.sort_by(f64::total_cmp);
        assert_eq!(brute.len(), textbook.len());
        assert!(brute.len() >= 3);
        for (b, t) in brute.iter().zip(&textbook) {
            assert!((b - t).abs() < 1e-8);
        }
    }

    #[test]
    fn delta_in_a_well() {
        // Leads U_E | L | δα | L | U_E. Even states: ψ = cos kx + (mα/ħ²k) sin kx on x > 0;
        // odd states ignore the delta.
        let (ue, half, alpha) = (6.0f64, 1.0f64, -1.5f64);
        let profile = PotentialProfile::new(
            ue,
            vec![
                PotentialProfile::segment(half, 0.0),
                PotentialProfile::delta(alpha),
                PotentialProfile::segment(half, 0.0),
            ],
            ue,
            UnitSystem::default(),
        );
        let k = |e: f64| (2.0 * e).sqrt();
        let kap = |e: f64| (2.0 * (ue - e)).sqrt();
        let even = |e: f64| {
            let (kk, w) = (k(e), alpha / k(e));
            let (s, c) = (kk * half).sin_cos();
            let psi = c + w * s;
            let dpsi = kk * (-s + w * c);
            Some(dpsi + kap(e) * psi)
        };
        let odd = |e: f64| Some(k(e) * (k(e) * half).cos() + kap(e) * (k(e) * half).sin());
        let mut want = find_roots(even, 1e-6, ue - 1e-9, 5000, 1e-14);
        want.extend(find_roots(odd, 1e-6, ue - 1e-9, 5000, 1e-14));
        want.sort_by(f64::total_cmp);
        let got = energies(&bound_states_bruteforce(&profile, (1e-6, ue), 5000).unwrap());
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-8);
        }
    }

    #[test]
    fn bruteforce_rejects_scattering_energies() {
        let p = example().to_profile();
        assert!(bound_states_bruteforce(&p, (1.0, 11.0), 100).is_err());
        assert!(bound_states_bruteforce(&p, (1.0, 5.0), 4).is_err());
    }

    #[test]
    fn solve_rejects_bad_ranges() {
        let spec = example();
        assert!(solve_tamm(&spec, (-1.0, 5.0), 100).is_err());
        assert!(solve_tamm(&spec, (1.0, 12.0), 100).is_err());
        assert!(solve_tamm(&spec, (1.0, 5.0), 8).is_err());
    }

    #[test]
    fn match_roots_pairs_nearest() {
        assert_eq!(match_roots(&[1.0, 2.0], &[2.1, 0.9]), vec![0.09999999999999998, 0.10000000000000009]);
        assert_eq!(match_roots(&[1.0, 2.0], &[1.0]), vec![0.0, f64::INFINITY]);
    }

    proptest! {
        #[test]
        fn impedance_matrix_is_unimodular(e in 0.01f64..20.0, alpha in -4.0f64..4.0, l in 0.1f64..3.0) {
            let spec = CombSpec::new(alpha, l, 1, 1.0);
            let z = comb_cell_impedance_matrix(e, &spec).unwrap();
            prop_assert!((z.inner.det() - 1.0).norm() < 1e-12 * z.inner.max_abs().powi(2).max(1.0));
        }

        #[test]
        fn impedance_matrix_matches_conversion(e in 0.01f64..20.0, alpha in -4.0f64..4.0, l in 0.1f64..3.0) {
            let spec = CombSpec::new(alpha, l, 1, 1.0);
            let direct = comb_cell_impedance_matrix(e, &spec).unwrap().inner;
            let via_t = transfer_to_impedance_matrix(&comb_cell_transfer(e, &spec).unwrap()).inner;
            prop_assert!(direct.max_abs_diff(&via_t) < 1e-13 * direct.max_abs().max(1.0));
        }

        #[test]
        fn half_trace_is_bloch_parameter(e in 0.01f64..20.0, alpha in -4.0f64..4.0, l in 0.1f64..3.0) {
            let spec = CombSpec::new(alpha, l, 1, 1.0);
            let t = comb_cell_transfer(e, &spec).unwrap();
            let chi = spec.quantities(e).unwrap().chi();
            prop_assert!((t.half_trace() - chi).norm() < 1e-13 * chi.abs().max(1.0));
        }

        #[test]
        fn cell_factorizes(e in 0.01f64..20.0, alpha in -4.0f64..4.0, l in 0.1f64..3.0) {
            let spec = CombSpec::new(alpha, l, 1, 1.0);
            let k = Complex64::new(wavenumber(e, 0.0, spec.units).re, 0.0);
            let t = comb_cell_transfer(e, &spec).unwrap();
            let want = delta_matrix(alpha, k, spec.units).unwrap().inner * propagation_matrix(k, l, spec.units).inner;
            prop_assert!(t.inner.max_abs_diff(&want) < 1e-13);
        }
    }
}
