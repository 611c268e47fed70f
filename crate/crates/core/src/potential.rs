//! Potential profiles: two semi-infinite leads with an ordered run of
//! constant segments and delta barriers between them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Values of ħ and m used by every formula. Natural units by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0 }
    }
}

impl UnitSystem {
    pub fn new(hbar: f64, mass: f64) -> Option<Self> {
        let units = Self { hbar, mass };
        units.is_valid().then_some(units)
    }

    pub fn is_valid(&self) -> bool {
        self.hbar.is_finite() && self.mass.is_finite() && self.hbar > 0.0 && self.mass > 0.0
    }

    /// Wavenumber corresponding to a characteristic impedance, `k = m z / ħ`.
    pub fn wavenumber_of(&self, z: Complex64) -> Complex64 {
        z * (self.mass / self.hbar)
    }

    /// Characteristic impedance corresponding to a wavenumber, `z = ħ k / m`.
    pub fn impedance_of(&self, k: Complex64) -> Complex64 {
        k * (self.hbar / self.mass)
    }
}

/// `k = √(2m(E−U))/ħ` on the branch with `Im k ≥ 0`: positive real above the
/// potential, `iκ` below it, exactly zero at `E = U`.
pub fn wavenumber(energy: f64, potential: f64, units: UnitSystem) -> Complex64 {
    let arg = 2.0 * units.mass * (energy - potential);
    if arg >= 0.0 {
        Complex64::new(arg.sqrt() / units.hbar, 0.0)
    } else {
        Complex64::new(0.0, (-arg).sqrt() / units.hbar)
    }
}

/// `z = ħk/m = √(2(E−U)/m)`, same branch as [`wavenumber`].
pub fn characteristic_impedance(energy: f64, potential: f64, units: UnitSystem) -> Complex64 {
    units.impedance_of(wavenumber(energy, potential, units))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lead {
    #[serde(rename = "U")]
    pub potential: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub length: f64,
    #[serde(rename = "U")]
    pub potential: f64,
}

/// `α δ(x − x₀)` sitting on the boundary where it appears in the element list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaBarrier {
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Element {
    Segment(Segment),
    Delta(DeltaBarrier),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialProfile {
    #[serde(default)]
    pub units: UnitSystem,
    pub left_lead: Lead,
    #[serde(default)]
    pub elements: Vec<Element>,
    pub right_lead: Lead,
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("element {index}: {message}")]
    Element { index: usize, message: String },
    #[error("{0}")]
    Semantic(String),
}

/// A parsed profile together with the non-fatal normalizations applied to it.
#[derive(Debug, Clone)]
pub struct ParsedProfile {
    pub profile: PotentialProfile,
    pub warnings: Vec<String>,
}

impl PotentialProfile {
    pub fn new(left: f64, elements: Vec<Element>, right: f64, units: UnitSystem) -> Self {
        Self {
            units,
            left_lead: Lead { potential: left },
            elements,
            right_lead: Lead { potential: right },
        }
    }

    pub fn free(potential: f64, units: UnitSystem) -> Self {
        Self::new(potential, Vec::new(), potential, units)
    }

    pub fn segment(length: f64, potential: f64) -> Element {
        Element::Segment(Segment { length, potential })
    }

    pub fn delta(alpha: f64) -> Element {
        Element::Delta(DeltaBarrier { alpha })
    }

    pub fn total_length(&self) -> f64 {
        self.segments().map(|s| s.length).sum()
    }

    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.elements.iter().filter_map(|e| match e {
            Element::Segment(s) => Some(s),
            Element::Delta(_) => None,
        })
    }

    pub fn has_symmetric_leads(&self) -> bool {
        self.left_lead.potential == self.right_lead.potential
    }

    /// Every potential value an energy must avoid (`k = 0` there).
    pub fn region_potentials(&self) -> Vec<f64> {
        let mut out = vec![self.left_lead.potential, self.right_lead.potential];
        out.extend(self.segments().map(|s| s.potential));
        out
    }

    /// Same system seen from the other side.
    pub fn mirrored(&self) -> Self {
        Self {
            units: self.units,
            left_lead: self.right_lead,
            elements: self.elements.iter().rev().copied().collect(),
            right_lead: self.left_lead,
        }
    }

    /// The profile with its elements repeated `n` times between the same leads.
    pub fn repeated(&self, n: usize) -> Self {
        let mut elements = Vec::with_capacity(self.elements.len() * n);
        for _ in 0..n {
            elements.extend_from_slice(&self.elements);
        }
        Self { elements, ..self.clone() }
    }

    /// Checks the data-model invariants and normalizes deltas: zero strengths
    /// are dropped and deltas sharing a boundary are merged.
    pub fn validated(self) -> Result<ParsedProfile, ProfileError> {
        if !self.units.is_valid() {
            return Err(ProfileError::Semantic(format!(
                "units must be positive and finite (hbar = {}, mass = {})",
                self.units.hbar, self.units.mass
            )));
        }
        for (side, lead) in [("left", self.left_lead), ("right", self.right_lead)] {
            if !lead.potential.is_finite() {
                return Err(ProfileError::Semantic(format!("{side} lead potential is not finite")));
            }
        }

        let mut warnings = Vec::new();
        let mut elements: Vec<Element> = Vec::with_capacity(self.elements.len());
        for (index, element) in self.elements.iter().enumerate() {
            match *element {
                Element::Segment(s) => {
                    if !(s.length.is_finite() && s.length > 0.0) {
                        return Err(ProfileError::Element {
                            index,
                            message: format!("segment length must be positive, got {}", s.length),
                        });
                    }
                    if !s.potential.is_finite() {
                        return Err(ProfileError::Element {
                            index,
                            message: "segment potential is not finite".into(),
                        });
                    }
                    elements.push(*element);
                }
                Element::Delta(d) => {
                    if !d.alpha.is_finite() {
                        return Err(ProfileError::Element {
                            index,
                            message: "delta strength is not finite".into(),
                        });
                    }
                    if let Some(Element::Delta(prev)) = elements.last_mut() {
                        warnings.push(format!(
                            "element {index}: delta shares a boundary with the previous delta; \
                             strengths {} and {} merged",
                            prev.alpha, d.alpha
                        ));
                        prev.alpha += d.alpha;
                    } else {
                        elements.push(*element);
                    }
                }
            }
        }
        let before = elements.len();
        elements.retain(|e| !matches!(e, Element::Delta(d) if d.alpha == 0.0));
        if elements.len() != before {
            warnings.push(format!("dropped {} zero-strength delta(s)", before - elements.len()));
        }

        Ok(ParsedProfile { profile: Self { elements, ..self }, warnings })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }
}

pub fn parse_profile(text: &str) -> Result<ParsedProfile, ProfileError> {
    let raw: PotentialProfile = serde_json::from_str(text).map_err(|e| ProfileError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    raw.validated()
}
