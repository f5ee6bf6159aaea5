//! 3x3 square-lattice Ising instances, their symmetry group, and superspin
//! embeddings onto Chimera unit cells.
//!
//! An instance carries a sign (+1/-1) for each of the 12 grid edges and each
//! of the 9 site fields. Instances related by a dihedral transformation
//! combined with local gauge flips are physically equivalent; `canonicalize`
//! picks a unique representative per orbit and `enumerate_classes` produces
//! the full list of equivalence classes over all 2^12 coupler assignments.

mod chimera;
pub mod symmetry;

pub use chimera::{min_flip_barrier, Barrier, CellMode, ChimeraIsing, LocalMinimaReport};
pub use symmetry::{SymmetryElement, N_DIHEDRAL};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sites of the 3x3 grid, row-major.
pub const N_SITES: usize = 9;
/// Edges of the 3x3 grid graph.
pub const N_EDGES: usize = 12;

/// Fixed edge order: horizontal edges row-major, then vertical edges
/// row-major. Endpoints are (low, high) site indices.
pub const EDGES: [(usize, usize); N_EDGES] = [
    (0, 1),
    (1, 2),
    (3, 4),
    (4, 5),
    (6, 7),
    (7, 8),
    (0, 3),
    (1, 4),
    (2, 5),
    (3, 6),
    (4, 7),
    (5, 8),
];

/// Row-major site index of grid position (row, col).
pub fn site_index(row: usize, col: usize) -> usize {
    debug_assert!(row < 3 && col < 3);
    3 * row + col
}

/// Index of the edge joining sites `u` and `v`, if they are grid neighbours.
pub fn edge_index(u: usize, v: usize) -> Option<usize> {
    let key = (u.min(v), u.max(v));
    EDGES.iter().position(|&e| e == key)
}

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("sign entries must be +1 or -1, got {0}")]
    BadSign(i8),
    #[error("field magnitude must be positive, got {0}")]
    BadMagnitude(f64),
    #[error("expected {expected} {kind}, got {got}")]
    BadCount { kind: &'static str, expected: usize, got: usize },
    #[error("edge ({u}, {v}) is not part of the 3x3 grid graph")]
    BadEdge { u: usize, v: usize },
    #[error("duplicate edge ({u}, {v})")]
    DuplicateEdge { u: usize, v: usize },
    #[error("scale parameters must be positive: alpha={alpha}, alpha_s={alpha_s}")]
    BadScale { alpha: f64, alpha_s: f64 },
    #[error("configuration covers {got} spins, Hamiltonian has {expected}")]
    BadConfig { expected: usize, got: usize },
}

/// A signed 3x3 square-lattice Ising instance.
///
/// Couplers and fields are signs; `field_magnitude` scales all field terms
/// and defaults to 1, enforcing |h| = |J| in the effective model.
#[derive(Clone, Debug)]
pub struct SquareLatticeInstance {
    couplers: [i8; N_EDGES],
    fields: [i8; N_SITES],
    field_magnitude: f64,
}

impl PartialEq for SquareLatticeInstance {
    fn eq(&self, other: &Self) -> bool {
        self.couplers == other.couplers
            && self.fields == other.fields
            && self.field_magnitude.to_bits() == other.field_magnitude.to_bits()
    }
}
impl Eq for SquareLatticeInstance {}

impl SquareLatticeInstance {
    pub fn new(
        couplers: [i8; N_EDGES],
        fields: [i8; N_SITES],
        field_magnitude: f64,
    ) -> Result<Self, LatticeError> {
        for &c in couplers.iter().chain(fields.iter()) {
            if c != 1 && c != -1 {
                return Err(LatticeError::BadSign(c));
            }
        }
        if !(field_magnitude > 0.0) || !field_magnitude.is_finite() {
            return Err(LatticeError::BadMagnitude(field_magnitude));
        }
        Ok(SquareLatticeInstance { couplers, fields, field_magnitude })
    }

    /// Instance with the given coupler signs and all fields +1.
    pub fn from_coupler_signs(couplers: [i8; N_EDGES]) -> Result<Self, LatticeError> {
        Self::new(couplers, [1; N_SITES], 1.0)
    }

    /// All couplers ferromagnetic (+1), all fields +1.
    pub fn ferromagnetic() -> Self {
        SquareLatticeInstance { couplers: [1; N_EDGES], fields: [1; N_SITES], field_magnitude: 1.0 }
    }

    pub fn coupler(&self, edge: usize) -> i8 {
        self.couplers[edge]
    }

    pub fn couplers(&self) -> &[i8; N_EDGES] {
        &self.couplers
    }

    pub fn field(&self, site: usize) -> i8 {
        self.fields[site]
    }

    pub fn fields(&self) -> &[i8; N_SITES] {
        &self.fields
    }

    pub fn field_magnitude(&self) -> f64 {
        self.field_magnitude
    }

    /// 21-bit encoding: field bits (site 0 most significant) above coupler
    /// bits (edge 0 most significant); bit = 1 encodes sign -1. The
    /// lexicographic order of this code drives canonicalization.
    pub fn code(&self) -> u32 {
        let mut code = 0u32;
        for (i, &f) in self.fields.iter().enumerate() {
            if f < 0 {
                code |= 1 << (20 - i);
            }
        }
        for (e, &c) in self.couplers.iter().enumerate() {
            if c < 0 {
                code |= 1 << (11 - e);
            }
        }
        code
    }

    pub fn from_code(code: u32) -> Self {
        Self::from_code_with_magnitude(code, 1.0)
    }

    pub fn from_code_with_magnitude(code: u32, field_magnitude: f64) -> Self {
        assert!(code < 1 << 21, "instance code is 21 bits");
        let mut fields = [1i8; N_SITES];
        let mut couplers = [1i8; N_EDGES];
        for (i, f) in fields.iter_mut().enumerate() {
            if code >> (20 - i) & 1 == 1 {
                *f = -1;
            }
        }
        for (e, c) in couplers.iter_mut().enumerate() {
            if code >> (11 - e) & 1 == 1 {
                *c = -1;
            }
        }
        SquareLatticeInstance { couplers, fields, field_magnitude }
    }

    /// Apply a symmetry element: dihedral site permutation first, then gauge
    /// flips (each flipped site negates its field and incident couplers).
    pub fn apply(&self, g: &SymmetryElement) -> Self {
        let site_perm = g.site_perm();
        let edge_perm = &symmetry::edge_perms()[g.spatial as usize];
        let mut fields = [0i8; N_SITES];
        let mut couplers = [0i8; N_EDGES];
        for i in 0..N_SITES {
            fields[site_perm[i]] = self.fields[i];
        }
        for e in 0..N_EDGES {
            couplers[edge_perm[e]] = self.couplers[e];
        }
        for i in 0..N_SITES {
            if g.flips(i) {
                fields[i] = -fields[i];
            }
        }
        for (e, &(u, v)) in EDGES.iter().enumerate() {
            if g.flips(u) != g.flips(v) {
                couplers[e] = -couplers[e];
            }
        }
        SquareLatticeInstance { couplers, fields, field_magnitude: self.field_magnitude }
    }

    /// Canonical representative of this instance's symmetry orbit, together
    /// with an element mapping `self` onto it.
    ///
    /// The canonical form is the lexicographic minimum of `code()` over all
    /// 8 * 2^9 group elements. Because field bits sit above coupler bits and
    /// the gauge group acts freely on field patterns, the minimum always has
    /// all fields +1 and the scan reduces to one forced gauge per dihedral
    /// element.
    pub fn canonicalize(&self) -> (Self, SymmetryElement) {
        let mut best_code = u32::MAX;
        let mut best_element = SymmetryElement::IDENTITY;
        for spatial in 0..N_DIHEDRAL as u8 {
            let rotated = self.apply(&SymmetryElement::new(spatial, 0));
            let mut gauge = 0u16;
            for (i, &f) in rotated.fields.iter().enumerate() {
                if f < 0 {
                    gauge |= 1 << i;
                }
            }
            let candidate = rotated.apply(&SymmetryElement::new(0, gauge));
            let code = candidate.code();
            debug_assert!(code < 1 << N_EDGES, "canonical candidates have all-plus fields");
            if code < best_code {
                best_code = code;
                best_element = SymmetryElement::new(spatial, gauge);
            }
        }
        (Self::from_code_with_magnitude(best_code, self.field_magnitude), best_element)
    }

    /// Code of the canonical representative.
    pub fn canonical_code(&self) -> u32 {
        self.canonicalize().0.code()
    }
}

/// Enumerate one canonical representative per symmetry class over all 2^12
/// coupler assignments with fields fixed to +1. Deterministically ordered by
/// ascending canonical code; the position in the returned list is the class
/// id.
pub fn enumerate_classes() -> Vec<SquareLatticeInstance> {
    let edge_perm = symmetry::edge_perms();
    let mut canonical = vec![false; 1 << N_EDGES];
    for word in 0..1u32 << N_EDGES {
        let mut best = u32::MAX;
        for perm in edge_perm.iter() {
            let mut image = 0u32;
            for (e, &img) in perm.iter().enumerate() {
                if word >> (11 - e) & 1 == 1 {
                    image |= 1 << (11 - img);
                }
            }
            best = best.min(image);
        }
        if best == word {
            canonical[word as usize] = true;
        }
    }
    canonical
        .iter()
        .enumerate()
        .filter(|(_, &is_canon)| is_canon)
        .map(|(word, _)| SquareLatticeInstance::from_code(word as u32))
        .collect()
}

/// Serialized form of an instance, matching the on-disk JSON schema.
#[derive(Serialize, Deserialize)]
pub struct InstanceJson {
    pub couplers: Vec<CouplerJson>,
    pub fields: Vec<i8>,
    pub field_magnitude: f64,
}

#[derive(Serialize, Deserialize)]
pub struct CouplerJson {
    pub u: usize,
    pub v: usize,
    pub sign: i8,
}

impl From<&SquareLatticeInstance> for InstanceJson {
    fn from(inst: &SquareLatticeInstance) -> Self {
        InstanceJson {
            couplers: EDGES
                .iter()
                .zip(inst.couplers.iter())
                .map(|(&(u, v), &sign)| CouplerJson { u, v, sign })
                .collect(),
            fields: inst.fields.to_vec(),
            field_magnitude: inst.field_magnitude,
        }
    }
}

impl TryFrom<InstanceJson> for SquareLatticeInstance {
    type Error = LatticeError;

    fn try_from(json: InstanceJson) -> Result<Self, LatticeError> {
        if json.couplers.len() != N_EDGES {
            return Err(LatticeError::BadCount {
                kind: "couplers",
                expected: N_EDGES,
                got: json.couplers.len(),
            });
        }
        if json.fields.len() != N_SITES {
            return Err(LatticeError::BadCount {
                kind: "fields",
                expected: N_SITES,
                got: json.fields.len(),
            });
        }
        let mut couplers = [0i8; N_EDGES];
        let mut seen = [false; N_EDGES];
        for c in &json.couplers {
            let e = edge_index(c.u, c.v).ok_or(LatticeError::BadEdge { u: c.u, v: c.v })?;
            if seen[e] {
                return Err(LatticeError::DuplicateEdge { u: c.u, v: c.v });
            }
            seen[e] = true;
            couplers[e] = c.sign;
        }
        let mut fields = [0i8; N_SITES];
        fields.copy_from_slice(&json.fields);
        SquareLatticeInstance::new(couplers, fields, json.field_magnitude)
    }
}

impl Serialize for SquareLatticeInstance {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        InstanceJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SquareLatticeInstance {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let json = InstanceJson::deserialize(deserializer)?;
        SquareLatticeInstance::try_from(json).map_err(serde::de::Error::custom)
    }
}
