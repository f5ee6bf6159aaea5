//! Dihedral and gauge symmetry elements of the 3x3 square lattice.
//!
//! The symmetry group is the semidirect product of the 8-element dihedral
//! group of the square (acting on sites and edges) with the 2^9 local gauge
//! group (flipping a site's field together with every incident coupler).
//! Group order: 8 * 512 = 4096.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{edge_index, EDGES, N_EDGES, N_SITES};

/// Number of dihedral transformations of the square.
pub const N_DIHEDRAL: usize = 8;

/// Site permutation tables for the 8 dihedral elements, `perm[p][i]` is the
/// image of site `i` under element `p`. Element 0 is the identity.
pub fn site_perms() -> &'static [[usize; N_SITES]; N_DIHEDRAL] {
    static TABLES: OnceLock<[[usize; N_SITES]; N_DIHEDRAL]> = OnceLock::new();
    TABLES.get_or_init(build_site_perms)
}

/// Edge permutation tables: `edge_perms()[p][e]` is the index of the image of
/// edge `e` under dihedral element `p`.
pub fn edge_perms() -> &'static [[usize; N_EDGES]; N_DIHEDRAL] {
    static TABLES: OnceLock<[[usize; N_EDGES]; N_DIHEDRAL]> = OnceLock::new();
    TABLES.get_or_init(|| {
        let sites = site_perms();
        let mut out = [[0usize; N_EDGES]; N_DIHEDRAL];
        for (p, site_perm) in sites.iter().enumerate() {
            for (e, &(u, v)) in EDGES.iter().enumerate() {
                out[p][e] = edge_index(site_perm[u], site_perm[v])
                    .expect("dihedral image of a grid edge is a grid edge");
            }
        }
        out
    })
}

/// Composition table for the dihedral group: `table[a][b]` is the element
/// acting as "first b, then a".
fn dihedral_compose_table() -> &'static [[u8; N_DIHEDRAL]; N_DIHEDRAL] {
    static TABLE: OnceLock<[[u8; N_DIHEDRAL]; N_DIHEDRAL]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let perms = site_perms();
        let mut table = [[0u8; N_DIHEDRAL]; N_DIHEDRAL];
        for a in 0..N_DIHEDRAL {
            for b in 0..N_DIHEDRAL {
                let mut composed = [0usize; N_SITES];
                for (i, slot) in composed.iter_mut().enumerate() {
                    *slot = perms[a][perms[b][i]];
                }
                let idx = perms
                    .iter()
                    .position(|p| *p == composed)
                    .expect("dihedral group is closed");
                table[a][b] = idx as u8;
            }
        }
        table
    })
}

fn build_site_perms() -> [[usize; N_SITES]; N_DIHEDRAL] {
    // (row, col) maps, row-major site index = 3*row + col.
    let maps: [fn(usize, usize) -> (usize, usize); N_DIHEDRAL] = [
        |r, c| (r, c),         // identity
        |r, c| (c, 2 - r),     // rotate 90
        |r, c| (2 - r, 2 - c), // rotate 180
        |r, c| (2 - c, r),     // rotate 270
        |r, c| (2 - r, c),     // reflect across middle row
        |r, c| (r, 2 - c),     // reflect across middle column
        |r, c| (c, r),         // reflect across main diagonal
        |r, c| (2 - c, 2 - r), // reflect across anti-diagonal
    ];
    let mut out = [[0usize; N_SITES]; N_DIHEDRAL];
    for (p, f) in maps.iter().enumerate() {
        for r in 0..3 {
            for c in 0..3 {
                let (nr, nc) = f(r, c);
                out[p][3 * r + c] = 3 * nr + nc;
            }
        }
    }
    out
}

/// One element of the dihedral x gauge symmetry group.
///
/// Acts on an instance by first applying the dihedral site permutation, then
/// flipping the gauge on every site set in `gauge` (bit `i` = site `i`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymmetryElement {
    pub spatial: u8,
    pub gauge: u16,
}

impl SymmetryElement {
    pub const IDENTITY: SymmetryElement = SymmetryElement { spatial: 0, gauge: 0 };

    pub fn new(spatial: u8, gauge: u16) -> Self {
        assert!((spatial as usize) < N_DIHEDRAL, "dihedral index out of range");
        assert!(gauge < 1 << N_SITES, "gauge mask out of range");
        SymmetryElement { spatial, gauge }
    }

    pub fn is_identity(&self) -> bool {
        self.spatial == 0 && self.gauge == 0
    }

    /// Site permutation of the spatial part.
    pub fn site_perm(&self) -> &'static [usize; N_SITES] {
        &site_perms()[self.spatial as usize]
    }

    /// True if the gauge part flips site `i`.
    pub fn flips(&self, site: usize) -> bool {
        self.gauge >> site & 1 == 1
    }

    /// Group composition: `a.compose(&b)` acts as "first b, then a".
    ///
    /// With the action g(x) = gauge(spatial(x)), composition works out to
    /// (p2, S2) o (p1, S1) = (p2 p1, S2 xor p2(S1)).
    pub fn compose(&self, first: &SymmetryElement) -> SymmetryElement {
        let spatial = dihedral_compose_table()[self.spatial as usize][first.spatial as usize];
        let perm = self.site_perm();
        let mut moved: u16 = 0;
        for i in 0..N_SITES {
            if first.gauge >> i & 1 == 1 {
                moved |= 1 << perm[i];
            }
        }
        SymmetryElement { spatial, gauge: self.gauge ^ moved }
    }

    pub fn inverse(&self) -> SymmetryElement {
        let perms = site_perms();
        let own = &perms[self.spatial as usize];
        let mut inv_perm = [0usize; N_SITES];
        for (i, &img) in own.iter().enumerate() {
            inv_perm[img] = i;
        }
        let spatial_inv = perms
            .iter()
            .position(|p| *p == inv_perm)
            .expect("dihedral inverses exist") as u8;
        let mut gauge = 0u16;
        for i in 0..N_SITES {
            if self.gauge >> i & 1 == 1 {
                gauge |= 1 << inv_perm[i];
            }
        }
        SymmetryElement { spatial: spatial_inv, gauge }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> SymmetryElement {
        SymmetryElement {
            spatial: rng.gen_range(0..N_DIHEDRAL as u8),
            gauge: rng.gen_range(0..1u16 << N_SITES),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn site_perms_are_permutations() {
        for perm in site_perms() {
            let mut seen = [false; N_SITES];
            for &img in perm {
                assert!(!seen[img]);
                seen[img] = true;
            }
        }
    }

    #[test]
    fn edge_perms_are_permutations() {
        for perm in edge_perms() {
            let mut seen = [false; N_EDGES];
            for &img in perm {
                assert!(!seen[img]);
                seen[img] = true;
            }
        }
    }

    #[test]
    fn composition_is_closed_and_matches_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let a = SymmetryElement::random(&mut rng);
            let b = SymmetryElement::random(&mut rng);
            let ab = a.compose(&b);
            assert!((ab.spatial as usize) < N_DIHEDRAL);
            assert!(ab.gauge < 1 << N_SITES);
        }
    }

    #[test]
    fn inverse_composes_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let g = SymmetryElement::random(&mut rng);
            assert_eq!(g.inverse().compose(&g), SymmetryElement::IDENTITY);
            assert_eq!(g.compose(&g.inverse()), SymmetryElement::IDENTITY);
        }
    }
}
