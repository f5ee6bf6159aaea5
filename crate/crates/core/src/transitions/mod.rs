//! Spin-sign transitions and the Type 0/I/II/III spin classification.
//!
//! A spin-sign transition is a zero curve of the thermal magnetization
//! m_i(T, delta). Each of the 570 x 9 spins is classified by its transition
//! structure:
//!
//! - Type 0: no transition inside the window.
//! - Type I: transitions present, none at the origin (arc-like).
//! - Type II: balanced classical ground manifold, hence an origin transition
//!   by construction.
//! - Type III: definite classical orientation reversed by an infinitesimal
//!   transverse field.

pub mod origin;
mod trace;

pub use origin::{
    analyze_origin, analyze_origin_without_crosscheck, ground_manifold_balance,
    infinitesimal_delta_sign, OriginAnalysis,
};
pub use trace::{trace_transitions, transition_density, DensityHistogram, Polyline, TransitionSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ed::{self, GridSpec, MagnetizationGrid};
use crate::lattice::{SquareLatticeInstance, N_SITES};

/// Magnetizations with absolute value below this tolerance are treated as
/// on-transition (indeterminate sign).
pub const ZERO_TOL: f64 = 1e-8;

/// Per-spin sign of the magnetization over a grid; 0 marks indeterminate
/// entries.
#[derive(Clone, Debug)]
pub struct SignMap {
    pub spec: GridSpec,
    pub n_spins: usize,
    signs: Vec<i8>,
}

impl SignMap {
    pub fn from_grid(grid: &MagnetizationGrid) -> SignMap {
        let signs = grid
            .data()
            .iter()
            .map(|&m| {
                if m > ZERO_TOL {
                    1
                } else if m < -ZERO_TOL {
                    -1
                } else {
                    0
                }
            })
            .collect();
        SignMap { spec: grid.spec.clone(), n_spins: grid.n_spins, signs }
    }

    pub fn sign(&self, spin: usize, ti: usize, di: usize) -> i8 {
        let (nt, nd) = (self.spec.nt(), self.spec.nd());
        debug_assert!(spin < self.n_spins && ti < nt && di < nd);
        self.signs[(spin * nt + ti) * nd + di]
    }

    /// True when both determinate signs occur somewhere on the grid.
    pub fn has_sign_change(&self, spin: usize) -> bool {
        let (nt, nd) = (self.spec.nt(), self.spec.nd());
        let row = &self.signs[spin * nt * nd..(spin + 1) * nt * nd];
        row.iter().any(|&s| s > 0) && row.iter().any(|&s| s < 0)
    }
}

/// The four-type transition taxonomy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpinType {
    Type0,
    TypeI,
    TypeII,
    TypeIII,
}

impl SpinType {
    pub fn label(&self) -> &'static str {
        match self {
            SpinType::Type0 => "0",
            SpinType::TypeI => "I",
            SpinType::TypeII => "II",
            SpinType::TypeIII => "III",
        }
    }
}

impl std::fmt::Display for SpinType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Classification record for one spin of one class.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpinTypeRecord {
    pub class_id: usize,
    pub spin: usize,
    pub spin_type: SpinType,
    pub count_up: u32,
    pub count_down: u32,
    pub infinitesimal_sign: i8,
    pub has_origin_transition: bool,
    pub has_window_transition: bool,
}

/// Classify the nine spins of one instance against a precomputed sign map.
pub fn classify_instance(
    class_id: usize,
    instance: &SquareLatticeInstance,
    signs: &SignMap,
) -> [SpinTypeRecord; N_SITES] {
    let analysis = analyze_origin_without_crosscheck(instance);
    std::array::from_fn(|spin| {
        let (count_up, count_down) = analysis.balance[spin];
        let classical = analysis.classical_sign[spin];
        let quantum = analysis.infinitesimal_sign[spin];
        let balanced = count_up == count_down;
        // A definite classical orientation flipped (or erased) by quantum
        // fluctuations puts a transition at the origin.
        let quantum_opposed = !balanced && quantum != classical;
        let has_window_transition = signs.has_sign_change(spin);
        let spin_type = if balanced {
            SpinType::TypeII
        } else if quantum_opposed {
            SpinType::TypeIII
        } else if has_window_transition {
            SpinType::TypeI
        } else {
            SpinType::Type0
        };
        SpinTypeRecord {
            class_id,
            spin,
            spin_type,
            count_up,
            count_down,
            infinitesimal_sign: quantum,
            has_origin_transition: balanced || quantum_opposed,
            has_window_transition,
        }
    })
}

/// Classify one instance, computing its magnetization grid on the fly.
pub fn classify_instance_on_grid(
    class_id: usize,
    instance: &SquareLatticeInstance,
    spec: &GridSpec,
) -> Result<[SpinTypeRecord; N_SITES], ed::EdError> {
    let grid = ed::magnetization_grid(instance, spec)?;
    Ok(classify_instance(class_id, instance, &SignMap::from_grid(&grid)))
}

/// Aggregate census counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusCounts {
    pub type0: usize,
    pub type1: usize,
    pub type2: usize,
    pub type3: usize,
}

impl CensusCounts {
    pub fn total(&self) -> usize {
        self.type0 + self.type1 + self.type2 + self.type3
    }

    pub fn transitioning(&self) -> usize {
        self.type1 + self.type2 + self.type3
    }
}

/// Full classification of a set of classes.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Census {
    pub records: Vec<SpinTypeRecord>,
}

impl Census {
    pub fn counts(&self) -> CensusCounts {
        let mut counts = CensusCounts::default();
        for r in &self.records {
            match r.spin_type {
                SpinType::Type0 => counts.type0 += 1,
                SpinType::TypeI => counts.type1 += 1,
                SpinType::TypeII => counts.type2 += 1,
                SpinType::TypeIII => counts.type3 += 1,
            }
        }
        counts
    }

    pub fn record(&self, class_id: usize, spin: usize) -> &SpinTypeRecord {
        &self.records[class_id * N_SITES + spin]
    }

    /// Spin types of one class in spin order.
    pub fn class_types(&self, class_id: usize) -> [SpinType; N_SITES] {
        std::array::from_fn(|spin| self.record(class_id, spin).spin_type)
    }

    /// Write the census CSV. `n_transitions` is left empty unless traced
    /// polyline counts are supplied.
    pub fn write_csv<W: std::io::Write>(
        &self,
        mut out: W,
        config_hash: &str,
        polyline_counts: Option<&[usize]>,
    ) -> std::io::Result<()> {
        writeln!(out, "# spin_type_census config_hash={config_hash} version={}", crate::TOOL_VERSION)?;
        writeln!(out, "class_id,spin,type,n_transitions,origin_flag")?;
        for (idx, r) in self.records.iter().enumerate() {
            let n_tr = polyline_counts.map(|c| c[idx].to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{}",
                r.class_id,
                r.spin,
                r.spin_type,
                n_tr,
                if r.has_origin_transition { 1 } else { 0 }
            )?;
        }
        Ok(())
    }
}

/// Run the classification pipeline over a list of class representatives.
///
/// `grid_for` supplies each class's magnetization grid (so callers can plug
/// in a cache); use [`run_census`] for the self-contained variant.
pub fn run_census_with<F>(classes: &[SquareLatticeInstance], grid_for: F) -> Census
where
    F: Fn(usize, &SquareLatticeInstance) -> MagnetizationGrid + Sync,
{
    let per_class: Vec<[SpinTypeRecord; N_SITES]> = classes
        .par_iter()
        .enumerate()
        .map(|(class_id, instance)| {
            let grid = grid_for(class_id, instance);
            classify_instance(class_id, instance, &SignMap::from_grid(&grid))
        })
        .collect();
    Census { records: per_class.into_iter().flatten().collect() }
}

/// Classify every class on a freshly computed grid.
pub fn run_census(classes: &[SquareLatticeInstance], spec: &GridSpec) -> Census {
    run_census_with(classes, |_, instance| {
        ed::magnetization_grid(instance, spec).expect("grid evaluation succeeds")
    })
}
