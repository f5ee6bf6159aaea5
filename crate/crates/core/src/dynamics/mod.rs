//! Kibble-Zurek freeze-time estimation on the permutation-symmetric K(4)
//! reduction of the truncated-cell superspin system.
//!
//! Each truncated Chimera cell is approximated by a fully connected K(4)
//! graph whose four spins couple equally to every spin of the neighbouring
//! cells. The resulting permutation symmetry compresses each cell to the
//! five states of a collective spin-2, so the 9-cell system lives in a
//! 5^9 = 1,953,125 dimensional space reachable by sparse iteration.

mod bath;
mod freeze;
mod lanczos;

pub use bath::{relaxation_rate_per_us, relaxation_time_us, OhmicBath, BATH_TEMPERATURE_17MK};
pub use freeze::{
    freeze_time, quench_overlap, sweep_freeze_curves, FreezeEstimate, FreezeRegime, FreezeSweep,
    QuenchSample, QUENCH_DS,
};
pub use lanczos::{lowest_states, Eigenpairs, LanczosOptions, SolverError, SymOp};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{CellMode, SquareLatticeInstance, EDGES, N_SITES};

/// Conversion from schedule energy units (GHz-equivalent) to angular
/// frequency in rad/us, used when turning golden-rule rates into physical
/// relaxation times.
pub const SCHEDULE_UNIT_RAD_PER_US: f64 = 2.0 * std::f64::consts::PI * 1e3;

/// Collective spin magnitude of a 4-spin cell.
const CELL_SPIN: f64 = 2.0;
/// States per cell (S_z in -2..=2).
pub const CELL_STATES: usize = 5;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("schedule table must cover s in [0,1] with strictly increasing s")]
    BadScheduleTable,
    #[error("schedule violates monotonicity (A nonincreasing, B nondecreasing, A(1) ~ 0)")]
    NonMonotoneSchedule,
    #[error("B(s) = 0 at s = {0}; effective units are undefined")]
    ZeroTransverseScale(f64),
    #[error("excitation gap is not positive: omega10 = {0}")]
    NonPositiveGap(f64),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("cell count {0} exceeds the supported maximum of 12")]
    TooManyCells(usize),
}

/// Annealing schedule A(s), B(s) for s = t/t_f in [0, 1].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Schedule {
    /// Total anneal time in microseconds.
    pub t_f_us: f64,
    form: ScheduleForm,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
enum ScheduleForm {
    Analytic { a0: f64, b0: f64 },
    Table { s: Vec<f64>, a: Vec<f64>, b: Vec<f64> },
}

impl Schedule {
    /// Default surrogate schedule A(s) = a0 (1-s)^2, B(s) = b0 s with
    /// a0 = b0 = 10 GHz-equivalent units.
    pub fn default_surrogate(t_f_us: f64) -> Schedule {
        Schedule { t_f_us, form: ScheduleForm::Analytic { a0: 10.0, b0: 10.0 } }
    }

    pub fn analytic(t_f_us: f64, a0: f64, b0: f64) -> Schedule {
        Schedule { t_f_us, form: ScheduleForm::Analytic { a0, b0 } }
    }

    /// Peak Ising amplitude B(1).
    pub fn b_max(&self) -> f64 {
        self.b(1.0)
    }

    /// Parse a CSV table with columns `s,A,B`; `s` must be strictly
    /// increasing and cover [0, 1]. Values interpolate linearly.
    pub fn from_csv<R: std::io::BufRead>(
        reader: R,
        t_f_us: f64,
    ) -> Result<Schedule, DynamicsError> {
        let mut s = Vec::new();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for line in reader.lines() {
            let line = line.map_err(|_| DynamicsError::BadScheduleTable)?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('s') {
                continue;
            }
            let mut parts = line.split(',');
            let mut next = || {
                parts
                    .next()
                    .and_then(|p| p.trim().parse::<f64>().ok())
                    .ok_or(DynamicsError::BadScheduleTable)
            };
            s.push(next()?);
            a.push(next()?);
            b.push(next()?);
        }
        if s.len() < 2 || s[0] != 0.0 || *s.last().unwrap() != 1.0 {
            return Err(DynamicsError::BadScheduleTable);
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DynamicsError::BadScheduleTable);
        }
        let a_max = a.iter().cloned().fold(0.0f64, f64::max);
        if a.windows(2).any(|w| w[1] > w[0] + 1e-12)
            || b.windows(2).any(|w| w[1] < w[0] - 1e-12)
            || *a.last().unwrap() > 1e-2 * a_max.max(1e-12)
        {
            return Err(DynamicsError::NonMonotoneSchedule);
        }
        Ok(Schedule { t_f_us, form: ScheduleForm::Table { s, a, b } })
    }

    /// Same schedule shape with a different anneal time.
    pub fn with_t_f(&self, t_f_us: f64) -> Schedule {
        Schedule { t_f_us, form: self.form.clone() }
    }

    /// Transverse amplitude A(s); s is clamped to [0, 1].
    pub fn a(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match &self.form {
            ScheduleForm::Analytic { a0, .. } => a0 * (1.0 - s) * (1.0 - s),
            ScheduleForm::Table { s: xs, a, .. } => interp(xs, a, s),
        }
    }

    /// Ising amplitude B(s); s is clamped to [0, 1].
    pub fn b(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match &self.form {
            ScheduleForm::Analytic { b0, .. } => b0 * s,
            ScheduleForm::Table { s: xs, b, .. } => interp(xs, b, s),
        }
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let hi = xs.partition_point(|&v| v <= x).min(xs.len() - 1).max(1);
    let lo = hi - 1;
    let f = ((x - xs[lo]) / (xs[hi] - xs[lo])).clamp(0.0, 1.0);
    ys[lo] * (1.0 - f) + ys[hi] * f
}

/// The cell-level lattice a [`K4Model`] is built on: a graph of superspin
/// cells with signed couplers and fields.
#[derive(Clone, Debug)]
pub struct CellLattice {
    pub n_cells: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub fields: Vec<f64>,
}

impl CellLattice {
    pub fn from_instance(instance: &SquareLatticeInstance) -> CellLattice {
        CellLattice {
            n_cells: N_SITES,
            edges: EDGES
                .iter()
                .enumerate()
                .map(|(e, &(u, v))| (u, v, instance.coupler(e) as f64))
                .collect(),
            fields: (0..N_SITES)
                .map(|i| instance.field_magnitude() * instance.field(i) as f64)
                .collect(),
        }
    }

    /// One isolated cell.
    pub fn single_cell() -> CellLattice {
        CellLattice { n_cells: 1, edges: vec![], fields: vec![1.0] }
    }

    /// Ferromagnetic 2x2 cell grid (dimension 5^4 = 625), the dense-oracle
    /// surrogate.
    pub fn ferromagnetic_2x2() -> CellLattice {
        CellLattice {
            n_cells: 4,
            edges: vec![(0, 1, 1.0), (2, 3, 1.0), (0, 2, 1.0), (1, 3, 1.0)],
            fields: vec![1.0; 4],
        }
    }
}

/// Scales of the K(4) reduction.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct K4Params {
    pub alpha: f64,
    pub alpha_s: f64,
    /// Internal K(4) coupling per pair; `None` selects the default
    /// 2 alpha / 3, which preserves the K(2,2) cell's total binding energy
    /// (6 pairs * 2 alpha / 3 = 4 alpha) and equals the per-pair average of
    /// the cell's couplings over all 6 pairs.
    pub j_int: Option<f64>,
    /// Include the per-cell longitudinal fields.
    pub include_fields: bool,
}

impl Default for K4Params {
    fn default() -> Self {
        K4Params { alpha: 0.25, alpha_s: 1.0, j_int: None, include_fields: true }
    }
}

impl K4Params {
    pub fn j_int(&self) -> f64 {
        self.j_int.unwrap_or(2.0 * self.alpha / 3.0)
    }
}

/// Collective-spin model: each cell is one spin-2 degree of freedom.
///
/// At anneal parameters (A, B) the Hamiltonian reads
///
/// ```text
/// H = -A * sum_c 2 S^x_c
///     + B * [ sum_c ( -j_int (2 (S^z_c)^2 - 2) + alpha alpha_s h_c S^z_c )
///             - (alpha alpha_s / 2) * sum_(cd) J_cd S^z_c S^z_d ]
/// ```
///
/// which reproduces the physical truncated-cell energies on aligned states.
#[derive(Clone, Debug)]
pub struct K4Model {
    pub lattice: CellLattice,
    pub params: K4Params,
    dim: usize,
    strides: Vec<usize>,
    diag_base: Vec<f64>,
}

/// S_x ladder amplitudes between digit d and d+1 for spin 2.
const LADDER: [f64; 4] = [1.0, 1.224744871391589, 1.224744871391589, 1.0];

impl K4Model {
    pub fn new(lattice: CellLattice, params: K4Params) -> Result<K4Model, DynamicsError> {
        if lattice.n_cells > 12 {
            return Err(DynamicsError::TooManyCells(lattice.n_cells));
        }
        let n = lattice.n_cells;
        let dim = CELL_STATES.pow(n as u32);
        let strides: Vec<usize> = (0..n).map(|c| CELL_STATES.pow(c as u32)).collect();
        let j_int = params.j_int();
        let coupling = params.alpha * params.alpha_s;

        let mut diag_base = vec![0.0f64; dim];
        let mut digits = vec![0usize; n];
        for slot in diag_base.iter_mut() {
            let mut e = 0.0;
            for c in 0..n {
                let m = digits[c] as f64 - CELL_SPIN;
                e += -j_int * (2.0 * m * m - 2.0);
                if params.include_fields {
                    e += coupling * lattice.fields[c] * m;
                }
            }
            for &(u, v, j) in &lattice.edges {
                let mu = digits[u] as f64 - CELL_SPIN;
                let mv = digits[v] as f64 - CELL_SPIN;
                e -= 0.5 * coupling * j * mu * mv;
            }
            *slot = e;
            for d in digits.iter_mut() {
                *d += 1;
                if *d == CELL_STATES {
                    *d = 0;
                } else {
                    break;
                }
            }
        }
        Ok(K4Model { lattice, params, dim, strides, diag_base })
    }

    /// Standard model of an instance: truncated cells, alpha = 0.25,
    /// alpha_s = 1.
    pub fn from_instance(
        instance: &SquareLatticeInstance,
        params: K4Params,
    ) -> Result<K4Model, DynamicsError> {
        K4Model::new(CellLattice::from_instance(instance), params)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.lattice.n_cells
    }

    /// The Hamiltonian at anneal parameters (A, B).
    pub fn operator(&self, a: f64, b: f64) -> K4Operator<'_> {
        K4Operator { model: self, a, b }
    }

    /// The Hamiltonian at anneal fraction `s` of a schedule.
    pub fn operator_at(&self, schedule: &Schedule, s: f64) -> K4Operator<'_> {
        self.operator(schedule.a(s), schedule.b(s))
    }

    /// Collective S_z of cell `c` in basis state `idx`.
    #[inline]
    pub fn cell_sz(&self, idx: usize, c: usize) -> f64 {
        (idx / self.strides[c] % CELL_STATES) as f64 - CELL_SPIN
    }

    /// Per-cell matrix elements `<bra| 2 S^z_c |ket>`, the system side of
    /// the bath coupling.
    pub fn sz_matrix_elements(&self, bra: &[f64], ket: &[f64]) -> Vec<f64> {
        let n = self.lattice.n_cells;
        let mut me = vec![0.0f64; n];
        let mut digits = vec![0usize; n];
        for idx in 0..self.dim {
            let w = bra[idx] * ket[idx];
            if w != 0.0 {
                for c in 0..n {
                    me[c] += w * 2.0 * (digits[c] as f64 - CELL_SPIN);
                }
            }
            for d in digits.iter_mut() {
                *d += 1;
                if *d == CELL_STATES {
                    *d = 0;
                } else {
                    break;
                }
            }
        }
        me
    }
}

/// Sparse Hamiltonian of a [`K4Model`] at fixed anneal parameters.
#[derive(Clone, Copy)]
pub struct K4Operator<'m> {
    model: &'m K4Model,
    pub a: f64,
    pub b: f64,
}

impl K4Operator<'_> {
    /// Maximum number of structural nonzeros in any row: the diagonal plus
    /// two S_x ladder terms per cell.
    pub fn max_nonzeros_per_row(&self) -> usize {
        1 + 2 * self.model.lattice.n_cells
    }

    /// Diagonal entry of the Hamiltonian.
    pub fn diagonal(&self, idx: usize) -> f64 {
        self.b * self.model.diag_base[idx]
    }

    /// Dense matrix for oracle comparisons (small models only).
    pub fn to_dense(&self) -> Vec<f64> {
        let dim = self.model.dim;
        assert!(dim <= 4096, "dense form is for small oracle models");
        let mut h = vec![0.0f64; dim * dim];
        let hop = -2.0 * self.a;
        for idx in 0..dim {
            h[idx * dim + idx] = self.diagonal(idx);
            for (c, &stride) in self.model.strides.iter().enumerate() {
                let d = idx / stride % CELL_STATES;
                if d + 1 < CELL_STATES {
                    let other = idx + stride;
                    h[idx * dim + other] += hop * LADDER[d];
                    h[other * dim + idx] += hop * LADDER[d];
                }
            }
        }
        h
    }
}

impl SymOp for K4Operator<'_> {
    fn dim(&self) -> usize {
        self.model.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        use rayon::prelude::*;
        let model = self.model;
        let n = model.lattice.n_cells;
        let hop = -2.0 * self.a;
        let b = self.b;
        let chunk = 1 << 14;
        y.par_chunks_mut(chunk).enumerate().for_each(|(ci, out)| {
            let start = ci * chunk;
            let mut digits = [0usize; 12];
            let mut rem = start;
            for c in 0..n {
                digits[c] = rem % CELL_STATES;
                rem /= CELL_STATES;
            }
            for (off, slot) in out.iter_mut().enumerate() {
                let idx = start + off;
                let mut acc = b * model.diag_base[idx] * x[idx];
                if hop != 0.0 {
                    for c in 0..n {
                        let d = digits[c];
                        let stride = model.strides[c];
                        if d > 0 {
                            acc += hop * LADDER[d - 1] * x[idx - stride];
                        }
                        if d + 1 < CELL_STATES {
                            acc += hop * LADDER[d] * x[idx + stride];
                        }
                    }
                }
                *slot = acc;
                for digit in digits.iter_mut().take(n) {
                    *digit += 1;
                    if *digit == CELL_STATES {
                        *digit = 0;
                    } else {
                        break;
                    }
                }
            }
        });
    }
}

/// Map an anneal point to the dimensionless effective (T, delta) of the
/// superspin model: the energy unit is |J_s| B(s) with |J_s| set by the
/// embedding, so T = T_phys / (|J_s| B(s)) and delta = A(s) / (|J_s| B(s)).
pub fn anneal_to_effective(
    schedule: &Schedule,
    s: f64,
    alpha: f64,
    alpha_s: f64,
    cell_mode: CellMode,
    t_phys: f64,
) -> Result<(f64, f64), DynamicsError> {
    let b = schedule.b(s);
    if b <= 0.0 {
        return Err(DynamicsError::ZeroTransverseScale(s));
    }
    let energy_unit = cell_mode.superspin_scale() * alpha * alpha_s * b;
    Ok((t_phys / energy_unit, schedule.a(s) / energy_unit))
}
