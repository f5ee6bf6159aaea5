//! Exact diagonalization of small transverse-field Ising problems and
//! thermal single-spin magnetizations over a (temperature, transverse-field)
//! grid.
//!
//! Hamiltonian convention:
//!
//! ```text
//! H = -delta * sum_i sigma^x_i + sum_i h_i sigma^z_i - sum_(ij) J_ij sigma^z_i sigma^z_j
//! ```
//!
//! The matrix is real symmetric in the sigma^z product basis; basis state `b`
//! assigns spin `i` the value +1 when bit `i` of `b` is clear.

mod gridfile;

pub use gridfile::{instance_hash, GridFileError};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{SquareLatticeInstance, EDGES, N_SITES};

/// Largest spin count accepted by the dense solver.
pub const MAX_SPINS: usize = 14;

/// Temperatures below this floor use the degenerate ground-manifold average.
pub const T_FLOOR: f64 = 1e-6;

/// Relative tolerance (times the spectral width) grouping eigenvalues into
/// the ground manifold at T = 0.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Relative residual bound enforced on returned eigenpairs.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum EdError {
    #[error("{n} spins exceed the dense-solver limit of {MAX_SPINS}")]
    TooManySpins { n: usize },
    #[error("spin index {index} out of range for {n} spins")]
    SpinOutOfRange { index: usize, n: usize },
    #[error("transverse field must be nonnegative and finite, got {0}")]
    BadDelta(f64),
    #[error("temperature must be nonnegative and finite, got {0}")]
    BadTemperature(f64),
    #[error("eigensolver residual {residual:.3e} exceeds {bound:.3e}")]
    ResidualTooLarge { residual: f64, bound: f64 },
    #[error("grid values must be finite, nonnegative and strictly increasing")]
    BadGrid,
}

/// A transverse-field Ising problem on up to [`MAX_SPINS`] spins.
#[derive(Clone, Debug)]
pub struct TfimProblem {
    pub n: usize,
    pub fields: Vec<f64>,
    pub couplers: Vec<(usize, usize, f64)>,
    pub delta: f64,
}

impl TfimProblem {
    pub fn new(
        n: usize,
        fields: Vec<f64>,
        couplers: Vec<(usize, usize, f64)>,
        delta: f64,
    ) -> Result<Self, EdError> {
        if n > MAX_SPINS {
            return Err(EdError::TooManySpins { n });
        }
        if fields.len() != n {
            return Err(EdError::SpinOutOfRange { index: fields.len(), n });
        }
        for &(u, v, _) in &couplers {
            if u >= n || v >= n {
                return Err(EdError::SpinOutOfRange { index: u.max(v), n });
            }
        }
        if !delta.is_finite() || delta < 0.0 {
            return Err(EdError::BadDelta(delta));
        }
        Ok(TfimProblem { n, fields, couplers, delta })
    }

    /// Effective 9-spin superspin problem of a lattice instance.
    pub fn from_instance(instance: &SquareLatticeInstance, delta: f64) -> Result<Self, EdError> {
        let fields = (0..N_SITES)
            .map(|i| instance.field_magnitude() * instance.field(i) as f64)
            .collect();
        let couplers = EDGES
            .iter()
            .enumerate()
            .map(|(e, &(u, v))| (u, v, instance.coupler(e) as f64))
            .collect();
        TfimProblem::new(N_SITES, fields, couplers, delta)
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Classical (sigma^z diagonal) energy of basis state `b`.
    pub fn classical_energy(&self, b: usize) -> f64 {
        let spin = |i: usize| if b >> i & 1 == 1 { -1.0 } else { 1.0 };
        let mut e = 0.0;
        for (i, &h) in self.fields.iter().enumerate() {
            e += h * spin(i);
        }
        for &(u, v, j) in &self.couplers {
            e -= j * spin(u) * spin(v);
        }
        e
    }

    /// Dense Hamiltonian matrix, column-major.
    fn dense(&self) -> Vec<f64> {
        let dim = self.dim();
        let mut h = vec![0.0f64; dim * dim];
        for b in 0..dim {
            h[b * dim + b] = self.classical_energy(b);
            for k in 0..self.n {
                let a = b ^ (1 << k);
                h[b * dim + a] = -self.delta;
            }
        }
        h
    }
}

/// Sign of spin `i` in basis state `b`.
#[inline]
pub fn basis_spin(b: usize, i: usize) -> i8 {
    if b >> i & 1 == 1 {
        -1
    } else {
        1
    }
}

/// Full spectrum of a [`TfimProblem`] with per-eigenstate sigma^z
/// expectations.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub n: usize,
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, column-major `dim x dim`; column k pairs
    /// with `eigenvalues[k]`.
    eigenvectors: Vec<f64>,
    /// Per-eigenstate expectations `<k| sigma^z_i |k>`, laid out `[i][k]`.
    sz_exp: Vec<f64>,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn eigenvector(&self, k: usize) -> &[f64] {
        let dim = self.dim();
        &self.eigenvectors[k * dim..(k + 1) * dim]
    }

    pub fn sz_expectation(&self, spin: usize, k: usize) -> f64 {
        self.sz_exp[spin * self.dim() + k]
    }

    /// Indices of the numerically degenerate ground manifold.
    pub fn ground_manifold(&self) -> std::ops::Range<usize> {
        let e0 = self.eigenvalues[0];
        let width = (self.eigenvalues[self.dim() - 1] - e0).max(0.0);
        let tol = DEGENERACY_TOL * width;
        let mut end = 1;
        while end < self.dim() && self.eigenvalues[end] - e0 <= tol {
            end += 1;
        }
        0..end
    }

    /// Boltzmann-weighted sigma^z expectations at temperature `t` (k_B = 1).
    ///
    /// At `t` below [`T_FLOOR`] this returns the unweighted average over the
    /// numerically resolved ground manifold.
    pub fn thermal_magnetization(&self, t: f64) -> Result<Vec<f64>, EdError> {
        if !t.is_finite() || t < 0.0 {
            return Err(EdError::BadTemperature(t));
        }
        let dim = self.dim();
        let mut m = vec![0.0; self.n];
        if t < T_FLOOR {
            let manifold = self.ground_manifold();
            let g = manifold.len() as f64;
            for (i, slot) in m.iter_mut().enumerate() {
                let row = &self.sz_exp[i * dim..(i + 1) * dim];
                *slot = manifold.clone().map(|k| row[k]).sum::<f64>() / g;
            }
            return Ok(m);
        }
        // Max-shifted Boltzmann weights so the exponentials never overflow.
        let e0 = self.eigenvalues[0];
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&e| (-(e - e0) / t).exp()).collect();
        let z: f64 = weights.iter().sum();
        for (i, slot) in m.iter_mut().enumerate() {
            let row = &self.sz_exp[i * dim..(i + 1) * dim];
            *slot = row.iter().zip(&weights).map(|(s, w)| s * w).sum::<f64>() / z;
        }
        Ok(m)
    }

    /// Slim copy retaining only what thermal averages need.
    pub fn thermal_table(&self) -> ThermalTable {
        ThermalTable {
            n: self.n,
            eigenvalues: self.eigenvalues.clone(),
            sz_exp: self.sz_exp.clone(),
        }
    }

    /// Largest residual `|| H v - lambda v ||` over all eigenpairs,
    /// recomputed against the given problem.
    pub fn max_residual(&self, problem: &TfimProblem) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for k in 0..dim {
            worst = worst.max(residual_norm(problem, self.eigenvector(k), self.eigenvalues[k]));
        }
        worst
    }
}

/// Eigenvalues plus per-eigenstate sigma^z expectations, without the
/// eigenvectors; enough to evaluate thermal magnetizations at any
/// temperature.
#[derive(Clone, Debug)]
pub struct ThermalTable {
    pub n: usize,
    eigenvalues: Vec<f64>,
    sz_exp: Vec<f64>,
}

impl ThermalTable {
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    fn ground_manifold_len(&self) -> usize {
        let dim = self.dim();
        let e0 = self.eigenvalues[0];
        let width = (self.eigenvalues[dim - 1] - e0).max(0.0);
        let tol = DEGENERACY_TOL * width;
        let mut end = 1;
        while end < dim && self.eigenvalues[end] - e0 <= tol {
            end += 1;
        }
        end
    }

    /// Thermal magnetization of a single spin; same conventions as
    /// [`SpectralData::thermal_magnetization`].
    pub fn magnetization(&self, spin: usize, t: f64) -> f64 {
        let dim = self.dim();
        let row = &self.sz_exp[spin * dim..(spin + 1) * dim];
        if t < T_FLOOR {
            let g = self.ground_manifold_len();
            return row[..g].iter().sum::<f64>() / g as f64;
        }
        let e0 = self.eigenvalues[0];
        let mut num = 0.0;
        let mut z = 0.0;
        for (k, &e) in self.eigenvalues.iter().enumerate() {
            let w = (-(e - e0) / t).exp();
            num += w * row[k];
            z += w;
        }
        num / z
    }

    /// Thermal magnetization of every spin.
    pub fn magnetizations(&self, t: f64) -> Vec<f64> {
        (0..self.n).map(|i| self.magnetization(i, t)).collect()
    }
}

fn residual_norm(problem: &TfimProblem, v: &[f64], lambda: f64) -> f64 {
    let dim = problem.dim();
    let mut acc = 0.0f64;
    for b in 0..dim {
        let mut hv = problem.classical_energy(b) * v[b];
        for k in 0..problem.n {
            hv -= problem.delta * v[b ^ (1 << k)];
        }
        let r = hv - lambda * v[b];
        acc += r * r;
    }
    acc.sqrt()
}

/// Full dense spectrum of the problem.
///
/// Eigenpairs are verified against a spot-check residual bound of
/// [`RESIDUAL_TOL`] times the spectral scale; tests can assert the full
/// per-pair bound through [`SpectralData::max_residual`].
pub fn diagonalize(problem: &TfimProblem) -> Result<SpectralData, EdError> {
    let dim = problem.dim();
    let h = problem.dense();
    let mat = faer::mat::from_column_major_slice::<f64>(&h, dim, dim);
    let evd = mat.selfadjoint_eigendecomposition(faer::Side::Lower);

    let mut eigenvalues = Vec::with_capacity(dim);
    let s = evd.s();
    for k in 0..dim {
        eigenvalues.push(s.column_vector().read(k));
    }
    let u = evd.u();
    let mut eigenvectors = vec![0.0f64; dim * dim];
    for k in 0..dim {
        for b in 0..dim {
            eigenvectors[k * dim + b] = u.read(b, k);
        }
    }

    // Spot-check the extremal eigenpairs; the full scan lives in tests.
    let scale = eigenvalues
        .iter()
        .fold(0.0f64, |acc, &e| acc.max(e.abs()))
        .max(f64::MIN_POSITIVE);
    let bound = RESIDUAL_TOL * scale;
    for k in [0, dim - 1] {
        let r = residual_norm(problem, &eigenvectors[k * dim..(k + 1) * dim], eigenvalues[k]);
        if r > bound {
            return Err(EdError::ResidualTooLarge { residual: r, bound });
        }
    }

    let mut sz_exp = vec![0.0f64; problem.n * dim];
    for k in 0..dim {
        for b in 0..dim {
            let w = eigenvectors[k * dim + b];
            let w2 = w * w;
            for i in 0..problem.n {
                sz_exp[i * dim + k] += w2 * basis_spin(b, i) as f64;
            }
        }
    }

    Ok(SpectralData { n: problem.n, eigenvalues, eigenvectors, sz_exp })
}

/// A rectangular evaluation grid over (temperature, transverse field).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_values: Vec<f64>,
    pub delta_values: Vec<f64>,
}

impl GridSpec {
    pub fn new(t_values: Vec<f64>, delta_values: Vec<f64>) -> Result<Self, EdError> {
        for axis in [&t_values, &delta_values] {
            if axis.is_empty() {
                return Err(EdError::BadGrid);
            }
            for w in axis.windows(2) {
                if !(w[1] > w[0]) {
                    return Err(EdError::BadGrid);
                }
            }
            if axis.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(EdError::BadGrid);
            }
        }
        Ok(GridSpec { t_values, delta_values })
    }

    /// `n` uniform points covering `[0, max)` on both axes.
    pub fn uniform_window(n: usize, max: f64) -> Self {
        let axis: Vec<f64> = (0..n).map(|k| k as f64 * max / n as f64).collect();
        GridSpec { t_values: axis.clone(), delta_values: axis }
    }

    /// The default classification window: 101 x 101 points on [0, 5)^2.
    pub fn default_window() -> Self {
        Self::uniform_window(101, 5.0)
    }

    pub fn nt(&self) -> usize {
        self.t_values.len()
    }

    pub fn nd(&self) -> usize {
        self.delta_values.len()
    }

    /// Index of the grid point nearest to the given coordinates.
    pub fn nearest(&self, t: f64, delta: f64) -> (usize, usize) {
        let pick = |axis: &[f64], x: f64| {
            axis.iter()
                .enumerate()
                .min_by(|a, b| (a.1 - x).abs().partial_cmp(&(b.1 - x).abs()).unwrap())
                .map(|(i, _)| i)
                .unwrap()
        };
        (pick(&self.t_values, t), pick(&self.delta_values, delta))
    }
}

/// Dense per-spin magnetization array over a [`GridSpec`], laid out
/// `[spin][t][delta]`.
#[derive(Clone, Debug)]
pub struct MagnetizationGrid {
    pub spec: GridSpec,
    pub n_spins: usize,
    data: Vec<f64>,
}

impl MagnetizationGrid {
    pub fn m(&self, spin: usize, ti: usize, di: usize) -> f64 {
        let (nt, nd) = (self.spec.nt(), self.spec.nd());
        debug_assert!(spin < self.n_spins && ti < nt && di < nd);
        self.data[(spin * nt + ti) * nd + di]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn from_parts(spec: GridSpec, n_spins: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n_spins * spec.nt() * spec.nd());
        MagnetizationGrid { spec, n_spins, data }
    }

    /// Bilinear interpolation of spin `spin`'s magnetization at an arbitrary
    /// in-window point (clamped to the grid hull).
    pub fn interpolate(&self, spin: usize, t: f64, delta: f64) -> f64 {
        let locate = |axis: &[f64], x: f64| -> (usize, f64) {
            if x <= axis[0] || axis.len() == 1 {
                return (0, 0.0);
            }
            let last = axis.len() - 1;
            if x >= axis[last] {
                return (last - 1, 1.0);
            }
            let hi = axis.partition_point(|&v| v <= x).min(last);
            let lo = hi - 1;
            (lo, (x - axis[lo]) / (axis[hi] - axis[lo]))
        };
        let (ti, ft) = locate(&self.spec.t_values, t);
        let (di, fd) = locate(&self.spec.delta_values, delta);
        let m00 = self.m(spin, ti, di);
        let m01 = self.m(spin, ti, di + 1);
        let m10 = self.m(spin, ti + 1, di);
        let m11 = self.m(spin, ti + 1, di + 1);
        m00 * (1.0 - ft) * (1.0 - fd)
            + m01 * (1.0 - ft) * fd
            + m10 * ft * (1.0 - fd)
            + m11 * ft * fd
    }
}

/// Evaluate the thermal magnetization of every spin over the grid.
///
/// One diagonalization per transverse-field column, reused across all
/// temperatures; columns are evaluated in parallel and merged in order.
pub fn magnetization_grid(
    instance: &SquareLatticeInstance,
    spec: &GridSpec,
) -> Result<MagnetizationGrid, EdError> {
    let (nt, nd) = (spec.nt(), spec.nd());
    let columns: Vec<Vec<f64>> = spec
        .delta_values
        .par_iter()
        .map(|&delta| -> Result<Vec<f64>, EdError> {
            let problem = TfimProblem::from_instance(instance, delta)?;
            let spectral = diagonalize(&problem)?;
            // Column layout [t][spin].
            let mut column = vec![0.0; nt * N_SITES];
            for (ti, &t) in spec.t_values.iter().enumerate() {
                let m = spectral.thermal_magnetization(t)?;
                column[ti * N_SITES..(ti + 1) * N_SITES].copy_from_slice(&m);
            }
            Ok(column)
        })
        .collect::<Result<_, _>>()?;

    let mut data = vec![0.0; N_SITES * nt * nd];
    for (di, column) in columns.iter().enumerate() {
        for ti in 0..nt {
            for spin in 0..N_SITES {
                data[(spin * nt + ti) * nd + di] = column[ti * N_SITES + spin];
            }
        }
    }
    Ok(MagnetizationGrid::from_parts(spec.clone(), N_SITES, data))
}

/// Thermal magnetization of an instance at a single (T, delta) point.
pub fn magnetization_at(
    instance: &SquareLatticeInstance,
    t: f64,
    delta: f64,
) -> Result<Vec<f64>, EdError> {
    let problem = TfimProblem::from_instance(instance, delta)?;
    diagonalize(&problem)?.thermal_magnetization(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::SymmetryElement;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single_spin(h: f64, delta: f64) -> TfimProblem {
        TfimProblem::new(1, vec![h], vec![], delta).unwrap()
    }

    #[test]
    fn single_spin_spectra() {
        let s = diagonalize(&single_spin(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.eigenvalues[1], 1.0, epsilon = 1e-12);

        let s = diagonalize(&single_spin(1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], -f64::sqrt(2.0), epsilon = 1e-12);
        assert_abs_diff_eq!(s.eigenvalues[1], f64::sqrt(2.0), epsilon = 1e-12);
    }

    #[test]
    fn single_spin_thermal_magnetization() {
        let s = diagonalize(&single_spin(1.0, 0.0)).unwrap();
        let m = s.thermal_magnetization(1.0).unwrap();
        assert_abs_diff_eq!(m[0], -f64::tanh(1.0), epsilon = 1e-12);

        let s = diagonalize(&single_spin(1.0, 1.0)).unwrap();
        let m = s.thermal_magnetization(0.0).unwrap();
        assert_abs_diff_eq!(m[0], -1.0 / f64::sqrt(2.0), epsilon = 1e-12);
    }

    #[test]
    fn ferromagnet_without_fields_has_degenerate_ground_state() {
        let couplers: Vec<(usize, usize, f64)> =
            crate::lattice::EDGES.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        let problem = TfimProblem::new(9, vec![0.0; 9], couplers, 0.0).unwrap();
        let s = diagonalize(&problem).unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], -12.0, epsilon = 1e-10);
        assert_eq!(s.ground_manifold().len(), 2);
    }

    #[test]
    fn trace_equals_eigenvalue_sum() {
        let inst = SquareLatticeInstance::from_code(0b011010010011);
        let problem = TfimProblem::from_instance(&inst, 1.3).unwrap();
        let s = diagonalize(&problem).unwrap();
        let trace: f64 = (0..problem.dim()).map(|b| problem.classical_energy(b)).sum();
        let sum: f64 = s.eigenvalues.iter().sum();
        let scale = s.eigenvalues.iter().fold(0.0f64, |a, &e| a.max(e.abs()));
        assert!((trace - sum).abs() <= 1e-9 * scale.max(1.0));
    }

    #[test]
    fn residuals_within_bound_on_full_spectrum() {
        let inst = SquareLatticeInstance::from_code(0b110010110101);
        let problem = TfimProblem::from_instance(&inst, 0.8).unwrap();
        let s = diagonalize(&problem).unwrap();
        let scale = s.eigenvalues.iter().fold(0.0f64, |a, &e| a.max(e.abs()));
        assert!(s.max_residual(&problem) <= RESIDUAL_TOL * scale);
    }

    /// Independent classical oracle: Boltzmann sum over all 2^9 bit strings.
    fn classical_oracle(inst: &SquareLatticeInstance, t: f64) -> Vec<f64> {
        let h: Vec<f64> = (0..9).map(|i| inst.field_magnitude() * inst.field(i) as f64).collect();
        let energies: Vec<f64> = (0..512)
            .map(|b: usize| {
                let spin = |i: usize| if b >> i & 1 == 1 { -1.0 } else { 1.0 };
                let mut e = 0.0;
                for (i, hi) in h.iter().enumerate() {
                    e += hi * spin(i);
                }
                for (e_idx, &(u, v)) in crate::lattice::EDGES.iter().enumerate() {
                    e -= inst.coupler(e_idx) as f64 * spin(u) * spin(v);
                }
                e
            })
            .collect();
        let e0 = energies.iter().cloned().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = energies.iter().map(|&e| (-(e - e0) / t).exp()).collect();
        let z: f64 = weights.iter().sum();
        (0..9)
            .map(|i| (0..512).map(|b| weights[b] * basis_spin(b, i) as f64).sum::<f64>() / z)
            .collect()
    }

    #[test]
    fn classical_limit_matches_brute_force_boltzmann() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let inst = SquareLatticeInstance::from_code(rng.gen_range(0..1 << 21));
            let problem = TfimProblem::from_instance(&inst, 0.0).unwrap();
            let m = diagonalize(&problem).unwrap().thermal_magnetization(0.7).unwrap();
            let oracle = classical_oracle(&inst, 0.7);
            for i in 0..9 {
                assert_abs_diff_eq!(m[i], oracle[i], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn ferromagnetic_uniform_field_magnetization_is_negative_everywhere() {
        let spec = GridSpec::uniform_window(21, 5.0);
        let grid = magnetization_grid(&SquareLatticeInstance::ferromagnetic(), &spec).unwrap();
        for spin in 0..9 {
            for ti in 0..spec.nt() {
                for di in 0..spec.nd() {
                    assert!(grid.m(spin, ti, di) < 0.0);
                }
            }
        }
    }

    #[test]
    fn grid_classical_row_matches_oracle() {
        let inst = SquareLatticeInstance::from_code(0b010110011010);
        let spec = GridSpec::new(vec![0.3, 0.7, 1.9], vec![0.0, 0.5]).unwrap();
        let grid = magnetization_grid(&inst, &spec).unwrap();
        for (ti, &t) in spec.t_values.iter().enumerate() {
            let oracle = classical_oracle(&inst, t);
            for spin in 0..9 {
                assert_abs_diff_eq!(grid.m(spin, ti, 0), oracle[spin], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn gauge_covariance_of_magnetization() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let inst = SquareLatticeInstance::from_code(rng.gen_range(0..1 << 21));
            let site = rng.gen_range(0..9);
            let flipped = inst.apply(&SymmetryElement::new(0, 1 << site));
            let t = rng.gen_range(0.05..3.0);
            let delta = rng.gen_range(0.0..3.0);
            let m = magnetization_at(&inst, t, delta).unwrap();
            let mf = magnetization_at(&flipped, t, delta).unwrap();
            for i in 0..9 {
                let expected = if i == site { -m[i] } else { m[i] };
                assert_abs_diff_eq!(mf[i], expected, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn dihedral_equivariance_of_magnetization() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..4 {
            let inst = SquareLatticeInstance::from_code(rng.gen_range(0..1 << 21));
            let spatial = rng.gen_range(0..8u8);
            let g = SymmetryElement::new(spatial, 0);
            let perm = g.site_perm();
            let rotated = inst.apply(&g);
            let m = magnetization_at(&inst, 0.9, 1.1).unwrap();
            let mr = magnetization_at(&rotated, 0.9, 1.1).unwrap();
            for i in 0..9 {
                assert_abs_diff_eq!(mr[perm[i]], m[i], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn high_temperature_and_strong_field_limits_vanish() {
        let inst = SquareLatticeInstance::from_code(0b101001110100);
        for &(t, delta, bound) in &[(400.0, 0.0, 0.05), (0.05, 400.0, 0.05), (1000.0, 1000.0, 0.02)]
        {
            let m = magnetization_at(&inst, t, delta).unwrap();
            for &mi in &m {
                assert!(mi.abs() < bound, "m = {mi} at T = {t}, delta = {delta}");
            }
        }
    }

    #[test]
    fn magnetization_is_continuous_in_temperature() {
        let inst = SquareLatticeInstance::from_code(0b000111001101);
        let problem = TfimProblem::from_instance(&inst, 0.9).unwrap();
        let s = diagonalize(&problem).unwrap();
        let mut last_jump = f64::INFINITY;
        for n in [20usize, 40, 80] {
            let mut jump = 0.0f64;
            let ts: Vec<f64> = (0..=n).map(|k| 0.5 + k as f64 / n as f64).collect();
            let ms: Vec<Vec<f64>> = ts.iter().map(|&t| s.thermal_magnetization(t).unwrap()).collect();
            for w in ms.windows(2) {
                for i in 0..9 {
                    jump = jump.max((w[1][i] - w[0][i]).abs());
                }
            }
            assert!(jump < last_jump * 1.01);
            last_jump = jump;
        }
    }

    #[test]
    fn grid_spec_validation() {
        assert!(GridSpec::new(vec![], vec![0.0]).is_err());
        assert!(GridSpec::new(vec![0.0, 0.0], vec![0.0]).is_err());
        assert!(GridSpec::new(vec![0.0, -1.0], vec![0.0]).is_err());
        assert!(GridSpec::new(vec![0.0, 1.0], vec![0.0, 2.0]).is_ok());
        let w = GridSpec::default_window();
        assert_eq!(w.nt(), 101);
        assert!(*w.t_values.last().unwrap() < 5.0);
    }

    #[test]
    fn too_many_spins_rejected() {
        assert!(TfimProblem::new(15, vec![0.0; 15], vec![], 0.0).is_err());
    }
}
