//! Quench-rate / relaxation-time comparison and the freeze-point crossing.
//!
//! The quench rate at anneal fraction s is |<psi0(t) | psi1(t + dt)>| / dt
//! with dt = t_f / 1000; the system counts as frozen once the bath-induced
//! relaxation time exceeds the inverse quench rate, and the freeze time is
//! the earliest crossing of the two curves.

use super::bath::{relaxation_time_us, OhmicBath};
use super::lanczos::{lowest_states, Eigenpairs, LanczosOptions};
use super::{anneal_to_effective, DynamicsError, K4Model, Schedule};
use crate::lattice::CellMode;

/// Default quench step in anneal fraction; equals dt = t_f/1000.
pub const QUENCH_DS: f64 = 1e-3;

/// Gap threshold (relative to the spectral scale) below which the lowest two
/// states count as degenerate and the overlap is taken in their subspace.
const DEGENERATE_GAP: f64 = 1e-10;

/// Overlap of the ground/first-excited pair across one quench step.
#[derive(Clone, Copy, Debug)]
pub struct QuenchSample {
    /// |<psi0(s) | psi1(s + ds)>|, dimensionless.
    pub overlap: f64,
    /// Excitation energy E1 - E0 at s, schedule units.
    pub omega10: f64,
    /// Summed squared sigma^z matrix elements between the pair at s.
    pub me2: f64,
    /// True when the pair at s was degenerate and the overlap was computed
    /// in the two-dimensional subspace.
    pub degenerate: bool,
}

/// Overlap magnitude between eigenpairs at s and s + ds.
///
/// The magnitude is invariant under the sign/phase freedom of real
/// eigenvectors. For a degenerate pair at s the overlap is the projection of
/// the advanced first excited state onto the 2D ground subspace.
pub fn quench_overlap(at_s: &Eigenpairs, at_next: &Eigenpairs) -> QuenchSample {
    let psi1_next = &at_next.vectors[1];
    let o0: f64 = at_s.vectors[0].iter().zip(psi1_next).map(|(a, b)| a * b).sum();
    let gap = at_s.values[1] - at_s.values[0];
    let scale = at_s.values[0].abs().max(at_s.values[1].abs()).max(f64::MIN_POSITIVE);
    let degenerate = gap < DEGENERATE_GAP * scale;
    let overlap = if degenerate {
        let o1: f64 = at_s.vectors[1].iter().zip(psi1_next).map(|(a, b)| a * b).sum();
        (o0 * o0 + o1 * o1).sqrt()
    } else {
        o0.abs()
    };
    QuenchSample { overlap, omega10: gap, me2: 0.0, degenerate }
}

/// Physical quench rate in 1/us for a given anneal time.
pub fn quench_rate_per_us(overlap: f64, t_f_us: f64) -> f64 {
    overlap / (t_f_us * QUENCH_DS)
}

/// Tabulated freeze diagnostics over an s-grid. Everything stored here is
/// independent of the anneal time: the overlap is taken over a fixed step
/// ds = 1e-3 and the relaxation time depends only on H(s) and the bath.
#[derive(Clone, Debug)]
pub struct FreezeSweep {
    pub s: Vec<f64>,
    pub overlap: Vec<f64>,
    pub omega10: Vec<f64>,
    pub me2: Vec<f64>,
    pub relaxation_us: Vec<f64>,
    pub degenerate: Vec<bool>,
    /// Worst verified eigenpair residual across the sweep.
    pub max_residual: f64,
    pub matvecs: usize,
}

impl FreezeSweep {
    /// Inverse quench rate in microseconds at grid index `i` for an anneal
    /// time `t_f_us`.
    pub fn inverse_quench_rate_us(&self, i: usize, t_f_us: f64) -> f64 {
        let o = self.overlap[i];
        if o <= 0.0 {
            f64::INFINITY
        } else {
            t_f_us * QUENCH_DS / o
        }
    }

    /// CSV export: s, inverse quench rate per anneal time, relaxation time.
    pub fn write_csv<W: std::io::Write>(
        &self,
        mut out: W,
        t_f_list_us: &[f64],
        config_hash: &str,
    ) -> std::io::Result<()> {
        writeln!(out, "# freeze_sweep config_hash={config_hash} version={}", crate::TOOL_VERSION)?;
        write!(out, "s")?;
        for t_f in t_f_list_us {
            write!(out, ",inv_quench_rate_us_tf{t_f}")?;
        }
        writeln!(out, ",relaxation_time_us,omega10,me2,overlap")?;
        for i in 0..self.s.len() {
            write!(out, "{}", self.s[i])?;
            for &t_f in t_f_list_us {
                write!(out, ",{}", self.inverse_quench_rate_us(i, t_f))?;
            }
            writeln!(
                out,
                ",{},{},{},{}",
                self.relaxation_us[i], self.omega10[i], self.me2[i], self.overlap[i]
            )?;
        }
        Ok(())
    }
}

/// Sweep the freeze diagnostics over `n_points` interior anneal fractions.
///
/// Eigenpairs are warm-started from the previous grid point, so the sweep
/// cost is dominated by the first solve.
pub fn sweep_freeze_curves(
    model: &K4Model,
    schedule: &Schedule,
    bath: &OhmicBath,
    n_points: usize,
    opts: &LanczosOptions,
) -> Result<FreezeSweep, DynamicsError> {
    let mut sweep = FreezeSweep {
        s: Vec::with_capacity(n_points),
        overlap: Vec::with_capacity(n_points),
        omega10: Vec::with_capacity(n_points),
        me2: Vec::with_capacity(n_points),
        relaxation_us: Vec::with_capacity(n_points),
        degenerate: Vec::with_capacity(n_points),
        max_residual: 0.0,
        matvecs: 0,
    };
    let mut warm: Option<Eigenpairs> = None;
    for k in 1..=n_points {
        let s = k as f64 / (n_points + 1) as f64;
        let op = model.operator_at(schedule, s);
        let pairs = lowest_states(&op, opts, warm.as_ref().map(|p| p.vectors.as_slice()))?;
        let op_next = model.operator_at(schedule, s + QUENCH_DS);
        let pairs_next = lowest_states(&op_next, opts, Some(&pairs.vectors))?;

        let mut sample = quench_overlap(&pairs, &pairs_next);
        sample.me2 = model
            .sz_matrix_elements(&pairs.vectors[0], &pairs.vectors[1])
            .iter()
            .map(|m| m * m)
            .sum();
        let tau = if sample.omega10 > 0.0 {
            relaxation_time_us(model, &pairs.vectors[0], &pairs.vectors[1], sample.omega10, bath)?
        } else {
            f64::INFINITY
        };

        for p in [&pairs, &pairs_next] {
            for &r in &p.residuals {
                sweep.max_residual = sweep.max_residual.max(r);
            }
            sweep.matvecs += p.matvecs;
        }
        sweep.s.push(s);
        sweep.overlap.push(sample.overlap);
        sweep.omega10.push(sample.omega10);
        sweep.me2.push(sample.me2);
        sweep.relaxation_us.push(tau);
        sweep.degenerate.push(sample.degenerate);
        warm = Some(pairs);
    }
    Ok(sweep)
}

/// Freeze-point estimate for one anneal time.
#[derive(Clone, Debug, serde::Serialize)]
pub struct FreezeEstimate {
    pub t_f_us: f64,
    pub regime: FreezeRegime,
}

#[derive(Clone, Debug, serde::Serialize)]
pub enum FreezeRegime {
    /// Relaxation overtakes the quench inside the sweep: the system freezes
    /// at anneal fraction `s_star`.
    Crossing { s_star: f64, t_star_us: f64 },
    /// Relaxation stays faster than the quench everywhere in the sweep.
    AlwaysAdiabatic,
    /// Relaxation is slower than the quench from the first grid point on.
    AlwaysFrozen,
}

impl FreezeEstimate {
    pub fn s_star(&self) -> Option<f64> {
        match self.regime {
            FreezeRegime::Crossing { s_star, .. } => Some(s_star),
            _ => None,
        }
    }

    /// Effective (T, delta) of the freeze point under the given embedding.
    pub fn effective(
        &self,
        schedule: &Schedule,
        alpha: f64,
        alpha_s: f64,
        cell_mode: CellMode,
        t_phys: f64,
    ) -> Option<(f64, f64)> {
        self.s_star()
            .and_then(|s| anneal_to_effective(schedule, s, alpha, alpha_s, cell_mode, t_phys).ok())
    }
}

/// Locate the freeze point for one anneal time: the earliest s where the
/// relaxation time reaches the inverse quench rate. The crossing between
/// grid points is interpolated linearly in log space, since both curves vary
/// exponentially.
pub fn freeze_time(sweep: &FreezeSweep, t_f_us: f64) -> FreezeEstimate {
    let n = sweep.s.len();
    let frozen = |i: usize| sweep.relaxation_us[i] >= sweep.inverse_quench_rate_us(i, t_f_us);
    let first_frozen = (0..n).find(|&i| frozen(i));
    let regime = match first_frozen {
        None => FreezeRegime::AlwaysAdiabatic,
        Some(0) => FreezeRegime::AlwaysFrozen,
        Some(i) => {
            let log_margin = |j: usize| {
                let tau = sweep.relaxation_us[j].max(1e-300).min(1e300);
                let invq = sweep.inverse_quench_rate_us(j, t_f_us).max(1e-300).min(1e300);
                tau.ln() - invq.ln()
            };
            let (m0, m1) = (log_margin(i - 1), log_margin(i));
            let f = if m1 > m0 { (-m0 / (m1 - m0)).clamp(0.0, 1.0) } else { 1.0 };
            let s_star = sweep.s[i - 1] + f * (sweep.s[i] - sweep.s[i - 1]);
            FreezeRegime::Crossing { s_star, t_star_us: s_star * t_f_us }
        }
    };
    FreezeEstimate { t_f_us, regime }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{CellLattice, K4Params};
    use approx::assert_abs_diff_eq;

    fn small_model() -> K4Model {
        K4Model::new(CellLattice::ferromagnetic_2x2(), K4Params::default()).unwrap()
    }

    #[test]
    fn time_independent_hamiltonian_has_zero_quench_rate() {
        let model = small_model();
        let op = model.operator(1.2, 0.9);
        let opts = LanczosOptions::default();
        let pairs = lowest_states(&op, &opts, None).unwrap();
        let again = lowest_states(&op, &opts, Some(&pairs.vectors)).unwrap();
        let sample = quench_overlap(&pairs, &again);
        assert!(sample.overlap <= 1e-7, "overlap = {}", sample.overlap);
    }

    #[test]
    fn quench_rate_scales_inversely_with_anneal_time() {
        // The overlap is evaluated at fixed ds, so the physical rate carries
        // the whole t_f dependence.
        let overlap = 0.0123;
        let r20 = quench_rate_per_us(overlap, 20.0);
        let r200 = quench_rate_per_us(overlap, 200.0);
        assert_abs_diff_eq!(r200, r20 / 10.0, epsilon = 1e-15);
    }

    #[test]
    fn overlap_is_invariant_under_global_sign_flips() {
        let model = small_model();
        let schedule = Schedule::default_surrogate(20.0);
        let opts = LanczosOptions::default();
        let op = model.operator_at(&schedule, 0.4);
        let pairs = lowest_states(&op, &opts, None).unwrap();
        let op_next = model.operator_at(&schedule, 0.4 + QUENCH_DS);
        let mut pairs_next = lowest_states(&op_next, &opts, Some(&pairs.vectors)).unwrap();
        let s1 = quench_overlap(&pairs, &pairs_next);
        for v in pairs_next.vectors.iter_mut() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let s2 = quench_overlap(&pairs, &pairs_next);
        assert_abs_diff_eq!(s1.overlap, s2.overlap, epsilon = 1e-15);
    }

    #[test]
    fn two_level_quench_matches_analytic_rotation() {
        // H(s) = -A(s) sx + B(s) sz: the eigenbasis rotation angle is
        // theta(s) = atan2(A, B) / 2 and the cross-overlap over ds equals
        // sin(theta(s + ds) - theta(s)).
        struct TwoLevel {
            a: f64,
            b: f64,
        }
        impl crate::dynamics::SymOp for TwoLevel {
            fn dim(&self) -> usize {
                2
            }
            fn apply(&self, x: &[f64], y: &mut [f64]) {
                y[0] = self.b * x[0] - self.a * x[1];
                y[1] = -self.a * x[0] - self.b * x[1];
            }
        }
        let schedule = Schedule::default_surrogate(20.0);
        let opts = LanczosOptions { k: 2, ..Default::default() };
        let s = 0.37;
        let ds = QUENCH_DS;
        let h0 = TwoLevel { a: schedule.a(s), b: schedule.b(s) };
        let h1 = TwoLevel { a: schedule.a(s + ds), b: schedule.b(s + ds) };
        let p0 = lowest_states(&h0, &opts, None).unwrap();
        let p1 = lowest_states(&h1, &opts, None).unwrap();
        let sample = quench_overlap(&p0, &p1);
        let theta = |s: f64| 0.5 * f64::atan2(schedule.a(s), schedule.b(s));
        let expect = (theta(s + ds) - theta(s)).sin().abs();
        assert_abs_diff_eq!(sample.overlap, expect, epsilon = 1e-4);
    }

    #[test]
    fn vanishing_bath_coupling_freezes_immediately() {
        let model = small_model();
        let schedule = Schedule::default_surrogate(20.0);
        let bath = OhmicBath { eta: 0.0, omega_c: 80.0, temperature: 0.3542 };
        let opts = LanczosOptions::default();
        let sweep = sweep_freeze_curves(&model, &schedule, &bath, 12, &opts).unwrap();
        let est = freeze_time(&sweep, 20.0);
        assert!(matches!(est.regime, FreezeRegime::AlwaysFrozen));
    }

    #[test]
    fn sweep_produces_finite_diagnostics() {
        let model = small_model();
        let schedule = Schedule::default_surrogate(20.0);
        let bath = OhmicBath::default_for_peak(schedule.b_max());
        let opts = LanczosOptions::default();
        let sweep = sweep_freeze_curves(&model, &schedule, &bath, 10, &opts).unwrap();
        assert_eq!(sweep.s.len(), 10);
        assert!(sweep.max_residual < 1e-6);
        for i in 0..10 {
            assert!(sweep.overlap[i].is_finite());
            assert!(sweep.omega10[i] > 0.0);
            assert!(sweep.relaxation_us[i] > 0.0);
        }
        let mut csv = Vec::new();
        sweep.write_csv(&mut csv, &[20.0, 200.0, 990.0], "cafe").unwrap();
        assert!(String::from_utf8(csv).unwrap().lines().count() == 2 + 10);
    }
}
