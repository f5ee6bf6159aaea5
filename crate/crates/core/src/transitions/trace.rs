//! Zero-curve tracing: locates sign changes of the magnetization on grid
//! edges, refines each crossing on the continuous m_i(T, delta), and links
//! crossings into polylines by marching through grid cells.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use crate::ed::{self, EdError, GridSpec, MagnetizationGrid, ThermalTable, TfimProblem};
use crate::lattice::SquareLatticeInstance;

use super::{SpinType, ZERO_TOL};

/// One zero curve in (T, delta) space.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct Polyline {
    /// Vertices as (T, delta) pairs.
    pub points: Vec<(f64, f64)>,
    /// True when the first and last vertex close a loop.
    pub closed: bool,
}

/// Traced transitions of all spins of one instance.
#[derive(Clone, Debug)]
pub struct TransitionSet {
    pub spec: GridSpec,
    pub per_spin: Vec<Vec<Polyline>>,
    /// Saddle cells whose pairing stayed ambiguous after subdivision,
    /// as (spin, ti, di).
    pub ambiguous_cells: Vec<(usize, usize, usize)>,
}

impl TransitionSet {
    pub fn polyline_count(&self, spin: usize) -> usize {
        self.per_spin[spin].len()
    }

    pub fn total_polylines(&self) -> usize {
        self.per_spin.iter().map(Vec::len).sum()
    }

    pub fn vertices(&self, spin: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.per_spin[spin].iter().flat_map(|p| p.points.iter().copied())
    }

    /// JSON-lines export, one record per (class_id, spin).
    pub fn write_jsonl<W: std::io::Write>(
        &self,
        mut out: W,
        class_id: usize,
    ) -> std::io::Result<()> {
        for (spin, polylines) in self.per_spin.iter().enumerate() {
            let record = serde_json::json!({
                "class_id": class_id,
                "spin": spin,
                "polylines": polylines,
            });
            writeln!(out, "{record}")?;
        }
        Ok(())
    }
}

/// On-demand magnetization evaluator with a per-delta spectrum memo.
pub(crate) struct Evaluator<'a> {
    instance: &'a SquareLatticeInstance,
    tables: RefCell<HashMap<u64, Rc<ThermalTable>>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(instance: &'a SquareLatticeInstance) -> Self {
        Evaluator { instance, tables: RefCell::new(HashMap::new()) }
    }

    fn table(&self, delta: f64) -> Result<Rc<ThermalTable>, EdError> {
        if let Some(t) = self.tables.borrow().get(&delta.to_bits()) {
            return Ok(t.clone());
        }
        let problem = TfimProblem::from_instance(self.instance, delta)?;
        let table = Rc::new(ed::diagonalize(&problem)?.thermal_table());
        self.tables.borrow_mut().insert(delta.to_bits(), table.clone());
        Ok(table)
    }

    pub fn m(&self, spin: usize, t: f64, delta: f64) -> Result<f64, EdError> {
        Ok(self.table(delta)?.magnetization(spin, t))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum EdgeKind {
    /// Varying T at fixed delta column.
    AlongT,
    /// Varying delta at fixed T row.
    AlongD,
}

/// A grid edge hosting a refined crossing, identified by its low corner.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
struct EdgeId {
    kind: EdgeKind,
    ti: usize,
    di: usize,
}

fn sign_of(m: f64) -> i8 {
    if m > ZERO_TOL {
        1
    } else if m < -ZERO_TOL {
        -1
    } else {
        0
    }
}

/// Refine a bracketed zero along one coordinate with a safeguarded
/// secant/bisection hybrid until |m| <= ZERO_TOL.
fn refine_zero<F>(mut f: F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> Result<f64, EdError>
where
    F: FnMut(f64) -> Result<f64, EdError>,
{
    debug_assert!(fa * fb < 0.0);
    let mut best = (a, fa.abs());
    for iter in 0..200 {
        // Secant candidate, clamped away from the bracket ends; fall back to
        // bisection every few steps to guarantee progress.
        let mid = 0.5 * (a + b);
        let mut x = if (fb - fa).abs() > f64::MIN_POSITIVE {
            b - fb * (b - a) / (fb - fa)
        } else {
            mid
        };
        if !(x > a && x < b) || iter % 3 == 2 {
            x = mid;
        }
        let fx = f(x)?;
        if fx.abs() < best.1 {
            best = (x, fx.abs());
        }
        if fx.abs() <= ZERO_TOL {
            return Ok(x);
        }
        if (fx > 0.0) == (fa > 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    Ok(best.0)
}

/// Extract the zero curves of every spin from a magnetization grid.
///
/// Sign changes on grid edges are refined on the continuous magnetization
/// (re-diagonalizing as needed along the delta direction) until the residual
/// magnetization at each emitted vertex is at most [`ZERO_TOL`], then linked
/// into polylines cell by cell. Grid points whose magnetization is already
/// indeterminate become vertices directly.
pub fn trace_transitions(
    instance: &SquareLatticeInstance,
    grid: &MagnetizationGrid,
) -> Result<TransitionSet, EdError> {
    let spec = &grid.spec;
    let (nt, nd) = (spec.nt(), spec.nd());
    let eval = Evaluator::new(instance);
    let mut per_spin = Vec::with_capacity(grid.n_spins);
    let mut ambiguous = Vec::new();

    for spin in 0..grid.n_spins {
        // Refined crossing per grid edge.
        let mut crossings: HashMap<EdgeId, (f64, f64)> = HashMap::new();
        for ti in 0..nt {
            for di in 0..nd {
                let s0 = sign_of(grid.m(spin, ti, di));
                if ti + 1 < nt {
                    let s1 = sign_of(grid.m(spin, ti + 1, di));
                    if s0 * s1 < 0 {
                        let d = spec.delta_values[di];
                        let t = refine_zero(
                            |t| eval.m(spin, t, d),
                            spec.t_values[ti],
                            spec.t_values[ti + 1],
                            grid.m(spin, ti, di),
                            grid.m(spin, ti + 1, di),
                        )?;
                        crossings.insert(EdgeId { kind: EdgeKind::AlongT, ti, di }, (t, d));
                    } else if s0 == 0 {
                        crossings
                            .entry(EdgeId { kind: EdgeKind::AlongT, ti, di })
                            .or_insert((spec.t_values[ti], spec.delta_values[di]));
                    }
                }
                if di + 1 < nd {
                    let s1 = sign_of(grid.m(spin, ti, di + 1));
                    if s0 * s1 < 0 {
                        let t = spec.t_values[ti];
                        let d = refine_zero(
                            |d| eval.m(spin, t, d),
                            spec.delta_values[di],
                            spec.delta_values[di + 1],
                            grid.m(spin, ti, di),
                            grid.m(spin, ti, di + 1),
                        )?;
                        crossings.insert(EdgeId { kind: EdgeKind::AlongD, ti, di }, (t, d));
                    } else if s0 == 0 {
                        crossings
                            .entry(EdgeId { kind: EdgeKind::AlongD, ti, di })
                            .or_insert((spec.t_values[ti], spec.delta_values[di]));
                    }
                }
            }
        }

        // Pair crossings within each cell into segments.
        let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
        for ti in 0..nt.saturating_sub(1) {
            for di in 0..nd.saturating_sub(1) {
                let left = EdgeId { kind: EdgeKind::AlongT, ti, di };
                let right = EdgeId { kind: EdgeKind::AlongT, ti, di: di + 1 };
                let bottom = EdgeId { kind: EdgeKind::AlongD, ti, di };
                let top = EdgeId { kind: EdgeKind::AlongD, ti: ti + 1, di };
                let present: Vec<EdgeId> = [left, bottom, right, top]
                    .into_iter()
                    .filter(|id| crossings.contains_key(id))
                    .collect();
                match present.len() {
                    2 => segments.push((present[0], present[1])),
                    3 => {
                        // A curve grazing a corner; join the two closest and
                        // leave the third dangling.
                        let p: Vec<(f64, f64)> =
                            present.iter().map(|id| crossings[id]).collect();
                        let d = |a: (f64, f64), b: (f64, f64)| {
                            (a.0 - b.0).hypot(a.1 - b.1)
                        };
                        let pairs = [(0, 1), (0, 2), (1, 2)];
                        let &(i, j) = pairs
                            .iter()
                            .min_by(|&&(a, b), &&(c, e)| {
                                d(p[a], p[b]).partial_cmp(&d(p[c], p[e])).unwrap()
                            })
                            .unwrap();
                        segments.push((present[i], present[j]));
                    }
                    4 => {
                        // Saddle cell: resolve the pairing with the sign at
                        // the cell centre (one extra evaluation).
                        let tc = 0.5 * (spec.t_values[ti] + spec.t_values[ti + 1]);
                        let dc = 0.5 * (spec.delta_values[di] + spec.delta_values[di + 1]);
                        let centre = sign_of(eval.m(spin, tc, dc)?);
                        let corner = sign_of(grid.m(spin, ti, di));
                        if centre == 0 {
                            ambiguous.push((spin, ti, di));
                        }
                        if centre != 0 && centre == corner {
                            // Curves separate the two corners opposite to
                            // (ti, di): left pairs with top, bottom with
                            // right.
                            segments.push((left, top));
                            segments.push((bottom, right));
                        } else {
                            segments.push((left, bottom));
                            segments.push((right, top));
                        }
                    }
                    _ => {}
                }
            }
        }

        per_spin.push(link_segments(&segments, &crossings));
    }

    Ok(TransitionSet { spec: spec.clone(), per_spin, ambiguous_cells: ambiguous })
}

/// Chain segments sharing grid edges into polylines; open chains first, then
/// remaining loops.
fn link_segments(
    segments: &[(EdgeId, EdgeId)],
    crossings: &HashMap<EdgeId, (f64, f64)>,
) -> Vec<Polyline> {
    let mut adjacency: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (idx, &(a, b)) in segments.iter().enumerate() {
        adjacency.entry(a).or_default().push(idx);
        adjacency.entry(b).or_default().push(idx);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();

    let walk = |start_edge: EdgeId, used: &mut Vec<bool>| -> Vec<EdgeId> {
        let mut chain = vec![start_edge];
        let mut node = start_edge;
        loop {
            let Some(next_seg) = adjacency[&node].iter().copied().find(|&s| !used[s]) else {
                break;
            };
            used[next_seg] = true;
            let (a, b) = segments[next_seg];
            node = if a == node { b } else { a };
            chain.push(node);
        }
        chain
    };

    // Open chains start at nodes with odd unused degree.
    let mut nodes: Vec<EdgeId> = adjacency.keys().copied().collect();
    nodes.sort_by_key(|id| (id.ti, id.di, id.kind == EdgeKind::AlongD));
    for &node in &nodes {
        let unused = adjacency[&node].iter().filter(|&&s| !used[s]).count();
        if unused == 1 {
            let chain = walk(node, &mut used);
            polylines.push(to_polyline(chain, crossings, false));
        }
    }
    // Remaining components are loops.
    for &node in &nodes {
        if adjacency[&node].iter().any(|&s| !used[s]) {
            let chain = walk(node, &mut used);
            polylines.push(to_polyline(chain, crossings, true));
        }
    }
    polylines
}

fn to_polyline(
    chain: Vec<EdgeId>,
    crossings: &HashMap<EdgeId, (f64, f64)>,
    closed: bool,
) -> Polyline {
    Polyline { points: chain.into_iter().map(|id| crossings[&id]).collect(), closed }
}

/// 2D histogram of transition vertices over a window, split by spin type.
#[derive(Clone, Debug)]
pub struct DensityHistogram {
    pub t_max: f64,
    pub d_max: f64,
    pub bins: usize,
    /// Counts per type in [Type0, TypeI, TypeII, TypeIII] order, row-major
    /// [t_bin][d_bin].
    pub counts: [Vec<u32>; 4],
}

impl DensityHistogram {
    pub fn count(&self, spin_type: SpinType, t_bin: usize, d_bin: usize) -> u32 {
        self.counts[type_slot(spin_type)][t_bin * self.bins + d_bin]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|c| c.iter().map(|&v| v as u64).sum::<u64>()).sum()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t_bin,d_bin,type0,type1,type2,type3")?;
        for tb in 0..self.bins {
            for db in 0..self.bins {
                let idx = tb * self.bins + db;
                writeln!(
                    out,
                    "{tb},{db},{},{},{},{}",
                    self.counts[0][idx], self.counts[1][idx], self.counts[2][idx], self.counts[3][idx]
                )?;
            }
        }
        Ok(())
    }
}

fn type_slot(spin_type: SpinType) -> usize {
    match spin_type {
        SpinType::Type0 => 0,
        SpinType::TypeI => 1,
        SpinType::TypeII => 2,
        SpinType::TypeIII => 3,
    }
}

/// Aggregate transition-vertex density over a window, coloured by spin type.
///
/// `entries` pairs each traced spin with its classified type; vertices
/// outside the window are dropped.
pub fn transition_density<'a>(
    entries: impl IntoIterator<Item = (SpinType, &'a TransitionSet, usize)>,
    t_max: f64,
    d_max: f64,
    bins: usize,
) -> DensityHistogram {
    let mut counts: [Vec<u32>; 4] = std::array::from_fn(|_| vec![0u32; bins * bins]);
    for (spin_type, set, spin) in entries {
        let slot = type_slot(spin_type);
        for (t, d) in set.vertices(spin) {
            if t < t_max && d < d_max {
                let tb = ((t / t_max) * bins as f64) as usize;
                let db = ((d / d_max) * bins as f64) as usize;
                counts[slot][tb.min(bins - 1) * bins + db.min(bins - 1)] += 1;
            }
        }
    }
    DensityHistogram { t_max, d_max, bins, counts }
}
