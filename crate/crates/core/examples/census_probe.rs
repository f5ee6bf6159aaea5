// probe: infinitesimal-delta sign via the strict (unique) ground state at small delta
use superspin_core::ed::{diagonalize, TfimProblem};
use superspin_core::lattice::enumerate_classes;
use superspin_core::transitions::analyze_origin_without_crosscheck;

fn ground_m(inst: &superspin_core::SquareLatticeInstance, delta: f64) -> Vec<f64> {
    let p = TfimProblem::from_instance(inst, delta).unwrap();
    let s = diagonalize(&p).unwrap();
    (0..9).map(|i| s.sz_expectation(i, 0)).collect()
}

fn main() {
    let classes = enumerate_classes();
    let deltas = [3e-3, 1e-3, 3e-4];
    let mut opposed = 0usize;
    let mut inconsistent = Vec::new();
    let mut tiny = Vec::new();
    for (id, inst) in classes.iter().enumerate() {
        let a = analyze_origin_without_crosscheck(inst);
        // only spins with definite classical orientation can be type III
        let needs: Vec<usize> = (0..9).filter(|&s| a.balance[s].0 != a.balance[s].1).collect();
        if needs.is_empty() {
            continue;
        }
        let ms: Vec<Vec<f64>> = deltas.iter().map(|&d| ground_m(inst, d)).collect();
        for &spin in &needs {
            let signs: Vec<i8> = ms.iter().map(|m| if m[spin] > 0.0 { 1 } else { -1 }).collect();
            let consistent = signs.iter().all(|&s| s == signs[0]);
            if !consistent {
                inconsistent.push((id, spin, ms.iter().map(|m| m[spin]).collect::<Vec<_>>()));
            }
            let magnitude_ok = ms[1][spin].abs() > 1e-9;
            if !magnitude_ok {
                tiny.push((id, spin, ms[1][spin]));
            }
            if consistent && signs[0] == -a.classical_sign[spin] {
                opposed += 1;
            }
        }
    }
    println!("quantum-opposed (consistent across deltas): {opposed}");
    println!("inconsistent sign across deltas: {}", inconsistent.len());
    for x in inconsistent.iter().take(6) {
        println!("  {x:?}");
    }
    println!("tiny |m| at delta=1e-3: {}", tiny.len());
    for x in tiny.iter().take(6) {
        println!("  {x:?}");
    }
}
