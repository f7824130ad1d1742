use degenspec::symbols::{LatticeBase, SymbolSpec};
use degenspec::torus::{assemble_dense, PotentialField, TorusGrid};
use std::time::Instant;

fn main() {
    for l in [32usize, 64] {
        let spec = SymbolSpec::lattice_bcs(LatticeBase::Standard, 2, 0.5).unwrap();
        let grid = TorusGrid::lattice(2, l).unwrap();
        let v = PotentialField::delta(&grid, 1.0, &[0, 0]);
        let t0 = Instant::now();
        let m = assemble_dense(&spec, &v, &grid).unwrap();
        let t1 = Instant::now();
        let vals = degenspec::linalg::eigvalsh_real(&m).unwrap();
        let t2 = Instant::now();
        let (_, _) = degenspec::linalg::eigh_real(&m).unwrap();
        let t3 = Instant::now();
        let s = degenspec::linalg::singular_values_real(&m).unwrap();
        let t4 = Instant::now();
        println!("L={l} N={}: assemble {:?}, eigvals {:?}, eig+vecs {:?}, svd {:?}, minw={:.4e} maxs={:.3}",
            grid.len(), t1-t0, t2-t1, t3-t2, t4-t3, vals[0], s[0]);
    }
}
