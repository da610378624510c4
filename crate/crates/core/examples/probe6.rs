use hinf_explicit::artifacts;
use hinf_explicit::config::Config;
use nalgebra::DVector;

fn main() {
    let cfg = Config::default();
    let (_, _, stages) = artifacts::load_synthesis(std::path::Path::new("/tmp/run/out")).unwrap();
    let s2 = &stages[1];
    // the J partition cells (z-space) for the stage-2 min objective
    let j = &s2.max_value;
    println!("J cells: {}", j.num_pieces());
    for (k, c) in j.partition.cells.iter().enumerate() {
        println!("J cell {k}: rows {} cheb {:?} r {:.3}", c.num_rows(), c.chebyshev().0.as_slice().iter().map(|v|(v*100.0).round()/100.0).collect::<Vec<_>>(), c.chebyshev().1);
    }
    // overlap point of regions 1 and 7 (x-space)
    let x = DVector::from_row_slice(&[-4.021233005812835, -0.18967698152705748]);
    let u = s2.min_regions[1].law.apply(&x);
    println!("law u at overlap center: {:?}", u.as_slice());
    let z = DVector::from_row_slice(&[x[0], x[1], u[0]]);
    // which J cells contain (x, u*)?
    for (k, c) in j.partition.cells.iter().enumerate() {
        let mut worst: f64 = f64::NEG_INFINITY;
        for r in 0..c.num_rows() {
            let g = c.row_matrix().row(r).transpose().dot(&z) - c.offsets()[r];
            worst = worst.max(g);
        }
        println!("J cell {k}: max row residual at (x,u*) = {worst:.3e}");
    }
    // J piece values at z
    for (k, p) in j.pieces.iter().enumerate() {
        println!("J piece {k} at z: {:.9}", p.value(&z));
    }
    // region polytopes
    for idx in [1usize, 7] {
        let r = &s2.min_regions[idx];
        println!("region {idx} rows:");
        for i in 0..r.region.num_rows() {
            println!("  {:?} | {:.6}", r.region.row_matrix().row(i).transpose().as_slice().iter().map(|v|(v*1e6).round()/1e6).collect::<Vec<_>>(), r.region.offsets()[i]);
        }
    }
}
