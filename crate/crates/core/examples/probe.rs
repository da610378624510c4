use hinf_explicit::config::Config;
use hinf_explicit::geometry::Polytope;
use hinf_explicit::terminal::{solve_hinf_riccati, spectral_radius, RiccatiData};
use nalgebra::{DMatrix, DVector};

fn main() {
    let cfg = Config::default();
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    let b = DMatrix::from_row_slice(2, 1, &[0.5, 1.0]);
    let g = DMatrix::identity(2, 2);
    let q = DMatrix::identity(2, 2) * 10.0;
    let r = DMatrix::from_row_slice(1, 1, &[1.0]);
    let d = RiccatiData { a: &a, b: &b, g: &g, q: &q, r: &r, gamma: 100.0 };
    let (p, k_u, k_w) = solve_hinf_riccati(&d).unwrap();
    println!("P = {p:.6}");
    println!("K_u = {k_u:.6}");
    println!("K_w = {k_w:.6}");
    let a_f = &a + &b * &k_u;
    println!("A_f = {a_f:.6}, rho = {}", spectral_radius(&a_f));
    // printed Xf, symmetric variant
    for (label, row2) in [("printed(asym)", [0.9489, 0.3155]), ("symmetric", [0.9849, 0.3155])] {
        let x_f = Polytope::from_rows(2, &[
            (DVector::from_row_slice(&[-0.9849, -0.3155]), 2.1526),
            (DVector::from_row_slice(&row2), 2.1526),
            (DVector::from_row_slice(&[0.4369, 0.8995]), 0.7079),
            (DVector::from_row_slice(&[-0.4369, -0.8995]), 0.7079),
        ]).unwrap();
        let verts = x_f.vertices(&cfg.tol).unwrap();
        println!("--- {label}: {} vertices", verts.len());
        let w_verts = Polytope::inf_box(2, 0.1).vertices(&cfg.tol).unwrap();
        let mut worst: f64 = -1e9;
        for v in &verts {
            println!("  vertex {:?} K_u v = {:.4}", v.as_slice(), (&k_u * v)[0]);
            for wv in &w_verts {
                let img = &a_f * v + &g * wv;
                for i in 0..x_f.num_rows() {
                    let gap = x_f.row_matrix().row(i).transpose().dot(&img) - x_f.offsets()[i];
                    worst = worst.max(gap);
                }
            }
        }
        println!("  worst invariance gap: {worst:.6}");
    }
}
