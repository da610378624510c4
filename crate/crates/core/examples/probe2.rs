use hinf_explicit::config::Config;
use hinf_explicit::dp::{stage_max, Mode, ProblemSpec, TerminalChoice};
use hinf_explicit::geometry::Polytope;
use hinf_explicit::pwq::{PwqFunction, QuadraticForm};
use hinf_explicit::terminal::{solve_hinf_riccati, RiccatiData};
use nalgebra::{DMatrix, DVector};

fn main() {
    let cfg = Config::default();
    let xf = Polytope::from_rows(2, &[
        (DVector::from_row_slice(&[-0.9849, -0.3155]), 2.1526),
        (DVector::from_row_slice(&[0.9849, 0.3155]), 2.1526),
        (DVector::from_row_slice(&[0.4369, 0.8995]), 0.7079),
        (DVector::from_row_slice(&[-0.4369, -0.8995]), 0.7079),
    ]).unwrap();
    let spec = ProblemSpec {
        a: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
        b: DMatrix::from_row_slice(2, 1, &[0.5, 1.0]),
        g: DMatrix::identity(2, 2),
        q: DMatrix::identity(2, 2) * 10.0,
        r: DMatrix::from_row_slice(1, 1, &[1.0]),
        gamma: 100.0,
        x_set: Polytope::inf_box(2, 10.0),
        u_set: Polytope::inf_box(1, 1.0),
        w_set: Polytope::inf_box(2, 0.1),
        horizon: 2,
        terminal: TerminalChoice::Given { p_f: DMatrix::zeros(2,2), x_f: xf.clone() },
        mode: Mode::Constrained,
        bounding_box: None,
    };
    let d = RiccatiData { a: &spec.a, b: &spec.b, g: &spec.g, q: &spec.q, r: &spec.r, gamma: 100.0 };
    let (p_f, _, _) = solve_hinf_riccati(&d).unwrap();
    let xf2 = xf.clone();
    let vf = PwqFunction::single(xf, QuadraticForm::from_matrix(p_f).unwrap()).unwrap();
    let out = stage_max(&spec, &vf, &xf2, &spec.x_set, &cfg).unwrap();
    println!("{} z-regions (stage-1 max)", out.regions.len());
    for (k, r) in out.regions.iter().enumerate() {
        println!("region {k}: cells {:?} active {:?} cheb_r {:.4} seed {:?}",
            r.cells, r.active_sets, r.region.chebyshev().1, r.seed.as_slice());
    }
    for (k, r) in out.regions.iter().enumerate() {
        let eig = r.value.q_mat.clone().symmetric_eigen().eigenvalues;
        let gain = r.law.gain.amax();
        println!("region {k}: value eigs {:?} law |K| {:.3}", eig.as_slice().iter().map(|x| (x*100.0).round()/100.0).collect::<Vec<_>>(), gain);
    }
    // pairwise face inspection
    for i in 0..out.regions.len() {
        for j in i+1..out.regions.len() {
            let face = out.regions[i].region.intersect(&out.regions[j].region, &cfg.tol).unwrap();
            if face.is_empty() { continue; }
            let (c, r) = face.chebyshev();
            let vi = out.regions[i].value.value(&c);
            let vj = out.regions[j].value.value(&c);
            println!("pair ({i},{j}): face radius {r:.2e}, value gap at center {:.3e} (v ~ {:.1})", (vi-vj).abs(), vi);
        }
    }
}
