use hinf_explicit::config::Config;
use hinf_explicit::dp::{run_recursion, Mode, ProblemSpec, TerminalChoice};
use hinf_explicit::geometry::Polytope;
use hinf_explicit::terminal::{solve_hinf_riccati, RiccatiData, TerminalPair};
use nalgebra::{DMatrix, DVector};

fn main() {
    let cfg = Config::default();
    let xf = Polytope::from_rows(2, &[
        (DVector::from_row_slice(&[-0.9849, -0.3155]), 2.1526),
        (DVector::from_row_slice(&[0.9849, 0.3155]), 2.1526),
        (DVector::from_row_slice(&[0.4369, 0.8995]), 0.7079),
        (DVector::from_row_slice(&[-0.4369, -0.8995]), 0.7079),
    ]).unwrap();
    let p_f_printed = DMatrix::from_row_slice(2, 2, &[20.6143, 5.9244, 5.9244, 14.2329]);
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
        terminal: TerminalChoice::Given { p_f: p_f_printed.clone(), x_f: xf.clone() },
        mode: Mode::Constrained,
        bounding_box: None,
    };
    let d = RiccatiData { a: &spec.a, b: &spec.b, g: &spec.g, q: &spec.q, r: &spec.r, gamma: 100.0 };
    let (p_f, k_u, k_w) = solve_hinf_riccati(&d).unwrap();
    let a_f = &spec.a + &spec.b * &k_u;
    let a_c = &a_f + &spec.g * &k_w;
    let terminal = TerminalPair { p_f: p_f_printed, k_u, k_w, a_f, a_c, x_f: xf, gamma_used: 100.0 };
    let _ = p_f;
    let t0 = std::time::Instant::now();
    match run_recursion(&spec, &terminal, &cfg) {
        Ok(stages) => {
            for s in &stages {
                println!("stage {}: x-regions {}, z-regions {}", s.stage, s.min_regions.len(), s.max_regions.len());
            }
            println!("elapsed {:?}", t0.elapsed());
        }
        Err(e) => println!("error: {e}"),
    }
}
