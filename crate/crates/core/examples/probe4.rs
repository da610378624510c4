use hinf_explicit::config::Config;
use hinf_explicit::dp::{stage_max, stage_min, Mode, ProblemSpec, TerminalChoice};
use hinf_explicit::geometry::Polytope;
use hinf_explicit::pwq::{PwqFunction, QuadraticForm};
use hinf_explicit::sampling::face_points;
use hinf_explicit::terminal::{solve_hinf_riccati, RiccatiData};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;

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
    let (_, k_u, _) = solve_hinf_riccati(&d).unwrap();
    let _ = k_u;
    let vf = PwqFunction::single(xf.clone(), QuadraticForm::from_matrix(p_f_printed).unwrap()).unwrap();
    let max1 = stage_max(&spec, &vf, &xf, &spec.x_set, &cfg).unwrap();
    println!("stage1 max: {} regions", max1.regions.len());
    let min1 = stage_min(&spec, &max1, &xf, &spec.x_set, &cfg).unwrap();
    println!("stage1 min: {} regions", min1.regions.len());
    for (k, r) in min1.regions.iter().enumerate() {
        println!("  region {k}: cells {:?} active {:?} K {:?} k {:.4} seed {:?}", r.cells, r.active_sets,
            r.law.gain.as_slice().iter().map(|x|(x*1e4).round()/1e4).collect::<Vec<_>>(), r.law.offset[0], r.seed.as_slice());
    }
    // Brute force: scalar golden-section over the feasible u-interval.
    let brute = |x: &DVector<f64>| -> Option<(f64, f64)> {
        let cell = &max1.value.partition.cells[0]; // single Z_0 cell
        // u-interval from cell rows at fixed x
        let mut lo = -1e9f64; let mut hi = 1e9f64;
        for i in 0..cell.num_rows() {
            let a = cell.row_matrix().row(i);
            let au = a[2]; let ax = a[0]*x[0] + a[1]*x[1];
            let b = cell.offsets()[i];
            if au > 1e-9 { hi = hi.min((b - ax)/au); }
            else if au < -1e-9 { lo = lo.max((b - ax)/au); }
            else if ax > b + 1e-9 { return None; }
        }
        if lo > hi { return None; }
        let jfun = |u: f64| max1.value.pieces[0].value(&DVector::from_row_slice(&[x[0], x[1], u]));
        // golden section
        let (mut a, mut b) = (lo, hi);
        let phi = 0.5*(3.0 - 5f64.sqrt());
        let mut c = a + phi*(b-a); let mut d = b - phi*(b-a);
        let (mut fc, mut fd) = (jfun(c), jfun(d));
        for _ in 0..200 {
            if fc < fd { b = d; d = c; fd = fc; c = a + phi*(b-a); fc = jfun(c); }
            else { a = c; c = d; fc = fd; d = b - phi*(b-a); fd = jfun(d); }
        }
        let u = 0.5*(a+b);
        Some((u, jfun(u)))
    };
    let cfg2 = cfg;
    for seed_xy in [[-2.7053628502837923, 1.3140896460581655], [-3.1997737107652373, 0.6391428717879706],
                    [-2.95, 0.97], [-2.9, 1.05], [-3.05, 0.9]] {
        let x = DVector::from_row_slice(&seed_xy);
        if let Some((ub, vb)) = brute(&x) {
            let ul = min1.law.evaluate(&x, &cfg2).map(|v| v[0]);
            let vl = min1.value.evaluate(&x, &cfg2);
            println!("x {:?}: brute u {ub:.6} v {vb:.6} | parametric u {:?} v {:?}", seed_xy, ul.map(|v|(v*1e6).round()/1e6), vl.map(|v|(v*1e6).round()/1e6));
        } else { println!("x {:?}: infeasible", seed_xy); }
    }
    // facet-adjacent gradient jumps
    let v1 = &min1.value;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    for (i, j, face) in v1.adjacent_pairs(&cfg).unwrap() {
        let mut jump: f64 = 0.0;
        for x in face_points(&face, &mut rng, 20, &cfg.tol).unwrap() {
            let gi = v1.pieces[i].gradient(&x);
            let gj = v1.pieces[j].gradient(&x);
            jump = jump.max((gi - gj).norm());
        }
        if jump > 1e-6 {
            println!("  JUMP {jump:.3e} between regions {i} and {j}");
        }
    }
}

// appended: brute-force verification of the stage-1 law around the jump facet
