//! Shared fixtures for unit tests: the constrained second-order example
//! with the printed terminal data.

use nalgebra::{DMatrix, DVector};

use crate::dp::{Mode, ProblemSpec, TerminalChoice};
use crate::geometry::Polytope;
use crate::terminal::{solve_hinf_riccati, RiccatiData, TerminalPair};

pub fn example_xf() -> Polytope {
    Polytope::from_rows(
        2,
        &[
            (DVector::from_row_slice(&[-0.9849, -0.3155]), 2.1526),
            (DVector::from_row_slice(&[0.9849, 0.3155]), 2.1526),
            (DVector::from_row_slice(&[0.4369, 0.8995]), 0.7079),
            (DVector::from_row_slice(&[-0.4369, -0.8995]), 0.7079),
        ],
    )
    .unwrap()
}

pub fn example_pf() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[20.6143, 5.9244, 5.9244, 14.2329])
}

pub fn example_spec() -> ProblemSpec {
    ProblemSpec {
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
        terminal: TerminalChoice::Given {
            p_f: example_pf(),
            x_f: example_xf(),
        },
        mode: Mode::Constrained,
        bounding_box: None,
    }
}

/// Terminal pair with the printed cost matrix and gains recomputed from
/// the fixed point (the printed matrix is a 4-decimal rounding of it).
pub fn example_terminal(spec: &ProblemSpec) -> TerminalPair {
    let d = RiccatiData {
        a: &spec.a,
        b: &spec.b,
        g: &spec.g,
        q: &spec.q,
        r: &spec.r,
        gamma: spec.gamma,
    };
    let (p_f, k_u, k_w) = solve_hinf_riccati(&d).unwrap();
    let a_f = &spec.a + &spec.b * &k_u;
    let a_c = &a_f + &spec.g * &k_w;
    let x_f = match &spec.terminal {
        TerminalChoice::Given { x_f, .. } => x_f.clone(),
        TerminalChoice::Compute => unreachable!("fixtures supply the terminal set"),
    };
    let _ = p_f;
    TerminalPair {
        p_f: example_pf(),
        k_u,
        k_w,
        a_f,
        a_c,
        x_f,
        gamma_used: spec.gamma,
    }
}
