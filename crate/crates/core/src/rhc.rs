//! Receding-horizon closed-loop simulation under the explicit control law,
//! with dissipation and finite-gain certificates and the finite-time
//! attraction check for the restricted-mode coverage sets.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::dp::{output_matrix, ProblemSpec, StageResult};
use crate::error::{Error, Result};
use crate::geometry::Polytope;
use crate::pwq::{PiecewiseAffineLaw, PwqFunction};
use crate::sampling::sample_point;
use crate::terminal::stage_cost;

/// How the disturbance is produced at each step.
#[derive(Debug, Clone)]
pub enum DisturbanceSource {
    Zero,
    /// Vertex of W maximizing the value of the successor state.
    WorstVertex,
    /// Uniform sample from W, seeded.
    Random(u64),
    /// Explicit sequence; replayed, then zero.
    Sequence(Vec<DVector<f64>>),
}

/// One closed-loop rollout.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub controls: Vec<DVector<f64>>,
    pub disturbances: Vec<DVector<f64>>,
    pub outputs: Vec<DVector<f64>>,
    pub stage_costs: Vec<f64>,
    pub values: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }
}

/// Rolls the closed loop `x+ = Ax + B kappa(x) + G w` for `steps` steps.
/// Errors with the offending step if the state ever leaves the law's
/// domain (robust invariance says it should not).
pub fn simulate(
    spec: &ProblemSpec,
    law: &PiecewiseAffineLaw,
    value: &PwqFunction,
    x_n: &Polytope,
    x0: &DVector<f64>,
    source: &DisturbanceSource,
    steps: usize,
    cfg: &Config,
) -> Result<Trajectory> {
    if !x_n.contains(x0, cfg.tol.feas) {
        return Err(Error::Domain(
            "initial state outside the controllability set".into(),
        ));
    }
    let h = output_matrix(&spec.q, &spec.r)?;
    let mut rng = match source {
        DisturbanceSource::Random(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
        _ => None,
    };
    let w_vertices = match source {
        DisturbanceSource::WorstVertex => spec.w_set.vertices(&cfg.tol)?,
        _ => Vec::new(),
    };

    let mut traj = Trajectory {
        states: vec![x0.clone()],
        controls: Vec::new(),
        disturbances: Vec::new(),
        outputs: Vec::new(),
        stage_costs: Vec::new(),
        values: vec![value.evaluate(x0, cfg)?],
    };
    let mut x = x0.clone();
    for step in 0..steps {
        let u = law.evaluate(&x, cfg).map_err(|_| {
            Error::Certificate(format!("state left the law domain at step {step}: {x:?}"))
        })?;
        let nominal = &spec.a * &x + &spec.b * &u;
        let w = match source {
            DisturbanceSource::Zero => DVector::zeros(spec.p()),
            DisturbanceSource::Random(_) => {
                sample_point(&spec.w_set, rng.as_mut().unwrap(), &cfg.tol)?
            }
            DisturbanceSource::Sequence(seq) => seq
                .get(step)
                .cloned()
                .unwrap_or_else(|| DVector::zeros(spec.p())),
            DisturbanceSource::WorstVertex => {
                let mut best: Option<(f64, DVector<f64>)> = None;
                for v in &w_vertices {
                    let succ = &nominal + &spec.g * v;
                    if let Ok(val) = value.evaluate(&succ, cfg) {
                        if best.as_ref().map_or(true, |(bv, _)| val > *bv) {
                            best = Some((val, v.clone()));
                        }
                    }
                }
                match best {
                    Some((_, v)) => v,
                    None => {
                        return Err(Error::Certificate(format!(
                            "every disturbance vertex escapes the domain at step {step}"
                        )))
                    }
                }
            }
        };
        let x_next = &nominal + &spec.g * &w;
        if !x_n.contains(&x_next, cfg.tol.feas.max(1e-7)) {
            return Err(Error::Certificate(format!(
                "state escaped the controllability set at step {step}: {x_next:?}"
            )));
        }
        let mut z = DVector::zeros(spec.n() + spec.m());
        z.rows_mut(0, spec.n()).copy_from(&x);
        z.rows_mut(spec.n(), spec.m()).copy_from(&u);
        traj.outputs.push(&h * &z);
        traj.stage_costs
            .push(stage_cost(&spec.q, &spec.r, spec.gamma, &x, &u, &w));
        traj.controls.push(u);
        traj.disturbances.push(w);
        traj.values.push(value.evaluate(&x_next, cfg)?);
        traj.states.push(x_next.clone());
        x = x_next;
    }
    Ok(traj)
}

/// Certificate of the finite-gain inequality along a settled trajectory.
///
/// Output energy uses the stage-cost convention `0.5 |y|^2` per step (the
/// positive part of the exact stage cost), so the certified inequality is
/// `sum 0.5|y|^2 <= (gamma^2/2) sum |w|^2 + V(x0)`.
#[derive(Debug, Clone)]
pub struct GainCertificate {
    pub output_energy: f64,
    pub disturbance_energy: f64,
    pub initial_value: f64,
    pub slack: f64,
    /// False when the trajectory has not settled near the origin.
    pub conclusive: bool,
}

pub fn finite_gain_certificate(
    traj: &Trajectory,
    gamma: f64,
    initial_value: f64,
) -> GainCertificate {
    let output_energy: f64 = traj.outputs.iter().map(|y| 0.5 * y.norm_squared()).sum();
    let disturbance_energy: f64 = traj
        .disturbances
        .iter()
        .map(|w| 0.5 * gamma * gamma * w.norm_squared())
        .sum();
    let settled = traj
        .states
        .last()
        .map(|x| x.norm() <= 1e-6)
        .unwrap_or(false);
    GainCertificate {
        output_energy,
        disturbance_energy,
        initial_value,
        slack: disturbance_energy + initial_value - output_energy,
        conclusive: settled,
    }
}

/// Per-step dissipation under zero disturbance:
/// `V(x+) - V(x) <= -0.5 x'Qx + tol` at every step.
/// Returns the worst violation (positive means failed).
pub fn descent_violation(traj: &Trajectory, q: &DMatrix<f64>) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for i in 0..traj.len() {
        let x = &traj.states[i];
        let decrease = traj.values[i + 1] - traj.values[i];
        let bound = -0.5 * (q * x).dot(x);
        worst = worst.max(decrease - bound);
    }
    if traj.is_empty() {
        0.0
    } else {
        worst
    }
}

/// Report from the finite-time attraction check.
#[derive(Debug, Clone)]
pub struct AttractionReport {
    pub runs: usize,
    pub violations: usize,
    /// First failing rollout, if any.
    pub counterexample: Option<Trajectory>,
}

/// Checks that states started in the last coverage set reach the terminal
/// set within `horizon` steps and remain there, under random admissible
/// disturbances.
pub fn attraction_check(
    spec: &ProblemSpec,
    stages: &[StageResult],
    x_f: &Polytope,
    runs: usize,
    seed: u64,
    cfg: &Config,
) -> Result<AttractionReport> {
    let last = stages
        .last()
        .ok_or_else(|| Error::Input("no stages to check".into()))?;
    let members = last
        .x_star
        .as_ref()
        .ok_or_else(|| Error::Input("attraction check requires restricted-mode results".into()))?;
    let law = &last.control_law;
    let value = &last.value;
    let domain = &law.partition.parent;
    let horizon = last.stage;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extra = 20usize;
    let mut violations = 0usize;
    let mut counterexample = None;
    for run in 0..runs {
        // Sample a start point from the coverage union.
        let member = &members[run % members.len()];
        let x0 = sample_point(member, &mut rng, &cfg.tol)?;
        let steps = horizon + extra;
        let wseq: Vec<DVector<f64>> = (0..steps)
            .map(|_| sample_point(&spec.w_set, &mut rng, &cfg.tol))
            .collect::<Result<_>>()?;
        let traj = simulate(
            spec,
            law,
            value,
            domain,
            &x0,
            &DisturbanceSource::Sequence(wseq),
            steps,
            cfg,
        )?;
        // Must enter the terminal set within `horizon` steps and stay.
        let entered = traj.states[..=horizon.min(traj.states.len() - 1)]
            .iter()
            .position(|x| x_f.contains(x, cfg.tol.feas.max(1e-7)));
        let ok = match entered {
            None => false,
            Some(k) => traj.states[k..]
                .iter()
                .all(|x| x_f.contains(x, cfg.tol.feas.max(1e-7))),
        };
        if !ok {
            violations += 1;
            if counterexample.is_none() {
                counterexample = Some(traj);
            }
        }
    }
    Ok(AttractionReport {
        runs,
        violations,
        counterexample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::run_recursion;
    use crate::pwq::QuadraticForm;

    fn cfg() -> Config {
        Config::default()
    }

    fn example() -> (ProblemSpec, crate::terminal::TerminalPair) {
        let spec = crate::testdata::example_spec();
        let terminal = crate::testdata::example_terminal(&spec);
        (spec, terminal)
    }

    /// The N=2 synthesis is shared across tests; it is deterministic.
    fn example_stages() -> &'static Vec<StageResult> {
        use std::sync::OnceLock;
        static STAGES: OnceLock<Vec<StageResult>> = OnceLock::new();
        STAGES.get_or_init(|| {
            let c = cfg();
            let (spec, terminal) = example();
            run_recursion(&spec, &terminal, &c).unwrap()
        })
    }

    #[test]
    fn equilibrium_stays_put() {
        let c = cfg();
        let (spec, terminal) = example();
        let v = PwqFunction::single(
            terminal.x_f.clone(),
            QuadraticForm::from_matrix(terminal.p_f.clone()).unwrap(),
        )
        .unwrap();
        let law = PiecewiseAffineLaw::new(
            crate::geometry::Partition::new(vec![terminal.x_f.clone()], terminal.x_f.clone()),
            vec![crate::pwq::AffineLaw::new(terminal.k_u.clone(), DVector::zeros(1)).unwrap()],
        )
        .unwrap();
        let x0 = DVector::zeros(2);
        let traj = simulate(
            &spec,
            &law,
            &v,
            &terminal.x_f,
            &x0,
            &DisturbanceSource::Zero,
            20,
            &c,
        )
        .unwrap();
        for x in &traj.states {
            assert!(x.norm() < 1e-12);
        }
        let cert = finite_gain_certificate(&traj, spec.gamma, 0.0);
        assert!(cert.conclusive);
        assert!(cert.slack.abs() < 1e-12);
    }

    #[test]
    fn zero_disturbance_descends() {
        let c = cfg();
        let (spec, _) = example();
        let last = example_stages().last().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let x0 = sample_point(&last.x_set, &mut rng, &c.tol).unwrap();
            let traj = simulate(
                &spec,
                &last.control_law,
                &last.value,
                &last.x_set,
                &x0,
                &DisturbanceSource::Zero,
                40,
                &c,
            )
            .unwrap();
            assert!(
                descent_violation(&traj, &spec.q) <= 1e-7,
                "descent violated: {}",
                descent_violation(&traj, &spec.q)
            );
            // Norm decays toward the origin.
            assert!(traj.states.last().unwrap().norm() < 1e-3);
        }
    }

    #[test]
    fn vertex_disturbances_stay_inside() {
        let c = cfg();
        let (spec, _) = example();
        let last = example_stages().last().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x0 = sample_point(&last.x_set, &mut rng, &c.tol).unwrap();
            let traj = simulate(
                &spec,
                &last.control_law,
                &last.value,
                &last.x_set,
                &x0,
                &DisturbanceSource::WorstVertex,
                30,
                &c,
            );
            assert!(traj.is_ok(), "escape: {:?}", traj.err());
        }
    }

    #[test]
    fn finite_gain_with_bursts() {
        let c = cfg();
        let (spec, _) = example();
        let last = example_stages().last().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let x0 = sample_point(&last.x_set, &mut rng, &c.tol).unwrap();
            // Finite-energy burst: a few random steps, then zero.
            let burst: Vec<DVector<f64>> = (0..5)
                .map(|_| sample_point(&spec.w_set, &mut rng, &c.tol).unwrap())
                .collect();
            let traj = simulate(
                &spec,
                &last.control_law,
                &last.value,
                &last.x_set,
                &x0,
                &DisturbanceSource::Sequence(burst),
                80,
                &c,
            )
            .unwrap();
            let v0 = last.value.evaluate(&x0, &c).unwrap();
            let cert = finite_gain_certificate(&traj, spec.gamma, v0);
            assert!(cert.conclusive, "trajectory did not settle");
            assert!(cert.slack >= -1e-7, "slack {}", cert.slack);
        }
    }
}
