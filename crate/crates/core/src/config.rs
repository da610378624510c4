//! Central numeric configuration: every tolerance and sampling budget used
//! anywhere in the library lives here so runs are reproducible and the
//! thresholds are overridable in one place.

/// Numeric tolerances. All comparisons in the library go through a value of
/// this struct; the defaults assume well-scaled double-precision data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Feasibility slack for constraint satisfaction checks.
    pub feas: f64,
    /// KKT residual bound accepted from the LP/QP kernels.
    pub kkt: f64,
    /// Activation threshold: a constraint within `act` of equality is active.
    pub act: f64,
    /// Minimum eigenvalue for a matrix to count as positive definite.
    pub pd: f64,
    /// Chebyshev radius below which a polytope is treated as lower-dimensional.
    pub interior: f64,
    /// Relative continuity slack across shared facets of a piecewise function.
    pub cont: f64,
    /// Row-wise match tolerance when deduplicating halfspaces and regions.
    pub dedup: f64,
    /// Outward step beyond a facet when seeding a new exploration point.
    pub step: f64,
    /// Slack used by the redundancy-removal LP test.
    pub redundancy: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feas: 1e-8,
            kkt: 1e-8,
            act: 1e-6,
            pd: 1e-10,
            interior: 1e-7,
            cont: 1e-6,
            dedup: 1e-8,
            step: 1e-6,
            redundancy: 1e-9,
        }
    }
}

/// Sampling budgets for the statistical validation checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budgets {
    /// Points sampled per shared facet when checking continuity/gradients.
    pub facet_samples: usize,
    /// Random pairs for the cross-piece midpoint convexity test.
    pub convexity_pairs: usize,
    /// Samples for the Monte-Carlo partition coverage check.
    pub coverage_samples: usize,
    /// Fraction of coverage samples that must land in some cell.
    pub coverage_fraction: f64,
    /// Interior samples drawn when validating a critical region.
    pub region_samples: usize,
    /// Fallback Monte-Carlo probes after facet-stepping exploration.
    pub exploration_probes: usize,
    /// Hard cap on exploration loop iterations.
    pub exploration_cap: usize,
    /// Cap on enumerated subsets of a degenerate epsilon-active set.
    pub degenerate_subset_cap: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            facet_samples: 20,
            convexity_pairs: 1000,
            coverage_samples: 10_000,
            coverage_fraction: 0.999,
            region_samples: 10,
            exploration_probes: 10_000,
            exploration_cap: 100_000,
            degenerate_subset_cap: 16,
        }
    }
}

/// Bundled configuration handed down through the synthesis pipeline.
#[derive(Debug, Clone, Copy, Default)]
pub struct Config {
    pub tol: Tolerances,
    pub budget: Budgets,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_ordered_sensibly() {
        let t = Tolerances::default();
        assert!(t.pd < t.kkt);
        assert!(t.kkt <= t.feas);
        assert!(t.feas < t.act);
        assert!(t.act <= t.cont);
    }
}
