use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by every module.
///
/// Defaults: relative equality 1e-9, eigenvalue clustering / integer
/// difference detection 1e-7, ODE relative tolerance 1e-10 (1e-12 along
/// monodromy loops).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative tolerance for matrix equality tests.
    pub eq: f64,
    /// Two eigenvalues closer than this are treated as equal; a difference
    /// within this of an integer is treated as integral.
    pub cluster: f64,
    /// Relative singular value threshold for null spaces.
    pub null_space: f64,
    /// Minimal |det| (after normalizing the matrix to unit Frobenius norm)
    /// for a matrix to count as invertible.
    pub singular: f64,
    /// Relative tolerance of the adaptive integrator.
    pub ode_rtol: f64,
    /// Absolute tolerance of the adaptive integrator.
    pub ode_atol: f64,
    /// Relative tolerance for transport around closed loops, whose errors
    /// are magnified by the conditioning of the spoke transport.
    pub monodromy_rtol: f64,
    /// Minimal distance between distinct singular points.
    pub separation: f64,
    /// Relative tolerance used to identify branches of continued solutions.
    pub branch_id: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eq: 1e-9,
            cluster: 1e-7,
            null_space: 1e-8,
            singular: 1e-12,
            ode_rtol: 1e-10,
            ode_atol: 1e-12,
            monodromy_rtol: 1e-12,
            separation: 1e-3,
            branch_id: 1e-6,
        }
    }
}

impl Tolerances {
    /// Same settings with the equality tolerance replaced.
    pub fn with_eq(mut self, eq: f64) -> Self {
        self.eq = eq;
        self
    }

    pub fn with_ode_rtol(mut self, rtol: f64) -> Self {
        self.ode_rtol = rtol;
        self.ode_atol = rtol * 1e-2;
        self
    }
}

/// Seed used when callers do not supply one.
pub const DEFAULT_SEED: u64 = 0x15_0_1ab;
