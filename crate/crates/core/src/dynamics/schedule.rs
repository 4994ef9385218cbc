//! Time-dependent coefficients driving `A(s) Σσˣ + B(s) H_P`.

use crate::problem::AnnealSchedule;

/// Coefficients of the driver and problem terms as functions of `s = t/t_f`.
pub trait Coefficients: Sync {
    fn a(&self, s: f64) -> f64;
    fn b(&self, s: f64) -> f64;
    /// Total evolution time in ns.
    fn total_time_ns(&self) -> f64;
    /// Points in `[0, 1]` where the coefficients have kinks. Integrators
    /// land on them exactly.
    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0, 1.0]
    }
}

impl Coefficients for AnnealSchedule {
    fn a(&self, s: f64) -> f64 {
        AnnealSchedule::a(self, s)
    }

    fn b(&self, s: f64) -> f64 {
        AnnealSchedule::b(self, s)
    }

    fn total_time_ns(&self) -> f64 {
        self.t_f_ns()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.knots().to_vec()
    }
}

/// Time-independent `A`, `B`, for static Hamiltonians run for `duration_ns`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCoefficients {
    pub a: f64,
    pub b: f64,
    pub duration_ns: f64,
}

impl Coefficients for ConstantCoefficients {
    fn a(&self, _s: f64) -> f64 {
        self.a
    }

    fn b(&self, _s: f64) -> f64 {
        self.b
    }

    fn total_time_ns(&self) -> f64 {
        self.duration_ns
    }
}
