use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::fixed::{self, FixedComplex};
use super::kernel::{FixedArith, KernelTables, RefArith};
use crate::error::{Error, Result};

/// Point count of the symmetric FFT-A cluster.
pub const FFT_A_POINTS: usize = 256;
/// Point count of the asymmetric FFT-B cluster (initial radix-2 stage
/// followed by a 64-point core).
pub const FFT_B_POINTS: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FftUnit {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStage {
    pub unit: FftUnit,
    /// Points processed by this unit once its bypassed sub-stages are
    /// removed.
    pub points: usize,
    pub enabled: bool,
}

/// Degree-specific FFT plan: the FFT-A/FFT-B factorization of the `N/2`
/// point transform plus shared twiddle tables for both arithmetic modes.
///
/// Plans are immutable and may be shared between threads.
#[derive(Clone)]
pub struct FftPlan {
    degree: usize,
    n_points: usize,
    stages: Vec<PlanStage>,
    radix2_bypass: bool,
    tables: KernelTables<Complex<f64>>,
    tables_fixed: KernelTables<FixedComplex>,
    // exp(i pi j / N) for j < n_points.
    twist: Vec<Complex<f64>>,
    twist_fixed: Vec<FixedComplex>,
}

impl core::fmt::Debug for FftPlan {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("FftPlan")
            .field("degree", &self.degree)
            .field("n_points", &self.n_points)
            .field("stages", &self.stages)
            .field("radix2_bypass", &self.radix2_bypass)
            .finish()
    }
}

/// Builds the plan for polynomials of degree `degree` (`4 <= N <= 2^16`).
pub fn build_plan(degree: usize) -> Result<FftPlan> {
    FftPlan::new(degree)
}

impl FftPlan {
    pub fn new(degree: usize) -> Result<Self> {
        if !degree.is_power_of_two() || !(4..=crate::torus::MAX_DEGREE).contains(&degree) {
            return Err(Error::UnsupportedDegree(degree));
        }
        let n = degree / 2;
        let a_points = n.min(FFT_A_POINTS);
        let rest = n / a_points;
        let mut stages = alloc::vec![PlanStage {
            unit: FftUnit::A,
            points: a_points,
            enabled: true,
        }];
        // FFT-B runs at 128 points, or at 64 with its initial radix-2 stage
        // bypassed; smaller remainders bypass more of its core.
        let radix2_bypass = rest > 1 && rest < FFT_B_POINTS;
        stages.push(PlanStage {
            unit: FftUnit::B,
            points: if rest > 1 { rest } else { 1 },
            enabled: rest > 1,
        });

        let roots: Vec<Complex<f64>> = (0..n)
            .map(|t| {
                let ang = 2.0 * PI * t as f64 / n as f64;
                Complex::new(libm::cos(ang), libm::sin(ang))
            })
            .collect();
        let twist: Vec<Complex<f64>> = (0..n)
            .map(|j| {
                let ang = PI * j as f64 / degree as f64;
                Complex::new(libm::cos(ang), libm::sin(ang))
            })
            .collect();
        let roots_fixed: Vec<FixedComplex> = roots.iter().map(|&w| fixed::twiddle(w)).collect();
        let twist_fixed = twist.iter().map(|&w| fixed::twiddle(w)).collect();
        Ok(FftPlan {
            degree,
            n_points: n,
            stages,
            radix2_bypass,
            tables: KernelTables::new::<RefArith>(a_points, &roots),
            tables_fixed: KernelTables::new::<FixedArith>(a_points, &roots_fixed),
            twist,
            twist_fixed,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn stages(&self) -> &[PlanStage] {
        &self.stages
    }

    /// Whether FFT-B skips its initial radix-2 stage (64-point operation).
    pub fn radix2_bypass(&self) -> bool {
        self.radix2_bypass
    }

    pub fn enabled_product(&self) -> usize {
        self.stages.iter().filter(|s| s.enabled).map(|s| s.points).product()
    }

    pub(crate) fn tables(&self) -> &KernelTables<Complex<f64>> {
        &self.tables
    }

    pub(crate) fn tables_fixed(&self) -> &KernelTables<FixedComplex> {
        &self.tables_fixed
    }

    pub(crate) fn twist(&self) -> &[Complex<f64>] {
        &self.twist
    }

    pub(crate) fn twist_fixed(&self) -> &[FixedComplex] {
        &self.twist_fixed
    }

    pub(crate) fn check_degree(&self, degree: usize) -> Result<()> {
        if degree == self.degree {
            Ok(())
        } else {
            Err(Error::PlanMismatch {
                plan: self.degree,
                got: degree,
            })
        }
    }

    /// Radix-2 butterfly stages in the full transform (`log2(N/2)`).
    pub fn log_points(&self) -> u32 {
        self.n_points.trailing_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accelerator_sizes() {
        let p = build_plan(1 << 16).unwrap();
        assert_eq!(p.stages()[0].points, 256);
        assert_eq!(p.stages()[1].points, 128);
        assert!(p.stages()[1].enabled);
        assert!(!p.radix2_bypass());

        let p = build_plan(1 << 9).unwrap();
        assert_eq!(p.stages()[0].points, 256);
        assert!(!p.stages()[1].enabled);

        let p = build_plan(1 << 15).unwrap();
        assert!(p.radix2_bypass());
        assert_eq!(p.stages()[1].points, 64);
        assert_eq!(p.enabled_product(), 1 << 14);
    }

    #[test]
    fn stage_product_is_point_count() {
        for log in 2..=16 {
            let p = build_plan(1 << log).unwrap();
            assert_eq!(p.enabled_product(), p.n_points(), "N=2^{log}");
        }
    }

    #[test]
    fn rejects_bad_degrees() {
        assert!(build_plan(1000).is_err());
        assert!(build_plan(2).is_err());
        assert!(build_plan(1 << 17).is_err());
    }
}
