//! Seeded sampling of time-invariant parameter perturbations.

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::synthesis::PlantMatrices;
use crate::{Matrix, Scalar};

/// Which plant matrix an uncertainty range perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantMatrix {
    A,
    B,
    C,
    D,
    E,
}

impl PlantMatrix {
    fn select<T>(self, p: &mut PlantMatrices<T>) -> &mut Matrix<T> {
        match self {
            PlantMatrix::A => &mut p.a,
            PlantMatrix::B => &mut p.b,
            PlantMatrix::C => &mut p.c,
            PlantMatrix::D => &mut p.d,
            PlantMatrix::E => &mut p.e,
        }
    }
}

/// Additive perturbation of one entry, drawn uniformly from `[low, high]`,
/// or from `(low, high]` when `lower_open` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyRange<T> {
    pub matrix: PlantMatrix,
    /// 1-based row.
    pub row: usize,
    /// 1-based column.
    pub col: usize,
    pub low: T,
    pub high: T,
    pub lower_open: bool,
    /// 1-based agents to perturb; `None` means all of them.
    pub agents: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct UncertaintySpec<T> {
    pub seed: u64,
    pub ranges: Vec<UncertaintyRange<T>>,
}

impl<T: Scalar> UncertaintyRange<T> {
    fn validate(&self, plants: &[PlantMatrices<T>]) -> Result<(), SimError> {
        if !(self.low <= self.high) {
            return Err(SimError::InvalidConfig(format!(
                "uncertainty range on {:?}[{}][{}] has low > high",
                self.matrix, self.row, self.col
            )));
        }
        if let Some(agents) = &self.agents {
            if let Some(&bad) = agents.iter().find(|&&i| i == 0 || i > plants.len()) {
                return Err(SimError::InvalidConfig(format!(
                    "uncertainty range names agent {bad}, network has {}",
                    plants.len()
                )));
            }
        }
        for p in plants {
            let mut p = p.clone();
            let m = self.matrix.select(&mut p);
            if self.row == 0 || self.col == 0 || self.row > m.nrows() || self.col > m.ncols() {
                return Err(SimError::InvalidConfig(format!(
                    "uncertainty entry {:?}[{}][{}] outside a {}x{} matrix",
                    self.matrix,
                    self.row,
                    self.col,
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(())
    }

    fn applies_to(&self, agent: usize) -> bool {
        self.agents.as_ref().is_none_or(|a| a.contains(&agent))
    }

    fn draw(&self, rng: &mut SplitMix64) -> T {
        let u = T::lit(rng.gen::<f64>());
        let width = self.high - self.low;
        if self.lower_open {
            self.high - u * width
        } else {
            self.low + u * width
        }
    }
}

/// Draws one perturbation per (agent, range) pair, agent-major, and returns
/// per-agent additive deltas shaped like `nominal`.
pub fn sample_uncertainty<T: Scalar>(
    spec: &UncertaintySpec<T>,
    nominal: &[PlantMatrices<T>],
) -> Result<Vec<PlantMatrices<T>>, SimError> {
    for r in &spec.ranges {
        r.validate(nominal)?;
    }
    let mut rng = SplitMix64::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(nominal.len());
    for (k, plant) in nominal.iter().enumerate() {
        let mut delta = PlantMatrices::zeros_like(plant);
        for r in spec.ranges.iter().filter(|r| r.applies_to(k + 1)) {
            let value = r.draw(&mut rng);
            r.matrix.select(&mut delta)[(r.row - 1, r.col - 1)] += value;
        }
        out.push(delta);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plant() -> PlantMatrices<f64> {
        PlantMatrices {
            a: Matrix::zeros(2, 2),
            b: Matrix::zeros(2, 1),
            c: Matrix::zeros(1, 2),
            d: Matrix::zeros(1, 2),
            e: Matrix::zeros(2, 2),
        }
    }

    fn range(low: f64, high: f64, lower_open: bool) -> UncertaintyRange<f64> {
        UncertaintyRange {
            matrix: PlantMatrix::A,
            row: 2,
            col: 1,
            low,
            high,
            lower_open,
            agents: None,
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let spec = UncertaintySpec {
            seed: 7,
            ranges: vec![range(0.0, 0.06, true), range(-1.0, 1.0, false)],
        };
        let a = sample_uncertainty(&spec, &vec![plant(); 4]).unwrap();
        let b = sample_uncertainty(&spec, &vec![plant(); 4]).unwrap();
        assert_eq!(a, b);
        let other = UncertaintySpec { seed: 8, ..spec };
        assert_ne!(a, sample_uncertainty(&other, &vec![plant(); 4]).unwrap());
    }

    #[test]
    fn degenerate_range_is_constant() {
        let spec = UncertaintySpec {
            seed: 1,
            ranges: vec![range(0.3, 0.3, false)],
        };
        for d in sample_uncertainty(&spec, &vec![plant(); 3]).unwrap() {
            assert_eq!(d.a[(1, 0)], 0.3);
        }
    }

    #[test]
    fn half_open_interval_mean() {
        let spec = UncertaintySpec {
            seed: 2024,
            ranges: vec![range(0.0, 0.06, true)],
        };
        let draws = sample_uncertainty(&spec, &vec![plant(); 10_000]).unwrap();
        let vals: Vec<f64> = draws.iter().map(|d| d.a[(1, 0)]).collect();
        assert!(vals.iter().all(|&v| v > 0.0 && v <= 0.06));
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((mean - 0.03).abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn agent_filter_and_bounds() {
        let mut r = range(1.0, 1.0, false);
        r.agents = Some(vec![2]);
        let spec = UncertaintySpec {
            seed: 0,
            ranges: vec![r.clone()],
        };
        let d = sample_uncertainty(&spec, &vec![plant(); 2]).unwrap();
        assert_eq!(d[0].a[(1, 0)], 0.0);
        assert_eq!(d[1].a[(1, 0)], 1.0);
        r.row = 3;
        let bad = UncertaintySpec {
            seed: 0,
            ranges: vec![r],
        };
        assert!(sample_uncertainty(&bad, &[plant()]).is_err());
    }
}
