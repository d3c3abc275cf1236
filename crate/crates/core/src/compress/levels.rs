use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::calib::CalibrationSnapshot;
use crate::error::{Error, Result};
use crate::qcore::{circular_distance, pair, BasisCount, GateCostModel, ParamCircuit, ParamRef};

/// Angles at which a rotation transpiles to a shorter sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionTable {
    pub levels: Vec<f64>,
}

impl Default for CompressionTable {
    fn default() -> Self {
        CompressionTable {
            levels: vec![0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2],
        }
    }
}

impl CompressionTable {
    /// Sorts the levels and checks they are distinct and in `[0, 2π)`.
    pub fn new(mut levels: Vec<f64>) -> Result<Self> {
        levels.sort_by(f64::total_cmp);
        let t = CompressionTable { levels };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::Config("compression table is empty".into()));
        }
        if let Some(l) = self
            .levels
            .iter()
            .find(|l| !(0.0..std::f64::consts::TAU).contains(*l))
        {
            return Err(Error::Config(format!("compression level {l} outside [0, 2π)")));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("compression levels must be sorted and distinct".into()));
        }
        Ok(())
    }
}

/// Level at the smallest circular distance from `theta`, ties to the
/// smaller level.
pub fn nearest_level(theta: f64, table: &CompressionTable) -> (f64, f64) {
    let mut best = (table.levels[0], circular_distance(theta, table.levels[0]));
    for &l in &table.levels[1..] {
        let d = circular_distance(theta, l);
        if d < best.1 {
            best = (l, d);
        }
    }
    best
}

/// How a gate's priority weighs its distance to the nearest level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorityMode {
    /// `p_i = noise rate of the gate's support / d_i`.
    #[default]
    NoiseAware,
    /// `p_i = 1 / d_i`, ignoring calibration.
    NoiseAgnostic,
}

/// Priority per parameter slot. Distances below `1e-12` give `+∞`.
pub fn priority_table(
    circuit: &ParamCircuit,
    dist: &[f64],
    snapshot: &CalibrationSnapshot,
    mode: PriorityMode,
) -> Result<Vec<f64>> {
    if dist.len() != circuit.n_params {
        return Err(Error::ParamLength {
            expected: circuit.n_params,
            got: dist.len(),
        });
    }
    let owners = circuit.slot_owners();
    owners
        .iter()
        .zip(dist)
        .map(|(&gi, &d)| {
            let g = &circuit.gates[gi];
            let rate = match mode {
                PriorityMode::NoiseAgnostic => 1.0,
                PriorityMode::NoiseAware if g.qubits.len() == 1 => {
                    *snapshot.sq_error.get(&g.qubits[0]).ok_or_else(|| {
                        Error::MissingCalibration(format!(
                            "day {} has no sq_error for qubit {}",
                            snapshot.date, g.qubits[0]
                        ))
                    })?
                }
                PriorityMode::NoiseAware => {
                    let p = pair(g.qubits[0], g.qubits[1]);
                    *snapshot.tq_error.get(&p).ok_or_else(|| {
                        Error::MissingCalibration(format!(
                            "day {} has no tq_error for pair {}-{}",
                            snapshot.date, p.0, p.1
                        ))
                    })?
                }
            };
            Ok(if d < 1e-12 { f64::INFINITY } else { rate / d })
        })
        .collect()
}

/// `mask_i = 0` if `p_i < threshold`, else 1.
pub fn make_mask(priority: &[f64], threshold: f64) -> Vec<bool> {
    priority.iter().map(|&p| p >= threshold).collect()
}

/// How the mask threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdPolicy {
    Absolute(f64),
    /// Mask this fraction of the parameters (highest priorities first).
    Fraction(f64),
}

impl ThresholdPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdPolicy::Absolute(t) if !(t >= 0.0 && t.is_finite()) => {
                Err(Error::Config(format!("threshold {t} must be finite and ≥ 0")))
            }
            ThresholdPolicy::Fraction(f) if !(0.0..=1.0).contains(&f) => {
                Err(Error::Config(format!("masked fraction {f} outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }

    /// Absolute threshold for `priority`. For a fraction `f` of `n`
    /// priorities, the threshold sits halfway between the `round(f·n)`
    /// largest and the rest; `+∞` priorities are always masked.
    pub fn resolve(&self, priority: &[f64]) -> f64 {
        match *self {
            ThresholdPolicy::Absolute(t) => t,
            ThresholdPolicy::Fraction(f) => {
                let n = priority.len();
                let k = ((f * n as f64).round() as usize).min(n);
                if k == 0 {
                    return f64::MAX;
                }
                if k == n {
                    return 0.0;
                }
                let mut sorted = priority.to_vec();
                sorted.sort_by(f64::total_cmp);
                let (lo, hi) = (sorted[n - k - 1], sorted[n - k]);
                if !hi.is_finite() {
                    f64::MAX
                } else {
                    0.5 * (lo + hi)
                }
            }
        }
    }
}

/// Minimizer of `s_i(z_i) + ρ/2 (v_i − z_i)²`: the level for masked
/// entries, `v_i` itself otherwise.
pub fn project_z(theta_plus_u: &[f64], mask: &[bool], t_admm: &[f64]) -> Vec<f64> {
    theta_plus_u
        .iter()
        .zip(mask)
        .zip(t_admm)
        .map(|((&v, &m), &t)| if m { t } else { v })
        .collect()
}

/// Basis-gate occurrences of the whole circuit at `theta`; gates at a
/// compression level use that level's entry of the cost model.
pub fn compressed_cost(
    circuit: &ParamCircuit,
    theta: &[f64],
    cost: &GateCostModel,
) -> Result<BasisCount> {
    circuit.check_params(theta)?;
    let mut total = BasisCount::default();
    for g in &circuit.gates {
        let angle = match g.param {
            ParamRef::None => 0.0,
            _ => g.angle(theta),
        };
        let c = cost.count(g.kind, angle);
        total.one_q += c.one_q;
        total.two_q += c.two_q;
    }
    Ok(total)
}
