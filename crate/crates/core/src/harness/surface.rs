use std::f64::consts::{PI, TAU};
use std::path::Path;

use rayon::prelude::*;

use crate::calib::CalibrationSnapshot;
use crate::error::{Error, Result};
use crate::qcore::{Gate, GateKind, NoiseModel, ParamCircuit};
use crate::qnn::{forward, loss, Dataset, EncodingSpec, QnnModel};

pub type Grid = Vec<Vec<f64>>;

/// Loss grids over `(θ_i, θ_j) ∈ [0, 2π)²`; `grid[a][b]` is at
/// `θ_i = 2πa/steps`, `θ_j = 2πb/steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Surfaces {
    pub noiseless: Grid,
    pub noisy: Option<Grid>,
}

impl Surfaces {
    /// `noisy − noiseless`; needs a noisy scan.
    pub fn difference(&self) -> Result<Grid> {
        let noisy = self
            .noisy
            .as_ref()
            .ok_or_else(|| Error::Config("difference grid needs a noise model".into()))?;
        Ok(noisy
            .iter()
            .zip(&self.noiseless)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect())
    }
}

pub fn scan_loss_surface(
    model: &QnnModel,
    i: usize,
    j: usize,
    steps: usize,
    data: &Dataset,
    noise: Option<&NoiseModel>,
) -> Result<Surfaces> {
    let n = model.theta.len();
    if i >= n || j >= n || i == j {
        return Err(Error::Config(format!(
            "scan needs two distinct slots below {n}, got {i} and {j}"
        )));
    }
    if steps == 0 {
        return Err(Error::Config("grid needs at least one step".into()));
    }
    if data.is_empty() {
        return Err(Error::Dataset("empty dataset".into()));
    }
    let grid = |noise: Option<&NoiseModel>| -> Result<Grid> {
        (0..steps)
            .into_par_iter()
            .map(|a| {
                (0..steps)
                    .map(|b| {
                        let mut m = model.clone();
                        m.theta[i] = TAU * a as f64 / steps as f64;
                        m.theta[j] = TAU * b as f64 / steps as f64;
                        let mut total = 0.0;
                        for (x, &y) in data.features.iter().zip(&data.labels) {
                            total += loss(&forward(&m, x, noise)?, y);
                        }
                        Ok(total / data.len() as f64)
                    })
                    .collect()
            })
            .collect()
    };
    Ok(Surfaces {
        noiseless: grid(None)?,
        noisy: noise.map(|n| grid(Some(n))).transpose()?,
    })
}

/// Headerless CSV matrix.
pub fn write_grid_csv(path: &Path, grid: &Grid) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::parse(path, e))?;
    for row in grid {
        w.write_record(row.iter().map(|v| format!("{v:.10e}")))
            .map_err(|e| Error::parse(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Two-qubit, two-parameter classifier: `RY(θ₀)` on q0 then
/// `CRY(θ₁)` q0→q1, with both features angle-encoded.
pub fn toy_model() -> QnnModel {
    let c = ParamCircuit::new(
        2,
        vec![
            Gate::slot(GateKind::RY, &[0], 0),
            Gate::slot(GateKind::CRY, &[0, 1], 1),
        ],
        [(0, 1)],
    )
    .expect("toy circuit is valid");
    let mut enc = EncodingSpec::round_robin(2, 2);
    enc.max = vec![PI, PI];
    QnnModel::new(c, vec![0.0, 0.0], enc, vec![0, 1]).expect("toy model is valid")
}

/// 16 points on a grid in `[0, π]²`, labelled by which coordinate is larger.
pub fn toy_dataset() -> Dataset {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            let x = [PI * (a as f64 + 0.5) / 4.0, PI * (b as f64 + 0.25) / 4.0];
            labels.push(usize::from(x[0] > x[1]));
            features.push(x.to_vec());
        }
    }
    Dataset::new(features, labels, 2).expect("toy data is valid")
}

/// Calibration for the toy: quiet single-qubit gates, a noisy pair.
pub fn toy_snapshot(two_qubit_error: f64) -> CalibrationSnapshot {
    let mut s = CalibrationSnapshot::zero("toy", 2, [(0, 1)]);
    s.sq_error.insert(0, 1e-3);
    s.sq_error.insert(1, 1e-3);
    s.tq_error.insert((0, 1), two_qubit_error);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calib::build_noise_model;

    #[test]
    fn difference_needs_noise() {
        let s = scan_loss_surface(&toy_model(), 0, 1, 4, &toy_dataset(), None).unwrap();
        assert!(s.difference().is_err());
        assert!(scan_loss_surface(&toy_model(), 1, 1, 4, &toy_dataset(), None).is_err());
        assert!(scan_loss_surface(&toy_model(), 0, 2, 4, &toy_dataset(), None).is_err());
    }

    #[test]
    fn zero_noise_difference_vanishes() {
        let noise = build_noise_model(&toy_snapshot(0.0).clone()).unwrap().scaled(0.0);
        let s = scan_loss_surface(&toy_model(), 0, 1, 6, &toy_dataset(), Some(&noise)).unwrap();
        for row in s.difference().unwrap() {
            for v in row {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn breakpoint_column_is_quieter() {
        let noise = build_noise_model(&toy_snapshot(0.1)).unwrap();
        let s = scan_loss_surface(&toy_model(), 0, 1, 16, &toy_dataset(), Some(&noise)).unwrap();
        let diff = s.difference().unwrap();
        let all: f64 = diff.iter().flatten().map(|v| v.abs()).sum::<f64>() / 256.0;
        let column: f64 = diff.iter().map(|r| r[0].abs()).sum::<f64>() / 16.0;
        assert!(column < all, "{column} !< {all}");
    }
}
