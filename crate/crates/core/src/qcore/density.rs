use num_complex::Complex64 as C64;

use super::gate::GateMatrix;
use super::kernel::{apply_controlled, apply_single, apply_swap};
use super::state::StateVector;
use crate::error::{Error, Result};

/// Density matrix over `n_qubits`. Entry `(r, c)` lives at `(r << n) | c`,
/// so row qubit `q` is bit `q + n` and column qubit `q` is bit `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub n_qubits: usize,
    pub data: Vec<C64>,
}

impl DensityMatrix {
    pub fn zero_state(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        data[0] = C64::new(1.0, 0.0);
        DensityMatrix { n_qubits, data }
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let dim = psi.amps.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(psi.amps[r] * psi.amps[c].conj());
            }
        }
        DensityMatrix {
            n_qubits: psi.n_qubits,
            data,
        }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = C64::new(1.0 / dim as f64, 0.0);
        }
        DensityMatrix { n_qubits, data }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[(r << self.n_qubits) | c]
    }

    pub fn trace(&self) -> C64 {
        let dim = self.dim();
        (0..dim).map(|i| self.data[i * dim + i]).sum()
    }

    /// Applies `ρ → UρU†` for the gate matrix on `qubits`.
    pub fn apply_unitary(&mut self, m: &GateMatrix, qubits: &[usize]) {
        conjugate(&mut self.data, self.n_qubits, m, qubits);
    }

    /// Depolarizing channel with probability `p` on `qubits` (one or two):
    /// `ρ → (1−p)ρ + p·I/2^k ⊗ Tr_k(ρ)`. The channel is self-adjoint, so the
    /// same routine propagates observables backwards.
    pub fn depolarize(&mut self, qubits: &[usize], p: f64) {
        depolarize_raw(&mut self.data, self.n_qubits, qubits, p);
    }

    /// Probability of reading 1 on each qubit, before readout error.
    pub fn marginal_one(&self) -> Vec<f64> {
        let dim = self.dim();
        let mut out = vec![0.0; self.n_qubits];
        for i in 0..dim {
            let p = self.data[i * dim + i].re;
            for (q, o) in out.iter_mut().enumerate() {
                if i >> q & 1 == 1 {
                    *o += p;
                }
            }
        }
        out
    }

    /// `Re Tr[O ρ]` for Hermitian `O` stored in the same layout.
    pub fn expectation(&self, observable: &[C64]) -> f64 {
        // Tr[Oρ] = Σ_rc O[c][r] ρ[r][c] = Σ_rc conj(O[r][c]) ρ[r][c] for Hermitian O
        self.data
            .iter()
            .zip(observable)
            .map(|(r, o)| o.re * r.re + o.im * r.im)
            .sum()
    }

    /// Checks trace, Hermiticity and the minimum eigenvalue.
    pub fn check_invariants(&self, trace_tol: f64, herm_tol: f64, eig_tol: f64) -> Result<()> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > trace_tol || tr.im.abs() > trace_tol {
            return Err(Error::Dimension(format!("trace {tr} != 1")));
        }
        let dim = self.dim();
        for r in 0..dim {
            for c in r..dim {
                if (self.get(r, c) - self.get(c, r).conj()).norm() > herm_tol {
                    return Err(Error::Dimension(format!("not Hermitian at ({r},{c})")));
                }
            }
        }
        let min = min_eigenvalue(self);
        if min < -eig_tol {
            return Err(Error::Dimension(format!("negative eigenvalue {min}")));
        }
        Ok(())
    }
}

pub(crate) fn conjugate(data: &mut [C64], n: usize, m: &GateMatrix, qubits: &[usize]) {
    let conj = m.conj();
    match (m, &conj) {
        (GateMatrix::Single(u), GateMatrix::Single(uc)) => {
            apply_single(data, qubits[0] + n, u);
            apply_single(data, qubits[0], uc);
        }
        (GateMatrix::Controlled(u), GateMatrix::Controlled(uc)) => {
            apply_controlled(data, qubits[0] + n, qubits[1] + n, u);
            apply_controlled(data, qubits[0], qubits[1], uc);
        }
        _ => {
            apply_swap(data, qubits[0] + n, qubits[1] + n);
            apply_swap(data, qubits[0], qubits[1]);
        }
    }
}

pub(crate) fn depolarize_raw(data: &mut [C64], n: usize, qubits: &[usize], p: f64) {
    if p == 0.0 {
        return;
    }
    let keep = 1.0 - p;
    let k = qubits.len();
    let sub = 1usize << k;
    // offsets of each sub-basis index within the row and column halves
    let col_off: Vec<usize> = (0..sub)
        .map(|s| (0..k).filter(|&b| s >> b & 1 == 1).map(|b| 1 << qubits[b]).sum())
        .collect();
    let row_off: Vec<usize> = col_off.iter().map(|o| o << n).collect();
    let mask: usize = col_off[sub - 1] | row_off[sub - 1];
    let mix = p / sub as f64;
    for base in 0..data.len() {
        if base & mask != 0 {
            continue;
        }
        let tr: C64 = (0..sub).map(|s| data[base | row_off[s] | col_off[s]]).sum();
        for (rs, &ro) in row_off.iter().enumerate() {
            for (cs, &co) in col_off.iter().enumerate() {
                let idx = base | ro | co;
                data[idx] *= keep;
                if rs == cs {
                    data[idx] += tr * mix;
                }
            }
        }
    }
}

/// Smallest eigenvalue of a Hermitian matrix. `H = A + iB` is embedded as
/// the real symmetric `[[A, −B], [B, A]]` (same spectrum, doubled) and
/// diagonalized with cyclic Jacobi sweeps. Only used for invariant checks.
pub fn min_eigenvalue(rho: &DensityMatrix) -> f64 {
    let n = rho.dim();
    let m = 2 * n;
    let mut a = vec![vec![0.0f64; m]; m];
    for r in 0..n {
        for c in 0..n {
            let h = (rho.get(r, c) + rho.get(c, r).conj()) * 0.5;
            a[r][c] = h.re;
            a[r + n][c + n] = h.re;
            a[r][c + n] = -h.im;
            a[r + n][c] = h.im;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..m)
            .map(|r| (0..m).filter(|&c| c != r).map(|c| a[r][c] * a[r][c]).sum::<f64>())
            .sum();
        if off < 1e-28 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p][q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..m).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
}
