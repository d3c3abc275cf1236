//! Random instances shared by the integration suites.
#![allow(dead_code)]

use std::f64::consts::TAU;

use qucad::qcore::{Gate, GateKind, ParamCircuit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

/// Random circuit over every gate kind with fresh slots for rotations.
pub fn random_circuit(rng: &mut ChaCha8Rng, n: usize, len: usize) -> (ParamCircuit, Vec<f64>) {
    let mut gates = Vec::with_capacity(len);
    let mut slot = 0;
    for _ in 0..len {
        let kind = GateKind::ALL[rng.random_range(0..GateKind::ALL.len())];
        let a = rng.random_range(0..n);
        let b = (a + rng.random_range(1..n)) % n;
        let g = match kind {
            GateKind::CNOT => Gate::cnot(a, b),
            GateKind::SWAP => Gate::swap(a, b),
            k if k.arity() == 1 => Gate::slot(k, &[a], slot),
            k => Gate::slot(k, &[a, b], slot),
        };
        if matches!(g.param, qucad::qcore::ParamRef::Slot(_)) {
            slot += 1;
        }
        gates.push(g);
    }
    let theta = (0..slot).map(|_| rng.random_range(0.0..TAU)).collect();
    (ParamCircuit::new(n, gates, all_pairs(n)).unwrap(), theta)
}
