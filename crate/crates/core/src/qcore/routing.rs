use std::collections::{BTreeSet, VecDeque};

use super::circuit::{pair, Pair, ParamCircuit};
use super::gate::Gate;
use crate::error::{Error, Result};

fn shortest_path(adj: &[Vec<usize>], from: usize, to: usize) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; adj.len()];
    let mut queue = VecDeque::from([from]);
    prev[from] = from;
    while let Some(u) = queue.pop_front() {
        if u == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = prev[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for &v in &adj[u] {
            if prev[v] == usize::MAX {
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    None
}

/// Maps a logical circuit onto physical qubits and inserts SWAPs so that
/// every two-qubit gate lands on a coupled pair.
///
/// `layout[l]` is the physical qubit initially holding logical qubit `l`.
/// For each uncoupled two-qubit gate the first operand walks along a
/// shortest path towards the second, one SWAP per hop, and the mapping is
/// updated for the rest of the circuit. The returned circuit records the
/// starting and final layouts.
pub fn route_circuit(
    circuit: &ParamCircuit,
    coupling: &BTreeSet<Pair>,
    layout: &[usize],
) -> Result<ParamCircuit> {
    if layout.len() != circuit.n_qubits {
        return Err(Error::InvalidCircuit(format!(
            "layout covers {} qubits, circuit has {}",
            layout.len(),
            circuit.n_qubits
        )));
    }
    let width = coupling
        .iter()
        .map(|&(_, b)| b + 1)
        .chain(layout.iter().map(|&p| p + 1))
        .max()
        .unwrap_or(circuit.n_qubits);
    if layout.iter().collect::<BTreeSet<_>>().len() != layout.len() {
        return Err(Error::InvalidCircuit("layout is not injective".into()));
    }

    let mut adj = vec![Vec::new(); width];
    for &(a, b) in coupling {
        adj[a].push(b);
        adj[b].push(a);
    }
    for list in &mut adj {
        list.sort_unstable();
    }

    let mut phys: Vec<usize> = layout.to_vec();
    // physical -> logical, usize::MAX for ancilla positions
    let mut logical = vec![usize::MAX; width];
    for (l, &p) in phys.iter().enumerate() {
        logical[p] = l;
    }

    let mut gates = Vec::with_capacity(circuit.gates.len());
    for g in &circuit.gates {
        if g.qubits.len() == 2 {
            let (pa, pb) = (phys[g.qubits[0]], phys[g.qubits[1]]);
            if !coupling.contains(&pair(pa, pb)) {
                let path = shortest_path(&adj, pa, pb).ok_or(Error::Disconnected(pa, pb))?;
                // walk the first operand until it neighbours the second
                for hop in path.windows(2).take(path.len() - 2) {
                    let (x, y) = (hop[0], hop[1]);
                    gates.push(Gate::swap(x, y));
                    let (lx, ly) = (logical[x], logical[y]);
                    logical.swap(x, y);
                    if lx != usize::MAX {
                        phys[lx] = y;
                    }
                    if ly != usize::MAX {
                        phys[ly] = x;
                    }
                }
            }
        }
        let mut mapped = g.clone();
        mapped.qubits = g.qubits.iter().map(|&q| phys[q]).collect();
        gates.push(mapped);
    }

    let mut out = ParamCircuit::new(width, gates, coupling.iter().copied())?;
    out.initial_layout = layout
        .iter()
        .copied()
        .chain((0..width).filter(|p| !layout.contains(p)))
        .collect();
    out.final_layout = phys
        .iter()
        .copied()
        .chain((0..width).filter(|p| !phys.contains(p)))
        .collect();
    // trim to the logical width so layouts index logical qubits only
    out.initial_layout.truncate(circuit.n_qubits);
    out.final_layout.truncate(circuit.n_qubits);
    out.check_routed()?;
    Ok(out)
}
