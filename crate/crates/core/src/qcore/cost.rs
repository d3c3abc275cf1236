//! Basis-gate accounting: how many noisy one- and two-qubit basis gates a
//! logical gate expands into, depending on whether its angle sits at a
//! compression level.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::gate::{circular_distance, GateKind};
use crate::error::{Error, Result};

/// An angle within this circular distance of a level counts as "at" it.
pub const LEVEL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BasisCount {
    pub one_q: u32,
    pub two_q: u32,
}

impl BasisCount {
    pub const fn new(one_q: u32, two_q: u32) -> Self {
        BasisCount { one_q, two_q }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEntry {
    pub kind: GateKind,
    /// `None` is the generic entry used off-level.
    #[serde(default)]
    pub level: Option<f64>,
    pub one_q: u32,
    pub two_q: u32,
}

/// Lookup table from (gate kind, optional compression level) to basis-gate
/// counts. Every kind needs a generic entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCostModel {
    pub entries: Vec<CostEntry>,
}

impl Default for GateCostModel {
    fn default() -> Self {
        use GateKind::*;
        let e = |kind, level, one_q, two_q| CostEntry {
            kind,
            level,
            one_q,
            two_q,
        };
        let mut entries = Vec::new();
        for k in [RX, RY, RZ] {
            entries.push(e(k, None, 1, 0));
            entries.push(e(k, Some(0.0), 0, 0));
        }
        for k in [CRX, CRY, CRZ] {
            entries.push(e(k, None, 2, 2));
            entries.push(e(k, Some(0.0), 0, 0));
            entries.push(e(k, Some(PI), 2, 1));
        }
        entries.push(e(CNOT, None, 0, 1));
        entries.push(e(SWAP, None, 0, 3));
        GateCostModel { entries }
    }
}

impl GateCostModel {
    pub fn validate(&self) -> Result<()> {
        for kind in GateKind::ALL {
            if !self
                .entries
                .iter()
                .any(|e| e.kind == kind && e.level.is_none())
            {
                return Err(Error::Config(format!("cost model lacks generic entry for {kind}")));
            }
            if kind.is_rotation() {
                if let Some(e) = self.level_entry(kind, 0.0) {
                    if e.one_q != 0 || e.two_q != 0 {
                        return Err(Error::Config(format!(
                            "level-0 cost of {kind} must be zero"
                        )));
                    }
                }
            }
        }
        for e in &self.entries {
            if let Some(l) = e.level {
                if !(0.0..std::f64::consts::TAU).contains(&l) {
                    return Err(Error::Config(format!("cost level {l} outside [0, 2π)")));
                }
            }
        }
        Ok(())
    }

    fn level_entry(&self, kind: GateKind, angle: f64) -> Option<&CostEntry> {
        self.entries.iter().find(|e| {
            e.kind == kind && e.level.is_some_and(|l| circular_distance(l, angle) <= LEVEL_EPS)
        })
    }

    pub fn generic(&self, kind: GateKind) -> BasisCount {
        self.entries
            .iter()
            .find(|e| e.kind == kind && e.level.is_none())
            .map(|e| BasisCount::new(e.one_q, e.two_q))
            .unwrap_or_default()
    }

    /// Basis-gate count for a gate at `angle`. Parameterless kinds ignore
    /// the angle.
    pub fn count(&self, kind: GateKind, angle: f64) -> BasisCount {
        if kind.is_rotation() {
            if let Some(e) = self.level_entry(kind, angle) {
                return BasisCount::new(e.one_q, e.two_q);
            }
        }
        self.generic(kind)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: GateCostModel =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
        model.validate()?;
        Ok(model)
    }
}
