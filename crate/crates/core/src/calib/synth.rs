//! Synthetic fluctuating calibration history.
//!
//! Every field follows its own mean-reverting random walk in log space
//! around its base rate. On top of that, spikes occasionally lift a single
//! randomly chosen field by a random amount for a random number of days,
//! so drift is heterogeneous across qubits and pairs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::snapshot::{CalibrationSnapshot, Label};
use crate::error::{Error, Result};
use crate::qcore::Pair;

pub const MIN_RATE: f64 = 1e-5;
pub const MAX_RATE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftConfig {
    pub n_days: usize,
    /// Base rates; also fixes the qubit set and coupling.
    #[serde(with = "base_serde")]
    pub base: CalibrationSnapshot,
    /// Standard deviation of the daily log-space step.
    pub step: f64,
    /// Pull towards the base rate per day, in `[0, 1]`.
    pub reversion: f64,
    pub spike_prob: f64,
    pub spike_min: f64,
    pub spike_max: f64,
    /// Spikes last a uniform number of days in `1..=spike_max_days`.
    pub spike_max_days: usize,
    /// Fields eligible for spikes; empty means every field.
    #[serde(default)]
    pub spike_targets: Vec<Label>,
    pub seed: u64,
}

mod base_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: &CalibrationSnapshot, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let text = super::super::io::calibrations_to_string(std::slice::from_ref(s));
        let v: serde_json::Value = serde_json::from_str(&text).map_err(serde::ser::Error::custom)?;
        v.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<CalibrationSnapshot, D::Error> {
        let v = serde_json::Value::deserialize(de)?;
        let days = super::super::io::parse_calibrations_str(&v.to_string())
            .map_err(serde::de::Error::custom)?;
        days.into_iter()
            .next()
            .ok_or_else(|| serde::de::Error::custom("base needs exactly one day"))
    }
}

impl DriftConfig {
    /// Four qubits on a ring with rates typical of small superconducting
    /// devices: ~3e-4 single-qubit, ~1e-2 two-qubit and 2–5% readout error.
    pub fn ring4(n_days: usize, seed: u64) -> Self {
        let coupling: [Pair; 4] = [(0, 1), (1, 2), (2, 3), (0, 3)];
        let base = CalibrationSnapshot {
            date: "base".into(),
            sq_error: [(0, 3.0e-4), (1, 4.0e-4), (2, 2.5e-4), (3, 3.5e-4)].into(),
            tq_error: coupling
                .iter()
                .zip([0.010, 0.012, 0.008, 0.011])
                .map(|(&p, r)| (p, r))
                .collect(),
            ro_error: [
                (0, (0.015, 0.030)),
                (1, (0.020, 0.035)),
                (2, (0.012, 0.028)),
                (3, (0.018, 0.040)),
            ]
            .into(),
        };
        DriftConfig {
            n_days,
            base,
            step: 0.08,
            reversion: 0.1,
            spike_prob: 0.05,
            spike_min: 0.05,
            spike_max: 0.15,
            spike_max_days: 6,
            spike_targets: coupling.iter().map(|&(a, b)| Label::Tq(a, b)).collect(),
            seed,
        }
    }

    /// Harsher 4-qubit ring: larger gate errors and strongly asymmetric,
    /// opposite-signed readout errors on qubits 0 and 1, with spikes on
    /// every field. Used by the acceptance experiment.
    pub fn ring4_uneven(n_days: usize, seed: u64) -> Self {
        let coupling: [Pair; 4] = [(0, 1), (1, 2), (2, 3), (0, 3)];
        let base = CalibrationSnapshot {
            date: "base".into(),
            sq_error: [(0, 2.0e-3), (1, 3.0e-3), (2, 2.0e-3), (3, 2.5e-3)].into(),
            tq_error: coupling
                .iter()
                .zip([0.0100, 0.0125, 0.0075, 0.00875])
                .map(|(&p, r)| (p, r))
                .collect(),
            ro_error: [
                (0, (0.02, 0.20)),
                (1, (0.20, 0.02)),
                (2, (0.03, 0.06)),
                (3, (0.03, 0.04)),
            ]
            .into(),
        };
        DriftConfig {
            n_days,
            base,
            step: 0.10,
            reversion: 0.1,
            spike_prob: 0.12,
            spike_min: 0.0125,
            spike_max: 0.0625,
            spike_max_days: 8,
            spike_targets: Vec::new(),
            seed,
        }
    }

    pub fn labels(&self) -> Vec<Label> {
        self.base.schema().labels.clone()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.base.validate()?;
        for l in self.labels() {
            let v = self.base.value(l).unwrap_or(0.0);
            if !(MIN_RATE..=MAX_RATE).contains(&v) {
                return bad(format!("base rate {l} = {v} outside [{MIN_RATE}, {MAX_RATE}]"));
            }
        }
        if !(self.step >= 0.0 && self.step.is_finite()) {
            return bad(format!("step {} must be a finite non-negative number", self.step));
        }
        if !(0.0..=1.0).contains(&self.reversion) {
            return bad(format!("reversion {} outside [0, 1]", self.reversion));
        }
        if !(0.0..=1.0).contains(&self.spike_prob) {
            return bad(format!("spike probability {} outside [0, 1]", self.spike_prob));
        }
        if !(0.0 <= self.spike_min && self.spike_min <= self.spike_max && self.spike_max <= MAX_RATE) {
            return bad(format!(
                "spike range [{}, {}] invalid",
                self.spike_min, self.spike_max
            ));
        }
        if self.spike_max_days == 0 {
            return bad("spike_max_days must be at least 1".into());
        }
        let labels = self.labels();
        if let Some(t) = self.spike_targets.iter().find(|t| !labels.contains(t)) {
            return bad(format!("spike target {t} is not a field of the base snapshot"));
        }
        Ok(())
    }
}

/// Generated series plus the ground truth behind it.
#[derive(Debug, Clone)]
pub struct SynthSeries {
    pub days: Vec<CalibrationSnapshot>,
    /// Per-day walk value of every field (schema order), before spikes.
    pub walk: Vec<Vec<f64>>,
    /// Fields elevated by an active spike on each day.
    pub spiked: Vec<Vec<Label>>,
    pub labels: Vec<Label>,
}

#[derive(Debug, Clone)]
struct Spike {
    label: usize,
    magnitude: f64,
    days_left: usize,
}

pub fn synth_timeseries(config: &DriftConfig) -> Result<Vec<CalibrationSnapshot>> {
    Ok(synth_timeseries_detailed(config)?.days)
}

pub fn synth_timeseries_detailed(config: &DriftConfig) -> Result<SynthSeries> {
    config.validate()?;
    let labels = config.labels();
    let targets: Vec<usize> = if config.spike_targets.is_empty() {
        (0..labels.len()).collect()
    } else {
        config
            .spike_targets
            .iter()
            .map(|t| labels.iter().position(|l| l == t).expect("validated"))
            .collect()
    };
    let base: Vec<f64> = labels
        .iter()
        .map(|&l| config.base.value(l).expect("validated"))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // log-space deviation from the base rate
    let mut dev = vec![0.0f64; labels.len()];
    let mut spikes: Vec<Spike> = Vec::new();
    let mut out = SynthSeries {
        days: Vec::with_capacity(config.n_days),
        walk: Vec::with_capacity(config.n_days),
        spiked: Vec::with_capacity(config.n_days),
        labels: labels.clone(),
    };

    for day in 0..config.n_days {
        if day > 0 {
            for x in dev.iter_mut() {
                let eps: f64 = rng.sample(StandardNormal);
                *x += -config.reversion * *x + config.step * eps;
            }
        }
        spikes.retain(|s| s.days_left > 0);
        if config.spike_prob > 0.0 && rng.random::<f64>() < config.spike_prob {
            let label = targets[rng.random_range(0..targets.len())];
            let magnitude = if config.spike_max > config.spike_min {
                rng.random_range(config.spike_min..=config.spike_max)
            } else {
                config.spike_min
            };
            let days_left = rng.random_range(1..=config.spike_max_days);
            spikes.push(Spike {
                label,
                magnitude,
                days_left,
            });
        }

        let walk: Vec<f64> = dev
            .iter()
            .zip(&base)
            .map(|(x, b)| (b * x.exp()).clamp(MIN_RATE, MAX_RATE))
            .collect();
        let mut values = walk.clone();
        let mut spiked = Vec::new();
        for s in &mut spikes {
            values[s.label] += s.magnitude;
            s.days_left -= 1;
            if !spiked.contains(&labels[s.label]) {
                spiked.push(labels[s.label]);
            }
        }
        let mut snap = config.base.clone();
        snap.date = format!("day{day:04}");
        for (l, v) in labels.iter().zip(&values) {
            *snap.value_mut(*l).expect("label from base") = v.clamp(MIN_RATE, MAX_RATE);
        }
        out.days.push(snap);
        out.walk.push(walk);
        out.spiked.push(spiked);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calib::snapshot::vectorize;

    #[test]
    fn frozen_config_repeats_base() {
        let mut c = DriftConfig::ring4(12, 3);
        c.step = 0.0;
        c.spike_prob = 0.0;
        let days = synth_timeseries(&c).unwrap();
        let schema = c.base.schema();
        let base = vectorize(&c.base, &schema).unwrap();
        for d in &days {
            assert_eq!(vectorize(d, &schema).unwrap().values, base.values);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let c = DriftConfig::ring4(40, 9);
        assert_eq!(synth_timeseries(&c).unwrap(), synth_timeseries(&c).unwrap());
        let mut d = c.clone();
        d.seed = 10;
        assert_ne!(synth_timeseries(&c).unwrap(), synth_timeseries(&d).unwrap());
    }

    #[test]
    fn daily_spike_elevates_exactly_one_field() {
        let mut c = DriftConfig::ring4(30, 1);
        c.spike_prob = 1.0;
        c.spike_min = 0.2;
        c.spike_max = 0.2;
        c.spike_max_days = 1;
        c.spike_targets.clear();
        let s = synth_timeseries_detailed(&c).unwrap();
        let schema = c.base.schema();
        for (day, snap) in s.days.iter().enumerate() {
            let v = vectorize(snap, &schema).unwrap();
            let elevated = v
                .values
                .iter()
                .zip(&s.walk[day])
                .filter(|(x, w)| *x - *w >= 0.2 - 1e-12)
                .count();
            assert_eq!(elevated, 1, "day {day}");
            assert_eq!(s.spiked[day].len(), 1);
        }
    }

    #[test]
    fn rejects_bad_bounds() {
        let mut c = DriftConfig::ring4(5, 0);
        c.spike_prob = 1.5;
        assert!(synth_timeseries(&c).is_err());
        let mut c = DriftConfig::ring4(5, 0);
        c.spike_min = 0.3;
        c.spike_max = 0.1;
        assert!(synth_timeseries(&c).is_err());
    }

    #[test]
    fn config_json_roundtrip() {
        let c = DriftConfig::ring4(5, 0);
        let s = serde_json::to_string(&c).unwrap();
        let back: DriftConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
