use std::collections::BTreeSet;
use std::fmt;

use super::{Bound, Constraint, DetectorDescriptor, ParmType};
use crate::archive::ChannelStream;
use crate::parm::{ParmSet, ParmValue};

/// One problem with a parm-file. Validation reports all of them at once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub key: Option<String>,
    pub message: String,
}

impl Violation {
    fn keyed(key: &str, message: String) -> Self {
        Self { key: Some(key.to_string()), message }
    }

    pub fn general(message: String) -> Self {
        Self { key: None, message }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// A parm set that passed validation, with declared defaults filled in.
///
/// Accessors panic on keys the descriptor does not declare with the matching
/// type; after validation that is a plugin bug, not a user error.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedParms {
    set: ParmSet,
}

impl ValidatedParms {
    pub fn parm_set(&self) -> &ParmSet {
        &self.set
    }

    pub fn get(&self, key: &str) -> Option<&ParmValue> {
        self.set.get(key)
    }

    pub fn f64(&self, key: &str) -> f64 {
        self.get(key).and_then(ParmValue::as_f64).unwrap_or_else(|| missing(key, "number"))
    }

    pub fn opt_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(ParmValue::as_f64)
    }

    pub fn i64(&self, key: &str) -> i64 {
        self.get(key).and_then(ParmValue::as_i64).unwrap_or_else(|| missing(key, "int"))
    }

    pub fn usize(&self, key: &str) -> usize {
        usize::try_from(self.i64(key)).unwrap_or_else(|_| missing(key, "non-negative int"))
    }

    pub fn bool(&self, key: &str) -> bool {
        self.get(key).and_then(ParmValue::as_bool).unwrap_or_else(|| missing(key, "bool"))
    }

    pub fn str(&self, key: &str) -> &str {
        self.get(key).and_then(ParmValue::as_str).unwrap_or_else(|| missing(key, "string"))
    }
}

fn missing(key: &str, what: &str) -> ! {
    panic!("validated parms have no {what} `{key}`")
}

/// Checks `parms` against `desc` for a stream's sample rate.
pub fn validate_parms(
    parms: &ParmSet,
    desc: &DetectorDescriptor,
    stream: &ChannelStream,
) -> Result<ValidatedParms, Vec<Violation>> {
    let (set, violations) = check(parms, desc, Some(stream.sample_rate));
    if violations.is_empty() {
        Ok(ValidatedParms { set })
    } else {
        Err(violations)
    }
}

/// Validates against every distinct sample rate among `streams`. Without
/// streams, rate-dependent checks are skipped.
pub fn validate_for_streams(
    parms: ParmSet,
    desc: &DetectorDescriptor,
    streams: &[ChannelStream],
) -> Result<ValidatedParms, Vec<Violation>> {
    let rates: BTreeSet<u32> = streams.iter().map(|s| s.sample_rate).collect();
    let rates: Vec<Option<u32>> = if rates.is_empty() { vec![None] } else { rates.into_iter().map(Some).collect() };
    let mut all: Vec<Violation> = Vec::new();
    let mut filled = None;
    for rate in rates {
        let (set, violations) = check(&parms, desc, rate);
        for v in violations {
            if !all.contains(&v) {
                all.push(v);
            }
        }
        filled = Some(set);
    }
    if all.is_empty() {
        Ok(ValidatedParms { set: filled.expect("at least one rate checked") })
    } else {
        Err(all)
    }
}

fn check(parms: &ParmSet, desc: &DetectorDescriptor, rate: Option<u32>) -> (ParmSet, Vec<Violation>) {
    let mut out = Vec::new();
    let mut set = parms.clone();
    if set.detector_id.is_empty() {
        set.detector_id = desc.detector_id.to_string();
    } else if set.detector_id != desc.detector_id {
        out.push(Violation::general(format!("parm-file configures `{}`, not `{}`", set.detector_id, desc.detector_id)));
    }

    for (key, _) in parms.entries() {
        if desc.key(key).is_none() {
            out.push(Violation::keyed(key, format!("unknown key `{key}`")));
        }
    }

    for spec in &desc.keys {
        let value = match parms.get(spec.key) {
            Some(v) => v.clone(),
            None => match &spec.default {
                Some(d) => {
                    set.set(spec.key, d.clone());
                    d.clone()
                }
                None => {
                    if spec.required {
                        out.push(Violation::keyed(
                            spec.key,
                            format!("missing required key `{}` ({})", spec.key, spec.ty),
                        ));
                    }
                    continue;
                }
            },
        };
        if !spec.ty.admits(&value) {
            out.push(Violation::keyed(
                spec.key,
                format!("`{}` must be {}, found {} ({})", spec.key, spec.ty, value, value.type_name()),
            ));
            continue;
        }
        // Store ints given for float keys as floats so accessors stay uniform.
        if spec.ty == ParmType::Float {
            if let ParmValue::Int(i) = value {
                set.set(spec.key, ParmValue::Float(i as f64));
            }
        }
        let Some(x) = value.as_f64() else { continue };
        match spec.min {
            Some(Bound::Inclusive(m)) if x < m => {
                out.push(Violation::keyed(spec.key, format!("{} {x} is below minimum {m}", spec.key)))
            }
            Some(Bound::Exclusive(m)) if x <= m => {
                out.push(Violation::keyed(spec.key, format!("{} {x} must be greater than {m}", spec.key)))
            }
            _ => {}
        }
        match spec.max {
            Some(Bound::Inclusive(m)) if x > m => {
                out.push(Violation::keyed(spec.key, format!("{} {x} exceeds maximum {m}", spec.key)))
            }
            Some(Bound::Exclusive(m)) if x >= m => {
                out.push(Violation::keyed(spec.key, format!("{} {x} must be less than {m}", spec.key)))
            }
            _ => {}
        }
    }

    if let Some(rate) = rate {
        if rate < desc.min_sample_rate {
            out.push(Violation::general(format!(
                "sample rate {rate} Hz is below the detector minimum {} Hz",
                desc.min_sample_rate
            )));
        }
    }

    let num = |key: &str| set.get(key).and_then(ParmValue::as_f64);
    for c in &desc.constraints {
        match *c {
            Constraint::LessOrEqual(a, b) => {
                if let (Some(xa), Some(xb)) = (num(a), num(b)) {
                    if xa > xb {
                        out.push(Violation::keyed(a, format!("{a} {xa} must not exceed {b} {xb}")));
                    }
                }
            }
            Constraint::LessThan(a, b) => {
                if let (Some(xa), Some(xb)) = (num(a), num(b)) {
                    if xa >= xb {
                        out.push(Violation::keyed(a, format!("{a} {xa} must be less than {b} {xb}")));
                    }
                }
            }
            Constraint::WithinNyquist(k) => {
                if let (Some(rate), Some(x)) = (rate, num(k)) {
                    let nyquist = rate as f64 / 2.0;
                    if x > nyquist {
                        out.push(Violation::keyed(k, format!("{k} {x} exceeds Nyquist {nyquist}")));
                    }
                }
            }
            Constraint::PowerOfTwo(k) => {
                if let Some(ParmValue::Int(i)) = set.get(k) {
                    if *i <= 0 || !(*i as u64).is_power_of_two() {
                        out.push(Violation::keyed(k, format!("{k} {i} is not a power of two")));
                    }
                }
            }
        }
    }
    if out.is_empty() {
        set.mark_validated();
    }
    (set, out)
}
