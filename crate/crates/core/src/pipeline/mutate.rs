//! Rule-based mutation of entry-call arguments.
//!
//! Ints are redrawn from the pool. Strings are replaced by a pool string or
//! extended with one. Lists, tuples, sets and dicts grow by pool-derived
//! elements shaped like their existing ones.

use std::collections::HashSet;

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{derive_seed, DatasetInstance, PipelineError, Provenance};
use crate::interp::{execute, render_value, EntryCall, ExecutionLimits, Value};
use crate::trace::Status;

/// Reference values mutations draw from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValuePool {
    #[serde(default)]
    pub integers: Vec<i64>,
    #[serde(default)]
    pub strings: Vec<String>,
}

/// Attempts per requested mutant before giving up.
pub const RETRIES_PER_MUTANT: usize = 10;

struct Mutator<'a> {
    pool: &'a ValuePool,
    rng: ChaCha8Rng,
}

impl Mutator<'_> {
    fn int(&mut self, old: Option<&BigInt>) -> BigInt {
        match self.pool.integers.choose(&mut self.rng) {
            Some(&i) => BigInt::from(i),
            None => old.cloned().unwrap_or_default() + self.rng.gen_range(1..10),
        }
    }

    fn string(&mut self, old: &str) -> String {
        let Some(p) = self.pool.strings.choose(&mut self.rng).cloned() else {
            return format!("{old}{old}");
        };
        match self.rng.gen_range(0..3) {
            0 => p,
            1 => format!("{old}{p}"),
            _ => format!("{p}{old}"),
        }
    }

    /// A fresh value shaped like `like`.
    fn fresh(&mut self, like: &Value) -> Value {
        match like {
            Value::Int(n) => Value::Int(self.int(Some(n))),
            Value::Float(f) => {
                let base = self.int(None);
                Value::Float(base.to_string().parse::<f64>().unwrap_or(0.0) + f.fract())
            }
            Value::Bool(_) => Value::Bool(self.rng.gen()),
            Value::Str(s) => Value::Str(match self.pool.strings.choose(&mut self.rng) {
                Some(p) => p.clone(),
                None => s.clone(),
            }),
            Value::Tuple(xs) => Value::Tuple(xs.iter().map(|x| self.fresh(x)).collect()),
            Value::List(xs) => Value::List(xs.iter().map(|x| self.fresh(x)).collect()),
            other => other.clone(),
        }
    }

    fn element_like(&mut self, items: &[Value]) -> Value {
        match items.choose(&mut self.rng) {
            Some(x) => self.fresh(x),
            None if self.pool.integers.is_empty() => Value::Str(self.string("")),
            None => Value::Int(self.int(None)),
        }
    }

    fn mutate(&mut self, v: &Value) -> Value {
        let grow = self.rng.gen_range(1..=3);
        match v {
            Value::Int(n) => Value::Int(self.int(Some(n))),
            Value::Float(_) | Value::Bool(_) => self.fresh(v),
            Value::Str(s) => Value::Str(self.string(s)),
            Value::List(xs) | Value::Tuple(xs) => {
                let mut out = xs.clone();
                for _ in 0..grow {
                    let e = self.element_like(xs);
                    out.push(e);
                }
                if matches!(v, Value::List(_)) {
                    Value::List(out)
                } else {
                    Value::Tuple(out)
                }
            }
            Value::Set(xs) => {
                let mut out = xs.clone();
                for _ in 0..grow {
                    out.push(self.element_like(xs));
                }
                Value::set_from(out).unwrap_or_else(|_| v.clone())
            }
            Value::Dict(pairs) => {
                let keys: Vec<Value> = pairs.iter().map(|(k, _)| k.clone()).collect();
                let vals: Vec<Value> = pairs.iter().map(|(_, x)| x.clone()).collect();
                let mut out = pairs.clone();
                for _ in 0..grow {
                    let k = self.element_like(&keys);
                    let x = self.element_like(&vals);
                    out.push((k, x));
                }
                Value::dict_from(out).unwrap_or_else(|_| v.clone())
            }
            other => other.clone(),
        }
    }
}

/// Up to `count` distinct mutants of `instance`, each re-executed for its own
/// expected output. Mutants that fail to execute are discarded and redrawn,
/// at most `count * RETRIES_PER_MUTANT` draws in total.
pub fn mutate_inputs(
    instance: &DatasetInstance,
    pool: &ValuePool,
    count: usize,
    seed: u64,
    limits: ExecutionLimits,
) -> Result<Vec<DatasetInstance>, PipelineError> {
    if pool.integers.is_empty() && pool.strings.is_empty() {
        return Err(PipelineError::Config("value pool is empty".into()));
    }
    let (_, tree) = instance.load()?;
    let call = EntryCall::parse(&instance.call).map_err(|e| PipelineError::Config(e.to_string()))?;
    let mut m = Mutator {
        pool,
        rng: ChaCha8Rng::seed_from_u64(derive_seed(&[
            &seed.to_le_bytes(),
            instance.code.as_bytes(),
            instance.call.as_bytes(),
        ])),
    };
    let mut seen: HashSet<String> = HashSet::from([call.render()]);
    let mut out = Vec::new();
    for _ in 0..count * RETRIES_PER_MUTANT {
        if out.len() == count || call.args.is_empty() && call.kwargs.is_empty() {
            break;
        }
        let mutant = EntryCall {
            function: call.function.clone(),
            args: call.args.iter().map(|a| m.mutate(a)).collect(),
            kwargs: call.kwargs.iter().map(|(k, v)| (k.clone(), m.mutate(v))).collect(),
        };
        let text = mutant.render();
        if !seen.insert(text.clone()) {
            continue;
        }
        let r = execute(&tree, &text, limits, false);
        if r.status != Status::Ok {
            continue;
        }
        let value = r.return_value.as_ref().expect("ok result has a value");
        out.push(DatasetInstance {
            id: format!("{}-m{}", instance.id, out.len() + 1),
            code: instance.code.clone(),
            call: text,
            expected: render_value(value),
            provenance: Provenance::Mutated,
            level: instance.level,
        });
    }
    Ok(out)
}
