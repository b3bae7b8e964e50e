//! Solver oracles used by the difficulty filter.

use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{derive_seed, PipelineError};

/// What an oracle sees of one instance. `reference` is the true output; only
/// the bundled stubs read it, and it is never sent to external solvers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleRequest<'a> {
    pub code: &'a str,
    /// `assert CALL == ????`.
    pub masked_call: String,
    pub reference: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    code: &'a str,
    masked_call: &'a str,
}

/// Predicts an output for a masked call. `None` means the trial failed.
/// A given (oracle, seed, request, trial) must always predict the same thing.
pub trait SolverOracle: Send + Sync {
    fn name(&self) -> String;
    fn predict(&self, req: &OracleRequest<'_>, seed: u64, trial: u32) -> Option<String>;
}

/// A prediction that never parses as a literal.
const WRONG: &str = "<wrong>";

pub struct AlwaysCorrect;
pub struct AlwaysWrong;

/// Correct with probability `p`, independently per trial.
pub struct Bernoulli {
    pub p: f64,
}

/// Spawns `program args...` per trial; the request goes to its stdin as one
/// JSON line and the first stdout line is the prediction.
pub struct External {
    pub program: String,
    pub args: Vec<String>,
}

impl SolverOracle for AlwaysCorrect {
    fn name(&self) -> String {
        "always-correct".into()
    }

    fn predict(&self, req: &OracleRequest<'_>, _: u64, _: u32) -> Option<String> {
        Some(req.reference.to_string())
    }
}

impl SolverOracle for AlwaysWrong {
    fn name(&self) -> String {
        "always-wrong".into()
    }

    fn predict(&self, _: &OracleRequest<'_>, _: u64, _: u32) -> Option<String> {
        Some(WRONG.into())
    }
}

impl SolverOracle for Bernoulli {
    fn name(&self) -> String {
        format!("bernoulli:{}", self.p)
    }

    fn predict(&self, req: &OracleRequest<'_>, seed: u64, trial: u32) -> Option<String> {
        let s = derive_seed(&[
            self.name().as_bytes(),
            &seed.to_le_bytes(),
            req.code.as_bytes(),
            req.masked_call.as_bytes(),
            &trial.to_le_bytes(),
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        Some(if rng.gen_bool(self.p) {
            req.reference.to_string()
        } else {
            WRONG.into()
        })
    }
}

impl SolverOracle for External {
    fn name(&self) -> String {
        format!("cmd:{}", std::iter::once(&self.program).chain(&self.args).cloned().collect::<Vec<_>>().join(" "))
    }

    fn predict(&self, req: &OracleRequest<'_>, seed: u64, trial: u32) -> Option<String> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .env("STEPWISE_SEED", seed.to_string())
            .env("STEPWISE_TRIAL", trial.to_string())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .ok()?;
        let wire = WireRequest {
            code: req.code,
            masked_call: &req.masked_call,
        };
        let mut line = serde_json::to_string(&wire).ok()?;
        line.push('\n');
        {
            let mut stdin = child.stdin.take()?;
            // A child that exits without reading is judged by its exit status.
            let _ = stdin.write_all(line.as_bytes());
        }
        let mut reply = String::new();
        let read = BufReader::new(child.stdout.take()?).read_line(&mut reply);
        let status = child.wait().ok()?;
        if read.is_err() || !status.success() {
            return None;
        }
        Some(reply.trim_end_matches(['\n', '\r']).to_string())
    }
}

/// `always-correct`, `always-wrong`, `bernoulli:P` or `cmd:PROGRAM ARGS...`.
pub fn oracle_from_name(name: &str) -> Result<Box<dyn SolverOracle>, PipelineError> {
    if let Some(p) = name.strip_prefix("bernoulli:") {
        let p: f64 = p
            .parse()
            .map_err(|_| PipelineError::Config(format!("bad probability in `{name}`")))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(PipelineError::Config(format!("probability out of range in `{name}`")));
        }
        return Ok(Box::new(Bernoulli { p }));
    }
    if let Some(cmd) = name.strip_prefix("cmd:") {
        let mut parts = cmd.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| PipelineError::Config("empty oracle command".into()))?;
        return Ok(Box::new(External {
            program,
            args: parts.collect(),
        }));
    }
    match name {
        "always-correct" => Ok(Box::new(AlwaysCorrect)),
        "always-wrong" => Ok(Box::new(AlwaysWrong)),
        _ => Err(PipelineError::Config(format!("unknown oracle `{name}`"))),
    }
}
