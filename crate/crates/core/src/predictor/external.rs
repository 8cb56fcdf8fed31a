//! Bridge to a predictor running in a child process.
//!
//! Line protocol over stdin/stdout: the child first prints [`HANDSHAKE`];
//! each request is one line of comma-separated feature values in feature
//! order (categoricals as double-quoted level names) and each response is
//! one line holding a decimal score. Requests are strictly serial.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::{Arc, Mutex};

use crate::error::{IrdError, Result};
use crate::space::{FeatureDomain, FeatureSpace};

use super::Predictor;

pub const HANDSHAKE: &str = "IRD-PREDICTOR 1";

/// Environment variable naming the external predictor command.
pub const PREDICTOR_CMD_ENV: &str = "IRD_PREDICTOR_CMD";

struct Bridge {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

pub struct ExternalPredictor {
    space: Arc<FeatureSpace>,
    bridge: Mutex<Bridge>,
}

impl std::fmt::Debug for ExternalPredictor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalPredictor").finish_non_exhaustive()
    }
}

fn transport(e: impl std::fmt::Display) -> IrdError {
    IrdError::Transport(e.to_string())
}

impl ExternalPredictor {
    /// Runs `command` through `sh -c` and waits for the handshake line.
    pub fn spawn(command: &str, space: Arc<FeatureSpace>) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(transport)?;
        let stdin = child.stdin.take().ok_or_else(|| transport("no stdin"))?;
        let mut stdout = BufReader::new(child.stdout.take().ok_or_else(|| transport("no stdout"))?);
        let mut line = String::new();
        stdout.read_line(&mut line).map_err(transport)?;
        if line.trim_end() != HANDSHAKE {
            let _ = child.kill();
            return Err(IrdError::Transport(format!(
                "expected handshake `{HANDSHAKE}`, got `{}`",
                line.trim_end()
            )));
        }
        Ok(ExternalPredictor {
            space,
            bridge: Mutex::new(Bridge {
                child,
                stdin,
                stdout,
            }),
        })
    }

    /// Spawns the command named by `IRD_PREDICTOR_CMD`.
    pub fn from_env(space: Arc<FeatureSpace>) -> Result<Self> {
        let cmd = std::env::var(PREDICTOR_CMD_ENV)
            .map_err(|_| IrdError::Config(format!("{PREDICTOR_CMD_ENV} is not set")))?;
        ExternalPredictor::spawn(&cmd, space)
    }

    /// Request line for `x`.
    pub fn encode(&self, x: &[f64]) -> Result<String> {
        self.space.check_len(x.len())?;
        let fields: Vec<String> = x
            .iter()
            .enumerate()
            .map(|(j, &v)| match self.space.domain(j) {
                FeatureDomain::Numeric { .. } => format!("{v}"),
                FeatureDomain::Categorical { .. } => {
                    format!("\"{}\"", self.space.format_value(j, v))
                }
            })
            .collect();
        Ok(fields.join(","))
    }
}

impl Predictor for ExternalPredictor {
    fn score(&self, x: &[f64]) -> Result<f64> {
        let request = self.encode(x)?;
        let mut bridge = self
            .bridge
            .lock()
            .map_err(|_| transport("bridge lock poisoned"))?;
        writeln!(bridge.stdin, "{request}").map_err(transport)?;
        bridge.stdin.flush().map_err(transport)?;
        let mut line = String::new();
        let n = bridge.stdout.read_line(&mut line).map_err(transport)?;
        if n == 0 {
            return Err(transport("predictor process closed its output"));
        }
        let score: f64 = line.trim().parse().map_err(|_| {
            IrdError::Transport(format!("malformed score line `{}`", line.trim_end()))
        })?;
        super::check_score(score)
    }
}

impl Drop for ExternalPredictor {
    fn drop(&mut self) {
        if let Ok(bridge) = self.bridge.get_mut() {
            let _ = bridge.child.kill();
            let _ = bridge.child.wait();
        }
    }
}
