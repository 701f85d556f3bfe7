//! Line-delimited JSON bridge to an external policy process.
//!
//! ```text
//! parent -> {"hello":{"obs_dim":N,"act_dim":M}}
//! child  -> {"ready":{"act_dim":M}}
//! parent -> {"obs":[...]}        (once per step)
//! child  -> {"act":[...]}
//! parent -> {"bye":true}
//! ```
//!
//! One message per line. Every reply must arrive within the request timeout.
//! The child's stderr is collected and exposed through
//! [`Bridge::stderr_lines`].

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::EnvSpec;

pub const REQUEST_TIMEOUT: Duration = Duration::from_secs(2);

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("empty bridge command")]
    EmptyCommand,
    #[error("failed to spawn `{command}`: {source}")]
    Spawn { command: String, source: std::io::Error },
    #[error("no reply within {0:?}")]
    Timeout(Duration),
    #[error("policy process closed its output{}", stderr_hint(.stderr))]
    Closed { stderr: Vec<String> },
    #[error("failed to write to policy process: {0}")]
    Write(std::io::Error),
    #[error("malformed reply `{line}`: {reason}")]
    Malformed { line: String, reason: String },
    #[error("policy advertises act_dim={got}, environment needs act_dim={expected}")]
    SpecMismatch { expected: usize, got: usize },
    #[error("invalid action in reply `{line}`: {reason}")]
    BadAction { line: String, reason: String },
}

fn stderr_hint(lines: &[String]) -> String {
    match lines.last() {
        Some(last) => format!(" (last stderr line: {last})"),
        None => String::new(),
    }
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct Dims {
    pub obs_dim: usize,
    pub act_dim: usize,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct ReadyDims {
    pub act_dim: usize,
}

/// Messages sent from the trainer to the policy process.
#[derive(Serialize, Deserialize, Debug, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum Request {
    Hello(Dims),
    Obs(Vec<f64>),
    Bye(bool),
}

/// Messages sent from the policy process to the trainer.
#[derive(Serialize, Deserialize, Debug, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum Reply {
    Ready(ReadyDims),
    Act(Vec<f64>),
}

/// A running policy process speaking the wire protocol.
#[derive(Debug)]
pub struct Bridge {
    command: String,
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<String>,
    stderr: Arc<Mutex<Vec<String>>>,
    act_dim: usize,
    timeout: Duration,
}

impl Bridge {
    /// Spawn `command` (whitespace-separated program and arguments) and
    /// complete the handshake.
    pub fn spawn(command: &str, spec: &EnvSpec) -> Result<Self, BridgeError> {
        Self::spawn_with_timeout(command, spec, REQUEST_TIMEOUT)
    }

    pub fn spawn_with_timeout(command: &str, spec: &EnvSpec, timeout: Duration) -> Result<Self, BridgeError> {
        let mut parts = command.split_whitespace();
        let program = parts.next().ok_or(BridgeError::EmptyCommand)?;
        let mut child = Command::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|source| BridgeError::Spawn { command: command.to_string(), source })?;

        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines().map_while(Result::ok) {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let stderr = Arc::new(Mutex::new(Vec::new()));
        let sink = Arc::clone(&stderr);
        let err_pipe = child.stderr.take().expect("piped stderr");
        thread::spawn(move || {
            for line in BufReader::new(err_pipe).lines().map_while(Result::ok) {
                sink.lock().expect("stderr log").push(line);
            }
        });

        let stdin = child.stdin.take();
        let mut bridge =
            Bridge { command: command.to_string(), child, stdin, lines, stderr, act_dim: spec.act_dim, timeout };
        bridge.handshake(spec)?;
        Ok(bridge)
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    fn send(&mut self, request: &Request) -> Result<(), BridgeError> {
        let mut line = serde_json::to_string(request).expect("request serialises");
        line.push('\n');
        let stdin = self.stdin.as_mut().ok_or_else(|| BridgeError::Closed { stderr: Vec::new() })?;
        stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush()).map_err(BridgeError::Write)
    }

    fn receive(&mut self) -> Result<(String, Reply), BridgeError> {
        let line = match self.lines.recv_timeout(self.timeout) {
            Ok(line) => line,
            Err(RecvTimeoutError::Timeout) => return Err(BridgeError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                // give the stderr reader a moment to drain
                thread::sleep(Duration::from_millis(20));
                return Err(BridgeError::Closed { stderr: self.stderr_lines() });
            }
        };
        match serde_json::from_str::<Reply>(&line) {
            Ok(reply) => Ok((line, reply)),
            Err(e) => Err(BridgeError::Malformed { line, reason: e.to_string() }),
        }
    }

    fn handshake(&mut self, spec: &EnvSpec) -> Result<(), BridgeError> {
        self.send(&Request::Hello(Dims { obs_dim: spec.obs_dim, act_dim: spec.act_dim }))?;
        match self.receive()? {
            (_, Reply::Ready(ReadyDims { act_dim })) if act_dim == spec.act_dim => Ok(()),
            (_, Reply::Ready(ReadyDims { act_dim })) => {
                Err(BridgeError::SpecMismatch { expected: spec.act_dim, got: act_dim })
            }
            (line, _) => Err(BridgeError::Malformed { line, reason: "expected a `ready` reply".into() }),
        }
    }

    /// One request/response round trip.
    pub fn act(&mut self, obs: &[f64]) -> Result<Vec<f64>, BridgeError> {
        self.send(&Request::Obs(obs.to_vec()))?;
        let (line, reply) = self.receive()?;
        let action = match reply {
            Reply::Act(a) => a,
            Reply::Ready(_) => return Err(BridgeError::Malformed { line, reason: "expected an `act` reply".into() }),
        };
        if action.len() != self.act_dim {
            let reason = format!("{} values, expected {}", action.len(), self.act_dim);
            return Err(BridgeError::BadAction { line, reason });
        }
        if action.iter().any(|v| !v.is_finite()) {
            return Err(BridgeError::BadAction { line, reason: "non-finite value".into() });
        }
        Ok(action)
    }

    pub fn stderr_lines(&self) -> Vec<String> {
        self.stderr.lock().expect("stderr log").clone()
    }

    /// Send `bye` and wait briefly for the process to exit.
    pub fn close(mut self) -> Result<(), BridgeError> {
        let sent = self.send(&Request::Bye(true));
        self.stdin.take();
        for _ in 0..50 {
            if let Ok(Some(_)) = self.child.try_wait() {
                return sent;
            }
            thread::sleep(Duration::from_millis(10));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
        sent
    }
}

impl Drop for Bridge {
    fn drop(&mut self) {
        if let Ok(None) = self.child.try_wait() {
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}

/// Child side of the protocol: answer requests from `input` on `output`
/// using `policy` until `bye` or end of input.
pub fn serve(
    mut policy: impl FnMut(&[f64]) -> Vec<f64>,
    act_dim: usize,
    input: impl BufRead,
    mut output: impl Write,
) -> std::io::Result<()> {
    let reply = |out: &mut dyn Write, r: &Reply| -> std::io::Result<()> {
        writeln!(out, "{}", serde_json::to_string(r).expect("reply serialises"))?;
        out.flush()
    };
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: Request = serde_json::from_str(&line)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{line}: {e}")))?;
        match request {
            Request::Hello(_) => reply(&mut output, &Reply::Ready(ReadyDims { act_dim }))?,
            Request::Obs(obs) => reply(&mut output, &Reply::Act(policy(&obs)))?,
            Request::Bye(_) => break,
        }
    }
    Ok(())
}
