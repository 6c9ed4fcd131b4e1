//! External scorer speaking JSON Lines over stdin/stdout.
//!
//! The scorer's first line is a hello object listing the property letters it
//! serves. Requests are pipelined up to a fixed window and responses are
//! matched back to requests by id, so they may arrive in any order.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{OracleError, ScoreError};
use crate::propmodel::{letters, PropertyId, PropertyVector};

pub const PROTOCOL_VERSION: u64 = 1;
pub const DEFAULT_WINDOW: usize = 64;
pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubprocessConfig {
    pub command: String,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    #[serde(default = "default_window")]
    pub window: usize,
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_MS
}

fn default_window() -> usize {
    DEFAULT_WINDOW
}

impl SubprocessConfig {
    pub fn new(command: impl Into<String>, args: Vec<String>) -> Self {
        SubprocessConfig {
            command: command.into(),
            args,
            timeout_ms: DEFAULT_TIMEOUT_MS,
            window: DEFAULT_WINDOW,
        }
    }

    pub fn identity(&self) -> String {
        let mut s = format!("subprocess:{}", self.command);
        for a in &self.args {
            s.push(' ');
            s.push_str(a);
        }
        s
    }
}

pub(crate) struct SubprocessScorer {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<String>,
    props: BTreeSet<PropertyId>,
    next_id: u64,
    dead: bool,
    timeout: Duration,
    window: usize,
}

fn violation(msg: impl Into<String>) -> OracleError {
    OracleError::ProtocolViolation(msg.into())
}

fn parse_hello(line: &str) -> Result<BTreeSet<PropertyId>, OracleError> {
    let bad = |why: &str| OracleError::Handshake(format!("{why}: {line:?}"));
    let v: Value = serde_json::from_str(line).map_err(|_| bad("hello is not JSON"))?;
    if v.get("hello").and_then(Value::as_str) != Some("scorer") {
        return Err(bad("first line is not a scorer hello"));
    }
    if v.get("version").and_then(Value::as_u64) != Some(PROTOCOL_VERSION) {
        return Err(bad("unsupported protocol version"));
    }
    let props = v.get("props").and_then(Value::as_array).ok_or_else(|| bad("hello lacks props"))?;
    props
        .iter()
        .map(|p| p.as_str().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad property letter")))
        .collect()
}

enum Reply {
    Scores(serde_json::Map<String, Value>),
    Error(String),
}

fn parse_reply(line: &str) -> Result<(u64, Reply), OracleError> {
    let v: Value = serde_json::from_str(line).map_err(|_| violation(format!("response is not JSON: {line:?}")))?;
    let id = v
        .get("id")
        .and_then(Value::as_u64)
        .ok_or_else(|| violation(format!("response lacks an integer id: {line:?}")))?;
    match (v.get("scores"), v.get("error")) {
        (Some(Value::Object(m)), None) => Ok((id, Reply::Scores(m.clone()))),
        (None, Some(Value::String(e))) => Ok((id, Reply::Error(e.clone()))),
        _ => Err(violation(format!("response needs exactly one of scores or error: {line:?}"))),
    }
}

impl SubprocessScorer {
    pub(crate) fn spawn(cfg: &SubprocessConfig) -> Result<Self, OracleError> {
        if cfg.timeout_ms == 0 {
            return Err(OracleError::Config("timeout_ms must be positive".into()));
        }
        let mut child = Command::new(&cfg.command)
            .args(&cfg.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| OracleError::Spawn(format!("{}: {e}", cfg.command)))?;
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let timeout = Duration::from_millis(cfg.timeout_ms);
        let mut scorer = SubprocessScorer {
            stdin: child.stdin.take(),
            child,
            lines: rx,
            props: BTreeSet::new(),
            next_id: 0,
            dead: false,
            timeout,
            window: cfg.window.max(1),
        };
        let hello = match scorer.lines.recv_timeout(timeout) {
            Ok(line) => line,
            Err(RecvTimeoutError::Timeout) => {
                scorer.kill();
                return Err(OracleError::Handshake("no hello before timeout".into()));
            }
            Err(RecvTimeoutError::Disconnected) => {
                scorer.kill();
                return Err(OracleError::Handshake("scorer exited before hello".into()));
            }
        };
        match parse_hello(&hello) {
            Ok(props) => scorer.props = props,
            Err(e) => {
                scorer.kill();
                return Err(e);
            }
        }
        Ok(scorer)
    }

    pub(crate) fn props(&self) -> &BTreeSet<PropertyId> {
        &self.props
    }

    fn kill(&mut self) {
        self.dead = true;
        self.stdin = None;
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    fn send(&mut self, id: u64, smiles: &str, props: &BTreeSet<PropertyId>) -> bool {
        let Some(stdin) = self.stdin.as_mut() else {
            return false;
        };
        let letters: Vec<String> = letters(props).chars().map(String::from).collect();
        let req = json!({"id": id, "smiles": smiles, "props": letters});
        writeln!(stdin, "{req}").and_then(|_| stdin.flush()).is_ok()
    }

    pub(crate) fn score(
        &mut self,
        items: &[(String, BTreeSet<PropertyId>)],
    ) -> Result<Vec<Result<PropertyVector, ScoreError>>, OracleError> {
        let n = items.len();
        let mut results: Vec<Option<Result<PropertyVector, ScoreError>>> = vec![None; n];
        let mut pending: HashMap<u64, usize> = HashMap::new();
        let mut next = 0;
        let mut closed = self.dead;
        loop {
            while !closed && pending.len() < self.window && next < n {
                let (smiles, props) = &items[next];
                if let Some(&p) = props.iter().find(|p| !self.props.contains(p)) {
                    results[next] = Some(Err(ScoreError::MissingProperty(p)));
                    next += 1;
                    continue;
                }
                let id = self.next_id;
                self.next_id += 1;
                if !self.send(id, smiles, props) {
                    closed = true;
                    break;
                }
                pending.insert(id, next);
                next += 1;
            }
            if pending.is_empty() {
                break;
            }
            match self.lines.recv_timeout(self.timeout) {
                Ok(line) => {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let (id, reply) = match parse_reply(&line) {
                        Ok(r) => r,
                        Err(e) => {
                            self.kill();
                            return Err(e);
                        }
                    };
                    let Some(slot) = pending.remove(&id) else {
                        self.kill();
                        return Err(violation(format!("response for unknown or answered id {id}")));
                    };
                    let outcome = match reply {
                        Reply::Error(e) => Err(ScoreError::Scorer(e)),
                        Reply::Scores(map) => match collect_scores(&map, &items[slot].1) {
                            Ok(v) => v,
                            Err(e) => {
                                self.kill();
                                return Err(e);
                            }
                        },
                    };
                    results[slot] = Some(outcome);
                }
                Err(RecvTimeoutError::Disconnected) => {
                    for (_, slot) in pending.drain() {
                        results[slot] = Some(Err(ScoreError::ScorerExited));
                    }
                    self.kill();
                    closed = true;
                }
                Err(RecvTimeoutError::Timeout) => {
                    for (_, slot) in pending.drain() {
                        results[slot] = Some(Err(ScoreError::Timeout));
                    }
                    for r in results[next..].iter_mut().filter(|r| r.is_none()) {
                        *r = Some(Err(ScoreError::Timeout));
                    }
                    self.kill();
                    closed = true;
                }
            }
        }
        Ok(results
            .into_iter()
            .map(|r| r.unwrap_or(Err(ScoreError::ScorerExited)))
            .collect())
    }
}

fn collect_scores(
    map: &serde_json::Map<String, Value>,
    wanted: &BTreeSet<PropertyId>,
) -> Result<Result<PropertyVector, ScoreError>, OracleError> {
    let mut v = PropertyVector::new();
    for &p in wanted {
        match map.get(&p.to_string()) {
            None => return Ok(Err(ScoreError::Scorer(format!("response lacks property {p}")))),
            Some(x) => {
                let x = x
                    .as_f64()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| violation(format!("score for {p} is not a finite number")))?;
                v.insert(p, x);
            }
        }
    }
    Ok(Ok(v))
}

impl Drop for SubprocessScorer {
    fn drop(&mut self) {
        if !self.dead {
            self.kill();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hello_parsing() {
        let props = parse_hello(r#"{"hello":"scorer","version":1,"props":["B","D","H","M","P","Q"]}"#).unwrap();
        assert_eq!(letters(&props), "BDHMPQ");
        assert!(parse_hello(r#"{"hello":"scorer","version":2,"props":[]}"#).is_err());
        assert!(parse_hello(r#"{"id":0,"scores":{}}"#).is_err());
        assert!(parse_hello("hello").is_err());
    }

    #[test]
    fn reply_parsing() {
        assert!(matches!(parse_reply(r#"{"id":7,"error":"bad smiles"}"#), Ok((7, Reply::Error(_)))));
        assert!(matches!(parse_reply(r#"{"id":3,"scores":{"Q":0.5}}"#), Ok((3, Reply::Scores(_)))));
        assert!(parse_reply(r#"{"id":3}"#).is_err());
        assert!(parse_reply(r#"{"id":-1,"error":"x"}"#).is_err());
        assert!(parse_reply(r#"{"id":1,"scores":{},"error":"x"}"#).is_err());
    }
}
