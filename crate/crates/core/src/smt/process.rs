// SPDX-License-Identifier: Apache-2.0

//! A long-lived SMT-LIB2 solver process driven over stdin/stdout.
//!
//! Every query is sent as one batch ending in an `echo` marker, so the
//! reader always resynchronizes on the marker even after solver errors.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use super::render::symbol;
use super::sexp::value_pairs;
use super::{SmtError, SmtQuery, SmtResult, Status};

const MARKER: &str = "@@datasym-done";

/// Program and arguments, e.g. `z3 -in`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverCommand {
    pub program: String,
    pub args: Vec<String>,
}

impl SolverCommand {
    /// Splits on whitespace.
    pub fn parse(s: &str) -> Option<SolverCommand> {
        let mut parts = s.split_whitespace().map(str::to_string);
        Some(SolverCommand {
            program: parts.next()?,
            args: parts.collect(),
        })
    }

    pub fn z3() -> SolverCommand {
        SolverCommand::parse("z3 -in").unwrap()
    }
}

impl std::fmt::Display for SolverCommand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.program)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

pub struct SolverProcess {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    dead: bool,
}

impl SolverProcess {
    pub fn spawn(cmd: &SolverCommand) -> Result<SolverProcess, SmtError> {
        let mut child = Command::new(&cmd.program)
            .args(&cmd.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SmtError::Spawn {
                command: cmd.to_string(),
                message: e.to_string(),
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(SolverProcess {
            child,
            stdin,
            lines: rx,
            dead: false,
        })
    }

    pub fn is_dead(&self) -> bool {
        self.dead
    }

    fn kill(&mut self) {
        self.dead = true;
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    /// Runs one query. A timeout yields `Status::Timeout` and retires the
    /// process; crashes are errors and also retire it.
    pub fn run(&mut self, q: &SmtQuery, timeout: Duration) -> Result<SmtResult, SmtError> {
        let mut script = format!(
            "(reset)\n(set-option :produce-models true)\n(set-logic {})\n{}(check-sat)\n",
            q.logic, q.text
        );
        if !q.free_vars.is_empty() {
            let vars: Vec<String> = q.free_vars.iter().map(|v| symbol(v)).collect();
            script.push_str(&format!("(get-value ({}))\n", vars.join(" ")));
        }
        script.push_str(&format!("(echo \"{MARKER}\")\n"));
        if let Err(e) = self.stdin.write_all(script.as_bytes()).and_then(|_| self.stdin.flush()) {
            self.kill();
            return Err(SmtError::SolverCrash(e.to_string()));
        }
        let deadline = Instant::now() + timeout;
        let mut out = Vec::new();
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(left) {
                Ok(line) => {
                    if line.trim().trim_matches('"') == MARKER {
                        break;
                    }
                    out.push(line);
                }
                Err(RecvTimeoutError::Timeout) => {
                    self.kill();
                    return Ok(SmtResult::new(Status::Timeout));
                }
                Err(RecvTimeoutError::Disconnected) => {
                    self.kill();
                    return Err(SmtError::SolverCrash("solver closed its output".into()));
                }
            }
        }
        parse_output(q, &out)
    }
}

impl Drop for SolverProcess {
    fn drop(&mut self) {
        if !self.dead {
            let _ = self.stdin.write_all(b"(exit)\n");
            let _ = self.stdin.flush();
            self.kill();
        }
    }
}

fn parse_output(q: &SmtQuery, lines: &[String]) -> Result<SmtResult, SmtError> {
    let mut status = None;
    let mut rest = String::new();
    for line in lines {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match status {
            None => {
                if let Some(s) = Status::parse(t) {
                    status = Some(s);
                } else if t.starts_with("(error") {
                    return Err(SmtError::SolverError(t.to_string()));
                }
            }
            Some(_) => {
                if !t.starts_with("(error") {
                    rest.push_str(t);
                    rest.push(' ');
                }
            }
        }
    }
    let status = status.ok_or_else(|| SmtError::BadResponse(lines.join("\n")))?;
    if status != Status::Sat || q.free_vars.is_empty() {
        return Ok(SmtResult::new(status));
    }
    let pairs = value_pairs(&rest).ok_or_else(|| SmtError::BadResponse(rest.clone()))?;
    let model = q
        .free_vars
        .iter()
        .map(|v| {
            let key = symbol(v);
            pairs
                .iter()
                .find(|(k, _)| k == v || *k == key)
                .map(|(_, c)| (v.clone(), *c))
                .ok_or_else(|| SmtError::BadResponse(format!("no value for {v}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SmtResult::sat(model))
}
