//! A strict request/response conversation with an SMT-LIB 2 solver process.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, trace};

use super::emit::{declare, to_term};
use super::sexpr::{self, depth_change, Sexpr};
use super::{SmtError, SolverConfig, SolverModel};
use crate::bmc::{Formula, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckResult {
    Sat(SolverModel),
    Unsat,
}

impl CheckResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, CheckResult::Sat(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatAnswer {
    Sat,
    Unsat,
}

struct Process {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    stderr: Arc<Mutex<String>>,
}

impl Drop for Process {
    fn drop(&mut self) {
        let _ = writeln!(self.stdin, "(exit)");
        let _ = self.stdin.flush();
        // Give a well-behaved solver a moment before killing it.
        for _ in 0..20 {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(1));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// An external solver process. Declarations are tracked per assertion level
/// so each variable is declared exactly once in the live scope.
pub struct SolverSession {
    config: SolverConfig,
    process: Option<Process>,
    /// `declared[d]` holds the variables declared at stack depth `d`.
    declared: Vec<BTreeSet<Var>>,
    deadline: Option<Instant>,
    checks: u64,
    solve_time: Duration,
}

impl std::fmt::Debug for SolverSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolverSession")
            .field("config", &self.config)
            .field("depth", &self.depth())
            .field("checks", &self.checks)
            .finish()
    }
}

fn spawn(config: &SolverConfig) -> Result<Process, SmtError> {
    let (program, args) = config
        .command
        .split_first()
        .ok_or_else(|| SmtError::Spawn {
            command: String::new(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty solver command"),
        })?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| SmtError::Spawn {
            command: config.command.join(" "),
            source,
        })?;
    let stdin = child.stdin.take().expect("piped stdin");
    let stdout = child.stdout.take().expect("piped stdout");
    let mut err_pipe = child.stderr.take().expect("piped stderr");

    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            match line {
                Ok(l) => {
                    if tx.send(l).is_err() {
                        break;
                    }
                }
                Err(_) => break,
            }
        }
    });
    let stderr = Arc::new(Mutex::new(String::new()));
    let sink = stderr.clone();
    thread::spawn(move || {
        let mut buf = [0u8; 4096];
        while let Ok(n) = err_pipe.read(&mut buf) {
            if n == 0 {
                break;
            }
            if let Ok(mut s) = sink.lock() {
                s.push_str(&String::from_utf8_lossy(&buf[..n]));
            }
        }
    });
    Ok(Process {
        child,
        stdin,
        lines: rx,
        stderr,
    })
}

impl SolverSession {
    pub fn spawn(config: SolverConfig) -> Result<Self, SmtError> {
        let mut s = SolverSession {
            process: None,
            config,
            declared: vec![BTreeSet::new()],
            deadline: None,
            checks: 0,
            solve_time: Duration::ZERO,
        };
        s.restart()?;
        Ok(s)
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Current assertion stack depth.
    pub fn depth(&self) -> usize {
        self.declared.len() - 1
    }

    /// Number of `check-sat` calls answered so far.
    pub fn check_count(&self) -> u64 {
        self.checks
    }

    /// Wall-clock time spent waiting for `check-sat` answers.
    pub fn solve_time(&self) -> Duration {
        self.solve_time
    }

    /// Checks give up at this instant even if the per-check timeout has not
    /// elapsed.
    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    /// Everything the solver wrote to stderr so far.
    pub fn stderr(&self) -> String {
        self.process
            .as_ref()
            .and_then(|p| p.stderr.lock().ok().map(|s| s.clone()))
            .unwrap_or_default()
    }

    /// Kills the current process (if any) and starts a fresh one.
    pub fn restart(&mut self) -> Result<(), SmtError> {
        self.process = None;
        self.declared = vec![BTreeSet::new()];
        self.process = Some(spawn(&self.config)?);
        self.batch(&[
            "(set-option :print-success true)".to_string(),
            "(set-option :produce-models true)".to_string(),
            "(set-logic QF_LIA)".to_string(),
        ])
    }

    /// Drops all assertions and declarations. Restarts the process when the
    /// solver is not alive any more.
    pub fn reset(&mut self) -> Result<(), SmtError> {
        if self.process.is_none() {
            return self.restart();
        }
        self.declared = vec![BTreeSet::new()];
        let res = self.batch(&[
            "(reset)".to_string(),
            "(set-option :print-success true)".to_string(),
            "(set-option :produce-models true)".to_string(),
            "(set-logic QF_LIA)".to_string(),
        ]);
        if res.is_err() {
            return self.restart();
        }
        Ok(())
    }

    fn process(&mut self) -> Result<&mut Process, SmtError> {
        self.process.as_mut().ok_or_else(|| SmtError::Crashed {
            stderr: "solver process was terminated".into(),
        })
    }

    fn crashed(&mut self) -> SmtError {
        let stderr = self.stderr();
        self.process = None;
        SmtError::Crashed { stderr }
    }

    fn send(&mut self, text: &str) -> Result<(), SmtError> {
        trace!("smt> {}", text.chars().take(200).collect::<String>());
        let p = self.process()?;
        let ok = p.stdin.write_all(text.as_bytes()).is_ok()
            && p.stdin.write_all(b"\n").is_ok()
            && p.stdin.flush().is_ok();
        if ok {
            Ok(())
        } else {
            Err(self.crashed())
        }
    }

    /// Reads one complete response, waiting at most until `until`.
    fn read_response(&mut self, until: Instant) -> Result<String, SmtError> {
        let mut text = String::new();
        let mut depth = 0i64;
        loop {
            let wait = until.saturating_duration_since(Instant::now());
            let p = self.process()?;
            match p.lines.recv_timeout(wait) {
                Ok(line) => {
                    if text.is_empty() && line.trim().is_empty() {
                        continue;
                    }
                    depth += depth_change(&line);
                    text.push_str(&line);
                    text.push('\n');
                    if depth <= 0 {
                        trace!("smt< {}", text.trim_end());
                        return Ok(text);
                    }
                }
                Err(RecvTimeoutError::Timeout) => {
                    let stderr = self.stderr();
                    // The process may be mid-answer; it cannot be reused.
                    self.process = None;
                    return Err(SmtError::Timeout {
                        seconds: self.config.timeout.as_secs_f64(),
                        stderr,
                    });
                }
                Err(RecvTimeoutError::Disconnected) => return Err(self.crashed()),
            }
        }
    }

    fn command_deadline(&self) -> Instant {
        let limit = Instant::now() + self.config.timeout;
        match self.deadline {
            Some(d) if d < limit => d,
            _ => limit,
        }
    }

    fn expect_success(&mut self, response: &str) -> Result<(), SmtError> {
        match response.trim() {
            "success" => Ok(()),
            other => Err(solver_error(other)),
        }
    }

    /// Sends commands that answer `success`, then collects all answers.
    fn batch(&mut self, commands: &[String]) -> Result<(), SmtError> {
        if commands.is_empty() {
            return Ok(());
        }
        let mut text = commands.join("\n");
        text.shrink_to_fit();
        self.send(&text)?;
        let until = self.command_deadline();
        let mut first_err = None;
        for _ in commands {
            let r = self.read_response(until)?;
            if let Err(e) = self.expect_success(&r) {
                first_err.get_or_insert(e);
            }
        }
        first_err.map_or(Ok(()), Err)
    }

    /// Declares the variables not yet visible in the current scope.
    pub fn declare<I: IntoIterator<Item = Var>>(&mut self, vars: I) -> Result<(), SmtError> {
        let fresh: Vec<Var> = vars
            .into_iter()
            .filter(|v| !self.declared.iter().any(|level| level.contains(v)))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let cmds: Vec<String> = fresh.iter().map(|&v| declare(v)).collect();
        self.batch(&cmds)?;
        self.declared.last_mut().expect("base level").extend(fresh);
        Ok(())
    }

    /// Asserts `f` in the current scope, declaring its variables first.
    pub fn assert_formula(&mut self, f: &Formula) -> Result<(), SmtError> {
        self.declare(f.vars())?;
        self.assert_term(&to_term(f))
    }

    /// Asserts a raw SMT-LIB term.
    pub fn assert_term(&mut self, term: &str) -> Result<(), SmtError> {
        self.batch(&[format!("(assert {term})")])
    }

    pub fn push(&mut self) -> Result<(), SmtError> {
        self.batch(&["(push 1)".to_string()])?;
        self.declared.push(BTreeSet::new());
        Ok(())
    }

    pub fn pop(&mut self) -> Result<(), SmtError> {
        if self.depth() == 0 {
            return Err(SmtError::Protocol("pop without matching push".into()));
        }
        self.batch(&["(pop 1)".to_string()])?;
        self.declared.pop();
        Ok(())
    }

    /// `(check-sat)` on the current assertion stack.
    pub fn check(&mut self) -> Result<SatAnswer, SmtError> {
        self.send("(check-sat)")?;
        let start = Instant::now();
        let until = self.command_deadline();
        let response = self.read_response(until);
        self.solve_time += start.elapsed();
        self.checks += 1;
        let response = response?;
        match response.trim() {
            "sat" => Ok(SatAnswer::Sat),
            "unsat" => Ok(SatAnswer::Unsat),
            "unknown" => {
                let reason = self.reason_unknown().unwrap_or_else(|_| "unknown".into());
                if reason.contains("timeout") || reason.contains("canceled") {
                    Err(SmtError::Timeout {
                        seconds: self.config.timeout.as_secs_f64(),
                        stderr: self.stderr(),
                    })
                } else {
                    Err(SmtError::Unknown { reason })
                }
            }
            other => Err(solver_error(other)),
        }
    }

    fn reason_unknown(&mut self) -> Result<String, SmtError> {
        self.send("(get-info :reason-unknown)")?;
        let until = self.command_deadline();
        Ok(self.read_response(until)?.trim().to_string())
    }

    /// Values of `vars` in the model of the last satisfiable check.
    pub fn model(&mut self, vars: &BTreeSet<Var>) -> Result<SolverModel, SmtError> {
        self.send("(get-model)")?;
        let until = self.command_deadline();
        let text = self.read_response(until)?;
        let mut model = parse_model(&text)?;
        let missing: Vec<Var> = vars
            .iter()
            .copied()
            .filter(|v| model.value(*v).is_none())
            .collect();
        if !missing.is_empty() {
            // Solvers may omit unconstrained variables from get-model.
            let names: Vec<String> = missing.iter().map(Var::to_string).collect();
            self.send(&format!("(get-value ({}))", names.join(" ")))?;
            let until = self.command_deadline();
            let text = self.read_response(until)?;
            parse_values(&text, &mut model)?;
        }
        for v in vars {
            if model.value(*v).is_none() {
                return Err(SmtError::Decode(format!("model has no value for {v}")));
            }
        }
        Ok(model)
    }

    /// Checks `f` in a temporary scope; the session is left as it was.
    pub fn check_formula(&mut self, f: &Formula) -> Result<CheckResult, SmtError> {
        let vars = f.vars();
        self.push()?;
        let outcome = (|| {
            self.assert_formula(f)?;
            match self.check()? {
                SatAnswer::Sat => Ok(CheckResult::Sat(self.model(&vars)?)),
                SatAnswer::Unsat => Ok(CheckResult::Unsat),
            }
        })();
        if self.process.is_some() {
            self.pop()?;
        }
        if let Ok(r) = &outcome {
            debug!("check ({} vars): {}", vars.len(), if r.is_sat() { "sat" } else { "unsat" });
        }
        outcome
    }
}

fn solver_error(response: &str) -> SmtError {
    if let Ok(Sexpr::List(items)) = sexpr::parse(response) {
        if let [Sexpr::Atom(head), Sexpr::Atom(msg)] = items.as_slice() {
            if head == "error" {
                return SmtError::Solver {
                    message: msg.trim_matches('"').to_string(),
                };
            }
        }
    }
    SmtError::Protocol(format!("unexpected solver response: {response}"))
}

/// Parses a `(get-model)` answer: a list of `define-fun`s, optionally wrapped
/// in `(model ...)`.
pub fn parse_model(text: &str) -> Result<SolverModel, SmtError> {
    let e = sexpr::parse(text).map_err(SmtError::Decode)?;
    let mut items = e
        .as_list()
        .ok_or_else(|| solver_error(text.trim()))?;
    if let Some(Sexpr::Atom(head)) = items.first() {
        if head == "model" {
            items = &items[1..];
        } else if head == "error" {
            return Err(solver_error(text.trim()));
        }
    }
    let mut model = SolverModel::default();
    for item in items {
        let parts = item
            .as_list()
            .ok_or_else(|| SmtError::Decode(format!("unexpected model entry in {text}")))?;
        match parts {
            [Sexpr::Atom(kw), Sexpr::Atom(name), Sexpr::List(args), Sexpr::Atom(sort), value]
                if kw == "define-fun" && args.is_empty() && sort == "Int" =>
            {
                let v = value
                    .as_int()
                    .ok_or_else(|| SmtError::Decode(format!("non-integer value for {name}")))?;
                model.insert(name.trim_matches('|'), v);
            }
            // Other definitions (functions, non-Int sorts) are not ours.
            _ => {}
        }
    }
    Ok(model)
}

/// Parses a `(get-value ...)` answer into `model`.
fn parse_values(text: &str, model: &mut SolverModel) -> Result<(), SmtError> {
    let e = sexpr::parse(text).map_err(SmtError::Decode)?;
    let items = e.as_list().ok_or_else(|| solver_error(text.trim()))?;
    for item in items {
        match item.as_list() {
            Some([Sexpr::Atom(name), value]) => {
                let v = value
                    .as_int()
                    .ok_or_else(|| SmtError::Decode(format!("non-integer value for {name}")))?;
                model.insert(name.trim_matches('|'), v);
            }
            _ => return Err(solver_error(text.trim())),
        }
    }
    Ok(())
}
