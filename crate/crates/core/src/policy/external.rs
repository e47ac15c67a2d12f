//! Policies that run outside the engine process.
//!
//! Both bindings speak the same messages (see [`protocol`](super::protocol)):
//! the engine sends a `state` message and expects an `action` message back.
//!
//! * [`SubprocessPolicy`] keeps one child process alive for the whole run and
//!   exchanges newline-terminated JSON over its stdin and stdout. An `end`
//!   message is sent when the run finishes.
//! * [`FileExchangePolicy`] runs a command once per decision point. The state
//!   is written to `state.json` in the exchange directory, which is passed to
//!   the command in the `DVRP_EXCHANGE_DIR` environment variable; the command
//!   must leave its answer in `action.json`.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, ExitStatus, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use crate::domain::{Action, State};
use crate::policy::protocol::{decode_action, Message, MessageType};
use crate::policy::{Policy, PolicyError};
use crate::scenario::Scenario;

pub const EXCHANGE_DIR_VAR: &str = "DVRP_EXCHANGE_DIR";
pub const STATE_FILE: &str = "state.json";
pub const ACTION_FILE: &str = "action.json";

fn shell(command: &str) -> Command {
    let mut cmd = Command::new("sh");
    cmd.arg("-c").arg(command);
    cmd
}

fn wait_timeout(child: &mut Child, timeout: Duration) -> Result<Option<ExitStatus>, PolicyError> {
    let deadline = Instant::now() + timeout;
    loop {
        if let Some(status) = child.try_wait()? {
            return Ok(Some(status));
        }
        if Instant::now() >= deadline {
            return Ok(None);
        }
        thread::sleep(Duration::from_millis(2));
    }
}

pub struct SubprocessPolicy {
    command: String,
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl SubprocessPolicy {
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, PolicyError> {
        let mut child = shell(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        Ok(Self {
            command: command.to_owned(),
            child,
            stdin,
            lines,
            timeout,
        })
    }

    fn send(&mut self, msg: &Message) -> Result<(), PolicyError> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| PolicyError::Exited(format!("`{}`: stdin closed", self.command)))?;
        let mut line = msg.to_line();
        line.push('\n');
        if let Err(e) = stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush()) {
            return Err(self.exit_error().unwrap_or(PolicyError::Io(e)));
        }
        Ok(())
    }

    fn exit_error(&mut self) -> Option<PolicyError> {
        match wait_timeout(&mut self.child, Duration::from_millis(200)) {
            Ok(Some(status)) => Some(PolicyError::Exited(format!("`{}` exited with {status}", self.command))),
            _ => None,
        }
    }
}

impl Policy for SubprocessPolicy {
    fn decide(&mut self, state: &State, scenario: &Scenario) -> Result<Action, PolicyError> {
        self.send(&Message::state(state, scenario))?;
        loop {
            match self.lines.recv_timeout(self.timeout) {
                Ok(Ok(line)) if line.trim().is_empty() => continue,
                Ok(Ok(line)) => {
                    let data = Message::parse(&line)?.expect(MessageType::Action)?;
                    return Ok(decode_action(data, scenario)?);
                }
                Ok(Err(e)) => return Err(PolicyError::Io(e)),
                Err(RecvTimeoutError::Timeout) => return Err(PolicyError::Timeout(self.timeout)),
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(self.exit_error().unwrap_or_else(|| {
                        PolicyError::Exited(format!("`{}` closed its output", self.command))
                    }))
                }
            }
        }
    }

    fn finish(&mut self) -> Result<(), PolicyError> {
        if self.stdin.is_none() {
            return Ok(());
        }
        // A policy that already quit is not an error at this point.
        let _ = self.send(&Message::end());
        self.stdin = None;
        match wait_timeout(&mut self.child, self.timeout)? {
            Some(status) if status.success() => Ok(()),
            Some(status) => Err(PolicyError::Exited(format!("`{}` exited with {status}", self.command))),
            None => {
                let _ = self.child.kill();
                Err(PolicyError::Timeout(self.timeout))
            }
        }
    }
}

impl Drop for SubprocessPolicy {
    fn drop(&mut self) {
        self.stdin = None;
        if matches!(self.child.try_wait(), Ok(None)) {
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}

pub struct FileExchangePolicy {
    command: String,
    dir: PathBuf,
    timeout: Duration,
}

impl FileExchangePolicy {
    pub fn new(command: &str, dir: impl Into<PathBuf>, timeout: Duration) -> Result<Self, PolicyError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            command: command.to_owned(),
            dir,
            timeout,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl Policy for FileExchangePolicy {
    fn decide(&mut self, state: &State, scenario: &Scenario) -> Result<Action, PolicyError> {
        let action_path = self.dir.join(ACTION_FILE);
        match std::fs::remove_file(&action_path) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(e.into()),
            _ => {}
        }
        let mut line = Message::state(state, scenario).to_line();
        line.push('\n');
        std::fs::write(self.dir.join(STATE_FILE), line)?;

        let mut child = shell(&self.command)
            .env(EXCHANGE_DIR_VAR, &self.dir)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::inherit())
            .spawn()?;
        match wait_timeout(&mut child, self.timeout)? {
            Some(status) if status.success() => {}
            Some(status) => {
                return Err(PolicyError::Exited(format!("`{}` exited with {status}", self.command)));
            }
            None => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(PolicyError::Timeout(self.timeout));
            }
        }
        let text = std::fs::read_to_string(&action_path).map_err(|e| {
            PolicyError::Exited(format!("`{}` left no {ACTION_FILE}: {e}", self.command))
        })?;
        let data = Message::parse(&text)?.expect(MessageType::Action)?;
        Ok(decode_action(data, scenario)?)
    }
}
