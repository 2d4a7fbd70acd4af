//! Feed sources behind a child process speaking line-delimited JSON.
//!
//! The auditor writes one request per line to the child's stdin,
//! `{"id": "...", "payload": ..., "m": 30}`, and reads one reply per line from
//! its stdout, `{"id": "...", "items": [...]}`.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::audit::{AuditInput, FeedSource};
use crate::error::{Error, Result};
use crate::family::Feed;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Serialize, Deserialize)]
pub struct Request {
    pub id: String,
    pub payload: Box<RawValue>,
    pub m: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Response {
    pub id: String,
    pub items: Vec<f64>,
}

pub struct SubprocessSource {
    name: String,
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    m: usize,
}

impl SubprocessSource {
    /// Launches `command[0]` with the remaining elements as arguments.
    pub fn spawn(name: impl Into<String>, command: &[String], m: usize, timeout: Duration) -> Result<Self> {
        let name = name.into();
        let (program, args) = command
            .split_first()
            .ok_or_else(|| Error::Config(format!("source `{name}` has an empty command")))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Config(format!("cannot launch source `{name}` ({program}): {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            name,
            child,
            stdin,
            lines,
            timeout,
            m,
        })
    }

    fn exit_message(&mut self) -> String {
        match self.child.wait() {
            Ok(status) if !status.success() => format!("process exited with {status}"),
            Ok(_) => "process closed its output".to_owned(),
            Err(e) => format!("process lost: {e}"),
        }
    }
}

impl FeedSource for SubprocessSource {
    fn name(&self) -> &str {
        &self.name
    }

    fn query(&mut self, input: &AuditInput) -> std::result::Result<Feed, String> {
        let request = Request {
            id: input.id.clone(),
            payload: input.payload.clone(),
            m: self.m,
        };
        let line = serde_json::to_string(&request).map_err(|e| e.to_string())?;
        let stdin = self.stdin.as_mut().ok_or("stdin already closed")?;
        if let Err(e) = writeln!(stdin, "{line}").and_then(|()| stdin.flush()) {
            return Err(format!("write failed ({e}); {}", self.exit_message()));
        }
        let reply = match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => return Err(format!("read failed: {e}")),
            Err(RecvTimeoutError::Timeout) => {
                return Err(format!("no reply within {:?}", self.timeout));
            }
            Err(RecvTimeoutError::Disconnected) => return Err(self.exit_message()),
        };
        let response: Response = serde_json::from_str(&reply).map_err(|e| format!("malformed reply: {e}"))?;
        if response.id != input.id {
            return Err(format!("reply for `{}` while waiting for `{}`", response.id, input.id));
        }
        Ok(Feed::new(response.items))
    }
}

impl Drop for SubprocessSource {
    fn drop(&mut self) {
        // Closing stdin lets a well-behaved child exit on its own.
        drop(self.stdin.take());
        for _ in 0..50 {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(10));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Child side of the protocol: answers requests read from `reader` until EOF.
/// `respond` receives each input and its requested feed length.
pub fn serve<R, W, F>(reader: R, mut writer: W, mut respond: F) -> Result<()>
where
    R: BufRead,
    W: Write,
    F: FnMut(&AuditInput, usize) -> std::result::Result<Feed, String>,
{
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: Request = serde_json::from_str(&line).map_err(|e| Error::Config(format!("bad request: {e}")))?;
        let input = AuditInput {
            id: request.id,
            payload: request.payload,
        };
        let feed = respond(&input, request.m).map_err(|message| Error::Source {
            source_name: "serve".into(),
            input: input.id.clone(),
            message,
        })?;
        let response = Response {
            id: input.id,
            items: feed.into_items(),
        };
        let text = serde_json::to_string(&response).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(writer, "{text}")?;
        writer.flush()?;
    }
    Ok(())
}
