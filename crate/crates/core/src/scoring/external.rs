//! Client side of the external scorer protocol.
//!
//! The backend speaks JSON Lines. Its first line is the handshake
//! `{"protocol": "lexidot-scorer/1"}`; afterwards every request
//! `{"id": n, "pairs": [{"context": .., "gloss": ..}]}` is answered by exactly
//! one `{"id": n, "scores": [..]}` carrying one score per pair. A session is a
//! strictly serial channel.

use std::io::{self, BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{BackendError, Error, Result};
use crate::pairs::ContextGlossPair;

use super::ScoreVector;

pub const PROTOCOL: &str = "lexidot-scorer/1";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Serialize, Deserialize)]
pub struct Handshake {
    pub protocol: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WirePair<'a> {
    pub context: &'a str,
    pub gloss: &'a str,
}

#[derive(Debug, Serialize)]
pub struct Request<'a> {
    pub id: u64,
    pub pairs: Vec<WirePair<'a>>,
}

#[derive(Debug, Deserialize)]
pub struct Response {
    pub id: Option<u64>,
    #[serde(default)]
    pub scores: Option<Vec<f64>>,
    #[serde(default)]
    pub error: Option<String>,
}

pub struct ExternalSession {
    writer: Box<dyn Write + Send>,
    lines: Receiver<io::Result<String>>,
    next_id: u64,
    timeout: Duration,
    poisoned: bool,
    child: Option<Child>,
}

impl std::fmt::Debug for ExternalSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalSession")
            .field("next_id", &self.next_id)
            .field("timeout", &self.timeout)
            .field("poisoned", &self.poisoned)
            .finish_non_exhaustive()
    }
}

fn spawn_reader<R: BufRead + Send + 'static>(reader: R) -> Receiver<io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in reader.lines() {
            let stop = line.is_err();
            if tx.send(line).is_err() || stop {
                break;
            }
        }
    });
    rx
}

impl ExternalSession {
    /// Wraps an already-connected byte stream and performs the handshake.
    pub fn from_streams<R, W>(reader: R, writer: W, timeout: Duration) -> Result<Self>
    where
        R: BufRead + Send + 'static,
        W: Write + Send + 'static,
    {
        let mut session = ExternalSession {
            writer: Box::new(writer),
            lines: spawn_reader(reader),
            next_id: 0,
            timeout,
            poisoned: false,
            child: None,
        };
        session.handshake()?;
        Ok(session)
    }

    /// Starts `program args..` and talks to it over stdin/stdout.
    pub fn spawn(program: &str, args: &[&str], timeout: Duration) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| BackendError::Handshake(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut session = ExternalSession {
            writer: Box::new(stdin),
            lines: spawn_reader(BufReader::new(stdout)),
            next_id: 0,
            timeout,
            poisoned: false,
            child: Some(child),
        };
        session.handshake()?;
        Ok(session)
    }

    /// Splits a whitespace-separated command line and spawns it.
    pub fn spawn_command_line(line: &str, timeout: Duration) -> Result<Self> {
        let mut parts = line.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| BackendError::Handshake("empty external backend command".into()))?;
        let args: Vec<&str> = parts.collect();
        Self::spawn(program, &args, timeout)
    }

    fn next_line(&mut self) -> std::result::Result<String, BackendError> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(BackendError::Protocol(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(BackendError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(BackendError::Closed),
        }
    }

    fn handshake(&mut self) -> Result<()> {
        let line = self.next_line().map_err(|e| BackendError::Handshake(e.to_string()))?;
        let hs: Handshake = serde_json::from_str(line.trim())
            .map_err(|e| BackendError::Handshake(format!("bad handshake line `{}`: {e}", line.trim())))?;
        if hs.protocol != PROTOCOL {
            return Err(BackendError::Handshake(format!(
                "backend speaks `{}`, expected `{PROTOCOL}`",
                hs.protocol
            ))
            .into());
        }
        Ok(())
    }

    fn poison(&mut self, err: BackendError) -> Error {
        self.poisoned = true;
        err.into()
    }

    /// Sends one request and waits for its response.
    ///
    /// Failures that leave the stream out of step (timeouts, closed streams,
    /// unparseable lines, mismatched ids) make the session unusable; a score
    /// count mismatch or an error record does not.
    pub fn score(&mut self, pairs: &[ContextGlossPair]) -> Result<ScoreVector> {
        if self.poisoned {
            return Err(BackendError::Poisoned.into());
        }
        let id = self.next_id;
        self.next_id += 1;
        let request = Request {
            id,
            pairs: pairs
                .iter()
                .map(|p| WirePair {
                    context: &p.context,
                    gloss: &p.gloss,
                })
                .collect(),
        };
        let mut line = serde_json::to_string(&request).map_err(io::Error::from)?;
        line.push('\n');
        if let Err(e) = self
            .writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.flush())
        {
            return Err(self.poison(BackendError::Protocol(format!("write failed: {e}"))));
        }

        let reply = match self.next_line() {
            Ok(l) => l,
            Err(e) => return Err(self.poison(e)),
        };
        let response: Response = match serde_json::from_str(reply.trim()) {
            Ok(r) => r,
            Err(e) => {
                return Err(self.poison(BackendError::Protocol(format!("unparseable response: {e}"))))
            }
        };
        if response.id != Some(id) {
            return Err(self.poison(BackendError::Protocol(format!(
                "response id {:?} does not match request id {id}",
                response.id
            ))));
        }
        if let Some(msg) = response.error {
            return Err(BackendError::Protocol(format!("backend reported: {msg}")).into());
        }
        let scores = response
            .scores
            .ok_or_else(|| BackendError::Protocol("response has no scores".into()))?;
        if scores.len() != pairs.len() {
            return Err(BackendError::LengthMismatch {
                expected: pairs.len(),
                got: scores.len(),
            }
            .into());
        }
        ScoreVector::new(scores)
            .map_err(|e| BackendError::Protocol(e.to_string()).into())
    }
}

impl Drop for ExternalSession {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            // Closing stdin lets a well-behaved backend exit on its own.
            self.writer = Box::new(io::sink());
            for _ in 0..20 {
                if let Ok(Some(_)) = child.try_wait() {
                    return;
                }
                thread::sleep(Duration::from_millis(10));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}


#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;

    fn pairs(n: usize) -> Vec<ContextGlossPair> {
        (0..n)
            .map(|i| ContextGlossPair {
                context: format!("上下文{i}，定義{i}"),
                gloss: format!("詞，定義{}", (i + 1) % n.max(1)),
                candidate_id: i.to_string(),
                label: false,
            })
            .collect()
    }

    fn session<F>(handler: F) -> Result<ExternalSession>
    where
        F: FnMut(&serde_json::Value) -> Option<String> + Send + 'static,
    {
        let (r, w) = serve(&handshake_line(), handler);
        ExternalSession::from_streams(r, w, Duration::from_secs(5))
    }

    #[test]
    fn echo_backend_scores_in_order() {
        let mut s = session(echo).unwrap();
        let mut ps = pairs(4);
        ps[2].gloss = "詞，定義2".into();
        let scores = s.score(&ps).unwrap();
        assert_eq!(scores.as_slice(), [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn bad_handshake_rejected() {
        let (r, w) = serve(r#"{"protocol": "other/9"}"#, echo);
        let err = ExternalSession::from_streams(r, w, Duration::from_secs(5)).unwrap_err();
        assert!(matches!(err, Error::Backend(BackendError::Handshake(_))), "{err}");
    }

    #[test]
    fn length_mismatch_keeps_session_usable() {
        let mut calls = 0;
        let mut s = session(move |v| {
            calls += 1;
            let n = v["pairs"].as_array().unwrap().len();
            let n = if calls == 1 { n - 1 } else { n };
            Some(serde_json::json!({"id": v["id"], "scores": vec![0.5; n]}).to_string())
        })
        .unwrap();
        let err = s.score(&pairs(4)).unwrap_err();
        assert!(matches!(
            err,
            Error::Backend(BackendError::LengthMismatch { expected: 4, got: 3 })
        ));
        assert_eq!(s.score(&pairs(4)).unwrap().len(), 4);
    }

    #[test]
    fn wrong_id_poisons() {
        let mut s = session(|_| Some(r#"{"id": 99, "scores": [1.0]}"#.into())).unwrap();
        assert!(matches!(s.score(&pairs(1)), Err(Error::Backend(BackendError::Protocol(_)))));
        assert!(matches!(s.score(&pairs(1)), Err(Error::Backend(BackendError::Poisoned))));
    }

    #[test]
    fn silence_times_out() {
        let (r, w) = serve(&handshake_line(), |_| None);
        let mut s = ExternalSession::from_streams(r, w, Duration::from_millis(100)).unwrap();
        assert!(matches!(s.score(&pairs(2)), Err(Error::Backend(BackendError::Timeout(_)))));
    }

    #[test]
    fn error_record_is_reported() {
        let mut s = session(|v| Some(serde_json::json!({"id": v["id"], "error": "bad"}).to_string())).unwrap();
        let err = s.score(&pairs(2)).unwrap_err();
        assert!(err.to_string().contains("bad"));
    }

    #[test]
    fn missing_program_is_handshake_error() {
        let err = ExternalSession::spawn("/nonexistent/scorer", &[], Duration::from_secs(1)).unwrap_err();
        assert!(matches!(err, Error::Backend(BackendError::Handshake(_))));
    }
}
