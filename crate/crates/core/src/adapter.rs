//! JSON-over-process adapter used for every external model.
//!
//! Each call spawns the configured program, writes one JSON request line to
//! its stdin and parses a single JSON document from its stdout.

use std::io::Write;
use std::process::{Command, Stdio};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonProcess {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
}

impl JsonProcess {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        JsonProcess {
            program: program.into(),
            args,
        }
    }

    pub fn call<Req: Serialize, Resp: DeserializeOwned>(&self, request: &Req) -> Result<Resp> {
        let mut line = serde_json::to_vec(request)?;
        line.push(b'\n');
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Adapter(format!("cannot start {}: {e}", self.program)))?;
        if let Some(mut stdin) = child.stdin.take() {
            // A process that exits without reading is reported via its status.
            let _ = stdin.write_all(&line);
        }
        let output = child
            .wait_with_output()
            .map_err(|e| Error::Adapter(format!("{}: {e}", self.program)))?;
        if !output.status.success() {
            return Err(Error::Adapter(format!(
                "{} exited with {}: {}",
                self.program,
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        serde_json::from_slice(&output.stdout)
            .map_err(|e| Error::Adapter(format!("{}: malformed response: {e}", self.program)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Ping {
        sentence: &'static str,
    }

    #[derive(Deserialize)]
    struct Pong {
        paraphrases: Vec<String>,
    }

    #[test]
    fn round_trip_through_shell() {
        let adapter = JsonProcess::new(
            "sh",
            vec!["-c".into(), r#"read line; echo '{"paraphrases": ["ok"]}'"#.into()],
        );
        let resp: Pong = adapter.call(&Ping { sentence: "x" }).unwrap();
        assert_eq!(resp.paraphrases, vec!["ok"]);
    }

    #[test]
    fn failures_are_adapter_errors() {
        let missing = JsonProcess::new("/nonexistent/adapter", vec![]);
        assert!(matches!(missing.call::<_, Pong>(&Ping { sentence: "x" }), Err(Error::Adapter(_))));
        let failing = JsonProcess::new("sh", vec!["-c".into(), "exit 3".into()]);
        assert!(matches!(failing.call::<_, Pong>(&Ping { sentence: "x" }), Err(Error::Adapter(_))));
        let garbage = JsonProcess::new("sh", vec!["-c".into(), "echo nope".into()]);
        assert!(matches!(garbage.call::<_, Pong>(&Ping { sentence: "x" }), Err(Error::Adapter(_))));
    }
}
