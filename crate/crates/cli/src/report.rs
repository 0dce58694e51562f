//! Uniform JSON report envelope for every subcommand.
//!
//! Stdout carries exactly one JSON object per run:
//! `{ "command": ..., "result": ..., "wall_time_ms": ... }`.
//! The `result` subtree is a pure function of the inputs (and explicit
//! seeds), so two runs with the same arguments produce byte-identical
//! `result`s; only `wall_time_ms` varies.

use std::time::Instant;

pub struct Report {
    command: String,
    started: Instant,
}

impl Report {
    pub fn start(command: &str) -> Self {
        Report { command: command.into(), started: Instant::now() }
    }

    /// Print the envelope to stdout and pass the exit code through.
    pub fn finish(self, result: serde_json::Value, exit_code: i32) -> i32 {
        let envelope = serde_json::json!({
            "command": self.command,
            "result": result,
            "wall_time_ms": self.started.elapsed().as_secs_f64() * 1e3,
        });
        match serde_json::to_string_pretty(&envelope) {
            Ok(text) => {
                println!("{text}");
                exit_code
            }
            Err(e) => {
                eprintln!("error: cannot serialize report: {e}");
                1
            }
        }
    }
}
