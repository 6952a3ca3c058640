//! Thread-file ingestion: one JSON record per line, validated into threads.

use anyhow::{bail, Context, Result};
use argquant::model::{validate_thread, RawThread, Thread};
use std::path::Path;

/// Reads and validates a thread file. Lines must hold records of the form
/// `{thread_id?, topic, comments: [{comment_id?, author?, text}]}`. Records
/// missing a thread id get `"<domain>-<line number>"`.
pub fn ingest_dataset(path: &Path, domain: &str) -> Result<Vec<Thread>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read thread file {path:?}"))?;
    let mut threads = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut raw: RawThread = serde_json::from_str(line)
            .with_context(|| format!("{}:{line_no}: malformed thread record", path.display()))?;
        if raw.thread_id.is_none() {
            raw.thread_id = Some(format!("{domain}-{line_no}"));
        }
        let thread = validate_thread(raw)
            .with_context(|| format!("{}:{line_no}: invalid thread", path.display()))?;
        threads.push(thread);
    }
    if threads.is_empty() {
        bail!("thread file {path:?} holds no records");
    }
    Ok(threads)
}

/// Writes validated threads back out, one record per line.
pub fn write_threads(threads: &[Thread], path: &Path) -> Result<()> {
    let mut out = String::new();
    for thread in threads {
        out.push_str(&serde_json::to_string(thread)?);
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {path:?}"))
}
