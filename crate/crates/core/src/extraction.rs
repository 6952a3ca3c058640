//! Argument proposition extraction: one prompt per comment, structured JSON
//! output parsed into claims with their reasons.

use crate::gateway::{Gateway, GatewayError, GenerationRequest};
use crate::model::{assign_prop_ids, Comment, Proposition, PropositionDraft, Thread};
use crate::prompts::{PromptCatalog, PromptError};
use serde::Deserialize;
use thiserror::Error;

/// Extraction is deterministic: temperature 0, single sample.
pub const EXTRACTION_TEMPERATURE: f64 = 0.0;
const EXTRACTION_MAX_TOKENS: u32 = 1024;

/// Marker a backend may emit instead of JSON when a comment carries no
/// argument.
const NO_ARGUMENTS_MARKER: &str = "no arguments found";

const REPAIR_SUFFIX: &str = "\n\nYour previous reply could not be parsed. Reply again with \
only the JSON object described above and no other text.";

/// Parsed shape of one extraction response.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExtractionOutput {
    pub arguments: Vec<ExtractedArgument>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedArgument {
    pub claim: String,
    pub reasons: Vec<String>,
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("backend failure while extracting comment '{comment_id}': {source}")]
    Gateway {
        comment_id: String,
        #[source]
        source: GatewayError,
    },
    #[error("unparseable extraction output: {raw:?}")]
    Unparseable { raw: String },
}

// Wire shapes. Unknown fields (warrants in particular) are dropped by serde.
#[derive(Deserialize)]
struct WireOutput {
    arguments: Vec<WireArgument>,
}

#[derive(Deserialize)]
struct WireArgument {
    claim: String,
    #[serde(default)]
    reasons: Vec<String>,
}

/// Renders the extraction prompt for one comment.
pub fn build_extraction_prompt(catalog: &PromptCatalog, comment: &Comment, topic: &str) -> String {
    catalog.render(
        "arg_extraction",
        &[("topic", topic), ("comment", &comment.text)],
    )
}

/// Parses a raw extraction response. The JSON region may be wrapped in
/// prose; any warrant fields are dropped; empty claims and empty reasons are
/// filtered out.
pub fn parse_extraction_output(text: &str) -> Result<ExtractionOutput, ExtractError> {
    let parsed: Option<WireOutput> = extract_json_region(text)
        .and_then(|region| serde_json::from_str::<WireOutput>(region).ok())
        .or_else(|| {
            // Bare array form: [{"claim": ..., "reasons": [...]}].
            extract_json_region(text)
                .and_then(|region| serde_json::from_str::<Vec<WireArgument>>(region).ok())
                .map(|arguments| WireOutput { arguments })
        });

    let wire = match parsed {
        Some(w) => w,
        None if text.to_lowercase().contains(NO_ARGUMENTS_MARKER) => {
            return Ok(ExtractionOutput::default())
        }
        None => return Err(ExtractError::Unparseable { raw: text.to_string() }),
    };

    let arguments = wire
        .arguments
        .into_iter()
        .filter_map(|a| {
            let claim = a.claim.trim().to_string();
            if claim.is_empty() {
                return None;
            }
            let reasons = a
                .reasons
                .into_iter()
                .map(|r| r.trim().to_string())
                .filter(|r| !r.is_empty())
                .collect();
            Some(ExtractedArgument { claim, reasons })
        })
        .collect();
    Ok(ExtractionOutput { arguments })
}

/// Finds the outermost JSON object or array in a response that may be
/// wrapped in prose or a code fence.
fn extract_json_region(text: &str) -> Option<&str> {
    let start = text.find(['{', '['])?;
    let bytes = text.as_bytes();
    let open = bytes[start];
    let close = if open == b'{' { b'}' } else { b']' };
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (offset, &b) in bytes[start..].iter().enumerate() {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            _ if b == open => depth += 1,
            _ if b == close => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + offset + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

/// Extracts propositions for a whole thread: one backend call per comment,
/// flattened in comment order, ids assigned sequentially.
///
/// A comment whose output cannot be parsed gets one repair reprompt; if that
/// also fails the comment is recorded as argument-free with a warning rather
/// than failing the thread. Backend failures abort with the comment id.
pub fn extract_propositions(
    gateway: &Gateway,
    catalog: &PromptCatalog,
    thread: &Thread,
) -> Result<Vec<Proposition>, ExtractError> {
    let mut drafts = Vec::new();
    for comment in &thread.comments {
        let output = extract_comment(gateway, catalog, comment, &thread.topic)?;
        drafts.extend(output.arguments.into_iter().map(|a| PropositionDraft {
            source_comment_id: comment.comment_id.clone(),
            claim: a.claim,
            reasons: a.reasons,
        }));
    }
    Ok(assign_prop_ids(drafts))
}

fn extract_comment(
    gateway: &Gateway,
    catalog: &PromptCatalog,
    comment: &Comment,
    topic: &str,
) -> Result<ExtractionOutput, ExtractError> {
    let prompt = build_extraction_prompt(catalog, comment, topic);
    let respond = |p: &str| -> Result<String, ExtractError> {
        let req = GenerationRequest::new(p, EXTRACTION_TEMPERATURE, EXTRACTION_MAX_TOKENS);
        gateway
            .complete(&req)
            .map(|r| r.text)
            .map_err(|source| ExtractError::Gateway {
                comment_id: comment.comment_id.clone(),
                source,
            })
    };

    let text = respond(&prompt)?;
    match parse_extraction_output(&text) {
        Ok(output) => Ok(output),
        Err(_) => {
            let repair_prompt = format!("{prompt}{REPAIR_SUFFIX}");
            let repaired = respond(&repair_prompt)?;
            match parse_extraction_output(&repaired) {
                Ok(output) => Ok(output),
                Err(_) => {
                    log::warn!(
                        "extraction output for comment '{}' unparseable after repair; \
                         treating the comment as argument-free",
                        comment.comment_id
                    );
                    Ok(ExtractionOutput::default())
                }
            }
        }
    }
}

/// Repair prompt for a given extraction prompt; exposed so transcripts can
/// script the repair path.
pub fn repair_prompt(prompt: &str) -> String {
    format!("{prompt}{REPAIR_SUFFIX}")
}
