//! LLM judges for match and support annotation.

use super::matching::{MatchJudgment, MatchLabel, MatchLevel, SupportLabel};
use super::EvalError;
use crate::gateway::{Gateway, GenerationRequest};
use crate::prompts::PromptCatalog;

const JUDGE_TEMPERATURE: f64 = 0.0;
const JUDGE_MAX_TOKENS: u32 = 8;

fn level_name(level: MatchLevel) -> &'static str {
    match level {
        MatchLevel::Claim => "claim",
        MatchLevel::Reason => "reason",
        MatchLevel::ClaimReason => "claim-reason pair",
    }
}

fn ask(gateway: &Gateway, prompt: &str, sample_index: u32) -> Result<String, EvalError> {
    let req = GenerationRequest::new(prompt, JUDGE_TEMPERATURE, JUDGE_MAX_TOKENS)
        .with_sample_index(sample_index);
    Ok(gateway.complete(&req)?.text)
}

fn parse_label<T>(text: &str, labels: &[(&str, T)]) -> Option<T>
where
    T: Copy,
{
    let lower = text.to_lowercase();
    labels
        .iter()
        .find(|(name, _)| lower.contains(name))
        .map(|&(_, value)| value)
}

/// Judges whether a generated item matches an original item at one level.
/// One retry on an unparseable label, then an error.
pub fn judge_match(
    gateway: &Gateway,
    catalog: &PromptCatalog,
    generated_id: &str,
    generated: &str,
    original_id: &str,
    original: &str,
    level: MatchLevel,
) -> Result<MatchJudgment, EvalError> {
    let prompt = catalog.render(
        "judge_match",
        &[
            ("level", level_name(level)),
            ("generated", generated),
            ("original", original),
        ],
    );
    // "non-match" is checked before "match" since the former contains the
    // latter as a substring.
    let labels = [
        ("non-match", MatchLabel::NonMatch),
        ("non_match", MatchLabel::NonMatch),
        ("match", MatchLabel::Match),
    ];
    let text = ask(gateway, &prompt, 0)?;
    let label = match parse_label(&text, &labels) {
        Some(l) => l,
        None => {
            let retry = ask(gateway, &prompt, 1)?;
            parse_label(&retry, &labels).ok_or(EvalError::NoLabel { raw: retry })?
        }
    };
    Ok(MatchJudgment {
        generated_id: generated_id.to_string(),
        original_id: original_id.to_string(),
        level,
        label,
    })
}

/// Judges whether a reason supports or refutes its parent claim. One retry
/// on an unparseable label, then an error.
pub fn judge_support(
    gateway: &Gateway,
    catalog: &PromptCatalog,
    claim: &str,
    reason: &str,
) -> Result<SupportLabel, EvalError> {
    let prompt = catalog.render("judge_support", &[("claim", claim), ("reason", reason)]);
    let labels = [
        ("supports", SupportLabel::Supports),
        ("support", SupportLabel::Supports),
        ("refutes", SupportLabel::Refutes),
        ("refute", SupportLabel::Refutes),
    ];
    let text = ask(gateway, &prompt, 0)?;
    match parse_label(&text, &labels) {
        Some(l) => Ok(l),
        None => {
            let retry = ask(gateway, &prompt, 1)?;
            parse_label(&retry, &labels).ok_or(EvalError::NoLabel { raw: retry })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{ScriptedBackend, TranscriptEntry};
    use crate::prompts::test_catalog;

    #[test]
    fn match_judge_parses_labels() {
        let catalog = test_catalog();
        let prompt = catalog.render(
            "judge_match",
            &[("level", "claim"), ("generated", "g"), ("original", "o")],
        );
        let gateway = Gateway::new(Box::new(ScriptedBackend::from_entries(vec![
            TranscriptEntry { prompt, responses: vec!["match".into()] },
        ])));
        let judgment = judge_match(&gateway, &catalog, "g0", "g", "o0", "o", MatchLevel::Claim)
            .unwrap();
        assert_eq!(judgment.label, MatchLabel::Match);
    }

    #[test]
    fn non_match_is_not_mistaken_for_match() {
        let catalog = test_catalog();
        let prompt = catalog.render(
            "judge_match",
            &[("level", "reason"), ("generated", "g"), ("original", "o")],
        );
        let gateway = Gateway::new(Box::new(ScriptedBackend::from_entries(vec![
            TranscriptEntry { prompt, responses: vec!["Non-match".into()] },
        ])));
        let judgment = judge_match(&gateway, &catalog, "g0", "g", "o0", "o", MatchLevel::Reason)
            .unwrap();
        assert_eq!(judgment.label, MatchLabel::NonMatch);
    }

    #[test]
    fn support_judge_parses_refutes() {
        let catalog = test_catalog();
        let prompt = catalog.render("judge_support", &[("claim", "c"), ("reason", "r")]);
        let gateway = Gateway::new(Box::new(ScriptedBackend::from_entries(vec![
            TranscriptEntry { prompt, responses: vec!["refutes".into()] },
        ])));
        assert_eq!(
            judge_support(&gateway, &catalog, "c", "r").unwrap(),
            SupportLabel::Refutes
        );
    }

    #[test]
    fn garbage_label_errors_after_one_retry() {
        let catalog = test_catalog();
        let prompt = catalog.render("judge_support", &[("claim", "c"), ("reason", "r")]);
        let gateway = Gateway::new(Box::new(ScriptedBackend::from_entries(vec![
            TranscriptEntry {
                prompt,
                responses: vec!["banana".into(), "pear".into()],
            },
        ])));
        let err = judge_support(&gateway, &catalog, "c", "r").unwrap_err();
        assert!(matches!(err, EvalError::NoLabel { .. }));
        assert_eq!(gateway.backend_call_count(), 2);
    }

    #[test]
    fn garbage_then_valid_label_recovers() {
        let catalog = test_catalog();
        let prompt = catalog.render("judge_support", &[("claim", "c"), ("reason", "r")]);
        let gateway = Gateway::new(Box::new(ScriptedBackend::from_entries(vec![
            TranscriptEntry {
                prompt,
                responses: vec!["banana".into(), "supports".into()],
            },
        ])));
        assert_eq!(
            judge_support(&gateway, &catalog, "c", "r").unwrap(),
            SupportLabel::Supports
        );
    }
}
