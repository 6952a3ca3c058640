//! LLM-based entailment scoring.
//!
//! A score is estimated by sampling the scoring prompt several times at
//! temperature 1 and taking the frequency-weighted sum of the sampled 1-5
//! values, which equals the sample mean. Directed scores can be averaged
//! into a bidirectional score, and a one-to-many batch mode scores one
//! source against an indexed target list per prompt.

use crate::gateway::{Gateway, GatewayError, GenerationRequest};
use crate::prompts::{PromptCatalog, PromptError};
use thiserror::Error;

/// Score scale: 5 is the strongest support, 1 contradiction.
pub struct ScoreScale;

impl ScoreScale {
    pub const MIN: i32 = 1;
    pub const MAX: i32 = 5;
}

/// Temperature mandated for sampled scoring.
pub const SCORING_TEMPERATURE: f64 = 1.0;
/// Default number of samples per directed score.
pub const DEFAULT_N_SAMPLES: u32 = 5;

const PAIRWISE_MAX_TOKENS: u32 = 16;
const BATCH_MAX_TOKENS: u32 = 512;

/// A judged (premise, hypothesis) pair with its sampled raw scores.
#[derive(Debug, Clone, PartialEq)]
pub struct EntailmentJudgment {
    pub premise: String,
    pub hypothesis: String,
    pub raw_samples: Vec<i32>,
    pub aggregate: f64,
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("no score token in range 1-5 found in response: {raw:?}")]
    NoScoreToken { raw: String },
    #[error("empty sample list")]
    EmptySamples,
    #[error("score {0} out of the 1-5 range")]
    OutOfRange(f64),
    #[error("batch response missing a score for target {target}")]
    MissingBatchScore { target: usize },
}

/// Extracts the first integer in 1-5 from a sampled response. Prose and
/// whitespace around the number are tolerated; out-of-range integers are
/// skipped.
pub fn parse_score_token(text: &str) -> Result<i32, ScoreError> {
    for token in integer_tokens(text) {
        if (ScoreScale::MIN..=ScoreScale::MAX).contains(&token) {
            return Ok(token);
        }
    }
    Err(ScoreError::NoScoreToken { raw: text.to_string() })
}

fn integer_tokens(text: &str) -> impl Iterator<Item = i32> + '_ {
    text.split(|c: char| !c.is_ascii_digit())
        .filter(|run| !run.is_empty())
        .filter_map(|run| run.parse::<i32>().ok())
}

/// Frequency-weighted sum of the sampled scores: sum of p(s) * s over the
/// distinct sampled values, which equals the arithmetic mean.
pub fn aggregate_score(samples: &[i32]) -> Result<f64, ScoreError> {
    if samples.is_empty() {
        return Err(ScoreError::EmptySamples);
    }
    let n = samples.len() as f64;
    let mut total = 0.0;
    for s in ScoreScale::MIN..=ScoreScale::MAX {
        let count = samples.iter().filter(|&&v| v == s).count();
        if count > 0 {
            total += (count as f64 / n) * s as f64;
        }
    }
    Ok(total)
}

/// Maps a raw 1-5 score onto [0, 1].
pub fn normalize(score: f64) -> Result<f64, ScoreError> {
    if !(ScoreScale::MIN as f64..=ScoreScale::MAX as f64).contains(&score) {
        return Err(ScoreError::OutOfRange(score));
    }
    Ok((score - ScoreScale::MIN as f64) / (ScoreScale::MAX - ScoreScale::MIN) as f64)
}

/// Raw directed/bidirectional scores for the clustering stage. Implemented
/// by [`ScoringEngine`] in production and by synthetic matrices in tests.
pub trait AlignmentScorer {
    /// Aggregated raw score in [1, 5] for "premise supports hypothesis".
    fn directed_raw(&self, premise: &str, hypothesis: &str) -> Result<f64, ScoreError>;

    /// Average of the two directed raw scores.
    fn bidirectional_raw(&self, a: &str, b: &str) -> Result<f64, ScoreError> {
        Ok((self.directed_raw(a, b)? + self.directed_raw(b, a)?) / 2.0)
    }

    /// Raw directed scores of one source against many targets, in target
    /// order. The default scores pairwise; batching backends override it.
    fn directed_raw_many(&self, source: &str, targets: &[&str]) -> Result<Vec<f64>, ScoreError> {
        targets
            .iter()
            .map(|t| self.directed_raw(source, t))
            .collect()
    }
}

/// Renders the pairwise scoring prompt.
pub fn pairwise_prompt(catalog: &PromptCatalog, premise: &str, hypothesis: &str) -> String {
    catalog.render(
        "entailment_pairwise",
        &[("premise", premise), ("hypothesis", hypothesis)],
    )
}

/// Renders the one-to-many scoring prompt with 1-based numbered targets.
pub fn batch_prompt(catalog: &PromptCatalog, source: &str, targets: &[&str]) -> String {
    let listed: Vec<String> = targets
        .iter()
        .enumerate()
        .map(|(i, t)| format!("{}. {}", i + 1, t))
        .collect();
    catalog.render(
        "entailment_batch",
        &[("source", source), ("targets", &listed.join("\n"))],
    )
}

/// Scoring engine backed by a gateway and the prompt catalog.
pub struct ScoringEngine<'a> {
    gateway: &'a Gateway,
    catalog: &'a PromptCatalog,
    n_samples: u32,
    batch: bool,
}

impl<'a> ScoringEngine<'a> {
    pub fn new(gateway: &'a Gateway, catalog: &'a PromptCatalog, n_samples: u32) -> Self {
        assert!(n_samples >= 1, "n_samples must be at least 1");
        Self {
            gateway,
            catalog,
            n_samples,
            batch: false,
        }
    }

    /// Enables one-to-many batch scoring for multi-target calls.
    pub fn with_batch(mut self, batch: bool) -> Self {
        self.batch = batch;
        self
    }

    pub fn pairwise_prompt(&self, premise: &str, hypothesis: &str) -> String {
        pairwise_prompt(self.catalog, premise, hypothesis)
    }

    pub fn batch_prompt(&self, source: &str, targets: &[&str]) -> String {
        batch_prompt(self.catalog, source, targets)
    }

    /// Scores "premise supports hypothesis" with `n_samples` samples.
    pub fn score_directed(
        &self,
        premise: &str,
        hypothesis: &str,
    ) -> Result<EntailmentJudgment, ScoreError> {
        let prompt = self.pairwise_prompt(premise, hypothesis);
        let mut samples = Vec::with_capacity(self.n_samples as usize);
        for i in 0..self.n_samples {
            let text = self.sample(&prompt, i, PAIRWISE_MAX_TOKENS)?;
            let score = match parse_score_token(&text) {
                Ok(s) => s,
                Err(_) => {
                    // One retry for this sample, at a cache slot past the
                    // regular sample indices so the replay stays stable.
                    let retry = self.sample(&prompt, self.n_samples + i, PAIRWISE_MAX_TOKENS)?;
                    parse_score_token(&retry)?
                }
            };
            samples.push(score);
        }
        let aggregate = aggregate_score(&samples)?;
        Ok(EntailmentJudgment {
            premise: premise.to_string(),
            hypothesis: hypothesis.to_string(),
            raw_samples: samples,
            aggregate,
        })
    }

    /// Average of the two directed aggregates.
    pub fn score_bidirectional(&self, a: &str, b: &str) -> Result<f64, ScoreError> {
        Ok((self.score_directed(a, b)?.aggregate + self.score_directed(b, a)?.aggregate) / 2.0)
    }

    /// Scores `source` against every target with one prompt per sample.
    /// Targets whose score is still missing after one repair reprompt fall
    /// back to pairwise [`Self::score_directed`].
    pub fn score_one_to_many(
        &self,
        source: &str,
        targets: &[&str],
    ) -> Result<Vec<f64>, ScoreError> {
        assert!(!targets.is_empty(), "targets must be non-empty");
        let prompt = self.batch_prompt(source, targets);
        let mut per_target: Vec<Vec<i32>> = vec![Vec::new(); targets.len()];
        let mut incomplete = vec![false; targets.len()];

        for i in 0..self.n_samples {
            let text = self.sample(&prompt, i, BATCH_MAX_TOKENS)?;
            let mut scores = parse_batch_scores(&text, targets.len());
            if scores.iter().any(Option::is_none) {
                let retry = self.sample(&prompt, self.n_samples + i, BATCH_MAX_TOKENS)?;
                let repaired = parse_batch_scores(&retry, targets.len());
                for (slot, fix) in scores.iter_mut().zip(repaired) {
                    if slot.is_none() {
                        *slot = fix;
                    }
                }
            }
            for (t, slot) in scores.into_iter().enumerate() {
                match slot {
                    Some(s) => per_target[t].push(s),
                    None => incomplete[t] = true,
                }
            }
        }

        let mut out = Vec::with_capacity(targets.len());
        for (t, samples) in per_target.into_iter().enumerate() {
            if incomplete[t] {
                out.push(self.score_directed(source, targets[t])?.aggregate);
            } else {
                out.push(aggregate_score(&samples)?);
            }
        }
        Ok(out)
    }

    fn sample(&self, prompt: &str, index: u32, max_tokens: u32) -> Result<String, ScoreError> {
        let req = GenerationRequest::new(prompt, SCORING_TEMPERATURE, max_tokens)
            .with_sample_index(index);
        Ok(self.gateway.complete(&req)?.text)
    }
}

impl AlignmentScorer for ScoringEngine<'_> {
    fn directed_raw(&self, premise: &str, hypothesis: &str) -> Result<f64, ScoreError> {
        Ok(self.score_directed(premise, hypothesis)?.aggregate)
    }

    fn directed_raw_many(&self, source: &str, targets: &[&str]) -> Result<Vec<f64>, ScoreError> {
        if targets.is_empty() {
            return Ok(Vec::new());
        }
        if self.batch {
            self.score_one_to_many(source, targets)
        } else {
            targets
                .iter()
                .map(|t| self.directed_raw(source, t))
                .collect()
        }
    }
}

/// Parses a batch response into per-target scores (0-based slots). Expected
/// line form is `<1-based target>: <score 1-5>`; label text around the two
/// integers is tolerated.
fn parse_batch_scores(text: &str, n_targets: usize) -> Vec<Option<i32>> {
    let mut out = vec![None; n_targets];
    for line in text.lines() {
        let ints: Vec<i64> = line
            .split(|c: char| !c.is_ascii_digit())
            .filter(|run| !run.is_empty())
            .filter_map(|run| run.parse::<i64>().ok())
            .collect();
        if ints.len() < 2 {
            continue;
        }
        let index = ints[0];
        let score = ints[1];
        if index >= 1
            && index <= n_targets as i64
            && (ScoreScale::MIN as i64..=ScoreScale::MAX as i64).contains(&score)
        {
            let slot = &mut out[(index - 1) as usize];
            if slot.is_none() {
                *slot = Some(score as i32);
            }
        }
    }
    out
}
