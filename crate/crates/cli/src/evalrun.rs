//! Metric-report orchestration over generated and reference summary files.

use crate::config::PipelineConfig;
use crate::pipeline::read_output_records;
use anyhow::{bail, Context, Result};
use argquant::eval::{
    derive_claim_reason_judgments, judge_match, judge_support, match_prf, rouge_l, rouge_n,
    soft_prf, support_precision, ArgumentSet, MatchJudgment, MatchLevel, MatchPrf, SoftScores,
    SupportJudgment,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RougeVariant {
    Rouge1,
    Rouge2,
    RougeL,
}

impl std::str::FromStr for RougeVariant {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "1" | "rouge1" | "rouge-1" => Ok(Self::Rouge1),
            "2" | "rouge2" | "rouge-2" => Ok(Self::Rouge2),
            "l" | "rougel" | "rouge-l" => Ok(Self::RougeL),
            other => bail!("unknown ROUGE variant '{other}' (expected 1, 2, or l)"),
        }
    }
}

impl RougeVariant {
    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        match self {
            Self::Rouge1 => rouge_n(a, b, 1).f1,
            Self::Rouge2 => rouge_n(a, b, 2).f1,
            Self::RougeL => rouge_l(a, b).f1,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Self::Rouge1 => "rouge-1",
            Self::Rouge2 => "rouge-2",
            Self::RougeL => "rouge-l",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub generated: PathBuf,
    pub reference: PathBuf,
    pub rouge: RougeVariant,
    /// Enables the LLM judges (match and support annotation).
    pub judge: bool,
    /// Ground-truth match judgments for the match metrics (JSON lines of
    /// MatchJudgment records).
    pub truth_matches: Option<PathBuf>,
    /// Externally computed pairwise similarities (JSON lines of
    /// {generated, reference, score}); replaces ROUGE as the soft-metric
    /// similarity when given.
    pub similarity_file: Option<PathBuf>,
    /// Pairwise comparison records (`winner,loser,count` lines) to rank
    /// with the Bradley-Terry model.
    pub comparisons: Option<PathBuf>,
}

/// One reference record: either a flat argument list or a structured
/// summary with entries.
#[derive(Debug, Clone, Deserialize)]
struct ReferenceRecord {
    thread_id: String,
    #[serde(default)]
    arguments: Vec<String>,
    #[serde(default)]
    entries: Vec<argquant::model::SummaryEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThreadEval {
    pub thread_id: String,
    pub soft: SoftScores,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    /// Name of the similarity behind the soft metrics: a ROUGE variant or
    /// "external" when a similarity file was given.
    pub similarity: String,
    pub threads: Vec<ThreadEval>,
    pub mean_soft: SoftScores,
    /// Match P/R/F1 per level; absent when the judge is disabled or no
    /// ground truth was given.
    pub match_metrics: Option<BTreeMap<String, MatchPrf>>,
    /// Support precision over generated claim-reason edges; absent when the
    /// judge is disabled.
    pub support_precision: Option<f64>,
    /// Bradley-Terry strengths (sum 1) per participant; absent without a
    /// comparison file.
    pub bradley_terry: Option<BTreeMap<String, f64>>,
}

struct PairedThread {
    thread_id: String,
    generated_claims: Vec<String>,
    generated_reasons: Vec<(usize, String)>,
    reference_items: Vec<String>,
    reference_structured: bool,
    reference_entries: Vec<argquant::model::SummaryEntry>,
    generated_entries: Vec<argquant::model::SummaryEntry>,
}

/// Computes the metric report for a generated/reference file pair.
pub fn run_eval(cfg: &PipelineConfig, opts: &EvalOptions) -> Result<EvalReport> {
    if !opts.reference.is_file() {
        bail!("missing reference file {:?}", opts.reference);
    }
    let generated = read_output_records(&opts.generated)?;
    let references = read_reference_records(&opts.reference)?;

    let mut paired = Vec::new();
    for record in &generated {
        let reference = references
            .iter()
            .find(|r| r.thread_id == record.thread_id)
            .with_context(|| {
                format!("no reference record for thread '{}'", record.thread_id)
            })?;
        let generated_claims: Vec<String> = record
            .entries
            .iter()
            .map(|e| e.claim_text.clone())
            .collect();
        let generated_reasons: Vec<(usize, String)> = record
            .entries
            .iter()
            .enumerate()
            .flat_map(|(i, e)| {
                e.reasons
                    .iter()
                    .map(move |r| (i, r.reason_text.clone()))
            })
            .collect();
        let reference_structured = !reference.entries.is_empty();
        let reference_items = if reference_structured {
            reference
                .entries
                .iter()
                .flat_map(|e| {
                    std::iter::once(e.claim_text.clone())
                        .chain(e.reasons.iter().map(|r| r.reason_text.clone()))
                })
                .collect()
        } else {
            reference.arguments.clone()
        };
        paired.push(PairedThread {
            thread_id: record.thread_id.clone(),
            generated_claims,
            generated_reasons,
            reference_items,
            reference_structured,
            reference_entries: reference.entries.clone(),
            generated_entries: record.entries.clone(),
        });
    }

    let external = opts
        .similarity_file
        .as_deref()
        .map(ExternalSimilarity::load)
        .transpose()?;
    let similarity_name = match &external {
        Some(_) => "external".to_string(),
        None => opts.rouge.name().to_string(),
    };

    let mut threads = Vec::new();
    let mut sums = (0.0, 0.0, 0.0);
    for pair in &paired {
        let generated_set = ArgumentSet::new(
            pair.generated_claims
                .iter()
                .cloned()
                .chain(pair.generated_reasons.iter().map(|(_, r)| r.clone()))
                .collect(),
        );
        let reference_set = ArgumentSet::new(pair.reference_items.clone());
        if let Some(table) = &external {
            table.check_covered(&generated_set, &reference_set)?;
        }
        let soft = match &external {
            Some(table) => soft_prf(&generated_set, &reference_set, |a, b| table.score(a, b)),
            None => soft_prf(&generated_set, &reference_set, |a, b| {
                opts.rouge.similarity(a, b)
            }),
        }
        .with_context(|| format!("soft metrics failed for thread '{}'", pair.thread_id))?;
        sums.0 += soft.s_precision;
        sums.1 += soft.s_recall;
        sums.2 += soft.s_f1;
        threads.push(ThreadEval {
            thread_id: pair.thread_id.clone(),
            soft,
        });
    }
    let n = threads.len().max(1) as f64;
    let mean_soft = SoftScores {
        s_precision: sums.0 / n,
        s_recall: sums.1 / n,
        s_f1: sums.2 / n,
    };

    let (match_metrics, support) = if opts.judge {
        judged_metrics(cfg, opts, &paired)?
    } else {
        (None, None)
    };

    let bradley_terry = opts
        .comparisons
        .as_deref()
        .map(rank_comparisons)
        .transpose()?;

    Ok(EvalReport {
        similarity: similarity_name,
        threads,
        mean_soft,
        match_metrics,
        support_precision: support,
        bradley_terry,
    })
}

const BRADLEY_TERRY_TOL: f64 = 1e-8;
const BRADLEY_TERRY_MAX_ITER: usize = 1000;

/// Ranks participants from a delimited comparison file: one
/// `winner,loser,count` record per line, optional header.
pub fn rank_comparisons(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read comparison file {path:?}"))?;
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (idx == 0 && line.eq_ignore_ascii_case("winner,loser,count")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            bail!(
                "{}:{}: expected `winner,loser,count`, got {line:?}",
                path.display(),
                idx + 1
            );
        }
        let count: u32 = fields[2].parse().with_context(|| {
            format!("{}:{}: bad count {:?}", path.display(), idx + 1, fields[2])
        })?;
        records.push(argquant::eval::ComparisonRecord {
            winner: fields[0].to_string(),
            loser: fields[1].to_string(),
            count,
        });
    }
    let fit = argquant::eval::bradley_terry_fit(&records, BRADLEY_TERRY_TOL, BRADLEY_TERRY_MAX_ITER)
        .with_context(|| format!("Bradley-Terry fit failed for {path:?}"))?;
    Ok(fit.strengths)
}

/// Pairwise similarity scores computed outside the process (e.g. by a
/// neural metric) and fed in as a file of {generated, reference, score}
/// records.
struct ExternalSimilarity {
    scores: BTreeMap<(String, String), f64>,
}

#[derive(Deserialize)]
struct SimilarityRecord {
    generated: String,
    reference: String,
    score: f64,
}

impl ExternalSimilarity {
    fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read similarity file {path:?}"))?;
        let mut scores = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: SimilarityRecord = serde_json::from_str(line).with_context(|| {
                format!("{}:{}: malformed similarity record", path.display(), idx + 1)
            })?;
            if !(0.0..=1.0).contains(&record.score) {
                bail!(
                    "{}:{}: similarity {} out of [0, 1]",
                    path.display(),
                    idx + 1,
                    record.score
                );
            }
            scores.insert((record.generated, record.reference), record.score);
        }
        Ok(Self { scores })
    }

    fn score(&self, generated: &str, reference: &str) -> f64 {
        self.scores
            .get(&(generated.to_string(), reference.to_string()))
            .copied()
            .unwrap_or(f64::NAN)
    }

    /// A pair missing from the table is an input error, not a zero.
    fn check_covered(&self, generated: &ArgumentSet, reference: &ArgumentSet) -> Result<()> {
        for g in &generated.items {
            for r in &reference.items {
                if self.score(g, r).is_nan() {
                    bail!("similarity file lacks a score for ({g:?}, {r:?})");
                }
            }
        }
        Ok(())
    }
}

type JudgedMetrics = (Option<BTreeMap<String, MatchPrf>>, Option<f64>);

fn judged_metrics(
    cfg: &PipelineConfig,
    opts: &EvalOptions,
    paired: &[PairedThread],
) -> Result<JudgedMetrics> {
    let prompts = cfg.load_prompts()?;
    let gateway = cfg.build_gateway()?;

    // Support precision over every generated claim-reason edge.
    let mut support_judgments = Vec::new();
    for pair in paired {
        for entry in &pair.generated_entries {
            for reason in &entry.reasons {
                let label = judge_support(&gateway, &prompts, &entry.claim_text, &reason.reason_text)
                    .with_context(|| {
                        format!("support judge failed for thread '{}'", pair.thread_id)
                    })?;
                support_judgments.push(SupportJudgment {
                    claim: entry.claim_text.clone(),
                    reason: reason.reason_text.clone(),
                    label,
                });
            }
        }
    }
    let support = if support_judgments.is_empty() {
        None
    } else {
        Some(support_precision(&support_judgments)?)
    };

    // Match metrics need ground truth to score against.
    let Some(truth_path) = &opts.truth_matches else {
        return Ok((None, support));
    };
    let truth = read_truth_matches(truth_path)?;

    let mut predicted_claims = Vec::new();
    let mut predicted_reasons = Vec::new();
    let mut generated_parent: BTreeMap<String, String> = BTreeMap::new();
    let mut original_parent: BTreeMap<String, String> = BTreeMap::new();

    for pair in paired {
        let originals = original_items(pair, &mut original_parent);
        for (i, claim) in pair.generated_claims.iter().enumerate() {
            let gid = format!("g:{}:claim:{}", pair.thread_id, i);
            for (oid, original) in &originals {
                predicted_claims.push(judge_match(
                    &gateway, &prompts, &gid, claim, oid, original, MatchLevel::Claim,
                )?);
            }
        }
        for (j, (entry_idx, reason)) in pair.generated_reasons.iter().enumerate() {
            let gid = format!("g:{}:reason:{}", pair.thread_id, j);
            generated_parent.insert(
                gid.clone(),
                format!("g:{}:claim:{}", pair.thread_id, entry_idx),
            );
            for (oid, original) in &originals {
                predicted_reasons.push(judge_match(
                    &gateway, &prompts, &gid, reason, oid, original, MatchLevel::Reason,
                )?);
            }
        }
    }

    let mut metrics = BTreeMap::new();
    metrics.insert(
        "claim".to_string(),
        match_prf(&predicted_claims, &truth, MatchLevel::Claim),
    );
    metrics.insert(
        "reason".to_string(),
        match_prf(&predicted_reasons, &truth, MatchLevel::Reason),
    );
    // The strict level needs parent structure on both sides.
    if paired.iter().all(|p| p.reference_structured) {
        let predicted_cr = derive_claim_reason_judgments(
            &predicted_reasons,
            &predicted_claims,
            |id| generated_parent.get(id).cloned(),
            |id| original_parent.get(id).cloned(),
        );
        metrics.insert(
            "claim_reason".to_string(),
            match_prf(&predicted_cr, &truth, MatchLevel::ClaimReason),
        );
    }
    Ok((Some(metrics), support))
}

/// Reference items with stable ids; fills the original-parent map when the
/// reference is structured.
fn original_items(
    pair: &PairedThread,
    original_parent: &mut BTreeMap<String, String>,
) -> Vec<(String, String)> {
    if pair.reference_structured {
        let mut items = Vec::new();
        let mut reason_no = 0usize;
        for (i, entry) in pair.reference_entries.iter().enumerate() {
            let claim_id = format!("o:{}:claim:{}", pair.thread_id, i);
            items.push((claim_id.clone(), entry.claim_text.clone()));
            for reason in &entry.reasons {
                let rid = format!("o:{}:reason:{}", pair.thread_id, reason_no);
                original_parent.insert(rid.clone(), claim_id.clone());
                items.push((rid, reason.reason_text.clone()));
                reason_no += 1;
            }
        }
        items
    } else {
        pair.reference_items
            .iter()
            .enumerate()
            .map(|(k, item)| (format!("o:{}:{}", pair.thread_id, k), item.clone()))
            .collect()
    }
}

fn read_reference_records(path: &Path) -> Result<Vec<ReferenceRecord>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read reference file {path:?}"))?;
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ReferenceRecord = serde_json::from_str(line).with_context(|| {
            format!("{}:{}: malformed reference record", path.display(), idx + 1)
        })?;
        if record.arguments.is_empty() && record.entries.is_empty() {
            bail!(
                "{}:{}: reference record has neither arguments nor entries",
                path.display(),
                idx + 1
            );
        }
        records.push(record);
    }
    if records.is_empty() {
        bail!("reference file {path:?} holds no records");
    }
    Ok(records)
}

fn read_truth_matches(path: &Path) -> Result<Vec<MatchJudgment>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read truth matches {path:?}"))?;
    let mut judgments = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let judgment: MatchJudgment = serde_json::from_str(line).with_context(|| {
            format!("{}:{}: malformed match judgment", path.display(), idx + 1)
        })?;
        judgments.push(judgment);
    }
    Ok(judgments)
}

/// Human-readable report table.
pub fn render_report(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "soft metrics (similarity = {})\n",
        report.similarity
    ));
    out.push_str(&format!(
        "{:<24} {:>8} {:>8} {:>8}\n",
        "thread", "sP", "sR", "sF1"
    ));
    for t in &report.threads {
        out.push_str(&format!(
            "{:<24} {:>8.4} {:>8.4} {:>8.4}\n",
            t.thread_id, t.soft.s_precision, t.soft.s_recall, t.soft.s_f1
        ));
    }
    out.push_str(&format!(
        "{:<24} {:>8.4} {:>8.4} {:>8.4}\n",
        "mean", report.mean_soft.s_precision, report.mean_soft.s_recall, report.mean_soft.s_f1
    ));
    match &report.match_metrics {
        Some(levels) => {
            out.push_str("\nmatch metrics\n");
            for (level, prf) in levels {
                let fmt = |v: Option<f64>| match v {
                    Some(x) => format!("{x:.4}"),
                    None => "absent".to_string(),
                };
                out.push_str(&format!(
                    "{:<24} P={} R={} F1={}\n",
                    level,
                    fmt(prf.precision),
                    fmt(prf.recall),
                    fmt(prf.f1)
                ));
            }
        }
        None => out.push_str("\nmatch metrics: absent (judge disabled or no ground truth)\n"),
    }
    match report.support_precision {
        Some(p) => out.push_str(&format!("support precision: {p:.4}\n")),
        None => out.push_str("support precision: absent (judge disabled)\n"),
    }
    if let Some(strengths) = &report.bradley_terry {
        out.push_str("\nBradley-Terry strengths\n");
        let mut ranked: Vec<(&String, &f64)> = strengths.iter().collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(a.1).unwrap_or(std::cmp::Ordering::Equal));
        for (name, strength) in ranked {
            out.push_str(&format!("{name:<24} {strength:.4}\n"));
        }
    }
    out
}
