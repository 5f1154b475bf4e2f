//! Prompt assembly and verdict parsing.
//!
//! The classification prompt has four fixed parts: the task definition with
//! a scattering-center primer, the dataset and candidate-class statement,
//! the numbered reasoning steps with output-format rules, and the reference
//! prototypes followed by the query. The template text is frozen; only the
//! profile length, the dataset description, and the candidate list are
//! substituted, and the prototype/query listings are rendered through
//! [`textualize_signature`]. Equal inputs produce byte-identical prompts.
//!
//! Responses are parsed leniently: the canonical `Predicted Target Class:`
//! line is located case-insensitively (tolerating `**` and similar leading
//! markers), its remainder is stripped of quoting and matched against the
//! candidate classes, and failing all that the whole response is scanned
//! for the earliest candidate mention. A response in which no candidate
//! appears at all becomes an error — callers record it as an abstention
//! rather than guessing.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::prototype::Prototype;
use crate::scatter::{textualize_signature, SCSignature};

/// Mandatory section headers, in prompt order.
pub const HEADER_TASK: &str = "**Task definition:";
pub const HEADER_OVERVIEW: &str = "**Scattering Center Characteristics Overview:";
pub const HEADER_DATASET: &str = "**Current Dataset and Task:";
pub const HEADER_REASONING: &str = "**Reasoning Steps and Requirements:";
pub const HEADER_REFERENCES: &str =
    "**Neighboring Training Sample Reference (Support Set Prototypes):";
pub const HEADER_QUERY: &str = "**Test Sample Scattering Centers (Please predict based on this):**";
/// Terminal line the model is asked to complete.
pub const VERDICT_PREFIX: &str = "Predicted Target Class:";

/// All mandatory headers in order, for completeness checks.
pub const MANDATORY_HEADERS: [&str; 7] = [
    HEADER_TASK,
    HEADER_OVERVIEW,
    HEADER_DATASET,
    HEADER_REASONING,
    HEADER_REFERENCES,
    HEADER_QUERY,
    VERDICT_PREFIX,
];

/// Static task setting shared by every query of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskContext {
    /// Candidate classes, in presentation order.
    pub candidate_classes: Vec<String>,
    /// Free-text description of the data origin, e.g.
    /// "measured HRRP scattering center data".
    pub dataset_blurb: String,
    /// Length of the profiles the signatures came from.
    pub profile_len: usize,
    /// Logged with results; never rendered into the prompt.
    pub model_tag: String,
}

impl TaskContext {
    pub fn new(
        candidate_classes: Vec<String>,
        dataset_blurb: impl Into<String>,
        profile_len: usize,
        model_tag: impl Into<String>,
    ) -> Result<Self> {
        if candidate_classes.is_empty() {
            return Err(Error::invalid("candidate class list is empty"));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &candidate_classes {
            if c.is_empty() {
                return Err(Error::invalid("candidate class names must be non-empty"));
            }
            if !seen.insert(c.as_str()) {
                return Err(Error::invalid(format!("duplicate candidate class '{c}'")));
            }
        }
        if profile_len == 0 {
            return Err(Error::invalid("profile_len must be positive"));
        }
        Ok(TaskContext {
            candidate_classes,
            dataset_blurb: dataset_blurb.into(),
            profile_len,
            model_tag: model_tag.into(),
        })
    }
}

/// A fully rendered prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptDocument {
    /// The complete prompt text, UTF-8 with `\n` line endings.
    pub text: String,
    /// `(class, cluster_id)` of each reference block, in rendered order.
    pub prototype_order: Vec<(String, usize)>,
    /// Hex SHA-256 over the query signature rendering and profile length.
    pub query_hash: String,
}

/// A parsed model response.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    /// The matched candidate class, in its canonical spelling.
    pub predicted: String,
    /// Response text after the verdict line (or the whole response when the
    /// prediction was recovered by the fallback scan).
    pub rationale: String,
    /// The unmodified response.
    pub raw: String,
}

/// Builds the prompt for one query against a prototype set.
///
/// Reference blocks are ordered class-major (candidate order) and
/// cluster-minor, and numbered from 1 in that order. A candidate class
/// without prototypes simply has no reference block. Prototypes of unknown
/// classes are rejected.
pub fn assemble_prompt(
    ctx: &TaskContext,
    prototypes: &[Prototype],
    query: &SCSignature,
) -> Result<PromptDocument> {
    if prototypes.is_empty() {
        return Err(Error::invalid("no prototypes to reference"));
    }
    for p in prototypes {
        if !ctx.candidate_classes.contains(&p.class_label) {
            return Err(Error::invalid(format!(
                "prototype class '{}' is not a candidate",
                p.class_label
            )));
        }
    }

    let candidates = ctx
        .candidate_classes
        .iter()
        .map(|c| format!("'{c}'"))
        .collect::<Vec<_>>()
        .join(", ");

    let mut text = String::new();
    text.push_str(&format!(
        "{HEADER_TASK} You are a radar target recognition expert, skilled at identifying \
         target types by analyzing their scattering center characteristics. Your task is to \
         accurately identify the target from a list of candidates based on the provided \
         primary scattering center information (position index and relative amplitude).\n\n"
    ));
    text.push_str(&format!(
        "{HEADER_OVERVIEW} Scattering centers are the primary regions on a target where \
         radar echo energy is concentrated. They typically correspond to geometric \
         discontinuities, edges, corners, or strong reflective surfaces of the target. By \
         analyzing the number of scattering centers, their relative positions (range bin \
         indices), and their respective relative amplitudes, one can infer the target's \
         size, shape, and structural features. In this task, the provided scattering center \
         information is extracted from a 1D High-Resolution Range Profile (HRRP) of length \
         {len} and is sorted in descending order of amplitude. The 'position index' starts \
         counting from 0, representing the position in the original HRRP sequence. The \
         'relative amplitude' is normalized (e.g., the maximum value is 1).\n\n",
        len = ctx.profile_len
    ));
    text.push_str(&format!(
        "{HEADER_DATASET}\nThe data currently being analyzed originates from \
         **{blurb}**. Candidate target classes include: {candidates}.\n\n",
        blurb = ctx.dataset_blurb
    ));
    text.push_str(&format!(
        "{HEADER_REASONING}\n\
         1. **Examine Test Sample Scattering Centers**: Carefully observe the data provided \
         in the 'Test Sample Scattering Centers' section. Focus on:\n\
         \x20   * The number of detected scattering centers.\n\
         \x20   * The positional indices and relative amplitudes of the strongest few \
         scattering centers.\n\
         \x20   * The approximate distribution pattern of scattering centers across the \
         entire target length (0 to {max_index}) (e.g., concentrated at the front, rear, \
         evenly distributed, etc.).\n\
         2. **Reference Neighboring/Support Samples (if provided)**: Compare the scattering \
         center features of the test sample with those of known class samples in the \
         'Neighboring Training Sample Reference'.\n\
         \x20   * Note the known class of each reference sample and compare the similarity \
         of its scattering center pattern to the test sample.\n\
         3. **Make a Comprehensive Judgment**: Based on your understanding of scattering \
         center distribution patterns for different target types and the comparison with \
         reference samples, determine which candidate class the test sample most closely \
         matches.\n\
         4. **Output Format**:\n\
         \x20   * On the first line of your response, please clearly state the predicted \
         target class in the format: 'Predicted Target Class: [Fill in one of the candidate \
         class names here]'\n\
         \x20   * In subsequent lines, briefly state your main reasons for this judgment, \
         e.g., based on the number, position, or specific pattern of scattering centers, or \
         similarity to a reference sample.\n\n",
        max_index = ctx.profile_len - 1
    ));

    text.push_str(HEADER_REFERENCES);
    text.push('\n');
    let mut prototype_order = Vec::new();
    let mut block_no = 0usize;
    for class in &ctx.candidate_classes {
        let mut of_class: Vec<&Prototype> =
            prototypes.iter().filter(|p| &p.class_label == class).collect();
        of_class.sort_by_key(|p| p.cluster_id);
        for proto in of_class {
            block_no += 1;
            text.push_str(&format!(
                "\n--- Reference Prototype {block_no} ---\n\
                 Known Target Class: '{class}'\n\
                 Its primary scattering center information:\n{sig}\n",
                sig = textualize_signature(&proto.signature)
            ));
            prototype_order.push((class.clone(), proto.cluster_id));
        }
    }

    text.push_str(&format!(
        "\n{HEADER_QUERY}\n{sig}\n\n\
         Please strictly follow the output format requirements.\n{VERDICT_PREFIX}",
        sig = textualize_signature(query)
    ));

    let mut hasher = Sha256::new();
    hasher.update(textualize_signature(query).as_bytes());
    hasher.update(b"\n");
    hasher.update(ctx.profile_len.to_le_bytes());
    let query_hash = hex_string(&hasher.finalize());

    Ok(PromptDocument {
        text,
        prototype_order,
        query_hash,
    })
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Recovers the predicted class from a model response.
///
/// The first line whose content starts with `Predicted Target Class:`
/// (case-insensitive, leading `*`/`#`/quote markers ignored) supplies the
/// candidate; otherwise the earliest candidate-class mention anywhere in
/// the response is used. Returns [`Error::UnparseableVerdict`] when no
/// candidate appears at all.
pub fn parse_verdict(response: &str, ctx: &TaskContext) -> Result<Verdict> {
    const PHRASE: &str = "predicted target class";
    let lines: Vec<&str> = response.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        let content = line.trim_start_matches(|c: char| {
            c.is_whitespace() || matches!(c, '*' | '#' | '-' | '>' | '`' | '"' | '\'')
        });
        let matches_phrase = content
            .get(..PHRASE.len())
            .is_some_and(|head| head.eq_ignore_ascii_case(PHRASE));
        if !matches_phrase {
            continue;
        }
        let after_phrase = &content[PHRASE.len()..];
        let Some(colon) = after_phrase.find(':') else {
            continue;
        };
        let tail = &after_phrase[colon + 1..];
        let rationale = lines[i + 1..].join("\n");
        if let Some(class) = match_candidate(tail, ctx) {
            return Ok(Verdict {
                predicted: class,
                rationale,
                raw: response.to_string(),
            });
        }
        break; // header found but unmatched: fall through to the full scan
    }

    if let Some(class) = earliest_mention(response, ctx) {
        return Ok(Verdict {
            predicted: class,
            rationale: response.to_string(),
            raw: response.to_string(),
        });
    }
    Err(Error::UnparseableVerdict {
        response: response.to_string(),
    })
}

/// Matches the verdict-line remainder against the candidates: exact
/// (case-insensitive, after stripping quotes/brackets/punctuation), then
/// substring containment with the earliest match winning.
fn match_candidate(tail: &str, ctx: &TaskContext) -> Option<String> {
    let cleaned: String = tail
        .trim()
        .trim_matches(|c: char| {
            c.is_whitespace()
                || matches!(
                    c,
                    '\'' | '"' | '`' | '[' | ']' | '(' | ')' | '{' | '}' | '.' | ',' | ';' | ':'
                        | '!' | '?' | '*'
                )
        })
        .to_lowercase();
    for c in &ctx.candidate_classes {
        if cleaned == c.to_lowercase() {
            return Some(c.clone());
        }
    }
    earliest_mention(tail, ctx)
}

/// The candidate with the earliest case-insensitive occurrence in `text`;
/// ties go to candidate order.
fn earliest_mention(text: &str, ctx: &TaskContext) -> Option<String> {
    let lower = text.to_lowercase();
    let mut best: Option<(usize, &String)> = None;
    for c in &ctx.candidate_classes {
        if let Some(pos) = lower.find(&c.to_lowercase()) {
            if best.map_or(true, |(bp, _)| pos < bp) {
                best = Some((pos, c));
            }
        }
    }
    best.map(|(_, c)| c.clone())
}
