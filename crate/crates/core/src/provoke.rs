//! The provocation gate: AI output must be a question that echoes the
//! learner, never a declarative answer.
//!
//! Rules, all lexical:
//!
//! * `R1` the final sentence ends with `?`.
//! * `R2` at least half of the sentences end with `?`.
//! * `R3` at least one content token comes from the learner's vocabulary.
//! * `R4` every non-question sentence uses only the learner's vocabulary,
//!   stopwords, and the restatement frame words in [`RESTATEMENT_FRAME`].

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::embed::tokenize;
use crate::error::{Error, Result};
use crate::model::{CardKind, DataCard};

/// Minimum fraction of sentences that must be questions (R2).
pub const MIN_QUESTION_RATIO: f64 = 0.5;

/// Words a restating sentence may use beyond the learner's own terms, so that
/// "You described ..." and "You previously observed ..." are expressible.
pub const RESTATEMENT_FRAME: [&str; 4] = ["described", "observed", "previously", "you"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RuleCode {
    R1,
    R2,
    R3,
    R4,
}

impl fmt::Display for RuleCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RuleResult {
    pub rule: RuleCode,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GateVerdict {
    pub passed: bool,
    pub rule_results: Vec<RuleResult>,
}

impl GateVerdict {
    pub fn failed_rules(&self) -> Vec<RuleCode> {
        self.rule_results
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.rule)
            .collect()
    }
}

/// Content tokens a learner has used.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary(BTreeSet<String>);

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut v = Self::new();
        for t in texts {
            v.add_text(t);
        }
        v
    }

    /// Vocabulary of the learner cards (captures and responses) in `cards`.
    pub fn from_cards<'a>(cards: impl IntoIterator<Item = &'a DataCard>) -> Self {
        Self::from_texts(
            cards
                .into_iter()
                .filter(|c| c.kind.is_learner())
                .map(|c| c.voice_text.as_str()),
        )
    }

    pub fn add_text(&mut self, text: &str) {
        self.0.extend(tokenize(text));
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

struct Sentence<'a> {
    text: &'a str,
    question: bool,
}

/// Splits on runs of `.`, `!`, `?`. A run containing `?` marks a question.
/// Fragments without any letter or digit are dropped.
fn sentences(text: &str) -> Vec<Sentence<'_>> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, ch)) = chars.next() {
        if matches!(ch, '.' | '!' | '?') {
            let mut question = ch == '?';
            let mut end = i + ch.len_utf8();
            while let Some(&(j, next)) = chars.peek() {
                if matches!(next, '.' | '!' | '?') {
                    question |= next == '?';
                    end = j + next.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            push_sentence(&mut out, &text[start..end], question);
            start = end;
        }
    }
    push_sentence(&mut out, &text[start..], false);
    out
}

fn push_sentence<'a>(out: &mut Vec<Sentence<'a>>, text: &'a str, question: bool) {
    if text.chars().any(char::is_alphanumeric) {
        out.push(Sentence {
            text: text.trim(),
            question,
        });
    }
}

/// Checks `text` against rules R1-R4 given the learner's vocabulary.
pub fn gate(text: &str, vocab: &Vocabulary) -> GateVerdict {
    let sents = sentences(text);
    let questions = sents.iter().filter(|s| s.question).count();
    let mut results = Vec::with_capacity(4);

    let last_is_question = sents.last().is_some_and(|s| s.question);
    results.push(RuleResult {
        rule: RuleCode::R1,
        passed: last_is_question,
        detail: if last_is_question {
            "final sentence is a question".to_string()
        } else {
            "final sentence does not end with '?'".to_string()
        },
    });

    let ratio_ok = !sents.is_empty() && (questions as f64) >= MIN_QUESTION_RATIO * sents.len() as f64;
    results.push(RuleResult {
        rule: RuleCode::R2,
        passed: ratio_ok,
        detail: format!("{questions} of {} sentences are questions", sents.len()),
    });

    let echoed: Vec<String> = tokenize(text)
        .into_iter()
        .filter(|t| vocab.contains(t))
        .collect();
    results.push(RuleResult {
        rule: RuleCode::R3,
        passed: !echoed.is_empty(),
        detail: match echoed.first() {
            Some(t) => format!("echoes learner term '{t}'"),
            None => "no learner term echoed".to_string(),
        },
    });

    let mut novel: Vec<String> = Vec::new();
    for s in sents.iter().filter(|s| !s.question) {
        for t in tokenize(s.text) {
            if !vocab.contains(&t) && !RESTATEMENT_FRAME.contains(&t.as_str()) && !novel.contains(&t) {
                novel.push(t);
            }
        }
    }
    results.push(RuleResult {
        rule: RuleCode::R4,
        passed: novel.is_empty(),
        detail: if novel.is_empty() {
            "statements only restate the learner".to_string()
        } else {
            format!("statements introduce new terms: {}", novel.join(", "))
        },
    });

    GateVerdict {
        passed: results.iter().all(|r| r.passed),
        rule_results: results,
    }
}

/// A gate-approved question for the learner.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Provocation {
    text: String,
    trigger_card: String,
    linked_card: Option<String>,
    gate: GateVerdict,
}

impl Provocation {
    /// Gates a candidate from any source. Rejected candidates never become
    /// provocations.
    pub fn from_candidate(
        text: impl Into<String>,
        trigger_card: impl Into<String>,
        linked_card: Option<String>,
        vocab: &Vocabulary,
    ) -> Result<Self> {
        let text = text.into();
        let verdict = gate(&text, vocab);
        if !verdict.passed || text.trim().is_empty() {
            return Err(Error::GateRejected(verdict));
        }
        Ok(Provocation {
            text,
            trigger_card: trigger_card.into(),
            linked_card,
            gate: verdict,
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn trigger_card(&self) -> &str {
        &self.trigger_card
    }

    pub fn linked_card(&self) -> Option<&str> {
        self.linked_card.as_deref()
    }

    pub fn gate(&self) -> &GateVerdict {
        &self.gate
    }
}

/// Source of candidate provocation text, e.g. an external language model.
/// Whatever it proposes still has to pass [`gate`].
pub trait ProvocationGenerator {
    fn propose(&self, trigger: &DataCard, prior: Option<&DataCard>) -> Option<String>;
}

/// The built-in template generator.
#[derive(Debug, Clone, Copy, Default)]
pub struct TemplateGenerator;

impl ProvocationGenerator for TemplateGenerator {
    fn propose(&self, trigger: &DataCard, prior: Option<&DataCard>) -> Option<String> {
        let current = key_phrase(&trigger.voice_text)?;
        Some(match prior {
            None => single_text(&current),
            Some(p) => linked_text(&key_phrase(&p.voice_text)?, &current),
        })
    }
}

/// Runs `generator` and gates the result against the vocabulary of the cards involved.
pub fn provoke_with(
    generator: &dyn ProvocationGenerator,
    trigger: &DataCard,
    prior: Option<&DataCard>,
) -> Result<Provocation> {
    check_trigger(trigger)?;
    if let Some(p) = prior {
        check_link(trigger, p)?;
    }
    let candidate = generator
        .propose(trigger, prior)
        .ok_or_else(|| Error::NoContentTokens(trigger.id.clone()))?;
    let vocab = Vocabulary::from_texts(
        core::iter::once(trigger.voice_text.as_str()).chain(prior.map(|p| p.voice_text.as_str())),
    );
    Provocation::from_candidate(candidate, trigger.id.clone(), prior.map(|p| p.id.clone()), &vocab)
}

/// The two most frequent content tokens (ties by first occurrence), quoted.
pub fn key_phrase(text: &str) -> Option<String> {
    let tokens = tokenize(text);
    let mut counts: Vec<(String, usize)> = Vec::new();
    for t in tokens {
        match counts.iter_mut().find(|(w, _)| *w == t) {
            Some((_, n)) => *n += 1,
            None => counts.push((t, 1)),
        }
    }
    // Stable sort keeps first-occurrence order among equal counts.
    counts.sort_by_key(|c| core::cmp::Reverse(c.1));
    match counts.as_slice() {
        [] => None,
        [(a, _)] => Some(format!("'{a}'")),
        [(a, _), (b, _), ..] => Some(format!("'{a}' and '{b}'")),
    }
}

fn single_text(phrase: &str) -> String {
    format!(
        "You described {phrase}. What evidence from what you can observe supports that interpretation \u{2014} and what would count against it?"
    )
}

fn linked_text(prior_phrase: &str, current_phrase: &str) -> String {
    format!("You previously observed {prior_phrase}. How does {current_phrase} achieve a similar effect?")
}

fn check_trigger(card: &DataCard) -> Result<()> {
    if card.kind != CardKind::Capture {
        return Err(Error::InvalidParam("provocations are triggered by capture cards"));
    }
    if tokenize(&card.voice_text).is_empty() {
        return Err(Error::NoContentTokens(card.id.clone()));
    }
    Ok(())
}

fn check_link(card: &DataCard, prior: &DataCard) -> Result<()> {
    if card.id == prior.id {
        return Err(Error::InvalidLink(format!("card {} cannot link to itself", card.id)));
    }
    if prior.ts > card.ts {
        return Err(Error::InvalidLink(format!(
            "{} is newer than {}; links point from newer to older",
            prior.id, card.id
        )));
    }
    if tokenize(&prior.voice_text).is_empty() {
        return Err(Error::NoContentTokens(prior.id.clone()));
    }
    Ok(())
}

/// Template provocation for a single capture.
pub fn generate_single(card: &DataCard) -> Result<Provocation> {
    provoke_with(&TemplateGenerator, card, None)
}

/// Template provocation surfacing a link from `card` back to `prior`.
pub fn generate_linked(card: &DataCard, prior: &DataCard) -> Result<Provocation> {
    provoke_with(&TemplateGenerator, card, Some(prior))
}
