//! Semantic network over a learner's capture cards.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::embed::cosine;
use crate::model::{CardKind, DataCard};

pub const DEFAULT_THRESHOLD: f64 = 0.35;
pub const DEFAULT_K: usize = 3;

/// Similarity edge from a newer capture to an older one.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SemanticLink {
    #[cfg_attr(feature = "serde", serde(rename = "from"))]
    pub from_card: String,
    #[cfg_attr(feature = "serde", serde(rename = "to"))]
    pub to_card: String,
    pub similarity: f64,
    pub cross_session: bool,
    pub surfaced: bool,
}

/// Links from `card` to earlier captures in `corpus`, strongest first.
///
/// Targets are capture cards no newer than `card`. The most recent capture of
/// the same session is skipped since adjacent captures are trivially related.
/// Ties in similarity go to the older card. `k = None` keeps every link.
pub fn link_candidates<'a>(
    card: &DataCard,
    corpus: impl IntoIterator<Item = &'a DataCard>,
    threshold: f64,
    k: Option<usize>,
) -> Vec<SemanticLink> {
    if card.kind != CardKind::Capture {
        return Vec::new();
    }
    let targets: Vec<&DataCard> = corpus
        .into_iter()
        .filter(|c| c.kind == CardKind::Capture && c.id != card.id && c.ts <= card.ts)
        .collect();
    // Latest same-session capture; on equal timestamps the later corpus entry wins.
    let adjacent = targets
        .iter()
        .enumerate()
        .filter(|(_, c)| c.session_id == card.session_id)
        .max_by(|(i, a), (j, b)| a.ts.cmp(&b.ts).then(i.cmp(j)))
        .map(|(_, c)| c.id.as_str());

    let mut scored: Vec<(f64, &DataCard, usize)> = targets
        .iter()
        .enumerate()
        .filter(|(_, c)| Some(c.id.as_str()) != adjacent)
        .filter_map(|(i, c)| {
            let sim = cosine(&card.embedding, &c.embedding).ok()?;
            (sim >= threshold).then_some((sim, *c, i))
        })
        .collect();
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.ts.cmp(&b.1.ts))
            .then(a.2.cmp(&b.2))
    });
    if let Some(k) = k {
        scored.truncate(k);
    }
    scored
        .into_iter()
        .map(|(similarity, to, _)| SemanticLink {
            from_card: card.id.clone(),
            to_card: to.id.clone(),
            similarity,
            cross_session: to.session_id != card.session_id,
            surfaced: false,
        })
        .collect()
}

/// Orders captures by time, keeping the given order among equal timestamps.
fn chronological<'a>(corpus: impl IntoIterator<Item = &'a DataCard>) -> Vec<&'a DataCard> {
    let mut caps: Vec<&DataCard> = corpus
        .into_iter()
        .filter(|c| c.kind == CardKind::Capture)
        .collect();
    caps.sort_by_key(|c| c.ts);
    caps
}

/// Every link meeting `threshold`, as if each capture had been linked on
/// arrival against all earlier ones.
pub fn build_network<'a>(
    corpus: impl IntoIterator<Item = &'a DataCard>,
    threshold: f64,
) -> Vec<SemanticLink> {
    let caps = chronological(corpus);
    let mut links = Vec::new();
    for (i, card) in caps.iter().enumerate() {
        links.extend(link_candidates(card, caps[..i].iter().copied(), threshold, None));
    }
    links
}

/// Incrementally maintained network for one learner.
#[derive(Debug, Clone)]
pub struct SemanticNetwork {
    threshold: f64,
    captures: Vec<DataCard>,
    links: Vec<SemanticLink>,
}

impl SemanticNetwork {
    pub fn new(threshold: f64) -> Self {
        SemanticNetwork {
            threshold,
            captures: Vec::new(),
            links: Vec::new(),
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Adds a card and returns the links it created, strongest first.
    /// Non-capture cards are ignored. Cards must arrive in time order.
    pub fn insert(&mut self, card: &DataCard) -> Vec<SemanticLink> {
        if card.kind != CardKind::Capture {
            return Vec::new();
        }
        let new = link_candidates(card, self.captures.iter(), self.threshold, None);
        self.links.extend(new.iter().cloned());
        self.captures.push(card.clone());
        new
    }

    pub fn links(&self) -> &[SemanticLink] {
        &self.links
    }

    pub fn links_from<'a>(&'a self, card_id: &'a str) -> impl Iterator<Item = &'a SemanticLink> {
        self.links.iter().filter(move |l| l.from_card == card_id)
    }

    pub fn card(&self, id: &str) -> Option<&DataCard> {
        self.captures.iter().find(|c| c.id == id)
    }

    pub fn is_surfaced(&self, from: &str, to: &str) -> bool {
        self.links
            .iter()
            .any(|l| l.surfaced && l.from_card == from && l.to_card == to)
    }

    /// Marks a link as surfaced. Returns false if no such link exists.
    pub fn mark_surfaced(&mut self, from: &str, to: &str) -> bool {
        match self
            .links
            .iter_mut()
            .find(|l| l.from_card == from && l.to_card == to)
        {
            Some(l) => {
                l.surfaced = true;
                true
            }
            None => false,
        }
    }

    /// True if the pair was surfaced in either direction, for the
    /// at-most-once surfacing policy.
    pub fn pair_surfaced(&self, a: &str, b: &str) -> bool {
        self.is_surfaced(a, b) || self.is_surfaced(b, a)
    }
}
