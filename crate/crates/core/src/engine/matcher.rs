use std::collections::{BTreeMap, HashSet};

use crate::corpus::{Sentence, Span};
use crate::patterns::{Pattern, E1, E2};

use super::index::PreparedSentence;

/// A pattern in matching order: nodes in preorder from the root, each with
/// its parent's preorder slot and the required edge label.
pub(crate) struct Plan<'p> {
    pattern: &'p Pattern,
    order: Vec<usize>,
    parent_slot: Vec<Option<(usize, &'p str)>>,
}

impl<'p> Plan<'p> {
    pub(crate) fn new(pattern: &'p Pattern) -> Self {
        let children = pattern.children();
        let mut order = Vec::with_capacity(pattern.nodes.len());
        let mut parent_slot = Vec::with_capacity(pattern.nodes.len());
        let mut stack = vec![(pattern.root, None)];
        while let Some((node, parent)) = stack.pop() {
            let slot = order.len();
            order.push(node);
            parent_slot.push(parent);
            for &(child, label) in children[node].iter().rev() {
                stack.push((child, Some((slot, label))));
            }
        }
        Plan { pattern, order, parent_slot }
    }
}

/// One raw hit: the token of every pattern node (indexed by node id).
pub(crate) type Assignment = Vec<usize>;

pub(crate) fn assignments(plan: &Plan<'_>, sentence: &Sentence, prep: &PreparedSentence) -> Vec<Assignment> {
    let n = sentence.tokens.len();
    let mut out = Vec::new();
    let mut slots = vec![usize::MAX; plan.order.len()];
    let mut used = vec![false; n];
    extend(plan, sentence, prep, 0, &mut slots, &mut used, &mut out);
    out
}

fn accepts(plan: &Plan<'_>, sentence: &Sentence, prep: &PreparedSentence, node: usize, tok: usize) -> bool {
    plan.pattern.nodes[node].accepts(
        &prep.words[tok],
        &prep.lemmas[tok],
        &sentence.tokens[tok].pos,
        prep.mention_type(tok),
    )
}

fn extend(
    plan: &Plan<'_>,
    sentence: &Sentence,
    prep: &PreparedSentence,
    slot: usize,
    slots: &mut Vec<usize>,
    used: &mut Vec<bool>,
    out: &mut Vec<Assignment>,
) {
    if slot == plan.order.len() {
        let mut assignment = vec![0; slots.len()];
        for (s, &node) in plan.order.iter().enumerate() {
            assignment[node] = slots[s];
        }
        out.push(assignment);
        return;
    }
    let node = plan.order[slot];
    let mut try_token = |tok: usize, slots: &mut Vec<usize>, used: &mut Vec<bool>| {
        if used[tok] || !accepts(plan, sentence, prep, node, tok) {
            return;
        }
        used[tok] = true;
        slots[slot] = tok;
        extend(plan, sentence, prep, slot + 1, slots, used, out);
        used[tok] = false;
    };
    match plan.parent_slot[slot] {
        None => {
            for tok in 0..sentence.tokens.len() {
                try_token(tok, slots, used);
            }
        }
        Some((parent, label)) => {
            let head = slots[parent];
            for &tok in &prep.children[head] {
                if sentence.tokens[tok].dep_label == label {
                    try_token(tok, slots, used);
                }
            }
        }
    }
}

/// Capture spans for an assignment. Expanded entity nodes yield their
/// mention span, other expanded nodes their subtree yield.
pub(crate) fn bindings(pattern: &Pattern, prep: &PreparedSentence, assignment: &Assignment) -> BTreeMap<String, Span> {
    pattern
        .captures
        .iter()
        .map(|(name, &node)| {
            let tok = assignment[node];
            let spec = &pattern.nodes[node];
            let span = if !spec.expand {
                Span::single(tok)
            } else if spec.entity_set.is_some() {
                prep.heads_mention[tok].as_ref().map_or(Span::single(tok), |(_, span)| *span)
            } else {
                prep.subtree[tok]
            };
            (name.clone(), span)
        })
        .collect()
}

/// Sorted, deduplicated bindings with overlapping e1/e2 removed.
pub(crate) fn resolve_hits(
    pattern: &Pattern,
    prep: &PreparedSentence,
    assignments: Vec<Assignment>,
) -> Vec<BTreeMap<String, Span>> {
    let mut keyed: Vec<(usize, BTreeMap<String, Span>)> = assignments
        .into_iter()
        .map(|a| (a[pattern.root], bindings(pattern, prep, &a)))
        .filter(|(_, b)| match (b.get(E1), b.get(E2)) {
            (Some(x), Some(y)) => !x.overlaps(y),
            _ => true,
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.iter().cmp(b.1.iter())));
    let mut seen = HashSet::new();
    keyed
        .into_iter()
        .filter(|(_, b)| seen.insert(b.clone()))
        .map(|(_, b)| b)
        .collect()
}
