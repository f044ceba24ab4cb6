mod common;

use depsearch::corpus::{self, ParseOptions};
use depsearch::engine;
use depsearch::patterns;
use depsearch::querylang::{self, Constraint, ConstraintKey, QueryElement, QueryExample};
use depsearch::sampling;
use proptest::prelude::*;

fn surface() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => "[A-Za-z][a-z]{0,5}",
        1 => prop::sample::select(vec![",", ".", "'s", "-LRB-", "1975", "co-founder"]).prop_map(String::from),
    ]
}

fn constraint(key: ConstraintKey) -> impl Strategy<Value = Constraint> {
    let value = if key == ConstraintKey::Entity { "[A-Z]{2,4}" } else { "[a-z][a-z-]{0,4}" };
    prop_oneof![
        Just(Constraint::bare(key)),
        prop::collection::vec(value, 1..4).prop_map(move |v| Constraint::values(key, v)),
    ]
}

fn constraints() -> impl Strategy<Value = Vec<Constraint>> {
    let keys = [ConstraintKey::Word, ConstraintKey::Lemma, ConstraintKey::Pos, ConstraintKey::Entity];
    prop::sample::subsequence(keys.to_vec(), 0..=3).prop_flat_map(|ks| ks.into_iter().map(constraint).collect::<Vec<_>>())
}

fn plain_element() -> impl Strategy<Value = QueryElement> {
    prop_oneof![
        3 => surface().prop_map(QueryElement::context),
        1 => surface().prop_map(QueryElement::anchor),
        1 => (surface(), "[a-df-z_][a-z0-9_]{0,3}", any::<bool>(), constraints())
            .prop_map(|(s, n, x, c)| QueryElement::capture(s, n, x, c)),
    ]
}

fn query() -> impl Strategy<Value = QueryExample> {
    (
        prop::collection::vec(plain_element(), 0..8),
        (surface(), any::<bool>(), constraints()),
        (surface(), any::<bool>(), constraints()),
        any::<prop::sample::Index>(),
        any::<prop::sample::Index>(),
    )
        .prop_filter_map("capture names collide", |(mut els, a, b, i, j)| {
            els.insert(i.index(els.len() + 1), QueryElement::capture(a.0, "e1", a.1, a.2));
            els.insert(j.index(els.len() + 1), QueryElement::capture(b.0, "e2", b.1, b.2));
            QueryExample::from_elements("p", els).ok()
        })
}

proptest! {
    #[test]
    fn rendering_is_a_parse_fixed_point(q in query()) {
        let text = q.render();
        let back = querylang::parse_query(&text).unwrap();
        prop_assert_eq!(&back.elements, &q.elements);
        prop_assert_eq!(back.render(), text);
    }

    #[test]
    fn stripping_removes_all_markup(q in query()) {
        let plain = q.strip();
        prop_assert!(!plain.contains('[') && !plain.contains(']') && !plain.contains("<>"));
        for word in plain.split(' ') {
            prop_assert!(!word.starts_with('$'));
            prop_assert!(!word.contains(':'));
        }
        prop_assert_eq!(plain.split(' ').count(), q.elements.len());
    }

    #[test]
    fn conllu_round_trips(seed in any::<u64>()) {
        let mut rng = sampling::rng(seed);
        let sentences: Vec<_> = (0..3).map(|i| common::random_sentence(&mut rng, &format!("s{i}"), 12)).collect();
        let text = corpus::to_conllu_string(&sentences);
        let back = corpus::parse_conllu_str(&text, ParseOptions::default()).unwrap();
        prop_assert_eq!(back, sentences);
    }

    #[test]
    fn mentions_cover_tagged_tokens(seed in any::<u64>()) {
        let mut rng = sampling::rng(seed);
        let s = common::random_sentence(&mut rng, "s", 12);
        let mentions = s.mentions();
        for t in &s.tokens {
            let n = mentions.iter().filter(|m| m.span.contains(t.index)).count();
            prop_assert_eq!(n, usize::from(t.entity_tag != "O"));
        }
        for m in &mentions {
            prop_assert!(m.span.contains(m.head_token));
        }
        let oracle: Vec<_> = common::oracle_mentions(&s).into_iter().collect();
        let got: Vec<_> = mentions.into_iter().map(|m| (m.entity_type, m.span, m.head_token)).collect();
        prop_assert_eq!(got, oracle);
    }

    #[test]
    fn annotated_pairs_match_themselves(seed in any::<u64>()) {
        let mut rng = sampling::rng(seed);
        let s = common::random_sentence(&mut rng, "s", 12);
        let mentions = s.mentions();
        prop_assume!(mentions.len() >= 2);
        let (a, b) = (&mentions[0], &mentions[mentions.len() - 1]);
        let p = patterns::from_annotated_sentence(&s, a, b, None).unwrap();
        let hits = engine::match_pattern(&p, &s);
        prop_assert!(hits.iter().any(|m| m.e1() == Some(a.span) && m.e2() == Some(b.span)));
    }

    #[test]
    fn samples_are_sorted_distinct_subsets(len in 0usize..200, n in 0usize..250, seed in any::<u64>()) {
        let picked = sampling::sample_indices(len, n, seed);
        prop_assert_eq!(picked.len(), n.min(len));
        prop_assert!(picked.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(picked.iter().all(|&i| i < len));
        prop_assert_eq!(sampling::sample_indices(len, n, seed), picked);
    }
}
