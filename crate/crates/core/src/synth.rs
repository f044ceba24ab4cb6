//! Synthetic corpora with planted relation instances.
//!
//! Each construction is a fixed dependency template with entity slots filled
//! from small name pools. The generator records every planted relation
//! instance, so tests know exactly which pairs a pattern set should find.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Sentence, Span, Token};
use crate::sampling;

pub const FOUNDED_BY: &str = "founded_by";
pub const SPOUSE: &str = "spouse";
pub const DATE_OF_DEATH: &str = "date_of_death";
pub const PLACE_OF_DEATH: &str = "place_of_death";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// `PER founded ORG [in DATE] .`
    FoundedActive,
    /// `ORG was founded by PER .`
    FoundedPassive,
    /// `ORG 's founder PER spoke .`
    FoundedPossessive,
    /// Active founding with another verb (co-founded, established, started).
    FoundedActiveVariant,
    /// Passive founding with another verb.
    FoundedPassiveVariant,
    /// Possessive with another noun (co-founder, creator).
    FoundedPossessiveVariant,
    /// `PER founded ORG with PER .`; only the subject is a founder.
    FoundedWithPartner,
    /// `PER joined ORG .`
    Joined,
    /// `PER visited ORG in DATE .`
    Visited,
    /// `ORG hired PER .`
    Hired,
    /// `PER praised ORG , and PER criticized ORG .`
    TwoClause,
    /// `PER married PER .`
    SpouseMarried,
    /// `PER divorced|wed PER .`
    SpouseVariant,
    /// `PER died in DATE .`
    DeathDate,
    /// `PER perished|succumbed in DATE .`
    DeathDateVariant,
    /// `PER died in LOC in DATE .`
    DeathPlace,
    /// `The weather was nice .`
    Filler,
}

/// A planted relation instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedFact {
    pub sentence_id: String,
    pub relation: String,
    pub e1: Span,
    pub e2: Span,
    pub construction: Construction,
    /// Whether the seed construction (founded/founder/married/died) was used
    /// rather than a lexical variant.
    pub canonical: bool,
}

#[derive(Clone, Debug)]
pub struct SynthSpec {
    pub seed: u64,
    pub counts: BTreeMap<Construction, usize>,
}

#[derive(Clone, Debug)]
pub struct SynthCorpus {
    pub sentences: Vec<Sentence>,
    pub facts: Vec<PlantedFact>,
}

impl SynthSpec {
    pub fn new(seed: u64, counts: impl IntoIterator<Item = (Construction, usize)>) -> Self {
        SynthSpec { seed, counts: counts.into_iter().collect() }
    }

    /// 200 sentences: 24 founded-by instances in the three seed
    /// constructions, 6 lexical variants, and a large pool of typed
    /// ORG/PER pairs that no founded-by pattern connects.
    pub fn desk(seed: u64) -> Self {
        use Construction::*;
        SynthSpec::new(
            seed,
            [
                (FoundedActive, 8),
                (FoundedPassive, 6),
                (FoundedPossessive, 6),
                (FoundedWithPartner, 4),
                (FoundedActiveVariant, 2),
                (FoundedPassiveVariant, 2),
                (FoundedPossessiveVariant, 2),
                (Joined, 20),
                (Visited, 20),
                (Hired, 20),
                (TwoClause, 60),
                (SpouseMarried, 8),
                (SpouseVariant, 7),
                (DeathDate, 6),
                (DeathDateVariant, 5),
                (DeathPlace, 4),
                (Filler, 20),
            ],
        )
    }

    /// The desk mix scaled to roughly `total` sentences.
    pub fn scaled(total: usize, seed: u64) -> Self {
        let desk = SynthSpec::desk(seed);
        let base: usize = desk.counts.values().sum();
        let counts = desk
            .counts
            .into_iter()
            .map(|(c, n)| (c, (n * total).div_ceil(base)))
            .collect();
        SynthSpec { seed, counts }
    }

    /// 100 founded-by instances, 60 in the seed constructions and 40 in
    /// lexical variants, plus exactly 1000 typed ORG/PER negative pairs.
    pub fn extraction_eval(seed: u64) -> Self {
        use Construction::*;
        SynthSpec::new(
            seed,
            [
                (FoundedActive, 20),
                (FoundedPassive, 20),
                (FoundedPossessive, 20),
                (FoundedActiveVariant, 14),
                (FoundedPassiveVariant, 13),
                (FoundedPossessiveVariant, 13),
                (TwoClause, 200),
                (Joined, 70),
                (Visited, 65),
                (Hired, 65),
            ],
        )
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

const FIRST: &[&str] = &[
    "Mary", "John", "Paul", "Alice", "Bob", "Carol", "David", "Erin", "Frank", "Grace", "Heidi", "Ivan", "Judy",
    "Karl", "Laura", "Mallory", "Nina", "Oscar", "Peggy", "Quinn", "Rupert", "Sybil", "Trent", "Ursula", "Victor",
    "Walter", "Xena", "Yusuf", "Zoe",
];
const LAST: &[&str] = &[
    "Allen", "Smith", "Jones", "Garcia", "Miller", "Davis", "Lopez", "Wilson", "Moore", "Taylor", "Clark", "Lewis",
    "Walker", "Young", "King", "Wright", "Hill", "Scott", "Green", "Baker",
];
const ORGS: &[&str] = &[
    "Microsoft", "Acme", "Globex", "Initech", "Umbrella", "Hooli", "Vandelay", "Wonka", "Stark", "Wayne", "Cyberdyne",
    "Tyrell", "Soylent", "Massive", "Gringotts", "Oscorp", "Pied", "Aperture", "Monarch", "Nakatomi",
];
const ORG_SUFFIX: &[&str] = &["Corp", "Labs", "Systems", "Group", "Industries"];
const CITIES: &[&str] = &["London", "Paris", "Berlin", "Madrid", "Rome", "Vienna", "Oslo", "Lisbon", "Dublin", "Prague"];
const MONTHS: &[&str] = &["January", "March", "April", "June", "August", "October", "December"];

struct Builder {
    tokens: Vec<Token>,
}

struct Entity {
    span: Span,
    head: usize,
}

impl Builder {
    fn new() -> Self {
        Builder { tokens: Vec::new() }
    }

    fn word(&mut self, word: &str, lemma: &str, pos: &str) -> usize {
        let index = self.tokens.len();
        self.tokens.push(Token {
            index,
            word: word.to_string(),
            lemma: lemma.to_string(),
            pos: pos.to_string(),
            entity_tag: "O".to_string(),
            head: None,
            dep_label: "root".to_string(),
        });
        index
    }

    /// Pushes a mention. `head_at` picks the head inside the mention; other
    /// tokens attach to it with `inner`.
    fn entity(&mut self, words: &[String], ty: &str, pos: &str, head_at: usize, inner: &str) -> Entity {
        let start = self.tokens.len();
        for (i, w) in words.iter().enumerate() {
            let t = self.word(w, w, pos);
            self.tokens[t].entity_tag = format!("{}-{ty}", if i == 0 { "B" } else { "I" });
        }
        let head = start + head_at;
        for t in start..start + words.len() {
            if t != head {
                self.attach(t, head, inner);
            }
        }
        Entity { span: Span::new(start, start + words.len() - 1), head }
    }

    fn attach(&mut self, child: usize, head: usize, label: &str) {
        self.tokens[child].head = Some(head);
        self.tokens[child].dep_label = label.to_string();
    }

    fn finish(self, id: String) -> Sentence {
        Sentence { id, tokens: self.tokens, source: Some("synthetic".to_string()) }
    }
}

struct Names<'r> {
    rng: &'r mut ChaCha8Rng,
}

impl Names<'_> {
    fn person(&mut self) -> Vec<String> {
        let first = FIRST.choose(self.rng).unwrap().to_string();
        if self.rng.gen_bool(0.35) {
            vec![first, LAST.choose(self.rng).unwrap().to_string()]
        } else {
            vec![first]
        }
    }

    fn org(&mut self) -> Vec<String> {
        let name = ORGS.choose(self.rng).unwrap().to_string();
        if self.rng.gen_bool(0.3) {
            vec![name, ORG_SUFFIX.choose(self.rng).unwrap().to_string()]
        } else {
            vec![name]
        }
    }

    fn city(&mut self) -> Vec<String> {
        vec![CITIES.choose(self.rng).unwrap().to_string()]
    }

    fn year(&mut self) -> String {
        self.rng.gen_range(1900..2020).to_string()
    }

    /// Either `1975` or `April 1975`; the month heads the two-token form.
    fn date(&mut self) -> Vec<String> {
        if self.rng.gen_bool(0.4) {
            vec![MONTHS.choose(self.rng).unwrap().to_string(), self.year()]
        } else {
            vec![self.year()]
        }
    }

    fn pick<'a>(&mut self, options: &[&'a str]) -> &'a str {
        options.choose(self.rng).unwrap()
    }
}

fn person(b: &mut Builder, n: &mut Names<'_>) -> Entity {
    let words = n.person();
    let last = words.len() - 1;
    b.entity(&words, "PER", "NNP", last, "nn")
}

fn org(b: &mut Builder, n: &mut Names<'_>) -> Entity {
    let words = n.org();
    let last = words.len() - 1;
    b.entity(&words, "ORG", "NNP", last, "nn")
}

fn date(b: &mut Builder, n: &mut Names<'_>) -> Entity {
    let words = n.date();
    b.entity(&words, "DATE", "CD", 0, "num")
}

fn city(b: &mut Builder, n: &mut Names<'_>) -> Entity {
    let words = n.city();
    b.entity(&words, "LOC", "NNP", 0, "nn")
}

fn verb_lemma(verb: &str) -> &str {
    match verb {
        "founded" => "found",
        "co-founded" => "co-found",
        "established" => "establish",
        "started" => "start",
        "married" => "marry",
        "divorced" => "divorce",
        "died" => "die",
        "perished" => "perish",
        "succumbed" => "succumb",
        other => other,
    }
}

struct Built {
    sentence: Sentence,
    facts: Vec<(&'static str, Span, Span, bool)>,
}

fn build(construction: Construction, id: String, n: &mut Names<'_>) -> Built {
    use Construction::*;
    let mut b = Builder::new();
    let mut facts = Vec::new();
    match construction {
        FoundedActive | FoundedActiveVariant | FoundedWithPartner => {
            let verb = match construction {
                FoundedActiveVariant => n.pick(&["co-founded", "established", "started"]),
                _ => "founded",
            };
            let subj = person(&mut b, n);
            let v = b.word(verb, verb_lemma(verb), "VBD");
            let obj = org(&mut b, n);
            b.attach(subj.head, v, "nsubj");
            b.attach(obj.head, v, "dobj");
            if construction == FoundedWithPartner {
                let with = b.word("with", "with", "IN");
                b.attach(with, v, "prep");
                let partner = person(&mut b, n);
                b.attach(partner.head, with, "pobj");
            } else if n.rng.gen_bool(0.3) {
                let p = b.word("in", "in", "IN");
                b.attach(p, v, "prep");
                let d = date(&mut b, n);
                b.attach(d.head, p, "pobj");
            }
            let dot = b.word(".", ".", ".");
            b.attach(dot, v, "punct");
            facts.push((FOUNDED_BY, obj.span, subj.span, verb == "founded"));
        }
        FoundedPassive | FoundedPassiveVariant => {
            let verb = match construction {
                FoundedPassiveVariant => n.pick(&["co-founded", "established", "started"]),
                _ => "founded",
            };
            let subj = org(&mut b, n);
            let was = b.word("was", "be", "VBD");
            let v = b.word(verb, verb_lemma(verb), "VBN");
            let by = b.word("by", "by", "IN");
            let agent = person(&mut b, n);
            let dot = b.word(".", ".", ".");
            b.attach(subj.head, v, "nsubjpass");
            b.attach(was, v, "auxpass");
            b.attach(by, v, "prep");
            b.attach(agent.head, by, "pobj");
            b.attach(dot, v, "punct");
            facts.push((FOUNDED_BY, subj.span, agent.span, verb == "founded"));
        }
        FoundedPossessive | FoundedPossessiveVariant => {
            let noun = match construction {
                FoundedPossessiveVariant => n.pick(&["co-founder", "creator"]),
                _ => "founder",
            };
            let owner = org(&mut b, n);
            let s = b.word("'s", "'s", "POS");
            let title = b.word(noun, noun, "NN");
            let who = person(&mut b, n);
            let spoke = b.word("spoke", "speak", "VBD");
            let dot = b.word(".", ".", ".");
            b.attach(s, owner.head, "possessive");
            b.attach(owner.head, title, "poss");
            b.attach(title, who.head, "nn");
            b.attach(who.head, spoke, "nsubj");
            b.attach(dot, spoke, "punct");
            facts.push((FOUNDED_BY, owner.span, who.span, noun == "founder"));
        }
        Joined | Hired => {
            let (verb, lemma) = if construction == Joined { ("joined", "join") } else { ("hired", "hire") };
            let subj = if construction == Joined { person(&mut b, n) } else { org(&mut b, n) };
            let v = b.word(verb, lemma, "VBD");
            let obj = if construction == Joined { org(&mut b, n) } else { person(&mut b, n) };
            let dot = b.word(".", ".", ".");
            b.attach(subj.head, v, "nsubj");
            b.attach(obj.head, v, "dobj");
            b.attach(dot, v, "punct");
        }
        Visited => {
            let subj = person(&mut b, n);
            let v = b.word("visited", "visit", "VBD");
            let obj = org(&mut b, n);
            let p = b.word("in", "in", "IN");
            let d = date(&mut b, n);
            let dot = b.word(".", ".", ".");
            b.attach(subj.head, v, "nsubj");
            b.attach(obj.head, v, "dobj");
            b.attach(p, v, "prep");
            b.attach(d.head, p, "pobj");
            b.attach(dot, v, "punct");
        }
        TwoClause => {
            let s1 = person(&mut b, n);
            let v1 = b.word("praised", "praise", "VBD");
            let o1 = org(&mut b, n);
            let comma = b.word(",", ",", ",");
            let and = b.word("and", "and", "CC");
            let s2 = person(&mut b, n);
            let v2 = b.word("criticized", "criticize", "VBD");
            let o2 = org(&mut b, n);
            let dot = b.word(".", ".", ".");
            b.attach(s1.head, v1, "nsubj");
            b.attach(o1.head, v1, "dobj");
            b.attach(comma, v1, "punct");
            b.attach(and, v1, "cc");
            b.attach(v2, v1, "conj");
            b.attach(s2.head, v2, "nsubj");
            b.attach(o2.head, v2, "dobj");
            b.attach(dot, v1, "punct");
        }
        SpouseMarried | SpouseVariant => {
            let verb = match construction {
                SpouseVariant => n.pick(&["divorced", "wed"]),
                _ => "married",
            };
            let a = person(&mut b, n);
            let v = b.word(verb, verb_lemma(verb), "VBD");
            let c = person(&mut b, n);
            let dot = b.word(".", ".", ".");
            b.attach(a.head, v, "nsubj");
            b.attach(c.head, v, "dobj");
            b.attach(dot, v, "punct");
            facts.push((SPOUSE, a.span, c.span, verb == "married"));
        }
        DeathDate | DeathDateVariant | DeathPlace => {
            let verb = match construction {
                DeathDateVariant => n.pick(&["perished", "succumbed"]),
                _ => "died",
            };
            let who = person(&mut b, n);
            let v = b.word(verb, verb_lemma(verb), "VBD");
            b.attach(who.head, v, "nsubj");
            if construction == DeathPlace {
                let p = b.word("in", "in", "IN");
                let place = city(&mut b, n);
                b.attach(p, v, "prep");
                b.attach(place.head, p, "pobj");
                facts.push((PLACE_OF_DEATH, who.span, place.span, true));
            }
            let p = b.word("in", "in", "IN");
            let when = date(&mut b, n);
            let dot = b.word(".", ".", ".");
            b.attach(p, v, "prep");
            b.attach(when.head, p, "pobj");
            b.attach(dot, v, "punct");
            facts.push((DATE_OF_DEATH, who.span, when.span, verb == "died"));
        }
        Filler => {
            let the = b.word("The", "the", "DT");
            let weather = b.word("weather", "weather", "NN");
            let was = b.word("was", "be", "VBD");
            let nice = b.word("nice", "nice", "JJ");
            let dot = b.word(".", ".", ".");
            b.attach(the, weather, "det");
            b.attach(weather, nice, "nsubj");
            b.attach(was, nice, "cop");
            b.attach(dot, nice, "punct");
        }
    }
    Built { sentence: b.finish(id), facts }
}

/// Generates the corpus. Sentence order is a seeded shuffle of the
/// requested constructions; ids are `syn000001`, `syn000002`, ...
pub fn generate(spec: &SynthSpec) -> SynthCorpus {
    let mut rng = sampling::rng(spec.seed);
    let mut plan: Vec<Construction> = spec
        .counts
        .iter()
        .flat_map(|(&c, &k)| std::iter::repeat_n(c, k))
        .collect();
    plan.shuffle(&mut rng);
    let mut names = Names { rng: &mut rng };
    let mut sentences = Vec::with_capacity(plan.len());
    let mut facts = Vec::new();
    for (i, construction) in plan.into_iter().enumerate() {
        let id = format!("syn{:06}", i + 1);
        let built = build(construction, id.clone(), &mut names);
        debug_assert!(built.sentence.validate().is_ok(), "{construction:?}");
        for (relation, e1, e2, canonical) in built.facts {
            facts.push(PlantedFact {
                sentence_id: id.clone(),
                relation: relation.to_string(),
                e1,
                e2,
                construction,
                canonical,
            });
        }
        sentences.push(built.sentence);
    }
    SynthCorpus { sentences, facts }
}

impl SynthCorpus {
    pub fn facts_for<'a>(&'a self, relation: &'a str) -> impl Iterator<Item = &'a PlantedFact> + 'a {
        self.facts.iter().filter(move |f| f.relation == relation)
    }

    /// Ordered mention pairs typed `(e1_types, e2_types)` that are not
    /// planted instances of `relation`, as `(sentence index, e1, e2)`.
    pub fn typed_non_facts(&self, relation: &str, e1_types: &[&str], e2_types: &[&str]) -> Vec<(usize, Span, Span)> {
        let facts: std::collections::HashSet<(&str, Span, Span)> = self
            .facts_for(relation)
            .map(|f| (f.sentence_id.as_str(), f.e1, f.e2))
            .collect();
        let mut out = Vec::new();
        for (i, s) in self.sentences.iter().enumerate() {
            let mentions = s.mentions();
            for a in &mentions {
                for b in &mentions {
                    if a.span == b.span
                        || !e1_types.contains(&a.entity_type.as_str())
                        || !e2_types.contains(&b.entity_type.as_str())
                    {
                        continue;
                    }
                    if !facts.contains(&(s.id.as_str(), a.span, b.span)) {
                        out.push((i, a.span, b.span));
                    }
                }
            }
        }
        out
    }
}
