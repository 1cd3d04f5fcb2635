//! Seeded synthetic corpora shared by the CLI and acceptance tests.
#![allow(dead_code)]

use std::collections::HashSet;

use rand::rngs::StdRng;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, LogNormal, Normal, Zipf};
use turnkit::mining::normalized_levenshtein;
use turnkit::model::{CorpusTable, Turn};

pub const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mi", "ne", "ru", "sa", "to", "vi", "pe", "da", "gu", "ho", "ji", "ze", "bo", "fa", "wu", "ye",
    "xi", "qo", "ta", "li", "mo", "nu",
];

/// A pseudo-word sentence of 3 to 6 words.
pub fn sentence(rng: &mut StdRng) -> String {
    let n = rng.random_range(3..=6);
    (0..n)
        .map(|_| {
            let k = rng.random_range(1..=3);
            (0..k).map(|_| *SYLLABLES.choose(rng).unwrap()).collect::<String>()
        })
        .collect::<Vec<_>>()
        .join(" ")
}

struct Builder {
    turns: Vec<Turn>,
    clock: i64,
    source: String,
}

impl Builder {
    fn new(source: &str) -> Self {
        Builder { turns: Vec::new(), clock: 0, source: source.to_string() }
    }

    fn say(&mut self, rng: &mut StdRng, who: &str, text: &str) {
        self.clock += rng.random_range(100..800);
        let dur = rng.random_range(300..2500);
        let uid = format!("{}_{:06}", self.source, self.turns.len());
        self.turns.push(Turn::new(uid, self.clock, self.clock + dur, who, text, self.source.clone()));
        self.clock += dur;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Planted {
    pub mhm_continuer: usize,
    pub huh_repair: usize,
}

/// Dyadic corpus with 30 continuer triples around "mhm", 10 repair
/// triples around "huh?" and recurrent distractors: "yeah" (weaker
/// continuer), "what" (weaker repair), "okay" (split evenly) and "uh"
/// (only ever flanked by itself, so never in a context).
pub fn planted_corpus(seed: u64) -> (CorpusTable, Planted) {
    let mut rng = StdRng::seed_from_u64(seed);
    #[derive(Clone, Copy)]
    enum Block {
        Continuer(&'static str),
        Repair(&'static str),
        Filler,
    }
    let mut blocks = Vec::new();
    blocks.extend(std::iter::repeat_n(Block::Continuer("mhm"), 30));
    blocks.extend(std::iter::repeat_n(Block::Repair("huh?"), 10));
    blocks.extend(std::iter::repeat_n(Block::Continuer("yeah"), rng.random_range(5..=12)));
    blocks.extend(std::iter::repeat_n(Block::Repair("what?"), rng.random_range(5..=8)));
    blocks.extend(std::iter::repeat_n(Block::Continuer("okay"), 4));
    blocks.extend(std::iter::repeat_n(Block::Repair("okay"), 4));
    blocks.extend(std::iter::repeat_n(Block::Filler, 4));
    blocks.shuffle(&mut rng);

    let mut used = HashSet::new();
    let mut fresh = |rng: &mut StdRng| loop {
        let s = sentence(rng);
        if used.insert(s.clone()) {
            return s;
        }
    };
    let mut b = Builder::new(&format!("planted{seed}"));
    for block in blocks {
        let (x, y) = if rng.random_bool(0.5) { ("A", "B") } else { ("B", "A") };
        match block {
            Block::Continuer(item) => {
                let first = fresh(&mut rng);
                let second = loop {
                    let s = fresh(&mut rng);
                    if normalized_levenshtein(&first, &s) >= 0.2 {
                        break s;
                    }
                };
                b.say(&mut rng, x, &first);
                b.say(&mut rng, y, item);
                b.say(&mut rng, x, &second);
            }
            Block::Repair(item) => {
                let s = fresh(&mut rng);
                b.say(&mut rng, x, &s);
                b.say(&mut rng, y, item);
                b.say(&mut rng, x, &s);
            }
            Block::Filler => {
                b.say(&mut rng, x, "uh");
                b.say(&mut rng, y, "uh");
                b.say(&mut rng, x, "uh");
            }
        }
    }
    let table = CorpusTable::new(format!("planted{seed}"), "", b.turns).unwrap();
    (table, Planted { mhm_continuer: 30, huh_repair: 10 })
}

/// Turns whose durations follow `dist`, with short pseudo-word content.
fn duration_corpus(id: &str, seed: u64, n: usize, mut draw: impl FnMut(&mut StdRng) -> f64) -> CorpusTable {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut clock = 0;
    let turns = (0..n)
        .map(|i| {
            let d = draw(&mut rng).round().max(1.0) as i64;
            clock += rng.random_range(0..500);
            let t = Turn::new(format!("{id}_{i:06}"), clock, clock + d, ["A", "B"][i % 2], sentence(&mut rng), id);
            clock += d;
            t
        })
        .collect();
    CorpusTable::new(id, "", turns).unwrap()
}

/// Right-skewed log-normal durations with their mode at 500 ms.
pub fn conversation_like(seed: u64, n: usize) -> CorpusTable {
    let sigma: f64 = 0.45;
    let ln = LogNormal::new(500f64.ln() + sigma * sigma, sigma).unwrap();
    duration_corpus("conversation", seed, n, |r| ln.sample(r))
}

/// Near-symmetric durations centred on 4600 ms.
pub fn asr_like(seed: u64, n: usize) -> CorpusTable {
    let normal = Normal::new(4600.0, 300.0).unwrap();
    duration_corpus("asr", seed, n, |r| normal.sample(r))
}

/// `n_tokens` draws from a Zipf(s) law over `types` word types, packed
/// ten tokens per turn.
pub fn zipf_corpus(seed: u64, types: u64, s: f64, n_tokens: usize) -> CorpusTable {
    let mut rng = StdRng::seed_from_u64(seed);
    let z = Zipf::new(types as f64, s).unwrap();
    let words: Vec<String> = (0..n_tokens).map(|_| format!("w{}", z.sample(&mut rng) as u64)).collect();
    let turns = words
        .chunks(10)
        .enumerate()
        .map(|(i, c)| Turn::new(format!("z{i:06}"), i as i64 * 1000, i as i64 * 1000 + 900, "A", c.join(" "), "zipf"))
        .collect();
    CorpusTable::new("zipf", "", turns).unwrap()
}

/// Alternating two-party corpus where turn `i + 1` starts `gaps[i]` ms
/// after turn `i` ends.
pub fn gap_corpus(gaps: &[i64], shift: i64, rng: &mut StdRng) -> CorpusTable {
    let mut turns = Vec::with_capacity(gaps.len() + 1);
    let mut begin = shift;
    for i in 0..=gaps.len() {
        let dur = rng.random_range(500..3000);
        turns.push(Turn::new(format!("g{i:06}"), begin, begin + dur, ["A", "B"][i % 2], "x", "gaps"));
        if let Some(g) = gaps.get(i) {
            begin = begin + dur + g;
        }
    }
    CorpusTable::new("gaps", "", turns).unwrap()
}

const ADVERSARIAL: [&str; 24] = [
    "\t", "\n", "\r", "\\", "\\t", "\\n", "\"", "'", ",", "#", "# ", " ", "  ", "漢字", "العربية", "ελληνικά",
    "👋🏽", "a", "b", "mhm", "[unk]", "\u{0}", "\u{200b}", "ña",
];

pub fn adversarial_string(rng: &mut StdRng, min_len: usize) -> String {
    let n = rng.random_range(min_len..=6);
    (0..n).map(|_| *ADVERSARIAL.choose(rng).unwrap()).collect()
}

/// Random valid table with hostile field content, extras included.
pub fn random_table(rng: &mut StdRng) -> CorpusTable {
    let n = rng.random_range(0..25);
    let extra_keys = ["translation", "gloss\tx", "note #", "übersetzung", "original_script"];
    let turns = (0..n)
        .map(|i| {
            let b = rng.random_range(0..100_000);
            let mut t = Turn::new(
                format!("{i}:{}", adversarial_string(rng, 0)),
                b,
                b + rng.random_range(0..5000),
                adversarial_string(rng, 1),
                adversarial_string(rng, 1),
                adversarial_string(rng, 0),
            );
            t.utterance_raw = adversarial_string(rng, 0);
            for k in extra_keys {
                if rng.random_bool(0.3) {
                    t.set_extra(k, adversarial_string(rng, 0));
                }
            }
            t
        })
        .collect();
    CorpusTable::new(adversarial_string(rng, 0), adversarial_string(rng, 0), turns).unwrap()
}
