//! Deterministic toy corpora: monolingual English, German and Japanese text
//! and an English-German parallel corpus with optional injected noise.
//!
//! Sentences come from a small template grammar. German is produced word by
//! word from the English with article agreement and verb-second adverb
//! placement, so lexical models have something real to learn.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::types::SentencePair;

/// (English, German, German gender 0=m 1=f 2=n, Japanese)
const NOUNS: &[(&str, &str, u8, &str)] = &[
    ("man", "Mann", 0, "男"),
    ("woman", "Frau", 1, "女性"),
    ("child", "Kind", 2, "子供"),
    ("dog", "Hund", 0, "犬"),
    ("cat", "Katze", 1, "猫"),
    ("house", "Haus", 2, "家"),
    ("car", "Auto", 2, "車"),
    ("book", "Buch", 2, "本"),
    ("city", "Stadt", 1, "町"),
    ("tree", "Baum", 0, "木"),
    ("river", "Fluss", 0, "川"),
    ("table", "Tisch", 0, "机"),
    ("letter", "Brief", 0, "手紙"),
    ("teacher", "Lehrer", 0, "先生"),
    ("doctor", "Arzt", 0, "医者"),
    ("friend", "Freund", 0, "友達"),
    ("garden", "Garten", 0, "庭"),
    ("window", "Fenster", 2, "窓"),
    ("door", "Tür", 1, "ドア"),
    ("school", "Schule", 1, "学校"),
    ("train", "Zug", 0, "電車"),
    ("bread", "Brot", 2, "パン"),
    ("water", "Wasser", 2, "水"),
    ("apple", "Apfel", 0, "りんご"),
    ("street", "Straße", 1, "道"),
    ("bird", "Vogel", 0, "鳥"),
    ("fox", "Fuchs", 0, "狐"),
    ("king", "König", 0, "王様"),
    ("song", "Lied", 2, "歌"),
    ("mountain", "Berg", 0, "山"),
    ("flower", "Blume", 1, "花"),
    ("student", "Student", 0, "学生"),
    ("computer", "Rechner", 0, "コンピューター"),
    ("company", "Firma", 1, "会社"),
    ("market", "Markt", 0, "市場"),
    ("report", "Bericht", 0, "報告書"),
    ("question", "Frage", 1, "質問"),
    ("answer", "Antwort", 1, "答え"),
    ("picture", "Bild", 2, "写真"),
    ("kitchen", "Küche", 1, "台所"),
    ("village", "Dorf", 2, "村"),
    ("island", "Insel", 1, "島"),
    ("ship", "Schiff", 2, "船"),
    ("money", "Geld", 2, "お金"),
    ("milk", "Milch", 1, "牛乳"),
    ("coffee", "Kaffee", 0, "コーヒー"),
    ("newspaper", "Zeitung", 1, "新聞"),
    ("government", "Regierung", 1, "政府"),
];

const ADJECTIVES: &[(&str, &str, &str)] = &[
    ("big", "große", "大きい"),
    ("small", "kleine", "小さい"),
    ("old", "alte", "古い"),
    ("new", "neue", "新しい"),
    ("red", "rote", "赤い"),
    ("quick", "schnelle", "速い"),
    ("brown", "braune", "茶色の"),
    ("green", "grüne", "緑の"),
    ("happy", "glückliche", "幸せな"),
    ("quiet", "ruhige", "静かな"),
    ("beautiful", "schöne", "美しい"),
    ("young", "junge", "若い"),
    ("dark", "dunkle", "暗い"),
    ("cold", "kalte", "冷たい"),
    ("warm", "warme", "暖かい"),
    ("long", "lange", "長い"),
    ("white", "weiße", "白い"),
    ("lazy", "faule", "怠惰な"),
    ("strange", "seltsame", "奇妙な"),
    ("famous", "berühmte", "有名な"),
];

const VERBS: &[(&str, &str, &str)] = &[
    ("sees", "sieht", "見る"),
    ("finds", "findet", "見つける"),
    ("buys", "kauft", "買う"),
    ("reads", "liest", "読む"),
    ("opens", "öffnet", "開ける"),
    ("carries", "trägt", "運ぶ"),
    ("paints", "malt", "描く"),
    ("visits", "besucht", "訪れる"),
    ("loves", "liebt", "愛する"),
    ("builds", "baut", "建てる"),
    ("sells", "verkauft", "売る"),
    ("washes", "wäscht", "洗う"),
    ("writes", "schreibt", "書く"),
    ("needs", "braucht", "必要とする"),
    ("jumps over", "springt über", "飛び越える"),
];

const ADVERBS: &[(&str, &str, &str)] = &[
    ("today", "heute", "今日"),
    ("often", "oft", "よく"),
    ("slowly", "langsam", "ゆっくり"),
    ("again", "wieder", "また"),
    ("yesterday", "gestern", "昨日"),
    ("gladly", "gern", "喜んで"),
    ("rarely", "selten", "めったに"),
];

const JA_TIMES: &[&str] = &["昨日の朝", "今日の午後", "毎週の日曜日", "去年の夏", "先月の終わり", "明日の夕方"];

fn article(gender: u8, case: usize) -> &'static str {
    // nominative, accusative, dative
    const TABLE: [[&str; 3]; 3] = [["der", "den", "dem"], ["die", "die", "der"], ["das", "das", "dem"]];
    TABLE[gender as usize][case]
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// One sampled sentence meaning.
struct Clause {
    subj: usize,
    subj_adj: Option<usize>,
    verb: usize,
    obj: usize,
    obj_adj: Option<usize>,
    adverb: Option<usize>,
    with: Option<usize>,
    hour: Option<u32>,
}

impl Clause {
    fn sample<R: Rng>(rng: &mut R) -> Self {
        Self::sample_from(rng, (NOUNS.len(), ADJECTIVES.len(), VERBS.len()))
    }

    /// Draws from the first `(nouns, adjectives, verbs)` vocabulary entries.
    fn sample_from<R: Rng>(rng: &mut R, (nouns, adjs, verbs): (usize, usize, usize)) -> Self {
        let maybe = |rng: &mut R, p: f64, n: usize| rng.gen_bool(p).then(|| rng.gen_range(0..n));
        Clause {
            subj: rng.gen_range(0..nouns),
            subj_adj: maybe(rng, 0.6, adjs),
            verb: rng.gen_range(0..verbs),
            obj: rng.gen_range(0..nouns),
            obj_adj: maybe(rng, 0.5, adjs),
            adverb: maybe(rng, 0.5, ADVERBS.len()),
            with: maybe(rng, 0.4, nouns),
            hour: rng.gen_bool(0.3).then(|| rng.gen_range(1..=12)),
        }
    }

    fn english(&self) -> String {
        let mut w: Vec<&str> = vec!["the"];
        w.extend(self.subj_adj.map(|a| ADJECTIVES[a].0));
        w.push(NOUNS[self.subj].0);
        w.push(VERBS[self.verb].0);
        w.push("the");
        w.extend(self.obj_adj.map(|a| ADJECTIVES[a].0));
        w.push(NOUNS[self.obj].0);
        if let Some(n) = self.with {
            w.extend(["with", "the", NOUNS[n].0]);
        }
        let hour = self.hour.map(|h| h.to_string());
        if let Some(h) = &hour {
            w.extend(["at", h, "o'clock"]);
        }
        w.extend(self.adverb.map(|a| ADVERBS[a].0));
        w.push(".");
        capitalize(&w.join(" "))
    }

    fn german(&self) -> String {
        let (_, subj, sg, _) = NOUNS[self.subj];
        let (_, obj, og, _) = NOUNS[self.obj];
        let mut w: Vec<&str> = vec![article(sg, 0)];
        w.extend(self.subj_adj.map(|a| ADJECTIVES[a].1));
        w.push(subj);
        let (verb, particle) = match VERBS[self.verb].1.split_once(' ') {
            Some((v, p)) => (v, Some(p)),
            None => (VERBS[self.verb].1, None),
        };
        w.push(verb);
        // the adverb follows the finite verb
        w.extend(self.adverb.map(|a| ADVERBS[a].1));
        w.extend(particle);
        w.push(article(og, 1));
        // masculine accusative: "den großen Hund"
        let obj_adj = self.obj_adj.map(|a| if og == 0 { format!("{}n", ADJECTIVES[a].1) } else { ADJECTIVES[a].1.to_owned() });
        w.extend(obj_adj.as_deref());
        w.push(obj);
        if let Some(n) = self.with {
            let (_, noun, g, _) = NOUNS[n];
            w.extend(["mit", article(g, 2), noun]);
        }
        let hour = self.hour.map(|h| h.to_string());
        if let Some(h) = &hour {
            w.extend(["um", h, "Uhr"]);
        }
        w.push(".");
        capitalize(&w.join(" "))
    }

    fn japanese<R: Rng>(&self, rng: &mut R) -> String {
        let mut s = String::new();
        s.push_str(JA_TIMES.choose(rng).unwrap());
        s.push('、');
        if let Some(a) = self.subj_adj {
            s.push_str(ADJECTIVES[a].2);
        }
        s.push_str(NOUNS[self.subj].3);
        s.push('は');
        if let Some(n) = self.with {
            s.push_str(NOUNS[n].3);
            s.push_str("と一緒に");
        }
        if let Some(a) = self.adverb {
            s.push_str(ADVERBS[a].2);
        }
        if let Some(a) = self.obj_adj {
            s.push_str(ADJECTIVES[a].2);
        }
        s.push_str(NOUNS[self.obj].3);
        s.push('を');
        s.push_str(VERBS[self.verb].2);
        s.push_str("そうです。");
        s
    }
}

/// Shortest sentence the monolingual generators emit, in characters.
pub const MIN_CHARS: usize = 20;

/// `n` sentences in `lang` (`en`, `de` or `ja`), each at least
/// [`MIN_CHARS`] characters long.
pub fn monolingual(lang: &str, n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let c = Clause::sample(&mut rng);
        let s = match lang {
            "en" => c.english(),
            "de" => c.german(),
            "ja" => c.japanese(&mut rng),
            other => panic!("no toy generator for language `{other}`"),
        };
        if s.chars().count() >= MIN_CHARS {
            out.push(s);
        }
    }
    out
}

/// Vocabulary prefix `(nouns, adjectives, verbs)` of the in-domain topic.
pub const TOPIC: (usize, usize, usize) = (8, 6, 5);

/// Share of [`ToyParallel`] pairs drawn from the topic vocabulary.
pub const TOPIC_SHARE: f64 = 0.2;

/// German sentences about the in-domain topic only.
pub fn in_domain_german(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Clause::sample_from(&mut rng, TOPIC).german()).collect()
}

/// `(text, lang)` rows, `n` per language, languages interleaved.
pub fn langid_corpus(n: usize, seed: u64) -> Vec<(String, String)> {
    let langs = ["de", "en", "ja"];
    let per: Vec<Vec<String>> = langs.iter().enumerate().map(|(k, l)| monolingual(l, n, seed.wrapping_add(k as u64))).collect();
    (0..n).flat_map(|i| langs.iter().zip(&per).map(move |(l, v)| (v[i].clone(), l.to_string()))).collect()
}

/// English-German word pairs usable as an alignment dictionary.
pub fn dictionary() -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (en, de, g, _) in NOUNS {
        out.push((en.to_string(), de.to_string()));
        out.push(("the".to_string(), article(*g, 0).to_string()));
    }
    for (en, de, _) in ADJECTIVES.iter().chain(VERBS).chain(ADVERBS) {
        for (e, d) in en.split(' ').zip(de.split(' ')) {
            out.push((e.to_string(), d.to_string()));
        }
    }
    out.sort();
    out.dedup();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Noise {
    /// Target belongs to an unrelated sentence.
    Misaligned,
    /// Target keeps less than half of its words.
    Truncated,
    /// Target is a bag of random German words.
    Salad,
}

#[derive(Debug, Clone)]
pub struct NoisyCorpus {
    pub pairs: Vec<SentencePair>,
    /// `true` for clean pairs.
    pub labels: Vec<bool>,
    pub noise: Vec<Option<Noise>>,
}

#[derive(Debug, Clone, Copy)]
pub struct ToyParallel {
    seed: u64,
}

impl ToyParallel {
    pub fn new(seed: u64) -> Self {
        ToyParallel { seed }
    }

    fn pair<R: Rng>(rng: &mut R, id: u64) -> SentencePair {
        let c = if rng.gen_bool(TOPIC_SHARE) { Clause::sample_from(rng, TOPIC) } else { Clause::sample(rng) };
        SentencePair::new(id, c.english(), c.german())
    }

    /// `n` translation pairs with ids `0..n`.
    pub fn clean_pairs(&self, n: usize) -> Vec<SentencePair> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..n as u64).map(|id| Self::pair(&mut rng, id)).collect()
    }

    /// `n` pairs of which `round(n * noise_rate)` are corrupted.
    pub fn noisy(&self, n: usize, noise_rate: f64) -> NoisyCorpus {
        let mut pairs = self.clean_pairs(n);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x6e6f697379);
        let k = ((n as f64 * noise_rate).round() as usize).min(n);
        let mut positions = index::sample(&mut rng, n, k).into_vec();
        positions.sort_unstable();
        let mut labels = vec![true; n];
        let mut noise = vec![None; n];
        let german: Vec<&str> = NOUNS
            .iter()
            .map(|x| x.1)
            .chain(ADJECTIVES.iter().chain(VERBS).chain(ADVERBS).map(|x| x.1))
            .collect();
        for i in positions {
            let kind = [Noise::Misaligned, Noise::Truncated, Noise::Salad][rng.gen_range(0..3)];
            let target = &mut pairs[i].target;
            match kind {
                Noise::Misaligned => *target = Self::pair(&mut rng, 0).target,
                Noise::Truncated => {
                    let words: Vec<&str> = target.split(' ').collect();
                    let keep = rng.gen_range(1..=(words.len() * 2 / 5).max(1));
                    *target = words[..keep].join(" ");
                }
                Noise::Salad => {
                    let len = target.split(' ').count();
                    let words: Vec<&str> = (0..len).map(|_| *german.choose(&mut rng).unwrap()).collect();
                    *target = words.join(" ");
                }
            }
            labels[i] = false;
            noise[i] = Some(kind);
        }
        NoisyCorpus { pairs, labels, noise }
    }
}

/// Seeds and sizes of the shipped fixture set.
pub const FIXTURE_SEED: u64 = 20_240_601;
pub const FIXTURE_LANGID_TRAIN: usize = 1000;
pub const FIXTURE_LANGID_TEST: usize = 200;
pub const FIXTURE_PAIRS: usize = 5000;
pub const FIXTURE_NOISE: f64 = 0.24;
pub const FIXTURE_IN_DOMAIN: usize = 2000;

/// Relative paths and contents of the fixture set.
pub fn fixture_files() -> Vec<(&'static str, String)> {
    let tsv = |rows: &[(String, String)]| rows.iter().map(|(a, b)| format!("{a}\t{b}\n")).collect::<String>();
    let lines = |rows: &[String]| rows.iter().map(|r| format!("{r}\n")).collect::<String>();
    let train = langid_corpus(FIXTURE_LANGID_TRAIN, FIXTURE_SEED);
    let test = langid_corpus(FIXTURE_LANGID_TEST, FIXTURE_SEED + 10);
    let noisy = ToyParallel::new(FIXTURE_SEED).noisy(FIXTURE_PAIRS, FIXTURE_NOISE);
    let bitext: Vec<(String, String)> = noisy.pairs.iter().map(|p| (p.source.clone(), p.target.clone())).collect();
    let targets: Vec<String> = noisy.pairs.iter().map(|p| p.target.clone()).collect();
    let labels: Vec<(String, String)> =
        noisy.labels.iter().enumerate().map(|(i, l)| (i.to_string(), u8::from(*l).to_string())).collect();
    vec![
        ("langid/train.tsv", tsv(&train)),
        ("langid/test.tsv", tsv(&test)),
        ("parallel/noisy.tsv", tsv(&bitext)),
        ("parallel/labels.tsv", tsv(&labels)),
        ("lm/in_domain.de.txt", lines(&in_domain_german(FIXTURE_IN_DOMAIN, FIXTURE_SEED + 20))),
        ("lm/non_domain.de.txt", lines(&targets)),
        ("align/dict.tsv", tsv(&dictionary())),
    ]
}
