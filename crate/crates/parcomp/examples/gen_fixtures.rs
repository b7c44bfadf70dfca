//! Regenerates the bundled fixtures under `fixtures/`.
//!
//!     cargo run -p parcomp --example gen_fixtures -- fixtures
//!
//! Three sets come out, all from one seed:
//!
//! * `parallel/`: about 3000 English/German rows from a small template
//!   grammar with Zipf-distributed word choice.
//! * `paraphrase/`: 200 English sentences, each with four German renderings
//!   of different difficulty. Each row rotates the renderings across the
//!   four split files by a shuffled offset, so every split holds each
//!   difficulty equally often.
//! * `oracle/`: 20 short sentences per language over a tiny alphabet.

use std::fs;
use std::path::Path;

use parcomp_core::rng::SeededRng;

const SEED: u64 = 20240501;
const PARALLEL_ROWS: usize = 3000;
const PARAPHRASE_ROWS: usize = 200;

// (english, german, rare german synonym)
const SUBJECTS: &[(&str, &str, &str)] = &[
    ("the man", "der Mann", "der Herr"),
    ("the woman", "die Frau", "die Dame"),
    ("the child", "das Kind", "das Kleine"),
    ("the teacher", "der Lehrer", "der Pädagoge"),
    ("my friend", "mein Freund", "mein Kumpel"),
    ("the doctor", "der Arzt", "der Mediziner"),
    ("the farmer", "der Bauer", "der Landwirt"),
    ("the girl", "das Mädchen", "die Kleine"),
    ("our neighbour", "unser Nachbar", "unser Anwohner"),
    ("the student", "der Student", "der Studierende"),
    ("the baker", "der Bäcker", "der Brotmacher"),
    ("the old king", "der alte König", "der betagte Monarch"),
];

const VERBS: &[(&str, &str, &str)] = &[
    ("sees", "sieht", "erblickt"),
    ("buys", "kauft", "erwirbt"),
    ("finds", "findet", "entdeckt"),
    ("likes", "mag", "schätzt"),
    ("has", "hat", "besitzt"),
    ("needs", "braucht", "benötigt"),
    ("builds", "baut", "errichtet"),
    ("sells", "verkauft", "veräußert"),
    ("paints", "malt", "bemalt"),
    ("carries", "trägt", "schleppt"),
];

const OBJECTS: &[(&str, &str, &str)] = &[
    ("a house", "ein Haus", "ein Gebäude"),
    ("the car", "das Auto", "den Wagen"),
    ("a book", "ein Buch", "einen Band"),
    ("the apple", "den Apfel", "das Obst"),
    ("a letter", "einen Brief", "ein Schreiben"),
    ("the garden", "den Garten", "die Grünanlage"),
    ("a chair", "einen Stuhl", "ein Sitzmöbel"),
    ("the bread", "das Brot", "den Laib"),
    ("a small boat", "ein kleines Boot", "einen Kahn"),
    ("the red door", "die rote Tür", "das rote Portal"),
    ("a new bicycle", "ein neues Fahrrad", "einen neuen Drahtesel"),
    ("the old bridge", "die alte Brücke", "den alten Übergang"),
];

const ADVERBS: &[(&str, &str, &str)] = &[
    ("today", "heute", "am heutigen Tag"),
    ("in the morning", "am Morgen", "frühmorgens"),
    ("again", "wieder", "erneut"),
    ("often", "oft", "häufig"),
    ("in the city", "in der Stadt", "im Stadtgebiet"),
    ("at home", "zu Hause", "daheim"),
    ("on sunday", "am Sonntag", "sonntags"),
    ("every year", "jedes Jahr", "alljährlich"),
];

// unusual material for the hardest rendering
const FILLERS: &[&str] = &[
    "ganz ohne Zweifel",
    "wie man so sagt",
    "zur allgemeinen Verwunderung",
    "trotz heftigem Schneeregen",
    "nach reiflicher Überlegung",
    "völlig unerwartet",
];

// English sources sometimes carry a phrase the English model never saw
const EN_FILLER_PERCENT: usize = 40;
const EN_FILLERS: &[&str] = &[
    "without any doubt",
    "as people say",
    "much to everyone's surprise",
    "after careful thought",
];

struct Rng(SeededRng);

impl Rng {
    fn below(&mut self, n: usize) -> usize {
        self.0.below(n as u64) as usize
    }

    fn chance(&mut self, percent: usize) -> bool {
        self.below(100) < percent
    }

    /// Zipf-like: index i with weight 1/(i+1).
    fn zipf(&mut self, n: usize) -> usize {
        let total: f64 = (1..=n).map(|i| 1.0 / i as f64).sum();
        let mut x = (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * total;
        for i in 0..n {
            x -= 1.0 / (i + 1) as f64;
            if x < 0.0 {
                return i;
            }
        }
        n - 1
    }
}

struct Clause {
    s: usize,
    v: usize,
    o: usize,
    a: Option<usize>,
}

fn clause(rng: &mut Rng) -> Clause {
    Clause {
        s: rng.zipf(SUBJECTS.len()),
        v: rng.zipf(VERBS.len()),
        o: rng.zipf(OBJECTS.len()),
        a: rng.chance(60).then(|| rng.zipf(ADVERBS.len())),
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn english(c: &Clause) -> String {
    let mut s = format!("{} {} {}", SUBJECTS[c.s].0, VERBS[c.v].0, OBJECTS[c.o].0);
    if let Some(a) = c.a {
        s = format!("{s} {}", ADVERBS[a].0);
    }
    capitalize(&s) + "."
}

/// `rare` picks the rare synonym column, `inverted` fronts the adverb.
fn german(c: &Clause, rare: bool, inverted: bool) -> String {
    let pick = |t: &(&'static str, &'static str, &'static str)| if rare { t.2 } else { t.1 };
    let (s, v, o) = (pick(&SUBJECTS[c.s]), pick(&VERBS[c.v]), pick(&OBJECTS[c.o]));
    let body = match c.a.map(|a| pick(&ADVERBS[a])) {
        Some(a) if inverted => format!("{a} {v} {s} {o}"),
        Some(a) => format!("{s} {v} {o} {a}"),
        None => format!("{s} {v} {o}"),
    };
    capitalize(&body) + "."
}

fn write_lines(path: &Path, lines: &[String]) {
    let mut text = lines.join("\n");
    text.push('\n');
    fs::write(path, text).unwrap();
}

fn parallel(rng: &mut Rng, dir: &Path) {
    fs::create_dir_all(dir).unwrap();
    let mut en = Vec::new();
    let mut de = Vec::new();
    for _ in 0..PARALLEL_ROWS {
        let c = clause(rng);
        en.push(english(&c));
        // rare synonyms show up now and then, inversion a bit more often
        de.push(german(&c, rng.chance(3), rng.chance(25)));
    }
    write_lines(&dir.join("eng.txt"), &en);
    write_lines(&dir.join("deu.txt"), &de);
    fs::write(
        dir.join("corpus.json"),
        "{\n  \"languages\": [\n    {\"code\": \"eng\", \"path\": \"eng.txt\"},\n    {\"code\": \"deu\", \"path\": \"deu.txt\"}\n  ]\n}\n",
    )
    .unwrap();
}

fn paraphrase(rng: &mut Rng, dir: &Path) {
    fs::create_dir_all(dir).unwrap();
    let mut en = Vec::new();
    let mut splits = vec![Vec::new(); 4];
    // each split receives every rendering style equally often
    let mut shifts: Vec<usize> = (0..PARAPHRASE_ROWS).map(|j| j % 4).collect();
    for i in (1..shifts.len()).rev() {
        shifts.swap(i, rng.below(i + 1));
    }
    for &shift in &shifts {
        let mut c = clause(rng);
        if c.a.is_none() {
            c.a = Some(rng.zipf(ADVERBS.len()));
        }
        let mut e = english(&c);
        if rng.chance(EN_FILLER_PERCENT) {
            e = format!(
                "{} {}.",
                e.trim_end_matches('.'),
                EN_FILLERS[rng.below(EN_FILLERS.len())]
            );
        }
        en.push(e);
        let filler = FILLERS[rng.below(FILLERS.len())];
        let variants = [
            german(&c, false, false),
            german(&c, false, true),
            german(&c, true, false),
            format!("{} {filler}.", german(&c, true, true).trim_end_matches('.')),
        ];
        for (i, split) in splits.iter_mut().enumerate() {
            split.push(variants[(i + shift) % 4].clone());
        }
    }
    write_lines(&dir.join("eng.txt"), &en);
    for (i, s) in splits.iter().enumerate() {
        write_lines(&dir.join(format!("DE{}.txt", i + 1)), s);
    }
    let splits_json: Vec<String> = (1..=4)
        .map(|i| format!("    {{\"name\": \"DE{i}\", \"path\": \"DE{i}.txt\"}}"))
        .collect();
    fs::write(
        dir.join("paraphrases.json"),
        format!(
            "{{\n  \"source\": {{\"code\": \"eng\", \"path\": \"eng.txt\"}},\n  \"target\": \"deu\",\n  \"splits\": [\n{}\n  ]\n}}\n",
            splits_json.join(",\n")
        ),
    )
    .unwrap();
}

fn oracle(rng: &mut Rng, dir: &Path) {
    fs::create_dir_all(dir).unwrap();
    let alphabets = [("eng", "abcdehilnorst"), ("deu", "abdehilmnrstuä")];
    for (code, alphabet) in alphabets {
        let letters: Vec<char> = alphabet.chars().collect();
        let lines: Vec<String> = (0..20)
            .map(|_| {
                let words = 1 + rng.below(4);
                (0..words)
                    .map(|_| {
                        (0..1 + rng.below(5))
                            .map(|_| letters[rng.zipf(letters.len())])
                            .collect::<String>()
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        write_lines(&dir.join(format!("{code}.txt")), &lines);
    }
    fs::write(
        dir.join("corpus.json"),
        "{\n  \"languages\": [\n    {\"code\": \"eng\", \"path\": \"eng.txt\"},\n    {\"code\": \"deu\", \"path\": \"deu.txt\"}\n  ]\n}\n",
    )
    .unwrap();
}

fn main() {
    let root = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into());
    let root = Path::new(&root);
    let mut rng = Rng(SeededRng::new(SEED));
    parallel(&mut rng, &root.join("parallel"));
    paraphrase(&mut rng, &root.join("paraphrase"));
    oracle(&mut rng, &root.join("oracle"));
    fs::write(
        root.join("pipeline.json"),
        "{\n  \"corpus\": \"parallel/corpus.json\",\n  \"paraphrases\": \"paraphrase/paraphrases.json\",\n  \"english\": \"eng\",\n  \"metrics\": [\"nll\", \"bpc\", \"mrr\"]\n}\n",
    )
    .unwrap();
}
