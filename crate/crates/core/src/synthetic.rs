//! A small clinical-style corpus built from five sentence templates, used by
//! tests, benchmarks and the CLI demo. Fully deterministic.

use crate::bracket::parse_bracketed;
use crate::enrich::{AnnotatedSentence, EntitySpan};

const SOSY: &[&str] = &["heart rate", "blood pressure", "temperature", "respiratory rate", "pulse"];
const VALUE: &[&str] = &["100", "120", "37", "18", "85", "140", "90", "22"];
const UNIT: &[&str] = &["bpm", "mmHg", "celsius", "per minute"];
const EXAM: &[&str] = &["ultrasound", "scan", "MRI", "radiograph", "echography"];
const ANATOMY: &[&str] = &["liver", "kidney", "lung", "spleen", "pancreas", "left breast"];
const FINDING: &[&str] = &["mass", "nodule", "cyst", "lesion", "calcification"];
const DRUG: &[&str] = &["paracetamol", "ibuprofen", "amoxicillin", "metformin"];
const DOSE: &[&str] = &["500", "200", "1000", "850"];
const FREQ: &[&str] = &["twice daily", "once daily", "every eight hours"];
const AGE: &[&str] = &["45", "62", "30", "71", "58"];
const GENDER: &[&str] = &["man", "woman"];

/// Builds leaves while counting tokens and recording entity spans.
struct B {
    id: String,
    tokens: usize,
    spans: Vec<EntitySpan>,
}

impl B {
    fn w(&mut self, tag: &str, word: &str) -> String {
        self.tokens += 1;
        format!("({tag} {word})")
    }

    fn e(&mut self, label: &str, tag: &str, words: &str) -> String {
        let start = self.tokens;
        let leaves: Vec<String> = words.split(' ').map(|w| self.w(tag, w)).collect();
        self.spans.push(EntitySpan::new(self.id.clone(), start, self.tokens, label));
        leaves.join(" ")
    }
}

fn pick<'a>(xs: &[&'a str], i: usize, stride: usize) -> &'a str {
    xs[(i * stride + i / xs.len()) % xs.len()]
}

fn vital(b: &mut B, i: usize) -> String {
    let np1 = format!("(NP {} {})", b.w("DT", "The"), b.e("SOSY", "NN", pick(SOSY, i, 1)));
    let vbd = b.w("VBD", "was");
    let np2 = format!("(NP {} {})", b.e("VALUE", "CD", pick(VALUE, i, 3)), b.e("UNIT", "NN", pick(UNIT, i, 1)));
    format!("(λ (S {np1} (VP {vbd} {np2}) {}))", b.w(".", "."))
}

fn finding(b: &mut B, i: usize) -> String {
    let exam = format!("(NP {})", b.e("EXAM_NAME", "NN", pick(EXAM, i, 2)));
    let of = b.w("IN", "of");
    let anat1 = format!("(NP {} {})", b.w("DT", "the"), b.e("ANATOMY", "NN", pick(ANATOMY, i, 1)));
    let subj = format!("(NP {exam} (PP {of} {anat1}))");
    let shows = b.w("VBZ", "shows");
    let mass = format!("(NP {} {})", b.w("DT", "a"), b.e("SOSY_DESC", "NN", pick(FINDING, i, 3)));
    let inn = b.w("IN", "in");
    let anat2 = format!("(NP {} {})", b.w("DT", "the"), b.e("ANATOMY", "NN", pick(ANATOMY, i, 1)));
    let obj = format!("(NP {mass} (PP {inn} {anat2}))");
    format!("(λ (S {subj} (VP {shows} {obj}) {}))", b.w(".", "."))
}

fn treatment(b: &mut B, i: usize) -> String {
    let subj = format!("(NP {} {})", b.w("DT", "The"), b.w("NN", "patient"));
    let takes = b.w("VBZ", "takes");
    let dose = format!("(NP {} {})", b.e("VALUE", "CD", pick(DOSE, i, 1)), b.e("UNIT", "NN", "mg"));
    let of = b.w("IN", "of");
    let drug = format!("(NP {})", b.e("DRUG", "NN", pick(DRUG, i, 3)));
    let freq = format!("(ADVP {})", b.e("FREQUENCY", "RB", pick(FREQ, i, 1)));
    format!("(λ (S {subj} (VP {takes} (NP {dose} (PP {of} {drug})) {freq}) {}))", b.w(".", "."))
}

fn demographics(b: &mut B, i: usize) -> String {
    let subj = format!("(NP {} {})", b.w("DT", "The"), b.w("NN", "patient"));
    let is = b.w("VBZ", "is");
    let a = b.w("DT", "a");
    let age = format!("(ADJP {} {} {})", b.e("AGE", "CD", pick(AGE, i, 1)), b.w("NN", "year"), b.w("JJ", "old"));
    let gender = b.e("GENDER", "NN", pick(GENDER, i, 1));
    format!("(λ (S {subj} (VP {is} (NP {a} {age} {gender})) {}))", b.w(".", "."))
}

fn procedure(b: &mut B, i: usize) -> String {
    let a = b.w("DT", "A");
    let exam = b.e("EXAM_NAME", "NN", pick(EXAM, i, 3));
    let of = b.w("IN", "of");
    let anat = format!("(NP {} {})", b.w("DT", "the"), b.e("ANATOMY", "NN", pick(ANATOMY, i, 5)));
    let subj = format!("(NP (NP {a} {exam}) (PP {of} {anat}))");
    let vp = format!("(VP {} (VP {}))", b.w("VBD", "was"), b.w("VBN", "performed"));
    format!("(λ (S {subj} {vp} {}))", b.w(".", "."))
}

type Template = fn(&mut B, usize) -> String;

const TEMPLATES: [Template; 5] = [vital, finding, treatment, demographics, procedure];

/// `n` sentences cycling through the five templates.
pub fn synthetic_corpus(n: usize) -> Vec<AnnotatedSentence> {
    (0..n)
        .map(|k| {
            let id = format!("syn-{k:03}");
            let mut b = B {
                id: id.clone(),
                tokens: 0,
                spans: vec![],
            };
            let text = TEMPLATES[k % TEMPLATES.len()](&mut b, k / TEMPLATES.len());
            let tree = parse_bracketed(&text).expect("template trees are well formed");
            AnnotatedSentence::new(id, tree, b.spans)
        })
        .collect()
}
