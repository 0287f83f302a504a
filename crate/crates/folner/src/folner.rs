//! Følner-condition verification and the commuting-cube construction.
//!
//! All defect ratios are exact rationals; there is no tolerance parameter
//! anywhere in verification.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::groups::{Element, Group};
use crate::words::Word;

/// Default hard cap on constructed set sizes, overridable via the
/// `FOLNER_MAX_SET` environment variable.
pub const DEFAULT_MAX_SET: usize = 10_000_000;

pub fn max_set_cap() -> usize {
    std::env::var("FOLNER_MAX_SET")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_SET)
}

/// Deduplicated finite set of elements; iteration order is the canonical
/// element order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FiniteSet {
    elems: BTreeSet<Element>,
}

impl FiniteSet {
    pub fn new() -> FiniteSet {
        FiniteSet { elems: BTreeSet::new() }
    }

    pub fn from_elements(elems: impl IntoIterator<Item = Element>) -> FiniteSet {
        FiniteSet { elems: elems.into_iter().collect() }
    }

    pub fn from_words(g: &Group, words: &[Word]) -> Result<FiniteSet> {
        let mut elems = BTreeSet::new();
        for w in words {
            elems.insert(g.evaluate(w)?);
        }
        Ok(FiniteSet { elems })
    }

    pub fn insert(&mut self, e: Element) -> bool {
        self.elems.insert(e)
    }

    pub fn contains(&self, e: &Element) -> bool {
        self.elems.contains(e)
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Element> {
        self.elems.iter()
    }

    /// Right translate Fg.
    pub fn right_translate(&self, g: &Group, by: &Element) -> Result<FiniteSet> {
        let mut elems = BTreeSet::new();
        for e in &self.elems {
            elems.insert(g.multiply(e, by)?);
        }
        Ok(FiniteSet { elems })
    }
}

/// A finite set of words together with the evaluated set; one word per
/// element (the first word, in construction order, that produced it).
#[derive(Clone, Debug, Default)]
pub struct WordSet {
    entries: BTreeMap<Element, Word>,
}

impl WordSet {
    pub fn new() -> WordSet {
        WordSet { entries: BTreeMap::new() }
    }

    pub fn contains(&self, e: &Element) -> bool {
        self.entries.contains_key(e)
    }

    pub fn insert_first(&mut self, e: Element, w: Word) {
        self.entries.entry(e).or_insert(w);
    }

    pub fn from_words(g: &Group, words: &[Word]) -> Result<WordSet> {
        let mut out = WordSet::new();
        for w in words {
            out.insert_first(g.evaluate(w)?, w.clone());
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.entries.values()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Element, &Word)> {
        self.entries.iter()
    }

    pub fn finite_set(&self) -> FiniteSet {
        FiniteSet::from_elements(self.entries.keys().cloned())
    }

    pub fn max_word_len(&self) -> usize {
        self.entries.values().map(|w| w.len()).max().unwrap_or(0)
    }
}

/// Per-generator left-translation defect ratios plus the pass/fail verdict
/// for level n.
#[derive(Clone, Debug)]
pub struct FolnerReport {
    pub n: u64,
    pub set_size: usize,
    /// (generator name, exact |F \ xF| / |F|)
    pub defects: Vec<(String, Ratio<u64>)>,
    pub verdict: bool,
}

impl FolnerReport {
    /// CSV rows `generator,numerator,denominator,ratio_decimal` plus a
    /// trailing `verdict,<pass|fail>,<n>,<set size>` line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generator,numerator,denominator,ratio_decimal\n");
        for (name, d) in &self.defects {
            let _ = writeln!(out, "{},{},{},{}", name, d.numer(), d.denom(), decimal6(d));
        }
        let _ = writeln!(
            out,
            "verdict,{},{},{}",
            if self.verdict { "pass" } else { "fail" },
            self.n,
            self.set_size
        );
        out
    }
}

/// Six-digit truncated decimal expansion, computed in integers.
fn decimal6(r: &Ratio<u64>) -> String {
    let scaled = r.numer() * 1_000_000 / r.denom();
    format!("{}.{:06}", scaled / 1_000_000, scaled % 1_000_000)
}

/// |F \ gF| / |F| as an exact rational in [0, 1].
pub fn left_defect(g: &Group, f: &FiniteSet, by: &Element) -> Result<Ratio<u64>> {
    if f.is_empty() {
        return Err(Error::input("left_defect requires a nonempty set"));
    }
    let inv = g.inverse(by)?;
    let index: HashSet<&Element> = f.iter().collect();
    let mut missing = 0u64;
    for e in f.iter() {
        // e in gF  <=>  g^{-1} e in F
        if !index.contains(&g.multiply(&inv, e)?) {
            missing += 1;
        }
    }
    Ok(Ratio::new(missing, f.len() as u64))
}

/// Eq-(1) check: pass iff |F \ xF| / |F| <= 1/n for every generator x.
pub fn verify_folner(g: &Group, f: &FiniteSet, n: u64) -> Result<FolnerReport> {
    if n == 0 {
        return Err(Error::input("Følner level n must be >= 1"));
    }
    if f.is_empty() {
        return Err(Error::input("verify_folner requires a nonempty set"));
    }
    let threshold = Ratio::new(1u64, n);
    let mut defects = Vec::with_capacity(g.alphabet().len());
    for i in 0..g.alphabet().len() {
        let x = g.generator_element(i)?;
        defects.push((g.alphabet().name(i).to_string(), left_defect(g, f, &x)?));
    }
    let verdict = defects.iter().all(|(_, d)| *d <= threshold);
    Ok(FolnerReport { n, set_size: f.len(), defects, verdict })
}

/// Boundary variant: pass iff |∂F| / |F| <= 1/n, where
/// ∂F = {f in F : exists x in X with xf not in F}.
pub fn verify_boundary_folner(g: &Group, f: &FiniteSet, n: u64) -> Result<FolnerReport> {
    if n == 0 {
        return Err(Error::input("Følner level n must be >= 1"));
    }
    if f.is_empty() {
        return Err(Error::input("verify_boundary_folner requires a nonempty set"));
    }
    let index: HashSet<&Element> = f.iter().collect();
    let gens: Vec<Element> = (0..g.alphabet().len()).map(|i| g.generator_element(i)).collect::<Result<_>>()?;
    let mut boundary = 0u64;
    for e in f.iter() {
        for x in &gens {
            if !index.contains(&g.multiply(x, e)?) {
                boundary += 1;
                break;
            }
        }
    }
    let ratio = Ratio::new(boundary, f.len() as u64);
    let verdict = ratio <= Ratio::new(1, n);
    Ok(FolnerReport { n, set_size: f.len(), defects: vec![("boundary".to_string(), ratio)], verdict })
}

/// Outcome of the translation-defect bound check |F \ wF|/|F| <= |w|/n.
#[derive(Clone, Debug)]
pub struct CatenaOutcome {
    pub defect: Ratio<u64>,
    pub bound: Ratio<u64>,
    pub ok: bool,
}

/// For a verified n-Følner set F and any word w, the defect of F under the
/// evaluated element is at most |w|/n. A false `ok` signals a bug.
pub fn catena_check(g: &Group, f: &FiniteSet, n: u64, w: &Word) -> Result<CatenaOutcome> {
    let report = verify_folner(g, f, n)?;
    if !report.verdict {
        return Err(Error::input("catena_check requires F to pass verify_folner at n"));
    }
    let defect = left_defect(g, f, &g.evaluate(w)?)?;
    let bound = Ratio::new(w.len() as u64, n);
    Ok(CatenaOutcome { defect, bound, ok: defect <= bound })
}

/// The cube C_n(y_1..y_s) = {y1^i1 ... ys^is : 0 <= i_k <= n-1} for pairwise
/// commuting y_i, deduplicated by normal form (so repeated entries and the
/// C_n = C_p collapse for exponent-p elements are handled automatically).
pub fn cube(g: &Group, ys: &[Element], n: u64) -> Result<FiniteSet> {
    let with_words: Vec<(Word, Element)> =
        ys.iter().map(|y| Ok((g.witness(y)?, y.clone()))).collect::<Result<_>>()?;
    Ok(cube_words(g, &with_words, n)?.finite_set())
}

/// Cube with word tracking: each output element carries a product word
/// assembled from the input words.
pub fn cube_words(g: &Group, ys: &[(Word, Element)], n: u64) -> Result<WordSet> {
    if n == 0 {
        return Err(Error::input("cube requires n >= 1"));
    }
    for (i, (wi, yi)) in ys.iter().enumerate() {
        g.check_member(yi)?;
        for (wj, yj) in ys.iter().skip(i + 1) {
            if !g.commute(yi, yj)? {
                return Err(Error::precondition(format!(
                    "cube generators `{}` and `{}` do not commute",
                    wi.display(g.alphabet()),
                    wj.display(g.alphabet())
                )));
            }
        }
    }
    // Deduplicate generators, keeping the first word for each.
    let mut seen = BTreeSet::new();
    let mut gens: Vec<(Word, Element)> = Vec::new();
    let id = g.identity();
    for (w, y) in ys {
        if *y != id && seen.insert(y.clone()) {
            gens.push((w.clone(), y.clone()));
        }
    }

    // Long concatenated words are swapped for the group's canonical witness
    // when that is shorter; verification sets can hold 10^5..10^7 words, so
    // word length dominates memory.
    let shorten = |e: &Element, w: Word| -> Word {
        if w.len() > 64 {
            if let Ok(short) = g.witness(e) {
                if short.len() < w.len() {
                    return short;
                }
            }
        }
        w
    };

    let cap = max_set_cap();
    let mut acc = WordSet::new();
    acc.insert_first(id.clone(), Word::empty());
    for (w, y) in &gens {
        // Exponent range 0..n-1, shortened to the order of y when smaller.
        let mut powers: Vec<(Word, Element)> = vec![(Word::empty(), id.clone())];
        let mut cur = id.clone();
        let mut cur_w = Word::empty();
        for _ in 1..n {
            cur = g.multiply(&cur, y)?;
            cur_w = shorten(&cur, cur_w.concat(w));
            if cur == id {
                break; // order <= n: further powers repeat
            }
            powers.push((cur_w.clone(), cur.clone()));
        }
        let mut next = WordSet::new();
        for (e, ew) in acc.iter() {
            for (pw, pe) in &powers {
                let prod = g.multiply(e, pe)?;
                if !next.contains(&prod) {
                    let pw = shorten(&prod, ew.concat(pw));
                    next.insert_first(prod, pw);
                    if next.len() > cap {
                        return Err(Error::budget(format!(
                            "cube exceeded the {cap}-element cap (set FOLNER_MAX_SET to raise it)"
                        )));
                    }
                }
            }
        }
        acc = next;
    }
    Ok(acc)
}

/// A total procedure n -> finite word set whose evaluation is n-Følner,
/// plus provenance metadata.
pub struct FolnerScheme {
    pub provenance: String,
    gen: Box<dyn Fn(u64) -> Result<WordSet>>,
}

impl FolnerScheme {
    pub fn new(provenance: impl Into<String>, gen: impl Fn(u64) -> Result<WordSet> + 'static) -> FolnerScheme {
        FolnerScheme { provenance: provenance.into(), gen: Box::new(gen) }
    }

    pub fn generate(&self, n: u64) -> Result<WordSet> {
        if n == 0 {
            return Err(Error::input("Følner level n must be >= 1"));
        }
        (self.gen)(n)
    }
}
