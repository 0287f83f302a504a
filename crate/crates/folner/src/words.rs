//! Freely reduced words over a finite signed generator alphabet.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// The generating set X: an ordered list of distinct printable names.
/// A generator is referred to by its index into this list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    pub fn new(names: Vec<String>) -> Result<Alphabet> {
        if names.is_empty() {
            return Err(Error::input("alphabet must have at least one generator"));
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() {
                return Err(Error::input(format!("generator {i} has an empty name")));
            }
            if n.contains(char::is_whitespace) || n.contains('^') || n == "1" || n == "#" {
                return Err(Error::input(format!("generator name `{n}` is not printable as a word token")));
            }
            if names[..i].contains(n) {
                return Err(Error::input(format!("duplicate generator name `{n}`")));
            }
        }
        Ok(Alphabet { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// One signed letter of a word: generator index plus sign. Kept at 8 bytes
/// because verification sets can hold tens of millions of letters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Letter {
    gen_idx: u32,
    pub positive: bool,
}

impl Letter {
    pub fn new(gen: usize, positive: bool) -> Letter {
        Letter { gen_idx: gen.try_into().expect("generator index fits in u32"), positive }
    }

    pub fn gen(self) -> usize {
        self.gen_idx as usize
    }

    pub fn inverse(self) -> Letter {
        Letter { gen_idx: self.gen_idx, positive: !self.positive }
    }

    pub fn sign(self) -> i8 {
        if self.positive {
            1
        } else {
            -1
        }
    }
}

const _: () = assert!(std::mem::size_of::<Letter>() == 8);

// Letter order used by shortlex: x1 < x1^-1 < x2 < x2^-1 < ...
impl Ord for Letter {
    fn cmp(&self, other: &Letter) -> Ordering {
        (self.gen_idx, !self.positive).cmp(&(other.gen_idx, !other.positive))
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Letter) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A freely reduced word: no adjacent letter is followed by its inverse.
/// The empty word is the identity of the free group.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn empty() -> Word {
        Word { letters: Vec::new() }
    }

    pub fn generator(gen: usize) -> Word {
        Word { letters: vec![Letter::new(gen, true)] }
    }

    /// Free reduction of a raw letter sequence. Idempotent.
    pub fn reduce(raw: impl IntoIterator<Item = Letter>) -> Word {
        let mut stack: Vec<Letter> = Vec::new();
        for l in raw {
            if stack.last() == Some(&l.inverse()) {
                stack.pop();
            } else {
                stack.push(l);
            }
        }
        Word { letters: stack }
    }

    /// Free reduction with generator-index validation against an alphabet.
    pub fn reduce_checked(raw: impl IntoIterator<Item = Letter>, alphabet: &Alphabet) -> Result<Word> {
        let raw: Vec<Letter> = raw.into_iter().collect();
        for l in &raw {
            if l.gen() >= alphabet.len() {
                return Err(Error::input(format!(
                    "letter references generator index {} but the alphabet has {} generators",
                    l.gen(),
                    alphabet.len()
                )));
            }
        }
        Ok(Word::reduce(raw))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word { letters: self.letters.iter().rev().map(|l| l.inverse()).collect() }
    }

    pub fn concat(&self, other: &Word) -> Word {
        Word::reduce(self.letters.iter().chain(other.letters.iter()).copied())
    }

    pub fn pow(&self, k: i64) -> Word {
        let base = if k >= 0 { self.clone() } else { self.inverse() };
        let mut out = Word::empty();
        for _ in 0..k.unsigned_abs() {
            out = out.concat(&base);
        }
        out
    }

    pub fn push(&self, l: Letter) -> Word {
        Word::reduce(self.letters.iter().copied().chain(std::iter::once(l)))
    }

    /// Replace generator i by `images[i]` (inverse letters by the inverse
    /// image word) and reduce. The homomorphism F_X -> F_Y on generators.
    pub fn substitute(&self, images: &[Word]) -> Result<Word> {
        let mut raw = Vec::new();
        for l in &self.letters {
            let img = images
                .get(l.gen())
                .ok_or_else(|| Error::input(format!("no image for generator index {}", l.gen())))?;
            if l.positive {
                raw.extend_from_slice(img.letters());
            } else {
                raw.extend(img.letters.iter().rev().map(|x| x.inverse()));
            }
        }
        Ok(Word::reduce(raw))
    }

    pub fn shortlex_cmp(&self, other: &Word) -> Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.letters.cmp(&other.letters))
    }

    /// Parse whitespace-separated tokens `name`, `name^-1`, `name^k`.
    /// The single token `1` denotes the empty word.
    pub fn parse(text: &str, alphabet: &Alphabet) -> Result<Word> {
        let mut raw = Vec::new();
        for tok in text.split_whitespace() {
            if tok == "1" {
                continue;
            }
            let (name, exp) = match tok.split_once('^') {
                None => (tok, 1i64),
                Some((name, e)) => {
                    let e: i64 = e
                        .parse()
                        .map_err(|_| Error::input(format!("bad exponent in token `{tok}`")))?;
                    if e == 0 {
                        return Err(Error::input(format!("zero exponent in token `{tok}`")));
                    }
                    (name, e)
                }
            };
            let gen = alphabet
                .index_of(name)
                .ok_or_else(|| Error::input(format!("unknown generator `{name}`")))?;
            for _ in 0..exp.unsigned_abs() {
                raw.push(Letter::new(gen, exp > 0));
            }
        }
        Ok(Word::reduce(raw))
    }

    /// Render with merged runs: `x^2 y^-1`. The empty word renders as `1`.
    pub fn display(&self, alphabet: &Alphabet) -> String {
        if self.letters.is_empty() {
            return "1".to_string();
        }
        let mut out = String::new();
        let mut i = 0;
        while i < self.letters.len() {
            let l = self.letters[i];
            let mut run = 1usize;
            while i + run < self.letters.len() && self.letters[i + run] == l {
                run += 1;
            }
            if !out.is_empty() {
                out.push(' ');
            }
            let e = run as i64 * l.sign() as i64;
            if e == 1 {
                let _ = write!(out, "{}", alphabet.name(l.gen()));
            } else {
                let _ = write!(out, "{}^{}", alphabet.name(l.gen()), e);
            }
            i += run;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Alphabet {
        Alphabet::new(vec!["x".into(), "y".into()]).unwrap()
    }

    #[test]
    fn reduce_cancels_adjacent_inverses() {
        let w = Word::reduce(vec![Letter::new(0, true), Letter::new(0, false)]);
        assert!(w.is_empty());
    }

    #[test]
    fn reduce_cascades_and_merges() {
        // x y y^-1 x -> x^2
        let w = Word::reduce(vec![
            Letter::new(0, true),
            Letter::new(1, true),
            Letter::new(1, false),
            Letter::new(0, true),
        ]);
        assert_eq!(w.letters(), &[Letter::new(0, true), Letter::new(0, true)]);
        assert_eq!(w.len(), 2);
    }

    #[test]
    fn reduce_leaves_reduced_words_alone() {
        let raw = vec![Letter::new(0, true), Letter::new(1, false)];
        let w = Word::reduce(raw.clone());
        assert_eq!(w.letters(), &raw[..]);
        // idempotent
        assert_eq!(Word::reduce(w.letters().to_vec()), w);
    }

    #[test]
    fn reduce_checked_rejects_bad_index() {
        let e = Word::reduce_checked(vec![Letter::new(7, true)], &ab());
        assert!(matches!(e, Err(Error::Input(_))));
    }

    #[test]
    fn parse_and_display_round_trip() {
        let a = ab();
        let w = Word::parse("x^2 y^-1 x", &a).unwrap();
        assert_eq!(w.len(), 4);
        assert_eq!(w.display(&a), "x^2 y^-1 x");
        assert_eq!(Word::parse(&w.display(&a), &a).unwrap(), w);
        assert!(Word::parse("1", &a).unwrap().is_empty());
        assert_eq!(Word::parse("x y y^-1 x", &a).unwrap().display(&a), "x^2");
    }

    #[test]
    fn parse_rejects_unknowns() {
        assert!(Word::parse("z", &ab()).is_err());
        assert!(Word::parse("x^0", &ab()).is_err());
        assert!(Word::parse("x^banana", &ab()).is_err());
    }

    #[test]
    fn inverse_concat_pow() {
        let a = ab();
        let w = Word::parse("x y^-1", &a).unwrap();
        assert!(w.concat(&w.inverse()).is_empty());
        assert_eq!(w.pow(2).display(&a), "x y^-1 x y^-1");
        assert_eq!(w.pow(-1), w.inverse());
        assert!(w.pow(0).is_empty());
    }

    #[test]
    fn shortlex_orders_by_length_then_letters() {
        let a = ab();
        let u = Word::parse("y", &a).unwrap();
        let v = Word::parse("x x", &a).unwrap();
        assert_eq!(u.shortlex_cmp(&v), Ordering::Less);
        let p = Word::parse("x", &a).unwrap();
        let q = Word::parse("x^-1", &a).unwrap();
        assert_eq!(p.shortlex_cmp(&q), Ordering::Less);
    }

    #[test]
    fn substitute_maps_letters_through_images() {
        let a = ab();
        let target = Alphabet::new(vec!["u".into(), "v".into()]).unwrap();
        // x -> v u^-1, y -> u
        let images = vec![Word::parse("v u^-1", &target).unwrap(), Word::parse("u", &target).unwrap()];
        let w = Word::parse("x y", &a).unwrap();
        assert_eq!(w.substitute(&images).unwrap().display(&target), "v");
    }
}
