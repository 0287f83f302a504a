//! Finitely generated groups with a total word-problem solver exposed as a
//! canonical normal form, plus the concrete groups used as testbed.
//!
//! A [`Group`] owns its alphabet and dispatches the group law over its kind.
//! [`Element`]s are plain values with no back-reference to their group; the
//! caller supplies the `Group` to every operation.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::words::{Alphabet, Letter, Word};

/// Canonical normal form of a group element.
///
/// Equality of payloads is equality in the group. The derived total order
/// (variant order, then field-wise lexicographic: vectors lexicographically,
/// Heisenberg triples componentwise, table row ids, wreath lamp maps before
/// cursors, semidirect pairs N-part first) is deterministic across runs and
/// is the canonical iteration order of finite sets.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    /// Free abelian Z^d: integer coordinate vector of length d.
    Vector(Vec<i64>),
    /// Discrete Heisenberg (a, b, c): x = (1,0,0), y = (0,1,0), z = [x,y] = (0,0,1),
    /// with (a,b,c)(a',b',c') = (a+a', b+b', c+c'+a*b').
    Heisenberg(i64, i64, i64),
    /// Finite table group: row id.
    Table(usize),
    /// Wreath product Z/p wr H: finitely supported lamp map H -> Z/p
    /// (nonzero values only) and a cursor in the base group H.
    Wreath(BTreeMap<Element, u32>, Box<Element>),
    /// Semidirect product N x| H: pair (n, h).
    Pair(Box<Element>, Box<Element>),
}

/// Action of the H-generators of a semidirect product on the N-generators.
/// `fwd[y][z]` is the Z-word for phi_y(z); `bwd[y][z]` for phi_y^{-1}(z).
#[derive(Clone, Debug)]
pub struct ActionTable {
    pub fwd: Vec<Vec<Word>>,
    bwd: Vec<Vec<Word>>,
}

#[derive(Clone, Debug)]
enum GroupKind {
    /// Z^d where generator i evaluates to `images[i]`. The default images
    /// are the standard basis; non-basis images give homomorphic images of
    /// free groups onto subgroups/quotients such as Z presented on two
    /// generators.
    FreeAbelian { d: usize, images: Vec<Vec<i64>> },
    Heisenberg,
    Table {
        elem_names: Vec<String>,
        mul: Vec<Vec<usize>>,
        inv: Vec<usize>,
        identity: usize,
        /// generator row ids, parallel to the alphabet
        gens: Vec<usize>,
        /// shortlex geodesic witness per row id
        geodesics: Vec<Word>,
    },
    Wreath { p: u32, base: Box<Group> },
    Semidirect { n: Box<Group>, h: Box<Group>, action: ActionTable },
}

/// A finitely generated group with solvable word problem.
#[derive(Clone, Debug)]
pub struct Group {
    alphabet: Alphabet,
    kind: GroupKind,
    /// Optional quotient structure: a group K over an alphabet of equal
    /// size such that index-wise reinterpretation of words realizes the
    /// canonical projection rho: G -> K.
    quotient: Option<Box<Group>>,
}

const NAME_CAP: &str = "group element outside supported coordinate range";

fn add_i64(a: i64, b: i64) -> Result<i64> {
    a.checked_add(b).ok_or_else(|| Error::budget(NAME_CAP))
}

impl Group {
    // ---- constructors -------------------------------------------------

    /// Z^d with standard-basis generators named e1..ed.
    pub fn free_abelian(d: usize) -> Result<Group> {
        let names = (1..=d).map(|i| format!("e{i}")).collect();
        Group::free_abelian_named(d, names, None)
    }

    /// Z^d with explicit generator names and optional generator images.
    pub fn free_abelian_named(d: usize, names: Vec<String>, images: Option<Vec<Vec<i64>>>) -> Result<Group> {
        if d == 0 {
            return Err(Error::input("zd requires d >= 1"));
        }
        let alphabet = Alphabet::new(names)?;
        let images = match images {
            None => {
                if alphabet.len() != d {
                    return Err(Error::input(format!(
                        "zd with d={d} needs {d} generator names, got {}",
                        alphabet.len()
                    )));
                }
                (0..d)
                    .map(|i| {
                        let mut v = vec![0i64; d];
                        v[i] = 1;
                        v
                    })
                    .collect()
            }
            Some(images) => {
                if images.len() != alphabet.len() {
                    return Err(Error::input("zd images must match the number of generator names"));
                }
                for v in &images {
                    if v.len() != d {
                        return Err(Error::input(format!("zd image has length {} but d={d}", v.len())));
                    }
                }
                images
            }
        };
        Ok(Group { alphabet, kind: GroupKind::FreeAbelian { d, images }, quotient: None })
    }

    /// Discrete Heisenberg group over {x, y}, with the center quotient
    /// G -> Z^2 attached.
    pub fn heisenberg() -> Result<Group> {
        let alphabet = Alphabet::new(vec!["x".into(), "y".into()])?;
        let quotient = Group::free_abelian_named(2, vec!["x".into(), "y".into()], None)?;
        Ok(Group { alphabet, kind: GroupKind::Heisenberg, quotient: Some(Box::new(quotient)) })
    }

    /// Finite group from a full multiplication table: `table[i][j]` is the
    /// name of elements[i] * elements[j]. Generators must generate.
    pub fn finite_table(elem_names: Vec<String>, gen_names: Vec<String>, table: Vec<Vec<String>>) -> Result<Group> {
        let m = elem_names.len();
        if m == 0 {
            return Err(Error::input("finite group needs at least one element"));
        }
        if m > 512 {
            return Err(Error::input("finite table groups are capped at 512 elements"));
        }
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (i, n) in elem_names.iter().enumerate() {
            if index.insert(n.as_str(), i).is_some() {
                return Err(Error::input(format!("duplicate element name `{n}` in table")));
            }
        }
        if table.len() != m {
            return Err(Error::input(format!("table has {} rows, expected {m}", table.len())));
        }
        let mut mul = vec![vec![0usize; m]; m];
        for (i, row) in table.iter().enumerate() {
            if row.len() != m {
                return Err(Error::input(format!("table row {i} has {} entries, expected {m}", row.len())));
            }
            for (j, name) in row.iter().enumerate() {
                mul[i][j] = *index
                    .get(name.as_str())
                    .ok_or_else(|| Error::input(format!("table entry `{name}` is not an element name")))?;
            }
        }
        // identity
        let identity = (0..m)
            .find(|&e| (0..m).all(|j| mul[e][j] == j && mul[j][e] == j))
            .ok_or_else(|| Error::input("table has no identity element"))?;
        // associativity
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    if mul[mul[a][b]][c] != mul[a][mul[b][c]] {
                        return Err(Error::input(format!(
                            "table is not associative at ({}, {}, {})",
                            elem_names[a], elem_names[b], elem_names[c]
                        )));
                    }
                }
            }
        }
        // inverses
        let mut inv = vec![usize::MAX; m];
        for a in 0..m {
            inv[a] = (0..m)
                .find(|&b| mul[a][b] == identity && mul[b][a] == identity)
                .ok_or_else(|| Error::input(format!("element `{}` has no inverse", elem_names[a])))?;
        }
        let mut gens = Vec::new();
        for g in &gen_names {
            gens.push(*index.get(g.as_str()).ok_or_else(|| Error::input(format!("generator `{g}` is not an element")))?);
        }
        let alphabet = Alphabet::new(gen_names)?;
        // BFS geodesics; also proves the generators generate.
        let mut geodesics: Vec<Option<Word>> = vec![None; m];
        geodesics[identity] = Some(Word::empty());
        let mut queue = VecDeque::from([identity]);
        while let Some(e) = queue.pop_front() {
            let w = geodesics[e].clone().unwrap();
            for (gi, &g) in gens.iter().enumerate() {
                for positive in [true, false] {
                    let target = if positive { mul[e][g] } else { mul[e][inv[g]] };
                    if geodesics[target].is_none() {
                        geodesics[target] = Some(w.push(Letter::new(gi, positive)));
                        queue.push_back(target);
                    }
                }
            }
        }
        let geodesics: Vec<Word> = geodesics
            .into_iter()
            .enumerate()
            .map(|(i, w)| w.ok_or_else(|| Error::input(format!("generators do not generate: `{}` unreachable", elem_names[i]))))
            .collect::<Result<_>>()?;
        Ok(Group {
            alphabet,
            kind: GroupKind::Table { elem_names, mul, inv, identity, gens, geodesics },
            quotient: None,
        })
    }

    /// Z/p cyclic group as a finite table over one generator `a`.
    pub fn cyclic(p: u32) -> Result<Group> {
        if p < 2 {
            return Err(Error::input("cyclic group needs p >= 2"));
        }
        let names: Vec<String> = (0..p).map(|i| if i == 0 { "e".into() } else if i == 1 { "a".into() } else { format!("a{i}") }).collect();
        let table: Vec<Vec<String>> = (0..p)
            .map(|i| (0..p).map(|j| names[((i + j) % p) as usize].clone()).collect())
            .collect();
        Group::finite_table(names.clone(), vec![names[1].clone()], table)
    }

    /// Wreath product Z/p wr H. Alphabet: lamp generator `a`, then the base
    /// alphabet. The lamplighter group is `wreath(p, Z)`.
    ///
    /// Convention: for a base element g with witness word u, the conjugate
    /// u^-1 a u toggles the lamp at position g^-1 (so in the lamplighter,
    /// t^-i a t^i toggles the lamp at -i).
    pub fn wreath(p: u32, base: Group) -> Result<Group> {
        if p < 2 {
            return Err(Error::input("wreath product needs lamp modulus p >= 2"));
        }
        let mut names = vec!["a".to_string()];
        names.extend(base.alphabet.names().iter().cloned());
        let alphabet = Alphabet::new(names)?; // rejects a name clash with `a`
        Ok(Group { alphabet, kind: GroupKind::Wreath { p, base: Box::new(base) }, quotient: None })
    }

    /// Lamplighter Z/p wr Z over {a, t}.
    pub fn lamplighter(p: u32) -> Result<Group> {
        Group::wreath(p, Group::free_abelian_named(1, vec!["t".into()], None)?)
    }

    /// Semidirect product N x| H from an action table mapping each pair
    /// (H-generator y, N-generator z) to a Z-word for phi_y(z).
    ///
    /// The inverse automorphisms phi_y^{-1} are found by breadth-first
    /// search in N over the images {phi_y(z)}; the search failing within
    /// budget, or an automorphism spot-check failing (images must preserve
    /// commutation and generator orders), is a build error.
    pub fn semidirect(n: Group, h: Group, actions: &[(String, String, String)]) -> Result<Group> {
        let mut names: Vec<String> = n.alphabet.names().to_vec();
        names.extend(h.alphabet.names().iter().cloned());
        let alphabet = Alphabet::new(names)?;

        let zc = n.alphabet.len();
        let yc = h.alphabet.len();
        let mut fwd: Vec<Vec<Option<Word>>> = vec![vec![None; zc]; yc];
        for (y, z, wtext) in actions {
            let yi = h
                .alphabet
                .index_of(y)
                .ok_or_else(|| Error::input(format!("action references unknown H-generator `{y}`")))?;
            let zi = n
                .alphabet
                .index_of(z)
                .ok_or_else(|| Error::input(format!("action references unknown N-generator `{z}`")))?;
            if fwd[yi][zi].is_some() {
                return Err(Error::input(format!("duplicate action line for ({y}, {z})")));
            }
            fwd[yi][zi] = Some(Word::parse(wtext, &n.alphabet)?);
        }
        let fwd: Vec<Vec<Word>> = fwd
            .into_iter()
            .enumerate()
            .map(|(yi, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(zi, w)| {
                        w.ok_or_else(|| {
                            Error::input(format!(
                                "missing action line for ({}, {})",
                                h.alphabet.name(yi),
                                n.alphabet.name(zi)
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;

        // Spot-check and invert each generator automorphism.
        let mut bwd = Vec::with_capacity(yc);
        for yi in 0..yc {
            let images: Vec<Element> = fwd[yi].iter().map(|w| n.evaluate(w)).collect::<Result<_>>()?;
            for zi in 0..zc {
                for zj in (zi + 1)..zc {
                    let a = n.generator_element(zi)?;
                    let b = n.generator_element(zj)?;
                    if n.commute(&a, &b)? && !n.commute(&images[zi], &images[zj])? {
                        return Err(Error::input(format!(
                            "action of `{}` fails the automorphism spot-check: images of commuting generators `{}`, `{}` do not commute",
                            h.alphabet.name(yi),
                            n.alphabet.name(zi),
                            n.alphabet.name(zj)
                        )));
                    }
                }
                let g = n.generator_element(zi)?;
                if let Some(q) = n.element_order(&g, 64)? {
                    if n.power(&images[zi], q as i64)? != n.identity() {
                        return Err(Error::input(format!(
                            "action of `{}` fails the automorphism spot-check: image of `{}` does not have order dividing {q}",
                            h.alphabet.name(yi),
                            n.alphabet.name(zi)
                        )));
                    }
                }
            }
            bwd.push(invert_generator_action(&n, &images)?);
        }

        Ok(Group {
            alphabet,
            kind: GroupKind::Semidirect { n: Box::new(n), h: Box::new(h), action: ActionTable { fwd, bwd } },
            quotient: None,
        })
    }

    /// Attach a quotient group K (same alphabet size; index-wise word
    /// reinterpretation realizes the projection).
    pub fn with_quotient(mut self, quotient: Group) -> Result<Group> {
        if quotient.alphabet.len() != self.alphabet.len() {
            return Err(Error::input(format!(
                "quotient alphabet has {} generators, ambient has {}",
                quotient.alphabet.len(),
                self.alphabet.len()
            )));
        }
        self.quotient = Some(Box::new(quotient));
        Ok(self)
    }

    // ---- accessors -----------------------------------------------------

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn quotient_group(&self) -> Option<&Group> {
        self.quotient.as_deref()
    }

    /// For semidirect products: (N, H, action table).
    pub fn semidirect_parts(&self) -> Option<(&Group, &Group, &ActionTable)> {
        match &self.kind {
            GroupKind::Semidirect { n, h, action } => Some((n, h, action)),
            _ => None,
        }
    }

    pub fn wreath_parts(&self) -> Option<(u32, &Group)> {
        match &self.kind {
            GroupKind::Wreath { p, base } => Some((*p, base)),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            GroupKind::FreeAbelian { .. } => "zd",
            GroupKind::Heisenberg => "heisenberg",
            GroupKind::Table { .. } => "finite",
            GroupKind::Wreath { .. } => "wreath",
            GroupKind::Semidirect { .. } => "semidirect",
        }
    }

    // ---- the group law --------------------------------------------------

    pub fn identity(&self) -> Element {
        match &self.kind {
            GroupKind::FreeAbelian { d, .. } => Element::Vector(vec![0; *d]),
            GroupKind::Heisenberg => Element::Heisenberg(0, 0, 0),
            GroupKind::Table { identity, .. } => Element::Table(*identity),
            GroupKind::Wreath { base, .. } => Element::Wreath(BTreeMap::new(), Box::new(base.identity())),
            GroupKind::Semidirect { n, h, .. } => {
                Element::Pair(Box::new(n.identity()), Box::new(h.identity()))
            }
        }
    }

    pub fn generator_element(&self, i: usize) -> Result<Element> {
        if i >= self.alphabet.len() {
            return Err(Error::input(format!("generator index {i} out of range")));
        }
        Ok(match &self.kind {
            GroupKind::FreeAbelian { images, .. } => Element::Vector(images[i].clone()),
            GroupKind::Heisenberg => {
                if i == 0 {
                    Element::Heisenberg(1, 0, 0)
                } else {
                    Element::Heisenberg(0, 1, 0)
                }
            }
            GroupKind::Table { gens, .. } => Element::Table(gens[i]),
            GroupKind::Wreath { base, .. } => {
                if i == 0 {
                    let mut lamps = BTreeMap::new();
                    lamps.insert(base.identity(), 1);
                    Element::Wreath(lamps, Box::new(base.identity()))
                } else {
                    Element::Wreath(BTreeMap::new(), Box::new(base.generator_element(i - 1)?))
                }
            }
            GroupKind::Semidirect { n, h, .. } => {
                let zc = n.alphabet.len();
                if i < zc {
                    Element::Pair(Box::new(n.generator_element(i)?), Box::new(h.identity()))
                } else {
                    Element::Pair(Box::new(n.identity()), Box::new(h.generator_element(i - zc)?))
                }
            }
        })
    }

    /// Membership (shape) check for mismatch errors.
    pub fn check_member(&self, a: &Element) -> Result<()> {
        let ok = match (&self.kind, a) {
            (GroupKind::FreeAbelian { d, .. }, Element::Vector(v)) => v.len() == *d,
            (GroupKind::Heisenberg, Element::Heisenberg(..)) => true,
            (GroupKind::Table { mul, .. }, Element::Table(i)) => *i < mul.len(),
            (GroupKind::Wreath { p, base }, Element::Wreath(lamps, cursor)) => {
                base.check_member(cursor)?;
                for (pos, v) in lamps {
                    base.check_member(pos)?;
                    if *v == 0 || *v >= *p {
                        return Err(Error::input("lamp value outside 1..p-1"));
                    }
                }
                true
            }
            (GroupKind::Semidirect { n, h, .. }, Element::Pair(np, hp)) => {
                n.check_member(np)?;
                h.check_member(hp)?;
                true
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::input(format!("element {a:?} does not belong to this {} group", self.kind_name())))
        }
    }

    pub fn multiply(&self, a: &Element, b: &Element) -> Result<Element> {
        self.check_member(a)?;
        self.check_member(b)?;
        self.multiply_unchecked(a, b)
    }

    fn multiply_unchecked(&self, a: &Element, b: &Element) -> Result<Element> {
        match (&self.kind, a, b) {
            (GroupKind::FreeAbelian { .. }, Element::Vector(u), Element::Vector(v)) => {
                let w = u.iter().zip(v).map(|(&x, &y)| add_i64(x, y)).collect::<Result<_>>()?;
                Ok(Element::Vector(w))
            }
            (GroupKind::Heisenberg, Element::Heisenberg(a1, b1, c1), Element::Heisenberg(a2, b2, c2)) => {
                let cross = a1.checked_mul(*b2).ok_or_else(|| Error::budget(NAME_CAP))?;
                Ok(Element::Heisenberg(
                    add_i64(*a1, *a2)?,
                    add_i64(*b1, *b2)?,
                    add_i64(add_i64(*c1, *c2)?, cross)?,
                ))
            }
            (GroupKind::Table { mul, .. }, Element::Table(i), Element::Table(j)) => Ok(Element::Table(mul[*i][*j])),
            (GroupKind::Wreath { p, base }, Element::Wreath(f, h), Element::Wreath(f2, h2)) => {
                // (f, h)(f', h') = (f + f'(h^{-1} .), h h'): shift supp(f') by h.
                let mut lamps = f.clone();
                for (pos, v) in f2 {
                    let shifted = base.multiply_unchecked(h, pos)?;
                    let entry = lamps.entry(shifted).or_insert(0);
                    *entry = (*entry + v) % p;
                    if *entry == 0 {
                        // remove zeros to keep the payload canonical
                        let key = base.multiply_unchecked(h, pos)?;
                        lamps.remove(&key);
                    }
                }
                Ok(Element::Wreath(lamps, Box::new(base.multiply_unchecked(h, h2)?)))
            }
            (GroupKind::Semidirect { n, h, action }, Element::Pair(n1, h1), Element::Pair(n2, h2)) => {
                let moved = apply_action(n, h, action, h1, n2)?;
                Ok(Element::Pair(
                    Box::new(n.multiply_unchecked(n1, &moved)?),
                    Box::new(h.multiply_unchecked(h1, h2)?),
                ))
            }
            _ => Err(Error::input("element/group mismatch in multiply")),
        }
    }

    pub fn inverse(&self, a: &Element) -> Result<Element> {
        self.check_member(a)?;
        match (&self.kind, a) {
            (GroupKind::FreeAbelian { .. }, Element::Vector(v)) => {
                Ok(Element::Vector(v.iter().map(|&x| -x).collect()))
            }
            (GroupKind::Heisenberg, Element::Heisenberg(x, y, z)) => {
                // (a,b,c)^{-1} = (-a, -b, a b - c)
                Ok(Element::Heisenberg(-x, -y, x.checked_mul(*y).ok_or_else(|| Error::budget(NAME_CAP))? - z))
            }
            (GroupKind::Table { inv, .. }, Element::Table(i)) => Ok(Element::Table(inv[*i])),
            (GroupKind::Wreath { p, base }, Element::Wreath(f, h)) => {
                // (f, h)^{-1} = (x -> -f(h x), h^{-1})
                let hinv = base.inverse(h)?;
                let mut lamps = BTreeMap::new();
                for (pos, v) in f {
                    lamps.insert(base.multiply_unchecked(&hinv, pos)?, p - v);
                }
                Ok(Element::Wreath(lamps, Box::new(hinv)))
            }
            (GroupKind::Semidirect { n, h, action }, Element::Pair(np, hp)) => {
                let hinv = h.inverse(hp)?;
                let ninv = n.inverse(np)?;
                let moved = apply_action(n, h, action, &hinv, &ninv)?;
                Ok(Element::Pair(Box::new(moved), Box::new(hinv)))
            }
            _ => Err(Error::input("element/group mismatch in inverse")),
        }
    }

    /// The canonical epimorphism pi_{G,X}: evaluate a word to its normal form.
    pub fn evaluate(&self, w: &Word) -> Result<Element> {
        let mut acc = self.identity();
        for l in w.letters() {
            if l.gen() >= self.alphabet.len() {
                return Err(Error::input(format!(
                    "word references generator index {} outside this group's alphabet",
                    l.gen()
                )));
            }
            let g = self.generator_element(l.gen())?;
            let g = if l.positive { g } else { self.inverse(&g)? };
            acc = self.multiply_unchecked(&acc, &g)?;
        }
        Ok(acc)
    }

    pub fn power(&self, a: &Element, k: i64) -> Result<Element> {
        let base = if k >= 0 { a.clone() } else { self.inverse(a)? };
        let mut acc = self.identity();
        for _ in 0..k.unsigned_abs() {
            acc = self.multiply_unchecked(&acc, &base)?;
        }
        Ok(acc)
    }

    pub fn commute(&self, a: &Element, b: &Element) -> Result<bool> {
        Ok(self.multiply(a, b)? == self.multiply(b, a)?)
    }

    /// Order of `a` if it is at most `cap`, else None.
    pub fn element_order(&self, a: &Element, cap: u64) -> Result<Option<u64>> {
        let mut acc = a.clone();
        let id = self.identity();
        for k in 1..=cap {
            if acc == id {
                return Ok(Some(k));
            }
            acc = self.multiply_unchecked(&acc, a)?;
        }
        Ok(None)
    }

    /// A canonical word over the alphabet evaluating to `a`. Not geodesic in
    /// general; deterministic.
    pub fn witness(&self, a: &Element) -> Result<Word> {
        self.check_member(a)?;
        match (&self.kind, a) {
            (GroupKind::FreeAbelian { d, images }, Element::Vector(v)) => {
                let standard = images.len() == *d && images.iter().enumerate().all(|(i, im)| {
                    im.iter().enumerate().all(|(j, &x)| x == i64::from(i == j))
                });
                if standard {
                    let mut w = Word::empty();
                    for (i, &k) in v.iter().enumerate() {
                        w = w.concat(&Word::generator(i).pow(k));
                    }
                    Ok(w)
                } else {
                    bfs_witness(self, a, 1 << 22)
                }
            }
            (GroupKind::Heisenberg, Element::Heisenberg(x, y, z)) => {
                // y^b x^a evaluates to (a, b, 0); the central remainder is
                // written with near-square commutators [x^s, y^t] = z^{st},
                // keeping witness length O(sqrt(|c|)).
                fn comm(s: i64, t: i64) -> Word {
                    Word::generator(0)
                        .pow(-s)
                        .concat(&Word::generator(1).pow(-t))
                        .concat(&Word::generator(0).pow(s))
                        .concat(&Word::generator(1).pow(t))
                }
                fn central(m: i64) -> Word {
                    if m == 0 {
                        return Word::empty();
                    }
                    let a = m.unsigned_abs() as i64;
                    let mut s = (a as f64).sqrt() as i64;
                    while (s + 1) * (s + 1) <= a {
                        s += 1;
                    }
                    while s > 1 && s * s > a {
                        s -= 1;
                    }
                    let t = a / s;
                    let r = a - s * t;
                    let mut w = comm(s, t);
                    if r > 0 {
                        w = w.concat(&comm(r, 1));
                    }
                    if m < 0 {
                        w.inverse()
                    } else {
                        w
                    }
                }
                Ok(Word::generator(1).pow(*y).concat(&Word::generator(0).pow(*x)).concat(&central(*z)))
            }
            (GroupKind::Table { geodesics, .. }, Element::Table(i)) => Ok(geodesics[*i].clone()),
            (GroupKind::Wreath { p, base }, Element::Wreath(f, h)) => {
                let _ = p;
                let mut w = Word::empty();
                for (pos, &v) in f {
                    // u^-1 a^v u with u = witness(pos^-1) toggles lamp at pos
                    let u = self.embed_base(&base.witness(&base.inverse(pos)?)?);
                    w = w.concat(&u.inverse()).concat(&Word::generator(0).pow(i64::from(v))).concat(&u);
                }
                Ok(w.concat(&self.embed_base(&base.witness(h)?)))
            }
            (GroupKind::Semidirect { n, h, .. }, Element::Pair(np, hp)) => {
                let zc = n.alphabet.len();
                let nw = n.witness(np)?;
                let hw = h.witness(hp)?;
                let shifted = Word::reduce(hw.letters().iter().map(|l| Letter::new(l.gen() + zc, l.positive)));
                Ok(nw.concat(&shifted))
            }
            _ => Err(Error::input("element/group mismatch in witness")),
        }
    }

    /// Re-index a base-group word into a wreath-product word (base generator
    /// i becomes alphabet index i+1).
    pub fn embed_base(&self, w: &Word) -> Word {
        Word::reduce(w.letters().iter().map(|l| Letter::new(l.gen() + 1, l.positive)))
    }

    /// Printable canonical form, for diagnostics.
    pub fn element_string(&self, a: &Element) -> String {
        match (&self.kind, a) {
            (GroupKind::Table { elem_names, .. }, Element::Table(i)) => elem_names[*i].clone(),
            _ => format!("{a:?}"),
        }
    }
}

/// phi_{h1} applied to an N-element, computed through witness words:
/// phi_{y1...yk} = phi_{y1} o ... o phi_{yk} applied to the Z-word of the
/// element, one generator letter at a time.
fn apply_action(n: &Group, h: &Group, action: &ActionTable, h1: &Element, n2: &Element) -> Result<Element> {
    let hw = h.witness(h1)?;
    let mut word = n.witness(n2)?;
    for l in hw.letters().iter().rev() {
        let images = if l.positive { &action.fwd[l.gen()] } else { &action.bwd[l.gen()] };
        word = word.substitute(images)?;
        if word.len() > 1_000_000 {
            return Err(Error::budget("automorphism image word exceeds 10^6 letters"));
        }
    }
    n.evaluate(&word)
}

/// Find phi^{-1} images for each N-generator by BFS over N in the Cayley
/// graph generated by the phi-images.
fn invert_generator_action(n: &Group, images: &[Element]) -> Result<Vec<Word>> {
    let targets: Vec<Element> = (0..n.alphabet().len()).map(|i| n.generator_element(i)).collect::<Result<_>>()?;
    let mut found: HashMap<Element, Word> = HashMap::new();
    found.insert(n.identity(), Word::empty());
    let mut frontier = vec![n.identity()];
    let inv_images: Vec<Element> = images.iter().map(|g| n.inverse(g)).collect::<Result<_>>()?;
    let mut remaining: usize = targets.iter().filter(|t| !found.contains_key(*t)).count();
    let mut radius = 0usize;
    while remaining > 0 {
        radius += 1;
        if radius > 24 || found.len() > 2_000_000 {
            return Err(Error::input(
                "action table failed the automorphism spot-check: generators are not reachable from the images (the action may not be invertible)",
            ));
        }
        let mut next = Vec::new();
        for e in &frontier {
            let w = found[e].clone();
            for (gi, img) in images.iter().enumerate() {
                for (positive, step) in [(true, img), (false, &inv_images[gi])] {
                    let t = n.multiply(e, step)?;
                    if !found.contains_key(&t) {
                        if targets.contains(&t) {
                            remaining -= 1;
                        }
                        found.insert(t.clone(), w.push(Letter::new(gi, positive)));
                        next.push(t);
                    }
                }
            }
        }
        if next.is_empty() {
            return Err(Error::input(
                "action table failed the automorphism spot-check: image subgroup is a proper subgroup",
            ));
        }
        frontier = next;
    }
    Ok(targets.into_iter().map(|t| found[&t].clone()).collect())
}

/// Shortlex-first BFS for a word representing `target`.
fn bfs_witness(g: &Group, target: &Element, cap: usize) -> Result<Word> {
    if *target == g.identity() {
        return Ok(Word::empty());
    }
    let mut seen: HashMap<Element, Word> = HashMap::new();
    seen.insert(g.identity(), Word::empty());
    let mut queue = VecDeque::from([g.identity()]);
    while let Some(e) = queue.pop_front() {
        let w = seen[&e].clone();
        for i in 0..g.alphabet().len() {
            for positive in [true, false] {
                let step = g.generator_element(i)?;
                let step = if positive { step } else { g.inverse(&step)? };
                let t = g.multiply(&e, &step)?;
                if !seen.contains_key(&t) {
                    let tw = w.push(Letter::new(i, positive));
                    if t == *target {
                        return Ok(tw);
                    }
                    seen.insert(t.clone(), tw);
                    queue.push_back(t);
                    if seen.len() > cap {
                        return Err(Error::budget("witness search exceeded its element budget"));
                    }
                }
            }
        }
    }
    Err(Error::input("element is not in the subgroup generated by the alphabet"))
}

/// Ambient group G over X with a quotient K = G/N over rho(X): the same
/// alphabet size, with word-level reinterpretation realizing rho.
#[derive(Clone, Debug)]
pub struct QuotientStructure {
    pub ambient: Group,
    pub quotient: Group,
}

impl QuotientStructure {
    pub fn new(ambient: Group, quotient: Group) -> Result<QuotientStructure> {
        if ambient.alphabet().len() != quotient.alphabet().len() {
            return Err(Error::input(format!(
                "quotient alphabet size {} does not match ambient size {}",
                quotient.alphabet().len(),
                ambient.alphabet().len()
            )));
        }
        Ok(QuotientStructure { ambient, quotient })
    }

    /// Use the quotient attached to `g` (built-in for Heisenberg, declared
    /// for `kind = quotient` specs).
    pub fn from_group(g: &Group) -> Result<QuotientStructure> {
        let quotient = g
            .quotient_group()
            .ok_or_else(|| Error::input("group has no declared quotient structure"))?
            .clone();
        QuotientStructure::new(g.clone(), quotient)
    }

    /// rho o pi_{G,X} = pi_{K,rho(X)}: interpret the word in K.
    pub fn project(&self, w: &Word) -> Result<Element> {
        self.quotient.evaluate(w)
    }

    pub fn in_kernel(&self, w: &Word) -> Result<bool> {
        Ok(self.project(w)? == self.quotient.identity())
    }
}
