//! Følner-set combinators for group extensions, the generator-change
//! transport, and the corollary bound calculators.
//!
//! Each combinator checks every hypothesis that is decidable from normal
//! forms (Følner levels, commutation, injectivity, cardinalities). The
//! structural decompositions themselves (that the group really splits as
//! claimed) are caller assertions and documented trust boundaries.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};
use crate::folner::{cube_words, left_defect, max_set_cap, FiniteSet, FolnerScheme, WordSet};
use crate::groups::{Element, Group, QuotientStructure};
use crate::search::{enumerate_and_check, group_ball, DistortionTable, SearchBudget};
use crate::words::{Letter, Word};

/// Semidirect product P = N x| H with its generator split and action
/// constant c = max geodesic Z-length of a generator image.
#[derive(Clone, Debug)]
pub struct SemidirectData {
    pub product: Group,
    pub c: u64,
}

impl SemidirectData {
    pub fn new(product: Group) -> Result<SemidirectData> {
        let (n, _h, action) = product
            .semidirect_parts()
            .ok_or_else(|| Error::input("SemidirectData requires a semidirect-product group"))?;
        // c is the max geodesic length of the images; a ball of radius equal
        // to the max written word length is always deep enough to find them.
        let max_len = action.fwd.iter().flatten().map(|w| w.len()).max().unwrap_or(0);
        let ball = group_ball(n, max_len, &SearchBudget::default())?;
        let mut c = 1u64;
        for row in &action.fwd {
            for w in row {
                let e = n.evaluate(w)?;
                let d = ball
                    .distance(&e)
                    .ok_or_else(|| Error::input("action image not found within its own word length"))?;
                c = c.max(d as u64);
            }
        }
        Ok(SemidirectData { product, c })
    }

    pub fn n_group(&self) -> &Group {
        self.product.semidirect_parts().unwrap().0
    }

    pub fn h_group(&self) -> &Group {
        self.product.semidirect_parts().unwrap().1
    }
}

/// Extension 1 -> N -> Γ -> K -> 1 with N finitely generated by Y:
/// the quotient structure, N as a group over Y, the embedding of each
/// Y-generator as an X-word, and (optionally) a computed distortion table.
#[derive(Clone, Debug)]
pub struct ExtensionData {
    pub quotient: QuotientStructure,
    pub n_group: Group,
    /// embed[i] = X-word for the i-th Y-generator
    pub embed: Vec<Word>,
    pub distortion: Option<DistortionTable>,
}

impl ExtensionData {
    pub fn new(quotient: QuotientStructure, n_group: Group, embed: Vec<Word>) -> Result<ExtensionData> {
        if embed.len() != n_group.alphabet().len() {
            return Err(Error::input(format!(
                "{} embedding words for {} N-generators",
                embed.len(),
                n_group.alphabet().len()
            )));
        }
        for (i, w) in embed.iter().enumerate() {
            if !quotient.in_kernel(w)? {
                return Err(Error::input(format!(
                    "embedded N-generator `{}` does not project to the identity of K",
                    n_group.alphabet().name(i)
                )));
            }
        }
        Ok(ExtensionData { quotient, n_group, embed, distortion: None })
    }

    pub fn with_distortion(mut self, table: DistortionTable) -> ExtensionData {
        self.distortion = Some(table);
        self
    }

    /// Y-word -> X-word through the embedding.
    pub fn embed_word(&self, w: &Word) -> Result<Word> {
        w.substitute(&self.embed)
    }
}

fn check_set_level(g: &Group, set: &FiniteSet, gens: &[(String, Element)], n: u64, what: &str) -> Result<()> {
    if set.is_empty() {
        return Err(Error::precondition(format!("{what} is empty")));
    }
    let threshold = num_rational::Ratio::new(1u64, n);
    for (name, e) in gens {
        let d = left_defect(g, set, e)?;
        if d > threshold {
            return Err(Error::precondition(format!(
                "{what} is not {n}-Følner: defect {}/{} wrt `{name}` exceeds 1/{n}",
                d.numer(),
                d.denom()
            )));
        }
    }
    Ok(())
}

/// One semiabelian stage: F = A * C_level(L1^A), with hypothesis checks at
/// Følner level `n` against `check_gens`.
fn semiabe_stage(
    g: &Group,
    l1: &[Word],
    check_gens: &[Word],
    a: &WordSet,
    n: u64,
    level: u64,
) -> Result<WordSet> {
    if n == 0 {
        return Err(Error::input("Følner level n must be >= 1"));
    }
    let gens: Vec<(String, Element)> = check_gens
        .iter()
        .map(|w| Ok((w.display(g.alphabet()), g.evaluate(w)?)))
        .collect::<Result<_>>()?;
    check_set_level(g, &a.finite_set(), &gens, n, "A")?;

    // L1^A = {a^-1 ξ a : a in A, ξ in L1}
    let mut conjugates: Vec<(Word, Element)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (_, wa) in a.iter() {
        for xi in l1 {
            let w = wa.inverse().concat(xi).concat(wa);
            let e = g.evaluate(&w)?;
            if seen.insert(e.clone()) {
                conjugates.push((w, e));
            }
        }
    }
    // cube_words re-checks pairwise commutation and errors naming the pair
    let c = cube_words(g, &conjugates, level)?;

    let cap = max_set_cap();
    let mut out = WordSet::new();
    for (ea, wa) in a.iter() {
        for (ec, wc) in c.iter() {
            out.insert_first(g.multiply(ea, ec)?, wa.concat(wc));
            if out.len() > cap {
                return Err(Error::budget(format!(
                    "semiabe product exceeded the {cap}-element cap (set FOLNER_MAX_SET to raise it)"
                )));
            }
        }
    }
    Ok(out)
}

/// Splitting extension by an abelian normal closure: under the hypotheses
/// Γ = H1^Γ x| H2 (caller-asserted) with H1 = <L1>, H2 = <L2>, returns
/// A * C_n(L1^A) for an n-Følner A of H2. Commutation of the conjugates and
/// the Følner level of A are checked; the decomposition itself is not
/// decidable here and is trusted.
pub fn semiabe_folner(g: &Group, l1: &[Word], l2: &[Word], a_words: &[Word], n: u64) -> Result<WordSet> {
    let a = WordSet::from_words(g, a_words)?;
    semiabe_stage(g, l1, l2, &a, n, n)
}

/// One stage of a nested tower: its generator words and an optional
/// exponent cap p (for subgroups of exponent p, where C_n = C_p).
#[derive(Clone, Debug)]
pub struct TowerStage {
    pub words: Vec<Word>,
    pub exponent_cap: Option<u64>,
}

/// Iterated semiabelian construction, top-down: the first stage is the
/// plain cube C_n of its (commuting) generators, each further stage i maps
/// A -> A * C_min(n, p_i)(L_i^A).
pub fn nested_semiabe(g: &Group, tower: &[TowerStage], n: u64) -> Result<WordSet> {
    if tower.len() < 2 {
        return Err(Error::input("nested_semiabe needs a top stage and at least one extension stage"));
    }
    if n == 0 {
        return Err(Error::input("Følner level n must be >= 1"));
    }
    let top = &tower[0];
    let top_level = top.exponent_cap.map_or(n, |p| p.min(n));
    let top_gens: Vec<(Word, Element)> =
        top.words.iter().map(|w| Ok((w.clone(), g.evaluate(w)?))).collect::<Result<_>>()?;
    let mut acc = cube_words(g, &top_gens, top_level)?;
    let mut gens_so_far: Vec<Word> = top.words.clone();
    for stage in &tower[1..] {
        let level = stage.exponent_cap.map_or(n, |p| p.min(n));
        acc = semiabe_stage(g, &stage.words, &gens_so_far, &acc, n, level)?;
        gens_so_far.extend(stage.words.iter().cloned());
    }
    Ok(acc)
}

/// Abelian extension: for a lift A of a 2n-Følner set of K = Γ/N with ρ
/// injective on A, returns A * C_{2n|A|^2}(A^{-1}XA ∩ N). Commutation of
/// the discovered kernel elements is checked rather than assumed.
pub fn abelian_extension_folner(q: &QuotientStructure, a_words: &[Word], n: u64) -> Result<WordSet> {
    if n == 0 {
        return Err(Error::input("Følner level n must be >= 1"));
    }
    let gamma = &q.ambient;
    let k = &q.quotient;
    let a = WordSet::from_words(gamma, a_words)?;
    let a_quot = WordSet::from_words(k, a_words)?;
    if a.len() != a_quot.len() {
        return Err(Error::precondition(format!(
            "ρ is not injective on the lift: |A| = {} but |ρ(A)| = {}",
            a.len(),
            a_quot.len()
        )));
    }
    let k_gens: Vec<(String, Element)> = (0..k.alphabet().len())
        .map(|i| Ok((k.alphabet().name(i).to_string(), k.generator_element(i)?)))
        .collect::<Result<_>>()?;
    check_set_level(k, &a_quot.finite_set(), &k_gens, 2 * n, "ρ(A)")?;

    // S = A^{-1} X A ∩ N by exhaustive double loop, membership via K.
    let mut s: Vec<(Word, Element)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    let id = gamma.identity();
    for (_, wa) in a.iter() {
        for x in 0..gamma.alphabet().len() {
            for (_, wa2) in a.iter() {
                let w = wa.inverse().concat(&Word::generator(x)).concat(wa2);
                if q.in_kernel(&w)? {
                    let e = gamma.evaluate(&w)?;
                    if e != id && seen.insert(e.clone()) {
                        s.push((w, e));
                    }
                }
            }
        }
    }
    for (i, (wi, ei)) in s.iter().enumerate() {
        for (wj, ej) in s.iter().skip(i + 1) {
            if !gamma.commute(ei, ej)? {
                return Err(Error::precondition(format!(
                    "kernel elements `{}` and `{}` do not commute: N is not abelian",
                    wi.display(gamma.alphabet()),
                    wj.display(gamma.alphabet())
                )));
            }
        }
    }

    let a_count = a.len() as u64;
    let level = 2u64
        .checked_mul(n)
        .and_then(|v| v.checked_mul(a_count.checked_mul(a_count)?))
        .ok_or_else(|| Error::budget("cube level 2n|A|^2 overflows"))?;
    let b = cube_words(gamma, &s, level)?;

    let cap = max_set_cap();
    let mut out = WordSet::new();
    for (ea, wa) in a.iter() {
        for (eb, wb) in b.iter() {
            out.insert_first(gamma.multiply(ea, eb)?, wa.concat(wb));
            if out.len() > cap {
                return Err(Error::budget(format!(
                    "abelian-extension product exceeded the {cap}-element cap"
                )));
            }
        }
    }
    if out.len() != a.len() * b.len() {
        return Err(Error::precondition(format!(
            "product cardinality |AB| = {} differs from |A||B| = {}",
            out.len(),
            a.len() * b.len()
        )));
    }
    Ok(out)
}

/// BFS witnesses for every element of `set`, growing the ball until all are
/// found. Returns (max geodesic length over the set, witness word set).
fn geodesic_witnesses(g: &Group, set: &FiniteSet, what: &str) -> Result<(usize, WordSet)> {
    let budget = SearchBudget::default();
    let mut radius = 1usize;
    loop {
        let ball = group_ball(g, radius, &budget)?;
        if set.iter().all(|e| ball.witness(e).is_some()) {
            let mut ws = WordSet::new();
            let mut max_len = 0usize;
            for e in set.iter() {
                let w = ball.witness(e).unwrap().clone();
                max_len = max_len.max(w.len());
                ws.insert_first(e.clone(), w);
            }
            return Ok((max_len, ws));
        }
        if ball.sizes.last() == ball.sizes.get(ball.sizes.len().saturating_sub(2)) && radius > 1 {
            // ball saturated without covering the set
            return Err(Error::input(format!("{what} contains elements outside the group generated by its alphabet")));
        }
        radius += 1;
        if radius > 64 {
            return Err(Error::budget(format!("geodesic search for {what} exceeded radius 64")));
        }
    }
}

/// Re-index an H-word into the product alphabet of N x| H.
fn shift_word(w: &Word, by: usize) -> Word {
    Word::reduce(w.letters().iter().map(|l| Letter::new(l.gen() + by, l.positive)))
}

/// Semidirect product: for A n-Følner in H and B (n c^{|A|_Y})-Følner in N,
/// A*B is n-Følner in P = N x| H. |A|_Y is computed from geodesic witnesses
/// in H. Both hypothesis levels are checked.
pub fn semidirect_folner(d: &SemidirectData, a: &FiniteSet, b: &FiniteSet, n: u64) -> Result<WordSet> {
    if n == 0 {
        return Err(Error::input("Følner level n must be >= 1"));
    }
    let ng = d.n_group();
    let hg = d.h_group();
    let h_gens: Vec<(String, Element)> = (0..hg.alphabet().len())
        .map(|i| Ok((hg.alphabet().name(i).to_string(), hg.generator_element(i)?)))
        .collect::<Result<_>>()?;
    check_set_level(hg, a, &h_gens, n, "A (in H)")?;

    let (a_norm, a_witness) = geodesic_witnesses(hg, a, "A")?;
    let level_b = d
        .c
        .checked_pow(a_norm.try_into().map_err(|_| Error::budget("|A|_Y too large"))?)
        .and_then(|p| p.checked_mul(n))
        .ok_or_else(|| Error::budget("required level n*c^|A|_Y overflows"))?;
    let n_gens: Vec<(String, Element)> = (0..ng.alphabet().len())
        .map(|i| Ok((ng.alphabet().name(i).to_string(), ng.generator_element(i)?)))
        .collect::<Result<_>>()?;
    check_set_level(ng, b, &n_gens, level_b, &format!("B (in N, required level n*c^|A|_Y = {level_b})"))?;

    let (_, b_witness) = geodesic_witnesses(ng, b, "B")?;
    let p = &d.product;
    let zc = ng.alphabet().len();
    let cap = max_set_cap();
    let mut out = WordSet::new();
    for (_, wa) in a_witness.iter() {
        for (_, wb) in b_witness.iter() {
            // a then b: evaluates to (phi_{h_a}(b), h_a) in P
            let w = shift_word(wa, zc).concat(wb);
            out.insert_first(p.evaluate(&w)?, w);
            if out.len() > cap {
                return Err(Error::budget("semidirect product set exceeded the cap"));
            }
        }
    }
    if out.len() != a.len() * b.len() {
        return Err(Error::precondition(format!(
            "product cardinality |AB| = {} differs from |A||B| = {}",
            out.len(),
            a.len() * b.len()
        )));
    }
    Ok(out)
}

/// Map each element of `b` (a subset of N over Y) to its image in Γ by a
/// BFS over N whose steps are mirrored through the embedding words.
fn embed_finite_set(ext: &ExtensionData, b: &FiniteSet) -> Result<Vec<Element>> {
    let gamma = &ext.quotient.ambient;
    let ng = &ext.n_group;
    let mut steps = Vec::new();
    for (i, w) in ext.embed.iter().enumerate() {
        let gen = ng.generator_element(i)?;
        let img = gamma.evaluate(w)?;
        steps.push((ng.inverse(&gen)?, gamma.inverse(&img)?));
        steps.push((gen, img));
    }
    let mut map: BTreeMap<Element, Element> = BTreeMap::from([(ng.identity(), gamma.identity())]);
    let mut frontier = vec![ng.identity()];
    let mut remaining = b.iter().filter(|e| **e != ng.identity()).count();
    let cap = max_set_cap();
    while remaining > 0 {
        if map.len() > cap {
            return Err(Error::budget("embedding BFS exceeded the set cap"));
        }
        let mut next = Vec::new();
        for e in &frontier {
            let ge = map[e].clone();
            for (step_n, step_g) in &steps {
                let t = ng.multiply(e, step_n)?;
                if !map.contains_key(&t) {
                    let gt = gamma.multiply(&ge, step_g)?;
                    if b.contains(&t) {
                        remaining -= 1;
                    }
                    map.insert(t.clone(), gt);
                    next.push(t);
                }
            }
        }
        if next.is_empty() {
            return Err(Error::input("B contains elements outside the subgroup generated by Y"));
        }
        frontier = next;
    }
    b.iter()
        .map(|e| map.get(e).cloned().ok_or_else(|| Error::input("B element not reached by the embedding BFS")))
        .collect()
}

/// General extension with distortion control: for a geodesic lift A of a
/// 2n-Følner set of K and B Følner in N at level 2n|A'|^2 Δ(2|A'|_{ρ(X)}+1),
/// A*B is n-Følner in Γ. Requires `ext.distortion` computed at least to
/// radius 2|A'|_{ρ(X)}+1. Returns elements only: for big distortion levels
/// the word set would dwarf the element set.
pub fn general_extension_folner(
    ext: &ExtensionData,
    a_words: &[Word],
    b: &FiniteSet,
    n: u64,
) -> Result<FiniteSet> {
    if n == 0 {
        return Err(Error::input("Følner level n must be >= 1"));
    }
    let gamma = &ext.quotient.ambient;
    let k = &ext.quotient.quotient;
    let a = WordSet::from_words(gamma, a_words)?;
    let a_quot = WordSet::from_words(k, a_words)?;
    if a.len() != a_quot.len() {
        return Err(Error::precondition(format!(
            "ρ is not injective on the lift: |A| = {} but |A'| = {}",
            a.len(),
            a_quot.len()
        )));
    }
    let k_gens: Vec<(String, Element)> = (0..k.alphabet().len())
        .map(|i| Ok((k.alphabet().name(i).to_string(), k.generator_element(i)?)))
        .collect::<Result<_>>()?;
    check_set_level(k, &a_quot.finite_set(), &k_gens, 2 * n, "A' = ρ(A)")?;

    // |A'|_{ρ(X)} from geodesics in K; then check |A|_X <= |A'|_{ρ(X)}.
    let (a_quot_norm, _) = geodesic_witnesses(k, &a_quot.finite_set(), "A'")?;
    let gamma_ball = group_ball(gamma, a_quot_norm, &SearchBudget::default())?;
    for (e, w) in a.iter() {
        if gamma_ball.witness(e).is_none() {
            return Err(Error::precondition(format!(
                "lift word `{}` is not geodesic: |A|_X exceeds |A'|_ρ(X) = {a_quot_norm}",
                w.display(gamma.alphabet())
            )));
        }
    }

    let table = ext
        .distortion
        .as_ref()
        .ok_or_else(|| Error::input("ExtensionData has no distortion table; run the distortion operation first"))?;
    let radius = 2 * a_quot_norm + 1;
    let delta = table.delta(radius)?;
    let a_count = a.len() as u64;
    let level_b = 2u64
        .checked_mul(n)
        .and_then(|v| v.checked_mul(a_count.checked_mul(a_count)?))
        .and_then(|v| v.checked_mul(delta.max(1)))
        .ok_or_else(|| Error::budget("required B level overflows"))?;
    let n_gens: Vec<(String, Element)> = (0..ext.n_group.alphabet().len())
        .map(|i| Ok((ext.n_group.alphabet().name(i).to_string(), ext.n_group.generator_element(i)?)))
        .collect::<Result<_>>()?;
    check_set_level(
        &ext.n_group,
        b,
        &n_gens,
        level_b,
        &format!("B (in N over Y, required level 2n|A'|^2 Δ({radius}) = {level_b})"),
    )?;

    let embedded = embed_finite_set(ext, b)?;
    let cap = max_set_cap();
    let mut out = FiniteSet::new();
    for (ea, _) in a.iter() {
        for eb in &embedded {
            out.insert(gamma.multiply(ea, eb)?);
            if out.len() > cap {
                return Err(Error::budget("general-extension product set exceeded the cap"));
            }
        }
    }
    if out.len() != a.len() * b.len() {
        return Err(Error::precondition(format!(
            "product cardinality |AB| = {} differs from |A||B| = {}",
            out.len(),
            a.len() * b.len()
        )));
    }
    Ok(out)
}

/// Change of generators: given a scheme over X and expression maps
/// φ: X -> F_Y, ψ: Y -> F_X, query the scheme at m*n with m = max |ψ(y)|
/// and push the words through φ. The result evaluates to an n-Følner set
/// with respect to Y.
pub fn transport_generators(
    scheme: &FolnerScheme,
    phi: &[Word],
    psi: &[Word],
    n: u64,
) -> Result<Vec<Word>> {
    if n == 0 {
        return Err(Error::input("Følner level n must be >= 1"));
    }
    let m = psi.iter().map(|w| w.len() as u64).max().unwrap_or(0);
    if m == 0 {
        return Err(Error::input("ψ maps every new generator to the empty word"));
    }
    let source = scheme.generate(m.checked_mul(n).ok_or_else(|| Error::budget("m*n overflows"))?)?;
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for w in source.words() {
        let img = w.substitute(phi)?;
        if seen.insert(img.clone()) {
            out.push(img);
        }
    }
    Ok(out)
}

/// Spot-check that φ and ψ are compatible expression maps between two
/// presentations of the same group: π_Y(φ(x)) = π_Y-side image of x and
/// symmetrically, verified through both evaluable groups.
pub fn check_expression_maps(gx: &Group, gy: &Group, phi: &[Word], psi: &[Word]) -> Result<()> {
    if phi.len() != gx.alphabet().len() || psi.len() != gy.alphabet().len() {
        return Err(Error::input("expression maps must cover every generator"));
    }
    // x -> φ(x) -> ψ-image should evaluate like x in the X-group
    for (i, w) in phi.iter().enumerate() {
        let back = w.substitute(psi)?;
        if gx.evaluate(&back)? != gx.generator_element(i)? {
            return Err(Error::input(format!(
                "ψ∘φ does not fix generator `{}`",
                gx.alphabet().name(i)
            )));
        }
    }
    for (i, w) in psi.iter().enumerate() {
        let back = w.substitute(phi)?;
        if gy.evaluate(&back)? != gy.generator_element(i)? {
            return Err(Error::input(format!(
                "φ∘ψ does not fix generator `{}`",
                gy.alphabet().name(i)
            )));
        }
    }
    Ok(())
}

// ---- corollary bound calculators (exact big-integer arithmetic) ---------

fn big_pow(base: &BigUint, exp: &BigUint) -> Result<BigUint> {
    let e: u64 = exp
        .try_into()
        .map_err(|_| Error::budget("bound exponent too large to materialize"))?;
    Ok(base.pow(e.try_into().map_err(|_| Error::budget("bound exponent too large to materialize"))?))
}

/// Kharlampovich-shape bound n^l2 * p^(l1 n^l2) * p^(l0 n^l2 p^(l1 n^l2)).
pub fn bound_gm(n: u64, p: u64, l0: u64, l1: u64, l2: u64) -> Result<BigUint> {
    for (name, v) in [("n", n), ("p", p), ("l0", l0), ("l1", l1), ("l2", l2)] {
        if v == 0 {
            return Err(Error::input(format!("bound_gm argument {name} must be >= 1")));
        }
    }
    let n = BigUint::from(n);
    let p = BigUint::from(p);
    let t = big_pow(&n, &BigUint::from(l2))?; // n^l2
    let f1 = big_pow(&p, &(BigUint::from(l1) * &t))?; // p^(l1 n^l2)
    let f2 = big_pow(&p, &(BigUint::from(l0) * &t * &f1))?;
    Ok(t * f1 * f2)
}

/// Abelian-extension bound Fq * (2n Fq^2)^(|X| Fq^2), Fq = F_{Γ/N}(2n).
pub fn bound_abelian_ext(n: u64, size_x: u64, fq: &BigUint) -> Result<BigUint> {
    if n == 0 || size_x == 0 || fq < &BigUint::one() {
        return Err(Error::input("bound_abelian_ext arguments must be >= 1"));
    }
    let fq2 = fq * fq;
    let base = BigUint::from(2 * n) * &fq2;
    Ok(fq * big_pow(&base, &(BigUint::from(size_x) * &fq2))?)
}

/// Følner-function tables for the semidirect/general-extension bounds.
#[derive(Clone, Debug)]
pub enum BoundTable {
    Identity,
    /// k -> k^e
    Power(u32),
    Const(BigUint),
    Map(BTreeMap<BigUint, BigUint>),
}

impl BoundTable {
    pub fn eval(&self, k: &BigUint) -> Result<BigUint> {
        match self {
            BoundTable::Identity => Ok(k.clone()),
            BoundTable::Power(e) => Ok(k.pow(*e)),
            BoundTable::Const(v) => Ok(v.clone()),
            BoundTable::Map(m) => m
                .get(k)
                .cloned()
                .ok_or_else(|| Error::input(format!("bound table has no entry at argument {k}"))),
        }
    }
}

/// Semidirect bound F_H(n|Y|) * F_N(n c^F_H(n|Y|)).
pub fn bound_semidirect(n: u64, size_y: u64, c: u64, f_h: &BoundTable, f_n: &BoundTable) -> Result<BigUint> {
    if n == 0 || size_y == 0 || c == 0 {
        return Err(Error::input("bound_semidirect arguments must be >= 1"));
    }
    let fh = f_h.eval(&BigUint::from(n * size_y))?;
    let arg = BigUint::from(n) * big_pow(&BigUint::from(c), &fh)?;
    Ok(&fh * f_n.eval(&arg)?)
}

/// General-extension bound F_K(|X|n) * F_N(2n F_K(|X|n)^2 Δ(2 F_K(|X|n)+1)).
pub fn bound_general_ext(
    n: u64,
    size_x: u64,
    f_k: &BoundTable,
    f_n: &BoundTable,
    delta: &BoundTable,
) -> Result<BigUint> {
    if n == 0 || size_x == 0 {
        return Err(Error::input("bound_general_ext arguments must be >= 1"));
    }
    let fk = f_k.eval(&BigUint::from(size_x * n))?;
    let d = delta.eval(&(BigUint::from(2u32) * &fk + BigUint::one()))?;
    let arg = BigUint::from(2 * n) * &fk * &fk * d;
    Ok(&fk * f_n.eval(&arg)?)
}

// ---- scheme construction -------------------------------------------------

/// Scheme construction method for the CLI's `scheme` subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeMethod {
    Auto,
    Enumerate,
    Cube,
    Semiabe,
    Abex,
    Semid,
}

/// Structural scheme for a built group: the matching combinator when the
/// group declares semidirect/quotient/wreath structure, the generator cube
/// for Z^d, the whole group for finite tables, and enumerate-and-check as
/// the generic fallback.
pub fn scheme_for(g: &Group, method: SchemeMethod, budget: &SearchBudget) -> Result<FolnerScheme> {
    match method {
        SchemeMethod::Auto => {
            if g.quotient_group().is_some() {
                scheme_for(g, SchemeMethod::Abex, budget)
            } else if g.semidirect_parts().is_some() {
                scheme_for(g, SchemeMethod::Semid, budget)
            } else if g.wreath_parts().is_some() {
                scheme_for(g, SchemeMethod::Semiabe, budget)
            } else {
                match g.kind_name() {
                    "zd" => scheme_for(g, SchemeMethod::Cube, budget),
                    "finite" => {
                        // finite tables hold at most 512 elements, so the
                        // ball saturates well before radius 1024
                        let ball = group_ball(g, 1024, budget)?;
                        Ok(FolnerScheme::new("whole-finite-group", move |_n| {
                            let mut ws = WordSet::new();
                            for (e, w) in ball.entries() {
                                ws.insert_first(e.clone(), w.clone());
                            }
                            Ok(ws)
                        }))
                    }
                    _ => scheme_for(g, SchemeMethod::Enumerate, budget),
                }
            }
        }
        SchemeMethod::Enumerate => {
            let g = g.clone();
            let budget = budget.clone();
            Ok(FolnerScheme::new("enumerate-and-check", move |n| enumerate_and_check(&g, n, &budget)))
        }
        SchemeMethod::Cube => {
            let g = g.clone();
            Ok(FolnerScheme::new("cube(generators)", move |n| {
                let gens: Vec<(Word, Element)> = (0..g.alphabet().len())
                    .map(|i| Ok((Word::generator(i), g.generator_element(i)?)))
                    .collect::<Result<_>>()?;
                cube_words(&g, &gens, n)
            }))
        }
        SchemeMethod::Semiabe => {
            let (_, base) = g
                .wreath_parts()
                .ok_or_else(|| Error::input("semiabe scheme requires a wreath-product group"))?;
            let base_scheme = scheme_for(base, SchemeMethod::Auto, budget)?;
            let provenance = format!("semiabe(lamps; A = {})", base_scheme.provenance);
            let g = g.clone();
            Ok(FolnerScheme::new(provenance, move |n| {
                let a = base_scheme.generate(n)?;
                let a_words: Vec<Word> = a.words().map(|w| g.embed_base(w)).collect();
                let l2: Vec<Word> = (1..g.alphabet().len()).map(Word::generator).collect();
                semiabe_folner(&g, &[Word::generator(0)], &l2, &a_words, n)
            }))
        }
        SchemeMethod::Abex => {
            let k = g
                .quotient_group()
                .ok_or_else(|| Error::input("abelian-extension scheme requires a declared quotient"))?;
            let k_scheme = scheme_for(k, SchemeMethod::Auto, budget)?;
            let provenance = format!("abex(K-scheme = {})", k_scheme.provenance);
            let q = QuotientStructure::from_group(g)?;
            Ok(FolnerScheme::new(provenance, move |n| {
                let a = k_scheme.generate(2 * n)?;
                let a_words: Vec<Word> = a.words().cloned().collect();
                abelian_extension_folner(&q, &a_words, n)
            }))
        }
        SchemeMethod::Semid => {
            let data = SemidirectData::new(g.clone())?;
            let n_scheme = scheme_for(data.n_group(), SchemeMethod::Auto, budget)?;
            let h_scheme = scheme_for(data.h_group(), SchemeMethod::Auto, budget)?;
            let provenance =
                format!("semid(c = {}; A = {}; B = {})", data.c, h_scheme.provenance, n_scheme.provenance);
            Ok(FolnerScheme::new(provenance, move |n| {
                let a = h_scheme.generate(n)?;
                let m: u32 = a
                    .max_word_len()
                    .try_into()
                    .map_err(|_| Error::budget("A words too long"))?;
                let level_b = data
                    .c
                    .checked_pow(m)
                    .and_then(|p| p.checked_mul(n))
                    .ok_or_else(|| Error::budget("required level n*c^m overflows"))?;
                let b = n_scheme.generate(level_b)?;
                semidirect_folner(&data, &a.finite_set(), &b.finite_set(), n)
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::folner::verify_folner;
    use num_traits::Num;

    fn lamplighter_tower_words(_g: &Group) -> (Vec<Word>, Vec<Word>) {
        // (L1 = {a}, L2 = {t}) in the lamplighter alphabet {a, t}
        (vec![Word::generator(0)], vec![Word::generator(1)])
    }

    #[test]
    fn semiabe_lamplighter_example() {
        let g = Group::lamplighter(2).unwrap();
        let (l1, l2) = lamplighter_tower_words(&g);
        let n = 3u64;
        let a_words: Vec<Word> = (0..n as i64).map(|i| Word::generator(1).pow(i)).collect();
        let f = semiabe_folner(&g, &l1, &l2, &a_words, n).unwrap();
        assert_eq!(f.len(), 24); // n * 2^n = 3 * 8
        let set = f.finite_set();
        let a = g.generator_element(0).unwrap();
        let t = g.generator_element(1).unwrap();
        assert_eq!(left_defect(&g, &set, &a).unwrap(), num_rational::Ratio::new(0, 1));
        assert_eq!(left_defect(&g, &set, &t).unwrap(), num_rational::Ratio::new(1, 3));
        assert!(verify_folner(&g, &set, n).unwrap().verdict);
    }

    #[test]
    fn semiabe_trivial_level_one() {
        // A = {e} passes at level 1; C_1(a) = {e}, so F = {e}
        let g = Group::lamplighter(2).unwrap();
        let (l1, l2) = lamplighter_tower_words(&g);
        let f = semiabe_folner(&g, &l1, &l2, &[Word::empty()], 1).unwrap();
        assert_eq!(f.len(), 1);
        assert!(verify_folner(&g, &f.finite_set(), 1).unwrap().verdict);
    }

    #[test]
    fn semiabe_rejects_bad_a() {
        let g = Group::lamplighter(2).unwrap();
        let (l1, l2) = lamplighter_tower_words(&g);
        // A = {e} is not 3-Følner wrt t
        let err = semiabe_folner(&g, &l1, &l2, &[Word::empty()], 3).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn nested_depth_one_matches_plain_semiabe() {
        let g = Group::lamplighter(2).unwrap();
        let (l1, l2) = lamplighter_tower_words(&g);
        let n = 3u64;
        let tower = vec![
            TowerStage { words: l2.clone(), exponent_cap: None },
            TowerStage { words: l1.clone(), exponent_cap: Some(2) },
        ];
        let nested = nested_semiabe(&g, &tower, n).unwrap();
        let a_words: Vec<Word> = (0..n as i64).map(|i| Word::generator(1).pow(i)).collect();
        let plain = semiabe_folner(&g, &l1, &l2, &a_words, n).unwrap();
        assert_eq!(nested.finite_set(), plain.finite_set());
    }

    #[test]
    fn abelian_extension_heisenberg() {
        let g = Group::heisenberg().unwrap();
        let q = QuotientStructure::from_group(&g).unwrap();
        let n = 2u64;
        let mut a_words = Vec::new();
        for i in 0..4i64 {
            for j in 0..4i64 {
                a_words.push(Word::generator(0).pow(i).concat(&Word::generator(1).pow(j)));
            }
        }
        let f = abelian_extension_folner(&q, &a_words, n).unwrap();
        assert_eq!(f.len() % 16, 0);
        assert!(verify_folner(&g, &f.finite_set(), n).unwrap().verdict);
    }

    #[test]
    fn abelian_extension_trivial_kernel() {
        // K = Γ = Z²: S is empty, output = A, theorem degenerates
        let gamma = Group::free_abelian(2).unwrap();
        let q = QuotientStructure::new(gamma.clone(), gamma.clone()).unwrap();
        let n = 2u64;
        let mut a_words = Vec::new();
        for i in 0..4i64 {
            for j in 0..4i64 {
                a_words.push(Word::generator(0).pow(i).concat(&Word::generator(1).pow(j)));
            }
        }
        let f = abelian_extension_folner(&q, &a_words, n).unwrap();
        assert_eq!(f.len(), 16);
        assert!(verify_folner(&gamma, &f.finite_set(), n).unwrap().verdict);
    }

    #[test]
    fn abelian_extension_z2_over_z() {
        // Z² as extension of Z by Z (N = <e2>)
        let gamma = Group::free_abelian(2).unwrap();
        let k = Group::free_abelian_named(1, vec!["e1".into(), "e2".into()], Some(vec![vec![1], vec![0]])).unwrap();
        let q = QuotientStructure::new(gamma.clone(), k).unwrap();
        let a_words: Vec<Word> = (0..4i64).map(|i| Word::generator(0).pow(i)).collect();
        let f = abelian_extension_folner(&q, &a_words, 2).unwrap();
        assert!(verify_folner(&gamma, &f.finite_set(), 2).unwrap().verdict);
    }

    fn unipotent() -> Group {
        Group::semidirect(
            Group::free_abelian_named(2, vec!["z1".into(), "z2".into()], None).unwrap(),
            Group::free_abelian_named(1, vec!["t".into()], None).unwrap(),
            &[
                ("t".into(), "z1".into(), "z1".into()),
                ("t".into(), "z2".into(), "z1 z2".into()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn semidirect_unipotent_example() {
        let d = SemidirectData::new(unipotent()).unwrap();
        assert_eq!(d.c, 2);
        let n = 2u64;
        let a = FiniteSet::from_elements((0..2i64).map(|i| Element::Vector(vec![i])));
        let b = FiniteSet::from_elements(
            (0..4i64).flat_map(|i| (0..4i64).map(move |j| Element::Vector(vec![i, j]))),
        );
        let f = semidirect_folner(&d, &a, &b, n).unwrap();
        assert_eq!(f.len(), 32);
        assert!(verify_folner(&d.product, &f.finite_set(), n).unwrap().verdict);
    }

    #[test]
    fn semidirect_direct_product_case() {
        // trivial action: c = 1, grids multiply
        let g = Group::semidirect(
            Group::free_abelian_named(1, vec!["z".into()], None).unwrap(),
            Group::free_abelian_named(1, vec!["t".into()], None).unwrap(),
            &[("t".into(), "z".into(), "z".into())],
        )
        .unwrap();
        let d = SemidirectData::new(g).unwrap();
        assert_eq!(d.c, 1);
        let a = FiniteSet::from_elements((0..5i64).map(|i| Element::Vector(vec![i])));
        let b = a.clone();
        let f = semidirect_folner(&d, &a, &b, 5).unwrap();
        assert_eq!(f.len(), 25);
        assert!(verify_folner(&d.product, &f.finite_set(), 5).unwrap().verdict);
    }

    #[test]
    fn semidirect_level_one_accepts_singletons() {
        let d = SemidirectData::new(unipotent()).unwrap();
        let a = FiniteSet::from_elements([Element::Vector(vec![0])]);
        let b = FiniteSet::from_elements([Element::Vector(vec![0, 0])]);
        let f = semidirect_folner(&d, &a, &b, 1).unwrap();
        assert!(verify_folner(&d.product, &f.finite_set(), 1).unwrap().verdict);
    }

    #[test]
    fn semidirect_names_failing_hypothesis() {
        let d = SemidirectData::new(unipotent()).unwrap();
        let a = FiniteSet::from_elements((0..2i64).map(|i| Element::Vector(vec![i])));
        let b = FiniteSet::from_elements([Element::Vector(vec![0, 0])]); // far too small
        let err = semidirect_folner(&d, &a, &b, 2).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("required level"), "{msg}");
    }

    #[test]
    fn general_extension_z2_over_z() {
        // Γ = Z², N = <e2> with its own generator f, Δ(r) = r
        let gamma = Group::free_abelian(2).unwrap();
        let k = Group::free_abelian_named(1, vec!["e1".into(), "e2".into()], Some(vec![vec![1], vec![0]]))
            .unwrap();
        let q = QuotientStructure::new(gamma.clone(), k).unwrap();
        let ng = Group::free_abelian_named(1, vec!["f".into()], None).unwrap();
        let ext = ExtensionData::new(q, ng, vec![Word::generator(1)]).unwrap();
        let table = crate::search::distortion(&ext, 11, &SearchBudget::default()).unwrap();
        assert_eq!(table.delta(11).unwrap(), 11);
        let ext = ext.with_distortion(table);
        let n = 3u64;
        let a_words: Vec<Word> = (0..6i64).map(|i| Word::generator(0).pow(i)).collect();
        // required B level: 2n |A'|^2 Δ(2*5+1) = 6 * 36 * 11 = 2376
        let b = FiniteSet::from_elements((0..2376i64).map(|v| Element::Vector(vec![v])));
        let f = general_extension_folner(&ext, &a_words, &b, n).unwrap();
        assert_eq!(f.len(), 6 * 2376);
        assert!(verify_folner(&gamma, &f, n).unwrap().verdict);
    }

    #[test]
    fn general_extension_trivial_quotient() {
        // K trivial: output = B, required level 2n Δ(1)
        let gamma = Group::free_abelian(2).unwrap();
        let k = Group::free_abelian_named(1, vec!["q1".into(), "q2".into()], Some(vec![vec![0], vec![0]]))
            .unwrap();
        let q = QuotientStructure::new(gamma.clone(), k).unwrap();
        let ext = ExtensionData::new(
            q,
            Group::free_abelian(2).unwrap(),
            vec![Word::generator(0), Word::generator(1)],
        )
        .unwrap();
        let table = crate::search::distortion(&ext, 1, &SearchBudget::default()).unwrap();
        let ext = ext.with_distortion(table);
        let n = 2u64;
        let b = FiniteSet::from_elements(
            (0..4i64).flat_map(|i| (0..4i64).map(move |j| Element::Vector(vec![i, j]))),
        );
        let f = general_extension_folner(&ext, &[Word::empty()], &b, n).unwrap();
        assert_eq!(f, b);
        assert!(verify_folner(&gamma, &f, n).unwrap().verdict);
    }

    #[test]
    fn general_extension_missing_distortion_table() {
        let gamma = Group::free_abelian(2).unwrap();
        let k = Group::free_abelian_named(1, vec!["e1".into(), "e2".into()], Some(vec![vec![1], vec![0]]))
            .unwrap();
        let q = QuotientStructure::new(gamma.clone(), k).unwrap();
        let ng = Group::free_abelian_named(1, vec!["f".into()], None).unwrap();
        let ext = ExtensionData::new(q, ng, vec![Word::generator(1)]).unwrap();
        let b = FiniteSet::from_elements((0..4i64).map(|v| Element::Vector(vec![v])));
        let err =
            general_extension_folner(&ext, &[Word::empty(), Word::generator(0)], &b, 1).unwrap_err();
        assert!(format!("{err}").contains("distortion"), "{err}");
    }

    #[test]
    fn transport_z_generator_change() {
        // X = {t -> 1}, Y = {u -> 2, v -> 3}; ψ(u) = t², ψ(v) = t³, φ(t) = v u^{-1}
        let gx = Group::free_abelian_named(1, vec!["t".into()], None).unwrap();
        let gy =
            Group::free_abelian_named(1, vec!["u".into(), "v".into()], Some(vec![vec![2], vec![3]]))
                .unwrap();
        let phi = vec![Word::parse("v u^-1", gy.alphabet()).unwrap()];
        let psi = vec![
            Word::parse("t^2", gx.alphabet()).unwrap(),
            Word::parse("t^3", gx.alphabet()).unwrap(),
        ];
        check_expression_maps(&gx, &gy, &phi, &psi).unwrap();
        let scheme = scheme_for(&gx, SchemeMethod::Cube, &SearchBudget::default()).unwrap();
        let out = transport_generators(&scheme, &phi, &psi, 2).unwrap();
        let set = FiniteSet::from_words(&gy, &out).unwrap();
        assert_eq!(set.len(), 6); // {0..5}
        let rep = verify_folner(&gy, &set, 2).unwrap();
        assert!(rep.verdict);
        assert_eq!(rep.defects[0].1, num_rational::Ratio::new(1, 3)); // wrt u = +2
        assert_eq!(rep.defects[1].1, num_rational::Ratio::new(1, 2)); // wrt v = +3
    }

    #[test]
    fn transport_identity_maps() {
        let g = Group::free_abelian(2).unwrap();
        let phi = vec![Word::generator(0), Word::generator(1)];
        let scheme = scheme_for(&g, SchemeMethod::Cube, &SearchBudget::default()).unwrap();
        for n in 1..=3 {
            let out = transport_generators(&scheme, &phi, &phi, n).unwrap();
            let direct = scheme.generate(n).unwrap();
            assert_eq!(
                FiniteSet::from_words(&g, &out).unwrap(),
                direct.finite_set()
            );
        }
    }

    #[test]
    fn bound_gm_examples() {
        assert_eq!(bound_gm(2, 2, 1, 1, 1).unwrap(), BigUint::from(2048u32));
        assert_eq!(bound_gm(3, 2, 1, 1, 1).unwrap(), BigUint::from(402653184u64));
        // n = 1 collapses the first factor: p^l1 * p^(l0 p^l1)
        assert_eq!(bound_gm(1, 3, 2, 1, 5).unwrap(), BigUint::from(3u32) * BigUint::from(3u32).pow(6));
    }

    #[test]
    fn bound_abelian_ext_examples() {
        assert_eq!(bound_abelian_ext(1, 1, &BigUint::from(2u32)).unwrap(), BigUint::from(8192u32));
        assert_eq!(bound_abelian_ext(3, 2, &BigUint::one()).unwrap(), BigUint::from(36u32)); // (2n)^sizeX
        // 16 * 1024^512 against an independent exponentiation route
        let expected = BigUint::from(16u32)
            * BigUint::from_str_radix("2", 10).unwrap().pow(10u32 * 512);
        assert_eq!(bound_abelian_ext(2, 2, &BigUint::from(16u32)).unwrap(), expected);
    }

    #[test]
    fn bound_semidirect_examples() {
        let id = BoundTable::Identity;
        let sq = BoundTable::Power(2);
        assert_eq!(bound_semidirect(2, 1, 2, &id, &sq).unwrap(), BigUint::from(128u32));
        assert_eq!(bound_semidirect(3, 1, 1, &id, &id).unwrap(), BigUint::from(9u32)); // n²
        assert_eq!(bound_semidirect(1, 2, 3, &id, &id).unwrap(), BigUint::from(18u32));
    }

    #[test]
    fn bound_general_ext_examples() {
        let id = BoundTable::Identity;
        assert_eq!(bound_general_ext(2, 1, &id, &id, &id).unwrap(), BigUint::from(160u32));
        let one = BoundTable::Const(BigUint::one());
        assert_eq!(bound_general_ext(5, 3, &id, &one, &id).unwrap(), BigUint::from(15u32));
        let sq = BoundTable::Power(2);
        assert_eq!(bound_general_ext(1, 2, &sq, &id, &id).unwrap(), BigUint::from(1152u32));
    }

    #[test]
    fn bound_table_gap_is_an_input_error() {
        let m = BoundTable::Map(BTreeMap::from([(BigUint::from(2u32), BigUint::from(2u32))]));
        let err = bound_semidirect(2, 1, 2, &m, &m).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("no entry"), "{msg}");
    }

    #[test]
    fn bounds_are_monotone_in_n() {
        let id = BoundTable::Identity;
        let mut prev_s = BigUint::from(0u32);
        let mut prev_g = BigUint::from(0u32);
        let mut prev_gm = BigUint::from(0u32);
        let mut prev_a = BigUint::from(0u32);
        for n in 1..=6 {
            let s = bound_semidirect(n, 2, 2, &id, &id).unwrap();
            let ge = bound_general_ext(n, 2, &id, &id, &id).unwrap();
            let gm = bound_gm(n, 2, 1, 1, 1).unwrap();
            let ab = bound_abelian_ext(n, 2, &BigUint::from(4u32)).unwrap();
            assert!(s >= prev_s && ge >= prev_g && gm >= prev_gm && ab >= prev_a);
            prev_s = s;
            prev_g = ge;
            prev_gm = gm;
            prev_a = ab;
        }
    }

    #[test]
    fn scheme_soundness_matrix() {
        // every scheme output passes verify_folner at the requested level
        let budget = SearchBudget::default();
        // Heisenberg capped at n = 2: its abelian-extension set already has
        // ~10^5 elements there and grows superpolynomially with n.
        let groups: Vec<(Group, u64)> = vec![
            (Group::free_abelian(2).unwrap(), 4),
            (Group::cyclic(2).unwrap(), 4),
            (Group::heisenberg().unwrap(), 2),
            (Group::lamplighter(2).unwrap(), 4),
            (unipotent(), 3),
        ];
        for (g, n_max) in &groups {
            let scheme = scheme_for(g, SchemeMethod::Auto, &budget).unwrap();
            for n in 1..=*n_max {
                let ws = scheme.generate(n).unwrap();
                let rep = verify_folner(g, &ws.finite_set(), n).unwrap();
                assert!(rep.verdict, "{} via {} failed at n={n}", g.kind_name(), scheme.provenance);
            }
        }
    }
}
