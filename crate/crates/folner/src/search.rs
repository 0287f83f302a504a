//! Cayley-ball enumeration, the enumerate-and-check scheme, optimal
//! Følner-set search, Følner-function tabulation, and distortion functions.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::combinators::ExtensionData;
use crate::error::{Error, Result};
use crate::folner::{verify_folner, FiniteSet, WordSet};
use crate::groups::{Element, Group};
use crate::words::{Letter, Word};

/// Budgets for the (otherwise unbounded) enumerations. The tool never
/// infers non-amenability: exhausting a budget is an explicit error.
#[derive(Clone, Debug)]
pub struct SearchBudget {
    pub max_radius: usize,
    pub max_cardinality: usize,
    pub max_candidates: u64,
    pub max_ball: usize,
    pub time_limit: Duration,
}

impl Default for SearchBudget {
    fn default() -> SearchBudget {
        SearchBudget {
            max_radius: 12,
            max_cardinality: 16,
            max_candidates: 10_000_000,
            max_ball: 2_000_000,
            time_limit: Duration::from_secs(120),
        }
    }
}

/// Ball of radius r with one shortlex geodesic witness per element.
/// Elements are listed in discovery order: by distance, then shortlex.
#[derive(Clone, Debug)]
pub struct BallTable {
    pub radius: usize,
    entries: Vec<(Element, Word)>,
    index: HashMap<Element, usize>,
    /// sizes[k] = |B_k|, k = 0..=radius
    pub sizes: Vec<usize>,
}

impl BallTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(Element, Word)] {
        &self.entries
    }

    pub fn witness(&self, e: &Element) -> Option<&Word> {
        self.index.get(e).map(|&i| &self.entries[i].1)
    }

    /// Geodesic distance from the identity, if within the computed radius.
    pub fn distance(&self, e: &Element) -> Option<usize> {
        self.witness(e).map(|w| w.len())
    }
}

/// Breadth-first enumeration of B_r with normal-form dedup. Within one
/// radius the frontier is expanded in shortlex order, so the stored witness
/// is the shortlex-least geodesic.
pub fn group_ball(g: &Group, r: usize, budget: &SearchBudget) -> Result<BallTable> {
    let mut entries: Vec<(Element, Word)> = vec![(g.identity(), Word::empty())];
    let mut index = HashMap::from([(g.identity(), 0usize)]);
    let mut sizes = vec![1usize];
    let mut frontier: Vec<usize> = vec![0];
    for _ in 0..r {
        let mut next = Vec::new();
        for &ei in &frontier {
            let (e, w) = entries[ei].clone();
            for gi in 0..g.alphabet().len() {
                for positive in [true, false] {
                    let step = g.generator_element(gi)?;
                    let step = if positive { step } else { g.inverse(&step)? };
                    let t = g.multiply(&e, &step)?;
                    if !index.contains_key(&t) {
                        if entries.len() >= budget.max_ball {
                            return Err(Error::budget(format!(
                                "ball enumeration exceeded {} elements",
                                budget.max_ball
                            )));
                        }
                        index.insert(t.clone(), entries.len());
                        next.push(entries.len());
                        entries.push((t, w.push(Letter::new(gi, positive))));
                    }
                }
            }
        }
        sizes.push(entries.len());
        if next.is_empty() {
            // ball saturated (finite group): pad the size table
            while sizes.len() <= r {
                sizes.push(entries.len());
            }
            break;
        }
        frontier = next;
    }
    Ok(BallTable { radius: r, entries, index, sizes })
}

fn gen_and_inverse_elements(g: &Group) -> Result<Vec<Element>> {
    let mut v = Vec::new();
    for i in 0..g.alphabet().len() {
        let e = g.generator_element(i)?;
        v.push(g.inverse(&e)?);
        v.push(e);
    }
    Ok(v)
}

/// Is the subset connected as a subgraph of the right Cayley graph
/// (u ~ v iff u^{-1} v is a generator or an inverse generator)?
fn is_connected(g: &Group, elems: &[&Element], steps: &[Element]) -> Result<bool> {
    if elems.len() <= 1 {
        return Ok(true);
    }
    let index: HashMap<&Element, usize> = elems.iter().enumerate().map(|(i, e)| (*e, i)).collect();
    let mut seen = vec![false; elems.len()];
    seen[0] = true;
    let mut queue = VecDeque::from([0usize]);
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for s in steps {
            let t = g.multiply(elems[i], s)?;
            if let Some(&j) = index.get(&t) {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
    }
    Ok(count == elems.len())
}

/// Lexicographic enumeration of k-subsets of 1..n joined with the fixed
/// index 0; calls `f` until it returns true (meaning: stop).
fn for_each_subset_with_zero(
    n: usize,
    k: usize,
    f: &mut impl FnMut(&[usize]) -> Result<bool>,
) -> Result<bool> {
    fn rec(
        idx: &mut Vec<usize>,
        start: usize,
        n: usize,
        left: usize,
        f: &mut impl FnMut(&[usize]) -> Result<bool>,
    ) -> Result<bool> {
        if left == 0 {
            return f(idx);
        }
        for i in start..n {
            if n - i < left {
                break;
            }
            idx.push(i);
            if rec(idx, i + 1, n, left - 1, f)? {
                idx.pop();
                return Ok(true);
            }
            idx.pop();
        }
        Ok(false)
    }
    if k == 0 {
        return Ok(false);
    }
    let mut idx = vec![0usize];
    rec(&mut idx, 1, n, k - 1, f)
}

/// The generic algorithm for groups with solvable word problem: enumerate
/// candidate word sets in canonical order (cardinality k, then connected
/// subsets of B_k containing the identity in index order) and return the
/// first whose evaluation passes verify_folner at n.
pub fn enumerate_and_check(g: &Group, n: u64, budget: &SearchBudget) -> Result<WordSet> {
    if n == 0 {
        return Err(Error::input("Følner level n must be >= 1"));
    }
    let start = Instant::now();
    let steps = gen_and_inverse_elements(g)?;
    let mut candidates = 0u64;
    for k in 1..=budget.max_cardinality {
        let ball = group_ball(g, k.min(budget.max_radius), budget)?;
        let mut found: Option<WordSet> = None;
        for_each_subset_with_zero(ball.len(), k, &mut |idx| {
            candidates += 1;
            if candidates > budget.max_candidates {
                return Err(Error::budget("not found within the candidate budget"));
            }
            if start.elapsed() > budget.time_limit {
                return Err(Error::budget("not found within the time budget"));
            }
            let elems: Vec<&Element> = idx.iter().map(|&i| &ball.entries()[i].0).collect();
            if !is_connected(g, &elems, &steps)? {
                return Ok(false);
            }
            let f = FiniteSet::from_elements(elems.iter().map(|e| (*e).clone()));
            if f.len() == k && verify_folner(g, &f, n)?.verdict {
                let mut ws = WordSet::new();
                for &i in idx {
                    let (e, w) = &ball.entries()[i];
                    ws.insert_first(e.clone(), w.clone());
                }
                found = Some(ws);
                return Ok(true);
            }
            Ok(false)
        })?;
        if let Some(ws) = found {
            return Ok(ws);
        }
    }
    Err(Error::budget(format!(
        "no n-Følner set found up to cardinality {} (this is a budget limit, not evidence of non-amenability)",
        budget.max_cardinality
    )))
}

/// Scope of an optimal-set certificate: minimality is certified relative to
/// subsets of the ball of radius `radius` containing the identity.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub radius: usize,
    pub candidates_checked: u64,
}

/// Minimal-cardinality n-Følner set among subsets of B_R containing the
/// identity (unrestricted exhaustion, no connectivity assumption),
/// lexicographically least in ball-index order among minimizers.
pub fn optimal_folner(g: &Group, n: u64, budget: &SearchBudget) -> Result<(WordSet, Certificate)> {
    if n == 0 {
        return Err(Error::input("Følner level n must be >= 1"));
    }
    let start = Instant::now();
    let radius = budget.max_radius.min(budget.max_cardinality);
    let ball = group_ball(g, radius, budget)?;
    let mut candidates = 0u64;
    for k in 1..=budget.max_cardinality.min(ball.len()) {
        let mut found: Option<WordSet> = None;
        for_each_subset_with_zero(ball.len(), k, &mut |idx| {
            candidates += 1;
            if candidates > budget.max_candidates {
                return Err(Error::budget("optimal search exceeded the candidate budget"));
            }
            if start.elapsed() > budget.time_limit {
                return Err(Error::budget("optimal search exceeded the time budget"));
            }
            let f = FiniteSet::from_elements(idx.iter().map(|&i| ball.entries()[i].0.clone()));
            if f.len() == k && verify_folner(g, &f, n)?.verdict {
                let mut ws = WordSet::new();
                for &i in idx {
                    let (e, w) = &ball.entries()[i];
                    ws.insert_first(e.clone(), w.clone());
                }
                found = Some(ws);
                return Ok(true);
            }
            Ok(false)
        })?;
        if let Some(ws) = found {
            return Ok((ws, Certificate { radius, candidates_checked: candidates }));
        }
    }
    Err(Error::budget(format!(
        "no n-Følner set of cardinality <= {} inside B_{} (budget limit)",
        budget.max_cardinality, radius
    )))
}

/// One row of a Følner-function table.
#[derive(Clone, Debug)]
pub struct FolnerFunctionRow {
    pub n: u64,
    /// Minimal cardinality, or None if the per-entry budget was exhausted.
    pub value: Option<usize>,
    pub certified_radius: usize,
}

/// Tabulate the (ball-certified) Følner function for n = 1..=n_max.
pub fn folner_function(g: &Group, n_max: u64, budget: &SearchBudget) -> Result<Vec<FolnerFunctionRow>> {
    let mut rows = Vec::new();
    for n in 1..=n_max {
        match optimal_folner(g, n, budget) {
            Ok((ws, cert)) => {
                rows.push(FolnerFunctionRow { n, value: Some(ws.len()), certified_radius: cert.radius })
            }
            Err(Error::Budget(_)) => rows.push(FolnerFunctionRow {
                n,
                value: None,
                certified_radius: budget.max_radius.min(budget.max_cardinality),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

/// CSV: `n,value,certified_radius`, one row per level; a budget-exhausted
/// entry renders its value as `budget`.
pub fn folner_function_csv(rows: &[FolnerFunctionRow]) -> String {
    let mut out = String::from("n,value,certified_radius\n");
    for r in rows {
        match r.value {
            Some(v) => {
                let _ = writeln!(out, "{},{},{}", r.n, v, r.certified_radius);
            }
            None => {
                let _ = writeln!(out, "{},budget,{}", r.n, r.certified_radius);
            }
        }
    }
    out
}

/// The distortion table r -> max Y-length over N ∩ B_r(Γ), r <= radius.
#[derive(Clone, Debug)]
pub struct DistortionTable {
    /// values[r] = Δ(r)
    pub values: Vec<u64>,
}

impl DistortionTable {
    pub fn delta(&self, r: usize) -> Result<u64> {
        self.values
            .get(r)
            .copied()
            .ok_or_else(|| Error::budget(format!("distortion table stops at radius {}, radius {r} requested", self.values.len().saturating_sub(1))))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,delta\n");
        for (r, d) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{r},{d}");
        }
        out
    }
}

/// Compute Δ_N^Γ(r) for r <= r_max: enumerate B_r(Γ), keep the elements
/// projecting to the identity of K, and read their Y-lengths off a BFS of N
/// over Y (extended until every member is found).
pub fn distortion(ext: &ExtensionData, r_max: usize, budget: &SearchBudget) -> Result<DistortionTable> {
    let gamma = &ext.quotient.ambient;
    let ball = group_ball(gamma, r_max, budget)?;
    // members[r] = elements of N ∩ (sphere of radius r)
    let mut members: Vec<Vec<Element>> = vec![Vec::new(); r_max + 1];
    for (e, w) in ball.entries() {
        if ext.quotient.project(w)? == ext.quotient.quotient.identity() {
            members[w.len()].push(e.clone());
        }
    }
    // BFS of N over Y, embedded into Γ: Γ-element -> Y-length
    let mut y_length: HashMap<Element, u64> = HashMap::new();
    {
        let n_group = &ext.n_group;
        let mut seen: HashMap<Element, Element> = HashMap::new(); // N-element -> Γ-embedding
        let id_embed = gamma.identity();
        y_length.insert(id_embed.clone(), 0);
        seen.insert(n_group.identity(), id_embed);
        let mut frontier = vec![n_group.identity()];
        let embedded_gens: Vec<(Element, Element)> = {
            let mut v = Vec::new();
            for w in &ext.embed {
                let ge = gamma.evaluate(w)?;
                v.push((ge.clone(), gamma.inverse(&ge)?));
            }
            v
        };
        let total_wanted: usize = members.iter().map(|m| m.len()).sum();
        let mut found_wanted = members[0].len(); // identity
        let mut depth = 0u64;
        while found_wanted < total_wanted {
            depth += 1;
            if depth as usize > budget.max_radius * 8 || seen.len() > budget.max_ball {
                return Err(Error::budget(
                    "distortion needs a deeper BFS of N than the budget allows (raise --max-radius / --max-ball)",
                ));
            }
            let mut next = Vec::new();
            for e in &frontier {
                let embed_e = seen[e].clone();
                for (gi, (step, step_inv)) in embedded_gens.iter().enumerate() {
                    for positive in [true, false] {
                        let ngen = n_group.generator_element(gi)?;
                        let ngen = if positive { ngen } else { n_group.inverse(&ngen)? };
                        let t = n_group.multiply(e, &ngen)?;
                        if !seen.contains_key(&t) {
                            let embed_t =
                                gamma.multiply(&embed_e, if positive { step } else { step_inv })?;
                            if !y_length.contains_key(&embed_t) {
                                if ball.witness(&embed_t).is_some() {
                                    found_wanted += 1;
                                }
                                y_length.insert(embed_t.clone(), depth);
                            }
                            seen.insert(t.clone(), embed_t);
                            next.push(t);
                        }
                    }
                }
            }
            if next.is_empty() {
                return Err(Error::budget(
                    "an element of N ∩ B_r(Γ) is outside the subgroup reachable over Y (embedding does not generate N's image)",
                ));
            }
            frontier = next;
        }
    }
    let mut values = Vec::with_capacity(r_max + 1);
    let mut running = 0u64;
    for r in 0..=r_max {
        for e in &members[r] {
            let len = y_length
                .get(e)
                .ok_or_else(|| Error::budget("N-ball BFS did not cover a kernel element"))?;
            running = running.max(*len);
        }
        values.push(running);
    }
    Ok(DistortionTable { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::QuotientStructure;
    use crate::words::Word;

    fn budget() -> SearchBudget {
        SearchBudget::default()
    }

    #[test]
    fn ball_sizes_z2() {
        let g = Group::free_abelian(2).unwrap();
        let b = group_ball(&g, 2, &budget()).unwrap();
        assert_eq!(b.sizes, vec![1, 5, 13]);
        assert_eq!(b.len(), 13);
        // witnesses re-evaluate to their elements, with geodesic length
        for (e, w) in b.entries() {
            assert_eq!(&g.evaluate(w).unwrap(), e);
            let Element::Vector(v) = e else { panic!() };
            assert_eq!(w.len() as i64, v[0].abs() + v[1].abs());
        }
    }

    #[test]
    fn ball_of_radius_zero() {
        let g = Group::heisenberg().unwrap();
        let b = group_ball(&g, 0, &budget()).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b.witness(&g.identity()).unwrap().is_empty());
    }

    #[test]
    fn ball_saturates_on_finite_groups() {
        let g = Group::cyclic(2).unwrap();
        let b = group_ball(&g, 5, &budget()).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.sizes, vec![1, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn ball_growth_bound() {
        let g = Group::lamplighter(2).unwrap();
        let b = group_ball(&g, 5, &budget()).unwrap();
        for k in 0..b.sizes.len() - 1 {
            assert!(b.sizes[k] <= b.sizes[k + 1]);
            assert!(b.sizes[k + 1] <= (2 * g.alphabet().len() + 1) * b.sizes[k]);
        }
    }

    #[test]
    fn enumerate_and_check_z() {
        let g = Group::free_abelian_named(1, vec!["t".into()], None).unwrap();
        // n = 1: the singleton identity passes
        let ws = enumerate_and_check(&g, 1, &budget()).unwrap();
        assert_eq!(ws.len(), 1);
        assert!(ws.words().next().unwrap().is_empty());
        // n = 2: a 2-element set; no 1-element set passes at 2
        let ws = enumerate_and_check(&g, 2, &budget()).unwrap();
        assert_eq!(ws.len(), 2);
        assert!(verify_folner(&g, &ws.finite_set(), 2).unwrap().verdict);
    }

    #[test]
    fn enumerate_and_check_z2_finds_a_square() {
        let g = Group::free_abelian(2).unwrap();
        let ws = enumerate_and_check(&g, 2, &budget()).unwrap();
        assert_eq!(ws.len(), 4);
        assert!(verify_folner(&g, &ws.finite_set(), 2).unwrap().verdict);
    }

    #[test]
    fn enumerate_and_check_soundness_and_upper_bound() {
        let g = Group::free_abelian_named(1, vec!["t".into()], None).unwrap();
        for n in 1..=4 {
            let ws = enumerate_and_check(&g, n, &budget()).unwrap();
            assert!(verify_folner(&g, &ws.finite_set(), n).unwrap().verdict);
            let (opt, _) = optimal_folner(&g, n, &budget()).unwrap();
            assert!(ws.len() >= opt.len());
        }
    }

    #[test]
    fn optimal_folner_z_is_the_interval() {
        let g = Group::free_abelian_named(1, vec!["t".into()], None).unwrap();
        let b = SearchBudget { max_cardinality: 6, max_radius: 6, ..budget() };
        let (ws, cert) = optimal_folner(&g, 4, &b).unwrap();
        assert_eq!(ws.len(), 4);
        assert_eq!(cert.radius, 6);
    }

    #[test]
    fn optimal_folner_at_one_is_a_singleton() {
        for g in [Group::free_abelian(2).unwrap(), Group::cyclic(3).unwrap(), Group::lamplighter(2).unwrap()] {
            let b = SearchBudget { max_cardinality: 4, max_radius: 3, ..budget() };
            let (ws, _) = optimal_folner(&g, 1, &b).unwrap();
            assert_eq!(ws.len(), 1);
        }
    }

    #[test]
    fn folner_function_z2_of_two_is_four() {
        let g = Group::free_abelian(2).unwrap();
        let b = SearchBudget { max_cardinality: 4, max_radius: 4, ..budget() };
        let rows = folner_function(&g, 2, &b).unwrap();
        assert_eq!(rows[0].value, Some(1));
        assert_eq!(rows[1].value, Some(4));
    }

    #[test]
    fn folner_function_mod2() {
        let g = Group::cyclic(2).unwrap();
        let b = SearchBudget { max_cardinality: 4, max_radius: 4, ..budget() };
        let rows = folner_function(&g, 3, &b).unwrap();
        let values: Vec<_> = rows.iter().map(|r| r.value.unwrap()).collect();
        assert_eq!(values, vec![1, 2, 2]);
    }

    #[test]
    fn connected_search_agrees_with_exhaustion_at_tiny_n() {
        // Lemma-conn consistency: the connected enumeration finds sets no
        // smaller than the unrestricted optimum, and within F(|X|n) size.
        for g in [Group::free_abelian_named(1, vec!["t".into()], None).unwrap(), Group::free_abelian(2).unwrap()] {
            for n in 1..=2u64 {
                let b = SearchBudget { max_cardinality: 6, max_radius: 6, ..budget() };
                let conn = enumerate_and_check(&g, n, &b).unwrap();
                let (opt, _) = optimal_folner(&g, n, &b).unwrap();
                assert!(conn.len() >= opt.len());
                // the upper bound F(|X|n) is only searchable within this
                // budget when the optimum at level |X|n fits the caps
                if g.alphabet().len() == 1 {
                    let (opt_xn, _) = optimal_folner(&g, n * g.alphabet().len() as u64, &b).unwrap();
                    assert!(conn.len() <= opt_xn.len());
                }
            }
        }
    }

    fn trivial_extension_z2() -> ExtensionData {
        // N = Γ = Z^2, K trivial (images all zero onto Z^1? use d=1 with zero images)
        let gamma = Group::free_abelian(2).unwrap();
        let k = Group::free_abelian_named(
            1,
            vec!["q1".into(), "q2".into()],
            Some(vec![vec![0], vec![0]]),
        )
        .unwrap();
        let q = QuotientStructure::new(gamma.clone(), k).unwrap();
        ExtensionData::new(
            q,
            Group::free_abelian(2).unwrap(),
            vec![
                Word::parse("e1", gamma.alphabet()).unwrap(),
                Word::parse("e2", gamma.alphabet()).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn distortion_identity_embedding() {
        // N = Γ = Z², Y = X: Δ(r) = r
        let ext = trivial_extension_z2();
        let t = distortion(&ext, 4, &budget()).unwrap();
        assert_eq!(t.values, vec![0, 1, 2, 3, 4]);
        // nondecreasing by construction
        for w in t.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn distortion_heisenberg_center() {
        let gamma = Group::heisenberg().unwrap();
        let q = QuotientStructure::from_group(&gamma).unwrap();
        let ext = ExtensionData::new(
            q,
            Group::free_abelian_named(1, vec!["z".into()], None).unwrap(),
            vec![Word::parse("x y x^-1 y^-1", gamma.alphabet()).unwrap()],
        )
        .unwrap();
        let t = distortion(&ext, 4, &budget()).unwrap();
        assert_eq!(t.delta(3).unwrap(), 0);
        assert_eq!(t.delta(4).unwrap(), 1);
        assert!(t.delta(5).is_err());
    }
}
