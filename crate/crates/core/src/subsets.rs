//! Families of equal-size subsets of `{0, …, M−1}` with bounded pairwise
//! intersections.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::random::rng_for;
use crate::{Error, Result};

/// `⌊εM⌋`, robust against `ε·M` landing just below an integer.
pub fn subset_size(ground: usize, eps: f64) -> usize {
    (eps * ground as f64 + 1e-9).floor() as usize
}

/// Largest intersection allowed by `|S_j ∩ S_k| ≤ λ·size`.
pub fn allowed_overlap(size: usize, lambda: f64) -> usize {
    (lambda * size as f64 + 1e-9).floor().max(0.0) as usize
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFamily")]
pub struct SubsetFamily {
    #[serde(rename = "M")]
    ground: usize,
    size: usize,
    subsets: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
}

#[derive(Deserialize)]
struct RawFamily {
    #[serde(rename = "M")]
    ground: usize,
    size: usize,
    subsets: Vec<Vec<usize>>,
    #[serde(default)]
    eps: Option<f64>,
    #[serde(default)]
    lambda: Option<f64>,
}

impl TryFrom<RawFamily> for SubsetFamily {
    type Error = Error;
    fn try_from(r: RawFamily) -> Result<Self> {
        let mut f = SubsetFamily::new(r.ground, r.size, r.subsets)?;
        f.eps = r.eps;
        f.lambda = r.lambda;
        Ok(f)
    }
}

impl SubsetFamily {
    /// Subsets are sorted on construction; each must have `size` distinct
    /// members below `ground`.
    pub fn new(ground: usize, size: usize, subsets: Vec<Vec<usize>>) -> Result<Self> {
        let mut sorted = Vec::with_capacity(subsets.len());
        for (j, mut s) in subsets.into_iter().enumerate() {
            s.sort_unstable();
            s.dedup();
            if s.len() != size {
                return Err(Error::BadParams(format!(
                    "subset {j} has {} distinct members, expected {size}",
                    s.len()
                )));
            }
            if s.last().is_some_and(|&x| x >= ground) {
                return Err(Error::BadParams(format!("subset {j} leaves the ground set of size {ground}")));
            }
            sorted.push(s);
        }
        Ok(SubsetFamily {
            ground,
            size,
            subsets: sorted,
            eps: None,
            lambda: None,
        })
    }

    pub fn with_params(mut self, eps: f64, lambda: f64) -> Self {
        self.eps = Some(eps);
        self.lambda = Some(lambda);
        self
    }

    pub fn ground(&self) -> usize {
        self.ground
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    pub fn subset(&self, j: usize) -> &[usize] {
        &self.subsets[j]
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    pub fn eps(&self) -> Option<f64> {
        self.eps
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    /// Intersection bound in force; without a stored λ only distinctness is required.
    pub fn max_overlap(&self) -> usize {
        match self.lambda {
            Some(l) => allowed_overlap(self.size, l),
            None => self.size.saturating_sub(1),
        }
    }

    pub fn intersection(&self, j: usize, k: usize) -> usize {
        sorted_intersection(&self.subsets[j], &self.subsets[k])
    }
}

fn sorted_intersection(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

#[derive(Clone, Debug, PartialEq)]
struct Bitset(Vec<u64>);

impl Bitset {
    fn from_members(ground: usize, members: &[usize]) -> Self {
        let mut words = vec![0u64; ground.div_ceil(64)];
        for &m in members {
            words[m / 64] |= 1 << (m % 64);
        }
        Bitset(words)
    }

    fn overlap(&self, other: &Bitset) -> usize {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyMode {
    /// Rejection sampling of uniform subsets.
    Random,
    /// Lexicographic scan over all subsets (small ground sets only).
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyParams {
    pub ground: usize,
    pub eps: f64,
    pub lambda: f64,
    pub target: usize,
    pub seed: u64,
    /// Defaults to `1000 · target`.
    pub max_attempts: Option<usize>,
    pub mode: FamilyMode,
}

impl FamilyParams {
    pub fn new(ground: usize, eps: f64, lambda: f64, target: usize, seed: u64) -> Self {
        FamilyParams {
            ground,
            eps,
            lambda,
            target,
            seed,
            max_attempts: None,
            mode: FamilyMode::Random,
        }
    }
}

pub const EXHAUSTIVE_LIMIT: usize = 20;

#[derive(Clone, Debug)]
pub struct GeneratedFamily {
    pub family: SubsetFamily,
    pub attempts: usize,
    pub warnings: Vec<String>,
}

/// Builds `target` subsets of size `⌊εM⌋` whose pairwise intersections are at
/// most `λ⌊εM⌋`. Duplicates are always rejected.
pub fn generate_family(p: &FamilyParams) -> Result<GeneratedFamily> {
    if !(p.eps > 0.0 && p.eps <= 1.0) || !(0.0..=1.0).contains(&p.lambda) {
        return Err(Error::BadParams(format!("need 0 < eps ≤ 1 and 0 ≤ lambda ≤ 1, got {} and {}", p.eps, p.lambda)));
    }
    let size = subset_size(p.ground, p.eps);
    if size == 0 {
        return Err(Error::BadParams(format!("eps·M = {} gives empty subsets", p.eps * p.ground as f64)));
    }
    let mut warnings = Vec::new();
    if p.eps < 0.5 && p.lambda * (1.0 / p.eps - 1.0).log2() <= 2.0 {
        warnings.push(format!(
            "lambda·log2(1/eps − 1) = {:.3} ≤ 2: existence of large families is not guaranteed",
            p.lambda * (1.0 / p.eps - 1.0).log2()
        ));
    } else if p.eps >= 0.5 {
        warnings.push("eps ≥ 1/2: existence of large families is not guaranteed".into());
    }
    let bound = allowed_overlap(size, p.lambda).min(size - 1);
    let max_attempts = p.max_attempts.unwrap_or(1000 * p.target.max(1));

    let mut subsets: Vec<Vec<usize>> = Vec::with_capacity(p.target);
    let mut bits: Vec<Bitset> = Vec::with_capacity(p.target);
    let mut attempts = 0;
    let mut consider = |cand: Vec<usize>, subsets: &mut Vec<Vec<usize>>| {
        let b = Bitset::from_members(p.ground, &cand);
        if bits.iter().all(|o| o.overlap(&b) <= bound) {
            bits.push(b);
            subsets.push(cand);
        }
    };

    match p.mode {
        FamilyMode::Random => {
            let mut rng = rng_for(p.seed, "family", &[]);
            while subsets.len() < p.target && attempts < max_attempts {
                attempts += 1;
                let mut cand = sample(&mut rng, p.ground, size).into_vec();
                cand.sort_unstable();
                consider(cand, &mut subsets);
            }
        }
        FamilyMode::Exhaustive => {
            if p.ground > EXHAUSTIVE_LIMIT {
                return Err(Error::BadParams(format!(
                    "exhaustive mode needs M ≤ {EXHAUSTIVE_LIMIT}, got {}",
                    p.ground
                )));
            }
            let mut comb: Vec<usize> = (0..size).collect();
            loop {
                attempts += 1;
                consider(comb.clone(), &mut subsets);
                if subsets.len() >= p.target || !next_combination(&mut comb, p.ground) {
                    break;
                }
            }
        }
    }
    if subsets.len() < p.target {
        return Err(Error::TargetUnreachable {
            target: p.target,
            found: subsets.len(),
            attempts,
        });
    }
    let family = SubsetFamily::new(p.ground, size, subsets)?.with_params(p.eps, p.lambda);
    Ok(GeneratedFamily {
        family,
        attempts,
        warnings,
    })
}

fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if comb[i] < n - k + i {
            comb[i] += 1;
            for t in i + 1..k {
                comb[t] = comb[t - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyCheck {
    pub ok: bool,
    pub worst_pair: Option<(usize, usize)>,
    pub worst_overlap: usize,
    pub allowed: usize,
}

/// Exhaustive pairwise check against [`SubsetFamily::max_overlap`].
pub fn verify_family(family: &SubsetFamily) -> FamilyCheck {
    let n = family.len();
    let per_row: Vec<Option<(usize, usize, usize)>> = (0..n)
        .into_par_iter()
        .map(|j| {
            (j + 1..n)
                .map(|k| (family.intersection(j, k), j, k))
                .fold(None, |best: Option<(usize, usize, usize)>, c| match best {
                    Some(b) if b.0 >= c.0 => Some(b),
                    _ => Some(c),
                })
        })
        .collect();
    let worst = per_row.into_iter().flatten().fold(None, |best: Option<(usize, usize, usize)>, c| match best {
        Some(b) if b.0 >= c.0 => Some(b),
        _ => Some(c),
    });
    let allowed = family.max_overlap();
    let worst_overlap = worst.map_or(0, |w| w.0);
    FamilyCheck {
        ok: worst_overlap <= allowed,
        worst_pair: worst.map(|w| (w.1, w.2)),
        worst_overlap,
        allowed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn recount(f: &SubsetFamily) -> usize {
        let bits: Vec<_> = f.subsets().iter().map(|s| Bitset::from_members(f.ground(), s)).collect();
        let mut worst = 0;
        for j in 0..bits.len() {
            for k in j + 1..bits.len() {
                worst = worst.max(bits[j].overlap(&bits[k]));
            }
        }
        worst
    }

    #[test]
    fn all_pairs_of_four() {
        let g = generate_family(&FamilyParams::new(4, 0.5, 0.5, 6, 0)).unwrap();
        assert_eq!(g.family.len(), 6);
        let mut got = g.family.subsets().to_vec();
        got.sort();
        let mut all = Vec::new();
        for a in 0..4 {
            for b in a + 1..4 {
                all.push(vec![a, b]);
            }
        }
        assert_eq!(got, all);
        assert!(verify_family(&g.family).ok);
        assert!(matches!(
            generate_family(&FamilyParams::new(4, 0.5, 0.5, 7, 0)),
            Err(Error::TargetUnreachable { target: 7, found: 6, .. })
        ));
    }

    #[test]
    fn disjoint_singletons() {
        let g = generate_family(&FamilyParams::new(2, 0.5, 0.0, 2, 3)).unwrap();
        let mut got = g.family.subsets().to_vec();
        got.sort();
        assert_eq!(got, vec![vec![0], vec![1]]);
        assert_eq!(verify_family(&g.family).worst_overlap, 0);
    }

    #[test]
    fn twenty_choose_five() {
        let g = generate_family(&FamilyParams::new(20, 0.25, 0.4, 50, 1)).unwrap();
        let check = verify_family(&g.family);
        assert!(check.ok);
        assert_eq!(check.allowed, 2);
        assert_eq!(check.worst_overlap, recount(&g.family));
        let (j, k) = check.worst_pair.unwrap();
        assert_eq!(g.family.intersection(j, k), check.worst_overlap);
    }

    #[test]
    fn exhaustive_mode_is_lexicographic() {
        let mut p = FamilyParams::new(6, 0.5, 1.0 / 3.0, 4, 0);
        p.mode = FamilyMode::Exhaustive;
        let g = generate_family(&p).unwrap();
        assert_eq!(g.family.subset(0), &[0, 1, 2]);
        assert_eq!(g.family.subset(1), &[0, 3, 4]);
        assert!(verify_family(&g.family).ok);
        p.ground = 21;
        assert!(generate_family(&p).is_err());
    }

    #[test]
    fn verifier_flags_duplicates() {
        let f = SubsetFamily::new(5, 2, vec![vec![0, 1], vec![2, 3], vec![1, 0]]).unwrap().with_params(0.4, 0.5);
        let c = verify_family(&f);
        assert!(!c.ok);
        assert_eq!(c.worst_overlap, 2);
        assert_eq!(c.worst_pair, Some((0, 2)));
        let disjoint = SubsetFamily::new(6, 2, vec![vec![0, 1], vec![2, 3], vec![4, 5]]).unwrap();
        assert_eq!(verify_family(&disjoint).worst_overlap, 0);
    }

    #[test]
    fn rejects_malformed_subsets() {
        assert!(SubsetFamily::new(4, 2, vec![vec![0, 0]]).is_err());
        assert!(SubsetFamily::new(4, 2, vec![vec![0, 4]]).is_err());
        let bad = r#"{"M":3,"size":2,"subsets":[[0,1,2]]}"#;
        assert!(serde_json::from_str::<SubsetFamily>(bad).is_err());
    }

    #[test]
    fn json_schema() {
        let f = SubsetFamily::new(4, 2, vec![vec![1, 0], vec![2, 3]]).unwrap().with_params(0.5, 0.5);
        let v = serde_json::to_value(&f).unwrap();
        assert_eq!(v["M"], 4);
        assert_eq!(v["size"], 2);
        assert_eq!(v["subsets"], serde_json::json!([[0, 1], [2, 3]]));
        let back: SubsetFamily = serde_json::from_value(v).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn weak_parameters_warn() {
        let g = generate_family(&FamilyParams::new(20, 0.25, 0.4, 5, 1)).unwrap();
        assert!(!g.warnings.is_empty());
        let g = generate_family(&FamilyParams::new(40, 0.05, 1.0, 1, 1)).unwrap();
        assert!(g.warnings.is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn generated_families_verify(seed in any::<u64>(), ground in 8usize..40, target in 1usize..12) {
            let p = FamilyParams::new(ground, 0.25, 0.5, target, seed);
            match generate_family(&p) {
                Ok(g) => {
                    let c = verify_family(&g.family);
                    prop_assert!(c.ok);
                    prop_assert_eq!(c.worst_overlap, recount(&g.family));
                    prop_assert!(g.family.subsets().iter().all(|s| s.len() == subset_size(ground, 0.25)));
                    let again = generate_family(&p).unwrap();
                    prop_assert_eq!(again.family, g.family);
                }
                Err(Error::TargetUnreachable { .. }) => {}
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
