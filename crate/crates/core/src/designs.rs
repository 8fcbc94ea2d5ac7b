//! Fixed-size sampling designs: simple random sampling without replacement and
//! stratified SI, with inclusion probabilities, seeded draws and exact
//! enumeration of the sample space for small populations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FpcaError, Result};

/// Largest population that [`enumerate`] accepts.
pub const MAX_ENUMERATION_SIZE: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    Si,
    Stratified,
}

/// One stratum: its population size, allocated sample size and member units.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratum {
    pub size: usize,
    pub sample_size: usize,
    pub members: Vec<usize>,
}

impl Stratum {
    /// First-order inclusion probability `n_h / N_h`.
    pub fn pi(&self) -> f64 {
        self.sample_size as f64 / self.size as f64
    }

    /// Joint inclusion probability of two distinct members.
    pub fn pi_pair(&self) -> f64 {
        if self.size < 2 {
            return 0.0;
        }
        let (n, big_n) = (self.sample_size as f64, self.size as f64);
        n * (n - 1.0) / (big_n * (big_n - 1.0))
    }
}

/// A fixed-size design over a population of `N` units. SI is the one-stratum case.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    kind: DesignKind,
    strata: Vec<Stratum>,
    unit_stratum: Vec<usize>,
    pi: Vec<f64>,
}

pub fn si_design(population: usize, n: usize) -> Result<Design> {
    if n == 0 || n > population {
        return Err(FpcaError::Parameter(format!(
            "SI sample size must satisfy 1 <= n <= N, got n={n}, N={population}"
        )));
    }
    let stratum = Stratum {
        size: population,
        sample_size: n,
        members: (0..population).collect(),
    };
    Ok(Design::from_strata(DesignKind::Si, vec![stratum]))
}

/// Stratified SI over contiguous strata given as `(N_h, n_h)` pairs.
pub fn stratified_design(strata: &[(usize, usize)]) -> Result<Design> {
    if strata.is_empty() {
        return Err(FpcaError::Parameter("at least one stratum is required".into()));
    }
    let mut out = Vec::with_capacity(strata.len());
    let mut offset = 0;
    for (h, &(size, n)) in strata.iter().enumerate() {
        if n == 0 || n > size {
            return Err(FpcaError::Parameter(format!(
                "stratum {h}: need 1 <= n_h <= N_h, got n_h={n}, N_h={size}"
            )));
        }
        out.push(Stratum {
            size,
            sample_size: n,
            members: (offset..offset + size).collect(),
        });
        offset += size;
    }
    Ok(Design::from_strata(DesignKind::Stratified, out))
}

/// Stratified SI where stratum membership comes from per-unit labels
/// `0..H`; `allocation[h]` units are drawn in stratum `h`.
pub fn stratified_from_labels(labels: &[usize], allocation: &[usize]) -> Result<Design> {
    let h_count = allocation.len();
    let mut members = vec![Vec::new(); h_count];
    for (k, &h) in labels.iter().enumerate() {
        if h >= h_count {
            return Err(FpcaError::Parameter(format!(
                "unit {k} has stratum label {h} but only {h_count} allocations were given"
            )));
        }
        members[h].push(k);
    }
    let mut out = Vec::with_capacity(h_count);
    for (h, (members, &n)) in members.into_iter().zip(allocation).enumerate() {
        let size = members.len();
        if n == 0 || n > size {
            return Err(FpcaError::Parameter(format!(
                "stratum {h}: need 1 <= n_h <= N_h, got n_h={n}, N_h={size}"
            )));
        }
        out.push(Stratum {
            size,
            sample_size: n,
            members,
        });
    }
    Ok(Design::from_strata(DesignKind::Stratified, out))
}

/// Sample sizes proportional to `N_h σ_h`, rounded by largest remainder so they
/// add up to `n`, each kept within `[1, N_h]`.
pub fn optimal_allocation(strata: &[(usize, f64)], n: usize) -> Result<Vec<usize>> {
    if strata.is_empty() {
        return Err(FpcaError::Parameter("at least one stratum is required".into()));
    }
    if let Some((h, _)) = strata
        .iter()
        .enumerate()
        .find(|(_, (_, s))| !(s.is_finite() && *s > 0.0))
    {
        return Err(FpcaError::Parameter(format!("stratum {h}: σ_h must be positive")));
    }
    if strata.iter().any(|(size, _)| *size == 0) {
        return Err(FpcaError::Parameter("strata must be nonempty".into()));
    }
    let capacity: usize = strata.iter().map(|(size, _)| size).sum();
    if n > capacity {
        return Err(FpcaError::Parameter(format!(
            "sample size {n} exceeds population size {capacity}"
        )));
    }
    if n < strata.len() {
        return Err(FpcaError::Parameter(format!(
            "sample size {n} is smaller than the number of strata {}",
            strata.len()
        )));
    }

    let denom: f64 = strata.iter().map(|(size, s)| *size as f64 * s).sum();
    let raw: Vec<f64> = strata
        .iter()
        .map(|(size, s)| n as f64 * *size as f64 * s / denom)
        .collect();
    let mut alloc: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();

    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let assigned: usize = alloc.iter().sum();
    for &h in order.iter().take(n - assigned) {
        alloc[h] += 1;
    }

    for (a, (size, _)) in alloc.iter_mut().zip(strata) {
        *a = (*a).clamp(1, *size);
    }
    // Clamping can break the total; move units by distance to the raw share.
    loop {
        let total: usize = alloc.iter().sum();
        if total == n {
            break;
        }
        if total > n {
            let h = (0..alloc.len())
                .filter(|&h| alloc[h] > 1)
                .max_by(|&a, &b| {
                    (alloc[a] as f64 - raw[a]).total_cmp(&(alloc[b] as f64 - raw[b]))
                })
                .expect("n >= number of strata");
            alloc[h] -= 1;
        } else {
            let h = (0..alloc.len())
                .filter(|&h| alloc[h] < strata[h].0)
                .max_by(|&a, &b| {
                    (raw[a] - alloc[a] as f64).total_cmp(&(raw[b] - alloc[b] as f64))
                })
                .expect("n <= population size");
            alloc[h] += 1;
        }
    }
    Ok(alloc)
}

impl Design {
    fn from_strata(kind: DesignKind, strata: Vec<Stratum>) -> Self {
        let population: usize = strata.iter().map(|s| s.size).sum();
        let mut unit_stratum = vec![0; population];
        let mut pi = vec![0.0; population];
        for (h, s) in strata.iter().enumerate() {
            let p = s.pi();
            for &k in &s.members {
                unit_stratum[k] = h;
                pi[k] = p;
            }
        }
        Self {
            kind,
            strata,
            unit_stratum,
            pi,
        }
    }

    pub fn kind(&self) -> DesignKind {
        self.kind
    }

    pub fn population_size(&self) -> usize {
        self.pi.len()
    }

    pub fn sample_size(&self) -> usize {
        self.strata.iter().map(|s| s.sample_size).sum()
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    pub fn stratum_of(&self, k: usize) -> usize {
        self.unit_stratum[k]
    }

    pub fn pi(&self, k: usize) -> f64 {
        self.pi[k]
    }

    pub fn pis(&self) -> &[f64] {
        &self.pi
    }

    /// Second-order inclusion probability, with `π_kk = π_k`.
    pub fn pi2(&self, k: usize, l: usize) -> f64 {
        if k == l {
            return self.pi[k];
        }
        let (hk, hl) = (self.unit_stratum[k], self.unit_stratum[l]);
        if hk == hl {
            self.strata[hk].pi_pair()
        } else {
            self.pi[k] * self.pi[l]
        }
    }

    /// `Δ_kl = π_kl - π_k π_l`.
    pub fn delta(&self, k: usize, l: usize) -> f64 {
        self.pi2(k, l) - self.pi[k] * self.pi[l]
    }

    pub fn is_census(&self) -> bool {
        self.strata.iter().all(|s| s.sample_size == s.size)
    }

    /// Whether every pair of units can be selected together. The HT variance
    /// estimator is unbiased only when this holds.
    pub fn all_pairs_selectable(&self) -> bool {
        let n = self.population_size();
        (0..n).all(|k| ((k + 1)..n).all(|l| self.pi2(k, l) > 0.0))
    }

    /// Draws a sample: an independent uniform subset of size `n_h` in each stratum.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> SampleDraw {
        let mut indices = Vec::with_capacity(self.sample_size());
        for s in &self.strata {
            if s.sample_size == s.size {
                indices.extend_from_slice(&s.members);
            } else {
                let picked = rand::seq::index::sample(rng, s.size, s.sample_size);
                indices.extend(picked.into_iter().map(|i| s.members[i]));
            }
        }
        indices.sort_unstable();
        let weights = indices.iter().map(|&k| 1.0 / self.pi[k]).collect();
        SampleDraw { indices, weights }
    }

    /// The draw that takes every unit with probability one weight each; used
    /// for population-level quantities.
    pub fn full_population(&self) -> SampleDraw {
        SampleDraw::census(self.population_size())
    }

    /// Builds the draw for a given set of units, attaching `1/π_k` weights.
    pub fn sample_from(&self, indices: &[usize]) -> Result<SampleDraw> {
        let mut indices = indices.to_vec();
        indices.sort_unstable();
        indices.dedup();
        if let Some(&k) = indices.iter().find(|&&k| k >= self.population_size()) {
            return Err(FpcaError::IndexOutOfRange {
                index: k,
                size: self.population_size(),
            });
        }
        let weights = indices.iter().map(|&k| 1.0 / self.pi[k]).collect();
        Ok(SampleDraw { indices, weights })
    }
}

/// Selected units (ascending) and their HT weights `1/π_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDraw {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl SampleDraw {
    /// Every unit with weight one.
    pub fn census(population: usize) -> Self {
        Self {
            indices: (0..population).collect(),
            weights: vec![1.0; population],
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.weights.iter().copied())
    }
}

/// A sample together with its selection probability `p(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pub units: Vec<usize>,
    pub probability: f64,
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        let needed = k - cur.len();
        for i in start..=(items.len() - needed) {
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut current, &mut out);
    out
}

/// Every sample with positive probability under `d`.
pub fn enumerate(d: &Design) -> Result<Vec<WeightedSample>> {
    if d.population_size() > MAX_ENUMERATION_SIZE {
        return Err(FpcaError::EnumerationTooLarge(d.population_size()));
    }
    let mut samples = vec![WeightedSample {
        units: Vec::new(),
        probability: 1.0,
    }];
    for s in d.strata() {
        let combos = combinations(&s.members, s.sample_size);
        let p = 1.0 / combos.len() as f64;
        samples = samples
            .iter()
            .flat_map(|prev| {
                combos.iter().map(move |c| {
                    let mut units = prev.units.clone();
                    units.extend_from_slice(c);
                    WeightedSample {
                        units,
                        probability: prev.probability * p,
                    }
                })
            })
            .collect();
    }
    for s in &mut samples {
        s.units.sort_unstable();
    }
    Ok(samples)
}
