//! Correlation similarity, Shannon entropy of similarity scores, and the
//! entropy-driven clustering of one bounded subset.
//!
//! All entropy arithmetic runs in `f64` regardless of the feature scalar.

use crate::data::Features;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Deviations of ξ below this are treated as round-off.
const XI_FLOOR: f64 = 1e-12;

/// Smallest cluster whose ξ spread is informative.
const MIN_TESTED: usize = 4;

/// Symmetric pairwise similarity matrix with unit diagonal.
#[derive(Clone, Debug)]
pub struct SimilarityMatrix {
    s: Vec<f64>,
    n: usize,
    /// Rows (into the source feature set) the matrix was built from.
    pub source: Vec<usize>,
    /// Number of pairs that hit the constant-vector fallback.
    pub fallback_pairs: usize,
}

/// Centered, unit-norm copy of a vector; `None` if the vector is constant.
fn standardize<T: Scalar>(v: &[T]) -> Option<Vec<f64>> {
    let m = v.len() as f64;
    let mean = v.iter().map(|x| x.as_f64()).sum::<f64>() / m;
    let c: Vec<f64> = v.iter().map(|x| x.as_f64() - mean).collect();
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = v.iter().fold(0.0f64, |a, x| a.max(x.as_f64().abs()));
    if norm <= 1e-12 * scale.max(f64::MIN_POSITIVE) * m.sqrt() || norm == 0.0 {
        return None;
    }
    Some(c.into_iter().map(|x| x / norm).collect())
}

fn score(
    a: &Option<Vec<f64>>,
    b: &Option<Vec<f64>>,
    raw_equal: impl FnOnce() -> bool,
) -> (f64, bool) {
    match (a, b) {
        (Some(x), Some(y)) => {
            let r: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
            ((0.5 * (r + 1.0)).clamp(0.0, 1.0), false)
        }
        _ => (if raw_equal() { 1.0 } else { 0.5 }, true),
    }
}

/// Normalised correlation similarity `½(pearson(a, b) + 1)`, in `[0, 1]`.
///
/// A constant vector has no correlation; the pair then scores 1 when the
/// vectors are identical and 0.5 otherwise.
pub fn similarity<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    similarity_flagged(a, b).0
}

/// As [`similarity`], also reporting whether the constant-vector fallback fired.
pub fn similarity_flagged<T: Scalar>(a: &[T], b: &[T]) -> (f64, bool) {
    score(&standardize(a), &standardize(b), || a == b)
}

impl SimilarityMatrix {
    /// Similarities among the listed rows of `fs`.
    pub fn build<T: Scalar>(fs: &Features<T>, rows: &[usize]) -> Self {
        let n = rows.len();
        let std: Vec<Option<Vec<f64>>> = rows.iter().map(|&r| standardize(fs.row(r))).collect();
        let mut s = vec![1.0; n * n];
        let mut fallback_pairs = 0;
        for i in 0..n {
            for j in 0..i {
                let (v, fb) = score(&std[i], &std[j], || fs.row(rows[i]) == fs.row(rows[j]));
                fallback_pairs += fb as usize;
                s[i * n + j] = v;
                s[j * n + i] = v;
            }
        }
        Self {
            s,
            n,
            source: rows.to_vec(),
            fallback_pairs,
        }
    }

    /// Wraps a precomputed matrix. Entries must lie in `[0, 1]`.
    pub fn from_dense(s: Vec<f64>, n: usize) -> Result<Self> {
        if s.len() != n * n {
            return Err(Error::LengthMismatch {
                left: s.len(),
                right: n * n,
            });
        }
        if s.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("similarity outside [0, 1]".into()));
        }
        Ok(Self {
            s,
            n,
            source: (0..n).collect(),
            fallback_pairs: 0,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.s[i * self.n + j]
    }
}

#[inline]
fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// Normalised entropy of element `j`: column `j` rescaled to sum to one,
/// divided by `log2 n`. An all-zero column has entropy 0.
pub fn element_entropy(s: &SimilarityMatrix, j: usize) -> f64 {
    let n = s.n();
    assert!(n >= 2, "element entropy needs at least two elements");
    let total: f64 = (0..n).map(|i| s.get(i, j)).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let h: f64 = -(0..n).map(|i| plogp(s.get(i, j) / total)).sum::<f64>();
    h / (n as f64).log2()
}

/// Running sums that determine the normalised entropy of a multiset of
/// positive scores: `Σ s·log2 s`, `Σ s` and the count.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EntropySums {
    pub slogs: f64,
    pub total: f64,
    pub count: f64,
}

impl EntropySums {
    #[inline]
    pub fn push(&mut self, s: f64) {
        if s > 0.0 {
            self.slogs += s * s.log2();
            self.total += s;
            self.count += 1.0;
        }
    }

    /// `-(1/log2 K) Σ q log2 q` with `q = s / Σ s`; zero when `K ≤ 1`.
    ///
    /// Uses `Σ q log2 q = (Σ s log2 s)/T − log2 T`.
    #[inline]
    pub fn entropy(self) -> f64 {
        let k = self.count.round();
        if k <= 1.0 || self.total <= 0.0 {
            return 0.0;
        }
        -(self.slogs / self.total - self.total.log2()) / k.log2()
    }
}

impl std::ops::Add for EntropySums {
    type Output = Self;

    #[inline]
    fn add(self, o: Self) -> Self {
        Self {
            slogs: self.slogs + o.slogs,
            total: self.total + o.total,
            count: self.count + o.count,
        }
    }
}

impl std::ops::Sub for EntropySums {
    type Output = Self;

    #[inline]
    fn sub(self, o: Self) -> Self {
        Self {
            slogs: self.slogs - o.slogs,
            total: self.total - o.total,
            count: self.count - o.count,
        }
    }
}

fn pair_sums(s: &SimilarityMatrix, active: &[usize]) -> EntropySums {
    let mut acc = EntropySums::default();
    for (a, &i) in active.iter().enumerate() {
        for &j in &active[..a] {
            acc.push(s.get(i, j));
        }
    }
    acc
}

/// Normalised entropy of the positive pairwise scores among `active`, each
/// unordered pair counted once.
pub fn set_entropy(s: &SimilarityMatrix, active: &[usize]) -> f64 {
    pair_sums(s, active).entropy()
}

/// Entropy differential `H(active) − H(active \ {i})`.
pub fn xi(s: &SimilarityMatrix, active: &[usize], i: usize) -> f64 {
    let rest: Vec<usize> = active.iter().copied().filter(|&a| a != i).collect();
    set_entropy(s, active) - set_entropy(s, &rest)
}

/// ξ of every element of `0..n` within the full set, in `O(n²)`.
pub fn xi_all(s: &SimilarityMatrix) -> Vec<f64> {
    let n = s.n();
    let mut rows = vec![EntropySums::default(); n];
    let mut total = EntropySums::default();
    for i in 0..n {
        for j in 0..i {
            let v = s.get(i, j);
            rows[i].push(v);
            rows[j].push(v);
            total.push(v);
        }
    }
    let h = total.entropy();
    rows.iter().map(|r| h - (total - *r).entropy()).collect()
}

fn median(v: &mut [f64]) -> f64 {
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    let hi = *m;
    if v.len() % 2 == 1 {
        hi
    } else {
        let lo = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// Visiting order: start at the element with the largest ξ, then repeatedly
/// append the unvisited element most similar to the last one appended.
/// Ties resolve to the lower index.
pub fn similarity_chain(s: &SimilarityMatrix, xi: &[f64]) -> Vec<usize> {
    let n = s.n();
    if n == 0 {
        return vec![];
    }
    let start = (0..n).fold(0, |b, i| if xi[i] > xi[b] { i } else { b });
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    order.push(start);
    seen[start] = true;
    while order.len() < n {
        let last = *order.last().unwrap();
        let next = (0..n)
            .filter(|&j| !seen[j])
            .fold(None, |b: Option<usize>, j| match b {
                Some(bj) if s.get(last, bj) >= s.get(last, j) => Some(bj),
                _ => Some(j),
            })
            .unwrap();
        seen[next] = true;
        order.push(next);
    }
    order
}

/// A cluster being grown: its members and the pair sums needed to score
/// additions and removals in `O(|members|)`.
struct Growing {
    members: Vec<usize>,
    total: EntropySums,
    /// Per member, the sums of its pairs with the other members.
    rows: Vec<EntropySums>,
}

/// How far ξ of `v` inside `members ∪ {v}` falls below the members' median
/// ξ there, in median absolute deviations of the members' ξ within `members`
/// alone. `None` below [`MIN_TESTED`] members.
fn drop_score(
    s: &SimilarityMatrix,
    members: &[usize],
    total: EntropySums,
    rows: &[EntropySums],
    v: usize,
    scratch: &mut Vec<f64>,
) -> Option<f64> {
    if members.len() < MIN_TESTED {
        return None;
    }
    let h = total.entropy();
    scratch.clear();
    scratch.extend(rows.iter().map(|r| h - (total - *r).entropy()));
    let med0 = median(scratch);
    for x in scratch.iter_mut() {
        *x = (*x - med0).abs();
    }
    let mad = median(scratch);

    let mut vrow = EntropySums::default();
    for &g in members {
        vrow.push(s.get(v, g));
    }
    let with_v = total + vrow;
    let h_with = with_v.entropy();
    let xi_v = h_with - h;
    scratch.clear();
    for (k, &g) in members.iter().enumerate() {
        let mut r = rows[k];
        r.push(s.get(v, g));
        scratch.push(h_with - (with_v - r).entropy());
    }
    let drop = median(scratch) - xi_v;
    Some(if drop <= XI_FLOOR {
        f64::NEG_INFINITY
    } else {
        drop / mad
    })
}

impl Growing {
    fn new(v: usize) -> Self {
        Self {
            members: vec![v],
            total: EntropySums::default(),
            rows: vec![EntropySums::default()],
        }
    }

    fn from_members(s: &SimilarityMatrix, members: &[usize]) -> Option<Self> {
        let (&first, rest) = members.split_first()?;
        let mut g = Self::new(first);
        for &v in rest {
            g.push(s, v);
        }
        Some(g)
    }

    fn score(&self, s: &SimilarityMatrix, v: usize, scratch: &mut Vec<f64>) -> Option<f64> {
        drop_score(s, &self.members, self.total, &self.rows, v, scratch)
    }

    /// Score of member `k` against the rest of the cluster.
    fn leave_one_out(&self, s: &SimilarityMatrix, k: usize, scratch: &mut Vec<f64>) -> Option<f64> {
        let v = self.members[k];
        let mut members = Vec::with_capacity(self.members.len() - 1);
        let mut rows = Vec::with_capacity(self.members.len() - 1);
        for (i, &g) in self.members.iter().enumerate() {
            if i != k {
                let mut r = self.rows[i];
                let x = s.get(v, g);
                if x > 0.0 {
                    r = r - EntropySums {
                        slogs: x * x.log2(),
                        total: x,
                        count: 1.0,
                    };
                }
                members.push(g);
                rows.push(r);
            }
        }
        drop_score(s, &members, self.total - self.rows[k], &rows, v, scratch)
    }

    fn push(&mut self, s: &SimilarityMatrix, v: usize) {
        let mut vrow = EntropySums::default();
        for (k, &g) in self.members.iter().enumerate() {
            let x = s.get(v, g);
            self.rows[k].push(x);
            vrow.push(x);
        }
        self.total = self.total + vrow;
        self.rows.push(vrow);
        self.members.push(v);
    }
}

/// Index of the cluster accepting `v` with the smallest drop, if any.
fn best_accepting(
    s: &SimilarityMatrix,
    groups: &[Growing],
    v: usize,
    spike: f64,
    scratch: &mut Vec<f64>,
) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (gi, g) in groups.iter().enumerate() {
        if let Some(z) = g.score(s, v, scratch) {
            if z <= spike && best.is_none_or(|(bz, _)| z < bz) {
                best = Some((z, gi));
            }
        }
    }
    best.map(|(_, gi)| gi)
}

/// Robust profile of the similarity between consecutive chain elements.
struct Steps {
    median: f64,
    mad: f64,
    spike: f64,
}

impl Steps {
    fn new(s: &SimilarityMatrix, order: &[usize], spike: f64) -> Self {
        let mut v: Vec<f64> = order.windows(2).map(|w| s.get(w[0], w[1])).collect();
        if v.is_empty() {
            return Self {
                median: 1.0,
                mad: 0.0,
                spike,
            };
        }
        let median = median(&mut v);
        for x in v.iter_mut() {
            *x = (*x - median).abs();
        }
        let mad = median_of(v);
        Self { median, mad, spike }
    }

    /// Whether stepping from `a` to `b` leaves the region the chain is in.
    fn is_jump(&self, s: &SimilarityMatrix, a: usize, b: usize) -> bool {
        self.median - s.get(a, b) > (self.spike * self.mad).max(XI_FLOOR)
    }
}

fn median_of(mut v: Vec<f64>) -> f64 {
    median(&mut v)
}

/// Feeds `order` through the sequential rule, opening a cluster for its
/// first element after the existing `groups`.
fn sequential(
    s: &SimilarityMatrix,
    order: &[usize],
    groups: &mut Vec<Growing>,
    steps: &Steps,
    scratch: &mut Vec<f64>,
) {
    let Some((&first, rest)) = order.split_first() else {
        return;
    };
    let spike = steps.spike;
    groups.push(Growing::new(first));
    let mut prev = first;
    for &v in rest {
        let last = groups.len() - 1;
        let z_last = groups[last].score(s, v, scratch);
        if z_last.is_some_and(|z| z <= spike) {
            groups[last].push(s, v);
        } else if let Some(gi) = best_accepting(s, &groups[..last], v, spike, scratch) {
            groups[gi].push(s, v);
        } else if z_last.is_none() && !steps.is_jump(s, prev, v) {
            groups[last].push(s, v);
        } else {
            groups.push(Growing::new(v));
        }
        prev = v;
    }
}

/// Stratifies the elements `0..n` of `s` into clusters.
///
/// Elements are visited along [`similarity_chain`]. Each visited element is
/// scored by its entropy differential inside a cluster, against the median
/// differential of that cluster's members. A drop of more than `spike` median
/// absolute deviations marks the element as distinctly different from the
/// cluster. An element joins the cluster opened last unless it is distinctly
/// different from it. Otherwise it joins the earlier cluster where its drop
/// is smallest, provided it is not distinctly different there too, and
/// failing that opens a new cluster. A cluster too small to be tested takes
/// any element that no earlier cluster accepts, unless the chain reached the
/// element through an outlying low-similarity step.
///
/// A single refinement round follows: every member that is distinctly
/// different from the rest of its own cluster is taken out and placed again
/// by the same rule.
///
/// Returns groups of local indices in opening order.
pub fn entropy_cluster(s: &SimilarityMatrix, cap: usize, spike: f64) -> Result<Vec<Vec<usize>>> {
    let n = s.n();
    if n > cap {
        return Err(Error::EntropyCapExceeded { len: n, cap });
    }
    if n == 0 {
        return Err(Error::InvalidArgument(
            "entropy clustering of an empty set".into(),
        ));
    }
    let order = similarity_chain(s, &xi_all(s));
    let mut scratch = Vec::with_capacity(n);
    let steps = Steps::new(s, &order, spike);
    let mut groups = Vec::new();
    sequential(s, &order, &mut groups, &steps, &mut scratch);

    let mut ejected = vec![false; n];
    let mut any = false;
    for g in &groups {
        if g.members.len() > MIN_TESTED {
            for k in 0..g.members.len() {
                if g.leave_one_out(s, k, &mut scratch)
                    .is_some_and(|z| z > spike)
                {
                    ejected[g.members[k]] = true;
                    any = true;
                }
            }
        }
    }
    if any {
        let mut kept: Vec<Growing> = groups
            .iter()
            .filter_map(|g| {
                let m: Vec<usize> = g.members.iter().copied().filter(|&v| !ejected[v]).collect();
                Growing::from_members(s, &m)
            })
            .collect();
        let mut pool = Vec::new();
        for &v in order.iter().filter(|&&v| ejected[v]) {
            match best_accepting(s, &kept, v, spike, &mut scratch) {
                Some(gi) => kept[gi].push(s, v),
                None => pool.push(v),
            }
        }
        sequential(s, &pool, &mut kept, &steps, &mut scratch);
        groups = kept;
    }
    Ok(groups.into_iter().map(|g| g.members).collect())
}
