use crate::error::{Error, Result};
use crate::scalar::{sq_dist, Scalar};

/// Exact k-nearest-neighbour search by exhaustive scan.
///
/// Each returned row lists `k` corpus indices by ascending Euclidean distance,
/// ties broken by ascending index. With `exclude_self`, queries are taken to
/// be the corpus itself and query `i` never returns corpus row `i`.
pub fn knn<T: Scalar>(
    queries: &[T],
    corpus: &[T],
    dim: usize,
    k: usize,
    exclude_self: bool,
) -> Result<Vec<Vec<usize>>> {
    let nq = queries.len() / dim;
    let nc = corpus.len() / dim;
    let avail = if exclude_self {
        nc.saturating_sub(1)
    } else {
        nc
    };
    if k == 0 || k > avail {
        return Err(Error::InvalidArgument(format!(
            "k = {k} out of range (corpus offers {avail})"
        )));
    }
    let mut out = Vec::with_capacity(nq);
    let mut cand: Vec<(T, usize)> = Vec::with_capacity(nc);
    for (qi, q) in queries.chunks_exact(dim).enumerate() {
        cand.clear();
        cand.extend(
            corpus
                .chunks_exact(dim)
                .enumerate()
                .filter(|&(ci, _)| !(exclude_self && ci == qi))
                .map(|(ci, c)| (sq_dist(q, c), ci)),
        );
        let cmp = |a: &(T, usize), b: &(T, usize)| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        };
        if k < cand.len() {
            cand.select_nth_unstable_by(k - 1, cmp);
            cand.truncate(k);
        }
        cand.sort_unstable_by(cmp);
        out.push(cand.iter().map(|&(_, i)| i).collect());
    }
    Ok(out)
}

/// Index of the row of `corpus` nearest to `q`, skipping `skip`. Ties go to
/// the lower index. `None` if nothing is left to choose from.
pub fn nearest<T: Scalar>(q: &[T], corpus: &[T], dim: usize, skip: Option<usize>) -> Option<usize> {
    let mut best: Option<(T, usize)> = None;
    for (ci, c) in corpus.chunks_exact(dim).enumerate() {
        if Some(ci) == skip {
            continue;
        }
        let d = sq_dist(q, c);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, ci));
        }
    }
    best.map(|(_, i)| i)
}
