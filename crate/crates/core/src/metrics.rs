//! Clustering agreement, segmentation scores and class balance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts of co-occurring labels between two labelings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    /// Row-major `rows × cols`.
    pub counts: Vec<usize>,
    pub rows: usize,
    pub cols: usize,
    pub row_sums: Vec<usize>,
    pub col_sums: Vec<usize>,
    pub total: usize,
}

fn dense_ids(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = BTreeMap::new();
    for &l in labels {
        let next = map.len();
        map.entry(l).or_insert(next);
    }
    // Renumber in label order so the table does not depend on appearance order.
    for (i, v) in map.values_mut().enumerate() {
        *v = i;
    }
    (labels.iter().map(|l| map[l]).collect(), map.len())
}

fn check_len(a: &[usize], b: &[usize]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

impl ContingencyTable {
    pub fn new(a: &[usize], b: &[usize]) -> Result<Self> {
        check_len(a, b)?;
        let (ra, rows) = dense_ids(a);
        let (rb, cols) = dense_ids(b);
        let mut counts = vec![0; rows * cols];
        for (&i, &j) in ra.iter().zip(&rb) {
            counts[i * cols + j] += 1;
        }
        let row_sums = (0..rows)
            .map(|i| counts[i * cols..(i + 1) * cols].iter().sum())
            .collect();
        let col_sums = (0..cols)
            .map(|j| (0..rows).map(|i| counts[i * cols + j]).sum())
            .collect();
        Ok(Self {
            counts,
            rows,
            cols,
            row_sums,
            col_sums,
            total: a.len(),
        })
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.counts[i * self.cols + j]
    }

    /// Mutual information in nats.
    pub fn mutual_information(&self) -> f64 {
        let n = self.total as f64;
        let mut mi = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let c = self.get(i, j);
                if c > 0 {
                    let c = c as f64;
                    mi +=
                        c / n * (n * c / (self.row_sums[i] as f64 * self.col_sums[j] as f64)).ln();
                }
            }
        }
        mi.max(0.0)
    }

    /// Expected mutual information under random permutation of one labeling.
    pub fn expected_mutual_information(&self) -> f64 {
        let n = self.total;
        let lf = log_factorials(n);
        let nf = n as f64;
        let mut emi = 0.0;
        for &a in &self.row_sums {
            for &b in &self.col_sums {
                let lo = (a + b).saturating_sub(n).max(1);
                let hi = a.min(b);
                let fixed = lf[a] + lf[b] + lf[n - a] + lf[n - b] - lf[n];
                for k in lo..=hi {
                    let kf = k as f64;
                    let log_p = fixed - lf[k] - lf[a - k] - lf[b - k] - lf[n + k - a - b];
                    emi += kf / nf * (nf * kf / (a as f64 * b as f64)).ln() * log_p.exp();
                }
            }
        }
        emi
    }
}

fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

fn entropy_of(sums: &[usize], n: usize) -> f64 {
    let n = n as f64;
    -sums
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Adjusted mutual information with the arithmetic-mean normaliser.
///
/// When the normaliser vanishes the labelings carry no information to
/// adjust; the result is 1 for identical partitions and 0 otherwise.
pub fn ami(a: &[usize], b: &[usize]) -> Result<f64> {
    check_len(a, b)?;
    if a.is_empty() {
        return Err(Error::InvalidArgument("AMI of empty labelings".into()));
    }
    let t = ContingencyTable::new(a, b)?;
    let identical = t.rows == t.cols && t.counts.iter().filter(|&&c| c > 0).count() == t.rows;
    let mi = t.mutual_information();
    let emi = t.expected_mutual_information();
    let h = 0.5 * (entropy_of(&t.row_sums, t.total) + entropy_of(&t.col_sums, t.total));
    let denom = h - emi;
    if denom.abs() < 1e-12 {
        return Ok(if identical { 1.0 } else { 0.0 });
    }
    if identical {
        return Ok(1.0);
    }
    Ok(((mi - emi) / denom).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub class: usize,
    pub iou: f64,
    pub dice: f64,
    /// `None` when the class does not occur in the truth.
    pub overlap: Option<f64>,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentationReport {
    pub per_class: Vec<ClassScores>,
    pub macro_iou: f64,
    pub macro_dice: f64,
    pub macro_overlap: f64,
    pub macro_f1: f64,
}

/// Per-class IoU, Dice, overlap rate and F1 plus their macro averages over
/// the classes present in `truth`. `classes` defaults to every label seen.
pub fn segmentation_scores(
    pred: &[usize],
    truth: &[usize],
    classes: Option<&[usize]>,
) -> Result<SegmentationReport> {
    check_len(pred, truth)?;
    let classes: Vec<usize> = match classes {
        Some(c) => c.to_vec(),
        None => {
            let mut c: Vec<usize> = pred.iter().chain(truth).copied().collect();
            c.sort_unstable();
            c.dedup();
            c
        }
    };
    let mut per_class = Vec::with_capacity(classes.len());
    for &c in &classes {
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for (&p, &t) in pred.iter().zip(truth) {
            match (p == c, t == c) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                1.0
            } else {
                num as f64 / den as f64
            }
        };
        let iou = ratio(tp, tp + fp + fn_);
        let dice = ratio(2 * tp, 2 * tp + fp + fn_);
        let present = tp + fn_;
        per_class.push(ClassScores {
            class: c,
            iou,
            dice,
            overlap: (present > 0).then(|| tp as f64 / present as f64),
            f1: dice,
        });
    }
    let present: Vec<&ClassScores> = per_class.iter().filter(|c| c.overlap.is_some()).collect();
    let mean = |f: &dyn Fn(&ClassScores) -> f64| {
        if present.is_empty() {
            0.0
        } else {
            present.iter().map(|c| f(c)).sum::<f64>() / present.len() as f64
        }
    };
    Ok(SegmentationReport {
        macro_iou: mean(&|c| c.iou),
        macro_dice: mean(&|c| c.dice),
        macro_overlap: mean(&|c| c.overlap.unwrap()),
        macro_f1: mean(&|c| c.f1),
        per_class,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassBalance {
    pub class: usize,
    pub size: usize,
    pub selected: usize,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub per_class: Vec<ClassBalance>,
    pub mean: f64,
    /// Population standard deviation of the per-class fractions.
    pub std: f64,
}

/// Fraction of every truth class that made it into `selected`.
pub fn balance_report(selected: &[usize], truth: &[usize]) -> Result<BalanceReport> {
    let mut size: BTreeMap<usize, usize> = BTreeMap::new();
    for &t in truth {
        *size.entry(t).or_default() += 1;
    }
    let mut picked: BTreeMap<usize, usize> = BTreeMap::new();
    for &i in selected {
        let t = *truth.get(i).ok_or_else(|| {
            Error::InvalidArgument(format!("selected index {i} outside the labelled range"))
        })?;
        *picked.entry(t).or_default() += 1;
    }
    let per_class: Vec<ClassBalance> = size
        .iter()
        .map(|(&class, &size)| {
            let selected = picked.get(&class).copied().unwrap_or(0);
            ClassBalance {
                class,
                size,
                selected,
                fraction: selected as f64 / size as f64,
            }
        })
        .collect();
    let k = per_class.len().max(1) as f64;
    let mean = per_class.iter().map(|c| c.fraction).sum::<f64>() / k;
    let var = per_class
        .iter()
        .map(|c| (c.fraction - mean).powi(2))
        .sum::<f64>()
        / k;
    Ok(BalanceReport {
        per_class,
        mean,
        std: var.sqrt(),
    })
}
