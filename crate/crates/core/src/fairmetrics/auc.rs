use std::cmp::Ordering;

use crate::error::{AuditError, Result, Side};

/// Mann–Whitney AUC: the fraction of (positive, negative) pairs in which the
/// positive scores higher, ties counting one half. Computed from midrank sums.
pub fn auc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() {
        return Err(AuditError::EmptySide(Side::Positive));
    }
    if neg.is_empty() {
        return Err(AuditError::EmptySide(Side::Negative));
    }
    let mut all: Vec<(f64, bool)> = Vec::with_capacity(pos.len() + neg.len());
    for &s in pos {
        all.push((s, true));
    }
    for &s in neg {
        all.push((s, false));
    }
    if all.iter().any(|p| !p.0.is_finite()) {
        return Err(AuditError::NonFiniteScore);
    }
    all.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));

    // Twice the positive rank sum keeps every midrank an integer.
    let mut rank_sum_x2: u128 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i + 1;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1..=j share the midrank (i + 1 + j) / 2
        let positives = all[i..j].iter().filter(|p| p.1).count() as u128;
        rank_sum_x2 += positives * (i as u128 + 1 + j as u128);
        i = j;
    }
    let m = pos.len() as u128;
    let n = neg.len() as u128;
    // 2U = 2R - m(m+1)
    let u_x2 = rank_sum_x2 - m * (m + 1);
    Ok(u_x2 as f64 / (2 * m * n) as f64)
}

fn split_by_label(scores: &[f64], labels: &[bool]) -> Result<(Vec<f64>, Vec<f64>)> {
    if scores.len() != labels.len() {
        return Err(AuditError::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (&s, &l) in scores.iter().zip(labels) {
        if l {
            pos.push(s);
        } else {
            neg.push(s);
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(AuditError::SingleClass {
            positives: pos.len(),
            total: labels.len(),
        });
    }
    Ok((pos, neg))
}

pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = split_by_label(scores, labels)?;
    auc(&pos, &neg)
}

/// Average precision: `Σ (R_i − R_{i−1}) · P_i` over distinct score thresholds
/// taken in descending order.
pub fn pr_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, _) = split_by_label(scores, labels)?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(AuditError::NonFiniteScore);
    }
    let total_pos = pos.len() as f64;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));

    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / total_pos;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}
