use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{AuditError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided permutation p-value, `(1 + #{|r_perm| ≥ |r|}) / (1 + permutations)`.
    pub p: f64,
    pub n: usize,
    pub permutations: usize,
}

fn centered(v: &[f64]) -> (Vec<f64>, f64) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let c: Vec<f64> = v.iter().map(|x| x - mean).collect();
    let ss = c.iter().map(|x| x * x).sum::<f64>();
    (c, ss)
}

/// Pearson correlation with a seeded permutation test.
pub fn pearson_r(x: &[f64], y: &[f64], permutations: usize, seed: u64) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(AuditError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(AuditError::TooFewPoints {
            found: x.len(),
            required: 3,
        });
    }
    let (cx, sx) = centered(x);
    let (mut cy, sy) = centered(y);
    if sx == 0.0 {
        return Err(AuditError::ZeroVariance("x"));
    }
    if sy == 0.0 {
        return Err(AuditError::ZeroVariance("y"));
    }
    let denom = (sx * sy).sqrt();
    let corr = |cy: &[f64]| cx.iter().zip(cy).map(|(a, b)| a * b).sum::<f64>() / denom;
    let r = corr(&cy).clamp(-1.0, 1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = r.abs() - 1e-12;
    let mut extreme = 0usize;
    for _ in 0..permutations {
        cy.shuffle(&mut rng);
        if corr(&cy).abs() >= target {
            extreme += 1;
        }
    }
    Ok(Correlation {
        r,
        p: (1 + extreme) as f64 / (1 + permutations) as f64,
        n: x.len(),
        permutations,
    })
}
