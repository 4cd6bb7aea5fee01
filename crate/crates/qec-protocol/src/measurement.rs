use ftqec_linalg::RMat;
use serde::{Deserialize, Serialize};

use crate::ProtocolError;

/// Syndrome read-out with uniform misassignment and majority voting.
///
/// Each of `n_rep` repetitions independently reports the true outcome with
/// probability `1 − p_m` and each wrong outcome with probability
/// `p_m/(K − 1)`. The most frequent report wins; ties go to the lowest
/// index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    pub p_m: f64,
    pub n_rep: usize,
}

impl Default for MeasurementModel {
    fn default() -> Self {
        Self { p_m: 0.0, n_rep: 1 }
    }
}

impl MeasurementModel {
    pub fn new(p_m: f64, n_rep: usize) -> Result<Self, ProtocolError> {
        let m = Self { p_m, n_rep };
        m.validate()?;
        Ok(m)
    }

    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(0.0..1.0).contains(&self.p_m) || self.n_rep == 0 || self.n_rep % 2 == 0 {
            return Err(ProtocolError::Measurement { p_m: self.p_m, n_rep: self.n_rep });
        }
        Ok(())
    }

    /// `P[j][k]` = probability of reporting `j` when the true outcome is `k`.
    pub fn confusion(&self, kk: usize) -> RMat {
        let mut p = RMat::zeros(kk, kk);
        if kk == 1 || self.p_m == 0.0 {
            p.fill_with_identity();
            return p;
        }
        let wrong = self.p_m / (kk - 1) as f64;
        let mut counts = vec![0usize; kk];
        for truth in 0..kk {
            let q: Vec<f64> = (0..kk).map(|j| if j == truth { 1.0 - self.p_m } else { wrong }).collect();
            enumerate(&mut counts, 0, self.n_rep, &mut |c| {
                let prob = multinomial(c) * c.iter().zip(&q).map(|(&n, &qi)| qi.powi(n as i32)).product::<f64>();
                // lowest index among the maxima
                let best = (0..kk).fold(0, |b, j| if c[j] > c[b] { j } else { b });
                p[(best, truth)] += prob;
            });
        }
        p
    }

    /// Probability that the majority report differs from the truth.
    pub fn wrong_probability(&self, kk: usize, truth: usize) -> f64 {
        1.0 - self.confusion(kk)[(truth, truth)]
    }
}

/// Visit every composition of `left` into `counts[pos..]`.
fn enumerate(counts: &mut [usize], pos: usize, left: usize, f: &mut dyn FnMut(&[usize])) {
    if pos == counts.len() - 1 {
        counts[pos] = left;
        f(counts);
        return;
    }
    for n in 0..=left {
        counts[pos] = n;
        enumerate(counts, pos + 1, left - n, f);
    }
}

fn multinomial(c: &[usize]) -> f64 {
    let n: usize = c.iter().sum();
    let lf = |m: usize| (1..=m).map(|x| (x as f64).ln()).sum::<f64>();
    (lf(n) - c.iter().map(|&m| lf(m)).sum::<f64>()).exp()
}

/// Binary majority-vote error `Σ_{j>n/2} C(n,j) p^j (1−p)^{n−j}`.
pub fn binomial_majority_error(p: f64, n: usize) -> f64 {
    let lf = |m: usize| (1..=m).map(|x| (x as f64).ln()).sum::<f64>();
    (n / 2 + 1..=n).map(|j| (lf(n) - lf(j) - lf(n - j)).exp() * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32)).sum()
}
