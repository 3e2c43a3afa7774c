//! Small Monte Carlo statistics: means, intervals and chi-square tests.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

/// Sample mean and standard error of the mean (unbiased variance).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Wilson score interval for `hits` successes out of `n` at normal quantile `z`.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn chi_square_p(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(stat)
}

fn poisson_pmf(k: u64, lambda: f64) -> f64 {
    (k as f64 * lambda.ln() - lambda - ln_gamma(k as f64 + 1.0)).exp()
}

/// Goodness of fit of integer samples against `Poisson(lambda)`, pooling
/// tail bins so that every expected count is at least five. Returns `(statistic, p-value)`.
pub fn poisson_chi_square(counts: &[u64], lambda: f64) -> (f64, f64) {
    let n = counts.len() as f64;
    let max = counts.iter().copied().max().unwrap_or(0);
    let top = max.max((lambda + 10.0 * lambda.sqrt() + 10.0) as u64);
    let mut observed = vec![0.0; top as usize + 1];
    for &c in counts {
        observed[c as usize] += 1.0;
    }
    let expected: Vec<f64> = (0..=top).map(|k| n * poisson_pmf(k, lambda)).collect();
    // pool into bins with expected >= 5; the last bin absorbs the upper tail
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    let mut seen = 0.0;
    for k in 0..=top as usize {
        o += observed[k];
        e += expected[k];
        seen += expected[k];
        if e >= 5.0 && n - seen >= 5.0 {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    let tail_e = n - (seen - e);
    bins.push((o, tail_e));
    let stat: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    (stat, chi_square_p(stat, bins.len() - 1))
}

/// Homogeneity test between two samples of integer counts. Returns `(statistic, p-value)`.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> (f64, f64) {
    let top = a.iter().chain(b).copied().max().unwrap_or(0) as usize;
    let mut ha = vec![0.0; top + 1];
    let mut hb = vec![0.0; top + 1];
    a.iter().for_each(|&c| ha[c as usize] += 1.0);
    b.iter().for_each(|&c| hb[c as usize] += 1.0);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let total = na + nb;
    let min_cell = 5.0 * total / na.min(nb);
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut oa, mut ob) = (0.0, 0.0);
    for k in 0..=top {
        oa += ha[k];
        ob += hb[k];
        if oa + ob >= min_cell {
            bins.push((oa, ob));
            oa = 0.0;
            ob = 0.0;
        }
    }
    if oa + ob > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += oa;
                last.1 += ob;
            }
            None => bins.push((oa, ob)),
        }
    }
    let mut stat = 0.0;
    for (oa, ob) in &bins {
        let col = oa + ob;
        let ea = col * na / total;
        let eb = col * nb / total;
        stat += (oa - ea).powi(2) / ea + (ob - eb).powi(2) / eb;
    }
    (stat, chi_square_p(stat, bins.len() - 1))
}
