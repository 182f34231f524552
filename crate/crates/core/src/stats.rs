//! Two-sample significance testing.
//!
//! [`compare`] routes a pair of samples through a fixed decision tree:
//! Shapiro-Wilk on each sample; if either looks non-normal, a two-group
//! Kruskal-Wallis test; otherwise Levene's test picks between a Welch
//! t-test (unequal variances) and a one-way ANOVA. Every statistic is built
//! from per-group sums combined commutatively, so swapping the samples
//! gives a bit-identical p-value.

use std::cmp::Ordering;
use std::fmt;
use std::fmt::Write as _;

use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal, StudentsT};

use crate::error::{Error, Result};

pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestUsed {
    KruskalWallis,
    Welch,
    Anova,
}

impl fmt::Display for TestUsed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestUsed::KruskalWallis => "kruskal-wallis",
            TestUsed::Welch => "welch",
            TestUsed::Anova => "anova",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Less,
    Greater,
    Equal,
}

impl Direction {
    pub fn symbol(self) -> &'static str {
        match self {
            Direction::Less => "<",
            Direction::Greater => ">",
            Direction::Equal => "=",
        }
    }

    pub fn mirrored(self) -> Direction {
        match self {
            Direction::Less => Direction::Greater,
            Direction::Greater => Direction::Less,
            Direction::Equal => Direction::Equal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapiroWilk {
    pub w: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonResult {
    pub test_used: TestUsed,
    pub p_value: f64,
    pub direction: Direction,
    /// Both samples consisted of one repeated value; p is 1 by convention.
    pub degenerate: bool,
    pub normality: [Option<ShapiroWilk>; 2],
    pub levene_p: Option<f64>,
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with n - 1 denominator.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Median; the mean of the two central values for even lengths.
pub fn median(x: &[f64]) -> Option<f64> {
    if x.is_empty() {
        return None;
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

fn poly(c: &[f64], x: f64) -> f64 {
    // c[0] + c[1] x + c[2] x^2 + ...
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid normal")
}

/// Shapiro-Wilk W and p-value (Royston's approximation), for 3 <= n <= 5000.
/// Returns `None` for a constant sample.
pub fn shapiro_wilk(x: &[f64]) -> Result<Option<ShapiroWilk>> {
    let n = x.len();
    if n < 3 {
        return Err(Error::SampleTooSmall { min: 3, got: n });
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let range = v[n - 1] - v[0];
    if range < 1e-19 {
        return Ok(None);
    }
    let an = n as f64;
    let half = n / 2;
    let mut a = vec![0.0; half];
    if n == 3 {
        a[0] = 0.5f64.sqrt();
    } else {
        const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
        const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
        let norm = std_normal();
        let m: Vec<f64> = (1..=half)
            .map(|i| norm.inverse_cdf((i as f64 - 0.375) / (an + 0.25)))
            .collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / an.sqrt();
        let a1 = poly(&C1, rsn) - m[0] / ssumm2;
        let (first, fac) = if n > 5 {
            let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
                / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
                .sqrt();
            a[1] = a2;
            (2, fac)
        } else {
            let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
            (1, fac)
        };
        a[0] = a1;
        for i in first..half {
            a[i] = -m[i] / fac;
        }
    }

    let scaled: Vec<f64> = v.iter().map(|t| (t - v[0]) / range).collect();
    let mu = mean(&scaled);
    let ss: f64 = scaled.iter().map(|t| (t - mu) * (t - mu)).sum();
    let num: f64 = (0..half)
        .map(|i| a[i] * (scaled[n - 1 - i] - scaled[i]))
        .sum();
    let w = (num * num / ss).min(1.0);

    let p = if n == 3 {
        use std::f64::consts::FRAC_PI_3;
        (6.0 / std::f64::consts::PI * (w.sqrt().asin() - FRAC_PI_3)).max(0.0)
    } else {
        let w1 = 1.0 - w;
        if w1 <= 0.0 {
            1.0
        } else {
            let mut y = w1.ln();
            let (m, s) = if n <= 11 {
                let gamma = poly(&[-2.273, 0.459], an);
                if y >= gamma {
                    return Ok(Some(ShapiroWilk { w, p_value: 1e-99 }));
                }
                y = -(gamma - y).ln();
                (
                    poly(&[0.544, -0.39978, 0.025054, -6.714e-4], an),
                    poly(&[1.3822, -0.77857, 0.062767, -0.0020322], an).exp(),
                )
            } else {
                let xx = an.ln();
                (
                    poly(&[-1.5861, -0.31082, -0.083751, 0.0038915], xx),
                    poly(&[-0.4803, -0.082676, 0.0030302], xx).exp(),
                )
            };
            std_normal().sf((y - m) / s)
        }
    };
    Ok(Some(ShapiroWilk {
        w,
        p_value: p.clamp(0.0, 1.0),
    }))
}

/// Average ranks (1-based) of the pooled samples, plus the tie term sum(t^3 - t).
fn pooled_ranks(groups: &[&[f64]]) -> (Vec<Vec<f64>>, f64) {
    let mut pooled: Vec<(f64, usize, usize)> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, xs)| xs.iter().enumerate().map(move |(k, &v)| (v, g, k)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ranks: Vec<Vec<f64>> = groups.iter().map(|g| vec![0.0; g.len()]).collect();
    let mut ties = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j + 1 < pooled.len() && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &(_, g, k) in &pooled[i..=j] {
            ranks[g][k] = avg;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    (ranks, ties)
}

/// Kruskal-Wallis H test with tie correction, chi-square approximation.
pub fn kruskal_wallis(a: &[f64], b: &[f64]) -> f64 {
    let (ranks, ties) = pooled_ranks(&[a, b]);
    let n = (a.len() + b.len()) as f64;
    let ra: f64 = ranks[0].iter().sum();
    let rb: f64 = ranks[1].iter().sum();
    let h = 12.0 / (n * (n + 1.0)) * (ra * ra / a.len() as f64 + rb * rb / b.len() as f64)
        - 3.0 * (n + 1.0);
    let correction = 1.0 - ties / (n * n * n - n);
    if correction <= 0.0 {
        return 1.0;
    }
    let h = (h / correction).max(0.0);
    ChiSquared::new(1.0).expect("df > 0").sf(h).clamp(0.0, 1.0)
}

/// One-way ANOVA F test for two groups.
pub fn anova(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let (ma, mb) = (mean(a), mean(b));
    let grand = (a.iter().sum::<f64>() + b.iter().sum::<f64>()) / n;
    let between = na * (ma - grand).powi(2) + nb * (mb - grand).powi(2);
    let within = a.iter().map(|v| (v - ma).powi(2)).sum::<f64>()
        + b.iter().map(|v| (v - mb).powi(2)).sum::<f64>();
    f_test_p(between, within, n)
}

fn f_test_p(between: f64, within: f64, n: f64) -> f64 {
    if within <= 0.0 {
        return if between > 0.0 { 0.0 } else { 1.0 };
    }
    let f = between / (within / (n - 2.0));
    FisherSnedecor::new(1.0, n - 2.0)
        .expect("df > 0")
        .sf(f)
        .clamp(0.0, 1.0)
}

/// Levene's test with group means as centres.
pub fn levene(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let za: Vec<f64> = a.iter().map(|v| (v - ma).abs()).collect();
    let zb: Vec<f64> = b.iter().map(|v| (v - mb).abs()).collect();
    anova(&za, &zb)
}

/// Welch's unequal-variance t-test, two-sided.
pub fn welch(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let qa = variance(a) / na;
    let qb = variance(b) / nb;
    let se2 = qa + qb;
    let diff = (mean(a) - mean(b)).abs();
    if se2 <= 0.0 {
        return if diff > 0.0 { 0.0 } else { 1.0 };
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t)).clamp(0.0, 1.0)
}

/// Pairwise comparison of two samples through the normality-gated test tree.
pub fn compare(a: &[f64], b: &[f64]) -> Result<ComparisonResult> {
    for s in [a, b] {
        if s.len() < 3 {
            return Err(Error::SampleTooSmall {
                min: 3,
                got: s.len(),
            });
        }
    }
    let first = a[0];
    if a.iter().chain(b).all(|&v| v == first) {
        return Ok(ComparisonResult {
            test_used: TestUsed::KruskalWallis,
            p_value: 1.0,
            direction: Direction::Equal,
            degenerate: true,
            normality: [None, None],
            levene_p: None,
        });
    }
    let sw = [shapiro_wilk(a)?, shapiro_wilk(b)?];
    let normal = |s: &Option<ShapiroWilk>| s.is_some_and(|s| s.p_value >= ALPHA);
    let (test_used, p_value, levene_p) = if !(normal(&sw[0]) && normal(&sw[1])) {
        (TestUsed::KruskalWallis, kruskal_wallis(a, b), None)
    } else {
        let lp = levene(a, b);
        if lp < ALPHA {
            (TestUsed::Welch, welch(a, b), Some(lp))
        } else {
            (TestUsed::Anova, anova(a, b), Some(lp))
        }
    };
    let direction = if p_value >= ALPHA {
        Direction::Equal
    } else {
        let (ma, mb) = (median(a).unwrap(), median(b).unwrap());
        match ma.partial_cmp(&mb).unwrap_or(Ordering::Equal) {
            Ordering::Less => Direction::Less,
            Ordering::Greater => Direction::Greater,
            Ordering::Equal => match mean(a).partial_cmp(&mean(b)).unwrap_or(Ordering::Equal) {
                Ordering::Less => Direction::Less,
                Ordering::Greater => Direction::Greater,
                Ordering::Equal => Direction::Equal,
            },
        }
    };
    Ok(ComparisonResult {
        test_used,
        p_value,
        direction,
        degenerate: false,
        normality: sw,
        levene_p,
    })
}

/// Upper-triangular pairwise table: rows are every group but the last,
/// columns every group but the first, cells `<direction> <p>`.
pub fn pairwise_table(groups: &[(String, Vec<f64>)]) -> Result<String> {
    let mut out = String::new();
    for (name, _) in groups.iter().skip(1) {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (r, (row_name, row)) in groups
        .iter()
        .enumerate()
        .take(groups.len().saturating_sub(1))
    {
        out.push_str(row_name);
        for (c, (_, col)) in groups.iter().enumerate().skip(1) {
            out.push(',');
            if c > r {
                let res = compare(row, col)?;
                let _ = write!(out, "{} {:.2e}", res.direction.symbol(), res.p_value);
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Long-form companion to [`pairwise_table`], one comparison per row.
pub fn pairwise_long(groups: &[(String, Vec<f64>)]) -> Result<String> {
    let mut out = String::from("a,b,test,p_value,direction,median_a,median_b,degenerate\n");
    for (r, (an, a)) in groups.iter().enumerate() {
        for (bn, b) in groups.iter().skip(r + 1) {
            let res = compare(a, b)?;
            let _ = writeln!(
                out,
                "{an},{bn},{},{:e},{},{},{},{}",
                res.test_used,
                res.p_value,
                res.direction.symbol(),
                median(a).unwrap(),
                median(b).unwrap(),
                res.degenerate
            );
        }
    }
    Ok(out)
}
