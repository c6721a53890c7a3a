use super::dist::normal_quantile;
use super::{CriticalSource, HypothesisError, Tails, TestKind, TestOptions, TestResult};

/// Largest table size; bigger samples use the normal approximation.
pub const TABLE_MAX: usize = 20;

/// Two-tailed 5% critical values of U_min, indexed `[n1 − 1][n2 − 1]`;
/// −1 marks sizes where no outcome is significant.
#[rustfmt::skip]
const CRITICAL_95_TWO_TAILED: [[i16; TABLE_MAX]; TABLE_MAX] = [
    [ -1,  -1,  -1,  -1,  -1,  -1,  -1,  -1,  -1,  -1,  -1,  -1,  -1,  -1,  -1,  -1,  -1,  -1,  -1,  -1],
    [ -1,  -1,  -1,  -1,  -1,  -1,  -1,   0,   0,   0,   0,   1,   1,   1,   1,   1,   2,   2,   2,   2],
    [ -1,  -1,  -1,  -1,   0,   1,   1,   2,   2,   3,   3,   4,   4,   5,   5,   6,   6,   7,   7,   8],
    [ -1,  -1,  -1,   0,   1,   2,   3,   4,   4,   5,   6,   7,   8,   9,  10,  11,  11,  12,  13,  14],
    [ -1,  -1,   0,   1,   2,   3,   5,   6,   7,   8,   9,  11,  12,  13,  14,  15,  17,  18,  19,  20],
    [ -1,  -1,   1,   2,   3,   5,   6,   8,  10,  11,  13,  14,  16,  17,  19,  21,  22,  24,  25,  27],
    [ -1,  -1,   1,   3,   5,   6,   8,  10,  12,  14,  16,  18,  20,  22,  24,  26,  28,  30,  32,  34],
    [ -1,   0,   2,   4,   6,   8,  10,  13,  15,  17,  19,  22,  24,  26,  29,  31,  34,  36,  38,  41],
    [ -1,   0,   2,   4,   7,  10,  12,  15,  17,  20,  23,  26,  28,  31,  34,  37,  39,  42,  45,  48],
    [ -1,   0,   3,   5,   8,  11,  14,  17,  20,  23,  26,  29,  33,  36,  39,  42,  45,  48,  52,  55],
    [ -1,   0,   3,   6,   9,  13,  16,  19,  23,  26,  30,  33,  37,  40,  44,  47,  51,  55,  58,  62],
    [ -1,   1,   4,   7,  11,  14,  18,  22,  26,  29,  33,  37,  41,  45,  49,  53,  57,  61,  65,  69],
    [ -1,   1,   4,   8,  12,  16,  20,  24,  28,  33,  37,  41,  45,  50,  54,  59,  63,  67,  72,  76],
    [ -1,   1,   5,   9,  13,  17,  22,  26,  31,  36,  40,  45,  50,  55,  59,  64,  69,  74,  78,  83],
    [ -1,   1,   5,  10,  14,  19,  24,  29,  34,  39,  44,  49,  54,  59,  64,  70,  75,  80,  85,  90],
    [ -1,   1,   6,  11,  15,  21,  26,  31,  37,  42,  47,  53,  59,  64,  70,  75,  81,  86,  92,  98],
    [ -1,   2,   6,  11,  17,  22,  28,  34,  39,  45,  51,  57,  63,  69,  75,  81,  87,  93,  99, 105],
    [ -1,   2,   7,  12,  18,  24,  30,  36,  42,  48,  55,  61,  67,  74,  80,  86,  93,  99, 106, 112],
    [ -1,   2,   7,  13,  19,  25,  32,  38,  45,  52,  58,  65,  72,  78,  85,  92,  99, 106, 113, 119],
    [ -1,   2,   8,  14,  20,  27,  34,  41,  48,  55,  62,  69,  76,  83,  90,  98, 105, 112, 119, 127],
];

/// Embedded two-tailed 95% critical value for `n1, n2 ≤ 20`.
pub fn mww_critical_table(n1: usize, n2: usize) -> Option<Option<u32>> {
    if n1 == 0 || n2 == 0 || n1 > TABLE_MAX || n2 > TABLE_MAX {
        return None;
    }
    let v = CRITICAL_95_TWO_TAILED[n1 - 1][n2 - 1];
    Some((v >= 0).then_some(v as u32))
}

/// Null distribution of U for sizes (n1, n2) without ties, as counts of
/// the C(n1+n2, n1) equally likely arrangements.
fn exact_counts(n1: usize, n2: usize) -> Vec<u128> {
    // counts[m][u] for the current n, built up one element of sample 2 at a time.
    let max_u = n1 * n2;
    let mut prev: Vec<Vec<u128>> = (0..=n1).map(|_| vec![1]).collect();
    for n in 1..=n2 {
        let mut cur: Vec<Vec<u128>> = Vec::with_capacity(n1 + 1);
        cur.push(vec![1]);
        for m in 1..=n1 {
            // f(m, n, u) = f(m − 1, n, u − n) + f(m, n − 1, u)
            let mut row = vec![0u128; m * n + 1];
            for (u, c) in cur[m - 1].iter().enumerate() {
                row[u + n] += c;
            }
            for (u, c) in prev[m].iter().enumerate() {
                row[u] += c;
            }
            cur.push(row);
        }
        prev = cur;
    }
    let mut counts = prev.swap_remove(n1);
    counts.resize(max_u + 1, 0);
    counts
}

/// Largest `u` with `P(U ≤ u) ≤ tail` under the exact no-ties null.
pub fn mww_exact_critical(n1: usize, n2: usize, tail: f64) -> Option<u32> {
    let counts = exact_counts(n1, n2);
    let total: u128 = counts.iter().sum();
    let mut cumulative = 0u128;
    let mut critical = None;
    for (u, c) in counts.iter().enumerate() {
        cumulative += c;
        if cumulative as f64 / total as f64 <= tail {
            critical = Some(u as u32);
        } else {
            break;
        }
    }
    critical
}

/// Rank sums (T_1, T_2) over the merged sample, ties receiving midranks,
/// and the tie-group sizes.
pub fn rank_sums(sample_1: &[f64], sample_2: &[f64]) -> ((f64, f64), Vec<usize>) {
    let mut merged: Vec<(f64, usize)> =
        sample_1.iter().map(|&v| (v, 0)).chain(sample_2.iter().map(|&v| (v, 1))).collect();
    merged.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut sums = [0.0, 0.0];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < merged.len() {
        let mut j = i + 1;
        while j < merged.len() && merged[j].0 == merged[i].0 {
            j += 1;
        }
        // Ranks i+1..=j share their average.
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &(_, group) in &merged[i..j] {
            sums[group] += midrank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    ((sums[0], sums[1]), ties)
}

#[derive(Debug, Clone, Copy)]
struct Critical {
    value: Option<f64>,
    source: CriticalSource,
}

fn critical_value(n1: usize, n2: usize, ties: &[usize], options: &TestOptions) -> Critical {
    let tail = options.tail_probability();
    if n1 <= TABLE_MAX && n2 <= TABLE_MAX {
        let standard = options.tails == Tails::Two && (options.confidence - 0.95).abs() < 1e-12;
        return match standard.then(|| mww_critical_table(n1, n2)).flatten() {
            Some(v) => Critical { value: v.map(f64::from), source: CriticalSource::Table },
            None => Critical {
                value: mww_exact_critical(n1, n2, tail).map(f64::from),
                source: CriticalSource::ExactDistribution,
            },
        };
    }
    let (a, b) = (n1 as f64, n2 as f64);
    let n = a + b;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let sigma = (a * b / 12.0 * ((n + 1.0) - tie_term)).sqrt();
    let value = (sigma > 0.0).then(|| a * b / 2.0 - 0.5 - normal_quantile(1.0 - tail) * sigma).filter(|c| *c >= 0.0);
    Critical { value, source: CriticalSource::NormalApproximation }
}

/// Two-tailed MWW test at the given confidence.
pub fn mww_test(sample_1: &[f64], sample_2: &[f64], confidence: f64) -> Result<TestResult, HypothesisError> {
    mww_test_with(sample_1, sample_2, &TestOptions { confidence, ..Default::default() })
}

/// MWW test. `U_i = n1·n2 + n_i(n_i + 1)/2 − T_i`; the statistic is
/// `min(U_1, U_2)` and the null is rejected when it does not exceed the
/// critical value.
pub fn mww_test_with(sample_1: &[f64], sample_2: &[f64], options: &TestOptions) -> Result<TestResult, HypothesisError> {
    options.check()?;
    if sample_1.is_empty() || sample_2.is_empty() {
        return Err(HypothesisError::EmptySample);
    }
    if sample_1.iter().chain(sample_2).any(|v| v.is_nan()) {
        return Err(HypothesisError::NonFinite);
    }
    let (n1, n2) = (sample_1.len(), sample_2.len());
    let ((t1, t2), ties) = rank_sums(sample_1, sample_2);
    let (a, b) = (n1 as f64, n2 as f64);
    let u1 = a * b + a * (a + 1.0) / 2.0 - t1;
    let u2 = a * b + b * (b + 1.0) / 2.0 - t2;
    let u_min = u1.min(u2);
    let critical = critical_value(n1, n2, &ties, options);
    Ok(TestResult {
        test: TestKind::Mww,
        statistic: u_min,
        dof: None,
        critical_value: critical.value,
        critical_source: critical.source,
        confidence: options.confidence,
        tails: options.tails,
        reject_null: critical.value.is_some_and(|c| u_min <= c),
        sample_sizes: (n1, n2),
        u_values: Some((u1, u2)),
        rank_sums: Some((t1, t2)),
    })
}
