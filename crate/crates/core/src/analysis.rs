//! Codeword-length algebra for group coding, checked by enumeration.
//!
//! Every count here is significance bits only; sign bits never enter the
//! length formulas. A "pattern" is an `N`-bit mask where bit `k` says the
//! member in emission position `k` is significant.

use std::fmt::Write as _;

use crate::bitio::Mode;
use crate::codec::{self, Budget, Instrument};
use crate::transform::{Orientation, WaveletPyramid};
use crate::weights::Weights;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// One bit per member.
    Direct,
    /// One group bit, then one bit per member if the group is significant.
    GroupTest,
    /// Group bit, M = 1 pre-bit, early stop and inference, fixed order.
    VlGroupTest,
    /// Variable-length group test with members in the ideal order.
    VlPerfectOrder,
    /// Stop after the first insignificant or the second significant member.
    ControlDilation,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Direct,
        Method::GroupTest,
        Method::VlGroupTest,
        Method::VlPerfectOrder,
        Method::ControlDilation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::GroupTest => "group_test",
            Method::VlGroupTest => "vl_group_test",
            Method::VlPerfectOrder => "vl_perfect_order",
            Method::ControlDilation => "control_dilation",
        }
    }
}

/// Significance-bit cost of one pattern.
pub fn pattern_length(n: usize, method: Method, pattern: u32) -> u32 {
    let sig = |k: usize| pattern >> k & 1 == 1;
    let m = pattern.count_ones() as usize;
    let n32 = n as u32;
    match method {
        Method::Direct => n32,
        Method::GroupTest => {
            if m == 0 {
                1
            } else {
                1 + n32
            }
        }
        Method::VlGroupTest => match m {
            0 => 1,
            // bits up to and including the significant one, the last never sent
            1 => {
                let pos = (0..n).find(|&k| sig(k)).unwrap();
                2 + (pos as u32 + 1).min(n32 - 1)
            }
            _ => {
                let need = n.saturating_sub(2);
                let mut zeros = 0;
                let mut sent = 0;
                for k in 0..n {
                    if zeros == need {
                        break;
                    }
                    sent += 1;
                    if !sig(k) {
                        zeros += 1;
                    }
                }
                2 + sent
            }
        },
        Method::VlPerfectOrder => match m {
            0 => 1,
            1 => 2 + n32.min(2) - 1,
            2 => 2 + n32 - 2,
            _ => 2 + n32,
        },
        Method::ControlDilation => {
            let mut ones = 0;
            let mut sent = 0;
            for k in 0..n {
                sent += 1;
                if !sig(k) {
                    break;
                }
                ones += 1;
                if ones == 2 {
                    break;
                }
            }
            sent
        }
    }
}

/// Lengths of all `2^N` patterns for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthTable {
    pub n: usize,
    pub method: Method,
    /// Indexed by pattern mask.
    pub lengths: Vec<u32>,
    /// Mean length over patterns with exactly M significant members, M = 0..=N.
    pub per_m: Vec<f64>,
}

pub fn enumerate_lengths(n: usize, method: Method) -> Result<LengthTable> {
    if !(1..=8).contains(&n) {
        return Err(Error::invalid(format!("group size {n} outside 1..=8")));
    }
    let lengths: Vec<u32> = (0..1u32 << n).map(|p| pattern_length(n, method, p)).collect();
    let mut sum = vec![0u64; n + 1];
    let mut count = vec![0u64; n + 1];
    for (p, &len) in lengths.iter().enumerate() {
        let m = (p as u32).count_ones() as usize;
        sum[m] += u64::from(len);
        count[m] += 1;
    }
    let per_m = sum.iter().zip(&count).map(|(&s, &c)| s as f64 / c as f64).collect();
    Ok(LengthTable {
        n,
        method,
        lengths,
        per_m,
    })
}

/// Expected length when M follows `dist` (index m, length N + 1) and
/// significant positions are uniform within each M.
pub fn expected_length(table: &LengthTable, dist: &[f64]) -> Result<f64> {
    if dist.len() != table.n + 1 {
        return Err(Error::InvalidDistribution(format!(
            "need {} probabilities, got {}",
            table.n + 1,
            dist.len()
        )));
    }
    if dist.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::InvalidDistribution("probability outside [0, 1]".into()));
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
    }
    Ok(dist.iter().zip(&table.per_m).map(|(p, l)| p * l).sum())
}

/// Group-test average length from `p0`.
pub fn group_test_mean(n: usize, p0: f64) -> f64 {
    p0 + (n as f64 + 1.0) * (1.0 - p0)
}

/// Mean significance-bit cost of an M = 1 group under the variable-length
/// group test: `2 + (1 + 2 + ... + (N-1) + (N-1)) / N`.
pub fn vl_single_cost(n: usize) -> f64 {
    let n = n as f64;
    2.0 + ((n - 1.0) * n / 2.0 + (n - 1.0)) / n
}

/// Variable-length group test average length, with `2 + N` for M > 1.
pub fn vl_mean(n: usize, p0: f64, p1: f64) -> f64 {
    p0 + vl_single_cost(n) * p1 + (2.0 + n as f64) * (1.0 - p0 - p1)
}

/// Variable-length group test with perfectly ordered members.
pub fn vl_ordered_mean(n: usize, p0: f64, p1: f64, p2: f64) -> f64 {
    let n = n as f64;
    p0 + 3.0 * p1 + n * p2 + (2.0 + n) * (1.0 - p0 - p1 - p2)
}

/// One implication `antecedent => consequent` evaluated at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Implication {
    pub antecedent: bool,
    pub consequent: bool,
}

impl Implication {
    pub fn holds(self) -> bool {
        !self.antecedent || self.consequent
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InequalityReport {
    /// `p0 > 1/N` implies group test beats direct coding.
    pub group_vs_direct: Implication,
    /// `min(p0,p1) > 2N/(N²+N+2)` implies VL beats plain group test.
    pub vl_vs_group: Implication,
    /// `min(p0,p1) > 4N/(3N²+N+2)` implies VL beats direct coding.
    pub vl_vs_direct: Implication,
}

impl InequalityReport {
    pub fn all_hold(&self) -> bool {
        self.group_vs_direct.holds() && self.vl_vs_group.holds() && self.vl_vs_direct.holds()
    }

    pub fn describe(&self) -> String {
        let line = |name: &str, cond: &str, i: Implication| {
            if i.antecedent {
                format!("{name}: {cond} satisfied, consequent {}", if i.consequent { "holds" } else { "FAILS" })
            } else {
                format!("{name}: {cond} not satisfied (vacuous)")
            }
        };
        [
            line("group test vs direct", "p0 > 1/N", self.group_vs_direct),
            line("vl vs group test", "min(p0,p1) > 2N/(N^2+N+2)", self.vl_vs_group),
            line("vl vs direct", "min(p0,p1) > 4N/(3N^2+N+2)", self.vl_vs_direct),
        ]
        .join("\n")
    }
}

/// Evaluate the three implications in floating point.
pub fn verify_inequalities(n: usize, p0: f64, p1: f64) -> InequalityReport {
    let nf = n as f64;
    let m = p0.min(p1);
    InequalityReport {
        group_vs_direct: Implication {
            antecedent: p0 > 1.0 / nf,
            consequent: group_test_mean(n, p0) < nf,
        },
        vl_vs_group: Implication {
            antecedent: m > 2.0 * nf / (nf * nf + nf + 2.0),
            consequent: vl_mean(n, p0, p1) < group_test_mean(n, p0),
        },
        vl_vs_direct: Implication {
            antecedent: m > 4.0 * nf / (3.0 * nf * nf + nf + 2.0),
            consequent: vl_mean(n, p0, p1) < nf,
        },
    }
}

/// Exact version for `p0 = a/d`, `p1 = b/d`: every average length is scaled
/// by `2Nd` so the comparisons stay in integers.
pub fn verify_inequalities_exact(n: usize, a: i64, b: i64, d: i64) -> InequalityReport {
    let (n, a, b, d) = (n as i128, i128::from(a), i128::from(b), i128::from(d));
    let s = 2 * n * d;
    let group = 2 * n * (a + (n + 1) * (d - a));
    // 2N * vl_single_cost = 4N + (N-1)(N+2)
    let vl = 2 * n * a + (4 * n + (n - 1) * (n + 2)) * b + 2 * n * (n + 2) * (d - a - b);
    let direct = n * s;
    let m = a.min(b);
    InequalityReport {
        group_vs_direct: Implication {
            antecedent: a * n > d,
            consequent: group < direct,
        },
        vl_vs_group: Implication {
            antecedent: m * (n * n + n + 2) > 2 * n * d,
            consequent: vl < group,
        },
        vl_vs_direct: Implication {
            antecedent: m * (3 * n * n + n + 2) > 4 * n * d,
            consequent: vl < direct,
        },
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SweepSummary {
    pub points: u64,
    /// Points where each antecedent held: group/direct, vl/group, vl/direct.
    pub antecedents: [u64; 3],
    pub counterexamples: Vec<(usize, i64, i64)>,
}

/// Sweep N in `ns` and p0, p1 over `1/100 .. 99/100` with p0 + p1 <= 1.
pub fn grid_sweep(ns: std::ops::RangeInclusive<usize>) -> SweepSummary {
    let mut s = SweepSummary::default();
    for n in ns {
        for a in 1..100 {
            for b in 1..=(100 - a) {
                let r = verify_inequalities_exact(n, a, b, 100);
                s.points += 1;
                for (k, i) in [r.group_vs_direct, r.vl_vs_group, r.vl_vs_direct].iter().enumerate() {
                    s.antecedents[k] += u64::from(i.antecedent);
                }
                if !r.all_hold() {
                    s.counterexamples.push((n, a, b));
                }
            }
        }
    }
    s
}

/// Histogram of M over significant detail coefficients at one bitplane,
/// taken straight from the coefficients:
/// for each coefficient with `|c| >= 2^plane`, the number of its in-band
/// 8-neighbours that are also significant.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MHistogram {
    pub plane: i32,
    pub counts: [u64; 9],
}

impl MHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn probabilities(&self) -> [f64; 9] {
        let t = self.total().max(1) as f64;
        self.counts.map(|c| c as f64 / t)
    }

    /// Fraction of samples with M < 3 against M >= 3.
    pub fn small_vs_large(&self) -> (f64, f64) {
        let p = self.probabilities();
        (p[..3].iter().sum(), p[3..].iter().sum())
    }
}

pub fn m_histogram(pyramid: &WaveletPyramid, plane: i32) -> MHistogram {
    let thr = 2f64.powi(plane);
    let mut h = MHistogram { plane, ..Default::default() };
    for sb in pyramid.subbands().iter().filter(|sb| sb.orientation != Orientation::LL) {
        let sig = |i: isize, j: isize| sb.contains(i, j) && pyramid.get(sb, i as usize, j as usize).abs() >= thr;
        for i in 0..sb.rows as isize {
            for j in 0..sb.cols as isize {
                if !sig(i, j) {
                    continue;
                }
                let m = crate::codec::NEIGHBOURS
                    .iter()
                    .filter(|&&(di, dj)| sig(i + di, j + dj))
                    .count();
                h.counts[m] += 1;
            }
        }
    }
    h
}

/// M over the dilation groups the coder actually forms in detail bands,
/// one histogram per bitplane (highest first), from a full-rate encode.
pub fn coded_group_histograms(pyramid: &WaveletPyramid, weights: &Weights) -> Vec<MHistogram> {
    let inst = Instrument {
        audit: true,
        ..Instrument::default()
    };
    let out = codec::encode_instrumented(pyramid, weights, Budget::UNLIMITED, Mode::Raw, inst);
    let groups = out.audit.map(|a| a.groups).unwrap_or_default();
    groups
        .into_iter()
        .rev()
        .map(|(plane, by_n)| {
            let mut counts = [0u64; 9];
            for row in by_n {
                for (m, c) in row.iter().enumerate() {
                    counts[m] += c;
                }
            }
            MHistogram { plane, counts }
        })
        .collect()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut e = k;
        while e + 1 < idx.len() && v[idx[e + 1]] == v[idx[k]] {
            e += 1;
        }
        // ties share the mean rank
        let mean = (k + e) as f64 / 2.0 + 1.0;
        for &i in &idx[k..=e] {
            r[i] = mean;
        }
        k = e + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties; `None` when
/// either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (ranks(x), ranks(y));
    let mean = (x.len() as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean) * (a - mean);
        syy += (b - mean) * (b - mean);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// `source,plane,m,count,probability` rows, one block per labelled series.
pub fn histogram_csv(series: &[(&str, &[MHistogram])]) -> String {
    let mut s = String::from("source,plane,m,count,probability\n");
    for (source, hists) in series {
        for h in hists.iter() {
            for (m, (count, p)) in h.counts.iter().zip(h.probabilities()).enumerate() {
                writeln!(s, "{source},{},{m},{count},{p:.6}", h.plane).unwrap();
            }
        }
    }
    s
}

/// `n,method,m,mean_length` rows for every table.
pub fn length_csv(tables: &[LengthTable]) -> String {
    let mut s = String::from("n,method,m,mean_length\n");
    for t in tables {
        for (m, l) in t.per_m.iter().enumerate() {
            writeln!(s, "{},{},{},{:.6}", t.n, t.method.name(), m, l).unwrap();
        }
    }
    s
}
