//! Coding one dilation group: the N untested neighbours of a seed.
//!
//! The functions here see members only through their position in the
//! coding order; the caller sorts members by significance degree first.

use super::state::GroupStats;
use crate::bitio::Truncated;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    ControlDilation,
    VlGroupTest,
}

/// `4N / (3N² + N + 2)`: above this, the variable-length group test beats
/// one bit per member.
pub fn vl_threshold(n: usize) -> f64 {
    let n = n as f64;
    4.0 * n / (3.0 * n * n + n + 2.0)
}

/// Strategy rule on explicit probabilities.
pub fn prefers_vl(p0: f64, p1: f64, n: usize) -> bool {
    p0.min(p1) > vl_threshold(n)
}

/// Strategy rule on running statistics, evaluated in exact integer arithmetic.
pub fn select_strategy(stats: &GroupStats, n: usize) -> Strategy {
    debug_assert!((1..=8).contains(&n));
    if stats.total == 0 {
        return Strategy::ControlDilation;
    }
    let n = n as u64;
    let lhs = stats.zero.min(stats.one) * (3 * n * n + n + 2);
    if lhs > 4 * n * stats.total {
        Strategy::VlGroupTest
    } else {
        Strategy::ControlDilation
    }
}

/// Bit-level access for group coding.
pub trait GroupChannel {
    /// One significance-model decision. Encoders evaluate `truth`.
    fn decide(&mut self, truth: &dyn Fn() -> bool) -> Result<bool, Truncated>;
    /// Sign of the member at coding position `k` (true = negative).
    fn sign(&mut self, k: usize) -> Result<bool, Truncated>;
}

/// A member whose significance (and sign, if significant) is fully known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub k: usize,
    pub significant: bool,
    pub negative: bool,
}

/// What the running statistics learn from a completed group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub zero: bool,
    pub one: bool,
}

fn significant_member<G: GroupChannel>(io: &mut G, k: usize, out: &mut Vec<Outcome>) -> Result<(), Truncated> {
    let negative = io.sign(k)?;
    out.push(Outcome {
        k,
        significant: true,
        negative,
    });
    Ok(())
}

fn insignificant_member(k: usize, out: &mut Vec<Outcome>) {
    out.push(Outcome {
        k,
        significant: false,
        negative: false,
    });
}

/// Weight-controlled dilation: test members in order, stop after the first
/// insignificant one or the second significant one. Members not reached stay
/// untested.
pub fn control_dilation<G: GroupChannel>(
    io: &mut G,
    n: usize,
    truth: Option<&[bool]>,
    out: &mut Vec<Outcome>,
) -> Result<Observation, Truncated> {
    let mut pattern = [false; 2];
    let mut emitted = 0;
    let mut ones = 0;
    for k in 0..n {
        let bit = io.decide(&|| truth.is_some_and(|t| t[k]))?;
        if emitted < 2 {
            pattern[emitted] = bit;
        }
        emitted += 1;
        if bit {
            significant_member(io, k, out)?;
            ones += 1;
            if ones == 2 {
                break;
            }
        } else {
            insignificant_member(k, out);
            break;
        }
    }
    Ok(Observation {
        zero: !pattern[0] && emitted > 0,
        one: emitted == 2 && pattern == [true, false],
    })
}

/// Which member order the variable-length group test needs once the
/// prefix bits are known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VlOrder {
    /// M = 1: most likely significant first.
    Descending,
    /// M > 1: most likely significant last.
    Ascending,
}

/// Prefix of the variable-length group test: the group bit and, for a
/// significant group, the M = 1 pre-bit. `None` means M = 0.
pub fn vl_prefix<G: GroupChannel>(io: &mut G, m: Option<usize>) -> Result<Option<VlOrder>, Truncated> {
    if !io.decide(&|| m.is_some_and(|m| m > 0))? {
        return Ok(None);
    }
    let single = io.decide(&|| m == Some(1))?;
    Ok(Some(if single {
        VlOrder::Descending
    } else {
        VlOrder::Ascending
    }))
}

/// Member bits of the variable-length group test, after [`vl_prefix`].
pub fn vl_members<G: GroupChannel>(
    io: &mut G,
    n: usize,
    order: Option<VlOrder>,
    truth: Option<&[bool]>,
    out: &mut Vec<Outcome>,
) -> Result<Observation, Truncated> {
    match order {
        None => {
            (0..n).for_each(|k| insignificant_member(k, out));
            Ok(Observation { zero: true, one: false })
        }
        Some(VlOrder::Descending) => {
            for k in 0..n {
                let bit = if k + 1 == n {
                    // N-1 zeros so far: the last member is the one
                    debug_assert!(truth.is_none_or(|t| t[k]));
                    true
                } else {
                    io.decide(&|| truth.is_some_and(|t| t[k]))?
                };
                if bit {
                    significant_member(io, k, out)?;
                    (k + 1..n).for_each(|r| insignificant_member(r, out));
                    break;
                }
                insignificant_member(k, out);
            }
            Ok(Observation { zero: false, one: true })
        }
        Some(VlOrder::Ascending) => {
            let need = n.saturating_sub(2);
            let mut zeros = 0;
            for k in 0..n {
                let bit = if zeros == need {
                    debug_assert!(truth.is_none_or(|t| t[k]), "inferred member must be significant");
                    true
                } else {
                    io.decide(&|| truth.is_some_and(|t| t[k]))?
                };
                if bit {
                    significant_member(io, k, out)?;
                } else {
                    zeros += 1;
                    insignificant_member(k, out);
                }
            }
            Ok(Observation { zero: false, one: false })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Records significance bits as 0/1 and signs as 's'.
    struct Tape<'a> {
        truth: &'a [bool],
        out: String,
    }

    impl GroupChannel for Tape<'_> {
        fn decide(&mut self, truth: &dyn Fn() -> bool) -> Result<bool, Truncated> {
            let b = truth();
            self.out.push(if b { '1' } else { '0' });
            Ok(b)
        }
        fn sign(&mut self, k: usize) -> Result<bool, Truncated> {
            assert!(self.truth[k]);
            self.out.push('s');
            Ok(false)
        }
    }

    fn control(pattern: &[bool]) -> (String, Vec<Outcome>, Observation) {
        let mut tape = Tape {
            truth: pattern,
            out: String::new(),
        };
        let mut out = Vec::new();
        let obs = control_dilation(&mut tape, pattern.len(), Some(pattern), &mut out).unwrap();
        (tape.out, out, obs)
    }

    fn vl(pattern: &[bool]) -> (String, Vec<Outcome>) {
        let mut tape = Tape {
            truth: pattern,
            out: String::new(),
        };
        let m = pattern.iter().filter(|&&b| b).count();
        let mut out = Vec::new();
        let order = vl_prefix(&mut tape, Some(m)).unwrap();
        vl_members(&mut tape, pattern.len(), order, Some(pattern), &mut out).unwrap();
        (tape.out, out)
    }

    #[test]
    fn strategy_examples() {
        assert_eq!(select_strategy(&GroupStats::default(), 5), Strategy::ControlDilation);
        assert!(prefers_vl(0.30, 0.30, 5));
        assert!((vl_threshold(5) - 20.0 / 82.0).abs() < 1e-15);
        assert!(!prefers_vl(0.15, 0.90, 8));
        assert!((vl_threshold(8) - 32.0 / 202.0).abs() < 1e-15);

        let s = GroupStats { total: 100, zero: 30, one: 30 };
        assert_eq!(select_strategy(&s, 5), Strategy::VlGroupTest);
        let s = GroupStats { total: 100, zero: 15, one: 85 };
        assert_eq!(select_strategy(&s, 8), Strategy::ControlDilation);
        // N = 1 and N = 2 can never switch: the threshold is at least 1/2
        let s = GroupStats { total: 10, zero: 5, one: 5 };
        assert_eq!(select_strategy(&s, 2), Strategy::ControlDilation);
    }

    #[test]
    fn control_dilation_traces() {
        let (bits, out, obs) = control(&[false, true, false, false, true]);
        assert_eq!(bits, "0");
        assert_eq!(out.len(), 1);
        assert_eq!(obs, Observation { zero: true, one: false });

        let (bits, out, obs) = control(&[true, true, false, true, false]);
        assert_eq!(bits, "1s1s");
        assert_eq!(out.len(), 2);
        assert_eq!(obs, Observation { zero: false, one: false });

        let (bits, out, obs) = control(&[true, false, true]);
        assert_eq!(bits, "1s0");
        assert_eq!(out.len(), 2);
        assert_eq!(obs, Observation { zero: false, one: true });
    }

    #[test]
    fn vl_traces() {
        assert_eq!(vl(&[false; 5]).0, "0");
        assert_eq!(vl(&[false; 5]).1.len(), 5);
        assert_eq!(vl(&[true, false, false, false, false]).0, "111s");
        assert_eq!(vl(&[false, false, false, false, true]).0, "110000s");
        assert_eq!(vl(&[false, false, true, false, false]).0, "11001s");
        assert_eq!(vl(&[true; 5]).0, "101s1s1s1s1s");
        // three zeros reached: last member inferred, sign still sent
        assert_eq!(vl(&[false, false, false, true, true]).0, "10000ss");
        assert_eq!(vl(&[true, true]).0, "10ss");
        assert_eq!(vl(&[true]).0, "11s");
        for p in [[true, false, true, false, false], [false, true, true, true, false]] {
            let (_, out) = vl(&p);
            assert_eq!(out.len(), 5);
            for o in out {
                assert_eq!(o.significant, p[o.k]);
            }
        }
    }
}
