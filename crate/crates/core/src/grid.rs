//! Sample sets on a closed interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub a: f64,
    pub b: f64,
}

impl Domain {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidSpec(format!(
                "domain needs finite a < b, got [{a}, {b}]"
            )));
        }
        Ok(Domain { a, b })
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    /// `count` equally spaced points including both endpoints.
    pub fn uniform(&self, count: usize) -> Vec<f64> {
        match count {
            0 => Vec::new(),
            1 => vec![self.midpoint()],
            _ => {
                let h = self.length() / (count - 1) as f64;
                (0..count)
                    .map(|i| {
                        if i + 1 == count {
                            self.b
                        } else {
                            self.a + i as f64 * h
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Roots of `f` bracketed by sign changes between consecutive samples,
/// refined by bisection. Samples where `f` cannot be evaluated are skipped.
pub fn sign_change_roots(samples: &[f64], f: impl Fn(f64) -> Option<f64>) -> Vec<f64> {
    let vals: Vec<Option<f64>> = samples.iter().map(|&q| f(q)).collect();
    let mut roots = Vec::new();
    for i in 0..samples.len().saturating_sub(1) {
        let (Some(fa), Some(fb)) = (vals[i], vals[i + 1]) else {
            continue;
        };
        if fa == 0.0 {
            roots.push(samples[i]);
            continue;
        }
        if fa.signum() == fb.signum() || fb == 0.0 {
            continue;
        }
        let (mut lo, mut hi, mut flo) = (samples[i], samples[i + 1], fa);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let Some(fm) = f(mid) else { break };
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    if let (Some(&last), Some(Some(fl))) = (samples.last(), vals.last()) {
        if *fl == 0.0 {
            roots.push(last);
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_includes_endpoints() {
        let d = Domain::new(-8.0, 8.0).unwrap();
        let s = d.uniform(201);
        assert_eq!(s.len(), 201);
        assert_eq!(s[0], -8.0);
        assert_eq!(s[200], 8.0);
        assert_eq!(s[100], 0.0);
        assert!(Domain::new(1.0, 1.0).is_err());
    }

    #[test]
    fn bisection_finds_roots() {
        let s = Domain::new(-3.0, 3.0).unwrap().uniform(20);
        let r = sign_change_roots(&s, |q| Some(q * q - 2.0));
        assert_eq!(r.len(), 2);
        assert!((r[0] + 2f64.sqrt()).abs() < 1e-12);
        assert!((r[1] - 2f64.sqrt()).abs() < 1e-12);
    }
}
