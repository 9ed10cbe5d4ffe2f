//! Lexicographic values and the ordered-value abstraction used by the
//! coupled-iteration engine.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Default absolute tolerance for Lyapunov comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;

/// A nonnegative vector sorted in nondecreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct LexValue {
    entries: Vec<f64>,
}

impl LexValue {
    /// Sorts the input. Fails on negative or non-finite entries.
    pub fn from_unsorted(mut entries: Vec<f64>) -> Result<Self> {
        if let Some(v) = entries.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Precondition(format!("lexicographic entries must be finite and >= 0, got {v}")));
        }
        entries.sort_by(f64::total_cmp);
        Ok(Self { entries })
    }

    /// Accepts an already sorted vector; fails if it is not sorted.
    pub fn from_sorted(entries: Vec<f64>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Precondition("lexicographic entries are not sorted".into()));
        }
        Self::from_unsorted(entries)
    }

    pub fn zeros(n: usize) -> Self {
        Self { entries: vec![0.0; n] }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl fmt::Display for LexValue {
    /// Semicolon-joined entries.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries.iter().enumerate() {
            if k > 0 {
                f.write_str(";")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Exact lexicographic comparison: the first differing coordinate decides.
pub fn lex_compare(u: &LexValue, v: &LexValue) -> Result<Ordering> {
    lex_compare_tol(u, v, 0.0)
}

/// Coordinates within `tol` of each other are treated as equal.
pub fn lex_compare_tol(u: &LexValue, v: &LexValue, tol: f64) -> Result<Ordering> {
    lex_compare_slices(&u.entries, &v.entries, tol)
}

/// Lexicographic comparison of arbitrary (not necessarily sorted) vectors.
pub fn lex_compare_slices(u: &[f64], v: &[f64], tol: f64) -> Result<Ordering> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("length {}", u.len()),
            found: format!("length {}", v.len()),
        });
    }
    for (a, b) in u.iter().zip(v) {
        if (a - b).abs() <= tol {
            continue;
        }
        return Ok(a.total_cmp(b));
    }
    Ok(Ordering::Equal)
}

/// `u ≤ v` up to upward slack `tol`: scanning coordinates in order, the
/// first strict decrease decides in favour of `u`, increases of at most
/// `tol` are forgiven, and a larger increase decides against it.
///
/// Unlike [`lex_compare_tol`], a genuine decrease smaller than `tol` in a
/// leading coordinate is not masked by later rounding noise.
pub fn lex_le_tol(u: &[f64], v: &[f64], tol: f64) -> Result<bool> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("length {}", u.len()),
            found: format!("length {}", v.len()),
        });
    }
    for (a, b) in u.iter().zip(v) {
        if a < b {
            return Ok(true);
        }
        if a - b > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Which totally ordered set a Lyapunov function takes values in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Scalar,
    Lexicographic,
}

/// A value of the objective `f = Φ + f₁`: a real or a lexicographic vector.
#[derive(Debug, Clone, PartialEq)]
pub enum OrderedValue {
    Scalar(f64),
    Lex(LexValue),
}

impl OrderedValue {
    pub fn kind(&self) -> ValueKind {
        match self {
            Self::Scalar(_) => ValueKind::Scalar,
            Self::Lex(_) => ValueKind::Lexicographic,
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Self::Scalar(v) => Some(*v),
            Self::Lex(_) => None,
        }
    }

    pub fn as_lex(&self) -> Option<&LexValue> {
        match self {
            Self::Lex(v) => Some(v),
            Self::Scalar(_) => None,
        }
    }

    /// Tolerance-aware comparison. Mixed kinds are an error.
    pub fn compare_tol(&self, other: &Self, tol: f64) -> Result<Ordering> {
        match (self, other) {
            (Self::Scalar(a), Self::Scalar(b)) => Ok(if (a - b).abs() <= tol {
                Ordering::Equal
            } else {
                a.total_cmp(b)
            }),
            (Self::Lex(a), Self::Lex(b)) => lex_compare_tol(a, b, tol),
            _ => Err(Error::Precondition("cannot compare scalar with lexicographic value".into())),
        }
    }

    /// `self ≤ other + tol`; lexicographic values use [`lex_le_tol`].
    pub fn le_tol(&self, other: &Self, tol: f64) -> Result<bool> {
        match (self, other) {
            (Self::Lex(a), Self::Lex(b)) => lex_le_tol(&a.entries, &b.entries, tol),
            _ => Ok(self.compare_tol(other, tol)? != Ordering::Greater),
        }
    }

    /// Sum in the ordered group: reals add, lexicographic vectors add
    /// componentwise (re-sorted).
    pub fn combine(&self, other: &Self) -> Result<Self> {
        match (self, other) {
            (Self::Scalar(a), Self::Scalar(b)) => Ok(Self::Scalar(a + b)),
            (Self::Lex(a), Self::Lex(b)) => {
                if a.len() != b.len() {
                    return Err(Error::DimensionMismatch {
                        expected: format!("length {}", a.len()),
                        found: format!("length {}", b.len()),
                    });
                }
                let sum = a.entries.iter().zip(&b.entries).map(|(x, y)| x + y).collect();
                LexValue::from_unsorted(sum).map(Self::Lex)
            }
            _ => Err(Error::Precondition("cannot add scalar and lexicographic value".into())),
        }
    }
}

impl fmt::Display for OrderedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Scalar(v) => write!(f, "{v}"),
            Self::Lex(v) => write!(f, "{v}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(v: &[f64]) -> LexValue {
        LexValue::from_sorted(v.to_vec()).unwrap()
    }

    #[test]
    fn compare_examples() {
        assert_eq!(lex_compare(&lv(&[1.0, 2.0, 5.0]), &lv(&[1.0, 3.0, 3.0])).unwrap(), Ordering::Less);
        assert_eq!(lex_compare(&lv(&[1.0, 2.0]), &lv(&[1.0, 2.0])).unwrap(), Ordering::Equal);
        assert_eq!(lex_compare(&lv(&[2.0, 2.0, 2.0]), &lv(&[1.0, 9.0, 9.0])).unwrap(), Ordering::Greater);
        assert!(lex_compare(&lv(&[1.0]), &lv(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn raw_vector_examples() {
        assert_eq!(lex_compare_slices(&[1.0, 2.0, 5.0], &[1.0, 3.0, 0.0], 0.0).unwrap(), Ordering::Less);
        assert_eq!(lex_compare_slices(&[2.0, 0.0, 0.0], &[1.0, 9.0, 9.0], 0.0).unwrap(), Ordering::Greater);
    }

    #[test]
    fn unsorted_inputs_compare_after_sorting() {
        // sorting moves the 0 to the front, so the order flips
        let u = LexValue::from_unsorted(vec![1.0, 2.0, 5.0]).unwrap();
        let v = LexValue::from_unsorted(vec![1.0, 3.0, 0.0]).unwrap();
        assert_eq!(v.entries(), &[0.0, 1.0, 3.0]);
        assert_eq!(lex_compare(&u, &v).unwrap(), Ordering::Greater);
    }

    #[test]
    fn tolerance_masks_small_differences() {
        let a = lv(&[1.0, 2.0]);
        let b = lv(&[1.0 + 1e-12, 1.5]);
        assert_eq!(lex_compare(&a, &b).unwrap(), Ordering::Less);
        assert_eq!(lex_compare_tol(&a, &b, 1e-9).unwrap(), Ordering::Greater);
    }

    #[test]
    fn slack_comparison_keeps_small_leading_decreases() {
        let before = [1.2e-9, 4.0e-4];
        let after = [3.3e-10, 4.0e-4 + 1.2e-9];
        // the symmetric tolerance hides the first coordinate and sees an increase
        assert_eq!(lex_compare_slices(&after, &before, 1e-9).unwrap(), Ordering::Greater);
        assert!(lex_le_tol(&after, &before, 1e-9).unwrap());
        assert!(lex_le_tol(&[1.0, 2.0 + 1e-10], &[1.0, 2.0], 1e-9).unwrap());
        assert!(!lex_le_tol(&[1.0, 2.1], &[1.0, 2.0], 1e-9).unwrap());
        assert!(lex_le_tol(&[1.0 + 1e-12, 1.0], &[1.0, 2.0], 1e-9).unwrap());
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(LexValue::from_unsorted(vec![-1.0]).is_err());
        assert!(LexValue::from_unsorted(vec![f64::NAN]).is_err());
        assert!(LexValue::from_sorted(vec![2.0, 1.0]).is_err());
    }

    #[test]
    fn ordered_value_combination() {
        let s = OrderedValue::Scalar(1.0).combine(&OrderedValue::Scalar(-3.0)).unwrap();
        assert_eq!(s, OrderedValue::Scalar(-2.0));
        let l = OrderedValue::Lex(lv(&[1.0, 2.0])).combine(&OrderedValue::Lex(LexValue::zeros(2))).unwrap();
        assert_eq!(l.to_string(), "1;2");
        assert!(OrderedValue::Scalar(0.0).compare_tol(&l, 0.0).is_err());
        assert!(OrderedValue::Scalar(1.0 + 1e-10).le_tol(&OrderedValue::Scalar(1.0), 1e-9).unwrap());
    }
}
