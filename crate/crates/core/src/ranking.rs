//! Score/accuracy ranking and the seven-component lexicographic order.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use thiserror::Error;

use crate::ivifn::Ivifn;

/// Components closer than this compare as equal.
pub const KEY_TOL: f64 = 1e-9;

/// The seven ranking criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeyComponent {
    /// Score.
    S,
    /// Accuracy.
    A,
    /// Mean `a`.
    M,
    /// `a - l^mu_L`.
    C,
    /// `a - l'^mu_U`.
    D,
    /// `a - l'^nu_U`.
    G,
    /// `a - l^nu_L`.
    H,
}

impl KeyComponent {
    pub const CANONICAL: [KeyComponent; 7] = [
        KeyComponent::S,
        KeyComponent::A,
        KeyComponent::M,
        KeyComponent::C,
        KeyComponent::D,
        KeyComponent::G,
        KeyComponent::H,
    ];

    fn index(self) -> usize {
        self as usize
    }

    fn letter(self) -> char {
        ['S', 'A', 'M', 'C', 'D', 'G', 'H'][self.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid key permutation {0:?}: expected each of S, A, M, C, D, G, H exactly once")]
pub struct PermutationError(pub String);

/// Order in which the seven criteria are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KeyPermutation([KeyComponent; 7]);

impl KeyPermutation {
    pub fn new(order: [KeyComponent; 7]) -> Result<Self, PermutationError> {
        let mut seen = [false; 7];
        for c in order {
            if seen[c.index()] {
                let s: String = order.iter().map(|c| c.letter()).collect();
                return Err(PermutationError(s));
            }
            seen[c.index()] = true;
        }
        Ok(KeyPermutation(order))
    }

    pub fn components(&self) -> &[KeyComponent; 7] {
        &self.0
    }

    /// Reorders canonical `(S, A, M, C, D, G, H)` values.
    pub fn apply<T: Clone>(&self, canonical: &[T; 7]) -> [T; 7] {
        std::array::from_fn(|i| canonical[self.0[i].index()].clone())
    }
}

impl Default for KeyPermutation {
    fn default() -> Self {
        KeyPermutation(KeyComponent::CANONICAL)
    }
}

impl FromStr for KeyPermutation {
    type Err = PermutationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let letters: Vec<char> = s.trim().chars().map(|c| c.to_ascii_uppercase()).collect();
        if letters.len() != 7 {
            return Err(PermutationError(s.to_string()));
        }
        let mut order = [KeyComponent::S; 7];
        for (slot, ch) in order.iter_mut().zip(letters) {
            *slot = match ch {
                'S' => KeyComponent::S,
                'A' => KeyComponent::A,
                'M' => KeyComponent::M,
                'C' => KeyComponent::C,
                'D' => KeyComponent::D,
                'G' => KeyComponent::G,
                'H' => KeyComponent::H,
                _ => return Err(PermutationError(s.to_string())),
            };
        }
        KeyPermutation::new(order)
    }
}

impl fmt::Display for KeyPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.0 {
            write!(f, "{}", c.letter())?;
        }
        Ok(())
    }
}

/// Anything the key formulas can be evaluated over: plain numbers for
/// ranking, affine expressions for the linear programs.
pub trait KeyScalar: Clone + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}

impl<T> KeyScalar for T where T: Clone + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> {}

/// Canonical `(S, A, M, C, D, G, H)` for a mean, spreads and shape integrals
/// `(I_L, I_R, I_L', I_R')`.
pub fn key_components<T: KeyScalar>(mean: &T, spreads: &[T; 8], integrals: [f64; 4]) -> [T; 7] {
    let [il, ir, ilu, iru] = integrals;
    let s = spreads;
    let mu = s[1].clone() * ir - s[0].clone() * il + s[3].clone() * iru - s[2].clone() * ilu;
    let nu = s[5].clone() * ir - s[4].clone() * il + s[7].clone() * iru - s[6].clone() * ilu;
    let score = (mu.clone() - nu.clone()) * 0.25;
    let accuracy = mean.clone() * 2.0 + (mu + nu) * 0.25;
    [
        score,
        accuracy,
        mean.clone(),
        mean.clone() - s[0].clone(),
        mean.clone() - s[2].clone(),
        mean.clone() - s[6].clone(),
        mean.clone() - s[4].clone(),
    ]
}

fn canonical_key(x: &Ivifn) -> [f64; 7] {
    key_components(&x.mean(), x.spreads(), x.shapes().integrals())
}

pub fn score(x: &Ivifn) -> f64 {
    canonical_key(x)[0]
}

pub fn accuracy(x: &Ivifn) -> f64 {
    canonical_key(x)[1]
}

/// The seven criteria of `x`, ordered by `perm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LexKey(pub [f64; 7]);

impl LexKey {
    pub fn compare(&self, other: &LexKey) -> Ordering {
        compare_values(&self.0, &other.0, KEY_TOL)
    }
}

pub fn lex_key(x: &Ivifn, perm: &KeyPermutation) -> LexKey {
    LexKey(perm.apply(&canonical_key(x)))
}

/// Lexicographic comparison with ties decided at `tol`.
pub fn compare_values(a: &[f64], b: &[f64], tol: f64) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        if (x - y).abs() > tol {
            return if x < y { Ordering::Less } else { Ordering::Greater };
        }
    }
    Ordering::Equal
}

pub fn compare(x: &Ivifn, y: &Ivifn, perm: &KeyPermutation) -> Ordering {
    lex_key(x, perm).compare(&lex_key(y, perm))
}

/// Score of a triangular number from its nine ordered abscissas
/// `b1L, b1U, a1U, a1L, a2, a3L, a3U, b3U, b3L`.
pub fn tivifn_score(p: [f64; 9]) -> f64 {
    let [b1l, b1u, a1u, a1l, _a2, a3l, a3u, b3u, b3l] = p;
    (a1l + a3l + a1u + a3u - b1l - b3l - b1u - b3u) / 8.0
}

/// Accuracy of a triangular number, same argument order as [`tivifn_score`].
pub fn tivifn_accuracy(p: [f64; 9]) -> f64 {
    let [b1l, b1u, a1u, a1l, a2, a3l, a3u, b3u, b3l] = p;
    (a1l + a3l + a1u + a3u + 8.0 * a2 + b1l + b3l + b1u + b3u) / 8.0
}

/// Abscissas handed to [`tivifn_indices`] were out of order.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("abscissa {index} ({value}) is below its predecessor ({previous})")]
pub struct OrderingViolated {
    pub index: usize,
    pub value: f64,
    pub previous: f64,
}

/// `(score, accuracy)` of a triangular number after checking the chain
/// `b1L <= b1U <= a1U <= a1L <= a2 <= a3L <= a3U <= b3U <= b3L`.
pub fn tivifn_indices(p: [f64; 9]) -> Result<(f64, f64), OrderingViolated> {
    if let Some(i) = (1..9).find(|&i| p[i] < p[i - 1]) {
        return Err(OrderingViolated {
            index: i,
            value: p[i],
            previous: p[i - 1],
        });
    }
    Ok((tivifn_score(p), tivifn_accuracy(p)))
}

/// Equality of mean and all eight spreads at the key tolerance.
pub fn ivifn_equal(x: &Ivifn, y: &Ivifn) -> bool {
    x.approx_eq(y, KEY_TOL)
}

#[cfg(test)]
mod tests {

    #[test]
    fn checked_indices_and_equality() {
        assert_eq!(tivifn_indices([0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 3.5, 3.75, 4.0]), Ok((0.0, 4.0)));
        assert_eq!(tivifn_indices([3.0; 9]), Ok((0.0, 6.0)));
        assert_eq!(tivifn_indices([0.0, 1.0, 0.5, 1.0, 2.0, 3.0, 3.5, 3.75, 4.0]).unwrap_err().index, 2);
        let five: Ivifn = "(5;2,2,3,3;5,5,5,4)".parse().unwrap();
        let eight: Ivifn = "(8;1,1,2,2;4,4,2,3)".parse().unwrap();
        assert!(ivifn_equal(&five, &five));
        assert!(!ivifn_equal(&five, &eight));
        let mut s = *five.spreads();
        s[0] += 1e-6;
        assert!(!ivifn_equal(&five, &Ivifn::new(5.0, s).unwrap()));
    }
    use super::*;

    fn n(a: f64, s: [f64; 8]) -> Ivifn {
        Ivifn::new(a, s).unwrap()
    }

    #[test]
    fn keys_of_known_numbers() {
        let p = KeyPermutation::default();
        let x = n(150.0, [50.0, 60.0, 50.0, 70.0, 120.0, 100.0, 80.0, 70.0]);
        assert_eq!(lex_key(&x, &p).0, [7.5, 300.0, 150.0, 100.0, 100.0, 70.0, 30.0]);
        let y = n(100.0, [25.0, 35.0, 50.0, 50.0, 80.0, 100.0, 50.0, 50.0]);
        assert_eq!(lex_key(&y, &p).0, [-1.25, 203.75, 100.0, 75.0, 50.0, 50.0, 20.0]);
        let eight = n(8.0, [1.0, 1.0, 2.0, 2.0, 4.0, 4.0, 2.0, 3.0]);
        assert_eq!(score(&eight), -0.125);
        assert_eq!(accuracy(&eight), 129.0 / 8.0);
    }

    #[test]
    fn triangular_closed_forms() {
        let p = [0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 3.5, 3.75, 4.0];
        assert_eq!(tivifn_score(p), 0.0);
        assert_eq!(tivifn_accuracy(p), 4.0);
        let five = [0.0, 0.0, 2.0, 3.0, 5.0, 7.0, 8.0, 9.0, 10.0];
        assert_eq!(tivifn_score(five), 0.125);
        assert_eq!(tivifn_accuracy(five), 79.0 / 8.0);
        let x = Ivifn::from_tivifn(five).unwrap();
        assert_eq!(score(&x), 0.125);
    }

    #[test]
    fn permutation_parsing() {
        let p: KeyPermutation = "ASMCDGH".parse().unwrap();
        assert_eq!(p.to_string(), "ASMCDGH");
        assert!("SSMCDGH".parse::<KeyPermutation>().is_err());
        assert!("SAM".parse::<KeyPermutation>().is_err());
        let x = n(150.0, [50.0, 60.0, 50.0, 70.0, 120.0, 100.0, 80.0, 70.0]);
        assert_eq!(lex_key(&x, &p).0[0], 300.0);
    }

    #[test]
    fn score_decides_before_accuracy() {
        let p = KeyPermutation::default();
        let x = n(150.0, [50.0, 60.0, 50.0, 70.0, 120.0, 100.0, 80.0, 70.0]);
        let y = n(1000.0, [0.0; 8]);
        assert_eq!(compare(&x, &y, &p), Ordering::Greater);
        assert_eq!(compare(&x, &x, &p), Ordering::Equal);
    }

    #[test]
    fn key_tie_does_not_force_equal_right_spreads() {
        // only the sums r^mu_L + r'^mu_U and r^nu_L + r'^nu_U enter the key
        let x = n(0.0, [1.0, 1.0, 1.0, 3.0, 3.0, 3.0, 3.0, 3.0]);
        let y = n(0.0, [1.0, 2.0, 1.0, 2.0, 3.0, 3.0, 3.0, 3.0]);
        let p = KeyPermutation::default();
        assert_eq!(compare(&x, &y, &p), Ordering::Equal);
        assert_ne!(x, y);
    }
}
