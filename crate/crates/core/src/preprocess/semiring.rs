use std::cmp::Ordering;
use std::fmt::Debug;

use num_bigint::BigInt;

/// A commutative semiring for the bottom-up pass: `add` folds a group,
/// `mul` combines a tuple with its children's group values.
pub trait Semiring {
    type Elem: Clone + Debug;
    fn zero() -> Self::Elem;
    fn is_zero(e: &Self::Elem) -> bool;
    fn add(a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
}

/// `({false, true}, ∨, ∧)`: does the tuple extend through its subtree?
#[derive(Debug)]
pub struct Boolean;

impl Semiring for Boolean {
    type Elem = bool;
    fn zero() -> bool {
        false
    }
    fn is_zero(e: &bool) -> bool {
        !*e
    }
    fn add(a: &bool, b: &bool) -> bool {
        *a || *b
    }
    fn mul(a: &bool, b: &bool) -> bool {
        *a && *b
    }
}

/// How answer weights combine and compare. Combining must be associative,
/// commutative and (strictly) monotone in the order, so that the best
/// extension of a tuple combines the best extensions of its children.
pub trait Aggregate: 'static {
    type W: Clone + Debug + Send + Sync;
    fn identity() -> Self::W;
    fn combine(a: &Self::W, b: &Self::W) -> Self::W;
    fn cmp(a: &Self::W, b: &Self::W) -> Ordering;
    /// `total` with the part `old` replaced by `new`, when combining can be
    /// undone.
    fn swap(_total: &Self::W, _old: &Self::W, _new: &Self::W) -> Option<Self::W> {
        None
    }
}

/// `(min, combine)` over an aggregate; `None` plays `+∞`.
#[derive(Debug)]
pub struct Tropical<A>(std::marker::PhantomData<A>);

impl<A: Aggregate> Semiring for Tropical<A> {
    type Elem = Option<A::W>;
    fn zero() -> Self::Elem {
        None
    }
    fn is_zero(e: &Self::Elem) -> bool {
        e.is_none()
    }
    fn add(a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        match (a, b) {
            (None, x) | (x, None) => x.clone(),
            (Some(x), Some(y)) => Some(if A::cmp(y, x) == Ordering::Less { y } else { x }.clone()),
        }
    }
    fn mul(a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        match (a, b) {
            (Some(x), Some(y)) => Some(A::combine(x, y)),
            _ => None,
        }
    }
}

/// No weights at all; every answer ranks the same.
#[derive(Debug)]
pub struct Unit;

impl Aggregate for Unit {
    type W = ();
    fn identity() {}
    fn combine(_: &(), _: &()) {}
    fn cmp(_: &(), _: &()) -> Ordering {
        Ordering::Equal
    }
}

#[derive(Debug)]
pub struct SumF64;

impl Aggregate for SumF64 {
    type W = f64;
    fn identity() -> f64 {
        0.0
    }
    fn combine(a: &f64, b: &f64) -> f64 {
        a + b
    }
    fn cmp(a: &f64, b: &f64) -> Ordering {
        a.total_cmp(b)
    }
    fn swap(total: &f64, old: &f64, new: &f64) -> Option<f64> {
        Some(total - old + new)
    }
}

#[derive(Debug)]
pub struct SumBig;

impl Aggregate for SumBig {
    type W = BigInt;
    fn identity() -> BigInt {
        BigInt::default()
    }
    fn combine(a: &BigInt, b: &BigInt) -> BigInt {
        a + b
    }
    fn cmp(a: &BigInt, b: &BigInt) -> Ordering {
        a.cmp(b)
    }
    fn swap(total: &BigInt, old: &BigInt, new: &BigInt) -> Option<BigInt> {
        Some(total - old + new)
    }
}

/// MAX, refined to a total order: weights are the multiset of term values
/// sorted largest first and compared lexicographically. The first entry is
/// the maximum; the rest only separates answers whose maxima tie. Plain max
/// is monotone but not strictly, so the best extension of a tuple would not
/// be unique up to ties; this refinement is.
#[derive(Debug)]
pub struct Leximax;

impl Aggregate for Leximax {
    type W = Vec<f64>;
    fn identity() -> Vec<f64> {
        Vec::new()
    }
    fn combine(a: &Vec<f64>, b: &Vec<f64>) -> Vec<f64> {
        merge(a, b, |x, y| y.total_cmp(x))
    }
    fn cmp(a: &Vec<f64>, b: &Vec<f64>) -> Ordering {
        cmp_seq(a, b)
    }
}

/// The mirror of [`Leximax`]: sorted smallest first. Ranks by MIN ascending,
/// which is MAX descending over negated weights.
#[derive(Debug)]
pub struct Leximin;

impl Aggregate for Leximin {
    type W = Vec<f64>;
    fn identity() -> Vec<f64> {
        Vec::new()
    }
    fn combine(a: &Vec<f64>, b: &Vec<f64>) -> Vec<f64> {
        merge(a, b, |x, y| x.total_cmp(y))
    }
    fn cmp(a: &Vec<f64>, b: &Vec<f64>) -> Ordering {
        cmp_seq(a, b)
    }
}

fn merge(a: &[f64], b: &[f64], cmp: impl Fn(&f64, &f64) -> Ordering) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if cmp(&a[i], &b[j]) != Ordering::Greater {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn cmp_seq(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tropical_min_plus() {
        type T = Tropical<SumF64>;
        assert_eq!(T::add(&Some(3.0), &Some(5.0)), Some(3.0));
        assert_eq!(T::add(&None, &Some(5.0)), Some(5.0));
        assert_eq!(T::mul(&Some(2.0), &Some(1.0)), Some(3.0));
        assert_eq!(T::mul(&Some(2.0), &None), None);
        assert!(T::is_zero(&T::zero()));
    }

    #[test]
    fn sum_swap() {
        assert_eq!(SumF64::swap(&10.0, &3.0, &5.0), Some(12.0));
        assert_eq!(SumF64::swap(&10.0, &1.0, &2.0), Some(11.0));
        assert_eq!(SumF64::swap(&7.5, &2.0, &2.0), Some(7.5));
    }

    #[test]
    fn leximax_orders_by_max_then_rest() {
        let a = Leximax::combine(&vec![3.0], &vec![1.0]);
        let b = Leximax::combine(&vec![3.0], &vec![2.0]);
        assert_eq!(a, vec![3.0, 1.0]);
        assert_eq!(Leximax::cmp(&a, &b), Ordering::Less);
        assert_eq!(Leximax::cmp(&vec![2.0, 2.0], &a), Ordering::Less);
        assert_eq!(Leximin::combine(&vec![1.0, 4.0], &vec![2.0]), vec![1.0, 2.0, 4.0]);
    }

    #[test]
    fn leximax_is_strict_under_union() {
        let z = vec![2.5, 0.0];
        let (x, y) = (vec![3.0, 1.0], vec![3.0, 2.0]);
        assert_eq!(
            Leximax::cmp(&Leximax::combine(&x, &z), &Leximax::combine(&y, &z)),
            Ordering::Less
        );
    }
}
