//! Rational quaternion algebras (a, b)_Q and their elements.

pub mod arith;
pub mod fp2;
pub mod hilbert;

use crate::error::{Error, Result};
use arith::{rat_int, squarefree_class, Int, Rat};
pub use hilbert::{hilbert_symbol, ramified_places, Place};
use num_traits::{One, Signed, Zero};
use std::fmt;

/// The algebra with basis 1, i, j, k where i^2 = a, j^2 = b and ij = -ji = k.
#[derive(Clone, Debug)]
pub struct QuatAlgebra {
    pub a: Rat,
    pub b: Rat,
    ramified: Vec<Place>,
}

impl PartialEq for QuatAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b
    }
}
impl Eq for QuatAlgebra {}

/// Element x0 + x1 i + x2 j + x3 k.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuatElement(pub [Rat; 4]);

impl QuatAlgebra {
    pub fn new(a: Rat, b: Rat) -> Result<Self> {
        let ramified = ramified_places(&a, &b)?;
        let alg = QuatAlgebra { a, b, ramified };
        debug_assert!(alg.ramified.len() % 2 == 0);
        Ok(alg)
    }

    pub fn from_ints(a: i64, b: i64) -> Result<Self> {
        Self::new(Rat::from_integer(Int::from(a)), Rat::from_integer(Int::from(b)))
    }

    /// Rescales a and b by rational squares to squarefree integers.
    pub fn normalized(a: &Rat, b: &Rat) -> Result<Self> {
        if a.is_zero() || b.is_zero() {
            return Err(Error::Domain("zero structure constant".into()));
        }
        Self::new(rat_int(&squarefree_class(a)), rat_int(&squarefree_class(b)))
    }

    pub fn ramified_places(&self) -> &[Place] {
        &self.ramified
    }

    pub fn ramified_primes(&self) -> Vec<u64> {
        self.ramified
            .iter()
            .filter_map(|p| match p {
                Place::Prime(q) => Some(*q),
                Place::Infinity => None,
            })
            .collect()
    }

    /// Reduced discriminant: product of the finite ramified primes.
    pub fn disc(&self) -> u64 {
        self.ramified_primes().iter().product()
    }

    pub fn is_definite(&self) -> bool {
        self.ramified.contains(&Place::Infinity)
    }

    pub fn one(&self) -> QuatElement {
        QuatElement::from_ints([1, 0, 0, 0])
    }

    pub fn mul(&self, x: &QuatElement, y: &QuatElement) -> QuatElement {
        let [x0, x1, x2, x3] = &x.0;
        let [y0, y1, y2, y3] = &y.0;
        let a = &self.a;
        let b = &self.b;
        let ab = a * b;
        QuatElement([
            x0 * y0 + a * (x1 * y1) + b * (x2 * y2) - &ab * (x3 * y3),
            x0 * y1 + x1 * y0 - b * (x2 * y3) + b * (x3 * y2),
            x0 * y2 + x2 * y0 + a * (x1 * y3) - a * (x3 * y1),
            x0 * y3 + x3 * y0 + x1 * y2 - x2 * y1,
        ])
    }

    pub fn trd(&self, x: &QuatElement) -> Rat {
        &x.0[0] + &x.0[0]
    }

    pub fn nrd(&self, x: &QuatElement) -> Rat {
        let [x0, x1, x2, x3] = &x.0;
        x0 * x0 - &self.a * (x1 * x1) - &self.b * (x2 * x2) + &self.a * &self.b * (x3 * x3)
    }

    /// Bilinear form attached to nrd: nrd(x + y) - nrd(x) - nrd(y) = trd(x conj(y)).
    pub fn pairing(&self, x: &QuatElement, y: &QuatElement) -> Rat {
        let [x0, x1, x2, x3] = &x.0;
        let [y0, y1, y2, y3] = &y.0;
        let two = Rat::from_integer(Int::from(2));
        two * (x0 * y0 - &self.a * (x1 * y1) - &self.b * (x2 * y2)
            + &self.a * &self.b * (x3 * y3))
    }

    pub fn conj(&self, x: &QuatElement) -> QuatElement {
        let [x0, x1, x2, x3] = &x.0;
        QuatElement([x0.clone(), -x1, -x2, -x3])
    }

    /// (trd(x), nrd(x)); x satisfies x^2 - t x + n = 0.
    pub fn min_poly(&self, x: &QuatElement) -> (Rat, Rat) {
        (self.trd(x), self.nrd(x))
    }

    pub fn inv(&self, x: &QuatElement) -> Result<QuatElement> {
        let n = self.nrd(x);
        if n.is_zero() {
            return Err(Error::Domain("element of reduced norm zero is not invertible".into()));
        }
        Ok(self.conj(x).scale(&(Rat::one() / n)))
    }

    /// Matrix of y -> x y in the standard basis (columns are images of 1, i, j, k).
    pub fn left_mult_matrix(&self, x: &QuatElement) -> Vec<Vec<Rat>> {
        let cols: Vec<QuatElement> = (0..4).map(|c| self.mul(x, &QuatElement::unit(c))).collect();
        transpose_cols(&cols)
    }

    /// Matrix of y -> y x in the standard basis.
    pub fn right_mult_matrix(&self, x: &QuatElement) -> Vec<Vec<Rat>> {
        let cols: Vec<QuatElement> = (0..4).map(|c| self.mul(&QuatElement::unit(c), x)).collect();
        transpose_cols(&cols)
    }
}

fn transpose_cols(cols: &[QuatElement]) -> Vec<Vec<Rat>> {
    (0..4).map(|r| cols.iter().map(|c| c.0[r].clone()).collect()).collect()
}

impl QuatElement {
    pub fn zero() -> Self {
        QuatElement([Rat::zero(), Rat::zero(), Rat::zero(), Rat::zero()])
    }

    pub fn unit(idx: usize) -> Self {
        let mut z = Self::zero();
        z.0[idx] = Rat::one();
        z
    }

    pub fn from_ints(v: [i64; 4]) -> Self {
        QuatElement(v.map(|c| Rat::from_integer(Int::from(c))))
    }

    pub fn from_rats(v: &[Rat]) -> Self {
        QuatElement([v[0].clone(), v[1].clone(), v[2].clone(), v[3].clone()])
    }

    pub fn scalar(r: Rat) -> Self {
        let mut z = Self::zero();
        z.0[0] = r;
        z
    }

    pub fn add(&self, o: &Self) -> Self {
        QuatElement(std::array::from_fn(|i| &self.0[i] + &o.0[i]))
    }

    pub fn sub(&self, o: &Self) -> Self {
        QuatElement(std::array::from_fn(|i| &self.0[i] - &o.0[i]))
    }

    pub fn neg(&self) -> Self {
        QuatElement(std::array::from_fn(|i| -&self.0[i]))
    }

    pub fn scale(&self, r: &Rat) -> Self {
        QuatElement(std::array::from_fn(|i| &self.0[i] * r))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    pub fn coeffs(&self) -> Vec<Rat> {
        self.0.to_vec()
    }
}

impl fmt::Display for QuatElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["", "i", "j", "k"];
        let mut first = true;
        for (c, n) in self.0.iter().zip(names) {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, "{}", if c.is_negative() { " - " } else { " + " })?;
            } else if c.is_negative() {
                write!(f, "-")?;
            }
            let a = c.abs();
            if n.is_empty() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{n}")?;
            } else {
                write!(f, "{a}{n}")?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}
