//! Exact sparse multivariate polynomial ring over arbitrary-precision rationals.
//!
//! Everything downstream (frame calculus, deduction, case certification) is
//! built on [`Poly`]: a canonical sparse polynomial whose coefficients are
//! reduced `BigRational`s and whose monomials are compared in graded
//! lexicographic order under a fixed global variable order.
//!
//! # Key operations
//! - Ring arithmetic (`+`, `-`, `*`, [`Poly::pow`]) — always exact, results in
//!   canonical form (no zero coefficients stored, unique term maps).
//! - [`Poly::substitute`] — simultaneous capture-free substitution of
//!   variables by polynomials.
//! - [`Poly::coefficients_in`] — view a multivariate polynomial as univariate
//!   in one variable, leading coefficient first.
//! - [`Poly::try_exact_div`] — exact multivariate division test, the licence
//!   mechanism for every division the deduction layer performs.
//! - [`Poly::derive_with`] — formal derivation against a caller-supplied rule
//!   for differentiating variables (product rule handled here).
//!
//! # Design notes
//! - Variables are interned in a [`VarTable`]; their creation order *is* the
//!   global order and never changes. Monomial comparison is graded lex with
//!   earlier-created variables more significant, which makes every polynomial
//!   form unique and every rendering deterministic.
//! - Coefficients are `num_rational::BigRational`, which maintains the
//!   reduced-fraction/positive-denominator invariants this crate relies on.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

mod matrix;
mod resultant;

pub use matrix::{determinant_cofactor, determinant_fraction_free, Matrix, MatrixError, RingElem};
pub use resultant::{resultant, sylvester_matrix, PolyMatrix, ResultantError};

/// Exact rational scalar: arbitrary-precision, always reduced, denominator positive.
pub type Rational = BigRational;

/// Convenience constructor for an integer rational.
pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Convenience constructor for the rational `n / d` (`d` must be nonzero).
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// An interned symbolic variable.
///
/// The wrapped index is the position in the owning [`VarTable`]; creation
/// order fixes the global variable order used by monomial comparison, pivot
/// selection and rendering. Smaller index = earlier = more significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct Var(pub u32);

/// Interning table mapping variable names to [`Var`] ids and back.
///
/// Names are unique; interning an existing name returns the existing id, so
/// the table can be rebuilt deterministically from the same creation script.
#[derive(Debug, Default, Clone)]
pub struct VarTable {
    names: Vec<String>,
    index: BTreeMap<String, Var>,
}

impl VarTable {
    /// Creates an empty table.
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns `name`, returning the existing id if already present.
    pub fn intern(&mut self, name: &str) -> Var {
        if let Some(&v) = self.index.get(name) {
            return v;
        }
        let v = Var(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), v);
        v
    }

    /// Looks up a variable by name.
    pub fn lookup(&self, name: &str) -> Option<Var> {
        self.index.get(name).copied()
    }

    /// Returns the name of `v`.
    pub fn name(&self, v: Var) -> &str {
        &self.names[v.0 as usize]
    }

    /// Number of interned variables.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    /// True if no variables have been interned.
    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Renders a polynomial using this table's variable names.
    ///
    /// Canonical text form: terms in descending monomial order joined with
    /// explicit signs, e.g. `4*x^2 + 12*x*y + 9*y^2` or `x^2 - 2*x + 1`.
    pub fn render(&self, p: &Poly) -> String {
        if p.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        // Leading (greatest) monomial first.
        for (i, (m, c)) in p.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else if neg {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            let mono = self.render_monomial(m);
            if mono.is_empty() {
                out.push_str(&abs.to_string());
            } else if abs.is_one() {
                out.push_str(&mono);
            } else {
                out.push_str(&abs.to_string());
                out.push('*');
                out.push_str(&mono);
            }
        }
        out
    }

    fn render_monomial(&self, m: &Monomial) -> String {
        let mut parts = Vec::new();
        for &(v, e) in &m.exps {
            if e == 1 {
                parts.push(self.name(v).to_string());
            } else {
                parts.push(format!("{}^{}", self.name(v), e));
            }
        }
        parts.join("*")
    }
}

/// A power product of variables; exponents are strictly positive and the
/// variable list is sorted by the global order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    exps: Vec<(Var, u32)>,
}

impl Monomial {
    /// The empty power product (the constant monomial `1`).
    pub fn unit() -> Self {
        Self { exps: Vec::new() }
    }

    /// Single variable to the first power.
    pub fn var(v: Var) -> Self {
        Self { exps: vec![(v, 1)] }
    }

    /// Builds from `(var, exponent)` pairs; zero exponents are dropped.
    pub fn from_pairs(pairs: &[(Var, u32)]) -> Self {
        let mut map: BTreeMap<Var, u32> = BTreeMap::new();
        for &(v, e) in pairs {
            if e > 0 {
                *map.entry(v).or_insert(0) += e;
            }
        }
        Self {
            exps: map.into_iter().collect(),
        }
    }

    /// Total degree.
    pub fn degree(&self) -> u32 {
        self.exps.iter().map(|&(_, e)| e).sum()
    }

    /// Exponent of `v` (zero when absent).
    pub fn exponent(&self, v: Var) -> u32 {
        self.exps
            .iter()
            .find(|&&(w, _)| w == v)
            .map(|&(_, e)| e)
            .unwrap_or(0)
    }

    /// Iterates over `(var, exponent)` pairs in variable order.
    pub fn iter(&self) -> impl Iterator<Item = (Var, u32)> + '_ {
        self.exps.iter().copied()
    }

    /// True for the constant monomial.
    pub fn is_unit(&self) -> bool {
        self.exps.is_empty()
    }

    /// Product of two monomials.
    pub fn mul(&self, other: &Self) -> Self {
        let mut map: BTreeMap<Var, u32> = self.exps.iter().copied().collect();
        for &(v, e) in &other.exps {
            *map.entry(v).or_insert(0) += e;
        }
        Self {
            exps: map.into_iter().collect(),
        }
    }

    /// Exact monomial quotient: `Some(self / other)` iff `other` divides `self`.
    pub fn try_div(&self, other: &Self) -> Option<Self> {
        let mut map: BTreeMap<Var, u32> = self.exps.iter().copied().collect();
        for &(v, e) in &other.exps {
            let slot = map.get_mut(&v)?;
            if *slot < e {
                return None;
            }
            *slot -= e;
            if *slot == 0 {
                map.remove(&v);
            }
        }
        Some(Self {
            exps: map.into_iter().collect(),
        })
    }
}

impl Ord for Monomial {
    /// Graded lexicographic order: total degree first; ties broken by the
    /// exponent of the earliest variable where the monomials differ (higher
    /// exponent on an earlier variable wins).
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let mut a = self.exps.iter().peekable();
        let mut b = other.exps.iter().peekable();
        loop {
            match (a.peek(), b.peek()) {
                (None, None) => return Ordering::Equal,
                // `self` has no more variables: the remaining variables of
                // `other` are later-or-equal... Actually `other` has positive
                // exponent on a variable `self` lacks; `self`'s exponent there
                // is 0, so `other` is greater on that position.
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some(&&(va, ea)), Some(&&(vb, eb))) => {
                    match va.cmp(&vb) {
                        // `self` has a positive exponent on an earlier
                        // variable than `other` does: self is greater.
                        Ordering::Less => return Ordering::Greater,
                        Ordering::Greater => return Ordering::Less,
                        Ordering::Equal => match ea.cmp(&eb) {
                            Ordering::Equal => {
                                a.next();
                                b.next();
                            }
                            ord => return ord,
                        },
                    }
                }
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse exact multivariate polynomial in canonical form.
///
/// Invariant: `terms` stores no zero coefficients, so two polynomials are
/// equal iff their term maps are identical.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    /// The zero polynomial.
    pub fn zero() -> Self {
        Self::default()
    }

    /// The constant polynomial `1`.
    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    /// Constant polynomial.
    pub fn constant(c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::unit(), c);
        }
        Self { terms }
    }

    /// Integer constant polynomial.
    pub fn int(n: i64) -> Self {
        Self::constant(rat_int(n))
    }

    /// The polynomial consisting of the single variable `v`.
    pub fn var(v: Var) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::var(v), Rational::one());
        Self { terms }
    }

    /// Builds a polynomial from `(monomial, coefficient)` pairs, summing
    /// duplicates and dropping zeros.
    pub fn from_terms(pairs: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut p = Poly::zero();
        for (m, c) in pairs {
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    /// True for the zero polynomial.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of terms.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Iterates over `(monomial, coefficient)` pairs in ascending monomial order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    /// Returns `Some(c)` iff the polynomial is the constant `c` (zero included).
    pub fn as_constant(&self) -> Option<Rational> {
        if self.terms.is_empty() {
            return Some(Rational::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&Monomial::unit()) {
                return Some(c.clone());
            }
        }
        None
    }

    /// Coefficient of a monomial (zero when absent).
    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// The greatest monomial and its coefficient, unless zero.
    pub fn leading_term(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    /// Total degree (zero polynomial reports 0).
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Degree in a single variable (zero polynomial reports 0).
    pub fn degree_in(&self, x: Var) -> u32 {
        self.terms.keys().map(|m| m.exponent(x)).max().unwrap_or(0)
    }

    /// The set of variables that occur with positive exponent.
    pub fn variables(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = Vec::new();
        for m in self.terms.keys() {
            for (v, _) in m.iter() {
                vs.push(v);
            }
        }
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// True if `x` occurs in the polynomial.
    pub fn contains(&self, x: Var) -> bool {
        self.terms.keys().any(|m| m.exponent(x) > 0)
    }

    /// Exact exponentiation by repeated squaring.
    pub fn pow(&self, e: u32) -> Poly {
        let mut base = self.clone();
        let mut exp = e;
        let mut acc = Poly::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = &acc * &base;
            }
            exp >>= 1;
            if exp > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Multiplies by a rational scalar.
    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k * c))
                .collect(),
        }
    }

    /// Simultaneous substitution: every variable bound in `bindings` is
    /// replaced by its image; unbound variables pass through.
    pub fn substitute(&self, bindings: &BTreeMap<Var, Poly>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut factor = Poly::constant(c.clone());
            let mut residue = Monomial::unit();
            for (v, e) in m.iter() {
                match bindings.get(&v) {
                    Some(img) => factor = &factor * &img.pow(e),
                    None => residue = residue.mul(&Monomial::from_pairs(&[(v, e)])),
                }
            }
            for (fm, fc) in factor.terms {
                out.add_term(residue.mul(&fm), fc);
            }
        }
        out
    }

    /// Replaces a single variable.
    pub fn substitute_var(&self, v: Var, image: &Poly) -> Poly {
        let mut b = BTreeMap::new();
        b.insert(v, image.clone());
        self.substitute(&b)
    }

    /// Total evaluation: every variable must be given a rational value.
    pub fn eval(&self, mut value_of: impl FnMut(Var) -> Rational) -> Rational {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in m.iter() {
                let val = value_of(v);
                let mut p = Rational::one();
                for _ in 0..e {
                    p *= &val;
                }
                t *= p;
            }
            acc += t;
        }
        acc
    }

    /// Coefficients of the polynomial viewed as univariate in `x`, leading
    /// coefficient first: returns `[a₀, …, a_m]` with `p = Σ aᵢ·x^(m−i)` and
    /// `a₀ ≠ 0` unless `p = 0` (the zero polynomial returns `[0]`).
    pub fn coefficients_in(&self, x: Var) -> Vec<Poly> {
        let m = self.degree_in(x);
        let mut coeffs = vec![Poly::zero(); (m + 1) as usize];
        for (mono, c) in &self.terms {
            let e = mono.exponent(x);
            let rest = mono
                .try_div(&Monomial::from_pairs(&[(x, e)]))
                .expect("removing a variable's own exponent always succeeds");
            coeffs[(m - e) as usize].add_term(rest, c.clone());
        }
        coeffs
    }

    /// Exact multivariate division: `Some(q)` iff `self = q·d` exactly.
    ///
    /// This is the only division primitive the deduction layer is allowed to
    /// use; it either certifies exactness or refuses.
    pub fn try_exact_div(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&(Rational::one() / c)));
        }
        let (dm, dc) = d.leading_term().expect("nonzero divisor");
        let dm = dm.clone();
        let dc = dc.clone();
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        while !rem.is_zero() {
            let (rm, rc) = rem.leading_term().expect("nonzero remainder");
            let qm = rm.try_div(&dm)?;
            let qc = rc / &dc;
            let qterm = Poly::from_terms([(qm, qc)]);
            rem = &rem - &(&qterm * d);
            quot = &quot + &qterm;
        }
        Some(quot)
    }

    /// Formal derivation with the product rule. `derive_var(v)` must return
    /// the derivative of the variable `v` as a polynomial; this routine
    /// extends it to the whole ring (constants map to zero).
    pub fn derive_with<E>(
        &self,
        mut derive_var: impl FnMut(Var) -> Result<Poly, E>,
    ) -> Result<Poly, E> {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            for (v, e) in m.iter() {
                // d(v^e · rest) contributes e·v^(e−1)·d(v)·rest.
                let lowered = m
                    .try_div(&Monomial::var(v))
                    .expect("positive exponent can always be lowered");
                let dv = derive_var(v)?;
                if dv.is_zero() {
                    continue;
                }
                let part = Poly::from_terms([(lowered, c * rat_int(e as i64))]);
                out = &out + &(&part * &dv);
            }
        }
        Ok(out)
    }

    /// Rational content: positive scalar `c` such that `self / c` has
    /// coprime integer coefficients; zero polynomial reports 1.
    pub fn content(&self) -> Rational {
        use num_integer::Integer;
        if self.is_zero() {
            return Rational::one();
        }
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for c in self.terms.values() {
            num_gcd = num_gcd.gcd(c.numer());
            den_lcm = den_lcm.lcm(c.denom());
        }
        Rational::new(num_gcd, den_lcm)
    }

    /// Scale-canonical form: divides out the rational content and fixes the
    /// sign so the leading coefficient is positive. Zero maps to zero.
    ///
    /// Two polynomials describe the same (in)equation iff their normalized
    /// forms coincide.
    pub fn normalized(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut c = self.content();
        let (_, lead) = self.leading_term().expect("nonzero");
        if lead.is_negative() {
            c = -c;
        }
        self.scale(&(Rational::one() / c))
    }
}

impl fmt::Display for Poly {
    /// Name-free debug rendering (`v12^2*v3`-style); use [`VarTable::render`]
    /// for the canonical named text form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", c)?;
            for (v, e) in m.iter() {
                write!(f, "*v{}", v.0)?;
                if e > 1 {
                    write!(f, "^{}", e)?;
                }
            }
        }
        Ok(())
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $impl_fn:expr) => {
        impl std::ops::$trait<&Poly> for &Poly {
            type Output = Poly;
            fn $method(self, rhs: &Poly) -> Poly {
                let f: fn(&Poly, &Poly) -> Poly = $impl_fn;
                f(self, rhs)
            }
        }
        impl std::ops::$trait<Poly> for Poly {
            type Output = Poly;
            fn $method(self, rhs: Poly) -> Poly {
                std::ops::$trait::$method(&self, &rhs)
            }
        }
        impl std::ops::$trait<&Poly> for Poly {
            type Output = Poly;
            fn $method(self, rhs: &Poly) -> Poly {
                std::ops::$trait::$method(&self, rhs)
            }
        }
        impl std::ops::$trait<Poly> for &Poly {
            type Output = Poly;
            fn $method(self, rhs: Poly) -> Poly {
                std::ops::$trait::$method(self, &rhs)
            }
        }
    };
}

impl_binop!(Add, add, |a: &Poly, b: &Poly| {
    let mut out = a.clone();
    for (m, c) in &b.terms {
        out.add_term(m.clone(), c.clone());
    }
    out
});

impl_binop!(Sub, sub, |a: &Poly, b: &Poly| {
    let mut out = a.clone();
    for (m, c) in &b.terms {
        out.add_term(m.clone(), -c.clone());
    }
    out
});

impl_binop!(Mul, mul, |a: &Poly, b: &Poly| {
    let mut out = Poly::zero();
    for (ma, ca) in &a.terms {
        for (mb, cb) in &b.terms {
            out.add_term(ma.mul(mb), ca * cb);
        }
    }
    out
});

impl std::ops::Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }
}

impl std::ops::Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}
