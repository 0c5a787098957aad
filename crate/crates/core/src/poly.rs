//! Sparse multivariate polynomials over named variables.
//!
//! A [`Poly`] maps each [`Monomial`] (a sorted tuple of variable names, with
//! powers stored as repeated names) to a real coefficient. It is the common
//! currency for objectives, constraint sides and QUBO bodies.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("variable `{0}` has no assigned value")]
    MissingVariable(String),
    #[error("invalid variable name {0:?}: names must be non-empty and contain no whitespace")]
    InvalidVariable(String),
}

pub(crate) fn valid_name(name: &str) -> bool {
    !name.is_empty() && !name.chars().any(char::is_whitespace)
}

/// Sorted tuple of variable names. The empty monomial is the constant term.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<String>);

impl Monomial {
    pub fn new<I, S>(vars: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = vars.into_iter().map(Into::into).collect();
        if let Some(bad) = names.iter().find(|n| !valid_name(n)) {
            return Err(PolyError::InvalidVariable(bad.clone()));
        }
        names.sort();
        Ok(Self(names))
    }

    pub fn constant() -> Self {
        Self(Vec::new())
    }

    pub fn vars(&self) -> &[String] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_constant(&self) -> bool {
        self.0.is_empty()
    }

    /// Product of two monomials: merged, sorted concatenation.
    pub fn product(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            if self.0[i] <= other.0[j] {
                out.push(self.0[i].clone());
                i += 1;
            } else {
                out.push(other.0[j].clone());
                j += 1;
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Self(out)
    }

    /// Collapses repeated names (`x*x = x` for binary variables).
    pub fn binary_reduced(&self) -> Self {
        let mut names = self.0.clone();
        names.dedup();
        Self(names)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.join(","))
    }
}

/// Multivariate polynomial in canonical form.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T> {
    terms: BTreeMap<Monomial, T>,
}

impl<T: Scalar> Default for Poly<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Scalar> Poly<T> {
    pub fn zero() -> Self {
        Self {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(value: T) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::constant(), value);
        p
    }

    /// The polynomial consisting of a single variable.
    ///
    /// # Panics
    /// If `name` is empty or contains whitespace. See [`Poly::try_var`].
    pub fn var(name: &str) -> Self {
        Self::try_var(name).expect("invalid variable name")
    }

    pub fn try_var(name: &str) -> Result<Self, PolyError> {
        let mut p = Self::zero();
        p.add_term(Monomial::new([name])?, T::one());
        Ok(p)
    }

    /// Builds a polynomial from `(variables, coefficient)` pairs, merging like terms.
    pub fn from_terms<I, V, S>(terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (V, T)>,
        V: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut p = Self::zero();
        for (vars, coeff) in terms {
            p.add_term(Monomial::new(vars)?, coeff);
        }
        Ok(p)
    }

    /// Adds `coeff * monomial` in place.
    pub fn add_term(&mut self, monomial: Monomial, coeff: T) {
        match self.terms.entry(monomial) {
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += coeff;
                if slot.get().abs() < T::drop_tolerance() {
                    slot.remove();
                }
            }
            Entry::Vacant(slot) => {
                if coeff.abs() >= T::drop_tolerance() {
                    slot.insert(coeff);
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, T)> + '_ {
        self.terms.iter().map(|(m, c)| (m, *c))
    }

    pub fn coefficient(&self, monomial: &Monomial) -> T {
        self.terms.get(monomial).copied().unwrap_or_else(T::zero)
    }

    /// Coefficient of the monomial given by `vars` (order irrelevant).
    pub fn coeff_of(&self, vars: &[&str]) -> T {
        Monomial::new(vars.iter().copied())
            .map(|m| self.coefficient(&m))
            .unwrap_or_else(|_| T::zero())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    /// Largest monomial length; zero for constants and the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Distinct variables, sorted.
    pub fn variables(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.terms.keys().flat_map(|m| m.0.iter()).collect();
        set.into_iter().cloned().collect()
    }

    pub fn constant_term(&self) -> T {
        self.coefficient(&Monomial::constant())
    }

    /// `(degree, variables, constant)` in one call.
    pub fn inspect(&self) -> (usize, Vec<String>, T) {
        (self.degree(), self.variables(), self.constant_term())
    }

    pub fn scale(&self, factor: T) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), *c * factor);
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(T::one());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Collapses powers of every variable, valid when all variables are binary.
    pub fn reduce_binary_powers(&self) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.add_term(m.binary_reduced(), *c);
        }
        out
    }

    /// Same polynomial without its constant term.
    pub fn without_constant(&self) -> Self {
        let mut out = self.clone();
        out.terms.remove(&Monomial::constant());
        out
    }

    pub fn evaluate(&self, assignment: &HashMap<String, T>) -> Result<T, PolyError> {
        self.evaluate_with(|name| assignment.get(name).copied())
    }

    pub fn evaluate_with<F>(&self, mut lookup: F) -> Result<T, PolyError>
    where
        F: FnMut(&str) -> Option<T>,
    {
        let mut total = T::zero();
        for (m, c) in &self.terms {
            let mut term = *c;
            for name in &m.0 {
                term *= lookup(name).ok_or_else(|| PolyError::MissingVariable(name.clone()))?;
            }
            total += term;
        }
        Ok(total)
    }

    /// Resolves variable names against `var_order` for fast repeated evaluation.
    pub fn index(&self, var_order: &[String]) -> Result<IndexedPoly<T>, PolyError> {
        let position: HashMap<&str, usize> = var_order
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let mut constant = T::zero();
        let mut terms = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            if m.is_constant() {
                constant += *c;
                continue;
            }
            let idx = m
                .0
                .iter()
                .map(|n| {
                    position
                        .get(n.as_str())
                        .copied()
                        .ok_or_else(|| PolyError::MissingVariable(n.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            terms.push((idx, *c));
        }
        Ok(IndexedPoly { terms, constant })
    }

    pub(crate) fn map_coefficients<U: Scalar>(&self, f: impl Fn(T) -> U) -> Poly<U> {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(*c));
        }
        out
    }

    /// Converts the coefficient type (e.g. `f64` to `f32`).
    pub fn cast<U: Scalar>(&self) -> Poly<U> {
        self.map_coefficients(|c| U::of(c.as_f64()))
    }
}

/// A polynomial whose variables are resolved to positions in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedPoly<T> {
    terms: Vec<(Vec<usize>, T)>,
    constant: T,
}

impl<T: Scalar> IndexedPoly<T> {
    /// Evaluates at a 0/1 assignment given in variable order.
    pub fn eval_bits(&self, bits: &[u8]) -> T {
        let mut total = self.constant;
        for (idx, c) in &self.terms {
            if idx.iter().all(|&i| bits[i] != 0) {
                total += *c;
            }
        }
        total
    }

    /// Evaluates at the assignment whose bit `i` of `index` is variable `i`.
    pub fn eval_index(&self, index: usize) -> T {
        let mut total = self.constant;
        for (idx, c) in &self.terms {
            if idx.iter().all(|&i| index >> i & 1 == 1) {
                total += *c;
            }
        }
        total
    }
}

impl<T: Scalar> Add<&Poly<T>> for &Poly<T> {
    type Output = Poly<T>;

    fn add(self, rhs: &Poly<T>) -> Poly<T> {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }
}

impl<T: Scalar> Sub<&Poly<T>> for &Poly<T> {
    type Output = Poly<T>;

    fn sub(self, rhs: &Poly<T>) -> Poly<T> {
        self + &(-rhs)
    }
}

impl<T: Scalar> Mul<&Poly<T>> for &Poly<T> {
    type Output = Poly<T>;

    fn mul(self, rhs: &Poly<T>) -> Poly<T> {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.product(mb), *ca * *cb);
            }
        }
        out
    }
}

impl<T: Scalar> Neg for &Poly<T> {
    type Output = Poly<T>;

    fn neg(self) -> Poly<T> {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -*c)).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($trait:ident, $method:ident) => {
        impl<T: Scalar> $trait<Poly<T>> for Poly<T> {
            type Output = Poly<T>;
            fn $method(self, rhs: Poly<T>) -> Poly<T> {
                (&self).$method(&rhs)
            }
        }
        impl<T: Scalar> $trait<&Poly<T>> for Poly<T> {
            type Output = Poly<T>;
            fn $method(self, rhs: &Poly<T>) -> Poly<T> {
                (&self).$method(rhs)
            }
        }
        impl<T: Scalar> $trait<Poly<T>> for &Poly<T> {
            type Output = Poly<T>;
            fn $method(self, rhs: Poly<T>) -> Poly<T> {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl<T: Scalar> Neg for Poly<T> {
    type Output = Poly<T>;

    fn neg(self) -> Poly<T> {
        -&self
    }
}
