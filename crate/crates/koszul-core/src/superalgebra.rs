//! Exact graded-commutative polynomials.
//!
//! Coefficients are Gaussian rationals, every term carries an integer power of
//! `hbar`, and monomials are kept in the chart's declaration order so that two
//! equal polynomials always have identical term maps.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num::{BigInt, BigRational, Complex, One, Signed, Zero};

use crate::error::{Error, Result};

pub type Coeff = Complex<BigRational>;

/// Default joint degree bound for series variables.
pub const DEFAULT_WINDOW: u32 = 8;

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn coeff(num: i64) -> Coeff {
    Complex::new(
        BigRational::from_integer(BigInt::from(num)),
        BigRational::zero(),
    )
}

pub fn coeff_frac(num: i64, den: i64) -> Coeff {
    Complex::new(rational(num, den), BigRational::zero())
}

pub fn imag(num: i64) -> Coeff {
    Complex::new(
        BigRational::zero(),
        BigRational::from_integer(BigInt::from(num)),
    )
}

/// `(-i)^k`.
pub fn minus_i_pow(k: u32) -> Coeff {
    match k % 4 {
        0 => coeff(1),
        1 => imag(-1),
        2 => coeff(-1),
        _ => imag(1),
    }
}

/// `i^k`.
pub fn i_pow(k: u32) -> Coeff {
    match k % 4 {
        0 => coeff(1),
        1 => imag(1),
        2 => coeff(-1),
        _ => imag(-1),
    }
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn is_odd(self) -> bool {
        self == Parity::Odd
    }

    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    pub fn from_bit(odd: bool) -> Parity {
        if odd {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    pub fn bit(self) -> u32 {
        self.is_odd() as u32
    }
}

impl Add for Parity {
    type Output = Parity;
    fn add(self, rhs: Parity) -> Parity {
        Parity::from_bit(self.is_odd() != rhs.is_odd())
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_odd() { "odd" } else { "even" })
    }
}

/// `(-1)^(a*b)` for parities.
pub fn koszul(a: Parity, b: Parity) -> bool {
    a.is_odd() && b.is_odd()
}

/// What a variable stands for inside its chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Role {
    Coordinate,
    /// Conjugate momentum of the coordinate with the given index.
    Momentum(usize),
    /// Formal parameter (such as a pencil parameter); never differentiated.
    Parameter,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedVariable {
    pub name: String,
    pub parity: Parity,
    pub weights: BTreeMap<String, i64>,
    pub role: Role,
    /// Counts towards the truncation window.
    pub series: bool,
}

impl GradedVariable {
    pub fn new(name: impl Into<String>, parity: Parity) -> Self {
        GradedVariable {
            name: name.into(),
            parity,
            weights: BTreeMap::new(),
            role: Role::Coordinate,
            series: false,
        }
    }

    pub fn with_weight(mut self, grading: impl Into<String>, w: i64) -> Self {
        self.weights.insert(grading.into(), w);
        self
    }

    pub fn series(mut self) -> Self {
        self.series = true;
        self
    }

    pub fn role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }
}

/// How a chart was built; derived charts remember their layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChartKind {
    Base,
    /// `x^1..x^n, dx^1..dx^n` followed by parameters.
    PiTangent {
        dim: usize,
    },
    /// `x^1..x^n, x*_1..x*_n` followed by parameters.
    PiCotangent {
        dim: usize,
    },
    /// Base coordinates then fiber coordinates (`u` or, if `dual`, `w`).
    Bundle {
        base: usize,
        rank: usize,
        dual: bool,
    },
    /// The inner chart's variables, then one momentum per inner coordinate.
    Cotangent {
        inner: Arc<Chart>,
    },
}

#[derive(Clone, Debug)]
pub struct Chart {
    vars: Vec<GradedVariable>,
    kind: ChartKind,
    index: HashMap<String, usize>,
}

impl PartialEq for Chart {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars && self.kind == other.kind
    }
}

impl Eq for Chart {}

pub const RESERVED: [&str; 2] = ["hbar", "i"];

impl Chart {
    pub fn build(vars: Vec<GradedVariable>, kind: ChartKind) -> Result<Arc<Chart>> {
        let mut index = HashMap::new();
        for (k, v) in vars.iter().enumerate() {
            if RESERVED.contains(&v.name.as_str()) {
                return Err(Error::ReservedName(v.name.clone()));
            }
            if index.insert(v.name.clone(), k).is_some() {
                return Err(Error::DuplicateName(v.name.clone()));
            }
        }
        Ok(Arc::new(Chart { vars, kind, index }))
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn vars(&self) -> &[GradedVariable] {
        &self.vars
    }

    pub fn var(&self, k: usize) -> &GradedVariable {
        &self.vars[k]
    }

    pub fn kind(&self) -> &ChartKind {
        &self.kind
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn lookup(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn parity(&self, k: usize) -> Parity {
        self.vars[k].parity
    }

    pub fn is_odd(&self, k: usize) -> bool {
        self.vars[k].parity.is_odd()
    }

    pub fn is_momentum(&self, k: usize) -> bool {
        matches!(self.vars[k].role, Role::Momentum(_))
    }

    /// Indices of coordinates (variables that get a momentum in `T*`).
    pub fn coordinates(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| self.vars[k].role == Role::Coordinate)
            .collect()
    }

    pub fn momenta(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.is_momentum(k)).collect()
    }

    pub fn momentum_of(&self, coordinate: usize) -> Option<usize> {
        self.vars
            .iter()
            .position(|v| v.role == Role::Momentum(coordinate))
    }

    pub fn has_grading(&self, grading: &str) -> bool {
        grading == "hbar" || self.vars.iter().any(|v| v.weights.contains_key(grading))
    }
}

/// A chart of plain coordinates, in declaration order.
pub fn declare_chart(vars: &[(&str, Parity)]) -> Result<Arc<Chart>> {
    Chart::build(
        vars.iter()
            .map(|(n, p)| GradedVariable::new(*n, *p))
            .collect(),
        ChartKind::Base,
    )
}

/// A product of chart variables (in chart order) times a power of `hbar`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    exps: Vec<u16>,
    hbar: i32,
}

impl Monomial {
    pub fn new(exps: Vec<u16>, hbar: i32) -> Monomial {
        Monomial { exps, hbar }
    }

    pub fn one(n: usize) -> Monomial {
        Monomial {
            exps: vec![0; n],
            hbar: 0,
        }
    }

    pub fn exps(&self) -> &[u16] {
        &self.exps
    }

    pub fn exp(&self, k: usize) -> u16 {
        self.exps[k]
    }

    pub fn hbar(&self) -> i32 {
        self.hbar
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().map(|&e| e as u32).sum()
    }

    pub fn degree_in(&self, vars: &[usize]) -> u32 {
        vars.iter().map(|&k| self.exps[k] as u32).sum()
    }

    pub fn is_constant(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    fn parity(&self, chart: &Chart) -> Parity {
        let odd = self
            .exps
            .iter()
            .enumerate()
            .filter(|(k, &e)| e > 0 && chart.is_odd(*k))
            .count();
        Parity::from_bit(odd % 2 == 1)
    }

    /// Product in canonical order; `None` when an odd variable repeats.
    /// The flag is true when the Koszul sign is negative.
    fn mul(&self, other: &Monomial, chart: &Chart) -> Option<(Monomial, bool)> {
        let n = self.exps.len();
        let mut sign = false;
        let mut odd_left_after = 0u32;
        // Walk from the end: odd factors of `other` must pass every odd
        // factor of `self` that sits later in chart order.
        for k in (0..n).rev() {
            if chart.is_odd(k) {
                if self.exps[k] > 0 && other.exps[k] > 0 {
                    return None;
                }
                if other.exps[k] > 0 && odd_left_after % 2 == 1 {
                    sign = !sign;
                }
                if self.exps[k] > 0 {
                    odd_left_after += 1;
                }
            }
        }
        let exps = self
            .exps
            .iter()
            .zip(&other.exps)
            .map(|(a, b)| a + b)
            .collect();
        Some((
            Monomial {
                exps,
                hbar: self.hbar + other.hbar,
            },
            sign,
        ))
    }
}

/// Exact polynomial in graded variables, the universal value type.
#[derive(Clone, Debug)]
pub struct SuperPolynomial {
    chart: Arc<Chart>,
    terms: BTreeMap<Monomial, Coeff>,
    window: u32,
    transform: bool,
}

pub type Poly = SuperPolynomial;

impl PartialEq for SuperPolynomial {
    fn eq(&self, other: &Self) -> bool {
        same_chart(&self.chart, &other.chart) && self.terms == other.terms
    }
}

pub fn same_chart(a: &Arc<Chart>, b: &Arc<Chart>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl SuperPolynomial {
    pub fn zero(chart: &Arc<Chart>) -> Poly {
        Poly {
            chart: chart.clone(),
            terms: BTreeMap::new(),
            window: DEFAULT_WINDOW,
            transform: false,
        }
    }

    pub fn constant(chart: &Arc<Chart>, c: Coeff) -> Poly {
        let mut p = Poly::zero(chart);
        p.add_term(Monomial::one(chart.len()), c);
        p
    }

    pub fn one(chart: &Arc<Chart>) -> Poly {
        Poly::constant(chart, coeff(1))
    }

    pub fn int(chart: &Arc<Chart>, n: i64) -> Poly {
        Poly::constant(chart, coeff(n))
    }

    /// The variable with index `k`.
    pub fn var(chart: &Arc<Chart>, k: usize) -> Poly {
        let mut m = Monomial::one(chart.len());
        m.exps[k] = 1;
        let mut p = Poly::zero(chart);
        p.add_term(m, coeff(1));
        p
    }

    pub fn named(chart: &Arc<Chart>, name: &str) -> Result<Poly> {
        if name == "hbar" {
            return Ok(Poly::hbar_pow(chart, 1));
        }
        Ok(Poly::var(chart, chart.lookup(name)?))
    }

    pub fn hbar_pow(chart: &Arc<Chart>, k: i32) -> Poly {
        let mut p = Poly::zero(chart);
        p.transform = k < 0;
        p.add_term(
            Monomial {
                exps: vec![0; chart.len()],
                hbar: k,
            },
            coeff(1),
        );
        p
    }

    /// Single term from raw exponents.
    pub fn monomial(chart: &Arc<Chart>, exps: &[u16], hbar: i32, c: Coeff) -> Poly {
        let mut p = Poly::zero(chart);
        p.transform = hbar < 0;
        let mut m = Monomial {
            exps: exps.to_vec(),
            hbar,
        };
        for k in 0..chart.len() {
            if chart.is_odd(k) && m.exps[k] > 1 {
                return p;
            }
        }
        m.exps.truncate(chart.len());
        p.add_term(m, c);
        p
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn with_window(mut self, window: u32) -> Poly {
        self.window = window;
        self
    }

    pub fn is_transform(&self) -> bool {
        self.transform
    }

    /// Allow negative powers of `hbar` in this value and its descendants.
    pub fn into_transform(mut self) -> Poly {
        self.transform = true;
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> Coeff {
        self.terms.get(m).cloned().unwrap_or_else(Coeff::zero)
    }

    /// Coefficient of the pure constant term (no variables, no `hbar`).
    pub fn constant_term(&self) -> Coeff {
        self.coefficient(&Monomial::one(self.chart.len()))
    }

    pub fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get().clone() + c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    fn empty_like(&self, other: Option<&Poly>) -> Poly {
        let (window, transform) = match other {
            Some(o) => (self.window.min(o.window), self.transform || o.transform),
            None => (self.window, self.transform),
        };
        Poly {
            chart: self.chart.clone(),
            terms: BTreeMap::new(),
            window,
            transform,
        }
    }

    fn check_chart(&self, other: &Poly) -> Result<()> {
        if same_chart(&self.chart, &other.chart) {
            Ok(())
        } else {
            Err(Error::ChartMismatch)
        }
    }

    pub fn checked_add(&self, other: &Poly) -> Result<Poly> {
        self.check_chart(other)?;
        let mut r = self.empty_like(Some(other));
        r.terms = self.terms.clone();
        for (m, c) in &other.terms {
            r.add_term(m.clone(), c.clone());
        }
        Ok(r)
    }

    pub fn checked_mul(&self, other: &Poly) -> Result<Poly> {
        self.check_chart(other)?;
        let mut r = self.empty_like(Some(other));
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                if let Some((m, neg)) = m1.mul(m2, &self.chart) {
                    let c = c1.clone() * c2.clone();
                    r.add_term(m, if neg { -c } else { c });
                }
            }
        }
        Ok(r)
    }

    pub fn scale(&self, c: &Coeff) -> Poly {
        let mut r = self.empty_like(None);
        if c.is_zero() {
            return r;
        }
        for (m, a) in &self.terms {
            r.terms.insert(m.clone(), a.clone() * c.clone());
        }
        r
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut r = Poly::one(&self.chart).with_window(self.window);
        r.transform = self.transform;
        for _ in 0..n {
            r = &r * self;
        }
        r
    }

    /// Parity if homogeneous; zero counts as even.
    pub fn parity(&self) -> Option<Parity> {
        let mut it = self.terms.keys().map(|m| m.parity(&self.chart));
        let first = it.next().unwrap_or(Parity::Even);
        if it.all(|p| p == first) {
            Some(first)
        } else {
            None
        }
    }

    /// `(even part, odd part)`.
    pub fn split_parity(&self) -> (Poly, Poly) {
        let mut even = self.empty_like(None);
        let mut odd = self.empty_like(None);
        for (m, c) in &self.terms {
            if m.parity(&self.chart).is_odd() {
                odd.terms.insert(m.clone(), c.clone());
            } else {
                even.terms.insert(m.clone(), c.clone());
            }
        }
        (even, odd)
    }

    /// Homogeneous parity components, skipping zero ones.
    pub fn parity_components(&self) -> Vec<(Parity, Poly)> {
        let (e, o) = self.split_parity();
        let mut v = Vec::new();
        if !e.is_zero() {
            v.push((Parity::Even, e));
        }
        if !o.is_zero() {
            v.push((Parity::Odd, o));
        }
        v
    }

    /// Left derivative with respect to the variable with index `k`.
    pub fn derivative(&self, k: usize) -> Poly {
        let mut r = self.empty_like(None);
        let odd = self.chart.is_odd(k);
        for (m, c) in &self.terms {
            let e = m.exps[k];
            if e == 0 {
                continue;
            }
            let mut nm = m.clone();
            nm.exps[k] -= 1;
            if odd {
                let before = (0..k)
                    .filter(|&j| self.chart.is_odd(j) && m.exps[j] > 0)
                    .count();
                let c = c.clone();
                r.add_term(nm, if before % 2 == 1 { -c } else { c });
            } else {
                r.add_term(nm, c.clone() * coeff(e as i64));
            }
        }
        r
    }

    pub fn left_derivative(&self, name: &str) -> Result<Poly> {
        Ok(self.derivative(self.chart.lookup(name)?))
    }

    /// Algebra morphism into `target`: variable `k` goes to `images[k]`.
    pub fn substitute_into(&self, target: &Arc<Chart>, images: &[Poly]) -> Result<Poly> {
        if images.len() != self.chart.len() {
            return Err(Error::WrongChart(
                "substitution map has wrong length".into(),
            ));
        }
        for (k, img) in images.iter().enumerate() {
            if !same_chart(img.chart(), target) {
                return Err(Error::ChartMismatch);
            }
            match img.parity() {
                Some(p) if p == self.chart.parity(k) || img.is_zero() => {}
                _ => {
                    return Err(Error::ParityMismatch(format!(
                        "image of `{}` must be {}",
                        self.chart.var(k).name,
                        self.chart.parity(k)
                    )))
                }
            }
        }
        let mut r = Poly::zero(target).with_window(self.window);
        r.transform = self.transform;
        let mut cache: HashMap<(usize, u16), Poly> = HashMap::new();
        for (m, c) in &self.terms {
            let mut t = Poly::hbar_pow(target, m.hbar).scale(c);
            t.transform = self.transform || m.hbar < 0;
            for (k, &e) in m.exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let f = cache
                    .entry((k, e))
                    .or_insert_with(|| images[k].pow(e as u32))
                    .clone();
                t = &t * &f;
                if t.is_zero() {
                    break;
                }
            }
            r = &r + &t;
        }
        Ok(r)
    }

    /// Substitution on the same chart; unmapped variables are kept.
    pub fn substitute(&self, map: &BTreeMap<usize, Poly>) -> Result<Poly> {
        let images: Vec<Poly> = (0..self.chart.len())
            .map(|k| {
                map.get(&k)
                    .cloned()
                    .unwrap_or_else(|| Poly::var(&self.chart, k))
            })
            .collect();
        self.substitute_into(&self.chart.clone(), &images)
    }

    /// Move to another chart by matching variable names.
    pub fn transport(&self, target: &Arc<Chart>) -> Result<Poly> {
        if same_chart(&self.chart, target) {
            return Ok(self.clone());
        }
        let map: Vec<Option<usize>> = self
            .chart
            .vars()
            .iter()
            .map(|v| target.index_of(&v.name))
            .collect();
        for (k, slot) in map.iter().enumerate() {
            if slot.is_none() && self.involves(k) {
                return Err(Error::UnknownVariable(self.chart.var(k).name.clone()));
            }
        }
        let map: Vec<usize> = map.into_iter().map(|s| s.unwrap_or(usize::MAX)).collect();
        let mut r = Poly::zero(target).with_window(self.window);
        r.transform = self.transform;
        for (m, c) in &self.terms {
            let used: Vec<usize> = (0..m.exps.len()).filter(|&k| m.exps[k] > 0).collect();
            let mut exps = vec![0u16; target.len()];
            for &k in &used {
                exps[map[k]] = m.exps[k];
            }
            // Reordering odd factors may cost a sign.
            let odd_targets: Vec<usize> = used
                .iter()
                .filter(|&&k| self.chart.is_odd(k))
                .map(|&k| map[k])
                .collect();
            let mut inversions = 0;
            for a in 0..odd_targets.len() {
                for b in a + 1..odd_targets.len() {
                    if odd_targets[a] > odd_targets[b] {
                        inversions += 1;
                    }
                }
            }
            let c = if inversions % 2 == 1 {
                -c.clone()
            } else {
                c.clone()
            };
            r.add_term(Monomial { exps, hbar: m.hbar }, c);
        }
        Ok(r)
    }

    /// Set the listed variables to zero.
    pub fn restrict_zero(&self, vars: &[usize]) -> Poly {
        let mut r = self.empty_like(None);
        for (m, c) in &self.terms {
            if vars.iter().all(|&k| m.exps[k] == 0) {
                r.terms.insert(m.clone(), c.clone());
            }
        }
        r
    }

    /// Berezin integral `∫ Dθ_1 ... Dθ_k`: innermost variable last.
    pub fn berezin_integral(&self, odd_vars: &[usize]) -> Result<Poly> {
        for &k in odd_vars {
            if !self.chart.is_odd(k) {
                return Err(Error::EvenIntegrationVariable(
                    self.chart.var(k).name.clone(),
                ));
            }
        }
        let mut r = self.clone();
        for &k in odd_vars.iter().rev() {
            r = r.derivative(k).restrict_zero(&[k]);
        }
        Ok(r)
    }

    /// Decomposition by a named weight (`"hbar"` is the hbar-degree).
    pub fn grade(&self, grading: &str) -> Result<BTreeMap<i64, Poly>> {
        if !self.chart.has_grading(grading) {
            return Err(Error::UnknownGrading(grading.to_string()));
        }
        let weights: Vec<i64> = self
            .chart
            .vars()
            .iter()
            .map(|v| v.weights.get(grading).copied().unwrap_or(0))
            .collect();
        let hw = if grading == "hbar" { 1 } else { 0 };
        let mut out: BTreeMap<i64, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let w: i64 = m
                .exps
                .iter()
                .zip(&weights)
                .map(|(&e, &w)| e as i64 * w)
                .sum::<i64>()
                + hw * m.hbar as i64;
            out.entry(w)
                .or_insert_with(|| self.empty_like(None))
                .terms
                .insert(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn mul_hbar(&self, k: i32) -> Poly {
        let mut r = self.empty_like(None);
        for (m, c) in &self.terms {
            let mut nm = m.clone();
            nm.hbar += k;
            r.terms.insert(nm, c.clone());
        }
        if k < 0 && r.terms.keys().any(|m| m.hbar < 0) {
            r.transform = true;
        }
        r
    }

    /// Exact division by `hbar^k`; fails if some term is not divisible.
    pub fn div_hbar(&self, k: u32) -> Result<Poly> {
        if !self.transform && self.terms.keys().any(|m| m.hbar < k as i32) {
            return Err(Error::NotDivisible(k));
        }
        Ok(self.mul_hbar(-(k as i32)))
    }

    /// Reduction modulo `hbar`.
    pub fn mod_hbar(&self) -> Result<Poly> {
        self.validate_operator_layer()?;
        Ok(self.hbar_coefficient(0))
    }

    /// Terms with exactly `hbar^k`, with `hbar` removed.
    pub fn hbar_coefficient(&self, k: i32) -> Poly {
        let mut r = self.empty_like(None);
        for (m, c) in &self.terms {
            if m.hbar == k {
                let mut nm = m.clone();
                nm.hbar = 0;
                r.terms.insert(nm, c.clone());
            }
        }
        r
    }

    pub fn min_hbar(&self) -> Option<i32> {
        self.terms.keys().map(|m| m.hbar).min()
    }

    pub fn max_hbar(&self) -> Option<i32> {
        self.terms.keys().map(|m| m.hbar).max()
    }

    pub fn validate_operator_layer(&self) -> Result<()> {
        if self.terms.keys().any(|m| m.hbar < 0) {
            Err(Error::NegativeHbar)
        } else {
            Ok(())
        }
    }

    /// Joint degree of a monomial in series variables and `hbar`.
    pub fn series_degree(&self, m: &Monomial) -> i64 {
        let d: i64 = m
            .exps
            .iter()
            .enumerate()
            .filter(|(k, _)| self.chart.var(*k).series)
            .map(|(_, &e)| e as i64)
            .sum();
        d + m.hbar as i64
    }

    pub fn truncate(&self) -> Poly {
        let mut r = self.empty_like(None);
        for (m, c) in &self.terms {
            if self.series_degree(m) <= self.window as i64 {
                r.terms.insert(m.clone(), c.clone());
            }
        }
        r
    }

    /// Largest exponent of variable `k`.
    pub fn degree_in_var(&self, k: usize) -> u16 {
        self.terms.keys().map(|m| m.exps[k]).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn involves(&self, k: usize) -> bool {
        self.terms.keys().any(|m| m.exps[k] > 0)
    }

    /// Exponential of an element whose powers eventually vanish, or whose
    /// powers leave the truncation window.
    pub fn exp(&self) -> Result<Poly> {
        let mut sum = Poly::one(&self.chart).with_window(self.window);
        sum.transform = self.transform;
        let mut term = sum.clone();
        let bound = self.window as usize + self.chart.len() + 2;
        for k in 1..=bound {
            term = (&term * self).scale(&coeff_frac(1, k as i64));
            if self.positive_series() {
                term = term.truncate();
            }
            if term.is_zero() {
                return Ok(sum);
            }
            sum = &sum + &term;
        }
        Err(Error::NotConvergent)
    }

    fn positive_series(&self) -> bool {
        !self.is_zero() && self.terms.keys().all(|m| self.series_degree(m) > 0)
    }

    /// Inverse of `c + n` with `c` a nonzero constant and `n` nilpotent
    /// (or of positive series degree).
    pub fn inverse(&self) -> Result<Poly> {
        let c = self.constant_term();
        if c.is_zero() {
            return Err(Error::NotInvertible(self.to_string()));
        }
        let cinv = Coeff::one() / c.clone();
        let mut n = self.clone();
        n.add_term(Monomial::one(self.chart.len()), -c);
        let x = n.scale(&(-cinv.clone()));
        let mut sum = Poly::one(&self.chart).with_window(self.window);
        sum.transform = self.transform;
        let mut term = sum.clone();
        let bound = self.window as usize + self.chart.len() + 2;
        for _ in 0..bound {
            term = &term * &x;
            if x.positive_series() {
                term = term.truncate();
            }
            if term.is_zero() {
                return Ok(sum.scale(&cinv));
            }
            sum = &sum + &term;
        }
        Err(Error::NotInvertible(self.to_string()))
    }
}

impl<'a> Add<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn add(self, rhs: &'a Poly) -> Poly {
        self.checked_add(rhs).expect("chart mismatch in addition")
    }
}

impl<'a> Sub<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn sub(self, rhs: &'a Poly) -> Poly {
        self.checked_add(&-rhs)
            .expect("chart mismatch in subtraction")
    }
}

impl<'a> Mul<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn mul(self, rhs: &'a Poly) -> Poly {
        self.checked_mul(rhs)
            .expect("chart mismatch in multiplication")
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&coeff(-1))
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(self, rhs: Poly) -> Poly {
        &self + &rhs
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, rhs: Poly) -> Poly {
        &self - &rhs
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        &self * &rhs
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

fn fmt_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Coefficient text usable by the expression parser.
pub fn format_coeff(c: &Coeff) -> String {
    let re = &c.re;
    let im = &c.im;
    if im.is_zero() {
        return fmt_rational(re);
    }
    let imag_part = if im.is_one() {
        "i".to_string()
    } else if (-im.clone()).is_one() {
        "-i".to_string()
    } else {
        format!("{}*i", fmt_rational(im))
    };
    if re.is_zero() {
        imag_part
    } else if im.is_negative() {
        format!(
            "({} - {})",
            fmt_rational(re),
            imag_part.trim_start_matches('-')
        )
    } else {
        format!("({} + {})", fmt_rational(re), imag_part)
    }
}

impl fmt::Display for SuperPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut ordered: Vec<(&Monomial, &Coeff)> = self.terms.iter().collect();
        ordered.sort_by(|a, b| {
            (a.0.degree() as i64 + a.0.hbar as i64)
                .cmp(&(b.0.degree() as i64 + b.0.hbar as i64))
                .then_with(|| b.0.cmp(a.0))
        });
        for (n, (m, c)) in ordered.into_iter().enumerate() {
            let mut factors = Vec::new();
            for (k, &e) in m.exps.iter().enumerate() {
                if e == 1 {
                    factors.push(self.chart.var(k).name.clone());
                } else if e > 1 {
                    factors.push(format!("{}^{}", self.chart.var(k).name, e));
                }
            }
            if m.hbar == 1 {
                factors.push("hbar".into());
            } else if m.hbar != 0 {
                factors.push(format!("hbar^{}", m.hbar));
            }
            let negative =
                c.im.is_zero() && c.re.is_negative() || c.re.is_zero() && c.im.is_negative();
            let mag = if negative { -c.clone() } else { c.clone() };
            let sep = match (n, negative) {
                (0, false) => "",
                (0, true) => "-",
                (_, false) => " + ",
                (_, true) => " - ",
            };
            f.write_str(sep)?;
            let cs = format_coeff(&mag);
            if factors.is_empty() {
                f.write_str(&cs)?;
            } else if mag.is_one() {
                f.write_str(&factors.join("*"))?;
            } else {
                write!(f, "{}*{}", cs, factors.join("*"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r11() -> Arc<Chart> {
        declare_chart(&[("x", Parity::Even), ("xi", Parity::Odd)]).unwrap()
    }

    fn pt2() -> Arc<Chart> {
        declare_chart(&[
            ("x1", Parity::Even),
            ("x2", Parity::Even),
            ("xs1", Parity::Odd),
            ("xs2", Parity::Odd),
        ])
        .unwrap()
    }

    #[test]
    fn chart_declaration() {
        let c = r11();
        assert_eq!(c.index_of("xi"), Some(1));
        assert_eq!(
            declare_chart(&[("x", Parity::Even), ("x", Parity::Odd)]),
            Err(Error::DuplicateName("x".into()))
        );
        assert!(matches!(
            declare_chart(&[("hbar", Parity::Even)]),
            Err(Error::ReservedName(_))
        ));
    }

    #[test]
    fn koszul_signs_in_products() {
        let c = pt2();
        let s1 = Poly::named(&c, "xs1").unwrap();
        let s2 = Poly::named(&c, "xs2").unwrap();
        let x = Poly::named(&c, "x1").unwrap();
        assert!((&s1 * &s1).is_zero());
        assert_eq!(&s2 * &s1, -(&s1 * &s2));
        assert_eq!((&x * &s1) * s2.clone(), &x * &(&s1 * &s2));
        assert_eq!((&s1 * &s2).to_string(), "xs1*xs2");
        assert_eq!((&s2 * &s1).to_string(), "-xs1*xs2");
    }

    #[test]
    fn left_derivatives() {
        let c = pt2();
        let s1 = Poly::named(&c, "xs1").unwrap();
        let s2 = Poly::named(&c, "xs2").unwrap();
        let x = Poly::named(&c, "x1").unwrap();
        let p = &s1 * &s2;
        assert_eq!(p.left_derivative("xs1").unwrap(), s2);
        assert_eq!(p.left_derivative("xs2").unwrap(), -&s1);
        let q = &(&x * &x) * &s1;
        assert_eq!(
            q.left_derivative("x1").unwrap(),
            (&x * &s1).scale(&coeff(2))
        );
    }

    #[test]
    fn substitution_examples() {
        let c = pt2();
        let s1 = Poly::named(&c, "xs1").unwrap();
        let s2 = Poly::named(&c, "xs2").unwrap();
        let p = &s1 * &s2;
        let mut m = BTreeMap::new();
        m.insert(2, Poly::zero(&c));
        assert!(p.substitute(&m).unwrap().is_zero());
        assert_eq!(p.substitute(&BTreeMap::new()).unwrap(), p);
        let mut bad = BTreeMap::new();
        bad.insert(2, Poly::named(&c, "x1").unwrap());
        assert!(matches!(p.substitute(&bad), Err(Error::ParityMismatch(_))));
    }

    #[test]
    fn berezin_rules() {
        let c = declare_chart(&[
            ("a", Parity::Even),
            ("xi1", Parity::Odd),
            ("xi2", Parity::Odd),
        ])
        .unwrap();
        let a = Poly::var(&c, 0);
        let x1 = Poly::var(&c, 1);
        let x2 = Poly::var(&c, 2);
        let b = Poly::int(&c, 5);
        assert_eq!((&a + &(&b * &x1)).berezin_integral(&[1]).unwrap(), b);
        assert!(a.berezin_integral(&[1]).unwrap().is_zero());
        assert!(matches!(
            a.berezin_integral(&[0]),
            Err(Error::EvenIntegrationVariable(_))
        ));
        // exp((i/hbar) xi1 xi2) = 1 + (i/hbar) xi1 xi2, and ∫Dxi1 Dxi2 xi1 xi2 = -1.
        let phase = (&x1 * &x2).scale(&imag(1)).mul_hbar(-1);
        let e = phase.exp().unwrap();
        let v = e.berezin_integral(&[1, 2]).unwrap();
        assert_eq!(v, Poly::hbar_pow(&c, -1).scale(&imag(-1)));
    }

    #[test]
    fn grading_decomposition() {
        let c = Chart::build(
            vec![
                GradedVariable::new("u1", Parity::Odd).with_weight("w", 1),
                GradedVariable::new("u2", Parity::Odd).with_weight("w", 1),
                GradedVariable::new("w1", Parity::Odd).with_weight("w", -1),
                GradedVariable::new("x", Parity::Even),
            ],
            ChartKind::Base,
        )
        .unwrap();
        let t = &(&Poly::var(&c, 0) * &Poly::var(&c, 1)) * &Poly::var(&c, 2);
        let g = t.grade("w").unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[&1], t);
        assert_eq!(Poly::int(&c, 3).grade("w").unwrap()[&0], Poly::int(&c, 3));
        let h = &Poly::hbar_pow(&c, 2) * &Poly::var(&c, 3);
        assert_eq!(h.grade("hbar").unwrap()[&2], h);
        assert!(t.grade("nope").is_err());
    }

    #[test]
    fn inverse_and_exp() {
        let c = r11();
        let xi = Poly::var(&c, 1);
        let x = Poly::var(&c, 0);
        let g = &(&Poly::int(&c, 2) + &(&x * &xi));
        let inv = g.inverse().unwrap();
        assert_eq!(&inv * g, Poly::one(&c));
        assert!(x.inverse().is_err());
        assert_eq!(xi.exp().unwrap(), &Poly::one(&c) + &xi);
    }

    #[test]
    fn transport_reorders_with_sign() {
        let a = declare_chart(&[("s", Parity::Odd), ("t", Parity::Odd)]).unwrap();
        let b = declare_chart(&[("t", Parity::Odd), ("s", Parity::Odd)]).unwrap();
        let p = &Poly::var(&a, 0) * &Poly::var(&a, 1);
        let q = p.transport(&b).unwrap();
        assert_eq!(q, -(&Poly::var(&b, 0) * &Poly::var(&b, 1)));
    }
}
