//! Normal-ordered formal ħ-differential operators.
//!
//! An operator on a chart `C` is stored as its full normal-ordered symbol on
//! `T*C`: a polynomial in which every momentum `p_a` stands for
//! `p̂_a = -iħ ∂/∂x^a` placed to the right of all coefficients. Because the
//! cotangent chart lists momenta after every other variable, canonical
//! monomials are already normal-ordered words.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{cotangent_chart, inner_chart, lift, lower, SuperManifold};
use crate::superalgebra::{
    coeff, imag, koszul, same_chart, Chart, ChartKind, Coeff, GradedVariable, Monomial, Parity,
    Poly, Role,
};

/// `-iħ` as a value on `chart`.
pub fn minus_i_hbar(chart: &Arc<Chart>) -> Poly {
    Poly::hbar_pow(chart, 1).scale(&imag(-1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct HbarOperator {
    phase: Arc<Chart>,
    symbol: Poly,
}

fn split_monomial(phase: &Chart, m: &Monomial) -> (Monomial, Monomial) {
    let mut coeff_part = m.exps().to_vec();
    let mut word = vec![0u16; m.exps().len()];
    for k in phase.momenta() {
        word[k] = coeff_part[k];
        coeff_part[k] = 0;
    }
    (Monomial::new(coeff_part, m.hbar()), Monomial::new(word, 0))
}

fn momentum_coordinate(phase: &Chart, j: usize) -> usize {
    match phase.var(j).role {
        Role::Momentum(k) => k,
        _ => unreachable!("not a momentum"),
    }
}

impl HbarOperator {
    /// Wrap a normal-ordered symbol on a cotangent chart.
    pub fn from_symbol(symbol: Poly) -> Result<HbarOperator> {
        inner_chart(symbol.chart())?;
        symbol.validate_operator_layer()?;
        Ok(HbarOperator {
            phase: symbol.chart().clone(),
            symbol,
        })
    }

    pub fn zero(phase: &Arc<Chart>) -> HbarOperator {
        HbarOperator {
            phase: phase.clone(),
            symbol: Poly::zero(phase),
        }
    }

    pub fn identity(phase: &Arc<Chart>) -> HbarOperator {
        HbarOperator {
            phase: phase.clone(),
            symbol: Poly::one(phase),
        }
    }

    /// Multiplication by a function of the inner chart.
    pub fn multiplication(phase: &Arc<Chart>, f: &Poly) -> Result<HbarOperator> {
        HbarOperator::from_symbol(lift(f, phase)?)
    }

    /// `p̂` for the coordinate with index `k` of the inner chart.
    pub fn momentum(phase: &Arc<Chart>, k: usize) -> Result<HbarOperator> {
        let j = phase
            .momentum_of(k)
            .ok_or_else(|| Error::WrongChart(format!("`{}` has no momentum", phase.var(k).name)))?;
        HbarOperator::from_symbol(Poly::var(phase, j))
    }

    pub fn phase(&self) -> &Arc<Chart> {
        &self.phase
    }

    pub fn inner(&self) -> &Arc<Chart> {
        inner_chart(&self.phase).expect("operators live on cotangent charts")
    }

    pub fn symbol(&self) -> &Poly {
        &self.symbol
    }

    pub fn is_zero(&self) -> bool {
        self.symbol.is_zero()
    }

    pub fn parity(&self) -> Option<Parity> {
        self.symbol.parity()
    }

    pub fn parity_components(&self) -> Vec<(Parity, HbarOperator)> {
        self.symbol
            .parity_components()
            .into_iter()
            .map(|(p, s)| (p, self.with_symbol(s)))
            .collect()
    }

    fn with_symbol(&self, symbol: Poly) -> HbarOperator {
        HbarOperator {
            phase: self.phase.clone(),
            symbol,
        }
    }

    fn check(&self, other: &HbarOperator) -> Result<()> {
        if same_chart(&self.phase, &other.phase) {
            Ok(())
        } else {
            Err(Error::ChartMismatch)
        }
    }

    pub fn scale(&self, c: &Coeff) -> HbarOperator {
        self.with_symbol(self.symbol.scale(c))
    }

    /// Left multiplication by a momentum-free value, given on the phase
    /// chart or on the inner chart.
    pub fn left_mul(&self, f: &Poly) -> Result<HbarOperator> {
        let lifted;
        let f = if same_chart(f.chart(), self.inner()) {
            lifted = lift(f, &self.phase)?;
            &lifted
        } else {
            f
        };
        for k in self.phase.momenta() {
            if f.involves(k) {
                return Err(Error::MomentumInArgument(self.phase.var(k).name.clone()));
            }
        }
        Ok(self.with_symbol(f.checked_mul(&self.symbol)?))
    }

    pub fn mul_hbar(&self, k: u32) -> HbarOperator {
        self.with_symbol(self.symbol.mul_hbar(k as i32))
    }

    pub fn div_hbar(&self, k: u32) -> Result<HbarOperator> {
        Ok(self.with_symbol(self.symbol.div_hbar(k)?))
    }

    /// Apply a momentum word (rightmost factor first) to `target`, given
    /// the action `step(k, Φ)` of a single momentum with coordinate `k`.
    fn word_action<F>(
        &self,
        word: &Monomial,
        target: &Poly,
        memo: &mut HashMap<Vec<u16>, Poly>,
        step: &F,
    ) -> Poly
    where
        F: Fn(usize, &Poly) -> Poly,
    {
        if let Some(v) = memo.get(word.exps()) {
            return v.clone();
        }
        let Some(j) = word.exps().iter().position(|&e| e > 0) else {
            return target.clone();
        };
        let mut rest = word.exps().to_vec();
        rest[j] -= 1;
        let inner = self.word_action(&Monomial::new(rest, 0), target, memo, step);
        let out = step(j, &inner);
        memo.insert(word.exps().to_vec(), out.clone());
        out
    }

    fn act<F>(&self, target: &Poly, step: F) -> Poly
    where
        F: Fn(usize, &Poly) -> Poly,
    {
        let mut memo = HashMap::new();
        let mut out =
            Poly::zero(&self.phase).with_window(self.symbol.window().min(target.window()));
        for (m, c) in self.symbol.terms() {
            let (cm, word) = split_monomial(&self.phase, m);
            let w = self.word_action(&word, target, &mut memo, &step);
            if w.is_zero() {
                continue;
            }
            let mut coef = Poly::zero(&self.phase);
            coef.add_term(cm, c.clone());
            out = &out + &(&coef * &w);
        }
        out
    }

    /// Operator product, normal-ordered with `[p̂_a, f] = -iħ ∂_a f`.
    pub fn compose(&self, other: &HbarOperator) -> Result<HbarOperator> {
        self.check(other)?;
        let phase = self.phase.clone();
        let mih = minus_i_hbar(&phase);
        let symbol = self.act(&other.symbol, |j, phi| {
            let k = momentum_coordinate(&phase, j);
            &(&Poly::var(&phase, j) * phi) + &(&mih * &phi.derivative(k))
        });
        Ok(self.with_symbol(symbol))
    }

    /// Graded commutator `AB - (-1)^{ÃB̃} BA`, summed over parity components.
    pub fn commutator(&self, other: &HbarOperator) -> Result<HbarOperator> {
        self.check(other)?;
        let mut out = HbarOperator::zero(&self.phase);
        for (pa, a) in self.parity_components() {
            for (pb, b) in other.parity_components() {
                let ab = a.compose(&b)?;
                let ba = b.compose(&a)?;
                out = &out + &ab;
                out = if koszul(pa, pb) {
                    &out + &ba
                } else {
                    &out - &ba
                };
            }
        }
        Ok(out)
    }

    pub fn square(&self) -> Result<HbarOperator> {
        self.compose(self)
    }

    /// Action on a momentum-free function of the inner chart.
    pub fn apply(&self, f: &Poly) -> Result<Poly> {
        let fl = lift(f, &self.phase)?;
        let phase = self.phase.clone();
        let mih = minus_i_hbar(&phase);
        let out = self.act(&fl, |j, g| {
            &mih * &g.derivative(momentum_coordinate(&phase, j))
        });
        lower(&out, &self.phase)
    }

    /// Same as [`apply`](Self::apply) but for a value already on the phase chart.
    pub fn apply_lifted(&self, f: &Poly) -> Result<Poly> {
        self.apply(&lower(f, &self.phase)?)
    }

    /// Symbol modulo ħ, a function on `T*C`.
    pub fn principal_symbol(&self) -> Poly {
        self.symbol.hbar_coefficient(0)
    }

    /// Components of fixed total degree (word length plus ħ-degree).
    pub fn total_degrees(&self) -> BTreeMap<u32, HbarOperator> {
        let momenta = self.phase.momenta();
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, c) in self.symbol.terms() {
            let n = m.degree_in(&momenta) + m.hbar() as u32;
            out.entry(n)
                .or_insert_with(|| Poly::zero(&self.phase))
                .add_term(m.clone(), c.clone());
        }
        out.into_iter()
            .map(|(n, s)| (n, self.with_symbol(s)))
            .collect()
    }

    pub fn total_degree_component(&self, n: u32) -> HbarOperator {
        self.total_degrees()
            .remove(&n)
            .unwrap_or_else(|| HbarOperator::zero(&self.phase))
    }

    /// Operator order: the largest momentum word length.
    pub fn order(&self) -> u32 {
        let momenta = self.phase.momenta();
        self.symbol
            .terms()
            .map(|(m, _)| m.degree_in(&momenta))
            .max()
            .unwrap_or(0)
    }

    /// `e^{-(i/ħ)X} L e^{(i/ħ)X}` for an even operator `X`, summed as the
    /// series `Σ (i/ħ)^k (-ad X)^k L / k!`, which must terminate.
    pub fn conjugate(&self, x: &HbarOperator) -> Result<HbarOperator> {
        self.check(x)?;
        if x.parity() != Some(Parity::Even) {
            return Err(Error::ParityMismatch(
                "conjugating exponent must be even".into(),
            ));
        }
        let mut sum = self.clone();
        let mut term = self.clone();
        let bound = self.symbol.window() as usize + self.phase.len() + 4;
        for k in 1..=bound {
            // [L, X] is divisible by ħ, so (i/ħ)[L, X] stays in the operator layer.
            let comm = term.commutator(x)?.div_hbar(1)?;
            term = comm.scale(&(imag(1) / coeff(k as i64)));
            if term.is_zero() {
                return Ok(sum);
            }
            sum = &sum + &term;
        }
        Err(Error::NotConvergent)
    }

    /// Conjugation by `e^{(i/ħ)f}` for an even function `f` of the inner chart.
    pub fn conjugate_by_function(&self, f: &Poly) -> Result<HbarOperator> {
        self.conjugate(&HbarOperator::multiplication(&self.phase, f)?)
    }
}

impl fmt::Display for HbarOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.symbol.fmt(f)
    }
}

impl<'a> Add<&'a HbarOperator> for &'a HbarOperator {
    type Output = HbarOperator;
    fn add(self, rhs: &'a HbarOperator) -> HbarOperator {
        self.with_symbol(&self.symbol + &rhs.symbol)
    }
}

impl<'a> Sub<&'a HbarOperator> for &'a HbarOperator {
    type Output = HbarOperator;
    fn sub(self, rhs: &'a HbarOperator) -> HbarOperator {
        self.with_symbol(&self.symbol - &rhs.symbol)
    }
}

impl Neg for &HbarOperator {
    type Output = HbarOperator;
    fn neg(self) -> HbarOperator {
        self.with_symbol(-&self.symbol)
    }
}

/// Coefficients of `e^{-(i/ħ)λg} L(f e^{(i/ħ)λg})`, indexed by
/// `(ħ-degree, λ-degree)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaExpansion {
    pub phase_function: Poly,
    pub series: BTreeMap<(i32, u32), Poly>,
}

/// Terms of one joint degree, keyed by `(ħ, λ)` exponents.
pub type Block = Vec<((i32, u32), Poly)>;

impl LambdaExpansion {
    /// Joint (ħ, λ)-degree blocks.
    pub fn blocks(&self) -> BTreeMap<i64, Block> {
        let mut out: BTreeMap<i64, Vec<_>> = BTreeMap::new();
        for (k, v) in &self.series {
            out.entry(k.0 as i64 + k.1 as i64)
                .or_default()
                .push((*k, v.clone()));
        }
        out
    }

    /// Recombine into `Σ ħ^a λ^b c_{ab}` on a chart carrying a `lambda` parameter.
    pub fn coefficient(&self, hbar: i32, lambda: u32) -> Option<&Poly> {
        self.series.get(&(hbar, lambda))
    }
}

/// Chart with an extra even parameter appended.
pub fn with_parameter(c: &Arc<Chart>, name: &str) -> Result<Arc<Chart>> {
    let mut vars = c.vars().to_vec();
    vars.push(GradedVariable::new(name, Parity::Even).role(Role::Parameter));
    Chart::build(vars, c.kind().clone())
}

/// `L(f e^{(i/ħ)λg})`, using `e^{-(i/ħ)λg} p̂_a e^{(i/ħ)λg} = p̂_a + λ ∂_a g`.
pub fn apply_exponential(l: &HbarOperator, f: &Poly, g: &Poly) -> Result<LambdaExpansion> {
    let inner = l.inner().clone();
    if !same_chart(f.chart(), &inner) || !same_chart(g.chart(), &inner) {
        return Err(Error::ChartMismatch);
    }
    if g.parity() != Some(Parity::Even) {
        return Err(Error::ParityMismatch("phase function must be even".into()));
    }
    let ext = with_parameter(&inner, "lambda")?;
    let phase = cotangent_chart(&ext)?;
    let lam = Poly::named(&phase, "lambda")?;
    let gl = g.transport(&phase)?;
    let symbol = l.symbol().transport(&phase)?;
    let lop = HbarOperator::from_symbol(symbol)?;
    // Twisted momenta as operators, then the word products in order.
    let twisted: BTreeMap<usize, HbarOperator> = phase
        .momenta()
        .into_iter()
        .map(|j| {
            let k = momentum_coordinate(&phase, j);
            let s = &Poly::var(&phase, j) + &(&lam * &gl.derivative(k));
            (j, HbarOperator::from_symbol(s).unwrap())
        })
        .collect();
    let mut conj = HbarOperator::zero(&phase);
    for (m, c) in lop.symbol().terms() {
        let (cm, word) = split_monomial(&phase, m);
        let mut op = HbarOperator::identity(&phase);
        for (j, &e) in word.exps().iter().enumerate() {
            for _ in 0..e {
                op = op.compose(&twisted[&j])?;
            }
        }
        let mut coef = Poly::zero(&phase);
        coef.add_term(cm, c.clone());
        conj = &conj + &op.left_mul(&coef)?;
    }
    let value = conj.apply(&f.transport(&ext)?)?;
    let li = ext.lookup("lambda")?;
    let mut series = BTreeMap::new();
    for (m, c) in value.terms() {
        let mut exps = m.exps().to_vec();
        let b = exps[li] as u32;
        exps[li] = 0;
        let mut t = Poly::zero(&ext);
        t.add_term(Monomial::new(exps, 0), c.clone());
        let entry = series
            .entry((m.hbar(), b))
            .or_insert_with(|| Poly::zero(&inner));
        *entry = &*entry + &t.transport(&inner)?;
    }
    Ok(LambdaExpansion {
        phase_function: g.clone(),
        series,
    })
}

fn forms_dim(m: &SuperManifold) -> usize {
    m.dim()
}

/// `-iħd = dx^a p̂_a` on forms.
pub fn de_rham(m: &SuperManifold) -> HbarOperator {
    HbarOperator::from_symbol(m.master_d()).unwrap()
}

/// `d` acting on a form.
pub fn d_form(omega: &Poly) -> Result<Poly> {
    let c = omega.chart();
    let n = match c.kind() {
        ChartKind::PiTangent { dim } => *dim,
        _ => return Err(Error::WrongChart("d acts on forms".into())),
    };
    let mut out = Poly::zero(c).with_window(omega.window());
    for a in 0..n {
        out = &out + &(&Poly::var(c, n + a) * &omega.derivative(a));
    }
    Ok(out)
}

/// `P̂ = P(x, -iħ ∂/∂dx)`.
pub fn hat(m: &SuperManifold, p: &Poly) -> Result<HbarOperator> {
    HbarOperator::from_symbol(m.p_star(p)?)
}

/// `P̂ω` through the Berezin kernel `e^{(i/ħ)(dx - dx')x*}`, normalized so
/// that `1̂ = id`. Only for purely even bases, where every integration
/// variable is odd.
pub fn hat_kernel(m: &SuperManifold, p: &Poly, omega: &Poly) -> Result<Poly> {
    let n = m.dim();
    if let Some(a) = (0..n).find(|&a| m.parity(a).is_odd()) {
        return Err(Error::EvenFiber(m.forms.var(n + a).name.clone()));
    }
    let mut vars: Vec<GradedVariable> = m.forms.vars()[..2 * n].to_vec();
    vars.extend(m.multivectors.vars()[n..2 * n].iter().cloned());
    for a in 0..n {
        let name = format!("{}'", m.forms.var(n + a).name);
        vars.push(GradedVariable::new(name, Parity::Odd));
    }
    let params: Vec<GradedVariable> = m.forms.vars()[2 * n..].to_vec();
    vars.extend(params);
    let big = Chart::build(vars, ChartKind::Base)?;
    let xs = |a: usize| Poly::var(&big, 2 * n + a);
    let dxp = |a: usize| Poly::var(&big, 3 * n + a);
    let mut exponent = Poly::zero(&big);
    for a in 0..n {
        let diff = &Poly::var(&big, n + a) - &dxp(a);
        exponent = &exponent + &(&diff * &xs(a));
    }
    let kernel = exponent
        .scale(&imag(1))
        .mul_hbar(-1)
        .into_transform()
        .exp()?;
    // P on (x, x*), ω on (x, dx').
    let pn: Vec<Poly> = (0..m.multivectors.len())
        .map(|k| {
            if k < n {
                Poly::var(&big, k)
            } else if k < 2 * n {
                xs(k - n)
            } else {
                Poly::var(&big, 2 * n + k)
            }
        })
        .collect();
    let on: Vec<Poly> = (0..m.forms.len())
        .map(|k| {
            if k < n {
                Poly::var(&big, k)
            } else if k < 2 * n {
                dxp(k - n)
            } else {
                Poly::var(&big, 2 * n + k)
            }
        })
        .collect();
    let integrate = |pv: &Poly, ov: &Poly| -> Result<Poly> {
        let integrand =
            &(&kernel * &pv.substitute_into(&big, &pn)?) * &ov.substitute_into(&big, &on)?;
        let vars: Vec<usize> = (2 * n..4 * n).collect();
        integrand.berezin_integral(&vars)
    };
    let unit = integrate(&Poly::one(&m.multivectors), &Poly::one(&m.forms))?;
    if unit.len() != 1 {
        return Err(Error::NotInvertible(unit.to_string()));
    }
    let (um, uc) = unit
        .terms()
        .next()
        .map(|(a, b)| (a.clone(), b.clone()))
        .unwrap();
    let norm = Poly::hbar_pow(&big, -um.hbar()).scale(&(coeff(1) / uc));
    let raw = &integrate(p, omega)? * &norm;
    let out = raw.transport(&m.forms)?;
    out.validate_operator_layer()?;
    Ok(out)
}

/// `-ħ²δ = (-1)^ã p̂_a π̂^a` on multivectors.
pub fn divergence(m: &SuperManifold) -> HbarOperator {
    let phase = &m.multivectors_phase;
    let n = forms_dim(m);
    let mut s = Poly::zero(phase);
    for a in 0..n {
        let t = &Poly::var(phase, phase.momentum_of(a).unwrap())
            * &Poly::var(phase, phase.momentum_of(n + a).unwrap());
        s = &s + &(if m.parity(a).is_odd() { -&t } else { t });
    }
    HbarOperator::from_symbol(s).unwrap()
}

/// `-ħ²δ` on multivector half-densities: no volume element is involved.
pub fn divergence_half(m: &SuperManifold) -> HbarOperator {
    divergence(m)
}

/// `-ħ²δ_ρ` with `δ_ρ T = (-1)^ã ρ⁻¹ ∂_a(ρ ∂T/∂x*_a)`.
pub fn divergence_rho(m: &SuperManifold, rho: &Poly) -> Result<HbarOperator> {
    if rho.parity() != Some(Parity::Even) {
        return Err(Error::ParityMismatch(
            "volume coefficient must be even".into(),
        ));
    }
    let rinv = rho.inverse()?;
    let phase = &m.multivectors_phase;
    let n = m.dim();
    let mut s = divergence(m).symbol().clone();
    for a in 0..n {
        let g = (&rinv * &rho.derivative(a)).transport(&m.base)?;
        let g = lift(&m.function_to_multivectors(&g)?, phase)?;
        let pi = Poly::var(phase, phase.momentum_of(n + a).unwrap());
        let t = &(&g * &minus_i_hbar(phase)) * &pi;
        s = &s + &(if m.parity(a).is_odd() { -&t } else { t });
    }
    HbarOperator::from_symbol(s)
}

/// `δ T = (-1)^ã ∂_a ∂T/∂x*_a`.
pub fn delta_mv(t: &Poly) -> Result<Poly> {
    let c = t.chart();
    let n = match c.kind() {
        ChartKind::PiCotangent { dim } => *dim,
        _ => return Err(Error::WrongChart("δ acts on multivectors".into())),
    };
    let mut out = Poly::zero(c).with_window(t.window());
    for a in 0..n {
        let v = t.derivative(n + a).derivative(a);
        out = &out + &(if c.is_odd(a) { -&v } else { v });
    }
    Ok(out)
}

/// `-iħX = X(v) p̂_v` for a vector field given by its values on the
/// coordinates of the inner chart.
pub fn vector_field_operator(phase: &Arc<Chart>, values: &[(usize, Poly)]) -> Result<HbarOperator> {
    let mut s = Poly::zero(phase);
    for (v, xv) in values {
        let j = phase
            .momentum_of(*v)
            .ok_or_else(|| Error::WrongChart("no momentum for vector field slot".into()))?;
        s = &s + &(&lift(xv, phase)? * &Poly::var(phase, j));
    }
    HbarOperator::from_symbol(s)
}

/// `-iħL_Q` on forms, where `Q = Q^a ∂_a` on the base:
/// `L_Q x^a = Q^a`, `L_Q dx^a = (-1)^Q̃ dQ^a`.
pub fn lie_derivative(m: &SuperManifold, q: &[Poly]) -> Result<HbarOperator> {
    let n = m.dim();
    if q.len() != n {
        return Err(Error::WrongChart("one component per coordinate".into()));
    }
    let mut parity = None;
    for (a, qa) in q.iter().enumerate() {
        if qa.is_zero() {
            continue;
        }
        let pa = qa
            .parity()
            .ok_or_else(|| Error::ParityMismatch("inhomogeneous vector field".into()))?
            + m.parity(a);
        if parity.is_some_and(|p| p != pa) {
            return Err(Error::ParityMismatch("inhomogeneous vector field".into()));
        }
        parity = Some(pa);
    }
    let odd = parity.is_some_and(|p| p.is_odd());
    let mut values = Vec::new();
    for (a, qa) in q.iter().enumerate() {
        let qf = m.function_to_forms(qa)?;
        let dq = d_form(&qf)?;
        values.push((a, qf));
        values.push((n + a, if odd { -dq } else { dq }));
    }
    vector_field_operator(&m.forms_phase, &values)
}

/// A polynomial coordinate map: `images[k]` expresses variable `k` of `to`
/// as a function on `from`.
#[derive(Clone, Debug)]
pub struct CoordinateMap {
    pub from: Arc<Chart>,
    pub to: Arc<Chart>,
    pub images: Vec<Poly>,
}

impl CoordinateMap {
    pub fn new(from: &Arc<Chart>, to: &Arc<Chart>, images: Vec<Poly>) -> Result<CoordinateMap> {
        if images.len() != to.len() {
            return Err(Error::WrongChart("one image per target variable".into()));
        }
        for (k, img) in images.iter().enumerate() {
            if !same_chart(img.chart(), from) {
                return Err(Error::ChartMismatch);
            }
            if img.hbar_coefficient(0) != *img {
                return Err(Error::NotInverse(
                    "coordinate maps must not depend on ħ".into(),
                ));
            }
            if !img.is_zero() && img.parity() != Some(to.parity(k)) {
                return Err(Error::ParityMismatch(format!(
                    "image of `{}`",
                    to.var(k).name
                )));
            }
        }
        Ok(CoordinateMap {
            from: from.clone(),
            to: to.clone(),
            images,
        })
    }

    /// Pull a function on `to` back to `from`.
    pub fn pull(&self, f: &Poly) -> Result<Poly> {
        f.substitute_into(&self.from, &self.images)
    }
}

fn check_round_trip(a: &CoordinateMap, b: &CoordinateMap, window: u32) -> Result<()> {
    // a: from X to Y, b: from Y to X; composing pulls Y-coordinates back to Y.
    for k in 0..a.to.len() {
        let y = Poly::var(&a.to, k);
        let back = b.pull(&a.pull(&y)?)?;
        let resid = &back - &y;
        if resid.terms().any(|(m, _)| m.degree() <= window) {
            return Err(Error::NotInverse(format!(
                "{} ↦ {}",
                a.to.var(k).name,
                back
            )));
        }
    }
    Ok(())
}

/// Rewrite an operator on `T*M` in new coordinates. `fwd` expresses the new
/// coordinates through the old ones, `inv` the old through the new; the two
/// must be inverse up to terms above the truncation window.
pub fn change_coordinates(
    l: &HbarOperator,
    fwd: &CoordinateMap,
    inv: &CoordinateMap,
) -> Result<HbarOperator> {
    let old = l.inner().clone();
    if !same_chart(&fwd.from, &old) || !same_chart(&inv.to, &old) || !same_chart(&fwd.to, &inv.from)
    {
        return Err(Error::ChartMismatch);
    }
    let window = l.symbol().window();
    check_round_trip(fwd, inv, window)?;
    check_round_trip(inv, fwd, window)?;
    let new = fwd.to.clone();
    let phase = cotangent_chart(&new)?;
    let mut images: HashMap<usize, HbarOperator> = HashMap::new();
    for a in old.coordinates() {
        let mut s = Poly::zero(&phase);
        for b in new.coordinates() {
            let jac = inv.pull(&fwd.images[b].derivative(a))?;
            s = &s + &(&lift(&jac, &phase)? * &Poly::var(&phase, phase.momentum_of(b).unwrap()));
        }
        images.insert(
            l.phase().momentum_of(a).unwrap(),
            HbarOperator::from_symbol(s)?,
        );
    }
    let mut out = HbarOperator::zero(&phase);
    for (m, c) in l.symbol().terms() {
        let (cm, word) = split_monomial(l.phase(), m);
        let mut coef = Poly::zero(l.phase());
        coef.add_term(Monomial::new(cm.exps().to_vec(), 0), c.clone());
        let coef = lift(&inv.pull(&lower(&coef, l.phase())?)?, &phase)?.mul_hbar(cm.hbar());
        let mut op = HbarOperator::identity(&phase);
        for (j, &e) in word.exps().iter().enumerate() {
            for _ in 0..e {
                op = op.compose(&images[&j])?;
            }
        }
        out = &out + &op.left_mul(&coef)?;
    }
    Ok(HbarOperator {
        symbol: out.symbol.with_window(window),
        phase,
    })
}
