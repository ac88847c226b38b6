//! Operators on a vector bundle `E` and on its dual `E*`: densities, the
//! fiberwise ħ-Fourier transform and pairing, the dual of an operator, and
//! quantum pullbacks defined by generating functions.
//!
//! Integral transforms are Berezin integrals, so they are only available for
//! purely odd fibers. The dual of an operator is computed algebraically from
//! the images of the generators and works for any fiber.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::{BigRational, One};

use crate::error::{Error, Result};
use crate::geometry::{bundle_charts, cotangent_chart, SuperManifold};
use crate::hbar_ops::HbarOperator;
use crate::superalgebra::{
    imag, same_chart, Chart, ChartKind, Coeff, GradedVariable, Parity, Poly,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BundleSide {
    E,
    Dual,
}

/// `E` and `E*` over the same base. Both charts list `base` coordinates,
/// then `rank` fiber coordinates (`u^i` on `E`, `w_i` on `E*`), then shared
/// parameters.
#[derive(Clone, Debug)]
pub struct BundlePair {
    pub base: usize,
    pub rank: usize,
    pub e: Arc<Chart>,
    pub e_dual: Arc<Chart>,
    pub phase: Arc<Chart>,
    pub phase_dual: Arc<Chart>,
    /// Base coordinates and parameters only.
    pub base_chart: Arc<Chart>,
    /// Base, `u`, `w`, parameters: where kernels live.
    joint: Arc<Chart>,
    /// `c ħ^k` with `F⁻¹ = c ħ^k ∫Dw e^{(i/ħ)uw}`, for odd fibers.
    inverse_norm: Option<(Coeff, i32)>,
}

impl BundlePair {
    pub fn new(
        e: &Arc<Chart>,
        e_dual: &Arc<Chart>,
        base: usize,
        rank: usize,
    ) -> Result<BundlePair> {
        if e.len() != e_dual.len() || e.len() < base + rank {
            return Err(Error::WrongChart(
                "bundle charts have different layouts".into(),
            ));
        }
        for k in 0..e.len() {
            let (a, b) = (e.var(k), e_dual.var(k));
            let fiber = (base..base + rank).contains(&k);
            if a.parity != b.parity || (!fiber && a.name != b.name) {
                return Err(Error::WrongChart(format!(
                    "`{}` and `{}` do not correspond",
                    a.name, b.name
                )));
            }
        }
        let mut bvars: Vec<GradedVariable> = e.vars()[..base].to_vec();
        bvars.extend(e.vars()[base + rank..].iter().cloned());
        let base_chart = Chart::build(bvars, ChartKind::Base)?;
        let mut jvars: Vec<GradedVariable> = e.vars()[..base + rank].to_vec();
        jvars.extend(e_dual.vars()[base..base + rank].iter().cloned());
        jvars.extend(e.vars()[base + rank..].iter().cloned());
        let joint = Chart::build(jvars, ChartKind::Base)?;
        let mut pair = BundlePair {
            base,
            rank,
            e: e.clone(),
            e_dual: e_dual.clone(),
            phase: cotangent_chart(e)?,
            phase_dual: cotangent_chart(e_dual)?,
            base_chart,
            joint,
            inverse_norm: None,
        };
        if pair.odd_fibers().is_ok() {
            pair.inverse_norm = Some(pair.compute_inverse_norm()?);
        }
        Ok(pair)
    }

    /// A trivial bundle with the given base coordinates and fiber parities.
    pub fn standard(base: &[(&str, Parity)], fiber: &[Parity]) -> Result<BundlePair> {
        let (e, d) = bundle_charts(base, fiber)?;
        BundlePair::new(&e, &d, base.len(), fiber.len())
    }

    /// `E = ΠTM` (forms) and `E* = ΠT*M` (multivectors).
    pub fn of_manifold(m: &SuperManifold) -> Result<BundlePair> {
        BundlePair::new(&m.forms, &m.multivectors, m.dim(), m.dim())
    }

    pub fn chart(&self, side: BundleSide) -> &Arc<Chart> {
        match side {
            BundleSide::E => &self.e,
            BundleSide::Dual => &self.e_dual,
        }
    }

    pub fn phase_of(&self, side: BundleSide) -> &Arc<Chart> {
        match side {
            BundleSide::E => &self.phase,
            BundleSide::Dual => &self.phase_dual,
        }
    }

    fn side_of_phase(&self, phase: &Arc<Chart>) -> Result<BundleSide> {
        if same_chart(phase, &self.phase) {
            Ok(BundleSide::E)
        } else if same_chart(phase, &self.phase_dual) {
            Ok(BundleSide::Dual)
        } else {
            Err(Error::ChartMismatch)
        }
    }

    /// Dimension `n|m` of the fiber.
    pub fn fiber_dim(&self) -> (usize, usize) {
        let odd = (0..self.rank)
            .filter(|&i| self.e.is_odd(self.base + i))
            .count();
        (self.rank - odd, odd)
    }

    fn odd_fibers(&self) -> Result<()> {
        match (0..self.rank).find(|&i| !self.e.is_odd(self.base + i)) {
            Some(i) => Err(Error::EvenFiber(self.e.var(self.base + i).name.clone())),
            None => Ok(()),
        }
    }

    fn u(&self, i: usize) -> Poly {
        Poly::var(&self.joint, self.base + i)
    }

    fn w(&self, i: usize) -> Poly {
        Poly::var(&self.joint, self.base + self.rank + i)
    }

    fn u_indices(&self) -> Vec<usize> {
        (self.base..self.base + self.rank).collect()
    }

    fn w_indices(&self) -> Vec<usize> {
        (self.base + self.rank..self.base + 2 * self.rank).collect()
    }

    /// `e^{s (i/ħ) u^i w_i}`.
    fn kernel(&self, s: i64) -> Result<Poly> {
        let mut uw = Poly::zero(&self.joint);
        for i in 0..self.rank {
            uw = &uw + &(&self.u(i) * &self.w(i));
        }
        uw.scale(&imag(s)).mul_hbar(-1).into_transform().exp()
    }

    fn raw_fourier(&self, f: &Poly) -> Result<Poly> {
        let integrand = &self.kernel(-1)? * &f.transport(&self.joint)?.into_transform();
        integrand.berezin_integral(&self.u_indices())
    }

    fn raw_inverse(&self, g: &Poly) -> Result<Poly> {
        let integrand = &self.kernel(1)? * &g.transport(&self.joint)?.into_transform();
        integrand.berezin_integral(&self.w_indices())
    }

    fn compute_inverse_norm(&self) -> Result<(Coeff, i32)> {
        let one = Poly::one(&self.joint).into_transform();
        let round = self.raw_inverse(&self.raw_fourier(&one)?)?;
        let mut terms = round.terms();
        match (terms.next(), terms.next()) {
            (Some((m, c)), None) if m.degree() == 0 => Ok((Coeff::one() / c.clone(), -m.hbar())),
            _ => Err(Error::NotInvertible(round.to_string())),
        }
    }
}

/// `f Dx^λ Du^μ` on `E`, or `g Dx^λ Dw^μ` on `E*`.
#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    pub side: BundleSide,
    pub value: Poly,
    pub lambda: BigRational,
    pub mu: BigRational,
}

impl Density {
    pub fn new(side: BundleSide, value: Poly, lambda: BigRational, mu: BigRational) -> Density {
        Density {
            side,
            value,
            lambda,
            mu,
        }
    }

    pub fn half(side: BundleSide, value: Poly) -> Density {
        let h = BigRational::new(1.into(), 2.into());
        Density::new(side, value, h.clone(), h)
    }

    /// Components by `w_E`: `#u + μ(n-m)` on `E`, `-#w - μ(n-m)` on `E*`.
    pub fn weights(&self, pair: &BundlePair) -> Result<BTreeMap<BigRational, Poly>> {
        if !same_chart(self.value.chart(), pair.chart(self.side)) {
            return Err(Error::ChartMismatch);
        }
        let (n, m) = pair.fiber_dim();
        let shift = &self.mu * BigRational::from_integer((n as i64 - m as i64).into());
        let mut out: BTreeMap<BigRational, Poly> = BTreeMap::new();
        for (mono, c) in self.value.terms() {
            let count: i64 = (pair.base..pair.base + pair.rank)
                .map(|k| mono.exp(k) as i64)
                .sum();
            let w = match self.side {
                BundleSide::E => BigRational::from_integer(count.into()) + &shift,
                BundleSide::Dual => BigRational::from_integer((-count).into()) - &shift,
            };
            let mut p = Poly::zero(self.value.chart());
            p.add_term(mono.clone(), c.clone());
            if self.value.is_transform() {
                p = p.into_transform();
            }
            let slot = out
                .entry(w)
                .or_insert_with(|| Poly::zero(self.value.chart()));
            *slot = &*slot + &p;
        }
        Ok(out)
    }
}

fn one_minus(q: &BigRational) -> BigRational {
    BigRational::one() - q
}

/// `F[f Dx^λ Du^μ] = (∫ Du e^{-(i/ħ)u^i w_i} f) Dx^λ Dw^{1-μ}`.
pub fn fiber_fourier(pair: &BundlePair, d: &Density) -> Result<Density> {
    pair.odd_fibers()?;
    if d.side != BundleSide::E || !same_chart(d.value.chart(), &pair.e) {
        return Err(Error::WrongChart("Fourier transform starts on E".into()));
    }
    let g = pair.raw_fourier(&d.value)?.transport(&pair.e_dual)?;
    Ok(Density::new(
        BundleSide::Dual,
        g,
        d.lambda.clone(),
        one_minus(&d.mu),
    ))
}

/// Inverse of [`fiber_fourier`].
pub fn inverse_fourier(pair: &BundlePair, d: &Density) -> Result<Density> {
    pair.odd_fibers()?;
    if d.side != BundleSide::Dual || !same_chart(d.value.chart(), &pair.e_dual) {
        return Err(Error::WrongChart("inverse transform starts on E*".into()));
    }
    let (c, h) = pair.inverse_norm.clone().expect("odd fibers have a norm");
    let f = pair.raw_inverse(&d.value)?.scale(&c).mul_hbar(h);
    Ok(Density::new(
        BundleSide::E,
        f.transport(&pair.e)?,
        d.lambda.clone(),
        one_minus(&d.mu),
    ))
}

/// `∫ Du Dw e^{-(i/ħ)u^i w_i} f g`, a function on the base.
pub fn pairing(pair: &BundlePair, f: &Density, g: &Density) -> Result<Poly> {
    pair.odd_fibers()?;
    if f.side != BundleSide::E || g.side != BundleSide::Dual {
        return Err(Error::WrongChart(
            "pairing takes a density on E and one on E*".into(),
        ));
    }
    if &f.lambda + &g.lambda != BigRational::one() || f.mu != g.mu {
        return Err(Error::WeightMismatch(format!(
            "({}, {}) cannot be paired with ({}, {})",
            f.lambda, f.mu, g.lambda, g.mu
        )));
    }
    let fj = f.value.transport(&pair.joint)?.into_transform();
    let gj = g.value.transport(&pair.joint)?.into_transform();
    let integrand = &(&pair.kernel(-1)? * &fj) * &gj;
    let mut vars = pair.u_indices();
    vars.extend(pair.w_indices());
    integrand
        .berezin_integral(&vars)?
        .transport(&pair.base_chart)
}

/// Generator images under `L ↦ L*` from the operators on `from` to those on
/// `to`: `p̂_a ↦ -p̂_a`, `p̂_i ↦ w_i`, `u^i ↦ (-1)^ĩ p̂^i`, `f(x) ↦ f(x)`.
fn generator_images(
    pair: &BundlePair,
    from: &Arc<Chart>,
    to: &Arc<Chart>,
) -> Result<Vec<HbarOperator>> {
    let inner_len = pair.e.len();
    let mut out = Vec::with_capacity(from.len());
    for k in 0..from.len() {
        let img = if k < inner_len {
            if (pair.base..pair.base + pair.rank).contains(&k) {
                let p = HbarOperator::momentum(to, k)?;
                if from.is_odd(k) {
                    -&p
                } else {
                    p
                }
            } else {
                HbarOperator::from_symbol(Poly::var(to, k))?
            }
        } else {
            let c = (0..inner_len)
                .find(|&j| from.momentum_of(j) == Some(k))
                .expect("every momentum has a coordinate");
            if (pair.base..pair.base + pair.rank).contains(&c) {
                HbarOperator::from_symbol(Poly::var(to, c))?
            } else {
                -&HbarOperator::momentum(to, c)?
            }
        };
        out.push(img);
    }
    Ok(out)
}

fn dual_between(pair: &BundlePair, l: &HbarOperator, to: &Arc<Chart>) -> Result<HbarOperator> {
    let from = l.phase().clone();
    let gens = generator_images(pair, &from, to)?;
    let mut out = HbarOperator::zero(to);
    for (m, c) in l.symbol().terms() {
        let mut word = Vec::new();
        for k in 0..from.len() {
            for _ in 0..m.exp(k) {
                word.push(k);
            }
        }
        let odd = word.iter().filter(|&&k| from.is_odd(k)).count();
        let mut acc = HbarOperator::identity(to);
        for &k in word.iter().rev() {
            acc = acc.compose(&gens[k])?;
        }
        let mut c = c.clone();
        if (odd * odd.saturating_sub(1) / 2) % 2 == 1 {
            c = -c;
        }
        let h = m.hbar();
        if h < 0 {
            return Err(Error::NegativeHbar);
        }
        out = &out + &acc.scale(&c).mul_hbar(h as u32);
    }
    Ok(out)
}

/// The dual operator `L*`, extended anti-multiplicatively from the generator
/// images: `(L₁L₂)* = (-1)^{L̃₁L̃₂} L₂* L₁*`. An operator on `E` goes to one on
/// `E*` and vice versa.
pub fn dual_operator(pair: &BundlePair, l: &HbarOperator) -> Result<HbarOperator> {
    let side = pair.side_of_phase(l.phase())?;
    let to = match side {
        BundleSide::E => pair.phase_dual.clone(),
        BundleSide::Dual => pair.phase.clone(),
    };
    dual_between(pair, l, &to)
}

/// `L*_ρ = ρ⁻¹ ∘ L* ∘ ρ` for a volume coefficient `ρ(x)` on the base.
pub fn dual_operator_rho(pair: &BundlePair, l: &HbarOperator, rho: &Poly) -> Result<HbarOperator> {
    if rho.parity() != Some(Parity::Even) {
        return Err(Error::ParityMismatch(
            "volume coefficient must be even".into(),
        ));
    }
    let dual = dual_operator(pair, l)?;
    let inner = dual.inner().clone();
    let r = rho.transport(&inner)?;
    let rinv = r.inverse()?;
    let phase = dual.phase().clone();
    HbarOperator::multiplication(&phase, &rinv)?
        .compose(&dual)?
        .compose(&HbarOperator::multiplication(&phase, &r)?)
}

/// Components of `L` by `(deg, deg*)`: on `E`, `deg_E = #p̂_a + #p̂_i + #ħ`
/// and `deg*_E = #p̂_a + #u + #ħ`; on `E*` the same with `w` and its
/// momenta in place of `u` and `p̂_i`.
pub fn bigrading(
    pair: &BundlePair,
    l: &HbarOperator,
) -> Result<BTreeMap<(u32, u32), HbarOperator>> {
    pair.side_of_phase(l.phase())?;
    let phase = l.phase();
    let fiber = pair.base..pair.base + pair.rank;
    let mut base_p = Vec::new();
    let mut fiber_p = Vec::new();
    for k in 0..pair.e.len() {
        if let Some(p) = phase.momentum_of(k) {
            if fiber.contains(&k) {
                fiber_p.push(p);
            } else {
                base_p.push(p);
            }
        }
    }
    let mut out: BTreeMap<(u32, u32), Poly> = BTreeMap::new();
    for (m, c) in l.symbol().terms() {
        let h = m.hbar().max(0) as u32;
        let pa: u32 = base_p.iter().map(|&k| m.exp(k) as u32).sum();
        let pf: u32 = fiber_p.iter().map(|&k| m.exp(k) as u32).sum();
        let uf: u32 = fiber.clone().map(|k| m.exp(k) as u32).sum();
        let slot = out
            .entry((pa + pf + h, pa + uf + h))
            .or_insert_with(|| Poly::zero(phase));
        let mut t = Poly::zero(phase);
        t.add_term(m.clone(), c.clone());
        *slot = &*slot + &t;
    }
    out.into_iter()
        .map(|(k, s)| Ok((k, HbarOperator::from_symbol(s)?)))
        .collect()
}

/// Charts for quantum pullbacks between `E₁` (fiber `ua`, dual `wa`) and `E₂`
/// (fiber `ub`, dual `wb`) over a common base; all fibers odd.
#[derive(Clone, Debug)]
pub struct PullbackCharts {
    pub base: usize,
    pub r1: usize,
    pub r2: usize,
    /// Base, `ua`, `ub`, `wa`, `wb`.
    pub all: Arc<Chart>,
    pub e1: Arc<Chart>,
    pub e2: Arc<Chart>,
    pub e1_dual: Arc<Chart>,
    pub e2_dual: Arc<Chart>,
}

impl PullbackCharts {
    pub fn new(base: &[(&str, Parity)], r1: usize, r2: usize) -> Result<PullbackCharts> {
        let bv: Vec<GradedVariable> = base
            .iter()
            .map(|(n, p)| GradedVariable::new(*n, *p))
            .collect();
        let fib = |prefix: &str, r: usize, w: i64| -> Vec<GradedVariable> {
            (1..=r)
                .map(|i| {
                    GradedVariable::new(format!("{prefix}{i}"), Parity::Odd).with_weight("wE", w)
                })
                .collect()
        };
        let chart = |parts: &[Vec<GradedVariable>]| -> Result<Arc<Chart>> {
            let mut v = bv.clone();
            for p in parts {
                v.extend(p.iter().cloned());
            }
            Chart::build(v, ChartKind::Base)
        };
        let (ua, ub, wa, wb) = (
            fib("ua", r1, 1),
            fib("ub", r2, 1),
            fib("wa", r1, -1),
            fib("wb", r2, -1),
        );
        Ok(PullbackCharts {
            base: base.len(),
            r1,
            r2,
            all: chart(&[ua.clone(), ub.clone(), wa.clone(), wb.clone()])?,
            e1: chart(&[ua])?,
            e2: chart(&[ub])?,
            e1_dual: chart(&[wa])?,
            e2_dual: chart(&[wb])?,
        })
    }

    fn ua(&self, i: usize) -> usize {
        self.base + i
    }

    fn ub(&self, a: usize) -> usize {
        self.base + self.r1 + a
    }

    fn wa(&self, i: usize) -> usize {
        self.base + self.r1 + self.r2 + i
    }

    fn wb(&self, a: usize) -> usize {
        self.base + 2 * self.r1 + self.r2 + a
    }

    fn var(&self, k: usize) -> Poly {
        Poly::var(&self.all, k)
    }

    /// `S = ua^i Φ_i^α(x) wb_α`, with `phi[i][α]` given on the base of `E₁`.
    pub fn linear_generating_function(&self, phi: &[Vec<Poly>]) -> Result<Poly> {
        let mut s = Poly::zero(&self.all);
        for (i, row) in phi.iter().enumerate().take(self.r1) {
            for (a, f) in row.iter().enumerate().take(self.r2) {
                let f = f.transport(&self.all)?;
                s = &s + &(&(&self.var(self.ua(i)) * &f) * &self.var(self.wb(a)));
            }
        }
        Ok(s)
    }

    fn pairing_term(
        &self,
        us: impl Fn(usize) -> usize,
        ws: impl Fn(usize) -> usize,
        r: usize,
    ) -> Poly {
        let mut out = Poly::zero(&self.all);
        for i in 0..r {
            out = &out + &(&self.var(us(i)) * &self.var(ws(i)));
        }
        out
    }

    fn oscillating(&self, phase: &Poly) -> Result<Poly> {
        phase.scale(&imag(1)).mul_hbar(-1).into_transform().exp()
    }
}

fn check_generating(pc: &PullbackCharts, s: &Poly) -> Result<()> {
    if !same_chart(s.chart(), &pc.all) {
        return Err(Error::ChartMismatch);
    }
    if !s.is_zero() && s.parity() != Some(Parity::Even) {
        return Err(Error::ParityMismatch(
            "generating function must be even".into(),
        ));
    }
    for k in (0..pc.r2)
        .map(|a| pc.ub(a))
        .chain((0..pc.r1).map(|i| pc.wa(i)))
    {
        if s.involves(k) {
            return Err(Error::WrongChart("S depends only on (x, ua, wb)".into()));
        }
    }
    Ok(())
}

fn pullback_raw(pc: &PullbackCharts, s: &Poly, f2: &Poly) -> Result<Poly> {
    let uw = pc.pairing_term(|a| pc.ub(a), |a| pc.wb(a), pc.r2);
    let mut vars: Vec<usize> = (0..pc.r2).map(|a| pc.ub(a)).collect();
    vars.extend((0..pc.r2).map(|a| pc.wb(a)));
    let k = pc.oscillating(&(s - &uw))?;
    (&k * &f2.transport(&pc.all)?.into_transform()).berezin_integral(&vars)
}

fn dual_pullback_raw(pc: &PullbackCharts, s: &Poly, g1: &Poly) -> Result<Poly> {
    let uw = pc.pairing_term(|i| pc.ua(i), |i| pc.wa(i), pc.r1);
    let mut vars: Vec<usize> = (0..pc.r1).map(|i| pc.wa(i)).collect();
    vars.extend((0..pc.r1).map(|i| pc.ua(i)));
    let k = pc.oscillating(&(s - &uw))?;
    (&k * &g1.transport(&pc.all)?.into_transform()).berezin_integral(&vars)
}

/// The constant in `D̄w` for rank `r`: the transform with `S = ua·wb` must
/// send `1` to `1`.
fn measure_norm(r: usize, dual: bool) -> Result<Poly> {
    let pc = PullbackCharts::new(&[], r, r)?;
    let mut id = Poly::zero(&pc.all);
    for i in 0..r {
        id = &id + &(&pc.var(pc.ua(i)) * &pc.var(pc.wb(i)));
    }
    let one = Poly::one(&pc.all);
    let unit = if dual {
        dual_pullback_raw(&pc, &id, &one)?
    } else {
        pullback_raw(&pc, &id, &one)?
    };
    let mut terms = unit.terms();
    match (terms.next(), terms.next()) {
        (Some((m, c)), None) if m.degree() == 0 => Ok(Poly::one(&pc.all)
            .scale(&(Coeff::one() / c.clone()))
            .mul_hbar(-m.hbar())),
        _ => Err(Error::NotInvertible(unit.to_string())),
    }
}

fn normalize(raw: Poly, norm: &Poly) -> Poly {
    let (m, c) = norm.terms().next().expect("nonzero norm");
    raw.scale(c).mul_hbar(m.hbar())
}

/// `f₁(x, ua) = ∫ Dub D̄wb e^{(i/ħ)(S(ua|wb) - ub·wb)} f₂(x, ub)`, with `D̄wb`
/// normalized so that `S = ua·wb` (equal ranks) gives the identity.
pub fn quantum_pullback(pc: &PullbackCharts, s: &Poly, f2: &Poly) -> Result<Poly> {
    check_generating(pc, s)?;
    let raw = pullback_raw(pc, s, f2)?;
    normalize(raw, &measure_norm(pc.r2, false)?).transport(&pc.e1)
}

/// `g₂(x, wb) = ∫ Dwa D̄ua e^{(i/ħ)(S*(wb|ua) - ua·wa)} g₁(x, wa)` with
/// `S*(wb|ua) = S(ua|wb)`.
pub fn dual_quantum_pullback(pc: &PullbackCharts, s: &Poly, g1: &Poly) -> Result<Poly> {
    check_generating(pc, s)?;
    let raw = dual_pullback_raw(pc, s, g1)?;
    normalize(raw, &measure_norm(pc.r1, true)?).transport(&pc.e2_dual)
}

/// `∫ Du Dw e^{-(i/ħ)u·w} f g` on `E₁` (`first = true`) or on `E₂`.
pub fn pullback_pairing(pc: &PullbackCharts, first: bool, f: &Poly, g: &Poly) -> Result<Poly> {
    let (us, ws): (Vec<usize>, Vec<usize>) = if first {
        (
            (0..pc.r1).map(|i| pc.ua(i)).collect(),
            (0..pc.r1).map(|i| pc.wa(i)).collect(),
        )
    } else {
        (
            (0..pc.r2).map(|a| pc.ub(a)).collect(),
            (0..pc.r2).map(|a| pc.wb(a)).collect(),
        )
    };
    let mut uw = Poly::zero(&pc.all);
    for (u, w) in us.iter().zip(&ws) {
        uw = &uw + &(&pc.var(*u) * &pc.var(*w));
    }
    let k = pc.oscillating(&-&uw)?;
    let integrand =
        &(&k * &f.transport(&pc.all)?.into_transform()) * &g.transport(&pc.all)?.into_transform();
    let mut vars = us;
    vars.extend(ws);
    integrand.berezin_integral(&vars)
}

/// Pullback of `f₂(x, ub)` by `ub^α = ua^i Φ_i^α`.
pub fn linear_pullback(pc: &PullbackCharts, phi: &[Vec<Poly>], f2: &Poly) -> Result<Poly> {
    let images: Vec<Poly> = (0..pc.e2.len())
        .map(|k| -> Result<Poly> {
            if k < pc.base {
                return Ok(Poly::var(&pc.e1, k));
            }
            let a = k - pc.base;
            let mut img = Poly::zero(&pc.e1);
            for i in 0..pc.r1 {
                let f = phi[i][a].transport(&pc.e1)?;
                img = &img + &(&Poly::var(&pc.e1, pc.base + i) * &f);
            }
            Ok(img)
        })
        .collect::<Result<_>>()?;
    f2.substitute_into(&pc.e1, &images)
}

/// Pullback of `g₁(x, wa)` by the dual morphism `wa_i = Φ_i^α wb_α`.
pub fn dual_linear_pullback(pc: &PullbackCharts, phi: &[Vec<Poly>], g1: &Poly) -> Result<Poly> {
    let images: Vec<Poly> = (0..pc.e1_dual.len())
        .map(|k| -> Result<Poly> {
            if k < pc.base {
                return Ok(Poly::var(&pc.e2_dual, k));
            }
            let i = k - pc.base;
            let mut img = Poly::zero(&pc.e2_dual);
            for a in 0..pc.r2 {
                let f = phi[i][a].transport(&pc.e2_dual)?;
                img = &img + &(&f * &Poly::var(&pc.e2_dual, pc.base + a));
            }
            Ok(img)
        })
        .collect::<Result<_>>()?;
    g1.substitute_into(&pc.e2_dual, &images)
}
