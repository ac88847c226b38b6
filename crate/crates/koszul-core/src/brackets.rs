//! Brackets generated by operators and Hamiltonians, and checkers for the
//! identities they satisfy.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{canonical_poisson, lift, restrict_to_base};
use crate::hbar_ops::{d_form, HbarOperator};
use crate::random::{self, Shape};
use crate::report::Report;
use crate::superalgebra::{coeff, i_pow, imag, same_chart, Chart, ChartKind, Parity, Poly, Role};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Quantum,
    Classical,
}

fn nested_commutator(l: &HbarOperator, args: &[Poly]) -> Result<HbarOperator> {
    let mut acc = l.clone();
    for f in args {
        let m = HbarOperator::multiplication(l.phase(), f)?;
        acc = acc.commutator(&m)?;
    }
    Ok(acc)
}

/// `(-iħ)^{-n} [...[L, f_1], ..., f_n](1)`.
pub fn quantum_bracket(l: &HbarOperator, args: &[Poly]) -> Result<Poly> {
    let n = args.len() as u32;
    let c = nested_commutator(l, args)?.div_hbar(n)?.scale(&i_pow(n));
    c.apply(&Poly::one(l.inner()))
}

/// The quantum bracket reduced modulo ħ.
pub fn classical_bracket(l: &HbarOperator, args: &[Poly]) -> Result<Poly> {
    quantum_bracket(l, args)?.mod_hbar()
}

pub fn bracket(l: &HbarOperator, args: &[Poly], mode: Mode) -> Result<Poly> {
    match mode {
        Mode::Quantum => quantum_bracket(l, args),
        Mode::Classical => classical_bracket(l, args),
    }
}

/// `{...{H, f_1}, ..., f_n}` with the momenta set to zero.
pub fn derived_bracket(h: &Poly, args: &[Poly]) -> Result<Poly> {
    let phase = h.chart().clone();
    let mut acc = h.clone();
    for f in args {
        acc = canonical_poisson(&acc, &lift(f, &phase)?)?;
    }
    restrict_to_base(&acc, &phase)
}

/// An operator acting on a rank-one module with a chosen invertible
/// generator `σ`: `L_σ(f) = σ⁻¹ L(σ f)`.
#[derive(Clone, Debug)]
pub struct TwistedOperator {
    pub l: HbarOperator,
    pub sigma: Poly,
    sigma_inv: Poly,
}

impl TwistedOperator {
    pub fn new(l: HbarOperator, sigma: Poly) -> Result<TwistedOperator> {
        if !same_chart(sigma.chart(), l.inner()) {
            return Err(Error::ChartMismatch);
        }
        if sigma.parity() != Some(Parity::Even) {
            return Err(Error::ParityMismatch("σ must be even".into()));
        }
        let sigma_inv = sigma.inverse()?;
        Ok(TwistedOperator {
            l,
            sigma,
            sigma_inv,
        })
    }

    /// `σ⁻¹ ∘ L ∘ σ` as an operator.
    pub fn operator(&self) -> Result<HbarOperator> {
        let phase = self.l.phase();
        let s = HbarOperator::multiplication(phase, &self.sigma)?;
        let si = HbarOperator::multiplication(phase, &self.sigma_inv)?;
        si.compose(&self.l)?.compose(&s)
    }

    /// `σ⁻¹ (-iħ)^{-n} [...[L, f_1], ..., f_n](σ)`.
    pub fn bracket(&self, args: &[Poly], mode: Mode) -> Result<Poly> {
        let n = args.len() as u32;
        let c = nested_commutator(&self.l, args)?
            .div_hbar(n)?
            .scale(&i_pow(n));
        let q = &self.sigma_inv * &c.apply(&self.sigma)?;
        match mode {
            Mode::Quantum => Ok(q),
            Mode::Classical => q.mod_hbar(),
        }
    }
}

/// Expands an `n`-ary odd bracket that is graded symmetric in its arguments
/// and a derivation in each slot, given its values on tuples of generators.
///
/// Generators are the chart variables with role `Coordinate`; ħ, constants
/// and parameters are scalars. `table` receives chart indices in slot order.
pub fn multiderivation<F>(args: &[Poly], table: &F) -> Result<Poly>
where
    F: Fn(&[usize]) -> Result<Poly>,
{
    let chart = match args.first() {
        Some(a) => a.chart().clone(),
        None => return table(&[]),
    };
    // Multilinear: split every slot into parity components first.
    let mut tuples: Vec<Vec<Poly>> = vec![Vec::new()];
    for a in args {
        let comps = a.parity_components();
        let mut next = Vec::new();
        for t in &tuples {
            for (_, c) in &comps {
                let mut t2 = t.clone();
                t2.push(c.clone());
                next.push(t2);
            }
        }
        tuples = next;
    }
    let mut out = Poly::zero(&chart);
    for t in tuples {
        out = &out + &expand(&chart, &t, table)?;
    }
    Ok(out)
}

fn single_generator(chart: &Chart, a: &Poly) -> Option<usize> {
    if a.len() != 1 {
        return None;
    }
    let (m, c) = a.terms().next()?;
    if *c != coeff(1) || m.hbar() != 0 || m.degree() != 1 {
        return None;
    }
    let k = m.exps().iter().position(|&e| e == 1)?;
    (chart.var(k).role == Role::Coordinate).then_some(k)
}

fn expand<F>(chart: &Arc<Chart>, args: &[Poly], table: &F) -> Result<Poly>
where
    F: Fn(&[usize]) -> Result<Poly>,
{
    if args.iter().any(|a| a.is_zero()) {
        return Ok(Poly::zero(chart));
    }
    let gens: Vec<Option<usize>> = args.iter().map(|a| single_generator(chart, a)).collect();
    let k = match gens.iter().position(|g| g.is_none()) {
        None => {
            let idx: Vec<usize> = gens.into_iter().map(|g| g.unwrap()).collect();
            return table(&idx);
        }
        Some(k) => k,
    };
    let par = |p: &Poly| p.parity().unwrap_or(Parity::Even);
    let slot_parity = par(&args[k]);
    let others: Vec<Poly> = args
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != k)
        .map(|(_, a)| a.clone())
        .collect();
    let after: u32 = args[k + 1..].iter().map(|a| par(a).bit()).sum();
    let others_parity: u32 = others.iter().map(|a| par(a).bit()).sum();
    let move_sign = slot_parity.is_odd() && after % 2 == 1;

    let mut out = Poly::zero(chart);
    for (m, c) in args[k].terms() {
        let mut scalar = vec![0u16; chart.len()];
        let mut word = m.exps().to_vec();
        for (j, e) in word.iter_mut().enumerate() {
            if chart.var(j).role != Role::Coordinate {
                scalar[j] = *e;
                *e = 0;
            }
        }
        let Some(first) = word.iter().position(|&e| e > 0) else {
            continue;
        };
        let s = Poly::monomial(chart, &scalar, m.hbar(), c.clone());
        let sigma = Poly::var(chart, first);
        let mut rest = word.clone();
        rest[first] -= 1;
        let tau = Poly::monomial(chart, &rest, 0, coeff(1));
        let mut with_sigma = others.clone();
        with_sigma.push(sigma.clone());
        let mut with_tau = others.clone();
        with_tau.push(tau.clone());
        let left = &expand(chart, &with_sigma, table)? * &tau;
        let mut right = &sigma * &expand(chart, &with_tau, table)?;
        if chart.is_odd(first) && (others_parity + 1) % 2 == 1 {
            right = -right;
        }
        let mut term = &s * &(&left + &right);
        if move_sign {
            term = -term;
        }
        out = &out + &term;
    }
    Ok(out)
}

/// `{f_1..f_{n-1}, fg} - ({..., f}g + (-1)^ε f{..., g} + (-iħ){..., f, g})`
/// with `ε = (L̃ + f̃_1 + ... + f̃_{n-1}) f̃`; zero when the rule holds.
pub fn quantum_leibniz_defect(l: &HbarOperator, head: &[Poly], f: &Poly, g: &Poly) -> Result<Poly> {
    let bit = |p: &Poly| p.parity().unwrap_or(Parity::Even).bit();
    let with = |x: &Poly| {
        let mut v = head.to_vec();
        v.push(x.clone());
        v
    };
    let lhs = quantum_bracket(l, &with(&(f * g)))?;
    let a = &quantum_bracket(l, &with(f))? * g;
    let mut b = f * &quantum_bracket(l, &with(g))?;
    let eps =
        (l.parity().unwrap_or(Parity::Even).bit() + head.iter().map(bit).sum::<u32>()) * bit(f);
    if eps % 2 == 1 {
        b = -b;
    }
    let mut both = with(f);
    both.push(g.clone());
    let c = quantum_bracket(l, &both)?.mul_hbar(1).scale(&imag(-1));
    Ok(&lhs - &(&(&a + &b) + &c))
}

/// Quantum Leibniz rule in the last slot of the `n`-bracket on random
/// homogeneous inputs.
pub fn check_quantum_leibniz(l: &HbarOperator, n: usize, seed: u64, samples: usize) -> Report {
    let check = format!("quantum-leibniz/n={n}");
    if n == 0 {
        return Report::skipped(check, "arity must be positive").with_seed(seed);
    }
    let mut r = random::rng(seed);
    let inner = l.inner().clone();
    let vars = inner.coordinates();
    let shape = Shape {
        max_degree: 2,
        max_terms: 3,
        max_hbar: 0,
    };
    for _ in 0..samples {
        let draw = |r: &mut random::Rng8| {
            let p = random::parity(r);
            random::homogeneous(r, &inner, &vars, p, &shape)
        };
        let head: Vec<Poly> = (0..n - 1).map(|_| draw(&mut r)).collect();
        let f = draw(&mut r);
        let g = draw(&mut r);
        for (_, lc) in l.parity_components() {
            match quantum_leibniz_defect(&lc, &head, &f, &g) {
                Ok(d) if d.is_zero() => {}
                Ok(d) => {
                    return Report::fail(check, format!("f={f}, g={g}: defect {d}")).with_seed(seed)
                }
                Err(e) => return Report::fail(check, e.to_string()).with_seed(seed),
            }
        }
    }
    Report::pass(check).with_seed(seed)
}

fn parity_bit(p: &Poly) -> u32 {
    p.parity().unwrap_or(Parity::Even).bit()
}

fn signed(p: Poly, odd: bool) -> Poly {
    if odd {
        -p
    } else {
        p
    }
}

/// Axioms of an odd binary bracket on forms: linearity, symmetry, Leibniz,
/// Jacobi and compatibility with `d`. Samples should be homogeneous.
pub fn check_koszul_axioms<B>(name: &str, bracket: &B, samples: &[Poly]) -> Report
where
    B: Fn(&Poly, &Poly) -> Result<Poly>,
{
    match koszul_axiom_witness(bracket, samples) {
        Ok(w) => Report::from_witness(name, w),
        Err(e) => Report::fail(name, e.to_string()),
    }
}

fn koszul_axiom_witness<B>(br: &B, samples: &[Poly]) -> Result<Option<String>>
where
    B: Fn(&Poly, &Poly) -> Result<Poly>,
{
    let has_d = samples
        .first()
        .is_some_and(|s| matches!(s.chart().kind(), ChartKind::PiTangent { .. }));
    for a in samples {
        let pa = parity_bit(a);
        for b in samples {
            let pb = parity_bit(b);
            let ab = br(a, b)?;
            // linearity
            let lin = &br(&(a + &b.scale(&coeff(2))), b)? - &(&ab + &br(b, b)?.scale(&coeff(2)));
            if !lin.is_zero() {
                return Ok(Some(format!("linearity: [{a}, {b}]")));
            }
            // symmetry
            let ba = signed(br(b, a)?, pa * pb % 2 == 1);
            if ab != ba {
                return Ok(Some(format!("symmetry: [{a}, {b}] = {ab}, swapped {ba}")));
            }
            if has_d {
                let lhs = d_form(&ab)?;
                let rhs =
                    &(-br(&d_form(a)?, b)?) + &signed(br(a, &d_form(b)?)?, pa.is_multiple_of(2));
                if lhs != rhs {
                    return Ok(Some(format!("d-derivation: [{a}, {b}]")));
                }
            }
            for c in samples {
                // Leibniz in the second slot.
                let lhs = br(a, &(b * c))?;
                let rhs = &(&ab * c) + &signed(b * &br(a, c)?, (pa + 1) * pb % 2 == 1);
                if lhs != rhs {
                    return Ok(Some(format!("leibniz: [{a}, {b}{c}]")));
                }
                // Jacobi
                let lhs = br(a, &br(b, c)?)?;
                let t1 = signed(br(&ab, c)?, (pa + 1) % 2 == 1);
                let t2 = signed(br(b, &br(a, c)?)?, (pa + 1) * (pb + 1) % 2 == 1);
                if lhs != &t1 + &t2 {
                    return Ok(Some(format!("jacobi: {a}, {b}, {c}")));
                }
            }
        }
    }
    Ok(None)
}

/// Koszul sign of reordering homogeneous elements with parities `bits`
/// into the order `perm`.
fn koszul_sign(bits: &[u32], perm: &[usize]) -> bool {
    let mut odd = false;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] && bits[perm[i]] * bits[perm[j]] % 2 == 1 {
                odd = !odd;
            }
        }
    }
    odd
}

/// Left-hand side of the generalized Jacobi identity of arity `args.len()`
/// for odd symmetric brackets `bracket(list)`:
/// `Σ_{k+l=n} Σ_unshuffles ± [[a_I], a_J]`.
pub fn jacobiator<B>(bracket: &B, args: &[Poly]) -> Result<Poly>
where
    B: Fn(&[Poly]) -> Result<Poly>,
{
    let n = args.len();
    let bits: Vec<u32> = args.iter().map(parity_bit).collect();
    let chart = match args.first() {
        Some(a) => a.chart().clone(),
        None => bracket(&[])?.chart().clone(),
    };
    let mut out = Poly::zero(&chart);
    for mask in 0u32..(1 << n) {
        let inner: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let outer: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
        let perm: Vec<usize> = inner.iter().chain(outer.iter()).copied().collect();
        let ins: Vec<Poly> = inner.iter().map(|&i| args[i].clone()).collect();
        let mut outer_args = vec![bracket(&ins)?];
        outer_args.extend(outer.iter().map(|&i| args[i].clone()));
        let v = bracket(&outer_args)?;
        out = &out + &signed(v, koszul_sign(&bits, &perm));
    }
    Ok(out)
}

/// Convenience: one form per generator `x^a`, `dx^a` of a forms chart.
pub fn form_generators(forms: &Arc<Chart>) -> Vec<Poly> {
    forms
        .coordinates()
        .into_iter()
        .map(|k| Poly::var(forms, k))
        .collect()
}

/// Monomials of degree at most 2 in the coordinates, as additional samples.
pub fn quadratic_samples(chart: &Arc<Chart>) -> Vec<Poly> {
    let coords = chart.coordinates();
    let mut out = Vec::new();
    for (i, &a) in coords.iter().enumerate() {
        for &b in &coords[i..] {
            let mut e = vec![0u16; chart.len()];
            e[a] += 1;
            e[b] += 1;
            if chart.is_odd(a) && a == b {
                continue;
            }
            out.push(Poly::monomial(chart, &e, 0, coeff(1)));
        }
    }
    out
}
