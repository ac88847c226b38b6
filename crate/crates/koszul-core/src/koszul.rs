//! Homotopy Poisson structures, their higher Poisson and Koszul brackets,
//! the generating operator `Δ_P = [d, P̂]`, and the operator pencils on
//! forms and multivector fields.

use std::sync::Arc;

use crate::brackets::{self, Mode};
use crate::error::{Error, Result};
use crate::geometry::SuperManifold;
use crate::hbar_ops::{
    d_form, de_rham, delta_mv, divergence, divergence_rho, hat, minus_i_hbar,
    vector_field_operator, HbarOperator,
};
use crate::report::Report;
use crate::superalgebra::{imag, same_chart, Chart, Parity, Poly};

/// An even multivector `P` with `⟦P, P⟧ = 0`, certified at construction.
#[derive(Clone, Debug)]
pub struct PinfStructure {
    pub manifold: SuperManifold,
    pub p: Poly,
    /// `⟦P, P⟧`, which is zero for a certified structure.
    pub certificate: Poly,
}

pub fn validate_pinf(m: &SuperManifold, p: &Poly) -> Result<PinfStructure> {
    if !same_chart(p.chart(), &m.multivectors) {
        return Err(Error::WrongChart("P must be a multivector".into()));
    }
    if !p.is_zero() && p.parity() != Some(Parity::Even) {
        return Err(Error::ParityMismatch("P must be even".into()));
    }
    let pp = m.schouten(p, p)?;
    if !pp.truncate().is_zero() {
        return Err(Error::NotPinf(pp.to_string()));
    }
    Ok(PinfStructure {
        manifold: m.clone(),
        p: p.clone(),
        certificate: pp,
    })
}

impl PinfStructure {
    pub fn dim(&self) -> usize {
        self.manifold.dim()
    }

    pub fn forms(&self) -> &Arc<Chart> {
        &self.manifold.forms
    }

    pub fn multivectors(&self) -> &Arc<Chart> {
        &self.manifold.multivectors
    }
}

/// `⟦...⟦P, f_1⟧, ..., f_n⟧` at `x* = 0`, for functions on the base.
pub fn higher_poisson(s: &PinfStructure, fs: &[Poly]) -> Result<Poly> {
    let m = &s.manifold;
    let mut acc = s.p.clone();
    for f in fs {
        if !same_chart(f.chart(), &m.base) {
            return Err(Error::WrongChart("arguments must be base functions".into()));
        }
        acc = m.schouten(&acc, &m.function_to_multivectors(f)?)?;
    }
    let n = m.dim();
    let stars: Vec<usize> = (n..2 * n).collect();
    acc.restrict_zero(&stars).transport(&m.base)
}

/// Sign normalizing the generator values of the higher Koszul brackets:
/// `binom(m, 2) + Σ_{k<m} (m-1-k) f̃_k`, for parities `f̃_1, ..., f̃_{m-1}`.
/// The `k`-dependence is what makes the brackets graded symmetric when
/// some `f_k` are odd.
fn koszul_sign(m: usize, parities: &[Parity]) -> bool {
    let mut e = m * m.saturating_sub(1) / 2;
    for (k, p) in parities.iter().enumerate() {
        if p.is_odd() {
            e += m - 2 - k;
        }
    }
    e % 2 == 1
}

/// Higher Koszul brackets from their values on `f` and `df`, extended to all
/// forms as multiderivations:
/// `[df_1, ..., df_{n-1}, f_n] = ±{f_1, ..., f_n}` and
/// `[df_1, ..., df_n] = ±d{f_1, ..., f_n}`, with signs from [`koszul_sign`]
/// (`m = n` and `m = n + 1` respectively).
pub fn higher_koszul_direct(s: &PinfStructure, forms: &[Poly]) -> Result<Poly> {
    let m = &s.manifold;
    for w in forms {
        if !same_chart(w.chart(), &m.forms) {
            return Err(Error::WrongChart("arguments must be forms".into()));
        }
    }
    let n = m.dim();
    let table = |gens: &[usize]| -> Result<Poly> {
        let xs: Vec<usize> = (0..gens.len()).filter(|&i| gens[i] < n).collect();
        match xs.len() {
            0 => {
                let fs: Vec<Poly> = gens.iter().map(|&g| Poly::var(&m.base, g - n)).collect();
                let par: Vec<Parity> = gens.iter().map(|&g| m.parity(g - n)).collect();
                let v = d_form(&m.function_to_forms(&higher_poisson(s, &fs)?)?)?;
                Ok(if koszul_sign(gens.len() + 1, &par) {
                    -v
                } else {
                    v
                })
            }
            1 => {
                // Rotate the function slot to the end.
                let k = xs[0];
                let fx = m.parity(gens[k]);
                let mut after = 0;
                let mut fs = Vec::new();
                let mut par = Vec::new();
                for (i, &g) in gens.iter().enumerate() {
                    if i == k {
                        continue;
                    }
                    if i > k {
                        after += m.parity(g - n).flip().bit();
                    }
                    fs.push(Poly::var(&m.base, g - n));
                    par.push(m.parity(g - n));
                }
                fs.push(Poly::var(&m.base, gens[k]));
                let v = m.function_to_forms(&higher_poisson(s, &fs)?)?;
                let flip = (fx.is_odd() && after % 2 == 1) ^ koszul_sign(gens.len(), &par);
                Ok(if flip { -v } else { v })
            }
            _ => Ok(Poly::zero(&m.forms)),
        }
    };
    brackets::multiderivation(forms, &table)
}

/// `Δ_P = [d, P̂]`, computed as `(i/ħ)[-iħd, P̂]`.
pub fn delta_p(s: &PinfStructure) -> Result<HbarOperator> {
    let d = de_rham(&s.manifold);
    let ph = hat(&s.manifold, &s.p)?;
    Ok(d.commutator(&ph)?.div_hbar(1)?.scale(&imag(1)))
}

/// Brackets generated by `Δ_P`.
pub fn koszul_brackets_from_delta(s: &PinfStructure, forms: &[Poly], mode: Mode) -> Result<Poly> {
    brackets::bracket(&delta_p(s)?, forms, mode)
}

/// Interior product `i(P)`: substitute `x*_a ↦ ∂/∂(dx^a)` in `P`.
pub fn interior(m: &SuperManifold, p: &Poly, omega: &Poly) -> Result<Poly> {
    if !same_chart(p.chart(), &m.multivectors) || !same_chart(omega.chart(), &m.forms) {
        return Err(Error::ChartMismatch);
    }
    let n = m.dim();
    let mut out = Poly::zero(&m.forms);
    for (mono, c) in p.terms() {
        let mut coef = mono.exps().to_vec();
        let mut v = omega.clone();
        for a in (n..2 * n).rev() {
            for _ in 0..coef[a] {
                v = v.derivative(a);
            }
            coef[a] = 0;
        }
        let cf = Poly::monomial(&m.forms, &coef, mono.hbar(), c.clone());
        out = &out + &(&cf * &v);
    }
    Ok(out)
}

/// `∂_P ω = d i(P) ω - i(P) dω` for even `P`.
pub fn koszul_brylinski(m: &SuperManifold, p: &Poly, omega: &Poly) -> Result<Poly> {
    let a = d_form(&interior(m, p, omega)?)?;
    let b = interior(m, p, &d_form(omega)?)?;
    Ok(&a - &b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Forms,
    Multivectors,
}

/// A family of operators depending polynomially on the even parameter `t`.
#[derive(Clone, Debug)]
pub struct BialgebroidPencil {
    pub side: Side,
    /// Affine form `A + tB`.
    pub operator: HbarOperator,
    /// The same family as a terminating conjugation series.
    pub conjugated: HbarOperator,
}

impl BialgebroidPencil {
    pub fn square(&self) -> Result<HbarOperator> {
        self.operator.square()
    }

    pub fn forms_agree(&self) -> bool {
        self.operator == self.conjugated
    }
}

/// `-iħd + tΔ_P` and `e^{-(i/ħ)tP̂}(-iħd)e^{(i/ħ)tP̂}`.
pub fn pencil_form_side(s: &PinfStructure) -> Result<BialgebroidPencil> {
    let m = &s.manifold;
    let d = de_rham(m);
    let t = m.t_multivectors();
    let tp = hat(m, &(&t * &s.p))?;
    let dp = delta_p(s)?.left_mul(&m.t_forms())?;
    Ok(BialgebroidPencil {
        side: Side::Forms,
        operator: &d + &dp,
        conjugated: d.conjugate(&tp)?,
    })
}

/// `δ_ρ(P)`, a representative of the modular class.
pub fn modular_representative(s: &PinfStructure, rho: &Poly) -> Result<Poly> {
    let m = &s.manifold;
    let op = divergence_rho(m, rho)?;
    let v = op.apply(&s.p)?;
    // -ħ²δ_ρ(P)
    Ok(v.div_hbar(2)?.scale(&crate::superalgebra::coeff(-1)))
}

/// `-iħ d_P`, where `d_P = ⟦P, -⟧` is a vector field on multivectors.
pub fn lichnerowicz(s: &PinfStructure) -> Result<HbarOperator> {
    let m = &s.manifold;
    let values: Vec<(usize, Poly)> = (0..2 * m.dim())
        .map(|k| Ok((k, m.schouten(&s.p, &Poly::var(&m.multivectors, k))?)))
        .collect::<Result<_>>()?;
    vector_field_operator(&m.multivectors_phase, &values)
}

/// `-iħ ⟦T, -⟧` for a multivector `T`.
pub fn schouten_operator(m: &SuperManifold, t: &Poly) -> Result<HbarOperator> {
    let values: Vec<(usize, Poly)> = (0..2 * m.dim())
        .map(|k| Ok((k, m.schouten(t, &Poly::var(&m.multivectors, k))?)))
        .collect::<Result<_>>()?;
    vector_field_operator(&m.multivectors_phase, &values)
}

/// The naive pencil `-ħ²δ_ρ + t(-iħ)d_P` and its square.
pub fn naive_pencil(s: &PinfStructure, rho: &Poly) -> Result<(HbarOperator, HbarOperator)> {
    let m = &s.manifold;
    let a = divergence_rho(m, rho)?;
    let b = lichnerowicz(s)?.left_mul(&m.t_multivectors())?;
    let n = &a + &b;
    let sq = n.square()?;
    Ok((n, sq))
}

/// Checks that the square of the naive pencil is exactly the obstruction
/// `tħ²(-iħ)⟦δ_ρ(P), -⟧`; it vanishes iff `δ_ρ(P)` is Poisson-central.
pub fn naive_pencil_obstruction(s: &PinfStructure, rho: &Poly) -> Report {
    let name = "modular/naive-pencil";
    let run = || -> Result<Option<String>> {
        let m = &s.manifold;
        let (_, sq) = naive_pencil(s, rho)?;
        let dp = modular_representative(s, rho)?;
        // N² = t[A, B] = t ħ² (-iħ)⟦δ_ρ P, -⟧ for A = -ħ²δ_ρ, B = -iħ d_P.
        let expected = schouten_operator(m, &dp)?
            .mul_hbar(2)
            .left_mul(&m.t_multivectors())?;
        if sq != expected {
            return Ok(Some(format!("square {sq} differs from {expected}")));
        }
        Ok(None)
    };
    match run() {
        Ok(w) => Report::from_witness(name, w),
        Err(e) => Report::fail(name, e.to_string()),
    }
}

/// `D̂_P = -iħ[δ, P]` with `δ` the divergence on half-densities.
pub fn d_hat_p(s: &PinfStructure) -> Result<HbarOperator> {
    let m = &s.manifold;
    let div = divergence(m);
    let pm = HbarOperator::multiplication(&m.multivectors_phase, &s.p)?;
    // -iħ (-ħ²)⁻¹ [−ħ²δ, P] = (i/ħ)[−ħ²δ, P]
    Ok(div.commutator(&pm)?.div_hbar(1)?.scale(&imag(1)))
}

/// `-iħ(d_P + δ(P))`.
pub fn d_hat_p_explicit(s: &PinfStructure) -> Result<HbarOperator> {
    let m = &s.manifold;
    let dp = HbarOperator::multiplication(&m.multivectors_phase, &delta_mv(&s.p)?)?;
    let mih = minus_i_hbar(&m.multivectors_phase);
    Ok(&lichnerowicz(s)? + &dp.left_mul(&mih)?)
}

/// `-ħ²δ + tD̂_P` and `e^{-(i/ħ)tP}(-ħ²δ)e^{(i/ħ)tP}`.
pub fn pencil_multivector_side(s: &PinfStructure) -> Result<BialgebroidPencil> {
    let m = &s.manifold;
    let div = divergence(m);
    let t = m.t_multivectors();
    let op = &div + &d_hat_p(s)?.left_mul(&t)?;
    let conj = div.conjugate_by_function(&(&t * &s.p))?;
    Ok(BialgebroidPencil {
        side: Side::Multivectors,
        operator: op,
        conjugated: conj,
    })
}

/// `(e^{-(i/ħ)P}(-ħ²δ)e^{(i/ħ)P}, e^{-(i/ħ)P̂}(-iħd)e^{(i/ħ)P̂})`.
pub fn symmetric_pair(s: &PinfStructure) -> Result<(HbarOperator, HbarOperator)> {
    let m = &s.manifold;
    let mv = divergence(m).conjugate_by_function(&s.p)?;
    let fm = de_rham(m).conjugate(&hat(m, &s.p)?)?;
    Ok((mv, fm))
}

/// `[[d, T̂], Ŝ]` as an operator on forms.
pub fn double_commutator_with_d(m: &SuperManifold, t: &Poly, s: &Poly) -> Result<HbarOperator> {
    let d = de_rham(m);
    let inner = d.commutator(&hat(m, t)?)?.div_hbar(1)?.scale(&imag(1));
    inner.commutator(&hat(m, s)?)
}
