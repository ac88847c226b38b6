//! Acceptance run: one PASS/FAIL line per criterion. Expected values come from
//! the oracles below, written against raw polynomial operations only.
//!
//! Criteria 6 and 13 fail in their literal form and are reported but not
//! asserted; the corrected identity is checked alongside.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use koszul_core::brackets::{
    classical_bracket, form_generators, quadratic_samples, quantum_bracket, Mode, TwistedOperator,
};
use koszul_core::duality::{
    bigrading, dual_linear_pullback, dual_operator, dual_quantum_pullback, fiber_fourier,
    inverse_fourier, linear_pullback, pairing, pullback_pairing, quantum_pullback, BundlePair,
    BundleSide, Density, PullbackCharts,
};
use koszul_core::fixtures::{self, Fixture};
use koszul_core::geometry::{cotangent_chart, inner_chart, SuperManifold};
use koszul_core::hbar_ops::{de_rham, divergence, hat, HbarOperator};
use koszul_core::koszul::{
    d_hat_p, delta_p, double_commutator_with_d, higher_koszul_direct, naive_pencil,
    pencil_form_side, pencil_multivector_side, symmetric_pair, PinfStructure,
};
use koszul_core::random::{self, Rng8, Shape};
use koszul_core::superalgebra::{coeff, declare_chart, imag, Chart, Parity, Poly, Role};
use num::BigRational;
use rand::Rng;

// ---------------------------------------------------------------- oracles

fn odd(p: &Poly) -> bool {
    p.parity() == Some(Parity::Odd)
}

fn sign(p: Poly, flip: bool) -> Poly {
    if flip {
        -p
    } else {
        p
    }
}

/// Right derivative, `F ∂⃖/∂v = (-1)^{ṽ(F̃+1)} ∂F/∂v`.
fn right_derivative(f: &Poly, k: usize) -> Poly {
    let mut out = Poly::zero(f.chart());
    for (p, part) in f.parity_components() {
        let flip = f.chart().is_odd(k) && !p.is_odd();
        out = &out + &sign(part.derivative(k), flip);
    }
    out
}

/// `{F, G} = F ∂⃖_p ∂_x G - (-1)^x̃ F ∂⃖_x ∂_p G`, so that `{p, x} = 1`.
fn poisson(f: &Poly, g: &Poly) -> Poly {
    let c = f.chart().clone();
    let mut out = Poly::zero(&c);
    for x in c.coordinates() {
        let p = c.momentum_of(x).unwrap();
        out = &out + &(&right_derivative(f, p) * &g.derivative(x));
        out = &out - &sign(&right_derivative(f, x) * &g.derivative(p), c.is_odd(x));
    }
    out
}

fn restrict_momenta(f: &Poly) -> Poly {
    let c = f.chart();
    let inner = inner_chart(c).unwrap();
    f.restrict_zero(&c.momenta()).transport(inner).unwrap()
}

fn derived(h: &Poly, args: &[Poly]) -> Poly {
    let mut acc = h.clone();
    for a in args {
        acc = poisson(&acc, &a.transport(h.chart()).unwrap());
    }
    restrict_momenta(&acc)
}

/// `δT = Σ (-1)^ã ∂_a ∂T/∂x*_a`.
fn delta(m: &SuperManifold, t: &Poly) -> Poly {
    let n = m.dim();
    let mut out = Poly::zero(&m.multivectors);
    for a in 0..n {
        out = &out + &sign(t.derivative(n + a).derivative(a), m.parity(a).is_odd());
    }
    out
}

/// Schouten bracket as the defect of `δ` being a derivation.
fn schouten(m: &SuperManifold, t: &Poly, s: &Poly) -> Poly {
    let mut out = Poly::zero(&m.multivectors);
    for (pt, tt) in t.parity_components() {
        let a = delta(m, &(&tt * s));
        let b = &delta(m, &tt) * s;
        let c = sign(&tt * &delta(m, s), pt.is_odd());
        out = &out + &(&(&a - &b) - &c);
    }
    out
}

fn d(m: &SuperManifold, w: &Poly) -> Poly {
    let n = m.dim();
    (0..n).fold(Poly::zero(&m.forms), |acc, a| {
        &acc + &(&m.dx(a) * &w.derivative(a))
    })
}

/// `i(P)`: each `x*_a` of `P` becomes `∂/∂dx^a`, the rightmost acting first.
fn interior(m: &SuperManifold, p: &Poly, w: &Poly) -> Poly {
    let n = m.dim();
    let mut out = Poly::zero(&m.forms);
    for (mono, c) in p.terms() {
        let mut stars = Vec::new();
        let mut coef = mono.exps().to_vec();
        for a in n..2 * n {
            for _ in 0..coef[a] {
                stars.push(a);
            }
            coef[a] = 0;
        }
        let mut v = w.clone();
        for &a in stars.iter().rev() {
            v = v.derivative(a);
        }
        out = &out + &(&Poly::monomial(&m.forms, &coef, mono.hbar(), c.clone()) * &v);
    }
    out
}

fn kb_operator(m: &SuperManifold, p: &Poly, w: &Poly) -> Poly {
    &d(m, &interior(m, p, w)) - &interior(m, p, &d(m, w))
}

/// `∂(ωσ) - ∂(ω)σ - (-1)^ω̃ ω∂σ`.
fn kb_bracket(m: &SuperManifold, p: &Poly, a: &Poly, b: &Poly) -> Poly {
    let t1 = kb_operator(m, p, &(a * b));
    let t2 = &kb_operator(m, p, a) * b;
    let t3 = sign(a * &kb_operator(m, p, b), odd(a));
    &(&t1 - &t2) - &t3
}

fn minus_hbar2(p: &Poly) -> Poly {
    p.mul_hbar(2).scale(&coeff(-1))
}

fn minus_i_hbar(p: &Poly) -> Poly {
    p.mul_hbar(1).scale(&imag(-1))
}

fn forms_samples(m: &SuperManifold) -> Vec<Poly> {
    let mut v = form_generators(&m.forms);
    v.extend(quadratic_samples(&m.forms));
    v
}

fn random_mv(r: &mut Rng8, m: &SuperManifold) -> Poly {
    let vars: Vec<usize> = (0..2 * m.dim()).collect();
    let p = random::parity(r);
    let shape = Shape {
        max_degree: 3,
        max_terms: 3,
        max_hbar: 0,
    };
    random::homogeneous(r, &m.multivectors, &vars, p, &shape)
}

fn random_op(r: &mut Rng8, phase: &Arc<Chart>) -> HbarOperator {
    let vars: Vec<usize> = (0..phase.len())
        .filter(|&k| phase.var(k).role != Role::Parameter)
        .collect();
    let p = random::parity(r);
    let shape = Shape {
        max_degree: 3,
        max_terms: 4,
        max_hbar: 1,
    };
    HbarOperator::from_symbol(random::homogeneous(r, phase, &vars, p, &shape)).unwrap()
}

fn random_fn(r: &mut Rng8, chart: &Arc<Chart>) -> Poly {
    let p = random::parity(r);
    let shape = Shape {
        max_degree: 2,
        max_terms: 3,
        max_hbar: 0,
    };
    random::homogeneous(r, chart, &chart.coordinates(), p, &shape)
}

fn certify(f: Fixture) -> PinfStructure {
    f.certify().expect("fixture certifies")
}

// --------------------------------------------------------------- criteria

struct Outcome {
    pass: bool,
    note: String,
}

fn ok() -> Outcome {
    Outcome {
        pass: true,
        note: String::new(),
    }
}

fn fail(note: impl Into<String>) -> Outcome {
    Outcome {
        pass: false,
        note: note.into(),
    }
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return fail(format!($($fmt)*));
        }
    };
}

fn c1_symbol_calculus() -> Outcome {
    let base = declare_chart(&[
        ("x1", Parity::Even),
        ("x2", Parity::Even),
        ("x3", Parity::Odd),
    ])
    .unwrap();
    let phase = cotangent_chart(&base).unwrap();
    let mut r = random::rng(101);
    for _ in 0..20 {
        let a = random_op(&mut r, &phase);
        let b = random_op(&mut r, &phase);
        let (sa, sb) = (
            a.symbol().hbar_coefficient(0),
            b.symbol().hbar_coefficient(0),
        );
        let ab = a.compose(&b).unwrap();
        ensure!(
            ab.principal_symbol() == &sa * &sb,
            "symb(AB) for A = {a}, B = {b}"
        );
        let c = a.commutator(&b).unwrap();
        let lhs = c.div_hbar(1).unwrap().scale(&imag(1)).principal_symbol();
        ensure!(
            lhs == poisson(&sa, &sb),
            "symb(iħ⁻¹[A,B]) for A = {a}, B = {b}"
        );
    }
    ok()
}

fn c2_classical_is_derived() -> Outcome {
    let base = declare_chart(&[
        ("x1", Parity::Even),
        ("x2", Parity::Even),
        ("x3", Parity::Odd),
    ])
    .unwrap();
    let phase = cotangent_chart(&base).unwrap();
    let mut r = random::rng(202);
    for _ in 0..10 {
        let l = random_op(&mut r, &phase);
        let h = l.symbol().hbar_coefficient(0);
        for n in 0..=3 {
            let args: Vec<Poly> = (0..n).map(|_| random_fn(&mut r, &base)).collect();
            let lhs = classical_bracket(&l, &args).unwrap();
            ensure!(lhs == derived(&h, &args), "arity {n} for L = {l}");
        }
    }
    ok()
}

/// Generator values of the binary bracket of an ordinary bivector on an
/// even base: `[dx^a, x^b] = ∂_{x*_a}∂_{x*_b}P`, `[dx^a, dx^b] = d[dx^a, x^b]`.
fn ordinary_table(m: &SuperManifold, p: &Poly, a: &Poly, b: &Poly) -> Poly {
    let n = m.dim();
    let which = |g: &Poly| -> (usize, bool) {
        let (mono, _) = g.terms().next().unwrap();
        let k = (0..2 * n).find(|&k| mono.exp(k) == 1).unwrap();
        (k % n, k >= n)
    };
    let coef = |i: usize, j: usize| {
        let v = p.derivative(n + j).derivative(n + i);
        m.function_to_forms(&v.transport(&m.base).unwrap()).unwrap()
    };
    match (which(a), which(b)) {
        ((_, false), (_, false)) => Poly::zero(&m.forms),
        ((i, true), (j, false)) | ((j, false), (i, true)) => coef(i, j),
        ((i, true), (j, true)) => d(m, &coef(i, j)),
    }
}

fn c3_ordinary_poisson() -> Outcome {
    for f in [fixtures::fix_a(), fixtures::fix_b()] {
        let name = f.name.clone();
        let s = certify(f);
        let m = &s.manifold;
        let dl = delta_p(&s).unwrap();
        let samples = forms_samples(m);
        for w in &samples {
            ensure!(
                dl.apply(w).unwrap() == minus_hbar2(&kb_operator(m, &s.p, w)),
                "{name}: Δ_P({w})"
            );
        }
        let gens = form_generators(&m.forms);
        ensure!(
            classical_bracket(&dl, &[]).unwrap().is_zero(),
            "{name}: 0-bracket"
        );
        for a in &gens {
            ensure!(
                classical_bracket(&dl, std::slice::from_ref(a))
                    .unwrap()
                    .is_zero(),
                "{name}: [{a}]"
            );
            for b in &gens {
                let v = classical_bracket(&dl, &[a.clone(), b.clone()]).unwrap();
                ensure!(
                    v == ordinary_table(m, &s.p, a, b),
                    "{name}: [{a}, {b}] = {v}"
                );
                ensure!(v == kb_bracket(m, &s.p, a, b), "{name}: [{a}, {b}] vs ∂_P");
                for c in &gens {
                    let v = classical_bracket(&dl, &[a.clone(), b.clone(), c.clone()]).unwrap();
                    ensure!(v.is_zero(), "{name}: [{a}, {b}, {c}] = {v}");
                }
            }
        }
        for a in &samples {
            let q1 = quantum_bracket(&dl, std::slice::from_ref(a)).unwrap();
            ensure!(
                q1 == minus_i_hbar(&kb_operator(m, &s.p, a)),
                "{name}: quantum [{a}]"
            );
            for b in &samples {
                let q2 = quantum_bracket(&dl, &[a.clone(), b.clone()]).unwrap();
                ensure!(
                    q2 == kb_bracket(m, &s.p, a, b),
                    "{name}: quantum [{a}, {b}]"
                );
            }
        }
    }
    ok()
}

fn c4_differential_poisson() -> Outcome {
    let s = certify(fixtures::fix_c());
    let m = &s.manifold;
    let n = m.dim();
    let zero = Poly::zero(&m.multivectors);
    let (mut p1, mut p2) = (zero.clone(), zero);
    for (mono, c) in s.p.terms() {
        let t = Poly::monomial(&m.multivectors, mono.exps(), mono.hbar(), c.clone());
        match mono.degree_in(&(n..2 * n).collect::<Vec<_>>()) {
            1 => p1 = &p1 + &t,
            2 => p2 = &p2 + &t,
            k => return fail(format!("unexpected x*-degree {k}")),
        }
    }
    // P₁ = P^a x*_a, Q^a = -P^a.
    let q: Vec<Poly> = (0..n)
        .map(|a| {
            -m.function_to_forms(&right_derivative(&p1, n + a).transport(&m.base).unwrap())
                .unwrap()
        })
        .collect();
    let q_odd = (0..n).any(|a| !q[a].is_zero() && odd(&q[a]) != m.parity(a).is_odd());
    let lie = |w: &Poly| -> Poly {
        let mut out = Poly::zero(&m.forms);
        for a in 0..n {
            out = &out + &(&q[a] * &w.derivative(a));
            out = &out + &(&sign(d(m, &q[a]), q_odd) * &w.derivative(n + a));
        }
        out
    };
    let dl = delta_p(&s).unwrap();
    let samples = forms_samples(m);
    for w in &samples {
        let rhs = &minus_i_hbar(&lie(w)) + &minus_hbar2(&kb_operator(m, &p2, w));
        ensure!(dl.apply(w).unwrap() == rhs, "Δ_P({w})");
        ensure!(
            classical_bracket(&dl, std::slice::from_ref(w)).unwrap() == lie(w),
            "[{w}] vs L_Q"
        );
        for v in &samples {
            let b = classical_bracket(&dl, &[w.clone(), v.clone()]).unwrap();
            ensure!(b == kb_bracket(m, &p2, w, v), "[{w}, {v}] vs ∂_P₂");
        }
    }
    ok()
}

fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in multisets(n, k - 1) {
        for i in rest.last().copied().unwrap_or(0)..n {
            let mut v = rest.clone();
            v.push(i);
            out.push(v);
        }
    }
    out
}

fn c5_brackets_from_bv() -> Outcome {
    let s = certify(fixtures::fix_d());
    let m = &s.manifold;
    let dl = delta_p(&s).unwrap();
    ensure!(dl.square().unwrap().is_zero(), "Δ_P² ≠ 0");
    let (hp, _) = m.koszul_masters(&s.p).unwrap();
    let gens = form_generators(&m.forms);
    let mut nonzero_ternary = false;
    for k in 0..=4 {
        for idx in multisets(gens.len(), k) {
            let args: Vec<Poly> = idx.iter().map(|&i| gens[i].clone()).collect();
            let lhs = classical_bracket(&dl, &args).unwrap();
            let direct = higher_koszul_direct(&s, &args).unwrap();
            ensure!(lhs == direct, "{idx:?}: {lhs} vs {direct}");
            ensure!(
                lhs == derived(&hp, &args),
                "{idx:?}: derived bracket of H_P"
            );
            nonzero_ternary |= k == 3 && !lhs.is_zero();
        }
    }
    ensure!(nonzero_ternary, "all ternary brackets vanish");
    ok()
}

/// Returns (literal holds, corrected holds).
fn c6_verscartan() -> (bool, Outcome) {
    let mut literal = true;
    for (i, m) in [fixtures::line_1_1(), fixtures::plane()]
        .into_iter()
        .enumerate()
    {
        let mut r = random::rng(606 + i as u64);
        for _ in 0..10 {
            let t = random_mv(&mut r, &m);
            let s = random_mv(&mut r, &m);
            let lhs = double_commutator_with_d(&m, &t, &s).unwrap();
            let ts = schouten(&m, &t, &s);
            let plain = hat(&m, &ts).unwrap();
            literal &= lhs == plain;
            let corrected = hat(&m, &minus_i_hbar(&ts)).unwrap();
            if lhs != corrected {
                return (literal, fail(format!("T = {t}, S = {s}")));
            }
        }
    }
    (literal, ok())
}

fn c7_pencils() -> Outcome {
    for f in [fixtures::fix_a(), fixtures::fix_d()] {
        let name = f.name.clone();
        let s = certify(f);
        let m = &s.manifold;
        // Forms: A = -iħd, B = Δ_P; D̂_t = A + tB.
        let a = de_rham(m);
        let b = delta_p(&s).unwrap();
        let ph = hat(m, &s.p).unwrap();
        let ad1 = a
            .commutator(&ph)
            .unwrap()
            .div_hbar(1)
            .unwrap()
            .scale(&imag(1));
        ensure!(ad1 == b, "{name}: first conjugation term");
        let ad2 = ad1.commutator(&ph).unwrap();
        ensure!(ad2.is_zero(), "{name}: conjugation series does not stop");
        ensure!(a.square().unwrap().is_zero(), "{name}: d² ≠ 0");
        ensure!(a.commutator(&b).unwrap().is_zero(), "{name}: [d, Δ_P] ≠ 0");
        ensure!(b.square().unwrap().is_zero(), "{name}: Δ_P² ≠ 0");
        let pf = pencil_form_side(&s).unwrap();
        ensure!(
            pf.forms_agree() && pf.square().unwrap().is_zero(),
            "{name}: form pencil"
        );
        ensure!(
            pf.operator == &a + &b.left_mul(&m.t_forms()).unwrap(),
            "{name}: form pencil shape"
        );
        // Multivectors: -ħ²δ conjugated by tP.
        let div = divergence(m);
        let pm = HbarOperator::multiplication(&m.multivectors_phase, &s.p).unwrap();
        let first = div
            .commutator(&pm)
            .unwrap()
            .div_hbar(1)
            .unwrap()
            .scale(&imag(1));
        ensure!(first == d_hat_p(&s).unwrap(), "{name}: D̂_P");
        ensure!(
            first.commutator(&pm).unwrap().is_zero(),
            "{name}: dual series does not stop"
        );
        ensure!(
            div.commutator(&first).unwrap().is_zero(),
            "{name}: [δ, D̂_P] ≠ 0"
        );
        ensure!(first.square().unwrap().is_zero(), "{name}: D̂_P² ≠ 0");
        let pd = pencil_multivector_side(&s).unwrap();
        ensure!(
            pd.forms_agree() && pd.square().unwrap().is_zero(),
            "{name}: dual pencil"
        );
    }
    ok()
}

fn c8_modular() -> Outcome {
    let f = fixtures::fix_m();
    let rho = f.rho.clone();
    let s = certify(f);
    let m = &s.manifold;
    let dp = delta(m, &s.p);
    ensure!(dp == -m.xs(1), "δ(P) = {dp}");
    let (_, sq) = naive_pencil(&s, &rho).unwrap();
    ensure!(!sq.is_zero(), "naive pencil squares to zero");
    let t = m.t_multivectors();
    let dh = d_hat_p(&s).unwrap();
    ensure!(dh.square().unwrap().is_zero(), "D̂_P² ≠ 0");
    let mut r = random::rng(808);
    for _ in 0..8 {
        let x = random_mv(&mut r, m);
        // N² = t ħ² (-iħ) ⟦δ(P), -⟧
        let want = (&minus_i_hbar(&schouten(m, &dp, &x)) * &t).mul_hbar(2);
        ensure!(sq.apply(&x).unwrap() == want, "N²({x})");
        let explicit = minus_i_hbar(&(&schouten(m, &s.p, &x) + &(&dp * &x)));
        ensure!(dh.apply(&x).unwrap() == explicit, "D̂_P({x})");
    }
    ok()
}

/// `(deg, deg*)` of each monomial, from variable names.
fn bidegrees(l: &HbarOperator) -> BTreeMap<(u32, u32), Poly> {
    let c = l.phase();
    let mut out: BTreeMap<(u32, u32), Poly> = BTreeMap::new();
    for (mono, co) in l.symbol().terms() {
        let (mut pb, mut pf, mut fib) = (0, 0, 0);
        for k in 0..c.len() {
            let e = mono.exp(k) as u32;
            let name = &c.var(k).name;
            match c.var(k).role {
                Role::Momentum(j) if c.var(j).name.starts_with(['u', 'w']) => pf += e,
                Role::Momentum(_) => pb += e,
                _ if name.starts_with(['u', 'w']) => fib += e,
                _ => {}
            }
        }
        let h = mono.hbar() as u32;
        let t = Poly::monomial(c, mono.exps(), mono.hbar(), co.clone());
        let slot = out
            .entry((pb + pf + h, pb + fib + h))
            .or_insert_with(|| Poly::zero(c));
        *slot = &*slot + &t;
    }
    out
}

/// Mackenzie–Xu on symbols: `p_a ↦ -p_a`, `p_i ↦ w_i`, `u^i ↦ (-1)^ĩ p^i`.
fn mx(pair: &BundlePair, f: &Poly) -> Poly {
    let (src, dst) = (&pair.phase, &pair.phase_dual);
    let images: Vec<Poly> = (0..src.len())
        .map(|k| match src.var(k).role {
            Role::Momentum(j) if (pair.base..pair.base + pair.rank).contains(&j) => {
                Poly::var(dst, j)
            }
            Role::Momentum(j) => -Poly::var(dst, dst.momentum_of(j).unwrap()),
            _ if (pair.base..pair.base + pair.rank).contains(&k) => {
                sign(Poly::var(dst, dst.momentum_of(k).unwrap()), src.is_odd(k))
            }
            _ => Poly::var(dst, k),
        })
        .collect();
    f.substitute_into(dst, &images).unwrap()
}

fn c9_duality() -> Outcome {
    for f in [fixtures::fix_a(), fixtures::fix_b(), fixtures::fix_d()] {
        let m = &f.manifold;
        let pair = BundlePair::of_manifold(m).unwrap();
        let dd = dual_operator(&pair, &de_rham(m)).unwrap();
        let ph = dual_operator(&pair, &hat(m, &f.p).unwrap()).unwrap();
        let mut r = random::rng(909);
        for _ in 0..6 {
            let t = random_mv(&mut r, m);
            ensure!(
                dd.apply(&t).unwrap() == minus_hbar2(&delta(m, &t)),
                "(-iħd)*({t})"
            );
            ensure!(ph.apply(&t).unwrap() == &f.p * &t, "P̂*({t})");
        }
    }
    let pair = BundlePair::standard(
        &[("x", Parity::Even), ("y", Parity::Odd)],
        &[Parity::Odd, Parity::Even],
    )
    .unwrap();
    let mut r = random::rng(910);
    for _ in 0..20 {
        let a = random_op(&mut r, &pair.phase);
        let b = random_op(&mut r, &pair.phase);
        let lhs = dual_operator(&pair, &a.compose(&b).unwrap()).unwrap();
        let both_odd = a.parity() == Some(Parity::Odd) && b.parity() == Some(Parity::Odd);
        let ba = dual_operator(&pair, &b)
            .unwrap()
            .compose(&dual_operator(&pair, &a).unwrap())
            .unwrap();
        ensure!(
            lhs == if both_odd { -&ba } else { ba },
            "(AB)* for A = {a}, B = {b}"
        );
        let da = dual_operator(&pair, &a).unwrap();
        let theirs: BTreeMap<(u32, u32), Poly> = bigrading(&pair, &da)
            .unwrap()
            .into_iter()
            .map(|(k, v)| (k, v.symbol().clone()))
            .collect();
        ensure!(theirs == bidegrees(&da), "bigrading of {da}");
        for ((i, j), part) in bidegrees(&a) {
            let img = dual_operator(&pair, &HbarOperator::from_symbol(part).unwrap()).unwrap();
            ensure!(
                bidegrees(&img).keys().all(|&k| k == (j, i)),
                "({i}, {j}) not swapped"
            );
        }
        let (sa, sb) = (a.principal_symbol(), b.principal_symbol());
        ensure!(
            da.principal_symbol() == mx(&pair, &sa),
            "classical limit of {a}"
        );
        ensure!(
            mx(&pair, &poisson(&sa, &sb)) == -poisson(&mx(&pair, &sa), &mx(&pair, &sb)),
            "anti-preservation"
        );
    }
    ok()
}

fn fiber_basis(pair: &BundlePair, chart: &Arc<Chart>) -> Vec<(u32, Poly)> {
    (0u32..1 << pair.rank)
        .map(|mask| {
            let mut e = vec![0u16; chart.len()];
            for i in 0..pair.rank {
                e[pair.base + i] = ((mask >> i) & 1) as u16;
            }
            (mask, Poly::monomial(chart, &e, 0, coeff(1)))
        })
        .collect()
}

fn c10_fourier() -> Outcome {
    let half = BigRational::new(1.into(), 2.into());
    for rank in 1..=3 {
        let pair = BundlePair::standard(&[("x", Parity::Even)], &vec![Parity::Odd; rank]).unwrap();
        let mut r = random::rng(1000 + rank as u64);
        for _ in 0..5 {
            let f = random_fn(&mut r, &pair.e);
            let dens = Density::half(BundleSide::E, f.clone());
            let g = fiber_fourier(&pair, &dens).unwrap();
            ensure!(inverse_fourier(&pair, &g).unwrap().value == f, "F⁻¹F({f})");
        }
        for mu in [
            BigRational::from_integer(0.into()),
            half.clone(),
            BigRational::from_integer(1.into()),
        ] {
            for (mask, u) in fiber_basis(&pair, &pair.e) {
                let k = mask.count_ones() as i64;
                // w_E = #u - μ·m on E and -#w + μ·m on E*.
                let w = BigRational::from_integer(k.into())
                    - &mu * BigRational::from_integer((rank as i64).into());
                let dens = Density::new(BundleSide::E, u.clone(), half.clone(), mu.clone());
                let img = fiber_fourier(&pair, &dens).unwrap();
                for (_, t) in fiber_basis(&pair, &pair.e_dual) {
                    if img
                        .value
                        .terms()
                        .all(|(m, _)| t.terms().all(|(n, _)| m.exps() != n.exps()))
                    {
                        continue;
                    }
                    let l: i64 = t.terms().next().unwrap().0.degree() as i64;
                    let wt = -BigRational::from_integer(l.into())
                        + &img.mu * BigRational::from_integer((rank as i64).into());
                    ensure!(wt == w, "weight of F({u}) at μ = {mu}");
                }
            }
        }
        for (ku, u) in fiber_basis(&pair, &pair.e) {
            for (kw, w) in fiber_basis(&pair, &pair.e_dual) {
                let v = pairing(
                    &pair,
                    &Density::half(BundleSide::E, u.clone()),
                    &Density::half(BundleSide::Dual, w.clone()),
                )
                .unwrap();
                ensure!(v.is_zero() == (ku != kw), "⟨{u}, {w}⟩ = {v}");
            }
        }
        let bad = Density::new(
            BundleSide::Dual,
            Poly::one(&pair.e_dual),
            BigRational::from_integer(0.into()),
            half.clone(),
        );
        ensure!(
            pairing(
                &pair,
                &Density::half(BundleSide::E, Poly::one(&pair.e)),
                &bad
            )
            .is_err(),
            "λ mismatch accepted"
        );
    }
    ok()
}

fn c11_quantum_pullbacks() -> Outcome {
    let pc = PullbackCharts::new(&[("x", Parity::Even)], 2, 2).unwrap();
    let base = declare_chart(&[("x", Parity::Even)]).unwrap();
    let mut r = random::rng(1111);
    for _ in 0..4 {
        let ints: Vec<Vec<i64>> = (0..2)
            .map(|_| (0..2).map(|_| r.gen_range(-3..=3)).collect())
            .collect();
        let phi: Vec<Vec<Poly>> = ints
            .iter()
            .map(|row| row.iter().map(|&c| Poly::int(&base, c)).collect())
            .collect();
        // ub^α ↦ Σ_i ua^i Φ_i^α and wa_i ↦ Σ_α Φ_i^α wb_α.
        let f_images: Vec<Poly> = (0..pc.e2.len())
            .map(|k| {
                if k == 0 {
                    return Poly::var(&pc.e1, 0);
                }
                (0..2).fold(Poly::zero(&pc.e1), |acc, i| {
                    &acc + &Poly::var(&pc.e1, 1 + i).scale(&coeff(ints[i][k - 1]))
                })
            })
            .collect();
        let g_images: Vec<Poly> = (0..pc.e1_dual.len())
            .map(|k| {
                if k == 0 {
                    return Poly::var(&pc.e2_dual, 0);
                }
                (0..2).fold(Poly::zero(&pc.e2_dual), |acc, a| {
                    &acc + &Poly::var(&pc.e2_dual, 1 + a).scale(&coeff(ints[k - 1][a]))
                })
            })
            .collect();
        let s = pc.linear_generating_function(&phi).unwrap();
        for _ in 0..3 {
            let f2 = random_fn(&mut r, &pc.e2);
            let g1 = random_fn(&mut r, &pc.e1_dual);
            let q = quantum_pullback(&pc, &s, &f2).unwrap();
            ensure!(
                q == f2.substitute_into(&pc.e1, &f_images).unwrap(),
                "Φ-pullback of {f2}"
            );
            ensure!(
                q == linear_pullback(&pc, &phi, &f2).unwrap(),
                "linear_pullback"
            );
            let qd = dual_quantum_pullback(&pc, &s, &g1).unwrap();
            ensure!(
                qd == g1.substitute_into(&pc.e2_dual, &g_images).unwrap(),
                "Φ*-pullback of {g1}"
            );
            ensure!(
                qd == dual_linear_pullback(&pc, &phi, &g1).unwrap(),
                "dual_linear_pullback"
            );
            let lhs = pullback_pairing(&pc, true, &q, &g1).unwrap();
            let rhs = pullback_pairing(&pc, false, &f2, &qd).unwrap();
            ensure!(lhs == rhs, "pairing: {lhs} vs {rhs}");
        }
    }
    ok()
}

fn c12_sigma() -> (Outcome, String) {
    let s = certify(fixtures::fix_d());
    let m = &s.manifold;
    let l = delta_p(&s).unwrap();
    let g = &m.x_form(1) * &m.dx(0);
    let e = &Poly::one(&m.forms) + &g; // e^g, since g² = 0
    let a = TwistedOperator::new(l.clone(), Poly::one(&m.forms)).unwrap();
    let b = TwistedOperator::new(l.clone(), e.clone()).unwrap();
    let gens = form_generators(&m.forms);
    let mut witness = String::new();
    for k in 0..=3 {
        for idx in multisets(gens.len(), k) {
            let args: Vec<Poly> = idx.iter().map(|&i| gens[i].clone()).collect();
            let (x, y) = (
                a.bracket(&args, Mode::Classical).unwrap(),
                b.bracket(&args, Mode::Classical).unwrap(),
            );
            if x != y {
                return (fail(format!("classical {idx:?}: {x} vs {y}")), witness);
            }
            let (qx, qy) = (
                a.bracket(&args, Mode::Quantum).unwrap(),
                b.bracket(&args, Mode::Quantum).unwrap(),
            );
            if qx != qy && witness.is_empty() {
                witness = format!("quantum {idx:?}: Δ = {}", &qy - &qx);
            }
        }
    }
    // The 0-bracket difference is σ⁻¹Δ_P(σ) with σ = e^g.
    let zero = &b.bracket(&[], Mode::Quantum).unwrap() - &a.bracket(&[], Mode::Quantum).unwrap();
    let want = &(&Poly::one(&m.forms) - &g) * &l.apply(&e).unwrap();
    if zero != want {
        return (fail(format!("0-bracket witness {zero} vs {want}")), witness);
    }
    if witness.is_empty() {
        return (fail("quantum brackets do not depend on σ"), witness);
    }
    (ok(), witness)
}

/// `e^{-(i/ħ)P}(-ħ²δ)e^{(i/ħ)P}` applied to `T`: the conjugation series stops
/// after the first commutator because `⟦P, P⟧ = 0`, leaving
/// `-ħ²δT - iħ(⟦P, T⟧ + δ(P)T)`.
fn bv1_apply(m: &SuperManifold, p: &Poly, t: &Poly) -> Poly {
    let first = &schouten(m, p, t) + &(&delta(m, p) * t);
    &minus_hbar2(&delta(m, t)) + &minus_i_hbar(&first)
}

fn c13_bv_symmetry() -> (bool, Outcome) {
    let mut literal = true;
    for f in [fixtures::fix_a(), fixtures::fix_d()] {
        let name = f.name.clone();
        let s = certify(f);
        let m = &s.manifold;
        let (bv1, bv2) = symmetric_pair(&s).unwrap();
        if !bv1.square().unwrap().is_zero() || !bv2.square().unwrap().is_zero() {
            return (literal, fail(format!("{name}: nonzero square")));
        }
        let pair = BundlePair::of_manifold(m).unwrap();
        let dual = dual_operator(&pair, &bv2).unwrap();
        let mut r = random::rng(1313);
        for _ in 0..6 {
            let t = random_mv(&mut r, m);
            let got = dual.apply(&t).unwrap();
            if bv1.apply(&t).unwrap() != bv1_apply(m, &s.p, &t) {
                return (literal, fail(format!("{name}: bv1 oracle at {t}")));
            }
            literal &= got == bv1_apply(m, &s.p, &t);
            if got != bv1_apply(m, &-&s.p, &t) {
                return (literal, fail(format!("{name}: dual of bv2 at {t}")));
            }
        }
    }
    (literal, ok())
}

fn main() {
    let mut lines: Vec<(u32, &str, bool, bool, String)> = Vec::new();
    let mut run =
        |id: u32, name: &'static str, asserted: bool, f: &dyn Fn() -> (bool, Outcome, String)| {
            let start = Instant::now();
            let (literal, out, extra) = f();
            let pass = literal && out.pass;
            let mut note = out.note;
            if !extra.is_empty() {
                note = if note.is_empty() {
                    extra
                } else {
                    format!("{note}; {extra}")
                };
            }
            let note = format!("{note} ({} ms)", start.elapsed().as_millis());
            lines.push((id, name, pass, asserted, note));
        };
    let plain = |f: fn() -> Outcome| move || (true, f(), String::new());
    run(1, "symbol calculus", true, &plain(c1_symbol_calculus));
    run(
        2,
        "classical brackets are derived brackets",
        true,
        &plain(c2_classical_is_derived),
    );
    run(
        3,
        "ordinary Poisson structures",
        true,
        &plain(c3_ordinary_poisson),
    );
    run(
        4,
        "differential Poisson structure",
        true,
        &plain(c4_differential_poisson),
    );
    run(
        5,
        "higher Koszul brackets from the BV operator",
        true,
        &plain(c5_brackets_from_bv),
    );
    run(6, "generalized Cartan identity", false, &|| {
        let (lit, out) = c6_verscartan();
        let why = if lit {
            String::new()
        } else {
            format!(
                "literal [[d,T̂],Ŝ] = ⟦T,S⟧^ does not hold; [[d,T̂],Ŝ] = -iħ⟦T,S⟧^ {}",
                if out.pass { "holds" } else { "fails too" }
            )
        };
        (lit, out, why)
    });
    run(7, "operator pencils", true, &plain(c7_pencils));
    run(8, "modular obstruction", true, &plain(c8_modular));
    run(9, "dual operators", true, &plain(c9_duality));
    run(10, "fiberwise Fourier transform", true, &plain(c10_fourier));
    run(11, "quantum pullbacks", true, &plain(c11_quantum_pullbacks));
    run(
        12,
        "independence of the classical brackets from σ",
        true,
        &|| {
            let (out, w) = c12_sigma();
            (true, out, w)
        },
    );
    run(13, "mutually dual BV operators", false, &|| {
        let (lit, out) = c13_bv_symmetry();
        let why = if lit {
            String::new()
        } else {
            format!(
                "literal (bv2 of P)* = bv1 of P does not hold; (bv2 of P)* = bv1 of -P {}",
                if out.pass { "holds" } else { "fails too" }
            )
        };
        (lit, out, why)
    });

    let mut failed = Vec::new();
    for (id, name, pass, asserted, note) in &lines {
        let status = if *pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {status} {name}: {note}");
        if *asserted && !pass {
            failed.push(*id);
        }
    }
    // The literal forms of 6 and 13 fail; their corrected forms must hold.
    for (id, _, _, asserted, note) in &lines {
        if !asserted && note.contains("fails too") {
            failed.push(*id);
        }
    }
    if !failed.is_empty() {
        eprintln!("acceptance failed: criteria {failed:?}");
        std::process::exit(1);
    }
}
