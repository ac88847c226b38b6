//! The named check suites. Each suite returns one report per check, in
//! canonical order; a suite fails iff one of its reports fails.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use crate::brackets::{
    classical_bracket, derived_bracket, form_generators, quantum_bracket, Mode, TwistedOperator,
};
use crate::duality::{
    bigrading, dual_linear_pullback, dual_operator, dual_quantum_pullback, fiber_fourier,
    inverse_fourier, linear_pullback, pairing, pullback_pairing, quantum_pullback, BundlePair,
    BundleSide, Density, PullbackCharts,
};
use crate::error::{Error, Result};
use crate::fixtures::{self, Fixture};
use crate::geometry::{canonical_poisson, cotangent_chart, mackenzie_xu, SuperManifold};
use crate::hbar_ops::{de_rham, divergence, hat, lie_derivative, HbarOperator};
use crate::koszul::{
    d_hat_p, d_hat_p_explicit, delta_p, double_commutator_with_d, higher_koszul_direct,
    koszul_brylinski, naive_pencil, naive_pencil_obstruction, pencil_form_side,
    pencil_multivector_side, symmetric_pair, PinfStructure,
};
use crate::random::{self, Rng8, Shape};
use crate::report::{canonical_order, Report};
use crate::superalgebra::{coeff, declare_chart, imag, Chart, Parity, Poly, DEFAULT_WINDOW};

pub const SUITES: [&str; 13] = [
    "symbcommut",
    "thm.symbol",
    "ordpoiss",
    "difpoiss",
    "thm.DP",
    "verscartan",
    "pencils",
    "modular",
    "dualdo",
    "fourier",
    "qupull",
    "sigma",
    "BVsym",
];

#[derive(Clone, Debug)]
pub struct Context {
    pub seed: u64,
    pub window: u32,
    pub fixtures: BTreeMap<String, Fixture>,
}

impl Default for Context {
    fn default() -> Self {
        Context {
            seed: 1,
            window: DEFAULT_WINDOW,
            fixtures: fixtures::standard(),
        }
    }
}

impl Context {
    pub fn new(seed: u64, window: u32) -> Context {
        Context {
            seed,
            window,
            ..Context::default()
        }
    }

    fn fixture(&self, name: &str) -> Result<Fixture> {
        self.fixtures
            .get(name)
            .cloned()
            .map(|f| f.with_window(self.window))
            .ok_or_else(|| Error::Parse(format!("fixture `{name}` is not defined")))
    }

    fn rng(&self, salt: u64) -> Rng8 {
        random::rng(self.seed.wrapping_mul(0x9e37_79b9).wrapping_add(salt))
    }
}

type Witness = Result<Option<String>>;

fn timed(ctx: &Context, check: &str, f: impl FnOnce() -> Witness) -> Report {
    let start = Instant::now();
    let r = match f() {
        Ok(w) => Report::from_witness(check, w),
        Err(e) => Report::fail(check, e.to_string()),
    };
    r.with_seed(ctx.seed)
        .with_window(ctx.window)
        .with_millis(start.elapsed().as_millis() as u64)
}

fn certified(ctx: &Context, name: &str) -> Result<PinfStructure> {
    ctx.fixture(name)?.certify()
}

fn differ(what: &str, lhs: &dyn std::fmt::Display, rhs: &dyn std::fmt::Display) -> Option<String> {
    Some(format!("{what}: {lhs} vs {rhs}"))
}

pub fn run_suite(name: &str, ctx: &Context) -> Result<Vec<Report>> {
    let mut out = match name {
        "symbcommut" => symbcommut(ctx),
        "thm.symbol" => thm_symbol(ctx),
        "ordpoiss" => ordpoiss(ctx),
        "difpoiss" => difpoiss(ctx),
        "thm.DP" => thm_dp(ctx),
        "verscartan" => verscartan(ctx),
        "pencils" => pencils(ctx),
        "modular" => modular(ctx),
        "dualdo" => dualdo(ctx),
        "fourier" => fourier(ctx),
        "qupull" => qupull(ctx),
        "sigma" => sigma(ctx),
        "BVsym" => bvsym(ctx),
        "all" => {
            let mut v = Vec::new();
            for s in SUITES {
                v.extend(run_suite(s, ctx)?);
            }
            v
        }
        other => return Err(Error::UnknownSuite(other.to_string())),
    };
    canonical_order(&mut out);
    Ok(out)
}

fn phase_2_1() -> Result<Arc<Chart>> {
    let c = declare_chart(&[
        ("x1", Parity::Even),
        ("x2", Parity::Even),
        ("x3", Parity::Odd),
    ])?;
    cotangent_chart(&c)
}

fn random_operator(r: &mut Rng8, phase: &Arc<Chart>, max_hbar: i32) -> Result<HbarOperator> {
    let vars: Vec<usize> = (0..phase.len())
        .filter(|&k| phase.var(k).role != crate::superalgebra::Role::Parameter)
        .collect();
    let shape = Shape {
        max_degree: 3,
        max_terms: 4,
        max_hbar,
    };
    let p = random::parity(r);
    HbarOperator::from_symbol(random::homogeneous(r, phase, &vars, p, &shape))
}

fn random_function(r: &mut Rng8, chart: &Arc<Chart>) -> Poly {
    let p = random::parity(r);
    let shape = Shape {
        max_degree: 2,
        max_terms: 3,
        max_hbar: 0,
    };
    random::homogeneous(r, chart, &chart.coordinates(), p, &shape)
}

fn symbcommut(ctx: &Context) -> Vec<Report> {
    let product = timed(ctx, "symbcommut/product", || {
        let phase = phase_2_1()?;
        let mut r = ctx.rng(1);
        for _ in 0..20 {
            let a = random_operator(&mut r, &phase, 1)?;
            let b = random_operator(&mut r, &phase, 1)?;
            let lhs = a.compose(&b)?.principal_symbol();
            let rhs = &a.principal_symbol() * &b.principal_symbol();
            if lhs != rhs {
                return Ok(differ("symb(AB)", &lhs, &rhs));
            }
        }
        Ok(None)
    });
    let commutator = timed(ctx, "symbcommut/commutator", || {
        let phase = phase_2_1()?;
        let mut r = ctx.rng(2);
        for _ in 0..20 {
            let a = random_operator(&mut r, &phase, 1)?;
            let b = random_operator(&mut r, &phase, 1)?;
            let c = a.commutator(&b)?;
            if c.symbol().min_hbar().is_some_and(|h| h < 1) {
                return Ok(Some(format!("[A, B] = {c} is not divisible by ħ")));
            }
            let lhs = c.div_hbar(1)?.scale(&imag(1)).principal_symbol();
            let rhs = canonical_poisson(&a.principal_symbol(), &b.principal_symbol())?;
            if lhs != rhs {
                return Ok(differ("symb(iħ⁻¹[A,B])", &lhs, &rhs));
            }
        }
        Ok(None)
    });
    vec![product, commutator]
}

fn thm_symbol(ctx: &Context) -> Vec<Report> {
    vec![timed(ctx, "thm.symbol/classical-equals-derived", || {
        let phase = phase_2_1()?;
        let inner = crate::geometry::inner_chart(&phase)?.clone();
        let mut r = ctx.rng(3);
        for _ in 0..10 {
            let l = random_operator(&mut r, &phase, 1)?;
            let h = l.principal_symbol();
            for n in 0..=3 {
                let args: Vec<Poly> = (0..n).map(|_| random_function(&mut r, &inner)).collect();
                let lhs = classical_bracket(&l, &args)?;
                let rhs = derived_bracket(&h, &args)?;
                if lhs != rhs {
                    return Ok(differ(&format!("arity {n} for L = {l}"), &lhs, &rhs));
                }
            }
        }
        Ok(None)
    })]
}

/// `[ω, σ] = ∂(ωσ) - ∂(ω)σ - (-1)^ω̃ ω∂(σ)` with `∂ = ∂_P`.
fn binary_koszul(m: &SuperManifold, p: &Poly, a: &Poly, b: &Poly) -> Result<Poly> {
    let kb = |w: &Poly| koszul_brylinski(m, p, w);
    let t1 = kb(&(a * b))?;
    let t2 = &kb(a)? * b;
    let mut t3 = a * &kb(b)?;
    if a.parity() == Some(Parity::Odd) {
        t3 = -t3;
    }
    Ok(&(&t1 - &t2) - &t3)
}

fn sample_forms(m: &SuperManifold) -> Vec<Poly> {
    let mut v = form_generators(&m.forms);
    v.extend(crate::brackets::quadratic_samples(&m.forms));
    v
}

fn ordpoiss(ctx: &Context) -> Vec<Report> {
    let mut out = Vec::new();
    for name in ["A", "B"] {
        let id = |c: &str| format!("ordpoiss/{name}/{c}");
        let s = match certified(ctx, name) {
            Ok(s) => s,
            Err(e) => {
                out.push(Report::fail(id("certify"), e.to_string()).with_seed(ctx.seed));
                continue;
            }
        };
        let m = s.manifold.clone();
        out.push(timed(ctx, &id("delta"), || {
            let dl = delta_p(&s)?;
            for w in sample_forms(&m) {
                let lhs = dl.apply(&w)?;
                let rhs = koszul_brylinski(&m, &s.p, &w)?
                    .mul_hbar(2)
                    .scale(&coeff(-1));
                if lhs != rhs {
                    return Ok(differ(&format!("Δ_P({w})"), &lhs, &rhs));
                }
            }
            Ok(None)
        }));
        out.push(timed(ctx, &id("classical"), || {
            let dl = delta_p(&s)?;
            let gens = form_generators(&m.forms);
            let b0 = classical_bracket(&dl, &[])?;
            if !b0.is_zero() {
                return Ok(Some(format!("0-bracket {b0}")));
            }
            for a in &gens {
                let b1 = classical_bracket(&dl, std::slice::from_ref(a))?;
                if !b1.is_zero() {
                    return Ok(Some(format!("1-bracket of {a}: {b1}")));
                }
                for b in &gens {
                    let lhs = classical_bracket(&dl, &[a.clone(), b.clone()])?;
                    let rhs = binary_koszul(&m, &s.p, a, b)?;
                    if lhs != rhs {
                        return Ok(differ(&format!("[{a}, {b}]"), &lhs, &rhs));
                    }
                    for c in &gens {
                        let b3 = classical_bracket(&dl, &[a.clone(), b.clone(), c.clone()])?;
                        if !b3.is_zero() {
                            return Ok(Some(format!("3-bracket [{a}, {b}, {c}] = {b3}")));
                        }
                    }
                }
            }
            Ok(None)
        }));
        out.push(timed(ctx, &id("quantum"), || {
            let dl = delta_p(&s)?;
            let samples = sample_forms(&m);
            for a in &samples {
                let lhs = quantum_bracket(&dl, std::slice::from_ref(a))?;
                let rhs = koszul_brylinski(&m, &s.p, a)?.mul_hbar(1).scale(&imag(-1));
                if lhs != rhs {
                    return Ok(differ(&format!("[{a}]"), &lhs, &rhs));
                }
                for b in &samples {
                    let lhs = quantum_bracket(&dl, &[a.clone(), b.clone()])?;
                    let rhs = binary_koszul(&m, &s.p, a, b)?;
                    if lhs != rhs {
                        return Ok(differ(&format!("[{a}, {b}]"), &lhs, &rhs));
                    }
                }
            }
            let g = form_generators(&m.forms);
            let b3 = quantum_bracket(&dl, &[g[0].clone(), g[1].clone(), g[g.len() - 1].clone()])?;
            if !b3.is_zero() {
                return Ok(Some(format!("quantum 3-bracket {b3}")));
            }
            Ok(None)
        }));
    }
    out
}

/// `P₁`, `P₂` by degree in `x*`, and `Q^a = ⟦P₁, x^a⟧` at `x* = 0`.
fn split_differential_poisson(s: &PinfStructure) -> Result<(Poly, Poly, Vec<Poly>)> {
    let f = Fixture::new("", s.manifold.clone(), s.p.clone());
    let parts = f.by_degree();
    let m = &s.manifold;
    let zero = Poly::zero(&m.multivectors);
    let p1 = parts.get(&1).cloned().unwrap_or_else(|| zero.clone());
    let p2 = parts.get(&2).cloned().unwrap_or_else(|| zero.clone());
    if parts.keys().any(|&k| k != 1 && k != 2) {
        return Err(Error::WrongChart(
            "P must be of degree 1 and 2 in x*".into(),
        ));
    }
    let n = m.dim();
    let stars: Vec<usize> = (n..2 * n).collect();
    let q = (0..n)
        .map(|a| {
            m.schouten(&p1, &m.x_mv(a))?
                .restrict_zero(&stars)
                .transport(&m.base)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((p1, p2, q))
}

fn difpoiss(ctx: &Context) -> Vec<Report> {
    let s = match certified(ctx, "C") {
        Ok(s) => s,
        Err(e) => {
            return vec![Report::fail("difpoiss/C/certify", e.to_string()).with_seed(ctx.seed)]
        }
    };
    let m = s.manifold.clone();
    let delta = timed(ctx, "difpoiss/C/delta", || {
        let (_, p2, q) = split_differential_poisson(&s)?;
        let dl = delta_p(&s)?;
        let lq = lie_derivative(&m, &q)?;
        for w in sample_forms(&m) {
            let lhs = dl.apply(&w)?;
            let kb = koszul_brylinski(&m, &p2, &w)?.mul_hbar(2).scale(&coeff(-1));
            let rhs = &lq.apply(&w)? + &kb;
            if lhs != rhs {
                return Ok(differ(&format!("Δ_P({w})"), &lhs, &rhs));
            }
        }
        Ok(None)
    });
    let brackets = timed(ctx, "difpoiss/C/brackets", || {
        let (_, p2, q) = split_differential_poisson(&s)?;
        let dl = delta_p(&s)?;
        let lq = lie_derivative(&m, &q)?;
        let samples = sample_forms(&m);
        for a in &samples {
            let lhs = classical_bracket(&dl, std::slice::from_ref(a))?;
            // L_Q = (i/ħ)(-iħL_Q)
            let rhs = lq.apply(a)?.div_hbar(1)?.scale(&imag(1));
            if lhs != rhs {
                return Ok(differ(&format!("[{a}]"), &lhs, &rhs));
            }
            for b in &samples {
                let lhs = classical_bracket(&dl, &[a.clone(), b.clone()])?;
                let rhs = binary_koszul(&m, &p2, a, b)?;
                if lhs != rhs {
                    return Ok(differ(&format!("[{a}, {b}]"), &lhs, &rhs));
                }
            }
        }
        Ok(None)
    });
    vec![delta, brackets]
}

/// All multisets of size `k` drawn from `0..n`, as sorted index lists.
fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in multisets(n, k - 1) {
        let lo = rest.last().copied().unwrap_or(0);
        for i in lo..n {
            let mut v = rest.clone();
            v.push(i);
            out.push(v);
        }
    }
    out
}

fn thm_dp(ctx: &Context) -> Vec<Report> {
    let s = match certified(ctx, "D") {
        Ok(s) => s,
        Err(e) => return vec![Report::fail("thm.DP/D/certify", e.to_string()).with_seed(ctx.seed)],
    };
    let square = timed(ctx, "thm.DP/D/square", || {
        let sq = delta_p(&s)?.square()?;
        Ok((!sq.is_zero()).then(|| format!("Δ_P² = {sq}")))
    });
    let table = timed(ctx, "thm.DP/D/brackets", || {
        let dl = delta_p(&s)?;
        let gens = form_generators(s.forms());
        for k in 0..=4 {
            for idx in multisets(gens.len(), k) {
                let args: Vec<Poly> = idx.iter().map(|&i| gens[i].clone()).collect();
                let lhs = classical_bracket(&dl, &args)?;
                let rhs = higher_koszul_direct(&s, &args)?;
                if lhs != rhs {
                    let names: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                    return Ok(differ(&format!("[{}]", names.join(", ")), &lhs, &rhs));
                }
            }
        }
        Ok(None)
    });
    vec![square, table]
}

fn random_multivector(r: &mut Rng8, m: &SuperManifold) -> Poly {
    let vars: Vec<usize> = (0..2 * m.dim()).collect();
    let shape = Shape {
        max_degree: 3,
        max_terms: 3,
        max_hbar: 0,
    };
    let p = random::parity(r);
    random::homogeneous(r, &m.multivectors, &vars, p, &shape)
}

fn verscartan(ctx: &Context) -> Vec<Report> {
    let cases = [("1|1", fixtures::line_1_1()), ("2|0", fixtures::plane())];
    cases
        .into_iter()
        .enumerate()
        .map(|(i, (label, m))| {
            timed(ctx, &format!("verscartan/{label}"), || {
                let mut r = ctx.rng(10 + i as u64);
                for _ in 0..10 {
                    let t = random_multivector(&mut r, &m);
                    let s = random_multivector(&mut r, &m);
                    let lhs = double_commutator_with_d(&m, &t, &s)?;
                    let rhs = hat(&m, &m.schouten(&t, &s)?)?.mul_hbar(1).scale(&imag(-1));
                    if lhs != rhs {
                        return Ok(differ(&format!("T = {t}, S = {s}"), &lhs, &rhs));
                    }
                }
                Ok(None)
            })
        })
        .collect()
}

fn pencils(ctx: &Context) -> Vec<Report> {
    let mut out = Vec::new();
    for name in ["A", "D"] {
        let s = match certified(ctx, name) {
            Ok(s) => s,
            Err(e) => {
                out.push(Report::fail(
                    format!("pencils/{name}/certify"),
                    e.to_string(),
                ));
                continue;
            }
        };
        out.push(timed(ctx, &format!("pencils/{name}/forms"), || {
            let p = pencil_form_side(&s)?;
            if !p.forms_agree() {
                return Ok(differ("D̂_t", &p.operator, &p.conjugated));
            }
            let sq = p.square()?;
            Ok((!sq.is_zero()).then(|| format!("D̂_t² = {sq}")))
        }));
        out.push(timed(ctx, &format!("pencils/{name}/multivectors"), || {
            let p = pencil_multivector_side(&s)?;
            if !p.forms_agree() {
                return Ok(differ("D̂*_t", &p.operator, &p.conjugated));
            }
            let sq = p.square()?;
            Ok((!sq.is_zero()).then(|| format!("(D̂*_t)² = {sq}")))
        }));
    }
    out
}

fn modular(ctx: &Context) -> Vec<Report> {
    let s = match certified(ctx, "M") {
        Ok(s) => s,
        Err(e) => return vec![Report::fail("modular/M/certify", e.to_string()).with_seed(ctx.seed)],
    };
    let rho = match ctx.fixture("M") {
        Ok(f) => f.rho,
        Err(e) => return vec![Report::fail("modular/M/certify", e.to_string())],
    };
    let m = s.manifold.clone();
    let witness = {
        let r = naive_pencil_obstruction(&s, &rho);
        Report {
            check: "modular/M/naive-pencil-witness".into(),
            ..r
        }
        .with_seed(ctx.seed)
        .with_window(ctx.window)
    };
    let nonzero = timed(ctx, "modular/M/naive-pencil-fails", || {
        let (_, sq) = naive_pencil(&s, &rho)?;
        Ok(sq
            .is_zero()
            .then(|| "naive pencil squares to zero".to_string()))
    });
    let dhat = timed(ctx, "modular/M/d-hat", || {
        let a = d_hat_p(&s)?;
        let b = d_hat_p_explicit(&s)?;
        if a != b {
            return Ok(differ("D̂_P", &a, &b));
        }
        let sq = a.square()?;
        if !sq.is_zero() {
            return Ok(Some(format!("D̂_P² = {sq}")));
        }
        let mut r = ctx.rng(20);
        for _ in 0..5 {
            let t = random_multivector(&mut r, &m);
            let lhs = a.apply(&t)?;
            let rhs = b.apply(&t)?;
            if lhs != rhs {
                return Ok(differ(&format!("D̂_P({t})"), &lhs, &rhs));
            }
        }
        Ok(None)
    });
    vec![witness, nonzero, dhat]
}

fn duality_pair() -> Result<BundlePair> {
    BundlePair::standard(
        &[("x", Parity::Even), ("y", Parity::Odd)],
        &[Parity::Odd, Parity::Even],
    )
}

/// Parity of an operator, even when zero.
fn op_bit(l: &HbarOperator) -> u32 {
    l.parity().unwrap_or(Parity::Even).bit()
}

fn dualdo(ctx: &Context) -> Vec<Report> {
    let examples = timed(ctx, "dualdo/examples", || {
        for name in ["A", "B", "D"] {
            let f = ctx.fixture(name)?;
            let m = &f.manifold;
            let pair = BundlePair::of_manifold(m)?;
            let d = dual_operator(&pair, &de_rham(m))?;
            if d != divergence(m) {
                return Ok(differ("(-iħd)*", &d, &divergence(m)));
            }
            let ph = dual_operator(&pair, &hat(m, &f.p)?)?;
            let pm = HbarOperator::multiplication(&m.multivectors_phase, &f.p)?;
            if ph != pm {
                return Ok(differ("P̂*", &ph, &pm));
            }
        }
        Ok(None)
    });
    let anti = timed(ctx, "dualdo/anti-isomorphism", || {
        let pair = duality_pair()?;
        let mut r = ctx.rng(30);
        for _ in 0..20 {
            let a = random_operator(&mut r, &pair.phase, 1)?;
            let b = random_operator(&mut r, &pair.phase, 1)?;
            let lhs = dual_operator(&pair, &a.compose(&b)?)?;
            let mut rhs = dual_operator(&pair, &b)?.compose(&dual_operator(&pair, &a)?)?;
            if op_bit(&a) * op_bit(&b) == 1 {
                rhs = -&rhs;
            }
            if lhs != rhs {
                return Ok(differ(&format!("(AB)* for A = {a}, B = {b}"), &lhs, &rhs));
            }
        }
        Ok(None)
    });
    let grading = timed(ctx, "dualdo/bigrading-swap", || {
        let pair = duality_pair()?;
        let mut r = ctx.rng(31);
        for _ in 0..20 {
            let l = random_operator(&mut r, &pair.phase, 1)?;
            let dual = dual_operator(&pair, &l)?;
            let lhs = bigrading(&pair, &dual)?;
            let mut rhs = BTreeMap::new();
            for ((a, b), c) in bigrading(&pair, &l)? {
                rhs.insert((b, a), dual_operator(&pair, &c)?);
            }
            if lhs != rhs {
                return Ok(Some(format!("bi-degrees of {l} are not swapped")));
            }
        }
        Ok(None)
    });
    let classical = timed(ctx, "dualdo/classical-limit", || {
        let pair = duality_pair()?;
        let mut r = ctx.rng(32);
        for _ in 0..20 {
            let a = random_operator(&mut r, &pair.phase, 1)?;
            let b = random_operator(&mut r, &pair.phase, 1)?;
            let sa = a.principal_symbol();
            let lhs = dual_operator(&pair, &a)?.principal_symbol();
            let rhs = mackenzie_xu(&sa, &pair.phase_dual)?;
            if lhs != rhs {
                return Ok(differ(&format!("symbol of {a}*"), &lhs, &rhs));
            }
            let sb = b.principal_symbol();
            let lhs = mackenzie_xu(&canonical_poisson(&sa, &sb)?, &pair.phase_dual)?;
            let rhs = -canonical_poisson(
                &mackenzie_xu(&sa, &pair.phase_dual)?,
                &mackenzie_xu(&sb, &pair.phase_dual)?,
            )?;
            if lhs != rhs {
                return Ok(differ("bracket anti-preservation", &lhs, &rhs));
            }
        }
        Ok(None)
    });
    vec![examples, anti, grading, classical]
}

fn fiber_monomials(pair: &BundlePair, side: BundleSide) -> Vec<Poly> {
    let chart = pair.chart(side);
    (0u32..1 << pair.rank)
        .map(|mask| {
            let mut e = vec![0u16; chart.len()];
            for i in 0..pair.rank {
                if mask & (1 << i) != 0 {
                    e[pair.base + i] = 1;
                }
            }
            Poly::monomial(chart, &e, 0, coeff(1))
        })
        .collect()
}

fn fourier(ctx: &Context) -> Vec<Report> {
    let mut out = Vec::new();
    for rank in 1..=3usize {
        let id = |c: &str| format!("fourier/0|{rank}/{c}");
        let pair = match BundlePair::standard(&[("x", Parity::Even)], &vec![Parity::Odd; rank]) {
            Ok(p) => p,
            Err(e) => {
                out.push(Report::fail(id("setup"), e.to_string()));
                continue;
            }
        };
        out.push(timed(ctx, &id("round-trip"), || {
            let mut r = ctx.rng(40 + rank as u64);
            for _ in 0..5 {
                let f = random_function(&mut r, &pair.e);
                let d = Density::half(BundleSide::E, f.clone());
                let back = inverse_fourier(&pair, &fiber_fourier(&pair, &d)?)?;
                if back.value != f || back.mu != d.mu {
                    return Ok(differ("F⁻¹F", &back.value, &f));
                }
            }
            Ok(None)
        }));
        out.push(timed(ctx, &id("weights"), || {
            let mut r = ctx.rng(50 + rank as u64);
            for mu in [0i64, 1] {
                let mu = num::BigRational::from_integer(mu.into());
                let f = random_function(&mut r, &pair.e);
                let d = Density::new(BundleSide::E, f, mu.clone(), mu.clone());
                for (w, part) in d.weights(&pair)? {
                    let img = fiber_fourier(
                        &pair,
                        &Density {
                            value: part,
                            ..d.clone()
                        },
                    )?;
                    let ws: Vec<_> = img.weights(&pair)?.into_keys().collect();
                    if ws.iter().any(|x| *x != w) {
                        return Ok(Some(format!("weight {w} maps to {ws:?}")));
                    }
                }
            }
            Ok(None)
        }));
        out.push(timed(ctx, &id("pairing"), || {
            let half = |side, v| Density::half(side, v);
            let us = fiber_monomials(&pair, BundleSide::E);
            let ws = fiber_monomials(&pair, BundleSide::Dual);
            for f in &us {
                let fd = half(BundleSide::E, f.clone());
                let wf = fd.weights(&pair)?.into_keys().next();
                let mut nonzero = false;
                for g in &ws {
                    let gd = half(BundleSide::Dual, g.clone());
                    let wg = gd.weights(&pair)?.into_keys().next();
                    let v = pairing(&pair, &fd, &gd)?;
                    let balanced = match (&wf, &wg) {
                        (Some(a), Some(b)) => (a + b) == num::BigRational::from_integer(0.into()),
                        _ => false,
                    };
                    if !balanced && !v.is_zero() {
                        return Ok(Some(format!("⟨{f}, {g}⟩ = {v} with mismatched weights")));
                    }
                    nonzero |= !v.is_zero();
                }
                if !nonzero {
                    return Ok(Some(format!("{f} pairs to zero with every basis element")));
                }
            }
            let bad = Density::new(
                BundleSide::Dual,
                ws[0].clone(),
                num::BigRational::from_integer(0.into()),
                num::BigRational::new(1.into(), 2.into()),
            );
            match pairing(&pair, &half(BundleSide::E, us[0].clone()), &bad) {
                Err(Error::WeightMismatch(_)) => Ok(None),
                other => Ok(Some(format!("mismatched λ accepted: {other:?}"))),
            }
        }));
    }
    out
}

fn qupull(ctx: &Context) -> Vec<Report> {
    vec![timed(ctx, "qupull/linear", || {
        let pc = PullbackCharts::new(&[("x", Parity::Even)], 2, 2)?;
        let mut r = ctx.rng(60);
        let base = declare_chart(&[("x", Parity::Even)])?;
        for _ in 0..3 {
            let phi: Vec<Vec<Poly>> = (0..2)
                .map(|_| {
                    (0..2)
                        .map(|_| Poly::int(&base, rand::Rng::gen_range(&mut r, -3..=3)))
                        .collect()
                })
                .collect();
            let s = pc.linear_generating_function(&phi)?;
            for _ in 0..3 {
                let f2 = random_function(&mut r, &pc.e2);
                let g1 = random_function(&mut r, &pc.e1_dual);
                let q = quantum_pullback(&pc, &s, &f2)?;
                let l = linear_pullback(&pc, &phi, &f2)?;
                if q != l {
                    return Ok(differ("quantum pullback", &q, &l));
                }
                let qd = dual_quantum_pullback(&pc, &s, &g1)?;
                let ld = dual_linear_pullback(&pc, &phi, &g1)?;
                if qd != ld {
                    return Ok(differ("dual quantum pullback", &qd, &ld));
                }
                let lhs = pullback_pairing(&pc, true, &q, &g1)?;
                let rhs = pullback_pairing(&pc, false, &f2, &qd)?;
                if lhs != rhs {
                    return Ok(differ("pairing", &lhs, &rhs));
                }
            }
        }
        Ok(None)
    })]
}

fn sigma(ctx: &Context) -> Vec<Report> {
    let run = |quantum: bool| -> Witness {
        let fix = ctx.fixture("D")?;
        let s = fix.certify()?;
        let m = &s.manifold;
        let l = delta_p(&s)?;
        let twist = match fix.sigma {
            Some(sigma) => sigma.transport(&m.forms)?,
            // g = x2 dx1 is even with g² = 0.
            None => (&m.x_form(1) * &m.dx(0)).exp()?,
        };
        let a = TwistedOperator::new(l.clone(), Poly::one(&m.forms))?;
        let b = TwistedOperator::new(l, twist)?;
        let gens = form_generators(&m.forms);
        let mut witness = None;
        for k in 0..=3 {
            for idx in multisets(gens.len(), k) {
                let args: Vec<Poly> = idx.iter().map(|&i| gens[i].clone()).collect();
                let mode = if quantum {
                    Mode::Quantum
                } else {
                    Mode::Classical
                };
                let x = a.bracket(&args, mode)?;
                let y = b.bracket(&args, mode)?;
                if x != y {
                    if !quantum {
                        return Ok(differ("classical brackets", &x, &y));
                    }
                    witness.get_or_insert_with(|| format!("{:?}: {} vs {}", idx, x, y));
                }
            }
        }
        Ok(if quantum {
            witness
                .is_none()
                .then(|| "quantum brackets do not depend on σ".to_string())
        } else {
            None
        })
    };
    vec![
        timed(ctx, "sigma/classical-independent", || run(false)),
        timed(ctx, "sigma/quantum-dependent", || run(true)),
    ]
}

fn bvsym(ctx: &Context) -> Vec<Report> {
    let mut out = Vec::new();
    for name in ["A", "D"] {
        let s = match certified(ctx, name) {
            Ok(s) => s,
            Err(e) => {
                out.push(Report::fail(format!("BVsym/{name}/certify"), e.to_string()));
                continue;
            }
        };
        out.push(timed(ctx, &format!("BVsym/{name}/squares"), || {
            let (mv, fm) = symmetric_pair(&s)?;
            for (label, op) in [("multivectors", mv), ("forms", fm)] {
                let sq = op.square()?;
                if !sq.is_zero() {
                    return Ok(Some(format!("{label}: square {sq}")));
                }
            }
            Ok(None)
        }));
        out.push(timed(ctx, &format!("BVsym/{name}/duality"), || {
            let m = &s.manifold;
            let pair = BundlePair::of_manifold(m)?;
            let (_, fm) = symmetric_pair(&s)?;
            let neg = PinfStructure {
                p: -&s.p,
                ..s.clone()
            };
            let (mv_neg, _) = symmetric_pair(&neg)?;
            let d = dual_operator(&pair, &fm)?;
            Ok((d != mv_neg).then(|| format!("dual {d} vs {mv_neg}")))
        }));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(matches!(
            run_suite("nope", &Context::default()),
            Err(Error::UnknownSuite(_))
        ));
    }

    #[test]
    fn corrupted_fixture_fails_with_witness() {
        let mut ctx = Context::default();
        let m = fixtures::space();
        let bad = &(&(&m.x_mv(0) * &(&m.xs(0) * &m.xs(1)))
            + &(&m.x_mv(1) * &(&m.xs(1) * &m.xs(2))))
            + &(&m.x_mv(2) * &(&m.xs(0) * &m.xs(2)));
        ctx.fixtures.insert("A".into(), Fixture::new("A", m, bad));
        let reports = run_suite("ordpoiss", &ctx).unwrap();
        let failed: Vec<_> = reports.iter().filter(|r| !r.passed()).collect();
        assert_eq!(failed.len(), 1);
        assert_eq!(failed[0].check, "ordpoiss/A/certify");
        assert!(failed[0].witness.as_deref().unwrap().contains("[[P,P]]"));
        assert!(reports
            .iter()
            .filter(|r| r.check.starts_with("ordpoiss/B"))
            .all(|r| r.passed()));
    }

    #[test]
    fn same_seed_same_reports() {
        let strip =
            |v: Vec<Report>| -> Vec<Report> { v.into_iter().map(|r| r.with_millis(0)).collect() };
        let a = strip(run_suite("dualdo", &Context::new(1, 8)).unwrap());
        let b = strip(run_suite("dualdo", &Context::new(1, 8)).unwrap());
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].check <= w[1].check));
    }

    #[test]
    fn multiset_counts() {
        let counts: Vec<usize> = (0..=4).map(|k| multisets(4, k).len()).collect();
        assert_eq!(counts, vec![1, 4, 10, 20, 35]);
    }
}
