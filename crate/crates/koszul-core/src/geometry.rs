//! Charts for `M`, `ΠTM`, `ΠT*M`, vector bundles and their cotangent bundles,
//! together with the canonical brackets living on them.
//!
//! Sign conventions: the canonical Poisson bracket has `{p_a, x^b} = δ_a^b`
//! (so `{x, p} = -1` for an even pair), which is what makes the symbol of
//! `iħ⁻¹[A, B]` equal to `{symb A, symb B}`. The Schouten bracket is the
//! derived bracket `⟦T, S⟧ = {{D*, T}, S}` with `D* = (-1)^ã π^a p_a`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::superalgebra::{
    coeff, same_chart, Chart, ChartKind, GradedVariable, Parity, Poly, Role,
};

/// Name of the differential of a coordinate.
pub fn differential_name(name: &str) -> String {
    format!("d{name}")
}

/// Name of the antimomentum `x*` of a coordinate.
pub fn star_name(name: &str) -> String {
    match name.strip_prefix('x') {
        Some(rest) => format!("xs{rest}"),
        None => format!("{name}s"),
    }
}

/// Name of the conjugate momentum of a variable.
pub fn momentum_name(name: &str) -> String {
    if let Some(rest) = name.strip_prefix("dx").or_else(|| name.strip_prefix("xs")) {
        format!("pi{rest}")
    } else if let Some(rest) = name.strip_prefix('x') {
        format!("p{rest}")
    } else if let Some(rest) = name.strip_prefix('u') {
        format!("pu{rest}")
    } else if let Some(rest) = name.strip_prefix('w') {
        format!("pw{rest}")
    } else {
        format!("p_{name}")
    }
}

fn unique_name(mut name: String, taken: &[GradedVariable]) -> String {
    while taken.iter().any(|v| v.name == name) {
        name.push('_');
    }
    name
}

fn base_coordinates(c: &Chart) -> Result<Vec<GradedVariable>> {
    if *c.kind() != ChartKind::Base {
        return Err(Error::WrongChart("expected a base chart".into()));
    }
    Ok(c.vars().to_vec())
}

fn with_parameters(mut vars: Vec<GradedVariable>, params: &[&str]) -> Vec<GradedVariable> {
    for p in params {
        vars.push(GradedVariable::new(*p, Parity::Even).role(Role::Parameter));
    }
    vars
}

/// `ΠTM`: adds `dx^a` of opposite parity and form degree one.
pub fn pi_tangent_chart(c: &Chart) -> Result<Arc<Chart>> {
    pi_tangent_chart_with(c, &[])
}

pub fn pi_tangent_chart_with(c: &Chart, params: &[&str]) -> Result<Arc<Chart>> {
    let base = base_coordinates(c)?;
    let mut vars = base.clone();
    for v in &base {
        let name = unique_name(differential_name(&v.name), &vars);
        vars.push(
            GradedVariable::new(name, v.parity.flip())
                .with_weight("deg", 1)
                .series(),
        );
    }
    Chart::build(
        with_parameters(vars, params),
        ChartKind::PiTangent { dim: base.len() },
    )
}

/// `ΠT*M`: adds `x*_a` of opposite parity and multivector degree one.
pub fn pi_cotangent_chart(c: &Chart) -> Result<Arc<Chart>> {
    pi_cotangent_chart_with(c, &[])
}

pub fn pi_cotangent_chart_with(c: &Chart, params: &[&str]) -> Result<Arc<Chart>> {
    let base = base_coordinates(c)?;
    let mut vars = base.clone();
    for v in &base {
        let name = unique_name(star_name(&v.name), &vars);
        vars.push(
            GradedVariable::new(name, v.parity.flip())
                .with_weight("deg", 1)
                .series(),
        );
    }
    Chart::build(
        with_parameters(vars, params),
        ChartKind::PiCotangent { dim: base.len() },
    )
}

/// `T*C`: one momentum per coordinate, same parity, appended after all of
/// `C`'s variables so that normal-ordered symbols are canonical monomials.
pub fn cotangent_chart(c: &Arc<Chart>) -> Result<Arc<Chart>> {
    if matches!(c.kind(), ChartKind::Cotangent { .. }) || !c.momenta().is_empty() {
        return Err(Error::UnsupportedNesting(
            "cotangent of a cotangent chart".into(),
        ));
    }
    let mut vars = c.vars().to_vec();
    for k in c.coordinates() {
        let v = c.var(k);
        let name = unique_name(momentum_name(&v.name), &vars);
        vars.push(
            GradedVariable::new(name, v.parity)
                .role(Role::Momentum(k))
                .series(),
        );
    }
    Chart::build(vars, ChartKind::Cotangent { inner: c.clone() })
}

/// The chart a phase-space chart was built from.
pub fn inner_chart(phase: &Chart) -> Result<&Arc<Chart>> {
    match phase.kind() {
        ChartKind::Cotangent { inner } => Ok(inner),
        _ => Err(Error::WrongChart("expected a cotangent chart".into())),
    }
}

/// A vector bundle `E` over a base chart and its dual `E*`, with fiber
/// weights `w_E(u) = +1`, `w_E(w) = -1`.
pub fn bundle_charts(
    base: &[(&str, Parity)],
    fiber: &[Parity],
) -> Result<(Arc<Chart>, Arc<Chart>)> {
    let mk = |dual: bool| {
        let mut vars: Vec<GradedVariable> = base
            .iter()
            .map(|(n, p)| GradedVariable::new(*n, *p))
            .collect();
        for (i, p) in fiber.iter().enumerate() {
            let (name, w) = if dual {
                (format!("w{}", i + 1), -1)
            } else {
                (format!("u{}", i + 1), 1)
            };
            vars.push(GradedVariable::new(name, *p).with_weight("wE", w).series());
        }
        Chart::build(
            vars,
            ChartKind::Bundle {
                base: base.len(),
                rank: fiber.len(),
                dual,
            },
        )
    };
    Ok((mk(false)?, mk(true)?))
}

/// Embed a value of the inner chart into its cotangent chart.
pub fn lift(f: &Poly, phase: &Arc<Chart>) -> Result<Poly> {
    let inner = inner_chart(phase)?;
    if !same_chart(f.chart(), inner) {
        return Err(Error::ChartMismatch);
    }
    f.transport(phase)
}

/// Drop back to the inner chart; fails if momenta are present.
pub fn lower(f: &Poly, phase: &Arc<Chart>) -> Result<Poly> {
    let inner = inner_chart(phase)?;
    for k in phase.momenta() {
        if f.involves(k) {
            return Err(Error::MomentumInArgument(phase.var(k).name.clone()));
        }
    }
    f.transport(inner)
}

/// Set all momenta to zero and drop back to the inner chart.
pub fn restrict_to_base(f: &Poly, phase: &Arc<Chart>) -> Result<Poly> {
    lower(&f.restrict_zero(&phase.momenta()), phase)
}

fn require_phase(f: &Poly) -> Result<Vec<(usize, usize)>> {
    let c = f.chart();
    inner_chart(c)?;
    Ok(c.coordinates()
        .into_iter()
        .map(|k| {
            (
                k,
                c.momentum_of(k).expect("every coordinate has a momentum"),
            )
        })
        .collect())
}

/// Canonical even Poisson bracket on a cotangent chart.
pub fn canonical_poisson(f: &Poly, g: &Poly) -> Result<Poly> {
    let pairs = require_phase(f)?;
    if !same_chart(f.chart(), g.chart()) {
        return Err(Error::ChartMismatch);
    }
    let mut out = Poly::zero(f.chart()).with_window(f.window().min(g.window()));
    for (pf, fh) in f.parity_components() {
        for &(x, p) in &pairs {
            let a = f.chart().parity(x);
            let s1 = a.is_odd() && !pf.is_odd(); // (-1)^{a(f+1)}
            let s2 = a.is_odd() && pf.is_odd(); // (-1)^{a f}
            let t1 = &fh.derivative(p) * &g.derivative(x);
            let t2 = &fh.derivative(x) * &g.derivative(p);
            out = &out + &(if s1 { -&t1 } else { t1 });
            out = &out - &(if s2 { -&t2 } else { t2 });
        }
    }
    Ok(out)
}

/// The Hamiltonian `D* = (-1)^ã π^a p_a` on `T*(ΠT*M)`.
pub fn master_dstar(phase: &Arc<Chart>) -> Result<Poly> {
    let inner = inner_chart(phase)?;
    let dim = match inner.kind() {
        ChartKind::PiCotangent { dim } => *dim,
        _ => return Err(Error::WrongChart("D* lives on T*(ΠT*M)".into())),
    };
    let mut out = Poly::zero(phase);
    for a in 0..dim {
        let p = phase.momentum_of(a).unwrap();
        let pi = phase.momentum_of(dim + a).unwrap();
        let t = &Poly::var(phase, pi) * &Poly::var(phase, p);
        out = &out + &(if inner.is_odd(a) { -&t } else { t });
    }
    Ok(out)
}

/// The Hamiltonian `D = dx^a p_a` on `T*(ΠTM)`.
pub fn master_d(phase: &Arc<Chart>) -> Result<Poly> {
    let inner = inner_chart(phase)?;
    let dim = match inner.kind() {
        ChartKind::PiTangent { dim } => *dim,
        _ => return Err(Error::WrongChart("D lives on T*(ΠTM)".into())),
    };
    let mut out = Poly::zero(phase);
    for a in 0..dim {
        let p = phase.momentum_of(a).unwrap();
        out = &out + &(&Poly::var(phase, dim + a) * &Poly::var(phase, p));
    }
    Ok(out)
}

/// Canonical odd Schouten bracket on `ΠT*M`, obtained as the derived
/// bracket of `D*` on `phase = T*(ΠT*M)`.
pub fn schouten_on(phase: &Arc<Chart>, t: &Poly, s: &Poly) -> Result<Poly> {
    let dstar = master_dstar(phase)?;
    let tl = lift(t, phase)?;
    let sl = lift(s, phase)?;
    let inner = canonical_poisson(&dstar, &tl)?;
    lower(&canonical_poisson(&inner, &sl)?, phase)
}

pub fn canonical_schouten(t: &Poly, s: &Poly) -> Result<Poly> {
    let phase = cotangent_chart(t.chart())?;
    schouten_on(&phase, t, s)
}

/// Mackenzie–Xu map `T*E → T*(E*)`: `p_a ↦ -p_a`, `p_i ↦ w_i`,
/// `u^i ↦ (-1)^ĩ p^i`.
pub fn mackenzie_xu(h: &Poly, target: &Arc<Chart>) -> Result<Poly> {
    let src = h.chart();
    let (sb, rank) = match inner_chart(src)?.kind() {
        ChartKind::Bundle {
            base,
            rank,
            dual: false,
        } => (*base, *rank),
        _ => return Err(Error::WrongChart("expected T*E of a bundle chart".into())),
    };
    match inner_chart(target)?.kind() {
        ChartKind::Bundle {
            base,
            rank: r,
            dual: true,
        } if *base == sb && *r == rank => {}
        _ => {
            return Err(Error::WrongChart(
                "expected T*(E*) of the dual bundle".into(),
            ))
        }
    }
    let mut images = vec![Poly::zero(target); src.len()];
    for a in 0..sb {
        images[a] = Poly::var(target, a);
        let p = src.momentum_of(a).unwrap();
        images[p] = -Poly::var(target, target.momentum_of(a).unwrap());
    }
    for i in 0..rank {
        let u = sb + i;
        let pw = target.momentum_of(sb + i).unwrap();
        let img = Poly::var(target, pw);
        images[u] = if src.is_odd(u) { -img } else { img };
        images[src.momentum_of(u).unwrap()] = Poly::var(target, sb + i);
    }
    h.substitute_into(target, &images)
}

/// Inverse of [`mackenzie_xu`].
pub fn mackenzie_xu_inverse(h: &Poly, target: &Arc<Chart>) -> Result<Poly> {
    let src = h.chart();
    let (sb, rank) = match inner_chart(src)?.kind() {
        ChartKind::Bundle {
            base,
            rank,
            dual: true,
        } => (*base, *rank),
        _ => return Err(Error::WrongChart("expected T*(E*)".into())),
    };
    let mut images = vec![Poly::zero(target); src.len()];
    for a in 0..sb {
        images[a] = Poly::var(target, a);
        images[src.momentum_of(a).unwrap()] = -Poly::var(target, target.momentum_of(a).unwrap());
    }
    for i in 0..rank {
        let w = sb + i;
        // w_i ↦ p_i, p^i ↦ (-1)^ĩ u^i
        images[w] = Poly::var(target, target.momentum_of(sb + i).unwrap());
        let u = Poly::var(target, sb + i);
        images[src.momentum_of(w).unwrap()] = if src.is_odd(w) { -u } else { u };
    }
    h.substitute_into(target, &images)
}

/// All charts attached to one base manifold.
#[derive(Clone, Debug)]
pub struct SuperManifold {
    pub base: Arc<Chart>,
    /// `ΠTM` (forms), with parameters appended.
    pub forms: Arc<Chart>,
    /// `ΠT*M` (multivectors), with parameters appended.
    pub multivectors: Arc<Chart>,
    /// `T*(ΠTM)`.
    pub forms_phase: Arc<Chart>,
    /// `T*(ΠT*M)`.
    pub multivectors_phase: Arc<Chart>,
}

impl SuperManifold {
    pub fn new(base: Arc<Chart>, params: &[&str]) -> Result<SuperManifold> {
        let forms = pi_tangent_chart_with(&base, params)?;
        let multivectors = pi_cotangent_chart_with(&base, params)?;
        let forms_phase = cotangent_chart(&forms)?;
        let multivectors_phase = cotangent_chart(&multivectors)?;
        Ok(SuperManifold {
            base,
            forms,
            multivectors,
            forms_phase,
            multivectors_phase,
        })
    }

    pub fn from_parities(names: &[(&str, Parity)]) -> Result<SuperManifold> {
        let base = crate::superalgebra::declare_chart(names)?;
        SuperManifold::new(base, &["t"])
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn parity(&self, a: usize) -> Parity {
        self.base.parity(a)
    }

    pub fn x_form(&self, a: usize) -> Poly {
        Poly::var(&self.forms, a)
    }

    pub fn dx(&self, a: usize) -> Poly {
        Poly::var(&self.forms, self.dim() + a)
    }

    pub fn x_mv(&self, a: usize) -> Poly {
        Poly::var(&self.multivectors, a)
    }

    pub fn xs(&self, a: usize) -> Poly {
        Poly::var(&self.multivectors, self.dim() + a)
    }

    pub fn t_forms(&self) -> Poly {
        Poly::named(&self.forms, "t").expect("pencil parameter present")
    }

    pub fn t_multivectors(&self) -> Poly {
        Poly::named(&self.multivectors, "t").expect("pencil parameter present")
    }

    /// A base function as a form (degree zero).
    pub fn function_to_forms(&self, f: &Poly) -> Result<Poly> {
        f.transport(&self.forms)
    }

    pub fn function_to_multivectors(&self, f: &Poly) -> Result<Poly> {
        f.transport(&self.multivectors)
    }

    /// `P* = P(x, π)` on `T*(ΠTM)`, π being the momenta of `dx`.
    pub fn p_star(&self, p: &Poly) -> Result<Poly> {
        if !same_chart(p.chart(), &self.multivectors) {
            return Err(Error::WrongChart("P must be a multivector".into()));
        }
        let n = self.dim();
        let images: Vec<Poly> = (0..self.multivectors.len())
            .map(|k| {
                if k < n {
                    Poly::var(&self.forms_phase, k)
                } else if k < 2 * n {
                    let pi = self.forms_phase.momentum_of(k).unwrap();
                    Poly::var(&self.forms_phase, pi)
                } else {
                    Poly::named(&self.forms_phase, &self.multivectors.var(k).name).unwrap()
                }
            })
            .collect();
        p.substitute_into(&self.forms_phase, &images)
    }

    pub fn master_d(&self) -> Poly {
        master_d(&self.forms_phase).unwrap()
    }

    pub fn master_dstar(&self) -> Poly {
        master_dstar(&self.multivectors_phase).unwrap()
    }

    pub fn schouten(&self, t: &Poly, s: &Poly) -> Result<Poly> {
        schouten_on(&self.multivectors_phase, t, s)
    }

    /// `(H_P, H_P*) = ({D, P*}, {D*, P})`.
    pub fn koszul_masters(&self, p: &Poly) -> Result<(Poly, Poly)> {
        if p.parity() != Some(Parity::Even) {
            return Err(Error::ParityMismatch("P must be even".into()));
        }
        let hp = canonical_poisson(&self.master_d(), &self.p_star(p)?)?;
        let pl = lift(p, &self.multivectors_phase)?;
        let hps = canonical_poisson(&self.master_dstar(), &pl)?;
        Ok((hp, hps))
    }
}

/// The explicit formula `dx^a ∂P/∂x^a(x,π) + (-1)^ã ∂P/∂x*_a(x,π) p_a`.
pub fn koszul_master_explicit(m: &SuperManifold, p: &Poly) -> Result<Poly> {
    let n = m.dim();
    let mut out = Poly::zero(&m.forms_phase);
    for a in 0..n {
        let dpx = m.p_star(&p.derivative(a))?;
        let dps = m.p_star(&p.derivative(n + a))?;
        let dxa = Poly::var(&m.forms_phase, n + a);
        let pa = Poly::var(&m.forms_phase, m.forms_phase.momentum_of(a).unwrap());
        out = &out + &(&dxa * &dpx);
        let t = &dps * &pa;
        out = &out + &(if m.parity(a).is_odd() { -&t } else { t });
    }
    let _ = coeff(0);
    Ok(out)
}
