//! The standard structures used by the check suites. Nothing here is taken
//! on trust: [`Fixture::certify`] runs `validate_pinf` every time.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::geometry::SuperManifold;
use crate::koszul::{validate_pinf, PinfStructure};
use crate::superalgebra::{Parity, Poly};

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub manifold: SuperManifold,
    pub p: Poly,
    /// Volume coefficient `ρ(x)` on the base.
    pub rho: Poly,
    /// Twist `σ` on forms for the σ-independence checks; `None` picks a default.
    pub sigma: Option<Poly>,
}

impl Fixture {
    pub fn new(name: &str, manifold: SuperManifold, p: Poly) -> Fixture {
        let rho = Poly::one(&manifold.base);
        Fixture {
            name: name.to_string(),
            manifold,
            p,
            rho,
            sigma: None,
        }
    }

    pub fn certify(&self) -> Result<PinfStructure> {
        validate_pinf(&self.manifold, &self.p)
    }

    pub fn with_window(mut self, window: u32) -> Fixture {
        self.p = self.p.with_window(window);
        self
    }

    /// Components of `P` by degree in the antimomenta `x*`.
    pub fn by_degree(&self) -> BTreeMap<u32, Poly> {
        let n = self.manifold.dim();
        let xs: Vec<usize> = (n..2 * n).collect();
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, c) in self.p.terms() {
            let mut t = Poly::zero(&self.manifold.multivectors);
            t.add_term(m.clone(), c.clone());
            let slot = out
                .entry(m.degree_in(&xs))
                .or_insert_with(|| Poly::zero(&self.manifold.multivectors));
            *slot = &*slot + &t;
        }
        out
    }
}

pub fn plane() -> SuperManifold {
    SuperManifold::from_parities(&[("x1", Parity::Even), ("x2", Parity::Even)]).unwrap()
}

pub fn space() -> SuperManifold {
    SuperManifold::from_parities(&[
        ("x1", Parity::Even),
        ("x2", Parity::Even),
        ("x3", Parity::Even),
    ])
    .unwrap()
}

/// `ℝ^{1|1}` with even `x1` and odd `x2`.
pub fn line_1_1() -> SuperManifold {
    SuperManifold::from_parities(&[("x1", Parity::Even), ("x2", Parity::Odd)]).unwrap()
}

/// Constant bivector `x*_1 x*_2` on `ℝ²`.
pub fn fix_a() -> Fixture {
    let m = plane();
    let p = &m.xs(0) * &m.xs(1);
    Fixture::new("A", m, p)
}

/// Lie–Poisson structure of the Heisenberg algebra, `{x1, x2} = ±x3`.
pub fn fix_b() -> Fixture {
    let m = space();
    let p = &(&m.x_mv(2) * &m.xs(0)) * &m.xs(1);
    Fixture::new("B", m, p)
}

/// `P = P₁ + P₂` on `ℝ^{1|1}`: `P₁ = x1 x*_2` is the homological field
/// `Q = ±x1 ∂/∂x2`, `P₂ = x1 (x*_2)²` a compatible even bivector.
pub fn fix_c() -> Fixture {
    let m = line_1_1();
    let s2 = m.xs(1);
    let x = m.x_mv(0);
    let p = &(&x * &s2) + &(&x * &s2.pow(2));
    Fixture::new("C", m, p)
}

/// `x1 x*_2 + (x*_2)² + x1 (x*_2)³` on `ℝ^{1|1}`, with a nonzero ternary
/// bracket.
pub fn fix_d() -> Fixture {
    let m = line_1_1();
    let s2 = m.xs(1);
    let x = m.x_mv(0);
    let p = &(&(&x * &s2) + &s2.pow(2)) + &(&x * &s2.pow(3));
    Fixture::new("D", m, p)
}

/// `x1 x*_2 x*_1` on `ℝ²`: Poisson, with nonzero divergence `δ(P)`.
pub fn fix_m() -> Fixture {
    let m = plane();
    let p = &(&m.x_mv(0) * &m.xs(1)) * &m.xs(0);
    Fixture::new("M", m, p)
}

pub fn standard() -> BTreeMap<String, Fixture> {
    [fix_a(), fix_b(), fix_c(), fix_d(), fix_m()]
        .into_iter()
        .map(|f| (f.name.clone(), f))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hbar_ops::delta_mv;
    use crate::koszul::higher_poisson;

    #[test]
    fn all_fixtures_certify() {
        for f in standard().values() {
            assert!(f.certify().is_ok(), "fixture {} rejected", f.name);
        }
    }

    #[test]
    fn d_has_ternary_bracket_and_m_has_divergence() {
        let d = fix_d().certify().unwrap();
        let x2 = Poly::var(&d.manifold.base, 1);
        let t = higher_poisson(&d, &[x2.clone(), x2.clone(), x2]).unwrap();
        assert!(!t.is_zero());
        let m = fix_m();
        assert!(!delta_mv(&m.p).unwrap().is_zero());
    }
}
