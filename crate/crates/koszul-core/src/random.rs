//! Seeded generators for property checks: degree at most 3, integer
//! coefficients in `[-3, 3]`.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::superalgebra::{coeff, Chart, Monomial, Parity, Poly};

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug)]
pub struct Shape {
    pub max_degree: u32,
    pub max_terms: usize,
    pub max_hbar: i32,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            max_degree: 3,
            max_terms: 4,
            max_hbar: 0,
        }
    }
}

fn nonzero_coeff(r: &mut Rng8) -> i64 {
    loop {
        let c = r.gen_range(-3..=3);
        if c != 0 {
            return c;
        }
    }
}

/// Random polynomial in the listed variables.
pub fn poly(r: &mut Rng8, chart: &Arc<Chart>, vars: &[usize], shape: &Shape) -> Poly {
    let mut out = Poly::zero(chart);
    let terms = r.gen_range(1..=shape.max_terms.max(1));
    for _ in 0..terms {
        let mut exps = vec![0u16; chart.len()];
        if !vars.is_empty() {
            let deg = r.gen_range(0..=shape.max_degree);
            for _ in 0..deg {
                let k = vars[r.gen_range(0..vars.len())];
                if chart.is_odd(k) && exps[k] > 0 {
                    continue;
                }
                exps[k] += 1;
            }
        }
        let h = if shape.max_hbar > 0 {
            r.gen_range(0..=shape.max_hbar)
        } else {
            0
        };
        out.add_term(Monomial::new(exps, h), coeff(nonzero_coeff(r)));
    }
    out
}

/// Random polynomial of the requested parity, never zero unless no
/// monomial of that parity exists in the listed variables.
pub fn homogeneous(
    r: &mut Rng8,
    chart: &Arc<Chart>,
    vars: &[usize],
    parity: Parity,
    shape: &Shape,
) -> Poly {
    for _ in 0..64 {
        let p = poly(r, chart, vars, shape);
        let (even, odd) = p.split_parity();
        let pick = if parity.is_odd() { odd } else { even };
        if !pick.is_zero() {
            return pick;
        }
    }
    Poly::zero(chart)
}

pub fn parity(r: &mut Rng8) -> Parity {
    Parity::from_bit(r.gen_bool(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superalgebra::declare_chart;

    #[test]
    fn deterministic_and_bounded() {
        let c = declare_chart(&[("x", Parity::Even), ("xi", Parity::Odd)]).unwrap();
        let a = poly(&mut rng(7), &c, &[0, 1], &Shape::default());
        let b = poly(&mut rng(7), &c, &[0, 1], &Shape::default());
        assert_eq!(a, b);
        assert!(a.total_degree() <= 3);
        let h = homogeneous(&mut rng(3), &c, &[0, 1], Parity::Odd, &Shape::default());
        assert_eq!(h.parity(), Some(Parity::Odd));
    }
}
