use std::collections::BTreeMap;

use koszul_cli::expr::Parser;
use koszul_core::geometry::cotangent_chart;
use koszul_core::random::{self, Shape};
use koszul_core::superalgebra::{declare_chart, rational, Coeff, Parity, Poly};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_polynomials_reparse(seed in any::<u64>(), odd: bool, max_hbar in 0i32..3) {
        let base = declare_chart(&[("x1", Parity::Even), ("x2", Parity::Odd)]).unwrap();
        let phase = cotangent_chart(&base).unwrap();
        let shape = Shape { max_hbar, ..Shape::default() };
        let vars: Vec<usize> = (0..phase.len()).collect();
        let p = random::homogeneous(&mut random::rng(seed), &phase, &vars, Parity::from_bit(odd), &shape);
        let q = &p * &Poly::constant(&phase, Coeff::new(rational(-3, 7), rational(1, 2)));
        let macros = BTreeMap::new();
        let parser = Parser::new(&phase, &macros);
        for e in [p, q] {
            let text = e.to_string();
            prop_assert_eq!(parser.parse(&text).unwrap(), e, "{}", text);
        }
    }
}
