use proptest::prelude::*;

use speedlab::coeffs::{BinOp, CoefficientField, Expr, Func};
use speedlab::eigen::{lambda_curve, principal_eigen, EigenOptions};
use speedlab::pde::{period_map, CellState, Form, LineModel, LinearCellProblem};
use speedlab::{Exec, ModelExprs, SystemSpec};

fn expr_tree() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0.0f64..1e3).prop_map(Expr::Num),
        Just(Expr::T),
        Just(Expr::X),
        Just(Expr::Pi),
        Just(Expr::E),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        let op = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div), Just(BinOp::Pow)];
        let func = prop_oneof![Just(Func::Sin), Just(Func::Cos), Just(Func::Exp), Just(Func::Abs)];
        prop_oneof![
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| Expr::Bin(o, Box::new(a), Box::new(b))),
            (func, inner).prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
        ]
    })
}

fn field(expr: &str, nt: usize, nx: usize) -> CoefficientField {
    CoefficientField::build(expr, 1.0, 1.0, nt, nx).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_expressions_reparse(e in expr_tree()) {
        let again = Expr::parse(&e.to_string()).unwrap();
        prop_assert_eq!(again, e);
    }

    #[test]
    fn period_map_preserves_order(
        lower in prop::collection::vec(0.0f64..2.0, 16),
        lift in prop::collection::vec(0.0f64..1.0, 16),
        amp in 0.0f64..1.5,
    ) {
        let (nt, nx) = (20, 16);
        let d = field("1 + 0.3*cos(2*pi*x)", nt, nx);
        let g = field(&format!("{amp}*sin(2*pi*(x - t))"), nt, nx);
        let h = field("cos(2*pi*x) + sin(2*pi*t)", nt, nx);
        let p = LinearCellProblem::new(&d, &g, &h).unwrap();
        let upper: Vec<f64> = lower.iter().zip(&lift).map(|(a, b)| a + b).collect();
        let lo = period_map(&CellState::new(0.0, lower), &p).unwrap();
        let hi = period_map(&CellState::new(0.0, upper), &p).unwrap();
        for (a, b) in lo.values.iter().zip(&hi.values) {
            prop_assert!(b - a >= -1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn line_evolution_commutes_with_period_shifts(
        center in -2.0f64..2.0,
        width in 0.3f64..1.0,
        height in 0.1f64..1.0,
        shift in 1i64..3,
    ) {
        let mut m = ModelExprs::constants(1.0, 0.5, 2.0, 1.0, 1.0, 0.3, 1.2, 1.0);
        m.b1 = "2 + 0.5*cos(2*pi*x)".into();
        m.g1 = "0.4*sin(2*pi*x)".into();
        let sys = SystemSpec::from_exprs(&m, 20, 8).unwrap();
        let model = LineModel::aligned(&sys, -24.0, 24.0).unwrap();
        let n = model.len();
        let bump = |x: f64| height * (-((x - center) / width).powi(2)).exp();
        let mut a = model.zero_state(0.0, Form::Competitive);
        let mut b = model.zero_state(0.0, Form::Competitive);
        for i in 0..n {
            let x = model.x(i);
            a.first[i] = bump(x);
            b.first[i] = bump(x - shift as f64);
            a.second[i] = 0.5 * bump(x + 1.0);
            b.second[i] = 0.5 * bump(x + 1.0 - shift as f64);
        }
        model.evolve(&mut a, 1.0).unwrap();
        model.evolve(&mut b, 1.0).unwrap();
        let k = shift as usize * sys.nx();
        for i in n / 4..3 * n / 4 {
            prop_assert!((b.first[i + k] - a.first[i]).abs() < 1e-10);
            prop_assert!((b.second[i + k] - a.second[i]).abs() < 1e-10);
        }
    }
}

#[test]
fn time_discretization_is_first_order() {
    // the spatial grid is fixed, so the limit is the semi-discrete value
    let nx = 32;
    let lambda = |nt| {
        principal_eigen(&field("1", nt, nx), &field("0", nt, nx), &field("cos(2*pi*x)", nt, nx))
            .unwrap()
            .lambda
    };
    let l: Vec<f64> = [100, 200, 400, 800].iter().map(|&nt| lambda(nt)).collect();
    let e: Vec<f64> = l.windows(2).map(|w| w[0] - w[1]).collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.8..2.2).contains(&ratio), "ratio {ratio} from {l:?}");
    }
}

#[test]
fn sequential_and_parallel_sweeps_agree() {
    let (nt, nx) = (20, 16);
    let d = field("1 + 0.2*sin(2*pi*x)", nt, nx);
    let g = field("0.3*cos(2*pi*t)", nt, nx);
    let m = field("1 + cos(2*pi*x)", nt, nx);
    let mus: Vec<f64> = (0..8).map(|i| 0.25 * i as f64).collect();
    let opts = EigenOptions::default();
    let a = lambda_curve(&d, &g, &m, &mus, &opts, Exec::Sequential).unwrap();
    let b = lambda_curve(&d, &g, &m, &mus, &opts, Exec::Parallel).unwrap();
    assert_eq!(a, b);
}
