use proptest::prelude::*;

use sigmak::psi::{parse, BinOp, Func, Node};

fn func() -> impl Strategy<Value = Func> {
    prop_oneof![
        Just(Func::Sin),
        Just(Func::Cos),
        Just(Func::Exp),
        Just(Func::Sqrt),
        Just(Func::Abs),
        Just(Func::Log),
    ]
}

fn binop() -> impl Strategy<Value = BinOp> {
    prop_oneof![
        Just(BinOp::Add),
        Just(BinOp::Sub),
        Just(BinOp::Mul),
        Just(BinOp::Div),
        Just(BinOp::Pow),
    ]
}

fn ast(n_vars: usize) -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![
        (0u32..100_000).prop_map(|v| Node::Num(v as f64 / 64.0)),
        (0..n_vars).prop_map(Node::Var),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Node::Neg(Box::new(a))),
            (binop(), inner.clone(), inner.clone()).prop_map(|(op, a, b)| Node::Bin(
                op,
                Box::new(a),
                Box::new(b)
            )),
            (func(), inner).prop_map(|(f, a)| Node::Call(f, Box::new(a))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn display_parses_back_to_the_same_tree(tree in ast(3)) {
        let text = tree.to_string();
        let parsed = parse(&text, 3).unwrap();
        prop_assert_eq!(parsed.root(), &tree);
    }
}

/// A flat expression `[-]a0 op1 [-]a1 op2 ... [-]am` evaluated directly from
/// the precedence rules: `^` binds tightest and to the right, a leading `-`
/// negates the whole power chain to its right, then `*` `/`, then `+` `-`.
#[derive(Debug, Clone)]
struct Flat {
    operands: Vec<(bool, f64)>,
    ops: Vec<char>,
}

impl Flat {
    fn text(&self) -> String {
        let mut s = String::new();
        for (i, (neg, v)) in self.operands.iter().enumerate() {
            if i > 0 {
                s.push_str(&format!(" {} ", self.ops[i - 1]));
            }
            if *neg {
                s.push('-');
            }
            s.push_str(&format!("{v}"));
        }
        s
    }

    fn oracle(&self) -> f64 {
        // Collapse power chains right to left.
        let m = self.operands.len();
        let mut values: Vec<f64> = Vec::new();
        let mut mul_ops: Vec<char> = Vec::new();
        let mut i = 0;
        while i < m {
            let mut j = i;
            while j < m - 1 && self.ops[j] == '^' {
                j += 1;
            }
            let mut acc = None;
            for p in (i..=j).rev() {
                let (neg, v) = self.operands[p];
                let raw = match acc {
                    None => v,
                    Some(e) => f64::powf(v, e),
                };
                acc = Some(if neg { -raw } else { raw });
            }
            values.push(acc.unwrap());
            if j < m - 1 {
                mul_ops.push(self.ops[j]);
            }
            i = j + 1;
        }
        // Products and quotients, then sums, each left to right.
        let mut terms = vec![values[0]];
        let mut add_ops = Vec::new();
        for (op, v) in mul_ops.iter().zip(&values[1..]) {
            match op {
                '*' => *terms.last_mut().unwrap() *= v,
                '/' => *terms.last_mut().unwrap() /= v,
                _ => {
                    add_ops.push(*op);
                    terms.push(*v);
                }
            }
        }
        let mut total = terms[0];
        for (op, t) in add_ops.iter().zip(&terms[1..]) {
            if *op == '+' {
                total += t;
            } else {
                total -= t;
            }
        }
        total
    }
}

fn flat() -> impl Strategy<Value = Flat> {
    (1usize..=4).prop_flat_map(|ops| {
        (
            prop::collection::vec(
                (any::<bool>(), (32u32..192).prop_map(|v| v as f64 / 64.0)),
                ops + 1,
            ),
            prop::collection::vec(
                prop_oneof![Just('+'), Just('-'), Just('*'), Just('/'), Just('^')],
                ops,
            ),
        )
            .prop_map(|(operands, ops)| Flat { operands, ops })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn precedence_matches_oracle(e in flat()) {
        let want = e.oracle();
        let got = parse(&e.text(), 1).unwrap().eval(&[0.0]);
        if want.is_finite() {
            let got = got.unwrap();
            prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()), "{} -> {got} vs {want}", e.text());
        } else {
            prop_assert!(got.is_err());
        }
    }
}

#[test]
fn oracle_agrees_on_hand_cases() {
    let cases = [
        ("2 ^ 3 ^ 2", 512.0),
        ("-2 ^ 2", -4.0),
        ("2 ^ -1", 0.5),
        ("8 / 2 / 2", 2.0),
        ("1 - 2 - 3", -4.0),
        ("2 * 3 ^ 2 + 1", 19.0),
    ];
    for (text, want) in cases {
        assert_eq!(
            parse(text, 1).unwrap().eval(&[0.0]).unwrap(),
            want,
            "{text}"
        );
    }
}
