use super::*;

fn nf(s: &str) -> NormalForm {
    NormalForm::parse(s).unwrap()
}

fn zero(s: &str) -> bool {
    nf(s).is_zero()
}

#[test]
fn parse_sum_and_product() {
    assert_eq!(parse("x + y").unwrap(), Expr::Sum(vec![Expr::var("x"), Expr::var("y")]));
    let e = parse("5*u0_x*u0_xx").unwrap();
    let Expr::Product(fs) = &e else {
        panic!("expected a product, got {e:?}");
    };
    assert_eq!(fs.len(), 3);
    assert_eq!(fs[0], Expr::int(5));
    let names: Vec<String> = fs[1..].iter().map(|f| f.to_string()).collect();
    assert_eq!(names, ["u0_x", "u0_xx"]);
}

#[test]
fn parse_reports_offset() {
    match parse("arctan(y/x") {
        Err(KernelError::Syntax { position, .. }) => assert_eq!(position, 11),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(
        parse("tanh(x)"),
        Err(KernelError::UnknownFunction { position: 1, .. })
    ));
    assert!(matches!(parse("x +"), Err(KernelError::Syntax { position: 4, .. })));
}

#[test]
fn derivative_symbols_commute() {
    let a = parse("u0_xy").unwrap();
    let b = parse("u0_yx").unwrap();
    assert_eq!(a, b);
    assert_eq!(parse("u0_{x,y}").unwrap(), a);
}

#[test]
fn diff_examples() {
    assert_eq!(diff(&parse("x^2").unwrap(), "x").unwrap().normalize().unwrap(), nf("2*x"));
    let d = diff(&parse("arctan(y/x)").unwrap(), "x").unwrap();
    assert!(Expr::sub(d, parse("-y/(x^2+y^2)").unwrap()).is_zero().unwrap());
    let d = diff(&parse("u0*u0_xxx").unwrap(), "x").unwrap();
    assert!(Expr::sub(d, parse("u0_x*u0_xxx + u0*u0_xxxx").unwrap()).is_zero().unwrap());
}

#[test]
fn diff_transcendentals() {
    assert_eq!(nf("log(x^2+y^2)").diff("y"), nf("2*y/(x^2+y^2)"));
    assert_eq!(nf("exp(-b*x)*sin(b*y)").diff("x"), nf("-b*exp(-b*x)*sin(b*y)"));
    assert_eq!(nf("cos(b*x)").diff("x"), nf("-b*sin(b*x)"));
    assert_eq!(nf("log(x)").diff("x"), nf("1/x"));
    assert!(nf("a1*Re").diff("x").is_zero());
}

#[test]
fn diff_composite_function() {
    let d = nf("U0").diff("w");
    assert_eq!(d.to_string(), "U0_w");
}

#[test]
fn substitute_examples() {
    let e = substitute(&parse("x + y").unwrap(), &[(Atom::Independent("x".into()), Expr::int(2))]);
    assert_eq!(e.normalize().unwrap(), nf("2 + y"));
    let Expr::Atom(v0y) = parse("v0_y").unwrap() else {
        unreachable!()
    };
    let e = substitute(&parse("v0_y").unwrap(), &[(v0y, parse("-u0_x").unwrap())]);
    assert_eq!(e, parse("-u0_x").unwrap());
    let e = parse("x*sin(y)").unwrap();
    assert_eq!(substitute(&e, &[]), e);
}

#[test]
fn substitute_is_single_pass() {
    let x = Atom::Independent("x".into());
    let y = Atom::Independent("y".into());
    let rules = [(x.clone(), Expr::var("y")), (y, Expr::int(3))];
    let once = substitute(&parse("x").unwrap(), &rules);
    assert_eq!(once, Expr::var("y"));
    assert_eq!(substitute_fixpoint(&parse("x").unwrap(), &rules).unwrap(), Expr::int(3));
    let bad = [(x, parse("x + 1").unwrap())];
    assert!(matches!(
        substitute_fixpoint(&parse("x").unwrap(), &bad),
        Err(KernelError::CircularSubstitution(_))
    ));
}

#[test]
fn normalize_examples() {
    assert!(zero("sin(b*x)^2 + cos(b*x)^2 - 1"));
    assert!(zero("log((y/x)^2+1) + 2*log(x) - log(x^2+y^2)"));
    assert!(zero("(x^2-y^2)/(x-y) - (x+y)"));
}

#[test]
fn normalize_exp_folding() {
    assert!(zero("exp(b*x)*exp(-b*x) - 1"));
    assert!(zero("exp(b*x)^3 - exp(3*b*x)"));
    assert!(zero("exp(x)*exp(y) - exp(x+y)"));
    assert!(!zero("exp(x) - exp(y)"));
}

#[test]
fn normalize_parity_and_special_values() {
    assert!(zero("sin(-x) + sin(x)"));
    assert!(zero("cos(-x) - cos(x)"));
    assert!(zero("arctan(-y/x) + arctan(y/x)"));
    assert!(zero("exp(0) + sin(0) + arctan(0) - cos(0)"));
    assert!(zero("log(exp(x)) - x"));
    assert!(zero("log(x*y) - log(x) - log(y)"));
}

#[test]
fn normalize_rejects_division_by_zero() {
    assert!(matches!(NormalForm::parse("1/(x-x)"), Err(KernelError::DivisionByZero)));
    assert!(matches!(NormalForm::parse("log(0)"), Err(KernelError::LogOfZero)));
}

#[test]
fn normalize_is_idempotent_on_examples() {
    for s in [
        "(x^2-y^2)/(x-y)",
        "a1/(x^2+y^2) - 2*a2*x*log(x)",
        "sin(b*x)^3*exp(-b*y)",
        "-k2/(k1^2+1)^2 + u0_xy/(x+1)",
        "3/4*x^-2 - y",
    ] {
        let n = nf(s);
        let again = n.to_expr().normalize().unwrap();
        assert_eq!(n, again, "{s}");
    }
}

#[test]
fn print_round_trips() {
    for s in [
        "x + y",
        "-x/(y^2+1)^3 + 1/2*a",
        "arctan(y/x)*log(x^2+y^2)",
        "-5*u0_x*u0_xx",
        "x^-1 - 2*y^-3",
        "exp(-b*x)*cos(b*y) - 3/7",
    ] {
        let e = parse(s).unwrap();
        let back = parse(&e.to_string()).unwrap();
        assert_eq!(e, back, "{s} printed as {e}");
        let n = nf(s);
        assert_eq!(NormalForm::parse(&n.to_string()).unwrap(), n, "{s}");
    }
}

#[test]
fn collect_examples() {
    let e = parse("a*u1_x + b*u1_x*u1_y + c").unwrap();
    let inds = [parse("u1_x").unwrap(), parse("u1_y").unwrap()]
        .map(|e| match e {
            Expr::Atom(a) => a,
            _ => unreachable!(),
        });
    let got = collect(&e, &inds).unwrap();
    let shown: Vec<(String, String)> = got.iter().map(|(m, c)| (m.to_string(), c.to_string())).collect();
    assert_eq!(
        shown,
        [
            ("u1_x*u1_y".to_string(), "b".to_string()),
            ("u1_x".to_string(), "a".to_string()),
            ("1".to_string(), "c".to_string()),
        ]
    );
    assert!(collect(&Expr::zero(), &inds).unwrap().is_empty());
    let rebuilt = Expr::sum(got.into_iter().map(|(m, c)| Expr::product(vec![m, c])).collect());
    assert!(Expr::sub(rebuilt, e).is_zero().unwrap());
}

#[test]
fn collect_rejects_non_polynomial() {
    let Expr::Atom(x) = parse("x").unwrap() else {
        unreachable!()
    };
    assert!(matches!(
        collect(&parse("1/(x+1)").unwrap(), std::slice::from_ref(&x)),
        Err(KernelError::NotPolynomial(_))
    ));
    assert!(matches!(
        collect(&parse("sin(x)").unwrap(), &[x]),
        Err(KernelError::NotPolynomial(_))
    ));
}

#[test]
fn rational_arithmetic() {
    let a = nf("x/(x+y)");
    let b = nf("y/(x+y)");
    assert!((&a + &b - NormalForm::one()).is_zero());
    let c = nf("1/(x-1) - 1/(x+1)");
    assert!((c - nf("2/(x^2-1)")).is_zero());
    assert_eq!(nf("(k1^2+1)^2/(k1^2+1)"), nf("k1^2+1"));
}

#[test]
fn instantiate_replaces_jets() {
    let f = SymbolTable::standard().function("u0").unwrap().clone();
    let e = nf("u0_xy + u0*u0_x");
    let got = e.instantiate(&[(f, nf("x^2*y"))]).unwrap();
    assert_eq!(got, nf("2*x + x^2*y*2*x*y"));
}
