use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{LazyLock, RwLock};

use num_traits::One;

use super::atoms::{self, AtomId, AtomKey, AtomKind};
use super::normal::{self, NormalForm};
use super::poly::{Monomial, Poly, Q};
use super::symbol::{DerivativeSymbol, FnArg, FunctionSymbol, TransFn};
use super::{Atom, Expr};
use crate::error::KernelError;

/// Pattern accepted by [`substitute`]: a whole atom or derivative symbol.
pub type AtomRef = Atom;

/// Base action of a derivation on non-transcendental atoms.
pub(crate) type DerivRule<'a> = &'a dyn Fn(AtomId) -> Option<NormalForm>;

/// One collected coefficient: `monomial * coeff`.
#[derive(Clone, Debug)]
pub(crate) struct Collected {
    pub monomial: Monomial,
    pub coeff: NormalForm,
}

impl Collected {
    pub fn monomial_expr(&self) -> Expr {
        normal::monomial_expr(&self.monomial, &Q::one())
    }
}

static TOTAL_CACHE: LazyLock<RwLock<HashMap<(AtomId, AtomId), NormalForm>>> =
    LazyLock::new(Default::default);

fn fn_prime(f: TransFn, arg: &NormalForm) -> NormalForm {
    let id = atoms::intern(AtomKey::Trans(f, arg.clone()));
    match f {
        TransFn::Log => arg.inv().expect("log argument is nonzero"),
        TransFn::Exp => NormalForm::atom(id),
        TransFn::Sin => normal::apply(TransFn::Cos, arg.clone()).expect("cos"),
        TransFn::Cos => normal::apply(TransFn::Sin, arg.clone()).expect("sin").neg(),
        TransFn::Arctan => {
            let d = NormalForm::one().add(&arg.mul(arg));
            d.inv().expect("1 + a^2 is nonzero")
        }
    }
}

fn atom_derivative(
    a: AtomId,
    rule: DerivRule<'_>,
    memo: &mut HashMap<AtomId, Option<NormalForm>>,
) -> Option<NormalForm> {
    if let Some(v) = memo.get(&a) {
        return v.clone();
    }
    let out = match atoms::kind(a) {
        AtomKind::Trans(_) => {
            let (f, arg) = atoms::trans_parts(a).expect("transcendental atom");
            let darg = derive_memo(&arg, rule, memo);
            if darg.is_zero() {
                None
            } else {
                Some(fn_prime(f, &arg).mul(&darg))
            }
        }
        _ => rule(a).filter(|d| !d.is_zero()),
    };
    memo.insert(a, out.clone());
    out
}

fn derive_memo(
    nf: &NormalForm,
    rule: DerivRule<'_>,
    memo: &mut HashMap<AtomId, Option<NormalForm>>,
) -> NormalForm {
    let mut poly_acc = Poly::zero();
    let mut nf_acc = NormalForm::zero();
    let mut dnum = |p: &Poly, memo: &mut HashMap<AtomId, Option<NormalForm>>| -> NormalForm {
        poly_acc = Poly::zero();
        nf_acc = NormalForm::zero();
        for a in p.atoms() {
            let Some(da) = atom_derivative(a, rule, memo) else {
                continue;
            };
            let part = p.partial(a);
            if da.den.is_empty() {
                poly_acc = poly_acc.add(&part.mul(&da.num));
            } else {
                nf_acc = nf_acc.add(&NormalForm::from_poly(part).mul(&da));
            }
        }
        NormalForm::from_poly(std::mem::take(&mut poly_acc)).add(&nf_acc)
    };
    let top = dnum(&nf.num, memo);
    if nf.den.is_empty() {
        return top;
    }
    let mut result = top.mul(&NormalForm::new(Poly::one(), nf.den.clone()));
    let mut log_d = NormalForm::zero();
    for (f, e) in &nf.den {
        let df = dnum(f, memo);
        if df.is_zero() {
            continue;
        }
        let inv_f = NormalForm::new(Poly::one(), vec![(f.clone(), 1)]);
        log_d = log_d.add(&df.mul(&inv_f).scale(&Q::from_integer((*e).into())));
    }
    if !log_d.is_zero() {
        result = result.sub(&nf.mul(&log_d));
    }
    result
}

fn total_rule(var: AtomId) -> impl Fn(AtomId) -> Option<NormalForm> {
    move |a: AtomId| match atoms::kind(a) {
        AtomKind::Independent => (a == var).then(NormalForm::one),
        AtomKind::Derivative => {
            let d = atoms::as_derivative(a)?;
            let name = atoms::name_of(var)?;
            let mut acc = NormalForm::zero();
            for (slot, arg) in d.function.args().iter().enumerate() {
                match arg {
                    FnArg::Var(v) if **v == *name => {
                        acc = acc.add(&NormalForm::deriv(&d.bumped(slot)));
                    }
                    FnArg::Var(_) => {}
                    FnArg::Dep(g) => {
                        if let Some(gs) = g.arg_position(&name) {
                            let inner = g.value().bumped(gs);
                            acc = acc.add(
                                &NormalForm::deriv(&d.bumped(slot)).mul(&NormalForm::deriv(&inner)),
                            );
                        }
                    }
                }
            }
            Some(acc)
        }
        _ => None,
    }
}

impl NormalForm {
    pub(crate) fn derive(&self, rule: DerivRule<'_>) -> NormalForm {
        let mut memo = HashMap::new();
        derive_memo(self, rule, &mut memo)
    }

    /// Total derivative along an independent variable: function symbols
    /// depend on their arguments, parameters are constant.
    pub fn diff(&self, var: &str) -> NormalForm {
        let v = atoms::independent(var);
        self.diff_atom(v)
    }

    pub(crate) fn diff_atom(&self, v: AtomId) -> NormalForm {
        let rule = total_rule(v);
        let cached = |a: AtomId| -> Option<NormalForm> {
            if atoms::kind(a) == AtomKind::Independent || atoms::kind(a) == AtomKind::Parameter {
                return rule(a);
            }
            if let Some(hit) = TOTAL_CACHE.read().expect("cache lock").get(&(a, v)) {
                return Some(hit.clone());
            }
            let d = match atoms::kind(a) {
                AtomKind::Trans(_) => {
                    let mut memo = HashMap::new();
                    atom_derivative(a, &rule, &mut memo).unwrap_or_default()
                }
                _ => rule(a).unwrap_or_default(),
            };
            TOTAL_CACHE
                .write()
                .expect("cache lock")
                .insert((a, v), d.clone());
            Some(d)
        };
        let mut memo = HashMap::new();
        for a in self.atoms() {
            if let AtomKind::Trans(_) = atoms::kind(a) {
                memo.insert(a, cached(a).filter(|d| !d.is_zero()));
            }
        }
        derive_memo(self, &cached, &mut memo)
    }

    /// Partial derivative treating `atom` as an independent coordinate.
    pub(crate) fn partial_id(&self, atom: AtomId) -> NormalForm {
        let dep = atoms::as_derivative(atom).filter(|d| d.order() == 0);
        let rule = move |a: AtomId| -> Option<NormalForm> {
            if a == atom {
                return Some(NormalForm::one());
            }
            let base = dep.as_ref()?;
            let d = atoms::as_derivative(a)?;
            let mut acc = NormalForm::zero();
            for (slot, arg) in d.function.args().iter().enumerate() {
                if matches!(arg, FnArg::Dep(g) if *g == base.function) {
                    acc = acc.add(&NormalForm::deriv(&d.bumped(slot)));
                }
            }
            Some(acc)
        };
        self.derive(&rule)
    }

    pub fn partial_deriv(&self, d: &DerivativeSymbol) -> NormalForm {
        self.partial_id(atoms::derivative(d.clone()))
    }

    pub fn partial_param(&self, name: &str) -> NormalForm {
        self.partial_id(atoms::parameter(name))
    }

    /// Explicit partial derivative along `var`: derivative symbols of
    /// functions selected by `frozen` are held fixed (jet coordinates), all
    /// other function symbols depend on `var`.
    pub fn partial_explicit(&self, var: &str, frozen: &dyn Fn(&FunctionSymbol) -> bool) -> NormalForm {
        let v = atoms::independent(var);
        let total = total_rule(v);
        let rule = move |a: AtomId| -> Option<NormalForm> {
            if atoms::kind(a) == AtomKind::Derivative {
                let d = atoms::as_derivative(a)?;
                if frozen(&d.function) {
                    return None;
                }
            }
            total(a)
        };
        self.derive(&rule)
    }

    pub fn depends_on_var(&self, var: &str) -> bool {
        !self.diff(var).is_zero()
    }

    /// Simultaneous substitution of whole atoms, recursing into
    /// transcendental arguments.
    pub(crate) fn substitute_ids(&self, map: &HashMap<AtomId, NormalForm>) -> Result<NormalForm, KernelError> {
        if map.is_empty() {
            return Ok(self.clone());
        }
        let keys: HashSet<AtomId> = map.keys().copied().collect();
        let mut repl: HashMap<AtomId, NormalForm> = HashMap::new();
        for a in self.atoms() {
            if let Some(v) = map.get(&a) {
                repl.insert(a, v.clone());
            } else if let Some((f, arg)) = atoms::trans_parts(a) {
                if arg.deep_atoms().iter().any(|b| keys.contains(b)) {
                    repl.insert(a, normal::apply(f, arg.substitute_ids(map)?)?);
                }
            }
        }
        if repl.is_empty() {
            return Ok(self.clone());
        }
        let num = eval_poly(&self.num, &repl)?;
        let mut out = num;
        for (f, e) in &self.den {
            let fv = eval_poly(f, &repl)?;
            out = out.mul(&fv.pow(-(*e as i32))?);
        }
        Ok(out)
    }

    pub fn substitute(&self, rules: &[(AtomRef, NormalForm)]) -> Result<NormalForm, KernelError> {
        let mut map = HashMap::new();
        for (pat, val) in rules {
            map.insert(atom_id(pat)?, val.clone());
        }
        self.substitute_ids(&map)
    }

    pub fn substitute_param(&self, name: &str, val: &NormalForm) -> Result<NormalForm, KernelError> {
        let mut map = HashMap::new();
        map.insert(atoms::parameter(name), val.clone());
        self.substitute_ids(&map)
    }

    pub fn substitute_var(&self, name: &str, val: &NormalForm) -> Result<NormalForm, KernelError> {
        let mut map = HashMap::new();
        map.insert(atoms::independent(name), val.clone());
        self.substitute_ids(&map)
    }

    /// Replace every derivative symbol of the given functions by the
    /// corresponding derivative of the supplied closed form.
    pub fn instantiate(&self, funcs: &[(FunctionSymbol, NormalForm)]) -> Result<NormalForm, KernelError> {
        let mut cache = Instantiator::new(funcs);
        let mut map = HashMap::new();
        for a in self.deep_atoms() {
            if let Some(d) = atoms::as_derivative(a) {
                if let Some(v) = cache.value(&d) {
                    map.insert(a, v);
                }
            }
        }
        self.substitute_ids(&map)
    }

    /// Group numerator terms by their monomial in the atoms selected by
    /// `pred`. Fails when a selected atom occurs outside the numerator
    /// polynomial.
    pub(crate) fn collect_by(&self, pred: &dyn Fn(AtomId) -> bool) -> Result<Vec<Collected>, KernelError> {
        for (f, _) in &self.den {
            if let Some(a) = f.atoms().into_iter().find(|a| pred(*a)) {
                return Err(KernelError::NotPolynomial(normal::atom_expr(a).to_string()));
            }
        }
        for a in self.atoms() {
            if let Some((_, arg)) = atoms::trans_parts(a) {
                if let Some(b) = arg.deep_atoms().into_iter().find(|b| pred(*b)) {
                    return Err(KernelError::NotPolynomial(normal::atom_expr(b).to_string()));
                }
            }
        }
        let mut groups: BTreeMap<Monomial, Poly> = BTreeMap::new();
        for (m, c) in &self.num.terms {
            let (sel, rest) = m.split(pred);
            if !sel.is_polynomial() {
                let bad = sel.0.iter().find(|(_, e)| *e < 0).map(|x| x.0).expect("negative");
                return Err(KernelError::NotPolynomial(normal::atom_expr(bad).to_string()));
            }
            groups.entry(sel).or_default().add_term(rest, c.clone());
        }
        let mut out: Vec<Collected> = groups
            .into_iter()
            .map(|(m, p)| Collected {
                monomial: m,
                coeff: NormalForm::new(p, self.den.clone()),
            })
            .filter(|c| !c.coeff.is_zero())
            .collect();
        out.sort_by(|a, b| normal::structural_cmp(&b.monomial, &a.monomial));
        Ok(out)
    }

    /// Coefficient of `name^k` when the form is polynomial in that parameter.
    pub fn coefficient_of_param(&self, name: &str, k: i32) -> Result<NormalForm, KernelError> {
        let id = atoms::parameter(name);
        let groups = self.collect_by(&|a| a == id)?;
        Ok(groups
            .into_iter()
            .find(|g| g.monomial.exponent(id) == k)
            .map(|g| g.coeff)
            .unwrap_or_default())
    }

    pub fn contains_param(&self, name: &str) -> bool {
        self.deep_atoms().contains(&atoms::parameter(name))
    }

    pub fn contains_var(&self, name: &str) -> bool {
        self.deep_atoms().contains(&atoms::independent(name))
    }

    /// Derivative symbols occurring anywhere in the form.
    pub fn derivative_symbols(&self) -> Vec<DerivativeSymbol> {
        let mut out: Vec<DerivativeSymbol> = self
            .deep_atoms()
            .into_iter()
            .filter_map(atoms::as_derivative)
            .collect();
        out.sort();
        out
    }

    /// Names of parameters occurring anywhere in the form.
    pub fn parameters(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .deep_atoms()
            .into_iter()
            .filter(|a| atoms::kind(*a) == AtomKind::Parameter)
            .filter_map(|a| atoms::name_of(a).map(|n| n.to_string()))
            .collect();
        out.sort();
        out
    }
}

fn eval_poly(p: &Poly, repl: &HashMap<AtomId, NormalForm>) -> Result<NormalForm, KernelError> {
    let mut groups: BTreeMap<Monomial, Poly> = BTreeMap::new();
    for (m, c) in &p.terms {
        let (changed, kept) = m.split(|a| repl.contains_key(&a));
        groups.entry(changed).or_default().add_term(kept, c.clone());
    }
    let mut powers: HashMap<(AtomId, i32), NormalForm> = HashMap::new();
    let mut out = NormalForm::zero();
    for (changed, kept) in groups {
        let mut term = NormalForm::from_poly(kept);
        for &(a, e) in changed.0.iter() {
            let pw = match powers.get(&(a, e)) {
                Some(v) => v.clone(),
                None => {
                    let v = repl[&a].pow(e)?;
                    powers.insert((a, e), v.clone());
                    v
                }
            };
            term = term.mul(&pw);
        }
        out = out.add(&term);
    }
    Ok(out)
}

pub(crate) fn atom_id(a: &Atom) -> Result<AtomId, KernelError> {
    Ok(match a {
        Atom::Independent(n) => atoms::independent(n),
        Atom::Parameter(n) => atoms::parameter(n),
        Atom::Derivative(d) => atoms::derivative(d.clone()),
        Atom::Transcendental(f, arg) => atoms::intern(AtomKey::Trans(*f, arg.normalize()?)),
    })
}

struct Instantiator<'a> {
    funcs: &'a [(FunctionSymbol, NormalForm)],
    memo: HashMap<DerivativeSymbol, NormalForm>,
}

impl<'a> Instantiator<'a> {
    fn new(funcs: &'a [(FunctionSymbol, NormalForm)]) -> Self {
        Instantiator {
            funcs,
            memo: HashMap::new(),
        }
    }

    fn value(&mut self, d: &DerivativeSymbol) -> Option<NormalForm> {
        let (_, base) = self.funcs.iter().find(|(f, _)| *f == d.function)?;
        if let Some(v) = self.memo.get(d) {
            return Some(v.clone());
        }
        let slot = d.index.iter().rposition(|&c| c > 0);
        let v = match slot {
            None => base.clone(),
            Some(s) => {
                let mut parent = d.index.clone();
                parent[s] -= 1;
                let pv = self.value(&d.with_index(parent))?;
                match &d.function.args()[s] {
                    FnArg::Var(name) => pv.diff(name),
                    FnArg::Dep(g) => pv.partial_id(atoms::derivative(g.value())),
                }
            }
        };
        self.memo.insert(d.clone(), v.clone());
        Some(v)
    }
}

/// Exact partial derivative of an expression along an independent variable.
pub fn diff(e: &Expr, var: &str) -> Result<Expr, KernelError> {
    Ok(e.normalize()?.diff(var).to_expr())
}

fn subst_once(e: &Expr, rules: &[(AtomRef, Expr)]) -> Expr {
    match e {
        Expr::Rational(_) => e.clone(),
        Expr::Atom(a) => {
            if let Some((_, r)) = rules.iter().find(|(p, _)| p == a) {
                return r.clone();
            }
            match a {
                Atom::Transcendental(f, arg) => Expr::apply(*f, subst_once(arg, rules)),
                _ => e.clone(),
            }
        }
        Expr::Sum(ts) => Expr::sum(ts.iter().map(|t| subst_once(t, rules)).collect()),
        Expr::Product(fs) => Expr::product(fs.iter().map(|t| subst_once(t, rules)).collect()),
        Expr::Pow(b, k) => Expr::pow(subst_once(b, rules), *k),
    }
}

/// One simultaneous pass; replacements are not revisited.
pub fn substitute(e: &Expr, rules: &[(AtomRef, Expr)]) -> Expr {
    if rules.is_empty() {
        return e.clone();
    }
    subst_once(e, rules)
}

pub const FIXPOINT_LIMIT: usize = 12;

/// Repeat [`substitute`] until nothing changes.
pub fn substitute_fixpoint(e: &Expr, rules: &[(AtomRef, Expr)]) -> Result<Expr, KernelError> {
    for (pat, rhs) in rules {
        let mut hit = false;
        rhs.visit_atoms(&mut |a| hit |= a == pat);
        if hit {
            return Err(KernelError::CircularSubstitution(pat.to_string()));
        }
    }
    let mut cur = e.clone();
    for _ in 0..FIXPOINT_LIMIT {
        let next = subst_once(&cur, rules);
        if next == cur {
            return Ok(cur);
        }
        cur = next;
    }
    Err(KernelError::FixpointLimit(FIXPOINT_LIMIT))
}

/// Group an expression by monomials in the given indeterminates, leading
/// (graded-lex highest) monomial first.
pub fn collect(e: &Expr, inds: &[AtomRef]) -> Result<Vec<(Expr, Expr)>, KernelError> {
    let ids: HashSet<AtomId> = inds.iter().map(atom_id).collect::<Result<_, _>>()?;
    let nf = e.normalize()?;
    Ok(nf
        .collect_by(&|a| ids.contains(&a))?
        .into_iter()
        .map(|c| (c.monomial_expr(), c.coeff.to_expr()))
        .collect())
}
