//! On-shell reduction and the approximate invariance test.
//!
//! Each expanded equation `Δ~_(k)` is solved for a declared leading jet;
//! those rules and their differential consequences rewrite the action of a
//! prolonged generator until only free jets remain, and the surviving jet
//! coefficients are the determining equations.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{KernelError, LieError, SeriesError};
use crate::expr::atoms::{self, AtomId};
use crate::expr::{DerivativeSymbol, FnArg, FunctionSymbol, MultiIndex, NormalForm};
use crate::prolong::{self, Generator, JetSpace};
use crate::series::{self, EpsSeries, EPS};

/// Default highest jet order with eagerly computed consequences.
pub const JET_DEPTH: usize = 4;

const FIXPOINT_LIMIT: usize = 12;

/// A system `Δ = 0` in unexpanded dependents, each equation paired with the
/// jet it is solved for.
#[derive(Clone, Debug)]
pub struct PdeSystem {
    independents: Vec<Arc<str>>,
    dependents: Vec<FunctionSymbol>,
    given: Vec<FunctionSymbol>,
    equations: Vec<NormalForm>,
    leading: Vec<DerivativeSymbol>,
    labels: Vec<String>,
}

impl PdeSystem {
    pub fn new(
        independents: &[&str],
        dependents: Vec<FunctionSymbol>,
        given: Vec<FunctionSymbol>,
        equations: Vec<(String, NormalForm, DerivativeSymbol)>,
    ) -> Result<PdeSystem, LieError> {
        let mut sys = PdeSystem {
            independents: independents.iter().map(|v| (*v).into()).collect(),
            dependents,
            given,
            equations: Vec::new(),
            leading: Vec::new(),
            labels: Vec::new(),
        };
        for (label, eq, lead) in equations {
            if !sys.dependents.contains(&lead.function) {
                return Err(LieError::InconsistentChoice(format!(
                    "`{lead}` is not a jet of a dependent variable"
                )));
            }
            sys.labels.push(label);
            sys.equations.push(eq);
            sys.leading.push(lead);
        }
        for (i, a) in sys.leading.iter().enumerate() {
            for b in &sys.leading[i + 1..] {
                if a.divides(b) || b.divides(a) {
                    return Err(LieError::InconsistentChoice(format!("`{a}` and `{b}` overlap")));
                }
            }
        }
        Ok(sys)
    }

    pub fn independents(&self) -> &[Arc<str>] {
        &self.independents
    }

    pub fn dependents(&self) -> &[FunctionSymbol] {
        &self.dependents
    }

    /// Prescribed functions that may appear in generators and constraints.
    pub fn given(&self) -> &[FunctionSymbol] {
        &self.given
    }

    pub fn equations(&self) -> &[NormalForm] {
        &self.equations
    }

    pub fn leading(&self) -> &[DerivativeSymbol] {
        &self.leading
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Highest derivative order of a dependent in any equation.
    pub fn max_order(&self) -> usize {
        self.equations
            .iter()
            .flat_map(|e| e.derivative_symbols())
            .filter(|d| self.dependents.contains(&d.function))
            .map(|d| d.order())
            .max()
            .unwrap_or(0)
    }

    /// The same system with the small parameter set to zero.
    pub fn eps_zero(&self) -> Result<PdeSystem, KernelError> {
        let mut out = self.clone();
        for e in &mut out.equations {
            *e = e.substitute_param(EPS, &NormalForm::zero())?;
        }
        Ok(out)
    }

    pub fn jet_space(&self, p: usize) -> Arc<JetSpace> {
        Arc::new(JetSpace {
            independents: self.independents.clone(),
            dependents: self.dependents.clone(),
            order: p,
        })
    }

    /// `Δ~_(0..=p)` for every equation.
    pub fn expanded(&self, p: usize) -> Result<Vec<EpsSeries>, SeriesError> {
        self.equations
            .iter()
            .map(|e| series::expand_dependent(e, self, p))
            .collect()
    }
}

/// A side relation among prescribed functions, solved for `lead`.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub expr: NormalForm,
    pub lead: DerivativeSymbol,
}

/// One solved equation: `lead = rhs`.
#[derive(Clone, Debug)]
pub struct LeadRule {
    pub label: String,
    pub order: Option<usize>,
    pub lead: DerivativeSymbol,
    pub rhs: NormalForm,
}

/// A jet reachable from two leading derivatives whose two reductions differ.
#[derive(Clone, Debug)]
pub struct IntegrabilityCondition {
    pub jet: DerivativeSymbol,
    pub primary: DerivativeSymbol,
    pub alternative: DerivativeSymbol,
    pub difference: NormalForm,
}

/// Leading-derivative rules with every consequence up to the jet depth,
/// fully reduced.
#[derive(Clone, Debug)]
pub struct OnShellRules {
    leads: Vec<LeadRule>,
    table: HashMap<AtomId, NormalForm>,
    depth: usize,
    integrability: Vec<IntegrabilityCondition>,
}

struct Builder<'a> {
    leads: &'a [LeadRule],
    vars: Vec<Vec<String>>,
    table: HashMap<AtomId, NormalForm>,
    in_progress: HashSet<AtomId>,
    integrability: Vec<IntegrabilityCondition>,
}

fn arg_labels(f: &FunctionSymbol) -> Vec<String> {
    f.args().iter().map(FnArg::label).collect()
}

fn differentiate(e: &NormalForm, labels: &[String], m: &[u8]) -> NormalForm {
    let mut out = e.clone();
    for (v, &c) in labels.iter().zip(m) {
        for _ in 0..c {
            out = out.diff(v);
        }
    }
    out
}

fn difference(jet: &DerivativeSymbol, lead: &DerivativeSymbol) -> MultiIndex {
    jet.index.iter().zip(&lead.index).map(|(a, b)| a - b).collect()
}

impl Builder<'_> {
    fn dividing(&self, d: &DerivativeSymbol) -> Vec<usize> {
        (0..self.leads.len()).filter(|&i| self.leads[i].lead.divides(d)).collect()
    }

    fn from_lead(&mut self, i: usize, jet: &DerivativeSymbol) -> Result<NormalForm, LieError> {
        let m = difference(jet, &self.leads[i].lead);
        let raw = differentiate(&self.leads[i].rhs, &self.vars[i], &m);
        self.reduce(&raw)
    }

    fn value(&mut self, jet: &DerivativeSymbol) -> Result<Option<NormalForm>, LieError> {
        let id = atoms::derivative(jet.clone());
        if let Some(v) = self.table.get(&id) {
            return Ok(Some(v.clone()));
        }
        let hits = self.dividing(jet);
        let Some(&first) = hits.first() else {
            return Ok(None);
        };
        if !self.in_progress.insert(id) {
            return Err(LieError::InconsistentChoice(format!("rules cycle through `{jet}`")));
        }
        let primary = self.from_lead(first, jet)?;
        for &alt in &hits[1..] {
            let other = self.from_lead(alt, jet)?;
            let diff = primary.sub(&other);
            if !diff.is_zero() {
                self.integrability.push(IntegrabilityCondition {
                    jet: jet.clone(),
                    primary: self.leads[first].lead.clone(),
                    alternative: self.leads[alt].lead.clone(),
                    difference: diff,
                });
            }
        }
        self.in_progress.remove(&id);
        self.table.insert(id, primary.clone());
        Ok(Some(primary))
    }

    fn reduce(&mut self, e: &NormalForm) -> Result<NormalForm, LieError> {
        let mut cur = e.clone();
        for _ in 0..FIXPOINT_LIMIT {
            let mut map = HashMap::new();
            for a in cur.deep_atoms() {
                let Some(d) = atoms::as_derivative(a) else {
                    continue;
                };
                if let Some(v) = self.value(&d)? {
                    map.insert(a, v);
                }
            }
            if map.is_empty() {
                return Ok(cur);
            }
            cur = cur.substitute_ids(&map)?;
        }
        Err(KernelError::FixpointLimit(FIXPOINT_LIMIT).into())
    }
}

fn solve_for(label: &str, index: usize, expr: &NormalForm, lead: &DerivativeSymbol) -> Result<NormalForm, LieError> {
    let not_affine = || LieError::NotAffine(index, format!("{label}: {lead}"));
    let id = atoms::derivative(lead.clone());
    let c = expr.partial_deriv(lead);
    if c.is_zero() || c.deep_atoms().contains(&id) {
        return Err(not_affine());
    }
    let rest = expr.sub(&c.mul(&NormalForm::deriv(lead)));
    if rest.deep_atoms().contains(&id) {
        return Err(not_affine());
    }
    Ok(rest.neg().div(&c)?)
}

impl OnShellRules {
    /// Solve each `Δ~_(k)`, `k <= p`, for its leading jet, then the
    /// constraints for theirs, and close under differentiation to `depth`.
    pub fn build(sys: &PdeSystem, p: usize, depth: usize, modulo: &[Constraint]) -> Result<OnShellRules, LieError> {
        let expanded = sys.expanded(p)?;
        let mut leads = Vec::new();
        for (i, s) in expanded.iter().enumerate() {
            let lead0 = &sys.leading[i];
            for k in 0..=p {
                let lead = DerivativeSymbol::new(lead0.function.at_order(k as u32), lead0.index.clone());
                let rhs = solve_for(&sys.labels[i], i, s.coeff(k), &lead)?;
                leads.push(LeadRule {
                    label: format!("{}[{k}]", sys.labels[i]),
                    order: Some(k),
                    lead,
                    rhs,
                });
            }
        }
        for (j, c) in modulo.iter().enumerate() {
            if c.expr.is_zero() {
                continue;
            }
            let index = sys.equations.len() + j;
            let label = format!("constraint {}", j + 1);
            let rhs = solve_for(&label, index, &c.expr, &c.lead)?;
            leads.push(LeadRule {
                label,
                order: None,
                lead: c.lead.clone(),
                rhs,
            });
        }
        for (i, a) in leads.iter().enumerate() {
            for b in &leads[i + 1..] {
                if a.lead.divides(&b.lead) || b.lead.divides(&a.lead) {
                    return Err(LieError::InconsistentChoice(format!("`{}` and `{}` overlap", a.lead, b.lead)));
                }
            }
        }
        let vars = leads.iter().map(|l| arg_labels(&l.lead.function)).collect();
        let mut b = Builder {
            leads: &leads,
            vars,
            table: HashMap::new(),
            in_progress: HashSet::new(),
            integrability: Vec::new(),
        };
        for i in 0..leads.len() {
            let reduced = b.reduce(&leads[i].rhs)?;
            if reduced.deep_atoms().contains(&atoms::derivative(leads[i].lead.clone())) {
                return Err(LieError::InconsistentChoice(format!("`{}` feeds back into itself", leads[i].lead)));
            }
        }
        for l in &leads {
            let base = l.lead.order();
            if base > depth {
                b.value(&l.lead)?;
                continue;
            }
            for m in index_ball(l.lead.index.len(), depth - base) {
                let jet = l.lead.with_index(l.lead.index.iter().zip(&m).map(|(a, b)| a + b).collect());
                b.value(&jet)?;
            }
        }
        let Builder {
            table, integrability, ..
        } = b;
        let mut seen = HashSet::new();
        let integrability = integrability
            .into_iter()
            .filter(|c| seen.insert((c.jet.clone(), c.alternative.clone())))
            .collect();
        let leads = leads
            .into_iter()
            .map(|mut l| {
                l.rhs = table[&atoms::derivative(l.lead.clone())].clone();
                l
            })
            .collect();
        Ok(OnShellRules {
            leads,
            table,
            depth,
            integrability,
        })
    }

    pub fn leads(&self) -> &[LeadRule] {
        &self.leads
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn integrability(&self) -> &[IntegrabilityCondition] {
        &self.integrability
    }

    /// Every stored rule, ordered by jet.
    pub fn rules(&self) -> Vec<(DerivativeSymbol, NormalForm)> {
        let mut out: Vec<(DerivativeSymbol, NormalForm)> = self
            .table
            .iter()
            .map(|(a, v)| (atoms::as_derivative(*a).expect("jet"), v.clone()))
            .collect();
        out.sort_by(|a, b| (a.0.order(), a.0.name()).cmp(&(b.0.order(), b.0.name())));
        out
    }

    pub fn rule_for(&self, jet: &DerivativeSymbol) -> Option<&NormalForm> {
        self.table.get(&atoms::derivative(jet.clone()))
    }

    fn is_led(&self, d: &DerivativeSymbol) -> bool {
        self.leads.iter().any(|l| l.lead.divides(d))
    }

    /// Rewrite every jet reachable from a leading derivative.
    pub fn reduce(&self, e: &NormalForm) -> Result<NormalForm, LieError> {
        let mut cur = e.clone();
        for _ in 0..FIXPOINT_LIMIT {
            let mut map = HashMap::new();
            for a in cur.deep_atoms() {
                let Some(d) = atoms::as_derivative(a) else {
                    continue;
                };
                if !self.is_led(&d) {
                    continue;
                }
                match self.table.get(&a) {
                    Some(v) => {
                        map.insert(a, v.clone());
                    }
                    None => return Err(LieError::JetDepthExceeded(d.name())),
                }
            }
            if map.is_empty() {
                return Ok(cur);
            }
            cur = cur.substitute_ids(&map)?;
        }
        Err(KernelError::FixpointLimit(FIXPOINT_LIMIT).into())
    }
}

/// Multi-indices over `n` slots with total order at most `r`.
pub(crate) fn index_ball(n: usize, r: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur: MultiIndex = smallvec::SmallVec::from_elem(0, n);
    fn rec(slot: usize, left: usize, cur: &mut MultiIndex, out: &mut Vec<MultiIndex>) {
        if slot == cur.len() {
            out.push(cur.clone());
            return;
        }
        for c in 0..=left {
            cur[slot] = c as u8;
            rec(slot + 1, left - c, cur, out);
        }
        cur[slot] = 0;
    }
    rec(0, r, &mut cur, &mut out);
    out.sort_by_key(|m| m.iter().map(|&c| c as usize).sum::<usize>());
    out
}

/// Expanded partial derivatives of one equation, cached for reuse across
/// generators.
#[derive(Clone, Debug)]
struct EquationData {
    jets: Vec<(usize, MultiIndex, EpsSeries)>,
    explicit: Vec<(usize, EpsSeries)>,
}

/// Residual computation and verification for one system at one series
/// order; immutable after construction.
#[derive(Clone, Debug)]
pub struct InvarianceEngine {
    sys: PdeSystem,
    p: usize,
    rules: OnShellRules,
    data: Vec<EquationData>,
    space: Arc<JetSpace>,
}

impl InvarianceEngine {
    pub fn new(sys: &PdeSystem, p: usize) -> Result<InvarianceEngine, LieError> {
        InvarianceEngine::with_modulo(sys, p, &[])
    }

    pub fn with_modulo(sys: &PdeSystem, p: usize, modulo: &[Constraint]) -> Result<InvarianceEngine, LieError> {
        let rules = OnShellRules::build(sys, p, JET_DEPTH, modulo)?;
        let frozen_deps = sys.dependents.clone();
        let frozen = move |f: &FunctionSymbol| frozen_deps.contains(f);
        let mut data = Vec::new();
        for eq in &sys.equations {
            let mut jets = Vec::new();
            let mut syms = eq.derivative_symbols();
            syms.sort();
            syms.dedup();
            for d in syms {
                let Some(alpha) = sys.dependents.iter().position(|f| *f == d.function) else {
                    continue;
                };
                let s = series::expand_dependent(&eq.partial_deriv(&d), sys, p)?;
                if !s.is_zero() {
                    jets.push((alpha, d.index.clone(), s));
                }
            }
            let mut explicit = Vec::new();
            for (i, v) in sys.independents.iter().enumerate() {
                let d = eq.partial_explicit(v, &frozen);
                if !d.is_zero() {
                    explicit.push((i, series::expand_dependent(&d, sys, p)?));
                }
            }
            data.push(EquationData { jets, explicit });
        }
        Ok(InvarianceEngine {
            space: sys.jet_space(p),
            sys: sys.clone(),
            p,
            rules,
            data,
        })
    }

    pub fn system(&self) -> &PdeSystem {
        &self.sys
    }

    pub fn order(&self) -> usize {
        self.p
    }

    pub fn rules(&self) -> &OnShellRules {
        &self.rules
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    /// `pr X (Δ)` for every equation, reduced on shell and truncated at `p`.
    pub fn residual(&self, g: &Generator) -> Result<Vec<EpsSeries>, LieError> {
        if g.order() != self.p {
            return Err(SeriesError::OrderMismatch(g.order(), self.p).into());
        }
        if g.space().dependents != self.sys.dependents || g.space().independents != self.sys.independents {
            return Err(LieError::InconsistentChoice("generator acts on a different jet space".into()));
        }
        let pg = prolong::prolong(g, self.sys.max_order())?;
        let mut out = Vec::with_capacity(self.data.len());
        for d in &self.data {
            let mut acc = EpsSeries::zero(self.p);
            for (alpha, index, ds) in &d.jets {
                let eta = pg.get(*alpha, index).expect("prolonged to the system order");
                if !eta.is_zero() {
                    acc = acc.add(&eta.mul(ds)?)?;
                }
            }
            for (i, ds) in &d.explicit {
                acc = acc.add(&g.xi()[*i].mul(ds)?)?;
            }
            out.push(acc.try_map(|c| self.rules.reduce(c))?);
        }
        Ok(out)
    }

    pub fn determining(&self, g: &Generator) -> Result<DeterminingSet, LieError> {
        let res = self.residual(g)?;
        Ok(determining_equations(&res, &self.sys)?)
    }

    /// Determining equations for `g`; failures are report content.
    pub fn verify(&self, name: &str, g: &Generator) -> Verification {
        match self.determining(g) {
            Ok(set) => Verification {
                name: name.to_string(),
                order: self.p,
                passed: set.is_empty(),
                determining: set,
                error: None,
            },
            Err(e) => Verification {
                name: name.to_string(),
                order: self.p,
                passed: false,
                determining: DeterminingSet::default(),
                error: Some(e.to_string()),
            },
        }
    }
}

/// Residual of `g` on `sys` at the generator's order.
pub fn invariance_residual(sys: &PdeSystem, g: &Generator) -> Result<Vec<EpsSeries>, LieError> {
    InvarianceEngine::new(sys, g.order())?.residual(g)
}

/// Verify `g`, with `modulo` treated as extra on-shell rules.
pub fn verify_generator(sys: &PdeSystem, name: &str, g: &Generator, modulo: &[Constraint]) -> Verification {
    match InvarianceEngine::with_modulo(sys, g.order(), modulo) {
        Ok(engine) => engine.verify(name, g),
        Err(e) => Verification {
            name: name.to_string(),
            order: g.order(),
            passed: false,
            determining: DeterminingSet::default(),
            error: Some(e.to_string()),
        },
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct DeterminingEquation {
    pub equation: String,
    pub monomial: String,
    pub coefficient: NormalForm,
}

/// Surviving jet coefficients, grouped by power of the small parameter.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct DeterminingSet {
    pub per_order: Vec<Vec<DeterminingEquation>>,
}

impl DeterminingSet {
    pub fn is_empty(&self) -> bool {
        self.per_order.iter().all(Vec::is_empty)
    }

    pub fn len(&self) -> usize {
        self.per_order.iter().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut orders = serde_json::Map::new();
        for (k, eqs) in self.per_order.iter().enumerate() {
            let mut by_eq: BTreeMap<&str, serde_json::Map<String, serde_json::Value>> = BTreeMap::new();
            for e in eqs {
                by_eq
                    .entry(&e.equation)
                    .or_default()
                    .insert(e.monomial.clone(), e.coefficient.to_string().into());
            }
            let obj: serde_json::Map<String, serde_json::Value> =
                by_eq.into_iter().map(|(k, v)| (k.to_string(), v.into())).collect();
            orders.insert(format!("eps^{k}"), obj.into());
        }
        orders.into()
    }
}

impl fmt::Display for DeterminingSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, eqs) in self.per_order.iter().enumerate() {
            for e in eqs {
                writeln!(f, "eps^{k} [{}] {}: {}", e.equation, e.monomial, e.coefficient)?;
            }
        }
        Ok(())
    }
}

fn is_expansion_jet(sys: &PdeSystem, a: AtomId) -> bool {
    atoms::as_derivative(a)
        .is_some_and(|d| d.function.order().is_some() && sys.dependents.contains(&d.function.unexpanded()))
}

/// Collect every order of every residual in the jets of the expansion
/// symbols.
pub fn determining_equations(res: &[EpsSeries], sys: &PdeSystem) -> Result<DeterminingSet, KernelError> {
    let p = res.iter().map(EpsSeries::order).max().unwrap_or(0);
    let mut per_order = vec![Vec::new(); p + 1];
    for (i, s) in res.iter().enumerate() {
        let label = sys.labels.get(i).cloned().unwrap_or_else(|| format!("eq{}", i + 1));
        for (k, c) in s.coeffs().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for g in c.collect_by(&|a| is_expansion_jet(sys, a))? {
                per_order[k].push(DeterminingEquation {
                    equation: label.clone(),
                    monomial: g.monomial_expr().to_string(),
                    coefficient: g.coeff,
                });
            }
        }
    }
    Ok(DeterminingSet { per_order })
}

/// Outcome of verifying one generator.
#[derive(Clone, Debug)]
pub struct Verification {
    pub name: String,
    pub order: usize,
    pub passed: bool,
    pub determining: DeterminingSet,
    pub error: Option<String>,
}

/// One `eps`-separated invariant surface condition.
#[derive(Clone, Debug)]
pub struct SurfaceCondition {
    pub dependent: String,
    pub order: usize,
    pub expr: NormalForm,
    pub inconsistent: bool,
}

/// `sum_i xi_i U_(a,x_i) - eta_a` split by powers of the small parameter,
/// with `U_a = sum_k eps^k u_(k)a`.
pub fn surface_conditions(g: &Generator) -> Result<Vec<SurfaceCondition>, SeriesError> {
    let space = g.space();
    let zero = space.zero_index();
    let mut out = Vec::new();
    for (alpha, dep) in space.dependents.iter().enumerate() {
        let mut acc = g.eta()[alpha].neg();
        for (i, xi) in g.xi().iter().enumerate() {
            let mut idx = zero.clone();
            idx[i] += 1;
            acc = acc.add(&xi.mul(&space.expanded_jet(alpha, &idx))?)?;
        }
        for (k, c) in acc.coeffs().iter().enumerate() {
            let free = !c.deep_atoms().into_iter().any(|a| {
                atoms::as_derivative(a).is_some_and(|d| space.is_expansion_symbol(&d.function))
            });
            out.push(SurfaceCondition {
                dependent: dep.base().to_string(),
                order: k,
                expr: c.clone(),
                inconsistent: free && !c.is_zero(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{self, ModelParams};

    fn nf(s: &str) -> NormalForm {
        NormalForm::parse_with(s, &model::table()).unwrap()
    }

    fn jet(s: &str) -> DerivativeSymbol {
        atoms::as_derivative(*nf(s).deep_atoms().iter().next().unwrap()).unwrap()
    }

    fn system() -> PdeSystem {
        model::creeping_system(&ModelParams::symbolic())
    }

    #[test]
    fn leading_rules_at_first_order() {
        let rules = OnShellRules::build(&system(), 1, JET_DEPTH, &[]).unwrap();
        let names: Vec<String> = rules.leads().iter().map(|l| l.lead.name()).collect();
        assert_eq!(names, ["v0_y", "v1_y", "p0_x", "p1_x", "p0_y", "p1_y"]);
        assert_eq!(rules.rule_for(&jet("v0_y")).unwrap(), &nf("-u0_x"));
        assert_eq!(rules.rule_for(&jet("v0_yy")).unwrap(), &nf("-u0_xy"));
        assert_eq!(rules.rule_for(&jet("p0_x")).unwrap(), &nf("(u0_xx + u0_yy)/Re"));
        assert_eq!(rules.rule_for(&jet("p0_y")).unwrap(), &nf("(v0_xx - u0_xy)/Re"));
    }

    #[test]
    fn rules_annihilate_expanded_equations() {
        let sys = system();
        let rules = OnShellRules::build(&sys, 1, JET_DEPTH, &[]).unwrap();
        for s in sys.expanded(1).unwrap() {
            for c in s.coeffs() {
                assert!(rules.reduce(c).unwrap().is_zero(), "{c}");
            }
        }
    }

    #[test]
    fn rule_deeper_than_jet_depth() {
        let rules = model::constraint_rules(&model::GivenFunctions::symbolic(), &ModelParams::symbolic());
        let built = OnShellRules::build(&system(), 0, JET_DEPTH, &rules).unwrap();
        let lead = model::table().derivative("f1_yyyyy").unwrap();
        let rhs = built.rule_for(&lead).unwrap();
        assert!(rhs.sub(&NormalForm::parse("-f1_xxxxy - 2*f1_xxyyy").unwrap()).is_zero());
    }

    #[test]
    fn pressure_rules_need_vorticity_condition() {
        let rules = OnShellRules::build(&system(), 0, JET_DEPTH, &[]).unwrap();
        let c = rules
            .integrability()
            .iter()
            .find(|c| c.jet.name() == "p0_xy")
            .expect("clash at p0_xy");
        assert_eq!(c.difference, nf("(2*u0_xxy + u0_yyy - v0_xxx)/Re"));
    }

    #[test]
    fn affine_and_triangular_checks() {
        let t = model::table();
        let u = t.function("u").unwrap().clone();
        let v = t.function("v").unwrap().clone();
        let lead = jet("v_y");
        let bad = PdeSystem::new(
            &["x", "y"],
            vec![u.clone(), v.clone()],
            vec![],
            vec![("sq".into(), nf("v_y^2 + u_x"), lead.clone())],
        )
        .unwrap();
        assert!(matches!(
            OnShellRules::build(&bad, 0, JET_DEPTH, &[]),
            Err(LieError::NotAffine(0, _))
        ));
        let overlap = PdeSystem::new(
            &["x", "y"],
            vec![u, v],
            vec![],
            vec![
                ("a".into(), nf("v_y + u_x"), lead),
                ("b".into(), nf("v_yy - u"), jet("v_yy")),
            ],
        );
        assert!(matches!(overlap, Err(LieError::InconsistentChoice(_))));
    }

    #[test]
    fn translations_leave_zero_residual() {
        let sys = system();
        let engine = InvarianceEngine::new(&sys, 1).unwrap();
        let space = engine.space().clone();
        for slots in [[("xi_x", &["1"][..])], [("eta_p", &["1"][..])]] {
            let g = Generator::from_slots(&space, &slots).unwrap();
            for s in engine.residual(&g).unwrap() {
                assert!(s.is_zero());
            }
        }
        assert!(determining_equations(&[EpsSeries::zero(1)], &sys).unwrap().is_empty());
    }

    #[test]
    fn corrupted_scaling_is_rejected() {
        let sys = system();
        let engine = InvarianceEngine::new(&sys, 1).unwrap();
        let g = Generator::from_slots(
            engine.space(),
            &[("xi_x", &["x"]), ("xi_y", &["y"]), ("eta_u", &["2*u0", "u1"]), ("eta_v", &["v0", "v1"])],
        )
        .unwrap();
        let v = engine.verify("corrupted", &g);
        assert!(!v.passed);
        assert!(!v.determining.per_order[0].is_empty());
    }

    #[test]
    fn plane_rotation_also_passes() {
        let sys = system();
        let engine = InvarianceEngine::new(&sys, 1).unwrap();
        let g = Generator::from_slots(
            engine.space(),
            &[("xi_x", &["-y"]), ("xi_y", &["x"]), ("eta_u", &["-v0", "-v1"]), ("eta_v", &["u0", "u1"])],
        )
        .unwrap();
        assert!(engine.verify("rotation", &g).passed);
    }

    #[test]
    fn surface_conditions_for_translation_in_p() {
        let space = system().jet_space(1);
        let g = Generator::from_slots(&space, &[("eta_p", &["1"])]).unwrap();
        let sc = surface_conditions(&g).unwrap();
        assert_eq!(sc.len(), 6);
        let bad: Vec<(&str, usize)> = sc.iter().filter(|c| c.inconsistent).map(|c| (&*c.dependent, c.order)).collect();
        assert_eq!(bad, [("p", 0)]);
        assert!(sc.iter().filter(|c| c.dependent != "p").all(|c| c.expr.is_zero()));
    }
}
