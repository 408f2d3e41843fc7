//! Approximate point generators over the expanded jet space, their
//! prolongations and commutators.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

use crate::error::{LieError, SeriesError};
use crate::expr::{atoms, DerivativeSymbol, FunctionSymbol, MultiIndex, NormalForm, SymbolTable};
use crate::series::{self, EpsSeries};

/// Highest prolongation order accepted by [`prolong`].
pub const MAX_PROLONGATION: usize = 4;

/// Independent variables, unexpanded dependent variables and the series
/// order shared by every generator acting on them.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct JetSpace {
    pub independents: Vec<Arc<str>>,
    pub dependents: Vec<FunctionSymbol>,
    pub order: usize,
}

impl JetSpace {
    pub fn new(independents: &[&str], dependents: Vec<FunctionSymbol>, order: usize) -> Arc<JetSpace> {
        Arc::new(JetSpace {
            independents: independents.iter().map(|v| (*v).into()).collect(),
            dependents,
            order,
        })
    }

    /// `(x, y)` with `u`, `v`, `p`.
    pub fn plane(order: usize) -> Arc<JetSpace> {
        let t = SymbolTable::standard();
        let deps = ["u", "v", "p"].map(|n| t.function(n).expect("standard function").clone());
        JetSpace::new(&["x", "y"], deps.to_vec(), order)
    }

    pub fn index_of_independent(&self, name: &str) -> Option<usize> {
        self.independents.iter().position(|v| &**v == name)
    }

    pub fn index_of_dependent(&self, base: &str) -> Option<usize> {
        self.dependents.iter().position(|d| d.base() == base)
    }

    /// Jet symbol `u_(k)α` differentiated by `index`.
    pub fn jet(&self, alpha: usize, k: usize, index: MultiIndex) -> DerivativeSymbol {
        DerivativeSymbol::new(self.dependents[alpha].at_order(k as u32), index)
    }

    pub fn zero_index(&self) -> MultiIndex {
        SmallVec::from_elem(0, self.independents.len())
    }

    /// `sum_k eps^k u_(k)α,J`.
    pub fn expanded_jet(&self, alpha: usize, index: &MultiIndex) -> EpsSeries {
        EpsSeries::new(
            (0..=self.order)
                .map(|k| NormalForm::deriv(&self.jet(alpha, k, index.clone())))
                .collect(),
        )
    }

    pub(crate) fn is_expansion_symbol(&self, f: &FunctionSymbol) -> bool {
        f.order().is_some() && self.dependents.iter().any(|d| d.base() == f.base() && d.args() == f.args())
    }
}

/// A generator stored through its expanded coefficients: `xi[i]` is the
/// series `sum_k eps^k xi~_(k)i` and `eta[a]` is `sum_k eps^k eta~_(k)a`.
#[derive(Clone, PartialEq, Debug)]
pub struct Generator {
    space: Arc<JetSpace>,
    xi: Vec<EpsSeries>,
    eta: Vec<EpsSeries>,
}

impl Generator {
    pub fn zero(space: &Arc<JetSpace>) -> Generator {
        let p = space.order;
        Generator {
            space: space.clone(),
            xi: vec![EpsSeries::zero(p); space.independents.len()],
            eta: vec![EpsSeries::zero(p); space.dependents.len()],
        }
    }

    pub fn new(space: &Arc<JetSpace>, xi: Vec<EpsSeries>, eta: Vec<EpsSeries>) -> Result<Generator, SeriesError> {
        for s in xi.iter().chain(&eta) {
            if s.order() != space.order {
                return Err(SeriesError::OrderMismatch(s.order(), space.order));
            }
        }
        assert_eq!(xi.len(), space.independents.len());
        assert_eq!(eta.len(), space.dependents.len());
        Ok(Generator {
            space: space.clone(),
            xi,
            eta,
        })
    }

    /// Build from per-order text slots keyed `xi_<var>` / `eta_<dep>`.
    pub fn from_slots(space: &Arc<JetSpace>, slots: &[(&str, &[&str])]) -> Result<Generator, LieError> {
        let mut g = Generator::zero(space);
        for (key, orders) in slots {
            let forms: Vec<NormalForm> = orders
                .iter()
                .map(|s| NormalForm::parse(s))
                .collect::<Result<_, _>>()?;
            g.set_slot(key, forms)?;
        }
        Ok(g)
    }

    /// Replace the slot named `xi_<var>` or `eta_<dep>`.
    pub fn set_slot(&mut self, key: &str, mut forms: Vec<NormalForm>) -> Result<(), LieError> {
        let p = self.space.order;
        if forms.len() > p + 1 {
            return Err(SeriesError::OrderOverflow {
                next: forms.len() - 1,
                max: p,
            }
            .into());
        }
        forms.resize(p + 1, NormalForm::zero());
        let s = EpsSeries::new(forms);
        if let Some(var) = key.strip_prefix("xi_") {
            let i = self
                .space
                .index_of_independent(var)
                .ok_or_else(|| SeriesError::UnknownDependent(var.to_string()))?;
            self.xi[i] = s;
        } else if let Some(dep) = key.strip_prefix("eta_") {
            let a = self
                .space
                .index_of_dependent(dep)
                .ok_or_else(|| SeriesError::UnknownDependent(dep.to_string()))?;
            self.eta[a] = s;
        } else {
            return Err(SeriesError::UnknownDependent(key.to_string()).into());
        }
        Ok(())
    }

    /// Build from the per-order infinitesimals `xi_(k)(x, u)`, `eta_(k)(x, u)`
    /// written in the unexpanded dependents, via the recursion operator.
    pub fn from_infinitesimals(
        space: &Arc<JetSpace>,
        xi: &[Vec<NormalForm>],
        eta: &[Vec<NormalForm>],
    ) -> Result<Generator, SeriesError> {
        let vars: Vec<&str> = space.independents.iter().map(|v| &**v).collect();
        let p = space.order;
        let build = |per_order: &Vec<NormalForm>| -> Result<EpsSeries, SeriesError> {
            Ok(EpsSeries::new(series::tilde_coefficients(per_order, &vars, &space.dependents, p)?))
        };
        let xi = xi.iter().map(build).collect::<Result<_, _>>()?;
        let eta = eta.iter().map(build).collect::<Result<_, _>>()?;
        Generator::new(space, xi, eta)
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn xi(&self) -> &[EpsSeries] {
        &self.xi
    }

    pub fn eta(&self) -> &[EpsSeries] {
        &self.eta
    }

    pub fn xi_mut(&mut self) -> &mut [EpsSeries] {
        &mut self.xi
    }

    pub fn eta_mut(&mut self) -> &mut [EpsSeries] {
        &mut self.eta
    }

    /// `(slot name, series)` for every component, `xi` first.
    pub fn slots(&self) -> Vec<(String, &EpsSeries)> {
        let mut out = Vec::new();
        for (v, s) in self.space.independents.iter().zip(&self.xi) {
            out.push((format!("xi_{v}"), s));
        }
        for (d, s) in self.space.dependents.iter().zip(&self.eta) {
            out.push((format!("eta_{}", d.base()), s));
        }
        out
    }

    fn zip_with(
        &self,
        other: &Generator,
        f: impl Fn(&EpsSeries, &EpsSeries) -> Result<EpsSeries, SeriesError>,
    ) -> Result<Generator, SeriesError> {
        if self.order() != other.order() {
            return Err(SeriesError::OrderMismatch(self.order(), other.order()));
        }
        Ok(Generator {
            space: self.space.clone(),
            xi: self.xi.iter().zip(&other.xi).map(|(a, b)| f(a, b)).collect::<Result<_, _>>()?,
            eta: self.eta.iter().zip(&other.eta).map(|(a, b)| f(a, b)).collect::<Result<_, _>>()?,
        })
    }

    pub fn add(&self, other: &Generator) -> Result<Generator, SeriesError> {
        self.zip_with(other, EpsSeries::add)
    }

    pub fn sub(&self, other: &Generator) -> Result<Generator, SeriesError> {
        self.zip_with(other, EpsSeries::sub)
    }

    pub fn scale(&self, c: &NormalForm) -> Generator {
        self.map(|s| s.scale(c))
    }

    /// `eps^k` times the generator, truncated.
    pub fn shift(&self, k: usize) -> Generator {
        self.map(|s| s.shift(k))
    }

    pub fn map(&self, f: impl Fn(&EpsSeries) -> EpsSeries) -> Generator {
        Generator {
            space: self.space.clone(),
            xi: self.xi.iter().map(&f).collect(),
            eta: self.eta.iter().map(&f).collect(),
        }
    }

    pub fn try_map<E>(&self, f: impl Fn(&EpsSeries) -> Result<EpsSeries, E>) -> Result<Generator, E> {
        Ok(Generator {
            space: self.space.clone(),
            xi: self.xi.iter().map(&f).collect::<Result<_, _>>()?,
            eta: self.eta.iter().map(&f).collect::<Result<_, _>>()?,
        })
    }

    /// Same generator viewed at a lower or higher series order.
    pub fn with_order(&self, p: usize) -> Generator {
        let space = Arc::new(JetSpace {
            order: p,
            ..(*self.space).clone()
        });
        Generator {
            space,
            xi: self.xi.iter().map(|s| s.with_order(p)).collect(),
            eta: self.eta.iter().map(|s| s.with_order(p)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.xi.iter().chain(&self.eta).all(EpsSeries::is_zero)
    }

    /// Action on a function of `x` and the expansion symbols (no jets):
    /// `sum_i xi_i dF/dx_i + sum_(k,a) eta~_(k)a dF/du_(k)a`.
    pub fn act(&self, f: &NormalForm) -> Result<EpsSeries, SeriesError> {
        let p = self.order();
        let space = self.space.clone();
        let frozen = move |s: &FunctionSymbol| space.is_expansion_symbol(s);
        let mut out = EpsSeries::zero(p);
        for (v, xi) in self.space.independents.iter().zip(&self.xi) {
            if xi.is_zero() {
                continue;
            }
            let d = f.partial_explicit(v, &frozen);
            if !d.is_zero() {
                out = out.add(&xi.scale(&d))?;
            }
        }
        let mut flat = NormalForm::zero();
        for (a, eta) in self.eta.iter().enumerate() {
            for (k, c) in eta.coeffs().iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let u = self.space.jet(a, k, self.space.zero_index());
                let d = f.partial_deriv(&u);
                if !d.is_zero() {
                    flat = flat.add(&c.mul(&d));
                }
            }
        }
        out.add(&EpsSeries::constant(flat, p))
    }

    pub fn act_series(&self, s: &EpsSeries) -> Result<EpsSeries, SeriesError> {
        let mut out = EpsSeries::zero(self.order());
        for (j, c) in s.coeffs().iter().enumerate() {
            if !c.is_zero() {
                out = out.add(&self.act(c)?.shift(j))?;
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, s) in self.slots() {
            if s.is_zero() {
                continue;
            }
            if !first {
                f.write_str("; ")?;
            }
            write!(f, "{name} = {s}")?;
            first = false;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// `[g1, g2]` on the expanded coordinates, truncated.
pub fn commutator(g1: &Generator, g2: &Generator) -> Result<Generator, SeriesError> {
    if g1.order() != g2.order() {
        return Err(SeriesError::OrderMismatch(g1.order(), g2.order()));
    }
    let comp = |a: &EpsSeries, b: &EpsSeries| -> Result<EpsSeries, SeriesError> {
        g1.act_series(b)?.sub(&g2.act_series(a)?)
    };
    let xi = g1.xi.iter().zip(&g2.xi).map(|(a, b)| comp(a, b)).collect::<Result<_, _>>()?;
    let eta = g1.eta.iter().zip(&g2.eta).map(|(a, b)| comp(a, b)).collect::<Result<_, _>>()?;
    Generator::new(&g1.space, xi, eta)
}

/// Total derivative on the expanded jet space; jets of expansion symbols at
/// or beyond `jet_depth` cannot be differentiated.
pub fn total_derivative(e: &NormalForm, var: &str, jet_depth: usize) -> Result<NormalForm, LieError> {
    for a in e.deep_atoms() {
        if let Some(d) = atoms::as_derivative(a) {
            if d.function.order().is_some() && d.order() >= jet_depth {
                return Err(LieError::JetDepthExceeded(d.name()));
            }
        }
    }
    Ok(e.diff(var))
}

fn series_diff(s: &EpsSeries, var: &str) -> EpsSeries {
    s.map(|c| c.diff(var))
}

/// Coefficients `eta_(a,J)` for all `|J| <= r`.
#[derive(Clone, Debug)]
pub struct ProlongedGenerator {
    pub base: Generator,
    pub eta_deriv: BTreeMap<(usize, MultiIndex), EpsSeries>,
    pub max_order: usize,
}

impl ProlongedGenerator {
    pub fn get(&self, alpha: usize, index: &MultiIndex) -> Option<&EpsSeries> {
        self.eta_deriv.get(&(alpha, index.clone()))
    }
}

fn indices_up_to(n: usize, r: usize) -> Vec<MultiIndex> {
    let mut out: Vec<MultiIndex> = vec![SmallVec::from_elem(0, n)];
    let mut frontier = out.clone();
    for _ in 0..r {
        let mut next = Vec::new();
        for j in &frontier {
            let last = j.iter().rposition(|&c| c > 0).unwrap_or(0);
            for s in last..n {
                let mut k = j.clone();
                k[s] += 1;
                next.push(k);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Prolong over expanded series:
/// `eta_(J+i) = D_i eta_J - sum_k D_i xi_k u_(J+k)`.
pub fn prolong(g: &Generator, r: usize) -> Result<ProlongedGenerator, LieError> {
    if r > MAX_PROLONGATION {
        return Err(LieError::UnsupportedOrder(r, MAX_PROLONGATION));
    }
    let space = g.space.clone();
    let n = space.independents.len();
    let dxi: Vec<Vec<EpsSeries>> = space
        .independents
        .iter()
        .map(|v| g.xi.iter().map(|xi| series_diff(xi, v)).collect())
        .collect();
    let mut map = BTreeMap::new();
    for alpha in 0..space.dependents.len() {
        for j in indices_up_to(n, r) {
            let value = match j.iter().rposition(|&c| c > 0) {
                None => g.eta[alpha].clone(),
                Some(i) => {
                    let mut parent = j.clone();
                    parent[i] -= 1;
                    let prev: &EpsSeries = &map[&(alpha, parent.clone())];
                    let mut acc = series_diff(prev, &space.independents[i]);
                    for (k, d) in dxi[i].iter().enumerate() {
                        if d.is_zero() {
                            continue;
                        }
                        let mut idx = parent.clone();
                        idx[k] += 1;
                        acc = acc.sub(&d.mul(&space.expanded_jet(alpha, &idx))?)?;
                    }
                    acc
                }
            };
            map.insert((alpha, j), value);
        }
    }
    Ok(ProlongedGenerator {
        base: g.clone(),
        eta_deriv: map,
        max_order: r,
    })
}

/// Classical prolongation of a generator given in the unexpanded dependents
/// (the coefficients may contain `eps`); the result is not expanded.
pub fn prolong_unexpanded(
    space: &JetSpace,
    xi: &[NormalForm],
    eta: &[NormalForm],
    r: usize,
) -> Result<BTreeMap<(usize, MultiIndex), NormalForm>, LieError> {
    if r > MAX_PROLONGATION {
        return Err(LieError::UnsupportedOrder(r, MAX_PROLONGATION));
    }
    let n = space.independents.len();
    let mut map = BTreeMap::new();
    for (alpha, dep) in space.dependents.iter().enumerate() {
        for j in indices_up_to(n, r) {
            let value = match j.iter().rposition(|&c| c > 0) {
                None => eta[alpha].clone(),
                Some(i) => {
                    let mut parent = j.clone();
                    parent[i] -= 1;
                    let var = &space.independents[i];
                    let prev: &NormalForm = &map[&(alpha, parent.clone())];
                    let mut acc = prev.diff(var);
                    for (k, x) in xi.iter().enumerate() {
                        let mut idx = parent.clone();
                        idx[k] += 1;
                        let u = NormalForm::deriv(&DerivativeSymbol::new(dep.clone(), idx));
                        acc = acc.sub(&x.diff(var).mul(&u));
                    }
                    acc
                }
            };
            map.insert((alpha, j), value);
        }
    }
    Ok(map)
}
