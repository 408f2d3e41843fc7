use std::collections::BTreeMap;
use std::sync::{Arc, LazyLock};

use smallvec::SmallVec;

use super::symbol::{DerivativeSymbol, FnArg, FunctionSymbol, MultiIndex};
use super::{Atom, Expr};

/// Name resolution for the text grammar.
#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    independents: Vec<Arc<str>>,
    functions: BTreeMap<String, FunctionSymbol>,
}

static STANDARD: LazyLock<SymbolTable> = LazyLock::new(|| {
    let mut t = SymbolTable::new();
    for v in ["x", "y", "w"] {
        t.declare_independent(v);
    }
    for base in ["u", "v", "p"] {
        let f = FunctionSymbol::new(base, &["x", "y"]);
        for k in 0..4 {
            t.declare_function(f.at_order(k));
        }
        t.declare_function(f);
    }
    t.declare_function(FunctionSymbol::new("f1", &["x", "y"]));
    t.declare_function(FunctionSymbol::new("f2", &["x"]));
    for name in ["U0", "V0", "P0", "U1", "V1", "P1"] {
        t.declare_function(FunctionSymbol::new(name, &["w"]));
    }
    t
});

impl SymbolTable {
    pub fn new() -> Self {
        SymbolTable::default()
    }

    /// Independent variables `x`, `y`, `w`; functions `u`, `v`, `p` of
    /// `(x, y)` with expansion orders 0..=3; `f1(x, y)`, `f2(x)`; profiles
    /// `U0`..`P1` of `w`.
    pub fn standard() -> &'static SymbolTable {
        &STANDARD
    }

    pub fn declare_independent(&mut self, name: &str) {
        if !self.independents.iter().any(|v| &**v == name) {
            self.independents.push(name.into());
        }
    }

    pub fn declare_function(&mut self, f: FunctionSymbol) {
        self.functions.insert(f.name(), f);
    }

    pub fn independents(&self) -> &[Arc<str>] {
        &self.independents
    }

    pub fn function(&self, name: &str) -> Option<&FunctionSymbol> {
        self.functions.get(name)
    }

    pub fn derivative(&self, name: &str) -> Option<DerivativeSymbol> {
        if let Some(f) = self.functions.get(name) {
            return Some(f.value());
        }
        for (pos, _) in name.match_indices('_').collect::<Vec<_>>().into_iter().rev() {
            let (prefix, suffix) = (&name[..pos], &name[pos + 1..]);
            let Some(f) = self.functions.get(prefix) else {
                continue;
            };
            if let Some(index) = parse_suffix(f, suffix) {
                return Some(DerivativeSymbol::new(f.clone(), index));
            }
        }
        None
    }

    pub fn resolve(&self, name: &str) -> Expr {
        if self.independents.iter().any(|v| &**v == name) {
            return Expr::Atom(Atom::Independent(name.into()));
        }
        if let Some(d) = self.derivative(name) {
            return Expr::Atom(Atom::Derivative(d));
        }
        Expr::Atom(Atom::Parameter(name.into()))
    }
}

fn parse_suffix(f: &FunctionSymbol, suffix: &str) -> Option<MultiIndex> {
    let args = f.args();
    let mut index: MultiIndex = SmallVec::from_elem(0, args.len());
    let slot_of = |label: &str| args.iter().position(|a| a.label() == label);
    if let Some(inner) = suffix.strip_prefix('{').and_then(|s| s.strip_suffix('}')) {
        for label in inner.split(',') {
            index[slot_of(label.trim())?] += 1;
        }
    } else {
        if suffix.is_empty() || !args.iter().all(|a| matches!(a, FnArg::Var(v) if v.len() == 1)) {
            return None;
        }
        for c in suffix.chars() {
            index[slot_of(&c.to_string())?] += 1;
        }
    }
    Some(index)
}
