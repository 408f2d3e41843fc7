use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

/// Registered transcendental functions.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum TransFn {
    Log,
    Exp,
    Sin,
    Cos,
    Arctan,
}

impl TransFn {
    pub const ALL: [TransFn; 5] = [
        TransFn::Log,
        TransFn::Exp,
        TransFn::Sin,
        TransFn::Cos,
        TransFn::Arctan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransFn::Log => "log",
            TransFn::Exp => "exp",
            TransFn::Sin => "sin",
            TransFn::Cos => "cos",
            TransFn::Arctan => "arctan",
        }
    }

    pub fn from_name(name: &str) -> Option<TransFn> {
        TransFn::ALL.into_iter().find(|f| f.name() == name)
    }

    pub(crate) fn code(self) -> u32 {
        match self {
            TransFn::Log => 3,
            TransFn::Exp => 4,
            TransFn::Sin => 5,
            TransFn::Cos => 6,
            TransFn::Arctan => 7,
        }
    }

    pub(crate) fn from_code(code: u32) -> Option<TransFn> {
        TransFn::ALL.into_iter().find(|f| f.code() == code)
    }
}

impl fmt::Display for TransFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Argument slot of a function symbol.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum FnArg {
    Var(Arc<str>),
    Dep(FunctionSymbol),
}

impl FnArg {
    pub fn label(&self) -> String {
        match self {
            FnArg::Var(v) => v.to_string(),
            FnArg::Dep(f) => f.name(),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
struct FunctionInner {
    base: Arc<str>,
    order: Option<u32>,
    args: Vec<FnArg>,
}

/// A function of some independent variables, optionally tagged with an
/// expansion order (`u` with order 1 is `u1`).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct FunctionSymbol(Arc<FunctionInner>);

impl FunctionSymbol {
    pub fn new(base: &str, vars: &[&str]) -> Self {
        FunctionSymbol(Arc::new(FunctionInner {
            base: base.into(),
            order: None,
            args: vars.iter().map(|v| FnArg::Var((*v).into())).collect(),
        }))
    }

    pub fn with_args(base: &str, order: Option<u32>, args: Vec<FnArg>) -> Self {
        FunctionSymbol(Arc::new(FunctionInner {
            base: base.into(),
            order,
            args,
        }))
    }

    /// The order-`k` expansion symbol of this function.
    pub fn at_order(&self, k: u32) -> Self {
        FunctionSymbol(Arc::new(FunctionInner {
            base: self.0.base.clone(),
            order: Some(k),
            args: self.0.args.clone(),
        }))
    }

    /// The unexpanded function this symbol belongs to.
    pub fn unexpanded(&self) -> Self {
        FunctionSymbol(Arc::new(FunctionInner {
            base: self.0.base.clone(),
            order: None,
            args: self.0.args.clone(),
        }))
    }

    pub fn base(&self) -> &str {
        &self.0.base
    }

    pub fn order(&self) -> Option<u32> {
        self.0.order
    }

    pub fn args(&self) -> &[FnArg] {
        &self.0.args
    }

    pub fn name(&self) -> String {
        match self.0.order {
            Some(k) => format!("{}{}", self.0.base, k),
            None => self.0.base.to_string(),
        }
    }

    pub fn arg_position(&self, var: &str) -> Option<usize> {
        self.0
            .args
            .iter()
            .position(|a| matches!(a, FnArg::Var(v) if &**v == var))
    }

    /// Whether every argument is a single-letter variable, so derivative
    /// suffixes can be written compactly (`u0_xy`).
    pub fn compact_suffix(&self) -> bool {
        self.0
            .args
            .iter()
            .all(|a| matches!(a, FnArg::Var(v) if v.chars().count() == 1))
    }

    pub fn value(&self) -> DerivativeSymbol {
        DerivativeSymbol::new(self.clone(), SmallVec::from_elem(0, self.0.args.len()))
    }
}

pub type MultiIndex = SmallVec<[u8; 4]>;

/// A partial derivative of a function symbol; the zero index is the value.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct DerivativeSymbol {
    pub function: FunctionSymbol,
    pub index: MultiIndex,
}

impl DerivativeSymbol {
    pub fn new(function: FunctionSymbol, index: MultiIndex) -> Self {
        debug_assert_eq!(function.args().len(), index.len());
        DerivativeSymbol { function, index }
    }

    pub fn order(&self) -> usize {
        self.index.iter().map(|&c| c as usize).sum()
    }

    pub fn bumped(&self, slot: usize) -> Self {
        let mut index = self.index.clone();
        index[slot] += 1;
        DerivativeSymbol {
            function: self.function.clone(),
            index,
        }
    }

    pub fn with_index(&self, index: MultiIndex) -> Self {
        DerivativeSymbol {
            function: self.function.clone(),
            index,
        }
    }

    /// Whether `self` is obtained from `other` by further differentiation.
    pub fn divides(&self, other: &DerivativeSymbol) -> bool {
        self.function == other.function
            && self.index.iter().zip(&other.index).all(|(a, b)| a <= b)
    }

    pub fn name(&self) -> String {
        if self.index.iter().all(|&c| c == 0) {
            return self.function.name();
        }
        let args = self.function.args();
        if self.function.compact_suffix() {
            let mut s = self.function.name();
            s.push('_');
            for (arg, &count) in args.iter().zip(&self.index) {
                for _ in 0..count {
                    s.push_str(&arg.label());
                }
            }
            s
        } else {
            let parts: Vec<String> = args
                .iter()
                .zip(&self.index)
                .flat_map(|(arg, &count)| std::iter::repeat_n(arg.label(), count as usize))
                .collect();
            format!("{}_{{{}}}", self.function.name(), parts.join(","))
        }
    }
}

impl fmt::Display for DerivativeSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}
