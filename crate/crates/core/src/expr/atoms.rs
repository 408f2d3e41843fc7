use std::collections::HashMap;
use std::sync::{Arc, LazyLock, RwLock};

use super::normal::NormalForm;
use super::symbol::{DerivativeSymbol, TransFn};

/// Interned atom handle. The top three bits carry the atom kind.
pub(crate) type AtomId = u32;

const KIND_SHIFT: u32 = 29;
const INDEX_MASK: u32 = (1 << KIND_SHIFT) - 1;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum AtomKind {
    Independent,
    Parameter,
    Derivative,
    Trans(TransFn),
}

impl AtomKind {
    fn code(self) -> u32 {
        match self {
            AtomKind::Independent => 0,
            AtomKind::Parameter => 1,
            AtomKind::Derivative => 2,
            AtomKind::Trans(f) => f.code(),
        }
    }
}

pub(crate) fn kind(id: AtomId) -> AtomKind {
    match id >> KIND_SHIFT {
        0 => AtomKind::Independent,
        1 => AtomKind::Parameter,
        2 => AtomKind::Derivative,
        c => AtomKind::Trans(TransFn::from_code(c).expect("atom kind bits")),
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub(crate) enum AtomKey {
    Independent(Arc<str>),
    Parameter(Arc<str>),
    Derivative(DerivativeSymbol),
    Trans(TransFn, NormalForm),
}

impl AtomKey {
    fn kind(&self) -> AtomKind {
        match self {
            AtomKey::Independent(_) => AtomKind::Independent,
            AtomKey::Parameter(_) => AtomKind::Parameter,
            AtomKey::Derivative(_) => AtomKind::Derivative,
            AtomKey::Trans(f, _) => AtomKind::Trans(*f),
        }
    }
}

/// Structural sort key; printing and canonical ordering depend only on it.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub(crate) struct SortKey {
    rank: u8,
    name: String,
    degree: usize,
    index: Vec<std::cmp::Reverse<u8>>,
    arg: String,
}

#[derive(Debug)]
pub(crate) struct AtomInfo {
    pub key: AtomKey,
    pub sort: SortKey,
}

#[derive(Default)]
struct Interner {
    infos: Vec<Arc<AtomInfo>>,
    map: HashMap<AtomKey, AtomId>,
}

static INTERNER: LazyLock<RwLock<Interner>> = LazyLock::new(Default::default);

fn sort_key(key: &AtomKey) -> SortKey {
    match key {
        AtomKey::Parameter(name) => SortKey {
            rank: 0,
            name: name.to_string(),
            degree: 0,
            index: Vec::new(),
            arg: String::new(),
        },
        AtomKey::Independent(name) => SortKey {
            rank: 1,
            name: name.to_string(),
            degree: 0,
            index: Vec::new(),
            arg: String::new(),
        },
        AtomKey::Trans(f, arg) => SortKey {
            rank: 2,
            name: f.name().to_string(),
            degree: 0,
            index: Vec::new(),
            arg: arg.to_expr().to_string(),
        },
        AtomKey::Derivative(d) => SortKey {
            rank: 3,
            name: format!("{}{}", d.function.name(), d.function.args().len()),
            degree: d.order(),
            index: d.index.iter().map(|&c| std::cmp::Reverse(c)).collect(),
            arg: d.name(),
        },
    }
}

pub(crate) fn intern(key: AtomKey) -> AtomId {
    if let Some(&id) = INTERNER.read().expect("interner lock").map.get(&key) {
        return id;
    }
    let sort = sort_key(&key);
    let mut guard = INTERNER.write().expect("interner lock");
    if let Some(&id) = guard.map.get(&key) {
        return id;
    }
    let index = guard.infos.len() as u32;
    assert!(index <= INDEX_MASK, "atom table exhausted");
    let id = (key.kind().code() << KIND_SHIFT) | index;
    guard.infos.push(Arc::new(AtomInfo {
        key: key.clone(),
        sort,
    }));
    guard.map.insert(key, id);
    id
}

pub(crate) fn info(id: AtomId) -> Arc<AtomInfo> {
    INTERNER.read().expect("interner lock").infos[(id & INDEX_MASK) as usize].clone()
}

pub(crate) fn independent(name: &str) -> AtomId {
    intern(AtomKey::Independent(name.into()))
}

pub(crate) fn parameter(name: &str) -> AtomId {
    intern(AtomKey::Parameter(name.into()))
}

pub(crate) fn derivative(d: DerivativeSymbol) -> AtomId {
    intern(AtomKey::Derivative(d))
}

pub(crate) fn as_derivative(id: AtomId) -> Option<DerivativeSymbol> {
    if kind(id) != AtomKind::Derivative {
        return None;
    }
    match &info(id).key {
        AtomKey::Derivative(d) => Some(d.clone()),
        _ => None,
    }
}

pub(crate) fn trans_parts(id: AtomId) -> Option<(TransFn, NormalForm)> {
    match &info(id).key {
        AtomKey::Trans(f, arg) => Some((*f, arg.clone())),
        _ => None,
    }
}

pub(crate) fn name_of(id: AtomId) -> Option<Arc<str>> {
    match &info(id).key {
        AtomKey::Independent(n) | AtomKey::Parameter(n) => Some(n.clone()),
        _ => None,
    }
}

pub(crate) fn compare(a: AtomId, b: AtomId) -> std::cmp::Ordering {
    if a == b {
        return std::cmp::Ordering::Equal;
    }
    info(a).sort.cmp(&info(b).sort)
}
