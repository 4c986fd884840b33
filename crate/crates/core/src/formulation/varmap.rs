use std::collections::HashMap;
use std::fmt;

/// Semantic index of a model column. Node, arc and vaccine fields are
/// positions in the instance's `nodes`, `arcs` and `vaccines` lists;
/// periods start at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKey {
    /// Hub opened at a facility.
    Y(usize),
    /// Drones purchased.
    Z,
    /// Drones used at a hub in a period.
    V { node: usize, period: usize },
    /// Land shipment leaving in `period`.
    S { arc: usize, vaccine: usize, period: usize },
    /// Drone shipment, delivered in the same period.
    D { arc: usize, vaccine: usize, period: usize },
    /// End-of-period inventory.
    I { node: usize, vaccine: usize, period: usize },
    /// Doses administered at `center`, to `community` in community-level models.
    X {
        center: usize,
        community: Option<usize>,
        vaccine: usize,
        period: usize,
    },
    /// Fully immunized children attributed to a demand node.
    N(usize),
    /// Set-cover candidate selected.
    W(usize),
}

impl VarKey {
    pub fn symbol(&self) -> char {
        match self {
            VarKey::Y(_) => 'Y',
            VarKey::Z => 'Z',
            VarKey::V { .. } => 'V',
            VarKey::S { .. } => 'S',
            VarKey::D { .. } => 'D',
            VarKey::I { .. } => 'I',
            VarKey::X { .. } => 'X',
            VarKey::N(_) => 'N',
            VarKey::W(_) => 'W',
        }
    }
}

impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            VarKey::Y(i) => write!(f, "Y_{i}"),
            VarKey::Z => write!(f, "Z"),
            VarKey::V { node, period } => write!(f, "V_{node}_{period}"),
            VarKey::S { arc, vaccine, period } => write!(f, "S_{arc}_{vaccine}_{period}"),
            VarKey::D { arc, vaccine, period } => write!(f, "D_{arc}_{vaccine}_{period}"),
            VarKey::I { node, vaccine, period } => write!(f, "I_{node}_{vaccine}_{period}"),
            VarKey::X {
                center,
                community: Some(k),
                vaccine,
                period,
            } => write!(f, "X_{center}_{k}_{vaccine}_{period}"),
            VarKey::X {
                center,
                community: None,
                vaccine,
                period,
            } => write!(f, "X_{center}_{vaccine}_{period}"),
            VarKey::N(k) => write!(f, "N_{k}"),
            VarKey::W(i) => write!(f, "W_{i}"),
        }
    }
}

/// Bijection between semantic keys and column indices.
#[derive(Debug, Clone, Default)]
pub struct VarMap {
    keys: Vec<VarKey>,
    index: HashMap<VarKey, usize>,
}

impl VarMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `key` at the next column. Panics on a duplicate key, which
    /// would break the bijection.
    pub fn push(&mut self, key: VarKey) -> usize {
        let col = self.keys.len();
        let prev = self.index.insert(key, col);
        assert!(prev.is_none(), "duplicate column key {key}");
        self.keys.push(key);
        col
    }

    pub fn col(&self, key: &VarKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn key(&self, col: usize) -> Option<VarKey> {
        self.keys.get(col).copied()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, VarKey)> + '_ {
        self.keys.iter().copied().enumerate()
    }

    /// Column counts per symbol.
    pub fn counts(&self) -> std::collections::BTreeMap<char, usize> {
        let mut out = std::collections::BTreeMap::new();
        for k in &self.keys {
            *out.entry(k.symbol()).or_insert(0) += 1;
        }
        out
    }
}
