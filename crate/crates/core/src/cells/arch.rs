use std::fmt;
use std::str::FromStr;

use super::cell::CellFamily;
use super::network::{LayerSpec, NetworkSpec};
use super::CellError;

pub const LOOKUP_DROPOUT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArchKind {
    TmazeSmall,
    TmazeDeepMinGru,
    LookupStandard,
    LookupHybrid,
}

impl ArchKind {
    pub const ALL: [ArchKind; 4] = [
        ArchKind::TmazeSmall,
        ArchKind::TmazeDeepMinGru,
        ArchKind::LookupStandard,
        ArchKind::LookupHybrid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ArchKind::TmazeSmall => "tmaze-small",
            ArchKind::TmazeDeepMinGru => "tmaze-deep-mingru",
            ArchKind::LookupStandard => "lookup-standard",
            ArchKind::LookupHybrid => "lookup-hybrid",
        }
    }
}

impl fmt::Display for ArchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArchKind {
    type Err = CellError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| CellError::BadSpec(format!("unknown architecture `{s}`")))
    }
}

/// Recurrent-layer choice for an architecture: one family, or the 64+64
/// BMRU/minGRU hybrid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellChoice {
    Single(CellFamily),
    Hybrid,
}

impl CellChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            CellChoice::Single(f) => f.as_str(),
            CellChoice::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for CellChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CellChoice {
    type Err = CellError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("hybrid") {
            Ok(CellChoice::Hybrid)
        } else {
            s.parse().map(CellChoice::Single)
        }
    }
}

pub fn build_architecture(
    kind: ArchKind,
    cell: CellChoice,
    input: usize,
    out: usize,
) -> Result<NetworkSpec, CellError> {
    let illegal = || CellError::IllegalArchitecture(format!("{kind} with {cell}"));
    let layers = match (kind, cell) {
        (ArchKind::TmazeSmall, CellChoice::Single(f)) => vec![
            LayerSpec::Recurrent(vec![(f, 5)]),
            LayerSpec::Relu(20),
            LayerSpec::Relu(10),
            LayerSpec::Linear(out),
        ],
        (ArchKind::TmazeDeepMinGru, CellChoice::Single(CellFamily::MinGru)) => {
            let mut layers = vec![LayerSpec::Relu(128)];
            layers.extend((0..4).map(|_| LayerSpec::Recurrent(vec![(CellFamily::MinGru, 128)])));
            layers.extend([
                LayerSpec::SkipSum,
                LayerSpec::Relu(64),
                LayerSpec::Relu(16),
                LayerSpec::Linear(out),
            ]);
            layers
        }
        (ArchKind::LookupStandard, CellChoice::Single(f)) => lookup_layers(vec![(f, 128)], out),
        (ArchKind::LookupHybrid, CellChoice::Hybrid) => {
            lookup_layers(vec![(CellFamily::Bmru, 64), (CellFamily::MinGru, 64)], out)
        }
        _ => return Err(illegal()),
    };
    let spec = NetworkSpec { input, layers };
    spec.validate()?;
    Ok(spec)
}

fn lookup_layers(cells: Vec<(CellFamily, usize)>, out: usize) -> Vec<LayerSpec> {
    let p = LOOKUP_DROPOUT;
    vec![
        LayerSpec::Relu(128),
        LayerSpec::Dropout(p),
        LayerSpec::Recurrent(cells),
        LayerSpec::Dropout(p),
        LayerSpec::SkipSum,
        LayerSpec::Dropout(p),
        LayerSpec::Relu(64),
        LayerSpec::Dropout(p),
        LayerSpec::Relu(16),
        LayerSpec::Dropout(p),
        LayerSpec::Linear(out),
    ]
}
