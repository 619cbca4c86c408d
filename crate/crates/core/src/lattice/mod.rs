//! Resonator networks.
//!
//! A CPW resonator is a line-like object: each resonator ("site") has two
//! ends, and ends meet other ends at multi-way coupling capacitors. The
//! geometry therefore lives on the *ends* rather than on the sites, and the
//! end label (0 or 1) of each coupler member is what later fixes the sign of
//! the hopping for antisymmetric (half-wave) modes.

mod chain;
mod line_graph;
mod schema;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chain::build_chain;
pub use line_graph::{line_graph, line_graph_cell, PeriodicRoot, RootVertexRef};
pub use schema::{paper_lattice, paper_root, CellDocument, PAPER_CELL_JSON};

pub type SiteId = usize;
pub type CouplerId = usize;

/// Hardware supports two- and three-way coupling capacitors only.
pub const MAX_COUPLER_MEMBERS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("root vertex {vertex} has degree {degree}; couplers join at most {MAX_COUPLER_MEMBERS} resonator ends")]
    DegreeTooHigh { vertex: usize, degree: usize },
    #[error("root graph has no edges")]
    EmptyGraph,
    #[error("root edge {edge} is a self-loop on vertex {vertex}")]
    SelfLoop { edge: usize, vertex: usize },
    #[error("root edge {edge} references unknown vertex {vertex}")]
    UnknownVertex { edge: usize, vertex: usize },
    #[error("invalid unit cell: {0}")]
    InvalidCell(String),
    #[error("n_cells must be at least 1")]
    NoCells,
    #[error("invalid cell document: {0}")]
    Document(String),
}

/// Which of the two resonator ends. For the mode function
/// `cos(μπx/L)` end 0 sits at `x = 0` and end 1 at `x = L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum EndLabel {
    Zero,
    One,
}

impl EndLabel {
    pub fn index(self) -> usize {
        match self {
            EndLabel::Zero => 0,
            EndLabel::One => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            EndLabel::Zero => EndLabel::One,
            EndLabel::One => EndLabel::Zero,
        }
    }
}

impl TryFrom<u8> for EndLabel {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(EndLabel::Zero),
            1 => Ok(EndLabel::One),
            other => Err(format!("end label must be 0 or 1, got {other}")),
        }
    }
}

impl From<EndLabel> for u8 {
    fn from(e: EndLabel) -> u8 {
        e.index() as u8
    }
}

/// A (site, end) pair participating in a coupler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Member {
    pub site: SiteId,
    pub end: EndLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coupler {
    pub id: CouplerId,
    pub members: Vec<Member>,
}

/// One end of a resonator: either attached to a coupler or terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndRecord {
    pub label: EndLabel,
    pub coupler: Option<CouplerId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResonatorSite {
    pub id: SiteId,
    /// Indexed by end label: `ends[0]` is end 0.
    pub ends: [EndRecord; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Hardwall,
}

/// A finite resonator network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeGraph {
    pub sites: Vec<ResonatorSite>,
    pub couplers: Vec<Coupler>,
    pub cell_index: Vec<usize>,
    pub boundary: Boundary,
}

impl LatticeGraph {
    /// Builds a graph from a coupler list, deriving the per-site end records.
    /// Ends attached to several couplers keep the first one; `validate`
    /// reports the conflict.
    pub fn from_couplers(
        n_sites: usize,
        member_lists: Vec<Vec<Member>>,
        cell_index: Vec<usize>,
        boundary: Boundary,
    ) -> Self {
        let mut sites: Vec<ResonatorSite> = (0..n_sites)
            .map(|id| ResonatorSite {
                id,
                ends: [
                    EndRecord { label: EndLabel::Zero, coupler: None },
                    EndRecord { label: EndLabel::One, coupler: None },
                ],
            })
            .collect();
        let mut couplers = Vec::with_capacity(member_lists.len());
        for (id, members) in member_lists.into_iter().enumerate() {
            for m in &members {
                if let Some(site) = sites.get_mut(m.site) {
                    let slot = &mut site.ends[m.end.index()].coupler;
                    if slot.is_none() {
                        *slot = Some(id);
                    }
                }
            }
            couplers.push(Coupler { id, members });
        }
        LatticeGraph { sites, couplers, cell_index, boundary }
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// Number of distinct cells referenced by `cell_index`.
    pub fn n_cells(&self) -> usize {
        self.cell_index.iter().max().map_or(0, |m| m + 1)
    }

    /// Site adjacency: sites sharing at least one coupler.
    pub fn neighbors(&self) -> Vec<BTreeSet<SiteId>> {
        let mut adj = vec![BTreeSet::new(); self.sites.len()];
        for c in &self.couplers {
            for a in &c.members {
                for b in &c.members {
                    if a.site != b.site && a.site < adj.len() {
                        adj[a.site].insert(b.site);
                    }
                }
            }
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        let n = self.sites.len();
        if n == 0 {
            return true;
        }
        let adj = self.neighbors();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(s) = stack.pop() {
            for &t in &adj[s] {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        seen.into_iter().all(|x| x)
    }

    /// Reverses the orientation of one resonator: end 0 becomes end 1 in
    /// every coupler and in the site record. Half-wave spectra are invariant
    /// under this relabelling.
    pub fn flip_site(&mut self, site: SiteId) {
        for c in &mut self.couplers {
            for m in &mut c.members {
                if m.site == site {
                    m.end = m.end.flipped();
                }
            }
        }
        if let Some(s) = self.sites.get_mut(site) {
            let [a, b] = s.ends;
            s.ends = [
                EndRecord { label: EndLabel::Zero, coupler: b.coupler },
                EndRecord { label: EndLabel::One, coupler: a.coupler },
            ];
        }
    }
}

/// A structural problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Diagnostic {
    DegreeTooHigh { coupler: CouplerId, members: usize },
    TooFewMembers { coupler: CouplerId, members: usize },
    DuplicateMember { coupler: CouplerId, site: SiteId },
    UnknownSite { coupler: CouplerId, site: SiteId },
    EndReused { site: SiteId, end: u8, couplers: Vec<CouplerId> },
    EndRecordMismatch { site: SiteId, end: u8 },
    CellIndexLength { expected: usize, found: usize },
    WrapAroundUnderHardwall { coupler: CouplerId },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DegreeTooHigh { coupler, members } => {
                write!(f, "coupler {coupler} has {members} members (max {MAX_COUPLER_MEMBERS})")
            }
            Diagnostic::TooFewMembers { coupler, members } => {
                write!(f, "coupler {coupler} has {members} member(s), needs at least 2")
            }
            Diagnostic::DuplicateMember { coupler, site } => {
                write!(f, "site {site} appears more than once in coupler {coupler}")
            }
            Diagnostic::UnknownSite { coupler, site } => {
                write!(f, "coupler {coupler} references missing site {site}")
            }
            Diagnostic::EndReused { site, end, couplers } => {
                write!(f, "end {end} of site {site} sits in couplers {couplers:?}")
            }
            Diagnostic::EndRecordMismatch { site, end } => {
                write!(f, "end record {end} of site {site} disagrees with coupler membership")
            }
            Diagnostic::CellIndexLength { expected, found } => {
                write!(f, "cell_index has {found} entries, expected {expected}")
            }
            Diagnostic::WrapAroundUnderHardwall { coupler } => {
                write!(f, "coupler {coupler} joins the last cell to the first under a hard wall")
            }
        }
    }
}

/// Lists every violated invariant of `lat`. An empty list means valid.
pub fn validate(lat: &LatticeGraph) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let n = lat.sites.len();
    if lat.cell_index.len() != n {
        out.push(Diagnostic::CellIndexLength { expected: n, found: lat.cell_index.len() });
    }
    let mut end_owners: BTreeMap<(SiteId, EndLabel), Vec<CouplerId>> = BTreeMap::new();
    for c in &lat.couplers {
        let k = c.members.len();
        if k > MAX_COUPLER_MEMBERS {
            out.push(Diagnostic::DegreeTooHigh { coupler: c.id, members: k });
        }
        if k < 2 {
            out.push(Diagnostic::TooFewMembers { coupler: c.id, members: k });
        }
        let mut seen = BTreeSet::new();
        let mut reported = BTreeSet::new();
        for m in &c.members {
            if m.site >= n {
                out.push(Diagnostic::UnknownSite { coupler: c.id, site: m.site });
                continue;
            }
            if !seen.insert(m.site) && reported.insert(m.site) {
                out.push(Diagnostic::DuplicateMember { coupler: c.id, site: m.site });
            }
            end_owners.entry((m.site, m.end)).or_default().push(c.id);
        }
    }
    for ((site, end), owners) in &end_owners {
        if owners.len() > 1 {
            out.push(Diagnostic::EndReused { site: *site, end: (*end).into(), couplers: owners.clone() });
        }
    }
    for s in &lat.sites {
        for rec in &s.ends {
            let expected = end_owners.get(&(s.id, rec.label)).map(|o| o[0]);
            if expected != rec.coupler {
                out.push(Diagnostic::EndRecordMismatch { site: s.id, end: rec.label.into() });
            }
        }
    }
    if lat.boundary == Boundary::Hardwall && lat.cell_index.len() == n {
        let last = lat.n_cells().saturating_sub(1);
        if last > 1 {
            for c in &lat.couplers {
                let cells: BTreeSet<usize> =
                    c.members.iter().filter(|m| m.site < n).map(|m| lat.cell_index[m.site]).collect();
                if cells.contains(&0) && cells.contains(&last) {
                    out.push(Diagnostic::WrapAroundUnderHardwall { coupler: c.id });
                }
            }
        }
    }
    out
}

/// Undirected multigraph whose edges become resonators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootGraph {
    vertices: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

impl RootGraph {
    pub fn new(vertices: Vec<usize>, edges: Vec<(usize, usize)>) -> Result<Self, LatticeError> {
        let known: BTreeSet<usize> = vertices.iter().copied().collect();
        for (i, &(u, v)) in edges.iter().enumerate() {
            for w in [u, v] {
                if !known.contains(&w) {
                    return Err(LatticeError::UnknownVertex { edge: i, vertex: w });
                }
            }
            if u == v {
                return Err(LatticeError::SelfLoop { edge: i, vertex: u });
            }
        }
        Ok(RootGraph { vertices, edges })
    }

    /// Cycle graph on `n` vertices.
    pub fn cycle(n: usize) -> Result<Self, LatticeError> {
        let edges = (0..n).map(|i| (i, (i + 1) % n)).collect();
        RootGraph::new((0..n).collect(), edges)
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }
}

/// On-axis sites lie on the mirror line of the unit cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteTag {
    OnAxis,
    OffAxis,
}

/// Coupler member inside a unit cell, with its cell offset (0 or +1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellMember {
    pub site: SiteId,
    pub end: EndLabel,
    pub cell_offset: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCoupler {
    pub members: Vec<CellMember>,
}

impl CellCoupler {
    /// True if the coupler reaches into the next cell.
    pub fn is_inter_cell(&self) -> bool {
        self.members.iter().any(|m| m.cell_offset > 0)
    }
}

/// Unit cell of a quasi-one-dimensional chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitCellSpec {
    pub sites_per_cell: usize,
    pub couplers: Vec<CellCoupler>,
    #[serde(default)]
    pub tags: BTreeMap<SiteId, SiteTag>,
}

impl UnitCellSpec {
    pub fn intra_cell_couplers(&self) -> impl Iterator<Item = &CellCoupler> {
        self.couplers.iter().filter(|c| !c.is_inter_cell())
    }

    pub fn inter_cell_couplers(&self) -> impl Iterator<Item = &CellCoupler> {
        self.couplers.iter().filter(|c| c.is_inter_cell())
    }

    pub fn sites_with_tag(&self, tag: SiteTag) -> Vec<SiteId> {
        self.tags.iter().filter(|(_, t)| **t == tag).map(|(s, _)| *s).collect()
    }

    /// Reverses the orientation of one site of the cell.
    pub fn flip_site(&mut self, site: SiteId) {
        for c in &mut self.couplers {
            for m in &mut c.members {
                if m.site == site {
                    m.end = m.end.flipped();
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        let bad = |msg: String| Err(LatticeError::InvalidCell(msg));
        if self.sites_per_cell == 0 {
            return bad("sites_per_cell must be positive".into());
        }
        let mut end_use: BTreeMap<(SiteId, EndLabel), usize> = BTreeMap::new();
        for (ci, c) in self.couplers.iter().enumerate() {
            let k = c.members.len();
            if !(2..=MAX_COUPLER_MEMBERS).contains(&k) {
                return bad(format!("coupler {ci} has {k} members, expected 2 or 3"));
            }
            if c.members.iter().all(|m| m.cell_offset != 0) {
                return bad(format!("coupler {ci} has no member in the home cell"));
            }
            let mut seen = BTreeSet::new();
            for m in &c.members {
                if m.site >= self.sites_per_cell {
                    return bad(format!("coupler {ci} references site {}", m.site));
                }
                if m.cell_offset > 1 {
                    return bad(format!(
                        "coupler {ci} uses cell offset {}; only 0 and +1 are allowed",
                        m.cell_offset
                    ));
                }
                if !seen.insert((m.site, m.cell_offset)) {
                    return bad(format!("site {} appears twice in coupler {ci}", m.site));
                }
                *end_use.entry((m.site, m.end)).or_default() += 1;
            }
        }
        for ((site, end), count) in end_use {
            if count > 1 {
                return bad(format!(
                    "end {} of site {site} is used by {count} couplers per cell",
                    u8::from(end)
                ));
            }
        }
        for site in self.tags.keys() {
            if *site >= self.sites_per_cell {
                return bad(format!("tag references site {site}"));
            }
        }
        Ok(())
    }
}
