//! JSON form of unit cells and the bundled rhombus-chain cell.
//!
//! ```json
//! { "version": 1,
//!   "sites_per_cell": 6,
//!   "couplers": [ { "members": [ {"site": 0, "end": 0, "cell_offset": 1} ] } ],
//!   "tags": { "2": "on_axis" } }
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CellCoupler, LatticeError, PeriodicRoot, RootVertexRef, SiteId, SiteTag, UnitCellSpec};

/// Bundled unit cell of the quasi-1D rhombus chain (schema version 1).
pub const PAPER_CELL_JSON: &str = include_str!("../../assets/rhombus_chain_cell.v1.json");

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellDocument {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub sites_per_cell: usize,
    pub couplers: Vec<CellCoupler>,
    #[serde(default)]
    pub tags: BTreeMap<SiteId, SiteTag>,
}

impl CellDocument {
    pub fn from_cell(cell: &UnitCellSpec, name: Option<String>) -> Self {
        CellDocument {
            version: SCHEMA_VERSION,
            name,
            sites_per_cell: cell.sites_per_cell,
            couplers: cell.couplers.clone(),
            tags: cell.tags.clone(),
        }
    }

    pub fn parse(json: &str) -> Result<Self, LatticeError> {
        let doc: CellDocument =
            serde_json::from_str(json).map_err(|e| LatticeError::Document(e.to_string()))?;
        if doc.version != SCHEMA_VERSION {
            return Err(LatticeError::Document(format!(
                "unsupported cell schema version {} (expected {SCHEMA_VERSION})",
                doc.version
            )));
        }
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cell document serializes")
    }

    pub fn into_cell(self) -> Result<UnitCellSpec, LatticeError> {
        let cell =
            UnitCellSpec { sites_per_cell: self.sites_per_cell, couplers: self.couplers, tags: self.tags };
        cell.validate()?;
        Ok(cell)
    }
}

/// Root cell of the rhombus chain: vertices L=0, T=1, B=2, R=3 with edges
/// L–T, L–B, T–B, T–R, B–R and R–L of the next cell. Every vertex has
/// degree 3 and the two triangles make it non-bipartite.
pub fn paper_root() -> PeriodicRoot {
    let v = |cell_offset, vertex| RootVertexRef { cell_offset, vertex };
    let (l, t, b, r) = (0, 1, 2, 3);
    PeriodicRoot {
        vertices_per_cell: 4,
        edges: vec![
            (v(0, l), v(0, t)),
            (v(0, l), v(0, b)),
            (v(0, t), v(0, b)),
            (v(0, t), v(0, r)),
            (v(0, b), v(0, r)),
            (v(0, r), v(1, l)),
        ],
    }
}

/// Tags for the line graph of [`paper_root`]: the T–B rung and the R–L′ link
/// lie on the mirror axis, the four rhombus edges do not.
#[cfg(test)]
pub(crate) fn paper_tags() -> BTreeMap<SiteId, SiteTag> {
    [
        (0, SiteTag::OffAxis),
        (1, SiteTag::OffAxis),
        (2, SiteTag::OnAxis),
        (3, SiteTag::OffAxis),
        (4, SiteTag::OffAxis),
        (5, SiteTag::OnAxis),
    ]
    .into_iter()
    .collect()
}

/// The bundled six-resonator unit cell, loaded from its JSON asset.
pub fn paper_lattice() -> UnitCellSpec {
    CellDocument::parse(PAPER_CELL_JSON)
        .and_then(CellDocument::into_cell)
        .expect("bundled cell asset is valid")
}

/// Regenerates the asset content from the root graph.
#[cfg(test)]
pub(crate) fn paper_lattice_from_root() -> Result<UnitCellSpec, LatticeError> {
    super::line_graph_cell(&paper_root(), paper_tags())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_chain, validate, Boundary};

    #[test]
    fn asset_matches_line_graph_of_root() {
        let from_root = paper_lattice_from_root().unwrap();
        assert_eq!(paper_lattice(), from_root);
    }

    #[test]
    fn paper_cell_shape() {
        let cell = paper_lattice();
        assert_eq!(cell.sites_per_cell, 6);
        assert!(cell.couplers.iter().all(|c| c.members.len() == 3));
        assert_eq!(cell.sites_with_tag(SiteTag::OnAxis), vec![2, 5]);
        assert_eq!(cell.inter_cell_couplers().count(), 1);
        assert_eq!(cell.intra_cell_couplers().count(), 3);
    }

    #[test]
    fn nine_cell_chain_has_54_sites_and_is_connected() {
        let lat = build_chain(&paper_lattice(), 9, Boundary::Hardwall).unwrap();
        assert_eq!(lat.n_sites(), 54);
        assert!(lat.is_connected());
        assert!(validate(&lat).is_empty());
    }

    #[test]
    fn document_round_trip_and_version_check() {
        let doc = CellDocument::from_cell(&paper_lattice(), Some("x".into()));
        let back = CellDocument::parse(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        let bumped = doc.to_json().replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(CellDocument::parse(&bumped), Err(LatticeError::Document(_))));
        let unknown = doc.to_json().replacen('{', "{\"extra\": 0,", 1);
        assert!(CellDocument::parse(&unknown).is_err());
    }

    #[test]
    fn end_label_must_be_binary() {
        let bad = r#"{"version":1,"sites_per_cell":2,"couplers":[{"members":[
            {"site":0,"end":2,"cell_offset":0},{"site":1,"end":0,"cell_offset":0}]}]}"#;
        assert!(CellDocument::parse(bad).is_err());
    }
}
