use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    Boundary, CellCoupler, CellMember, EndLabel, LatticeError, LatticeGraph, Member, RootGraph, SiteTag,
    UnitCellSpec, MAX_COUPLER_MEMBERS,
};

/// Line graph of a finite root graph.
///
/// Every root edge becomes a resonator and every root vertex of degree ≥ 2 a
/// coupler joining the resonator ends that meet there. End 0 of a resonator
/// is attached to the smaller of its two root endpoints.
pub fn line_graph(root: &RootGraph) -> Result<LatticeGraph, LatticeError> {
    if root.edges().is_empty() {
        return Err(LatticeError::EmptyGraph);
    }
    let mut incident: BTreeMap<usize, Vec<Member>> =
        root.vertices().iter().map(|&v| (v, Vec::new())).collect();
    for (site, &(u, v)) in root.edges().iter().enumerate() {
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        incident.entry(lo).or_default().push(Member { site, end: EndLabel::Zero });
        incident.entry(hi).or_default().push(Member { site, end: EndLabel::One });
    }
    for (&vertex, members) in &incident {
        if members.len() > MAX_COUPLER_MEMBERS {
            return Err(LatticeError::DegreeTooHigh { vertex, degree: members.len() });
        }
    }
    let couplers = incident.into_values().filter(|m| m.len() >= 2).collect();
    let n = root.edges().len();
    Ok(LatticeGraph::from_couplers(n, couplers, vec![0; n], Boundary::Hardwall))
}

/// A vertex of a periodic root graph: vertex index within the cell plus the
/// cell it belongs to, relative to the edge's home cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RootVertexRef {
    pub cell_offset: u8,
    pub vertex: usize,
}

/// Root graph of a quasi-1D chain: a unit cell of vertices plus edges whose
/// endpoints may sit in the next cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicRoot {
    pub vertices_per_cell: usize,
    pub edges: Vec<(RootVertexRef, RootVertexRef)>,
}

/// Line graph of a periodic root, one unit cell at a time.
///
/// Resonator `e` of the cell is root edge `e`. End 0 goes to the endpoint
/// that is smaller as `(cell_offset, vertex)`. The coupler of root vertex `v`
/// collects all resonator ends landing on `v`; member offsets are shifted so
/// the smallest is 0.
pub fn line_graph_cell(
    root: &PeriodicRoot,
    tags: BTreeMap<usize, SiteTag>,
) -> Result<UnitCellSpec, LatticeError> {
    if root.edges.is_empty() {
        return Err(LatticeError::EmptyGraph);
    }
    // members[v] holds (site, end, offset of the site's home cell relative to v's cell)
    let mut members: Vec<Vec<(usize, EndLabel, i32)>> = vec![Vec::new(); root.vertices_per_cell];
    for (site, &(a, b)) in root.edges.iter().enumerate() {
        for w in [a, b] {
            if w.vertex >= root.vertices_per_cell {
                return Err(LatticeError::UnknownVertex { edge: site, vertex: w.vertex });
            }
            if w.cell_offset > 1 {
                return Err(LatticeError::InvalidCell(format!("root edge {site} spans more than one cell")));
            }
        }
        if a == b {
            return Err(LatticeError::SelfLoop { edge: site, vertex: a.vertex });
        }
        let base = a.cell_offset.min(b.cell_offset);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        for (w, end) in [(lo, EndLabel::Zero), (hi, EndLabel::One)] {
            let rel = i32::from(w.cell_offset - base);
            members[w.vertex].push((site, end, -rel));
        }
    }
    let mut couplers = Vec::new();
    for (vertex, list) in members.into_iter().enumerate() {
        if list.len() > MAX_COUPLER_MEMBERS {
            return Err(LatticeError::DegreeTooHigh { vertex, degree: list.len() });
        }
        if list.len() < 2 {
            continue;
        }
        let shift = -list.iter().map(|m| m.2).min().unwrap_or(0);
        let members = list
            .into_iter()
            .map(|(site, end, off)| CellMember { site, end, cell_offset: (off + shift) as u8 })
            .collect();
        couplers.push(CellCoupler { members });
    }
    let cell = UnitCellSpec { sites_per_cell: root.edges.len(), couplers, tags };
    cell.validate()?;
    Ok(cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::validate;
    use proptest::prelude::*;

    #[test]
    fn triangle_maps_to_triangle() {
        let lat = line_graph(&RootGraph::cycle(3).unwrap()).unwrap();
        assert_eq!(lat.n_sites(), 3);
        assert_eq!(lat.couplers.len(), 3);
        assert!(lat.couplers.iter().all(|c| c.members.len() == 2));
        for nb in lat.neighbors() {
            assert_eq!(nb.len(), 2);
        }
        assert!(validate(&lat).is_empty());
    }

    #[test]
    fn path_of_three_vertices() {
        let root = RootGraph::new(vec![0, 1, 2], vec![(0, 1), (1, 2)]).unwrap();
        let lat = line_graph(&root).unwrap();
        assert_eq!(lat.n_sites(), 2);
        assert_eq!(lat.couplers.len(), 1);
        assert_eq!(
            lat.couplers[0].members,
            vec![Member { site: 0, end: EndLabel::One }, Member { site: 1, end: EndLabel::Zero }]
        );
        assert_eq!(lat.sites[0].ends[0].coupler, None);
    }

    #[test]
    fn degree_four_and_empty_are_rejected() {
        let star = RootGraph::new(vec![0, 1, 2, 3, 4], vec![(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert_eq!(line_graph(&star), Err(LatticeError::DegreeTooHigh { vertex: 0, degree: 4 }));
        let empty = RootGraph::new(vec![0], vec![]).unwrap();
        assert_eq!(line_graph(&empty), Err(LatticeError::EmptyGraph));
    }

    #[test]
    fn parallel_edges_share_two_couplers() {
        let root = RootGraph::new(vec![0, 1, 2], vec![(0, 1), (1, 0), (1, 2)]).unwrap();
        let lat = line_graph(&root).unwrap();
        assert_eq!(lat.n_sites(), 3);
        assert_eq!(lat.couplers.len(), 2);
        assert!(validate(&lat).is_empty());
    }

    /// Honeycomb patch: `rows × cols` brick-wall layout, every interior
    /// vertex of degree 3.
    fn honeycomb_patch(rows: usize, cols: usize) -> RootGraph {
        let id = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((id(r, c), id(r, c + 1)));
                }
                if r + 1 < rows && (r + c) % 2 == 0 {
                    edges.push((id(r, c), id(r + 1, c)));
                }
            }
        }
        RootGraph::new((0..rows * cols).collect(), edges).unwrap()
    }

    #[test]
    fn honeycomb_line_graph_has_kagome_coordination() {
        let root = honeycomb_patch(6, 8);
        let lat = line_graph(&root).unwrap();
        let adj = lat.neighbors();
        let mut bulk = 0;
        for (site, &(u, v)) in root.edges().iter().enumerate() {
            if root.degree(u) == 3 && root.degree(v) == 3 {
                assert_eq!(adj[site].len(), 4, "bulk site {site}");
                bulk += 1;
            }
        }
        assert!(bulk > 10);
        assert!(lat.couplers.iter().all(|c| c.members.len() <= 3));
    }

    fn brute_force_line_adjacency(root: &RootGraph) -> Vec<std::collections::BTreeSet<usize>> {
        let e = root.edges();
        (0..e.len())
            .map(|i| {
                (0..e.len())
                    .filter(|&j| {
                        j != i && {
                            let (a, b) = e[i];
                            let (c, d) = e[j];
                            a == c || a == d || b == c || b == d
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn small_root() -> impl Strategy<Value = RootGraph> {
        (3usize..9)
            .prop_flat_map(|n| {
                let edge = (0..n, 0..n).prop_filter("no self loop", |(a, b)| a != b);
                (Just(n), proptest::collection::vec(edge, 1..12))
            })
            .prop_filter_map("degree <= 3", |(n, edges)| {
                let root = RootGraph::new((0..n).collect(), edges).ok()?;
                root.vertices().iter().all(|&v| root.degree(v) <= 3).then_some(root)
            })
    }

    proptest! {
        #[test]
        fn line_graph_degree_matches_root(root in small_root()) {
            let lat = line_graph(&root).unwrap();
            prop_assert!(validate(&lat).is_empty());
            let adj = lat.neighbors();
            let brute = brute_force_line_adjacency(&root);
            let simple = {
                let mut pairs = std::collections::BTreeSet::new();
                root.edges().iter().all(|&(a, b)| pairs.insert((a.min(b), a.max(b))))
            };
            for (site, &(u, v)) in root.edges().iter().enumerate() {
                prop_assert_eq!(&adj[site], &brute[site]);
                if simple {
                    prop_assert_eq!(adj[site].len(), root.degree(u) - 1 + root.degree(v) - 1);
                }
            }
        }

        #[test]
        fn cycle_line_graph_is_cycle(n in 3usize..40) {
            let lat = line_graph(&RootGraph::cycle(n).unwrap()).unwrap();
            prop_assert_eq!(lat.n_sites(), n);
            prop_assert!(lat.is_connected());
            prop_assert!(lat.neighbors().iter().all(|nb| nb.len() == 2));
        }
    }
}
