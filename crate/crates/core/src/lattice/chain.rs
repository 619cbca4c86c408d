use super::{Boundary, LatticeError, LatticeGraph, Member, UnitCellSpec};

/// Instantiates `n_cells` copies of `cell` along a chain.
///
/// Site `s` of cell `c` gets index `c * sites_per_cell + s`. Inter-cell
/// couplers wrap around under periodic boundaries. Under a hard wall a
/// coupler instance whose partner cell lies outside the chain keeps only its
/// in-chain members (the missing ports are terminated, i.e. carry no
/// coupling) and is dropped once fewer than two members remain.
pub fn build_chain(
    cell: &UnitCellSpec,
    n_cells: usize,
    boundary: Boundary,
) -> Result<LatticeGraph, LatticeError> {
    cell.validate()?;
    if n_cells == 0 {
        return Err(LatticeError::NoCells);
    }
    let spc = cell.sites_per_cell;
    let n = n_cells as i64;
    let mut couplers: Vec<Vec<Member>> = Vec::new();
    let first = match boundary {
        Boundary::Periodic => 0,
        Boundary::Hardwall => -1,
    };
    for c in first..n {
        for coupler in &cell.couplers {
            if !coupler.is_inter_cell() && c < 0 {
                continue;
            }
            let members: Vec<Member> = coupler
                .members
                .iter()
                .filter_map(|m| {
                    let target = c + i64::from(m.cell_offset);
                    let target = match boundary {
                        Boundary::Periodic => target.rem_euclid(n),
                        Boundary::Hardwall if (0..n).contains(&target) => target,
                        Boundary::Hardwall => return None,
                    };
                    Some(Member { site: target as usize * spc + m.site, end: m.end })
                })
                .collect();
            if members.len() >= 2 {
                couplers.push(members);
            }
        }
    }
    let cell_index = (0..n_cells * spc).map(|i| i / spc).collect();
    Ok(LatticeGraph::from_couplers(n_cells * spc, couplers, cell_index, boundary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{validate, CellCoupler, CellMember, EndLabel};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn cm(site: usize, end: EndLabel, cell_offset: u8) -> CellMember {
        CellMember { site, end, cell_offset }
    }

    /// Two sites, one intra coupler (0.end1–1.end0) and one inter coupler
    /// (1.end1 – next cell's 0.end0).
    fn dimer_cell() -> UnitCellSpec {
        UnitCellSpec {
            sites_per_cell: 2,
            couplers: vec![
                CellCoupler { members: vec![cm(0, EndLabel::One, 0), cm(1, EndLabel::Zero, 0)] },
                CellCoupler { members: vec![cm(1, EndLabel::One, 0), cm(0, EndLabel::Zero, 1)] },
            ],
            tags: BTreeMap::new(),
        }
    }

    #[test]
    fn dimer_chain_hardwall_counts() {
        // by hand: intra couplers in cells 0,1,2 and inter couplers 0→1, 1→2
        let lat = build_chain(&dimer_cell(), 3, Boundary::Hardwall).unwrap();
        assert_eq!(lat.n_sites(), 6);
        assert_eq!(lat.couplers.len(), 5);
        assert!(validate(&lat).is_empty());
        assert_eq!(lat.sites[0].ends[0].coupler, None);
        assert_eq!(lat.sites[5].ends[1].coupler, None);
    }

    #[test]
    fn single_cell_periodic_wraps_to_itself() {
        let lat = build_chain(&dimer_cell(), 1, Boundary::Periodic).unwrap();
        assert_eq!(lat.couplers.len(), 2);
        assert_eq!(
            lat.couplers[1].members,
            vec![Member { site: 1, end: EndLabel::One }, Member { site: 0, end: EndLabel::Zero }]
        );
        assert!(validate(&lat).is_empty());
    }

    #[test]
    fn zero_cells_and_invalid_cells_are_rejected() {
        assert_eq!(build_chain(&dimer_cell(), 0, Boundary::Hardwall), Err(LatticeError::NoCells));
        let mut bad = dimer_cell();
        bad.couplers[0].members.pop();
        assert!(matches!(build_chain(&bad, 2, Boundary::Hardwall), Err(LatticeError::InvalidCell(_))));
    }

    #[test]
    fn paper_chain_keeps_two_member_boundary_coupler() {
        let cell = crate::lattice::paper_lattice();
        let lat = build_chain(&cell, 9, Boundary::Hardwall).unwrap();
        // 3 intra per cell, 8 full inter couplers, 1 terminated 2-member coupler at the input end
        assert_eq!(lat.couplers.len(), 9 * 3 + 8 + 1);
        let two: Vec<_> = lat.couplers.iter().filter(|c| c.members.len() == 2).collect();
        assert_eq!(two.len(), 1);
        assert!(two[0].members.iter().all(|m| m.site < 6));
    }

    proptest! {
        #[test]
        fn coupler_counts_for_two_member_inter_couplers(n in 1usize..30) {
            let cell = dimer_cell();
            let intra = cell.intra_cell_couplers().count();
            let inter = cell.inter_cell_couplers().count();
            let periodic = build_chain(&cell, n, Boundary::Periodic).unwrap();
            prop_assert_eq!(periodic.couplers.len(), n * (intra + inter));
            let hard = build_chain(&cell, n, Boundary::Hardwall).unwrap();
            prop_assert_eq!(hard.couplers.len(), n * intra + (n - 1) * inter);
            prop_assert_eq!(hard.n_sites(), 2 * n);
        }

        #[test]
        fn paper_chain_periodic_counts(n in 1usize..20) {
            let cell = crate::lattice::paper_lattice();
            let lat = build_chain(&cell, n, Boundary::Periodic).unwrap();
            prop_assert_eq!(lat.couplers.len(), 4 * n);
            prop_assert!(lat.is_connected());
            prop_assert!(validate(&lat).is_empty());
        }
    }
}
