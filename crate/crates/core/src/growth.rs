//! Growth operators Φ and Φ*.
//!
//! Both operators create `2·k_v` new vertices around every vertex `v` of the
//! input tree (`k_v` its input degree), so the vertex count follows
//! `n ↦ 5n − 4` under either one.
//!
//! Numbering of new vertices is fixed so that outputs are reproducible:
//! existing ids are kept, then all A-class vertices are numbered, then all
//! B-class vertices.
//!
//! * Φ: edges are visited in lexicographic `(u, v)` order with `u < v`; each
//!   edge receives two ids, first the subdivision vertex adjacent to `u`,
//!   then the one adjacent to `v`. B leaves follow, `k_p` consecutive ids per
//!   parent `p` in ascending order of `p`.
//! * Φ*: A leaves are numbered `k_p` per parent in ascending order of `p`,
//!   then B leaves the same way.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::tree::{resolve_seed, Provenance, SeedSpec, Tree, TreeError, VertexClass};

/// Default cap on the number of vertices a growth step may produce.
pub const DEFAULT_VERTEX_BUDGET: usize = 50_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrowthError {
    #[error("growth would produce {requested} vertices, above the budget of {budget}")]
    CapacityExceeded { requested: u128, budget: usize },
    #[error(transparent)]
    Seed(#[from] TreeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    Phi,
    PhiStar,
}

impl Operator {
    pub fn as_str(self) -> &'static str {
        match self {
            Operator::Phi => "phi",
            Operator::PhiStar => "phi-star",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Operator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "phi" => Ok(Operator::Phi),
            "phi-star" | "phistar" | "phi*" => Ok(Operator::PhiStar),
            other => Err(format!("unknown model {other:?}; expected phi or phi-star")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthModel {
    pub operator: Operator,
    pub steps: u32,
    pub seed: SeedSpec,
}

impl GrowthModel {
    pub fn new(operator: Operator, steps: u32, seed: SeedSpec) -> Self {
        GrowthModel {
            operator,
            steps,
            seed,
        }
    }
}

fn check_budget(n: usize, budget: usize) -> Result<usize, GrowthError> {
    let next = 5 * n as u128 - 4;
    if next > budget as u128 {
        return Err(GrowthError::CapacityExceeded {
            requested: next,
            budget,
        });
    }
    Ok(next as usize)
}

/// One step of Φ: subdivide every edge twice and hang `k_v` leaves on `v`.
pub fn grow_step_phi(tree: &Tree, step: u32, budget: usize) -> Result<Tree, GrowthError> {
    let n = tree.vertex_count();
    let next_n = check_budget(n, budget)?;
    let old_edges = tree.edge_count();

    let mut provenance = Vec::with_capacity(next_n);
    provenance.extend_from_slice(tree.provenances());
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(next_n - 1);

    let mut next_id = n as u32;
    for (u, v) in tree.edges() {
        let (a, b) = (next_id, next_id + 1);
        next_id += 2;
        edges.push((u as u32, a));
        edges.push((a, b));
        edges.push((b, v as u32));
    }
    provenance.resize(n + 2 * old_edges, Provenance::born(step, VertexClass::A));

    for p in 0..n {
        for _ in 0..tree.degree(p) {
            edges.push((p as u32, next_id));
            next_id += 1;
        }
    }
    provenance.resize(next_n, Provenance::born(step, VertexClass::B));
    debug_assert_eq!(next_id as usize, next_n);

    Ok(Tree::from_edges_unchecked(&edges, provenance))
}

/// One step of Φ*: hang `2·k_v` leaves directly on `v`, `k_v` of each class.
pub fn grow_step_phi_star(tree: &Tree, step: u32, budget: usize) -> Result<Tree, GrowthError> {
    let n = tree.vertex_count();
    let next_n = check_budget(n, budget)?;

    let mut provenance = Vec::with_capacity(next_n);
    provenance.extend_from_slice(tree.provenances());
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(next_n - 1);
    edges.extend(tree.edges().map(|(u, v)| (u as u32, v as u32)));

    let mut next_id = n as u32;
    for class in [VertexClass::A, VertexClass::B] {
        for p in 0..n {
            for _ in 0..tree.degree(p) {
                edges.push((p as u32, next_id));
                next_id += 1;
            }
        }
        provenance.resize(next_id as usize, Provenance::born(step, class));
    }
    debug_assert_eq!(next_id as usize, next_n);

    Ok(Tree::from_edges_unchecked(&edges, provenance))
}

pub fn grow_step(tree: &Tree, operator: Operator, step: u32, budget: usize) -> Result<Tree, GrowthError> {
    match operator {
        Operator::Phi => grow_step_phi(tree, step, budget),
        Operator::PhiStar => grow_step_phi_star(tree, step, budget),
    }
}

/// Applies `operator` `steps` times starting from `seed`.
pub fn grow_from(seed: Tree, operator: Operator, steps: u32, budget: usize) -> Result<Tree, GrowthError> {
    let mut tree = seed;
    for step in 1..=steps {
        tree = grow_step(&tree, operator, step, budget)?;
    }
    Ok(tree)
}

pub fn grow(model: &GrowthModel, budget: usize) -> Result<Tree, GrowthError> {
    let seed = resolve_seed(&model.seed)?;
    grow_from(seed, model.operator, model.steps, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{serialize, TreeFormat};

    fn seed(spec: SeedSpec) -> Tree {
        resolve_seed(&spec).unwrap()
    }

    #[test]
    fn phi_on_edge_is_six_vertex_path() {
        let t = grow_step_phi(&seed(SeedSpec::Edge), 1, DEFAULT_VERTEX_BUDGET).unwrap();
        t.check_invariants().unwrap();
        assert_eq!(t.vertex_count(), 6);
        // leaf 4 - 0 - 2 - 3 - 1 - leaf 5
        assert_eq!(
            serialize(&t, TreeFormat::EdgeList),
            b"0 2\n0 4\n1 3\n1 5\n2 3\n"
        );
        let classes: Vec<_> = t.provenances().iter().map(|p| p.class).collect();
        use VertexClass::*;
        assert_eq!(classes, vec![Seed, Seed, A, A, B, B]);
    }

    #[test]
    fn phi_degrees_double() {
        let star = seed(SeedSpec::Star(5));
        let t = grow_step_phi(&star, 1, DEFAULT_VERTEX_BUDGET).unwrap();
        t.check_invariants().unwrap();
        assert_eq!(t.degree(0), 8);
        for v in 0..star.vertex_count() {
            assert_eq!(t.degree(v), 2 * star.degree(v));
        }
    }

    #[test]
    fn phi_on_path3() {
        let t = grow_step_phi(&seed(SeedSpec::Path(3)), 1, DEFAULT_VERTEX_BUDGET).unwrap();
        t.check_invariants().unwrap();
        assert_eq!(t.vertex_count(), 11);
    }

    #[test]
    fn phi_star_on_edge_is_double_star() {
        let t = grow_step_phi_star(&seed(SeedSpec::Edge), 1, DEFAULT_VERTEX_BUDGET).unwrap();
        t.check_invariants().unwrap();
        assert_eq!(t.vertex_count(), 6);
        assert_eq!(t.degree(0), 3);
        assert_eq!(t.degree(1), 3);
        assert_eq!(t.neighbors(0), &[1, 2, 4]);
        assert_eq!(t.neighbors(1), &[0, 3, 5]);
    }

    #[test]
    fn phi_star_degrees_triple() {
        let star = seed(SeedSpec::Star(5));
        let t = grow_step_phi_star(&star, 1, DEFAULT_VERTEX_BUDGET).unwrap();
        assert_eq!(t.degree(0), 12);
    }

    #[test]
    fn zero_steps_returns_seed() {
        let model = GrowthModel::new(Operator::Phi, 0, SeedSpec::Edge);
        assert_eq!(grow(&model, DEFAULT_VERTEX_BUDGET).unwrap(), seed(SeedSpec::Edge));
    }

    #[test]
    fn vertex_counts() {
        let t = grow(&GrowthModel::new(Operator::Phi, 2, SeedSpec::Edge), DEFAULT_VERTEX_BUDGET).unwrap();
        assert_eq!(t.vertex_count(), 26);
        let t = grow(&GrowthModel::new(Operator::PhiStar, 3, SeedSpec::Edge), DEFAULT_VERTEX_BUDGET).unwrap();
        assert_eq!(t.vertex_count(), 126);
    }

    #[test]
    fn budget_is_enforced() {
        let model = GrowthModel::new(Operator::Phi, 3, SeedSpec::Edge);
        assert_eq!(
            grow(&model, 100),
            Err(GrowthError::CapacityExceeded {
                requested: 126,
                budget: 100
            })
        );
        assert!(grow(&model, 126).is_ok());
    }

    #[test]
    fn operator_parsing() {
        assert_eq!("phi".parse::<Operator>(), Ok(Operator::Phi));
        assert_eq!("phi-star".parse::<Operator>(), Ok(Operator::PhiStar));
        assert_eq!("PHI_STAR".parse::<Operator>(), Ok(Operator::PhiStar));
        assert!("psi".parse::<Operator>().is_err());
    }
}
