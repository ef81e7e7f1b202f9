//! Degree-3 cubature rules for permutation-symmetric linear functionals.
//!
//! A functional `L` on polynomials in `n` variables that is invariant under
//! permutations of the variables is described up to degree 3 by seven
//! numbers ([`SymmetricMomentSpec`]). The construction splits `L(1)` into `n`
//! masses, one per transformed direction, reduces each direction to a
//! one-dimensional moment problem of order three, solves it with two nodes,
//! and maps the nodes back into `R^n`. The result is a `2n`-point rule exact
//! for every polynomial of total degree at most 3, or `2n + 1` points when an
//! extra node absorbs a mass split that does not add up to `L(1)`.
//!
//! ```
//! use symcubature::{region_rule, check_exactness, Region, RegionKind};
//!
//! let region = Region::new(RegionKind::Simplex, 3).unwrap();
//! let rule = region_rule(&region, None).unwrap();
//! assert_eq!(rule.len(), 6);
//! let report = check_exactness(&rule, &region.spec()).unwrap();
//! assert!(report.max_abs_error < 1e-13);
//! ```

pub mod assembly;
pub mod cli;
pub mod decomposition;
pub mod error;
pub mod io;
pub mod moment_1d;
pub mod moments;
pub mod reference;
pub mod split_search;
pub mod validation;

pub use assembly::{
    assemble_rule, build_rule, compensation_node, map_node, region_rule, CubatureRule, RuleMetadata,
};
pub use decomposition::{
    compute_constants, default_split, reduced_moment_chain, remaining_mass, DecompositionConstants,
    MassSplit, OneDimMoments,
};
pub use error::{CubatureError, Result};
pub use moment_1d::{hankel_feasibility, solve_two_point, Feasibility, OneDimRule};
pub use moments::{
    cube_spec, region_monomial_moment, sector_spec, simplex_spec, MomentClass, MomentClasses,
    Region, RegionKind, SymmetricMomentSpec,
};
pub use split_search::{
    feasible_region_bounds, random_feasible_split, search_masses, SearchMode, SearchObjective,
};
pub use validation::{
    check_exactness, classify_nodes, compare_to_reference, degree4_nonexactness, ExactnessReport,
    NodeClass, NodeClassification, RuleDiff,
};
