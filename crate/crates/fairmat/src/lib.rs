//! Exact-arithmetic toolkit for random assignment of indivisible items under
//! hereditary and matroid feasibility constraints.
//!
//! Everything probability-valued is a [`rat::Rat`] (arbitrary-precision
//! rational); the only floating point in the crate is the conditional-gradient
//! solver behind the anonymous mechanism. The crate is organized around:
//!
//! - [`domain`]: instances, preferences, constraint families, fractional
//!   assignments, lotteries, and their JSON formats ([`io`]);
//! - [`matroid`]: rank functions, the reduced rank `r^x`, the lexicographic
//!   choice function, and eating capacities;
//! - [`sdrel`]: stochastic-dominance comparisons and the efficiency /
//!   envy-freeness / proportionality predicates;
//! - [`exactlp`]: an exact two-phase simplex, the feasible-assignment
//!   polytope in H- and V-representation, and the Frank-Wolfe solver;
//! - [`mechanisms`]: the five assignment mechanisms;
//! - [`verify`]: lottery decomposition, feasibility certificates, the
//!   nonexistence certifications, and independent cross-oracles;
//! - [`instances`]: the built-in instance gallery and generators.

pub mod domain;
pub mod exactlp;
pub mod instances;
pub mod io;
pub mod matroid;
pub mod mechanisms;
pub mod rat;
pub mod sdrel;
pub mod util;
pub mod verify;

pub use rat::Rat;

use std::sync::OnceLock;

/// Enumeration guards. Exceeding a guard is a hard error, never silent
/// degradation.
#[derive(Clone, Debug)]
pub struct Guards {
    /// Maximum ground-set size for per-call subset enumeration
    /// (reduced rank, eating capacities, polytope membership sweeps).
    pub subset_m: usize,
    /// Maximum ground-set size for enumerating an entire set family
    /// (augmentation checks, rank-row enumeration, lex-LP oracles).
    pub family_m: usize,
    /// Maximum number of deterministic assignments enumerated for the
    /// V-representation.
    pub assignments: usize,
}

impl Default for Guards {
    fn default() -> Self {
        Guards {
            subset_m: 20,
            family_m: 12,
            assignments: 200_000,
        }
    }
}

impl Guards {
    /// Parse the `FAIRMAT_GUARD` override: either a bare integer (sets both
    /// `subset` and `family`) or `subset=S,family=F,assignments=A` with any
    /// subset of the keys.
    pub fn parse_override(raw: &str) -> Self {
        let mut g = Guards::default();
        let raw = raw.trim();
        if raw.is_empty() {
            return g;
        }
        if let Ok(v) = raw.parse::<usize>() {
            g.subset_m = v;
            g.family_m = v;
            return g;
        }
        for part in raw.split(',') {
            let Some((key, val)) = part.split_once('=') else {
                continue;
            };
            let Ok(v) = val.trim().parse::<usize>() else {
                continue;
            };
            match key.trim() {
                "subset" => g.subset_m = v,
                "family" => g.family_m = v,
                "assignments" => g.assignments = v,
                _ => {}
            }
        }
        g
    }

    fn from_env() -> Self {
        match std::env::var("FAIRMAT_GUARD") {
            Ok(raw) => Guards::parse_override(&raw),
            Err(_) => Guards::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::Guards;

    #[test]
    fn guard_override_formats() {
        let g = Guards::parse_override("14");
        assert_eq!((g.subset_m, g.family_m, g.assignments), (14, 14, 200_000));
        let g = Guards::parse_override("subset=24,assignments=500000");
        assert_eq!((g.subset_m, g.family_m, g.assignments), (24, 12, 500_000));
        let g = Guards::parse_override("");
        assert_eq!(g.subset_m, 20);
    }
}

static GUARDS: OnceLock<Guards> = OnceLock::new();

/// Process-wide enumeration guards, read once from `FAIRMAT_GUARD`.
pub fn guards() -> &'static Guards {
    GUARDS.get_or_init(Guards::from_env)
}
