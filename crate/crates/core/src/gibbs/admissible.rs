//! Exhaustive local-admissibility checking.
//!
//! A spec is locally admissible when every locally feasible partial
//! configuration is feasible. The check enumerates all subsets and all
//! configurations on them up to a state budget; it either certifies the
//! property, returns a concrete counterexample, or reports that the budget
//! ran out (never a silent pass).

use super::{GibbsSpec, PartialConfig, Symbol};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum AdmissibilityVerdict {
    Admissible,
    /// A locally feasible but infeasible partial configuration.
    Counterexample(PartialConfig),
    BudgetExceeded {
        examined: u64,
    },
}

/// Tests `feasible <=> locally feasible` over all subsets and assignments,
/// in ascending subset-mask then mixed-radix order. `budget` counts examined
/// states (partial configurations plus feasibility-search expansions).
pub fn check_local_admissibility(spec: &GibbsSpec, budget: u64) -> Result<AdmissibilityVerdict> {
    let n = spec.n();
    if n >= 63 {
        return Err(Error::InvalidInput(
            "admissibility check enumerates subsets; n >= 63 unsupported".into(),
        ));
    }
    let ids = spec.graph().node_ids().to_vec();
    let mut examined: u64 = 0;
    for mask in 0u64..(1 << n) {
        let nodes: Vec<u64> = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| ids[i]).collect();
        let k = nodes.len();
        let mut syms: Vec<Symbol> = vec![0; k];
        loop {
            examined += 1;
            if examined > budget {
                return Ok(AdmissibilityVerdict::BudgetExceeded { examined });
            }
            let tau =
                PartialConfig::from_pairs(nodes.iter().copied().zip(syms.iter().copied()))?;
            if spec.is_locally_feasible(&tau) {
                let remaining = budget.saturating_sub(examined).max(1);
                match spec.find_feasible_extension(&tau, remaining) {
                    Ok(Some(_)) => {}
                    Ok(None) => return Ok(AdmissibilityVerdict::Counterexample(tau)),
                    Err(Error::BudgetExceeded { .. }) => {
                        return Ok(AdmissibilityVerdict::BudgetExceeded { examined })
                    }
                    Err(e) => return Err(e),
                }
            }
            // Next assignment in mixed-radix order.
            let mut pos = k;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                syms[pos] += 1;
                if syms[pos] < spec.q() {
                    break;
                }
                syms[pos] = 0;
            }
            if k == 0 || (pos == 0 && syms[0] == 0) {
                break;
            }
        }
    }
    Ok(AdmissibilityVerdict::Admissible)
}
