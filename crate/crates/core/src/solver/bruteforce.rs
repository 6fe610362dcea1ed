//! Exhaustive plan enumeration, the ground truth for small instances.

use crate::error::{Result, WspError};
use crate::instance::{is_valid, Instance, Plan, UserId};

use super::{Clock, SolveOptions, SolveResult, Stats, Verdict};

/// Largest `n^k` the brute-force solver accepts by default.
pub const DEFAULT_CAP: u128 = 10_000_000;

/// Every plan over `k` steps and `n` users in lexicographic order.
pub fn all_plans(k: usize, n: usize) -> impl Iterator<Item = Plan> {
    let mut next = if n == 0 && k > 0 {
        None
    } else {
        Some(vec![0usize; k])
    };
    std::iter::from_fn(move || {
        let current = next.take()?;
        let mut succ = current.clone();
        let mut i = k;
        while i > 0 {
            i -= 1;
            succ[i] += 1;
            if succ[i] < n {
                next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(Plan::new(current.into_iter().map(UserId).collect()))
    })
}

fn check_cap(inst: &Instance, cap: u128) -> Result<()> {
    let plans = (inst.n() as u128)
        .checked_pow(inst.k() as u32)
        .unwrap_or(u128::MAX);
    if plans > cap {
        return Err(WspError::BruteForceCap { plans, cap });
    }
    Ok(())
}

pub fn solve_bruteforce(inst: &Instance) -> Result<SolveResult> {
    solve_bruteforce_with(inst, &SolveOptions::default(), DEFAULT_CAP)
}

pub fn solve_bruteforce_with(inst: &Instance, opts: &SolveOptions, cap: u128) -> Result<SolveResult> {
    check_cap(inst, cap)?;
    let clock = Clock::start(&opts.budget);
    let mut stats = Stats::default();
    for plan in all_plans(inst.k(), inst.n()) {
        if opts.budget.max_nodes.is_some_and(|m| stats.nodes_expanded >= m)
            || (stats.nodes_expanded % 4096 == 0 && clock.expired())
        {
            stats.wall_time = clock.elapsed();
            return Ok(SolveResult::without_plan(Verdict::BudgetExceeded, stats));
        }
        stats.nodes_expanded += 1;
        if is_valid(&plan, inst)? {
            stats.wall_time = clock.elapsed();
            return Ok(SolveResult::sat(plan, stats));
        }
    }
    stats.wall_time = clock.elapsed();
    Ok(SolveResult::without_plan(Verdict::Unsat, stats))
}

/// All valid plans in lexicographic order.
pub fn valid_plans(inst: &Instance) -> Result<Vec<Plan>> {
    check_cap(inst, DEFAULT_CAP)?;
    let mut out = Vec::new();
    for plan in all_plans(inst.k(), inst.n()) {
        if is_valid(&plan, inst)? {
            out.push(plan);
        }
    }
    Ok(out)
}

pub fn count_valid_plans(inst: &Instance) -> Result<u64> {
    Ok(valid_plans(inst)?.len() as u64)
}
