//! Empirical gluing of admissible patches at a fixed distance.

use rand::Rng;
use rayon::prelude::*;

use super::search::{is_extendable, Problem, SearchOptions, ValueOrder};
use super::SftSpec;
use crate::error::{Error, Result};
use crate::lattice::{compose, make_box, shift, Metric, Patch, Site, Volume};
use crate::rng::{derive_seed, stream};

#[derive(Debug, Clone, Default)]
pub struct GluingReport {
    pub pairs_tested: usize,
    /// Pairs with no joint extension.
    pub failures: Vec<(Patch, Patch)>,
    /// Pairs whose search ran out of budget.
    pub budget_exceeded: usize,
    /// Trials where no extendable sample patch was found.
    pub sampling_failures: usize,
}

/// A random locally admissible patch on `v` that also extends by `margin`.
pub fn random_admissible_patch(spec: &SftSpec, v: &Volume, margin: i32, seed: u64, budget: u64) -> Result<Option<Patch>> {
    // sample the fattened volume so the restriction comes with a witness
    let fat = v.fatten(margin, Metric::Linf);
    for attempt in 0..20u64 {
        let (mut prob, sites) = Problem::on_lattice(spec, &Patch::empty(), &fat, false);
        let opts = SearchOptions {
            budget,
            order: ValueOrder::Shuffled(derive_seed(&[seed, attempt])),
            ..SearchOptions::default()
        };
        let Some(vals) = prob.find_first(&opts)? else { return Ok(None) };
        let big = Patch::from_pairs(sites.into_iter().zip(vals)).expect("distinct sites");
        let p = big.restrict(v).expect("v lies inside its fattening");
        if is_extendable(spec, &p, margin, budget)? {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

enum Trial {
    Glued,
    Failed(Patch, Patch),
    Budget,
    NoSample,
}

fn trial(spec: &SftSpec, gap: i32, radius: i32, seed: u64, budget: u64) -> Result<Trial> {
    let v = make_box(radius);
    let e = match random_admissible_patch(spec, &v, radius, derive_seed(&[seed, 1]), budget) {
        Ok(Some(p)) => p,
        Ok(None) => return Ok(Trial::NoSample),
        Err(Error::SearchBudgetExceeded(_)) => return Ok(Trial::Budget),
        Err(err) => return Err(err),
    };
    let f0 = match random_admissible_patch(spec, &v, radius, derive_seed(&[seed, 2]), budget) {
        Ok(Some(p)) => p,
        Ok(None) => return Ok(Trial::NoSample),
        Err(Error::SearchBudgetExceeded(_)) => return Ok(Trial::Budget),
        Err(err) => return Err(err),
    };
    let mut rng = stream(&[seed, 3]);
    let d = 2 * radius + gap;
    let t = rng.gen_range(-d..=d);
    let offset = match rng.gen_range(0..4) {
        0 => Site::new(d, t),
        1 => Site::new(-d, t),
        2 => Site::new(t, d),
        _ => Site::new(t, -d),
    };
    let f = shift(&f0, offset);
    let both = compose(&e, &f)?;
    let (x0, y0, x1, y1) = both.volume().bounds().unwrap();
    let hull = Volume::rect(x0, y0, x1 - x0 + 1, y1 - y0 + 1).fatten(radius, Metric::Linf);
    let free = Volume::new(hull.sites().iter().copied().filter(|s| !both.volume().contains(*s)));
    let (mut prob, _) = Problem::on_lattice(spec, &both, &free, false);
    let opts = SearchOptions { budget, order: ValueOrder::Frequency, ..SearchOptions::default() };
    match prob.find_first(&opts) {
        Ok(Some(_)) => Ok(Trial::Glued),
        Ok(None) => Ok(Trial::Failed(e, f)),
        Err(Error::SearchBudgetExceeded(_)) => Ok(Trial::Budget),
        Err(err) => Err(err),
    }
}

/// Sample pairs of admissible patches on radius-`radius` boxes at
/// Chebyshev distance `gap` and try to extend them jointly over the hull
/// of both boxes fattened by `radius`.
pub fn gluing_check(spec: &SftSpec, gap: i32, radius: i32, trials: usize, seed: u64, budget: u64) -> Result<GluingReport> {
    let results: Vec<Result<Trial>> =
        (0..trials).into_par_iter().map(|t| trial(spec, gap, radius, derive_seed(&[seed, t as u64]), budget)).collect();
    let mut report = GluingReport::default();
    for r in results {
        match r? {
            Trial::Glued => report.pairs_tested += 1,
            Trial::Failed(e, f) => {
                report.pairs_tested += 1;
                report.failures.push((e, f));
            }
            Trial::Budget => report.budget_exceeded += 1,
            Trial::NoSample => report.sampling_failures += 1,
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::full_shift;

    #[test]
    fn full_shift_always_glues() {
        let r = gluing_check(&full_shift(2), 1, 1, 10, 5, 1_000_000).unwrap();
        assert_eq!(r.pairs_tested, 10);
        assert!(r.failures.is_empty());
    }
}
