//! Order selection by information criteria: exhaustive and stepwise.

use rayon::prelude::*;

use super::fit::{fit_arma, FitResult};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    Aic,
    Bic,
}

impl Criterion {
    pub fn of(&self, fit: &FitResult) -> f64 {
        match self {
            Criterion::Aic => fit.aic,
            Criterion::Bic => fit.bic,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Criterion::Aic => "aic",
            Criterion::Bic => "bic",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "aic" => Ok(Criterion::Aic),
            "bic" => Ok(Criterion::Bic),
            other => Err(Error::InvalidArgument(format!(
                "unknown criterion `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    Full,
    Stepwise,
}

impl SearchMode {
    pub fn tag(self) -> &'static str {
        match self {
            SearchMode::Full => "full",
            SearchMode::Stepwise => "stepwise",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "full" => Ok(SearchMode::Full),
            "stepwise" => Ok(SearchMode::Stepwise),
            other => Err(Error::InvalidArgument(format!(
                "unknown search mode `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    pub criterion: Criterion,
    pub mode: SearchMode,
    pub p_max: usize,
    pub q_max: usize,
}

impl SearchConfig {
    pub fn new(criterion: Criterion, mode: SearchMode) -> Self {
        SearchConfig {
            criterion,
            mode,
            p_max: 9,
            q_max: 9,
        }
    }

    pub fn tag(&self) -> String {
        format!("{}-{}", self.criterion.tag(), self.mode.tag())
    }
}

/// Outcome of a model search over (p, q).
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub p: usize,
    pub q: usize,
    pub criterion_value: f64,
    /// Every (p, q, criterion) evaluated, in evaluation order.
    pub evaluated: Vec<(usize, usize, f64)>,
}

/// Criterion value a fit contributes to a search: unconverged fits count as
/// +inf so a long benchmark never aborts on one bad cell.
fn effective(criterion: Criterion, fit: &FitResult) -> f64 {
    if fit.converged && fit.loglik.is_finite() {
        criterion.of(fit)
    } else {
        f64::INFINITY
    }
}

/// Prefer lower criterion; break ties toward smaller p+q, then smaller p.
fn better(a: (usize, usize, f64), b: (usize, usize, f64)) -> bool {
    let ka = (a.0 + a.1, a.0);
    let kb = (b.0 + b.1, b.0);
    match a.2.total_cmp(&b.2) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => ka < kb,
    }
}

/// Fits every (p, q) on the grid and returns the criterion minimizer.
pub fn full_search(series: &[f64], cfg: &SearchConfig) -> Result<SearchOutcome> {
    let cells: Vec<(usize, usize)> = (0..=cfg.p_max)
        .flat_map(|p| (0..=cfg.q_max).map(move |q| (p, q)))
        .collect();
    let evaluated: Vec<(usize, usize, f64)> = cells
        .par_iter()
        .map(|&(p, q)| {
            let value = match fit_arma(series, p, q) {
                Ok(fit) => effective(cfg.criterion, &fit),
                Err(_) => f64::INFINITY,
            };
            (p, q, value)
        })
        .collect();
    pick_best(evaluated)
}

/// Greedy neighborhood search from the usual four starting points; moves to
/// the best improving unvisited neighbor until none improves.
pub fn stepwise_search(series: &[f64], cfg: &SearchConfig) -> Result<SearchOutcome> {
    let clamp = |p: usize, q: usize| (p.min(cfg.p_max), q.min(cfg.q_max));
    let mut starts = vec![clamp(2, 2), clamp(0, 0), clamp(1, 0), clamp(0, 1)];
    starts.dedup();
    let mut visited: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen = std::collections::HashSet::new();

    let evaluate = |p: usize, q: usize, visited: &mut Vec<(usize, usize, f64)>| -> f64 {
        let value = match fit_arma(series, p, q) {
            Ok(fit) => effective(cfg.criterion, &fit),
            Err(_) => f64::INFINITY,
        };
        visited.push((p, q, value));
        value
    };

    let mut current: Option<(usize, usize, f64)> = None;
    for (p, q) in starts {
        if !seen.insert((p, q)) {
            continue;
        }
        let value = evaluate(p, q, &mut visited);
        let cand = (p, q, value);
        if current.map(|c| better(cand, c)).unwrap_or(true) {
            current = Some(cand);
        }
    }
    let mut current = current.expect("at least one start point");

    loop {
        let (p, q, _) = current;
        let mut best_neighbor: Option<(usize, usize, f64)> = None;
        for (dp, dq) in NEIGHBOR_OFFSETS {
            let np = p as isize + dp;
            let nq = q as isize + dq;
            if np < 0 || nq < 0 || np as usize > cfg.p_max || nq as usize > cfg.q_max {
                continue;
            }
            let (np, nq) = (np as usize, nq as usize);
            if !seen.insert((np, nq)) {
                continue;
            }
            let value = evaluate(np, nq, &mut visited);
            let cand = (np, nq, value);
            if best_neighbor.map(|b| better(cand, b)).unwrap_or(true) {
                best_neighbor = Some(cand);
            }
        }
        match best_neighbor {
            Some(nb) if nb.2 < current.2 => current = nb,
            _ => break,
        }
    }

    if !current.2.is_finite() {
        return Err(Error::AllFitsFailed);
    }
    Ok(SearchOutcome {
        p: current.0,
        q: current.1,
        criterion_value: current.2,
        evaluated: visited,
    })
}

const NEIGHBOR_OFFSETS: [(isize, isize); 8] = [
    (-1, 0),
    (1, 0),
    (0, -1),
    (0, 1),
    (-1, -1),
    (-1, 1),
    (1, -1),
    (1, 1),
];

fn pick_best(evaluated: Vec<(usize, usize, f64)>) -> Result<SearchOutcome> {
    let mut best: Option<(usize, usize, f64)> = None;
    for &cand in &evaluated {
        if best.map(|b| better(cand, b)).unwrap_or(true) {
            best = Some(cand);
        }
    }
    let best = best.ok_or(Error::AllFitsFailed)?;
    if !best.2.is_finite() {
        return Err(Error::AllFitsFailed);
    }
    Ok(SearchOutcome {
        p: best.0,
        q: best.1,
        criterion_value: best.2,
        evaluated,
    })
}

/// Dispatches on the configured mode.
pub fn run_search(series: &[f64], cfg: &SearchConfig) -> Result<SearchOutcome> {
    match cfg.mode {
        SearchMode::Full => full_search(series, cfg),
        SearchMode::Stepwise => stepwise_search(series, cfg),
    }
}
