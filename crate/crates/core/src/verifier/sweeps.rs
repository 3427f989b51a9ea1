//! Seeded sweeps over the number of negatives, the sample size and the
//! block size. Rows are emitted per (axis value, seed), then one aggregate
//! row per axis value.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::latent_model::{sample_batch, sample_block_batch};
use crate::losses::{block_loss_empirical, ExactLosses};
use crate::supervised::{avg_sup_loss, LineSearch};
use crate::training::{erm_finite, FunctionClass};
use crate::{Loss, Model, Repr};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl SweepTable {
    fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegativeSweep {
    pub table: SweepTable,
    /// (k, mean supervised loss of f̂ over seeds).
    pub aggregates: Vec<(usize, f64)>,
    /// Smallest k attaining the least mean supervised loss.
    pub best_k: usize,
    /// Mean supervised loss is nondecreasing for k ≥ best_k.
    pub monotone_after_best: bool,
    /// The largest k is strictly worse than the best.
    pub hurts: bool,
    pub verdict: String,
}

fn finite(class: &FunctionClass<f64>) -> Result<&[Repr]> {
    match class {
        FunctionClass::Finite(m) if !m.is_empty() => Ok(m),
        _ => Err(Error::InvalidArgument("expected a nonempty finite function class".into())),
    }
}

fn nonempty<T>(xs: &[T], what: &str) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::InvalidArgument(format!("{what} must be nonempty")));
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub(crate) fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Lowest index among the most frequent entries.
fn mode(xs: &[usize]) -> usize {
    let top = xs.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; top + 1];
    for &x in xs {
        counts[x] += 1;
    }
    let best = counts.iter().copied().max().unwrap_or(0);
    counts.iter().position(|&c| c == best).unwrap_or(0)
}

fn grid<A: Copy + Send + Sync>(values: &[A], seeds: &[u64]) -> Vec<(A, u64)> {
    values
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| (v, s)))
        .collect()
}

/// ERM with k negatives on M sampled tuples per seed; the selected member
/// is scored by its average binary mean-classifier loss.
pub fn sweep_negative_samples(
    model: &Model,
    class: &FunctionClass<f64>,
    kind: Loss,
    k_list: &[usize],
    m: usize,
    seeds: &[u64],
) -> Result<NegativeSweep> {
    nonempty(k_list, "k list")?;
    nonempty(seeds, "seeds")?;
    let fs = finite(class)?;
    for &k in k_list {
        model.collision_stats(k)?.one_minus_tau_k()?;
    }
    let sup: Vec<f64> = fs
        .par_iter()
        .map(|f| avg_sup_loss(f, model, 2, kind, true, LineSearch::default()))
        .collect::<Result<_>>()?;
    let fits: Vec<(usize, f64)> = grid(k_list, seeds)
        .into_par_iter()
        .map(|(k, seed)| {
            let batch = sample_batch(model, k, m, seed)?;
            let fit = erm_finite(class, model, &batch, kind)?;
            Ok((fit.selected_index.expect("finite class"), fit.empirical_loss))
        })
        .collect::<Result<_>>()?;

    let mut aggregates = Vec::with_capacity(k_list.len());
    for (i, &k) in k_list.iter().enumerate() {
        let chunk = &fits[i * seeds.len()..(i + 1) * seeds.len()];
        let sups: Vec<f64> = chunk.iter().map(|&(j, _)| sup[j]).collect();
        aggregates.push((k, mean(&sups)));
    }
    let least = aggregates.iter().map(|a| a.1).fold(f64::INFINITY, f64::min);
    let best_pos = aggregates
        .iter()
        .position(|a| a.1 <= least)
        .expect("nonempty");
    let best_k = aggregates[best_pos].0;
    let monotone_after_best = aggregates[best_pos..]
        .windows(2)
        .all(|w| w[1].1 >= w[0].1 - 1e-12);
    let hurts = aggregates.last().expect("nonempty").1 > least + 1e-12;
    let verdict = match (hurts, monotone_after_best) {
        (true, true) => format!("more negatives hurt: supervised loss nondecreasing beyond k = {best_k}"),
        (true, false) => format!("more negatives hurt beyond k = {best_k}, not monotonically"),
        (false, _) => "no degradation with more negatives".to_string(),
    };

    let mut table = SweepTable::new(&[
        "axis", "k", "seed", "selected", "empirical_loss", "sup_loss", "verdict",
    ]);
    for (i, &k) in k_list.iter().enumerate() {
        for (s, &seed) in seeds.iter().enumerate() {
            let (j, emp) = fits[i * seeds.len() + s];
            table.rows.push(vec![
                "k".into(),
                k.to_string(),
                seed.to_string(),
                j.to_string(),
                emp.to_string(),
                sup[j].to_string(),
                String::new(),
            ]);
        }
    }
    for (i, &(k, mean_sup)) in aggregates.iter().enumerate() {
        let chunk = &fits[i * seeds.len()..(i + 1) * seeds.len()];
        let picks: Vec<usize> = chunk.iter().map(|c| c.0).collect();
        let emps: Vec<f64> = chunk.iter().map(|c| c.1).collect();
        let tag = if k == best_k {
            "best"
        } else if mean_sup <= least + 1e-12 {
            "tied-best"
        } else if i > best_pos {
            "worse-than-best"
        } else {
            "before-best"
        };
        table.rows.push(vec![
            "k".into(),
            k.to_string(),
            "mean".into(),
            mode(&picks).to_string(),
            mean(&emps).to_string(),
            mean_sup.to_string(),
            tag.into(),
        ]);
    }
    Ok(NegativeSweep {
        table,
        aggregates,
        best_k,
        monotone_after_best,
        hurts,
        verdict,
    })
}

/// ERM with one negative over sample sizes; reports the excess population
/// loss L_un(f̂) − min_F L_un, aggregated by median.
pub fn sweep_sample_size(
    model: &Model,
    class: &FunctionClass<f64>,
    kind: Loss,
    m_list: &[usize],
    seeds: &[u64],
) -> Result<SweepTable> {
    nonempty(m_list, "M list")?;
    nonempty(seeds, "seeds")?;
    let fs = finite(class)?;
    let population: Vec<f64> = fs
        .par_iter()
        .map(|f| ExactLosses::new(f, model, kind)?.unsup(1))
        .collect::<Result<_>>()?;
    let best = population.iter().copied().fold(f64::INFINITY, f64::min);
    let fits: Vec<(usize, f64)> = grid(m_list, seeds)
        .into_par_iter()
        .map(|(m, seed)| {
            let fit = erm_finite(class, model, &sample_batch(model, 1, m, seed)?, kind)?;
            Ok((fit.selected_index.expect("finite class"), fit.empirical_loss))
        })
        .collect::<Result<_>>()?;
    let mut table = SweepTable::new(&[
        "axis", "m", "seed", "selected", "empirical_loss", "population_loss", "gap",
    ]);
    for (i, &m) in m_list.iter().enumerate() {
        for (s, &seed) in seeds.iter().enumerate() {
            let (j, emp) = fits[i * seeds.len() + s];
            table.rows.push(vec![
                "m".into(),
                m.to_string(),
                seed.to_string(),
                j.to_string(),
                emp.to_string(),
                population[j].to_string(),
                (population[j] - best).to_string(),
            ]);
        }
    }
    for (i, &m) in m_list.iter().enumerate() {
        let chunk = &fits[i * seeds.len()..(i + 1) * seeds.len()];
        let picks: Vec<usize> = chunk.iter().map(|c| c.0).collect();
        let emps: Vec<f64> = chunk.iter().map(|c| c.1).collect();
        let pops: Vec<f64> = picks.iter().map(|&j| population[j]).collect();
        let gaps: Vec<f64> = pops.iter().map(|p| p - best).collect();
        table.rows.push(vec![
            "m".into(),
            m.to_string(),
            "median".into(),
            mode(&picks).to_string(),
            median(&emps).to_string(),
            median(&pops).to_string(),
            median(&gaps).to_string(),
        ]);
    }
    Ok(table)
}

/// Block loss of a fixed f over block sizes: empirical on M sampled block
/// tuples per seed, and exact.
pub fn sweep_block_size(
    model: &Model,
    f: &Repr,
    kind: Loss,
    b_list: &[usize],
    m: usize,
    seeds: &[u64],
) -> Result<SweepTable> {
    nonempty(b_list, "b list")?;
    nonempty(seeds, "seeds")?;
    let exact_losses = ExactLosses::new(f, model, kind)?;
    let exact: Vec<f64> = b_list
        .iter()
        .map(|&b| exact_losses.block(b))
        .collect::<Result<_>>()?;
    let empirical: Vec<f64> = grid(b_list, seeds)
        .into_par_iter()
        .map(|(b, seed)| block_loss_empirical(f, model, &sample_block_batch(model, b, m, seed)?, kind))
        .collect::<Result<_>>()?;
    let mut table = SweepTable::new(&["axis", "b", "seed", "block_loss_empirical", "block_loss_exact"]);
    for (i, &b) in b_list.iter().enumerate() {
        for (s, &seed) in seeds.iter().enumerate() {
            table.rows.push(vec![
                "b".into(),
                b.to_string(),
                seed.to_string(),
                empirical[i * seeds.len() + s].to_string(),
                exact[i].to_string(),
            ]);
        }
    }
    for (i, &b) in b_list.iter().enumerate() {
        let chunk = &empirical[i * seeds.len()..(i + 1) * seeds.len()];
        table.rows.push(vec![
            "b".into(),
            b.to_string(),
            "mean".into(),
            mean(chunk).to_string(),
            exact[i].to_string(),
        ]);
    }
    Ok(table)
}
