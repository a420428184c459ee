//! Verification suites shared by the `verify` command and the acceptance
//! harness. Each returns reports tagged hard (gating) or soft
//! (observational).

use gesc_core::model::{hidden_states, ModelParams};
use gesc_core::rng::{rng_for, stream};
use gesc_core::verify::{
    check_directional_lipschitz, check_perhead_bound, check_self_component, check_sic_projector, depth_sweep_jobs,
    eta_grid_best, gauge_fuzz, sic_grid_jobs, spectral_notch_probe, BandEnergy, Executor, JobResult, VerificationReport,
};
use gesc_core::{Dataset, GescConfig, ModelConfig, Result};

use crate::report::Checked;

/// Gauge fuzzing on a freshly initialized model. The co-transformed runs
/// and the ablation trend are hard; the ablation's own deviations are
/// recorded as soft reports.
pub fn gauge(cfg: &ModelConfig, data: &Dataset, scales: &[f64], trials: usize, seed: u64) -> Result<Vec<Checked>> {
    let params = ModelParams::for_dataset(cfg, data, &mut rng_for(seed, stream::INIT))?;
    let fuzz = gauge_fuzz(&params, data, scales, trials, seed)?;
    let mut out: Vec<Checked> = fuzz.full.into_iter().map(Checked::hard).collect();
    let means: Vec<f64> = fuzz.without_transport.iter().map(|r| r.metrics["mean_hidden_deviation"]).collect();
    out.extend(fuzz.without_transport.into_iter().map(Checked::soft));
    let mut trend = VerificationReport::new("gauge/ablation_trend", trials, if fuzz.ablation_increasing { 0.0 } else { 1.0 }, 0.0);
    for (s, m) in scales.iter().zip(&means) {
        trend = trend.with(&format!("mean_hidden_deviation@{s}"), *m);
    }
    out.push(Checked::hard(trend));
    Ok(out)
}

/// Cancellation invariants, per-head aggregation and self-component
/// bounds. `trials` random layers; the cancellation checks use ten times
/// as many draws.
pub fn bounds(trials: usize, seed: u64) -> Vec<Checked> {
    let (energy, orth) = check_sic_projector(10 * trials, seed);
    vec![
        Checked::hard(energy),
        Checked::hard(orth),
        Checked::hard(check_perhead_bound(trials, seed)),
        Checked::hard(check_self_component(trials, seed)),
    ]
}

pub fn lipschitz(trials: usize, pairs: usize, seed: u64) -> Vec<Checked> {
    let (global, directional) = check_directional_lipschitz(trials, pairs, seed);
    vec![Checked::hard(global), Checked::hard(directional)]
}

/// Band energies of freshly initialized stacks with and without
/// cancellation, from the same lifted input.
pub fn notch(cfg: &ModelConfig, data: &Dataset, depth: usize, seed: u64) -> Result<(Vec<BandEnergy>, Vec<Checked>)> {
    let params = ModelParams::for_dataset(cfg, data, &mut rng_for(seed, stream::INIT))?;
    let h0 = hidden_states(&params, data, None)?.swap_remove(0);
    let rows = spectral_notch_probe(&data.graph, cfg, &h0, depth, seed)?;
    let at = |t: usize, eta: f64, band: &str| {
        rows.iter().find(|r| r.depth == t && r.eta_sic == eta && r.band == band).map(|r| r.energy)
    };
    let depth0 = ["low", "mid", "high"]
        .iter()
        .map(|b| (at(0, 0.0, b).unwrap_or(f64::NAN) - at(0, 0.5, b).unwrap_or(f64::NAN)).abs())
        .fold(0.0, f64::max);
    let mut out = vec![Checked::hard(VerificationReport::new("spectral/depth0_identical", 1, depth0, 0.0))];
    if let (Some(sic), Some(plain)) = (at(depth, 0.5, "low"), at(depth, 0.0, "low")) {
        let ratio = sic / plain;
        let r = VerificationReport::new("spectral/low_band_ratio", 1, ratio, 1.0 - f64::EPSILON)
            .with("depth", depth as f64)
            .with("low_band_sic", sic)
            .with("low_band_plain", plain);
        out.push(Checked::soft(r));
    }
    Ok((rows, out))
}

fn mean_test(results: &[JobResult], label: &str, depth: usize) -> f64 {
    let accs: Vec<f64> = results.iter().filter(|r| r.label == label && r.layers == depth).map(|r| r.test_acc).collect();
    accs.iter().sum::<f64>() / accs.len().max(1) as f64
}

/// Depth sweep of the full and additive models. Soft reports: the full
/// model keeps its shallow accuracy within `retention` at the deepest
/// setting, and the additive model loses more than the full one.
pub fn depth(
    exec: &dyn Executor,
    data: &Dataset,
    cfg: &GescConfig,
    depths: &[usize],
    seeds: &[u64],
    retention: f64,
) -> Result<(Vec<JobResult>, Vec<Checked>)> {
    let jobs = depth_sweep_jobs(cfg, depths, seeds);
    let results = exec.run(data, &jobs).into_iter().collect::<Result<Vec<_>>>()?;
    let (Some(&lo), Some(&hi)) = (depths.iter().min(), depths.iter().max()) else {
        return Ok((results, Vec::new()));
    };
    let full_drop = mean_test(&results, "full", lo) - mean_test(&results, "full", hi);
    let add_drop = mean_test(&results, "additive", lo) - mean_test(&results, "additive", hi);
    let keep = VerificationReport::new("depth/full_retention", seeds.len(), full_drop, retention)
        .with("shallow", lo as f64)
        .with("deep", hi as f64);
    let gap = VerificationReport::new("depth/additive_degrades_more", seeds.len(), full_drop - add_drop, -f64::MIN_POSITIVE)
        .with("full_drop", full_drop)
        .with("additive_drop", add_drop);
    Ok((results, vec![Checked::soft(keep), Checked::soft(gap)]))
}

/// The nine-row cancellation grid. Soft report: the best η over the `A`
/// rows is strictly inside `(0, 1)`.
pub fn sic_grid(exec: &dyn Executor, data: &Dataset, cfg: &GescConfig, seeds: &[u64]) -> Result<(Vec<JobResult>, Vec<Checked>)> {
    let jobs = sic_grid_jobs(cfg, seeds);
    let results = exec.run(data, &jobs).into_iter().collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    if let Some((best, means)) = eta_grid_best(&results) {
        let interior = best > 0.0 && best < 1.0;
        let mut r = VerificationReport::new("sic_grid/interior_optimum", seeds.len(), if interior { 0.0 } else { 1.0 }, 0.0)
            .with("best_eta", best);
        for (eta, m) in means {
            r = r.with(&format!("mean_test@{eta}"), m);
        }
        out.push(Checked::soft(r));
    }
    Ok((results, out))
}
