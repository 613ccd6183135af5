//! Theory predictions for a config and the step-size studies built on them.

use serde::{Deserialize, Serialize};

use super::{run_experiment, to_db, ExperimentConfig};
use crate::error::{Error, Result};
use crate::theory::{
    beta_range, estimate_moments, steady_state_msd, step_size_bound, step_size_bound_with_h0,
    BetaInterval, Checked, SubbandMoments,
};

#[derive(Debug, Clone)]
pub struct TheoryReport {
    /// `None` when `p` exceeds the noise exponent.
    pub beta_interval: Option<BetaInterval>,
    pub moments: SubbandMoments,
    pub step_bound: Checked<f64>,
    pub step_bound_h0: Checked<f64>,
    /// Prediction at the configured step size; `None` outside the stable region.
    pub steady_msd: Option<Checked<f64>>,
}

/// Estimates moments from the config's sources and evaluates every closed
/// form at the configured algorithm parameters.
pub fn theory_report(cfg: &ExperimentConfig) -> Result<TheoryReport> {
    cfg.validate()?;
    let bank = cfg.bank.design()?;
    let (p, beta, taps) = (
        cfg.algo.effective_p(),
        cfg.algo.effective_beta(),
        cfg.algo.taps,
    );
    let moments = estimate_moments(
        &bank,
        &cfg.input,
        &cfg.noise,
        p,
        beta,
        taps,
        cfg.moment_frames,
        cfg.moment_seed(),
    )?;
    let h0 = cfg.system.realize(taps)?;
    let h0_norm_sq = h0.iter().map(|v| v * v).sum();
    let steady_msd = match steady_state_msd(&moments, taps, cfg.algo.mu, beta) {
        Ok(v) => Some(v),
        Err(Error::Unstable { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(TheoryReport {
        beta_interval: beta_range(p, cfg.noise.noise.alpha()).ok(),
        step_bound: step_size_bound(&moments, taps, beta)?,
        step_bound_h0: step_size_bound_with_h0(&moments, taps, beta, h0_norm_sq)?,
        steady_msd,
        moments,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub mu: f64,
    /// Steady-state NMSD of the surviving trials; NaN when all diverged.
    pub steady_nmsd_db: f64,
    pub diverged_trials: usize,
    pub trials: usize,
}

impl SweepPoint {
    /// Diverged trials, or a steady level at or above 0 dB.
    pub fn unstable(&self) -> bool {
        self.diverged_trials > 0 || !(self.steady_nmsd_db < 0.0)
    }
}

/// Runs the experiment at each step size.
pub fn sweep_mu(cfg: &ExperimentConfig, grid: &[f64]) -> Result<Vec<SweepPoint>> {
    grid.iter()
        .map(|&mu| {
            let mut c = cfg.clone();
            c.algo.mu = mu;
            let r = run_experiment(&c)?;
            let steady_nmsd_db = match &r.aggregate {
                Some(agg) => agg.steady_state(c.steady_window)?.db,
                None => f64::NAN,
            };
            Ok(SweepPoint {
                mu,
                steady_nmsd_db,
                diverged_trials: r.diverged_trials(),
                trials: c.trials,
            })
        })
        .collect()
}

/// First grid step size whose run is unstable, if any.
pub fn knee(points: &[SweepPoint]) -> Option<f64> {
    points.iter().find(|p| p.unstable()).map(|p| p.mu)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyPoint {
    pub mu: f64,
    pub empirical_db: f64,
    /// NaN outside the model's stable region.
    pub theory_db: f64,
    pub diverged_trials: usize,
}

/// Empirical steady-state NMSD next to the closed-form MSD (normalised by
/// `||h0||^2`) for each step size.
pub fn steady_comparison(
    cfg: &ExperimentConfig,
    mus: &[f64],
    moments: &SubbandMoments,
) -> Result<Vec<SteadyPoint>> {
    let taps = cfg.algo.taps;
    let h0 = cfg.system.realize(taps)?;
    let h0_norm_sq: f64 = h0.iter().map(|v| v * v).sum();
    let beta = cfg.algo.effective_beta();
    mus.iter()
        .map(|&mu| {
            let mut c = cfg.clone();
            c.algo.mu = mu;
            let r = run_experiment(&c)?;
            let empirical_db = match &r.aggregate {
                Some(agg) => agg.steady_state(c.steady_window)?.db,
                None => f64::NAN,
            };
            let theory_db = match steady_state_msd(moments, taps, mu, beta) {
                Ok(v) => to_db(v.value / h0_norm_sq),
                Err(Error::Unstable { .. }) => f64::NAN,
                Err(e) => return Err(e),
            };
            Ok(SteadyPoint {
                mu,
                empirical_db,
                theory_db,
                diverged_trials: r.diverged_trials(),
            })
        })
        .collect()
}

/// Parses `start:stop:step` into an inclusive grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config(format!("grid {spec:?}: {e}")))?;
    let [start, stop, step] = parts[..] else {
        return Err(Error::Config(format!(
            "grid {spec:?} is not start:stop:step"
        )));
    };
    if !(step > 0.0) || !(stop >= start) || !(start > 0.0) {
        return Err(Error::Config(format!(
            "grid {spec:?} needs 0 < start <= stop and step > 0"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + step * i as f64).collect())
}

/// Parses a comma-separated list of step sizes.
pub fn parse_list(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("step size {s:?}: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(
            parse_grid("0.1:0.5:0.2").unwrap(),
            vec![0.1, 0.30000000000000004, 0.5]
        );
        assert_eq!(parse_grid("1:1:1").unwrap(), vec![1.0]);
        assert!(parse_grid("0.1:0.5").is_err());
        assert!(parse_grid("0.5:0.1:0.1").is_err());
        assert!(parse_grid("0.1:0.5:0").is_err());
        assert_eq!(parse_list("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert!(parse_list("0.1,x").is_err());
    }

    #[test]
    fn knee_is_first_unstable_point() {
        let pt = |mu, db, div| SweepPoint {
            mu,
            steady_nmsd_db: db,
            diverged_trials: div,
            trials: 2,
        };
        assert_eq!(knee(&[pt(0.1, -30.0, 0), pt(0.2, -20.0, 0)]), None);
        assert_eq!(
            knee(&[pt(0.1, -30.0, 0), pt(0.2, 3.0, 0), pt(0.3, f64::NAN, 2)]),
            Some(0.2)
        );
        assert_eq!(knee(&[pt(0.1, -30.0, 1)]), Some(0.1));
    }
}
