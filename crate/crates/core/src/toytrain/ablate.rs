use super::{fit, EvalPlan, FrameLoss, TrainConfig};
use crate::error::Result;
use crate::io::{Cell, CsvTable};
use crate::mesh::MeshSequence;

/// One row of a window-size ablation. `sigma` is `None` for the
/// reconstruction-loss baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub sigma: Option<usize>,
    pub fve: f64,
    pub lve: f64,
    pub lve_transition: Option<f64>,
}

/// Baseline row first, then one row per window radius in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn baseline(&self) -> &AblationRow {
        &self.rows[0]
    }

    pub fn window_rows(&self) -> &[AblationRow] {
        &self.rows[1..]
    }

    /// Window radii whose transition LVE is below the baseline's.
    pub fn sigmas_beating_baseline(&self) -> Vec<usize> {
        let Some(base) = self.baseline().lve_transition else {
            return Vec::new();
        };
        self.window_rows()
            .iter()
            .filter(|r| r.lve_transition.is_some_and(|l| l < base))
            .filter_map(|r| r.sigma)
            .collect()
    }

    /// Window radius with the lowest value of `key` among the window rows.
    pub fn best_sigma_by(&self, key: impl Fn(&AblationRow) -> f64) -> Option<usize> {
        self.window_rows()
            .iter()
            .min_by(|a, b| key(a).total_cmp(&key(b)))
            .and_then(|r| r.sigma)
    }
}

impl CsvTable for AblationTable {
    fn header(&self) -> Vec<&'static str> {
        vec!["sigma", "fve", "lve"]
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        self.rows
            .iter()
            .map(|r| {
                let sigma = match r.sigma {
                    Some(s) => Cell::from(s),
                    None => Cell::from("rec"),
                };
                vec![sigma, r.fve.into(), r.lve.into()]
            })
            .collect()
    }
}

/// Trains one reconstruction-loss baseline and one weighted run per window
/// radius, all from the same seed.
pub fn ablate_window(
    gt: &MeshSequence,
    cfg: &TrainConfig,
    sigmas: &[usize],
    plan: &EvalPlan,
) -> Result<AblationTable> {
    let run = |loss_choice: FrameLoss, sigma: Option<usize>| -> Result<AblationRow> {
        let cfg = TrainConfig {
            loss_choice,
            sigma: sigma.unwrap_or(cfg.sigma),
            ..cfg.clone()
        };
        let (_, report) = fit(gt, &cfg, plan)?;
        Ok(AblationRow {
            sigma,
            fve: report.metrics.fve,
            lve: report.metrics.lve,
            lve_transition: report.lve_transition,
        })
    };
    let mut rows = vec![run(FrameLoss::Rec, None)?];
    for &sigma in sigmas {
        rows.push(run(FrameLoss::Pc, Some(sigma))?);
    }
    Ok(AblationTable { rows })
}
