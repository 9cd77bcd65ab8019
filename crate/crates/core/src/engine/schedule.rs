use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    entangled_average_abs, entangled_average_terms, flow_entangled_average_terms, ChainSpec, EngineOptions,
    FunctionSum, Strategy,
};
use crate::error::{Error, Result};
use crate::space::{norm, FunctionRep, Norm, SamplePoints, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum AverageMode {
    Average,
    /// Moduli of the summands; Fourier chains are sampled on `resolution` grid points.
    Abs {
        #[serde(default)]
        resolution: Option<usize>,
    },
    /// Continuous chains; schedule entries are horizons `𝒯`.
    Flow { step: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceBasis {
    /// Exact norms of the difference function.
    Function,
    /// Maximum and root-mean-square over the sample points.
    Samples,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub sup: f64,
    pub l2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AverageResult {
    pub schedule: Vec<f64>,
    pub averages: Vec<FunctionSum>,
    pub abs_mode: bool,
    pub predicted_limit: Option<FunctionRep>,
    pub distances: Option<Vec<Distance>>,
    pub distance_basis: Option<DistanceBasis>,
    pub sample_values: Vec<Vec<C64>>,
    pub wall_times: Vec<f64>,
}

pub struct RunRequest<'a> {
    pub chain: &'a ChainSpec,
    pub schedule: &'a [f64],
    pub mode: AverageMode,
    pub strategy: Strategy,
    pub options: EngineOptions,
    pub points: Option<&'a SamplePoints>,
    pub predicted: Option<&'a FunctionRep>,
}

fn check_schedule(schedule: &[f64], discrete: bool) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidArgument("empty schedule".into()));
    }
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("schedule must be strictly increasing".into()));
    }
    if schedule.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument("schedule entries must be positive".into()));
    }
    if discrete && schedule.iter().any(|&v| v.fract() != 0.0 || v > u64::MAX as f64) {
        return Err(Error::InvalidArgument("discrete schedules need integer N".into()));
    }
    Ok(())
}

/// Distance of an average to a limit: exact when the difference is a single
/// representable function, otherwise over the sample points.
fn distance(avg: &FunctionSum, limit: &FunctionRep, points: Option<&SamplePoints>) -> Result<(Distance, DistanceBasis)> {
    let mut diff = avg.clone();
    diff.push_owned(limit.scaled(C64::new(-1.0, 0.0)))?;
    match diff.clone().into_function() {
        Ok(d) => Ok((Distance { sup: norm(&d, Norm::Sup), l2: norm(&d, Norm::L2) }, DistanceBasis::Function)),
        Err(Error::Unrepresentable(msg)) => {
            let points = points.ok_or_else(|| {
                Error::Unrepresentable(format!("{msg}; distances need sample points"))
            })?;
            let values = diff.eval_at(points)?;
            let sup = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let l2 = (values.iter().map(|v| v.norm_sqr()).sum::<f64>() / values.len().max(1) as f64).sqrt();
            Ok((Distance { sup, l2 }, DistanceBasis::Samples))
        }
        Err(e) => Err(e),
    }
}

/// Evaluate the average at every schedule point, with distances to the
/// predicted limit when one is given.
pub fn run_schedule(req: &RunRequest) -> Result<AverageResult> {
    let flow = matches!(req.mode, AverageMode::Flow { .. });
    check_schedule(req.schedule, !flow)?;
    let mut result = AverageResult {
        schedule: req.schedule.to_vec(),
        averages: Vec::new(),
        abs_mode: matches!(req.mode, AverageMode::Abs { .. }),
        predicted_limit: req.predicted.cloned(),
        distances: req.predicted.map(|_| Vec::new()),
        distance_basis: None,
        sample_values: Vec::new(),
        wall_times: Vec::new(),
    };
    for &point in req.schedule {
        let start = Instant::now();
        let avg = match req.mode {
            AverageMode::Average => entangled_average_terms(req.chain, point as u64, req.strategy, &req.options),
            AverageMode::Abs { resolution } => {
                entangled_average_abs(req.chain, point as u64, resolution, &req.options).map(FunctionSum::from)
            }
            AverageMode::Flow { step } => flow_entangled_average_terms(req.chain, point, step, &req.options),
        }
        .map_err(|e| annotate(e, point))?;
        result.wall_times.push(start.elapsed().as_secs_f64());
        if let Some(points) = req.points {
            result.sample_values.push(avg.eval_at(points).map_err(|e| annotate(e, point))?);
        }
        if let (Some(limit), Some(d)) = (req.predicted, result.distances.as_mut()) {
            let (dist, basis) = distance(&avg, limit, req.points).map_err(|e| annotate(e, point))?;
            d.push(dist);
            result.distance_basis = Some(basis);
        }
        result.averages.push(avg);
    }
    Ok(result)
}

fn annotate(e: Error, point: f64) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("at schedule point {point}: {m}")),
        Error::Incompatible(m) => Error::Incompatible(format!("at schedule point {point}: {m}")),
        Error::ExponentOverflow(m) => Error::ExponentOverflow(format!("at schedule point {point}: {m}")),
        Error::Unrepresentable(m) => Error::Unrepresentable(format!("at schedule point {point}: {m}")),
        Error::Budget(m) => Error::Budget(format!("at schedule point {point}: {m}")),
        other => other,
    }
}
