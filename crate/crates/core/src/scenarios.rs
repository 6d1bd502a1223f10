//! Disease presets and the simulate, lift, fit, predict, compare pipeline.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::dictionary::{dictionary_d1, dictionary_d2, lift_trajectory, Dictionary};
use crate::edmd::{
    build_snapshots, fit_edmd, predict, reconstruction_error, spectrum, window_max_error,
    KoopmanModel, PerCompartment, DEFAULT_SVD_TOL,
};
use crate::model::{EpidemicParams, StateVec};
use crate::nsfd::{simulate_nsfd, NsfdConfig, Trajectory};
use crate::{Error, Result};

/// The four built-in diseases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Covid,
    Influenza,
    Ebola,
    Measles,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Covid,
        Preset::Influenza,
        Preset::Ebola,
        Preset::Measles,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Covid => "covid",
            Preset::Influenza => "influenza",
            Preset::Ebola => "ebola",
            Preset::Measles => "measles",
        }
    }

    /// Rates used for the reference runs of each disease.
    pub fn params(self) -> EpidemicParams {
        let (beta, gamma, mu, omega) = match self {
            Preset::Covid => (0.5, 0.08, 0.01, 0.005),
            Preset::Influenza => (0.4, 0.2, 0.001, 0.15),
            Preset::Ebola => (0.25, 0.1, 0.35, 0.0),
            Preset::Measles => (1.5, 0.12, 0.001, 0.0),
        };
        EpidemicParams {
            beta,
            gamma,
            mu,
            omega,
        }
    }

    /// Literature ranges for each rate.
    pub fn ranges(self) -> ParamRanges {
        match self {
            Preset::Covid => ParamRanges {
                beta: (0.3, 0.6),
                gamma: (0.07, 0.1),
                mu: (0.005, 0.01),
                omega: (0.0, 0.02),
            },
            Preset::Influenza => ParamRanges {
                beta: (0.4, 0.8),
                gamma: (0.2, 0.33),
                mu: (0.0001, 0.001),
                omega: (0.1, 0.3),
            },
            Preset::Ebola => ParamRanges {
                beta: (0.18, 0.25),
                gamma: (0.086, 0.1),
                mu: (0.35, 0.5),
                omega: (0.0, 0.0),
            },
            Preset::Measles => ParamRanges {
                beta: (1.5, 3.5),
                gamma: (0.1, 0.14),
                mu: (0.0001, 0.002),
                omega: (0.0, 0.0),
            },
        }
    }

    pub fn scenario(self) -> ScenarioPreset {
        ScenarioPreset {
            name: self.name().to_string(),
            preset: Some(self),
            params: self.params(),
            i0: 0.1,
            dt: 0.1,
            t_end: 200.0,
            long_t_end: (self == Preset::Measles).then_some(500.0),
            eta: 0.0,
            svd_tol: DEFAULT_SVD_TOL,
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "covid" | "covid-19" | "covid19" => Ok(Preset::Covid),
            "influenza" | "flu" => Ok(Preset::Influenza),
            "ebola" => Ok(Preset::Ebola),
            "measles" => Ok(Preset::Measles),
            _ => Err(Error::UnknownPreset(s.to_string())),
        }
    }
}

/// Looks up a preset scenario by name.
pub fn preset(name: &str) -> Result<ScenarioPreset> {
    Ok(name.parse::<Preset>()?.scenario())
}

/// Inclusive `(low, high)` bounds per rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRanges {
    pub beta: (f64, f64),
    pub gamma: (f64, f64),
    pub mu: (f64, f64),
    pub omega: (f64, f64),
}

impl ParamRanges {
    pub fn check(&self, preset: &str, p: &EpidemicParams) -> Vec<RangeWarning> {
        [
            ("beta", p.beta, self.beta),
            ("gamma", p.gamma, self.gamma),
            ("mu", p.mu, self.mu),
            ("omega", p.omega, self.omega),
        ]
        .into_iter()
        .filter(|(_, v, (lo, hi))| v < lo || v > hi)
        .map(|(parameter, value, range)| RangeWarning {
            preset: preset.to_string(),
            parameter,
            value,
            range,
        })
        .collect()
    }
}

/// A rate outside the preset's literature range. Not an error.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeWarning {
    pub preset: String,
    pub parameter: &'static str,
    pub value: f64,
    pub range: (f64, f64),
}

impl fmt::Display for RangeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} = {} is outside the {} range [{}, {}]",
            self.parameter, self.value, self.preset, self.range.0, self.range.1
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioPreset {
    pub name: String,
    #[serde(skip)]
    pub preset: Option<Preset>,
    pub params: EpidemicParams,
    /// Initial infected fraction; the run starts at `(1 - i0, i0, 0, 0)`.
    pub i0: f64,
    pub dt: f64,
    pub t_end: f64,
    pub long_t_end: Option<f64>,
    pub eta: f64,
    pub svd_tol: f64,
}

/// Individual command-line overrides of a preset.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub mu: Option<f64>,
    pub omega: Option<f64>,
    pub i0: Option<f64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub eta: Option<f64>,
    pub svd_tol: Option<f64>,
}

impl ScenarioPreset {
    /// Applies overrides and validates the result. Rates outside the preset's
    /// literature range come back as warnings.
    pub fn with_overrides(mut self, o: &Overrides) -> Result<(Self, Vec<RangeWarning>)> {
        let p = &mut self.params;
        p.beta = o.beta.unwrap_or(p.beta);
        p.gamma = o.gamma.unwrap_or(p.gamma);
        p.mu = o.mu.unwrap_or(p.mu);
        p.omega = o.omega.unwrap_or(p.omega);
        self.i0 = o.i0.unwrap_or(self.i0);
        self.dt = o.dt.unwrap_or(self.dt);
        self.t_end = o.t_end.unwrap_or(self.t_end);
        self.eta = o.eta.unwrap_or(self.eta);
        self.svd_tol = o.svd_tol.unwrap_or(self.svd_tol);
        self.validate()?;
        let warnings = self.range_warnings();
        Ok((self, warnings))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.i0 > 0.0 && self.i0 <= 1.0) {
            return Err(Error::Config(format!(
                "i0 must be in (0, 1], got {}",
                self.i0
            )));
        }
        if !(self.svd_tol.is_finite() && self.svd_tol >= 0.0) {
            return Err(Error::Config(format!(
                "svd_tol must be non-negative, got {}",
                self.svd_tol
            )));
        }
        self.nsfd_config().validate()
    }

    pub fn range_warnings(&self) -> Vec<RangeWarning> {
        self.preset
            .map(|p| p.ranges().check(&self.name, &self.params))
            .unwrap_or_default()
    }

    pub fn initial_state(&self) -> StateVec {
        StateVec::seeded(self.i0)
    }

    pub fn nsfd_config(&self) -> NsfdConfig {
        NsfdConfig {
            eta: self.eta,
            ..NsfdConfig::new(self.dt, self.t_end, self.initial_state())
        }
    }
}

/// Which dictionaries a run fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DictChoice {
    D1,
    D2,
    #[default]
    Both,
}

impl DictChoice {
    pub fn dictionaries(self) -> Vec<Dictionary> {
        match self {
            DictChoice::D1 => vec![dictionary_d1()],
            DictChoice::D2 => vec![dictionary_d2()],
            DictChoice::Both => vec![dictionary_d1(), dictionary_d2()],
        }
    }
}

impl FromStr for DictChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "d1" => Ok(DictChoice::D1),
            "d2" => Ok(DictChoice::D2),
            "both" => Ok(DictChoice::Both),
            _ => Err(Error::Config(format!(
                "unknown dictionary '{s}' (d1, d2 or both)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxError {
    pub value: f64,
    pub time: f64,
    pub compartment: char,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSummary {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    /// Real and imaginary parts of `ln(lambda) / dt`; `null` in JSON for `lambda = 0`.
    pub rate_re: f64,
    pub rate_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowError {
    pub start: f64,
    pub end: f64,
    pub max_error: Option<f64>,
}

/// Summary of one dictionary's free run against the NSFD ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub preset: String,
    pub dictionary: String,
    pub scenario: ScenarioPreset,
    pub rmse: PerCompartment<f64>,
    pub total_rmse: f64,
    pub max_error: MaxError,
    pub residual: f64,
    pub eigenvalues: Vec<EigenSummary>,
    /// Smallest predicted value per compartment.
    pub min_prediction: PerCompartment<f64>,
    /// True when the prediction has a strictly negative value in that compartment.
    pub negativity: PerCompartment<bool>,
    pub windows: Vec<WindowError>,
}

#[derive(Debug, Clone)]
pub struct DictionaryRun {
    pub dictionary: Dictionary,
    pub model: KoopmanModel,
    pub prediction: Trajectory,
    pub report: RunReport,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// File stem for exported artifacts.
    pub label: String,
    pub scenario: ScenarioPreset,
    pub truth: Trajectory,
    pub runs: Vec<DictionaryRun>,
}

impl PipelineOutput {
    pub fn run(&self, dictionary: &str) -> Option<&DictionaryRun> {
        self.runs.iter().find(|r| r.dictionary.name() == dictionary)
    }
}

/// Fits one dictionary to `truth` and free-runs it over the same horizon.
pub fn fit_and_predict(
    scenario: &ScenarioPreset,
    truth: &Trajectory,
    dictionary: Dictionary,
    windows: &[(f64, f64)],
) -> Result<DictionaryRun> {
    let lifted = lift_trajectory(truth, &dictionary)?;
    let snapshots = build_snapshots(&lifted, truth.dt)?;
    let model = fit_edmd(&snapshots, scenario.svd_tol)?;
    let prediction = predict(&model, &truth.states[0], &dictionary, truth.len() - 1)?;
    let err = reconstruction_error(truth, &prediction)?;

    let mut min = [f64::INFINITY; 4];
    for x in &prediction.states {
        for (m, v) in min.iter_mut().zip(x.to_array()) {
            *m = m.min(v);
        }
    }
    let windows = windows
        .iter()
        .map(|&(start, end)| {
            Ok(WindowError {
                start,
                end,
                max_error: window_max_error(truth, &prediction, start, end)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let eigenvalues = spectrum(&model)
        .into_iter()
        .map(|c| EigenSummary {
            re: c.eigenvalue.re,
            im: c.eigenvalue.im,
            modulus: c.eigenvalue.norm(),
            rate_re: c.continuous_rate.re,
            rate_im: c.continuous_rate.im,
        })
        .collect();

    let report = RunReport {
        preset: scenario.name.clone(),
        dictionary: dictionary.name().to_string(),
        scenario: scenario.clone(),
        rmse: err.rmse,
        total_rmse: err.total,
        max_error: MaxError {
            value: err.max_abs,
            time: err.max_time,
            compartment: err.max_compartment,
        },
        residual: model.residual,
        eigenvalues,
        min_prediction: PerCompartment::from_array(min),
        negativity: PerCompartment::from_array(min.map(|m| m < 0.0)),
        windows,
    };
    Ok(DictionaryRun {
        dictionary,
        model,
        prediction,
        report,
    })
}

/// Simulates NSFD ground truth and fits the chosen dictionaries.
pub fn run_pipeline(scenario: &ScenarioPreset, choice: DictChoice) -> Result<PipelineOutput> {
    scenario.validate()?;
    let truth = simulate_nsfd(&scenario.nsfd_config(), &scenario.params)?;
    let runs = choice
        .dictionaries()
        .into_iter()
        .map(|d| fit_and_predict(scenario, &truth, d, &[]))
        .collect::<Result<Vec<_>>>()?;
    Ok(PipelineOutput {
        label: scenario.name.clone(),
        scenario: scenario.clone(),
        truth,
        runs,
    })
}

/// Windows compared in the extended measles run.
pub const LONG_MEASLES_WINDOWS: [(f64, f64); 2] = [(150.0, 250.0), (350.0, 500.0)];

/// Measles with the extended dictionary over the long horizon, with windowed
/// errors around the end of the standard horizon and at late times.
pub fn run_long_measles(overrides: &Overrides) -> Result<(PipelineOutput, Vec<RangeWarning>)> {
    let base = Preset::Measles.scenario();
    let long_end = base.long_t_end.expect("measles has a long horizon");
    let o = Overrides {
        t_end: overrides.t_end.or(Some(long_end)),
        ..*overrides
    };
    let (scenario, warnings) = base.with_overrides(&o)?;
    let truth = simulate_nsfd(&scenario.nsfd_config(), &scenario.params)?;
    let run = fit_and_predict(&scenario, &truth, dictionary_d2(), &LONG_MEASLES_WINDOWS)?;
    Ok((
        PipelineOutput {
            label: "measles_long".to_string(),
            scenario,
            truth,
            runs: vec![run],
        },
        warnings,
    ))
}
