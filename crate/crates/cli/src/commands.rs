//! One function per subcommand. Each computes everything first and only then
//! commits a run directory, so a failed command leaves the store untouched.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stochplan_core::harness::{build_cost_dataset, covering_axes, run_comparison, run_payload_study};
use stochplan_core::predict::{cross_validate, read_dataset, write_dataset};
use stochplan_core::router::{build_lattice, Lattice, RouterError};
use stochplan_core::schedule::{plan_schedules, schedule_axes, ScheduleInput};
use stochplan_core::stochastic::run_stochastic_plan;
use stochplan_core::weather::{generate_ensemble, io::save_ensemble, EnsembleSource, WgrdDirectory};
use stochplan_core::{AircraftModel, CostIndex, EnsembleForecast, FlightPlan, Planner, WeatherGrid};

use crate::config::Config;
use crate::error::CliError;
use crate::store::{sha256_hex, Store};
use crate::{Command, Common};

pub const CONFIG_FILE: &str = "config.json";
pub const PLAN_FILE: &str = "plan.json";
pub const MATRIX_FILE: &str = "matrix.json";
pub const CANDIDATES_FILE: &str = "candidates.json";
pub const SELECTION_FILE: &str = "selection.json";
pub const AUDIT_FILE: &str = "audit.json";

/// One row of `candidates.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub index: usize,
    pub route_key: String,
    pub waypoint_ids: Vec<String>,
    /// Scenario tags whose first-pass optimum used this route.
    pub found_by: Vec<String>,
    /// [lat, lon] per waypoint, degrees.
    pub polyline: Vec<[f64; 2]>,
    pub first_plan: FlightPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanArtifact {
    pub plan: FlightPlan,
    pub polyline: Vec<[f64; 2]>,
}

pub fn dispatch(store: &Store, command: Command) -> Result<Option<PathBuf>, CliError> {
    match command {
        Command::GenWeather { common } => gen_weather(store, &common).map(Some),
        Command::Plan { common, payload, weather_dir } => plan(store, &common, payload, weather_dir.as_deref()).map(Some),
        Command::Splan { common, criterion, payload_k, payload, weather_dir } => {
            let mut config = load(&common)?;
            if let Some(c) = criterion {
                config.stochastic.criterion = c;
            }
            if let Some(k) = payload_k {
                config.stochastic.payload_k = k;
            }
            splan(store, &common, config, payload, weather_dir.as_deref()).map(Some)
        }
        Command::Compare { common, flights } => compare(store, &common, flights).map(Some),
        Command::PayloadStudy { common, flights } => payload_study(store, &common, flights).map(Some),
        Command::PredictCv { common, flights, folds, dataset } => predict_cv(store, &common, flights, folds, dataset.as_deref()).map(Some),
        Command::Schedule { common, input, cap } => schedule(store, &common, input, cap).map(Some),
        Command::Serve { addr } => {
            crate::server::serve_blocking(store.clone(), &addr)?;
            Ok(None)
        }
    }
}

fn load(common: &Common) -> Result<Config, CliError> {
    Config::load(common.config.as_deref())
}

fn run_id(common: &Common, command: &str, hash: &str) -> String {
    common.run_id.clone().unwrap_or_else(|| format!("{command}-{}", &hash[..12]))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(dir.join(name), bytes)?;
    Ok(())
}

fn commit<F>(store: &Store, common: &Common, command: &str, config: &Config, extras: &[String], fill: F) -> Result<PathBuf, CliError>
where
    F: FnOnce(&Path) -> Result<(), CliError>,
{
    let hash = config.hash(command, extras)?;
    let id = run_id(common, command, &hash);
    let (path, _) = store.commit(&id, command, &hash, |dir| {
        write_json(dir, CONFIG_FILE, config)?;
        fill(dir)
    })?;
    Ok(path)
}

/// Digest of the files that make up a WGRD directory, in manifest order.
fn weather_dir_digest(dir: &Path) -> Result<String, CliError> {
    let manifest = fs::read(dir.join(stochplan_core::weather::io::MANIFEST_FILE))
        .map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
    Ok(format!("weather:{}", sha256_hex(&manifest)))
}

/// Lattice, aircraft and weather for the single configured flight.
struct Single {
    lattice: Lattice,
    model: AircraftModel,
    ci: CostIndex,
    ensemble: EnsembleForecast,
    nowcast: Option<WeatherGrid>,
}

impl Single {
    fn build(config: &Config, weather_dir: Option<&Path>) -> Result<Self, CliError> {
        let f = &config.flight;
        let model = f.model()?;
        let ci = f.cost_index()?;
        f.payload.validate()?;
        let lattice = build_lattice(&f.origin, &f.destination, &config.lattice)?;
        let (ensemble, nowcast) = match weather_dir {
            Some(dir) => WgrdDirectory(dir.to_path_buf()).load()?,
            None => {
                let axes = covering_axes(&lattice, f.grid_margin_deg, f.departure_h + f.weather_horizon_h);
                let (e, n) = generate_ensemble(&config.weather, &axes)?;
                (e, Some(n))
            }
        };
        Ok(Self { lattice, model, ci, ensemble, nowcast })
    }

    fn planner(&self, departure_h: f64) -> Planner<'_> {
        Planner::new(&self.lattice, &self.model, self.ci, departure_h)
    }
}

fn gen_weather(store: &Store, common: &Common) -> Result<PathBuf, CliError> {
    let mut config = load(common)?;
    if let Some(s) = common.seed {
        config.weather.seed = s;
    }
    let single = Single::build(&config, None)?;
    println!("{} members on {:?} grid", single.ensemble.n_members(), single.ensemble.axes().shape());
    commit(store, common, "gen-weather", &config, &[], |dir| {
        save_ensemble(dir, &single.ensemble, single.nowcast.as_ref())?;
        Ok(())
    })
}

fn plan(store: &Store, common: &Common, payload: Option<f64>, weather_dir: Option<&Path>) -> Result<PathBuf, CliError> {
    let mut config = load(common)?;
    if let Some(s) = common.seed {
        config.weather.seed = s;
    }
    if let Some(p) = payload {
        config.flight.payload.mean = p;
    }
    let extras: Vec<String> = weather_dir.map(weather_dir_digest).transpose()?.into_iter().collect();
    let single = Single::build(&config, weather_dir)?;
    let plan = single.planner(config.flight.departure_h).optimize(single.ensemble.control(), config.flight.payload.mean, "control")?;
    let polyline = single.lattice.polyline(&plan.route)?;
    println!("{}  fuel {:.1} kg  time {:.1} min  cost {:.1} kg", plan.route.route_key, plan.trip_fuel, plan.trip_time, plan.cost);
    commit(store, common, "plan", &config, &extras, |dir| write_json(dir, PLAN_FILE, &PlanArtifact { plan, polyline }))
}

fn splan(store: &Store, common: &Common, mut config: Config, payload: Option<f64>, weather_dir: Option<&Path>) -> Result<PathBuf, CliError> {
    if let Some(s) = common.seed {
        config.weather.seed = s;
    }
    if let Some(p) = payload {
        config.flight.payload.mean = p;
    }
    let extras: Vec<String> = weather_dir.map(weather_dir_digest).transpose()?.into_iter().collect();
    let single = Single::build(&config, weather_dir)?;
    let planner = single.planner(config.flight.departure_h);
    let run = run_stochastic_plan(&planner, &single.ensemble, &config.flight.payload, &config.stochastic)?;
    let candidates = run
        .first_pass
        .candidates
        .iter()
        .enumerate()
        .map(|(index, c)| {
            Ok(CandidateRecord {
                index,
                route_key: c.route.route_key.clone(),
                waypoint_ids: c.route.waypoint_ids.clone(),
                found_by: c.found_by.clone(),
                polyline: single.lattice.polyline(&c.route)?,
                first_plan: c.first_plan.clone(),
            })
        })
        .collect::<Result<Vec<_>, RouterError>>()?;
    println!(
        "{} candidates from {} runs; {} selects {} (score {:.1})",
        candidates.len(),
        run.audit.first_pass_runs,
        run.selection.criterion,
        run.selection.selected_route.route_key,
        run.selection.score
    );
    let audit = serde_json::json!({
        "audit": run.audit,
        "payloads": run.payloads,
        "first_pass_failures": run.first_pass.failures,
    });
    commit(store, common, "splan", &config, &extras, |dir| {
        write_json(dir, MATRIX_FILE, &run.matrix)?;
        write_json(dir, CANDIDATES_FILE, &candidates)?;
        write_json(dir, SELECTION_FILE, &run.selection)?;
        write_json(dir, AUDIT_FILE, &audit)
    })
}

fn experiment_overrides(config: &mut Config, common: &Common, flights: Option<usize>) {
    if let Some(s) = common.seed {
        config.experiment.seed = s;
    }
    if let Some(n) = flights {
        config.experiment.n_flights = n;
    }
}

fn compare(store: &Store, common: &Common, flights: Option<usize>) -> Result<PathBuf, CliError> {
    let mut config = load(common)?;
    experiment_overrides(&mut config, common, flights);
    let report = run_comparison(&config.experiment)?;
    let summary = report.summary_text();
    print!("{summary}");
    commit(store, common, "compare", &config, &[], |dir| {
        write_json(dir, "report.json", &report)?;
        fs::write(dir.join("summary.txt"), &summary)?;
        fs::write(dir.join("flights.txt"), report.flights_table())?;
        if let Some(h) = &report.histogram {
            fs::write(dir.join("histogram.csv"), h.to_csv())?;
        }
        Ok(())
    })
}

fn payload_study(store: &Store, common: &Common, flights: Option<usize>) -> Result<PathBuf, CliError> {
    let mut config = load(common)?;
    experiment_overrides(&mut config, common, flights);
    let report = run_payload_study(&config.experiment)?;
    let table = report.table();
    print!("{table}");
    commit(store, common, "payload-study", &config, &[], |dir| {
        write_json(dir, "report.json", &report)?;
        fs::write(dir.join("table.tsv"), &table)?;
        Ok(())
    })
}

fn predict_cv(store: &Store, common: &Common, flights: Option<usize>, folds: Option<usize>, dataset: Option<&Path>) -> Result<PathBuf, CliError> {
    let mut config = load(common)?;
    experiment_overrides(&mut config, common, flights);
    if let Some(s) = common.seed {
        config.predict.seed = s;
    }
    if let Some(k) = folds {
        config.predict.folds = k;
    }
    let (samples, failures, extras) = match dataset {
        Some(path) => {
            let bytes = fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            (read_dataset(bytes.as_slice())?, Vec::new(), vec![format!("dataset:{}", sha256_hex(&bytes))])
        }
        None => {
            let (s, f) = build_cost_dataset(&config.experiment)?;
            (s, f, Vec::new())
        }
    };
    let report = cross_validate(&samples, &config.predict.regressors, config.predict.folds, config.predict.seed)?;
    let table = report.table();
    print!("{table}");
    commit(store, common, "predict-cv", &config, &extras, |dir| {
        let mut csv = Vec::new();
        write_dataset(&samples, &mut csv)?;
        fs::write(dir.join("dataset.csv"), csv)?;
        write_json(dir, "dataset_failures.json", &failures)?;
        write_json(dir, "cv.json", &report)?;
        fs::write(dir.join("table.txt"), &table)?;
        Ok(())
    })
}

fn schedule(store: &Store, common: &Common, input: Option<PathBuf>, cap: Option<usize>) -> Result<PathBuf, CliError> {
    let mut config = load(common)?;
    if let Some(s) = common.seed {
        config.weather.seed = s;
    }
    if let Some(c) = cap {
        config.schedule.cap = c;
    }
    if input.is_some() {
        config.schedule.input = input;
    }
    let path = config
        .schedule
        .input
        .clone()
        .ok_or_else(|| CliError::Config("no schedule input: pass --input or set schedule.input".into()))?;
    let bytes = fs::read(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let doc: ScheduleInput = serde_json::from_slice(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let fleet = doc.fleet()?;
    let axes = schedule_axes(&doc.missions, &config.schedule.economics.lattice, config.schedule.grid_margin_deg)?;
    let (ensemble, _) = generate_ensemble(&config.weather, &axes)?;
    let ranking = plan_schedules(&doc.missions, &fleet, &ensemble, &config.schedule.economics, config.schedule.cap)?;
    let table = ranking.table();
    print!("{table}");
    let extras = vec![format!("input:{}", sha256_hex(&bytes))];
    // the input is copied into the run, so its location does not matter
    config.schedule.input = None;
    commit(store, common, "schedule", &config, &extras, |dir| {
        fs::write(dir.join("input.json"), &bytes)?;
        write_json(dir, "ranking.json", &ranking)?;
        fs::write(dir.join("table.txt"), &table)?;
        Ok(())
    })
}
