//! Experiment recipes: radiation patterns, secrecy versus back-off and
//! angle, and link quality versus back-off.
//!
//! Each recipe has a typed entry point returning numbers (used by the test
//! suites) and a `run_*` wrapper that renders the same numbers into CSV
//! tables plus a manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::array::{los_channel, ArrayGeometry, ChannelVector, UserDef};
use crate::bussgang::{bussgang_mc, poly3_bussgang, BussgangStats, MC_GENERATOR};
use crate::config::{PaSelector, PrecoderSelector, ScenarioConfig};
use crate::error::{Error, Result};
use crate::metrics::{
    distortion_pattern, evaluate_secrecy, signal_pattern, to_db, total_power_and_directivity,
    AngularGrid, PatternReport, SecrecyReport, MAX_CLAMPED_FRACTION,
};
use crate::pa::{fit_poly3_to_rapp, psat_from_ibo, IboSpec, PaModel, Poly3Params};
use crate::precoder::{mrt, mrt_with_an, z3ro, Precoder};

/// Outage probabilities reported by the back-off sweep.
pub const OUTAGE_LEVELS: [f64; 2] = [0.05, 0.10];

/// `start, start+step, …, stop` without accumulating rounding drift.
pub fn ibo_range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as i64;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

/// A configured scenario with its derived geometry, channel and grid.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub geometry: ArrayGeometry,
    pub legit_angle: f64,
    pub legit_channel: ChannelVector,
    pub grid: AngularGrid,
}

/// Everything computed for one precoder, amplifier model and back-off.
#[derive(Debug, Clone)]
pub struct OperatingPoint {
    pub precoder: Precoder,
    pub pa: PaSelector,
    pub ibo_db: f64,
    pub stats: BussgangStats,
    pub secrecy: SecrecyReport,
}

impl Scenario {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let geometry = config.geometry()?;
        let legit_angle = config.scenario.legit_angle_deg.to_radians();
        let legit_channel = los_channel(
            &geometry,
            &UserDef::new(legit_angle, config.scenario.path_loss),
        )?;
        let grid = AngularGrid::uniform(config.scenario.grid_points)?;
        Ok(Self {
            config: config.clone(),
            geometry,
            legit_angle,
            legit_channel,
            grid,
        })
    }

    /// Average per-antenna input power for unit total transmit power.
    pub fn p_in(&self) -> f64 {
        1.0 / self.geometry.num_antennas() as f64
    }

    pub fn precoder(&self, kind: PrecoderSelector) -> Result<Precoder> {
        match kind {
            PrecoderSelector::Mrt => mrt(&self.legit_channel),
            PrecoderSelector::Z3ro => {
                z3ro(&self.legit_channel, self.config.precoder.saturated_antennas)
            }
            PrecoderSelector::MrtAn => {
                mrt_with_an(&self.legit_channel, self.config.precoder.info_fraction)
            }
        }
    }

    /// Polynomial coefficients at `ibo_db`: the configured override if
    /// present, otherwise a fresh fit to the Rapp curve.
    pub fn poly3_at(&self, ibo_db: f64) -> Result<Poly3Params> {
        let pa = &self.config.pa;
        if let (Some(b1), Some(b3)) = (pa.beta1, pa.beta3) {
            return Poly3Params::new(Complex64::new(b1[0], b1[1]), Complex64::new(b3[0], b3[1]));
        }
        let p_sat = psat_from_ibo(&IboSpec::new(ibo_db, self.p_in())?);
        fit_poly3_to_rapp(&pa.rapp(p_sat), self.p_in())
    }

    /// Bussgang statistics of the amplifier bank for `precoder`.
    pub fn amplifier_stats(
        &self,
        pa: PaSelector,
        ibo_db: f64,
        precoder: &Precoder,
    ) -> Result<BussgangStats> {
        match pa {
            PaSelector::Poly3 => Ok(poly3_bussgang(
                &self.poly3_at(ibo_db)?,
                &precoder.transmit_covariance(),
            )),
            PaSelector::Rapp => {
                let p_sat = psat_from_ibo(&IboSpec::new(ibo_db, self.p_in())?);
                let rapp = self.config.pa.rapp(p_sat);
                bussgang_mc(
                    &PaModel::Rapp(rapp),
                    &precoder.sample_factor(),
                    self.config.monte_carlo.samples,
                    self.config.monte_carlo.seed,
                )
            }
        }
    }

    pub fn evaluate(
        &self,
        kind: PrecoderSelector,
        pa: PaSelector,
        ibo_db: f64,
    ) -> Result<OperatingPoint> {
        let precoder = self.precoder(kind)?;
        let stats = self.amplifier_stats(pa, ibo_db, &precoder)?;
        let secrecy = evaluate_secrecy(
            &self.geometry,
            &self.legit_channel,
            &precoder,
            &stats,
            self.config.scenario.noise_variance,
            &self.grid,
        )?;
        Ok(OperatingPoint {
            precoder,
            pa,
            ibo_db,
            stats,
            secrecy,
        })
    }
}

/// Experiment selections after applying recipe defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub precoders: Vec<PrecoderSelector>,
    pub pa_models: Vec<PaSelector>,
    pub ibo_db: Vec<f64>,
}

impl Selection {
    fn resolve(
        cfg: &ScenarioConfig,
        precoders: &[PrecoderSelector],
        pa_models: &[PaSelector],
        ibo_db: Vec<f64>,
    ) -> Self {
        Self {
            precoders: cfg
                .precoder
                .kinds
                .clone()
                .unwrap_or_else(|| precoders.to_vec()),
            pa_models: cfg.pa.models.clone().unwrap_or_else(|| pa_models.to_vec()),
            ibo_db: cfg.sweep.ibo_db.clone().unwrap_or(ibo_db),
        }
    }

    /// The configuration with every selection spelled out.
    fn pin(&self, cfg: &ScenarioConfig) -> ScenarioConfig {
        let mut pinned = cfg.clone();
        pinned.precoder.kinds = Some(self.precoders.clone());
        pinned.pa.models = Some(self.pa_models.clone());
        pinned.sweep.ibo_db = Some(self.ibo_db.clone());
        pinned
    }

    fn jobs(&self) -> Vec<(PaSelector, PrecoderSelector, f64)> {
        let mut jobs = Vec::new();
        for &pa in &self.pa_models {
            for &p in &self.precoders {
                for &ibo in &self.ibo_db {
                    jobs.push((pa, p, ibo));
                }
            }
        }
        jobs
    }
}

/// Directivity pattern of one operating point.
#[derive(Debug, Clone)]
pub struct PatternResult {
    pub selection: Selection,
    pub angles_deg: Vec<f64>,
    pub report: PatternReport,
    /// Raw distortion power per angle.
    pub distortion: Vec<f64>,
    pub clamped: usize,
}

pub fn pattern_experiment(cfg: &ScenarioConfig) -> Result<PatternResult> {
    let selection = Selection::resolve(
        cfg,
        &[PrecoderSelector::Z3ro],
        &[PaSelector::Poly3],
        vec![-10.0],
    );
    let single = |key: &str, n: usize| {
        if n == 1 {
            Ok(())
        } else {
            Err(Error::config(
                key,
                format!("the pattern experiment takes exactly one value, got {n}"),
            ))
        }
    };
    single("precoder.kinds", selection.precoders.len())?;
    single("pa.models", selection.pa_models.len())?;
    single("sweep.ibo_db", selection.ibo_db.len())?;

    let scenario = Scenario::new(cfg)?;
    let precoder = scenario.precoder(selection.precoders[0])?;
    let stats = scenario.amplifier_stats(selection.pa_models[0], selection.ibo_db[0], &precoder)?;
    let signal = signal_pattern(
        &scenario.geometry,
        &stats.gain,
        &precoder.weights,
        &scenario.grid,
    )?;
    let dist = distortion_pattern(&scenario.geometry, &stats.distortion_cov, &scenario.grid)?;
    if dist.clamped as f64 > MAX_CLAMPED_FRACTION * scenario.grid.len() as f64 {
        return Err(Error::numeric(format!(
            "{} of {} distortion powers were negative before clamping",
            dist.clamped,
            scenario.grid.len()
        )));
    }
    let report = total_power_and_directivity(&signal, &dist.values, &scenario.grid)?;
    Ok(PatternResult {
        selection,
        angles_deg: scenario.grid.degrees().collect(),
        report,
        distortion: dist.values,
        clamped: dist.clamped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecrecyIboRow {
    pub ibo_db: f64,
    pub precoder: PrecoderSelector,
    pub pa: PaSelector,
    pub rate_p05: f64,
    pub rate_p10: f64,
    pub rate_mean: f64,
}

pub fn secrecy_vs_ibo(cfg: &ScenarioConfig) -> Result<(Selection, Vec<SecrecyIboRow>)> {
    let selection = Selection::resolve(
        cfg,
        &[
            PrecoderSelector::Mrt,
            PrecoderSelector::Z3ro,
            PrecoderSelector::MrtAn,
        ],
        &[PaSelector::Poly3, PaSelector::Rapp],
        ibo_range(-20.0, 0.0, 1.0),
    );
    let scenario = Scenario::new(cfg)?;
    let rows = selection
        .jobs()
        .into_par_iter()
        .map(|(pa, kind, ibo)| {
            let point = scenario.evaluate(kind, pa, ibo)?;
            Ok(SecrecyIboRow {
                ibo_db: ibo,
                precoder: kind,
                pa,
                rate_p05: point.secrecy.rate_at_outage(OUTAGE_LEVELS[0])?,
                rate_p10: point.secrecy.rate_at_outage(OUTAGE_LEVELS[1])?,
                rate_mean: point.secrecy.mean_rate(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((selection, rows))
}

/// Secrecy rate per eavesdropper angle for each selected precoder.
#[derive(Debug, Clone, PartialEq)]
pub struct SecrecyAngleBlock {
    pub ibo_db: f64,
    pub pa: PaSelector,
    pub angles_deg: Vec<f64>,
    /// One rate vector per selected precoder, in selection order.
    pub rates: Vec<Vec<f64>>,
}

pub fn secrecy_vs_angle(cfg: &ScenarioConfig) -> Result<(Selection, Vec<SecrecyAngleBlock>)> {
    let selection = Selection::resolve(
        cfg,
        &[PrecoderSelector::Mrt, PrecoderSelector::Z3ro],
        &[PaSelector::Poly3],
        vec![-20.0, -10.0, 0.0],
    );
    let scenario = Scenario::new(cfg)?;
    let mut blocks_in = Vec::new();
    for &pa in &selection.pa_models {
        for &ibo in &selection.ibo_db {
            blocks_in.push((pa, ibo));
        }
    }
    let blocks = blocks_in
        .into_par_iter()
        .map(|(pa, ibo)| {
            let rates = selection
                .precoders
                .iter()
                .map(|&k| Ok(scenario.evaluate(k, pa, ibo)?.secrecy.rates))
                .collect::<Result<Vec<_>>>()?;
            Ok(SecrecyAngleBlock {
                ibo_db: ibo,
                pa,
                angles_deg: scenario.grid.degrees().collect(),
                rates,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((selection, blocks))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SndrIboRow {
    pub ibo_db: f64,
    pub precoder: PrecoderSelector,
    pub pa: PaSelector,
    pub sndr_legit: f64,
    pub snr_legit: f64,
    pub sndr_eve: f64,
    pub snr_eve: f64,
    pub eve_angle_deg: f64,
}

/// Link quality of the legitimate user and of the strongest eavesdropper
/// outside the exclusion window around the user.
pub fn sndr_vs_ibo(cfg: &ScenarioConfig) -> Result<(Selection, Vec<SndrIboRow>)> {
    let selection = Selection::resolve(
        cfg,
        &[PrecoderSelector::Mrt, PrecoderSelector::Z3ro],
        &[PaSelector::Poly3, PaSelector::Rapp],
        ibo_range(-20.0, 0.0, 1.0),
    );
    let scenario = Scenario::new(cfg)?;
    let exclusion = cfg.scenario.eve_exclusion_deg.to_radians();
    let rows = selection
        .jobs()
        .into_par_iter()
        .map(|(pa, kind, ibo)| {
            let s = scenario.evaluate(kind, pa, ibo)?.secrecy;
            let eve = s
                .strongest_eavesdropper(scenario.legit_angle, exclusion)
                .ok_or_else(|| {
                    Error::config("scenario.eve_exclusion_deg", "excludes every grid angle")
                })?;
            Ok(SndrIboRow {
                ibo_db: ibo,
                precoder: kind,
                pa,
                sndr_legit: s.sndr_legit,
                snr_legit: s.snr_legit,
                sndr_eve: s.sndr_eve[eve],
                snr_eve: s.snr_eve[eve],
                eve_angle_deg: s.angles[eve].to_degrees(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((selection, rows))
}

/// Formats `x` with 9 significant digits; non-finite values become an
/// empty cell.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..9).contains(&mag) {
        let decimals = (8 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.8e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub file_name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn new(file_name: &str, header: &[&str]) -> Self {
        Self {
            file_name: file_name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Reproduction record written next to every CSV.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub crate_version: String,
    /// Fully resolved configuration; `--config` on this text reruns the
    /// experiment.
    pub config_toml: String,
    pub selection: Selection,
    pub seed: u64,
    pub mc_samples: usize,
    pub mc_generator: String,
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub tables: Vec<CsvTable>,
    pub manifest: Manifest,
}

impl RunArtifact {
    fn new(
        experiment: &str,
        cfg: &ScenarioConfig,
        selection: Selection,
        tables: Vec<CsvTable>,
        notes: Vec<String>,
        started: Instant,
    ) -> Self {
        let manifest = Manifest {
            experiment: experiment.into(),
            crate_version: env!("CARGO_PKG_VERSION").into(),
            config_toml: selection.pin(cfg).to_toml(),
            seed: cfg.monte_carlo.seed,
            mc_samples: cfg.monte_carlo.samples,
            mc_generator: MC_GENERATOR.into(),
            outputs: tables.iter().map(|t| t.file_name.clone()).collect(),
            notes,
            selection,
            elapsed_ms: started.elapsed().as_millis(),
        };
        Self { tables, manifest }
    }

    /// Writes every table, the manifest and the resolved config into `dir`.
    /// Each file is written to a temporary name and renamed into place.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let stem = self.manifest.experiment.replace('-', "_");
        let manifest = serde_json::to_vec_pretty(&self.manifest).expect("manifest serialises");
        let mut files: Vec<(String, Vec<u8>)> = self
            .tables
            .iter()
            .map(|t| (t.file_name.clone(), t.to_bytes()))
            .collect();
        files.push((
            format!("{stem}.config.toml"),
            self.manifest.config_toml.clone().into_bytes(),
        ));
        files.push((format!("{stem}.manifest.json"), manifest));

        let mut written = Vec::new();
        for (name, bytes) in files {
            let path = dir.join(&name);
            let tmp = dir.join(format!(".{name}.tmp"));
            let io = |source| Error::Io {
                path: path.display().to_string(),
                source,
            };
            std::fs::write(&tmp, bytes).map_err(io)?;
            std::fs::rename(&tmp, &path).map_err(io)?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn run_pattern_experiment(cfg: &ScenarioConfig) -> Result<RunArtifact> {
    let started = Instant::now();
    let res = pattern_experiment(cfg)?;
    let mut table = CsvTable::new(
        "pattern.csv",
        &[
            "angle_deg",
            "directivity_signal_db",
            "directivity_distortion_db",
        ],
    );
    for (i, a) in res.angles_deg.iter().enumerate() {
        table.rows.push(vec![
            format_sig(*a),
            format_sig(to_db(res.report.signal_directivity[i])),
            format_sig(to_db(res.report.distortion_directivity[i])),
        ]);
    }
    let notes = vec![
        format!(
            "precoder={} pa={} ibo_db={}",
            res.selection.precoders[0], res.selection.pa_models[0], res.selection.ibo_db[0]
        ),
        format!("total_power={}", format_sig(res.report.total_power)),
        format!("clamped_distortion_points={}", res.clamped),
    ];
    Ok(RunArtifact::new(
        "pattern",
        cfg,
        res.selection,
        vec![table],
        notes,
        started,
    ))
}

pub fn run_secrecy_vs_ibo(cfg: &ScenarioConfig) -> Result<RunArtifact> {
    let started = Instant::now();
    let (selection, rows) = secrecy_vs_ibo(cfg)?;
    let mut table = CsvTable::new(
        "secrecy_ibo.csv",
        &[
            "ibo_db",
            "precoder",
            "pa_model",
            "secrecy_rate_p05",
            "secrecy_rate_p10",
            "secrecy_rate_mean",
        ],
    );
    for r in &rows {
        table.rows.push(vec![
            format_sig(r.ibo_db),
            r.precoder.to_string(),
            r.pa.to_string(),
            format_sig(r.rate_p05),
            format_sig(r.rate_p10),
            format_sig(r.rate_mean),
        ]);
    }
    let notes = vec![format!(
        "quantiles: lower empirical quantile at index floor(p*M_pt) over {} angles",
        cfg.scenario.grid_points
    )];
    Ok(RunArtifact::new(
        "secrecy-ibo",
        cfg,
        selection,
        vec![table],
        notes,
        started,
    ))
}

pub fn run_secrecy_vs_angle(cfg: &ScenarioConfig) -> Result<RunArtifact> {
    let started = Instant::now();
    let (selection, blocks) = secrecy_vs_angle(cfg)?;
    let mut header = vec!["ibo_db".to_string(), "pa_model".into(), "angle_deg".into()];
    header.extend(
        selection
            .precoders
            .iter()
            .map(|p| format!("rs_{}", p.label().replace('-', "_"))),
    );
    let mut table = CsvTable {
        file_name: "secrecy_angle.csv".into(),
        header,
        rows: Vec::new(),
    };
    for b in &blocks {
        for (i, a) in b.angles_deg.iter().enumerate() {
            let mut row = vec![format_sig(b.ibo_db), b.pa.to_string(), format_sig(*a)];
            row.extend(b.rates.iter().map(|r| format_sig(r[i])));
            table.rows.push(row);
        }
    }
    Ok(RunArtifact::new(
        "secrecy-angle",
        cfg,
        selection,
        vec![table],
        Vec::new(),
        started,
    ))
}

pub fn run_sndr_vs_ibo(cfg: &ScenarioConfig) -> Result<RunArtifact> {
    let started = Instant::now();
    let (selection, rows) = sndr_vs_ibo(cfg)?;
    let mut table = CsvTable::new(
        "sndr_ibo.csv",
        &[
            "ibo_db",
            "precoder",
            "pa_model",
            "sndr_legit_db",
            "snr_legit_db",
            "sndr_eve_db",
            "snr_eve_db",
            "eve_angle_deg",
        ],
    );
    for r in &rows {
        table.rows.push(vec![
            format_sig(r.ibo_db),
            r.precoder.to_string(),
            r.pa.to_string(),
            format_sig(to_db(r.sndr_legit)),
            format_sig(to_db(r.snr_legit)),
            format_sig(to_db(r.sndr_eve)),
            format_sig(to_db(r.snr_eve)),
            format_sig(r.eve_angle_deg),
        ]);
    }
    let notes = vec![format!(
        "eavesdropper: angle of maximum SNDR on the grid excluding +/-{} deg around the legitimate user",
        cfg.scenario.eve_exclusion_deg
    )];
    Ok(RunArtifact::new(
        "sndr-ibo",
        cfg,
        selection,
        vec![table],
        notes,
        started,
    ))
}
