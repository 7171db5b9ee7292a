//! Subcommand implementations: load knobs, call the library, write artifacts.
//!
//! Every data file (CSV, NDJSON, JSON, snapshots) is byte-identical for
//! identical config and seed; `meta.json` is the only artifact carrying
//! wall-clock data.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use kpi3_core::bench::{
    bench_bilinear_transverse, bench_l4_strichartz, bench_leibniz, bilinear_exponent_sweep,
    l4_exponent_sweep, BenchReport,
};
use kpi3_core::dispersion::resonance_breakdown;
use kpi3_core::domain::Grid;
use kpi3_core::evolve::simulate;
use kpi3_core::field::{random_band_field, SpectralField};
use kpi3_core::illposed::illposed_sweep;
use kpi3_core::norms::{norm, NormSpec};
use kpi3_core::report::{write_bench_csv, write_bench_summary_json, write_illposed_csv};
use kpi3_core::scaling::{scaling_exponent, verify_flow_scaling};
use kpi3_core::snapshot::{read_snapshot_file, write_snapshot};

use crate::config::{
    BenchExperiment, FileConfig, IllposedExperiment, InitialData, NormsExperiment,
    ResonanceExperiment, ScalingExperiment, SimulateExperiment,
};

/// One resolved invocation.
pub struct Run<'a> {
    pub file: &'a FileConfig,
    pub config_path: &'a Path,
    pub out: &'a Path,
    pub seed: u64,
    pub verbosity: u8,
}

impl Run<'_> {
    fn artifact<F>(&self, name: &str, write: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.out.join(name);
        let file = File::create(&path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        let mut w = BufWriter::new(file);
        write(&mut w)?;
        w.flush()?;
        if self.verbosity > 0 {
            eprintln!("wrote {}", path.display());
        }
        Ok(())
    }

    /// Sidecar identifying the run; the only place a timestamp lives.
    pub fn write_meta(&self, subcommand: &str) -> Result<()> {
        #[derive(serde::Serialize)]
        struct RunMeta<'a> {
            subcommand: &'a str,
            config: String,
            seed: u64,
            unix_time_s: f64,
        }
        let meta = RunMeta {
            subcommand,
            config: self.config_path.display().to_string(),
            seed: self.seed,
            unix_time_s: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs_f64())
                .unwrap_or(0.0),
        };
        self.artifact("meta.json", |w| {
            serde_json::to_writer_pretty(&mut *w, &meta)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }

    fn initial_field(&self, initial: &InitialData) -> Result<SpectralField<f64>> {
        match initial {
            InitialData::RandomBand { n, m, amplitude } => {
                ensure!(
                    amplitude.is_finite() && *amplitude > 0.0,
                    "initial amplitude must be positive, got {amplitude}"
                );
                let grid = Grid::new(self.file.domain()?)?;
                let mut f = random_band_field(&grid, *n, *m, self.seed)?;
                f.scale(amplitude / f.l2_norm());
                Ok(f)
            }
            InitialData::Snapshot { path } => read_snapshot_file(path)
                .with_context(|| format!("cannot load snapshot {}", path.display())),
        }
    }

    pub fn simulate(&self) -> Result<()> {
        let exp: SimulateExperiment = self.file.experiment()?;
        let solver = self.file.solver()?;
        let u0 = self.initial_field(&exp.initial)?;
        let (final_state, series) = simulate(&u0, &solver)?;
        self.artifact("diagnostics.ndjson", |w| Ok(series.write_ndjson(w)?))?;
        self.artifact("final.kpi3", |w| Ok(write_snapshot(w, &final_state)?))?;
        if self.verbosity > 0 {
            if let Some(last) = series.samples.last() {
                eprintln!(
                    "finished at t = {} with l2 = {:.6e}",
                    last.t, last.l2
                );
            }
        }
        Ok(())
    }

    pub fn resonance(&self) -> Result<()> {
        let exp: ResonanceExperiment = self.file.experiment()?;
        ensure!(exp.pairs >= 1, "need at least one pair");
        ensure!(
            exp.xi_max > 0.0 && exp.eta_max >= 0.0 && exp.smallness > 0.0,
            "frequency ranges and smallness must be positive"
        );
        let floor = exp.xi_max / 1024.0;
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        let draw_xi = |rng: &mut ChaCha12Rng| -> f64 {
            let mag = rng.random_range(floor..=exp.xi_max);
            if rng.random::<bool>() {
                mag
            } else {
                -mag
            }
        };
        self.artifact("resonance.csv", |w| {
            writeln!(
                w,
                "xi1,eta11,eta12,xi2,eta21,eta22,omega_sum,kdv_part,transverse_part,resonant"
            )?;
            for _ in 0..exp.pairs {
                let (xi1, xi2) = loop {
                    let a = draw_xi(&mut rng);
                    let b = draw_xi(&mut rng);
                    if (a + b).abs() >= floor {
                        break (a, b);
                    }
                };
                let eta = |rng: &mut ChaCha12Rng| -> f64 {
                    if exp.eta_max == 0.0 {
                        0.0
                    } else {
                        rng.random_range(-exp.eta_max..=exp.eta_max)
                    }
                };
                let e1 = (eta(&mut rng), eta(&mut rng));
                let e2 = (eta(&mut rng), eta(&mut rng));
                let b = resonance_breakdown(exp.alpha, (xi1, e1), (xi2, e2), exp.smallness)?;
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{}",
                    xi1,
                    e1.0,
                    e1.1,
                    xi2,
                    e2.0,
                    e2.1,
                    b.omega_sum,
                    b.kdv_part,
                    b.transverse_part,
                    b.resonant
                )?;
            }
            Ok(())
        })
    }

    pub fn scaling(&self) -> Result<()> {
        let exp: ScalingExperiment = self.file.experiment()?;
        let solver = self.file.solver()?;
        let u0 = self.initial_field(&exp.initial)?;
        let discrepancy =
            verify_flow_scaling(&u0, exp.lambda_factor, solver.alpha, exp.horizon, &solver)?;

        #[derive(serde::Serialize)]
        struct NormExponent {
            s1: f64,
            s2: f64,
            exponent: f64,
        }
        #[derive(serde::Serialize)]
        struct ScalingReport {
            alpha: f64,
            lambda_factor: f64,
            horizon: f64,
            seed: u64,
            flow_discrepancy: f64,
            norm_exponents: Vec<NormExponent>,
        }
        let report = ScalingReport {
            alpha: solver.alpha,
            lambda_factor: exp.lambda_factor,
            horizon: exp.horizon,
            seed: self.seed,
            flow_discrepancy: discrepancy,
            norm_exponents: exp
                .exponents
                .iter()
                .map(|&(s1, s2)| NormExponent {
                    s1,
                    s2,
                    exponent: scaling_exponent(solver.alpha, s1, s2),
                })
                .collect(),
        };
        self.artifact("scaling.json", |w| {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }

    pub fn illposed(&self) -> Result<()> {
        let exp: IllposedExperiment = self.file.experiment()?;
        ensure!(
            !exp.alphas.is_empty() && !exp.ns.is_empty(),
            "need at least one α and one N"
        );
        let results = illposed_sweep(&exp.alphas, &exp.ns, exp.theta, exp.t, exp.sbar);
        let mut cells = Vec::new();
        let mut first_error = None;
        for (alpha, n, outcome) in results {
            match outcome {
                Ok(cell) => cells.push(cell),
                Err(err) => {
                    eprintln!("cell (alpha = {alpha}, N = {n}) failed: {err}");
                    first_error.get_or_insert(err);
                }
            }
        }
        if cells.is_empty() {
            if let Some(err) = first_error {
                return Err(err.into());
            }
        }
        self.artifact("illposed.csv", |w| Ok(write_illposed_csv(w, &cells)?))
    }

    pub fn bench(&self) -> Result<()> {
        let exp: BenchExperiment = self.file.experiment()?;
        let report: BenchReport = match &exp {
            BenchExperiment::L4 {
                alpha,
                n,
                k,
                m,
                ms,
                samples,
                options,
            } => {
                let opts = options.build(self.seed);
                match (m, ms.is_empty()) {
                    (Some(m), true) => {
                        bench_l4_strichartz(*alpha, *n, *k, *m, *samples, &opts)?
                    }
                    (None, false) => l4_exponent_sweep(*alpha, *n, *k, ms, *samples, &opts)?,
                    (Some(_), false) => bail!("give either m (single cell) or ms (sweep)"),
                    (None, true) => bail!("give m (single cell) or ms (sweep)"),
                }
            }
            BenchExperiment::Bilinear {
                alpha,
                cells,
                parameter,
                samples,
                options,
            } => {
                ensure!(!cells.is_empty(), "need at least one cell");
                let opts = options.build(self.seed);
                match parameter {
                    Some(p) => {
                        let pairs: Vec<_> = cells.iter().map(|c| c.bands()).collect();
                        bilinear_exponent_sweep(*alpha, &pairs, p, *samples, &opts)?
                    }
                    None => {
                        ensure!(
                            cells.len() == 1,
                            "multiple cells need a sweep `parameter`"
                        );
                        let (b1, b2) = cells[0].bands();
                        bench_bilinear_transverse(*alpha, b1, b2, *samples, &opts)?
                    }
                }
            }
            BenchExperiment::Leibniz {
                a,
                b,
                delta,
                p,
                samples,
                options,
            } => {
                let opts = options.build(self.seed);
                bench_leibniz(*a, *b, *delta, *p, *samples, &opts)?
            }
        };
        if self.verbosity > 0 {
            eprintln!(
                "{}: {} samples, max ratio {:.4e}, {} fit(s)",
                report.inequality,
                report.samples.len(),
                report.max_ratio,
                report.fits.len()
            );
        }
        self.artifact("bench.csv", |w| Ok(write_bench_csv(w, &report)?))?;
        self.artifact("summary.json", |w| {
            Ok(write_bench_summary_json(w, std::slice::from_ref(&report))?)
        })
    }

    pub fn norms(&self) -> Result<()> {
        let exp: NormsExperiment = self.file.experiment()?;
        let field = read_snapshot_file(&exp.input)
            .with_context(|| format!("cannot load snapshot {}", exp.input.display()))?;
        let grid = field.grid();

        #[derive(serde::Serialize)]
        struct SobolevValue {
            s1: f64,
            s2: f64,
            value: f64,
        }
        #[derive(serde::Serialize)]
        struct EsValue {
            s: f64,
            lambda: f64,
            value: f64,
        }
        #[derive(serde::Serialize)]
        struct NormsReport {
            input: String,
            lambda: f64,
            alpha: f64,
            shape: (usize, usize, usize),
            l2: f64,
            linf: f64,
            sobolev: Vec<SobolevValue>,
            es: Vec<EsValue>,
        }

        let mut sobolev = Vec::new();
        for &(s1, s2) in &exp.sobolev {
            sobolev.push(SobolevValue {
                s1,
                s2,
                value: norm(&field, &NormSpec::Sobolev { s1, s2 })?,
            });
        }
        let mut es = Vec::new();
        for &(s, lambda) in &exp.es {
            es.push(EsValue {
                s,
                lambda,
                value: norm(&field, &NormSpec::Es { s, lambda })?,
            });
        }
        let report = NormsReport {
            input: exp.input.display().to_string(),
            lambda: grid.lambda(),
            alpha: grid.alpha(),
            shape: grid.shape(),
            l2: norm(&field, &NormSpec::L2)?,
            linf: field.linf_physical(),
            sobolev,
            es,
        };
        self.artifact("norms.json", |w| {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }
}
