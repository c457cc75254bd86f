//! Runs configured experiments and writes their outputs.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex;

use crate::config::ExperimentConfig;
use crate::dqpt::{detect_critical_points, loschmidt, scaling_study, CriticalPointSet, LoschmidtSeries, ScalingReport};
use crate::error::{Error, Result};
use crate::io::{num, opt, write_matrix, write_records};
use crate::model::BlochModel;
use crate::spectral::{band_structure, chain_spectrum, char_poly_roots, winding_number, BandStructure};
use crate::wavepacket::{
    channel_separation_check, evolve, kmax_branches, kmax_trajectory, time_grid, WavepacketRun,
};

type C64 = Complex<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    WindingScan,
    Gbz,
    Evolve,
    Dqpt,
    Scaling,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Spectrum, Command::WindingScan, Command::Gbz, Command::Evolve, Command::Dqpt, Command::Scaling];

    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::WindingScan => "winding-scan",
            Command::Gbz => "gbz",
            Command::Evolve => "evolve",
            Command::Dqpt => "dqpt",
            Command::Scaling => "scaling",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown command '{s}'")))
    }
}

/// Files written and one-line findings.
#[derive(Clone, Debug, Default)]
pub struct Outputs {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

impl Outputs {
    fn file(&mut self, path: PathBuf) -> &Path {
        self.files.push(path);
        self.files.last().unwrap()
    }
}

pub fn run(cfg: &ExperimentConfig, cmd: Command, out: &Path) -> Result<Outputs> {
    cfg.validate().map_err(|e| e.at("config"))?;
    std::fs::create_dir_all(out).map_err(|e| Error::from(e).at("output"))?;
    let model = cfg.model.build().map_err(|e| e.at("model"))?;
    match cmd {
        Command::Spectrum => spectrum(cfg, &model, out),
        Command::WindingScan => winding_scan(cfg, &model, out),
        Command::Gbz => gbz(cfg, &model, out),
        Command::Evolve => evolve_cmd(cfg, &model, out),
        Command::Dqpt => dqpt_cmd(cfg, &model, out),
        Command::Scaling => scaling_cmd(cfg, &model, out),
    }
}

fn spectrum(cfg: &ExperimentConfig, model: &BlochModel, out: &Path) -> Result<Outputs> {
    let mut o = Outputs::default();
    let grid = cfg.kgrid()?;
    let bands: BandStructure<f64> = band_structure(model, grid).map_err(|e| e.at("bands"))?;
    let mut header = vec!["k".to_string()];
    for b in 0..bands.bands() {
        header.push(format!("re_e{b}"));
        header.push(format!("im_e{b}"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..grid.len()).map(|m| {
        let mut r = vec![num(bands.ks()[m])];
        for b in 0..bands.bands() {
            let e = bands.energy(m, b);
            r.push(num(e.re));
            r.push(num(e.im));
        }
        r
    });
    write_records(o.file(out.join("bands.csv")), &header, rows)?;
    let spec = chain_spectrum(model, cfg.grid.n, cfg.grid.boundary).map_err(|e| e.at("spectrum"))?;
    write_records(o.file(out.join("spectrum.csv")), &["re", "im"], spec.iter().map(|z| vec![num(z.re), num(z.im)]))?;
    o.summary.push(format!("{} chain eigenvalues under {:?}", spec.len(), cfg.grid.boundary));
    if !bands.unreliable().is_empty() {
        o.summary.push(format!("{} momenta near an exceptional point", bands.unreliable().len()));
    }
    Ok(o)
}

fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| lo + step * i as f64).collect()
}

/// Determinant winding over a rectangle of reference energies; `None`
/// where the reference lies on the spectrum.
pub fn winding_map(model: &BlochModel, re: [f64; 2], im: [f64; 2], step: f64) -> Vec<(C64, Option<i64>)> {
    let xs = axis(re[0], re[1], step);
    let ys = axis(im[0], im[1], step);
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            let e = C64::new(x, y);
            out.push((e, winding_number(model, e, 256).ok().map(|r| r.winding)));
        }
    }
    out
}

fn winding_scan(cfg: &ExperimentConfig, model: &BlochModel, out: &Path) -> Result<Outputs> {
    let mut o = Outputs::default();
    let a = &cfg.analysis;
    let map = winding_map(model, a.scan_re, a.scan_im, a.scan_resolution);
    let values: BTreeSet<i64> = map.iter().filter_map(|(_, w)| *w).collect();
    let rows = map.iter().map(|(e, w)| vec![num(e.re), num(e.im), w.map_or_else(|| "na".into(), |w| w.to_string())]);
    write_records(o.file(out.join("winding_scan.csv")), &["re", "im", "winding"], rows)?;
    o.summary.push(format!("winding values {values:?}"));
    Ok(o)
}

fn gbz(cfg: &ExperimentConfig, model: &BlochModel, out: &Path) -> Result<Outputs> {
    let mut o = Outputs::default();
    let mut rows = Vec::new();
    for eps in cfg.analysis.gbz_references() {
        let rep = char_poly_roots(model, eps).map_err(|e| e.at("gbz"))?;
        for (i, z) in rep.roots.iter().enumerate() {
            rows.push(vec![
                num(eps.re),
                num(eps.im),
                rep.pole_order.to_string(),
                i.to_string(),
                num(z.re),
                num(z.im),
                num(z.norm()),
            ]);
        }
        let pair = rep.symplectic_pair.map_or("n/a".to_string(), |p| format!("{}", p.holds(1e-6)));
        o.summary.push(format!(
            "eps0 = {eps}: degree {}, p = {}, roots-winding {}, z<->1/z defect {:.2e}, pair-degenerate {pair}",
            rep.roots.len(),
            rep.pole_order,
            rep.winding_from_roots().map_or("undefined".to_string(), |w| w.to_string()),
            rep.reciprocal_defect,
        ));
    }
    write_records(
        o.file(out.join("gbz_roots.csv")),
        &["eps_re", "eps_im", "pole_order", "index", "z_re", "z_im", "abs_z"],
        rows,
    )?;
    Ok(o)
}

fn times(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    time_grid(cfg.grid.t_max, cfg.grid.dt)
}

fn run_wavepacket(cfg: &ExperimentConfig, model: &BlochModel) -> Result<WavepacketRun> {
    evolve(model, &cfg.wavepacket, cfg.kgrid()?, &times(cfg)?).map_err(|e| e.at("evolve"))
}

/// Self-consistent peak momenta and analytic COMs per channel.
pub struct AnalyticTracks {
    pub kmax: Vec<Vec<f64>>,
    /// `branches[channel]` holds `(t, stable roots)` at every `stride`-th sample.
    pub branches: Vec<Vec<(f64, Vec<f64>)>>,
}

pub fn analytic_tracks(model: &BlochModel, run: &WavepacketRun, stride: usize) -> Result<AnalyticTracks> {
    let mut kmax = Vec::new();
    let mut branches = Vec::new();
    for b in 0..run.channels {
        if !run.is_active(b) {
            kmax.push(vec![f64::NAN; run.times.len()]);
            branches.push(Vec::new());
            continue;
        }
        kmax.push(kmax_trajectory(model, &run.bands, &run.spec, b, &run.times)?);
        let mut per = Vec::new();
        for &t in run.times.iter().step_by(stride.max(1)) {
            per.push((t, kmax_branches(model, &run.bands, &run.spec, b, t)?));
        }
        branches.push(per);
    }
    Ok(AnalyticTracks { kmax, branches })
}

fn channel(v: &[f64], b: usize) -> f64 {
    v.get(b).copied().unwrap_or(f64::NAN)
}

fn evolve_cmd(cfg: &ExperimentConfig, model: &BlochModel, out: &Path) -> Result<Outputs> {
    let mut o = Outputs::default();
    let run = run_wavepacket(cfg, model)?;
    let rows = (0..run.times.len()).map(|i| {
        let com = |b: usize| opt(run.com_numeric[i].get(b).copied().flatten());
        vec![
            num(run.times[i]),
            num(channel(&run.kmax_numeric[i], 0)),
            num(channel(&run.kmax_numeric[i], 1)),
            com(0),
            com(1),
            opt(run.com_total[i]),
            num(channel(&run.vg[i], 0)),
            num(channel(&run.vg[i], 1)),
        ]
    });
    write_records(
        o.file(out.join("trajectory.csv")),
        &["t", "kmax_plus", "kmax_minus", "com_plus", "com_minus", "com_total", "vg_plus", "vg_minus"],
        rows,
    )?;

    let stride = ((0.5 / cfg.grid.dt).round() as usize).max(1);
    let tracks = analytic_tracks(model, &run, stride).map_err(|e| e.at("kmax"))?;
    let rows = (0..run.times.len()).map(|i| {
        vec![
            num(run.times[i]),
            num(tracks.kmax.first().map_or(f64::NAN, |k| k[i])),
            num(tracks.kmax.get(1).map_or(f64::NAN, |k| k[i])),
            num(channel(&run.com_analytic[i], 0)),
            num(channel(&run.com_analytic[i], 1)),
        ]
    });
    write_records(
        o.file(out.join("analytic.csv")),
        &["t", "kmax_plus", "kmax_minus", "com_plus", "com_minus"],
        rows,
    )?;
    let mut rows = Vec::new();
    for (b, per) in tracks.branches.iter().enumerate() {
        for (t, roots) in per {
            for (j, k) in roots.iter().enumerate() {
                rows.push(vec![num(*t), if b == 0 { "plus" } else { "minus" }.to_string(), j.to_string(), num(*k)]);
            }
        }
    }
    write_records(o.file(out.join("kmax_branches.csv")), &["t", "channel", "branch", "k"], rows)?;

    let sep = channel_separation_check(&run);
    write_records(
        o.file(out.join("separation.csv")),
        &["t", "ratio"],
        sep.times.iter().zip(&sep.ratio).map(|(t, r)| vec![num(*t), num(*r)]),
    )?;
    o.summary.push(format!(
        "cross/dominant ratio below {:e} from t = {}",
        sep.threshold,
        opt(sep.settled_at)
    ));

    if cfg.analysis.heatmaps {
        let k: Vec<Vec<f64>> = (0..run.times.len()).map(|i| run.momentum_density(i)).collect();
        write_matrix(o.file(out.join("heatmap_k.csv")), &k)?;
        let x: Vec<Vec<f64>> = (0..run.times.len()).map(|i| run.real_density(i)).collect();
        write_matrix(o.file(out.join("heatmap_x.csv")), &x)?;
    }
    o.summary.extend(run.warnings.iter().map(|w| format!("warning: {w}")));
    Ok(o)
}

pub fn write_echo(path: &Path, s: &LoschmidtSeries) -> Result<()> {
    write_records(
        path,
        &["t", "echo", "rate"],
        (0..s.times.len()).map(|i| vec![num(s.times[i]), num(s.echo[i]), num(s.rate[i])]),
    )
}

pub fn write_critical(path: &Path, c: &CriticalPointSet) -> Result<()> {
    write_records(
        path,
        &["index", "t_c", "interval", "predicted_t_c"],
        c.critical_times.iter().enumerate().map(|(i, t)| {
            vec![
                i.to_string(),
                num(*t),
                if i == 0 { "na".into() } else { num(c.intervals[i - 1]) },
                opt(c.predicted_times.get(i).copied()),
            ]
        }),
    )
}

fn dqpt_cmd(cfg: &ExperimentConfig, model: &BlochModel, out: &Path) -> Result<Outputs> {
    let mut o = Outputs::default();
    let run = run_wavepacket(cfg, model)?;
    let series = loschmidt(&run);
    write_echo(o.file(out.join("loschmidt.csv")), &series)?;
    let mut crit = detect_critical_points(&series, cfg.analysis.prominence).map_err(|e| e.at("dqpt"))?;
    crit.attach_run(&run);
    write_critical(o.file(out.join("critical.csv")), &crit)?;
    write_records(
        o.file(out.join("revivals.csv")),
        &["index", "t"],
        crit.revival_times.iter().enumerate().map(|(i, t)| vec![i.to_string(), num(*t)]),
    )?;
    if crit.is_empty() {
        return Err(Error::NoPeaks(cfg.analysis.prominence).at("dqpt"));
    }
    o.summary.push(format!("{} critical points, {} revivals", crit.critical_times.len(), crit.revival_times.len()));
    Ok(o)
}

/// Scaling study over the configured sizes; site centres scale with `N`.
pub fn scaling_for(cfg: &ExperimentConfig, model: &BlochModel) -> Result<ScalingReport> {
    let sizes = &cfg.analysis.scaling_sizes;
    if sizes.is_empty() {
        return Err(Error::Config("analysis.scaling_sizes is empty".into()));
    }
    let base = cfg.grid.n as f64;
    let template = cfg.wavepacket.clone();
    scaling_study(
        model,
        |n| {
            let f = n as f64 / base;
            let mut s = template.clone();
            s.n0_plus = (s.n0_plus * f).round();
            s.n0_minus = (s.n0_minus * f).round();
            s
        },
        sizes,
        cfg.grid.t_max,
        cfg.grid.dt,
        cfg.analysis.prominence,
    )
}

fn scaling_cmd(cfg: &ExperimentConfig, model: &BlochModel, out: &Path) -> Result<Outputs> {
    let mut o = Outputs::default();
    let rep = scaling_for(cfg, model).map_err(|e| e.at("scaling"))?;
    write_records(
        o.file(out.join("scaling.csv")),
        &["n", "critical_count", "early_interval", "first_t_c"],
        rep.entries.iter().map(|e| {
            vec![
                e.sites.to_string(),
                e.critical.critical_times.len().to_string(),
                opt(e.early_interval),
                opt(e.critical.critical_times.first().copied()),
            ]
        }),
    )?;
    write_records(o.file(out.join("scaling_fit.csv")), &["slope", "residual"], [vec![opt(rep.slope), opt(rep.residual)]])?;
    o.summary.push(match (rep.slope, rep.residual) {
        (Some(s), Some(r)) => format!("interval/N slope {s:.4}, residual {r:.3}"),
        _ => "fit not applicable".to_string(),
    });
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::preset;

    fn tmp(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("nhskin-exp-{name}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&d);
        d
    }

    #[test]
    fn command_names() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert!("plot".parse::<Command>().is_err());
    }

    #[test]
    fn ordinary_scan_has_three_values() {
        let m = crate::model::build_ordinary_model();
        let map = winding_map(&m, [-3.0, 3.0], [-3.0, 3.0], 0.05);
        let values: BTreeSet<i64> = map.iter().filter_map(|(_, w)| *w).collect();
        assert_eq!(values, BTreeSet::from([-1, 0, 1]));
    }

    #[test]
    fn evolve_outputs_short() {
        let mut cfg = preset("fig1-case1").unwrap();
        cfg.grid.t_max = 2.0;
        cfg.grid.dt = 0.5;
        let d = tmp("evolve");
        let o = run(&cfg, Command::Evolve, &d).unwrap();
        for f in ["trajectory.csv", "heatmap_k.csv", "heatmap_x.csv", "analytic.csv"] {
            assert!(o.files.iter().any(|p| p.ends_with(f)), "{f}");
        }
        let (h, rows) = crate::io::read_records(&d.join("trajectory.csv")).unwrap();
        assert_eq!(h.len(), 8);
        assert_eq!(rows.len(), 5);
        std::fs::remove_dir_all(&d).unwrap();
    }

    #[test]
    fn stage_named_on_failure() {
        let mut cfg = preset("fig1-case1").unwrap();
        cfg.analysis.scaling_sizes.clear();
        let d = tmp("stage");
        let err = run(&cfg, Command::Scaling, &d).unwrap_err();
        assert!(err.to_string().starts_with("scaling:"), "{err}");
        let _ = std::fs::remove_dir_all(&d);
    }
}
