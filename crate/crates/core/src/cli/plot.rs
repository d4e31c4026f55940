//! Static SVG line charts, one polyline per algorithm.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::results::{fmt_sig, ResultRow, SnapshotRow};
use crate::error::{Error, Result};
use crate::samplers::SamplerKind;
use crate::simbench::{GraphType, RunStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    AucByP,
    MamseByP,
    AucOverTime,
    CostByP,
    AucByN,
    ByGraphType,
}

impl PlotKind {
    pub const ALL: [PlotKind; 6] =
        [Self::AucByP, Self::MamseByP, Self::AucOverTime, Self::CostByP, Self::AucByN, Self::ByGraphType];

    pub fn name(&self) -> &'static str {
        match self {
            Self::AucByP => "auc-by-p",
            Self::MamseByP => "mamse-by-p",
            Self::AucOverTime => "auc-over-time",
            Self::CostByP => "cost-by-p",
            Self::AucByN => "auc-by-n",
            Self::ByGraphType => "by-graph-type",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s.trim())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Category names when the x axis is not numeric; points then use the
    /// category index as x.
    pub categories: Option<Vec<String>>,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

fn color(kind: SamplerKind) -> &'static str {
    PALETTE[SamplerKind::ALL.iter().position(|&k| k == kind).expect("listed")]
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len();
    if m % 2 == 1 {
        xs[m / 2]
    } else {
        0.5 * (xs[m / 2 - 1] + xs[m / 2])
    }
}

fn series_from(groups: BTreeMap<(SamplerKind, u64), Vec<f64>>, reduce: fn(Vec<f64>) -> f64, x_of: impl Fn(u64) -> f64) -> Vec<Series> {
    let mut by_alg: BTreeMap<SamplerKind, Vec<(f64, f64)>> = BTreeMap::new();
    for ((alg, x), ys) in groups {
        by_alg.entry(alg).or_default().push((x_of(x), reduce(ys)));
    }
    by_alg
        .into_iter()
        .map(|(alg, mut points)| {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series { name: alg.name().into(), color: color(alg), points }
        })
        .collect()
}

/// Chart of a results-file kind over the `ok` rows.
pub fn chart_from_results(rows: &[ResultRow], kind: PlotKind, log_y: bool) -> Result<Chart> {
    let ok: Vec<&ResultRow> = rows.iter().filter(|r| r.status == RunStatus::Ok).collect();
    if ok.is_empty() {
        return Err(Error::Empty("no successful runs to plot".into()));
    }
    let (x_label, y_label, title) = match kind {
        PlotKind::AucByP => ("p (variables)", "mean AUC", "AUC by dimension"),
        PlotKind::MamseByP => ("p (variables)", "mean MAMSE", "MAMSE by dimension"),
        PlotKind::CostByP => ("p (variables)", "median cost T (seconds)", "Computational cost by dimension"),
        PlotKind::AucByN => ("n (observations)", "mean AUC", "AUC by sample size"),
        PlotKind::ByGraphType => ("graph type", "mean AUC", "AUC by graph type"),
        PlotKind::AucOverTime => {
            return Err(Error::InvalidParameter("auc-over-time needs a snapshot log (run --snapshots)".into()))
        }
    };
    let mut groups: BTreeMap<(SamplerKind, u64), Vec<f64>> = BTreeMap::new();
    let types: Vec<GraphType> = GraphType::ALL.into_iter().filter(|t| ok.iter().any(|r| r.graph_type == *t)).collect();
    for r in &ok {
        let x = match kind {
            PlotKind::AucByN => r.n as u64,
            PlotKind::ByGraphType => types.iter().position(|&t| t == r.graph_type).expect("present") as u64,
            _ => r.p as u64,
        };
        let y = match kind {
            PlotKind::MamseByP => r.mamse,
            PlotKind::CostByP => r.cost_seconds,
            _ => r.auc,
        };
        groups.entry((r.algorithm, x)).or_default().push(y);
    }
    let reduce: fn(Vec<f64>) -> f64 = if kind == PlotKind::CostByP { median } else { |v| mean(&v) };
    Ok(Chart {
        title: title.into(),
        x_label: x_label.into(),
        y_label: y_label.into(),
        categories: (kind == PlotKind::ByGraphType).then(|| types.iter().map(|t| t.name().to_string()).collect()),
        log_y,
        series: series_from(groups, reduce, |x| x as f64),
    })
}

/// Running AUC against wall-clock time. Runs of one algorithm are averaged
/// snapshot by snapshot (time and AUC alike).
pub fn chart_from_snapshots(rows: &[SnapshotRow], log_y: bool) -> Result<Chart> {
    if rows.is_empty() {
        return Err(Error::Empty("snapshot log has no rows".into()));
    }
    let mut runs: BTreeMap<(SamplerKind, &str), Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        runs.entry((r.algorithm, &r.run_id)).or_default().push((r.seconds, r.auc));
    }
    let mut by_index: BTreeMap<(SamplerKind, usize), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for ((alg, _), pts) in runs {
        for (k, (t, a)) in pts.into_iter().enumerate() {
            let cell = by_index.entry((alg, k)).or_default();
            cell.0.push(t);
            cell.1.push(a);
        }
    }
    let mut by_alg: BTreeMap<SamplerKind, Vec<(f64, f64)>> = BTreeMap::new();
    for ((alg, _), (ts, aucs)) in by_index {
        by_alg.entry(alg).or_default().push((mean(&ts), mean(&aucs)));
    }
    Ok(Chart {
        title: "AUC over time".into(),
        x_label: "time (seconds)".into(),
        y_label: "AUC".into(),
        categories: None,
        log_y,
        series: by_alg
            .into_iter()
            .map(|(alg, points)| Series { name: alg.name().into(), color: color(alg), points })
            .collect(),
    })
}

struct Axis {
    lo: f64,
    hi: f64,
    ticks: Vec<(f64, String)>,
    log: bool,
}

impl Axis {
    fn linear(min: f64, max: f64) -> Self {
        let (min, max) = if max > min { (min, max) } else { (min - 0.5 * min.abs().max(1.0), max + 0.5 * max.abs().max(1.0)) };
        let raw = (max - min) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
        let first = (min / step).floor() as i64;
        let last = (max / step).ceil() as i64;
        let ticks = (first..=last).map(|k| (k as f64 * step, fmt_sig(k as f64 * step))).collect();
        Self { lo: first as f64 * step, hi: last as f64 * step, ticks, log: false }
    }

    fn logarithmic(min: f64, max: f64) -> Self {
        let first = min.log10().floor() as i32;
        let last = (max.log10().ceil() as i32).max(first + 1);
        let ticks = (first..=last).map(|k| (10f64.powi(k), fmt_sig(10f64.powi(k)))).collect();
        Self { lo: 10f64.powi(first), hi: 10f64.powi(last), ticks, log: true }
    }

    fn categorical(names: &[String]) -> Self {
        let ticks = names.iter().enumerate().map(|(k, n)| (k as f64, n.clone())).collect();
        Self { lo: -0.5, hi: names.len() as f64 - 0.5, ticks, log: false }
    }

    /// Fraction of the way from `lo` to `hi`.
    fn frac(&self, v: f64) -> f64 {
        if self.log {
            (v.log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 490.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 360.0;

pub fn render_svg(chart: &Chart) -> Result<String> {
    let pts: Vec<(f64, f64)> = chart.series.iter().flat_map(|s| s.points.iter().copied()).collect();
    if pts.is_empty() {
        return Err(Error::Empty("nothing to plot".into()));
    }
    if pts.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidParameter("plot data contains non-finite values".into()));
    }
    let (xmin, xmax) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (ymin, ymax) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let x_axis = match &chart.categories {
        Some(names) => Axis::categorical(names),
        None => Axis::linear(xmin, xmax),
    };
    let y_axis = if chart.log_y {
        if ymin <= 0.0 {
            return Err(Error::InvalidParameter("a logarithmic y axis needs positive values".into()));
        }
        Axis::logarithmic(ymin, ymax)
    } else {
        Axis::linear(ymin, ymax)
    };
    let sx = |v: f64| LEFT + x_axis.frac(v) * (RIGHT - LEFT);
    let sy = |v: f64| BOTTOM - y_axis.frac(v) * (BOTTOM - TOP);

    let mut s = String::new();
    let w = &mut s;
    writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(w, r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#, (LEFT + RIGHT) / 2.0, escape(&chart.title)).unwrap();
    writeln!(w, r#"<g stroke="black" stroke-width="1"><line x1="{LEFT}" y1="{BOTTOM}" x2="{RIGHT}" y2="{BOTTOM}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{BOTTOM}"/></g>"#).unwrap();
    for (v, label) in &x_axis.ticks {
        let x = sx(*v);
        writeln!(w, r#"<line x1="{x:.2}" y1="{BOTTOM}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, BOTTOM + 5.0).unwrap();
        writeln!(w, r#"<text class="x-tick" x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, BOTTOM + 19.0, escape(label)).unwrap();
    }
    for (v, label) in &y_axis.ticks {
        let y = sy(*v);
        writeln!(w, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{RIGHT}" y2="{y:.2}" stroke="#dddddd"/>"##).unwrap();
        writeln!(w, r#"<text class="y-tick" x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, escape(label)).unwrap();
    }
    writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (LEFT + RIGHT) / 2.0, HEIGHT - 20.0, escape(&chart.x_label)).unwrap();
    writeln!(w, r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#, (TOP + BOTTOM) / 2.0, (TOP + BOTTOM) / 2.0, escape(&chart.y_label)).unwrap();
    for (k, series) in chart.series.iter().enumerate() {
        let coords: Vec<String> = series.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        writeln!(w, r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"><title>{}</title></polyline>"#, series.color, coords.join(" "), escape(&series.name)).unwrap();
        for &(x, y) in &series.points {
            writeln!(w, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#, sx(x), sy(y), series.color).unwrap();
        }
        let ly = TOP + 10.0 + 20.0 * k as f64;
        writeln!(w, r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"/>"#, RIGHT + 20.0, RIGHT + 45.0, series.color).unwrap();
        writeln!(w, r#"<text class="legend" x="{:.2}" y="{:.2}">{}</text>"#, RIGHT + 52.0, ly + 4.0, escape(&series.name)).unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(alg: SamplerKind, p: usize, auc: f64, cost: f64) -> ResultRow {
        ResultRow {
            run_id: format!("{alg}-{p}"),
            algorithm: alg,
            graph_type: GraphType::Cluster,
            p,
            n: 10 * p,
            replication: 0,
            master_seed: 1,
            iterations: 1,
            auc,
            mamse: 0.1,
            mse: 0.1,
            cost_seconds: cost,
            wall_seconds: cost,
            status: RunStatus::Ok,
        }
    }

    fn fixture() -> Vec<ResultRow> {
        vec![
            row(SamplerKind::Plbd, 10, 0.9, 0.02),
            row(SamplerKind::Plbd, 50, 0.95, 0.5),
            row(SamplerKind::SsO, 10, 0.88, 0.1),
            row(SamplerKind::SsO, 50, 0.93, 30.0),
        ]
    }

    fn count(svg: &str, pat: &str) -> usize {
        svg.matches(pat).count()
    }

    #[test]
    fn two_algorithms_two_polylines() {
        let chart = chart_from_results(&fixture(), PlotKind::AucByP, false).unwrap();
        let svg = render_svg(&chart).unwrap();
        assert_eq!(count(&svg, "<polyline"), 2);
        assert!(svg.contains(">ss-o</text>") && svg.contains(">g-plbd</text>"));
        assert_eq!(svg, render_svg(&chart_from_results(&fixture(), PlotKind::AucByP, false).unwrap()).unwrap());
    }

    #[test]
    fn log_ticks_are_powers_of_ten() {
        let chart = chart_from_results(&fixture(), PlotKind::CostByP, true).unwrap();
        let svg = render_svg(&chart).unwrap();
        let labels: Vec<&str> = svg
            .lines()
            .filter(|l| l.contains("class=\"y-tick\""))
            .map(|l| l.split('>').nth(1).unwrap().trim_end_matches("</text"))
            .collect();
        assert_eq!(labels, vec!["0.01", "0.1", "1", "10", "100"]);
        let mut bad = fixture();
        bad[0].cost_seconds = 0.0;
        assert!(render_svg(&chart_from_results(&bad, PlotKind::CostByP, true).unwrap()).is_err());
    }

    #[test]
    fn graph_type_categories() {
        let mut rows = fixture();
        rows[1].graph_type = GraphType::Random;
        let chart = chart_from_results(&rows, PlotKind::ByGraphType, false).unwrap();
        assert_eq!(chart.categories.as_deref().unwrap(), ["random".to_string(), "cluster".to_string()]);
        assert!(chart_from_results(&rows, PlotKind::AucOverTime, false).is_err());
    }

    #[test]
    fn snapshots_average_by_index() {
        let mk = |id: &str, t: f64, a: f64| SnapshotRow {
            run_id: id.into(),
            algorithm: SamplerKind::Rj,
            graph_type: GraphType::Random,
            p: 5,
            n: 5,
            replication: 0,
            seconds: t,
            auc: a,
        };
        let rows = [mk("a", 1.0, 0.5), mk("a", 2.0, 0.7), mk("b", 3.0, 0.7), mk("b", 4.0, 0.9)];
        let chart = chart_from_snapshots(&rows, false).unwrap();
        assert_eq!(chart.series[0].points, vec![(2.0, 0.6), (3.0, 0.8)]);
    }
}
