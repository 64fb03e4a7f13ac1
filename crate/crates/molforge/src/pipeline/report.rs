//! Report emission: top-k tables per method and objective, druglikeness
//! versus potency scatter data with a standalone SVG, and helper rows.

use crate::scoring::ScoreReport;

/// One scored pool tagged with the generator that produced it.
pub struct MethodPool {
    pub method: String,
    /// (canonical smiles, report) rows.
    pub rows: Vec<(String, ScoreReport)>,
}

#[derive(Debug, Clone)]
pub struct RankedRow {
    pub method: String,
    pub score_fn: String,
    pub rank: usize,
    pub smiles: String,
    pub total: f64,
    pub pic50: Option<f64>,
    pub qed: Option<f64>,
    pub logp: Option<f64>,
    pub sa: Option<f64>,
    pub cycle: Option<f64>,
}

/// Top-k rows per method, sorted by total score descending.
pub fn top_k(pools: &[MethodPool], score_fn: &str, k: usize) -> Vec<RankedRow> {
    let mut out = Vec::new();
    for pool in pools {
        let mut rows: Vec<&(String, ScoreReport)> = pool.rows.iter().collect();
        rows.sort_by(|a, b| {
            b.1.total.partial_cmp(&a.1.total).unwrap_or(std::cmp::Ordering::Equal)
        });
        for (rank, (smiles, report)) in rows.into_iter().take(k).enumerate() {
            out.push(RankedRow {
                method: pool.method.clone(),
                score_fn: score_fn.to_string(),
                rank: rank + 1,
                smiles: smiles.clone(),
                total: report.total,
                pic50: report.component("pic50"),
                qed: report.component("qed"),
                logp: report.component("logp"),
                sa: report.component("sa"),
                cycle: report.component("cycle"),
            });
        }
    }
    out
}

pub fn top_k_csv(rows: &[RankedRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "method", "score_fn", "rank", "canonical_smiles", "total", "pic50", "qed", "logp", "sa",
        "cycle",
    ])
    .expect("in-memory");
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.score_fn.clone(),
            r.rank.to_string(),
            r.smiles.clone(),
            format!("{:.4}", r.total),
            fmt(r.pic50),
            fmt(r.qed),
            fmt(r.logp),
            fmt(r.sa),
            fmt(r.cycle),
        ])
        .expect("in-memory");
    }
    String::from_utf8(w.into_inner().expect("flushed")).expect("utf8")
}

/// Scatter rows (method, smiles, pic50, qed) for every unique molecule.
pub fn pareto_csv(pools: &[MethodPool]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "canonical_smiles", "pic50", "qed"]).expect("in-memory");
    for pool in pools {
        for (smiles, report) in &pool.rows {
            w.write_record([
                pool.method.clone(),
                smiles.clone(),
                report.component("pic50").map(|v| format!("{v:.4}")).unwrap_or_default(),
                report.component("qed").map(|v| format!("{v:.4}")).unwrap_or_default(),
            ])
            .expect("in-memory");
        }
    }
    String::from_utf8(w.into_inner().expect("flushed")).expect("utf8")
}

const SVG_COLORS: [&str; 4] = ["#2a7fff", "#d6373c", "#31a354", "#a05cc2"];

/// Standalone druglikeness-versus-potency scatter plot.
pub fn pareto_svg(pools: &[MethodPool]) -> String {
    let (width, height, margin) = (640.0, 480.0, 56.0);
    let points: Vec<(usize, f64, f64)> = pools
        .iter()
        .enumerate()
        .flat_map(|(pi, pool)| {
            pool.rows.iter().filter_map(move |(_, report)| {
                let p = report.component("pic50")?;
                let q = report.component("qed")?;
                Some((pi, p, q))
            })
        })
        .collect();
    let (mut x_lo, mut x_hi) = (0.0f64, 11.0f64);
    let (y_lo, y_hi) = (0.0f64, 1.0f64);
    for &(_, p, _) in &points {
        x_lo = x_lo.min(p);
        x_hi = x_hi.max(p);
    }
    let sx = |v: f64| margin + (v - x_lo) / (x_hi - x_lo).max(1e-9) * (width - 2.0 * margin);
    let sy = |v: f64| height - margin - (v - y_lo) / (y_hi - y_lo) * (height - 2.0 * margin);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = margin,
        b = height - margin,
        r = width - margin
    ));
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = margin,
        b = height - margin
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\">predicted potency</text>\n",
        width / 2.0 - 50.0,
        height - 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{}\" font-size=\"13\" transform=\"rotate(-90 14 {})\">druglikeness</text>\n",
        height / 2.0,
        height / 2.0
    ));
    for (pi, p, q) in &points {
        svg.push_str(&format!(
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{}\" fill-opacity=\"0.7\"/>\n",
            sx(*p),
            sy(*q),
            SVG_COLORS[pi % SVG_COLORS.len()]
        ));
    }
    for (pi, pool) in pools.iter().enumerate() {
        let y = margin + 16.0 * pi as f64;
        svg.push_str(&format!(
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"4\" fill=\"{}\"/><text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{}</text>\n",
            width - margin - 110.0,
            y,
            SVG_COLORS[pi % SVG_COLORS.len()],
            width - margin - 100.0,
            y + 4.0,
            xml_escape(&pool.method)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
