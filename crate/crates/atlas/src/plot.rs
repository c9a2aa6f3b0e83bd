//! Two-panel SVG rendering of a trajectory: (A) the path through the two
//! latent dimensions with pivots marked, (B) the card timeline.

use std::fmt::Write;

use field_atlas_core::etm::EpistemicTrajectory;
use field_atlas_core::model::CardKind;

use crate::error::{AtlasError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MarkerStyle {
    pub fill: String,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub width: f64,
    pub height: f64,
    /// Fraction of the height given to panel A; panel B gets the rest.
    pub split: f64,
    pub capture: MarkerStyle,
    pub response: MarkerStyle,
    pub provocation: MarkerStyle,
    pub pivot: MarkerStyle,
    pub path_stroke: String,
}

impl Default for PlotSpec {
    fn default() -> Self {
        let m = |fill: &str, radius: f64| MarkerStyle {
            fill: fill.to_string(),
            radius,
        };
        PlotSpec {
            width: 960.0,
            height: 640.0,
            split: 0.7,
            capture: m("#2b6cb0", 5.0),
            response: m("#2f855a", 5.0),
            provocation: m("#c05621", 7.0),
            pivot: m("#c53030", 11.0),
            path_stroke: "#4a5568".to_string(),
        }
    }
}

const PAD: f64 = 48.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Linear map from a data range to pixels. The range is padded by 10% on
/// each side; a degenerate range is centered.
struct Axis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, px_lo: f64, px_hi: f64) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 0.0);
        }
        let span = hi - lo;
        let margin = if span > 0.0 { span * 0.1 } else { 1.0 };
        Axis {
            lo: lo - margin,
            hi: hi + margin,
            px_lo,
            px_hi,
        }
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }
}

pub fn render_svg(traj: &EpistemicTrajectory, spec: &PlotSpec) -> Result<String> {
    if traj.points.is_empty() {
        return Err(AtlasError::Core(field_atlas_core::Error::EmptyTrajectory));
    }
    let (w, h) = (spec.width, spec.height);
    let a_bottom = h * spec.split;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w:.0}" height="{h:.0}" fill="white"/>"#);

    // Panel A
    let x_axis = Axis::fit(traj.points.iter().map(|p| p.xy[0]), PAD, w - PAD);
    let y_axis = Axis::fit(traj.points.iter().map(|p| p.xy[1]), a_bottom - PAD, PAD);
    let _ = writeln!(out, r#"<g id="panel-a">"#);
    let _ = writeln!(
        out,
        r#"<text x="{PAD:.0}" y="20" font-weight="bold">(A) Epistemic trajectory space: {}</text>"#,
        esc(&traj.session_id)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{PAD:.0}" y="{PAD:.0}" width="{:.2}" height="{:.2}" fill="none" stroke="#cbd5e0"/>"##,
        w - 2.0 * PAD,
        a_bottom - 2.0 * PAD
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">latent dim 1</text>"#,
        w / 2.0,
        a_bottom - PAD + 18.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">latent dim 2</text>"#,
        a_bottom / 2.0,
        a_bottom / 2.0
    );
    let pts: Vec<(f64, f64)> = traj
        .points
        .iter()
        .map(|p| (x_axis.map(p.xy[0]), y_axis.map(p.xy[1])))
        .collect();
    if pts.len() > 1 {
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            out,
            r#"<polyline class="path" points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            path.join(" "),
            esc(&spec.path_stroke)
        );
    }
    for pivot in &traj.pivots {
        let (x, y) = pts[pivot.index];
        let label = match &pivot.attributed_provocation {
            Some(id) => format!("pivot after {id}"),
            None => "pivot".to_string(),
        };
        let _ = writeln!(
            out,
            r#"<circle class="pivot-marker" cx="{x:.2}" cy="{y:.2}" r="{:.1}" fill="none" stroke="{}" stroke-width="2.5"><title>{}</title></circle>"#,
            spec.pivot.radius,
            esc(&spec.pivot.fill),
            esc(&label)
        );
        let _ = writeln!(
            out,
            r#"<text class="pivot-label" x="{:.2}" y="{:.2}" fill="{}">{}</text>"#,
            x + spec.pivot.radius + 4.0,
            y - spec.pivot.radius,
            esc(&spec.pivot.fill),
            esc(&label)
        );
    }
    for (i, ((x, y), p)) in pts.iter().zip(&traj.points).enumerate() {
        let style = match traj.timeline[p.timeline_index].kind {
            CardKind::Response => &spec.response,
            _ => &spec.capture,
        };
        let _ = writeln!(
            out,
            r#"<circle class="point" cx="{x:.2}" cy="{y:.2}" r="{:.1}" fill="{}"><title>{} {} v={:.4}</title></circle>"#,
            style.radius,
            esc(&style.fill),
            esc(&p.card_id),
            p.t,
            p.v
        );
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" fill="#4a5568" font-size="10">{}</text>"##,
            x + 6.0,
            y + 12.0,
            i + 1
        );
    }
    let _ = writeln!(out, "</g>");

    // Panel B
    let line_y = a_bottom + (h - a_bottom) / 2.0;
    let start = traj.timeline.first().map(|e| e.ts).expect("points imply timeline");
    let span = traj
        .timeline
        .last()
        .map(|e| e.ts.seconds_since(&start))
        .unwrap_or(0.0);
    let n = traj.timeline.len();
    let tx = |i: usize, secs: f64| -> f64 {
        let frac = if span > 0.0 {
            secs / span
        } else if n > 1 {
            i as f64 / (n - 1) as f64
        } else {
            0.5
        };
        PAD + frac * (w - 2.0 * PAD)
    };
    let _ = writeln!(out, r#"<g id="panel-b">"#);
    let _ = writeln!(
        out,
        r#"<text x="{PAD:.0}" y="{:.2}" font-weight="bold">(B) Data Card timeline</text>"#,
        a_bottom + 16.0
    );
    let _ = writeln!(
        out,
        r##"<line x1="{PAD:.0}" y1="{line_y:.2}" x2="{:.2}" y2="{line_y:.2}" stroke="#a0aec0" stroke-width="2"/>"##,
        w - PAD
    );
    let legend = [
        ("capture", &spec.capture),
        ("response", &spec.response),
        ("provocation", &spec.provocation),
        ("pivot shift", &spec.pivot),
    ];
    for (k, (label, style)) in legend.iter().enumerate() {
        let x = w - PAD - 420.0 + k as f64 * 105.0;
        let y = a_bottom + 12.0;
        let _ = writeln!(
            out,
            r#"<rect class="legend" x="{x:.2}" y="{y:.2}" width="10" height="10" fill="{}"/><text x="{:.2}" y="{:.2}" font-size="11">{label}</text>"#,
            esc(&style.fill),
            x + 14.0,
            y + 9.0
        );
    }
    for pivot in &traj.pivots {
        let ti = traj.points[pivot.index + 1].timeline_index;
        let x = tx(ti, traj.timeline[ti].ts.seconds_since(&start));
        let _ = writeln!(
            out,
            r#"<line class="pivot-shift" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{}" stroke-dasharray="4 3"/>"#,
            line_y - 22.0,
            line_y + 22.0,
            esc(&spec.pivot.fill)
        );
    }
    for (i, e) in traj.timeline.iter().enumerate() {
        let x = tx(i, e.ts.seconds_since(&start));
        match e.kind {
            CardKind::Provocation => {
                let r = spec.provocation.radius;
                let _ = writeln!(
                    out,
                    r#"<path class="card-provocation" d="M{:.2},{:.2} L{:.2},{:.2} L{:.2},{:.2} Z" fill="{}"><title>{} {} provocation</title></path>"#,
                    x,
                    line_y - r,
                    x + r,
                    line_y + r,
                    x - r,
                    line_y + r,
                    esc(&spec.provocation.fill),
                    esc(&e.card_id),
                    e.ts
                );
            }
            kind => {
                let style = if kind == CardKind::Response { &spec.response } else { &spec.capture };
                let _ = writeln!(
                    out,
                    r#"<circle class="card-{kind}" cx="{x:.2}" cy="{line_y:.2}" r="{:.1}" fill="{}"><title>{} {} {kind}</title></circle>"#,
                    style.radius,
                    esc(&style.fill),
                    esc(&e.card_id),
                    e.ts
                );
            }
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{PAD:.0}" y="{:.2}" font-size="10">{}</text>"#,
        line_y + 34.0,
        start
    );
    if let Some(last) = traj.timeline.last() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
            w - PAD,
            line_y + 34.0,
            last.ts
        );
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use field_atlas_core::etm::{build_trajectory, EtmParams};
    use field_atlas_core::fixture;
    use field_atlas_core::model::{CardInput, Session};
    use field_atlas_core::time::Timestamp;

    #[test]
    fn fixture_plot_marks_pivot_and_provocation() {
        let traj = build_trajectory(&fixture::maya_met_session(), &EtmParams::default()).unwrap();
        let svg = render_svg(&traj, &PlotSpec::default()).unwrap();
        assert_eq!(svg.matches(r#"class="pivot-marker""#).count(), 1);
        assert_eq!(svg.matches(r#"class="card-provocation""#).count(), 1);
        assert_eq!(svg.matches(r#"class="point""#).count(), traj.points.len());
        assert!(svg.contains("latent dim 1") && svg.contains("latent dim 2"));
        assert!(svg.contains(fixture::MET_PROVOCATION_CARD));
        assert_eq!(svg, render_svg(&traj, &PlotSpec::default()).unwrap());
    }

    #[test]
    fn single_point_has_no_polyline() {
        let mut s = Session::create("one", "m", "t", None, 16).unwrap();
        s.append_card(CardInput {
            ts: Timestamp::parse("2025-01-01T00:00:00Z").unwrap(),
            geo: fixture::met_gallery_760(),
            photo_ref: String::new(),
            voice_text: "light".into(),
            kind: CardKind::Capture,
        })
        .unwrap();
        let traj = build_trajectory(&s, &EtmParams::default()).unwrap();
        let svg = render_svg(&traj, &PlotSpec::default()).unwrap();
        assert_eq!(svg.matches(r#"class="point""#).count(), 1);
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn empty_trajectory_errors() {
        let traj = EpistemicTrajectory {
            session_id: "x".into(),
            points: vec![],
            pivots: vec![],
            provocation_indices: vec![],
            timeline: vec![],
        };
        assert!(render_svg(&traj, &PlotSpec::default()).is_err());
    }

    #[test]
    fn escapes_markup() {
        assert_eq!(esc("<a & \"b\">"), "&lt;a &amp; &quot;b&quot;&gt;");
    }
}
