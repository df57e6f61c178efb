use std::fmt::Write;

use stnbt_core::executor::ActionRecord;
use stnbt_core::time::SecsDisplay;

const ROW: i64 = 22;
const LABEL_W: i64 = 260;
const PLOT_W: i64 = 640;
const TOP: i64 = 30;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Gantt chart: one row per action with the executed interval as a filled
/// bar and the planned interval as an outline.
pub fn gantt_svg(actions: &[ActionRecord]) -> String {
    let horizon = actions
        .iter()
        .flat_map(|a| [a.end.unwrap_or(a.start).0, (a.planned_start + a.planned_duration).0])
        .max()
        .unwrap_or(0)
        .max(1);
    let x = |ms: i64| LABEL_W + ms.max(0) * PLOT_W / horizon;
    let height = TOP + ROW * actions.len() as i64 + 30;
    let width = LABEL_W + PLOT_W + 20;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-family=\"monospace\" font-size=\"12\">"
    );
    let _ = writeln!(s, "  <text x=\"4\" y=\"16\">action</text>");
    let ticks = 10;
    for i in 0..=ticks {
        let ms = horizon * i / ticks;
        let _ = writeln!(
            s,
            "  <line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#ddd\"/><text x=\"{0}\" y=\"16\" text-anchor=\"middle\">{3}</text>",
            x(ms),
            TOP - 6,
            height - 24,
            SecsDisplay(stnbt_core::Millis(ms))
        );
    }
    for (i, a) in actions.iter().enumerate() {
        let y = TOP + ROW * i as i64;
        let _ = writeln!(s, "  <text x=\"4\" y=\"{}\">{}</text>", y + 14, esc(&a.signature));
        let (p0, p1) = (x(a.planned_start.0), x((a.planned_start + a.planned_duration).0));
        let _ = writeln!(
            s,
            "  <rect x=\"{p0}\" y=\"{}\" width=\"{}\" height=\"16\" fill=\"none\" stroke=\"#888\" stroke-dasharray=\"3,2\"/>",
            y + 1,
            (p1 - p0).max(1)
        );
        let end = a.end.unwrap_or(a.start);
        let (e0, e1) = (x(a.start.0), x(end.0));
        let _ = writeln!(
            s,
            "  <rect x=\"{e0}\" y=\"{}\" width=\"{}\" height=\"12\" fill=\"{}\"><title>{} {}-{}</title></rect>",
            y + 3,
            (e1 - e0).max(1),
            if a.end.is_some() { "#4a7fb5" } else { "#c0504d" },
            esc(&a.signature),
            SecsDisplay(a.start),
            SecsDisplay(end)
        );
    }
    s.push_str("</svg>\n");
    s
}
