//! Top-down SVG snapshots of a rollout: lane corridors, centerlines and
//! vehicle footprints.

use crate::engine::Snapshot;
use crate::geom::Vec2;
use crate::scenario::Scenario;

const MARGIN: f64 = 10.0;
const SCALE: f64 = 4.0; // px per meter

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Render one snapshot. Deterministic output: fixed float formatting and
/// map iteration order.
pub fn render_snapshot(scenario: &Scenario, snap: &Snapshot) -> String {
    // Bounds from the map plus the agents.
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut grow = |p: Vec2| {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    };
    for lane in scenario.lane_graph.lanes() {
        for p in lane.centerline.points() {
            grow(*p);
        }
    }
    for a in std::iter::once(&snap.ego).chain(snap.agents.iter()) {
        grow(a.pose.position());
    }
    lo = lo - Vec2::new(MARGIN, MARGIN);
    hi = hi + Vec2::new(MARGIN, MARGIN);
    let w = (hi.x - lo.x) * SCALE;
    let h = (hi.y - lo.y) * SCALE;
    // SVG y grows downward; flip.
    let tx = |p: Vec2| -> (f64, f64) { ((p.x - lo.x) * SCALE, (hi.y - p.y) * SCALE) };
    let poly_path = |pts: &[Vec2]| -> String {
        pts.iter()
            .enumerate()
            .map(|(i, p)| {
                let (x, y) = tx(*p);
                format!("{}{},{}", if i == 0 { "M" } else { "L" }, fmt(x), fmt(y))
            })
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        fmt(w), fmt(h), fmt(w), fmt(h)
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#fafafa\"/>\n");
    for (_, poly) in scenario.lane_graph.drivable_polygons() {
        out.push_str(&format!(
            "<path d=\"{} Z\" fill=\"#e8e8e8\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n",
            poly_path(poly)
        ));
    }
    for lane in scenario.lane_graph.lanes() {
        out.push_str(&format!(
            "<path d=\"{}\" fill=\"none\" stroke=\"#b0b0b0\" stroke-width=\"1\" stroke-dasharray=\"6,6\"/>\n",
            poly_path(lane.centerline.points())
        ));
    }
    for a in snap.agents.iter() {
        out.push_str(&format!(
            "<path d=\"{} Z\" fill=\"#4477aa\" fill-opacity=\"0.85\"/>\n",
            poly_path(&a.footprint().corners())
        ));
    }
    out.push_str(&format!(
        "<path d=\"{} Z\" fill=\"#cc3311\"/>\n",
        poly_path(&snap.ego.footprint().corners())
    ));
    out.push_str(&format!(
        "<text x=\"8\" y=\"16\" font-family=\"monospace\" font-size=\"12\">{} t={}s</text>\n",
        scenario.id,
        fmt(snap.sim_time)
    ));
    out.push_str("</svg>\n");
    out
}

/// Snapshot series at 1 s intervals over a rollout.
pub fn render_series(scenario: &Scenario, snapshots: &[Snapshot]) -> Vec<(String, String)> {
    let per_second = (1.0 / scenario.dt).round() as usize;
    snapshots
        .iter()
        .filter(|s| s.step_index as usize % per_second == 0)
        .map(|s| {
            let name = format!("t{:03}.svg", s.step_index as usize / per_second);
            (name, render_snapshot(scenario, s))
        })
        .collect()
}
