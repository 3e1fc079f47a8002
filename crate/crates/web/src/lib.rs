//! Browser bindings for the position sharing demo page.
//!
//! Every export returns a JSON string; failures come back as
//! `{"error": "..."}` so the page never has to catch.

use possharing::csps::{fuse_csps, generate_csps, meets_target};
use possharing::metrics::{read_trust_csv, PrecisionModel, PrivacyRequirement, RequirementLevel};
use possharing::osps::{fuse_osps, generate_osps};
use possharing::sim::run_placement_experiment;
use possharing::{seeded_rng, MapGrid, Point};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn respond(result: possharing::Result<Value>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

fn circle(c: &possharing::Circle) -> Value {
    json!({ "x": c.center.x, "y": c.center.y, "r": c.radius })
}

/// Open-space shares for `(x, y)` and the circle obtained after fusing
/// each prefix of them.
#[wasm_bindgen]
pub fn osps_demo(x: f64, y: f64, n: usize, r0: f64, seed: u64) -> String {
    respond((|| {
        let set = generate_osps(Point::new(x, y), n, r0, &mut seeded_rng(seed))?;
        let steps = (0..=n)
            .map(|k| fuse_osps(n, &set.master, &set.refinements[..k]).map(|c| circle(&c)))
            .collect::<possharing::Result<Vec<_>>>()?;
        Ok(json!({
            "shares": serde_json::from_str::<Value>(&set.to_json())?,
            "steps": steps,
        }))
    })())
}

/// Constrained-space shares on a map given in the `MAPGRID` text format,
/// with the feasible area and its target after each prefix.
#[wasm_bindgen]
pub fn csps_demo(map: &str, x: f64, y: f64, n: usize, r0: f64, seed: u64) -> String {
    respond((|| {
        let grid = MapGrid::parse(map)?;
        let set = generate_csps(n, &grid, r0, Point::new(x, y), &mut seeded_rng(seed))?;
        let mut steps = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let fused = fuse_csps(&grid, n, set.master.circle, &set.refinements[..k])?;
            let nominal = r0 * (n - k) as f64 / n as f64;
            steps.push(json!({
                "circle": circle(fused.circles.last().expect("master circle")),
                "area": fused.area,
                "target": std::f64::consts::PI * nominal * nominal,
                "meets": meets_target(fused.area, nominal, grid.cell_size),
            }));
        }
        Ok(json!({
            "shares": serde_json::from_str::<Value>(&set.to_json())?,
            "steps": steps,
        }))
    })())
}

/// Uniform versus optimized placement of `n` unit-gain shares on the
/// servers of a `server_id,risk` CSV.
#[wasm_bindgen]
pub fn placement_demo(trust_csv: &str, n: usize, seed: u64) -> String {
    respond((|| {
        let servers = read_trust_csv(trust_csv.as_bytes())?;
        let model = PrecisionModel::uniform_gain(1.0, n);
        let never = PrivacyRequirement::new(vec![RequirementLevel { phi: f64::MAX, p: 0.0 }])?;
        let cmp = run_placement_experiment(&servers, n, &never, &model, &mut seeded_rng(seed))?;
        let side = |pl: &possharing::placement::Placement, objective: f64| {
            json!({
                "servers": pl.servers.iter().map(|s| json!({ "id": s.server_id, "risk": s.risk })).collect::<Vec<_>>(),
                "counts": pl.counts(),
                "objective": objective,
            })
        };
        Ok(json!({
            "uniform": side(&cmp.uniform, cmp.uniform_objective),
            "optimized": side(&cmp.optimized, cmp.optimized_objective),
            "rows": cmp.rows.iter().map(|r| json!({ "phi": r.phi, "uniform": r.p_uniform, "optimized": r.p_optimized })).collect::<Vec<_>>(),
            "peak": cmp.peak,
        }))
    })())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn osps_steps_shrink_to_the_position() {
        let v = parse(&osps_demo(10.0, 20.0, 4, 100.0, 1));
        let steps = v["steps"].as_array().unwrap();
        assert_eq!(steps.len(), 5);
        assert_eq!(steps[0]["r"], 100.0);
        assert_eq!(steps[4]["r"], 0.0);
        assert!((steps[4]["x"].as_f64().unwrap() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn csps_steps_meet_their_targets() {
        let map = "MAPGRID\n8 8\n0 0 10\n00001111\n00011111\n00111111\n01111111\n11111111\n11111111\n11111111\n11111111\n";
        let v = parse(&csps_demo(map, 45.0, 35.0, 2, 20.0, 3));
        assert!(v.get("error").is_none(), "{v}");
        for step in v["steps"].as_array().unwrap() {
            assert_eq!(step["meets"], true, "{step}");
        }
    }

    #[test]
    fn placement_reports_both_sides() {
        let csv = "server_id,risk\nA,0.4932\nB,0.3292\nC,0.2344\nD,0.1788\nE,0.0925\n";
        let v = parse(&placement_demo(csv, 15, 0));
        assert_eq!(v["uniform"]["counts"], json!([3, 3, 3, 3, 3]));
        assert_eq!(v["optimized"]["counts"], json!([7, 3, 2, 2, 1]));
    }

    #[test]
    fn errors_are_json() {
        let v = parse(&osps_demo(0.0, 0.0, 0, 100.0, 1));
        assert!(v["error"].as_str().unwrap().contains("invalid"));
        let v = parse(&placement_demo("id,p\n", 3, 1));
        assert!(v.get("error").is_some());
    }
}
