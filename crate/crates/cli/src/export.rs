//! Route export as GeoJSON.

use heatroute_core::road_network::RoadNetwork;
use heatroute_core::simulation::BatchEpisode;
use serde_json::{json, Value};

/// One LineString feature per completed episode, coordinates `[lon, lat]`.
pub fn routes_geojson(net: &RoadNetwork, episodes: &[BatchEpisode], manifest_id: &str) -> Value {
    let features: Vec<Value> = episodes
        .iter()
        .filter_map(|ep| ep.result.as_ref().map(|r| (ep, r)))
        .map(|(ep, r)| {
            let coords: Vec<Value> = r
                .route
                .nodes
                .iter()
                .filter_map(|id| net.index_of(id))
                .map(|i| {
                    let n = net.node(i);
                    json!([n.lon, n.lat])
                })
                .collect();
            json!({
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": coords},
                "properties": {
                    "episode": ep.index,
                    "persona": r.persona_name,
                    "origin": r.origin,
                    "destination": r.destination,
                    "repetition": ep.repetition,
                    "mode": r.mode,
                    "length_m": r.route.length_m,
                    "mean_comfort": r.route.mean_comfort,
                    "combined_cost": r.route.combined_cost,
                    "turn_count": r.route.turn_count,
                    "reached": r.reached,
                    "cost": r.cost_estimate,
                },
            })
        })
        .collect();
    json!({
        "type": "FeatureCollection",
        "manifest_id": manifest_id,
        "features": features,
    })
}
