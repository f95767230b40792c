//! Built-in experiment templates at desk scale.

use serde_json::{json, Value};

use crate::config::ExperimentConfig;

/// A named template with a one-line description.
#[derive(Debug, Clone)]
pub struct Recipe {
    pub name: &'static str,
    pub description: &'static str,
    pub config: ExperimentConfig,
}

fn parse(v: Value) -> ExperimentConfig {
    ExperimentConfig::from_json(&v.to_string()).expect("built-in recipe is valid")
}

fn sbm(epochs: usize, lr: f64) -> Value {
    json!({ "epochs": epochs, "lambda_alpha": 1.0, "lambda_entropy": 0.01, "adam": { "lr": lr } })
}

pub fn mixture2d() -> ExperimentConfig {
    parse(json!({
        "experiment": "mixture2d",
        "target": {
            "kind": "stable_location_mixture",
            "alpha_tgt": 1.95,
            "dim": 2,
            "components": [
                { "weight": 0.2, "center": [-3.0, 0.0], "scale": 1.0 },
                { "weight": 0.8, "center": [3.0, 0.0], "scale": 1.0 }
            ]
        },
        "samplers": ["fula", "mafla"],
        "drift": { "alpha": 1.95, "tau": 0.3 },
        "sbm": sbm(400, 3e-3),
        "n_particles": 512,
        "n_steps": 2000,
        "seeds": [0, 1, 2, 3, 4]
    }))
}

pub fn alpha_grid() -> ExperimentConfig {
    parse(json!({
        "experiment": "alpha_grid",
        "target": {
            "kind": "stable_location_mixture",
            "alpha_tgt": 1.6,
            "dim": 4,
            "components": [{ "weight": 1.0, "center": [1.0, 2.0, 3.0, 4.0], "scale": 1.0 }]
        },
        "samplers": ["fula", "mafla"],
        "drift": { "alpha": 1.6, "tau": 0.1 },
        "sbm": sbm(200, 3e-3),
        "n_particles": 512,
        "n_steps": 2000,
        "seeds": [0, 1, 2],
        "sweep": { "alpha_targets": [1.3, 1.6, 1.9], "alpha_proposals": [1.3, 1.6, 1.9] }
    }))
}

pub fn tau_sweep() -> ExperimentConfig {
    parse(json!({
        "experiment": "tau_sweep",
        "target": {
            "kind": "stable_location_mixture",
            "alpha_tgt": 1.5,
            "dim": 4,
            "components": [
                { "weight": 0.3, "center": [-2.0, -2.0, -2.0, -2.0], "scale": 1.0 },
                { "weight": 0.7, "center": [2.0, 2.0, 2.0, 2.0], "scale": 1.0 }
            ]
        },
        "samplers": ["fula", "mafla"],
        "drift": { "alpha": 1.5, "tau": 0.1 },
        "sbm": sbm(200, 3e-3),
        "n_particles": 512,
        "n_steps": 2000,
        "seeds": [0, 1, 2],
        "sweep": { "taus": [0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0] }
    }))
}

pub fn dim_sweep() -> ExperimentConfig {
    parse(json!({
        "experiment": "dim_sweep",
        "samplers": ["fula", "mafla"],
        "drift": { "alpha": 1.9, "tau": 0.1 },
        "sbm": sbm(200, 3e-3),
        "n_particles": 512,
        "n_steps": 2000,
        "seeds": [0, 1, 2],
        "sweep": {
            "dims": [8, 12, 16, 20, 24, 28, 32],
            "modes": {
                "kind": "product_stable",
                "alpha_tgt": 1.9,
                "weights": [0.6, 0.4],
                "offsets": [1.0, -1.0],
                "scale": 1.0
            }
        }
    }))
}

fn graph_recipe(experiment: &str, models: Value, sizes: Value) -> ExperimentConfig {
    parse(json!({
        "experiment": experiment,
        "samplers": ["ula", "fula", "mafla"],
        "drift": { "alpha": 1.2, "tau": 0.001 },
        "sbm": sbm(100, 3e-3),
        "n_particles": 20,
        "n_steps": 300,
        "seeds": [0],
        "init": "origin",
        "sweep": { "graphs": { "models": models, "sizes": sizes, "n_graphs": 5 } }
    }))
}

pub fn maxcut() -> ExperimentConfig {
    graph_recipe("maxcut", json!([{ "model": "ba", "m": 2 }, { "model": "er", "p": 0.1 }]), json!([64, 256]))
}

pub fn vertex_cover() -> ExperimentConfig {
    graph_recipe("vertex_cover", json!([{ "model": "er_edges", "edges_per_vertex": 2.5 }]), json!([64, 256]))
}

fn ablation_recipe(experiment: &str, ks: Value, hs: Value, lambdas: Value) -> ExperimentConfig {
    parse(json!({
        "experiment": experiment,
        "target": {
            "kind": "stable_location_mixture",
            "alpha_tgt": 1.5,
            "dim": 1,
            "components": [{ "weight": 1.0, "center": [5.0], "scale": 1.0 }]
        },
        "samplers": ["mafla"],
        "drift": { "alpha": 1.5, "tau": 0.1 },
        "riesz": { "order": -0.5, "h": 0.01, "K": 0 },
        "sbm": sbm(100, 3e-3),
        "n_particles": 256,
        "n_steps": 1000,
        "seeds": [0],
        "sweep": {
            "ablation": {
                "alphas": [1.2, 1.5, 1.8],
                "K": ks,
                "hs": hs,
                "lambda_alphas": lambdas,
                "seeds": [0],
                "max_cells": 200,
                "n_steps": 1000
            }
        }
    }))
}

pub fn riesz_ablation() -> ExperimentConfig {
    ablation_recipe("riesz_ablation", json!([0, 1, 3, 5]), json!([0.001, 0.003, 0.01, 0.03, 0.1]), json!([1.0]))
}

pub fn lambda_ablation() -> ExperimentConfig {
    ablation_recipe("lambda_ablation", json!([0, 1, 3, 5]), json!([0.01]), json!([0.0, 0.5, 1.0, 1.5, 2.0]))
}

pub fn validate() -> ExperimentConfig {
    parse(json!({
        "experiment": "validate",
        "drift": { "alpha": 2.0, "tau": 0.1 },
        "n_particles": 1,
        "n_steps": 0,
        "seeds": [0]
    }))
}

pub fn recipes() -> Vec<Recipe> {
    vec![
        Recipe { name: "mixture2d", description: "2-D heavy-tailed mixture, weights 0.2/0.8", config: mixture2d() },
        Recipe { name: "alpha_grid", description: "4-D location family over target and proposal indices", config: alpha_grid() },
        Recipe { name: "tau_sweep", description: "4-D mixture, step size over three decades", config: tau_sweep() },
        Recipe { name: "dim_sweep", description: "bimodal product-stable mixture, d from 8 to 32", config: dim_sweep() },
        Recipe { name: "maxcut", description: "MaxCut on BA and ER graphs", config: maxcut() },
        Recipe { name: "vertex_cover", description: "minimum vertex cover on ER graphs with 2.5N edges", config: vertex_cover() },
        Recipe { name: "riesz_ablation", description: "Riesz drift over K and h", config: riesz_ablation() },
        Recipe { name: "lambda_ablation", description: "L_alpha weight against K at h = 0.01", config: lambda_ablation() },
        Recipe { name: "validate", description: "numerical self-checks", config: validate() },
    ]
}

pub fn recipe(name: &str) -> Option<Recipe> {
    recipes().into_iter().find(|r| r.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_validate_and_round_trip() {
        let all = recipes();
        assert!(all.len() >= 8);
        for r in &all {
            r.config.validate().unwrap();
            let back = ExperimentConfig::from_json(&r.config.to_json()).unwrap();
            assert_eq!(back, r.config, "{}", r.name);
        }
    }

    #[test]
    fn dim_sweep_dims() {
        assert_eq!(dim_sweep().sweep.dims.unwrap(), vec![8, 12, 16, 20, 24, 28, 32]);
    }
}
