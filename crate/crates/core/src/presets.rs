//! Frozen catalog of the benchmark setups.
//!
//! `alphas` lists the fractional orders each setup is studied with. A single
//! run still needs an explicit `alpha` in the configuration.

use crate::config::{InitialSpec, PotentialSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub dim: usize,
    pub domain: (f64, f64),
    pub n: usize,
    pub gamma: f64,
    pub beta: f64,
    pub potential: PotentialSpec,
    pub initial: InitialSpec,
    pub c0: f64,
    pub tau: f64,
    pub t_end: f64,
    pub stride: usize,
    pub alphas: &'static [f64],
    pub tau_list: &'static [f64],
    pub n_list: &'static [usize],
    pub snapshot_times: &'static [f64],
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "ex4_1",
        dim: 1,
        domain: (-16.0, 16.0),
        n: 256,
        gamma: 1.0,
        beta: 2.0,
        potential: PotentialSpec::Zero,
        initial: InitialSpec::ChirpedGaussian,
        c0: 0.0,
        tau: 0.01,
        t_end: 1.0,
        stride: 1,
        alphas: &[1.4, 1.7, 1.9, 2.0],
        tau_list: &[0.01, 0.005, 0.0025, 0.00125],
        n_list: &[32, 64, 128, 256],
        snapshot_times: &[],
    },
    Preset {
        name: "ex4_1_conservation",
        dim: 1,
        domain: (-40.0, 40.0),
        n: 160,
        gamma: 1.0,
        beta: 2.0,
        potential: PotentialSpec::Zero,
        initial: InitialSpec::ChirpedGaussian,
        c0: 0.0,
        tau: 0.01,
        t_end: 10.0,
        stride: 10,
        alphas: &[1.4, 1.7, 1.9, 2.0],
        tau_list: &[0.01, 0.001],
        n_list: &[],
        snapshot_times: &[0.0, 5.0, 10.0],
    },
    Preset {
        name: "ex4_2",
        dim: 2,
        domain: (-8.0, 8.0),
        n: 128,
        gamma: 1.0,
        beta: 1.0,
        potential: PotentialSpec::Zero,
        initial: InitialSpec::Gaussian,
        c0: 0.0,
        tau: 0.02,
        t_end: 1.0,
        stride: 1,
        alphas: &[1.3, 1.6, 1.9, 2.0],
        tau_list: &[0.02, 0.01, 0.005, 0.0025],
        n_list: &[16, 32, 64],
        snapshot_times: &[],
    },
    Preset {
        name: "ex4_2_conservation",
        dim: 2,
        domain: (-10.0, 10.0),
        n: 40,
        gamma: 1.0,
        beta: 1.0,
        potential: PotentialSpec::Zero,
        initial: InitialSpec::Gaussian,
        c0: 0.0,
        tau: 0.02,
        t_end: 2.0,
        stride: 5,
        alphas: &[1.3, 1.6, 1.9, 2.0],
        tau_list: &[],
        n_list: &[],
        snapshot_times: &[0.0, 1.0, 2.0],
    },
    Preset {
        name: "ex4_3_V1",
        dim: 2,
        domain: (-5.0, 5.0),
        n: 64,
        gamma: 1.0,
        beta: 1.0,
        potential: PotentialSpec::Harmonic,
        initial: InitialSpec::Gaussian,
        c0: 0.0,
        tau: 0.01,
        t_end: 2.0,
        stride: 10,
        alphas: &[1.3],
        tau_list: &[],
        n_list: &[],
        snapshot_times: &[0.0, 1.0, 2.0],
    },
    Preset {
        name: "ex4_3_V2",
        dim: 2,
        domain: (-5.0, 5.0),
        n: 64,
        gamma: 1.0,
        beta: 1.0,
        potential: PotentialSpec::OpticalLattice,
        initial: InitialSpec::Gaussian,
        c0: 0.0,
        tau: 0.01,
        t_end: 2.0,
        stride: 10,
        alphas: &[1.9],
        tau_list: &[],
        n_list: &[],
        snapshot_times: &[0.0, 1.0, 2.0],
    },
];

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.name).collect()
}
