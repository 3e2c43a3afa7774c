mod common;

use common::{config, MDP_TAIL, PROP36, THM35};
use nse_mdp::experiment::run_and_persist;

fn csv_bytes(name: &str, cfg: &nse_mdp::experiment::ExperimentConfig) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let rec = run_and_persist(name, cfg, dir.path()).unwrap();
    std::fs::read(dir.path().join(format!("{}.csv", rec.experiment))).unwrap()
}

#[test]
fn reduced_sweeps_are_byte_identical() {
    for (name, text) in [("thm35", THM35), ("prop36", PROP36), ("mdp_tail", MDP_TAIL)] {
        let mut cfg = config(text);
        cfg.ensemble.replicas = 8;
        cfg.tail.replicas = 500;
        cfg.tail.eps = vec![1e-2, 1e-3];
        let a = csv_bytes(name, &cfg);
        assert_eq!(a, csv_bytes(name, &cfg), "{name}");
        cfg.ensemble.seed += 1;
        if name != "mdp_tail" {
            assert_ne!(a, csv_bytes(name, &cfg), "{name} ignores the seed");
        }
    }
}
