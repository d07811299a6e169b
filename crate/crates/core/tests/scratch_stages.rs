use fatou::pushout::{build_stage, EngineConfig, Stage};
use fatou::scenario::{preset_ball_avoid, Scenario};
use std::time::Instant;

#[test]
fn all_eight_stages() {
    let scenario = Scenario::new(preset_ball_avoid()).unwrap();
    let cfg = EngineConfig::default();
    let mut stages: Vec<Stage> = Vec::new();
    for k in 1..=8 {
        let t0 = Instant::now();
        match build_stage(&scenario, k, &stages, &cfg) {
            Ok(st) => {
                let c = &st.certificate;
                println!(
                    "stage {k}: dev {:.2e} (eps {:.2e}) gap {:.3} minmod {:.3} deg {} attempts {} letters {} farrel {:.1e} [{:.1}s]",
                    c.max_identity_deviation_on_kb, c.eps,
                    c.min_gap_pushed.unwrap(), c.min_pushed_modulus.unwrap(),
                    c.fit_degree_used, c.attempts_used,
                    c.word_letters, c.fit_residual_far_rel, t0.elapsed().as_secs_f64()
                );
                stages.push(st);
            }
            Err(e) => {
                println!("stage {k} FAILED after {:.1}s: {e}", t0.elapsed().as_secs_f64());
                panic!("stage {k} failed");
            }
        }
    }
}
