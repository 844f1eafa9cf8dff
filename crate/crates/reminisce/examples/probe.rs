// Scratch probe of full-scale training dynamics (not part of the artifact).
use reminisce::domain::{PwdState, RewardSpec, RewardVariant, RobotAction};
use reminisce::evaluation::{
    build_report, exact_policy_value, EvalParams,
};
use reminisce::patient::default_model;
use reminisce::qlearning::{train, TrainConfig};
use reminisce::session::SessionConfig;

fn main() {
    let model = default_model(0);
    let t0 = std::time::Instant::now();

    for variant in [RewardVariant::R1, RewardVariant::R2] {
        for seed in 0..5u64 {
            let spec = RewardSpec::preset(variant);
            let cfg = TrainConfig {
                seed,
                reward_variant: variant,
                ..TrainConfig::default()
            };
            let t = std::time::Instant::now();
            let (_q, log) = train(&cfg, &model, &spec).unwrap();
            let train_time = t.elapsed();

            // Criterion 3: 100-epoch moving average change between 200 and 1500.
            let ma = |end: usize| -> f64 {
                log.epochs[end - 100..end]
                    .iter()
                    .map(|e| e.avg_return)
                    .sum::<f64>()
                    / 100.0
            };
            let ma200 = ma(200);
            let ma1500 = ma(1500);
            let rel = ((ma1500 - ma200) / ma200).abs();

            // Criterion 4: q_update < 1% after epoch 800.
            let max_qu_after_800 = log.epochs[800..]
                .iter()
                .map(|e| e.q_update)
                .fold(0.0f64, f64::max);

            // Final policy via the full protocol (smaller dp for speed).
            let t = std::time::Instant::now();
            let params = EvalParams {
                dp_episodes: 10_000,
                ..EvalParams::default()
            };
            let report = build_report(&log, &model, &spec, seed, &params).unwrap();
            let eval_time = t.elapsed();

            let fp = report.final_policy;
            let nr_neg_no = PwdState::from_trace_code([0, -1, 0]).unwrap();
            let nr_pos_yes = PwdState::from_trace_code([0, 1, 1]).unwrap();
            let rr_neu_no = PwdState::from_trace_code([2, 0, 0]).unwrap();
            let a23_count = PwdState::all()
                .filter(|s| {
                    matches!(
                        fp.action(*s),
                        RobotAction::ModeratePrompt | RobotAction::DifficultPrompt
                    )
                })
                .count();

            let last300: f64 = log.epochs[1200..]
                .iter()
                .map(|e| e.avg_return)
                .sum::<f64>()
                / 300.0;
            let rnd: f64 = report.curves.random[1200..].iter().sum::<f64>() / 300.0;
            let greedy: f64 = report.curves.greedy[1200..].iter().sum::<f64>() / 300.0;

            println!(
                "{variant} seed {seed}: train {train_time:?} eval {eval_time:?} | eps {last300:7.2} rnd {rnd:7.2} greedy {greedy:7.2} | ma-rel {rel:.4} maxqu800 {max_qu_after_800:.5} | [0,-1,0]->{} [0,1,1]->{} [2,0,0]->{} a23={a23_count} | dp {}",
                fp.action(nr_neg_no),
                fp.action(nr_pos_yes),
                fp.action(rr_neu_no),
                report.dp_checks.iter().map(|c| format!("{}:{:.1}s", c.label, c.sigma_distance)).collect::<Vec<_>>().join(" ")
            );

            // Track distinct final policies among the snapshot window.
            if seed == 0 {
                println!(
                    "  top-5 counts: {:?}  | exact(final) {:.2}",
                    report
                        .top_policies
                        .iter()
                        .map(|c| c.count)
                        .collect::<Vec<_>>(),
                    exact_policy_value(&fp, &model, &spec, SessionConfig::default())
                );
            }
        }
    }
    println!("total {:?}", t0.elapsed());
}
