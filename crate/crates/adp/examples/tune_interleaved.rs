//! Scratch: verify the frozen interleaved layout at the acceptance seed.
use adp::eval::{k_sweep, EpisodeSpec, Method};
use adp::synthetic::{generate_aspect_dataset, interleaved_class_specs};
use adp::{BackendConfig, PipelineConfig, RadarParams};

fn main() {
    let params = RadarParams::default();
    for seed in [13u64, 42, 99] {
        let specs = interleaved_class_specs(3, 2, &params, seed).unwrap();
        let data =
            generate_aspect_dataset(&specs, &[0.0, 8.0], 24, &params, 20.0, seed + 1).unwrap();
        let base = EpisodeSpec { n_way: 3, k_shot: 10, n_query: 9, episodes: 50, seed: seed + 2 };
        let report = k_sweep(
            &data,
            &base,
            &[1, 10, 20],
            &[Method::Adp, Method::Monolithic],
            &PipelineConfig::default(),
            &BackendConfig::default(),
        )
        .unwrap();
        println!("== seed {seed} ==");
        for row in &report.rows {
            println!(
                "  K={:<2} {:<12} acc={:6.2} f1={:6.2}",
                row.k, row.method, row.mean_acc, row.macro_f1
            );
        }
    }
}
