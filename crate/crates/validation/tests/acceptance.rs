//! Prints one PASS/FAIL line per acceptance criterion and exits non-zero on any failure.

use becprobe_validation::criteria::*;
use becprobe_validation::{judge, Physicality, Verdict};

fn main() {
    becprobe::linalg::use_sequential_kernels();
    let mut phys = Physicality::default();
    let p = &mut phys;
    let mut verdicts: Vec<Verdict> = Vec::new();
    let mut report = |v: Verdict| {
        println!("{v}");
        verdicts.push(v);
    };
    report(judge(1, "spectrum limits", spectrum_limits));
    report(judge(2, "near-commensurability", commensurability));
    report(judge(3, "coupling closed forms", coupling_closed_forms));
    report(judge(4, "steady state", || steady_state(p)));
    report(judge(5, "transient squeezing", || transient_squeezing(p)));
    report(judge(6, "detector-resolution decoherence", || detector_decoherence(p)));
    report(judge(7, "stroboscopic entanglement", || stroboscopic_entanglement(p)));
    report(judge(8, "trajectory diffusion law", || trajectory_diffusion(p)));
    report(judge(9, "ensemble link", || ensemble_link(p)));
    report(judge(10, "feedback energy minima", || feedback_minima(p)));
    report(judge(11, "number statistics", || number_statistics(p)));
    report(judge(12, "squeezing targets", || squeezing_targets(p)));
    report(judge(13, "oracle equivalence", || oracle_equivalence(p)));
    report(judge(14, "physicality suite", || physicality(p)));
    let failed: Vec<usize> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    println!(
        "acceptance: {} of {} criteria pass{}",
        verdicts.len() - failed.len(),
        verdicts.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failing: {failed:?}")
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
