//! Shared fixtures for the benchmarks in `benches/`.

use bandeau_core::{synth_case, Bucket, FunctionCurve, MatchConfig, Mode, RefitInstance};

/// Every `step`-th point of a curve, keeping the last one.
pub fn thinned(curve: &FunctionCurve, step: usize) -> FunctionCurve {
    let pts = curve.points();
    let mut out: Vec<_> = pts.iter().step_by(step).copied().collect();
    if (pts.len() - 1) % step != 0 {
        out.push(pts[pts.len() - 1]);
    }
    FunctionCurve::new(out).expect("thinning keeps x increasing")
}

/// A synthetic case with both curves thinned, solved with `k` cuts.
pub fn instance(bucket: Bucket, seed: u64, step: usize, k: usize) -> RefitInstance {
    let case = synth_case(bucket, seed).expect("synthetic case");
    RefitInstance::new(
        thinned(&case.deformed, step),
        thinned(&case.ideal, step),
        k,
        1e6,
        MatchConfig::new(0.3).unwrap(),
        Mode::NoRearrangement,
    )
    .expect("valid instance")
}
