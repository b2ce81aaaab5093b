#![no_main]

use libfuzzer_sys::fuzz_target;
use lstmcov::coverage::{ConditionSet, Metric, MetricSpec, Thresholds};

fuzz_target!(|data: &[u8]| {
    let Ok(th) = Thresholds::from_slice(data) else { return };
    let again = Thresholds::from_slice(th.to_json().as_bytes()).unwrap();
    assert_eq!(again, th);

    let mut metrics: Vec<MetricSpec> = th.v_sc.keys().map(|&c| MetricSpec::sc(c)).collect();
    metrics.extend(th.bc.keys().map(|k| MetricSpec::bc(k.component, k.abstraction)));
    metrics.extend(th.symbolizers.keys().map(|k| MetricSpec::tc(k.component, k.abstraction)));
    if metrics.is_empty() || th.tc_span.t2 > 64 {
        return;
    }
    if let Ok(set) = ConditionSet::build_with_cap(&th, &metrics, th.tc_span.t2, 4096) {
        for c in &set.conditions {
            let _ = c.describe();
            if c.kind_name() == "tc" {
                assert_eq!(set.metrics[c.group].metric, Metric::TC);
            }
        }
    }
});
