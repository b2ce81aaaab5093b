#![no_main]

use libfuzzer_sys::fuzz_target;
use lstmcov::fuzzer::{adversarial_at, adversary_rate, Corpus};

fuzz_target!(|data: &[u8]| {
    let Ok(corpus) = Corpus::from_jsonl(data) else { return };
    for c in corpus.generated() {
        assert!(corpus.origin(c).is_seed());
    }
    let _ = adversary_rate(&corpus);
    let small = adversarial_at(&corpus, Some(0.01), 0.1);
    let all = adversarial_at(&corpus, None, 0.1);
    assert!(small.iter().all(|id| all.contains(id)));
    assert_eq!(Corpus::from_jsonl(corpus.to_jsonl().as_bytes()).unwrap(), corpus);
});
