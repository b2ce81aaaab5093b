#![no_main]

use libfuzzer_sys::fuzz_target;
use lstmcov::lstm::InputKind;
use lstmcov::model_io::{model_from_slice, model_to_string};
use lstmcov::{run_model, InputSequence};

fuzz_target!(|data: &[u8]| {
    let Ok(model) = model_from_slice(data) else { return };
    // accepted models re-serialize to an equal model
    let text = model_to_string(&model);
    assert_eq!(model_from_slice(text.as_bytes()).unwrap(), model);

    let n = model.n_steps;
    let x = match model.input_kind {
        InputKind::Continuous => {
            let d = model.step_input_dim();
            if n.saturating_mul(d) > 10_000 {
                return;
            }
            InputSequence::continuous(vec![vec![0.5; d]; n], [0.0, 1.0])
        }
        InputKind::Token => {
            if n > 10_000 {
                return;
            }
            let vocab = model.vocab_size().unwrap_or(1) as u32;
            InputSequence::Tokens {
                ids: (0..n as u32).map(|k| k % vocab).collect(),
                vocab_size: vocab,
                pad_id: 0,
            }
        }
    };
    let _ = run_model(&model, &x);
});
