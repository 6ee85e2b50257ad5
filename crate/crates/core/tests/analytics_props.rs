//! Property tests for transcript parsing and the analytics metrics.

use autothink_core::analytics::{
    build_prompt, classify_mode, difficulty_buckets, efficiency_f1, keyword_profile, Lexicon, Mode,
    PromptVariant, Transcript,
};
use proptest::prelude::*;

fn arb_span() -> impl Strategy<Value = String> {
    // Arbitrary text that cannot smuggle in tag bytes.
    "[a-zA-Z0-9 .,\n]{0,80}".prop_filter("no tags", |s| !s.contains("think>"))
}

proptest! {
    #[test]
    fn parse_round_trips_well_formed(think in arb_span(), answer in arb_span(), with_tag in any::<bool>()) {
        let text = if with_tag {
            format!("<think>{think}</think>{answer}")
        } else {
            format!("{think}</think>{answer}")
        };
        let t = Transcript::parse("id", text.clone(), None, None, None);
        prop_assert!(!t.malformed);
        prop_assert_eq!(&t.think_span, &think);
        prop_assert_eq!(&t.answer_span, &answer);
        prop_assert_eq!(t.reconstruct(), text);
    }

    #[test]
    fn parse_round_trips_any_input(text in "[a-zA-Z0-9 <>/.thinka\n]{0,120}") {
        let t = Transcript::parse("id", text.clone(), None, None, None);
        prop_assert_eq!(t.reconstruct(), text);
    }

    #[test]
    fn ef1_zero_iff_gate_fails(
        acc in 0.0f64..100.0,
        len in 100.0f64..20_000.0,
    ) {
        let (acc_std, len_std, acc_no, len_no) = (48.6, 10_633.0, 37.5, 2_528.0);
        let v = efficiency_f1(acc, len, acc_std, len_std, acc_no, len_no).unwrap();
        if acc > acc_std && len < len_std {
            prop_assert!(v > 0.0, "gated region must be strictly positive, got {v}");
        } else {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn ef1_monotone_on_gated_region(
        acc in 48.7f64..80.0,
        len in 3_000.0f64..10_500.0,
        bump in 0.01f64..5.0,
    ) {
        let (acc_std, len_std, acc_no, len_no) = (48.6, 10_633.0, 37.5, 2_528.0);
        let base = efficiency_f1(acc, len, acc_std, len_std, acc_no, len_no).unwrap();
        let more_acc = efficiency_f1(acc + bump, len, acc_std, len_std, acc_no, len_no).unwrap();
        let less_len = efficiency_f1(acc, len - bump, acc_std, len_std, acc_no, len_no).unwrap();
        prop_assert!(more_acc > base);
        prop_assert!(less_len > base);
    }

    #[test]
    fn bucket_assignment_monotone(p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0, levels in 2usize..16) {
        let l = difficulty_buckets(&[p1, p2], levels).unwrap();
        if p1 > p2 {
            prop_assert!(l[0] <= l[1]);
        }
    }

    #[test]
    fn keyword_rates_invariant_under_duplication(text in "[a-zA-Z ,.]{0,200}") {
        let lex = Lexicon::default();
        let once = keyword_profile(&text, &lex);
        let doubled = keyword_profile(&format!("{text} {text}"), &lex);
        for (category, rate) in &once {
            prop_assert!((rate - doubled[category]).abs() < 1e-9);
        }
    }
}

#[test]
fn prompt_variants_classify_as_designed() {
    // Completions of the forced and plain no-thinking prompts are no-think
    // for tau = 0; an elaborated completion of the ellipsis prompt is not.
    for variant in [PromptVariant::ForcedNoThink, PromptVariant::NoThinking] {
        let text = format!("{}42", build_prompt(variant));
        let t = Transcript::parse("x", text, None, None, None);
        assert_eq!(classify_mode(&t, 0), Mode::NoThink, "{variant:?}");
    }
    let text = format!(
        "{}compute 2+2 first</think>4",
        build_prompt(PromptVariant::Ellipsis)
    );
    let t = Transcript::parse("x", text, None, None, None);
    assert_eq!(classify_mode(&t, 0), Mode::Think);
}
