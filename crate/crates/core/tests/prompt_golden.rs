use claimcheck_core::augment::{build_style_transfer_prompt, build_style_transfer_prompt_in, StyleTransferExemplars};
use claimcheck_core::prompt::build_checkworthy_prompt;
use claimcheck_core::PromptConfig;

const LANGUAGES: [(&str, &str); 3] = [("english", "English"), ("dutch", "Dutch"), ("arabic", "Arabic")];

fn golden(name: &str) -> String {
    let path = format!("{}/tests/golden/{name}.txt", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn exemplars() -> StyleTransferExemplars {
    StyleTransferExemplars::new([
        "Big news today! #economy".into(),
        "Can't believe this vote 😡".into(),
        "Read the full story: https://t.co/x".into(),
    ])
    .unwrap()
}

#[test]
fn checkworthy_matches_goldens() {
    for (file, lang) in LANGUAGES {
        let cfg = PromptConfig { language_name: lang.into(), ..PromptConfig::default() };
        let rendered = build_checkworthy_prompt("Apple's CEO is Tim Cook.", &cfg).unwrap();
        assert_eq!(rendered, golden(&format!("checkworthy-{file}")), "{lang}");
        assert_eq!(rendered.matches("checkworthy(Apple's CEO is Tim Cook.)").count(), 1);
        assert!(rendered.ends_with("\ncheckworthy(Apple's CEO is Tim Cook.)"));
    }
}

#[test]
fn style_transfer_matches_goldens() {
    let text = "We cut taxes for 95 percent of working families.";
    for (file, lang) in LANGUAGES {
        let rendered = build_style_transfer_prompt_in(text, &exemplars(), lang);
        assert_eq!(rendered, golden(&format!("style-transfer-{file}")), "{lang}");
    }
    assert_eq!(build_style_transfer_prompt(text, &exemplars()), golden("style-transfer-arabic"));
}

#[test]
fn languages_differ_only_at_substitution() {
    let en = golden("checkworthy-english");
    let nl = golden("checkworthy-dutch");
    let (en_lines, nl_lines): (Vec<_>, Vec<_>) = (en.lines().collect(), nl.lines().collect());
    assert_eq!(en_lines.len(), nl_lines.len());
    let differing: Vec<_> = en_lines.iter().zip(&nl_lines).filter(|(a, b)| a != b).collect();
    assert_eq!(differing.len(), 1);
    assert_eq!(differing[0].0.replace("English", "Dutch"), *differing[0].1);
}
