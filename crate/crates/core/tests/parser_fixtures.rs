use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use stereoreader::corpus::StructuralRole;
use stereoreader::parser::{
    classify_lines, infer_indent_profile, lines_from_ocr_jsonl, lines_from_text, parse_teleplay, RawLine,
    DEFAULT_CHAR_WIDTH, DEFAULT_TOLERANCE,
};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn titles() -> Vec<String> {
    let mut t: Vec<String> = std::fs::read_dir(fixtures().join("scripts"))
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "txt").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    t.sort();
    t
}

fn gold_roles(title: &str) -> Vec<Option<StructuralRole>> {
    std::fs::read_to_string(fixtures().join("scripts").join(format!("{title}.roles")))
        .unwrap()
        .lines()
        .map(|l| {
            if l == "-" {
                None
            } else {
                Some(StructuralRole::parse(l).expect(l))
            }
        })
        .collect()
}

fn scene_counts() -> BTreeMap<String, usize> {
    serde_json::from_str(&std::fs::read_to_string(fixtures().join("scene_counts.json")).unwrap()).unwrap()
}

fn check(title: &str, lines: &[RawLine]) {
    let profile = infer_indent_profile(lines, DEFAULT_TOLERANCE).unwrap();
    let roles = classify_lines(lines, &profile);
    let gold = gold_roles(title);
    assert_eq!(roles.len(), gold.len(), "{title}");
    for (i, (r, g)) in roles.iter().zip(&gold).enumerate() {
        assert_eq!(r, g, "{title} line {}: {:?}", i + 1, lines[i].text);
    }
    let tp = parse_teleplay(title, lines, DEFAULT_TOLERANCE).unwrap();
    assert_eq!(tp.scenes.len(), scene_counts()[title], "{title}");
}

#[test]
fn plain_text_scripts_classify_exactly() {
    let titles = titles();
    assert!(titles.len() >= 5);
    assert!(scene_counts().values().sum::<usize>() >= 50);
    for title in titles {
        let text = std::fs::read_to_string(fixtures().join("scripts").join(format!("{title}.txt"))).unwrap();
        check(&title, &lines_from_text(&text));
    }
}

#[test]
fn ocr_variants_classify_exactly() {
    let dir = fixtures().join("ocr");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let title = path.file_stem().unwrap().to_string_lossy().into_owned();
        let content = std::fs::read_to_string(&path).unwrap();
        check(
            &title,
            &lines_from_ocr_jsonl(&content, DEFAULT_CHAR_WIDTH, &path).unwrap(),
        );
        n += 1;
    }
    assert!(n >= 2);
}

#[test]
fn ocr_and_text_parse_to_the_same_teleplay() {
    let title = "harbor_lights_s1e1";
    let text = std::fs::read_to_string(fixtures().join("scripts").join(format!("{title}.txt"))).unwrap();
    let path = fixtures().join("ocr").join(format!("{title}.jsonl"));
    let ocr = lines_from_ocr_jsonl(&std::fs::read_to_string(&path).unwrap(), DEFAULT_CHAR_WIDTH, &path).unwrap();
    let a = parse_teleplay(title, &lines_from_text(&text), DEFAULT_TOLERANCE).unwrap();
    let b = parse_teleplay(title, &ocr, DEFAULT_TOLERANCE).unwrap();
    assert_eq!(a, b);
}
