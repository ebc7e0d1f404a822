use thingc::corpus;

#[test]
fn every_artifact_matches_its_golden_file() {
    for report in corpus::verify() {
        assert!(
            report.ok(),
            "{}: {:?} {:?}",
            report.name,
            report.failure,
            report.mismatched
        );
        assert!(report.checked >= 12, "{}", report.name);
    }
}

#[test]
fn embedded_golden_files_match_the_checkout() {
    let dir = corpus::golden_dir();
    for entry in corpus::MODELS {
        for (file, _) in corpus::artifacts(entry).unwrap() {
            let on_disk = std::fs::read_to_string(dir.join(&file)).unwrap();
            assert_eq!(Some(on_disk.as_str()), corpus::golden(&file), "{file}");
        }
    }
}

#[test]
fn bless_writes_what_verify_expects() {
    let dir = std::env::temp_dir().join(format!("thingc-bless-{}", std::process::id()));
    let written = corpus::bless(&dir).unwrap();
    assert_eq!(written.len(), 50);
    for file in &written {
        let text = std::fs::read_to_string(dir.join(file)).unwrap();
        assert_eq!(Some(text.as_str()), corpus::golden(file), "{file}");
    }
    std::fs::remove_dir_all(&dir).unwrap();
}
