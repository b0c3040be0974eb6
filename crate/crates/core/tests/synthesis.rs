mod common;

use std::fs;

use augtest::fuzz::{parse_fuzz_target, SeedInput};
use augtest::index::WorkspaceIndex;
use augtest::miner::Origin;
use augtest::project::scan_workspace;
use augtest::synth::{instantiate, pair_augmented, resolve_target_focal, transform, DATA_SLOT};
use common::fixture;

const DECODE_SEED: [u8; 14] = [3, 44, 12, 3, 21, 2, 255, 12, 4, 34, 12, 4, 12, 3];

fn golden(name: &str) -> String {
    fs::read_to_string(fixture("golden").join(name)).unwrap()
}

#[test]
fn template_and_instance_match_golden_files() {
    let unit = parse_fuzz_target(fixture("b64/fuzz/fuzz_targets/decode_random.rs")).unwrap();
    let template = transform(&unit).unwrap();
    assert_eq!(template.text(), golden("decode_random.template.rs"));

    let tests = instantiate(&template, &[SeedInput::new(DECODE_SEED.to_vec(), "decode_random")]);
    assert_eq!(tests.len(), 1);
    assert_eq!(tests[0].text, golden("decode_random.instance.rs"));
}

#[test]
fn instances_differ_only_in_name_and_literal() {
    let unit = parse_fuzz_target(fixture("b64/fuzz/fuzz_targets/decode_random.rs")).unwrap();
    let template = transform(&unit).unwrap();
    let seeds: Vec<SeedInput> = (0..6u8).map(|i| SeedInput::new(vec![i; i as usize], "decode_random")).collect();
    for (i, t) in instantiate(&template, &seeds).iter().enumerate() {
        let lit = format!(
            "&[{}]",
            seeds[i].bytes.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(",")
        );
        let back = t
            .text
            .replacen(&format!("decode_random_fuzzaug_{}", i + 1), "decode_random_fuzzaug_template", 1)
            .replacen(&lit, DATA_SLOT, 1);
        assert_eq!(back, template.text());
    }
}

#[test]
fn augmented_pairs_use_the_last_resolvable_call() {
    let ws = scan_workspace(fixture("b64")).unwrap();
    let unit = parse_fuzz_target(&ws.fuzz_target_files[0]).unwrap();
    let focal = resolve_target_focal(&unit, &WorkspaceIndex::build(&ws)).unwrap();
    assert_eq!(focal.qualified_path.join("::"), "base64::engine::GeneralPurpose::decode");

    let template = transform(&unit).unwrap();
    let tests = instantiate(&template, &[SeedInput::new(vec![1], "decode_random"), SeedInput::new(vec![2], "decode_random")]);
    let pairs = pair_augmented(&tests, &unit, &ws);
    assert_eq!(pairs.len(), 2);
    assert!(pairs.iter().all(|p| p.origin == Origin::Augmented && p.focal.name == "decode"));
}

#[test]
fn every_multi_crate_target_is_transformable() {
    for pkg in ["textkit", "numkit"] {
        let ws = scan_workspace(fixture("multi/crates").join(pkg)).unwrap();
        assert_eq!(ws.fuzz_target_files.len(), 2, "{pkg}");
        for f in &ws.fuzz_target_files {
            let unit = parse_fuzz_target(f).unwrap();
            let template = transform(&unit).unwrap();
            let tests = instantiate(&template, &[SeedInput::new(b"a=b".to_vec(), &unit.id)]);
            syn::parse_str::<syn::ItemFn>(&tests[0].text).unwrap();
            assert!(resolve_target_focal(&unit, &WorkspaceIndex::build(&ws)).is_some(), "{}", unit.id);
        }
    }
}
