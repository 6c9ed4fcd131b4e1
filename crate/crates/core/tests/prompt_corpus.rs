use std::io::BufReader;

use molforge::pairmine::{read_jsonl, write_jsonl, PairRecord};
use molforge::prompts::{
    name_occurrences, render_eval_record, training_corpus, NameSet, NameVariant, PromptRecord, TemplateSet,
};
use molforge::propmodel::{PropertyVector, Registry};
use molforge::taskforge::enumerate_tasks;

fn pairs(n: usize) -> Vec<PairRecord> {
    (0..n)
        .map(|i| PairRecord {
            mx: format!("C{}O", "C".repeat(i % 13)),
            my: format!("N{}O", "C".repeat(i % 11)),
            similarity: 0.7,
            vx: PropertyVector::new(),
            vy: PropertyVector::new(),
        })
        .collect()
}

#[test]
fn every_instruction_names_each_property_once() {
    let reg = Registry::default();
    let templates = TemplateSet::default();
    for variant in [NameVariant::Seen, NameVariant::Unseen] {
        let names = NameSet::from_registry(&reg, variant);
        for task in enumerate_tasks(&reg.ids(), 1).unwrap() {
            for t in templates.all() {
                let r = render_eval_record("CCO", &task, t, &reg, &names).unwrap();
                let counts = name_occurrences(&r.instruction, &names, &task.properties);
                assert!(counts.values().all(|&c| c == 1), "{} {variant} t{}: {counts:?}", task.name, t.index);
            }
        }
    }
}

#[test]
fn strict_corpora_never_contain_the_held_out_instruction() {
    let reg = Registry::default();
    let templates = TemplateSet::default();
    let held: Vec<String> = templates
        .held_out_indices()
        .iter()
        .map(|&i| templates.get(i).unwrap().text.clone())
        .collect();
    let names = NameSet::from_registry(&reg, NameVariant::Seen);
    for task in enumerate_tasks(&reg.ids(), 3).unwrap() {
        let corpus = training_corpus(&pairs(60), &task, &templates, &reg, &names, 42).unwrap();
        for r in &corpus {
            assert!(held.iter().all(|h| !r.instruction.contains(h.as_str())));
            assert!(r.output.is_some());
        }
    }
}

#[test]
fn jsonl_round_trip() {
    let reg = Registry::default();
    let templates = TemplateSet::default();
    let names = NameSet::from_registry(&reg, NameVariant::Unseen);
    let task = molforge::propmodel::TaskSpec::from_letters("BDPQ").unwrap();
    let mut recs = training_corpus(&pairs(25), &task, &templates, &reg, &names, 7).unwrap();
    recs.push(render_eval_record("c1ccccc1O", &task, templates.get(6).unwrap(), &reg, &names).unwrap());
    let mut buf = Vec::new();
    write_jsonl(&recs, &mut buf).unwrap();
    let back: Vec<PromptRecord> = read_jsonl(BufReader::new(buf.as_slice())).unwrap();
    assert_eq!(back, recs);
    let first: serde_json::Value = serde_json::from_slice(buf.split(|&b| b == b'\n').next().unwrap()).unwrap();
    let keys: Vec<&str> = first.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys.len(), 6);
    for k in ["task", "instruction", "input", "output", "template", "names"] {
        assert!(keys.contains(&k));
    }
}
