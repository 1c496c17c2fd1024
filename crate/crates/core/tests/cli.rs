mod common;

use antispoof::experiment::ExperimentConfig;
use common::{cli, cli_ok, parse_eer_line, run_pipeline, PipelineRun};

#[test]
fn inspect_reports_model3_size_and_shapes() {
    let out = cli_ok(["inspect"]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("params: 7682"));
    assert_eq!(lines.next(), Some("input\t1x100x129"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 13);
    assert_eq!(rows.iter().map(|r| r[3].parse::<usize>().unwrap()).sum::<usize>(), 7682);
    assert_eq!(rows.last().unwrap()[2], "2");
}

#[test]
fn malformed_layer_file_names_the_layer() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("odd.cfg");
    std::fs::write(
        &path,
        "input 1x20x20\nconv filters=15 kernel=3x3 pad=same bias=yes\nact fn=mfm\nflatten\nlinear width=2 bias=yes\n",
    )
    .unwrap();
    let (ok, _, stderr) = cli(["inspect".as_ref(), path.as_os_str()]);
    assert!(!ok);
    assert!(stderr.contains("layer 1"), "{stderr}");
}

#[test]
fn separable_scores_have_zero_eer() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.txt");
    std::fs::write(&path, "a\tgenuine\t3.5\nb\tgenuine\t1.25\nc\tspoof\t-2\nd\tspoof\t0.5\n").unwrap();
    for method in ["rocch", "interpolated"] {
        assert_eq!(
            cli_ok(["eer".as_ref(), path.as_os_str(), "--method".as_ref(), method.as_ref()]).trim(),
            "EER: 0.00%"
        );
    }
}

#[test]
fn unlabelled_scores_cannot_be_evaluated() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.txt");
    std::fs::write(&path, "a\t1.0\nb\tspoof\t0.0\n").unwrap();
    let (ok, _, stderr) = cli(["eer".as_ref(), path.as_os_str()]);
    assert!(!ok && stderr.contains("label"), "{stderr}");
}

#[test]
fn empty_sweep_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.cfg");
    ExperimentConfig::default().write(&path).unwrap();
    let (ok, _, stderr) = cli([
        "sweep".as_ref(),
        "--config".as_ref(),
        path.as_os_str(),
        "--axis".as_ref(),
        "batch".as_ref(),
        "--settings=".as_ref(),
    ]);
    assert!(!ok, "{stderr}");
    assert!(stderr.starts_with("error:"), "{stderr}");
}

#[test]
fn small_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let run = PipelineRun {
        train_per_class: 6,
        dev_per_class: 4,
        seed: 5,
        max_epochs: 2,
        batch_size: 8,
        patience: 10,
        learning_rate: 1e-3,
    };
    let result = run_pipeline(dir.path(), &run);
    assert_eq!(result.epoch_lines, 2);
    assert_eq!(
        std::fs::read_to_string(dir.path().join("run/epochs.log"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .count(),
        2
    );
    // one line per dev utterance, labelled, and both back-ends agree on ids
    let ids = |s: &str| s.lines().map(|l| l.split('\t').next().unwrap().to_string()).collect::<Vec<_>>();
    assert_eq!(ids(&result.scores).len(), 8);
    assert_eq!(ids(&result.scores), ids(&result.gaussian_scores));
    assert!(result.scores.lines().all(|l| l.split('\t').count() == 3));
    let eer = parse_eer_line(&result.eer_line);
    assert!((0.0..=1.0).contains(&eer));
    parse_eer_line(&result.gaussian_eer_line);
    // the run manifest repeats the run
    let cfg = ExperimentConfig::from_file(&dir.path().join("run/run.cfg")).unwrap();
    assert_eq!((cfg.max_epochs, cfg.batch_size, cfg.seed), (2, 8, 5));
}
