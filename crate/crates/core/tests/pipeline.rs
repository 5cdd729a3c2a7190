mod common;

use std::fs;
use std::path::Path;

use physaug::metrics::{DatasetMode, ReportOptions};
use physaug::pipeline::{
    discover_images, load_image, run_augment, run_metrics, run_preview, run_synthesize_corpus,
};
use physaug::{Error, Mode, PipelineConfig};

use common::{hash_tree, write_corpus};

fn config(input: &Path, output: &Path) -> PipelineConfig {
    PipelineConfig {
        input_dir: Some(input.to_path_buf()),
        output_dir: Some(output.to_path_buf()),
        global_seed: 7,
        ..PipelineConfig::default()
    }
}

#[test]
fn augment_counts_and_names() {
    let tmp = tempfile::tempdir().unwrap();
    let (input, output) = (tmp.path().join("in"), tmp.path().join("out"));
    write_corpus(&input, 3, 24, 16);
    let mut cfg = config(&input, &output);
    cfg.samples_per_image = 2;
    let summary = run_augment(&cfg).unwrap();
    assert_eq!(summary.inputs, 3);
    assert_eq!(summary.written, 6);
    assert!(summary.failures.is_empty());

    let files: Vec<String> = hash_tree(&output).into_keys().collect();
    assert_eq!(files.len(), 6);
    assert!(files.contains(&"img_000__physaug__s0.png".to_string()));
    assert!(files.contains(&"img_002__physaug__s1.png".to_string()));
    let out = load_image(&output.join("img_001__physaug__s1.png")).unwrap();
    assert_eq!((out.height(), out.width()), (16, 24));
}

#[test]
fn augment_is_rerun_and_worker_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    write_corpus(&input, 6, 20, 20);
    let mut hashes = Vec::new();
    for (run, workers) in [1, 1, 4].into_iter().enumerate() {
        let out = tmp.path().join(format!("out{run}"));
        let mut cfg = config(&input, &out);
        cfg.workers = workers;
        cfg.samples_per_image = 2;
        run_augment(&cfg).unwrap();
        hashes.push(hash_tree(&out));
    }
    assert_eq!(hashes[0], hashes[1]);
    assert_eq!(hashes[0], hashes[2]);
}

#[test]
fn outputs_follow_the_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    write_corpus(&input, 2, 16, 16);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run_augment(&config(&input, &a)).unwrap();
    let mut other = config(&input, &b);
    other.global_seed = 8;
    run_augment(&other).unwrap();
    assert_ne!(hash_tree(&a), hash_tree(&b));
}

#[test]
fn nested_inputs_keep_relative_dirs() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    write_corpus(&input.join("city/a"), 1, 12, 12);
    let output = tmp.path().join("out");
    run_augment(&config(&input, &output)).unwrap();
    assert!(output.join("city/a/img_000__physaug__s0.png").is_file());
}

#[test]
fn undecodable_files_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    write_corpus(&input, 2, 12, 12);
    fs::write(input.join("broken.png"), b"not an image").unwrap();
    fs::write(input.join("notes.txt"), b"ignored").unwrap();
    let mut cfg = config(&input, &tmp.path().join("out"));
    cfg.samples_per_image = 3;
    let summary = run_augment(&cfg).unwrap();
    assert_eq!(summary.inputs, 3);
    assert_eq!(summary.written, 6);
    assert_eq!(summary.failures.len(), 1);
    assert_eq!(summary.failures[0].path, Path::new("broken.png"));
}

#[test]
fn empty_input_is_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    fs::create_dir_all(&input).unwrap();
    fs::write(input.join("readme.md"), b"x").unwrap();
    let err = run_augment(&config(&input, &tmp.path().join("out"))).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
}

#[test]
fn unwritable_output_is_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    write_corpus(&input, 1, 8, 8);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let err = run_augment(&config(&input, &blocker.join("out"))).unwrap_err();
    assert!(matches!(err, Error::Io { .. }), "{err}");
}

#[test]
fn output_inside_input_is_not_reaugmented() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    write_corpus(&input, 2, 8, 8);
    let cfg = config(&input, &input.join("aug"));
    run_augment(&cfg).unwrap();
    let second = run_augment(&cfg).unwrap();
    assert_eq!(second.inputs, 2);
    assert_eq!(discover_images(&input).unwrap().len(), 4);
}

#[test]
fn preview_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let paths = write_corpus(tmp.path(), 1, 20, 10);
    let cfg = PipelineConfig::default();

    let single = run_preview(&cfg, &paths[0], 1, 1).unwrap();
    assert_eq!(single.as_raw(), image::open(&paths[0]).unwrap().to_rgb8().as_raw());

    let sheet = run_preview(&cfg, &paths[0], 2, 2).unwrap();
    assert_eq!(sheet.dimensions(), (40, 20));
    let tile = |r: u32, c: u32| image::imageops::crop_imm(&sheet, c * 20, r * 10, 20, 10).to_image();
    let tiles = [tile(0, 0), tile(0, 1), tile(1, 0), tile(1, 1)];
    assert_eq!(tiles[0].as_raw(), single.as_raw());
    for i in 0..4 {
        for j in i + 1..4 {
            assert_ne!(tiles[i].as_raw(), tiles[j].as_raw(), "tiles {i} and {j}");
        }
    }
    assert_eq!(run_preview(&cfg, &paths[0], 2, 2).unwrap(), sheet);
}

#[test]
fn preview_tiles_match_augment_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    let paths = write_corpus(&input, 1, 16, 12);
    let output = tmp.path().join("out");
    let mut cfg = config(&input, &output);
    cfg.samples_per_image = 2;
    run_augment(&cfg).unwrap();
    let sheet = run_preview(&cfg, &paths[0], 1, 3).unwrap();
    let third = image::imageops::crop_imm(&sheet, 32, 0, 16, 12).to_image();
    let file = image::open(output.join("img_000__physaug__s1.png")).unwrap().to_rgb8();
    assert_eq!(third, file);
}

#[test]
fn preview_rejects_undecodable() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("x.png");
    fs::write(&p, b"junk").unwrap();
    assert!(matches!(
        run_preview(&PipelineConfig::default(), &p, 2, 2),
        Err(Error::Image { .. })
    ));
}

#[test]
fn synthesize_layout_and_severity_ordering() {
    let tmp = tempfile::tempdir().unwrap();
    let clean = tmp.path().join("clean");
    write_corpus(&clean, 2, 16, 16);
    let out = tmp.path().join("corrupt");
    let cfg = PipelineConfig::default();
    let summary = run_synthesize_corpus(&cfg, &clean, &out).unwrap();
    assert_eq!(summary.written, 20);
    let tree = hash_tree(&out);
    assert_eq!(tree.len(), 20);
    for corruption in ["fog", "lowlight"] {
        for s in 1..=5 {
            assert!(tree.contains_key(&format!("{corruption}/{s}/img_001.png")));
        }
    }

    let clean_img = load_image(&clean.join("img_000.png")).unwrap();
    let mad = |p: &Path| {
        let img = load_image(p).unwrap();
        img.data().iter().zip(clean_img.data()).map(|(a, b)| (a - b).abs()).sum::<f64>()
            / img.data().len() as f64
    };
    assert!(mad(&out.join("fog/5/img_000.png")) > mad(&out.join("fog/1/img_000.png")));

    let again = tmp.path().join("corrupt2");
    run_synthesize_corpus(&cfg, &clean, &again).unwrap();
    assert_eq!(hash_tree(&again), tree);
}

#[test]
fn deterministic_modes_write_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    write_corpus(&input, 1, 8, 8);
    for mode in [Mode::Npm1, Mode::Npm2, Mode::Fog, Mode::Lowlight] {
        let out = tmp.path().join(mode.name());
        let mut cfg = config(&input, &out);
        cfg.mode = mode;
        assert_eq!(run_augment(&cfg).unwrap().written, 1);
        assert!(out.join(format!("img_000__{mode}__s0.png")).is_file());
    }
}

#[test]
fn metrics_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let dwd = tmp.path().join("dwd.csv");
    fs::write(
        &dwd,
        "corruption,severity,map\nnight_sunny,1,44.9\ndusk_rainy,1,41.2\nnight_rainy,1,23.1\ndaytime_foggy,1,40.8\n",
    )
    .unwrap();
    let r = run_metrics(&dwd, DatasetMode::Dwd, ReportOptions::default()).unwrap();
    assert!((r.mpc - 37.5).abs() < 0.01);
    assert!(matches!(
        run_metrics(&dwd, DatasetMode::CityscapesC, ReportOptions::default()),
        Err(Error::ShapeMismatch { .. })
    ));

    let mut rows = String::from("corruption,severity,map\n");
    for c in 0..14 {
        for s in 1..=5 {
            rows.push_str(&format!("c{c},{s},10\n"));
        }
    }
    let city = tmp.path().join("city.csv");
    fs::write(&city, rows).unwrap();
    match run_metrics(&city, DatasetMode::CityscapesC, ReportOptions::default()) {
        Err(Error::ShapeMismatch { expected, found }) => {
            assert!(expected.contains("15 corruptions"));
            assert!(found.contains("14 corruptions"));
        }
        other => panic!("expected shape error, got {other:?}"),
    }

    let single = tmp.path().join("one.csv");
    fs::write(&single, "corruption,severity,map\nx,1,12.0\n").unwrap();
    let r = run_metrics(&single, DatasetMode::Custom, ReportOptions::default()).unwrap();
    assert_eq!(r.mpc, 12.0);
}

#[test]
fn eight_workers_halve_wall_time() {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    if cores < 8 {
        eprintln!("skipping throughput check: {cores} cores available, 8 required");
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    write_corpus(&input, 64, 512, 512);
    let mut times = Vec::new();
    for workers in [1, 8] {
        let mut cfg = config(&input, &tmp.path().join(format!("out{workers}")));
        cfg.workers = workers;
        times.push(run_augment(&cfg).unwrap().elapsed);
    }
    assert!(times[1] < times[0] / 2, "{times:?}");
}
