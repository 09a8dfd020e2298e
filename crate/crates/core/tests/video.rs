mod common;

use image::{Rgb, RgbImage};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vidguide::device::{load_ui_graph, render_demonstration};
use vidguide::video::{
    build_mosaic, change_fraction, extract_keyframes, read_manifest, write_keyframes, Frame, FrameDir, PipelineConfig,
};

use common::oracle;

fn frame(img: RgbImage) -> Frame {
    Frame::new(0, img).unwrap()
}

#[test]
fn five_transitions_give_six_keyframes() {
    let graph = load_ui_graph(&common::demo_dir().join("graphs/messages.toml")).unwrap();
    let path: Vec<String> = ["home", "inbox", "new_chat", "chat", "attach_menu", "pick_contact"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let video = render_demonstration(&graph, &path, 30).unwrap();
    let keys = extract_keyframes(&video, &PipelineConfig::default()).unwrap();
    assert_eq!(keys.indices(), vec![0, 30, 60, 90, 120, 150]);
}

#[test]
fn frame_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let video = oracle::random_video(&mut rng, 60, 12, 10);
    for (i, f) in video.iter().enumerate() {
        f.save(dir.path().join(format!("frame_{i}.png"))).unwrap();
    }
    let source = FrameDir::open(dir.path()).unwrap();
    let config = PipelineConfig { sample_stride: 3, change_threshold: 0.1, min_gap: 5 };
    let keys = extract_keyframes(&source, &config).unwrap();
    assert_eq!(keys.indices(), oracle::keyframe_indices(&video, 3, 0.1, 5));

    let out = dir.path().join("keys");
    let manifest = write_keyframes(&keys, &out).unwrap();
    let back = read_manifest(&manifest).unwrap();
    assert_eq!(back.indices(), keys.indices());
    assert_eq!(back.frames()[0].image, keys.frames()[0].image);
}

#[test]
fn mosaic_marks_terminal_only_at_the_end() {
    let keys = common::solid_keys(&[[1, 1, 1], [2, 2, 2], [3, 3, 3], [4, 4, 4], [5, 5, 5], [6, 6, 6]]);
    let head = build_mosaic(&keys, 1, 4).unwrap();
    assert_eq!(head.frame_labels, ["frame-1", "frame-2", "frame-3", "frame-4"]);
    assert!(!head.terminal_marked);
    let tail = build_mosaic(&keys, 4, 4).unwrap();
    assert_eq!(tail.absolute_indices, vec![4, 5, 6]);
    assert!(tail.terminal_marked);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extraction_matches_oracle(seed in any::<u64>(), len in 1usize..200, stride in 1usize..12,
                                 threshold in 0.0f64..=1.0, gap in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let video = oracle::random_video(&mut rng, len, 8, 6);
        let config = PipelineConfig { sample_stride: stride, change_threshold: threshold, min_gap: gap };
        let keys = extract_keyframes(&video, &config).unwrap();
        prop_assert_eq!(keys.indices(), oracle::keyframe_indices(&video, stride, threshold, gap));
    }

    #[test]
    fn change_fraction_is_symmetric_and_bounded(
        a in proptest::collection::vec(any::<[u8; 3]>(), 30),
        b in proptest::collection::vec(any::<[u8; 3]>(), 30),
    ) {
        let img = |px: &[[u8; 3]]| RgbImage::from_fn(6, 5, |x, y| Rgb(px[(y * 6 + x) as usize]));
        let (ia, ib) = (img(&a), img(&b));
        let ab = change_fraction(&frame(ia.clone()), &frame(ib.clone())).unwrap();
        let ba = change_fraction(&frame(ib.clone()), &frame(ia.clone())).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab, oracle::changed_fraction(&ia, &ib));
    }
}

#[test]
fn gap_filter_matches_greedy_oracle_on_random_indices() {
    use rand::Rng;
    use vidguide::video::filter_by_gap;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..20 {
        let mut indices: Vec<usize> = (0..40).map(|_| rng.gen_range(0..400)).collect();
        indices.sort_unstable();
        indices.dedup();
        let frames = indices.iter().map(|&i| Frame::new(i, RgbImage::new(1, 1)).unwrap()).collect();
        let got: Vec<usize> = filter_by_gap(frames, 4).iter().map(|f| f.index).collect();
        let mut want: Vec<usize> = Vec::new();
        for &i in &indices {
            if want.last().is_none_or(|&last| i >= last + 4) {
                want.push(i);
            }
        }
        assert_eq!(got, want);
    }
}

#[test]
fn change_filter_matches_sequential_oracle() {
    use vidguide::video::filter_by_change;
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let video = oracle::random_video(&mut rng, 50, 10, 10);
    let frames = video.iter().enumerate().map(|(i, img)| Frame::new(i, img.clone()).unwrap()).collect();
    let got: Vec<usize> = filter_by_change(frames, 0.3).unwrap().iter().map(|f| f.index).collect();
    assert_eq!(got, oracle::keyframe_indices(&video, 1, 0.3, 1));
}
