use std::io::Cursor;
use std::path::Path;

use comotion::flowcore::FlowField;
use comotion::motfeat::{extract_features, MotionFeatureSet, MotionGateConfig, PairId};
use comotion::tracks::{frame_pairs, parse_track, read_track, write_track, LandmarkFrame, LandmarkScheme, LandmarkTrack, Point};
use proptest::prelude::*;

fn csv_68(frames: &[usize], skip: Option<(usize, usize)>) -> String {
    let mut s = String::from("frame,landmark,x,y\n");
    for &f in frames {
        // rows deliberately listed in reverse landmark order
        for l in (0..68).rev() {
            if skip == Some((f, l)) {
                continue;
            }
            s.push_str(&format!("{f},{l},{},{}\n", 10.0 + l as f64, 20.0 + f as f64 + 0.25));
        }
    }
    s
}

fn parse(text: &str, scheme: LandmarkScheme) -> comotion::Result<LandmarkTrack> {
    parse_track(Cursor::new(text.as_bytes()), "v", scheme, Path::new("mem.csv"))
}

fn frame_at(points: Vec<Point>) -> LandmarkFrame {
    LandmarkFrame::new(0, points).unwrap()
}

#[test]
fn drops_boundary_and_renumbers() {
    let t = parse(&csv_68(&[0, 1], None), LandmarkScheme::Full68).unwrap();
    assert_eq!(t.len(), 2);
    for f in t.frames() {
        assert_eq!(f.points.len(), 51);
        for (i, p) in f.points.iter().enumerate() {
            // file landmark 17 + i, whose x was written as 10 + (17 + i)
            assert_eq!(p.x, 27.0 + i as f64);
        }
    }
}

#[test]
fn incomplete_frame_is_dropped() {
    let t = parse(&csv_68(&[0, 1, 2], Some((1, 30))), LandmarkScheme::Full68).unwrap();
    assert_eq!(t.frames().iter().map(|f| f.frame_index).collect::<Vec<_>>(), vec![0, 2]);
    assert_eq!(t.dropped_frames, 1);
    assert!(frame_pairs(&t).is_empty());
    // a missing boundary point does not matter
    let t = parse(&csv_68(&[0, 1], Some((1, 5))), LandmarkScheme::Full68).unwrap();
    assert_eq!(t.dropped_frames, 0);
}

#[test]
fn malformed_inputs_error() {
    assert!(parse("frame,landmark,x\n0,0,1\n", LandmarkScheme::Inner51).is_err());
    assert!(parse("frame,landmark,x,y\n0,51,1,1\n", LandmarkScheme::Inner51).is_err());
    assert!(parse("frame,landmark,x,y\n0,0,abc,1\n", LandmarkScheme::Inner51).is_err());
    assert!(parse("frame,landmark,x,y\n0,0,1,1\n", LandmarkScheme::Inner51).is_err(), "no complete frame");
    assert!(LandmarkScheme::from_count(40).is_err());
}

#[test]
fn crlf_and_pass_through_51() {
    let mut s = String::from("frame,landmark,x,y\r\n");
    for l in 0..51 {
        s.push_str(&format!("3,{l},{}.5,7\r\n", l));
    }
    let t = parse(&s, LandmarkScheme::Inner51).unwrap();
    assert_eq!(t.frames()[0].frame_index, 3);
    assert_eq!(t.frames()[0].points[50], Point::new(50.5, 7.0));
}

#[test]
fn pairs_follow_consecutive_indices() {
    let make = |idx: &[usize]| {
        LandmarkTrack::new("v", idx.iter().map(|&i| LandmarkFrame::new(i, vec![Point::new(1.0, 1.0); 51]).unwrap()).collect())
            .unwrap()
    };
    assert_eq!(frame_pairs(&make(&[0, 1, 2, 3])), vec![(0, 1), (1, 2), (2, 3)]);
    assert_eq!(frame_pairs(&make(&[0, 2, 3])), vec![(2, 3)]);
    assert!(frame_pairs(&make(&[4])).is_empty());
}

#[test]
fn uniform_flow_gives_identical_features() {
    let flow = FlowField::uniform(40, 40, 2.0f64, -1.0);
    let lm = frame_at((0..51).map(|i| Point::new((i % 40) as f64 + 0.3, (i / 40) as f64 * 30.0)).collect());
    for sigma in [0.5, 1.5, 4.0] {
        let cfg = MotionGateConfig { gaussian_sigma: sigma, ..Default::default() };
        let m = extract_features(&flow, &lm, PairId::new(0, 0), &cfg).unwrap();
        for f in m.features() {
            assert!((f[0] - 2.0).abs() < 1e-12 && (f[1] + 1.0).abs() < 1e-12);
        }
        assert!(m.passes_gate());
    }
}

#[test]
fn zero_flow_is_gated_out() {
    let lm = frame_at(vec![Point::new(5.0, 5.0); 51]);
    let m = extract_features(&FlowField::<f64>::zeros(16, 16), &lm, PairId::new(0, 0), &MotionGateConfig::default()).unwrap();
    assert!(!m.passes_gate());
}

#[test]
fn gate_counts_at_half() {
    let cfg = MotionGateConfig::default();
    let with_moving = |n: usize| {
        let f: Vec<[f64; 2]> = (0..51).map(|i| if i < n { [0.6, 0.8] } else { [0.0, 0.0] }).collect();
        MotionFeatureSet::new(PairId::new(0, 0), f, &cfg).unwrap().passes_gate()
    };
    assert!(with_moving(26));
    assert!(!with_moving(25));
}

#[test]
fn landmark_outside_flow_errors() {
    let lm = frame_at(vec![Point::new(50.0, 5.0); 51]);
    assert!(extract_features(&FlowField::<f64>::zeros(16, 16), &lm, PairId::new(0, 0), &MotionGateConfig::default()).is_err());
}

fn random_flow(w: usize, h: usize, vals: &[f64]) -> FlowField<f64> {
    FlowField::from_fn(w, h, |x, y| {
        let i = (y * w + x) * 2;
        (vals[i % vals.len()], vals[(i + 1) % vals.len()])
    })
}

fn random_landmarks(w: usize, h: usize, coords: &[(f64, f64)]) -> LandmarkFrame {
    frame_at(coords.iter().map(|&(a, b)| Point::new(a * (w - 1) as f64, b * (h - 1) as f64)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn features_scale_linearly(
        vals in prop::collection::vec(-3.0f64..3.0, 64),
        coords in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 51),
        c in -4.0f64..4.0,
    ) {
        let flow = random_flow(24, 20, &vals);
        let lm = random_landmarks(24, 20, &coords);
        let cfg = MotionGateConfig::default();
        let a = extract_features(&flow, &lm, PairId::new(0, 0), &cfg).unwrap();
        let b = extract_features(&flow.scaled(c), &lm, PairId::new(0, 0), &cfg).unwrap();
        for (x, y) in a.features().iter().zip(b.features()) {
            prop_assert!((c * x[0] - y[0]).abs() <= 1e-12 * (1.0 + y[0].abs()));
            prop_assert!((c * x[1] - y[1]).abs() <= 1e-12 * (1.0 + y[1].abs()));
        }
        for (f, m) in b.features().iter().zip(b.magnitudes()) {
            prop_assert!((f[0].hypot(f[1]) - m).abs() <= 1e-12);
        }
    }

    #[test]
    fn flow_outside_windows_is_ignored(
        vals in prop::collection::vec(-3.0f64..3.0, 64),
        coords in prop::collection::vec((0.0f64..0.4, 0.0f64..1.0), 51),
    ) {
        // landmarks in the left part; rewrite the flow far to the right
        let flow = random_flow(40, 20, &vals);
        let lm = random_landmarks(40, 20, &coords);
        let edited = FlowField::from_fn(40, 20, |x, y| if x >= 24 { (9.0, -9.0) } else { flow.get(x, y) });
        let cfg = MotionGateConfig::default();
        let a = extract_features(&flow, &lm, PairId::new(0, 0), &cfg).unwrap();
        let b = extract_features(&edited, &lm, PairId::new(0, 0), &cfg).unwrap();
        prop_assert_eq!(a.features(), b.features());
    }

    #[test]
    fn raising_threshold_never_opens_gate(
        feats in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 51),
        t1 in 0.1f64..2.0,
        dt in 0.0f64..2.0,
    ) {
        let f: Vec<[f64; 2]> = feats.iter().map(|&(u, v)| [u, v]).collect();
        let low = MotionGateConfig { magnitude_threshold: t1, ..Default::default() };
        let high = MotionGateConfig { magnitude_threshold: t1 + dt, ..Default::default() };
        let a = MotionFeatureSet::new(PairId::new(0, 0), f.clone(), &low).unwrap().passes_gate();
        let b = MotionFeatureSet::new(PairId::new(0, 0), f, &high).unwrap().passes_gate();
        prop_assert!(a || !b);
    }

    #[test]
    fn track_csv_round_trip(coords in prop::collection::vec((0.0f64..500.0, 0.0f64..500.0), 51 * 3)) {
        let frames: Vec<LandmarkFrame> = coords
            .chunks(51)
            .enumerate()
            .map(|(t, c)| LandmarkFrame::new(t, c.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap())
            .collect();
        let track = LandmarkTrack::new("rt", frames).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.csv");
        write_track(&track, &path).unwrap();
        let back = read_track(&path, LandmarkScheme::Inner51).unwrap();
        prop_assert_eq!(&back.video_id, "rt");
        for (a, b) in track.frames().iter().zip(back.frames()) {
            prop_assert_eq!(a.frame_index, b.frame_index);
            for (p, q) in a.points.iter().zip(&b.points) {
                prop_assert!((p.x - q.x).abs() <= 1e-6 && (p.y - q.y).abs() <= 1e-6);
            }
        }
    }
}
