use std::path::Path;

use gridlander::checkpoint::{self, Checkpoint, DqnSnapshot, ModelKind};
use gridlander::ppm::{self, ChannelMap};
use gridlander::records::{self, SampleRecord};
use gridlander::Error;
use gridlander_core::dqn::{evaluate, EpisodeTrace, EpisodeStats, QNetwork, RewardTrace, TrainConfig};
use gridlander_core::env::{Action, EnvConfig, LanderState, Terminal};
use gridlander_core::losses::{BBox, MetricsSummary};
use gridlander_core::vital::{init_weights, Modality, MultimodalImage, VitalConfig};
use gridlander_core::Rng;

fn snapshot(net: &QNetwork) -> DqnSnapshot {
    DqnSnapshot {
        env: EnvConfig::default(),
        train: TrainConfig::default(),
        input_scale: net.input_scale,
        seed: 3,
        episodes_run: 0,
    }
}

fn bits(t: &[f32]) -> Vec<u32> {
    t.iter().map(|v| v.to_bits()).collect()
}

#[test]
fn vital_checkpoint_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.ckpt");
    let mut w = init_weights(&VitalConfig::default(), 11).unwrap();
    // Signed zeros must survive.
    w.cls_token[0] = -0.0;
    w.cls_token[1] = 0.0;
    checkpoint::save_vital(&path, &w).unwrap();
    let back = checkpoint::load_vital(&path).unwrap();
    for (a, b) in w.to_named().iter().zip(back.to_named()) {
        assert_eq!(a.name, b.name);
        assert_eq!(a.shape, b.shape);
        assert_eq!(bits(&a.data), bits(&b.data), "{}", a.name);
    }
    assert_eq!(back.cls_token[0].to_bits(), (-0.0f32).to_bits());
}

#[test]
fn dqn_checkpoint_round_trip_and_behaviour() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.ckpt");
    let net = QNetwork::init([6.0, 6.0, 8.0], 5);
    checkpoint::save_dqn(&path, &net, &snapshot(&net)).unwrap();
    let (back, snap) = checkpoint::load_dqn(&path).unwrap();
    assert_eq!(back, net);
    assert_eq!(snap, snapshot(&net));
    let cfg = EnvConfig::default();
    assert_eq!(evaluate(&net, &cfg, 5, 1).unwrap(), evaluate(&back, &cfg, 5, 1).unwrap());
}

#[test]
fn saving_is_deterministic() {
    let net = QNetwork::init([6.0, 6.0, 8.0], 5);
    let a = Checkpoint::from_dqn(&net, &snapshot(&net)).unwrap().to_bytes().unwrap();
    let b = Checkpoint::from_dqn(&net.clone(), &snapshot(&net)).unwrap().to_bytes().unwrap();
    assert_eq!(a, b);
}

#[test]
fn every_single_byte_flip_in_payload_is_caught() {
    let net = QNetwork::init([6.0, 6.0, 8.0], 5);
    let bytes = Checkpoint::from_dqn(&net, &snapshot(&net)).unwrap().to_bytes().unwrap();
    let mut rng = Rng::new(0);
    for _ in 0..200 {
        let mut bad = bytes.clone();
        // Skip magic and version, which report their own errors.
        let i = 19 + rng.below((bad.len() - 19) as u64) as usize;
        bad[i] ^= 1 << rng.below(8);
        match Checkpoint::from_bytes(&bad) {
            Err(Error::Integrity(msg)) => assert!(msg.contains("checksum"), "{msg}"),
            other => panic!("byte {i}: expected integrity error, got {other:?}"),
        }
    }
}

#[test]
fn wrong_magic_version_and_kind() {
    let net = QNetwork::init([6.0, 6.0, 8.0], 5);
    let ck = Checkpoint::from_dqn(&net, &snapshot(&net)).unwrap();
    let bytes = ck.to_bytes().unwrap();

    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert!(matches!(Checkpoint::from_bytes(&magic), Err(Error::Integrity(_))));

    let mut version = bytes.clone();
    version[15] = 2;
    assert!(matches!(
        Checkpoint::from_bytes(&version),
        Err(Error::Version { found: 2, expected: 1 })
    ));

    assert!(matches!(ck.to_vital(), Err(Error::Schema(_))));
    let vital = Checkpoint::from_vital(&init_weights(&VitalConfig::default(), 0).unwrap()).unwrap();
    assert_eq!(vital.kind, ModelKind::Vital);
    assert!(matches!(vital.to_dqn(), Err(Error::Schema(_))));
}

#[test]
fn reshaped_tensor_is_a_schema_error() {
    let net = QNetwork::init([6.0, 6.0, 8.0], 5);
    let mut ck = Checkpoint::from_dqn(&net, &snapshot(&net)).unwrap();
    ck.tensors[0].shape = vec![3, 256];
    let back = Checkpoint::from_bytes(&ck.to_bytes().unwrap()).unwrap();
    assert!(matches!(back.to_dqn(), Err(Error::Schema(_))));
}

#[test]
fn missing_checkpoint_names_the_path() {
    let err = checkpoint::load_dqn(Path::new("/nonexistent/q.ckpt")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/q.ckpt"));
    assert_eq!(err.exit_code(), 2);
}

fn random_image(seed: u64) -> MultimodalImage {
    let mut rng = Rng::new(seed);
    MultimodalImage::from_fn(160, |_, _, _| rng.uniform() as f32).unwrap()
}

#[test]
fn ppm_round_trip_within_half_a_level() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.ppm");
    let img = random_image(1);
    ppm::write_ppm(&path, &img, ChannelMap::default()).unwrap();
    let back = ppm::read_ppm(&path, 160, ChannelMap::default()).unwrap();
    let worst = img
        .tensor()
        .data()
        .iter()
        .zip(back.tensor().data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f32, f32::max);
    assert!(worst <= 0.5 / 255.0 + 1e-7, "max error {worst}");
    let size = std::fs::metadata(&path).unwrap().len();
    assert_eq!(size, "P6\n160 160\n255\n".len() as u64 + 3 * 160 * 160);
}

#[test]
fn ppm_zero_image_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.ppm");
    let img = MultimodalImage::zeros(160);
    ppm::write_ppm(&path, &img, ChannelMap::default()).unwrap();
    assert_eq!(ppm::read_ppm(&path, 160, ChannelMap::default()).unwrap(), img);
}

fn fnv(data: &[u8]) -> u64 {
    data.iter()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ *b as u64).wrapping_mul(0x0100_0000_01b3))
}

#[test]
fn channel_map_routes_planes() {
    // Only the thermal plane carries signal; its checksum must show up in
    // whichever byte lane the map assigns to thermal.
    let mut rng = Rng::new(9);
    let img = MultimodalImage::from_fn(160, |m, _, _| match m {
        Modality::Thermal => rng.below(256) as f32 / 255.0,
        _ => 0.0,
    })
    .unwrap();
    let thermal: Vec<u8> = img.plane(Modality::Thermal).iter().map(|v| ppm::quantize(*v)).collect();
    let want = fnv(&thermal);
    for (map, lane) in [
        ([Modality::Visual, Modality::Thermal, Modality::Lidar], 1),
        ([Modality::Thermal, Modality::Lidar, Modality::Visual], 0),
        ([Modality::Lidar, Modality::Visual, Modality::Thermal], 2),
    ] {
        let map = ChannelMap::new(map).unwrap();
        let bytes = ppm::encode_ppm(&img, map);
        let raster = &bytes[bytes.len() - 3 * 160 * 160..];
        let lanes: Vec<u64> = (0..3)
            .map(|c| fnv(&raster.iter().skip(c).step_by(3).copied().collect::<Vec<_>>()))
            .collect();
        assert_eq!(lanes[lane], want);
        assert!(lanes.iter().enumerate().all(|(c, h)| c == lane || *h != want));
        let back = ppm::decode_ppm(&bytes, 160, map, Path::new("m.ppm")).unwrap();
        assert_eq!(back, img);
    }
}

#[test]
fn ppm_rejects_wrong_size() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.ppm");
    ppm::write_ppm(&path, &MultimodalImage::zeros(32), ChannelMap::default()).unwrap();
    let err = ppm::read_ppm(&path, 160, ChannelMap::default()).unwrap_err();
    assert!(matches!(err, Error::Format { .. }));
    assert!(err.to_string().contains("32x32"));
}

fn step(dz: f64, next_dz: f64, terminal: Terminal) -> EpisodeTrace {
    let s = gridlander_core::dqn::TraceStep {
        step: 0,
        state: LanderState::new(0.0, 0.0, dz),
        action: Action::Descend,
        reward: 400.0,
        next: LanderState::new(0.0, 0.0, next_dz),
        terminal,
    };
    EpisodeTrace {
        steps: vec![s],
        terminal,
        total_return: 400.0,
    }
}

#[test]
fn trace_csv_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    records::write_trace(&empty, &[]).unwrap();
    let text = std::fs::read_to_string(&empty).unwrap();
    assert_eq!(text, "episode,step,dx,dy,dz,action,reward,next_dx,next_dy,next_dz,terminal\n");

    let one = dir.path().join("one.csv");
    records::write_trace(&one, &[step(1.0, 0.0, Terminal::LandedSuccess)]).unwrap();
    let text = std::fs::read_to_string(&one).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1], "0,0,0,0,1,descend,400,0,0,0,landed_success");
}

#[test]
fn reward_csv_has_moving_average() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let trace = RewardTrace {
        episodes: (0..3)
            .map(|i| EpisodeStats {
                episode: i,
                total_return: i as f64 * 2.0,
                epsilon: 1.0 - i as f64 * 0.5,
                steps: 1,
                terminal: Terminal::LandedOutside,
                mean_loss: None,
            })
            .collect(),
    };
    records::write_rewards(&path, &trace, 2).unwrap();
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "episode,return,moving_avg,epsilon\n0,0,0,1\n1,2,1,0.5\n2,4,3,0\n"
    );
}

#[test]
fn metrics_report_schema() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let m = MetricsSummary {
        tpr: 0.75,
        recall: 0.75,
        f1: 0.6,
        ap50: 0.5,
        ap50_95: 0.25,
    };
    records::write_metrics(&path, &m).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    let mut want = vec!["ap50", "ap50_95", "f1", "recall", "tpr"];
    want.sort();
    let mut got: Vec<&str> = keys.iter().map(|k| k.as_str()).collect();
    got.sort();
    assert_eq!(got, want);
    assert_eq!(v["ap50"], 0.5);
    let table = std::fs::read_to_string(path.with_extension("txt")).unwrap();
    assert!(table.contains("AP50:95"));
}

#[test]
fn labels_round_trip_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("labels.csv");
    let recs = vec![
        SampleRecord {
            image: "a.ppm".into(),
            bbox: Some(BBox::new(0.25, 0.125, 0.75, 0.5).unwrap()),
        },
        SampleRecord {
            image: "b.ppm".into(),
            bbox: None,
        },
    ];
    records::write_labels(&path, &recs).unwrap();
    assert_eq!(records::read_labels(&path).unwrap(), recs);

    for (body, what) in [
        ("a.ppm,0.1,0.1,0.2,0.2,2\n", "objectness"),
        ("a.ppm,0.1,0.1,1.2,0.2,1\n", "outside"),
        ("a.ppm,0.5,0.1,0.2,0.2,1\n", "line 2"),
        ("a.ppm,,,,,0\na.ppm,,,,,0\n", "duplicate"),
    ] {
        std::fs::write(&path, format!("image,x_min,y_min,x_max,y_max,objectness\n{body}")).unwrap();
        let err = records::read_labels(&path).unwrap_err().to_string();
        assert!(err.contains(what), "{err}");
    }
    std::fs::write(&path, "img,a,b\n").unwrap();
    assert!(records::read_labels(&path).is_err());
}
