use patchsmith_web::Demo;

#[test]
fn models_are_listed_and_load() {
    let names = Demo::models();
    assert!(names.contains(&"cube".to_owned()));
    assert!(Demo::new("nope", 1).is_err());
    let d = Demo::new("tetrahedron", 1).unwrap();
    assert_eq!(d.euler_characteristic(), 2);
    assert_eq!(d.positions().len(), d.normals().len());
    assert_eq!(d.indices().len() % 3, 0);
    let n = (d.positions().len() / 3) as u32;
    assert!(d.indices().iter().all(|&i| i < n));
}

#[test]
fn handle_opens_and_closes() {
    let mut d = Demo::new("cube", 2).unwrap();
    let before = d.positions();
    d.toggle_handle().unwrap();
    assert!(d.handle_open());
    assert_eq!(d.euler_characteristic(), 0);
    let stats: serde_json::Value = serde_json::from_str(&d.stats_json()).unwrap();
    assert_eq!(stats["genus"], 1);
    d.toggle_handle().unwrap();
    assert!(!d.handle_open());
    assert_eq!(d.euler_characteristic(), 2);
    assert_eq!(d.positions().len(), before.len());
}

#[test]
fn mode_switch_changes_extraordinary_patches_only() {
    let mut d = Demo::new("cube", 2).unwrap();
    let modified = d.positions();
    d.set_modified(false).unwrap();
    assert!(!d.modified());
    let standard = d.positions();
    assert_eq!(modified.len(), standard.len());
    assert_ne!(modified, standard);
    d.set_modified(true).unwrap();
    assert_eq!(d.positions(), modified);
}

#[test]
fn face_scale_is_absolute() {
    let mut d = Demo::new("cube", 1).unwrap();
    let plain = d.positions();
    d.set_face_scale(2.0).unwrap();
    assert_eq!(d.face_scale(), 2.0);
    assert_ne!(d.positions(), plain);
    d.set_face_scale(1.0).unwrap();
    let back = d.positions();
    let gap = plain.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
    assert!(gap < 1e-5);
    assert!(d.set_face_scale(0.0).is_err());
}
