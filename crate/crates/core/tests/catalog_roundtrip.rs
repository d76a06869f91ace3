use ars2lab::catalog::{self, validate, BuiltinParams, SurfaceSpec, BUILTIN_NAMES};
use ars2lab::topology::topology_report;

#[test]
fn builtins_survive_json_roundtrip() {
    for name in BUILTIN_NAMES {
        let s = catalog::builtin(name, BuiltinParams::default()).unwrap();
        let text = serde_json::to_string(&SurfaceSpec::from_surface(&s)).unwrap();
        let back = SurfaceSpec::from_json(&text).unwrap().build().unwrap();
        assert_eq!(back.name, s.name);
        assert_eq!(back.charts.len(), s.charts.len());
        assert_eq!(back.e_e, s.e_e);
        assert_eq!(back.is_closed(), s.is_closed());
        assert!(validate(&back).unwrap().passed(), "{name}");
        if s.is_closed() {
            let (a, b) = (topology_report(&s).unwrap(), topology_report(&back).unwrap());
            assert_eq!((a.chi_plus, a.chi_minus, a.tau_total), (b.chi_plus, b.chi_minus, b.tau_total));
        }
    }
}

#[test]
fn inline_torus_amplitude() {
    let a = catalog::builtin("torus-tangency(0.3)", BuiltinParams::default()).unwrap();
    let b = catalog::torus_tangency(0.3).unwrap();
    let text = |s| serde_json::to_string(&SurfaceSpec::from_surface(s)).unwrap();
    assert_eq!(text(&a), text(&b));
    assert!(catalog::builtin("torus-tangency(1.5)", BuiltinParams::default()).is_err());
    assert!(catalog::builtin("klein-bottle", BuiltinParams::default()).is_err());
}

#[test]
fn load_from_file() {
    let dir = std::env::temp_dir().join(format!("ars2lab-load-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("grushin.json");
    let s = catalog::grushin_plane(-1).unwrap();
    std::fs::write(&path, serde_json::to_string_pretty(&SurfaceSpec::from_surface(&s)).unwrap()).unwrap();
    let back = catalog::load(&path).unwrap();
    assert_eq!(back.charts[0].frame.orientation_sign(), -1);
    std::fs::remove_dir_all(&dir).unwrap();
}
