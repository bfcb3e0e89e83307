use wbf_core::geometry::{build_geometry, relevance_mask, susceptibility_mask, Owner};
use wbf_core::{CropKind, Measurement};

#[test]
fn waterberry_layout() {
    let g = build_geometry("waterberry").unwrap();
    assert_eq!((g.width(), g.height()), (6000, 5000));

    let cells = g.cells().as_slice();
    let w = g.width();
    let mut neighbors = [false; 4];
    for (i, c) in cells.iter().enumerate() {
        let (x, y) = (i % w, i / w);
        let in_farm = (1000..5000).contains(&x) && (1000..4000).contains(&y);
        match c.owner {
            Owner::Client => assert!(in_farm, "client cell at ({x}, {y})"),
            Owner::Neighbor(id) => {
                assert!(!in_farm, "neighbor cell at ({x}, {y})");
                neighbors[usize::from(id) - 1] = true;
            }
            Owner::Public => {}
        }
        if matches!(c.kind, CropKind::Pond | CropKind::Wetland) {
            assert!(!matches!(c.owner, Owner::Neighbor(_)), "water at ({x}, {y})");
        }
    }
    assert_eq!(neighbors, [true; 4]);
    assert!(cells.iter().any(|c| c.kind == CropKind::Pond));
    assert!(cells.iter().any(|c| c.kind == CropKind::Wetland));

    let humidity = relevance_mask(&g, Measurement::Humidity);
    let tylcv_rel = relevance_mask(&g, Measurement::Tylcv);
    let tylcv_sus = susceptibility_mask(&g, Measurement::Tylcv).unwrap();
    let ccr_rel = relevance_mask(&g, Measurement::Ccr);
    let mut neighbor_tomato = false;
    for (i, c) in cells.iter().enumerate() {
        let water = matches!(c.kind, CropKind::Pond | CropKind::Wetland);
        if water {
            assert!(!humidity.values.as_slice()[i]);
            assert!(!tylcv_sus.values.as_slice()[i]);
        }
        assert!(!tylcv_rel.values.as_slice()[i] || tylcv_sus.values.as_slice()[i]);
        assert!(!(tylcv_rel.values.as_slice()[i] && ccr_rel.values.as_slice()[i]));
        if matches!(c.owner, Owner::Neighbor(_)) {
            assert!(!ccr_rel.values.as_slice()[i]);
            neighbor_tomato |= tylcv_sus.values.as_slice()[i];
        }
    }
    assert!(neighbor_tomato);
}

#[test]
fn miniberry_layouts() {
    for n in [10, 30, 100] {
        let g = build_geometry(&format!("miniberry-{n}")).unwrap();
        assert_eq!((g.width(), g.height()), (n, n));
        let cells = g.cells().as_slice();
        assert!(cells.iter().all(|c| c.owner == Owner::Client));
        let crops = cells
            .iter()
            .filter(|c| matches!(c.kind, CropKind::Tomato | CropKind::Strawberry))
            .count();
        assert_eq!(crops, n * n);
        for m in Measurement::DISEASES {
            assert_eq!(relevance_mask(&g, m).values, susceptibility_mask(&g, m).unwrap().values);
        }
        assert_eq!(relevance_mask(&g, Measurement::Tylcv).count(), n * n / 2);
    }
}

#[test]
fn unknown_and_humidity_requests_fail() {
    assert!(build_geometry("blueberry").is_err());
    let g = build_geometry("miniberry-10").unwrap();
    assert!(susceptibility_mask(&g, Measurement::Humidity).is_err());
}
