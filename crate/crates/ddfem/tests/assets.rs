use ddfem::drivers::stretch_assets;
use ddfem::mesh_io::{format_mesh, parse_mesh, read_mesh};
use ddfem_core::mesh::BoundaryTag;

#[test]
fn perforated_meshes_are_valid() {
    for path in stretch_assets() {
        let mesh = read_mesh(&path).unwrap();
        // unit square with eight holes
        assert_eq!(mesh.euler_characteristic(), 1 - 8, "{}", path.display());
        assert!((0..mesh.n_cells()).all(|c| mesh.cell_area(c) > 0.0));
        let area = mesh.total_area();
        assert!((area - mesh.boundary_polygon_area()).abs() < 1e-12);
        let holes = std::f64::consts::PI * (4.0 * 0.1f64.powi(2) + 4.0 * 0.05f64.powi(2));
        assert!((area - (1.0 - holes)).abs() < 0.01, "area {area}");

        for e in mesh.boundary_edges() {
            let [a, b] = mesh.edges()[e];
            let (xa, xb) = (mesh.vertices()[a], mesh.vertices()[b]);
            let clamped = |x: f64| x.abs() < 1e-12 || (x - 1.0).abs() < 1e-12;
            let expect = if clamped(xa[0]) && clamped(xb[0]) && xa[0] == xb[0] {
                BoundaryTag::Displacement
            } else {
                BoundaryTag::Traction
            };
            assert_eq!(mesh.tag(e), Some(expect));
        }
        let text = format_mesh(&mesh).unwrap();
        assert_eq!(format_mesh(&parse_mesh(&text).unwrap()).unwrap(), text);
    }
}

#[test]
fn fine_asset_is_finer() {
    let [coarse, fine] = <[_; 2]>::try_from(stretch_assets()).unwrap();
    let (c, f) = (read_mesh(coarse).unwrap(), read_mesh(fine).unwrap());
    assert!(f.n_cells() > 2 * c.n_cells());
    assert!(f.mesh_size() < c.mesh_size());
}
