use super::diffusion::exact_solution;
use super::mesh::StructuredTetMesh;
use super::quadrature::{map_point, TetRule};

/// `‖u_h - c‖_L2` over the cube, where `u_h` is the CG1 field with interior
/// nodal values `u` and zero boundary values. Integrated element by element
/// with a degree-5 rule.
pub fn l2_error(u: &[f64], mesh: &StructuredTetMesh) -> f64 {
    assert_eq!(u.len(), mesh.interior_count(), "one value per interior vertex");
    let rule = TetRule::degree5();
    let vol = 1.0 / mesh.element_count() as f64;
    let mut total = 0.0;
    for tet in mesh.elements() {
        let p = mesh.element_coords(&tet);
        let nodal = tet.map(|v| mesh.interior_index(v).map_or(0.0, |i| u[i]));
        let mut elem = 0.0;
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let uh = nodal[0] * l[0] + nodal[1] * l[1] + nodal[2] * l[2] + nodal[3] * l[3];
            let d = uh - exact_solution(map_point(&p, l));
            elem += w * d * d;
        }
        total += elem * vol;
    }
    total.sqrt()
}
