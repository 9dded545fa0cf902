//! Compares exact backprop against central finite differences.

use n2n_sdf::field::{Architecture, NeuralSdf};
use n2n_sdf::geometry::ShapeId;
use n2n_sdf::sampling::uniform_in_cube;
use n2n_sdf::{BoundingCube, Result, ScalarField};

fn main() -> Result<()> {
    let mut field = NeuralSdf::new(&Architecture::default(), 11);
    let qs = uniform_in_cube(64, BoundingCube::unit(), 5);
    let targets = ShapeId::Sphere.sdf().eval_many(&qs);
    let (_, grad) = field.loss_and_gradient(&qs, &targets)?;
    let h = 1e-5;
    let n = field.param_count();
    let mut worst: f64 = 0.0;
    for i in (0..n).step_by(n / 20) {
        let p = field.param(i);
        field.set_param(i, p + h);
        let up = field.loss(&qs, &targets);
        field.set_param(i, p - h);
        let down = field.loss(&qs, &targets);
        field.set_param(i, p);
        let numeric = (up - down) / (2.0 * h);
        let exact = grad.get(i);
        let rel = (numeric - exact).abs() / numeric.abs().max(exact.abs()).max(1e-12);
        worst = worst.max(rel);
        println!("param {i:>6}: backprop {exact:+.6e}  finite diff {numeric:+.6e}");
    }
    println!("{n} parameters, worst relative error {worst:.2e}");
    Ok(())
}
